use serde::Serialize;

use super::{cvar_empirical, CvarReport, Side, ValueSamples};
use crate::circuit::{Gate1q, LayeredCircuit};
use crate::error::{Error, Result};
use crate::pauli::{BasisRotation, DiagonalizedGroup};
use crate::problems::FeasibilityFilter;
use crate::sim::{bitstring, SampleSet, Simulator};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilteredCvar {
    /// CVaR on the requested side with infeasible samples replaced by the matching penalty.
    pub report: CvarReport,
    /// Lower CVaR with infeasible samples set to `M_u`.
    pub lower: f64,
    /// Upper CVaR with infeasible samples set to `M_l`.
    pub upper: f64,
    /// Mean over feasible samples only; absent when none are feasible.
    pub post_selected_mean: Option<f64>,
    pub feasible_fraction: f64,
    /// Whether `lower ≤ post_selected_mean ≤ upper`. Guaranteed when
    /// `alpha ≤ feasible_fraction`; may fail above it.
    pub sandwich_holds: Option<bool>,
}

/// CVaR of `h_F^M`: `h` on feasible bitstrings, the penalty `M` elsewhere.
/// Feasible samples outside `[M_l, M_u]` are rejected.
pub fn cvar_filtered(
    samples: &SampleSet,
    h: impl Fn(u128) -> f64,
    filter: &FeasibilityFilter,
    alpha: f64,
    side: Side,
) -> Result<FilteredCvar> {
    let mut feasible = Vec::new();
    let mut infeasible = 0u64;
    for (&x, &c) in &samples.counts {
        if filter.accepts(x) {
            let v = h(x);
            if v < filter.m_lower || v > filter.m_upper {
                return Err(Error::FilterViolation {
                    bitstring: bitstring(x, samples.n),
                    value: v,
                    lower: filter.m_lower,
                    upper: filter.m_upper,
                });
            }
            feasible.push((v, c));
        } else {
            infeasible += c;
        }
    }
    let with_penalty = |m: f64| {
        ValueSamples::from_weighted(
            feasible
                .iter()
                .copied()
                .chain(std::iter::once((m, infeasible))),
        )
    };
    let lower = cvar_empirical(&with_penalty(filter.m_upper)?, alpha, Side::Lower)?;
    let upper = cvar_empirical(&with_penalty(filter.m_lower)?, alpha, Side::Upper)?;
    let post_selected_mean = ValueSamples::from_weighted(feasible.iter().copied())
        .ok()
        .map(|s| s.mean());
    let slack = 1e-12;
    let sandwich_holds = post_selected_mean.map(|m| {
        lower.estimate <= m + slack * m.abs().max(1.0)
            && m <= upper.estimate + slack * m.abs().max(1.0)
    });
    let mut report = match side {
        Side::Lower => lower.clone(),
        Side::Upper => upper.clone(),
    };
    report.filter = Some(filter.describe());
    Ok(FilteredCvar {
        report,
        lower: lower.estimate,
        upper: upper.estimate,
        post_selected_mean,
        feasible_fraction: (samples.shots - infeasible) as f64 / samples.shots as f64,
        sandwich_holds,
    })
}

/// Bound on `⟨H⟩ = Σ_j ⟨H_j⟩` from per-group samples: the sum of per-group CVaRs.
pub fn cvar_nondiagonal(
    groups: &[DiagonalizedGroup],
    per_group: &[ValueSamples],
    alpha: f64,
    side: Side,
) -> Result<f64> {
    if groups.is_empty() {
        return Err(Error::invalid("groups", "at least one group required"));
    }
    if groups.len() != per_group.len() {
        return Err(Error::SizeMismatch {
            expected: groups.len(),
            found: per_group.len(),
        });
    }
    per_group
        .iter()
        .map(|s| Ok(cvar_empirical(s, alpha, side)?.estimate))
        .sum()
}

/// Runs `state` followed by the group's basis rotation and evaluates the
/// group observable on every noisy shot.
pub fn sample_group_values(
    sim: &Simulator,
    state: &LayeredCircuit,
    group: &DiagonalizedGroup,
    shots: u64,
    seed: u64,
) -> Result<ValueSamples> {
    if group.n != state.n() {
        return Err(Error::SizeMismatch {
            expected: state.n(),
            found: group.n,
        });
    }
    let mut circuit = state.clone();
    let sdg: Vec<_> = group
        .rotation
        .iter()
        .enumerate()
        .filter(|(_, r)| **r == BasisRotation::HSdg)
        .map(|(q, _)| (q, Gate1q::Sdg))
        .collect();
    let h: Vec<_> = group
        .rotation
        .iter()
        .enumerate()
        .filter(|(_, r)| **r != BasisRotation::I)
        .map(|(q, _)| (q, Gate1q::H))
        .collect();
    if !sdg.is_empty() {
        circuit.push_single(sdg)?;
    }
    if !h.is_empty() {
        circuit.push_single(h)?;
    }
    let samples = sim.sample_noisy(&circuit, shots, seed)?;
    ValueSamples::from_sample_set(&samples, |x| group.value(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::FilterPredicate;
    use crate::sim::Provenance;
    use std::collections::BTreeMap;

    fn samples(pairs: &[(u128, u64)]) -> SampleSet {
        SampleSet::from_counts(
            3,
            pairs.iter().copied().collect::<BTreeMap<_, _>>(),
            None,
            Provenance::External,
        )
    }

    #[test]
    fn always_true_matches_plain_cvar() {
        let s = samples(&[(0, 3), (1, 2), (3, 4), (7, 1)]);
        let h = |x: u128| x.count_ones() as f64;
        let f = FeasibilityFilter::new(FilterPredicate::AlwaysTrue, 0.0, 3.0).unwrap();
        let got = cvar_filtered(&s, h, &f, 0.3, Side::Lower).unwrap();
        let plain = cvar_empirical(
            &ValueSamples::from_sample_set(&s, h).unwrap(),
            0.3,
            Side::Lower,
        )
        .unwrap();
        assert_eq!(got.report.estimate, plain.estimate);
        assert_eq!(got.sandwich_holds, Some(true));
    }

    #[test]
    fn all_infeasible_returns_penalty() {
        let s = samples(&[(0, 5), (7, 5)]);
        let f = FeasibilityFilter::new(FilterPredicate::HammingWeight(1), -2.0, 4.0).unwrap();
        let got = cvar_filtered(&s, |_| 0.0, &f, 0.5, Side::Lower).unwrap();
        assert_eq!(got.report.estimate, 4.0);
        assert_eq!(got.post_selected_mean, None);
    }

    #[test]
    fn out_of_range_feasible_value_is_rejected() {
        let s = samples(&[(1, 5)]);
        let f = FeasibilityFilter::new(FilterPredicate::AlwaysTrue, 0.0, 1.0).unwrap();
        assert!(matches!(
            cvar_filtered(&s, |_| 2.0, &f, 0.5, Side::Lower),
            Err(Error::FilterViolation { .. })
        ));
    }
}
