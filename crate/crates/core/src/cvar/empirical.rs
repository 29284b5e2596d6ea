use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{check_alpha, kept_count, CvarReport, FiniteDistribution, Side};
use crate::error::{Error, Result};
use crate::sim::SampleSet;

/// Multiset of real values stored as sorted distinct atoms with counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSamples {
    atoms: Vec<(f64, u64)>,
    total: u64,
}

impl ValueSamples {
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Result<Self> {
        Self::from_weighted(values.into_iter().map(|v| (v, 1)))
    }

    pub fn from_weighted(pairs: impl IntoIterator<Item = (f64, u64)>) -> Result<Self> {
        let mut atoms: Vec<(f64, u64)> = pairs.into_iter().filter(|&(_, c)| c > 0).collect();
        if atoms.iter().any(|(v, _)| !v.is_finite()) {
            return Err(Error::invalid("values", "samples must be finite"));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, u64)> = Vec::with_capacity(atoms.len());
        for (v, c) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += c,
                _ => merged.push((v, c)),
            }
        }
        let total = merged.iter().map(|a| a.1).sum();
        if total == 0 {
            return Err(Error::invalid("values", "at least one sample required"));
        }
        Ok(Self {
            atoms: merged,
            total,
        })
    }

    /// Applies `h` to every sampled bitstring.
    pub fn from_sample_set(samples: &SampleSet, h: impl Fn(u128) -> f64) -> Result<Self> {
        Self::from_weighted(samples.counts.iter().map(|(&x, &c)| (h(x), c)))
    }

    pub fn atoms(&self) -> &[(f64, u64)] {
        &self.atoms
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn min(&self) -> f64 {
        self.atoms[0].0
    }

    pub fn max(&self) -> f64 {
        self.atoms[self.atoms.len() - 1].0
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|&(v, c)| v * c as f64).sum::<f64>() / self.total as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.atoms
            .iter()
            .map(|&(v, c)| (v - m).powi(2) * c as f64)
            .sum::<f64>()
            / self.total as f64
    }

    /// Empirical distribution of the samples.
    pub fn to_distribution(&self) -> Result<FiniteDistribution> {
        let n = self.total as f64;
        FiniteDistribution::new(self.atoms.iter().map(|&(v, c)| (v, c as f64 / n)).collect())
    }

    pub(crate) fn negated(&self) -> Self {
        Self {
            atoms: self.atoms.iter().rev().map(|&(v, c)| (-v, c)).collect(),
            total: self.total,
        }
    }

    /// Mean of the `k` smallest samples.
    pub(crate) fn bottom_mean(&self, k: u64) -> f64 {
        bottom_mean(self.atoms.iter().copied(), k)
    }
}

pub(crate) fn bottom_mean(atoms: impl Iterator<Item = (f64, u64)>, k: u64) -> f64 {
    let mut left = k;
    let mut acc = 0.0;
    for (v, c) in atoms {
        let take = c.min(left);
        acc += v * take as f64;
        left -= take;
        if left == 0 {
            break;
        }
    }
    acc / k as f64
}

/// Order-statistic estimator: mean of the bottom (or top) `⌊α n⌋` samples.
pub fn cvar_empirical(samples: &ValueSamples, alpha: f64, side: Side) -> Result<CvarReport> {
    check_alpha(alpha)?;
    let kept = kept_count(alpha, samples.total);
    if kept == 0 {
        return Err(Error::TooFewSamples {
            alpha,
            shots: samples.total,
            required: (1.0 / alpha).ceil() as u64,
        });
    }
    let estimate = match side {
        Side::Lower => samples.bottom_mean(kept),
        Side::Upper => bottom_mean(samples.atoms.iter().rev().copied(), kept),
    };
    Ok(CvarReport {
        alpha,
        side,
        estimate,
        kept,
        shots: samples.total,
        bootstrap_variance: None,
        filter: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Saturation {
    /// Target lies beyond the most extreme sample; `α′` pinned at `1/n`.
    BeyondExtreme,
    /// Target lies beyond the sample mean on the other side; `α′` pinned at 1.
    BeyondMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub alpha: f64,
    pub side: Side,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_prime_cx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saturation: Option<Saturation>,
}

/// Per-CNOT strength implied by a calibrated level: `α′^(−2/#CNOT)`.
pub fn gamma_prime_per_cnot(alpha: f64, cnots: u64) -> Result<f64> {
    check_alpha(alpha)?;
    if cnots == 0 {
        return Err(Error::invalid("cnots", "must be at least 1"));
    }
    Ok(alpha.powf(-2.0 / cnots as f64))
}

/// Largest `α` whose CVaR on `side` reaches `target`, with the boundary atom
/// split fractionally so `α` varies continuously.
pub fn calibrate_alpha(
    samples: &ValueSamples,
    target: f64,
    side: Side,
    cnots: Option<u64>,
) -> Result<Calibration> {
    if !target.is_finite() {
        return Err(Error::invalid("target", "must be finite"));
    }
    let (oriented, t) = match side {
        Side::Lower => (samples.clone(), target),
        Side::Upper => (samples.negated(), -target),
    };
    let n = oriented.total as f64;
    let mean = oriented.mean();
    let slack = 1e-12 * t.abs().max(1.0);
    let (alpha, saturation) = if t < oriented.min() - slack {
        (1.0 / n, Some(Saturation::BeyondExtreme))
    } else if t > mean + slack {
        (1.0, Some(Saturation::BeyondMean))
    } else if t >= mean - slack {
        (1.0, None)
    } else {
        (solve_lower(&oriented, t) / n, None)
    };
    let gamma_prime_cx = cnots.map(|c| gamma_prime_per_cnot(alpha, c)).transpose()?;
    Ok(Calibration {
        alpha,
        side,
        gamma_prime_cx,
        saturation,
    })
}

/// Solves `(S_k + (a − k) x_{k+1}) / a = t` for the fractional count `a`,
/// given `min ≤ t < mean`.
fn solve_lower(s: &ValueSamples, t: f64) -> f64 {
    let mut k0 = 0.0;
    let mut sum = 0.0;
    for &(v, c) in &s.atoms {
        let c = c as f64;
        let end = k0 + c;
        let f_end = (sum + c * v) / end;
        if f_end >= t {
            if k0 == 0.0 {
                return end;
            }
            let a = (sum - k0 * v) / (t - v);
            return a.clamp(k0, end);
        }
        k0 = end;
        sum += c * v;
    }
    k0
}

/// CDF as CSV rows `value,cumulative_probability`, one per distinct value.
pub fn cdf_csv(samples: &ValueSamples) -> String {
    let mut out = String::from("value,cumulative_probability\n");
    let mut acc = 0u64;
    for &(v, c) in &samples.atoms {
        acc += c;
        let _ = writeln!(out, "{},{}", v, acc as f64 / samples.total as f64);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvar::{cvar_exact, cvar_upper_exact};

    fn vs(values: &[f64]) -> ValueSamples {
        ValueSamples::from_values(values.iter().copied()).unwrap()
    }

    #[test]
    fn order_statistics() {
        let s = vs(&[4.0, 1.0, 3.0, 2.0]);
        assert_eq!(cvar_empirical(&s, 0.5, Side::Lower).unwrap().estimate, 1.5);
        assert_eq!(cvar_empirical(&s, 0.5, Side::Upper).unwrap().estimate, 3.5);
        assert_eq!(cvar_empirical(&s, 1.0, Side::Lower).unwrap().estimate, 2.5);
    }

    #[test]
    fn too_few_samples_names_requirement() {
        let s = vs(&[1.0, 2.0, 3.0]);
        match cvar_empirical(&s, 0.1, Side::Lower) {
            Err(Error::TooFewSamples { required, .. }) => assert_eq!(required, 10),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn calibration_hits_target() {
        let s = vs(&[0.0, 1.0, 1.0, 2.0, 3.0, 5.0, 8.0, 13.0]);
        let d = s.to_distribution().unwrap();
        for t in [0.4, 1.0, 2.2, 3.9] {
            let c = calibrate_alpha(&s, t, Side::Lower, None).unwrap();
            assert!(c.saturation.is_none());
            assert!((cvar_exact(&d, c.alpha).unwrap() - t).abs() < 1e-12);
        }
        for t in [12.0, 7.1, 5.0] {
            let c = calibrate_alpha(&s, t, Side::Upper, None).unwrap();
            assert!((cvar_upper_exact(&d, c.alpha).unwrap() - t).abs() < 1e-12);
        }
        let at_mean = calibrate_alpha(&s, s.mean(), Side::Upper, None).unwrap();
        assert_eq!(at_mean.alpha, 1.0);
        let sat = calibrate_alpha(&s, 20.0, Side::Upper, None).unwrap();
        assert_eq!(sat.saturation, Some(Saturation::BeyondExtreme));
        assert_eq!(sat.alpha, 1.0 / 8.0);
    }

    #[test]
    fn gamma_prime_from_alpha() {
        let g = gamma_prime_per_cnot(5.180e-3, 461).unwrap();
        assert!((g - 1.0231).abs() < 1e-3);
    }

    #[test]
    fn cdf_ends_at_one() {
        let csv = cdf_csv(&vs(&[2.0, 1.0, 2.0]));
        assert_eq!(
            csv,
            "value,cumulative_probability\n1,0.3333333333333333\n2,1\n"
        );
    }
}
