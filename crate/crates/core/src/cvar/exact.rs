use serde::Serialize;

use super::{check_alpha, cvar_empirical, Side, ValueSamples};
use crate::error::{Error, Result};

/// Distribution on a finite, sorted, distinct support.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDistribution {
    support: Vec<f64>,
    probs: Vec<f64>,
}

const MASS_TOLERANCE: f64 = 1e-12;

impl FiniteDistribution {
    /// Sorts the atoms and merges equal values. Masses must be nonnegative and sum to 1.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::invalid("distribution", "no atoms"));
        }
        let mut atoms = atoms;
        if atoms
            .iter()
            .any(|&(x, p)| !x.is_finite() || !p.is_finite() || p < 0.0)
        {
            return Err(Error::invalid(
                "distribution",
                "values must be finite and masses nonnegative",
            ));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut support: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut probs: Vec<f64> = Vec::with_capacity(atoms.len());
        for (x, p) in atoms {
            if support.last() == Some(&x) {
                *probs.last_mut().expect("nonempty") += p;
            } else {
                support.push(x);
                probs.push(p);
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::invalid(
                "distribution",
                format!("masses sum to {total}"),
            ));
        }
        Ok(Self { support, probs })
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn mean(&self) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(x, p)| x * p)
            .sum()
    }

    fn negated(&self) -> Self {
        Self {
            support: self.support.iter().rev().map(|x| -x).collect(),
            probs: self.probs.iter().rev().copied().collect(),
        }
    }
}

/// Lower CVaR: mean of the bottom `alpha` probability mass, splitting the
/// boundary atom fractionally.
pub fn cvar_exact(dist: &FiniteDistribution, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let mut remaining = alpha;
    let mut acc = 0.0;
    for (&x, &p) in dist.support.iter().zip(&dist.probs) {
        let take = p.min(remaining);
        acc += take * x;
        remaining -= take;
        if remaining <= 0.0 {
            return Ok(acc / alpha);
        }
    }
    // Rounding left some mass unassigned; it belongs to the largest value.
    acc += remaining * dist.support[dist.support.len() - 1];
    Ok(acc / alpha)
}

pub fn cvar_upper_exact(dist: &FiniteDistribution, alpha: f64) -> Result<f64> {
    Ok(-cvar_exact(&dist.negated(), alpha)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixtureBounds {
    pub alpha: f64,
    pub lower: f64,
    pub upper: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
}

const BOUND_TOLERANCE: f64 = 1e-12;

fn check_c(c: f64) -> Result<f64> {
    if c >= 1.0 && c.is_finite() {
        Ok(1.0 / c)
    } else {
        Err(Error::invalid(
            "C",
            format!("must be finite and at least 1, got {c}"),
        ))
    }
}

fn bounds(alpha: f64, lower: f64, upper: f64, target: f64) -> MixtureBounds {
    let slack = BOUND_TOLERANCE * target.abs().max(1.0);
    MixtureBounds {
        alpha,
        lower,
        upper,
        lower_holds: lower <= target + slack,
        upper_holds: target <= upper + slack,
    }
}

/// Lower and upper CVaR of the noisy distribution at `α = 1/C`, and whether they
/// bracket the noise-free mean `target`.
pub fn mixture_bounds(noisy: &FiniteDistribution, c: f64, target: f64) -> Result<MixtureBounds> {
    let alpha = check_c(c)?;
    Ok(bounds(
        alpha,
        cvar_exact(noisy, alpha)?,
        cvar_upper_exact(noisy, alpha)?,
        target,
    ))
}

/// Sample version of [`mixture_bounds`] using the order-statistic estimator.
pub fn mixture_bounds_samples(noisy: &ValueSamples, c: f64, target: f64) -> Result<MixtureBounds> {
    let alpha = check_c(c)?;
    Ok(bounds(
        alpha,
        cvar_empirical(noisy, alpha, Side::Lower)?.estimate,
        cvar_empirical(noisy, alpha, Side::Upper)?.estimate,
        target,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(atoms: &[(f64, f64)]) -> FiniteDistribution {
        FiniteDistribution::new(atoms.to_vec()).unwrap()
    }

    #[test]
    fn textbook_values() {
        let fair = d(&[(0.0, 0.5), (1.0, 0.5)]);
        assert_eq!(cvar_exact(&fair, 0.5).unwrap(), 0.0);
        assert_eq!(cvar_upper_exact(&fair, 0.5).unwrap(), 1.0);
        let three = d(&[(1.0, 0.3), (2.0, 0.3), (3.0, 0.4)]);
        assert!((cvar_exact(&three, 0.5).unwrap() - 1.4).abs() < 1e-12);
        assert!((cvar_upper_exact(&three, 0.5).unwrap() - 2.8).abs() < 1e-12);
        assert!((cvar_exact(&three, 1.0).unwrap() - three.mean()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let fair = d(&[(0.0, 0.5), (1.0, 0.5)]);
        assert!(cvar_exact(&fair, 0.0).is_err());
        assert!(cvar_exact(&fair, 1.5).is_err());
        assert!(FiniteDistribution::new(vec![(0.0, 0.5)]).is_err());
        assert!(mixture_bounds(&fair, 0.5, 0.5).is_err());
    }

    #[test]
    fn merges_duplicate_support() {
        let m = d(&[(2.0, 0.25), (1.0, 0.5), (2.0, 0.25)]);
        assert_eq!(m.support(), &[1.0, 2.0]);
        assert_eq!(m.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn ground_state_case_is_tight() {
        // Noise-free mass all on the minimum; any p̃ ≥ p/C keeps ≥ 1/C there.
        let noisy = d(&[(-3.0, 0.25), (0.0, 0.5), (5.0, 0.25)]);
        let b = mixture_bounds(&noisy, 4.0, -3.0).unwrap();
        assert_eq!(b.lower, -3.0);
        assert!(b.lower_holds && b.upper_holds);
    }
}
