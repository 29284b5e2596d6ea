use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::empirical::bottom_mean;
use super::{check_alpha, kept_count, Side, ValueSamples};
use crate::error::{Error, Result};
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapResult {
    pub side: Side,
    pub alphas: Vec<f64>,
    /// Mean of the CVaR estimates across resamples, per alpha.
    pub means: Vec<f64>,
    /// Unbiased variance of the CVaR estimates across resamples, per alpha.
    pub variances: Vec<f64>,
    /// Least-squares slope of `ln Var` against `ln α`; absent when a variance is zero.
    pub slope: Option<f64>,
    pub resamples: usize,
    pub size: u64,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len()
        || xs.len() < 2
        || xs.iter().chain(ys).any(|&v| v <= 0.0 || !v.is_finite())
    {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Resamples `samples` with replacement `resamples` times at size `size`
/// (default: the original count) and reports the spread of the CVaR estimator.
/// Resample `b` draws from RNG stream `b`, so results ignore thread count.
///
/// When the α-quantile sits inside an atom holding much more than α of the
/// mass, the estimator barely moves across resamples and the variance stops
/// tracking α; discrete objectives with few levels flatten the slope this way.
pub fn bootstrap_variance(
    samples: &ValueSamples,
    alphas: &[f64],
    side: Side,
    resamples: usize,
    size: Option<u64>,
    seed: u64,
) -> Result<BootstrapResult> {
    if resamples < 2 {
        return Err(Error::invalid("resamples", "need at least 2"));
    }
    if alphas.is_empty() {
        return Err(Error::invalid("alphas", "need at least one level"));
    }
    let m = size.unwrap_or(samples.total());
    for &a in alphas {
        check_alpha(a)?;
        if kept_count(a, m) == 0 {
            return Err(Error::TooFewSamples {
                alpha: a,
                shots: m,
                required: (1.0 / a).ceil() as u64,
            });
        }
    }
    let atoms = samples.atoms();
    let mut cumulative = Vec::with_capacity(atoms.len());
    let mut acc = 0u64;
    for &(_, c) in atoms {
        acc += c;
        cumulative.push(acc);
    }
    let total = samples.total();

    let estimates: Vec<Vec<f64>> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, b as u64);
            let mut counts = vec![0u64; atoms.len()];
            for _ in 0..m {
                let r = rng.random_range(0..total);
                counts[cumulative.partition_point(|&c| c <= r)] += 1;
            }
            let resampled = atoms.iter().zip(&counts).map(|(&(v, _), &c)| (v, c));
            alphas
                .iter()
                .map(|&a| {
                    let k = kept_count(a, m);
                    match side {
                        Side::Lower => bottom_mean(resampled.clone(), k),
                        Side::Upper => bottom_mean(resampled.clone().rev(), k),
                    }
                })
                .collect()
        })
        .collect();

    let b = resamples as f64;
    let mut means = Vec::with_capacity(alphas.len());
    let mut variances = Vec::with_capacity(alphas.len());
    for j in 0..alphas.len() {
        let mean = estimates.iter().map(|e| e[j]).sum::<f64>() / b;
        let var = estimates.iter().map(|e| (e[j] - mean).powi(2)).sum::<f64>() / (b - 1.0);
        means.push(mean);
        variances.push(var);
    }
    Ok(BootstrapResult {
        side,
        alphas: alphas.to_vec(),
        slope: log_log_slope(alphas, &variances),
        means,
        variances,
        resamples,
        size: m,
    })
}
