//! Probabilistic error cancellation for Pauli-Lindblad layers. Each noise term
//! is inverted by `Λ_k⁻¹ = a_I·id + a_P·P_k(·)P_k`, sampled as "insert `P_k`
//! with probability `1 − w_k` and flip the sign".

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use crate::circuit::LayeredCircuit;
use crate::error::{Error, Result};
use crate::noise::PauliLindbladModel;
use crate::pauli::PauliString;
use crate::sim::{Distribution, Provenance, SampleSet, Simulator};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QpdTerm {
    pub pauli: PauliString,
    pub w: f64,
    /// `w / (2w − 1)`
    pub a_identity: f64,
    /// `−(1 − w) / (2w − 1)`
    pub a_pauli: f64,
    pub p_identity: f64,
    pub p_pauli: f64,
    /// `|a_I| + |a_P| = e^{2λ}`
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QpdSpec {
    pub terms: Vec<QpdTerm>,
    pub gamma: f64,
}

pub fn qpd_inverse(model: &PauliLindbladModel) -> Result<QpdSpec> {
    let mut terms = Vec::with_capacity(model.terms().len());
    for t in model.terms() {
        let w = t.w();
        if !t.lambda.is_finite() || w <= 0.5 {
            return Err(Error::NonInvertible(w));
        }
        let d = 2.0 * w - 1.0;
        terms.push(QpdTerm {
            pauli: t.pauli,
            w,
            a_identity: w / d,
            a_pauli: -(1.0 - w) / d,
            p_identity: w,
            p_pauli: 1.0 - w,
            gamma: (2.0 * t.lambda).exp(),
        });
    }
    Ok(QpdSpec {
        gamma: terms.iter().map(|t| t.gamma).product(),
        terms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PecEstimate {
    pub estimate: f64,
    /// Sample standard deviation of the signed, rescaled shots over `√shots`.
    pub stderr: f64,
    pub gamma: f64,
    pub shots: u64,
    pub negative_fraction: f64,
}

fn check_invertible(circuit: &LayeredCircuit) -> Result<f64> {
    let mut gamma = 1.0;
    for m in circuit.noisy_layers() {
        gamma *= qpd_inverse(m)?.gamma;
    }
    Ok(gamma)
}

#[derive(Default)]
struct Moments {
    sum: f64,
    sum_sq: f64,
    negative: u64,
}

/// Unbiased estimate of the noise-free `E[h(X)]`: every shot samples QPD
/// insertions for each noise term, lets the noise fire as usual, and records
/// `γ · Π signs · h(x)`.
pub fn pec_expectation(
    sim: &Simulator,
    circuit: &LayeredCircuit,
    h: impl Fn(u128) -> f64 + Sync,
    shots: u64,
    seed: u64,
) -> Result<PecEstimate> {
    if shots < 2 {
        return Err(Error::invalid("shots", "need at least 2 shots"));
    }
    let gamma = check_invertible(circuit)?;
    let engine = sim.engine(circuit)?;
    let blocks = engine.run(
        shots,
        seed,
        Moments::default,
        |e, rng, key| {
            let mut sign = 1.0;
            for &(li, model) in e.noisy_layers() {
                let (mut x, mut z) = (0u128, 0u128);
                for t in model.terms() {
                    let w = t.w();
                    if rng.random::<f64>() >= w {
                        sign = -sign;
                        x ^= t.pauli.x_mask();
                        z ^= t.pauli.z_mask();
                    }
                    if rng.random::<f64>() >= w {
                        x ^= t.pauli.x_mask();
                        z ^= t.pauli.z_mask();
                    }
                }
                if x | z != 0 {
                    key.push((li, x, z));
                }
            }
            gamma * sign
        },
        |m, outcome, weight| {
            let v = weight * h(outcome);
            m.sum += v;
            m.sum_sq += v * v;
            if weight < 0.0 {
                m.negative += 1;
            }
        },
    )?;
    let total = blocks.into_iter().fold(Moments::default(), |a, b| Moments {
        sum: a.sum + b.sum,
        sum_sq: a.sum_sq + b.sum_sq,
        negative: a.negative + b.negative,
    });
    let n = shots as f64;
    let mean = total.sum / n;
    let var = ((total.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(PecEstimate {
        estimate: mean,
        stderr: (var / n).sqrt(),
        gamma,
        shots,
        negative_fraction: total.negative as f64 / n,
    })
}

/// Exact output distribution of the sign-stripped PEC mixture. A QPD insertion
/// followed by the term's own noise is a Pauli channel with identity weight
/// `w² + (1 − w)²`.
pub fn pec_sampling_distribution(
    sim: &Simulator,
    circuit: &LayeredCircuit,
) -> Result<Distribution> {
    check_invertible(circuit)?;
    let rho = sim.density_matrix_with(circuit, |w| w * w + (1.0 - w) * (1.0 - w))?;
    Distribution::new(
        circuit.n(),
        rho.diagonal().into_iter().map(|p| p.max(0.0)).collect(),
    )
}

/// Bitstrings from the sign-stripped PEC mixture.
pub fn sample_pec(
    sim: &Simulator,
    circuit: &LayeredCircuit,
    shots: u64,
    seed: u64,
) -> Result<SampleSet> {
    check_invertible(circuit)?;
    let engine = sim.engine(circuit)?;
    let blocks = engine.run(
        shots,
        seed,
        BTreeMap::<u128, u64>::new,
        |e, rng, key| {
            for &(li, model) in e.noisy_layers() {
                let (mut x, mut z) = (0u128, 0u128);
                for t in model.terms() {
                    let w = t.w();
                    let inserted = rng.random::<f64>() >= w;
                    let fired = rng.random::<f64>() >= w;
                    if inserted != fired {
                        x ^= t.pauli.x_mask();
                        z ^= t.pauli.z_mask();
                    }
                }
                if x | z != 0 {
                    key.push((li, x, z));
                }
            }
            1.0
        },
        |acc, outcome, _| *acc.entry(outcome).or_insert(0) += 1,
    )?;
    let mut counts = BTreeMap::new();
    for b in blocks {
        for (k, c) in b {
            *counts.entry(k).or_insert(0) += c;
        }
    }
    Ok(SampleSet::from_counts(
        circuit.n(),
        counts,
        Some(seed),
        Provenance::Pec,
    ))
}
