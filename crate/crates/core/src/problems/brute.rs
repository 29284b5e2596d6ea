use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{IsingPolynomial, MAX_ENUMERATION_QUBITS};
use crate::error::{Error, Result};

/// Optimum reported for the 127-qubit heavy-hex instance; kept as a reference constant.
pub const HEAVY_HEX_127_REFERENCE_OPTIMUM: f64 = -188.0;

/// Optimum cut reported for the 40-node MAXCUT instance.
pub const MAXCUT40_REFERENCE_OPTIMUM: f64 = 56.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BruteForce {
    pub best_value: f64,
    /// Lowest basis index attaining the optimum.
    pub argbest: u64,
    /// Exact value histogram over all `2^n` bitstrings, sorted by value.
    pub histogram: Vec<(f64, u64)>,
}

const CHUNK_BITS: usize = 14;

/// Enumerates every bitstring. Chunks are reduced in index order, so ties and
/// the histogram do not depend on scheduling.
pub fn brute_force(poly: &IsingPolynomial) -> Result<BruteForce> {
    if poly.n() > MAX_ENUMERATION_QUBITS {
        return Err(Error::SizeLimit {
            what: "brute force",
            n: poly.n(),
            limit: MAX_ENUMERATION_QUBITS,
        });
    }
    let terms = poly.parity_terms();
    let total = 1u64 << poly.n();
    let chunk = 1u64 << CHUNK_BITS.min(poly.n());
    let eval = |x: u64| {
        terms.iter().fold(poly.offset(), |acc, &(m, c)| {
            if (x & m).count_ones() % 2 == 1 {
                acc - c
            } else {
                acc + c
            }
        })
    };
    let partials: Vec<(f64, u64, BTreeMap<u64, u64>)> = (0..total / chunk)
        .into_par_iter()
        .map(|k| {
            let mut best = (eval(k * chunk), k * chunk);
            let mut hist = BTreeMap::new();
            for x in k * chunk..(k + 1) * chunk {
                let v = eval(x);
                if poly.better(v, best.0) {
                    best = (v, x);
                }
                *hist.entry(key(v)).or_insert(0) += 1;
            }
            (best.0, best.1, hist)
        })
        .collect();
    let mut best: Option<(f64, u64)> = None;
    let mut hist = BTreeMap::<u64, u64>::new();
    for (v, x, h) in partials {
        if best.is_none_or(|(b, _)| poly.better(v, b)) {
            best = Some((v, x));
        }
        for (k, c) in h {
            *hist.entry(k).or_insert(0) += c;
        }
    }
    let (best_value, argbest) = best.expect("at least one chunk");
    let mut histogram: Vec<(f64, u64)> = hist
        .into_iter()
        .map(|(k, c)| (f64::from_bits(k), c))
        .collect();
    histogram.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(BruteForce {
        best_value,
        argbest,
        histogram,
    })
}

fn key(v: f64) -> u64 {
    // fold −0.0 into 0.0
    (v + 0.0).to_bits()
}

/// Worst-case depth-`p` QAOA ratios on 3-regular MAXCUT.
pub fn qaoa_guarantee(p: usize) -> Option<f64> {
    match p {
        1 => Some(0.692),
        2 => Some(0.7559),
        3 => Some(0.7924),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproximationRatio {
    pub ratio: f64,
    pub guarantee: Option<f64>,
    pub meets_guarantee: Option<bool>,
}

/// `value / optimum`, compared with the depth-`p` guarantee when one is known.
pub fn approximation_ratio(
    value: f64,
    optimum: f64,
    p: Option<usize>,
) -> Result<ApproximationRatio> {
    if optimum == 0.0 || !optimum.is_finite() {
        return Err(Error::invalid("optimum", "must be finite and nonzero"));
    }
    let ratio = value / optimum;
    let guarantee = p.and_then(qaoa_guarantee);
    Ok(ApproximationRatio {
        ratio,
        guarantee,
        meets_guarantee: guarantee.map(|g| ratio >= g),
    })
}
