use std::collections::BTreeSet;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{HeavyHexLattice, IsingPolynomial};
use crate::circuit::{Gate1q, LayeredCircuit};
use crate::error::{Error, Result};
use crate::sim::Simulator;
use crate::state::StateVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaParams {
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl QaoaParams {
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() || gammas.len() != betas.len() {
            return Err(Error::invalid(
                "params",
                format!(
                    "need p ≥ 1 gammas and betas of equal length, got {} and {}",
                    gammas.len(),
                    betas.len()
                ),
            ));
        }
        if gammas.iter().chain(&betas).any(|a| !a.is_finite()) {
            return Err(Error::invalid("params", "angles must be finite"));
        }
        Ok(Self { gammas, betas })
    }

    pub fn p(&self) -> usize {
        self.gammas.len()
    }
}

/// Angles reported for MAXCUT on 40-node random 3-regular graphs at depth 1 and 2.
pub fn maxcut40_reference_params(p: usize) -> Option<QaoaParams> {
    match p {
        1 => Some(QaoaParams {
            gammas: vec![2.8405],
            betas: vec![0.3982],
        }),
        2 => Some(QaoaParams {
            gammas: vec![1.1506, 0.1941],
            betas: vec![0.3288, 0.6582],
        }),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy)]
pub enum QaoaLayout<'a> {
    /// Every two- and three-body term gets its own CNOT ladder.
    Generic,
    /// Parities computed onto the lattice's `v2` qubits in three color layers,
    /// then uncomputed; CNOT depth 6 per round.
    HeavyHexParity(&'a HeavyHexLattice),
}

fn class(label: &str) -> Option<String> {
    Some(label.to_string())
}

/// `exp(−iγ H_min)` with `H_min = ±h` oriented so that lower is better.
pub fn phase_separator(
    poly: &IsingPolynomial,
    gamma: f64,
    layout: QaoaLayout<'_>,
) -> Result<LayeredCircuit> {
    let mut c = LayeredCircuit::new(poly.n());
    append_phase_separator(&mut c, poly, gamma, layout)?;
    Ok(c)
}

fn append_phase_separator(
    c: &mut LayeredCircuit,
    poly: &IsingPolynomial,
    gamma: f64,
    layout: QaoaLayout<'_>,
) -> Result<()> {
    let s = poly.minimization_sign();
    let angle = |coef: f64| Gate1q::Rz(2.0 * gamma * s * coef);
    let linear: Vec<_> = poly
        .linear()
        .iter()
        .filter(|(_, &d)| d != 0.0)
        .map(|(&v, &d)| (v, angle(d)))
        .collect();
    if !linear.is_empty() {
        c.push_single(linear)?;
    }
    match layout {
        QaoaLayout::Generic => {
            for (&(i, j), &d) in poly.quadratic() {
                if d == 0.0 {
                    continue;
                }
                c.push_cnot(vec![(i, j)], None, class("cx"))?;
                c.push_single(vec![(j, angle(d))])?;
                c.push_cnot(vec![(i, j)], None, class("cx"))?;
            }
            for (&(a, b, t), &d) in poly.cubic() {
                if d == 0.0 {
                    continue;
                }
                c.push_cnot(vec![(a, t)], None, class("cx"))?;
                c.push_cnot(vec![(b, t)], None, class("cx"))?;
                c.push_single(vec![(t, angle(d))])?;
                c.push_cnot(vec![(b, t)], None, class("cx"))?;
                c.push_cnot(vec![(a, t)], None, class("cx"))?;
            }
        }
        QaoaLayout::HeavyHexParity(lattice) => {
            check_heavy_hex(poly, lattice)?;
            let classes = lattice.color_classes();
            // parity[v] = set of variables whose parity qubit v currently holds
            let mut parity: Vec<BTreeSet<usize>> =
                (0..poly.n()).map(|v| BTreeSet::from([v])).collect();
            let mut applied_quadratic = BTreeSet::new();
            let mut applied_cubic = BTreeSet::new();
            for round in 0..2 {
                for (color, pairs) in classes.iter().enumerate() {
                    c.push_cnot(pairs.clone(), None, class(&format!("color{color}")))?;
                    let mut rotations = Vec::new();
                    for &(ctrl, tgt) in pairs {
                        let set = &mut parity[tgt];
                        if !set.remove(&ctrl) {
                            set.insert(ctrl);
                        }
                        let vars: Vec<usize> = set.iter().copied().collect();
                        let coef = match *vars.as_slice() {
                            [a, b] if applied_quadratic.insert((a, b)) => {
                                poly.quadratic().get(&(a, b))
                            }
                            [a, b, d] if applied_cubic.insert((a, b, d)) => {
                                poly.cubic().get(&(a, b, d))
                            }
                            _ => None,
                        };
                        if let Some(&coef) = coef.filter(|&&d| d != 0.0) {
                            rotations.push((tgt, angle(coef)));
                        }
                    }
                    if !rotations.is_empty() {
                        c.push_single(rotations)?;
                    }
                }
                debug_assert!(
                    round == 0
                        || parity
                            .iter()
                            .enumerate()
                            .all(|(v, s)| s.len() == 1 && s.contains(&v))
                );
            }
            if applied_quadratic.len() != lattice.graph.edges.len()
                || applied_cubic.len() != lattice.w.len()
            {
                return Err(Error::LayoutMismatch(
                    "parity schedule missed a term".into(),
                ));
            }
        }
    }
    Ok(())
}

fn check_heavy_hex(poly: &IsingPolynomial, lattice: &HeavyHexLattice) -> Result<()> {
    if poly.n() != lattice.n() {
        return Err(Error::LayoutMismatch(format!(
            "polynomial has {} variables, lattice has {}",
            poly.n(),
            lattice.n()
        )));
    }
    let edges: BTreeSet<_> = lattice.graph.edges.iter().copied().collect();
    if let Some(k) = poly.quadratic().keys().find(|k| !edges.contains(k)) {
        return Err(Error::LayoutMismatch(format!(
            "quadratic term {k:?} is not a lattice edge"
        )));
    }
    let triples: BTreeSet<_> = lattice
        .w
        .iter()
        .map(|&(l, a, b)| {
            let mut t = [l, a, b];
            t.sort_unstable();
            (t[0], t[1], t[2])
        })
        .collect();
    if let Some(k) = poly.cubic().keys().find(|k| !triples.contains(k)) {
        return Err(Error::LayoutMismatch(format!(
            "cubic term {k:?} is not centered on a degree-2 vertex"
        )));
    }
    Ok(())
}

/// `Π_j exp(−iβ_j H_X) exp(−iγ_j H_min) H^{⊗n}|0⟩` with `H_X = −Σ X_i`, so the
/// mixer is `Rx(−2β)` on every qubit.
pub fn build_qaoa(
    poly: &IsingPolynomial,
    params: &QaoaParams,
    layout: QaoaLayout<'_>,
) -> Result<LayeredCircuit> {
    let mut c = LayeredCircuit::new(poly.n());
    c.push_all(Gate1q::H)?;
    for (&gamma, &beta) in params.gammas.iter().zip(&params.betas) {
        append_phase_separator(&mut c, poly, gamma, layout)?;
        c.push_all(Gate1q::Rx(-2.0 * beta))?;
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSearch {
    pub params: QaoaParams,
    /// Noise-free `E[h]` at the chosen angles.
    pub expectation: f64,
    pub steps: usize,
}

/// Exhaustive depth-1 search over `γ ∈ [0, π)`, `β ∈ [−π/2, π/2)` on a
/// `steps × steps` grid. The first grid point with the best noise-free
/// expectation wins, so the result does not depend on scheduling.
pub fn grid_search_p1(poly: &IsingPolynomial, steps: usize, sim: &Simulator) -> Result<GridSearch> {
    if steps == 0 {
        return Err(Error::invalid("grid steps", "must be at least 1"));
    }
    if poly.n() > sim.statevector_limit {
        return Err(Error::SizeLimit {
            what: "QAOA grid search",
            n: poly.n(),
            limit: sim.statevector_limit,
        });
    }
    let n = poly.n();
    let diag = poly.diagonal()?;
    let s = poly.minimization_sign();
    let norm = (diag.len() as f64).sqrt().recip();
    let angle = |k: usize| std::f64::consts::PI * k as f64 / steps as f64;
    let rows: Vec<(usize, f64)> = (0..steps)
        .into_par_iter()
        .map(|gi| {
            let gamma = angle(gi);
            let phased: Vec<Complex64> = diag
                .iter()
                .map(|&h| Complex64::from_polar(norm, -gamma * s * h))
                .collect();
            let mut best = (0, f64::NAN);
            for bi in 0..steps {
                let beta = angle(bi) - std::f64::consts::FRAC_PI_2;
                let mut psi = StateVector::from_amplitudes(n, phased.clone());
                for q in 0..n {
                    psi.apply_gate(q, Gate1q::Rx(-2.0 * beta))?;
                }
                let e: f64 = psi
                    .amplitudes()
                    .iter()
                    .zip(&diag)
                    .map(|(a, h)| a.norm_sqr() * h)
                    .sum();
                if best.1.is_nan() || poly.better(e, best.1) {
                    best = (bi, e);
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let mut best: Option<(usize, usize, f64)> = None;
    for (gi, &(bi, e)) in rows.iter().enumerate() {
        if best.is_none_or(|(_, _, b)| poly.better(e, b)) {
            best = Some((gi, bi, e));
        }
    }
    let (gi, bi, expectation) = best.expect("steps ≥ 1");
    Ok(GridSearch {
        params: QaoaParams::new(
            vec![angle(gi)],
            vec![angle(bi) - std::f64::consts::FRAC_PI_2],
        )?,
        expectation,
        steps,
    })
}
