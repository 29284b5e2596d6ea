//! Dense-matrix oracles and random instance generators shared by the
//! integration tests. Everything here is built from Kronecker products so it
//! shares no code path with the crate's simulators.
#![allow(dead_code)]

use cvarbound::circuit::{Gate1q, Layer, LayeredCircuit};
use cvarbound::noise::PauliLindbladModel;
use cvarbound::pauli::{Pauli, PauliString};
use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn c(re: f64) -> C {
    C::new(re, 0.0)
}

pub fn kron(a: &DMatrix<C>, b: &DMatrix<C>) -> DMatrix<C> {
    a.kronecker(b)
}

pub fn identity(dim: usize) -> DMatrix<C> {
    DMatrix::identity(dim, dim)
}

pub fn single(p: Pauli) -> DMatrix<C> {
    let i = C::new(0.0, 1.0);
    let z = c(0.0);
    let o = c(1.0);
    match p {
        Pauli::I => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        Pauli::X => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        Pauli::Y => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        Pauli::Z => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    }
}

/// Qubit 0 is the least significant index bit, so it is the rightmost factor.
pub fn embed(n: usize, ops: &[(usize, DMatrix<C>)]) -> DMatrix<C> {
    let mut m = identity(1);
    for q in (0..n).rev() {
        let f = ops
            .iter()
            .find(|(k, _)| *k == q)
            .map(|(_, u)| u.clone())
            .unwrap_or_else(|| identity(2));
        m = kron(&m, &f);
    }
    m
}

pub fn pauli_dense(p: &PauliString) -> DMatrix<C> {
    let ops: Vec<_> = (0..p.n()).map(|q| (q, single(p.get(q)))).collect();
    embed(p.n(), &ops) * c(p.sign())
}

pub fn gate_dense(g: Gate1q) -> DMatrix<C> {
    let m = g.matrix();
    DMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]])
}

pub fn cnot_dense(n: usize, ctrl: usize, tgt: usize) -> DMatrix<C> {
    let dim = 1 << n;
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let j = if (i >> ctrl) & 1 == 1 {
            i ^ (1 << tgt)
        } else {
            i
        };
        m[(j, i)] = c(1.0);
    }
    m
}

pub fn layer_dense(n: usize, layer: &Layer) -> DMatrix<C> {
    match layer {
        Layer::Single(s) => {
            let ops: Vec<_> = s.gates().iter().map(|&(q, g)| (q, gate_dense(g))).collect();
            embed(n, &ops)
        }
        Layer::Cnot(cx) => cx
            .pairs()
            .iter()
            .fold(identity(1 << n), |acc, &(a, b)| cnot_dense(n, a, b) * acc),
    }
}

pub fn circuit_dense(circuit: &LayeredCircuit) -> DMatrix<C> {
    circuit
        .layers()
        .iter()
        .fold(identity(1 << circuit.n()), |acc, l| {
            layer_dense(circuit.n(), l) * acc
        })
}

/// Applies `Π_k [w_k ρ + (1 − w_k) P_k ρ P_k]`.
pub fn apply_model(
    rho: &DMatrix<C>,
    model: &PauliLindbladModel,
    map_w: impl Fn(f64) -> f64,
) -> DMatrix<C> {
    let mut rho = rho.clone();
    for t in model.terms() {
        let w = map_w(t.w());
        let p = pauli_dense(&t.pauli);
        rho = &rho * c(w) + &p * &rho * &p * c(1.0 - w);
    }
    rho
}

/// Noise before each CNOT layer's unitary, `map_w` applied to every term's `w`.
pub fn noisy_rho_with(circuit: &LayeredCircuit, map_w: impl Fn(f64) -> f64) -> DMatrix<C> {
    let dim = 1 << circuit.n();
    let mut rho = DMatrix::zeros(dim, dim);
    rho[(0, 0)] = c(1.0);
    for layer in circuit.layers() {
        if let Layer::Cnot(cx) = layer {
            if let Some(m) = &cx.noise {
                rho = apply_model(&rho, m, &map_w);
            }
        }
        let u = layer_dense(circuit.n(), layer);
        rho = &u * rho * u.adjoint();
    }
    rho
}

pub fn noisy_probs(circuit: &LayeredCircuit) -> Vec<f64> {
    diag(&noisy_rho_with(circuit, |w| w))
}

pub fn ideal_probs(circuit: &LayeredCircuit) -> Vec<f64> {
    let u = circuit_dense(circuit);
    (0..u.nrows()).map(|i| u[(i, 0)].norm_sqr()).collect()
}

pub fn diag(rho: &DMatrix<C>) -> Vec<f64> {
    (0..rho.nrows()).map(|i| rho[(i, i)].re).collect()
}

pub fn random_pauli<R: Rng>(rng: &mut R, n: usize, allow_identity: bool) -> PauliString {
    let full = (1u128 << n) - 1;
    loop {
        let p = PauliString::from_masks(
            n,
            rng.random::<u128>() & full,
            rng.random::<u128>() & full,
            false,
        )
        .unwrap();
        if allow_identity || !p.is_identity() {
            return p;
        }
    }
}

pub fn random_model<R: Rng>(
    rng: &mut R,
    n: usize,
    terms: usize,
    max_lambda: f64,
) -> PauliLindbladModel {
    let t = (0..terms)
        .map(|_| {
            (
                random_pauli(rng, n, false),
                rng.random::<f64>() * max_lambda,
            )
        })
        .collect();
    PauliLindbladModel::new(n, t).unwrap()
}

pub fn random_gate<R: Rng>(rng: &mut R) -> Gate1q {
    let theta = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    match rng.random_range(0..9) {
        0 => Gate1q::H,
        1 => Gate1q::S,
        2 => Gate1q::Sdg,
        3 => Gate1q::X,
        4 => Gate1q::Y,
        5 => Gate1q::Z,
        6 => Gate1q::Rz(theta),
        7 => Gate1q::Rx(theta),
        _ => Gate1q::I,
    }
}

pub fn random_pairs<R: Rng>(rng: &mut R, n: usize) -> Vec<(usize, usize)> {
    let mut qubits: Vec<usize> = (0..n).collect();
    qubits.shuffle(rng);
    let count = rng.random_range(1..=n / 2);
    qubits.chunks(2).take(count).map(|c| (c[0], c[1])).collect()
}

/// Alternating random single-qubit and CNOT layers; every CNOT layer carries
/// a random model with up to `max_terms` terms of rate at most `max_lambda`.
pub fn random_circuit<R: Rng>(
    rng: &mut R,
    n: usize,
    cnot_layers: usize,
    max_terms: usize,
    max_lambda: f64,
) -> LayeredCircuit {
    assert!(n >= 2);
    let mut c = LayeredCircuit::new(n);
    for _ in 0..cnot_layers {
        c.push_single((0..n).map(|q| (q, random_gate(rng))).collect())
            .unwrap();
        let terms = rng.random_range(1..=max_terms);
        let model = random_model(rng, n, terms, max_lambda);
        c.push_cnot(random_pairs(rng, n), Some(model), None)
            .unwrap();
    }
    c.push_single((0..n).map(|q| (q, random_gate(rng))).collect())
        .unwrap();
    c
}

pub fn max_abs_diff(a: &DMatrix<C>, b: &DMatrix<C>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
