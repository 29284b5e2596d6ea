//! Dense statevector and density-matrix kernels. Qubit `q` is bit `q` of a
//! basis index. A density matrix on `n` qubits is stored as a vector on `2n`
//! qubits: bits `0..n` index the column, bits `n..2n` the row.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::circuit::{Gate1q, Layer, LayeredCircuit};
use crate::error::{Error, Result};
use crate::pauli::PauliString;

type C = Complex64;

const PAR_MIN_LEN: usize = 1 << 14;
const INNER_CHUNK: usize = 1 << 12;

/// Visits every pair `(i, i ^ xmask)` once, with `i` the member whose highest
/// bit of `xmask` is clear. `xmask` must be nonzero.
fn for_each_pair<F>(v: &mut [C], xmask: usize, f: F)
where
    F: Fn(usize, &mut C, &mut C) + Sync,
{
    debug_assert!(xmask != 0);
    let h = usize::BITS as usize - 1 - xmask.leading_zeros() as usize;
    let half = 1usize << h;
    let rest = xmask ^ half;
    let inner = if rest == 0 {
        INNER_CHUNK.min(half)
    } else {
        2usize << (usize::BITS as usize - 1 - rest.leading_zeros() as usize)
    };
    let run = |outer_base: usize, outer: &mut [C]| {
        let (lo, hi) = outer.split_at_mut(half);
        let body = |(k, (lc, hc)): (usize, (&mut [C], &mut [C]))| {
            let base = outer_base + k * inner;
            for e in 0..lc.len() {
                f(base + e, &mut lc[e], &mut hc[e ^ rest]);
            }
        };
        if v_len_parallel(half) {
            lo.par_chunks_mut(inner)
                .zip(hi.par_chunks_mut(inner))
                .enumerate()
                .for_each(body);
        } else {
            lo.chunks_mut(inner)
                .zip(hi.chunks_mut(inner))
                .enumerate()
                .for_each(body);
        }
    };
    let block = half << 1;
    if v.len() >= PAR_MIN_LEN && v.len() / block > 1 {
        v.par_chunks_mut(block)
            .enumerate()
            .for_each(|(o, outer)| run(o * block, outer));
    } else {
        for (o, outer) in v.chunks_mut(block).enumerate() {
            run(o * block, outer);
        }
    }
}

fn v_len_parallel(half: usize) -> bool {
    half >= PAR_MIN_LEN / 2
}

fn parity(x: usize) -> bool {
    x.count_ones() & 1 == 1
}

fn apply_matrix(v: &mut [C], q: usize, m: &[[C; 2]; 2]) {
    for_each_pair(v, 1 << q, |_, a, b| {
        let (x, y) = (*a, *b);
        *a = m[0][0] * x + m[0][1] * y;
        *b = m[1][0] * x + m[1][1] * y;
    });
}

fn apply_cnot(v: &mut [C], c: usize, t: usize) {
    let cbit = 1usize << c;
    for_each_pair(v, 1 << t, |i, a, b| {
        if i & cbit != 0 {
            std::mem::swap(a, b);
        }
    });
}

/// `v[i] ← w v[i] + (1 − w) s(i ⊕ X) v[i ⊕ X]` with `s(k) = (−1)^{|k ∧ Z|}`.
fn mix_pauli(v: &mut [C], xmask: usize, zmask: usize, w: f64) {
    let s = |k: usize| if parity(k & zmask) { -1.0 } else { 1.0 };
    if xmask == 0 {
        let f = |(i, a): (usize, &mut C)| *a *= w + (1.0 - w) * s(i);
        if v.len() >= PAR_MIN_LEN {
            v.par_iter_mut().enumerate().for_each(f);
        } else {
            v.iter_mut().enumerate().for_each(f);
        }
        return;
    }
    for_each_pair(v, xmask, |i, a, b| {
        let j = i ^ xmask;
        let (x, y) = (*a, *b);
        *a = x * w + y * ((1.0 - w) * s(j));
        *b = y * w + x * ((1.0 - w) * s(i));
    });
}

fn check_qubit(q: usize, n: usize) -> Result<()> {
    if q >= n {
        return Err(Error::QubitOutOfRange { index: q, n });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C>,
}

/// Hard cap on dense vectors, independent of the configurable simulator limits.
pub const MAX_DENSE_BITS: usize = 30;

impl StateVector {
    pub fn zero(n: usize) -> Result<Self> {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> Result<Self> {
        if n > MAX_DENSE_BITS {
            return Err(Error::SizeLimit {
                what: "statevector",
                n,
                limit: MAX_DENSE_BITS,
            });
        }
        let mut amps = vec![C::new(0.0, 0.0); 1 << n];
        *amps.get_mut(index).ok_or_else(|| {
            Error::invalid("index", format!("basis index {index} out of range"))
        })? = C::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    /// Caller guarantees `amps.len() == 1 << n` and unit norm.
    pub(crate) fn from_amplitudes(n: usize, amps: Vec<C>) -> Self {
        debug_assert_eq!(amps.len(), 1 << n);
        Self { n, amps }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C] {
        &self.amps
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn apply_gate(&mut self, q: usize, gate: Gate1q) -> Result<()> {
        check_qubit(q, self.n)?;
        if gate != Gate1q::I {
            apply_matrix(&mut self.amps, q, &gate.matrix());
        }
        Ok(())
    }

    pub fn apply_cnot(&mut self, c: usize, t: usize) -> Result<()> {
        check_qubit(c, self.n)?;
        check_qubit(t, self.n)?;
        if c == t {
            return Err(Error::OverlappingPairs(c));
        }
        apply_cnot(&mut self.amps, c, t);
        Ok(())
    }

    /// Applies a Pauli given by masks, up to a global phase.
    pub(crate) fn apply_pauli_masks(&mut self, x: usize, z: usize) {
        let s = |k: usize| if parity(k & z) { -1.0 } else { 1.0 };
        if x == 0 {
            for (i, a) in self.amps.iter_mut().enumerate() {
                *a *= s(i);
            }
            return;
        }
        // P|i⟩ = s(i)|i ⊕ x⟩ up to phase
        for_each_pair(&mut self.amps, x, |i, a, b| {
            let (u, v) = (*a, *b);
            *a = v * s(i ^ x);
            *b = u * s(i);
        });
    }

    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<()> {
        if p.n() != self.n {
            return Err(Error::SizeMismatch {
                expected: self.n,
                found: p.n(),
            });
        }
        self.apply_pauli_masks(p.x_mask() as usize, p.z_mask() as usize);
        Ok(())
    }

    /// Applies the unitary part of a layer; attached noise is ignored.
    pub fn apply_layer(&mut self, layer: &Layer) -> Result<()> {
        match layer {
            Layer::Single(s) => {
                for &(q, g) in s.gates() {
                    self.apply_gate(q, g)?;
                }
            }
            Layer::Cnot(c) => {
                for &(a, b) in c.pairs() {
                    self.apply_cnot(a, b)?;
                }
            }
        }
        Ok(())
    }

    pub fn apply_circuit(&mut self, circuit: &LayeredCircuit) -> Result<()> {
        if circuit.n() != self.n {
            return Err(Error::SizeMismatch {
                expected: self.n,
                found: circuit.n(),
            });
        }
        circuit
            .layers()
            .iter()
            .try_for_each(|l| self.apply_layer(l))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    data: Vec<C>,
}

impl DensityMatrix {
    pub fn zero(n: usize) -> Result<Self> {
        if 2 * n > MAX_DENSE_BITS {
            return Err(Error::SizeLimit {
                what: "density matrix",
                n,
                limit: MAX_DENSE_BITS / 2,
            });
        }
        let mut data = vec![C::new(0.0, 0.0); 1 << (2 * n)];
        data[0] = C::new(1.0, 0.0);
        Ok(Self { n, data })
    }

    pub fn from_state(psi: &StateVector) -> Result<Self> {
        let mut rho = Self::zero(psi.n())?;
        let dim = 1usize << psi.n();
        let a = psi.amplitudes();
        for r in 0..dim {
            for c in 0..dim {
                rho.data[(r << psi.n()) | c] = a[r] * a[c].conj();
            }
        }
        Ok(rho)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> C {
        self.data[(row << self.n) | col]
    }

    pub fn trace(&self) -> C {
        (0..1usize << self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..1usize << self.n).map(|i| self.get(i, i).re).collect()
    }

    pub fn apply_gate(&mut self, q: usize, gate: Gate1q) -> Result<()> {
        check_qubit(q, self.n)?;
        if gate == Gate1q::I {
            return Ok(());
        }
        let m = gate.matrix();
        let conj = [
            [m[0][0].conj(), m[0][1].conj()],
            [m[1][0].conj(), m[1][1].conj()],
        ];
        apply_matrix(&mut self.data, q + self.n, &m);
        apply_matrix(&mut self.data, q, &conj);
        Ok(())
    }

    pub fn apply_cnot(&mut self, c: usize, t: usize) -> Result<()> {
        check_qubit(c, self.n)?;
        check_qubit(t, self.n)?;
        if c == t {
            return Err(Error::OverlappingPairs(c));
        }
        apply_cnot(&mut self.data, c + self.n, t + self.n);
        apply_cnot(&mut self.data, c, t);
        Ok(())
    }

    /// `ρ ← w ρ + (1 − w) P ρ P`.
    pub fn apply_pauli_channel(&mut self, p: &PauliString, w: f64) {
        let (x, z) = (p.x_mask() as usize, p.z_mask() as usize);
        mix_pauli(&mut self.data, (x << self.n) | x, (z << self.n) | z, w);
    }

    pub fn apply_unitary_layer(&mut self, layer: &Layer) -> Result<()> {
        match layer {
            Layer::Single(s) => {
                for &(q, g) in s.gates() {
                    self.apply_gate(q, g)?;
                }
            }
            Layer::Cnot(c) => {
                for &(a, b) in c.pairs() {
                    self.apply_cnot(a, b)?;
                }
            }
        }
        Ok(())
    }
}
