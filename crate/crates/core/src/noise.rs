//! Sparse Pauli-Lindblad noise: `Λ = Π_k [w_k ρ + (1 − w_k) P_k ρ P_k]`
//! with `w_k = (1 + e^{−2λ_k}) / 2`.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{commutes, Pauli, PauliString, MAX_PAULI_QUBITS};
use crate::state::DensityMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseTerm {
    pub pauli: PauliString,
    pub lambda: f64,
}

impl NoiseTerm {
    /// Probability of not applying the term's Pauli.
    pub fn w(&self) -> f64 {
        (1.0 + (-2.0 * self.lambda).exp()) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelFile")]
pub struct PauliLindbladModel {
    n: usize,
    terms: Vec<NoiseTerm>,
}

#[derive(Deserialize)]
struct ModelFile {
    n: usize,
    terms: Vec<NoiseTerm>,
}

impl TryFrom<ModelFile> for PauliLindbladModel {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        PauliLindbladModel::new(
            f.n,
            f.terms.into_iter().map(|t| (t.pauli, t.lambda)).collect(),
        )
    }
}

/// Paulis drawn for one layer in one shot.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorEvent {
    pub layer: usize,
    pub applied: Vec<PauliString>,
}

impl ErrorEvent {
    /// Product of the applied Paulis, phase dropped.
    pub fn combined(&self, n: usize) -> Result<PauliString> {
        self.applied
            .iter()
            .try_fold(PauliString::identity(n)?, |acc, p| {
                acc.mul_ignoring_phase(p)
            })
    }
}

impl PauliLindbladModel {
    /// Signs on the generators are dropped since `PρP` does not depend on them.
    /// `λ = +∞` is accepted and gives a fully depolarizing term (`w = 1/2`).
    pub fn new(n: usize, terms: Vec<(PauliString, f64)>) -> Result<Self> {
        if n > MAX_PAULI_QUBITS {
            return Err(Error::TooManyQubits {
                n,
                max: MAX_PAULI_QUBITS,
            });
        }
        let mut out = Vec::with_capacity(terms.len());
        for (p, lambda) in terms {
            if p.n() != n {
                return Err(Error::SizeMismatch {
                    expected: n,
                    found: p.n(),
                });
            }
            if lambda.is_nan() || lambda < 0.0 {
                return Err(Error::invalid(
                    "lambda",
                    format!("rate must be nonnegative, got {lambda}"),
                ));
            }
            if p.is_identity() {
                return Err(Error::invalid("pauli", "identity generator has no effect"));
            }
            out.push(NoiseTerm {
                pauli: p.unsigned(),
                lambda,
            });
        }
        Ok(Self { n, terms: out })
    }

    pub fn noiseless(n: usize) -> Self {
        Self {
            n,
            terms: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[NoiseTerm] {
        &self.terms
    }

    pub fn total_rate(&self) -> f64 {
        self.terms.iter().map(|t| t.lambda).sum()
    }

    /// Sampling overhead `γ = e^{2 Σ λ_k}` of the inverse channel.
    pub fn gamma(&self) -> f64 {
        (2.0 * self.total_rate()).exp()
    }

    pub fn layer_fidelity(&self) -> f64 {
        self.gamma().powf(-0.5)
    }

    pub fn no_error_probability(&self) -> f64 {
        self.terms.iter().map(NoiseTerm::w).product()
    }

    /// Concatenates generators acting on the same register.
    pub fn combine(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::SizeMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self { n: self.n, terms })
    }

    /// Draws which generators fire; each fires independently with probability `1 − w_k`.
    pub fn sample_error<R: Rng + ?Sized>(&self, layer: usize, rng: &mut R) -> ErrorEvent {
        let applied = self
            .terms
            .iter()
            .filter(|t| rng.random::<f64>() >= t.w())
            .map(|t| t.pauli)
            .collect();
        ErrorEvent { layer, applied }
    }

    /// Same draws as [`Self::sample_error`], folded into X/Z masks.
    pub(crate) fn sample_masks<R: Rng + ?Sized>(&self, rng: &mut R) -> (u128, u128) {
        let (mut x, mut z) = (0u128, 0u128);
        for t in &self.terms {
            if rng.random::<f64>() >= t.w() {
                x ^= t.pauli.x_mask();
                z ^= t.pauli.z_mask();
            }
        }
        (x, z)
    }

    pub fn apply_channel_dense(&self, rho: &mut DensityMatrix) -> Result<()> {
        if rho.n() != self.n {
            return Err(Error::SizeMismatch {
                expected: self.n,
                found: rho.n(),
            });
        }
        for t in &self.terms {
            rho.apply_pauli_channel(&t.pauli, t.w());
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Uniform two-qubit noise for every CNOT: all 15 non-identity Paulis on the
/// pair, each with rate `lambda / 15`, so one CNOT contributes `γ = e^{2λ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerCnotNoise {
    pub lambda: f64,
}

impl PerCnotNoise {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::invalid(
                "lambda",
                format!("rate must be finite and nonnegative, got {lambda}"),
            ));
        }
        Ok(Self { lambda })
    }

    /// Per-CNOT rate giving the requested CNOT fidelity `1/√γ_CX`.
    pub fn from_cnot_fidelity(f_cx: f64) -> Result<Self> {
        if !(f_cx > 0.0 && f_cx <= 1.0) {
            return Err(Error::invalid(
                "f_cx",
                format!("fidelity must lie in (0, 1], got {f_cx}"),
            ));
        }
        Self::new(-f_cx.ln())
    }

    pub fn gamma_per_cnot(&self) -> f64 {
        (2.0 * self.lambda).exp()
    }

    pub fn model_for(&self, n: usize, pairs: &[(usize, usize)]) -> Result<PauliLindbladModel> {
        let ops = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
        let mut terms = Vec::with_capacity(15 * pairs.len());
        for &(c, t) in pairs {
            for &a in &ops {
                for &b in &ops {
                    if a == Pauli::I && b == Pauli::I {
                        continue;
                    }
                    let p = PauliString::from_sparse(n, &[(c, a), (t, b)])?;
                    terms.push((p, self.lambda / 15.0));
                }
            }
        }
        PauliLindbladModel::new(n, terms)
    }
}

/// Pauli-twirled form of an arbitrary channel on one or two qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct TwirledChannel {
    pub n: usize,
    /// Diagonal of the twirled Pauli transfer matrix, indexed like `probabilities`.
    pub fidelities: Vec<f64>,
    /// Pauli error probabilities; entry 0 is the identity.
    pub probabilities: Vec<(PauliString, f64)>,
    /// Largest off-diagonal magnitude left after twirling; zero up to rounding.
    pub max_offdiagonal: f64,
}

const TP_TOLERANCE: f64 = 1e-10;

fn pauli_basis(n: usize) -> Result<Vec<PauliString>> {
    let dim = 1usize << n;
    (0..dim * dim)
        .map(|k| PauliString::from_masks(n, (k % dim) as u128, (k / dim) as u128, false))
        .collect()
}

/// Dense matrix of a Hermitian Pauli string, qubit 0 as the least significant index bit.
pub fn pauli_matrix(p: &PauliString) -> DMatrix<Complex64> {
    let dim = 1usize << p.n();
    let (x, z) = (p.x_mask() as usize, p.z_mask() as usize);
    let y_count = (x & z).count_ones();
    let base = Complex64::i().powu(y_count) * p.sign();
    let mut m = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let s = if (j & z).count_ones() % 2 == 1 {
            -1.0
        } else {
            1.0
        };
        m[(j ^ x, j)] = base * s;
    }
    m
}

/// Twirls the channel given by Kraus operators over the Pauli group.
pub fn twirl_channel_dense(kraus: &[DMatrix<Complex64>]) -> Result<TwirledChannel> {
    let first = kraus
        .first()
        .ok_or_else(|| Error::invalid("kraus", "at least one operator required"))?;
    let dim = first.nrows();
    if !dim.is_power_of_two() || dim < 2 {
        return Err(Error::invalid(
            "kraus",
            format!("dimension {dim} is not a qubit register"),
        ));
    }
    let n = dim.trailing_zeros() as usize;
    if n > 2 {
        return Err(Error::SizeLimit {
            what: "channel twirl",
            n,
            limit: 2,
        });
    }
    if kraus.iter().any(|k| k.nrows() != dim || k.ncols() != dim) {
        return Err(Error::invalid(
            "kraus",
            "operators must share one square shape",
        ));
    }
    let mut sum = DMatrix::<Complex64>::zeros(dim, dim);
    for k in kraus {
        sum += k.adjoint() * k;
    }
    let deviation = (sum - DMatrix::<Complex64>::identity(dim, dim))
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    if deviation > TP_TOLERANCE {
        return Err(Error::NotTracePreserving(deviation));
    }

    let basis = pauli_basis(n)?;
    let mats: Vec<_> = basis.iter().map(pauli_matrix).collect();
    let m = basis.len();
    // R[a][b] = tr(P_a Λ(P_b)) / d
    let mut ptm = vec![vec![0.0; m]; m];
    for (b, pb) in mats.iter().enumerate() {
        let mut out = DMatrix::<Complex64>::zeros(dim, dim);
        for k in kraus {
            out += k * pb * k.adjoint();
        }
        for (a, pa) in mats.iter().enumerate() {
            ptm[a][b] = (pa * &out).trace().re / dim as f64;
        }
    }
    let sym = |a: usize, b: usize| -> Result<f64> {
        Ok(if commutes(&basis[a], &basis[b])? {
            1.0
        } else {
            -1.0
        })
    };
    let mut twirled = vec![vec![0.0; m]; m];
    for t in 0..m {
        for a in 0..m {
            for b in 0..m {
                twirled[a][b] += sym(t, a)? * sym(t, b)? * ptm[a][b] / m as f64;
            }
        }
    }
    let mut max_offdiagonal = 0.0f64;
    for (a, row) in twirled.iter().enumerate() {
        for (b, v) in row.iter().enumerate() {
            if a != b {
                max_offdiagonal = max_offdiagonal.max(v.abs());
            }
        }
    }
    let fidelities: Vec<f64> = (0..m).map(|a| twirled[a][a]).collect();
    let mut probabilities = Vec::with_capacity(m);
    for (b, &pauli) in basis.iter().enumerate() {
        let mut acc = 0.0;
        for (a, f) in fidelities.iter().enumerate() {
            acc += sym(a, b)? * f;
        }
        probabilities.push((pauli, acc / m as f64));
    }
    Ok(TwirledChannel {
        n,
        fidelities,
        probabilities,
        max_offdiagonal,
    })
}
