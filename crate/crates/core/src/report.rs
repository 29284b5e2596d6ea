//! Overhead arithmetic from layer fidelities, hardware thresholds, and bound
//! reports over sampled objective values.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::LayeredCircuit;

use crate::cvar::{
    calibrate_alpha, cdf_csv, cvar_empirical, gamma_prime_per_cnot, Calibration, Side, ValueSamples,
};
use crate::error::{Error, Result};
use crate::problems::{IsingPolynomial, Sense};
use crate::rng::stream;
use crate::sim::{SampleSet, Simulator};

/// Measured fidelity of one CNOT layer class and the number of CNOTs it holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerFidelity {
    pub lf: f64,
    pub cnots: u64,
}

impl FromStr for LayerFidelity {
    type Err = Error;

    /// `"<lf>:<cnots>"`, e.g. `0.7686:20`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid("lf", format!("expected <fidelity>:<cnot count>, got {s:?}"));
        let (lf, n) = s.split_once(':').ok_or_else(bad)?;
        Ok(Self {
            lf: lf.trim().parse().map_err(|_| bad())?,
            cnots: n.trim().parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Overheads {
    pub layers: Vec<LayerFidelity>,
    /// Geometric mean fidelity per CNOT.
    pub f_cx: f64,
    /// Error per layered gate, `1 − F_CX`.
    pub eplg: f64,
    /// `F_CX^{−2}`
    pub gamma_cx: f64,
    pub cnots: u64,
    /// `F_CX^{−#CNOT}`
    pub sqrt_gamma: f64,
    /// `1/√γ`
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_prime: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_prime_cx: Option<f64>,
}

pub fn derive_overheads(layers: &[LayerFidelity], cnots: u64) -> Result<Overheads> {
    if layers.is_empty() {
        return Err(Error::invalid("lf", "at least one layer fidelity required"));
    }
    for l in layers {
        if !(l.lf > 0.0 && l.lf <= 1.0) {
            return Err(Error::invalid(
                "lf",
                format!("layer fidelity must lie in (0, 1], got {}", l.lf),
            ));
        }
        if l.cnots == 0 {
            return Err(Error::invalid("lf", "each layer needs at least one CNOT"));
        }
    }
    let per_layer: u64 = layers.iter().map(|l| l.cnots).sum();
    let log_f = layers.iter().map(|l| l.lf.ln()).sum::<f64>() / per_layer as f64;
    let f_cx = log_f.exp();
    let sqrt_gamma = (-log_f * cnots as f64).exp();
    Ok(Overheads {
        layers: layers.to_vec(),
        f_cx,
        eplg: 1.0 - f_cx,
        gamma_cx: (-2.0 * log_f).exp(),
        cnots,
        sqrt_gamma,
        alpha: (log_f * cnots as f64).exp(),
        alpha_prime: None,
        gamma_prime_cx: None,
    })
}

impl Overheads {
    /// Adds the per-CNOT strength implied by a calibrated `α′`.
    pub fn with_calibration(mut self, alpha_prime: f64) -> Result<Self> {
        self.gamma_prime_cx = Some(gamma_prime_per_cnot(alpha_prime, self.cnots)?);
        self.alpha_prime = Some(alpha_prime);
        Ok(self)
    }

    pub fn to_table(&self) -> String {
        let mut rows: Vec<(String, String)> = self
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| {
                (
                    format!("LF[{}] ({} CNOTs)", i + 1, l.cnots),
                    format!("{:.6}", l.lf),
                )
            })
            .collect();
        rows.extend([
            ("F_CX".into(), format!("{:.6}", self.f_cx)),
            ("EPLG".into(), format!("{:.6}", self.eplg)),
            ("gamma_CX".into(), format!("{:.6}", self.gamma_cx)),
            ("#CNOT".into(), self.cnots.to_string()),
            ("sqrt(gamma)".into(), format!("{:.6e}", self.sqrt_gamma)),
            ("alpha".into(), format!("{:.6e}", self.alpha)),
        ]);
        if let (Some(a), Some(g)) = (self.alpha_prime, self.gamma_prime_cx) {
            rows.push(("alpha'".into(), format!("{a:.6e}")));
            rows.push(("gamma'_CX".into(), format!("{g:.6}")));
        }
        render_table(&rows)
    }
}

/// Minimum layer fidelity for depth-`p` QAOA to beat random sampling: `2^{−1/(3p)}`.
pub fn min_layer_fidelity(p: u32) -> Result<f64> {
    if p == 0 {
        return Err(Error::invalid("p", "depth must be at least 1"));
    }
    Ok(2f64.powf(-1.0 / (3.0 * p as f64)))
}

/// Per-CNOT version of [`min_layer_fidelity`] for dense layers of `n/2` CNOTs: `2^{−2/(3pn)}`.
pub fn min_cnot_fidelity(p: u32, n: u32) -> Result<f64> {
    if p == 0 {
        return Err(Error::invalid("p", "depth must be at least 1"));
    }
    if n < 2 {
        return Err(Error::invalid("n", "need at least 2 qubits"));
    }
    Ok(2f64.powf(-2.0 / (3.0 * p as f64 * n as f64)))
}

/// Cost of reaching noise-free quality three ways for one noise strength `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverheadLadder {
    /// Shots multiplier for CVaR bounds from noisy samples.
    pub sqrt_gamma: f64,
    /// Inverse of the PEC sampling-distribution lower bound.
    pub gamma: f64,
    /// Variance multiplier of PEC expectation estimates.
    pub gamma_squared: f64,
}

impl OverheadLadder {
    pub fn new(gamma: f64) -> Self {
        Self {
            sqrt_gamma: gamma.sqrt(),
            gamma,
            gamma_squared: gamma * gamma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub n: usize,
    pub shots: u64,
    pub alpha: f64,
    pub kept: u64,
    pub sense: Sense,
    pub noisy_mean: f64,
    pub lower_cvar: f64,
    pub upper_cvar: f64,
    /// CVaR on the optimistic side of the sense: upper when maximizing, lower when minimizing.
    pub cvar_bound: f64,
    pub best_sample: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_within_bounds: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimum: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_cvar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_best: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration: Option<Calibration>,
}

/// Summarizes noisy samples of `poly` at level `alpha`. Returns the report and
/// the CDF of the sampled values as CSV.
pub fn bound_report(
    samples: &SampleSet,
    poly: &IsingPolynomial,
    alpha: f64,
    reference: Option<f64>,
    optimum: Option<f64>,
    cnots: Option<u64>,
) -> Result<(BoundReport, String)> {
    if samples.n != poly.n() {
        return Err(Error::SizeMismatch {
            expected: poly.n(),
            found: samples.n,
        });
    }
    let values = ValueSamples::from_sample_set(samples, |x| poly.evaluate_bits(x))?;
    let lower = cvar_empirical(&values, alpha, Side::Lower)?;
    let upper = cvar_empirical(&values, alpha, Side::Upper)?;
    let (side, cvar_bound, best_sample) = match poly.sense() {
        Sense::Maximize => (Side::Upper, upper.estimate, values.max()),
        Sense::Minimize => (Side::Lower, lower.estimate, values.min()),
    };
    let ratio = |v: f64| optimum.filter(|&o| o != 0.0).map(|o| v / o);
    let calibration = reference
        .map(|r| calibrate_alpha(&values, r, side, cnots))
        .transpose()?;
    let report = BoundReport {
        n: samples.n,
        shots: samples.shots,
        alpha,
        kept: lower.kept,
        sense: poly.sense(),
        noisy_mean: values.mean(),
        lower_cvar: lower.estimate,
        upper_cvar: upper.estimate,
        cvar_bound,
        best_sample,
        reference,
        reference_within_bounds: reference.map(|r| lower.estimate <= r && r <= upper.estimate),
        optimum,
        ratio_mean: ratio(values.mean()),
        ratio_cvar: ratio(cvar_bound),
        ratio_best: ratio(best_sample),
        calibration,
    };
    Ok((report, cdf_csv(&values)))
}

impl BoundReport {
    pub fn to_table(&self) -> String {
        let mut rows: Vec<(String, String)> = vec![
            ("qubits".into(), self.n.to_string()),
            ("shots".into(), self.shots.to_string()),
            ("alpha".into(), format!("{:.6e}", self.alpha)),
            ("kept samples".into(), self.kept.to_string()),
            ("noisy mean".into(), format!("{:.6}", self.noisy_mean)),
            ("lower CVaR".into(), format!("{:.6}", self.lower_cvar)),
            ("upper CVaR".into(), format!("{:.6}", self.upper_cvar)),
            ("best sample".into(), format!("{:.6}", self.best_sample)),
        ];
        let opt = |label: &str, v: Option<f64>, rows: &mut Vec<(String, String)>| {
            if let Some(v) = v {
                rows.push((label.into(), format!("{v:.6}")));
            }
        };
        opt("noise-free reference", self.reference, &mut rows);
        if let Some(b) = self.reference_within_bounds {
            rows.push(("reference within bounds".into(), b.to_string()));
        }
        opt("optimum", self.optimum, &mut rows);
        opt("ratio (mean)", self.ratio_mean, &mut rows);
        opt("ratio (CVaR)", self.ratio_cvar, &mut rows);
        opt("ratio (best sample)", self.ratio_best, &mut rows);
        if let Some(c) = &self.calibration {
            rows.push(("alpha'".into(), format!("{:.6e}", c.alpha)));
            opt("gamma'_CX", c.gamma_prime_cx, &mut rows);
            if let Some(s) = c.saturation {
                rows.push(("calibration".into(), format!("saturated ({s:?})")));
            }
        }
        render_table(&rows)
    }
}

/// Noisy value distributions with and without Pauli twirling.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwirlComparison {
    pub untwirled_mean: f64,
    pub twirled_mean: f64,
    /// Total variation between the two empirical value distributions.
    pub total_variation: f64,
    /// Largest vertical gap between the two empirical CDFs.
    pub max_cdf_gap: f64,
    pub shots: u64,
    pub twirls: u64,
}

/// Samples `circuit` untwirled with `twirls · shots_per_twirl` shots and as
/// `twirls` random twirls, then compares the distributions of `h`.
pub fn twirl_compare(
    sim: &Simulator,
    circuit: &LayeredCircuit,
    h: impl Fn(u128) -> f64,
    twirls: u64,
    shots_per_twirl: u64,
    seed: u64,
) -> Result<(TwirlComparison, ValueSamples, ValueSamples)> {
    if twirls == 0 || shots_per_twirl == 0 {
        return Err(Error::invalid(
            "twirls",
            "need at least one twirl and one shot per twirl",
        ));
    }
    let shots = twirls
        .checked_mul(shots_per_twirl)
        .ok_or_else(|| Error::invalid("shots", "twirls × shots overflows"))?;
    let mut rng = stream(seed, 0);
    let plain = sim.sample_noisy(circuit, shots, rng.random())?;
    let twirled = sim.sample_twirled(circuit, twirls, shots_per_twirl, rng.random())?;
    let a = ValueSamples::from_sample_set(&plain, &h)?;
    let b = ValueSamples::from_sample_set(&twirled, &h)?;
    let (total_variation, max_cdf_gap) = compare_values(&a, &b);
    Ok((
        TwirlComparison {
            untwirled_mean: a.mean(),
            twirled_mean: b.mean(),
            total_variation,
            max_cdf_gap,
            shots,
            twirls,
        },
        a,
        b,
    ))
}

/// Total variation and Kolmogorov distance between two empirical laws.
pub fn compare_values(a: &ValueSamples, b: &ValueSamples) -> (f64, f64) {
    let mut merged: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    for (samples, first) in [(a, true), (b, false)] {
        let total = samples.total() as f64;
        for &(v, c) in samples.atoms() {
            let e = merged.entry(order_key(v)).or_default();
            if first {
                e.0 += c as f64 / total;
            } else {
                e.1 += c as f64 / total;
            }
        }
    }
    let (mut tv, mut gap, mut cdf) = (0.0, 0.0f64, 0.0);
    for (p, q) in merged.into_values() {
        tv += (p - q).abs();
        cdf += p - q;
        gap = gap.max(cdf.abs());
    }
    (0.5 * tv, gap)
}

/// Monotone map from finite `f64` to `u64`.
fn order_key(v: f64) -> u64 {
    let bits = (v + 0.0).to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | 1 << 63
    }
}

/// Two-column table with the first column padded to a common width.
pub fn render_table(rows: &[(String, String)]) -> String {
    let width = rows
        .iter()
        .map(|(k, _)| k.chars().count())
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    for (k, v) in rows {
        let _ = writeln!(out, "{k:<width$}  {v}");
    }
    out
}
