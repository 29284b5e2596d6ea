//! Exact and sampled simulation of layered circuits. Noise attached to a CNOT
//! layer acts before the layer's unitary.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::{Arc, RwLock};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{Layer, LayeredCircuit};
use crate::error::{Error, Result};
use crate::noise::{PauliLindbladModel, PerCnotNoise};
use crate::rng::{cumulative, draw_index, par_blocks, stream};
use crate::state::{DensityMatrix, StateVector};

/// Bitstring label for a basis index, qubit 0 rightmost.
pub fn bitstring(index: u128, n: usize) -> String {
    (0..n)
        .rev()
        .map(|q| if (index >> q) & 1 == 1 { '1' } else { '0' })
        .collect()
}

pub fn parse_bitstring(s: &str) -> Result<u128> {
    if s.is_empty() || s.len() > 128 {
        return Err(Error::invalid(
            "bitstring",
            format!("length {} not in 1..=128", s.len()),
        ));
    }
    s.chars().try_fold(0u128, |acc, ch| match ch {
        '0' => Ok(acc << 1),
        '1' => Ok((acc << 1) | 1),
        _ => Err(Error::invalid(
            "bitstring",
            format!("unexpected character {ch:?} in {s:?}"),
        )),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Ideal,
    Noisy,
    Pec,
    External,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub n: usize,
    pub counts: BTreeMap<u128, u64>,
    pub shots: u64,
    pub seed: Option<u64>,
    pub provenance: Provenance,
}

impl SampleSet {
    pub fn from_counts(
        n: usize,
        counts: BTreeMap<u128, u64>,
        seed: Option<u64>,
        provenance: Provenance,
    ) -> Self {
        let shots = counts.values().sum();
        Self {
            n,
            counts,
            shots,
            seed,
            provenance,
        }
    }

    pub fn frequency(&self, index: u128) -> f64 {
        self.counts.get(&index).copied().unwrap_or(0) as f64 / self.shots as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bitstring,count\n");
        for (&k, &c) in &self.counts {
            let _ = writeln!(out, "{},{}", bitstring(k, self.n), c);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        match lines.next() {
            Some("bitstring,count") => {}
            other => {
                return Err(Error::invalid(
                    "csv header",
                    format!("expected \"bitstring,count\", found {other:?}"),
                ))
            }
        }
        let mut n = None;
        let mut counts = BTreeMap::new();
        for line in lines {
            let (b, c) = line
                .split_once(',')
                .ok_or_else(|| Error::invalid("csv row", format!("missing comma in {line:?}")))?;
            let b = b.trim();
            if *n.get_or_insert(b.len()) != b.len() {
                return Err(Error::invalid(
                    "bitstring",
                    format!("{b:?} has inconsistent length"),
                ));
            }
            let count: u64 = c.trim().parse().map_err(|_| {
                Error::invalid("count", format!("{c:?} is not a nonnegative integer"))
            })?;
            *counts.entry(parse_bitstring(b)?).or_insert(0) += count;
        }
        let n = n.ok_or_else(|| Error::invalid("csv", "no samples"))?;
        Ok(Self::from_counts(n, counts, None, Provenance::External))
    }
}

/// Full output distribution over `2^n` basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    n: usize,
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(n: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != 1usize << n {
            return Err(Error::SizeMismatch {
                expected: 1 << n,
                found: probs.len(),
            });
        }
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|&p| p < -1e-12 || !p.is_finite()) || (total - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(
                "probabilities",
                format!("not a distribution (total {total})"),
            ));
        }
        Ok(Self { n, probs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn expectation(&self, f: impl Fn(u128) -> f64) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, &p)| p * f(i as u128))
            .sum()
    }

    pub fn total_variation(&self, other: &Distribution) -> Result<f64> {
        if self.n != other.n {
            return Err(Error::SizeMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(0.5
            * self
                .probs
                .iter()
                .zip(&other.probs)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }

    pub fn sample(&self, shots: u64, seed: u64) -> SampleSet {
        let cdf = cumulative(&self.probs);
        let blocks = par_blocks(shots, seed, |rng, k| {
            let mut counts = BTreeMap::new();
            for _ in 0..k {
                *counts
                    .entry(draw_index(&cdf, rng.random()) as u128)
                    .or_insert(0u64) += 1;
            }
            counts
        });
        SampleSet::from_counts(self.n, merge_counts(blocks), Some(seed), Provenance::Noisy)
    }

    /// Bitstring to probability, zero entries omitted.
    pub fn to_json(&self) -> Result<String> {
        let map: BTreeMap<String, f64> = self
            .probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, &p)| (bitstring(i as u128, self.n), p))
            .collect();
        Ok(serde_json::to_string_pretty(&map)?)
    }
}

fn merge_counts(blocks: Vec<BTreeMap<u128, u64>>) -> BTreeMap<u128, u64> {
    let mut out = BTreeMap::new();
    for b in blocks {
        for (k, c) in b {
            *out.entry(k).or_insert(0) += c;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FidelityBound {
    /// Upper CVaR of the all-zero indicator; an upper bound on `|⟨0|V†U|0⟩|²`.
    pub bound: f64,
    /// Binomial standard error of the bound before clamping to 1.
    pub stderr: f64,
    pub zero_frequency: f64,
    pub alpha: f64,
    pub kept: u64,
}

/// Simulation backend with explicit size limits. Requests beyond a limit are
/// refused with [`Error::SizeLimit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Simulator {
    pub statevector_limit: usize,
    pub dense_limit: usize,
}

impl Default for Simulator {
    fn default() -> Self {
        Self {
            statevector_limit: 24,
            dense_limit: 10,
        }
    }
}

/// Indices into a circuit's layers plus the Pauli applied before each, identity entries omitted.
pub(crate) type TrajectoryKey = Vec<(u32, u128, u128)>;

const CACHE_AMPLITUDES: usize = 1 << 22;

/// Statevector trajectories with memoized output distributions per error pattern.
pub(crate) struct TrajectoryEngine<'a> {
    circuit: &'a LayeredCircuit,
    noisy: Vec<(u32, &'a PauliLindbladModel)>,
    cache: RwLock<HashMap<TrajectoryKey, Arc<Vec<f64>>>>,
    max_entries: usize,
}

impl<'a> TrajectoryEngine<'a> {
    fn new(circuit: &'a LayeredCircuit) -> Self {
        let noisy = circuit
            .layers()
            .iter()
            .enumerate()
            .filter_map(|(i, l)| match l {
                Layer::Cnot(c) => c.noise.as_ref().map(|m| (i as u32, m)),
                _ => None,
            })
            .collect();
        Self {
            circuit,
            noisy,
            cache: RwLock::new(HashMap::new()),
            max_entries: (CACHE_AMPLITUDES >> circuit.n()).max(1),
        }
    }

    pub(crate) fn noisy_layers(&self) -> &[(u32, &'a PauliLindbladModel)] {
        &self.noisy
    }

    fn cdf_for(&self, key: &TrajectoryKey) -> Result<Arc<Vec<f64>>> {
        if let Some(hit) = self.cache.read().expect("cache lock").get(key) {
            return Ok(hit.clone());
        }
        let mut psi = StateVector::zero(self.circuit.n())?;
        let mut next = key.iter().peekable();
        for (i, layer) in self.circuit.layers().iter().enumerate() {
            if let Some(&&(li, x, z)) = next.peek() {
                if li as usize == i {
                    psi.apply_pauli_masks(x as usize, z as usize);
                    next.next();
                }
            }
            psi.apply_layer(layer)?;
        }
        let cdf = Arc::new(cumulative(&psi.probabilities()));
        let mut cache = self.cache.write().expect("cache lock");
        if cache.len() < self.max_entries {
            cache.insert(key.clone(), cdf.clone());
        }
        Ok(cdf)
    }

    /// Runs `shots` trajectories. `sample_key` fills the error pattern and
    /// returns the shot weight; `accumulate` folds `(outcome, weight)` into a
    /// per-block accumulator. Blocks come back in order.
    pub(crate) fn run<A, I, S, G>(
        &self,
        shots: u64,
        seed: u64,
        init: I,
        sample_key: S,
        accumulate: G,
    ) -> Result<Vec<A>>
    where
        A: Send,
        I: Fn() -> A + Sync,
        S: Fn(&Self, &mut ChaCha8Rng, &mut TrajectoryKey) -> f64 + Sync,
        G: Fn(&mut A, u128, f64) + Sync,
    {
        par_blocks(shots, seed, |rng, k| {
            let mut acc = init();
            let mut key = TrajectoryKey::new();
            for _ in 0..k {
                key.clear();
                let weight = sample_key(self, rng, &mut key);
                let cdf = self.cdf_for(&key)?;
                let outcome = draw_index(&cdf, rng.random()) as u128;
                accumulate(&mut acc, outcome, weight);
            }
            Ok(acc)
        })
        .into_iter()
        .collect()
    }
}

impl Simulator {
    fn check_statevector(&self, n: usize) -> Result<()> {
        if n > self.statevector_limit {
            return Err(Error::SizeLimit {
                what: "statevector simulation",
                n,
                limit: self.statevector_limit,
            });
        }
        Ok(())
    }

    fn check_dense(&self, n: usize) -> Result<()> {
        if n > self.dense_limit {
            return Err(Error::SizeLimit {
                what: "density-matrix simulation",
                n,
                limit: self.dense_limit,
            });
        }
        Ok(())
    }

    pub fn statevector(&self, circuit: &LayeredCircuit) -> Result<StateVector> {
        self.check_statevector(circuit.n())?;
        let mut psi = StateVector::zero(circuit.n())?;
        psi.apply_circuit(circuit)?;
        Ok(psi)
    }

    pub fn ideal_distribution(&self, circuit: &LayeredCircuit) -> Result<Distribution> {
        let psi = self.statevector(circuit)?;
        Distribution::new(circuit.n(), psi.probabilities())
    }

    /// Exact noisy density matrix, with each Pauli term applied as a channel.
    pub fn density_matrix(&self, circuit: &LayeredCircuit) -> Result<DensityMatrix> {
        self.density_matrix_with(circuit, |term_w| term_w)
    }

    /// Density evolution where each noise term of rate `w` is replaced by a
    /// Pauli channel with identity weight `map(w)`.
    pub(crate) fn density_matrix_with(
        &self,
        circuit: &LayeredCircuit,
        map: impl Fn(f64) -> f64,
    ) -> Result<DensityMatrix> {
        self.check_dense(circuit.n())?;
        let mut rho = DensityMatrix::zero(circuit.n())?;
        for layer in circuit.layers() {
            if let Layer::Cnot(c) = layer {
                if let Some(m) = &c.noise {
                    for t in m.terms() {
                        rho.apply_pauli_channel(&t.pauli, map(t.w()));
                    }
                }
            }
            rho.apply_unitary_layer(layer)?;
        }
        Ok(rho)
    }

    pub fn noisy_distribution_exact(&self, circuit: &LayeredCircuit) -> Result<Distribution> {
        let rho = self.density_matrix(circuit)?;
        Distribution::new(
            circuit.n(),
            rho.diagonal().into_iter().map(|p| p.max(0.0)).collect(),
        )
    }

    pub fn sample_ideal(
        &self,
        circuit: &LayeredCircuit,
        shots: u64,
        seed: u64,
    ) -> Result<SampleSet> {
        let mut s = self.ideal_distribution(circuit)?.sample(shots, seed);
        s.provenance = Provenance::Ideal;
        Ok(s)
    }

    pub(crate) fn engine<'a>(&self, circuit: &'a LayeredCircuit) -> Result<TrajectoryEngine<'a>> {
        self.check_statevector(circuit.n())?;
        Ok(TrajectoryEngine::new(circuit))
    }

    /// Samples the noisy circuit by Monte Carlo trajectories.
    pub fn sample_noisy(
        &self,
        circuit: &LayeredCircuit,
        shots: u64,
        seed: u64,
    ) -> Result<SampleSet> {
        let engine = self.engine(circuit)?;
        let blocks = engine.run(
            shots,
            seed,
            BTreeMap::<u128, u64>::new,
            |e, rng, key| {
                for &(li, model) in e.noisy_layers() {
                    let (x, z) = model.sample_masks(rng);
                    if x | z != 0 {
                        key.push((li, x, z));
                    }
                }
                1.0
            },
            |acc, outcome, _| *acc.entry(outcome).or_insert(0) += 1,
        )?;
        Ok(SampleSet::from_counts(
            circuit.n(),
            merge_counts(blocks),
            Some(seed),
            Provenance::Noisy,
        ))
    }

    /// Samples `twirls` independent Pauli-twirled copies of the circuit with
    /// `shots_per_twirl` shots each. Twirl `i` draws its Paulis and its shot
    /// seed from substream `i`, so the result is fixed by `seed`.
    pub fn sample_twirled(
        &self,
        circuit: &LayeredCircuit,
        twirls: u64,
        shots_per_twirl: u64,
        seed: u64,
    ) -> Result<SampleSet> {
        self.check_statevector(circuit.n())?;
        let parts: Vec<BTreeMap<u128, u64>> = (0..twirls)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(seed, i);
                let (twirled, _) = circuit.insert_pauli_twirl(&mut rng)?;
                let s = self.sample_noisy(&twirled, shots_per_twirl, rng.random())?;
                Ok(s.counts)
            })
            .collect::<Result<_>>()?;
        Ok(SampleSet::from_counts(
            circuit.n(),
            merge_counts(parts),
            Some(seed),
            Provenance::Noisy,
        ))
    }

    /// Upper bound on `|⟨0|V†U|0⟩|²` from the noisy `V†U` circuit: the upper
    /// CVaR at `alpha` of the indicator that all qubits read zero.
    pub fn fidelity_upper_bound(
        &self,
        u: &LayeredCircuit,
        v: &LayeredCircuit,
        noise: Option<&PerCnotNoise>,
        shots: u64,
        alpha: f64,
        seed: u64,
    ) -> Result<FidelityBound> {
        let mut circuit = u.compose(&v.inverse())?;
        if let Some(noise) = noise {
            circuit = circuit.with_cnot_noise(noise)?;
        }
        let samples = self.sample_noisy(&circuit, shots, seed)?;
        let values =
            crate::cvar::ValueSamples::from_sample_set(
                &samples,
                |x| if x == 0 { 1.0 } else { 0.0 },
            )?;
        let report = crate::cvar::cvar_empirical(&values, alpha, crate::cvar::Side::Upper)?;
        let q = samples.frequency(0);
        let stderr = (shots as f64 * q * (1.0 - q)).sqrt() / report.kept as f64;
        Ok(FidelityBound {
            bound: report.estimate,
            stderr,
            zero_frequency: q,
            alpha,
            kept: report.kept,
        })
    }
}
