//! Layered circuits: noiseless single-qubit layers alternating with layers of
//! disjoint CNOTs, each CNOT layer optionally carrying a Pauli-Lindblad model.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{PauliLindbladModel, PerCnotNoise};
use crate::pauli::{conjugate_through_cnot_layer, validate_cnot_pairs, Pauli, PauliString};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate1q {
    I,
    H,
    X,
    Y,
    Z,
    S,
    Sdg,
    /// `exp(-i θ Z / 2)`
    Rz(f64),
    /// `exp(-i θ X / 2)`
    Rx(f64),
}

impl Gate1q {
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let (o, l) = (c(0.0, 0.0), c(1.0, 0.0));
        let r = std::f64::consts::FRAC_1_SQRT_2;
        match *self {
            Gate1q::I => [[l, o], [o, l]],
            Gate1q::H => [[c(r, 0.0), c(r, 0.0)], [c(r, 0.0), c(-r, 0.0)]],
            Gate1q::X => [[o, l], [l, o]],
            Gate1q::Y => [[o, c(0.0, -1.0)], [c(0.0, 1.0), o]],
            Gate1q::Z => [[l, o], [o, c(-1.0, 0.0)]],
            Gate1q::S => [[l, o], [o, c(0.0, 1.0)]],
            Gate1q::Sdg => [[l, o], [o, c(0.0, -1.0)]],
            Gate1q::Rz(t) => [
                [Complex64::from_polar(1.0, -t / 2.0), o],
                [o, Complex64::from_polar(1.0, t / 2.0)],
            ],
            Gate1q::Rx(t) => {
                let (s, co) = (t / 2.0).sin_cos();
                [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]
            }
        }
    }

    pub fn inverse(&self) -> Self {
        match *self {
            Gate1q::S => Gate1q::Sdg,
            Gate1q::Sdg => Gate1q::S,
            Gate1q::Rz(t) => Gate1q::Rz(-t),
            Gate1q::Rx(t) => Gate1q::Rx(-t),
            g => g,
        }
    }

    fn from_pauli(p: Pauli) -> Self {
        match p {
            Pauli::I => Gate1q::I,
            Pauli::X => Gate1q::X,
            Pauli::Y => Gate1q::Y,
            Pauli::Z => Gate1q::Z,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SingleQubitLayer {
    gates: Vec<(usize, Gate1q)>,
}

impl SingleQubitLayer {
    pub fn new(n: usize, gates: Vec<(usize, Gate1q)>) -> Result<Self> {
        let mut seen = vec![false; n];
        for &(q, _) in &gates {
            if q >= n {
                return Err(Error::QubitOutOfRange { index: q, n });
            }
            if seen[q] {
                return Err(Error::invalid(
                    "gates",
                    format!("qubit {q} appears twice in one layer"),
                ));
            }
            seen[q] = true;
        }
        Ok(Self { gates })
    }

    pub fn gates(&self) -> &[(usize, Gate1q)] {
        &self.gates
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnotLayer {
    pairs: Vec<(usize, usize)>,
    pub noise: Option<PauliLindbladModel>,
    pub class: Option<String>,
}

impl CnotLayer {
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Single(SingleQubitLayer),
    Cnot(CnotLayer),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayeredCircuit {
    n: usize,
    layers: Vec<Layer>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct CircuitStats {
    pub cnot_count: usize,
    pub cnot_depth: usize,
    /// CNOT count per layer-class label; unlabeled layers appear under `""`.
    pub per_class: BTreeMap<String, usize>,
}

/// Record of one twirl insertion: Pauli `before` is prepended to a CNOT layer
/// and `after` is appended.
#[derive(Debug, Clone, PartialEq)]
pub struct TwirlRecord {
    pub layer: usize,
    pub before: PauliString,
    pub after: PauliString,
}

/// Net sign picked up by a twirled circuit relative to the original.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TwirlLedger {
    pub negative: bool,
    pub records: Vec<TwirlRecord>,
}

impl TwirlLedger {
    pub fn sign(&self) -> f64 {
        if self.negative {
            -1.0
        } else {
            1.0
        }
    }
}

impl LayeredCircuit {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            layers: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn push_single(&mut self, gates: Vec<(usize, Gate1q)>) -> Result<&mut Self> {
        let layer = SingleQubitLayer::new(self.n, gates)?;
        self.layers.push(Layer::Single(layer));
        Ok(self)
    }

    /// Applies `gate` to every qubit in one layer.
    pub fn push_all(&mut self, gate: Gate1q) -> Result<&mut Self> {
        self.push_single((0..self.n).map(|q| (q, gate)).collect())
    }

    pub fn push_cnot(
        &mut self,
        pairs: Vec<(usize, usize)>,
        noise: Option<PauliLindbladModel>,
        class: Option<String>,
    ) -> Result<&mut Self> {
        validate_cnot_pairs(self.n, &pairs)?;
        if let Some(model) = &noise {
            if model.n() != self.n {
                return Err(Error::SizeMismatch {
                    expected: self.n,
                    found: model.n(),
                });
            }
        }
        self.layers.push(Layer::Cnot(CnotLayer {
            pairs,
            noise,
            class,
        }));
        Ok(self)
    }

    pub fn push_layer(&mut self, layer: Layer) -> Result<&mut Self> {
        match layer {
            Layer::Single(s) => self.push_single(s.gates),
            Layer::Cnot(c) => self.push_cnot(c.pairs, c.noise, c.class),
        }
    }

    pub fn compose(&self, other: &LayeredCircuit) -> Result<LayeredCircuit> {
        if self.n != other.n {
            return Err(Error::SizeMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        let mut out = self.clone();
        out.layers.extend(other.layers.iter().cloned());
        Ok(out)
    }

    /// Inverse unitary: layers reversed, gates inverted. Attached noise stays on its CNOT layer.
    pub fn inverse(&self) -> LayeredCircuit {
        let layers = self
            .layers
            .iter()
            .rev()
            .map(|l| match l {
                Layer::Single(s) => Layer::Single(SingleQubitLayer {
                    gates: s.gates.iter().map(|&(q, g)| (q, g.inverse())).collect(),
                }),
                Layer::Cnot(c) => Layer::Cnot(c.clone()),
            })
            .collect();
        LayeredCircuit { n: self.n, layers }
    }

    pub fn without_noise(&self) -> LayeredCircuit {
        let mut out = self.clone();
        for l in &mut out.layers {
            if let Layer::Cnot(c) = l {
                c.noise = None;
            }
        }
        out
    }

    /// Replaces the noise on every CNOT layer with the per-CNOT model.
    pub fn with_cnot_noise(&self, noise: &PerCnotNoise) -> Result<LayeredCircuit> {
        let mut out = self.clone();
        for l in &mut out.layers {
            if let Layer::Cnot(c) = l {
                c.noise = Some(noise.model_for(self.n, &c.pairs)?);
            }
        }
        Ok(out)
    }

    /// Attaches `model` to every CNOT layer, replacing what was there.
    pub fn with_layer_noise(&self, model: &PauliLindbladModel) -> Result<LayeredCircuit> {
        if model.n() != self.n {
            return Err(Error::SizeMismatch {
                expected: self.n,
                found: model.n(),
            });
        }
        let mut out = self.clone();
        for l in &mut out.layers {
            if let Layer::Cnot(c) = l {
                c.noise = Some(model.clone());
            }
        }
        Ok(out)
    }

    pub fn noisy_layers(&self) -> impl Iterator<Item = &PauliLindbladModel> {
        self.layers.iter().filter_map(|l| match l {
            Layer::Cnot(CnotLayer { noise: Some(m), .. }) => Some(m),
            _ => None,
        })
    }

    /// Product of the per-layer noise strengths; layers without a model count as noiseless.
    pub fn total_gamma(&self) -> f64 {
        self.noisy_layers().map(PauliLindbladModel::gamma).product()
    }

    /// Probability that no noise term fires anywhere in the circuit.
    pub fn no_error_probability(&self) -> f64 {
        self.noisy_layers()
            .map(PauliLindbladModel::no_error_probability)
            .product()
    }

    pub fn stats(&self) -> CircuitStats {
        let mut stats = CircuitStats::default();
        for l in &self.layers {
            if let Layer::Cnot(c) = l {
                if c.pairs.is_empty() {
                    continue;
                }
                stats.cnot_depth += 1;
                stats.cnot_count += c.pairs.len();
                *stats
                    .per_class
                    .entry(c.class.clone().unwrap_or_default())
                    .or_default() += c.pairs.len();
            }
        }
        stats
    }

    /// Wraps every CNOT layer `U` in a uniformly random Pauli `P` and its
    /// propagated partner `Q = U P U†`, so that `Q U P = ±U`.
    pub fn insert_pauli_twirl<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
    ) -> Result<(LayeredCircuit, TwirlLedger)> {
        if self.n > crate::pauli::MAX_PAULI_QUBITS {
            return Err(Error::TooManyQubits {
                n: self.n,
                max: crate::pauli::MAX_PAULI_QUBITS,
            });
        }
        let mut out = LayeredCircuit::new(self.n);
        let mut ledger = TwirlLedger::default();
        let full = if self.n == 128 {
            u128::MAX
        } else {
            (1u128 << self.n) - 1
        };
        for (i, layer) in self.layers.iter().enumerate() {
            let Layer::Cnot(c) = layer else {
                out.layers.push(layer.clone());
                continue;
            };
            let x = rng.random::<u128>() & full;
            let z = rng.random::<u128>() & full;
            let before = PauliString::from_masks(self.n, x, z, false)?;
            let conjugated = conjugate_through_cnot_layer(&before, &c.pairs)?;
            ledger.negative ^= conjugated.is_negative();
            let after = conjugated.unsigned();
            if !before.is_identity() {
                out.layers.push(pauli_layer(&before));
            }
            out.layers.push(layer.clone());
            if !after.is_identity() {
                out.layers.push(pauli_layer(&after));
            }
            ledger.records.push(TwirlRecord {
                layer: i,
                before,
                after,
            });
        }
        Ok((out, ledger))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&CircuitFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CircuitFile = serde_json::from_str(text)?;
        file.into_circuit(None)
    }

    /// Loads a circuit file; noise given as a file name is resolved next to the circuit.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: CircuitFile = serde_json::from_str(&text)?;
        file.into_circuit(path.parent())
    }
}

fn pauli_layer(p: &PauliString) -> Layer {
    Layer::Single(SingleQubitLayer {
        gates: p
            .factors()
            .into_iter()
            .map(|(q, op)| (q, Gate1q::from_pauli(op)))
            .collect(),
    })
}

#[derive(Serialize, Deserialize)]
struct CircuitFile {
    n: usize,
    layers: Vec<LayerSpec>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type")]
enum LayerSpec {
    #[serde(rename = "1q")]
    Single { gates: Vec<GateSpec> },
    #[serde(rename = "cnot")]
    Cnot {
        pairs: Vec<(usize, usize)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        noise: Option<NoiseRef>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        class: Option<String>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NoiseRef {
    Inline(PauliLindbladModel),
    File(String),
}

#[derive(Serialize, Deserialize)]
struct GateSpec {
    qubit: usize,
    gate: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    angle: Option<f64>,
}

impl GateSpec {
    fn to_gate(&self) -> Result<Gate1q> {
        let angle = || {
            self.angle.ok_or_else(|| {
                Error::invalid("angle", format!("gate {} needs an angle", self.gate))
            })
        };
        Ok(match self.gate.to_ascii_lowercase().as_str() {
            "i" | "id" => Gate1q::I,
            "h" => Gate1q::H,
            "x" => Gate1q::X,
            "y" => Gate1q::Y,
            "z" => Gate1q::Z,
            "s" => Gate1q::S,
            "sdg" => Gate1q::Sdg,
            "rz" => Gate1q::Rz(angle()?),
            "rx" => Gate1q::Rx(angle()?),
            other => return Err(Error::invalid("gate", format!("unknown gate {other:?}"))),
        })
    }

    fn from_gate(qubit: usize, g: Gate1q) -> Self {
        let (name, angle) = match g {
            Gate1q::I => ("i", None),
            Gate1q::H => ("h", None),
            Gate1q::X => ("x", None),
            Gate1q::Y => ("y", None),
            Gate1q::Z => ("z", None),
            Gate1q::S => ("s", None),
            Gate1q::Sdg => ("sdg", None),
            Gate1q::Rz(t) => ("rz", Some(t)),
            Gate1q::Rx(t) => ("rx", Some(t)),
        };
        GateSpec {
            qubit,
            gate: name.to_string(),
            angle,
        }
    }
}

impl From<&LayeredCircuit> for CircuitFile {
    fn from(c: &LayeredCircuit) -> Self {
        CircuitFile {
            n: c.n,
            layers: c
                .layers
                .iter()
                .map(|l| match l {
                    Layer::Single(s) => LayerSpec::Single {
                        gates: s
                            .gates
                            .iter()
                            .map(|&(q, g)| GateSpec::from_gate(q, g))
                            .collect(),
                    },
                    Layer::Cnot(cl) => LayerSpec::Cnot {
                        pairs: cl.pairs.clone(),
                        noise: cl.noise.clone().map(NoiseRef::Inline),
                        class: cl.class.clone(),
                    },
                })
                .collect(),
        }
    }
}

impl CircuitFile {
    fn into_circuit(self, base: Option<&Path>) -> Result<LayeredCircuit> {
        let mut c = LayeredCircuit::new(self.n);
        for spec in self.layers {
            match spec {
                LayerSpec::Single { gates } => {
                    let gates = gates
                        .iter()
                        .map(|g| Ok((g.qubit, g.to_gate()?)))
                        .collect::<Result<Vec<_>>>()?;
                    c.push_single(gates)?;
                }
                LayerSpec::Cnot {
                    pairs,
                    noise,
                    class,
                } => {
                    let noise = match noise {
                        None => None,
                        Some(NoiseRef::Inline(m)) => Some(m),
                        Some(NoiseRef::File(name)) => {
                            let path = base.map(|b| b.join(&name)).unwrap_or_else(|| name.into());
                            Some(PauliLindbladModel::load(&path)?)
                        }
                    };
                    c.push_cnot(pairs, noise, class)?;
                }
            }
        }
        Ok(c)
    }
}
