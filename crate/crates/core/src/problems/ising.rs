use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Polynomial in spins `z_i = 1 − 2 x_i` with up to cubic terms. Index tuples are stored sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolynomialFile", into = "PolynomialFile")]
pub struct IsingPolynomial {
    n: usize,
    sense: Sense,
    offset: f64,
    linear: BTreeMap<usize, f64>,
    quadratic: BTreeMap<(usize, usize), f64>,
    cubic: BTreeMap<(usize, usize, usize), f64>,
}

/// Largest register `diagonal` and brute force will enumerate.
pub const MAX_ENUMERATION_QUBITS: usize = 24;

impl IsingPolynomial {
    pub fn new(n: usize, sense: Sense) -> Result<Self> {
        if n == 0 || n > 128 {
            return Err(Error::invalid(
                "n",
                format!("variable count must lie in 1..=128, got {n}"),
            ));
        }
        Ok(Self {
            n,
            sense,
            offset: 0.0,
            linear: BTreeMap::new(),
            quadratic: BTreeMap::new(),
            cubic: BTreeMap::new(),
        })
    }

    fn check(&self, idx: &[usize], c: f64) -> Result<()> {
        if !c.is_finite() {
            return Err(Error::invalid("coefficient", format!("{c} is not finite")));
        }
        for (k, &i) in idx.iter().enumerate() {
            if i >= self.n {
                return Err(Error::QubitOutOfRange {
                    index: i,
                    n: self.n,
                });
            }
            if idx[..k].contains(&i) {
                return Err(Error::invalid("term", format!("index {i} repeated")));
            }
        }
        Ok(())
    }

    /// Adds to the coefficient of `z_v`.
    pub fn add_linear(&mut self, v: usize, c: f64) -> Result<()> {
        self.check(&[v], c)?;
        *self.linear.entry(v).or_insert(0.0) += c;
        Ok(())
    }

    pub fn add_quadratic(&mut self, i: usize, j: usize, c: f64) -> Result<()> {
        self.check(&[i, j], c)?;
        *self.quadratic.entry((i.min(j), i.max(j))).or_insert(0.0) += c;
        Ok(())
    }

    pub fn add_cubic(&mut self, a: usize, b: usize, c: usize, coef: f64) -> Result<()> {
        self.check(&[a, b, c], coef)?;
        let mut k = [a, b, c];
        k.sort_unstable();
        *self.cubic.entry((k[0], k[1], k[2])).or_insert(0.0) += coef;
        Ok(())
    }

    pub fn set_offset(&mut self, offset: f64) -> Result<()> {
        if !offset.is_finite() {
            return Err(Error::invalid("offset", "must be finite"));
        }
        self.offset = offset;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn linear(&self) -> &BTreeMap<usize, f64> {
        &self.linear
    }

    pub fn quadratic(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.quadratic
    }

    pub fn cubic(&self) -> &BTreeMap<(usize, usize, usize), f64> {
        &self.cubic
    }

    /// `+1` when minimizing, `−1` when maximizing: the cost Hamiltonian is `sign · h`.
    pub fn minimization_sign(&self) -> f64 {
        match self.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        }
    }

    /// True when `a` is strictly better than `b` under the sense.
    pub fn better(&self, a: f64, b: f64) -> bool {
        match self.sense {
            Sense::Minimize => a < b,
            Sense::Maximize => a > b,
        }
    }

    /// Value on the bitstring `x`, with `x[i]` the bit of variable `i`.
    pub fn evaluate(&self, x: &[bool]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::SizeMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        let bits = x
            .iter()
            .enumerate()
            .fold(0u128, |acc, (i, &b)| acc | ((b as u128) << i));
        Ok(self.evaluate_bits(bits))
    }

    /// Value on the basis index `bits` (bit `i` is variable `i`).
    pub fn evaluate_bits(&self, bits: u128) -> f64 {
        let z = |mask: u128| {
            if (bits & mask).count_ones() % 2 == 1 {
                -1.0
            } else {
                1.0
            }
        };
        let mut v = self.offset;
        for (&i, &c) in &self.linear {
            v += c * z(1 << i);
        }
        for (&(i, j), &c) in &self.quadratic {
            v += c * z((1 << i) | (1 << j));
        }
        for (&(a, b, d), &c) in &self.cubic {
            v += c * z((1 << a) | (1 << b) | (1 << d));
        }
        v
    }

    /// Values on all `2^n` basis states.
    pub fn diagonal(&self) -> Result<Vec<f64>> {
        if self.n > MAX_ENUMERATION_QUBITS {
            return Err(Error::SizeLimit {
                what: "diagonal enumeration",
                n: self.n,
                limit: MAX_ENUMERATION_QUBITS,
            });
        }
        let terms = self.parity_terms();
        Ok((0..1u64 << self.n)
            .map(|x| {
                terms.iter().fold(self.offset, |acc, &(m, c)| {
                    if (x & m).count_ones() % 2 == 1 {
                        acc - c
                    } else {
                        acc + c
                    }
                })
            })
            .collect())
    }

    /// All terms as (mask, coefficient) pairs over the low 64 qubits.
    pub(crate) fn parity_terms(&self) -> Vec<(u64, f64)> {
        let mut t: Vec<(u64, f64)> = Vec::new();
        t.extend(self.linear.iter().map(|(&i, &c)| (1u64 << i, c)));
        t.extend(
            self.quadratic
                .iter()
                .map(|(&(i, j), &c)| ((1u64 << i) | (1 << j), c)),
        );
        t.extend(
            self.cubic
                .iter()
                .map(|(&(a, b, d), &c)| ((1u64 << a) | (1 << b) | (1 << d), c)),
        );
        t
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

#[derive(Serialize, Deserialize)]
struct PolynomialFile {
    n: usize,
    sense: Sense,
    #[serde(default)]
    offset: f64,
    #[serde(default)]
    linear: Vec<(usize, f64)>,
    #[serde(default)]
    quadratic: Vec<(usize, usize, f64)>,
    #[serde(default)]
    cubic: Vec<(usize, usize, usize, f64)>,
}

impl TryFrom<PolynomialFile> for IsingPolynomial {
    type Error = Error;

    fn try_from(f: PolynomialFile) -> Result<Self> {
        let mut p = IsingPolynomial::new(f.n, f.sense)?;
        p.set_offset(f.offset)?;
        for (v, c) in f.linear {
            p.add_linear(v, c)?;
        }
        for (i, j, c) in f.quadratic {
            p.add_quadratic(i, j, c)?;
        }
        for (a, b, d, c) in f.cubic {
            p.add_cubic(a, b, d, c)?;
        }
        Ok(p)
    }
}

impl From<IsingPolynomial> for PolynomialFile {
    fn from(p: IsingPolynomial) -> Self {
        PolynomialFile {
            n: p.n,
            sense: p.sense,
            offset: p.offset,
            linear: p.linear.into_iter().collect(),
            quadratic: p
                .quadratic
                .into_iter()
                .map(|((i, j), c)| (i, j, c))
                .collect(),
            cubic: p
                .cubic
                .into_iter()
                .map(|((a, b, d), c)| (a, b, d, c))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spin_mapping() {
        let mut p = IsingPolynomial::new(3, Sense::Minimize).unwrap();
        for v in 0..3 {
            p.add_linear(v, 1.0).unwrap();
        }
        assert_eq!(p.evaluate(&[false, false, false]).unwrap(), 3.0);
        let mut q = IsingPolynomial::new(2, Sense::Minimize).unwrap();
        q.add_quadratic(1, 0, 1.0).unwrap();
        assert_eq!(q.evaluate(&[false, true]).unwrap(), -1.0);
        assert!(q.evaluate(&[true]).is_err());
    }

    #[test]
    fn rejects_bad_terms() {
        let mut p = IsingPolynomial::new(3, Sense::Minimize).unwrap();
        assert!(p.add_linear(3, 1.0).is_err());
        assert!(p.add_quadratic(1, 1, 1.0).is_err());
        assert!(p.add_cubic(0, 1, 0, 1.0).is_err());
        assert!(p.add_linear(0, f64::NAN).is_err());
    }

    #[test]
    fn diagonal_matches_evaluate() {
        let mut p = IsingPolynomial::new(4, Sense::Maximize).unwrap();
        p.add_linear(2, 0.5).unwrap();
        p.add_quadratic(0, 3, -1.25).unwrap();
        p.add_cubic(3, 1, 2, 2.0).unwrap();
        p.set_offset(0.75).unwrap();
        let d = p.diagonal().unwrap();
        for (x, v) in d.iter().enumerate() {
            assert_eq!(*v, p.evaluate_bits(x as u128));
        }
    }

    #[test]
    fn json_round_trip() {
        let mut p = IsingPolynomial::new(3, Sense::Maximize).unwrap();
        p.add_quadratic(0, 2, 0.5).unwrap();
        p.add_cubic(0, 1, 2, -1.0).unwrap();
        p.set_offset(1.5).unwrap();
        assert_eq!(
            IsingPolynomial::from_json(&p.to_json().unwrap()).unwrap(),
            p
        );
    }
}
