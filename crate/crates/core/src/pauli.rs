//! Bit-mask Pauli strings.
//!
//! A string on `n` qubits is stored as a pair of X and Z masks plus a sign.
//! Qubit `q` is bit `q` of each mask; `(x, z) = (1, 1)` is the Hermitian
//! Pauli `Y`. Phases other than `±1` are never produced by the operations
//! here (CNOT and the basis rotations map Hermitian Paulis to Hermitian
//! Paulis).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest register a [`PauliString`] can describe.
pub const MAX_PAULI_QUBITS: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: u128,
    z: u128,
    negative: bool,
}

fn full_mask(n: usize) -> u128 {
    if n >= 128 {
        u128::MAX
    } else {
        (1u128 << n) - 1
    }
}

fn check_n(n: usize) -> Result<()> {
    if n > MAX_PAULI_QUBITS {
        return Err(Error::TooManyQubits {
            n,
            max: MAX_PAULI_QUBITS,
        });
    }
    Ok(())
}

impl PauliString {
    pub fn identity(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(Self {
            n,
            x: 0,
            z: 0,
            negative: false,
        })
    }

    pub fn from_masks(n: usize, x: u128, z: u128, negative: bool) -> Result<Self> {
        check_n(n)?;
        let outside = !full_mask(n);
        if (x | z) & outside != 0 {
            let index = (127 - ((x | z) & outside).leading_zeros()) as usize;
            return Err(Error::QubitOutOfRange { index, n });
        }
        Ok(Self { n, x, z, negative })
    }

    pub fn single(n: usize, qubit: usize, pauli: Pauli) -> Result<Self> {
        check_n(n)?;
        if qubit >= n {
            return Err(Error::QubitOutOfRange { index: qubit, n });
        }
        let (x, z) = pauli.bits();
        Ok(Self {
            n,
            x: (x as u128) << qubit,
            z: (z as u128) << qubit,
            negative: false,
        })
    }

    /// Builds a string from `(qubit, pauli)` pairs; later entries overwrite earlier ones.
    pub fn from_sparse(n: usize, ops: &[(usize, Pauli)]) -> Result<Self> {
        let mut p = Self::identity(n)?;
        for &(q, op) in ops {
            if q >= n {
                return Err(Error::QubitOutOfRange { index: q, n });
            }
            p.set(q, op);
        }
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_mask(&self) -> u128 {
        self.x
    }

    pub fn z_mask(&self) -> u128 {
        self.z
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    pub fn sign(&self) -> f64 {
        if self.negative {
            -1.0
        } else {
            1.0
        }
    }

    pub fn support(&self) -> u128 {
        self.x | self.z
    }

    pub fn weight(&self) -> usize {
        self.support().count_ones() as usize
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// True when there is no X component, i.e. the string is diagonal.
    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        Pauli::from_bits((self.x >> qubit) & 1 == 1, (self.z >> qubit) & 1 == 1)
    }

    fn set(&mut self, qubit: usize, op: Pauli) {
        let bit = 1u128 << qubit;
        let (x, z) = op.bits();
        self.x = if x { self.x | bit } else { self.x & !bit };
        self.z = if z { self.z | bit } else { self.z & !bit };
    }

    pub fn with_sign(mut self, negative: bool) -> Self {
        self.negative = negative;
        self
    }

    pub fn unsigned(self) -> Self {
        self.with_sign(false)
    }

    pub fn negated(mut self) -> Self {
        self.negative = !self.negative;
        self
    }

    /// Non-identity single-qubit factors as `(qubit, pauli)`, lowest qubit first.
    pub fn factors(&self) -> Vec<(usize, Pauli)> {
        (0..self.n)
            .filter(|&q| (self.support() >> q) & 1 == 1)
            .map(|q| (q, self.get(q)))
            .collect()
    }

    /// Product of two strings with the phase discarded (signs multiply).
    pub fn mul_ignoring_phase(&self, other: &Self) -> Result<Self> {
        same_size(self, other)?;
        Ok(Self {
            n: self.n,
            x: self.x ^ other.x,
            z: self.z ^ other.z,
            negative: self.negative ^ other.negative,
        })
    }

    /// Parity of the symplectic product; `false` means the strings commute.
    fn symplectic(&self, other: &Self) -> bool {
        ((self.x & other.z) ^ (self.z & other.x)).count_ones() % 2 == 1
    }
}

fn same_size(a: &PauliString, b: &PauliString) -> Result<()> {
    if a.n != b.n {
        return Err(Error::SizeMismatch {
            expected: a.n,
            found: b.n,
        });
    }
    Ok(())
}

pub fn commutes(a: &PauliString, b: &PauliString) -> Result<bool> {
    same_size(a, b)?;
    Ok(!a.symplectic(b))
}

/// Every qubit carries the identity on one side or the same Pauli on both.
pub fn qubit_wise_commutes(a: &PauliString, b: &PauliString) -> Result<bool> {
    same_size(a, b)?;
    let overlap = a.support() & b.support();
    Ok(((a.x ^ b.x) | (a.z ^ b.z)) & overlap == 0)
}

/// Checks that CNOT pairs are in range, not self-loops, and pairwise disjoint.
pub fn validate_cnot_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<()> {
    let mut used = vec![false; n];
    for &(c, t) in pairs {
        for q in [c, t] {
            if q >= n {
                return Err(Error::QubitOutOfRange { index: q, n });
            }
        }
        if c == t {
            return Err(Error::OverlappingPairs(c));
        }
        for q in [c, t] {
            if used[q] {
                return Err(Error::OverlappingPairs(q));
            }
            used[q] = true;
        }
    }
    Ok(())
}

/// Computes `U p U†` for the CNOT layer `U`, tracking the sign.
pub fn conjugate_through_cnot_layer(
    p: &PauliString,
    layer: &[(usize, usize)],
) -> Result<PauliString> {
    validate_cnot_pairs(p.n, layer)?;
    let mut out = *p;
    for &(c, t) in layer {
        let xc = (out.x >> c) & 1;
        let zc = (out.z >> c) & 1;
        let xt = (out.x >> t) & 1;
        let zt = (out.z >> t) & 1;
        if xc & zt & (xt ^ zc ^ 1) == 1 {
            out.negative = !out.negative;
        }
        out.x ^= xc << t;
        out.z ^= zt << c;
    }
    Ok(out)
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negative {
            f.write_str("-")?;
        }
        for q in (0..self.n).rev() {
            write!(f, "{}", self.get(q).letter())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses labels such as `"-XIZ"`; the rightmost character is qubit 0.
    fn from_str(label: &str) -> Result<Self> {
        let (negative, body) = match label.as_bytes().first() {
            Some(b'-') => (true, &label[1..]),
            Some(b'+') => (false, &label[1..]),
            _ => (false, label),
        };
        let n = body.len();
        check_n(n)?;
        let mut p = Self::identity(n)?.with_sign(negative);
        for (i, ch) in body.chars().enumerate() {
            let op = match ch {
                'I' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                _ => return Err(Error::InvalidPauliLabel(label.to_string())),
            };
            p.set(n - 1 - i, op);
        }
        Ok(p)
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let label = String::deserialize(d)?;
        label.parse().map_err(serde::de::Error::custom)
    }
}

/// Single-qubit Clifford that maps one Pauli axis onto Z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisRotation {
    /// Already diagonal.
    I,
    /// `H`: X → Z.
    H,
    /// `S†` followed by `H`: Y → Z.
    HSdg,
}

/// Terms that share a single-qubit measurement basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutingGroup {
    pub members: Vec<(PauliString, f64)>,
    pub rotation: Vec<BasisRotation>,
}

/// Measurement form of a group: each member becomes a signed parity over `mask`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalTerm {
    pub mask: u128,
    pub sign: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalizedGroup {
    pub n: usize,
    pub rotation: Vec<BasisRotation>,
    pub terms: Vec<DiagonalTerm>,
}

impl DiagonalizedGroup {
    /// Value of the rotated group observable on a measured basis state.
    pub fn value(&self, bits: u128) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let parity = (bits & t.mask).count_ones() % 2;
                let s = if parity == 1 { -1.0 } else { 1.0 };
                t.weight * t.sign * s
            })
            .sum()
    }
}

impl CommutingGroup {
    pub fn n(&self) -> usize {
        self.rotation.len()
    }

    pub fn is_valid(&self) -> bool {
        self.members.iter().enumerate().all(|(i, (a, _))| {
            self.members[i + 1..]
                .iter()
                .all(|(b, _)| qubit_wise_commutes(a, b).unwrap_or(false))
        }) && self.members.iter().all(|(p, _)| {
            (0..p.n()).all(|q| {
                let want = match p.get(q) {
                    Pauli::I => return true,
                    Pauli::X => BasisRotation::H,
                    Pauli::Y => BasisRotation::HSdg,
                    Pauli::Z => BasisRotation::I,
                };
                self.rotation[q] == want
            })
        })
    }
}

/// Greedy first-fit partition of weighted Pauli terms into qubit-wise commuting groups.
pub fn group_commuting(terms: &[(PauliString, f64)]) -> Result<Vec<CommutingGroup>> {
    let Some((first, _)) = terms.first() else {
        return Ok(Vec::new());
    };
    let n = first.n();
    // (x, z) signature of the union of each group's members.
    let mut sigs: Vec<(u128, u128)> = Vec::new();
    let mut groups: Vec<Vec<(PauliString, f64)>> = Vec::new();
    for &(p, w) in terms {
        same_size(first, &p)?;
        let slot = sigs.iter().position(|&(gx, gz)| {
            let overlap = (gx | gz) & p.support();
            ((gx ^ p.x_mask()) | (gz ^ p.z_mask())) & overlap == 0
        });
        match slot {
            Some(i) => {
                sigs[i].0 |= p.x_mask();
                sigs[i].1 |= p.z_mask();
                groups[i].push((p, w));
            }
            None => {
                sigs.push((p.x_mask(), p.z_mask()));
                groups.push(vec![(p, w)]);
            }
        }
    }
    Ok(groups
        .into_iter()
        .zip(sigs)
        .map(|(members, (gx, gz))| CommutingGroup {
            members,
            rotation: (0..n)
                .map(
                    |q| match Pauli::from_bits((gx >> q) & 1 == 1, (gz >> q) & 1 == 1) {
                        Pauli::X => BasisRotation::H,
                        Pauli::Y => BasisRotation::HSdg,
                        Pauli::I | Pauli::Z => BasisRotation::I,
                    },
                )
                .collect(),
        })
        .collect())
}

/// Maps every member of `group` to a Z-type parity under the group's basis rotation.
pub fn diagonalize_group(group: &CommutingGroup) -> Result<DiagonalizedGroup> {
    if !group.is_valid() {
        return Err(Error::NotQubitWiseCommuting);
    }
    let terms = group
        .members
        .iter()
        .map(|(p, w)| DiagonalTerm {
            // H X H = Z and (H S†) Y (H S†)† = Z, so signs carry over unchanged.
            mask: p.support(),
            sign: p.sign(),
            weight: *w,
        })
        .collect();
    Ok(DiagonalizedGroup {
        n: group.n(),
        rotation: group.rotation.clone(),
        terms,
    })
}
