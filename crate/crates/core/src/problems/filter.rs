use serde::{Deserialize, Serialize};

use super::{IsingPolynomial, MAX_ENUMERATION_QUBITS};
use crate::error::{Error, Result};
use crate::sim::bitstring;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterPredicate {
    AlwaysTrue,
    HammingWeight(u32),
}

/// Feasibility predicate with bounds `M_l ≤ h(x) ≤ M_u` on feasible bitstrings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityFilter {
    pub predicate: FilterPredicate,
    pub m_lower: f64,
    pub m_upper: f64,
}

impl FeasibilityFilter {
    pub fn new(predicate: FilterPredicate, m_lower: f64, m_upper: f64) -> Result<Self> {
        if !(m_lower.is_finite() && m_upper.is_finite() && m_lower <= m_upper) {
            return Err(Error::invalid(
                "filter bounds",
                format!("need finite M_l ≤ M_u, got [{m_lower}, {m_upper}]"),
            ));
        }
        Ok(Self {
            predicate,
            m_lower,
            m_upper,
        })
    }

    pub fn accepts(&self, x: u128) -> bool {
        match self.predicate {
            FilterPredicate::AlwaysTrue => true,
            FilterPredicate::HammingWeight(k) => x.count_ones() == k,
        }
    }

    pub fn describe(&self) -> String {
        match self.predicate {
            FilterPredicate::AlwaysTrue => "always-true".to_string(),
            FilterPredicate::HammingWeight(k) => format!("hamming-weight={k}"),
        }
    }

    /// Checks the bounds on every feasible bitstring. Returns `false` without
    /// checking when the register is too large to enumerate.
    pub fn validate(&self, poly: &IsingPolynomial) -> Result<bool> {
        if poly.n() > MAX_ENUMERATION_QUBITS {
            return Ok(false);
        }
        for x in 0..1u128 << poly.n() {
            if !self.accepts(x) {
                continue;
            }
            let v = poly.evaluate_bits(x);
            if v < self.m_lower || v > self.m_upper {
                return Err(Error::FilterViolation {
                    bitstring: bitstring(x, poly.n()),
                    value: v,
                    lower: self.m_lower,
                    upper: self.m_upper,
                });
            }
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::maxcut_3regular;

    #[test]
    fn validates_by_enumeration() {
        let (_, p) = maxcut_3regular(6, 2).unwrap();
        let ok = FeasibilityFilter::new(FilterPredicate::HammingWeight(3), 0.0, 9.0).unwrap();
        assert!(ok.validate(&p).unwrap());
        let tight = FeasibilityFilter::new(FilterPredicate::HammingWeight(3), 0.0, 2.0).unwrap();
        assert!(tight.validate(&p).is_err());
        assert!(FeasibilityFilter::new(FilterPredicate::AlwaysTrue, 1.0, 0.0).is_err());
    }
}
