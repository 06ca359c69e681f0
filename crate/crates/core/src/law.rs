//! Law verdicts shared by every checker in the crate.
//!
//! A checker evaluates one or more [`Law`]s over sampled inputs and records a
//! [`LawVerdict`] per law. Failing verdicts always carry at least one
//! [`Witness`]; the witness list is capped at [`MAX_WITNESSES`] but the
//! violation count and the largest violation magnitude cover every failure.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Witnesses kept per law. Violations past this count are still counted.
pub const MAX_WITNESSES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Law {
    /// d(x, x) = 0
    M1,
    /// d(x, y) > 0 for x != y
    M2,
    /// d(x, y) = d(y, x)
    M3,
    /// d(x, z) <= d(x, y) + d(y, z)
    M4,
    /// Morphism composition is associative.
    H1,
    /// Identity morphisms are neutral.
    H2,
    /// Composites are morphisms of the same category.
    H3,
    /// F(Id) = Id
    F3,
    /// F(g . f) = F(g) . F(f)
    F4,
    /// alpha (beta v) = (alpha beta) v
    L1,
    /// 1 v = v
    L2,
}

impl Law {
    pub fn description(self) -> &'static str {
        match self {
            Law::M1 => "identity: d(x,x) = 0",
            Law::M2 => "positivity: d(x,y) > 0 for distinct x, y",
            Law::M3 => "symmetry: d(x,y) = d(y,x)",
            Law::M4 => "triangle inequality: d(x,z) <= d(x,y) + d(y,z)",
            Law::H1 => "associativity of morphism composition",
            Law::H2 => "identity morphisms are neutral",
            Law::H3 => "closure under composition",
            Law::F3 => "functor maps identities to identities",
            Law::F4 => "functor preserves composition",
            Law::L1 => "scalar associativity: a(bv) = (ab)v",
            Law::L2 => "multiplication by one: 1v = v",
        }
    }
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Concrete evidence that a law failed on specific inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Labels of the inputs involved (points, morphisms, samples).
    pub inputs: Vec<String>,
    /// Named measurements taken while checking, e.g. `("d(x,y)", 10.0)`.
    pub measured: Vec<(String, f64)>,
    /// How far the measurement lies outside the law. Non-negative.
    pub violation: f64,
}

impl Witness {
    pub fn new(inputs: Vec<String>, measured: Vec<(String, f64)>, violation: f64) -> Self {
        Self {
            inputs,
            measured,
            violation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawVerdict {
    pub passed: bool,
    /// Number of law instances evaluated.
    pub checked: usize,
    pub violations: usize,
    pub max_violation: f64,
    pub witnesses: Vec<Witness>,
}

impl Default for LawVerdict {
    fn default() -> Self {
        Self {
            passed: true,
            checked: 0,
            violations: 0,
            max_violation: 0.0,
            witnesses: Vec::new(),
        }
    }
}

impl LawVerdict {
    pub fn record_pass(&mut self) {
        self.checked += 1;
    }

    pub fn record_failure(&mut self, witness: Witness) {
        self.checked += 1;
        self.violations += 1;
        self.passed = false;
        self.max_violation = self.max_violation.max(witness.violation);
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(witness);
        }
    }

    fn merge(&mut self, other: LawVerdict) {
        self.passed &= other.passed;
        self.checked += other.checked;
        self.violations += other.violations;
        self.max_violation = self.max_violation.max(other.max_violation);
        let room = MAX_WITNESSES.saturating_sub(self.witnesses.len());
        self.witnesses.extend(other.witnesses.into_iter().take(room));
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LawReport {
    pub verdicts: BTreeMap<Law, LawVerdict>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl LawReport {
    pub fn new(laws: &[Law]) -> Self {
        Self {
            verdicts: laws.iter().map(|&l| (l, LawVerdict::default())).collect(),
            warnings: Vec::new(),
        }
    }

    pub fn verdict(&self, law: Law) -> Option<&LawVerdict> {
        self.verdicts.get(&law)
    }

    pub fn verdict_mut(&mut self, law: Law) -> &mut LawVerdict {
        self.verdicts.entry(law).or_default()
    }

    pub fn passed(&self, law: Law) -> bool {
        self.verdicts.get(&law).is_some_and(|v| v.passed)
    }

    pub fn all_passed(&self) -> bool {
        self.verdicts.values().all(|v| v.passed)
    }

    pub fn failed_laws(&self) -> Vec<Law> {
        self.verdicts
            .iter()
            .filter(|(_, v)| !v.passed)
            .map(|(&l, _)| l)
            .collect()
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    /// Combines reports produced over disjoint sample batches.
    pub fn merge(&mut self, other: LawReport) {
        for (law, verdict) in other.verdicts {
            self.verdicts.entry(law).or_default().merge(verdict);
        }
        self.warnings.extend(other.warnings);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failure_always_has_witness() {
        let mut v = LawVerdict::default();
        v.record_pass();
        v.record_failure(Witness::new(vec!["x".into()], vec![], 0.5));
        assert!(!v.passed);
        assert_eq!(v.checked, 2);
        assert_eq!(v.witnesses.len(), 1);
        assert_eq!(v.max_violation, 0.5);
    }

    #[test]
    fn witness_list_is_capped_but_counted() {
        let mut v = LawVerdict::default();
        for i in 0..(MAX_WITNESSES + 5) {
            v.record_failure(Witness::new(vec![], vec![], i as f64));
        }
        assert_eq!(v.witnesses.len(), MAX_WITNESSES);
        assert_eq!(v.violations, MAX_WITNESSES + 5);
        assert_eq!(v.max_violation, (MAX_WITNESSES + 4) as f64);
    }

    #[test]
    fn merge_combines_batches() {
        let mut a = LawReport::new(&[Law::M1, Law::M3]);
        a.verdict_mut(Law::M1).record_pass();
        let mut b = LawReport::new(&[Law::M1, Law::M3]);
        b.verdict_mut(Law::M3)
            .record_failure(Witness::new(vec!["x".into(), "y".into()], vec![], 1.0));
        a.merge(b);
        assert!(a.passed(Law::M1));
        assert!(!a.passed(Law::M3));
        assert_eq!(a.failed_laws(), vec![Law::M3]);
    }
}
