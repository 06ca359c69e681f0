//! Quantity-dependent scaling of valuations.
//!
//! One bundling event of `n` units with unit value `w` is worth
//! `w * n^gamma + kappa`. `gamma < 1` gives diminishing marginal value,
//! `kappa > 0` is a fixed per-event overhead. Only `gamma = 1, kappa = 0`
//! behaves like scalar multiplication; anything else breaks associativity,
//! which [`check_scalar_laws`] measures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::law::{Law, LawReport, Witness};
use crate::valuation_space::ValuationSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BundlingScope {
    /// Bundle the total valuation as one quantity.
    #[default]
    Aggregate,
    /// Bundle each property weight separately; overhead is paid per property.
    PerProperty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BundlingModel {
    pub gamma: f64,
    pub kappa: f64,
    #[serde(default)]
    pub scope: BundlingScope,
}

impl BundlingModel {
    pub fn new(gamma: f64, kappa: f64) -> Result<Self> {
        let m = Self {
            gamma,
            kappa,
            scope: BundlingScope::Aggregate,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn linear() -> Self {
        Self {
            gamma: 1.0,
            kappa: 0.0,
            scope: BundlingScope::Aggregate,
        }
    }

    pub fn with_scope(mut self, scope: BundlingScope) -> Self {
        self.scope = scope;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "kappa must be non-negative, got {}",
                self.kappa
            )));
        }
        Ok(())
    }

    pub fn is_linear(&self) -> bool {
        self.gamma == 1.0 && self.kappa == 0.0
    }

    pub fn bundle_value(&self, n: u64, unit_total: f64) -> Result<f64> {
        bundle_value(self, n, unit_total)
    }

    /// Value of one bundling event of `n` copies of the valued object.
    pub fn bundle_valuation(&self, n: u64, v: &ValuationSet) -> Result<f64> {
        match self.scope {
            BundlingScope::Aggregate => self.bundle_value(n, v.total()),
            BundlingScope::PerProperty => v.weights.values().map(|w| self.bundle_value(n, *w)).sum(),
        }
    }
}

pub fn bundle_value(model: &BundlingModel, n: u64, unit_total: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::NonPositiveCount);
    }
    if !unit_total.is_finite() {
        return Err(Error::InvalidModel(format!(
            "unit total must be finite, got {unit_total}"
        )));
    }
    Ok(unit_total * (n as f64).powf(model.gamma) + model.kappa)
}

/// One (alpha, beta, w) probe of the scalar laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarSample {
    pub alpha: u64,
    pub beta: u64,
    pub unit_total: f64,
}

impl ScalarSample {
    pub fn new(alpha: u64, beta: u64, unit_total: f64) -> Self {
        Self {
            alpha,
            beta,
            unit_total,
        }
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Compares nested bundling `alpha (beta w)` with flat `(alpha beta) w` for
/// L1, and `1 w` with `w` for L2. Pure power laws agree up to rounding, so
/// the comparison allows a relative slack of 1e-9.
pub fn check_scalar_laws(model: &BundlingModel, samples: &[ScalarSample]) -> Result<LawReport> {
    let mut report = LawReport::new(&[Law::L1, Law::L2]);
    if samples.is_empty() {
        report.warn("no scalar samples: laws hold vacuously");
    }
    for s in samples {
        let nested = bundle_value(model, s.alpha, bundle_value(model, s.beta, s.unit_total)?)?;
        let flat = bundle_value(model, s.alpha * s.beta, s.unit_total)?;
        let inputs = vec![
            format!("alpha={}", s.alpha),
            format!("beta={}", s.beta),
            format!("w={}", s.unit_total),
        ];
        if close(nested, flat) {
            report.verdict_mut(Law::L1).record_pass();
        } else {
            report.verdict_mut(Law::L1).record_failure(Witness::new(
                inputs.clone(),
                vec![("nested".into(), nested), ("flat".into(), flat)],
                (nested - flat).abs(),
            ));
        }

        let once = bundle_value(model, 1, s.unit_total)?;
        if close(once, s.unit_total) {
            report.verdict_mut(Law::L2).record_pass();
        } else {
            report.verdict_mut(Law::L2).record_failure(Witness::new(
                vec![format!("w={}", s.unit_total)],
                vec![("1w".into(), once), ("w".into(), s.unit_total)],
                (once - s.unit_total).abs(),
            ));
        }
    }
    Ok(report)
}

/// A small default probe grid: alpha, beta in 1..=4 and w in {1, 2.5}.
pub fn default_scalar_samples() -> Vec<ScalarSample> {
    let mut out = Vec::new();
    for alpha in 1..=4 {
        for beta in 1..=4 {
            for w in [1.0, 2.5] {
                out.push(ScalarSample::new(alpha, beta, w));
            }
        }
    }
    out
}
