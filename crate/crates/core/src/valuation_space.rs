//! Valuation sets, the value-difference metric, and its law checks.
//!
//! The built-in metric is a weighted L1 distance over per-property weights
//! with a positivity floor ε for distinct points. Finite distance tables can
//! also be declared; those are only *claimed* metrics and
//! [`check_metric_axioms`] is how the claim gets tested.
//!
//! [`detect_arbitrage`] scans the same ordered triples as the triangle check
//! and reports each triangle violation as an exchange cycle that extracts
//! value, so it returns nothing exactly when M4 passes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::law::{Law, LawReport, Witness};

/// Absolute slack used by the M1, M3 and M4 checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Default positivity floor for distinct points.
pub const DEFAULT_EPSILON: f64 = 1e-9;

/// Per-property weights w_kj that agent j assigns to object i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValuationSet {
    pub agent: String,
    pub object: String,
    pub weights: BTreeMap<String, f64>,
}

impl ValuationSet {
    pub fn new(agent: impl Into<String>, object: impl Into<String>, weights: BTreeMap<String, f64>) -> Self {
        Self {
            agent: agent.into(),
            object: object.into(),
            weights,
        }
    }

    /// A weightless named point, as used with distance tables.
    pub fn point(object: impl Into<String>) -> Self {
        Self::new("", object, BTreeMap::new())
    }

    pub fn from_pairs<'a>(agent: &str, object: &str, pairs: impl IntoIterator<Item = (&'a str, f64)>) -> Self {
        Self::new(
            agent,
            object,
            pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        )
    }

    pub fn weight(&self, property: &str) -> f64 {
        self.weights.get(property).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.weights.values().sum()
    }

    pub fn label(&self) -> &str {
        &self.object
    }

    /// Two valuation sets are the same point when they describe the same
    /// object with the same weights.
    pub fn same_point(&self, other: &ValuationSet) -> bool {
        self.object == other.object && self.weights == other.weights
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.weights.iter().find(|(_, w)| !w.is_finite()) {
            Some((k, _)) => Err(Error::NonFiniteWeight { property: k.clone() }),
            None => Ok(()),
        }
    }

    /// Largest absolute per-property difference, missing keys read as 0.
    pub fn max_abs_diff(&self, other: &ValuationSet) -> f64 {
        union_keys(self, other)
            .map(|k| (self.weight(k) - other.weight(k)).abs())
            .fold(0.0, f64::max)
    }
}

fn union_keys<'a>(x: &'a ValuationSet, y: &'a ValuationSet) -> impl Iterator<Item = &'a str> {
    let mut keys: Vec<&str> = x.weights.keys().chain(y.weights.keys()).map(String::as_str).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.into_iter()
}

/// Claimed distances between named points.
///
/// Lookup tries `(from, to)` then `(to, from)`; `(x, x)` falls back to 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DistanceTable {
    entries: BTreeMap<(String, String), f64>,
}

impl DistanceTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, from: &str, to: &str, distance: f64) -> Self {
        self.insert(from, to, distance);
        self
    }

    pub fn insert(&mut self, from: &str, to: &str, distance: f64) {
        self.entries.insert((from.to_string(), to.to_string()), distance);
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.entries.iter().map(|((a, b), d)| (a.as_str(), b.as_str(), *d))
    }

    /// Every point named by an entry, sorted.
    pub fn points(&self) -> Vec<String> {
        let mut pts: Vec<String> = self.entries.keys().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
        pts.sort();
        pts.dedup();
        pts
    }

    pub fn lookup(&self, from: &str, to: &str) -> Result<f64> {
        let key = |a: &str, b: &str| (a.to_string(), b.to_string());
        if let Some(d) = self.entries.get(&key(from, to)) {
            return Ok(*d);
        }
        if let Some(d) = self.entries.get(&key(to, from)) {
            return Ok(*d);
        }
        if from == to {
            return Ok(0.0);
        }
        Err(Error::MissingTableEntry {
            from: from.to_string(),
            to: to.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricKind {
    WeightedL1,
    Table(DistanceTable),
}

/// The value-difference metric d on valuation sets.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueMetric {
    pub kind: MetricKind,
    /// Per-property importance λ_k.
    pub importance: BTreeMap<String, f64>,
    /// λ for properties not listed in `importance`.
    pub default_importance: f64,
    /// Positivity floor ε.
    pub epsilon: f64,
}

impl ValueMetric {
    /// Weighted L1 with λ = 1 on every property.
    pub fn weighted_l1() -> Self {
        Self {
            kind: MetricKind::WeightedL1,
            importance: BTreeMap::new(),
            default_importance: 1.0,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn table(table: DistanceTable) -> Self {
        Self {
            kind: MetricKind::Table(table),
            ..Self::weighted_l1()
        }
    }

    pub fn with_importance(mut self, property: &str, lambda: f64) -> Self {
        self.importance.insert(property.to_string(), lambda);
        self
    }

    pub fn with_default_importance(mut self, lambda: f64) -> Self {
        self.default_importance = lambda;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn importance_of(&self, property: &str) -> f64 {
        self.importance
            .get(property)
            .copied()
            .unwrap_or(self.default_importance)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidMetric(format!(
                "epsilon must be positive and finite, got {}",
                self.epsilon
            )));
        }
        let lambdas = self
            .importance
            .iter()
            .map(|(k, v)| (k.as_str(), *v))
            .chain(std::iter::once(("<default>", self.default_importance)));
        let mut any_positive = false;
        for (k, l) in lambdas {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::InvalidMetric(format!(
                    "importance of `{k}` must be finite and non-negative, got {l}"
                )));
            }
            any_positive |= l > 0.0;
        }
        if !any_positive {
            return Err(Error::InvalidMetric("at least one importance must be positive".into()));
        }
        if let MetricKind::Table(t) = &self.kind {
            if let Some((a, b, _)) = t.entries().find(|(_, _, d)| !d.is_finite()) {
                return Err(Error::InvalidMetric(format!("non-finite table entry ({a}, {b})")));
            }
        }
        Ok(())
    }

    pub fn distance(&self, x: &ValuationSet, y: &ValuationSet) -> Result<f64> {
        distance(self, x, y)
    }
}

pub fn distance(metric: &ValueMetric, x: &ValuationSet, y: &ValuationSet) -> Result<f64> {
    x.check_finite()?;
    y.check_finite()?;
    match &metric.kind {
        MetricKind::Table(table) => table.lookup(&x.object, &y.object),
        MetricKind::WeightedL1 => {
            let sum: f64 = union_keys(x, y)
                .map(|k| metric.importance_of(k) * (x.weight(k) - y.weight(k)).abs())
                .sum();
            if sum < metric.epsilon && !x.same_point(y) {
                Ok(metric.epsilon)
            } else {
                Ok(sum)
            }
        }
    }
}

/// How far a direct distance exceeds a two-leg detour. Positive means the
/// triangle inequality fails; the triangle check and the arbitrage scan both
/// go through here so they agree bit for bit.
pub fn triangle_excess(direct: f64, first_leg: f64, second_leg: f64) -> f64 {
    direct - first_leg - second_leg
}

fn distance_matrix(metric: &ValueMetric, points: &[ValuationSet]) -> Result<Vec<Vec<f64>>> {
    points
        .iter()
        .map(|x| points.iter().map(|y| distance(metric, x, y)).collect())
        .collect()
}

pub fn check_metric_axioms(metric: &ValueMetric, samples: &[ValuationSet]) -> Result<LawReport> {
    check_metric_axioms_with_tolerance(metric, samples, DEFAULT_TOLERANCE)
}

/// Evaluates M1 on every sample, M2 and M3 on every ordered pair and M4 on
/// every ordered triple of distinct sample indices.
pub fn check_metric_axioms_with_tolerance(
    metric: &ValueMetric,
    samples: &[ValuationSet],
    tolerance: f64,
) -> Result<LawReport> {
    if samples.len() < 3 {
        return Err(Error::InsufficientSamples {
            needed: 3,
            got: samples.len(),
        });
    }
    let d = distance_matrix(metric, samples)?;
    let label = |i: usize| samples[i].label().to_string();
    let mut report = LawReport::new(&[Law::M1, Law::M2, Law::M3, Law::M4]);
    let n = samples.len();

    for (i, row) in d.iter().enumerate() {
        let v = row[i].abs();
        if v <= tolerance {
            report.verdict_mut(Law::M1).record_pass();
        } else {
            report.verdict_mut(Law::M1).record_failure(Witness::new(
                vec![label(i)],
                vec![(format!("d({0},{0})", label(i)), row[i])],
                v,
            ));
        }
    }

    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if !samples[i].same_point(&samples[j]) {
                if d[i][j] > 0.0 {
                    report.verdict_mut(Law::M2).record_pass();
                } else {
                    report.verdict_mut(Law::M2).record_failure(Witness::new(
                        vec![label(i), label(j)],
                        vec![(format!("d({},{})", label(i), label(j)), d[i][j])],
                        0.0 - d[i][j],
                    ));
                }
            }
            if i < j {
                let gap = (d[i][j] - d[j][i]).abs();
                if gap <= tolerance {
                    report.verdict_mut(Law::M3).record_pass();
                } else {
                    report.verdict_mut(Law::M3).record_failure(Witness::new(
                        vec![label(i), label(j)],
                        vec![
                            (format!("d({},{})", label(i), label(j)), d[i][j]),
                            (format!("d({},{})", label(j), label(i)), d[j][i]),
                        ],
                        gap,
                    ));
                }
            }
        }
    }

    for i in 0..n {
        for j in 0..n {
            if j == i {
                continue;
            }
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let excess = triangle_excess(d[i][k], d[i][j], d[j][k]);
                if excess <= tolerance {
                    report.verdict_mut(Law::M4).record_pass();
                } else {
                    let (x, y, z) = (label(i), label(j), label(k));
                    report.verdict_mut(Law::M4).record_failure(Witness::new(
                        vec![x.clone(), y.clone(), z.clone()],
                        vec![
                            (format!("d({x},{z})"), d[i][k]),
                            (format!("d({x},{y})"), d[i][j]),
                            (format!("d({y},{z})"), d[j][k]),
                        ],
                        excess,
                    ));
                }
            }
        }
    }
    Ok(report)
}

/// An exchange cycle x -> z -> y -> x that gains `extracted` per round trip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArbitrageFinding {
    pub start: String,
    pub via: String,
    pub target: String,
    /// d(start, target)
    pub direct: f64,
    /// d(start, via)
    pub first_leg: f64,
    /// d(via, target)
    pub second_leg: f64,
    /// direct - first_leg - second_leg, always > tolerance.
    pub extracted: f64,
    pub cycle: Vec<String>,
}

pub fn detect_arbitrage(metric: &ValueMetric, points: &[ValuationSet]) -> Result<Vec<ArbitrageFinding>> {
    detect_arbitrage_with_tolerance(metric, points, DEFAULT_TOLERANCE)
}

pub fn detect_arbitrage_with_tolerance(
    metric: &ValueMetric,
    points: &[ValuationSet],
    tolerance: f64,
) -> Result<Vec<ArbitrageFinding>> {
    let n = points.len();
    if n < 3 {
        return Ok(Vec::new());
    }
    let d = distance_matrix(metric, points)?;
    let mut findings = Vec::new();
    for x in 0..n {
        for z in 0..n {
            if z == x {
                continue;
            }
            for y in 0..n {
                if y == x || y == z {
                    continue;
                }
                let m = triangle_excess(d[x][y], d[x][z], d[z][y]);
                if m > tolerance {
                    let (sx, sz, sy) = (
                        points[x].label().to_string(),
                        points[z].label().to_string(),
                        points[y].label().to_string(),
                    );
                    findings.push(ArbitrageFinding {
                        cycle: vec![sx.clone(), sz.clone(), sy.clone(), sx.clone()],
                        start: sx,
                        via: sz,
                        target: sy,
                        direct: d[x][y],
                        first_leg: d[x][z],
                        second_leg: d[z][y],
                        extracted: m,
                    });
                }
            }
        }
    }
    Ok(findings)
}
