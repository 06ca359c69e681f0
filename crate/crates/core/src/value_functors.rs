//! Value functions from property sets to valuation sets.
//!
//! A [`ValueFunctor`] has an object part (per-property [`ValueRule`]s) and a
//! morphism part ([`MorphismMap`]) that says how a property rewrite moves a
//! valuation. The default morphism part re-evaluates the rewritten object,
//! which is lawful for any deterministic object part.
//! [`check_functor_laws`] tests identity and composition preservation instead
//! of assuming them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::law::{Law, LawReport, Witness};
use crate::property_space::{compose, NamedObject, PropertyMorphism, PropertySet, PropertyValue};
use crate::valuation_space::{distance, ValuationSet, ValueMetric, DEFAULT_TOLERANCE};

/// How one property's value becomes a weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum ValueRule {
    /// `per_unit * value` for numerics, `per_unit` or 0 for flags.
    Linear {
        per_unit: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        unit: Option<String>,
    },
    /// Lookup by the value's text form (labels, flags, or numerics).
    Table {
        values: BTreeMap<String, f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        default: Option<f64>,
    },
    Constant {
        value: f64,
    },
    /// Reference-dependent value: concave for gains, convex and steeper for
    /// losses.
    Prospect {
        reference: f64,
        scale: f64,
        gain_exponent: f64,
        loss_exponent: f64,
        loss_aversion: f64,
    },
}

impl ValueRule {
    pub fn linear(per_unit: f64) -> Self {
        ValueRule::Linear { per_unit, unit: None }
    }

    pub fn table<'a>(pairs: impl IntoIterator<Item = (&'a str, f64)>, default: Option<f64>) -> Self {
        ValueRule::Table {
            values: pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            default,
        }
    }

    /// Prospect shape with exponents 0.88 and loss aversion 2.25.
    pub fn prospect(reference: f64, scale: f64) -> Self {
        ValueRule::Prospect {
            reference,
            scale,
            gain_exponent: 0.88,
            loss_exponent: 0.88,
            loss_aversion: 2.25,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(format!("{name} must be finite"))
            }
        };
        match self {
            ValueRule::Linear { per_unit, .. } => finite("per_unit", *per_unit),
            ValueRule::Constant { value } => finite("value", *value),
            ValueRule::Table { values, default } => {
                for (k, v) in values {
                    finite(&format!("table entry `{k}`"), *v)?;
                }
                if let Some(d) = default {
                    finite("default", *d)?;
                }
                Ok(())
            }
            ValueRule::Prospect {
                reference,
                scale,
                gain_exponent,
                loss_exponent,
                loss_aversion,
            } => {
                finite("reference", *reference)?;
                finite("scale", *scale)?;
                for (name, v) in [
                    ("gain_exponent", *gain_exponent),
                    ("loss_exponent", *loss_exponent),
                    ("loss_aversion", *loss_aversion),
                ] {
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(format!("{name} must be positive"));
                    }
                }
                Ok(())
            }
        }
    }

    fn weight(&self, value: &PropertyValue) -> std::result::Result<f64, String> {
        match self {
            ValueRule::Constant { value } => Ok(*value),
            ValueRule::Linear { per_unit, unit } => match value {
                PropertyValue::Numeric { value, unit: u } => {
                    if let Some(expected) = unit {
                        if expected != u {
                            return Err(format!("expected unit `{expected}`, found `{u}`"));
                        }
                    }
                    Ok(per_unit * value)
                }
                PropertyValue::Flag(b) => Ok(if *b { *per_unit } else { 0.0 }),
                PropertyValue::Label(l) => Err(format!("linear rule cannot value label `{l}`")),
            },
            ValueRule::Table { values, default } => {
                let key = value.table_key();
                values
                    .get(&key)
                    .copied()
                    .or(*default)
                    .ok_or_else(|| format!("no table entry for `{key}`"))
            }
            ValueRule::Prospect {
                reference,
                scale,
                gain_exponent,
                loss_exponent,
                loss_aversion,
            } => {
                let (x, _) = value
                    .as_numeric()
                    .ok_or_else(|| format!("prospect rule needs a numeric value, found {}", value.kind()))?;
                Ok(if x >= *reference {
                    scale * (x - reference).powf(*gain_exponent)
                } else {
                    -scale * loss_aversion * (reference - x).powf(*loss_exponent)
                })
            }
        }
    }
}

/// The morphism component F(f) of a value functor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MorphismMap {
    /// F(f)(v) := evaluate(f(p)), where v = evaluate(p).
    #[default]
    Induced,
    /// Carries the valuation change of each non-identity rewrite onto the
    /// incoming valuation and then discounts it by `discount`. Applying a
    /// composite once discounts once, applying its factors in turn discounts
    /// per factor, so composition is not preserved.
    PathDependent { discount: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunctor {
    pub name: String,
    /// Agent whose valuations this functor produces.
    pub agent: String,
    pub rules: BTreeMap<String, ValueRule>,
    /// Rule for properties without an entry in `rules`; without one such
    /// properties lie outside the functor's domain.
    pub fallback: Option<ValueRule>,
    pub morphism_map: MorphismMap,
}

impl ValueFunctor {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            agent: String::new(),
            rules: BTreeMap::new(),
            fallback: None,
            morphism_map: MorphismMap::Induced,
        }
    }

    pub fn with_rule(mut self, property: &str, rule: ValueRule) -> Self {
        self.rules.insert(property.to_string(), rule);
        self
    }

    pub fn with_fallback(mut self, rule: ValueRule) -> Self {
        self.fallback = Some(rule);
        self
    }

    pub fn with_morphism_map(mut self, map: MorphismMap) -> Self {
        self.morphism_map = map;
        self
    }

    pub fn for_agent(mut self, agent: impl Into<String>) -> Self {
        self.agent = agent.into();
        self
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        for (k, rule) in &self.rules {
            rule.validate().map_err(|e| format!("rule `{k}`: {e}"))?;
        }
        if let Some(rule) = &self.fallback {
            rule.validate().map_err(|e| format!("fallback: {e}"))?;
        }
        if let MorphismMap::PathDependent { discount } = self.morphism_map {
            if !(0.0..1.0).contains(&discount) {
                return Err(format!("discount must lie in [0, 1), got {discount}"));
            }
        }
        Ok(())
    }

    /// Valuation of `p`, labelled by its fingerprint.
    pub fn evaluate(&self, p: &PropertySet) -> Result<ValuationSet> {
        self.evaluate_as(p, p.fingerprint())
    }

    /// Valuation of a named object, labelled by its id.
    pub fn evaluate_named(&self, object: &NamedObject) -> Result<ValuationSet> {
        self.evaluate_as(&object.properties, object.id.clone())
    }

    fn evaluate_as(&self, p: &PropertySet, label: String) -> Result<ValuationSet> {
        let mut weights = BTreeMap::new();
        for (name, value) in p.iter() {
            let rule = self
                .rules
                .get(name)
                .or(self.fallback.as_ref())
                .ok_or_else(|| Error::domain(&self.name, format!("property `{name}` outside declared domain")))?;
            let w = rule
                .weight(value)
                .map_err(|reason| Error::domain(&self.name, format!("property `{name}`: {reason}")))?;
            if !w.is_finite() {
                return Err(Error::NonFiniteWeight {
                    property: name.to_string(),
                });
            }
            weights.insert(name.to_string(), w);
        }
        Ok(ValuationSet::new(self.agent.clone(), label, weights))
    }

    /// F(f) applied to `v`, the valuation of `source`.
    pub fn map_morphism(&self, f: &PropertyMorphism, source: &PropertySet, v: &ValuationSet) -> Result<ValuationSet> {
        match self.morphism_map {
            MorphismMap::Induced => self.evaluate(&f.apply(source)?),
            MorphismMap::PathDependent { discount } => {
                if f.is_identity() {
                    return Ok(v.clone());
                }
                let target = self.evaluate(&f.apply(source)?)?;
                let base = self.evaluate(source)?;
                let keep = 1.0 - discount;
                let weights = target
                    .weights
                    .iter()
                    .map(|(k, t)| (k.clone(), keep * (v.weight(k) + t - base.weight(k))))
                    .collect();
                Ok(ValuationSet::new(self.agent.clone(), target.object, weights))
            }
        }
    }
}

pub fn evaluate(v: &ValueFunctor, p: &PropertySet) -> Result<ValuationSet> {
    v.evaluate(p)
}

/// Checks F3 on every sample and F4 on every composable (f, g, p), with
/// tolerance 1e-9 in the max norm over weights.
pub fn check_functor_laws(
    functor: &ValueFunctor,
    catalog: &[PropertyMorphism],
    samples: &[PropertySet],
) -> Result<LawReport> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let mut report = LawReport::new(&[Law::F3, Law::F4]);
    let id = PropertyMorphism::identity();

    for p in samples {
        let vp = functor.evaluate(p)?;
        let mapped = functor.map_morphism(&id, p, &vp)?;
        let gap = mapped.max_abs_diff(&vp);
        if gap <= DEFAULT_TOLERANCE {
            report.verdict_mut(Law::F3).record_pass();
        } else {
            report.verdict_mut(Law::F3).record_failure(Witness::new(
                vec![p.to_string()],
                vec![("max |F(id)(v) - v|".into(), gap)],
                gap,
            ));
        }
    }

    if catalog.is_empty() {
        report.warn("empty morphism catalog: F4 holds vacuously");
        return Ok(report);
    }

    for p in samples {
        let vp = functor.evaluate(p)?;
        for f in catalog {
            let Ok(fp) = f.apply(p) else { continue };
            for g in catalog {
                if g.apply(&fp).is_err() {
                    continue;
                }
                let gf = compose(f, g);
                let whole = functor.map_morphism(&gf, p, &vp)?;
                let stepwise = {
                    let after_f = functor.map_morphism(f, p, &vp)?;
                    functor.map_morphism(g, &fp, &after_f)?
                };
                let gap = whole.max_abs_diff(&stepwise);
                if gap <= DEFAULT_TOLERANCE {
                    report.verdict_mut(Law::F4).record_pass();
                } else {
                    report.verdict_mut(Law::F4).record_failure(Witness::new(
                        vec![f.name().to_string(), g.name().to_string(), p.to_string()],
                        vec![
                            ("total F(g∘f)(v)".into(), whole.total()),
                            ("total F(g)(F(f)(v))".into(), stepwise.total()),
                        ],
                        gap,
                    ));
                }
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedObject {
    pub object: String,
    pub distance: f64,
    /// 1 + number of objects strictly closer to the reference.
    pub rank: usize,
}

/// Objects ordered from most to least preferred. Ties share a rank and are
/// listed by object id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceRelation {
    pub entries: Vec<RankedObject>,
}

impl PreferenceRelation {
    pub fn order(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.object.as_str()).collect()
    }

    fn rank_of(&self, object: &str) -> Option<usize> {
        self.entries.iter().find(|e| e.object == object).map(|e| e.rank)
    }

    /// Strict preference of `a` over `b`.
    pub fn prefers(&self, a: &str, b: &str) -> bool {
        matches!((self.rank_of(a), self.rank_of(b)), (Some(x), Some(y)) if x < y)
    }

    pub fn tied(&self, a: &str, b: &str) -> bool {
        matches!((self.rank_of(a), self.rank_of(b)), (Some(x), Some(y)) if x == y)
    }
}

/// Ranks objects by metric distance of their valuation to an ideal point.
pub fn rank_preferences(
    functor: &ValueFunctor,
    metric: &ValueMetric,
    reference: &ValuationSet,
    objects: &[NamedObject],
) -> Result<PreferenceRelation> {
    let mut scored = objects
        .iter()
        .map(|o| {
            let v = functor.evaluate_named(o)?;
            Ok((o.id.clone(), distance(metric, &v, reference)?))
        })
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));

    let mut entries: Vec<RankedObject> = Vec::with_capacity(scored.len());
    for (i, (object, d)) in scored.into_iter().enumerate() {
        let rank = match entries.last() {
            Some(prev) if prev.distance == d => prev.rank,
            _ => i + 1,
        };
        entries.push(RankedObject {
            object,
            distance: d,
            rank,
        });
    }
    Ok(PreferenceRelation { entries })
}

/// Attributes a_j of an agent, e.g. segment labels.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentAttributeSet {
    attributes: BTreeMap<String, PropertyValue>,
}

impl AgentAttributeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: PropertyValue) -> Self {
        self.attributes.insert(name.to_string(), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<&PropertyValue> {
        self.attributes.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &PropertyValue)> {
        self.attributes.iter().map(|(k, v)| (k.as_str(), v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRow {
    pub segment: String,
    pub object: String,
    pub agents: usize,
    pub mean: f64,
    /// Population standard deviation of total valuations.
    pub spread: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub group_by: String,
    /// Sorted by segment label, then object id.
    pub rows: Vec<SegmentRow>,
}

impl SegmentReport {
    pub fn row(&self, segment: &str, object: &str) -> Option<&SegmentRow> {
        self.rows.iter().find(|r| r.segment == segment && r.object == object)
    }
}

/// Total valuation statistics per (segment, object), where segments are the
/// distinct values of attribute `group_by`.
pub fn segment_analysis(
    agents: &[(AgentAttributeSet, ValueFunctor)],
    objects: &[NamedObject],
    group_by: &str,
) -> Result<SegmentReport> {
    let mut segments: BTreeMap<String, Vec<&ValueFunctor>> = BTreeMap::new();
    for (attrs, functor) in agents {
        let label = attrs.get(group_by).ok_or_else(|| Error::MissingAttribute {
            agent: functor.agent.clone(),
            attribute: group_by.to_string(),
        })?;
        segments.entry(label.to_string()).or_default().push(functor);
    }

    let mut sorted_objects: Vec<&NamedObject> = objects.iter().collect();
    sorted_objects.sort_by(|a, b| a.id.cmp(&b.id));

    let mut rows = Vec::new();
    for (segment, functors) in &segments {
        for object in &sorted_objects {
            let totals = functors
                .iter()
                .map(|f| f.evaluate_named(object).map(|v| v.total()))
                .collect::<Result<Vec<f64>>>()?;
            let n = totals.len() as f64;
            let mean = totals.iter().sum::<f64>() / n;
            let var = totals.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
            rows.push(SegmentRow {
                segment: segment.clone(),
                object: object.id.clone(),
                agents: totals.len(),
                mean,
                spread: var.sqrt(),
                min: totals.iter().copied().fold(f64::INFINITY, f64::min),
                max: totals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            });
        }
    }
    Ok(SegmentReport {
        group_by: group_by.to_string(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::property_space::{Effect, Pattern};

    fn linear_a() -> ValueFunctor {
        ValueFunctor::new("V").with_rule("a", ValueRule::linear(3.0))
    }

    fn grow_a() -> PropertyMorphism {
        PropertyMorphism::rewrite("grow_a", Pattern::has("a"), vec![Effect::add("a", 1.0)])
    }

    fn double_step() -> PropertyMorphism {
        PropertyMorphism::rewrite("grow_a_2", Pattern::has("a"), vec![Effect::add("a", 2.0)])
    }

    #[test]
    fn linear_weight_by_hand() {
        let p = PropertySet::new().with("a", PropertyValue::numeric(2.0, "units"));
        let v = evaluate(&linear_a(), &p).unwrap();
        assert_eq!(v.weights, BTreeMap::from([("a".to_string(), 6.0)]));
    }

    #[test]
    fn evaluation_is_deterministic() {
        let p = PropertySet::new().with("a", PropertyValue::scalar(2.0));
        assert_eq!(evaluate(&linear_a(), &p).unwrap(), evaluate(&linear_a(), &p).unwrap());
    }

    #[test]
    fn undeclared_property_is_domain_mismatch() {
        let p = PropertySet::new().with("b", PropertyValue::scalar(1.0));
        assert!(matches!(evaluate(&linear_a(), &p), Err(Error::DomainMismatch { .. })));
        let with_fallback = linear_a().with_fallback(ValueRule::Constant { value: 0.0 });
        assert_eq!(evaluate(&with_fallback, &p).unwrap().weight("b"), 0.0);
    }

    #[test]
    fn linear_rule_unit_guard() {
        let f = ValueFunctor::new("V").with_rule(
            "mass",
            ValueRule::Linear {
                per_unit: 2.0,
                unit: Some("kg".into()),
            },
        );
        let kg = PropertySet::new().with("mass", PropertyValue::numeric(3.0, "kg"));
        let lb = PropertySet::new().with("mass", PropertyValue::numeric(3.0, "lb"));
        assert_eq!(f.evaluate(&kg).unwrap().weight("mass"), 6.0);
        assert!(f.evaluate(&lb).is_err());
    }

    #[test]
    fn prospect_shape_is_loss_averse() {
        let rule = ValueRule::prospect(10.0, 1.0);
        let gain = rule.weight(&PropertyValue::scalar(15.0)).unwrap();
        let loss = rule.weight(&PropertyValue::scalar(5.0)).unwrap();
        assert!(gain > 0.0 && loss < 0.0);
        assert!(loss.abs() > gain);
        assert_eq!(rule.weight(&PropertyValue::scalar(10.0)).unwrap(), 0.0);
        // concave above the reference point
        let g1 = rule.weight(&PropertyValue::scalar(11.0)).unwrap();
        let g2 = rule.weight(&PropertyValue::scalar(12.0)).unwrap();
        assert!(g2 - g1 < g1);
    }

    #[test]
    fn induced_functor_passes_laws() {
        let samples: Vec<PropertySet> = (0..5)
            .map(|i| PropertySet::new().with("a", PropertyValue::scalar(i as f64)))
            .collect();
        let report = check_functor_laws(&linear_a(), &[grow_a(), double_step()], &samples).unwrap();
        assert!(report.all_passed(), "{report:?}");
        assert_eq!(report.verdict(Law::F4).unwrap().checked, 5 * 2 * 2);
    }

    #[test]
    fn path_dependent_functor_fails_composition() {
        let f = linear_a().with_morphism_map(MorphismMap::PathDependent { discount: 0.1 });
        let samples = vec![PropertySet::new().with("a", PropertyValue::scalar(1.0))];
        let report = check_functor_laws(&f, &[grow_a()], &samples).unwrap();
        assert!(report.passed(Law::F3));
        let f4 = report.verdict(Law::F4).unwrap();
        assert!(!f4.passed);
        let w = &f4.witnesses[0];
        assert_eq!(w.inputs[..2], ["grow_a", "grow_a"]);
        // v = 3. Whole: 0.9 (3 + 9 - 3) = 8.1. Stepwise: 0.9 (0.9 (3 + 6 - 3) + 9 - 6) = 7.56.
        assert!((w.violation - (8.1 - 7.56)).abs() < 1e-12);
    }

    #[test]
    fn empty_catalog_warns() {
        let samples = vec![PropertySet::new().with("a", PropertyValue::scalar(1.0))];
        let report = check_functor_laws(&linear_a(), &[], &samples).unwrap();
        assert!(report.all_passed());
        assert!(!report.warnings.is_empty());
        assert!(matches!(
            check_functor_laws(&linear_a(), &[], &[]),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    fn objects_at(values: &[(&str, f64)]) -> Vec<NamedObject> {
        values
            .iter()
            .map(|(id, a)| NamedObject::new(*id, PropertySet::new().with("a", PropertyValue::scalar(*a))))
            .collect()
    }

    #[test]
    fn ranking_sorts_by_distance() {
        let f = ValueFunctor::new("V").with_rule("a", ValueRule::linear(1.0));
        let reference = ValuationSet::from_pairs("", "ideal", [("a", 0.0)]);
        let objs = objects_at(&[("o1", 1.0), ("o2", 3.0), ("o3", 2.0)]);
        let rel = rank_preferences(&f, &ValueMetric::weighted_l1(), &reference, &objs).unwrap();
        assert_eq!(rel.order(), ["o1", "o3", "o2"]);
        assert!(rel.prefers("o1", "o2"));
    }

    #[test]
    fn ranking_ties_share_rank_and_sort_by_id() {
        let f = ValueFunctor::new("V").with_rule("a", ValueRule::linear(1.0));
        let reference = ValuationSet::from_pairs("", "ideal", [("a", 0.0)]);
        let objs = objects_at(&[("b", 2.0), ("a", -2.0)]);
        let rel = rank_preferences(&f, &ValueMetric::weighted_l1(), &reference, &objs).unwrap();
        assert_eq!(rel.order(), ["a", "b"]);
        assert!(rel.tied("a", "b"));
        assert!(!rel.prefers("a", "b"));
        let single = rank_preferences(&f, &ValueMetric::weighted_l1(), &reference, &objs[..1]).unwrap();
        assert_eq!(single.entries.len(), 1);
    }

    #[test]
    fn segment_means_by_hand() {
        let agent = |id: &str, seg: &str, per_unit: f64| {
            (
                AgentAttributeSet::new().with("segment", PropertyValue::label(seg)),
                ValueFunctor::new("V")
                    .with_rule("a", ValueRule::linear(per_unit))
                    .for_agent(id),
            )
        };
        let agents = vec![agent("p", "B", 20.0), agent("q", "A", 10.0)];
        let objs = objects_at(&[("o", 1.0)]);
        let report = segment_analysis(&agents, &objs, "segment").unwrap();
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.rows[0].segment, "A");
        assert_eq!(report.row("A", "o").unwrap().mean, 10.0);
        assert_eq!(report.row("B", "o").unwrap().mean, 20.0);
        assert_eq!(report.row("B", "o").unwrap().spread, 0.0);
    }

    #[test]
    fn single_segment_matches_overall_mean() {
        let agents: Vec<_> = [1.0, 2.0, 6.0]
            .iter()
            .enumerate()
            .map(|(i, w)| {
                (
                    AgentAttributeSet::new().with("segment", PropertyValue::label("all")),
                    ValueFunctor::new("V")
                        .with_rule("a", ValueRule::linear(*w))
                        .for_agent(format!("ag{i}")),
                )
            })
            .collect();
        let report = segment_analysis(&agents, &objects_at(&[("o", 1.0)]), "segment").unwrap();
        assert_eq!(report.rows[0].mean, 3.0);
        assert_eq!(report.rows[0].min, 1.0);
        assert_eq!(report.rows[0].max, 6.0);
    }

    #[test]
    fn missing_attribute_names_agent() {
        let agents = vec![(
            AgentAttributeSet::new(),
            ValueFunctor::new("V")
                .with_rule("a", ValueRule::linear(1.0))
                .for_agent("zed"),
        )];
        assert_eq!(
            segment_analysis(&agents, &[], "segment").unwrap_err(),
            Error::MissingAttribute {
                agent: "zed".into(),
                attribute: "segment".into()
            }
        );
        let empty = segment_analysis(&[], &objects_at(&[("o", 1.0)]), "segment").unwrap();
        assert!(empty.rows.is_empty());
    }
}
