//! Objects as property sets, and morphisms between them.
//!
//! An object is nothing more than its [`PropertySet`]: two objects with the
//! same name-to-value map are the same object for every agent. Morphisms are
//! deterministic rewrites guarded by a [`Pattern`]; applying one outside its
//! domain is a [`Error::DomainMismatch`], never a silent no-op.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::law::{Law, LawReport, Witness};

/// A single property value q_k.
///
/// Numeric values are expected to be finite; scenario validation rejects NaN
/// and infinities, which is what makes `Eq` sound here.
#[derive(Debug, Clone)]
pub enum PropertyValue {
    Label(String),
    Numeric { value: f64, unit: String },
    Flag(bool),
}

impl PropertyValue {
    pub fn label(s: impl Into<String>) -> Self {
        PropertyValue::Label(s.into())
    }

    pub fn numeric(value: f64, unit: impl Into<String>) -> Self {
        PropertyValue::Numeric {
            value,
            unit: unit.into(),
        }
    }

    /// A numeric value with the empty unit tag.
    pub fn scalar(value: f64) -> Self {
        Self::numeric(value, "")
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PropertyValue::Label(_) => "label",
            PropertyValue::Numeric { .. } => "numeric",
            PropertyValue::Flag(_) => "flag",
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            PropertyValue::Numeric { value, .. } => value.is_finite(),
            _ => true,
        }
    }

    pub fn as_numeric(&self) -> Option<(f64, &str)> {
        match self {
            PropertyValue::Numeric { value, unit } => Some((*value, unit)),
            _ => None,
        }
    }

    /// Orders two values of the same kind. Numerics with different unit
    /// tags, or values of different kinds, cannot be compared.
    pub fn compare(&self, other: &PropertyValue, property: &str) -> Result<Ordering> {
        match (self, other) {
            (PropertyValue::Label(a), PropertyValue::Label(b)) => Ok(a.cmp(b)),
            (PropertyValue::Flag(a), PropertyValue::Flag(b)) => Ok(a.cmp(b)),
            (PropertyValue::Numeric { value: a, unit: ua }, PropertyValue::Numeric { value: b, unit: ub }) => {
                if ua != ub {
                    return Err(Error::UnitMismatch {
                        property: property.to_string(),
                        left: ua.clone(),
                        right: ub.clone(),
                    });
                }
                a.partial_cmp(b).ok_or_else(|| Error::NonFiniteWeight {
                    property: property.to_string(),
                })
            }
            (a, b) => Err(Error::UnitMismatch {
                property: property.to_string(),
                left: a.kind().to_string(),
                right: b.kind().to_string(),
            }),
        }
    }

    /// Key used by table-based value rules.
    pub fn table_key(&self) -> String {
        self.to_string()
    }
}

impl PartialEq for PropertyValue {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (PropertyValue::Label(a), PropertyValue::Label(b)) => a == b,
            (PropertyValue::Flag(a), PropertyValue::Flag(b)) => a == b,
            (PropertyValue::Numeric { value: a, unit: ua }, PropertyValue::Numeric { value: b, unit: ub }) => {
                a == b && ua == ub
            }
            _ => false,
        }
    }
}

impl Eq for PropertyValue {}

impl Hash for PropertyValue {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            PropertyValue::Label(s) => {
                0u8.hash(state);
                s.hash(state);
            }
            PropertyValue::Numeric { value, unit } => {
                1u8.hash(state);
                // -0.0 == 0.0, so they must hash alike.
                let v = if *value == 0.0 { 0.0f64 } else { *value };
                v.to_bits().hash(state);
                unit.hash(state);
            }
            PropertyValue::Flag(b) => {
                2u8.hash(state);
                b.hash(state);
            }
        }
    }
}

impl fmt::Display for PropertyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropertyValue::Label(s) => write!(f, "{s}"),
            PropertyValue::Flag(b) => write!(f, "{b}"),
            PropertyValue::Numeric { value, unit } if unit.is_empty() => write!(f, "{value}"),
            PropertyValue::Numeric { value, unit } => write!(f, "{value} {unit}"),
        }
    }
}

// Wire form: labels are strings, flags are booleans, unitless numerics are
// bare numbers and unit-tagged numerics are `{ value, unit }` tables.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PropertyValueRepr {
    Flag(bool),
    Bare(f64),
    Label(String),
    Numeric { value: f64, unit: String },
}

impl Serialize for PropertyValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match self {
            PropertyValue::Label(s) => PropertyValueRepr::Label(s.clone()),
            PropertyValue::Flag(b) => PropertyValueRepr::Flag(*b),
            PropertyValue::Numeric { value, unit } if unit.is_empty() => PropertyValueRepr::Bare(*value),
            PropertyValue::Numeric { value, unit } => PropertyValueRepr::Numeric {
                value: *value,
                unit: unit.clone(),
            },
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PropertyValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        Ok(match PropertyValueRepr::deserialize(deserializer)? {
            PropertyValueRepr::Flag(b) => PropertyValue::Flag(b),
            PropertyValueRepr::Bare(v) => PropertyValue::scalar(v),
            PropertyValueRepr::Label(s) => PropertyValue::Label(s),
            PropertyValueRepr::Numeric { value, unit } => PropertyValue::Numeric { value, unit },
        })
    }
}

/// The property set p_i that defines an object. Equality is structural.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PropertySet {
    properties: BTreeMap<String, PropertyValue>,
}

impl PropertySet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, value: PropertyValue) -> Self {
        self.properties.insert(name.into(), value);
        self
    }

    pub fn insert(&mut self, name: impl Into<String>, value: PropertyValue) -> Option<PropertyValue> {
        self.properties.insert(name.into(), value)
    }

    pub fn remove(&mut self, name: &str) -> Option<PropertyValue> {
        self.properties.remove(name)
    }

    pub fn get(&self, name: &str) -> Option<&PropertyValue> {
        self.properties.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.properties.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.properties.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &PropertyValue)> {
        self.properties.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.properties.len()
    }

    pub fn is_empty(&self) -> bool {
        self.properties.is_empty()
    }

    /// Canonical text form. Equal sets, and only equal sets, share a
    /// fingerprint, so it doubles as an object identity key.
    pub fn fingerprint(&self) -> String {
        serde_json::to_string(self).expect("property sets always serialize")
    }
}

impl FromIterator<(String, PropertyValue)> for PropertySet {
    fn from_iter<I: IntoIterator<Item = (String, PropertyValue)>>(iter: I) -> Self {
        Self {
            properties: iter.into_iter().collect(),
        }
    }
}

impl fmt::Display for PropertySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.properties.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}: {v}")?;
        }
        f.write_str("}")
    }
}

/// An object id paired with its property set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedObject {
    pub id: String,
    pub properties: PropertySet,
}

impl NamedObject {
    pub fn new(id: impl Into<String>, properties: PropertySet) -> Self {
        Self {
            id: id.into(),
            properties,
        }
    }
}

/// Domain predicate of a morphism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum Pattern {
    Any,
    Has { property: String },
    Missing { property: String },
    Equals { property: String, value: PropertyValue },
    NotEquals { property: String, value: PropertyValue },
    AtLeast { property: String, value: PropertyValue },
    AtMost { property: String, value: PropertyValue },
    All { patterns: Vec<Pattern> },
}

impl Pattern {
    pub fn all(patterns: Vec<Pattern>) -> Self {
        match patterns.len() {
            0 => Pattern::Any,
            1 => patterns.into_iter().next().unwrap(),
            _ => Pattern::All { patterns },
        }
    }

    pub fn has(property: impl Into<String>) -> Self {
        Pattern::Has {
            property: property.into(),
        }
    }

    pub fn equals(property: impl Into<String>, value: PropertyValue) -> Self {
        Pattern::Equals {
            property: property.into(),
            value,
        }
    }

    /// `Ok(())` when `p` matches, otherwise the reason it does not.
    pub fn check(&self, p: &PropertySet) -> std::result::Result<(), String> {
        let present = |property: &str| p.get(property).ok_or_else(|| format!("requires property `{property}`"));
        match self {
            Pattern::Any => Ok(()),
            Pattern::Has { property } => present(property).map(|_| ()),
            Pattern::Missing { property } => match p.get(property) {
                Some(_) => Err(format!("requires `{property}` to be absent")),
                None => Ok(()),
            },
            Pattern::Equals { property, value } => {
                let actual = present(property)?;
                if actual == value {
                    Ok(())
                } else {
                    Err(format!("requires `{property}` = {value}, found {actual}"))
                }
            }
            Pattern::NotEquals { property, value } => {
                let actual = present(property)?;
                if actual != value {
                    Ok(())
                } else {
                    Err(format!("requires `{property}` != {value}"))
                }
            }
            Pattern::AtLeast { property, value } | Pattern::AtMost { property, value } => {
                let actual = present(property)?;
                let ord = actual.compare(value, property).map_err(|e| e.to_string())?;
                let ok = match self {
                    Pattern::AtLeast { .. } => ord != Ordering::Less,
                    _ => ord != Ordering::Greater,
                };
                if ok {
                    Ok(())
                } else {
                    Err(format!("`{property}` = {actual} is out of range (bound {value})"))
                }
            }
            Pattern::All { patterns } => patterns.iter().try_for_each(|pat| pat.check(p)),
        }
    }
}

/// A single property rewrite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum Effect {
    Set {
        property: String,
        value: PropertyValue,
    },
    /// Adds `amount` to a numeric property, keeping its unit.
    Add {
        property: String,
        amount: f64,
    },
    /// Negates a flag.
    Toggle {
        property: String,
    },
    Remove {
        property: String,
    },
}

impl Effect {
    pub fn set(property: impl Into<String>, value: PropertyValue) -> Self {
        Effect::Set {
            property: property.into(),
            value,
        }
    }

    pub fn add(property: impl Into<String>, amount: f64) -> Self {
        Effect::Add {
            property: property.into(),
            amount,
        }
    }

    pub fn toggle(property: impl Into<String>) -> Self {
        Effect::Toggle {
            property: property.into(),
        }
    }

    fn rewrite(&self, p: &mut PropertySet) -> std::result::Result<(), String> {
        match self {
            Effect::Set { property, value } => {
                p.insert(property.clone(), value.clone());
            }
            Effect::Add { property, amount } => match p.properties.get_mut(property) {
                Some(PropertyValue::Numeric { value, .. }) => *value += amount,
                Some(other) => return Err(format!("cannot add to {} `{property}`", other.kind())),
                None => return Err(format!("requires property `{property}`")),
            },
            Effect::Toggle { property } => match p.properties.get_mut(property) {
                Some(PropertyValue::Flag(b)) => *b = !*b,
                Some(other) => return Err(format!("cannot toggle {} `{property}`", other.kind())),
                None => return Err(format!("requires property `{property}`")),
            },
            Effect::Remove { property } => {
                if p.remove(property).is_none() {
                    return Err(format!("requires property `{property}`"));
                }
            }
        }
        Ok(())
    }
}

type CustomEffect = dyn Fn(&PropertySet) -> std::result::Result<PropertySet, String> + Send + Sync;

#[derive(Clone)]
enum MorphismKind {
    Identity,
    Rewrite {
        pattern: Pattern,
        effects: Vec<Effect>,
    },
    /// Factors applied first to last.
    Composite(Vec<PropertyMorphism>),
    Custom {
        pattern: Pattern,
        effect: Arc<CustomEffect>,
    },
}

/// A named transformation p -> p' within the category of property sets.
#[derive(Clone)]
pub struct PropertyMorphism {
    name: String,
    kind: MorphismKind,
}

impl fmt::Debug for PropertyMorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("PropertyMorphism");
        d.field("name", &self.name);
        match &self.kind {
            MorphismKind::Identity => d.field("kind", &"identity"),
            MorphismKind::Rewrite { pattern, effects } => d.field("pattern", pattern).field("effects", effects),
            MorphismKind::Composite(factors) => d.field("factors", factors),
            MorphismKind::Custom { pattern, .. } => d.field("pattern", pattern).field("effect", &"<fn>"),
        };
        d.finish()
    }
}

impl PropertyMorphism {
    pub fn identity() -> Self {
        Self {
            name: "id".to_string(),
            kind: MorphismKind::Identity,
        }
    }

    pub fn rewrite(name: impl Into<String>, pattern: Pattern, effects: Vec<Effect>) -> Self {
        Self {
            name: name.into(),
            kind: MorphismKind::Rewrite { pattern, effects },
        }
    }

    /// A morphism backed by an arbitrary closure. The closure is trusted to
    /// be deterministic; [`check_morphism_laws`] is how that trust is tested.
    pub fn custom<F>(name: impl Into<String>, pattern: Pattern, effect: F) -> Self
    where
        F: Fn(&PropertySet) -> std::result::Result<PropertySet, String> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            kind: MorphismKind::Custom {
                pattern,
                effect: Arc::new(effect),
            },
        }
    }

    /// Rewrites `property` from `from` to `to`: the ownership change of an
    /// object between two agents.
    pub fn ownership_transfer(property: &str, from: &str, to: &str) -> Self {
        Self::rewrite(
            format!("transfer[{property}:{from}->{to}]"),
            Pattern::equals(property, PropertyValue::label(from)),
            vec![Effect::set(property, PropertyValue::label(to))],
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_identity(&self) -> bool {
        match &self.kind {
            MorphismKind::Identity => true,
            MorphismKind::Composite(factors) => factors.iter().all(Self::is_identity),
            _ => false,
        }
    }

    /// Primitive factors in application order.
    pub fn factors(&self) -> Vec<&PropertyMorphism> {
        match &self.kind {
            MorphismKind::Composite(fs) => fs.iter().flat_map(|f| f.factors()).collect(),
            _ => vec![self],
        }
    }

    pub fn apply(&self, p: &PropertySet) -> Result<PropertySet> {
        match &self.kind {
            MorphismKind::Identity => Ok(p.clone()),
            MorphismKind::Rewrite { pattern, effects } => {
                pattern.check(p).map_err(|reason| Error::domain(&self.name, reason))?;
                let mut out = p.clone();
                for effect in effects {
                    effect
                        .rewrite(&mut out)
                        .map_err(|reason| Error::domain(&self.name, reason))?;
                }
                Ok(out)
            }
            MorphismKind::Composite(factors) => {
                let mut current = p.clone();
                for (i, factor) in factors.iter().enumerate() {
                    current = factor.apply(&current).map_err(|e| match e {
                        Error::DomainMismatch { context, reason } => Error::DomainMismatch {
                            context,
                            reason: format!("factor {} of `{}`: {reason}", i + 1, self.name),
                        },
                        other => other,
                    })?;
                }
                Ok(current)
            }
            MorphismKind::Custom { pattern, effect } => {
                pattern.check(p).map_err(|reason| Error::domain(&self.name, reason))?;
                effect(p).map_err(|reason| Error::domain(&self.name, reason))
            }
        }
    }
}

pub fn apply_morphism(f: &PropertyMorphism, p: &PropertySet) -> Result<PropertySet> {
    f.apply(p)
}

/// `g ∘ f`: apply `f`, then `g`.
pub fn compose(f: &PropertyMorphism, g: &PropertyMorphism) -> PropertyMorphism {
    let mut factors = Vec::new();
    for m in [f, g] {
        match &m.kind {
            MorphismKind::Composite(fs) => factors.extend(fs.iter().cloned()),
            _ => factors.push(m.clone()),
        }
    }
    PropertyMorphism {
        name: format!("{} ∘ {}", g.name, f.name),
        kind: MorphismKind::Composite(factors),
    }
}

fn same_outcome(a: &Result<PropertySet>, b: &Result<PropertySet>) -> Option<bool> {
    match (a, b) {
        (Ok(x), Ok(y)) => Some(x == y),
        (Err(_), Err(_)) => None,
        _ => Some(false),
    }
}

fn outcome_label(r: &Result<PropertySet>) -> String {
    match r {
        Ok(p) => p.to_string(),
        Err(e) => e.to_string(),
    }
}

/// Checks associativity (H1), identity (H2) and closure (H3) over every
/// combination of catalog morphisms and samples.
///
/// Inputs outside a morphism's domain on both sides are skipped; an input
/// accepted on one side only is a failure.
pub fn check_morphism_laws(catalog: &[PropertyMorphism], samples: &[PropertySet]) -> LawReport {
    let mut report = LawReport::new(&[Law::H1, Law::H2, Law::H3]);
    if catalog.is_empty() {
        report.warn("empty morphism catalog: laws hold vacuously");
        return report;
    }
    let id = PropertyMorphism::identity();

    for p in samples {
        for f in catalog {
            let direct = f.apply(p);
            for (side, composite) in [("id first", compose(&id, f)), ("id last", compose(f, &id))] {
                let via = composite.apply(p);
                match same_outcome(&direct, &via) {
                    Some(true) => report.verdict_mut(Law::H2).record_pass(),
                    Some(false) => report.verdict_mut(Law::H2).record_failure(Witness::new(
                        vec![
                            f.name.clone(),
                            side.to_string(),
                            p.to_string(),
                            format!("direct: {}", outcome_label(&direct)),
                            format!("with id: {}", outcome_label(&via)),
                        ],
                        vec![],
                        1.0,
                    )),
                    None => {}
                }
            }

            for g in catalog {
                let sequential = f.apply(p).and_then(|q| g.apply(&q));
                let composite = compose(f, g).apply(p);
                match same_outcome(&sequential, &composite) {
                    Some(true) => {
                        let valid = composite
                            .as_ref()
                            .map(|q| q.iter().all(|(_, v)| v.is_finite()))
                            .unwrap_or(true);
                        if valid {
                            report.verdict_mut(Law::H3).record_pass();
                        } else {
                            report.verdict_mut(Law::H3).record_failure(Witness::new(
                                vec![f.name.clone(), g.name.clone(), p.to_string()],
                                vec![],
                                1.0,
                            ));
                        }
                    }
                    Some(false) => report.verdict_mut(Law::H3).record_failure(Witness::new(
                        vec![
                            f.name.clone(),
                            g.name.clone(),
                            p.to_string(),
                            format!("sequential: {}", outcome_label(&sequential)),
                            format!("composite: {}", outcome_label(&composite)),
                        ],
                        vec![],
                        1.0,
                    )),
                    None => {}
                }

                for h in catalog {
                    let left = compose(&compose(f, g), h).apply(p);
                    let right = compose(f, &compose(g, h)).apply(p);
                    match same_outcome(&left, &right) {
                        Some(true) => report.verdict_mut(Law::H1).record_pass(),
                        Some(false) => report.verdict_mut(Law::H1).record_failure(Witness::new(
                            vec![
                                f.name.clone(),
                                g.name.clone(),
                                h.name.clone(),
                                p.to_string(),
                                format!("(h∘g)∘f: {}", outcome_label(&left)),
                                format!("h∘(g∘f): {}", outcome_label(&right)),
                            ],
                            vec![],
                            1.0,
                        )),
                        None => {}
                    }
                }
            }
        }
    }
    report
}
