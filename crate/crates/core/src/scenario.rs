//! Scenario files: a TOML document with one section per concept.
//!
//! ```toml
//! seed = 42
//!
//! [market]
//! rounds = 20
//! split = 0.5
//!
//! [[objects]]
//! name = "widget"
//! properties = { color = "red", age = { value = 2, unit = "years" }, owner = "alice" }
//!
//! [[morphisms]]
//! name = "repaint_blue"
//! requires = [{ op = "has", property = "color" }]
//! effects = [{ op = "set", property = "color", value = "blue" }]
//!
//! [[metrics]]
//! name = "l1"
//! kind = "weighted-l1"
//!
//! [[functors]]
//! name = "V_alice"
//! rules = { color = { shape = "table", values = { red = 3.0, blue = 5.0 } } }
//! fallback = { shape = "constant", value = 0.0 }
//!
//! [[agents]]
//! name = "alice"
//! functor = "V_alice"
//! metric = "l1"
//! holdings = ["widget"]
//! ```
//!
//! Loading validates every cross-reference and value and reports all
//! problems at once. [`Scenario::compile`] turns a valid scenario into the
//! library's runtime types.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundling::{BundlingModel, BundlingScope, ScalarSample};
use crate::market::{Agent, MarketConfig, MarketSetup};
use crate::optimize::{DesignProblem, PriceProblem, DEFAULT_BEAM_WIDTH};
use crate::property_space::{Effect, NamedObject, Pattern, PropertyMorphism, PropertySet};
use crate::valuation_space::{DistanceTable, MetricKind, ValueMetric, DEFAULT_EPSILON};
use crate::value_functors::{AgentAttributeSet, MorphismMap, ValueFunctor, ValueRule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectDecl {
    pub name: String,
    #[serde(default)]
    pub properties: PropertySet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorphismDecl {
    pub name: String,
    /// Conjunction of patterns; empty matches everything.
    #[serde(default)]
    pub requires: Vec<Pattern>,
    #[serde(default)]
    pub effects: Vec<Effect>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKindDecl {
    #[default]
    WeightedL1,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub from: String,
    pub to: String,
    pub distance: f64,
}

fn default_one() -> f64 {
    1.0
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDecl {
    pub name: String,
    #[serde(default)]
    pub kind: MetricKindDecl,
    #[serde(default)]
    pub importance: BTreeMap<String, f64>,
    #[serde(default = "default_one")]
    pub default_importance: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub table: Vec<TableEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctorDecl {
    pub name: String,
    #[serde(default)]
    pub rules: BTreeMap<String, ValueRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<ValueRule>,
    #[serde(default)]
    pub morphism_map: MorphismMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentDecl {
    pub name: String,
    pub functor: String,
    pub metric: String,
    #[serde(default)]
    pub attributes: AgentAttributeSet,
    #[serde(default)]
    pub holdings: Vec<String>,
    /// Ideal-point valuation used for preference rankings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundlingDecl {
    pub name: String,
    pub gamma: f64,
    pub kappa: f64,
    #[serde(default)]
    pub scope: BundlingScope,
    /// Probes for the scalar-law check; a default grid is used when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<ScalarSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignDecl {
    pub name: String,
    pub base: String,
    #[serde(default)]
    pub catalog: Vec<String>,
    #[serde(default)]
    pub costs: BTreeMap<String, f64>,
    #[serde(default)]
    pub audience: Vec<String>,
    pub max_steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beam_width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_evaluations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceDecl {
    pub name: String,
    pub product: String,
    #[serde(default)]
    pub audience: Vec<String>,
    pub bundling: String,
    pub quantity_grid: Vec<u64>,
    pub price_grid: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalysisDecl {
    /// Agent attribute that defines segments for `segment-report`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_by: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub market: MarketConfig,
    #[serde(default)]
    pub analysis: AnalysisDecl,
    #[serde(default)]
    pub objects: Vec<ObjectDecl>,
    #[serde(default)]
    pub morphisms: Vec<MorphismDecl>,
    #[serde(default)]
    pub metrics: Vec<MetricDecl>,
    #[serde(default)]
    pub functors: Vec<FunctorDecl>,
    #[serde(default)]
    pub agents: Vec<AgentDecl>,
    #[serde(default)]
    pub bundling: Vec<BundlingDecl>,
    #[serde(default)]
    pub design_problems: Vec<DesignDecl>,
    #[serde(default)]
    pub price_problems: Vec<PriceDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum ValidationIssue {
    Duplicate {
        kind: &'static str,
        name: String,
    },
    /// `owner` refers to a `kind` called `name` that does not exist.
    Dangling {
        kind: &'static str,
        name: String,
        owner: String,
    },
    Invalid {
        context: String,
        message: String,
    },
}

impl ValidationIssue {
    /// The offending name, for duplicate and dangling issues.
    pub fn name(&self) -> Option<&str> {
        match self {
            ValidationIssue::Duplicate { name, .. } | ValidationIssue::Dangling { name, .. } => Some(name),
            ValidationIssue::Invalid { .. } => None,
        }
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::Duplicate { kind, name } => write!(f, "duplicate {kind} `{name}`"),
            ValidationIssue::Dangling { kind, name, owner } => {
                write!(f, "{owner} refers to undeclared {kind} `{name}`")
            }
            ValidationIssue::Invalid { context, message } => write!(f, "{context}: {message}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{} validation error(s): {}", .0.len(), join_issues(.0))]
    Validation(Vec<ValidationIssue>),
}

fn join_issues(issues: &[ValidationIssue]) -> String {
    issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ")
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |nl| before.len() - nl - 1) + 1;
    (line, column)
}

/// Parses and validates scenario text.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let scenario: Scenario = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
        ScenarioError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    let issues = scenario.validate();
    if issues.is_empty() {
        Ok(scenario)
    } else {
        Err(ScenarioError::Validation(issues))
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_scenario(&text)
}

/// Runtime form of a validated scenario.
#[derive(Debug, Clone)]
pub struct Model {
    pub seed: u64,
    pub objects: Vec<NamedObject>,
    pub morphisms: Vec<PropertyMorphism>,
    pub metrics: BTreeMap<String, ValueMetric>,
    pub agents: Vec<Agent>,
    /// Ideal points per agent id, for agents that declare one.
    pub references: BTreeMap<String, BTreeMap<String, f64>>,
    pub bundling: BTreeMap<String, (BundlingModel, Vec<ScalarSample>)>,
    pub design_problems: BTreeMap<String, DesignProblem>,
    pub price_problems: BTreeMap<String, PriceProblem>,
    pub market: MarketConfig,
    pub group_by: Option<String>,
}

impl Model {
    pub fn market_setup(&self) -> MarketSetup {
        MarketSetup {
            agents: self.agents.clone(),
            objects: self.objects.clone(),
            config: self.market.clone(),
        }
    }

    pub fn agent(&self, id: &str) -> Option<&Agent> {
        self.agents.iter().find(|a| a.id == id)
    }
}

fn check_unique<'a>(
    kind: &'static str,
    names: impl Iterator<Item = &'a str>,
    issues: &mut Vec<ValidationIssue>,
) -> BTreeSet<&'a str> {
    let mut seen = BTreeSet::new();
    let mut reported = BTreeSet::new();
    for name in names {
        if !seen.insert(name) && reported.insert(name) {
            issues.push(ValidationIssue::Duplicate {
                kind,
                name: name.to_string(),
            });
        }
    }
    seen
}

impl Scenario {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenarios always serialize")
    }

    fn metric(decl: &MetricDecl) -> ValueMetric {
        let kind = match decl.kind {
            MetricKindDecl::WeightedL1 => MetricKind::WeightedL1,
            MetricKindDecl::Table => {
                let mut table = DistanceTable::new();
                for e in &decl.table {
                    table.insert(&e.from, &e.to, e.distance);
                }
                MetricKind::Table(table)
            }
        };
        ValueMetric {
            kind,
            importance: decl.importance.clone(),
            default_importance: decl.default_importance,
            epsilon: decl.epsilon,
        }
    }

    fn functor(decl: &FunctorDecl) -> ValueFunctor {
        ValueFunctor {
            name: decl.name.clone(),
            agent: String::new(),
            rules: decl.rules.clone(),
            fallback: decl.fallback.clone(),
            morphism_map: decl.morphism_map,
        }
    }

    /// Every problem with the scenario, sorted.
    pub fn validate(&self) -> Vec<ValidationIssue> {
        let mut issues = Vec::new();
        let invalid = |context: String, message: String| ValidationIssue::Invalid { context, message };

        let objects = check_unique("object", self.objects.iter().map(|o| o.name.as_str()), &mut issues);
        let morphisms = check_unique("morphism", self.morphisms.iter().map(|m| m.name.as_str()), &mut issues);
        let metrics = check_unique("metric", self.metrics.iter().map(|m| m.name.as_str()), &mut issues);
        let functors = check_unique("functor", self.functors.iter().map(|f| f.name.as_str()), &mut issues);
        let agents = check_unique("agent", self.agents.iter().map(|a| a.name.as_str()), &mut issues);
        let bundling = check_unique(
            "bundling model",
            self.bundling.iter().map(|b| b.name.as_str()),
            &mut issues,
        );
        check_unique(
            "design problem",
            self.design_problems.iter().map(|d| d.name.as_str()),
            &mut issues,
        );
        check_unique(
            "price problem",
            self.price_problems.iter().map(|p| p.name.as_str()),
            &mut issues,
        );

        let mut dangling = |kind: &'static str, name: &str, owner: String, known: &BTreeSet<&str>| {
            if !known.contains(name) {
                issues.push(ValidationIssue::Dangling {
                    kind,
                    name: name.to_string(),
                    owner,
                });
            }
        };
        for a in &self.agents {
            dangling("functor", &a.functor, format!("agent `{}`", a.name), &functors);
            dangling("metric", &a.metric, format!("agent `{}`", a.name), &metrics);
            for h in &a.holdings {
                dangling("object", h, format!("agent `{}`", a.name), &objects);
            }
        }
        for d in &self.design_problems {
            let owner = format!("design problem `{}`", d.name);
            dangling("object", &d.base, owner.clone(), &objects);
            for m in &d.catalog {
                dangling("morphism", m, owner.clone(), &morphisms);
            }
            for a in &d.audience {
                dangling("agent", a, owner.clone(), &agents);
            }
        }
        for p in &self.price_problems {
            let owner = format!("price problem `{}`", p.name);
            dangling("object", &p.product, owner.clone(), &objects);
            dangling("bundling model", &p.bundling, owner.clone(), &bundling);
            for a in &p.audience {
                dangling("agent", a, owner.clone(), &agents);
            }
        }

        for o in &self.objects {
            for (k, v) in o.properties.iter() {
                if !v.is_finite() {
                    issues.push(invalid(
                        format!("object `{}`", o.name),
                        format!("property `{k}` is not finite"),
                    ));
                }
            }
        }
        for m in &self.morphisms {
            for e in &m.effects {
                let bad = match e {
                    Effect::Add { amount, .. } => !amount.is_finite(),
                    Effect::Set { value, .. } => !value.is_finite(),
                    _ => false,
                };
                if bad {
                    issues.push(invalid(format!("morphism `{}`", m.name), "non-finite effect".into()));
                }
            }
        }
        for m in &self.metrics {
            if let Err(e) = Self::metric(m).validate() {
                issues.push(invalid(format!("metric `{}`", m.name), e.to_string()));
            }
            if m.kind == MetricKindDecl::WeightedL1 && !m.table.is_empty() {
                issues.push(invalid(
                    format!("metric `{}`", m.name),
                    "distance table given for a weighted-l1 metric".into(),
                ));
            }
        }
        for f in &self.functors {
            if let Err(e) = Self::functor(f).validate() {
                issues.push(invalid(format!("functor `{}`", f.name), e));
            }
        }
        for b in &self.bundling {
            if let Err(e) = BundlingModel::new(b.gamma, b.kappa) {
                issues.push(invalid(format!("bundling model `{}`", b.name), e.to_string()));
            }
            if b.samples
                .iter()
                .any(|s| s.alpha == 0 || s.beta == 0 || !s.unit_total.is_finite())
            {
                issues.push(invalid(
                    format!("bundling model `{}`", b.name),
                    "samples need positive counts and finite unit totals".into(),
                ));
            }
        }
        for d in &self.design_problems {
            for m in &d.catalog {
                if !d.costs.contains_key(m) {
                    issues.push(invalid(
                        format!("design problem `{}`", d.name),
                        format!("no cost for `{m}`"),
                    ));
                }
            }
            if d.beam_width == Some(0) {
                issues.push(invalid(
                    format!("design problem `{}`", d.name),
                    "beam width must be positive".into(),
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.market.split) {
            issues.push(invalid(
                "market".into(),
                format!("split must lie in [0, 1], got {}", self.market.split),
            ));
        }

        // Checks that need the runtime types; only meaningful once every
        // reference resolves.
        if issues.is_empty() {
            let model = self.build();
            for problem in model.market_setup().problems() {
                issues.push(invalid("market".into(), problem));
            }
            for (name, p) in &model.price_problems {
                if let Err(e) = p.validate() {
                    issues.push(invalid(format!("price problem `{name}`"), e.to_string()));
                }
            }
        }
        issues.sort();
        issues.dedup();
        issues
    }

    fn build(&self) -> Model {
        let objects: Vec<NamedObject> = self
            .objects
            .iter()
            .map(|o| NamedObject::new(o.name.clone(), o.properties.clone()))
            .collect();
        let morphisms: BTreeMap<&str, PropertyMorphism> = self
            .morphisms
            .iter()
            .map(|m| {
                (
                    m.name.as_str(),
                    PropertyMorphism::rewrite(m.name.clone(), Pattern::all(m.requires.clone()), m.effects.clone()),
                )
            })
            .collect();
        let metrics: BTreeMap<String, ValueMetric> =
            self.metrics.iter().map(|m| (m.name.clone(), Self::metric(m))).collect();
        let functors: BTreeMap<&str, ValueFunctor> = self
            .functors
            .iter()
            .map(|f| (f.name.as_str(), Self::functor(f)))
            .collect();
        let agents: Vec<Agent> = self
            .agents
            .iter()
            .map(|a| {
                let mut agent = Agent::new(
                    a.name.clone(),
                    functors[a.functor.as_str()].clone(),
                    metrics[&a.metric].clone(),
                )
                .with_attributes(a.attributes.clone());
                agent.holdings = a.holdings.iter().cloned().collect();
                agent
            })
            .collect();
        let agent_by_id = |id: &str| agents.iter().find(|a| a.id == id).cloned().unwrap();
        let object_by_id = |id: &str| objects.iter().find(|o| o.id == id).unwrap().properties.clone();
        let bundling: BTreeMap<String, (BundlingModel, Vec<ScalarSample>)> = self
            .bundling
            .iter()
            .map(|b| {
                let model = BundlingModel {
                    gamma: b.gamma,
                    kappa: b.kappa,
                    scope: b.scope,
                };
                (b.name.clone(), (model, b.samples.clone()))
            })
            .collect();
        let design_problems = self
            .design_problems
            .iter()
            .map(|d| {
                let problem = DesignProblem {
                    base: object_by_id(&d.base),
                    catalog: d.catalog.iter().map(|m| morphisms[m.as_str()].clone()).collect(),
                    costs: d.costs.clone(),
                    audience: d.audience.iter().map(|a| agent_by_id(a)).collect(),
                    max_steps: d.max_steps,
                    beam_width: d.beam_width.unwrap_or(DEFAULT_BEAM_WIDTH),
                    max_evaluations: d.max_evaluations,
                };
                (d.name.clone(), problem)
            })
            .collect();
        let price_problems = self
            .price_problems
            .iter()
            .map(|p| {
                let problem = PriceProblem {
                    product: object_by_id(&p.product),
                    audience: p.audience.iter().map(|a| agent_by_id(a)).collect(),
                    bundling: bundling[&p.bundling].0,
                    quantity_grid: p.quantity_grid.clone(),
                    price_grid: p.price_grid.clone(),
                };
                (p.name.clone(), problem)
            })
            .collect();
        let references = self
            .agents
            .iter()
            .filter_map(|a| a.reference.clone().map(|r| (a.name.clone(), r)))
            .collect();
        Model {
            seed: self.seed,
            morphisms: self
                .morphisms
                .iter()
                .map(|m| morphisms[m.name.as_str()].clone())
                .collect(),
            objects,
            metrics,
            agents,
            references,
            bundling,
            design_problems,
            price_problems,
            market: self.market.clone(),
            group_by: self.analysis.group_by.clone(),
        }
    }

    /// Validates and converts to runtime types.
    pub fn compile(&self) -> Result<Model, ScenarioError> {
        let issues = self.validate();
        if issues.is_empty() {
            Ok(self.build())
        } else {
            Err(ScenarioError::Validation(issues))
        }
    }
}
