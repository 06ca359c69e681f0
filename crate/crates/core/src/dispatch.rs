//! Command pipelines behind the `catecon` binary.
//!
//! Exit codes: 0 on success, 1 when a gating law fails or arbitrage is
//! found, 2 on any error.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::bundling::{check_scalar_laws, default_scalar_samples};
use crate::error::Error;
use crate::law::LawReport;
use crate::market::{run_market, trade_stats, EventLog, TradeStats};
use crate::optimize::{optimize_design, optimize_price, DesignOutcome, PriceOutcome};
use crate::property_space::{check_morphism_laws, PropertySet};
use crate::scenario::{Model, Scenario, ScenarioError};
use crate::valuation_space::{check_metric_axioms, detect_arbitrage, ArbitrageFinding, MetricKind, ValuationSet};
use crate::value_functors::{
    check_functor_laws, rank_preferences, segment_analysis, PreferenceRelation, SegmentReport,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Command {
    CheckLaws,
    DetectArbitrage,
    Simulate,
    OptimizeDesign,
    OptimizePrice,
    SegmentReport,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::CheckLaws,
        Command::DetectArbitrage,
        Command::Simulate,
        Command::OptimizeDesign,
        Command::OptimizePrice,
        Command::SegmentReport,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::CheckLaws => "check-laws",
            Command::DetectArbitrage => "detect-arbitrage",
            Command::Simulate => "simulate",
            Command::OptimizeDesign => "optimize-design",
            Command::OptimizePrice => "optimize-price",
            Command::SegmentReport => "segment-report",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = DispatchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| DispatchError::UnknownCommand(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum DispatchError {
    #[error("unknown command `{0}`")]
    UnknownCommand(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Model(#[from] Error),
    #[error("invalid flag: {0}")]
    InvalidFlag(String),
}

impl DispatchError {
    pub fn exit_code(&self) -> i32 {
        EXIT_ERROR
    }
}

/// Command-line overrides of scenario settings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Flags {
    pub seed: Option<u64>,
    pub rounds: Option<u32>,
    pub split: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub seed: u64,
    /// Keyed by what was checked, e.g. `functor/alice` or `table/prices`.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub law_reports: BTreeMap<String, LawReport>,
    /// `<report key>/<law>` for every failed law that sets the exit code.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub gating_failures: Vec<String>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub arbitrage: BTreeMap<String, Vec<ArbitrageFinding>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trade_stats: Option<TradeStats>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub design: BTreeMap<String, DesignOutcome>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub price: BTreeMap<String, PriceOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segments: Option<SegmentReport>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub preferences: BTreeMap<String, PreferenceRelation>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl RunReport {
    /// Pretty JSON with object keys sorted.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("reports always serialize");
        serde_json::to_string_pretty(&value).expect("values always serialize")
    }

    fn add_laws(&mut self, key: String, report: LawReport, gating: bool) {
        if gating {
            for law in report.failed_laws() {
                self.gating_failures.push(format!("{key}/{law}"));
            }
        }
        self.law_reports.insert(key, report);
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    /// Present for `simulate`.
    pub log: Option<EventLog>,
    pub exit_code: i32,
}

/// Runs `command` on an already loaded scenario.
pub fn dispatch(command: Command, scenario: &Scenario, flags: &Flags) -> Result<RunOutput, DispatchError> {
    let mut scenario = scenario.clone();
    if let Some(seed) = flags.seed {
        scenario.seed = seed;
    }
    if let Some(rounds) = flags.rounds {
        scenario.market.rounds = rounds;
    }
    if let Some(split) = flags.split {
        if !(0.0..=1.0).contains(&split) {
            return Err(DispatchError::InvalidFlag(format!(
                "--split must lie in [0, 1], got {split}"
            )));
        }
        scenario.market.split = split;
    }
    let model = scenario.compile()?;
    let mut report = RunReport {
        command: command.to_string(),
        seed: model.seed,
        ..RunReport::default()
    };
    let mut log = None;
    match command {
        Command::CheckLaws => check_laws(&model, &mut report)?,
        Command::DetectArbitrage => arbitrage(&model, &mut report)?,
        Command::Simulate => {
            let events = run_market(&model.market_setup(), model.seed)?;
            report.trade_stats = Some(trade_stats(&events));
            log = Some(events);
        }
        Command::OptimizeDesign => {
            if model.design_problems.is_empty() {
                report.warnings.push("no design problems declared".into());
            }
            for (name, problem) in &model.design_problems {
                match optimize_design(problem) {
                    Ok(outcome) => {
                        report.design.insert(name.clone(), outcome);
                    }
                    Err(Error::SearchBudgetExceeded { budget, best }) => {
                        report.warnings.push(format!(
                            "design problem `{name}` hit its budget of {budget} evaluations; reporting best so far"
                        ));
                        report.design.insert(name.clone(), *best);
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
        Command::OptimizePrice => {
            if model.price_problems.is_empty() {
                report.warnings.push("no price problems declared".into());
            }
            for (name, problem) in &model.price_problems {
                report.price.insert(name.clone(), optimize_price(problem)?);
            }
        }
        Command::SegmentReport => segments(&model, &mut report)?,
    }
    let violated = !report.gating_failures.is_empty() || report.arbitrage.values().any(|f| !f.is_empty());
    Ok(RunOutput {
        report,
        log,
        exit_code: if violated { EXIT_VIOLATION } else { EXIT_OK },
    })
}

/// Parses `command`, then dispatches.
pub fn dispatch_str(command: &str, scenario: &Scenario, flags: &Flags) -> Result<RunOutput, DispatchError> {
    dispatch(command.parse()?, scenario, flags)
}

fn samples(model: &Model) -> Vec<PropertySet> {
    model.objects.iter().map(|o| o.properties.clone()).collect()
}

fn table_points(kind: &MetricKind) -> Option<Vec<ValuationSet>> {
    match kind {
        MetricKind::Table(t) => Some(t.points().into_iter().map(ValuationSet::point).collect()),
        MetricKind::WeightedL1 => None,
    }
}

/// Each agent's valuation of every object, under the agent's own metric.
fn agent_points(model: &Model) -> Result<Vec<(String, Vec<ValuationSet>)>, Error> {
    let mut out = Vec::new();
    for agent in &model.agents {
        if matches!(agent.metric.kind, MetricKind::WeightedL1) {
            let points = model
                .objects
                .iter()
                .map(|o| agent.functor.evaluate_named(o))
                .collect::<Result<Vec<_>, _>>()?;
            out.push((agent.id.clone(), points));
        }
    }
    Ok(out)
}

fn check_laws(model: &Model, report: &mut RunReport) -> Result<(), Error> {
    let samples = samples(model);
    report.add_laws(
        "morphisms".into(),
        check_morphism_laws(&model.morphisms, &samples),
        true,
    );

    for agent in &model.agents {
        let key = format!("functor/{}", agent.id);
        match check_functor_laws(&agent.functor, &model.morphisms, &samples) {
            Ok(laws) => report.add_laws(key, laws, true),
            Err(Error::InsufficientSamples { .. }) => report.warnings.push(format!("{key}: no objects to check")),
            Err(e) => return Err(e),
        }
    }

    for (agent, points) in agent_points(model)? {
        let key = format!("metric/{agent}");
        let metric = &model.agent(&agent).expect("known agent").metric;
        match check_metric_axioms(metric, &points) {
            Ok(laws) => report.add_laws(key, laws, true),
            Err(Error::InsufficientSamples { needed, got }) => report.warnings.push(format!(
                "{key}: {got} valuation(s), need {needed} to check metric axioms"
            )),
            Err(e) => return Err(e),
        }
    }

    for (name, metric) in &model.metrics {
        let Some(points) = table_points(&metric.kind) else {
            continue;
        };
        let key = format!("table/{name}");
        match check_metric_axioms(metric, &points) {
            Ok(laws) => report.add_laws(key, laws, true),
            Err(Error::InsufficientSamples { needed, got }) => report
                .warnings
                .push(format!("{key}: {got} point(s), need {needed} to check metric axioms")),
            Err(e) => return Err(e),
        }
    }

    // Nonlinear bundling is a modelling choice, so scalar-law failures are
    // reported without failing the run.
    for (name, (model, probes)) in &model.bundling {
        let probes = if probes.is_empty() {
            default_scalar_samples()
        } else {
            probes.clone()
        };
        let laws = check_scalar_laws(model, &probes)?;
        report.add_laws(format!("bundling/{name}"), laws, false);
    }
    Ok(())
}

fn arbitrage(model: &Model, report: &mut RunReport) -> Result<(), Error> {
    for (name, metric) in &model.metrics {
        if let Some(points) = table_points(&metric.kind) {
            report
                .arbitrage
                .insert(format!("table/{name}"), detect_arbitrage(metric, &points)?);
        }
    }
    for (agent, points) in agent_points(model)? {
        let metric = &model.agent(&agent).expect("known agent").metric;
        report
            .arbitrage
            .insert(format!("metric/{agent}"), detect_arbitrage(metric, &points)?);
    }
    if report.arbitrage.is_empty() {
        report.warnings.push("no metrics with points to scan".into());
    }
    Ok(())
}

fn segments(model: &Model, report: &mut RunReport) -> Result<(), Error> {
    match &model.group_by {
        Some(group_by) => {
            let agents: Vec<_> = model
                .agents
                .iter()
                .map(|a| (a.attributes.clone(), a.functor.clone()))
                .collect();
            report.segments = Some(segment_analysis(&agents, &model.objects, group_by)?);
        }
        None => report
            .warnings
            .push("analysis.group_by not set: no segment table".into()),
    }
    for agent in &model.agents {
        if let Some(weights) = model.references.get(&agent.id) {
            let reference = ValuationSet::new(agent.id.clone(), "reference", weights.clone());
            let ranking = rank_preferences(&agent.functor, &agent.metric, &reference, &model.objects)?;
            report.preferences.insert(agent.id.clone(), ranking);
        }
    }
    Ok(())
}
