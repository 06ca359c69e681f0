//! Agents, ownership transfers and the round-based exchange simulation.
//!
//! Ownership is an ordinary property of the object. A transfer is the
//! morphism rewriting that property from seller to buyer; each side's
//! valuation delta is the metric distance between its valuations of the
//! object before and after the rewrite. A trade happens when the buyer's delta
//! is at least the seller's, at a price inside `[d_seller, d_buyer]`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::property_space::{NamedObject, PropertyMorphism, PropertySet, PropertyValue};
use crate::valuation_space::{distance, ValueMetric};
use crate::value_functors::{AgentAttributeSet, ValueFunctor};

pub const LOG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub id: String,
    pub attributes: AgentAttributeSet,
    pub functor: ValueFunctor,
    pub metric: ValueMetric,
    pub holdings: BTreeSet<String>,
}

impl Agent {
    pub fn new(id: impl Into<String>, functor: ValueFunctor, metric: ValueMetric) -> Self {
        let id = id.into();
        Self {
            functor: functor.for_agent(id.clone()),
            id,
            attributes: AgentAttributeSet::new(),
            metric,
            holdings: BTreeSet::new(),
        }
    }

    pub fn with_attributes(mut self, attributes: AgentAttributeSet) -> Self {
        self.attributes = attributes;
        self
    }

    pub fn holding(mut self, object: impl Into<String>) -> Self {
        self.holdings.insert(object.into());
        self
    }

    /// How much this agent's valuation of `object` moves under `transfer`.
    pub fn transfer_delta(&self, object: &PropertySet, transfer: &PropertyMorphism) -> Result<f64> {
        let after = transfer.apply(object)?;
        let before = self.functor.evaluate(object)?;
        let after = self.functor.evaluate(&after)?;
        distance(&self.metric, &before, &after)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Threshold {
    /// Trade when `d_buyer >= d_seller`.
    #[default]
    Weak,
    /// Trade only when `d_buyer > d_seller`.
    Strict,
}

impl Threshold {
    pub fn admits(self, d_seller: f64, d_buyer: f64) -> bool {
        match self {
            Threshold::Weak => d_buyer >= d_seller,
            Threshold::Strict => d_buyer > d_seller,
        }
    }
}

/// Price of a trade between deltas `d_seller` and `d_buyer`, or `None` when
/// the threshold fails.
pub fn trade_price(d_seller: f64, d_buyer: f64, split: f64, threshold: Threshold) -> Option<f64> {
    threshold
        .admits(d_seller, d_buyer)
        .then_some(d_seller + split * (d_buyer - d_seller))
}

pub fn ownership_deltas(
    seller: &Agent,
    buyer: &Agent,
    object: &PropertySet,
    transfer: &PropertyMorphism,
) -> Result<(f64, f64)> {
    Ok((
        seller.transfer_delta(object, transfer)?,
        buyer.transfer_delta(object, transfer)?,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeEvent {
    pub round: u32,
    pub seller: String,
    pub buyer: String,
    pub object: String,
    pub d_seller: f64,
    pub d_buyer: f64,
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoTradeEvent {
    pub round: u32,
    pub seller: String,
    pub buyer: String,
    pub object: String,
    pub d_seller: f64,
    pub d_buyer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MarketEvent {
    Trade(TradeEvent),
    NoTrade(NoTradeEvent),
}

impl MarketEvent {
    pub fn as_trade(&self) -> Option<&TradeEvent> {
        match self {
            MarketEvent::Trade(t) => Some(t),
            MarketEvent::NoTrade(_) => None,
        }
    }
}

/// Decides one candidate transaction. `Ok(None)` means the threshold failed.
pub fn evaluate_transaction(
    seller: &Agent,
    buyer: &Agent,
    object: &NamedObject,
    transfer: &PropertyMorphism,
    split: f64,
) -> Result<Option<TradeEvent>> {
    match assess(seller, buyer, object, transfer, split, Threshold::Weak, 0)? {
        MarketEvent::Trade(t) => Ok(Some(t)),
        MarketEvent::NoTrade(_) => Ok(None),
    }
}

fn assess(
    seller: &Agent,
    buyer: &Agent,
    object: &NamedObject,
    transfer: &PropertyMorphism,
    split: f64,
    threshold: Threshold,
    round: u32,
) -> Result<MarketEvent> {
    if !seller.holdings.contains(&object.id) {
        return Err(Error::NotOwner {
            agent: seller.id.clone(),
            object: object.id.clone(),
        });
    }
    let (d_seller, d_buyer) = ownership_deltas(seller, buyer, &object.properties, transfer)?;
    Ok(match trade_price(d_seller, d_buyer, split, threshold) {
        Some(price) => MarketEvent::Trade(TradeEvent {
            round,
            seller: seller.id.clone(),
            buyer: buyer.id.clone(),
            object: object.id.clone(),
            d_seller,
            d_buyer,
            price,
        }),
        None => MarketEvent::NoTrade(NoTradeEvent {
            round,
            seller: seller.id.clone(),
            buyer: buyer.id.clone(),
            object: object.id.clone(),
            d_seller,
            d_buyer,
        }),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarketConfig {
    pub rounds: u32,
    /// Surplus split φ in [0, 1].
    pub split: f64,
    pub threshold: Threshold,
    pub ownership_property: String,
}

impl Default for MarketConfig {
    fn default() -> Self {
        Self {
            rounds: 10,
            split: 0.5,
            threshold: Threshold::Weak,
            ownership_property: "owner".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketSetup {
    pub agents: Vec<Agent>,
    pub objects: Vec<NamedObject>,
    pub config: MarketConfig,
}

impl MarketSetup {
    /// Every problem that would stop a run, collected rather than stopping
    /// at the first.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let cfg = &self.config;
        if !(0.0..=1.0).contains(&cfg.split) {
            out.push(format!("split must lie in [0, 1], got {}", cfg.split));
        }
        let objects: BTreeMap<&str, &PropertySet> =
            self.objects.iter().map(|o| (o.id.as_str(), &o.properties)).collect();
        let mut held_by: BTreeMap<&str, &str> = BTreeMap::new();
        for agent in &self.agents {
            for obj in &agent.holdings {
                let Some(props) = objects.get(obj.as_str()) else {
                    out.push(format!("agent `{}` holds unknown object `{obj}`", agent.id));
                    continue;
                };
                if let Some(prev) = held_by.insert(obj, &agent.id) {
                    out.push(format!("object `{obj}` held by both `{prev}` and `{}`", agent.id));
                }
                if props.get(&cfg.ownership_property) != Some(&PropertyValue::label(&agent.id)) {
                    out.push(format!(
                        "object `{obj}` held by `{}` must have `{}` = \"{}\"",
                        agent.id, cfg.ownership_property, agent.id
                    ));
                }
            }
        }
        for agent in &self.agents {
            for obj in &self.objects {
                if !held_by.contains_key(obj.id.as_str()) {
                    continue;
                }
                for owner in &self.agents {
                    let mut p = obj.properties.clone();
                    p.insert(cfg.ownership_property.clone(), PropertyValue::label(&owner.id));
                    if let Err(e) = agent.functor.evaluate(&p) {
                        out.push(format!(
                            "agent `{}` cannot value `{}` owned by `{}`: {e}",
                            agent.id, obj.id, owner.id
                        ));
                    }
                }
            }
        }
        out
    }
}

/// A stepping simulation. [`run_market`] drives it for the configured
/// number of rounds.
#[derive(Debug, Clone)]
pub struct MarketSim {
    agents: BTreeMap<String, Agent>,
    objects: BTreeMap<String, PropertySet>,
    config: MarketConfig,
    rng: ChaCha8Rng,
    round: u32,
}

impl MarketSim {
    pub fn new(setup: &MarketSetup, seed: u64) -> Result<Self> {
        let problems = setup.problems();
        if !problems.is_empty() {
            return Err(Error::InvalidProblem(problems.join("; ")));
        }
        Ok(Self {
            agents: setup.agents.iter().map(|a| (a.id.clone(), a.clone())).collect(),
            objects: setup
                .objects
                .iter()
                .map(|o| (o.id.clone(), o.properties.clone()))
                .collect(),
            config: setup.config.clone(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            round: 0,
        })
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn agent(&self, id: &str) -> Option<&Agent> {
        self.agents.get(id)
    }

    pub fn object(&self, id: &str) -> Option<&PropertySet> {
        self.objects.get(id)
    }

    pub fn owner_of(&self, object: &str) -> Option<&str> {
        self.agents
            .values()
            .find(|a| a.holdings.contains(object))
            .map(|a| a.id.as_str())
    }

    /// True when no object is held by two agents and every holding agrees
    /// with the object's ownership property.
    pub fn single_owner_holds(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.agents.values().all(|a| {
            a.holdings.iter().all(|o| {
                seen.insert(o.clone())
                    && self.objects.get(o).and_then(|p| p.get(&self.config.ownership_property))
                        == Some(&PropertyValue::label(&a.id))
            })
        })
    }

    /// Runs one round: each owned object, in id order, is offered to one
    /// randomly drawn other agent.
    pub fn step(&mut self) -> Result<Vec<MarketEvent>> {
        let round = self.round;
        self.round += 1;
        let mut events = Vec::new();
        let object_ids: Vec<String> = self.objects.keys().cloned().collect();
        for object_id in object_ids {
            let Some(seller_id) = self.owner_of(&object_id).map(str::to_string) else {
                continue;
            };
            let candidates: Vec<&String> = self.agents.keys().filter(|id| **id != seller_id).collect();
            if candidates.is_empty() {
                continue;
            }
            let pick = self.rng.random_range(0..candidates.len() as u32) as usize;
            let buyer_id = candidates[pick].clone();

            let transfer = PropertyMorphism::ownership_transfer(&self.config.ownership_property, &seller_id, &buyer_id);
            let object = NamedObject::new(object_id.clone(), self.objects[&object_id].clone());
            let event = assess(
                &self.agents[&seller_id],
                &self.agents[&buyer_id],
                &object,
                &transfer,
                self.config.split,
                self.config.threshold,
                round,
            )?;
            if let MarketEvent::Trade(_) = &event {
                let after = transfer.apply(&object.properties)?;
                self.objects.insert(object_id.clone(), after);
                self.agents.get_mut(&seller_id).unwrap().holdings.remove(&object_id);
                self.agents.get_mut(&buyer_id).unwrap().holdings.insert(object_id);
            }
            events.push(event);
        }
        Ok(events)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub schema_version: u32,
    pub seed: u64,
    pub rounds: u32,
    pub events: Vec<MarketEvent>,
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

impl EventLog {
    pub fn trades(&self) -> impl Iterator<Item = &TradeEvent> {
        self.events.iter().filter_map(MarketEvent::as_trade)
    }

    /// Line-delimited JSON: a header line, then one line per event. Field
    /// order is fixed and reals carry exactly 9 fractional digits.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        let v = self.schema_version;
        writeln!(
            out,
            r#"{{"schema":{v},"kind":"header","seed":{},"rounds":{}}}"#,
            self.seed, self.rounds
        )
        .unwrap();
        for event in &self.events {
            match event {
                MarketEvent::Trade(t) => writeln!(
                    out,
                    r#"{{"schema":{v},"kind":"trade","round":{},"seller":{},"buyer":{},"object":{},"d_seller":{:.9},"d_buyer":{:.9},"price":{:.9}}}"#,
                    t.round,
                    json_str(&t.seller),
                    json_str(&t.buyer),
                    json_str(&t.object),
                    t.d_seller,
                    t.d_buyer,
                    t.price
                ),
                MarketEvent::NoTrade(n) => writeln!(
                    out,
                    r#"{{"schema":{v},"kind":"no-trade","round":{},"seller":{},"buyer":{},"object":{},"d_seller":{:.9},"d_buyer":{:.9}}}"#,
                    n.round,
                    json_str(&n.seller),
                    json_str(&n.buyer),
                    json_str(&n.object),
                    n.d_seller,
                    n.d_buyer
                ),
            }
            .unwrap();
        }
        out
    }
}

pub fn run_market(setup: &MarketSetup, seed: u64) -> Result<EventLog> {
    let mut sim = MarketSim::new(setup, seed)?;
    let mut events = Vec::new();
    if !setup.agents.is_empty() {
        for _ in 0..setup.config.rounds {
            events.extend(sim.step()?);
        }
    }
    Ok(EventLog {
        schema_version: LOG_SCHEMA_VERSION,
        seed,
        rounds: setup.config.rounds,
        events,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeStats {
    pub trades: usize,
    pub no_trades: usize,
    /// Price quantiles at 0, 0.25, 0.5, 0.75 and 1, linearly interpolated.
    /// Empty when nothing traded.
    pub price_quantiles: Vec<f64>,
}

pub fn trade_stats(log: &EventLog) -> TradeStats {
    let mut prices: Vec<f64> = log.trades().map(|t| t.price).collect();
    prices.sort_by(f64::total_cmp);
    let quantile = |q: f64| {
        let pos = q * (prices.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        prices[lo] + (pos - lo as f64) * (prices[hi] - prices[lo])
    };
    let price_quantiles = if prices.is_empty() {
        Vec::new()
    } else {
        [0.0, 0.25, 0.5, 0.75, 1.0].into_iter().map(quantile).collect()
    };
    TradeStats {
        trades: prices.len(),
        no_trades: log.events.len() - prices.len(),
        price_quantiles,
    }
}
