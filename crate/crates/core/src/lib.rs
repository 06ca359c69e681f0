//! Category-theoretic models of valuation and exchange.
//!
//! Objects are property sets rewritten by morphisms; value functors map them
//! to valuations, which live in a metric space. Markets trade ownership when
//! the buyer gains at least what the seller loses, and optimizers search
//! design sequences and price grids.

pub mod bundling;
pub mod dispatch;
pub mod error;
pub mod law;
pub mod market;
pub mod optimize;
pub mod property_space;
pub mod scenario;
pub mod valuation_space;
pub mod value_functors;

pub use bundling::{bundle_value, check_scalar_laws, BundlingModel, BundlingScope, ScalarSample};
pub use dispatch::{dispatch, Command, DispatchError, Flags, RunOutput, RunReport};
pub use error::{Error, Result};
pub use law::{Law, LawReport, LawVerdict, Witness};
pub use market::{
    evaluate_transaction, run_market, trade_price, Agent, EventLog, MarketConfig, MarketEvent, MarketSetup, MarketSim,
    Threshold, TradeEvent,
};
pub use optimize::{optimize_design, optimize_price, DesignOutcome, DesignProblem, PriceOutcome, PriceProblem};
pub use property_space::{
    apply_morphism, check_morphism_laws, compose, Effect, NamedObject, Pattern, PropertyMorphism, PropertySet,
    PropertyValue,
};
pub use scenario::{load_scenario, parse_scenario, Model, Scenario, ScenarioError, ValidationIssue};
pub use valuation_space::{
    check_metric_axioms, detect_arbitrage, distance, ArbitrageFinding, DistanceTable, MetricKind, ValuationSet,
    ValueMetric,
};
pub use value_functors::{
    check_functor_laws, evaluate, rank_preferences, segment_analysis, AgentAttributeSet, MorphismMap,
    PreferenceRelation, SegmentReport, ValueFunctor, ValueRule,
};
