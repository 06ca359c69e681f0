//! Product design search and grid price optimization.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bundling::BundlingModel;
use crate::error::{Error, Result};
use crate::market::Agent;
use crate::property_space::{PropertyMorphism, PropertySet};

/// Search spaces up to this many morphism sequences are enumerated in full.
pub const EXHAUSTIVE_LIMIT: usize = 10_000;

pub const DEFAULT_BEAM_WIDTH: usize = 64;

#[derive(Debug, Clone)]
pub struct DesignProblem {
    pub base: PropertySet,
    pub catalog: Vec<PropertyMorphism>,
    pub costs: BTreeMap<String, f64>,
    pub audience: Vec<Agent>,
    pub max_steps: usize,
    pub beam_width: usize,
    /// Cap on candidate evaluations; exceeding it returns the best so far
    /// inside [`Error::SearchBudgetExceeded`].
    pub max_evaluations: Option<usize>,
}

impl DesignProblem {
    pub fn new(base: PropertySet, audience: Vec<Agent>) -> Self {
        Self {
            base,
            catalog: Vec::new(),
            costs: BTreeMap::new(),
            audience,
            max_steps: 1,
            beam_width: DEFAULT_BEAM_WIDTH,
            max_evaluations: None,
        }
    }

    pub fn with_morphism(mut self, morphism: PropertyMorphism, cost: f64) -> Self {
        self.costs.insert(morphism.name().to_string(), cost);
        self.catalog.push(morphism);
        self
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn with_beam_width(mut self, width: usize) -> Self {
        self.beam_width = width;
        self
    }

    /// Number of morphism sequences of length at most `max_steps`,
    /// saturating.
    pub fn sequence_count(&self) -> usize {
        let c = self.catalog.len();
        let mut total: usize = 1;
        let mut level: usize = 1;
        for _ in 0..self.max_steps {
            level = level.saturating_mul(c);
            total = total.saturating_add(level);
            if level == 0 {
                break;
            }
        }
        total
    }

    fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for m in &self.catalog {
            if !seen.insert(m.name()) {
                return Err(Error::InvalidProblem(format!("duplicate morphism `{}`", m.name())));
            }
            match self.costs.get(m.name()) {
                Some(c) if *c >= 0.0 && c.is_finite() => {}
                Some(c) => {
                    return Err(Error::InvalidProblem(format!(
                        "cost of `{}` must be finite and non-negative, got {c}",
                        m.name()
                    )))
                }
                None => return Err(Error::InvalidProblem(format!("no cost for `{}`", m.name()))),
            }
        }
        if self.beam_width == 0 {
            return Err(Error::InvalidProblem("beam width must be positive".into()));
        }
        Ok(())
    }
}

/// Mean total valuation of `p` across `audience`; 0 for an empty audience.
pub fn audience_value(audience: &[Agent], p: &PropertySet) -> Result<f64> {
    if audience.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for agent in audience {
        sum += agent.functor.evaluate(p)?.total();
    }
    Ok(sum / audience.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SearchStrategy {
    Exhaustive,
    Beam { width: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignOutcome {
    pub design: PropertySet,
    pub objective: f64,
    pub applied: Vec<String>,
    pub strategy: SearchStrategy,
    pub evaluations: usize,
}

#[derive(Clone)]
struct Candidate {
    design: PropertySet,
    applied: Vec<String>,
    cost: f64,
    objective: f64,
}

impl Candidate {
    /// Higher objective wins; ties go to the lexicographically smaller
    /// morphism-name sequence.
    fn beats(&self, other: &Candidate) -> bool {
        self.objective > other.objective || (self.objective == other.objective && self.applied < other.applied)
    }
}

struct Search<'a> {
    problem: &'a DesignProblem,
    strategy: SearchStrategy,
    evaluations: usize,
    best: Candidate,
}

impl Search<'_> {
    fn outcome(&self) -> DesignOutcome {
        DesignOutcome {
            design: self.best.design.clone(),
            objective: self.best.objective,
            applied: self.best.applied.clone(),
            strategy: self.strategy.clone(),
            evaluations: self.evaluations,
        }
    }

    /// Applies `m` to `from`, scoring the result. `Ok(None)` when the
    /// rewrite or an audience valuation falls outside its domain.
    fn extend(&mut self, from: &Candidate, m: &PropertyMorphism) -> Result<Option<Candidate>> {
        let Ok(design) = m.apply(&from.design) else {
            return Ok(None);
        };
        if let Some(budget) = self.problem.max_evaluations {
            if self.evaluations >= budget {
                return Err(Error::SearchBudgetExceeded {
                    budget,
                    best: Box::new(self.outcome()),
                });
            }
        }
        self.evaluations += 1;
        let Ok(value) = audience_value(&self.problem.audience, &design) else {
            return Ok(None);
        };
        let cost = from.cost + self.problem.costs[m.name()];
        let mut applied = from.applied.clone();
        applied.push(m.name().to_string());
        let candidate = Candidate {
            design,
            applied,
            cost,
            objective: value - cost,
        };
        if candidate.beats(&self.best) {
            self.best = candidate.clone();
        }
        Ok(Some(candidate))
    }

    fn exhaustive(&mut self, from: &Candidate, depth: usize) -> Result<()> {
        if depth == self.problem.max_steps {
            return Ok(());
        }
        for m in &self.problem.catalog {
            if let Some(next) = self.extend(from, m)? {
                self.exhaustive(&next, depth + 1)?;
            }
        }
        Ok(())
    }

    fn beam(&mut self, start: Candidate, width: usize) -> Result<()> {
        let mut frontier = vec![start];
        for _ in 0..self.problem.max_steps {
            let mut next = Vec::new();
            for state in &frontier {
                for m in &self.problem.catalog {
                    if let Some(c) = self.extend(state, m)? {
                        next.push(c);
                    }
                }
            }
            next.sort_by(|a, b| {
                b.objective
                    .total_cmp(&a.objective)
                    .then_with(|| a.applied.cmp(&b.applied))
            });
            next.truncate(width);
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        Ok(())
    }
}

/// Maximizes audience-mean total valuation minus applied morphism costs over
/// morphism sequences of length at most `max_steps`.
pub fn optimize_design(problem: &DesignProblem) -> Result<DesignOutcome> {
    problem.validate()?;
    let base_value = audience_value(&problem.audience, &problem.base)?;
    let start = Candidate {
        design: problem.base.clone(),
        applied: Vec::new(),
        cost: 0.0,
        objective: base_value,
    };
    let strategy = if problem.sequence_count() <= EXHAUSTIVE_LIMIT {
        SearchStrategy::Exhaustive
    } else {
        SearchStrategy::Beam {
            width: problem.beam_width,
        }
    };
    let mut search = Search {
        problem,
        strategy: strategy.clone(),
        evaluations: 1,
        best: start.clone(),
    };
    match strategy {
        SearchStrategy::Exhaustive => search.exhaustive(&start, 0)?,
        SearchStrategy::Beam { width } => search.beam(start, width)?,
    }
    Ok(search.outcome())
}

#[derive(Debug, Clone)]
pub struct PriceProblem {
    pub product: PropertySet,
    pub audience: Vec<Agent>,
    pub bundling: BundlingModel,
    pub quantity_grid: Vec<u64>,
    pub price_grid: Vec<f64>,
}

impl PriceProblem {
    pub fn validate(&self) -> Result<()> {
        if self.quantity_grid.is_empty() || self.price_grid.is_empty() {
            return Err(Error::InvalidProblem(
                "price and quantity grids must be nonempty".into(),
            ));
        }
        if self.quantity_grid[0] == 0 || self.quantity_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidProblem(
                "quantity grid must be positive and strictly increasing".into(),
            ));
        }
        if self.price_grid.iter().any(|p| !p.is_finite())
            || self.price_grid[0] <= 0.0
            || self.price_grid.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidProblem(
                "price grid must be positive, finite and strictly increasing".into(),
            ));
        }
        self.bundling.validate()
    }
}

/// Revenue at quantity q versus 2q at the chosen price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingWitness {
    pub quantity: u64,
    pub revenue: f64,
    pub doubled_revenue: f64,
    /// doubled_revenue / (2 revenue); 1 under linear scaling. None when
    /// nothing sells at q.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceOutcome {
    pub price: f64,
    pub quantity: u64,
    pub revenue: f64,
    pub buyers: usize,
    pub scaling: Vec<ScalingWitness>,
}

struct Demand {
    /// Per-unit reservation value of each agent, per grid quantity.
    reservations: BTreeMap<u64, Vec<f64>>,
}

impl Demand {
    fn new(problem: &PriceProblem) -> Result<Self> {
        let valuations = problem
            .audience
            .iter()
            .map(|a| a.functor.evaluate(&problem.product))
            .collect::<Result<Vec<_>>>()?;
        let mut reservations = BTreeMap::new();
        for &q in &problem.quantity_grid {
            let per_unit = valuations
                .iter()
                .map(|v| Ok(problem.bundling.bundle_valuation(q, v)? / q as f64))
                .collect::<Result<Vec<f64>>>()?;
            reservations.insert(q, per_unit);
        }
        Ok(Self { reservations })
    }

    fn buyers(&self, price: f64, q: u64) -> usize {
        self.reservations[&q].iter().filter(|r| **r >= price).count()
    }

    fn revenue(&self, price: f64, q: u64) -> f64 {
        price * (q as f64 * self.buyers(price, q) as f64)
    }
}

/// Each agent buys a bundle of q units when its per-unit reservation value
/// is at least the price. Returns the revenue-maximizing grid point, ties
/// broken by lower price and then lower quantity.
pub fn optimize_price(problem: &PriceProblem) -> Result<PriceOutcome> {
    problem.validate()?;
    let demand = Demand::new(problem)?;
    let mut best = (problem.price_grid[0], problem.quantity_grid[0]);
    let mut best_revenue = demand.revenue(best.0, best.1);
    for &price in &problem.price_grid {
        for &q in &problem.quantity_grid {
            let r = demand.revenue(price, q);
            if r > best_revenue {
                best = (price, q);
                best_revenue = r;
            }
        }
    }
    let (price, quantity) = best;
    let scaling = problem
        .quantity_grid
        .iter()
        .filter(|q| problem.quantity_grid.binary_search(&(*q * 2)).is_ok())
        .map(|&q| {
            let revenue = demand.revenue(price, q);
            let doubled_revenue = demand.revenue(price, 2 * q);
            ScalingWitness {
                quantity: q,
                revenue,
                doubled_revenue,
                ratio: (revenue > 0.0).then(|| doubled_revenue / (2.0 * revenue)),
            }
        })
        .collect();
    Ok(PriceOutcome {
        price,
        quantity,
        revenue: best_revenue,
        buyers: demand.buyers(price, quantity),
        scaling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::property_space::{Effect, Pattern, PropertyValue};
    use crate::valuation_space::ValueMetric;
    use crate::value_functors::{ValueFunctor, ValueRule};

    fn shopper(id: &str, functor: ValueFunctor) -> Agent {
        Agent::new(id, functor, ValueMetric::weighted_l1())
    }

    fn toggles_problem(weights: [f64; 3], costs: [f64; 3]) -> DesignProblem {
        let names = ["a", "b", "c"];
        let mut functor = ValueFunctor::new("V");
        let mut base = PropertySet::new();
        for (n, w) in names.iter().zip(weights) {
            functor = functor.with_rule(n, ValueRule::linear(w));
            base.insert(*n, PropertyValue::Flag(false));
        }
        let mut problem = DesignProblem::new(base, vec![shopper("x", functor)]).with_max_steps(3);
        for (n, c) in names.iter().zip(costs) {
            problem = problem.with_morphism(
                PropertyMorphism::rewrite(format!("toggle_{n}"), Pattern::has(*n), vec![Effect::toggle(*n)]),
                c,
            );
        }
        problem
    }

    #[test]
    fn empty_catalog_returns_base() {
        let functor = ValueFunctor::new("V").with_rule("a", ValueRule::linear(2.0));
        let base = PropertySet::new().with("a", PropertyValue::scalar(3.0));
        let out = optimize_design(&DesignProblem::new(base.clone(), vec![shopper("x", functor)])).unwrap();
        assert_eq!(out.design, base);
        assert_eq!(out.objective, 6.0);
        assert!(out.applied.is_empty());
    }

    #[test]
    fn single_profitable_morphism() {
        let functor = ValueFunctor::new("V").with_rule("a", ValueRule::linear(1.0));
        let base = PropertySet::new().with("a", PropertyValue::scalar(0.0));
        let boost = PropertyMorphism::rewrite("boost", Pattern::has("a"), vec![Effect::add("a", 5.0)]);
        let problem = DesignProblem::new(base, vec![shopper("x", functor)]).with_morphism(boost, 2.0);
        let out = optimize_design(&problem).unwrap();
        assert_eq!(out.applied, ["boost"]);
        assert_eq!(out.objective, 3.0);
    }

    #[test]
    fn toggles_match_subset_oracle() {
        let weights = [4.0, -1.0, 2.5];
        let costs = [1.0, 0.5, 3.0];
        // Oracle: each toggle is worth weight - cost once; two flips cancel
        // and just add cost, so the best subset is every positive net gain.
        let mut oracle_best = f64::NEG_INFINITY;
        for mask in 0..8u32 {
            let mut v = 0.0;
            for i in 0..3 {
                if mask & (1 << i) != 0 {
                    v += weights[i] - costs[i];
                }
            }
            oracle_best = oracle_best.max(v);
        }
        let out = optimize_design(&toggles_problem(weights, costs)).unwrap();
        assert_eq!(out.objective, oracle_best);
        assert_eq!(out.applied, ["toggle_a"]);
        assert_eq!(out.strategy, SearchStrategy::Exhaustive);
    }

    #[test]
    fn ties_break_lexicographically() {
        let out = optimize_design(&toggles_problem([1.0, 1.0, 0.0], [0.0, 0.0, 0.0])).unwrap();
        // toggle_a + toggle_b gives 2 via several orders; smallest wins.
        assert_eq!(out.objective, 2.0);
        assert_eq!(out.applied, ["toggle_a", "toggle_b"]);
    }

    #[test]
    fn large_space_uses_beam() {
        let problem = toggles_problem([4.0, -1.0, 2.5], [1.0, 0.5, 0.1]).with_max_steps(10);
        assert!(problem.sequence_count() > EXHAUSTIVE_LIMIT);
        let out = optimize_design(&problem).unwrap();
        assert!(matches!(out.strategy, SearchStrategy::Beam { .. }));
        assert!((out.objective - 5.4).abs() < 1e-12);
        assert_eq!(out.applied, ["toggle_a", "toggle_c"]);
    }

    #[test]
    fn budget_reports_best_so_far() {
        let mut problem = toggles_problem([4.0, -1.0, 2.5], [1.0, 0.5, 3.0]);
        problem.max_evaluations = Some(3);
        match optimize_design(&problem) {
            Err(Error::SearchBudgetExceeded { budget, best }) => {
                assert_eq!(budget, 3);
                assert_eq!(best.applied, ["toggle_a"]);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn missing_cost_is_invalid() {
        let mut problem = toggles_problem([1.0; 3], [1.0; 3]);
        problem.costs.remove("toggle_b");
        assert!(matches!(optimize_design(&problem), Err(Error::InvalidProblem(_))));
    }

    fn price_problem(per_unit: &[f64], bundling: BundlingModel, q: Vec<u64>, p: Vec<f64>) -> PriceProblem {
        PriceProblem {
            product: PropertySet::new().with("a", PropertyValue::scalar(1.0)),
            audience: per_unit
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    shopper(
                        &format!("ag{i}"),
                        ValueFunctor::new("V").with_rule("a", ValueRule::linear(*w)),
                    )
                })
                .collect(),
            bundling,
            quantity_grid: q,
            price_grid: p,
        }
    }

    #[test]
    fn empty_audience_picks_lowest_point() {
        let out = optimize_price(&price_problem(&[], BundlingModel::linear(), vec![1, 2], vec![3.0, 5.0])).unwrap();
        assert_eq!((out.price, out.quantity, out.revenue), (3.0, 1, 0.0));
    }

    #[test]
    fn single_reservation_by_hand() {
        let out = optimize_price(&price_problem(
            &[7.0],
            BundlingModel::linear(),
            vec![1],
            vec![5.0, 7.0, 9.0],
        ))
        .unwrap();
        assert_eq!((out.price, out.quantity, out.revenue), (7.0, 1, 7.0));
    }

    #[test]
    fn linear_bundling_scales_revenue_linearly() {
        let out = optimize_price(&price_problem(
            &[7.0, 3.0],
            BundlingModel::linear(),
            vec![1, 2, 4],
            vec![3.0, 7.0],
        ))
        .unwrap();
        assert!(out.scaling.iter().all(|s| s.ratio == Some(1.0)));
        let concave = BundlingModel::new(0.8, 0.0).unwrap();
        // per-unit reservations: q=1 -> [7, 3]; q=2 -> [7, 3] * 2^-0.2 = [6.09, 2.61]
        let out = optimize_price(&price_problem(&[7.0, 3.0], concave, vec![1, 2], vec![3.0, 6.5])).unwrap();
        assert_eq!((out.price, out.quantity, out.revenue), (6.5, 1, 6.5));
        assert_eq!(out.scaling[0].ratio, Some(0.0));
    }

    #[test]
    fn bad_grids_are_rejected() {
        let bad = price_problem(&[1.0], BundlingModel::linear(), vec![2, 1], vec![1.0]);
        assert!(optimize_price(&bad).is_err());
        let bad = price_problem(&[1.0], BundlingModel::linear(), vec![1], vec![]);
        assert!(optimize_price(&bad).is_err());
    }
}
