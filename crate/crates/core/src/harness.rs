//! Runs the optimizer against a simulated environment, keeps the regret
//! books, and checks the run against the analysis.
//!
//! One round of [`run`] is: the schedule reveals `b_t`, the optimizer picks
//! `X_t`, the oracle answers with `J_t` sized for the budget now invested at
//! `X_t`, and the optimizer folds `J_t` in. The harness also referees the
//! environment: a response that excludes `f(X_t)` or is wider than
//! `c / B^alpha` aborts the run with [`Error::Inconsistent`].

use rayon::prelude::*;

use crate::coord::Coord;
use crate::environment::{assumption_check, BudgetSchedule, Objective, OracleQuery, OracleSpec};
use crate::error::{Error, Result};
use crate::fuzzy::FuzzyInterval;
use crate::search::{ActiveInterval, DyadicSearch, EpochEvent, EpochTransition, PartitionKind};

mod diagnostics;

pub use diagnostics::{diagnostics, Check, DiagnosticsReport, Outcome};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub objective: Objective,
    pub oracle: OracleSpec,
    pub schedule: BudgetSchedule,
    pub horizon: u64,
    pub record_full_trace: bool,
}

impl RunConfig {
    pub fn new(objective: Objective, oracle: OracleSpec, schedule: BudgetSchedule, horizon: u64) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        schedule.validate()?;
        Ok(RunConfig { objective, oracle, schedule, horizon, record_full_trace: true })
    }

    pub fn with_full_trace(mut self, record: bool) -> Self {
        self.record_full_trace = record;
        self
    }

    pub fn with_horizon(mut self, horizon: u64) -> Self {
        self.horizon = horizon;
        self
    }

    /// The regret bound is only claimed for unit budgets, a truthful oracle
    /// and a unique minimizer.
    pub fn bound_premises_hold(&self) -> bool {
        self.schedule.is_unit() && self.oracle.kind().is_truthful() && self.objective.has_unique_minimizer()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: u64,
    pub budget: f64,
    pub query: Coord,
    pub query_x: f64,
    pub response: FuzzyInterval,
    /// Epoch the query belongs to.
    pub epoch: u64,
    /// Active interval and partition kind at query time.
    pub active: ActiveInterval,
    pub kind: PartitionKind,
    pub inst_regret: f64,
    pub cum_regret: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    /// Per-round rows; empty unless the run recorded a full trace.
    pub rows: Vec<TraceRow>,
    pub transitions: Vec<EpochTransition>,
    pub rounds: u64,
    pub total_budget: f64,
    pub cumulative_regret: f64,
    pub final_active: ActiveInterval,
    pub final_kind: PartitionKind,
    /// Index of the epoch that was running when the horizon was reached.
    pub final_epoch: u64,
}

impl Trace {
    fn empty() -> Self {
        Trace {
            rows: Vec::new(),
            transitions: Vec::new(),
            rounds: 0,
            total_budget: 0.0,
            cumulative_regret: 0.0,
            final_active: ActiveInterval::unit(),
            final_kind: PartitionKind::Uniform,
            final_epoch: 1,
        }
    }
}

pub fn run(config: &RunConfig) -> Result<Trace> {
    let objective = &config.objective;
    let (lo, hi) = objective.domain();
    let fmin = objective.min().fmin;
    let (c, alpha) = (config.oracle.c(), config.oracle.alpha());

    let mut search = DyadicSearch::new();
    let mut trace = Trace::empty();
    if config.record_full_trace {
        trace.rows.reserve(config.horizon as usize);
    }

    for t in 1..=config.horizon {
        let budget = config.schedule.next(t);
        let query = search.select_query();
        let query_x = query.denormalize(lo, hi);
        let value = objective.eval_at(&query)?;
        let entry = search.entry(&query);
        let cumulative_budget = entry.invested + budget;
        let response = config.oracle.respond(&OracleQuery {
            true_value: value,
            cumulative_budget,
            prior_queries: entry.queries,
            round: t,
        });
        if !assumption_check(&response, cumulative_budget, c, alpha, value) {
            let reason = if response.contains(value) {
                format!("response {response} at x={query_x} is wider than c/B^alpha with B={cumulative_budget}")
            } else {
                format!("response {response} does not contain f({query_x}) = {value}")
            };
            return Err(Error::Inconsistent { round: t, reason });
        }

        let epoch = search.epoch();
        let active = search.active().clone();
        let kind = search.kind();
        let event = search.observe(&query, budget, response)?;

        let inst_regret = budget * (value - fmin);
        trace.cumulative_regret += inst_regret;
        trace.total_budget += budget;
        trace.rounds = t;
        if config.record_full_trace {
            trace.rows.push(TraceRow {
                t,
                budget,
                query,
                query_x,
                response,
                epoch,
                active,
                kind,
                inst_regret,
                cum_regret: trace.cumulative_regret,
            });
        }
        if let EpochEvent::Advanced(transition) = event {
            trace.transitions.push(transition);
        }
    }

    trace.final_active = search.active().clone();
    trace.final_kind = search.kind();
    trace.final_epoch = search.epoch();
    Ok(trace)
}

/// `Σ b_t (f(X_t) − min f)`, recomputed from the rows. Traces recorded without
/// rows fall back to the running total kept during the run.
pub fn regret(trace: &Trace, objective: &Objective) -> f64 {
    if trace.rows.is_empty() {
        return trace.cumulative_regret;
    }
    let fmin = objective.min().fmin;
    trace
        .rows
        .iter()
        .map(|row| {
            let value = objective.eval_at(&row.query).expect("trace queries lie in the domain");
            row.budget * (value - fmin)
        })
        .sum()
}

/// `(⌊4 + 2 log_{4/3}(M T^α)⌋ · 8 c 6^α + 2) T^{1−α} + 60 M`, with the floor
/// term clamped to 4 when `M T^α <= 1`.
pub fn theorem_bound(horizon: u64, alpha: f64, c: f64, range: f64) -> f64 {
    let t = horizon as f64;
    let mt = range * t.powf(alpha);
    let epochs = if mt > 1.0 { (4.0 + 2.0 * mt.ln() / (4.0f64 / 3.0).ln()).floor() } else { 4.0 };
    (epochs * 8.0 * c * 6f64.powf(alpha) + 2.0) * t.powf(1.0 - alpha) + 60.0 * range
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub horizon: u64,
    pub regret: f64,
    /// `None` when the bound's premises do not hold.
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingTable {
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of `ln R_T` against `ln T` over rows with `R_T > 0`.
    pub slope: f64,
}

/// Runs `base` once per horizon, each with a fresh optimizer.
pub fn scaling_experiment(base: &RunConfig, horizons: &[u64]) -> Result<ScalingTable> {
    if horizons.is_empty() {
        return Err(Error::Config("no horizons given".into()));
    }
    if horizons.windows(2).any(|w| w[0] >= w[1]) || horizons[0] == 0 {
        return Err(Error::Config(format!("horizons must be positive and strictly ascending: {horizons:?}")));
    }
    let range = base.objective.min().range;
    let premises = base.bound_premises_hold();
    let rows = horizons
        .par_iter()
        .map(|&horizon| {
            let config = base.clone().with_horizon(horizon).with_full_trace(false);
            let trace = run(&config)?;
            Ok(ScalingRow {
                horizon,
                regret: trace.cumulative_regret,
                bound: premises.then(|| theorem_bound(horizon, base.oracle.alpha(), base.oracle.c(), range)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.regret > 0.0)
        .map(|r| ((r.horizon as f64).ln(), r.regret.ln()))
        .collect();
    Ok(ScalingTable { slope: fit_slope(&points), rows })
}

fn fit_slope(points: &[(f64, f64)]) -> f64 {
    if points.len() < 2 {
        return f64::NAN;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
