//! Simulated environments: convex test objectives, budget schedules, and
//! oracles that answer queries with intervals whose width is capped by the
//! budget invested at the queried point.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coord::Coord;
use crate::error::{Error, Result};
use crate::fuzzy::FuzzyInterval;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    /// `scale·|x − x*|`
    AbsoluteValue,
    /// `scale·(x − x*)²`
    Quadratic,
    /// `scale·max(x* − x, 2(x − x*))`
    PiecewiseLinearMax,
    /// `scale·ln cosh(k(x − x*)/(hi − lo))` with `k = 8`.
    SoftplusLike,
}

impl Shape {
    pub const ALL: [Shape; 4] =
        [Shape::AbsoluteValue, Shape::Quadratic, Shape::PiecewiseLinearMax, Shape::SoftplusLike];

    pub fn name(self) -> &'static str {
        match self {
            Shape::AbsoluteValue => "abs",
            Shape::Quadratic => "quadratic",
            Shape::PiecewiseLinearMax => "pwl",
            Shape::SoftplusLike => "softplus",
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const PWL_LEFT_SLOPE: f64 = 1.0;
const PWL_RIGHT_SLOPE: f64 = 2.0;
const SOFTPLUS_STEEPNESS: f64 = 8.0;

/// `ln cosh(u)`, exact zero at `u = 0` and free of overflow for large `|u|`.
fn log_cosh(u: f64) -> f64 {
    let a = u.abs();
    if a < 1.0 {
        // cosh(a) − 1 = 2 sinh²(a/2); the closed form below cancels near zero.
        let s = (0.5 * a).sinh();
        return (2.0 * s * s).ln_1p();
    }
    (a + (0.5 * (-2.0 * a).exp_m1()).ln_1p()).max(0.0)
}

/// A convex objective on `[lo, hi]` with a known minimizer and minimum 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    shape: Shape,
    xstar: f64,
    scale: f64,
    lo: f64,
    hi: f64,
    xstar_unit: Coord,
}

/// Analytic minimizer, minimum, and range `max f − min f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveMin {
    pub xstar: f64,
    pub fmin: f64,
    pub range: f64,
}

impl Objective {
    pub fn new(shape: Shape, xstar: f64, scale: f64, domain: (f64, f64)) -> Result<Self> {
        let (lo, hi) = domain;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Config(format!("domain [{lo}, {hi}] must be finite with lo < hi")));
        }
        if !(lo < xstar && xstar < hi) {
            return Err(Error::Config(format!("xstar {xstar} must lie strictly inside ({lo}, {hi})")));
        }
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(Error::Config(format!("scale must be finite and non-negative, got {scale}")));
        }
        let xstar_unit = Coord::from_f64((xstar - lo) / (hi - lo))
            .ok_or_else(|| Error::Config(format!("xstar {xstar} cannot be normalized")))?;
        Ok(Objective { shape, xstar, scale, lo, hi, xstar_unit })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn xstar(&self) -> f64 {
        self.xstar
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Minimizer mapped into `[0, 1]`.
    pub fn normalized_xstar(&self) -> f64 {
        (self.xstar - self.lo) / (self.hi - self.lo)
    }

    /// The minimizer in `[0, 1]` as an exact rational. [`Objective::eval_at`]
    /// measures distances from this point.
    pub fn minimizer(&self) -> &Coord {
        &self.xstar_unit
    }

    /// True when the minimizer is unique, i.e. the objective is not constant.
    pub fn has_unique_minimizer(&self) -> bool {
        self.scale > 0.0
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(self.lo <= x && x <= self.hi) {
            return Err(Error::OutOfDomain { x, lo: self.lo, hi: self.hi });
        }
        Ok(self.eval_unchecked(x))
    }

    /// Value at a normalized position. The signed distance to the minimizer is
    /// computed exactly and rounded once, so distinct positions closer together
    /// than a float ulp still get correctly ordered values.
    pub fn eval_at(&self, u: &Coord) -> Result<f64> {
        if !(u >= &Coord::zero() && u <= &Coord::one()) {
            let x = u.denormalize(self.lo, self.hi);
            return Err(Error::OutOfDomain { x, lo: self.lo, hi: self.hi });
        }
        let d_unit = Coord::from_ratio(u.as_ratio() - self.xstar_unit.as_ratio()).to_f64();
        Ok(self.shape_value(d_unit * (self.hi - self.lo)))
    }

    fn eval_unchecked(&self, x: f64) -> f64 {
        self.shape_value(x - self.xstar)
    }

    fn shape_value(&self, d: f64) -> f64 {
        let v = match self.shape {
            Shape::AbsoluteValue => d.abs(),
            Shape::Quadratic => d * d,
            Shape::PiecewiseLinearMax => (PWL_LEFT_SLOPE * -d).max(PWL_RIGHT_SLOPE * d),
            Shape::SoftplusLike => log_cosh(SOFTPLUS_STEEPNESS * d / (self.hi - self.lo)),
        };
        self.scale * v
    }

    pub fn min(&self) -> ObjectiveMin {
        let fmin = 0.0;
        // Convexity puts the maximum at an endpoint.
        let fmax = self.eval_unchecked(self.lo).max(self.eval_unchecked(self.hi));
        ObjectiveMin { xstar: self.xstar, fmin, range: fmax - fmin }
    }
}

/// How an oracle places its interval around the true value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OracleKind {
    /// Full allowed width, centered on the true value.
    Centered,
    /// Same intervals as `Centered`.
    FullWidthCentered,
    /// `[v, v + w]`
    LowerAnchored,
    /// `[v − w, v]`
    UpperAnchored,
    /// Centered, with the width halved for every earlier query at the point.
    ShrinkOnly,
    /// Truthful (centered) before `from_round`, then returns intervals that
    /// exclude the true value.
    Lying { from_round: u64 },
}

impl OracleKind {
    pub const TRUTHFUL: [OracleKind; 5] = [
        OracleKind::Centered,
        OracleKind::FullWidthCentered,
        OracleKind::LowerAnchored,
        OracleKind::UpperAnchored,
        OracleKind::ShrinkOnly,
    ];

    pub fn is_truthful(self) -> bool {
        !matches!(self, OracleKind::Lying { .. })
    }

    pub fn name(self) -> &'static str {
        match self {
            OracleKind::Centered => "centered",
            OracleKind::FullWidthCentered => "full-width-centered",
            OracleKind::LowerAnchored => "lower",
            OracleKind::UpperAnchored => "upper",
            OracleKind::ShrinkOnly => "shrink",
            OracleKind::Lying { .. } => "lying",
        }
    }
}

/// What the oracle is told about a query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleQuery {
    pub true_value: f64,
    /// Budget invested at the point, including the current round.
    pub cumulative_budget: f64,
    /// Queries at the point before the current round.
    pub prior_queries: u64,
    pub round: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSpec {
    kind: OracleKind,
    c: f64,
    alpha: f64,
}

/// `c / budget^alpha`, the widest interval a compliant oracle may return.
pub fn max_width(c: f64, alpha: f64, cumulative_budget: f64) -> f64 {
    c / cumulative_budget.powf(alpha)
}

/// Narrows `[lo, hi]` one ulp at a time until its computed width is at most
/// `width`, never moving past `v`.
fn fit(mut lo: f64, mut hi: f64, v: f64, width: f64) -> (f64, f64) {
    lo = lo.min(v);
    hi = hi.max(v);
    while hi - lo > width {
        if hi > v {
            hi = hi.next_down().max(v);
        } else if lo < v {
            lo = lo.next_up().min(v);
        } else {
            break;
        }
    }
    (lo, hi)
}

impl OracleSpec {
    pub fn new(kind: OracleKind, c: f64, alpha: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::Config(format!("c must be finite and non-negative, got {c}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be finite and positive, got {alpha}")));
        }
        Ok(OracleSpec { kind, c, alpha })
    }

    pub fn kind(&self) -> OracleKind {
        self.kind
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn respond(&self, q: &OracleQuery) -> FuzzyInterval {
        let v = q.true_value;
        let w = max_width(self.c, self.alpha, q.cumulative_budget);
        let (lo, hi) = match self.kind {
            OracleKind::Centered | OracleKind::FullWidthCentered => fit(v - w / 2.0, v + w / 2.0, v, w),
            OracleKind::LowerAnchored => fit(v, v + w, v, w),
            OracleKind::UpperAnchored => fit(v - w, v, v, w),
            OracleKind::ShrinkOnly => {
                let w = w * 0.5f64.powi(q.prior_queries.min(2048) as i32);
                fit(v - w / 2.0, v + w / 2.0, v, w)
            }
            OracleKind::Lying { from_round } if q.round < from_round => {
                fit(v - w / 2.0, v + w / 2.0, v, w)
            }
            OracleKind::Lying { .. } => {
                let lo = v + 1.0 + v.abs() + if w.is_finite() { w } else { 0.0 };
                (lo, lo)
            }
        };
        FuzzyInterval::new(lo, hi).expect("oracle produced a malformed interval")
    }
}

/// True iff `response` contains `true_value` and is no wider than
/// `c / budget^alpha`, up to 4 ulps of the bound.
pub fn assumption_check(response: &FuzzyInterval, cumulative_budget: f64, c: f64, alpha: f64, true_value: f64) -> bool {
    let bound = max_width(c, alpha, cumulative_budget);
    let slack = 4.0 * f64::EPSILON * bound;
    response.width() <= bound + slack && response.contains(true_value)
}

#[derive(Debug, Clone, PartialEq)]
pub enum BudgetSchedule {
    Constant(f64),
    Cyclic(Vec<f64>),
    /// Uniform on `[lo, hi]`, keyed by `(seed, t)`.
    SeededRandom { lo: f64, hi: f64, seed: u64 },
}

fn positive(b: f64) -> bool {
    b > 0.0 && b.is_finite()
}

impl BudgetSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            BudgetSchedule::Constant(b) => positive(*b),
            BudgetSchedule::Cyclic(v) => !v.is_empty() && v.iter().all(|b| positive(*b)),
            BudgetSchedule::SeededRandom { lo, hi, .. } => positive(*lo) && positive(*hi) && lo <= hi,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("budgets must be positive and finite: {self:?}")))
        }
    }

    /// Budget for round `t >= 1`.
    pub fn next(&self, t: u64) -> f64 {
        match self {
            BudgetSchedule::Constant(b) => *b,
            BudgetSchedule::Cyclic(v) => v[((t.max(1) - 1) % v.len() as u64) as usize],
            BudgetSchedule::SeededRandom { lo, hi, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(t);
                rng.random_range(*lo..=*hi)
            }
        }
    }

    /// The unit-budget schedule under which the regret bound applies.
    pub fn is_unit(&self) -> bool {
        matches!(self, BudgetSchedule::Constant(b) if *b == 1.0)
    }

    pub fn name(&self) -> &'static str {
        match self {
            BudgetSchedule::Constant(_) => "constant",
            BudgetSchedule::Cyclic(_) => "cyclic",
            BudgetSchedule::SeededRandom { .. } => "random",
        }
    }
}
