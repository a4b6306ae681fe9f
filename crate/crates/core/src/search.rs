//! The Dyadic Search optimizer.
//!
//! The optimizer keeps an active interval, a partition kind, and the three
//! query points the kind places inside the interval. Each round it invests
//! the round's budget in whichever of the three points has received the least
//! budget so far, folds the answer into that point's ledger entry, and asks
//! [`delete`] whether the three evaluations now rule out part of the
//! interval. When they do, the epoch ends: the interval shrinks according to
//! [`update`] and a new triple is placed.
//!
//! All positions are exact [`Coord`]s in `[0, 1]`. Every reachable query point
//! is dyadic, so points queried in earlier epochs are frequently reused and
//! keep their accumulated budget and evaluation.

use std::collections::HashMap;
use std::fmt;

use crate::coord::Coord;
use crate::error::{Error, Result};
use crate::fuzzy::{delete, DeletionPattern, FuzzyInterval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PartitionKind {
    /// Points at 1/4, 1/2, 3/4 of the interval.
    Uniform,
    /// Points at 1/3, 1/2, 2/3 of the interval.
    NonUniform,
}

impl PartitionKind {
    pub fn partition(self, active: &ActiveInterval) -> Triple {
        match self {
            PartitionKind::Uniform => partition_uniform(active),
            PartitionKind::NonUniform => partition_nonuniform(active),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PartitionKind::Uniform => "uniform",
            PartitionKind::NonUniform => "non-uniform",
        }
    }
}

impl fmt::Display for PartitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Closed sub-interval `[lo, hi]` of `[0, 1]` with `lo < hi`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActiveInterval {
    lo: Coord,
    hi: Coord,
}

impl ActiveInterval {
    pub fn new(lo: Coord, hi: Coord) -> Result<Self> {
        if lo >= hi {
            return Err(Error::Contract(format!("active interval [{lo}, {hi}] is empty or inverted")));
        }
        Ok(ActiveInterval { lo, hi })
    }

    pub fn unit() -> Self {
        ActiveInterval { lo: Coord::zero(), hi: Coord::one() }
    }

    pub fn lo(&self) -> &Coord {
        &self.lo
    }

    pub fn hi(&self) -> &Coord {
        &self.hi
    }

    pub fn length(&self) -> Coord {
        Coord::from_ratio(self.hi.as_ratio() - self.lo.as_ratio())
    }

    pub fn contains(&self, x: &Coord) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn is_subset_of(&self, other: &ActiveInterval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    /// `w·lo + (1 − w)·hi`.
    fn at(&self, w_num: u32, w_den: u32) -> Coord {
        Coord::convex(&self.lo, &self.hi, w_num, w_den)
    }
}

impl fmt::Display for ActiveInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// The three query points `l < c < r` of an epoch.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Triple {
    pub l: Coord,
    pub c: Coord,
    pub r: Coord,
}

impl Triple {
    pub fn contains(&self, x: &Coord) -> bool {
        &self.l == x || &self.c == x || &self.r == x
    }

    /// Points in left-to-right order.
    pub fn points(&self) -> [&Coord; 3] {
        [&self.l, &self.c, &self.r]
    }
}

pub fn partition_uniform(active: &ActiveInterval) -> Triple {
    Triple { l: active.at(3, 4), c: active.at(1, 2), r: active.at(1, 4) }
}

pub fn partition_nonuniform(active: &ActiveInterval) -> Triple {
    Triple { l: active.at(2, 3), c: active.at(1, 2), r: active.at(1, 3) }
}

/// Shrinks `active` according to `pattern` and picks the next partition kind.
pub fn update(
    active: &ActiveInterval,
    kind: PartitionKind,
    pattern: DeletionPattern,
) -> Result<(ActiveInterval, PartitionKind)> {
    use DeletionPattern as D;
    use PartitionKind::{NonUniform, Uniform};

    let (lo, hi) = (active.lo.clone(), active.hi.clone());
    let (lo, hi, next) = match (pattern, kind) {
        (D::LeftOfCenter, k) => (active.at(1, 2), hi, k),
        (D::RightOfCenter, k) => (lo, active.at(1, 2), k),
        (D::Outer, Uniform) => (active.at(3, 4), active.at(1, 4), Uniform),
        (D::Outer, NonUniform) => (active.at(2, 3), active.at(1, 3), Uniform),
        (D::LeftOfL, Uniform) => (active.at(3, 4), hi, NonUniform),
        (D::LeftOfL, NonUniform) => (active.at(2, 3), hi, Uniform),
        (D::RightOfR, Uniform) => (lo, active.at(1, 4), NonUniform),
        (D::RightOfR, NonUniform) => (lo, active.at(1, 3), Uniform),
        (D::None, _) => {
            return Err(Error::Contract("update called with no-deletion pattern".into()));
        }
    };
    Ok((ActiveInterval::new(lo, hi)?, next))
}

/// Budget invested in a point and the intersection of all its evaluations.
#[derive(Debug, Clone, PartialEq)]
pub struct PointLedgerEntry {
    pub invested: f64,
    pub queries: u64,
    pub fuzzy: FuzzyInterval,
}

impl Default for PointLedgerEntry {
    fn default() -> Self {
        PointLedgerEntry { invested: 0.0, queries: 0, fuzzy: FuzzyInterval::unbounded() }
    }
}

/// A finished epoch: its index, the round that ended it, and its total budget.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: u64,
    pub end_round: u64,
    pub budget: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochTransition {
    /// Index of the epoch that just ended.
    pub epoch: u64,
    pub end_round: u64,
    pub epoch_budget: f64,
    pub pattern: DeletionPattern,
    pub previous: ActiveInterval,
    pub previous_kind: PartitionKind,
    pub next: ActiveInterval,
    pub next_kind: PartitionKind,
    pub next_triple: Triple,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EpochEvent {
    /// No deletion was possible; the epoch goes on.
    Continued { epoch: u64 },
    Advanced(EpochTransition),
}

impl EpochEvent {
    pub fn pattern(&self) -> DeletionPattern {
        match self {
            EpochEvent::Continued { .. } => DeletionPattern::None,
            EpochEvent::Advanced(t) => t.pattern,
        }
    }
}

/// Full optimizer state, including the per-epoch bookkeeping that the
/// algorithm itself does not need but diagnostics do.
#[derive(Debug, Clone)]
pub struct DyadicSearch {
    epoch: u64,
    active: ActiveInterval,
    kind: PartitionKind,
    triple: Triple,
    ledger: HashMap<Coord, PointLedgerEntry>,
    round: u64,
    epoch_budget: f64,
    epoch_start_round: u64,
    history: Vec<EpochRecord>,
}

impl Default for DyadicSearch {
    fn default() -> Self {
        Self::new()
    }
}

impl DyadicSearch {
    pub fn new() -> Self {
        let active = ActiveInterval::unit();
        let kind = PartitionKind::Uniform;
        let triple = kind.partition(&active);
        DyadicSearch {
            epoch: 1,
            active,
            kind,
            triple,
            ledger: HashMap::new(),
            round: 0,
            epoch_budget: 0.0,
            epoch_start_round: 0,
            history: Vec::new(),
        }
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// Number of completed rounds.
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn active(&self) -> &ActiveInterval {
        &self.active
    }

    pub fn kind(&self) -> PartitionKind {
        self.kind
    }

    pub fn triple(&self) -> &Triple {
        &self.triple
    }

    /// Budget invested during the current epoch so far.
    pub fn epoch_budget(&self) -> f64 {
        self.epoch_budget
    }

    /// Last round of the previous epoch (0 during the first epoch).
    pub fn epoch_start_round(&self) -> u64 {
        self.epoch_start_round
    }

    pub fn epoch_history(&self) -> &[EpochRecord] {
        &self.history
    }

    pub fn ledger(&self) -> &HashMap<Coord, PointLedgerEntry> {
        &self.ledger
    }

    /// Ledger entry for `x`; unqueried points have zero budget and `(−∞, +∞)`.
    pub fn entry(&self, x: &Coord) -> PointLedgerEntry {
        self.ledger.get(x).cloned().unwrap_or_default()
    }

    fn invested(&self, x: &Coord) -> f64 {
        self.ledger.get(x).map_or(0.0, |e| e.invested)
    }

    fn fuzzy(&self, x: &Coord) -> FuzzyInterval {
        self.ledger.get(x).map_or(FuzzyInterval::unbounded(), |e| e.fuzzy)
    }

    /// The triple point with least invested budget; ties go to `c`, then `l`,
    /// then `r`.
    pub fn select_query(&self) -> Coord {
        let Triple { l, c, r } = &self.triple;
        let mut best = c;
        let mut best_budget = self.invested(c);
        for x in [l, r] {
            let b = self.invested(x);
            if b < best_budget {
                best = x;
                best_budget = b;
            }
        }
        best.clone()
    }

    /// Center of the current triple. No optimality guarantee is attached.
    pub fn incumbent(&self) -> &Coord {
        &self.triple.c
    }

    /// Records the answer to a query and ends the epoch if a deletion fires.
    ///
    /// The state is left untouched when an error is returned.
    pub fn observe(&mut self, queried: &Coord, budget: f64, response: FuzzyInterval) -> Result<EpochEvent> {
        if !self.triple.contains(queried) {
            return Err(Error::Contract(format!(
                "queried point {queried} is not in the current triple"
            )));
        }
        if !(budget > 0.0 && budget.is_finite()) {
            return Err(Error::Contract(format!("budget must be positive and finite, got {budget}")));
        }
        let t = self.round + 1;
        let entry = self.entry(queried);
        let fuzzy = entry.fuzzy.intersect(&response).map_err(|_| Error::Inconsistent {
            round: t,
            reason: format!(
                "response {response} at {queried} is disjoint from earlier evaluation {}",
                entry.fuzzy
            ),
        })?;

        self.ledger.insert(
            queried.clone(),
            PointLedgerEntry { invested: entry.invested + budget, queries: entry.queries + 1, fuzzy },
        );
        self.round = t;
        self.epoch_budget += budget;

        let pattern = delete(
            &self.fuzzy(&self.triple.l),
            &self.fuzzy(&self.triple.c),
            &self.fuzzy(&self.triple.r),
        );
        if pattern == DeletionPattern::None {
            return Ok(EpochEvent::Continued { epoch: self.epoch });
        }

        let (next, next_kind) = update(&self.active, self.kind, pattern)?;
        let next_triple = next_kind.partition(&next);
        let transition = EpochTransition {
            epoch: self.epoch,
            end_round: t,
            epoch_budget: self.epoch_budget,
            pattern,
            previous: std::mem::replace(&mut self.active, next.clone()),
            previous_kind: self.kind,
            next,
            next_kind,
            next_triple: next_triple.clone(),
        };
        self.history.push(EpochRecord { epoch: self.epoch, end_round: t, budget: self.epoch_budget });
        self.kind = next_kind;
        self.triple = next_triple;
        self.epoch += 1;
        self.epoch_budget = 0.0;
        self.epoch_start_round = t;
        Ok(EpochEvent::Advanced(transition))
    }

    #[cfg(test)]
    pub(crate) fn seed_ledger(&mut self, x: Coord, invested: f64, fuzzy: FuzzyInterval) {
        self.ledger.insert(x, PointLedgerEntry { invested, queries: 0, fuzzy });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(n: i64, d: i64) -> Coord {
        Coord::new(n, d)
    }

    fn ai(a: (i64, i64), b: (i64, i64)) -> ActiveInterval {
        ActiveInterval::new(c(a.0, a.1), c(b.0, b.1)).unwrap()
    }

    fn iv(lo: f64, hi: f64) -> FuzzyInterval {
        FuzzyInterval::new(lo, hi).unwrap()
    }

    fn triple(l: (i64, i64), m: (i64, i64), r: (i64, i64)) -> Triple {
        Triple { l: c(l.0, l.1), c: c(m.0, m.1), r: c(r.0, r.1) }
    }

    #[test]
    fn uniform_partition_examples() {
        assert_eq!(partition_uniform(&ai((0, 1), (1, 1))), triple((1, 4), (1, 2), (3, 4)));
        assert_eq!(partition_uniform(&ai((1, 2), (1, 1))), triple((5, 8), (3, 4), (7, 8)));
        assert_eq!(partition_uniform(&ai((1, 4), (3, 4))), triple((3, 8), (1, 2), (5, 8)));
    }

    #[test]
    fn nonuniform_partition_examples() {
        assert_eq!(partition_nonuniform(&ai((0, 1), (1, 1))), triple((1, 3), (1, 2), (2, 3)));
        assert_eq!(partition_nonuniform(&ai((1, 4), (1, 1))), triple((1, 2), (5, 8), (3, 4)));
        assert_eq!(partition_nonuniform(&ai((1, 2), (7, 8))), triple((5, 8), (11, 16), (3, 4)));
    }

    #[test]
    fn update_examples() {
        use DeletionPattern as D;
        use PartitionKind::{NonUniform, Uniform};
        let unit = ActiveInterval::unit();
        assert_eq!(update(&unit, Uniform, D::LeftOfCenter).unwrap(), (ai((1, 2), (1, 1)), Uniform));
        assert_eq!(update(&unit, Uniform, D::Outer).unwrap(), (ai((1, 4), (3, 4)), Uniform));
        assert_eq!(update(&unit, NonUniform, D::Outer).unwrap(), (ai((1, 3), (2, 3)), Uniform));
        assert_eq!(update(&unit, Uniform, D::LeftOfL).unwrap(), (ai((1, 4), (1, 1)), NonUniform));
        assert_eq!(update(&unit, NonUniform, D::RightOfR).unwrap(), (ai((0, 1), (2, 3)), Uniform));
        assert_eq!(update(&unit, NonUniform, D::RightOfCenter).unwrap(), (ai((0, 1), (1, 2)), NonUniform));
        assert_eq!(update(&unit, Uniform, D::RightOfR).unwrap(), (ai((0, 1), (3, 4)), NonUniform));
        assert_eq!(update(&unit, NonUniform, D::LeftOfL).unwrap(), (ai((1, 3), (1, 1)), Uniform));
    }

    #[test]
    fn update_rejects_no_deletion() {
        let err = update(&ActiveInterval::unit(), PartitionKind::Uniform, DeletionPattern::None);
        assert!(matches!(err, Err(Error::Contract(_))));
    }

    #[test]
    fn fresh_state() {
        let s = DyadicSearch::new();
        assert_eq!(s.triple(), &triple((1, 4), (1, 2), (3, 4)));
        assert_eq!(s.epoch(), 1);
        assert_eq!(s.round(), 0);
        assert_eq!(s.epoch_budget(), 0.0);
        assert_eq!(s.active(), &ActiveInterval::unit());
        assert_eq!(s.kind(), PartitionKind::Uniform);
        let e = s.entry(&c(1, 2));
        assert_eq!(e.invested, 0.0);
        assert_eq!(e.fuzzy, FuzzyInterval::unbounded());
    }

    #[test]
    fn select_query_tie_breaks() {
        let mut s = DyadicSearch::new();
        assert_eq!(s.select_query(), c(1, 2));

        let r = FuzzyInterval::unbounded();
        s.seed_ledger(c(1, 4), 1.0, r);
        s.seed_ledger(c(1, 2), 2.0, r);
        s.seed_ledger(c(3, 4), 1.0, r);
        assert_eq!(s.select_query(), c(1, 4));

        s.seed_ledger(c(1, 4), 3.0, r);
        s.seed_ledger(c(1, 2), 2.0, r);
        s.seed_ledger(c(3, 4), 4.0, r);
        assert_eq!(s.select_query(), c(1, 2));
    }

    #[test]
    fn first_observation_never_deletes() {
        let mut s = DyadicSearch::new();
        let ev = s.observe(&c(1, 2), 1.0, iv(0.2, 0.3)).unwrap();
        assert_eq!(ev, EpochEvent::Continued { epoch: 1 });
        assert_eq!(s.epoch(), 1);
        let e = s.entry(&c(1, 2));
        assert_eq!((e.invested, e.queries, e.fuzzy), (1.0, 1, iv(0.2, 0.3)));
        assert_eq!(s.round(), 1);
        assert_eq!(s.epoch_budget(), 1.0);
    }

    #[test]
    fn observation_completing_left_of_center() {
        let mut s = DyadicSearch::new();
        s.seed_ledger(c(1, 4), 1.0, iv(5.0, 6.0));
        s.seed_ledger(c(3, 4), 1.0, iv(1.0, 2.0));
        let ev = s.observe(&c(1, 2), 1.0, iv(4.0, 5.0)).unwrap();
        let EpochEvent::Advanced(t) = ev else { panic!("expected a transition, got {ev:?}") };
        assert_eq!(t.pattern, DeletionPattern::LeftOfCenter);
        assert_eq!(t.next, ai((1, 2), (1, 1)));
        assert_eq!(t.next_kind, PartitionKind::Uniform);
        assert_eq!(s.triple(), &triple((5, 8), (3, 4), (7, 8)));
        assert_eq!(s.epoch(), 2);
        assert_eq!(s.epoch_budget(), 0.0);
        assert_eq!(s.epoch_start_round(), 1);
        assert_eq!(s.epoch_history(), &[EpochRecord { epoch: 1, end_round: 1, budget: 1.0 }]);
        // The reused point keeps its history.
        assert_eq!(s.entry(&c(3, 4)).fuzzy, iv(1.0, 2.0));
    }

    #[test]
    fn reachable_left_of_center_sequence() {
        let mut s = DyadicSearch::new();
        assert!(matches!(s.observe(&c(1, 2), 1.0, iv(4.0, 5.0)).unwrap(), EpochEvent::Continued { .. }));
        let ev = s.observe(&c(3, 4), 1.0, iv(1.0, 2.0)).unwrap();
        assert_eq!(ev.pattern(), DeletionPattern::LeftOfCenter);
        assert_eq!(s.active(), &ai((1, 2), (1, 1)));
        assert_eq!(s.triple(), &triple((5, 8), (3, 4), (7, 8)));
    }

    #[test]
    fn disjoint_response_is_an_inconsistency_and_leaves_state_alone() {
        let mut s = DyadicSearch::new();
        s.observe(&c(1, 2), 1.0, iv(4.0, 5.0)).unwrap();
        let before = s.clone();
        let err = s.observe(&c(1, 2), 1.0, iv(6.0, 7.0)).unwrap_err();
        assert_eq!(err.failing_round(), Some(2));
        assert_eq!(s.round(), before.round());
        assert_eq!(s.entry(&c(1, 2)), before.entry(&c(1, 2)));
    }

    #[test]
    fn observe_rejects_points_outside_the_triple() {
        let mut s = DyadicSearch::new();
        let err = s.observe(&c(1, 8), 1.0, iv(0.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
        let err = s.observe(&c(1, 2), 0.0, iv(0.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    fn pattern() -> impl Strategy<Value = DeletionPattern> {
        prop::sample::select(DeletionPattern::ALL[..5].to_vec())
    }

    proptest! {
        /// Random walks through the update table keep every structural
        /// property the optimizer relies on.
        #[test]
        fn update_walk_invariants(patterns in prop::collection::vec(pattern(), 1..60)) {
            let mut active = ActiveInterval::unit();
            let mut kind = PartitionKind::Uniform;
            for p in patterns {
                let (next, next_kind) = update(&active, kind, p).unwrap();
                prop_assert!(next.is_subset_of(&active));
                let ratio = next.length().as_ratio() / active.length().as_ratio();
                let allowed = [(1, 3), (1, 2), (2, 3), (3, 4)].map(|(n, d)| c(n, d));
                prop_assert!(allowed.contains(&Coord::from_ratio(ratio)));
                match p {
                    DeletionPattern::LeftOfCenter | DeletionPattern::RightOfCenter => prop_assert_eq!(next_kind, kind),
                    DeletionPattern::Outer => prop_assert_eq!(next_kind, PartitionKind::Uniform),
                    _ => prop_assert_ne!(next_kind, kind),
                }
                prop_assert!(next.lo().is_dyadic() && next.hi().is_dyadic());
                if next_kind == PartitionKind::NonUniform {
                    let len = next.length();
                    prop_assert_eq!(len.numer(), &num_bigint::BigInt::from(3));
                    prop_assert!(len.is_dyadic());
                }
                let t = next_kind.partition(&next);
                for x in t.points() {
                    prop_assert!(x.is_dyadic());
                    prop_assert!(next.lo() < x && x < next.hi());
                }
                prop_assert!(t.l < t.c && t.c < t.r);
                active = next;
                kind = next_kind;
            }
        }
    }
}
