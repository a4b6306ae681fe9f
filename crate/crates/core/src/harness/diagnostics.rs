//! Structural checks over a recorded trace.
//!
//! Everything here is recomputed from the rows and transition events; the
//! optimizer's own state is not consulted. Triples and update-table outcomes
//! are re-derived in offset form (`lo + k·len`) rather than through the
//! optimizer's convex-combination code.

use std::collections::HashMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{RunConfig, Trace};
use crate::coord::Coord;
use crate::fuzzy::{delete, DeletionPattern, FuzzyInterval};
use crate::search::{ActiveInterval, PartitionKind};

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Pass,
    /// First violation found.
    Fail(String),
    NotApplicable(&'static str),
}

impl Outcome {
    pub fn is_ok(&self) -> bool {
        !matches!(self, Outcome::Fail(_))
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Pass => f.write_str("PASS"),
            Outcome::Fail(why) => write!(f, "FAIL ({why})"),
            Outcome::NotApplicable(why) => write!(f, "n/a ({why})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Check {
    DyadicMesh,
    Nesting,
    MinimizerRetention,
    EpochBalance,
    FuzzyWidths,
    KindTransitions,
    NonUniformLength,
    LedgerMinSelection,
    TripleConsistency,
    DeletionReplay,
    CumulativeRegret,
}

impl Check {
    pub const ALL: [Check; 11] = [
        Check::DyadicMesh,
        Check::Nesting,
        Check::MinimizerRetention,
        Check::EpochBalance,
        Check::FuzzyWidths,
        Check::KindTransitions,
        Check::NonUniformLength,
        Check::LedgerMinSelection,
        Check::TripleConsistency,
        Check::DeletionReplay,
        Check::CumulativeRegret,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::DyadicMesh => "dyadic_mesh",
            Check::Nesting => "nesting",
            Check::MinimizerRetention => "minimizer_retention",
            Check::EpochBalance => "epoch_balance",
            Check::FuzzyWidths => "fuzzy_widths",
            Check::KindTransitions => "kind_transitions",
            Check::NonUniformLength => "nonuniform_length",
            Check::LedgerMinSelection => "ledger_min_selection",
            Check::TripleConsistency => "triple_consistency",
            Check::DeletionReplay => "deletion_replay",
            Check::CumulativeRegret => "cumulative_regret",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub results: Vec<(Check, Outcome)>,
}

impl DiagnosticsReport {
    pub fn all_ok(&self) -> bool {
        self.results.iter().all(|(_, o)| o.is_ok())
    }

    pub fn outcome(&self, check: Check) -> &Outcome {
        &self.results.iter().find(|(c, _)| *c == check).expect("every check is reported").1
    }

    pub fn failures(&self) -> impl Iterator<Item = &(Check, Outcome)> {
        self.results.iter().filter(|(_, o)| !o.is_ok())
    }
}

/// Collects the first violation per check.
struct Recorder {
    failures: HashMap<Check, String>,
}

impl Recorder {
    fn fail(&mut self, check: Check, why: impl FnOnce() -> String) {
        self.failures.entry(check).or_insert_with(why);
    }
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// `lo + k·(hi − lo)`.
fn offset(active: &ActiveInterval, k: &BigRational) -> Coord {
    let len = active.hi().as_ratio() - active.lo().as_ratio();
    Coord::from_ratio(active.lo().as_ratio() + len * k)
}

fn expected_triple(active: &ActiveInterval, kind: PartitionKind) -> [Coord; 3] {
    let ks = match kind {
        PartitionKind::Uniform => [ratio(1, 4), ratio(1, 2), ratio(3, 4)],
        PartitionKind::NonUniform => [ratio(1, 3), ratio(1, 2), ratio(2, 3)],
    };
    ks.map(|k| offset(active, &k))
}

/// Kept fraction `[a, b]` of the old interval and the next kind.
fn expected_update(
    pattern: DeletionPattern,
    kind: PartitionKind,
) -> Option<((BigRational, BigRational), PartitionKind)> {
    use DeletionPattern as D;
    use PartitionKind::{NonUniform as N, Uniform as U};
    let (zero, one) = (BigRational::zero(), BigRational::one());
    Some(match (pattern, kind) {
        (D::LeftOfCenter, k) => ((ratio(1, 2), one), k),
        (D::RightOfCenter, k) => ((zero, ratio(1, 2)), k),
        (D::Outer, U) => ((ratio(1, 4), ratio(3, 4)), U),
        (D::Outer, N) => ((ratio(1, 3), ratio(2, 3)), U),
        (D::LeftOfL, U) => ((ratio(1, 4), one), N),
        (D::LeftOfL, N) => ((ratio(1, 3), one), U),
        (D::RightOfR, U) => ((zero, ratio(3, 4)), N),
        (D::RightOfR, N) => ((zero, ratio(2, 3)), U),
        (D::None, _) => return None,
    })
}

/// Runs every structural check over a full trace of `config`.
pub fn diagnostics(trace: &Trace, config: &RunConfig) -> DiagnosticsReport {
    let mut rec = Recorder { failures: HashMap::new() };
    let rows = &trace.rows;
    let xstar = config.objective.minimizer().clone();
    let retention_applies = config.oracle.kind().is_truthful() && config.objective.has_unique_minimizer();
    let balance_applies = config.schedule.is_unit();
    let allowed_ratios = [ratio(1, 3), ratio(1, 2), ratio(2, 3), ratio(3, 4)];

    let by_end_round: HashMap<u64, usize> =
        trace.transitions.iter().enumerate().map(|(i, tr)| (tr.end_round, i)).collect();

    // Replayed ledger: budget, query count, intersected evaluation.
    let mut ledger: HashMap<Coord, (f64, u64, FuzzyInterval)> = HashMap::new();
    let lookup = |ledger: &HashMap<Coord, (f64, u64, FuzzyInterval)>, x: &Coord| {
        ledger.get(x).cloned().unwrap_or((0.0, 0, FuzzyInterval::unbounded()))
    };
    let mut prev_cum = 0.0f64;
    let mut cached: Option<(ActiveInterval, PartitionKind, [Coord; 3])> = None;

    for (i, row) in rows.iter().enumerate() {
        let t = row.t;
        if !row.query.is_dyadic() {
            rec.fail(Check::DyadicMesh, || format!("round {t} queried {}", row.query));
        }

        // The triple and the length check only change with the active interval.
        if cached.as_ref().is_none_or(|(a, k, _)| a != &row.active || *k != row.kind) {
            if row.kind == PartitionKind::NonUniform {
                let third = Coord::from_ratio(row.active.length().as_ratio() / ratio(3, 1));
                let quarter_or_less = third.as_ratio() <= &ratio(1, 4);
                if !(third.numer() == &One::one() && third.is_dyadic() && quarter_or_less) {
                    rec.fail(Check::NonUniformLength, || {
                        format!("round {t}: non-uniform interval {} has length {}", row.active, row.active.length())
                    });
                }
            }
            cached = Some((row.active.clone(), row.kind, expected_triple(&row.active, row.kind)));
        }
        let triple = &cached.as_ref().expect("set above").2;
        if !triple.contains(&row.query) {
            rec.fail(Check::TripleConsistency, || {
                format!("round {t}: {} is not a partition point of {} ({})", row.query, row.active, row.kind)
            });
        }
        if !(triple[0] < triple[1] && triple[1] < triple[2]) {
            rec.fail(Check::TripleConsistency, || format!("round {t}: triple out of order"));
        }

        let invested = lookup(&ledger, &row.query).0;
        if triple.iter().any(|x| lookup(&ledger, x).0 < invested) {
            rec.fail(Check::LedgerMinSelection, || {
                format!("round {t}: {} had budget {invested} but another triple point had less", row.query)
            });
        }

        if retention_applies && !row.active.contains(&xstar) {
            rec.fail(Check::MinimizerRetention, || format!("round {t}: x* not in {}", row.active));
        }

        // Balance over the whole history up to the round before the epoch ends.
        if let Some(&k) = by_end_round.get(&t) {
            let tr = &trace.transitions[k];
            if balance_applies {
                let needed = (tr.epoch_budget - 3.0) / 3.0;
                for x in triple {
                    let count = lookup(&ledger, x).1 as f64;
                    if count < needed {
                        rec.fail(Check::EpochBalance, || {
                            format!(
                                "epoch {} (B = {}): point {x} had {count} queries before round {t}",
                                tr.epoch, tr.epoch_budget
                            )
                        });
                    }
                }
            }
        }

        let (b, n, fuzzy) = lookup(&ledger, &row.query);
        match fuzzy.intersect(&row.response) {
            Ok(next) => {
                if next.width() > fuzzy.width() {
                    rec.fail(Check::FuzzyWidths, || format!("round {t}: width grew at {}", row.query));
                }
                ledger.insert(row.query.clone(), (b + row.budget, n + 1, next));
            }
            Err(_) => {
                rec.fail(Check::FuzzyWidths, || format!("round {t}: empty intersection at {}", row.query));
                ledger.insert(row.query.clone(), (b + row.budget, n + 1, row.response));
            }
        }

        let replayed = delete(
            &lookup(&ledger, &triple[0]).2,
            &lookup(&ledger, &triple[1]).2,
            &lookup(&ledger, &triple[2]).2,
        );
        let reported = by_end_round.get(&t).map_or(DeletionPattern::None, |&k| trace.transitions[k].pattern);
        if replayed != reported {
            rec.fail(Check::DeletionReplay, || {
                format!("round {t}: replayed {replayed}, optimizer reported {reported}")
            });
        }

        if row.inst_regret < -f64::EPSILON || row.cum_regret < prev_cum {
            rec.fail(Check::CumulativeRegret, || format!("round {t}: cumulative regret decreased"));
        }
        prev_cum = row.cum_regret;

        if let Some(next) = rows.get(i + 1) {
            if next.active != row.active {
                let nested = next.active.is_subset_of(&row.active);
                let r = next.active.length().as_ratio() / row.active.length().as_ratio();
                if !nested || !allowed_ratios.contains(&r) {
                    rec.fail(Check::Nesting, || {
                        format!("round {t}: {} -> {} (ratio {r})", row.active, next.active)
                    });
                }
                if next.epoch != row.epoch + 1 {
                    rec.fail(Check::Nesting, || format!("round {t}: interval changed without a new epoch"));
                }
            } else if next.epoch != row.epoch || next.kind != row.kind {
                rec.fail(Check::Nesting, || format!("round {t}: epoch changed without a new interval"));
            }
        }
    }

    for tr in &trace.transitions {
        let ok = match expected_update(tr.pattern, tr.previous_kind) {
            Some(((a, b), kind)) => {
                tr.next_kind == kind
                    && tr.next.lo() == &offset(&tr.previous, &a)
                    && tr.next.hi() == &offset(&tr.previous, &b)
            }
            None => false,
        };
        if !ok {
            rec.fail(Check::KindTransitions, || {
                format!(
                    "epoch {}: {} on {} ({}) gave {} ({})",
                    tr.epoch, tr.pattern, tr.previous, tr.previous_kind, tr.next, tr.next_kind
                )
            });
        }
        if !tr.next.is_subset_of(&tr.previous) {
            rec.fail(Check::Nesting, || format!("epoch {}: {} not inside {}", tr.epoch, tr.next, tr.previous));
        }
        if retention_applies && !tr.next.contains(&xstar) {
            rec.fail(Check::MinimizerRetention, || {
                format!("epoch {} deleted x* = {}: kept {}", tr.epoch, config.objective.normalized_xstar(), tr.next)
            });
        }
    }

    let results = Check::ALL
        .iter()
        .map(|&check| {
            let outcome = if let Some(why) = rec.failures.remove(&check) {
                Outcome::Fail(why)
            } else if check == Check::MinimizerRetention && !retention_applies {
                Outcome::NotApplicable("needs a truthful oracle and a unique minimizer")
            } else if check == Check::EpochBalance && !balance_applies {
                Outcome::NotApplicable("needs unit budgets")
            } else if rows.is_empty() && check != Check::KindTransitions {
                Outcome::NotApplicable("no rows recorded")
            } else {
                Outcome::Pass
            };
            (check, outcome)
        })
        .collect();
    DiagnosticsReport { results }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{BudgetSchedule, Objective, OracleKind, OracleSpec, Shape};
    use crate::harness::run;

    fn config(shape: Shape, xstar: f64, kind: OracleKind, alpha: f64, horizon: u64) -> RunConfig {
        RunConfig::new(
            Objective::new(shape, xstar, 1.0, (0.0, 1.0)).unwrap(),
            OracleSpec::new(kind, 1.0, alpha).unwrap(),
            BudgetSchedule::Constant(1.0),
            horizon,
        )
        .unwrap()
    }

    #[test]
    fn truthful_run_passes_everything() {
        let cfg = config(Shape::PiecewiseLinearMax, 0.61, OracleKind::Centered, 0.7, 3000);
        let trace = run(&cfg).unwrap();
        assert!(trace.transitions.len() > 3);
        let report = diagnostics(&trace, &cfg);
        assert!(report.all_ok(), "{report:?}");
        assert_eq!(report.outcome(Check::EpochBalance), &Outcome::Pass);
        assert_eq!(report.outcome(Check::MinimizerRetention), &Outcome::Pass);
    }

    #[test]
    fn non_dyadic_query_is_flagged() {
        let cfg = config(Shape::AbsoluteValue, 0.5, OracleKind::Centered, 1.0, 20);
        let mut trace = run(&cfg).unwrap();
        trace.rows[5].query = Coord::new(1, 3);
        let report = diagnostics(&trace, &cfg);
        assert!(matches!(report.outcome(Check::DyadicMesh), Outcome::Fail(_)));
    }

    #[test]
    fn non_nested_transition_is_flagged() {
        let cfg = config(Shape::AbsoluteValue, 0.3, OracleKind::Centered, 1.0, 400);
        let mut trace = run(&cfg).unwrap();
        let k = trace.rows.iter().position(|r| r.epoch == 2).expect("at least one transition");
        let shifted = ActiveInterval::new(Coord::new(1, 1), Coord::new(2, 1)).unwrap();
        for row in trace.rows[k..].iter_mut().filter(|r| r.epoch == 2) {
            row.active = shifted.clone();
        }
        let report = diagnostics(&trace, &cfg);
        assert!(matches!(report.outcome(Check::Nesting), Outcome::Fail(_)));
    }

    #[test]
    fn balance_is_not_applicable_for_cyclic_budgets() {
        let mut cfg = config(Shape::Quadratic, 0.2, OracleKind::LowerAnchored, 1.0, 500);
        cfg.schedule = BudgetSchedule::Cyclic(vec![0.5, 2.0, 1.0]);
        let trace = run(&cfg).unwrap();
        let report = diagnostics(&trace, &cfg);
        assert!(matches!(report.outcome(Check::EpochBalance), Outcome::NotApplicable(_)));
        assert!(report.all_ok(), "{report:?}");
    }

    #[test]
    fn tampered_transition_pattern_is_flagged() {
        let cfg = config(Shape::AbsoluteValue, 0.3, OracleKind::Centered, 1.0, 400);
        let mut trace = run(&cfg).unwrap();
        let tr = &mut trace.transitions[0];
        tr.pattern = match tr.pattern {
            DeletionPattern::LeftOfCenter => DeletionPattern::RightOfCenter,
            _ => DeletionPattern::LeftOfCenter,
        };
        let report = diagnostics(&trace, &cfg);
        assert!(matches!(report.outcome(Check::KindTransitions), Outcome::Fail(_)));
        assert!(matches!(report.outcome(Check::DeletionReplay), Outcome::Fail(_)));
    }
}
