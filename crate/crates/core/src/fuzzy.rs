//! Interval-valued ("fuzzy") evaluations of the objective and the elimination
//! rule that compares three of them.

use std::fmt;

use crate::error::{Error, Result};

/// Closed extended-real interval `[lo, hi]` known to contain an objective value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FuzzyInterval {
    lo: f64,
    hi: f64,
}

impl FuzzyInterval {
    /// Validates `lo <= hi`, no NaN, and that neither bound sits at the wrong
    /// infinity.
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(Error::Contract(format!("invalid fuzzy interval [{lo}, {hi}]")));
        }
        Ok(FuzzyInterval { lo, hi })
    }

    /// `(−∞, +∞)`, the evaluation of a point nobody has queried.
    pub const fn unbounded() -> Self {
        FuzzyInterval { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }

    pub fn point(v: f64) -> Self {
        FuzzyInterval { lo: v, hi: v }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// `hi − lo`, or `+∞` when either bound is infinite.
    pub fn width(&self) -> f64 {
        if self.lo.is_infinite() || self.hi.is_infinite() {
            f64::INFINITY
        } else {
            self.hi - self.lo
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn is_subset_of(&self, other: &FuzzyInterval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn intersect(&self, other: &FuzzyInterval) -> Result<FuzzyInterval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo > hi {
            return Err(Error::EmptyIntersection(*self, *other));
        }
        Ok(FuzzyInterval { lo, hi })
    }
}

impl Default for FuzzyInterval {
    fn default() -> Self {
        FuzzyInterval::unbounded()
    }
}

impl fmt::Display for FuzzyInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Which part of the active interval the three evaluations allow us to drop.
///
/// Positions refer to the active interval split at the query triple
/// `l < c < r`; the glyphs mark deleted parts in black.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeletionPattern {
    /// ⬛⬛⬜⬜: everything left of `c`.
    LeftOfCenter,
    /// ⬜⬜⬛⬛: everything right of `c`.
    RightOfCenter,
    /// ⬛⬜⬜⬛: everything left of `l` and right of `r`.
    Outer,
    /// ⬛⬜⬜⬜: everything left of `l`.
    LeftOfL,
    /// ⬜⬜⬜⬛: everything right of `r`.
    RightOfR,
    /// ⬜⬜⬜⬜
    None,
}

impl DeletionPattern {
    pub const ALL: [DeletionPattern; 6] = [
        DeletionPattern::LeftOfCenter,
        DeletionPattern::RightOfCenter,
        DeletionPattern::Outer,
        DeletionPattern::LeftOfL,
        DeletionPattern::RightOfR,
        DeletionPattern::None,
    ];

    pub fn glyph(self) -> &'static str {
        match self {
            DeletionPattern::LeftOfCenter => "⬛⬛⬜⬜",
            DeletionPattern::RightOfCenter => "⬜⬜⬛⬛",
            DeletionPattern::Outer => "⬛⬜⬜⬛",
            DeletionPattern::LeftOfL => "⬛⬜⬜⬜",
            DeletionPattern::RightOfR => "⬜⬜⬜⬛",
            DeletionPattern::None => "⬜⬜⬜⬜",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DeletionPattern::LeftOfCenter => "delete-left-of-center",
            DeletionPattern::RightOfCenter => "delete-right-of-center",
            DeletionPattern::Outer => "delete-outer",
            DeletionPattern::LeftOfL => "delete-left-of-l",
            DeletionPattern::RightOfR => "delete-right-of-r",
            DeletionPattern::None => "no-deletion",
        }
    }
}

impl fmt::Display for DeletionPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Decides what to delete from the evaluations at `l < c < r`.
///
/// Guards are tried in a fixed order and the first that holds wins; equality
/// satisfies `>=`.
pub fn delete(left: &FuzzyInterval, center: &FuzzyInterval, right: &FuzzyInterval) -> DeletionPattern {
    if center.lo >= right.hi {
        return DeletionPattern::LeftOfCenter;
    }
    if center.lo >= left.hi {
        return DeletionPattern::RightOfCenter;
    }
    let drop_left = left.lo >= center.hi.min(right.hi);
    let drop_right = right.lo >= left.hi.min(center.hi);
    match (drop_left, drop_right) {
        (true, true) => DeletionPattern::Outer,
        (true, false) => DeletionPattern::LeftOfL,
        (false, true) => DeletionPattern::RightOfR,
        (false, false) => DeletionPattern::None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(lo: f64, hi: f64) -> FuzzyInterval {
        FuzzyInterval::new(lo, hi).unwrap()
    }

    const R: FuzzyInterval = FuzzyInterval::unbounded();

    #[test]
    fn intersect_examples() {
        assert_eq!(iv(0.0, 2.0).intersect(&iv(1.0, 3.0)).unwrap(), iv(1.0, 2.0));
        assert_eq!(R.intersect(&iv(1.0, 3.0)).unwrap(), iv(1.0, 3.0));
        assert!(matches!(
            iv(0.0, 1.0).intersect(&iv(2.0, 3.0)),
            Err(Error::EmptyIntersection(_, _))
        ));
        // Touching endpoints still intersect.
        assert_eq!(iv(0.0, 1.0).intersect(&iv(1.0, 3.0)).unwrap(), iv(1.0, 1.0));
    }

    #[test]
    fn width_examples() {
        assert_eq!(iv(0.25, 0.75).width(), 0.5);
        assert_eq!(iv(f64::NEG_INFINITY, 3.0).width(), f64::INFINITY);
        assert_eq!(iv(1.0, 1.0).width(), 0.0);
        assert_eq!(R.width(), f64::INFINITY);
    }

    #[test]
    fn rejects_malformed_intervals() {
        assert!(FuzzyInterval::new(2.0, 1.0).is_err());
        assert!(FuzzyInterval::new(f64::NAN, 1.0).is_err());
        assert!(FuzzyInterval::new(f64::INFINITY, f64::INFINITY).is_err());
        assert!(FuzzyInterval::new(f64::NEG_INFINITY, f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn delete_examples() {
        assert_eq!(delete(&R, &R, &R), DeletionPattern::None);
        assert_eq!(delete(&iv(5.0, 6.0), &iv(4.0, 5.0), &iv(1.0, 2.0)), DeletionPattern::LeftOfCenter);
        assert_eq!(delete(&iv(1.0, 2.0), &iv(4.0, 5.0), &iv(5.0, 6.0)), DeletionPattern::RightOfCenter);
        assert_eq!(delete(&iv(3.0, 4.0), &iv(1.0, 2.0), &iv(3.0, 4.0)), DeletionPattern::Outer);
        assert_eq!(delete(&iv(3.0, 4.0), &iv(1.0, 2.0), &R), DeletionPattern::LeftOfL);
        assert_eq!(delete(&R, &iv(1.0, 2.0), &iv(3.0, 4.0)), DeletionPattern::RightOfR);
    }

    #[test]
    fn equal_point_evaluations_fire_the_first_guard() {
        let p = FuzzyInterval::point(0.5);
        assert_eq!(delete(&p, &p, &p), DeletionPattern::LeftOfCenter);
    }

    #[test]
    fn one_known_point_never_deletes() {
        let known = iv(0.2, 0.3);
        assert_eq!(delete(&R, &known, &R), DeletionPattern::None);
        assert_eq!(delete(&known, &R, &R), DeletionPattern::None);
        assert_eq!(delete(&R, &R, &known), DeletionPattern::None);
    }

    fn bound() -> impl Strategy<Value = f64> {
        prop_oneof![
            (-3i32..=3).prop_map(|v| v as f64),
            -3.0f64..3.0,
        ]
    }

    fn interval() -> impl Strategy<Value = FuzzyInterval> {
        (bound(), bound(), 0u8..4).prop_map(|(a, b, inf)| {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let lo = if inf & 1 == 1 { f64::NEG_INFINITY } else { lo };
            let hi = if inf & 2 == 2 { f64::INFINITY } else { hi };
            FuzzyInterval::new(lo, hi).unwrap()
        })
    }

    fn sub_interval(j: FuzzyInterval) -> impl Strategy<Value = FuzzyInterval> {
        (0.0f64..=1.0, 0.0f64..=1.0).prop_map(move |(s, t)| {
            let finite_lo = if j.lo().is_finite() { j.lo() } else { -10.0 };
            let finite_hi = if j.hi().is_finite() { j.hi() } else { 10.0 };
            let (s, t) = if s <= t { (s, t) } else { (t, s) };
            let lo = if s == 0.0 { j.lo() } else { finite_lo + s * (finite_hi - finite_lo) };
            let hi = if t == 1.0 { j.hi() } else { finite_lo + t * (finite_hi - finite_lo) };
            FuzzyInterval::new(lo.max(j.lo()), hi.min(j.hi()).max(lo.max(j.lo()))).unwrap()
        })
    }

    proptest! {
        #[test]
        fn fired_guard_holds(l in interval(), c in interval(), r in interval()) {
            match delete(&l, &c, &r) {
                DeletionPattern::LeftOfCenter => prop_assert!(c.lo() >= r.hi()),
                DeletionPattern::RightOfCenter => prop_assert!(c.lo() >= l.hi() && c.lo() < r.hi()),
                DeletionPattern::Outer => {
                    prop_assert!(l.lo() >= c.hi().min(r.hi()));
                    prop_assert!(r.lo() >= l.hi().min(c.hi()));
                }
                DeletionPattern::LeftOfL => prop_assert!(l.lo() >= c.hi().min(r.hi())),
                DeletionPattern::RightOfR => prop_assert!(r.lo() >= l.hi().min(c.hi())),
                DeletionPattern::None => {
                    prop_assert!(c.lo() < r.hi() && c.lo() < l.hi());
                    prop_assert!(l.lo() < c.hi().min(r.hi()));
                    prop_assert!(r.lo() < l.hi().min(c.hi()));
                }
            }
        }

        #[test]
        fn left_of_center_survives_tightening(
            (l, c, r, c2, r2) in (interval(), bound(), bound(), 0u8..3, prop::bool::ANY, prop::bool::ANY)
                .prop_map(|(l, r_hi, gap, touch, lo_inf, hi_inf)| {
                    // Build J_c^- >= J_r^+ directly; `touch` picks equality.
                    let c_lo = r_hi + if touch == 0 { 0.0 } else { gap.abs() };
                    let r = FuzzyInterval::new(if lo_inf { f64::NEG_INFINITY } else { r_hi - 1.0 }, r_hi).unwrap();
                    let c = FuzzyInterval::new(c_lo, if hi_inf { f64::INFINITY } else { c_lo + 0.5 }).unwrap();
                    (l, c, r)
                })
                .prop_flat_map(|(l, c, r)| (Just(l), Just(c), Just(r), sub_interval(c), sub_interval(r)))
        ) {
            prop_assert_eq!(delete(&l, &c, &r), DeletionPattern::LeftOfCenter);
            prop_assert_eq!(delete(&l, &c2, &r2), DeletionPattern::LeftOfCenter);
        }

        #[test]
        fn intersection_is_subset_of_both(a in interval(), b in interval()) {
            if let Ok(i) = a.intersect(&b) {
                prop_assert!(i.is_subset_of(&a) && i.is_subset_of(&b));
                prop_assert!(i.width() <= a.width() && i.width() <= b.width());
            } else {
                prop_assert!(a.lo().max(b.lo()) > a.hi().min(b.hi()));
            }
        }
    }
}
