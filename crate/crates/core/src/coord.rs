//! Exact positions in the normalized domain `[0, 1]`.
//!
//! Query points and active-interval endpoints are kept as reduced rationals so
//! that two queries at "the same" point compare equal bit-for-bit, which the
//! per-point ledger relies on. The user's domain only appears when a
//! coordinate is converted back to a float with [`Coord::denormalize`].

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// A reduced rational `num/den` with `den >= 1`.
///
/// Equality, ordering, and hashing work on the reduced numerator and
/// denominator directly. `BigRational`'s own impls divide to normalize first,
/// which dominated ledger lookups.
#[derive(Clone)]
pub struct Coord(BigRational);

impl PartialEq for Coord {
    fn eq(&self, other: &Self) -> bool {
        self.0.denom() == other.0.denom() && self.0.numer() == other.0.numer()
    }
}

impl Eq for Coord {}

impl Ord for Coord {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (&self.0, &other.0);
        if a.denom() == b.denom() {
            return a.numer().cmp(b.numer());
        }
        // Denominators are positive, so cross-multiplying keeps the order.
        (a.numer() * b.denom()).cmp(&(b.numer() * a.denom()))
    }
}

impl PartialOrd for Coord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Hash for Coord {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.numer().hash(state);
        self.0.denom().hash(state);
    }
}

impl Coord {
    /// Builds `num/den` in lowest terms. Panics if `den == 0`.
    pub fn new(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Self {
        let den = den.into();
        assert!(!den.is_zero(), "coordinate denominator must be non-zero");
        // Ratio::new reduces and moves the sign onto the numerator.
        Coord(BigRational::new(num.into(), den))
    }

    pub fn zero() -> Self {
        Coord(BigRational::zero())
    }

    pub fn one() -> Self {
        Coord(BigRational::one())
    }

    /// Wraps a ratio produced by `BigRational` arithmetic, which keeps results
    /// in lowest terms with a positive denominator.
    pub fn from_ratio(r: BigRational) -> Self {
        Coord(r)
    }

    /// Exact rational value of a finite float. `None` for NaN or infinities.
    pub fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x).map(Coord)
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    /// `w·a + (1 − w)·b` with `w = w_num / w_den`, computed exactly.
    ///
    /// Panics unless `0 <= w_num <= w_den` and `w_den > 0`; the weights used by
    /// the optimizer are compile-time constants.
    pub fn convex(a: &Coord, b: &Coord, w_num: u32, w_den: u32) -> Coord {
        assert!(w_den > 0 && w_num <= w_den, "weight {w_num}/{w_den} not in [0, 1]");
        let w = BigRational::new(BigInt::from(w_num), BigInt::from(w_den));
        let rest = BigRational::one() - &w;
        Coord(w * &a.0 + rest * &b.0)
    }

    /// Midpoint of `a` and `b`.
    pub fn midpoint(a: &Coord, b: &Coord) -> Coord {
        Coord::convex(a, b, 1, 2)
    }

    /// True iff the reduced denominator is a power of two.
    pub fn is_dyadic(&self) -> bool {
        let den = self.0.denom();
        match den.magnitude().trailing_zeros() {
            // den == 2^k exactly when its only set bit is the lowest set bit.
            Some(tz) => den.magnitude().bits() == tz + 1,
            None => false,
        }
    }

    /// Maps the normalized coordinate onto `[domain_lo, domain_hi]`.
    pub fn denormalize(&self, domain_lo: f64, domain_hi: f64) -> f64 {
        domain_lo + self.to_f64() * (domain_hi - domain_lo)
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for Coord {
    /// Always `num/den`, including integers (`0/1`, `1/1`).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Coord({self})")
    }
}
