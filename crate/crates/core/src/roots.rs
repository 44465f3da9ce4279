//! Bracketing and bisection for monotone predicates.
//!
//! Every search in the toolkit (ε line search, σ calibration, beta quantiles)
//! is over a function known to be monotone, so the routines here work on a
//! boolean predicate `above(x)` that is `false` below the root and `true` at
//! or above it.

use crate::scalar::{lit, Real};

/// Bisects `[lo, hi]` where `above(lo) == false` and `above(hi) == true`.
///
/// Stops after `max_steps` halvings or as soon as the midpoint is no longer
/// representable strictly between the endpoints. Returns the final bracket;
/// `above(hi)` still holds on return.
pub fn bisect<T: Real>(mut lo: T, mut hi: T, max_steps: usize, mut above: impl FnMut(T) -> bool) -> (T, T) {
    let half = lit::<T>(0.5);
    for _ in 0..max_steps {
        let mid = lo + (hi - lo) * half;
        if mid <= lo || mid >= hi {
            break;
        }
        if above(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

/// Outcome of growing an upper bracket end by doubling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bracket<T> {
    /// `above(lo) == false`, `above(hi) == true`.
    Found { lo: T, hi: T },
    /// The predicate stayed false up to the cap.
    Exhausted,
}

/// Starting from `[start_lo, start_hi]`, doubles the upper end until
/// `above(hi)` or `hi > cap`.
///
/// The caller guarantees `above(start_lo) == false`.
pub fn expand_upper<T: Real>(start_lo: T, start_hi: T, cap: T, mut above: impl FnMut(T) -> bool) -> Bracket<T> {
    let two = lit::<T>(2.0);
    let (mut lo, mut hi) = (start_lo, start_hi);
    loop {
        let probe = if hi > cap { cap } else { hi };
        if above(probe) {
            return Bracket::Found { lo, hi: probe };
        }
        if probe >= cap {
            return Bracket::Exhausted;
        }
        lo = probe;
        hi = hi * two;
    }
}
