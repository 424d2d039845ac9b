//! Extended-real helpers.
//!
//! Values of `F`, `F°`, `F*`, `R`, `R*` and the transport objectives live in
//! `[-∞, +∞]` and are stored as plain `f64` with `f64::INFINITY` /
//! `f64::NEG_INFINITY`. Two conventions are used throughout:
//!
//! * a mass times an infinite density is zero when the mass is zero
//!   (`0·(±∞) = 0`);
//! * the infimum over an empty set is `+∞`.

/// Alias used in signatures where a value may be infinite.
pub type ExtReal = f64;

/// Relative slack used when testing membership of a value in a closed
/// interval (entropy domains, indicator constraints).
pub const DOMAIN_TOL: f64 = 1e-9;

/// Product of a nonnegative mass with an extended value, with `0·∞ = 0`.
#[inline]
pub fn mass_times(mass: f64, value: ExtReal) -> ExtReal {
    if mass == 0.0 {
        0.0
    } else {
        mass * value
    }
}

/// Sum of extended reals. `+∞ + (-∞)` is reported as `+∞`, which is the
/// convention for objective values (an infeasible term dominates).
#[inline]
pub fn ext_add(a: ExtReal, b: ExtReal) -> ExtReal {
    if a == f64::INFINITY || b == f64::INFINITY {
        f64::INFINITY
    } else {
        a + b
    }
}

/// Sum of an iterator of extended reals under [`ext_add`].
pub fn ext_sum<I: IntoIterator<Item = ExtReal>>(it: I) -> ExtReal {
    it.into_iter().fold(0.0, ext_add)
}

/// Infimum of an iterator; `+∞` when empty.
pub fn ext_min<I: IntoIterator<Item = ExtReal>>(it: I) -> ExtReal {
    it.into_iter().fold(f64::INFINITY, f64::min)
}

/// `true` when `x` lies in `[lo, hi]` up to [`DOMAIN_TOL`] relative slack.
#[inline]
pub fn in_interval(x: f64, lo: f64, hi: f64) -> bool {
    let slack = |b: f64| DOMAIN_TOL * b.abs().max(1.0);
    x >= lo - slack(lo) && x <= hi + slack(hi)
}

/// Absolute/relative closeness for extended reals: infinities must match
/// exactly, finite values within `tol·max(1, |a|, |b|)`.
pub fn ext_close(a: ExtReal, b: ExtReal, tol: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}
