//! The one-sided Skorokhod reflection of `X = A - C` and the structural
//! identities it satisfies.

use crate::error::{Error, Result};
use crate::measure::{crossing, stieltjes, Cumulative, Grid, PiecewiseLinear, SignedPath};
use crate::scalar::Scalar;

/// Reflected path `Q*`, its regulator `Y` and, on demand, the last
/// emptiness time `σ*`.
///
/// `qstar` lives on the knots of `A` and `C` plus every point where `X`
/// drops through its running minimum inside a segment, so it is exactly
/// piecewise linear on its own knots.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionResult<T> {
    qstar: PiecewiseLinear<T>,
    regulator: Cumulative<T>,
    initial: T,
}

impl<T: Scalar> ReflectionResult<T> {
    pub fn qstar(&self) -> &PiecewiseLinear<T> {
        &self.qstar
    }

    pub fn regulator(&self) -> &Cumulative<T> {
        &self.regulator
    }

    /// Content at time 0.
    pub fn initial(&self) -> T {
        self.initial
    }

    /// Knots of `qstar`: the path grid plus the emptying points.
    pub fn grid(&self) -> Grid<T> {
        self.qstar.grid()
    }

    /// [`Self::grid`] refined geometrically from the left towards every local
    /// minimum of `Q*`.
    ///
    /// At an emptying point the monotone iterations contract only to second
    /// order, so on a coarse grid their error there decays like `m / k` with
    /// `m` the arrival mass of the preceding cell. A shallow valley of depth
    /// `q` behaves the same way until the error drops below `q`. Cells are
    /// halved until `m` falls under `q` or a negligible floor.
    pub fn iteration_grid(&self, x: &SignedPath<T>) -> Grid<T> {
        let a = x.arrivals();
        let floor = T::lit(1e-13) * (T::one() + a.total());
        let (knots, values) = (self.qstar.knots(), self.qstar.values());
        let mut extra = Vec::new();
        for i in 1..knots.len() {
            let falls = values[i] < values[i - 1];
            let rises = values.get(i + 1).map_or(true, |&v| v >= values[i]);
            if !(falls && rises) {
                continue;
            }
            let target = floor.max(values[i]);
            let (t, mut d) = (knots[i], knots[i] - knots[i - 1]);
            for _ in 0..64 {
                d = d / T::lit(2.0);
                if d <= T::lit(4.0) * T::epsilon() * t || a.increment(t - d, t).unwrap_or(T::zero()) <= target {
                    break;
                }
                extra.push(t - d);
            }
        }
        Grid::union(&[knots, &extra])
    }

    /// `σ*(t) = sup{s <= t : Q*(s) <= C(s, t]}`.
    ///
    /// Scans `s ↦ Q*(s) + C(s)` backwards from `t` for its last point at or
    /// below `C(t)`; the scan stops at the latest emptiness time, so its cost
    /// is the length of the current busy period.
    pub fn sigma_star(&self, x: &SignedPath<T>, t: T) -> Result<T> {
        if !self.qstar.in_domain(t) {
            return Err(Error::OutOfDomain {
                t: format!("{t}"),
                horizon: format!("{}", self.qstar.horizon()),
            });
        }
        let c = x.services();
        let level = c.at(t);
        let mut s = t;
        let mut i = self.qstar.segment(t);
        let h = |j: usize| self.qstar.values()[j] + c.at(self.qstar.knots()[j]);
        if self.qstar.at(t) + level <= level {
            return Ok(t);
        }
        loop {
            let k0 = self.qstar.knots()[i];
            let v0 = h(i);
            if v0 <= level {
                let k1 = self.qstar.knots()[i + 1];
                let v1 = h(i + 1);
                if v1 > level {
                    s = s.min(crossing(k0, k1, v0, v1, level));
                } else {
                    s = s.min(k1);
                }
                return Ok(s);
            }
            if i == 0 {
                // Q*(0) > 0 only with a positive initial content.
                return Ok(T::zero());
            }
            i -= 1;
        }
    }

    /// `σ*` at every knot of `qstar`.
    pub fn sigma_star_on_grid(&self, x: &SignedPath<T>) -> Vec<T> {
        self.qstar
            .knots()
            .iter()
            .map(|&t| self.sigma_star(x, t).expect("knots are in the domain"))
            .collect()
    }
}

/// Reflection from an empty start: `Q*(t) = X(t) - min(0, inf_{s<=t} X(s))`.
pub fn reflect<T: Scalar>(x: &SignedPath<T>) -> ReflectionResult<T> {
    reflect_from(x, T::zero()).expect("zero initial content is valid")
}

/// Reflection started from content `initial >= 0`:
/// `Q(t) = max(sup_{u<=t} X(u, t], initial + X(0, t])`.
///
/// One left-to-right pass tracks the running minimum `m` of `X`, seeded at
/// `-initial`. Where `X` falls through `m` inside a segment the crossing is
/// inserted as a knot so that `Q = X - m` stays exactly piecewise linear.
pub fn reflect_from<T: Scalar>(x: &SignedPath<T>, initial: T) -> Result<ReflectionResult<T>> {
    if !(initial >= T::zero() && initial.is_finite()) {
        return Err(Error::Precondition(format!(
            "initial content must be finite and nonnegative, got {initial}"
        )));
    }
    let grid = x.grid();
    let pts = grid.points();
    let mut knots = Vec::with_capacity(pts.len() + pts.len() / 4);
    let mut q = Vec::with_capacity(knots.capacity());
    let mut y = Vec::with_capacity(knots.capacity());
    let mut floor = -initial;
    knots.push(T::zero());
    q.push(initial);
    y.push(T::zero());
    let mut x0 = x.net(T::zero());
    for w in pts.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let x1 = x.net(t1);
        if x1 < floor {
            if x0 > floor {
                let c = crossing(t0, t1, x0, x1, floor);
                if c > t0 && c < t1 {
                    knots.push(c);
                    q.push(T::zero());
                    y.push(-floor - initial);
                }
            }
            floor = x1;
        }
        knots.push(t1);
        q.push(x1 - floor);
        y.push(-floor - initial);
        x0 = x1;
    }
    let qstar = PiecewiseLinear::new(knots.clone(), q)?;
    let regulator = Cumulative::from_breakpoints(knots, y)?;
    Ok(ReflectionResult {
        qstar,
        regulator,
        initial,
    })
}

/// Absolute tolerance for identity checks on `x`: `1e-9 (1 + A(T) + C(T))`.
pub fn identity_tolerance<T: Scalar>(x: &SignedPath<T>) -> T {
    T::lit(1e-9) * x.scale()
}

fn ordered<T: Scalar>(s: T, t: T) -> Result<()> {
    if s > t {
        return Err(Error::ReversedInterval {
            s: format!("{s}"),
            t: format!("{t}"),
        });
    }
    Ok(())
}

/// `sup_{u in [s,t]} X(u, t]`, taken over the knots of `x` in `[s, t]`.
pub fn sup_increment<T: Scalar>(x: &SignedPath<T>, s: T, t: T) -> Result<T> {
    ordered(s, t)?;
    let xt = x.net(t);
    let grid = x.grid();
    let lo = grid.points().partition_point(|&k| k < s);
    let hi = grid.points().partition_point(|&k| k <= t);
    let min = grid.points()[lo..hi]
        .iter()
        .map(|&u| x.net(u))
        .fold(x.net(s).min(xt), T::min);
    Ok(xt - min)
}

/// Checks `Q*(t) = max(sup_{s<=u<=t} X(u,t], Q*(s) + X(s,t])` within
/// [`identity_tolerance`].
pub fn check_semigroup<T: Scalar>(
    x: &SignedPath<T>,
    r: &ReflectionResult<T>,
    s: T,
    t: T,
) -> Result<bool> {
    ordered(s, t)?;
    let rhs = sup_increment(x, s, t)?.max(r.qstar.eval(s)? + x.net_increment(s, t)?);
    Ok((r.qstar.eval(t)? - rhs).abs() <= identity_tolerance(x))
}

/// Checks that `Q*(s) >= C(s,t]` implies `Q*(t) = Q*(s) + X(s,t]`.
pub fn check_additive_continuation<T: Scalar>(
    x: &SignedPath<T>,
    r: &ReflectionResult<T>,
    s: T,
    t: T,
) -> Result<bool> {
    ordered(s, t)?;
    let qs = r.qstar.eval(s)?;
    if qs < x.services().increment(s, t)? {
        return Ok(true);
    }
    let continued = qs + x.net_increment(s, t)?;
    Ok((r.qstar.eval(t)? - continued).abs() <= identity_tolerance(x))
}

/// `∫ Q* dY` over the horizon, trapezoidal on the common knots.
pub fn check_complementarity<T: Scalar>(r: &ReflectionResult<T>) -> T {
    stieltjes(&r.qstar, &r.regulator, T::zero(), r.qstar.horizon())
}
