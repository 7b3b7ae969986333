//! Regulating functions of `X`, the operator `Φ(B) = B ∘ σ_B`, its
//! iteration from `B_1 = C`, and the running maximum `U = sup (C - A)`.
//!
//! A regulating function is continuous, nondecreasing, vanishes at 0 and
//! keeps `X(0,t] + B(t) >= 0`. `σ_B(t)` is the last `s <= t` with
//! `A(s) + B(s) <= C(t)`; since `A + B` is nondecreasing the search is a
//! single crossing. The two iterations are tied together by
//! `Q_k + C = A + B_k`, which [`bridge_identity`] measures.

use crate::error::{Error, Result};
use crate::integral::{iterate_theta_raw, rounding_slack, IterationTrace};
use crate::measure::{Cumulative, Grid, PiecewiseLinear, SignedPath};
use crate::reflection::reflect;
use crate::scalar::Scalar;

/// A member of `R(X)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegulatingFunction<T> {
    curve: Cumulative<T>,
}

impl<T: Scalar> RegulatingFunction<T> {
    /// Accepts `curve` when `A + curve - C >= -tol` on the common knots.
    pub fn new(curve: Cumulative<T>, x: &SignedPath<T>, tol: T) -> Result<Self> {
        if curve.horizon() != x.horizon() {
            return Err(Error::HorizonMismatch(
                format!("{}", curve.horizon()),
                format!("{}", x.horizon()),
            ));
        }
        if !is_regulating(&curve, x, tol) {
            return Err(Error::Precondition(
                "A + B - C is negative somewhere: not a regulating function".into(),
            ));
        }
        Ok(Self { curve })
    }

    /// `B_1 = C`, always regulating.
    pub fn services(x: &SignedPath<T>) -> Self {
        Self {
            curve: x.services().clone(),
        }
    }

    pub fn curve(&self) -> &Cumulative<T> {
        &self.curve
    }

    pub fn at(&self, t: T) -> T {
        self.curve.at(t)
    }
}

/// Membership in `R(X)`: `b(0) = 0` and `b` nondecreasing hold by
/// construction of [`Cumulative`]; `A + b - C >= -tol` is checked on the
/// union of all knots.
pub fn is_regulating<T: Scalar>(b: &Cumulative<T>, x: &SignedPath<T>, tol: T) -> bool {
    if b.horizon() != x.horizon() {
        return false;
    }
    Grid::union(&[b.knots(), x.grid().points()])
        .points()
        .iter()
        .all(|&t| x.net(t) + b.at(t) >= -tol)
}

fn arrivals_plus<T: Scalar>(b: &RegulatingFunction<T>, x: &SignedPath<T>) -> PiecewiseLinear<T> {
    let a = x.arrivals();
    let grid = Grid::union(&[a.knots(), b.curve.knots()]);
    PiecewiseLinear::sample(&grid, |s| a.at(s) + b.at(s))
}

/// `σ_B(t) = sup{0 <= s <= t : A(s) + B(s) <= C(t)}`.
///
/// Backward segment scan for the last point of `A + B` at or below `C(t)`;
/// flat stretches at exactly that level resolve to their right end.
pub fn sigma_b<T: Scalar>(b: &RegulatingFunction<T>, x: &SignedPath<T>, t: T) -> Result<T> {
    if b.curve.horizon() != x.horizon() {
        return Err(Error::HorizonMismatch(
            format!("{}", b.curve.horizon()),
            format!("{}", x.horizon()),
        ));
    }
    let level = x.services().eval(t)?;
    // A(0) + B(0) = 0 <= C(t), so the set is never empty.
    Ok(arrivals_plus(b, x)
        .last_at_or_below(level, t)
        .unwrap_or(T::zero()))
}

/// `Φ(B) = B ∘ σ_B`, sampled on the knots of `B` and of the path.
pub fn phi<T: Scalar>(b: &RegulatingFunction<T>, x: &SignedPath<T>) -> Result<RegulatingFunction<T>> {
    if b.curve.horizon() != x.horizon() {
        return Err(Error::HorizonMismatch(
            format!("{}", b.curve.horizon()),
            format!("{}", x.horizon()),
        ));
    }
    let grid = Grid::union(&[b.curve.knots(), x.grid().points()]);
    let (values, _) = phi_values(x, &grid, &b.curve.function().resample(&grid));
    Ok(RegulatingFunction {
        curve: Cumulative::from_breakpoints(grid.points().to_vec(), values)?,
    })
}

/// One application of `Φ` to `b` given by its values on `grid`; returns the
/// new values and the hitting times `σ_B` at the grid points.
fn phi_values<T: Scalar>(x: &SignedPath<T>, grid: &Grid<T>, b: &PiecewiseLinear<T>) -> (Vec<T>, Vec<T>) {
    let a = x.arrivals();
    let c = x.services();
    let h = PiecewiseLinear::sample(grid, |s| a.at(s) + b.at(s));
    let h = h.monotone_envelope(rounding_slack(&h)).unwrap_or(h);
    let sigma: Vec<T> = grid
        .points()
        .iter()
        .map(|&t| h.last_at_or_below_monotone(c.at(t), t).unwrap_or(T::zero()))
        .collect();
    let values = sigma.iter().map(|&s| b.at(s)).collect();
    (values, sigma)
}

/// `sup |B - Φ(B)|` on the knots of `B` and of the path.
pub fn phi_residual<T: Scalar>(b: &RegulatingFunction<T>, x: &SignedPath<T>) -> Result<T> {
    let image = phi(b, x)?;
    Ok(image
        .curve
        .knots()
        .iter()
        .zip(image.curve.values())
        .fold(T::zero(), |acc, (&t, &v)| acc.max((b.at(t) - v).abs())))
}

/// `B_1 = C`, `B_{k+1} = Φ(B_k)` on the same grid as [`iterate_theta`].
pub fn iterate_phi<T: Scalar>(x: &SignedPath<T>, tol: T, max_iter: usize) -> Result<IterationTrace<T>> {
    iterate_phi_on(x, &reflect(x).iteration_grid(x), tol, max_iter)
}

/// [`iterate_phi`] on a caller-supplied grid.
pub fn iterate_phi_on<T: Scalar>(
    x: &SignedPath<T>,
    grid: &Grid<T>,
    tol: T,
    max_iter: usize,
) -> Result<IterationTrace<T>> {
    if !(tol > T::zero()) {
        return Err(Error::Precondition(format!("tolerance must be positive, got {tol}")));
    }
    Ok(iterate_phi_raw(x, grid, tol, max_iter))
}

fn iterate_phi_raw<T: Scalar>(x: &SignedPath<T>, grid: &Grid<T>, tol: T, max_iter: usize) -> IterationTrace<T> {
    let c = x.services();
    let first: Vec<T> = grid.points().iter().map(|&t| c.at(t)).collect();
    let mut hitting = None;
    let mut trace = IterationTrace::run("B_k", grid.clone(), first, tol, max_iter, |b| {
        let b = PiecewiseLinear::from_grid_values(grid, b.to_vec());
        let (values, sigma) = phi_values(x, grid, &b);
        hitting = Some(sigma);
        values
    });
    trace.hitting_times = hitting;
    trace
}

/// `U(t) = sup_{s<=t} (C(s) - A(s))`, the running maximum with its
/// crossing points inserted as knots. `U = Q* - X`.
pub fn u_from<T: Scalar>(x: &SignedPath<T>) -> RegulatingFunction<T> {
    let grid = x.grid();
    let pts = grid.points();
    let deficit = |t: T| x.services().at(t) - x.arrivals().at(t);
    let mut knots = vec![T::zero()];
    let mut values = vec![T::zero()];
    let mut peak = T::zero();
    let mut d0 = deficit(T::zero());
    for w in pts.windows(2) {
        let d1 = deficit(w[1]);
        if d1 > peak {
            if d0 < peak {
                let c = crate::measure::crossing(w[0], w[1], d0, d1, peak);
                if c > w[0] && c < w[1] {
                    knots.push(c);
                    values.push(peak);
                }
            }
            peak = d1;
        }
        knots.push(w[1]);
        values.push(peak);
        d0 = d1;
    }
    RegulatingFunction {
        curve: Cumulative::from_breakpoints(knots, values).expect("running maximum is a valid cumulative"),
    }
}

/// Given a numerical fixed point `b` of `Φ` (residual `<= tol`), checks
/// `b <= U + tol` pointwise.
pub fn check_fixed_point_dominated<T: Scalar>(
    b: &RegulatingFunction<T>,
    x: &SignedPath<T>,
    tol: T,
) -> Result<bool> {
    let residual = phi_residual(b, x)?;
    if residual > tol {
        return Err(Error::Precondition(format!(
            "not a fixed point of Φ: residual {residual} exceeds {tol}"
        )));
    }
    let u = u_from(x);
    Ok(Grid::union(&[b.curve.knots(), u.curve.knots()])
        .points()
        .iter()
        .all(|&t| b.at(t) <= u.at(t) + tol))
}

/// Runs both iterations for `k` steps on the iteration grid and returns
/// `sup |Q_k + C - A - B_k|`.
pub fn bridge_identity<T: Scalar>(x: &SignedPath<T>, k: usize) -> Result<T> {
    Ok(bridge_residuals(x, k)?.pop().unwrap())
}

/// Bridge residuals for every `j = 1..=k`.
pub fn bridge_residuals<T: Scalar>(x: &SignedPath<T>, k: usize) -> Result<Vec<T>> {
    if k == 0 {
        return Err(Error::Precondition("iterates are numbered from 1".into()));
    }
    let grid = reflect(x).iteration_grid(x);
    // A negative tolerance never triggers the convergence stop.
    let never = -T::one();
    let q = iterate_theta_raw(x, &grid, never, k - 1);
    let b = iterate_phi_raw(x, &grid, never, k - 1);
    let (a, c) = (x.arrivals(), x.services());
    Ok(q
        .iterates
        .iter()
        .zip(&b.iterates)
        .map(|(qk, bk)| {
            grid.points()
                .iter()
                .zip(qk.iter().zip(bk))
                .fold(T::zero(), |acc, (&t, (&qv, &bv))| {
                    acc.max((qv + c.at(t) - a.at(t) - bv).abs())
                })
        })
        .collect())
}
