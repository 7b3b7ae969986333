//! The integral-representation operator
//! `Θ(Q)(t) = ∫_0^t 1(Q(s) > C(s,t]) dA(s)` and the decreasing iteration
//! `Q_{k+1} = Θ(Q_k)` started from `Q_0 = ∞`.
//!
//! The indicator is rewritten as `1(Q(s) + C(s) > C(t))`, so `Θ(Q)(t)` is the
//! `A`-measure of a superlevel set of the piecewise-linear `Q + C`. When
//! `Q + C` is nondecreasing that set is an interval `(σ, t]` and the value is
//! `A(t) - A(σ)`, found by binary search; otherwise the general level-set
//! sweep is used. Both routes locate crossings with the same formula.

use crate::error::{Error, Result};
use crate::measure::{superlevel_measure, Grid, PiecewiseLinear, SignedPath};
use crate::reflection::reflect;
use crate::scalar::{sup_distance, Scalar};

/// Argument of `Θ`: a nonnegative function, or the constant `+∞` that starts
/// the iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum Content<T> {
    Infinite,
    Finite(PiecewiseLinear<T>),
}

fn check_nonnegative<T: Scalar>(q: &PiecewiseLinear<T>) -> Result<()> {
    if q.min_value() < T::zero() {
        return Err(Error::Precondition(format!(
            "Θ needs a nonnegative argument, minimum is {}",
            q.min_value()
        )));
    }
    Ok(())
}

fn check_horizon<T: Scalar>(q: &PiecewiseLinear<T>, x: &SignedPath<T>) -> Result<()> {
    if q.horizon() != x.horizon() {
        return Err(Error::HorizonMismatch(
            format!("{}", q.horizon()),
            format!("{}", x.horizon()),
        ));
    }
    Ok(())
}

/// `Θ(q)(t)` at a single time.
pub fn theta<T: Scalar>(q: &Content<T>, x: &SignedPath<T>, t: T) -> Result<T> {
    let a = x.arrivals();
    match q {
        Content::Infinite => a.eval(t),
        Content::Finite(q) => {
            check_nonnegative(q)?;
            check_horizon(q, x)?;
            let level = x.services().eval(t)?;
            superlevel_measure(a, &shifted_by_services(q, x), level, t)
        }
    }
}

/// `q + C` on the union of their knots.
fn shifted_by_services<T: Scalar>(q: &PiecewiseLinear<T>, x: &SignedPath<T>) -> PiecewiseLinear<T> {
    let c = x.services();
    let grid = Grid::union(&[q.knots(), c.knots()]);
    PiecewiseLinear::sample(&grid, |s| q.at(s) + c.at(s))
}

/// `Θ(q)` sampled at every point of `grid`.
pub fn theta_on_grid<T: Scalar>(
    q: &PiecewiseLinear<T>,
    x: &SignedPath<T>,
    grid: &Grid<T>,
) -> Result<PiecewiseLinear<T>> {
    check_nonnegative(q)?;
    check_horizon(q, x)?;
    if grid.horizon() != x.horizon() {
        return Err(Error::HorizonMismatch(
            format!("{}", grid.horizon()),
            format!("{}", x.horizon()),
        ));
    }
    let h = shifted_by_services(q, x);
    Ok(PiecewiseLinear::from_grid_values(
        grid,
        theta_values(&h, x, grid.points()),
    ))
}

fn theta_values<T: Scalar>(h: &PiecewiseLinear<T>, x: &SignedPath<T>, ts: &[T]) -> Vec<T> {
    let (a, c) = (x.arrivals(), x.services());
    if let Some(h) = h.monotone_envelope(rounding_slack(h)) {
        ts.iter()
            .map(|&t| match h.last_at_or_below_monotone(c.at(t), t) {
                Some(sigma) => a.at(t) - a.at(sigma),
                None => a.at(t) - a.at(T::zero()),
            })
            .collect()
    } else {
        ts.iter()
            .map(|&t| superlevel_measure(a, h, c.at(t), t).expect("t lies in the domain"))
            .collect()
    }
}

/// Dips this small in `q + C` are rounding noise, not structure.
pub(crate) fn rounding_slack<T: Scalar>(h: &PiecewiseLinear<T>) -> T {
    T::lit(64.0) * T::epsilon() * (T::one() + h.max_value().abs())
}

/// `Θ(q)` at arbitrary times in `[0, horizon]`.
pub fn theta_at<T: Scalar>(q: &PiecewiseLinear<T>, x: &SignedPath<T>, ts: &[T]) -> Result<Vec<T>> {
    check_nonnegative(q)?;
    check_horizon(q, x)?;
    if let Some(&t) = ts.iter().find(|&&t| !q.in_domain(t)) {
        return Err(Error::OutOfDomain {
            t: format!("{t}"),
            horizon: format!("{}", q.horizon()),
        });
    }
    Ok(theta_values(&shifted_by_services(q, x), x, ts))
}

/// A run of one of the monotone iterations, sampled on a fixed grid.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace<T> {
    /// Column name of the iterate in CSV output (`Q_k` or `B_k`).
    pub label: &'static str,
    pub grid: Grid<T>,
    /// `iterates[0]` is the first iterate (`Q_1 = A` or `B_1 = C`).
    pub iterates: Vec<Vec<T>>,
    /// `gaps[i]` is the sup-norm distance between `iterates[i]` and `iterates[i + 1]`.
    pub gaps: Vec<T>,
    pub converged: bool,
    pub tolerance: T,
    /// Hitting times `σ_{B_k}` of the last step, for the regulating iteration.
    pub hitting_times: Option<Vec<T>>,
}

impl<T: Scalar> IterationTrace<T> {
    pub(crate) fn run(
        label: &'static str,
        grid: Grid<T>,
        first: Vec<T>,
        tol: T,
        max_iter: usize,
        mut step: impl FnMut(&[T]) -> Vec<T>,
    ) -> Self {
        let mut iterates = vec![first];
        let mut gaps = Vec::new();
        let mut converged = false;
        for _ in 0..max_iter {
            let current = iterates.last().unwrap();
            let next = step(current);
            let gap = sup_distance(current, &next);
            iterates.push(next);
            gaps.push(gap);
            if gap <= tol {
                converged = true;
                break;
            }
        }
        Self {
            label,
            grid,
            iterates,
            gaps,
            converged,
            tolerance: tol,
            hitting_times: None,
        }
    }

    /// Number of operator applications performed.
    pub fn steps(&self) -> usize {
        self.gaps.len()
    }

    pub fn limit(&self) -> PiecewiseLinear<T> {
        PiecewiseLinear::from_grid_values(&self.grid, self.iterates.last().unwrap().clone())
    }

    /// The `k`-th iterate (1-based), or the last one if the run stopped earlier.
    pub fn iterate(&self, k: usize) -> PiecewiseLinear<T> {
        let i = k.max(1).min(self.iterates.len()) - 1;
        PiecewiseLinear::from_grid_values(&self.grid, self.iterates[i].clone())
    }

    /// True when every iterate is pointwise `<=` its predecessor (no slack).
    pub fn is_nonincreasing(&self) -> bool {
        self.iterates
            .windows(2)
            .all(|w| w[1].iter().zip(&w[0]).all(|(next, prev)| next <= prev))
    }

    /// Ratios of successive gaps, an empirical contraction rate.
    pub fn gap_ratios(&self) -> Vec<T> {
        self.gaps
            .windows(2)
            .filter(|w| w[0] > T::zero())
            .map(|w| w[1] / w[0])
            .collect()
    }
}

/// Default tolerance `1e-9 (1 + A(T))`.
pub fn default_tolerance<T: Scalar>(x: &SignedPath<T>) -> T {
    T::lit(1e-9) * (T::one() + x.arrivals().total())
}

pub const DEFAULT_MAX_ITER: usize = 10_000;

/// `Q_1 = A`, `Q_{k+1} = Θ(Q_k)` until the sup-norm gap drops to `tol`.
///
/// The iterates are sampled on [`ReflectionResult::iteration_grid`](crate::reflection::ReflectionResult::iteration_grid): the path
/// grid plus the emptying points, on which `Q*` is exactly piecewise linear,
/// refined towards each emptying point.
pub fn iterate_theta<T: Scalar>(x: &SignedPath<T>, tol: T, max_iter: usize) -> Result<IterationTrace<T>> {
    iterate_theta_on(x, &reflect(x).iteration_grid(x), tol, max_iter)
}

/// [`iterate_theta`] on a caller-supplied grid.
pub fn iterate_theta_on<T: Scalar>(
    x: &SignedPath<T>,
    grid: &Grid<T>,
    tol: T,
    max_iter: usize,
) -> Result<IterationTrace<T>> {
    if !(tol > T::zero()) {
        return Err(Error::Precondition(format!("tolerance must be positive, got {tol}")));
    }
    Ok(iterate_theta_raw(x, grid, tol, max_iter))
}

pub(crate) fn iterate_theta_raw<T: Scalar>(
    x: &SignedPath<T>,
    grid: &Grid<T>,
    tol: T,
    max_iter: usize,
) -> IterationTrace<T> {
    let a = x.arrivals();
    let c = x.services();
    let first: Vec<T> = grid.points().iter().map(|&t| a.at(t)).collect();
    let cs: Vec<T> = grid.points().iter().map(|&t| c.at(t)).collect();
    IterationTrace::run("Q_k", grid.clone(), first, tol, max_iter, |q| {
        let h = q.iter().zip(&cs).map(|(&v, &cv)| v + cv).collect();
        let h = PiecewiseLinear::from_grid_values(grid, h);
        theta_values(&h, x, grid.points())
    })
}

/// True when `Θ(q1) <= Θ(q2)` at every point of the common grid, given
/// `q1 <= q2`. Comparisons allow `16 ε (1 + A(T) + C(T))` of rounding.
pub fn check_theta_monotone<T: Scalar>(
    q1: &PiecewiseLinear<T>,
    q2: &PiecewiseLinear<T>,
    x: &SignedPath<T>,
) -> Result<bool> {
    let grid = Grid::union(&[q1.knots(), q2.knots(), x.grid().points()]);
    if grid.points().iter().any(|&t| q1.at(t) > q2.at(t)) {
        return Err(Error::Precondition("q1 <= q2 does not hold".into()));
    }
    let slack = T::lit(16.0) * T::epsilon() * x.scale();
    let t1 = theta_on_grid(q1, x, &grid)?;
    let t2 = theta_on_grid(q2, x, &grid)?;
    Ok(t1
        .values()
        .iter()
        .zip(t2.values())
        .all(|(&lo, &hi)| lo <= hi + slack))
}

/// `sup |q - Θ(q)|` over the knots of `q` and of the path.
pub fn check_fixed_point<T: Scalar>(q: &PiecewiseLinear<T>, x: &SignedPath<T>) -> Result<T> {
    let grid = Grid::union(&[q.knots(), x.grid().points()]);
    let image = theta_on_grid(q, x, &grid)?;
    Ok(grid
        .points()
        .iter()
        .zip(image.values())
        .fold(T::zero(), |acc, (&t, &v)| acc.max((q.at(t) - v).abs())))
}
