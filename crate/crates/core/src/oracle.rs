//! Brute-force reference implementations.
//!
//! These deliberately share nothing with the fast paths beyond evaluating the
//! input cumulatives: suprema are exhaustive double loops, `Θ` is a midpoint
//! Riemann sum and `σ_B` a last-index scan.

use crate::error::{Error, Result};
use crate::measure::{Grid, SignedPath};
use crate::scalar::Scalar;

/// A uniform grid of spacing `step` over `[0, horizon]`, optionally merged
/// with extra points (typically the path knots).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrid<T> {
    step: T,
    points: Vec<T>,
}

impl<T: Scalar> DenseGrid<T> {
    pub fn uniform(horizon: T, step: T) -> Result<Self> {
        if !(step > T::zero()) || !(horizon > T::zero()) {
            return Err(Error::Precondition(format!(
                "dense grid needs positive step and horizon, got {step} and {horizon}"
            )));
        }
        let n = (horizon / step).ceil().to_usize().unwrap_or(0).max(1);
        let mut points: Vec<T> = (0..n)
            .map(|i| T::from_usize_lossy(i) * step)
            .take_while(|&p| p < horizon)
            .collect();
        points.push(horizon);
        Ok(Self { step, points })
    }

    /// Uniform grid merged with every knot of `x`.
    pub fn covering(x: &SignedPath<T>, step: T) -> Result<Self> {
        let uniform = Self::uniform(x.horizon(), step)?;
        let merged = Grid::union(&[&uniform.points, x.grid().points()]);
        Ok(Self {
            step,
            points: merged.points().to_vec(),
        })
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }
}

/// `Q(t_i) = max_{j <= i} (X(t_i) - X(t_j))` by exhaustive search.
pub fn brute_reflect<T: Scalar>(x: &SignedPath<T>, g: &DenseGrid<T>) -> Vec<T> {
    let xs: Vec<T> = g.points.iter().map(|&t| x.net(t)).collect();
    (0..xs.len())
        .map(|i| {
            (0..=i)
                .map(|j| xs[i] - xs[j])
                .fold(T::neg_infinity(), T::max)
        })
        .collect()
}

/// Riemann sum of `1(q(m) > C(t) - C(m)) A(cell)` over the grid cells in
/// `[0, t]`, with the indicator taken at the cell midpoint `m`.
pub fn brute_theta<T: Scalar>(q: impl Fn(T) -> T, x: &SignedPath<T>, g: &DenseGrid<T>, t: T) -> T {
    let (a, c) = (x.arrivals(), x.services());
    let ct = c.at(t);
    let two = T::lit(2.0);
    let mut total = T::zero();
    for w in g.points.windows(2) {
        if w[0] >= t {
            break;
        }
        let hi = w[1].min(t);
        let mid = (w[0] + hi) / two;
        if q(mid) > ct - c.at(mid) {
            total = total + (a.at(hi) - a.at(w[0]));
        }
    }
    total
}

/// Last grid point `s <= t` with `A(s) + b(s) <= C(t)`.
pub fn brute_sigma<T: Scalar>(b: impl Fn(T) -> T, x: &SignedPath<T>, g: &DenseGrid<T>, t: T) -> T {
    let (a, c) = (x.arrivals(), x.services());
    let ct = c.at(t);
    g.points
        .iter()
        .copied()
        .filter(|&s| s <= t && a.at(s) + b(s) <= ct)
        .fold(T::zero(), T::max)
}
