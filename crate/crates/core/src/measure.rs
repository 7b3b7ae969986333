//! Continuous piecewise-linear functions and the cumulative functions of
//! atomless measures built on them.
//!
//! Every function here starts at `t = 0` and is linear between consecutive
//! knots. A [`Cumulative`] is additionally nondecreasing with `F(0) = 0`, so
//! `F(s, t] = F(t) - F(s)` is the mass of an atomless measure. Continuity is
//! structural: there is no way to encode a jump.

use crate::error::{Error, Result};
use crate::scalar::{clamp_between, Scalar};

fn show<T: Scalar>(x: T) -> String {
    format!("{x}")
}

/// Point where the line through `(k0, v0)` and `(k1, v1)` reaches `level`.
///
/// Callers guarantee `level` lies between `v0` and `v1` and `v0 != v1`. The
/// result is clamped to `[k0, k1]` so rounding never pushes it into a
/// neighbouring segment.
pub(crate) fn crossing<T: Scalar>(k0: T, k1: T, v0: T, v1: T, level: T) -> T {
    // Written as d0 / (d0 + d1) so that rounding is monotone in v0 and v1.
    let (d0, d1) = (level - v0, v1 - level);
    let r = if d0 == T::zero() {
        T::zero()
    } else {
        clamp_between(T::one() / (T::one() + d1 / d0), T::zero(), T::one())
    };
    clamp_between(k0 + (k1 - k0) * r, k0, k1)
}

fn validate_knots<T: Scalar>(knots: &[T]) -> Result<()> {
    if knots.len() < 2 {
        return Err(Error::TooFewBreakpoints(knots.len()));
    }
    if let Some(index) = knots.iter().position(|k| !k.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    if knots[0] != T::zero() {
        return Err(Error::NonzeroStart(show(knots[0])));
    }
    if let Some(index) = (1..knots.len()).find(|&i| knots[i] <= knots[i - 1]) {
        return Err(Error::NonIncreasingKnots { index });
    }
    Ok(())
}

/// A continuous piecewise-linear function on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear<T> {
    knots: Vec<T>,
    values: Vec<T>,
}

impl<T: Scalar> PiecewiseLinear<T> {
    pub fn new(knots: Vec<T>, values: Vec<T>) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::LengthMismatch {
                knots: knots.len(),
                values: values.len(),
            });
        }
        validate_knots(&knots)?;
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { knots, values })
    }

    /// Samples `f` at every grid point.
    pub fn sample(grid: &Grid<T>, mut f: impl FnMut(T) -> T) -> Self {
        let values = grid.points().iter().map(|&t| f(t)).collect();
        Self {
            knots: grid.points().to_vec(),
            values,
        }
    }

    pub(crate) fn from_grid_values(grid: &Grid<T>, values: Vec<T>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        Self {
            knots: grid.points().to_vec(),
            values,
        }
    }

    pub fn constant(grid: &Grid<T>, value: T) -> Self {
        Self::sample(grid, |_| value)
    }

    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn horizon(&self) -> T {
        *self.knots.last().expect("at least two knots")
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn grid(&self) -> Grid<T> {
        Grid {
            points: self.knots.clone(),
        }
    }

    /// Index `i` of the segment `[knots[i], knots[i + 1]]` holding `t`.
    pub(crate) fn segment(&self, t: T) -> usize {
        let i = self.knots.partition_point(|&k| k <= t);
        i.saturating_sub(1).min(self.knots.len() - 2)
    }

    pub fn in_domain(&self, t: T) -> bool {
        t >= T::zero() && t <= self.horizon()
    }

    /// Linear interpolation, with `t` clamped to the domain.
    pub fn at(&self, t: T) -> T {
        let t = clamp_between(t, T::zero(), self.horizon());
        let i = self.segment(t);
        let (k0, k1) = (self.knots[i], self.knots[i + 1]);
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        if t >= k1 {
            v1
        } else if t <= k0 {
            v0
        } else {
            clamp_between(v0 + (v1 - v0) * ((t - k0) / (k1 - k0)), v0, v1)
        }
    }

    pub fn eval(&self, t: T) -> Result<T> {
        if !self.in_domain(t) {
            return Err(Error::OutOfDomain {
                t: show(t),
                horizon: show(self.horizon()),
            });
        }
        Ok(self.at(t))
    }

    pub fn resample(&self, grid: &Grid<T>) -> Self {
        Self::sample(grid, |t| self.at(t))
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] <= w[1])
    }

    /// Running maximum of the values, provided no value falls more than
    /// `slack` below an earlier one.
    pub(crate) fn monotone_envelope(&self, slack: T) -> Option<Self> {
        let mut peak = T::neg_infinity();
        let mut values = Vec::with_capacity(self.values.len());
        for &v in &self.values {
            if v < peak - slack {
                return None;
            }
            peak = peak.max(v);
            values.push(peak);
        }
        Some(Self {
            knots: self.knots.clone(),
            values,
        })
    }

    pub fn min_value(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            knots: self.knots.clone(),
            values: self.values.iter().map(|&v| v * factor).collect(),
        }
    }

    /// Pointwise combination on the union of both knot sets.
    pub fn combine(&self, other: &Self, op: impl Fn(T, T) -> T) -> Result<Self> {
        if self.horizon() != other.horizon() {
            return Err(Error::HorizonMismatch(
                show(self.horizon()),
                show(other.horizon()),
            ));
        }
        let grid = Grid::union(&[self.knots(), other.knots()]);
        Ok(Self::sample(&grid, |t| op(self.at(t), other.at(t))))
    }

    /// Lebesgue integral over `[from, to]`; exact for piecewise-linear input.
    pub fn integral(&self, from: T, to: T) -> T {
        let two = T::lit(2.0);
        let mut points = vec![from];
        points.extend(self.knots.iter().copied().filter(|&k| k > from && k < to));
        points.push(to);
        points
            .windows(2)
            .map(|w| (w[1] - w[0]) * (self.at(w[0]) + self.at(w[1])) / two)
            .fold(T::zero(), |a, b| a + b)
    }

    /// Rightmost `s` in `[0, upto]` with `self(s) <= level`, by a backward
    /// segment scan. `None` when the function exceeds `level` on all of
    /// `[0, upto]`.
    pub fn last_at_or_below(&self, level: T, upto: T) -> Option<T> {
        let upto = clamp_between(upto, T::zero(), self.horizon());
        if self.at(upto) <= level {
            return Some(upto);
        }
        let i = self.segment(upto);
        (0..=i).rev().find_map(|j| {
            let v0 = self.values[j];
            (v0 <= level).then(|| self.segment_crossing(j, level).min(upto))
        })
    }

    /// Same contract as [`last_at_or_below`](Self::last_at_or_below) for a
    /// nondecreasing function, by binary search.
    pub(crate) fn last_at_or_below_monotone(&self, level: T, upto: T) -> Option<T> {
        let upto = clamp_between(upto, T::zero(), self.horizon());
        if self.at(upto) <= level {
            return Some(upto);
        }
        let i = self.segment(upto);
        let count = self.values[..=i].partition_point(|&v| v <= level);
        let j = count.checked_sub(1)?;
        Some(self.segment_crossing(j, level).min(upto))
    }

    fn segment_crossing(&self, j: usize, level: T) -> T {
        let (v0, v1) = (self.values[j], self.values[j + 1]);
        if v1 <= level {
            self.knots[j + 1]
        } else {
            crossing(self.knots[j], self.knots[j + 1], v0, v1, level)
        }
    }
}

/// Cumulative function `F(t) = F(0, t]` of an atomless nonnegative measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Cumulative<T>(PiecewiseLinear<T>);

impl<T: Scalar> Cumulative<T> {
    /// Validates breakpoints: equal lengths, at least two entries, strictly
    /// increasing knots from 0, `values[0] = 0` and nondecreasing values.
    pub fn from_breakpoints(knots: Vec<T>, values: Vec<T>) -> Result<Self> {
        Self::from_function(PiecewiseLinear::new(knots, values)?)
    }

    pub fn from_function(f: PiecewiseLinear<T>) -> Result<Self> {
        if f.values[0] != T::zero() {
            return Err(Error::NonzeroOrigin(show(f.values[0])));
        }
        if let Some(index) = (1..f.values.len()).find(|&i| f.values[i] < f.values[i - 1]) {
            return Err(Error::DecreasingValues { index });
        }
        Ok(Self(f))
    }

    pub fn zero(horizon: T) -> Result<Self> {
        Self::from_breakpoints(vec![T::zero(), horizon], vec![T::zero(); 2])
    }

    /// `F(t) = rate * t` on `[0, horizon]`.
    pub fn linear(rate: T, horizon: T) -> Result<Self> {
        Self::from_breakpoints(vec![T::zero(), horizon], vec![T::zero(), rate * horizon])
    }

    pub fn function(&self) -> &PiecewiseLinear<T> {
        &self.0
    }

    pub fn into_function(self) -> PiecewiseLinear<T> {
        self.0
    }

    pub fn knots(&self) -> &[T] {
        self.0.knots()
    }

    pub fn values(&self) -> &[T] {
        self.0.values()
    }

    pub fn horizon(&self) -> T {
        self.0.horizon()
    }

    /// Total mass `F(horizon)`.
    pub fn total(&self) -> T {
        *self.0.values.last().expect("at least two knots")
    }

    pub fn at(&self, t: T) -> T {
        self.0.at(t)
    }

    pub fn eval(&self, t: T) -> Result<T> {
        self.0.eval(t)
    }

    /// `F(s, t] = F(t) - F(s)`.
    pub fn increment(&self, s: T, t: T) -> Result<T> {
        if s > t {
            return Err(Error::ReversedInterval {
                s: show(s),
                t: show(t),
            });
        }
        Ok(self.eval(t)? - self.eval(s)?)
    }

    pub fn resample(&self, grid: &Grid<T>) -> Result<Self> {
        if grid.horizon() != self.horizon() {
            return Err(Error::HorizonMismatch(
                show(grid.horizon()),
                show(self.horizon()),
            ));
        }
        Ok(Self(self.0.resample(grid)))
    }

    pub fn scaled(&self, factor: T) -> Result<Self> {
        if factor < T::zero() {
            return Err(Error::Precondition(format!(
                "cannot scale a measure by a negative factor {factor}"
            )));
        }
        Ok(Self(self.0.scaled(factor)))
    }

    /// The measure restricted to `[t0, horizon]` and shifted back to start
    /// at 0: `G(t) = F(t0, t0 + t]`.
    pub fn suffix(&self, t0: T) -> Result<Self> {
        if !(t0 >= T::zero() && t0 < self.horizon()) {
            return Err(Error::OutOfDomain {
                t: show(t0),
                horizon: show(self.horizon()),
            });
        }
        let base = self.at(t0);
        let mut knots = vec![T::zero()];
        let mut values = vec![T::zero()];
        for (&k, &v) in self.knots().iter().zip(self.values()) {
            if k <= t0 {
                continue;
            }
            let shifted = k - t0;
            if shifted > *knots.last().unwrap() {
                knots.push(shifted);
                values.push((v - base).max(*values.last().unwrap()));
            }
        }
        Self::from_breakpoints(knots, values)
    }
}

/// The pair `(A, C)` representing the signed measure `X = A - C`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedPath<T> {
    arrivals: Cumulative<T>,
    services: Cumulative<T>,
}

impl<T: Scalar> SignedPath<T> {
    pub fn new(arrivals: Cumulative<T>, services: Cumulative<T>) -> Result<Self> {
        if arrivals.horizon() != services.horizon() {
            return Err(Error::HorizonMismatch(
                show(arrivals.horizon()),
                show(services.horizon()),
            ));
        }
        Ok(Self { arrivals, services })
    }

    pub fn arrivals(&self) -> &Cumulative<T> {
        &self.arrivals
    }

    pub fn services(&self) -> &Cumulative<T> {
        &self.services
    }

    pub fn horizon(&self) -> T {
        self.arrivals.horizon()
    }

    /// `X(t) = A(t) - C(t)`, clamped to the domain.
    pub fn net(&self, t: T) -> T {
        self.arrivals.at(t) - self.services.at(t)
    }

    /// `X(s, t] = X(t) - X(s)`.
    pub fn net_increment(&self, s: T, t: T) -> Result<T> {
        Ok(self.arrivals.increment(s, t)? - self.services.increment(s, t)?)
    }

    /// Union of the knots of `A` and `C`.
    pub fn grid(&self) -> Grid<T> {
        Grid::union(&[self.arrivals.knots(), self.services.knots()])
    }

    /// `1 + A(T) + C(T)`, the scale used for absolute tolerances.
    pub fn scale(&self) -> T {
        T::one() + self.arrivals.total() + self.services.total()
    }

    pub fn scaled(&self, factor: T) -> Result<Self> {
        Self::new(self.arrivals.scaled(factor)?, self.services.scaled(factor)?)
    }

    /// The path seen from time `t0` onwards, re-based at 0.
    pub fn suffix(&self, t0: T) -> Result<Self> {
        Self::new(self.arrivals.suffix(t0)?, self.services.suffix(t0)?)
    }
}

/// Strictly increasing evaluation points from 0 to the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    points: Vec<T>,
}

impl<T: Scalar> Grid<T> {
    pub fn from_points(points: Vec<T>) -> Result<Self> {
        validate_knots(&points)?;
        Ok(Self { points })
    }

    /// Sorted, deduplicated union of several knot sets. Every input must
    /// start at 0 and end at the same horizon; the caller checks horizons.
    pub fn union(sets: &[&[T]]) -> Self {
        let mut points: Vec<T> = sets.iter().flat_map(|s| s.iter().copied()).collect();
        points.sort_by(|a, b| a.partial_cmp(b).expect("finite knots"));
        points.dedup();
        Self { points }
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn horizon(&self) -> T {
        *self.points.last().expect("grid is never empty")
    }

    pub fn contains(&self, t: T) -> bool {
        self.index_of(t).is_some()
    }

    pub fn index_of(&self, t: T) -> Option<usize> {
        self.points
            .binary_search_by(|p| p.partial_cmp(&t).expect("finite"))
            .ok()
    }

    pub fn merged(&self, extra: &[T]) -> Self {
        Self::union(&[&self.points, extra])
    }

    /// Splits every cell into `factor` equal cells.
    pub fn oversample(&self, factor: usize) -> Self {
        if factor <= 1 {
            return self.clone();
        }
        let n = T::from_usize_lossy(factor);
        let mut points = Vec::with_capacity((self.points.len() - 1) * factor + 1);
        for w in self.points.windows(2) {
            let step = (w[1] - w[0]) / n;
            points.push(w[0]);
            for j in 1..factor {
                let p = w[0] + step * T::from_usize_lossy(j);
                if p > *points.last().unwrap() && p < w[1] {
                    points.push(p);
                }
            }
        }
        points.push(self.horizon());
        Self { points }
    }
}

/// Sorted union of the knots of every input, which must share one horizon.
pub fn refine<T: Scalar>(fs: &[&Cumulative<T>]) -> Result<Grid<T>> {
    let first = fs
        .first()
        .ok_or_else(|| Error::Precondition("refine needs at least one function".into()))?;
    if let Some(f) = fs.iter().find(|f| f.horizon() != first.horizon()) {
        return Err(Error::HorizonMismatch(
            show(first.horizon()),
            show(f.horizon()),
        ));
    }
    let sets: Vec<&[T]> = fs.iter().map(|f| f.knots()).collect();
    Ok(Grid::union(&sets))
}

/// `F`-measure of `{s in [0, t] : g(s) > level}`.
///
/// Each segment of `g` contributes the part strictly above `level`, with
/// crossings located by linear interpolation; adjacent pieces are merged
/// before the increments of `F` are summed.
pub fn superlevel_measure<T: Scalar>(
    f: &Cumulative<T>,
    g: &PiecewiseLinear<T>,
    level: T,
    t: T,
) -> Result<T> {
    for h in [f.horizon(), g.horizon()] {
        if !(t >= T::zero() && t <= h) {
            return Err(Error::OutOfDomain {
                t: show(t),
                horizon: show(h),
            });
        }
    }
    let mut pieces: Vec<(T, T)> = Vec::new();
    let mut push = |a: T, b: T| {
        if b <= a {
            return;
        }
        match pieces.last_mut() {
            Some(last) if last.1 == a => last.1 = b,
            _ => pieces.push((a, b)),
        }
    };
    let last = g.segment(t);
    for j in 0..=last {
        let (k0, k1) = (g.knots[j], g.knots[j + 1]);
        let (v0, v1) = (g.values[j], g.values[j + 1]);
        let end = k1.min(t);
        match (v0 > level, v1 > level) {
            (true, true) => push(k0, end),
            (false, false) => {}
            (false, true) => push(crossing(k0, k1, v0, v1, level).min(end), end),
            (true, false) => push(k0, crossing(k0, k1, v0, v1, level).min(end)),
        }
    }
    Ok(pieces
        .iter()
        .map(|&(a, b)| f.at(b) - f.at(a))
        .fold(T::zero(), |acc, m| acc + m))
}

/// `∫_{from}^{to} q dF`, exact when both are piecewise linear.
pub fn stieltjes<T: Scalar>(q: &PiecewiseLinear<T>, f: &Cumulative<T>, from: T, to: T) -> T {
    let two = T::lit(2.0);
    let inner = Grid::union(&[q.knots(), f.knots()]);
    let mut points = vec![from];
    points.extend(inner.points().iter().copied().filter(|&k| k > from && k < to));
    points.push(to);
    points
        .windows(2)
        .map(|w| (q.at(w[0]) + q.at(w[1])) / two * (f.at(w[1]) - f.at(w[0])))
        .fold(T::zero(), |a, b| a + b)
}
