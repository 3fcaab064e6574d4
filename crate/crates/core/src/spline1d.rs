//! Vector-valued natural cubic splines and piecewise-linear interpolants over
//! a non-uniform knot grid.
//!
//! On the interval `[t_{i-1}, t_i]` the cubic is
//! `a_i s³ + b_i s² + c_i s + d_i` with `s = t − t_{i-1}`. The second
//! derivatives `m` at the knots solve the symmetric tridiagonal system
//! `T m = 6Δ` (diagonal `2(δ_i + δ_{i+1})`, off-diagonal `δ_{i+1}`), with
//! `m = 0` at both ends.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Slack allowed outside the grid before a query is rejected.
pub const DOMAIN_TOL: f64 = 1e-12;

/// Strictly increasing knot times `t_0 < … < t_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    knots: Vec<f64>,
}

impl TimeGrid {
    pub fn new(knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidGrid("need at least two knots"));
        }
        if knots.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite);
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("knots must be strictly increasing"));
        }
        Ok(Self { knots })
    }

    /// `n` equal intervals on `[0, 1]`.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGrid("need at least one interval"));
        }
        let mut knots: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        knots[n] = 1.0;
        Self::new(knots)
    }

    /// Grid on `[0, 1]` built from relative interval lengths.
    pub fn from_lengths(lengths: &[f64]) -> Result<Self> {
        if lengths.is_empty() || lengths.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidGrid("interval lengths must be positive"));
        }
        let total: f64 = lengths.iter().sum();
        let mut knots = Vec::with_capacity(lengths.len() + 1);
        let mut acc = 0.0;
        knots.push(0.0);
        for l in lengths {
            acc += l;
            knots.push(acc / total);
        }
        *knots.last_mut().unwrap() = 1.0;
        Self::new(knots)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of intervals `N`.
    pub fn n_intervals(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn start(&self) -> f64 {
        self.knots[0]
    }

    pub fn end(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    /// Interval lengths `δ_1, …, δ_N`.
    pub fn deltas(&self) -> Vec<f64> {
        self.knots.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Mesh size `δ = max δ_i`.
    pub fn mesh(&self) -> f64 {
        self.deltas().into_iter().fold(0.0, f64::max)
    }

    /// Mesh ratio `α = min δ_i / max δ_i`.
    pub fn ratio(&self) -> f64 {
        let d = self.deltas();
        let min = d.iter().copied().fold(f64::INFINITY, f64::min);
        min / self.mesh()
    }

    /// Index `i` of the interval `[t_i, t_{i+1}]` holding `t`. Knots belong to
    /// the interval on their right, except the last knot.
    pub fn locate(&self, t: f64) -> Result<usize> {
        let (lo, hi) = (self.start(), self.end());
        if !(t >= lo - DOMAIN_TOL && t <= hi + DOMAIN_TOL) {
            return Err(Error::OutOfDomain { t, lo, hi });
        }
        let n = self.n_intervals();
        // first knot strictly greater than t
        let upper = self.knots.partition_point(|&k| k <= t);
        Ok(upper.saturating_sub(1).min(n - 1))
    }

    /// Diagonal and off-diagonal of the tridiagonal matrix `T` (size `N − 1`).
    pub fn tridiagonal(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.deltas();
        let n = self.n_intervals();
        let diag = (1..n).map(|k| 2.0 * (d[k - 1] + d[k])).collect();
        let off = (1..n.saturating_sub(1)).map(|k| d[k]).collect();
        (diag, off)
    }
}

/// Requested derivative order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivOrder {
    First,
    Second,
}

#[derive(Debug, Clone, PartialEq)]
struct Segment {
    a: DVector<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
    d: DVector<f64>,
}

/// Natural cubic spline through vector-valued data.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    grid: TimeGrid,
    segments: Vec<Segment>,
    second: Vec<DVector<f64>>,
}

fn check_points(grid: &TimeGrid, points: &[DVector<f64>]) -> Result<usize> {
    let expected = grid.n_intervals() + 1;
    if points.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            found: points.len(),
        });
    }
    let dim = points[0].len();
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
    }
    Ok(dim)
}

/// Thomas algorithm for a symmetric tridiagonal system, one right-hand side
/// column per data coordinate.
fn solve_symmetric_tridiagonal(diag: &[f64], off: &[f64], rhs: &mut [DVector<f64>]) {
    let n = diag.len();
    if n == 0 {
        return;
    }
    let mut c_prime = vec![0.0; n];
    let mut denom = diag[0];
    if n > 1 {
        c_prime[0] = off[0] / denom;
    }
    rhs[0] /= denom;
    for i in 1..n {
        denom = diag[i] - off[i - 1] * c_prime[i - 1];
        if i < n - 1 {
            c_prime[i] = off[i] / denom;
        }
        let prev = rhs[i - 1].clone();
        rhs[i] -= prev * off[i - 1];
        rhs[i] /= denom;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1].clone();
        rhs[i] -= next * c_prime[i];
    }
}

/// Fits the natural cubic spline through `points` (one per knot).
pub fn fit_natural_cubic(grid: &TimeGrid, points: &[DVector<f64>]) -> Result<CubicSpline> {
    let dim = check_points(grid, points)?;
    let n = grid.n_intervals();
    let d = grid.deltas();

    // 6Δ_k at interior knots k = 1..N-1
    let mut rhs: Vec<DVector<f64>> = (1..n)
        .map(|k| ((&points[k + 1] - &points[k]) / d[k] - (&points[k] - &points[k - 1]) / d[k - 1]) * 6.0)
        .collect();
    let (diag, off) = grid.tridiagonal();
    solve_symmetric_tridiagonal(&diag, &off, &mut rhs);

    let mut second = Vec::with_capacity(n + 1);
    second.push(DVector::zeros(dim));
    second.extend(rhs);
    second.push(DVector::zeros(dim));

    let segments = (0..n)
        .map(|j| {
            let h = d[j];
            let (m0, m1) = (&second[j], &second[j + 1]);
            Segment {
                a: (m1 - m0) / (6.0 * h),
                b: m0 / 2.0,
                c: (&points[j + 1] - &points[j]) / h - (m1 + m0 * 2.0) * (h / 6.0),
                d: points[j].clone(),
            }
        })
        .collect();
    Ok(CubicSpline {
        grid: grid.clone(),
        segments,
        second,
    })
}

impl CubicSpline {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.segments[0].d.len()
    }

    /// Second derivatives at the knots (zero at both ends).
    pub fn knot_second_derivatives(&self) -> &[DVector<f64>] {
        &self.second
    }

    pub fn eval(&self, t: f64) -> Result<DVector<f64>> {
        let i = self.grid.locate(t)?;
        let s = t - self.grid.knots[i];
        let seg = &self.segments[i];
        Ok(((&seg.a * s + &seg.b) * s + &seg.c) * s + &seg.d)
    }

    pub fn eval_deriv(&self, t: f64, order: DerivOrder) -> Result<DVector<f64>> {
        let i = self.grid.locate(t)?;
        let s = t - self.grid.knots[i];
        let seg = &self.segments[i];
        Ok(match order {
            DerivOrder::First => (&seg.a * (3.0 * s) + &seg.b * 2.0) * s + &seg.c,
            DerivOrder::Second => &seg.a * (6.0 * s) + &seg.b * 2.0,
        })
    }

    /// `∫ ‖ÿ‖² dt`, exact since `ÿ` is piecewise linear.
    pub fn bending_energy(&self) -> f64 {
        self.grid
            .deltas()
            .iter()
            .enumerate()
            .map(|(j, h)| {
                let (p, q) = (&self.second[j], &self.second[j + 1]);
                h / 3.0 * (p.norm_squared() + p.dot(q) + q.norm_squared())
            })
            .sum()
    }
}

/// Piecewise-linear interpolant through vector-valued data.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    grid: TimeGrid,
    points: Vec<DVector<f64>>,
}

pub fn fit_piecewise_linear(grid: &TimeGrid, points: &[DVector<f64>]) -> Result<PiecewiseLinear> {
    check_points(grid, points)?;
    Ok(PiecewiseLinear {
        grid: grid.clone(),
        points: points.to_vec(),
    })
}

impl PiecewiseLinear {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn eval(&self, t: f64) -> Result<DVector<f64>> {
        let i = self.grid.locate(t)?;
        let (t0, t1) = (self.grid.knots[i], self.grid.knots[i + 1]);
        let h = t1 - t0;
        Ok(&self.points[i] * ((t1 - t) / h) + &self.points[i + 1] * ((t - t0) / h))
    }

    /// Right derivative on interior knots; zero second derivative everywhere.
    pub fn eval_deriv(&self, t: f64, order: DerivOrder) -> Result<DVector<f64>> {
        let i = self.grid.locate(t)?;
        Ok(match order {
            DerivOrder::First => (&self.points[i + 1] - &self.points[i]) / (self.grid.knots[i + 1] - self.grid.knots[i]),
            DerivOrder::Second => DVector::zeros(self.points[0].len()),
        })
    }
}

/// Which Euclidean interpolant joins the coupled knot points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpKind {
    Cubic,
    Linear,
}

/// A fitted interpolant of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Interpolant {
    Cubic(CubicSpline),
    Linear(PiecewiseLinear),
}

impl Interpolant {
    pub fn fit(kind: InterpKind, grid: &TimeGrid, points: &[DVector<f64>]) -> Result<Self> {
        Ok(match kind {
            InterpKind::Cubic => Interpolant::Cubic(fit_natural_cubic(grid, points)?),
            InterpKind::Linear => Interpolant::Linear(fit_piecewise_linear(grid, points)?),
        })
    }

    pub fn kind(&self) -> InterpKind {
        match self {
            Interpolant::Cubic(_) => InterpKind::Cubic,
            Interpolant::Linear(_) => InterpKind::Linear,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        match self {
            Interpolant::Cubic(s) => s.grid(),
            Interpolant::Linear(s) => s.grid(),
        }
    }

    pub fn eval(&self, t: f64) -> Result<DVector<f64>> {
        match self {
            Interpolant::Cubic(s) => s.eval(t),
            Interpolant::Linear(s) => s.eval(t),
        }
    }

    pub fn eval_deriv(&self, t: f64, order: DerivOrder) -> Result<DVector<f64>> {
        match self {
            Interpolant::Cubic(s) => s.eval_deriv(t, order),
            Interpolant::Linear(s) => s.eval_deriv(t, order),
        }
    }
}

/// The linear map `(x_0, …, x_N) ↦ y(t)` of an interpolant, stored as the
/// interpolant of the unit coordinate vectors: `eval(t)` returns the weights
/// `w_i(t)` with `y(t) = Σ w_i(t) x_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineWeights(Interpolant);

impl SplineWeights {
    pub fn new(kind: InterpKind, grid: &TimeGrid) -> Result<Self> {
        let n = grid.n_intervals() + 1;
        let units: Vec<DVector<f64>> = (0..n)
            .map(|i| {
                let mut e = DVector::zeros(n);
                e[i] = 1.0;
                e
            })
            .collect();
        Ok(Self(Interpolant::fit(kind, grid, &units)?))
    }

    pub fn weights(&self, t: f64) -> Result<DVector<f64>> {
        self.0.eval(t)
    }

    pub fn kind(&self) -> InterpKind {
        self.0.kind()
    }

    pub fn grid(&self) -> &TimeGrid {
        self.0.grid()
    }
}

/// Checks the entrywise bound
/// `|T⁻¹_{ij}| ≤ 1 / (4α²(1+α)^{|i−j|−1} δ)` by dense inversion.
pub fn tridiag_inverse_bound_check(grid: &TimeGrid) -> Result<bool> {
    let n = grid.n_intervals();
    if n < 2 {
        return Err(Error::InvalidGrid("bound needs at least one interior knot"));
    }
    let (diag, off) = grid.tridiagonal();
    let size = n - 1;
    let mut t = DMatrix::zeros(size, size);
    for i in 0..size {
        t[(i, i)] = diag[i];
        if i + 1 < size {
            t[(i, i + 1)] = off[i];
            t[(i + 1, i)] = off[i];
        }
    }
    let inv = t.try_inverse().ok_or(Error::SingularMatrix)?;
    let (alpha, delta) = (grid.ratio(), grid.mesh());
    for i in 0..size {
        for j in 0..size {
            let gap = i.abs_diff(j) as i32;
            let bound = 1.0 / (4.0 * alpha * alpha * (1.0 + alpha).powi(gap - 1) * delta);
            if inv[(i, j)].abs() > bound * (1.0 + 1e-12) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
