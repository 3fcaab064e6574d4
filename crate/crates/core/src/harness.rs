//! Synthetic experiments: convergence-rate studies on analytic Gaussian
//! curves and the independent-coupling counterexample data.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::bures::{bures_wasserstein_distance, GaussianMeasure, SymPsdMatrix};
use crate::error::{Error, Result};
use crate::spline1d::{InterpKind, TimeGrid};
use crate::transport_spline::{Observations, TransportSpline};

/// Number of points used to probe curve constants.
pub const CONSTANT_PROBES: usize = 10_000;
/// Probe grid for the sup-error; a grid twice as fine is used as a check.
pub const ERROR_PROBES: usize = 1000;
/// Prefactor of the cubic-kind error bound.
pub const CUBIC_BOUND_CONSTANT: f64 = 58.0;
/// Prefactor of the piecewise-geodesic error bound.
pub const LINEAR_BOUND_CONSTANT: f64 = 2.5;

/// Analytic curve families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    /// `N(0, σ_t²)`, `σ_t = 2 + sin(2πt)/2`.
    Sinusoid,
    /// `N(0, (1−t)² + t²)`.
    Counterexample,
    /// Two-dimensional, diagonal covariance with a moving mean.
    DiagonalPair,
}

impl CurveKind {
    pub fn name(self) -> &'static str {
        match self {
            CurveKind::Sinusoid => "sinusoid",
            CurveKind::Counterexample => "counterexample",
            CurveKind::DiagonalPair => "diagonal-pair",
        }
    }
}

/// Position, velocity and acceleration of one coordinate.
#[derive(Debug, Clone, Copy)]
struct Jet {
    v: f64,
    d1: f64,
    d2: f64,
}

/// Smooth curve of Gaussians `N(m_t, diag(σ_t)²)` with its Lagrangian
/// coupling `X_t = m_t + σ_t ⊙ Z`. Curve constants are the sup norms of
/// `Ẋ_t` and `Ẍ_t` in `L²` and the smallest covariance eigenvalue.
#[derive(Debug, Clone)]
pub struct SyntheticGaussianCurve {
    kind: CurveKind,
    lipschitz: f64,
    curvature: f64,
    lambda_min: f64,
}

/// Builds one of the analytic curves and probes its constants.
pub fn make_scalar_variance_curve(kind: CurveKind) -> SyntheticGaussianCurve {
    SyntheticGaussianCurve::new(kind)
}

impl SyntheticGaussianCurve {
    pub fn new(kind: CurveKind) -> Self {
        let mut c = Self {
            kind,
            lipschitz: 0.0,
            curvature: 0.0,
            lambda_min: f64::INFINITY,
        };
        for k in 0..=CONSTANT_PROBES {
            let t = k as f64 / CONSTANT_PROBES as f64;
            let (means, sds) = c.jets(t);
            let speed: f64 = means.iter().chain(&sds).map(|j| j.d1 * j.d1).sum();
            let accel: f64 = means.iter().chain(&sds).map(|j| j.d2 * j.d2).sum();
            c.lipschitz = c.lipschitz.max(speed.sqrt());
            c.curvature = c.curvature.max(accel.sqrt());
            for s in &sds {
                c.lambda_min = c.lambda_min.min(s.v * s.v);
            }
        }
        c
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            CurveKind::DiagonalPair => 2,
            _ => 1,
        }
    }

    fn jets(&self, t: f64) -> (Vec<Jet>, Vec<Jet>) {
        use std::f64::consts::PI;
        let zero = Jet { v: 0.0, d1: 0.0, d2: 0.0 };
        let w = 2.0 * PI;
        match self.kind {
            CurveKind::Sinusoid => (
                vec![zero],
                vec![Jet {
                    v: 2.0 + 0.5 * (w * t).sin(),
                    d1: 0.5 * w * (w * t).cos(),
                    d2: -0.5 * w * w * (w * t).sin(),
                }],
            ),
            CurveKind::Counterexample => {
                let s = ((1.0 - t).powi(2) + t * t).sqrt();
                (
                    vec![zero],
                    vec![Jet {
                        v: s,
                        d1: (2.0 * t - 1.0) / s,
                        d2: 1.0 / (s * s * s),
                    }],
                )
            }
            CurveKind::DiagonalPair => (
                vec![
                    Jet {
                        v: 0.5 * (PI * t).cos(),
                        d1: -0.5 * PI * (PI * t).sin(),
                        d2: -0.5 * PI * PI * (PI * t).cos(),
                    },
                    Jet { v: t * t, d1: 2.0 * t, d2: 2.0 },
                ],
                vec![
                    Jet {
                        v: 2.0 + 0.5 * (w * t).sin(),
                        d1: 0.5 * w * (w * t).cos(),
                        d2: -0.5 * w * w * (w * t).sin(),
                    },
                    Jet {
                        v: 1.5 + 0.25 * (w * t).cos(),
                        d1: -0.25 * w * (w * t).sin(),
                        d2: -0.25 * w * w * (w * t).cos(),
                    },
                ],
            ),
        }
    }

    pub fn mean(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.jets(t).0.iter().map(|j| j.v))
    }

    /// Coordinate standard deviations.
    pub fn sd(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.jets(t).1.iter().map(|j| j.v))
    }

    pub fn sd_dot(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.jets(t).1.iter().map(|j| j.d1))
    }

    pub fn sd_ddot(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.jets(t).1.iter().map(|j| j.d2))
    }

    pub fn measure(&self, t: f64) -> GaussianMeasure {
        let sd = self.sd(t);
        let cov = SymPsdMatrix::from_product(DMatrix::from_diagonal(&sd.component_mul(&sd)));
        GaussianMeasure::new(self.mean(t), cov).expect("analytic curve is finite")
    }

    /// Velocity matrix `V_t` with `Ẋ_t = V_t (X_t − m_t) + ṁ_t`.
    pub fn velocity_matrix(&self, t: f64) -> DMatrix<f64> {
        let (sd, d1) = (self.sd(t), self.sd_dot(t));
        DMatrix::from_diagonal(&d1.component_div(&sd))
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn curvature(&self) -> f64 {
        self.curvature
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    /// Largest admissible mesh size `√λ_min / (2L)` (exclusive).
    pub fn mesh_limit(&self) -> f64 {
        self.lambda_min.sqrt() / (2.0 * self.lipschitz)
    }
}

/// `W₂` between `N(m_a, σ_a²)` and `N(m_b, σ_b²)`.
pub fn w2_error_1d_gaussian(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// One mesh of a rate experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub n_intervals: usize,
    pub delta: f64,
    pub alpha: f64,
    pub sup_error: f64,
    /// Sup-error on the refined probe grid.
    pub refined_sup_error: f64,
    /// Largest error at the knots.
    pub knot_error: f64,
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub curve: CurveKind,
    pub kind: InterpKind,
    pub rows: Vec<RateRow>,
    /// Least-squares slope of `log sup_error` against `log δ`.
    pub slope: f64,
}

impl RateReport {
    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).fold(0.0, f64::max)
    }

    /// Largest relative change of the sup-error under probe refinement.
    pub fn max_refinement_change(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.refined_sup_error - r.sup_error).abs() / r.sup_error.max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

/// Knot grid on `[0,1]` with `n` intervals. With `alpha < 1` interval
/// lengths alternate between `1` and `alpha` (before normalization), so the
/// mesh ratio is exactly `alpha` once `n ≥ 2`.
pub fn perturbed_grid(n: usize, alpha: f64) -> Result<TimeGrid> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidGrid("mesh ratio must lie in (0, 1]"));
    }
    if alpha == 1.0 {
        return TimeGrid::uniform(n);
    }
    let lengths: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { alpha }).collect();
    TimeGrid::from_lengths(&lengths)
}

fn probe_times(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| k as f64 / (n - 1) as f64)
}

fn law_error(curve: &SyntheticGaussianCurve, spline: &TransportSpline, t: f64) -> Result<f64> {
    let law = spline.propagate_gaussian_law(t)?;
    let truth = curve.measure(t);
    if curve.dim() == 1 {
        let sd = law.cov().as_matrix()[(0, 0)].max(0.0).sqrt();
        Ok(w2_error_1d_gaussian((law.mean()[0], sd), (truth.mean()[0], curve.sd(t)[0])))
    } else {
        bures_wasserstein_distance(&law, &truth)
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fitted_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Fits transport splines to knot samples of `curve` on meshes with the
/// given interval counts and reports sup-`W₂` errors against the truth.
///
/// The bound column is `(58/α³)Rδ²` for the cubic kind and `2.5Rδ²` for the
/// piecewise-linear kind.
pub fn run_rate_experiment(
    curve: &SyntheticGaussianCurve,
    kind: InterpKind,
    intervals: &[usize],
    alpha_target: f64,
) -> Result<RateReport> {
    if intervals.len() < 2 {
        return Err(Error::TooFewObservations {
            needed: 2,
            found: intervals.len(),
        });
    }
    let grids = intervals
        .iter()
        .map(|&n| perturbed_grid(n, alpha_target))
        .collect::<Result<Vec<_>>>()?;
    let limit = curve.mesh_limit();
    for g in &grids {
        if !(g.mesh() < limit) {
            return Err(Error::MeshTooCoarse {
                delta: g.mesh(),
                limit,
            });
        }
    }
    if grids.windows(2).any(|w| !(w[1].mesh() < w[0].mesh())) {
        return Err(Error::InvalidGrid("mesh sizes must strictly decrease"));
    }
    let mut rows = Vec::with_capacity(grids.len());
    for (g, &n) in grids.iter().zip(intervals) {
        let measures: Vec<GaussianMeasure> = g.knots().iter().map(|&t| curve.measure(t)).collect();
        let spline = TransportSpline::fit(g, Observations::Gaussian(measures), kind)?;
        let mut sup = 0.0f64;
        for t in probe_times(ERROR_PROBES) {
            sup = sup.max(law_error(curve, &spline, t)?);
        }
        let mut refined = 0.0f64;
        for t in probe_times(2 * ERROR_PROBES) {
            refined = refined.max(law_error(curve, &spline, t)?);
        }
        let mut knot_error = 0.0f64;
        for &t in g.knots() {
            knot_error = knot_error.max(law_error(curve, &spline, t)?);
        }
        let (delta, alpha) = (g.mesh(), g.ratio());
        let bound = match kind {
            InterpKind::Cubic => CUBIC_BOUND_CONSTANT / alpha.powi(3),
            InterpKind::Linear => LINEAR_BOUND_CONSTANT,
        } * curve.curvature()
            * delta
            * delta;
        rows.push(RateRow {
            n_intervals: n,
            delta,
            alpha,
            sup_error: sup,
            refined_sup_error: refined,
            knot_error,
            bound,
            ratio: sup / bound,
        });
    }
    let lx: Vec<f64> = rows.iter().map(|r| r.delta.ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.sup_error.ln()).collect();
    Ok(RateReport {
        curve: curve.kind(),
        kind,
        slope: fitted_slope(&lx, &ly),
        rows,
    })
}

/// How counterexample trajectories are coupled across time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounterexampleCoupling {
    /// Straight lines `(1−t)X₀ + tX₁` with independent standard endpoints.
    Independent,
    /// Transport-spline trajectories through the knot data on `t_i = i/N`.
    Transport { n_intervals: usize },
}

/// Sample paths evaluated on a shared time list; `paths[s][k]` is sample
/// `s` at `times[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySet {
    pub times: Vec<f64>,
    pub paths: Vec<Vec<f64>>,
}

impl TrajectorySet {
    /// Empirical second moment about zero at time index `k`.
    pub fn second_moment(&self, k: usize) -> f64 {
        self.paths.iter().map(|p| p[k] * p[k]).sum::<f64>() / self.paths.len() as f64
    }

    /// Empirical correlation between time indices `a` and `b`.
    pub fn correlation(&self, a: usize, b: usize) -> f64 {
        let n = self.paths.len() as f64;
        let (ma, mb) = (
            self.paths.iter().map(|p| p[a]).sum::<f64>() / n,
            self.paths.iter().map(|p| p[b]).sum::<f64>() / n,
        );
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for p in &self.paths {
            let (x, y) = (p[a] - ma, p[b] - mb);
            sab += x * y;
            saa += x * x;
            sbb += y * y;
        }
        sab / (saa * sbb).sqrt()
    }
}

/// Draws `n_samples` trajectories for the `N(0, (1−t)² + t²)` data.
/// `times` must include the endpoints if endpoint statistics are wanted.
pub fn generate_counterexample_trajectories<R: Rng + ?Sized>(
    n_samples: usize,
    coupling: CounterexampleCoupling,
    times: &[f64],
    rng: &mut R,
) -> Result<TrajectorySet> {
    if n_samples == 0 {
        return Err(Error::TooFewObservations { needed: 1, found: 0 });
    }
    let paths = match coupling {
        CounterexampleCoupling::Independent => (0..n_samples)
            .map(|_| {
                let x0: f64 = rng.sample(StandardNormal);
                let x1: f64 = rng.sample(StandardNormal);
                times.iter().map(|&t| (1.0 - t) * x0 + t * x1).collect()
            })
            .collect(),
        CounterexampleCoupling::Transport { n_intervals } => {
            let curve = SyntheticGaussianCurve::new(CurveKind::Counterexample);
            let grid = TimeGrid::uniform(n_intervals)?;
            let measures = grid.knots().iter().map(|&t| curve.measure(t)).collect();
            let spline = TransportSpline::fit(&grid, Observations::Gaussian(measures), InterpKind::Cubic)?;
            let mut out = Vec::with_capacity(n_samples);
            for _ in 0..n_samples {
                let x0: f64 = rng.sample(StandardNormal);
                let path = spline.sample_trajectory(&DVector::from_element(1, x0), times)?;
                out.push(path.iter().map(|v| v[0]).collect());
            }
            out
        }
    };
    Ok(TrajectorySet {
        times: times.to_vec(),
        paths,
    })
}
