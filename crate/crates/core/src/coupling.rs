//! Couplings between consecutive observations.
//!
//! Three representations are supported: affine Monge maps between Gaussians,
//! monotone rearrangements `F_dst⁻¹ ∘ F_src` between one-dimensional measures,
//! and optimal matchings between equal-size uniform point clouds.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DVector;

use crate::bures::{gaussian_monge_map, GaussianMeasure, LinearMap};
use crate::error::{Error, Result};
use crate::normal;

/// Number of probability levels on the default quantile grid.
pub const DEFAULT_LEVELS: usize = 1024;

/// Chebyshev-like probability levels `(1 − cos(π(k − ½)/K)) / 2`, clustered
/// near 0 and 1.
pub fn chebyshev_levels(k: usize) -> Vec<f64> {
    (1..=k)
        .map(|i| 0.5 * (1.0 - (PI * (i as f64 - 0.5) / k as f64).cos()))
        .collect()
}

/// The shared default grid of [`DEFAULT_LEVELS`] levels.
pub fn default_levels() -> &'static [f64] {
    static LEVELS: OnceLock<Vec<f64>> = OnceLock::new();
    LEVELS.get_or_init(|| chebyshev_levels(DEFAULT_LEVELS))
}

/// One-dimensional Gaussian `N(mean, sd²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian1D {
    pub mean: f64,
    pub sd: f64,
}

impl Gaussian1D {
    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        if !mean.is_finite() || !sd.is_finite() {
            return Err(Error::NonFinite);
        }
        if sd <= 0.0 {
            return Err(Error::NonPositiveScale(sd));
        }
        Ok(Self { mean, sd })
    }

    pub fn quantile(&self, u: f64) -> f64 {
        self.mean + self.sd * normal::quantile(u)
    }

    pub fn cdf(&self, z: f64) -> f64 {
        normal::cdf((z - self.mean) / self.sd)
    }
}

/// Analytic quantile function attached to a [`Measure1D`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedForm {
    Gaussian(Gaussian1D),
    Uniform { lo: f64, hi: f64 },
}

impl ClosedForm {
    fn quantile(&self, u: f64) -> f64 {
        match *self {
            ClosedForm::Gaussian(g) => g.quantile(u),
            ClosedForm::Uniform { lo, hi } => lo + (hi - lo) * u,
        }
    }

    fn cdf(&self, z: f64) -> f64 {
        match *self {
            ClosedForm::Gaussian(g) => g.cdf(z),
            ClosedForm::Uniform { lo, hi } => ((z - lo) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    /// Location and scale, for families closed under affine maps.
    fn location_scale(&self) -> (f64, f64) {
        match *self {
            ClosedForm::Gaussian(g) => (g.mean, g.sd),
            ClosedForm::Uniform { lo, hi } => (lo, hi - lo),
        }
    }

    fn same_family(&self, other: &ClosedForm) -> bool {
        matches!(
            (self, other),
            (ClosedForm::Gaussian(_), ClosedForm::Gaussian(_)) | (ClosedForm::Uniform { .. }, ClosedForm::Uniform { .. })
        )
    }
}

/// A 1D measure given by its quantile function sampled on a level grid.
/// When a closed form is attached it takes precedence over the samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure1D {
    levels: Vec<f64>,
    values: Vec<f64>,
    closed_form: Option<ClosedForm>,
}

impl Measure1D {
    pub fn from_quantiles(levels: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if levels.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: levels.len(),
                found: values.len(),
            });
        }
        if levels.len() < 2 {
            return Err(Error::InvalidQuantiles("need at least two levels"));
        }
        if levels.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if levels.iter().any(|&u| u <= 0.0 || u >= 1.0) {
            return Err(Error::InvalidQuantiles("levels must lie in (0, 1)"));
        }
        if levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidQuantiles("levels must be strictly increasing"));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::NotIncreasing);
        }
        Ok(Self {
            levels,
            values,
            closed_form: None,
        })
    }

    pub fn from_closed_form(cf: ClosedForm) -> Result<Self> {
        if let ClosedForm::Uniform { lo, hi } = cf {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::NonFinite);
            }
            if hi <= lo {
                return Err(Error::NonPositiveScale(hi - lo));
            }
        }
        let levels = default_levels().to_vec();
        let values = levels.iter().map(|&u| cf.quantile(u)).collect();
        Ok(Self {
            levels,
            values,
            closed_form: Some(cf),
        })
    }

    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        Self::from_closed_form(ClosedForm::Gaussian(Gaussian1D::new(mean, sd)?))
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::from_closed_form(ClosedForm::Uniform { lo, hi })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn closed_form(&self) -> Option<&ClosedForm> {
        self.closed_form.as_ref()
    }

    pub fn as_gaussian(&self) -> Option<Gaussian1D> {
        match self.closed_form {
            Some(ClosedForm::Gaussian(g)) => Some(g),
            _ => None,
        }
    }

    /// Quantile `F†(u)`. Sampled quantiles are interpolated linearly and held
    /// constant beyond the outermost levels.
    pub fn quantile(&self, u: f64) -> f64 {
        if let Some(cf) = &self.closed_form {
            return cf.quantile(u);
        }
        let (l, v) = (&self.levels, &self.values);
        let j = l.partition_point(|&x| x <= u);
        if j == 0 {
            return v[0];
        }
        if j == l.len() {
            return v[v.len() - 1];
        }
        let w = (u - l[j - 1]) / (l[j] - l[j - 1]);
        v[j - 1] + w * (v[j] - v[j - 1])
    }

    /// CDF `F(z)`, by inverting the piecewise-linear quantile samples.
    pub fn cdf(&self, z: f64) -> f64 {
        if let Some(cf) = &self.closed_form {
            return cf.cdf(z);
        }
        let (l, v) = (&self.levels, &self.values);
        let j = v.partition_point(|&x| x <= z);
        if j == 0 {
            return l[0];
        }
        if j == v.len() {
            return l[l.len() - 1];
        }
        let w = (z - v[j - 1]) / (v[j] - v[j - 1]);
        l[j - 1] + w * (l[j] - l[j - 1])
    }

    /// True when the sampled quantiles have no ties (absolute continuity).
    pub fn is_strictly_increasing(&self) -> bool {
        if self.closed_form.is_some() {
            return true;
        }
        self.values
            .windows(2)
            .all(|w| w[1] - w[0] > 1e-14 * w[0].abs().max(w[1].abs()).max(1.0))
    }

    /// Mean `∫ F†(u) du`.
    pub fn mean(&self) -> f64 {
        match self.closed_form {
            Some(ClosedForm::Gaussian(g)) => g.mean,
            Some(ClosedForm::Uniform { lo, hi }) => 0.5 * (lo + hi),
            None => quantile_moments(&self.levels, &self.values).0,
        }
    }

    /// Standard deviation from `∫ F†(u)² du − mean²`.
    pub fn std_dev(&self) -> f64 {
        match self.closed_form {
            Some(ClosedForm::Gaussian(g)) => g.sd,
            Some(ClosedForm::Uniform { lo, hi }) => (hi - lo) / 12f64.sqrt(),
            None => {
                let (m, s2) = quantile_moments(&self.levels, &self.values);
                (s2 - m * m).max(0.0).sqrt()
            }
        }
    }
}

/// First and second moments of the piecewise-linear quantile function with
/// constant tails, integrated exactly.
pub(crate) fn quantile_moments(levels: &[f64], values: &[f64]) -> (f64, f64) {
    let k = levels.len();
    let mut m1 = levels[0] * values[0] + (1.0 - levels[k - 1]) * values[k - 1];
    let mut m2 = levels[0] * values[0] * values[0] + (1.0 - levels[k - 1]) * values[k - 1] * values[k - 1];
    for j in 1..k {
        let h = levels[j] - levels[j - 1];
        let (a, b) = (values[j - 1], values[j]);
        m1 += h * 0.5 * (a + b);
        m2 += h * (a * a + a * b + b * b) / 3.0;
    }
    (m1, m2)
}

/// Nondecreasing 1D transport map.
#[derive(Debug, Clone, PartialEq)]
pub enum MonotoneMap1D {
    /// `z ↦ scale·z + shift`, used between members of one location-scale family.
    Affine { scale: f64, shift: f64 },
    /// `z ↦ F_dst⁻¹(F_src(z))`.
    Composite { src: Measure1D, dst: Measure1D },
}

impl MonotoneMap1D {
    pub fn apply(&self, z: f64) -> f64 {
        match self {
            MonotoneMap1D::Affine { scale, shift } => scale * z + shift,
            MonotoneMap1D::Composite { src, dst } => dst.quantile(src.cdf(z)),
        }
    }
}

/// Monge map `F_dst⁻¹ ∘ F_src` between 1D measures.
pub fn quantile_monge_map_1d(src: &Measure1D, dst: &Measure1D) -> Result<MonotoneMap1D> {
    if !src.is_strictly_increasing() {
        return Err(Error::NotIncreasing);
    }
    if let (Some(a), Some(b)) = (src.closed_form(), dst.closed_form()) {
        if a.same_family(b) {
            let (m1, s1) = a.location_scale();
            let (m2, s2) = b.location_scale();
            let scale = s2 / s1;
            return Ok(MonotoneMap1D::Affine {
                scale,
                shift: m2 - scale * m1,
            });
        }
    }
    Ok(MonotoneMap1D::Composite {
        src: src.clone(),
        dst: dst.clone(),
    })
}

/// Couples all measures through one uniform level: `(F_0†(u), …, F_N†(u))`.
pub fn simultaneous_quantile_coupling(measures: &[Measure1D], u: f64) -> Result<Vec<f64>> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::OutOfRange(u));
    }
    Ok(measures.iter().map(|m| m.quantile(u)).collect())
}

/// Finite point cloud with uniform weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<DVector<f64>>,
}

impl PointCloud {
    pub fn new(points: Vec<DVector<f64>>) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyCloud)?;
        let dim = first.len();
        for p in &points {
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
        Ok(Self { points })
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// Index of the point nearest to `x` (first on ties).
    pub fn nearest(&self, x: &DVector<f64>) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, p) in self.points.iter().enumerate() {
            let d = (p - x).norm_squared();
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }
}

/// Optimal matching `src[k] → dst[permutation[k]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub permutation: Vec<usize>,
    pub cost: f64,
}

/// Cost `Σ_k ‖src_k − dst_{σ(k)}‖²` of a permutation, summed in index order.
pub fn permutation_cost(src: &PointCloud, dst: &PointCloud, permutation: &[usize]) -> f64 {
    permutation
        .iter()
        .enumerate()
        .map(|(k, &j)| (&src.points[k] - &dst.points[j]).norm_squared())
        .sum()
}

/// Exact squared-Euclidean assignment between equal-size clouds
/// (shortest augmenting paths with dual potentials, O(n³)).
pub fn assignment_coupling(src: &PointCloud, dst: &PointCloud) -> Result<Assignment> {
    if src.len() != dst.len() {
        return Err(Error::SizeMismatch(src.len(), dst.len()));
    }
    if src.dim() != dst.dim() {
        return Err(Error::DimensionMismatch {
            expected: src.dim(),
            found: dst.dim(),
        });
    }
    let n = src.len();
    let cost = |i: usize, j: usize| (&src.points[i] - &dst.points[j]).norm_squared();

    // 1-based arrays; column 0 is a virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0usize;
        let mut min_slack = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r = owner[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0usize;
            for col in 1..=n {
                if used[col] {
                    continue;
                }
                let slack = cost(r - 1, col - 1) - u[r] - v[col];
                if slack < min_slack[col] {
                    min_slack[col] = slack;
                    way[col] = col0;
                }
                if min_slack[col] < delta {
                    delta = min_slack[col];
                    col1 = col;
                }
            }
            for col in 0..=n {
                if used[col] {
                    u[owner[col]] += delta;
                    v[col] -= delta;
                } else {
                    min_slack[col] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            owner[col0] = owner[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut permutation = vec![0usize; n];
    for col in 1..=n {
        permutation[owner[col] - 1] = col - 1;
    }
    let cost = permutation_cost(src, dst, &permutation);
    Ok(Assignment { permutation, cost })
}

/// Maps between consecutive observations; map `i` pushes observation `i`
/// forward to observation `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum CouplingChain {
    Gaussian(Vec<LinearMap>),
    OneD(Vec<MonotoneMap1D>),
    Cloud(Vec<Assignment>),
}

impl CouplingChain {
    pub fn len(&self) -> usize {
        match self {
            CouplingChain::Gaussian(m) => m.len(),
            CouplingChain::OneD(m) => m.len(),
            CouplingChain::Cloud(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Images `x_0, T_1(x_0), T_2(T_1(x_0)), …` of a start point under a
    /// Gaussian or 1D chain.
    pub fn knot_images(&self, start: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
        let mut out = Vec::with_capacity(self.len() + 1);
        out.push(start.clone());
        match self {
            CouplingChain::Gaussian(maps) => {
                for m in maps {
                    if m.matrix.ncols() != start.len() {
                        return Err(Error::DimensionMismatch {
                            expected: m.matrix.ncols(),
                            found: start.len(),
                        });
                    }
                    let next = m.apply(out.last().unwrap());
                    out.push(next);
                }
            }
            CouplingChain::OneD(maps) => {
                if start.len() != 1 {
                    return Err(Error::DimensionMismatch {
                        expected: 1,
                        found: start.len(),
                    });
                }
                for m in maps {
                    let next = m.apply(out.last().unwrap()[0]);
                    out.push(DVector::from_element(1, next));
                }
            }
            CouplingChain::Cloud(_) => return Err(Error::WrongFamily("gaussian or measure1d")),
        }
        Ok(out)
    }

    /// Indices visited by the point starting at `start` in a cloud chain.
    pub fn index_path(&self, start: usize) -> Result<Vec<usize>> {
        let CouplingChain::Cloud(maps) = self else {
            return Err(Error::WrongFamily("cloud"));
        };
        let mut path = Vec::with_capacity(maps.len() + 1);
        path.push(start);
        for a in maps {
            path.push(a.permutation[*path.last().unwrap()]);
        }
        Ok(path)
    }
}

/// Successive Monge maps between Gaussians.
pub fn sequential_gaussian_coupling(measures: &[GaussianMeasure]) -> Result<CouplingChain> {
    let maps = measures
        .windows(2)
        .map(|w| gaussian_monge_map(&w[0], &w[1]))
        .collect::<Result<Vec<_>>>()?;
    Ok(CouplingChain::Gaussian(maps))
}

/// Successive monotone rearrangements between 1D measures. Because these
/// compose to Monge maps, the chain realizes the simultaneous quantile coupling.
pub fn sequential_quantile_coupling(measures: &[Measure1D]) -> Result<CouplingChain> {
    let maps = measures
        .windows(2)
        .map(|w| quantile_monge_map_1d(&w[0], &w[1]))
        .collect::<Result<Vec<_>>>()?;
    Ok(CouplingChain::OneD(maps))
}

/// Successive optimal matchings between equal-size clouds.
pub fn sequential_assignment_coupling(clouds: &[PointCloud]) -> Result<CouplingChain> {
    let maps = clouds
        .windows(2)
        .map(|w| assignment_coupling(&w[0], &w[1]))
        .collect::<Result<Vec<_>>>()?;
    Ok(CouplingChain::Cloud(maps))
}

/// Composite maps `C_i = T_i ∘ … ∘ T_1` (with `C_0 = id`).
pub fn compose_prefixes(maps: &[LinearMap], dim: usize) -> Vec<LinearMap> {
    let mut out = Vec::with_capacity(maps.len() + 1);
    out.push(LinearMap::identity(dim));
    for m in maps {
        let next = m.compose(out.last().unwrap());
        out.push(next);
    }
    out
}
