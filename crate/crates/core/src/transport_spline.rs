//! Transport splines: couple the observed measures with Monge maps, then
//! interpolate every coupled trajectory with a Euclidean spline.
//!
//! For Gaussian observations the whole construction is affine in the starting
//! point, so the law at any time is Gaussian and available in closed form.

use nalgebra::{DMatrix, DVector};

use crate::bures::{GaussianMeasure, LinearMap, SymPsdMatrix, DEGENERACY_TOL};
use crate::coupling::{
    compose_prefixes, default_levels, sequential_assignment_coupling, sequential_gaussian_coupling,
    sequential_quantile_coupling, CouplingChain, Measure1D, PointCloud,
};
use crate::error::{Error, Result};
use crate::spline1d::{InterpKind, Interpolant, SplineWeights, TimeGrid};

/// Which kind of measure the observations are.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Gaussian,
    Measure1D,
    Cloud,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Measure1D => "measure1d",
            Family::Cloud => "cloud",
        }
    }
}

/// A single observed measure.
#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    Gaussian(GaussianMeasure),
    Measure1D(Measure1D),
    Cloud(PointCloud),
}

impl Observation {
    pub fn family(&self) -> Family {
        match self {
            Observation::Gaussian(_) => Family::Gaussian,
            Observation::Measure1D(_) => Family::Measure1D,
            Observation::Cloud(_) => Family::Cloud,
        }
    }
}

/// Observations at the knots, all of one family.
#[derive(Debug, Clone, PartialEq)]
pub enum Observations {
    Gaussian(Vec<GaussianMeasure>),
    Measure1D(Vec<Measure1D>),
    Cloud(Vec<PointCloud>),
}

impl Observations {
    /// Groups heterogeneous observations, failing if families are mixed.
    pub fn from_items(items: Vec<Observation>) -> Result<Self> {
        let Some(first) = items.first() else {
            return Err(Error::TooFewObservations { needed: 2, found: 0 });
        };
        let family = first.family();
        if items.iter().any(|o| o.family() != family) {
            return Err(Error::MixedFamilies);
        }
        Ok(match family {
            Family::Gaussian => Observations::Gaussian(
                items
                    .into_iter()
                    .map(|o| match o {
                        Observation::Gaussian(g) => g,
                        _ => unreachable!(),
                    })
                    .collect(),
            ),
            Family::Measure1D => Observations::Measure1D(
                items
                    .into_iter()
                    .map(|o| match o {
                        Observation::Measure1D(m) => m,
                        _ => unreachable!(),
                    })
                    .collect(),
            ),
            Family::Cloud => Observations::Cloud(
                items
                    .into_iter()
                    .map(|o| match o {
                        Observation::Cloud(c) => c,
                        _ => unreachable!(),
                    })
                    .collect(),
            ),
        })
    }

    pub fn len(&self) -> usize {
        match self {
            Observations::Gaussian(v) => v.len(),
            Observations::Measure1D(v) => v.len(),
            Observations::Cloud(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn family(&self) -> Family {
        match self {
            Observations::Gaussian(_) => Family::Gaussian,
            Observations::Measure1D(_) => Family::Measure1D,
            Observations::Cloud(_) => Family::Cloud,
        }
    }
}

/// Quantile samples of a 1D law, with a flag recording whether they are
/// nondecreasing (i.e. a valid quantile function).
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileLaw {
    pub levels: Vec<f64>,
    pub values: Vec<f64>,
    pub valid: bool,
}

#[derive(Debug, Clone)]
enum FamilyData {
    Gaussian {
        measures: Vec<GaussianMeasure>,
        composites: Vec<LinearMap>,
        mean_curve: Interpolant,
    },
    Measure1D {
        measures: Vec<Measure1D>,
    },
    Cloud {
        clouds: Vec<PointCloud>,
        trajectories: Vec<Interpolant>,
    },
}

/// A fitted transport spline.
#[derive(Debug, Clone)]
pub struct TransportSpline {
    grid: TimeGrid,
    kind: InterpKind,
    weights: SplineWeights,
    chain: CouplingChain,
    data: FamilyData,
}

impl TransportSpline {
    pub fn fit(grid: &TimeGrid, observations: Observations, kind: InterpKind) -> Result<Self> {
        let expected = grid.n_intervals() + 1;
        if observations.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: observations.len(),
            });
        }
        let weights = SplineWeights::new(kind, grid)?;
        let (chain, data) = match observations {
            Observations::Gaussian(measures) => {
                let dim = measures[0].dim();
                if let Some(bad) = measures.iter().find(|g| g.dim() != dim) {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: bad.dim(),
                    });
                }
                let chain = sequential_gaussian_coupling(&measures)?;
                let CouplingChain::Gaussian(maps) = &chain else { unreachable!() };
                let composites = compose_prefixes(maps, dim);
                let means: Vec<DVector<f64>> = measures.iter().map(|g| g.mean().clone()).collect();
                let mean_curve = Interpolant::fit(kind, grid, &means)?;
                (
                    chain,
                    FamilyData::Gaussian {
                        measures,
                        composites,
                        mean_curve,
                    },
                )
            }
            Observations::Measure1D(measures) => {
                let chain = sequential_quantile_coupling(&measures)?;
                (chain, FamilyData::Measure1D { measures })
            }
            Observations::Cloud(clouds) => {
                let chain = sequential_assignment_coupling(&clouds)?;
                let trajectories = (0..clouds[0].len())
                    .map(|start| {
                        let path = chain.index_path(start)?;
                        let pts: Vec<DVector<f64>> =
                            path.iter().zip(&clouds).map(|(&j, c)| c.points()[j].clone()).collect();
                        Interpolant::fit(kind, grid, &pts)
                    })
                    .collect::<Result<Vec<_>>>()?;
                (chain, FamilyData::Cloud { clouds, trajectories })
            }
        };
        Ok(Self {
            grid: grid.clone(),
            kind,
            weights,
            chain,
            data,
        })
    }

    /// Knot-to-knot straight lines through the coupled points.
    pub fn fit_piecewise_geodesic(grid: &TimeGrid, observations: Observations) -> Result<Self> {
        Self::fit(grid, observations, InterpKind::Linear)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn kind(&self) -> InterpKind {
        self.kind
    }

    pub fn chain(&self) -> &CouplingChain {
        &self.chain
    }

    pub fn family(&self) -> Family {
        match self.data {
            FamilyData::Gaussian { .. } => Family::Gaussian,
            FamilyData::Measure1D { .. } => Family::Measure1D,
            FamilyData::Cloud { .. } => Family::Cloud,
        }
    }

    /// Spline weights `w_i(t)`: the interpolated point is `Σ w_i(t) x_i`.
    pub fn weights(&self, t: f64) -> Result<DVector<f64>> {
        self.weights.weights(t)
    }

    /// Coupled knot points of the trajectory started at `x0`.
    pub fn knot_images(&self, x0: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
        match &self.data {
            FamilyData::Cloud { clouds, .. } => {
                let path = self.chain.index_path(clouds[0].nearest(x0))?;
                Ok(path.iter().zip(clouds).map(|(&j, c)| c.points()[j].clone()).collect())
            }
            _ => self.chain.knot_images(x0),
        }
    }

    /// Trajectory through the coupled images of `x0`, evaluated at
    /// `eval_times`. For clouds, `x0` selects the nearest time-0 point.
    pub fn sample_trajectory(&self, x0: &DVector<f64>, eval_times: &[f64]) -> Result<Vec<DVector<f64>>> {
        let curve = match &self.data {
            FamilyData::Cloud { clouds, trajectories } => {
                if x0.len() != clouds[0].dim() {
                    return Err(Error::DimensionMismatch {
                        expected: clouds[0].dim(),
                        found: x0.len(),
                    });
                }
                return eval_all(&trajectories[clouds[0].nearest(x0)], eval_times);
            }
            _ => Interpolant::fit(self.kind, &self.grid, &self.chain.knot_images(x0)?)?,
        };
        eval_all(&curve, eval_times)
    }

    /// Trajectory of the `index`-th point of the first cloud.
    pub fn cloud_trajectory(&self, index: usize, eval_times: &[f64]) -> Result<Vec<DVector<f64>>> {
        let FamilyData::Cloud { trajectories, .. } = &self.data else {
            return Err(Error::WrongFamily("cloud"));
        };
        let curve = trajectories.get(index).ok_or(Error::LengthMismatch {
            expected: trajectories.len(),
            found: index + 1,
        })?;
        eval_all(curve, eval_times)
    }

    /// Affine map `x0 ↦ Y_t` for the Gaussian family:
    /// `Σ_i w_i(t) C_i` with `C_i` the composed chain map to knot `i`.
    pub fn law_map(&self, t: f64) -> Result<LinearMap> {
        let FamilyData::Gaussian { composites, .. } = &self.data else {
            return Err(Error::WrongFamily("gaussian"));
        };
        let w = self.weights.weights(t)?;
        let dim = composites[0].dim();
        let mut matrix = DMatrix::zeros(dim, dim);
        let mut offset = DVector::zeros(dim);
        for (c, &wi) in composites.iter().zip(w.iter()) {
            matrix += &c.matrix * wi;
            offset += &c.offset * wi;
        }
        Ok(LinearMap { matrix, offset })
    }

    /// Law of `Y_t` for Gaussian observations:
    /// `N(mean curve(t), B Σ_0 Bᵀ)` with `B` the linear part of [`Self::law_map`].
    pub fn propagate_gaussian_law(&self, t: f64) -> Result<GaussianMeasure> {
        let FamilyData::Gaussian { measures, mean_curve, .. } = &self.data else {
            return Err(Error::WrongFamily("gaussian"));
        };
        let b = self.law_map(t)?.matrix;
        let cov = SymPsdMatrix::from_product(&b * measures[0].cov().as_matrix() * b.transpose());
        GaussianMeasure::new(mean_curve.eval(t)?, cov)
    }

    /// Whether the interpolated Gaussian stays non-degenerate at every probe time.
    pub fn gaussian_nondegenerate_on(&self, probe_times: &[f64]) -> Result<bool> {
        for &t in probe_times {
            if self.propagate_gaussian_law(t)?.cov().min_eigenvalue() <= DEGENERACY_TOL {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Interpolated quantile `G_t(u) = Σ_i w_i(t) F_i†(u)` for 1D observations.
    pub fn quantile_at(&self, t: f64, u: f64) -> Result<f64> {
        let FamilyData::Measure1D { measures } = &self.data else {
            return Err(Error::WrongFamily("measure1d"));
        };
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::OutOfRange(u));
        }
        let w = self.weights.weights(t)?;
        Ok(measures.iter().zip(w.iter()).map(|(m, &wi)| wi * m.quantile(u)).sum())
    }

    /// Law of `Y_t` for 1D observations, sampled on the default level grid.
    pub fn law_1d(&self, t: f64) -> Result<QuantileLaw> {
        let FamilyData::Measure1D { measures } = &self.data else {
            return Err(Error::WrongFamily("measure1d"));
        };
        let w = self.weights.weights(t)?;
        let levels = default_levels().to_vec();
        let values: Vec<f64> = levels
            .iter()
            .map(|&u| measures.iter().zip(w.iter()).map(|(m, &wi)| wi * m.quantile(u)).sum())
            .collect();
        let valid = values.windows(2).all(|p| p[1] >= p[0]);
        Ok(QuantileLaw { levels, values, valid })
    }

    /// Whether the quantile spline is a valid quantile function at every probe time.
    pub fn quantile_spline_is_valid(&self, probe_times: &[f64]) -> Result<bool> {
        for &t in probe_times {
            if !self.law_1d(t)?.valid {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Positions of all matched cloud points at time `t`.
    pub fn cloud_positions(&self, t: f64) -> Result<Vec<DVector<f64>>> {
        let FamilyData::Cloud { trajectories, .. } = &self.data else {
            return Err(Error::WrongFamily("cloud"));
        };
        trajectories.iter().map(|c| c.eval(t)).collect()
    }

    /// Observed clouds at the knots.
    pub fn clouds(&self) -> Result<&[PointCloud]> {
        match &self.data {
            FamilyData::Cloud { clouds, .. } => Ok(clouds),
            _ => Err(Error::WrongFamily("cloud")),
        }
    }

    /// Observed Gaussians at the knots.
    pub fn gaussians(&self) -> Result<&[GaussianMeasure]> {
        match &self.data {
            FamilyData::Gaussian { measures, .. } => Ok(measures),
            _ => Err(Error::WrongFamily("gaussian")),
        }
    }

    /// Observed 1D measures at the knots.
    pub fn measures_1d(&self) -> Result<&[Measure1D]> {
        match &self.data {
            FamilyData::Measure1D { measures } => Ok(measures),
            _ => Err(Error::WrongFamily("measure1d")),
        }
    }
}

fn eval_all(curve: &Interpolant, times: &[f64]) -> Result<Vec<DVector<f64>>> {
    times.iter().map(|&t| curve.eval(t)).collect()
}
