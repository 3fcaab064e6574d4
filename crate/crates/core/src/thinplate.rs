//! Thin-plate splines on planar sites and their extension to fields of 1D
//! measures.
//!
//! The interpolant is `f(x) = c₀ + c₁x⁽¹⁾ + c₂x⁽²⁾ + Σ αᵢ φ(‖x − xᵢ‖)` with
//! `φ(r) = r² log r` and `φ(0) = 0`. Coefficients solve
//! `[K P; Pᵀ 0] w = (z, 0, 0, 0)` by LU with partial pivoting; the kernel is
//! only conditionally positive definite, so Cholesky does not apply.

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::coupling::{default_levels, quantile_moments, Gaussian1D, Measure1D};
use crate::error::{Error, Result};
use crate::normal;

/// Planar site.
pub type Site = [f64; 2];

/// Thin-plate radial basis function.
pub fn phi(r: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else {
        r * r * r.ln()
    }
}

fn phi_sq(r2: f64) -> f64 {
    if r2 == 0.0 {
        0.0
    } else {
        0.5 * r2 * r2.ln()
    }
}

fn dist2(a: &Site, b: &Site) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Factored `L` matrix for a fixed site set; solving it for several value
/// vectors reuses the factorization.
#[derive(Debug, Clone)]
struct TpsSystem {
    sites: Vec<Site>,
    lu: LU<f64, Dyn, Dyn>,
}

impl TpsSystem {
    fn new(sites: &[Site]) -> Result<Self> {
        let n = sites.len();
        if n < 3 {
            return Err(Error::TooFewObservations { needed: 3, found: n });
        }
        if sites.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if sites[i] == sites[j] {
                    return Err(Error::DuplicateSites(i, j));
                }
            }
        }
        let p = DMatrix::from_fn(n, 3, |i, j| match j {
            0 => 1.0,
            _ => sites[i][j - 1],
        });
        let sv = p.clone().svd(false, false).singular_values;
        let (smax, smin) = (sv.max(), sv.min());
        if smin <= 1e-10 * smax {
            return Err(Error::CollinearSites);
        }
        let mut l = DMatrix::zeros(n + 3, n + 3);
        for i in 0..n {
            for j in 0..n {
                l[(i, j)] = phi_sq(dist2(&sites[i], &sites[j]));
            }
            for k in 0..3 {
                l[(i, n + k)] = p[(i, k)];
                l[(n + k, i)] = p[(i, k)];
            }
        }
        let lu = l.lu();
        if !lu.is_invertible() {
            return Err(Error::SingularMatrix);
        }
        Ok(Self {
            sites: sites.to_vec(),
            lu,
        })
    }

    /// Solves for one column of coefficients per column of `values` (n × k).
    fn solve(&self, values: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = self.sites.len();
        if values.nrows() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: values.nrows(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut rhs = DMatrix::zeros(n + 3, values.ncols());
        rhs.rows_mut(0, n).copy_from(values);
        self.lu.solve(&rhs).ok_or(Error::SingularMatrix)
    }
}

/// Basis values `(φ(‖x − x_0‖), …, φ(‖x − x_N‖), 1, x⁽¹⁾, x⁽²⁾)`.
fn basis(sites: &[Site], x: &Site) -> DVector<f64> {
    let n = sites.len();
    let mut b = DVector::zeros(n + 3);
    for (i, s) in sites.iter().enumerate() {
        b[i] = phi_sq(dist2(x, s));
    }
    b[n] = 1.0;
    b[n + 1] = x[0];
    b[n + 2] = x[1];
    b
}

/// Scalar thin-plate spline.
#[derive(Debug, Clone, PartialEq)]
pub struct ThinPlateSpline {
    sites: Vec<Site>,
    rbf: Vec<f64>,
    affine: [f64; 3],
}

/// Fits the thin-plate spline through `values` at `sites`.
pub fn fit_tps(sites: &[Site], values: &[f64]) -> Result<ThinPlateSpline> {
    let system = TpsSystem::new(sites)?;
    let w = system.solve(&DMatrix::from_column_slice(values.len(), 1, values))?;
    Ok(ThinPlateSpline::from_column(sites, &w, 0))
}

impl ThinPlateSpline {
    fn from_column(sites: &[Site], w: &DMatrix<f64>, col: usize) -> Self {
        let n = sites.len();
        Self {
            sites: sites.to_vec(),
            rbf: (0..n).map(|i| w[(i, col)]).collect(),
            affine: [w[(n, col)], w[(n + 1, col)], w[(n + 2, col)]],
        }
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    /// Kernel coefficients `αᵢ`.
    pub fn rbf_coeffs(&self) -> &[f64] {
        &self.rbf
    }

    /// Affine coefficients `(c₀, c₁, c₂)`.
    pub fn affine_coeffs(&self) -> [f64; 3] {
        self.affine
    }

    pub fn eval(&self, x: Site) -> f64 {
        let [c0, c1, c2] = self.affine;
        let kernel: f64 = self
            .sites
            .iter()
            .zip(&self.rbf)
            .map(|(s, a)| a * phi_sq(dist2(&x, s)))
            .sum();
        c0 + c1 * x[0] + c2 * x[1] + kernel
    }

    /// `(Σαᵢ, Σαᵢxᵢ⁽¹⁾, Σαᵢxᵢ⁽²⁾)`, which vanish for a valid fit.
    pub fn side_conditions(&self) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (s, a) in self.sites.iter().zip(&self.rbf) {
            out[0] += a;
            out[1] += a * s[0];
            out[2] += a * s[1];
        }
        out
    }
}

/// Interpolated measure at one location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldPoint {
    pub mean: f64,
    pub std: f64,
    /// The std surface is non-positive here (Gaussian fields) or the quantile
    /// surfaces cross (general fields).
    pub degenerate: bool,
}

/// Surface of 1D measures interpolating the site measures.
#[derive(Debug, Clone)]
pub enum MeasureField {
    /// Mean and standard-deviation surfaces; quantiles are `m_x + Φ⁻¹(α)|s_x|`.
    Gaussian {
        mean: ThinPlateSpline,
        sd: ThinPlateSpline,
    },
    /// One surface per probability level, stored as coefficient columns.
    Quantiles {
        sites: Vec<Site>,
        levels: Vec<f64>,
        coeffs: DMatrix<f64>,
    },
}

/// Fits mean and standard-deviation thin-plate surfaces.
pub fn fit_gaussian_field(sites: &[Site], gaussians: &[Gaussian1D]) -> Result<MeasureField> {
    if let Some(g) = gaussians.iter().find(|g| !(g.sd > 0.0)) {
        return Err(Error::NonPositiveScale(g.sd));
    }
    let system = TpsSystem::new(sites)?;
    let n = gaussians.len();
    let values = DMatrix::from_fn(n, 2, |i, j| if j == 0 { gaussians[i].mean } else { gaussians[i].sd });
    let w = system.solve(&values)?;
    Ok(MeasureField::Gaussian {
        mean: ThinPlateSpline::from_column(sites, &w, 0),
        sd: ThinPlateSpline::from_column(sites, &w, 1),
    })
}

/// Fits a field over arbitrary 1D measures. All-Gaussian input gives a
/// [`MeasureField::Gaussian`]; otherwise one surface per default level is fit
/// through the simultaneously coupled quantiles.
pub fn fit_measure_field(sites: &[Site], measures: &[Measure1D]) -> Result<MeasureField> {
    if measures.len() != sites.len() {
        return Err(Error::LengthMismatch {
            expected: sites.len(),
            found: measures.len(),
        });
    }
    let gaussians: Option<Vec<Gaussian1D>> = measures.iter().map(|m| m.as_gaussian()).collect();
    if let Some(gs) = gaussians {
        return fit_gaussian_field(sites, &gs);
    }
    let system = TpsSystem::new(sites)?;
    let levels = default_levels().to_vec();
    let values = DMatrix::from_fn(measures.len(), levels.len(), |i, k| measures[i].quantile(levels[k]));
    let coeffs = system.solve(&values)?;
    Ok(MeasureField::Quantiles {
        sites: sites.to_vec(),
        levels,
        coeffs,
    })
}

impl MeasureField {
    /// Quantile level `alpha` of the interpolated measure at `x`.
    pub fn quantile(&self, x: Site, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::OutOfRange(alpha));
        }
        match self {
            MeasureField::Gaussian { mean, sd } => {
                let m = mean.eval(x);
                if alpha == 0.5 {
                    return Ok(m);
                }
                Ok(m + normal::quantile(alpha) * sd.eval(x).abs())
            }
            MeasureField::Quantiles { levels, .. } => {
                let values = self.quantile_values(x).unwrap_or_default();
                let j = levels.partition_point(|&l| l <= alpha);
                Ok(if j == 0 {
                    values[0]
                } else if j == levels.len() {
                    values[j - 1]
                } else {
                    let w = (alpha - levels[j - 1]) / (levels[j] - levels[j - 1]);
                    values[j - 1] + w * (values[j] - values[j - 1])
                })
            }
        }
    }

    /// Quantile values on the field's level grid (general fields only).
    pub fn quantile_values(&self, x: Site) -> Option<Vec<f64>> {
        match self {
            MeasureField::Gaussian { .. } => None,
            MeasureField::Quantiles { sites, coeffs, .. } => {
                let b = basis(sites, &x);
                Some((coeffs.transpose() * b).iter().copied().collect())
            }
        }
    }

    pub fn levels(&self) -> Option<&[f64]> {
        match self {
            MeasureField::Gaussian { .. } => None,
            MeasureField::Quantiles { levels, .. } => Some(levels),
        }
    }

    /// Mean, standard deviation and degeneracy flag at `x`.
    pub fn at(&self, x: Site) -> FieldPoint {
        match self {
            MeasureField::Gaussian { mean, sd } => {
                let s = sd.eval(x);
                FieldPoint {
                    mean: mean.eval(x),
                    std: s.abs(),
                    degenerate: s <= 0.0,
                }
            }
            MeasureField::Quantiles { levels, .. } => {
                let values = self.quantile_values(x).unwrap_or_default();
                let (m1, m2) = quantile_moments(levels, &values);
                FieldPoint {
                    mean: m1,
                    std: (m2 - m1 * m1).max(0.0).sqrt(),
                    degenerate: values.windows(2).any(|w| w[1] < w[0]),
                }
            }
        }
    }

    pub fn sites(&self) -> &[Site] {
        match self {
            MeasureField::Gaussian { mean, .. } => mean.sites(),
            MeasureField::Quantiles { sites, .. } => sites,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn plane(x: Site) -> f64 {
        1.5 - 2.0 * x[0] + 0.25 * x[1]
    }

    /// Plain Gaussian elimination with partial pivoting, kept separate from
    /// the library's factorization.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()).unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for row in (col + 1)..n {
                let f = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for row in (0..n).rev() {
            let s: f64 = ((row + 1)..n).map(|k| a[row][k] * x[k]).sum();
            x[row] = (b[row] - s) / a[row][row];
        }
        x
    }

    #[test]
    fn phi_convention() {
        assert_eq!(phi(0.0), 0.0);
        assert_eq!(phi(1.0), 0.0);
        assert!((phi(2.0) - 4.0 * 2f64.ln()).abs() < 1e-15);
        assert!((phi_sq(4.0) - phi(2.0)).abs() < 1e-15);
    }

    #[test]
    fn three_sites_give_the_plane() {
        let sites = [[0.0, 0.0], [1.0, 0.2], [0.3, 1.0]];
        let z: Vec<f64> = sites.iter().map(|&s| plane(s)).collect();
        let f = fit_tps(&sites, &z).unwrap();
        assert!(f.rbf_coeffs().iter().all(|a| a.abs() < 1e-12));
        for x in [[0.5, 0.5], [-3.0, 2.0], [10.0, -7.0]] {
            assert!((f.eval(x) - plane(x)).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_data() {
        let sites = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.7, 0.8], [0.2, 0.4]];
        let f = fit_tps(&sites, &[5.0; 5]).unwrap();
        let [c0, c1, c2] = f.affine_coeffs();
        assert!((c0 - 5.0).abs() < 1e-12 && c1.abs() < 1e-12 && c2.abs() < 1e-12);
        assert!((f.eval([3.0, -1.0]) - 5.0).abs() < 1e-10);
    }

    #[test]
    fn unit_square_against_dense_oracle() {
        let sites = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let z = [0.0, 0.0, 0.0, 1.0];
        let n = 4;
        let mut a = vec![vec![0.0; n + 3]; n + 3];
        for i in 0..n {
            for j in 0..n {
                let r = dist2(&sites[i], &sites[j]).sqrt();
                a[i][j] = phi(r);
            }
            let p = [1.0, sites[i][0], sites[i][1]];
            for k in 0..3 {
                a[i][n + k] = p[k];
                a[n + k][i] = p[k];
            }
        }
        let mut b = z.to_vec();
        b.extend([0.0; 3]);
        let w = dense_solve(a, b);
        let f = fit_tps(&sites, &z).unwrap();
        for i in 0..n {
            assert!((f.rbf_coeffs()[i] - w[i]).abs() < 1e-12);
        }
        for k in 0..3 {
            assert!((f.affine_coeffs()[k] - w[n + k]).abs() < 1e-12);
        }
        for (s, zi) in sites.iter().zip(z) {
            assert!((f.eval(*s) - zi).abs() < 1e-8);
        }
        assert!(f.side_conditions().iter().all(|c| c.abs() < 1e-9));
        // centre value from oracle coefficients
        let centre: f64 = (0..n).map(|i| w[i] * phi(dist2(&[0.5, 0.5], &sites[i]).sqrt())).sum::<f64>()
            + w[n]
            + 0.5 * w[n + 1]
            + 0.5 * w[n + 2];
        assert!((f.eval([0.5, 0.5]) - centre).abs() < 1e-12);
        // symmetry of the data: centre is 1/4
        assert!((centre - 0.25).abs() < 1e-12);
    }

    #[test]
    fn degenerate_site_sets() {
        assert!(matches!(
            fit_tps(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]], &[0.0, 1.0, 2.0, 0.0]),
            Err(Error::CollinearSites)
        ));
        assert!(matches!(
            fit_tps(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 0.0]], &[0.0; 4]),
            Err(Error::DuplicateSites(1, 3))
        ));
        assert!(matches!(fit_tps(&[[0.0, 0.0], [1.0, 0.0]], &[0.0; 2]), Err(Error::TooFewObservations { .. })));
        assert!(matches!(
            fit_tps(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], &[0.0; 2]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn gaussian_field_examples() {
        let sites = [[0.0, 0.0], [2.0, 0.0], [0.0, 1.0], [1.5, 1.5]];
        let same = vec![Gaussian1D::new(3.0, 0.5).unwrap(); 4];
        let field = fit_gaussian_field(&sites, &same).unwrap();
        for x in [[0.3, 0.3], [5.0, 5.0]] {
            let p = field.at(x);
            assert!((p.mean - 3.0).abs() < 1e-10 && (p.std - 0.5).abs() < 1e-10);
        }
        let sites3 = [[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]];
        let gs = [
            Gaussian1D::new(1.0, 1.0).unwrap(),
            Gaussian1D::new(3.0, 2.0).unwrap(),
            Gaussian1D::new(0.0, 1.5).unwrap(),
        ];
        let field = fit_gaussian_field(&sites3, &gs).unwrap();
        let p = field.at([1.0, 0.5]);
        // planes: m = 1 + x − y, s = 1 + x/2 + y/2
        assert!((p.mean - 1.5).abs() < 1e-10);
        assert!((p.std - 1.75).abs() < 1e-10);
        let MeasureField::Gaussian { mean, .. } = &field else { panic!() };
        assert!(mean.rbf_coeffs().iter().all(|a| a.abs() < 1e-12));
        assert_eq!(field.quantile([1.0, 0.5], 0.5).unwrap(), field.at([1.0, 0.5]).mean);
        for (s, g) in sites3.iter().zip(&gs) {
            let q = field.quantile(*s, 0.9).unwrap();
            assert!((q - (g.mean + normal::quantile(0.9) * g.sd)).abs() < 1e-8);
        }
        assert!(matches!(field.quantile([0.0, 0.0], 1.0), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn negative_sd_surface_is_flagged() {
        let sites = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let gs = [
            Gaussian1D::new(0.0, 0.1).unwrap(),
            Gaussian1D::new(0.0, 2.0).unwrap(),
            Gaussian1D::new(0.0, 0.1).unwrap(),
        ];
        let field = fit_gaussian_field(&sites, &gs).unwrap();
        // plane s = 0.1 + 1.9 x; negative for x < −0.1/1.9
        let p = field.at([-1.0, 0.0]);
        assert!(p.degenerate);
        assert!(p.std > 0.0);
        assert!(!field.at([0.5, 0.2]).degenerate);
    }

    #[test]
    fn general_field_reproduces_sites() {
        let sites = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.4, 0.6]];
        let measures = vec![
            Measure1D::uniform(0.0, 1.0).unwrap(),
            Measure1D::gaussian(1.0, 0.3).unwrap(),
            Measure1D::uniform(-1.0, 2.0).unwrap(),
            Measure1D::gaussian(0.0, 2.0).unwrap(),
            Measure1D::uniform(0.5, 0.7).unwrap(),
        ];
        let field = fit_measure_field(&sites, &measures).unwrap();
        assert!(matches!(field, MeasureField::Quantiles { .. }));
        for (s, m) in sites.iter().zip(&measures) {
            let vals = field.quantile_values(*s).unwrap();
            for (u, v) in field.levels().unwrap().iter().zip(&vals) {
                assert!((v - m.quantile(*u)).abs() < 1e-7);
            }
            let u = field.levels().unwrap()[300];
            assert!((field.quantile(*s, u).unwrap() - m.quantile(u)).abs() < 1e-7);
        }
        let all_gauss = vec![Measure1D::gaussian(0.0, 1.0).unwrap(); 5];
        assert!(matches!(fit_measure_field(&sites, &all_gauss).unwrap(), MeasureField::Gaussian { .. }));
    }

    /// `∫‖∇²f‖²_F` by midpoint quadrature of finite-difference Hessians.
    fn bending_energy(f: &dyn Fn(Site) -> f64, lo: Site, hi: Site, n: usize) -> f64 {
        let (hx, hy) = ((hi[0] - lo[0]) / n as f64, (hi[1] - lo[1]) / n as f64);
        let e = 1e-4 * hx.max(hy);
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = [lo[0] + (i as f64 + 0.5) * hx, lo[1] + (j as f64 + 0.5) * hy];
                let f0 = f(x);
                let fxx = (f([x[0] + e, x[1]]) - 2.0 * f0 + f([x[0] - e, x[1]])) / (e * e);
                let fyy = (f([x[0], x[1] + e]) - 2.0 * f0 + f([x[0], x[1] - e])) / (e * e);
                let fxy = (f([x[0] + e, x[1] + e]) - f([x[0] + e, x[1] - e]) - f([x[0] - e, x[1] + e]) + f([x[0] - e, x[1] - e]))
                    / (4.0 * e * e);
                total += (fxx * fxx + fyy * fyy + 2.0 * fxy * fxy) * hx * hy;
            }
        }
        total
    }

    #[test]
    fn beats_plane_plus_bump_competitor() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let sites: Vec<Site> = (0..6).map(|_| [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]).collect();
            let z: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = fit_tps(&sites, &z).unwrap();
            let lo = [sites.iter().map(|s| s[0]).fold(f64::INFINITY, f64::min), sites.iter().map(|s| s[1]).fold(f64::INFINITY, f64::min)];
            let hi = [sites.iter().map(|s| s[0]).fold(f64::NEG_INFINITY, f64::max), sites.iter().map(|s| s[1]).fold(f64::NEG_INFINITY, f64::max)];
            // competitor: least-squares plane plus Gaussian bumps fixing the residuals
            let width = 0.15f64;
            let bump = |x: Site, c: Site| (-dist2(&x, &c) / (width * width)).exp();
            let pl = fit_tps(&sites[..3], &z[..3]).unwrap();
            let resid: Vec<f64> = sites.iter().zip(&z).map(|(s, zi)| zi - pl.eval(*s)).collect();
            let gram = DMatrix::from_fn(6, 6, |i, j| bump(sites[i], sites[j]));
            let amps = gram.lu().solve(&DVector::from_vec(resid)).unwrap();
            let competitor = |x: Site| pl.eval(x) + (0..6).map(|k| amps[k] * bump(x, sites[k])).sum::<f64>();
            for (s, zi) in sites.iter().zip(&z) {
                assert!((competitor(*s) - zi).abs() < 1e-8);
            }
            let ef = bending_energy(&|x| f.eval(x), lo, hi, 200);
            let ec = bending_energy(&competitor, lo, hi, 200);
            assert!(ef <= ec, "tps {ef} vs competitor {ec}");
        }
    }

    fn site_set() -> impl Strategy<Value = Vec<Site>> {
        proptest::collection::vec((0.0f64..10.0, 0.0f64..10.0).prop_map(|(a, b)| [a, b]), 4..12)
    }

    proptest! {
        #[test]
        fn interpolates_and_satisfies_side_conditions(sites in site_set(), seed in 0u64..1000) {
            let z: Vec<f64> = (0..sites.len()).map(|i| ((i as u64 + seed) as f64 * 0.77).sin() * 3.0).collect();
            match fit_tps(&sites, &z) {
                Ok(f) => {
                    for (s, zi) in sites.iter().zip(&z) {
                        prop_assert!((f.eval(*s) - zi).abs() < 1e-8);
                    }
                    prop_assert!(f.side_conditions().iter().all(|c| c.abs() < 1e-9 * f.rbf_coeffs().iter().map(|a| a.abs()).sum::<f64>().max(1.0)));
                }
                Err(e) => prop_assert!(matches!(e, Error::DuplicateSites(..) | Error::CollinearSites)),
            }
        }

        #[test]
        fn linear_in_values(sites in site_set(), k in -3.0f64..3.0, x in (0.0f64..10.0, 0.0f64..10.0)) {
            let a: Vec<f64> = (0..sites.len()).map(|i| (i as f64).cos()).collect();
            let b: Vec<f64> = (0..sites.len()).map(|i| (i as f64 * 1.3).sin()).collect();
            let sum: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p + k * q).collect();
            if let (Ok(fa), Ok(fb), Ok(fs)) = (fit_tps(&sites, &a), fit_tps(&sites, &b), fit_tps(&sites, &sum)) {
                let x = [x.0, x.1];
                prop_assert!((fs.eval(x) - fa.eval(x) - k * fb.eval(x)).abs() < 1e-9 * (1.0 + fa.eval(x).abs() + fb.eval(x).abs()));
            }
        }

        #[test]
        fn quantiles_monotone_in_level(sites in site_set(), x in (0.0f64..10.0, 0.0f64..10.0)) {
            let gs: Vec<Gaussian1D> = (0..sites.len()).map(|i| Gaussian1D::new(i as f64, 0.5 + (i % 3) as f64).unwrap()).collect();
            if let Ok(field) = fit_gaussian_field(&sites, &gs) {
                let mut prev = f64::NEG_INFINITY;
                for k in 1..50 {
                    let q = field.quantile([x.0, x.1], k as f64 / 50.0).unwrap();
                    prop_assert!(q >= prev);
                    prev = q;
                }
            }
        }
    }
}
