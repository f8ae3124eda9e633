//! The Berkson density estimator on evaluation grids.
//!
//! With Gaussian kernel and Gaussian error the estimator collapses to an
//! average of shifted normals,
//! `f̃_{Y,H}(y) = n⁻¹ Σ_i φ_{S+Σ_ε}(y − X_i)` with `S = HᵀΣ_K H`,
//! so only the total covariance `S + Σ_ε` matters. `H = 0` gives the
//! kernel-free estimator `n⁻¹ Σ_i f_ε(y − X_i)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{BerksonError, Result};
use crate::gaussmix::ZeroMeanNormal;
use crate::mise_exact::BandwidthSpec;

/// An n×p matrix of observations, one row per observation.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleMatrix {
    data: DMatrix<f64>,
}

impl SampleMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(BerksonError::EmptySample);
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(BerksonError::Domain("sample contains non-finite entries".into()));
        }
        Ok(Self { data })
    }

    /// 1-D sample from a plain vector of observations.
    pub fn from_univariate(values: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_iterator(values.len(), 1, values.iter().copied()))
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.data.row(i).transpose()
    }

    /// First-column values of a 1-D sample.
    pub fn univariate_values(&self) -> Vec<f64> {
        self.data.column(0).iter().copied().collect()
    }

    /// Sample mean of column 0.
    pub fn mean1(&self) -> f64 {
        self.data.column(0).sum() / self.n() as f64
    }

    /// Unbiased sample variance of column 0.
    pub fn variance1(&self) -> f64 {
        let m = self.mean1();
        let n = self.n();
        self.data.column(0).iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n as f64 - 1.0)
    }

    /// Interquartile range of column 0 (interpolated order statistics).
    pub fn iqr1(&self) -> f64 {
        let mut v = self.univariate_values();
        v.sort_by(f64::total_cmp);
        quantile_sorted(&v, 0.75) - quantile_sorted(&v, 0.25)
    }

    /// Rows of both samples stacked.
    pub fn concat(&self, other: &SampleMatrix) -> Result<SampleMatrix> {
        if self.dim() != other.dim() {
            return Err(BerksonError::ShapeMismatch {
                expected: format!("dimension {}", self.dim()),
                got: format!("dimension {}", other.dim()),
            });
        }
        let mut data = DMatrix::zeros(self.n() + other.n(), self.dim());
        data.rows_mut(0, self.n()).copy_from(&self.data);
        data.rows_mut(self.n(), other.n()).copy_from(&other.data);
        SampleMatrix::new(data)
    }
}

/// Quantile of an ascending slice by linear interpolation between the
/// closest order statistics.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty() && (0.0..=1.0).contains(&q));
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 < sorted.len() {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[lo]
    }
}

/// A density sampled on a strictly increasing 1-D grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl DensityCurve {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() || grid.is_empty() {
            return Err(BerksonError::ShapeMismatch {
                expected: "matching nonempty grid and values".into(),
                got: format!("{} vs {}", grid.len(), values.len()),
            });
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(BerksonError::Domain("grid is not strictly increasing".into()));
        }
        if values.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(BerksonError::Domain("density values must be finite and ≥ 0".into()));
        }
        Ok(Self { grid, values })
    }

    /// Integral over the grid: composite Simpson on even panel counts,
    /// with a trapezoid closing an odd tail panel.
    pub fn integral(&self) -> f64 {
        integrate_uniform(&self.grid, &self.values)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
    }

    /// Count of strict interior local maxima, a crude mode count.
    pub fn local_maxima(&self) -> usize {
        self.values
            .windows(3)
            .filter(|w| w[1] > w[0] && w[1] > w[2])
            .count()
    }
}

pub(crate) fn integrate_uniform(grid: &[f64], values: &[f64]) -> f64 {
    let n = grid.len();
    if n < 2 {
        return 0.0;
    }
    let h = (grid[n - 1] - grid[0]) / (n - 1) as f64;
    let panels = n - 1;
    let simpson_panels = if panels.is_multiple_of(2) { panels } else { panels - 1 };
    let mut total = 0.0;
    if simpson_panels > 0 {
        let mut s = values[0] + values[simpson_panels];
        for (i, v) in values.iter().enumerate().take(simpson_panels).skip(1) {
            s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
        }
        total += s * h / 3.0;
    }
    if simpson_panels < panels {
        total += 0.5 * h * (values[n - 2] + values[n - 1]);
    }
    total
}

/// Default evaluation grid: `points` equally spaced values over
/// `[min(sample) − 4σ_tot, max(sample) + 4σ_tot]` with
/// `σ_tot² = sample variance + σ_ε² + h²`.
pub fn default_grid(sample: &SampleMatrix, sigma_eps2: f64, h: f64, points: usize) -> Vec<f64> {
    let values = sample.univariate_values();
    let lo = values.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let hi = values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let var = if sample.n() > 1 { sample.variance1() } else { 0.0 };
    let sigma_tot = (var + sigma_eps2 + h * h).sqrt();
    linspace(lo - 4.0 * sigma_tot, hi + 4.0 * sigma_tot, points)
}

/// Default number of grid points for output curves.
pub const DEFAULT_GRID_POINTS: usize = 512;

pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(|i| lo + i as f64 * step).collect()
}

/// Evaluates `f̃_{Y,H}` on a 1-D grid with identity kernel covariance.
///
/// Needs `S + Σ_ε ≻ 0`: either smoothing or error must be nondegenerate.
/// Grid chunks are evaluated in parallel; assembly order is fixed by the
/// grid, so the output is deterministic.
pub fn evaluate_estimator(
    sample: &SampleMatrix,
    sigma_eps2: f64,
    bw: &BandwidthSpec,
    grid: &[f64],
) -> Result<DensityCurve> {
    if sample.dim() != 1 {
        return Err(BerksonError::UnsupportedDimension(
            "grid evaluation is 1-D; use evaluate_estimator_at for p > 1".into(),
        ));
    }
    if sigma_eps2 < 0.0 {
        return Err(BerksonError::Domain(format!("error variance {sigma_eps2} must be ≥ 0")));
    }
    let kernel = DMatrix::identity(1, 1);
    let s = bw.smoothing_cov(&kernel)?[(0, 0)];
    let total = s + sigma_eps2;
    if total <= 0.0 {
        return Err(BerksonError::DegenerateEstimator);
    }
    let xs = sample.univariate_values();
    let norm = 1.0 / (2.0 * std::f64::consts::PI * total).sqrt();
    let inv2v = 0.5 / total;
    let n_inv = 1.0 / xs.len() as f64;
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&y| {
            let sum: f64 = xs.iter().map(|&x| (-(y - x) * (y - x) * inv2v).exp()).sum();
            sum * norm * n_inv
        })
        .collect();
    DensityCurve::new(grid.to_vec(), values)
}

/// Pointwise estimator values in any dimension, for an explicit kernel
/// covariance and arbitrary evaluation points.
pub fn evaluate_estimator_at(
    sample: &SampleMatrix,
    error_cov: &DMatrix<f64>,
    kernel_cov: &DMatrix<f64>,
    bw: &BandwidthSpec,
    points: &[DVector<f64>],
) -> Result<Vec<f64>> {
    let p = sample.dim();
    if error_cov.nrows() != p || kernel_cov.nrows() != p {
        return Err(BerksonError::ShapeMismatch {
            expected: format!("{p}x{p} covariances"),
            got: format!("{}x{}", error_cov.nrows(), kernel_cov.nrows()),
        });
    }
    let s = bw.smoothing_cov(kernel_cov)?;
    let normal =
        ZeroMeanNormal::new(&(s + error_cov)).map_err(|_| BerksonError::DegenerateEstimator)?;
    let rows: Vec<DVector<f64>> = (0..sample.n()).map(|i| sample.row(i)).collect();
    let n_inv = 1.0 / rows.len() as f64;
    Ok(points
        .par_iter()
        .map(|y| rows.iter().map(|x| normal.pdf(&(y - x))).sum::<f64>() * n_inv)
        .collect())
}

/// Characteristic function of the estimator at frequency `ω` (p = 1,
/// identity kernel): `K̂(hω) f̂_ε(ω) n⁻¹ Σ_j e^{iωX_j}`.
pub fn estimator_char_form(
    sample: &SampleMatrix,
    sigma_eps2: f64,
    bw: &BandwidthSpec,
    omega: f64,
) -> Result<Complex64> {
    if sample.dim() != 1 {
        return Err(BerksonError::UnsupportedDimension(
            "estimator characteristic form requires p = 1".into(),
        ));
    }
    let kernel = DMatrix::identity(1, 1);
    let s = bw.smoothing_cov(&kernel)?[(0, 0)];
    // K̂(hω) = e^{−Sω²/2}, f̂_ε(ω) = e^{−Σ_εω²/2}, both real for symmetric densities.
    let envelope = (-0.5 * (s + sigma_eps2) * omega * omega).exp();
    let (mut re, mut im) = (0.0, 0.0);
    for &x in &sample.univariate_values() {
        re += (omega * x).cos();
        im += (omega * x).sin();
    }
    let n_inv = 1.0 / sample.n() as f64;
    Ok(Complex64::new(envelope * re * n_inv, envelope * im * n_inv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussmix::GaussianMixture;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    #[test]
    fn single_point_zero_bandwidth_is_error_density() {
        let sample = SampleMatrix::from_univariate(&[0.0]).unwrap();
        let grid = linspace(-5.0, 5.0, 201);
        let curve =
            evaluate_estimator(&sample, 1.0, &BandwidthSpec::Scalar(0.0), &grid).unwrap();
        for (&y, &v) in curve.grid.iter().zip(&curve.values) {
            let phi = (-0.5 * y * y).exp() / (2.0 * std::f64::consts::PI).sqrt();
            assert_relative_eq!(v, phi, epsilon = 1e-14);
        }
    }

    #[test]
    fn zero_bandwidth_matches_kernel_free_form() {
        let mix = GaussianMixture::univariate(&[(0.7, 0.0, 1.0), (0.3, 3.0, 1.0)]).unwrap();
        let sample = mix.sample(40, 5).unwrap();
        let sigma_eps2 = 0.5;
        let grid = default_grid(&sample, sigma_eps2, 0.0, 101);
        let curve =
            evaluate_estimator(&sample, sigma_eps2, &BandwidthSpec::Scalar(0.0), &grid).unwrap();
        let norm = 1.0 / (2.0 * std::f64::consts::PI * sigma_eps2).sqrt();
        for (g, v) in grid.iter().zip(&curve.values) {
            let direct: f64 = sample
                .univariate_values()
                .iter()
                .map(|x| norm * (-(g - x) * (g - x) / (2.0 * sigma_eps2)).exp())
                .sum::<f64>()
                / 40.0;
            assert_relative_eq!(*v, direct, epsilon = 1e-14);
        }
    }

    #[test]
    fn integrates_to_one_on_wide_grid() {
        let mix = GaussianMixture::univariate(&[(0.5, -6.0, 1.0), (0.5, 6.0, 1.0)]).unwrap();
        let sample = mix.sample(60, 11).unwrap();
        for h in [0.0, 0.3, 1.0] {
            // span sample range ± 8 std
            let values = sample.univariate_values();
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sd = (sample.variance1() + 1.0 + h * h).sqrt();
            let grid = linspace(lo - 8.0 * sd, hi + 8.0 * sd, 2001);
            let curve =
                evaluate_estimator(&sample, 1.0, &BandwidthSpec::Scalar(h), &grid).unwrap();
            assert_relative_eq!(curve.integral(), 1.0, epsilon = 1e-4);
        }
    }

    #[test]
    fn more_smoothing_lowers_peaks() {
        let mix = GaussianMixture::univariate(&[(1.0, 0.0, 1.0)]).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(99);
        for trial in 0..20 {
            let sample = mix.sample(30, 1000 + trial).unwrap();
            let h1 = rng.gen_range(0.05..0.5);
            let h2 = h1 + rng.gen_range(0.1..1.0);
            let grid = default_grid(&sample, 0.25, h2, 512);
            let c1 =
                evaluate_estimator(&sample, 0.25, &BandwidthSpec::Scalar(h1), &grid).unwrap();
            let c2 =
                evaluate_estimator(&sample, 0.25, &BandwidthSpec::Scalar(h2), &grid).unwrap();
            assert!(c2.max_value() <= c1.max_value() + 1e-12);
        }
    }

    #[test]
    fn only_total_covariance_matters() {
        let sample = SampleMatrix::from_univariate(&[0.3, -1.2, 2.0, 0.7]).unwrap();
        let grid = linspace(-6.0, 6.0, 301);
        let h = 0.4;
        let sigma_eps2 = 0.9;
        let a = evaluate_estimator(&sample, sigma_eps2, &BandwidthSpec::Scalar(h), &grid).unwrap();
        // recast: no error, bandwidth √(h² + σ_ε²)
        let b = evaluate_estimator(
            &sample,
            0.0,
            &BandwidthSpec::Scalar((h * h + sigma_eps2).sqrt()),
            &grid,
        )
        .unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert_relative_eq!(x, y, epsilon = 1e-14);
        }
    }

    #[test]
    fn linear_in_the_sample() {
        let s1 = SampleMatrix::from_univariate(&[0.0, 1.0]).unwrap();
        let s2 = SampleMatrix::from_univariate(&[-1.0, 2.0, 0.5]).unwrap();
        let both = s1.concat(&s2).unwrap();
        let grid = linspace(-4.0, 5.0, 101);
        let bw = BandwidthSpec::Scalar(0.3);
        let c1 = evaluate_estimator(&s1, 0.5, &bw, &grid).unwrap();
        let c2 = evaluate_estimator(&s2, 0.5, &bw, &grid).unwrap();
        let c = evaluate_estimator(&both, 0.5, &bw, &grid).unwrap();
        for i in 0..grid.len() {
            let blended = (2.0 * c1.values[i] + 3.0 * c2.values[i]) / 5.0;
            assert_relative_eq!(c.values[i], blended, epsilon = 1e-14);
        }
    }

    #[test]
    fn size_one_sample_is_exactly_normal_pdf() {
        let sample = SampleMatrix::from_univariate(&[1.5]).unwrap();
        let grid = linspace(-3.0, 6.0, 101);
        let h: f64 = 0.6;
        let curve = evaluate_estimator(&sample, 0.8, &BandwidthSpec::Scalar(h), &grid).unwrap();
        let v = h * h + 0.8;
        for (g, val) in grid.iter().zip(&curve.values) {
            let phi = (-0.5 * (g - 1.5) * (g - 1.5) / v).exp()
                / (2.0 * std::f64::consts::PI * v).sqrt();
            assert_relative_eq!(*val, phi, epsilon = 1e-14);
        }
    }

    #[test]
    fn degenerate_estimator_rejected() {
        let sample = SampleMatrix::from_univariate(&[0.0, 1.0]).unwrap();
        let grid = linspace(-1.0, 1.0, 11);
        assert!(matches!(
            evaluate_estimator(&sample, 0.0, &BandwidthSpec::Scalar(0.0), &grid),
            Err(BerksonError::DegenerateEstimator)
        ));
    }

    #[test]
    fn char_form_at_zero_is_one_and_bounded_by_error_cf() {
        let mix = GaussianMixture::univariate(&[(1.0, 0.0, 1.0)]).unwrap();
        let sample = mix.sample(25, 3).unwrap();
        let bw = BandwidthSpec::Scalar(0.3);
        let at0 = estimator_char_form(&sample, 0.7, &bw, 0.0).unwrap();
        assert_eq!(at0, Complex64::new(1.0, 0.0));
        let mut rng = rand::rngs::StdRng::seed_from_u64(17);
        for _ in 0..100 {
            let w: f64 = rng.gen_range(-8.0..8.0);
            let v = estimator_char_form(&sample, 0.7, &bw, w).unwrap();
            let err_cf = (-0.5 * 0.7 * w * w).exp();
            assert!(v.norm() <= err_cf + 1e-12);
        }
    }

    #[test]
    fn fourier_inversion_matches_direct_evaluation() {
        // f̃(y) = (2π)⁻¹ ∫ e^{−iωy} C(ω) dω, by quadrature on the real part.
        let sample = SampleMatrix::from_univariate(&[0.2, -0.9, 1.4, 0.0, 2.2]).unwrap();
        let bw = BandwidthSpec::Scalar(0.4);
        let sigma_eps2 = 0.6;
        let y = 0.8;
        let hi = crate::quad::truncation_radius(0.5 * (0.4f64 * 0.4 + sigma_eps2));
        let val = 2.0
            * crate::quad::integrate_half_line(
                |w| {
                    let c = estimator_char_form(&sample, sigma_eps2, &bw, w).unwrap();
                    c.re * (w * y).cos() + c.im * (w * y).sin()
                },
                hi,
                std::f64::consts::PI / 2.2,
            )
            / (2.0 * std::f64::consts::PI);
        let direct = evaluate_estimator(&sample, sigma_eps2, &bw, &[y - 1.0, y, y + 1.0])
            .unwrap()
            .values[1];
        assert_relative_eq!(val, direct, max_relative = 1e-6);
    }

    #[test]
    fn quantile_interpolation() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
        assert_eq!(quantile_sorted(&v, 0.5), 2.5);
        assert_eq!(quantile_sorted(&v, 0.25), 1.75);
    }
}
