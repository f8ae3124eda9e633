//! Multivariate Gaussian and Gaussian-mixture primitives.
//!
//! A mixture is a weighted sum of mean-shifted normal densities
//! `f(x) = Σ_j α_j φ_{Σ_j}(x − μ_j)` where `φ_Σ` is the mean-zero normal
//! density with covariance `Σ`. Everything downstream (exact MISE,
//! spectral integrals, sampling) is built on four facts about normals:
//! their density, their closure under convolution, the product integral
//! `∫ φ_Σ(x−μ) φ_{Σ'}(x−μ') dx = φ_{Σ+Σ'}(μ−μ')`, and the closed form of
//! `|f̂(ω)|²` for a mixture characteristic function.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{BerksonError, Result};
use crate::estimator::SampleMatrix;
use crate::rng::stream_rng;

const WEIGHT_SUM_TOL: f64 = 1e-9;
const SYMMETRY_TOL: f64 = 1e-12;

/// Mean-zero normal with a cached Cholesky factor, for repeated density
/// evaluations against one covariance.
#[derive(Clone, Debug)]
pub struct ZeroMeanNormal {
    chol: Cholesky<f64, Dyn>,
    log_norm: f64,
    dim: usize,
}

impl ZeroMeanNormal {
    /// Factors `cov`; fails if it is not symmetric positive definite.
    pub fn new(cov: &DMatrix<f64>) -> Result<Self> {
        check_symmetric(cov)?;
        let dim = cov.nrows();
        let chol = Cholesky::new(cov.clone()).ok_or_else(|| {
            BerksonError::InvalidCovariance("Cholesky factorization failed (matrix not SPD)".into())
        })?;
        let log_det: f64 = chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
        let log_norm = -0.5 * (dim as f64) * (2.0 * std::f64::consts::PI).ln() - 0.5 * log_det;
        Ok(Self { chol, log_norm, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Density at displacement `x` from the mean.
    pub fn pdf(&self, x: &DVector<f64>) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        // Solve L z = x, then xᵀ Σ⁻¹ x = ‖z‖².
        let z = self.chol.l().solve_lower_triangular(x).expect("factor is nonsingular");
        (self.log_norm - 0.5 * z.norm_squared()).exp()
    }

    /// Density at the origin, `(2π)^{-p/2} det(Σ)^{-1/2}`.
    pub fn pdf_at_zero(&self) -> f64 {
        self.log_norm.exp()
    }

    /// Lower-triangular factor, used to color standard normal draws.
    pub fn factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }
}

/// One mixture component `(α_j, μ_j, Σ_j)`.
#[derive(Clone, Debug)]
pub struct GaussianComponent {
    weight: f64,
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    normal: ZeroMeanNormal,
}

impl GaussianComponent {
    /// Validates `weight ∈ (0,1]`, dimension agreement, and that the
    /// covariance is symmetric positive definite.
    pub fn new(weight: f64, mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        if !(weight > 0.0 && weight <= 1.0) || !weight.is_finite() {
            return Err(BerksonError::InvalidWeights(format!(
                "component weight {weight} outside (0, 1]"
            )));
        }
        if covariance.nrows() != covariance.ncols() || covariance.nrows() != mean.len() {
            return Err(BerksonError::ShapeMismatch {
                expected: format!("{0}x{0} covariance for mean of length {0}", mean.len()),
                got: format!("{}x{}", covariance.nrows(), covariance.ncols()),
            });
        }
        let normal = ZeroMeanNormal::new(&covariance)?;
        Ok(Self { weight, mean, covariance, normal })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }
}

/// Gaussian mixture `Σ_j α_j φ_{Σ_j}(x − μ_j)`, weights summing to 1.
#[derive(Clone, Debug)]
pub struct GaussianMixture {
    components: Vec<GaussianComponent>,
    dim: usize,
}

impl GaussianMixture {
    /// Builds a mixture. Weights must sum to 1 within 1e-9; they are then
    /// renormalized exactly, so decimal-literal configs round-trip but a
    /// mistyped weight is rejected.
    pub fn new(components: Vec<GaussianComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(BerksonError::InvalidWeights("mixture has no components".into()));
        }
        let dim = components[0].mean.len();
        for c in &components {
            if c.mean.len() != dim {
                return Err(BerksonError::ShapeMismatch {
                    expected: format!("dimension {dim}"),
                    got: format!("dimension {}", c.mean.len()),
                });
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(BerksonError::InvalidWeights(format!(
                "weights sum to {total}, not 1 within {WEIGHT_SUM_TOL}"
            )));
        }
        let mut components = components;
        for c in &mut components {
            c.weight /= total;
        }
        Ok(Self { components, dim })
    }

    /// Single normal `φ_Σ(x − μ)` as a one-component mixture.
    pub fn single(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        Self::new(vec![GaussianComponent::new(1.0, mean, covariance)?])
    }

    /// Scalar-parameter builder for 1-D mixtures: `(weight, mean, variance)` triples.
    pub fn univariate(triples: &[(f64, f64, f64)]) -> Result<Self> {
        let comps = triples
            .iter()
            .map(|&(w, m, v)| {
                GaussianComponent::new(w, DVector::from_element(1, m), DMatrix::from_element(1, 1, v))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(comps)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    pub fn weights(&self) -> DVector<f64> {
        DVector::from_iterator(self.components.len(), self.components.iter().map(|c| c.weight))
    }

    /// Mixture mean `Σ_j α_j μ_j`.
    pub fn mean(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.dim);
        for c in &self.components {
            m += c.weight * &c.mean;
        }
        m
    }

    /// Mixture covariance `Σ_j α_j (Σ_j + μ_j μ_jᵀ) − μ̄ μ̄ᵀ`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let m = self.mean();
        let mut cov = DMatrix::zeros(self.dim, self.dim);
        for c in &self.components {
            cov += c.weight * (&c.covariance + &c.mean * c.mean.transpose());
        }
        cov - &m * m.transpose()
    }

    /// Density `Σ_j α_j φ_{Σ_j}(x − μ_j)`.
    pub fn pdf(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.dim {
            return Err(BerksonError::ShapeMismatch {
                expected: format!("point of dimension {}", self.dim),
                got: format!("dimension {}", x.len()),
            });
        }
        Ok(self
            .components
            .iter()
            .map(|c| c.weight * c.normal.pdf(&(x - &c.mean)))
            .sum())
    }

    /// 1-D convenience wrapper around [`Self::pdf`].
    pub fn pdf1(&self, x: f64) -> Result<f64> {
        self.pdf(&DVector::from_element(1, x))
    }

    /// Convolution with a mean-zero normal: each component covariance
    /// becomes `Σ_j + Σ_add`, weights and means unchanged. With
    /// `Σ_add = Σ_ε` this produces the true `f_Y` from `f_X`.
    pub fn convolve_with_normal(&self, sigma_add: &DMatrix<f64>) -> Result<Self> {
        check_symmetric(sigma_add)?;
        check_psd(sigma_add)?;
        if sigma_add.nrows() != self.dim {
            return Err(BerksonError::ShapeMismatch {
                expected: format!("{0}x{0}", self.dim),
                got: format!("{}x{}", sigma_add.nrows(), sigma_add.ncols()),
            });
        }
        let comps = self
            .components
            .iter()
            .map(|c| GaussianComponent::new(c.weight, c.mean.clone(), &c.covariance + sigma_add))
            .collect::<Result<Vec<_>>>()?;
        Self::new(comps)
    }

    /// Squared modulus of the mixture characteristic function,
    /// `|f̂(ω)|² = Σ_j Σ_k α_j α_k cos(ωᵀ(μ_j−μ_k)) e^{−½ωᵀ(Σ_j+Σ_k)ω}`.
    /// Real, even in ω, equal to 1 at the origin.
    pub fn char_fn_sq(&self, omega: &DVector<f64>) -> Result<f64> {
        if omega.len() != self.dim {
            return Err(BerksonError::ShapeMismatch {
                expected: format!("frequency of dimension {}", self.dim),
                got: format!("dimension {}", omega.len()),
            });
        }
        let m = self.components.len();
        let mut total = 0.0;
        for j in 0..m {
            let cj = &self.components[j];
            for k in j..m {
                let ck = &self.components[k];
                let quad = (omega.transpose() * (&cj.covariance + &ck.covariance) * omega)[(0, 0)];
                let delta = &cj.mean - &ck.mean;
                let term = cj.weight * ck.weight * omega.dot(&delta).cos() * (-0.5 * quad).exp();
                total += if j == k { term } else { 2.0 * term };
            }
        }
        Ok(total)
    }

    /// 1-D convenience wrapper around [`Self::char_fn_sq`].
    pub fn char_fn_sq1(&self, omega: f64) -> Result<f64> {
        self.char_fn_sq(&DVector::from_element(1, omega))
    }

    /// Draws `n` i.i.d. points. Draw `i` is a pure function of
    /// `(seed, i)` under the counter-based generator contract, so the
    /// output is bit-identical regardless of evaluation order.
    pub fn sample(&self, n: usize, seed: u64) -> Result<SampleMatrix> {
        if n == 0 {
            return Err(BerksonError::EmptySample);
        }
        let factors: Vec<DMatrix<f64>> =
            self.components.iter().map(|c| c.normal.factor()).collect();
        let mut data = DMatrix::zeros(n, self.dim);
        for i in 0..n {
            let mut rng = stream_rng(seed, i as u64);
            let u: f64 = rng.gen();
            let mut idx = self.components.len() - 1;
            let mut acc = 0.0;
            for (j, c) in self.components.iter().enumerate() {
                acc += c.weight;
                if u < acc {
                    idx = j;
                    break;
                }
            }
            let z = DVector::from_fn(self.dim, |_, _| rng.sample::<f64, _>(StandardNormal));
            let x = &self.components[idx].mean + &factors[idx] * z;
            data.row_mut(i).copy_from(&x.transpose());
        }
        SampleMatrix::new(data)
    }
}

/// Normal density `φ_Σ(x − μ)` for a single evaluation.
pub fn normal_pdf(x: &DVector<f64>, mean: &DVector<f64>, covariance: &DMatrix<f64>) -> Result<f64> {
    if x.len() != mean.len() || covariance.nrows() != x.len() {
        return Err(BerksonError::ShapeMismatch {
            expected: format!("vectors of length {} and matching covariance", x.len()),
            got: format!("mean {} cov {}x{}", mean.len(), covariance.nrows(), covariance.ncols()),
        });
    }
    Ok(ZeroMeanNormal::new(covariance)?.pdf(&(x - mean)))
}

/// `φ_Σ(0) = (2π)^{-p/2} det(Σ)^{-1/2}`, always strictly positive.
pub fn normal_pdf_at_zero(covariance: &DMatrix<f64>) -> Result<f64> {
    Ok(ZeroMeanNormal::new(covariance)?.pdf_at_zero())
}

/// `∫ φ_Σ(x−μ) φ_{Σ'}(x−μ') dx = φ_{Σ+Σ'}(μ−μ')`, the kernel of every
/// Ω-matrix entry in the exact MISE. Symmetric in swapping the pairs.
pub fn gaussian_product_integral(
    sigma: &DMatrix<f64>,
    mu: &DVector<f64>,
    sigma_p: &DMatrix<f64>,
    mu_p: &DVector<f64>,
) -> Result<f64> {
    if sigma.nrows() != sigma_p.nrows() || mu.len() != mu_p.len() || sigma.nrows() != mu.len() {
        return Err(BerksonError::ShapeMismatch {
            expected: "matching dimensions for both (Σ, μ) pairs".into(),
            got: format!("{} vs {}", sigma.nrows(), sigma_p.nrows()),
        });
    }
    normal_pdf(&(mu - mu_p), &DVector::zeros(mu.len()), &(sigma + sigma_p))
}

pub(crate) fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(BerksonError::ShapeMismatch {
            expected: "square matrix".into(),
            got: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    let scale = m.iter().fold(1.0f64, |a, &v| a.max(v.abs()));
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(BerksonError::InvalidCovariance(format!(
                    "asymmetric at ({i},{j}): {} vs {}",
                    m[(i, j)],
                    m[(j, i)]
                )));
            }
        }
    }
    Ok(())
}

/// Positive semidefinite check via symmetric eigenvalues (zero allowed).
pub(crate) fn check_psd(m: &DMatrix<f64>) -> Result<()> {
    let scale = m.iter().fold(1.0f64, |a, &v| a.max(v.abs()));
    let eigs = m.clone().symmetric_eigenvalues();
    if eigs.iter().any(|&e| e < -1e-10 * scale) {
        return Err(BerksonError::InvalidCovariance(format!(
            "not positive semidefinite (min eigenvalue {})",
            eigs.min()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn standard_normal_1d() -> GaussianMixture {
        GaussianMixture::univariate(&[(1.0, 0.0, 1.0)]).unwrap()
    }

    fn bimodal2() -> GaussianMixture {
        GaussianMixture::univariate(&[(0.5, -6.0, 1.0), (0.5, 6.0, 1.0)]).unwrap()
    }

    #[test]
    fn normal_pdf_known_values() {
        let z = DVector::from_element(1, 0.0);
        let one = DMatrix::from_element(1, 1, 1.0);
        let two = DMatrix::from_element(1, 1, 2.0);
        assert_relative_eq!(normal_pdf(&z, &z, &one).unwrap(), 0.3989422804, epsilon = 1e-10);
        assert_relative_eq!(normal_pdf(&z, &z, &two).unwrap(), 0.2820947918, epsilon = 1e-10);
        let z3 = DVector::zeros(3);
        let id3 = DMatrix::identity(3, 3);
        assert_relative_eq!(normal_pdf(&z3, &z3, &id3).unwrap(), 0.0634936359, epsilon = 1e-10);
    }

    #[test]
    fn normal_pdf_rejects_non_spd() {
        let z = DVector::zeros(2);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            normal_pdf(&z, &z, &bad),
            Err(BerksonError::InvalidCovariance(_))
        ));
    }

    #[test]
    fn mixture_pdf_values() {
        assert_relative_eq!(standard_normal_1d().pdf1(0.0).unwrap(), 0.3989422804, epsilon = 1e-10);
        // 0.5 φ₁(6) + 0.5 φ₁(−6)
        let expect = 0.3989422804014327 * (-18.0f64).exp();
        assert_relative_eq!(bimodal2().pdf1(0.0).unwrap(), expect, epsilon = 1e-20);
        assert_relative_eq!(expect, 6.0758e-9, max_relative = 1e-4);
    }

    #[test]
    fn mixture_pdf_integrates_to_one() {
        // Composite Simpson over ±10 max-std range.
        for mix in [standard_normal_1d(), bimodal2()] {
            let lo = -6.0 - 10.0;
            let hi = 6.0 + 10.0;
            let n = 4001;
            let hstep = (hi - lo) / (n - 1) as f64;
            let mut sum = 0.0;
            for i in 0..n {
                let w = if i == 0 || i == n - 1 {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                sum += w * mix.pdf1(lo + i as f64 * hstep).unwrap();
            }
            sum *= hstep / 3.0;
            assert_relative_eq!(sum, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn mixture_rejects_bad_weight_sum() {
        assert!(GaussianMixture::univariate(&[(0.7, 0.0, 1.0), (0.2, 3.0, 1.0)]).is_err());
    }

    #[test]
    fn convolution_adds_covariances() {
        let one = DMatrix::from_element(1, 1, 1.0);
        let conv = standard_normal_1d().convolve_with_normal(&one).unwrap();
        assert_eq!(conv.components().len(), 1);
        assert_eq!(conv.components()[0].covariance()[(0, 0)], 2.0);

        let zero = DMatrix::from_element(1, 1, 0.0);
        let same = standard_normal_1d().convolve_with_normal(&zero).unwrap();
        assert_eq!(same.components()[0].covariance()[(0, 0)], 1.0);

        let bimodal1 = GaussianMixture::univariate(&[(0.7, 0.0, 1.0), (0.3, 3.0, 1.0)]).unwrap();
        let c = bimodal1.convolve_with_normal(&DMatrix::from_element(1, 1, 0.125)).unwrap();
        assert_eq!(c.components()[0].covariance()[(0, 0)], 1.125);
        assert_eq!(c.components()[1].covariance()[(0, 0)], 1.125);
        assert_eq!(c.components()[1].mean()[0], 3.0);
    }

    #[test]
    fn convolution_composes_exactly() {
        let a = DMatrix::from_element(1, 1, 0.4);
        let b = DMatrix::from_element(1, 1, 0.35);
        let mix = GaussianMixture::univariate(&[(0.7, 0.0, 1.0), (0.3, 3.0, 2.0)]).unwrap();
        let two_step = mix.convolve_with_normal(&a).unwrap().convolve_with_normal(&b).unwrap();
        let one_step = mix.convolve_with_normal(&(&a + &b)).unwrap();
        for (c2, c1) in two_step.components().iter().zip(one_step.components()) {
            assert_eq!(c2.covariance()[(0, 0)], c1.covariance()[(0, 0)]);
        }
    }

    #[test]
    fn convolution_rejects_asymmetric() {
        let mix = GaussianMixture::single(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.5, 1.0]);
        assert!(mix.convolve_with_normal(&bad).is_err());
    }

    #[test]
    fn product_integral_known_values() {
        let one = DMatrix::from_element(1, 1, 1.0);
        let three = DMatrix::from_element(1, 1, 3.0);
        let z = DVector::from_element(1, 0.0);
        let two = DVector::from_element(1, 2.0);
        assert_relative_eq!(
            gaussian_product_integral(&one, &z, &one, &z).unwrap(),
            0.2820947918,
            epsilon = 1e-10
        );
        // φ₄(2), cross-checked against quadrature in the integration tests
        assert_relative_eq!(
            gaussian_product_integral(&one, &two, &three, &z).unwrap(),
            0.1209853623,
            epsilon = 1e-10
        );
        // symmetric under swapping the pairs
        assert_eq!(
            gaussian_product_integral(&one, &two, &three, &z).unwrap(),
            gaussian_product_integral(&three, &z, &one, &two).unwrap()
        );
    }

    #[test]
    fn char_fn_sq_basics() {
        let mix = bimodal2();
        assert_relative_eq!(mix.char_fn_sq1(0.0).unwrap(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(
            standard_normal_1d().char_fn_sq1(1.0).unwrap(),
            (-1.0f64).exp(),
            epsilon = 1e-14
        );
        for w in [0.3, 1.7, 4.1] {
            assert_eq!(mix.char_fn_sq1(w).unwrap(), mix.char_fn_sq1(-w).unwrap());
        }
    }

    #[test]
    fn char_fn_sq_matches_fourier_quadrature() {
        // |f̂(ω)|² = (∫cos(ωx)f(x)dx)² + (∫sin(ωx)f(x)dx)² by quadrature over [−15,15].
        let mix = bimodal2();
        let omega = std::f64::consts::PI / 6.0;
        let n = 30001;
        let (lo, hi) = (-15.0, 15.0);
        let h = (hi - lo) / (n - 1) as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for i in 0..n {
            let x = lo + i as f64 * h;
            let w = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let f = mix.pdf1(x).unwrap();
            re += w * f * (omega * x).cos();
            im += w * f * (omega * x).sin();
        }
        re *= h / 3.0;
        im *= h / 3.0;
        assert_relative_eq!(
            mix.char_fn_sq1(omega).unwrap(),
            re * re + im * im,
            epsilon = 1e-9
        );
    }

    #[test]
    fn sampling_is_deterministic() {
        let mix = bimodal2();
        let a = mix.sample(64, 123).unwrap();
        let b = mix.sample(64, 123).unwrap();
        assert_eq!(a.data(), b.data());
        let c = mix.sample(64, 124).unwrap();
        assert_ne!(a.data(), c.data());
    }

    #[test]
    fn sampling_rejects_empty() {
        assert!(matches!(standard_normal_1d().sample(0, 1), Err(BerksonError::EmptySample)));
    }

    #[test]
    fn sample_mean_within_clt_bound() {
        let n = 1_000_000;
        let s = standard_normal_1d().sample(n, 7).unwrap();
        let mean = s.data().column(0).sum() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn bimodal_halves_balance() {
        let n = 1_000_000;
        let s = bimodal2().sample(n, 9).unwrap();
        let frac = s.data().column(0).iter().filter(|&&x| x > 0.0).count() as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.002, "fraction {frac}");
    }

    #[test]
    fn mixture_moments() {
        let mix = GaussianMixture::univariate(&[(0.7, 0.0, 1.0), (0.3, 3.0, 1.0)]).unwrap();
        assert_relative_eq!(mix.mean()[0], 0.9, epsilon = 1e-12);
        // Var = Σ α (σ² + μ²) − μ̄² = 0.7·1 + 0.3·(1+9) − 0.81
        assert_relative_eq!(mix.covariance()[(0, 0)], 0.7 + 3.0 - 0.81, epsilon = 1e-12);
    }
}
