//! Closed-form spectral moments of the measures dμ and dν for Gaussian
//! models, in any dimension.
//!
//! For a Gaussian mixture `f_X` and Gaussian error the measures are sums
//! of cosine-modulated Gaussians in ω:
//!
//! ```text
//! dμ(ω) = Σ_{j,k} α_j α_k cos(ωᵀδ_{jk}) e^{−ωᵀA_{jk}ω} dω,
//!     A_{jk} = Σ_ε + (Σ_j + Σ_k)/2,   δ_{jk} = μ_j − μ_k
//! dν(ω) = e^{−ωᵀΣ_εω} dω − dμ(ω)
//! ```
//!
//! and every polynomial moment follows from δ-derivatives of
//! `∫ e^{−ωᵀAω} cos(ωᵀδ) dω = π^{p/2} det(A)^{−1/2} e^{−δᵀA⁻¹δ/4}`.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{BerksonError, Result};
use crate::spectral::BerksonModel;

/// `∫ e^{−ωᵀAω} cos(ωᵀδ) dω` together with `M = A⁻¹` and `u = Mδ`,
/// the ingredients of all higher moments.
struct CosGaussian {
    base: f64,
    m: DMatrix<f64>,
    u: DVector<f64>,
}

impl CosGaussian {
    fn new(a: &DMatrix<f64>, delta: &DVector<f64>) -> Result<Self> {
        let p = a.nrows();
        let chol = Cholesky::new(a.clone()).ok_or_else(|| {
            BerksonError::DivergentIntegral("spectral moment with singular decay matrix".into())
        })?;
        let det: f64 = chol.l().diagonal().iter().map(|d| d * d).product();
        let m = chol.inverse();
        let u = &m * delta;
        let base = std::f64::consts::PI.powf(p as f64 / 2.0) / det.sqrt()
            * (-0.25 * delta.dot(&u)).exp();
        Ok(Self { base, m, u })
    }

    fn moment0(&self) -> f64 {
        self.base
    }

    /// `∫ ω_i ω_j e^{−ωᵀAω} cos(ωᵀδ) dω`
    fn moment2(&self, i: usize, j: usize) -> f64 {
        self.base * (0.5 * self.m[(i, j)] - 0.25 * self.u[i] * self.u[j])
    }

    /// `∫ ω_a ω_b ω_c ω_d e^{−ωᵀAω} cos(ωᵀδ) dω`
    fn moment4(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let m = &self.m;
        let u = &self.u;
        let pair = 0.25 * (m[(a, b)] * m[(c, d)] + m[(a, c)] * m[(b, d)] + m[(a, d)] * m[(b, c)]);
        let cross = 0.125
            * (m[(a, b)] * u[c] * u[d]
                + m[(a, c)] * u[b] * u[d]
                + m[(a, d)] * u[b] * u[c]
                + m[(b, c)] * u[a] * u[d]
                + m[(b, d)] * u[a] * u[c]
                + m[(c, d)] * u[a] * u[b]);
        let quartic = 0.0625 * u[a] * u[b] * u[c] * u[d];
        self.base * (pair - cross + quartic)
    }
}

/// Moment evaluator for one Berkson model. Builds the (j,k) component
/// terms once; each public method is a weighted sum over them.
pub struct SpectralMomentEngine {
    mu_terms: Vec<(f64, CosGaussian)>,
    error_term: Option<CosGaussian>,
}

impl SpectralMomentEngine {
    pub fn new(model: &BerksonModel) -> Result<Self> {
        let comps = model.fx().components();
        let mut mu_terms = Vec::with_capacity(comps.len() * comps.len());
        for j in comps {
            for k in comps {
                let a = model.error_cov() + (j.covariance() + k.covariance()) * 0.5;
                let delta = j.mean() - k.mean();
                mu_terms.push((j.weight() * k.weight(), CosGaussian::new(&a, &delta)?));
            }
        }
        let p = model.dim();
        let error_term = CosGaussian::new(model.error_cov(), &DVector::zeros(p)).ok();
        Ok(Self { mu_terms, error_term })
    }

    fn mu_sum(&self, f: impl Fn(&CosGaussian) -> f64) -> f64 {
        self.mu_terms.iter().map(|(w, t)| w * f(t)).sum()
    }

    fn error_moment(&self, f: impl Fn(&CosGaussian) -> f64) -> Result<f64> {
        self.error_term.as_ref().map(f).ok_or_else(|| {
            BerksonError::DivergentIntegral(
                "dν moments require a strictly positive-definite error covariance".into(),
            )
        })
    }

    /// `∫ dμ`
    pub fn mu0(&self) -> f64 {
        self.mu_sum(CosGaussian::moment0)
    }

    /// `∫ ω_i ω_j dμ`
    pub fn mu2(&self, i: usize, j: usize) -> f64 {
        self.mu_sum(|t| t.moment2(i, j))
    }

    /// `∫ ω_a ω_b ω_c ω_d dμ`
    pub fn mu4(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.mu_sum(|t| t.moment4(a, b, c, d))
    }

    /// `∫ dν`
    pub fn nu0(&self) -> Result<f64> {
        Ok(self.error_moment(CosGaussian::moment0)? - self.mu0())
    }

    /// `∫ ω_i ω_j dν`
    pub fn nu2(&self, i: usize, j: usize) -> Result<f64> {
        Ok(self.error_moment(|t| t.moment2(i, j))? - self.mu2(i, j))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussmix::GaussianMixture;
    use crate::quad::{integrate_half_line, truncation_radius};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn quadrature_mu_moment(model: &BerksonModel, power: u32) -> f64 {
        let se = model.error_cov()[(0, 0)];
        let fx = model.fx();
        let min_var = fx
            .components()
            .iter()
            .map(|c| c.covariance()[(0, 0)])
            .fold(f64::INFINITY, f64::min);
        let hi = truncation_radius(se + min_var);
        2.0 * integrate_half_line(
            |w| w.powi(power as i32) * (-se * w * w).exp() * fx.char_fn_sq1(w).unwrap(),
            hi,
            0.25,
        )
    }

    fn quadrature_nu_moment(model: &BerksonModel, power: u32) -> f64 {
        let se = model.error_cov()[(0, 0)];
        let fx = model.fx();
        let hi = truncation_radius(se);
        2.0 * integrate_half_line(
            |w| {
                w.powi(power as i32) * (-se * w * w).exp() * (1.0 - fx.char_fn_sq1(w).unwrap())
            },
            hi,
            0.25,
        )
    }

    #[test]
    fn univariate_moments_match_quadrature() {
        let mixtures = [
            GaussianMixture::univariate(&[(1.0, 0.0, 1.0)]).unwrap(),
            GaussianMixture::univariate(&[(0.7, 0.0, 1.0), (0.3, 3.0, 1.0)]).unwrap(),
            GaussianMixture::univariate(&[(0.4, -4.0, 2.0), (0.2, 0.0, 0.3), (0.4, 3.0, 1.0)])
                .unwrap(),
        ];
        for mix in mixtures {
            for se in [0.125, 0.5, 2.0] {
                let model = BerksonModel::univariate(mix.clone(), se).unwrap();
                let eng = SpectralMomentEngine::new(&model).unwrap();
                assert_relative_eq!(
                    eng.mu0(),
                    quadrature_mu_moment(&model, 0),
                    max_relative = 1e-9
                );
                assert_relative_eq!(
                    eng.mu2(0, 0),
                    quadrature_mu_moment(&model, 2),
                    max_relative = 1e-9
                );
                assert_relative_eq!(
                    eng.mu4(0, 0, 0, 0),
                    quadrature_mu_moment(&model, 4),
                    max_relative = 1e-9
                );
                assert_relative_eq!(
                    eng.nu0().unwrap(),
                    quadrature_nu_moment(&model, 0),
                    max_relative = 1e-9
                );
                assert_relative_eq!(
                    eng.nu2(0, 0).unwrap(),
                    quadrature_nu_moment(&model, 2),
                    max_relative = 1e-9
                );
            }
        }
    }

    #[test]
    fn bivariate_product_case_matches_worked_closed_forms() {
        // f_X = N(0, I₂), Σ_ε = diag(σ₁², σ₂²): the integrals factorize and
        //   ∫ω_i² dν = (π/2)(σ_i⁻³ σ_other⁻¹ − ((1+σ_i²)³(1+σ_other²))^{-1/2})
        //   ∫ω_1⁴ dμ = (3/4)√(π/(1+σ₁²)⁵)·√(π/(1+σ₂²))
        //   ∫ω_1²ω_2² dμ = ¼ π ((1+σ₁²)³(1+σ₂²)³)^{-1/2}
        let (s1, s2) = (1.0f64, 0.25f64); // variances
        let fx = GaussianMixture::single(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
        let err = DMatrix::from_diagonal(&DVector::from_vec(vec![s1, s2]));
        let model = BerksonModel::new(fx, err).unwrap();
        let eng = SpectralMomentEngine::new(&model).unwrap();

        let (sd1, sd2) = (s1.sqrt(), s2.sqrt());
        let v1 = PI / 2.0 * (sd1.powi(-3) * sd2.powi(-1) - ((1.0 + s1).powi(3) * (1.0 + s2)).powf(-0.5));
        let v2 = PI / 2.0 * (sd2.powi(-3) * sd1.powi(-1) - ((1.0 + s2).powi(3) * (1.0 + s1)).powf(-0.5));
        assert_relative_eq!(eng.nu2(0, 0).unwrap(), v1, max_relative = 1e-12);
        assert_relative_eq!(eng.nu2(1, 1).unwrap(), v2, max_relative = 1e-12);

        let b11x4 = 0.75 * (PI / (1.0 + s1).powi(5)).sqrt() * (PI / (1.0 + s2)).sqrt();
        let b12x4 = 0.25 * PI * ((1.0 + s1).powi(3) * (1.0 + s2).powi(3)).powf(-0.5);
        assert_relative_eq!(eng.mu4(0, 0, 0, 0), b11x4, max_relative = 1e-12);
        assert_relative_eq!(eng.mu4(0, 0, 1, 1), b12x4, max_relative = 1e-12);

        // odd-power moments vanish by symmetry
        assert_relative_eq!(eng.mu2(0, 1), 0.0, epsilon = 1e-15);
        assert_relative_eq!(eng.mu4(0, 0, 0, 1), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn bivariate_shifted_mixture_matches_tensor_quadrature() {
        // Two-component p=2 mixture with a mean offset: oracle is plain
        // tensor-product Simpson over [−L, L]².
        let comps = vec![
            crate::gaussmix::GaussianComponent::new(
                0.6,
                DVector::from_vec(vec![0.0, 0.0]),
                DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.8]),
            )
            .unwrap(),
            crate::gaussmix::GaussianComponent::new(
                0.4,
                DVector::from_vec(vec![2.0, -1.0]),
                DMatrix::identity(2, 2) * 0.7,
            )
            .unwrap(),
        ];
        let fx = GaussianMixture::new(comps).unwrap();
        let err = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.9]));
        let model = BerksonModel::new(fx.clone(), err.clone()).unwrap();
        let eng = SpectralMomentEngine::new(&model).unwrap();

        let l = 9.0;
        let n = 601;
        let h = 2.0 * l / (n - 1) as f64;
        let weight = |i: usize| -> f64 {
            if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            }
        };
        let mut m0 = 0.0;
        let mut m2 = 0.0; // ω₁²
        let mut m4 = 0.0; // ω₁²ω₂²
        for i in 0..n {
            let w1 = -l + i as f64 * h;
            for j in 0..n {
                let w2 = -l + j as f64 * h;
                let omega = DVector::from_vec(vec![w1, w2]);
                let quad = (omega.transpose() * &err * &omega)[(0, 0)];
                let dmu = (-quad).exp() * fx.char_fn_sq(&omega).unwrap();
                let w = weight(i) * weight(j);
                m0 += w * dmu;
                m2 += w * w1 * w1 * dmu;
                m4 += w * w1 * w1 * w2 * w2 * dmu;
            }
        }
        let scale = h * h / 9.0;
        assert_relative_eq!(eng.mu0(), m0 * scale, max_relative = 1e-8);
        assert_relative_eq!(eng.mu2(0, 0), m2 * scale, max_relative = 1e-8);
        assert_relative_eq!(eng.mu4(0, 0, 1, 1), m4 * scale, max_relative = 1e-8);
    }

    #[test]
    fn nu_moments_need_positive_definite_error() {
        let fx = GaussianMixture::univariate(&[(1.0, 0.0, 1.0)]).unwrap();
        let model = BerksonModel::univariate(fx, 0.0).unwrap();
        let eng = SpectralMomentEngine::new(&model).unwrap();
        assert!(eng.nu0().is_err());
        assert!(eng.mu0().is_finite());
    }
}
