//! Characteristic-function form of the MISE and the scalar asymptotic
//! moment integrals, by deterministic quadrature.
//!
//! For the estimator with Gaussian kernel `K̂(u) = e^{−u²Σ_K/2}`,
//!
//! ```text
//! (2π) MISE(h) = ∫ |1 − K̂(hω)|² dμ(ω) + n⁻¹ ∫ |K̂(hω)|² dν(ω)
//!     dμ(ω) = |f̂_ε(ω)|² |f̂_X(ω)|² dω
//!     dν(ω) = |f̂_ε(ω)|² (1 − |f̂_X(ω)|²) dω
//! ```
//!
//! This route never touches the mixture algebra of the exact module, so
//! the two serve as independent oracles for each other. Restricted to
//! p = 1; every multivariate experiment goes through the exact module.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{BerksonError, Result};
use crate::gaussmix::{check_psd, check_symmetric, GaussianMixture, ZeroMeanNormal};
use crate::quad::{integrate_half_line, truncation_radius};

/// A Berkson setup: the error-free density `f_X`, the known error
/// covariance `Σ_ε`, and the kernel covariance `Σ_K` (identity unless
/// overridden). The target of estimation is `f_Y = f_X ⊛ φ_{Σ_ε}`.
#[derive(Clone, Debug)]
pub struct BerksonModel {
    fx: GaussianMixture,
    error_cov: DMatrix<f64>,
    kernel_cov: DMatrix<f64>,
}

impl BerksonModel {
    /// Model with the identity kernel covariance.
    pub fn new(fx: GaussianMixture, error_cov: DMatrix<f64>) -> Result<Self> {
        let kernel = DMatrix::identity(fx.dim(), fx.dim());
        Self::with_kernel(fx, error_cov, kernel)
    }

    /// Model with an explicit SPD kernel covariance.
    pub fn with_kernel(
        fx: GaussianMixture,
        error_cov: DMatrix<f64>,
        kernel_cov: DMatrix<f64>,
    ) -> Result<Self> {
        let p = fx.dim();
        if error_cov.nrows() != p || error_cov.ncols() != p {
            return Err(BerksonError::ShapeMismatch {
                expected: format!("{p}x{p} error covariance"),
                got: format!("{}x{}", error_cov.nrows(), error_cov.ncols()),
            });
        }
        check_symmetric(&error_cov)?;
        check_psd(&error_cov)?;
        if kernel_cov.nrows() != p || kernel_cov.ncols() != p {
            return Err(BerksonError::ShapeMismatch {
                expected: format!("{p}x{p} kernel covariance"),
                got: format!("{}x{}", kernel_cov.nrows(), kernel_cov.ncols()),
            });
        }
        ZeroMeanNormal::new(&kernel_cov)?; // SPD check
        Ok(Self { fx, error_cov, kernel_cov })
    }

    /// Scalar shorthand for 1-D models with error variance `sigma_eps2`.
    pub fn univariate(fx: GaussianMixture, sigma_eps2: f64) -> Result<Self> {
        if fx.dim() != 1 {
            return Err(BerksonError::UnsupportedDimension(format!(
                "univariate constructor got dimension {}",
                fx.dim()
            )));
        }
        Self::new(fx, DMatrix::from_element(1, 1, sigma_eps2))
    }

    /// Isotropic error `σ_ε² I` in the mixture's dimension.
    pub fn isotropic(fx: GaussianMixture, sigma_eps2: f64) -> Result<Self> {
        let p = fx.dim();
        Self::new(fx, DMatrix::identity(p, p) * sigma_eps2)
    }

    pub fn fx(&self) -> &GaussianMixture {
        &self.fx
    }

    pub fn error_cov(&self) -> &DMatrix<f64> {
        &self.error_cov
    }

    pub fn kernel_cov(&self) -> &DMatrix<f64> {
        &self.kernel_cov
    }

    pub fn dim(&self) -> usize {
        self.fx.dim()
    }

    /// The target density `f_Y`, i.e. `f_X` convolved with the error.
    pub fn fy(&self) -> Result<GaussianMixture> {
        self.fx.convolve_with_normal(&self.error_cov)
    }

    /// Same mixture and kernel with the error covariance replaced.
    pub fn with_error_cov(&self, error_cov: DMatrix<f64>) -> Result<Self> {
        Self::with_kernel(self.fx.clone(), error_cov, self.kernel_cov.clone())
    }

    pub(crate) fn require_univariate(&self, what: &str) -> Result<()> {
        if self.dim() != 1 {
            return Err(BerksonError::UnsupportedDimension(format!(
                "{what} is defined for p = 1, model has p = {}",
                self.dim()
            )));
        }
        Ok(())
    }

    pub(crate) fn sigma_eps2(&self) -> f64 {
        self.error_cov[(0, 0)]
    }

    pub(crate) fn kernel_var(&self) -> f64 {
        self.kernel_cov[(0, 0)]
    }

    /// Smallest component variance of `f_X` (p = 1), the slowest decay
    /// rate contributed by `|f̂_X|²`.
    fn min_component_var(&self) -> f64 {
        self.fx
            .components()
            .iter()
            .map(|c| c.covariance()[(0, 0)])
            .fold(f64::INFINITY, f64::min)
    }

    /// Shortest cosine period in `|f̂_X|²`, for quadrature panel sizing.
    fn osc_scale(&self) -> f64 {
        let mut max_delta = 0.0f64;
        for (j, cj) in self.fx.components().iter().enumerate() {
            for ck in &self.fx.components()[j + 1..] {
                max_delta = max_delta.max((cj.mean()[0] - ck.mean()[0]).abs());
            }
        }
        if max_delta == 0.0 {
            f64::INFINITY
        } else {
            std::f64::consts::PI / max_delta
        }
    }
}

/// The three moment integrals behind the asymptotic bandwidth:
/// `t0 = ∫dν`, `t2 = ∫(ωᵀΣ_Kω)dν`, `t4 = ∫(ωᵀΣ_Kω)²dμ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralMoments {
    pub t0: f64,
    pub t2: f64,
    pub t4: f64,
}

/// Squared modulus of the error characteristic function, `ω ↦ |f̂_ε(ω)|²`.
///
/// Carries its own truncation radius so the rule-of-thumb bandwidth
/// integrals can be evaluated for any smooth error family, not just the
/// Gaussian one.
#[derive(Clone)]
pub struct ErrorCharSq {
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    truncation: f64,
}

impl std::fmt::Debug for ErrorCharSq {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ErrorCharSq").field("truncation", &self.truncation).finish()
    }
}

impl ErrorCharSq {
    /// Gaussian error with variance `sigma_eps2`: `|f̂_ε(ω)|² = e^{−σ_ε²ω²}`.
    pub fn gaussian(sigma_eps2: f64) -> Result<Self> {
        if sigma_eps2 < 0.0 || !sigma_eps2.is_finite() {
            return Err(BerksonError::Domain(format!("error variance {sigma_eps2} must be ≥ 0")));
        }
        let truncation =
            if sigma_eps2 > 0.0 { truncation_radius(sigma_eps2) } else { f64::INFINITY };
        Ok(Self {
            eval: Arc::new(move |w| (-sigma_eps2 * w * w).exp()),
            truncation,
        })
    }

    /// Custom evaluator. `truncation` must bound the support of
    /// `(1 + ω⁴)|f̂_ε(ω)|²` above 1e-16; infinite truncation marks a
    /// non-square-integrable error.
    pub fn custom<F>(eval: F, truncation: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self { eval: Arc::new(eval), truncation }
    }

    pub fn eval(&self, omega: f64) -> f64 {
        (self.eval)(omega)
    }

    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    pub fn is_square_integrable(&self) -> bool {
        self.truncation.is_finite()
    }
}

/// `error_char_sq_gaussian` over a PSD covariance; p = 1 form.
pub fn error_char_sq_gaussian(error_cov: &DMatrix<f64>) -> Result<ErrorCharSq> {
    check_symmetric(error_cov)?;
    check_psd(error_cov)?;
    if error_cov.nrows() != 1 {
        return Err(BerksonError::UnsupportedDimension(
            "scalar error characteristic function requires p = 1".into(),
        ));
    }
    ErrorCharSq::gaussian(error_cov[(0, 0)])
}

/// Exact MISE of the spectral representation, `p = 1`, by adaptive
/// quadrature on the even half line (doubled).
pub fn fourier_mise(model: &BerksonModel, h: f64, n: usize) -> Result<f64> {
    model.require_univariate("fourier_mise")?;
    if h < 0.0 || !h.is_finite() {
        return Err(BerksonError::Domain(format!("bandwidth {h} must be ≥ 0")));
    }
    if n == 0 {
        return Err(BerksonError::Domain("sample size must be ≥ 1".into()));
    }
    let se = model.sigma_eps2();
    let sk = model.kernel_var();
    let smoothing = h * h * sk;
    if se + smoothing == 0.0 {
        return Err(BerksonError::DegenerateModel(
            "error variance and bandwidth are both zero".into(),
        ));
    }
    let fx = model.fx();
    let osc = model.osc_scale();

    // Bias: ∫ (1 − e^{−h²Σ_Kω²/2})² |f̂_ε|² |f̂_X|² dω. Exactly zero at h = 0.
    let bias = if h == 0.0 {
        0.0
    } else {
        let decay = se + model.min_component_var();
        let hi = truncation_radius(decay);
        2.0 * integrate_half_line(
            |w| {
                let khat = (-0.5 * smoothing * w * w).exp();
                let d = 1.0 - khat;
                d * d * (-se * w * w).exp() * fx.char_fn_sq1(w).expect("dim checked")
            },
            hi,
            osc,
        )
    };

    // Variance: n⁻¹ ∫ e^{−h²Σ_Kω²} |f̂_ε|² (1 − |f̂_X|²) dω.
    let hi = truncation_radius(se + smoothing);
    let var = 2.0 * integrate_half_line(
        |w| {
            (-(smoothing + se) * w * w).exp()
                * (1.0 - fx.char_fn_sq1(w).expect("dim checked"))
        },
        hi,
        osc,
    ) / n as f64;

    Ok((bias + var) / (2.0 * std::f64::consts::PI))
}

/// The integrated squared-bias factor `∫ |1 − K̂(hω)|² dμ` alone;
/// nondecreasing in `h` for the Gaussian kernel.
pub fn bias_spectral_term(model: &BerksonModel, h: f64) -> Result<f64> {
    model.require_univariate("bias_spectral_term")?;
    if h < 0.0 {
        return Err(BerksonError::Domain(format!("bandwidth {h} must be ≥ 0")));
    }
    if h == 0.0 {
        return Ok(0.0);
    }
    let se = model.sigma_eps2();
    let smoothing = h * h * model.kernel_var();
    let fx = model.fx();
    let hi = truncation_radius(se + model.min_component_var());
    Ok(2.0 * integrate_half_line(
        |w| {
            let d = 1.0 - (-0.5 * smoothing * w * w).exp();
            d * d * (-se * w * w).exp() * fx.char_fn_sq1(w).expect("dim checked")
        },
        hi,
        model.osc_scale(),
    ))
}

/// Moment integrals `t0, t2, t4` for the asymptotic bandwidth (p = 1).
///
/// Requires `Σ_ε ≻ 0`: with no error the dν integrals diverge because
/// `|f̂_ε|² ≡ 1` is not integrable.
pub fn spectral_moments(model: &BerksonModel) -> Result<SpectralMoments> {
    model.require_univariate("spectral_moments")?;
    let se = model.sigma_eps2();
    if se <= 0.0 {
        return Err(BerksonError::DivergentIntegral(
            "t0 requires a square-integrable error density (σ_ε² > 0)".into(),
        ));
    }
    let sk = model.kernel_var();
    let fx = model.fx();
    let osc = model.osc_scale();

    let hi_nu = truncation_radius(se);
    let t0 = 2.0 * integrate_half_line(
        |w| (-se * w * w).exp() * (1.0 - fx.char_fn_sq1(w).expect("dim checked")),
        hi_nu,
        osc,
    );
    let t2 = 2.0 * integrate_half_line(
        |w| sk * w * w * (-se * w * w).exp() * (1.0 - fx.char_fn_sq1(w).expect("dim checked")),
        hi_nu,
        osc,
    );
    let hi_mu = truncation_radius(se + model.min_component_var());
    let t4 = 2.0 * integrate_half_line(
        |w| {
            let q = sk * w * w;
            q * q * (-se * w * w).exp() * fx.char_fn_sq1(w).expect("dim checked")
        },
        hi_mu,
        osc,
    );

    // The integrands are nonnegative; clamp quadrature noise.
    Ok(SpectralMoments { t0: t0.max(0.0), t2: t2.max(0.0), t4: t4.max(0.0) })
}
