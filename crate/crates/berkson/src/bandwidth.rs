//! Bandwidth selectors: exact scalar optimizers for estimating `f_Y` and
//! `f_X`, the asymptotic bandwidth `h*_Y = √(2∫(ωᵀΣ_Kω)dν / n∫(ωᵀΣ_Kω)²dμ)`,
//! rule-of-thumb estimators, Silverman's rule, and the diagonal/full
//! bandwidth-matrix analyses.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{BerksonError, Result};
use crate::mise_exact::{exact_mise, mise_for_fx, BandwidthSpec};
use crate::moments::SpectralMomentEngine;
use crate::quad::{integrate_half_line, truncation_radius};
use crate::spectral::{spectral_moments, BerksonModel, ErrorCharSq};

/// Which MISE the scalar bandwidth minimizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BandwidthTarget {
    /// `h_Y`: minimize the MISE for estimating `f_Y`.
    Fy,
    /// `h_X`: minimize the error-free MISE for estimating `f_X`.
    Fx,
}

/// Outcome of a scalar bandwidth optimization.
#[derive(Clone, Debug)]
pub struct BandwidthResult {
    pub value: f64,
    /// MISE at the optimum.
    pub objective: f64,
    /// Refinement iterations after the coarse scan.
    pub iterations: usize,
    pub bracket: (f64, f64),
    /// True when the minimum sits at `h = 0` (no interior h improves on
    /// the kernel-free estimator).
    pub at_boundary: bool,
}

/// Quadratic form `sᵀBs − n⁻¹sᵀV` describing the second-order MISE terms.
#[derive(Clone, Debug)]
pub struct QuadraticForm {
    pub b: DMatrix<f64>,
    pub v: DVector<f64>,
}

impl QuadraticForm {
    pub fn objective(&self, s: &DVector<f64>, n: usize) -> f64 {
        (s.transpose() * &self.b * s)[(0, 0)] - s.dot(&self.v) / n as f64
    }
}

/// Constrained and unconstrained minimizers of the diagonal
/// squared-bandwidth program `min_{s ≥ 0} sᵀB′s − n⁻¹sᵀV′`.
#[derive(Clone, Debug)]
pub struct DiagonalQp {
    /// Minimizer over `s ≥ 0` (elementwise).
    pub constrained: DVector<f64>,
    /// Stationary point `(2n)⁻¹B′⁻¹V′` ignoring the constraint; may have
    /// negative entries.
    pub unconstrained: DVector<f64>,
    pub objective: f64,
    pub form: QuadraticForm,
}

const COARSE_GRID: usize = 2001;
const BRENT_TOL: f64 = 1e-8;

/// Error-free Silverman scale from the model's true variance, the unit
/// for the search bracket.
fn silverman_scale(model: &BerksonModel, n: usize) -> f64 {
    let p = model.dim() as f64;
    let sigma = (model.fx().covariance().trace() / p).sqrt();
    0.9 * sigma * (n as f64).powf(-0.2)
}

/// Exact scalar bandwidth by coarse scan plus Brent refinement over
/// `[0, 5·Silverman]`, expanded once by 4× if the minimum sits at the
/// upper edge.
pub fn optimal_scalar_bandwidth(
    model: &BerksonModel,
    n: usize,
    target: BandwidthTarget,
) -> Result<BandwidthResult> {
    if n == 0 {
        return Err(BerksonError::Domain("sample size must be ≥ 1".into()));
    }
    let objective = |h: f64| -> Result<f64> {
        let bw = BandwidthSpec::Scalar(h);
        match target {
            BandwidthTarget::Fy => exact_mise(model, &bw, n),
            BandwidthTarget::Fx => mise_for_fx(model, &bw, n),
        }
    };

    let mut hi = 5.0 * silverman_scale(model, n);
    for expansion in 0..2 {
        let step = hi / (COARSE_GRID - 1) as f64;
        // h = 0 is in the domain only when targeting f_Y.
        let first = if target == BandwidthTarget::Fy { 0 } else { 1 };
        let mut best = (first, f64::INFINITY);
        let mut values = vec![f64::NAN; COARSE_GRID];
        for (i, slot) in values.iter_mut().enumerate().skip(first) {
            let v = objective(i as f64 * step)?;
            *slot = v;
            if v < best.1 {
                best = (i, v);
            }
        }
        if best.0 == COARSE_GRID - 1 {
            if expansion == 1 {
                return Err(BerksonError::BracketExhausted { lo: 0.0, hi });
            }
            hi *= 4.0;
            continue;
        }

        let bl = if best.0 > first { (best.0 - 1) as f64 * step } else { best.0 as f64 * step };
        let bh = (best.0 + 1) as f64 * step;
        let (bx, bf, iters) = brent_min(&objective, bl, bh, BRENT_TOL)?;

        // The minimum over bracket grid and refinement; h = 0 wins ties.
        let mut value = bx;
        let mut obj = bf;
        for (i, &v) in values.iter().enumerate().take(best.0 + 2).skip(first) {
            if v <= obj {
                value = i as f64 * step;
                obj = v;
            }
        }
        let at_boundary = value == 0.0;
        return Ok(BandwidthResult {
            value,
            objective: obj,
            iterations: iters,
            bracket: (bl, bh),
            at_boundary,
        });
    }
    unreachable!("loop returns or errors");
}

/// Brent minimization (golden section with parabolic steps) of a fallible
/// objective on `[a, b]`.
fn brent_min<F>(f: &F, a: f64, b: f64, tol: f64) -> Result<(f64, f64, usize)>
where
    F: Fn(f64) -> Result<f64>,
{
    const GOLD: f64 = 0.381_966_011_250_105;
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut x = a + GOLD * (b - a);
    let mut w = x;
    let mut v = x;
    let mut fx = f(x)?;
    let mut fw = fx;
    let mut fv = fx;
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    let eps = f64::EPSILON.sqrt();
    let mut iters = 0;

    for _ in 0..200 {
        iters += 1;
        let m = 0.5 * (a + b);
        let tol1 = tol.max(eps * x.abs());
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut use_golden = true;
        if e.abs() > tol1 {
            // parabola through (v, fv), (w, fw), (x, fx)
            let r = (x - w) * (fx - fv);
            let q0 = (x - v) * (fx - fw);
            let mut p = (x - v) * q0 - (x - w) * r;
            let mut q = 2.0 * (q0 - r);
            if q > 0.0 {
                p = -p;
            } else {
                q = -q;
            }
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                use_golden = false;
            }
        }
        if use_golden {
            e = if x < m { b - x } else { a - x };
            d = GOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u)?;
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Ok((x, fx, iters))
}

/// Asymptotically optimal scalar bandwidth `h*_Y = √(2t₂/(n·t₄))`, of
/// order n^{-1/2}. Diverges as σ_ε² → 0.
pub fn asymptotic_bandwidth(model: &BerksonModel, n: usize) -> Result<f64> {
    model.require_univariate("asymptotic_bandwidth")?;
    if n == 0 {
        return Err(BerksonError::Domain("sample size must be ≥ 1".into()));
    }
    let m = spectral_moments(model)?;
    Ok((2.0 * m.t2 / (n as f64 * m.t4)).sqrt())
}

/// Rule-of-thumb `h̃_Y`: the asymptotic bandwidth with
/// `|f̂_X(ω)|² := e^{−σ̃_X²ω²}` substituted, evaluated by quadrature for
/// a general square-integrable error characteristic function.
pub fn rule_of_thumb_hy(sample_var: f64, error: &ErrorCharSq, n: usize) -> Result<f64> {
    if sample_var.is_nan() || sample_var <= 0.0 {
        return Err(BerksonError::Domain(format!("sample variance {sample_var} must be > 0")));
    }
    if n == 0 {
        return Err(BerksonError::Domain("sample size must be ≥ 1".into()));
    }
    if !error.is_square_integrable() {
        return Err(BerksonError::DivergentIntegral(
            "rule-of-thumb bandwidth requires a square-integrable error density".into(),
        ));
    }
    let hi_num = error.truncation();
    let num = 2.0 * integrate_half_line(
        |w| w * w * error.eval(w) * (1.0 - (-sample_var * w * w).exp()),
        hi_num,
        f64::INFINITY,
    );
    let hi_den = error.truncation().min(truncation_radius(sample_var));
    let den = 2.0 * integrate_half_line(
        |w| w.powi(4) * (-sample_var * w * w).exp() * error.eval(w),
        hi_den,
        f64::INFINITY,
    );
    Ok((2.0 * num / (n as f64 * den)).sqrt())
}

/// Closed form of [`rule_of_thumb_hy`] for mean-zero normal error:
/// `h̃_Y = √((4/3n)[(σ̃_X²+σ_ε²)^{5/2}/(σ_ε²)^{3/2} − (σ̃_X²+σ_ε²)])`.
/// The radicand is positive for every σ̃_X² > 0.
pub fn rule_of_thumb_hy_gaussian(sample_var: f64, sigma_eps2: f64, n: usize) -> Result<f64> {
    if sample_var.is_nan() || sample_var <= 0.0 {
        return Err(BerksonError::Domain(format!("sample variance {sample_var} must be > 0")));
    }
    if n == 0 {
        return Err(BerksonError::Domain("sample size must be ≥ 1".into()));
    }
    if sigma_eps2.is_nan() || sigma_eps2 <= 0.0 {
        return Err(BerksonError::DivergentIntegral(
            "h̃_Y diverges as the error variance tends to 0".into(),
        ));
    }
    let total = sample_var + sigma_eps2;
    let radicand = 4.0 / (3.0 * n as f64) * (total.powf(2.5) / sigma_eps2.powf(1.5) - total);
    Ok(radicand.sqrt())
}

/// Silverman's rule of thumb for `h_X`:
/// `0.9 · min(IQR̃/1.34, σ̃_X) / n^{1/5}`.
pub fn silverman_hx(sample_sd: f64, sample_iqr: f64, n: usize) -> Result<f64> {
    if !(sample_sd.is_finite() && sample_iqr.is_finite()) || sample_sd <= 0.0 || sample_iqr <= 0.0 {
        return Err(BerksonError::Domain(
            "Silverman's rule needs positive spread estimates".into(),
        ));
    }
    if n == 0 {
        return Err(BerksonError::Domain("sample size must be ≥ 1".into()));
    }
    Ok(0.9 * (sample_iqr / 1.34).min(sample_sd) / (n as f64).powf(0.2))
}

/// Minimizes `sᵀBs − n⁻¹sᵀV` over `s ≥ 0` by enumerating all 2^k active
/// sets: fix a subset to zero, solve the reduced strictly convex system,
/// keep the feasible candidate with the smallest objective.
pub fn solve_nonneg_qp(form: &QuadraticForm, n: usize) -> Result<(DVector<f64>, f64)> {
    let k = form.v.len();
    debug_assert!(k <= 16);
    let mut best_s = DVector::zeros(k);
    let mut best_obj = 0.0; // the s = 0 candidate
    for mask in 1u32..(1 << k) {
        let free: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let kf = free.len();
        let mut bf = DMatrix::zeros(kf, kf);
        let mut vf = DVector::zeros(kf);
        for (r, &i) in free.iter().enumerate() {
            vf[r] = form.v[i];
            for (c, &j) in free.iter().enumerate() {
                bf[(r, c)] = form.b[(i, j)];
            }
        }
        let chol = match Cholesky::new(bf) {
            Some(c) => c,
            None => {
                return Err(BerksonError::Conditioning(
                    "reduced QP matrix is not positive definite".into(),
                ))
            }
        };
        let sf = chol.solve(&vf) / (2.0 * n as f64);
        if sf.iter().any(|&v| v < 0.0) {
            continue;
        }
        let mut s = DVector::zeros(k);
        for (r, &i) in free.iter().enumerate() {
            s[i] = sf[r];
        }
        let obj = form.objective(&s, n);
        if obj < best_obj {
            best_obj = obj;
            best_s = s;
        }
    }
    Ok((best_s, best_obj))
}

/// Diagonal squared-bandwidth program of the asymptotic MISE expansion,
/// with `B′_{ij} = ¼∫ω_i²ω_j²dμ` and `V′_i = ∫ω_i²dν` in closed form.
///
/// Requires the identity kernel covariance (the simplification that
/// produces this program) and `Σ_ε ≻ 0`.
pub fn diagonal_qp(model: &BerksonModel, n: usize) -> Result<DiagonalQp> {
    let p = model.dim();
    if p > 3 {
        return Err(BerksonError::UnsupportedDimension(format!(
            "diagonal QP enumerates 2^p active sets; p = {p} > 3"
        )));
    }
    if model.kernel_cov() != &DMatrix::identity(p, p) {
        return Err(BerksonError::Domain(
            "diagonal bandwidth program assumes Σ_K = I".into(),
        ));
    }
    if n == 0 {
        return Err(BerksonError::Domain("sample size must be ≥ 1".into()));
    }
    let engine = SpectralMomentEngine::new(model)?;
    let mut b = DMatrix::zeros(p, p);
    let mut v = DVector::zeros(p);
    for i in 0..p {
        v[i] = engine.nu2(i, i)?;
        for j in 0..p {
            b[(i, j)] = 0.25 * engine.mu4(i, i, j, j);
        }
    }
    let form = QuadraticForm { b: b.clone(), v: v.clone() };
    let chol = Cholesky::new(b).ok_or_else(|| {
        BerksonError::Conditioning("B′ is numerically singular".into())
    })?;
    let unconstrained = chol.solve(&v) / (2.0 * n as f64);
    let (constrained, objective) = solve_nonneg_qp(&form, n)?;
    Ok(DiagonalQp { constrained, unconstrained, objective, form })
}

/// Full-bandwidth quadratic form over `vec(S)` for p = 2:
/// `B = ¼∫(ω⊗ω)(ω⊗ω)ᵀdμ`, `V = ∫(ω⊗ω)dν`. The duplicated `ω₁ω₂`
/// coordinate makes `B` exactly singular.
pub fn full_bandwidth_matrices(model: &BerksonModel) -> Result<QuadraticForm> {
    if model.dim() != 2 {
        return Err(BerksonError::UnsupportedDimension(
            "full-bandwidth analysis is worked out for p = 2".into(),
        ));
    }
    let engine = SpectralMomentEngine::new(model)?;
    // (ω⊗ω) index I ↔ coordinate pair (a, b), row-major over 2x2.
    let pairs = [(0, 0), (0, 1), (1, 0), (1, 1)];
    let mut b = DMatrix::zeros(4, 4);
    let mut v = DVector::zeros(4);
    for (idx, &(a0, b0)) in pairs.iter().enumerate() {
        v[idx] = engine.nu2(a0, b0)?;
        for (jdx, &(c0, d0)) in pairs.iter().enumerate() {
            b[(idx, jdx)] = 0.25 * engine.mu4(a0, b0, c0, d0);
        }
    }
    Ok(QuadraticForm { b, v })
}
