//! Adaptive Simpson quadrature for smooth, rapidly decaying spectral
//! integrands on `[0, Ω]`.
//!
//! All spectral integrals in this crate are even in ω, so callers
//! integrate the half line and double. The truncation radius Ω comes
//! from the envelope rule: stop where `(1 + ω⁴) e^{−σ ω²}` drops below
//! 1e-16, with σ the slowest total Gaussian decay rate in the integrand.

/// Absolute tolerance per integral.
pub const ABS_TOL: f64 = 1e-12;
/// Relative tolerance per integral.
pub const REL_TOL: f64 = 1e-10;

const ENVELOPE_CUTOFF: f64 = 1e-16;
const MAX_DEPTH: u32 = 60;

/// Radius beyond which `(1 + ω⁴) e^{−σ ω²} < 1e-16`.
///
/// Solved by fixed-point iteration on `ω² = (c + ln(1 + ω⁴)) / σ`,
/// which converges in a handful of steps because the log term is slow.
pub fn truncation_radius(sigma_decay: f64) -> f64 {
    assert!(sigma_decay > 0.0, "nonpositive decay rate {sigma_decay}");
    let c = -ENVELOPE_CUTOFF.ln();
    let mut omega = (c / sigma_decay).sqrt();
    for _ in 0..32 {
        let next = ((c + (1.0 + omega.powi(4)).ln()) / sigma_decay).sqrt();
        if (next - omega).abs() <= 1e-9 * omega {
            return next;
        }
        omega = next;
    }
    omega
}

/// Adaptive Simpson on `[0, hi]` at the module tolerances.
///
/// `osc_scale` is the shortest oscillation length in the integrand
/// (π / max|Δμ| for mixture cosines); it sets the initial panel width so
/// the error estimator never sees an aliased cosine. Pass `f64::INFINITY`
/// for non-oscillatory integrands.
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: F, hi: f64, osc_scale: f64) -> f64 {
    debug_assert!(hi > 0.0);
    let panel = (osc_scale / 4.0).min(hi / 8.0);
    let n_panels = (hi / panel).ceil().max(8.0) as usize;
    let width = hi / n_panels as f64;

    // First pass at panel level to estimate the magnitude for the
    // relative-tolerance floor.
    let mut coarse = 0.0;
    for i in 0..n_panels {
        let a = i as f64 * width;
        coarse += simpson(&f, a, a + width);
    }
    let tol = ABS_TOL.max(REL_TOL * coarse.abs());

    let mut total = 0.0;
    for i in 0..n_panels {
        let a = i as f64 * width;
        let b = a + width;
        let whole = simpson(&f, a, b);
        total += adaptive(&f, a, b, whole, tol * width / hi, MAX_DEPTH);
    }
    total
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, left, 0.5 * tol, depth - 1) + adaptive(f, m, b, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn truncation_radius_satisfies_envelope() {
        for sigma in [0.006, 0.05, 0.5, 2.0, 10.0] {
            let r = truncation_radius(sigma);
            let env = (1.0 + r.powi(4)) * (-sigma * r * r).exp();
            assert!(env <= 1.1e-16, "sigma={sigma} r={r} env={env}");
        }
    }

    #[test]
    fn gaussian_moments_match_closed_form() {
        // ∫₀^∞ ω^{2k} e^{−aω²} dω = ½·(√π/ a^{1/2}), ¼√π a^{-3/2}, ⅜√π a^{-5/2}
        for a in [0.05, 0.3, 1.0, 2.5] {
            let hi = truncation_radius(a);
            let i0 = integrate_half_line(|w| (-a * w * w).exp(), hi, f64::INFINITY);
            let i2 = integrate_half_line(|w| w * w * (-a * w * w).exp(), hi, f64::INFINITY);
            let i4 = integrate_half_line(|w| w.powi(4) * (-a * w * w).exp(), hi, f64::INFINITY);
            assert_relative_eq!(i0, 0.5 * PI.sqrt() / a.sqrt(), max_relative = REL_TOL);
            assert_relative_eq!(i2, 0.25 * PI.sqrt() * a.powf(-1.5), max_relative = REL_TOL);
            assert_relative_eq!(i4, 0.375 * PI.sqrt() * a.powf(-2.5), max_relative = REL_TOL);
        }
    }

    #[test]
    fn oscillatory_integral_matches_closed_form() {
        // ∫_ℝ cos(δω) e^{−aω²} dω = √(π/a) e^{−δ²/(4a)}
        for (a, delta) in [(0.5, 12.0), (1.0, 6.0), (0.1, 3.0)] {
            let hi = truncation_radius(a);
            let got =
                2.0 * integrate_half_line(|w| (delta * w).cos() * (-a * w * w).exp(), hi, PI / delta);
            let want = (PI / a).sqrt() * (-delta * delta / (4.0 * a)).exp();
            assert_relative_eq!(got, want, max_relative = 1e-9, epsilon = 1e-13);
        }
    }

    #[test]
    fn doubling_radius_changes_nothing() {
        let a = 0.25;
        let f = |w: f64| (1.0 - (-(w * w)).exp()) * (-a * w * w).exp();
        let r = truncation_radius(a);
        let v1 = integrate_half_line(f, r, f64::INFINITY);
        let v2 = integrate_half_line(f, 2.0 * r, f64::INFINITY);
        assert_relative_eq!(v1, v2, max_relative = 1e-10);
    }
}
