//! Canonical experiment catalog and table/figure-data generators: the
//! four 1-D and four 3-D study densities, the MISE-ratio tables, the
//! bandwidth-ratio curves, and the NO₂ exposure pipeline.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::bandwidth::{
    optimal_scalar_bandwidth, rule_of_thumb_hy_gaussian, silverman_hx, BandwidthTarget,
};
use crate::error::{BerksonError, Result};
use crate::estimator::{default_grid, evaluate_estimator, DensityCurve, SampleMatrix};
use crate::mise_exact::{exact_mise, BandwidthSpec};
use crate::spectral::BerksonModel;

/// A named study density.
#[derive(Clone, Debug)]
pub struct DensityCatalogEntry {
    pub name: &'static str,
    pub mixture: crate::gaussmix::GaussianMixture,
}

/// The four 1-D study densities (`φ_Σ` parameterized by variance).
pub fn catalog_1d() -> Vec<DensityCatalogEntry> {
    let build = |name, triples: &[(f64, f64, f64)]| DensityCatalogEntry {
        name,
        mixture: crate::gaussmix::GaussianMixture::univariate(triples)
            .expect("catalog parameters are valid"),
    };
    vec![
        build("Normal", &[(1.0, 0.0, 1.0)]),
        build("Bimodal 1", &[(0.7, 0.0, 1.0), (0.3, 3.0, 1.0)]),
        build("Bimodal 2", &[(0.5, -6.0, 1.0), (0.5, 6.0, 1.0)]),
        build("Trimodal", &[(0.4, -4.0, 2.0), (0.2, 0.0, 0.3), (0.4, 3.0, 1.0)]),
    ]
}

/// Tridiagonal covariance with ±0.64 couplings used by the 3-D catalog.
pub fn coupling_matrix(sign: f64) -> DMatrix<f64> {
    let c = 0.64 * sign;
    DMatrix::from_row_slice(3, 3, &[1.0, c, 0.0, c, 1.0, c, 0.0, c, 1.0])
}

/// The four 3-D study densities.
pub fn catalog_3d() -> Vec<DensityCatalogEntry> {
    let plus = coupling_matrix(1.0);
    let minus = coupling_matrix(-1.0);
    let id = DMatrix::identity(3, 3);
    let v = |a: f64, b: f64, c: f64| DVector::from_vec(vec![a, b, c]);
    let comp = |w: f64, mean: DVector<f64>, cov: &DMatrix<f64>| {
        crate::gaussmix::GaussianComponent::new(w, mean, cov.clone())
            .expect("catalog parameters are valid")
    };
    let mix = |comps: Vec<crate::gaussmix::GaussianComponent>| {
        crate::gaussmix::GaussianMixture::new(comps).expect("catalog parameters are valid")
    };
    vec![
        DensityCatalogEntry { name: "Multi Normal", mixture: mix(vec![comp(1.0, v(0.0, 0.0, 0.0), &id)]) },
        DensityCatalogEntry {
            name: "Multi 2-Comp 1",
            mixture: mix(vec![
                comp(0.7, v(0.0, 0.0, 0.0), &plus),
                comp(0.3, v(1.0, 1.0, 1.0), &minus),
            ]),
        },
        DensityCatalogEntry {
            name: "Multi 2-Comp 2",
            mixture: mix(vec![
                comp(0.5, v(6.0, 0.0, 0.0), &id),
                comp(0.5, v(-6.0, 0.0, 0.0), &id),
            ]),
        },
        DensityCatalogEntry {
            name: "Multi 3-Comp",
            mixture: mix(vec![
                comp(0.4, v(0.0, 0.0, 0.0), &plus),
                comp(0.2, v(1.0, 1.0, 1.0), &minus),
                comp(0.4, v(0.0, 0.0, 0.0), &minus),
            ]),
        },
    ]
}

/// Looks a density up by name, ignoring case, spaces, dots, and dashes
/// (`"bimodal1"` finds `"Bimodal 1"`).
pub fn find_density(name: &str) -> Option<DensityCatalogEntry> {
    let canon = |s: &str| {
        s.chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect::<String>()
    };
    let wanted = canon(name);
    catalog_1d()
        .into_iter()
        .chain(catalog_3d())
        .find(|e| canon(e.name) == wanted)
}

/// One cell of the MISE-ratio tables.
#[derive(Clone, Debug)]
pub struct RatioCell {
    pub density: String,
    pub sigma_eps2: f64,
    pub n: usize,
    pub h_y: f64,
    pub h_x: f64,
    pub mise_hy: f64,
    pub mise_hx: f64,
    pub mise_zero: f64,
    /// `MISE(0) / MISE(h_Y)`
    pub ratio_zero: f64,
    /// `MISE(h_X) / MISE(h_Y)`
    pub ratio_hx: f64,
}

/// Rounds half away from zero to two decimals, the tables' presentation.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn ratio_cell(entry: &DensityCatalogEntry, sigma_eps2: f64, n: usize) -> Result<RatioCell> {
    if sigma_eps2.is_nan() || sigma_eps2 <= 0.0 {
        return Err(BerksonError::Domain(format!("error variance {sigma_eps2} must be > 0")));
    }
    let model = BerksonModel::isotropic(entry.mixture.clone(), sigma_eps2)?;
    let hy = optimal_scalar_bandwidth(&model, n, BandwidthTarget::Fy)?;
    let hx = optimal_scalar_bandwidth(&model, n, BandwidthTarget::Fx)?;
    let mise_hy = hy.objective;
    let mise_hx = exact_mise(&model, &BandwidthSpec::Scalar(hx.value), n)?;
    let mise_zero = exact_mise(&model, &BandwidthSpec::Scalar(0.0), n)?;
    Ok(RatioCell {
        density: entry.name.to_string(),
        sigma_eps2,
        n,
        h_y: hy.value,
        h_x: hx.value,
        mise_hy,
        mise_hx,
        mise_zero,
        ratio_zero: mise_zero / mise_hy,
        ratio_hx: mise_hx / mise_hy,
    })
}

/// Computes every `(density, σ_ε²)` cell at sample size `n`. Cells run
/// concurrently and are returned in density-major order.
pub fn ratio_table(
    entries: &[DensityCatalogEntry],
    error_variances: &[f64],
    n: usize,
) -> Result<Vec<RatioCell>> {
    let jobs: Vec<(&DensityCatalogEntry, f64)> = entries
        .iter()
        .flat_map(|e| error_variances.iter().map(move |&s| (e, s)))
        .collect();
    jobs.par_iter().map(|(e, s)| ratio_cell(e, *s, n)).collect()
}

/// One point of the `h_Y / h*_Y` convergence curves.
#[derive(Clone, Debug)]
pub struct RatioCurvePoint {
    pub sigma_eps2: f64,
    pub n: usize,
    pub h_y: f64,
    pub h_star: f64,
    /// `h_Y / h*_Y`
    pub ratio: f64,
}

/// Exact-to-asymptotic bandwidth ratio over an `n` grid, per error
/// variance (p = 1).
pub fn ratio_curve(
    entry: &DensityCatalogEntry,
    error_variances: &[f64],
    sample_sizes: &[usize],
) -> Result<Vec<RatioCurvePoint>> {
    if entry.mixture.dim() != 1 {
        return Err(BerksonError::UnsupportedDimension(
            "bandwidth ratio curves are defined for p = 1".into(),
        ));
    }
    let jobs: Vec<(f64, usize)> = error_variances
        .iter()
        .flat_map(|&s| sample_sizes.iter().map(move |&n| (s, n)))
        .collect();
    jobs.par_iter()
        .map(|&(sigma_eps2, n)| {
            let model = BerksonModel::univariate(entry.mixture.clone(), sigma_eps2)?;
            let h_y = optimal_scalar_bandwidth(&model, n, BandwidthTarget::Fy)?.value;
            let h_star = crate::bandwidth::asymptotic_bandwidth(&model, n)?;
            Ok(RatioCurvePoint { sigma_eps2, n, h_y, h_star, ratio: h_y / h_star })
        })
        .collect()
}

/// Log-spaced sample sizes for the ratio curves (default n grid).
pub fn log_spaced_sizes(lo: usize, hi: usize, points: usize) -> Vec<usize> {
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<usize> = (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp().round() as usize)
        .collect();
    out.dedup();
    out
}

/// Output of the NO₂ exposure pipeline: the regression-transformed
/// sample and the three competing density estimates of `f_Y`.
#[derive(Clone, Debug)]
pub struct No2Result {
    pub sample: SampleMatrix,
    pub h_silverman: f64,
    pub h_rot: f64,
    /// No smoothing (kernel-free estimator).
    pub curve_zero: DensityCurve,
    /// Silverman `h̃_X`.
    pub curve_silverman: DensityCurve,
    /// Rule-of-thumb `h̃_Y`.
    pub curve_rot: DensityCurve,
}

/// Log personal exposure from kitchen/bedroom concentrations:
/// `X = 1.22 + 0.3 ln(W_k) + 0.33 ln(W_b)`, then the three smoothing
/// approaches at Gaussian error variance `sigma_eps2`.
pub fn no2_pipeline(records: &[(f64, f64)], sigma_eps2: f64) -> Result<No2Result> {
    if sigma_eps2.is_nan() || sigma_eps2 <= 0.0 {
        return Err(BerksonError::Domain(format!("error variance {sigma_eps2} must be > 0")));
    }
    if records.is_empty() {
        return Err(BerksonError::EmptySample);
    }
    let mut xs = Vec::with_capacity(records.len());
    for (i, &(wk, wb)) in records.iter().enumerate() {
        if !(wk > 0.0 && wb > 0.0) || !wk.is_finite() || !wb.is_finite() {
            return Err(BerksonError::RecordRejected {
                row: i + 1,
                reason: format!("concentrations must be positive, got ({wk}, {wb})"),
            });
        }
        xs.push(1.22 + 0.3 * wk.ln() + 0.33 * wb.ln());
    }
    let sample = SampleMatrix::from_univariate(&xs)?;
    let n = sample.n();
    let var = sample.variance1();
    let h_silverman = silverman_hx(var.sqrt(), sample.iqr1(), n)?;
    let h_rot = rule_of_thumb_hy_gaussian(var, sigma_eps2, n)?;

    let h_max = h_silverman.max(h_rot);
    let grid = default_grid(&sample, sigma_eps2, h_max, crate::estimator::DEFAULT_GRID_POINTS);
    let curve = |h: f64| evaluate_estimator(&sample, sigma_eps2, &BandwidthSpec::Scalar(h), &grid);
    Ok(No2Result {
        h_silverman,
        h_rot,
        curve_zero: curve(0.0)?,
        curve_silverman: curve(h_silverman)?,
        curve_rot: curve(h_rot)?,
        sample,
    })
}
