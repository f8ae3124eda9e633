//! Replicate-based experiments: pointwise quantile bands for density
//! estimates under each smoothing approach, and Monte Carlo ISE as an
//! independent check on the exact MISE.
//!
//! Replicate `r` draws its sample with the derived seed `seed ^ r`, so
//! replicates are independent streams that may run on any number of
//! threads; reductions gather in replicate order and are bit-identical
//! across thread counts.

use rayon::prelude::*;

use crate::bandwidth::{optimal_scalar_bandwidth, BandwidthTarget};
use crate::error::{BerksonError, Result};
use crate::estimator::{evaluate_estimator_at, integrate_uniform, linspace, quantile_sorted};
use crate::mise_exact::BandwidthSpec;
use crate::rng::replicate_seed;
use crate::spectral::BerksonModel;

/// How the (single, model-derived) bandwidth of an experiment is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BandwidthRule {
    /// Exact optimal bandwidth for estimating `f_Y`.
    OptimalFy,
    /// Exact optimal bandwidth for estimating `f_X`.
    OptimalFx,
    /// No smoothing: the kernel-free estimator.
    Zero,
    /// A fixed scalar bandwidth.
    Fixed(f64),
}

/// Pointwise quantile bands over replicated density estimates.
#[derive(Clone, Debug)]
pub struct BandResult {
    pub grid: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Pointwise median across replicates.
    pub median: Vec<f64>,
    /// True `f_Y` on the grid.
    pub truth: Vec<f64>,
    /// Scalar bandwidth the rule resolved to.
    pub bandwidth: f64,
    /// First few replicate curves, when retention was requested.
    pub replicate_curves: Option<Vec<Vec<f64>>>,
}

/// Resolves a bandwidth rule against the true model, once per experiment
/// (matching the use of exact optimal values rather than re-estimation
/// per replicate).
pub fn resolve_bandwidth(model: &BerksonModel, n: usize, rule: BandwidthRule) -> Result<f64> {
    match rule {
        BandwidthRule::OptimalFy => {
            Ok(optimal_scalar_bandwidth(model, n, BandwidthTarget::Fy)?.value)
        }
        BandwidthRule::OptimalFx => {
            Ok(optimal_scalar_bandwidth(model, n, BandwidthTarget::Fx)?.value)
        }
        BandwidthRule::Zero => Ok(0.0),
        BandwidthRule::Fixed(h) => {
            if !(h.is_finite() && h >= 0.0) {
                return Err(BerksonError::Domain(format!("fixed bandwidth {h} must be ≥ 0")));
            }
            Ok(h)
        }
    }
}

/// Deterministic evaluation grid derived from the model: component means
/// padded by `pad_sds` total standard deviations (component variance +
/// error variance + smoothing).
pub fn model_grid(model: &BerksonModel, h: f64, pad_sds: f64, points: usize) -> Vec<f64> {
    let se = model.error_cov()[(0, 0)];
    let kv = model.kernel_cov()[(0, 0)];
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut max_var = 0.0f64;
    for c in model.fx().components() {
        lo = lo.min(c.mean()[0]);
        hi = hi.max(c.mean()[0]);
        max_var = max_var.max(c.covariance()[(0, 0)]);
    }
    let sd = (max_var + se + h * h * kv).sqrt();
    linspace(lo - pad_sds * sd, hi + pad_sds * sd, points)
}

fn replicate_curves(
    model: &BerksonModel,
    n: usize,
    replicates: usize,
    h: f64,
    grid: &[f64],
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let points: Vec<nalgebra::DVector<f64>> =
        grid.iter().map(|&y| nalgebra::DVector::from_element(1, y)).collect();
    let bw = BandwidthSpec::Scalar(h);
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let sample = model.fx().sample(n, replicate_seed(seed, r as u64))?;
            evaluate_estimator_at(&sample, model.error_cov(), model.kernel_cov(), &bw, &points)
        })
        .collect()
}

/// Pointwise `(q_lo, q_hi)` quantile bands over `replicates` estimates of
/// `f_Y`, each from a fresh sample of size `n`, with the bandwidth fixed
/// by `rule` from the true model. Quantiles interpolate linearly between
/// order statistics. `retain` keeps the first curves for plotting.
#[allow(clippy::too_many_arguments)]
pub fn quantile_bands(
    model: &BerksonModel,
    n: usize,
    replicates: usize,
    rule: BandwidthRule,
    q_lo: f64,
    q_hi: f64,
    seed: u64,
    retain: usize,
) -> Result<BandResult> {
    model.require_univariate("quantile_bands")?;
    if replicates < 2 {
        return Err(BerksonError::Domain("need at least 2 replicates".into()));
    }
    if !(0.0..=1.0).contains(&q_lo) || !(0.0..=1.0).contains(&q_hi) || q_lo > q_hi {
        return Err(BerksonError::Domain(format!("invalid quantile pair ({q_lo}, {q_hi})")));
    }
    let h = resolve_bandwidth(model, n, rule)?;
    let grid = model_grid(model, h, 4.0, crate::estimator::DEFAULT_GRID_POINTS);
    let curves = replicate_curves(model, n, replicates, h, &grid, seed)?;

    let fy = model.fy()?;
    let truth: Vec<f64> = grid.iter().map(|&y| fy.pdf1(y).expect("dim 1")).collect();

    let mut lower = Vec::with_capacity(grid.len());
    let mut upper = Vec::with_capacity(grid.len());
    let mut median = Vec::with_capacity(grid.len());
    let mut column = vec![0.0; replicates];
    for g in 0..grid.len() {
        for (r, c) in curves.iter().enumerate() {
            column[r] = c[g];
        }
        column.sort_by(f64::total_cmp);
        lower.push(quantile_sorted(&column, q_lo));
        upper.push(quantile_sorted(&column, q_hi));
        median.push(quantile_sorted(&column, 0.5));
    }
    let retained = if retain > 0 {
        Some(curves.into_iter().take(retain).collect())
    } else {
        None
    };
    Ok(BandResult {
        grid,
        lower,
        upper,
        median,
        truth,
        bandwidth: h,
        replicate_curves: retained,
    })
}

/// Monte Carlo mean ISE and its standard error: per replicate, the
/// integral of `(f̃ − f_Y)²` by composite Simpson on a ±10-sd grid.
pub fn monte_carlo_ise(
    model: &BerksonModel,
    n: usize,
    replicates: usize,
    bw: f64,
    seed: u64,
) -> Result<(f64, f64)> {
    model.require_univariate("monte_carlo_ise")?;
    if replicates < 30 {
        return Err(BerksonError::Domain(
            "need at least 30 replicates for a standard error".into(),
        ));
    }
    let grid = model_grid(model, bw, 10.0, 1025);
    let curves = replicate_curves(model, n, replicates, bw, &grid, seed)?;
    let fy = model.fy()?;
    let truth: Vec<f64> = grid.iter().map(|&y| fy.pdf1(y).expect("dim 1")).collect();

    let ises: Vec<f64> = curves
        .iter()
        .map(|c| {
            let sq: Vec<f64> =
                c.iter().zip(&truth).map(|(a, b)| (a - b) * (a - b)).collect();
            integrate_uniform(&grid, &sq)
        })
        .collect();
    let r = replicates as f64;
    let mean = ises.iter().sum::<f64>() / r;
    let var = ises.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1.0);
    Ok((mean, (var / r).sqrt()))
}
