//! Deterministic CSV rendering for tables, curves, and bands.
//!
//! Raw values are written with 17 significant digits so identical runs
//! produce byte-identical files; ratio columns also get a 2-decimal
//! display column matching the tables' presentation.

use crate::bandwidth::BandwidthResult;
use crate::estimator::DensityCurve;
use crate::experiments::{round2, RatioCell, RatioCurvePoint};
use crate::montecarlo::BandResult;

/// 17-significant-digit rendering, enough to round-trip any f64.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn ratio_table_csv(cells: &[RatioCell]) -> String {
    let mut out = String::from(
        "density,sigma_eps2,n,h_y,h_x,mise_hy,mise_hx,mise_zero,ratio_zero,ratio_hx,display\n",
    );
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},\"({:.2},{:.2})\"\n",
            c.density,
            fmt17(c.sigma_eps2),
            c.n,
            fmt17(c.h_y),
            fmt17(c.h_x),
            fmt17(c.mise_hy),
            fmt17(c.mise_hx),
            fmt17(c.mise_zero),
            fmt17(c.ratio_zero),
            fmt17(c.ratio_hx),
            round2(c.ratio_zero),
            round2(c.ratio_hx),
        ));
    }
    out
}

pub fn curve_csv(curve: &DensityCurve) -> String {
    let mut out = String::from("y,value\n");
    for (y, v) in curve.grid.iter().zip(&curve.values) {
        out.push_str(&format!("{},{}\n", fmt17(*y), fmt17(*v)));
    }
    out
}

/// Band output; `value` is the pointwise median across replicates.
pub fn band_csv(band: &BandResult) -> String {
    let mut out = String::from("y,value,lower,upper,truth\n");
    for i in 0..band.grid.len() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt17(band.grid[i]),
            fmt17(band.median[i]),
            fmt17(band.lower[i]),
            fmt17(band.upper[i]),
            fmt17(band.truth[i]),
        ));
    }
    out
}

pub fn ratio_curve_csv(density: &str, points: &[RatioCurvePoint]) -> String {
    let mut out = String::from("density,sigma_eps2,n,h_y,h_star,ratio\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            density,
            fmt17(p.sigma_eps2),
            p.n,
            fmt17(p.h_y),
            fmt17(p.h_star),
            fmt17(p.ratio),
        ));
    }
    out
}

pub fn bandwidth_csv(rows: &[(String, BandwidthResult)]) -> String {
    let mut out = String::from("target,h,objective,iterations,bracket_lo,bracket_hi,at_boundary\n");
    for (target, r) in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            target,
            fmt17(r.value),
            fmt17(r.objective),
            r.iterations,
            fmt17(r.bracket.0),
            fmt17(r.bracket.1),
            r.at_boundary,
        ));
    }
    out
}

pub fn mc_ise_csv(rows: &[(String, f64, f64)]) -> String {
    let mut out = String::from("config,mean_ise,se\n");
    for (name, mean, se) in rows {
        out.push_str(&format!("{},{},{}\n", name, fmt17(*mean), fmt17(*se)));
    }
    out
}
