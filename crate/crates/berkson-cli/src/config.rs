//! JSON run configuration and density resolution.

use berkson::gaussmix::{GaussianComponent, GaussianMixture};
use berkson::experiments::{find_density, DensityCatalogEntry};
use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::CliError;

/// Experiment configuration. Command-line flags override these fields.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Catalog names or inline mixture specs.
    pub densities: Vec<DensitySpec>,
    pub error_variances: Vec<f64>,
    pub sample_sizes: Vec<usize>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_quantiles")]
    pub quantiles: (f64, f64),
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Worker threads; 0 means all available cores.
    #[serde(default)]
    pub threads: usize,
}

fn default_seed() -> u64 {
    20260810
}

fn default_quantiles() -> (f64, f64) {
    (0.1, 0.9)
}

fn default_replicates() -> usize {
    100
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum DensitySpec {
    Named(String),
    Inline { name: String, components: Vec<ComponentSpec> },
}

#[derive(Debug, Deserialize)]
pub struct ComponentSpec {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.densities.is_empty() {
            return Err(CliError::Config("config lists no densities".into()));
        }
        if self.error_variances.iter().any(|&v| v.is_nan() || v <= 0.0) {
            return Err(CliError::Config("error variances must be > 0".into()));
        }
        if self.sample_sizes.contains(&0) {
            return Err(CliError::Config("sample sizes must be ≥ 1".into()));
        }
        if self.replicates == 0 {
            return Err(CliError::Config("replicates must be ≥ 1".into()));
        }
        let (lo, hi) = self.quantiles;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(CliError::Config(format!("invalid quantile pair ({lo}, {hi})")));
        }
        Ok(())
    }

    pub fn resolve_densities(&self) -> Result<Vec<DensityCatalogEntry>, CliError> {
        self.densities.iter().map(resolve_density).collect()
    }
}

pub fn resolve_density(spec: &DensitySpec) -> Result<DensityCatalogEntry, CliError> {
    match spec {
        DensitySpec::Named(name) => lookup_density(name),
        DensitySpec::Inline { name, components } => {
            let comps = components
                .iter()
                .map(|c| {
                    let p = c.mean.len();
                    let mut cov = DMatrix::zeros(p, p);
                    for (i, row) in c.cov.iter().enumerate() {
                        if row.len() != p || c.cov.len() != p {
                            return Err(CliError::Config(format!(
                                "component covariance must be {p}x{p} in density '{name}'"
                            )));
                        }
                        for (j, &v) in row.iter().enumerate() {
                            cov[(i, j)] = v;
                        }
                    }
                    GaussianComponent::new(
                        c.weight,
                        DVector::from_vec(c.mean.clone()),
                        cov,
                    )
                    .map_err(CliError::Numeric)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let mixture = GaussianMixture::new(comps).map_err(CliError::Numeric)?;
            Ok(DensityCatalogEntry { name: leak_name(name), mixture })
        }
    }
}

pub fn lookup_density(name: &str) -> Result<DensityCatalogEntry, CliError> {
    find_density(name).ok_or_else(|| {
        CliError::Config(format!(
            "unknown density '{name}'; catalog names: Normal, Bimodal 1, Bimodal 2, Trimodal, \
             Multi Normal, Multi 2-Comp 1, Multi 2-Comp 2, Multi 3-Comp"
        ))
    })
}

/// Catalog entries carry `&'static str` names; inline configs are rare and
/// live for the whole run, so leaking the string is fine.
fn leak_name(name: &str) -> &'static str {
    Box::leak(name.to_string().into_boxed_str())
}
