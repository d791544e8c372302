use anyhow::{bail, Context};
use heavenly_core::{Box4, Params};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// One run configuration: parameters, evaluation box, sampling and outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: Params,
    #[serde(rename = "box")]
    pub bx: Box4,
    pub n_points: usize,
    pub seed: u64,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    pub output_dir: PathBuf,
}

/// Default per-suite tolerances; a config may override any subset.
pub fn default_tolerances() -> BTreeMap<String, f64> {
    [
        ("cma", 1e-9),
        ("invariance", 1e-8),
        ("chain", 1e-9),
        ("relations", 1e-12),
        ("metric_cross", 1e-10),
        ("coframe", 1e-12),
        ("torsion", 1e-9),
        ("curvature_cross", 1e-8),
        ("ricci", 1e-8),
        ("duality", 1e-9),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.params.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
        if !self.bx.is_valid() {
            bail!("box intervals must be nonempty and finite");
        }
        if self.n_points == 0 {
            bail!("n_points must be at least 1");
        }
        if self.tolerances.values().any(|t| t.is_nan() || *t <= 0.0) {
            bail!("tolerances must be positive");
        }
        Ok(())
    }

    /// Tolerances with config overrides applied on top of the defaults.
    pub fn merged_tolerances(&self) -> BTreeMap<String, f64> {
        let mut tol = default_tolerances();
        for (k, v) in &self.tolerances {
            tol.insert(k.clone(), *v);
        }
        tol
    }
}
