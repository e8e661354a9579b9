//! Experiment configuration: every knob has a default, files and `--set key=value` overrides are
//! merged as TOML tables before deserialisation, so unknown keys are reported by name.

use std::path::Path;

use serde::{Deserialize, Serialize};
use wlsi_core::dynamics::SdeConfig;
use wlsi_core::lyapunov::{
    cauchy_certificate, exponential_certificate, poincare_class_certificate, subexp_certificate, Certificate,
};
use wlsi_core::pipeline::ChainOptions;
use wlsi_core::{make_builtin, Error, Measure, MeasureKind, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureName {
    Cauchy,
    Exponential,
    Subexp,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasureConfig {
    pub kind: MeasureName,
    /// Cauchy exponent: density proportional to (1 + |x|^2)^{-beta}
    pub beta: f64,
    /// exponent of e^{-|x|^alpha}
    pub alpha: f64,
    pub dim: usize,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig { kind: MeasureName::Cauchy, beta: 2.0, alpha: 1.5, dim: 1 }
    }
}

impl MeasureConfig {
    pub fn kind(&self) -> MeasureKind {
        match self.kind {
            MeasureName::Cauchy => MeasureKind::Cauchy { beta: self.beta },
            MeasureName::Exponential => MeasureKind::Exponential,
            MeasureName::Subexp => MeasureKind::Subexp { alpha: self.alpha },
            MeasureName::Gaussian => MeasureKind::Gaussian,
        }
    }

    pub fn build(&self) -> Result<Measure> {
        make_builtin(self.kind(), self.dim)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateName {
    /// the builtin certificate matching the measure
    Auto,
    Cauchy,
    Exponential,
    Subexp,
    PoincareClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertificateConfig {
    pub kind: CertificateName,
    /// Cauchy: W = (1 + |x|^2)^{k/2}
    pub k: f64,
    /// exponential / subexp / Poincare class: W = exp(a |x|^alpha) or exp(a V)
    pub a: f64,
    /// Poincare class: W = exp(scale V)
    pub scale: f64,
}

impl Default for CertificateConfig {
    fn default() -> Self {
        CertificateConfig { kind: CertificateName::Auto, k: 3.0, a: 0.5, scale: 0.5 }
    }
}

impl CertificateConfig {
    pub fn build(&self, mu: &Measure, m: &MeasureConfig) -> Result<Certificate> {
        let kind = match self.kind {
            CertificateName::Auto => match m.kind {
                MeasureName::Cauchy => CertificateName::Cauchy,
                MeasureName::Exponential => CertificateName::Exponential,
                MeasureName::Subexp => CertificateName::Subexp,
                MeasureName::Gaussian => CertificateName::PoincareClass,
            },
            k => k,
        };
        match kind {
            CertificateName::Cauchy => cauchy_certificate(mu, m.beta, self.k),
            CertificateName::Exponential => exponential_certificate(mu, self.a),
            CertificateName::Subexp => subexp_certificate(mu, m.alpha, self.a),
            CertificateName::PoincareClass => poincare_class_certificate(mu, self.a, self.scale),
            CertificateName::Auto => unreachable!(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifierConfig {
    /// Gauss panels of the verification grid
    pub panels: usize,
    /// Nelder-Mead evaluations per family and inequality
    pub budget: usize,
    /// tabulated s values scanned per inequality
    pub s_count: usize,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        VerifierConfig { panels: 300, budget: 200, s_count: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub grid_nodes: usize,
    /// truncation radius; 0 picks the radius with tail mass 1e-8
    pub r_max: f64,
    pub restarts: usize,
    pub decay_step: f64,
    pub decay_points: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { grid_nodes: 2001, r_max: 0.0, restarts: 12, decay_step: 0.05, decay_points: 40 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsConfig {
    /// dt = 0 picks 0.99 of the stability limit 0.1 / sup omega
    pub sde: SdeConfig,
    /// when positive, steps = horizon / dt
    pub horizon: f64,
    pub quantiles: Vec<f64>,
    pub deviation_r: Vec<f64>,
    pub p_max: usize,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            sde: SdeConfig { dt: 0.0, replicas: 400, reflect_radius: 20.0, ..SdeConfig::default() },
            horizon: 5.0,
            quantiles: vec![0.7, 0.9, 0.99],
            deviation_r: vec![0.25, 0.5, 1.0, 1.5, 2.0],
            p_max: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportConfig {
    pub grid_nodes: usize,
    pub tail: f64,
    pub max_tilt: f64,
    pub window: f64,
    pub bg_samples: usize,
    /// s and t of the semigroup check Q_t Q_s g = Q_{t+s} g
    pub semigroup: (f64, f64),
}

impl Default for TransportConfig {
    fn default() -> Self {
        TransportConfig { grid_nodes: 4001, tail: 1e-12, max_tilt: 0.45, window: 4.0, bg_samples: 20, semigroup: (0.3, 0.5) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// master seed; the verifier, dynamics and transport seeds derive from it
    pub seed: u64,
    pub out: String,
    pub measure: MeasureConfig,
    pub certificate: CertificateConfig,
    pub pipeline: ChainOptions,
    pub verifier: VerifierConfig,
    pub oracle: OracleConfig,
    pub dynamics: DynamicsConfig,
    pub transport: TransportConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 7,
            out: "out".into(),
            measure: MeasureConfig::default(),
            certificate: CertificateConfig::default(),
            pipeline: ChainOptions::default(),
            verifier: VerifierConfig::default(),
            oracle: OracleConfig::default(),
            dynamics: DynamicsConfig::default(),
            transport: TransportConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn verifier_seed(&self) -> u64 {
        self.seed.wrapping_add(1)
    }

    pub fn dynamics_seed(&self) -> u64 {
        self.seed.wrapping_add(2)
    }

    pub fn transport_seed(&self) -> u64 {
        self.seed.wrapping_add(3)
    }
}

/// Sets `a.b.c = value` in a TOML table; the value is parsed as TOML and kept as a string
/// when that fails.
pub fn set_key(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not of the form key=value")))?;
    let value = match format!("v = {}", raw.trim()).parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let parts: Vec<&str> = key.trim().split('.').collect();
    let mut node = table;
    for p in &parts[..parts.len() - 1] {
        let entry = node.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry.as_table_mut().ok_or_else(|| Error::Config(format!("`{p}` in `{key}` is not a table")))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Base table (from a preset), then the file, then the overrides; later entries win.
pub fn load(preset: toml::Table, file: Option<&Path>, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut table = preset;
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let parsed: toml::Table =
            text.parse().map_err(|e: toml::de::Error| Error::Config(format!("{}: {e}", path.display())))?;
        merge(&mut table, parsed);
    }
    for o in overrides {
        set_key(&mut table, o)?;
    }
    let cfg: ExperimentConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    validate(&cfg)?;
    Ok(cfg)
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn validate(cfg: &ExperimentConfig) -> Result<()> {
    let bad = |key: &str, why: &str| Err(Error::Config(format!("{key}: {why}")));
    if cfg.oracle.grid_nodes < 11 {
        return bad("oracle.grid_nodes", "need at least 11 nodes");
    }
    if cfg.transport.grid_nodes < 11 {
        return bad("transport.grid_nodes", "need at least 11 nodes");
    }
    if cfg.oracle.r_max < 0.0 {
        return bad("oracle.r_max", "must be >= 0");
    }
    if cfg.verifier.s_count == 0 || cfg.verifier.panels < 10 {
        return bad("verifier", "s_count must be positive and panels >= 10");
    }
    if !(cfg.transport.tail > 0.0 && cfg.transport.tail < 1e-2) {
        return bad("transport.tail", "must lie in (0, 1e-2)");
    }
    if cfg.dynamics.quantiles.iter().any(|&q| !(q > 0.0 && q < 1.0)) {
        return bad("dynamics.quantiles", "levels must lie in (0, 1)");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = ExperimentConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn overrides_win_and_unknown_keys_are_named() {
        let cfg = load(toml::Table::new(), None, &["measure.kind=exponential".into(), "pipeline.delta=3".into()]).unwrap();
        assert_eq!(cfg.measure.kind, MeasureName::Exponential);
        assert_eq!(cfg.pipeline.delta, 3.0);
        let err = load(toml::Table::new(), None, &["oracle.nodes=5".into()]).unwrap_err();
        assert!(err.to_string().contains("nodes"), "{err}");
        assert!(load(toml::Table::new(), None, &["oracle.grid_nodes=3".into()]).is_err());
    }
}
