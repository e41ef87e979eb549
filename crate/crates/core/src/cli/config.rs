//! Experiment configuration.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{OpenSetSpec, WhitneyDecomposition, DEFAULT_EPSILON};
use crate::norms::{KernelSpec, QuadratureConfig, SobolevParams, Weight};
use crate::smoothing::{CatalogFunction, FunctionSpec};

/// Error norms a convergence run can track.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Lp,
    WeightedLp,
    Seminorm,
    WeightedSeminorm,
    Kernel,
    /// `‖·‖_{L^p} + [·]_K`.
    XNorm,
}

impl NormKind {
    pub fn name(self) -> &'static str {
        match self {
            NormKind::Lp => "lp",
            NormKind::WeightedLp => "weighted_lp",
            NormKind::Seminorm => "seminorm",
            NormKind::WeightedSeminorm => "weighted_seminorm",
            NormKind::Kernel => "kernel",
            NormKind::XNorm => "x_norm",
        }
    }

    /// Seminorm-type errors share the seminorm tolerance and the Hardy gate.
    pub fn is_seminorm(self) -> bool {
        !matches!(self, NormKind::Lp | NormKind::WeightedLp)
    }
}

/// How the adaptive thresholds are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptiveTarget {
    Plain,
    Weighted,
    Kernel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum EtaConfig {
    Uniform { fractions: Vec<f64> },
    Adaptive {
        k: Vec<u32>,
        #[serde(default)]
        target: Option<AdaptiveTarget>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub lp: f64,
    pub seminorm: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { lp: 0.02, seminorm: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<String>,
    pub format: ReportFormat,
    /// Record wall time per row (makes reports run-dependent).
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: OpenSetSpec,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_generation")]
    pub max_generation: u32,
    pub function: FunctionSpec,
    #[serde(default = "default_s")]
    pub s: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub weight: Option<Weight>,
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
    #[serde(default = "default_eta")]
    pub eta: EtaConfig,
    #[serde(default = "default_errors")]
    pub errors: Vec<NormKind>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
    /// `κ` for a plumpness pre-check of `Ω^c`.
    #[serde(default)]
    pub plump_kappa: Option<f64>,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}
fn default_generation() -> u32 {
    10
}
fn default_s() -> f64 {
    0.5
}
fn default_p() -> f64 {
    2.0
}
fn default_eta() -> EtaConfig {
    EtaConfig::Uniform { fractions: vec![DEFAULT_EPSILON / 4.0] }
}
fn default_errors() -> Vec<NormKind> {
    vec![NormKind::Lp]
}

/// Parses and validates, listing every violation.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))?;
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn params(&self) -> SobolevParams {
        SobolevParams { s: self.s, p: self.p, d: self.domain.dim() }
    }

    pub fn function(&self) -> Result<CatalogFunction> {
        self.function.bind(&self.domain)
    }

    pub fn decomposition(&self) -> Result<WhitneyDecomposition> {
        WhitneyDecomposition::new(&self.domain, self.epsilon, self.max_generation)
    }

    /// Quadrature settings with the run seed applied.
    pub fn quad(&self) -> QuadratureConfig {
        QuadratureConfig { seed: self.seed, ..self.quadrature.clone() }
    }

    pub fn adaptive_target(&self) -> AdaptiveTarget {
        match &self.eta {
            EtaConfig::Adaptive { target: Some(t), .. } => *t,
            _ if self.errors.iter().any(|k| matches!(k, NormKind::Kernel | NormKind::XNorm)) => AdaptiveTarget::Kernel,
            _ if self.weight.is_some() => AdaptiveTarget::Weighted,
            _ => AdaptiveTarget::Plain,
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let d = self.domain.dim();
        let half = 0.5 * self.epsilon;
        if !(self.epsilon > 0.0 && (1.0 + self.epsilon).powi(2) < 1.25) {
            errs.push(format!("epsilon {} violates (1+eps)^2 < 5/4", self.epsilon));
        }
        if let Err(e) = self.params().validate() {
            errs.push(e.to_string());
        }
        if let Err(e) = self.function() {
            errs.push(format!("function: {e}"));
        }
        match &self.eta {
            EtaConfig::Uniform { fractions } => {
                if fractions.is_empty() {
                    errs.push("eta fractions list is empty".into());
                }
                for &f in fractions {
                    if f >= half {
                        errs.push(format!("eta fraction {f}: fraction ≥ ε/2 = {half}"));
                    } else if !(f > 0.0) {
                        errs.push(format!("eta fraction {f} must be positive"));
                    }
                }
            }
            EtaConfig::Adaptive { k, .. } => {
                if k.is_empty() {
                    errs.push("adaptive k list is empty".into());
                }
                if k.contains(&0) {
                    errs.push("adaptive k must be at least 1".into());
                }
            }
        }
        if let Some(w) = &self.weight {
            if let Err(e) = w.validate(&self.domain) {
                errs.push(format!("weight: {e}"));
            }
            if let crate::norms::WeightFormula::Power { center: Some(c), .. } = &w.formula {
                if c.len() != d {
                    errs.push("weight centre has wrong dimension".into());
                }
            }
        }
        if let Some(k) = &self.kernel {
            if let Err(e) = k.validate() {
                errs.push(format!("kernel: {e}"));
            }
        }
        for kind in &self.errors {
            match kind {
                NormKind::WeightedLp | NormKind::WeightedSeminorm if self.weight.is_none() => {
                    errs.push(format!("error norm {} needs a weight", kind.name()));
                }
                NormKind::Kernel | NormKind::XNorm if self.kernel.is_none() => {
                    errs.push(format!("error norm {} needs a kernel", kind.name()));
                }
                _ => {}
            }
        }
        if self.errors.is_empty() {
            errs.push("no error norms configured".into());
        }
        match self.adaptive_target() {
            AdaptiveTarget::Weighted if self.weight.is_none() => errs.push("weighted target needs a weight".into()),
            AdaptiveTarget::Kernel if self.kernel.is_none() => errs.push("kernel target needs a kernel".into()),
            _ => {}
        }
        if let Err(e) = self.quadrature.validate() {
            errs.push(format!("quadrature: {e}"));
        }
        if !(self.tolerances.lp > 0.0 && self.tolerances.seminorm > 0.0) {
            errs.push("tolerances must be positive".into());
        }
        if let Some(k) = self.plump_kappa {
            if !(k > 0.0 && k < 1.0) {
                errs.push(format!("plump_kappa {k} must lie in (0, 1)"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "domain": {"dim": 1, "shapes": [{"type": "box", "min": [0.0], "max": [1.0]}], "bbox": [[0.0], [1.0]]},
        "function": {"name": "boundary_product"}
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.epsilon, 0.1);
        assert_eq!(c.max_generation, 10);
        assert_eq!(c.errors, vec![NormKind::Lp]);
        assert_eq!(c.tolerances, Tolerances { lp: 0.02, seminorm: 0.05 });
        assert_eq!(c.params(), SobolevParams { s: 0.5, p: 2.0, d: 1 });
    }

    #[test]
    fn large_fraction_is_reported() {
        let text = MINIMAL.replace(
            "\"function\"",
            "\"eta\": {\"mode\": \"uniform\", \"fractions\": [0.09, 0.01]}, \"function\"",
        );
        match parse_config(&text) {
            Err(Error::Config(v)) => {
                assert_eq!(v.len(), 1);
                assert!(v[0].contains("fraction ≥ ε/2"), "{v:?}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn every_violation_is_listed() {
        let text = r#"{
            "domain": {"dim": 1, "shapes": [{"type": "box", "min": [0.0], "max": [1.0]}], "bbox": [[0.0], [1.0]]},
            "function": {"name": "hat", "center": [0.5, 0.5], "radius": 0.2},
            "s": 1.5,
            "eta": {"mode": "uniform", "fractions": [0.2]},
            "errors": ["weighted_lp", "kernel"]
        }"#;
        match parse_config(text) {
            Err(Error::Config(v)) => assert!(v.len() >= 5, "{v:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_function_is_rejected() {
        let text = MINIMAL.replace("boundary_product", "sawtooth");
        assert!(matches!(parse_config(&text), Err(Error::Config(_))));
    }

    #[test]
    fn power_weight_on_punctured_line() {
        let text = r#"{
            "domain": {"dim": 1, "shapes": [{"type": "punctured", "point": [0.0]}], "bbox": [[-1.0], [1.0]]},
            "function": {"name": "hat", "center": [0.5], "radius": 0.25},
            "weight": {"name": "power", "a": 0.5, "class": "locally_comparable"},
            "errors": ["weighted_lp"]
        }"#;
        let c = parse_config(text).unwrap();
        assert_eq!(c.adaptive_target(), AdaptiveTarget::Weighted);
    }

    #[test]
    fn hash_is_stable() {
        let a = parse_config(MINIMAL).unwrap();
        let b = parse_config(MINIMAL).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let mut c = a.clone();
        c.seed = 9;
        assert_ne!(a.hash(), c.hash());
    }
}
