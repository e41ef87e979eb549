use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radial kernel `K(r)`, selected by `name`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    Zero,
    /// `r^{−alpha}`.
    Power { alpha: f64 },
    /// `e^{−rate·r}·r^{−alpha}`.
    ExpPower { rate: f64, alpha: f64 },
    /// `1_{r < radius}·r^{−alpha}`.
    TruncatedPower { radius: f64, alpha: f64 },
    /// `1_{r < radius}`.
    Indicator { radius: f64 },
}

impl KernelSpec {
    /// The fractional kernel `r^{−d−sp}`.
    pub fn fractional(d: usize, s: f64, p: f64) -> Self {
        KernelSpec::Power { alpha: d as f64 + s * p }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            KernelSpec::Zero => true,
            KernelSpec::Power { alpha } => alpha.is_finite(),
            KernelSpec::ExpPower { rate, alpha } => *rate >= 0.0 && alpha.is_finite(),
            KernelSpec::TruncatedPower { radius, alpha } => *radius > 0.0 && alpha.is_finite(),
            KernelSpec::Indicator { radius } => *radius > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid kernel {self:?}")))
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        match self {
            KernelSpec::Zero => 0.0,
            KernelSpec::Power { alpha } => r.powf(-alpha),
            KernelSpec::ExpPower { rate, alpha } => (-rate * r).exp() * r.powf(-alpha),
            KernelSpec::TruncatedPower { radius, alpha } => {
                if r < *radius {
                    r.powf(-alpha)
                } else {
                    0.0
                }
            }
            KernelSpec::Indicator { radius } => {
                if r < *radius {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Radii where `K` jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            KernelSpec::TruncatedPower { radius, .. } | KernelSpec::Indicator { radius } => vec![*radius],
            _ => Vec::new(),
        }
    }

    /// `∫_0^δ r^p K(r) r^{d−1} dr` when it has a closed form.
    pub fn band_moment(&self, d: usize, p: f64, delta: f64) -> Option<f64> {
        let e = p + d as f64;
        match self {
            KernelSpec::Zero => Some(0.0),
            KernelSpec::Power { alpha } => (e > *alpha).then(|| delta.powf(e - alpha) / (e - alpha)),
            KernelSpec::TruncatedPower { radius, alpha } => {
                let top = delta.min(*radius);
                (e > *alpha).then(|| top.powf(e - alpha) / (e - alpha))
            }
            KernelSpec::Indicator { radius } => Some(delta.min(*radius).powf(e) / e),
            KernelSpec::ExpPower { alpha, .. } => (e > *alpha).then(|| delta.powf(e - alpha) / (e - alpha)),
        }
    }

    /// `∫_0^∞ (r^p ∧ 1) K(r) r^{d−1} dr` in closed form where available
    /// (`None` when divergent or not tabulated).
    pub fn closed_form_admissibility(&self, d: usize, p: f64) -> Option<f64> {
        let d = d as f64;
        match self {
            KernelSpec::Zero => Some(0.0),
            KernelSpec::Power { alpha } => {
                let (a, b) = (p + d - alpha, alpha - d);
                (a > 0.0 && b > 0.0).then(|| 1.0 / a + 1.0 / b)
            }
            KernelSpec::Indicator { radius } => Some(if *radius <= 1.0 {
                radius.powf(p + d) / (p + d)
            } else {
                1.0 / (p + d) + (radius.powf(d) - 1.0) / d
            }),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractional_power_closed_form() {
        let k = KernelSpec::fractional(1, 0.5, 2.0);
        assert_eq!(k.closed_form_admissibility(1, 2.0), Some(2.0));
        assert_eq!(KernelSpec::Power { alpha: 3.0 }.closed_form_admissibility(1, 2.0), None);
    }

    #[test]
    fn kernel_values() {
        assert_eq!(KernelSpec::Indicator { radius: 1.0 }.eval(0.5), 1.0);
        assert_eq!(KernelSpec::Indicator { radius: 1.0 }.eval(1.0), 0.0);
        assert!((KernelSpec::ExpPower { rate: 1.0, alpha: 1.5 }.eval(1.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(KernelSpec::Zero.eval(0.3), 0.0);
    }

    #[test]
    fn json_form() {
        let k: KernelSpec = serde_json::from_str(r#"{"name":"exp_power","rate":1.0,"alpha":1.5}"#).unwrap();
        assert_eq!(k, KernelSpec::ExpPower { rate: 1.0, alpha: 1.5 });
    }
}
