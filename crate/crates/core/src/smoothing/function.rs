use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, OpenSetSpec, RemovedSet};

/// Pointwise function on `R^d`, zero outside its domain.
pub trait FunctionOracle: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> f64;

    /// Closed box outside which the function vanishes.
    fn support(&self) -> Option<Aabb> {
        None
    }

    fn lipschitz(&self) -> Option<f64> {
        None
    }

    /// Hyperplanes and points across which the function may jump; quadrature
    /// grades toward them and splits rays at them.
    fn singular_set(&self) -> Vec<RemovedSet> {
        Vec::new()
    }

    /// Value and its rounding scale: differences of two values within the
    /// sum of their scales carry no information.
    fn eval_scaled(&self, x: &[f64]) -> (f64, f64) {
        (self.eval(x), 0.0)
    }
}

impl<T: FunctionOracle + ?Sized> FunctionOracle for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &[f64]) -> f64 {
        (**self).eval(x)
    }
    fn support(&self) -> Option<Aabb> {
        (**self).support()
    }
    fn lipschitz(&self) -> Option<f64> {
        (**self).lipschitz()
    }
    fn singular_set(&self) -> Vec<RemovedSet> {
        (**self).singular_set()
    }
    fn eval_scaled(&self, x: &[f64]) -> (f64, f64) {
        (**self).eval_scaled(x)
    }
}

impl<T: FunctionOracle + ?Sized> FunctionOracle for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &[f64]) -> f64 {
        (**self).eval(x)
    }
    fn support(&self) -> Option<Aabb> {
        (**self).support()
    }
    fn lipschitz(&self) -> Option<f64> {
        (**self).lipschitz()
    }
    fn singular_set(&self) -> Vec<RemovedSet> {
        (**self).singular_set()
    }
    fn eval_scaled(&self, x: &[f64]) -> (f64, f64) {
        (**self).eval_scaled(x)
    }
}

/// Closure-backed oracle.
pub struct FnOracle<F> {
    dim: usize,
    f: F,
    support: Option<Aabb>,
    lipschitz: Option<f64>,
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> FnOracle<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f, support: None, lipschitz: None }
    }

    pub fn with_support(mut self, support: Aabb) -> Self {
        self.support = Some(support);
        self
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> FunctionOracle for FnOracle<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn support(&self) -> Option<Aabb> {
        self.support.clone()
    }
    fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }
}

fn one() -> f64 {
    1.0
}

/// Built-in test functions, selected by `name` in configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Constant {
        value: f64,
    },
    /// `scale·x_axis`.
    Coordinate {
        #[serde(default)]
        axis: usize,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `(1 − |x − center|/radius)_+`.
    Hat { center: Vec<f64>, radius: f64 },
    /// Indicator of the open box.
    Indicator { min: Vec<f64>, max: Vec<f64> },
    /// `γ(x)^β`.
    DistancePower { beta: f64 },
    /// `Π (x_i − min_i)(max_i − x_i)` on the box, zero outside it; the box
    /// defaults to the domain's bounding box.
    BoundaryProduct {
        #[serde(default)]
        min: Option<Vec<f64>>,
        #[serde(default)]
        max: Option<Vec<f64>>,
    },
}

impl FunctionSpec {
    /// Validated function on `domain`, extended by zero.
    pub fn bind(&self, domain: &OpenSetSpec) -> Result<CatalogFunction> {
        let d = domain.dim();
        let bad = |m: String| Err(Error::InvalidParameter(m));
        let mut spec = self.clone();
        match &mut spec {
            FunctionSpec::Constant { value } if !value.is_finite() => return bad("constant must be finite".into()),
            FunctionSpec::Coordinate { axis, .. } if *axis >= d => return bad(format!("axis {axis} out of range")),
            FunctionSpec::Hat { center, radius } => {
                if center.len() != d {
                    return bad("hat centre has wrong dimension".into());
                }
                if !(*radius > 0.0) {
                    return bad("hat radius must be positive".into());
                }
            }
            FunctionSpec::Indicator { min, max } => {
                if min.len() != d || max.len() != d || min.iter().zip(max.iter()).any(|(a, b)| a >= b) {
                    return bad("indicator box must be nonempty with matching dimension".into());
                }
            }
            FunctionSpec::DistancePower { beta } if !beta.is_finite() => return bad("beta must be finite".into()),
            FunctionSpec::BoundaryProduct { min, max } => {
                let lo = min.get_or_insert_with(|| domain.bbox().lo.clone());
                let hi = max.get_or_insert_with(|| domain.bbox().hi.clone());
                if lo.len() != d || hi.len() != d || lo.iter().zip(hi.iter()).any(|(a, b)| a >= b) {
                    return bad("boundary product box must be nonempty with matching dimension".into());
                }
            }
            _ => {}
        }
        Ok(CatalogFunction { spec, domain: domain.clone() })
    }
}

#[derive(Debug, Clone)]
pub struct CatalogFunction {
    spec: FunctionSpec,
    domain: OpenSetSpec,
}

impl CatalogFunction {
    pub fn spec(&self) -> &FunctionSpec {
        &self.spec
    }

    pub fn domain(&self) -> &OpenSetSpec {
        &self.domain
    }

    fn raw(&self, x: &[f64]) -> f64 {
        match &self.spec {
            FunctionSpec::Constant { value } => *value,
            FunctionSpec::Coordinate { axis, scale } => scale * x[*axis],
            FunctionSpec::Hat { center, radius } => {
                let r: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                (1.0 - r / radius).max(0.0)
            }
            FunctionSpec::Indicator { min, max } => {
                let inside = x.iter().zip(min.iter().zip(max)).all(|(v, (a, b))| v > a && v < b);
                if inside {
                    1.0
                } else {
                    0.0
                }
            }
            FunctionSpec::DistancePower { beta } => self.domain.gamma(x).powf(*beta),
            FunctionSpec::BoundaryProduct { min: Some(lo), max: Some(hi) } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (a, b))| ((v - a) * (b - v)).max(0.0))
                .product(),
            FunctionSpec::BoundaryProduct { .. } => unreachable!("bound functions carry their box"),
        }
    }
}

impl FunctionOracle for CatalogFunction {
    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        if self.domain.contains(x) {
            self.raw(x)
        } else {
            0.0
        }
    }

    /// Explicit boxes for localized functions; otherwise the domain's hull
    /// when it is bounded.
    fn support(&self) -> Option<Aabb> {
        let own = match &self.spec {
            FunctionSpec::Constant { value } if *value == 0.0 => {
                return Some(Aabb::new(self.domain.bbox().lo.clone(), self.domain.bbox().lo.clone()))
            }
            FunctionSpec::Hat { center, radius } => Some(Aabb::new(
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            )),
            FunctionSpec::Indicator { min, max } => Some(Aabb::new(min.clone(), max.clone())),
            FunctionSpec::BoundaryProduct { min: Some(lo), max: Some(hi) } => Some(Aabb::new(lo.clone(), hi.clone())),
            _ => None,
        };
        match (own, self.domain.bounded_hull()) {
            (Some(a), Some(b)) => Some(a.intersection(&b).unwrap_or_else(|| Aabb::new(a.lo.clone(), a.lo.clone()))),
            (Some(a), None) => Some(a),
            (None, b) => b,
        }
    }

    /// Lipschitz constant of the unextended formula; the zero extension may
    /// still jump at `∂Ω`.
    fn lipschitz(&self) -> Option<f64> {
        match &self.spec {
            FunctionSpec::Constant { .. } => Some(0.0),
            FunctionSpec::Coordinate { scale, .. } => Some(scale.abs()),
            FunctionSpec::Hat { radius, .. } => Some(1.0 / radius),
            FunctionSpec::Indicator { .. } => None,
            FunctionSpec::DistancePower { beta } if *beta == 1.0 => Some(1.0),
            FunctionSpec::DistancePower { .. } => None,
            FunctionSpec::BoundaryProduct { min: Some(lo), max: Some(hi) } => {
                let w: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| b - a).collect();
                let g2: f64 = (0..w.len())
                    .map(|i| {
                        let others: f64 = (0..w.len()).filter(|&j| j != i).map(|j| 0.25 * w[j] * w[j]).product();
                        (w[i] * others).powi(2)
                    })
                    .sum();
                Some(g2.sqrt())
            }
            FunctionSpec::BoundaryProduct { .. } => None,
        }
    }

    fn singular_set(&self) -> Vec<RemovedSet> {
        match &self.spec {
            FunctionSpec::Indicator { min, max } => (0..min.len())
                .flat_map(|axis| {
                    [
                        RemovedSet::Hyperplane { axis, value: min[axis] },
                        RemovedSet::Hyperplane { axis, value: max[axis] },
                    ]
                })
                .collect(),
            _ => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> OpenSetSpec {
        OpenSetSpec::unit_interval()
    }

    #[test]
    fn zero_extension_outside_domain() {
        let f = FunctionSpec::Constant { value: 3.0 }.bind(&unit()).unwrap();
        assert_eq!(f.eval(&[0.5]), 3.0);
        assert_eq!(f.eval(&[1.5]), 0.0);
        assert_eq!(f.eval(&[0.0]), 0.0);
    }

    #[test]
    fn catalog_values() {
        let u = unit();
        let hat = FunctionSpec::Hat { center: vec![0.5], radius: 0.5 }.bind(&u).unwrap();
        assert_eq!(hat.eval(&[0.5]), 1.0);
        assert_eq!(hat.eval(&[0.25]), 0.5);
        let bp = FunctionSpec::BoundaryProduct { min: None, max: None }.bind(&u).unwrap();
        assert_eq!(bp.eval(&[0.5]), 0.25);
        assert_eq!(bp.lipschitz(), Some(1.0));
        let dp = FunctionSpec::DistancePower { beta: 2.0 }.bind(&u).unwrap();
        assert!((dp.eval(&[0.1]) - 0.01).abs() < 1e-15);
        let ind = FunctionSpec::Indicator { min: vec![0.0], max: vec![0.5] }.bind(&u).unwrap();
        assert_eq!(ind.eval(&[0.25]), 1.0);
        assert_eq!(ind.eval(&[0.75]), 0.0);
        assert_eq!(ind.singular_set().len(), 2);
    }

    #[test]
    fn json_selection_by_name() {
        let f: FunctionSpec = serde_json::from_str(r#"{"name":"coordinate"}"#).unwrap();
        assert_eq!(f, FunctionSpec::Coordinate { axis: 0, scale: 1.0 });
        assert!(serde_json::from_str::<FunctionSpec>(r#"{"name":"sinc"}"#).is_err());
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(FunctionSpec::Coordinate { axis: 1, scale: 1.0 }.bind(&unit()).is_err());
        assert!(FunctionSpec::Hat { center: vec![0.5], radius: 0.0 }.bind(&unit()).is_err());
        assert!(FunctionSpec::Indicator { min: vec![0.5], max: vec![0.5] }.bind(&unit()).is_err());
    }

    #[test]
    fn supports() {
        let hat = FunctionSpec::Hat { center: vec![0.5], radius: 0.25 }.bind(&unit()).unwrap();
        assert_eq!(hat.support(), Some(Aabb::new(vec![0.25], vec![0.75])));
        let c = FunctionSpec::Constant { value: 1.0 }.bind(&unit()).unwrap();
        assert_eq!(c.support(), Some(Aabb::new(vec![0.0], vec![1.0])));
    }
}
