use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist, OpenSetSpec, RemovedSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightClass {
    /// Bounded above and below on compact subsets of `Ω`.
    LocallyComparable,
    /// Continuous on `Ω`, possibly with zeros (removed via `Ω' = Ω ∖ {w = 0}`).
    Continuous,
}

/// Catalog of weights, selected by `name`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum WeightFormula {
    Constant { value: f64 },
    /// `|x − center|^{−a}`; the centre defaults to the origin.
    Power {
        a: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    /// `max(x_axis, 0)^b`.
    CoordinatePower {
        #[serde(default)]
        axis: usize,
        b: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    #[serde(flatten)]
    pub formula: WeightFormula,
    pub class: WeightClass,
    /// Declared zero set inside `Ω`.
    #[serde(default)]
    pub zero_set: Vec<RemovedSet>,
}

impl Weight {
    pub fn new(formula: WeightFormula, class: WeightClass) -> Self {
        Self { formula, class, zero_set: Vec::new() }
    }

    pub fn constant(value: f64) -> Self {
        Self::new(WeightFormula::Constant { value }, WeightClass::LocallyComparable)
    }

    pub fn with_zero_set(mut self, zeros: Vec<RemovedSet>) -> Self {
        self.zero_set = zeros;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.formula {
            WeightFormula::Constant { value } => *value,
            WeightFormula::Power { a, center } => {
                let r = match center {
                    Some(c) => dist(x, c),
                    None => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
                };
                if *a == 0.0 {
                    1.0
                } else {
                    r.powf(-a)
                }
            }
            WeightFormula::CoordinatePower { axis, b } => {
                let v = x[*axis].max(0.0);
                if *b == 0.0 {
                    1.0
                } else {
                    v.powf(*b)
                }
            }
        }
    }

    /// Centre of the radial structure (used by the shell integrator).
    pub fn center(&self, dim: usize) -> Vec<f64> {
        match &self.formula {
            WeightFormula::Power { center: Some(c), .. } => c.clone(),
            _ => vec![0.0; dim],
        }
    }

    /// Sets where the formula vanishes.
    pub fn known_zeros(&self, dim: usize) -> Vec<RemovedSet> {
        match &self.formula {
            WeightFormula::Constant { value } if *value == 0.0 => Vec::new(),
            WeightFormula::Power { a, .. } if *a < 0.0 => vec![RemovedSet::Point { point: self.center(dim) }],
            WeightFormula::CoordinatePower { axis, b } if *b > 0.0 => {
                vec![RemovedSet::Hyperplane { axis: *axis, value: 0.0 }]
            }
            _ => Vec::new(),
        }
    }

    /// Checks dimension agreement, nonnegativity and that zeros meeting `Ω`
    /// of a continuous weight are declared.
    pub fn validate(&self, spec: &OpenSetSpec) -> Result<()> {
        let d = spec.dim();
        let mut errs = Vec::new();
        match &self.formula {
            WeightFormula::Constant { value } if *value < 0.0 || !value.is_finite() => {
                errs.push("constant weight must be finite and nonnegative".to_string())
            }
            WeightFormula::Power { center: Some(c), .. } if c.len() != d => errs.push("weight centre has wrong dimension".into()),
            WeightFormula::CoordinatePower { axis, .. } if *axis >= d => errs.push(format!("weight axis {axis} out of range")),
            _ => {}
        }
        for z in &self.zero_set {
            if !removed_dim_ok(z, d) {
                errs.push("zero-set descriptor has wrong dimension".into());
            }
        }
        if self.class == WeightClass::Continuous {
            for z in self.known_zeros(d) {
                if meets(spec, &z) && !self.zero_set.contains(&z) {
                    errs.push(format!("continuous weight vanishes on {z:?} inside the domain but no zero set is declared"));
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    /// `Ω' = Ω ∖ {w = 0}` for continuous weights; `Ω` otherwise.
    pub fn reduced_domain(&self, spec: &OpenSetSpec) -> Result<OpenSetSpec> {
        if self.class == WeightClass::Continuous && !self.zero_set.is_empty() {
            spec.without(&self.zero_set)
        } else {
            Ok(spec.clone())
        }
    }
}

fn removed_dim_ok(z: &RemovedSet, d: usize) -> bool {
    match z {
        RemovedSet::Point { point } => point.len() == d,
        RemovedSet::Hyperplane { axis, .. } => *axis < d,
    }
}

/// Whether a zero set meets `Ω` inside the bounding box (grid test on hyperplanes).
fn meets(spec: &OpenSetSpec, z: &RemovedSet) -> bool {
    match z {
        RemovedSet::Point { point } => spec.contains(point),
        RemovedSet::Hyperplane { axis, value } => {
            let d = spec.dim();
            let b = spec.bbox();
            if *value <= b.lo[*axis] || *value >= b.hi[*axis] {
                return false;
            }
            let n = 17usize;
            let free: Vec<usize> = (0..d).filter(|i| i != axis).collect();
            let total = n.pow(free.len() as u32);
            let mut x = vec![0.0; d];
            x[*axis] = *value;
            (0..total).any(|mut idx| {
                for &i in &free {
                    let k = idx % n;
                    idx /= n;
                    x[i] = b.lo[i] + (k as f64 + 0.5) / n as f64 * (b.hi[i] - b.lo[i]);
                }
                spec.contains(&x)
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Aabb, Shape};

    fn punctured_line() -> OpenSetSpec {
        OpenSetSpec::new(1, vec![Shape::Punctured { point: vec![0.0] }], Aabb::new(vec![-1.0], vec![1.0])).unwrap()
    }

    #[test]
    fn power_weight_values() {
        let w = Weight::new(WeightFormula::Power { a: 0.5, center: None }, WeightClass::LocallyComparable);
        assert!((w.eval(&[4.0]) - 0.5).abs() < 1e-15);
        let w = Weight::new(WeightFormula::CoordinatePower { axis: 0, b: 0.25 }, WeightClass::Continuous);
        assert!((w.eval(&[16.0]) - 2.0).abs() < 1e-15);
        assert_eq!(w.eval(&[-1.0]), 0.0);
    }

    #[test]
    fn continuous_weight_needs_declared_zeros() {
        let w = Weight::new(WeightFormula::Power { a: -0.5, center: Some(vec![0.25]) }, WeightClass::Continuous);
        let u = OpenSetSpec::unit_interval();
        assert!(matches!(w.validate(&u), Err(Error::Config(_))));
        let w = w.with_zero_set(vec![RemovedSet::Point { point: vec![0.25] }]);
        assert!(w.validate(&u).is_ok());
        let reduced = w.reduced_domain(&u).unwrap();
        assert!(!reduced.contains(&[0.25]));
    }

    #[test]
    fn zeros_on_the_boundary_need_no_declaration() {
        let w = Weight::new(WeightFormula::CoordinatePower { axis: 0, b: 0.25 }, WeightClass::Continuous);
        assert!(w.validate(&OpenSetSpec::unit_interval()).is_ok());
        // the origin is already excluded from the punctured line
        let w = Weight::new(WeightFormula::Power { a: -1.5, center: None }, WeightClass::Continuous);
        assert!(w.validate(&punctured_line()).is_ok());
    }

    #[test]
    fn json_form() {
        let w: Weight = serde_json::from_str(r#"{"name":"power","a":0.5,"class":"locally_comparable"}"#).unwrap();
        assert_eq!(w.formula, WeightFormula::Power { a: 0.5, center: None });
        assert!(w.zero_set.is_empty());
    }
}
