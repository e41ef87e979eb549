//! Quadrature for `L^p` norms, Gagliardo-type seminorms, the Hardy term and
//! the two admissibility integrals.

mod cells;
mod kernel;
mod pair;
mod tail;
mod weight;

pub use cells::{integration_cells, radial_panels, Cell};
pub use kernel::KernelSpec;
pub use pair::{gagliardo, kernel_seminorm, pair_integral, weighted_gagliardo, PairSetup};
pub use tail::{kernel_admissibility, ratio_verdict, shell_integral, weight_condition};
pub use weight::{Weight, WeightClass, WeightFormula};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{OpenSetSpec, RemovedSet};
use crate::quad::{tensor_box, GaussLegendre, KahanSum};
use crate::smoothing::FunctionOracle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevParams {
    pub s: f64,
    pub p: f64,
    pub d: usize,
}

impl SobolevParams {
    pub fn new(s: f64, p: f64, d: usize) -> Result<Self> {
        let v = Self { s, p, d };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(Error::InvalidParameter(format!("s = {} must lie in (0, 1)", self.s)));
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(Error::InvalidParameter(format!("p = {} must lie in [1, inf)", self.p)));
        }
        if !(1..=3).contains(&self.d) {
            return Err(Error::InvalidParameter(format!("dimension {} unsupported", self.d)));
        }
        Ok(())
    }

    pub fn sp(&self) -> f64 {
        self.s * self.p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Tensor grid for `d = 1`, Monte Carlo otherwise.
    #[default]
    Auto,
    TensorGrid,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub method: Method,
    /// Cells per bounding-box edge away from the boundary.
    pub resolution: usize,
    /// Boundary grading generations; dimension-dependent default.
    pub depth: Option<u32>,
    /// Gauss–Legendre points per panel.
    pub order: usize,
    /// Monte-Carlo points per cell (at least 2).
    pub samples: usize,
    /// Half-width of the excluded diagonal band.
    pub delta_band: f64,
    /// Resolution of deterministic spherical rules.
    pub angular: usize,
    /// Geometric grading levels toward ray endpoints.
    pub grade_levels: u32,
    /// Dyadic shells on each side for unbounded integrals.
    pub shell_cap: u32,
    pub seed: u64,
    /// Run the second, lower-order pass that yields the error estimate.
    pub report_error: bool,
    pub parallel: bool,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            method: Method::Auto,
            resolution: 64,
            depth: None,
            order: 8,
            samples: 4,
            delta_band: 1e-9,
            angular: 32,
            grade_levels: 24,
            shell_cap: 60,
            seed: 0,
            report_error: true,
            parallel: true,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.resolution == 0 {
            errs.push("resolution must be positive".to_string());
        }
        if self.order < 3 {
            errs.push("order must be at least 3".into());
        }
        if self.samples < 2 {
            errs.push("samples must be at least 2".into());
        }
        if !(self.delta_band >= 0.0) {
            errs.push("delta_band must be nonnegative".into());
        }
        if self.shell_cap < 8 {
            errs.push("shell_cap must be at least 8".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    pub fn depth_for(&self, d: usize) -> u32 {
        self.depth.unwrap_or(match d {
            1 => 20,
            2 => 8,
            _ => 5,
        })
    }

    pub fn monte_carlo(&self, d: usize) -> bool {
        match self.method {
            Method::Auto => d >= 2,
            Method::TensorGrid => false,
            Method::MonteCarlo => true,
        }
    }

    pub fn method_name(&self, d: usize) -> &'static str {
        if self.monte_carlo(d) {
            "monte_carlo"
        } else {
            "tensor_grid"
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Finite,
    Divergent,
    Inconclusive,
}

/// Result record, one JSON line each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error_estimate: f64,
    pub verdict: Verdict,
    pub method: String,
    pub resolution: usize,
    pub seed: u64,
    /// The underlying integral (`value^p` for norms).
    pub integral: f64,
    pub integral_error: f64,
}

impl Estimate {
    /// Wraps an integral of a `p`-th power as a norm.
    pub(crate) fn from_integral(integral: f64, err: f64, p: f64, verdict: Verdict, method: &str, quad: &QuadratureConfig) -> Self {
        let i = integral.max(0.0);
        let value = i.powf(1.0 / p);
        let error_estimate = if err.is_finite() { (i + err).powf(1.0 / p) - value } else { f64::INFINITY };
        Self {
            value,
            error_estimate,
            verdict,
            method: method.to_string(),
            resolution: quad.resolution,
            seed: quad.seed,
            integral,
            integral_error: err,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("estimate serializes")
    }

    pub fn is_finite(&self) -> bool {
        self.verdict == Verdict::Finite
    }
}

/// Domain graded toward the function's jump set and the declared zero set.
pub(crate) fn graded_domain(spec: &OpenSetSpec, f: &dyn FunctionOracle, extra: &[RemovedSet]) -> Result<OpenSetSpec> {
    let mut removed = f.singular_set();
    removed.extend(extra.iter().cloned());
    if removed.is_empty() {
        Ok(spec.clone())
    } else {
        spec.without(&removed)
    }
}

/// Tensor-rule integral of `g` over the cells, with per-generation sums of
/// the non-collar cells.
pub(crate) struct CellIntegral {
    pub total: f64,
    pub per_generation: Vec<f64>,
}

pub(crate) fn integrate_cells<G>(cells: &[Cell], d: usize, order: usize, parallel: bool, g: G) -> CellIntegral
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    let gl = GaussLegendre::new(order);
    let one = |c: &Cell| {
        let mut acc = KahanSum::default();
        tensor_box(&gl, &c.lo[..d], &c.hi[..d], |x, w| {
            let v = g(x);
            if v != 0.0 {
                acc.add(w * v);
            }
        });
        acc.value()
    };
    let vals: Vec<f64> = if parallel { cells.par_iter().map(one).collect() } else { cells.iter().map(one).collect() };
    let max_gen = cells.iter().map(|c| c.generation).max().unwrap_or(0) as usize;
    let mut per = vec![KahanSum::default(); max_gen + 1];
    let mut total = KahanSum::default();
    for (c, v) in cells.iter().zip(&vals) {
        total.add(*v);
        if !c.collar {
            per[c.generation as usize].add(*v);
        }
    }
    CellIntegral { total: total.value(), per_generation: per.iter().map(|k| k.value()).collect() }
}

/// Verdict from the last generations before the collar.
pub(crate) fn generation_verdict(per_generation: &[f64], depth: u32, tol: f64) -> (Verdict, f64) {
    let end = (depth as usize).min(per_generation.len());
    if end < 5 {
        let all_zero = per_generation.iter().all(|v| *v == 0.0);
        return (if all_zero { Verdict::Finite } else { Verdict::Inconclusive }, 0.0);
    }
    let seq: Vec<f64> = per_generation[end - 5..end].iter().map(|v| v.abs()).collect();
    let (v, rho, tail) = ratio_verdict(&seq, tol);
    let _ = rho;
    (v, tail)
}

/// `(∫_Ω |f|^p w dx)^{1/p}` over `Ω ∩ bbox`.
pub fn lp_norm(f: &dyn FunctionOracle, spec: &OpenSetSpec, p: f64, w: Option<&Weight>, quad: &QuadratureConfig) -> Result<Estimate> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must be at least 1")));
    }
    quad.validate()?;
    let d = spec.dim();
    let zeros = w.map(|w| w.zero_set.clone()).unwrap_or_default();
    let domain = graded_domain(spec, f, &zeros)?;
    let depth = quad.depth_for(d);
    let cells = integration_cells(&domain, depth, spec.bbox().max_edge() / quad.resolution as f64);
    let g = |x: &[f64]| {
        if !spec.contains(x) {
            return 0.0;
        }
        let wx = w.map_or(1.0, |w| w.eval(x));
        if wx == 0.0 {
            0.0
        } else {
            f.eval(x).abs().powf(p) * wx
        }
    };
    let main = integrate_cells(&cells, d, quad.order, quad.parallel, g);
    let err = if quad.report_error {
        (main.total - integrate_cells(&cells, d, quad.order - 1, quad.parallel, g).total).abs()
    } else {
        0.0
    };
    let (verdict, _) = generation_verdict(&main.per_generation, depth, 1e-9);
    Ok(Estimate::from_integral(main.total, err, p, verdict, "tensor_grid", quad))
}

/// `∫_Ω |f|^p γ^{−sp} dx`, or a divergence verdict.
pub fn hardy_term(f: &dyn FunctionOracle, spec: &OpenSetSpec, params: &SobolevParams, quad: &QuadratureConfig) -> Result<Estimate> {
    params.validate()?;
    quad.validate()?;
    let d = spec.dim();
    let domain = graded_domain(spec, f, &[])?;
    let depth = quad.depth_for(d);
    let cells = integration_cells(&domain, depth, spec.bbox().max_edge() / quad.resolution as f64);
    let sp = params.sp();
    let g = |x: &[f64]| {
        if !spec.contains(x) {
            return 0.0;
        }
        let fx = f.eval(x);
        if fx == 0.0 {
            0.0
        } else {
            fx.abs().powf(params.p) * spec.gamma(x).powf(-sp)
        }
    };
    let main = integrate_cells(&cells, d, quad.order, quad.parallel, g);
    let err = if quad.report_error {
        (main.total - integrate_cells(&cells, d, quad.order - 1, quad.parallel, g).total).abs()
    } else {
        0.0
    };
    let (verdict, _) = generation_verdict(&main.per_generation, depth, 1e-9);
    let mut e = Estimate::from_integral(main.total, err, 1.0, verdict, "tensor_grid", quad);
    if verdict == Verdict::Divergent {
        e.value = f64::INFINITY;
        e.error_estimate = f64::INFINITY;
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Aabb;
    use crate::smoothing::{FnOracle, FunctionSpec};
    use approx::assert_relative_eq;

    fn unit() -> OpenSetSpec {
        OpenSetSpec::unit_interval()
    }

    fn bind(f: FunctionSpec) -> crate::smoothing::CatalogFunction {
        f.bind(&unit()).unwrap()
    }

    #[test]
    fn lp_examples() {
        let q = QuadratureConfig::default();
        let one = bind(FunctionSpec::Constant { value: 1.0 });
        assert_relative_eq!(lp_norm(&one, &unit(), 2.0, None, &q).unwrap().value, 1.0, epsilon = 1e-9);
        let w4 = Weight::constant(4.0);
        assert_relative_eq!(lp_norm(&one, &unit(), 2.0, Some(&w4), &q).unwrap().value, 2.0, epsilon = 1e-9);
        let x = bind(FunctionSpec::Coordinate { axis: 0, scale: 1.0 });
        let e = lp_norm(&x, &unit(), 2.0, None, &q).unwrap();
        assert_relative_eq!(e.value, 1.0 / 3f64.sqrt(), epsilon = 1e-6);
        assert!(e.error_estimate < 1e-6, "{:?}", e);
    }

    #[test]
    fn lp_of_indicator_is_exact() {
        let q = QuadratureConfig::default();
        let ind = bind(FunctionSpec::Indicator { min: vec![0.0], max: vec![0.5] });
        assert_relative_eq!(lp_norm(&ind, &unit(), 1.0, None, &q).unwrap().value, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn lp_in_two_dimensions() {
        let s = OpenSetSpec::open_box(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap();
        let f = FnOracle::new(2, |x: &[f64]| x[0] * x[1]);
        // ∫∫ x²y² = (1/3)(8/3)
        let e = lp_norm(&f, &s, 2.0, None, &QuadratureConfig::default()).unwrap();
        assert_relative_eq!(e.value, (8.0f64 / 9.0).sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn hardy_examples() {
        let q = QuadratureConfig::default();
        let p = SobolevParams::new(0.5, 2.0, 1).unwrap();
        let zero = bind(FunctionSpec::Constant { value: 0.0 });
        let e = hardy_term(&zero, &unit(), &p, &q).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.verdict, Verdict::Finite);
        let one = bind(FunctionSpec::Constant { value: 1.0 });
        assert_eq!(hardy_term(&one, &unit(), &p, &q).unwrap().verdict, Verdict::Divergent);
        // ∫ x²(1−x)² / min(x, 1−x) = 2∫_0^{1/2} x(1−x)² dx = 2(1/8 − 1/12 + 1/64)
        let bp = bind(FunctionSpec::BoundaryProduct { min: None, max: None });
        let e = hardy_term(&bp, &unit(), &p, &q).unwrap();
        assert_eq!(e.verdict, Verdict::Finite);
        assert_relative_eq!(e.value, 2.0 * (1.0 / 8.0 - 1.0 / 12.0 + 1.0 / 64.0), epsilon = 1e-9);
    }

    #[test]
    fn estimate_json_roundtrip() {
        let e = lp_norm(&bind(FunctionSpec::Constant { value: 1.0 }), &unit(), 2.0, None, &QuadratureConfig::default()).unwrap();
        let back: Estimate = serde_json::from_str(&e.to_json_line()).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn params_and_config_validation() {
        assert!(SobolevParams::new(1.0, 2.0, 1).is_err());
        assert!(SobolevParams::new(0.5, 0.5, 1).is_err());
        let q = QuadratureConfig { samples: 1, order: 2, ..Default::default() };
        match q.validate() {
            Err(Error::Config(v)) => assert_eq!(v.len(), 2),
            other => panic!("{other:?}"),
        }
        let _ = Aabb::new(vec![0.0], vec![1.0]);
    }
}
