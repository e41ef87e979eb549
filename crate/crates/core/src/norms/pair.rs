//! Double integrals `∫∫ |f(x) − f(y)|^p K(|x−y|) w(x) w(y) dy dx` over
//! `(Ω ∩ bbox)²`, with the inner integral taken along rays from `x`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    generation_verdict, graded_domain, integration_cells, radial_panels, Cell, Estimate, KernelSpec, QuadratureConfig,
    SobolevParams, Verdict, Weight,
};
use crate::error::{Error, Result};
use crate::geometry::OpenSetSpec;
use crate::quad::{random_direction, sphere_measure, tensor_box, GaussLegendre, KahanSum};
use crate::smoothing::FunctionOracle;

/// Inputs of a pair integral.
pub struct PairSetup<'a> {
    pub f: &'a dyn FunctionOracle,
    pub spec: &'a OpenSetSpec,
    pub p: f64,
    pub kernel: KernelSpec,
    pub weight: Option<&'a Weight>,
}

struct Prepared<'a> {
    f: &'a dyn FunctionOracle,
    spec: &'a OpenSetSpec,
    domain: OpenSetSpec,
    d: usize,
    p: f64,
    kernel: KernelSpec,
    weight: Option<&'a Weight>,
    lipschitz: Option<f64>,
    /// `∫_0^δ r^p K(r) r^{d−1} dr`.
    band_moment: Option<f64>,
    delta: f64,
    levels: u32,
    inner_hmax: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct PointResult {
    value: f64,
    band: f64,
    diagonal_divergent: bool,
}

impl Prepared<'_> {
    fn w(&self, x: &[f64]) -> f64 {
        self.weight.map_or(1.0, |w| w.eval(x))
    }

    /// `∫ |f(x) − f(x + r u)|^p w(x + r u) K(r) r^{d−1} dr` over the ray's
    /// pieces inside `Ω ∩ bbox`, plus the diagonal-band piece.
    fn ray(&self, x: &[f64], (fx, sx): (f64, f64), wx: f64, u: &[f64], gl: &GaussLegendre, panels: &mut Vec<(f64, f64)>) -> PointResult {
        let d = self.d;
        let mut ivs = self.domain.ray_intervals(x, u, true);
        let breaks = self.kernel.breakpoints();
        if !breaks.is_empty() {
            let mut split = Vec::with_capacity(ivs.len() + breaks.len());
            for (a, b) in ivs {
                let mut s = a;
                for &c in breaks.iter().filter(|&&c| c > a && c < b) {
                    split.push((s, c));
                    s = c;
                }
                split.push((s, b));
            }
            ivs = split;
        }
        let mut y = [0.0; 3];
        let mut integrand = |r: f64| {
            for i in 0..d {
                y[i] = x[i] + r * u[i];
            }
            let (fy, sy) = self.f.eval_scaled(&y[..d]);
            let diff = (fx - fy).abs();
            if diff <= sx + sy {
                return 0.0;
            }
            let wy = self.w(&y[..d]);
            diff.powf(self.p) * wy * self.kernel.eval(r) * r.powi(d as i32 - 1)
        };
        let mut acc = KahanSum::default();
        let mut out = PointResult::default();
        for &(a, b) in &ivs {
            let singular = a <= 0.0;
            let a = a.max(0.0);
            if singular && b <= self.delta {
                continue;
            }
            panels.clear();
            let first = if singular { self.delta } else { (b - a) * 0.5f64.powi(self.levels as i32) };
            radial_panels(a, b, first, singular, self.levels, self.inner_hmax, panels);
            for &(lo, hi) in panels.iter() {
                acc.add(gl.integrate(lo, hi, &mut integrand));
            }
            if singular && self.delta > 0.0 {
                match (self.lipschitz, self.band_moment) {
                    (Some(l), Some(m)) => out.band += l.powf(self.p) * wx * m,
                    _ => {
                        let d1 = gl.integrate(self.delta, (2.0 * self.delta).min(b), &mut integrand);
                        let d2 = if b > 2.0 * self.delta {
                            gl.integrate(2.0 * self.delta, (4.0 * self.delta).min(b), &mut integrand)
                        } else {
                            0.0
                        };
                        if d1 > 0.0 {
                            if d2 > 0.0 && d1 < d2 {
                                let q = d1 / d2;
                                out.band += d1 * q / (1.0 - q);
                            } else {
                                out.diagonal_divergent = true;
                                out.band += d1 * 60.0;
                            }
                        }
                    }
                }
            }
        }
        out.value = acc.value();
        out
    }

    /// Inner integral at `x` with the given directions, weighted by `w(x)`.
    fn point(&self, x: &[f64], dirs: &[([f64; 3], f64)], gl: &GaussLegendre, panels: &mut Vec<(f64, f64)>) -> PointResult {
        if !self.domain.contains(x) {
            return PointResult::default();
        }
        let wx = self.w(x);
        if wx == 0.0 {
            return PointResult::default();
        }
        let fx = self.f.eval_scaled(x);
        let mut out = PointResult::default();
        for (u, wu) in dirs {
            let r = self.ray(x, fx, wx, &u[..self.d], gl, panels);
            out.value += wu * r.value;
            out.band += wu * r.band;
            out.diagonal_divergent |= r.diagonal_divergent;
        }
        out.value *= wx;
        out.band *= wx;
        out
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct CellResult {
    value: f64,
    band: f64,
    var: f64,
    diagonal_divergent: bool,
}

fn tensor_cell(prep: &Prepared, cell: &Cell, outer: &GaussLegendre, inner: &GaussLegendre) -> CellResult {
    let d = prep.d;
    let dirs = [([1.0, 0.0, 0.0], 1.0), ([-1.0, 0.0, 0.0], 1.0)];
    let sphere;
    let dirs: &[([f64; 3], f64)] = if d == 1 {
        &dirs
    } else {
        sphere = crate::quad::angular_rule(d, 16);
        &sphere
    };
    let mut panels = Vec::new();
    let mut acc = KahanSum::default();
    let mut band = 0.0;
    let mut div = false;
    tensor_box(outer, &cell.lo[..d], &cell.hi[..d], |x, w| {
        let r = prep.point(x, dirs, inner, &mut panels);
        acc.add(w * r.value);
        band += w * r.band;
        div |= r.diagonal_divergent;
    });
    CellResult { value: acc.value(), band, var: 0.0, diagonal_divergent: div }
}

fn monte_carlo_cell(prep: &Prepared, cell: &Cell, idx: usize, samples: usize, seed: u64, inner: &GaussLegendre) -> CellResult {
    let d = prep.d;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (idx as u64).wrapping_mul(0xD1B5_4A32_D192_ED03));
    let vol = cell.volume(d);
    let sm = sphere_measure(d);
    let mut panels = Vec::new();
    let mut vals = Vec::with_capacity(samples);
    let mut band = 0.0;
    let mut div = false;
    let mut x = [0.0; 3];
    for _ in 0..samples {
        for i in 0..d {
            x[i] = rng.gen_range(cell.lo[i]..cell.hi[i]);
        }
        let u = random_direction(&mut rng, d);
        let r = prep.point(&x[..d], &[(u, sm)], inner, &mut panels);
        vals.push(vol * r.value);
        band += vol * r.band / samples as f64;
        div |= r.diagonal_divergent;
    }
    let n = samples as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n;
    CellResult { value: mean, band, var, diagonal_divergent: div }
}

struct PassResult {
    total: f64,
    band: f64,
    var: f64,
    per_generation: Vec<f64>,
    /// Part of `total` from cells where the grading stopped.
    collar: f64,
    diagonal_divergent: bool,
}

fn run_pass(prep: &Prepared, cells: &[Cell], quad: &QuadratureConfig, outer_order: usize, inner_order: usize) -> PassResult {
    let outer = GaussLegendre::new(outer_order);
    let inner = GaussLegendre::new(inner_order);
    let mc = quad.monte_carlo(prep.d);
    let one = |(i, c): (usize, &Cell)| {
        if mc {
            monte_carlo_cell(prep, c, i, quad.samples, quad.seed, &inner)
        } else {
            tensor_cell(prep, c, &outer, &inner)
        }
    };
    let res: Vec<CellResult> = if quad.parallel {
        cells.par_iter().enumerate().map(one).collect()
    } else {
        cells.iter().enumerate().map(one).collect()
    };
    let max_gen = cells.iter().map(|c| c.generation).max().unwrap_or(0) as usize;
    let mut per = vec![KahanSum::default(); max_gen + 1];
    let mut total = KahanSum::default();
    let mut band = KahanSum::default();
    let mut var = 0.0;
    let mut div = false;
    let mut collar = KahanSum::default();
    for (c, r) in cells.iter().zip(&res) {
        total.add(r.value);
        band.add(r.band);
        var += r.var;
        div |= r.diagonal_divergent;
        if c.collar {
            collar.add(r.value);
        } else {
            per[c.generation as usize].add(r.value);
        }
    }
    PassResult {
        total: total.value(),
        band: band.value(),
        var,
        per_generation: per.iter().map(|k| k.value()).collect(),
        collar: collar.value(),
        diagonal_divergent: div,
    }
}

/// The generic pair integral; the returned estimate's `value` is the `p`-th root.
pub fn pair_integral(setup: &PairSetup, quad: &QuadratureConfig) -> Result<Estimate> {
    quad.validate()?;
    if !(setup.p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p = {} must be at least 1", setup.p)));
    }
    let d = setup.spec.dim();
    if setup.f.dim() != d {
        return Err(Error::InvalidParameter("function and domain dimensions differ".into()));
    }
    setup.kernel.validate()?;
    let zeros = match setup.weight {
        Some(w) => {
            w.validate(setup.spec)?;
            w.zero_set.clone()
        }
        None => Vec::new(),
    };
    let domain = graded_domain(setup.spec, setup.f, &zeros)?;
    let depth = quad.depth_for(d);
    let edge = setup.spec.bbox().max_edge();
    let cells = integration_cells(&domain, depth, edge / quad.resolution as f64);
    let prep = Prepared {
        f: setup.f,
        spec: setup.spec,
        domain,
        d,
        p: setup.p,
        kernel: setup.kernel.clone(),
        weight: setup.weight,
        lipschitz: setup.f.lipschitz(),
        band_moment: setup.kernel.band_moment(d, setup.p, quad.delta_band),
        delta: quad.delta_band,
        levels: quad.grade_levels,
        inner_hmax: edge / 16.0,
    };
    let _ = prep.spec;
    let outer_order = (quad.order / 2).max(3);
    let main = run_pass(&prep, &cells, quad, outer_order, quad.order);
    let mc = quad.monte_carlo(d);
    // collar cells hold the unresolved part near the boundary and jumps
    let mut err = main.band + main.collar.abs();
    if mc {
        err += 2.0 * main.var.sqrt();
    } else if quad.report_error {
        let low = run_pass(&prep, &cells, quad, outer_order - 1, quad.order - 2);
        err += (main.total - low.total).abs();
    }
    let tol = if mc { 0.05 } else { 1e-9 };
    let (mut verdict, _) = generation_verdict(&main.per_generation, depth, tol);
    if main.diagonal_divergent {
        verdict = Verdict::Divergent;
    }
    if main.total == 0.0 && main.band == 0.0 && !main.diagonal_divergent {
        verdict = Verdict::Finite;
    }
    let mut e = Estimate::from_integral(main.total, err, setup.p, verdict, quad.method_name(d), quad);
    if verdict == Verdict::Divergent {
        e.error_estimate = f64::INFINITY;
        e.integral_error = f64::INFINITY;
    }
    Ok(e)
}

/// `[f]_{W^{s,p}(Ω)}`.
pub fn gagliardo(f: &dyn FunctionOracle, spec: &OpenSetSpec, params: &SobolevParams, quad: &QuadratureConfig) -> Result<Estimate> {
    params.validate()?;
    let kernel = KernelSpec::fractional(params.d, params.s, params.p);
    pair_integral(&PairSetup { f, spec, p: params.p, kernel, weight: None }, quad)
}

/// `[f]_{W^{s,p}(Ω, w)}`, over `Ω'` for continuous weights.
pub fn weighted_gagliardo(
    f: &dyn FunctionOracle,
    spec: &OpenSetSpec,
    params: &SobolevParams,
    w: &Weight,
    quad: &QuadratureConfig,
) -> Result<Estimate> {
    params.validate()?;
    let kernel = KernelSpec::fractional(params.d, params.s, params.p);
    pair_integral(&PairSetup { f, spec, p: params.p, kernel, weight: Some(w) }, quad)
}

/// `[f]_K`.
pub fn kernel_seminorm(f: &dyn FunctionOracle, spec: &OpenSetSpec, p: f64, k: &KernelSpec, quad: &QuadratureConfig) -> Result<Estimate> {
    pair_integral(&PairSetup { f, spec, p, kernel: k.clone(), weight: None }, quad)
}
