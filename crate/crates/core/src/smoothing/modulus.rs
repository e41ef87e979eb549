//! Translation moduli `‖τ_t g − g‖_{L^p}` and the functions `g_n` on `R^{2d}`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::FunctionOracle;
use crate::error::{Error, Result};
use crate::geometry::{Aabb, OpenSetSpec, RemovedSet};
use crate::norms::{radial_panels, KernelSpec, QuadratureConfig};
use crate::partition::PartitionOfUnity;
use crate::quad::{random_direction, sphere_measure, tensor_box, GaussLegendre, KahanSum};

/// Per-axis breakpoints of the box rule: support ends, their translates and
/// the declared jump hyperplanes (with translates).
fn axis_breaks(g: &dyn FunctionOracle, region: &Aabb, s: &Aabb, t: &[f64], cells: usize) -> Vec<Vec<f64>> {
    let dim = region.dim();
    let singular = g.singular_set();
    (0..dim)
        .map(|i| {
            let (lo, hi) = (region.lo[i], region.hi[i]);
            let mut b: Vec<f64> = (0..=cells).map(|k| lo + (hi - lo) * k as f64 / cells as f64).collect();
            b.extend([s.lo[i], s.hi[i], s.lo[i] + t[i], s.hi[i] + t[i]]);
            for r in &singular {
                if let RemovedSet::Hyperplane { axis, value } = r {
                    if *axis == i {
                        b.extend([*value, value + t[i]]);
                    }
                }
            }
            b.retain(|v| *v >= lo && *v <= hi);
            b.sort_by(f64::total_cmp);
            b.dedup_by(|a, c| (*a - *c).abs() <= 1e-15 * (hi - lo));
            b
        })
        .collect()
}

/// `‖τ_t g − g‖_{L^p}` with `τ_t g(x) = g(x − t)`, by composite tensor
/// Gauss–Legendre over the support enlarged by `t`.
pub fn translation_modulus(g: &dyn FunctionOracle, t: &[f64], p: f64, quad: &QuadratureConfig) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must be at least 1")));
    }
    let dim = g.dim();
    if t.len() != dim {
        return Err(Error::InvalidParameter(format!("shift has {} components for dimension {dim}", t.len())));
    }
    if dim > 3 {
        return Err(Error::InvalidParameter(format!("box rule limited to dimension 3, got {dim}")));
    }
    let s = g.support().ok_or(Error::MissingSupport)?;
    if t.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let region = s.hull(&s.translated(t));
    let cells = match dim {
        1 => quad.resolution,
        2 => quad.resolution / 2,
        _ => quad.resolution / 4,
    }
    .max(1);
    let breaks = axis_breaks(g, &region, &s, t, cells);
    let gl = GaussLegendre::new(quad.order);
    let mut acc = KahanSum::default();
    let counts: Vec<usize> = breaks.iter().map(|b| b.len() - 1).collect();
    let total: usize = counts.iter().product();
    let mut lo = [0.0; 3];
    let mut hi = [0.0; 3];
    let mut shifted = [0.0; 3];
    for mut idx in 0..total {
        for i in 0..dim {
            let k = idx % counts[i];
            idx /= counts[i];
            lo[i] = breaks[i][k];
            hi[i] = breaks[i][k + 1];
        }
        tensor_box(&gl, &lo[..dim], &hi[..dim], |x, w| {
            for i in 0..dim {
                shifted[i] = x[i] - t[i];
            }
            let diff = (g.eval(&shifted[..dim]) - g.eval(x)).abs();
            if diff > 0.0 {
                acc.add(w * diff.powf(p));
            }
        });
    }
    Ok(acc.value().powf(1.0 / p))
}

/// `f ψ_n`, supported in `Q_n*`.
pub struct LocalPiece<'a> {
    pub f: &'a dyn FunctionOracle,
    pub pou: &'a PartitionOfUnity,
    pub n: usize,
}

impl FunctionOracle for LocalPiece<'_> {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let psi = self.pou.psi_unchecked(self.n, x);
        if psi == 0.0 {
            0.0
        } else {
            psi * self.f.eval(x)
        }
    }

    fn support(&self) -> Option<Aabb> {
        let decomp = self.pou.decomposition();
        Some(decomp.cubes()[self.n].scaled_box(decomp.dim(), decomp.star()))
    }

    fn singular_set(&self) -> Vec<RemovedSet> {
        self.f.singular_set()
    }
}

/// Radial factor of `g_n`.
#[derive(Debug, Clone, PartialEq)]
pub enum GnKernel {
    /// `|x − y|^{−d/p − s}`.
    Fractional { s: f64 },
    /// `K(|x − y|)^{1/p}`.
    Kernel(KernelSpec),
}

impl GnKernel {
    fn factor(&self, r: f64, d: usize, p: f64) -> f64 {
        match self {
            GnKernel::Fractional { s } => r.powf(-(d as f64) / p - s),
            GnKernel::Kernel(k) => k.eval(r).powf(1.0 / p),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            GnKernel::Fractional { .. } => Vec::new(),
            GnKernel::Kernel(k) => k.breakpoints(),
        }
    }
}

/// `g_n(x, y) = (fψ_n(x) − fψ_n(y))·k(|x − y|)` on `Ω × Ω`, zero elsewhere
/// and on the diagonal.
pub struct GnOracle<'a> {
    piece: LocalPiece<'a>,
    spec: &'a OpenSetSpec,
    kernel: GnKernel,
    p: f64,
}

pub fn make_gn<'a>(f: &'a dyn FunctionOracle, pou: &'a PartitionOfUnity, n: usize, kernel: GnKernel, p: f64) -> GnOracle<'a> {
    GnOracle { piece: LocalPiece { f, pou, n }, spec: pou.decomposition().spec(), kernel, p }
}

impl GnOracle<'_> {
    pub fn piece(&self) -> &LocalPiece<'_> {
        &self.piece
    }
}

impl FunctionOracle for GnOracle<'_> {
    fn dim(&self) -> usize {
        2 * self.piece.dim()
    }

    fn eval(&self, z: &[f64]) -> f64 {
        let d = self.piece.dim();
        let (x, y) = z.split_at(d);
        let r = crate::geometry::dist(x, y);
        if r == 0.0 || !self.spec.contains(x) || !self.spec.contains(y) {
            return 0.0;
        }
        let diff = self.piece.eval(x) - self.piece.eval(y);
        if diff == 0.0 {
            return 0.0;
        }
        diff * self.kernel.factor(r, d, self.p)
    }

    fn support(&self) -> Option<Aabb> {
        let b = self.spec.bbox();
        let star = self.piece.support()?;
        let hull = b.hull(&star);
        Some(Aabb::new(
            hull.lo.iter().chain(&hull.lo).copied().collect(),
            hull.hi.iter().chain(&hull.hi).copied().collect(),
        ))
    }
}

/// `‖τ_t g_n − g_n‖^p_{L^p(R^{2d})}` for the diagonal shift `(t, t)`.
///
/// With `A = Q_n* ∪ (Q_n* + t)` and any box `B ⊇ A`, the integrand vanishes
/// unless `x ∈ A` or `y ∈ A`, so by symmetry the integral equals
/// `∫_{x∈B} ∫_y |G|^p (1 + 1_{y∉B})`; the inner integral runs along rays.
pub struct GnModulus<'a> {
    piece: LocalPiece<'a>,
    spec: &'a OpenSetSpec,
    kernel: GnKernel,
    breaks: Vec<f64>,
    p: f64,
    d: usize,
    gl: GaussLegendre,
    outer_cells: usize,
    samples: usize,
    delta: f64,
    levels: u32,
    hmax: f64,
}

impl<'a> GnModulus<'a> {
    pub fn new(f: &'a dyn FunctionOracle, pou: &'a PartitionOfUnity, n: usize, kernel: GnKernel, p: f64, quad: &QuadratureConfig) -> Self {
        let decomp = pou.decomposition();
        let edge = decomp.cubes()[n].edge;
        let breaks = kernel.breakpoints();
        Self {
            piece: LocalPiece { f, pou, n },
            spec: decomp.spec(),
            kernel,
            breaks,
            p,
            d: decomp.dim(),
            gl: GaussLegendre::new(quad.order.clamp(2, 8)),
            outer_cells: 16,
            samples: 256 * quad.samples.max(1),
            delta: quad.delta_band * edge,
            levels: quad.grade_levels.min(16),
            hmax: edge / 8.0,
        }
    }

    fn star(&self) -> Aabb {
        self.piece.support().expect("local piece has a support box")
    }

    /// Inner integral along the ray `x + r u`.
    fn ray(&self, x: &[f64], u: &[f64], t: &[f64], b: &Aabb, panels: &mut Vec<(f64, f64)>) -> f64 {
        let d = self.d;
        let mut xt = [0.0; 3];
        for i in 0..d {
            xt[i] = x[i] - t[i];
        }
        let xt = &xt[..d];
        let in_x = self.spec.contains(x);
        let in_xt = self.spec.contains(xt);
        if !in_x && !in_xt {
            return 0.0;
        }
        let fx = self.piece.eval(x);
        let fxt = self.piece.eval(xt);
        let i1 = if in_x { self.spec.ray_intervals(x, u, true) } else { Vec::new() };
        let i2 = if in_xt { self.spec.ray_intervals(xt, u, true) } else { Vec::new() };
        let exit_b = b.ray_clip(x, u).map_or(0.0, |c| c.1);
        let mut pts = vec![0.0, exit_b];
        for &(a, c) in i1.iter().chain(&i2) {
            pts.extend([a, c]);
        }
        pts.extend(self.breaks.iter().copied());
        pts.retain(|v| v.is_finite() && *v >= 0.0);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let inside = |iv: &[(f64, f64)], r: f64| iv.iter().any(|&(a, c)| r > a && r < c);
        let mut acc = KahanSum::default();
        let mut y = [0.0; 3];
        let mut yt = [0.0; 3];
        for w in pts.windows(2) {
            let (a, c) = (w[0], w[1]);
            let mid = 0.5 * (a + c);
            let in1 = inside(&i1, mid);
            let in2 = inside(&i2, mid);
            if !in1 && !in2 {
                continue;
            }
            let factor = if mid < exit_b { 1.0 } else { 2.0 };
            let mut integrand = |r: f64| {
                for i in 0..d {
                    y[i] = x[i] + r * u[i];
                    yt[i] = y[i] - t[i];
                }
                let a_term = if in2 { fxt - self.piece.eval(&yt[..d]) } else { 0.0 };
                let b_term = if in1 { fx - self.piece.eval(&y[..d]) } else { 0.0 };
                let g = a_term - b_term;
                if g == 0.0 {
                    return 0.0;
                }
                (g.abs() * self.kernel.factor(r, d, self.p)).powf(self.p) * r.powi(d as i32 - 1)
            };
            let singular = a <= 0.0;
            if singular && c <= self.delta {
                continue;
            }
            panels.clear();
            let first = if singular { self.delta } else { (c - a) * 0.5f64.powi(self.levels as i32) };
            radial_panels(a, c, first, singular, self.levels, self.hmax, panels);
            for &(lo, hi) in panels.iter() {
                acc.add(factor * self.gl.integrate(lo, hi, &mut integrand));
            }
        }
        acc.value()
    }

    /// `‖τ_t g_n − g_n‖^p`; `seed` drives the Monte-Carlo outer rule for `d ≥ 2`.
    pub fn pow(&self, t: &[f64], seed: u64) -> f64 {
        let d = self.d;
        if t.iter().all(|v| *v == 0.0) {
            return 0.0;
        }
        let star = self.star();
        let b = star.hull(&star.translated(t));
        let mut panels = Vec::new();
        if d == 1 {
            let mut cuts: Vec<f64> = (0..=self.outer_cells)
                .map(|k| b.lo[0] + (b.hi[0] - b.lo[0]) * k as f64 / self.outer_cells as f64)
                .collect();
            cuts.extend([star.lo[0] + t[0], star.hi[0] + t[0], star.lo[0], star.hi[0]]);
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let mut acc = KahanSum::default();
            for w in cuts.windows(2) {
                for (x, wx) in self.gl.mapped(w[0], w[1]) {
                    let v = self.ray(&[x], &[1.0], t, &b, &mut panels) + self.ray(&[x], &[-1.0], t, &b, &mut panels);
                    acc.add(wx * v);
                }
            }
            return acc.value();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vol = b.volume();
        let sphere = sphere_measure(d);
        let mut acc = KahanSum::default();
        let mut x = [0.0; 3];
        for _ in 0..self.samples {
            for i in 0..d {
                x[i] = b.lo[i] + (b.hi[i] - b.lo[i]) * rand::Rng::gen::<f64>(&mut rng);
            }
            let u = random_direction(&mut rng, d);
            acc.add(self.ray(&x[..d], &u[..d], t, &b, &mut panels));
        }
        acc.value() * vol * sphere / self.samples as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::WhitneyDecomposition;
    use crate::smoothing::FnOracle;
    use approx::assert_relative_eq;

    fn hat() -> impl FunctionOracle {
        FnOracle::new(1, |x: &[f64]| (1.0 - (2.0 * x[0] - 1.0).abs()).max(0.0))
            .with_support(Aabb::new(vec![0.0], vec![1.0]))
    }

    #[test]
    fn zero_shift_gives_zero() {
        let q = QuadratureConfig::default();
        assert_eq!(translation_modulus(&hat(), &[0.0], 2.0, &q).unwrap(), 0.0);
    }

    #[test]
    fn indicator_shift_measures_symmetric_difference() {
        let g = FnOracle::new(1, |x: &[f64]| if x[0] > 0.0 && x[0] < 1.0 { 1.0 } else { 0.0 })
            .with_support(Aabb::new(vec![0.0], vec![1.0]));
        let q = QuadratureConfig::default();
        assert_relative_eq!(translation_modulus(&g, &[0.1], 1.0, &q).unwrap(), 0.2, epsilon = 1e-12);
    }

    #[test]
    fn missing_support_is_an_error() {
        let g = FnOracle::new(1, |_: &[f64]| 1.0);
        let q = QuadratureConfig::default();
        assert!(matches!(translation_modulus(&g, &[0.1], 1.0, &q), Err(Error::MissingSupport)));
    }

    #[test]
    fn hat_modulus_matches_dense_grid() {
        let q = QuadratureConfig::default();
        let g = hat();
        for (t, p) in [(0.1, 2.0), (0.037, 1.0), (0.3, 3.0)] {
            let m = translation_modulus(&g, &[t], p, &q).unwrap();
            let n = 400_000;
            let (lo, hi) = (0.0, 1.0 + t);
            let h = (hi - lo) / n as f64;
            let mut s = 0.0;
            for i in 0..n {
                let x = lo + (i as f64 + 0.5) * h;
                s += (g.eval(&[x - t]) - g.eval(&[x])).abs().powf(p);
            }
            let brute = (s * h).powf(1.0 / p);
            assert!((m - brute).abs() < 0.01 * brute, "t={t} p={p}: {m} vs {brute}");
        }
    }

    #[test]
    fn modulus_vanishes_under_halving() {
        let q = QuadratureConfig::default();
        let g = hat();
        let m: Vec<f64> = (0..12).map(|j| translation_modulus(&g, &[0.2 / 2f64.powi(j)], 2.0, &q).unwrap()).collect();
        assert!(m[11] < 1e-3 * m[0]);
    }

    fn pou() -> PartitionOfUnity {
        PartitionOfUnity::new(WhitneyDecomposition::new(&OpenSetSpec::unit_interval(), 0.1, 10).unwrap())
    }

    #[test]
    fn gn_vanishes_on_diagonal_and_for_zero() {
        let p = pou();
        let f = FnOracle::new(1, |x: &[f64]| x[0]);
        let zero = FnOracle::new(1, |_: &[f64]| 0.0);
        let g = make_gn(&f, &p, 3, GnKernel::Fractional { s: 0.5 }, 2.0);
        let c = p.decomposition().cubes()[3].center[0];
        assert_eq!(g.eval(&[c, c]), 0.0);
        assert!(g.eval(&[c, c + 0.01]) != 0.0);
        assert_eq!(g.eval(&[c, 1.5]), 0.0);
        let g0 = make_gn(&zero, &p, 3, GnKernel::Fractional { s: 0.5 }, 2.0);
        assert_eq!(g0.eval(&[c, c + 0.01]), 0.0);
    }

    #[test]
    fn radial_gn_modulus_matches_box_rule() {
        let p = pou();
        let f = FnOracle::new(1, |x: &[f64]| x[0] * (1.0 - x[0]));
        let q = QuadratureConfig::default();
        // the box rule resolves the diagonal slowly
        let fine = QuadratureConfig { resolution: 1024, order: 12, ..Default::default() };
        for n in [0usize, 2, 5] {
            let m = GnModulus::new(&f, &p, n, GnKernel::Fractional { s: 0.3 }, 2.0, &q);
            let t = 0.02 * p.decomposition().cubes()[n].edge;
            let radial = m.pow(&[t], 0);
            let g = make_gn(&f, &p, n, GnKernel::Fractional { s: 0.3 }, 2.0);
            let boxed = translation_modulus(&g, &[t, t], 2.0, &fine).unwrap().powi(2);
            assert!((radial - boxed).abs() < 0.02 * boxed, "n={n}: {radial} vs {boxed}");
        }
    }

    #[test]
    fn radial_gn_modulus_zero_for_zero_function() {
        let p = pou();
        let zero = FnOracle::new(1, |_: &[f64]| 0.0);
        let q = QuadratureConfig::default();
        let m = GnModulus::new(&zero, &p, 1, GnKernel::Fractional { s: 0.5 }, 2.0, &q);
        assert_eq!(m.pow(&[0.01], 0), 0.0);
    }
}
