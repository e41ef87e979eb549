//! Smooth bump profile and the partition of unity subordinate to the
//! enlarged Whitney cubes `Q_n*`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Aabb, WhitneyDecomposition, MAX_DIM};
use crate::quad::{random_direction, sphere_measure, GaussLegendre, KahanSum};

/// `h(x) = c_d·exp(-1/(1-|x|^2))` on the unit ball, zero elsewhere, with
/// `c_d` chosen so that `∫h = 1`.
#[derive(Debug, Clone, Copy)]
pub struct BumpProfile {
    dim: usize,
    norm: f64,
}

impl BumpProfile {
    pub fn new(dim: usize) -> Self {
        let gl = GaussLegendre::new(20);
        let panels = 64;
        let mut acc = KahanSum::default();
        for k in 0..panels {
            let a = k as f64 / panels as f64;
            let b = (k + 1) as f64 / panels as f64;
            acc.add(gl.integrate(a, b, |r| raw_bump(r * r) * r.powi(dim as i32 - 1)));
        }
        let integral = sphere_measure(dim) * acc.value();
        Self { dim, norm: 1.0 / integral }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The normalization constant `c_d`.
    pub fn normalization(&self) -> f64 {
        self.norm
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        self.norm * raw_bump(r2)
    }
}

#[inline]
fn raw_bump(r2: f64) -> f64 {
    if r2 < 1.0 {
        (-1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

/// C^∞ transition from 0 (t ≤ 0) to 1 (t ≥ 1).
#[inline]
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// `ψ_n = σ_n / Σ_m σ_m` where `σ_n` is a tensor product of smooth ramps equal
/// to 1 on `Q_n` and 0 outside `Q_n*`.
#[derive(Debug, Clone)]
pub struct PartitionOfUnity {
    decomp: WhitneyDecomposition,
    neighbors: Vec<Vec<usize>>,
}

impl PartitionOfUnity {
    pub fn new(decomp: WhitneyDecomposition) -> Self {
        let neighbors = decomp.neighbors(decomp.star());
        Self { decomp, neighbors }
    }

    pub fn decomposition(&self) -> &WhitneyDecomposition {
        &self.decomp
    }

    pub fn len(&self) -> usize {
        self.decomp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decomp.is_empty()
    }

    /// Cubes whose `Q*` meets `Q_n*`.
    pub fn neighbors(&self, n: usize) -> &[usize] {
        &self.neighbors[n]
    }

    #[inline]
    pub fn sigma(&self, n: usize, x: &[f64]) -> f64 {
        let c = &self.decomp.cubes()[n];
        let inner = 0.5 * c.edge;
        let outer = 0.5 * self.decomp.star() * c.edge;
        let mut v = 1.0;
        for (xi, ci) in x.iter().zip(&c.center) {
            let a = (xi - ci).abs();
            if a >= outer {
                return 0.0;
            }
            if a > inner {
                v *= smoothstep((outer - a) / (outer - inner));
            }
        }
        v
    }

    /// `ψ_n(x)` without bounds checking on `n`.
    #[inline]
    pub fn psi_unchecked(&self, n: usize, x: &[f64]) -> f64 {
        let own = self.sigma(n, x);
        if own == 0.0 {
            return 0.0;
        }
        let mut total = own;
        for &m in &self.neighbors[n] {
            total += self.sigma(m, x);
        }
        own / total
    }

    pub fn psi(&self, n: usize, x: &[f64]) -> Result<f64> {
        if n >= self.len() {
            return Err(Error::InvalidParameter(format!("cube index {n} out of range")));
        }
        Ok(self.psi_unchecked(n, x))
    }

    /// All nonzero `ψ_n(x)`; fails where no `Q_n*` contains `x`.
    pub fn psi_all(&self, x: &[f64]) -> Result<Vec<(usize, f64)>> {
        let mut idx = Vec::new();
        self.decomp.for_each_scaled_containing(x, self.decomp.star(), |i| idx.push(i));
        let sig: Vec<(usize, f64)> = idx.into_iter().map(|i| (i, self.sigma(i, x))).filter(|p| p.1 > 0.0).collect();
        let total: f64 = sig.iter().map(|p| p.1).sum();
        if total == 0.0 {
            return Err(Error::UndefinedRegion);
        }
        let mut out: Vec<(usize, f64)> = sig.into_iter().map(|(i, s)| (i, s / total)).collect();
        out.sort_by_key(|p| p.0);
        Ok(out)
    }

    /// `Σ_n ψ_n(x)` evaluated term by term through each cube's own normalization.
    pub fn partition_sum(&self, x: &[f64]) -> Result<f64> {
        let mut idx = Vec::new();
        self.decomp.for_each_scaled_containing(x, self.decomp.star(), |i| idx.push(i));
        let s: f64 = idx.iter().map(|&i| self.psi_unchecked(i, x)).sum();
        if s == 0.0 {
            Err(Error::UndefinedRegion)
        } else {
            Ok(s)
        }
    }

    /// Empirical `sup |ψ_n(x) − ψ_n(y)|·l(Q_n)/|x − y|` over covered pairs sampled in `Q_n**`.
    /// Pairs touching the truncation collar are skipped, since `ψ_n` jumps there.
    pub fn lipschitz_estimate(&self, n: usize, samples: usize, seed: u64) -> f64 {
        let region = self.decomp.cubes()[n].scaled_box(self.decomp.dim(), self.decomp.star_star());
        self.lipschitz_estimate_in(n, &region, samples, seed)
    }

    /// As [`Self::lipschitz_estimate`] with pairs drawn in `region`.
    pub fn lipschitz_estimate_in(&self, n: usize, region: &Aabb, samples: usize, seed: u64) -> f64 {
        let d = self.decomp.dim();
        let l = self.decomp.cubes()[n].edge;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let quotient = |x: &[f64], u: &[f64; 3], h: f64| -> f64 {
            let mut y = [0.0; MAX_DIM];
            for i in 0..d {
                y[i] = (x[i] + h * u[i]).clamp(region.lo[i], region.hi[i]);
            }
            let dxy: f64 = (0..d).map(|i| (x[i] - y[i]).powi(2)).sum::<f64>().sqrt();
            if dxy == 0.0 || !self.decomp.is_covered(x) || !self.decomp.is_covered(&y[..d]) {
                return 0.0;
            }
            (self.psi_unchecked(n, x) - self.psi_unchecked(n, &y[..d])).abs() * l / dxy
        };
        let mut best = (0.0, [0.0; MAX_DIM], [0.0; 3], 0.0);
        let mut x = [0.0; MAX_DIM];
        for _ in 0..samples {
            for i in 0..d {
                x[i] = rng.gen_range(region.lo[i]..region.hi[i]);
            }
            let h = l * 10f64.powf(rng.gen_range(-3.0..-1.0));
            let u = random_direction(&mut rng, d);
            let q = quotient(&x[..d], &u, h);
            if q > best.0 {
                best = (q, x, u, h);
            }
        }
        // pattern search around the best pair: sampled sups of sharp ramps are noisy
        let (mut q, mut x, u, h) = best;
        if q == 0.0 {
            return 0.0;
        }
        let h = h.min(1e-3 * l);
        q = q.max(quotient(&x[..d], &u, h));
        let mut step = 0.05 * l;
        while step > 1e-5 * l {
            let mut improved = false;
            for i in 0..d {
                for s in [step, -step] {
                    let mut z = x;
                    z[i] = (z[i] + s).clamp(region.lo[i], region.hi[i]);
                    let qz = quotient(&z[..d], &u, h);
                    if qz > q {
                        q = qz;
                        x = z;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        q
    }

    /// `max_n` of the per-cube estimates: the empirical constant `C*`.
    pub fn lipschitz_constant(&self, samples: usize, seed: u64) -> f64 {
        (0..self.len()).map(|n| self.lipschitz_estimate(n, samples, seed)).fold(0.0, f64::max)
    }

    /// Diagnostic CSV of `(cube, generation, estimate)`.
    pub fn lipschitz_csv(&self, samples: usize, seed: u64) -> String {
        let mut s = String::from("cube,generation,lipschitz\n");
        for n in 0..self.len() {
            s.push_str(&format!(
                "{n},{},{:e}\n",
                self.decomp.cubes()[n].generation,
                self.lipschitz_estimate(n, samples, seed)
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{OpenSetSpec, Shape};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn pou_1d(g: u32) -> PartitionOfUnity {
        PartitionOfUnity::new(WhitneyDecomposition::new(&OpenSetSpec::unit_interval(), 0.1, g).unwrap())
    }

    fn pou_2d(g: u32) -> PartitionOfUnity {
        let s = OpenSetSpec::open_box(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        PartitionOfUnity::new(WhitneyDecomposition::new(&s, 0.1, g).unwrap())
    }

    #[test]
    fn bump_vanishes_on_unit_sphere() {
        let h = BumpProfile::new(2);
        assert_eq!(h.eval(&[1.0, 0.0]), 0.0);
        assert_eq!(h.eval(&[0.6, 0.8]), 0.0);
        assert!(h.eval(&[0.5, 0.5]) > 0.0);
    }

    #[test]
    fn bump_integrates_to_one_in_one_dimension() {
        // independent rule: composite Simpson with many panels
        let h = BumpProfile::new(1);
        let n = 200_000;
        let step = 2.0 / n as f64;
        let mut s = h.eval(&[-1.0]) + h.eval(&[1.0]);
        for i in 1..n {
            let x = -1.0 + i as f64 * step;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * h.eval(&[x]);
        }
        assert_relative_eq!(s * step / 3.0, 1.0, epsilon = 1e-8);
        // h(0) = c_1·e^{-1} with c_1 = 1/∫exp(-1/(1-t²))dt ≈ 1/0.443993816
        assert_relative_eq!(h.normalization(), 1.0 / 0.443_993_816_168_079_4, epsilon = 1e-8);
        assert_relative_eq!(h.eval(&[0.0]), h.normalization() * (-1.0f64).exp());
    }

    #[test]
    fn bump_integrates_to_one_in_two_and_three_dimensions() {
        for d in [2usize, 3] {
            let h = BumpProfile::new(d);
            let gl = GaussLegendre::new(40);
            let mut v = 0.0;
            let lo = vec![-1.0; d];
            let hi = vec![1.0; d];
            crate::quad::tensor_box(&gl, &lo, &hi, |p, w| v += w * h.eval(p));
            assert_relative_eq!(v, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn smoothstep_is_monotone_and_symmetric() {
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            assert_relative_eq!(smoothstep(t) + smoothstep(1.0 - t), 1.0, epsilon = 1e-14);
            assert!(smoothstep(t + 0.01) >= smoothstep(t));
        }
    }

    #[test]
    fn psi_support_is_exact() {
        let p = pou_1d(8);
        let w = p.decomposition();
        for n in 0..p.len() {
            let b = w.cubes()[n].scaled_box(1, w.star());
            assert_eq!(p.psi(n, &[b.hi[0]]).unwrap(), 0.0);
            assert_eq!(p.psi(n, &[b.lo[0] - 1e-9]).unwrap(), 0.0);
        }
        assert!(p.psi(p.len(), &[0.5]).is_err());
    }

    #[test]
    fn psi_is_one_where_only_one_cube_reaches() {
        let p = pou_1d(8);
        let w = p.decomposition();
        let n = w.locate(&[0.375]).unwrap();
        assert_eq!(w.scaled_containing(&[0.375], w.star()), vec![n]);
        assert_eq!(p.psi(n, &[0.375]).unwrap(), 1.0);
    }

    #[test]
    fn undefined_outside_cover() {
        let p = pou_1d(4);
        assert!(matches!(p.partition_sum(&[1e-6]), Err(Error::UndefinedRegion)));
        assert!(matches!(p.psi_all(&[2.0]), Err(Error::UndefinedRegion)));
    }

    #[test]
    fn partition_sums_to_one_in_two_dimensions() {
        let p = pou_2d(7);
        let w = p.decomposition();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let x = [rng.gen::<f64>(), rng.gen::<f64>()];
            if !w.is_covered(&x) {
                continue;
            }
            let s = p.partition_sum(&x).unwrap();
            assert!((s - 1.0).abs() <= 1e-12, "{s}");
        }
    }

    #[test]
    fn lipschitz_constant_is_uniform_across_generations() {
        let p = pou_1d(10);
        let g = p.decomposition().max_generation();
        let est: Vec<f64> = (0..p.len()).map(|n| p.lipschitz_estimate(n, 2000, 9)).collect();
        let max = est.iter().cloned().fold(0.0, f64::max);
        // cubes well clear of the truncation collar see the full ramp structure
        let min = (0..p.len())
            .filter(|&n| p.decomposition().cubes()[n].generation + 3 <= g)
            .map(|n| est[n])
            .fold(f64::INFINITY, f64::min);
        assert!(max.is_finite() && max < 1000.0, "{max}");
        assert!(min > 0.1 * max, "estimates {est:?}");
        let doubled = p.lipschitz_constant(4000, 9);
        assert!((doubled - max).abs() <= 0.25 * max, "{doubled} vs {max}");
    }

    #[test]
    fn lipschitz_estimate_is_scale_invariant() {
        let small = pou_1d(8);
        let big_spec = OpenSetSpec::new(1, vec![Shape::Box { min: vec![0.0], max: vec![2.0] }], Aabb::new(vec![0.0], vec![2.0])).unwrap();
        let big = PartitionOfUnity::new(WhitneyDecomposition::new(&big_spec, 0.1, 8).unwrap());
        assert_eq!(small.len(), big.len());
        for n in [0, 3, 7] {
            let a = small.lipschitz_estimate(n, 3000, 4);
            let b = big.lipschitz_estimate(n, 3000, 4);
            assert_relative_eq!(a, b, max_relative = 1e-9);
        }
    }

    #[test]
    fn lipschitz_zero_away_from_support() {
        let p = pou_1d(6);
        let far = Aabb::new(vec![0.9], vec![0.95]);
        let n = p.decomposition().locate(&[0.3]).unwrap();
        assert_eq!(p.lipschitz_estimate_in(n, &far, 500, 1), 0.0);
    }

    #[test]
    fn psi_has_converging_finite_differences() {
        let p = pou_1d(8);
        let n = p.decomposition().locate(&[0.3]).unwrap();
        let c = p.decomposition().cubes()[n].clone();
        // a point inside the transition band of Q_n*
        let x = c.center[0] + 0.5 * c.edge * 1.03;
        let fd = |h: f64| (p.psi_unchecked(n, &[x + h]) - p.psi_unchecked(n, &[x - h])) / (2.0 * h);
        let (d1, d2, d3) = (fd(1e-4 * c.edge), fd(5e-5 * c.edge), fd(2.5e-5 * c.edge));
        // central differences converge at second order: successive gaps shrink ~4x
        let r = (d1 - d2).abs() / (d2 - d3).abs().max(1e-300);
        assert!(r > 3.0 && r < 5.0, "ratio {r}");
    }

    proptest! {
        #[test]
        fn psi_in_unit_range(x in 0.0f64..1.0) {
            let p = pou_1d(6);
            for n in 0..p.len() {
                let v = p.psi_unchecked(n, &[x]);
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
