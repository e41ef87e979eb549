//! Low-level quadrature building blocks shared by the smoothing and norm
//! modules: Gauss–Legendre rules, compensated summation, angular rules and
//! seeded random directions.

use rand::Rng;
use std::f64::consts::PI;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on the three-term recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let mut acc = KahanSum::default();
        for (x, w) in self.mapped(a, b) {
            acc.add(w * f(x));
        }
        acc.value()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, dp)
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::Sum<f64> for KahanSum {
    fn sum<I: Iterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().sum::<KahanSum>().value()
}

/// Surface measure of the unit sphere in `R^d` (`2`, `2π`, `4π`).
pub fn sphere_measure(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => panic!("dimension {d} unsupported"),
    }
}

/// Deterministic angular rule: unit directions with weights summing to the
/// sphere measure. `n` controls the resolution (ignored for `d = 1`).
pub fn angular_rule(d: usize, n: usize) -> Vec<([f64; 3], f64)> {
    match d {
        1 => vec![([1.0, 0.0, 0.0], 1.0), ([-1.0, 0.0, 0.0], 1.0)],
        2 => {
            let n = n.max(4);
            let w = 2.0 * PI / n as f64;
            (0..n)
                .map(|i| {
                    let th = (i as f64 + 0.5) * w;
                    ([th.cos(), th.sin(), 0.0], w)
                })
                .collect()
        }
        3 => {
            let nz = (n / 2).max(2);
            let nphi = n.max(4);
            let gl = GaussLegendre::new(nz);
            let wphi = 2.0 * PI / nphi as f64;
            let mut out = Vec::with_capacity(nz * nphi);
            for (&z, &wz) in gl.nodes.iter().zip(&gl.weights) {
                let rho = (1.0 - z * z).sqrt();
                for j in 0..nphi {
                    let phi = (j as f64 + 0.5) * wphi;
                    out.push(([rho * phi.cos(), rho * phi.sin(), z], wz * wphi));
                }
            }
            out
        }
        _ => panic!("dimension {d} unsupported"),
    }
}

/// Uniform random unit vector in `R^d`.
pub fn random_direction<R: Rng + ?Sized>(rng: &mut R, d: usize) -> [f64; 3] {
    match d {
        1 => [if rng.gen::<bool>() { 1.0 } else { -1.0 }, 0.0, 0.0],
        2 => {
            let th = rng.gen::<f64>() * 2.0 * PI;
            [th.cos(), th.sin(), 0.0]
        }
        _ => {
            let z: f64 = rng.gen_range(-1.0..1.0);
            let phi = rng.gen::<f64>() * 2.0 * PI;
            let rho = (1.0 - z * z).sqrt();
            [rho * phi.cos(), rho * phi.sin(), z]
        }
    }
}

/// Tensor-product Gauss rule over a box; calls `f(point, weight)`.
pub fn tensor_box<F: FnMut(&[f64], f64)>(gl: &GaussLegendre, lo: &[f64], hi: &[f64], mut f: F) {
    let d = lo.len();
    let q = gl.len();
    let total = q.pow(d as u32);
    let mut pt = [0.0; 6];
    for idx in 0..total {
        let mut rem = idx;
        let mut w = 1.0;
        for i in 0..d {
            let j = rem % q;
            rem /= q;
            let half = 0.5 * (hi[i] - lo[i]);
            pt[i] = 0.5 * (hi[i] + lo[i]) + half * gl.nodes[j];
            w *= half * gl.weights[j];
        }
        f(&pt[..d], w);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let gl = GaussLegendre::new(5);
        for k in 0..10 {
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            assert_relative_eq!(gl.integrate(-1.0, 1.0, |x| x.powi(k)), exact, epsilon = 1e-14);
        }
        let w: f64 = gl.weights.iter().sum();
        assert_relative_eq!(w, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn high_order_rule_is_stable() {
        let gl = GaussLegendre::new(64);
        assert_relative_eq!(gl.integrate(0.0, PI, f64::sin), 2.0, epsilon = 1e-13);
        assert!(gl.nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut v = vec![1e16, 1.0, -1e16];
        v.extend([1e-3; 1000]);
        assert_relative_eq!(compensated_sum(v), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn angular_rules_integrate_constants() {
        for d in 1..=3 {
            let s: f64 = angular_rule(d, 16).iter().map(|(_, w)| w).sum();
            assert_relative_eq!(s, sphere_measure(d), epsilon = 1e-12);
        }
    }

    #[test]
    fn tensor_box_volume() {
        let gl = GaussLegendre::new(3);
        let mut v = 0.0;
        tensor_box(&gl, &[0.0, 1.0], &[2.0, 4.0], |p, w| v += w * p[0] * p[1]);
        // ∫_0^2 x dx ∫_1^4 y dy = 2 * 7.5
        assert_relative_eq!(v, 15.0, epsilon = 1e-12);
    }
}
