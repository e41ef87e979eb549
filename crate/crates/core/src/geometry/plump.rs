use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{dist, norm, OpenSetSpec, Shape};
use crate::quad::random_direction;

/// Closed set tested for plumpness (typically `Ω^c`).
#[derive(Debug, Clone)]
pub enum ClosedSet {
    Point(Vec<f64>),
    Segment(Vec<f64>, Vec<f64>),
    /// `{x : normal·x ≥ offset}` with unit normal.
    HalfSpace { normal: Vec<f64>, offset: f64 },
    Ball { center: Vec<f64>, radius: f64 },
    ComplementOf(OpenSetSpec),
}

impl ClosedSet {
    pub fn dim(&self) -> usize {
        match self {
            ClosedSet::Point(p) | ClosedSet::Segment(p, _) => p.len(),
            ClosedSet::HalfSpace { normal, .. } => normal.len(),
            ClosedSet::Ball { center, .. } => center.len(),
            ClosedSet::ComplementOf(s) => s.dim(),
        }
    }

    /// `dist(z, A^c)` for `z` in the interior, `-dist(z, A)` outside.
    pub fn signed_depth(&self, z: &[f64]) -> f64 {
        match self {
            ClosedSet::Point(p) => -dist(z, p),
            ClosedSet::Segment(a, b) => {
                let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
                let len2: f64 = ab.iter().map(|v| v * v).sum();
                let t = if len2 == 0.0 {
                    0.0
                } else {
                    (z.iter().zip(a).zip(&ab).map(|((zi, ai), d)| (zi - ai) * d).sum::<f64>() / len2).clamp(0.0, 1.0)
                };
                let proj: Vec<f64> = a.iter().zip(&ab).map(|(ai, d)| ai + t * d).collect();
                -dist(z, &proj)
            }
            ClosedSet::HalfSpace { normal, offset } => {
                z.iter().zip(normal).map(|(a, b)| a * b).sum::<f64>() - offset
            }
            ClosedSet::Ball { center, radius } => radius - dist(z, center),
            ClosedSet::ComplementOf(spec) => -spec.signed_distance(z),
        }
    }

    pub fn has_interior(&self) -> bool {
        !matches!(self, ClosedSet::Point(_) | ClosedSet::Segment(..))
            && !matches!(self, ClosedSet::ComplementOf(s) if matches!(s.shapes(), [Shape::Punctured { .. }]))
    }

    pub fn diameter(&self) -> f64 {
        match self {
            ClosedSet::Point(_) => 0.0,
            ClosedSet::Segment(a, b) => dist(a, b),
            ClosedSet::HalfSpace { .. } => f64::INFINITY,
            ClosedSet::Ball { radius, .. } => 2.0 * radius,
            ClosedSet::ComplementOf(spec) => match spec.shapes() {
                [Shape::Exterior { radius, .. }] => 2.0 * radius,
                [Shape::Punctured { .. }] => 0.0,
                _ => f64::INFINITY,
            },
        }
    }

    /// Length scale of the sampling window for unbounded sets.
    fn window(&self) -> f64 {
        match self {
            ClosedSet::ComplementOf(spec) => spec.bbox().diameter(),
            _ if self.diameter().is_finite() => self.diameter().max(1.0),
            _ => 10.0,
        }
    }

    fn sample_point(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let d = self.dim();
        match self {
            ClosedSet::Point(p) => p.clone(),
            ClosedSet::Segment(a, b) => {
                let t: f64 = rng.gen();
                a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
            }
            ClosedSet::HalfSpace { normal, offset } => {
                let w = self.window();
                let mut y: Vec<f64> = (0..d).map(|_| rng.gen_range(-w..w)).collect();
                let s: f64 = y.iter().zip(normal).map(|(a, b)| a * b).sum::<f64>() - offset;
                if s < 0.0 {
                    y.iter_mut().zip(normal).for_each(|(v, n)| *v -= s * n);
                }
                y
            }
            ClosedSet::Ball { center, radius } => {
                let u = random_direction(rng, d);
                let rho = if rng.gen::<f64>() < 0.3 { *radius } else { radius * rng.gen::<f64>().powf(1.0 / d as f64) };
                center.iter().zip(u).map(|(c, v)| c + rho * v).collect()
            }
            ClosedSet::ComplementOf(spec) => {
                let b = spec.bbox();
                let pad = b.diameter();
                for _ in 0..10_000 {
                    let y: Vec<f64> = (0..d).map(|i| rng.gen_range(b.lo[i] - pad..b.hi[i] + pad)).collect();
                    if !spec.contains(&y) {
                        return y;
                    }
                }
                b.lo.clone()
            }
        }
    }

    fn inward(&self, x: &[f64], scale: f64) -> Option<Vec<f64>> {
        let d = self.dim();
        let h = 1e-6 * scale;
        let mut g = vec![0.0; d];
        let mut xp = x.to_vec();
        for i in 0..d {
            xp[i] = x[i] + h;
            let fp = self.signed_depth(&xp);
            xp[i] = x[i] - h;
            let fm = self.signed_depth(&xp);
            xp[i] = x[i];
            g[i] = (fp - fm) / (2.0 * h);
        }
        let n = norm(&g);
        (n > 1e-12).then(|| g.iter().map(|v| v / n).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlumpVerdict {
    pub plump: bool,
    /// `(x, r)` for which no admissible centre was found.
    pub witness: Option<(Vec<f64>, f64)>,
    pub pairs_checked: usize,
}

/// Monte-Carlo check of κ-plumpness: for sampled `x ∈ Ā` and `0 < r < diam A`,
/// searches `z ∈ B̄(x, r)` with `B(z, κr) ⊂ A`. Unbounded sets draw `r`
/// log-uniformly over the sampling window.
pub fn is_plump(set: &ClosedSet, kappa: f64, r_samples: usize, x_samples: usize, seed: u64) -> PlumpVerdict {
    assert!(kappa > 0.0 && kappa < 1.0, "kappa must lie in (0, 1)");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = set.dim();
    if !set.has_interior() {
        let x = set.sample_point(&mut rng);
        let r = if set.diameter() > 0.0 { 0.5 * set.diameter() } else { 1.0 };
        return PlumpVerdict { plump: false, witness: Some((x, r)), pairs_checked: 1 };
    }
    let diam = set.diameter();
    let window = set.window();
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[i] = s;
            dirs.push(e);
        }
    }
    for _ in 0..4 {
        dirs.push(random_direction(&mut rng, d)[..d].to_vec());
    }
    let steps: Vec<f64> = (0..=32).map(|k| k as f64 / 32.0).collect();
    let mut checked = 0;
    for _ in 0..x_samples {
        let x = set.sample_point(&mut rng);
        let inward = set.inward(&x, window);
        for _ in 0..r_samples {
            let r = if diam.is_finite() {
                diam * rng.gen_range(1e-9..1.0)
            } else {
                window * 10f64.powf(rng.gen_range(-3.0..1.0))
            };
            checked += 1;
            let target = kappa * r;
            let found = inward.iter().chain(dirs.iter()).any(|u| {
                steps.iter().any(|&t| {
                    let z: Vec<f64> = x.iter().zip(u).map(|(a, b)| a + t * r * b).collect();
                    set.signed_depth(&z) >= target
                })
            });
            if !found {
                return PlumpVerdict { plump: false, witness: Some((x, r)), pairs_checked: checked };
            }
        }
    }
    PlumpVerdict { plump: true, witness: None, pairs_checked: checked }
}
