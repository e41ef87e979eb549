//! Boundary-graded integration cells over `Ω ∩ bbox` and graded radial panels.

use crate::geometry::{subdivide_with_collar, OpenSetSpec, MAX_DIM};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub lo: [f64; MAX_DIM],
    pub hi: [f64; MAX_DIM],
    pub generation: u32,
    /// Generation-`depth` cell that was not accepted by the Whitney rule.
    pub collar: bool,
}

impl Cell {
    pub fn volume(&self, d: usize) -> f64 {
        (0..d).map(|i| self.hi[i] - self.lo[i]).product()
    }
}

/// Whitney-style cells down to `depth` (plus the leftover collar cubes),
/// clipped to the bounding box and split until no edge exceeds `hmax`.
pub fn integration_cells(spec: &OpenSetSpec, depth: u32, hmax: f64) -> Vec<Cell> {
    let d = spec.dim();
    let (_, _, accepted, collar) = subdivide_with_collar(spec, depth);
    let b = spec.bbox();
    let mut out = Vec::new();
    for (cube, is_collar) in accepted.iter().map(|c| (c, false)).chain(collar.iter().map(|c| (c, true))) {
        let mut lo = [0.0; MAX_DIM];
        let mut hi = [0.0; MAX_DIM];
        let mut empty = false;
        for i in 0..d {
            lo[i] = (cube.center[i] - 0.5 * cube.edge).max(b.lo[i]);
            hi[i] = (cube.center[i] + 0.5 * cube.edge).min(b.hi[i]);
            empty |= hi[i] <= lo[i];
        }
        if empty {
            continue;
        }
        let mut parts = [1usize; MAX_DIM];
        for i in 0..d {
            parts[i] = ((hi[i] - lo[i]) / hmax).ceil().max(1.0) as usize;
        }
        let total: usize = parts[..d].iter().product();
        for mut idx in 0..total {
            let mut c = Cell { lo, hi, generation: cube.generation, collar: is_collar };
            for i in 0..d {
                let k = idx % parts[i];
                idx /= parts[i];
                let w = (hi[i] - lo[i]) / parts[i] as f64;
                c.lo[i] = lo[i] + k as f64 * w;
                c.hi[i] = if k + 1 == parts[i] { hi[i] } else { lo[i] + (k + 1) as f64 * w };
            }
            out.push(c);
        }
    }
    out
}

/// Panels covering `(a, b)`: geometric (ratio 2) toward `a` starting at
/// `a + first` and toward `b` down to `(b − a)·2^{−levels}`, no wider than `hmax`.
/// When `skip_first` is set the piece `(a, a + first)` is left out.
pub fn radial_panels(a: f64, b: f64, first: f64, skip_first: bool, levels: u32, hmax: f64, out: &mut Vec<(f64, f64)>) {
    let len = b - a;
    if !(len > 0.0) {
        return;
    }
    let mid = a + 0.5 * len;
    let mut pts = Vec::with_capacity(2 * levels as usize + 8);
    if !skip_first {
        pts.push(a);
    }
    let mut s = first.min(0.5 * len);
    pts.push(a + s);
    while a + 2.0 * s < mid {
        s *= 2.0;
        pts.push(a + s);
    }
    pts.push(mid);
    let tiny = len * 0.5f64.powi(levels as i32);
    let mut right = Vec::new();
    let mut t = 0.25 * len;
    while t > tiny {
        right.push(b - t);
        t *= 0.5;
    }
    right.push(b - tiny);
    pts.extend(right);
    pts.push(b);
    pts.dedup_by(|x, y| (*x - *y).abs() <= f64::EPSILON * b.abs().max(1.0));
    for w in pts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let n = ((hi - lo) / hmax).ceil().max(1.0) as usize;
        let step = (hi - lo) / n as f64;
        for k in 0..n {
            let l = lo + k as f64 * step;
            let r = if k + 1 == n { hi } else { lo + (k + 1) as f64 * step };
            out.push((l, r));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Aabb, Shape};

    #[test]
    fn cells_tile_the_unit_interval() {
        let cells = integration_cells(&OpenSetSpec::unit_interval(), 12, 1.0 / 16.0);
        let total: f64 = cells.iter().map(|c| c.volume(1)).sum();
        assert!((total - 1.0).abs() < 1e-14);
        assert!(cells.iter().all(|c| c.hi[0] - c.lo[0] <= 1.0 / 16.0 + 1e-15));
        assert!(cells.iter().any(|c| c.collar));
        // pairwise disjoint interiors
        let mut iv: Vec<(f64, f64)> = cells.iter().map(|c| (c.lo[0], c.hi[0])).collect();
        iv.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(iv.windows(2).all(|w| w[0].1 <= w[1].0 + 1e-15));
    }

    #[test]
    fn cells_are_clipped_to_the_box() {
        let s = OpenSetSpec::new(
            2,
            vec![Shape::Ball { center: vec![0.0, 0.0], radius: 1.0 }],
            Aabb::new(vec![-1.0, -1.0], vec![1.0, 0.5]),
        )
        .unwrap();
        let cells = integration_cells(&s, 6, 0.25);
        assert!(cells.iter().all(|c| c.hi[1] <= 0.5 && c.lo[0] >= -1.0));
        let area: f64 = cells.iter().filter(|c| !c.collar).map(|c| c.volume(2)).sum();
        assert!(area < std::f64::consts::PI && area > 2.0);
    }

    #[test]
    fn panels_cover_interval() {
        let mut p = Vec::new();
        radial_panels(0.0, 1.0, 1e-6, true, 20, 0.1, &mut p);
        assert_eq!(p[0].0, 1e-6);
        assert_eq!(p.last().unwrap().1, 1.0);
        assert!(p.windows(2).all(|w| w[0].1 == w[1].0));
        assert!(p.iter().all(|q| q.1 - q.0 <= 0.1 + 1e-15));
        let mut q = Vec::new();
        radial_panels(2.0, 3.0, 1e-3, false, 10, 1.0, &mut q);
        assert_eq!(q[0].0, 2.0);
    }
}
