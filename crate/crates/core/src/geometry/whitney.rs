use rustc_hash::FxHashMap;
use std::fmt::Write as _;

use super::{Aabb, OpenSetSpec, MAX_DIM};
use crate::error::{Error, Result};

/// Default enlargement parameter; `(1.1)^2 = 1.21 < 5/4`.
pub const DEFAULT_EPSILON: f64 = 0.1;

const MAX_GENERATION: u32 = 40;

/// Neighbouring Whitney cubes differ by at most this many generations.
const NEIGHBOR_WINDOW: u32 = 5;

/// A dyadic cube of the decomposition. Coordinates are integer offsets, in
/// units of the cube's own edge, from the root origin.
#[derive(Debug, Clone, PartialEq)]
pub struct WhitneyCube {
    pub generation: u32,
    pub coords: [i64; MAX_DIM],
    pub center: [f64; MAX_DIM],
    pub edge: f64,
    /// `dist(Q, Ω^c)`.
    pub dist: f64,
}

impl WhitneyCube {
    /// Box with the same centre and edge multiplied by `factor`.
    pub fn scaled_box(&self, dim: usize, factor: f64) -> Aabb {
        let h = 0.5 * factor * self.edge;
        Aabb::new(
            self.center[..dim].iter().map(|c| c - h).collect(),
            self.center[..dim].iter().map(|c| c + h).collect(),
        )
    }

    /// Closed membership in the cube scaled by `factor`.
    #[inline]
    pub fn in_scaled(&self, x: &[f64], factor: f64) -> bool {
        let h = 0.5 * factor * self.edge;
        x.iter().zip(&self.center).all(|(v, c)| (v - c).abs() <= h)
    }

    #[inline]
    pub fn in_interior(&self, x: &[f64]) -> bool {
        let h = 0.5 * self.edge;
        x.iter().zip(&self.center).all(|(v, c)| (v - c).abs() < h)
    }
}

/// `enlarge(Q, factor)`: same centre, edge multiplied by `factor ≥ 1`.
pub fn enlarge(cube: &WhitneyCube, dim: usize, factor: f64) -> Result<Aabb> {
    if !(factor >= 1.0) {
        return Err(Error::InvalidParameter(format!("enlargement factor {factor} < 1")));
    }
    Ok(cube.scaled_box(dim, factor))
}

/// Truncated Whitney decomposition with a per-generation hash index.
#[derive(Debug, Clone)]
pub struct WhitneyDecomposition {
    spec: OpenSetSpec,
    eps: f64,
    origin: [f64; MAX_DIM],
    root_scale: f64,
    max_generation: u32,
    cubes: Vec<WhitneyCube>,
    index: Vec<FxHashMap<[i64; MAX_DIM], usize>>,
}

impl WhitneyDecomposition {
    /// Recursive dyadic subdivision of the root cube: a cube is accepted as
    /// soon as `l(Q) ≤ dist(Q, Ω^c)`, discarded when it lies outside `Ω` or the
    /// bounding box, and subdivided otherwise up to generation `max_generation`.
    pub fn new(spec: &OpenSetSpec, eps: f64, max_generation: u32) -> Result<Self> {
        if spec.complement_empty() {
            return Err(Error::ComplementEmpty);
        }
        if !(eps > 0.0 && (1.0 + eps).powi(2) < 1.25) {
            return Err(Error::InadmissibleEpsilon(eps));
        }
        if !(1..=MAX_GENERATION).contains(&max_generation) {
            return Err(Error::InvalidParameter(format!(
                "max generation {max_generation} not in 1..={MAX_GENERATION}"
            )));
        }
        let (origin, root_scale, cubes) = subdivide(spec, max_generation);
        let mut index = vec![FxHashMap::default(); max_generation as usize + 1];
        for (i, c) in cubes.iter().enumerate() {
            index[c.generation as usize].insert(c.coords, i);
        }
        Ok(Self { spec: spec.clone(), eps, origin, root_scale, max_generation, cubes, index })
    }

    pub fn spec(&self) -> &OpenSetSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn epsilon(&self) -> f64 {
        self.eps
    }

    pub fn cubes(&self) -> &[WhitneyCube] {
        &self.cubes
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn root_scale(&self) -> f64 {
        self.root_scale
    }

    pub fn max_generation(&self) -> u32 {
        self.max_generation
    }

    /// `Q*` factor `1 + ε`.
    pub fn star(&self) -> f64 {
        1.0 + self.eps
    }

    /// `Q**` factor `(1 + ε)^2`.
    pub fn star_star(&self) -> f64 {
        (1.0 + self.eps).powi(2)
    }

    /// Edge of a cube at the truncation generation.
    pub fn finest_edge(&self) -> f64 {
        self.root_scale * 0.5f64.powi(self.max_generation as i32)
    }

    /// Coverage threshold `τ_G = 5·√d·L·2^{-G}`: every point of the bounding
    /// box with `γ(x) > τ_G` lies in some accepted cube.
    pub fn coverage_threshold(&self) -> f64 {
        5.0 * (self.dim() as f64).sqrt() * self.finest_edge()
    }

    /// Points with `γ` above this value see every enlarged cube that the
    /// untruncated family would place around them.
    pub fn collar_threshold(&self) -> f64 {
        7.0 * (self.dim() as f64).sqrt() * self.finest_edge()
    }

    pub fn is_covered(&self, x: &[f64]) -> bool {
        self.spec.bbox().contains(x) && self.spec.gamma(x) > self.coverage_threshold()
    }

    /// Calls `f(i)` for every cube whose box scaled by `factor` (≤ 5/4)
    /// contains `x` (closed).
    pub fn for_each_scaled_containing<F: FnMut(usize)>(&self, x: &[f64], factor: f64, mut f: F) {
        debug_assert!(factor <= 1.25 + 1e-12);
        let d = self.dim();
        let n_off = 3usize.pow(d as u32);
        for (g, map) in self.index.iter().enumerate() {
            if map.is_empty() {
                continue;
            }
            let edge = self.root_scale * 0.5f64.powi(g as i32);
            let mut base = [0i64; MAX_DIM];
            for i in 0..d {
                base[i] = ((x[i] - self.origin[i]) / edge).floor() as i64;
            }
            for o in 0..n_off {
                let mut key = [0i64; MAX_DIM];
                let mut rem = o;
                for i in 0..d {
                    key[i] = base[i] + (rem % 3) as i64 - 1;
                    rem /= 3;
                }
                if let Some(&idx) = map.get(&key) {
                    if self.cubes[idx].in_scaled(x, factor) {
                        f(idx);
                    }
                }
            }
        }
    }

    pub fn scaled_containing(&self, x: &[f64], factor: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_scaled_containing(x, factor, |i| out.push(i));
        out.sort_unstable();
        out
    }

    /// Number of cubes with `x ∈ Q**`.
    pub fn overlap_count(&self, x: &[f64]) -> usize {
        let mut n = 0;
        self.for_each_scaled_containing(x, self.star_star(), |_| n += 1);
        n
    }

    /// Cube whose open interior contains `x`.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        let mut found = None;
        self.for_each_scaled_containing(x, 1.0, |i| {
            if found.is_none() && self.cubes[i].in_interior(x) {
                found = Some(i);
            }
        });
        found
    }

    /// For each cube, the other cubes whose open boxes scaled by `factor`
    /// intersect its own.
    pub fn neighbors(&self, factor: f64) -> Vec<Vec<usize>> {
        let d = self.dim();
        self.cubes
            .iter()
            .enumerate()
            .map(|(n, cube)| {
                let bx = cube.scaled_box(d, factor);
                let g0 = cube.generation.saturating_sub(NEIGHBOR_WINDOW);
                let g1 = (cube.generation + NEIGHBOR_WINDOW).min(self.max_generation);
                let mut out = Vec::new();
                for g in g0..=g1 {
                    let map = &self.index[g as usize];
                    if map.is_empty() {
                        continue;
                    }
                    let edge = self.root_scale * 0.5f64.powi(g as i32);
                    let pad = 0.5 * (factor - 1.0) * edge;
                    let mut lo = [0i64; MAX_DIM];
                    let mut hi = [0i64; MAX_DIM];
                    for i in 0..d {
                        lo[i] = ((bx.lo[i] - pad - self.origin[i]) / edge).floor() as i64;
                        hi[i] = ((bx.hi[i] + pad - self.origin[i]) / edge).floor() as i64;
                    }
                    let mut key = lo;
                    'outer: loop {
                        if let Some(&m) = map.get(&key) {
                            if m != n && cube.scaled_box(d, factor).intersects(&self.cubes[m].scaled_box(d, factor)) {
                                out.push(m);
                            }
                        }
                        for i in 0..d {
                            if key[i] < hi[i] {
                                key[i] += 1;
                                continue 'outer;
                            }
                            key[i] = lo[i];
                        }
                        break;
                    }
                }
                out.sort_unstable();
                out
            })
            .collect()
    }

    /// CSV dump: generation, centre coordinates, edge length, distance to complement.
    pub fn to_csv(&self) -> String {
        let d = self.dim();
        let mut s = String::from("generation");
        for i in 0..d {
            let _ = write!(s, ",c{i}");
        }
        s.push_str(",edge,dist\n");
        for c in &self.cubes {
            let _ = write!(s, "{}", c.generation);
            for v in &c.center[..d] {
                let _ = write!(s, ",{v:e}");
            }
            let _ = writeln!(s, ",{:e},{:e}", c.edge, c.dist);
        }
        s
    }
}

/// Root scale: smallest power of two not below the longest bounding-box edge.
pub(crate) fn root_scale(spec: &OpenSetSpec) -> f64 {
    2f64.powi(spec.bbox().max_edge().log2().ceil() as i32)
}

/// The accepted dyadic cubes, coarse generation first and lexicographic in
/// integer coordinates within a generation.
pub(crate) fn subdivide(spec: &OpenSetSpec, max_generation: u32) -> ([f64; MAX_DIM], f64, Vec<WhitneyCube>) {
    let (origin, scale, accepted, _) = subdivide_with_collar(spec, max_generation);
    (origin, scale, accepted)
}

/// As [`subdivide`], also returning the generation-`G` cubes that meet `Ω`
/// but were not accepted (they tile the truncation collar).
pub(crate) fn subdivide_with_collar(
    spec: &OpenSetSpec,
    max_generation: u32,
) -> ([f64; MAX_DIM], f64, Vec<WhitneyCube>, Vec<WhitneyCube>) {
    let d = spec.dim();
    let mut origin = [0.0; MAX_DIM];
    origin[..d].copy_from_slice(&spec.bbox().lo);
    let scale = root_scale(spec);
    let half_diag = 0.5 * (d as f64).sqrt();
    let mut accepted = Vec::new();
    let mut collar = Vec::new();
    let mut stack = vec![(0u32, [0i64; MAX_DIM])];
    let bbox = spec.bbox();
    while let Some((g, coords)) = stack.pop() {
        let edge = scale * 0.5f64.powi(g as i32);
        let mut lo = [0.0; MAX_DIM];
        let mut hi = [0.0; MAX_DIM];
        let mut center = [0.0; MAX_DIM];
        for i in 0..d {
            lo[i] = origin[i] + coords[i] as f64 * edge;
            hi[i] = lo[i] + edge;
            center[i] = lo[i] + 0.5 * edge;
        }
        if (0..d).any(|i| hi[i] <= bbox.lo[i] || lo[i] >= bbox.hi[i]) {
            continue;
        }
        if spec.signed_distance(&center[..d]) + half_diag * edge <= 0.0 {
            continue;
        }
        let dq = spec.cube_distance(&lo[..d], &hi[..d]);
        if dq >= edge {
            accepted.push(WhitneyCube { generation: g, coords, center, edge, dist: dq });
        } else if g < max_generation {
            for child in 0..(1usize << d) {
                let mut c = [0i64; MAX_DIM];
                for i in 0..d {
                    c[i] = 2 * coords[i] + (child >> i & 1) as i64;
                }
                stack.push((g + 1, c));
            }
        } else {
            collar.push(WhitneyCube { generation: g, coords, center, edge, dist: dq });
        }
    }
    accepted.sort_by(|a, b| a.generation.cmp(&b.generation).then(a.coords[..d].cmp(&b.coords[..d])));
    collar.sort_by(|a, b| a.coords[..d].cmp(&b.coords[..d]));
    (origin, scale, accepted, collar)
}
