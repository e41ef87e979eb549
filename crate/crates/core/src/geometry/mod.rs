//! Open sets with exact distance-to-complement, Whitney decompositions and
//! the plumpness check for complements.

mod plump;
mod whitney;

pub use plump::{is_plump, ClosedSet, PlumpVerdict};
pub use whitney::{enlarge, WhitneyCube, WhitneyDecomposition, DEFAULT_EPSILON};
pub(crate) use whitney::subdivide_with_collar;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

/// Axis-aligned box `[lo, hi]` in any dimension (support boxes may live in `R^{2d}`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Aabb {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        debug_assert_eq!(lo.len(), hi.len());
        Self { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(&v, (&a, &b))| v >= a && v <= b)
    }

    pub fn contains_open(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(&v, (&a, &b))| v > a && v < b)
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn diameter(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
    }

    pub fn max_edge(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).fold(0.0, f64::max)
    }

    pub fn intersects(&self, other: &Aabb) -> bool {
        (0..self.dim()).all(|i| self.lo[i] < other.hi[i] && other.lo[i] < self.hi[i])
    }

    pub fn intersection(&self, other: &Aabb) -> Option<Aabb> {
        let lo: Vec<f64> = (0..self.dim()).map(|i| self.lo[i].max(other.lo[i])).collect();
        let hi: Vec<f64> = (0..self.dim()).map(|i| self.hi[i].min(other.hi[i])).collect();
        lo.iter().zip(&hi).all(|(a, b)| a < b).then(|| Aabb::new(lo, hi))
    }

    pub fn hull(&self, other: &Aabb) -> Aabb {
        Aabb::new(
            (0..self.dim()).map(|i| self.lo[i].min(other.lo[i])).collect(),
            (0..self.dim()).map(|i| self.hi[i].max(other.hi[i])).collect(),
        )
    }

    pub fn translated(&self, t: &[f64]) -> Aabb {
        Aabb::new(
            self.lo.iter().zip(t).map(|(a, s)| a + s).collect(),
            self.hi.iter().zip(t).map(|(b, s)| b + s).collect(),
        )
    }

    /// Euclidean distance from `x` to the closed box (0 inside).
    pub fn distance(&self, x: &[f64]) -> f64 {
        point_box_distance(x, &self.lo, &self.hi)
    }

    /// Parameter interval `[t0, t1]` (t ≥ 0) on which `x + t u` is inside the closed box.
    pub fn ray_clip(&self, x: &[f64], u: &[f64]) -> Option<(f64, f64)> {
        let mut t0 = 0.0f64;
        let mut t1 = f64::INFINITY;
        for i in 0..self.dim() {
            if u[i].abs() < 1e-300 {
                if x[i] < self.lo[i] || x[i] > self.hi[i] {
                    return None;
                }
                continue;
            }
            let a = (self.lo[i] - x[i]) / u[i];
            let b = (self.hi[i] - x[i]) / u[i];
            t0 = t0.max(a.min(b));
            t1 = t1.min(a.max(b));
        }
        (t0 < t1).then_some((t0, t1))
    }
}

pub(crate) fn point_box_distance(x: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    x.iter()
        .zip(lo.iter().zip(hi))
        .map(|(&v, (&a, &b))| {
            let e = (a - v).max(0.0).max(v - b);
            e * e
        })
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Open primitive making up an [`OpenSetSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    /// Open axis-aligned box.
    Box { min: Vec<f64>, max: Vec<f64> },
    /// Open ball.
    Ball { center: Vec<f64>, radius: f64 },
    /// `{x : normal·x < offset}`.
    Halfspace { normal: Vec<f64>, offset: f64 },
    /// `R^d` minus one point.
    Punctured { point: Vec<f64> },
    /// `R^d` minus a closed ball.
    Exterior { center: Vec<f64>, radius: f64 },
    /// All of `R^d`; accepted so that the complement-empty case can be reported.
    Whole,
}

impl Shape {
    /// Signed distance: `dist(x, complement)` inside, `-dist(x, closure)` outside.
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        match self {
            Shape::Box { min, max } => {
                let outside = point_box_distance(x, min, max);
                if outside > 0.0 {
                    -outside
                } else {
                    x.iter()
                        .zip(min.iter().zip(max))
                        .map(|(&v, (&a, &b))| (v - a).min(b - v))
                        .fold(f64::INFINITY, f64::min)
                }
            }
            Shape::Ball { center, radius } => radius - dist(x, center),
            Shape::Halfspace { normal, offset } => {
                offset - x.iter().zip(normal).map(|(a, b)| a * b).sum::<f64>()
            }
            Shape::Punctured { point } => dist(x, point),
            Shape::Exterior { center, radius } => dist(x, center) - radius,
            Shape::Whole => f64::INFINITY,
        }
    }

    /// `dist(Q, complement)` for the closed cube `Q = [lo, hi]`; zero when `Q`
    /// meets the complement. Exact for every primitive.
    pub fn cube_distance(&self, lo: &[f64], hi: &[f64]) -> f64 {
        match self {
            Shape::Box { .. } | Shape::Ball { .. } | Shape::Halfspace { .. } => {
                // distance to the complement is concave on a convex set
                let d = lo.len();
                let mut corner = [0.0; MAX_DIM];
                let mut best = f64::INFINITY;
                for mask in 0..(1usize << d) {
                    for i in 0..d {
                        corner[i] = if mask >> i & 1 == 1 { hi[i] } else { lo[i] };
                    }
                    best = best.min(self.signed_distance(&corner[..d]));
                }
                best.max(0.0)
            }
            Shape::Punctured { point } => point_box_distance(point, lo, hi),
            Shape::Exterior { center, radius } => {
                (point_box_distance(center, lo, hi) - radius).max(0.0)
            }
            Shape::Whole => f64::INFINITY,
        }
    }

    /// Open parameter intervals `r ≥ 0` with `x + r u` inside the primitive.
    fn ray_intervals(&self, x: &[f64], u: &[f64], out: &mut Vec<(f64, f64)>) {
        match self {
            Shape::Box { min, max } => {
                if let Some(iv) = Aabb::new(min.clone(), max.clone()).ray_clip(x, u) {
                    out.push(iv);
                }
            }
            Shape::Ball { center, radius } => {
                if let Some((r1, r2)) = sphere_roots(x, u, center, *radius) {
                    if r2 > 0.0 {
                        out.push((r1.max(0.0), r2));
                    }
                }
            }
            Shape::Halfspace { normal, offset } => {
                let nx: f64 = x.iter().zip(normal).map(|(a, b)| a * b).sum();
                let nu: f64 = u.iter().zip(normal).map(|(a, b)| a * b).sum();
                let slack = offset - nx;
                if nu.abs() < 1e-300 {
                    if slack > 0.0 {
                        out.push((0.0, f64::INFINITY));
                    }
                } else if nu > 0.0 {
                    let r = slack / nu;
                    if r > 0.0 {
                        out.push((0.0, r));
                    }
                } else {
                    out.push(((slack / nu).max(0.0), f64::INFINITY));
                }
            }
            Shape::Punctured { .. } | Shape::Whole => out.push((0.0, f64::INFINITY)),
            Shape::Exterior { center, radius } => match sphere_roots(x, u, center, *radius) {
                Some((r1, r2)) if r2 > 0.0 => {
                    if r1 > 0.0 {
                        out.push((0.0, r1));
                    }
                    out.push((r2, f64::INFINITY));
                }
                _ => out.push((0.0, f64::INFINITY)),
            },
        }
    }

    fn bounded_aabb(&self) -> Option<Aabb> {
        match self {
            Shape::Box { min, max } => Some(Aabb::new(min.clone(), max.clone())),
            Shape::Ball { center, radius } => Some(Aabb::new(
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            )),
            _ => None,
        }
    }

    /// Points where the primitive's own boundary is crossed without leaving
    /// the set (the puncture).
    fn ray_crossings(&self, x: &[f64], u: &[f64], out: &mut Vec<f64>) {
        if let Shape::Punctured { point } = self {
            point_crossing(x, u, point, out);
        }
    }
}

fn sphere_roots(x: &[f64], u: &[f64], c: &[f64], r: f64) -> Option<(f64, f64)> {
    let mut b = 0.0;
    let mut cc = -r * r;
    for i in 0..x.len() {
        let dx = x[i] - c[i];
        b += u[i] * dx;
        cc += dx * dx;
    }
    let disc = b * b - cc;
    if disc <= 0.0 {
        return None;
    }
    let s = disc.sqrt();
    Some((-b - s, -b + s))
}

fn point_crossing(x: &[f64], u: &[f64], p: &[f64], out: &mut Vec<f64>) {
    let r: f64 = (0..x.len()).map(|i| (p[i] - x[i]) * u[i]).sum();
    if r > 0.0 {
        let miss: f64 = (0..x.len())
            .map(|i| {
                let e = x[i] + r * u[i] - p[i];
                e * e
            })
            .sum::<f64>()
            .sqrt();
        if miss <= 1e-12 * (1.0 + r) {
            out.push(r);
        }
    }
}

/// Closed set removed from the union of primitives (zero set of a weight).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RemovedSet {
    Point { point: Vec<f64> },
    Hyperplane { axis: usize, value: f64 },
}

impl RemovedSet {
    fn distance(&self, x: &[f64]) -> f64 {
        match self {
            RemovedSet::Point { point } => dist(x, point),
            RemovedSet::Hyperplane { axis, value } => (x[*axis] - value).abs(),
        }
    }

    fn cube_distance(&self, lo: &[f64], hi: &[f64]) -> f64 {
        match self {
            RemovedSet::Point { point } => point_box_distance(point, lo, hi),
            RemovedSet::Hyperplane { axis, value } => {
                (lo[*axis] - value).max(value - hi[*axis]).max(0.0)
            }
        }
    }

    fn ray_crossings(&self, x: &[f64], u: &[f64], out: &mut Vec<f64>) {
        match self {
            RemovedSet::Point { point } => point_crossing(x, u, point, out),
            RemovedSet::Hyperplane { axis, value } => {
                if u[*axis].abs() > 1e-300 {
                    let r = (value - x[*axis]) / u[*axis];
                    if r > 0.0 {
                        out.push(r);
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawSpec {
    dim: usize,
    shapes: Vec<Shape>,
    bbox: [Vec<f64>; 2],
    #[serde(default)]
    removed: Vec<RemovedSet>,
}

/// Constructive open set `Ω`: a union of primitives with pairwise disjoint
/// closures, optionally minus closed zero sets, analysed inside a finite
/// bounding box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct OpenSetSpec {
    dim: usize,
    shapes: Vec<Shape>,
    bbox: Aabb,
    removed: Vec<RemovedSet>,
}

impl TryFrom<RawSpec> for OpenSetSpec {
    type Error = Error;
    fn try_from(raw: RawSpec) -> Result<Self> {
        let [lo, hi] = raw.bbox;
        OpenSetSpec::with_removed(raw.dim, raw.shapes, Aabb::new(lo, hi), raw.removed)
    }
}

impl From<OpenSetSpec> for RawSpec {
    fn from(s: OpenSetSpec) -> Self {
        RawSpec { dim: s.dim, shapes: s.shapes, bbox: [s.bbox.lo, s.bbox.hi], removed: s.removed }
    }
}

impl OpenSetSpec {
    pub fn new(dim: usize, shapes: Vec<Shape>, bbox: Aabb) -> Result<Self> {
        Self::with_removed(dim, shapes, bbox, Vec::new())
    }

    pub fn with_removed(
        dim: usize,
        shapes: Vec<Shape>,
        bbox: Aabb,
        removed: Vec<RemovedSet>,
    ) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidSet(m));
        if !(1..=MAX_DIM).contains(&dim) {
            return bad(format!("dimension {dim} not in 1..=3"));
        }
        if shapes.is_empty() {
            return bad("at least one shape is required (Ω must be nonempty)".into());
        }
        if bbox.dim() != dim || bbox.hi.len() != dim {
            return bad("bbox dimension mismatch".into());
        }
        if bbox.lo.iter().zip(&bbox.hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return bad("bbox must be finite with min < max".into());
        }
        let mut shapes = shapes;
        for s in shapes.iter_mut() {
            let ok = match s {
                Shape::Box { min, max } => {
                    min.len() == dim && max.len() == dim && min.iter().zip(max.iter()).all(|(a, b)| a < b)
                }
                Shape::Ball { center, radius } | Shape::Exterior { center, radius } => {
                    center.len() == dim && *radius > 0.0
                }
                Shape::Halfspace { normal, offset } => {
                    let n = norm(normal);
                    if normal.len() != dim || n == 0.0 {
                        false
                    } else {
                        normal.iter_mut().for_each(|v| *v /= n);
                        *offset /= n;
                        true
                    }
                }
                Shape::Punctured { point } => point.len() == dim,
                Shape::Whole => true,
            };
            if !ok {
                return bad(format!("malformed shape {s:?}"));
            }
        }
        if shapes.len() > 1 {
            for i in 0..shapes.len() {
                for j in i + 1..shapes.len() {
                    let disjoint = match (shapes[i].bounded_aabb(), shapes[j].bounded_aabb()) {
                        (Some(a), Some(b)) => {
                            (0..dim).any(|k| a.hi[k] < b.lo[k] || b.hi[k] < a.lo[k])
                        }
                        _ => false,
                    };
                    if !disjoint {
                        return bad(format!(
                            "shapes {i} and {j} may overlap; unions require pairwise disjoint closures"
                        ));
                    }
                }
            }
        }
        for r in &removed {
            let ok = match r {
                RemovedSet::Point { point } => point.len() == dim,
                RemovedSet::Hyperplane { axis, .. } => *axis < dim,
            };
            if !ok {
                return bad(format!("malformed removed set {r:?}"));
            }
        }
        let spec = Self { dim, shapes, bbox, removed };
        if !spec.meets_bbox() {
            return bad("Ω does not meet the bounding box".into());
        }
        Ok(spec)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Open axis-aligned box, with the box itself as bounding box.
    pub fn open_box(min: Vec<f64>, max: Vec<f64>) -> Result<Self> {
        let dim = min.len();
        Self::new(dim, vec![Shape::Box { min: min.clone(), max: max.clone() }], Aabb::new(min, max))
    }

    /// The unit interval `(0, 1)`.
    pub fn unit_interval() -> Self {
        Self::open_box(vec![0.0], vec![1.0]).expect("valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shapes(&self) -> &[Shape] {
        &self.shapes
    }

    pub fn bbox(&self) -> &Aabb {
        &self.bbox
    }

    pub fn removed(&self) -> &[RemovedSet] {
        &self.removed
    }

    /// The same set minus additional closed pieces.
    pub fn without(&self, extra: &[RemovedSet]) -> Result<Self> {
        let mut removed = self.removed.clone();
        removed.extend_from_slice(extra);
        Self::with_removed(self.dim, self.shapes.clone(), self.bbox.clone(), removed)
    }

    /// Hull of the primitives when all of them are bounded.
    pub fn bounded_hull(&self) -> Option<Aabb> {
        let mut it = self.shapes.iter().map(Shape::bounded_aabb);
        let first = it.next()??;
        it.try_fold(first, |acc, b| Some(acc.hull(&b?)))
    }

    pub fn complement_empty(&self) -> bool {
        self.removed.is_empty() && self.shapes.iter().any(|s| matches!(s, Shape::Whole))
    }

    fn meets_bbox(&self) -> bool {
        let n = 17usize;
        let d = self.dim;
        let mut x = [0.0; MAX_DIM];
        for idx in 0..n.pow(d as u32) {
            let mut rem = idx;
            for i in 0..d {
                let k = rem % n;
                rem /= n;
                let t = (k as f64 + 0.5) / n as f64;
                x[i] = self.bbox.lo[i] + t * (self.bbox.hi[i] - self.bbox.lo[i]);
            }
            if self.gamma(&x[..d]) > 0.0 {
                return true;
            }
        }
        false
    }

    /// Signed distance to `∂Ω`: positive inside, negative outside.
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        let sd = self
            .shapes
            .iter()
            .map(|s| s.signed_distance(x))
            .fold(f64::NEG_INFINITY, f64::max);
        if sd > 0.0 {
            self.removed.iter().map(|r| r.distance(x)).fold(sd, f64::min)
        } else {
            sd
        }
    }

    /// `γ(x) = dist(x, Ω^c)`; zero iff `x ∉ Ω`.
    pub fn gamma(&self, x: &[f64]) -> f64 {
        self.signed_distance(x).max(0.0)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.signed_distance(x) > 0.0
    }

    /// Inside `Ω` and inside the analysed bounding box.
    pub fn contains_in_region(&self, x: &[f64]) -> bool {
        self.bbox.contains(x) && self.contains(x)
    }

    /// `dist(Q, Ω^c)` for a closed cube.
    pub fn cube_distance(&self, lo: &[f64], hi: &[f64]) -> f64 {
        let d = self
            .shapes
            .iter()
            .map(|s| s.cube_distance(lo, hi))
            .fold(0.0, f64::max);
        self.removed.iter().map(|r| r.cube_distance(lo, hi)).fold(d, f64::min)
    }

    /// Sorted disjoint parameter intervals `r ≥ 0` on which `x + r u ∈ Ω`,
    /// clipped to the bounding box when `clip` is set. Intervals are split at
    /// removed points and hyperplanes so that each one is a smooth piece.
    pub fn ray_intervals(&self, x: &[f64], u: &[f64], clip: bool) -> Vec<(f64, f64)> {
        let mut iv = Vec::with_capacity(4);
        for s in &self.shapes {
            s.ray_intervals(x, u, &mut iv);
        }
        iv.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(iv.len());
        for (a, b) in iv {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        if clip {
            let Some((c0, c1)) = self.bbox.ray_clip(x, u) else {
                return Vec::new();
            };
            merged = merged
                .into_iter()
                .filter_map(|(a, b)| {
                    let (a, b) = (a.max(c0), b.min(c1));
                    (a < b).then_some((a, b))
                })
                .collect();
        }
        let mut cuts = Vec::new();
        for s in &self.shapes {
            s.ray_crossings(x, u, &mut cuts);
        }
        for r in &self.removed {
            r.ray_crossings(x, u, &mut cuts);
        }
        if cuts.is_empty() {
            return merged;
        }
        cuts.sort_by(f64::total_cmp);
        let mut out = Vec::with_capacity(merged.len() + cuts.len());
        for (a, b) in merged {
            let mut start = a;
            for &c in cuts.iter().filter(|&&c| c > a && c < b) {
                out.push((start, c));
                start = c;
            }
            out.push((start, b));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_intervals() -> OpenSetSpec {
        OpenSetSpec::new(
            1,
            vec![
                Shape::Box { min: vec![0.0], max: vec![1.0] },
                Shape::Box { min: vec![2.0], max: vec![4.0] },
            ],
            Aabb::new(vec![0.0], vec![4.0]),
        )
        .unwrap()
    }

    fn unit_disk() -> OpenSetSpec {
        OpenSetSpec::new(
            2,
            vec![Shape::Ball { center: vec![0.0, 0.0], radius: 1.0 }],
            Aabb::new(vec![-1.0, -1.0], vec![1.0, 1.0]),
        )
        .unwrap()
    }

    #[test]
    fn gamma_examples() {
        assert_relative_eq!(OpenSetSpec::unit_interval().gamma(&[0.3]), 0.3, epsilon = 1e-15);
        assert_relative_eq!(unit_disk().gamma(&[0.0, 0.0]), 1.0);
        assert_relative_eq!(two_intervals().gamma(&[3.5]), 0.5);
        assert_eq!(two_intervals().gamma(&[1.5]), 0.0);
        assert_eq!(OpenSetSpec::unit_interval().gamma(&[1.0]), 0.0);
    }

    #[test]
    fn removed_sets_reduce_gamma() {
        let s = OpenSetSpec::unit_interval()
            .without(&[RemovedSet::Point { point: vec![0.5] }])
            .unwrap();
        assert_relative_eq!(s.gamma(&[0.4]), 0.1, epsilon = 1e-15);
        assert_eq!(s.gamma(&[0.5]), 0.0);
        assert_eq!(s.ray_intervals(&[0.1], &[1.0], true), vec![(0.0, 0.4), (0.4, 0.9)]);
    }

    #[test]
    fn overlapping_shapes_are_rejected() {
        let r = OpenSetSpec::new(
            1,
            vec![
                Shape::Box { min: vec![0.0], max: vec![1.0] },
                Shape::Box { min: vec![0.5], max: vec![2.0] },
            ],
            Aabb::new(vec![0.0], vec![2.0]),
        );
        assert!(matches!(r, Err(Error::InvalidSet(_))));
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"dim":1,"shapes":[{"type":"punctured","point":[0.0]}],"bbox":[[-4.0],[4.0]]}"#;
        let s = OpenSetSpec::from_json(text).unwrap();
        assert_relative_eq!(s.gamma(&[-1.5]), 1.5);
        let back = OpenSetSpec::from_json(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn halfspace_normal_is_normalized() {
        let s = OpenSetSpec::new(
            2,
            vec![Shape::Halfspace { normal: vec![0.0, 2.0], offset: 2.0 }],
            Aabb::new(vec![-1.0, -1.0], vec![1.0, 1.0]),
        )
        .unwrap();
        assert_relative_eq!(s.gamma(&[0.3, 0.25]), 0.75);
    }

    #[test]
    fn cube_distance_matches_dense_sampling() {
        let specs = [unit_disk(), two_intervals()];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for spec in &specs {
            let d = spec.dim();
            for _ in 0..200 {
                let edge = rng.gen_range(0.01..0.3);
                let lo: Vec<f64> = (0..d).map(|i| rng.gen_range(spec.bbox().lo[i]..spec.bbox().hi[i] - edge)).collect();
                let hi: Vec<f64> = lo.iter().map(|v| v + edge).collect();
                let exact = spec.cube_distance(&lo, &hi);
                let n = 40;
                let mut best = f64::INFINITY;
                for idx in 0..(n + 1usize).pow(d as u32) {
                    let mut rem = idx;
                    let x: Vec<f64> = (0..d)
                        .map(|i| {
                            let k = rem % (n + 1);
                            rem /= n + 1;
                            lo[i] + edge * k as f64 / n as f64
                        })
                        .collect();
                    best = best.min(spec.gamma(&x));
                }
                assert!(exact <= best + 1e-12, "{exact} > {best}");
                assert!(best - exact <= edge / n as f64 * (d as f64).sqrt() + 1e-12);
            }
        }
    }

    #[test]
    fn ray_intervals_on_exterior() {
        let s = OpenSetSpec::new(
            2,
            vec![Shape::Exterior { center: vec![0.0, 0.0], radius: 1.0 }],
            Aabb::new(vec![-2.0, -2.0], vec![2.0, 2.0]),
        )
        .unwrap();
        let iv = s.ray_intervals(&[-1.5, 0.0], &[1.0, 0.0], true);
        assert_eq!(iv.len(), 2);
        assert_relative_eq!(iv[0].1, 0.5, epsilon = 1e-12);
        assert_relative_eq!(iv[1].0, 2.5, epsilon = 1e-12);
        assert_relative_eq!(iv[1].1, 3.5, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn gamma_is_one_lipschitz(x in -0.5f64..1.5, y in -0.5f64..1.5, a in -1.5f64..1.5, b in -1.5f64..1.5) {
            let spec = unit_disk();
            let g1 = spec.gamma(&[x, a]);
            let g2 = spec.gamma(&[y, b]);
            prop_assert!((g1 - g2).abs() <= dist(&[x, a], &[y, b]) + 1e-12);
            let s = two_intervals();
            prop_assert!((s.gamma(&[x * 3.0]) - s.gamma(&[y * 3.0])).abs() <= 3.0 * (x - y).abs() + 1e-12);
        }

        #[test]
        fn ray_membership_agrees_with_gamma(x in 0.0f64..4.0, r in 0.0f64..4.0, sign in proptest::bool::ANY) {
            let s = two_intervals();
            let u = if sign { 1.0 } else { -1.0 };
            let iv = s.ray_intervals(&[x], &[u], true);
            let y = x + u * r;
            let inside = iv.iter().any(|&(a, b)| r > a && r < b);
            if s.gamma(&[y]) > 1e-9 && s.bbox().contains(&[y]) {
                prop_assert!(inside);
            } else if s.gamma(&[y]) == 0.0 {
                prop_assert!(!inside || (y - y.round()).abs() < 1e-9);
            }
        }
    }
}
