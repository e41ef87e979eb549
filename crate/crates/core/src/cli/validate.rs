//! Structural validation suite run by `validate`.

use crate::error::Result;
use crate::geometry::{Aabb, OpenSetSpec, WhitneyDecomposition, DEFAULT_EPSILON};
use crate::norms::{QuadratureConfig, SobolevParams};
use crate::oracles::{
    check_brute_agreement, check_compact_support, check_lemma_xy, check_overlap, check_partition_sum,
    check_uniform_collapse, CheckReport,
};
use crate::partition::PartitionOfUnity;
use crate::smoothing::{uniform_eta, FnOracle, FunctionSpec, Smoother};

pub const OVERLAP_POINTS: usize = 10_000;
pub const LEMMA_PAIRS: usize = 100_000;
pub const PARTITION_POINTS: usize = 10_000;
pub const PARTITION_TOL: f64 = 1e-12;
pub const COLLAPSE_TOL: f64 = 1e-6;

fn unit_box(d: usize) -> Result<OpenSetSpec> {
    OpenSetSpec::open_box(vec![0.0; d], vec![1.0; d])
}

/// Generation cap per dimension for the suite decompositions.
fn generation(d: usize) -> u32 {
    if d == 1 {
        10
    } else {
        6
    }
}

/// Cube indices spread over the whole generation range.
fn spread(decomp: &WhitneyDecomposition, count: usize) -> Vec<usize> {
    let n = decomp.len();
    let count = count.min(n);
    (0..count).map(|i| i * (n - 1) / (count - 1).max(1)).collect()
}

pub fn geometry_checks(d: usize, seed: u64) -> Result<Vec<CheckReport>> {
    let decomp = WhitneyDecomposition::new(&unit_box(d)?, DEFAULT_EPSILON, generation(d))?;
    let mut out = vec![check_overlap(&decomp, OVERLAP_POINTS, seed)];
    let cubes = spread(&decomp, 20);
    let per = LEMMA_PAIRS / cubes.len();
    for n in cubes {
        out.push(check_lemma_xy(&decomp, n, per, seed));
    }
    let pou = PartitionOfUnity::new(decomp);
    out.push(check_partition_sum(&pou, PARTITION_POINTS, PARTITION_TOL, seed));
    let hat = FunctionSpec::Hat { center: vec![0.5; d], radius: 0.2 }.bind(pou.decomposition().spec())?;
    let sched = uniform_eta(pou.decomposition(), DEFAULT_EPSILON / 4.0)?;
    let sm = Smoother::with_default_order(&pou, &sched)?;
    out.push(check_compact_support(&hat, &sm, if d == 1 { 4000 } else { 1000 }, seed));
    Ok(out)
}

/// `e^{−1/(1−r²)}` bump of radius 0.1 around 1/2.
pub fn smooth_bump() -> impl crate::smoothing::FunctionOracle {
    FnOracle::new(1, |x: &[f64]| {
        let r = (x[0] - 0.5) / 0.1;
        if r.abs() < 1.0 {
            (-1.0 / (1.0 - r * r)).exp()
        } else {
            0.0
        }
    })
    .with_support(Aabb::new(vec![0.4], vec![0.6]))
}

pub fn collapse_check(seed: u64) -> Result<CheckReport> {
    let pou = PartitionOfUnity::new(WhitneyDecomposition::new(&unit_box(1)?, DEFAULT_EPSILON, 10)?);
    check_uniform_collapse(&smooth_bump(), &pou, 1e-3, 200, COLLAPSE_TOL, seed)
}

/// The six catalog families on `(0, 1)`, with `(s, p)` chosen so each has a
/// finite seminorm.
pub fn catalog() -> Vec<(&'static str, FunctionSpec, SobolevParams)> {
    let half = SobolevParams { s: 0.5, p: 2.0, d: 1 };
    vec![
        ("constant", FunctionSpec::Constant { value: 2.0 }, half),
        ("coordinate", FunctionSpec::Coordinate { axis: 0, scale: 1.0 }, half),
        ("hat", FunctionSpec::Hat { center: vec![0.5], radius: 0.25 }, half),
        (
            "indicator",
            FunctionSpec::Indicator { min: vec![0.0], max: vec![0.5] },
            SobolevParams { s: 0.25, p: 2.0, d: 1 },
        ),
        ("distance_power", FunctionSpec::DistancePower { beta: 0.75 }, half),
        ("boundary_product", FunctionSpec::BoundaryProduct { min: None, max: None }, half),
    ]
}

pub fn brute_checks(seed: u64) -> Result<Vec<CheckReport>> {
    let spec = unit_box(1)?;
    let quad = QuadratureConfig { seed, ..QuadratureConfig::default() };
    catalog()
        .into_iter()
        .map(|(label, fs, params)| {
            let f = fs.bind(&spec)?;
            check_brute_agreement(label, &f, &spec, &params, 256, &quad)
        })
        .collect()
}

/// Every structural check at one seed.
pub fn validation_suite(seed: u64) -> Result<Vec<CheckReport>> {
    let mut out = geometry_checks(1, seed)?;
    out.extend(geometry_checks(2, seed)?);
    out.push(collapse_check(seed)?);
    out.extend(brute_checks(seed)?);
    Ok(out)
}
