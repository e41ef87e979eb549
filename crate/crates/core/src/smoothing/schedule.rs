//! Per-cube mollification radii.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::modulus::{translation_modulus, GnKernel, GnModulus, LocalPiece};
use super::{weighted_constants, FunctionOracle};
use crate::error::{Error, Result};
use crate::geometry::WhitneyDecomposition;
use crate::norms::{KernelSpec, QuadratureConfig, SobolevParams, Weight};
use crate::partition::PartitionOfUnity;
use crate::quad::random_direction;

/// Maximum number of halvings per cube.
pub const HALVING_CAP: u32 = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleMode {
    Uniform { fraction: f64 },
    Adaptive { k: u32, target: String },
}

/// `η(Q_n)` for every cube of a decomposition, indexed by enumeration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaSchedule {
    pub eta: Vec<f64>,
    pub edges: Vec<f64>,
    /// Achieved `g_n` modulus (`p`-th power) for adaptive schedules.
    pub moduli: Vec<Option<f64>>,
    pub mode: ScheduleMode,
}

impl EtaSchedule {
    /// Fails unless `0 < η(Q_n) < (ε/2)·l(Q_n)` for every cube.
    pub fn new(decomp: &WhitneyDecomposition, eta: Vec<f64>, moduli: Vec<Option<f64>>, mode: ScheduleMode) -> Result<Self> {
        if eta.len() != decomp.len() || moduli.len() != decomp.len() {
            return Err(Error::InvalidParameter(format!("schedule has {} entries for {} cubes", eta.len(), decomp.len())));
        }
        let edges = decomp.cubes().iter().map(|c| c.edge).collect();
        let s = Self { eta, edges, moduli, mode };
        s.check_admissible(decomp)?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    pub fn k(&self) -> Option<u32> {
        match self.mode {
            ScheduleMode::Adaptive { k, .. } => Some(k),
            ScheduleMode::Uniform { .. } => None,
        }
    }

    pub fn max_eta(&self) -> f64 {
        self.eta.iter().copied().fold(0.0, f64::max)
    }

    pub fn check_admissible(&self, decomp: &WhitneyDecomposition) -> Result<()> {
        let half = 0.5 * decomp.epsilon();
        for (n, (c, &e)) in decomp.cubes().iter().zip(&self.eta).enumerate() {
            let bound = half * c.edge;
            if !(e > 0.0 && e < bound) {
                return Err(Error::InadmissibleEta { cube: n, eta: e, bound });
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("cube,edge,eta,modulus\n");
        for n in 0..self.len() {
            let m = self.moduli[n].map(|v| format!("{v:e}")).unwrap_or_default();
            out.push_str(&format!("{n},{:e},{:e},{m}\n", self.edges[n], self.eta[n]));
        }
        out
    }
}

/// `η(Q_n) = fraction·l(Q_n)`, `fraction ∈ (0, ε/2)`.
pub fn uniform_eta(decomp: &WhitneyDecomposition, fraction: f64) -> Result<EtaSchedule> {
    let half = 0.5 * decomp.epsilon();
    if !(fraction > 0.0 && fraction < half) {
        return Err(Error::InvalidParameter(format!("eta fraction {fraction} must lie in (0, {half})")));
    }
    let eta = decomp.cubes().iter().map(|c| fraction * c.edge).collect();
    EtaSchedule::new(decomp, eta, vec![None; decomp.len()], ScheduleMode::Uniform { fraction })
}

/// Which convergence argument the thresholds come from.
#[derive(Debug, Clone, Copy)]
pub enum SelectTarget<'a> {
    /// `‖τ_t g_n − g_n‖^p < 1/(k 2^n)`.
    Plain,
    /// `g_n` against `1/(k 2^{n+1} C_n²)`; `fψ_n` against
    /// `min(1/(k 2^{n+2} D_n), 1/(k 2^{n+1} C_n))`.
    Weighted(&'a Weight),
    /// Kernel `g_n` against `1/(k 2^n)`.
    Kernel(&'a KernelSpec),
}

impl SelectTarget<'_> {
    fn name(&self) -> &'static str {
        match self {
            SelectTarget::Plain => "plain",
            SelectTarget::Weighted(_) => "weighted",
            SelectTarget::Kernel(_) => "kernel",
        }
    }
}

enum CubeOutcome {
    Accepted { eta: f64, modulus: f64 },
    Capped,
}

fn directions(d: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut dirs: Vec<[f64; 3]> = (0..d)
        .map(|i| {
            let mut e = [0.0; 3];
            e[i] = 1.0;
            e
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..2 * d {
        let u = random_direction(&mut rng, d);
        // τ_{−t} gives the same modulus as τ_t
        if dirs.iter().all(|v| (v[0] * u[0] + v[1] * u[1] + v[2] * u[2]).abs() < 1.0 - 1e-12) {
            dirs.push(u);
        }
    }
    dirs
}

/// Halves `η` from `(ε/2k)·l(Q_n)/2` until the directional moduli meet the
/// thresholds of `target`.
pub fn select_eta(
    f: &dyn FunctionOracle,
    pou: &PartitionOfUnity,
    k: u32,
    params: &SobolevParams,
    target: SelectTarget,
    quad: &QuadratureConfig,
) -> Result<EtaSchedule> {
    params.validate()?;
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let decomp = pou.decomposition();
    let d = decomp.dim();
    if params.d != d || f.dim() != d {
        return Err(Error::InvalidParameter("dimension mismatch between function, parameters and set".into()));
    }
    if let SelectTarget::Kernel(kern) = target {
        kern.validate()?;
    }
    let p = params.p;
    let kf = k as f64;
    let eps = decomp.epsilon();
    let run = |n: usize| -> Result<CubeOutcome> {
        let idx = (n + 1) as i32;
        let edge = decomp.cubes()[n].edge;
        let (g_thr, f_thr) = match target {
            SelectTarget::Plain | SelectTarget::Kernel(_) => (1.0 / (kf * 2f64.powi(idx)), f64::INFINITY),
            SelectTarget::Weighted(w) => {
                let (c, dn) = weighted_constants(decomp, w, n, params, quad)?;
                let g = 1.0 / (kf * 2f64.powi(idx + 1) * c * c);
                let fa = 1.0 / (kf * 2f64.powi(idx + 2) * dn);
                let fb = 1.0 / (kf * 2f64.powi(idx + 1) * c);
                (g, fa.min(fb))
            }
        };
        let kernel = match target {
            SelectTarget::Kernel(kern) => GnKernel::Kernel(kern.clone()),
            _ => GnKernel::Fractional { s: params.s },
        };
        let gm = GnModulus::new(f, pou, n, kernel, p, quad);
        let piece = LocalPiece { f, pou, n };
        let seed = quad.seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let dirs = directions(d, seed);
        let mut eta = 0.5 * eps / (2.0 * kf) * edge;
        for _ in 0..=HALVING_CAP {
            let mut gmax: f64 = 0.0;
            let mut fmax: f64 = 0.0;
            for (j, u) in dirs.iter().enumerate() {
                let t: Vec<f64> = u[..d].iter().map(|v| eta * v).collect();
                gmax = gmax.max(gm.pow(&t, seed.wrapping_add(j as u64)));
                if f_thr.is_finite() {
                    fmax = fmax.max(translation_modulus(&piece, &t, p, quad)?.powf(p));
                }
                if gmax >= g_thr || fmax >= f_thr {
                    break;
                }
            }
            if gmax < g_thr && fmax < f_thr {
                return Ok(CubeOutcome::Accepted { eta, modulus: gmax });
            }
            eta *= 0.5;
        }
        Ok(CubeOutcome::Capped)
    };
    let outcomes: Vec<Result<CubeOutcome>> = if quad.parallel {
        (0..decomp.len()).into_par_iter().map(run).collect()
    } else {
        (0..decomp.len()).map(run).collect()
    };
    let mut eta = Vec::with_capacity(decomp.len());
    let mut moduli = Vec::with_capacity(decomp.len());
    let mut capped = Vec::new();
    for (n, o) in outcomes.into_iter().enumerate() {
        match o? {
            CubeOutcome::Accepted { eta: e, modulus } => {
                eta.push(e);
                moduli.push(Some(modulus));
            }
            CubeOutcome::Capped => capped.push(n),
        }
    }
    if !capped.is_empty() {
        return Err(Error::IterationCap { cubes: capped });
    }
    EtaSchedule::new(decomp, eta, moduli, ScheduleMode::Adaptive { k, target: target.name().into() })
}
