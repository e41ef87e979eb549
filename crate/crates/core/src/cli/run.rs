//! Convergence runs: error norms of `P^η f − f` along a schedule list.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{AdaptiveTarget, EtaConfig, ExperimentConfig, NormKind};
use crate::error::{Error, Result};
use crate::geometry::{is_plump, ClosedSet};
use crate::norms::{
    gagliardo, hardy_term, kernel_admissibility, kernel_seminorm, lp_norm, weight_condition, weighted_gagliardo,
    Estimate, Verdict,
};
use crate::partition::PartitionOfUnity;
use crate::smoothing::{select_eta, uniform_eta, EtaSchedule, FunctionOracle, SelectTarget, SmoothedError, Smoother};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormError {
    pub kind: NormKind,
    pub value: f64,
    pub error_estimate: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub k: Option<u32>,
    pub fraction: Option<f64>,
    pub max_eta: f64,
    pub errors: Vec<NormError>,
    pub hardy: Option<f64>,
    pub wall_time: Option<f64>,
}

impl ReportRow {
    pub fn error(&self, kind: NormKind) -> Option<&NormError> {
        self.errors.iter().find(|e| e.kind == kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecheckRecord {
    pub name: String,
    pub verdict: Verdict,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub config_hash: String,
    pub seed: u64,
    pub rows: Vec<ReportRow>,
    pub prechecks: Vec<PrecheckRecord>,
    /// Tolerance violations on the final row.
    pub failures: Vec<String>,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub override_precheck: bool,
}

fn record(name: &str, e: &Estimate) -> PrecheckRecord {
    PrecheckRecord { name: name.into(), verdict: e.verdict, value: e.value }
}

/// `‖f‖_{L^p}` restricted to the truncation collar of the decomposition.
struct CollarPart<'a> {
    f: &'a dyn FunctionOracle,
    pou: &'a PartitionOfUnity,
}

impl FunctionOracle for CollarPart<'_> {
    fn dim(&self) -> usize {
        self.f.dim()
    }
    fn eval(&self, x: &[f64]) -> f64 {
        let decomp = self.pou.decomposition();
        let spec = decomp.spec();
        if spec.gamma(x) <= decomp.collar_threshold() {
            self.f.eval(x)
        } else {
            0.0
        }
    }
}

/// Schedules in run order: uniform fractions descending, adaptive `k`
/// ascending.
pub fn build_schedules(cfg: &ExperimentConfig, f: &dyn FunctionOracle, pou: &PartitionOfUnity) -> Result<Vec<EtaSchedule>> {
    let mut schedules: Vec<EtaSchedule> = Vec::new();
    match &cfg.eta {
        EtaConfig::Uniform { fractions } => {
            let mut fr = fractions.clone();
            fr.sort_by(|a, b| b.total_cmp(a));
            for x in fr {
                schedules.push(uniform_eta(pou.decomposition(), x)?);
            }
        }
        EtaConfig::Adaptive { k, .. } => {
            let mut ks = k.clone();
            ks.sort_unstable();
            ks.dedup();
            let target = match cfg.adaptive_target() {
                AdaptiveTarget::Plain => SelectTarget::Plain,
                AdaptiveTarget::Weighted => SelectTarget::Weighted(cfg.weight.as_ref().expect("validated")),
                AdaptiveTarget::Kernel => SelectTarget::Kernel(cfg.kernel.as_ref().expect("validated")),
            };
            for k in ks {
                schedules.push(select_eta(f, pou, k, &cfg.params(), target, &cfg.quad())?);
            }
        }
    }
    Ok(schedules)
}

/// Runs the pre-checks, builds each schedule (largest `η` first) and
/// evaluates the configured error norms of `P^η f − f`.
pub fn run_convergence(cfg: &ExperimentConfig, opts: RunOptions) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let f = cfg.function()?;
    let spec = &cfg.domain;
    let params = cfg.params();
    let quad = cfg.quad();
    let pou = PartitionOfUnity::new(cfg.decomposition()?);
    let mut prechecks = Vec::new();
    let gate = |ok: bool, what: String| -> Result<()> {
        if ok || opts.override_precheck {
            Ok(())
        } else {
            Err(Error::Precondition(what))
        }
    };

    if let Some(kappa) = cfg.plump_kappa {
        let v = is_plump(&ClosedSet::ComplementOf(spec.clone()), kappa, 64, 256, cfg.seed);
        prechecks.push(PrecheckRecord {
            name: format!("plump[kappa={kappa}]"),
            verdict: if v.plump { Verdict::Finite } else { Verdict::Divergent },
            value: kappa,
        });
        gate(v.plump, format!("complement is not {kappa}-plump (witness {:?})", v.witness))?;
    }
    let wants_seminorm = cfg.errors.iter().any(|k| k.is_seminorm());
    let mut hardy = None;
    if wants_seminorm {
        let h = hardy_term(&f, spec, &params, &quad)?;
        prechecks.push(record("hardy", &h));
        hardy = Some(h.value);
        gate(h.verdict != Verdict::Divergent, format!("Hardy term diverges for {:?}", cfg.function))?;
    }
    if let Some(w) = &cfg.weight {
        let e = weight_condition(w, spec, &params, &quad)?;
        prechecks.push(record("weight_condition", &e));
        gate(e.verdict == Verdict::Finite, format!("weight condition not verified finite ({:?})", e.verdict))?;
    }
    if let (Some(k), true) = (&cfg.kernel, cfg.errors.iter().any(|k| matches!(k, NormKind::Kernel | NormKind::XNorm))) {
        let e = kernel_admissibility(k, spec.dim(), params.p, &quad)?;
        prechecks.push(record("kernel_admissibility", &e));
        gate(e.verdict == Verdict::Finite, format!("kernel admissibility integral not finite ({:?})", e.verdict))?;
    }
    // the truncated operator misses the collar; f must be small there
    let collar = lp_norm(&CollarPart { f: &f, pou: &pou }, spec, params.p, None, &quad)?;
    prechecks.push(record("collar_mass", &collar));
    gate(
        collar.value <= cfg.tolerances.lp,
        format!(
            "f reaches the truncation collar with L^p mass {:.3e} (raise max_generation)",
            collar.value
        ),
    )?;

    let schedules = build_schedules(cfg, &f, &pou)?;

    let mut rows = Vec::with_capacity(schedules.len());
    for sched in &schedules {
        let start = Instant::now();
        let sm = Smoother::with_default_order(&pou, sched)?;
        let err = SmoothedError::new(&sm, &f);
        let mut errors = Vec::new();
        let mut lp_cache: Option<Estimate> = None;
        for &kind in &cfg.errors {
            let e = match kind {
                NormKind::Lp => {
                    let e = lp_norm(&err, spec, params.p, None, &quad)?;
                    lp_cache = Some(e.clone());
                    e
                }
                NormKind::WeightedLp => lp_norm(&err, spec, params.p, cfg.weight.as_ref(), &quad)?,
                NormKind::Seminorm => gagliardo(&err, spec, &params, &quad)?,
                NormKind::WeightedSeminorm => {
                    weighted_gagliardo(&err, spec, &params, cfg.weight.as_ref().expect("validated"), &quad)?
                }
                NormKind::Kernel => kernel_seminorm(&err, spec, params.p, cfg.kernel.as_ref().expect("validated"), &quad)?,
                NormKind::XNorm => {
                    let lp = match &lp_cache {
                        Some(e) => e.clone(),
                        None => lp_norm(&err, spec, params.p, None, &quad)?,
                    };
                    let k = kernel_seminorm(&err, spec, params.p, cfg.kernel.as_ref().expect("validated"), &quad)?;
                    let verdict = if lp.verdict == Verdict::Divergent || k.verdict == Verdict::Divergent {
                        Verdict::Divergent
                    } else if lp.verdict == Verdict::Finite && k.verdict == Verdict::Finite {
                        Verdict::Finite
                    } else {
                        Verdict::Inconclusive
                    };
                    Estimate {
                        value: lp.value + k.value,
                        error_estimate: lp.error_estimate + k.error_estimate,
                        verdict,
                        ..k
                    }
                }
            };
            errors.push(NormError { kind, value: e.value, error_estimate: e.error_estimate, verdict: e.verdict });
        }
        let (k, fraction) = match &sched.mode {
            crate::smoothing::ScheduleMode::Uniform { fraction } => (None, Some(*fraction)),
            crate::smoothing::ScheduleMode::Adaptive { k, .. } => (Some(*k), None),
        };
        rows.push(ReportRow {
            k,
            fraction,
            max_eta: sched.max_eta(),
            errors,
            hardy,
            wall_time: cfg.output.timing.then(|| start.elapsed().as_secs_f64()),
        });
    }

    let mut failures = Vec::new();
    if let Some(last) = rows.last() {
        for e in &last.errors {
            let tol = if e.kind.is_seminorm() { cfg.tolerances.seminorm } else { cfg.tolerances.lp };
            if !(e.value < tol) {
                failures.push(format!("final {} error {:.4e} exceeds tolerance {tol}", e.kind.name(), e.value));
            }
        }
    }
    Ok(ConvergenceReport { config_hash: cfg.hash(), seed: cfg.seed, rows, prechecks, failures })
}
