//! Mollifier dilations, the piecewise mollification operator `P^η`, translation
//! moduli and η-schedule construction.

mod function;
mod modulus;
mod schedule;
mod weighted;

pub use function::{CatalogFunction, FnOracle, FunctionOracle, FunctionSpec};
pub use modulus::{make_gn, translation_modulus, GnKernel, GnModulus, GnOracle, LocalPiece};
pub use schedule::{select_eta, uniform_eta, EtaSchedule, ScheduleMode, SelectTarget, HALVING_CAP};
pub use weighted::weighted_constants;

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geometry::{Aabb, RemovedSet};
use crate::partition::{BumpProfile, PartitionOfUnity};
use crate::quad::{tensor_box, GaussLegendre, KahanSum};

/// Rounding allowance of `P^η f − f`, in units of `ε_mach·(|P^η f| + |f|)`.
pub const ROUNDING_ULPS: f64 = 64.0;

/// Default Gauss–Legendre points per axis for the convolution rule.
pub const DEFAULT_CONV_ORDER: usize = 32;

pub fn bump_profile(d: usize) -> &'static BumpProfile {
    static PROFILES: OnceLock<[BumpProfile; 3]> = OnceLock::new();
    assert!((1..=3).contains(&d), "dimension {d} unsupported");
    &PROFILES.get_or_init(|| [BumpProfile::new(1), BumpProfile::new(2), BumpProfile::new(3)])[d - 1]
}

/// `h(x)`.
pub fn bump(x: &[f64]) -> f64 {
    bump_profile(x.len()).eval(x)
}

/// `h_δ(y) = δ^{−d} h(y/δ)`.
pub fn mollifier(delta: f64, y: &[f64]) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("mollifier radius {delta} must be positive")));
    }
    let d = y.len();
    let mut z = [0.0; 3];
    for i in 0..d {
        z[i] = y[i] / delta;
    }
    Ok(bump_profile(d).eval(&z[..d]) / delta.powi(d as i32))
}

/// Evaluates `P^η f = Σ_n (f ψ_n) * h_{η(Q_n)}` with a fixed rule on the unit ball.
pub struct Smoother<'a> {
    pou: &'a PartitionOfUnity,
    eta: &'a EtaSchedule,
    /// Nodes `u_j` in the unit ball with weights `w_j h(u_j)`, normalized to sum 1.
    rule: Vec<([f64; 3], f64)>,
}

impl<'a> Smoother<'a> {
    pub fn new(pou: &'a PartitionOfUnity, eta: &'a EtaSchedule, order: usize) -> Result<Self> {
        let decomp = pou.decomposition();
        if eta.len() != decomp.len() {
            return Err(Error::InvalidParameter(format!(
                "schedule has {} entries for {} cubes",
                eta.len(),
                decomp.len()
            )));
        }
        eta.check_admissible(decomp)?;
        let d = decomp.dim();
        let h = bump_profile(d);
        let gl = GaussLegendre::new(order);
        let lo = vec![-1.0; d];
        let hi = vec![1.0; d];
        let mut rule = Vec::new();
        tensor_box(&gl, &lo, &hi, |u, w| {
            let v = h.eval(u);
            if v > 0.0 {
                let mut p = [0.0; 3];
                p[..d].copy_from_slice(u);
                rule.push((p, w * v));
            }
        });
        // exact reproduction of constants
        let total: f64 = rule.iter().map(|r| r.1).sum();
        for r in &mut rule {
            r.1 /= total;
        }
        Ok(Self { pou, eta, rule })
    }

    pub fn with_default_order(pou: &'a PartitionOfUnity, eta: &'a EtaSchedule) -> Result<Self> {
        Self::new(pou, eta, DEFAULT_CONV_ORDER)
    }

    pub fn partition(&self) -> &PartitionOfUnity {
        self.pou
    }

    pub fn schedule(&self) -> &EtaSchedule {
        self.eta
    }

    /// `((f ψ_n) * h_{η(Q_n)})(x)`.
    pub fn term(&self, f: &dyn FunctionOracle, n: usize, x: &[f64]) -> f64 {
        let d = x.len();
        let eta = self.eta.eta[n];
        let mut y = [0.0; 3];
        let mut acc = KahanSum::default();
        for (u, w) in &self.rule {
            for i in 0..d {
                y[i] = x[i] - eta * u[i];
            }
            let psi = self.pou.psi_unchecked(n, &y[..d]);
            if psi != 0.0 {
                acc.add(w * psi * f.eval(&y[..d]));
            }
        }
        acc.value()
    }

    /// `P^η f(x)` over the truncated family, without the collar check.
    pub fn apply_truncated(&self, f: &dyn FunctionOracle, x: &[f64]) -> f64 {
        let decomp = self.pou.decomposition();
        let mut idx = Vec::with_capacity(16);
        decomp.for_each_scaled_containing(x, decomp.star_star(), |n| idx.push(n));
        idx.sort_unstable();
        idx.iter().map(|&n| self.term(f, n, x)).sum::<KahanSum>().value()
    }

    /// `P^η f(x)`; fails where cubes beyond the truncation generation would contribute.
    pub fn apply(&self, f: &dyn FunctionOracle, x: &[f64]) -> Result<f64> {
        let decomp = self.pou.decomposition();
        let spec = decomp.spec();
        if spec.contains(x) {
            let gamma = spec.gamma(x);
            let collar = decomp.collar_threshold();
            if !spec.bbox().contains(x) || gamma <= collar {
                return Err(Error::TruncationCollar { gamma, collar });
            }
        }
        Ok(self.apply_truncated(f, x))
    }

    /// Hull of the `Q_n**` whose `Q_n*` meets `support`; `P^η f` vanishes
    /// outside their union.
    pub fn image_support(&self, support: &Aabb) -> Option<Aabb> {
        let decomp = self.pou.decomposition();
        let d = decomp.dim();
        decomp
            .cubes()
            .iter()
            .filter(|c| c.scaled_box(d, decomp.star()).intersects(support))
            .map(|c| c.scaled_box(d, decomp.star_star()))
            .reduce(|a, b| a.hull(&b))
    }

    /// Indices of cubes whose `Q_n*` meets `support`.
    pub fn cubes_meeting(&self, support: &Aabb) -> Vec<usize> {
        let decomp = self.pou.decomposition();
        let d = decomp.dim();
        (0..decomp.len())
            .filter(|&n| decomp.cubes()[n].scaled_box(d, decomp.star()).intersects(support))
            .collect()
    }
}

/// `P^η f(x)` with the default convolution rule.
pub fn apply_p(f: &dyn FunctionOracle, pou: &PartitionOfUnity, eta: &EtaSchedule, x: &[f64]) -> Result<f64> {
    Smoother::with_default_order(pou, eta)?.apply(f, x)
}

/// `P^η f − f` over the truncated family, as an oracle for the norm routines.
pub struct SmoothedError<'a> {
    smoother: &'a Smoother<'a>,
    f: &'a dyn FunctionOracle,
}

impl<'a> SmoothedError<'a> {
    pub fn new(smoother: &'a Smoother<'a>, f: &'a dyn FunctionOracle) -> Self {
        Self { smoother, f }
    }
}

impl FunctionOracle for SmoothedError<'_> {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.smoother.apply_truncated(self.f, x) - self.f.eval(x)
    }

    fn eval_scaled(&self, x: &[f64]) -> (f64, f64) {
        let pf = self.smoother.apply_truncated(self.f, x);
        let fx = self.f.eval(x);
        (pf - fx, ROUNDING_ULPS * f64::EPSILON * (pf.abs() + fx.abs()))
    }

    fn support(&self) -> Option<Aabb> {
        let s = self.f.support()?;
        Some(match self.smoother.image_support(&s) {
            Some(img) => img.hull(&s),
            None => s,
        })
    }

    fn singular_set(&self) -> Vec<RemovedSet> {
        self.f.singular_set()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{OpenSetSpec, WhitneyDecomposition};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pou(g: u32) -> PartitionOfUnity {
        PartitionOfUnity::new(WhitneyDecomposition::new(&OpenSetSpec::unit_interval(), 0.1, g).unwrap())
    }

    #[test]
    fn mollifier_support_and_scaling() {
        assert_eq!(mollifier(0.5, &[0.5]).unwrap(), 0.0);
        assert_eq!(mollifier(0.5, &[0.7]).unwrap(), 0.0);
        assert!(mollifier(0.0, &[0.1]).is_err());
        assert!(mollifier(-1.0, &[0.1]).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let delta = rng.gen_range(0.01..2.0);
            let lhs = mollifier(delta, &[delta * x[0], delta * x[1]]).unwrap();
            assert_relative_eq!(lhs, bump(&x) / (delta * delta), max_relative = 1e-12);
        }
    }

    #[test]
    fn mollifier_has_unit_mass() {
        // composite Simpson on [−δ, δ], independent of the rule used by P^η
        let delta = 0.01;
        let n = 100_000;
        let h = 2.0 * delta / n as f64;
        let mut s = 0.0;
        for i in 0..=n {
            let y = -delta + i as f64 * h;
            let c = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            s += c * mollifier(delta, &[y]).unwrap();
        }
        assert_relative_eq!(s * h / 3.0, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn zero_function_maps_to_zero() {
        let p = pou(8);
        let eta = uniform_eta(p.decomposition(), 0.025).unwrap();
        let sm = Smoother::with_default_order(&p, &eta).unwrap();
        let zero = FnOracle::new(1, |_: &[f64]| 0.0);
        for x in [0.1, 0.3, 0.5, 0.77] {
            assert_eq!(sm.apply(&zero, &[x]).unwrap(), 0.0);
        }
    }

    #[test]
    fn constants_are_reproduced_in_the_covered_region() {
        let p = pou(8);
        let eta = uniform_eta(p.decomposition(), 0.025).unwrap();
        let sm = Smoother::with_default_order(&p, &eta).unwrap();
        let one = FnOracle::new(1, |_: &[f64]| 1.0);
        for x in [0.1, 0.3, 0.5, 0.77, 0.95] {
            assert_relative_eq!(sm.apply(&one, &[x]).unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn collar_is_refused() {
        let p = pou(6);
        let eta = uniform_eta(p.decomposition(), 0.025).unwrap();
        let sm = Smoother::with_default_order(&p, &eta).unwrap();
        let one = FnOracle::new(1, |_: &[f64]| 1.0);
        let x = 0.5 * p.decomposition().collar_threshold();
        assert!(matches!(sm.apply(&one, &[x]), Err(Error::TruncationCollar { .. })));
        assert!(sm.apply_truncated(&one, &[x]).is_finite());
        // outside Ω the operator vanishes identically
        assert_eq!(sm.apply(&one, &[1.5]).unwrap(), 0.0);
    }

    #[test]
    fn schedule_length_must_match() {
        let p = pou(6);
        let other = pou(7);
        let eta = uniform_eta(other.decomposition(), 0.025).unwrap();
        assert!(Smoother::with_default_order(&p, &eta).is_err());
    }
}
