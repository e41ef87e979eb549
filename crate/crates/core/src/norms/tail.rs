//! Dyadic-shell integrals for the weight condition and kernel admissibility,
//! with the geometric ratio test used for finiteness verdicts.

use super::{Estimate, KernelSpec, QuadratureConfig, SobolevParams, Verdict, Weight};
use crate::error::Result;
use crate::geometry::OpenSetSpec;
use crate::quad::{angular_rule, GaussLegendre, KahanSum};

/// Ratio test on contributions ordered toward the singular end.
/// Returns the verdict, the last ratio and the extrapolated tail `c·ρ/(1−ρ)`.
pub fn ratio_verdict(seq: &[f64], tol: f64) -> (Verdict, f64, f64) {
    let n = seq.len();
    if n < 3 {
        return (Verdict::Inconclusive, f64::NAN, f64::NAN);
    }
    let last = seq[n - 1];
    if last == 0.0 {
        return (Verdict::Finite, 0.0, 0.0);
    }
    if seq[n - 2] == 0.0 || seq[n - 3] == 0.0 {
        return (Verdict::Inconclusive, f64::NAN, f64::NAN);
    }
    let r1 = seq[n - 2] / seq[n - 3];
    let r2 = last / seq[n - 2];
    if r2 >= 1.0 - tol && r1 >= 1.0 - tol {
        return (Verdict::Divergent, r2, f64::INFINITY);
    }
    let gap = 1.0 - r2;
    if r2 < 1.0 && (r2 - r1).abs() <= 0.1 * gap + tol {
        (Verdict::Finite, r2, last * r2 / gap)
    } else {
        (Verdict::Inconclusive, r2, f64::NAN)
    }
}

/// `Σ_j ∫_{2^j ≤ |x−c| < 2^{j+1}} g` for `j = −cap..cap−1` over `Ω` (not clipped
/// to the bounding box), with both ends tested for geometric decay.
pub fn shell_integral<G>(spec: &OpenSetSpec, center: &[f64], quad: &QuadratureConfig, order: usize, g: G) -> (Vec<f64>, Estimate)
where
    G: Fn(&[f64], f64) -> f64,
{
    let d = spec.dim();
    let cap = quad.shell_cap as i32;
    let gl = GaussLegendre::new(order);
    let dirs = angular_rule(d, quad.angular);
    let mut shells = vec![KahanSum::default(); 2 * cap as usize];
    let mut y = vec![0.0; d];
    for (u, wu) in &dirs {
        let u = &u[..d];
        let ivs = spec.ray_intervals(center, u, false);
        for (k, acc) in shells.iter_mut().enumerate() {
            let j = k as i32 - cap;
            let (r0, r1) = (2f64.powi(j), 2f64.powi(j + 1));
            for &(a, b) in &ivs {
                let (lo, hi) = (a.max(r0), b.min(r1));
                if hi <= lo {
                    continue;
                }
                // log-radial substitution r = e^t
                let v = gl.integrate(lo.ln(), hi.ln(), |t| {
                    let r = t.exp();
                    for i in 0..d {
                        y[i] = center[i] + r * u[i];
                    }
                    g(&y, r) * r.powi(d as i32)
                });
                acc.add(wu * v);
            }
        }
    }
    let vals: Vec<f64> = shells.iter().map(|s| s.value()).collect();
    let inner: Vec<f64> = vals[..cap as usize].iter().rev().map(|v| v.abs()).collect();
    let outer: Vec<f64> = vals[cap as usize..].iter().map(|v| v.abs()).collect();
    let (vi, ri, ti) = ratio_verdict(&inner[inner.len() - 4..], 1e-9);
    let (vo, ro, to) = ratio_verdict(&outer[outer.len() - 4..], 1e-9);
    let verdict = match (vi, vo) {
        (Verdict::Divergent, _) | (_, Verdict::Divergent) => Verdict::Divergent,
        (Verdict::Finite, Verdict::Finite) => Verdict::Finite,
        _ => Verdict::Inconclusive,
    };
    let body: f64 = vals.iter().copied().sum::<KahanSum>().value();
    let (value, err) = if verdict == Verdict::Finite {
        let spread = |seq: &[f64], r: f64, t: f64| {
            let n = seq.len();
            if t == 0.0 || seq[n - 2] == 0.0 {
                0.0
            } else {
                let r_prev = seq[n - 2] / seq[n - 3];
                t * (r - r_prev).abs() / (1.0 - r).max(1e-300)
            }
        };
        (body + ti + to, spread(&inner, ri, ti) + spread(&outer, ro, to))
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    let est = Estimate {
        value,
        error_estimate: err,
        verdict,
        method: "dyadic_shells".into(),
        resolution: quad.angular,
        seed: quad.seed,
        integral: value,
        integral_error: err,
    };
    (vals, est)
}

/// `∫_Ω w(x)/(1+|x|)^{d+sp} dx`: finite value or a divergence verdict.
pub fn weight_condition(w: &Weight, spec: &OpenSetSpec, params: &SobolevParams, quad: &QuadratureConfig) -> Result<Estimate> {
    params.validate()?;
    quad.validate()?;
    w.validate(spec)?;
    let d = spec.dim();
    let e = d as f64 + params.sp();
    let c = w.center(d);
    let g = |x: &[f64], _r: f64| {
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        w.eval(x) / (1.0 + nx).powf(e)
    };
    let (_, mut est) = shell_integral(spec, &c, quad, quad.order, g);
    if quad.report_error && est.is_finite() {
        let (_, low) = shell_integral(spec, &c, quad, quad.order - 1, g);
        est.error_estimate += (est.value - low.value).abs();
        est.integral_error = est.error_estimate;
    }
    Ok(est)
}

/// `∫_0^∞ (r^p ∧ 1) K(r) r^{d−1} dr`: finite value or a divergence verdict.
pub fn kernel_admissibility(k: &KernelSpec, d: usize, p: f64, quad: &QuadratureConfig) -> Result<Estimate> {
    k.validate()?;
    quad.validate()?;
    let cap = quad.shell_cap as i32;
    let gl = GaussLegendre::new(quad.order);
    let breaks = k.breakpoints();
    let run = |gl: &GaussLegendre| {
        let mut vals = Vec::with_capacity(2 * cap as usize);
        for j in -cap..cap {
            let (r0, r1) = (2f64.powi(j), 2f64.powi(j + 1));
            let mut pts = vec![r0];
            pts.extend(breaks.iter().copied().filter(|b| *b > r0 && *b < r1));
            pts.push(r1);
            let v: f64 = pts
                .windows(2)
                .map(|w| {
                    gl.integrate(w[0].ln(), w[1].ln(), |t| {
                        let r = t.exp();
                        r.powf(p).min(1.0) * k.eval(r) * r.powi(d as i32)
                    })
                })
                .sum();
            vals.push(v);
        }
        vals
    };
    let vals = run(&gl);
    let inner: Vec<f64> = vals[..cap as usize].iter().rev().map(|v| v.abs()).collect();
    let outer: Vec<f64> = vals[cap as usize..].iter().map(|v| v.abs()).collect();
    let (vi, _, ti) = ratio_verdict(&inner[inner.len() - 4..], 1e-9);
    let (vo, _, to) = ratio_verdict(&outer[outer.len() - 4..], 1e-9);
    let verdict = match (vi, vo) {
        (Verdict::Divergent, _) | (_, Verdict::Divergent) => Verdict::Divergent,
        (Verdict::Finite, Verdict::Finite) => Verdict::Finite,
        _ => Verdict::Inconclusive,
    };
    let body = vals.iter().copied().sum::<KahanSum>().value();
    let (value, err) = if verdict == Verdict::Finite {
        let err = if quad.report_error {
            let low: f64 = run(&GaussLegendre::new(quad.order - 1)).iter().sum();
            (body - low).abs()
        } else {
            0.0
        };
        (body + ti + to, err)
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    Ok(Estimate {
        value,
        error_estimate: err,
        verdict,
        method: "dyadic_shells".into(),
        resolution: quad.order,
        seed: quad.seed,
        integral: value,
        integral_error: err,
    })
}
