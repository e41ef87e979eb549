//! The per-cube constants `C_n` and `D_n` of the weighted density argument.

use crate::error::{Error, Result};
use crate::geometry::WhitneyDecomposition;
use crate::norms::{radial_panels, ratio_verdict, QuadratureConfig, SobolevParams, Verdict, Weight};
use crate::quad::{angular_rule, GaussLegendre, KahanSum};

/// `C_n = sup_{Q_n**} w` on a `9^d` grid and
/// `D_n = C_n c^{−d−sp} ∫_{Ω∖Q_n**} w(y) |y − x_n|^{−d−sp} dy` with `c = ε/(ε+√d)`.
pub fn weighted_constants(
    decomp: &WhitneyDecomposition,
    w: &Weight,
    n: usize,
    params: &SobolevParams,
    quad: &QuadratureConfig,
) -> Result<(f64, f64)> {
    let d = decomp.dim();
    if params.d != d {
        return Err(Error::InvalidParameter(format!("parameters for dimension {} on a {d}-dimensional set", params.d)));
    }
    let cube = decomp.cubes().get(n).ok_or_else(|| Error::InvalidParameter(format!("cube index {n} out of range")))?;
    let qss = cube.scaled_box(d, decomp.star_star());
    let mut c_n: f64 = 0.0;
    let mut x = [0.0; 3];
    for idx in 0..9usize.pow(d as u32) {
        let mut rem = idx;
        for i in 0..d {
            x[i] = qss.lo[i] + (qss.hi[i] - qss.lo[i]) * (rem % 9) as f64 / 8.0;
            rem /= 9;
        }
        c_n = c_n.max(w.eval(&x[..d]));
    }
    if c_n == 0.0 {
        return Ok((0.0, 0.0));
    }
    let sp = params.sp();
    let xn = &cube.center[..d];
    let spec = decomp.spec();
    let gl = GaussLegendre::new(quad.order.max(8));
    let levels = quad.grade_levels;
    let integrand = |u: &[f64], r: f64| {
        let mut y = [0.0; 3];
        for i in 0..d {
            y[i] = xn[i] + r * u[i];
        }
        w.eval(&y[..d]) * r.powf(-1.0 - sp)
    };
    let mut total = KahanSum::default();
    let mut panels = Vec::new();
    for (u, wu) in angular_rule(d, quad.angular) {
        let u = &u[..d];
        let Some((_, exit)) = qss.ray_clip(xn, u) else { continue };
        for (a, b) in spec.ray_intervals(xn, u, false) {
            let a = a.max(exit);
            if b <= a {
                continue;
            }
            if b.is_finite() {
                // dyadic panels away from x_n, graded toward ∂Ω at b
                let mut lo = a;
                while 2.0 * lo < b {
                    total.add(wu * gl.integrate(lo, 2.0 * lo, |r| integrand(u, r)));
                    lo *= 2.0;
                }
                panels.clear();
                radial_panels(lo, b, 0.5 * (b - lo), false, levels, f64::INFINITY, &mut panels);
                for &(p0, p1) in &panels {
                    total.add(wu * gl.integrate(p0, p1, |r| integrand(u, r)));
                }
            } else {
                let shells: Vec<f64> = (0..quad.shell_cap as i32)
                    .map(|j| {
                        let r0 = a * 2f64.powi(j);
                        gl.integrate(r0, 2.0 * r0, |r| integrand(u, r))
                    })
                    .collect();
                match ratio_verdict(&shells, 1e-6) {
                    (Verdict::Finite, _, tail) => {
                        total.add(wu * (shells.iter().sum::<f64>() + tail));
                    }
                    (v, rho, _) => {
                        return Err(Error::Divergent(format!(
                            "D_n integral for cube {n} along direction {u:?}: {v:?} (shell ratio {rho:.4})"
                        )));
                    }
                }
            }
        }
    }
    let c = decomp.epsilon() / (decomp.epsilon() + (d as f64).sqrt());
    Ok((c_n, c_n * c.powf(-(d as f64) - sp) * total.value()))
}
