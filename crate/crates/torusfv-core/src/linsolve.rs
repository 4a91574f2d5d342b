//! Matrix-free BiCGStab for the linearized sub-systems of the implicit step.
//!
//! Every Picard sub-solve (continuity, momentum block, temperature) is a
//! sparse nonsymmetric system dominated by the time-derivative mass term.
//! BiCGStab handles the upwind convection and the symmetric diffusion
//! blocks in one Krylov loop; the systems are well conditioned for the
//! time-step sizes of interest, so no preconditioner is needed.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final residual norm relative to `|b|`.
    pub rel_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve `A x = b` with the operator given as `apply(x, out)`.
///
/// `x` doubles as the initial guess. Stops when the true recurrence residual
/// drops below `rel_tol * |b|` (or `|b| = 0` and the residual is zero).
/// On breakdown the method restarts from the current iterate once before
/// giving up; `converged = false` reports the best achieved residual.
pub fn bicgstab(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> SolveStats {
    let n = b.len();
    let b_norm = math::norm(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return SolveStats {
            iterations: 0,
            rel_residual: 0.0,
            converged: true,
        };
    }
    let tol_abs = rel_tol * b_norm;

    let mut r = vec![0.0; n];
    let mut r_hat = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut best_x: Vec<f64> = Vec::new();
    let mut best_res = f64::INFINITY;

    apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut res_norm = math::norm(&r);
    if res_norm <= tol_abs {
        return SolveStats {
            iterations: 0,
            rel_residual: res_norm / b_norm,
            converged: true,
        };
    }
    r_hat.copy_from_slice(&r);
    let mut rho = 1.0f64;
    let mut alpha = 1.0f64;
    let mut omega = 1.0f64;
    let mut restarted = false;

    let mut iter = 0;
    while iter < max_iter {
        iter += 1;
        let rho_new = dot(&r_hat, &r);
        if math::abs(rho_new) < 1e-300 * b_norm * b_norm || math::abs(omega) < 1e-300 {
            // Breakdown; restart the shadow residual once.
            if restarted {
                break;
            }
            restarted = true;
            apply(x, &mut r);
            for i in 0..n {
                r[i] = b[i] - r[i];
            }
            r_hat.copy_from_slice(&r);
            p.iter_mut().for_each(|z| *z = 0.0);
            v.iter_mut().for_each(|z| *z = 0.0);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        apply(&p, &mut v);
        let denom = dot(&r_hat, &v);
        if math::abs(denom) < 1e-300 {
            break;
        }
        alpha = rho / denom;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        let s_norm = math::norm(&s);
        if s_norm <= tol_abs {
            for i in 0..n {
                x[i] += alpha * p[i];
            }
            return SolveStats {
                iterations: iter,
                rel_residual: s_norm / b_norm,
                converged: true,
            };
        }
        apply(&s, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            break;
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * p[i] + omega * s[i];
        }
        for i in 0..n {
            r[i] = s[i] - omega * t[i];
        }
        res_norm = math::norm(&r);
        if res_norm < best_res {
            best_res = res_norm;
            best_x.clear();
            best_x.extend_from_slice(x);
        }
        if res_norm <= tol_abs {
            return SolveStats {
                iterations: iter,
                rel_residual: res_norm / b_norm,
                converged: true,
            };
        }
    }

    // Not converged to tolerance; hand back the best iterate seen.
    if !best_x.is_empty() && best_res < res_norm {
        x.copy_from_slice(&best_x);
        res_norm = best_res;
    }
    SolveStats {
        iterations: iter,
        rel_residual: res_norm / b_norm,
        converged: res_norm <= tol_abs,
    }
}
