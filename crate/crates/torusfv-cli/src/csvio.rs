//! CSV report emission.
//!
//! Floats are written locale-independent with 17 significant digits, which
//! round-trips binary64 exactly; undefined EOC rates appear as `nan`.

use torusfv_core::consistency::ConsistencyReport;
use torusfv_core::convergence::StudyTable;
use torusfv_core::diagnostics::DiagnosticsRecord;

/// 17-significant-digit scientific notation, `.`-decimal.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn fmt_rate(r: Option<f64>) -> String {
    match r {
        Some(v) => fmt_f64(v),
        None => "nan".to_string(),
    }
}

pub const TIMESERIES_HEADER: &str = "step,t,mass,e_kin,e_int,e_tot,diss_eps,diss_dt,diss_up,\
diss_alpha,energy_residual,entropy_prod,rho_min,rho_max,theta_min,theta_max,picard_iters";

/// `timeseries.csv`: one row per recorded step.
pub fn timeseries_csv(records: &[DiagnosticsRecord], record_every: usize) -> String {
    let every = record_every.max(1);
    let mut out = String::from(TIMESERIES_HEADER);
    out.push('\n');
    for r in records {
        if r.step % every != 0 {
            continue;
        }
        let fields = [
            fmt_f64(r.time),
            fmt_f64(r.mass),
            fmt_f64(r.kinetic_energy),
            fmt_f64(r.internal_energy),
            fmt_f64(r.total_energy),
            fmt_f64(r.diss_eps),
            fmt_f64(r.diss_dt),
            fmt_f64(r.diss_upwind),
            fmt_f64(r.diss_alpha),
            fmt_f64(r.energy_residual),
            fmt_f64(r.entropy_production),
            fmt_f64(r.rho_min),
            fmt_f64(r.rho_max),
            fmt_f64(r.theta_min),
            fmt_f64(r.theta_max),
        ];
        out.push_str(&r.step.to_string());
        for f in fields {
            out.push(',');
            out.push_str(&f);
        }
        out.push(',');
        out.push_str(&r.picard_iterations.to_string());
        out.push('\n');
    }
    out
}

pub const EOC_HEADER: &str = "N,h,dt,err_rho,err_u,err_theta,err_gradu,err_gradtheta,\
sup_relenergy,rate_rho,rate_u,rate_theta,as_rho_min,as_rho_max,as_theta_min,as_theta_max";

/// `eoc.csv`: one row per study level, coarse to fine.
pub fn eoc_csv(table: &StudyTable) -> String {
    let mut out = String::from(EOC_HEADER);
    out.push('\n');
    for (i, row) in table.rows.iter().enumerate() {
        let fields = [
            fmt_f64(row.h),
            fmt_f64(row.dt),
            fmt_f64(row.report.rho_linf_l2),
            fmt_f64(row.report.u_linf_l2),
            fmt_f64(row.report.theta_linf_l2),
            fmt_f64(row.report.grad_u_l2l2),
            fmt_f64(row.report.grad_theta_l2l2),
            fmt_f64(row.report.rel_energy_sup),
            fmt_rate(table.rates_rho[i]),
            fmt_rate(table.rates_u[i]),
            fmt_rate(table.rates_theta[i]),
            fmt_f64(row.as_rho_min),
            fmt_f64(row.as_rho_max),
            fmt_f64(row.as_theta_min),
            fmt_f64(row.as_theta_max),
        ];
        out.push_str(&row.n.to_string());
        for f in fields {
            out.push(',');
            out.push_str(&f);
        }
        out.push('\n');
    }
    out
}

pub const CONSISTENCY_HEADER: &str = "N,h,dt,eps,e_rho,e_m,e_s_signed";

/// `consistency.csv`: one row per level; `e_rho` for the canonical scalar
/// test function, `e_m` the Euclidean norm over the canonical vector one,
/// `e_s_signed` for the constant test function.
pub fn consistency_csv(rows: &[(usize, ConsistencyReport)]) -> String {
    let mut out = String::from(CONSISTENCY_HEADER);
    out.push('\n');
    for (n, r) in rows {
        let fields = [
            fmt_f64(r.h),
            fmt_f64(r.dt),
            fmt_f64(r.eps),
            fmt_f64(r.e_rho),
            fmt_f64(r.e_m_norm),
            fmt_f64(r.e_s_signed),
        ];
        out.push_str(&n.to_string());
        for f in fields {
            out.push(',');
            out.push_str(&f);
        }
        out.push('\n');
    }
    out
}
