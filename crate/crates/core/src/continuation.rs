//! The mu -> 0 limit: warm-started solve ladders, the convergence monitors
//! (mu |grad u|_4^4 -> 0, multiplier convergence), and classification of the
//! limit against the two-critical-point theorem.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{
    default_global_init, descend, minimize_local, Classification, FlowConfig, SolveReport,
    SolveStatus,
};
use crate::model::energy::{breakdown, j_mu, multiplier_of, perturbed_pohozaev_sides, q_mu};
use crate::model::field::RadialField;
use crate::model::grid::RadialGrid;
use crate::model::params::Params;
use crate::mpass::{mountain_pass, refine_peak, MpassConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveKind {
    GlobalMin,
    LocalMin,
    MountainPass,
}

/// Geometric mu ladder mu0, mu0*factor, ... down to mu_min.
pub fn mu_schedule(mu0: f64, factor: f64, mu_min: f64) -> Result<Vec<f64>> {
    if !(mu0 >= mu_min) || !(mu_min > 0.0) {
        return Err(Error::InvalidConfig("schedule needs mu0 >= mu_min > 0".into()));
    }
    if !(factor > 0.0 && factor < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "schedule factor must lie in (0, 1), got {factor}"
        )));
    }
    let mut out = vec![mu0];
    let mut mu = mu0;
    while mu > mu_min * (1.0 + 1e-12) {
        mu = (mu * factor).max(mu_min);
        out.push(mu);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub mu: f64,
    pub j_mu: f64,
    pub mu_grad4: f64,
    pub lambda: f64,
    pub mass: f64,
    pub grad2: f64,
    pub quasi: f64,
    pub pot: f64,
    pub status: SolveStatus,
    /// Set when the warm start lost to the cold default and was disabled.
    pub warm_start_disabled: bool,
    /// Set when lambda >= 0 was encountered (the strong-convergence
    /// hypothesis of the limit theorem fails).
    pub lambda_nonnegative: bool,
}

/// Rows of the mu -> 0 continuation; mu strictly decreasing.
#[derive(Debug, Clone)]
pub struct ContinuationTrace {
    pub kind: SolveKind,
    pub rows: Vec<TraceRow>,
    pub fields: Vec<RadialField>,
    /// Set when any row saw lambda >= 0.
    pub lambda_flag: bool,
    /// The full mountain-pass report of the first row (path artifacts).
    pub first_mp: Option<crate::mpass::MpReport>,
}

impl ContinuationTrace {
    pub fn final_field(&self) -> Option<&RadialField> {
        self.fields.last()
    }
}

fn row_from_report(rep: &SolveReport, p: f64, warm_disabled: bool) -> TraceRow {
    let b = breakdown(&rep.field, p);
    TraceRow {
        mu: rep.mu,
        j_mu: rep.j_value,
        mu_grad4: rep.mu * b.grad4,
        lambda: rep.lambda,
        mass: b.mass,
        grad2: b.grad2,
        quasi: b.quasi,
        pot: b.pot,
        status: rep.status,
        warm_start_disabled: warm_disabled,
        lambda_nonnegative: rep.lambda >= 0.0,
    }
}

/// Warm-started solves down the mu ladder. Each row starts from the previous
/// solution unless the cold default start has lower J_mu, in which case the
/// warm start is disabled for that row (and flagged). Row failure truncates
/// the trace; lambda >= 0 is flagged, not fatal.
#[allow(clippy::too_many_arguments)]
pub fn continue_solve(
    kind: SolveKind,
    params: &Params,
    schedule: &[f64],
    cfg: &FlowConfig,
    grid: &Arc<RadialGrid>,
    mp_cfg: &MpassConfig,
    k0: Option<f64>,
    anchor: Option<(&RadialField, f64)>,
) -> Result<ContinuationTrace> {
    if schedule.is_empty() {
        return Err(Error::InvalidConfig("empty mu schedule".into()));
    }
    let mut rows = Vec::new();
    let mut fields: Vec<RadialField> = Vec::new();
    let mut lambda_flag = false;
    let mut prev: Option<RadialField> = None;
    let mut first_mp = None;

    for (i, &mu) in schedule.iter().enumerate() {
        let p_mu = params.with_mu(mu);
        let mut warm_disabled = false;

        let report = match kind {
            SolveKind::GlobalMin => {
                let cold = default_global_init(grid, &p_mu)?;
                let start = match &prev {
                    Some(w) => {
                        let jw = j_mu(&breakdown(w, p_mu.p), mu, p_mu.p);
                        let jc = j_mu(&breakdown(&cold, p_mu.p), mu, p_mu.p);
                        if jw <= jc {
                            w.clone()
                        } else {
                            warm_disabled = true;
                            cold
                        }
                    }
                    None => cold,
                };
                descend(&start, &p_mu, cfg)?
            }
            SolveKind::LocalMin => {
                let k0 = k0.ok_or_else(|| {
                    Error::InvalidConfig("local-min continuation needs a calibrated k0".into())
                })?;
                match &prev {
                    Some(w) => {
                        // warm start: plain barrier-guarded descent from the
                        // previous solution
                        let rep = minimize_local(&p_mu, k0, cfg, grid, Some((w, p_mu.c)))?;
                        rep
                    }
                    None => {
                        let anchor = anchor.ok_or_else(|| {
                            Error::InvalidConfig(
                                "local-min continuation needs the c(p,N) anchor minimizer".into(),
                            )
                        })?;
                        minimize_local(&p_mu, k0, cfg, grid, Some(anchor))?
                    }
                }
            }
            SolveKind::MountainPass => {
                if let Some(w) = &prev {
                    // warm start: refine the previous peak at the new mu
                    refine_peak(w, &p_mu, cfg, f64::NEG_INFINITY)?
                } else {
                    let k0 = k0.ok_or_else(|| {
                        Error::InvalidConfig("mountain-pass continuation needs k0".into())
                    })?;
                    let anchor = anchor.ok_or_else(|| {
                        Error::InvalidConfig("mountain-pass continuation needs an anchor".into())
                    })?;
                    let mp = mountain_pass(grid, &p_mu, k0, anchor.0, anchor.1, cfg, mp_cfg)?;
                    let peak = mp.peak.clone();
                    first_mp = Some(mp);
                    peak
                }
            }
        };

        let row = row_from_report(&report, params.p, warm_disabled);
        lambda_flag |= row.lambda_nonnegative;
        let failed = report.status != SolveStatus::Converged
            || report.classification == Classification::Failed;
        rows.push(row);
        if failed {
            break;
        }
        fields.push(report.field.clone());
        prev = Some(report.field);
        let _ = i;
    }
    Ok(ContinuationTrace { kind, rows, fields, lambda_flag, first_mp })
}

/// Evaluate the final field of a converged trace at mu = 0 and check it
/// against the theorem's table: lambda < 0, Schwarz-symmetric profile, and
/// the J-sign column determined by where c sits relative to c(p,N) (when the
/// estimate is supplied). Violations are reported as errors, not silently.
pub fn classify_limit(
    trace: &ContinuationTrace,
    params: &Params,
    cpn_estimate: Option<f64>,
) -> Result<SolveReport> {
    let Some(field) = trace.final_field() else {
        return Err(Error::Convergence("trace has no converged rows".into()));
    };
    let last = trace.rows.last().unwrap();
    if last.status != SolveStatus::Converged {
        return Err(Error::Convergence("trace truncated before mu_min".into()));
    }
    let b = breakdown(field, params.p);
    let lambda = multiplier_of(&b, 0.0)?;
    let j0 = j_mu(&b, 0.0, params.p);
    let q0 = q_mu(&b, 0.0, params.p, params.dim);
    let (pl, pr) = perturbed_pohozaev_sides(&b, lambda, 0.0, params.p, params.dim);

    if lambda >= 0.0 {
        return Err(Error::Misclassification(format!(
            "limit multiplier must be negative, got {lambda:.4e}"
        )));
    }
    if !field.is_non_increasing(1e-8 * field.max_abs()) {
        return Err(Error::Misclassification(
            "limit profile is not non-increasing (Schwarz symmetry violated)".into(),
        ));
    }
    if let Some(cpn) = cpn_estimate {
        let margin = 1e-6 * j0.abs().max(1.0);
        let ok = match trace.kind {
            SolveKind::GlobalMin => {
                if params.c > 1.02 * cpn {
                    j0 < margin
                } else if params.c < 0.98 * cpn {
                    j0 > -margin
                } else {
                    j0.abs() < 0.05 * b.grad2.max(1.0)
                }
            }
            SolveKind::LocalMin => j0 > -margin && params.c <= 1.02 * cpn,
            SolveKind::MountainPass => j0 > 0.0,
        };
        if !ok {
            return Err(Error::Misclassification(format!(
                "J sign table violated: kind {:?}, c = {:.4e}, c(p,N) ~ {cpn:.4e}, J = {j0:.4e}",
                trace.kind, params.c
            )));
        }
    }
    let classification = match trace.kind {
        SolveKind::GlobalMin => Classification::GlobalMin,
        SolveKind::LocalMin => Classification::LocalMin,
        SolveKind::MountainPass => Classification::MountainPass,
    };
    let grad_norm = crate::model::operator::residual_norm(&crate::model::euler_lagrange(
        field, lambda, 0.0, params.p,
    )) / b.mass.sqrt();
    Ok(SolveReport {
        field: field.clone(),
        lambda,
        j_value: j0,
        q_value: q0,
        pohozaev_residual: crate::flow::rel_gap(pl, pr),
        grad_norm,
        iters: trace.rows.len(),
        classification,
        status: SolveStatus::Converged,
        mu: 0.0,
        c: params.c,
    })
}
