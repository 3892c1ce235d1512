//! Constrained minimization on the mass sphere: global minimizers (m(c)),
//! local minimizers outside the barrier set, the scale-to-zero-Q dilation
//! move, k0 calibration, and the c(p,N)/c_N threshold estimators.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::energy::{
    barrier_value, breakdown, dilation_profile, j_mu, multiplier_of,
    perturbed_pohozaev_sides, q_mu,
};
use crate::model::field::{gaussian_bump, RadialField};
use crate::model::grid::RadialGrid;
use crate::model::operator::{euler_lagrange, newton_polish, residual_norm};
use crate::model::params::{Params, Regime};

/// Step control and tolerances for the constrained descent.
#[derive(Debug, Clone)]
pub struct FlowConfig {
    /// Initial step size (adapts during the run).
    pub tau: f64,
    pub max_iters: usize,
    /// Relative stationarity: |projected gradient|_L2 / |u|_L2.
    pub grad_tol: f64,
    /// |Q_mu| tolerance relative to grad2 + quasi.
    pub q_tol: f64,
    /// Backtracking reduction factor.
    pub backtrack: f64,
    /// Restarts before declaring a boundary trap.
    pub restarts: usize,
    pub seed: u64,
    /// Newton-polish converged descents to machine stationarity.
    pub polish: bool,
    /// Apply a scale-to-zero-Q move every k iterations (0 = off).
    pub q_accel_every: usize,
    /// Apply the decreasing-rearrangement safeguard every k iterations
    /// (0 = off). Diagnostic only: the move is taken when it does not
    /// increase J_mu.
    pub rearrange_every: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            tau: 0.1,
            max_iters: 20_000,
            grad_tol: 1e-7,
            q_tol: 1e-3,
            backtrack: 0.5,
            restarts: 6,
            seed: 12345,
            polish: true,
            q_accel_every: 25,
            rearrange_every: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    GlobalMin,
    LocalMin,
    MountainPass,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Converged,
    /// J_mu fell below the divergence floor (expected for p > 3 + 4/N).
    Unbounded,
    /// Backtracking stalled before reaching the tolerance.
    Stalled,
    MaxIters,
    /// Descent pinned to the barrier boundary beyond the restart budget.
    BoundaryTrap,
}

/// Converged field with its multiplier, residuals and classification.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub field: RadialField,
    pub lambda: f64,
    pub j_value: f64,
    pub q_value: f64,
    /// Relative residual of the mu-perturbed Pohozaev identity at
    /// beta = lambda.
    pub pohozaev_residual: f64,
    /// Relative stationarity at exit.
    pub grad_norm: f64,
    pub iters: usize,
    pub classification: Classification,
    pub status: SolveStatus,
    pub mu: f64,
    pub c: f64,
}

const EPS_FLOOR: f64 = 1e-12;

pub(crate) fn rel_gap(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(EPS_FLOOR)
}

fn make_report(
    u: RadialField,
    params: &Params,
    iters: usize,
    status: SolveStatus,
    classification: Classification,
) -> SolveReport {
    let b = breakdown(&u, params.p);
    let lambda = multiplier_of(&b, params.mu).unwrap_or(f64::NAN);
    let j = j_mu(&b, params.mu, params.p);
    let q = q_mu(&b, params.mu, params.p, params.dim);
    let (pl, pr) = perturbed_pohozaev_sides(&b, lambda, params.mu, params.p, params.dim);
    let grad_norm = if b.mass > 0.0 && lambda.is_finite() {
        residual_norm(&euler_lagrange(&u, lambda, params.mu, params.p)) / b.mass.sqrt()
    } else {
        f64::NAN
    };
    SolveReport {
        field: u,
        lambda,
        j_value: j,
        q_value: q,
        pohozaev_residual: rel_gap(pl, pr),
        grad_norm,
        iters,
        classification,
        status,
        mu: params.mu,
        c: params.c,
    }
}

/// Tangential gradient on the mass sphere (multiplier chosen so that
/// <g, u>_{L2} = 0 identically).
pub fn project_gradient(u: &RadialField, mu: f64, p: f64) -> Result<RadialField> {
    crate::model::operator::project_gradient(u, mu, p)
}

/// The dilation factor t* nearest 1 with Q_mu(u^{t*}) = 0, searching t > 1
/// when Q < 0 and t < 1 when Q > 0, on the closed-form dilation profile.
pub fn zero_q_dilation_factor(u: &RadialField, mu: f64, p: f64) -> Result<f64> {
    let dim = u.grid().dim();
    let b = breakdown(u, p);
    if b.mass <= 0.0 {
        return Err(Error::InvalidArgument("scale_to_zero_q needs a nonzero field".into()));
    }
    let q0 = q_mu(&b, mu, p, dim);
    let scale = (b.grad2 + b.quasi).max(EPS_FLOOR);
    if q0.abs() <= 1e-14 * scale {
        return Ok(1.0);
    }
    let qt = |t: f64| dilation_profile(&b, mu, p, dim, t).1;
    let upward = q0 < 0.0;
    let factor: f64 = if upward { 1.05 } else { 1.0 / 1.05 };
    let mut t_prev = 1.0f64;
    let mut q_prev = q0;
    let mut t = factor;
    let mut bracket = None;
    while (1e-6..=1e6).contains(&t) {
        let q = qt(t);
        if q == 0.0 {
            bracket = Some((t, t));
            break;
        }
        if (q > 0.0) != (q_prev > 0.0) {
            bracket = Some((t_prev.min(t), t_prev.max(t)));
            break;
        }
        t_prev = t;
        q_prev = q;
        t *= factor;
    }
    let Some((mut lo, mut hi)) = bracket else {
        return Err(Error::NoRoot(format!(
            "Q_mu(u^t) has no sign change for t in [1e-6, 1e6] (Q(u) = {q0:.3e})"
        )));
    };
    let q_lo_positive = qt(lo) > 0.0;
    for _ in 0..200 {
        if hi - lo <= 1e-14 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if (qt(mid) > 0.0) == q_lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Dilate u to the nearest zero of t -> Q_mu(u^t). The root is exact in the
/// closed form; the returned field is mass-exact and carries only the O(h^2)
/// resampling error in its own Q value.
pub fn scale_to_zero_q(u: &RadialField, mu: f64, p: f64) -> Result<RadialField> {
    let t = zero_q_dilation_factor(u, mu, p)?;
    if t == 1.0 {
        return Ok(u.clone());
    }
    u.dilate(t)
}

enum StepOutcome {
    Converged(usize),
    Stalled(usize),
    MaxIters,
    Unbounded(usize),
    BarrierPinned(usize),
}

/// Core backtracking descent on J_mu restricted to the mass sphere. A step
/// entering the barrier (when `barrier_floor` is set) is rejected like an
/// energy increase. Mass is renormalized exactly every step. When the
/// landscape flattens, a Newton polish is attempted opportunistically; a
/// polish that lowers (or preserves) the energy ends the loop early.
fn descend_loop(
    u: &mut RadialField,
    params: &Params,
    cfg: &FlowConfig,
    tol_rel: f64,
    barrier_floor: Option<f64>,
) -> Result<StepOutcome> {
    let (mu, p, c) = (params.mu, params.p, params.c);
    let sqrt_c = c.sqrt();
    let mut tau = cfg.tau;
    let mut j = j_mu(&breakdown(u, p), mu, p);
    let mut barrier_rejections = 0usize;

    for it in 0..cfg.max_iters {
        if j < -1e12 {
            return Ok(StepOutcome::Unbounded(it));
        }
        let b = breakdown(u, p);
        let lam = multiplier_of(&b, mu)?;
        let g = euler_lagrange(u, lam, mu, p);
        let gn = residual_norm(&g);
        let gn_rel = gn / sqrt_c;
        if gn_rel < tol_rel {
            return Ok(StepOutcome::Converged(it));
        }

        if cfg.polish && it > 0 && it % 250 == 0 && gn_rel < 3e-2 {
            if let Ok(out) = newton_polish(u, mu, p, c, 1e-10, 40) {
                if out.converged {
                    let jc = j_mu(&breakdown(&out.field, p), mu, p);
                    let ok_barrier =
                        barrier_floor.map_or(true, |k0| barrier_value(&out.field) > k0);
                    if ok_barrier && jc <= j + 1e-9 * j.abs().max(1.0) {
                        *u = out.field;
                        return Ok(StepOutcome::Converged(it));
                    }
                }
            }
        }

        // optional symmetrization safeguard, taken only when not uphill
        if cfg.rearrange_every > 0 && it > 0 && it % cfg.rearrange_every == 0 {
            let cand = u.rearrange_decreasing().renormalize_mass(c)?;
            let jc = j_mu(&breakdown(&cand, p), mu, p);
            let ok_barrier = barrier_floor.map_or(true, |k0| barrier_value(&cand) > k0);
            if jc <= j && ok_barrier {
                *u = cand;
                j = jc;
            }
        }

        // occasional dilation move toward Q = 0 (never into the barrier)
        if cfg.q_accel_every > 0 && it > 0 && it % cfg.q_accel_every == 0 {
            if let Ok(cand) = scale_to_zero_q(u, mu, p) {
                let jc = j_mu(&breakdown(&cand, p), mu, p);
                let ok_barrier = barrier_floor.map_or(true, |k0| barrier_value(&cand) > k0);
                if jc <= j && ok_barrier {
                    *u = cand;
                    j = jc;
                    continue;
                }
            }
        }

        let gn2 = gn * gn;
        let mut accepted = false;
        for _ in 0..80 {
            let cand = u.axpy(-tau, &g)?.renormalize_mass(c)?;
            if let Some(k0) = barrier_floor {
                if barrier_value(&cand) <= k0 {
                    tau *= cfg.backtrack;
                    barrier_rejections += 1;
                    if barrier_rejections > cfg.restarts * 400 {
                        return Ok(StepOutcome::BarrierPinned(it));
                    }
                    continue;
                }
            }
            let jc = j_mu(&breakdown(&cand, p), mu, p);
            if jc <= j - 1e-4 * tau * gn2 {
                *u = cand;
                j = jc;
                tau = (tau * 1.3).min(10.0);
                accepted = true;
                break;
            }
            tau *= cfg.backtrack;
            if tau < 1e-16 {
                break;
            }
        }
        if !accepted {
            return Ok(StepOutcome::Stalled(it));
        }
    }
    Ok(StepOutcome::MaxIters)
}

/// Width-optimized Gaussian start: best J_mu over a sigma ladder, then
/// dilated toward the energy-minimizing zero of Q when one exists.
pub fn default_global_init(grid: &Arc<RadialGrid>, params: &Params) -> Result<RadialField> {
    let r = grid.r_max();
    let mut best: Option<(f64, RadialField)> = None;
    for k in 0..14 {
        let sigma = r / 40.0 * (40.0f64 / 3.0).powf(k as f64 / 13.0);
        let u = gaussian_bump(grid, sigma, params.c)?;
        let j = j_mu(&breakdown(&u, params.p), params.mu, params.p);
        if best.as_ref().map_or(true, |(jb, _)| j < *jb) {
            best = Some((j, u));
        }
    }
    let (_, u) = best.unwrap();
    // move along the dilation fiber to the lowest-energy Q = 0 point
    let b = breakdown(&u, params.p);
    let mut t_best = 1.0;
    let mut j_best = f64::INFINITY;
    for k in 0..=240 {
        let t = 1e-3 * (1e6f64).powf(k as f64 / 240.0);
        let (jt, _) = dilation_profile(&b, params.mu, params.p, params.dim, t);
        if jt < j_best {
            j_best = jt;
            t_best = t;
        }
    }
    let u = if t_best != 1.0 { u.dilate(t_best)? } else { u };
    match scale_to_zero_q(&u, params.mu, params.p) {
        Ok(v) => Ok(v),
        Err(_) => Ok(u),
    }
}

/// Global minimization of J_mu on the mass sphere by projected descent with
/// backtracking, a final Newton polish, and mass exactness at every iterate.
pub fn descend(u0: &RadialField, params: &Params, cfg: &FlowConfig) -> Result<SolveReport> {
    let mut u = u0.renormalize_mass(params.c)?;
    let switch_tol = if cfg.polish { cfg.grad_tol.max(1e-6) } else { cfg.grad_tol };
    let outcome = descend_loop(&mut u, params, cfg, switch_tol, None)?;
    finish_descent(u, params, cfg, outcome, None, Classification::GlobalMin)
}

fn finish_descent(
    mut u: RadialField,
    params: &Params,
    cfg: &FlowConfig,
    outcome: StepOutcome,
    barrier_floor: Option<f64>,
    kind: Classification,
) -> Result<SolveReport> {
    let (iters, status) = match outcome {
        StepOutcome::Converged(it) => (it, SolveStatus::Converged),
        StepOutcome::Stalled(it) => (it, SolveStatus::Stalled),
        StepOutcome::MaxIters => (cfg.max_iters, SolveStatus::MaxIters),
        StepOutcome::Unbounded(it) => {
            return Ok(make_report(u, params, it, SolveStatus::Unbounded, Classification::Failed));
        }
        StepOutcome::BarrierPinned(it) => {
            return Ok(make_report(u, params, it, SolveStatus::BoundaryTrap, Classification::Failed));
        }
    };

    let mut status = status;
    // A stalled line search very near stationarity still counts as converged
    // once the polish below succeeds.
    if cfg.polish {
        if let Ok(out) = newton_polish(&u, params.mu, params.p, params.c, 1e-10, 60) {
            if out.converged {
                let ok_barrier =
                    barrier_floor.map_or(true, |k0| barrier_value(&out.field) > k0);
                let j_old = j_mu(&breakdown(&u, params.p), params.mu, params.p);
                let j_new = j_mu(&breakdown(&out.field, params.p), params.mu, params.p);
                if ok_barrier && j_new <= j_old + 1e-6 * j_old.abs().max(1.0) {
                    u = out.field;
                    status = SolveStatus::Converged;
                }
            }
        }
    }
    let report = make_report(u, params, iters, status, kind);
    if report.status == SolveStatus::Converged && report.grad_norm < cfg.grad_tol.max(1e-6) {
        Ok(report)
    } else if report.status == SolveStatus::Converged {
        // polish off or failed and descent exited early
        Ok(SolveReport { status: SolveStatus::Stalled, classification: Classification::Failed, ..report })
    } else {
        Ok(SolveReport { classification: Classification::Failed, ..report })
    }
}

/// Global minimization from the default start.
pub fn solve_global(grid: &Arc<RadialGrid>, params: &Params, cfg: &FlowConfig) -> Result<SolveReport> {
    let u0 = default_global_init(grid, params)?;
    descend(&u0, params, cfg)
}

/// Global minimization with the automatic R_max doubling guard: if the
/// converged tail value exceeds 1e-8 max|u|, the domain is doubled once
/// (same spacing) and the solve repeated from the resampled field.
pub fn solve_with_tail_guard(
    grid: &Arc<RadialGrid>,
    params: &Params,
    cfg: &FlowConfig,
) -> Result<SolveReport> {
    let rep = solve_global(grid, params, cfg)?;
    if rep.status != SolveStatus::Converged {
        return Ok(rep);
    }
    let vals = rep.field.values();
    let tail_start = vals.len().saturating_sub(vals.len() / 50 + 2);
    let tail_max = vals[tail_start..].iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if tail_max <= 1e-8 * rep.field.max_abs() {
        return Ok(rep);
    }
    let wide = RadialGrid::build(grid.dim(), 2.0 * grid.r_max(), 2 * grid.intervals())?;
    let resampled = RadialField::from_fn(wide, |r| rep.field.interp(r))
        .renormalize_mass(params.c)?;
    descend(&resampled, params, cfg)
}

/// Probe family for the barrier estimates: sums of centered positive bumps,
/// mass-normalized, which stay Schwarz symmetric.
fn probe_bump(grid: &Arc<RadialGrid>, c: f64, rng: &mut ChaCha8Rng) -> Result<RadialField> {
    let r_max = grid.r_max();
    let n_bumps = rng.gen_range(1..=3);
    let mut widths = Vec::new();
    let mut amps = Vec::new();
    let mut cosine = Vec::new();
    for _ in 0..n_bumps {
        let log_lo = (r_max / 50.0f64).ln();
        let log_hi = (r_max / 2.5f64).ln();
        widths.push((log_lo + (log_hi - log_lo) * rng.gen::<f64>()).exp());
        amps.push(0.2 + rng.gen::<f64>());
        cosine.push(rng.gen::<f64>() < 0.5);
    }
    let u = RadialField::from_fn(grid.clone(), |r| {
        widths
            .iter()
            .zip(&amps)
            .zip(&cosine)
            .map(|((&s, &a), &cos_shape)| {
                if cos_shape {
                    // compact raised-cosine: no tail kink when spread wide
                    let w = 2.5 * s;
                    if r < w {
                        a * 0.5 * (1.0 + (std::f64::consts::PI * r / w).cos())
                    } else {
                        0.0
                    }
                } else {
                    a * (-(r / s) * (r / s)).exp()
                }
            })
            .sum()
    });
    u.renormalize_mass(c)
}

/// Dilate a probe so its barrier value lands at the target (closed form in
/// the breakdown: b(u^t) = t^2 grad2 + t^{N+2} quasi is strictly increasing).
fn dilate_to_barrier(u: &RadialField, target: f64) -> Result<RadialField> {
    let b = breakdown(u, 2.0);
    let dim = u.grid().dim() as f64;
    let bar = |t: f64| t * t * b.grad2 + t.powf(dim + 2.0) * b.quasi;
    let mut lo = 1e-9;
    let mut hi = 1.0;
    while bar(hi) < target && hi < 1e6 {
        hi *= 2.0;
    }
    if bar(hi) < target {
        return Err(Error::NoRoot("barrier target unreachable by dilation".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bar(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    u.dilate(0.5 * (lo + hi))
}

/// Generate `count` probes with barrier values in [0.9k, 1.1k].
pub fn barrier_ring_probes(
    grid: &Arc<RadialGrid>,
    params: &Params,
    k: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<RadialField>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probes = Vec::with_capacity(count);
    let mut guard = 0;
    while probes.len() < count && guard < count * 20 {
        guard += 1;
        let u = probe_bump(grid, params.c, &mut rng)?;
        let target = k * (0.9 + 0.2 * rng.gen::<f64>());
        if let Ok(v) = dilate_to_barrier(&u, target) {
            let bv = barrier_value(&v);
            if (0.9 * k..=1.1 * k).contains(&bv) {
                probes.push(v);
            }
        }
    }
    if probes.len() < count {
        return Err(Error::Calibration("could not generate enough barrier probes".into()));
    }
    Ok(probes)
}

/// Largest k on a geometric ladder such that J_mu >= k/4 and Q_mu >= k/4 on
/// all probes with barrier value near k, halved once for safety.
///
/// The pass property is monotone (it fails only once the potential term can
/// beat the barrier), so the ladder walks up from k = 1 while rings pass and
/// down while they fail. A probe-generation failure while walking up means
/// the grid cannot certify larger rings; the last certified k wins. While
/// walking down it means the grid's spread floor was hit, which is fatal.
pub fn calibrate_k0(
    grid: &Arc<RadialGrid>,
    params: &Params,
    probes: usize,
    cfg: &FlowConfig,
) -> Result<f64> {
    if params.p <= Params::p_mass_critical(params.dim) {
        return Err(Error::InvalidConfig(
            "barrier calibration needs the regime p > 1 + 4/N".into(),
        ));
    }
    let ladder_ok = |k: f64, seed: u64| -> Result<bool> {
        let ps = barrier_ring_probes(grid, params, k, probes, seed)?;
        Ok(ps.par_iter().all(|u| {
            let b = breakdown(u, params.p);
            let j = j_mu(&b, params.mu, params.p);
            let q = q_mu(&b, params.mu, params.p, params.dim);
            j >= 0.25 * k && q >= 0.25 * k
        }))
    };
    // find a probeable starting ring: masses large relative to the grid have
    // a spread floor below which no field at mass c exists
    let mut k = 1.0f64;
    let mut first = None;
    for j in 0..60 {
        match ladder_ok(k, cfg.seed.wrapping_add(1000 + j as u64)) {
            Ok(b) => {
                first = Some(b);
                break;
            }
            Err(_) => k *= 2.0,
        }
    }
    let Some(first) = first else {
        return Err(Error::Calibration("no probeable barrier ring on this grid".into()));
    };
    let step = std::f64::consts::SQRT_2;
    if first {
        for j in 1..90 {
            match ladder_ok(step * k, cfg.seed.wrapping_add(j as u64)) {
                Ok(true) => k *= step,
                Ok(false) => break,
                Err(_) => break, // resolution limit: keep the last certified ring
            }
        }
        Ok(0.5 * k)
    } else {
        for j in 1..90 {
            k /= step;
            if ladder_ok(k, cfg.seed.wrapping_add(j as u64))? {
                return Ok(0.5 * k);
            }
        }
        Err(Error::Calibration("no admissible k0 found on the geometric ladder".into()))
    }
}

/// Local minimization restricted to the complement of the barrier set:
/// steps with barrier value <= k0 are rejected and the step halved. The
/// initial guess is the sqrt(t)-shrunk c(p,N) minimizer when provided, else
/// a width-optimized bump dilated outside the barrier.
pub fn minimize_local(
    params: &Params,
    k0: f64,
    cfg: &FlowConfig,
    grid: &Arc<RadialGrid>,
    cpn_minimizer: Option<(&RadialField, f64)>,
) -> Result<SolveReport> {
    let mut init = match cpn_minimizer {
        Some((u_star, c_star)) if params.c <= c_star => {
            let t = params.c / c_star;
            u_star.scaled(t.sqrt()).renormalize_mass(params.c)?
        }
        _ => default_global_init(grid, params)?,
    };
    if barrier_value(&init) <= k0 {
        init = dilate_to_barrier(&init, 2.0 * k0)?;
    }
    // Q = 0 pre-step, rejected if it would enter the barrier
    if let Ok(q0) = scale_to_zero_q(&init, params.mu, params.p) {
        if barrier_value(&q0) > k0 {
            init = q0;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x10ca1);
    let mut attempt = init;
    for restart in 0..=cfg.restarts {
        let mut u = attempt.clone();
        let outcome = descend_loop(&mut u, params, cfg, cfg.grad_tol.max(1e-6).max(cfg.grad_tol), Some(k0))?;
        let pinned = matches!(outcome, StepOutcome::BarrierPinned(_));
        let report = finish_descent(u, params, cfg, outcome, Some(k0), Classification::LocalMin)?;
        if report.status == SolveStatus::Converged {
            let bar = barrier_value(&report.field);
            if bar > k0 && report.lambda < 0.0 && report.j_value >= -1e-9 * report.j_value.abs().max(1.0) {
                return Ok(report);
            }
        }
        if restart == cfg.restarts {
            if pinned {
                return Err(Error::Convergence(format!(
                    "local minimization pinned to the barrier boundary after {} restarts",
                    cfg.restarts
                )));
            }
            return Ok(SolveReport { classification: Classification::Failed, ..report });
        }
        // perturb the start: small dilation jitter away from the barrier
        let t = 1.1 + 0.4 * rng.gen::<f64>();
        attempt = attempt.dilate(t)?;
    }
    unreachable!()
}

/// Best-found m(c) value at one mass (descent from the default start).
fn m_of_c(grid: &Arc<RadialGrid>, params: &Params, cfg: &FlowConfig) -> Result<SolveReport> {
    solve_global(grid, params, cfg)
}

/// Classify c against the threshold: true when the found minimum is
/// decisively negative (below -10 grad_tol).
fn m_negative(rep: &SolveReport, cfg: &FlowConfig) -> bool {
    rep.status == SolveStatus::Unbounded || rep.j_value < -10.0 * cfg.grad_tol
}

/// Bisection estimate of c(p,N) = inf{c : m(c) < 0} to 1% relative width.
///
/// Each probe combines a cold start with a warm start from the localized
/// minimizer of the nearest negative mass: near the threshold the dip is
/// shallow and cold descents can miss it, which would bias the estimate up.
pub fn estimate_cpn(
    p: f64,
    dim: usize,
    c_bracket: (f64, f64),
    cfg: &FlowConfig,
    grid: &Arc<RadialGrid>,
) -> Result<f64> {
    let lo_params = Params::new(dim, p, c_bracket.0, 0.0)?;
    Params::new(dim, p, c_bracket.1, 0.0)?;
    if lo_params.regime() != Regime::Intermediate && lo_params.regime() != Regime::DilationCritical {
        return Err(Error::InvalidConfig(
            "c(p,N) bisection needs p in (1 + 4/N, 3 + 4/N]".into(),
        ));
    }
    let mut warm: Option<RadialField> = None;
    let neg_at = |c: f64, warm: &mut Option<RadialField>| -> Result<bool> {
        let params = Params::new(dim, p, c, 0.0)?;
        if params.regime() == Regime::DilationCritical {
            return Ok(unbounded_by_dilation(grid, &params, cfg.seed));
        }
        let rep = m_of_c(grid, &params, cfg)?;
        let mut best = rep;
        if let Some(w) = warm.as_ref() {
            let start = w.renormalize_mass(c)?;
            let rewarm = descend(&start, &params, cfg)?;
            if rewarm.status == SolveStatus::Converged && rewarm.j_value < best.j_value {
                best = rewarm;
            }
        }
        let neg = m_negative(&best, cfg);
        if neg && best.status == SolveStatus::Converged {
            *warm = Some(best.field);
        }
        Ok(neg)
    };
    if neg_at(c_bracket.0, &mut warm)? {
        return Err(Error::Bracket(format!(
            "m(c) already negative at the low bracket end c = {}",
            c_bracket.0
        )));
    }
    if !neg_at(c_bracket.1, &mut warm)? {
        return Err(Error::Bracket(format!(
            "m(c) still zero at the high bracket end c = {}",
            c_bracket.1
        )));
    }
    let (mut lo, mut hi) = c_bracket;
    while (hi - lo) / hi > 0.01 {
        let mid = 0.5 * (lo + hi);
        if neg_at(mid, &mut warm)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Dilation-ladder unboundedness test: true when some probe drives
/// J(u^t) below -1e6. At p = 3 + 4/N this is the c_N classifier; for
/// p > 3 + 4/N it fires for every c.
pub fn unbounded_by_dilation(grid: &Arc<RadialGrid>, params: &Params, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd11a);
    let mut probes: Vec<RadialField> = Vec::new();
    for k in 0..16 {
        let sigma = grid.r_max() / 60.0 * (60.0f64 / 3.0).powf(k as f64 / 15.0);
        if let Ok(u) = gaussian_bump(grid, sigma, params.c) {
            probes.push(u);
        }
    }
    for _ in 0..8 {
        if let Ok(u) = probe_bump(grid, params.c, &mut rng) {
            probes.push(u);
        }
    }
    probes.iter().any(|u| {
        let b = breakdown(u, params.p);
        for k in 1..=80 {
            let t = 10f64.powf(k as f64 * 0.25);
            let (j, _) = dilation_profile(&b, params.mu, params.p, params.dim, t);
            if j < -1e6 {
                return true;
            }
        }
        false
    })
}

/// One row of a mass scan.
#[derive(Debug, Clone, Serialize)]
pub struct MassScanRow {
    pub c: f64,
    pub m: f64,
    pub lambda: f64,
    pub status: SolveStatus,
}

/// Rows of (c, m(c), multiplier, status); c strictly increasing.
#[derive(Debug, Clone, Serialize)]
pub struct MassScan {
    pub rows: Vec<MassScanRow>,
}

/// Per-c global minimization. For p >= 3 + 4/N, rows where a dilation ladder
/// certifies unboundedness carry the Unbounded marker instead of a solve.
pub fn mass_scan(
    p: f64,
    dim: usize,
    c_list: &[f64],
    cfg: &FlowConfig,
    grid: &Arc<RadialGrid>,
) -> Result<MassScan> {
    if c_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("mass scan needs strictly increasing c".into()));
    }
    let rows: Vec<MassScanRow> = c_list
        .par_iter()
        .map(|&c| {
            let params = match Params::new(dim, p, c, 0.0) {
                Ok(p) => p,
                Err(_) => {
                    return MassScanRow { c, m: f64::NAN, lambda: f64::NAN, status: SolveStatus::Stalled }
                }
            };
            let regime = params.regime();
            if matches!(regime, Regime::Supercritical | Regime::DilationCritical)
                && unbounded_by_dilation(grid, &params, cfg.seed)
            {
                return MassScanRow {
                    c,
                    m: f64::NEG_INFINITY,
                    lambda: f64::NAN,
                    status: SolveStatus::Unbounded,
                };
            }
            match m_of_c(grid, &params, cfg) {
                Ok(rep) => MassScanRow { c, m: rep.j_value, lambda: rep.lambda, status: rep.status },
                Err(_) => MassScanRow { c, m: f64::NAN, lambda: f64::NAN, status: SolveStatus::Stalled },
            }
        })
        .collect();
    Ok(MassScan { rows })
}

/// Localized minimizer slightly above the c(p,N) estimate, used as the u1
/// anchor of the two-solution geometry. Near the threshold the dip is
/// shallow and cold starts can land on the spread state, so the factor walks
/// up until a genuinely negative minimizer appears.
pub fn anchor_minimizer(
    grid: &Arc<RadialGrid>,
    p: f64,
    dim: usize,
    cpn_est: f64,
    mu: f64,
    cfg: &FlowConfig,
) -> Result<(RadialField, f64)> {
    let mut found: Option<(RadialField, f64)> = None;
    for factor in [1.05, 1.1, 1.2, 1.4] {
        let c_star = factor * cpn_est;
        let params = Params::new(dim, p, c_star, mu)?;
        let rep = solve_global(grid, &params, cfg)?;
        if rep.status == SolveStatus::Converged && rep.j_value < 0.0 && rep.lambda < 0.0 {
            found = Some((rep.field, c_star));
            break;
        }
    }
    let Some((mut field, mut c_star)) = found else {
        return Err(Error::Convergence(format!(
            "no negative-energy minimizer found above the c(p,N) estimate {cpn_est:.4e}"
        )));
    };
    // hug the threshold from above: warm-started descents keep finding the
    // localized dip where cold starts already miss it
    for factor in [1.04, 1.03, 1.02, 1.01] {
        let c_down = factor * cpn_est;
        if c_down >= c_star {
            continue;
        }
        let params = Params::new(dim, p, c_down, mu)?;
        let start = field.renormalize_mass(c_down)?;
        if let Ok(rep) = descend(&start, &params, cfg) {
            if rep.status == SolveStatus::Converged && rep.j_value < 0.0 && rep.lambda < 0.0 {
                field = rep.field;
                c_star = c_down;
            } else {
                break;
            }
        } else {
            break;
        }
    }
    Ok((field, c_star))
}

/// Probe the local-minimizer window empirically: walk c downward from the
/// c(p,N) estimate until the local solve first fails; returns the last
/// succeeding c and its report.
pub fn probe_local_window(
    p: f64,
    dim: usize,
    cpn: f64,
    k0: f64,
    cfg: &FlowConfig,
    grid: &Arc<RadialGrid>,
    cpn_minimizer: &RadialField,
    mu: f64,
    max_probes: usize,
) -> Option<(f64, SolveReport)> {
    let mut last = None;
    let mut frac = 0.98;
    for _ in 0..max_probes {
        let c = frac * cpn;
        let Ok(params) = Params::new(dim, p, c, mu) else { break };
        match minimize_local(&params, k0, cfg, grid, Some((cpn_minimizer, cpn))) {
            Ok(rep) if rep.classification == Classification::LocalMin => {
                last = Some((c, rep));
            }
            _ => break,
        }
        frac -= 0.05;
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::energy::barrier_value_of;
    use approx::assert_relative_eq;

    fn grid1d() -> Arc<RadialGrid> {
        RadialGrid::build(1, 24.0, 600).unwrap()
    }

    #[test]
    fn subcritical_1d_global_min() {
        // N=1, p=2 (< 5): m(c) < 0 with lambda < 0
        let grid = grid1d();
        let params = Params::new(1, 2.0, 1.0, 0.0).unwrap();
        let cfg = FlowConfig::default();
        let rep = solve_global(&grid, &params, &cfg).unwrap();
        assert_eq!(rep.status, SolveStatus::Converged);
        assert!(rep.j_value < 0.0, "m(c) should be negative, got {}", rep.j_value);
        assert!(rep.lambda < 0.0);
        assert_relative_eq!(rep.field.mass(), 1.0, max_relative = 1e-12);
        let b = breakdown(&rep.field, params.p);
        assert!(rep.q_value.abs() < cfg.q_tol * (b.grad2 + b.quasi));
    }

    #[test]
    fn descend_from_critical_point_is_noop() {
        let grid = grid1d();
        let params = Params::new(1, 2.0, 1.0, 0.0).unwrap();
        let cfg = FlowConfig::default();
        let rep = solve_global(&grid, &params, &cfg).unwrap();
        let again = descend(&rep.field, &params, &cfg).unwrap();
        assert_eq!(again.status, SolveStatus::Converged);
        assert!(again.iters == 0, "restart from a critical point should converge immediately");
    }

    #[test]
    fn scale_to_zero_q_contract() {
        // mass large enough that the dilation fiber has a zero of Q
        let grid = RadialGrid::build(3, 30.0, 1200).unwrap();
        let u = gaussian_bump(&grid, 3.0, 400.0).unwrap();
        let (mu, p) = (0.05, 3.0);
        // root-finder contract, exact in the closed form
        let t_star = zero_q_dilation_factor(&u, mu, p).unwrap();
        let b0 = breakdown(&u, p);
        let (_, q_closed) = dilation_profile(&b0, mu, p, 3, t_star);
        assert!(
            q_closed.abs() < 1e-8 * (b0.grad2 + b0.quasi),
            "closed-form Q at t* = {q_closed}"
        );
        let v = scale_to_zero_q(&u, mu, p).unwrap();
        let b = breakdown(&v, p);
        let q = q_mu(&b, mu, p, 3);
        assert!(q.abs() < 1e-3 * (b.grad2 + b.quasi), "resampled Q = {q}");
        assert_relative_eq!(v.mass(), u.mass(), max_relative = 1e-12);
        // already near Q=0: the correction factor collapses to 1
        let t_again = zero_q_dilation_factor(&v, mu, p).unwrap();
        assert!((t_again - 1.0).abs() < 1e-3, "t_again = {t_again}");
        // a low-mass fiber has no root: the no-root marker fires
        let small = gaussian_bump(&grid, 3.0, 1.0).unwrap();
        assert!(scale_to_zero_q(&small, mu, p).is_err());
    }

    #[test]
    fn scale_down_from_negative_q_lowers_j() {
        // Q < 0 start: t* > 1 and J decreases (the minimizing-sequence
        // direction of the dilation correction).
        let grid = RadialGrid::build(3, 30.0, 1200).unwrap();
        let params = Params::new(3, 3.0, 400.0, 0.1).unwrap();
        let u = gaussian_bump(&grid, 3.0, params.c).unwrap();
        let b = breakdown(&u, params.p);
        let mut t_neg = None;
        for k in 0..80 {
            let t = (1.05f64).powi(-k);
            let (_, q) = dilation_profile(&b, params.mu, params.p, 3, t);
            if q < 0.0 {
                t_neg = Some(t);
                break;
            }
        }
        let t_neg = t_neg.expect("some dilation has Q < 0");
        let w = u.dilate(t_neg).unwrap();
        let bw = breakdown(&w, params.p);
        assert!(q_mu(&bw, params.mu, params.p, 3) < 0.0);
        let jw = j_mu(&bw, params.mu, params.p);
        let z = scale_to_zero_q(&w, params.mu, params.p).unwrap();
        let jz = j_mu(&breakdown(&z, params.p), params.mu, params.p);
        assert!(jz <= jw + 1e-12, "J must not increase: {jz} vs {jw}");
    }

    #[test]
    fn supercritical_dilation_unbounded() {
        let grid = RadialGrid::build(3, 16.0, 400).unwrap();
        let params = Params::new(3, 5.0, 1.0, 0.0).unwrap();
        assert!(unbounded_by_dilation(&grid, &params, 7));
    }

    #[test]
    fn mass_scan_subcritical_all_negative() {
        let grid = grid1d();
        let cfg = FlowConfig { max_iters: 6000, ..FlowConfig::default() };
        let scan = mass_scan(2.0, 1, &[0.5, 1.0, 2.0], &cfg, &grid).unwrap();
        for row in &scan.rows {
            assert_eq!(row.status, SolveStatus::Converged);
            assert!(row.m < 0.0, "m({}) = {}", row.c, row.m);
            assert!(row.lambda < 0.0);
        }
        assert!(scan.rows.windows(2).all(|w| w[0].c < w[1].c));
    }

    #[test]
    fn mass_scan_supercritical_all_unbounded() {
        let grid = RadialGrid::build(3, 16.0, 400).unwrap();
        let cfg = FlowConfig::default();
        let scan = mass_scan(5.0, 3, &[0.5, 1.0], &cfg, &grid).unwrap();
        for row in &scan.rows {
            assert_eq!(row.status, SolveStatus::Unbounded);
        }
    }

    #[test]
    fn barrier_probes_in_ring() {
        let grid = RadialGrid::build(3, 30.0, 600).unwrap();
        let params = Params::new(3, 3.0, 1.0, 0.05).unwrap();
        let probes = barrier_ring_probes(&grid, &params, 0.05, 25, 42).unwrap();
        assert_eq!(probes.len(), 25);
        for u in &probes {
            let b = barrier_value(u);
            assert!((0.045..=0.055).contains(&b), "barrier {b} outside ring");
            assert_relative_eq!(u.mass(), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn supercritical_descent_reports_unbounded() {
        // mu = 0, p > 3 + 4/N: descent dives and the divergence marker fires
        // (the mass must be large enough that the grid-collapsed state sits
        // below the marker threshold)
        let grid = RadialGrid::build(3, 16.0, 400).unwrap();
        let params = Params::new(3, 5.0, 100.0, 0.0).unwrap();
        let cfg = FlowConfig { polish: false, ..FlowConfig::default() };
        let u0 = gaussian_bump(&grid, 0.5, 100.0).unwrap();
        let rep = descend(&u0, &params, &cfg).unwrap();
        assert_eq!(rep.status, SolveStatus::Unbounded);
        assert_eq!(rep.classification, Classification::Failed);
    }

    #[test]
    fn dilation_critical_threshold() {
        // p = 3 + 4/N at N = 1: m(c) = 0 below c_N, unbounded above, and the
        // bisection lands between the probed sides.
        let grid = RadialGrid::build(1, 24.0, 600).unwrap();
        let cfg = FlowConfig::default();
        let cn = estimate_cpn(7.0, 1, (0.25, 32.0), &cfg, &grid).unwrap();
        assert!(cn > 2.0 && cn < 4.0, "c_N estimate {cn}");
        let scan = mass_scan(7.0, 1, &[0.5 * cn, 2.0 * cn], &cfg, &grid).unwrap();
        assert_eq!(scan.rows[0].status, SolveStatus::Converged);
        assert!(scan.rows[0].m.abs() < 0.05, "m below c_N should sit near zero");
        assert_eq!(scan.rows[1].status, SolveStatus::Unbounded);
    }

    #[test]
    fn x_norm_bounded_along_descent() {
        // bounded J_mu descent keeps the X norm bounded
        let grid = grid1d();
        let params = Params::new(1, 2.0, 1.0, 0.1).unwrap();
        let u0 = default_global_init(&grid, &params).unwrap();
        let mut u = u0;
        let mut max_x: f64 = 0.0;
        for _ in 0..300 {
            max_x = max_x.max(u.x_norm());
            let g = project_gradient(&u, params.mu, params.p).unwrap();
            u = u.axpy(-0.02, &g).unwrap().renormalize_mass(1.0).unwrap();
        }
        let final_x = u.x_norm();
        assert!(max_x.is_finite() && max_x < 50.0 * final_x, "X norm blew up: {max_x} vs {final_x}");
    }

    #[test]
    fn rearrangement_safeguard_does_not_hurt() {
        let grid = grid1d();
        let params = Params::new(1, 2.0, 1.0, 0.0).unwrap();
        let cfg = FlowConfig { rearrange_every: 10, max_iters: 6000, ..FlowConfig::default() };
        let rep = solve_global(&grid, &params, &cfg).unwrap();
        assert_eq!(rep.status, SolveStatus::Converged);
        assert!(rep.j_value < 0.0 && rep.lambda < 0.0);
        assert!(rep.field.is_non_increasing(1e-9 * rep.field.max_abs()));
    }

    #[test]
    fn calibrated_k0_satisfies_lower_bounds() {
        let grid = RadialGrid::build(3, 30.0, 600).unwrap();
        let params = Params::new(3, 3.0, 1.0, 0.05).unwrap();
        let cfg = FlowConfig::default();
        let k0 = calibrate_k0(&grid, &params, 30, &cfg).unwrap();
        assert!(k0 > 0.0, "k0 = {k0}");
        // fresh probe set
        let probes = barrier_ring_probes(&grid, &params, k0, 60, 999).unwrap();
        for u in &probes {
            let b = breakdown(u, params.p);
            let k = barrier_value_of(&b);
            assert!(j_mu(&b, params.mu, params.p) >= 0.25 * k);
            assert!(q_mu(&b, params.mu, params.p, 3) >= 0.25 * k);
        }
        // calibration rejected outside the regime
        let bad = Params::new(3, 2.0, 1.0, 0.05).unwrap();
        assert!(calibrate_k0(&grid, &bad, 10, &cfg).is_err());
    }
}
