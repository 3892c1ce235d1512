//! Mountain-pass machinery on the mass sphere: endpoint construction, path
//! initialization, deformation sweeps driven by the auxiliary dilated
//! functional (u, s) -> J_mu(H(u, s)) with H(u, s) = e^{Ns/2} u(e^s .), and
//! refinement of the path peak into a stationary point.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::{rel_gap, scale_to_zero_q, Classification, FlowConfig, SolveReport, SolveStatus};
use crate::model::energy::{
    barrier_value, breakdown, dilation_curvature, dilation_profile, j_mu, multiplier_of,
    perturbed_pohozaev_sides, q_mu,
};
use crate::model::field::RadialField;
use crate::model::grid::RadialGrid;
use crate::model::operator::{
    euler_lagrange_weighted, newton_polish, project_gradient, residual_norm, EnergyWeights,
};
use crate::model::params::Params;

/// Deformation parameters.
#[derive(Debug, Clone)]
pub struct MpassConfig {
    /// Point count of the discrete path, endpoints included.
    pub points: usize,
    pub max_sweeps: usize,
    /// Relative peak-decrease tolerance per sweep.
    pub sweep_tol: f64,
    /// Re-space the path by energy arc-length every k sweeps.
    pub respace_every: usize,
    /// Cap on the auxiliary dilation step |delta s| per update.
    pub s_cap: f64,
    /// Smallest step scaling at the peak (the peak descends slowest).
    pub sigma_min: f64,
    /// Base step size of a point update.
    pub tau: f64,
}

impl Default for MpassConfig {
    fn default() -> Self {
        Self {
            points: 24,
            max_sweeps: 150,
            sweep_tol: 1e-4,
            respace_every: 5,
            s_cap: 0.25,
            sigma_min: 0.05,
            tau: 0.05,
        }
    }
}

/// Discrete path on the mass sphere with per-point auxiliary dilation
/// coordinates (neutral at s = 0; updates fold s back into the field).
#[derive(Debug, Clone)]
pub struct Path {
    pub points: Vec<RadialField>,
    pub aux_s: Vec<f64>,
}

/// Mountain-pass outcome: the level estimate, the refined peak, the energy
/// profile along the final path and the saddle certificate.
#[derive(Debug, Clone)]
pub struct MpReport {
    pub gamma: f64,
    pub peak: SolveReport,
    pub path_values: Vec<f64>,
    pub saddle_check: bool,
    /// Smallest path maximum observed over all sweeps (the k0/4 floor check).
    pub min_sweep_max: f64,
    pub endpoint_values: (f64, f64),
    pub sweeps: usize,
    /// The final deformed path (for snapshot export).
    pub path_fields: Vec<RadialField>,
}

/// Build the two endpoints of the mountain-pass geometry.
///
/// u1 comes from the anchor minimizer: itself (mass-normalized) when its mass
/// is at most c, or the sqrt(t)-shrink when c is below the anchor mass. u0 is
/// a bump dilated down until it sits inside the barrier with J_mu <= k0/8.
/// Fails when the endpoint inequalities cannot both be met.
pub fn endpoints(
    params: &Params,
    k0: f64,
    grid: &Arc<RadialGrid>,
    anchor: &RadialField,
    anchor_mass: f64,
) -> Result<(RadialField, RadialField)> {
    let u1 = if params.c >= anchor_mass {
        anchor.renormalize_mass(params.c)?
    } else {
        let t = params.c / anchor_mass;
        anchor.scaled(t.sqrt()).renormalize_mass(params.c)?
    };
    let b1 = breakdown(&u1, params.p);
    let j1 = j_mu(&b1, params.mu, params.p);
    let bar1 = b1.grad2 + b1.quasi;
    if j1 >= 0.25 * k0 || bar1 < 1.5 * k0 {
        return Err(Error::Geometry(format!(
            "u1 violates the endpoint inequalities: J = {j1:.3e} (need < {:.3e}), \
             barrier = {bar1:.3e} (need >= {:.3e}); c may be below the window",
            0.25 * k0,
            1.5 * k0
        )));
    }

    // u0 from the compactly supported spread family, widest first: the
    // raised-cosine bump vanishes smoothly at its support edge, so very
    // spread fields carry no boundary kink in the gradient integrals.
    let mut width = 0.95 * grid.r_max();
    for _ in 0..80 {
        let u0 = crate::model::field::cosine_bump(grid, width, params.c)?;
        let b0 = breakdown(&u0, params.p);
        let j0 = j_mu(&b0, params.mu, params.p);
        let bar0 = b0.grad2 + b0.quasi;
        if bar0 < k0 && j0 <= 0.125 * k0 {
            return Ok((u0, u1));
        }
        width *= 0.8;
        if width < 4.0 * grid.spacing() {
            break;
        }
    }
    Err(Error::Geometry(
        "no spread bump sits inside the barrier with J <= k0/8; enlarge R_max".into(),
    ))
}

/// P-point path interpolating in dilation parameter and amplitude between
/// the endpoints, every point mass-exact, auxiliary coordinates zero.
///
/// The second half rides the dilation fiber of u1 from a spread copy up to
/// u1 itself (the fiber crosses the mountain ridge within the right shape
/// family); the first half bridges u0 to that spread copy through low-energy
/// amplitude mixes.
pub fn init_path(u0: &RadialField, u1: &RadialField, count: usize, c: f64) -> Result<Path> {
    if count < 16 {
        return Err(Error::InvalidConfig("path needs at least 16 points".into()));
    }
    u0.check_same_grid(u1)?;
    // spread copy of u1 with barrier comparable to u0's
    let b0 = breakdown(u0, 2.0);
    let target = (b0.grad2 + b0.quasi).max(1e-12);
    let b1 = breakdown(u1, 2.0);
    let dimf = u0.grid().dim() as f64;
    let bar_of = |t: f64| t * t * b1.grad2 + t.powf(dimf + 2.0) * b1.quasi;
    let mut lo = 1e-9;
    let mut hi = 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bar_of(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * hi {
            break;
        }
    }
    let theta_min = 0.5 * (lo + hi);
    let spread = u1.dilate(theta_min)?;

    let half = count / 2;
    let mut points = Vec::with_capacity(count);
    points.push(u0.clone());
    for k in 1..half {
        let a = k as f64 / half as f64;
        let mix = u0.scaled(1.0 - a).axpy(a, &spread)?;
        points.push(mix.renormalize_mass(c)?);
    }
    for k in half..count - 1 {
        let a = (k - half) as f64 / (count - 1 - half) as f64;
        let theta = theta_min * (1.0 / theta_min).powf(a);
        points.push(u1.dilate(theta)?);
    }
    points.push(u1.clone());
    Ok(Path { aux_s: vec![0.0; count], points })
}

/// Gradient of the auxiliary functional (u, s) -> J_mu(H(u, s)): the u-part
/// is the tangentially projected weighted Euler-Lagrange residual of the
/// dilated energy; the s-part equals Q_mu(H(u, s)) exactly.
pub fn aux_gradient(
    u: &RadialField,
    s: f64,
    mu: f64,
    p: f64,
    dim: usize,
) -> Result<(RadialField, f64)> {
    let t = s.exp();
    let wts = EnergyWeights::dilated(mu, dim, p, t);
    let b = breakdown(u, p);
    if b.mass <= 0.0 {
        return Err(Error::InvalidArgument("aux_gradient needs a nonzero field".into()));
    }
    // Euler homogeneity gives the tangency multiplier of the weighted energy.
    let lam =
        (wts.a4 * b.grad4 + wts.a2 * b.grad2 + 4.0 * wts.aq * b.quasi - wts.ap * b.pot) / b.mass;
    let g_u = euler_lagrange_weighted(u, &wts, lam, p);
    let (_, g_s) = dilation_profile(&b, mu, p, dim, t);
    Ok((g_u, g_s))
}

fn path_values(path: &Path, mu: f64, p: f64) -> Vec<f64> {
    path.points.iter().map(|u| j_mu(&breakdown(u, p), mu, p)).collect()
}

/// Re-space interior points uniformly in energy arc-length
/// ds = sqrt(|du|_{L2}^2 + dJ^2); endpoints stay pinned.
fn respace(path: &mut Path, js: &[f64], c: f64) -> Result<()> {
    let n = path.points.len();
    let mut seg = Vec::with_capacity(n - 1);
    for k in 0..n - 1 {
        let diff = path.points[k + 1].axpy(-1.0, &path.points[k])?;
        let du = diff.l2_norm();
        let dj = js[k + 1] - js[k];
        seg.push((du * du + dj * dj).sqrt().max(1e-300));
    }
    let total: f64 = seg.iter().sum();
    let mut cum = vec![0.0];
    for s in &seg {
        cum.push(cum.last().unwrap() + s);
    }
    let mut new_points = Vec::with_capacity(n);
    new_points.push(path.points[0].clone());
    for k in 1..n - 1 {
        let target = total * k as f64 / (n - 1) as f64;
        let mut idx = 0;
        while idx + 1 < seg.len() && cum[idx + 1] < target {
            idx += 1;
        }
        let local = ((target - cum[idx]) / seg[idx]).clamp(0.0, 1.0);
        let mix = path.points[idx].scaled(1.0 - local).axpy(local, &path.points[idx + 1])?;
        new_points.push(mix.renormalize_mass(c)?);
    }
    new_points.push(path.points[n - 1].clone());
    path.points = new_points;
    path.aux_s.iter_mut().for_each(|s| *s = 0.0);
    Ok(())
}

/// One deformation update of an interior point: a tangential descent step in
/// (u, s) scaled by sigma, the dilation folded back into the field.
fn update_point(
    u: &RadialField,
    params: &Params,
    tau0: f64,
    sigma: f64,
    s_cap: f64,
) -> Result<RadialField> {
    let (mu, p, dim, c) = (params.mu, params.p, params.dim, params.c);
    let j = j_mu(&breakdown(u, p), mu, p);
    let (g_u, g_s) = aux_gradient(u, 0.0, mu, p, dim)?;
    let gn = residual_norm(&g_u);
    if gn == 0.0 && g_s == 0.0 {
        return Ok(u.clone());
    }
    // normalize so tau is a relative move in L2
    let u_scale = c.sqrt() / gn.max(1e-300);
    let s_scale = 1.0 / g_s.abs().max(1e-300);
    let mut tau = tau0 * sigma;
    for _ in 0..25 {
        let ds = (-tau * g_s * s_scale * s_cap).clamp(-s_cap, s_cap);
        let cand = u.axpy(-tau * u_scale, &g_u)?.renormalize_mass(c)?.dilate(ds.exp())?;
        let jc = j_mu(&breakdown(&cand, p), mu, p);
        if jc < j {
            return Ok(cand);
        }
        tau *= 0.5;
    }
    Ok(u.clone())
}

/// Iterated deformation sweeps: interior points descend in (u, s) with the
/// peak moving slowest, endpoints pinned, the path re-spaced by energy
/// arc-length. The returned gamma is the smallest path maximum seen, a
/// certified upper bound for the mountain-pass level over this path family.
pub fn deform(
    path: &mut Path,
    params: &Params,
    cfg: &MpassConfig,
) -> Result<(f64, Vec<f64>, f64, usize)> {
    let (mu, p) = (params.mu, params.p);
    let mut js = path_values(path, mu, p);
    let j_ends = (js[0], *js.last().unwrap());
    let mut gamma = f64::INFINITY;
    let mut min_sweep_max = f64::INFINITY;
    let mut last_max = f64::INFINITY;
    let mut stall = 0usize;
    let mut sweeps_done = 0usize;

    for sweep in 0..cfg.max_sweeps {
        sweeps_done = sweep + 1;
        let jmax = js.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        gamma = gamma.min(jmax);
        min_sweep_max = min_sweep_max.min(jmax);

        if last_max.is_finite() {
            let drop = last_max - jmax;
            if drop.abs() < cfg.sweep_tol * jmax.abs().max(1e-12) {
                stall += 1;
                if stall >= 3 {
                    break;
                }
            } else {
                stall = 0;
            }
        }
        last_max = jmax;

        let j_floor = j_ends.0.min(j_ends.1);
        let temp = ((jmax - j_floor) / 5.0).max(1e-12);
        let updates: Vec<(usize, RadialField)> = (1..path.points.len() - 1)
            .into_par_iter()
            .map(|k| {
                let u = &path.points[k];
                let sigma = (1.0 - (-(jmax - js[k]) / temp).exp()).max(cfg.sigma_min);
                let updated =
                    update_point(u, params, cfg.tau, sigma, cfg.s_cap).unwrap_or_else(|_| u.clone());
                (k, updated)
            })
            .collect();
        for (k, u) in updates {
            path.points[k] = u;
        }
        js = path_values(path, mu, p);

        if cfg.respace_every > 0 && sweep > 0 && sweep % cfg.respace_every == 0 {
            respace(path, &js, params.c)?;
            js = path_values(path, mu, p);
        }
    }
    let jmax = js.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    gamma = gamma.min(jmax);
    min_sweep_max = min_sweep_max.min(jmax);
    Ok((gamma, js, min_sweep_max, sweeps_done))
}

/// Three-stage refinement of the minimax peak into a stationary point:
/// (a) constrained descent pinned to the Q = 0 dilation manifold (descending
/// there cannot slide down the dilation direction, which is the unstable one
/// of the saddle), (b) squared-residual damping, (c) the Newton KKT solve.
/// Mountain-pass classification demands lambda < 0, J > 0 and a negative
/// dilation curvature; landing below the collapse floor means the refinement
/// slid into the minimizer basin.
pub fn refine_peak(
    peak: &RadialField,
    params: &Params,
    _cfg: &FlowConfig,
    collapse_floor: f64,
) -> Result<SolveReport> {
    match refine_peak_inner(peak, params, collapse_floor, true) {
        Ok(rep) => Ok(rep),
        // the manifold phase can slide into the minimizer basin (both the
        // saddle and the minima sit on the Q = 0 manifold); retry from the
        // raw peak with damping only
        Err(_) => refine_peak_inner(peak, params, collapse_floor, false),
    }
}

fn refine_peak_inner(
    peak: &RadialField,
    params: &Params,
    collapse_floor: f64,
    manifold_phase: bool,
) -> Result<SolveReport> {
    let (mu, p, dim, c) = (params.mu, params.p, params.dim, params.c);
    let mut u = peak.renormalize_mass(c)?;

    // (a) descend J_mu along the Q = 0 manifold, stopping well above the
    // collapse floor (descending further risks the minimizer basin)
    let mut j = {
        if let Ok(v) = scale_to_zero_q(&u, mu, p) {
            u = v;
        }
        j_mu(&breakdown(&u, p), mu, p)
    };
    let floor_a = collapse_floor + 0.25 * (j - collapse_floor).max(0.0);
    let mut tau = 0.05;
    for _ in 0..if manifold_phase { 400 } else { 0 } {
        let g = project_gradient(&u, mu, p)?;
        let gn = residual_norm(&g);
        if gn / c.sqrt() < 1e-6 {
            break;
        }
        let step_scale = c.sqrt() / gn.max(1e-300);
        let mut moved = false;
        for _ in 0..25 {
            let cand = u.axpy(-tau * step_scale, &g)?.renormalize_mass(c)?;
            let cand = match scale_to_zero_q(&cand, mu, p) {
                Ok(v) => v,
                Err(_) => cand,
            };
            let jc = j_mu(&breakdown(&cand, p), mu, p);
            if jc < j {
                u = cand;
                j = jc;
                tau = (tau * 1.4).min(0.5);
                moved = true;
                break;
            }
            tau *= 0.5;
        }
        if !moved || j <= floor_a {
            break;
        }
    }

    // (b) squared-residual damping toward stationarity
    let g2_of = |w: &RadialField| -> Result<f64> {
        let r = project_gradient(w, mu, p)?;
        Ok(0.5 * r.mass())
    };
    for _ in 0..30 {
        if let Ok(v) = scale_to_zero_q(&u, mu, p) {
            u = v;
        }
        let g = project_gradient(&u, mu, p)?;
        let gn = residual_norm(&g);
        if gn / c.sqrt() < 1e-5 {
            break;
        }
        // direction = Hessian action on the residual (central differences):
        // the gradient of |residual|^2/2 up to the constraint curvature
        let eps = 1e-6 * c.sqrt() / gn;
        let gp = project_gradient(&u.axpy(eps, &g)?, mu, p)?;
        let gm = project_gradient(&u.axpy(-eps, &g)?, mu, p)?;
        let dir = gp.axpy(-1.0, &gm)?.scaled(gn / (2.0 * eps));
        let g_now = g2_of(&u)?;
        let dn = residual_norm(&dir).max(1e-300);
        let mut tau = 0.5 * c.sqrt() / dn;
        let mut moved = false;
        for _ in 0..20 {
            let cand = u.axpy(-tau, &dir)?.renormalize_mass(c)?;
            if g2_of(&cand)? < g_now {
                u = cand;
                moved = true;
                break;
            }
            tau *= 0.5;
        }
        if !moved {
            break;
        }
    }

    let out = newton_polish(&u, mu, p, c, 1e-10, 80)?;
    if !out.converged {
        return Err(Error::Convergence(format!(
            "peak refinement stalled at residual {:.3e}",
            out.residual
        )));
    }
    let b = breakdown(&out.field, p);
    let j = j_mu(&b, mu, p);
    let q = q_mu(&b, mu, p, dim);
    let lambda = multiplier_of(&b, mu)?;
    let curv = dilation_curvature(&b, mu, p, dim, 1.0);
    let (pl, pr) = perturbed_pohozaev_sides(&b, lambda, mu, p, dim);
    let grad_norm =
        residual_norm(&euler_lagrange_weighted(&out.field, &EnergyWeights::j_mu(mu), lambda, p))
            / c.sqrt();

    if j <= collapse_floor {
        return Err(Error::Convergence(format!(
            "refined peak collapsed toward the minimizer basin (J = {j:.4e} <= {collapse_floor:.4e})"
        )));
    }
    let classification = if lambda < 0.0 && j > 0.0 && curv < 0.0 {
        Classification::MountainPass
    } else {
        Classification::Failed
    };
    Ok(SolveReport {
        field: out.field,
        lambda,
        j_value: j,
        q_value: q,
        pohozaev_residual: rel_gap(pl, pr),
        grad_norm,
        iters: out.iterations,
        classification,
        status: SolveStatus::Converged,
        mu,
        c,
    })
}

/// Full mountain-pass run: endpoints, path, deformation, peak refinement.
pub fn mountain_pass(
    grid: &Arc<RadialGrid>,
    params: &Params,
    k0: f64,
    anchor: &RadialField,
    anchor_mass: f64,
    flow_cfg: &FlowConfig,
    mp_cfg: &MpassConfig,
) -> Result<MpReport> {
    let (u0, u1) = endpoints(params, k0, grid, anchor, anchor_mass)?;
    debug_assert!(barrier_value(&u0) < k0 && barrier_value(&u1) > k0);
    let mut path = init_path(&u0, &u1, mp_cfg.points, params.c)?;
    let (gamma, js, min_sweep_max, sweeps) = deform(&mut path, params, mp_cfg)?;
    let (peak_idx, _) = js
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let j_ends = (js[0], *js.last().unwrap());
    let collapse_floor = j_ends.1 + 0.05 * (gamma - j_ends.1).max(0.0);
    let peak = refine_peak(&path.points[peak_idx], params, flow_cfg, collapse_floor)?;

    let neighbors_below = peak_idx > 0
        && peak_idx + 1 < js.len()
        && js[peak_idx - 1] <= js[peak_idx]
        && js[peak_idx + 1] <= js[peak_idx];
    let curv = dilation_curvature(
        &breakdown(&peak.field, params.p),
        params.mu,
        params.p,
        params.dim,
        1.0,
    );
    let saddle_check = neighbors_below && curv < 0.0;

    Ok(MpReport {
        gamma,
        peak,
        path_values: js,
        saddle_check,
        min_sweep_max,
        endpoint_values: j_ends,
        sweeps,
        path_fields: path.points.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::field::gaussian_bump;
    use crate::model::operator::fd_directional_derivative;
    use approx::assert_relative_eq;

    #[test]
    fn aux_gradient_s_part_is_q() {
        let grid = RadialGrid::build(3, 20.0, 500).unwrap();
        let u = gaussian_bump(&grid, 2.0, 3.0).unwrap();
        let (mu, p) = (0.1, 3.0);
        let (_, g_s) = aux_gradient(&u, 0.0, mu, p, 3).unwrap();
        let q = q_mu(&breakdown(&u, p), mu, p, 3);
        assert_relative_eq!(g_s, q, max_relative = 1e-13);
    }

    #[test]
    fn aux_gradient_fd_in_s() {
        let grid = RadialGrid::build(2, 16.0, 400).unwrap();
        let u = gaussian_bump(&grid, 1.5, 2.0).unwrap();
        let (mu, p, dim) = (0.2, 2.5, 2usize);
        let b = breakdown(&u, p);
        for &s in &[-0.4, 0.0, 0.7] {
            let (_, g_s) = aux_gradient(&u, s, mu, p, dim).unwrap();
            let eps = 1e-6;
            let (jp, _) = dilation_profile(&b, mu, p, dim, (s + eps).exp());
            let (jm, _) = dilation_profile(&b, mu, p, dim, (s - eps).exp());
            let fd = (jp - jm) / (2.0 * eps);
            assert_relative_eq!(g_s, fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn aux_gradient_u_part_is_tangent_and_consistent() {
        let grid = RadialGrid::build(3, 16.0, 400).unwrap();
        let u = gaussian_bump(&grid, 2.0, 1.5).unwrap();
        let (mu, p, dim) = (0.1, 3.0, 3usize);
        let (g_u, _) = aux_gradient(&u, 0.3, mu, p, dim).unwrap();
        assert!(g_u.l2_inner(&u).unwrap().abs() < 1e-12 * u.mass());
        // at s = 0 the pairing with tangent directions matches finite
        // differences of the plain J_mu
        let (g0, _) = aux_gradient(&u, 0.0, mu, p, dim).unwrap();
        let mut phi =
            RadialField::from_fn(u.grid().clone(), |r| (0.4 * r).sin() * (-0.2 * r * r).exp());
        let coef = phi.l2_inner(&u).unwrap() / u.mass();
        phi = phi.axpy(-coef, &u).unwrap();
        let lhs = g0.l2_inner(&phi).unwrap();
        let rhs = fd_directional_derivative(&u, &phi, mu, p, 1e-6).unwrap();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-5);
    }

    #[test]
    fn init_path_contract() {
        let grid = RadialGrid::build(3, 20.0, 400).unwrap();
        let a = gaussian_bump(&grid, 1.0, 2.0).unwrap();
        let b = gaussian_bump(&grid, 3.0, 2.0).unwrap();
        let path = init_path(&a, &b, 16, 2.0).unwrap();
        assert_eq!(path.points.len(), 16);
        assert_eq!(path.points[0].values(), a.values());
        assert_eq!(path.points[15].values(), b.values());
        for u in &path.points {
            assert_relative_eq!(u.mass(), 2.0, max_relative = 1e-12);
        }
        assert!(init_path(&a, &b, 8, 2.0).is_err());
    }
}
