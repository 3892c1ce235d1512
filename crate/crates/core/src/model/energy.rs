use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::field::RadialField;

/// The five scalar integrals every functional and identity is assembled from.
///
/// grad2 = |grad u|_2^2, grad4 = |grad u|_4^4, quasi = int u^2 |grad u|^2,
/// pot = |u|_{p+1}^{p+1}, mass = |u|_2^2.
///
/// Gradient terms use the face-centered (staggered) differences of the
/// conservative discretization, so that testing the discrete Euler-Lagrange
/// operator against u reproduces them exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub grad2: f64,
    pub grad4: f64,
    pub quasi: f64,
    pub pot: f64,
    pub mass: f64,
}

/// Compute the energy breakdown of a field.
pub fn breakdown(u: &RadialField, p: f64) -> EnergyBreakdown {
    let grid = u.grid();
    let h = grid.spacing();
    let vals = u.values();
    let mut grad2 = 0.0;
    let mut grad4 = 0.0;
    let mut quasi = 0.0;
    for (i, &fw) in grid.face_weights().iter().enumerate() {
        let d = (vals[i + 1] - vals[i]) / h;
        let d2 = d * d;
        let s = 0.5 * (vals[i] * vals[i] + vals[i + 1] * vals[i + 1]);
        grad2 += fw * d2;
        grad4 += fw * d2 * d2;
        quasi += fw * s * d2;
    }
    let mut pot = 0.0;
    let mut mass = 0.0;
    for (&v, &w) in vals.iter().zip(grid.weights()) {
        pot += w * v.abs().powf(p + 1.0);
        mass += w * v * v;
    }
    EnergyBreakdown { grad2, grad4, quasi, pot, mass }
}

/// Perturbed energy J_mu = mu/4 |grad u|_4^4 + 1/2 |grad u|_2^2
/// + int u^2 |grad u|^2 - |u|_{p+1}^{p+1}/(p+1). mu = 0 recovers J.
pub fn j_mu(b: &EnergyBreakdown, mu: f64, p: f64) -> f64 {
    0.25 * mu * b.grad4 + 0.5 * b.grad2 + b.quasi - b.pot / (p + 1.0)
}

/// Pohozaev functional on the mass sphere:
/// Q_mu = mu(N+4)/4 |grad u|_4^4 + |grad u|_2^2 + (N+2) int u^2|grad u|^2
/// - N(p-1)/(2(p+1)) |u|_{p+1}^{p+1}. Equals d/dt J_mu(u^t) at t = 1.
pub fn q_mu(b: &EnergyBreakdown, mu: f64, p: f64, dim: usize) -> f64 {
    let nf = dim as f64;
    0.25 * mu * (nf + 4.0) * b.grad4 + b.grad2 + (nf + 2.0) * b.quasi
        - nf * (p - 1.0) / (2.0 * (p + 1.0)) * b.pot
}

/// Closed-form energies along the mass-preserving dilation u^t = t^{N/2}u(t.):
/// J_t and Q_t = t dJ_t/dt, exact in the breakdown (no resampling).
pub fn dilation_profile(b: &EnergyBreakdown, mu: f64, p: f64, dim: usize, t: f64) -> (f64, f64) {
    let nf = dim as f64;
    let e4 = nf + 4.0;
    let eq = nf + 2.0;
    let ep = 0.5 * nf * (p - 1.0);
    let j = 0.25 * mu * t.powf(e4) * b.grad4 + 0.5 * t * t * b.grad2 + t.powf(eq) * b.quasi
        - t.powf(ep) / (p + 1.0) * b.pot;
    let q = 0.25 * mu * e4 * t.powf(e4) * b.grad4 + t * t * b.grad2 + eq * t.powf(eq) * b.quasi
        - ep / (p + 1.0) * t.powf(ep) * b.pot;
    (j, q)
}

/// Second derivative of t -> J_mu(u^t) at t, times t^2 (the natural
/// log-dilation curvature). Negative at a zero of Q means the dilation
/// direction is a local max.
pub fn dilation_curvature(b: &EnergyBreakdown, mu: f64, p: f64, dim: usize, t: f64) -> f64 {
    let nf = dim as f64;
    let e4 = nf + 4.0;
    let eq = nf + 2.0;
    let ep = 0.5 * nf * (p - 1.0);
    // d^2/ds^2 J(u^{e^s}) = sum e_i^2 coef_i t^{e_i}; subtract Q to get the
    // curvature of s -> J at fixed first-order term.
    let sum_e2 = 0.25 * mu * e4 * e4 * t.powf(e4) * b.grad4
        + 4.0 * 0.5 * t * t * b.grad2
        + eq * eq * t.powf(eq) * b.quasi
        - ep * ep / (p + 1.0) * t.powf(ep) * b.pot;
    let (_, q) = dilation_profile(b, mu, p, dim, t);
    sum_e2 - q
}

/// Barrier functional b(u) = int (1+u^2)|grad u|^2 = grad2 + quasi.
pub fn barrier_value_of(b: &EnergyBreakdown) -> f64 {
    b.grad2 + b.quasi
}

pub fn barrier_value(u: &RadialField) -> f64 {
    // p is irrelevant for the gradient integrals.
    barrier_value_of(&breakdown(u, 2.0))
}

/// u lies in the barrier set B iff b(u) <= k0.
pub fn in_barrier(u: &RadialField, k0: f64) -> bool {
    barrier_value(u) <= k0
}

/// Lagrange multiplier from the tested equation:
/// lambda = (mu |grad u|_4^4 + |grad u|_2^2 + 4 int u^2|grad u|^2 - |u|_{p+1}^{p+1}) / |u|_2^2.
pub fn multiplier_of(b: &EnergyBreakdown, mu: f64) -> Result<f64> {
    if b.mass <= 0.0 {
        return Err(Error::DivisionByZero("multiplier of a zero field".into()));
    }
    Ok((mu * b.grad4 + b.grad2 + 4.0 * b.quasi - b.pot) / b.mass)
}

pub fn multiplier(u: &RadialField, mu: f64, p: f64) -> Result<f64> {
    multiplier_of(&breakdown(u, p), mu)
}

/// Fixed-frequency energy I_lambda = grad2/2 - lambda/2 mass + quasi - pot/(p+1).
pub fn fixed_lambda_energy(b: &EnergyBreakdown, lambda: f64, p: f64) -> f64 {
    0.5 * b.grad2 - 0.5 * lambda * b.mass + b.quasi - b.pot / (p + 1.0)
}

/// Structural Gagliardo-Nirenberg quantities (without the unknown constants):
/// lhs = |u|_{p+1}^{p+1} and the three right-hand sides of the barrier
/// estimates. rhs12 only applies for N >= 3.
pub struct GnBounds {
    pub lhs: f64,
    pub rhs11: f64,
    pub rhs12: Option<f64>,
    pub rhs451: f64,
}

pub fn gn_bounds(u: &RadialField, p: f64, dim: usize) -> Result<GnBounds> {
    let b = breakdown(u, p);
    if b.mass <= 0.0 {
        return Err(Error::InvalidArgument("gn_bounds needs a nonzero field".into()));
    }
    let nf = dim as f64;
    let bar = barrier_value_of(&b);
    let rhs11 = bar.powf(nf * (p - 1.0) / 4.0) * b.mass.powf(((nf + 2.0) - (nf - 2.0) * p) / 4.0);
    let rhs12 = if dim >= 3 { Some(bar.powf(nf / (nf - 2.0))) } else { None };
    let rhs451 = b.mass.powf((3.0 * nf + 2.0 - (nf - 2.0) * p) / (2.0 * (nf + 2.0)))
        * b.quasi.powf(nf * (p - 1.0) / (2.0 * (nf + 2.0)));
    Ok(GnBounds { lhs: b.pot, rhs11, rhs12, rhs451 })
}

/// Left/right sides of the mu-perturbed Pohozaev identity (reduces to the
/// plain one at mu = 0):
/// mu(N-4)/(4N) grad4 + (N-2)/N (grad2/2 + quasi) - beta/2 mass = pot/(p+1).
pub fn perturbed_pohozaev_sides(
    b: &EnergyBreakdown,
    beta: f64,
    mu: f64,
    p: f64,
    dim: usize,
) -> (f64, f64) {
    let nf = dim as f64;
    let lhs = mu * (nf - 4.0) / (4.0 * nf) * b.grad4
        + (nf - 2.0) / nf * (0.5 * b.grad2 + b.quasi)
        - 0.5 * beta * b.mass;
    (lhs, b.pot / (p + 1.0))
}

/// Left/right sides of the tested (Nehari-type) identity
/// mu grad4 + grad2 + 4 quasi = lambda mass + pot.
pub fn nehari_sides(b: &EnergyBreakdown, lambda: f64, mu: f64) -> (f64, f64) {
    (mu * b.grad4 + b.grad2 + 4.0 * b.quasi, lambda * b.mass + b.pot)
}

/// Left/right sides of the multiplier reconstruction
/// lambda mass = ((N-2)p-(N+2))/(N(p-1)) grad2 + 2((N-2)p-(3N+2))/(N(p-1)) quasi
/// (the linear combination of the Pohozaev and Nehari identities at mu = 0).
pub fn multiplier_formula_sides(
    b: &EnergyBreakdown,
    lambda: f64,
    p: f64,
    dim: usize,
) -> (f64, f64) {
    let nf = dim as f64;
    let denom = nf * (p - 1.0);
    let lhs = lambda * b.mass;
    let rhs = ((nf - 2.0) * p - (nf + 2.0)) / denom * b.grad2
        + 2.0 * ((nf - 2.0) * p - (3.0 * nf + 2.0)) / denom * b.quasi;
    (lhs, rhs)
}

/// Left/right sides of the energy identity derived from the perturbed
/// Pohozaev identity:
/// J_mu(u) = mu/N grad4 + (grad2 + 2 quasi)/N + beta/2 mass.
pub fn energy_identity_sides(
    b: &EnergyBreakdown,
    beta: f64,
    mu: f64,
    p: f64,
    dim: usize,
) -> (f64, f64) {
    let nf = dim as f64;
    let lhs = j_mu(b, mu, p);
    let rhs = mu / nf * b.grad4 + (b.grad2 + 2.0 * b.quasi) / nf + 0.5 * beta * b.mass;
    (lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::field::gaussian_bump;
    use crate::model::grid::RadialGrid;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn bd(grad2: f64, grad4: f64, quasi: f64, pot: f64, mass: f64) -> EnergyBreakdown {
        EnergyBreakdown { grad2, grad4, quasi, pot, mass }
    }

    #[test]
    fn j_mu_arithmetic() {
        let b = bd(2.0, 4.0, 1.0, 8.0, 1.0);
        assert_relative_eq!(j_mu(&b, 1.0, 3.0), 1.0);
        assert_relative_eq!(j_mu(&b, 0.0, 3.0), 0.0);
        let z = bd(0.0, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(j_mu(&z, 0.7, 2.5), 0.0);
        assert_eq!(q_mu(&z, 0.7, 2.5, 3), 0.0);
    }

    #[test]
    fn q_mu_arithmetic() {
        // N=3, p=3, mu=0, (grad2=1, quasi=1, pot=8): 1 + 5 - 6/8*8 = 0
        let b = bd(1.0, 0.0, 1.0, 8.0, 1.0);
        assert_relative_eq!(q_mu(&b, 0.0, 3.0, 3), 0.0);
    }

    #[test]
    fn multiplier_examples() {
        let b = bd(1.0, 0.0, 0.0, 3.0, 2.0);
        assert_relative_eq!(multiplier_of(&b, 0.0).unwrap(), -1.0);
        let z = bd(0.0, 0.0, 0.0, 0.0, 0.0);
        assert!(multiplier_of(&z, 0.0).is_err());
    }

    #[test]
    fn mass_of_exponential_3d() {
        // N=3, u=e^{-r}: mass = 4 pi int r^2 e^{-2r} dr = pi on (R=20, n=4000)
        let g = RadialGrid::build(3, 20.0, 4000).unwrap();
        let u = crate::model::field::RadialField::from_fn(g, |r| (-r).exp());
        let b = breakdown(&u, 3.0);
        assert_relative_eq!(b.mass, PI, max_relative = 1e-3);
        assert!(b.grad2 > 0.0 && b.grad4 > 0.0 && b.quasi > 0.0 && b.pot > 0.0);
    }

    #[test]
    fn zero_field_breakdown() {
        let g = RadialGrid::build(2, 5.0, 64).unwrap();
        let u = crate::model::field::RadialField::zeros(g);
        let b = breakdown(&u, 2.0);
        assert_eq!(
            (b.grad2, b.grad4, b.quasi, b.pot, b.mass),
            (0.0, 0.0, 0.0, 0.0, 0.0)
        );
        assert_eq!(barrier_value(&u), 0.0);
        assert!(in_barrier(&u, 1e-9));
    }

    #[test]
    fn dilation_profile_t1_matches() {
        let g = RadialGrid::build(3, 14.0, 700).unwrap();
        let u = gaussian_bump(&g, 2.0, 1.3).unwrap();
        let (mu, p) = (0.2, 2.6);
        let b = breakdown(&u, p);
        let (j1, q1) = dilation_profile(&b, mu, p, 3, 1.0);
        assert_relative_eq!(j1, j_mu(&b, mu, p), max_relative = 1e-12);
        assert_relative_eq!(q1, q_mu(&b, mu, p, 3), max_relative = 1e-12);
    }

    #[test]
    fn dilation_q_positive_large_t_with_mu() {
        let g = RadialGrid::build(3, 14.0, 700).unwrap();
        let u = gaussian_bump(&g, 2.0, 1.3).unwrap();
        let b = breakdown(&u, 3.0);
        for &t in &[50.0, 200.0, 1000.0] {
            let (_, q) = dilation_profile(&b, 0.1, 3.0, 3, t);
            assert!(q > 0.0, "Q_t must be positive for large t when mu > 0 (t = {t})");
        }
    }

    #[test]
    fn dilation_supercritical_log_slope() {
        // p > 3+4/N, mu = 0: J_t -> -inf with log-slope N(p-1)/2 in the pot term
        let g = RadialGrid::build(3, 14.0, 700).unwrap();
        let u = gaussian_bump(&g, 2.0, 1.0).unwrap();
        let (dim, p) = (3usize, 5.0);
        let b = breakdown(&u, p);
        let (j1, _) = dilation_profile(&b, 0.0, p, dim, 1e6);
        let (j2, _) = dilation_profile(&b, 0.0, p, dim, 2e6);
        assert!(j1 < 0.0 && j2 < j1);
        let slope = ((-j2).ln() - (-j1).ln()) / (2.0f64).ln();
        assert_relative_eq!(slope, 3.0 * (p - 1.0) / 2.0, max_relative = 1e-3);
    }

    #[test]
    fn barrier_vanishes_under_small_dilation() {
        let g = RadialGrid::build(3, 48.0, 2400).unwrap();
        let u = gaussian_bump(&g, 1.5, 1.0).unwrap();
        let b0 = barrier_value(&u);
        let j0 = j_mu(&breakdown(&u, 3.0), 0.05, 3.0).abs();
        let mut prev = b0;
        for &t in &[0.5, 0.25, 0.125] {
            let d = u.dilate(t).unwrap();
            let bt = barrier_value(&d);
            assert!(bt < prev, "barrier not decreasing at t={t}: {bt} vs {prev}");
            prev = bt;
        }
        // both the barrier and the energy vanish in the spread limit
        let spread = u.dilate(0.125).unwrap();
        let j_spread = j_mu(&breakdown(&spread, 3.0), 0.05, 3.0).abs();
        assert!(prev < 0.05 * b0);
        assert!(j_spread < 0.05 * j0.max(1e-9));
    }

    #[test]
    fn gn_ratios_bounded_over_random_sample() {
        // empirical constants for the barrier estimates exist: the ratios
        // lhs/rhs stay bounded over a 100-field sample
        use rand::Rng;
        use rand::SeedableRng;
        let g = RadialGrid::build(3, 20.0, 400).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        let (mut r11, mut r12, mut r451) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..100 {
            let (a, w1, w2, m): (f64, f64, f64, f64) =
                (rng.gen(), 0.5 + 2.0 * rng.gen::<f64>(), 0.5 + 4.0 * rng.gen::<f64>(), rng.gen());
            let u = crate::model::field::RadialField::from_fn(g.clone(), move |r| {
                (0.2 + a) * ((-(r / w1) * (r / w1)).exp() + m * (-(r / w2) * (r / w2)).exp())
            });
            let gb = gn_bounds(&u, 3.0, 3).unwrap();
            r11 = r11.max(gb.lhs / gb.rhs11);
            r12 = r12.max(gb.lhs / gb.rhs12.unwrap());
            r451 = r451.max(gb.lhs / gb.rhs451);
        }
        assert!(r11.is_finite() && r11 > 0.0);
        assert!(r12.is_finite() && r12 > 0.0);
        assert!(r451.is_finite() && r451 > 0.0);
        // super-linearity of the barrier-estimate exponent at N=1, p=6
        let (dim, p) = (1.0f64, 6.0f64);
        assert!(dim * (p - 1.0) / 4.0 > 1.0);
    }

    #[test]
    fn gn_bounds_applicability() {
        let g = RadialGrid::build(1, 20.0, 800).unwrap();
        let u = gaussian_bump(&g, 2.0, 1.0).unwrap();
        let gb = gn_bounds(&u, 6.0, 1).unwrap();
        assert!(gb.rhs12.is_none());
        assert!(gb.lhs > 0.0 && gb.rhs11 > 0.0 && gb.rhs451 > 0.0);
        let g3 = RadialGrid::build(3, 20.0, 800).unwrap();
        let u3 = gaussian_bump(&g3, 2.0, 1.0).unwrap();
        assert!(gn_bounds(&u3, 3.0, 3).unwrap().rhs12.is_some());
        let z = crate::model::field::RadialField::zeros(g3);
        assert!(gn_bounds(&z, 3.0, 3).is_err());
    }
}
