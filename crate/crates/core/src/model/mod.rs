//! Radial discretization and the algebraic core: grids, fields, energy
//! breakdowns, the perturbed functionals J_mu / Q_mu, Euler-Lagrange
//! residuals, dilations and barrier predicates.

pub mod energy;
pub mod field;
pub mod grid;
pub mod operator;
pub mod params;

pub use energy::{
    barrier_value, barrier_value_of, breakdown, dilation_curvature, dilation_profile,
    energy_identity_sides, fixed_lambda_energy, gn_bounds, in_barrier, j_mu, multiplier,
    multiplier_formula_sides, multiplier_of, nehari_sides, perturbed_pohozaev_sides, q_mu,
    EnergyBreakdown, GnBounds,
};
pub use field::{gaussian_bump, RadialField};
pub use grid::{surface_measure, RadialGrid};
pub use operator::{
    breakdown_and_multiplier, el_pairing_with_u, euler_lagrange, euler_lagrange_weighted,
    fd_directional_derivative, newton_polish, project_gradient, residual_norm, EnergyWeights,
    NewtonOutcome,
};
pub use params::{lambda_negative_covered, regime_of, Params, Regime};
