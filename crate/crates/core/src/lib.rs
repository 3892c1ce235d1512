//! Numerical solver and verification suite for L2-normalized solutions of
//! the quasi-linear Schrodinger equation
//!
//!   -Lap u - u Lap(u^2) - lambda u - |u|^{p-1} u = 0  in R^N,
//!
//! restricted to Schwarz-symmetric (radial, decreasing) profiles. The crate
//! computes constrained minimizers and mountain-pass points of the perturbed
//! energy J_mu on the mass sphere, passes mu -> 0, solves the dual semilinear
//! problem by ODE shooting, and checks the Pohozaev/multiplier identities and
//! decay asymptotics on every computed solution.

pub mod continuation;
pub mod diagnostics;
pub mod dual;
pub mod error;
pub mod flow;
pub mod io;
pub(crate) mod linalg;
pub mod model;
pub mod mpass;
pub mod shoot;

pub use error::{Error, Result};
pub use model::{
    breakdown, euler_lagrange, j_mu, multiplier, q_mu, EnergyBreakdown, Params, RadialField,
    RadialGrid, Regime,
};
