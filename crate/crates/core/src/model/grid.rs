use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Surface measure of the unit sphere S^{N-1} in R^N.
///
/// |S^0| = 2, |S^1| = 2*pi, |S^2| = 4*pi, |S^3| = 2*pi^2, ...
/// Computed as 2*pi^{N/2}/Gamma(N/2) with exact half-integer Gamma values.
pub fn surface_measure(dim: usize) -> f64 {
    assert!(dim >= 1);
    2.0 * PI.powf(dim as f64 / 2.0) / gamma_half(dim)
}

/// Gamma(k/2) for integer k >= 1, by the recursion Gamma(x+1) = x Gamma(x).
fn gamma_half(k: usize) -> f64 {
    if k % 2 == 0 {
        // Gamma(m) = (m-1)!
        let m = k / 2;
        (1..m).map(|i| i as f64).product()
    } else {
        // Gamma(1/2) = sqrt(pi)
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while x + 1.0 <= k as f64 / 2.0 + 0.25 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

/// Uniform radial grid on [0, R_max] with conservative (finite-volume)
/// quadrature weights.
///
/// Nodes r_i = i*h for i = 0..=n with h = R_max/n. Node i owns the shell
/// between the faces r_{i-1/2} and r_{i+1/2} (clamped to the domain), so the
/// weights telescope to the exact ball volume and every node, including the
/// origin, carries positive measure. Face weights carry the r^{N-1} factor of
/// the radial divergence in conservative form.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    dim: usize,
    r_max: f64,
    n: usize,
    h: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    face_weights: Vec<f64>,
    surface: f64,
}

impl RadialGrid {
    /// Build a grid with n intervals (n+1 nodes).
    pub fn build(dim: usize, r_max: f64, n: usize) -> Result<Arc<Self>> {
        if dim < 1 {
            return Err(Error::InvalidConfig("dimension N must be >= 1".into()));
        }
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(Error::InvalidConfig(format!("R_max must be > 0, got {r_max}")));
        }
        if n < 16 {
            return Err(Error::InvalidConfig(format!("grid needs at least 16 intervals, got {n}")));
        }
        let h = r_max / n as f64;
        let surface = surface_measure(dim);
        let nf = dim as f64;
        let nodes: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
        // Cell volume of node i: |S^{N-1}| (r_hi^N - r_lo^N)/N with faces
        // clamped to [0, R_max].
        let weights: Vec<f64> = (0..=n)
            .map(|i| {
                let lo = if i == 0 { 0.0 } else { (i as f64 - 0.5) * h };
                let hi = if i == n { r_max } else { (i as f64 + 0.5) * h };
                surface * (hi.powf(nf) - lo.powf(nf)) / nf
            })
            .collect();
        let face_weights: Vec<f64> = (0..n)
            .map(|i| {
                let rf = (i as f64 + 0.5) * h;
                surface * rf.powf(nf - 1.0) * h
            })
            .collect();
        Ok(Arc::new(Self { dim, r_max, n, h, nodes, weights, face_weights, surface }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Number of intervals; the grid has n+1 nodes.
    pub fn intervals(&self) -> usize {
        self.n
    }

    pub fn node_count(&self) -> usize {
        self.n + 1
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Node quadrature weights (cell volumes).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Face quadrature weights |S^{N-1}| r_{i+1/2}^{N-1} h, i = 0..n-1.
    pub fn face_weights(&self) -> &[f64] {
        &self.face_weights
    }

    pub fn surface(&self) -> f64 {
        self.surface
    }

    /// Volume of the ball of radius R_max.
    pub fn ball_volume(&self) -> f64 {
        self.surface * self.r_max.powf(self.dim as f64) / self.dim as f64
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n && self.r_max == other.r_max
    }
}
