use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::grid::RadialGrid;

/// Sampled radial profile u(r) on a grid. Immutable after construction;
/// operations return new fields. The Dirichlet tail u(R_max) = 0 is enforced.
#[derive(Debug, Clone)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::GridMismatch(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("field contains non-finite values".into()));
        }
        *values.last_mut().unwrap() = 0.0;
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let n = grid.node_count();
        Self { grid, values: vec![0.0; n] }
    }

    /// Sample a profile function; the tail node is pinned to zero.
    pub fn from_fn<F: Fn(f64) -> f64>(grid: Arc<RadialGrid>, f: F) -> Self {
        let mut values: Vec<f64> = grid.nodes().iter().map(|&r| f(r)).collect();
        *values.last_mut().unwrap() = 0.0;
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if !self.grid.same_grid(&other.grid) {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        Ok(())
    }

    /// Discrete L2 mass: sum w_i u_i^2.
    pub fn mass(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.weights())
            .map(|(&u, &w)| w * u * u)
            .sum()
    }

    /// Weighted L2 inner product of two fields on the same grid.
    pub fn l2_inner(&self, other: &Self) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(other.values.iter())
            .zip(self.grid.weights())
            .map(|((&a, &b), &w)| w * a * b)
            .sum())
    }

    pub fn l2_norm(&self) -> f64 {
        self.mass().sqrt()
    }

    /// sum w_i |u_i|^q.
    pub fn lq_norm_pow(&self, q: f64) -> f64 {
        self.values
            .iter()
            .zip(self.grid.weights())
            .map(|(&u, &w)| w * u.abs().powf(q))
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }

    pub fn scaled(&self, a: f64) -> Self {
        let values = self.values.iter().map(|&v| a * v).collect();
        Self { grid: self.grid.clone(), values }
    }

    /// self + a * other.
    pub fn axpy(&self, a: f64, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        let mut values: Vec<f64> = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(&u, &v)| u + a * v)
            .collect();
        *values.last_mut().unwrap() = 0.0;
        Ok(Self { grid: self.grid.clone(), values })
    }

    /// Rescale amplitude so the mass equals c exactly.
    pub fn renormalize_mass(&self, c: f64) -> Result<Self> {
        let m = self.mass();
        if m <= 0.0 {
            return Err(Error::DivisionByZero("cannot renormalize a zero field".into()));
        }
        Ok(self.scaled((c / m).sqrt()))
    }

    /// Linear interpolation of the profile at radius r; zero beyond R_max.
    pub fn interp(&self, r: f64) -> f64 {
        if r < 0.0 {
            return self.interp(-r);
        }
        if r >= self.grid.r_max() {
            return 0.0;
        }
        let h = self.grid.spacing();
        let x = r / h;
        let i = (x.floor() as usize).min(self.grid.intervals() - 1);
        let t = x - i as f64;
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }

    /// Mass-preserving dilation u^t(x) = t^{N/2} u(t x).
    ///
    /// Resampled by linear interpolation, then amplitude-rescaled so the mass
    /// matches the original exactly (removes the O(h) interpolation drift).
    pub fn dilate(&self, t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("dilation needs t > 0, got {t}")));
        }
        if t == 1.0 {
            return Ok(self.clone());
        }
        let m0 = self.mass();
        let amp = t.powf(self.grid.dim() as f64 / 2.0);
        let mut values: Vec<f64> = self
            .grid
            .nodes()
            .iter()
            .map(|&r| amp * self.interp(t * r))
            .collect();
        *values.last_mut().unwrap() = 0.0;
        let out = Self { grid: self.grid.clone(), values };
        if m0 == 0.0 {
            return Ok(out);
        }
        let m1 = out.mass();
        if m1 <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "dilation by t = {t} moved all mass outside the grid"
            )));
        }
        Ok(out.scaled((m0 / m1).sqrt()))
    }

    /// Node-centered profile derivative: central differences in the interior,
    /// one-sided at the origin and at R_max. Used for exported diagnostics,
    /// not for the energy quadrature.
    pub fn node_gradient(&self) -> Vec<f64> {
        let n = self.grid.intervals();
        let h = self.grid.spacing();
        let u = &self.values;
        let mut g = vec![0.0; n + 1];
        g[0] = (u[1] - u[0]) / h;
        g[n] = (u[n] - u[n - 1]) / h;
        for i in 1..n {
            g[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
        }
        g
    }

    /// Natural norm of X = W^{1,4} cap W^{1,2}:
    /// (|grad u|_4 + |u|_4) + (|grad u|_2 + |u|_2).
    pub fn x_norm(&self) -> f64 {
        let b = crate::model::energy::breakdown(self, 3.0);
        let l4 = self.lq_norm_pow(4.0);
        (b.grad4.powf(0.25) + l4.powf(0.25)) + (b.grad2.sqrt() + b.mass.sqrt())
    }

    /// Equal-measure decreasing rearrangement.
    ///
    /// Sorts |u| against cumulative radial measure and resamples on the same
    /// grid. The measure partition is supersampled so the interpolation error
    /// stays below quadrature error. A diagnostic safeguard, not a descent
    /// step: the discrete Polya-Szego inequality is only approximate.
    pub fn rearrange_decreasing(&self) -> Self {
        if self.values.iter().all(|&v| v >= 0.0) && self.is_non_increasing(0.0) {
            return self.clone();
        }
        const SUPER: usize = 8;
        let grid = &self.grid;
        let n = grid.intervals();
        let h = grid.spacing();
        let surface = grid.surface();
        let nf = grid.dim() as f64;
        // Fine midpoint sampling of |u| with exact shell volumes.
        let m_fine = n * SUPER;
        let hf = h / SUPER as f64;
        let mut pairs: Vec<(f64, f64)> = (0..m_fine)
            .map(|i| {
                let r_lo = i as f64 * hf;
                let r_hi = r_lo + hf;
                let w = surface * (r_hi.powf(nf) - r_lo.powf(nf)) / nf;
                (self.interp(r_lo + 0.5 * hf).abs(), w)
            })
            .collect();
        pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let mut centers = Vec::with_capacity(m_fine);
        let mut acc = 0.0;
        for &(_, wi) in &pairs {
            centers.push(acc + 0.5 * wi);
            acc += wi;
        }
        // Cell-center measure coordinate of each grid node.
        let w = grid.weights();
        let nn = grid.node_count();
        let mut node_measure = Vec::with_capacity(nn);
        let mut acc2 = 0.0;
        for &wi in w {
            node_measure.push(acc2 + 0.5 * wi);
            acc2 += wi;
        }
        let mut values = Vec::with_capacity(nn);
        let mut k = 0usize;
        for &m in &node_measure {
            while k + 1 < centers.len() && centers[k + 1] < m {
                k += 1;
            }
            let v = if m <= centers[0] {
                pairs[0].0
            } else if k + 1 >= centers.len() {
                pairs[centers.len() - 1].0
            } else {
                let (m0, m1) = (centers[k], centers[k + 1]);
                let t = if m1 > m0 { (m - m0) / (m1 - m0) } else { 0.0 };
                pairs[k].0 * (1.0 - t) + pairs[k + 1].0 * t
            };
            values.push(v);
        }
        *values.last_mut().unwrap() = 0.0;
        let out = Self { grid: self.grid.clone(), values };
        // remove the fine-vs-node quadrature drift; rearrangement preserves mass
        let m0 = self.mass();
        let m1 = out.mass();
        if m0 > 0.0 && m1 > 0.0 {
            out.scaled((m0 / m1).sqrt())
        } else {
            out
        }
    }

    /// True when the profile is non-increasing in r up to `slack`.
    pub fn is_non_increasing(&self, slack: f64) -> bool {
        self.values.windows(2).all(|p| p[1] <= p[0] + slack)
    }
}

/// Centered Gaussian bump exp(-(r/sigma)^2) with mass c.
pub fn gaussian_bump(grid: &Arc<RadialGrid>, sigma: f64, c: f64) -> Result<RadialField> {
    let f = RadialField::from_fn(grid.clone(), |r| (-(r / sigma).powi(2)).exp());
    f.renormalize_mass(c)
}

/// Compactly supported raised-cosine bump of support width s with mass c.
/// Vanishes smoothly (value and slope) at r = s, so spread fields carry no
/// Dirichlet-edge kink.
pub fn cosine_bump(grid: &Arc<RadialGrid>, width: f64, c: f64) -> Result<RadialField> {
    let f = RadialField::from_fn(grid.clone(), move |r| {
        if r < width {
            0.5 * (1.0 + (std::f64::consts::PI * r / width).cos())
        } else {
            0.0
        }
    });
    f.renormalize_mass(c)
}
