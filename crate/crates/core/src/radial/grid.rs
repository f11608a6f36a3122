use std::sync::Arc;

use crate::constants::sphere_area;
use crate::error::{Error, Result};

/// Log-uniform radial grid on [r_min, r_max] with quadrature weights for
/// ∫ f(r) r^{N-1} dr.
///
/// Weights are the trapezoid rule in x = ln r with an end correction that
/// makes them integrate r^{N-1} exactly over the whole grid. The sphere area
/// is kept separately and applied by [`RadialGrid::integrate_values`].
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    dim: u32,
    r_min: f64,
    r_max: f64,
    log_step: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    // h * r_mid^{N-2} for each cell, r_mid the geometric midpoint
    cell_factors: Vec<f64>,
    sphere_area: f64,
}

pub type SharedGrid = Arc<RadialGrid>;

impl RadialGrid {
    pub const MIN_NODES: usize = 16;

    pub fn new(dim: u32, r_min: f64, r_max: f64, nodes: usize) -> Result<Self> {
        if dim < 3 {
            return Err(Error::Config(format!("grid dimension must be at least 3, got {dim}")));
        }
        if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
            return Err(Error::Config(format!(
                "grid needs 0 < rMin < rMax, got rMin = {r_min}, rMax = {r_max}"
            )));
        }
        if nodes < Self::MIN_NODES {
            return Err(Error::Config(format!(
                "grid needs at least {} nodes, got {nodes}",
                Self::MIN_NODES
            )));
        }
        let m = nodes;
        let nf = dim as f64;
        let h = (r_max / r_min).ln() / (m - 1) as f64;
        let mut radii: Vec<f64> = (0..m).map(|i| r_min * (i as f64 * h).exp()).collect();
        radii[m - 1] = r_max;

        let mut weights: Vec<f64> = radii.iter().map(|r| h * r.powf(nf)).collect();
        weights[0] *= 0.5;
        weights[m - 1] *= 0.5;
        // Trapezoid over-counts ∫ e^{Nx} dx by (e^{Nb} - e^{Na}) * kappa.
        let kappa = 0.5 * h / (0.5 * nf * h).tanh() - 1.0 / nf;
        weights[0] += kappa * r_min.powf(nf);
        weights[m - 1] -= kappa * r_max.powf(nf);

        let cell_factors = radii
            .windows(2)
            .map(|w| h * (w[0] * w[1]).sqrt().powf(nf - 2.0))
            .collect();

        Ok(Self {
            dim,
            r_min,
            r_max,
            log_step: h,
            nodes: radii,
            weights,
            cell_factors,
            sphere_area: sphere_area(nf)?,
        })
    }

    pub fn shared(self) -> SharedGrid {
        Arc::new(self)
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn log_step(&self) -> f64 {
        self.log_step
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cell_factors(&self) -> &[f64] {
        &self.cell_factors
    }

    pub fn sphere_area(&self) -> f64 {
        self.sphere_area
    }

    /// Same construction parameters, hence identical nodes and weights.
    pub fn matches(&self, other: &RadialGrid) -> bool {
        self.dim == other.dim && self.len() == other.len() && self.r_min == other.r_min && self.r_max == other.r_max
    }

    pub fn ensure_matches(&self, other: &RadialGrid) -> Result<()> {
        if self.matches(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "grid (N={}, {}, {}, {}) vs (N={}, {}, {}, {})",
                self.dim,
                self.r_min,
                self.r_max,
                self.len(),
                other.dim,
                other.r_min,
                other.r_max,
                other.len()
            )))
        }
    }

    /// ω_{N-1} Σ w_i f_i in ascending node order.
    pub fn integrate_values(&self, values: &[f64]) -> Result<f64> {
        debug_assert_eq!(values.len(), self.len());
        let mut acc = 0.0;
        for (w, f) in self.weights.iter().zip(values) {
            acc += w * f;
        }
        let total = self.sphere_area * acc;
        if !total.is_finite() {
            return Err(Error::Data("integral is not finite".into()));
        }
        Ok(total)
    }

    /// Solves (K + M) x = rhs where K is the second-order stiffness matrix and M
    /// the mass matrix of the discrete H^1 inner product
    /// ω Σ_cells r_mid^{N-2} (Δu Δv)/h + ω Σ_i w_i u_i v_i.
    pub fn solve_h1(&self, rhs: &[f64]) -> Vec<f64> {
        let m = self.len();
        debug_assert_eq!(rhs.len(), m);
        let omega = self.sphere_area;
        let h2 = self.log_step * self.log_step;
        let k: Vec<f64> = self.cell_factors.iter().map(|c| omega * c / h2).collect();
        let mut diag: Vec<f64> = self.weights.iter().map(|w| omega * w).collect();
        for (i, ki) in k.iter().enumerate() {
            diag[i] += ki;
            diag[i + 1] += ki;
        }
        // Thomas algorithm; the matrix is symmetric, diagonally dominant.
        let mut c_prime = vec![0.0; m];
        let mut d_prime = vec![0.0; m];
        c_prime[0] = -k[0] / diag[0];
        d_prime[0] = rhs[0] / diag[0];
        for i in 1..m {
            let sub = -k[i - 1];
            let denom = diag[i] - sub * c_prime[i - 1];
            if i < m - 1 {
                c_prime[i] = -k[i] / denom;
            }
            d_prime[i] = (rhs[i] - sub * d_prime[i - 1]) / denom;
        }
        let mut x = vec![0.0; m];
        x[m - 1] = d_prime[m - 1];
        for i in (0..m - 1).rev() {
            x[i] = d_prime[i] - c_prime[i] * x[i + 1];
        }
        x
    }
}
