//! Radial discretization: grids, fields, the local integrals A, C, D,
//! dilation and symmetric decreasing rearrangement.

mod field;
mod grid;
mod rearrange;

pub use field::RadialField;
pub use grid::{RadialGrid, SharedGrid};
pub use rearrange::schwarz_rearrange;

use crate::error::{Error, Result};

pub fn integrate(f: &RadialField) -> Result<f64> {
    f.integrate()
}

/// Derivatives du/d(ln r) at cell midpoints: fourth-order staggered
/// differences inside, first-order differences on the two end cells.
fn cell_slopes(u: &[f64], h: f64) -> Vec<f64> {
    let m = u.len();
    (0..m - 1)
        .map(|c| {
            if c == 0 || c + 2 == m {
                (u[c + 1] - u[c]) / h
            } else {
                (27.0 * (u[c + 1] - u[c]) - (u[c + 2] - u[c - 1])) / (24.0 * h)
            }
        })
        .collect()
}

/// A(u) = ∫ |∇u|².
pub fn dirichlet_energy(u: &RadialField) -> Result<f64> {
    let grid = u.grid();
    if grid.len() < 3 {
        return Err(Error::Config("Dirichlet energy needs at least 3 nodes".into()));
    }
    let slopes = cell_slopes(u.values(), grid.log_step());
    let mut acc = 0.0;
    for (c, d) in grid.cell_factors().iter().zip(&slopes) {
        acc += c * d * d;
    }
    let a = grid.sphere_area() * acc;
    if !a.is_finite() {
        return Err(Error::Data("Dirichlet energy is not finite".into()));
    }
    Ok(a)
}

/// Exact partial derivatives ∂A/∂u_k of the discrete Dirichlet energy.
pub(crate) fn dirichlet_gradient(u: &RadialField) -> Vec<f64> {
    let grid = u.grid();
    let h = grid.log_step();
    let m = u.len();
    let slopes = cell_slopes(u.values(), h);
    let omega = grid.sphere_area();
    let mut g = vec![0.0; m];
    for (c, (f, d)) in grid.cell_factors().iter().zip(&slopes).enumerate() {
        let s = 2.0 * omega * f * d;
        if c == 0 || c + 2 == m {
            g[c] -= s / h;
            g[c + 1] += s / h;
        } else {
            let inner = 27.0 / (24.0 * h);
            let outer = 1.0 / (24.0 * h);
            g[c - 1] += s * outer;
            g[c] -= s * inner;
            g[c + 1] += s * inner;
            g[c + 2] -= s * outer;
        }
    }
    g
}

/// ∫ |u|^q.
pub fn power_integral(u: &RadialField, q: f64) -> Result<f64> {
    if !(q > 1.0) {
        return Err(Error::Domain(format!("exponent must exceed 1, got {q}")));
    }
    let vals: Vec<f64> = u.values().iter().map(|v| v.abs().powf(q)).collect();
    u.grid().integrate_values(&vals)
}

/// D(u) = ∫ u².
pub fn mass_norm(u: &RadialField) -> Result<f64> {
    power_integral(u, 2.0)
}

pub fn dilate(u: &RadialField, sigma: f64) -> Result<RadialField> {
    u.dilate(sigma)
}
