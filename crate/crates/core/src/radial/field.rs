use std::sync::Arc;

use crate::error::{Error, Result};

use super::grid::SharedGrid;

/// A radial profile sampled at the nodes of a grid. Values are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    grid: SharedGrid,
    values: Vec<f64>,
}

impl RadialField {
    pub fn new(grid: &SharedGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Data(format!(
                "field has {} values but the grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite value {} at r = {}",
                values[i],
                grid.nodes()[i]
            )));
        }
        Ok(Self {
            grid: Arc::clone(grid),
            values,
        })
    }

    pub fn zeros(grid: &SharedGrid) -> Self {
        Self {
            grid: Arc::clone(grid),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: &SharedGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().iter().map(|&r| f(r)).collect())
    }

    /// Volume-fraction indicator of the ball of given radius: 1 on fully
    /// covered nodes, fractional on the node straddling the radius, so that the
    /// discrete mass equals the exact volume of the shell [r_min, radius].
    pub fn ball_indicator(grid: &SharedGrid, radius: f64) -> Result<Self> {
        if !(radius > grid.r_min() && radius <= grid.r_max()) {
            return Err(Error::Domain(format!(
                "ball radius {radius} outside ({}, {}]",
                grid.r_min(),
                grid.r_max()
            )));
        }
        let nf = grid.dim() as f64;
        let target = (radius.powf(nf) - grid.r_min().powf(nf)) / nf;
        let mut acc = 0.0;
        let values = grid
            .weights()
            .iter()
            .map(|&w| {
                let v = ((target - acc) / w).clamp(0.0, 1.0);
                acc += v * w;
                v
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &SharedGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        self.map(|v| factor * v)
    }

    /// a*self + b*other on a shared grid.
    pub fn combine(&self, a: f64, other: &RadialField, b: f64) -> Result<Self> {
        self.grid.ensure_matches(&other.grid)?;
        Self::new(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        )
    }

    pub fn integrate(&self) -> Result<f64> {
        self.grid.integrate_values(&self.values)
    }

    /// ∫ f g over R^N.
    pub fn inner(&self, other: &RadialField) -> Result<f64> {
        self.grid.ensure_matches(&other.grid)?;
        let prod: Vec<f64> = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        self.grid.integrate_values(&prod)
    }

    /// u_σ(r) = u(r/σ) by a shift in ln r and 4-point Lagrange interpolation.
    /// Queries below r_min take u(r_min); queries beyond r_max are 0.
    pub fn dilate(&self, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Domain(format!("dilation factor must be positive, got {sigma}")));
        }
        let grid = &self.grid;
        let m = grid.len();
        let shift = sigma.ln() / grid.log_step();
        let u = &self.values;
        let values = (0..m)
            .map(|i| {
                let s = i as f64 - shift;
                if s <= 0.0 {
                    u[0]
                } else if s > (m - 1) as f64 {
                    0.0
                } else {
                    let j0 = ((s.floor() as usize).saturating_sub(1)).min(m - 4);
                    lagrange4(&u[j0..j0 + 4], s - j0 as f64)
                }
            })
            .collect();
        Self::new(grid, values)
    }
}

/// Cubic through (0,y0),(1,y1),(2,y2),(3,y3) evaluated at t.
fn lagrange4(y: &[f64], t: f64) -> f64 {
    let (a, b, c, d) = (t, t - 1.0, t - 2.0, t - 3.0);
    -y[0] * b * c * d / 6.0 + y[1] * a * c * d / 2.0 - y[2] * a * b * d / 2.0 + y[3] * a * b * c / 6.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::RadialGrid;

    fn grid(n: u32) -> SharedGrid {
        RadialGrid::new(n, 1e-6, 1e4, 2048).unwrap().shared()
    }

    #[test]
    fn rejects_nan_and_wrong_length() {
        let g = grid(5);
        let mut v = vec![0.0; g.len()];
        v[7] = f64::NAN;
        assert!(matches!(RadialField::new(&g, v), Err(Error::Data(_))));
        assert!(RadialField::new(&g, vec![0.0; 3]).is_err());
    }

    #[test]
    fn indicator_mass_is_exact() {
        let g = grid(5);
        let ind = RadialField::ball_indicator(&g, 1.0).unwrap();
        let pi = std::f64::consts::PI;
        let vol = ind.integrate().unwrap();
        assert!((vol - 8.0 * pi * pi / 15.0).abs() / vol < 1e-6);
        let g4 = grid(4);
        let vol4 = RadialField::ball_indicator(&g4, 1.0).unwrap().integrate().unwrap();
        assert!((vol4 - pi * pi / 2.0).abs() / vol4 < 1e-6);
    }

    #[test]
    fn dilate_identity_and_domain() {
        let g = grid(5);
        let u = RadialField::from_fn(&g, |r| (-r * r).exp()).unwrap();
        assert_eq!(u.dilate(1.0).unwrap(), u);
        assert!(matches!(u.dilate(0.0), Err(Error::Domain(_))));
        assert!(u.dilate(-2.0).is_err());
    }

    #[test]
    fn dilate_matches_closed_form() {
        let g = grid(5);
        let u = RadialField::from_fn(&g, |r| (1.0 + r * r).powf(-1.5)).unwrap();
        let v = u.dilate(1.7).unwrap();
        for (r, val) in g.nodes().iter().zip(v.values()) {
            let exact = (1.0 + (r / 1.7).powi(2)).powf(-1.5);
            assert!((val - exact).abs() < 1e-8, "r = {r}");
        }
    }
}
