//! Radial Riesz potential: the sphere-averaged kernel, its application to
//! radial densities, the nonlocal energy B(u) and a closed-form Newtonian
//! reference for α = 2.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::constants::{beta, riesz_normalization, sphere_area};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_segments, Tolerance};
use crate::radial::{RadialField, SharedGrid};

/// Angular integral ∫_0^π (1 + t² - 2t cos θ)^{-β} sin^{N-2} θ dθ for
/// 0 <= t <= 1, where β = (N-α)/2.
pub fn angular_profile(n: u32, alpha: f64, t: f64) -> Result<f64> {
    let nf = n as f64;
    if !(alpha > 0.0 && alpha < nf) {
        return Err(Error::Domain(format!("alpha = {alpha} must lie in (0, {nf})")));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("radius ratio {t} outside [0, 1]")));
    }
    let expo = -(nf - alpha) / 2.0;
    if t == 1.0 {
        if alpha <= 1.0 {
            return Err(Error::Unsupported(format!(
                "coincident radii need alpha > 1, got {alpha}"
            )));
        }
        return Ok(2f64.powf(alpha - 2.0) * beta((alpha - 1.0) / 2.0, (nf - 1.0) / 2.0)?);
    }
    let gap = 1.0 - t;
    let integrand = |theta: f64| {
        let half = (0.5 * theta).sin();
        (gap * gap + 4.0 * t * half * half).powf(expo) * theta.sin().powf(nf - 2.0)
    };
    // Grade breakpoints toward θ = 0 where the integrand varies on the scale 1 - t.
    let pi = std::f64::consts::PI;
    let mut breaks = vec![0.0];
    let mut b = 0.25 * gap;
    while b < 0.5 * pi {
        breaks.push(b);
        b *= 2.0;
    }
    breaks.push(pi);
    let tol = Tolerance {
        abs: 1e-15,
        rel: 1e-13,
        max_intervals: 10_000,
    };
    Ok(integrate_segments(integrand, &breaks, tol)?.value)
}

/// Dense table K(r_i, s_j) of the sphere-averaged Riesz kernel
/// C̄ ∮ |r e - s ω|^{-(N-α)} dω on a radial grid.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    grid: SharedGrid,
    alpha: f64,
    entries: Vec<f64>,
}

impl KernelMatrix {
    /// On a log-uniform grid min(r,s)/max(r,s) only takes the values
    /// e^{-kh}, so one angular integral per offset k suffices.
    pub fn build(grid: &SharedGrid, alpha: f64) -> Result<Self> {
        let n = grid.dim();
        let nf = n as f64;
        if !(alpha > 0.0 && alpha < nf) {
            return Err(Error::Domain(format!("alpha = {alpha} must lie in (0, {nf})")));
        }
        if alpha <= 1.0 {
            return Err(Error::Unsupported(format!(
                "the radial kernel is singular on the diagonal for alpha <= 1 (got {alpha})"
            )));
        }
        let m = grid.len();
        let h = grid.log_step();
        let profile: Vec<f64> = (0..m)
            .into_par_iter()
            .map(|k| {
                let t = if k == 0 { 1.0 } else { (-(k as f64) * h).exp() };
                angular_profile(n, alpha, t)
            })
            .collect::<Result<_>>()?;
        let prefactor = riesz_normalization(n, alpha)? * sphere_area(nf - 1.0)?;
        let decay: Vec<f64> = grid.nodes().iter().map(|r| r.powf(alpha - nf)).collect();
        let mut entries = vec![0.0; m * m];
        entries.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
            for (j, e) in row.iter_mut().enumerate() {
                *e = prefactor * decay[i.max(j)] * profile[i.abs_diff(j)];
            }
        });
        if let Some(bad) = entries.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(Error::Data(format!("kernel entry {bad} is not positive and finite")));
        }
        Ok(Self {
            grid: Arc::clone(grid),
            alpha,
            entries,
        })
    }

    pub fn grid(&self) -> &SharedGrid {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.grid.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.grid.len();
        &self.entries[i * m..(i + 1) * m]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// (I_α * f)(r_i) = Σ_j K_ij f_j w_j.
    pub fn apply(&self, f: &RadialField) -> Result<RadialField> {
        self.grid.ensure_matches(f.grid())?;
        RadialField::new(&self.grid, self.apply_values(f.values()))
    }

    pub(crate) fn apply_values(&self, f: &[f64]) -> Vec<f64> {
        let m = self.grid.len();
        let weighted: Vec<f64> = f.iter().zip(self.grid.weights()).map(|(a, w)| a * w).collect();
        self.entries
            .par_chunks(m)
            .map(|row| {
                let mut acc = 0.0;
                for (k, g) in row.iter().zip(&weighted) {
                    acc += k * g;
                }
                acc
            })
            .collect()
    }

    /// Writes the little-endian cache: N (u64), alpha (f64), M (u64),
    /// r_min (f64), r_max (f64), then M*M entries row-major.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let mut header = Vec::with_capacity(40);
        header.extend_from_slice(&(self.grid.dim() as u64).to_le_bytes());
        header.extend_from_slice(&self.alpha.to_le_bytes());
        header.extend_from_slice(&(self.grid.len() as u64).to_le_bytes());
        header.extend_from_slice(&self.grid.r_min().to_le_bytes());
        header.extend_from_slice(&self.grid.r_max().to_le_bytes());
        out.write_all(&header).map_err(|e| Error::io(path, e))?;
        for e in &self.entries {
            out.write_all(&e.to_le_bytes()).map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    /// Loads a cache written by [`KernelMatrix::save`]; the header must match
    /// the grid and alpha exactly.
    pub fn load(path: &Path, grid: &SharedGrid, alpha: f64) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut input = BufReader::new(file);
        let mut header = [0u8; 40];
        input.read_exact(&mut header).map_err(|e| Error::io(path, e))?;
        let word = |k: usize| <[u8; 8]>::try_from(&header[8 * k..8 * k + 8]).expect("8 bytes");
        let dim = u64::from_le_bytes(word(0));
        let cached_alpha = f64::from_le_bytes(word(1));
        let m = u64::from_le_bytes(word(2));
        let r_min = f64::from_le_bytes(word(3));
        let r_max = f64::from_le_bytes(word(4));
        if dim != grid.dim() as u64 || m != grid.len() as u64 || r_min != grid.r_min() || r_max != grid.r_max() {
            return Err(Error::GridMismatch(format!(
                "kernel cache {} was built for (N={dim}, {r_min}, {r_max}, {m})",
                path.display()
            )));
        }
        if cached_alpha != alpha {
            return Err(Error::Data(format!(
                "kernel cache {} has alpha = {cached_alpha}, expected {alpha}",
                path.display()
            )));
        }
        let m = m as usize;
        let mut bytes = vec![0u8; m * m * 8];
        input.read_exact(&mut bytes).map_err(|e| Error::io(path, e))?;
        let entries: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        if entries.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::Data(format!(
                "kernel cache {} holds invalid entries",
                path.display()
            )));
        }
        Ok(Self {
            grid: Arc::clone(grid),
            alpha,
            entries,
        })
    }
}

pub fn build_kernel(grid: &SharedGrid, alpha: f64) -> Result<KernelMatrix> {
    KernelMatrix::build(grid, alpha)
}

pub fn apply_riesz(kernel: &KernelMatrix, f: &RadialField) -> Result<RadialField> {
    kernel.apply(f)
}

/// I_α * |u|^p at the nodes, with |u|^p returned alongside.
pub(crate) fn potential(kernel: &KernelMatrix, u: &RadialField, p: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    kernel.grid().ensure_matches(u.grid())?;
    let density: Vec<f64> = u.values().iter().map(|v| v.abs().powf(p)).collect();
    if density.iter().any(|d| !d.is_finite()) {
        return Err(Error::Data("|u|^p overflows".into()));
    }
    let pot = kernel.apply_values(&density);
    Ok((pot, density))
}

/// B(u) = ∫ (I_α * |u|^p)|u|^p.
pub fn choquard_energy(kernel: &KernelMatrix, u: &RadialField, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("exponent p must be at least 1, got {p}")));
    }
    let (pot, density) = potential(kernel, u, p)?;
    let prod: Vec<f64> = pot.iter().zip(&density).map(|(a, b)| a * b).collect();
    u.grid().integrate_values(&prod)
}

/// Newtonian potential (α = 2) from the exact sphere average max(r,s)^{2-N},
/// using the grid weights and running sums.
pub fn newton_oracle(f: &RadialField) -> Result<RadialField> {
    let grid = f.grid();
    let n = grid.dim();
    let nf = n as f64;
    let scale = riesz_normalization(n, 2.0)? * grid.sphere_area();
    let m = grid.len();
    let r = grid.nodes();
    let mass: Vec<f64> = f.values().iter().zip(grid.weights()).map(|(a, w)| a * w).collect();
    let mut inner = vec![0.0; m];
    let mut acc = 0.0;
    for i in 0..m {
        acc += mass[i];
        inner[i] = acc;
    }
    let mut outer = vec![0.0; m];
    let mut acc = 0.0;
    for i in (0..m).rev() {
        outer[i] = acc;
        acc += mass[i] * r[i].powf(2.0 - nf);
    }
    let values = (0..m)
        .map(|i| scale * (r[i].powf(2.0 - nf) * inner[i] + outer[i]))
        .collect();
    RadialField::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::RadialGrid;
    use std::f64::consts::PI;

    // Sphere average of |e - tω|^{-2β} as a hypergeometric series:
    // B(1/2, (N-1)/2) 2F1(β, β - (N-2)/2; N/2; t²).
    fn hypergeometric_profile(n: u32, alpha: f64, t: f64) -> f64 {
        let nf = n as f64;
        let b = (nf - alpha) / 2.0;
        let (a1, a2, c) = (b, b - (nf - 2.0) / 2.0, nf / 2.0);
        let z = t * t;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 0..20_000 {
            let kf = k as f64;
            term *= (a1 + kf) * (a2 + kf) / ((c + kf) * (kf + 1.0)) * z;
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        beta(0.5, (nf - 1.0) / 2.0).unwrap() * sum
    }

    #[test]
    fn profile_matches_hypergeometric_series() {
        for (n, alpha) in [(4u32, 3.0), (5, 2.5), (5, 1.5), (6, 4.0), (4, 2.0)] {
            for t in [0.0, 0.1, 0.5, 0.8, 0.9] {
                let a = angular_profile(n, alpha, t).unwrap();
                let b = hypergeometric_profile(n, alpha, t);
                assert!((a - b).abs() / b < 1e-11, "N={n} alpha={alpha} t={t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn profile_is_continuous_at_coincidence() {
        let at_one = angular_profile(5, 2.5, 1.0).unwrap();
        let near = angular_profile(5, 2.5, 1.0 - 1e-9).unwrap();
        assert!((at_one - near).abs() / at_one < 1e-5);
        assert!(matches!(angular_profile(5, 0.8, 1.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn newton_entries_and_symmetry() {
        let grid = RadialGrid::new(5, 1e-3, 1e2, 256).unwrap().shared();
        let k = KernelMatrix::build(&grid, 2.0).unwrap();
        let scale = riesz_normalization(5, 2.0).unwrap() * grid.sphere_area();
        let r = grid.nodes();
        for i in (0..256).step_by(17) {
            for j in (0..256).step_by(13) {
                let exact = scale * r[i].max(r[j]).powi(-3);
                let e = k.entry(i, j);
                assert!((e - exact).abs() / exact < 1e-8);
                assert_eq!(e, k.entry(j, i));
            }
        }
    }

    #[test]
    fn newton_closed_form_two_to_one() {
        // Kernel at r = 2, s = 1 on a grid containing both radii.
        let grid = RadialGrid::new(5, 0.5, 4.0, 31).unwrap().shared();
        let k = KernelMatrix::build(&grid, 2.0).unwrap();
        let i = 20;
        let j = 10;
        assert!((grid.nodes()[i] - 2.0).abs() < 1e-12 && (grid.nodes()[j] - 1.0).abs() < 1e-12);
        let exact = 1.0 / (8.0 * PI * PI) * (8.0 * PI * PI / 3.0) / 8.0;
        assert!((k.entry(i, j) - exact).abs() / exact < 1e-8);
    }

    #[test]
    fn rejects_small_alpha() {
        let grid = RadialGrid::new(5, 1e-3, 1e2, 32).unwrap().shared();
        assert!(matches!(KernelMatrix::build(&grid, 1.0), Err(Error::Unsupported(_))));
        assert!(matches!(KernelMatrix::build(&grid, 0.5), Err(Error::Unsupported(_))));
        assert!(matches!(KernelMatrix::build(&grid, 5.0), Err(Error::Domain(_))));
    }

    #[test]
    fn generic_alpha_rows_are_finite() {
        let grid = RadialGrid::new(4, 1e-4, 1e3, 400).unwrap().shared();
        let k = KernelMatrix::build(&grid, 3.0).unwrap();
        let ones = RadialField::from_fn(&grid, |r| (-r).exp()).unwrap();
        let pot = k.apply(&ones).unwrap();
        assert!(pot.values().iter().all(|v| v.is_finite() && *v > 0.0));
    }

    #[test]
    fn indicator_potential_outside_the_ball() {
        let grid = RadialGrid::new(5, 1e-6, 1e4, 2048).unwrap().shared();
        let ind = RadialField::ball_indicator(&grid, 1.0).unwrap();
        let k = KernelMatrix::build(&grid, 2.0).unwrap();
        let pot = k.apply(&ind).unwrap();
        let oracle = newton_oracle(&ind).unwrap();
        for (i, r) in grid.nodes().iter().enumerate() {
            // skip the node whose cell straddles r = 1
            if *r > 1.01 {
                let exact = 1.0 / (15.0 * r.powi(3));
                assert!((pot.values()[i] - exact).abs() / exact < 1e-5, "r = {r}");
                assert!((oracle.values()[i] - exact).abs() / exact < 1e-5, "r = {r}");
            }
        }
    }

    #[test]
    fn zero_and_linearity() {
        let grid = RadialGrid::new(5, 1e-4, 1e3, 300).unwrap().shared();
        let k = KernelMatrix::build(&grid, 2.5).unwrap();
        let zero = RadialField::zeros(&grid);
        assert!(k.apply(&zero).unwrap().is_zero());
        assert!(newton_oracle(&zero).unwrap().is_zero());
        assert_eq!(choquard_energy(&k, &zero, 7.0 / 3.0).unwrap(), 0.0);
        let f = RadialField::from_fn(&grid, |r| (-r * r).exp()).unwrap();
        let g = RadialField::from_fn(&grid, |r| 1.0 / (1.0 + r).powi(6) * r.cos()).unwrap();
        let lhs = k.apply(&f.combine(2.0, &g, -0.5).unwrap()).unwrap();
        let rhs = k.apply(&f).unwrap().combine(2.0, &k.apply(&g).unwrap(), -0.5).unwrap();
        let scale = lhs.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (a, b) in lhs.values().iter().zip(rhs.values()) {
            assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn self_adjoint() {
        let grid = RadialGrid::new(5, 1e-4, 1e3, 300).unwrap().shared();
        let k = KernelMatrix::build(&grid, 2.5).unwrap();
        let f = RadialField::from_fn(&grid, |r| (-r * r).exp()).unwrap();
        let g = RadialField::from_fn(&grid, |r| (1.0 + r * r).powi(-3)).unwrap();
        let a = k.apply(&f).unwrap().inner(&g).unwrap();
        let b = f.inner(&k.apply(&g).unwrap()).unwrap();
        assert!((a - b).abs() / a.abs() < 1e-10);
    }

    #[test]
    fn cache_round_trip_and_header_check() {
        let grid = RadialGrid::new(5, 1e-3, 1e2, 64).unwrap().shared();
        let k = KernelMatrix::build(&grid, 2.5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kernel.bin");
        k.save(&path).unwrap();
        let back = KernelMatrix::load(&path, &grid, 2.5).unwrap();
        assert_eq!(back.entries(), k.entries());
        let other = RadialGrid::new(5, 1e-3, 1e2, 65).unwrap().shared();
        assert!(matches!(
            KernelMatrix::load(&path, &other, 2.5),
            Err(Error::GridMismatch(_))
        ));
        assert!(KernelMatrix::load(&path, &grid, 2.0).is_err());
        assert!(matches!(
            KernelMatrix::load(&dir.path().join("missing.bin"), &grid, 2.5),
            Err(Error::Io { .. })
        ));
    }
}
