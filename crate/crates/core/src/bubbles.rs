//! Talenti instanton, the concentrating family U_ε, the N = 4 perturbed
//! family U_ε^σ, energy scans over ε and log-log slope fits.

use serde::{Deserialize, Serialize};

use crate::constants::ProblemParams;
use crate::error::{Error, Result};
use crate::radial::{RadialField, SharedGrid};
use crate::riesz::KernelMatrix;
use crate::variational::{energy_breakdown, EnergyBreakdown};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BubbleSpec {
    pub n: u32,
    pub eps: f64,
    /// Extra decay exponent; 0 gives the unperturbed bubble.
    pub sigma: f64,
    pub s_exponent: Option<f64>,
}

impl BubbleSpec {
    pub fn new(n: u32, eps: f64, sigma: f64) -> Result<Self> {
        let spec = Self {
            n,
            eps,
            sigma,
            s_exponent: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// N = 4 family with σ = ε^s, which needs 4 - q < s < q - 2.
    pub fn with_exponent(params: &ProblemParams, eps: f64, s: f64) -> Result<Self> {
        check_exponent(params, s)?;
        let spec = Self {
            n: params.n(),
            eps,
            sigma: eps.powf(s),
            s_exponent: Some(s),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::Config(format!(
                "bubble dimension must be at least 3, got {}",
                self.n
            )));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Config(format!(
                "bubble scale must be positive, got {}",
                self.eps
            )));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!(
                "bubble perturbation must be nonnegative, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

fn check_exponent(params: &ProblemParams, s: f64) -> Result<()> {
    if params.n() != 4 {
        return Err(Error::Config(format!(
            "the exponent s applies to the N = 4 family only (N = {})",
            params.n()
        )));
    }
    let (lo, hi) = (4.0 - params.q(), params.q() - 2.0);
    if !(s > lo && s < hi) {
        return Err(Error::Config(format!(
            "s = {s} must lie in ({lo}, {hi}) for q = {}",
            params.q()
        )));
    }
    Ok(())
}

/// Midpoint of the admissible interval (4 - q, q - 2).
pub fn default_exponent(params: &ProblemParams) -> f64 {
    0.5 * ((4.0 - params.q()) + (params.q() - 2.0))
}

/// U(x) = [N(N-2)]^{(N-2)/4} (1 + |x|²)^{-(N-2)/2}.
pub fn instanton(grid: &SharedGrid) -> Result<RadialField> {
    bubble(grid, &BubbleSpec::new(grid.dim(), 1.0, 0.0)?)
}

/// ε^{(2-N)/2} [N(N-2)]^{(N-2)/4} (1 + |x|²/ε²)^{-(N-2+σ)/2}, sampled in closed form.
pub fn bubble(grid: &SharedGrid, spec: &BubbleSpec) -> Result<RadialField> {
    spec.validate()?;
    if spec.n != grid.dim() {
        return Err(Error::Config(format!(
            "bubble dimension {} differs from grid dimension {}",
            spec.n,
            grid.dim()
        )));
    }
    let nf = spec.n as f64;
    let amp = spec.eps.powf((2.0 - nf) / 2.0) * (nf * (nf - 2.0)).powf((nf - 2.0) / 4.0);
    let expo = -(nf - 2.0 + spec.sigma) / 2.0;
    let eps = spec.eps;
    RadialField::from_fn(grid, |r| {
        let x = r / eps;
        amp * (1.0 + x * x).powf(expo)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub r2: f64,
}

/// Least squares line through (ln x, ln y).
pub fn slope_fit(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::Data(format!(
            "slope fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some((x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::Data(format!("slope fit needs positive data, got ({x}, {y})")));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|(x, _)| x.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, y)| y.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Data("slope fit needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(SlopeFit { slope, r2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub eps: f64,
    pub sigma: f64,
    pub breakdown: EnergyBreakdown,
}

fn check_eps_list(eps_list: &[f64], min_len: usize) -> Result<()> {
    if eps_list.len() < min_len {
        return Err(Error::Config(format!(
            "need at least {min_len} values of eps, got {}",
            eps_list.len()
        )));
    }
    if let Some(e) = eps_list.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::Config(format!("eps values must be positive, got {e}")));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("eps values must be strictly decreasing".into()));
    }
    Ok(())
}

pub(crate) fn spec_for(params: &ProblemParams, eps: f64, s_exponent: Option<f64>) -> Result<BubbleSpec> {
    match s_exponent {
        Some(s) => BubbleSpec::with_exponent(params, eps, s),
        None => BubbleSpec::new(params.n(), eps, 0.0),
    }
}

/// Energy breakdown of U_ε (or U_ε^σ with σ = ε^s) for each ε, in input order.
pub fn bubble_scan(
    grid: &SharedGrid,
    kernel: &KernelMatrix,
    params: &ProblemParams,
    eps_list: &[f64],
    s_exponent: Option<f64>,
) -> Result<Vec<ScanRow>> {
    check_eps_list(eps_list, 3)?;
    eps_list
        .iter()
        .map(|&eps| {
            let spec = spec_for(params, eps, s_exponent)?;
            let u = bubble(grid, &spec)?;
            Ok(ScanRow {
                eps,
                sigma: spec.sigma,
                breakdown: energy_breakdown(&u, kernel, params)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSlopes {
    pub a: Option<SlopeFit>,
    pub b: Option<SlopeFit>,
    pub c: Option<SlopeFit>,
    pub d: Option<SlopeFit>,
}

/// Log-log slopes of each integral against ε.
pub fn scan_slopes(rows: &[ScanRow]) -> Result<ScanSlopes> {
    if rows.is_empty() {
        return Err(Error::Data("empty scan".into()));
    }
    let fit = |pick: fn(&EnergyBreakdown) -> f64| {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.eps, pick(&r.breakdown))).collect();
        slope_fit(&pts).ok()
    };
    Ok(ScanSlopes {
        a: fit(|e| e.a),
        b: fit(|e| e.b),
        c: fit(|e| e.c),
        d: fit(|e| e.d),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SigmaRow {
    pub sigma: f64,
    pub a: f64,
    pub b: f64,
    /// A(U) - A(U^σ)
    pub a_drop: f64,
    /// B(U) - B(U^σ)
    pub b_drop: f64,
    /// A(U^σ)^p/B(U^σ) - A(U)^p/B(U)
    pub ratio_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SigmaReport {
    pub a_unperturbed: f64,
    pub b_unperturbed: f64,
    pub rows: Vec<SigmaRow>,
    pub a_slope: Option<SlopeFit>,
    pub b_slope: Option<SlopeFit>,
    /// Empirical constants: max over σ of |ΔA|/σ, ΔB/σ and the ratio gap/σ.
    pub a_constant: f64,
    pub b_constant: f64,
    pub ratio_constant: f64,
}

/// How A and B of U^σ approach those of U as σ → 0 (N = 4).
pub fn sigma_perturbation_check(
    grid: &SharedGrid,
    kernel: &KernelMatrix,
    params: &ProblemParams,
    sigma_list: &[f64],
) -> Result<SigmaReport> {
    if params.n() != 4 {
        return Err(Error::Config(format!(
            "the σ-family check is for N = 4, got N = {}",
            params.n()
        )));
    }
    if sigma_list.is_empty() || sigma_list.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
        return Err(Error::Config("σ values must be nonnegative and finite".into()));
    }
    let p = params.p();
    let base = energy_breakdown(&instanton(grid)?, kernel, params)?;
    let base_ratio = base.a.powf(p) / base.b;
    let mut rows = Vec::with_capacity(sigma_list.len());
    for &sigma in sigma_list {
        let u = bubble(grid, &BubbleSpec::new(4, 1.0, sigma)?)?;
        let e = energy_breakdown(&u, kernel, params)?;
        rows.push(SigmaRow {
            sigma,
            a: e.a,
            b: e.b,
            a_drop: base.a - e.a,
            b_drop: base.b - e.b,
            ratio_gap: e.a.powf(p) / e.b - base_ratio,
        });
    }
    let positive: Vec<&SigmaRow> = rows.iter().filter(|r| r.sigma > 0.0).collect();
    let a_pts: Vec<(f64, f64)> = positive.iter().map(|r| (r.sigma, r.a_drop.abs())).collect();
    let b_pts: Vec<(f64, f64)> = positive.iter().map(|r| (r.sigma, r.b_drop)).collect();
    let constant = |f: &dyn Fn(&SigmaRow) -> f64| positive.iter().map(|r| f(r) / r.sigma).fold(0.0f64, f64::max);
    Ok(SigmaReport {
        a_unperturbed: base.a,
        b_unperturbed: base.b,
        a_slope: slope_fit(&a_pts).ok(),
        b_slope: slope_fit(&b_pts).ok(),
        a_constant: constant(&|r| r.a_drop.abs()),
        b_constant: constant(&|r| r.b_drop),
        ratio_constant: constant(&|r| r.ratio_gap),
        rows,
    })
}
