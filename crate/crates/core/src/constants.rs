//! Closed-form constants: Riesz normalization, sharp HLS constant, the
//! Choquard constant C0, the Sobolev constant S and the two level thresholds.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma as gamma_unchecked;

use crate::error::{Error, Result};

/// Γ(x) for x > 0.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!(
            "gamma needs a positive finite argument, got {x}"
        )));
    }
    if x.fract() == 0.0 && x <= 21.0 {
        return Ok((2..x as u64).product::<u64>() as f64);
    }
    Ok(gamma_unchecked(x))
}

/// Euler beta function B(a, b) for a, b > 0.
pub fn beta(a: f64, b: f64) -> Result<f64> {
    Ok(gamma(a)? * gamma(b)? / gamma(a + b)?)
}

/// Surface area of the unit sphere in R^dim, 2π^{dim/2}/Γ(dim/2).
pub fn sphere_area(dim: f64) -> Result<f64> {
    Ok(2.0 * PI.powf(dim / 2.0) / gamma(dim / 2.0)?)
}

fn check_dim(n: u32) -> Result<()> {
    if n < 3 {
        return Err(Error::Domain(format!("dimension must be at least 3, got {n}")));
    }
    Ok(())
}

fn check_open(name: &str, v: f64, lo: f64, hi: f64) -> Result<()> {
    if !(v > lo && v < hi) {
        return Err(Error::Domain(format!("{name} = {v} must lie in ({lo}, {hi})")));
    }
    Ok(())
}

/// Normalization of the Riesz potential I_α = C̄|x|^{-(N-α)}.
pub fn riesz_normalization(n: u32, alpha: f64) -> Result<f64> {
    check_dim(n)?;
    let nf = n as f64;
    check_open("alpha", alpha, 0.0, nf)?;
    Ok(gamma((nf - alpha) / 2.0)? / (gamma(alpha / 2.0)? * PI.powf(nf / 2.0) * 2f64.powf(alpha)))
}

/// Sharp Hardy-Littlewood-Sobolev constant C(N, λ) on the diagonal s = r = 2N/(2N-λ).
pub fn hls_sharp_constant(n: u32, lambda: f64) -> Result<f64> {
    check_dim(n)?;
    let nf = n as f64;
    check_open("lambda", lambda, 0.0, nf)?;
    let ratio = gamma(nf / 2.0)? / gamma(nf)?;
    Ok(
        PI.powf(lambda / 2.0) * gamma((nf - lambda) / 2.0)? / gamma((2.0 * nf - lambda) / 2.0)?
            * ratio.powf(-(nf - lambda) / nf),
    )
}

/// C0, the best constant in B(u) <= C0 |u|_{2*}^{2p}.
pub fn choquard_constant(n: u32, alpha: f64) -> Result<f64> {
    check_dim(n)?;
    let nf = n as f64;
    check_open("alpha", alpha, 0.0, nf)?;
    let ratio = gamma(nf / 2.0)? / gamma(nf)?;
    Ok(
        (4.0 * PI).powf(-alpha / 2.0) * gamma((nf - alpha) / 2.0)? / gamma((nf + alpha) / 2.0)?
            * ratio.powf(-alpha / nf),
    )
}

/// Closed form of the Sobolev constant S.
pub fn sobolev_constant_closed_form(n: u32) -> Result<f64> {
    check_dim(n)?;
    let nf = n as f64;
    Ok(PI * nf * (nf - 2.0) * (gamma(nf / 2.0)? / gamma(nf)?).powf(2.0 / nf))
}

/// Sobolev constant S, cross-checked against quadrature of |∇U|² for the
/// instanton on a wide reference grid.
pub fn sobolev_constant(n: u32) -> Result<f64> {
    let s = sobolev_constant_closed_form(n)?;
    let grid = crate::radial::RadialGrid::new(n, 1e-8, 1e8, 4096)?.shared();
    let u = crate::bubbles::instanton(&grid)?;
    let quad = crate::radial::dirichlet_energy(&u)?;
    let exact = s.powf(n as f64 / 2.0);
    let rel = (quad - exact).abs() / exact;
    if rel > 1e-4 {
        return Err(Error::Consistency(format!(
            "Sobolev constant: quadrature {quad} vs closed form {exact} (relative gap {rel:e})"
        )));
    }
    Ok(s)
}

/// Problem parameters (N, α, q) with the upper critical exponent p = (N+α)/(N-2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProblemParams {
    n: u32,
    alpha: f64,
    p: f64,
    q: f64,
}

impl ProblemParams {
    pub fn new(n: u32, alpha: f64, q: f64) -> Result<Self> {
        check_dim(n)?;
        let nf = n as f64;
        check_open("alpha", alpha, 0.0, nf)?;
        check_open("q", q, 2.0, 2.0 * nf / (nf - 2.0))?;
        Ok(Self {
            n,
            alpha,
            p: (nf + alpha) / (nf - 2.0),
            q,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Critical Sobolev exponent 2N/(N-2).
    pub fn critical_exponent(&self) -> f64 {
        let nf = self.n as f64;
        2.0 * nf / (nf - 2.0)
    }

    /// N >= 5 with any subcritical q, or N = 4 with 3 < q < 4.
    pub fn in_existence_regime(&self) -> bool {
        match self.n {
            4 => self.q > 3.0 && self.q < 4.0,
            n => n >= 5,
        }
    }

    pub fn require_existence_regime(&self) -> Result<()> {
        if self.in_existence_regime() {
            return Ok(());
        }
        let hint = match self.n {
            3 => "dimension 3 is not covered; the existence result needs N >= 4".to_string(),
            4 => format!("N = 4 requires 3 < q < 4, got q = {}", self.q),
            _ => unreachable!(),
        };
        Err(Error::Regime(hint))
    }

    /// Coercivity constant 1/2 - max(1/(2p), 1/q) of I on the Nehari manifold.
    pub fn coercivity(&self) -> f64 {
        0.5 - (1.0 / (2.0 * self.p)).max(1.0 / self.q)
    }
}

/// Threshold below which the Nehari level is compact.
pub fn nehari_level_bound(params: &ProblemParams) -> Result<f64> {
    let p = params.p();
    let c0 = choquard_constant(params.n(), params.alpha())?;
    let s = sobolev_constant_closed_form(params.n())?;
    Ok((p - 1.0) / (2.0 * p) * c0.powf(-1.0 / (p - 1.0)) * s.powf(p / (p - 1.0)))
}

/// Threshold for the constrained level inf{T : H = 1}.
pub fn constraint_level_bound(params: &ProblemParams) -> Result<f64> {
    let p = params.p();
    let c0 = choquard_constant(params.n(), params.alpha())?;
    let s = sobolev_constant_closed_form(params.n())?;
    Ok(0.5 * s * (2.0 * p / c0).powf(1.0 / p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    #[serde(rename = "rieszNorm")]
    pub riesz_norm: f64,
    #[serde(rename = "hlsSharp")]
    pub hls_sharp: f64,
    #[serde(rename = "choquardC0")]
    pub choquard_c0: f64,
    #[serde(rename = "sobolevS")]
    pub sobolev_s: f64,
    #[serde(rename = "neharilevelBound")]
    pub nehari_level_bound: f64,
    #[serde(rename = "constraintLevelBound")]
    pub constraint_level_bound: f64,
}

impl ConstantsReport {
    pub fn compute(params: &ProblemParams) -> Result<Self> {
        let (n, alpha) = (params.n(), params.alpha());
        Ok(Self {
            riesz_norm: riesz_normalization(n, alpha)?,
            hls_sharp: hls_sharp_constant(n, n as f64 - alpha)?,
            choquard_c0: choquard_constant(n, alpha)?,
            sobolev_s: sobolev_constant(n)?,
            nehari_level_bound: nehari_level_bound(params)?,
            constraint_level_bound: constraint_level_bound(params)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn gamma_values() {
        assert_eq!(gamma(1.0).unwrap(), 1.0);
        assert!(rel(gamma(0.5).unwrap(), PI.sqrt()) < 1e-14);
        assert!(rel(gamma(5.0).unwrap(), 24.0) < 1e-14);
        assert!(matches!(gamma(0.0), Err(Error::Domain(_))));
        assert!(matches!(gamma(-1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn gamma_recurrence() {
        for k in 1..=100 {
            let x = k as f64 * 0.1;
            let lhs = gamma(x + 1.0).unwrap();
            assert!(rel(lhs, x * gamma(x).unwrap()) < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn riesz_normalization_examples() {
        assert!(rel(riesz_normalization(3, 2.0).unwrap(), 1.0 / (4.0 * PI)) < 1e-13);
        assert!(rel(riesz_normalization(5, 2.0).unwrap(), 1.0 / (8.0 * PI * PI)) < 1e-13);
        assert!(rel(riesz_normalization(4, 2.0).unwrap(), 1.0 / (4.0 * PI * PI)) < 1e-13);
        assert!(riesz_normalization(4, 4.0).is_err());
        assert!(riesz_normalization(4, 0.0).is_err());
    }

    #[test]
    fn hls_examples() {
        let v = hls_sharp_constant(4, 2.0).unwrap();
        assert!(rel(v, PI / 2.0 * 6f64.sqrt()) < 1e-13);
        // Γ(7/2) = 15√π/8, Γ(5/2) = 3√π/4
        let g72 = 15.0 * PI.sqrt() / 8.0;
        let g52 = 3.0 * PI.sqrt() / 4.0;
        let expect = PI.powf(1.5) / g72 * (g52 / 24.0).powf(-0.4);
        assert!(rel(hls_sharp_constant(5, 3.0).unwrap(), expect) < 1e-13);
        for n in 4..=6 {
            let v = hls_sharp_constant(n, n as f64 / 2.0).unwrap();
            assert!(v.is_finite() && v > 0.0);
        }
        assert!(hls_sharp_constant(5, 5.0).is_err());
    }

    #[test]
    fn choquard_constant_examples() {
        let v = choquard_constant(4, 2.0).unwrap();
        assert!(rel(v, 6f64.sqrt() / (8.0 * PI)) < 1e-13);
        assert!((choquard_constant(5, 2.0).unwrap() - 0.067513).abs() < 1e-6);
    }

    #[test]
    fn sobolev_examples() {
        assert!(rel(sobolev_constant(4).unwrap(), 8.0 * PI / 6f64.sqrt()) < 1e-13);
        assert!((sobolev_constant(5).unwrap() - 14.812).abs() < 1e-3);
        // S(3) = 3(π/2)^{4/3}
        assert!(rel(sobolev_constant(3).unwrap(), 3.0 * (PI / 2.0).powf(4.0 / 3.0)) < 1e-13);
    }

    #[test]
    fn level_bounds() {
        let p5 = ProblemParams::new(5, 2.0, 3.0).unwrap();
        let s5 = sobolev_constant_closed_form(5).unwrap();
        let b = nehari_level_bound(&p5).unwrap();
        assert!(rel(b, 2.0 / 7.0 * s5.powf(2.5)) < 1e-12);
        assert!((b - 241.2).abs() < 0.5);
        let p4 = ProblemParams::new(4, 2.0, 3.5).unwrap();
        let s4 = sobolev_constant_closed_form(4).unwrap();
        assert!(rel(nehari_level_bound(&p4).unwrap(), s4 * s4 / 3.0) < 1e-12);
        assert!(
            rel(
                constraint_level_bound(&p5).unwrap(),
                0.5 * s5 * (14.0 / 3.0 * s5).powf(3.0 / 7.0)
            ) < 1e-12
        );
        assert!(
            rel(
                constraint_level_bound(&p4).unwrap(),
                0.5 * s4 * (6.0 * s4).powf(1.0 / 3.0)
            ) < 1e-12
        );
    }

    #[test]
    fn params_validation_and_regime() {
        let p = ProblemParams::new(5, 2.0, 3.0).unwrap();
        assert_eq!(p.p(), 7.0 / 3.0);
        assert!(p.in_existence_regime());
        assert!(ProblemParams::new(5, 2.0, 10.0 / 3.0).is_err());
        assert!(ProblemParams::new(2, 1.0, 3.0).is_err());
        let low = ProblemParams::new(4, 2.0, 2.5).unwrap();
        assert!(!low.in_existence_regime());
        assert!(matches!(low.require_existence_regime(), Err(Error::Regime(_))));
        assert!(!ProblemParams::new(3, 2.0, 4.0).unwrap().in_existence_regime());
    }

    #[test]
    fn report_serializes_with_expected_keys() {
        let r = ConstantsReport::compute(&ProblemParams::new(5, 2.0, 3.0).unwrap()).unwrap();
        let v = serde_json::to_value(r).unwrap();
        for k in [
            "rieszNorm",
            "hlsSharp",
            "choquardC0",
            "sobolevS",
            "neharilevelBound",
            "constraintLevelBound",
        ] {
            assert!(v[k].as_f64().unwrap() > 0.0, "{k}");
        }
    }
}
