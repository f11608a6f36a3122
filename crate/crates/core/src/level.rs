//! Level estimates from bubble rays, descent solvers for the Nehari and
//! constraint problems, and the splitting and subadditivity checks.

use serde::{Deserialize, Serialize};

use crate::bubbles::{bubble, default_exponent, spec_for};
use crate::constants::{
    choquard_constant, constraint_level_bound, nehari_level_bound, sobolev_constant_closed_form, ProblemParams,
};
use crate::error::{Error, Result};
use crate::radial::{dirichlet_gradient, power_integral, schwarz_rearrange, RadialField, SharedGrid};
use crate::riesz::KernelMatrix;
use crate::variational::{
    action_derivative, constraint_derivative, constraint_scale, energy_breakdown, evaluate, nehari_time, residual_from,
    EnergyBreakdown, Evaluation,
};

/// Relative margin below which "strictly below the bound" is not claimed.
pub const MARGIN_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct SolverOptions {
    pub max_iter: usize,
    pub tol_i: f64,
    pub tol_residual: f64,
    pub eta0: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            tol_i: 1e-10,
            tol_residual: 1e-4,
            eta0: 0.5,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if self.max_iter == 0 || !ok(self.tol_i) || !ok(self.tol_residual) || !ok(self.eta0) {
            return Err(Error::Config(format!(
                "solver options must be positive: maxIter = {}, tolI = {}, tolResidual = {}, eta0 = {}",
                self.max_iter, self.tol_i, self.tol_residual, self.eta0
            )));
        }
        Ok(())
    }
}

/// One entry of an ε-scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LevelSample {
    pub eps: f64,
    pub sigma: f64,
    /// Ray time: Nehari time, or t_ε with H(t_ε v_ε) = 1.
    pub t: Option<f64>,
    /// max_t I(t U_ε), or T(t_ε v_ε).
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_of_v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_of_v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DescentMonitor {
    /// I (Nehari) or T (constraint) after the start and each accepted step.
    pub history: Vec<f64>,
    pub monotone: bool,
    pub norm_sq_min: f64,
    pub norm_sq_max: f64,
    /// (c + 1)/(1/2 - max(1/2p, 1/q)) for the Nehari run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm_bound: Option<f64>,
    /// Smallest C with D <= C (S^{-(N+α)/(N-2)} A^{(N+α)/(N-2)} + S^{-N/(N-2)} A^{N/(N-2)}) along the run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LevelReport {
    pub level: f64,
    pub bound: f64,
    pub margin: f64,
    pub eps_used: Option<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub breakdown: EnergyBreakdown,
    pub passed: bool,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub samples: Vec<LevelSample>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub monitor: Option<DescentMonitor>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RayMaximum {
    pub t_star: f64,
    pub value: f64,
}

pub fn ray_maximum_from_breakdown(e: &EnergyBreakdown, params: &ProblemParams) -> Result<RayMaximum> {
    let t_star = nehari_time(e.h1_norm_sq(), e.b, e.c, params.p(), params.q())?;
    Ok(RayMaximum {
        t_star,
        value: e.amplitude_scaled(t_star, params).action_i,
    })
}

/// max_{t>=0} I(tu), attained at the Nehari time.
pub fn max_energy_along_ray(u: &RadialField, kernel: &KernelMatrix, params: &ProblemParams) -> Result<RayMaximum> {
    if u.is_zero() {
        return Err(Error::Degenerate("zero field".into()));
    }
    ray_maximum_from_breakdown(&energy_breakdown(u, kernel, params)?, params)
}

/// Limit of the bubble ray time as ε → 0.
pub fn ray_time_limit(params: &ProblemParams) -> Result<f64> {
    let p = params.p();
    let c0 = choquard_constant(params.n(), params.alpha())?;
    let s = sobolev_constant_closed_form(params.n())?;
    Ok(c0.powf(-1.0 / (2.0 * (p - 1.0))) * s.powf(-params.alpha() / (4.0 * (p - 1.0))))
}

fn scan_exponent(params: &ProblemParams, s_exponent: Option<f64>) -> Option<f64> {
    if params.n() == 4 {
        Some(s_exponent.unwrap_or_else(|| default_exponent(params)))
    } else {
        None
    }
}

fn passes(margin: f64, bound: f64) -> bool {
    margin > MARGIN_FRACTION * bound
}

/// Upper bound for the Nehari level: min over ε of max_t I(t U_ε).
pub fn verify_nehari_level(
    params: &ProblemParams,
    grid: &SharedGrid,
    kernel: &KernelMatrix,
    eps_list: &[f64],
    s_exponent: Option<f64>,
) -> Result<LevelReport> {
    params.require_existence_regime()?;
    if eps_list.is_empty() {
        return Err(Error::Config("eps list is empty".into()));
    }
    let s = scan_exponent(params, s_exponent);
    let bound = nehari_level_bound(params)?;
    let mut samples = Vec::with_capacity(eps_list.len());
    let mut best: Option<(usize, RadialField, RayMaximum)> = None;
    for (k, &eps) in eps_list.iter().enumerate() {
        let spec = spec_for(params, eps, s)?;
        let u = bubble(grid, &spec)?;
        let ray = max_energy_along_ray(&u, kernel, params)?;
        samples.push(LevelSample {
            eps,
            sigma: spec.sigma,
            t: Some(ray.t_star),
            value: Some(ray.value),
            t_of_v: None,
            b_of_v: None,
            h_error: None,
        });
        if best.as_ref().is_none_or(|(_, _, b)| ray.value < b.value) {
            best = Some((k, u, ray));
        }
    }
    let (k, u, ray) = best.expect("eps list is not empty");
    let top = u.scaled(ray.t_star)?;
    let eval = evaluate(&top, kernel, params)?;
    let margin = bound - ray.value;
    Ok(LevelReport {
        level: ray.value,
        bound,
        margin,
        eps_used: Some(eps_list[k]),
        iterations: eps_list.len(),
        residual: residual_from(&top, &eval, params),
        breakdown: eval.breakdown,
        passed: passes(margin, bound),
        samples,
        monitor: None,
    })
}

/// Projected Sobolev-gradient descent for inf I over the Nehari manifold.
pub fn minimize_nehari(
    params: &ProblemParams,
    kernel: &KernelMatrix,
    start: &RadialField,
    opts: &SolverOptions,
) -> Result<(RadialField, LevelReport)> {
    opts.validate()?;
    if start.is_zero() {
        return Err(Error::Degenerate("descent needs a nonzero start".into()));
    }
    let grid = start.grid().clone();
    let bound = nehari_level_bound(params)?;
    let kappa = params.coercivity();

    let first = evaluate(start, kernel, params)?;
    let (mut u, mut eval) = project(start.values(), &first, params, &grid)?;
    let mut history = vec![eval.breakdown.action_i];
    let norm_bound = (eval.breakdown.action_i + 1.0) / kappa;
    let mut norm_min = eval.breakdown.h1_norm_sq();
    let mut norm_max = norm_min;
    let mut eta = opts.eta0;
    let mut last_drop = f64::INFINITY;

    for iter in 0..opts.max_iter {
        let dual = action_derivative(&u, &eval, params);
        let g = grid.solve_h1(&dual);
        let residual = residual_of(&dual, &g, &eval.breakdown);
        let level = eval.breakdown.action_i;
        if last_drop < opts.tol_i * level.abs() && residual < opts.tol_residual {
            return Ok(nehari_result(
                u, eval, iter, residual, bound, history, norm_min, norm_max, norm_bound,
            ));
        }
        loop {
            if eta < 1e-14 * opts.eta0 {
                if residual < opts.tol_residual {
                    return Ok(nehari_result(
                        u, eval, iter, residual, bound, history, norm_min, norm_max, norm_bound,
                    ));
                }
                return Err(Error::Stagnation(format!(
                    "no decrease of I along the projected gradient at iteration {iter}: I = {level}, residual = {residual:e}"
                )));
            }
            let trial: Vec<f64> = u.values().iter().zip(&g).map(|(a, b)| a - eta * b).collect();
            match try_project(&trial, kernel, params, &grid) {
                Ok((v, ev)) if ev.breakdown.action_i <= level => {
                    last_drop = level - ev.breakdown.action_i;
                    u = v;
                    eval = ev;
                    eta *= 1.2;
                    break;
                }
                Ok(_) | Err(Error::Degenerate(_)) | Err(Error::Bracket(_)) => eta *= 0.5,
                Err(e) => return Err(e),
            }
        }
        let norm = eval.breakdown.h1_norm_sq();
        norm_min = norm_min.min(norm);
        if eval.breakdown.action_i <= history[0] + 1.0 {
            norm_max = norm_max.max(norm);
        }
        history.push(eval.breakdown.action_i);
    }
    let dual = action_derivative(&u, &eval, params);
    let g = grid.solve_h1(&dual);
    Err(Error::Convergence(format!(
        "Nehari descent did not converge in {} iterations: I = {}, last decrease = {last_drop:e}, residual = {:e}",
        opts.max_iter,
        eval.breakdown.action_i,
        residual_of(&dual, &g, &eval.breakdown)
    )))
}

#[allow(clippy::too_many_arguments)]
fn nehari_result(
    u: RadialField,
    eval: Evaluation,
    iterations: usize,
    residual: f64,
    bound: f64,
    history: Vec<f64>,
    norm_sq_min: f64,
    norm_sq_max: f64,
    norm_bound: f64,
) -> (RadialField, LevelReport) {
    let level = eval.breakdown.action_i;
    let margin = bound - level;
    let monotone = history.windows(2).all(|w| w[1] <= w[0]);
    let report = LevelReport {
        level,
        bound,
        margin,
        eps_used: None,
        iterations,
        residual,
        breakdown: eval.breakdown,
        passed: margin > 0.0,
        samples: Vec::new(),
        monitor: Some(DescentMonitor {
            history,
            monotone,
            norm_sq_min,
            norm_sq_max,
            norm_bound: Some(norm_bound),
            d_constant: None,
        }),
    };
    (u, report)
}

fn residual_of(dual: &[f64], riesz: &[f64], e: &EnergyBreakdown) -> f64 {
    let sq: f64 = dual.iter().zip(riesz).map(|(a, b)| a * b).sum();
    sq.max(0.0).sqrt() / e.h1_norm_sq().sqrt()
}

// Rescales onto the Nehari manifold using the exact amplitude laws, so the
// potential of t*w is t^p times that of w.
fn project(
    values: &[f64],
    eval: &Evaluation,
    params: &ProblemParams,
    grid: &SharedGrid,
) -> Result<(RadialField, Evaluation)> {
    let e = &eval.breakdown;
    let t = nehari_time(e.h1_norm_sq(), e.b, e.c, params.p(), params.q())?;
    let field = RadialField::new(grid, values.iter().map(|v| t * v).collect())?;
    let factor = t.powf(params.p());
    Ok((
        field,
        Evaluation {
            breakdown: e.amplitude_scaled(t, params),
            potential: eval.potential.iter().map(|v| factor * v).collect(),
        },
    ))
}

fn try_project(
    values: &[f64],
    kernel: &KernelMatrix,
    params: &ProblemParams,
    grid: &SharedGrid,
) -> Result<(RadialField, Evaluation)> {
    let w = RadialField::new(grid, values.to_vec())?;
    if w.is_zero() {
        return Err(Error::Degenerate("step reached the zero field".into()));
    }
    let eval = evaluate(&w, kernel, params)?;
    project(values, &eval, params, grid)
}

/// Upper bound for the constraint level from normalized bubbles v_ε scaled
/// onto {H = 1} inside the admissible amplitude bracket.
pub fn verify_constraint_level(
    params: &ProblemParams,
    grid: &SharedGrid,
    kernel: &KernelMatrix,
    eps_list: &[f64],
    s_exponent: Option<f64>,
) -> Result<LevelReport> {
    params.require_existence_regime()?;
    if eps_list.is_empty() {
        return Err(Error::Config("eps list is empty".into()));
    }
    let s = scan_exponent(params, s_exponent);
    let (lo, hi) = constraint_bracket(params)?;
    let bound = constraint_level_bound(params)?;
    let critical = params.critical_exponent();
    let mut samples = Vec::with_capacity(eps_list.len());
    let mut best: Option<(usize, RadialField, EnergyBreakdown)> = None;
    for (k, &eps) in eps_list.iter().enumerate() {
        let spec = spec_for(params, eps, s)?;
        let u = bubble(grid, &spec)?;
        let norm = power_integral(&u, critical)?.powf(1.0 / critical);
        let v = u.scaled(1.0 / norm)?;
        let ev = energy_breakdown(&v, kernel, params)?;
        let mut sample = LevelSample {
            eps,
            sigma: spec.sigma,
            t: None,
            value: None,
            t_of_v: Some(ev.half_dirichlet_t),
            b_of_v: Some(ev.b),
            h_error: None,
        };
        if let Some(t) = constraint_amplitude(&ev, params, lo, hi) {
            let field = v.scaled(t)?;
            let e = energy_breakdown(&field, kernel, params)?;
            sample.t = Some(t);
            sample.value = Some(e.half_dirichlet_t);
            sample.h_error = Some((e.constraint_h - 1.0).abs());
            if best
                .as_ref()
                .is_none_or(|(_, _, b)| e.half_dirichlet_t < b.half_dirichlet_t)
            {
                best = Some((k, field, e));
            }
        }
        samples.push(sample);
    }
    let Some((k, field, e)) = best else {
        return Err(Error::Infeasible(format!(
            "H(t v_eps) = 1 has no root with t in [{lo}, {hi}] for any eps in {eps_list:?}"
        )));
    };
    let eval = evaluate(&field, kernel, params)?;
    let margin = bound - e.half_dirichlet_t;
    Ok(LevelReport {
        level: e.half_dirichlet_t,
        bound,
        margin,
        eps_used: Some(eps_list[k]),
        iterations: eps_list.len(),
        residual: constraint_residual(&field, &eval, params),
        breakdown: e,
        passed: passes(margin, bound),
        samples,
        monitor: None,
    })
}

/// [(p/C₀)^{1/2p}, (2p/C₀)^{1/2p}]
pub fn constraint_bracket(params: &ProblemParams) -> Result<(f64, f64)> {
    let p = params.p();
    let c0 = choquard_constant(params.n(), params.alpha())?;
    Ok(((p / c0).powf(0.5 / p), (2.0 * p / c0).powf(0.5 / p)))
}

/// t in [lo, hi] with H(t v) = 1, if H - 1 changes sign on the bracket.
fn constraint_amplitude(e: &EnergyBreakdown, params: &ProblemParams, lo: f64, hi: f64) -> Option<f64> {
    let h = |t: f64| e.amplitude_scaled(t, params).constraint_h - 1.0;
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (h(a), h(b));
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if h(mid).signum() == fa.signum() {
            a = mid;
        } else {
            b = mid;
        }
    }
    Some(0.5 * (a + b))
}

// H¹ norm of the tangential part of T' on {H = 1}, relative to ‖u‖_{H¹}.
fn constraint_residual(u: &RadialField, eval: &Evaluation, params: &ProblemParams) -> f64 {
    let (d, dual) = tangent_direction(u, eval, params);
    residual_of(&dual, &d, &eval.breakdown)
}

// Returns the Riesz representative d of the tangential derivative and that
// derivative itself.
fn tangent_direction(u: &RadialField, eval: &Evaluation, params: &ProblemParams) -> (Vec<f64>, Vec<f64>) {
    let grid = u.grid();
    let dt: Vec<f64> = dirichlet_gradient(u).iter().map(|g| 0.5 * g).collect();
    let dh = constraint_derivative(u, eval, params);
    let gt = grid.solve_h1(&dt);
    let gh = grid.solve_h1(&dh);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let denom = dot(&dh, &gh);
    let mu = if denom > 0.0 { dot(&dh, &gt) / denom } else { 0.0 };
    let d = gt.iter().zip(&gh).map(|(a, b)| a - mu * b).collect();
    let dual = dt.iter().zip(&dh).map(|(a, b)| a - mu * b).collect();
    (d, dual)
}

/// Minimizes T over {H = 1}: tangential gradient step, rearrangement, dilation
/// back onto the constraint; T never increases between accepted iterates.
pub fn minimize_constraint(
    params: &ProblemParams,
    kernel: &KernelMatrix,
    start: &RadialField,
    opts: &SolverOptions,
) -> Result<(RadialField, LevelReport)> {
    opts.validate()?;
    let b = energy_breakdown(start, kernel, params)?.b;
    if !(b > 0.0) {
        return Err(Error::Infeasible("constraint descent needs B(start) > 0".into()));
    }
    let grid = start.grid().clone();
    let bound = constraint_level_bound(params)?;
    let s = sobolev_constant_closed_form(params.n())?;
    let nf = params.n() as f64;
    let e1 = (nf + params.alpha()) / (nf - 2.0);
    let e2 = nf / (nf - 2.0);
    let d_ratio = |e: &EnergyBreakdown| e.d / (s.powf(-e1) * e.a.powf(e1) + s.powf(-e2) * e.a.powf(e2));

    let (_, mut u) = constraint_scale(start, kernel, params)?;
    let mut eval = evaluate(&u, kernel, params)?;
    let mut history = vec![eval.breakdown.half_dirichlet_t];
    let mut norm_min = eval.breakdown.h1_norm_sq();
    let mut norm_max = norm_min;
    let mut d_constant = d_ratio(&eval.breakdown);
    let mut eta = opts.eta0;

    for iter in 0..opts.max_iter {
        let level = eval.breakdown.half_dirichlet_t;
        let (d, _) = tangent_direction(&u, &eval, params);
        let accepted = loop {
            if eta < 1e-14 * opts.eta0 {
                break None;
            }
            let trial: Vec<f64> = u.values().iter().zip(&d).map(|(a, b)| a - eta * b).collect();
            match constraint_step(&trial, kernel, params, &grid) {
                Ok((v, ev)) if ev.breakdown.half_dirichlet_t <= level => break Some((v, ev)),
                Ok(_) | Err(Error::Infeasible(_)) | Err(Error::Convergence(_)) => eta *= 0.5,
                Err(e) => return Err(e),
            }
        };
        let Some((v, ev)) = accepted else {
            // Nothing lowers T any more; that is convergence only if the
            // tangential derivative is already negligible.
            let residual = constraint_residual(&u, &eval, params);
            if residual < opts.tol_residual {
                return Ok(constraint_result(
                    u, eval, iter, residual, bound, history, norm_min, norm_max, d_constant,
                ));
            }
            return Err(Error::Stagnation(format!(
                "rearrangement and dilation raise T for every step at iteration {iter}: T = {level}, residual = {residual:e}"
            )));
        };
        let drop = level - ev.breakdown.half_dirichlet_t;
        u = v;
        eval = ev;
        eta *= 1.2;
        history.push(eval.breakdown.half_dirichlet_t);
        let norm = eval.breakdown.h1_norm_sq();
        norm_min = norm_min.min(norm);
        norm_max = norm_max.max(norm);
        d_constant = d_constant.max(d_ratio(&eval.breakdown));
        if drop < opts.tol_i * level {
            let residual = constraint_residual(&u, &eval, params);
            return Ok(constraint_result(
                u,
                eval,
                iter + 1,
                residual,
                bound,
                history,
                norm_min,
                norm_max,
                d_constant,
            ));
        }
    }
    Err(Error::Convergence(format!(
        "constraint descent did not converge in {} iterations: T = {}",
        opts.max_iter, eval.breakdown.half_dirichlet_t
    )))
}

fn constraint_step(
    values: &[f64],
    kernel: &KernelMatrix,
    params: &ProblemParams,
    grid: &SharedGrid,
) -> Result<(RadialField, Evaluation)> {
    let w = RadialField::new(grid, values.to_vec())?;
    let (_, v) = constraint_scale(&schwarz_rearrange(&w)?, kernel, params)?;
    let eval = evaluate(&v, kernel, params)?;
    Ok((v, eval))
}

#[allow(clippy::too_many_arguments)]
fn constraint_result(
    u: RadialField,
    eval: Evaluation,
    iterations: usize,
    residual: f64,
    bound: f64,
    history: Vec<f64>,
    norm_sq_min: f64,
    norm_sq_max: f64,
    d_constant: f64,
) -> (RadialField, LevelReport) {
    let level = eval.breakdown.half_dirichlet_t;
    let margin = bound - level;
    let monotone = history.windows(2).all(|w| w[1] <= w[0]);
    let report = LevelReport {
        level,
        bound,
        margin,
        eps_used: None,
        iterations,
        residual,
        breakdown: eval.breakdown,
        passed: margin > 0.0 && monotone && (eval.breakdown.constraint_h - 1.0).abs() <= 1e-8,
        samples: Vec::new(),
        monitor: Some(DescentMonitor {
            history,
            monotone,
            norm_sq_min,
            norm_sq_max,
            norm_bound: None,
            d_constant: Some(d_constant),
        }),
    };
    (u, report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SplittingRow {
    pub eps: f64,
    pub b_sum: f64,
    pub b_difference: f64,
    pub delta: f64,
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SplittingReport {
    pub b_base: f64,
    pub rows: Vec<SplittingRow>,
    pub decreasing: bool,
    pub floor_met: bool,
    pub passed: bool,
}

/// Relative floor on the last defect δ for the splitting check.
pub const SPLITTING_FLOOR: f64 = 0.05;

/// δ = |B(u0 + U) - B(U) - B(u0)| with U the bubble of unit critical norm.
pub fn brezis_lieb_check(
    params: &ProblemParams,
    kernel: &KernelMatrix,
    u0: &RadialField,
    eps_list: &[f64],
) -> Result<SplittingReport> {
    if eps_list.is_empty() {
        return Err(Error::Config("eps list is empty".into()));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Config("eps values must be strictly decreasing".into()));
    }
    let grid = u0.grid();
    let critical = params.critical_exponent();
    let b_base = energy_breakdown(u0, kernel, params)?.b;
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let spec = spec_for(params, eps, None)?;
        let raw = bubble(grid, &spec)?;
        let bump = raw.scaled(1.0 / power_integral(&raw, critical)?.powf(1.0 / critical))?;
        let un = u0.combine(1.0, &bump, 1.0)?;
        let rest = un.combine(1.0, u0, -1.0)?;
        let b_sum = energy_breakdown(&un, kernel, params)?.b;
        let b_difference = energy_breakdown(&rest, kernel, params)?.b;
        let delta = (b_sum - b_difference - b_base).abs();
        rows.push(SplittingRow {
            eps,
            b_sum,
            b_difference,
            delta,
            relative: if b_base > 0.0 { delta / b_base } else { f64::NAN },
        });
    }
    let decreasing = rows.windows(2).all(|w| w[1].delta < w[0].delta);
    let last = rows.last().expect("eps list is not empty").delta;
    let floor_met = last < SPLITTING_FLOOR * b_base;
    Ok(SplittingReport {
        b_base,
        rows,
        decreasing,
        floor_met,
        passed: decreasing && floor_met,
    })
}

/// λ^{(N-2)/N} + (1-λ)^{(N-2)/N} - 1.
pub fn subadditivity_gap(lambda: f64, n: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Domain(format!("λ must lie in [0, 1], got {lambda}")));
    }
    if n < 3 {
        return Err(Error::Domain(format!("N must be at least 3, got {n}")));
    }
    let e = (n as f64 - 2.0) / n as f64;
    Ok(lambda.powf(e) + (1.0 - lambda).powf(e) - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ContradictionCheck {
    /// Positive root of ℓ = C₀ S^{-p} ℓ^p.
    pub ell: f64,
    /// ((p-1)/2p) ℓ, the least c compatible with ℓ <= C₀ S^{-p} ℓ^p.
    pub level: f64,
    pub bound: f64,
    pub relative_gap: f64,
}

/// If C(u_n) → 0 along a (PS)_c sequence, ‖u_n‖² and B(u_n) both tend to
/// ℓ = 2pc/(p-1), and the Sobolev-HLS chain forces ℓ <= C₀ S^{-p} ℓ^p. The
/// threshold is found numerically and compared with the closed-form bound.
pub fn contradiction_threshold(params: &ProblemParams) -> Result<ContradictionCheck> {
    let p = params.p();
    let c0 = choquard_constant(params.n(), params.alpha())?;
    let s = sobolev_constant_closed_form(params.n())?;
    let k = c0 * s.powf(-p);
    // ln of ℓ - kℓ^p = ℓ(1 - kℓ^{p-1}); sign of 1 - kℓ^{p-1}, decreasing in ℓ.
    let f = |x: f64| -(k.ln() + (p - 1.0) * x).exp_m1();
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while f(lo) <= 0.0 {
        lo *= 2.0;
        if lo < -1e4 {
            return Err(Error::Bracket("no lower bracket for the threshold".into()));
        }
    }
    while f(hi) >= 0.0 {
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::Bracket("no upper bracket for the threshold".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let ell = (0.5 * (lo + hi)).exp();
    let level = (p - 1.0) / (2.0 * p) * ell;
    let bound = nehari_level_bound(params)?;
    Ok(ContradictionCheck {
        ell,
        level,
        bound,
        relative_gap: (level - bound).abs() / bound,
    })
}
