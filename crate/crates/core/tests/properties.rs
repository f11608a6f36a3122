use std::sync::OnceLock;

use choquard::bubbles::slope_fit;
use choquard::io::{format_number, parse_csv};
use choquard::level::subadditivity_gap;
use choquard::radial::{dilate, power_integral, schwarz_rearrange, SharedGrid};
use choquard::variational::{energy_breakdown, fibering_g, nehari_project, nehari_time, EnergyBreakdown};
use choquard::{KernelMatrix, ProblemParams, RadialField, RadialGrid};
use proptest::prelude::*;

fn setup() -> &'static (SharedGrid, KernelMatrix, ProblemParams) {
    static CELL: OnceLock<(SharedGrid, KernelMatrix, ProblemParams)> = OnceLock::new();
    CELL.get_or_init(|| {
        let grid = RadialGrid::new(5, 1e-6, 1e4, 2048).unwrap().shared();
        let kernel = KernelMatrix::build(&grid, 2.0).unwrap();
        (grid, kernel, ProblemParams::new(5, 2.0, 3.0).unwrap())
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// a e^{-(r/w)²} + b e^{-((r² - c²)/(2cw'))²}
fn profile(grid: &SharedGrid, (a, w, b, c, w2): (f64, f64, f64, f64, f64)) -> RadialField {
    RadialField::from_fn(grid, |r| {
        a * (-(r / w).powi(2)).exp() + b * (-((r * r - c * c) / (2.0 * c * w2)).powi(2)).exp()
    })
    .unwrap()
}

fn profile_params() -> impl Strategy<Value = (f64, f64, f64, f64, f64)> {
    (0.2..1.5f64, 0.4..2.0f64, -1.0..1.0f64, 0.5..3.0f64, 0.3..1.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn amplitude_scaling_matches_recomputation(shape in profile_params(), t in 0.2..5.0f64) {
        let (grid, kernel, params) = setup();
        let u = profile(grid, shape);
        let e = energy_breakdown(&u, kernel, params).unwrap();
        let direct = energy_breakdown(&u.scaled(t).unwrap(), kernel, params).unwrap();
        let predicted = e.amplitude_scaled(t, params);
        for (x, y) in [(direct.a, predicted.a), (direct.b, predicted.b), (direct.c, predicted.c), (direct.d, predicted.d)] {
            prop_assert!(rel(x, y) < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn dilation_follows_the_scaling_law(shape in profile_params(), sigma in 0.5..2.0f64) {
        let (grid, kernel, params) = setup();
        let u = profile(grid, shape);
        let e = energy_breakdown(&u, kernel, params).unwrap();
        let direct = energy_breakdown(&dilate(&u, sigma).unwrap(), kernel, params).unwrap();
        let predicted = e.dilated(sigma, params);
        for (x, y) in [(direct.a, predicted.a), (direct.b, predicted.b), (direct.c, predicted.c), (direct.d, predicted.d)] {
            // Cubic interpolation in ln r; a thin shell costs O(h^4) per derivative.
            prop_assert!(rel(x, y) < 1e-3, "{x} vs {y}");
        }
    }

    #[test]
    fn rearrangement_is_decreasing_equimeasurable_and_idempotent(shape in profile_params()) {
        let (grid, _, params) = setup();
        let u = profile(grid, shape);
        let v = schwarz_rearrange(&u).unwrap();
        prop_assert!(v.values().windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(v.values().iter().all(|x| *x >= 0.0));
        let abs_u = u.map(f64::abs).unwrap();
        for q in [2.0, params.q()] {
            let (a, b) = (power_integral(&abs_u, q).unwrap(), power_integral(&v, q).unwrap());
            // u* has derivative kinks where shell levels meet the core, and the
            // node quadrature is only O(h^2) across a kink.
            prop_assert!(rel(b, a) < 1e-3, "q = {q}: {a} vs {b}");
        }
        let w = schwarz_rearrange(&v).unwrap();
        for (x, y) in w.values().iter().zip(v.values()) {
            prop_assert!((x - y).abs() <= 1e-8 * y.abs().max(1e-300));
        }
    }

    #[test]
    fn rearrangement_commutes_with_amplitude(shape in profile_params(), t in 0.1..10.0f64) {
        let (grid, _, _) = setup();
        let u = profile(grid, shape);
        let a = schwarz_rearrange(&u.scaled(t).unwrap()).unwrap();
        let b = schwarz_rearrange(&u).unwrap().scaled(t).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() <= 1e-10 * y.abs().max(1e-300));
        }
    }

    #[test]
    fn nehari_projection_lands_on_the_manifold(shape in profile_params()) {
        let (grid, kernel, params) = setup();
        let u = profile(grid, shape);
        let (t, w) = nehari_project(&u, kernel, params).unwrap();
        prop_assert!(t > 0.0);
        let e = energy_breakdown(&w, kernel, params).unwrap();
        prop_assert!(e.nehari_j.abs() <= 1e-10 * e.h1_norm_sq(), "J = {}", e.nehari_j);
    }

    #[test]
    fn nehari_time_is_the_unique_ray_point(
        a in 0.01..100.0f64,
        b in 0.01..100.0f64,
        c in 0.0..100.0f64,
        d in 0.01..100.0f64,
    ) {
        let params = setup().2;
        let e = EnergyBreakdown::from_parts(a, b, c, d, &params);
        let t = nehari_time(e.h1_norm_sq(), b, c, params.p(), params.q()).unwrap();
        let j = e.amplitude_scaled(t, &params).nehari_j;
        prop_assert!(j.abs() <= 1e-10 * t * t * e.h1_norm_sq());
        let g: Vec<f64> = (0..=600).map(|k| fibering_g(&e, 10f64.powf(-6.0 + 0.02 * k as f64), &params)).collect();
        let changes = g.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
        prop_assert_eq!(changes, 1);
    }

    #[test]
    fn subadditivity_gap_is_positive_and_symmetric(lambda in 1e-9..(1.0 - 1e-9), n in 3u32..16) {
        let g = subadditivity_gap(lambda, n).unwrap();
        prop_assert!(g > 0.0);
        prop_assert!((g - subadditivity_gap(1.0 - lambda, n).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn slope_fit_recovers_power_laws(k in -4.0..4.0f64, scale in 1e-3..1e3f64, x0 in 1e-3..1.0f64) {
        let pts: Vec<(f64, f64)> = (0..5).map(|i| {
            let x = x0 * 0.5f64.powi(i);
            (x, scale * x.powf(k))
        }).collect();
        let fit = slope_fit(&pts).unwrap();
        prop_assert!((fit.slope - k).abs() < 1e-10);
    }

    #[test]
    fn csv_numbers_round_trip(values in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 1..20)) {
        let mut text = String::from("v\r\n");
        for v in &values {
            text.push_str(&format_number(*v));
            text.push_str("\r\n");
        }
        let rows = parse_csv(&text, &["v"]).unwrap();
        let back: Vec<f64> = rows.into_iter().map(|r| r[0]).collect();
        prop_assert_eq!(back, values);
    }
}
