use std::ffi::CStr;
use std::ptr;

use choquard_ffi::*;

fn params() -> ChqParams {
    ChqParams {
        n: 5,
        alpha: 2.0,
        q: 3.0,
    }
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(chq_last_error()) }
        .to_string_lossy()
        .into_owned()
}

struct Setup {
    grid: *mut ChqGrid,
    kernel: *mut ChqKernel,
}

impl Setup {
    fn new(nodes: usize) -> Self {
        let mut grid = ptr::null_mut();
        let mut kernel = ptr::null_mut();
        unsafe {
            assert_eq!(chq_grid_new(5, 1e-6, 1e4, nodes, &mut grid), ChqStatus::Ok);
            assert_eq!(chq_kernel_build(grid, 2.0, &mut kernel), ChqStatus::Ok);
        }
        Self { grid, kernel }
    }
}

impl Drop for Setup {
    fn drop(&mut self) {
        unsafe {
            chq_kernel_free(self.kernel);
            chq_grid_free(self.grid);
        }
    }
}

#[test]
fn constants_match_the_library() {
    let mut c = ChqConstants::default();
    assert_eq!(unsafe { chq_constants(params(), &mut c) }, ChqStatus::Ok);
    assert!((c.choquard_c0 * c.sobolev_s - 1.0).abs() < 1e-10);
    assert!((c.choquard_c0 - 0.067513).abs() < 1e-6);
    let bad = ChqParams { n: 2, ..params() };
    assert_ne!(unsafe { chq_constants(bad, &mut c) }, ChqStatus::Ok);
    assert!(!last_error().is_empty());
}

#[test]
fn null_pointers_are_reported() {
    assert_eq!(
        unsafe { chq_constants(params(), ptr::null_mut()) },
        ChqStatus::NullPointer
    );
    assert!(last_error().contains("out"));
    let mut out = ChqBreakdown::default();
    assert_eq!(
        unsafe { chq_energy_breakdown(ptr::null(), ptr::null(), params(), &mut out) },
        ChqStatus::NullPointer
    );
    unsafe {
        chq_grid_free(ptr::null_mut());
        chq_field_free(ptr::null_mut());
        chq_kernel_free(ptr::null_mut());
    }
    assert_eq!(unsafe { chq_grid_len(ptr::null()) }, 0);
}

#[test]
fn grid_validation_maps_to_config() {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { chq_grid_new(5, 1.0, 0.5, 64, &mut g) }, ChqStatus::Config);
    assert!(g.is_null());
    assert!(last_error().contains("rMin"));
}

#[test]
fn fields_round_trip_and_breakdown() {
    let s = Setup::new(512);
    let m = unsafe { chq_grid_len(s.grid) };
    assert_eq!(m, 512);
    let mut nodes = vec![0.0; m];
    assert_eq!(unsafe { chq_grid_nodes(s.grid, nodes.as_mut_ptr(), m) }, ChqStatus::Ok);
    assert_eq!(
        unsafe { chq_grid_nodes(s.grid, nodes.as_mut_ptr(), m - 1) },
        ChqStatus::Data
    );
    let values: Vec<f64> = nodes.iter().map(|r| (-r * r).exp()).collect();
    let mut f = ptr::null_mut();
    assert_eq!(
        unsafe { chq_field_new(s.grid, values.as_ptr(), m, &mut f) },
        ChqStatus::Ok
    );
    let mut back = vec![0.0; m];
    assert_eq!(unsafe { chq_field_values(f, back.as_mut_ptr(), m) }, ChqStatus::Ok);
    assert_eq!(back, values);
    let mut e = ChqBreakdown::default();
    assert_eq!(
        unsafe { chq_energy_breakdown(f, s.kernel, params(), &mut e) },
        ChqStatus::Ok
    );
    assert!(e.a > 0.0 && e.b > 0.0 && e.c > 0.0 && e.d > 0.0);
    assert!((e.t - e.a / 2.0).abs() < 1e-15 * e.a);

    let mut t = 0.0;
    let mut projected = ptr::null_mut();
    assert_eq!(
        unsafe { chq_nehari_project(f, s.kernel, params(), &mut t, &mut projected) },
        ChqStatus::Ok
    );
    let mut ep = ChqBreakdown::default();
    unsafe { chq_energy_breakdown(projected, s.kernel, params(), &mut ep) };
    assert!(ep.j.abs() <= 1e-10 * (ep.a + ep.d));

    let mut sorted = ptr::null_mut();
    assert_eq!(unsafe { chq_schwarz_rearrange(f, &mut sorted) }, ChqStatus::Ok);
    let mut sv = vec![0.0; m];
    unsafe { chq_field_values(sorted, sv.as_mut_ptr(), m) };
    for (a, b) in sv.iter().zip(&values) {
        assert!((a - b).abs() <= 1e-8 * b.max(1e-300));
    }
    unsafe {
        chq_field_free(sorted);
        chq_field_free(projected);
        chq_field_free(f);
    }
}

#[test]
fn non_finite_values_are_data_errors() {
    let s = Setup::new(64);
    let mut values = vec![1.0; 64];
    values[3] = f64::NAN;
    let mut f = ptr::null_mut();
    assert_eq!(
        unsafe { chq_field_new(s.grid, values.as_ptr(), 64, &mut f) },
        ChqStatus::Data
    );
    assert!(f.is_null());
}

#[test]
fn level_checks_through_the_abi() {
    let s = Setup::new(1024);
    let eps = [0.1, 0.05, 0.025];
    let mut r = ChqLevelReport::default();
    let st = unsafe { chq_verify_nehari_level(s.grid, s.kernel, params(), eps.as_ptr(), eps.len(), f64::NAN, &mut r) };
    assert_eq!(st, ChqStatus::Ok);
    assert!(r.passed && r.margin > 0.0);
    assert!(eps.contains(&r.eps_used));

    let eps = [0.01, 0.005];
    let st =
        unsafe { chq_verify_constraint_level(s.grid, s.kernel, params(), eps.as_ptr(), eps.len(), f64::NAN, &mut r) };
    assert_eq!(st, ChqStatus::Ok);
    assert!(r.passed && (r.breakdown.h - 1.0).abs() <= 1e-8);

    let bad = ChqParams {
        n: 4,
        alpha: 2.0,
        q: 2.5,
    };
    let st = unsafe { chq_verify_nehari_level(s.grid, s.kernel, bad, eps.as_ptr(), eps.len(), f64::NAN, &mut r) };
    assert_eq!(st, ChqStatus::Regime);

    let big = [0.5];
    let st =
        unsafe { chq_verify_constraint_level(s.grid, s.kernel, params(), big.as_ptr(), big.len(), f64::NAN, &mut r) };
    assert_eq!(st, ChqStatus::Infeasible);
}

#[test]
fn nehari_descent_through_the_abi() {
    let s = Setup::new(1024);
    let mut start = ptr::null_mut();
    assert_eq!(unsafe { chq_field_bubble(s.grid, 0.1, 0.0, &mut start) }, ChqStatus::Ok);
    let mut out = ptr::null_mut();
    let mut r = ChqLevelReport::default();
    let st = unsafe {
        chq_minimize_nehari(
            s.kernel,
            start,
            params(),
            chq_solver_options_default(),
            &mut out,
            &mut r,
        )
    };
    assert_eq!(st, ChqStatus::Ok, "{}", last_error());
    assert!(r.residual < 1e-4 && r.margin > 0.0);
    assert!(r.eps_used.is_nan());
    unsafe {
        chq_field_free(out);
        chq_field_free(start);
    }
    let mut z = ptr::null_mut();
    let zeros = vec![0.0; 1024];
    unsafe { chq_field_new(s.grid, zeros.as_ptr(), 1024, &mut z) };
    let st = unsafe { chq_minimize_nehari(s.kernel, z, params(), chq_solver_options_default(), &mut out, &mut r) };
    assert_eq!(st, ChqStatus::Degenerate);
    unsafe { chq_field_free(z) };
}

#[test]
fn subadditivity_through_the_abi() {
    let mut g = 0.0;
    assert_eq!(unsafe { chq_subadditivity_gap(0.5, 5, &mut g) }, ChqStatus::Ok);
    assert!((g - (2.0 * 0.5f64.powf(0.6) - 1.0)).abs() < 1e-15);
    assert_eq!(unsafe { chq_subadditivity_gap(2.0, 5, &mut g) }, ChqStatus::Domain);
}

#[test]
fn header_declares_every_entry_point() {
    let header = include_str!("../include/choquard.h");
    for name in [
        "chq_last_error",
        "chq_constants",
        "chq_grid_new",
        "chq_grid_free",
        "chq_grid_len",
        "chq_grid_nodes",
        "chq_field_new",
        "chq_field_bubble",
        "chq_field_free",
        "chq_field_len",
        "chq_field_values",
        "chq_kernel_build",
        "chq_kernel_free",
        "chq_energy_breakdown",
        "chq_nehari_project",
        "chq_schwarz_rearrange",
        "chq_verify_nehari_level",
        "chq_verify_constraint_level",
        "chq_solver_options_default",
        "chq_minimize_nehari",
        "chq_subadditivity_gap",
    ] {
        let declared = header.contains(&format!(" {name}(")) || header.contains(&format!("*{name}("));
        assert!(declared, "{name} missing from header");
    }
    assert!(header.contains("CHQ_STATUS_NULL_POINTER = 14"));
}

#[test]
fn header_compiles_as_c99() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        "#include \"choquard.h\"\nint main(void) { ChqGrid *g = 0; return chq_grid_new(5, 1e-6, 1e4, 64, &g) == CHQ_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let out = match std::process::Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&src)
        .output()
    {
        Ok(out) => out,
        Err(e) => {
            eprintln!("skipping: no C compiler ({cc}: {e})");
            return;
        }
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
