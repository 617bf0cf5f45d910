use proptest::prelude::*;
use sticky_heat::fd_oracle::{convergence_table, solve_fd, FDConfig, DEFAULT_STARTUP_STEPS};
use sticky_heat::field::max_principle_violation;
use sticky_heat::volterra::{residual_first_kind, solve_boundary};
use sticky_heat::{FieldSolution, InitialData, Profile, Regime, Side, TimeGrid, VolterraConfig};

fn smooth() -> InitialData {
    InitialData::new(
        Profile::Fourier {
            offset: 0.5,
            sine: vec![0.2, 0.1],
            cosine: vec![0.15],
        },
        0.3,
        0.6,
    )
    .unwrap()
}

#[test]
fn mirrored_data_swaps_the_traces() {
    let d = InitialData::new(Profile::Linear { a: 0.1, b: 0.7 }, 0.9, 0.2).unwrap();
    let grid = TimeGrid::uniform(0.6, 96).unwrap();
    let cfg = VolterraConfig::default();
    for regime in [Regime::Limit, Regime::Sigma(0.2)] {
        let a = solve_boundary(regime, &d, &grid, &cfg).unwrap();
        let b = solve_boundary(regime, &d.mirrored(), &grid, &cfg).unwrap().swapped();
        for side in [Side::Minus, Side::Plus] {
            for (x, y) in a.trace(side).iter().zip(b.trace(side)) {
                assert!((x - y).abs() < 1e-10, "{regime:?}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn sigma_traces_solve_the_first_kind_system() {
    let d = smooth();
    let grid = TimeGrid::graded(0.5, 256).unwrap();
    let cfg = VolterraConfig::default();
    let tr = solve_boundary(Regime::Sigma(0.1), &d, &grid, &cfg).unwrap();
    let res = residual_first_kind(&tr, &d, &cfg).unwrap();
    assert!(res < 5e-4, "{res}");
}

#[test]
fn limit_traces_converge_at_second_order() {
    let d = smooth();
    let cfg = VolterraConfig::default();
    let traces: Vec<_> = [64, 128, 256]
        .iter()
        .map(|&n| solve_boundary(Regime::Limit, &d, &TimeGrid::uniform(0.5, n).unwrap(), &cfg).unwrap())
        .collect();
    let diff = |a: &[f64], b: &[f64]| {
        (0..a.len())
            .map(|k| (a[k] - b[2 * k + 1]).abs())
            .fold(0.0, f64::max)
    };
    let d1 = diff(&traces[0].trace_minus, &traces[1].trace_minus);
    let d2 = diff(&traces[1].trace_minus, &traces[2].trace_minus);
    assert!(d2 <= 0.75 * d1, "{d1} {d2}");
}

#[test]
fn finite_differences_are_second_order_for_smooth_data() {
    let rows = convergence_table(
        &smooth(),
        Regime::Limit,
        0.5,
        &[(39, 40), (79, 80), (159, 160)],
        &[0.25, 0.5],
        DEFAULT_STARTUP_STEPS,
    )
    .unwrap();
    assert!(rows[2].order >= 1.8, "{rows:?}");
}

#[test]
fn finite_differences_recover_order_after_indicator_start() {
    let d = InitialData::new(Profile::Indicator { lo: 0.25, hi: 0.55 }, 0.0, 1.0).unwrap();
    for regime in [Regime::Limit, Regime::Sigma(0.1)] {
        let rows = convergence_table(
            &d,
            regime,
            0.4,
            &[(39, 40), (79, 80), (159, 160)],
            &[0.1, 0.2, 0.4],
            DEFAULT_STARTUP_STEPS,
        )
        .unwrap();
        assert!(rows[2].order >= 1.5, "{regime:?}: {rows:?}");
    }
}

#[test]
fn series_and_fd_agree_for_smooth_data() {
    let d = smooth();
    let grid = TimeGrid::uniform(0.5, 256).unwrap();
    let cfg = VolterraConfig::default();
    for regime in [Regime::Limit, Regime::Sigma(0.05), Regime::Dirichlet] {
        let sol = FieldSolution::solve(regime, &d, &grid, &cfg).unwrap();
        let fd = solve_fd(&d, &FDConfig::new(200, 1000, 0.5, regime)).unwrap();
        for &t in &[0.1, 0.3, 0.5] {
            for i in 0..=10 {
                let r = i as f64 / 10.0;
                let a = sol.evaluate_u(r, t).unwrap();
                let b = fd.sample(r, t).unwrap();
                assert!((a - b).abs() < 1e-3, "{regime:?} ({r}, {t}): {a} vs {b}");
            }
        }
    }
}

#[test]
fn rough_data_near_a_wall_needs_the_graded_grid() {
    let d = InitialData::new(Profile::Indicator { lo: 0.0599, hi: 0.4118 }, 0.9893, 0.0).unwrap();
    let cfg = VolterraConfig::default();
    let uniform = FieldSolution::solve(Regime::Sigma(0.05), &d, &TimeGrid::uniform(0.5, 64).unwrap(), &cfg);
    assert!(matches!(uniform, Err(sticky_heat::Error::Instability { .. })));
    let sol = FieldSolution::solve(Regime::Sigma(0.05), &d, &TimeGrid::graded(0.5, 64).unwrap(), &cfg).unwrap();
    let positions: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    assert!(max_principle_violation(&sol, &positions, &[0.1, 0.25, 0.5]).unwrap() < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn maximum_principle_holds(
        lo in 0.0f64..0.6,
        width in 0.1f64..0.4,
        vm in 0.0f64..=1.0,
        vp in 0.0f64..=1.0,
        sigma in prop_oneof![Just(None), (0.05f64..0.5).prop_map(Some)],
    ) {
        let d = InitialData::new(Profile::Indicator { lo, hi: lo + width }, vm, vp).unwrap();
        let regime = sigma.map_or(Regime::Limit, Regime::Sigma);
        // the graded grid resolves the initial layer of rough data at small sigma
        let sol = FieldSolution::solve(regime, &d, &TimeGrid::graded(0.5, 64).unwrap(), &VolterraConfig::default()).unwrap();
        let positions: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let v = max_principle_violation(&sol, &positions, &[0.1, 0.25, 0.5]).unwrap();
        prop_assert!(v < 1e-3, "violation {}", v);
    }

    #[test]
    fn fd_mass_is_conserved(
        a in 0.0f64..0.5,
        b in 0.0f64..0.5,
        vm in 0.0f64..=1.0,
        vp in 0.0f64..=1.0,
        sigma in prop_oneof![Just(None), (0.05f64..0.5).prop_map(Some)],
    ) {
        let d = InitialData::new(Profile::Linear { a, b }, vm, vp).unwrap();
        let regime = sigma.map_or(Regime::Limit, Regime::Sigma);
        let fd = solve_fd(&d, &FDConfig::new(50, 100, 0.5, regime)).unwrap();
        let (step, total) = fd.mass_drift();
        prop_assert!(step < 1e-10 && total < 1e-6, "{} {}", step, total);
    }
}
