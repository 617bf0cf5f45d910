use proptest::prelude::*;
use sticky_heat::stochastic::{
    generator_check, ks_two_sample, mc_estimate, realize_sticky_from_reflected,
    simulate_reflected_rw, simulate_sticky_rw, sticky_from_reflected, simulate_reflected_bm,
    McMethod, TestFunction,
};
use sticky_heat::{InitialData, Profile};

#[test]
fn realized_walk_has_the_law_of_the_sticky_walk() {
    let (n, x0) = (50, 25);
    let horizon = (n * n) as f64;
    let paths = 20_000u64;
    let mut direct = Vec::with_capacity(paths as usize);
    let mut realized = Vec::with_capacity(paths as usize);
    for i in 0..paths {
        let x = simulate_sticky_rw(n, x0, horizon, i).unwrap();
        direct.push(*x.positions.last().unwrap());
        let y = simulate_reflected_rw(n, x0, horizon, 1_000_000 + i).unwrap();
        let z = realize_sticky_from_reflected(n, &y).unwrap();
        realized.push(z.position_at(horizon));
    }
    let ks = ks_two_sample(&direct, &realized);
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn generator_at_the_walls() {
    let f = TestFunction::cubic();
    let m = McMethod::StickyRw { n: 400 };
    for r in [0.0, 1.0] {
        let g = generator_check(&f, r, 0.05, 200_000, m, 31).unwrap();
        assert!(g.discrepancy < 3.0 * g.stderr + 0.05, "r = {r}: {g:?}");
    }
}

#[test]
fn generator_richardson_in_time() {
    // E f(B_t) - f(0) = t Af(0) + O(t^2): fit the quotient linearly in t
    let f = TestFunction::cubic();
    let m = McMethod::StickyRw { n: 400 };
    let ts = [0.1, 0.05, 0.025];
    let g: Vec<_> = ts
        .iter()
        .map(|&t| generator_check(&f, 0.0, t, 200_000, m, 32).unwrap())
        .collect();
    let tb = ts.iter().sum::<f64>() / 3.0;
    let sxx: f64 = ts.iter().map(|t| (t - tb).powi(2)).sum();
    let weights: Vec<f64> = ts.iter().map(|t| 1.0 / 3.0 - tb * (t - tb) / sxx).collect();
    let intercept: f64 = weights.iter().zip(&g).map(|(w, x)| w * x.estimate).sum();
    let se = weights.iter().zip(&g).map(|(w, x)| (w * x.stderr).powi(2)).sum::<f64>().sqrt();
    assert!((intercept - 0.5).abs() < 3.0 * se + 0.01, "{intercept} +- {se}");
}

#[test]
fn identity_is_outside_the_generator_domain() {
    let f = TestFunction::Polynomial { coeffs: vec![0.0, 1.0] };
    let e = generator_check(&f, 0.5, 0.05, 1000, McMethod::StickyRw { n: 50 }, 1).unwrap_err();
    assert!(e.is_config());
}

#[test]
fn sticky_wall_mass_is_positive() {
    let d = InitialData::new(Profile::Constant { c: 0.0 }, 1.0, 0.0).unwrap();
    let n = 20_000;
    let e = mc_estimate(0.5, 1.0, &d, n, McMethod::ReflectedTc { dt: 1e-3 }, 3).unwrap();
    assert!(e.mean * n as f64 >= 10.0);
}

#[test]
fn methods_agree_on_the_reference_mean() {
    let d = InitialData::new(Profile::Linear { a: 0.2, b: 0.6 }, 0.9, 0.1).unwrap();
    let a = mc_estimate(0.3, 0.4, &d, 20_000, McMethod::StickyRw { n: 100 }, 5).unwrap();
    let b = mc_estimate(0.3, 0.4, &d, 20_000, McMethod::ReflectedTc { dt: 1e-4 }, 6).unwrap();
    let se = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    assert!((a.mean - b.mean).abs() < 3.0 * se + 0.005, "{a:?} {b:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lattice_paths_are_well_formed(n in 1usize..30, frac in 0.0f64..=1.0, seed in any::<u64>()) {
        let x0 = (frac * (n + 1) as f64).round() as usize;
        let x = simulate_sticky_rw(n, x0, 50.0, seed).unwrap();
        prop_assert!(x.check_invariants().is_ok());
        let y = simulate_reflected_rw(n, x0, 50.0, seed).unwrap();
        prop_assert!(y.check_invariants().is_ok());
        let z = realize_sticky_from_reflected(n, &y).unwrap();
        prop_assert!(z.check_invariants().is_ok());
        let stretch = (2 * n - 1) as f64 * y.boundary_occupation.last().unwrap();
        prop_assert_eq!(*z.times.last().unwrap(), 50.0 + stretch);
    }

    #[test]
    fn time_changed_paths_are_well_formed(r in 0.0f64..=1.0, seed in any::<u64>()) {
        let p = simulate_reflected_bm(r, 0.2, 1e-3, seed).unwrap();
        prop_assert!(p.check_invariants().is_ok());
        let s = sticky_from_reflected(&p).unwrap();
        prop_assert!(s.check_invariants().is_ok());
        let l = *p.local_time.last().unwrap();
        prop_assert!((s.times.last().unwrap() - 0.2 - l).abs() < 1e-12);
    }

    #[test]
    fn estimates_are_bit_reproducible(seed in any::<u64>(), r in 0.0f64..=1.0) {
        let d = InitialData::reference();
        let m = McMethod::ReflectedTc { dt: 1e-3 };
        let a = mc_estimate(r, 0.1, &d, 100, m, seed).unwrap();
        let b = mc_estimate(r, 0.1, &d, 100, m, seed).unwrap();
        prop_assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        prop_assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
        prop_assert!((0.0..=1.0).contains(&a.mean) && a.stderr >= 0.0);
    }
}
