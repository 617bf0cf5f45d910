//! Reflected Brownian motion on `[0, 1]` and its sticky time change.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::rng::path_rng;
use super::{PathMethod, PathRecord};
use crate::error::{Error, Result};

/// Width multiplier (in units of `sqrt(dt)`) for the downcrossing estimator.
pub const DOWNCROSSING_WIDTH: f64 = 4.0;

/// Expected overshoot of a Gaussian random walk over a level, in step
/// standard deviations: `-zeta(1/2) / sqrt(2 pi)`.
const OVERSHOOT: f64 = 0.5826;

/// How the boundary local time of a discretized path is accumulated.
///
/// Both estimators are normalized so that `L` is the clock stretch of the
/// sticky time change `s = t + L_t`: near a wall `L` grows like
/// `eps^-1 * (time spent within eps of the wall)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalTimeEstimator {
    /// `L += dt / eps` for every step starting within `eps = sqrt(dt)` of a wall.
    #[default]
    Occupation,
    /// `L += 2 w` for every passage of the wall distance from `2 eps` down to
    /// `eps`, with `eps = DOWNCROSSING_WIDTH * sqrt(dt)`. Sampling only at grid
    /// times overshoots both levels, so the effective band width is
    /// `w = eps + 2 * 0.5826 * sqrt(dt)`. Local time gathered before the wall
    /// distance first reaches `2 eps` is not counted.
    Downcrossing,
}

/// Billiard folding of the real line onto `[0, 1]`.
pub fn fold_map(q: f64) -> f64 {
    let m = q.rem_euclid(2.0);
    if m > 1.0 {
        2.0 - m
    } else {
        m
    }
}

#[inline]
fn wall_distance(v: f64) -> f64 {
    v.min(1.0 - v)
}

#[inline]
fn nearest_wall(v: f64) -> f64 {
    if v <= 0.5 {
        0.0
    } else {
        1.0
    }
}

fn check_step(r: f64, t_end: f64, dt: f64) -> Result<usize> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::config(format!("start r = {r} is outside [0, 1]")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::config(format!("dt = {dt} must be positive")));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::config(format!("t_end = {t_end} must be positive")));
    }
    Ok((t_end / dt).ceil().max(1.0) as usize)
}

/// Free Brownian path from `r` sampled at `0, dt, 2dt, ..., t_end` (the last
/// step may be shorter). Returns `(times, values)`.
pub fn free_path(r: f64, t_end: f64, dt: f64, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let n = (t_end / dt).ceil().max(1.0) as usize;
    let mut times = Vec::with_capacity(n + 1);
    let mut q = Vec::with_capacity(n + 1);
    let mut x = r;
    times.push(0.0);
    q.push(x);
    for k in 1..=n {
        let t = if k == n { t_end } else { k as f64 * dt };
        let h = t - times[k - 1];
        let z: f64 = StandardNormal.sample(rng);
        x += h.sqrt() * z;
        times.push(t);
        q.push(x);
    }
    (times, q)
}

/// Reflected Brownian motion from `r`: an Euler path of free motion folded
/// into `[0, 1]`, with the default occupation estimator for local time.
pub fn simulate_reflected_bm(r: f64, t_end: f64, dt: f64, seed: u64) -> Result<PathRecord> {
    simulate_reflected_bm_with(r, t_end, dt, seed, LocalTimeEstimator::Occupation)
}

pub fn simulate_reflected_bm_with(
    r: f64,
    t_end: f64,
    dt: f64,
    seed: u64,
    estimator: LocalTimeEstimator,
) -> Result<PathRecord> {
    check_step(r, t_end, dt)?;
    let mut rng = path_rng(seed, 0);
    let (times, q) = free_path(r, t_end, dt, &mut rng);
    let mut rec = PathRecord::empty(seed, PathMethod::ReflectedBm { dt, estimator });
    let eps = dt.sqrt();
    let eps_dc = DOWNCROSSING_WIDTH * eps;
    let band = eps_dc + 2.0 * OVERSHOOT * eps;
    let mut armed = wall_distance(fold_map(q[0])) >= 2.0 * eps_dc;
    let mut l = 0.0;
    let mut occ = 0.0;
    for k in 0..times.len() {
        let v = fold_map(q[k]);
        let d = wall_distance(v);
        if estimator == LocalTimeEstimator::Downcrossing {
            if d >= 2.0 * eps_dc {
                armed = true;
            } else if armed && d <= eps_dc {
                armed = false;
                l += 2.0 * band;
            }
        }
        rec.push(times[k], v, l, occ);
        if let Some(&next) = times.get(k + 1) {
            let h = next - times[k];
            if estimator == LocalTimeEstimator::Occupation && d < eps {
                l += h / eps;
            }
            if d == 0.0 {
                occ += h;
            }
        }
    }
    Ok(rec)
}

/// Two-sided Skorokhod map onto `[0, 1]` of a sampled path starting in `[0, 1]`.
///
/// Evaluates
/// `q(t) - [ (q(0) - 1)^+ ∧ inf_{u<=t} q(u) ] ∨ sup_{s<=t} [ (q(s) - 1) ∧ inf_{s<=u<=t} q(u) ]`
/// in one forward pass; the supremum obeys
/// `M_k = max(min(M_{k-1}, q_k), q_k - 1)`.
pub fn skorokhod_two_sided(q: &[f64]) -> Result<Vec<f64>> {
    let Some(&q0) = q.first() else {
        return Ok(Vec::new());
    };
    if !(0.0..=1.0).contains(&q0) {
        return Err(Error::domain(format!("path starts at {q0}, outside [0, 1]")));
    }
    let lead = (q0 - 1.0).max(0.0);
    let mut inf = q0;
    let mut sup = q0 - 1.0;
    let mut out = Vec::with_capacity(q.len());
    for &x in q {
        inf = inf.min(x);
        sup = sup.min(x).max(x - 1.0);
        let push = lead.min(inf).max(sup);
        out.push((x - push).clamp(0.0, 1.0));
    }
    Ok(out)
}

/// Sticky Brownian motion from a reflected path by the clock `s = t + L_t`.
///
/// Each step of the input is kept at its position for its own duration and
/// then followed by a stay at the nearest wall of length equal to the local
/// time gained during that step.
pub fn sticky_from_reflected(rf: &PathRecord) -> Result<PathRecord> {
    let (dt, estimator) = match rf.method {
        PathMethod::ReflectedBm { dt, estimator } => (dt, estimator),
        ref other => {
            return Err(Error::domain(format!(
                "expected a reflected Brownian path, got {other:?}"
            )))
        }
    };
    let mut rec = PathRecord::empty(rf.seed, PathMethod::StickyTimeChange { dt, estimator });
    let m = rf.times.len();
    let mut occ = 0.0;
    for k in 0..m {
        let (t, v, l) = (rf.times[k], rf.positions[k], rf.local_time[k]);
        let s = t + l;
        rec.push(s, v, l, occ);
        if k + 1 == m {
            break;
        }
        let h = rf.times[k + 1] - t;
        let gain = rf.local_time[k + 1] - l;
        if v == 0.0 || v == 1.0 {
            occ += h;
        }
        if gain > 0.0 {
            rec.push(s + h, nearest_wall(v), l, occ);
            occ += gain;
        }
    }
    Ok(rec)
}

/// Wall occupation of a path on `[0, upto)` estimated by sampling its
/// position on the grid `0, ds, 2ds, ...`.
pub fn sampled_wall_occupation(path: &PathRecord, upto: f64, ds: f64) -> f64 {
    let mut seg = 0;
    let mut total = 0.0;
    let mut j = 0u64;
    loop {
        let s = j as f64 * ds;
        if s >= upto {
            return total;
        }
        while seg + 1 < path.times.len() && path.times[seg + 1] <= s {
            seg += 1;
        }
        if path.is_boundary(path.positions[seg]) {
            total += ds;
        }
        j += 1;
    }
}

/// Position of sticky Brownian motion at time `t` built from a fresh
/// reflected path with step `dt` and the occupation estimator. Values are
/// exactly `0.0` or `1.0` during wall stays.
pub(crate) fn sticky_endpoint(r: f64, t: f64, dt: f64, rng: &mut ChaCha8Rng) -> f64 {
    let eps = dt.sqrt();
    let gain = dt / eps;
    let mut q = r;
    let mut s = 0.0;
    loop {
        let v = fold_map(q);
        if s + dt > t {
            return v;
        }
        s += dt;
        if wall_distance(v) < eps {
            if s + gain > t {
                return nearest_wall(v);
            }
            s += gain;
        }
        let z: f64 = StandardNormal.sample(rng);
        q += eps * z;
    }
}

/// Exact mean of the clock stretch `L_t` accrued by reflected Brownian motion
/// on `[0, 1]` from `r`.
///
/// With `V` reflected at both walls, Ito's formula for `(V - 1/2)^2` gives
/// `E L_t = 2 [ (r - 1/2)^2 + t - E (V_t - 1/2)^2 ]` in the normalization
/// where `L` grows like `eps^-1 * (time within eps of a wall)`, and the
/// Neumann eigen-expansion gives
/// `E (V_t - 1/2)^2 = 1/12 + sum_{k even} 4 e^{-k^2 pi^2 t / 2} cos(k pi r) / (k pi)^2`.
pub fn reflected_local_time_mean(r: f64, t: f64) -> f64 {
    use std::f64::consts::PI;
    let mut second = 1.0 / 12.0;
    let mut k = 2.0;
    loop {
        let decay = (-0.5 * k * k * PI * PI * t).exp();
        let term = 4.0 * decay * (k * PI * r).cos() / (k * PI).powi(2);
        second += term;
        if decay < 1e-18 || k > 1e6 {
            break;
        }
        k += 2.0;
    }
    2.0 * ((r - 0.5).powi(2) + t - second)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::rng::mean_stderr;
    use proptest::prelude::*;

    #[test]
    fn fold_examples() {
        assert!((fold_map(1.3) - 0.7).abs() < 1e-15);
        assert!((fold_map(-0.4) - 0.4).abs() < 1e-15);
        assert!((fold_map(2.5) - 0.5).abs() < 1e-15);
        assert_eq!(fold_map(0.0), 0.0);
        assert_eq!(fold_map(1.0), 1.0);
        assert_eq!(fold_map(2.0), 0.0);
    }

    proptest! {
        #[test]
        fn fold_range_and_symmetry(q in -50.0f64..50.0) {
            let v = fold_map(q);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert!((fold_map(-q) - v).abs() < 1e-12);
            prop_assert!((fold_map(q + 2.0) - v).abs() < 1e-12);
        }

        #[test]
        fn skorokhod_matches_recursive_projection(
            start in 0.0f64..=1.0,
            steps in proptest::collection::vec(-0.7f64..0.7, 1..200),
        ) {
            // for piecewise-constant input the constrained path is the
            // sequential clamp of the accumulated increments
            let mut q = vec![start];
            for s in &steps {
                q.push(q.last().unwrap() + s);
            }
            let z = skorokhod_two_sided(&q).unwrap();
            let mut y = start;
            for k in 1..q.len() {
                y = (y + q[k] - q[k - 1]).clamp(0.0, 1.0);
                prop_assert!((z[k] - y).abs() < 1e-12, "k = {}: {} vs {}", k, z[k], y);
            }
        }
    }

    #[test]
    fn skorokhod_identity_inside_and_pinning_below() {
        let inside: Vec<f64> = (0..100).map(|k| 0.5 + 0.3 * (k as f64 * 0.1).sin()).collect();
        assert_eq!(skorokhod_two_sided(&inside).unwrap(), inside);
        let falling: Vec<f64> = (0..100).map(|k| 0.4 - 0.05 * k as f64).collect();
        let z = skorokhod_two_sided(&falling).unwrap();
        for (k, &x) in falling.iter().enumerate() {
            if x <= 0.0 {
                assert_eq!(z[k], 0.0);
            } else {
                assert_eq!(z[k], x);
            }
        }
        assert!(skorokhod_two_sided(&[1.2, 0.5]).is_err());
    }

    #[test]
    fn interior_path_has_no_local_time() {
        // 20 steps of sd 1e-3 cannot leave (0.4, 0.6)
        let p = simulate_reflected_bm(0.5, 2e-5, 1e-6, 3).unwrap();
        assert!(p.positions.iter().all(|&v| (0.4..0.6).contains(&v)));
        assert_eq!(*p.local_time.last().unwrap(), 0.0);
        let s = sticky_from_reflected(&p).unwrap();
        assert_eq!(s.times, p.times);
        assert_eq!(s.positions, p.positions);
    }

    #[test]
    fn reflected_path_invariants() {
        for est in [LocalTimeEstimator::Occupation, LocalTimeEstimator::Downcrossing] {
            let p = simulate_reflected_bm_with(0.1, 1.0, 1e-3, 5, est).unwrap();
            p.check_invariants().unwrap();
            assert!(*p.local_time.last().unwrap() > 0.0);
        }
    }

    #[test]
    fn time_change_clock_is_time_plus_local_time() {
        let p = simulate_reflected_bm(0.05, 1.0, 1e-3, 8).unwrap();
        let s = sticky_from_reflected(&p).unwrap();
        s.check_invariants().unwrap();
        let t_end = *p.times.last().unwrap();
        let l_end = *p.local_time.last().unwrap();
        assert!((s.times.last().unwrap() - (t_end + l_end)).abs() < 1e-12);
        assert!((s.boundary_occupation.last().unwrap() - l_end).abs() < 1e-9);
    }

    #[test]
    fn sampled_occupation_tracks_local_time() {
        let dt = 1e-4;
        for seed in 0..5 {
            let p = simulate_reflected_bm(0.5, 1.0, dt, seed).unwrap();
            let s = sticky_from_reflected(&p).unwrap();
            let kappa = *s.times.last().unwrap();
            let l = *p.local_time.last().unwrap();
            let occ = sampled_wall_occupation(&s, kappa, dt);
            assert!((occ - l).abs() <= 0.05 * l, "seed {seed}: {occ} vs {l}");
        }
    }

    #[test]
    fn local_time_oracle_limits() {
        // t -> 0 from the interior: nothing accrues
        assert!(reflected_local_time_mean(0.5, 1e-4).abs() < 1e-10);
        // stationary growth: density 1 at each wall, eps^-1 * eps * t per wall
        let slope = reflected_local_time_mean(0.3, 5.0) - reflected_local_time_mean(0.3, 4.0);
        assert!((slope - 2.0).abs() < 1e-10);
    }

    #[test]
    fn estimators_agree_with_exact_local_time_mean() {
        let (t, dt, n) = (1.0, 1e-4, 600);
        for (r, est, budget) in [
            (0.0, LocalTimeEstimator::Occupation, 0.03),
            (0.5, LocalTimeEstimator::Occupation, 0.03),
            (0.5, LocalTimeEstimator::Downcrossing, 0.05),
        ] {
            let exact = reflected_local_time_mean(r, t);
            let l: Vec<f64> = (0..n)
                .map(|i| {
                    *simulate_reflected_bm_with(r, t, dt, 100 + i, est)
                        .unwrap()
                        .local_time
                        .last()
                        .unwrap()
                })
                .collect();
            let (m, se) = mean_stderr(&l);
            assert!(
                (m - exact).abs() < 3.0 * se + budget * exact,
                "{est:?}: {m} +- {se} vs {exact}"
            );
        }
    }
}
