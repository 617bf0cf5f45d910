//! Continuous-time walks on `{0, ..., N+1}`.
//!
//! Interior states jump to each neighbour at rate 1/2. The reflected walk
//! leaves a wall at rate 1 (both attempted jumps fold inward); the sticky
//! walk leaves at rate `1/(2N)`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Binomial, Distribution, Exp, Exp1, Poisson};

use super::rng::path_rng;
use super::{PathMethod, PathRecord};
use crate::error::{Error, Result};

/// Below this distance to a wall the block sampler falls back to single jumps.
const BLOCK_MIN: u64 = 12;

fn check_lattice(n: usize, x0: usize, t_end: f64) -> Result<()> {
    if n < 1 {
        return Err(Error::config("lattice size N must be at least 1"));
    }
    if x0 > n + 1 {
        return Err(Error::config(format!("start {x0} is outside {{0..{}}}", n + 1)));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::config(format!("t_end = {t_end} must be positive")));
    }
    Ok(())
}

/// Event-driven simulation of a walk with wall exit rate `wall_rate`.
/// `stretch` converts wall occupation into the local-time column.
fn event_walk(
    n: usize,
    x0: usize,
    t_end: f64,
    wall_rate: f64,
    stretch: f64,
    seed: u64,
    method: PathMethod,
) -> PathRecord {
    let mut rng = path_rng(seed, 0);
    let top = n + 1;
    let wall_hold = Exp::new(wall_rate).expect("positive rate");
    let mut rec = PathRecord::empty(seed, method);
    let (mut t, mut x, mut occ) = (0.0, x0, 0.0);
    loop {
        rec.push(t, x as f64, stretch * occ, occ);
        let on_wall = x == 0 || x == top;
        let hold: f64 = if on_wall {
            wall_hold.sample(&mut rng)
        } else {
            Exp1.sample(&mut rng)
        };
        if t + hold >= t_end {
            if on_wall {
                occ += t_end - t;
            }
            if t_end > t {
                rec.push(t_end, x as f64, stretch * occ, occ);
            }
            return rec;
        }
        t += hold;
        if on_wall {
            occ += hold;
            x = if x == 0 { 1 } else { n };
        } else if rng.random::<bool>() {
            x += 1;
        } else {
            x -= 1;
        }
    }
}

/// Sticky random walk `X` started at `x0`, simulated exactly up to `t_end`.
///
/// `local_time` holds the clock stretch `(2N-1) T` accumulated so far, where
/// `T` is the wall time of the underlying reflected walk, i.e. the wall
/// occupation of `X` times `(2N-1)/(2N)`.
pub fn simulate_sticky_rw(n: usize, x0: usize, t_end: f64, seed: u64) -> Result<PathRecord> {
    check_lattice(n, x0, t_end)?;
    let nf = n as f64;
    Ok(event_walk(
        n,
        x0,
        t_end,
        1.0 / (2.0 * nf),
        (2.0 * nf - 1.0) / (2.0 * nf),
        seed,
        PathMethod::StickyRw { n },
    ))
}

/// Reflected random walk `Y^rf` on `{0..N+1}`; `local_time` is `(2N-1) T(t)`.
pub fn simulate_reflected_rw(n: usize, x0: usize, t_end: f64, seed: u64) -> Result<PathRecord> {
    check_lattice(n, x0, t_end)?;
    Ok(event_walk(
        n,
        x0,
        t_end,
        1.0,
        2.0 * n as f64 - 1.0,
        seed,
        PathMethod::ReflectedRw { n },
    ))
}

/// Sticky walk obtained from a reflected walk by stretching every wall
/// sojourn by the factor `2N`: `X(t + (2N-1) T(t)) = Y(t)`.
pub fn realize_sticky_from_reflected(n: usize, y: &PathRecord) -> Result<PathRecord> {
    match y.method {
        PathMethod::ReflectedRw { n: m } if m == n => {}
        ref other => {
            return Err(Error::domain(format!(
                "expected a reflected walk with N = {n}, got {other:?}"
            )))
        }
    }
    let top = (n + 1) as f64;
    for (i, &p) in y.positions.iter().enumerate() {
        if p.fract() != 0.0 || !(0.0..=top).contains(&p) {
            return Err(Error::domain(format!("state {p} at index {i} is not a lattice site")));
        }
    }
    let last = y.positions.len().saturating_sub(1);
    for i in 1..y.positions.len() {
        let step = (y.positions[i] - y.positions[i - 1]).abs();
        // the terminal record repeats the current state
        if step != 1.0 && !(i == last && step == 0.0) {
            return Err(Error::domain(format!("jump of size {step} at index {i}")));
        }
    }
    let stretch = 2.0 * n as f64 - 1.0;
    let mut rec = PathRecord::empty(y.seed, PathMethod::RealizedSticky { n });
    for i in 0..y.times.len() {
        let occ_y = y.boundary_occupation[i];
        let l = stretch * occ_y;
        rec.push(y.times[i] + l, y.positions[i], l, (stretch + 1.0) * occ_y);
    }
    Ok(rec)
}

/// Sum of `k` fair `+-1` steps.
fn fair_steps(k: u64, rng: &mut ChaCha8Rng) -> i64 {
    if k <= 64 {
        let bits: u64 = rng.random();
        let mask = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
        2 * (bits & mask).count_ones() as i64 - k as i64
    } else {
        let up = Binomial::new(k, 0.5).expect("valid binomial").sample(rng);
        2 * up as i64 - k as i64
    }
}

/// State at time `t` and wall time accumulated on `[0, t]`, for a walk with
/// wall exit rate `wall_rate` started at `x0`.
///
/// Far from the walls the interior jumps are taken in blocks: with `d` the
/// distance to the nearest wall, the next `d` jumps cannot reach it, so their
/// count on the remaining horizon and their net displacement can be drawn
/// directly. The law of the returned pair is that of the event-driven walk.
pub(crate) fn walk_endpoint(
    n: usize,
    x0: usize,
    t: f64,
    wall_rate: f64,
    rng: &mut ChaCha8Rng,
) -> (usize, f64) {
    let top = n + 1;
    let mut x = x0;
    let mut rem = t;
    let mut wall_time = 0.0;
    loop {
        if x == 0 || x == top {
            let e: f64 = Exp1.sample(rng);
            let hold = e / wall_rate;
            if hold >= rem {
                return (x, wall_time + rem);
            }
            wall_time += hold;
            rem -= hold;
            x = if x == 0 { 1 } else { n };
            continue;
        }
        let d = x.min(top - x) as u64;
        if d < BLOCK_MIN {
            let hold: f64 = Exp1.sample(rng);
            if hold >= rem {
                return (x, wall_time);
            }
            rem -= hold;
            if rng.random::<bool>() {
                x += 1;
            } else {
                x -= 1;
            }
            continue;
        }
        let k = Poisson::new(rem).expect("positive mean").sample(rng) as u64;
        if k < d {
            let y = x as i64 + fair_steps(k, rng);
            return (y as usize, wall_time);
        }
        // given k arrivals in [0, rem], the d-th sits at rem * Beta(d, k - d + 1)
        let frac: f64 = Beta::new(d as f64, (k - d + 1) as f64)
            .expect("valid beta")
            .sample(rng);
        rem -= rem * frac;
        x = (x as i64 + fair_steps(d, rng)) as usize;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::stats::ks_two_sample;

    #[test]
    fn paths_are_consistent() {
        let p = simulate_sticky_rw(5, 3, 200.0, 11).unwrap();
        p.check_invariants().unwrap();
        assert_eq!(*p.times.last().unwrap(), 200.0);
        let q = simulate_reflected_rw(5, 0, 200.0, 11).unwrap();
        q.check_invariants().unwrap();
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(simulate_sticky_rw(0, 0, 1.0, 1).is_err());
        assert!(simulate_sticky_rw(4, 6, 1.0, 1).is_err());
        assert!(simulate_sticky_rw(4, 2, 0.0, 1).is_err());
    }

    fn holding_times(p: &PathRecord, wall: bool, top: f64) -> Vec<f64> {
        let m = p.times.len() - 1;
        (0..m - 1)
            .filter(|&i| (p.positions[i] == 0.0 || p.positions[i] == top) == wall)
            .map(|i| p.times[i + 1] - p.times[i])
            .collect()
    }

    #[test]
    fn wall_and_interior_holding_means() {
        let n = 10;
        let p = simulate_sticky_rw(n, 0, 2.5e5, 5).unwrap();
        let wall = holding_times(&p, true, 11.0);
        let inner = holding_times(&p, false, 11.0);
        assert!(wall.len() > 5000 && inner.len() > 10_000);
        let (mw, sw) = crate::stochastic::rng::mean_stderr(&wall);
        let (mi, si) = crate::stochastic::rng::mean_stderr(&inner);
        assert!((mw - 20.0).abs() < 3.0 * sw, "wall mean {mw} +- {sw}");
        assert!((mi - 1.0).abs() < 3.0 * si, "interior mean {mi} +- {si}");
    }

    #[test]
    fn three_state_chain_occupation() {
        // N = 1: balance pi0/2 = pi1/2 = pi2/2 gives 2/3 of the time on the walls
        let p = simulate_sticky_rw(1, 1, 2e5, 9).unwrap();
        let frac = p.boundary_occupation.last().unwrap() / 2e5;
        assert!((frac - 2.0 / 3.0).abs() < 0.01, "{frac}");
    }

    #[test]
    fn stationary_wall_share_is_one_third_each() {
        // pi_0 (1/2N) = pi_1 / 2 and uniform interior: pi_0 = pi_{N+1} = 1/3
        let p = simulate_sticky_rw(6, 3, 4e5, 2).unwrap();
        let frac = p.boundary_occupation.last().unwrap() / 4e5;
        assert!((frac - 2.0 / 3.0).abs() < 0.02, "{frac}");
    }

    #[test]
    fn realization_without_wall_visits_is_identity() {
        let y = simulate_reflected_rw(40, 20, 5.0, 3).unwrap();
        assert_eq!(*y.boundary_occupation.last().unwrap(), 0.0);
        let x = realize_sticky_from_reflected(40, &y).unwrap();
        assert_eq!(x.times, y.times);
        assert_eq!(x.positions, y.positions);
    }

    #[test]
    fn realization_clock_is_input_clock_plus_stretch() {
        let n = 8;
        let y = simulate_reflected_rw(n, 1, 300.0, 4).unwrap();
        let x = realize_sticky_from_reflected(n, &y).unwrap();
        x.check_invariants().unwrap();
        let t_y = *y.times.last().unwrap();
        let stretch = 15.0 * y.boundary_occupation.last().unwrap();
        assert_eq!(*x.times.last().unwrap(), t_y + stretch);
        // wall occupation of X is 2N times that of Y
        let ratio = x.boundary_occupation.last().unwrap() / y.boundary_occupation.last().unwrap();
        assert!((ratio - 16.0).abs() < 1e-12);
    }

    #[test]
    fn realization_rejects_non_walk_paths() {
        let y = simulate_sticky_rw(8, 1, 50.0, 4).unwrap();
        assert!(realize_sticky_from_reflected(8, &y).is_err());
        let mut z = simulate_reflected_rw(8, 1, 50.0, 4).unwrap();
        assert!(realize_sticky_from_reflected(9, &z).is_err());
        z.positions[1] += 2.0;
        assert!(realize_sticky_from_reflected(8, &z).is_err());
    }

    #[test]
    fn block_sampler_matches_event_walk_in_law() {
        let n = 60;
        let t = 900.0;
        let rate = 1.0 / (2.0 * n as f64);
        let m = 3000;
        let (mut a, mut b, mut wa, mut wb) = (vec![], vec![], vec![], vec![]);
        for i in 0..m {
            let p = simulate_sticky_rw(n, 30, t, 1000 + i).unwrap();
            a.push(*p.positions.last().unwrap());
            wa.push(p.boundary_occupation.last().unwrap() / (2.0 * n as f64));
            let (x, w) = walk_endpoint(n, 30, t, rate, &mut path_rng(77, i));
            b.push(x as f64);
            wb.push(w / (2.0 * n as f64));
        }
        assert!(ks_two_sample(&a, &b).p_value > 0.01);
        assert!(ks_two_sample(&wa, &wb).p_value > 0.01);
    }
}
