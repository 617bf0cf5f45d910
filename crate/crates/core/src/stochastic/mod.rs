//! Sticky dynamics on `[0, 1]` and Monte Carlo estimates of the solution.
//!
//! Three constructions are available: the sticky random walk on
//! `{0, ..., N+1}` (exact, event driven), reflected Brownian motion
//! time-changed by its boundary local time, and the two-sided Skorokhod map
//! as an alternative to folding. Direct Euler schemes for the sticky SDE are
//! deliberately absent.

mod lattice;
mod reflected;
pub mod rng;
pub mod stats;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use lattice::{realize_sticky_from_reflected, simulate_reflected_rw, simulate_sticky_rw};
pub use reflected::{
    fold_map, free_path, reflected_local_time_mean, sampled_wall_occupation, simulate_reflected_bm,
    simulate_reflected_bm_with, skorokhod_two_sided, sticky_from_reflected, LocalTimeEstimator,
    DOWNCROSSING_WIDTH,
};
pub use stats::{ks_two_sample, local_time_cauchy, KsResult, LocalTimeCauchy, LocalTimeRow};

use crate::error::{Error, Result};
use crate::initial_data::InitialData;

/// Smallest accepted Monte Carlo sample.
pub const MIN_PATHS: usize = 100;

/// How a [`PathRecord`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathMethod {
    StickyRw { n: usize },
    ReflectedRw { n: usize },
    RealizedSticky { n: usize },
    ReflectedBm { dt: f64, estimator: LocalTimeEstimator },
    StickyTimeChange { dt: f64, estimator: LocalTimeEstimator },
}

impl PathMethod {
    /// Upper end of the state space: `N + 1` on the lattice, 1 otherwise.
    pub fn upper(&self) -> f64 {
        match *self {
            PathMethod::StickyRw { n }
            | PathMethod::ReflectedRw { n }
            | PathMethod::RealizedSticky { n } => (n + 1) as f64,
            _ => 1.0,
        }
    }
}

/// A piecewise-constant path: `positions[i]` is held on
/// `[times[i], times[i+1])` and the last entry is the state at the final time.
///
/// `local_time` and `boundary_occupation` are the running values at each
/// time stamp and grow linearly in between. On the lattice `local_time` is
/// the clock stretch `(2N-1) T` in walk time units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathRecord {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub local_time: Vec<f64>,
    pub boundary_occupation: Vec<f64>,
    pub seed: u64,
    pub method: PathMethod,
}

impl PathRecord {
    pub(crate) fn empty(seed: u64, method: PathMethod) -> Self {
        PathRecord {
            times: Vec::new(),
            positions: Vec::new(),
            local_time: Vec::new(),
            boundary_occupation: Vec::new(),
            seed,
            method,
        }
    }

    pub(crate) fn push(&mut self, t: f64, x: f64, l: f64, occ: f64) {
        self.times.push(t);
        self.positions.push(x);
        self.local_time.push(l);
        self.boundary_occupation.push(occ);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn is_boundary(&self, x: f64) -> bool {
        x == 0.0 || x == self.method.upper()
    }

    fn segment(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t).saturating_sub(1)
    }

    /// State at time `t`; past the last stamp the final state is returned.
    pub fn position_at(&self, t: f64) -> f64 {
        self.positions[self.segment(t)]
    }

    fn interpolate(&self, column: &[f64], t: f64) -> f64 {
        let i = self.segment(t);
        if i + 1 >= self.times.len() {
            return column[i];
        }
        let w = ((t - self.times[i]) / (self.times[i + 1] - self.times[i])).clamp(0.0, 1.0);
        column[i] + w * (column[i + 1] - column[i])
    }

    pub fn local_time_at(&self, t: f64) -> f64 {
        self.interpolate(&self.local_time, t)
    }

    pub fn occupation_at(&self, t: f64) -> f64 {
        self.interpolate(&self.boundary_occupation, t)
    }

    /// Checks the structural invariants of a path.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.times.len();
        if n == 0
            || self.times[0] != 0.0
            || [self.positions.len(), self.local_time.len(), self.boundary_occupation.len()]
                .iter()
                .any(|&m| m != n)
        {
            return Err(Error::domain("path columns are empty, misaligned or do not start at 0"));
        }
        let top = self.method.upper();
        for i in 0..n {
            if !(0.0..=top).contains(&self.positions[i]) {
                return Err(Error::domain(format!("position {} outside the state space", self.positions[i])));
            }
            if i > 0 {
                if self.times[i] <= self.times[i - 1] {
                    return Err(Error::domain(format!("time stamps not increasing at {i}")));
                }
                if self.local_time[i] < self.local_time[i - 1]
                    || self.boundary_occupation[i] < self.boundary_occupation[i - 1]
                {
                    return Err(Error::domain(format!("running totals decrease at {i}")));
                }
            }
        }
        Ok(())
    }
}

/// Path construction used by [`mc_estimate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum McMethod {
    /// Sticky random walk on `{0..N+1}`, position `X / (N+1)` at walk time `(N+1)^2 t`.
    StickyRw { n: usize },
    /// Reflected Brownian motion with step `dt`, time-changed by its local time.
    ReflectedTc { dt: f64 },
}

impl McMethod {
    pub fn validate(&self) -> Result<()> {
        match *self {
            McMethod::StickyRw { n } if n < 2 => {
                Err(Error::config(format!("lattice size N = {n} must be at least 2")))
            }
            McMethod::ReflectedTc { dt } if !(dt > 0.0 && dt < 1.0) => {
                Err(Error::config(format!("dt = {dt} must lie in (0, 1)")))
            }
            _ => Ok(()),
        }
    }
}

/// Tag of the estimator behind an [`MCEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimateMethod {
    StickyRw { n: usize },
    ReflectedTc { dt: f64 },
    Absorbed { dt: f64 },
}

impl From<McMethod> for EstimateMethod {
    fn from(m: McMethod) -> Self {
        match m {
            McMethod::StickyRw { n } => EstimateMethod::StickyRw { n },
            McMethod::ReflectedTc { dt } => EstimateMethod::ReflectedTc { dt },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n_paths)`.
    pub stderr: f64,
    pub n_paths: usize,
    pub method: EstimateMethod,
    pub seed: u64,
}

fn check_mc(r: f64, t: f64, n_paths: usize) -> Result<()> {
    if n_paths < MIN_PATHS {
        return Err(Error::config(format!(
            "n_paths = {n_paths} is below the minimum of {MIN_PATHS}"
        )));
    }
    check_start(r, t)
}

fn check_start(r: f64, t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::config(format!("r = {r} is outside [0, 1]")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::config(format!("t = {t} must be positive")));
    }
    Ok(())
}

/// One sample of sticky Brownian motion at time `t` from `r`, in `[0, 1]`.
/// Wall states are returned as exactly `0.0` or `1.0`.
pub fn sample_sticky(r: f64, t: f64, method: McMethod, rng: &mut ChaCha8Rng) -> f64 {
    match method {
        McMethod::StickyRw { n } => {
            let scale = (n + 1) as f64;
            // split the start between the two neighbouring sites so that the
            // initial position is r on average
            let y = r * scale;
            let lo = y.floor();
            let x0 = if rng.random::<f64>() < y - lo { lo + 1.0 } else { lo };
            let x0 = (x0 as usize).min(n + 1);
            let (x, _) = lattice::walk_endpoint(n, x0, scale * scale * t, 1.0 / (2.0 * n as f64), rng);
            if x == n + 1 {
                1.0
            } else {
                x as f64 / scale
            }
        }
        McMethod::ReflectedTc { dt } => reflected::sticky_endpoint(r, t, dt, rng),
    }
}

/// Independent samples of the sticky position at time `t`, in path order.
pub fn sample_sticky_many(
    r: f64,
    t: f64,
    n_paths: usize,
    method: McMethod,
    seed: u64,
) -> Result<Vec<f64>> {
    method.validate()?;
    check_start(r, t)?;
    Ok(rng::map_paths(n_paths, seed, |g| sample_sticky(r, t, method, g)))
}

fn payoff(u0: &InitialData, x: f64) -> f64 {
    if x == 0.0 {
        u0.v0_minus
    } else if x == 1.0 {
        u0.v0_plus
    } else {
        u0.u0(x)
    }
}

/// Monte Carlo estimate of `E_r[ u0(B(t)) 1{0<B<1} + v0- 1{B=0} + v0+ 1{B=1} ]`
/// for sticky Brownian motion `B`.
pub fn mc_estimate(
    r: f64,
    t: f64,
    u0: &InitialData,
    n_paths: usize,
    method: McMethod,
    seed: u64,
) -> Result<MCEstimate> {
    check_mc(r, t, n_paths)?;
    method.validate()?;
    u0.validate()?;
    let values = rng::map_paths(n_paths, seed, |g| payoff(u0, sample_sticky(r, t, method, g)));
    let (mean, stderr) = rng::mean_stderr(&values);
    Ok(MCEstimate {
        mean,
        stderr,
        n_paths,
        method: method.into(),
        seed,
    })
}

/// Monte Carlo estimate for Brownian motion absorbed at the walls:
/// `u0(B(t)) 1{tau > t} + v0- 1{exit at 0 by t} + v0+ 1{exit at 1 by t}`.
///
/// Exits are detected only at the grid times `k dt` (no bridge correction),
/// which biases the estimate by `O(sqrt(dt))`.
pub fn mc_absorbed(
    r: f64,
    t: f64,
    u0: &InitialData,
    n_paths: usize,
    dt: f64,
    seed: u64,
) -> Result<MCEstimate> {
    check_mc(r, t, n_paths)?;
    if !(dt > 0.0 && dt < 1.0) {
        return Err(Error::config(format!("dt = {dt} must lie in (0, 1)")));
    }
    u0.validate()?;
    let n_steps = (t / dt).ceil().max(1.0) as usize;
    let last = t - (n_steps - 1) as f64 * dt;
    let (sd, sd_last) = (dt.sqrt(), last.sqrt());
    let values = rng::map_paths(n_paths, seed, |g| {
        let mut x = r;
        for k in 0..=n_steps {
            if x <= 0.0 {
                return u0.v0_minus;
            }
            if x >= 1.0 {
                return u0.v0_plus;
            }
            if k == n_steps {
                break;
            }
            let z: f64 = StandardNormal.sample(g);
            x += if k + 1 == n_steps { sd_last } else { sd } * z;
        }
        u0.u0(x)
    });
    let (mean, stderr) = rng::mean_stderr(&values);
    Ok(MCEstimate {
        mean,
        stderr,
        n_paths,
        method: EstimateMethod::Absorbed { dt },
        seed,
    })
}

/// Polynomial test functions for the generator check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    Constant { c: f64 },
    /// `sum_k coeffs[k] x^k`, degree at most 4.
    Polynomial { coeffs: Vec<f64> },
}

impl TestFunction {
    /// `x + x^2/2 - x^3/3`: `f'(0) = f''(0) = 1`, `f'(1) = 1`, `f''(1) = -1`.
    pub fn cubic() -> Self {
        TestFunction::Polynomial {
            coeffs: vec![0.0, 1.0, 0.5, -1.0 / 3.0],
        }
    }

    fn coeffs(&self) -> Vec<f64> {
        match self {
            TestFunction::Constant { c } => vec![*c],
            TestFunction::Polynomial { coeffs } => coeffs.clone(),
        }
    }

    /// Value and first two derivatives at `x`.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let c = self.coeffs();
        let (mut f, mut d1, mut d2) = (0.0, 0.0, 0.0);
        for (k, &a) in c.iter().enumerate().rev() {
            let kf = k as f64;
            f = f * x + a;
            if k >= 1 {
                d1 = d1 * x + kf * a;
            }
            if k >= 2 {
                d2 = d2 * x + kf * (kf - 1.0) * a;
            }
        }
        (f, d1, d2)
    }

    /// Requires `f''(0) = f'(0)` and `f''(1) = -f'(1)`, the wall conditions of
    /// the generator domain.
    pub fn validate(&self) -> Result<()> {
        let c = self.coeffs();
        if c.len() > 5 {
            return Err(Error::config("test polynomials are limited to degree 4"));
        }
        let (_, a1, a2) = self.eval(0.0);
        let (_, b1, b2) = self.eval(1.0);
        let scale = 1.0 + c.iter().map(|x| x.abs()).sum::<f64>();
        if (a2 - a1).abs() > 1e-12 * scale || (b2 + b1).abs() > 1e-12 * scale {
            return Err(Error::config(format!(
                "test function violates the wall conditions: f'(0) = {a1}, f''(0) = {a2}, f'(1) = {b1}, f''(1) = {b2}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorCheck {
    /// `(E_r f(B(t)) - f(r)) / t`.
    pub estimate: f64,
    pub stderr: f64,
    /// `f''(r) / 2`.
    pub target: f64,
    pub discrepancy: f64,
}

/// Compares the Monte Carlo difference quotient of `E_r f(B(t))` with `f''(r)/2`.
pub fn generator_check(
    f: &TestFunction,
    r: f64,
    t: f64,
    n_paths: usize,
    method: McMethod,
    seed: u64,
) -> Result<GeneratorCheck> {
    f.validate()?;
    check_mc(r, t, n_paths)?;
    method.validate()?;
    let (fr, _, d2) = f.eval(r);
    let values = rng::map_paths(n_paths, seed, |g| {
        (f.eval(sample_sticky(r, t, method, g)).0 - fr) / t
    });
    let (estimate, stderr) = rng::mean_stderr(&values);
    let target = 0.5 * d2;
    Ok(GeneratorCheck {
        estimate,
        stderr,
        target,
        discrepancy: (estimate - target).abs(),
    })
}
