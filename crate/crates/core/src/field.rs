//! Space-time solutions assembled from wall traces, reservoir contents, and
//! conservation diagnostics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::initial_data::InitialData;
use crate::quadrature::composite_simpson;
use crate::special::{relaxation_moments, Moments};
use crate::theta_kernel::{dirichlet_propagate, neg_theta_dr_moments, ThetaEvalConfig};
use crate::volterra::{
    dirichlet_traces, solve_boundary, solve_limit_boundary, solve_sigma_boundary, BoundaryTraces,
    Regime, Side, TimeGrid, VolterraConfig,
};

/// Intervals of the composite Simpson rule used for `∫ u dr`.
pub const MASS_INTERVALS: usize = 256;

/// `u(r, t)` on `[0, 1] × (0, t_max]` for one regime.
#[derive(Debug, Clone)]
pub struct FieldSolution {
    pub traces: BoundaryTraces,
    pub u0: InitialData,
    pub cfg: ThetaEvalConfig,
}

impl FieldSolution {
    pub fn new(traces: BoundaryTraces, u0: InitialData, cfg: ThetaEvalConfig) -> Self {
        FieldSolution { traces, u0, cfg }
    }

    /// Solves the boundary problem for `regime` and wraps the result.
    pub fn solve(
        regime: Regime,
        u0: &InitialData,
        grid: &TimeGrid,
        cfg: &VolterraConfig,
    ) -> Result<Self> {
        regime.validate()?;
        let traces = solve_boundary(regime, u0, grid, cfg)?;
        Ok(FieldSolution::new(traces, u0.clone(), cfg.theta))
    }

    pub fn regime(&self) -> Regime {
        self.traces.regime
    }

    pub fn t_max(&self) -> f64 {
        self.traces.grid.t_max()
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t > 0.0) || t > self.t_max() * (1.0 + 1e-12) {
            return Err(Error::domain(format!(
                "t = {t} is outside (0, {}]",
                self.t_max()
            )));
        }
        Ok(())
    }

    /// `u(r, t)`. At `r ∈ {0, 1}` this is the wall trace.
    pub fn evaluate_u(&self, r: f64, t: f64) -> Result<f64> {
        self.check_time(t)?;
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::domain(format!("r = {r} is outside [0, 1]")));
        }
        if self.regime() == Regime::Dirichlet {
            return dirichlet_solution(&self.u0, r, t, &self.cfg);
        }
        if r == 0.0 {
            return self.traces.value_at(Side::Minus, t);
        }
        if r == 1.0 {
            return self.traces.value_at(Side::Plus, t);
        }
        let interior = dirichlet_propagate(|x| self.u0.u0(x), &self.u0, r, t, &self.cfg)?;
        let cfg = self.cfg;
        let left = convolve_trace(&self.traces, Side::Minus, t, |tau| {
            neg_theta_dr_moments(r, tau, &cfg)
        })?;
        let right = convolve_trace(&self.traces, Side::Plus, t, |tau| {
            Ok(neg_theta_dr_moments(r - 1.0, tau, &cfg)?.scale(-1.0))
        })?;
        Ok(interior + left + right)
    }

    /// Reservoir content at time `t`: `ρ±` in the σ regime, `v±` otherwise.
    pub fn reservoir(&self, side: Side, t: f64) -> Result<f64> {
        match self.regime() {
            Regime::Sigma(sigma) => reservoir_rho(side, sigma, &self.traces, t),
            Regime::Limit => self.traces.value_at(side, t),
            Regime::Dirichlet => Ok(self.traces.v0(side)),
        }
    }

    /// `∫_0^1 u(r, t) dr + reservoir₋(t) + reservoir₊(t)`.
    pub fn mass_total(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let h = 1.0 / MASS_INTERVALS as f64;
        let samples: Vec<f64> = (0..=MASS_INTERVALS)
            .into_par_iter()
            .map(|i| self.evaluate_u(i as f64 * h, t))
            .collect::<Result<_>>()?;
        Ok(composite_simpson(&samples, h)
            + self.reservoir(Side::Minus, t)?
            + self.reservoir(Side::Plus, t)?)
    }

    /// `u(·, t)` at the given positions, evaluated in parallel.
    pub fn snapshot(&self, positions: &[f64], t: f64) -> Result<Vec<f64>> {
        positions
            .par_iter()
            .map(|&r| self.evaluate_u(r, t))
            .collect()
    }
}

/// `∫_0^t k(t - s) g(s) ds` for the piecewise-linear trace `g`, given the
/// moments of `k`.
pub(crate) fn convolve_trace<F>(traces: &BoundaryTraces, side: Side, t: f64, moments: F) -> Result<f64>
where
    F: Fn(f64) -> Result<Moments>,
{
    let nodes = traces.grid.nodes();
    let vals = traces.trace(side);
    let m = nodes.partition_point(|&x| x < t);
    // knots: 0, t_1, ..., t_{m-1}, t
    let mut knots = Vec::with_capacity(m + 2);
    knots.push((0.0, traces.start(side)));
    for k in 0..m {
        knots.push((nodes[k], vals[k]));
    }
    let end = traces.value_at(side, t)?;
    if knots.len() > 1 && t - knots[knots.len() - 1].0 <= 1e-14 * t {
        knots.pop();
    }
    knots.push((t, end));
    let mut acc = 0.0;
    let mut upper = moments(t - knots[0].0)?;
    for w in knots.windows(2) {
        let (s0, g0) = w[0];
        let (s1, g1) = w[1];
        let h = s1 - s0;
        if h <= 0.0 {
            continue;
        }
        let lower = moments(t - s1)?;
        let d = upper - lower;
        let ua = t - s1;
        let ub = t - s0;
        acc += g0 * (d.first - ua * d.zeroth) / h + g1 * (ub * d.zeroth - d.first) / h;
        upper = lower;
    }
    Ok(acc)
}

/// `ρ±(t) = e^{-t/σ} v₀,± + ∫_0^t σ^{-1} e^{-(t-s)/σ} trace(s) ds`.
pub fn reservoir_rho(side: Side, sigma: f64, traces: &BoundaryTraces, t: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
    }
    if t == 0.0 {
        return Ok(traces.v0(side));
    }
    let rate = 1.0 / sigma;
    let conv = convolve_trace(traces, side, t, |tau| Ok(relaxation_moments(rate, tau)))?;
    Ok((-t * rate).exp() * traces.v0(side) + conv)
}

/// Absorbed problem with wall values held at `v₀,±`: steady line plus the
/// zero-wall heat flow of the deviation from it.
pub fn dirichlet_solution(u0: &InitialData, r: f64, t: f64, cfg: &ThetaEvalConfig) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("time must be positive, got {t}")));
    }
    let (a, b) = (u0.v0_minus, u0.v0_plus);
    if r <= 0.0 {
        return Ok(a);
    }
    if r >= 1.0 {
        return Ok(b);
    }
    let steady = |x: f64| a + (b - a) * x;
    let transient = dirichlet_propagate(|x| u0.u0(x) - steady(x), u0, r, t, cfg)?;
    Ok(steady(r) + transient)
}

/// Dirichlet [`FieldSolution`] on a grid (the wall values are constant).
pub fn dirichlet_field(u0: &InitialData, grid: &TimeGrid, cfg: &ThetaEvalConfig) -> FieldSolution {
    FieldSolution::new(dirichlet_traces(u0, grid), u0.clone(), *cfg)
}

/// One row of the σ-sweep table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sigma: f64,
    pub t: f64,
    /// `|ρ₋(t) - u(0, t)|`
    pub gap_minus: f64,
    pub gap_plus: f64,
    /// Sup over the probe grid of `|u^σ - u_limit|`.
    pub sup_dist: f64,
}

/// Solves the σ-problem for every σ and compares it with the limit solution.
pub fn sigma_sweep(
    sigmas: &[f64],
    u0: &InitialData,
    grid: &TimeGrid,
    probe_times: &[f64],
    probe_positions: &[f64],
    cfg: &VolterraConfig,
) -> Result<Vec<SweepRow>> {
    if sigmas.is_empty() || sigmas.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::config("sigma sweep needs positive sigmas"));
    }
    let limit = FieldSolution::new(solve_limit_boundary(u0, grid, cfg)?, u0.clone(), cfg.theta);
    let mut reference = Vec::with_capacity(probe_times.len());
    for &t in probe_times {
        reference.push(limit.snapshot(probe_positions, t)?);
    }
    let per_sigma: Vec<Result<Vec<SweepRow>>> = sigmas
        .par_iter()
        .map(|&sigma| {
            let traces = solve_sigma_boundary(sigma, u0, grid, cfg)?;
            let sol = FieldSolution::new(traces, u0.clone(), cfg.theta);
            let mut sup_dist: f64 = 0.0;
            for (t, lim) in probe_times.iter().zip(&reference) {
                let u = sol.snapshot(probe_positions, *t)?;
                for (a, b) in u.iter().zip(lim) {
                    sup_dist = sup_dist.max((a - b).abs());
                }
            }
            probe_times
                .iter()
                .map(|&t| {
                    Ok(SweepRow {
                        sigma,
                        t,
                        gap_minus: (reservoir_rho(Side::Minus, sigma, &sol.traces, t)?
                            - sol.traces.value_at(Side::Minus, t)?)
                        .abs(),
                        gap_plus: (reservoir_rho(Side::Plus, sigma, &sol.traces, t)?
                            - sol.traces.value_at(Side::Plus, t)?)
                        .abs(),
                        sup_dist,
                    })
                })
                .collect()
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_sigma {
        rows.extend(r?);
    }
    Ok(rows)
}

/// Conservation and regularity checks at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub mass: f64,
    /// `|mass(t) - initial mass|`
    pub mass_drift: f64,
    /// Max over interior collocation points of `|u_t - u_rr / 2|`.
    pub heat_residual: f64,
    /// `|dv₋/dt - u_r(0⁺, t) / 2|` (limit regime) or `|dρ₋/dt - σ⁻¹(u(0,t) - ρ₋)|` (σ regime).
    pub boundary_residual: f64,
}

/// Collocation points used by [`heat_residual`].
pub fn collocation_points(t_lo: f64, t_hi: f64) -> Vec<(f64, f64)> {
    let mut pts = Vec::with_capacity(50);
    for i in 0..10 {
        for j in 0..5 {
            let r = 0.05 + 0.1 * i as f64;
            let t = t_lo + (t_hi - t_lo) * (j as f64 + 0.5) / 5.0;
            pts.push((r, t));
        }
    }
    pts
}

/// Max of `|u_t - u_rr / 2|` over `points`, central differences with step `h`.
pub fn heat_residual(sol: &FieldSolution, points: &[(f64, f64)], h: f64) -> Result<f64> {
    let res: Vec<f64> = points
        .par_iter()
        .map(|&(r, t)| {
            let u = |r, t| sol.evaluate_u(r, t);
            let ut = (u(r, t + h)? - u(r, t - h)?) / (2.0 * h);
            let urr = (u(r + h, t)? - 2.0 * u(r, t)? + u(r - h, t)?) / (h * h);
            Ok((ut - 0.5 * urr).abs())
        })
        .collect::<Result<_>>()?;
    Ok(res.into_iter().fold(0.0, f64::max))
}

/// `|dv₋/dt - u_r(0⁺, t)/2|` in the limit regime. `dv/dt` by centered
/// differences over `dt`, `u_r(0⁺)` by the one-sided three-point stencil with step `dr`.
pub fn strong_bc_residual(sol: &FieldSolution, side: Side, t: f64, dt: f64, dr: f64) -> Result<f64> {
    let tr = &sol.traces;
    let dv = (tr.value_at(side, t + dt)? - tr.value_at(side, t - dt)?) / (2.0 * dt);
    let (r0, dir) = match side {
        Side::Minus => (0.0, 1.0),
        Side::Plus => (1.0, -1.0),
    };
    let u0 = sol.evaluate_u(r0, t)?;
    let u1 = sol.evaluate_u(r0 + dir * dr, t)?;
    let u2 = sol.evaluate_u(r0 + 2.0 * dir * dr, t)?;
    // outward-facing derivative at the plus wall flips sign
    let ur = dir * (-3.0 * u0 + 4.0 * u1 - u2) / (2.0 * dr);
    let flux = match side {
        Side::Minus => 0.5 * ur,
        Side::Plus => -0.5 * ur,
    };
    Ok((dv - flux).abs())
}

/// `|dρ/dt - σ⁻¹(trace - ρ)|` with centered differences over `dt`.
pub fn reservoir_ode_residual(sol: &FieldSolution, side: Side, t: f64, dt: f64) -> Result<f64> {
    let sigma = sol
        .regime()
        .sigma()
        .ok_or_else(|| Error::config("reservoir ODE residual needs the sigma regime"))?;
    let rho = |t| reservoir_rho(side, sigma, &sol.traces, t);
    let d = (rho(t + dt)? - rho(t - dt)?) / (2.0 * dt);
    Ok((d - (sol.traces.value_at(side, t)? - rho(t)?) / sigma).abs())
}

/// Bounds `[lo, hi]` of all data and the worst violation of them on a grid.
pub fn max_principle_violation(sol: &FieldSolution, positions: &[f64], times: &[f64]) -> Result<f64> {
    let (lo, hi) = sol.u0.data_range();
    let mut worst: f64 = 0.0;
    for &t in times {
        for u in sol.snapshot(positions, t)? {
            worst = worst.max(lo - u).max(u - hi);
        }
    }
    Ok(worst.max(0.0))
}

/// Diagnostics at each of `times`.
pub fn diagnostics(sol: &FieldSolution, times: &[f64]) -> Result<Vec<DiagnosticsRow>> {
    let m0 = sol.u0.total_mass();
    let dt = (sol.t_max() / sol.traces.grid.n_steps() as f64).max(1e-4);
    times
        .iter()
        .map(|&t| {
            let mass = sol.mass_total(t)?;
            let h = 1e-3_f64.min(0.5 * t);
            // centered differences need room on both sides of t
            let tc = t.min(sol.t_max() - h);
            let heat = heat_residual(sol, &[(0.25, tc), (0.5, tc), (0.75, tc)], h)?;
            let inside = t - dt > 0.0 && t + dt <= sol.t_max();
            let boundary = match sol.regime() {
                Regime::Limit if inside => strong_bc_residual(sol, Side::Minus, t, dt, 1e-3)?,
                Regime::Sigma(_) if inside => reservoir_ode_residual(sol, Side::Minus, t, dt)?,
                _ => 0.0,
            };
            Ok(DiagnosticsRow {
                t,
                mass,
                mass_drift: if sol.regime() == Regime::Dirichlet {
                    0.0
                } else {
                    (mass - m0).abs()
                },
                heat_residual: heat,
                boundary_residual: boundary,
            })
        })
        .collect()
}
