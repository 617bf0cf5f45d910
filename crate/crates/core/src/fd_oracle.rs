//! Crank–Nicolson reference solver.
//!
//! Nodes `r_i = i Δr`, `i = 0..=M+1`, `Δr = 1/(M+1)`; the wall values `u_0`
//! and `u_{M+1}` are unknowns of the implicit system. The wall flux uses the
//! one-sided stencil `(-3u_0 + 4u_1 - u_2) / 2Δr`, and the reservoir update
//! is the same flux, so the discrete mass
//! `Δr (Σ u_i + u_1/2 + u_M/2) + ρ₋ + ρ₊` is conserved step by step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::initial_data::InitialData;
use crate::volterra::Regime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    CrankNicolson,
}

/// Backward-Euler startup steps used unless configured otherwise.
pub const DEFAULT_STARTUP_STEPS: usize = 4;

fn default_startup() -> usize {
    DEFAULT_STARTUP_STEPS
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FDConfig {
    /// Interior nodes `M`.
    pub n_space: usize,
    pub n_time: usize,
    pub t_max: f64,
    pub scheme: Scheme,
    pub regime: Regime,
    /// Leading steps replaced by two backward-Euler half steps each, to damp
    /// the high modes of rough data.
    #[serde(default = "default_startup")]
    pub startup_steps: usize,
}

impl FDConfig {
    pub fn new(n_space: usize, n_time: usize, t_max: f64, regime: Regime) -> Self {
        FDConfig {
            n_space,
            n_time,
            t_max,
            scheme: Scheme::CrankNicolson,
            regime,
            startup_steps: DEFAULT_STARTUP_STEPS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_space < 8 || self.n_time < 8 {
            return Err(Error::config(format!(
                "finite differences need n_space >= 8 and n_time >= 8, got {} and {}",
                self.n_space, self.n_time
            )));
        }
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(Error::config(format!("t_max must be positive, got {}", self.t_max)));
        }
        if self.startup_steps > self.n_time {
            return Err(Error::config("startup_steps exceeds n_time"));
        }
        self.regime.validate()
    }

    pub fn dr(&self) -> f64 {
        1.0 / (self.n_space + 1) as f64
    }

    pub fn dt(&self) -> f64 {
        self.t_max / self.n_time as f64
    }
}

/// Grid solution with reservoir histories.
#[derive(Debug, Clone, PartialEq)]
pub struct FDSolution {
    pub cfg: FDConfig,
    /// `M + 2` nodes including both walls.
    pub r: Vec<f64>,
    /// `n_time + 1` times starting at 0.
    pub times: Vec<f64>,
    /// `u[n][i]` at `times[n]`, `r[i]`.
    pub u: Vec<Vec<f64>>,
    pub rho_minus: Vec<f64>,
    pub rho_plus: Vec<f64>,
    /// Conserved discrete mass at each time.
    pub mass: Vec<f64>,
}

impl FDSolution {
    /// Bilinear interpolation of `u`.
    pub fn sample(&self, r: f64, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&r) || !(0.0..=self.cfg.t_max * (1.0 + 1e-12)).contains(&t) {
            return Err(Error::domain(format!("({r}, {t}) is outside the grid")));
        }
        let dt = self.cfg.dt();
        let x = (t / dt).min(self.cfg.n_time as f64);
        let n = (x.floor() as usize).min(self.cfg.n_time - 1);
        let wt = x - n as f64;
        let at = |row: &[f64]| {
            let y = r / self.cfg.dr();
            let i = (y.floor() as usize).min(self.cfg.n_space);
            let w = y - i as f64;
            row[i] * (1.0 - w) + row[i + 1] * w
        };
        Ok(at(&self.u[n]) * (1.0 - wt) + at(&self.u[n + 1]) * wt)
    }

    /// Time index nearest to `t`.
    pub fn time_index(&self, t: f64) -> usize {
        ((t / self.cfg.dt()).round() as usize).min(self.cfg.n_time)
    }

    /// Reservoir contents at time index `n`.
    pub fn reservoirs(&self, n: usize) -> (f64, f64) {
        (self.rho_minus[n], self.rho_plus[n])
    }

    /// Largest change of the discrete mass over one step, and over the run.
    pub fn mass_drift(&self) -> (f64, f64) {
        let step = self
            .mass
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0, f64::max);
        let total = self
            .mass
            .iter()
            .map(|m| (m - self.mass[0]).abs())
            .fold(0.0, f64::max);
        (step, total)
    }
}

fn discrete_mass(u: &[f64], dr: f64, rho: (f64, f64)) -> f64 {
    let m = u.len() - 2;
    let interior: f64 = u[1..=m].iter().sum::<f64>() + 0.5 * (u[1] + u[m]);
    dr * interior + rho.0 + rho.1
}

/// Reservoir relaxation over one step of length `dt` with the wall value
/// linear in time: `ρ' = e ρ + c1 u_wall' + c0 u_wall`. Backward-Euler steps
/// hold the wall value at its new level instead (`c0 = 0`); otherwise the
/// wall constraint is averaged over the step and an inconsistent start
/// survives as an undamped `(-1)^n` mode.
#[derive(Debug, Clone, Copy)]
struct Relaxation {
    e: f64,
    c1: f64,
    c0: f64,
}

impl Relaxation {
    fn new(regime: Regime, dt: f64, implicit: bool) -> Self {
        match regime {
            Regime::Sigma(sigma) => {
                let x = dt / sigma;
                let e = (-x).exp();
                let one_minus_e = -(-x).exp_m1();
                if implicit {
                    return Relaxation {
                        e,
                        c1: one_minus_e,
                        c0: 0.0,
                    };
                }
                // φ = σ(1 - e)/dt, series for tiny steps
                let phi = if x < 1e-6 { 1.0 - x / 2.0 } else { one_minus_e / x };
                Relaxation {
                    e,
                    c1: 1.0 - phi,
                    c0: phi - e,
                }
            }
            _ => Relaxation {
                e: 0.0,
                c1: 1.0,
                c0: 0.0,
            },
        }
    }
}

fn thomas(sub: &[f64], diag: &mut [f64], sup: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    for i in 1..n {
        let w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
    }
}

struct Stepper {
    m: usize,
    dr: f64,
    regime: Regime,
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    rhs: Vec<f64>,
}

impl Stepper {
    fn new(m: usize, dr: f64, regime: Regime) -> Self {
        Stepper {
            m,
            dr,
            regime,
            sub: vec![0.0; m + 2],
            diag: vec![0.0; m + 2],
            sup: vec![0.0; m + 2],
            rhs: vec![0.0; m + 2],
        }
    }

    /// One θ-step (`θ = 1/2` Crank–Nicolson, `θ = 1` backward Euler).
    fn step(&mut self, u: &mut [f64], rho: &mut (f64, f64), dt: f64, theta: f64) {
        let (m, dr) = (self.m, self.dr);
        let last = m + 1;
        let a = theta * dt / (2.0 * dr * dr);
        let b = (1.0 - theta) * dt / (2.0 * dr * dr);
        for i in 1..=m {
            self.sub[i] = -a;
            self.diag[i] = 1.0 + 2.0 * a;
            self.sup[i] = -a;
            self.rhs[i] = u[i] + b * (u[i - 1] - 2.0 * u[i] + u[i + 1]);
        }
        if self.regime == Regime::Dirichlet {
            self.diag[0] = 1.0;
            self.sup[0] = 0.0;
            self.rhs[0] = u[0];
            self.diag[last] = 1.0;
            self.sub[last] = 0.0;
            self.rhs[last] = u[last];
        } else {
            let rel = Relaxation::new(self.regime, dt, theta == 1.0);
            let g1 = theta * dt / (4.0 * dr);
            let g0 = (1.0 - theta) * dt / (4.0 * dr);
            // wall rows (c1 + 3g1) u_w - 4 g1 u_1 + g1 u_2 = rhs, with u_2 eliminated via row 1
            let k = g1 / a;
            let flux_minus = -3.0 * u[0] + 4.0 * u[1] - u[2];
            let rhs0 = (1.0 - rel.e) * rho.0 - rel.c0 * u[0] + g0 * flux_minus;
            self.diag[0] = rel.c1 + 2.0 * g1;
            self.sup[0] = -2.0 * g1 + k;
            self.rhs[0] = rhs0 + k * self.rhs[1];
            let flux_plus = -3.0 * u[last] + 4.0 * u[m] - u[m - 1];
            let rhs_last = (1.0 - rel.e) * rho.1 - rel.c0 * u[last] + g0 * flux_plus;
            self.diag[last] = rel.c1 + 2.0 * g1;
            self.sub[last] = -2.0 * g1 + k;
            self.rhs[last] = rhs_last + k * self.rhs[m];
            let old = (u[0], u[last]);
            self.solve_into(u);
            *rho = match self.regime {
                Regime::Sigma(_) => (
                    rel.e * rho.0 + rel.c1 * u[0] + rel.c0 * old.0,
                    rel.e * rho.1 + rel.c1 * u[last] + rel.c0 * old.1,
                ),
                _ => (u[0], u[last]),
            };
            return;
        }
        self.solve_into(u);
    }

    fn solve_into(&mut self, u: &mut [f64]) {
        thomas(&self.sub, &mut self.diag, &self.sup, &mut self.rhs);
        u.copy_from_slice(&self.rhs);
    }
}

fn check_range(u: &[f64], n: usize, t: f64) -> Result<()> {
    if let Some((i, &v)) = u
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v >= -0.01 && **v <= 1.01))
    {
        return Err(Error::Instability {
            what: format!("finite-difference solution at time step {n}"),
            node: i,
            time: t,
            value: v,
        });
    }
    Ok(())
}

/// Runs the scheme to `t_max`, keeping every time level.
pub fn solve_fd(u0: &InitialData, cfg: &FDConfig) -> Result<FDSolution> {
    cfg.validate()?;
    u0.validate()?;
    let m = cfg.n_space;
    let dr = cfg.dr();
    let dt = cfg.dt();
    let r: Vec<f64> = (0..m + 2).map(|i| i as f64 * dr).collect();
    let mut u: Vec<f64> = r.iter().map(|&x| u0.u0(x)).collect();
    // cells cut by a jump of the datum take the cell average, so the jump
    // sits where it belongs rather than at the nearest node
    for b in u0.breakpoints() {
        let i = (b / dr).round() as usize;
        if (1..=m).contains(&i) {
            let (lo, hi) = (r[i] - 0.5 * dr, r[i] + 0.5 * dr);
            u[i] = ((b - lo) * u0.u0(0.5 * (lo + b)) + (hi - b) * u0.u0(0.5 * (b + hi))) / dr;
        }
    }
    let mut rho = (u0.v0_minus, u0.v0_plus);
    match cfg.regime {
        Regime::Sigma(_) => {
            u[0] = u0.u0(0.0);
            u[m + 1] = u0.u0(1.0);
        }
        _ => {
            u[0] = u0.v0_minus;
            u[m + 1] = u0.v0_plus;
        }
    }
    let mut stepper = Stepper::new(m, dr, cfg.regime);
    let mut times = Vec::with_capacity(cfg.n_time + 1);
    let mut levels = Vec::with_capacity(cfg.n_time + 1);
    let mut rm = Vec::with_capacity(cfg.n_time + 1);
    let mut rp = Vec::with_capacity(cfg.n_time + 1);
    let mut mass = Vec::with_capacity(cfg.n_time + 1);
    times.push(0.0);
    levels.push(u.clone());
    rm.push(rho.0);
    rp.push(rho.1);
    mass.push(discrete_mass(&u, dr, rho));
    for n in 1..=cfg.n_time {
        if n <= cfg.startup_steps {
            stepper.step(&mut u, &mut rho, 0.5 * dt, 1.0);
            stepper.step(&mut u, &mut rho, 0.5 * dt, 1.0);
        } else {
            stepper.step(&mut u, &mut rho, dt, 0.5);
        }
        let t = n as f64 * dt;
        check_range(&u, n, t)?;
        times.push(t);
        levels.push(u.clone());
        rm.push(rho.0);
        rp.push(rho.1);
        mass.push(discrete_mass(&u, dr, rho));
    }
    Ok(FDSolution {
        cfg: *cfg,
        r,
        times,
        u: levels,
        rho_minus: rm,
        rho_plus: rp,
        mass,
    })
}

/// Successive sup-norm differences under refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n_space: usize,
    pub n_time: usize,
    /// Sup over the coarser grid's nodes and the probe times of the
    /// difference to the previous (coarser) resolution; `NaN` on the first row.
    pub diff: f64,
    /// `log(diff_prev / diff) / log(Δr_prev / Δr)`; `NaN` where undefined.
    pub order: f64,
}

/// Runs each resolution and reports differences between consecutive ones.
pub fn convergence_table(
    u0: &InitialData,
    regime: Regime,
    t_max: f64,
    resolutions: &[(usize, usize)],
    probe_times: &[f64],
    startup_steps: usize,
) -> Result<Vec<ConvergenceRow>> {
    if resolutions.len() < 3 {
        return Err(Error::config("convergence table needs at least 3 resolutions"));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    let mut prev: Option<FDSolution> = None;
    for &(n_space, n_time) in resolutions {
        let mut cfg = FDConfig::new(n_space, n_time, t_max, regime);
        cfg.startup_steps = startup_steps;
        let sol = solve_fd(u0, &cfg)?;
        let (diff, order) = match &prev {
            None => (f64::NAN, f64::NAN),
            Some(p) => {
                let mut d: f64 = 0.0;
                for &t in probe_times {
                    for &r in &p.r {
                        d = d.max((p.sample(r, t)? - sol.sample(r, t)?).abs());
                    }
                }
                let order = match rows.last() {
                    Some(last) if last.diff.is_finite() && d > 0.0 && last.diff > 0.0 => {
                        let ratio = (p.cfg.dr() / cfg.dr()).ln();
                        (last.diff / d).ln() / ratio
                    }
                    _ => f64::NAN,
                };
                (d, order)
            }
        };
        rows.push(ConvergenceRow {
            n_space,
            n_time,
            diff,
            order,
        });
        prev = Some(sol);
    }
    Ok(rows)
}
