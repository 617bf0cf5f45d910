//! Boundary-trace integral equations.
//!
//! For `σ > 0` the unknowns are the running integrals `ψ±` of the wall
//! traces, which satisfy a second-kind convolution system obtained from the
//! first-kind reservoir balance by an Abel transform. In the limit regime the
//! wall values `v±` satisfy a weakly singular second-kind system directly.
//! Both are marched in time by product integration: the unknown is
//! interpolated linearly between nodes and every kernel is integrated exactly
//! against the hat functions through its zeroth and first time moments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::initial_data::InitialData;
use crate::quadrature::GaussLegendre;
use crate::special::{
    dawson, dawson_reciprocal_gap, dawson_residual, first_passage_density,
    first_passage_moments, relaxation_moments, Moments, ALPHA,
};
use crate::theta_kernel::{
    abel_exit_kernel, f_boundary, integrate_against_datum, layered_breakpoints, theta_moments,
    ThetaEvalConfig,
};

pub use crate::theta_kernel::Side;

/// Which boundary-value problem a solution belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Reservoirs relaxing towards the wall values at rate `1/σ`.
    Sigma(f64),
    /// Reservoirs equal to the wall values (`σ → 0`).
    Limit,
    /// Wall values held fixed at the initial reservoir values.
    Dirichlet,
}

impl Regime {
    pub fn sigma(&self) -> Option<f64> {
        match self {
            Regime::Sigma(s) => Some(*s),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Regime::Sigma(s) = self {
            if !(*s > 0.0) || !s.is_finite() {
                return Err(Error::config(format!("sigma must be positive, got {s}")));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regime::Sigma(_) => "sigma",
            Regime::Limit => "limit",
            Regime::Dirichlet => "dirichlet",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Spacing {
    Uniform,
    Graded,
    Custom,
}

/// Time nodes `0 < t_1 < ... < t_n = t_max`. The origin is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_max: f64,
    nodes: Vec<f64>,
    spacing: Spacing,
}

impl TimeGrid {
    /// `t_k = t_max k / n`.
    pub fn uniform(t_max: f64, n_steps: usize) -> Result<Self> {
        Self::check(t_max, n_steps)?;
        let nodes = (1..=n_steps)
            .map(|k| t_max * k as f64 / n_steps as f64)
            .collect();
        Ok(TimeGrid {
            t_max,
            nodes,
            spacing: Spacing::Uniform,
        })
    }

    /// `t_k = t_max (k / n)^2`, refined near `t = 0`.
    pub fn graded(t_max: f64, n_steps: usize) -> Result<Self> {
        Self::check(t_max, n_steps)?;
        let nodes = (1..=n_steps)
            .map(|k| {
                let s = k as f64 / n_steps as f64;
                t_max * s * s
            })
            .collect();
        Ok(TimeGrid {
            t_max,
            nodes,
            spacing: Spacing::Graded,
        })
    }

    pub fn new(t_max: f64, n_steps: usize, graded: bool) -> Result<Self> {
        if graded {
            Self::graded(t_max, n_steps)
        } else {
            Self::uniform(t_max, n_steps)
        }
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || !(nodes[0] > 0.0) || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config(
                "time nodes must be positive and strictly increasing (at least 2)",
            ));
        }
        let t_max = *nodes.last().expect("non-empty");
        Ok(TimeGrid {
            t_max,
            nodes,
            spacing: Spacing::Custom,
        })
    }

    fn check(t_max: f64, n_steps: usize) -> Result<()> {
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::config(format!("t_max must be positive, got {t_max}")));
        }
        if n_steps < 2 {
            return Err(Error::config(format!("n_steps must be >= 2, got {n_steps}")));
        }
        Ok(())
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn n_steps(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn is_uniform(&self) -> bool {
        self.spacing == Spacing::Uniform
    }

    pub fn is_graded(&self) -> bool {
        self.spacing == Spacing::Graded
    }

    /// Node `k` with `t_0 = 0`.
    #[inline]
    fn at(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.nodes[k - 1]
        }
    }
}

/// Solver controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolterraConfig {
    pub theta: ThetaEvalConfig,
    /// Traces may leave `[0, 1]` by at most this much before the solve fails.
    pub tol_clip: f64,
}

impl Default for VolterraConfig {
    fn default() -> Self {
        VolterraConfig {
            theta: ThetaEvalConfig::default(),
            tol_clip: 1e-6,
        }
    }
}

/// Wall traces on a time grid, with their running integrals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTraces {
    pub grid: TimeGrid,
    pub regime: Regime,
    /// `u(0, t_k)` (σ regime) or `v₋(t_k)` (limit and Dirichlet).
    pub trace_minus: Vec<f64>,
    pub trace_plus: Vec<f64>,
    /// `∫_0^{t_k} trace`.
    pub psi_minus: Vec<f64>,
    pub psi_plus: Vec<f64>,
    /// Trace values used at `t = 0` when interpolating.
    pub start_minus: f64,
    pub start_plus: f64,
    /// Initial reservoir contents.
    pub v0_minus: f64,
    pub v0_plus: f64,
}

impl BoundaryTraces {
    pub fn trace(&self, side: Side) -> &[f64] {
        match side {
            Side::Minus => &self.trace_minus,
            Side::Plus => &self.trace_plus,
        }
    }

    pub fn psi(&self, side: Side) -> &[f64] {
        match side {
            Side::Minus => &self.psi_minus,
            Side::Plus => &self.psi_plus,
        }
    }

    pub fn start(&self, side: Side) -> f64 {
        match side {
            Side::Minus => self.start_minus,
            Side::Plus => self.start_plus,
        }
    }

    pub fn v0(&self, side: Side) -> f64 {
        match side {
            Side::Minus => self.v0_minus,
            Side::Plus => self.v0_plus,
        }
    }

    /// Trace node values including the `t = 0` entry.
    pub fn values_with_start(&self, side: Side) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.grid.n_steps() + 1);
        v.push(self.start(side));
        v.extend_from_slice(self.trace(side));
        v
    }

    /// Node times including `t = 0`.
    pub fn times_with_origin(&self) -> Vec<f64> {
        let mut t = Vec::with_capacity(self.grid.n_steps() + 1);
        t.push(0.0);
        t.extend_from_slice(self.grid.nodes());
        t
    }

    /// Piecewise-linear interpolation of the trace.
    pub fn value_at(&self, side: Side, t: f64) -> Result<f64> {
        let nodes = self.grid.nodes();
        if !(t >= 0.0) || t > self.grid.t_max() * (1.0 + 1e-12) {
            return Err(Error::domain(format!(
                "t = {t} is outside the trace coverage [0, {}]",
                self.grid.t_max()
            )));
        }
        let tr = self.trace(side);
        let k = nodes.partition_point(|&x| x < t);
        if k >= nodes.len() {
            return Ok(tr[tr.len() - 1]);
        }
        let (t0, v0) = if k == 0 {
            (0.0, self.start(side))
        } else {
            (nodes[k - 1], tr[k - 1])
        };
        let w = (t - t0) / (nodes[k] - t0);
        Ok(v0 + w * (tr[k] - v0))
    }

    /// The same traces with the sides exchanged.
    pub fn swapped(&self) -> BoundaryTraces {
        BoundaryTraces {
            grid: self.grid.clone(),
            regime: self.regime,
            trace_minus: self.trace_plus.clone(),
            trace_plus: self.trace_minus.clone(),
            psi_minus: self.psi_plus.clone(),
            psi_plus: self.psi_minus.clone(),
            start_minus: self.start_plus,
            start_plus: self.start_minus,
            v0_minus: self.v0_plus,
            v0_plus: self.v0_minus,
        }
    }

    /// Reject traces outside `[-tol, 1 + tol]`.
    pub fn check_range(&self, tol: f64) -> Result<()> {
        for (name, tr) in [("trace_minus", &self.trace_minus), ("trace_plus", &self.trace_plus)] {
            if let Some((k, &v)) = tr
                .iter()
                .enumerate()
                .find(|(_, v)| !(**v >= -tol && **v <= 1.0 + tol))
            {
                return Err(Error::Instability {
                    what: name.into(),
                    node: k + 1,
                    time: self.grid.nodes()[k],
                    value: v,
                });
            }
        }
        Ok(())
    }
}

/// Sums `term(n)` for `n = 1, 2, ...` with magnitudes decaying once `a_n ≥ spread`.
fn one_sided_sum<T, F>(first: f64, spread: f64, cfg: &ThetaEvalConfig, mut term: F) -> Result<T>
where
    T: Default + std::ops::AddAssign,
    F: FnMut(f64) -> (T, f64),
{
    let mut acc = T::default();
    for n in 0..cfg.max_images {
        let a = first + 2.0 * n as f64;
        let (v, mag) = term(a);
        if mag < cfg.abs_tol && a >= spread {
            return Ok(acc);
        }
        acc += v;
    }
    Err(Error::ToleranceNotMet {
        what: "one-sided image sum".into(),
        achieved: term(first + 2.0 * cfg.max_images as f64).1,
    })
}

fn check_kernel_args(t: f64, side: Side, sigma: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("kernel time must be positive, got {t}")));
    }
    if side == Side::Minus && !(sigma > 0.0) {
        return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
    }
    Ok(())
}

/// `E_σ(τ) = σ^{-1} ∫_0^τ e^{-w/σ} (τ - w)^{-1/2} dw = 2 σ^{-1/2} D(√(τ/σ))`.
fn relaxation_abel(tau: f64, sigma: f64) -> f64 {
    2.0 / sigma.sqrt() * dawson((tau / sigma).sqrt())
}

/// `d/dτ E_σ(τ)`.
fn relaxation_abel_rate(tau: f64, sigma: f64) -> f64 {
    sigma.powf(-1.5) * dawson_reciprocal_gap((tau / sigma).sqrt())
}

/// `∫_0^τ E_σ = 2√σ (x - D(x))`, `x = √(τ/σ)`.
fn relaxation_abel_integral(tau: f64, sigma: f64) -> f64 {
    2.0 * sigma.sqrt() * dawson_residual((tau / sigma).sqrt())
}

/// Kernel entries of the ψ system: `K₋` on the diagonal, `K₊` off it.
pub fn kernel_k(side: Side, t: f64, sigma: f64, cfg: &ThetaEvalConfig) -> Result<f64> {
    check_kernel_args(t, side, sigma)?;
    let spread = t.sqrt();
    match side {
        Side::Plus => {
            let s: f64 = one_sided_sum(1.0, spread, cfg, |a| {
                let v = first_passage_density(a, t);
                (v, v)
            })?;
            Ok(2.0 * s)
        }
        Side::Minus => {
            let s: f64 = one_sided_sum(2.0, spread, cfg, |a| {
                let v = first_passage_density(a, t);
                (v, v)
            })?;
            Ok(-2.0 * s - ALPHA * relaxation_abel_rate(t, sigma))
        }
    }
}

/// `-2 σ^{-3} ∫_0^t √(t - w) e^{-w/σ} dw`, by Gauss–Legendre after `w = t(1 - v^2)`.
pub fn exponential_memory_term(t: f64, sigma: f64) -> f64 {
    let gl = GaussLegendre::new(48);
    let integral = gl.integrate(
        |v| 2.0 * t * t.sqrt() * v * v * (-(t * (1.0 - v * v)) / sigma).exp(),
        0.0,
        1.0,
    );
    -2.0 * sigma.powi(-3) * integral
}

/// `K±` from the `y`-integral representation, `y = sin^2 θ`, with a 48-node
/// Gauss–Legendre rule in `θ`. Agrees with [`kernel_k`] where the integrand
/// is resolved (roughly `t ≳ 0.05`); kept as an independent cross-check.
pub fn kernel_k_quadrature(side: Side, t: f64, sigma: f64, cfg: &ThetaEvalConfig) -> Result<f64> {
    check_kernel_args(t, side, sigma)?;
    let gl = GaussLegendre::new(48);
    let first = match side {
        Side::Minus => 2.0,
        Side::Plus => 1.0,
    };
    let mut failure = None;
    // dy / √(y(1-y)) = 2 dθ
    let y_integral = gl.integrate(
        |th| {
            let y = th.sin().powi(2);
            if y == 0.0 {
                return 0.0;
            }
            let s = one_sided_sum(first, (y * t).sqrt(), cfg, |a| {
                let v = (-(a * a) / (2.0 * y * t)).exp() * a * a / (2.0 * y * t * t);
                (v, v)
            });
            match s {
                Ok(s) => 2.0 * s,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        std::f64::consts::FRAC_PI_2,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let c = 2.0 / (2.0 * std::f64::consts::PI).sqrt();
    match side {
        Side::Plus => Ok(ALPHA * c * y_integral),
        Side::Minus => Ok(ALPHA
            * (-c * y_integral - 1.0 / (sigma * t.sqrt()) + 2.0 * t.sqrt() / (sigma * sigma)
                + exponential_memory_term(t, sigma))),
    }
}

/// Exact moments of `K±` on `[0, τ]`.
pub fn kernel_k_moments(side: Side, tau: f64, sigma: f64, cfg: &ThetaEvalConfig) -> Result<Moments> {
    if tau <= 0.0 {
        return Ok(Moments::ZERO);
    }
    let spread = tau.sqrt();
    match side {
        Side::Plus => {
            let m: Moments = one_sided_sum(1.0, spread, cfg, |a| {
                let m = first_passage_moments(a, tau);
                (m, m.zeroth)
            })?;
            Ok(m.scale(2.0))
        }
        Side::Minus => {
            let m: Moments = one_sided_sum(2.0, spread, cfg, |a| {
                let m = first_passage_moments(a, tau);
                (m, m.zeroth)
            })?;
            let x = (tau / sigma).sqrt();
            let d = dawson(x);
            let bracket = if x < 1.0 {
                x * x * x - dawson_residual(x) * (1.0 + x * x)
            } else {
                (1.0 + x * x) * d - x
            };
            let relax = Moments {
                zeroth: -ALPHA * relaxation_abel(tau, sigma),
                first: -ALPHA * 2.0 * sigma.sqrt() * bracket,
            };
            Ok(m.scale(-2.0) + relax)
        }
    }
}

/// `F±(x) = α ∫_0^x (x - t)^{-1/2} [f±(t) + v₀,±(1 - e^{-t/σ})] dt`, in closed form
/// apart from one quadrature over the initial datum.
pub fn forcing_f(
    side: Side,
    x: f64,
    sigma: f64,
    u0: &InitialData,
    cfg: &ThetaEvalConfig,
) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("forcing time must be positive, got {x}")));
    }
    if !(sigma > 0.0) {
        return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
    }
    let (wall, v0) = match side {
        Side::Minus => (0.0, u0.v0_minus),
        Side::Plus => (1.0, u0.v0_plus),
    };
    let breaks = layered_breakpoints(u0, &[wall], x);
    let interior = integrate_against_datum(u0, &breaks, cfg, "forcing quadrature", |rp| {
        let d = match side {
            Side::Minus => rp,
            Side::Plus => 1.0 - rp,
        };
        abel_exit_kernel(d, x, cfg)
    })?;
    let relax = relaxation_abel_integral(x, sigma);
    Ok(ALPHA * (interior + v0 * relax))
}

/// Moments of `K(t_k - s)` needed for node `k`: entry `j` holds `I(t_k - t_j)`.
struct MomentTable<'a, F> {
    grid: &'a TimeGrid,
    moments: F,
    by_lag: Option<Vec<[Moments; 2]>>,
}

impl<'a, F> MomentTable<'a, F>
where
    F: Fn(f64) -> Result<[Moments; 2]>,
{
    fn new(grid: &'a TimeGrid, moments: F) -> Result<Self> {
        let by_lag = if grid.is_uniform() {
            let h = grid.t_max() / grid.n_steps() as f64;
            let mut v = Vec::with_capacity(grid.n_steps() + 1);
            for m in 0..=grid.n_steps() {
                v.push(moments(m as f64 * h)?);
            }
            Some(v)
        } else {
            None
        };
        Ok(MomentTable {
            grid,
            moments,
            by_lag,
        })
    }

    fn row(&self, k: usize, out: &mut Vec<[Moments; 2]>) -> Result<()> {
        out.clear();
        match &self.by_lag {
            Some(lag) => out.extend((0..=k).map(|j| lag[k - j])),
            None => {
                let tk = self.grid.at(k);
                for j in 0..=k {
                    out.push((self.moments)(tk - self.grid.at(j))?);
                }
            }
        }
        Ok(())
    }
}

/// Product-integration weights on `x_{j-1}` and `x_j` for panel `j` at node `k`.
#[inline]
fn panel_weights(grid: &TimeGrid, row: &[[Moments; 2]], k: usize, j: usize, c: usize) -> (f64, f64) {
    let tk = grid.at(k);
    let ua = tk - grid.at(j);
    let ub = tk - grid.at(j - 1);
    let h = ub - ua;
    let d = row[j - 1][c] - row[j][c];
    ((d.first - ua * d.zeroth) / h, (ub * d.zeroth - d.first) / h)
}

/// Marches `x(t_k) = G_k + ∫_0^{t_k} [[D, C], [C, D]](t_k - s) x(s) ds`
/// with `x(0) = x0`, where `moments(τ)` returns the moments of `[D, C]`.
fn march_symmetric<F>(
    grid: &TimeGrid,
    x0: [f64; 2],
    forcing: &[[f64; 2]],
    moments: F,
    what: &str,
) -> Result<Vec<[f64; 2]>>
where
    F: Fn(f64) -> Result<[Moments; 2]>,
{
    let n = grid.n_steps();
    let table = MomentTable::new(grid, moments)?;
    let mut xs: Vec<[f64; 2]> = Vec::with_capacity(n + 1);
    xs.push(x0);
    let mut row = Vec::with_capacity(n + 1);
    for k in 1..=n {
        table.row(k, &mut row)?;
        let mut hist = forcing[k - 1];
        for j in 1..=k {
            let (dl, dr) = panel_weights(grid, &row, k, j, 0);
            let (cl, cr) = panel_weights(grid, &row, k, j, 1);
            let xl = xs[j - 1];
            hist[0] += dl * xl[0] + cl * xl[1];
            hist[1] += cl * xl[0] + dl * xl[1];
            if j < k {
                let xr = xs[j];
                hist[0] += dr * xr[0] + cr * xr[1];
                hist[1] += cr * xr[0] + dr * xr[1];
            }
        }
        let (dd, cd) = (panel_weights(grid, &row, k, k, 0).1, panel_weights(grid, &row, k, k, 1).1);
        // symmetric 2x2 block: decouple into sum and difference
        let den_s = 1.0 - dd - cd;
        let den_d = 1.0 - dd + cd;
        if den_s.abs() < 1e-12 || den_d.abs() < 1e-12 {
            return Err(Error::IterationLimit {
                what: format!("{what}: singular implicit step at node {k}"),
                iterations: 0,
            });
        }
        let s = (hist[0] + hist[1]) / den_s;
        let d = (hist[0] - hist[1]) / den_d;
        let x = [0.5 * (s + d), 0.5 * (s - d)];
        if !(x[0].is_finite() && x[1].is_finite()) {
            return Err(Error::Instability {
                what: what.into(),
                node: k,
                time: grid.at(k),
                value: if x[0].is_finite() { x[1] } else { x[0] },
            });
        }
        xs.push(x);
    }
    Ok(xs)
}

/// `∫_0^{t_k} [[D, C], [C, D]](t_k - s) g(s) ds` for piecewise-linear `g`.
fn convolve_symmetric<F>(
    grid: &TimeGrid,
    g: &[[f64; 2]],
    moments: F,
) -> Result<Vec<[f64; 2]>>
where
    F: Fn(f64) -> Result<[Moments; 2]>,
{
    let n = grid.n_steps();
    let table = MomentTable::new(grid, moments)?;
    let mut row = Vec::with_capacity(n + 1);
    let mut out = Vec::with_capacity(n);
    for k in 1..=n {
        table.row(k, &mut row)?;
        let mut acc = [0.0; 2];
        for j in 1..=k {
            let (dl, dr) = panel_weights(grid, &row, k, j, 0);
            let (cl, cr) = panel_weights(grid, &row, k, j, 1);
            let (xl, xr) = (g[j - 1], g[j]);
            acc[0] += dl * xl[0] + cl * xl[1] + dr * xr[0] + cr * xr[1];
            acc[1] += cl * xl[0] + dl * xl[1] + cr * xr[0] + dr * xr[1];
        }
        out.push(acc);
    }
    Ok(out)
}

/// Derivative of `ψ` at the nodes: `ψ_1/t_1` first, then backward three-point differences.
fn differentiate(grid: &TimeGrid, psi: &[f64]) -> Vec<f64> {
    // psi[0] is the value at t = 0
    let n = grid.n_steps();
    let mut d = Vec::with_capacity(n);
    d.push(psi[1] / grid.at(1));
    for k in 2..=n {
        let h1 = grid.at(k) - grid.at(k - 1);
        let h2 = grid.at(k - 1) - grid.at(k - 2);
        let v = psi[k] * (2.0 * h1 + h2) / (h1 * (h1 + h2)) - psi[k - 1] * (h1 + h2) / (h1 * h2)
            + psi[k - 2] * h1 / (h2 * (h1 + h2));
        d.push(v);
    }
    d
}

fn cumulative_trapezoid(grid: &TimeGrid, start: f64, values: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut prev = start;
    let mut out = Vec::with_capacity(values.len());
    for (k, &v) in values.iter().enumerate() {
        acc += 0.5 * (prev + v) * (grid.at(k + 1) - grid.at(k));
        prev = v;
        out.push(acc);
    }
    out
}

fn sigma_moments(tau: f64, sigma: f64, cfg: &ThetaEvalConfig) -> Result<[Moments; 2]> {
    Ok([
        kernel_k_moments(Side::Minus, tau, sigma, cfg)?,
        kernel_k_moments(Side::Plus, tau, sigma, cfg)?,
    ])
}

fn limit_moments(tau: f64, cfg: &ThetaEvalConfig) -> Result<[Moments; 2]> {
    Ok([
        theta_moments(0.0, tau, cfg)?.scale(-1.0),
        theta_moments(1.0, tau, cfg)?,
    ])
}

fn boundary_forcing(u0: &InitialData, grid: &TimeGrid, cfg: &ThetaEvalConfig) -> Result<Vec<[f64; 2]>> {
    grid.nodes()
        .iter()
        .map(|&t| {
            Ok([
                f_boundary(Side::Minus, u0, t, cfg)?,
                f_boundary(Side::Plus, u0, t, cfg)?,
            ])
        })
        .collect()
}

/// Solves the ψ system for `σ > 0` and recovers the wall traces `u^σ(0, ·)`, `u^σ(1, ·)`.
pub fn solve_sigma_boundary(
    sigma: f64,
    u0: &InitialData,
    grid: &TimeGrid,
    cfg: &VolterraConfig,
) -> Result<BoundaryTraces> {
    Regime::Sigma(sigma).validate()?;
    u0.validate()?;
    let th = &cfg.theta;
    let forcing: Vec<[f64; 2]> = grid
        .nodes()
        .iter()
        .map(|&x| {
            Ok([
                forcing_f(Side::Minus, x, sigma, u0, th)?,
                forcing_f(Side::Plus, x, sigma, u0, th)?,
            ])
        })
        .collect::<Result<_>>()?;
    let psi = march_symmetric(
        grid,
        [0.0, 0.0],
        &forcing,
        |tau| sigma_moments(tau, sigma, th),
        "sigma boundary system",
    )?;
    let psi_minus: Vec<f64> = psi.iter().map(|x| x[0]).collect();
    let psi_plus: Vec<f64> = psi.iter().map(|x| x[1]).collect();
    let trace_minus = differentiate(grid, &psi_minus);
    let trace_plus = differentiate(grid, &psi_plus);
    let traces = BoundaryTraces {
        grid: grid.clone(),
        regime: Regime::Sigma(sigma),
        start_minus: trace_minus[0],
        start_plus: trace_plus[0],
        trace_minus,
        trace_plus,
        psi_minus: psi_minus[1..].to_vec(),
        psi_plus: psi_plus[1..].to_vec(),
        v0_minus: u0.v0_minus,
        v0_plus: u0.v0_plus,
    };
    traces.check_range(cfg.tol_clip)?;
    Ok(traces)
}

/// Solves the limit system for the wall values `v±`.
pub fn solve_limit_boundary(
    u0: &InitialData,
    grid: &TimeGrid,
    cfg: &VolterraConfig,
) -> Result<BoundaryTraces> {
    u0.validate()?;
    let th = &cfg.theta;
    let forcing: Vec<[f64; 2]> = boundary_forcing(u0, grid, th)?
        .into_iter()
        .map(|f| [u0.v0_minus + f[0], u0.v0_plus + f[1]])
        .collect();
    let v = march_symmetric(
        grid,
        [u0.v0_minus, u0.v0_plus],
        &forcing,
        |tau| limit_moments(tau, th),
        "limit boundary system",
    )?;
    let trace_minus: Vec<f64> = v[1..].iter().map(|x| x[0]).collect();
    let trace_plus: Vec<f64> = v[1..].iter().map(|x| x[1]).collect();
    let traces = BoundaryTraces {
        grid: grid.clone(),
        regime: Regime::Limit,
        psi_minus: cumulative_trapezoid(grid, u0.v0_minus, &trace_minus),
        psi_plus: cumulative_trapezoid(grid, u0.v0_plus, &trace_plus),
        trace_minus,
        trace_plus,
        start_minus: u0.v0_minus,
        start_plus: u0.v0_plus,
        v0_minus: u0.v0_minus,
        v0_plus: u0.v0_plus,
    };
    traces.check_range(cfg.tol_clip)?;
    Ok(traces)
}

/// Constant wall values `v₀,±` for the absorbed problem.
pub fn dirichlet_traces(u0: &InitialData, grid: &TimeGrid) -> BoundaryTraces {
    let n = grid.n_steps();
    let trace_minus = vec![u0.v0_minus; n];
    let trace_plus = vec![u0.v0_plus; n];
    BoundaryTraces {
        grid: grid.clone(),
        regime: Regime::Dirichlet,
        psi_minus: grid.nodes().iter().map(|t| t * u0.v0_minus).collect(),
        psi_plus: grid.nodes().iter().map(|t| t * u0.v0_plus).collect(),
        trace_minus,
        trace_plus,
        start_minus: u0.v0_minus,
        start_plus: u0.v0_plus,
        v0_minus: u0.v0_minus,
        v0_plus: u0.v0_plus,
    }
}

/// Sup-norm residual of the first-kind reservoir balance (σ regime) or of the
/// limit system (limit regime), with the traces interpolated linearly.
pub fn residual_first_kind(
    traces: &BoundaryTraces,
    u0: &InitialData,
    cfg: &VolterraConfig,
) -> Result<f64> {
    let th = &cfg.theta;
    let grid = &traces.grid;
    let g: Vec<[f64; 2]> = traces
        .values_with_start(Side::Minus)
        .into_iter()
        .zip(traces.values_with_start(Side::Plus))
        .map(|(a, b)| [a, b])
        .collect();
    let f = boundary_forcing(u0, grid, th)?;
    let mut worst: f64 = 0.0;
    match traces.regime {
        Regime::Sigma(sigma) => {
            let rate = 1.0 / sigma;
            let conv = convolve_symmetric(grid, &g, |tau| {
                Ok([
                    theta_moments(0.0, tau, th)? + relaxation_moments(rate, tau),
                    theta_moments(1.0, tau, th)?.scale(-1.0),
                ])
            })?;
            for (k, &t) in grid.nodes().iter().enumerate() {
                let relax = -(-t * rate).exp_m1();
                let r0 = conv[k][0] - f[k][0] - u0.v0_minus * relax;
                let r1 = conv[k][1] - f[k][1] - u0.v0_plus * relax;
                worst = worst.max(r0.abs()).max(r1.abs());
            }
        }
        Regime::Limit => {
            let conv = convolve_symmetric(grid, &g, |tau| limit_moments(tau, th))?;
            for k in 0..grid.n_steps() {
                let r0 = g[k + 1][0] - u0.v0_minus - f[k][0] - conv[k][0];
                let r1 = g[k + 1][1] - u0.v0_plus - f[k][1] - conv[k][1];
                worst = worst.max(r0.abs()).max(r1.abs());
            }
        }
        Regime::Dirichlet => {
            for k in 0..grid.n_steps() {
                let r0 = g[k + 1][0] - u0.v0_minus;
                let r1 = g[k + 1][1] - u0.v0_plus;
                worst = worst.max(r0.abs()).max(r1.abs());
            }
        }
    }
    Ok(worst)
}

/// Solve for whichever regime is requested.
pub fn solve_boundary(
    regime: Regime,
    u0: &InitialData,
    grid: &TimeGrid,
    cfg: &VolterraConfig,
) -> Result<BoundaryTraces> {
    match regime {
        Regime::Sigma(s) => solve_sigma_boundary(s, u0, grid, cfg),
        Regime::Limit => solve_limit_boundary(u0, grid, cfg),
        Regime::Dirichlet => Ok(dirichlet_traces(u0, grid)),
    }
}
