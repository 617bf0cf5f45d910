use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sticky_heat::fd_oracle::{solve_fd, FDConfig};
use sticky_heat::field::{diagnostics, sigma_sweep, DiagnosticsRow, SweepRow};
use sticky_heat::report;
use sticky_heat::stochastic::{
    local_time_cauchy, mc_absorbed, mc_estimate, simulate_reflected_bm, simulate_sticky_rw,
    sticky_from_reflected, LocalTimeCauchy,
};
use sticky_heat::{FieldSolution, MCEstimate, McMethod, PathRecord, Regime, VolterraConfig};

use crate::config::{Format, RunConfig};
use crate::error::CliError;

/// Largest difference allowed between the series and the finite-difference solution.
pub const SUP_DIFF_TOL: f64 = 5e-3;
/// Largest accepted `|u_series - mc.mean| / stderr`.
pub const Z_TOL: f64 = 3.0;
/// With zero sample variance the estimate must match to this absolute tolerance.
pub const EXACT_TOL: f64 = 1e-6;
/// At most this many paths are written by `--dump-paths`.
pub const DUMP_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Simulate,
    Compare,
    Converge,
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub dump_paths: bool,
    pub seed: Option<u64>,
}

/// Loads the config, applies the overrides and runs `cmd`.
pub fn run(cmd: Command, config: &Path, ov: &Overrides) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(dir) = &ov.out {
        cfg.outputs.dir = dir.clone();
    }
    if let Some(seed) = ov.seed {
        cfg.override_seed(seed);
    }
    run_config(cmd, &cfg, ov.dump_paths)
}

pub fn run_config(cmd: Command, cfg: &RunConfig, dump_paths: bool) -> Result<(), CliError> {
    cfg.validate()?;
    let out = Output::create(&cfg.outputs.dir)?;
    out.write("manifest.json", &cfg.to_json())?;
    match cmd {
        Command::Solve => solve(cfg, &out),
        Command::Simulate => simulate(cfg, &out, dump_paths),
        Command::Compare => compare(cfg, &out),
        Command::Converge => converge(cfg, &out),
    }
}

struct Output {
    dir: PathBuf,
}

impl Output {
    fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| write_error(dir, e))?;
        Ok(Output {
            dir: dir.to_path_buf(),
        })
    }

    fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| write_error(parent, e))?;
        }
        fs::write(&path, contents).map_err(|e| write_error(&path, e))
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Output {
            path: self.dir.join(name).display().to_string(),
            reason: e.to_string(),
        })?;
        s.push('\n');
        self.write(name, &s)
    }
}

fn write_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Output {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

fn field(cfg: &RunConfig) -> Result<FieldSolution, CliError> {
    Ok(FieldSolution::solve(
        cfg.regime(),
        &cfg.initial_data()?,
        &cfg.time_grid()?,
        &VolterraConfig::default(),
    )?)
}

#[derive(Serialize)]
struct Snapshot {
    t: f64,
    positions: Vec<f64>,
    u: Vec<f64>,
}

#[derive(Serialize)]
struct SolveReport {
    regime: &'static str,
    snapshots: Vec<Snapshot>,
    diagnostics: Vec<DiagnosticsRow>,
}

fn solve(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let sol = field(cfg)?;
    let positions = &cfg.probes.positions;
    let mut snapshots = Vec::with_capacity(cfg.probes.times.len());
    for &t in &cfg.probes.times {
        snapshots.push(Snapshot {
            t,
            positions: positions.clone(),
            u: sol.snapshot(positions, t)?,
        });
    }
    let diag = diagnostics(&sol, &cfg.probes.times)?;
    if cfg.writes(Format::Csv) {
        out.write("traces.csv", &report::traces_csv(&sol.traces)?)?;
        for s in &snapshots {
            out.write(
                &format!("snapshot_t{}.csv", s.t),
                &report::snapshot_csv(&s.positions, &s.u)?,
            )?;
        }
        out.write("diagnostics.csv", &report::diagnostics_csv(&diag)?)?;
    }
    if cfg.writes(Format::Json) {
        out.write_json(
            "solve.json",
            &SolveReport {
                regime: sol.regime().name(),
                snapshots,
                diagnostics: diag,
            },
        )?;
    }
    Ok(())
}

/// Monte Carlo estimate at the `mc` probe for the configured regime.
///
/// The limit regime uses sticky Brownian motion, the Dirichlet regime an
/// absorbed Euler walk with the step of `reflected_tc`. The σ regime has no
/// path representation here.
fn estimate(cfg: &RunConfig) -> Result<MCEstimate, CliError> {
    let mc = cfg
        .mc
        .as_ref()
        .ok_or_else(|| CliError::Config("this command needs an mc block".into()))?;
    let u0 = cfg.initial_data()?;
    match (cfg.regime(), mc.method) {
        (Regime::Limit, m) => Ok(mc_estimate(mc.r, mc.t, &u0, mc.n_paths, m, mc.seed)?),
        (Regime::Dirichlet, McMethod::ReflectedTc { dt }) => {
            Ok(mc_absorbed(mc.r, mc.t, &u0, mc.n_paths, dt, mc.seed)?)
        }
        (Regime::Dirichlet, _) => Err(CliError::Config(
            "the dirichlet regime needs method reflected_tc (its dt drives the absorbed walk)".into(),
        )),
        (Regime::Sigma(_), _) => Err(CliError::Config(
            "no Monte Carlo estimator for the sigma regime; use regime limit or dirichlet".into(),
        )),
    }
}

fn sample_path(method: McMethod, r: f64, t: f64, seed: u64) -> Result<PathRecord, CliError> {
    Ok(match method {
        McMethod::StickyRw { n } => {
            let top = (n + 1) as f64;
            let x0 = (r * top).round() as usize;
            simulate_sticky_rw(n, x0, top * top * t, seed)?
        }
        McMethod::ReflectedTc { dt } => {
            sticky_from_reflected(&simulate_reflected_bm(r, t, dt, seed)?)?
        }
    })
}

fn simulate(cfg: &RunConfig, out: &Output, dump_paths: bool) -> Result<(), CliError> {
    let est = estimate(cfg)?;
    if cfg.writes(Format::Json) {
        out.write_json("estimate.json", &est)?;
    }
    if cfg.writes(Format::Csv) {
        out.write(
            "estimate.csv",
            &format!(
                "mean,stderr,n_paths,seed\n{},{},{},{}\n",
                est.mean, est.stderr, est.n_paths, est.seed
            ),
        )?;
    }
    if dump_paths {
        let mc = cfg.mc.as_ref().expect("checked by estimate");
        for i in 0..mc.n_paths.min(DUMP_LIMIT) {
            let path = sample_path(mc.method, mc.r, mc.t, mc.seed.wrapping_add(i as u64))?;
            out.write(&format!("paths/path_{i}.csv"), &report::path_csv(&path)?)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct ComparisonRow {
    r: f64,
    t: f64,
    u_series: f64,
    u_fd: f64,
    diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McCheck {
    pub r: f64,
    pub t: f64,
    pub u_series: f64,
    pub estimate: MCEstimate,
    pub z: f64,
    pub pass: bool,
}

#[derive(Serialize)]
struct CompareReport {
    regime: &'static str,
    sup_diff: f64,
    sup_diff_tol: f64,
    fd_pass: bool,
    mc: Option<McCheck>,
    z_tol: f64,
    pass: bool,
}

/// `|u - mean| / stderr`; a zero stderr gives 0 for an exact match and infinity otherwise.
pub fn z_score(u: f64, est: &MCEstimate) -> f64 {
    let diff = (u - est.mean).abs();
    if est.stderr > 0.0 {
        diff / est.stderr
    } else if diff <= EXACT_TOL {
        0.0
    } else {
        f64::INFINITY
    }
}

fn compare(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let sol = field(cfg)?;
    let fd_block = cfg.fd_block();
    let fd_cfg = FDConfig::new(fd_block.n_space, fd_block.n_time, cfg.grid.t_max, cfg.regime());
    let fd = solve_fd(&cfg.initial_data()?, &fd_cfg)?;

    let mut rows = Vec::new();
    for &t in &cfg.probes.times {
        let u = sol.snapshot(&cfg.probes.positions, t)?;
        for (&r, &u_series) in cfg.probes.positions.iter().zip(&u) {
            let u_fd = fd.sample(r, t)?;
            rows.push(ComparisonRow {
                r,
                t,
                u_series,
                u_fd,
                diff: (u_series - u_fd).abs(),
            });
        }
    }
    let sup_diff = rows.iter().map(|r| r.diff).fold(0.0, f64::max);
    let fd_pass = sup_diff <= SUP_DIFF_TOL;

    let mc = match (&cfg.mc, cfg.regime()) {
        (Some(m), Regime::Limit | Regime::Dirichlet) => {
            let estimate = estimate(cfg)?;
            let u_series = sol.evaluate_u(m.r, m.t)?;
            let z = z_score(u_series, &estimate);
            Some(McCheck {
                r: m.r,
                t: m.t,
                u_series,
                estimate,
                z,
                pass: z <= Z_TOL,
            })
        }
        _ => None,
    };
    let pass = fd_pass && mc.as_ref().is_none_or(|m| m.pass);

    if cfg.writes(Format::Csv) {
        out.write("comparison.csv", &csv_rows(&rows))?;
    }
    if cfg.writes(Format::Json) {
        out.write_json(
            "compare.json",
            &CompareReport {
                regime: sol.regime().name(),
                sup_diff,
                sup_diff_tol: SUP_DIFF_TOL,
                fd_pass,
                z_tol: Z_TOL,
                mc: mc.clone(),
                pass,
            },
        )?;
    }
    if pass {
        return Ok(());
    }
    let mut why = Vec::new();
    if !fd_pass {
        why.push(format!("sup |u_series - u_fd| = {sup_diff:.3e} > {SUP_DIFF_TOL:e}"));
    }
    if let Some(m) = mc.filter(|m| !m.pass) {
        why.push(format!("z = {:.2} > {Z_TOL}", m.z));
    }
    Err(CliError::Acceptance(why.join("; ")))
}

fn csv_rows(rows: &[ComparisonRow]) -> String {
    let mut s = String::from("r,t,u_series,u_fd,diff\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{},{}\n", r.r, r.t, r.u_series, r.u_fd, r.diff));
    }
    s
}

#[derive(Serialize)]
struct ConvergeReport {
    sweep: Vec<SweepRow>,
    /// Gap columns strictly decrease with σ at every probe time.
    gaps_monotone: bool,
    local_time: Option<LocalTimeCauchy>,
}

/// True when, at every probe time, both gaps strictly decrease as σ decreases.
pub fn gaps_monotone(rows: &[SweepRow]) -> bool {
    let mut times: Vec<f64> = rows.iter().map(|r| r.t).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    times.iter().all(|&t| {
        let mut at: Vec<&SweepRow> = rows.iter().filter(|r| r.t == t).collect();
        at.sort_by(|a, b| b.sigma.total_cmp(&a.sigma));
        at.windows(2)
            .all(|w| w[1].gap_minus < w[0].gap_minus && w[1].gap_plus < w[0].gap_plus)
    })
}

fn converge(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let c = cfg
        .converge
        .as_ref()
        .ok_or_else(|| CliError::Config("converge needs a converge block".into()))?;
    let sweep = if c.sigmas.is_empty() {
        Vec::new()
    } else {
        sigma_sweep(
            &c.sigmas,
            &cfg.initial_data()?,
            &cfg.time_grid()?,
            &cfg.probes.times,
            &cfg.probes.positions,
            &VolterraConfig::default(),
        )?
    };
    let local_time = if c.lattice_sizes.is_empty() {
        None
    } else {
        Some(local_time_cauchy(&c.lattice_sizes, c.r, c.t, c.n_paths, c.seed)?)
    };
    if cfg.writes(Format::Csv) {
        if !c.sigmas.is_empty() {
            out.write("sweep.csv", &report::sweep_csv(&sweep)?)?;
        }
        if let Some(lt) = &local_time {
            out.write("local_time.csv", &report::local_time_csv(lt)?)?;
        }
    }
    if cfg.writes(Format::Json) {
        out.write_json(
            "converge.json",
            &ConvergeReport {
                gaps_monotone: gaps_monotone(&sweep),
                sweep,
                local_time,
            },
        )?;
    }
    Ok(())
}
