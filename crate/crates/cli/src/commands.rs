//! The five subcommands, their shared plumbing, and the mapping from
//! library failures to process exit codes.
//!
//! Exit codes: 0 success, 2 validation (bad config, bad input files, i/o),
//! 3 physics (choking, degenerate shock, unrealizable state), 4
//! non-convergence of the fixed point, 5 solvability-condition failure.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use fanno_shock_core::background::{
    build_background, d1, d2, d3, d4, mach_squared, Background, BackgroundError, CoefficientTable,
};
use fanno_shock_core::fields::TorusField;
use fanno_shock_core::gas::PrimitiveState;
use fanno_shock_core::hyperbolic::{march_supersonic, HyperbolicError};
use fanno_shock_core::scondition::{
    scan_scondition, Resolution, SconditionError, SconditionReport,
};
use fanno_shock_core::shockmap::{
    solve_transonic, verify_solution, DownstreamState, ShockError, ShockFront, SolveReport,
    SolveSettings, TransonicSolution,
};
use fanno_shock_core::venttsel::VenttselError;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::output::{fmt_f64, OutputDir};

/// Integrator substeps per output interval used by every subcommand.
const SUBSTEPS: usize = 20;

/// A failure, classified by the exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Malformed configuration or input files (exit 2).
    #[error("{0}")]
    Validation(String),
    /// The requested flow does not exist or left its regime (exit 3).
    #[error("{0}")]
    Physics(String),
    /// The fixed-point iteration did not converge (exit 4).
    #[error("{0}")]
    NoConvergence(String),
    /// The solvability condition failed or a mode system degenerated
    /// (exit 5).
    #[error("{0}")]
    Scondition(String),
    /// Filesystem failure (exit 2).
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// The process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 2,
            CliError::Physics(_) => 3,
            CliError::NoConvergence(_) => 4,
            CliError::Scondition(_) => 5,
        }
    }
}

impl From<BackgroundError> for CliError {
    fn from(e: BackgroundError) -> Self {
        match e {
            BackgroundError::InvalidConfig { .. } | BackgroundError::Gas(_) => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Physics(e.to_string()),
        }
    }
}

impl From<SconditionError> for CliError {
    fn from(e: SconditionError) -> Self {
        match e {
            SconditionError::InvalidResolution { .. } => CliError::Validation(e.to_string()),
            SconditionError::TransformationInvalid { .. } => CliError::Physics(e.to_string()),
        }
    }
}

impl From<HyperbolicError> for CliError {
    fn from(e: HyperbolicError) -> Self {
        match e {
            HyperbolicError::ShapeMismatch { .. } => CliError::Validation(e.to_string()),
            _ => CliError::Physics(e.to_string()),
        }
    }
}

impl From<ShockError> for CliError {
    fn from(e: ShockError) -> Self {
        match &e {
            ShockError::NotConverged { .. } | ShockError::Diverged { .. } => {
                CliError::NoConvergence(e.to_string())
            }
            ShockError::Venttsel(VenttselError::ModeSingular { .. })
            | ShockError::Venttsel(VenttselError::DegenerateVenttsel) => {
                CliError::Scondition(e.to_string())
            }
            ShockError::ShapeMismatch { .. } => CliError::Validation(e.to_string()),
            _ => CliError::Physics(e.to_string()),
        }
    }
}

/// Which subcommand to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Background,
    Scondition,
    Solve,
    Verify,
    Sweep,
}

impl CommandKind {
    fn name(self) -> &'static str {
        match self {
            CommandKind::Background => "background",
            CommandKind::Scondition => "scondition",
            CommandKind::Solve => "solve",
            CommandKind::Verify => "verify",
            CommandKind::Sweep => "sweep",
        }
    }
}

/// Resolved command-line inputs.
pub struct RunInputs {
    /// Configuration file path.
    pub config: PathBuf,
    /// Output directory.
    pub out: PathBuf,
    /// Worker-thread cap for the sweep.
    pub threads: usize,
    /// Skip the solvability gate before solving.
    pub force: bool,
}

/// Wall-clock laps recorded per command phase. Written to `timing.txt`,
/// which is the one deliberately non-reproducible output file.
struct Timings {
    entries: Vec<(&'static str, f64)>,
}

impl Timings {
    fn new() -> Self {
        Self { entries: Vec::new() }
    }

    fn lap(&mut self, label: &'static str, since: Instant) {
        self.entries.push((label, since.elapsed().as_secs_f64()));
    }

    fn render(&self) -> String {
        let mut text = String::new();
        let mut total = 0.0;
        for (label, secs) in &self.entries {
            text.push_str(&format!("{label}: {secs:.6} s\n"));
            total += secs;
        }
        text.push_str(&format!("total: {total:.6} s\n"));
        text
    }
}

/// Runs one subcommand end to end: loads and validates the configuration,
/// executes, writes `timing.txt`, and removes partial outputs if the
/// command failed. Returns the process exit code.
pub fn execute(kind: CommandKind, inputs: &RunInputs) -> Result<i32, CliError> {
    let cfg = RunConfig::load(&inputs.config)?;
    let mut out = OutputDir::create(&inputs.out)?;
    let mut timing = Timings::new();
    let result = match kind {
        CommandKind::Background => cmd_background(&cfg, &mut out, &mut timing),
        CommandKind::Scondition => cmd_scondition(&cfg, &mut out, &mut timing),
        CommandKind::Solve => cmd_solve(&cfg, &mut out, &mut timing, inputs.force),
        CommandKind::Verify => cmd_verify(&mut out, &mut timing),
        CommandKind::Sweep => cmd_sweep(&cfg, &mut out, &mut timing, inputs.threads),
    };
    match result {
        Ok(code) => {
            // `verify` augments an existing solve bundle and must not
            // clobber the bundle's own timing record.
            if kind != CommandKind::Verify {
                out.write_bytes("timing.txt", timing.render().as_bytes())?;
            }
            Ok(code)
        }
        Err(e) => {
            out.discard();
            Err(e)
        }
    }
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

/// One coefficient with its required sign and whether it holds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignEntry {
    pub name: String,
    pub value: f64,
    pub required: String,
    pub ok: bool,
}

/// Sign check of every scalar linearization coefficient.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignReport {
    pub entries: Vec<SignEntry>,
    pub all_ok: bool,
}

/// Summary of a solvability scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SconditionSummary {
    #[serde(rename = "Q_max")]
    pub q_max: usize,
    /// Smallest `|ϑ|` over attainable eigenvalues.
    pub min_abs_theta: f64,
    /// Smallest scale-free margin of `ϑ` over attainable eigenvalues; the
    /// pass/fail decision uses this.
    pub min_rel_theta: f64,
    /// Eigenvalue attaining the smallest `|ϑ|`.
    pub argmin_q: usize,
    /// Real roots of `ϑ` between scan points (diagnostic).
    pub zeros: Vec<f64>,
    /// Whether the kernel weight keeps one sign on the span.
    pub e4_sign_ok: bool,
    /// Whether every attainable eigenvalue clears the threshold.
    pub satisfied: bool,
}

fn summary_of(scan: &SconditionReport) -> SconditionSummary {
    SconditionSummary {
        q_max: scan.q_max,
        min_abs_theta: scan.min_abs_realizable,
        min_rel_theta: scan.min_rel_realizable,
        argmin_q: scan.argmin_q,
        zeros: scan.roots.clone(),
        e4_sign_ok: !scan.e4_vanishes,
        satisfied: scan.satisfied,
    }
}

/// The provenance record written next to every command's outputs. Contains
/// no timestamps, so identical runs produce identical bytes; wall-clock
/// laps live in the separate file named by `timing_file`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: RunConfig,
    /// Chosen straightening collar width.
    pub h_b: f64,
    pub coefficient_signs: SignReport,
    pub scondition: Option<SconditionSummary>,
    pub timing_file: String,
}

/// Builds the sign report for a coefficient table. With friction present
/// the scalars have strict signs; in the frictionless limit the friction-
/// proportional ones must vanish exactly.
pub fn sign_report(table: &CoefficientTable) -> SignReport {
    enum Req {
        Pos,
        Neg,
        Zero,
    }
    let frictionless = table.gas.mu == 0.0;
    let mut checks: Vec<(&str, f64, Req)> = vec![
        ("mu0", table.mu0, Req::Pos),
        ("det_m", table.det_m, Req::Pos),
        ("gamma2", table.gamma2, Req::Neg),
        ("mu5", table.mu5, Req::Pos),
    ];
    if frictionless {
        for (name, value) in [
            ("gamma0", table.gamma0),
            ("mu1", table.mu1),
            ("mu2", table.mu2),
            ("mu3", table.mu3),
            ("mu4", table.mu4),
            ("mu6", table.mu6),
            ("mu7", table.mu7),
            ("mu8", table.mu8),
            ("mu9", table.mu9),
        ] {
            checks.push((name, value, Req::Zero));
        }
    } else {
        checks.extend([
            ("gamma0", table.gamma0, Req::Neg),
            ("mu1", table.mu1, Req::Pos),
            ("mu2", table.mu2, Req::Neg),
            ("mu3", table.mu3, Req::Neg),
            ("mu4", table.mu4, Req::Neg),
            ("gamma1", table.gamma1, Req::Neg),
            ("mu6", table.mu6, Req::Pos),
            ("mu7", table.mu7, Req::Neg),
            ("mu8", table.mu8, Req::Pos),
            ("mu9", table.mu9, Req::Pos),
        ]);
    }
    let entries: Vec<SignEntry> = checks
        .into_iter()
        .map(|(name, value, req)| {
            let (required, ok) = match req {
                Req::Pos => ("> 0", value > 0.0),
                Req::Neg => ("< 0", value < 0.0),
                Req::Zero => ("= 0", value == 0.0),
            };
            SignEntry {
                name: name.to_string(),
                value,
                required: required.to_string(),
                ok,
            }
        })
        .collect();
    let all_ok = entries.iter().all(|e| e.ok);
    SignReport { entries, all_ok }
}

fn write_manifest(
    out: &mut OutputDir,
    kind: CommandKind,
    cfg: &RunConfig,
    bg: &Background,
    table: &CoefficientTable,
    scondition: Option<SconditionSummary>,
) -> std::io::Result<()> {
    let manifest = RunManifest {
        command: kind.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        h_b: bg.h_b,
        coefficient_signs: sign_report(table),
        scondition,
        timing_file: "timing.txt".to_string(),
    };
    out.write_json("manifest.json", &manifest)
}

// ---------------------------------------------------------------------------
// background
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
struct StateDump {
    u0: f64,
    p: f64,
    rho: f64,
    t: f64,
}

impl StateDump {
    fn of(state: &PrimitiveState, gamma: f64) -> Self {
        Self {
            u0: state.u[0],
            p: state.p,
            rho: state.rho,
            t: mach_squared(state, gamma),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct NodeDump {
    y: f64,
    e1: f64,
    e2: f64,
    e3: f64,
    e4: f64,
    e5: f64,
    e6: f64,
    b: f64,
    b_x: f64,
    b_xx: f64,
    j: f64,
    t: f64,
    d1: f64,
    d2: f64,
    d3: f64,
    d4: f64,
}

#[derive(Debug, Clone, Serialize)]
struct CoefficientsDump {
    gamma: f64,
    mu: f64,
    #[serde(rename = "L")]
    l: f64,
    r_b: f64,
    h_b: f64,
    upstream: StateDump,
    downstream: StateDump,
    m_matrix: [[f64; 3]; 3],
    det_m: f64,
    mu0: f64,
    mu_hat: [f64; 4],
    mu1: f64,
    mu2: f64,
    mu3: f64,
    mu4: f64,
    mu4_over_mu2: f64,
    gamma0: f64,
    gamma1: f64,
    gamma2: f64,
    k_a: f64,
    k_e: f64,
    mu5: f64,
    mu6: f64,
    mu7: f64,
    mu8: f64,
    mu9: f64,
    signs: SignReport,
    nodes: Vec<NodeDump>,
}

fn coefficients_dump(bg: &Background, table: &CoefficientTable) -> CoefficientsDump {
    let gamma = table.gas.gamma;
    let nodes = (0..table.node_count())
        .map(|i| {
            let y = table.node_x(i);
            let c = table.eval(y);
            NodeDump {
                y,
                e1: c.e1,
                e2: c.e2,
                e3: c.e3,
                e4: c.e4,
                e5: c.e5,
                e6: c.e6,
                b: c.b,
                b_x: c.b_x,
                b_xx: c.b_xx,
                j: c.j,
                t: c.t,
                d1: d1(c.t, gamma),
                d2: d2(c.t, gamma),
                d3: d3(c.t, gamma),
                d4: d4(c.t, gamma),
            }
        })
        .collect();
    CoefficientsDump {
        gamma,
        mu: table.gas.mu,
        l: table.l,
        r_b: table.r_b,
        h_b: bg.h_b,
        upstream: StateDump::of(&table.upstream, gamma),
        downstream: StateDump::of(&table.downstream, gamma),
        m_matrix: table.m_matrix,
        det_m: table.det_m,
        mu0: table.mu0,
        mu_hat: table.mu_hat,
        mu1: table.mu1,
        mu2: table.mu2,
        mu3: table.mu3,
        mu4: table.mu4,
        mu4_over_mu2: table.mu4_over_mu2,
        gamma0: table.gamma0,
        gamma1: table.gamma1,
        gamma2: table.gamma2,
        k_a: table.k_a,
        k_e: table.k_e,
        mu5: table.mu5,
        mu6: table.mu6,
        mu7: table.mu7,
        mu8: table.mu8,
        mu9: table.mu9,
        signs: sign_report(table),
        nodes,
    }
}

fn cmd_background(
    cfg: &RunConfig,
    out: &mut OutputDir,
    timing: &mut Timings,
) -> Result<i32, CliError> {
    let t = Instant::now();
    let bg = build_background(&cfg.background_config()?)?;
    let table = bg.coefficients()?;
    timing.lap("build", t);

    let t = Instant::now();
    let mut rows = Vec::new();
    let mut push_point = |x: f64, pt: &fanno_shock_core::background::BackgroundPoint| {
        rows.push(vec![
            fmt_f64(x),
            fmt_f64(pt.u),
            fmt_f64(pt.p),
            fmt_f64(pt.rho),
            fmt_f64(pt.t),
        ]);
    };
    let sup = &bg.supersonic;
    for i in 0..sup.node_count() {
        let x = sup.node_x(i);
        if x >= bg.r_b - 1e-12 {
            break;
        }
        push_point(x, &sup.eval(x));
    }
    // Both one-sided limits at the shock, upstream first.
    push_point(bg.r_b, &bg.eval_minus(bg.r_b));
    let sub = &bg.subsonic;
    for i in 0..sub.node_count() {
        let x = sub.node_x(i);
        push_point(x, &sub.eval(x));
    }
    out.write_csv("background.csv", &["x0", "u0", "p", "rho", "t"], &rows)?;
    out.write_json("coefficients.json", &coefficients_dump(&bg, &table))?;
    write_manifest(out, CommandKind::Background, cfg, &bg, &table, None)?;
    timing.lap("write", t);
    Ok(0)
}

// ---------------------------------------------------------------------------
// scondition
// ---------------------------------------------------------------------------

fn scan_resolution(cfg: &RunConfig) -> Resolution {
    Resolution {
        n_out: cfg.numerics.n0,
        substeps: SUBSTEPS,
    }
}

fn cmd_scondition(
    cfg: &RunConfig,
    out: &mut OutputDir,
    timing: &mut Timings,
) -> Result<i32, CliError> {
    let t = Instant::now();
    let bg = build_background(&cfg.background_config()?)?;
    let table = bg.coefficients()?;
    timing.lap("build", t);

    let t = Instant::now();
    let scan = scan_scondition(&table, cfg.numerics.q_max, scan_resolution(cfg))?;
    timing.lap("scan", t);

    let t = Instant::now();
    let rows: Vec<Vec<String>> = scan
        .thetas
        .iter()
        .map(|s| {
            vec![
                s.q.to_string(),
                fmt_f64(table.r_b),
                fmt_f64(s.theta),
            ]
        })
        .collect();
    out.write_csv("scondition.csv", &["q", "r_b", "theta"], &rows)?;
    let summary = summary_of(&scan);
    out.write_json("scondition.json", &summary)?;
    write_manifest(out, CommandKind::Scondition, cfg, &bg, &table, Some(summary))?;
    timing.lap("write", t);
    Ok(if scan.satisfied { 0 } else { 5 })
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

/// Iteration diagnostics and front geometry written as `report.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReportDump {
    pub epsilon: f64,
    pub iterations: usize,
    pub converged: bool,
    pub changes: Vec<f64>,
    pub quotients: Vec<f64>,
    pub rh_defects: Vec<f64>,
    pub max_mode_cond: f64,
    pub tail_warning: bool,
    /// Mean shock position.
    pub front_mean: f64,
    /// Torus mean of the mean-free front profile (should vanish).
    pub front_profile_mean: f64,
    /// Largest deviation of the front from the unperturbed position.
    pub psi_sup_deviation: f64,
}

impl SolveReportDump {
    fn from_solution(epsilon: f64, r_b: f64, sol: &TransonicSolution) -> Self {
        let psi_sup_deviation = sol
            .front
            .values
            .values()
            .iter()
            .map(|v| (v - r_b).abs())
            .fold(0.0, f64::max);
        Self {
            epsilon,
            iterations: sol.report.iterations,
            converged: sol.report.converged,
            changes: sol.report.changes.clone(),
            quotients: sol.report.quotients.clone(),
            rh_defects: sol.report.rh_defects.clone(),
            max_mode_cond: sol.report.max_mode_cond,
            tail_warning: sol.report.tail_warning,
            front_mean: sol.front.position,
            front_profile_mean: sol.front.profile.mean(),
            psi_sup_deviation,
        }
    }

    fn to_report(&self) -> SolveReport {
        SolveReport {
            iterations: self.iterations,
            converged: self.converged,
            changes: self.changes.clone(),
            quotients: self.quotients.clone(),
            rh_defects: self.rh_defects.clone(),
            max_mode_cond: self.max_mode_cond,
            tail_warning: self.tail_warning,
        }
    }
}

fn solve_settings(cfg: &RunConfig) -> SolveSettings {
    SolveSettings {
        n0: cfg.numerics.n0,
        substeps: SUBSTEPS,
        tol: cfg.numerics.tol,
        max_iter: cfg.numerics.max_iter,
    }
}

fn write_front_csv(out: &mut OutputDir, front: &ShockFront) -> std::io::Result<()> {
    let n = front.n();
    let mut rows = Vec::with_capacity(n * n);
    for i1 in 0..n {
        for i2 in 0..n {
            rows.push(vec![
                fmt_f64(TorusField::node(n, i1)),
                fmt_f64(TorusField::node(n, i2)),
                fmt_f64(front.values.at(i1, i2)),
            ]);
        }
    }
    out.write_csv("shock_front.csv", &["y1", "y2", "psi"], &rows)
}

fn station_name(i0: usize) -> String {
    format!("stations/station_{i0:04}.csv")
}

const STATION_HEADER: [&str; 8] = ["x0", "y1", "y2", "p", "a", "e", "u1", "u2"];

fn write_stations(out: &mut OutputDir, state: &DownstreamState) -> std::io::Result<()> {
    let n0 = state.p.n0();
    let n = state.p.n();
    for i0 in 0..n0 {
        let x = state.p.node_x(i0);
        let mut rows = Vec::with_capacity(n * n);
        for i1 in 0..n {
            for i2 in 0..n {
                rows.push(vec![
                    fmt_f64(x),
                    fmt_f64(TorusField::node(n, i1)),
                    fmt_f64(TorusField::node(n, i2)),
                    fmt_f64(state.p.at(i0, i1, i2)),
                    fmt_f64(state.a.at(i0, i1, i2)),
                    fmt_f64(state.e.at(i0, i1, i2)),
                    fmt_f64(state.u1.at(i0, i1, i2)),
                    fmt_f64(state.u2.at(i0, i1, i2)),
                ]);
            }
        }
        out.write_csv(&station_name(i0), &STATION_HEADER, &rows)?;
    }
    Ok(())
}

fn cmd_solve(
    cfg: &RunConfig,
    out: &mut OutputDir,
    timing: &mut Timings,
    force: bool,
) -> Result<i32, CliError> {
    let t = Instant::now();
    let bg = build_background(&cfg.background_config()?)?;
    let table = bg.coefficients()?;
    timing.lap("build", t);

    let summary = if force {
        None
    } else {
        let t = Instant::now();
        let scan = scan_scondition(&table, cfg.numerics.q_max, scan_resolution(cfg))?;
        timing.lap("scan", t);
        if !scan.satisfied {
            return Err(CliError::Scondition(format!(
                "solvability scan failed: min |ϑ| = {:.6e} at q = {} (rerun with --force to override)",
                scan.min_abs_realizable, scan.argmin_q
            )));
        }
        Some(summary_of(&scan))
    };

    let t = Instant::now();
    let inlet = cfg.inlet_fields();
    let exit = cfg.exit_pressure();
    let sol = solve_transonic(&bg, &table, &inlet, &exit, &solve_settings(cfg))?;
    timing.lap("solve", t);

    let t = Instant::now();
    write_front_csv(out, &sol.front)?;
    write_stations(out, &sol.state)?;
    let report = SolveReportDump::from_solution(cfg.perturbations.epsilon, bg.r_b, &sol);
    out.write_json("report.json", &report)?;
    write_manifest(out, CommandKind::Solve, cfg, &bg, &table, summary)?;
    timing.lap("write", t);
    Ok(0)
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

fn read_csv_columns(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let first = lines
        .next()
        .ok_or_else(|| CliError::Validation(format!("{} is empty", path.display())))?;
    if first != header.join(",") {
        return Err(CliError::Validation(format!(
            "{}: unexpected header {first:?}",
            path.display()
        )));
    }
    let mut cols = vec![Vec::new(); header.len()];
    for (k, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            return Err(CliError::Validation(format!(
                "{} line {}: expected {} cells, found {}",
                path.display(),
                k + 2,
                header.len(),
                cells.len()
            )));
        }
        for (col, cell) in cols.iter_mut().zip(cells) {
            let v: f64 = cell.parse().map_err(|e| {
                CliError::Validation(format!("{} line {}: {e}", path.display(), k + 2))
            })?;
            col.push(v);
        }
    }
    Ok(cols)
}

fn read_front(root: &Path, n: usize) -> Result<ShockFront, CliError> {
    let cols = read_csv_columns(&root.join("shock_front.csv"), &["y1", "y2", "psi"])?;
    if cols[2].len() != n * n {
        return Err(CliError::Validation(format!(
            "shock_front.csv holds {} rows, expected {}",
            cols[2].len(),
            n * n
        )));
    }
    let mut values = TorusField::new(n);
    for i1 in 0..n {
        for i2 in 0..n {
            *values.at_mut(i1, i2) = cols[2][i1 * n + i2];
        }
    }
    Ok(ShockFront::new(values))
}

fn read_stations(
    root: &Path,
    n0: usize,
    n: usize,
    x_lo: f64,
    x_hi: f64,
) -> Result<DownstreamState, CliError> {
    let mut state = DownstreamState::zeros(n0, n, x_lo, x_hi);
    for i0 in 0..n0 {
        let path = root.join(station_name(i0));
        let cols = read_csv_columns(&path, &STATION_HEADER)?;
        if cols[0].len() != n * n {
            return Err(CliError::Validation(format!(
                "{}: holds {} rows, expected {}",
                path.display(),
                cols[0].len(),
                n * n
            )));
        }
        let x = state.p.node_x(i0);
        if (cols[0][0] - x).abs() > 1e-12 * x.abs().max(1.0) {
            return Err(CliError::Validation(format!(
                "{}: station at x⁰ = {} does not match the grid node {}",
                path.display(),
                cols[0][0],
                x
            )));
        }
        for i1 in 0..n {
            for i2 in 0..n {
                let k = i1 * n + i2;
                *state.p.at_mut(i0, i1, i2) = cols[3][k];
                *state.a.at_mut(i0, i1, i2) = cols[4][k];
                *state.e.at_mut(i0, i1, i2) = cols[5][k];
                *state.u1.at_mut(i0, i1, i2) = cols[6][k];
                *state.u2.at_mut(i0, i1, i2) = cols[7][k];
            }
        }
    }
    Ok(state)
}

#[derive(Debug, Clone, Serialize)]
struct ResidualDump {
    mass: f64,
    momentum: [f64; 3],
    energy: f64,
    sup: f64,
}

#[derive(Debug, Clone, Serialize)]
struct VerifyDump {
    epsilon: f64,
    /// Residual acceptance threshold `max(10⁻⁶, 10 ε²)`.
    threshold: f64,
    downstream: ResidualDump,
    upstream: ResidualDump,
    rh_sup: f64,
    min_pressure_jump: f64,
    compressive: bool,
    front_profile_mean: f64,
    pass: bool,
}

fn cmd_verify(out: &mut OutputDir, timing: &mut Timings) -> Result<i32, CliError> {
    let t = Instant::now();
    let root = out.root().to_path_buf();
    let manifest_text = std::fs::read_to_string(root.join("manifest.json")).map_err(|e| {
        CliError::Validation(format!(
            "cannot read solve manifest in {}: {e} (run `solve` first)",
            root.display()
        ))
    })?;
    let manifest: RunManifest = serde_json::from_str(&manifest_text)
        .map_err(|e| CliError::Validation(format!("malformed manifest.json: {e}")))?;
    if manifest.command != "solve" {
        return Err(CliError::Validation(format!(
            "output directory holds a `{}` run, not a solve bundle",
            manifest.command
        )));
    }
    let cfg = manifest.config;
    cfg.validate().map_err(CliError::Validation)?;

    let bg = build_background(&cfg.background_config()?)?;
    let n = cfg.numerics.n;
    let front = read_front(&root, n)?;
    let state = read_stations(&root, cfg.numerics.n0, n, bg.r_b, bg.l)?;
    let report_text = std::fs::read_to_string(root.join("report.json"))
        .map_err(|e| CliError::Validation(format!("cannot read report.json: {e}")))?;
    let report: SolveReportDump = serde_json::from_str(&report_text)
        .map_err(|e| CliError::Validation(format!("malformed report.json: {e}")))?;
    let inlet = cfg.inlet_fields();
    let upstream = march_supersonic(&inlet, bg.r_b + bg.h_b, &bg.gas)?;
    let sol = TransonicSolution {
        front,
        state,
        upstream,
        report: report.to_report(),
    };
    timing.lap("load", t);

    let t = Instant::now();
    let buffer = 0.05 * (bg.l - bg.r_b);
    let rep = verify_solution(&bg, &sol, buffer)?;
    let eps = cfg.perturbations.epsilon;
    let threshold = 1e-6_f64.max(10.0 * eps * eps);
    let front_profile_mean = sol.front.profile.mean();
    let pass = rep.downstream.sup() <= threshold
        && rep.upstream.sup() <= threshold
        && rep.rh_sup <= threshold
        && rep.compressive
        && front_profile_mean.abs() <= 1e-12;
    let dump = VerifyDump {
        epsilon: eps,
        threshold,
        downstream: ResidualDump {
            mass: rep.downstream.mass,
            momentum: rep.downstream.momentum,
            energy: rep.downstream.energy,
            sup: rep.downstream.sup(),
        },
        upstream: ResidualDump {
            mass: rep.upstream.mass,
            momentum: rep.upstream.momentum,
            energy: rep.upstream.energy,
            sup: rep.upstream.sup(),
        },
        rh_sup: rep.rh_sup,
        min_pressure_jump: rep.min_pressure_jump,
        compressive: rep.compressive,
        front_profile_mean,
        pass,
    };
    out.write_json("verify_report.json", &dump)?;
    timing.lap("verify", t);
    Ok(if pass { 0 } else { 3 })
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct SweepRow {
    r_b: f64,
    mu: f64,
    min_abs_theta: f64,
    converged: bool,
    psi_sup_deviation: f64,
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

fn sweep_one(cfg: &RunConfig, r_b: f64, mu: f64) -> SweepRow {
    let mut c = cfg.clone();
    c.duct.r_b = r_b;
    c.gas.mu = mu;
    let mut row = SweepRow {
        r_b,
        mu,
        min_abs_theta: f64::NAN,
        converged: false,
        psi_sup_deviation: f64::NAN,
    };
    // Failures leave NaN cells in the row rather than aborting the sweep.
    let _ = (|| -> Result<(), CliError> {
        let bg = build_background(&c.background_config()?)?;
        let table = bg.coefficients()?;
        let scan = scan_scondition(&table, c.numerics.q_max, scan_resolution(&c))?;
        row.min_abs_theta = scan.min_abs_realizable;
        let inlet = c.inlet_fields();
        let exit = c.exit_pressure();
        let sol = solve_transonic(&bg, &table, &inlet, &exit, &solve_settings(&c))?;
        row.converged = sol.report.converged;
        row.psi_sup_deviation = sol
            .front
            .values
            .values()
            .iter()
            .map(|v| (v - r_b).abs())
            .fold(0.0, f64::max);
        Ok(())
    })();
    row
}

fn run_combos(cfg: &RunConfig, combos: &[(f64, f64)], threads: usize) -> Vec<SweepRow> {
    let workers = threads.max(1).min(combos.len().max(1));
    if workers <= 1 {
        return combos
            .iter()
            .map(|&(r_b, mu)| sweep_one(cfg, r_b, mu))
            .collect();
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<SweepRow>>> = Mutex::new(vec![None; combos.len()]);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= combos.len() {
                    break;
                }
                let row = sweep_one(cfg, combos[k].0, combos[k].1);
                results.lock().expect("sweep worker panicked")[k] = Some(row);
            });
        }
    });
    results
        .into_inner()
        .expect("sweep worker panicked")
        .into_iter()
        .map(|r| r.expect("every combo visited"))
        .collect()
}

fn cmd_sweep(
    cfg: &RunConfig,
    out: &mut OutputDir,
    timing: &mut Timings,
    threads: usize,
) -> Result<i32, CliError> {
    let t = Instant::now();
    let bg = build_background(&cfg.background_config()?)?;
    let table = bg.coefficients()?;
    timing.lap("build", t);

    let t = Instant::now();
    let r_bs = if cfg.sweep.r_b.is_empty() {
        let lo = 0.7 * cfg.duct.r_b;
        let hi = (1.3 * cfg.duct.r_b)
            .min(0.5 * (cfg.duct.r_b + bg.choke_sup))
            .min(0.95 * cfg.duct.l);
        linspace(lo, hi, 10)
    } else {
        cfg.sweep.r_b.clone()
    };
    let mus = if cfg.sweep.mu.is_empty() {
        vec![cfg.gas.mu]
    } else {
        cfg.sweep.mu.clone()
    };
    let combos: Vec<(f64, f64)> = r_bs
        .iter()
        .flat_map(|&r| mus.iter().map(move |&m| (r, m)))
        .collect();
    let rows = run_combos(cfg, &combos, threads);
    timing.lap("sweep", t);

    let t = Instant::now();
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.r_b),
                fmt_f64(r.mu),
                fmt_f64(r.min_abs_theta),
                (r.converged as u8).to_string(),
                fmt_f64(r.psi_sup_deviation),
            ]
        })
        .collect();
    out.write_csv(
        "sweep.csv",
        &["r_b", "mu", "min_abs_theta", "converged", "psi_sup_deviation"],
        &csv_rows,
    )?;
    write_manifest(out, CommandKind::Sweep, cfg, &bg, &table, None)?;
    timing.lap("write", t);
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_contract() {
        assert_eq!(CliError::Validation("x".into()).exit_code(), 2);
        assert_eq!(CliError::Physics("x".into()).exit_code(), 3);
        assert_eq!(CliError::NoConvergence("x".into()).exit_code(), 4);
        assert_eq!(CliError::Scondition("x".into()).exit_code(), 5);
    }

    #[test]
    fn library_failures_map_to_the_right_codes() {
        let e: CliError = BackgroundError::InvalidConfig {
            reason: "x".into(),
        }
        .into();
        assert_eq!(e.exit_code(), 2);
        let e: CliError = BackgroundError::ChokesBeforeExit { choke: 1.5, l: 2.0 }.into();
        assert_eq!(e.exit_code(), 3);
        let e: CliError = ShockError::NotConverged {
            iterations: 3,
            change: 1.0,
        }
        .into();
        assert_eq!(e.exit_code(), 4);
        let e: CliError = ShockError::Venttsel(VenttselError::ModeSingular { q: 1.0, cond: 1e15 })
            .into();
        assert_eq!(e.exit_code(), 5);
        let e: CliError = ShockError::ShockDegenerate { min_jump: -0.1 }.into();
        assert_eq!(e.exit_code(), 3);
    }

    #[test]
    fn sign_report_accepts_the_reference_coefficients() {
        let cfg = RunConfig::default();
        let bg = build_background(&cfg.background_config().unwrap()).unwrap();
        let table = bg.coefficients().unwrap();
        let report = sign_report(&table);
        assert!(report.all_ok, "{report:?}");
        let mu4 = report.entries.iter().find(|e| e.name == "mu4").unwrap();
        assert_eq!(mu4.required, "< 0");
        assert!(mu4.value < 0.0);
    }

    #[test]
    fn frictionless_sign_report_requires_exact_zeros() {
        let mut cfg = RunConfig::default();
        cfg.gas.mu = 0.0;
        let bg = build_background(&cfg.background_config().unwrap()).unwrap();
        let table = bg.coefficients().unwrap();
        let report = sign_report(&table);
        assert!(report.all_ok, "{report:?}");
        for name in ["mu1", "mu2", "mu3", "mu4", "mu6", "mu7", "mu8", "mu9"] {
            let e = report.entries.iter().find(|e| e.name == name).unwrap();
            assert_eq!(e.required, "= 0", "{name}");
            assert_eq!(e.value, 0.0, "{name}");
        }
    }

    #[test]
    fn linspace_endpoints_are_exact() {
        let v = linspace(0.5, 1.5, 10);
        assert_eq!(v.len(), 10);
        assert_eq!(v[0], 0.5);
        assert_eq!(v[9], 1.5);
    }
}
