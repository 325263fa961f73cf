//! Command layer for the `levirotor` binary: argument types, dispatch and
//! output writing.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use levirotor::config::{load_config, ExperimentConfig};
use levirotor::dynamics::{
    analyze_trace, extract_phase, residual_offset_from_floor, simulate_spindown,
    smooth_and_differentiate, tilt_scan_collapse, DampingModel, SpinDownConfig, SpinDownTrace,
    TiltSample, TraceMeta, TraceSample,
};
use levirotor::eddy::{
    build_disk_mesh, fit_power_law, mesh_convergence_study, sample_field, skin_depth_vacuum,
    solve_potential, sweep_offset, verify_zero_current, MeshSymmetry, PowerLawFit,
};
use levirotor::gas::{
    couette_gap_gamma, free_molecular_crossover, gamma_free_molecular, gamma_total, knudsen_regime,
    rough_estimates_for_disk, swirl_flow_solve,
};
use levirotor::levitation::{equilibrium_height, solve_levitation, tilt_to_displacement};
use levirotor::magnetostatics::{field_map, ResemblingFieldParams};
use levirotor::report::{config_digest, read_csv, render_json, CsvTable, Header, RunReport};
use levirotor::{Error, Result};

pub const THREADS_ENV: &str = "LEVIROTOR_THREADS";

#[derive(Debug, Parser)]
#[command(name = "levirotor", version, about = "Levitated rotor damping toolkit")]
pub struct Cli {
    /// Experiment config (TOML); the shipped default when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads for parallel solvers.
    #[arg(long, global = true, value_name = "N", env = THREADS_ENV)]
    pub threads: Option<usize>,
    /// Output format; tables default to csv, scalar results to json.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Field map of the magnet stack above its top face.
    Field(FieldArgs),
    /// Equilibrium height and trap frequencies.
    Levitate,
    /// Eddy damping against lateral offset, with a power-law fit.
    EddySweep,
    /// Zero-current checks for a centered, axisymmetric field.
    VerifyZeroCurrent,
    /// Spurious damping on perturbed and polar meshes under refinement.
    MeshConvergence,
    /// Gas damping rate across pressure.
    GasCurve,
    /// Synthetic spin-down marker trace.
    Spindown,
    /// Damping rate from a marker trace.
    Analyze(AnalyzeArgs),
    /// Radial collapse of a tilt scan about its minimum.
    TiltCollapse(TiltArgs),
    /// Skin depths along both conductivity axes.
    SkinDepth(SkinArgs),
    /// Total damping from a gas curve and the eddy floor.
    Compose(ComposeArgs),
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    /// Largest radius [mm].
    #[arg(long, default_value_t = 12.0)]
    pub r_max_mm: f64,
    /// Height range above the stack top [mm].
    #[arg(long, default_value_t = 0.25)]
    pub z_min_mm: f64,
    #[arg(long, default_value_t = 6.0)]
    pub z_max_mm: f64,
    #[arg(long, default_value_t = 49)]
    pub nr: usize,
    #[arg(long, default_value_t = 24)]
    pub nz: usize,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Trace CSV with columns t_s, x_m, y_m.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct TiltArgs {
    /// Scan CSV with columns theta_x_deg, theta_y_deg, gamma_Hz; a synthetic
    /// scan from the config grid when omitted.
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SkinArgs {
    /// Angular frequency of the AC field [rad/s].
    #[arg(long, default_value_t = 624.0)]
    pub omega_ac: f64,
}

#[derive(Debug, Args)]
pub struct ComposeArgs {
    /// Gas curve CSV written by `gas-curve`.
    #[arg(long, value_name = "PATH")]
    pub gas: PathBuf,
    /// Eddy fit JSON written by `eddy-sweep`.
    #[arg(long, value_name = "PATH")]
    pub eddy: Option<PathBuf>,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Field(_) => "field",
            Command::Levitate => "levitate",
            Command::EddySweep => "eddy-sweep",
            Command::VerifyZeroCurrent => "verify-zero-current",
            Command::MeshConvergence => "mesh-convergence",
            Command::GasCurve => "gas-curve",
            Command::Spindown => "spindown",
            Command::Analyze(_) => "analyze",
            Command::TiltCollapse(_) => "tilt-collapse",
            Command::SkinDepth(_) => "skin-depth",
            Command::Compose(_) => "compose",
        }
    }
}

/// Exit status for an error: 2 for invalid input, 3 for solver failures.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Parse(_)
        | Error::Schema { .. }
        | Error::MissingUnit { .. }
        | Error::Domain(_)
        | Error::Geometry(_)
        | Error::Io(_) => 2,
        _ => 3,
    }
}

pub fn resolve_config(path: Option<&Path>, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = match path {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::reference(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    out: &'a Path,
    format: Option<Format>,
    header: Header,
    report: RunReport,
}

impl Ctx<'_> {
    fn table(&mut self, stem: &str, table: &CsvTable) -> Result<()> {
        match self.format.unwrap_or(Format::Csv) {
            Format::Csv => self.report.emit(
                &self.out.join(format!("{stem}.csv")),
                &table.render(&self.header),
            ),
            Format::Json => {
                let rows: Vec<Value> = table
                    .rows
                    .iter()
                    .map(|r| {
                        let m: Map<String, Value> = table
                            .columns
                            .iter()
                            .zip(r)
                            .map(|(c, v)| (c.clone(), cell_value(v)))
                            .collect();
                        Value::Object(m)
                    })
                    .collect();
                let body = json!({ "columns": table.columns, "rows": rows });
                self.report.emit(
                    &self.out.join(format!("{stem}.json")),
                    &render_json(&self.header, &body),
                )
            }
        }
    }

    fn record<T: Serialize>(&mut self, stem: &str, body: &T) -> Result<()> {
        match self.format.unwrap_or(Format::Json) {
            Format::Json => self.report.emit(
                &self.out.join(format!("{stem}.json")),
                &render_json(&self.header, body),
            ),
            Format::Csv => {
                let mut flat = Vec::new();
                flatten(
                    "",
                    &serde_json::to_value(body).expect("serializable"),
                    &mut flat,
                );
                let cols: Vec<&str> = flat.iter().map(|(k, _)| k.as_str()).collect();
                let mut t = CsvTable::new(&cols);
                t.push(flat.iter().map(|(_, v)| v.clone()).collect());
                self.report.emit(
                    &self.out.join(format!("{stem}.csv")),
                    &t.render(&self.header),
                )
            }
        }
    }

    fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let v = f()?;
        self.report.time(stage, start.elapsed().as_secs_f64());
        Ok(v)
    }
}

fn cell_value(s: &str) -> Value {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => json!(x),
        _ => match s {
            "true" => Value::Bool(true),
            "false" => Value::Bool(false),
            _ => Value::String(s.to_string()),
        },
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(a) => a
            .iter()
            .enumerate()
            .for_each(|(i, v)| flatten(&key(&i.to_string()), v, out)),
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// Runs one subcommand and writes its outputs plus `run-report.json` into
/// `out`.
pub fn dispatch(
    command: &Command,
    cfg: &ExperimentConfig,
    out: &Path,
    format: Option<Format>,
) -> Result<RunReport> {
    std::fs::create_dir_all(out)?;
    let mut ctx = Ctx {
        cfg,
        out,
        format,
        header: Header::new(command.name(), cfg),
        report: RunReport::new(command.name(), cfg),
    };
    match command {
        Command::Field(a) => field(&mut ctx, a)?,
        Command::Levitate => levitate(&mut ctx)?,
        Command::EddySweep => eddy_sweep(&mut ctx)?,
        Command::VerifyZeroCurrent => zero_current(&mut ctx)?,
        Command::MeshConvergence => convergence(&mut ctx)?,
        Command::GasCurve => gas_curve(&mut ctx)?,
        Command::Spindown => spindown(&mut ctx)?,
        Command::Analyze(a) => analyze(&mut ctx, a)?,
        Command::TiltCollapse(a) => tilt(&mut ctx, a)?,
        Command::SkinDepth(a) => skin(&mut ctx, a)?,
        Command::Compose(a) => compose(&mut ctx, a)?,
    }
    let report = ctx.report;
    let mut doc = serde_json::to_value(&report).expect("report serializes");
    doc["digest"] = json!(report.digest());
    let text = serde_json::to_string_pretty(&doc).expect("report serializes") + "\n";
    levirotor::report::write_atomic(&out.join("run-report.json"), text.as_bytes())?;
    Ok(report)
}

fn field(ctx: &mut Ctx, a: &FieldArgs) -> Result<()> {
    if a.nr < 2 || a.nz < 2 || !(a.r_max_mm > 0.0) || !(a.z_max_mm > a.z_min_mm) {
        return Err(Error::Domain(
            "field grid needs nr, nz >= 2, r_max > 0 and z_max > z_min".into(),
        ));
    }
    let top = ctx.cfg.stack.top_z();
    let rs: Vec<f64> = (0..a.nr)
        .map(|i| a.r_max_mm * 1e-3 * i as f64 / (a.nr - 1) as f64)
        .collect();
    let zs: Vec<f64> = (0..a.nz)
        .map(|k| {
            top + 1e-3 * (a.z_min_mm + (a.z_max_mm - a.z_min_mm) * k as f64 / (a.nz - 1) as f64)
        })
        .collect();
    let stack = &ctx.cfg.stack;
    let map = ctx.timed("field", || field_map(stack, &rs, &zs))?;
    let mut t = CsvTable::new(&["r_m", "z_m", "z_above_top_m", "b_r_T", "b_z_T", "b_norm_T"]);
    for (r, z, b) in map {
        t.push_numbers(&[r, z, z - top, b.b_r, b.b_z, b.norm()]);
    }
    ctx.table("field", &t)
}

#[derive(Serialize)]
struct LevitateOut {
    #[serde(rename = "h_V_m")]
    h_v_m: f64,
    #[serde(rename = "omega_V_Hz")]
    omega_v_hz: f64,
    #[serde(rename = "omega_L_Hz")]
    omega_l_hz: f64,
    #[serde(rename = "curvature_vertical_J_per_m2")]
    curvature_vertical: f64,
    #[serde(rename = "curvature_lateral_J_per_m2")]
    curvature_lateral: f64,
    #[serde(rename = "omega_L_measured_Hz")]
    omega_l_measured_hz: f64,
}

fn levitate(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let sol = ctx.timed("levitation", || {
        solve_levitation(&cfg.disk, &cfg.stack, &cfg.solver.quadrature)
    })?;
    ctx.record(
        "levitate",
        &LevitateOut {
            h_v_m: sol.h_v,
            omega_v_hz: sol.omega_v_hz(),
            omega_l_hz: sol.omega_l_hz(),
            curvature_vertical: sol.curvature_vertical,
            curvature_lateral: sol.curvature_lateral,
            omega_l_measured_hz: cfg.omega_l / (2.0 * PI),
        },
    )
}

fn midplane(ctx: &mut Ctx) -> Result<f64> {
    let cfg = ctx.cfg;
    ctx.timed("levitation", || {
        let h = equilibrium_height(&cfg.disk, &cfg.stack, &cfg.solver.quadrature)?;
        Ok(cfg.stack.top_z() + h + 0.5 * cfg.disk.thickness)
    })
}

fn eddy_sweep(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let plane = midplane(ctx)?;
    let sweep = ctx.timed("sweep", || {
        sweep_offset(
            &cfg.disk,
            &cfg.stack,
            &cfg.sweep.offsets,
            cfg.sweep.eddy_omega,
            cfg.solver.mesh_resolution,
            Some(plane),
        )
    })?;
    let offsets: Vec<f64> = sweep.rows.iter().map(|r| r.offset).collect();
    let gammas: Vec<f64> = sweep.rows.iter().map(|r| r.gamma).collect();
    let fit = fit_power_law(&offsets, &gammas, cfg.solver.fit_window_min)?;
    let inertia = cfg.disk.moment_of_inertia();
    let mut t = CsvTable::new(&[
        "offset_m",
        "gamma_Hz",
        "tau_z_Nm",
        "damping_coefficient_Nms",
        "fit_gamma_Hz",
    ]);
    for r in &sweep.rows {
        t.push_numbers(&[
            r.offset,
            r.gamma,
            r.tau_z,
            r.gamma * inertia,
            fit.eval(r.offset),
        ]);
    }
    ctx.table("eddy-sweep", &t)?;
    let body = json!({
        "fit": fit,
        "plane_z_m": sweep.plane_z,
        "omega_rad_per_s": sweep.omega,
        "mesh_nodes": sweep.nodes,
        "mesh_resolution_m": cfg.solver.mesh_resolution,
        "reference_c1": cfg.damping.power_law_c1,
        "reference_c2": cfg.damping.power_law_c2,
    });
    ctx.report.emit(
        &ctx.out.join("eddy-fit.json"),
        &render_json(&ctx.header, &body),
    )
}

fn zero_current(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let omega = cfg.sweep.eddy_omega;
    let analytic = ctx.timed("analytic", || {
        verify_zero_current(
            &ResemblingFieldParams::reference(),
            omega,
            cfg.disk.radius * 1e3,
            cfg.disk.thickness * 1e3,
            50,
        )
    })?;
    let plane = midplane(ctx)?;
    let discrete = ctx.timed("polar-solve", || {
        let mesh = build_disk_mesh(&cfg.disk, cfg.solver.mesh_resolution, MeshSymmetry::Polar)?;
        let b = sample_field(&mesh, &cfg.stack, 0.0, plane)?;
        solve_potential(mesh, &b, omega, &cfg.disk)
    })?;
    let passed = analytic.passed && discrete.gamma <= 1e-9;
    ctx.record(
        "zero-current",
        &json!({
            "analytic": analytic,
            "polar_mesh_gamma_Hz": discrete.gamma,
            "polar_mesh_tolerance_Hz": 1e-9,
            "passed": passed,
        }),
    )?;
    if !passed {
        return Err(Error::Singular(format!(
            "zero-current check failed: analytic max |J/sigma| = {:e}, polar gamma = {:e} Hz",
            analytic.max_current_over_sigma, discrete.gamma
        )));
    }
    Ok(())
}

fn convergence(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let plane = midplane(ctx)?;
    let study = ctx.timed("study", || {
        mesh_convergence_study(
            &cfg.disk,
            &cfg.stack,
            &cfg.convergence.resolutions,
            cfg.seed,
            cfg.convergence.amplitude,
            cfg.sweep.eddy_omega,
            plane,
        )
    })?;
    let mut t = CsvTable::new(&[
        "resolution_m",
        "perturbed_nodes",
        "gamma_perturbed_Hz",
        "gamma_polar_Hz",
    ]);
    for r in &study.rows {
        t.push(vec![
            levirotor::report::fmt_f64(r.resolution),
            r.perturbed_nodes.to_string(),
            levirotor::report::fmt_f64(r.gamma_perturbed),
            levirotor::report::fmt_f64(r.gamma_polar),
        ]);
    }
    ctx.table("mesh-convergence", &t)?;
    let first = study.rows.first().map_or(f64::NAN, |r| r.gamma_perturbed);
    let last = study.rows.last().map_or(f64::NAN, |r| r.gamma_perturbed);
    let body = json!({
        "seed": study.seed,
        "amplitude": study.amplitude,
        "monotone": study.monotone,
        "total_decrease": first / last,
    });
    ctx.report.emit(
        &ctx.out.join("mesh-convergence.json"),
        &render_json(&ctx.header, &body),
    )
}

fn gas_curve(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let gap = match cfg.sweep.continuum_gap {
        Some(g) => g,
        None => ctx.timed("levitation", || {
            equilibrium_height(&cfg.disk, &cfg.stack, &cfg.solver.quadrature)
        })?,
    };
    let swirl = ctx.timed("swirl", || {
        swirl_flow_solve(&cfg.disk, gap, &cfg.gas, 2.0 * PI, &cfg.solver.swirl)
    })?;
    let curve = gamma_total(
        &cfg.sweep.pressures,
        0.0,
        &cfg.disk,
        &cfg.gas,
        swirl.gamma_c,
    )?;
    let mut t = CsvTable::new(&[
        "pressure_Pa",
        "knudsen",
        "regime",
        "gamma_fm_Hz",
        "gamma_gas_Hz",
    ]);
    for p in &curve {
        let kn = knudsen_regime(&cfg.gas.with_pressure(p.pressure), cfg.disk.thickness)?.knudsen;
        let fm = gamma_free_molecular(&cfg.gas.with_pressure(p.pressure), &cfg.disk)?.gamma;
        t.push(vec![
            levirotor::report::fmt_f64(p.pressure),
            levirotor::report::fmt_f64(kn),
            p.regime.label().to_string(),
            levirotor::report::fmt_f64(fm),
            levirotor::report::fmt_f64(p.gamma_gas),
        ]);
    }
    ctx.table("gas-curve", &t)?;
    let body = json!({
        "gamma_fm_per_Pa_Hz": gamma_free_molecular(&cfg.gas.with_pressure(1.0), &cfg.disk)?.gamma,
        "gamma_continuum_Hz": swirl.gamma_c,
        "couette_gap_gamma_Hz": couette_gap_gamma(&cfg.disk, gap, &cfg.gas),
        "gap_m": gap,
        "torque_parts_Nm_at_1_rev_per_s": swirl.torque_parts,
        "rough_estimates": rough_estimates_for_disk(&cfg.disk, &cfg.gas)?,
        "fm_crossover_with_floor_Pa": free_molecular_crossover(&cfg.gas, &cfg.disk, cfg.damping.floor)?,
    });
    ctx.report.emit(
        &ctx.out.join("gas-summary.json"),
        &render_json(&ctx.header, &body),
    )
}

fn spindown_config(cfg: &ExperimentConfig) -> SpinDownConfig {
    let s = &cfg.spindown;
    SpinDownConfig {
        omega0: s.omega0,
        duration: s.duration,
        sample_rate: s.sample_rate,
        position_noise: s.position_noise,
        marker_radius: s.marker_radius,
        center: [0.0, 0.0],
        seed: cfg.seed,
    }
}

fn spindown(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let trace = ctx.timed("simulate", || {
        simulate_spindown(
            &DampingModel::Constant(cfg.spindown.gamma),
            &spindown_config(cfg),
        )
    })?;
    let mut t = CsvTable::new(&["t_s", "x_m", "y_m"]);
    for s in &trace.samples {
        t.push_numbers(&[s.t, s.x, s.y]);
    }
    ctx.table("spindown", &t)
}

fn analyze(ctx: &mut Ctx, a: &AnalyzeArgs) -> Result<()> {
    let cfg = ctx.cfg;
    let table = read_csv(&std::fs::read_to_string(&a.input)?)?;
    let (t, x, y) = (
        table.column("t_s")?,
        table.column("x_m")?,
        table.column("y_m")?,
    );
    let samples = t
        .iter()
        .zip(&x)
        .zip(&y)
        .map(|((&t, &x), &y)| TraceSample { t, x, y })
        .collect();
    let meta = TraceMeta {
        omega_max: Some(cfg.spindown.omega0.abs()),
        ..TraceMeta::default()
    };
    let trace = SpinDownTrace::new(samples, cfg.spindown.marker_radius, meta)?;
    let sigma = cfg.spindown.sigma_t;
    let series = ctx.timed("smooth", || {
        smooth_and_differentiate(&extract_phase(&trace)?, sigma)
    })?;
    let est = analyze_trace(&trace, sigma, cfg.spindown.window)?;
    let mut om = CsvTable::new(&["t_s", "omega_rad_per_s", "valid"]);
    for i in 0..series.t.len() {
        om.push(vec![
            levirotor::report::fmt_f64(series.t[i]),
            levirotor::report::fmt_f64(series.omega[i]),
            series.valid[i].to_string(),
        ]);
    }
    ctx.table("omega", &om)?;
    ctx.record(
        "analyze",
        &json!({
            "gamma_Hz": est.gamma,
            "gamma_stderr_Hz": est.stderr,
            "ln_omega_intercept": est.ln_omega_intercept,
            "window_s": est.window,
            "r_squared": est.r_squared,
            "points": est.points,
            "sigma_t_s": sigma,
        }),
    )
}

fn reference_fit(cfg: &ExperimentConfig) -> PowerLawFit {
    PowerLawFit {
        c1: cfg.damping.power_law_c1,
        c2: cfg.damping.power_law_c2,
        r_squared: 1.0,
        window: (0.0, f64::INFINITY),
        points: 0,
    }
}

/// Square scan of the config grid: γ = floor + c1·(gΔθ/ω_L²)^c2.
pub fn synthetic_tilt_scan(cfg: &ExperimentConfig) -> Vec<TiltSample> {
    let g = &cfg.tilt;
    let fit = reference_fit(cfg);
    let half = (g.points_per_axis as f64 - 1.0) / 2.0;
    let mut out = Vec::new();
    for i in 0..g.points_per_axis {
        for j in 0..g.points_per_axis {
            let tx = g.center.0 + (i as f64 - half) * g.step;
            let ty = g.center.1 + (j as f64 - half) * g.step;
            let d =
                tilt_to_displacement((tx - g.center.0).hypot(ty - g.center.1), cfg.omega_l).offset;
            out.push(TiltSample {
                theta_x: tx,
                theta_y: ty,
                gamma: cfg.damping.floor + fit.eval(d),
            });
        }
    }
    out
}

fn tilt(ctx: &mut Ctx, a: &TiltArgs) -> Result<()> {
    let cfg = ctx.cfg;
    let samples = match &a.input {
        Some(p) => {
            let t = read_csv(&std::fs::read_to_string(p)?)?;
            let (x, y, g) = (
                t.column("theta_x_deg")?,
                t.column("theta_y_deg")?,
                t.column("gamma_Hz")?,
            );
            x.iter()
                .zip(&y)
                .zip(&g)
                .map(|((x, y), g)| TiltSample {
                    theta_x: x.to_radians(),
                    theta_y: y.to_radians(),
                    gamma: *g,
                })
                .collect()
        }
        None => {
            let s = synthetic_tilt_scan(cfg);
            let mut t = CsvTable::new(&["theta_x_deg", "theta_y_deg", "gamma_Hz"]);
            for p in &s {
                t.push_numbers(&[p.theta_x.to_degrees(), p.theta_y.to_degrees(), p.gamma]);
            }
            ctx.table("tilt-scan", &t)?;
            s
        }
    };
    let fit = ctx.timed("fit", || tilt_scan_collapse(&samples, cfg.omega_l))?;
    let mut t = CsvTable::new(&["delta_theta_deg", "offset_m", "gamma_Hz"]);
    for (dt, g) in &fit.profile {
        t.push_numbers(&[
            dt.to_degrees(),
            tilt_to_displacement(*dt, cfg.omega_l).offset,
            *g,
        ]);
    }
    ctx.table("tilt-profile", &t)?;
    ctx.record(
        "tilt-fit",
        &json!({
            "center_x_deg": fit.center.0.to_degrees(),
            "center_y_deg": fit.center.1.to_degrees(),
            "c1": fit.c1,
            "c2": fit.c2,
            "floor_Hz": fit.floor,
            "stderr": fit.stderr,
            "iterations": fit.iterations,
        }),
    )
}

fn skin(ctx: &mut Ctx, a: &SkinArgs) -> Result<()> {
    let d = &ctx.cfg.disk;
    let par = skin_depth_vacuum(d.sigma_parallel, a.omega_ac)?;
    let perp = skin_depth_vacuum(d.sigma_perp, a.omega_ac)?;
    ctx.record(
        "skin-depth",
        &json!({
            "omega_ac_rad_per_s": a.omega_ac,
            "delta_parallel_m": par,
            "delta_perp_m": perp,
            "ratio_perp_over_parallel": perp / par,
            "delta_parallel_over_thickness": par / d.thickness,
        }),
    )
}

fn compose(ctx: &mut Ctx, a: &ComposeArgs) -> Result<()> {
    let cfg = ctx.cfg;
    let gas = read_csv(&std::fs::read_to_string(&a.gas)?)?;
    let (p, g) = (gas.column("pressure_Pa")?, gas.column("gamma_gas_Hz")?);
    let floor = cfg.damping.floor;
    let mut t = CsvTable::new(&[
        "pressure_Pa",
        "gamma_gas_Hz",
        "gamma_eddy_Hz",
        "gamma_total_Hz",
    ]);
    for (p, g) in p.iter().zip(&g) {
        t.push_numbers(&[*p, *g, floor, g + floor]);
    }
    ctx.table("compose", &t)?;

    // first pressure where the gas rate reaches the floor, log-log interpolated
    let crossing = p.windows(2).zip(g.windows(2)).find_map(|(pp, gg)| {
        (gg[0] < floor && gg[1] >= floor && gg[0] > 0.0).then(|| {
            let s = (floor / gg[0]).ln() / (gg[1] / gg[0]).ln();
            (pp[0].ln() + s * (pp[1] / pp[0]).ln()).exp()
        })
    });
    let mut body = json!({
        "eddy_floor_Hz": floor,
        "crossover_pressure_Pa": crossing,
        "fm_crossover_pressure_Pa": free_molecular_crossover(&cfg.gas, &cfg.disk, floor)?,
        "residual_offset_reference_m": residual_offset_from_floor(floor, &reference_fit(cfg)).ok(),
    });
    if let Some(path) = &a.eddy {
        let doc: Value = serde_json::from_str(&std::fs::read_to_string(path)?)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let fit: PowerLawFit = serde_json::from_value(doc["fit"].clone())
            .map_err(|e| Error::Parse(format!("{}: `fit` {e}", path.display())))?;
        body["residual_offset_swept_m"] = json!(residual_offset_from_floor(floor, &fit)?);
        body["eddy_fit"] = json!(fit);
        body["eddy_config_digest"] = doc["header"]["config_digest"].clone();
        body["config_digest_matches"] =
            json!(doc["header"]["config_digest"] == json!(config_digest(cfg)));
    }
    ctx.record("compose-summary", &body)
}
