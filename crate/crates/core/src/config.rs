//! Experiment configuration files.
//!
//! Configs are TOML. Dimensional values carry their unit in the key
//! (`height_mm = 4.0`, `pressure_Pa = 1e-3`) and are converted to SI on load.
//! Unknown keys are rejected, as are bare keys for dimensional quantities.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::constants::AMU;
use crate::eddy::{default_resolution, FIT_WINDOW_MIN};
use crate::error::{Error, Result};
use crate::gas::{GasSpec, SwirlOptions};
use crate::levitation::{DiskSpec, VolumeQuadrature};
use crate::magnetostatics::{MagnetShape, MagnetSpec, MagnetStack, Polarity};

/// The shipped default configuration.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Length,
    Mass,
    Time,
    Rate,
    AngularVelocity,
    Pressure,
    Temperature,
    FluxDensity,
    Conductivity,
    Viscosity,
    Angle,
}

impl Kind {
    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Kind::Length => &[("mm", 1e-3), ("m", 1.0), ("um", 1e-6), ("nm", 1e-9)],
            Kind::Mass => &[("mg", 1e-6), ("kg", 1.0), ("g", 1e-3), ("amu", AMU)],
            Kind::Time => &[("s", 1.0), ("ms", 1e-3), ("min", 60.0), ("h", 3600.0)],
            Kind::Rate => &[("Hz", 1.0), ("per_s", 1.0), ("mHz", 1e-3)],
            Kind::AngularVelocity => &[
                ("rad_per_s", 1.0),
                ("Hz", 2.0 * PI),
                ("rpm", 2.0 * PI / 60.0),
            ],
            Kind::Pressure => &[
                ("Pa", 1.0),
                ("mbar", 100.0),
                ("hPa", 100.0),
                ("Torr", 101_325.0 / 760.0),
            ],
            Kind::Temperature => &[("K", 1.0)],
            Kind::FluxDensity => &[("T", 1.0), ("mT", 1e-3)],
            Kind::Conductivity => &[("S_per_m", 1.0)],
            Kind::Viscosity => &[("Pa_s", 1.0), ("uPa_s", 1e-6)],
            Kind::Angle => &[("deg", PI / 180.0), ("rad", 1.0), ("mrad", 1e-3)],
        }
    }
}

/// A TOML table being consumed key by key; leftovers are unknown keys.
struct Section {
    path: String,
    table: Table,
}

impl Section {
    fn new(path: impl Into<String>, table: Table) -> Self {
        Self {
            path: path.into(),
            table,
        }
    }

    fn key(&self, name: &str) -> String {
        if self.path.is_empty() {
            name.to_string()
        } else {
            format!("{}.{}", self.path, name)
        }
    }

    fn take_unit(&mut self, name: &str, kind: Kind) -> Result<Option<(Value, f64, String)>> {
        let units = kind.units();
        if self.table.contains_key(name) {
            return Err(Error::MissingUnit {
                key: self.key(name),
                example: units[0].0,
            });
        }
        let mut found = None;
        for &(suffix, factor) in units {
            let full = format!("{name}_{suffix}");
            if let Some(v) = self.table.remove(&full) {
                if found.is_some() {
                    return Err(Error::schema(
                        self.key(name),
                        "given more than once with different units",
                    ));
                }
                found = Some((v, factor, self.key(&full)));
            }
        }
        Ok(found)
    }

    fn quantity(&mut self, name: &str, kind: Kind) -> Result<Option<f64>> {
        match self.take_unit(name, kind)? {
            Some((v, factor, key)) => Ok(Some(number(&v, &key)? * factor)),
            None => Ok(None),
        }
    }

    fn require(&mut self, name: &str, kind: Kind) -> Result<f64> {
        self.quantity(name, kind)?.ok_or_else(|| {
            Error::schema(
                self.key(name),
                format!("required, e.g. `{name}_{}`", kind.units()[0].0),
            )
        })
    }

    fn quantity_list(&mut self, name: &str, kind: Kind) -> Result<Option<Vec<f64>>> {
        let Some((v, factor, key)) = self.take_unit(name, kind)? else {
            return Ok(None);
        };
        let arr = v
            .as_array()
            .ok_or_else(|| Error::schema(key.clone(), "expected an array of numbers"))?;
        arr.iter()
            .map(|x| Ok(number(x, &key)? * factor))
            .collect::<Result<Vec<f64>>>()
            .map(Some)
    }

    fn plain(&mut self, name: &str) -> Result<Option<f64>> {
        let key = self.key(name);
        self.table
            .remove(name)
            .map(|v| number(&v, &key))
            .transpose()
    }

    fn count(&mut self, name: &str) -> Result<Option<u64>> {
        let key = self.key(name);
        match self.table.remove(name) {
            None => Ok(None),
            Some(Value::Integer(i)) if i >= 0 => Ok(Some(i as u64)),
            Some(_) => Err(Error::schema(key, "expected a non-negative integer")),
        }
    }

    fn string(&mut self, name: &str) -> Result<Option<String>> {
        let key = self.key(name);
        match self.table.remove(name) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(Error::schema(key, "expected a string")),
        }
    }

    fn subsection(&mut self, name: &str) -> Result<Option<Section>> {
        let key = self.key(name);
        match self.table.remove(name) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(Section::new(key, t))),
            Some(_) => Err(Error::schema(key, "expected a table")),
        }
    }

    fn finish(self) -> Result<()> {
        match self.table.keys().next() {
            None => Ok(()),
            Some(k) => Err(Error::schema(self.key(k), "unknown key")),
        }
    }
}

fn number(v: &Value, key: &str) -> Result<f64> {
    let x = match v {
        Value::Float(f) => *f,
        Value::Integer(i) => *i as f64,
        _ => return Err(Error::schema(key, "expected a number")),
    };
    if !x.is_finite() {
        return Err(Error::schema(key, "must be finite"));
    }
    Ok(x)
}

/// Prefixes a validation error with the section it came from.
fn within(path: &str, err: Error) -> Error {
    match err {
        Error::Schema { key, message } => Error::schema(format!("{path}.{key}"), message),
        Error::Domain(message) => Error::schema(path, message),
        other => other,
    }
}

fn positive(key: &str, x: f64) -> Result<f64> {
    if x > 0.0 {
        Ok(x)
    } else {
        Err(Error::schema(key, "must be positive"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub quadrature: VolumeQuadrature,
    /// Eddy mesh resolution [m].
    pub mesh_resolution: f64,
    /// Smallest offset kept in power-law fits [m].
    pub fit_window_min: f64,
    pub swirl: SwirlOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    /// Lateral offsets for the eddy sweep [m].
    pub offsets: Vec<f64>,
    /// Spin rate for eddy solves [rad/s].
    pub eddy_omega: f64,
    /// Log-spaced pressures for the gas curve [Pa].
    pub pressures: Vec<f64>,
    /// Gap for the continuum solve [m]; the levitation height when absent.
    pub continuum_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSettings {
    /// Mesh resolutions, coarse to fine [m].
    pub resolutions: Vec<f64>,
    /// Node displacement as a fraction of the resolution.
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampingSettings {
    /// Residual eddy damping floor [Hz].
    pub floor: f64,
    /// Reference power law γ = c1·d^c2, d in meters.
    pub power_law_c1: f64,
    pub power_law_c2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltGrid {
    /// [rad]
    pub center: (f64, f64),
    /// [rad]
    pub step: f64,
    pub points_per_axis: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinDownSettings {
    /// [rad/s]
    pub omega0: f64,
    /// [s]
    pub duration: f64,
    /// [Hz]
    pub sample_rate: f64,
    /// [m]
    pub position_noise: f64,
    /// [m]
    pub marker_radius: f64,
    /// Damping rate used for synthetic traces [Hz].
    pub gamma: f64,
    /// Smoothing kernel width [s].
    pub sigma_t: f64,
    /// Fit window [s]; the whole valid trace when absent.
    pub window: Option<(f64, f64)>,
}

/// A fully validated experiment in SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub stack: MagnetStack,
    pub disk: DiskSpec,
    /// Measured lateral trap frequency [rad/s].
    pub omega_l: f64,
    pub gas: GasSpec,
    pub solver: SolverSettings,
    pub sweep: SweepSettings,
    pub convergence: ConvergenceSettings,
    pub damping: DampingSettings,
    pub tilt: TiltGrid,
    pub spindown: SpinDownSettings,
}

impl ExperimentConfig {
    pub fn reference() -> Self {
        parse_config(DEFAULT_CONFIG).expect("shipped default config is valid")
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    if text.trim().is_empty() {
        return Err(Error::Parse("line 1, column 1: empty configuration".into()));
    }
    let table: Table = toml::from_str(text).map_err(|e| {
        let (line, col) = e.span().map_or((1, 1), |s| line_col(text, s.start));
        Error::Parse(format!("line {line}, column {col}: {}", e.message().trim()))
    })?;
    let mut root = Section::new("", table);

    let seed = root.count("seed")?.unwrap_or(0);
    let stack = parse_magnets(&mut root)?;

    let mut s = root
        .subsection("disk")?
        .ok_or_else(|| Error::schema("disk", "required section"))?;
    let disk = DiskSpec {
        radius: s.require("radius", Kind::Length)?,
        thickness: s.require("thickness", Kind::Length)?,
        mass: s.require("mass", Kind::Mass)?,
        chi_parallel: s
            .plain("chi_parallel")?
            .ok_or_else(|| Error::schema("disk.chi_parallel", "required"))?,
        chi_perp: s
            .plain("chi_perp")?
            .ok_or_else(|| Error::schema("disk.chi_perp", "required"))?,
        sigma_parallel: s.require("sigma_parallel", Kind::Conductivity)?,
        sigma_perp: s.require("sigma_perp", Kind::Conductivity)?,
    };
    s.finish()?;
    disk.validate().map_err(|e| within("disk", e))?;

    let mut omega_l = 2.0 * PI * 6.0;
    if let Some(mut s) = root.subsection("trap")? {
        omega_l = positive(
            "trap.omega_l",
            s.quantity("omega_l", Kind::AngularVelocity)?
                .unwrap_or(omega_l),
        )?;
        s.finish()?;
    }

    let mut gas = GasSpec::air(1.0);
    if let Some(mut s) = root.subsection("gas")? {
        gas = GasSpec {
            pressure: s
                .quantity("pressure", Kind::Pressure)?
                .unwrap_or(gas.pressure),
            temperature: s
                .quantity("temperature", Kind::Temperature)?
                .unwrap_or(gas.temperature),
            molecule_mass: s
                .quantity("molecule_mass", Kind::Mass)?
                .unwrap_or(gas.molecule_mass),
            molecule_diameter: s
                .quantity("molecule_diameter", Kind::Length)?
                .unwrap_or(gas.molecule_diameter),
            viscosity: s
                .quantity("viscosity", Kind::Viscosity)?
                .unwrap_or(gas.viscosity),
            accommodation: s.plain("accommodation")?.unwrap_or(gas.accommodation),
        };
        s.finish()?;
    }
    gas.validate().map_err(|e| within("gas", e))?;

    let mut solver = SolverSettings {
        quadrature: VolumeQuadrature::default(),
        mesh_resolution: default_resolution(&disk),
        fit_window_min: FIT_WINDOW_MIN,
        swirl: SwirlOptions::default(),
    };
    if let Some(mut s) = root.subsection("solver")? {
        let q = &mut solver.quadrature;
        q.radial = s
            .count("quadrature_radial")?
            .map_or(q.radial, |v| v as usize);
        q.axial = s.count("quadrature_axial")?.map_or(q.axial, |v| v as usize);
        q.azimuthal = s
            .count("quadrature_azimuthal")?
            .map_or(q.azimuthal, |v| v as usize);
        if let Some(r) = s.quantity("mesh_resolution", Kind::Length)? {
            solver.mesh_resolution = positive("solver.mesh_resolution", r)?;
        }
        if let Some(w) = s.quantity("fit_window_min", Kind::Length)? {
            solver.fit_window_min = positive("solver.fit_window_min", w)?;
        }
        let sw = &mut solver.swirl;
        sw.gap_cells = s
            .count("swirl_gap_cells")?
            .map_or(sw.gap_cells, |v| v as usize);
        sw.growth = s.plain("swirl_growth")?.unwrap_or(sw.growth);
        sw.domain_factor = s.plain("swirl_domain_factor")?.unwrap_or(sw.domain_factor);
        sw.refine = s.count("swirl_refine")?.map_or(sw.refine, |v| v as usize);
        s.finish()?;
    }
    let q = solver.quadrature;
    if q.radial < 2 || q.axial < 2 || q.azimuthal < 2 {
        return Err(Error::schema(
            "solver.quadrature",
            "each quadrature order must be at least 2",
        ));
    }
    if !(solver.mesh_resolution < disk.radius / 4.0) {
        return Err(Error::schema(
            "solver.mesh_resolution",
            "must be below radius / 4",
        ));
    }
    if !(solver.swirl.growth >= 1.0)
        || !(solver.swirl.domain_factor > 1.0)
        || solver.swirl.refine == 0
    {
        return Err(Error::schema(
            "solver.swirl",
            "need growth >= 1, domain_factor > 1, refine >= 1",
        ));
    }

    let mut sweep = SweepSettings {
        offsets: [0.05, 0.075, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0]
            .iter()
            .map(|x| x * 1e-3)
            .collect(),
        eddy_omega: 15.0,
        pressures: Vec::new(),
        continuum_gap: None,
    };
    let (mut p_min, mut p_max, mut p_n) = (1e-5, 1e3, 81u64);
    if let Some(mut s) = root.subsection("sweep")? {
        sweep.offsets = s
            .quantity_list("offsets", Kind::Length)?
            .unwrap_or(sweep.offsets);
        sweep.eddy_omega = s
            .quantity("eddy_omega", Kind::AngularVelocity)?
            .unwrap_or(sweep.eddy_omega);
        p_min = s.quantity("pressure_min", Kind::Pressure)?.unwrap_or(p_min);
        p_max = s.quantity("pressure_max", Kind::Pressure)?.unwrap_or(p_max);
        p_n = s.count("pressure_points")?.unwrap_or(p_n);
        sweep.continuum_gap = s.quantity("continuum_gap", Kind::Length)?;
        s.finish()?;
    }
    if sweep.offsets.len() < 3
        || sweep
            .offsets
            .iter()
            .any(|d| !(*d > 0.0 && *d < disk.radius))
    {
        return Err(Error::schema(
            "sweep.offsets",
            "need at least 3 offsets in (0, radius)",
        ));
    }
    positive("sweep.eddy_omega", sweep.eddy_omega)?;
    if !(p_min > 0.0 && p_max > p_min) || p_n < 2 {
        return Err(Error::schema(
            "sweep.pressure_min",
            "need 0 < pressure_min < pressure_max and >= 2 points",
        ));
    }
    if let Some(g) = sweep.continuum_gap {
        positive("sweep.continuum_gap", g)?;
    }
    let decades = (p_max / p_min).log10();
    sweep.pressures = (0..p_n)
        .map(|i| p_min * 10f64.powf(decades * i as f64 / (p_n - 1) as f64))
        .collect();

    let r = disk.radius;
    let mut convergence = ConvergenceSettings {
        resolutions: vec![r / 8.0, r / 16.0, r / 32.0],
        amplitude: 0.3,
    };
    if let Some(mut s) = root.subsection("convergence")? {
        convergence.resolutions = s
            .quantity_list("resolutions", Kind::Length)?
            .unwrap_or(convergence.resolutions);
        convergence.amplitude = s.plain("amplitude")?.unwrap_or(convergence.amplitude);
        s.finish()?;
    }
    if convergence.resolutions.len() < 2
        || convergence
            .resolutions
            .iter()
            .any(|h| !(*h > 0.0 && *h < r / 4.0))
        || convergence.resolutions.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::schema(
            "convergence.resolutions",
            "need >= 2 strictly decreasing resolutions below radius / 4",
        ));
    }
    if !(0.0..0.5).contains(&convergence.amplitude) {
        return Err(Error::schema(
            "convergence.amplitude",
            "must lie in [0, 0.5)",
        ));
    }

    let mut damping = DampingSettings {
        floor: 5.5e-5,
        power_law_c1: 6.20e4,
        power_law_c2: 1.91,
    };
    if let Some(mut s) = root.subsection("damping")? {
        damping.floor = s.quantity("floor", Kind::Rate)?.unwrap_or(damping.floor);
        damping.power_law_c1 = s.plain("power_law_c1")?.unwrap_or(damping.power_law_c1);
        damping.power_law_c2 = s.plain("power_law_c2")?.unwrap_or(damping.power_law_c2);
        s.finish()?;
    }
    if !(damping.floor >= 0.0) {
        return Err(Error::schema("damping.floor", "must be non-negative"));
    }
    positive("damping.power_law_c1", damping.power_law_c1)?;
    positive("damping.power_law_c2", damping.power_law_c2)?;

    let mut tilt = TiltGrid {
        center: ((-0.544f64).to_radians(), (-0.383f64).to_radians()),
        step: 0.15f64.to_radians(),
        points_per_axis: 7,
    };
    if let Some(mut s) = root.subsection("tilt")? {
        tilt.center.0 = s
            .quantity("center_x", Kind::Angle)?
            .unwrap_or(tilt.center.0);
        tilt.center.1 = s
            .quantity("center_y", Kind::Angle)?
            .unwrap_or(tilt.center.1);
        tilt.step = s.quantity("step", Kind::Angle)?.unwrap_or(tilt.step);
        tilt.points_per_axis = s
            .count("points_per_axis")?
            .map_or(tilt.points_per_axis, |v| v as usize);
        s.finish()?;
    }
    positive("tilt.step", tilt.step)?;
    if tilt.points_per_axis < 3 {
        return Err(Error::schema("tilt.points_per_axis", "must be at least 3"));
    }

    let mut spindown = SpinDownSettings {
        omega0: 15.0,
        duration: 600.0,
        sample_rate: 100.0,
        position_noise: 40e-6,
        marker_radius: 4e-3,
        gamma: 1e-3,
        sigma_t: 0.1,
        window: None,
    };
    if let Some(mut s) = root.subsection("spindown")? {
        let d = &mut spindown;
        d.omega0 = s
            .quantity("omega0", Kind::AngularVelocity)?
            .unwrap_or(d.omega0);
        d.duration = s.quantity("duration", Kind::Time)?.unwrap_or(d.duration);
        d.sample_rate = s
            .quantity("sample_rate", Kind::Rate)?
            .unwrap_or(d.sample_rate);
        d.position_noise = s
            .quantity("position_noise", Kind::Length)?
            .unwrap_or(d.position_noise);
        d.marker_radius = s
            .quantity("marker_radius", Kind::Length)?
            .unwrap_or(d.marker_radius);
        d.gamma = s.quantity("gamma", Kind::Rate)?.unwrap_or(d.gamma);
        d.sigma_t = s.quantity("sigma_t", Kind::Time)?.unwrap_or(d.sigma_t);
        let start = s.quantity("window_start", Kind::Time)?;
        let end = s.quantity("window_end", Kind::Time)?;
        d.window = match (start, end) {
            (None, None) => None,
            (a, b) => Some((a.unwrap_or(f64::NEG_INFINITY), b.unwrap_or(f64::INFINITY))),
        };
        s.finish()?;
    }
    let d = &spindown;
    if d.omega0 == 0.0 {
        return Err(Error::schema("spindown.omega0", "must be nonzero"));
    }
    positive("spindown.duration", d.duration)?;
    positive("spindown.sample_rate", d.sample_rate)?;
    positive("spindown.marker_radius", d.marker_radius)?;
    positive("spindown.sigma_t", d.sigma_t)?;
    if !(d.position_noise >= 0.0) || !(d.gamma >= 0.0) {
        return Err(Error::schema(
            "spindown",
            "position_noise and gamma must be non-negative",
        ));
    }

    root.finish()?;
    Ok(ExperimentConfig {
        seed,
        stack,
        disk,
        omega_l,
        gas,
        solver,
        sweep,
        convergence,
        damping,
        tilt,
        spindown,
    })
}

fn parse_magnets(root: &mut Section) -> Result<MagnetStack> {
    let entries = match root.table.remove("magnet") {
        Some(Value::Array(a)) if !a.is_empty() => a,
        Some(_) => {
            return Err(Error::schema(
                "magnet",
                "expected a non-empty [[magnet]] array",
            ))
        }
        None => {
            return Err(Error::schema(
                "magnet",
                "at least one [[magnet]] entry is required",
            ))
        }
    };
    let mut magnets = Vec::new();
    for (i, entry) in entries.into_iter().enumerate() {
        let path = format!("magnet[{i}]");
        let Value::Table(t) = entry else {
            return Err(Error::schema(path, "expected a table"));
        };
        let mut s = Section::new(path.clone(), t);
        let shape = match s.string("shape")?.as_deref() {
            Some("cylinder") => MagnetShape::Cylinder,
            Some("ring") => MagnetShape::Ring,
            _ => {
                return Err(Error::schema(
                    s.key("shape"),
                    "expected \"cylinder\" or \"ring\"",
                ))
            }
        };
        let polarity = match s.string("polarity")?.as_deref() {
            Some("up") => Polarity::Up,
            Some("down") => Polarity::Down,
            _ => {
                return Err(Error::schema(
                    s.key("polarity"),
                    "expected \"up\" or \"down\"",
                ))
            }
        };
        let count = s.count("count")?.unwrap_or(1);
        if count == 0 {
            return Err(Error::schema(s.key("count"), "must be at least 1"));
        }
        let outer = s.require("outer_radius", Kind::Length)?;
        let inner = s.quantity("inner_radius", Kind::Length)?.unwrap_or(0.0);
        let height = s.require("height", Kind::Length)?;
        let base = s.require("base_z", Kind::Length)?;
        let remanence = s.require("remanence", Kind::FluxDensity)?;
        s.finish()?;
        // `count` identical magnets stacked upward from `base_z`
        for k in 0..count {
            let m = MagnetSpec::new(
                shape,
                outer,
                inner,
                height,
                base + k as f64 * height,
                remanence,
                polarity,
            )
            .map_err(|e| within(&path, e))?;
            magnets.push(m);
        }
    }
    MagnetStack::new(magnets).map_err(|e| within("magnet", e))
}
