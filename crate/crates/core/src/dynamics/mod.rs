//! Spin-down synthesis and the estimation pipeline: marker positions to
//! phase, phase to smoothed angular velocity, ln ω to a damping rate.

mod tilt;

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use tilt::{tilt_scan_collapse, TiltSample, TiltScanResult, TILT_PARAMS};

use crate::constants::{HBAR, K_B};
use crate::eddy::PowerLawFit;
use crate::error::{Error, Result};
use crate::numerics::regression::fit_line;

/// Minimum trace length for estimation.
pub const MIN_SAMPLES: usize = 100;
/// Kernel truncation in units of σ.
pub const KERNEL_HALF_WIDTH: f64 = 4.0;
/// Required samples per kernel σ.
pub const MIN_SAMPLES_PER_SIGMA: f64 = 10.0;
pub const DEFAULT_SIGMA_T: f64 = 0.1;

/// Damping law driving a synthetic spin-down.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DampingModel {
    Constant(f64),
    /// γ(ω) by linear interpolation in ω, clamped at the table ends.
    Table {
        omega: Vec<f64>,
        gamma: Vec<f64>,
    },
}

impl DampingModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            DampingModel::Constant(g) if *g >= 0.0 && g.is_finite() => Ok(()),
            DampingModel::Constant(g) => {
                Err(Error::domain(format!("damping rate {g} must be >= 0")))
            }
            DampingModel::Table { omega, gamma } => {
                if omega.is_empty() || omega.len() != gamma.len() {
                    return Err(Error::domain(
                        "damping table needs equal, non-empty columns",
                    ));
                }
                if omega.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::domain(
                        "damping table omega must be strictly increasing",
                    ));
                }
                if gamma.iter().any(|g| !(*g >= 0.0)) {
                    return Err(Error::domain("damping table rates must be >= 0"));
                }
                Ok(())
            }
        }
    }

    pub fn rate(&self, omega: f64) -> f64 {
        match self {
            DampingModel::Constant(g) => *g,
            DampingModel::Table { omega: w, gamma: g } => {
                let x = omega.abs();
                let k = w.partition_point(|v| *v <= x);
                if k == 0 {
                    g[0]
                } else if k == w.len() {
                    g[w.len() - 1]
                } else {
                    let t = (x - w[k - 1]) / (w[k] - w[k - 1]);
                    g[k - 1] + t * (g[k] - g[k - 1])
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinDownConfig {
    /// Initial angular velocity [rad/s]; the sign sets the sense of rotation.
    pub omega0: f64,
    /// [s]
    pub duration: f64,
    /// [Hz]
    pub sample_rate: f64,
    /// Standard deviation of Gaussian noise on each coordinate [m].
    pub position_noise: f64,
    /// Marker distance from the disk center [m].
    pub marker_radius: f64,
    /// Lab position of the disk center [m].
    pub center: [f64; 2],
    pub seed: u64,
}

impl Default for SpinDownConfig {
    fn default() -> Self {
        Self {
            omega0: 15.0,
            duration: 600.0,
            sample_rate: 100.0,
            position_noise: 0.0,
            marker_radius: 4.0e-3,
            center: [0.0, 0.0],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub pressure: Option<f64>,
    pub tilt: Option<[f64; 2]>,
    pub seed: Option<u64>,
    /// Largest expected |ω| [rad/s]; enables an a-priori sampling check.
    pub omega_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinDownTrace {
    pub samples: Vec<TraceSample>,
    pub marker_radius: f64,
    pub meta: TraceMeta,
}

impl SpinDownTrace {
    pub fn new(samples: Vec<TraceSample>, marker_radius: f64, meta: TraceMeta) -> Result<Self> {
        if samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::domain("trace times must be strictly increasing"));
        }
        Ok(Self {
            samples,
            marker_radius,
            meta,
        })
    }
}

/// Phase and angular velocity of the noiseless spin-down at time t.
pub fn exact_motion(model: &DampingModel, omega0: f64, t: f64) -> Option<(f64, f64)> {
    match model {
        DampingModel::Constant(g) if *g == 0.0 => Some((omega0 * t, omega0)),
        DampingModel::Constant(g) => {
            Some((omega0 * -(-g * t).exp_m1() / g, omega0 * (-g * t).exp()))
        }
        DampingModel::Table { .. } => None,
    }
}

/// RK4 on (φ, ω) with ω̇ = −γ(ω) ω.
fn integrate_table(
    model: &DampingModel,
    omega0: f64,
    times: &[f64],
    substeps: usize,
) -> Vec<(f64, f64)> {
    let f = |w: f64| -model.rate(w) * w;
    let mut out = Vec::with_capacity(times.len());
    let (mut phi, mut w, mut t) = (0.0, omega0, 0.0);
    for &target in times {
        let h = (target - t) / substeps as f64;
        for _ in 0..substeps {
            let k1w = f(w);
            let k1p = w;
            let k2w = f(w + 0.5 * h * k1w);
            let k2p = w + 0.5 * h * k1w;
            let k3w = f(w + 0.5 * h * k2w);
            let k3p = w + 0.5 * h * k2w;
            let k4w = f(w + h * k3w);
            let k4p = w + h * k3w;
            phi += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
            w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        }
        t = target;
        out.push((phi, w));
    }
    out
}

/// Synthetic marker trace of a disk spinning down under `model`.
pub fn simulate_spindown(model: &DampingModel, cfg: &SpinDownConfig) -> Result<SpinDownTrace> {
    model.validate()?;
    let n = (cfg.duration * cfg.sample_rate).floor();
    if !(cfg.omega0 != 0.0 && cfg.omega0.is_finite()) {
        return Err(Error::domain("omega0 must be non-zero"));
    }
    if !(cfg.duration > 0.0
        && cfg.sample_rate > 0.0
        && cfg.marker_radius > 0.0
        && cfg.position_noise >= 0.0)
    {
        return Err(Error::domain(
            "duration, sample rate and marker radius must be positive",
        ));
    }
    if n < MIN_SAMPLES as f64 {
        return Err(Error::domain(format!(
            "sample_rate x duration = {n} is below {MIN_SAMPLES} samples"
        )));
    }
    let times: Vec<f64> = (0..n as usize)
        .map(|i| i as f64 / cfg.sample_rate)
        .collect();
    let motion: Vec<(f64, f64)> = match model {
        DampingModel::Constant(_) => times
            .iter()
            .map(|&t| exact_motion(model, cfg.omega0, t).expect("closed form"))
            .collect(),
        DampingModel::Table { .. } => integrate_table(model, cfg.omega0, &times, 8),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.position_noise).map_err(|e| Error::domain(e.to_string()))?;
    let samples = times
        .iter()
        .zip(&motion)
        .map(|(&t, &(phi, _))| {
            let (s, c) = phi.sin_cos();
            TraceSample {
                t,
                x: cfg.center[0] + cfg.marker_radius * c + noise.sample(&mut rng),
                y: cfg.center[1] + cfg.marker_radius * s + noise.sample(&mut rng),
            }
        })
        .collect();
    Ok(SpinDownTrace {
        samples,
        marker_radius: cfg.marker_radius,
        meta: TraceMeta {
            seed: Some(cfg.seed),
            omega_max: Some(cfg.omega0.abs()),
            ..TraceMeta::default()
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSeries {
    pub t: Vec<f64>,
    /// Unwrapped angle [rad].
    pub phi: Vec<f64>,
    /// Mean marker position used as the origin.
    pub origin: [f64; 2],
}

/// Polar angle of the marker about its mean position, unwrapped.
pub fn extract_phase(trace: &SpinDownTrace) -> Result<PhaseSeries> {
    let s = &trace.samples;
    if s.len() < 2 {
        return Err(Error::domain("trace needs at least two samples"));
    }
    let n = s.len() as f64;
    let origin = [
        s.iter().map(|p| p.x).sum::<f64>() / n,
        s.iter().map(|p| p.y).sum::<f64>() / n,
    ];
    if let Some(w) = trace.meta.omega_max {
        if let Some((i, dt)) = s
            .windows(2)
            .map(|p| p[1].t - p[0].t)
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
        {
            if w * dt >= PI {
                return Err(Error::UnwrapAmbiguity {
                    index: i,
                    next: i + 1,
                    step: w * dt,
                });
            }
        }
    }
    let mut phi = Vec::with_capacity(s.len());
    let mut prev = 0.0;
    for (i, p) in s.iter().enumerate() {
        let (dx, dy) = (p.x - origin[0], p.y - origin[1]);
        if dx == 0.0 && dy == 0.0 {
            return Err(Error::domain(format!(
                "sample {i} sits exactly on the origin"
            )));
        }
        let a = dy.atan2(dx);
        if i == 0 {
            phi.push(a);
        } else {
            let raw = a - prev;
            let step = raw - 2.0 * PI * (raw / (2.0 * PI)).round();
            if step.abs() >= PI * (1.0 - 1e-9) {
                return Err(Error::UnwrapAmbiguity {
                    index: i - 1,
                    next: i,
                    step: step.abs(),
                });
            }
            let last = phi[i - 1];
            phi.push(last + step);
        }
        prev = a;
    }
    Ok(PhaseSeries {
        t: s.iter().map(|p| p.t).collect(),
        phi,
        origin,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaSeries {
    pub t: Vec<f64>,
    pub omega: Vec<f64>,
    /// False for samples whose derivative uses a truncated kernel.
    pub valid: Vec<bool>,
    pub sigma_t: f64,
}

impl OmegaSeries {
    pub fn interior(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        (0..self.t.len())
            .filter(|&i| self.valid[i])
            .map(|i| (i, self.t[i], self.omega[i]))
    }
}

/// Gaussian-weighted moving average of φ (σ = `sigma_t`, cut at 4σ,
/// renormalized at the ends) followed by central differences.
pub fn smooth_and_differentiate(phase: &PhaseSeries, sigma_t: f64) -> Result<OmegaSeries> {
    let (t, phi) = (&phase.t, &phase.phi);
    let n = t.len();
    if !(sigma_t > 0.0) {
        return Err(Error::domain("sigma_t must be positive"));
    }
    if n < 3 || t[n - 1] - t[0] < 2.0 * KERNEL_HALF_WIDTH * sigma_t {
        return Err(Error::domain(format!(
            "trace of {:.3} s is shorter than 8 sigma = {:.3} s",
            t.last().copied().unwrap_or(0.0) - t[0],
            2.0 * KERNEL_HALF_WIDTH * sigma_t
        )));
    }
    let mut dts: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    dts.sort_by(f64::total_cmp);
    let dt = dts[dts.len() / 2];
    if sigma_t / dt < MIN_SAMPLES_PER_SIGMA * (1.0 - 1e-9) {
        return Err(Error::domain(format!(
            "sigma_t = {sigma_t} s spans {:.2} samples; need at least {MIN_SAMPLES_PER_SIGMA}",
            sigma_t / dt
        )));
    }
    // tolerance keeps the window symmetric when t carries rounding noise
    let reach = KERNEL_HALF_WIDTH * sigma_t * (1.0 + 1e-9);
    let mut smooth = vec![0.0; n];
    let (mut lo, mut hi) = (0usize, 0usize);
    for i in 0..n {
        while t[i] - t[lo] > reach {
            lo += 1;
        }
        while hi + 1 < n && t[hi + 1] - t[i] <= reach {
            hi += 1;
        }
        let (mut num, mut den) = (0.0, 0.0);
        for j in lo..=hi {
            let u = (t[j] - t[i]) / sigma_t;
            let w = (-0.5 * u * u).exp();
            num += w * (phi[j] - phi[i]);
            den += w;
        }
        smooth[i] = phi[i] + num / den;
    }
    let mut omega = vec![f64::NAN; n];
    let mut valid = vec![false; n];
    let (t0, t1) = (t[0], t[n - 1]);
    for i in 1..n - 1 {
        omega[i] = (smooth[i + 1] - smooth[i - 1]) / (t[i + 1] - t[i - 1]);
        valid[i] = t[i - 1] - t0 >= reach && t1 - t[i + 1] >= reach;
    }
    omega[0] = (smooth[1] - smooth[0]) / (t[1] - t[0]);
    omega[n - 1] = (smooth[n - 1] - smooth[n - 2]) / (t[n - 1] - t[n - 2]);
    Ok(OmegaSeries {
        t: t.clone(),
        omega,
        valid,
        sigma_t,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub gamma: f64,
    pub ln_omega_intercept: f64,
    pub stderr: f64,
    /// Time span actually fitted [s].
    pub window: (f64, f64),
    pub r_squared: f64,
    pub points: usize,
}

/// Ordinary least squares of ln|ω| against t over valid samples inside
/// `window` (all valid samples if `None`); γ = −slope.
pub fn estimate_gamma(series: &OmegaSeries, window: Option<(f64, f64)>) -> Result<GammaEstimate> {
    let (a, b) = window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let picked: Vec<(usize, f64, f64)> = series
        .interior()
        .filter(|&(_, t, _)| t >= a && t <= b)
        .collect();
    if picked.len() < 3 {
        return Err(Error::Fit(format!(
            "only {} usable samples in the fit window",
            picked.len()
        )));
    }
    // rotation sense is taken from the window's mean
    let sense = picked.iter().map(|p| p.2).sum::<f64>().signum();
    let bad: Vec<usize> = picked
        .iter()
        .filter(|p| !(p.2 * sense > 0.0))
        .map(|p| p.0)
        .collect();
    if !bad.is_empty() {
        return Err(Error::NonPositiveOmega(bad));
    }
    let t: Vec<f64> = picked.iter().map(|p| p.1).collect();
    let y: Vec<f64> = picked.iter().map(|p| (p.2 * sense).ln()).collect();
    let fit = fit_line(&t, &y)?;
    Ok(GammaEstimate {
        gamma: -fit.slope,
        ln_omega_intercept: fit.intercept,
        stderr: fit.slope_stderr,
        window: (t[0], t[t.len() - 1]),
        r_squared: fit.r_squared.clamp(0.0, 1.0),
        points: fit.n,
    })
}

/// Trace → phase → ω → γ in one call.
pub fn analyze_trace(
    trace: &SpinDownTrace,
    sigma_t: f64,
    window: Option<(f64, f64)>,
) -> Result<GammaEstimate> {
    if trace.samples.len() < MIN_SAMPLES {
        return Err(Error::domain(format!(
            "trace has {} samples; estimation needs {MIN_SAMPLES}",
            trace.samples.len()
        )));
    }
    let phase = extract_phase(trace)?;
    let omega = smooth_and_differentiate(&phase, sigma_t)?;
    estimate_gamma(&omega, window)
}

/// Equipartition displacement √(k_B T/(m ω_L²)) [m].
pub fn thermal_rms_displacement(temperature: f64, mass: f64, omega_l: f64) -> Result<f64> {
    if !(temperature > 0.0 && mass > 0.0 && omega_l > 0.0) {
        return Err(Error::domain(
            "temperature, mass and omega must be positive",
        ));
    }
    Ok((K_B * temperature / (mass * omega_l * omega_l)).sqrt())
}

/// Damping rate implied by a static offset `x` under a power law.
pub fn chained_gamma(x: f64, fit: &PowerLawFit) -> f64 {
    fit.eval(x)
}

/// Spacing E_{l+1} − E_l = ħ²(l+1)/I of rigid-rotor levels [J].
pub fn rotor_level_spacing(inertia: f64, l: u64) -> Result<f64> {
    if !(inertia > 0.0) {
        return Err(Error::domain("moment of inertia must be positive"));
    }
    Ok(HBAR * HBAR * (l as f64 + 1.0) / inertia)
}

/// Offset d = (γ/c1)^(1/c2) that would produce damping `gamma_floor`.
pub fn residual_offset_from_floor(gamma_floor: f64, fit: &PowerLawFit) -> Result<f64> {
    if !(gamma_floor > 0.0) || !(fit.c1 > 0.0) || fit.c2 == 0.0 {
        return Err(Error::domain("need gamma_floor > 0, c1 > 0 and c2 != 0"));
    }
    Ok((gamma_floor / fit.c1).powf(1.0 / fit.c2))
}
