//! Radial collapse of a 2D tilt scan γ(θx, θy) about its minimum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levitation::tilt_to_displacement;
use crate::numerics::lm::{levenberg_marquardt, solve_dense};

/// Parameter order of `TiltScanResult::params`.
pub const TILT_PARAMS: [&str; 5] = ["theta_x_min", "theta_y_min", "ln_c1", "c2", "floor"];

/// One scan point; angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltSample {
    pub theta_x: f64,
    pub theta_y: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltScanResult {
    /// Fitted center of minimal damping [rad].
    pub center: (f64, f64),
    /// Prefactor of γ − floor = c1·d^c2 with d in meters.
    pub c1: f64,
    pub c2: f64,
    pub floor: f64,
    /// (Δθ [rad], γ [Hz]) sorted by Δθ.
    pub profile: Vec<(f64, f64)>,
    /// ln γ_model − ln γ per input sample.
    pub residuals: Vec<f64>,
    /// One-sigma parameter uncertainties in `TILT_PARAMS` order.
    pub stderr: Vec<f64>,
    pub iterations: usize,
}

fn model(p: &[f64], s: &TiltSample, omega_l: f64, scale: f64) -> f64 {
    let dt = (s.theta_x - p[0]).hypot(s.theta_y - p[1]);
    let d = tilt_to_displacement(dt, omega_l).offset;
    p[4] * scale + p[2].exp() * d.powf(p[3])
}

/// Fits γ = floor + c1·(gΔθ/ω_L²)^c2 about an unknown center by
/// Levenberg–Marquardt on log residuals.
pub fn tilt_scan_collapse(samples: &[TiltSample], omega_l: f64) -> Result<TiltScanResult> {
    if samples.len() < 6 {
        return Err(Error::Fit(format!(
            "tilt scan needs 6 samples, got {}",
            samples.len()
        )));
    }
    if !(omega_l > 0.0) {
        return Err(Error::domain("omega_L must be positive"));
    }
    if samples
        .iter()
        .any(|s| !(s.gamma > 0.0) || !s.theta_x.is_finite() || !s.theta_y.is_finite())
    {
        return Err(Error::domain(
            "tilt samples need finite angles and gamma > 0",
        ));
    }
    let n = samples.len() as f64;
    let mx = samples.iter().map(|s| s.theta_x).sum::<f64>() / n;
    let my = samples.iter().map(|s| s.theta_y).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for s in samples {
        let (dx, dy) = (s.theta_x - mx, s.theta_y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let tr = sxx + syy;
    let det = sxx * syy - sxy * sxy;
    let lmin = 0.5 * tr - (0.25 * tr * tr - det).max(0.0).sqrt();
    if !(lmin > 1e-10 * tr) {
        return Err(Error::Rank(
            "tilt samples are collinear; both axes must be spanned".into(),
        ));
    }

    // floor is fitted in units of the smallest rate to keep parameters O(1)
    let low = samples
        .iter()
        .min_by(|a, b| a.gamma.total_cmp(&b.gamma))
        .unwrap();
    let high = samples
        .iter()
        .max_by(|a, b| a.gamma.total_cmp(&b.gamma))
        .unwrap();
    let scale = low.gamma;
    let d_high = tilt_to_displacement(
        (high.theta_x - low.theta_x).hypot(high.theta_y - low.theta_y),
        omega_l,
    )
    .offset;
    let c2_0 = 2.0;
    let c1_0 = ((high.gamma - 0.5 * low.gamma).max(low.gamma) / d_high.max(1e-30).powf(c2_0)).ln();
    let start = [low.theta_x, low.theta_y, c1_0, c2_0, 0.5];

    let residuals = |p: &[f64]| -> Vec<f64> {
        samples
            .iter()
            .map(|s| {
                let m = model(p, s, omega_l, scale);
                if m > 0.0 && m.is_finite() {
                    m.ln() - s.gamma.ln()
                } else {
                    1e3
                }
            })
            .collect()
    };
    let rep = levenberg_marquardt(residuals, &start, 500)?;
    let p = rep.params.clone();
    let res = residuals(&p);
    if res.iter().any(|r| r.abs() >= 1e3) {
        return Err(Error::Fit(
            "tilt fit left the model's positive domain".into(),
        ));
    }

    let dof = (samples.len() as f64 - 5.0).max(1.0);
    let s2 = 2.0 * rep.cost / dof;
    let stderr = (0..5)
        .map(|k| {
            let mut e = vec![0.0; 5];
            e[k] = 1.0;
            let col = solve_dense(rep.normal.clone(), e)
                .ok_or_else(|| Error::Rank("tilt fit normal matrix is singular".into()))?;
            let mut v = (s2 * col[k]).max(0.0).sqrt();
            if k == 4 {
                v *= scale;
            }
            Ok(v)
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut profile: Vec<(f64, f64)> = samples
        .iter()
        .map(|s| ((s.theta_x - p[0]).hypot(s.theta_y - p[1]), s.gamma))
        .collect();
    profile.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(TiltScanResult {
        center: (p[0], p[1]),
        c1: p[2].exp(),
        c2: p[3],
        floor: p[4] * scale,
        profile,
        residuals: res,
        stderr,
        iterations: rep.iterations,
    })
}
