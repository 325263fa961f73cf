//! Gas damping of the spinning disk from the free-molecular limit to
//! continuum flow.

mod swirl;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use swirl::{
    couette_gap_gamma, swirl_flow_solve, swirl_grid, SurfaceTorque, SwirlOptions, SwirlSolution,
    MIN_GAP_CELLS,
};

use crate::constants::{AMU, K_B};
use crate::error::{Error, Result};
use crate::levitation::DiskSpec;

pub const CONTINUUM_KN: f64 = 0.01;
pub const FREE_MOLECULAR_KN: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasSpec {
    /// [Pa]
    pub pressure: f64,
    /// [K]
    pub temperature: f64,
    /// [kg]
    pub molecule_mass: f64,
    /// Kinetic diameter [m].
    pub molecule_diameter: f64,
    /// Dynamic viscosity [Pa·s].
    pub viscosity: f64,
    /// Momentum accommodation factor in (0, 1].
    pub accommodation: f64,
}

impl GasSpec {
    /// Air at 300 K with full accommodation.
    pub fn air(pressure: f64) -> Self {
        Self {
            pressure,
            temperature: 300.0,
            molecule_mass: 28.97 * AMU,
            molecule_diameter: 3.7e-10,
            viscosity: 1.81e-5,
            accommodation: 1.0,
        }
    }

    pub fn with_pressure(&self, pressure: f64) -> Self {
        Self { pressure, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("pressure", self.pressure),
            ("temperature", self.temperature),
            ("molecule_mass", self.molecule_mass),
            ("molecule_diameter", self.molecule_diameter),
            ("viscosity", self.viscosity),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!(
                    "gas {name} must be positive, got {v}"
                )));
            }
        }
        if !(self.accommodation > 0.0 && self.accommodation <= 1.0) {
            return Err(Error::domain(format!(
                "accommodation must lie in (0, 1], got {}",
                self.accommodation
            )));
        }
        Ok(())
    }

    /// Ideal-gas density P m₀/(k_B T) [kg/m³].
    pub fn density(&self) -> f64 {
        self.pressure * self.molecule_mass / (K_B * self.temperature)
    }

    /// Mean free path k_B T/(√2 π d² P) [m].
    pub fn mean_free_path(&self) -> f64 {
        K_B * self.temperature / (2f64.sqrt() * PI * self.molecule_diameter.powi(2) * self.pressure)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Continuum,
    Transition,
    FreeMolecular,
}

impl Regime {
    pub fn from_knudsen(kn: f64) -> Self {
        if kn < CONTINUUM_KN {
            Regime::Continuum
        } else if kn > FREE_MOLECULAR_KN {
            Regime::FreeMolecular
        } else {
            Regime::Transition
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Regime::Continuum => "continuum",
            Regime::Transition => "transition",
            Regime::FreeMolecular => "free-molecular",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub mean_free_path: f64,
    pub knudsen: f64,
    pub regime: Regime,
}

/// Mean free path and Knudsen number λ/H for a gap or thickness `length`.
pub fn knudsen_regime(gas: &GasSpec, length: f64) -> Result<RegimeReport> {
    gas.validate()?;
    if !(length > 0.0) {
        return Err(Error::domain("characteristic length must be positive"));
    }
    let mean_free_path = gas.mean_free_path();
    let knudsen = mean_free_path / length;
    Ok(RegimeReport {
        mean_free_path,
        knudsen,
        regime: Regime::from_knudsen(knudsen),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeMolecular {
    /// Γ_fm [N·m·s]
    pub damping_coefficient: f64,
    /// γ_fm [Hz]
    pub gamma: f64,
    /// The gas is continuum at this pressure; the value is out of its range.
    pub out_of_regime: bool,
}

/// Free-molecular drag Γ = acc·R⁴·√(π m₀/(2 k_B T))·(1 + 2H/R)·P.
pub fn gamma_free_molecular(gas: &GasSpec, disk: &DiskSpec) -> Result<FreeMolecular> {
    gas.validate()?;
    disk.validate()?;
    let coeff = gas.accommodation
        * disk.radius.powi(4)
        * (PI * gas.molecule_mass / (2.0 * K_B * gas.temperature)).sqrt()
        * (1.0 + 2.0 * disk.thickness / disk.radius);
    let damping_coefficient = coeff * gas.pressure;
    let regime = knudsen_regime(gas, disk.thickness)?.regime;
    Ok(FreeMolecular {
        damping_coefficient,
        gamma: damping_coefficient / disk.moment_of_inertia(),
        out_of_regime: regime == Regime::Continuum,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoughEstimates {
    pub gamma_fm: f64,
    pub gamma_c: f64,
}

/// Order-of-magnitude rates for a sphere-like body of diameter D and density ρ_s:
/// γ_fm ≈ (P/(ρ_s D))·√(2m₀/(π k_B T)), γ_c ≈ μ/(ρ_s D²).
pub fn rough_estimates(diameter: f64, density: f64, gas: &GasSpec) -> Result<RoughEstimates> {
    gas.validate()?;
    if !(diameter > 0.0 && density > 0.0) {
        return Err(Error::domain("diameter and density must be positive"));
    }
    Ok(RoughEstimates {
        gamma_fm: gas.pressure / (density * diameter)
            * (2.0 * gas.molecule_mass / (PI * K_B * gas.temperature)).sqrt(),
        gamma_c: gas.viscosity / (density * diameter * diameter),
    })
}

/// Rough estimates with D = 2R and ρ_s = M/(πR²H).
pub fn rough_estimates_for_disk(disk: &DiskSpec, gas: &GasSpec) -> Result<RoughEstimates> {
    rough_estimates(2.0 * disk.radius, disk.density(), gas)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub pressure: f64,
    pub gamma_gas: f64,
    pub gamma_total: f64,
    pub regime: Regime,
}

/// Pressure at which the free-molecular rate equals `gamma`.
pub fn free_molecular_crossover(gas: &GasSpec, disk: &DiskSpec, gamma: f64) -> Result<f64> {
    let per_pa = gamma_free_molecular(&gas.with_pressure(1.0), disk)?.gamma;
    Ok(gamma / per_pa)
}

/// Composite rate γ_gas(P) + γ_eddy. Between the regime edges log γ is
/// interpolated linearly in log Kn from γ_fm at Kn = 10 to `gamma_continuum`
/// at Kn = 0.01.
pub fn gamma_total(
    pressures: &[f64],
    gamma_eddy: f64,
    disk: &DiskSpec,
    gas: &GasSpec,
    gamma_continuum: f64,
) -> Result<Vec<CurvePoint>> {
    if !(gamma_eddy >= 0.0) || !(gamma_continuum > 0.0) {
        return Err(Error::domain(
            "eddy floor must be >= 0 and continuum rate > 0",
        ));
    }
    gas.validate()?;
    // pressure scales as 1/Kn
    let kn_at_1pa = knudsen_regime(&gas.with_pressure(1.0), disk.thickness)?.knudsen;
    let p_fm_edge = kn_at_1pa / FREE_MOLECULAR_KN;
    let fm_edge = gamma_free_molecular(&gas.with_pressure(p_fm_edge), disk)?.gamma;
    pressures
        .par_iter()
        .map(|&p| {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(Error::domain(format!("pressure {p} must be non-negative")));
            }
            if p == 0.0 {
                return Ok(CurvePoint {
                    pressure: 0.0,
                    gamma_gas: 0.0,
                    gamma_total: gamma_eddy,
                    regime: Regime::FreeMolecular,
                });
            }
            let kn = kn_at_1pa / p;
            let regime = Regime::from_knudsen(kn);
            let gamma_gas = match regime {
                Regime::FreeMolecular => gamma_free_molecular(&gas.with_pressure(p), disk)?.gamma,
                Regime::Continuum => gamma_continuum,
                Regime::Transition => {
                    let t = (FREE_MOLECULAR_KN.ln() - kn.ln())
                        / (FREE_MOLECULAR_KN.ln() - CONTINUUM_KN.ln());
                    (fm_edge.ln() + t * (gamma_continuum.ln() - fm_edge.ln())).exp()
                }
            };
            Ok(CurvePoint {
                pressure: p,
                gamma_gas,
                gamma_total: gamma_gas + gamma_eddy,
                regime,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_free_path_and_regimes() {
        let gas = GasSpec::air(1.0);
        let rep = knudsen_regime(&gas, 1.12e-3).unwrap();
        // k_B T/(√2 π d² P) evaluated by hand
        let lambda = 1.380649e-23 * 300.0
            / (std::f64::consts::SQRT_2 * std::f64::consts::PI * 3.7e-10 * 3.7e-10);
        assert!((rep.mean_free_path / lambda - 1.0).abs() < 1e-9);
        assert!((rep.mean_free_path - 6.8e-3).abs() < 0.05e-3);
        assert!((rep.knudsen - 6.1).abs() < 0.05);
        assert_eq!(rep.regime, Regime::Transition);
        let ten = knudsen_regime(&gas.with_pressure(10.0), 1.12e-3).unwrap();
        assert!((rep.knudsen / ten.knudsen - 10.0).abs() < 1e-12);
        let atm = knudsen_regime(&gas.with_pressure(1e5), 1.12e-3).unwrap();
        assert!((atm.knudsen - 6.1e-5).abs() < 0.05e-5);
        assert_eq!(atm.regime, Regime::Continuum);
        assert_eq!(Regime::from_knudsen(11.0), Regime::FreeMolecular);
    }

    #[test]
    fn free_molecular_value_and_scalings() {
        let disk = DiskSpec::reference();
        let gas = GasSpec::air(1.0);
        let fm = gamma_free_molecular(&gas, &disk).unwrap();
        // R⁴ √(π m₀/(2 k_B T)) (1 + 2H/R) / (M R²/2), step by step
        let m0: f64 = 28.97 * 1.66053906660e-27;
        let root = (std::f64::consts::PI * m0 / (2.0 * 1.380649e-23 * 300.0)).sqrt();
        let shape = 1.0 + 2.0 * 1.12 / 5.01;
        let inertia = 0.5 * 191e-6 * 5.01e-3 * 5.01e-3;
        let oracle = 5.01e-3f64.powi(4) * root * shape / inertia;
        assert!((fm.gamma / oracle - 1.0).abs() < 1e-12);
        assert!(
            (fm.gamma - 1.624e-3).abs() < 0.005 * 1.624e-3,
            "{:e}",
            fm.gamma
        );
        let twice = gamma_free_molecular(&gas.with_pressure(2.0), &disk).unwrap();
        assert_eq!(twice.gamma, 2.0 * fm.gamma);
        let half = GasSpec {
            accommodation: 0.5,
            ..gas
        };
        assert!((gamma_free_molecular(&half, &disk).unwrap().gamma / fm.gamma - 0.5).abs() < 1e-15);
        assert!(
            gamma_free_molecular(&gas.with_pressure(1e5), &disk)
                .unwrap()
                .out_of_regime
        );
    }

    #[test]
    fn rough_estimate_values() {
        let disk = DiskSpec::reference();
        let gas = GasSpec::air(1.0);
        let r = rough_estimates_for_disk(&disk, &gas).unwrap();
        assert!((disk.density() - 2163.0).abs() < 1.0);
        assert!((r.gamma_c - 8.3e-5).abs() < 0.05e-5, "{:e}", r.gamma_c);
        let r10 = rough_estimates_for_disk(&disk, &gas.with_pressure(10.0)).unwrap();
        assert!((r10.gamma_fm / r.gamma_fm - 10.0).abs() < 1e-12);
        assert_eq!(r10.gamma_c, r.gamma_c);
    }

    #[test]
    fn composite_curve_properties() {
        let disk = DiskSpec::reference();
        let gas = GasSpec::air(1.0);
        let floor = 5.5e-5;
        let gc = 1.4e-2;
        let ps: Vec<f64> = (0..=90)
            .map(|i| 10f64.powf(-5.0 + i as f64 * 0.1))
            .collect();
        let curve = gamma_total(&ps, floor, &disk, &gas, gc).unwrap();
        assert!(curve
            .windows(2)
            .all(|w| w[1].gamma_total >= w[0].gamma_total));
        let zero = gamma_total(&[0.0], floor, &disk, &gas, gc).unwrap();
        assert_eq!(zero[0].gamma_total, floor);
        let fm_edge = curve
            .iter()
            .filter(|c| c.regime == Regime::FreeMolecular)
            .map(|c| c.gamma_gas)
            .fold(0.0, f64::max);
        for c in curve.iter().filter(|c| c.regime == Regime::Transition) {
            assert!(c.gamma_gas >= fm_edge && c.gamma_gas <= gc);
        }
        let p = free_molecular_crossover(&gas, &disk, floor).unwrap();
        assert!((p / 3.4e-2 - 1.0).abs() < 0.1, "{p}");
        assert!(gamma_total(&[1.0], -1.0, &disk, &gas, gc).is_err());
    }

    #[test]
    fn gas_validation() {
        assert!(GasSpec::air(0.0).validate().is_err());
        let g = GasSpec {
            accommodation: 1.5,
            ..GasSpec::air(1.0)
        };
        assert!(g.validate().is_err());
        assert!((GasSpec::air(101325.0).density() - 1.177).abs() < 0.01);
    }
}
