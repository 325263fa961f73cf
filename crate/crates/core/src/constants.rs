//! Physical constants, SI units.

/// Standard gravity used throughout (m/s^2), two significant digits past the point.
pub const G: f64 = 9.81;
/// Boltzmann constant (J/K), exact SI 2019 value.
pub const K_B: f64 = 1.380_649e-23;
/// Vacuum permeability (H/m), CODATA 2018.
pub const MU_0: f64 = 1.256_637_062_12e-6;
/// Unified atomic mass unit (kg), CODATA 2018.
pub const AMU: f64 = 1.660_539_066_60e-27;
/// Reduced Planck constant (J s), exact SI 2019 value.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Fixed constants bundled for reporting.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PhysicalConstants {
    pub g: f64,
    pub k_b: f64,
    pub mu_0: f64,
    pub amu: f64,
    pub hbar: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            g: G,
            k_b: K_B,
            mu_0: MU_0,
            amu: AMU,
            hbar: HBAR,
        }
    }
}
