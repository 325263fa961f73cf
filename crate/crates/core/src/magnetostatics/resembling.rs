use serde::{Deserialize, Serialize};

use super::FieldVector;
use crate::error::{Error, Result};

/// Parameters of the divergence-free analytic test field
/// B_r = β sin(αr), B_z = −β (z + z₀) (sin(αr)/r + α cos(αr)).
///
/// Kept in nondimensional units (lengths in mm-like units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResemblingFieldParams {
    pub alpha: f64,
    pub beta: f64,
    pub z0: f64,
}

impl ResemblingFieldParams {
    pub fn new(alpha: f64, beta: f64, z0: f64) -> Result<Self> {
        if alpha == 0.0 || !alpha.is_finite() || !beta.is_finite() || !z0.is_finite() {
            return Err(Error::domain(
                "resembling field needs finite parameters and alpha != 0",
            ));
        }
        Ok(Self { alpha, beta, z0 })
    }

    /// α = π/6, β = 0.1, z₀ = −4.
    pub fn reference() -> Self {
        Self {
            alpha: std::f64::consts::PI / 6.0,
            beta: 0.1,
            z0: -4.0,
        }
    }
}

pub fn resembling_field(p: &ResemblingFieldParams, r: f64, z: f64) -> Result<FieldVector> {
    if !(r >= 0.0) || !r.is_finite() || !z.is_finite() {
        return Err(Error::domain(format!("invalid point r = {r}, z = {z}")));
    }
    let ar = p.alpha * r;
    let b_r = p.beta * ar.sin();
    let shape = if r == 0.0 {
        2.0 * p.alpha
    } else {
        ar.sin() / r + p.alpha * ar.cos()
    };
    Ok(FieldVector {
        b_r,
        b_z: -p.beta * (z + p.z0) * shape,
    })
}
