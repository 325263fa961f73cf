//! Axisymmetric magnetostatics of coaxial, axially magnetized cylinder and
//! ring magnets, plus the closed-form "resembling" test field.
//!
//! Coordinates are cylindrical (r, z) about the common magnet axis; lengths in
//! metres and flux densities in tesla.

mod cylinder;
pub mod elliptic;
mod resembling;

pub use cylinder::cylinder_field;
pub use resembling::{resembling_field, ResemblingFieldParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points closer than this to a rim circle are rejected.
pub const EDGE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MagnetShape {
    Cylinder,
    Ring,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarity {
    Up,
    Down,
}

impl Polarity {
    pub fn sign(self) -> f64 {
        match self {
            Polarity::Up => 1.0,
            Polarity::Down => -1.0,
        }
    }

    pub fn from_sign(s: i64) -> Option<Self> {
        match s {
            1 => Some(Polarity::Up),
            -1 => Some(Polarity::Down),
            _ => None,
        }
    }
}

/// A uniformly, axially magnetized cylinder or ring coaxial with z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnetSpec {
    pub shape: MagnetShape,
    pub outer_radius: f64,
    /// Zero for a solid cylinder.
    pub inner_radius: f64,
    pub height: f64,
    /// Axial coordinate of the bottom face.
    pub base_z: f64,
    /// Remanent flux density μ₀M (T).
    pub remanence: f64,
    pub polarity: Polarity,
}

impl MagnetSpec {
    pub fn cylinder(
        radius: f64,
        height: f64,
        base_z: f64,
        remanence: f64,
        polarity: Polarity,
    ) -> Result<Self> {
        Self::new(
            MagnetShape::Cylinder,
            radius,
            0.0,
            height,
            base_z,
            remanence,
            polarity,
        )
    }

    pub fn ring(
        outer_radius: f64,
        inner_radius: f64,
        height: f64,
        base_z: f64,
        remanence: f64,
        polarity: Polarity,
    ) -> Result<Self> {
        Self::new(
            MagnetShape::Ring,
            outer_radius,
            inner_radius,
            height,
            base_z,
            remanence,
            polarity,
        )
    }

    pub fn new(
        shape: MagnetShape,
        outer_radius: f64,
        inner_radius: f64,
        height: f64,
        base_z: f64,
        remanence: f64,
        polarity: Polarity,
    ) -> Result<Self> {
        let spec = Self {
            shape,
            outer_radius,
            inner_radius,
            height,
            base_z,
            remanence,
            polarity,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.outer_radius,
            self.inner_radius,
            self.height,
            self.base_z,
            self.remanence,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::schema("magnet", "non-finite dimension"));
        }
        if !(self.outer_radius > 0.0) {
            return Err(Error::schema("outer_radius", "must be positive"));
        }
        if self.inner_radius < 0.0 || self.inner_radius >= self.outer_radius {
            return Err(Error::schema(
                "inner_radius",
                "must satisfy 0 <= inner_radius < outer_radius",
            ));
        }
        if self.shape == MagnetShape::Cylinder && self.inner_radius != 0.0 {
            return Err(Error::schema(
                "inner_radius",
                "a cylinder has inner_radius = 0",
            ));
        }
        if self.shape == MagnetShape::Ring && self.inner_radius == 0.0 {
            return Err(Error::schema(
                "inner_radius",
                "a ring needs inner_radius > 0",
            ));
        }
        if !(self.height > 0.0) {
            return Err(Error::schema("height", "must be positive"));
        }
        if !(self.remanence > 0.0) {
            return Err(Error::schema("remanence", "must be positive"));
        }
        Ok(())
    }

    pub fn top_z(&self) -> f64 {
        self.base_z + self.height
    }

    pub fn volume(&self) -> f64 {
        std::f64::consts::PI * (self.outer_radius.powi(2) - self.inner_radius.powi(2)) * self.height
    }

    /// Dipole moment m = B_r V / μ₀ (A m²), signed by polarity.
    pub fn dipole_moment(&self) -> f64 {
        self.polarity.sign() * self.remanence * self.volume() / crate::constants::MU_0
    }

    fn intersects(&self, other: &MagnetSpec) -> bool {
        let z_overlap = self.base_z < other.top_z() && other.base_z < self.top_z();
        let r_overlap =
            self.inner_radius < other.outer_radius && other.inner_radius < self.outer_radius;
        z_overlap && r_overlap
    }
}

/// In-plane (B_r) and axial (B_z) flux density.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FieldVector {
    pub b_r: f64,
    pub b_z: f64,
}

impl FieldVector {
    pub fn norm(&self) -> f64 {
        self.b_r.hypot(self.b_z)
    }
}

impl std::ops::Add for FieldVector {
    type Output = FieldVector;
    fn add(self, o: FieldVector) -> FieldVector {
        FieldVector {
            b_r: self.b_r + o.b_r,
            b_z: self.b_z + o.b_z,
        }
    }
}

impl std::ops::AddAssign for FieldVector {
    fn add_assign(&mut self, o: FieldVector) {
        self.b_r += o.b_r;
        self.b_z += o.b_z;
    }
}

impl std::ops::Mul<f64> for FieldVector {
    type Output = FieldVector;
    fn mul(self, s: f64) -> FieldVector {
        FieldVector {
            b_r: self.b_r * s,
            b_z: self.b_z * s,
        }
    }
}

/// Coaxial magnets whose volumes do not intersect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnetStack {
    magnets: Vec<MagnetSpec>,
}

impl MagnetStack {
    pub fn new(magnets: Vec<MagnetSpec>) -> Result<Self> {
        if magnets.is_empty() {
            return Err(Error::schema(
                "magnet",
                "stack must contain at least one magnet",
            ));
        }
        for m in &magnets {
            m.validate()?;
        }
        for (i, a) in magnets.iter().enumerate() {
            for (j, b) in magnets.iter().enumerate().skip(i + 1) {
                if a.intersects(b) {
                    return Err(Error::schema(
                        "magnet",
                        format!("magnets {i} and {j} overlap"),
                    ));
                }
            }
        }
        Ok(Self { magnets })
    }

    pub fn magnets(&self) -> &[MagnetSpec] {
        &self.magnets
    }

    /// Highest top face of the stack.
    pub fn top_z(&self) -> f64 {
        self.magnets
            .iter()
            .map(MagnetSpec::top_z)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn outer_radius(&self) -> f64 {
        self.magnets
            .iter()
            .map(|m| m.outer_radius)
            .fold(0.0, f64::max)
    }

    /// Concatenation; fails if the union overlaps.
    pub fn concat(&self, other: &MagnetStack) -> Result<MagnetStack> {
        let mut all = self.magnets.clone();
        all.extend_from_slice(&other.magnets);
        MagnetStack::new(all)
    }

    /// Same geometry with every remanence multiplied by `s` (> 0).
    pub fn scaled(&self, s: f64) -> Result<MagnetStack> {
        MagnetStack::new(
            self.magnets
                .iter()
                .map(|m| MagnetSpec {
                    remanence: m.remanence * s,
                    ..*m
                })
                .collect(),
        )
    }

    /// The seven-magnet trap: two N52 D8×H10 cylinders magnetized up,
    /// surrounded by five N40 OD19×ID8.1×H4 rings magnetized down, top face at z = 0.
    pub fn reference() -> MagnetStack {
        let mm = 1e-3;
        let mut magnets = Vec::new();
        for k in 0..2 {
            magnets.push(
                MagnetSpec::cylinder(
                    4.0 * mm,
                    10.0 * mm,
                    (-20.0 + 10.0 * k as f64) * mm,
                    1.48,
                    Polarity::Up,
                )
                .expect("valid cylinder"),
            );
        }
        for k in 0..5 {
            magnets.push(
                MagnetSpec::ring(
                    9.5 * mm,
                    4.05 * mm,
                    4.0 * mm,
                    (-20.0 + 4.0 * k as f64) * mm,
                    1.30,
                    Polarity::Down,
                )
                .expect("valid ring"),
            );
        }
        MagnetStack::new(magnets).expect("valid default stack")
    }
}

/// Superposition of all member fields at (r, z).
pub fn stack_field(stack: &MagnetStack, r: f64, z: f64) -> Result<FieldVector> {
    let mut total = FieldVector::default();
    for m in &stack.magnets {
        total += cylinder_field(m, r, z)?;
    }
    Ok(total)
}

/// (1/r)∂_r(r B_r) + ∂_z B_z by 5-point central differences with one
/// Richardson step (h and h/2). Requires r > 2h.
pub fn numerical_divergence<F>(field: F, r: f64, z: f64, h: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<FieldVector>,
{
    let d = |h: f64| -> Result<f64> {
        let rb = |rr: f64| -> Result<f64> { Ok(rr * field(rr, z)?.b_r) };
        let bz = |zz: f64| -> Result<f64> { Ok(field(r, zz)?.b_z) };
        let drb = (-rb(r + 2.0 * h)? + 8.0 * rb(r + h)? - 8.0 * rb(r - h)? + rb(r - 2.0 * h)?)
            / (12.0 * h);
        let dbz = (-bz(z + 2.0 * h)? + 8.0 * bz(z + h)? - 8.0 * bz(z - h)? + bz(z - 2.0 * h)?)
            / (12.0 * h);
        Ok(drb / r + dbz)
    };
    let coarse = d(h)?;
    let fine = d(0.5 * h)?;
    Ok((16.0 * fine - coarse) / 15.0)
}

/// Field samples on a tensor (r, z) grid, r-major.
pub fn field_map(
    stack: &MagnetStack,
    rs: &[f64],
    zs: &[f64],
) -> Result<Vec<(f64, f64, FieldVector)>> {
    use rayon::prelude::*;
    let pts: Vec<(f64, f64)> = rs
        .iter()
        .flat_map(|&r| zs.iter().map(move |&z| (r, z)))
        .collect();
    pts.par_iter()
        .map(|&(r, z)| stack_field(stack, r, z).map(|b| (r, z, b)))
        .collect()
}
