//! Diamagnetic energy of an anisotropic disk in the trap field, its
//! levitation height, trap frequencies and the tilt → offset relation.
//!
//! The disk sits with its bottom face a gap `h` above the stack's top face and
//! its centre displaced laterally by `d` along x. Energy density of the linear
//! diamagnet is u = [χ∥ (B_x² + B_y²) + χ⊥ B_z²] / 2μ₀ with positive
//! susceptibility magnitudes, so U grows with |B|².

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{G, MU_0};
use crate::error::{Error, Result};
use crate::magnetostatics::{stack_field, MagnetStack};
use crate::numerics::GaussLegendre;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskSpec {
    pub radius: f64,
    pub thickness: f64,
    pub mass: f64,
    /// In-plane susceptibility magnitude |χ∥|.
    pub chi_parallel: f64,
    /// C-axis susceptibility magnitude |χ⊥|.
    pub chi_perp: f64,
    /// In-plane conductivity S∥ (S/m).
    pub sigma_parallel: f64,
    /// C-axis conductivity S⊥ (S/m).
    pub sigma_perp: f64,
}

impl DiskSpec {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("radius", self.radius),
            ("thickness", self.thickness),
            ("mass", self.mass),
            ("chi_parallel", self.chi_parallel),
            ("chi_perp", self.chi_perp),
            ("sigma_parallel", self.sigma_parallel),
            ("sigma_perp", self.sigma_perp),
        ];
        for (k, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::schema(k, "must be finite and non-negative"));
            }
        }
        for (k, v) in [
            ("radius", self.radius),
            ("thickness", self.thickness),
            ("mass", self.mass),
        ] {
            if v <= 0.0 {
                return Err(Error::schema(k, "must be positive"));
            }
        }
        if self.thickness >= self.radius {
            return Err(Error::schema(
                "thickness",
                "thin-disk model needs thickness < radius",
            ));
        }
        Ok(())
    }

    /// Pyrolytic graphite disk: D 10.02 mm, H 1.12 mm, 191 mg,
    /// χ∥ = 85e−6, χ⊥ = 530e−6, S∥ = 1.3e5 S/m, S⊥ = 200 S/m.
    pub fn reference() -> Self {
        Self {
            radius: 5.01e-3,
            thickness: 1.12e-3,
            mass: 191e-6,
            chi_parallel: 85e-6,
            chi_perp: 530e-6,
            sigma_parallel: 1.3e5,
            sigma_perp: 200.0,
        }
    }

    /// I = ½ M R².
    pub fn moment_of_inertia(&self) -> f64 {
        0.5 * self.mass * self.radius * self.radius
    }

    pub fn volume(&self) -> f64 {
        PI * self.radius * self.radius * self.thickness
    }

    pub fn density(&self) -> f64 {
        self.mass / self.volume()
    }

    pub fn weight(&self) -> f64 {
        self.mass * G
    }

    fn energy_density(&self, b_r: f64, b_z: f64) -> f64 {
        (self.chi_parallel * b_r * b_r + self.chi_perp * b_z * b_z) / (2.0 * MU_0)
    }
}

/// Lateral offset `d` of the disk centre from the axis and gap `h` between
/// the stack top and the disk bottom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub offset: f64,
    pub gap: f64,
}

impl Pose {
    pub fn new(offset: f64, gap: f64) -> Self {
        Self { offset, gap }
    }
}

/// Tensor Gauss–Legendre orders for the disk volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeQuadrature {
    pub radial: usize,
    pub axial: usize,
    pub azimuthal: usize,
}

impl Default for VolumeQuadrature {
    fn default() -> Self {
        Self {
            radial: 48,
            axial: 16,
            azimuthal: 32,
        }
    }
}

impl VolumeQuadrature {
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            radial: self.radial * factor,
            axial: self.axial * factor,
            azimuthal: self.azimuthal * factor,
        }
    }
}

fn check_geometry(disk: &DiskSpec, stack: &MagnetStack, pose: Pose) -> Result<()> {
    disk.validate()?;
    if !pose.gap.is_finite() || !pose.offset.is_finite() {
        return Err(Error::Geometry("non-finite pose".into()));
    }
    let bottom = stack.top_z() + pose.gap;
    let top = bottom + disk.thickness;
    let reach = pose.offset.abs() + disk.radius;
    for m in stack.magnets() {
        let z_overlap = bottom <= m.top_z() && m.base_z < top;
        // disk footprint is a disc of radius R about (d, 0); it clears an
        // annulus only if it lies entirely inside its hole
        let clears_hole = reach <= m.inner_radius;
        let beyond = pose.offset.abs() - disk.radius >= m.outer_radius;
        if z_overlap && !clears_hole && !beyond {
            return Err(Error::Geometry(format!(
                "disk at gap {:.3e} m, offset {:.3e} m intersects a magnet",
                pose.gap, pose.offset
            )));
        }
    }
    Ok(())
}

/// Magnetic energy U_mag(d, h) by tensor Gauss–Legendre quadrature over the disk.
/// The azimuthal dimension is collapsed when d = 0.
pub fn magnetic_energy(
    disk: &DiskSpec,
    stack: &MagnetStack,
    pose: Pose,
    quad: &VolumeQuadrature,
) -> Result<f64> {
    energy_quadrature(disk, stack, pose, quad, pose.offset == 0.0)
}

/// Like [`magnetic_energy`] but always on the full 3D grid, so energies at
/// d = 0 and d ≠ 0 carry the same quadrature error.
pub fn magnetic_energy_3d(
    disk: &DiskSpec,
    stack: &MagnetStack,
    pose: Pose,
    quad: &VolumeQuadrature,
) -> Result<f64> {
    energy_quadrature(disk, stack, pose, quad, false)
}

fn energy_quadrature(
    disk: &DiskSpec,
    stack: &MagnetStack,
    pose: Pose,
    quad: &VolumeQuadrature,
    collapse: bool,
) -> Result<f64> {
    check_geometry(disk, stack, pose)?;
    let gr = GaussLegendre::new(quad.radial);
    let gz = GaussLegendre::new(quad.axial);
    let bottom = stack.top_z() + pose.gap;
    let top = bottom + disk.thickness;
    let radial: Vec<(f64, f64)> = gr.on(0.0, disk.radius).collect();
    let axial: Vec<(f64, f64)> = gz.on(bottom, top).collect();

    if collapse {
        let mut total = 0.0;
        for &(rho, wr) in &radial {
            for &(z, wz) in &axial {
                let b = stack_field(stack, rho, z)?;
                total += wr * wz * 2.0 * PI * rho * disk.energy_density(b.b_r, b.b_z);
            }
        }
        return Ok(total);
    }

    let gp = GaussLegendre::new(quad.azimuthal);
    // the integrand is even in φ; the half range maps onto itself under d → −d
    let azimuth: Vec<(f64, f64)> = gp.on(0.0, PI).map(|(p, w)| (p, 2.0 * w)).collect();
    let rows: Result<Vec<f64>> = radial
        .par_iter()
        .map(|&(rho, wr)| {
            let mut acc = 0.0;
            for &(phi, wp) in &azimuth {
                let (s, c) = phi.sin_cos();
                let r_lab = (pose.offset + rho * c).hypot(rho * s);
                for &(z, wz) in &axial {
                    let b = stack_field(stack, r_lab, z)?;
                    acc += wp * wz * disk.energy_density(b.b_r, b.b_z);
                }
            }
            Ok(acc * wr * rho)
        })
        .collect();
    // fixed-order reduction keeps results bit-reproducible
    Ok(rows?.iter().sum())
}

/// Total potential energy U_mag + M g z_com with z measured from the stack top.
pub fn total_energy(
    disk: &DiskSpec,
    stack: &MagnetStack,
    pose: Pose,
    quad: &VolumeQuadrature,
) -> Result<f64> {
    Ok(magnetic_energy(disk, stack, pose, quad)?
        + disk.weight() * (pose.gap + 0.5 * disk.thickness))
}

/// Magnetic lift F_z = −∂U_mag/∂h from the face integrals
/// −[∫_top u dA − ∫_bottom u dA]; the azimuthal sum collapses at d = 0.
pub fn vertical_force(
    disk: &DiskSpec,
    stack: &MagnetStack,
    pose: Pose,
    quad: &VolumeQuadrature,
) -> Result<f64> {
    check_geometry(disk, stack, pose)?;
    let gr = GaussLegendre::new(quad.radial);
    let bottom = stack.top_z() + pose.gap;
    let top = bottom + disk.thickness;
    let face_diff = |r_lab: f64| -> Result<f64> {
        let bt = stack_field(stack, r_lab, top)?;
        let bb = stack_field(stack, r_lab, bottom)?;
        Ok(disk.energy_density(bt.b_r, bt.b_z) - disk.energy_density(bb.b_r, bb.b_z))
    };
    let mut f = 0.0;
    if pose.offset == 0.0 {
        for (rho, w) in gr.on(0.0, disk.radius) {
            f -= w * 2.0 * PI * rho * face_diff(rho)?;
        }
        return Ok(f);
    }
    let gp = GaussLegendre::new(quad.azimuthal);
    for (rho, wr) in gr.on(0.0, disk.radius) {
        for (phi, wp) in gp.on(0.0, PI) {
            let (s, c) = phi.sin_cos();
            f -= 2.0 * wr * wp * rho * face_diff((pose.offset + rho * c).hypot(rho * s))?;
        }
    }
    Ok(f)
}

/// Lateral magnetic force F_x = −∂U_mag/∂d from the mantle integral
/// −∫ u n_x dA over the disk's cylindrical side.
pub fn lateral_force(
    disk: &DiskSpec,
    stack: &MagnetStack,
    pose: Pose,
    quad: &VolumeQuadrature,
) -> Result<f64> {
    check_geometry(disk, stack, pose)?;
    let gz = GaussLegendre::new(quad.axial);
    let gp = GaussLegendre::new(quad.azimuthal);
    let bottom = stack.top_z() + pose.gap;
    let mut f = 0.0;
    for (phi, wp) in gp.on(0.0, PI) {
        let wp = 2.0 * wp;
        let (s, c) = phi.sin_cos();
        let r_lab = (pose.offset + disk.radius * c).hypot(disk.radius * s);
        for (z, wz) in gz.on(bottom, bottom + disk.thickness) {
            let b = stack_field(stack, r_lab, z)?;
            f -= wp * wz * disk.radius * c * disk.energy_density(b.b_r, b.b_z);
        }
    }
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevitationSolution {
    /// Gap between stack top and disk bottom (m).
    pub h_v: f64,
    pub omega_v: f64,
    pub omega_l: f64,
    /// ∂²U/∂h² and ∂²U/∂d² at equilibrium (J/m²).
    pub curvature_vertical: f64,
    pub curvature_lateral: f64,
}

impl LevitationSolution {
    pub fn omega_v_hz(&self) -> f64 {
        self.omega_v / (2.0 * PI)
    }
    pub fn omega_l_hz(&self) -> f64 {
        self.omega_l / (2.0 * PI)
    }
}

pub const SEARCH_WINDOW: (f64, f64) = (0.05e-3, 5e-3);

/// Stable levitation gap: the lowest root of F_z(h) − M g where the net
/// force changes from upward to downward, located by scanning the search
/// window, bisecting to 1e−7 m and polishing with one secant step.
pub fn equilibrium_height(
    disk: &DiskSpec,
    stack: &MagnetStack,
    quad: &VolumeQuadrature,
) -> Result<f64> {
    let net = |h: f64| -> Result<f64> {
        Ok(vertical_force(disk, stack, Pose::new(0.0, h), quad)? - disk.weight())
    };
    let (lo, hi) = SEARCH_WINDOW;
    let n = 200;
    let hs: Vec<f64> = (0..=n)
        .map(|i| lo * (hi / lo).powf(i as f64 / n as f64))
        .collect();
    let mut prev_h = hs[0];
    let mut prev_f = net(prev_h)?;
    for &h in &hs[1..] {
        let f = net(h)?;
        if prev_f > 0.0 && f <= 0.0 {
            let (mut a, mut b, mut fa, mut fb) = (prev_h, h, prev_f, f);
            while b - a > 1e-7 {
                let m = 0.5 * (a + b);
                let fm = net(m)?;
                if fm > 0.0 {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                    fb = fm;
                }
            }
            let secant = if fa != fb {
                a - fa * (b - a) / (fb - fa)
            } else {
                0.5 * (a + b)
            };
            return Ok(secant.clamp(a, b));
        }
        prev_h = h;
        prev_f = f;
    }
    Err(Error::NoLevitation(format!(
        "net vertical force has no downward-crossing root in [{lo:e}, {hi:e}] m"
    )))
}

/// Second derivative of `f` at `x0` from centred differences with step δ and δ/2,
/// combined by Richardson extrapolation.
pub fn second_derivative<F>(f: F, x0: f64, step: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let f0 = f(x0)?;
    let d = |h: f64| -> Result<f64> { Ok((f(x0 + h)? - 2.0 * f0 + f(x0 - h)?) / (h * h)) };
    let coarse = d(step)?;
    let fine = d(0.5 * step)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Vertical and lateral trap frequencies ω = √(∂²U/∂q² / M) at gap `h_v`.
pub fn trap_frequencies(
    disk: &DiskSpec,
    stack: &MagnetStack,
    h_v: f64,
    quad: &VolumeQuadrature,
) -> Result<LevitationSolution> {
    let step_v = 2e-5;
    let step_l = 1e-4;
    let kv = second_derivative(
        |h| magnetic_energy(disk, stack, Pose::new(0.0, h), quad),
        h_v,
        step_v,
    )?;
    let lateral = |d: f64| magnetic_energy_3d(disk, stack, Pose::new(d, h_v), quad);
    let kl = second_derivative(lateral, 0.0, step_l)?;
    if kv <= 0.0 {
        return Err(Error::UnstableMode {
            axis: "vertical",
            curvature: kv,
        });
    }
    if kl <= 0.0 {
        return Err(Error::UnstableMode {
            axis: "lateral",
            curvature: kl,
        });
    }
    Ok(LevitationSolution {
        h_v,
        omega_v: (kv / disk.mass).sqrt(),
        omega_l: (kl / disk.mass).sqrt(),
        curvature_vertical: kv,
        curvature_lateral: kl,
    })
}

/// Full levitation solve: equilibrium gap then trap frequencies.
pub fn solve_levitation(
    disk: &DiskSpec,
    stack: &MagnetStack,
    quad: &VolumeQuadrature,
) -> Result<LevitationSolution> {
    let h_v = equilibrium_height(disk, stack, quad)?;
    trap_frequencies(disk, stack, h_v, quad)
}

/// Lateral offset produced by a platform tilt Δθ in a trap of lateral
/// frequency ω_L: d = g Δθ / ω_L².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltDisplacement {
    pub offset: f64,
    /// Set when |Δθ| ≥ 0.1 rad, outside the small-angle regime.
    pub small_angle_warning: bool,
}

pub const SMALL_ANGLE_LIMIT: f64 = 0.1;

pub fn tilt_to_displacement(delta_theta: f64, omega_l: f64) -> TiltDisplacement {
    TiltDisplacement {
        offset: G * delta_theta / (omega_l * omega_l),
        small_angle_warning: delta_theta.abs() >= SMALL_ANGLE_LIMIT,
    }
}

/// Total energy on a (d, h) grid, d-major.
pub fn energy_landscape(
    disk: &DiskSpec,
    stack: &MagnetStack,
    offsets: &[f64],
    gaps: &[f64],
    quad: &VolumeQuadrature,
) -> Result<Vec<(f64, f64, f64)>> {
    let mut out = Vec::with_capacity(offsets.len() * gaps.len());
    for &d in offsets {
        for &h in gaps {
            out.push((d, h, total_energy(disk, stack, Pose::new(d, h), quad)?));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
