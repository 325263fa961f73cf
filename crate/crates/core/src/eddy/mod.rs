//! Quasi-static eddy currents in a thin conducting disk spinning off-axis
//! in the stack field.
//!
//! The disk is reduced to a conducting sheet of conductance σ_s = S∥·H.
//! The potential uses linear elements. The motional EMF enters as line
//! integrals along mesh edges (lowest-order edge elements), so any
//! curl-free EMF is balanced exactly by the potential.

mod mesh;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use mesh::{build_disk_mesh, DiskMesh, MeshSymmetry, MIN_AZIMUTHAL};

use crate::constants::MU_0;
use crate::error::{Error, Result};
use crate::levitation::{equilibrium_height, DiskSpec, VolumeQuadrature};
use crate::magnetostatics::{resembling_field, stack_field, MagnetStack, ResemblingFieldParams};
use crate::numerics::regression::fit_line;
use crate::numerics::sparse::{norm, pcg, CsrMatrix, EnvelopeCholesky, TripletBuilder};

/// Above this many unknowns the solver switches from direct factorization to CG.
pub const DIRECT_SOLVE_LIMIT: usize = 200_000;
pub const CG_TOLERANCE: f64 = 1e-10;
/// Default mesh resolution as a fraction of the disk radius.
pub const DEFAULT_RESOLUTION_FRACTION: f64 = 1.0 / 48.0;
/// Lower edge of the power-law fit window.
pub const FIT_WINDOW_MIN: f64 = 0.05e-3;

enum Factor {
    Direct(EnvelopeCholesky),
    Iterative,
}

/// Stiffness matrix and factorization for one mesh; reused across offsets
/// and speeds.
pub struct EddySystem {
    mesh: DiskMesh,
    sheet_conductance: f64,
    /// Gradients of the three barycentric functions per cell.
    grads: Vec<[[f64; 2]; 3]>,
    matrix: CsrMatrix,
    factor: Factor,
}

/// Potential and current of one steady solve.
#[derive(Debug, Clone, Serialize)]
pub struct PotentialSolution {
    /// Nodal scalar potential [V], zero mean.
    pub potential: Vec<f64>,
    /// Per-cell sheet current density [A/m].
    pub sheet_current: Vec<[f64; 2]>,
    /// Relative residual of the unpinned Neumann system.
    pub solver_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Damping {
    /// Axial torque about the disk center [N·m].
    pub tau_z: f64,
    /// Γ = |τ_z|/ω [N·m·s].
    pub damping_coefficient: f64,
    /// γ = Γ/I [Hz].
    pub gamma: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EddySolution {
    #[serde(flatten)]
    pub field: PotentialSolution,
    pub tau_z: f64,
    pub damping_coefficient: f64,
    pub gamma: f64,
}

fn cell_gradients(p: [[f64; 2]; 3], area: f64) -> [[f64; 2]; 3] {
    // ∇λ_i = ẑ × (p_k − p_j) / (2A) for the edge opposite node i
    let g = |j: usize, k: usize| {
        let e = [p[k][0] - p[j][0], p[k][1] - p[j][1]];
        [-e[1] / (2.0 * area), e[0] / (2.0 * area)]
    };
    [g(1, 2), g(2, 0), g(0, 1)]
}

impl EddySystem {
    pub fn new(mesh: DiskMesh, disk: &DiskSpec) -> Result<Self> {
        disk.validate()?;
        let sheet_conductance = disk.sigma_parallel * disk.thickness;
        if !(sheet_conductance > 0.0) {
            return Err(Error::Singular("sheet conductance is zero".into()));
        }
        let grads: Vec<[[f64; 2]; 3]> = mesh
            .cells
            .iter()
            .zip(&mesh.areas)
            .map(|(c, &a)| cell_gradients(c.map(|i| mesh.nodes[i]), a))
            .collect();
        let local: Vec<[[f64; 3]; 3]> = grads
            .par_iter()
            .zip(&mesh.areas)
            .map(|(g, &a)| {
                let mut k = [[0.0; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        k[i][j] = sheet_conductance * a * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                    }
                }
                k
            })
            .collect();
        let mut b = TripletBuilder::new(mesh.node_count());
        for (cell, k) in mesh.cells.iter().zip(&local) {
            for i in 0..3 {
                for j in 0..3 {
                    b.add(cell[i], cell[j], k[i][j]);
                }
            }
        }
        let matrix = b.build();
        let factor = if matrix.dim() <= DIRECT_SOLVE_LIMIT {
            Factor::Direct(EnvelopeCholesky::factor(&matrix.pin(0))?)
        } else {
            Factor::Iterative
        };
        Ok(Self {
            mesh,
            sheet_conductance,
            grads,
            matrix,
            factor,
        })
    }

    pub fn mesh(&self) -> &DiskMesh {
        &self.mesh
    }

    pub fn sheet_conductance(&self) -> f64 {
        self.sheet_conductance
    }

    /// Solves with an arbitrary EMF given as line integrals along directed
    /// edges: `edge_emf(i, j)` = ∫ E·dl from node i to node j.
    pub fn solve_with_edge_emf(
        &self,
        edge_emf: impl Fn(usize, usize) -> f64 + Sync,
    ) -> Result<PotentialSolution> {
        let n = self.mesh.node_count();
        // cell-averaged Whitney field: (1/3) Σ_edges e_ij (∇λ_j − ∇λ_i)
        let emf: Vec<[f64; 2]> = self
            .mesh
            .cells
            .par_iter()
            .zip(&self.grads)
            .map(|(c, g)| {
                let mut e = [0.0; 2];
                for (a, b) in [(0, 1), (1, 2), (2, 0)] {
                    let w = edge_emf(c[a], c[b]) / 3.0;
                    e[0] += w * (g[b][0] - g[a][0]);
                    e[1] += w * (g[b][1] - g[a][1]);
                }
                e
            })
            .collect();
        let mut rhs = vec![0.0; n];
        for ((c, g), (e, &a)) in self
            .mesh
            .cells
            .iter()
            .zip(&self.grads)
            .zip(emf.iter().zip(&self.mesh.areas))
        {
            for i in 0..3 {
                rhs[c[i]] += self.sheet_conductance * a * (g[i][0] * e[0] + g[i][1] * e[1]);
            }
        }
        let mut v = match &self.factor {
            Factor::Direct(chol) => {
                let mut b = rhs.clone();
                b[0] = 0.0;
                chol.solve(&b)
            }
            Factor::Iterative => pcg(&self.matrix, &rhs, CG_TOLERANCE, 20 * n, true)?.0,
        };
        let mean = v.iter().sum::<f64>() / n as f64;
        v.iter_mut().for_each(|x| *x -= mean);

        let mut kv = vec![0.0; n];
        self.matrix.mul_vec(&v, &mut kv);
        let scale = norm(&rhs);
        let residual = kv
            .iter()
            .zip(&rhs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let solver_residual = if scale > 0.0 {
            residual / scale
        } else {
            residual
        };

        let sheet_current = self
            .mesh
            .cells
            .iter()
            .zip(&self.grads)
            .zip(&emf)
            .map(|((c, g), e)| {
                let mut gv = [0.0; 2];
                for i in 0..3 {
                    gv[0] += v[c[i]] * g[i][0];
                    gv[1] += v[c[i]] * g[i][1];
                }
                [
                    self.sheet_conductance * (e[0] - gv[0]),
                    self.sheet_conductance * (e[1] - gv[1]),
                ]
            })
            .collect();
        Ok(PotentialSolution {
            potential: v,
            sheet_current,
            solver_residual,
        })
    }

    /// Steady potential for spin ω about the disk center in the sampled
    /// axial field `b_z` (one value per node).
    pub fn solve(&self, b_z: &[f64], omega: f64) -> Result<PotentialSolution> {
        if b_z.len() != self.mesh.node_count() {
            return Err(Error::domain(format!(
                "expected {} field samples, got {}",
                self.mesh.node_count(),
                b_z.len()
            )));
        }
        if !omega.is_finite() {
            return Err(Error::domain("omega must be finite"));
        }
        let nodes = &self.mesh.nodes;
        // E = ω B_z ρ; exact line integral for B_z linear along the edge
        self.solve_with_edge_emf(|i, j| {
            let (p, q) = (nodes[i], nodes[j]);
            let du = 0.5 * ((q[0] * q[0] + q[1] * q[1]) - (p[0] * p[0] + p[1] * p[1]));
            let len2 = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
            omega * (0.5 * (b_z[i] + b_z[j]) * du + (b_z[j] - b_z[i]) * len2 / 12.0)
        })
    }

    /// Ohmic dissipation Σ |J|²/σ_s · A [W].
    pub fn joule_power(&self, sol: &PotentialSolution) -> f64 {
        sol.sheet_current
            .iter()
            .zip(&self.mesh.areas)
            .map(|(j, a)| (j[0] * j[0] + j[1] * j[1]) * a)
            .sum::<f64>()
            / self.sheet_conductance
    }
}

/// Samples B_z at the lab positions of the mesh nodes with the disk center
/// displaced by `offset` along x, at height `plane_z`.
pub fn sample_field(
    mesh: &DiskMesh,
    stack: &MagnetStack,
    offset: f64,
    plane_z: f64,
) -> Result<Vec<f64>> {
    mesh.nodes
        .par_iter()
        .map(|p| Ok(stack_field(stack, (offset + p[0]).hypot(p[1]), plane_z)?.b_z))
        .collect()
}

/// Midplane height of the levitated disk, h_V + H/2 above the stack top.
pub fn levitated_midplane(disk: &DiskSpec, stack: &MagnetStack) -> Result<f64> {
    let h_v = equilibrium_height(disk, stack, &VolumeQuadrature::default())?;
    Ok(stack.top_z() + h_v + 0.5 * disk.thickness)
}

/// One-shot solve: builds the system for `mesh` and returns potential and torque.
pub fn solve_potential(
    mesh: DiskMesh,
    b_z: &[f64],
    omega: f64,
    disk: &DiskSpec,
) -> Result<EddySolution> {
    let system = EddySystem::new(mesh, disk)?;
    let field = system.solve(b_z, omega)?;
    let (tau_z, damping_coefficient, gamma) = if omega == 0.0 {
        (0.0, f64::NAN, f64::NAN)
    } else {
        let d = torque_and_damping(system.mesh(), &field, b_z, omega, disk)?;
        (d.tau_z, d.damping_coefficient, d.gamma)
    };
    Ok(EddySolution {
        field,
        tau_z,
        damping_coefficient,
        gamma,
    })
}

/// Axial torque of the Lorentz force density (J_y B_z, −J_x B_z) about the
/// disk center, with the damping coefficient and rate it implies.
pub fn torque_and_damping(
    mesh: &DiskMesh,
    sol: &PotentialSolution,
    b_z: &[f64],
    omega: f64,
    disk: &DiskSpec,
) -> Result<Damping> {
    if omega == 0.0 || !omega.is_finite() {
        return Err(Error::domain("damping is undefined at omega = 0"));
    }
    let tau_z: f64 = (0..mesh.cell_count())
        .map(|c| {
            let [a, b, d] = mesh.cells[c];
            let bc = (b_z[a] + b_z[b] + b_z[d]) / 3.0;
            let rho = mesh.centroid(c);
            let j = sol.sheet_current[c];
            -bc * (rho[0] * j[0] + rho[1] * j[1]) * mesh.areas[c]
        })
        .sum();
    let damping_coefficient = tau_z.abs() / omega.abs();
    Ok(Damping {
        tau_z,
        damping_coefficient,
        gamma: damping_coefficient / disk.moment_of_inertia(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub c1: f64,
    pub c2: f64,
    pub r_squared: f64,
    /// Smallest and largest offset used [m].
    pub window: (f64, f64),
    pub points: usize,
}

impl PowerLawFit {
    pub fn eval(&self, d: f64) -> f64 {
        self.c1 * d.abs().powf(self.c2)
    }
}

/// Log–log least squares γ = c1·d^c2 over points with d ≥ `window_min`.
pub fn fit_power_law(offsets: &[f64], gammas: &[f64], window_min: f64) -> Result<PowerLawFit> {
    let pts: Vec<(f64, f64)> = offsets
        .iter()
        .zip(gammas)
        .filter(|(d, g)| **d >= window_min && **g > 0.0)
        .map(|(&d, &g)| (d, g))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Fit(format!(
            "power-law fit needs 3 points with d >= {window_min:e} m, got {}",
            pts.len()
        )));
    }
    let x: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let line = fit_line(&x, &y)?;
    let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.0).fold(0.0, f64::max);
    Ok(PowerLawFit {
        c1: line.intercept.exp(),
        c2: line.slope,
        r_squared: line.r_squared.clamp(0.0, 1.0),
        window: (lo, hi),
        points: pts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub offset: f64,
    pub gamma: f64,
    pub tau_z: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OffsetSweep {
    pub rows: Vec<SweepRow>,
    pub fit: PowerLawFit,
    pub plane_z: f64,
    pub omega: f64,
    pub nodes: usize,
}

/// Damping rate at each offset on one polar mesh, plus the power-law fit.
pub fn sweep_offset(
    disk: &DiskSpec,
    stack: &MagnetStack,
    offsets: &[f64],
    omega: f64,
    resolution: f64,
    plane_z: Option<f64>,
) -> Result<OffsetSweep> {
    if let Some(d) = offsets.iter().find(|d| !(**d > 0.0 && **d <= disk.radius)) {
        return Err(Error::domain(format!("offset {d:e} m outside (0, R]")));
    }
    let plane_z = match plane_z {
        Some(z) => z,
        None => levitated_midplane(disk, stack)?,
    };
    let mesh = build_disk_mesh(disk, resolution, MeshSymmetry::Polar)?;
    let system = EddySystem::new(mesh, disk)?;
    let rows: Vec<SweepRow> = offsets
        .par_iter()
        .map(|&d| {
            let b = sample_field(system.mesh(), stack, d, plane_z)?;
            let sol = system.solve(&b, omega)?;
            let damp = torque_and_damping(system.mesh(), &sol, &b, omega, disk)?;
            Ok(SweepRow {
                offset: d,
                gamma: damp.gamma,
                tau_z: damp.tau_z,
            })
        })
        .collect::<Result<_>>()?;
    let fit = fit_power_law(
        &rows.iter().map(|r| r.offset).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.gamma).collect::<Vec<_>>(),
        FIT_WINDOW_MIN,
    )?;
    Ok(OffsetSweep {
        rows,
        fit,
        plane_z,
        omega,
        nodes: system.mesh().node_count(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroCurrentReport {
    pub params: ResemblingFieldParams,
    pub omega: f64,
    pub radius: f64,
    pub thickness: f64,
    pub grid: usize,
    /// max over the grid of |−∇V + v×B| component magnitudes.
    pub max_current_over_sigma: f64,
    pub current_tolerance: f64,
    /// max |∇×(v×B)| from Richardson-extrapolated central differences.
    pub max_curl: f64,
    pub curl_tolerance: f64,
    pub passed: bool,
}

/// Checks that V = −ωβ r (z+z₀) sin(αr) cancels the motional EMF of the
/// analytic field everywhere on an (r, z) grid spanning the disk, and that
/// v×B is curl-free. Lengths share the field's units.
pub fn verify_zero_current(
    params: &ResemblingFieldParams,
    omega: f64,
    radius: f64,
    thickness: f64,
    grid: usize,
) -> Result<ZeroCurrentReport> {
    let ResemblingFieldParams { alpha, beta, z0 } = *params;
    let grid = grid.max(2);
    let at = |i: usize, n: usize, span: f64| span * i as f64 / (n - 1) as f64;
    let mut max_j: f64 = 0.0;
    for i in 0..=4 * grid {
        let r = at(i, 4 * grid + 1, radius);
        for k in 0..=4 * grid {
            let z = at(k, 4 * grid + 1, thickness);
            let b = resembling_field(params, r, z)?;
            let ar = alpha * r;
            let dv_dr = -omega * beta * (z + z0) * (ar.sin() + ar * ar.cos());
            let dv_dz = -omega * beta * r * ar.sin();
            // v×B with v = ωr φ̂ is ωr (B_z r̂ − B_r ẑ)
            let j_r = -dv_dr + omega * r * b.b_z;
            let j_z = -dv_dz - omega * r * b.b_r;
            max_j = max_j.max(j_r.abs()).max(j_z.abs());
        }
    }

    // (∇×F)_φ = ∂_z F_r − ∂_r F_z for F = v×B
    let f_r = |r: f64, z: f64| Ok::<f64, Error>(omega * r * resembling_field(params, r, z)?.b_z);
    let f_z = |r: f64, z: f64| Ok::<f64, Error>(-omega * r * resembling_field(params, r, z)?.b_r);
    let h = 1e-3 * radius.min(thickness);
    let curl = |r: f64, z: f64, h: f64| -> Result<f64> {
        Ok((f_r(r, z + h)? - f_r(r, z - h)?) / (2.0 * h)
            - (f_z(r + h, z)? - f_z(r - h, z)?) / (2.0 * h))
    };
    let mut max_curl: f64 = 0.0;
    for i in 0..grid {
        let r = radius * (i as f64 + 0.5) / grid as f64;
        for k in 0..grid {
            let z = thickness * (k as f64 + 0.5) / grid as f64;
            let c = (4.0 * curl(r, z, 0.5 * h)? - curl(r, z, h)?) / 3.0;
            max_curl = max_curl.max(c.abs());
        }
    }
    let current_tolerance = 1e-12 * (omega * beta * radius).abs();
    let curl_tolerance = 1e-8 * (omega * beta).abs();
    Ok(ZeroCurrentReport {
        params: *params,
        omega,
        radius,
        thickness,
        grid,
        max_current_over_sigma: max_j,
        current_tolerance,
        max_curl,
        curl_tolerance,
        passed: max_j <= current_tolerance && max_curl <= curl_tolerance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub resolution: f64,
    pub perturbed_nodes: usize,
    /// Spurious damping on the perturbed mesh at d = 0 [Hz].
    pub gamma_perturbed: f64,
    /// Same on the polar mesh of equal resolution [Hz].
    pub gamma_polar: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    pub seed: u64,
    pub amplitude: f64,
    pub omega: f64,
    pub plane_z: f64,
    pub monotone: bool,
}

fn centered_gamma(
    mesh: DiskMesh,
    disk: &DiskSpec,
    stack: &MagnetStack,
    omega: f64,
    plane_z: f64,
) -> Result<f64> {
    let system = EddySystem::new(mesh, disk)?;
    let b = sample_field(system.mesh(), stack, 0.0, plane_z)?;
    let sol = system.solve(&b, omega)?;
    Ok(torque_and_damping(system.mesh(), &sol, &b, omega, disk)?.gamma)
}

/// Spurious damping of the centered disk under mesh refinement.
pub fn mesh_convergence_study(
    disk: &DiskSpec,
    stack: &MagnetStack,
    resolutions: &[f64],
    seed: u64,
    amplitude: f64,
    omega: f64,
    plane_z: f64,
) -> Result<ConvergenceStudy> {
    let rows: Vec<ConvergenceRow> = resolutions
        .iter()
        .map(|&res| {
            let sym = MeshSymmetry::Perturbed { seed, amplitude };
            let perturbed = build_disk_mesh(disk, res, sym)?;
            let perturbed_nodes = perturbed.node_count();
            let gamma_perturbed = centered_gamma(perturbed, disk, stack, omega, plane_z)?;
            let polar = build_disk_mesh(disk, res, MeshSymmetry::Polar)?;
            let gamma_polar = centered_gamma(polar, disk, stack, omega, plane_z)?;
            Ok(ConvergenceRow {
                resolution: res,
                perturbed_nodes,
                gamma_perturbed,
                gamma_polar,
            })
        })
        .collect::<Result<_>>()?;
    let mut order: Vec<&ConvergenceRow> = rows.iter().collect();
    order.sort_by(|a, b| b.resolution.total_cmp(&a.resolution));
    let monotone = order
        .windows(2)
        .all(|w| w[1].gamma_perturbed <= w[0].gamma_perturbed);
    Ok(ConvergenceStudy {
        rows,
        seed,
        amplitude,
        omega,
        plane_z,
        monotone,
    })
}

/// Skin depth δ = √(2/(ω μ σ)).
pub fn skin_depth(sigma: f64, mu: f64, omega_ac: f64) -> Result<f64> {
    if !(sigma > 0.0 && mu > 0.0 && omega_ac > 0.0) || !(sigma * mu * omega_ac).is_finite() {
        return Err(Error::domain(
            "skin depth needs positive sigma, mu and omega",
        ));
    }
    Ok((2.0 / (omega_ac * mu * sigma)).sqrt())
}

/// Skin depth in vacuum permeability.
pub fn skin_depth_vacuum(sigma: f64, omega_ac: f64) -> Result<f64> {
    skin_depth(sigma, MU_0, omega_ac)
}

/// Default mesh resolution for a disk.
pub fn default_resolution(disk: &DiskSpec) -> f64 {
    disk.radius * DEFAULT_RESOLUTION_FRACTION
}

#[cfg(test)]
mod tests;
