//! Axisymmetric Stokes swirl flow around a disk spinning above a wall.
//!
//! With Ω = u_φ/r the swirl equation becomes ∂_r(r³∂_rΩ) + r³∂_zzΩ = 0,
//! whose weak form ∫ r³|∇Ω|² dr dz is discretized as a sum of edge
//! conductances on a stretched tensor grid.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::GasSpec;
use crate::error::{Error, Result};
use crate::levitation::DiskSpec;
use crate::numerics::sparse::{EnvelopeCholesky, TripletBuilder};

/// Minimum number of cells across the gap below the disk.
pub const MIN_GAP_CELLS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwirlOptions {
    /// Cells across the gap below the disk on the base grid.
    pub gap_cells: usize,
    /// Geometric growth ratio of cells away from the disk.
    pub growth: f64,
    /// Outer radius and height above the disk in units of R.
    pub domain_factor: f64,
    /// Every base cell is split into this many cells.
    pub refine: usize,
}

impl Default for SwirlOptions {
    fn default() -> Self {
        Self {
            gap_cells: 12,
            growth: 1.1,
            domain_factor: 6.0,
            refine: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SwirlSolution {
    pub r: Vec<f64>,
    pub z: Vec<f64>,
    /// u_φ at node (i, k) stored at `k * r.len() + i` [m/s].
    pub u_phi: Vec<f64>,
    pub omega: f64,
    /// Torque of the gas on the disk [N·m]; opposite in sign to ω.
    pub torque: f64,
    pub torque_parts: SurfaceTorque,
    /// Viscous dissipation [W].
    pub dissipation: f64,
    pub gamma_c: f64,
}

/// Torque split by the disk surface it acts on. Radial edges at the face
/// rows count toward the rim.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceTorque {
    pub bottom: f64,
    pub top: f64,
    pub rim: f64,
}

impl SwirlSolution {
    pub fn u_at(&self, i: usize, k: usize) -> f64 {
        self.u_phi[k * self.r.len() + i]
    }
}

/// Uniform cells of width `step` over [a, b] (rounded to fit).
fn uniform(a: f64, b: f64, step: f64) -> Vec<f64> {
    let n = ((b - a) / step).round().max(1.0) as usize;
    (1..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

/// Cells growing geometrically from `first` by `ratio` until `b` is reached;
/// the last cell is merged if it would be too thin.
fn graded(a: f64, b: f64, first: f64, ratio: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut x = a;
    let mut dx = first;
    while x + dx < b {
        x += dx;
        out.push(x);
        dx *= ratio;
    }
    if let Some(last) = out.last().copied() {
        if b - last < 0.5 * dx / ratio {
            out.pop();
        }
    }
    out.push(b);
    out
}

fn subdivide(base: &[f64], parts: usize) -> Vec<f64> {
    let mut out = vec![base[0]];
    for w in base.windows(2) {
        for j in 1..=parts {
            out.push(w[0] + (w[1] - w[0]) * j as f64 / parts as f64);
        }
    }
    out
}

/// Grid lines with the disk faces and rim on nodes.
pub fn swirl_grid(disk: &DiskSpec, gap: f64, opts: &SwirlOptions) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(gap > 0.0) {
        return Err(Error::Geometry(format!(
            "levitation gap must be positive, got {gap:e}"
        )));
    }
    if opts.gap_cells < MIN_GAP_CELLS || opts.refine == 0 {
        return Err(Error::Resolution(format!(
            "swirl grid needs at least {MIN_GAP_CELLS} cells across the gap"
        )));
    }
    if !(opts.growth >= 1.0 && opts.growth <= 1.5) || !(opts.domain_factor >= 5.0) {
        return Err(Error::Resolution(
            "growth must lie in [1, 1.5] and domain factor be >= 5".into(),
        ));
    }
    let step = gap / opts.gap_cells as f64;
    let (radius, top) = (disk.radius, gap + disk.thickness);
    let outer = opts.domain_factor * radius;

    let mut r = vec![0.0];
    r.extend(uniform(0.0, radius, step));
    r.extend(graded(radius, outer, step, opts.growth));
    let mut z = vec![0.0];
    z.extend(uniform(0.0, gap, step));
    z.extend(uniform(gap, top, step));
    z.extend(graded(top, top + outer, step, opts.growth));
    Ok((subdivide(&r, opts.refine), subdivide(&z, opts.refine)))
}

fn dual_bounds(x: &[f64], i: usize) -> (f64, f64) {
    let lo = if i == 0 {
        x[0]
    } else {
        0.5 * (x[i - 1] + x[i])
    };
    let hi = if i + 1 == x.len() {
        x[i]
    } else {
        0.5 * (x[i] + x[i + 1])
    };
    (lo, hi)
}

/// Two (i, k) cells and the conductance between them.
type Edge = ((usize, usize), (usize, usize), f64);

/// Solves for the swirl field with the disk bottom `gap` above the wall.
pub fn swirl_flow_solve(
    disk: &DiskSpec,
    gap: f64,
    gas: &GasSpec,
    omega: f64,
    opts: &SwirlOptions,
) -> Result<SwirlSolution> {
    disk.validate()?;
    gas.validate()?;
    if !omega.is_finite() {
        return Err(Error::domain("omega must be finite"));
    }
    let (r, z) = swirl_grid(disk, gap, opts)?;
    let (nr, nz) = (r.len(), z.len());
    let tol = 1e-9 * disk.radius;
    let in_disk = |i: usize, k: usize| {
        r[i] <= disk.radius + tol && z[k] >= gap - tol && z[k] <= gap + disk.thickness + tol
    };
    // Dirichlet values: wall Ω = 0, disk Ω = ω
    let fixed = |i: usize, k: usize| -> Option<f64> {
        if k == 0 {
            Some(0.0)
        } else if in_disk(i, k) {
            Some(omega)
        } else {
            None
        }
    };

    // order unknowns with the shorter axis fastest to keep the envelope narrow
    let r_fast = nr <= nz;
    let mut index = vec![usize::MAX; nr * nz];
    let mut count = 0;
    let (outer_n, inner_n) = if r_fast { (nz, nr) } else { (nr, nz) };
    for a in 0..outer_n {
        for b in 0..inner_n {
            let (i, k) = if r_fast { (b, a) } else { (a, b) };
            if fixed(i, k).is_none() {
                index[k * nr + i] = count;
                count += 1;
            }
        }
    }

    let wr: Vec<f64> = (0..nr)
        .map(|i| {
            let (lo, hi) = dual_bounds(&r, i);
            (hi.powi(4) - lo.powi(4)) / 4.0
        })
        .collect();
    let lz: Vec<f64> = (0..nz)
        .map(|k| {
            let (lo, hi) = dual_bounds(&z, k);
            hi - lo
        })
        .collect();
    let mut edges: Vec<Edge> = Vec::new();
    for k in 0..nz {
        for i in 0..nr {
            if i + 1 < nr {
                let dr = r[i + 1] - r[i];
                let mean_r3 = (r[i + 1].powi(4) - r[i].powi(4)) / (4.0 * dr);
                edges.push(((i, k), (i + 1, k), mean_r3 * lz[k] / dr));
            }
            if k + 1 < nz {
                edges.push(((i, k), (i, k + 1), wr[i] / (z[k + 1] - z[k])));
            }
        }
    }

    let mut builder = TripletBuilder::new(count);
    let mut rhs = vec![0.0; count];
    for &((ia, ka), (ib, kb), c) in &edges {
        let (a, b) = (index[ka * nr + ia], index[kb * nr + ib]);
        match (fixed(ia, ka), fixed(ib, kb)) {
            (None, None) => {
                builder.add(a, a, c);
                builder.add(b, b, c);
                builder.add(a, b, -c);
                builder.add(b, a, -c);
            }
            (None, Some(v)) => {
                builder.add(a, a, c);
                rhs[a] += c * v;
            }
            (Some(v), None) => {
                builder.add(b, b, c);
                rhs[b] += c * v;
            }
            (Some(_), Some(_)) => {}
        }
    }
    let matrix = builder.build();
    let chol = EnvelopeCholesky::factor(&matrix)?;
    let sol = chol.solve(&rhs);

    let mut omega_field = vec![0.0; nr * nz];
    for k in 0..nz {
        for i in 0..nr {
            omega_field[k * nr + i] = match fixed(i, k) {
                Some(v) => v,
                None => sol[index[k * nr + i]],
            };
        }
    }
    let mut quad = 0.0;
    // angular momentum flux out of the disk through bottom, top and rim edges
    let mut flux = [0.0; 3];
    for &((ia, ka), (ib, kb), c) in &edges {
        let (wa, wb) = (omega_field[ka * nr + ia], omega_field[kb * nr + ib]);
        quad += c * (wa - wb) * (wa - wb);
        let f = match (in_disk(ia, ka) && ka > 0, in_disk(ib, kb) && kb > 0) {
            (true, false) => c * (wa - wb),
            (false, true) => c * (wb - wa),
            _ => continue,
        };
        let face = if ka == kb {
            2
        } else if z[ka.min(kb)] < gap - tol {
            0
        } else {
            1
        };
        flux[face] += f;
    }
    let scale = -2.0 * PI * gas.viscosity;
    let torque_parts = SurfaceTorque {
        bottom: scale * flux[0],
        top: scale * flux[1],
        rim: scale * flux[2],
    };
    let torque = scale * flux.iter().sum::<f64>();
    let dissipation = 2.0 * PI * gas.viscosity * quad;
    let u_phi = (0..nr * nz).map(|n| r[n % nr] * omega_field[n]).collect();
    let gamma_c = if omega == 0.0 {
        0.0
    } else {
        -torque / (omega * disk.moment_of_inertia())
    };
    Ok(SwirlSolution {
        r,
        z,
        u_phi,
        omega,
        torque,
        torque_parts,
        dissipation,
        gamma_c,
    })
}

/// Gap-Couette estimate π μ R⁴/(2 h I) of the continuum damping rate.
pub fn couette_gap_gamma(disk: &DiskSpec, gap: f64, gas: &GasSpec) -> f64 {
    PI * gas.viscosity * disk.radius.powi(4) / (2.0 * gap * disk.moment_of_inertia())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (DiskSpec, GasSpec) {
        (DiskSpec::reference(), GasSpec::air(1e5))
    }

    const GAP: f64 = 0.83e-3;

    #[test]
    fn grid_has_disk_on_nodes_and_enough_gap_cells() {
        let (disk, _) = setup();
        let (r, z) = swirl_grid(&disk, GAP, &SwirlOptions::default()).unwrap();
        assert!(r.iter().any(|&x| (x - disk.radius).abs() < 1e-15));
        assert!(z.iter().any(|&x| (x - GAP).abs() < 1e-15));
        assert!(z.iter().any(|&x| (x - GAP - disk.thickness).abs() < 1e-15));
        assert!(z.iter().filter(|&&x| x > 0.0 && x <= GAP + 1e-15).count() >= 12);
        assert!(*r.last().unwrap() >= 5.0 * disk.radius);
        assert!(*z.last().unwrap() - GAP - disk.thickness >= 5.0 * disk.radius - 1e-12);
        let coarse = SwirlOptions {
            gap_cells: 6,
            ..SwirlOptions::default()
        };
        assert!(matches!(
            swirl_grid(&disk, GAP, &coarse),
            Err(Error::Resolution(_))
        ));
    }

    #[test]
    fn boundary_values_and_maximum_principle() {
        let (disk, gas) = setup();
        let w = 2.0 * PI;
        let s = swirl_flow_solve(&disk, GAP, &gas, w, &SwirlOptions::default()).unwrap();
        for i in 0..s.r.len() {
            assert_eq!(s.u_at(i, 0), 0.0);
        }
        for (k, &z) in s.z.iter().enumerate() {
            if (z - GAP).abs() < 1e-12 {
                for (i, &r) in s.r.iter().enumerate().filter(|(_, &r)| r <= disk.radius) {
                    assert!((s.u_at(i, k) - w * r).abs() <= 1e-15 * w * disk.radius);
                }
            }
        }
        let cap = w * disk.radius * (1.0 + 1e-12);
        assert!(s.u_phi.iter().all(|&u| (0.0..=cap).contains(&u)));
        assert!(s.torque * w < 0.0);
    }

    #[test]
    fn dissipation_matches_torque_power() {
        let (disk, gas) = setup();
        let w = 3.0;
        let s = swirl_flow_solve(&disk, GAP, &gas, w, &SwirlOptions::default()).unwrap();
        assert!(((s.dissipation - (s.torque * w).abs()) / s.dissipation).abs() < 0.02);
    }

    #[test]
    fn linear_in_viscosity_and_speed() {
        let (disk, gas) = setup();
        let opts = SwirlOptions::default();
        let a = swirl_flow_solve(&disk, GAP, &gas, 2.0, &opts).unwrap();
        let thick = GasSpec {
            viscosity: 2.0 * gas.viscosity,
            ..gas
        };
        let b = swirl_flow_solve(&disk, GAP, &thick, 2.0, &opts).unwrap();
        assert!((b.torque / a.torque - 2.0).abs() < 1e-12);
        let c = swirl_flow_solve(&disk, GAP, &gas, 6.0, &opts).unwrap();
        assert!((c.torque / a.torque - 3.0).abs() < 1e-9);
        assert!((c.gamma_c / a.gamma_c - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gap_term_tracks_couette_oracle_and_grid_converges() {
        let (disk, gas) = setup();
        let oracle = couette_gap_gamma(&disk, GAP, &gas);
        assert!((oracle - 9.1e-3).abs() < 0.1e-3, "{oracle:e}");
        let base = swirl_flow_solve(&disk, GAP, &gas, 1.0, &SwirlOptions::default()).unwrap();
        let fine = swirl_flow_solve(
            &disk,
            GAP,
            &gas,
            1.0,
            &SwirlOptions {
                refine: 2,
                ..SwirlOptions::default()
            },
        )
        .unwrap();
        let bottom = -base.torque_parts.bottom / disk.moment_of_inertia();
        // fringing at the rim adds to the plane-gap value
        assert!(
            bottom > oracle && bottom < 1.25 * oracle,
            "{}",
            bottom / oracle
        );
        assert!(base.gamma_c > oracle);
        let p = base.torque_parts;
        assert!((p.bottom + p.top + p.rim - base.torque).abs() < 1e-12 * base.torque.abs());
        let change = ((fine.torque - base.torque) / fine.torque).abs();
        assert!(change < 0.02, "{change}");
    }

    #[test]
    fn thin_disk_far_from_wall_matches_unbounded_result() {
        // T = (32/3) μ R³ ω for a flat disk in unbounded fluid
        let gas = GasSpec::air(1e5);
        let disk = DiskSpec {
            thickness: 0.05e-3,
            ..DiskSpec::reference()
        };
        let opts = SwirlOptions {
            gap_cells: 200,
            growth: 1.1,
            domain_factor: 8.0,
            refine: 1,
        };
        let s = swirl_flow_solve(&disk, 25e-3, &gas, 1.0, &opts).unwrap();
        let ratio = -s.torque / (32.0 / 3.0 * gas.viscosity * disk.radius.powi(3));
        assert!((ratio - 1.0).abs() < 0.08, "{ratio}");
    }

    #[test]
    fn discrete_operator_annihilates_rotlet() {
        // Ω = (r² + z²)^(-3/2) solves the swirl equation; the residual of
        // the edge form at interior nodes off the axis vanishes at second order
        let residual = |n: usize| {
            let r: Vec<f64> = (0..=n).map(|i| 1.0 * i as f64 / n as f64).collect();
            let z: Vec<f64> = (0..=n).map(|k| 1.0 + 1.0 * k as f64 / n as f64).collect();
            let om = |i: usize, k: usize| (r[i] * r[i] + z[k] * z[k]).powf(-1.5);
            let mut worst: f64 = 0.0;
            for k in 1..n {
                for i in (n / 4)..n {
                    let mut res = 0.0;
                    let (lo, hi) = (0.5 * (r[i - 1] + r[i]), 0.5 * (r[i] + r[i + 1]));
                    let wr = (hi.powi(4) - lo.powi(4)) / 4.0;
                    let lz = 0.5 * (z[k + 1] - z[k - 1]);
                    for (j, dr) in [(i - 1, r[i] - r[i - 1]), (i + 1, r[i + 1] - r[i])] {
                        let (a, b) = (r[i].min(r[j]), r[i].max(r[j]));
                        let c = (b.powi(4) - a.powi(4)) / (4.0 * dr) * lz / dr;
                        res += c * (om(j, k) - om(i, k));
                    }
                    for (j, dz) in [(k - 1, z[k] - z[k - 1]), (k + 1, z[k + 1] - z[k])] {
                        res += wr / dz * (om(i, j) - om(i, k));
                    }
                    // normalize by the control-volume weight
                    worst = worst.max((res / (wr * lz)).abs());
                }
            }
            worst
        };
        let (a, b) = (residual(20), residual(40));
        assert!(a / b > 3.0, "{a:e} {b:e}");
    }
}
