use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levitation::DiskSpec;

/// Smallest azimuthal node count on polar meshes; keeps the polygon area
/// within 0.1% of πR².
pub const MIN_AZIMUTHAL: usize = 96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MeshSymmetry {
    /// Rings of equal node count, staggered by half a step per ring.
    Polar,
    /// Quasi-uniform rings with interior nodes moved by up to
    /// `amplitude × resolution` in a random direction.
    Perturbed { seed: u64, amplitude: f64 },
}

/// Triangulated disk midplane. Coordinates are relative to the disk center.
#[derive(Debug, Clone)]
pub struct DiskMesh {
    pub radius: f64,
    pub resolution: f64,
    pub symmetry: MeshSymmetry,
    pub nodes: Vec<[f64; 2]>,
    /// Counter-clockwise node triples.
    pub cells: Vec<[usize; 3]>,
    pub areas: Vec<f64>,
    /// Nodes per ring on polar meshes.
    pub azimuthal: Option<usize>,
}

impl DiskMesh {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn centroid(&self, cell: usize) -> [f64; 2] {
        let [a, b, c] = self.cells[cell];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        [(pa[0] + pb[0] + pc[0]) / 3.0, (pa[1] + pb[1] + pc[1]) / 3.0]
    }

    /// Node permutation realising a rotation by one azimuthal step, if the
    /// mesh has that symmetry.
    pub fn rotation_permutation(&self) -> Option<Vec<usize>> {
        let n_az = self.azimuthal?;
        let perm = (0..self.nodes.len())
            .map(|i| {
                if i == 0 {
                    0
                } else {
                    let ring = (i - 1) / n_az;
                    let k = (i - 1) % n_az;
                    1 + ring * n_az + (k + 1) % n_az
                }
            })
            .collect();
        Some(perm)
    }

    /// Unique undirected edges (i < j), sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .cells
            .iter()
            .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
            .map(|(i, j)| (i.min(j), i.max(j)))
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }
}

fn signed_area(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
}

/// One ring of nodes: first index, count, angular offset of node 0.
#[derive(Clone, Copy)]
struct Ring {
    start: usize,
    count: usize,
    phase: f64,
}

impl Ring {
    fn angle(&self, k: i64) -> f64 {
        self.phase + 2.0 * PI * k as f64 / self.count as f64
    }

    fn node(&self, k: i64) -> usize {
        self.start + k.rem_euclid(self.count as i64) as usize
    }
}

/// Triangulates the band between two rings by merging their angular order.
fn zip_rings(inner: Ring, outer: Ring, cells: &mut Vec<[usize; 3]>) {
    let a0 = inner.angle(0);
    let step = 2.0 * PI / outer.count as f64;
    // outer index whose angle is the last one not exceeding a0
    let mut kb = ((a0 - outer.phase) / step).floor() as i64;
    while outer.angle(kb + 1) <= a0 {
        kb += 1;
    }
    let (mut ia, mut ib) = (0i64, 0i64);
    let (p, q) = (inner.count as i64, outer.count as i64);
    while ia < p || ib < q {
        let advance_inner = if ia == p {
            false
        } else if ib == q {
            true
        } else {
            inner.angle(ia + 1) < outer.angle(kb + ib + 1)
        };
        if advance_inner {
            cells.push([inner.node(ia), inner.node(ia + 1), outer.node(kb + ib)]);
            ia += 1;
        } else {
            cells.push([inner.node(ia), outer.node(kb + ib + 1), outer.node(kb + ib)]);
            ib += 1;
        }
    }
}

fn assemble(rings: &[(f64, Ring)], nodes: &mut Vec<[f64; 2]>) -> Vec<[usize; 3]> {
    let mut cells = Vec::new();
    for &(radius, ring) in rings {
        for k in 0..ring.count as i64 {
            let t = ring.angle(k);
            nodes.push([radius * t.cos(), radius * t.sin()]);
        }
    }
    let first = rings[0].1;
    for k in 0..first.count as i64 {
        cells.push([0, first.node(k), first.node(k + 1)]);
    }
    for w in rings.windows(2) {
        zip_rings(w[0].1, w[1].1, &mut cells);
    }
    for c in cells.iter_mut() {
        if signed_area(nodes[c[0]], nodes[c[1]], nodes[c[2]]) < 0.0 {
            c.swap(1, 2);
        }
    }
    cells
}

/// Builds a disk mesh with nominal edge length `resolution`.
pub fn build_disk_mesh(
    disk: &DiskSpec,
    resolution: f64,
    symmetry: MeshSymmetry,
) -> Result<DiskMesh> {
    let radius = disk.radius;
    if !(resolution > 0.0 && resolution < radius / 4.0) {
        return Err(Error::Resolution(format!(
            "mesh resolution {resolution:e} m must lie in (0, R/4) with R = {radius:e} m"
        )));
    }
    let n_rings = (radius / resolution).round() as usize;
    let mut nodes = vec![[0.0, 0.0]];
    let mut rings = Vec::with_capacity(n_rings);
    let mut start = 1;
    let azimuthal = match symmetry {
        MeshSymmetry::Polar => {
            let by_length = (2.0 * PI * radius / resolution / 8.0).ceil() as usize * 8;
            let n_az = by_length.max(MIN_AZIMUTHAL);
            for i in 1..=n_rings {
                let phase = 0.5 * i as f64 * 2.0 * PI / n_az as f64;
                rings.push((
                    radius * i as f64 / n_rings as f64,
                    Ring {
                        start,
                        count: n_az,
                        phase,
                    },
                ));
                start += n_az;
            }
            Some(n_az)
        }
        MeshSymmetry::Perturbed { amplitude, .. } => {
            if !(0.0..0.5).contains(&amplitude) {
                return Err(Error::Resolution(format!(
                    "perturbation amplitude {amplitude} must lie in [0, 0.5)"
                )));
            }
            for i in 1..=n_rings {
                let count = 6 * i;
                rings.push((
                    radius * i as f64 / n_rings as f64,
                    Ring {
                        start,
                        count,
                        phase: 0.0,
                    },
                ));
                start += count;
            }
            None
        }
    };
    let cells = assemble(&rings, &mut nodes);

    if let MeshSymmetry::Perturbed { seed, amplitude } = symmetry {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let boundary_start = rings[n_rings - 1].1.start;
        for p in nodes.iter_mut().take(boundary_start) {
            let t: f64 = rng.random_range(0.0..2.0 * PI);
            let s: f64 = rng.random_range(0.0..=1.0);
            p[0] += amplitude * resolution * s * t.cos();
            p[1] += amplitude * resolution * s * t.sin();
        }
    }

    let areas: Vec<f64> = cells
        .iter()
        .map(|&[a, b, c]| signed_area(nodes[a], nodes[b], nodes[c]))
        .collect();
    if let Some(i) = areas.iter().position(|&a| !(a > 0.0)) {
        return Err(Error::Resolution(format!(
            "cell {i} is inverted or degenerate"
        )));
    }
    Ok(DiskMesh {
        radius,
        resolution,
        symmetry,
        nodes,
        cells,
        areas,
        azimuthal,
    })
}
