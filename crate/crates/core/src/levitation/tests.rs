use super::*;
use crate::magnetostatics::MagnetStack;

fn setup() -> (DiskSpec, MagnetStack, VolumeQuadrature) {
    (
        DiskSpec::reference(),
        MagnetStack::reference(),
        VolumeQuadrature::default(),
    )
}

#[test]
fn zero_susceptibility_has_no_energy() {
    let (mut disk, stack, q) = setup();
    disk.chi_parallel = 0.0;
    disk.chi_perp = 0.0;
    assert_eq!(
        magnetic_energy(&disk, &stack, Pose::new(0.0, 0.8e-3), &q).unwrap(),
        0.0
    );
    assert_eq!(
        magnetic_energy(&disk, &stack, Pose::new(0.3e-3, 0.8e-3), &q).unwrap(),
        0.0
    );
}

#[test]
fn energy_is_even_in_offset() {
    let (disk, stack, q) = setup();
    for &d in &[0.1e-3, 0.5e-3, 1.3e-3] {
        let a = magnetic_energy(&disk, &stack, Pose::new(d, 0.83e-3), &q).unwrap();
        let b = magnetic_energy(&disk, &stack, Pose::new(-d, 0.83e-3), &q).unwrap();
        assert!((a - b).abs() <= 1e-13 * a.abs(), "{a} vs {b}");
    }
}

#[test]
fn energy_converged_against_finer_quadrature() {
    let (disk, stack, q) = setup();
    let pose = Pose::new(0.0, 0.83e-3);
    let coarse = magnetic_energy(&disk, &stack, pose, &q).unwrap();
    let fine = magnetic_energy(&disk, &stack, pose, &q.refined(4)).unwrap();
    assert!(((coarse - fine) / fine).abs() <= 1e-4, "{coarse} vs {fine}");
    let coarse3 = magnetic_energy_3d(&disk, &stack, pose, &q).unwrap();
    assert!(((coarse3 - coarse) / coarse).abs() <= 1e-12);
}

#[test]
fn geometry_errors() {
    let (disk, stack, q) = setup();
    assert!(matches!(
        magnetic_energy(&disk, &stack, Pose::new(0.0, -0.1e-3), &q),
        Err(Error::Geometry(_))
    ));
    assert!(vertical_force(&disk, &stack, Pose::new(0.0, 0.0), &q).is_err());
    // far outside the stack footprint the disk may sit below the top face
    assert!(magnetic_energy(&disk, &stack, Pose::new(20e-3, -3e-3), &q).is_ok());
}

#[test]
fn heavier_disk_sits_lower() {
    let (disk, stack, q) = setup();
    let h1 = equilibrium_height(&disk, &stack, &q).unwrap();
    let heavy = DiskSpec {
        mass: 2.0 * disk.mass,
        ..disk
    };
    let h2 = equilibrium_height(&heavy, &stack, &q).unwrap();
    assert!(h2 < h1, "{h2} !< {h1}");
}

/// Lift by volume quadrature of −∂u/∂z, with ∂_z B from Richardson-extrapolated
/// central differences on a quadrature grid unrelated to the face integrals.
fn force_oracle(disk: &DiskSpec, stack: &MagnetStack, gap: f64) -> f64 {
    use crate::constants::MU_0;
    use crate::magnetostatics::stack_field;
    use crate::numerics::GaussLegendre;
    let gr = GaussLegendre::new(60);
    let gz = GaussLegendre::new(20);
    let bottom = stack.top_z() + gap;
    let u = |r: f64, z: f64| {
        let b = stack_field(stack, r, z).unwrap();
        (disk.chi_parallel * b.b_r * b.b_r + disk.chi_perp * b.b_z * b.b_z) / (2.0 * MU_0)
    };
    let du = |r: f64, z: f64| {
        let d = |h: f64| (u(r, z + h) - u(r, z - h)) / (2.0 * h);
        let h = 1e-6;
        (4.0 * d(0.5 * h) - d(h)) / 3.0
    };
    let mut f = 0.0;
    for (r, wr) in gr.on(0.0, disk.radius) {
        for (z, wz) in gz.on(bottom, bottom + disk.thickness) {
            f -= wr * wz * 2.0 * PI * r * du(r, z);
        }
    }
    f
}

#[test]
fn equilibrium_balances_weight_for_weaker_disk() {
    let (disk, stack, q) = setup();
    let weak = DiskSpec {
        chi_parallel: 0.5 * disk.chi_parallel,
        chi_perp: 0.5 * disk.chi_perp,
        ..disk
    };
    let h = equilibrium_height(&weak, &stack, &q).unwrap();
    let f = force_oracle(&weak, &stack, h);
    let mg = weak.weight();
    assert!((f - mg).abs() <= 1e-6 * mg, "F = {f:e}, Mg = {mg:e}");
}

#[test]
fn no_levitation_for_negligible_susceptibility() {
    let (disk, stack, q) = setup();
    let weak = DiskSpec {
        chi_parallel: 1e-9,
        chi_perp: 1e-9,
        ..disk
    };
    assert!(matches!(
        equilibrium_height(&weak, &stack, &q),
        Err(Error::NoLevitation(_))
    ));
}

#[test]
fn forces_match_energy_gradients() {
    use rand::{Rng, SeedableRng};
    let (disk, stack, q) = setup();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let d: f64 = rng.random_range(-1.0e-3..1.0e-3);
        let h: f64 = rng.random_range(0.4e-3..2.0e-3);
        let e = |d: f64, h: f64| magnetic_energy_3d(&disk, &stack, Pose::new(d, h), &q).unwrap();
        let step = 1e-6;
        let fd_z = -(e(d, h + step) - e(d, h - step)) / (2.0 * step);
        let fd_x = -(e(d + step, h) - e(d - step, h)) / (2.0 * step);
        let fz = vertical_force(&disk, &stack, Pose::new(d, h), &q).unwrap();
        let fx = lateral_force(&disk, &stack, Pose::new(d, h), &q).unwrap();
        assert!(
            (fz - fd_z).abs() <= 1e-4 * fz.abs(),
            "Fz {fz:e} vs {fd_z:e}"
        );
        let scale = fx.abs().max(1e-4 * fz.abs());
        assert!(
            (fx - fd_x).abs() <= 1e-4 * scale,
            "Fx {fx:e} vs {fd_x:e} at d = {d:e}"
        );
    }
    let f0 = lateral_force(&disk, &stack, Pose::new(0.0, 0.85e-3), &q).unwrap();
    assert!(f0.abs() < 1e-15, "{f0:e}");
}

#[test]
fn field_scaling_scales_curvature_quadratically() {
    let (disk, stack, q) = setup();
    let h = 0.85e-3;
    let base = trap_frequencies(&disk, &stack, h, &q).unwrap();
    let s = 1.3;
    let scaled = trap_frequencies(&disk, &stack.scaled(s).unwrap(), h, &q).unwrap();
    let rv = scaled.curvature_vertical / base.curvature_vertical;
    let rl = scaled.curvature_lateral / base.curvature_lateral;
    assert!((rv - s * s).abs() < 1e-6, "{rv}");
    assert!((rl - s * s).abs() < 1e-6, "{rl}");
}

#[test]
fn curvature_matches_parabola_fit() {
    let (disk, stack, q) = setup();
    let h_v = equilibrium_height(&disk, &stack, &q).unwrap();
    let sol = trap_frequencies(&disk, &stack, h_v, &q).unwrap();
    // least-squares quadratic through 5 samples; the coefficient of x² is k/2
    let fit = |xs: &[f64], ys: &[f64]| {
        let n = xs.len() as f64;
        let s = |p: i32| xs.iter().map(|x| x.powi(p)).sum::<f64>();
        let t = |p: i32| xs.iter().zip(ys).map(|(x, y)| x.powi(p) * y).sum::<f64>();
        let a = vec![
            vec![n, s(1), s(2)],
            vec![s(1), s(2), s(3)],
            vec![s(2), s(3), s(4)],
        ];
        crate::numerics::lm::solve_dense(a, vec![t(0), t(1), t(2)]).unwrap()[2] * 2.0
    };
    let step = 2e-5;
    let xs: Vec<f64> = (-2..=2).map(|i| i as f64 * step).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|x| magnetic_energy(&disk, &stack, Pose::new(0.0, h_v + x), &q).unwrap())
        .collect();
    let kv = fit(&xs, &ys);
    assert!(
        ((kv - sol.curvature_vertical) / kv).abs() < 5e-3,
        "{kv} vs {}",
        sol.curvature_vertical
    );
    let xs: Vec<f64> = (-2..=2).map(|i| i as f64 * 1e-4).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|x| magnetic_energy_3d(&disk, &stack, Pose::new(*x, h_v), &q).unwrap())
        .collect();
    let kl = fit(&xs, &ys);
    assert!(
        ((kl - sol.curvature_lateral) / kl).abs() < 5e-3,
        "{kl} vs {}",
        sol.curvature_lateral
    );
}

#[test]
fn tilt_relation() {
    let w = 2.0 * PI * 6.0;
    assert_eq!(tilt_to_displacement(0.0, w).offset, 0.0);
    let t = tilt_to_displacement(0.1f64.to_radians(), w);
    assert!((t.offset - 1.205e-5).abs() < 0.001e-5, "{}", t.offset);
    assert!(!t.small_angle_warning);
    let a = tilt_to_displacement(0.02, w).offset;
    let b = tilt_to_displacement(0.04, w).offset;
    assert!((b - 2.0 * a).abs() < 1e-20);
    assert!(tilt_to_displacement(0.2, w).small_angle_warning);
}

#[test]
fn disk_validation() {
    let mut d = DiskSpec::reference();
    assert!(d.validate().is_ok());
    assert!((d.moment_of_inertia() - 2.397e-9).abs() < 1e-12);
    d.thickness = 6e-3;
    assert!(d.validate().is_err());
}
