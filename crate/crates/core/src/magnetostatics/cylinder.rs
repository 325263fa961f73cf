use std::f64::consts::PI;

use super::elliptic::cel;
use super::{FieldVector, MagnetShape, MagnetSpec, EDGE_TOLERANCE};
use crate::error::{Error, Result};

/// Field of a uniformly, axially magnetized cylinder or ring at (r, z).
///
/// Uses the Derby–Olbert closed form in Bulirsch's `cel`. A ring is the
/// outer cylinder minus an inner cylinder with the same magnetization.
pub fn cylinder_field(spec: &MagnetSpec, r: f64, z: f64) -> Result<FieldVector> {
    if !(r >= 0.0) || !z.is_finite() || !r.is_finite() {
        return Err(Error::domain(format!(
            "field point must have finite r >= 0, got r = {r}"
        )));
    }
    let mut rims = vec![spec.outer_radius];
    if spec.shape == MagnetShape::Ring {
        rims.push(spec.inner_radius);
    }
    for &a in &rims {
        for &zf in &[spec.base_z, spec.top_z()] {
            if (r - a).hypot(z - zf) < EDGE_TOLERANCE {
                return Err(Error::EdgeSingularity { r, z });
            }
        }
    }
    let center = spec.base_z + 0.5 * spec.height;
    let half = 0.5 * spec.height;
    let scale = spec.polarity.sign() * spec.remanence;
    let mut b = solid(spec.outer_radius, half, r, z - center);
    if spec.shape == MagnetShape::Ring {
        let inner = solid(spec.inner_radius, half, r, z - center);
        b.b_r -= inner.b_r;
        b.b_z -= inner.b_z;
    }
    Ok(b * scale)
}

/// Unit-remanence solid cylinder of radius `a`, half height `b`, centred at z = 0.
fn solid(a: f64, b: f64, rho: f64, z: f64) -> FieldVector {
    let zp = z + b;
    let zm = z - b;
    let sum = a + rho;
    let diff = a - rho;
    let gamma = diff / sum;
    let g2 = gamma * gamma;

    let term = |zz: f64| {
        let den = (zz * zz + sum * sum).sqrt();
        let alpha = a / den;
        let beta = zz / den;
        let kc = ((zz * zz + diff * diff) / (zz * zz + sum * sum)).sqrt();
        let br = alpha * cel(kc, 1.0, 1.0, -1.0);
        let bz = beta * cel(kc, g2, 1.0, gamma);
        (br, bz)
    };
    let (brp, bzp) = term(zp);
    let (brm, bzm) = term(zm);
    let b0 = 1.0 / PI;
    FieldVector {
        b_r: b0 * (brp - brm),
        b_z: b0 * a / sum * (bzp - bzm),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::magnetostatics::Polarity;

    fn on_axis(spec: &MagnetSpec, z: f64) -> f64 {
        let a = spec.outer_radius;
        let f = |a: f64| {
            let lo = z - spec.base_z;
            let hi = z - spec.top_z();
            lo / (lo * lo + a * a).sqrt() - hi / (hi * hi + a * a).sqrt()
        };
        let mut v = f(a);
        if spec.inner_radius > 0.0 {
            v -= f(spec.inner_radius);
        }
        0.5 * spec.polarity.sign() * spec.remanence * v
    }

    #[test]
    fn on_axis_closed_form() {
        let cyl = MagnetSpec::cylinder(4e-3, 10e-3, -10e-3, 1.48, Polarity::Up).unwrap();
        let z = 1e-3;
        let b = cylinder_field(&cyl, 0.0, z).unwrap();
        let want = on_axis(&cyl, z);
        assert_eq!(b.b_r, 0.0);
        assert!(
            (b.b_z - want).abs() <= 1e-10 * want.abs(),
            "{} vs {}",
            b.b_z,
            want
        );

        let ring = MagnetSpec::ring(9.5e-3, 4.05e-3, 4e-3, -4e-3, 1.3, Polarity::Down).unwrap();
        for &z in &[-20e-3, -2e-3, 0.5e-3, 3e-3, 40e-3] {
            let b = cylinder_field(&ring, 0.0, z).unwrap();
            let want = on_axis(&ring, z);
            assert!((b.b_z - want).abs() <= 1e-10 * want.abs(), "z = {z}");
            assert_eq!(b.b_r, 0.0);
        }
    }

    #[test]
    fn far_field_is_dipolar() {
        let cyl = MagnetSpec::cylinder(4e-3, 10e-3, -5e-3, 1.48, Polarity::Up).unwrap();
        let m = cyl.dipole_moment();
        let dist = 20.0 * cyl.outer_radius;
        for &theta in &[0.0f64, 0.4, 1.0, std::f64::consts::FRAC_PI_2] {
            let (r, z) = (dist * theta.sin(), dist * theta.cos());
            let b = cylinder_field(&cyl, r, z).unwrap();
            // B = μ0 m / (4π d³) (2cosθ r̂_sph + sinθ θ̂)
            let k = crate::constants::MU_0 * m / (4.0 * PI * dist.powi(3));
            let br_sph = 2.0 * k * theta.cos();
            let bt = k * theta.sin();
            let want_r = br_sph * theta.sin() + bt * theta.cos();
            let want_z = br_sph * theta.cos() - bt * theta.sin();
            let want = want_r.hypot(want_z);
            assert!((b.norm() - want).abs() < 0.02 * want, "theta = {theta}");
        }
    }

    #[test]
    fn rejects_rim_and_negative_radius() {
        let cyl = MagnetSpec::cylinder(4e-3, 10e-3, -10e-3, 1.48, Polarity::Up).unwrap();
        assert!(matches!(
            cylinder_field(&cyl, 4e-3, 0.0),
            Err(Error::EdgeSingularity { .. })
        ));
        assert!(matches!(
            cylinder_field(&cyl, 4e-3 + 5e-10, -10e-3),
            Err(Error::EdgeSingularity { .. })
        ));
        assert!(matches!(
            cylinder_field(&cyl, -1e-3, 0.0),
            Err(Error::Domain(_))
        ));
        let ring = MagnetSpec::ring(9.5e-3, 4.05e-3, 4e-3, -4e-3, 1.3, Polarity::Down).unwrap();
        assert!(cylinder_field(&ring, 4.05e-3, 0.0).is_err());
        // on the mantle but away from the rims is fine
        assert!(cylinder_field(&cyl, 4e-3, -5e-3).unwrap().b_z.is_finite());
    }

    #[test]
    fn mirror_symmetry_about_center_plane() {
        let cyl = MagnetSpec::cylinder(3e-3, 4e-3, 1e-3, 1.2, Polarity::Down).unwrap();
        let zc = 3e-3;
        for &(r, dz) in &[(1e-3, 3e-3), (5e-3, 0.5e-3), (2.5e-3, 7e-3)] {
            let a = cylinder_field(&cyl, r, zc + dz).unwrap();
            let b = cylinder_field(&cyl, r, zc - dz).unwrap();
            assert!((a.b_r + b.b_r).abs() < 1e-13);
            assert!((a.b_z - b.b_z).abs() < 1e-13);
        }
    }
}
