use nalgebra::Matrix3;

use super::{SpinSpec, Vec3};
use crate::constants::{dipole_prefactor, nm_to_m, ELECTRON_GAMMA, HBAR, MIN_SEPARATION_NM, MU0_OVER_4PI};
use crate::error::{Error, Result};

fn separation(a: &Vec3, b: &Vec3, pair: &str) -> Result<(Vec3, f64)> {
    let d = b - a;
    let r = d.norm();
    if !(r > MIN_SEPARATION_NM) {
        return Err(Error::DegenerateGeometry {
            pair: pair.to_string(),
            separation_nm: r,
            min_nm: MIN_SEPARATION_NM,
        });
    }
    Ok((d, r))
}

/// Field tensor D with B_i = Σ_j D_ij S_j, in tesla per unit spin, for a
/// point dipole of gyromagnetic ratio `gamma_target` at `target_pos` seen
/// from `sensor_pos` (positions in nm).
pub fn dipole_field_tensor(target_pos: &Vec3, sensor_pos: &Vec3, gamma_target: f64) -> Result<Matrix3<f64>> {
    let (d, r) = separation(target_pos, sensor_pos, "target-sensor")?;
    let u = d / r;
    let r_m = nm_to_m(r);
    let scale = dipole_prefactor(gamma_target) / (r_m * r_m * r_m);
    Ok((3.0 * u * u.transpose() - Matrix3::identity()) * scale)
}

/// Variance ⟨B⊥²⟩ (T²) of the target's field transverse to the sensor's
/// quantization axis, for isotropic uncorrelated target spin components.
pub fn transverse_field_variance(target: &SpinSpec, sensor: &SpinSpec) -> Result<f64> {
    let d = dipole_field_tensor(&target.position, &sensor.position, target.gamma)?;
    let cov = d * d.transpose() * target.component_variance();
    let a = sensor.axis;
    Ok(cov.trace() - (a.transpose() * cov * a)[(0, 0)])
}

/// Secular dipolar coupling k_s between two spins sharing the sensor's
/// quantization axis, Hz.
pub fn dipolar_coupling(sensor: &SpinSpec, reporter: &SpinSpec) -> Result<f64> {
    let (d, r) = separation(&sensor.position, &reporter.position, "nv-reporter")?;
    Ok(coupling_at(&d, r, &sensor.axis, sensor.gamma, reporter.gamma))
}

fn coupling_at(d: &Vec3, r: f64, axis: &Vec3, g1: f64, g2: f64) -> f64 {
    let cos = d.dot(axis) / r;
    let r_m = nm_to_m(r);
    MU0_OVER_4PI * g1 * g2 * HBAR / (2.0 * std::f64::consts::PI) * (1.0 - 3.0 * cos * cos).abs()
        / (r_m * r_m * r_m)
}

/// Lateral position on the plane z = `surface_z` where a g = 2 reporter
/// couples most strongly to `nv`, and the coupling there (Hz).
///
/// A coarse grid over ±4 depths seeds a compass search that halves its step
/// down to 1e-9 nm.
pub fn max_coupling_surface_position(nv: &SpinSpec, surface_z: f64) -> Result<(Vec3, f64)> {
    let depth = surface_z - nv.position.z;
    if !(depth > MIN_SEPARATION_NM) {
        return Err(Error::invalid(
            "nv.depth",
            format!("NV must lie below the surface (depth {depth} nm)"),
        ));
    }
    let f = |x: f64, y: f64| {
        let p = Vec3::new(nv.position.x + x, nv.position.y + y, surface_z);
        let d = p - nv.position;
        coupling_at(&d, d.norm(), &nv.axis, nv.gamma, ELECTRON_GAMMA)
    };

    let half = 4.0 * depth;
    let n = 80;
    let step = 2.0 * half / n as f64;
    let (mut bx, mut by, mut best) = (0.0, 0.0, f(0.0, 0.0));
    for i in 0..=n {
        for j in 0..=n {
            let (x, y) = (-half + i as f64 * step, -half + j as f64 * step);
            let v = f(x, y);
            if v > best {
                (bx, by, best) = (x, y, v);
            }
        }
    }

    let mut h = step;
    while h > 1e-9 {
        let mut moved = false;
        for (dx, dy) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
            let (x, y) = (bx + dx, by + dy);
            if x.abs() > half || y.abs() > half {
                continue;
            }
            let v = f(x, y);
            if v > best {
                (bx, by, best) = (x, y, v);
                moved = true;
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    Ok((Vec3::new(nv.position.x + bx, nv.position.y + by, surface_z), best))
}
