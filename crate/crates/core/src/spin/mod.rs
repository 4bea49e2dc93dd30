//! Spin descriptions, dipolar field geometry and closed-form relaxation rates.

mod dipole;
mod rates;

pub use dipole::{
    dipolar_coupling, dipole_field_tensor, max_coupling_surface_position, transverse_field_variance,
};
pub use rates::{induced_rate, lorentzian_weight, relaxation_rate_lorentzian, stochastic_drive_rate};

use serde::{Deserialize, Serialize};

use crate::constants::{
    hz_to_angular, ELECTRON_GAMMA, GD_SPIN, GD_TAU_C, NV_ZERO_FIELD_SPLITTING_HZ,
};
use crate::error::{Error, Result};

/// Position in nm, or a dimensionless direction.
pub type Vec3 = nalgebra::Vector3<f64>;

/// Normalise `v`, rejecting zero and non-finite vectors.
pub fn unit_axis(v: Vec3, path: &str) -> Result<Vec3> {
    if !v.iter().all(|c| c.is_finite()) {
        return Err(Error::invalid(path, "axis has non-finite components"));
    }
    let n = v.norm();
    if n < 1e-12 {
        return Err(Error::invalid(path, "zero-length axis"));
    }
    Ok(v / n)
}

/// Axis at polar angle `polar` (from +z) and azimuth `azimuth`, radians.
pub fn axis_from_angles(polar: f64, azimuth: f64) -> Vec3 {
    Vec3::new(
        polar.sin() * azimuth.cos(),
        polar.sin() * azimuth.sin(),
        polar.cos(),
    )
}

/// Multiplicity factor N_S for a sensor of spin `s`: 3 for spin-1, 2 for spin-1/2.
pub fn multiplicity(s: f64) -> Option<f64> {
    if (s - 1.0).abs() < 1e-12 {
        Some(3.0)
    } else if (s - 0.5).abs() < 1e-12 {
        Some(2.0)
    } else {
        None
    }
}

/// A sensor or target spin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinSpec {
    /// Gyromagnetic ratio, rad·s⁻¹·T⁻¹.
    pub gamma: f64,
    /// Spin quantum number.
    pub spin_s: f64,
    /// Multiplicity factor N_S used when this spin is a relaxation sensor.
    pub n_s: f64,
    /// Position, nm.
    pub position: Vec3,
    /// Quantization axis, unit vector.
    pub axis: Vec3,
    /// Transition angular frequency, rad/s.
    pub omega: f64,
    /// Intrinsic relaxation time T1', s.
    pub t1_intrinsic: f64,
    /// Echo coherence time T2, s. Only meaningful for optically read sensors.
    pub t2: Option<f64>,
}

impl SpinSpec {
    /// Spin-1 NV center with the zero-field transition frequency.
    pub fn nv(position: Vec3, axis: Vec3, t1: f64, t2: f64) -> Self {
        SpinSpec {
            gamma: ELECTRON_GAMMA,
            spin_s: 1.0,
            n_s: 3.0,
            position,
            axis,
            omega: hz_to_angular(NV_ZERO_FIELD_SPLITTING_HZ),
            t1_intrinsic: t1,
            t2: Some(t2),
        }
    }

    /// g = 2 spin-1/2 reporter. Transition frequency defaults to the NV's.
    pub fn reporter(position: Vec3, axis: Vec3, t1: f64) -> Self {
        SpinSpec {
            gamma: ELECTRON_GAMMA,
            spin_s: 0.5,
            n_s: 2.0,
            position,
            axis,
            omega: hz_to_angular(NV_ZERO_FIELD_SPLITTING_HZ),
            t1_intrinsic: t1,
            t2: None,
        }
    }

    /// Gd³⁺ target, S = 7/2. Its own T1 is represented by the bath τ_c.
    pub fn gd(position: Vec3) -> Self {
        SpinSpec {
            gamma: ELECTRON_GAMMA,
            spin_s: GD_SPIN,
            n_s: 2.0 * GD_SPIN + 1.0,
            position,
            axis: Vec3::z(),
            omega: 0.0,
            t1_intrinsic: GD_TAU_C,
            t2: None,
        }
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    pub fn at(mut self, position: Vec3) -> Self {
        self.position = position;
        self
    }

    pub fn intrinsic_rate(&self) -> f64 {
        1.0 / self.t1_intrinsic
    }

    /// ⟨S_i S_j⟩ diagonal element for isotropic, uncorrelated components.
    pub fn component_variance(&self) -> f64 {
        self.spin_s * (self.spin_s + 1.0) / 3.0
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        let field = |f: &str| format!("{path}.{f}");
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid(field("gamma"), "must be positive"));
        }
        let twice = 2.0 * self.spin_s;
        if !(self.spin_s >= 0.5 && (twice - twice.round()).abs() < 1e-12) {
            return Err(Error::invalid(field("spin"), "must be a positive half-integer"));
        }
        if let Some(n) = multiplicity(self.spin_s) {
            if (self.n_s - n).abs() > 1e-12 {
                return Err(Error::invalid(
                    field("n_s"),
                    format!("must be {n} for spin {}", self.spin_s),
                ));
            }
        }
        if !self.position.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid(field("position"), "must be finite"));
        }
        if ((self.axis.norm() - 1.0).abs()) > 1e-12 {
            return Err(Error::invalid(field("axis"), "must be a unit vector"));
        }
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return Err(Error::invalid(field("frequency"), "must be non-negative"));
        }
        if !(self.t1_intrinsic > 0.0) {
            return Err(Error::invalid(field("t1"), "must be positive"));
        }
        if let Some(t2) = self.t2 {
            if !(t2 > 0.0) {
                return Err(Error::invalid(field("t2"), "must be positive"));
            }
        }
        Ok(())
    }
}

/// Lorentzian magnetic-noise bath seen by a sensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseBath {
    /// ⟨B⊥²⟩ at the sensor, T².
    pub variance_perp: f64,
    /// Field correlation time τ_c, s.
    pub tau_c: f64,
    /// Gyromagnetic ratio paired with the sensor's in the rate prefactor.
    pub gamma_partner: f64,
}

impl NoiseBath {
    pub fn new(variance_perp: f64, tau_c: f64) -> Self {
        NoiseBath {
            variance_perp,
            tau_c,
            gamma_partner: ELECTRON_GAMMA,
        }
    }

    /// Bath produced at `sensor` by a fluctuating `target` spin.
    pub fn from_target(target: &SpinSpec, sensor: &SpinSpec, tau_c: f64) -> Result<Self> {
        Ok(NoiseBath::new(transverse_field_variance(target, sensor)?, tau_c))
    }

    pub fn empty(tau_c: f64) -> Self {
        NoiseBath::new(0.0, tau_c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance_perp >= 0.0 && self.variance_perp.is_finite()) {
            return Err(Error::invalid("bath.variance_perp", "must be non-negative"));
        }
        if !(self.tau_c > 0.0) {
            return Err(Error::invalid("bath.tau_c", "must be positive"));
        }
        Ok(())
    }
}

/// Polychromatic drive of Rabi frequency |Ω_s| and FWHM linewidth Δν, both Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StochasticDrive {
    pub rabi: f64,
    pub linewidth: f64,
}

impl StochasticDrive {
    pub fn validate(&self) -> Result<()> {
        if !(self.rabi >= 0.0) {
            return Err(Error::invalid("drive.rabi", "must be non-negative"));
        }
        if !(self.linewidth > 0.0) {
            return Err(Error::invalid("drive.linewidth", "must be positive"));
        }
        Ok(())
    }

    /// The abscissa 2|Ω_s|²/Δν of the drive-rate line, s⁻¹.
    pub fn drive_parameter(&self) -> f64 {
        2.0 * self.rabi * self.rabi / self.linewidth
    }
}
