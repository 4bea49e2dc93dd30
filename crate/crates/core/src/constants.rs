//! Physical constants and unit conversions.
//!
//! Internally lengths are carried in nanometres (positions), times in seconds,
//! gyromagnetic ratios and transition frequencies in angular units
//! (rad·s⁻¹·T⁻¹, rad·s⁻¹). Rabi frequencies, linewidths and dipolar couplings
//! are ordinary frequencies in Hz. Every conversion between the two goes
//! through this module.

use std::f64::consts::PI;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// μ0 / 4π, T·m/A.
pub const MU0_OVER_4PI: f64 = 1.0e-7;

/// Free-electron gyromagnetic ratio γ/2π, Hz/T.
pub const ELECTRON_GAMMA_HZ_PER_T: f64 = 28.03e9;

/// Free-electron gyromagnetic ratio, rad·s⁻¹·T⁻¹.
pub const ELECTRON_GAMMA: f64 = 2.0 * PI * ELECTRON_GAMMA_HZ_PER_T;

/// NV ground-state zero-field splitting, Hz.
pub const NV_ZERO_FIELD_SPLITTING_HZ: f64 = 2.87e9;

/// Gd³⁺ electronic spin.
pub const GD_SPIN: f64 = 3.5;

/// Gd³⁺ field correlation time, s.
pub const GD_TAU_C: f64 = 0.35e-9;

/// Point-dipole separation cutoff, nm.
pub const MIN_SEPARATION_NM: f64 = 0.1;

/// Magic angle arccos(1/√3), radians.
pub const MAGIC_ANGLE: f64 = 0.955_316_618_124_509_3;

pub const NM: f64 = 1.0e-9;

#[inline]
pub fn nm_to_m(x: f64) -> f64 {
    x * NM
}

#[inline]
pub fn hz_to_angular(f: f64) -> f64 {
    2.0 * PI * f
}

#[inline]
pub fn angular_to_hz(w: f64) -> f64 {
    w / (2.0 * PI)
}

/// Dipolar prefactor (μ0/4π)·γ·ħ in T·m³ per unit spin.
#[inline]
pub fn dipole_prefactor(gamma: f64) -> f64 {
    MU0_OVER_4PI * gamma * HBAR
}
