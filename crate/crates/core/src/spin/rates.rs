use super::{NoiseBath, SpinSpec, StochasticDrive};

/// τ_c / (1 + ω²τ_c²): the Lorentzian spectral weight at `omega`.
#[inline]
pub fn lorentzian_weight(omega: f64, tau_c: f64) -> f64 {
    tau_c / (1.0 + omega * omega * tau_c * tau_c)
}

/// Total relaxation rate 1/T1 (s⁻¹) of `sensor` in a Lorentzian `bath`.
///
/// The prefactor is N_S·γ_sensor·γ_partner. For g = 2 electron sensors with
/// an electron partner this is numerically γ².
pub fn relaxation_rate_lorentzian(sensor: &SpinSpec, bath: &NoiseBath) -> f64 {
    sensor.intrinsic_rate() + induced_rate(sensor, bath)
}

/// Rate added to `sensor` by `bath`, s⁻¹.
pub fn induced_rate(sensor: &SpinSpec, bath: &NoiseBath) -> f64 {
    sensor.n_s
        * sensor.gamma
        * bath.gamma_partner
        * bath.variance_perp
        * lorentzian_weight(sensor.omega, bath.tau_c)
}

/// Relaxation rate (s⁻¹) of a spin under an incoherent polychromatic drive:
/// 1/T1' + 2|Ω_s|²/Δν, with Ω_s and Δν in Hz.
pub fn stochastic_drive_rate(spec: &SpinSpec, drive: &StochasticDrive) -> f64 {
    spec.intrinsic_rate() + drive.drive_parameter()
}
