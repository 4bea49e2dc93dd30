//! Geometry and spin roster shared by every study.
//!
//! Coordinates: the diamond surface is the plane z = 0, diamond occupies
//! z < 0. The NV sits at (0, 0, −depth). The reporter sits on the surface,
//! by default at the position of strongest coupling to the NV, and shares
//! the NV's quantization axis. The target is placed relative to the
//! reporter by distance, polar angle from +z and azimuth.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::constants::{hz_to_angular, GD_SPIN, GD_TAU_C, MAGIC_ANGLE, NV_ZERO_FIELD_SPLITTING_HZ};
use crate::error::{Error, Result};
use crate::protocol::SequenceSpec;
use crate::spin::{
    axis_from_angles, dipolar_coupling, max_coupling_surface_position, transverse_field_variance,
    unit_axis, NoiseBath, SpinSpec, Vec3,
};
use crate::units::Dimension;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// Reporter-spin-assisted relaxometry read out through the NV.
    Reporter,
    /// Direct NV T1 relaxometry.
    Direct,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Reporter => "reporter",
            Protocol::Direct => "direct",
        })
    }
}

impl FromStr for Protocol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reporter" => Ok(Protocol::Reporter),
            "direct" | "nv" => Ok(Protocol::Direct),
            _ => Err(Error::invalid("protocol", format!("unknown protocol {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NvParams {
    pub depth_nm: f64,
    pub axis: Vec3,
    pub t1: f64,
    pub t2: f64,
    pub frequency_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ReporterPlacement {
    MaxCoupling,
    Position(Vec3),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReporterParams {
    pub t1: f64,
    /// Defaults to the NV transition frequency.
    pub frequency_hz: Option<f64>,
    pub placement: ReporterPlacement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetParams {
    pub spin: f64,
    pub distance_nm: f64,
    pub polar_deg: f64,
    pub azimuth_deg: f64,
    pub tau_c: f64,
}

impl TargetParams {
    /// Gd³⁺ at `distance_nm` from the reporter, at the magic polar angle.
    pub fn gd(distance_nm: f64) -> Self {
        TargetParams {
            spin: GD_SPIN,
            distance_nm,
            polar_deg: MAGIC_ANGLE.to_degrees(),
            azimuth_deg: 0.0,
            tau_c: GD_TAU_C,
        }
    }
}

/// Physical knobs of a scene in working units (nm, s, Hz). Sweeps override
/// these by [`SceneParam`] before building the [`Scene`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneParams {
    pub nv: NvParams,
    pub reporter: ReporterParams,
    pub target: Option<TargetParams>,
    /// Template sequence. A `tau_nv` of `None` means matched to the coupling.
    pub sequence: SequenceTemplate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceTemplate {
    pub tau_nv: Option<f64>,
    pub tau_r: f64,
    pub n_blocks: u32,
    pub t_init: f64,
    pub t_extra: f64,
    pub echo_exponent: f64,
}

impl Default for SequenceTemplate {
    fn default() -> Self {
        SequenceTemplate {
            tau_nv: None,
            tau_r: 30e-6,
            n_blocks: 2,
            t_init: 2e-6,
            t_extra: 0.0,
            echo_exponent: 3.0,
        }
    }
}

impl SceneParams {
    /// NV 4.5 nm deep (axis ⊥ surface, T2 8.4 µs, T1 3.5 ms), reporter
    /// T1' 30 µs at the max-coupling position, Gd³⁺ 3 nm away.
    pub fn fig1c() -> Self {
        SceneParams {
            nv: NvParams {
                depth_nm: 4.5,
                axis: Vec3::z(),
                t1: 3.5e-3,
                t2: 8.4e-6,
                frequency_hz: NV_ZERO_FIELD_SPLITTING_HZ,
            },
            reporter: ReporterParams {
                t1: 30e-6,
                frequency_hz: None,
                placement: ReporterPlacement::MaxCoupling,
            },
            target: Some(TargetParams::gd(3.0)),
            sequence: SequenceTemplate::default(),
        }
    }

    pub fn without_target(mut self) -> Self {
        self.target = None;
        self
    }

    pub fn get(&self, p: SceneParam) -> Option<f64> {
        Some(match p {
            SceneParam::NvDepth => self.nv.depth_nm,
            SceneParam::NvT1 => self.nv.t1,
            SceneParam::NvT2 => self.nv.t2,
            SceneParam::NvFrequency => self.nv.frequency_hz,
            SceneParam::ReporterT1 => self.reporter.t1,
            SceneParam::ReporterFrequency => self.reporter.frequency_hz.unwrap_or(self.nv.frequency_hz),
            SceneParam::TargetDistance => self.target.as_ref()?.distance_nm,
            SceneParam::TargetPolar => self.target.as_ref()?.polar_deg,
            SceneParam::TargetAzimuth => self.target.as_ref()?.azimuth_deg,
            SceneParam::TargetTauC => self.target.as_ref()?.tau_c,
            SceneParam::TInit => self.sequence.t_init,
        })
    }

    pub fn set(&mut self, p: SceneParam, value: f64) -> Result<()> {
        fn target(t: &mut Option<TargetParams>, p: SceneParam) -> Result<&mut TargetParams> {
            t.as_mut()
                .ok_or_else(|| Error::invalid(p.name(), "scene has no target"))
        }
        match p {
            SceneParam::NvDepth => self.nv.depth_nm = value,
            SceneParam::NvT1 => self.nv.t1 = value,
            SceneParam::NvT2 => self.nv.t2 = value,
            SceneParam::NvFrequency => self.nv.frequency_hz = value,
            SceneParam::ReporterT1 => self.reporter.t1 = value,
            SceneParam::ReporterFrequency => self.reporter.frequency_hz = Some(value),
            SceneParam::TargetDistance => target(&mut self.target, p)?.distance_nm = value,
            SceneParam::TargetPolar => target(&mut self.target, p)?.polar_deg = value,
            SceneParam::TargetAzimuth => target(&mut self.target, p)?.azimuth_deg = value,
            SceneParam::TargetTauC => target(&mut self.target, p)?.tau_c = value,
            SceneParam::TInit => self.sequence.t_init = value,
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Scene> {
        let nv_axis = unit_axis(self.nv.axis, "nv.axis")?;
        if !(self.nv.depth_nm > 0.0) {
            return Err(Error::invalid("nv.depth", "must be positive"));
        }
        if !(self.nv.frequency_hz >= 0.0) {
            return Err(Error::invalid("nv.frequency", "must be non-negative"));
        }
        let nv = SpinSpec::nv(Vec3::new(0.0, 0.0, -self.nv.depth_nm), nv_axis, self.nv.t1, self.nv.t2)
            .with_omega(hz_to_angular(self.nv.frequency_hz));
        nv.validate("nv")?;

        let reporter_pos = match &self.reporter.placement {
            ReporterPlacement::MaxCoupling => max_coupling_surface_position(&nv, 0.0)?.0,
            ReporterPlacement::Position(p) => *p,
        };
        let f_rep = self.reporter.frequency_hz.unwrap_or(self.nv.frequency_hz);
        let reporter = SpinSpec::reporter(reporter_pos, nv_axis, self.reporter.t1)
            .with_omega(hz_to_angular(f_rep));
        reporter.validate("reporter")?;
        let coupling_hz = dipolar_coupling(&nv, &reporter)?;

        let target = match &self.target {
            None => None,
            Some(t) => {
                if !(t.distance_nm > 0.0) {
                    return Err(Error::invalid("target.distance", "must be positive"));
                }
                if !(t.tau_c > 0.0) {
                    return Err(Error::invalid("target.tau_c", "must be positive"));
                }
                let dir = axis_from_angles(t.polar_deg.to_radians(), t.azimuth_deg.to_radians());
                let mut spin = SpinSpec::gd(reporter_pos + dir * t.distance_nm);
                spin.spin_s = t.spin;
                spin.n_s = 2.0 * t.spin + 1.0;
                spin.t1_intrinsic = t.tau_c;
                spin.validate("target")?;
                Some(Target { spin, tau_c: t.tau_c })
            }
        };

        let s = &self.sequence;
        let tau_nv = match s.tau_nv {
            Some(t) => t,
            None if coupling_hz > 0.0 => 0.5 / coupling_hz,
            None => return Err(Error::invalid("sequence.tau_nv", "cannot match a vanishing coupling")),
        };
        let sequence = SequenceSpec {
            tau_nv,
            tau_r: s.tau_r,
            n_blocks: s.n_blocks,
            t_init: s.t_init,
            t_extra: s.t_extra,
            echo_exponent: s.echo_exponent,
        };
        sequence.validate()?;

        let scene = Scene {
            nv,
            reporter,
            target,
            coupling_hz,
            sequence,
        };
        // surfaces degenerate target geometry at build time
        scene.reporter_rates()?;
        scene.nv_rates()?;
        Ok(scene)
    }
}

/// Parameters a sweep may override, addressed by dotted name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SceneParam {
    NvDepth,
    NvT1,
    NvT2,
    NvFrequency,
    ReporterT1,
    ReporterFrequency,
    TargetDistance,
    TargetPolar,
    TargetAzimuth,
    TargetTauC,
    TInit,
}

impl SceneParam {
    pub const ALL: [SceneParam; 11] = [
        SceneParam::NvDepth,
        SceneParam::NvT1,
        SceneParam::NvT2,
        SceneParam::NvFrequency,
        SceneParam::ReporterT1,
        SceneParam::ReporterFrequency,
        SceneParam::TargetDistance,
        SceneParam::TargetPolar,
        SceneParam::TargetAzimuth,
        SceneParam::TargetTauC,
        SceneParam::TInit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SceneParam::NvDepth => "nv.depth",
            SceneParam::NvT1 => "nv.t1",
            SceneParam::NvT2 => "nv.t2",
            SceneParam::NvFrequency => "nv.frequency",
            SceneParam::ReporterT1 => "reporter.t1",
            SceneParam::ReporterFrequency => "reporter.frequency",
            SceneParam::TargetDistance => "target.distance",
            SceneParam::TargetPolar => "target.polar_deg",
            SceneParam::TargetAzimuth => "target.azimuth_deg",
            SceneParam::TargetTauC => "target.tau_c",
            SceneParam::TInit => "sequence.t_init",
        }
    }

    pub fn dimension(self) -> Dimension {
        match self {
            SceneParam::NvDepth | SceneParam::TargetDistance => Dimension::Length,
            SceneParam::NvT1
            | SceneParam::NvT2
            | SceneParam::ReporterT1
            | SceneParam::TargetTauC
            | SceneParam::TInit => Dimension::Time,
            SceneParam::NvFrequency | SceneParam::ReporterFrequency => Dimension::Frequency,
            SceneParam::TargetPolar | SceneParam::TargetAzimuth => Dimension::Dimensionless,
        }
    }
}

impl fmt::Display for SceneParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SceneParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SceneParam::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::invalid("param", format!("unknown scene parameter {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub spin: SpinSpec,
    pub tau_c: f64,
}

/// Relaxation rate of a sensor without and with the target, s⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub baseline: f64,
    pub with_target: f64,
}

impl RatePair {
    pub fn induced(&self) -> f64 {
        self.with_target - self.baseline
    }

    pub fn scaled(self, alpha: f64) -> Self {
        RatePair {
            baseline: self.baseline * alpha,
            with_target: self.with_target * alpha,
        }
    }
}

/// A built scene: positioned spins and derived couplings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub nv: SpinSpec,
    pub reporter: SpinSpec,
    pub target: Option<Target>,
    /// NV-reporter secular coupling k_s, Hz.
    pub coupling_hz: f64,
    pub sequence: SequenceSpec,
}

impl Scene {
    /// Bath the target produces at `sensor`; empty without a target.
    pub fn bath_at(&self, sensor: &SpinSpec) -> Result<NoiseBath> {
        match &self.target {
            None => Ok(NoiseBath::empty(GD_TAU_C)),
            Some(t) => Ok(NoiseBath::new(transverse_field_variance(&t.spin, sensor)?, t.tau_c)),
        }
    }

    fn rates_of(&self, sensor: &SpinSpec) -> Result<RatePair> {
        let bath = self.bath_at(sensor)?;
        Ok(RatePair {
            baseline: sensor.intrinsic_rate(),
            with_target: crate::spin::relaxation_rate_lorentzian(sensor, &bath),
        })
    }

    pub fn reporter_rates(&self) -> Result<RatePair> {
        self.rates_of(&self.reporter)
    }

    pub fn nv_rates(&self) -> Result<RatePair> {
        self.rates_of(&self.nv)
    }

    pub fn rates(&self, protocol: Protocol) -> Result<RatePair> {
        match protocol {
            Protocol::Reporter => self.reporter_rates(),
            Protocol::Direct => self.nv_rates(),
        }
    }

    /// The sensor spin a protocol reads.
    pub fn sensor(&self, protocol: Protocol) -> &SpinSpec {
        match protocol {
            Protocol::Reporter => &self.reporter,
            Protocol::Direct => &self.nv,
        }
    }
}
