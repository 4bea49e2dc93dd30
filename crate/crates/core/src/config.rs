//! The scene configuration document.
//!
//! A single JSON file describes the spins, sequence, readouts and the study
//! parameters of every CLI verb. Quantities are either bare numbers in the
//! canonical unit (nm, s, Hz) or strings with a unit suffix such as
//! `"8.4 us"`. Unknown keys are rejected and every error names the field it
//! comes from.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::atlas::image::ImageSpec;
use crate::atlas::sweep::{AxisScale, FigurePreset, SweepAxis, SweepSpec};
use crate::budget::{NoisePenalty, PlanSettings, ReadoutKind, ReadoutModel, ReadoutPair};
use crate::constants::{GD_SPIN, GD_TAU_C, MAGIC_ANGLE, NV_ZERO_FIELD_SPLITTING_HZ};
use crate::error::{Error, Result};
use crate::optimize::{linear_grid, log_grid};
use crate::protocol::TrajectoryConfig;
use crate::scene::{
    NvParams, Protocol, ReporterParams, ReporterPlacement, SceneParam, SceneParams, SequenceTemplate,
    TargetParams,
};
use crate::spin::{axis_from_angles, Vec3};
use crate::units::{Dimension, Quantity};

pub const SCHEMA_VERSION: u32 = 1;

/// Names of the shipped presets, in the order `relaxo --help` lists them.
pub const PRESET_NAMES: [&str; 9] = [
    "fig1c",
    "fig2a",
    "fig2b",
    "fig2c",
    "fig2d",
    "fig3-reporter",
    "fig3-nv",
    "fig3-tilted",
    "fig3-tilted-flipped",
];

/// Text of a shipped preset.
pub fn preset_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig1c" => include_str!("../presets/fig1c.json"),
        "fig2a" => include_str!("../presets/fig2a.json"),
        "fig2b" => include_str!("../presets/fig2b.json"),
        "fig2c" => include_str!("../presets/fig2c.json"),
        "fig2d" => include_str!("../presets/fig2d.json"),
        "fig3-reporter" => include_str!("../presets/fig3-reporter.json"),
        "fig3-nv" => include_str!("../presets/fig3-nv.json"),
        "fig3-tilted" => include_str!("../presets/fig3-tilted.json"),
        "fig3-tilted-flipped" => include_str!("../presets/fig3-tilted-flipped.json"),
        _ => return None,
    })
}

fn q(v: &str) -> Quantity {
    Quantity::from(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub nv: NvConfig,
    pub reporter: ReporterConfig,
    #[serde(default)]
    pub target: Option<TargetConfig>,
    #[serde(default)]
    pub sequence: SequenceConfig,
    #[serde(default)]
    pub readout: ReadoutPairConfig,
    #[serde(default)]
    pub study: StudyConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    0x5eed
}

/// A unit axis given as a vector or as polar/azimuth angles from +z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisConfig {
    Vector([f64; 3]),
    Angles { polar_deg: f64, azimuth_deg: f64 },
}

impl Default for AxisConfig {
    fn default() -> Self {
        AxisConfig::Vector([0.0, 0.0, 1.0])
    }
}

impl AxisConfig {
    fn vector(&self) -> Vec3 {
        match *self {
            AxisConfig::Vector(v) => Vec3::new(v[0], v[1], v[2]),
            AxisConfig::Angles { polar_deg, azimuth_deg } => {
                axis_from_angles(polar_deg.to_radians(), azimuth_deg.to_radians())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NvConfig {
    pub depth: Quantity,
    #[serde(default)]
    pub axis: AxisConfig,
    pub t1: Quantity,
    pub t2: Quantity,
    #[serde(default)]
    pub frequency: Option<Quantity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReporterConfig {
    pub t1: Quantity,
    /// Defaults to the NV frequency.
    #[serde(default)]
    pub frequency: Option<Quantity>,
    /// Explicit position in nm; defaults to the max-coupling surface site.
    #[serde(default)]
    pub position: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    #[serde(default = "default_target_spin")]
    pub spin: f64,
    pub distance: Quantity,
    #[serde(default = "default_polar")]
    pub polar_deg: f64,
    #[serde(default)]
    pub azimuth_deg: f64,
    #[serde(default = "default_tau_c")]
    pub tau_c: Quantity,
}

fn default_target_spin() -> f64 {
    GD_SPIN
}
fn default_polar() -> f64 {
    MAGIC_ANGLE.to_degrees()
}
fn default_tau_c() -> Quantity {
    Quantity::Number(GD_TAU_C)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SequenceConfig {
    /// Omitted or null: matched to the NV-reporter coupling.
    pub tau_nv: Option<Quantity>,
    pub tau_r: Quantity,
    pub n_blocks: u32,
    pub t_init: Quantity,
    pub t_extra: Quantity,
    pub echo_exponent: f64,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        let d = SequenceTemplate::default();
        SequenceConfig {
            tau_nv: None,
            tau_r: d.tau_r.into(),
            n_blocks: d.n_blocks,
            t_init: d.t_init.into(),
            t_extra: d.t_extra.into(),
            echo_exponent: d.echo_exponent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutConfig {
    pub kind: ReadoutKind,
    #[serde(default)]
    pub t_read: Option<Quantity>,
    #[serde(default)]
    pub t_read_min: Option<Quantity>,
    #[serde(default)]
    pub t_read_max: Option<Quantity>,
    /// Constant noise penalty; replaces the kind's default model.
    #[serde(default)]
    pub c_spn: Option<f64>,
    /// Saturating penalty floor·√(1 + knee/t_read).
    #[serde(default)]
    pub floor: Option<f64>,
    #[serde(default)]
    pub knee: Option<Quantity>,
    #[serde(default)]
    pub t_init: Option<Quantity>,
}

impl ReadoutConfig {
    pub fn of_kind(kind: ReadoutKind) -> Self {
        ReadoutConfig { kind, t_read: None, t_read_min: None, t_read_max: None, c_spn: None, floor: None, knee: None, t_init: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReadoutPairConfig {
    pub direct: ReadoutConfig,
    pub reporter: ReadoutConfig,
}

impl Default for ReadoutPairConfig {
    fn default() -> Self {
        ReadoutPairConfig { direct: ReadoutConfig::of_kind(ReadoutKind::Scc), reporter: ReadoutConfig::of_kind(ReadoutKind::Scc) }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudyConfig {
    pub snr: Option<f64>,
    pub optimizer: Option<OptimizerConfig>,
    pub signal: Option<SignalStudy>,
    pub sweep: Option<SweepStudy>,
    pub image: Option<ImageStudy>,
    pub oracle: Option<OracleStudy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub probe_grid: usize,
    pub read_grid: usize,
    pub log_tol: f64,
    pub probe_lo: f64,
    pub probe_hi: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let d = PlanSettings::default();
        OptimizerConfig { probe_grid: d.probe_grid, read_grid: d.read_grid, log_tol: d.log_tol, probe_lo: d.probe_lo, probe_hi: d.probe_hi }
    }
}

/// Evenly spaced range or explicit list of times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeGrid {
    Values(Vec<Quantity>),
    Range {
        start: Quantity,
        stop: Quantity,
        points: usize,
        #[serde(default = "linear")]
        scale: AxisScale,
    },
}

fn linear() -> AxisScale {
    AxisScale::Linear
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalStudy {
    #[serde(default = "reporter")]
    pub protocol: Protocol,
    pub tau: TimeGrid,
    #[serde(default = "default_n_traj")]
    pub n_traj: u64,
    #[serde(default = "default_dt_max")]
    pub dt_max: Quantity,
}

fn reporter() -> Protocol {
    Protocol::Reporter
}
fn default_n_traj() -> u64 {
    100_000
}
fn default_dt_max() -> Quantity {
    Quantity::Number(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxisConfig {
    pub param: String,
    pub start: Quantity,
    pub stop: Quantity,
    pub points: usize,
    #[serde(default = "linear")]
    pub scale: AxisScale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepStudy {
    #[serde(default = "custom")]
    pub preset: FigurePreset,
    /// Points per axis for preset axes.
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default)]
    pub axis1: Option<SweepAxisConfig>,
    #[serde(default)]
    pub axis2: Option<SweepAxisConfig>,
}

fn custom() -> FigurePreset {
    FigurePreset::Custom
}
fn default_points() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageStudy {
    pub extent: Quantity,
    #[serde(default = "default_points")]
    pub pixels: usize,
    pub height: Quantity,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "reporter")]
    pub protocol: Protocol,
    #[serde(default = "default_floor_frac")]
    pub floor_frac: f64,
    #[serde(default)]
    pub target_xy: [f64; 2],
    /// Second image over the same target for ratio summaries.
    #[serde(default)]
    pub reference: Option<ImageReference>,
}

fn default_eps() -> f64 {
    0.1
}
fn default_floor_frac() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageReference {
    pub protocol: Protocol,
    pub height: Quantity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleStudy {
    pub t1: Vec<Quantity>,
    /// τ grid points per T1, spanning [0, span·T1].
    #[serde(default = "default_oracle_points")]
    pub points: usize,
    #[serde(default = "default_span")]
    pub span: f64,
    #[serde(default = "default_n_traj")]
    pub n_traj: u64,
    #[serde(default = "default_dt_max")]
    pub dt_max: Quantity,
}

fn default_oracle_points() -> usize {
    10
}
fn default_span() -> f64 {
    3.0
}

impl Default for OracleStudy {
    fn default() -> Self {
        OracleStudy {
            t1: vec![q("1 us"), q("30 us"), q("1 ms")],
            points: default_oracle_points(),
            span: default_span(),
            n_traj: default_n_traj(),
            dt_max: default_dt_max(),
        }
    }
}

/// Everything a CLI verb needs, in working units and validated.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub scene: SceneParams,
    pub readouts: ReadoutPair,
    pub snr: f64,
    pub settings: PlanSettings,
    pub seed: u64,
    pub signal: Option<SignalPlan>,
    pub sweep: Option<SweepSpec>,
    pub image: Option<ImagePlan>,
    pub oracle: OraclePlan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalPlan {
    pub protocol: Protocol,
    pub tau: Vec<f64>,
    pub trajectories: TrajectoryConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlan {
    pub primary: ImageSpec,
    pub reference: Option<ImageSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OraclePlan {
    pub t1: Vec<f64>,
    pub points: usize,
    pub span: f64,
    pub trajectories: TrajectoryConfig,
}

fn val(x: &Quantity, dim: Dimension, path: &str) -> Result<f64> {
    x.resolve(dim).map_err(|r| Error::invalid(path, r))
}

fn positive(x: &Quantity, dim: Dimension, path: &str) -> Result<f64> {
    let v = val(x, dim, path)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::invalid(path, "must be positive"))
    }
}

fn opt(x: &Option<Quantity>, dim: Dimension, path: &str) -> Result<Option<f64>> {
    x.as_ref().map(|x| val(x, dim, path)).transpose()
}

impl ReadoutConfig {
    pub fn resolve(&self, path: &str) -> Result<ReadoutModel> {
        let p = |f: &str| format!("{path}.{f}");
        let mut m = match self.kind {
            ReadoutKind::Pl => ReadoutModel::pl(),
            ReadoutKind::Scc => ReadoutModel::scc(),
        };
        if let Some(t) = opt(&self.t_read, Dimension::Time, &p("t_read"))? {
            m.t_read = t;
            if m.kind == ReadoutKind::Pl {
                // PL has a fixed window unless a range is given
                (m.t_read_min, m.t_read_max) = (t, t);
            }
        }
        if let Some(t) = opt(&self.t_read_min, Dimension::Time, &p("t_read_min"))? {
            m.t_read_min = t;
        }
        if let Some(t) = opt(&self.t_read_max, Dimension::Time, &p("t_read_max"))? {
            m.t_read_max = t;
        }
        if self.t_read.is_none() {
            m.t_read = m.t_read.clamp(m.t_read_min, m.t_read_max.max(m.t_read_min));
        }
        if let Some(t) = opt(&self.t_init, Dimension::Time, &p("t_init"))? {
            m.t_init = t;
        }
        let knee = opt(&self.knee, Dimension::Time, &p("knee"))?;
        match (self.c_spn, self.floor, knee) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(Error::invalid(p("c_spn"), "give either c_spn or floor/knee, not both"));
            }
            (Some(c), None, None) => m.penalty = NoisePenalty::Constant { c_spn: c },
            (None, None, None) => {}
            (None, floor, knee) => {
                let (f0, k0) = match m.penalty {
                    NoisePenalty::Saturating { floor, knee } => (floor, knee),
                    NoisePenalty::Constant { c_spn } => (c_spn, 0.0),
                };
                m.penalty = NoisePenalty::Saturating { floor: floor.unwrap_or(f0), knee: knee.unwrap_or(k0) };
            }
        }
        m.validate(path)?;
        Ok(m)
    }
}

fn time_grid(g: &TimeGrid, path: &str) -> Result<Vec<f64>> {
    match g {
        TimeGrid::Values(v) => v.iter().enumerate().map(|(i, x)| val(x, Dimension::Time, &format!("{path}[{i}]"))).collect(),
        TimeGrid::Range { start, stop, points, scale } => {
            let a = val(start, Dimension::Time, &format!("{path}.start"))?;
            let b = val(stop, Dimension::Time, &format!("{path}.stop"))?;
            if *points == 0 {
                return Ok(Vec::new());
            }
            match scale {
                AxisScale::Linear => Ok(linear_grid(a, b, *points)),
                AxisScale::Log if a > 0.0 && b > 0.0 => Ok(log_grid(a, b, *points)),
                AxisScale::Log => Err(Error::invalid(path, "log range must be positive")),
            }
        }
    }
}

fn sweep_axis(c: &SweepAxisConfig, path: &str) -> Result<SweepAxis> {
    let param: SceneParam = c.param.parse().map_err(|_| Error::invalid(format!("{path}.param"), format!("unknown parameter {:?}", c.param)))?;
    let dim = param.dimension();
    Ok(SweepAxis {
        param,
        start: val(&c.start, dim, &format!("{path}.start"))?,
        stop: val(&c.stop, dim, &format!("{path}.stop"))?,
        points: c.points,
        scale: c.scale,
    })
}

impl SceneConfig {
    /// Parse and fully validate a configuration document.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: SceneConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Config(format!("{path}: {}", e.into_inner()))
        })?;
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let text = preset_text(name).ok_or_else(|| {
            Error::invalid("preset", format!("unknown preset {name:?}; available: {}", PRESET_NAMES.join(", ")))
        })?;
        Self::from_json(text)
    }

    /// Hex SHA-256 of the canonical serialisation.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serialises");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn scene_params(&self) -> Result<SceneParams> {
        use Dimension::*;
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::invalid("schema_version", format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version)));
        }
        let nv_f = opt(&self.nv.frequency, Frequency, "nv.frequency")?.unwrap_or(NV_ZERO_FIELD_SPLITTING_HZ);
        let nv = NvParams {
            depth_nm: positive(&self.nv.depth, Length, "nv.depth")?,
            axis: self.nv.axis.vector(),
            t1: positive(&self.nv.t1, Time, "nv.t1")?,
            t2: positive(&self.nv.t2, Time, "nv.t2")?,
            frequency_hz: nv_f,
        };
        let reporter = ReporterParams {
            t1: positive(&self.reporter.t1, Time, "reporter.t1")?,
            frequency_hz: opt(&self.reporter.frequency, Frequency, "reporter.frequency")?,
            placement: match self.reporter.position {
                None => ReporterPlacement::MaxCoupling,
                Some(p) => ReporterPlacement::Position(Vec3::new(p[0], p[1], p[2])),
            },
        };
        let target = match &self.target {
            None => None,
            Some(t) => Some(TargetParams {
                spin: t.spin,
                distance_nm: positive(&t.distance, Length, "target.distance")?,
                polar_deg: t.polar_deg,
                azimuth_deg: t.azimuth_deg,
                tau_c: positive(&t.tau_c, Time, "target.tau_c")?,
            }),
        };
        let s = &self.sequence;
        let sequence = SequenceTemplate {
            tau_nv: opt(&s.tau_nv, Time, "sequence.tau_nv")?,
            tau_r: val(&s.tau_r, Time, "sequence.tau_r")?,
            n_blocks: s.n_blocks,
            t_init: val(&s.t_init, Time, "sequence.t_init")?,
            t_extra: val(&s.t_extra, Time, "sequence.t_extra")?,
            echo_exponent: s.echo_exponent,
        };
        Ok(SceneParams { nv, reporter, target, sequence })
    }

    /// Validate everything and convert to working units.
    pub fn resolve(&self) -> Result<Resolved> {
        let scene = self.scene_params()?;
        // enforces the physical invariants of every spin and the geometry
        scene.build()?;
        let readouts = ReadoutPair {
            direct: self.readout.direct.resolve("readout.direct")?,
            reporter: self.readout.reporter.resolve("readout.reporter")?,
        };
        let study = &self.study;
        let snr = study.snr.unwrap_or(1.0);
        if !(snr > 0.0 && snr.is_finite()) {
            return Err(Error::invalid("study.snr", "must be positive"));
        }
        let o = study.optimizer.clone().unwrap_or_default();
        if o.probe_grid < 2 || o.read_grid < 2 {
            return Err(Error::invalid("study.optimizer", "grids need at least 2 points"));
        }
        if !(o.log_tol > 0.0 && o.probe_lo > 0.0 && o.probe_hi > o.probe_lo) {
            return Err(Error::invalid("study.optimizer", "need log_tol > 0 and 0 < probe_lo < probe_hi"));
        }
        let settings = PlanSettings { probe_grid: o.probe_grid, read_grid: o.read_grid, log_tol: o.log_tol, probe_lo: o.probe_lo, probe_hi: o.probe_hi };
        let trajectories = |n_traj: u64, dt_max: &Quantity, path: &str| -> Result<TrajectoryConfig> {
            let c = TrajectoryConfig { n_traj, seed: self.seed, dt_max: val(dt_max, Dimension::Time, path)? };
            c.validate()?;
            Ok(c)
        };

        let signal = match &study.signal {
            None => None,
            Some(s) => {
                let tau = time_grid(&s.tau, "study.signal.tau")?;
                if tau.iter().any(|t| !(*t >= 0.0)) {
                    return Err(Error::invalid("study.signal.tau", "times must be >= 0"));
                }
                if tau.windows(2).any(|w| w[1] < w[0]) {
                    return Err(Error::invalid("study.signal.tau", "must be ascending"));
                }
                Some(SignalPlan { protocol: s.protocol, tau, trajectories: trajectories(s.n_traj, &s.dt_max, "study.signal.dt_max")? })
            }
        };

        let sweep = match &study.sweep {
            None => None,
            Some(s) => {
                let base = SweepSpec::preset(s.preset, s.points);
                let axis1 = match (&s.axis1, &base) {
                    (Some(a), _) => sweep_axis(a, "study.sweep.axis1")?,
                    (None, Some(b)) => b.axis1.clone(),
                    (None, None) => return Err(Error::invalid("study.sweep.axis1", "required for a custom sweep")),
                };
                let axis2 = match (&s.axis2, &base) {
                    (Some(a), _) => sweep_axis(a, "study.sweep.axis2")?,
                    (None, Some(b)) => b.axis2.clone(),
                    (None, None) => return Err(Error::invalid("study.sweep.axis2", "required for a custom sweep")),
                };
                let spec = SweepSpec { preset: s.preset, axis1, axis2, template: scene.clone(), readouts: readouts.clone(), snr, settings };
                spec.validate()?;
                Some(spec)
            }
        };

        let image = match &study.image {
            None => None,
            Some(i) => {
                let primary = ImageSpec {
                    extent_nm: positive(&i.extent, Dimension::Length, "study.image.extent")?,
                    pixels: i.pixels,
                    sensor_height_nm: positive(&i.height, Dimension::Length, "study.image.height")?,
                    eps: i.eps,
                    protocol: i.protocol,
                    floor_frac: i.floor_frac,
                    target_xy: i.target_xy,
                    readout: readouts.for_protocol(i.protocol).clone(),
                    settings,
                };
                primary.validate().map_err(|e| match e {
                    Error::Invalid { path, reason } => Error::invalid(format!("study.{path}"), reason),
                    e => e,
                })?;
                let reference = match &i.reference {
                    None => None,
                    Some(r) => Some(ImageSpec {
                        protocol: r.protocol,
                        sensor_height_nm: positive(&r.height, Dimension::Length, "study.image.reference.height")?,
                        readout: readouts.for_protocol(r.protocol).clone(),
                        ..primary.clone()
                    }),
                };
                Some(ImagePlan { primary, reference })
            }
        };

        let o = study.oracle.clone().unwrap_or_default();
        let t1 = o
            .t1
            .iter()
            .enumerate()
            .map(|(k, t)| positive(t, Dimension::Time, &format!("study.oracle.t1[{k}]")))
            .collect::<Result<Vec<_>>>()?;
        if !(o.span > 0.0) {
            return Err(Error::invalid("study.oracle.span", "must be positive"));
        }
        let oracle = OraclePlan { t1, points: o.points, span: o.span, trajectories: trajectories(o.n_traj, &o.dt_max, "study.oracle.dt_max")? };

        Ok(Resolved { scene, readouts, snr, settings, seed: self.seed, signal, sweep, image, oracle })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> &'static str {
        r#"{
            "schema_version": 1,
            "nv": {"depth": "4.5 nm", "t1": "3.5 ms", "t2": "8.4 us"},
            "reporter": {"t1": "30 us"},
            "target": {"distance": "3 nm"}
        }"#
    }

    #[test]
    fn minimal_config_matches_reference_scene() {
        let cfg = SceneConfig::from_json(minimal()).unwrap();
        let r = cfg.resolve().unwrap();
        let want = SceneParams::fig1c();
        assert_eq!(r.scene.nv, want.nv);
        assert_eq!(r.scene.reporter, want.reporter);
        assert_eq!(r.scene.sequence, want.sequence);
        let t = r.scene.target.unwrap();
        let w = want.target.unwrap();
        assert_eq!((t.spin, t.distance_nm, t.azimuth_deg, t.tau_c), (w.spin, w.distance_nm, w.azimuth_deg, w.tau_c));
        assert!((t.polar_deg - w.polar_deg).abs() < 1e-12);
        assert_eq!(r.readouts, ReadoutPair::default());
    }

    #[test]
    fn unknown_keys_are_rejected_with_path() {
        let text = minimal().replace(r#""t2": "8.4 us""#, r#""t2": "8.4 us", "t3": 1"#);
        let e = SceneConfig::from_json(&text).unwrap_err();
        assert!(e.is_validation());
        let msg = e.to_string();
        assert!(msg.contains("nv") && msg.contains("t3"), "{msg}");
    }

    #[test]
    fn wrong_units_name_the_field() {
        let text = minimal().replace("8.4 us", "8.4 nm");
        let e = SceneConfig::from_json(&text).unwrap_err();
        assert!(matches!(&e, Error::Invalid { path, .. } if path == "nv.t2"), "{e}");
    }

    #[test]
    fn zero_axis_is_a_validation_error() {
        let text = minimal().replace(r#""depth": "4.5 nm","#, r#""depth": "4.5 nm", "axis": [0, 0, 0],"#);
        let e = SceneConfig::from_json(&text).unwrap_err();
        assert!(matches!(&e, Error::Invalid { path, .. } if path == "nv.axis"), "{e}");
    }

    #[test]
    fn schema_version_is_checked() {
        let text = minimal().replace(r#""schema_version": 1"#, r#""schema_version": 2"#);
        assert!(matches!(SceneConfig::from_json(&text), Err(Error::Invalid { .. })));
    }

    #[test]
    fn all_presets_load() {
        for name in PRESET_NAMES {
            let cfg = SceneConfig::preset(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            cfg.resolve().unwrap();
        }
        assert!(SceneConfig::preset("fig9").is_err());
    }

    #[test]
    fn presets_match_library_scenes() {
        assert_eq!(SceneConfig::preset("fig1c").unwrap().resolve().unwrap().scene, SceneParams::fig1c());
        for (name, make) in [
            ("fig2a", SweepSpec::fig2a as fn(usize) -> SweepSpec),
            ("fig2b", SweepSpec::fig2b),
            ("fig2c", SweepSpec::fig2c),
            ("fig2d", SweepSpec::fig2d),
        ] {
            let got = SceneConfig::preset(name).unwrap().resolve().unwrap().sweep.unwrap();
            assert_eq!(got, make(got.axis1.points), "{name}");
        }
        let fig3 = SceneConfig::preset("fig3-reporter").unwrap().resolve().unwrap();
        assert_eq!(fig3.scene, crate::atlas::image::fig3_scene());
        assert_eq!(fig3.image.unwrap().primary, crate::atlas::ImageSpec::fig3_reporter());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = SceneConfig::from_json(minimal()).unwrap();
        let reformatted = minimal().replace('\n', " ").replace("  ", " ");
        let b = SceneConfig::from_json(&reformatted).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let mut c = a.clone();
        c.seed += 1;
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn serialisation_round_trips() {
        for name in PRESET_NAMES {
            let a = SceneConfig::preset(name).unwrap();
            let b = SceneConfig::from_json(&a.to_json_pretty()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn readout_overrides() {
        let r = ReadoutConfig { c_spn: Some(20.0), ..ReadoutConfig::of_kind(ReadoutKind::Pl) }.resolve("r").unwrap();
        assert_eq!(r.c_spn(1e-6), 20.0);
        let r = ReadoutConfig { floor: Some(3.0), ..ReadoutConfig::of_kind(ReadoutKind::Scc) }.resolve("r").unwrap();
        assert!(matches!(r.penalty, NoisePenalty::Saturating { floor, knee } if floor == 3.0 && knee == 30e-6));
        let bad = ReadoutConfig { c_spn: Some(2.0), floor: Some(2.0), ..ReadoutConfig::of_kind(ReadoutKind::Scc) };
        assert!(bad.resolve("r").is_err());
        let bad = ReadoutConfig { c_spn: Some(0.3), ..ReadoutConfig::of_kind(ReadoutKind::Pl) };
        assert!(bad.resolve("r").is_err());
    }

    #[test]
    fn time_grids() {
        let g = TimeGrid::Range { start: q("0 us"), stop: q("10 us"), points: 11, scale: AxisScale::Linear };
        let v = time_grid(&g, "t").unwrap();
        assert_eq!(v.len(), 11);
        assert!((v[10] - 10e-6).abs() < 1e-18);
        let g = TimeGrid::Values(vec![]);
        assert!(time_grid(&g, "t").unwrap().is_empty());
        let g = TimeGrid::Range { start: q("0 us"), stop: q("10 us"), points: 3, scale: AxisScale::Log };
        assert!(time_grid(&g, "t").is_err());
    }
}
