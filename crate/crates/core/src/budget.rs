//! Shot-noise measurement budgets.
//!
//! With per-repetition signal noise variance C_SPN²/2, detecting a signal
//! change ΔS at signal-to-noise SNR takes
//! `t = SNR²·C_SPN²/(2ΔS²)·t_seq`. Each protocol picks its probe time (and
//! readout duration, when the readout trades time for noise) to minimise t.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::minimize_log_bounded;
use crate::protocol::{duration_with_readout, nv_t1_signal, reporter_signal, SequenceSpec};
use crate::scene::{Protocol, RatePair, Scene};
use crate::spin::SpinSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutKind {
    /// 532 nm photoluminescence readout.
    Pl,
    /// Spin-to-charge conversion readout.
    Scc,
}

/// C_SPN as a function of readout duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum NoisePenalty {
    Constant { c_spn: f64 },
    /// floor·√(1 + knee/t_read): approaches `floor` for readouts ≫ `knee`.
    Saturating { floor: f64, knee: f64 },
}

impl NoisePenalty {
    pub fn at(&self, t_read: f64) -> f64 {
        match *self {
            NoisePenalty::Constant { c_spn } => c_spn,
            NoisePenalty::Saturating { floor, knee } => floor * (1.0 + knee / t_read).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModel {
    pub kind: ReadoutKind,
    /// Nominal readout duration, s.
    pub t_read: f64,
    /// Range the optimiser may choose t_read from. Equal bounds pin it.
    pub t_read_min: f64,
    pub t_read_max: f64,
    pub penalty: NoisePenalty,
    /// Readout-specific preparation (e.g. charge-state repump), s.
    pub t_init: f64,
}

impl ReadoutModel {
    /// PL readout: 350 ns window, C_SPN = 35.
    pub fn pl() -> Self {
        ReadoutModel {
            kind: ReadoutKind::Pl,
            t_read: 350e-9,
            t_read_min: 350e-9,
            t_read_max: 350e-9,
            penalty: NoisePenalty::Constant { c_spn: 35.0 },
            t_init: 0.0,
        }
    }

    /// SCC readout: C_SPN = 2·√(1 + 30 µs/t_read), t_read ∈ [1 µs, 100 µs].
    pub fn scc() -> Self {
        ReadoutModel {
            kind: ReadoutKind::Scc,
            t_read: 30e-6,
            t_read_min: 1e-6,
            t_read_max: 100e-6,
            penalty: NoisePenalty::Saturating { floor: 2.0, knee: 30e-6 },
            t_init: 1e-6,
        }
    }

    pub fn c_spn(&self, t_read: f64) -> f64 {
        self.penalty.at(t_read)
    }

    pub fn is_tunable(&self) -> bool {
        self.t_read_max > self.t_read_min
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        let p = |f: &str| format!("{path}.{f}");
        if !(self.t_read > 0.0 && self.t_read_min > 0.0) {
            return Err(Error::invalid(p("t_read"), "must be positive"));
        }
        if !(self.t_read_min <= self.t_read && self.t_read <= self.t_read_max) {
            return Err(Error::invalid(p("t_read"), "must lie within [t_read_min, t_read_max]"));
        }
        if !(self.t_init >= 0.0) {
            return Err(Error::invalid(p("t_init"), "must be >= 0"));
        }
        match self.penalty {
            NoisePenalty::Constant { c_spn } if !(c_spn >= 1.0) => {
                Err(Error::invalid(p("c_spn"), "must be >= 1"))
            }
            NoisePenalty::Saturating { floor, knee } if !(floor >= 1.0 && knee >= 0.0) => Err(
                Error::invalid(p("c_spn"), "floor must be >= 1 and knee >= 0"),
            ),
            _ => Ok(()),
        }
    }
}

/// Readout used by each protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutPair {
    pub direct: ReadoutModel,
    pub reporter: ReadoutModel,
}

impl ReadoutPair {
    pub fn both(r: ReadoutModel) -> Self {
        ReadoutPair { direct: r.clone(), reporter: r }
    }

    pub fn for_protocol(&self, p: Protocol) -> &ReadoutModel {
        match p {
            Protocol::Direct => &self.direct,
            Protocol::Reporter => &self.reporter,
        }
    }
}

impl Default for ReadoutPair {
    fn default() -> Self {
        ReadoutPair::both(ReadoutModel::scc())
    }
}

/// `SNR²·C_SPN²/(2ΔS²)·t_seq`, s.
pub fn measurement_time(delta_s: f64, snr: f64, c_spn: f64, t_seq: f64) -> Result<f64> {
    if delta_s == 0.0 {
        return Err(Error::Undetectable("signal change is zero".into()));
    }
    if !(delta_s > 0.0 && delta_s.is_finite()) {
        return Err(Error::invalid("delta_s", "must be positive"));
    }
    if !(snr > 0.0) {
        return Err(Error::invalid("snr", "must be positive"));
    }
    if !(c_spn >= 1.0) {
        return Err(Error::invalid("c_spn", "must be >= 1"));
    }
    if !(t_seq > 0.0) {
        return Err(Error::invalid("t_seq", "must be positive"));
    }
    Ok(snr * snr * c_spn * c_spn / (2.0 * delta_s * delta_s) * t_seq)
}

/// Everything a protocol's signal and timing depend on.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolPhysics {
    pub protocol: Protocol,
    pub rates: RatePair,
    pub sequence: SequenceSpec,
    pub nv: SpinSpec,
    pub coupling_hz: f64,
}

impl ProtocolPhysics {
    pub fn from_scene(scene: &Scene, protocol: Protocol) -> Result<Self> {
        Ok(ProtocolPhysics {
            protocol,
            rates: scene.rates(protocol)?,
            sequence: scene.sequence.clone(),
            nv: scene.nv.clone(),
            coupling_hz: scene.coupling_hz,
        })
    }

    /// Protocol signal at probe time `probe` for a sensor relaxing at `rate`.
    pub fn signal(&self, probe: f64, rate: f64) -> f64 {
        match self.protocol {
            Protocol::Direct => nv_t1_signal(probe, rate),
            Protocol::Reporter => {
                reporter_signal(&self.sequence.with_tau_r(probe), 1.0 / rate, &self.nv, self.coupling_hz)
            }
        }
    }

    pub fn delta_signal(&self, probe: f64) -> f64 {
        if self.rates.with_target == self.rates.baseline {
            return 0.0;
        }
        (self.signal(probe, self.rates.baseline) - self.signal(probe, self.rates.with_target)).abs()
    }

    pub fn duration(&self, readout: &ReadoutModel, t_read: f64, probe: f64) -> f64 {
        duration_with_readout(self.protocol, &self.sequence, t_read, readout.t_init, probe)
    }

    /// Probe-time search interval.
    pub fn probe_bounds(&self, settings: &PlanSettings) -> (f64, f64) {
        let fast = self.rates.baseline.max(self.rates.with_target);
        let slow = self.rates.baseline.min(self.rates.with_target);
        (settings.probe_lo / fast, settings.probe_hi / slow)
    }
}

/// |S_baseline − S_target| at `probe_time` for `protocol` in `scene`.
pub fn delta_signal(protocol: Protocol, scene: &Scene, probe_time: f64) -> Result<f64> {
    Ok(ProtocolPhysics::from_scene(scene, protocol)?.delta_signal(probe_time))
}

/// Optimiser resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanSettings {
    /// Log-grid points seeding the probe-time search.
    pub probe_grid: usize,
    /// Log-grid points seeding the readout-duration search.
    pub read_grid: usize,
    /// Golden-section tolerance in ln(time).
    pub log_tol: f64,
    /// Probe interval is [probe_lo / fastest rate, probe_hi / slowest rate].
    pub probe_lo: f64,
    pub probe_hi: f64,
}

impl Default for PlanSettings {
    fn default() -> Self {
        PlanSettings {
            probe_grid: 48,
            read_grid: 12,
            log_tol: 1e-6,
            probe_lo: 1e-3,
            probe_hi: 30.0,
        }
    }
}

impl PlanSettings {
    pub fn refined(self, factor: usize) -> Self {
        PlanSettings {
            probe_grid: self.probe_grid * factor,
            read_grid: self.read_grid * factor,
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementPlan {
    pub protocol: Protocol,
    /// τ_r for the reporter protocol, τ for direct relaxometry, s.
    pub probe_time: f64,
    pub readout: ReadoutKind,
    pub t_read: f64,
    pub c_spn: f64,
    pub delta_s: f64,
    pub t_seq: f64,
    pub t_total: f64,
}

/// Best readout duration and its cost c²·t_seq for a fixed probe time.
fn best_readout(phys: &ProtocolPhysics, readout: &ReadoutModel, probe: f64, settings: &PlanSettings) -> (f64, f64) {
    let cost = |t: f64| {
        let c = readout.c_spn(t);
        c * c * phys.duration(readout, t, probe)
    };
    if readout.is_tunable() {
        let m = minimize_log_bounded(cost, readout.t_read_min, readout.t_read_max, settings.read_grid, settings.log_tol);
        (m.x, m.f)
    } else {
        (readout.t_read, cost(readout.t_read))
    }
}

/// Minimise the measurement time of one protocol over probe time and
/// readout duration.
pub fn optimize_plan(phys: &ProtocolPhysics, readout: &ReadoutModel, snr: f64, settings: &PlanSettings) -> Result<MeasurementPlan> {
    if phys.rates.with_target == phys.rates.baseline {
        return Err(Error::Undetectable(format!("{} protocol: target does not change the rate", phys.protocol)));
    }
    let objective = |probe: f64| {
        let ds = phys.delta_signal(probe);
        if ds <= 0.0 {
            return f64::INFINITY;
        }
        best_readout(phys, readout, probe, settings).1 / (ds * ds)
    };
    let (lo, hi) = phys.probe_bounds(settings);
    let best = minimize_log_bounded(objective, lo, hi, settings.probe_grid, settings.log_tol);
    if !best.f.is_finite() {
        return Err(Error::Undetectable(format!("{} protocol: no probe time gives a signal", phys.protocol)));
    }
    plan_at(phys, readout, snr, best.x, settings)
}

/// Plan for a fixed probe time with the readout duration optimised.
pub fn plan_at(phys: &ProtocolPhysics, readout: &ReadoutModel, snr: f64, probe: f64, settings: &PlanSettings) -> Result<MeasurementPlan> {
    let (t_read, _) = best_readout(phys, readout, probe, settings);
    let delta_s = phys.delta_signal(probe);
    let c_spn = readout.c_spn(t_read);
    let t_seq = phys.duration(readout, t_read, probe);
    Ok(MeasurementPlan {
        protocol: phys.protocol,
        probe_time: probe,
        readout: readout.kind,
        t_read,
        c_spn,
        delta_s,
        t_seq,
        t_total: measurement_time(delta_s, snr, c_spn, t_seq)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnhancementFlag {
    /// Direct relaxometry cannot see the target: ratio is +∞.
    DirectUndetectable,
    /// Reporter relaxometry cannot see the target: ratio is 0.
    ReporterUndetectable,
    /// Neither protocol sees the target: ratio is NaN.
    BothUndetectable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedEnhancement {
    /// t_NV / t_R.
    pub ratio: f64,
    pub flag: Option<EnhancementFlag>,
    pub direct: Option<MeasurementPlan>,
    pub reporter: Option<MeasurementPlan>,
}

fn undetectable_as_none(r: Result<MeasurementPlan>) -> Result<Option<MeasurementPlan>> {
    match r {
        Ok(p) => Ok(Some(p)),
        Err(Error::Undetectable(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// t_direct / t_reporter for two independently optimised protocols.
pub fn enhancement_between(
    direct: (&ProtocolPhysics, &ReadoutModel),
    reporter: (&ProtocolPhysics, &ReadoutModel),
    snr: f64,
    settings: &PlanSettings,
) -> Result<SpeedEnhancement> {
    let d = undetectable_as_none(optimize_plan(direct.0, direct.1, snr, settings))?;
    let r = undetectable_as_none(optimize_plan(reporter.0, reporter.1, snr, settings))?;
    let (ratio, flag) = match (&d, &r) {
        (Some(d), Some(r)) => (d.t_total / r.t_total, None),
        (None, Some(_)) => (f64::INFINITY, Some(EnhancementFlag::DirectUndetectable)),
        (Some(_), None) => (0.0, Some(EnhancementFlag::ReporterUndetectable)),
        (None, None) => (f64::NAN, Some(EnhancementFlag::BothUndetectable)),
    };
    Ok(SpeedEnhancement { ratio, flag, direct: d, reporter: r })
}

/// Speed enhancement t_NV/t_R of reporter over direct relaxometry in `scene`.
pub fn speed_enhancement(scene: &Scene, readouts: &ReadoutPair, snr: f64, settings: &PlanSettings) -> Result<SpeedEnhancement> {
    let d = ProtocolPhysics::from_scene(scene, Protocol::Direct)?;
    let r = ProtocolPhysics::from_scene(scene, Protocol::Reporter)?;
    enhancement_between((&d, &readouts.direct), (&r, &readouts.reporter), snr, settings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimize::log_grid;
    use crate::scene::SceneParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fig1c() -> Scene {
        SceneParams::fig1c().build().unwrap()
    }

    #[test]
    fn measurement_time_examples() {
        let t = measurement_time(0.1, 1.0, 1.0, 10e-6).unwrap();
        assert!((t - 500e-6).abs() < 1e-18);
        let t2 = measurement_time(0.1, 1.0, 2.0, 10e-6).unwrap();
        assert!((t2 / t - 4.0).abs() < 1e-12);
        let t3 = measurement_time(0.05, 1.0, 1.0, 10e-6).unwrap();
        assert!((t3 / t - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_signal_change_is_undetectable_not_invalid() {
        assert!(matches!(measurement_time(0.0, 1.0, 1.0, 1e-6), Err(Error::Undetectable(_))));
        assert!(matches!(measurement_time(-0.1, 1.0, 1.0, 1e-6), Err(Error::Invalid { .. })));
        assert!(matches!(measurement_time(0.1, 1.0, 0.5, 1e-6), Err(Error::Invalid { .. })));
    }

    #[test]
    fn measurement_time_scalings_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let ds = rng.random_range(1e-4..1.0);
            let snr = rng.random_range(0.1..10.0);
            let c = rng.random_range(1.0..50.0);
            let ts = rng.random_range(1e-7..1e-2);
            let t = measurement_time(ds, snr, c, ts).unwrap();
            let expect = snr * snr * c * c / (2.0 * ds * ds) * ts;
            assert!((t - expect).abs() <= 4.0 * f64::EPSILON * expect);
            let t2 = measurement_time(ds, 2.0 * snr, c, 3.0 * ts).unwrap();
            assert!((t2 / t - 12.0).abs() < 1e-12);
        }
    }

    #[test]
    fn readout_models_validate() {
        ReadoutModel::pl().validate("readout").unwrap();
        let scc = ReadoutModel::scc();
        scc.validate("readout").unwrap();
        let grid = log_grid(scc.t_read_min, scc.t_read_max, 50);
        assert!(grid.windows(2).all(|w| scc.c_spn(w[1]) <= scc.c_spn(w[0])));
        assert!(grid.iter().all(|&t| scc.c_spn(t) >= 1.0));
        let bad = ReadoutModel { penalty: NoisePenalty::Constant { c_spn: 0.5 }, ..ReadoutModel::pl() };
        assert!(bad.validate("readout").is_err());
    }

    #[test]
    fn delta_signal_zero_without_target_and_at_infinity() {
        let bare = SceneParams::fig1c().without_target().build().unwrap();
        assert_eq!(delta_signal(Protocol::Reporter, &bare, 10e-6).unwrap(), 0.0);
        assert_eq!(delta_signal(Protocol::Direct, &bare, 1e-3).unwrap(), 0.0);
        let s = fig1c();
        assert!(delta_signal(Protocol::Reporter, &s, 10.0).unwrap() < 1e-100);
        assert!(delta_signal(Protocol::Direct, &s, 1e3).unwrap() < 1e-100);
    }

    #[test]
    fn reporter_delta_peaks_at_intermediate_wait() {
        let s = fig1c();
        let step = 0.05e-6;
        let grid: Vec<f64> = (0..2000).map(|i| i as f64 * step).collect();
        let vals: Vec<f64> = grid.iter().map(|&t| delta_signal(Protocol::Reporter, &s, t).unwrap()).collect();
        let (imax, _) = vals.iter().enumerate().fold((0, 0.0), |a, (i, &v)| if v > a.1 { (i, v) } else { a });
        assert!(imax > 0 && imax < grid.len() - 1);
        // refine with golden section on the analytic curve; must stay within one grid step
        let phys = ProtocolPhysics::from_scene(&s, Protocol::Reporter).unwrap();
        let m = crate::optimize::golden_section(|t| -phys.delta_signal(t), grid[imax - 1], grid[imax + 1], 1e-12);
        assert!((m.x - grid[imax]).abs() <= step);
    }

    fn brute_force(phys: &ProtocolPhysics, readout: &ReadoutModel, snr: f64) -> f64 {
        let (lo, hi) = phys.probe_bounds(&PlanSettings::default());
        let reads = if readout.is_tunable() {
            log_grid(readout.t_read_min, readout.t_read_max, 400)
        } else {
            vec![readout.t_read]
        };
        let mut best = f64::INFINITY;
        for probe in log_grid(lo, hi, 1000) {
            let ds = phys.delta_signal(probe);
            if ds <= 0.0 {
                continue;
            }
            for &tr in &reads {
                let t = measurement_time(ds, snr, readout.c_spn(tr), phys.duration(readout, tr, probe)).unwrap();
                best = best.min(t);
            }
        }
        best
    }

    #[test]
    fn optimizer_agrees_with_brute_force_grid() {
        let s = fig1c();
        for protocol in [Protocol::Reporter, Protocol::Direct] {
            for readout in [ReadoutModel::pl(), ReadoutModel::scc()] {
                let phys = ProtocolPhysics::from_scene(&s, protocol).unwrap();
                let plan = optimize_plan(&phys, &readout, 1.0, &PlanSettings::default()).unwrap();
                let brute = brute_force(&phys, &readout, 1.0);
                assert!((plan.t_total / brute - 1.0).abs() < 0.01, "{protocol} {:?}: {} vs {brute}", readout.kind, plan.t_total);
                assert!(plan.t_total >= plan.t_seq);
                assert!(plan.delta_s > 0.0 && plan.delta_s <= 1.0);
            }
        }
    }

    #[test]
    fn optimizer_never_worse_than_seed_grid() {
        let s = fig1c();
        let settings = PlanSettings::default();
        let phys = ProtocolPhysics::from_scene(&s, Protocol::Direct).unwrap();
        let readout = ReadoutModel::pl();
        let plan = optimize_plan(&phys, &readout, 1.0, &settings).unwrap();
        let (lo, hi) = phys.probe_bounds(&settings);
        for probe in log_grid(lo, hi, settings.probe_grid) {
            let ds = phys.delta_signal(probe);
            if ds > 0.0 {
                let t = measurement_time(ds, 1.0, readout.c_spn(readout.t_read), phys.duration(&readout, readout.t_read, probe)).unwrap();
                assert!(plan.t_total <= t * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn optimal_probe_scales_inversely_with_rates() {
        let s = fig1c();
        let mut phys = ProtocolPhysics::from_scene(&s, Protocol::Direct).unwrap();
        phys.sequence.t_init = 0.0;
        phys.sequence.t_extra = 0.0;
        let readout = ReadoutModel { t_read: 0.0, t_read_min: 0.0, t_read_max: 0.0, t_init: 0.0, ..ReadoutModel::pl() };
        let settings = PlanSettings { log_tol: 1e-10, ..Default::default() };
        let p1 = optimize_plan(&phys, &readout, 1.0, &settings).unwrap();
        for alpha in [0.1, 3.0, 40.0] {
            let mut scaled = phys.clone();
            scaled.rates = phys.rates.scaled(alpha);
            let p2 = optimize_plan(&scaled, &readout, 1.0, &settings).unwrap();
            assert!((p2.probe_time * alpha / p1.probe_time - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn scc_beats_pl_for_long_direct_sequences() {
        let s = fig1c();
        let phys = ProtocolPhysics::from_scene(&s, Protocol::Direct).unwrap();
        let settings = PlanSettings::default();
        let pl = optimize_plan(&phys, &ReadoutModel::pl(), 1.0, &settings).unwrap();
        let scc = optimize_plan(&phys, &ReadoutModel::scc(), 1.0, &settings).unwrap();
        assert!(pl.c_spn > scc.c_spn);
        assert!(scc.t_total < pl.t_total);
        // SCC helps the long direct sequence more than the short reporter one
        let rep = ProtocolPhysics::from_scene(&s, Protocol::Reporter).unwrap();
        let rpl = optimize_plan(&rep, &ReadoutModel::pl(), 1.0, &settings).unwrap();
        let rscc = optimize_plan(&rep, &ReadoutModel::scc(), 1.0, &settings).unwrap();
        assert!(pl.t_total / scc.t_total > rpl.t_total / rscc.t_total);
    }

    #[test]
    fn identical_physics_gives_unit_enhancement() {
        let s = fig1c();
        let settings = PlanSettings::default();
        for protocol in [Protocol::Reporter, Protocol::Direct] {
            let phys = ProtocolPhysics::from_scene(&s, protocol).unwrap();
            let r = ReadoutModel::scc();
            let e = enhancement_between((&phys, &r), (&phys, &r), 1.0, &settings).unwrap();
            assert_eq!(e.ratio, 1.0);
            assert!(e.flag.is_none());
        }
    }

    #[test]
    fn enhancement_invariant_under_snr() {
        let s = fig1c();
        let settings = PlanSettings::default();
        let a = speed_enhancement(&s, &ReadoutPair::default(), 1.0, &settings).unwrap();
        let b = speed_enhancement(&s, &ReadoutPair::default(), 7.3, &settings).unwrap();
        assert!((a.ratio / b.ratio - 1.0).abs() < 1e-9);
    }

    #[test]
    fn missing_target_flags_both_undetectable() {
        let s = SceneParams::fig1c().without_target().build().unwrap();
        let e = speed_enhancement(&s, &ReadoutPair::default(), 1.0, &PlanSettings::default()).unwrap();
        assert_eq!(e.flag, Some(EnhancementFlag::BothUndetectable));
        assert!(e.ratio.is_nan());
        let phys = ProtocolPhysics::from_scene(&s, Protocol::Direct).unwrap();
        assert!(matches!(optimize_plan(&phys, &ReadoutModel::pl(), 1.0, &PlanSettings::default()), Err(Error::Undetectable(_))));
    }

    #[test]
    fn deep_nv_enhancement_is_order_ten_thousand() {
        let mut p = SceneParams::fig1c();
        p.nv.t2 = 100e-6;
        let settings = PlanSettings::default();
        for depth in [10.0, 11.0] {
            p.nv.depth_nm = depth;
            let e = speed_enhancement(&p.build().unwrap(), &ReadoutPair::default(), 1.0, &settings).unwrap();
            assert!((1e3..=1e5).contains(&e.ratio), "depth {depth}: {}", e.ratio);
        }
    }

    #[test]
    fn enhancement_grows_with_depth() {
        let mut p = SceneParams::fig1c();
        p.nv.t2 = 100e-6;
        let settings = PlanSettings::default();
        let mut prev = 0.0;
        for i in 0..=10 {
            p.nv.depth_nm = 5.0 + i as f64;
            let e = speed_enhancement(&p.build().unwrap(), &ReadoutPair::default(), 1.0, &settings).unwrap();
            assert!(e.ratio > prev, "depth {}: {} <= {prev}", p.nv.depth_nm, e.ratio);
            prev = e.ratio;
        }
    }
}
