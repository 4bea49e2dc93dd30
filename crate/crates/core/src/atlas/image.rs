//! Simulated scanning images of a single target.
//!
//! The sensor (reporter or NV) is rastered over a square grid in the plane
//! z = 0 with the target `sensor_height_nm` below it. Each pixel records the
//! induced relaxation rate ΔΓ₁ and the dwell an adaptive two-point rate
//! estimator needs to reach relative standard error ε on ΔΓ₁.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{crossing_fwhm, fit_lorentzian, LineFit};
use super::peak::peak_offset;
use super::Grid;
use crate::budget::{PlanSettings, ProtocolPhysics, ReadoutModel};
use crate::constants::MAGIC_ANGLE;
use crate::error::{Error, Result};
use crate::optimize::minimize_log_bounded;
use crate::scene::{Protocol, RatePair, Scene, SceneParams};
use crate::spin::{axis_from_angles, induced_rate, NoiseBath, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSpec {
    /// Side length of the scanned square, nm.
    pub extent_nm: f64,
    /// Pixels per side.
    pub pixels: usize,
    /// Sensor-to-target vertical distance, nm.
    pub sensor_height_nm: f64,
    /// Target relative standard error on ΔΓ₁.
    pub eps: f64,
    pub protocol: Protocol,
    /// Pixels with ΔΓ₁ below `floor_frac` × the sensor's intrinsic rate get
    /// the dwell of the floor rate and are flagged.
    pub floor_frac: f64,
    /// Lateral target position, nm.
    pub target_xy: [f64; 2],
    pub readout: ReadoutModel,
    pub settings: PlanSettings,
}

impl ImageSpec {
    /// Reporter scanned 2 nm above the target, 30 nm × 30 nm at 64 px.
    pub fn fig3_reporter() -> Self {
        ImageSpec {
            extent_nm: 30.0,
            pixels: 64,
            sensor_height_nm: 2.0,
            eps: 0.1,
            protocol: Protocol::Reporter,
            floor_frac: 0.1,
            target_xy: [0.0, 0.0],
            readout: ReadoutModel::scc(),
            settings: PlanSettings::default(),
        }
    }

    /// The NV 4.5 nm below the surface scanned over the same target.
    pub fn fig3_nv() -> Self {
        ImageSpec { sensor_height_nm: 6.5, protocol: Protocol::Direct, ..Self::fig3_reporter() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pixels == 0 {
            return Err(Error::invalid("image.pixels", "must be >= 1"));
        }
        if !(self.extent_nm > 0.0 && self.extent_nm.is_finite()) {
            return Err(Error::invalid("image.extent", "must be positive"));
        }
        if !(self.sensor_height_nm > 0.0) {
            return Err(Error::invalid("image.height", "must be positive"));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::invalid("image.eps", "must lie in (0, 1)"));
        }
        if !(self.floor_frac > 0.0 && self.floor_frac.is_finite()) {
            return Err(Error::invalid("image.floor_frac", "must be positive"));
        }
        if !self.target_xy.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("image.target_xy", "must be finite"));
        }
        self.readout.validate("image.readout")
    }

    /// Pixel centre coordinates along either axis, nm. Pixel `pixels / 2`
    /// sits at 0.
    pub fn coordinates(&self) -> Vec<f64> {
        let pitch = self.extent_nm / self.pixels as f64;
        let mid = (self.pixels / 2) as f64;
        (0..self.pixels).map(|i| (i as f64 - mid) * pitch).collect()
    }
}

/// Scene used for the image studies: [`SceneParams::fig1c`] with a reporter
/// T1' of 100 µs.
pub fn fig3_scene() -> SceneParams {
    let mut p = SceneParams::fig1c();
    p.reporter.t1 = 100e-6;
    p
}

/// [`fig3_scene`] with the NV axis tilted by the magic angle towards `azimuth_deg`.
pub fn fig3_tilted_scene(azimuth_deg: f64) -> SceneParams {
    let mut p = fig3_scene();
    p.nv.axis = axis_from_angles(MAGIC_ANGLE, azimuth_deg.to_radians());
    p
}

/// Optimised two-point estimator for one pixel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelDwell {
    /// Total dwell, s.
    pub dwell: f64,
    /// Second probe time (the first is 0), s.
    pub probe_time: f64,
    pub t_read: f64,
    pub c_spn: f64,
    /// Expected signals at the two probe times.
    pub signal0: f64,
    pub signal1: f64,
    /// Repetition lengths at the two probe times, s.
    pub t_seq0: f64,
    pub t_seq1: f64,
    /// Time spent at each probe time, s. Sums to `dwell`.
    pub time0: f64,
    pub time1: f64,
}

/// Dwell for the estimator Γ̂ = ln(S₀/S_τ)/τ to reach σ_Γ ≤ ε·ΔΓ₁.
///
/// With per-repetition signal variance C²/2, time T₀ at probe 0 and T₁ at
/// probe τ, Var Γ̂ = A/T₀ + B/T₁ where A = C²t₀/(2τ²S₀²) and
/// B = C²t₁/(2τ²S_τ²). The optimal split gives T = (√A + √B)²/(εΔΓ₁)²,
/// which is then minimised over τ and the readout duration.
pub fn adaptive_pixel_time(
    delta_gamma: f64,
    scene: &Scene,
    protocol: Protocol,
    eps: f64,
    readout: &ReadoutModel,
    settings: &PlanSettings,
) -> Result<PixelDwell> {
    if !(delta_gamma > 0.0 && delta_gamma.is_finite()) {
        return Err(Error::invalid("delta_gamma", "must be positive"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid("eps", "must lie in (0, 1)"));
    }
    let base = scene.sensor(protocol).intrinsic_rate();
    let rate = base + delta_gamma;
    let phys = ProtocolPhysics {
        protocol,
        rates: RatePair { baseline: base, with_target: rate },
        sequence: scene.sequence.clone(),
        nv: scene.nv.clone(),
        coupling_hz: scene.coupling_hz,
    };
    let s0 = phys.signal(0.0, rate);
    // √A + √B up to the common factor C/(√2·τ)
    let root_sum = |tau: f64, t_read: f64| {
        (phys.duration(readout, t_read, 0.0)).sqrt() / s0
            + (phys.duration(readout, t_read, tau)).sqrt() / phys.signal(tau, rate)
    };
    let cost = |tau: f64, t_read: f64| {
        let c = readout.c_spn(t_read);
        let r = root_sum(tau, t_read);
        c * c / (2.0 * tau * tau) * r * r
    };
    let best_read = |tau: f64| {
        if readout.is_tunable() {
            let m = minimize_log_bounded(|t| cost(tau, t), readout.t_read_min, readout.t_read_max, settings.read_grid, settings.log_tol);
            (m.x, m.f)
        } else {
            (readout.t_read, cost(tau, readout.t_read))
        }
    };
    let m = minimize_log_bounded(|tau| best_read(tau).1, settings.probe_lo / rate, settings.probe_hi / rate, settings.probe_grid, settings.log_tol);
    if !m.f.is_finite() {
        return Err(Error::Undetectable(format!("{protocol} protocol: no usable probe time")));
    }
    let tau = m.x;
    let (t_read, _) = best_read(tau);
    let c_spn = readout.c_spn(t_read);
    let t_seq0 = phys.duration(readout, t_read, 0.0);
    let t_seq1 = phys.duration(readout, t_read, tau);
    let signal1 = phys.signal(tau, rate);
    let k = c_spn / (2.0f64.sqrt() * tau);
    let (ra, rb) = (k * t_seq0.sqrt() / s0, k * t_seq1.sqrt() / signal1);
    let target_var = (eps * delta_gamma).powi(2);
    let time0 = ra * (ra + rb) / target_var;
    let time1 = rb * (ra + rb) / target_var;
    Ok(PixelDwell {
        dwell: time0 + time1,
        probe_time: tau,
        t_read,
        c_spn,
        signal0: s0,
        signal1,
        t_seq0,
        t_seq1,
        time0,
        time1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineAxis {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageResult {
    pub spec: ImageSpec,
    /// Pixel centre coordinates, nm (same for both axes).
    pub coords: Vec<f64>,
    /// ΔΓ₁ per pixel, s⁻¹, indexed `[ix][iy]`.
    pub delta_gamma: Grid,
    /// Dwell per pixel, s.
    pub dwell: Grid,
    /// Pixels clamped to the floor dwell.
    pub flagged: Vec<bool>,
    pub floor_rate: f64,
    /// Sum of all dwells, s.
    pub total_time: f64,
    pub linecut: Option<LineFit>,
    /// Fitted FWHM along x, falling back to the half-max crossing width.
    pub fwhm_nm: Option<f64>,
    pub peak_offset_nm: Option<Vec3>,
}

impl ImageResult {
    pub fn peak_delta_gamma(&self) -> f64 {
        self.delta_gamma.data.iter().copied().fold(0.0, f64::max)
    }
}

/// Raster `spec` over the target of `scene`.
pub fn scan_image(spec: &ImageSpec, scene: &Scene) -> Result<ImageResult> {
    spec.validate()?;
    let n = spec.pixels;
    let coords = spec.coordinates();
    let sensor = scene.sensor(spec.protocol).clone();
    let target_pos = Vec3::new(spec.target_xy[0], spec.target_xy[1], -spec.sensor_height_nm);
    let floor_rate = spec.floor_frac * sensor.intrinsic_rate();
    let floor = adaptive_pixel_time(floor_rate, scene, spec.protocol, spec.eps, &spec.readout, &spec.settings)?;

    let pixels: Vec<(f64, f64, bool)> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (ix, iy) = (k / n, k % n);
            let dg = match &scene.target {
                None => 0.0,
                Some(t) => {
                    let s = sensor.clone().at(Vec3::new(coords[ix], coords[iy], 0.0));
                    let target = t.spin.clone().at(target_pos);
                    induced_rate(&s, &NoiseBath::from_target(&target, &s, t.tau_c)?)
                }
            };
            if dg < floor_rate {
                return Ok((dg, floor.dwell, true));
            }
            let d = adaptive_pixel_time(dg, scene, spec.protocol, spec.eps, &spec.readout, &spec.settings)?;
            Ok((dg, d.dwell, false))
        })
        .collect::<Result<_>>()?;

    let delta_gamma = Grid::new(n, n, pixels.iter().map(|p| p.0).collect());
    let dwell = Grid::new(n, n, pixels.iter().map(|p| p.1).collect());
    let flagged: Vec<bool> = pixels.iter().map(|p| p.2).collect();
    let total_time = dwell.data.iter().sum();
    let mut image = ImageResult {
        spec: spec.clone(),
        coords,
        delta_gamma,
        dwell,
        flagged,
        floor_rate,
        total_time,
        linecut: None,
        fwhm_nm: None,
        peak_offset_nm: None,
    };
    if image.peak_delta_gamma() > 0.0 {
        let (xs, ys) = linecut(&image, LineAxis::X);
        image.linecut = fit_lorentzian(&xs, &ys).ok().filter(|f| f.converged);
        image.fwhm_nm = image.linecut.as_ref().map(|f| f.fwhm).or_else(|| crossing_fwhm(&xs, &ys));
        let truth = Vec3::new(spec.target_xy[0], spec.target_xy[1], 0.0);
        image.peak_offset_nm = peak_offset(&image.delta_gamma, &image.coords, truth);
    }
    Ok(image)
}

/// Samples of ΔΓ₁ along `axis` through the brightest pixel.
pub fn linecut(image: &ImageResult, axis: LineAxis) -> (Vec<f64>, Vec<f64>) {
    let g = &image.delta_gamma;
    let k = (0..g.data.len()).fold(0, |b, k| if g.data[k] > g.data[b] { k } else { b });
    let (bx, by) = (k / g.ny, k % g.ny);
    let ys = match axis {
        LineAxis::X => (0..g.nx).map(|i| g.get(i, by)).collect(),
        LineAxis::Y => (0..g.ny).map(|j| g.get(bx, j)).collect(),
    };
    (image.coords.clone(), ys)
}

/// Lorentzian fit of the line cut along `axis` through the image maximum.
pub fn fit_linecut(image: &ImageResult, axis: LineAxis) -> Result<LineFit> {
    let (xs, ys) = linecut(image, axis);
    fit_lorentzian(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn small(spec: ImageSpec, pixels: usize) -> ImageSpec {
        ImageSpec { pixels, ..spec }
    }

    fn scene() -> Scene {
        fig3_scene().build().unwrap()
    }

    #[test]
    fn dwell_scales_as_inverse_eps_squared() {
        let s = scene();
        let r = ReadoutModel::scc();
        let st = PlanSettings::default();
        let a = adaptive_pixel_time(5e4, &s, Protocol::Reporter, 0.1, &r, &st).unwrap();
        let b = adaptive_pixel_time(5e4, &s, Protocol::Reporter, 0.05, &r, &st).unwrap();
        assert!((b.dwell / a.dwell - 4.0).abs() < 1e-9);
        assert_eq!(a.probe_time, b.probe_time);
        assert!((a.time0 + a.time1 - a.dwell).abs() <= 1e-12 * a.dwell);
    }

    #[test]
    fn dwell_decreases_with_delta_gamma() {
        let s = scene();
        let st = PlanSettings::default();
        // the reporter loses visibility once it relaxes within the DEER
        // blocks, so its dwell only falls while ΔΓ₁·τ_NV stays small
        let reporter_cap = 0.05 / s.sequence.tau_nv;
        for (protocol, cap) in [(Protocol::Reporter, reporter_cap), (Protocol::Direct, f64::INFINITY)] {
            let base = s.sensor(protocol).intrinsic_rate();
            let mut prev = f64::INFINITY;
            for k in 0..20 {
                let dg = base * 0.05 * 1.6f64.powi(k);
                if dg > cap {
                    break;
                }
                let d = adaptive_pixel_time(dg, &s, protocol, 0.1, &ReadoutModel::scc(), &st).unwrap().dwell;
                assert!(d < prev, "{protocol}: {dg} -> {d}");
                prev = d;
            }
        }
    }

    #[test]
    fn reporter_dwell_turns_over_at_fast_relaxation() {
        let s = scene();
        let st = PlanSettings::default();
        let dwell = |dg: f64| adaptive_pixel_time(dg, &s, Protocol::Reporter, 0.1, &ReadoutModel::scc(), &st).unwrap().dwell;
        let fast = 1.0 / s.sequence.tau_nv;
        assert!(dwell(0.5 * fast) > dwell(0.05 * fast));
    }

    #[test]
    fn dwell_rejects_non_positive_rate() {
        let s = scene();
        let r = adaptive_pixel_time(0.0, &s, Protocol::Reporter, 0.1, &ReadoutModel::scc(), &PlanSettings::default());
        assert!(matches!(r, Err(Error::Invalid { .. })));
    }

    // Synthetic shots: each repetition reads the expected signal plus
    // Gaussian noise of variance C²/2; the sum of N repetitions is drawn
    // exactly as one normal. The spread of the resulting estimates is
    // compared with the target ε.
    fn monte_carlo_eps(d: &PixelDwell, delta_gamma: f64, draws: usize, seed: u64) -> f64 {
        let n0 = d.time0 / d.t_seq0;
        let n1 = d.time1 / d.t_seq1;
        let var = d.c_spn * d.c_spn / 2.0;
        let m0 = Normal::new(d.signal0, (var / n0).sqrt()).unwrap();
        let m1 = Normal::new(d.signal1, (var / n1).sqrt()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let est: Vec<f64> = (0..draws)
            .map(|_| (m0.sample(&mut rng) / m1.sample(&mut rng)).ln() / d.probe_time)
            .collect();
        let mean = est.iter().sum::<f64>() / draws as f64;
        let var_est = est.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        var_est.sqrt() / delta_gamma
    }

    #[test]
    fn dwell_matches_synthetic_shot_simulation() {
        let s = scene();
        let st = PlanSettings::default();
        for (protocol, dg) in [(Protocol::Reporter, 2e4), (Protocol::Reporter, 3e5), (Protocol::Direct, 600.0)] {
            for readout in [ReadoutModel::scc(), ReadoutModel::pl()] {
                let d = adaptive_pixel_time(dg, &s, protocol, 0.1, &readout, &st).unwrap();
                let eps = monte_carlo_eps(&d, dg, 40_000, 7);
                // time to reach ε scales as ε², so compare dwells
                let ratio = (eps / 0.1).powi(2);
                assert!((ratio - 1.0).abs() < 0.10, "{protocol} {:?}: MC/closed form = {ratio}", readout.kind);
            }
        }
    }

    #[test]
    fn empty_scene_gives_flat_flagged_image() {
        let s = fig3_scene().without_target().build().unwrap();
        let img = scan_image(&small(ImageSpec::fig3_reporter(), 8), &s).unwrap();
        assert!(img.delta_gamma.data.iter().all(|&v| v == 0.0));
        assert!(img.flagged.iter().all(|&f| f));
        assert!(img.fwhm_nm.is_none() && img.peak_offset_nm.is_none());
        assert!(img.dwell.data.iter().all(|&d| d > 0.0));
    }

    #[test]
    fn total_is_exact_sum_and_peak_has_minimum_dwell() {
        let s = scene();
        // 3 nm keeps the reporter's peak rate below the visibility turnover
        let reporter = ImageSpec { sensor_height_nm: 3.0, ..small(ImageSpec::fig3_reporter(), 24) };
        for spec in [reporter, small(ImageSpec::fig3_nv(), 24)] {
            let img = scan_image(&spec, &s).unwrap();
            let sum: f64 = img.dwell.data.iter().sum();
            assert_eq!(img.total_time, sum);
            let n = img.dwell.data.len();
            let k = (0..n).fold(0, |b, k| if img.delta_gamma.data[k] > img.delta_gamma.data[b] { k } else { b });
            let min = img.dwell.data.iter().copied().fold(f64::INFINITY, f64::min);
            assert_eq!(img.dwell.data[k], min);
        }
    }

    #[test]
    fn values_do_not_depend_on_eps() {
        let s = scene();
        let a = scan_image(&small(ImageSpec::fig3_reporter(), 8), &s).unwrap();
        let b = scan_image(&ImageSpec { eps: 0.02, ..small(ImageSpec::fig3_reporter(), 8) }, &s).unwrap();
        assert_eq!(a.delta_gamma, b.delta_gamma);
        assert!((b.total_time / a.total_time - 25.0).abs() < 1e-9);
    }

    #[test]
    fn single_pixel_image() {
        let s = scene();
        let img = scan_image(&small(ImageSpec::fig3_reporter(), 1), &s).unwrap();
        assert_eq!(img.coords, vec![0.0]);
        assert_eq!(img.total_time, img.dwell.data[0]);
        let d = adaptive_pixel_time(img.delta_gamma.data[0], &s, Protocol::Reporter, 0.1, &ReadoutModel::scc(), &PlanSettings::default()).unwrap();
        assert_eq!(d.dwell, img.total_time);
    }

    #[test]
    fn normal_axis_peak_sits_on_target() {
        let s = scene();
        let spec = ImageSpec { target_xy: [0.0, 0.0], ..small(ImageSpec::fig3_reporter(), 24) };
        let o = scan_image(&spec, &s).unwrap().peak_offset_nm.unwrap();
        let pitch = spec.extent_nm / spec.pixels as f64;
        assert!(o.norm() < 0.1 * pitch, "{o:?}");
    }

    #[test]
    fn tilted_axis_shifts_peak_along_azimuth() {
        let spec = small(ImageSpec::fig3_reporter(), 32);
        let pitch = spec.extent_nm / spec.pixels as f64;
        let a = scan_image(&spec, &fig3_tilted_scene(0.0).build().unwrap()).unwrap().peak_offset_nm.unwrap();
        let b = scan_image(&spec, &fig3_tilted_scene(180.0).build().unwrap()).unwrap().peak_offset_nm.unwrap();
        assert!(a.x.abs() > 0.1 * pitch, "{a:?}");
        assert!(a.y.abs() < 0.1 * a.x.abs());
        assert!((a.x + b.x).abs() < 1e-6 * a.x.abs() && (a.y + b.y).abs() < 1e-6 * pitch.max(a.y.abs()));
    }
}
