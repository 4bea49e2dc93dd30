//! One function per CLI verb. Each returns the rendered output; nothing is
//! written until the whole computation has succeeded.

use std::path::Path;

use serde_json::{json, Map, Value};

use relaxometry::atlas::image::{scan_image, ImageResult};
use relaxometry::atlas::sweep::run_sweep;
use relaxometry::budget::ProtocolPhysics;
use relaxometry::config::{Resolved, SceneConfig};
use relaxometry::optimize::linear_grid;
use relaxometry::protocol::{simulate_trajectories, TrajectoryConfig};
use relaxometry::spin::transverse_field_variance;
use relaxometry::units::Dimension;
use relaxometry::{Error, Protocol, Result, SceneParams};

use crate::output::{col, envelope, jnum, jopt, num, table, to_json, Column, Format, Meta};

pub struct Context {
    pub cfg: SceneConfig,
    pub resolved: Resolved,
    pub source: String,
    pub hash: String,
    pub format: Format,
}

impl Context {
    pub fn new(cfg: SceneConfig, source: String, format: Format) -> Result<Self> {
        let resolved = cfg.resolve()?;
        let hash = cfg.hash();
        Ok(Context { cfg, resolved, source, hash, format })
    }

    fn meta(&self, command: &'static str) -> Meta {
        Meta { command, config_hash: self.hash.clone(), source: self.source.clone() }
    }

    fn scene(&self, without_target: bool) -> SceneParams {
        let s = self.resolved.scene.clone();
        if without_target {
            s.without_target()
        } else {
            s
        }
    }
}

/// Companion document written beside the primary output.
pub struct Companion {
    pub suffix: &'static str,
    /// Replaces the primary file's extension when set.
    pub extension: Option<&'static str>,
    pub text: String,
}

/// Primary document plus companion files.
pub struct Outputs {
    pub primary: String,
    pub extras: Vec<Companion>,
}

impl Outputs {
    fn single(primary: String) -> Self {
        Outputs { primary, extras: Vec::new() }
    }
}

/// Write `o` to `out` (companions beside it as `<stem>.<suffix>.<ext>`), or
/// to stdout with companions appended as further sections.
pub fn emit(o: Outputs, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, &o.primary)?;
            for c in &o.extras {
                std::fs::write(companion_path(path, c.suffix, c.extension), &c.text)?;
            }
        }
        None => {
            print!("{}", o.primary);
            for c in &o.extras {
                print!("\n# section: {}\n{}", c.suffix, c.text);
            }
        }
    }
    Ok(())
}

pub fn companion_path(path: &Path, suffix: &str, extension: Option<&str>) -> std::path::PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = extension.map(str::to_string).or_else(|| path.extension().map(|e| e.to_string_lossy().into_owned()));
    let name = match ext {
        Some(ext) => format!("{stem}.{suffix}.{ext}"),
        None => format!("{stem}.{suffix}"),
    };
    path.with_file_name(name)
}

fn unit(d: Dimension) -> &'static str {
    match d {
        Dimension::Dimensionless => "deg",
        d => d.canonical_unit(),
    }
}

pub fn rates(ctx: &Context, without_target: bool) -> Result<Outputs> {
    let scene = ctx.scene(without_target).build()?;
    let mut rows: Vec<(String, f64, &str)> = vec![
        ("nv_reporter_coupling".into(), scene.coupling_hz, "Hz"),
        ("tau_nv".into(), scene.sequence.tau_nv, "s"),
        ("reporter_x".into(), scene.reporter.position.x, "nm"),
        ("reporter_y".into(), scene.reporter.position.y, "nm"),
        ("reporter_z".into(), scene.reporter.position.z, "nm"),
    ];
    for (name, protocol) in [("reporter", Protocol::Reporter), ("nv", Protocol::Direct)] {
        let sensor = scene.sensor(protocol);
        let r = scene.rates(protocol)?;
        let variance = match &scene.target {
            Some(t) => transverse_field_variance(&t.spin, sensor)?,
            None => 0.0,
        };
        rows.push((format!("{name}_t1_intrinsic"), sensor.t1_intrinsic, "s"));
        rows.push((format!("{name}_t1"), 1.0 / r.with_target, "s"));
        rows.push((format!("{name}_induced_rate"), r.induced(), "1/s"));
        rows.push((format!("{name}_b_perp_variance"), variance, "T^2"));
    }
    let meta = ctx.meta("rates");
    if ctx.format == Format::Json {
        let mut doc = envelope(&meta, &[]);
        let units: Map<String, Value> = rows.iter().map(|(n, _, u)| (n.clone(), json!(u))).collect();
        let values: Map<String, Value> = rows.iter().map(|(n, v, _)| (n.clone(), jnum(*v))).collect();
        doc.insert("units".into(), Value::Object(units));
        doc.insert("values".into(), Value::Object(values));
        return Ok(Outputs::single(to_json(doc)));
    }
    let columns = [col("quantity", "-"), col("value", "see unit"), col("unit", "-")];
    let body: Vec<Vec<String>> = rows.iter().map(|(n, v, u)| vec![n.clone(), num(*v), u.to_string()]).collect();
    Ok(Outputs::single(table(ctx.format, &meta, &columns, &body, &[], Map::new())))
}

pub fn signal(ctx: &Context, protocol: Option<Protocol>, without_target: bool, with_oracle: bool) -> Result<Outputs> {
    let scene = ctx.scene(without_target).build()?;
    let (default_protocol, tau, trajectories) = match &ctx.resolved.signal {
        Some(s) => (s.protocol, s.tau.clone(), s.trajectories),
        None => {
            let t1 = 1.0 / scene.reporter_rates()?.with_target;
            (Protocol::Reporter, linear_grid(0.0, 5.0 * t1, 51), TrajectoryConfig { seed: ctx.resolved.seed, ..TrajectoryConfig::default() })
        }
    };
    let protocol = protocol.unwrap_or(default_protocol);
    let phys = ProtocolPhysics::from_scene(&scene, protocol)?;
    let rate = phys.rates.with_target;
    let oracle = if with_oracle && !tau.is_empty() {
        let amplitude = phys.signal(0.0, rate);
        simulate_trajectories(1.0 / rate, &tau, &trajectories)?
            .into_iter()
            .map(|p| (amplitude * p.value, amplitude * p.std_err))
            .collect()
    } else {
        vec![(f64::NAN, f64::NAN); tau.len()]
    };
    let columns = [
        col("tau", "s"),
        col("signal", "1"),
        col("baseline_signal", "1"),
        col("oracle_signal", "1"),
        col("oracle_stderr", "1"),
    ];
    let rows: Vec<Vec<String>> = tau
        .iter()
        .zip(&oracle)
        .map(|(&t, &(o, e))| vec![num(t), num(phys.signal(t, rate)), num(phys.signal(t, phys.rates.baseline)), num(o), num(e)])
        .collect();
    let extra = vec![
        format!("protocol: {protocol}"),
        format!("sensor_t1_s: {}", num(1.0 / rate)),
        format!("oracle_trajectories: {}", if with_oracle { trajectories.n_traj } else { 0 }),
        format!("seed: {}", trajectories.seed),
    ];
    let mut je = Map::new();
    je.insert("protocol".into(), json!(protocol.to_string()));
    je.insert("sensor_t1".into(), jnum(1.0 / rate));
    je.insert("seed".into(), json!(trajectories.seed));
    Ok(Outputs::single(table(ctx.format, &ctx.meta("signal"), &columns, &rows, &extra, je)))
}

pub fn sweep(ctx: &Context, points: Option<usize>) -> Result<Outputs> {
    let mut spec = ctx.resolved.sweep.clone().ok_or_else(|| Error::invalid("study.sweep", "configuration has no sweep study"))?;
    if let Some(n) = points {
        spec.axis1.points = n;
        spec.axis2.points = n;
    }
    let r = run_sweep(&spec)?;
    let (a1, a2) = (spec.axis1.param, spec.axis2.param);
    let columns = [
        col("i", "-"),
        col("j", "-"),
        (a1.name(), unit(a1.dimension()).to_string()),
        (a2.name(), unit(a2.dimension()).to_string()),
        col("ratio", "1"),
        col("flag", "-"),
        col("t_direct", "s"),
        col("t_reporter", "s"),
        col("error", "-"),
    ];
    let n2 = r.axis2_values.len();
    let rows: Vec<Vec<String>> = r
        .cells
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let flag = c.flag.map(|f| serde_json::to_value(f).unwrap().as_str().unwrap().to_string()).unwrap_or_default();
            vec![
                (k / n2).to_string(),
                (k % n2).to_string(),
                num(r.axis1_values[k / n2]),
                num(r.axis2_values[k % n2]),
                num(c.ratio),
                flag,
                c.t_direct.map(num).unwrap_or_default(),
                c.t_reporter.map(num).unwrap_or_default(),
                c.error.clone().unwrap_or_default().replace(',', ";"),
            ]
        })
        .collect();
    let meta = ctx.meta("sweep");
    let extra = vec![
        format!("preset: {}", json!(spec.preset).as_str().unwrap()),
        format!("axis1: {} {} points {} scale", a1, spec.axis1.points, json!(spec.axis1.scale).as_str().unwrap()),
        format!("axis2: {} {} points {} scale", a2, spec.axis2.points, json!(spec.axis2.scale).as_str().unwrap()),
        "ratio: t_direct/t_reporter; inf, 0 or NaN when flagged".into(),
    ];
    let axis_json = |a: &relaxometry::atlas::SweepAxis, values: &[f64]| {
        json!({"param": a.param.name(), "unit": unit(a.param.dimension()), "scale": a.scale, "values": values.iter().map(|&v| jnum(v)).collect::<Vec<_>>()})
    };
    let contour_json: Vec<Value> = r
        .unit_contour
        .iter()
        .map(|l| json!({"closed": l.closed, "points": l.points.iter().map(|&(x, y)| vec![jnum(x), jnum(y)]).collect::<Vec<_>>()}))
        .collect();
    let mut je = Map::new();
    je.insert("preset".into(), json!(spec.preset));
    je.insert("axis1".into(), axis_json(&spec.axis1, &r.axis1_values));
    je.insert("axis2".into(), axis_json(&spec.axis2, &r.axis2_values));
    je.insert("unit_contour".into(), Value::Array(contour_json));

    let primary = match ctx.format {
        Format::Gnuplot => gnuplot_grid(&meta, &columns, &r.axis1_values, &r.axis2_values, &r.cells.iter().map(|c| c.ratio).collect::<Vec<_>>(), &extra),
        f => table(f, &meta, &columns, &rows, &extra, je),
    };
    if ctx.format == Format::Json {
        return Ok(Outputs::single(primary));
    }
    let ccols = [col("line", "-"), col("closed", "-"), (a1.name(), unit(a1.dimension()).to_string()), (a2.name(), unit(a2.dimension()).to_string())];
    let mut crows = Vec::new();
    for (k, l) in r.unit_contour.iter().enumerate() {
        for &(x, y) in &l.points {
            crows.push(vec![k.to_string(), (l.closed as u8).to_string(), num(x), num(y)]);
        }
    }
    let contour = match ctx.format {
        Format::Gnuplot => {
            // one data block per polyline
            let mut s = String::new();
            for (k, l) in r.unit_contour.iter().enumerate() {
                if k > 0 {
                    s.push_str("\n\n");
                }
                for &(x, y) in &l.points {
                    s.push_str(&format!("{} {}\n", num(x), num(y)));
                }
            }
            let head = table(Format::Gnuplot, &ctx.meta("sweep"), &ccols[2..], &[], &["unit-enhancement contour, one block per polyline".into()], Map::new());
            head + &s
        }
        f => table(f, &ctx.meta("sweep"), &ccols, &crows, &["unit-enhancement contour".into()], Map::new()),
    };
    Ok(Outputs { primary, extras: vec![Companion { suffix: "contour", extension: None, text: contour }] })
}

fn gnuplot_grid(meta: &Meta, columns: &[Column], v1: &[f64], v2: &[f64], values: &[f64], extra: &[String]) -> String {
    let cols = [columns[2].clone(), columns[3].clone(), columns[4].clone()];
    let mut s = table(Format::Gnuplot, meta, &cols, &[], extra, Map::new());
    for (i, a) in v1.iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        for (j, b) in v2.iter().enumerate() {
            s.push_str(&format!("{} {} {}\n", num(*a), num(*b), num(values[i * v2.len() + j])));
        }
    }
    s
}

fn image_summary(img: &ImageResult) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("protocol".into(), json!(img.spec.protocol.to_string()));
    m.insert("pixels".into(), json!(img.spec.pixels));
    m.insert("sensor_height_nm".into(), jnum(img.spec.sensor_height_nm));
    m.insert("total_time_s".into(), jnum(img.total_time));
    m.insert("total_time_h".into(), jnum(img.total_time / 3600.0));
    m.insert("peak_delta_gamma".into(), jnum(img.peak_delta_gamma()));
    m.insert("fwhm_nm".into(), jopt(img.fwhm_nm));
    m.insert("fit_converged".into(), json!(img.linecut.is_some()));
    m.insert("peak_offset_x_nm".into(), jopt(img.peak_offset_nm.map(|v| v.x)));
    m.insert("peak_offset_y_nm".into(), jopt(img.peak_offset_nm.map(|v| v.y)));
    m.insert("flagged_pixels".into(), json!(img.flagged.iter().filter(|&&f| f).count()));
    m.insert("floor_rate".into(), jnum(img.floor_rate));
    m
}

pub fn image(ctx: &Context, pixels: Option<usize>) -> Result<Outputs> {
    let plan = ctx.resolved.image.clone().ok_or_else(|| Error::invalid("study.image", "configuration has no image study"))?;
    let scene = ctx.resolved.scene.build()?;
    let mut primary = plan.primary;
    let mut reference = plan.reference;
    if let Some(n) = pixels {
        primary.pixels = n;
        if let Some(r) = reference.as_mut() {
            r.pixels = n;
        }
    }
    let img = scan_image(&primary, &scene)?;
    let mut summary = image_summary(&img);
    if let Some(spec) = &reference {
        let r = scan_image(spec, &scene)?;
        let ratio = |a: Option<f64>, b: Option<f64>| a.zip(b).map(|(a, b)| a / b);
        summary.insert("reference".into(), Value::Object(image_summary(&r)));
        summary.insert("time_ratio_reference_over_primary".into(), jnum(r.total_time / img.total_time));
        summary.insert("fwhm_ratio_reference_over_primary".into(), jopt(ratio(r.fwhm_nm, img.fwhm_nm)));
        summary.insert("peak_ratio_primary_over_reference".into(), jnum(img.peak_delta_gamma() / r.peak_delta_gamma()));
    }
    let columns = [
        col("ix", "-"),
        col("iy", "-"),
        col("x", "nm"),
        col("y", "nm"),
        col("delta_gamma", "1/s"),
        col("dwell", "s"),
        col("flagged", "-"),
    ];
    let n = img.spec.pixels;
    let rows: Vec<Vec<String>> = (0..n * n)
        .map(|k| {
            vec![
                (k / n).to_string(),
                (k % n).to_string(),
                num(img.coords[k / n]),
                num(img.coords[k % n]),
                num(img.delta_gamma.data[k]),
                num(img.dwell.data[k]),
                (img.flagged[k] as u8).to_string(),
            ]
        })
        .collect();
    let summary_lines: Vec<String> = summary
        .iter()
        .filter(|(_, v)| !v.is_object())
        .map(|(k, v)| format!("summary.{k}: {v}"))
        .collect();
    let meta = ctx.meta("image");
    let summary_doc = {
        let mut d = envelope(&meta, &[]);
        d.remove("units");
        d.insert("summary".into(), Value::Object(summary.clone()));
        to_json(d)
    };
    let body = match ctx.format {
        Format::Json => {
            let mut je = Map::new();
            je.insert("summary".into(), Value::Object(summary));
            return Ok(Outputs::single(table(Format::Json, &meta, &columns, &rows, &[], je)));
        }
        Format::Gnuplot => {
            let cols = [columns[2].clone(), columns[3].clone(), columns[4].clone(), columns[5].clone()];
            let mut s = table(Format::Gnuplot, &meta, &cols, &[], &summary_lines, Map::new());
            for k in 0..n * n {
                if k > 0 && k % n == 0 {
                    s.push('\n');
                }
                s.push_str(&format!("{} {} {} {}\n", rows[k][2], rows[k][3], rows[k][4], rows[k][5]));
            }
            s
        }
        Format::Csv => table(Format::Csv, &meta, &columns, &rows, &summary_lines, Map::new()),
    };
    Ok(Outputs { primary: body, extras: vec![Companion { suffix: "summary", extension: Some("json"), text: summary_doc }] })
}

pub fn oracle(ctx: &Context) -> Result<Outputs> {
    let plan = &ctx.resolved.oracle;
    let columns = [
        col("t1", "s"),
        col("tau", "s"),
        col("analytic", "1"),
        col("monte_carlo", "1"),
        col("std_err", "1"),
        col("z", "1"),
    ];
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &t1 in &plan.t1 {
        let grid = linear_grid(0.0, plan.span * t1, plan.points);
        let pts = if plan.points == 0 { Vec::new() } else { simulate_trajectories(t1, &grid, &plan.trajectories)? };
        for (&tau, p) in grid.iter().zip(&pts) {
            let exact = (-tau / t1).exp();
            let z = if p.std_err > 0.0 { (p.value - exact) / p.std_err } else if p.value == exact { 0.0 } else { f64::INFINITY };
            worst = worst.max(z.abs());
            rows.push(vec![num(t1), num(tau), num(exact), num(p.value), num(p.std_err), num(z)]);
        }
    }
    let extra = vec![
        format!("trajectories: {}", plan.trajectories.n_traj),
        format!("seed: {}", plan.trajectories.seed),
        format!("max_abs_z: {}", num(worst)),
    ];
    let mut je = Map::new();
    je.insert("trajectories".into(), json!(plan.trajectories.n_traj));
    je.insert("seed".into(), json!(plan.trajectories.seed));
    je.insert("max_abs_z".into(), jnum(worst));
    Ok(Outputs::single(table(ctx.format, &ctx.meta("oracle"), &columns, &rows, &extra, je)))
}

pub fn config(ctx: &Context) -> Outputs {
    let mut s = ctx.cfg.to_json_pretty();
    s.push('\n');
    Outputs::single(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn companion_names() {
        assert_eq!(companion_path(Path::new("/tmp/a.csv"), "contour", None), Path::new("/tmp/a.contour.csv"));
        assert_eq!(companion_path(Path::new("/tmp/a.csv"), "summary", Some("json")), Path::new("/tmp/a.summary.json"));
        assert_eq!(companion_path(Path::new("out"), "contour", None), Path::new("out.contour"));
    }
}
