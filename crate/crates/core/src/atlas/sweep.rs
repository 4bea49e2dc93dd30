//! Two-parameter speed-enhancement maps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::contour::{marching_squares, Polyline};
use super::Grid;
use crate::budget::{speed_enhancement, EnhancementFlag, PlanSettings, ReadoutPair};
use crate::error::{Error, Result};
use crate::optimize::{linear_grid, log_grid};
use crate::scene::{SceneParam, SceneParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisScale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub param: SceneParam,
    /// Range in working units (nm, s, Hz, degrees).
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub scale: AxisScale,
}

impl SweepAxis {
    pub fn new(param: SceneParam, start: f64, stop: f64, points: usize, scale: AxisScale) -> Self {
        SweepAxis { param, start, stop, points, scale }
    }

    pub fn values(&self) -> Vec<f64> {
        match self.scale {
            AxisScale::Linear => linear_grid(self.start, self.stop, self.points),
            AxisScale::Log => log_grid(self.start, self.stop, self.points),
        }
    }

    /// Axis value at fractional index `f`.
    pub fn at(&self, f: f64) -> f64 {
        if self.points < 2 {
            return self.start;
        }
        let last = (self.points - 1) as f64;
        if f == last {
            return self.stop;
        }
        let t = f / last;
        match self.scale {
            AxisScale::Linear => self.start + t * (self.stop - self.start),
            AxisScale::Log => (self.start.ln() + t * (self.stop / self.start).ln()).exp(),
        }
    }

    fn validate(&self, path: &str) -> Result<()> {
        if self.points == 0 {
            return Err(Error::invalid(format!("{path}.points"), "must be >= 1"));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(Error::invalid(path, "range must be finite"));
        }
        let angle = matches!(self.param, SceneParam::TargetPolar | SceneParam::TargetAzimuth);
        if (self.scale == AxisScale::Log || !angle) && !(self.start > 0.0 && self.stop > 0.0) {
            return Err(Error::invalid(path, format!("{} range must be positive", self.param)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigurePreset {
    Fig2a,
    Fig2b,
    Fig2c,
    Fig2d,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub preset: FigurePreset,
    /// Rows of the result grid.
    pub axis1: SweepAxis,
    /// Columns of the result grid.
    pub axis2: SweepAxis,
    pub template: SceneParams,
    pub readouts: ReadoutPair,
    pub snr: f64,
    pub settings: PlanSettings,
}

impl SweepSpec {
    /// Gd–reporter distance × reporter T1', NV T2 8.4 µs, 4.5 nm deep.
    pub fn fig2a(points: usize) -> Self {
        SweepSpec {
            preset: FigurePreset::Fig2a,
            axis1: SweepAxis::new(SceneParam::TargetDistance, 1.0, 10.0, points, AxisScale::Linear),
            axis2: SweepAxis::new(SceneParam::ReporterT1, 1e-6, 1e-3, points, AxisScale::Log),
            template: SceneParams::fig1c(),
            readouts: ReadoutPair::default(),
            snr: 1.0,
            settings: PlanSettings::default(),
        }
    }

    /// Gd–reporter distance × NV T2, reporter T1' 30 µs, 4.5 nm deep.
    pub fn fig2b(points: usize) -> Self {
        SweepSpec {
            preset: FigurePreset::Fig2b,
            axis2: SweepAxis::new(SceneParam::NvT2, 1e-6, 1e-3, points, AxisScale::Log),
            ..Self::fig2a(points)
        }
    }

    /// NV depth × Gd–reporter distance on linear axes, NV T2 100 µs.
    pub fn fig2c(points: usize) -> Self {
        let mut template = SceneParams::fig1c();
        template.nv.t2 = 100e-6;
        SweepSpec {
            preset: FigurePreset::Fig2c,
            axis1: SweepAxis::new(SceneParam::NvDepth, 2.0, 20.0, points, AxisScale::Linear),
            axis2: SweepAxis::new(SceneParam::TargetDistance, 1.0, 10.0, points, AxisScale::Linear),
            template,
            ..Self::fig2a(points)
        }
    }

    /// As [`SweepSpec::fig2c`] over wider logarithmic ranges.
    pub fn fig2d(points: usize) -> Self {
        SweepSpec {
            preset: FigurePreset::Fig2d,
            axis1: SweepAxis::new(SceneParam::NvDepth, 2.0, 30.0, points, AxisScale::Log),
            axis2: SweepAxis::new(SceneParam::TargetDistance, 0.5, 20.0, points, AxisScale::Log),
            ..Self::fig2c(points)
        }
    }

    pub fn preset(p: FigurePreset, points: usize) -> Option<Self> {
        match p {
            FigurePreset::Fig2a => Some(Self::fig2a(points)),
            FigurePreset::Fig2b => Some(Self::fig2b(points)),
            FigurePreset::Fig2c => Some(Self::fig2c(points)),
            FigurePreset::Fig2d => Some(Self::fig2d(points)),
            FigurePreset::Custom => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.axis1.validate("sweep.axis1")?;
        self.axis2.validate("sweep.axis2")?;
        if self.axis1.param == self.axis2.param {
            return Err(Error::invalid("sweep.axis2", "must differ from axis1"));
        }
        if !(self.snr > 0.0) {
            return Err(Error::invalid("study.snr", "must be positive"));
        }
        self.readouts.direct.validate("readout.direct")?;
        self.readouts.reporter.validate("readout.reporter")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    /// t_NV / t_R; +∞, 0 or NaN when a protocol cannot see the target.
    pub ratio: f64,
    pub flag: Option<EnhancementFlag>,
    /// Optimised measurement times, s.
    pub t_direct: Option<f64>,
    pub t_reporter: Option<f64>,
    /// Set when the cell's scene could not be evaluated at all.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub axis1_values: Vec<f64>,
    pub axis2_values: Vec<f64>,
    /// Row-major `[axis1][axis2]`.
    pub cells: Vec<SweepCell>,
    /// Speed enhancement = 1 iso-lines in axis coordinates.
    pub unit_contour: Vec<Polyline>,
}

impl SweepResult {
    pub fn cell(&self, i: usize, j: usize) -> &SweepCell {
        &self.cells[i * self.axis2_values.len() + j]
    }

    pub fn ratio_grid(&self) -> Grid {
        Grid::new(self.axis1_values.len(), self.axis2_values.len(), self.cells.iter().map(|c| c.ratio).collect())
    }
}

fn evaluate(spec: &SweepSpec, a: f64, b: f64) -> SweepCell {
    let run = || -> Result<SweepCell> {
        let mut p = spec.template.clone();
        p.set(spec.axis1.param, a)?;
        p.set(spec.axis2.param, b)?;
        let e = speed_enhancement(&p.build()?, &spec.readouts, spec.snr, &spec.settings)?;
        Ok(SweepCell {
            ratio: e.ratio,
            flag: e.flag,
            t_direct: e.direct.map(|p| p.t_total),
            t_reporter: e.reporter.map(|p| p.t_total),
            error: None,
        })
    };
    run().unwrap_or_else(|e| SweepCell { ratio: f64::NAN, flag: None, t_direct: None, t_reporter: None, error: Some(e.to_string()) })
}

/// Evaluate every cell of `spec` in parallel. Output order and values do not
/// depend on the number of worker threads.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    // a template that cannot be built is a configuration error, not a cell flag
    let mut probe = spec.template.clone();
    probe.set(spec.axis1.param, spec.axis1.start)?;
    probe.set(spec.axis2.param, spec.axis2.start)?;
    let v1 = spec.axis1.values();
    let v2 = spec.axis2.values();
    let n2 = v2.len();
    let cells: Vec<SweepCell> = (0..v1.len() * n2)
        .into_par_iter()
        .map(|k| evaluate(spec, v1[k / n2], v2[k % n2]))
        .collect();

    let log_ratio = Grid::new(v1.len(), n2, cells.iter().map(|c| c.ratio.log10()).collect());
    let unit_contour = marching_squares(&log_ratio, 0.0)
        .into_iter()
        .map(|l| Polyline {
            points: l.points.iter().map(|&(i, j)| (spec.axis1.at(i), spec.axis2.at(j))).collect(),
            closed: l.closed,
        })
        .collect();
    Ok(SweepResult { spec: spec.clone(), axis1_values: v1, axis2_values: v2, cells, unit_contour })
}
