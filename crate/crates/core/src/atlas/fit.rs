//! Lorentzian line-cut fits.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `amplitude / (1 + ((x − center)/half_width)²) + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lorentzian {
    pub amplitude: f64,
    pub center: f64,
    pub half_width: f64,
    pub offset: f64,
}

impl Lorentzian {
    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.half_width;
        self.amplitude / (1.0 + u * u) + self.offset
    }

    pub fn fwhm(&self) -> f64 {
        2.0 * self.half_width.abs()
    }

    fn params(&self) -> Vector4<f64> {
        Vector4::new(self.amplitude, self.center, self.half_width, self.offset)
    }

    fn from_params(p: &Vector4<f64>) -> Self {
        Lorentzian { amplitude: p[0], center: p[1], half_width: p[2], offset: p[3] }
    }

    fn gradient(&self, x: f64) -> Vector4<f64> {
        let u = (x - self.center) / self.half_width;
        let d = 1.0 + u * u;
        let g = self.amplitude * 2.0 * u / (self.half_width * d * d);
        Vector4::new(1.0 / d, g, g * u, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub model: Lorentzian,
    pub fwhm: f64,
    /// RMS residual over the fitted window.
    pub rms_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Half-max crossing width of the raw samples, if both sides cross.
    pub crossing_fwhm: Option<f64>,
}

fn sum_sq(m: &Lorentzian, xs: &[f64], ys: &[f64]) -> f64 {
    xs.iter().zip(ys).map(|(&x, &y)| (m.eval(x) - y).powi(2)).sum()
}

fn index_of_max(ys: &[f64]) -> Option<usize> {
    ys.iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((i, v)),
        })
        .map(|(i, _)| i)
}

/// Full width at half maximum by linear interpolation of the samples, with
/// the half level taken between the line's minimum and its peak.
pub fn crossing_fwhm(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let k = index_of_max(ys)?;
    let lo = ys.iter().copied().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min);
    let peak = ys[k];
    if !(peak > lo) {
        return None;
    }
    let half = 0.5 * (peak + lo);
    let interp = |a: usize, b: usize| xs[a] + (half - ys[a]) / (ys[b] - ys[a]) * (xs[b] - xs[a]);
    let right = (k..ys.len() - 1).find(|&i| ys[i + 1] <= half).map(|i| interp(i, i + 1))?;
    let left = (1..=k).rev().find(|&i| ys[i - 1] <= half).map(|i| interp(i, i - 1))?;
    Some((right - left).abs())
}

/// Levenberg–Marquardt fit of a [`Lorentzian`] to samples near the peak.
///
/// When the half-max crossing width `w` exists only samples within `2w` of
/// the maximum are used, which keeps slowly decaying non-Lorentzian tails
/// from dominating the width. Fails with [`Error::Fit`] if the samples have
/// no peak or the iteration diverges.
pub fn fit_lorentzian(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 4 {
        return Err(Error::Fit("need at least four samples".into()));
    }
    let crossing = crossing_fwhm(xs, ys);
    let k = index_of_max(ys).ok_or_else(|| Error::Fit("no finite samples".into()))?;
    let (wx, wy): (Vec<f64>, Vec<f64>) = match crossing {
        Some(w) => xs.iter().zip(ys).filter(|(&x, _)| (x - xs[k]).abs() <= 2.0 * w).map(|(&x, &y)| (x, y)).unzip(),
        None => (xs.to_vec(), ys.to_vec()),
    };
    if wx.len() < 4 {
        return Err(Error::Fit("peak narrower than the sampling".into()));
    }
    let lo = wy.iter().copied().fold(f64::INFINITY, f64::min);
    let span = (xs[xs.len() - 1] - xs[0]).abs();
    let mut model = Lorentzian {
        amplitude: ys[k] - lo,
        center: xs[k],
        half_width: crossing.map_or(span / 4.0, |w| w / 2.0),
        offset: lo,
    };
    if !(model.amplitude > 0.0) {
        return Err(Error::Fit("flat line cut".into()));
    }
    let scale = model.amplitude;
    let mut cost = sum_sq(&model, &wx, &wy);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < 500 {
        iterations += 1;
        let mut jtj = Matrix4::zeros();
        let mut jtr = Vector4::zeros();
        for (&x, &y) in wx.iter().zip(&wy) {
            let g = model.gradient(x);
            jtj += g * g.transpose();
            jtr += g * (y - model.eval(x));
        }
        let mut stepped = false;
        while lambda < 1e12 {
            let mut a = jtj;
            for d in 0..4 {
                a[(d, d)] += lambda * jtj[(d, d)].max(1e-300);
            }
            let Some(step) = a.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = Lorentzian::from_params(&(model.params() + step));
            let trial_cost = sum_sq(&trial, &wx, &wy);
            if trial_cost.is_finite() && trial_cost <= cost {
                let rel = (step.component_div(&model.params().map(|p| p.abs().max(1e-300)))).amax();
                let small = rel < 1e-12 || cost - trial_cost <= 1e-15 * cost.max(f64::MIN_POSITIVE) + 1e-30 * scale * scale;
                model = trial;
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-15);
                stepped = true;
                converged = small;
                break;
            }
            lambda *= 10.0;
        }
        if !stepped {
            // no downhill step left: the current point is a minimum
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !(model.half_width.is_finite() && model.half_width != 0.0) {
        return Err(Error::Fit("width diverged".into()));
    }
    model.half_width = model.half_width.abs();
    Ok(LineFit {
        model,
        fwhm: model.fwhm(),
        rms_residual: (cost / wx.len() as f64).sqrt(),
        iterations,
        converged,
        crossing_fwhm: crossing,
    })
}
