//! Studies built on the budget layer: speed-enhancement sweeps and
//! simulated scanning images with their line-cut analysis.

pub mod contour;
pub mod fit;
pub mod image;
pub mod peak;
pub mod sweep;

pub use contour::{marching_squares, Polyline};
pub use fit::{crossing_fwhm, fit_lorentzian, LineFit, Lorentzian};
pub use image::{adaptive_pixel_time, fit_linecut, scan_image, ImageResult, ImageSpec, LineAxis, PixelDwell};
pub use peak::{peak_offset, subpixel_peak};
pub use sweep::{run_sweep, AxisScale, FigurePreset, SweepAxis, SweepCell, SweepResult, SweepSpec};

/// Row-major 2-D field: `data[i * ny + j]`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<f64>,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), nx * ny, "grid data length");
        Grid { nx, ny, data }
    }

    pub fn from_fn(nx: usize, ny: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let data = (0..nx * ny).map(|k| f(k / ny, k % ny)).collect();
        Grid { nx, ny, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ny + j]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Grid {
        Grid { nx: self.nx, ny: self.ny, data: self.data.iter().map(|&v| f(v)).collect() }
    }
}
