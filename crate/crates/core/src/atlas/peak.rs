//! Sub-pixel location of an image maximum.

use nalgebra::{Matrix2, SMatrix, SVector, Vector2};

use super::Grid;
use crate::spin::Vec3;

/// Index-space position of the maximum of `g`, refined by a least-squares
/// quadratic over the 3×3 neighbourhood of the brightest sample. Returns
/// `None` for an empty or non-finite grid. Along an axis with fewer than
/// three samples, or at an edge, the sample position is kept.
pub fn subpixel_peak(g: &Grid) -> Option<(f64, f64)> {
    let (mut bi, mut bj, mut best) = (0, 0, f64::NEG_INFINITY);
    for i in 0..g.nx {
        for j in 0..g.ny {
            let v = g.get(i, j);
            if v > best {
                (bi, bj, best) = (i, j, v);
            }
        }
    }
    if !best.is_finite() {
        return None;
    }
    let interior = |k: usize, n: usize| k > 0 && k + 1 < n;
    if !(interior(bi, g.nx) && interior(bj, g.ny)) {
        // separable 1-D parabola where possible
        let along = |k: usize, n: usize, f: &dyn Fn(usize) -> f64| {
            if !interior(k, n) {
                return k as f64;
            }
            let (a, b, c) = (f(k - 1), f(k), f(k + 1));
            let den = a - 2.0 * b + c;
            if den < 0.0 { k as f64 + (0.5 * (a - c) / den).clamp(-0.5, 0.5) } else { k as f64 }
        };
        return Some((along(bi, g.nx, &|i| g.get(i, bj)), along(bj, g.ny, &|j| g.get(bi, j))));
    }
    // f ≈ c0 + c1·x + c2·y + c3·x² + c4·xy + c5·y² on offsets −1..1
    let mut a = SMatrix::<f64, 9, 6>::zeros();
    let mut b = SVector::<f64, 9>::zeros();
    for (r, (dx, dy)) in (-1..=1).flat_map(|dx| (-1..=1).map(move |dy| (dx, dy))).enumerate() {
        let (x, y) = (dx as f64, dy as f64);
        a.set_row(r, &nalgebra::RowSVector::<f64, 6>::from_row_slice(&[1.0, x, y, x * x, x * y, y * y]));
        b[r] = g.get((bi as i64 + dx) as usize, (bj as i64 + dy) as usize);
    }
    let c = (a.transpose() * a).lu().solve(&(a.transpose() * b))?;
    let h = Matrix2::new(2.0 * c[3], c[4], c[4], 2.0 * c[5]);
    let off = match h.lu().solve(&Vector2::new(-c[1], -c[2])) {
        // only trust a stationary point that is a maximum near the sample
        Some(o) if h.determinant() > 0.0 && h[(0, 0)] < 0.0 => o.map(|v| v.clamp(-1.0, 1.0)),
        _ => Vector2::zeros(),
    };
    Some((bi as f64 + off[0], bj as f64 + off[1]))
}

/// Lateral displacement (nm) of the image maximum from `true_target`, for an
/// image whose sample `(i, j)` sits at `(xs[i], xs[j])`. The z component is
/// always zero.
pub fn peak_offset(values: &Grid, xs: &[f64], true_target: Vec3) -> Option<Vec3> {
    let (pi, pj) = subpixel_peak(values)?;
    let pitch = if xs.len() > 1 { xs[1] - xs[0] } else { 0.0 };
    let at = |p: f64| xs[0] + p * pitch;
    Some(Vec3::new(at(pi) - true_target.x, at(pj) - true_target.y, 0.0))
}
