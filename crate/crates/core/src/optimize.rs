//! Bounded scalar minimisation: a coarse grid locates the basin, golden-section
//! search refines it.

/// Inverse golden ratio (√5 − 1)/2.
const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub f: f64,
    pub evaluations: usize,
}

/// Golden-section search for a minimum of a unimodal `f` on `[lo, hi]`.
///
/// Stops when the bracket is narrower than `xtol`. Returns the best point
/// evaluated, which is never worse than either interior probe.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, xtol: f64) -> Minimum {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut evals = 2;
    while (b - a).abs() > xtol && evals < 500 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        evals += 1;
    }
    if fc < fd {
        Minimum { x: c, f: fc, evaluations: evals }
    } else {
        Minimum { x: d, f: fd, evaluations: evals }
    }
}

/// `n` points spaced evenly in log between `lo` and `hi` (inclusive).
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| match i {
            0 => lo,
            i if i == n - 1 => hi,
            i => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

/// `n` evenly spaced points between `lo` and `hi` (inclusive).
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Minimise `f` over `[lo, hi]` (both > 0) in log-space: evaluate an
/// `n_grid`-point log grid, then golden-section refine between the
/// neighbours of the best grid point. Non-finite values count as +∞.
///
/// The result is never worse than the best grid point.
pub fn minimize_log_bounded<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, n_grid: usize, rel_tol: f64) -> Minimum {
    let clean = |v: f64| if v.is_nan() { f64::INFINITY } else { v };
    let grid = log_grid(lo, hi, n_grid.max(2));
    let mut best_i = 0;
    let mut best_f = f64::INFINITY;
    for (i, &x) in grid.iter().enumerate() {
        let v = clean(f(x));
        if v < best_f {
            best_f = v;
            best_i = i;
        }
    }
    let mut evals = grid.len();
    let grid_best = Minimum { x: grid[best_i], f: best_f, evaluations: evals };
    if !best_f.is_finite() {
        return grid_best;
    }
    let a = grid[best_i.saturating_sub(1)].ln();
    let b = grid[(best_i + 1).min(grid.len() - 1)].ln();
    let refined = golden_section(|u| clean(f(u.exp())), a, b, rel_tol);
    evals += refined.evaluations;
    if refined.f < grid_best.f {
        Minimum { x: refined.x.exp(), f: refined.f, evaluations: evals }
    } else {
        Minimum { evaluations: evals, ..grid_best }
    }
}
