//! Marching-squares iso-lines on a [`Grid`].
//!
//! Points are returned in fractional index coordinates `(i, j)`; callers map
//! them onto physical axes. Cells with a non-finite corner are skipped.
//! Saddle cells are disambiguated by the mean of the four corners.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::Grid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<(f64, f64)>,
    pub closed: bool,
}

/// Edge of the sampling lattice: horizontal runs (i,j)-(i+1,j), vertical
/// runs (i,j)-(i,j+1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    H(usize, usize),
    V(usize, usize),
}

fn crossing(g: &Grid, e: Edge, level: f64) -> (f64, f64) {
    let (a, b, i, j, di, dj) = match e {
        Edge::H(i, j) => (g.get(i, j), g.get(i + 1, j), i, j, 1.0, 0.0),
        Edge::V(i, j) => (g.get(i, j), g.get(i, j + 1), i, j, 0.0, 1.0),
    };
    let t = ((level - a) / (b - a)).clamp(0.0, 1.0);
    (i as f64 + di * t, j as f64 + dj * t)
}

/// Iso-lines of `g` at `level`, joined into polylines.
pub fn marching_squares(g: &Grid, level: f64) -> Vec<Polyline> {
    if g.nx < 2 || g.ny < 2 {
        return Vec::new();
    }
    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for i in 0..g.nx - 1 {
        for j in 0..g.ny - 1 {
            let c = [g.get(i, j), g.get(i + 1, j), g.get(i + 1, j + 1), g.get(i, j + 1)];
            if c.iter().any(|v| !v.is_finite()) {
                continue;
            }
            // corners 0..3 counter-clockwise; edge k joins corner k and k+1
            let edges = [Edge::H(i, j), Edge::V(i + 1, j), Edge::H(i, j + 1), Edge::V(i, j)];
            let mut case = 0;
            for (k, &v) in c.iter().enumerate() {
                if v > level {
                    case |= 1 << k;
                }
            }
            let pairs: &[(usize, usize)] = match case {
                0 | 15 => &[],
                1 | 14 => &[(3, 0)],
                2 | 13 => &[(0, 1)],
                3 | 12 => &[(3, 1)],
                4 | 11 => &[(1, 2)],
                6 | 9 => &[(0, 2)],
                7 | 8 => &[(2, 3)],
                5 | 10 => {
                    let center_above = c.iter().sum::<f64>() / 4.0 > level;
                    // corners 0 and 2 share a side; connect around whichever
                    // pair the center agrees with
                    if (case == 5) == center_above {
                        &[(0, 1), (2, 3)]
                    } else {
                        &[(3, 0), (1, 2)]
                    }
                }
                _ => unreachable!(),
            };
            for &(a, b) in pairs {
                segments.push((edges[a], edges[b]));
            }
        }
    }
    join(g, level, segments)
}

fn join(g: &Grid, level: f64, segments: Vec<(Edge, Edge)>) -> Vec<Polyline> {
    let mut at: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (k, &(a, b)) in segments.iter().enumerate() {
        at.entry(a).or_default().push(k);
        at.entry(b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    // open chains start at edges touched once; loops are picked up after
    let mut starts: Vec<usize> = (0..segments.len())
        .filter(|&k| at[&segments[k].0].len() == 1 || at[&segments[k].1].len() == 1)
        .collect();
    starts.extend(0..segments.len());
    for start in starts {
        if used[start] {
            continue;
        }
        let (a, b) = segments[start];
        let (first, mut cur) = if at[&a].len() != 1 && at[&b].len() == 1 { (b, a) } else { (a, b) };
        used[start] = true;
        let mut chain = vec![first, cur];
        loop {
            let next = at[&cur].iter().copied().find(|&k| !used[k]);
            let Some(k) = next else { break };
            used[k] = true;
            let (p, q) = segments[k];
            cur = if p == cur { q } else { p };
            chain.push(cur);
        }
        // a chain grown from an interior segment may extend backwards too
        if at[&first].len() > 1 {
            let mut head = first;
            let mut prefix = Vec::new();
            while let Some(k) = at[&head].iter().copied().find(|&k| !used[k]) {
                used[k] = true;
                let (p, q) = segments[k];
                head = if p == head { q } else { p };
                prefix.push(head);
            }
            prefix.reverse();
            prefix.extend(chain);
            chain = prefix;
        }
        let closed = chain.len() > 2 && chain.first() == chain.last();
        lines.push(Polyline { points: chain.into_iter().map(|e| crossing(g, e, level)).collect(), closed });
    }
    lines
}
