//! Randomized-grid analysis: how close grid nodes come to a line segment,
//! the rotation sequence `frac(x0 + i k)`, and the heuristic order-statistics
//! model for the minimum node distance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::beta::ln_beta;

use crate::error::{Error, Result};
use crate::grid::{Grid, NodeIndex};
use crate::point::{to_vec, Point};

/// Distance from `z` to the segment `[p, q]`.
pub fn point_segment_distance(z: &Point, p: &Point, q: &Point) -> f64 {
    let v = *q - *p;
    let len2 = v.norm_squared();
    let t = if len2 > 0.0 { ((*z - *p).dot(&v) / len2).clamp(0.0, 1.0) } else { 0.0 };
    z.distance(&(*p + v * t))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentProbe {
    pub start: Point,
    pub end: Point,
    /// Smallest node distance to the segment.
    pub beta: f64,
    pub nearest_node: NodeIndex,
    /// Grid hyperplanes (cell faces) met by the segment, touching included.
    pub edges_crossed: usize,
}

/// Measures how close grid nodes come to the segment `[p, q]`.
pub fn probe_segment(g: &Grid, p: &Point, q: &Point) -> Result<SegmentProbe> {
    if !g.hull_contains(p) || !g.hull_contains(q) {
        return Err(Error::SegmentOutsideGrid);
    }
    let dim = g.dim();
    let h = g.spacing();
    let o = g.origin();
    let reach = g.cell_diagonal() / 2.0;
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    let mut edges_crossed = 0;
    for a in 0..dim {
        let (s, e) = (p[a].min(q[a]), p[a].max(q[a]));
        let last = (g.counts()[a] - 1) as f64;
        lo[a] = (((s - reach - o[a]) / h).floor()).clamp(0.0, last) as usize;
        hi[a] = (((e + reach - o[a]) / h).ceil()).clamp(0.0, last) as usize;
        if e > s {
            // planes o + k h with s <= o + k h <= e
            let k_lo = ((s - o[a]) / h).ceil();
            let k_hi = ((e - o[a]) / h).floor();
            if k_hi >= k_lo {
                edges_crossed += (k_hi - k_lo) as usize + 1;
            }
        }
    }
    let mut best = (f64::INFINITY, NodeIndex([0; 3]));
    for k in lo[2]..=hi[2] {
        for j in lo[1]..=hi[1] {
            for i in lo[0]..=hi[0] {
                let idx = NodeIndex([i, j, k]);
                let d = point_segment_distance(&g.position_unchecked(idx), p, q);
                if d < best.0 {
                    best = (d, idx);
                }
            }
        }
    }
    Ok(SegmentProbe { start: *p, end: *q, beta: best.0, nearest_node: best.1, edges_crossed })
}

/// The middle part `x + τ r d`, `τ ∈ [3/8, 5/8]`, of an external segment.
pub fn middle_segment(x: &Point, d: &Point, r: f64) -> (Point, Point) {
    (*x + *d * (0.375 * r), *x + *d * (0.625 * r))
}

fn frac(v: f64) -> f64 {
    v - v.floor()
}

/// Outcome of the rotation-sequence analysis for `x_i = frac(x0 + i k)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterateAnalysis {
    pub x0: f64,
    pub k: f64,
    #[serde(rename = "N")]
    pub n: usize,
    /// Smallest gap `|x_i0 - x_j0|` among `x_0 ..= x_N`.
    pub epsilon: f64,
    pub pair: (usize, usize),
    /// `epsilon` below `1e-13`: `k` is treated as rational and no `m` is promised.
    pub rational: bool,
    /// First index with `x_m <= epsilon`, if found within the scan limit.
    pub m: Option<usize>,
    /// `|j0 - i0| * ceil(1 / epsilon)`.
    #[serde(rename = "K_bound")]
    pub k_bound: Option<u64>,
    /// `2 / epsilon^2`.
    pub quadratic_bound: f64,
}

pub const RATIONAL_GAP: f64 = 1e-13;

/// Finds the closest pair among the first `N + 1` iterates and the first
/// iterate that falls into `[0, epsilon]`, scanning at most `scan_limit` steps.
pub fn analyze_iterates(x0: f64, k: f64, n: usize, scan_limit: u64) -> Result<IterateAnalysis> {
    if n < 1 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    if !x0.is_finite() || !k.is_finite() {
        return Err(Error::InvalidParameter("x0 and k must be finite".into()));
    }
    let mut xs: Vec<(f64, usize)> = (0..=n).map(|i| (frac(x0 + i as f64 * k), i)).collect();
    xs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let (epsilon, pair) = xs
        .windows(2)
        .map(|w| (w[1].0 - w[0].0, (w[0].1.min(w[1].1), w[0].1.max(w[1].1))))
        .fold((f64::INFINITY, (0, 0)), |best, c| if c.0 < best.0 { c } else { best });
    let rational = epsilon < RATIONAL_GAP;
    let quadratic_bound = 2.0 / (epsilon * epsilon);
    if rational {
        return Ok(IterateAnalysis { x0, k, n, epsilon, pair, rational, m: None, k_bound: None, quadratic_bound });
    }
    let p = (pair.1 - pair.0) as u64;
    let k_bound = p.saturating_mul((1.0 / epsilon).ceil() as u64);
    let limit = k_bound.min(scan_limit);
    let m = (0..=limit).find(|&i| frac(x0 + i as f64 * k) <= epsilon).map(|i| i as usize);
    Ok(IterateAnalysis { x0, k, n, epsilon, pair, rational, m, k_bound: Some(k_bound), quadratic_bound })
}

/// `E[Y] = N sqrt(n-1) B(n/(n-1), N)` for the minimum of `N` uniform points
/// on the sector `{x >= 0, |x| < sqrt(n-1)}` of `R^(n-1)`. Heuristic model.
pub fn expected_min_distance(dim: usize, n: u64) -> Result<f64> {
    if !(2..=3).contains(&dim) {
        return Err(Error::InvalidParameter(format!("dimension {dim} not in 2..=3")));
    }
    if n < 1 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    let m = (dim - 1) as f64;
    let nf = n as f64;
    Ok((nf.ln() + 0.5 * m.ln() + ln_beta(dim as f64 / m, nf)).exp())
}

/// SplitMix64 step used to derive independent per-task seeds.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// Monte Carlo estimate of `E[Y]`. Each trial draws `N` radii with density
/// proportional to `r^(n-2)` on `[0, sqrt(n-1))`, i.e. `sqrt(n-1) U^(1/(n-1))`,
/// and keeps the smallest. Trial `t` uses its own seed derived from `(seed, t)`.
pub fn simulate_min_distance(dim: usize, n: u64, trials: usize, seed: u64) -> Result<MonteCarloEstimate> {
    if !(2..=3).contains(&dim) {
        return Err(Error::InvalidParameter(format!("dimension {dim} not in 2..=3")));
    }
    if n < 1 || trials < 1 {
        return Err(Error::InvalidParameter("N and trials must be at least 1".into()));
    }
    let m = (dim - 1) as f64;
    let scale = m.sqrt();
    let ys: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t as u64));
            (0..n).map(|_| scale * rng.random::<f64>().powf(1.0 / m)).fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mean = ys.iter().sum::<f64>() / trials as f64;
    let var = if trials > 1 {
        ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (trials - 1) as f64
    } else {
        0.0
    };
    Ok(MonteCarloEstimate { mean, stderr: (var / trials as f64).sqrt(), trials })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Pearson statistic against the uniform distribution (descriptive only).
    pub chi_square: f64,
}

impl Histogram {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_low,bin_high,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            s.push_str(&format!("{},{},{}\n", self.edges[i], self.edges[i + 1], c));
        }
        s
    }
}

/// Histogram of `frac(x0 + i k)` for `i < count` over `bins` equal bins of `[0, 1)`.
pub fn uniformity_histogram(x0: f64, k: f64, count: usize, bins: usize) -> Result<Histogram> {
    if bins == 0 || count < bins {
        return Err(Error::InvalidParameter("need count >= bins >= 1".into()));
    }
    let mut counts = vec![0usize; bins];
    for i in 0..count {
        let b = ((frac(x0 + i as f64 * k) * bins as f64) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let expected = count as f64 / bins as f64;
    let chi_square = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let edges = (0..=bins).map(|i| i as f64 / bins as f64).collect();
    Ok(Histogram { edges, counts, chi_square })
}

/// JSON view of a probe, with coordinates cut to the grid dimension.
pub fn probe_json(p: &SegmentProbe, dim: usize) -> serde_json::Value {
    serde_json::json!({
        "start": to_vec(&p.start, dim),
        "end": to_vec(&p.end, dim),
        "beta": p.beta,
        "nearest_node": &p.nearest_node.0[..dim],
        "edges_crossed": p.edges_crossed,
    })
}
