//! Hausdorff distances: the grid approximation `d̃_H = max_nodes |d_A - d_B|`
//! and brute-force oracles on dense point clouds.
//!
//! With exact unsigned distance fields `d̃_H` never exceeds the true
//! Hausdorff distance, because `d_H(A, B) = sup_x |d_A(x) - d_B(x)|` over all
//! of space and the grid only sees a subset of it.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::grid::{Grid, NodeIndex};
use crate::nn::KdTree;
use crate::point::{to_vec, Point};
use crate::redistance::ScalarField;
use crate::shapes::Shape;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    WorstCase,
    Suitable,
    External,
    /// Sampled approximation of the general cell bound; not certified.
    SampledGeneral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bound {
    pub kind: BoundKind,
    /// Upper bound on `d_H` (not on the error).
    pub value: f64,
}

/// Result of a brute-force Hausdorff computation.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub dh: f64,
    /// One-sided `sup_{x∈A} d_B(x)`.
    pub ab: f64,
    pub ba: f64,
    /// `(x, y)` with `|x - y| = dh`, `x` in the set that realizes the max.
    pub witness: (Point, Point),
    /// Documented accuracy: `|dh - true d_H| <= error`.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HausdorffReport {
    pub dim: usize,
    pub d_tilde: f64,
    pub argmax: NodeIndex,
    pub argmax_position: Point,
    /// Number of nodes attaining `d_tilde` exactly.
    pub ties: usize,
    pub bounds: Vec<Bound>,
    pub oracle: Option<OracleResult>,
}

impl HausdorffReport {
    /// Tightest recorded upper bound, ignoring uncertified kinds.
    pub fn upper_bound(&self) -> Option<Bound> {
        self.bounds
            .iter()
            .filter(|b| b.kind != BoundKind::SampledGeneral)
            .copied()
            .fold(None, |best: Option<Bound>, b| match best {
                Some(x) if x.value <= b.value => Some(x),
                _ => Some(b),
            })
    }

    pub fn to_json(&self) -> Value {
        let oracle = self.oracle.as_ref().map(|o| {
            json!({
                "dh": o.dh,
                "ab": o.ab,
                "ba": o.ba,
                "witness": [to_vec(&o.witness.0, self.dim), to_vec(&o.witness.1, self.dim)],
                "error": o.error,
            })
        });
        json!({
            "d_tilde": self.d_tilde,
            "argmax": &self.argmax.0[..self.dim],
            "argmax_position": to_vec(&self.argmax_position, self.dim),
            "ties": self.ties,
            "bounds": self.bounds,
            "oracle": oracle,
        })
    }
}

/// Running `(max value, lowest index attaining it, count of ties)`.
type MaxAcc = (f64, usize, usize);

fn merge_max(a: MaxAcc, b: MaxAcc) -> MaxAcc {
    match a.0.total_cmp(&b.0) {
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Less => b,
        std::cmp::Ordering::Equal => (a.0, a.1.min(b.1), a.2 + b.2),
    }
}

/// Parallel max over `0..n` of `f`, independent of how rayon partitions the range.
pub(crate) fn par_argmax(n: usize, f: impl Fn(usize) -> f64 + Sync) -> MaxAcc {
    (0..n)
        .into_par_iter()
        .map(|l| (f(l), l, 1))
        .reduce(|| (f64::NEG_INFINITY, usize::MAX, 0), merge_max)
}

fn report(grid: &Grid, acc: MaxAcc) -> HausdorffReport {
    let argmax = grid.multi(acc.1);
    HausdorffReport {
        dim: grid.dim(),
        d_tilde: acc.0,
        argmax,
        argmax_position: grid.position_unchecked(argmax),
        ties: acc.2,
        bounds: Vec::new(),
        oracle: None,
    }
}

/// `d̃_H` from two unsigned distance fields on the same grid.
///
/// Signed fields are rejected: `max |sd_A - sd_B|` is a different (stronger)
/// quantity, see [`sd_supnorm`].
pub fn dh_approx(da: &ScalarField, db: &ScalarField) -> Result<HausdorffReport> {
    if da.grid() != db.grid() {
        return Err(Error::GridMismatch);
    }
    if da.values().iter().chain(db.values()).any(|&v| v < 0.0) {
        return Err(Error::SignedField);
    }
    let (a, b) = (da.values(), db.values());
    Ok(report(da.grid(), par_argmax(a.len(), |l| (a[l] - b[l]).abs())))
}

/// `d̃_H` evaluating two unsigned distance functions node by node without
/// storing the fields.
pub fn dh_approx_fn(
    grid: &Grid,
    da: impl Fn(&Point) -> f64 + Sync,
    db: impl Fn(&Point) -> f64 + Sync,
) -> HausdorffReport {
    report(
        grid,
        par_argmax(grid.node_count(), |l| {
            let p = grid.position_linear(l);
            (da(&p) - db(&p)).abs()
        }),
    )
}

/// Same result as [`dh_approx_fn`] (value, lowest argmax, tie count), but
/// skips blocks of nodes that cannot reach the running maximum.
///
/// Both callbacks must be 1-Lipschitz, as distance functions are, so
/// `|d_A - d_B|` changes by at most twice the distance between two points.
/// A block is skipped only when its bound is strictly below the best value
/// found so far, hence every node attaining the final maximum is visited.
pub fn dh_approx_pruned(
    grid: &Grid,
    da: impl Fn(&Point) -> f64 + Sync,
    db: impl Fn(&Point) -> f64 + Sync,
) -> HausdorffReport {
    const SIDE: usize = 8;
    let dim = grid.dim();
    let counts = grid.counts();
    let h = grid.spacing();
    let mut nblocks = [1usize; 3];
    for a in 0..dim {
        nblocks[a] = counts[a].div_ceil(SIDE);
    }
    let total = nblocks[0] * nblocks[1] * nblocks[2];
    let block_range = |b: usize| {
        let bi = [b % nblocks[0], (b / nblocks[0]) % nblocks[1], b / (nblocks[0] * nblocks[1])];
        let mut lo = [0usize; 3];
        let mut hi = [1usize; 3];
        for a in 0..dim {
            lo[a] = bi[a] * SIDE;
            hi[a] = (lo[a] + SIDE).min(counts[a]);
        }
        (lo, hi)
    };
    let mut bounds: Vec<(f64, usize)> = (0..total)
        .into_par_iter()
        .map(|b| {
            let (lo, hi) = block_range(b);
            let mut center = grid.origin();
            let mut half2 = 0.0;
            for a in 0..dim {
                let half = (hi[a] - 1 - lo[a]) as f64 * h / 2.0;
                center[a] += lo[a] as f64 * h + half;
                half2 += half * half;
            }
            let v = (da(&center) - db(&center)).abs();
            let bound = v + 2.0 * half2.sqrt();
            // absorb rounding in the callbacks
            (bound + 1e-12 * (1.0 + bound), b)
        })
        .collect();
    bounds.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    let mut best: MaxAcc = (f64::NEG_INFINITY, usize::MAX, 0);
    for &(bound, b) in &bounds {
        if bound < best.0 {
            break;
        }
        let (lo, hi) = block_range(b);
        for k in lo[2]..hi[2] {
            for j in lo[1]..hi[1] {
                for i in lo[0]..hi[0] {
                    let idx = NodeIndex([i, j, k]);
                    let p = grid.position_unchecked(idx);
                    best = merge_max(best, ((da(&p) - db(&p)).abs(), grid.linear(idx), 1));
                }
            }
        }
    }
    report(grid, best)
}

/// `d̃_H` for two exact shapes on a grid covering both.
pub fn dh_approx_shapes(grid: &Grid, a: &Shape, b: &Shape) -> Result<HausdorffReport> {
    for s in [a, b] {
        if s.dim() != grid.dim() {
            return Err(Error::DimensionMismatch { expected: grid.dim(), found: s.dim() });
        }
        if !s.distance_is_exact() {
            return Err(Error::InexactShape("unsigned"));
        }
        if !grid.covers(s) {
            return Err(Error::GridTooSmall("grid does not cover the shapes".into()));
        }
    }
    Ok(dh_approx_pruned(grid, |p| a.distance(p), |p| b.distance(p)))
}

/// Max over nodes of `|sd_A - sd_B|`.
pub fn sd_supnorm(sda: &ScalarField, sdb: &ScalarField) -> Result<(f64, NodeIndex)> {
    if sda.grid() != sdb.grid() {
        return Err(Error::GridMismatch);
    }
    let (a, b) = (sda.values(), sdb.values());
    let acc = par_argmax(a.len(), |l| (a[l] - b[l]).abs());
    Ok((acc.0, sda.grid().multi(acc.1)))
}

/// `sup_{x ∈ P} inf_{y ∈ Q} |x - y|` with its witness, parallel over `P`.
fn one_sided(p: &[Point], q: &KdTree) -> (f64, Point, Point) {
    let acc = par_argmax(p.len(), |i| q.nearest(&p[i]).map_or(f64::INFINITY, |n| n.0));
    let x = p[acc.1];
    let (_, j) = q.nearest(&x).expect("non-empty cloud");
    (acc.0, x, q.point(j))
}

fn oracle_from_clouds(pa: Vec<Point>, pb: Vec<Point>, dim: usize, error: f64) -> OracleResult {
    let ta = KdTree::new(pa.clone(), dim);
    let tb = KdTree::new(pb.clone(), dim);
    let (ab, xa, ya) = one_sided(&pa, &tb);
    let (ba, xb, yb) = one_sided(&pb, &ta);
    let witness = if ab >= ba { (xa, ya) } else { (xb, yb) };
    debug_assert_eq!(ta.len() + tb.len(), pa.len() + pb.len());
    OracleResult { dh: ab.max(ba), ab, ba, witness, error }
}

/// Brute-force `d_H` over volume point clouds of both shapes.
///
/// Each cloud lies inside its set and covers it to `sqrt(n) * gap`, so the
/// result is within `2 sqrt(n) gap` of the true value.
pub fn dh_oracle(a: &Shape, b: &Shape, gap: f64) -> Result<OracleResult> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    let sa = a.sample_volume(gap)?;
    let sb = b.sample_volume(gap)?;
    let error = sa.resolution + sb.resolution;
    Ok(oracle_from_clouds(sa.points, sb.points, a.dim(), error))
}

/// Hausdorff distance between the closed complements of `a` and `b`,
/// computed inside `bbox = (lo, hi)`.
///
/// Restricting to the box is exact when both shapes lie strictly inside it:
/// points outside belong to both complements, and the box surface is closer
/// to any interior point than anything beyond it.
pub fn dh_complementary_oracle(a: &Shape, b: &Shape, gap: f64, bbox: (Point, Point)) -> Result<OracleResult> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    let dim = a.dim();
    let (lo, hi) = bbox;
    for s in [a, b] {
        if let Some(Some((slo, shi))) = s.bounding_box() {
            if (0..dim).any(|k| slo[k] <= lo[k] || shi[k] >= hi[k]) {
                return Err(Error::BboxTooSmall);
            }
        } else if s.bounding_box().is_none() {
            return Err(Error::Unbounded);
        }
    }
    let frame = Shape::cuboid(lo, hi, dim)?;
    let ca = Shape::intersection(vec![Shape::complement(a.clone()), frame.clone()])?;
    let cb = Shape::intersection(vec![Shape::complement(b.clone()), frame])?;
    let res = dh_oracle(&ca, &cb, gap)?;
    let on_frame = |p: &Point| (0..dim).any(|k| p[k] == lo[k] || p[k] == hi[k]);
    if res.dh > res.error && on_frame(&res.witness.0) {
        return Err(Error::BboxTooSmall);
    }
    Ok(res)
}

/// Sampled maximum distance function `md_S(x) = max_{y ∈ S} |x - y|`,
/// accurate to `sqrt(n) * gap`.
pub fn md_oracle(s: &Shape, x: &Point, gap: f64) -> Result<f64> {
    let sample = s.sample_volume(gap)?;
    Ok(sample.points.iter().map(|y| x.distance(y)).fold(0.0, f64::max))
}
