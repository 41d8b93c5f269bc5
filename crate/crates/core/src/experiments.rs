//! Convergence experiments on the circle-in-ring scene: displacement sweeps,
//! grid refinement sweeps with order fits, and randomized ensembles.

use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{external_additive_term, worst_case_term};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::hausdorff::{dh_approx, dh_approx_pruned};
use crate::point::Point;
use crate::redistance::{fast_march, positive_part, sample_levelset};
use crate::shapes::{circle_in_ring, RingParams, Shape};
use crate::stochastic::derive_seed;

/// Where the node distance values come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldSource {
    /// Closed-form distances evaluated at the nodes.
    ExactSd,
    /// Level-set values redistanced with Fast Marching.
    Fmm,
}

impl fmt::Display for FieldSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FieldSource::ExactSd => "exact_sd",
            FieldSource::Fmm => "fmm",
        })
    }
}

/// A circle-in-ring pair with its Hausdorff distance in closed form.
#[derive(Debug, Clone)]
pub struct CircleInRing {
    pub dim: usize,
    pub displacement: Point,
    pub params: RingParams,
    pub a: Shape,
    pub b: Shape,
    pub dh: f64,
    /// `x` in the inner ball, `y` on the ring, `|x - y| = dh`.
    pub witness: (Point, Point),
    /// Supremum of admissible external radii; `None` when the witness is
    /// interior to `A`. Radii strictly below it are admissible.
    pub r_max: Option<f64>,
}

/// `A = ring ∪ ball(p, r_in)`, `B = ring`.
///
/// Since `B ⊂ A`, `d_H = sup_{x ∈ A} d_B(x)`, attained at the point of the
/// inner ball closest to the origin: `d_H = cavity - max(0, |p| - r_in)`.
/// For `|p| > r_in` the whole segment from the origin to that point attains
/// the maximum, so external balls centred on it stay inside the cavity up to
/// `r < |p| - r_in`.
pub fn scene_circle_in_ring(dim: usize, displacement: Point, params: &RingParams) -> Result<CircleInRing> {
    let (a, b) = circle_in_ring(dim, displacement, params)?;
    let cavity = params.cavity_radius();
    let dist = displacement.norm();
    let dir = if dist > 0.0 { displacement * (1.0 / dist) } else { Point::new(1.0, 0.0, 0.0) };
    let gap = (dist - params.inner_radius).max(0.0);
    let x = dir * gap;
    let y = dir * cavity;
    let r_max = (dist > params.inner_radius).then_some(gap);
    Ok(CircleInRing { dim, displacement, params: *params, a, b, dh: cavity - gap, witness: (x, y), r_max })
}

impl CircleInRing {
    /// Tightest certified bound on `δ` for grid spacing `h`: the worst-case
    /// term, or the external term when the witness admits external balls.
    ///
    /// The external term decreases in `r` and holds for every `r < r_max`,
    /// so by continuity it also holds at `r_max`.
    pub fn error_bound(&self, h: f64) -> f64 {
        let worst = worst_case_term(self.dim, h);
        match self.r_max.map(|r| external_additive_term(self.dim, h, r)) {
            Some(Ok(ext)) => ext.min(worst),
            _ => worst,
        }
    }

    /// Node grid with spacing `h` and nodes at `shift + k h`, covering the ring.
    pub fn grid(&self, h: f64, shift: Point) -> Result<Grid> {
        let mut lo = Point::ORIGIN;
        let mut hi = Point::ORIGIN;
        for k in 0..self.dim {
            lo[k] = -self.params.outer_radius;
            hi[k] = self.params.outer_radius;
        }
        Grid::covering(self.dim, lo, hi, h, shift)
    }

    /// `d̃_H` on `g` from the chosen field source.
    pub fn d_tilde(&self, g: &Grid, source: FieldSource) -> Result<f64> {
        Ok(match source {
            FieldSource::ExactSd => dh_approx_pruned(g, |p| self.a.distance(p), |p| self.b.distance(p)).d_tilde,
            FieldSource::Fmm => {
                let da = positive_part(&fast_march(&sample_levelset(g, &self.a)?)?);
                let db = positive_part(&fast_march(&sample_levelset(g, &self.b)?)?);
                dh_approx(&da, &db)?.d_tilde
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub run_id: usize,
    pub seed: u64,
    pub dim: usize,
    pub h: f64,
    pub displacement: Point,
    pub d_exact: f64,
    pub d_tilde: f64,
    /// `d_exact - d_tilde`.
    pub delta: f64,
    /// Certified bound on `delta` (for exact fields).
    pub bound: f64,
    pub source: FieldSource,
}

fn run_one(
    scene: &CircleInRing,
    h: f64,
    shift: Point,
    source: FieldSource,
    run_id: usize,
    seed: u64,
) -> Result<RunRecord> {
    let g = scene.grid(h, shift)?;
    let d_tilde = scene.d_tilde(&g, source)?;
    Ok(RunRecord {
        run_id,
        seed,
        dim: scene.dim,
        h,
        displacement: scene.displacement,
        d_exact: scene.dh,
        d_tilde,
        delta: scene.dh - d_tilde,
        bound: scene.error_bound(h),
        source,
    })
}

/// Shift putting the origin at the centre of a grid cell.
fn centred_shift(dim: usize, h: f64) -> Point {
    let mut s = Point::ORIGIN;
    for k in 0..dim {
        s[k] = h / 2.0;
    }
    s
}

/// One record per displacement at fixed `h`, with the origin at a cell centre.
pub fn sweep_displacement(
    dim: usize,
    h: f64,
    displacements: &[Point],
    source: FieldSource,
    params: &RingParams,
) -> Result<Vec<RunRecord>> {
    displacements
        .iter()
        .enumerate()
        .map(|(i, &p)| run_one(&scene_circle_in_ring(dim, p, params)?, h, centred_shift(dim, h), source, i, 0))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderFit {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    /// Points with `delta <= 0`, left out of the fit.
    pub dropped: usize,
}

/// Least-squares line through `(log h, log delta)` over points with `delta > 0`.
pub fn fit_order(points: &[(f64, f64)]) -> Result<OrderFit> {
    let used: Vec<(f64, f64)> = points.iter().filter(|p| p.1 > 0.0).map(|p| (p.0.ln(), p.1.ln())).collect();
    if used.len() < 3 {
        return Err(Error::InsufficientPoints { needed: 3, got: used.len() });
    }
    let n = used.len() as f64;
    let mx = used.iter().map(|p| p.0).sum::<f64>() / n;
    let my = used.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = used.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = used.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("grid spacings must differ".into()));
    }
    let slope = sxy / sxx;
    Ok(OrderFit { points: points.to_vec(), slope, intercept: my - slope * mx, dropped: points.len() - used.len() })
}

/// Order fit of one series. Fast Marching fields can overshoot, so their
/// errors are fitted by magnitude.
fn fit_records(records: &[RunRecord]) -> Result<OrderFit> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .map(|r| (r.h, if r.source == FieldSource::Fmm { r.delta.abs() } else { r.delta }))
        .collect();
    fit_order(&pts)
}

fn check_h_list(h_list: &[f64]) -> Result<()> {
    if h_list.len() < 3 {
        return Err(Error::InsufficientPoints { needed: 3, got: h_list.len() });
    }
    if h_list.iter().any(|h| !(*h > 0.0 && h.is_finite())) || h_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("grid spacings must be positive and decreasing".into()));
    }
    Ok(())
}

/// Refinement sweep at fixed displacement, origin at a cell centre.
pub fn sweep_h(
    dim: usize,
    displacement: Point,
    h_list: &[f64],
    source: FieldSource,
    params: &RingParams,
) -> Result<(Vec<RunRecord>, OrderFit)> {
    check_h_list(h_list)?;
    let scene = scene_circle_in_ring(dim, displacement, params)?;
    let records = h_list
        .iter()
        .enumerate()
        .map(|(i, &h)| run_one(&scene, h, centred_shift(dim, h), source, i, 0))
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_records(&records)?;
    Ok((records, fit))
}

/// `count` spacings from `first` to `last`, geometrically spaced.
pub fn geometric_h_list(first: f64, last: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![first];
    }
    let ratio = (last / first).powf(1.0 / (count - 1) as f64);
    (0..count).map(|i| if i + 1 == count { last } else { first * ratio.powi(i as i32) }).collect()
}

/// Refinement spacings used when none are given.
pub fn default_h_list(dim: usize) -> Vec<f64> {
    if dim == 3 {
        geometric_h_list(0.4, 0.1, 5)
    } else {
        geometric_h_list(0.2, 0.025, 7)
    }
}

/// Spacings for randomized ensembles: the same ranges in finer steps
/// (ratio `2^(-1/8)` in 2D, `2^(-1/16)` in 3D).
///
/// A single randomized error value scatters by about an order of magnitude
/// around its trend, so per-run slopes need many levels to be meaningful.
pub fn ensemble_h_list(dim: usize) -> Vec<f64> {
    if dim == 3 {
        geometric_h_list(0.4, 0.1, 33)
    } else {
        geometric_h_list(0.2, 0.025, 25)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeHistogram {
    pub bin_width: f64,
    /// `(bin_low, count)` in ascending order, empty bins between filled ones included.
    pub bins: Vec<(f64, usize)>,
}

pub const SLOPE_BIN_WIDTH: f64 = 0.25;

pub fn slope_histogram(slopes: &[f64]) -> SlopeHistogram {
    let keys: Vec<i64> = slopes.iter().map(|s| (s / SLOPE_BIN_WIDTH).floor() as i64).collect();
    let bins = match (keys.iter().min(), keys.iter().max()) {
        (Some(&lo), Some(&hi)) => (lo..=hi)
            .map(|k| (k as f64 * SLOPE_BIN_WIDTH, keys.iter().filter(|&&x| x == k).count()))
            .collect(),
        _ => Vec::new(),
    };
    SlopeHistogram { bin_width: SLOPE_BIN_WIDTH, bins }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ensemble {
    pub records: Vec<RunRecord>,
    /// Per run; `None` when fewer than three spacings gave `delta > 0`.
    pub fits: Vec<Option<OrderFit>>,
    pub histogram: SlopeHistogram,
}

impl Ensemble {
    pub fn slopes(&self) -> Vec<f64> {
        self.fits.iter().flatten().map(|f| f.slope).collect()
    }

    /// Median over runs with a fit.
    pub fn median_slope(&self) -> Option<f64> {
        let mut s = self.slopes();
        if s.is_empty() {
            return None;
        }
        s.sort_by(f64::total_cmp);
        let m = s.len() / 2;
        Some(if s.len() % 2 == 1 { s[m] } else { 0.5 * (s[m - 1] + s[m]) })
    }

    /// Share of all runs whose fitted order exceeds `order`.
    pub fn fraction_above(&self, order: f64) -> f64 {
        self.slopes().iter().filter(|&&s| s > order).count() as f64 / self.fits.len().max(1) as f64
    }

    /// Geometric mean of positive deltas per spacing, in the order of `h_list`.
    pub fn geometric_means(&self, h_list: &[f64]) -> Vec<(f64, f64)> {
        h_list
            .iter()
            .map(|&h| {
                let logs: Vec<f64> =
                    self.records.iter().filter(|r| r.h == h && r.delta > 0.0).map(|r| r.delta.ln()).collect();
                (h, (logs.iter().sum::<f64>() / logs.len() as f64).exp())
            })
            .collect()
    }
}

/// Uniform random unit vector in the first `dim` axes.
fn random_direction(rng: &mut ChaCha8Rng, dim: usize) -> Point {
    loop {
        let mut p = Point::ORIGIN;
        for k in 0..dim {
            p[k] = rng.random_range(-1.0..1.0);
        }
        let n = p.norm();
        if n > 1e-3 && n <= 1.0 {
            return p * (1.0 / n);
        }
    }
}

/// Randomized runs: each run draws a displacement direction from its own
/// seed, then a fresh grid offset uniform in `[0, h)^n` for every spacing.
///
/// The offset is redrawn per spacing on purpose. Keeping it a fixed fraction
/// of `h` would make all grids of a run scaled copies of one lattice about
/// the origin, which is an end point of the witness segment, and a lucky node
/// there would then give an error exactly proportional to `h`.
pub fn randomized_ensemble(
    dim: usize,
    runs: usize,
    h_list: &[f64],
    seed: u64,
    magnitude: f64,
    params: &RingParams,
) -> Result<Ensemble> {
    check_h_list(h_list)?;
    if runs < 1 {
        return Err(Error::InvalidParameter("need at least one run".into()));
    }
    let per_run: Vec<Vec<RunRecord>> = (0..runs)
        .into_par_iter()
        .map(|run_id| {
            let run_seed = derive_seed(seed, run_id as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
            let dir = random_direction(&mut rng, dim);
            let scene = scene_circle_in_ring(dim, dir * magnitude, params)?;
            h_list
                .iter()
                .map(|&h| {
                    let mut shift = Point::ORIGIN;
                    for k in 0..dim {
                        shift[k] = rng.random_range(0.0..h);
                    }
                    run_one(&scene, h, shift, FieldSource::ExactSd, run_id, run_seed)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let fits: Vec<Option<OrderFit>> = per_run.iter().map(|r| fit_records(r).ok()).collect();
    let slopes: Vec<f64> = fits.iter().flatten().map(|f| f.slope).collect();
    Ok(Ensemble { records: per_run.into_iter().flatten().collect(), fits, histogram: slope_histogram(&slopes) })
}

pub const CSV_HEADER: &str = "run_id,seed,dim,h,disp_x,disp_y,disp_z,d_exact,d_tilde,delta,bound,source";

fn record_fields(r: &RunRecord) -> [String; 12] {
    let d = |k: usize| if k < r.dim { r.displacement[k].to_string() } else { "0".into() };
    [
        r.run_id.to_string(),
        r.seed.to_string(),
        r.dim.to_string(),
        r.h.to_string(),
        d(0),
        d(1),
        d(2),
        r.d_exact.to_string(),
        r.d_tilde.to_string(),
        r.delta.to_string(),
        r.bound.to_string(),
        r.source.to_string(),
    ]
}

pub fn write_records_csv<W: Write>(records: &[RunRecord], mut w: W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{}", record_fields(r).join(","))?;
    }
    Ok(())
}

/// Whitespace-separated variant with a `#` header line.
pub fn write_records_gnuplot<W: Write>(records: &[RunRecord], mut w: W) -> Result<()> {
    writeln!(w, "# {}", CSV_HEADER.replace(',', " "))?;
    for r in records {
        writeln!(w, "{}", record_fields(r).join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hausdorff::dh_oracle;

    fn params() -> RingParams {
        RingParams::default()
    }

    #[test]
    fn analytic_distance_matches_oracle() {
        let gap = 0.05;
        for p in [Point::new2(0.0, 0.0), Point::new2(0.5, 0.0), Point::new2(3.0, 0.0), Point::new2(-2.0, 4.5)] {
            let s = scene_circle_in_ring(2, p, &params()).unwrap();
            let o = dh_oracle(&s.a, &s.b, gap).unwrap();
            assert!((o.dh - s.dh).abs() <= 2.0 * 2f64.sqrt() * gap, "{p:?}: {} vs {}", o.dh, s.dh);
            assert!(o.ba <= o.error, "B lies inside A");
        }
    }

    #[test]
    fn witness_geometry() {
        let s = scene_circle_in_ring(2, Point::ORIGIN, &params()).unwrap();
        assert_eq!(s.dh, 8.0);
        assert_eq!(s.witness.0, Point::ORIGIN);
        assert!(s.a.evaluate_sd(&s.witness.0) < 0.0);
        assert!(s.r_max.is_none());
        let s = scene_circle_in_ring(2, Point::new2(0.0, 3.0), &params()).unwrap();
        assert_eq!(s.dh, 6.0);
        assert_eq!(s.witness, (Point::new2(0.0, 2.0), Point::new2(0.0, 8.0)));
        assert_eq!(s.r_max, Some(2.0));
        assert!(scene_circle_in_ring(2, Point::new2(7.5, 0.0), &params()).is_err());
    }

    #[test]
    fn external_radius_limit() {
        use crate::bounds::certify_external;
        let s = scene_circle_in_ring(2, Point::new2(3.0, 0.0), &params()).unwrap();
        let gap = 0.02;
        let ok = certify_external(&s.a, &s.b, s.witness, 1.5, gap).unwrap();
        assert!(ok.admissible, "slack {}", ok.slack);
        let bad = certify_external(&s.a, &s.b, s.witness, 2.6, gap).unwrap();
        assert!(!bad.admissible);
    }

    #[test]
    fn centred_sweep_is_first_order() {
        let (recs, fit) = sweep_h(2, Point::ORIGIN, &geometric_h_list(0.2, 0.05, 5), FieldSource::ExactSd, &params())
            .unwrap();
        for r in &recs {
            // the node closest to the origin sits at a cell centre
            assert!((r.delta - r.h / 2f64.sqrt()).abs() < 1e-12);
            assert!(r.delta <= r.bound);
        }
        assert!((fit.slope - 1.0).abs() < 1e-9);
    }

    #[test]
    fn displaced_sweep_is_second_order() {
        let (recs, fit) =
            sweep_h(2, Point::new2(3.0, 0.0), &geometric_h_list(0.2, 0.05, 5), FieldSource::ExactSd, &params())
                .unwrap();
        assert!((1.7..=2.6).contains(&fit.slope), "slope {}", fit.slope);
        assert!(recs.iter().all(|r| r.delta >= 0.0 && r.delta <= r.bound));
    }

    #[test]
    fn displacement_sweep_plateau_and_decay() {
        let disp: Vec<Point> = (0..=10).map(|i| Point::new2(0.3 * i as f64, 0.0)).collect();
        let recs = sweep_displacement(2, 0.1, &disp, FieldSource::ExactSd, &params()).unwrap();
        let delta2 = crate::bounds::closed_form_delta(2).unwrap();
        assert!(recs[0].delta > 0.0 && recs[0].delta <= delta2 * 0.1);
        assert!(recs.iter().all(|r| r.delta <= r.bound + 1e-12));
        assert!(recs.windows(2).all(|w| w[1].bound <= w[0].bound));
        assert!(recs[10].delta < 0.1 * recs[0].delta);
    }

    #[test]
    fn fits() {
        let hs = [0.1, 0.05, 0.025, 0.0125];
        let lin: Vec<(f64, f64)> = hs.iter().map(|&h| (h, 3.0 * h)).collect();
        assert!((fit_order(&lin).unwrap().slope - 1.0).abs() < 1e-12);
        let quad: Vec<(f64, f64)> = hs.iter().map(|&h| (h, 0.5 * h * h)).collect();
        let f = fit_order(&quad).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 0.5f64.ln()).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noisy: Vec<(f64, f64)> =
            geometric_h_list(0.2, 0.02, 8).iter().map(|&h| (h, h.powi(3) * rng.random_range(0.7..1.3))).collect();
        assert!((fit_order(&noisy).unwrap().slope - 3.0).abs() <= 0.2);
        let mut zeros = quad.clone();
        zeros[1].1 = 0.0;
        assert!(matches!(fit_order(&zeros[..3]), Err(Error::InsufficientPoints { .. })));
        assert_eq!(fit_order(&zeros).unwrap().dropped, 1);
    }

    #[test]
    fn small_ensemble_is_reproducible_and_bounded() {
        let hs = geometric_h_list(0.2, 0.05, 4);
        let e = randomized_ensemble(2, 6, &hs, 7, 3.0, &params()).unwrap();
        assert_eq!(e.records.len(), 24);
        assert!(e.records.iter().all(|r| r.delta <= r.bound));
        assert_eq!(e, randomized_ensemble(2, 6, &hs, 7, 3.0, &params()).unwrap());
        let total: usize = e.histogram.bins.iter().map(|b| b.1).sum();
        assert_eq!(total, e.slopes().len());
    }

    #[test]
    fn csv_layout() {
        let recs = sweep_displacement(2, 0.2, &[Point::new2(3.0, 0.0)], FieldSource::ExactSd, &params()).unwrap();
        let mut out = Vec::new();
        write_records_csv(&recs, &mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("0,0,2,0.2,3,0,0,6,"));
        assert!(lines[1].ends_with(",exact_sd"));
        let mut g = Vec::new();
        write_records_gnuplot(&recs, &mut g).unwrap();
        assert!(String::from_utf8(g).unwrap().starts_with("# run_id seed dim"));
    }

    #[test]
    fn slope_bins() {
        let h = slope_histogram(&[1.9, 2.1, 2.2, 3.6]);
        assert_eq!(h.bins[0], (1.75, 1));
        assert_eq!(h.bins[1], (2.0, 2));
        assert_eq!(h.bins.last().unwrap(), &(3.5, 1));
        assert_eq!(h.bins.len(), 8);
    }
}
