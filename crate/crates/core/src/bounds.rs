//! Upper error bounds for `d̃_H`: the cell-wise Lipschitz bound (sampled),
//! the worst-case and suitable-grid corollaries with the constants `Δ_n`,
//! the sharp maximal-error scene, and external Hausdorff distances.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{CellIndex, Grid};
use crate::hausdorff::{Bound, BoundKind, HausdorffReport};
use crate::nn::KdTree;
use crate::point::Point;
use crate::redistance::ScalarField;
use crate::shapes::{lattice, Shape};

/// Lipschitz weight: `|x - y|` if the corner `x` lies in the set, else `2|x - y|`.
pub fn lipschitz_t(x: &Point, y: &Point, x_in_a: bool) -> f64 {
    let d = x.distance(y);
    if x_in_a {
        d
    } else {
        2.0 * d
    }
}

/// Sampled version of the cell bound
/// `d̄(c) = sup_{y ∈ cell} min_{x ∈ N(c)} (|d_A(x) - d_B(x)| + t(x, y))`,
/// with the supremum taken over an `m^n` lattice of the closed cell.
///
/// This is not certified: it converges to `d̄(c)` from below as `m` grows.
/// `in_a` gives corner membership in corner-bitmask order.
pub fn cell_upper_bound_sampled(
    c: CellIndex,
    da: &ScalarField,
    db: &ScalarField,
    in_a: &[bool],
    m: usize,
) -> Result<f64> {
    let g = da.grid();
    if db.grid() != g {
        return Err(Error::GridMismatch);
    }
    if m < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples per axis".into()));
    }
    let corners = g.cell_corners(c)?;
    if in_a.len() != corners.len() {
        return Err(Error::InvalidParameter(format!("expected {} corner flags", corners.len())));
    }
    let corner_data: Vec<(Point, f64, bool)> = corners
        .iter()
        .zip(in_a)
        .map(|(&x, &inside)| {
            let l = g.linear(x);
            (g.position_unchecked(x), (da.values()[l] - db.values()[l]).abs(), inside)
        })
        .collect();
    let lo = corner_data[0].0;
    let hi = corner_data[corner_data.len() - 1].0;
    let pitch = g.spacing() / (m - 1) as f64;
    Ok(lattice(lo, hi, pitch, g.dim())
        .map(|y| {
            corner_data
                .iter()
                .map(|(x, v, inside)| v + lipschitz_t(x, &y, *inside))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Sampled general bound on `d_H`: the max of the sampled `d̄(c)` over all
/// cells, in both directions. Membership is read off the fields (`d = 0`).
/// Not certified; reported with [`BoundKind::SampledGeneral`].
pub fn general_bound_sampled(da: &ScalarField, db: &ScalarField, m: usize) -> Result<f64> {
    let g = *da.grid();
    if db.grid() != &g {
        return Err(Error::GridMismatch);
    }
    let mut best = f64::NEG_INFINITY;
    for c in g.cells() {
        for (first, second) in [(da, db), (db, da)] {
            let flags: Vec<bool> = g.corners_unchecked(c).map(|x| first.values()[g.linear(x)] == 0.0).collect();
            best = best.max(cell_upper_bound_sampled(c, first, second, &flags, m)?);
        }
    }
    Ok(best)
}

/// `sqrt(n) * h`, the error bound without assumptions on the grid.
pub fn worst_case_term(dim: usize, h: f64) -> f64 {
    (dim as f64).sqrt() * h
}

pub fn worst_case_bound(report: &HausdorffReport, g: &Grid) -> f64 {
    report.d_tilde + worst_case_term(g.dim(), g.spacing())
}

/// `d̃_H + Δ_n h` when the grid is suitable for both sets.
pub fn suitable_bound(report: &HausdorffReport, g: &Grid, suitable: bool) -> Option<f64> {
    suitable.then(|| report.d_tilde + closed_form_delta(g.dim()).expect("dimension checked by grid") * g.spacing())
}

/// Appends the certified bounds that apply to `report`.
pub fn attach_bounds(report: &mut HausdorffReport, g: &Grid, suitable: bool) {
    report.bounds.push(Bound { kind: BoundKind::WorstCase, value: worst_case_bound(report, g) });
    if let Some(v) = suitable_bound(report, g, suitable) {
        report.bounds.push(Bound { kind: BoundKind::Suitable, value: v });
    }
}

/// Whether no cell with all corners outside `s` intersects `s`.
///
/// Cells are pruned with the 1-Lipschitz property of the shape value: if a
/// corner is farther than the cell diagonal from the set, the whole cell
/// misses it. Remaining candidate cells are scanned on a lattice of pitch
/// `gap`, so features thinner than `gap` can be missed.
pub fn check_suitable(g: &Grid, s: &Shape, gap: f64) -> bool {
    let diag = g.cell_diagonal();
    let sd: Vec<f64> = (0..g.node_count()).map(|l| s.evaluate_sd(&g.position_linear(l))).collect();
    g.cells().all(|c| {
        let vals: Vec<f64> = g.corners_unchecked(c).map(|x| sd[g.linear(x)]).collect();
        if vals.iter().any(|&v| v <= 0.0) || vals.iter().any(|&v| v > diag) {
            return true;
        }
        let corners: Vec<_> = g.corners_unchecked(c).collect();
        let lo = g.position_unchecked(corners[0]);
        let hi = g.position_unchecked(corners[corners.len() - 1]);
        lattice(lo, hi, gap.min(g.spacing()), g.dim()).all(|y| !s.contains_regularized(&y))
    })
}

/// The constant `Δ_n` with a point of the unit cube attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaConstant {
    pub dim: usize,
    pub value: f64,
    pub maximizer: Point,
}

/// `(2/3)`, `(2/3) sqrt(5 - sqrt 7)`, `(2/3) sqrt(8 - sqrt 19)`.
pub fn closed_form_delta(dim: usize) -> Result<f64> {
    match dim {
        1 => Ok(2.0 / 3.0),
        2 => Ok(2.0 / 3.0 * (5.0 - 7f64.sqrt()).sqrt()),
        3 => Ok(2.0 / 3.0 * (8.0 - 19f64.sqrt()).sqrt()),
        _ => Err(Error::InvalidParameter(format!("Δ_n is only available for n ≤ 3, got {dim}"))),
    }
}

/// The front functions `|y|` and `2|x - y|` for every non-origin corner `x`.
fn front_values(y: &Point, dim: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(1 << dim);
    out.push(y.norm());
    for mask in 1..1usize << dim {
        let mut x = Point::ORIGIN;
        for a in 0..dim {
            x[a] = ((mask >> a) & 1) as f64;
        }
        out.push(2.0 * x.distance(y));
    }
    out
}

/// `F(y) = min(|y|, min_{x ∈ N'} 2|x - y|)`, the first arrival time at `y`.
pub fn delta_objective(y: &Point, dim: usize) -> f64 {
    front_values(y, dim).into_iter().fold(f64::INFINITY, f64::min)
}

fn clamp_unit(y: &Point, dim: usize) -> Point {
    let mut p = Point::ORIGIN;
    for a in 0..dim {
        p[a] = y[a].clamp(0.0, 1.0);
    }
    p
}

/// Nelder-Mead maximization of `F` over the cube (points are projected into it).
fn nelder_mead(start: Point, dim: usize) -> Point {
    let f = |p: &Point| -delta_objective(&clamp_unit(p, dim), dim);
    let mut simplex: Vec<(Point, f64)> = (0..=dim)
        .map(|k| {
            let mut p = start;
            if k > 0 {
                p[k - 1] += if start[k - 1] > 0.5 { -0.1 } else { 0.1 };
            }
            (p, f(&p))
        })
        .collect();
    for _ in 0..2000 {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[dim].1 - simplex[0].1 < 1e-15 {
            break;
        }
        let centroid = simplex[..dim].iter().fold(Point::ORIGIN, |acc, (p, _)| acc + *p) * (1.0 / dim as f64);
        let worst = simplex[dim];
        let reflect = centroid + (centroid - worst.0);
        let fr = f(&reflect);
        if fr < simplex[0].1 {
            let expand = centroid + (reflect - centroid) * 2.0;
            let fe = f(&expand);
            simplex[dim] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (reflect, fr);
        } else {
            let contract = centroid + (worst.0 - centroid) * 0.5;
            let fc = f(&contract);
            if fc < worst.1 {
                simplex[dim] = (contract, fc);
            } else {
                let best = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    v.0 = best + (v.0 - best) * 0.5;
                    v.1 = f(&v.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    clamp_unit(&simplex[0].0, dim)
}

/// Newton iteration on the active set: all near-minimal fronts equal, active
/// cube faces fixed. Returns `None` when the system is underdetermined.
fn polish(y0: Point, dim: usize) -> Option<Point> {
    let fv = front_values(&y0, dim);
    let fmin = fv.iter().copied().fold(f64::INFINITY, f64::min);
    let active: Vec<usize> = (0..fv.len()).filter(|&i| fv[i] - fmin < 1e-5).collect();
    let faces: Vec<(usize, f64)> = (0..dim)
        .filter_map(|a| {
            if y0[a] < 1e-6 {
                Some((a, 0.0))
            } else if y0[a] > 1.0 - 1e-6 {
                Some((a, 1.0))
            } else {
                None
            }
        })
        .collect();
    let rows = active.len() - 1 + faces.len();
    if rows < dim {
        return None;
    }
    let residual = |y: &Point| {
        let f = front_values(y, dim);
        let mut r: Vec<f64> = active[1..].iter().map(|&i| f[i] - f[active[0]]).collect();
        r.extend(faces.iter().map(|&(a, v)| y[a] - v));
        DVector::from_vec(r)
    };
    let mut y = y0;
    for _ in 0..50 {
        let r = residual(&y);
        if r.amax() < 1e-15 {
            break;
        }
        let mut jac = DMatrix::zeros(rows, dim);
        for a in 0..dim {
            let step = 1e-7;
            let mut yp = y;
            let mut ym = y;
            yp[a] += step;
            ym[a] -= step;
            let col = (residual(&yp) - residual(&ym)) / (2.0 * step);
            jac.set_column(a, &col);
        }
        let delta = jac.svd(true, true).solve(&(-r), 1e-14).ok()?;
        for a in 0..dim {
            y[a] += delta[a];
        }
    }
    let inside = (0..dim).all(|a| (-1e-12..=1.0 + 1e-12).contains(&y[a]));
    (inside && residual(&y).amax() < 1e-12).then(|| clamp_unit(&y, dim))
}

/// Computes `Δ_n = max_{y ∈ [0,1]^n} F(y)` by deterministic multi-start
/// Nelder-Mead followed by an active-set Newton polish.
pub fn compute_delta(dim: usize, starts: usize) -> Result<DeltaConstant> {
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidParameter(format!("dimension {dim} not in 1..=3")));
    }
    if starts == 0 {
        return Err(Error::InvalidParameter("need at least one start".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x0de1_7a00 + dim as u64);
    let mut candidates: Vec<(f64, Point)> = (0..starts)
        .map(|_| {
            let mut p = Point::ORIGIN;
            for a in 0..dim {
                p[a] = rng.random::<f64>();
            }
            let y = nelder_mead(p, dim);
            (delta_objective(&y, dim), y)
        })
        .collect();
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = (candidates[0].0, candidates[0].1);
    for &(_, y) in candidates.iter().take(8) {
        if let Some(p) = polish(y, dim) {
            let v = delta_objective(&p, dim);
            if v > best.0 {
                best = (v, p);
            }
        }
    }
    Ok(DeltaConstant { dim, value: best.0, maximizer: best.1 })
}

/// Number of active constraints at `y`: fronts within `tol` of the minimum
/// plus cube faces within `tol`.
pub fn active_constraints(y: &Point, dim: usize, tol: f64) -> usize {
    let fv = front_values(y, dim);
    let fmin = fv.iter().copied().fold(f64::INFINITY, f64::min);
    let faces = (0..dim).filter(|&a| y[a] <= tol || y[a] >= 1.0 - tol).count();
    fv.iter().filter(|&&v| v - fmin <= tol).count() + faces
}

/// Distance from `z` to the closed complement of the union of two open discs.
fn exterior_distance_two_discs(z: &Point, c1: &Point, c2: &Point, rad: f64) -> f64 {
    let inside = |p: &Point| p.distance(c1) < rad || p.distance(c2) < rad;
    if !inside(z) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    // radial projections onto each circle, if they are not covered by the other disc
    for (c, other) in [(c1, c2), (c2, c1)] {
        let v = *z - *c;
        let n = v.norm();
        if n > 0.0 {
            let q = *c + v * (rad / n);
            if q.distance(other) >= rad {
                best = best.min(rad - n);
            }
        }
    }
    // the two circle intersection points
    let d = c1.distance(c2);
    if d < 2.0 * rad && d > 0.0 {
        let mid = (*c1 + *c2) * 0.5;
        let u = (*c2 - *c1) * (1.0 / d);
        let perp = Point::new2(-u[1], u[0]);
        let half = (rad * rad - d * d / 4.0).sqrt();
        for s in [-1.0, 1.0] {
            best = best.min(z.distance(&(mid + perp * (s * half))));
        }
    }
    best
}

/// The 2D configuration in which the suitable-grid bound is attained.
#[derive(Debug, Clone)]
pub struct MaximalErrorScene {
    pub grid: Grid,
    pub a: Shape,
    pub b: Shape,
    /// Exact unsigned distance fields on `grid`.
    pub da: ScalarField,
    pub db: ScalarField,
    /// Center of `B`'s hole, the point of `A` realizing `d_H`.
    pub p: Point,
    /// `Δ_2 h`.
    pub r: f64,
    pub rho: f64,
    pub expected_d_tilde: f64,
    pub expected_dh: f64,
}

impl MaximalErrorScene {
    /// Exact `d_A` at any point of the bounding box.
    pub fn distance_a(&self, z: &Point) -> f64 {
        let h = self.grid.spacing();
        exterior_distance_two_discs(z, &Point::new2(h, 0.0), &Point::new2(h, h), self.r / 2.0)
    }

    /// Exact `d_B` at any point of the bounding box.
    pub fn distance_b(&self, z: &Point) -> f64 {
        (self.r + self.rho - z.distance(&self.p)).max(0.0)
    }
}

/// Builds the maximal-error scene on the cell `[0, h]^2` with corners
/// `b = (0,0)`, `a = (h,0)`, `c = (0,h)`, `d = (h,h)`:
/// `A` is the box `[-2h, 3h]^2` minus open discs of radius `r/2` around `a`
/// and `d`; `B` is the box minus an open disc of radius `r + rho` around `p`,
/// where `|a - p| = |d - p| = r/2` and `|b - p| = |c - p| = r`.
/// Then `d̃_H = rho` and `d_H = r + rho` with `r = Δ_2 h`.
pub fn build_maximal_error_scene(h: f64, rho: f64) -> Result<MaximalErrorScene> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("h must be positive, got {h}")));
    }
    let r = closed_form_delta(2)? * h;
    let p = Point::new2((8.0 - 7f64.sqrt()) / 6.0 * h, 0.5 * h);
    let (a, b, c, d) = (Point::new2(h, 0.0), Point::ORIGIN, Point::new2(0.0, h), Point::new2(h, h));
    for (q, want) in [(a, r / 2.0), (d, r / 2.0), (b, r), (c, r)] {
        if (q.distance(&p) - want).abs() > 1e-12 * h {
            return Err(Error::InvalidScene(format!("defining relation violated at {q:?}")));
        }
    }
    let grid = Grid::new(2, Point::new2(-2.0 * h, -2.0 * h), h, &[6, 6])?;
    // the hole must contain only the nodes a, b, c, d
    let hole = r + rho;
    for i in grid.nodes() {
        let z = grid.position_unchecked(i);
        let own = [a, b, c, d].iter().any(|q| q.distance(&z) < 1e-9 * h);
        if !own && z.distance(&p) <= hole {
            return Err(Error::InvalidScene(format!("rho too large: the hole of B reaches node {:?}", &i.0[..2])));
        }
    }
    if rho.is_nan() || rho <= 0.0 {
        return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
    }
    let frame = Shape::cuboid(Point::new2(-2.0 * h, -2.0 * h), Point::new2(3.0 * h, 3.0 * h), 2)?;
    let shape_a = Shape::difference(
        frame.clone(),
        Shape::union(vec![Shape::ball(a, r / 2.0, 2)?, Shape::ball(d, r / 2.0, 2)?])?,
    )?;
    let shape_b = Shape::difference(frame, Shape::ball(p, hole, 2)?)?;
    let mut scene = MaximalErrorScene {
        grid,
        a: shape_a,
        b: shape_b,
        da: ScalarField::new(grid, vec![0.0; grid.node_count()])?,
        db: ScalarField::new(grid, vec![0.0; grid.node_count()])?,
        p,
        r,
        rho,
        expected_d_tilde: rho,
        expected_dh: r + rho,
    };
    let da = ScalarField::from_fn(grid, |z| scene.distance_a(z))?;
    let db = ScalarField::from_fn(grid, |z| scene.distance_b(z))?;
    scene.da = da;
    scene.db = db;
    Ok(scene)
}

/// Admissibility data of an external Hausdorff distance with radius `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalCert {
    pub x: Point,
    pub y: Point,
    /// Unit vector `(x - y) / |x - y|`.
    pub d: Point,
    pub r: f64,
    /// `x + r d`.
    pub c: Point,
    /// `r + |x - y|`.
    pub big_r: f64,
    pub admissible: bool,
    /// Smallest margin of the empty-ball conditions (negative means a
    /// sample point lies inside one of the balls).
    pub slack: f64,
    pub tol: f64,
}

/// Checks on point clouds that `B̄_r(c) ∩ A = {x}` and `B̄_R(c) ∩ B = {y}`
/// up to `tol = 2 gap`, and that `x` is not interior to `A` (nor `y` to `B`).
/// The witness should realize the two-sided Hausdorff distance.
pub fn certify_external(a: &Shape, b: &Shape, witness: (Point, Point), r: f64, gap: f64) -> Result<ExternalCert> {
    let (x, y) = witness;
    let dist = x.distance(&y);
    if dist == 0.0 {
        return Err(Error::DegenerateWitness);
    }
    if r.is_nan() || r <= 0.0 {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {r}")));
    }
    let d = (x - y) * (1.0 / dist);
    let c = x + d * r;
    let big_r = r + dist;
    let tol = 2.0 * gap;
    let dim = a.dim();
    let ta = KdTree::new(a.sample_volume(gap)?.points, dim);
    let tb = KdTree::new(b.sample_volume(gap)?.points, dim);
    let near_a = ta.nearest(&c).map_or(f64::INFINITY, |n| n.0);
    let near_b = tb.nearest(&c).map_or(f64::INFINITY, |n| n.0);
    let slack = (near_a - r).min(near_b - big_r);
    let on_boundary = a.evaluate_sd(&x) >= -tol && b.evaluate_sd(&y) >= -tol;
    Ok(ExternalCert { x, y, d, r, c, big_r, admissible: on_boundary && slack >= -tol, slack, tol })
}

/// `sqrt(n h^2 + (r - sqrt(n) h)^2) - (r - sqrt(n) h)`, the finite-`h` form of
/// the external-distance error bound, valid for `h < r / sqrt(n)`.
pub fn external_additive_term(dim: usize, h: f64, r: f64) -> Result<f64> {
    let sn = (dim as f64).sqrt();
    let t = r - sn * h;
    if t.is_nan() || t <= 0.0 {
        return Err(Error::ExternalBoundInvalid(format!("need h < r/sqrt(n), got h = {h}, r = {r}")));
    }
    let nh2 = dim as f64 * h * h;
    // rationalized to avoid cancellation for small h
    Ok(nh2 / ((nh2 + t * t).sqrt() + t))
}

/// `d̃_H` plus [`external_additive_term`], for an admissible certificate on a
/// grid that contains the segment from `x` to `c`.
pub fn external_bound(cert: &ExternalCert, report: &HausdorffReport, g: &Grid) -> Result<f64> {
    if !cert.admissible {
        return Err(Error::NotAdmissible { slack: cert.slack });
    }
    if !g.hull_contains(&cert.x) || !g.hull_contains(&cert.c) {
        return Err(Error::GridTooSmall("grid must contain the external segment from x to c".into()));
    }
    Ok(report.d_tilde + external_additive_term(g.dim(), g.spacing(), cert.r)?)
}

/// Sample-free refined bound `3 β^2 / r` given the node distance `β` to the
/// middle part of the external segment.
pub fn refined_bound_term(beta: f64, r: f64) -> f64 {
    3.0 * beta * beta / r
}
