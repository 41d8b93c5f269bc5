//! Analytic implicit geometry.
//!
//! Shapes are closed sets described by a signed distance value that is
//! negative inside, zero on the boundary and positive outside. Primitives
//! (balls and axis-aligned boxes) evaluate the exact signed distance; CSG
//! nodes combine child values with `min`/`max`/negation, which keeps the sign
//! exact but may under-estimate magnitudes. Every value stays 1-Lipschitz.
//!
//! Exactness is tracked on two levels: [`Shape::is_exact`] for the signed
//! distance and [`Shape::distance_is_exact`] for its positive part (the
//! unsigned distance `d_Ω`), which is exact for unions of exact shapes even
//! when they overlap. Callers that know more (nested or disjoint pieces) can
//! [`Shape::declare_exact`].
//!
//! Set operations are regularized: sample points are kept only where the set
//! has interior nearby, so e.g. `A \ A` is empty rather than `∂A`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point;

#[derive(Debug, Clone, PartialEq)]
pub enum ShapeNode {
    Ball { center: Point, radius: f64 },
    Box { min: Point, max: Point },
    Union(Vec<Shape>),
    Intersection(Vec<Shape>),
    Complement(Box<Shape>),
    Difference(Box<Shape>, Box<Shape>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Shape {
    node: ShapeNode,
    dim: usize,
    declared_exact: bool,
}

/// Axis-aligned bounds of a shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bounds {
    Empty,
    Bounded(Point, Point),
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    Volume,
    Boundary,
}

/// Finite point sample of a shape used by brute-force oracles.
#[derive(Debug, Clone)]
pub struct PointCloudSample {
    pub points: Vec<Point>,
    pub kind: SampleKind,
    /// Volume: every point of the set lies within this distance of a sample.
    /// Boundary: every sample has `|sd| <=` this value and primitive
    /// boundaries are covered to half of it.
    pub resolution: f64,
    /// Number of leading entries of `points` that are lattice points; the rest
    /// are boundary samples.
    pub lattice_points: usize,
}

fn check_dim(dim: usize) -> Result<()> {
    if (1..=3).contains(&dim) {
        Ok(())
    } else {
        Err(Error::InvalidShape(format!("dimension {dim} not in 1..=3")))
    }
}

impl Shape {
    fn from_node(node: ShapeNode, dim: usize) -> Shape {
        Shape { node, dim, declared_exact: false }
    }

    pub fn ball(center: Point, radius: f64, dim: usize) -> Result<Shape> {
        check_dim(dim)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidShape(format!("ball radius must be positive, got {radius}")));
        }
        if !center.is_finite() || center.uses_axes_beyond(dim) {
            return Err(Error::InvalidShape("ball center must be a finite n-vector".into()));
        }
        Ok(Shape::from_node(ShapeNode::Ball { center, radius }, dim))
    }

    /// Axis-aligned box `[min, max]`.
    pub fn cuboid(min: Point, max: Point, dim: usize) -> Result<Shape> {
        check_dim(dim)?;
        if !min.is_finite() || !max.is_finite() || min.uses_axes_beyond(dim) || max.uses_axes_beyond(dim) {
            return Err(Error::InvalidShape("box corners must be finite n-vectors".into()));
        }
        if (0..dim).any(|a| min[a] >= max[a]) {
            return Err(Error::InvalidShape("box needs min < max on every axis".into()));
        }
        Ok(Shape::from_node(ShapeNode::Box { min, max }, dim))
    }

    fn same_dim(children: &[Shape]) -> Result<usize> {
        let dim = children
            .first()
            .ok_or_else(|| Error::InvalidShape("CSG node needs at least one child".into()))?
            .dim;
        if let Some(c) = children.iter().find(|c| c.dim != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: c.dim });
        }
        Ok(dim)
    }

    pub fn union(children: Vec<Shape>) -> Result<Shape> {
        let dim = Shape::same_dim(&children)?;
        Ok(Shape::from_node(ShapeNode::Union(children), dim))
    }

    pub fn intersection(children: Vec<Shape>) -> Result<Shape> {
        let dim = Shape::same_dim(&children)?;
        Ok(Shape::from_node(ShapeNode::Intersection(children), dim))
    }

    pub fn complement(s: Shape) -> Shape {
        let dim = s.dim;
        Shape::from_node(ShapeNode::Complement(Box::new(s)), dim)
    }

    pub fn difference(a: Shape, b: Shape) -> Result<Shape> {
        if a.dim != b.dim {
            return Err(Error::DimensionMismatch { expected: a.dim, found: b.dim });
        }
        let dim = a.dim;
        Ok(Shape::from_node(ShapeNode::Difference(Box::new(a), Box::new(b)), dim))
    }

    /// Marks the signed distance of this shape as exact. Use only when the
    /// CSG structure is known to be exact (disjoint unions, concentric rings).
    pub fn declare_exact(mut self) -> Shape {
        self.declared_exact = true;
        self
    }

    pub fn node(&self) -> &ShapeNode {
        &self.node
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Whether [`Shape::evaluate_sd`] is the true signed distance.
    pub fn is_exact(&self) -> bool {
        self.declared_exact
            || match &self.node {
                ShapeNode::Ball { .. } | ShapeNode::Box { .. } => true,
                ShapeNode::Complement(c) => c.is_exact(),
                _ => false,
            }
    }

    /// Whether `max(evaluate_sd, 0)` is the true (unsigned) distance.
    pub fn distance_is_exact(&self) -> bool {
        self.is_exact()
            || match &self.node {
                ShapeNode::Union(cs) => cs.iter().all(Shape::distance_is_exact),
                _ => false,
            }
    }

    /// Signed distance (or sign-exact level-set value for CSG nodes).
    pub fn evaluate_sd(&self, x: &Point) -> f64 {
        match &self.node {
            ShapeNode::Ball { center, radius } => x.distance(center) - radius,
            ShapeNode::Box { min, max } => box_sd(min, max, self.dim, x),
            ShapeNode::Union(cs) => cs.iter().map(|c| c.evaluate_sd(x)).fold(f64::INFINITY, f64::min),
            ShapeNode::Intersection(cs) => {
                cs.iter().map(|c| c.evaluate_sd(x)).fold(f64::NEG_INFINITY, f64::max)
            }
            ShapeNode::Complement(c) => -c.evaluate_sd(x),
            ShapeNode::Difference(a, b) => a.evaluate_sd(x).max(-b.evaluate_sd(x)),
        }
    }

    /// Unsigned distance `max(sd, 0)`.
    pub fn distance(&self, x: &Point) -> f64 {
        self.evaluate_sd(x).max(0.0)
    }

    /// A level-set function with the same sign pattern as the signed distance
    /// but different magnitudes: balls use `(|x - c|^2 - r^2) / (2r)`.
    pub fn evaluate_levelset(&self, x: &Point) -> f64 {
        match &self.node {
            ShapeNode::Ball { center, radius } => (x.distance_squared(center) - radius * radius) / (2.0 * radius),
            ShapeNode::Box { min, max } => box_sd(min, max, self.dim, x),
            ShapeNode::Union(cs) => cs.iter().map(|c| c.evaluate_levelset(x)).fold(f64::INFINITY, f64::min),
            ShapeNode::Intersection(cs) => {
                cs.iter().map(|c| c.evaluate_levelset(x)).fold(f64::NEG_INFINITY, f64::max)
            }
            ShapeNode::Complement(c) => -c.evaluate_levelset(x),
            ShapeNode::Difference(a, b) => a.evaluate_levelset(x).max(-b.evaluate_levelset(x)),
        }
    }

    /// Closed-set membership, `sd(x) <= 0`.
    pub fn contains(&self, x: &Point) -> bool {
        self.evaluate_sd(x) <= 0.0
    }

    pub fn bounds(&self) -> Bounds {
        match &self.node {
            ShapeNode::Ball { center, radius } => {
                let mut lo = *center;
                let mut hi = *center;
                for a in 0..self.dim {
                    lo[a] -= radius;
                    hi[a] += radius;
                }
                Bounds::Bounded(lo, hi)
            }
            ShapeNode::Box { min, max } => Bounds::Bounded(*min, *max),
            ShapeNode::Union(cs) => cs.iter().map(Shape::bounds).fold(Bounds::Empty, |acc, b| match (acc, b) {
                (Bounds::Unbounded, _) | (_, Bounds::Unbounded) => Bounds::Unbounded,
                (Bounds::Empty, x) | (x, Bounds::Empty) => x,
                (Bounds::Bounded(l1, h1), Bounds::Bounded(l2, h2)) => {
                    Bounds::Bounded(l1.zip_map(&l2, f64::min), h1.zip_map(&h2, f64::max))
                }
            }),
            ShapeNode::Intersection(cs) => {
                cs.iter().map(Shape::bounds).fold(Bounds::Unbounded, |acc, b| intersect_bounds(acc, b, self.dim))
            }
            ShapeNode::Complement(c) => match &c.node {
                ShapeNode::Complement(inner) => inner.bounds(),
                _ => Bounds::Unbounded,
            },
            ShapeNode::Difference(a, _) => a.bounds(),
        }
    }

    /// `None` if unbounded, `Some(None)` if known empty, otherwise the box.
    pub fn bounding_box(&self) -> Option<Option<(Point, Point)>> {
        match self.bounds() {
            Bounds::Unbounded => None,
            Bounds::Empty => Some(None),
            Bounds::Bounded(lo, hi) => Some(Some((lo, hi))),
        }
    }

    fn scale(&self) -> f64 {
        match self.bounds() {
            Bounds::Bounded(lo, hi) => 1.0 + lo.norm().max(hi.norm()),
            _ => 1.0,
        }
    }

    /// Whether the set has interior points arbitrarily close to `q`, probed
    /// along the `2^n` diagonal directions at a tiny offset.
    fn probe(&self, q: &Point, eps: f64, want_inside: bool) -> bool {
        let step = eps / (self.dim as f64).sqrt();
        (0..1usize << self.dim).any(|mask| {
            let mut p = *q;
            for a in 0..self.dim {
                p[a] += if (mask >> a) & 1 == 1 { step } else { -step };
            }
            let v = self.evaluate_sd(&p);
            if want_inside {
                v < 0.0
            } else {
                v > 0.0
            }
        })
    }

    fn tolerances(&self) -> (f64, f64) {
        let s = self.scale();
        (1e-12 * s, 1e-7 * s)
    }

    /// Regularized membership for sample points.
    fn accepts_volume_point(&self, q: &Point, eta: f64, eps: f64) -> bool {
        let v = self.evaluate_sd(q);
        v < -eta || (v.abs() <= eta && self.probe(q, eps, true))
    }

    /// Membership in the regularized set: points of the closed set that have
    /// interior points of the set arbitrarily close. `A \ A` contains nothing.
    pub fn contains_regularized(&self, x: &Point) -> bool {
        let (eta, eps) = self.tolerances();
        self.accepts_volume_point(x, eta, eps)
    }

    fn accepts_boundary_point(&self, q: &Point, eta: f64, eps: f64) -> bool {
        self.evaluate_sd(q).abs() <= eta && self.probe(q, eps, true) && self.probe(q, eps, false)
    }

    /// Lattice points of pitch at most `target_gap` (anchored at the bounding
    /// box corner) that lie in the set, followed by boundary samples at
    /// `target_gap / 4`. Every point of the set is then within
    /// `sqrt(n) * target_gap` of a sample.
    pub fn sample_volume(&self, target_gap: f64) -> Result<PointCloudSample> {
        if !(target_gap > 0.0 && target_gap.is_finite()) {
            return Err(Error::InvalidParameter(format!("gap must be positive, got {target_gap}")));
        }
        let (lo, hi) = match self.bounds() {
            Bounds::Unbounded => return Err(Error::Unbounded),
            Bounds::Empty => return Err(Error::EmptySet),
            Bounds::Bounded(lo, hi) => (lo, hi),
        };
        let (eta, eps) = self.tolerances();
        let mut points: Vec<Point> = lattice(lo, hi, target_gap, self.dim)
            .filter(|q| self.accepts_volume_point(q, eta, eps))
            .collect();
        let lattice_points = points.len();
        points.extend(self.sample_boundary_points(target_gap / 4.0)?);
        if points.is_empty() {
            return Err(Error::EmptySet);
        }
        Ok(PointCloudSample {
            points,
            kind: SampleKind::Volume,
            resolution: (self.dim as f64).sqrt() * target_gap,
            lattice_points,
        })
    }

    /// Points on the boundary of the set, generated from exact
    /// parameterizations of every primitive boundary (circle/sphere, box
    /// edges/faces) and kept where they lie on the boundary of the whole CSG
    /// set.
    pub fn sample_boundary(&self, target_gap: f64) -> Result<PointCloudSample> {
        if !(target_gap > 0.0 && target_gap.is_finite()) {
            return Err(Error::InvalidParameter(format!("gap must be positive, got {target_gap}")));
        }
        let points = self.sample_boundary_points(target_gap)?;
        if points.is_empty() {
            return Err(Error::EmptySet);
        }
        Ok(PointCloudSample { points, kind: SampleKind::Boundary, resolution: target_gap, lattice_points: 0 })
    }

    fn sample_boundary_points(&self, gap: f64) -> Result<Vec<Point>> {
        let mut raw = Vec::new();
        self.collect_primitive_boundaries(gap, &mut raw)?;
        let (eta, eps) = self.tolerances();
        Ok(raw.into_iter().filter(|q| self.accepts_boundary_point(q, eta, eps)).collect())
    }

    fn collect_primitive_boundaries(&self, gap: f64, out: &mut Vec<Point>) -> Result<()> {
        match &self.node {
            ShapeNode::Ball { center, radius } => sphere_points(center, *radius, self.dim, gap, out),
            ShapeNode::Box { min, max } => box_surface_points(min, max, self.dim, gap, out),
            ShapeNode::Union(cs) | ShapeNode::Intersection(cs) => {
                for c in cs {
                    c.collect_primitive_boundaries(gap, out)?;
                }
            }
            ShapeNode::Complement(c) => c.collect_primitive_boundaries(gap, out)?,
            ShapeNode::Difference(a, b) => {
                a.collect_primitive_boundaries(gap, out)?;
                b.collect_primitive_boundaries(gap, out)?;
            }
        }
        Ok(())
    }
}

fn intersect_bounds(a: Bounds, b: Bounds, dim: usize) -> Bounds {
    match (a, b) {
        (Bounds::Empty, _) | (_, Bounds::Empty) => Bounds::Empty,
        (Bounds::Unbounded, x) | (x, Bounds::Unbounded) => x,
        (Bounds::Bounded(l1, h1), Bounds::Bounded(l2, h2)) => {
            let lo = l1.zip_map(&l2, f64::max);
            let hi = h1.zip_map(&h2, f64::min);
            if (0..dim).any(|k| lo[k] > hi[k]) {
                Bounds::Empty
            } else {
                Bounds::Bounded(lo, hi)
            }
        }
    }
}

fn box_sd(min: &Point, max: &Point, dim: usize, x: &Point) -> f64 {
    let mut outside = 0.0;
    let mut inside = f64::NEG_INFINITY;
    for a in 0..dim {
        let c = 0.5 * (min[a] + max[a]);
        let half = 0.5 * (max[a] - min[a]);
        let q = (x[a] - c).abs() - half;
        outside += q.max(0.0).powi(2);
        inside = inside.max(q);
    }
    outside.sqrt() + inside.min(0.0)
}

/// Points `lo + k * pitch` with per-axis pitch `<= gap` fitting `[lo, hi]` exactly.
pub(crate) fn lattice(lo: Point, hi: Point, gap: f64, dim: usize) -> impl Iterator<Item = Point> {
    let mut n = [1usize; 3];
    let mut pitch = [0.0; 3];
    for a in 0..dim {
        let ext = hi[a] - lo[a];
        if ext > 0.0 {
            n[a] = (ext / gap - 1e-9).ceil().max(1.0) as usize + 1;
            pitch[a] = ext / (n[a] - 1) as f64;
        }
    }
    (0..n[0] * n[1] * n[2]).map(move |l| {
        let k = [l % n[0], (l / n[0]) % n[1], l / (n[0] * n[1])];
        let mut p = Point::ORIGIN;
        for a in 0..dim {
            p[a] = if k[a] + 1 == n[a] && n[a] > 1 { hi[a] } else { lo[a] + k[a] as f64 * pitch[a] };
        }
        p
    })
}

fn sphere_points(c: &Point, r: f64, dim: usize, gap: f64, out: &mut Vec<Point>) {
    use std::f64::consts::PI;
    match dim {
        1 => {
            out.push(Point::new1(c[0] - r));
            out.push(Point::new1(c[0] + r));
        }
        2 => {
            let k = ((2.0 * PI * r) / gap).ceil().max(4.0) as usize;
            for i in 0..k {
                let t = 2.0 * PI * i as f64 / k as f64;
                out.push(Point::new2(c[0] + r * t.cos(), c[1] + r * t.sin()));
            }
        }
        _ => {
            let s = gap / std::f64::consts::SQRT_2;
            let rings = ((PI * r) / s).ceil().max(2.0) as usize;
            for i in 0..=rings {
                let theta = PI * i as f64 / rings as f64;
                let ring_r = r * theta.sin();
                let k = ((2.0 * PI * ring_r) / s).ceil().max(1.0) as usize;
                for j in 0..k {
                    let phi = 2.0 * PI * j as f64 / k as f64;
                    out.push(Point::new(
                        c[0] + ring_r * phi.cos(),
                        c[1] + ring_r * phi.sin(),
                        c[2] + r * theta.cos(),
                    ));
                }
            }
        }
    }
}

fn box_surface_points(min: &Point, max: &Point, dim: usize, gap: f64, out: &mut Vec<Point>) {
    let step = if dim == 3 { gap / std::f64::consts::SQRT_2 } else { gap };
    for a in 0..dim {
        for side in [min[a], max[a]] {
            let mut lo = *min;
            let mut hi = *max;
            lo[a] = side;
            hi[a] = side;
            out.extend(lattice(lo, hi, step, dim));
        }
    }
}

/// JSON form of a shape: a nested, externally tagged CSG tree.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeSpec {
    Ball { center: Vec<f64>, radius: f64 },
    Box { min: Vec<f64>, max: Vec<f64> },
    Union(Vec<ShapeSpec>),
    Intersection(Vec<ShapeSpec>),
    Complement(Box<ShapeSpec>),
    Difference(Box<ShapeSpec>, Box<ShapeSpec>),
    DeclareExact(Box<ShapeSpec>),
}

impl ShapeSpec {
    pub fn build(&self) -> Result<Shape> {
        match self {
            ShapeSpec::Ball { center, radius } => Shape::ball(Point::from_slice(center)?, *radius, center.len()),
            ShapeSpec::Box { min, max } => {
                if min.len() != max.len() {
                    return Err(Error::DimensionMismatch { expected: min.len(), found: max.len() });
                }
                Shape::cuboid(Point::from_slice(min)?, Point::from_slice(max)?, min.len())
            }
            ShapeSpec::Union(cs) => Shape::union(cs.iter().map(ShapeSpec::build).collect::<Result<_>>()?),
            ShapeSpec::Intersection(cs) => {
                Shape::intersection(cs.iter().map(ShapeSpec::build).collect::<Result<_>>()?)
            }
            ShapeSpec::Complement(c) => Ok(Shape::complement(c.build()?)),
            ShapeSpec::Difference(a, b) => Shape::difference(a.build()?, b.build()?),
            ShapeSpec::DeclareExact(c) => Ok(c.build()?.declare_exact()),
        }
    }

    pub fn from_shape(s: &Shape) -> ShapeSpec {
        let dim = s.dim;
        let inner = match &s.node {
            ShapeNode::Ball { center, radius } => ShapeSpec::Ball { center: center.coords(dim).to_vec(), radius: *radius },
            ShapeNode::Box { min, max } => {
                ShapeSpec::Box { min: min.coords(dim).to_vec(), max: max.coords(dim).to_vec() }
            }
            ShapeNode::Union(cs) => ShapeSpec::Union(cs.iter().map(ShapeSpec::from_shape).collect()),
            ShapeNode::Intersection(cs) => ShapeSpec::Intersection(cs.iter().map(ShapeSpec::from_shape).collect()),
            ShapeNode::Complement(c) => ShapeSpec::Complement(Box::new(ShapeSpec::from_shape(c))),
            ShapeNode::Difference(a, b) => {
                ShapeSpec::Difference(Box::new(ShapeSpec::from_shape(a)), Box::new(ShapeSpec::from_shape(b)))
            }
        };
        if s.declared_exact {
            ShapeSpec::DeclareExact(Box::new(inner))
        } else {
            inner
        }
    }
}

/// Parameters of the circle-in-ring scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RingParams {
    pub outer_radius: f64,
    /// Width of the outer ring; the cavity radius is `outer_radius - ring_width`.
    pub ring_width: f64,
    pub inner_radius: f64,
}

impl Default for RingParams {
    fn default() -> Self {
        RingParams { outer_radius: 9.0, ring_width: 1.0, inner_radius: 1.0 }
    }
}

impl RingParams {
    pub fn cavity_radius(&self) -> f64 {
        self.outer_radius - self.ring_width
    }
}

/// The ring `{R - w <= |x| <= R}` centered at the origin, flagged exact (the
/// max of the two concentric ball distances is the true signed distance).
pub fn ring(dim: usize, params: &RingParams) -> Result<Shape> {
    if !(params.ring_width > 0.0 && params.ring_width < params.outer_radius) {
        return Err(Error::InvalidShape("ring width must be in (0, outer_radius)".into()));
    }
    Ok(Shape::difference(
        Shape::ball(Point::ORIGIN, params.outer_radius, dim)?,
        Shape::ball(Point::ORIGIN, params.cavity_radius(), dim)?,
    )?
    .declare_exact())
}

/// Circle-in-ring pair: `A = ring ∪ ball(displacement, inner_radius)`,
/// `B = ring`. The inner ball must stay strictly inside the cavity, so the
/// union is disjoint and its signed distance exact.
pub fn circle_in_ring(dim: usize, displacement: Point, params: &RingParams) -> Result<(Shape, Shape)> {
    let ring = ring(dim, params)?;
    if params.inner_radius <= 0.0 || displacement.norm() + params.inner_radius >= params.cavity_radius() {
        return Err(Error::InvalidScene(format!(
            "inner ball (|p| = {}, radius {}) must lie strictly inside the cavity of radius {}",
            displacement.norm(),
            params.inner_radius,
            params.cavity_radius()
        )));
    }
    let inner = Shape::ball(displacement, params.inner_radius, dim)?;
    let a = Shape::union(vec![ring.clone(), inner])?.declare_exact();
    Ok((a, ring))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ball2(x: f64, y: f64, r: f64) -> Shape {
        Shape::ball(Point::new2(x, y), r, 2).unwrap()
    }

    #[test]
    fn ball_signed_distance() {
        let b = ball2(0.0, 0.0, 2.0);
        assert_eq!(b.evaluate_sd(&Point::new2(3.0, 0.0)), 1.0);
        assert_eq!(b.evaluate_sd(&Point::ORIGIN), -2.0);
    }

    #[test]
    fn hole_center_is_outside_ring_set() {
        let (big_r, r) = (3.0, 1.0);
        let d = Shape::difference(ball2(0.0, 0.0, big_r), ball2(0.0, 0.0, r)).unwrap();
        assert_eq!(d.evaluate_sd(&Point::ORIGIN), r);
        assert!(!d.is_exact());
        assert!(d.clone().declare_exact().is_exact());
    }

    #[test]
    fn box_signed_distance() {
        let b = Shape::cuboid(Point::new2(0.0, 0.0), Point::new2(1.0, 1.0), 2).unwrap();
        assert_eq!(b.evaluate_sd(&Point::new2(0.5, 0.5)), -0.5);
        assert_eq!(b.evaluate_sd(&Point::new2(2.0, 0.5)), 1.0);
        assert!((b.evaluate_sd(&Point::new2(2.0, 2.0)) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(b.evaluate_sd(&Point::new2(1.0, 0.3)), 0.0);
    }

    #[test]
    fn invalid_primitives() {
        assert!(Shape::ball(Point::ORIGIN, 0.0, 2).is_err());
        assert!(Shape::cuboid(Point::new2(0.0, 1.0), Point::new2(1.0, 1.0), 2).is_err());
        assert!(Shape::union(vec![]).is_err());
        let a = ball2(0.0, 0.0, 1.0);
        let b = Shape::ball(Point::ORIGIN, 1.0, 3).unwrap();
        assert!(matches!(Shape::union(vec![a, b]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn exactness_flags() {
        let a = ball2(0.0, 0.0, 1.0);
        let b = ball2(0.5, 0.0, 1.0);
        let u = Shape::union(vec![a.clone(), b.clone()]).unwrap();
        assert!(!u.is_exact());
        assert!(u.distance_is_exact());
        let i = Shape::intersection(vec![a.clone(), b.clone()]).unwrap();
        assert!(!i.distance_is_exact());
        let c = Shape::complement(a.clone());
        assert!(c.is_exact());
        assert!(!Shape::difference(a, b).unwrap().distance_is_exact());
    }

    #[test]
    fn sample_volume_ball_membership() {
        let s = ball2(0.0, 0.0, 1.0).sample_volume(0.5).unwrap();
        assert!(s.points[..s.lattice_points].contains(&Point::ORIGIN));
        assert!(!s.points.contains(&Point::new2(1.0, 1.0)));
    }

    #[test]
    fn sample_volume_box_lattice_count() {
        let b = Shape::cuboid(Point::new2(0.0, 0.0), Point::new2(1.0, 1.0), 2).unwrap();
        let s = b.sample_volume(0.25).unwrap();
        assert_eq!(s.lattice_points, 25);
        assert_eq!(s.kind, SampleKind::Volume);
    }

    #[test]
    fn empty_difference_is_an_error() {
        let a = ball2(0.0, 0.0, 1.0);
        let d = Shape::difference(a.clone(), a).unwrap();
        assert!(matches!(d.sample_volume(0.1), Err(Error::EmptySet)));
        assert!(matches!(d.sample_boundary(0.1), Err(Error::EmptySet)));
        let b = Shape::cuboid(Point::new2(0.0, 0.0), Point::new2(1.0, 1.0), 2).unwrap();
        let d = Shape::difference(b.clone(), b).unwrap();
        assert!(matches!(d.sample_volume(0.25), Err(Error::EmptySet)));
    }

    #[test]
    fn unbounded_shapes_cannot_be_volume_sampled() {
        let c = Shape::complement(ball2(0.0, 0.0, 1.0));
        assert!(matches!(c.sample_volume(0.1), Err(Error::Unbounded)));
        assert!(c.sample_boundary(0.1).is_ok());
    }

    #[test]
    fn circle_boundary_samples_lie_on_circle() {
        let s = ball2(0.0, 0.0, 1.0).sample_boundary(0.01).unwrap();
        assert!(s.points.len() >= 628);
        for p in &s.points {
            assert!((p.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn box_boundary_samples_lie_on_edges() {
        let b = Shape::cuboid(Point::new2(-1.0, 0.0), Point::new2(2.0, 1.0), 2).unwrap();
        let s = b.sample_boundary(0.1).unwrap();
        for p in &s.points {
            let on_edge = p[0] == -1.0 || p[0] == 2.0 || p[1] == 0.0 || p[1] == 1.0;
            assert!(on_edge, "{p:?}");
        }
        assert!(s.points.contains(&Point::new2(-1.0, 0.0)));
    }

    #[test]
    fn disjoint_union_boundary_covers_both_circles() {
        let u = Shape::union(vec![ball2(-2.0, 0.0, 1.0), ball2(2.0, 0.0, 0.5)]).unwrap();
        let s = u.sample_boundary(0.05).unwrap();
        let on = |p: &Point, c: Point, r: f64| (p.distance(&c) - r).abs() < 1e-12;
        let (mut n1, mut n2) = (0, 0);
        for p in &s.points {
            let a = on(p, Point::new2(-2.0, 0.0), 1.0);
            let b = on(p, Point::new2(2.0, 0.0), 0.5);
            assert!(a ^ b);
            n1 += a as usize;
            n2 += b as usize;
        }
        assert!(n1 > 100 && n2 > 50);
    }

    #[test]
    fn overlapping_union_drops_interior_arcs() {
        let u = Shape::union(vec![ball2(0.0, 0.0, 1.0), ball2(1.0, 0.0, 1.0)]).unwrap();
        let s = u.sample_boundary(0.02).unwrap();
        for p in &s.points {
            assert!(u.evaluate_sd(p).abs() < 1e-12);
            assert!(p.norm() >= 1.0 - 1e-12 && p.distance(&Point::new2(1.0, 0.0)) >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn volume_sample_covers_the_set() {
        // small ball that the lattice barely resolves, plus a thin box
        let u = Shape::union(vec![
            ball2(0.03, 0.07, 0.04),
            Shape::cuboid(Point::new2(0.5, 0.0), Point::new2(0.52, 1.0), 2).unwrap(),
        ])
        .unwrap();
        let gap = 0.1;
        let s = u.sample_volume(gap).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut checked = 0;
        while checked < 2000 {
            let p = Point::new2(rng.random_range(-0.1..0.6), rng.random_range(-0.1..1.1));
            if !u.contains(&p) {
                continue;
            }
            checked += 1;
            let nearest = s.points.iter().map(|q| q.distance(&p)).fold(f64::INFINITY, f64::min);
            assert!(nearest <= s.resolution);
        }
    }

    #[test]
    fn sphere_boundary_samples_3d() {
        let b = Shape::ball(Point::new(1.0, 0.0, 0.0), 0.5, 3).unwrap();
        let s = b.sample_boundary(0.05).unwrap();
        for p in &s.points {
            assert!((p.distance(&Point::new(1.0, 0.0, 0.0)) - 0.5).abs() < 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let v = Point::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let q = Point::new(1.0, 0.0, 0.0) + v * (0.5 / v.norm());
            let nearest = s.points.iter().map(|p| p.distance(&q)).fold(f64::INFINITY, f64::min);
            assert!(nearest <= 0.05 / 2.0 + 1e-9, "{nearest}");
        }
    }

    #[test]
    fn spec_roundtrip() {
        let s = Shape::difference(
            Shape::union(vec![ball2(0.0, 0.0, 1.0), Shape::cuboid(Point::new2(0.0, 0.0), Point::new2(2.0, 1.0), 2).unwrap()])
                .unwrap(),
            Shape::complement(ball2(5.0, 0.0, 1.0)),
        )
        .unwrap()
        .declare_exact();
        let json = serde_json::to_string(&ShapeSpec::from_shape(&s)).unwrap();
        let back: ShapeSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back.build().unwrap(), s);
        assert!(serde_json::from_str::<ShapeSpec>(r#"{"ball": {"center": [0], "radius": 1, "extra": 2}}"#).is_err());
    }

    #[test]
    fn levelset_has_sd_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = Shape::difference(ball2(0.0, 0.0, 2.0), ball2(0.3, 0.0, 0.5)).unwrap();
        for _ in 0..1000 {
            let p = Point::new2(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            assert_eq!(s.evaluate_sd(&p) > 0.0, s.evaluate_levelset(&p) > 0.0);
        }
    }

    #[test]
    fn circle_in_ring_validation() {
        let p = RingParams::default();
        assert!(circle_in_ring(2, Point::new2(3.0, 0.0), &p).is_ok());
        assert!(circle_in_ring(2, Point::new2(7.0, 0.0), &p).is_err());
        let (a, b) = circle_in_ring(3, Point::ORIGIN, &p).unwrap();
        assert!(a.is_exact() && b.is_exact());
        assert_eq!(b.evaluate_sd(&Point::ORIGIN), 8.0);
        assert_eq!(a.evaluate_sd(&Point::ORIGIN), -1.0);
    }
}
