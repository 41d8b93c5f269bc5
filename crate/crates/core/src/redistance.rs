//! Distance fields on grids: exact sampling of analytic shapes and a
//! first-order Fast Marching solver that turns any level-set field into an
//! approximate signed distance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::{Read, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid, NodeIndex};
use crate::shapes::Shape;

pub const BINARY_MAGIC: &[u8; 8] = b"HDFLD01\0";

/// One real value per grid node, stored in column-major (first axis fastest) order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::InvalidParameter(format!(
                "field has {} values for {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite field value at node {i}")));
        }
        Ok(ScalarField { grid, values })
    }

    /// Evaluates `f` at every node position (in parallel, order-independent).
    pub fn from_fn(grid: Grid, f: impl Fn(&crate::point::Point) -> f64 + Sync) -> Result<Self> {
        let values = (0..grid.node_count()).into_par_iter().map(|l| f(&grid.position_linear(l))).collect();
        ScalarField::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: NodeIndex) -> Result<f64> {
        if !self.grid.contains_node(i) {
            return Err(Error::OutOfBounds { index: i.0, counts: self.grid.counts() });
        }
        Ok(self.values[self.grid.linear(i)])
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let dim = self.grid.dim();
        let idx = ["i", "j", "k"];
        let pos = ["x", "y", "z"];
        writeln!(w, "index,{},{},value", idx[..dim].join(","), pos[..dim].join(","))?;
        for (l, v) in self.values.iter().enumerate() {
            let i = self.grid.multi(l);
            let p = self.grid.position_unchecked(i);
            write!(w, "{l}")?;
            for a in 0..dim {
                write!(w, ",{}", i.0[a])?;
            }
            for a in 0..dim {
                write!(w, ",{}", p[a])?;
            }
            writeln!(w, ",{v}")?;
        }
        Ok(())
    }

    /// Magic header followed by the values as little-endian `f64`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(BINARY_MAGIC)?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(grid: Grid, mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(Error::InvalidParameter("bad field file header".into()));
        }
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != 8 * grid.node_count() {
            return Err(Error::InvalidParameter(format!(
                "field file holds {} bytes, expected {}",
                bytes.len(),
                8 * grid.node_count()
            )));
        }
        let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        ScalarField::new(grid, values)
    }
}

fn check_dims(g: &Grid, s: &Shape) -> Result<()> {
    if g.dim() != s.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), found: s.dim() });
    }
    Ok(())
}

/// Samples the signed distance of an exact shape at every node.
pub fn sample_exact_sd(g: &Grid, s: &Shape) -> Result<ScalarField> {
    check_dims(g, s)?;
    if !s.is_exact() {
        return Err(Error::InexactShape("signed"));
    }
    ScalarField::from_fn(*g, |p| s.evaluate_sd(p))
}

/// Samples the unsigned distance `d_Ω` at every node. Accepts unions of exact
/// shapes, whose signed value may be wrong inside but whose positive part is exact.
pub fn sample_exact_distance(g: &Grid, s: &Shape) -> Result<ScalarField> {
    check_dims(g, s)?;
    if !s.distance_is_exact() {
        return Err(Error::InexactShape("unsigned"));
    }
    ScalarField::from_fn(*g, |p| s.distance(p))
}

/// Samples the shape's level-set function (correct sign, arbitrary magnitude).
pub fn sample_levelset(g: &Grid, s: &Shape) -> Result<ScalarField> {
    check_dims(g, s)?;
    ScalarField::from_fn(*g, |p| s.evaluate_levelset(p))
}

/// `d_A = max(sd, 0)`.
pub fn positive_part(d: &ScalarField) -> ScalarField {
    d.map(|v| v.max(0.0))
}

/// Distance to the complement, `max(-sd, 0)`.
pub fn negative_part(d: &ScalarField) -> ScalarField {
    d.map(|v| (-v).max(0.0))
}

#[derive(Clone, Copy, PartialEq)]
struct Trial {
    value: f64,
    index: usize,
}

impl Eq for Trial {}

impl Ord for Trial {
    // reversed so BinaryHeap pops the smallest (value, index)
    fn cmp(&self, other: &Self) -> Ordering {
        other.value.total_cmp(&self.value).then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Trial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn inside(v: f64) -> bool {
    v <= 0.0
}

/// Neighbour linear indices along `axis`, if in bounds.
fn neighbours(g: &Grid, l: usize, axis: usize) -> [Option<usize>; 2] {
    let i = g.multi(l).0[axis];
    let s = g.strides()[axis];
    [(i > 0).then(|| l - s), (i + 1 < g.counts()[axis]).then(|| l + s)]
}

/// Redistances `phi` to an approximate signed distance with first-order
/// upwind Fast Marching.
///
/// Nodes next to a sign change get distances from linear interpolation of
/// `phi` along their sign-changing edges; then one march per side proceeds
/// outward from that band. Heap ties are broken by linear node index.
pub fn fast_march(phi: &ScalarField) -> Result<ScalarField> {
    let g = *phi.grid();
    let h = g.spacing();
    let dim = g.dim();
    let n = g.node_count();
    let v = phi.values();

    let mut dist = vec![f64::INFINITY; n];
    let mut accepted = vec![false; n];
    let mut band = 0usize;
    for l in 0..n {
        if v[l] == 0.0 {
            dist[l] = 0.0;
            accepted[l] = true;
            band += 1;
            continue;
        }
        let mut inv_sq = 0.0;
        let mut crossing = false;
        for a in 0..dim {
            let mut best = f64::INFINITY;
            for j in neighbours(&g, l, a).into_iter().flatten() {
                if inside(v[l]) != inside(v[j]) {
                    let theta = v[l].abs() / (v[l].abs() + v[j].abs());
                    best = best.min(theta * h);
                }
            }
            if best.is_finite() {
                crossing = true;
                inv_sq += 1.0 / (best * best);
            }
        }
        if crossing {
            dist[l] = 1.0 / inv_sq.sqrt();
            accepted[l] = true;
            band += 1;
        }
    }
    if band == 0 {
        return Err(Error::NoInterface);
    }

    for side_inside in [false, true] {
        let mut done = accepted.clone();
        let mut heap = BinaryHeap::new();
        let on_side = |l: usize| inside(v[l]) == side_inside;
        let mut tentative = dist.clone();
        let update = |l: usize, tentative: &mut [f64], done: &[bool], heap: &mut BinaryHeap<Trial>| {
            let u = solve_eikonal(&g, l, tentative, done, h);
            if u < tentative[l] {
                tentative[l] = u;
                heap.push(Trial { value: u, index: l });
            }
        };
        for l in (0..n).filter(|&l| accepted[l]) {
            for a in 0..dim {
                for j in neighbours(&g, l, a).into_iter().flatten() {
                    if !done[j] && on_side(j) {
                        update(j, &mut tentative, &done, &mut heap);
                    }
                }
            }
        }
        while let Some(Trial { value, index }) = heap.pop() {
            if done[index] || value > tentative[index] {
                continue;
            }
            done[index] = true;
            for a in 0..dim {
                for j in neighbours(&g, index, a).into_iter().flatten() {
                    if !done[j] && on_side(j) {
                        update(j, &mut tentative, &done, &mut heap);
                    }
                }
            }
        }
        for l in 0..n {
            if !accepted[l] && on_side(l) {
                dist[l] = tentative[l];
            }
        }
    }

    let values = (0..n)
        .map(|l| if inside(v[l]) { -dist[l] } else { dist[l] })
        .collect();
    ScalarField::new(g, values)
}

/// First-order upwind solution of `|∇u| = 1` at node `l` from accepted neighbours.
fn solve_eikonal(g: &Grid, l: usize, u: &[f64], done: &[bool], h: f64) -> f64 {
    let mut a = [f64::INFINITY; 3];
    let mut k = 0;
    for axis in 0..g.dim() {
        let m = neighbours(g, l, axis)
            .into_iter()
            .flatten()
            .filter(|&j| done[j])
            .map(|j| u[j])
            .fold(f64::INFINITY, f64::min);
        if m.is_finite() {
            a[k] = m;
            k += 1;
        }
    }
    if k == 0 {
        return f64::INFINITY;
    }
    a[..k].sort_by(f64::total_cmp);
    let mut sol = a[0] + h;
    let (mut s, mut q) = (a[0], a[0] * a[0]);
    for (m, &am) in a[..k].iter().enumerate().skip(1) {
        if sol <= am {
            break;
        }
        s += am;
        q += am * am;
        let c = (m + 1) as f64;
        let disc = s * s - c * (q - h * h);
        sol = (s + disc.max(0.0).sqrt()) / c;
    }
    sol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::Point;

    fn square_grid(dim: usize, half: f64, h: f64) -> Grid {
        let n = (2.0 * half / h).round() as usize + 1;
        let origin = Point::from_slice(&vec![-half; dim]).unwrap();
        Grid::new(dim, origin, h, &vec![n; dim]).unwrap()
    }

    fn max_error_vs_unit_sphere(dim: usize, h: f64) -> f64 {
        let g = square_grid(dim, 2.0, h);
        let phi = ScalarField::from_fn(g, |p| p.norm_squared() - 1.0).unwrap();
        let d = fast_march(&phi).unwrap();
        (0..g.node_count())
            .map(|l| (d.values()[l] - (g.position_linear(l).norm() - 1.0)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn exact_sampling_of_ball() {
        let g = square_grid(2, 2.0, 1.0);
        let b = Shape::ball(Point::ORIGIN, 1.0, 2).unwrap();
        let f = sample_exact_sd(&g, &b).unwrap();
        assert_eq!(f.get(NodeIndex::new(&[4, 2])).unwrap(), 1.0);
        assert_eq!(f.get(NodeIndex::new(&[2, 2])).unwrap(), -1.0);
    }

    #[test]
    fn inexact_shapes_rejected() {
        let g = square_grid(2, 4.0, 1.0);
        let ring = Shape::difference(
            Shape::ball(Point::ORIGIN, 3.0, 2).unwrap(),
            Shape::ball(Point::ORIGIN, 1.0, 2).unwrap(),
        )
        .unwrap();
        assert!(matches!(sample_exact_sd(&g, &ring), Err(Error::InexactShape(_))));
        assert!(sample_exact_sd(&g, &ring.declare_exact()).is_ok());
    }

    #[test]
    fn positive_and_negative_parts() {
        let g = Grid::new(1, Point::ORIGIN, 1.0, &[2]).unwrap();
        let f = ScalarField::new(g, vec![-2.0, 3.0]).unwrap();
        assert_eq!(positive_part(&f).values(), &[0.0, 3.0]);
        assert_eq!(negative_part(&f).values(), &[2.0, 0.0]);
        assert_eq!(positive_part(&positive_part(&f)), positive_part(&f));
    }

    #[test]
    fn no_interface() {
        let g = square_grid(2, 1.0, 0.5);
        let phi = ScalarField::from_fn(g, |_| 1.0).unwrap();
        assert!(matches!(fast_march(&phi), Err(Error::NoInterface)));
    }

    #[test]
    fn fmm_first_order_in_2d_and_3d() {
        for (dim, h) in [(2, 0.05), (3, 0.1)] {
            let e1 = max_error_vs_unit_sphere(dim, h);
            let e2 = max_error_vs_unit_sphere(dim, h / 2.0);
            assert!(e1 <= 2.0 * h, "dim {dim}: {e1} > 2h");
            assert!(e2 <= h, "dim {dim}: {e2} > 2(h/2)");
            assert!(e1 / e2 >= 1.5, "dim {dim}: ratio {}", e1 / e2);
        }
    }

    #[test]
    fn fmm_keeps_an_exact_distance_close() {
        let h = 0.05;
        let g = square_grid(2, 2.0, h);
        let b = Shape::ball(Point::new2(0.1, -0.2), 0.9, 2).unwrap();
        let sd = sample_exact_sd(&g, &b).unwrap();
        let d = fast_march(&sd).unwrap();
        let err = sd.values().iter().zip(d.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err <= 2.0 * h, "{err}");
    }

    #[test]
    fn fmm_discrete_lipschitz_and_zero_level() {
        let h = 0.1;
        let g = square_grid(2, 2.0, h);
        let phi = ScalarField::from_fn(g, |p| {
            let a = (p[0] - 0.5).powi(2) + p[1].powi(2) - 0.6;
            let b = (p[0] + 0.6).powi(2) + (p[1] - 0.3).powi(2) - 0.4;
            a.min(b)
        })
        .unwrap();
        let d = fast_march(&phi).unwrap();
        for l in 0..g.node_count() {
            assert_eq!(d.values()[l] <= 0.0, phi.values()[l] <= 0.0);
            for a in 0..2 {
                if let Some(j) = neighbours(&g, l, a)[1] {
                    assert!((d.values()[l] - d.values()[j]).abs() <= h + 2.0 * h);
                    if (phi.values()[l] <= 0.0) != (phi.values()[j] <= 0.0) {
                        assert!(d.values()[l].abs() <= 2f64.sqrt() * h);
                    }
                }
            }
        }
    }

    #[test]
    fn binary_and_csv_export() {
        let g = square_grid(2, 1.0, 0.5);
        let f = ScalarField::from_fn(g, |p| p[0] - 0.25 * p[1]).unwrap();
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..8], BINARY_MAGIC);
        assert_eq!(buf.len(), 8 + 8 * 25);
        assert_eq!(ScalarField::read_binary(g, &buf[..]).unwrap(), f);
        let mut csv = Vec::new();
        f.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("index,i,j,x,y,value"));
        assert_eq!(lines.next(), Some("0,0,0,-1,-1,-0.75"));
        assert_eq!(text.lines().count(), 26);
    }
}
