//! Uniform rectangular grids in one to three dimensions.
//!
//! Nodes are addressed by a multi-index `i` and sit at `origin + i * h`.
//! Cells follow the one-based convention where cell `c` is spanned by the
//! nodes `c - 1 ..= c` along every axis, so a cell index component is always
//! in `1..counts[axis]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point;
use crate::shapes::Shape;

/// Multi-index of a grid node. Components beyond the grid dimension are zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeIndex(pub [usize; 3]);

/// Multi-index of a grid cell (one-based along used axes, zero elsewhere).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIndex(pub [usize; 3]);

impl NodeIndex {
    pub fn new(idx: &[usize]) -> Self {
        let mut i = [0; 3];
        i[..idx.len()].copy_from_slice(idx);
        NodeIndex(i)
    }
}

impl CellIndex {
    pub fn new(idx: &[usize]) -> Self {
        let mut i = [0; 3];
        i[..idx.len()].copy_from_slice(idx);
        CellIndex(i)
    }
}

/// Serialized form used in run configs: `{"dim", "origin", "h", "counts"}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub origin: Vec<f64>,
    pub h: f64,
    pub counts: Vec<usize>,
}

/// An immutable uniform grid with spacing `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    origin: Point,
    h: f64,
    counts: [usize; 3],
}

impl Grid {
    pub fn new(dim: usize, origin: Point, h: f64, counts: &[usize]) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {h}")));
        }
        if counts.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "expected {dim} node counts, got {}",
                counts.len()
            )));
        }
        if counts.iter().any(|&c| c < 2) {
            return Err(Error::InvalidGrid("every axis needs at least 2 nodes".into()));
        }
        if !origin.is_finite() || origin.uses_axes_beyond(dim) {
            return Err(Error::InvalidGrid("origin must be a finite n-vector".into()));
        }
        let mut c = [1; 3];
        c[..dim].copy_from_slice(counts);
        Ok(Grid { dim, origin, h, counts: c })
    }

    /// Smallest grid with spacing `h` whose hull contains `[lo, hi]`, with
    /// node positions `shift + k * h` for integer `k`.
    pub fn covering(dim: usize, lo: Point, hi: Point, h: f64, shift: Point) -> Result<Self> {
        let mut origin = Point::ORIGIN;
        let mut counts = vec![0; dim];
        for a in 0..dim {
            let k_lo = ((lo[a] - shift[a]) / h).floor();
            let k_hi = ((hi[a] - shift[a]) / h).ceil();
            origin[a] = shift[a] + k_lo * h;
            counts[a] = ((k_hi - k_lo) as usize + 1).max(2);
        }
        Grid::new(dim, origin, h, &counts)
    }

    pub fn from_spec(spec: &GridSpec) -> Result<Self> {
        if spec.origin.len() != spec.dim {
            return Err(Error::InvalidGrid(format!(
                "origin has {} coordinates for dimension {}",
                spec.origin.len(),
                spec.dim
            )));
        }
        let origin = Point::from_slice(&spec.origin).map_err(|e| Error::InvalidGrid(e.to_string()))?;
        Grid::new(spec.dim, origin, spec.h, &spec.counts)
    }

    pub fn to_spec(&self) -> GridSpec {
        GridSpec {
            dim: self.dim,
            origin: self.origin.coords(self.dim).to_vec(),
            h: self.h,
            counts: self.counts[..self.dim].to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn counts(&self) -> [usize; 3] {
        self.counts
    }

    pub fn node_count(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn cell_count(&self) -> usize {
        self.counts[..self.dim].iter().map(|c| c - 1).product()
    }

    /// Length of the longest cell diagonal, `sqrt(n) * h`.
    pub fn cell_diagonal(&self) -> f64 {
        (self.dim as f64).sqrt() * self.h
    }

    pub fn contains_node(&self, i: NodeIndex) -> bool {
        (0..3).all(|a| i.0[a] < self.counts[a])
    }

    fn check_node(&self, i: NodeIndex) -> Result<()> {
        if self.contains_node(i) {
            Ok(())
        } else {
            Err(Error::OutOfBounds { index: i.0, counts: self.counts })
        }
    }

    pub fn node_position(&self, i: NodeIndex) -> Result<Point> {
        self.check_node(i)?;
        Ok(self.position_unchecked(i))
    }

    /// Position of an in-bounds node, computed as `origin + i * h` per axis.
    #[inline]
    pub fn position_unchecked(&self, i: NodeIndex) -> Point {
        let mut p = Point::ORIGIN;
        for a in 0..self.dim {
            p[a] = self.origin[a] + i.0[a] as f64 * self.h;
        }
        p
    }

    /// Column-major linear index: the first axis varies fastest.
    #[inline]
    pub fn linear(&self, i: NodeIndex) -> usize {
        i.0[0] + self.counts[0] * (i.0[1] + self.counts[1] * i.0[2])
    }

    #[inline]
    pub fn multi(&self, mut lin: usize) -> NodeIndex {
        let i0 = lin % self.counts[0];
        lin /= self.counts[0];
        let i1 = lin % self.counts[1];
        NodeIndex([i0, i1, lin / self.counts[1]])
    }

    /// Linear-index stride of each axis.
    pub fn strides(&self) -> [usize; 3] {
        [1, self.counts[0], self.counts[0] * self.counts[1]]
    }

    /// Position of the node with linear index `lin`.
    #[inline]
    pub fn position_linear(&self, lin: usize) -> Point {
        self.position_unchecked(self.multi(lin))
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeIndex> + '_ {
        (0..self.node_count()).map(move |l| self.multi(l))
    }

    pub fn contains_cell(&self, c: CellIndex) -> bool {
        (0..3).all(|a| {
            if a < self.dim {
                c.0[a] >= 1 && c.0[a] < self.counts[a]
            } else {
                c.0[a] == 0
            }
        })
    }

    pub fn cells(&self) -> impl Iterator<Item = CellIndex> + '_ {
        let dim = self.dim;
        let n = [
            self.counts[0] - 1,
            if dim > 1 { self.counts[1] - 1 } else { 1 },
            if dim > 2 { self.counts[2] - 1 } else { 1 },
        ];
        (0..n[0] * n[1] * n[2]).map(move |l| {
            let mut c = [l % n[0] + 1, (l / n[0]) % n[1] + 1, l / (n[0] * n[1]) + 1];
            for v in c.iter_mut().skip(dim) {
                *v = 0;
            }
            CellIndex(c)
        })
    }

    /// The `2^n` corner nodes spanning cell `c`, ordered by corner bitmask
    /// (bit `a` set means the upper node along axis `a`).
    pub fn cell_corners(&self, c: CellIndex) -> Result<Vec<NodeIndex>> {
        if !self.contains_cell(c) {
            return Err(Error::OutOfBounds { index: c.0, counts: self.counts });
        }
        Ok(self.corners_unchecked(c).collect())
    }

    pub(crate) fn corners_unchecked(&self, c: CellIndex) -> impl Iterator<Item = NodeIndex> + '_ {
        (0..1usize << self.dim).map(move |mask| {
            let mut i = [0; 3];
            for (a, (ia, ca)) in i.iter_mut().zip(c.0).take(self.dim).enumerate() {
                *ia = ca - 1 + ((mask >> a) & 1);
            }
            NodeIndex(i)
        })
    }

    /// Lowest and highest node positions.
    pub fn hull(&self) -> (Point, Point) {
        let mut hi = self.origin;
        for a in 0..self.dim {
            hi[a] += (self.counts[a] - 1) as f64 * self.h;
        }
        (self.origin, hi)
    }

    pub fn hull_contains(&self, p: &Point) -> bool {
        let (lo, hi) = self.hull();
        (0..self.dim).all(|a| p[a] >= lo[a] && p[a] <= hi[a])
    }

    /// Whether the shape's bounding box lies inside the union of closed cells.
    pub fn covers(&self, s: &Shape) -> bool {
        if s.dim() != self.dim {
            return false;
        }
        match s.bounding_box() {
            Some(None) => true,
            Some(Some((lo, hi))) => self.hull_contains(&lo) && self.hull_contains(&hi),
            None => false,
        }
    }

    /// Index of the node nearest to `p`, clamped to the grid.
    pub fn nearest_node(&self, p: &Point) -> NodeIndex {
        let mut i = [0; 3];
        for a in 0..self.dim {
            let k = ((p[a] - self.origin[a]) / self.h).round();
            i[a] = k.clamp(0.0, (self.counts[a] - 1) as f64) as usize;
        }
        NodeIndex(i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::Shape;
    use rand::{Rng, SeedableRng};

    fn grid2(origin: (f64, f64), h: f64, n: usize) -> Grid {
        Grid::new(2, Point::new2(origin.0, origin.1), h, &[n, n]).unwrap()
    }

    #[test]
    fn node_positions() {
        let g = grid2((0.0, 0.0), 1.0, 5);
        assert_eq!(g.node_position(NodeIndex::new(&[0, 0])).unwrap(), Point::ORIGIN);
        assert_eq!(g.node_position(NodeIndex::new(&[3, 2])).unwrap(), Point::new2(3.0, 2.0));
        let g = grid2((-1.0, -1.0), 0.5, 5);
        assert_eq!(g.node_position(NodeIndex::new(&[2, 2])).unwrap(), Point::ORIGIN);
        assert!(matches!(
            g.node_position(NodeIndex::new(&[5, 0])),
            Err(Error::OutOfBounds { .. })
        ));
    }

    #[test]
    fn invalid_grids_rejected() {
        assert!(Grid::new(2, Point::ORIGIN, 0.0, &[3, 3]).is_err());
        assert!(Grid::new(2, Point::ORIGIN, 1.0, &[3, 1]).is_err());
        assert!(Grid::new(4, Point::ORIGIN, 1.0, &[3, 3, 3, 3]).is_err());
        assert!(Grid::new(2, Point::ORIGIN, 1.0, &[3]).is_err());
    }

    #[test]
    fn corners() {
        let g1 = Grid::new(1, Point::ORIGIN, 1.0, &[4]).unwrap();
        assert_eq!(
            g1.cell_corners(CellIndex::new(&[1])).unwrap(),
            vec![NodeIndex::new(&[0]), NodeIndex::new(&[1])]
        );
        let g2 = grid2((0.0, 0.0), 1.0, 3);
        let mut c = g2.cell_corners(CellIndex::new(&[1, 1])).unwrap();
        c.sort();
        let mut want = vec![
            NodeIndex::new(&[0, 0]),
            NodeIndex::new(&[1, 0]),
            NodeIndex::new(&[0, 1]),
            NodeIndex::new(&[1, 1]),
        ];
        want.sort();
        assert_eq!(c, want);
        assert!(g2.cell_corners(CellIndex::new(&[0, 1])).is_err());
        assert!(g2.cell_corners(CellIndex::new(&[3, 1])).is_err());

        let g3 = Grid::new(3, Point::ORIGIN, 0.5, &[3, 4, 5]).unwrap();
        for cell in g3.cells() {
            let mut cs = g3.cell_corners(cell).unwrap();
            assert_eq!(cs.len(), 8);
            cs.sort();
            cs.dedup();
            assert_eq!(cs.len(), 8);
        }
    }

    #[test]
    fn cell_enumeration_visits_each_node_at_most_2n_times() {
        let g = Grid::new(3, Point::ORIGIN, 1.0, &[4, 3, 5]).unwrap();
        assert_eq!(g.cells().count(), g.cell_count());
        let mut visits = vec![0usize; g.node_count()];
        for c in g.cells() {
            for n in g.cell_corners(c).unwrap() {
                visits[g.linear(n)] += 1;
            }
        }
        assert!(visits.iter().all(|&v| (1..=8).contains(&v)));
    }

    #[test]
    fn linear_index_roundtrip_is_column_major() {
        let g = Grid::new(3, Point::ORIGIN, 1.0, &[4, 3, 5]).unwrap();
        assert_eq!(g.linear(NodeIndex::new(&[1, 0, 0])), 1);
        assert_eq!(g.linear(NodeIndex::new(&[0, 1, 0])), 4);
        assert_eq!(g.linear(NodeIndex::new(&[0, 0, 1])), 12);
        for l in 0..g.node_count() {
            assert_eq!(g.linear(g.multi(l)), l);
        }
    }

    #[test]
    fn covers_shapes() {
        let g = grid2((-2.0, -2.0), 0.5, 9);
        assert!(g.covers(&Shape::ball(Point::ORIGIN, 1.0, 2).unwrap()));
        assert!(!g.covers(&Shape::ball(Point::ORIGIN, 3.0, 2).unwrap()));
        // tangent to the hull boundary: bbox [-2, 2]^2 equals the hull
        assert!(g.covers(&Shape::ball(Point::ORIGIN, 2.0, 2).unwrap()));
        let c = Shape::complement(Shape::ball(Point::ORIGIN, 1.0, 2).unwrap());
        assert!(!g.covers(&c));
    }

    #[test]
    fn every_hull_point_has_a_node_within_half_diagonal() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for dim in 1..=3 {
            let g = Grid::new(dim, Point::ORIGIN, 0.3, &vec![6; dim]).unwrap();
            let (_, hi) = g.hull();
            for _ in 0..2000 {
                let mut p = Point::ORIGIN;
                for a in 0..dim {
                    p[a] = rng.random_range(0.0..=hi[a]);
                }
                let z = g.position_unchecked(g.nearest_node(&p));
                assert!(z.distance(&p) <= g.cell_diagonal() / 2.0 + 1e-12);
            }
        }
    }

    #[test]
    fn covering_grid_contains_box_and_keeps_shift() {
        let g = Grid::covering(
            2,
            Point::new2(-1.0, -1.0),
            Point::new2(1.0, 1.0),
            0.3,
            Point::new2(0.15, 0.15),
        )
        .unwrap();
        assert!(g.hull_contains(&Point::new2(-1.0, -1.0)));
        assert!(g.hull_contains(&Point::new2(1.0, 1.0)));
        let frac = ((g.origin()[0] - 0.15) / 0.3).round() * 0.3 + 0.15 - g.origin()[0];
        assert!(frac.abs() < 1e-12);
    }
}
