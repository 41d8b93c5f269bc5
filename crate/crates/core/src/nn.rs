//! Static k-d tree for exact nearest-neighbour queries on oracle point clouds.

use crate::point::Point;

const LEAF: usize = 8;

pub(crate) struct KdTree {
    points: Vec<Point>,
    /// Permutation of point indices; every subtree owns a contiguous range.
    order: Vec<usize>,
    nodes: Vec<Node>,
}

struct Node {
    start: usize,
    end: usize,
    axis: usize,
    split: f64,
    children: Option<(usize, usize)>,
}

impl KdTree {
    pub(crate) fn new(points: Vec<Point>, dim: usize) -> KdTree {
        let mut tree = KdTree { order: (0..points.len()).collect(), points, nodes: Vec::new() };
        if !tree.points.is_empty() {
            tree.build(0, tree.points.len(), dim);
        }
        tree
    }

    fn build(&mut self, start: usize, end: usize, dim: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node { start, end, axis: 0, split: 0.0, children: None });
        if end - start <= LEAF {
            return id;
        }
        // split the widest axis at the median
        let axis = (0..dim)
            .map(|a| {
                let (lo, hi) = self.order[start..end]
                    .iter()
                    .map(|&i| self.points[i][a])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
                (a, hi - lo)
            })
            .fold((0, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best })
            .0;
        let mid = (start + end) / 2;
        let pts = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&i, &j| {
            pts[i][axis].total_cmp(&pts[j][axis]).then(i.cmp(&j))
        });
        let split = self.points[self.order[mid]][axis];
        let left = self.build(start, mid, dim);
        let right = self.build(mid, end, dim);
        let node = &mut self.nodes[id];
        node.axis = axis;
        node.split = split;
        node.children = Some((left, right));
        id
    }

    pub(crate) fn len(&self) -> usize {
        self.points.len()
    }

    pub(crate) fn point(&self, i: usize) -> Point {
        self.points[i]
    }

    /// Nearest point as `(distance, index)`; ties go to the lowest index.
    pub(crate) fn nearest(&self, q: &Point) -> Option<(f64, usize)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = (f64::INFINITY, usize::MAX);
        self.search(0, q, &mut best);
        Some((best.0.sqrt(), best.1))
    }

    fn search(&self, id: usize, q: &Point, best: &mut (f64, usize)) {
        let node = &self.nodes[id];
        match node.children {
            None => {
                for &i in &self.order[node.start..node.end] {
                    let d = self.points[i].distance_squared(q);
                    if d < best.0 || (d == best.0 && i < best.1) {
                        *best = (d, i);
                    }
                }
            }
            Some((l, r)) => {
                let diff = q[node.axis] - node.split;
                let (near, far) = if diff < 0.0 { (l, r) } else { (r, l) };
                self.search(near, q, best);
                if diff * diff <= best.0 {
                    self.search(far, q, best);
                }
            }
        }
    }
}
