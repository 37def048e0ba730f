//! Exact k-d tree over the rows of a point set. Leaves hold up to
//! `LEAF_SIZE` points; inner nodes split at the median of the widest
//! coordinate.

use crate::data::PointSet;

const LEAF_SIZE: usize = 12;

enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

pub(crate) struct KdTree<'a> {
    points: &'a PointSet,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl<'a> KdTree<'a> {
    pub(crate) fn build(points: &'a PointSet) -> Self {
        let mut tree = KdTree {
            points,
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        tree.build_node(0, points.len());
        tree
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let d = self.points.dim();
        let mut axis = 0;
        let mut widest = -1.0;
        for a in 0..d {
            let (lo, hi) = self.order[start..end]
                .iter()
                .map(|&i| self.points.row(i)[a])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                });
            if hi - lo > widest {
                widest = hi - lo;
                axis = a;
            }
        }
        if widest <= 0.0 {
            // All points coincide; nothing to split.
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mid = start + (end - start) / 2;
        let pts = self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&x, &y| {
            pts.row(x)[axis].total_cmp(&pts.row(y)[axis])
        });
        let value = pts.row(self.order[mid])[axis];
        self.nodes.push(Node::Split {
            axis,
            value,
            left: 0,
            right: 0,
        });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        if let Node::Split {
            left: l, right: r, ..
        } = &mut self.nodes[id]
        {
            *l = left;
            *r = right;
        }
        id
    }

    /// Squared distance from point `query` to its k-th nearest other point.
    pub(crate) fn kth_neighbor_sq(&self, query: usize, k: usize) -> f64 {
        let mut best = Best::new(k);
        self.search(0, query, self.points.row(query), &mut best);
        best.kth()
    }

    fn search(&self, node: usize, query: usize, q: &[f64], best: &mut Best) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &j in &self.order[start..end] {
                    if j != query {
                        best.offer(squared_distance(q, self.points.row(j)));
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, query, q, best);
                if diff * diff <= best.kth() {
                    self.search(far, query, q, best);
                }
            }
        }
    }
}

/// The k smallest squared distances seen so far, kept sorted.
struct Best {
    k: usize,
    dist: Vec<f64>,
}

impl Best {
    fn new(k: usize) -> Self {
        Best {
            k,
            dist: Vec::with_capacity(k + 1),
        }
    }

    fn kth(&self) -> f64 {
        if self.dist.len() < self.k {
            f64::INFINITY
        } else {
            self.dist[self.k - 1]
        }
    }

    fn offer(&mut self, d2: f64) {
        if d2 >= self.kth() {
            return;
        }
        let pos = self.dist.partition_point(|&x| x <= d2);
        self.dist.insert(pos, d2);
        self.dist.truncate(self.k);
    }
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
