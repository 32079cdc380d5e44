//! Exact 3D nearest-neighbor search.
//!
//! Ties in distance resolve to the smallest point index, in both the tree
//! and the brute-force path, so results do not depend on which is used.

use nalgebra::Vector3;

/// Below this many points the search is a linear scan.
pub const BRUTE_FORCE_BELOW: usize = 2000;

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone)]
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

#[derive(Debug, Clone)]
pub struct NearestNeighbors {
    points: Vec<Vector3<f64>>,
    perm: Vec<usize>,
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub dist_sq: f64,
}

impl Neighbor {
    fn better_than(&self, other: &Neighbor) -> bool {
        self.dist_sq < other.dist_sq || (self.dist_sq == other.dist_sq && self.index < other.index)
    }
}

impl NearestNeighbors {
    pub fn new(points: Vec<Vector3<f64>>) -> Self {
        Self::with_threshold(points, BRUTE_FORCE_BELOW)
    }

    /// Builds a tree only when there are at least `brute_below` points.
    pub fn with_threshold(points: Vec<Vector3<f64>>, brute_below: usize) -> Self {
        let mut nn = Self {
            perm: (0..points.len()).collect(),
            points,
            nodes: Vec::new(),
        };
        if nn.points.len() >= brute_below && !nn.points.is_empty() {
            nn.build(0, nn.points.len());
        }
        nn
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let (mut lo, mut hi) = (
            Vector3::repeat(f64::INFINITY),
            Vector3::repeat(f64::NEG_INFINITY),
        );
        for &i in &self.perm[start..end] {
            lo = lo.inf(&self.points[i]);
            hi = hi.sup(&self.points[i]);
        }
        let axis = (hi - lo).imax();
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.perm[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a][axis].total_cmp(&points[b][axis]).then(a.cmp(&b))
        });
        let value = self.points[self.perm[mid]][axis];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    /// Closest point to `query`, or `None` for an empty set.
    pub fn nearest(&self, query: &Vector3<f64>) -> Option<Neighbor> {
        self.nearest_impl(query, None)
    }

    /// Closest point other than the one at `exclude`.
    pub fn nearest_excluding(&self, query: &Vector3<f64>, exclude: usize) -> Option<Neighbor> {
        self.nearest_impl(query, Some(exclude))
    }

    fn nearest_impl(&self, query: &Vector3<f64>, exclude: Option<usize>) -> Option<Neighbor> {
        let mut best = Neighbor {
            index: usize::MAX,
            dist_sq: f64::INFINITY,
        };
        if self.nodes.is_empty() {
            for (i, p) in self.points.iter().enumerate() {
                if Some(i) != exclude {
                    consider(&mut best, i, (p - query).norm_squared());
                }
            }
        } else {
            self.search(0, query, exclude, &mut best);
        }
        (best.index != usize::MAX).then_some(best)
    }

    fn search(&self, node: usize, q: &Vector3<f64>, exclude: Option<usize>, best: &mut Neighbor) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.perm[start..end] {
                    if Some(i) != exclude {
                        consider(best, i, (self.points[i] - q).norm_squared());
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
                self.search(near, q, exclude, best);
                if diff * diff <= best.dist_sq {
                    self.search(far, q, exclude, best);
                }
            }
        }
    }
}

fn consider(best: &mut Neighbor, index: usize, dist_sq: f64) {
    let cand = Neighbor { index, dist_sq };
    if cand.better_than(best) {
        *best = cand;
    }
}
