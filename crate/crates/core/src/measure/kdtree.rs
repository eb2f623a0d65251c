//! Static kd-tree over a weighted point set, with per-node weight sums so
//! that ball queries stop descending as soon as a box lies inside the ball.

const LEAF_SIZE: usize = 16;

#[derive(Clone, Debug)]
struct KdNode {
    start: usize,
    end: usize,
    weight: f64,
    children: Option<(usize, usize)>,
}

#[derive(Clone, Debug)]
pub(crate) struct KdTree {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
    nodes: Vec<KdNode>,
    bounds: Vec<f64>,
}

impl KdTree {
    pub(crate) fn build(dim: usize, coords: &[f64], weights: &[f64]) -> Self {
        let n = weights.len();
        let mut order: Vec<usize> = (0..n).collect();
        let mut tree = KdTree {
            dim,
            coords: Vec::with_capacity(coords.len()),
            weights: Vec::with_capacity(n),
            nodes: Vec::new(),
            bounds: Vec::new(),
        };
        if n > 0 {
            tree.split(coords, weights, &mut order, 0, n);
        }
        tree.coords = order
            .iter()
            .flat_map(|&i| coords[i * dim..(i + 1) * dim].iter().copied())
            .collect();
        tree.weights = order.iter().map(|&i| weights[i]).collect();
        tree
    }

    fn split(
        &mut self,
        coords: &[f64],
        weights: &[f64],
        order: &mut [usize],
        start: usize,
        end: usize,
    ) -> usize {
        let dim = self.dim;
        let id = self.nodes.len();
        let slice = &order[start..end];
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        let mut weight = 0.0;
        for &i in slice {
            weight += weights[i];
            for d in 0..dim {
                let v = coords[i * dim + d];
                lo[d] = lo[d].min(v);
                hi[d] = hi[d].max(v);
            }
        }
        self.bounds.extend_from_slice(&lo);
        self.bounds.extend_from_slice(&hi);
        self.nodes.push(KdNode {
            start,
            end,
            weight,
            children: None,
        });
        if end - start <= LEAF_SIZE {
            return id;
        }
        let axis = (0..dim)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap_or(0);
        if hi[axis] <= lo[axis] {
            // All points coincide.
            return id;
        }
        let mid = (end - start) / 2;
        order[start..end].select_nth_unstable_by(mid, |&a, &b| {
            coords[a * dim + axis].total_cmp(&coords[b * dim + axis])
        });
        let left = self.split(coords, weights, order, start, start + mid);
        let right = self.split(coords, weights, order, start + mid, end);
        self.nodes[id].children = Some((left, right));
        id
    }

    fn box_distances(&self, node: usize, x: &[f64]) -> (f64, f64) {
        let dim = self.dim;
        let base = node * 2 * dim;
        let (lo, hi) = (
            &self.bounds[base..base + dim],
            &self.bounds[base + dim..base + 2 * dim],
        );
        let mut near = 0.0;
        let mut far = 0.0;
        for d in 0..dim {
            let below = lo[d] - x[d];
            let above = x[d] - hi[d];
            let gap = below.max(above).max(0.0);
            near += gap * gap;
            let reach = (x[d] - lo[d]).abs().max((hi[d] - x[d]).abs());
            far += reach * reach;
        }
        (near, far)
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    fn dist2(&self, i: usize, x: &[f64]) -> f64 {
        self.point(i)
            .iter()
            .zip(x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// Total weight of points `y` with `|x - y| <= r`.
    pub(crate) fn ball_weight(&self, x: &[f64], r: f64) -> f64 {
        if self.nodes.is_empty() {
            return 0.0;
        }
        let r2 = r * r;
        let mut total = 0.0;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let (near, far) = self.box_distances(id, x);
            if near > r2 {
                continue;
            }
            let node = &self.nodes[id];
            if far <= r2 {
                total += node.weight;
                continue;
            }
            match node.children {
                Some((l, rgt)) => {
                    stack.push(rgt);
                    stack.push(l);
                }
                None => {
                    for i in node.start..node.end {
                        if self.dist2(i, x) <= r2 {
                            total += self.weights[i];
                        }
                    }
                }
            }
        }
        total
    }

    /// Distance from `x` to its `k`-th nearest point (counting a point at `x`).
    pub(crate) fn kth_neighbor_distance(&self, x: &[f64], k: usize) -> f64 {
        let mut best: Vec<f64> = Vec::with_capacity(k + 1);
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let (near, _) = self.box_distances(id, x);
            if best.len() == k && near > best[k - 1] {
                continue;
            }
            let node = &self.nodes[id];
            match node.children {
                Some((l, rgt)) => {
                    // nearer child on top so the bound tightens early
                    if self.box_distances(l, x).0 <= self.box_distances(rgt, x).0 {
                        stack.push(rgt);
                        stack.push(l);
                    } else {
                        stack.push(l);
                        stack.push(rgt);
                    }
                }
                None => {
                    for i in node.start..node.end {
                        let d2 = self.dist2(i, x);
                        if best.len() < k || d2 < best[k - 1] {
                            let pos = best.partition_point(|v| *v <= d2);
                            best.insert(pos, d2);
                            best.truncate(k);
                        }
                    }
                }
            }
        }
        best.last().copied().unwrap_or(f64::INFINITY).sqrt()
    }
}
