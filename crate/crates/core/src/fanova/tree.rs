//! Regression tree over discrete configuration coordinates with per-leaf
//! box bookkeeping for exact marginalization.
//!
//! Coordinates take values from finite sorted domains; nodes split on a
//! domain-index threshold, so every leaf covers a product of index ranges (a
//! box). The boxes of all leaves partition the whole space, which is what
//! makes domain-weighted averages exact rather than sampled.

use rand_chacha::ChaCha8Rng;

/// Inclusive domain-index range of one coordinate inside a box.
pub type IdxRange = (u16, u16);

#[derive(Debug, Clone)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        coord: usize,
        /// left child covers domain indices <= split_idx
        split_idx: u16,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
pub struct Leaf {
    pub value: f64,
    /// one inclusive index range per coordinate
    pub ranges: Vec<IdxRange>,
}

#[derive(Debug, Clone)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
    pub leaves: Vec<Leaf>,
}

pub struct TreeParams<'a> {
    /// domain size per coordinate
    pub domain_sizes: &'a [usize],
    pub min_leaf: usize,
    /// coordinates tried per split
    pub n_candidate_coords: usize,
}

struct Builder<'a> {
    params: &'a TreeParams<'a>,
    /// sample value indices: samples[k][coord]
    xs: &'a [Vec<u16>],
    ys: &'a [f64],
    nodes: Vec<Node>,
    leaves: Vec<Leaf>,
    rng: ChaCha8Rng,
}

impl<'a> Builder<'a> {
    fn grow(&mut self, idx: Vec<usize>, bbox: Vec<IdxRange>) -> usize {
        if let Some((coord, split_idx, left_idx, right_idx)) = self.best_split(&idx, &bbox) {
            let mut left_box = bbox.clone();
            left_box[coord].1 = split_idx;
            let mut right_box = bbox;
            right_box[coord].0 = split_idx + 1;
            let left = self.grow(left_idx, left_box);
            let right = self.grow(right_idx, right_box);
            self.nodes.push(Node::Split {
                coord,
                split_idx,
                left,
                right,
            });
        } else {
            let value = self.ys_mean(&idx);
            self.leaves.push(Leaf {
                value,
                ranges: bbox,
            });
            self.nodes.push(Node::Leaf { value });
        }
        self.nodes.len() - 1
    }

    fn ys_mean(&self, idx: &[usize]) -> f64 {
        idx.iter().map(|&k| self.ys[k]).sum::<f64>() / idx.len() as f64
    }

    /// Best variance-reduction split among a random coordinate subset.
    /// Pure nodes (all targets equal) and undersized nodes become leaves;
    /// an impure node takes the best split even when the immediate variance
    /// reduction is zero (pure interactions need the second level).
    fn best_split(
        &mut self,
        idx: &[usize],
        bbox: &[IdxRange],
    ) -> Option<(usize, u16, Vec<usize>, Vec<usize>)> {
        if idx.len() < 2 * self.params.min_leaf {
            return None;
        }
        let first = self.ys[idx[0]];
        if idx.iter().all(|&k| self.ys[k] == first) {
            return None;
        }
        let splittable: Vec<usize> = (0..bbox.len()).filter(|&c| bbox[c].0 < bbox[c].1).collect();
        if splittable.is_empty() {
            return None;
        }
        let candidates = sample_coords(&splittable, self.params.n_candidate_coords, &mut self.rng);

        let mut best: Option<(f64, usize, u16)> = None;
        for &coord in &candidates {
            // (value index, target) sorted by value index
            let mut pairs: Vec<(u16, f64)> = idx
                .iter()
                .map(|&k| (self.xs[k][coord], self.ys[k]))
                .collect();
            pairs.sort_by_key(|p| p.0);
            if pairs.first().unwrap().0 == pairs.last().unwrap().0 {
                continue;
            }
            // prefix sums for O(1) SSE of any prefix/suffix
            let n = pairs.len();
            let mut sum = vec![0.0; n + 1];
            let mut sq = vec![0.0; n + 1];
            for (i, (_, y)) in pairs.iter().enumerate() {
                sum[i + 1] = sum[i] + y;
                sq[i + 1] = sq[i] + y * y;
            }
            let sse = |a: usize, b: usize| -> f64 {
                // SSE of pairs[a..b]
                let m = (b - a) as f64;
                sq[b] - sq[a] - (sum[b] - sum[a]) * (sum[b] - sum[a]) / m
            };
            for i in self.params.min_leaf..=n - self.params.min_leaf {
                if i < 1 || pairs[i - 1].0 == pairs[i].0 {
                    continue;
                }
                let score = sse(0, i) + sse(i, n);
                // split the box halfway between the observed values
                let split_idx = (pairs[i - 1].0 + pairs[i].0) / 2;
                if best.is_none_or(|(s, _, _)| score < s - 1e-12 * (1.0 + s.abs())) {
                    best = Some((score, coord, split_idx));
                }
            }
        }

        let (_score, coord, split_idx) = best?;
        let (mut left, mut right) = (Vec::new(), Vec::new());
        for &k in idx {
            if self.xs[k][coord] <= split_idx {
                left.push(k);
            } else {
                right.push(k);
            }
        }
        if left.len() < self.params.min_leaf || right.len() < self.params.min_leaf {
            return None;
        }
        Some((coord, split_idx, left, right))
    }
}

fn sample_coords(splittable: &[usize], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    use rand_chacha::rand_core::RngCore;
    if k >= splittable.len() {
        return splittable.to_vec();
    }
    // partial Fisher-Yates
    let mut pool = splittable.to_vec();
    for i in 0..k {
        let j = i + (rng.next_u64() as usize) % (pool.len() - i);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}

impl RegressionTree {
    /// Fits one tree on value-index samples. `rng` drives the per-split
    /// coordinate subsampling only.
    pub fn fit(xs: &[Vec<u16>], ys: &[f64], params: &TreeParams, rng: ChaCha8Rng) -> Self {
        assert!(!xs.is_empty());
        let bbox: Vec<IdxRange> = params
            .domain_sizes
            .iter()
            .map(|&s| (0u16, (s - 1) as u16))
            .collect();
        let mut builder = Builder {
            params,
            xs,
            ys,
            nodes: Vec::new(),
            leaves: Vec::new(),
            rng,
        };
        let root = builder.grow((0..xs.len()).collect(), bbox);
        debug_assert_eq!(root, builder.nodes.len() - 1);
        Self {
            nodes: builder.nodes,
            leaves: builder.leaves,
        }
    }

    /// Point prediction by walking the split nodes.
    pub fn predict(&self, x: &[u16]) -> f64 {
        let mut node = self.nodes.len() - 1;
        loop {
            match &self.nodes[node] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    coord,
                    split_idx,
                    left,
                    right,
                } => {
                    node = if x[*coord] <= *split_idx {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    /// Exact uniform-measure average of the tree over every configuration
    /// consistent with the fixed coordinate values: each leaf contributes its
    /// value weighted by the fraction of the free coordinates' domains its
    /// box covers.
    pub fn marginal(&self, domain_sizes: &[usize], fixed: &[(usize, u16)]) -> f64 {
        let mut acc = 0.0;
        'leaf: for leaf in &self.leaves {
            for &(coord, v) in fixed {
                let (lo, hi) = leaf.ranges[coord];
                if v < lo || v > hi {
                    continue 'leaf;
                }
            }
            let mut w = 1.0;
            for (coord, &(lo, hi)) in leaf.ranges.iter().enumerate() {
                if fixed.iter().any(|&(c, _)| c == coord) {
                    continue;
                }
                w *= f64::from(hi - lo + 1) / domain_sizes[coord] as f64;
            }
            acc += leaf.value * w;
        }
        acc
    }

    /// Mean and raw second moment of the tree under the uniform measure.
    pub fn moments(&self, domain_sizes: &[usize]) -> (f64, f64) {
        let mut mean = 0.0;
        let mut second = 0.0;
        for leaf in &self.leaves {
            let mut w = 1.0;
            for (coord, &(lo, hi)) in leaf.ranges.iter().enumerate() {
                w *= f64::from(hi - lo + 1) / domain_sizes[coord] as f64;
            }
            mean += leaf.value * w;
            second += leaf.value * leaf.value * w;
        }
        (mean, second)
    }
}
