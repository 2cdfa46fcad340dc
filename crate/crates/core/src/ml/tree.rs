use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{JointVector, Position3, JOINTS};
use crate::ml::dataset::DatasetRow;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeConfig {
    pub max_depth: usize,
    /// Smallest number of training rows a leaf may hold.
    pub min_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: 84,
            min_leaf: 1,
        }
    }
}

/// Tree node stored in a flat arena; children are indices into it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    Split {
        /// 0, 1 or 2 for x, y, z.
        feature: u8,
        /// Rows with `coordinate <= threshold` go left.
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        joints: JointVector,
        rows: usize,
    },
}

/// Multi-output CART mapping a position to the mean joint vector of its leaf.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub config: TreeConfig,
    /// Root at index 0.
    pub nodes: Vec<Node>,
    /// Deepest leaf (root alone has depth 0).
    pub depth: usize,
}

/// Each joint enters the split criterion as the point `(cos θ, sin θ)` on
/// the unit circle, so angles either side of ±π count as close.
const OUTPUTS: usize = 2 * JOINTS;

fn embed(q: &JointVector) -> [f64; OUTPUTS] {
    std::array::from_fn(|k| if k % 2 == 0 { q[k / 2].cos() } else { q[k / 2].sin() })
}

struct Builder<'a> {
    xs: Vec<[f64; 3]>,
    ys: Vec<[f64; OUTPUTS]>,
    joints: Vec<JointVector>,
    config: &'a TreeConfig,
    nodes: Vec<Node>,
    depth: usize,
}

/// Sum of squared deviations from the mean over all outputs, given the
/// running sums.
fn sse(sum: &[f64; OUTPUTS], sum_sq: f64, n: usize) -> f64 {
    sum_sq - sum.iter().map(|s| s * s).sum::<f64>() / n as f64
}

impl Builder<'_> {
    /// Leaf holding the circular mean of its rows' joints.
    fn leaf(&mut self, idx: &[usize]) -> usize {
        let mut sum = [0.0; OUTPUTS];
        for &i in idx {
            for (s, y) in sum.iter_mut().zip(&self.ys[i]) {
                *s += y;
            }
        }
        let mean = if idx.len() == 1 {
            self.joints[idx[0]]
        } else {
            JointVector(std::array::from_fn(|j| sum[2 * j + 1].atan2(sum[2 * j])))
        };
        self.nodes.push(Node::Leaf {
            joints: mean,
            rows: idx.len(),
        });
        self.nodes.len() - 1
    }

    /// Best `(feature, threshold, sse)` over all features.
    fn best_split(&self, idx: &mut [usize]) -> Option<(u8, f64, f64)> {
        let n = idx.len();
        let min_leaf = self.config.min_leaf.max(1);
        let mut total = [0.0; OUTPUTS];
        let mut total_sq = 0.0;
        for &i in idx.iter() {
            for (t, y) in total.iter_mut().zip(&self.ys[i]) {
                *t += y;
                total_sq += y * y;
            }
        }
        let parent = sse(&total, total_sq, n);
        if parent <= 1e-12 * n as f64 {
            return None;
        }
        let mut best: Option<(u8, f64, f64)> = None;
        for feature in 0..3u8 {
            let f = feature as usize;
            idx.sort_unstable_by(|&a, &b| self.xs[a][f].total_cmp(&self.xs[b][f]));
            let mut left = [0.0; OUTPUTS];
            let mut left_sq = 0.0;
            for k in 0..n - 1 {
                for (l, y) in left.iter_mut().zip(&self.ys[idx[k]]) {
                    *l += y;
                    left_sq += y * y;
                }
                let n_left = k + 1;
                if n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let here = self.xs[idx[k]][f];
                let next = self.xs[idx[k + 1]][f];
                if here == next {
                    continue;
                }
                let right: [f64; OUTPUTS] = std::array::from_fn(|j| total[j] - left[j]);
                let cost = sse(&left, left_sq, n_left) + sse(&right, total_sq - left_sq, n - n_left);
                if best.is_none_or(|(_, _, c)| cost < c) {
                    let mut threshold = 0.5 * (here + next);
                    if threshold >= next {
                        threshold = here;
                    }
                    best = Some((feature, threshold, cost));
                }
            }
        }
        best.filter(|&(_, _, cost)| cost < parent)
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        self.depth = self.depth.max(depth);
        if depth >= self.config.max_depth || idx.len() < 2 * self.config.min_leaf.max(1) {
            return self.leaf(idx);
        }
        let Some((feature, threshold, _)) = self.best_split(idx) else {
            return self.leaf(idx);
        };
        let f = feature as usize;
        idx.sort_unstable_by(|&a, &b| self.xs[a][f].total_cmp(&self.xs[b][f]));
        let cut = idx.partition_point(|&i| self.xs[i][f] <= threshold);
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf {
            joints: JointVector::ZERO,
            rows: 0,
        });
        let (lo, hi) = idx.split_at_mut(cut);
        let left = self.grow(lo, depth + 1);
        let right = self.grow(hi, depth + 1);
        self.nodes[slot] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        slot
    }
}

/// Greedy CART on `(x, y, z)`: every split minimises the summed squared
/// error of the seven joint outputs, each measured on the unit circle.
pub fn fit_tree(train: &[DatasetRow], config: &TreeConfig) -> Result<RegressionTree> {
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let mut builder = Builder {
        xs: train.iter().map(|r| r.position.as_array()).collect(),
        ys: train.iter().map(|r| embed(&r.joints)).collect(),
        joints: train.iter().map(|r| r.joints.wrapped()).collect(),
        config,
        nodes: Vec::new(),
        depth: 0,
    };
    let mut idx: Vec<usize> = (0..train.len()).collect();
    builder.grow(&mut idx, 0);
    Ok(RegressionTree {
        config: *config,
        depth: builder.depth,
        nodes: builder.nodes,
    })
}

impl RegressionTree {
    /// Index of the leaf that `position` falls into.
    pub fn leaf_index(&self, position: &Position3) -> usize {
        let p = position.as_array();
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if p[*feature as usize] <= *threshold { *left } else { *right },
                Node::Leaf { .. } => return at,
            }
        }
    }

    pub fn predict(&self, position: &Position3) -> JointVector {
        match &self.nodes[self.leaf_index(position)] {
            Node::Leaf { joints, .. } => joints.wrapped(),
            Node::Split { .. } => unreachable!("leaf_index stops at leaves"),
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Structural sanity check for trees read from disk.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::MissingModel(format!("malformed tree: {m}")));
        if self.nodes.is_empty() {
            return bad("no nodes");
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if let Node::Split {
                feature, left, right, ..
            } = node
            {
                if *feature > 2 || *left <= i || *right <= i || *left >= self.nodes.len() || *right >= self.nodes.len() {
                    return bad("child index out of order");
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(x: f64, y: f64, z: f64, q: f64) -> DatasetRow {
        DatasetRow {
            joints: JointVector::new([q; JOINTS]),
            position: Position3::new(x, y, z),
        }
    }

    #[test]
    fn single_row_is_a_leaf() {
        let r = row(1.0, 2.0, 3.0, 0.4);
        let tree = fit_tree(&[r], &TreeConfig::default()).unwrap();
        assert_eq!(tree.nodes.len(), 1);
        assert_eq!(tree.predict(&Position3::new(-50.0, 0.0, 9.0)), r.joints);
    }

    #[test]
    fn separates_two_clusters_on_x() {
        let rows = vec![
            row(0.0, 0.0, 0.0, 0.1),
            row(0.1, 5.0, -3.0, 0.3),
            row(0.2, -5.0, 3.0, 0.2),
            row(10.0, 0.2, 0.0, 1.1),
            row(10.1, -4.0, 1.0, 1.3),
            row(10.2, 4.0, -1.0, 1.2),
        ];
        let cfg = TreeConfig {
            max_depth: 1,
            min_leaf: 1,
        };
        let tree = fit_tree(&rows, &cfg).unwrap();

        // exhaustive search over every feature and cut point
        let mut best = (f64::INFINITY, 0usize, 0.0);
        for f in 0..3 {
            let mut vals: Vec<f64> = rows.iter().map(|r| r.position.as_array()[f]).collect();
            vals.sort_by(f64::total_cmp);
            for w in vals.windows(2) {
                let t = 0.5 * (w[0] + w[1]);
                let (l, r): (Vec<_>, Vec<_>) = rows.iter().partition(|r| r.position.as_array()[f] <= t);
                let cost = |s: &[&DatasetRow]| {
                    let n = s.len() as f64;
                    let mc = s.iter().map(|r| r.joints[0].cos()).sum::<f64>() / n;
                    let ms = s.iter().map(|r| r.joints[0].sin()).sum::<f64>() / n;
                    let d: f64 = s.iter().map(|r| (r.joints[0].cos() - mc).powi(2) + (r.joints[0].sin() - ms).powi(2)).sum();
                    d * JOINTS as f64
                };
                let c = cost(&l) + cost(&r);
                if c < best.0 {
                    best = (c, f, t);
                }
            }
        }
        match tree.nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(feature as usize, best.1);
                assert_eq!(threshold, best.2);
                assert_eq!(feature, 0);
            }
            _ => panic!("expected a split"),
        }
        assert!((tree.predict(&Position3::new(0.0, 0.0, 0.0))[0] - 0.2).abs() < 1e-12);
        assert!((tree.predict(&Position3::new(10.0, 0.0, 0.0))[0] - 1.2).abs() < 1e-12);
    }

    #[test]
    fn depth_is_bounded() {
        let rows: Vec<_> = (0..200).map(|i| row(i as f64, (i * 7 % 13) as f64, 0.0, (i as f64).sin())).collect();
        for depth in [0, 1, 3, 6] {
            let tree = fit_tree(
                &rows,
                &TreeConfig {
                    max_depth: depth,
                    min_leaf: 1,
                },
            )
            .unwrap();
            assert!(tree.depth <= depth);
            tree.validate().unwrap();
        }
    }
}
