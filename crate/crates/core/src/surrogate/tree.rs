//! CART regression / classification trees.
//!
//! Splits are searched exhaustively over midpoints of consecutive distinct
//! feature values. Ties keep the first candidate found, scanning features in
//! ascending index and thresholds in ascending order.

use rand::seq::index;

use crate::matrix::Matrix;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Criterion {
    /// Variance reduction; leaves predict the mean.
    Variance,
    /// Gini impurity over labels `0..n_classes`; leaves predict the mode.
    Gini { n_classes: usize },
}

#[derive(Debug, Clone)]
pub(crate) struct TreeConfig {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Number of features drawn per split; `None` uses all of them.
    pub max_features: Option<usize>,
    pub criterion: Criterion,
}

#[derive(Debug, Clone)]
pub(crate) enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
        /// Training rows (with bootstrap multiplicity) that reached the leaf.
        samples: Vec<usize>,
    },
}

#[derive(Debug, Clone)]
pub(crate) struct Tree {
    nodes: Vec<Node>,
}

const GAIN_EPS: f64 = 1e-12;

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [f64],
    cfg: &'a TreeConfig,
    rng: &'a mut Rng,
    nodes: Vec<Node>,
    pairs: Vec<(f64, usize)>,
}

impl Tree {
    /// Fits a tree on `rows` (indices into `x`/`y`, repeats allowed).
    /// `rows` must be non-empty.
    pub fn fit(x: &Matrix, y: &[f64], rows: Vec<usize>, cfg: &TreeConfig, rng: &mut Rng) -> Tree {
        debug_assert!(!rows.is_empty());
        let mut b = Builder {
            x,
            y,
            cfg,
            rng,
            nodes: Vec::new(),
            pairs: Vec::with_capacity(rows.len()),
        };
        b.grow(rows, 0);
        Tree { nodes: b.nodes }
    }

    fn leaf_node(&self, x: &[f64]) -> &Node {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
                leaf => return leaf,
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        match self.leaf_node(x) {
            Node::Leaf { value, .. } => *value,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn leaf_samples(&self, x: &[f64]) -> &[usize] {
        match self.leaf_node(x) {
            Node::Leaf { samples, .. } => samples,
            Node::Split { .. } => unreachable!(),
        }
    }

    /// Mutable access to every leaf as `(value, samples)`.
    pub fn leaves_mut(&mut self) -> impl Iterator<Item = (&mut f64, &[usize])> {
        self.nodes.iter_mut().filter_map(|n| match n {
            Node::Leaf { value, samples } => Some((value, samples.as_slice())),
            Node::Split { .. } => None,
        })
    }

    /// Drops per-leaf sample lists once they are no longer needed.
    pub fn forget_samples(&mut self) {
        for n in &mut self.nodes {
            if let Node::Leaf { samples, .. } = n {
                *samples = Vec::new();
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    #[cfg(test)]
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Builder<'_> {
    fn leaf_value(&self, rows: &[usize]) -> f64 {
        match self.cfg.criterion {
            Criterion::Variance => rows.iter().map(|&r| self.y[r]).sum::<f64>() / rows.len() as f64,
            Criterion::Gini { n_classes } => {
                let counts = class_counts(self.y, rows, n_classes);
                // lowest label wins ties
                let mut best = 0;
                for (c, &n) in counts.iter().enumerate() {
                    if n > counts[best] {
                        best = c;
                    }
                }
                best as f64
            }
        }
    }

    fn push_leaf(&mut self, rows: Vec<usize>) -> usize {
        let value = self.leaf_value(&rows);
        self.nodes.push(Node::Leaf {
            value,
            samples: rows,
        });
        self.nodes.len() - 1
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let n = rows.len();
        let cfg = self.cfg;
        let depth_ok = cfg.max_depth.is_none_or(|d| depth < d);
        if !depth_ok
            || n < cfg.min_samples_split
            || n < 2 * cfg.min_samples_leaf
            || self.is_pure(&rows)
        {
            return self.push_leaf(rows);
        }
        let Some(best) = self.best_split(&rows) else {
            return self.push_leaf(rows);
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.x.get(r, best.feature) <= best.threshold);
        let idx = self.nodes.len();
        // placeholder, patched once children exist
        self.nodes.push(Node::Leaf {
            value: 0.0,
            samples: Vec::new(),
        });
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[idx] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        idx
    }

    fn is_pure(&self, rows: &[usize]) -> bool {
        let first = self.y[rows[0]];
        rows.iter().all(|&r| self.y[r] == first)
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.x.n_cols();
        match self.cfg.max_features {
            Some(k) if k < d => {
                let mut f = index::sample(self.rng, d, k.max(1)).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        }
    }

    fn best_split(&mut self, rows: &[usize]) -> Option<BestSplit> {
        let features = self.candidate_features();
        let n = rows.len();
        let min_leaf = self.cfg.min_samples_leaf.max(1);
        let parent = match self.cfg.criterion {
            Criterion::Variance => {
                let s: f64 = rows.iter().map(|&r| self.y[r]).sum();
                s * s / n as f64
            }
            Criterion::Gini { n_classes } => {
                class_counts(self.y, rows, n_classes)
                    .iter()
                    .map(|&c| (c * c) as f64)
                    .sum::<f64>()
                    / n as f64
            }
        };
        let mut best: Option<BestSplit> = None;
        let mut pairs = std::mem::take(&mut self.pairs);
        for f in features {
            pairs.clear();
            pairs.extend(rows.iter().map(|&r| (self.x.get(r, f), r)));
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if pairs[0].0 == pairs[n - 1].0 {
                continue;
            }
            match self.cfg.criterion {
                Criterion::Variance => {
                    let total: f64 = pairs.iter().map(|&(_, r)| self.y[r]).sum();
                    let mut left = 0.0;
                    for i in 0..n - 1 {
                        left += self.y[pairs[i].1];
                        let nl = i + 1;
                        let nr = n - nl;
                        if pairs[i].0 == pairs[i + 1].0 || nl < min_leaf || nr < min_leaf {
                            continue;
                        }
                        let right = total - left;
                        let score = left * left / nl as f64 + right * right / nr as f64;
                        consider(&mut best, f, pairs[i].0, pairs[i + 1].0, score);
                    }
                }
                Criterion::Gini { n_classes } => {
                    let mut right = vec![0usize; n_classes];
                    for &(_, r) in pairs.iter() {
                        right[self.y[r] as usize] += 1;
                    }
                    let mut left = vec![0usize; n_classes];
                    let mut left_sq: usize = 0;
                    let mut right_sq: usize = right.iter().map(|c| c * c).sum();
                    for i in 0..n - 1 {
                        let c = self.y[pairs[i].1] as usize;
                        left_sq += 2 * left[c] + 1;
                        left[c] += 1;
                        right_sq -= 2 * right[c] - 1;
                        right[c] -= 1;
                        let nl = i + 1;
                        let nr = n - nl;
                        if pairs[i].0 == pairs[i + 1].0 || nl < min_leaf || nr < min_leaf {
                            continue;
                        }
                        let score = left_sq as f64 / nl as f64 + right_sq as f64 / nr as f64;
                        consider(&mut best, f, pairs[i].0, pairs[i + 1].0, score);
                    }
                }
            }
        }
        self.pairs = pairs;
        best.filter(|b| b.score - parent > GAIN_EPS * parent.abs().max(1.0))
    }
}

fn consider(best: &mut Option<BestSplit>, feature: usize, lo: f64, hi: f64, score: f64) {
    if best.as_ref().is_none_or(|b| score > b.score) {
        let mut threshold = lo + (hi - lo) / 2.0;
        if threshold >= hi {
            threshold = lo;
        }
        *best = Some(BestSplit {
            feature,
            threshold,
            score,
        });
    }
}

fn class_counts(y: &[f64], rows: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0usize; n_classes];
    for &r in rows {
        counts[y[r] as usize] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;

    fn cfg(depth: Option<usize>, criterion: Criterion) -> TreeConfig {
        TreeConfig {
            max_depth: depth,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: None,
            criterion,
        }
    }

    #[test]
    fn depth_zero_is_mean_leaf() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
        let y = [1.0, 2.0, 6.0];
        let t = Tree::fit(
            &x,
            &y,
            vec![0, 1, 2],
            &cfg(Some(0), Criterion::Variance),
            &mut rng_from(0),
        );
        assert_eq!(t.n_leaves(), 1);
        assert_eq!(t.predict(&[5.0]), 3.0);
    }

    #[test]
    fn step_function_is_recovered() {
        let rows: Vec<[f64; 2]> = (0..20).map(|i| [i as f64, 0.0]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = (0..20).map(|i| if i < 7 { 1.0 } else { 5.0 }).collect();
        let t = Tree::fit(
            &x,
            &y,
            (0..20).collect(),
            &cfg(None, Criterion::Variance),
            &mut rng_from(0),
        );
        assert_eq!(t.n_leaves(), 2);
        assert_eq!(t.depth(), 1);
        assert_eq!(t.predict(&[6.4, 0.0]), 1.0);
        assert_eq!(t.predict(&[6.6, 0.0]), 5.0);
    }

    #[test]
    fn tie_prefers_lowest_feature() {
        // both features separate the targets identically
        let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]).unwrap();
        let y = [0.0, 0.0, 1.0, 1.0];
        let t = Tree::fit(
            &x,
            &y,
            vec![0, 1, 2, 3],
            &cfg(Some(1), Criterion::Variance),
            &mut rng_from(0),
        );
        match &t.nodes[0] {
            Node::Split {
                feature, threshold, ..
            } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 1.5);
            }
            _ => panic!("expected split"),
        }
    }

    #[test]
    fn min_leaf_blocks_splits() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]).unwrap();
        let y = [0.0, 0.0, 1.0, 1.0];
        let mut c = cfg(None, Criterion::Variance);
        c.min_samples_leaf = 4;
        let t = Tree::fit(&x, &y, vec![0, 1, 2, 3], &c, &mut rng_from(0));
        assert_eq!(t.n_leaves(), 1);
    }

    #[test]
    fn gini_separates_classes() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0], [4.0]]).unwrap();
        let y = [1.0, 1.0, 0.0, 0.0, 0.0];
        let t = Tree::fit(
            &x,
            &y,
            vec![0, 1, 2, 3, 4],
            &cfg(None, Criterion::Gini { n_classes: 2 }),
            &mut rng_from(0),
        );
        assert_eq!(t.predict(&[0.5]), 1.0);
        assert_eq!(t.predict(&[3.5]), 0.0);
        let t0 = Tree::fit(
            &x,
            &y,
            vec![0, 1, 2, 3, 4],
            &cfg(Some(0), Criterion::Gini { n_classes: 2 }),
            &mut rng_from(0),
        );
        assert_eq!(t0.predict(&[0.5]), 0.0);
    }

    #[test]
    fn leaf_samples_keep_multiplicity() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let y = [3.0, 3.0];
        let t = Tree::fit(
            &x,
            &y,
            vec![0, 0, 1],
            &cfg(None, Criterion::Variance),
            &mut rng_from(0),
        );
        assert_eq!(t.leaf_samples(&[0.0]), &[0, 0, 1]);
    }
}
