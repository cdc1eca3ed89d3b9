//! CART classification tree with Gini impurity.

use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf {
        class: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeParams {
    pub min_samples_leaf: usize,
    pub features_per_split: usize,
}

/// A fitted tree. Samples with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            p * p
        })
        .sum::<f64>()
}

/// Majority class; ties go to the smallest class index.
pub(crate) fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best
}

struct Builder<'a, R> {
    rows: &'a [&'a [f64]],
    labels: &'a [usize],
    n_classes: usize,
    params: &'a TreeParams,
    rng: &'a mut R,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl<R: Rng> Builder<'_, R> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &i in idx {
            c[self.labels[i]] += 1;
        }
        c
    }

    /// Best split of `idx` on `feature`, or `None` if the feature is constant
    /// or no split respects the leaf-size limit.
    fn split_on(&self, idx: &mut [usize], feature: usize) -> Option<Option<BestSplit>> {
        let rows = self.rows;
        idx.sort_by(|&a, &b| rows[a][feature].total_cmp(&rows[b][feature]));
        let first = rows[idx[0]][feature];
        let last = rows[idx[idx.len() - 1]][feature];
        if first == last {
            return None;
        }
        let n = idx.len();
        let min_leaf = self.params.min_samples_leaf;
        let mut left = vec![0usize; self.n_classes];
        let mut right = self.counts(idx);
        let mut best: Option<BestSplit> = None;
        for k in 0..n - 1 {
            let c = self.labels[idx[k]];
            left[c] += 1;
            right[c] -= 1;
            let v = rows[idx[k]][feature];
            let next = rows[idx[k + 1]][feature];
            let n_left = k + 1;
            if v == next || n_left < min_leaf || n - n_left < min_leaf {
                continue;
            }
            let impurity = (n_left as f64 * gini(&left, n_left)
                + (n - n_left) as f64 * gini(&right, n - n_left))
                / n as f64;
            if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                let mid = v + (next - v) / 2.0;
                let threshold = if mid < next { mid } else { v };
                best = Some(BestSplit {
                    feature,
                    threshold,
                    impurity,
                });
            }
        }
        Some(best)
    }

    fn build(&mut self, mut idx: Vec<usize>) -> usize {
        let counts = self.counts(&idx);
        let n = idx.len();
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            class: majority(&counts),
        });
        if pure || n < 2 * self.params.min_samples_leaf {
            return id;
        }

        let d = self.rows[0].len();
        let mut order: Vec<usize> = (0..d).collect();
        order.shuffle(self.rng);
        let mut best: Option<BestSplit> = None;
        let mut visited = 0;
        for &f in &order {
            if visited >= self.params.features_per_split {
                break;
            }
            // constant features do not count towards the per-split budget
            let Some(found) = self.split_on(&mut idx, f) else {
                continue;
            };
            visited += 1;
            if let Some(s) = found {
                if best.as_ref().is_none_or(|b| s.impurity < b.impurity) {
                    best = Some(s);
                }
            }
        }
        let Some(split) = best else {
            return id;
        };

        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.rows[i][split.feature] <= split.threshold);
        let left = self.build(l);
        let right = self.build(r);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

impl DecisionTree {
    /// Fit on the rows listed in `sample` (duplicates allowed, as produced by
    /// bootstrapping).
    pub fn fit<R: Rng>(
        rows: &[&[f64]],
        labels: &[usize],
        n_classes: usize,
        sample: Vec<usize>,
        params: &TreeParams,
        rng: &mut R,
    ) -> Self {
        let mut b = Builder {
            rows,
            labels,
            n_classes,
            params,
            rng,
            nodes: Vec::new(),
        };
        b.build(sample);
        Self { nodes: b.nodes }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { class } => return class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}
