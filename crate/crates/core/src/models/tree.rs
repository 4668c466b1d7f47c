//! Binary regression/classification trees grown from presorted columns.
//!
//! A node sends `x[feature] <= threshold` to the left child. Thresholds are
//! midpoints between consecutive distinct sorted values. Among equal-gain
//! candidates the lower feature id wins, then the lower threshold.

use rand::seq::index;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::FeatureId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: FeatureId,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        value: f64,
    },
}

/// Node list with the root at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64) -> Tree {
        Tree {
            nodes: vec![Node::Leaf { value }],
        }
    }

    /// Leaf value reached by a point whose feature values come from `get`.
    pub fn eval(&self, get: &dyn Fn(FeatureId) -> f64) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if get(*feature) <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left as usize).max(go(nodes, *right as usize)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn split_features(&self) -> impl Iterator<Item = FeatureId> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split { feature, .. } => Some(*feature),
            Node::Leaf { .. } => None,
        })
    }

    /// Structural sanity: children in range and strictly after their parent.
    pub(crate) fn is_well_formed(&self) -> bool {
        let n = self.nodes.len();
        n > 0
            && self.nodes.iter().enumerate().all(|(i, node)| match node {
                Node::Leaf { value } => value.is_finite(),
                Node::Split {
                    threshold, left, right, ..
                } => {
                    let (l, r) = (*left as usize, *right as usize);
                    threshold.is_finite() && l > i && r > i && l < n && r < n
                }
            })
    }
}

/// Gini impurity of a node with class weights `w0`, `w1`.
pub fn gini(w0: f64, w1: f64) -> f64 {
    let w = w0 + w1;
    if w <= 0.0 {
        return 0.0;
    }
    let (p0, p1) = (w0 / w, w1 / w);
    1.0 - p0 * p0 - p1 * p1
}

/// Impurity decrease of splitting `(w0, w1)` into the given children.
pub fn gini_gain(parent: (f64, f64), left: (f64, f64), right: (f64, f64)) -> f64 {
    let w = parent.0 + parent.1;
    let wl = left.0 + left.1;
    let wr = right.0 + right.1;
    gini(parent.0, parent.1) - wl / w * gini(left.0, left.1) - wr / w * gini(right.0, right.1)
}

pub(crate) trait Criterion {
    type Stats: Copy + Default;

    fn add(&self, stats: &mut Self::Stats, sample: usize);
    fn minus(&self, total: &Self::Stats, left: &Self::Stats) -> Self::Stats;
    fn count(&self, stats: &Self::Stats) -> usize;
    /// Child-level constraints beyond `min_samples_leaf`.
    fn admissible(&self, _left: &Self::Stats, _right: &Self::Stats) -> bool {
        true
    }
    fn worth_splitting(&self, node: &Self::Stats) -> bool;
    fn gain(&self, parent: &Self::Stats, left: &Self::Stats, right: &Self::Stats) -> f64;
    fn accept(&self, gain: f64) -> bool;
    fn leaf(&self, node: &Self::Stats) -> f64;
}

/// CART classification: leaf value is the weighted fraction of class 1.
pub(crate) struct Gini<'a> {
    pub y: &'a [u8],
    pub w: &'a [f64],
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct ClassStats {
    w0: f64,
    w1: f64,
    n: usize,
}

impl Criterion for Gini<'_> {
    type Stats = ClassStats;

    fn add(&self, s: &mut ClassStats, i: usize) {
        if self.y[i] == 1 {
            s.w1 += self.w[i];
        } else {
            s.w0 += self.w[i];
        }
        s.n += 1;
    }

    fn minus(&self, t: &ClassStats, l: &ClassStats) -> ClassStats {
        ClassStats {
            w0: (t.w0 - l.w0).max(0.0),
            w1: (t.w1 - l.w1).max(0.0),
            n: t.n - l.n,
        }
    }

    fn count(&self, s: &ClassStats) -> usize {
        s.n
    }

    fn worth_splitting(&self, s: &ClassStats) -> bool {
        s.w0 > 0.0 && s.w1 > 0.0
    }

    fn gain(&self, p: &ClassStats, l: &ClassStats, r: &ClassStats) -> f64 {
        gini_gain((p.w0, p.w1), (l.w0, l.w1), (r.w0, r.w1))
    }

    fn accept(&self, _gain: f64) -> bool {
        // impurity is concave, so any admissible split of an impure node is taken
        true
    }

    fn leaf(&self, s: &ClassStats) -> f64 {
        let w = s.w0 + s.w1;
        if w > 0.0 {
            s.w1 / w
        } else {
            0.0
        }
    }
}

/// Second-order boosting objective over per-sample gradients and hessians.
pub(crate) struct Newton<'a> {
    pub g: &'a [f64],
    pub h: &'a [f64],
    pub reg_lambda: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct GradStats {
    g: f64,
    h: f64,
    n: usize,
}

/// Optimal leaf weight `-G / (H + lambda)` before shrinkage.
pub fn leaf_weight(g: f64, h: f64, reg_lambda: f64) -> f64 {
    -g / (h + reg_lambda)
}

/// Loss reduction of a split, net of the complexity penalty `gamma`.
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, reg_lambda: f64, gamma: f64) -> f64 {
    let score = |g: f64, h: f64| g * g / (h + reg_lambda);
    0.5 * (score(gl, hl) + score(gr, hr) - score(gl + gr, hl + hr)) - gamma
}

impl Criterion for Newton<'_> {
    type Stats = GradStats;

    fn add(&self, s: &mut GradStats, i: usize) {
        s.g += self.g[i];
        s.h += self.h[i];
        s.n += 1;
    }

    fn minus(&self, t: &GradStats, l: &GradStats) -> GradStats {
        GradStats {
            g: t.g - l.g,
            h: (t.h - l.h).max(0.0),
            n: t.n - l.n,
        }
    }

    fn count(&self, s: &GradStats) -> usize {
        s.n
    }

    fn admissible(&self, l: &GradStats, r: &GradStats) -> bool {
        l.h >= self.min_child_weight && r.h >= self.min_child_weight
    }

    fn worth_splitting(&self, s: &GradStats) -> bool {
        s.h >= 2.0 * self.min_child_weight
    }

    fn gain(&self, _p: &GradStats, l: &GradStats, r: &GradStats) -> f64 {
        split_gain(l.g, l.h, r.g, r.h, self.reg_lambda, self.gamma)
    }

    fn accept(&self, gain: f64) -> bool {
        gain > 0.0
    }

    fn leaf(&self, s: &GradStats) -> f64 {
        self.learning_rate * leaf_weight(s.g, s.h, self.reg_lambda)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GrowParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Features drawn per split; `None` means all of them.
    pub max_features: Option<usize>,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m < b {
        m
    } else {
        a
    }
}

struct Pending {
    slot: usize,
    depth: usize,
    /// Per feature, the node's samples sorted by that feature's value.
    sorted: Vec<Vec<u32>>,
}

/// Grow one tree. `columns[f][i]` is feature `f` of sample `i`; `ids[f]` is
/// the catalog id recorded in split nodes.
pub(crate) fn grow<C: Criterion>(
    columns: &[Vec<f64>],
    ids: &[FeatureId],
    criterion: &C,
    params: &GrowParams,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Tree {
    let d = columns.len();
    let m = columns.first().map_or(0, Vec::len);
    let root_sorted: Vec<Vec<u32>> = columns
        .iter()
        .map(|col| {
            let mut idx: Vec<u32> = (0..m as u32).collect();
            idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
            idx
        })
        .collect();
    let min_leaf = params.min_samples_leaf.max(1);

    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut goes_left = vec![false; m];
    let mut stack = vec![Pending {
        slot: 0,
        depth: 0,
        sorted: root_sorted,
    }];

    while let Some(Pending { slot, depth, sorted }) = stack.pop() {
        let mut total = C::Stats::default();
        let members: &[u32] = sorted.first().map_or(&[], Vec::as_slice);
        if d == 0 {
            for i in 0..m {
                criterion.add(&mut total, i);
            }
        } else {
            for &i in members {
                criterion.add(&mut total, i as usize);
            }
        }
        let leaf_value = criterion.leaf(&total);
        let n = criterion.count(&total);

        let splittable =
            d > 0 && depth < params.max_depth && n >= 2 * min_leaf && criterion.worth_splitting(&total);
        let mut best: Option<(usize, f64, f64)> = None;
        if splittable {
            let candidates: Vec<usize> = match (params.max_features, rng.as_deref_mut()) {
                (Some(k), Some(rng)) if k < d => {
                    let mut chosen = index::sample(rng, d, k.max(1)).into_vec();
                    chosen.sort_unstable();
                    chosen
                }
                _ => (0..d).collect(),
            };
            for f in candidates {
                let order = &sorted[f];
                let col = &columns[f];
                let mut left = C::Stats::default();
                for pos in 0..order.len() - 1 {
                    let i = order[pos] as usize;
                    criterion.add(&mut left, i);
                    let (a, b) = (col[i], col[order[pos + 1] as usize]);
                    if a >= b {
                        continue;
                    }
                    let nl = pos + 1;
                    if nl < min_leaf || n - nl < min_leaf {
                        continue;
                    }
                    let right = criterion.minus(&total, &left);
                    if !criterion.admissible(&left, &right) {
                        continue;
                    }
                    let gain = criterion.gain(&total, &left, &right);
                    if !gain.is_finite() {
                        continue;
                    }
                    if best.map_or(true, |(_, _, g)| gain > g) {
                        best = Some((f, midpoint(a, b), gain));
                    }
                }
            }
        }

        match best.filter(|(_, _, g)| criterion.accept(*g)) {
            None => nodes[slot] = Node::Leaf { value: leaf_value },
            Some((f, threshold, _)) => {
                for &i in &sorted[f] {
                    goes_left[i as usize] = columns[f][i as usize] <= threshold;
                }
                let mut left_sorted = Vec::with_capacity(d);
                let mut right_sorted = Vec::with_capacity(d);
                for list in sorted {
                    let (l, r): (Vec<u32>, Vec<u32>) = list.into_iter().partition(|&i| goes_left[i as usize]);
                    left_sorted.push(l);
                    right_sorted.push(r);
                }
                let left = nodes.len();
                nodes.push(Node::Leaf { value: 0.0 });
                nodes.push(Node::Leaf { value: 0.0 });
                nodes[slot] = Node::Split {
                    feature: ids[f],
                    threshold,
                    left: left as u32,
                    right: left as u32 + 1,
                };
                stack.push(Pending {
                    slot: left + 1,
                    depth: depth + 1,
                    sorted: right_sorted,
                });
                stack.push(Pending {
                    slot: left,
                    depth: depth + 1,
                    sorted: left_sorted,
                });
            }
        }
    }
    Tree { nodes }
}
