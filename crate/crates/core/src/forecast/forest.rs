use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;

use super::selection::mse;
use crate::seed;
use crate::{Error, Result};

pub const RF_TREES: [usize; 2] = [100, 300];
pub const RF_DEPTHS: [usize; 3] = [3, 5, 8];
/// Feature-subset sizes: ⌈√22⌉, 7 and all 22.
pub const RF_MTRY: [usize; 3] = [5, 7, 22];
const MIN_LEAF: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: usize,
    pub mtry: usize,
    pub min_leaf: usize,
    pub bootstrap: bool,
}

impl ForestParams {
    pub fn new(trees: usize, max_depth: usize, mtry: usize) -> Self {
        ForestParams {
            trees,
            max_depth,
            mtry,
            min_leaf: MIN_LEAF,
            bootstrap: true,
        }
    }
}

const LEAF: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Node {
    feature: u32,
    threshold: f64,
    left: u32,
    right: u32,
    /// Mean target of the node's training rows.
    value: f64,
    depth: u8,
}

#[derive(Debug, Clone, PartialEq)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    /// Leaf value reached by `x`, stopping at `max_depth`.
    fn predict(&self, x: &[f64], max_depth: usize) -> f64 {
        let mut node = &self.nodes[0];
        while node.feature != LEAF && (node.depth as usize) < max_depth {
            let next = if x[node.feature as usize] <= node.threshold {
                node.left
            } else {
                node.right
            };
            node = &self.nodes[next as usize];
        }
        node.value
    }
}

/// Bagged regression trees. Every node stores its mean so that a forest
/// grown to depth `d` also answers for any shallower depth, and the first
/// `m` trees form a smaller forest.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    trees: Vec<Tree>,
    pub params: ForestParams,
}

impl Forest {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.predict_row_with(x, self.params.trees, self.params.max_depth)
    }

    /// Average over the first `trees` trees cut at `depth`.
    pub fn predict_row_with(&self, x: &[f64], trees: usize, depth: usize) -> f64 {
        let used = &self.trees[..trees.min(self.trees.len())];
        used.iter().map(|t| t.predict(x, depth)).sum::<f64>() / used.len() as f64
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> DVector<f64> {
        self.predict_with(x, self.params.trees, self.params.max_depth)
    }

    fn predict_with(&self, x: &DMatrix<f64>, trees: usize, depth: usize) -> DVector<f64> {
        DVector::from_iterator(
            x.nrows(),
            x.row_iter().map(|r| self.predict_row_with(r.clone_owned().as_slice(), trees, depth)),
        )
    }

    /// Keep the first `trees` trees and cap the depth.
    fn truncate(mut self, trees: usize, depth: usize) -> Self {
        self.trees.truncate(trees);
        self.params.trees = trees;
        self.params.max_depth = depth;
        self
    }

    /// Grow `params.trees` trees. Tree `t` bootstraps from a seed derived
    /// from `(seed, t)`; each node draws its feature subset from a seed
    /// derived from its position in the tree, so depth limits and tree
    /// counts do not change the trees that are grown.
    pub fn grow(x: &DMatrix<f64>, y: &DVector<f64>, params: ForestParams, seed_value: u64) -> Result<Self> {
        let (n, p) = x.shape();
        if n == 0 || n != y.len() {
            return Err(Error::Dimension(format!("{n} rows, {} targets", y.len())));
        }
        if params.mtry == 0 || params.mtry > p || params.trees == 0 {
            return Err(Error::Validation(format!("bad forest parameters {params:?}")));
        }
        let data = Data {
            x: x.transpose().as_slice().to_vec(),
            y: y.as_slice().to_vec(),
            p,
        };
        let trees = (0..params.trees)
            .map(|t| {
                let tree_seed = seed::derive(seed_value, &[t as u64]);
                let rows: Vec<usize> = if params.bootstrap {
                    let mut rng = seed::rng(tree_seed, &[seed::key("bootstrap")]);
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                let mut nodes = Vec::new();
                grow_node(&data, &params, tree_seed, rows, 0, 1, &mut nodes);
                Tree { nodes }
            })
            .collect();
        Ok(Forest { trees, params })
    }
}

struct Data {
    /// Row-major features.
    x: Vec<f64>,
    y: Vec<f64>,
    p: usize,
}

impl Data {
    fn at(&self, row: usize, f: usize) -> f64 {
        self.x[row * self.p + f]
    }
}

/// Append the subtree for `rows` and return its node index.
fn grow_node(
    data: &Data,
    params: &ForestParams,
    tree_seed: u64,
    rows: Vec<usize>,
    depth: usize,
    path: u64,
    nodes: &mut Vec<Node>,
) -> u32 {
    let n = rows.len();
    let sum: f64 = rows.iter().map(|&r| data.y[r]).sum();
    let id = nodes.len() as u32;
    nodes.push(Node {
        feature: LEAF,
        threshold: 0.0,
        left: LEAF,
        right: LEAF,
        value: sum / n as f64,
        depth: depth as u8,
    });
    if depth >= params.max_depth || n < 2 * params.min_leaf.max(1) {
        return id;
    }
    let mut rng = seed::rng(tree_seed, &[path]);
    let features = sample(&mut rng, data.p, params.mtry);
    let base = sum * sum / n as f64;
    let mut best: Option<(f64, usize, f64)> = None;
    let mut sorted = rows.clone();
    for f in features.iter() {
        sorted.sort_by(|&a, &b| data.at(a, f).total_cmp(&data.at(b, f)));
        let mut left = 0.0;
        for i in 0..n - 1 {
            left += data.y[sorted[i]];
            let (nl, nr) = (i + 1, n - i - 1);
            if nl < params.min_leaf || nr < params.min_leaf {
                continue;
            }
            let (a, b) = (data.at(sorted[i], f), data.at(sorted[i + 1], f));
            if a >= b {
                continue;
            }
            let right = sum - left;
            let score = left * left / nl as f64 + right * right / nr as f64;
            if best.is_none_or(|(s, _, _)| score > s) {
                best = Some((score, f, 0.5 * (a + b)));
            }
        }
    }
    let Some((score, feature, threshold)) = best else {
        return id;
    };
    if score - base <= 1e-12 * base.abs().max(1e-300) {
        return id;
    }
    let (l, r): (Vec<usize>, Vec<usize>) = rows.into_iter().partition(|&row| data.at(row, feature) <= threshold);
    let left = grow_node(data, params, tree_seed, l, depth + 1, 2 * path, nodes);
    let right = grow_node(data, params, tree_seed, r, depth + 1, 2 * path + 1, nodes);
    let node = &mut nodes[id as usize];
    node.feature = feature as u32;
    node.threshold = threshold;
    node.left = left;
    node.right = right;
    id
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub forest: Forest,
    pub validation_mse: f64,
}

/// Tune (trees, depth, feature subset) on validation MSE. One forest of
/// the largest size is grown per subset size; smaller settings reuse its
/// leading trees and shallower levels.
pub fn fit_random_forest(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    x_val: &DMatrix<f64>,
    y_val: &DVector<f64>,
    seed_value: u64,
) -> Result<ForestModel> {
    let max_trees = *RF_TREES.iter().max().expect("grid");
    let max_depth = *RF_DEPTHS.iter().max().expect("grid");
    let mut best: Option<(f64, Forest, usize, usize)> = None;
    for mtry in RF_MTRY {
        let mtry = mtry.min(x.ncols());
        let forest = Forest::grow(x, y, ForestParams::new(max_trees, max_depth, mtry), seed::derive(seed_value, &[mtry as u64]))?;
        let mut choice: Option<(f64, usize, usize)> = None;
        for trees in RF_TREES {
            for depth in RF_DEPTHS {
                let v = mse(&forest.predict_with(x_val, trees, depth), y_val);
                if choice.is_none_or(|(bv, _, _)| v < bv) {
                    choice = Some((v, trees, depth));
                }
            }
        }
        let (v, trees, depth) = choice.expect("grid");
        if best.as_ref().is_none_or(|(bv, ..)| v < *bv) {
            best = Some((v, forest, trees, depth));
        }
    }
    let (v, forest, trees, depth) = best.expect("grid");
    Ok(ForestModel {
        forest: forest.truncate(trees, depth),
        validation_mse: v,
    })
}
