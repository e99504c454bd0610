//! Random forest of CART trees split on GINI impurity decrease.
//!
//! Trees grow on bootstrap resamples until pure or at the minimum node
//! size, evaluating `mtry` uniformly sampled candidate features per node.
//! Per-tree sub-seeds derive from the master seed by a fixed rule, so
//! training is bit-deterministic for any worker count; prediction scores
//! are the fraction of trees voting class 1.

use rayon::prelude::*;

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, Rng};

#[derive(Clone, Copy, Debug)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Candidate features per node; `None` means floor(sqrt(p)).
    pub mtry: Option<usize>,
    pub min_node_size: usize,
    pub bootstrap: bool,
    /// Weight classes inversely to their frequency (off by default).
    pub balance_classes: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 5000,
            mtry: None,
            min_node_size: 1,
            bootstrap: true,
            balance_classes: false,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn resolved_mtry(&self, dim: usize) -> usize {
        self.mtry
            .unwrap_or_else(|| (dim as f64).sqrt().floor() as usize)
            .clamp(1, dim)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Node {
    Leaf {
        vote: u8,
    },
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

#[derive(Clone, Debug)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, sample: &[f64]) -> u8 {
        let mut at = 0usize;
        loop {
            match self.nodes[at] {
                Node::Leaf { vote } => return vote,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if sample[feature as usize] <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct ForestModel {
    trees: Vec<Tree>,
    dim: usize,
    importance: Vec<f64>,
    pub params: ForestParams,
}

impl ForestModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Mean GINI importance: per-tree total impurity decrease attributed to
    /// each feature (weighted by node mass), averaged over trees.
    pub fn importance(&self) -> &[f64] {
        &self.importance
    }
}

struct TreeBuilder<'a> {
    data: &'a Dataset,
    mtry: usize,
    min_node_size: usize,
    class_weights: [f64; 2],
    rng: Rng,
    nodes: Vec<Node>,
    importance: Vec<f64>,
    root_weight: f64,
}

impl<'a> TreeBuilder<'a> {
    fn weighted_counts(&self, indices: &[usize]) -> [f64; 2] {
        let mut c = [0.0; 2];
        for &i in indices {
            let l = self.data.labels()[i] as usize;
            c[l] += self.class_weights[l];
        }
        c
    }

    fn gini(counts: [f64; 2]) -> f64 {
        let total = counts[0] + counts[1];
        if total <= 0.0 {
            return 0.0;
        }
        let p0 = counts[0] / total;
        let p1 = counts[1] / total;
        1.0 - p0 * p0 - p1 * p1
    }

    fn leaf(&mut self, counts: [f64; 2]) -> u32 {
        // Majority vote; exact tie goes to class 0.
        let vote = u8::from(counts[1] > counts[0]);
        self.nodes.push(Node::Leaf { vote });
        (self.nodes.len() - 1) as u32
    }

    fn grow(&mut self, mut indices: Vec<usize>) -> u32 {
        let counts = self.weighted_counts(&indices);
        let parent_gini = Self::gini(counts);
        if indices.len() <= self.min_node_size || counts[0] == 0.0 || counts[1] == 0.0 {
            return self.leaf(counts);
        }

        let total = counts[0] + counts[1];
        let candidates = self.rng.sample_indices(self.data.dim(), self.mtry);
        let mut best: Option<(f64, usize, f64)> = None; // (decrease, feature, threshold)
        for &feature in &candidates {
            indices.sort_by(|&a, &b| {
                self.data.features()[a][feature]
                    .partial_cmp(&self.data.features()[b][feature])
                    .unwrap()
                    .then(a.cmp(&b))
            });
            let mut left = [0.0; 2];
            let mut right = counts;
            for w in 0..indices.len() - 1 {
                let i = indices[w];
                let l = self.data.labels()[i] as usize;
                left[l] += self.class_weights[l];
                right[l] -= self.class_weights[l];
                let v = self.data.features()[i][feature];
                let v_next = self.data.features()[indices[w + 1]][feature];
                if v == v_next {
                    continue;
                }
                let wl = left[0] + left[1];
                let wr = right[0] + right[1];
                let decrease =
                    parent_gini - (wl * Self::gini(left) + wr * Self::gini(right)) / total;
                // Midpoint of adjacent floats can round up to v_next, which
                // would empty the right child; fall back to v itself.
                let mid = v + (v_next - v) / 2.0;
                let threshold = if mid < v_next { mid } else { v };
                let better = match best {
                    None => decrease > 0.0,
                    Some((bd, bf, bt)) => {
                        decrease > bd
                            || (decrease == bd
                                && (feature < bf || (feature == bf && threshold < bt)))
                    }
                };
                if better {
                    best = Some((decrease, feature, threshold));
                }
            }
        }

        let Some((decrease, feature, threshold)) = best else {
            return self.leaf(counts);
        };

        self.importance[feature] += decrease * total / self.root_weight;

        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
            .iter()
            .partition(|&&i| self.data.features()[i][feature] <= threshold);
        debug_assert!(!left_idx.is_empty() && !right_idx.is_empty());

        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { vote: 0 }); // placeholder
        let left = self.grow(left_idx);
        let right = self.grow(right_idx);
        self.nodes[slot] = Node::Split {
            feature: feature as u32,
            threshold,
            left,
            right,
        };
        slot as u32
    }
}

/// Train a forest. Trees run in parallel; results are identical for any
/// worker count because each tree's RNG stream depends only on the master
/// seed and the tree index.
pub fn train_rf(train: &Dataset, params: &ForestParams) -> Result<ForestModel> {
    if train.is_empty() {
        return Err(Error::EmptyTrainSet);
    }
    if !train.has_both_classes() {
        return Err(Error::SingleClass);
    }
    if params.n_trees == 0 {
        return Err(Error::BadParam("forest needs at least one tree".into()));
    }
    let n = train.len();
    let mtry = params.resolved_mtry(train.dim());
    let n_pos = train.labels().iter().filter(|&&l| l == 1).count();
    let class_weights = if params.balance_classes {
        [
            n as f64 / (2.0 * (n - n_pos) as f64),
            n as f64 / (2.0 * n_pos as f64),
        ]
    } else {
        [1.0, 1.0]
    };

    let built: Vec<(Tree, Vec<f64>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = Rng::new(derive_seed(params.seed, t as u64));
            let indices: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.next_usize(n)).collect()
            } else {
                (0..n).collect()
            };
            let mut builder = TreeBuilder {
                data: train,
                mtry,
                min_node_size: params.min_node_size.max(1),
                class_weights,
                rng,
                nodes: Vec::new(),
                importance: vec![0.0; train.dim()],
                root_weight: 0.0,
            };
            let root_counts = builder.weighted_counts(&indices);
            builder.root_weight = (root_counts[0] + root_counts[1]).max(1e-300);
            let root = builder.grow(indices);
            debug_assert_eq!(root, 0);
            (
                Tree {
                    nodes: builder.nodes,
                },
                builder.importance,
            )
        })
        .collect();

    let mut importance = vec![0.0; train.dim()];
    let mut trees = Vec::with_capacity(built.len());
    for (tree, imp) in built {
        for (a, b) in importance.iter_mut().zip(&imp) {
            *a += b;
        }
        trees.push(tree);
    }
    for v in importance.iter_mut() {
        *v /= params.n_trees as f64;
    }
    Ok(ForestModel {
        trees,
        dim: train.dim(),
        importance,
        params: *params,
    })
}

/// Fraction of trees voting class 1.
pub fn predict_rf(model: &ForestModel, sample: &[f64]) -> Result<f64> {
    if sample.len() != model.dim {
        return Err(Error::FeatureDimMismatch {
            expected: model.dim,
            actual: sample.len(),
        });
    }
    let votes: usize = model.trees.iter().map(|t| t.predict(sample) as usize).sum();
    Ok(votes as f64 / model.trees.len() as f64)
}

// ---- opaque versioned binary model format ----

const MODEL_MAGIC: &[u8; 8] = b"DEMTDRF\x01";

impl ForestModel {
    pub fn write_to(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        out.write_all(MODEL_MAGIC)?;
        out.write_all(&(self.dim as u64).to_le_bytes())?;
        out.write_all(&self.params.seed.to_le_bytes())?;
        out.write_all(&(self.params.n_trees as u64).to_le_bytes())?;
        out.write_all(&(self.params.resolved_mtry(self.dim) as u64).to_le_bytes())?;
        out.write_all(&(self.params.min_node_size as u64).to_le_bytes())?;
        out.write_all(&[
            u8::from(self.params.bootstrap),
            u8::from(self.params.balance_classes),
        ])?;
        for v in &self.importance {
            out.write_all(&v.to_le_bytes())?;
        }
        out.write_all(&(self.trees.len() as u64).to_le_bytes())?;
        for tree in &self.trees {
            out.write_all(&(tree.nodes.len() as u64).to_le_bytes())?;
            for node in &tree.nodes {
                match *node {
                    Node::Leaf { vote } => {
                        out.write_all(&[0u8, vote])?;
                    }
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        out.write_all(&[1u8])?;
                        out.write_all(&feature.to_le_bytes())?;
                        out.write_all(&threshold.to_le_bytes())?;
                        out.write_all(&left.to_le_bytes())?;
                        out.write_all(&right.to_le_bytes())?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn read_from(input: &mut impl std::io::Read) -> std::io::Result<ForestModel> {
        use std::io::{Error as IoError, ErrorKind};
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MODEL_MAGIC {
            return Err(IoError::new(ErrorKind::InvalidData, "not a model file"));
        }
        let mut u64buf = [0u8; 8];
        let mut read_u64 = |input: &mut dyn std::io::Read| -> std::io::Result<u64> {
            input.read_exact(&mut u64buf)?;
            Ok(u64::from_le_bytes(u64buf))
        };
        let dim = read_u64(input)? as usize;
        let seed = read_u64(input)?;
        let n_trees = read_u64(input)? as usize;
        let mtry = read_u64(input)? as usize;
        let min_node_size = read_u64(input)? as usize;
        let mut flags = [0u8; 2];
        input.read_exact(&mut flags)?;
        let mut importance = vec![0.0; dim];
        let mut f64buf = [0u8; 8];
        for v in importance.iter_mut() {
            input.read_exact(&mut f64buf)?;
            *v = f64::from_le_bytes(f64buf);
        }
        let tree_count = {
            input.read_exact(&mut f64buf)?;
            u64::from_le_bytes(f64buf) as usize
        };
        let mut trees = Vec::with_capacity(tree_count);
        for _ in 0..tree_count {
            input.read_exact(&mut f64buf)?;
            let node_count = u64::from_le_bytes(f64buf) as usize;
            let mut nodes = Vec::with_capacity(node_count);
            for _ in 0..node_count {
                let mut tag = [0u8; 1];
                input.read_exact(&mut tag)?;
                match tag[0] {
                    0 => {
                        let mut vote = [0u8; 1];
                        input.read_exact(&mut vote)?;
                        nodes.push(Node::Leaf { vote: vote[0] });
                    }
                    1 => {
                        let mut b4 = [0u8; 4];
                        input.read_exact(&mut b4)?;
                        let feature = u32::from_le_bytes(b4);
                        input.read_exact(&mut f64buf)?;
                        let threshold = f64::from_le_bytes(f64buf);
                        input.read_exact(&mut b4)?;
                        let left = u32::from_le_bytes(b4);
                        input.read_exact(&mut b4)?;
                        let right = u32::from_le_bytes(b4);
                        nodes.push(Node::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        });
                    }
                    _ => return Err(IoError::new(ErrorKind::InvalidData, "bad node tag")),
                }
            }
            trees.push(Tree { nodes });
        }
        Ok(ForestModel {
            trees,
            dim,
            importance,
            params: ForestParams {
                n_trees,
                mtry: Some(mtry),
                min_node_size,
                bootstrap: flags[0] != 0,
                balance_classes: flags[1] != 0,
                seed,
            },
        })
    }
}

/// Two Gaussian blobs separated along every axis; shared test fixture.
#[cfg(test)]
pub(crate) fn gaussian_blobs(
    n_per_class: usize,
    dim: usize,
    separation: f64,
    seed: u64,
) -> Dataset {
    let mut rng = Rng::new(seed);
    let mut features = Vec::with_capacity(2 * n_per_class);
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for class in 0..2u8 {
        let center = if class == 0 { 0.0 } else { separation };
        for _ in 0..n_per_class {
            features.push((0..dim).map(|_| center + rng.next_gaussian()).collect());
            labels.push(class);
        }
    }
    Dataset::new(features, labels).unwrap()
}
