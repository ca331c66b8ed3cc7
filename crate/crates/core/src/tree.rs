//! Synthetic noisy binary-tree dataset.
//!
//! Each node of a complete binary tree of depth `d` is encoded as an
//! ancestor-indicator vector: bit `j` of node `u` is 1 iff node `j` lies on
//! the root-to-`u` path. With these codes the Hamming distance between any
//! two clean codes equals their graph distance on the tree exactly
//! (`depth(u) + depth(v) - 2 depth(lca)` on both sides). Noisy observations
//! flip each bit independently with probability `eps`.

use rand::Rng;

use crate::error::{Error, Result};

/// A complete binary tree of depth `depth` with clean ancestor-indicator
/// codes and `samples_per_node` noisy observations of each node.
#[derive(Debug, Clone)]
pub struct TreeDataset {
    pub depth: usize,
    pub flip_prob: f64,
    /// One row per node, heap order (root 0, children of `i` at `2i+1`,
    /// `2i+2`); row length equals the node count.
    pub clean: Vec<Vec<u8>>,
    /// Noisy rows, grouped by node: rows `[i * s, (i+1) * s)` derive from
    /// node `i`, where `s = samples_per_node`.
    pub noisy: Vec<Vec<u8>>,
    pub samples_per_node: usize,
}

impl TreeDataset {
    pub fn node_count(&self) -> usize {
        self.clean.len()
    }

    /// Code length (= node count for ancestor-indicator codes).
    pub fn code_len(&self) -> usize {
        self.clean[0].len()
    }

    /// The source node of noisy row `row`.
    pub fn node_of_noisy(&self, row: usize) -> usize {
        row / self.samples_per_node
    }
}

/// Number of nodes of a complete binary tree of depth `d` (edge levels):
/// `2^{d+1} - 1`.
pub fn tree_node_count(depth: usize) -> usize {
    (1usize << (depth + 1)) - 1
}

/// Hamming distance between two equal-length bit rows.
pub fn hamming(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Graph distance between heap-indexed tree nodes:
/// walk both up to their lowest common ancestor.
pub fn tree_graph_distance(mut u: usize, mut v: usize) -> usize {
    let mut dist = 0;
    while u != v {
        if u > v {
            u = (u - 1) / 2;
        } else {
            v = (v - 1) / 2;
        }
        dist += 1;
    }
    dist
}

/// Generates the dataset. `samples_per_node` noisy rows are drawn per node
/// by flipping each clean bit independently with probability `eps`.
pub fn generate_tree_dataset(
    depth: usize,
    eps: f64,
    samples_per_node: usize,
    rng: &mut impl Rng,
) -> Result<TreeDataset> {
    if depth == 0 {
        return Err(Error::InvalidConfig("tree depth must be >= 1".into()));
    }
    if !(0.0..0.5).contains(&eps) {
        return Err(Error::InvalidConfig(format!(
            "flip probability must be in [0, 0.5), got {eps}"
        )));
    }
    if samples_per_node == 0 {
        return Err(Error::InvalidConfig(
            "samples_per_node must be >= 1".into(),
        ));
    }
    let n_nodes = tree_node_count(depth);
    let mut clean = Vec::with_capacity(n_nodes);
    for u in 0..n_nodes {
        let mut row = vec![0u8; n_nodes];
        let mut a = u;
        loop {
            row[a] = 1;
            if a == 0 {
                break;
            }
            a = (a - 1) / 2;
        }
        clean.push(row);
    }

    let mut noisy = Vec::with_capacity(n_nodes * samples_per_node);
    for row in &clean {
        for _ in 0..samples_per_node {
            let flipped = row
                .iter()
                .map(|&b| if rng.gen::<f64>() < eps { 1 - b } else { b })
                .collect();
            noisy.push(flipped);
        }
    }

    Ok(TreeDataset {
        depth,
        flip_prob: eps,
        clean,
        noisy,
        samples_per_node,
    })
}
