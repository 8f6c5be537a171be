//! Stochastic block model instances with block-shifted Gaussian features.

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::io::Splits;
use crate::rng::{substream, Stream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbmParams {
    pub blocks: usize,
    pub per_block: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feat_dim: usize,
    pub feat_shift: f64,
}

#[derive(Debug, Clone)]
pub struct SbmInstance {
    pub graph: SparseGraph,
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
}

/// Samples an SBM graph: nodes `c*per_block..(c+1)*per_block` form block
/// `c`, each within-block pair is joined with probability `p_in` and each
/// cross-block pair with `p_out`. Block-`c` features are standard normal
/// with `feat_shift` added to coordinate `c`.
pub fn generate_sbm(params: &SbmParams, seed: u64) -> Result<SbmInstance> {
    let SbmParams {
        blocks,
        per_block,
        p_in,
        p_out,
        feat_dim,
        feat_shift,
    } = *params;
    if blocks == 0 || per_block == 0 {
        return Err(Error::domain("SBM needs at least one block of at least one node"));
    }
    if !(0.0..=1.0).contains(&p_out) || !(0.0..=1.0).contains(&p_in) || p_out > p_in {
        return Err(Error::domain(format!(
            "SBM probabilities must satisfy 0 <= p_out <= p_in <= 1, got p_in={p_in}, p_out={p_out}"
        )));
    }
    if feat_dim < blocks {
        return Err(Error::domain(format!(
            "feature dimension {feat_dim} cannot carry a shift for each of {blocks} blocks"
        )));
    }
    let n = blocks * per_block;
    let labels: Vec<usize> = (0..n).map(|u| u / per_block).collect();

    let mut rng = substream(seed, Stream::GraphGen);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if labels[u] == labels[v] { p_in } else { p_out };
            if rng.random_bool(p) {
                edges.push((u, v, 1.0));
            }
        }
    }
    let graph = SparseGraph::from_edges(n, &edges, true)?;

    let mut rng = substream(seed, Stream::Features);
    let mut features = Array2::from_shape_simple_fn((n, feat_dim), || rng.sample::<f64, _>(StandardNormal));
    for (u, &c) in labels.iter().enumerate() {
        features[[u, c]] += feat_shift;
    }
    Ok(SbmInstance {
        graph,
        features,
        labels,
    })
}

/// Random train/val/test partition with the given fractions for val and
/// test; the remainder is the train pool.
pub fn random_splits(n: usize, val_frac: f64, test_frac: f64, seed: u64) -> Splits {
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut substream(seed, Stream::Splits));
    let n_test = (test_frac * n as f64).round() as usize;
    let n_val = (val_frac * n as f64).round() as usize;
    let mut test = order[..n_test].to_vec();
    let mut val = order[n_test..n_test + n_val].to_vec();
    let mut train = order[n_test + n_val..].to_vec();
    test.sort_unstable();
    val.sort_unstable();
    train.sort_unstable();
    Splits { train, val, test }
}
