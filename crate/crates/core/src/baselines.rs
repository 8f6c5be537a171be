//! Model-free selection baselines: uniform random, highest degree, and
//! farthest-first k-center on propagated features.

use std::cmp::Reverse;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::diversity::FeatureMetric;
use crate::error::{Error, Result};
use crate::graph::{NodeId, SparseGraph};
use crate::rng::{substream, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineMethod {
    Random,
    Degree,
    Kcenter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub method: BaselineMethod,
    pub budget: usize,
    pub rng_seed: u64,
    pub pool: Vec<NodeId>,
}

impl BaselineConfig {
    fn check(&self) -> Result<()> {
        if self.budget > self.pool.len() {
            return Err(Error::domain(format!(
                "budget {} exceeds the candidate pool of {} nodes",
                self.budget,
                self.pool.len()
            )));
        }
        Ok(())
    }
}

/// Uniform sample without replacement, in draw order.
pub fn select_random(config: &BaselineConfig) -> Result<Vec<NodeId>> {
    config.check()?;
    let mut pool = config.pool.clone();
    let mut rng = substream(config.rng_seed, Stream::RandomBaseline);
    let (picked, _) = pool.partial_shuffle(&mut rng, config.budget);
    Ok(picked.to_vec())
}

/// Top-`budget` pool nodes by degree, ties by smaller id.
pub fn select_degree(config: &BaselineConfig, graph: &SparseGraph) -> Result<Vec<NodeId>> {
    config.check()?;
    let mut ranked = config.pool.clone();
    ranked.sort_by_key(|&u| (Reverse(graph.degree(u)), u));
    ranked.truncate(config.budget);
    Ok(ranked)
}

/// Farthest-first traversal anchored at the pool's highest-degree node.
/// Each later pick maximizes the distance to its nearest chosen center,
/// ties by smaller id.
pub fn select_kcenter(
    config: &BaselineConfig,
    graph: &SparseGraph,
    metric: &FeatureMetric<'_>,
) -> Result<Vec<NodeId>> {
    config.check()?;
    if config.budget == 0 {
        return Ok(Vec::new());
    }
    let mut pool = config.pool.clone();
    pool.sort_unstable();
    let anchor = *pool
        .iter()
        .min_by_key(|&&u| (Reverse(graph.degree(u)), u))
        .expect("non-empty pool");
    let mut centers = vec![anchor];
    let mut nearest: Vec<f64> = pool.iter().map(|&u| metric.distance(u, anchor)).collect();
    while centers.len() < config.budget {
        // Strict `>` over ascending ids keeps the smallest id on ties.
        let mut best = None;
        for (i, &u) in pool.iter().enumerate() {
            if centers.contains(&u) {
                continue;
            }
            match best {
                Some((_, d)) if nearest[i] <= d => {}
                _ => best = Some((u, nearest[i])),
            }
        }
        let (next, _) = best.expect("budget <= pool");
        centers.push(next);
        for (i, &u) in pool.iter().enumerate() {
            nearest[i] = nearest[i].min(metric.distance(u, next));
        }
    }
    Ok(centers)
}

/// Largest distance from a pool node to its nearest center.
pub fn covering_radius(metric: &FeatureMetric<'_>, pool: &[NodeId], centers: &[NodeId]) -> f64 {
    pool.iter()
        .map(|&u| {
            centers
                .iter()
                .map(|&c| metric.distance(u, c))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

pub fn select_baseline(
    config: &BaselineConfig,
    graph: &SparseGraph,
    metric: Option<&FeatureMetric<'_>>,
) -> Result<Vec<NodeId>> {
    match config.method {
        BaselineMethod::Random => select_random(config),
        BaselineMethod::Degree => select_degree(config, graph),
        BaselineMethod::Kcenter => {
            let metric = metric.ok_or_else(|| Error::config("k-center needs propagated features"))?;
            select_kcenter(config, graph, metric)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn cfg(method: BaselineMethod, budget: usize, pool: Vec<NodeId>) -> BaselineConfig {
        BaselineConfig {
            method,
            budget,
            rng_seed: 42,
            pool,
        }
    }

    fn star(n: usize) -> SparseGraph {
        let edges: Vec<_> = (1..n).map(|v| (0, v, 1.0)).collect();
        SparseGraph::from_edges(n, &edges, true).unwrap()
    }

    #[test]
    fn random_full_pool_is_permutation() {
        let c = cfg(BaselineMethod::Random, 10, (0..10).collect());
        let mut picked = select_random(&c).unwrap();
        assert_eq!(picked, select_random(&c).unwrap());
        picked.sort_unstable();
        assert_eq!(picked, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn degree_on_star_and_ring() {
        let c = cfg(BaselineMethod::Degree, 2, (0..6).rev().collect());
        assert_eq!(select_degree(&c, &star(6)).unwrap(), vec![0, 1]);
        let ring: Vec<_> = (0..6).map(|u| (u, (u + 1) % 6, 1.0)).collect();
        let ring = SparseGraph::from_edges(6, &ring, true).unwrap();
        let c = cfg(BaselineMethod::Degree, 3, (0..6).collect());
        assert_eq!(select_degree(&c, &ring).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn kcenter_splits_clusters() {
        let rows = array![[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]];
        let metric = FeatureMetric::new(rows.view(), 1.0, true);
        let g = SparseGraph::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)], true).unwrap();
        // Nodes 1 and 2 share the top degree; 1 is the anchor.
        let one = select_kcenter(&cfg(BaselineMethod::Kcenter, 1, (0..4).collect()), &g, &metric).unwrap();
        assert_eq!(one, vec![1]);
        let two = select_kcenter(&cfg(BaselineMethod::Kcenter, 2, (0..4).collect()), &g, &metric).unwrap();
        assert_eq!(two, vec![1, 2]);
        assert_eq!(covering_radius(&metric, &[0, 1, 2, 3], &two), 0.0);
    }

    #[test]
    fn budget_over_pool() {
        let c = cfg(BaselineMethod::Random, 3, vec![0, 1]);
        assert!(select_random(&c).is_err());
    }
}
