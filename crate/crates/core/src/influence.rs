//! Normalized feature influence and threshold activation.
//!
//! For a linear propagation operator `P_k`, the Jacobian of `X_v^(k)` with
//! respect to `X_u^(0)` is `P_k[v, u]` times the identity, so the normalized
//! influence of `u` on `v` is `|P_k[v, u]|` divided by the absolute row sum
//! of row `v`. Scores are stored per source node `u` ("whom does `u`
//! reach"), which is the query the greedy selector issues.

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::sparse::CsrMatrix;

pub const DEFAULT_THETA: f64 = 0.25;

/// Storage floor used when `theta == 0`; scores below it are discarded even
/// though they would activate, so the model is flagged lossy.
pub const SMALL_THETA_PRUNE_FLOOR: f64 = 1e-4;

/// The prune floor that goes with `theta`: `theta` itself (lossless), or
/// [`SMALL_THETA_PRUNE_FLOOR`] when `theta` is zero.
pub fn default_prune_floor(theta: f64) -> f64 {
    if theta > 0.0 {
        theta
    } else {
        SMALL_THETA_PRUNE_FLOOR
    }
}

#[derive(Debug, Clone)]
pub struct InfluenceModel {
    /// Row `u` lists `(v, I_v(u, k))` for every retained target `v`.
    columns: CsrMatrix,
    theta: f64,
    prune_floor: f64,
    /// Nodes whose operator row was entirely zero.
    zero_rows: Vec<NodeId>,
}

impl InfluenceModel {
    pub fn build(operator: &CsrMatrix, theta: f64, prune_floor: f64) -> Result<Self> {
        if operator.n_rows() != operator.n_cols() {
            return Err(Error::domain("propagation operator must be square"));
        }
        if !(0.0..1.0).contains(&theta) {
            return Err(Error::config(format!("theta must lie in [0, 1), got {theta}")));
        }
        if !(prune_floor >= 0.0) {
            return Err(Error::config(format!("prune floor must be >= 0, got {prune_floor}")));
        }
        let sums: Vec<f64> = (0..operator.n_rows())
            .map(|r| operator.row(r).1.iter().map(|x| x.abs()).sum())
            .collect();
        let zero_rows = (0..operator.n_rows()).filter(|&r| sums[r] == 0.0).collect();
        let columns = operator
            .map_values(|r, _, x| {
                let score = x.abs() / sums[r];
                if score >= prune_floor {
                    score
                } else {
                    0.0
                }
            })
            .transpose();
        Ok(Self {
            columns,
            theta,
            prune_floor,
            zero_rows,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.columns.n_rows()
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn prune_floor(&self) -> f64 {
        self.prune_floor
    }

    /// True when pruning may have removed activating scores.
    pub fn is_lossy(&self) -> bool {
        self.prune_floor > self.theta
    }

    pub fn zero_rows(&self) -> &[NodeId] {
        &self.zero_rows
    }

    /// Stored `I_v(u, k)`, zero if pruned or absent.
    pub fn score(&self, v: NodeId, u: NodeId) -> f64 {
        self.columns.get(u, v)
    }

    /// Retained `(v, I_v(u, k))` pairs for source `u`, ascending in `v`.
    pub fn reach(&self, u: NodeId) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.columns.row_iter(u)
    }

    /// Targets `u` activates on its own (strictly above theta).
    pub fn activates(&self, u: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let theta = self.theta;
        self.reach(u).filter(move |&(_, s)| s > theta).map(|(v, _)| v)
    }

    pub fn stored_entries(&self) -> usize {
        self.columns.nnz()
    }
}

/// `sigma(S)`: every node whose strongest influence from a seed exceeds
/// theta, plus the seeds themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivatedSet {
    members: FixedBitSet,
    count: usize,
    seeds: Vec<NodeId>,
}

impl ActivatedSet {
    pub fn empty(num_nodes: usize) -> Self {
        Self {
            members: FixedBitSet::with_capacity(num_nodes),
            count: 0,
            seeds: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.members.contains(v)
    }

    pub fn members(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.members.ones()
    }

    pub fn bits(&self) -> &FixedBitSet {
        &self.members
    }

    pub fn seeds(&self) -> &[NodeId] {
        &self.seeds
    }

    /// Adds `seed` and the nodes it newly activates, as returned by
    /// [`marginal_activation`].
    pub fn commit(&mut self, seed: NodeId, delta: &[NodeId]) -> Result<()> {
        for &v in delta {
            if self.members.put(v) {
                return Err(Error::Contract(format!("node {v} was already activated")));
            }
        }
        self.count += delta.len();
        self.seeds.push(seed);
        if !self.members.contains(seed) {
            return Err(Error::Contract(format!("seed {seed} missing from its own activation")));
        }
        Ok(())
    }
}

pub fn activated_set(model: &InfluenceModel, seeds: &[NodeId]) -> Result<ActivatedSet> {
    let n = model.num_nodes();
    let mut set = ActivatedSet::empty(n);
    for &u in seeds {
        if u >= n {
            return Err(Error::domain(format!("seed {u} outside 0..{n}")));
        }
        set.members.insert(u);
        for v in model.activates(u) {
            set.members.insert(v);
        }
        set.seeds.push(u);
    }
    set.count = set.members.count_ones(..);
    Ok(set)
}

/// `sigma(S + {candidate}) \ sigma(S)`, ascending. Reads only the
/// candidate's own influence list.
pub fn marginal_activation(model: &InfluenceModel, current: &ActivatedSet, candidate: NodeId) -> Vec<NodeId> {
    let mut delta = Vec::new();
    let mut self_pending = !current.contains(candidate);
    for v in model.activates(candidate) {
        if self_pending && candidate < v {
            delta.push(candidate);
            self_pending = false;
        }
        if v == candidate {
            self_pending = false;
        }
        if !current.contains(v) {
            delta.push(v);
        }
    }
    if self_pending {
        delta.push(candidate);
    }
    delta
}
