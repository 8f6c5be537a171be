//! Greedy maximization of `F(S) = |sigma(S)| / sigma_hat + gamma * D(S) / D_hat`.
//!
//! Both terms are monotone submodular in `S`, so the greedy sequence is
//! within `1 - 1/e` of optimal and stale marginal gains are valid upper
//! bounds, which the lazy mode exploits with a max-heap.
//!
//! Ties are broken by the smallest node id after rounding gains to
//! `1e-12`; naive and lazy mode therefore pick identical sequences.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diversity::{DiversityKind, DiversityState};
use crate::error::{Error, Result};
use crate::graph::{NodeId, SparseGraph};
use crate::influence::{marginal_activation, ActivatedSet, InfluenceModel};

pub const DEFAULT_GAMMA: f64 = 1.0;
const GAIN_RESOLUTION: f64 = 1e-12;
const COMMIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    Naive,
    #[default]
    Lazy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    pub gamma: f64,
    /// Normalizer of the influence term; `None` means `N`.
    pub sigma_hat: Option<f64>,
    /// Normalizer of the diversity term; `None` means the diversity
    /// function's maximum (`N * d_max` or `N`).
    pub d_hat: Option<f64>,
    pub budget: usize,
    /// Nodes eligible for selection; `None` means every node.
    pub candidate_pool: Option<Vec<NodeId>>,
    /// Keep only this fraction of the pool, highest degree first.
    pub prune_top_degree_fraction: Option<f64>,
}

impl ObjectiveConfig {
    pub fn new(budget: usize) -> Self {
        Self {
            gamma: DEFAULT_GAMMA,
            sigma_hat: None,
            d_hat: None,
            budget,
            candidate_pool: None,
            prune_top_degree_fraction: None,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_pool(mut self, pool: Vec<NodeId>) -> Self {
        self.candidate_pool = Some(pool);
        self
    }
}

/// Resolved normalizers and weight of the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub sigma_hat: f64,
    pub d_hat: f64,
    /// Weight actually applied to the diversity term (zero when dropped).
    pub gamma: f64,
}

impl Objective {
    pub fn value(&self, activated: usize, diversity: f64) -> f64 {
        activated as f64 / self.sigma_hat + self.diversity_term(diversity)
    }

    pub fn diversity_term(&self, diversity: f64) -> f64 {
        if self.gamma == 0.0 {
            0.0
        } else {
            self.gamma * diversity / self.d_hat
        }
    }

    fn gain(&self, newly_activated: usize, diversity_gain: f64) -> f64 {
        self.value(newly_activated, diversity_gain)
    }

    /// Resolves normalizers for `diversity` and `config`, returning any
    /// warning raised on the way.
    pub fn resolve(
        config: &ObjectiveConfig,
        diversity: &DiversityState<'_>,
        num_nodes: usize,
    ) -> Result<(Self, Option<String>)> {
        if !(config.gamma >= 0.0) || !config.gamma.is_finite() {
            return Err(Error::config(format!("gamma must be finite and >= 0, got {}", config.gamma)));
        }
        let sigma_hat = config.sigma_hat.unwrap_or(num_nodes as f64);
        if !(sigma_hat > 0.0) {
            return Err(Error::config(format!("influence normalizer must be > 0, got {sigma_hat}")));
        }
        let d_hat = config.d_hat.unwrap_or_else(|| diversity.max_value());
        let mut gamma = config.gamma;
        let mut warning = None;
        if gamma > 0.0 && !(d_hat > 0.0) {
            if diversity.kind() == DiversityKind::Nn && config.d_hat.is_none() {
                warning = Some(
                    "d_max is zero: all feature rows coincide, selecting on influence only".to_string(),
                );
                gamma = 0.0;
            } else {
                return Err(Error::config(format!("diversity normalizer must be > 0, got {d_hat}")));
            }
        }
        Ok((
            Self {
                sigma_hat,
                d_hat,
                gamma,
            },
            warning,
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub node: NodeId,
    pub gain: f64,
    pub activated: usize,
    pub diversity: f64,
    pub objective: f64,
    /// Marginal-gain evaluations spent in this round.
    pub evaluations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SelectionState<'a> {
    pub seeds: Vec<NodeId>,
    pub activated: ActivatedSet,
    pub diversity: DiversityState<'a>,
    pub objective: Objective,
    pub objective_value: f64,
    pub rounds: Vec<RoundRecord>,
    /// Candidate pool after pruning.
    pub pool_size: usize,
    pub warnings: Vec<String>,
}

/// Keeps the `ceil(fraction * |pool|)` pool nodes of highest degree (ties
/// by smaller id). The result is sorted by id.
pub fn prune_candidates(graph: &SparseGraph, pool: &[NodeId], fraction: f64) -> Result<Vec<NodeId>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::config(format!("prune fraction must lie in (0, 1], got {fraction}")));
    }
    let keep = (fraction * pool.len() as f64).ceil() as usize;
    let mut ranked = pool.to_vec();
    ranked.sort_by_key(|&u| (Reverse(graph.degree(u)), u));
    ranked.truncate(keep);
    ranked.sort_unstable();
    Ok(ranked)
}

fn resolve_pool(graph: &SparseGraph, config: &ObjectiveConfig) -> Result<Vec<NodeId>> {
    let n = graph.num_nodes();
    let mut pool = match &config.candidate_pool {
        Some(p) => p.clone(),
        None => (0..n).collect(),
    };
    pool.sort_unstable();
    pool.dedup();
    if let Some(&bad) = pool.iter().find(|&&u| u >= n) {
        return Err(Error::domain(format!("candidate {bad} outside 0..{n}")));
    }
    if let Some(fraction) = config.prune_top_degree_fraction {
        pool = prune_candidates(graph, &pool, fraction)?;
    }
    if config.budget > pool.len() {
        return Err(Error::domain(format!(
            "budget {} exceeds the candidate pool of {} nodes",
            config.budget,
            pool.len()
        )));
    }
    Ok(pool)
}

/// Heap entry ordered by rounded gain, then by smaller node id.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    key: i64,
    gain: f64,
    node: NodeId,
    /// Round in which `gain` was computed.
    stamp: usize,
}

impl Candidate {
    fn rank(&self) -> (i64, Reverse<NodeId>) {
        (self.key, Reverse(self.node))
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.rank() == other.rank()
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank().cmp(&other.rank())
    }
}

struct Evaluator<'s, 'a> {
    influence: &'s InfluenceModel,
    activated: &'s ActivatedSet,
    diversity: &'s DiversityState<'a>,
    objective: Objective,
}

impl Evaluator<'_, '_> {
    fn evaluate(&self, node: NodeId, stamp: usize) -> Candidate {
        let delta = marginal_activation(self.influence, self.activated, node);
        let div_gain = if self.objective.gamma == 0.0 {
            0.0
        } else {
            self.diversity.gain(&delta)
        };
        let gain = self.objective.gain(delta.len(), div_gain);
        Candidate {
            key: (gain / GAIN_RESOLUTION).round() as i64,
            gain,
            node,
            stamp,
        }
    }
}

/// Greedily selects `config.budget` seeds.
pub fn select<'a>(
    graph: &SparseGraph,
    influence: &InfluenceModel,
    diversity: DiversityState<'a>,
    config: &ObjectiveConfig,
    mode: SelectionMode,
    record_timings: bool,
) -> Result<SelectionState<'a>> {
    let n = graph.num_nodes();
    if influence.num_nodes() != n || diversity.num_nodes() != n {
        return Err(Error::domain(
            "graph, influence model and diversity state disagree on the node count",
        ));
    }
    let pool = resolve_pool(graph, config)?;
    let (objective, warning) = Objective::resolve(config, &diversity, n)?;
    let mut state = SelectionState {
        seeds: Vec::with_capacity(config.budget),
        activated: ActivatedSet::empty(n),
        diversity,
        objective,
        objective_value: 0.0,
        rounds: Vec::with_capacity(config.budget),
        pool_size: pool.len(),
        warnings: warning.into_iter().collect(),
    };
    let mut chosen = vec![false; n];
    let mut heap: BinaryHeap<Candidate> = BinaryHeap::new();

    for round in 0..config.budget {
        let started = record_timings.then(Instant::now);
        let eval = Evaluator {
            influence,
            activated: &state.activated,
            diversity: &state.diversity,
            objective,
        };
        let (best, evaluations) = match mode {
            SelectionMode::Naive => {
                let scored: Vec<Candidate> = pool
                    .par_iter()
                    .filter(|&&v| !chosen[v])
                    .map(|&v| eval.evaluate(v, round))
                    .collect();
                let count = scored.len();
                (scored.into_iter().max().expect("budget <= pool"), count)
            }
            SelectionMode::Lazy => {
                let mut count = 0;
                if round == 0 {
                    heap = pool.par_iter().map(|&v| eval.evaluate(v, 0)).collect();
                    count = pool.len();
                }
                loop {
                    let top = heap.pop().expect("budget <= pool");
                    if top.stamp == round {
                        break (top, count);
                    }
                    heap.push(eval.evaluate(top.node, round));
                    count += 1;
                }
            }
        };
        commit(&mut state, influence, best, evaluations, started)?;
        chosen[best.node] = true;
    }
    if state.diversity.dmax_exceeded() > 0 {
        state.warnings.push(format!(
            "{} committed distances exceeded the sampled d_max and were clamped",
            state.diversity.dmax_exceeded()
        ));
    }
    Ok(state)
}

fn commit(
    state: &mut SelectionState<'_>,
    influence: &InfluenceModel,
    best: Candidate,
    evaluations: usize,
    started: Option<Instant>,
) -> Result<()> {
    let delta = marginal_activation(influence, &state.activated, best.node);
    state.activated.commit(best.node, &delta)?;
    state.diversity.commit(&delta)?;
    let value = state
        .objective
        .value(state.activated.len(), state.diversity.value());
    let realized = value - state.objective_value;
    if (realized - best.gain).abs() > COMMIT_TOLERANCE {
        return Err(Error::Contract(format!(
            "node {} promised gain {} but realized {}",
            best.node, best.gain, realized
        )));
    }
    state.objective_value = value;
    state.seeds.push(best.node);
    state.rounds.push(RoundRecord {
        node: best.node,
        gain: best.gain,
        activated: state.activated.len(),
        diversity: state.diversity.value(),
        objective: value,
        evaluations,
        wall_ms: started.map(|t| t.elapsed().as_secs_f64() * 1e3),
    });
    Ok(())
}

/// `F(S)` with its parts, computed from scratch for a given seed list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    pub activated: usize,
    pub diversity: f64,
    pub influence_term: f64,
    pub diversity_term: f64,
    pub value: f64,
}

/// Evaluates `F(seeds)` by recomputing the activated set and feeding it to
/// a fresh diversity state in one commit.
pub fn evaluate_seed_set(
    influence: &InfluenceModel,
    mut diversity: DiversityState<'_>,
    objective: &Objective,
    seeds: &[NodeId],
) -> Result<ObjectiveBreakdown> {
    let activated = crate::influence::activated_set(influence, seeds)?;
    let members: Vec<NodeId> = activated.members().collect();
    diversity.commit(&members)?;
    let d = diversity.value();
    Ok(ObjectiveBreakdown {
        activated: activated.len(),
        diversity: d,
        influence_term: activated.len() as f64 / objective.sigma_hat,
        diversity_term: objective.diversity_term(d),
        value: objective.value(activated.len(), d),
    })
}
