//! End-to-end runs: propagate, build the influence and diversity
//! structures, select seeds and package the result as a report.

use ndarray::Array2;

use crate::baselines::{select_baseline, BaselineConfig, BaselineMethod};
use crate::diversity::{BallIndex, DiversityKind, DiversityState, FeatureMetric};
use crate::error::{Error, Result};
use crate::graph::{NodeId, SparseGraph};
use crate::greedy::{evaluate_seed_set, select, Objective, ObjectiveBreakdown, ObjectiveConfig};
use crate::influence::InfluenceModel;
use crate::propagation::{propagate, propagation_operator, PropagatedFeatures};
use crate::report::{
    DmaxReport, InfluenceSummary, Method, ObjectiveReport, RunConfig, SelectionReport, SCHEMA_VERSION,
};

/// Propagated features and the influence model for one configuration.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub propagated: PropagatedFeatures,
    pub influence: InfluenceModel,
}

impl Prepared {
    pub fn build(graph: &SparseGraph, features: &Array2<f64>, config: &RunConfig) -> Result<Self> {
        let propagated = propagate(graph, features, &config.propagation)?;
        let operator = propagation_operator(graph, &config.propagation)?;
        let influence = InfluenceModel::build(&operator, config.theta, config.prune_floor)?;
        Ok(Self {
            propagated,
            influence,
        })
    }

    fn influence_summary(&self) -> InfluenceSummary {
        InfluenceSummary {
            stored_entries: self.influence.stored_entries(),
            lossy: self.influence.is_lossy(),
            zero_rows: self.influence.zero_rows().len(),
        }
    }

    fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.influence.is_lossy() {
            out.push(format!(
                "influence scores below {} were discarded although theta is {}; activation is approximate",
                self.influence.prune_floor(),
                self.influence.theta()
            ));
        }
        if !self.influence.zero_rows().is_empty() {
            out.push(format!(
                "{} nodes receive no influence from any node",
                self.influence.zero_rows().len()
            ));
        }
        out
    }
}

fn objective_config(config: &RunConfig, pool: Option<Vec<NodeId>>) -> ObjectiveConfig {
    ObjectiveConfig {
        gamma: config.gamma,
        sigma_hat: None,
        d_hat: None,
        budget: config.budget,
        candidate_pool: pool,
        prune_top_degree_fraction: config.prune_degree,
    }
}

fn dmax_report(metric: &FeatureMetric<'_>) -> DmaxReport {
    DmaxReport {
        value: metric.d_max(),
        exact: metric.exact_dmax(),
    }
}

fn dmax_warning(metric: &FeatureMetric<'_>) -> Option<String> {
    (!metric.exact_dmax()).then(|| format!("d_max = {} estimated by sampling", metric.d_max()))
}

/// Runs the greedy selector described by `config`.
pub fn run_selection(
    graph: &SparseGraph,
    features: &Array2<f64>,
    config: &RunConfig,
    pool: Option<Vec<NodeId>>,
    record_timings: bool,
) -> Result<SelectionReport> {
    let prepared = Prepared::build(graph, features, config)?;
    let metric = FeatureMetric::build(prepared.propagated.unit_rows.view(), config.exact_dmax_limit, config.seed);
    let index = match config.diversity {
        DiversityKind::Ball => Some(BallIndex::build(&metric, config.radius)?),
        DiversityKind::Nn => None,
    };
    let fresh = || match &index {
        Some(idx) => DiversityState::ball(idx),
        None => DiversityState::nn(&metric),
    };
    let obj_cfg = objective_config(config, pool);
    let state = select(
        graph,
        &prepared.influence,
        fresh(),
        &obj_cfg,
        config.mode,
        record_timings,
    )?;
    let breakdown = evaluate_seed_set(&prepared.influence, fresh(), &state.objective, &state.seeds)?;
    if (breakdown.value - state.objective_value).abs() > 1e-9 {
        return Err(Error::Contract(format!(
            "tracked objective {} disagrees with recomputation {}",
            state.objective_value, breakdown.value
        )));
    }
    let mut warnings = prepared.warnings();
    warnings.extend(dmax_warning(&metric));
    warnings.extend(state.warnings.iter().cloned());
    Ok(SelectionReport {
        schema_version: SCHEMA_VERSION,
        method: Method::greedy(config.diversity),
        inputs: None,
        config: config.clone(),
        pool_size: state.pool_size,
        seeds: state.seeds.clone(),
        rounds: state.rounds.clone(),
        objective: ObjectiveReport {
            sigma_hat: state.objective.sigma_hat,
            d_hat: state.objective.d_hat,
            gamma: state.objective.gamma,
            breakdown,
        },
        d_max: dmax_report(&metric),
        influence: prepared.influence_summary(),
        warnings,
    })
}

/// Runs a baseline and scores its seeds under the same objective as the
/// greedy selector would use.
pub fn run_baseline(
    graph: &SparseGraph,
    features: &Array2<f64>,
    method: BaselineMethod,
    config: &RunConfig,
    pool: Option<Vec<NodeId>>,
) -> Result<SelectionReport> {
    let prepared = Prepared::build(graph, features, config)?;
    let metric = FeatureMetric::build(prepared.propagated.unit_rows.view(), config.exact_dmax_limit, config.seed);
    let mut pool = pool.unwrap_or_else(|| (0..graph.num_nodes()).collect());
    pool.sort_unstable();
    pool.dedup();
    if let Some(fraction) = config.prune_degree {
        pool = crate::greedy::prune_candidates(graph, &pool, fraction)?;
    }
    let baseline = BaselineConfig {
        method,
        budget: config.budget,
        rng_seed: config.seed,
        pool,
    };
    let seeds = select_baseline(&baseline, graph, Some(&metric))?;

    let index = match config.diversity {
        DiversityKind::Ball => Some(BallIndex::build(&metric, config.radius)?),
        DiversityKind::Nn => None,
    };
    let state = match &index {
        Some(idx) => DiversityState::ball(idx),
        None => DiversityState::nn(&metric),
    };
    let (objective, obj_warning) = Objective::resolve(&objective_config(config, None), &state, graph.num_nodes())?;
    let breakdown = evaluate_seed_set(&prepared.influence, state, &objective, &seeds)?;
    let mut warnings = prepared.warnings();
    warnings.extend(dmax_warning(&metric));
    warnings.extend(obj_warning);
    Ok(SelectionReport {
        schema_version: SCHEMA_VERSION,
        method: Method::baseline(method),
        inputs: None,
        config: config.clone(),
        pool_size: baseline.pool.len(),
        seeds,
        rounds: Vec::new(),
        objective: ObjectiveReport {
            sigma_hat: objective.sigma_hat,
            d_hat: objective.d_hat,
            gamma: objective.gamma,
            breakdown,
        },
        d_max: dmax_report(&metric),
        influence: prepared.influence_summary(),
        warnings,
    })
}

/// Recomputes `F(S)` for the report's seeds from its configuration echo.
pub fn verify_report(
    graph: &SparseGraph,
    features: &Array2<f64>,
    report: &SelectionReport,
) -> Result<ObjectiveBreakdown> {
    let config = &report.config;
    let prepared = Prepared::build(graph, features, config)?;
    let metric = FeatureMetric::build(prepared.propagated.unit_rows.view(), config.exact_dmax_limit, config.seed);
    let index = match config.diversity {
        DiversityKind::Ball => Some(BallIndex::build(&metric, config.radius)?),
        DiversityKind::Nn => None,
    };
    let state = match &index {
        Some(idx) => DiversityState::ball(idx),
        None => DiversityState::nn(&metric),
    };
    let objective = Objective {
        sigma_hat: report.objective.sigma_hat,
        d_hat: report.objective.d_hat,
        gamma: report.objective.gamma,
    };
    evaluate_seed_set(&prepared.influence, state, &objective, &report.seeds)
}
