//! Method x budget accuracy grids over repeated seeded runs.

use std::fmt::Write as _;
use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::BaselineMethod;
use crate::error::{Error, Result};
use crate::graph::{NodeId, SparseGraph};
use crate::io::{Labels, Splits};
use crate::pipeline::{run_baseline, run_selection};
use crate::probe::{train_and_evaluate, EvalConfig};
use crate::propagation::propagate;
use crate::report::{Method, RunConfig};
use crate::sbm::{generate_sbm, random_splits, SbmParams};

#[derive(Debug, Clone)]
pub enum BenchSource {
    /// A fresh SBM instance and random split per run.
    Sbm {
        params: SbmParams,
        val_frac: f64,
        test_frac: f64,
    },
    /// Fixed inputs; runs differ only in their seed.
    Fixed {
        graph: SparseGraph,
        features: Array2<f64>,
        labels: Labels,
        splits: Splits,
    },
}

#[derive(Debug, Clone)]
pub struct BenchSpec {
    pub source: BenchSource,
    pub methods: Vec<Method>,
    /// Ascending budgets; every method selects the largest once and is
    /// scored on each prefix.
    pub budgets: Vec<usize>,
    pub runs: usize,
    pub base_seed: u64,
    /// Selection settings; `budget` and `seed` are overwritten per run.
    pub config: RunConfig,
    pub eval: EvalConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run: usize,
    pub seed: u64,
    pub method: Method,
    pub budget: usize,
    pub accuracy: f64,
    pub select_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub method: Method,
    pub budget: usize,
    pub runs: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_select_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchTable {
    pub cells: Vec<BenchCell>,
    pub runs: Vec<RunResult>,
}

impl BenchTable {
    pub fn cell(&self, method: Method, budget: usize) -> Option<&BenchCell> {
        self.cells.iter().find(|c| c.method == method && c.budget == budget)
    }

    /// Per-run accuracies of one cell, ordered by run index.
    pub fn accuracies(&self, method: Method, budget: usize) -> Vec<f64> {
        let mut rows: Vec<&RunResult> = self
            .runs
            .iter()
            .filter(|r| r.method == method && r.budget == budget)
            .collect();
        rows.sort_by_key(|r| r.run);
        rows.iter().map(|r| r.accuracy).collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["method", "budget", "runs", "mean_accuracy", "std_accuracy", "mean_select_ms"])?;
        for c in &self.cells {
            w.write_record([
                c.method.name().to_string(),
                c.budget.to_string(),
                c.runs.to_string(),
                format!("{:.6}", c.mean_accuracy),
                format!("{:.6}", c.std_accuracy),
                format!("{:.3}", c.mean_select_ms),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_markdown(&self) -> String {
        let mut budgets: Vec<usize> = self.cells.iter().map(|c| c.budget).collect();
        budgets.sort_unstable();
        budgets.dedup();
        let mut methods: Vec<Method> = Vec::new();
        for c in &self.cells {
            if !methods.contains(&c.method) {
                methods.push(c.method);
            }
        }
        let mut out = String::new();
        let _ = write!(out, "| method |");
        for b in &budgets {
            let _ = write!(out, " B={b} |");
        }
        out.push('\n');
        out.push_str("|---|");
        out.push_str(&"---|".repeat(budgets.len()));
        out.push('\n');
        for m in methods {
            let _ = write!(out, "| {} |", m.name());
            for &b in &budgets {
                match self.cell(m, b) {
                    Some(c) => {
                        let _ = write!(out, " {:.2} ± {:.2} |", 100.0 * c.mean_accuracy, 100.0 * c.std_accuracy);
                    }
                    None => out.push_str(" - |"),
                }
            }
            out.push('\n');
        }
        out
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

fn selection_seeds(
    method: Method,
    graph: &SparseGraph,
    features: &Array2<f64>,
    config: &RunConfig,
    pool: &[NodeId],
) -> Result<Vec<NodeId>> {
    let pool = Some(pool.to_vec());
    let report = match method {
        Method::DimBall | Method::DimNn => {
            let mut cfg = config.clone();
            cfg.diversity = match method {
                Method::DimBall => crate::diversity::DiversityKind::Ball,
                _ => crate::diversity::DiversityKind::Nn,
            };
            run_selection(graph, features, &cfg, pool, false)?
        }
        Method::Random => run_baseline(graph, features, BaselineMethod::Random, config, pool)?,
        Method::Degree => run_baseline(graph, features, BaselineMethod::Degree, config, pool)?,
        Method::Kcenter => run_baseline(graph, features, BaselineMethod::Kcenter, config, pool)?,
    };
    Ok(report.seeds)
}

fn run_once(spec: &BenchSpec, run: usize) -> Result<Vec<RunResult>> {
    let seed = spec.base_seed + run as u64;
    let owned;
    let (graph, features, labels, splits) = match &spec.source {
        BenchSource::Sbm {
            params,
            val_frac,
            test_frac,
        } => {
            let inst = generate_sbm(params, seed)?;
            let splits = random_splits(inst.graph.num_nodes(), *val_frac, *test_frac, seed);
            let labels: Labels = inst.labels.iter().map(|&c| Some(c)).collect();
            owned = (inst.graph, inst.features, labels, splits);
            (&owned.0, &owned.1, &owned.2, &owned.3)
        }
        BenchSource::Fixed {
            graph,
            features,
            labels,
            splits,
        } => (graph, features, labels, splits),
    };
    let max_budget = *spec.budgets.last().expect("non-empty budgets");
    let mut config = spec.config.clone();
    config.budget = max_budget;
    config.seed = seed;
    let propagated = propagate(graph, features, &config.propagation)?;

    let mut out = Vec::new();
    for &method in &spec.methods {
        let started = Instant::now();
        let seeds = selection_seeds(method, graph, features, &config, &splits.train)?;
        let select_ms = started.elapsed().as_secs_f64() * 1e3;
        for &budget in &spec.budgets {
            let acc = train_and_evaluate(propagated.values.view(), labels, &seeds[..budget], &splits.test, &spec.eval)?;
            out.push(RunResult {
                run,
                seed,
                method,
                budget,
                accuracy: acc.accuracy,
                select_ms,
            });
        }
    }
    Ok(out)
}

pub fn run_bench(spec: &BenchSpec) -> Result<BenchTable> {
    if spec.budgets.is_empty() || spec.budgets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("bench budgets must be non-empty and strictly ascending"));
    }
    if spec.methods.is_empty() || spec.runs == 0 {
        return Err(Error::config("bench needs at least one method and one run"));
    }
    let per_run: Vec<Vec<RunResult>> = (0..spec.runs)
        .into_par_iter()
        .map(|run| run_once(spec, run))
        .collect::<Result<_>>()?;
    let runs: Vec<RunResult> = per_run.into_iter().flatten().collect();
    let mut cells = Vec::new();
    for &method in &spec.methods {
        for &budget in &spec.budgets {
            let rows: Vec<&RunResult> = runs
                .iter()
                .filter(|r| r.method == method && r.budget == budget)
                .collect();
            let accs: Vec<f64> = rows.iter().map(|r| r.accuracy).collect();
            let (mean, std) = mean_std(&accs);
            let mean_ms = rows.iter().map(|r| r.select_ms).sum::<f64>() / rows.len() as f64;
            cells.push(BenchCell {
                method,
                budget,
                runs: rows.len(),
                mean_accuracy: mean,
                std_accuracy: std,
                mean_select_ms: mean_ms,
            });
        }
    }
    Ok(BenchTable { cells, runs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_basics() {
        assert_eq!(mean_std(&[1.0]), (1.0, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
    }
}
