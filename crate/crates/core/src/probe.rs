//! Linear probe used to score a seed set: L2-regularized multinomial
//! logistic regression on propagated features, trained on the seeds only
//! and evaluated on held-out nodes.
//!
//! The objective is
//! `L(W, b) = mean_i [logsumexp(z_i) - z_i[y_i]] + (l2 / 2) (|W|^2 + |b|^2)`
//! with `z_i = W^T x_i + b`. It is minimized with L-BFGS and a backtracking
//! Armijo line search, starting from zero, so every accepted step strictly
//! lowers the loss and training is deterministic.

use std::collections::{BTreeMap, VecDeque};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::io::Labels;

pub const DEFAULT_L2: f64 = 5e-4;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_ITERATIONS: usize = 2000;
const LBFGS_MEMORY: usize = 10;
const ARMIJO_C1: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub l2_penalty: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            l2_penalty: DEFAULT_L2,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

/// Training data for one probe: seed feature rows and their classes.
#[derive(Debug, Clone)]
pub struct ProbeProblem {
    inputs: Array2<f64>,
    targets: Vec<usize>,
    classes: usize,
    l2: f64,
}

impl ProbeProblem {
    pub fn new(inputs: Array2<f64>, targets: Vec<usize>, classes: usize, l2: f64) -> Result<Self> {
        if inputs.nrows() != targets.len() {
            return Err(Error::domain("probe inputs and targets differ in length"));
        }
        if inputs.nrows() == 0 {
            return Err(Error::domain("probe needs at least one labelled seed"));
        }
        if let Some(&bad) = targets.iter().find(|&&y| y >= classes) {
            return Err(Error::domain(format!("class {bad} outside 0..{classes}")));
        }
        if !(l2 >= 0.0) {
            return Err(Error::config(format!("l2 penalty must be >= 0, got {l2}")));
        }
        Ok(Self {
            inputs,
            targets,
            classes,
            l2,
        })
    }

    pub fn dim(&self) -> usize {
        self.inputs.ncols()
    }

    /// Length of the flattened parameter vector: `(dim + 1) * classes`,
    /// weights first (row-major `dim x classes`), then the bias.
    pub fn num_params(&self) -> usize {
        (self.dim() + 1) * self.classes
    }

    fn unpack<'p>(&self, params: &'p [f64]) -> (ArrayView2<'p, f64>, &'p [f64]) {
        let split = self.dim() * self.classes;
        let w = ArrayView2::from_shape((self.dim(), self.classes), &params[..split]).expect("param layout");
        (w, &params[split..])
    }

    fn logits(&self, params: &[f64]) -> Array2<f64> {
        let (w, b) = self.unpack(params);
        let mut z = self.inputs.dot(&w);
        for mut row in z.rows_mut() {
            for (zc, bc) in row.iter_mut().zip(b) {
                *zc += bc;
            }
        }
        z
    }

    pub fn loss(&self, params: &[f64]) -> f64 {
        self.loss_and_gradient(params).0
    }

    pub fn gradient(&self, params: &[f64]) -> Vec<f64> {
        self.loss_and_gradient(params).1
    }

    pub fn loss_and_gradient(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let n = self.inputs.nrows() as f64;
        let mut z = self.logits(params);
        let mut data_loss = 0.0;
        // Turn logits into softmax residuals p - onehot(y), in place.
        for (mut row, &y) in z.rows_mut().into_iter().zip(&self.targets) {
            let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let target = row[y];
            row.mapv_inplace(|v| (v - max).exp());
            let total: f64 = row.sum();
            data_loss += max + total.ln() - target;
            row /= total;
            row[y] -= 1.0;
        }
        let reg: f64 = params.iter().map(|p| p * p).sum();
        let loss = data_loss / n + 0.5 * self.l2 * reg;

        let grad_w = self.inputs.t().dot(&z) / n;
        let grad_b = z.sum_axis(Axis(0)) / n;
        let grad = grad_w
            .iter()
            .chain(grad_b.iter())
            .zip(params)
            .map(|(g, p)| g + self.l2 * p)
            .collect();
        (loss, grad)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeModel {
    /// `(dim + 1) x classes`; the last row is the bias.
    pub weights: Array2<f64>,
    pub classes: usize,
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
    /// Loss after every accepted iteration, starting at the zero model.
    pub loss_history: Vec<f64>,
    /// Seeds per class.
    pub seed_histogram: BTreeMap<usize, usize>,
    pub warnings: Vec<String>,
}

impl ProbeModel {
    pub fn predict(&self, x: ndarray::ArrayView1<'_, f64>) -> usize {
        let d = self.weights.nrows() - 1;
        let mut scores: Array1<f64> = self.weights.row(d).to_owned();
        scores += &x.dot(&self.weights.slice(ndarray::s![..d, ..]));
        let mut best = 0;
        for c in 1..self.classes {
            if scores[c] > scores[best] {
                best = c;
            }
        }
        best
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Result of minimizing a smooth function with [`minimize_lbfgs`].
#[derive(Debug, Clone)]
pub struct Minimum {
    pub params: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
    pub history: Vec<f64>,
}

/// L-BFGS with Armijo backtracking. Stops when the gradient norm drops to
/// `tolerance`, after `max_iterations`, or when no step decreases `f`.
pub fn minimize_lbfgs(
    f: impl Fn(&[f64]) -> (f64, Vec<f64>),
    start: Vec<f64>,
    tolerance: f64,
    max_iterations: usize,
) -> Minimum {
    let mut x = start;
    let (mut fx, mut g) = f(&x);
    let mut history = vec![fx];
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    while norm(&g) > tolerance && iterations < max_iterations {
        // Two-loop recursion for the quasi-Newton direction.
        let mut q: Vec<f64> = g.clone();
        let mut alphas = Vec::with_capacity(memory.len());
        for (s, y, rho) in memory.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        if let Some((s, y, _)) = memory.back() {
            let scale = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|qi| *qi *= scale);
        }
        for ((s, y, rho), a) in memory.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            memory.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }

        let mut step = 1.0;
        let accepted = loop {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            let (ft, gt) = f(&trial);
            if ft <= fx + ARMIJO_C1 * step * slope && ft < fx {
                break Some((trial, ft, gt));
            }
            step *= 0.5;
            if step < 1e-20 {
                break None;
            }
        };
        let Some((next, f_next, g_next)) = accepted else {
            break;
        };
        let s: Vec<f64> = next.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_next.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if memory.len() == LBFGS_MEMORY {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        x = next;
        fx = f_next;
        g = g_next;
        history.push(fx);
        iterations += 1;
    }
    let grad_norm = norm(&g);
    Minimum {
        params: x,
        iterations,
        converged: grad_norm <= tolerance,
        grad_norm,
        history,
    }
}

/// Number of classes implied by a label vector (largest class id + 1).
pub fn num_classes(labels: &Labels) -> usize {
    labels.iter().flatten().max().map_or(0, |&c| c + 1)
}

fn seed_targets(labels: &Labels, seeds: &[NodeId]) -> Result<Vec<usize>> {
    seeds
        .iter()
        .map(|&u| {
            labels
                .get(u)
                .copied()
                .flatten()
                .ok_or_else(|| Error::domain(format!("seed {u} has no label")))
        })
        .collect()
}

/// Trains the probe on the given seeds. Seed order does not matter.
pub fn train_probe(
    features: ArrayView2<'_, f64>,
    labels: &Labels,
    seeds: &[NodeId],
    config: &EvalConfig,
) -> Result<ProbeModel> {
    let mut seeds = seeds.to_vec();
    seeds.sort_unstable();
    seeds.dedup();
    if let Some(&bad) = seeds.iter().find(|&&u| u >= features.nrows()) {
        return Err(Error::domain(format!("seed {bad} outside 0..{}", features.nrows())));
    }
    let targets = seed_targets(labels, &seeds)?;
    let classes = num_classes(labels);
    let inputs = features.select(Axis(0), &seeds);
    let problem = ProbeProblem::new(inputs, targets.clone(), classes, config.l2_penalty)?;

    let mut seed_histogram = BTreeMap::new();
    for &y in &targets {
        *seed_histogram.entry(y).or_insert(0) += 1;
    }
    let mut warnings = Vec::new();
    if seed_histogram.len() == 1 {
        warnings.push("all seeds share one class: the probe predicts a constant".to_string());
    }

    let min = minimize_lbfgs(
        |p| problem.loss_and_gradient(p),
        vec![0.0; problem.num_params()],
        config.tolerance,
        config.max_iterations,
    );
    if !min.converged {
        warnings.push(format!(
            "probe stopped after {} iterations with gradient norm {:.3e}",
            min.iterations, min.grad_norm
        ));
    }
    let weights = Array2::from_shape_vec((problem.dim() + 1, classes), min.params).expect("param layout");
    Ok(ProbeModel {
        weights,
        classes,
        iterations: min.iterations,
        converged: min.converged,
        grad_norm: min.grad_norm,
        loss_history: min.history,
        seed_histogram,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAccuracy {
    pub class: usize,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    pub per_class: Vec<ClassAccuracy>,
    pub seed_histogram: BTreeMap<usize, usize>,
}

/// Micro accuracy of `model` on `test`, with a per-class breakdown.
pub fn evaluate(
    model: &ProbeModel,
    features: ArrayView2<'_, f64>,
    labels: &Labels,
    test: &[NodeId],
) -> Result<AccuracyReport> {
    if test.is_empty() {
        return Err(Error::domain("cannot evaluate on an empty test set"));
    }
    let targets = seed_targets(labels, test)
        .map_err(|_| Error::domain("every test node needs a label"))?;
    let mut per: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    let mut correct = 0;
    for (&u, &y) in test.iter().zip(&targets) {
        let hit = model.predict(features.row(u)) == y;
        let slot = per.entry(y).or_insert((0, 0));
        slot.1 += 1;
        if hit {
            slot.0 += 1;
            correct += 1;
        }
    }
    Ok(AccuracyReport {
        accuracy: correct as f64 / test.len() as f64,
        correct,
        total: test.len(),
        per_class: per
            .into_iter()
            .map(|(class, (c, t))| ClassAccuracy {
                class,
                correct: c,
                total: t,
                accuracy: c as f64 / t as f64,
            })
            .collect(),
        seed_histogram: model.seed_histogram.clone(),
    })
}

pub fn train_and_evaluate(
    features: ArrayView2<'_, f64>,
    labels: &Labels,
    seeds: &[NodeId],
    test: &[NodeId],
    config: &EvalConfig,
) -> Result<AccuracyReport> {
    let model = train_probe(features, labels, seeds, config)?;
    evaluate(&model, features, labels, test)
}

pub const GAP_LEVELS_PERCENT: [u32; 7] = [1, 2, 3, 4, 5, 6, 7];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub budget: usize,
    pub label_rate: f64,
    pub accuracy: f64,
    /// Full-pool accuracy minus this accuracy.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapLevel {
    pub gap_percent: u32,
    /// Smallest label rate whose gap is within the level, if any.
    pub label_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapTable {
    pub full_pool_accuracy: f64,
    pub rows: Vec<GapRow>,
    pub levels: Vec<GapLevel>,
}

/// Compares probes trained on each `(budget, seeds)` selection against one
/// trained on the whole train pool.
pub fn coreset_sweep(
    features: ArrayView2<'_, f64>,
    labels: &Labels,
    selections: &[(usize, Vec<NodeId>)],
    train_pool: &[NodeId],
    test: &[NodeId],
    config: &EvalConfig,
) -> Result<GapTable> {
    if selections.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(Error::config("coreset budgets must be strictly ascending"));
    }
    if train_pool.is_empty() {
        return Err(Error::domain("coreset sweep needs a non-empty train pool"));
    }
    let full = train_and_evaluate(features, labels, train_pool, test, config)?.accuracy;
    let mut rows = Vec::with_capacity(selections.len());
    for (budget, seeds) in selections {
        let acc = train_and_evaluate(features, labels, seeds, test, config)?.accuracy;
        rows.push(GapRow {
            budget: *budget,
            label_rate: *budget as f64 / train_pool.len() as f64,
            accuracy: acc,
            gap: full - acc,
        });
    }
    let levels = GAP_LEVELS_PERCENT
        .iter()
        .map(|&pct| GapLevel {
            gap_percent: pct,
            label_rate: rows
                .iter()
                .find(|r| r.gap <= pct as f64 / 100.0 + 1e-12)
                .map(|r| r.label_rate),
        })
        .collect();
    Ok(GapTable {
        full_pool_accuracy: full,
        rows,
        levels,
    })
}
