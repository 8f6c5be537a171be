//! Parameter-free K-step feature propagation.
//!
//! Each kernel is a linear recurrence in the input features. The recurrence
//! is written once, generically over [`Propagand`], and run either on the
//! dense feature matrix (giving `X^(k)`) or on the sparse identity (giving
//! the operator `P_k` with `X^(k) = P_k X^(0)`).

use ndarray::{Array2, Axis, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_transition, SparseGraph, TransitionKind};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kernel {
    /// `X^(k) = T_sym X^(k-1)`
    #[serde(rename = "sym")]
    NormalizedAdjacency,
    /// `X^(k) = T_rw X^(k-1)`
    #[serde(rename = "rw")]
    RandomWalk,
    /// `X^(k) = (1-a) T_rw X^(k-1) + a X^(0)`
    #[serde(rename = "ppr")]
    Ppr,
    /// `X^(k) = T_tr X^(k-1)`
    #[serde(rename = "tri")]
    Triangle,
    /// `X^(k) = ((1-a) T^k X^(0) + a X^(0) + (k-1) X^(k-1)) / k`
    #[serde(rename = "s2gc")]
    S2gc,
    /// `X^(k) = theta_k T^k X^(0) + X^(k-1)`, `X^(0) = theta_0 X`
    #[serde(rename = "gbp")]
    Gbp,
}

impl Kernel {
    pub const ALL: [Kernel; 6] = [
        Kernel::NormalizedAdjacency,
        Kernel::RandomWalk,
        Kernel::Ppr,
        Kernel::Triangle,
        Kernel::S2gc,
        Kernel::Gbp,
    ];

    pub fn uses_alpha(self) -> bool {
        matches!(self, Kernel::Ppr | Kernel::S2gc | Kernel::Gbp)
    }

    /// True for kernels whose operator rows always sum to one.
    pub fn is_row_stochastic(self) -> bool {
        matches!(self, Kernel::RandomWalk | Kernel::Ppr | Kernel::Triangle)
    }
}

pub const DEFAULT_STEPS: usize = 2;
pub const DEFAULT_ALPHA: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    pub kernel: Kernel,
    pub steps: usize,
    /// Teleport weight for PPR and S2GC, and the decay of the default GBP
    /// weights.
    pub alpha: f64,
    /// Explicit GBP weights `theta_0..theta_steps`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gbp_weights: Option<Vec<f64>>,
    /// Transition used by the S2GC and GBP power terms.
    pub base: TransitionKind,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            kernel: Kernel::RandomWalk,
            steps: DEFAULT_STEPS,
            alpha: DEFAULT_ALPHA,
            gbp_weights: None,
            base: TransitionKind::RandomWalk,
        }
    }
}

impl PropagationConfig {
    pub fn new(kernel: Kernel, steps: usize) -> Self {
        Self {
            kernel,
            steps,
            ..Self::default()
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_gbp_weights(mut self, weights: Vec<f64>) -> Self {
        self.gbp_weights = Some(weights);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel.uses_alpha() && !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if let Some(w) = &self.gbp_weights {
            if self.kernel != Kernel::Gbp {
                return Err(Error::config("GBP weights given for a non-GBP kernel"));
            }
            if w.len() != self.steps + 1 {
                return Err(Error::config(format!(
                    "GBP needs steps + 1 = {} weights, got {}",
                    self.steps + 1,
                    w.len()
                )));
            }
            if w.iter().any(|x| !x.is_finite()) {
                return Err(Error::config("GBP weights must be finite"));
            }
        }
        Ok(())
    }

    /// GBP weights in effect: the explicit ones, or `alpha (1 - alpha)^j`.
    pub fn gbp_theta(&self) -> Vec<f64> {
        match &self.gbp_weights {
            Some(w) => w.clone(),
            None => (0..=self.steps)
                .map(|j| self.alpha * (1.0 - self.alpha).powi(j as i32))
                .collect(),
        }
    }

    fn transition_kind(&self) -> TransitionKind {
        match self.kernel {
            Kernel::NormalizedAdjacency => TransitionKind::Symmetric,
            Kernel::RandomWalk | Kernel::Ppr => TransitionKind::RandomWalk,
            Kernel::Triangle => TransitionKind::Triangle,
            Kernel::S2gc | Kernel::Gbp => self.base,
        }
    }
}

/// Something the propagation recurrence can act on.
trait Propagand: Clone {
    fn apply(&self, t: &CsrMatrix) -> Self;
    fn scale(&self, a: f64) -> Self;
    /// `self + b * other`
    fn plus(&self, other: &Self, b: f64) -> Self;
    /// First node whose row holds a non-finite value.
    fn first_non_finite(&self) -> Option<usize>;
}

impl Propagand for Array2<f64> {
    fn apply(&self, t: &CsrMatrix) -> Self {
        t.mul_dense(self.view())
    }

    fn scale(&self, a: f64) -> Self {
        self * a
    }

    fn plus(&self, other: &Self, b: f64) -> Self {
        let mut out = self.clone();
        out.scaled_add(b, other);
        out
    }

    fn first_non_finite(&self) -> Option<usize> {
        self.axis_iter(Axis(0))
            .position(|row| row.iter().any(|x| !x.is_finite()))
    }
}

impl Propagand for CsrMatrix {
    fn apply(&self, t: &CsrMatrix) -> Self {
        t.matmul(self)
    }

    fn scale(&self, a: f64) -> Self {
        self.scaled(a)
    }

    fn plus(&self, other: &Self, b: f64) -> Self {
        self.add_scaled(other, b)
    }

    fn first_non_finite(&self) -> Option<usize> {
        (0..self.n_rows()).find(|&r| self.row(r).1.iter().any(|x| !x.is_finite()))
    }
}

fn run_recurrence<P: Propagand>(x0: &P, t: &CsrMatrix, cfg: &PropagationConfig) -> Result<P> {
    let check = |x: &P, step: usize| match x.first_non_finite() {
        Some(node) => Err(Error::NonFinite { node, step }),
        None => Ok(()),
    };
    let k = cfg.steps;
    if k == 0 {
        return Ok(x0.clone());
    }
    let a = cfg.alpha;
    let mut x = x0.clone();
    match cfg.kernel {
        Kernel::NormalizedAdjacency | Kernel::RandomWalk | Kernel::Triangle => {
            for step in 1..=k {
                x = x.apply(t);
                check(&x, step)?;
            }
        }
        Kernel::Ppr => {
            for step in 1..=k {
                x = x.apply(t).scale(1.0 - a).plus(x0, a);
                check(&x, step)?;
            }
        }
        Kernel::S2gc => {
            // `power` holds T^j X^(0).
            let mut power = x0.clone();
            for step in 1..=k {
                let j = step as f64;
                power = power.apply(t);
                x = power
                    .scale((1.0 - a) / j)
                    .plus(x0, a / j)
                    .plus(&x, (j - 1.0) / j);
                check(&x, step)?;
            }
        }
        Kernel::Gbp => {
            let theta = cfg.gbp_theta();
            let mut power = x0.clone();
            x = x0.scale(theta[0]);
            for step in 1..=k {
                power = power.apply(t);
                x = x.plus(&power, theta[step]);
                check(&x, step)?;
            }
        }
    }
    Ok(x)
}

/// Aggregated features `X^(k)` together with unit-normalized rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatedFeatures {
    pub values: Array2<f64>,
    /// Rows of `values` scaled to unit Euclidean norm; zero rows stay zero.
    pub unit_rows: Array2<f64>,
    pub steps_used: usize,
}

impl PropagatedFeatures {
    pub fn new(values: Array2<f64>, steps_used: usize) -> Self {
        let mut unit_rows = values.clone();
        Zip::from(unit_rows.rows_mut()).par_for_each(|mut row| {
            let norm = row.dot(&row).sqrt();
            if norm > 0.0 {
                row /= norm;
            }
        });
        Self {
            values,
            unit_rows,
            steps_used,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.values.nrows()
    }
}

pub fn propagate(
    graph: &SparseGraph,
    features: &Array2<f64>,
    cfg: &PropagationConfig,
) -> Result<PropagatedFeatures> {
    cfg.validate()?;
    if features.nrows() != graph.num_nodes() {
        return Err(Error::domain(format!(
            "feature matrix has {} rows but the graph has {} nodes",
            features.nrows(),
            graph.num_nodes()
        )));
    }
    if let Some(node) = features.first_non_finite() {
        return Err(Error::NonFinite { node, step: 0 });
    }
    let t = build_transition(graph, cfg.transition_kind())?;
    let values = run_recurrence(features, &t.matrix, cfg)?;
    Ok(PropagatedFeatures::new(values, cfg.steps))
}

/// The sparse linear operator `P_k` with `propagate(X) = P_k X`, computed by
/// running the kernel's recurrence on the identity.
pub fn propagation_operator(graph: &SparseGraph, cfg: &PropagationConfig) -> Result<CsrMatrix> {
    cfg.validate()?;
    let t = build_transition(graph, cfg.transition_kind())?;
    run_recurrence(&CsrMatrix::identity(graph.num_nodes()), &t.matrix, cfg)
}
