//! Feature-space diversity of the activated set.
//!
//! Two monotone submodular functions of `sigma(S)` are provided:
//!
//! * nearest-neighbour diversity, `sum_u (d_max - min_{v in sigma(S)} d(u, v))`;
//! * ball coverage, `|union_{v in sigma(S)} G_v|` where `G_v` is the set of
//!   nodes within radius `r` of `v`.
//!
//! Distances are half the Euclidean distance between unit-normalized rows of
//! the propagated features, so they lie in `[0, 1]`.

use fixedbitset::FixedBitSet;
use ndarray::ArrayView2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::rng::{substream, Stream};

pub const DEFAULT_RADIUS: f64 = 0.05;
pub const DEFAULT_EXACT_DMAX_LIMIT: usize = 20_000;
const DMAX_SAMPLE_PAIRS: usize = 1_000_000;
/// Largest node count for which all pairwise distances are precomputed.
const DISTANCE_CACHE_LIMIT: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiversityKind {
    Nn,
    Ball,
}

fn half_distance(a: ndarray::ArrayView1<'_, f64>, b: ndarray::ArrayView1<'_, f64>) -> f64 {
    let sq: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum();
    0.5 * sq.sqrt()
}

/// Largest pairwise distance. Exact for `n <= exact_limit`; otherwise the
/// maximum over sampled pairs refined by scanning all rows against both
/// endpoints of the best sampled pair. Returns `(d_max, exact)`.
pub fn compute_dmax(unit_rows: ArrayView2<'_, f64>, exact_limit: usize, seed: u64) -> (f64, bool) {
    let n = unit_rows.nrows();
    if n <= exact_limit {
        let best = (0..n)
            .into_par_iter()
            .map(|u| {
                (u + 1..n)
                    .map(|v| half_distance(unit_rows.row(u), unit_rows.row(v)))
                    .fold(0.0f64, f64::max)
            })
            .reduce(|| 0.0, f64::max);
        return (best, true);
    }
    let mut rng = substream(seed, Stream::DmaxSampling);
    let (mut best, mut pair) = (0.0f64, (0, 0));
    for _ in 0..DMAX_SAMPLE_PAIRS {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        let d = half_distance(unit_rows.row(u), unit_rows.row(v));
        if d > best {
            best = d;
            pair = (u, v);
        }
    }
    for anchor in [pair.0, pair.1] {
        let far = (0..n)
            .into_par_iter()
            .map(|w| half_distance(unit_rows.row(anchor), unit_rows.row(w)))
            .reduce(|| 0.0, f64::max);
        best = best.max(far);
    }
    (best, false)
}

/// Distance oracle over unit-normalized propagated features.
#[derive(Debug, Clone)]
pub struct FeatureMetric<'a> {
    unit_rows: ArrayView2<'a, f64>,
    d_max: f64,
    exact_dmax: bool,
    cache: Option<Vec<f64>>,
}

impl<'a> FeatureMetric<'a> {
    pub fn new(unit_rows: ArrayView2<'a, f64>, d_max: f64, exact_dmax: bool) -> Self {
        let n = unit_rows.nrows();
        let cache = (n <= DISTANCE_CACHE_LIMIT).then(|| {
            let rows: Vec<Vec<f64>> = (0..n)
                .into_par_iter()
                .map(|u| (0..n).map(|v| half_distance(unit_rows.row(u), unit_rows.row(v))).collect())
                .collect();
            rows.concat()
        });
        Self {
            unit_rows,
            d_max,
            exact_dmax,
            cache,
        }
    }

    /// Builds the metric and computes `d_max` with [`compute_dmax`].
    pub fn build(unit_rows: ArrayView2<'a, f64>, exact_limit: usize, seed: u64) -> Self {
        let (d_max, exact) = compute_dmax(unit_rows, exact_limit, seed);
        Self::new(unit_rows, d_max, exact)
    }

    pub fn num_nodes(&self) -> usize {
        self.unit_rows.nrows()
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn exact_dmax(&self) -> bool {
        self.exact_dmax
    }

    pub fn distance(&self, u: NodeId, v: NodeId) -> f64 {
        match &self.cache {
            Some(c) => c[u * self.num_nodes() + v],
            None => half_distance(self.unit_rows.row(u), self.unit_rows.row(v)),
        }
    }
}

/// Radius-`r` neighbourhoods in feature space.
#[derive(Debug, Clone)]
pub struct BallIndex {
    radius: f64,
    balls: Vec<Vec<NodeId>>,
}

impl BallIndex {
    /// Exact pairwise construction; each ball is sorted ascending.
    pub fn build(metric: &FeatureMetric<'_>, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) {
            return Err(Error::config(format!("ball radius must be >= 0, got {radius}")));
        }
        let n = metric.num_nodes();
        let balls = (0..n)
            .into_par_iter()
            .map(|u| (0..n).filter(|&v| metric.distance(u, v) <= radius).collect())
            .collect();
        Ok(Self { radius, balls })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn num_nodes(&self) -> usize {
        self.balls.len()
    }

    pub fn ball(&self, u: NodeId) -> &[NodeId] {
        &self.balls[u]
    }
}

#[derive(Debug, Clone)]
pub struct NnDiversity<'m> {
    metric: &'m FeatureMetric<'m>,
    /// `m[u] = min(d_max, min_{v in sigma} d(u, v))`
    nearest: Vec<f64>,
    committed: FixedBitSet,
    value: f64,
    /// Committed distances that exceeded a sampled `d_max`.
    dmax_exceeded: usize,
}

impl<'m> NnDiversity<'m> {
    pub fn new(metric: &'m FeatureMetric<'m>) -> Self {
        let n = metric.num_nodes();
        Self {
            metric,
            nearest: vec![metric.d_max(); n],
            committed: FixedBitSet::with_capacity(n),
            value: 0.0,
            dmax_exceeded: 0,
        }
    }

    pub fn nearest(&self) -> &[f64] {
        &self.nearest
    }

    pub fn dmax_exceeded(&self) -> usize {
        self.dmax_exceeded
    }

    fn gain(&self, delta: &[NodeId]) -> f64 {
        if delta.is_empty() {
            return 0.0;
        }
        let d_max = self.metric.d_max();
        self.nearest
            .iter()
            .enumerate()
            .map(|(u, &m)| {
                let closest = delta
                    .iter()
                    .map(|&w| self.metric.distance(u, w))
                    .fold(d_max, f64::min);
                (m - closest).max(0.0)
            })
            .sum()
    }

    fn commit(&mut self, delta: &[NodeId]) -> Result<()> {
        let d_max = self.metric.d_max();
        for &w in delta {
            for u in 0..self.nearest.len() {
                let d = self.metric.distance(u, w);
                if d > d_max {
                    self.dmax_exceeded += 1;
                }
                if d < self.nearest[u] {
                    self.nearest[u] = d;
                }
            }
        }
        self.value = self.nearest.iter().map(|m| d_max - m).sum();
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BallDiversity<'b> {
    index: &'b BallIndex,
    covered: FixedBitSet,
    committed: FixedBitSet,
}

impl<'b> BallDiversity<'b> {
    pub fn new(index: &'b BallIndex) -> Self {
        let n = index.num_nodes();
        Self {
            index,
            covered: FixedBitSet::with_capacity(n),
            committed: FixedBitSet::with_capacity(n),
        }
    }

    pub fn covered(&self) -> &FixedBitSet {
        &self.covered
    }

    fn gain(&self, delta: &[NodeId]) -> f64 {
        let mut fresh = FixedBitSet::with_capacity(self.covered.len());
        let mut count = 0usize;
        for &w in delta {
            for &v in self.index.ball(w) {
                if !self.covered.contains(v) && !fresh.put(v) {
                    count += 1;
                }
            }
        }
        count as f64
    }

    fn commit(&mut self, delta: &[NodeId]) -> Result<()> {
        for &w in delta {
            for &v in self.index.ball(w) {
                self.covered.insert(v);
            }
        }
        Ok(())
    }
}

/// Incremental diversity of the activated set.
#[derive(Debug, Clone)]
pub enum DiversityState<'a> {
    Nn(NnDiversity<'a>),
    Ball(BallDiversity<'a>),
}

impl<'a> DiversityState<'a> {
    pub fn nn(metric: &'a FeatureMetric<'a>) -> Self {
        DiversityState::Nn(NnDiversity::new(metric))
    }

    pub fn ball(index: &'a BallIndex) -> Self {
        DiversityState::Ball(BallDiversity::new(index))
    }

    pub fn kind(&self) -> DiversityKind {
        match self {
            DiversityState::Nn(_) => DiversityKind::Nn,
            DiversityState::Ball(_) => DiversityKind::Ball,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.committed().len()
    }

    fn committed(&self) -> &FixedBitSet {
        match self {
            DiversityState::Nn(s) => &s.committed,
            DiversityState::Ball(s) => &s.committed,
        }
    }

    /// Current `D(S)`.
    pub fn value(&self) -> f64 {
        match self {
            DiversityState::Nn(s) => s.value,
            DiversityState::Ball(s) => s.covered.count_ones(..) as f64,
        }
    }

    /// Largest attainable value: `N * d_max` for NN, `N` for ball coverage.
    pub fn max_value(&self) -> f64 {
        let n = self.num_nodes() as f64;
        match self {
            DiversityState::Nn(s) => n * s.metric.d_max(),
            DiversityState::Ball(_) => n,
        }
    }

    /// Increase of `D` if `delta` were added to the activated set. `delta`
    /// must be disjoint from what has been committed.
    pub fn gain(&self, delta: &[NodeId]) -> f64 {
        match self {
            DiversityState::Nn(s) => s.gain(delta),
            DiversityState::Ball(s) => s.gain(delta),
        }
    }

    /// Adds `delta` to the activated set. Returns the realized gain.
    pub fn commit(&mut self, delta: &[NodeId]) -> Result<f64> {
        let committed = match self {
            DiversityState::Nn(s) => &mut s.committed,
            DiversityState::Ball(s) => &mut s.committed,
        };
        for (i, &v) in delta.iter().enumerate() {
            if committed.contains(v) || delta[..i].contains(&v) {
                return Err(Error::Contract(format!(
                    "node {v} is already part of the activated set"
                )));
            }
        }
        for &v in delta {
            committed.insert(v);
        }
        let before = self.value();
        match self {
            DiversityState::Nn(s) => s.commit(delta)?,
            DiversityState::Ball(s) => s.commit(delta)?,
        }
        Ok(self.value() - before)
    }

    /// Committed distances that exceeded `d_max` (NN only).
    pub fn dmax_exceeded(&self) -> usize {
        match self {
            DiversityState::Nn(s) => s.dmax_exceeded(),
            DiversityState::Ball(_) => 0,
        }
    }
}
