//! Independent reference implementations used as test oracles. Everything
//! here works on dense matrices and plain loops and shares no code with the
//! library beyond the input types.

#![allow(dead_code)]

use dimsel::graph::SparseGraph;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdős–Rényi style undirected edge list with unit weights.
pub fn random_edges(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Vec<(usize, usize, f64)> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                edges.push((u, v, 1.0));
            }
        }
    }
    edges
}

pub fn random_graph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> SparseGraph {
    SparseGraph::from_edges(n, &random_edges(n, p, rng), true).unwrap()
}

pub fn random_features(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0))
}

/// Dense `A + I` of an undirected unit-weight edge list.
pub fn dense_adjacency(n: usize, edges: &[(usize, usize, f64)]) -> Array2<f64> {
    let mut a = Array2::<f64>::eye(n);
    for &(u, v, w) in edges {
        if u != v {
            a[[u, v]] += w;
            a[[v, u]] += w;
        }
    }
    a
}

pub fn dense_rw(a: &Array2<f64>) -> Array2<f64> {
    let mut t = a.clone();
    for mut row in t.rows_mut() {
        let s: f64 = row.sum();
        row.mapv_inplace(|x| x / s);
    }
    t
}

pub fn dense_sym(a: &Array2<f64>) -> Array2<f64> {
    let d: Vec<f64> = a.rows().into_iter().map(|r| r.sum()).collect();
    Array2::from_shape_fn(a.dim(), |(i, j)| a[[i, j]] / (d[i] * d[j]).sqrt())
}

pub fn dense_power(t: &Array2<f64>, k: usize) -> Array2<f64> {
    let mut p = Array2::<f64>::eye(t.nrows());
    for _ in 0..k {
        p = t.dot(&p);
    }
    p
}

/// Sum over every length-`k` walk `v = w_0, ..., w_k = u` of the product of
/// row-normalized edge weights along the walk.
pub fn walk_sum(a: &Array2<f64>, v: usize, u: usize, k: usize) -> f64 {
    let n = a.nrows();
    let deg: Vec<f64> = a.rows().into_iter().map(|r| r.sum()).collect();
    fn go(a: &Array2<f64>, deg: &[f64], at: usize, target: usize, left: usize, acc: f64, n: usize) -> f64 {
        if left == 0 {
            return if at == target { acc } else { 0.0 };
        }
        let mut total = 0.0;
        for next in 0..n {
            let w = a[[at, next]];
            if w != 0.0 {
                total += go(a, deg, next, target, left - 1, acc * w / deg[at], n);
            }
        }
        total
    }
    go(a, &deg, v, u, k, 1.0, n)
}

/// Triangles through each edge by checking every third node.
pub fn triangle_counts(n: usize, edges: &[(usize, usize, f64)]) -> Array2<f64> {
    let mut adj = vec![vec![false; n]; n];
    for &(u, v, _) in edges {
        if u != v {
            adj[u][v] = true;
            adj[v][u] = true;
        }
    }
    Array2::from_shape_fn((n, n), |(u, v)| {
        if u == v || !adj[u][v] {
            return 0.0;
        }
        (0..n).filter(|&w| w != u && w != v && adj[u][w] && adj[v][w]).count() as f64
    })
}

/// Row-normalized absolute influence matrix of a dense operator.
pub fn normalized_influence(p: &Array2<f64>) -> Array2<f64> {
    let mut out = p.mapv(f64::abs);
    for mut row in out.rows_mut() {
        let s: f64 = row.sum();
        if s > 0.0 {
            row.mapv_inplace(|x| x / s);
        }
    }
    out
}

/// Seeds plus every node whose influence from some seed exceeds `theta`.
pub fn activated(influence: &Array2<f64>, theta: f64, seeds: &[usize]) -> Vec<bool> {
    let n = influence.nrows();
    let mut out = vec![false; n];
    for &s in seeds {
        out[s] = true;
        for v in 0..n {
            if influence[[v, s]] > theta {
                out[v] = true;
            }
        }
    }
    out
}

pub fn count(mask: &[bool]) -> usize {
    mask.iter().filter(|&&b| b).count()
}

/// Rows scaled to unit length; zero rows stay zero.
pub fn unit_rows(x: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row.mapv_inplace(|v| v / norm);
        }
    }
    out
}

pub fn half_distance(x: &Array2<f64>, u: usize, v: usize) -> f64 {
    let d: f64 = x
        .row(u)
        .iter()
        .zip(x.row(v).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    0.5 * d.sqrt()
}

pub fn dmax(x: &Array2<f64>) -> f64 {
    let n = x.nrows();
    let mut best = 0.0f64;
    for u in 0..n {
        for v in u + 1..n {
            best = best.max(half_distance(x, u, v));
        }
    }
    best
}

/// `sum_v (d_max - min(d_max, min_{w in set} d(v, w)))`.
pub fn d_nn(x: &Array2<f64>, d_max: f64, set: &[bool]) -> f64 {
    (0..x.nrows())
        .map(|v| {
            let nearest = (0..x.nrows())
                .filter(|&w| set[w])
                .map(|w| half_distance(x, v, w))
                .fold(d_max, f64::min);
            d_max - nearest
        })
        .sum()
}

/// Nodes within `radius` of some member of `set`.
pub fn d_ball(x: &Array2<f64>, radius: f64, set: &[bool]) -> usize {
    (0..x.nrows())
        .filter(|&v| (0..x.nrows()).any(|w| set[w] && half_distance(x, v, w) <= radius))
        .count()
}

/// Every `k`-subset of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Random subset of `0..n`, each node kept with probability `p`.
pub fn random_subset(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..n).filter(|_| rng.random_bool(p)).collect()
}

pub fn central_difference<F: Fn(&[f64]) -> f64>(f: F, at: &[f64], h: f64) -> Vec<f64> {
    let mut x = at.to_vec();
    (0..at.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + h;
            let up = f(&x);
            x[i] = orig - h;
            let down = f(&x);
            x[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// A random graph with features, propagated under the random-walk kernel,
/// and its influence model.
pub struct Instance {
    pub edges: Vec<(usize, usize, f64)>,
    pub graph: SparseGraph,
    pub features: Array2<f64>,
    pub propagated: dimsel::propagation::PropagatedFeatures,
    /// Dense row-normalized influence matrix, `[v, u] = I_v(u)`.
    pub influence: Array2<f64>,
    pub model: dimsel::influence::InfluenceModel,
}

impl Instance {
    pub fn new(n: usize, p: f64, steps: usize, theta: f64, seed: u64) -> Self {
        Self::with_floor(n, p, steps, theta, theta, seed)
    }

    pub fn with_floor(n: usize, p: f64, steps: usize, theta: f64, floor: f64, seed: u64) -> Self {
        use dimsel::propagation::{propagate, propagation_operator, Kernel, PropagationConfig};
        let mut r = rng(seed);
        let edges = random_edges(n, p, &mut r);
        let graph = SparseGraph::from_edges(n, &edges, true).unwrap();
        let features = random_features(n, 4, &mut r);
        let cfg = PropagationConfig::new(Kernel::RandomWalk, steps);
        let propagated = propagate(&graph, &features, &cfg).unwrap();
        let op = propagation_operator(&graph, &cfg).unwrap();
        let model = dimsel::influence::InfluenceModel::build(&op, theta, floor).unwrap();
        Self {
            edges,
            graph,
            features,
            propagated,
            influence: normalized_influence(&op.to_dense()),
            model,
        }
    }

    pub fn n(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn unit(&self) -> &Array2<f64> {
        &self.propagated.unit_rows
    }
}
