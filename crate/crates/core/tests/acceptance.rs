//! Acceptance suite. Each criterion prints one PASS/FAIL line; the test
//! fails if any criterion fails. Run with
//! `cargo test -p dimsel --test acceptance -- --nocapture` to see the lines.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use common::*;
use dimsel::bench::{run_bench, BenchSource, BenchSpec};
use dimsel::diversity::{BallIndex, DiversityKind, DiversityState, FeatureMetric, DEFAULT_EXACT_DMAX_LIMIT};
use dimsel::graph::NodeId;
use dimsel::greedy::{select, ObjectiveConfig, SelectionMode, SelectionState};
use dimsel::influence::{activated_set, default_prune_floor};
use dimsel::probe::{train_probe, EvalConfig, ProbeProblem};
use dimsel::propagation::{Kernel, PropagationConfig};
use dimsel::report::{Method, RunConfig};
use dimsel::sbm::SbmParams;
use rand::Rng;

type Outcome = Result<String, String>;

struct Criterion {
    name: &'static str,
    limit: Duration,
    check: fn() -> Outcome,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

const RADIUS: f64 = 0.1;

fn greedy<'a>(
    inst: &Instance,
    metric: &'a FeatureMetric<'a>,
    index: &'a BallIndex,
    kind: DiversityKind,
    budget: usize,
    mode: SelectionMode,
) -> SelectionState<'a> {
    let state = match kind {
        DiversityKind::Nn => DiversityState::nn(metric),
        DiversityKind::Ball => DiversityState::ball(index),
    };
    select(&inst.graph, &inst.model, state, &ObjectiveConfig::new(budget), mode, false).unwrap()
}

/// `(|sigma|, D, F)` from the dense oracles, with `gamma = 1`.
fn oracle_parts(inst: &Instance, kind: DiversityKind, radius: f64, seeds: &[NodeId]) -> (usize, f64, f64) {
    let n = inst.n() as f64;
    let unit = unit_rows(&inst.propagated.values);
    let act = activated(&inst.influence, inst.model.theta(), seeds);
    let d_max = dmax(&unit);
    let (d, d_hat) = match kind {
        DiversityKind::Nn => (d_nn(&unit, d_max, &act), n * d_max),
        DiversityKind::Ball => (d_ball(&unit, radius, &act) as f64, n),
    };
    let div = if d_hat > 0.0 { d / d_hat } else { 0.0 };
    (count(&act), d, count(&act) as f64 / n + div)
}

fn walk_oracle() -> Outcome {
    let mut compared = 0;
    for g in 0..10u64 {
        let n = 6 + (g as usize % 7);
        let k = 1 + (g as usize % 3);
        let inst = Instance::with_floor(n, 0.3, k, 0.0, 0.0, 100 + g);
        let a = dense_adjacency(n, &inst.edges);
        for v in 0..n {
            for u in 0..n {
                let (lib, oracle) = (inst.model.score(v, u), walk_sum(&a, v, u, k));
                ensure((lib - oracle).abs() <= 1e-9, || {
                    format!("graph {g}: I_{v}({u}) = {lib}, walk sum {oracle}")
                })?;
                compared += 1;
            }
        }
    }
    Ok(format!("{compared} scores on 10 graphs"))
}

fn submodularity() -> Outcome {
    let mut r = rng(31337);
    let names = ["|sigma|", "D_NN", "D_ball"];
    let mut violations = [0usize; 3];
    let mut instances = Vec::new();
    for i in 0..20u64 {
        instances.push(Instance::new(20 + (i as usize % 31), 0.1, 1 + i as usize % 3, 0.2, 500 + i));
    }
    for t in 0..1000 {
        let inst = &instances[t % instances.len()];
        let n = inst.n();
        let metric = FeatureMetric::build(inst.unit().view(), usize::MAX, 0);
        let index = BallIndex::build(&metric, RADIUS).unwrap();
        let eval = |seeds: &[NodeId]| {
            let act = activated_set(&inst.model, seeds).unwrap();
            let members: Vec<NodeId> = act.members().collect();
            let mut nn = DiversityState::nn(&metric);
            nn.commit(&members).unwrap();
            let mut ball = DiversityState::ball(&index);
            ball.commit(&members).unwrap();
            [act.len() as f64, nn.value(), ball.value()]
        };
        let big = random_subset(n, r.random_range(0.05..0.5), &mut r);
        let small: Vec<NodeId> = big.iter().copied().filter(|_| r.random_bool(0.5)).collect();
        let outside: Vec<NodeId> = (0..n).filter(|v| !big.contains(v)).collect();
        let v = outside[r.random_range(0..outside.len())];
        let plus = |s: &[NodeId]| s.iter().copied().chain([v]).collect::<Vec<_>>();
        let (fs, ft, fsv, ftv) = (eval(&small), eval(&big), eval(&plus(&small)), eval(&plus(&big)));
        for i in 0..3 {
            let ok = fs[i] <= ft[i] + 1e-9 && fs[i] <= fsv[i] + 1e-9 && fsv[i] - fs[i] + 1e-9 >= ftv[i] - ft[i];
            if !ok {
                violations[i] += 1;
            }
        }
    }
    ensure(violations == [0; 3], || {
        format!("violations {:?} for {:?}", violations, names)
    })?;
    Ok("1000 triples per function, 0 violations".into())
}

fn greedy_guarantee() -> Outcome {
    let bound = 1.0 - (-1.0f64).exp();
    let mut worst = f64::INFINITY;
    let mut checks = 0;
    for i in 0..25u64 {
        let n = 8 + (i as usize % 7);
        let budget = 1 + (i as usize % 3);
        let inst = Instance::new(n, 0.2, 1 + (i as usize % 3), 0.2, 900 + i);
        let metric = FeatureMetric::build(inst.unit().view(), usize::MAX, 0);
        let index = BallIndex::build(&metric, RADIUS).unwrap();
        for kind in [DiversityKind::Nn, DiversityKind::Ball] {
            let got = greedy(&inst, &metric, &index, kind, budget, SelectionMode::Lazy);
            let best = subsets(n, budget)
                .iter()
                .map(|s| oracle_parts(&inst, kind, RADIUS, s).2)
                .fold(0.0, f64::max);
            ensure(got.objective_value >= bound * best - 1e-12, || {
                format!("instance {i} {kind:?}: F = {} < (1-1/e) * {best}", got.objective_value)
            })?;
            worst = worst.min(got.objective_value / best);
            checks += 1;
        }
    }
    Ok(format!("{checks} checks, worst ratio {worst:.4}"))
}

fn lazy_naive() -> Outcome {
    let mut saved = 0usize;
    for i in 0..20u64 {
        let n = 20 + (i as usize * 3);
        let inst = Instance::new(n, 0.1, 2, 0.2, 1300 + i);
        let metric = FeatureMetric::build(inst.unit().view(), usize::MAX, 0);
        let index = BallIndex::build(&metric, RADIUS).unwrap();
        let kind = if i % 2 == 0 { DiversityKind::Ball } else { DiversityKind::Nn };
        let lazy = greedy(&inst, &metric, &index, kind, 8, SelectionMode::Lazy);
        let naive = greedy(&inst, &metric, &index, kind, 8, SelectionMode::Naive);
        ensure(lazy.seeds == naive.seeds, || {
            format!("instance {i}: {:?} vs {:?}", lazy.seeds, naive.seeds)
        })?;
        let traj = |s: &SelectionState<'_>| s.rounds.iter().map(|r| r.objective).collect::<Vec<_>>();
        ensure(traj(&lazy) == traj(&naive), || format!("instance {i}: objective trajectories differ"))?;
        let evals = |s: &SelectionState<'_>| s.rounds.iter().map(|r| r.evaluations).sum::<usize>();
        saved += evals(&naive) - evals(&lazy);
    }
    Ok(format!("20 instances identical, lazy skipped {saved} evaluations"))
}

fn zero_radius() -> Outcome {
    let inst = Instance::new(40, 0.08, 2, 0.2, 77);
    let metric = FeatureMetric::build(inst.unit().view(), usize::MAX, 0);
    let n = inst.n();
    let distinct = (0..n).all(|u| (0..u).all(|v| metric.distance(u, v) > 0.0));
    ensure(distinct, || "features are not duplicate-free".into())?;
    let index = BallIndex::build(&metric, 0.0).unwrap();
    let mut r = rng(78);
    for t in 0..100 {
        let seeds = random_subset(n, r.random_range(0.0..0.3), &mut r);
        let act = activated_set(&inst.model, &seeds).unwrap();
        let mut ball = DiversityState::ball(&index);
        ball.commit(&act.members().collect::<Vec<_>>()).unwrap();
        ensure(ball.value() == act.len() as f64, || {
            format!("set {t}: D_ball = {} but |sigma| = {}", ball.value(), act.len())
        })?;
    }
    Ok("100 sets, exact equality".into())
}

fn incremental() -> Outcome {
    let inst = Instance::new(150, 0.02, 2, 0.2, 4242);
    let metric = FeatureMetric::build(inst.unit().view(), usize::MAX, 0);
    let index = BallIndex::build(&metric, RADIUS).unwrap();
    let mut worst = 0.0f64;
    for kind in [DiversityKind::Nn, DiversityKind::Ball] {
        let run = greedy(&inst, &metric, &index, kind, 50, SelectionMode::Lazy);
        ensure(run.rounds.len() == 50, || format!("{kind:?}: only {} rounds", run.rounds.len()))?;
        for (i, round) in run.rounds.iter().enumerate() {
            let (act, d, f) = oracle_parts(&inst, kind, RADIUS, &run.seeds[..=i]);
            ensure(round.activated == act, || format!("{kind:?} round {i}: |sigma| {} vs {act}", round.activated))?;
            let err = (round.diversity - d).abs().max((round.objective - f).abs());
            ensure(err <= 1e-9, || format!("{kind:?} round {i}: error {err:e}"))?;
            worst = worst.max(err);
        }
    }
    Ok(format!("2 x 50 rounds, max error {worst:.1e}"))
}

fn gradient_check() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..10u64 {
        let mut r = rng(2000 + i);
        let (n, d, c) = (6 + i as usize, 2 + i as usize % 4, 2 + i as usize % 3);
        let x = random_features(n, d, &mut r);
        let y: Vec<usize> = (0..n).map(|_| r.random_range(0..c)).collect();
        let problem = ProbeProblem::new(x.clone(), y.clone(), c, 5e-4).unwrap();
        let at: Vec<f64> = (0..problem.num_params()).map(|_| r.random_range(-1.0..1.0)).collect();
        let analytic = problem.gradient(&at);
        let numeric = central_difference(|w| problem.loss(w), &at, 1e-5);
        let diff = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
        let rel = diff / norm;
        ensure(rel <= 1e-5, || format!("instance {i}: relative error {rel:e}"))?;
        worst = worst.max(rel);

        // At the trained optimum the gradient is ~0, so compare absolutely.
        let labels: Vec<Option<usize>> = y.iter().map(|&c| Some(c)).collect();
        let seeds: Vec<NodeId> = (0..n).collect();
        let model = train_probe(x.view(), &labels, &seeds, &EvalConfig::default()).unwrap();
        let w: Vec<f64> = model.weights.iter().copied().collect();
        let numeric = central_difference(|p| problem.loss(p), &w, 1e-5);
        let analytic = problem.gradient(&w);
        let abs = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        ensure(abs <= 1e-5, || format!("instance {i}: absolute error {abs:e} at trained weights"))?;
    }
    Ok(format!("10 instances, worst relative error {worst:.1e}"))
}

fn sbm_end_to_end() -> Outcome {
    let theta = 0.0;
    let mut config = RunConfig {
        propagation: PropagationConfig::new(Kernel::RandomWalk, 2),
        theta,
        prune_floor: default_prune_floor(theta),
        diversity: DiversityKind::Ball,
        radius: 0.05,
        gamma: 1.0,
        mode: SelectionMode::Lazy,
        budget: 4,
        seed: 0,
        prune_degree: None,
        exact_dmax_limit: DEFAULT_EXACT_DMAX_LIMIT,
    };
    config.seed = 0;
    let spec = BenchSpec {
        source: BenchSource::Sbm {
            params: SbmParams {
                blocks: 2,
                per_block: 200,
                p_in: 0.05,
                p_out: 0.005,
                feat_dim: 16,
                feat_shift: 1.0,
            },
            val_frac: 0.1,
            test_frac: 0.4,
        },
        methods: vec![Method::DimBall, Method::Random],
        budgets: vec![4],
        runs: 10,
        base_seed: 0,
        config,
        eval: EvalConfig::default(),
    };
    let table = run_bench(&spec).map_err(|e| e.to_string())?;
    let ours = table.accuracies(Method::DimBall, 4);
    let random = table.accuracies(Method::Random, 4);
    let diffs: Vec<f64> = ours.iter().zip(&random).map(|(a, b)| a - b).collect();
    let margin = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let mean = |v: &[f64]| 100.0 * v.iter().sum::<f64>() / v.len() as f64;
    let detail = format!(
        "dim-ball {:.2}%, random {:.2}%, paired margin {:.2} points",
        mean(&ours),
        mean(&random),
        100.0 * margin
    );
    ensure(margin >= 0.03, || detail.clone())?;
    Ok(detail)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let bin = env!("CARGO_BIN_EXE_dimsel");
    let data = dir.path().join("data");
    let gen = Command::new(bin)
        .args(["generate-sbm", "--out", data.to_str().unwrap(), "--per-block", "100", "--seed", "5"])
        .status()
        .map_err(|e| e.to_string())?;
    ensure(gen.success(), || "generate-sbm failed".into())?;
    let mut outputs = Vec::new();
    for (i, extra) in [[].as_slice(), &["--diversity", "nn", "--kernel", "ppr"]].iter().cycle().take(4).enumerate() {
        let out = dir.path().join(format!("r{i}.json"));
        let mut args = vec![
            "select".to_string(),
            "--graph".into(),
            data.join("graph.txt").display().to_string(),
            "--features".into(),
            data.join("features.csv").display().to_string(),
            "--splits".into(),
            data.join("splits").display().to_string(),
            "--budget".into(),
            "8".into(),
            "--out".into(),
            out.display().to_string(),
        ];
        args.extend(extra.iter().map(|s| s.to_string()));
        let status = Command::new(bin).args(&args).status().map_err(|e| e.to_string())?;
        ensure(status.success(), || format!("select run {i} failed"))?;
        outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    ensure(outputs[0] == outputs[2] && outputs[1] == outputs[3], || "reports differ between reruns".into())?;
    Ok("2 flag sets x 2 runs, byte-identical".into())
}

#[test]
fn acceptance() {
    let criteria = [
        Criterion { name: "random-walk influence equals walk enumeration", limit: Duration::from_secs(10), check: walk_oracle },
        Criterion { name: "monotone submodular set functions", limit: Duration::from_secs(60), check: submodularity },
        Criterion { name: "greedy (1 - 1/e) guarantee", limit: Duration::from_secs(60), check: greedy_guarantee },
        Criterion { name: "lazy equals naive greedy", limit: Duration::from_secs(30), check: lazy_naive },
        Criterion { name: "zero-radius ball reduces to coverage", limit: Duration::from_secs(60), check: zero_radius },
        Criterion { name: "incremental equals from-scratch", limit: Duration::from_secs(60), check: incremental },
        Criterion { name: "probe gradient check", limit: Duration::from_secs(60), check: gradient_check },
        Criterion { name: "SBM end-to-end beats random", limit: Duration::from_secs(120), check: sbm_end_to_end },
        Criterion { name: "select reruns are byte-identical", limit: Duration::from_secs(60), check: determinism },
    ];
    let mut failed = Vec::new();
    for c in &criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.check)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > c.limit => Err(format!("{detail}; took {elapsed:.1?}, limit {:?}", c.limit)),
            other => other,
        };
        match &outcome {
            Ok(detail) => println!("PASS  {}: {detail} [{elapsed:.2?}]", c.name),
            Err(why) => {
                println!("FAIL  {}: {why} [{elapsed:.2?}]", c.name);
                failed.push(c.name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
