//! Acceptance suite. Prints one PASS/FAIL line per criterion with the
//! measured values and exits non-zero if an enforced criterion fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vmpg::consensus::{generate_consensus, solve_consensus, ConsensusConfig, ConsensusSpec, MetricMode};
use vmpg::objective::gradient_check;
use vmpg::problems::{generate_qp, LeastSquares, Logistic, Loss, RegressionProblem, RegressionSpec};
use vmpg::prox::{
    moreau_check, numeric_prox_oracle, prox_simplex_with_multiplier, BlockSeparable, Regularizer,
};
use vmpg::solver::{solve, solve_with_observer, LineSearch, Method, SolverConfig, StoppingRule};
use vmpg::stepsize::{bb1, bb2, diagonal_bb, BBConfig, StepPair, StepsizeState};
use vmpg::{DenseVector, DiagonalMetric, Partition, ProxRegularizer, SmoothObjective};

/// Criteria reported but not enforced; the measured values are printed.
const NOT_ENFORCED: &[&str] = &["A1", "A2"];

struct Report {
    failed: Vec<&'static str>,
}

impl Report {
    fn record(&mut self, id: &'static str, pass: bool, detail: String, clock: Instant) {
        let secs = clock.elapsed().as_secs_f64();
        println!("{id} {} {detail} ({secs:.2}s)", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(id);
        }
    }
}

fn dv(x: Vec<f64>) -> DenseVector {
    DenseVector::new(x).unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn qp_iterations(kappa: f64, seeds: u64, method: Method, cfg: &SolverConfig) -> f64 {
    let iters = (0..seeds)
        .map(|seed| {
            let f = generate_qp(200, kappa, seed).unwrap().objective();
            let res = solve(&f, &Regularizer::Nonnegative, &DenseVector::zeros(200), &SolverConfig { method, ..cfg.clone() })
                .unwrap();
            assert_eq!(res.status.as_str(), "converged");
            res.iterations() as f64
        })
        .collect();
    median(iters)
}

fn paper_config() -> SolverConfig {
    SolverConfig {
        mu: 1e-6,
        m_ls: 15,
        beta: 2.0,
        eps_tol: 1e-4,
        ..SolverConfig::default()
    }
}

fn a1(r: &mut Report) {
    let clock = Instant::now();
    let cfg = paper_config();
    let dbb = qp_iterations(1e4, 20, Method::VmpgDbb, &cfg);
    let bb = qp_iterations(1e4, 20, Method::PgBb, &cfg);
    let ratio = dbb / bb;
    let pass = ratio <= 0.9 && dbb < 200.0 && bb < 200.0;
    let residual = SolverConfig {
        stopping: StoppingRule::RelativeResidual,
        ..cfg
    };
    let dbb_r = qp_iterations(1e4, 20, Method::VmpgDbb, &residual);
    let bb_r = qp_iterations(1e4, 20, Method::PgBb, &residual);
    r.record(
        "A1",
        pass,
        format!(
            "median iterations dbb={dbb} bb={bb} ratio={ratio:.3} (need <= 0.9, both < 200); \
             relative-residual stopping: dbb={dbb_r} bb={bb_r} ratio={:.3}",
            dbb_r / bb_r
        ),
        clock,
    );
}

fn a2(r: &mut Report) {
    let clock = Instant::now();
    let cfg = paper_config();
    let dbb = qp_iterations(10.0, 20, Method::VmpgDbb, &cfg);
    let bb = qp_iterations(10.0, 20, Method::PgBb, &cfg);
    let pass = (dbb - bb).abs() <= 5.0 && dbb <= 30.0 && bb <= 30.0;
    let residual = SolverConfig {
        stopping: StoppingRule::RelativeResidual,
        ..cfg
    };
    let dbb_r = qp_iterations(10.0, 20, Method::VmpgDbb, &residual);
    let bb_r = qp_iterations(10.0, 20, Method::PgBb, &residual);
    let pass_r = (dbb_r - bb_r).abs() <= 5.0 && dbb_r <= 30.0 && bb_r <= 30.0;
    r.record(
        "A2",
        pass,
        format!(
            "median iterations dbb={dbb} bb={bb} (need |diff| <= 5, both <= 30); \
             relative-residual stopping: dbb={dbb_r} bb={bb_r} ({})",
            if pass_r { "within bounds" } else { "out of bounds" }
        ),
        clock,
    );
}

fn a3(r: &mut Report) {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = f64::NEG_INFINITY;
    for seed in 0..500 {
        let n = rng.random_range(2..=30);
        let kappa = 10f64.powf(rng.random_range(0.0..5.0));
        let qp = generate_qp(n, kappa, seed).unwrap();
        let f = qp.objective();
        let (inv_l, inv_m) = (1.0 / qp.l(), 1.0 / qp.m());
        for _ in 0..4 {
            let x1 = DenseVector::from_fn(n, |_| rng.random_range(-5.0..5.0)).unwrap();
            let x2 = DenseVector::from_fn(n, |_| rng.random_range(-5.0..5.0)).unwrap();
            let sp = StepPair::from_iterates(&x2, &x1, &f.gradient(&x2), &f.gradient(&x1)).unwrap();
            let (a1, a2) = (bb1(&sp).unwrap(), bb2(&sp).unwrap());
            worst = worst.max(inv_l - a2).max(a2 - a1).max(a1 - inv_m);
        }
    }
    r.record(
        "A3",
        worst <= 1e-9,
        format!("500 quadratics x 4 pairs, worst bound violation {worst:.3e} (need <= 1e-9)"),
        clock,
    );
}

fn a4(r: &mut Report) {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(1..=5);
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<f64> = s.iter().map(|&si| si * rng.random_range(0.1..20.0) + rng.random_range(-0.5..0.5)).collect();
        let u_prev: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..10.0)).collect();
        let mu = 10f64.powf(rng.random_range(-8.0..1.0));
        let cfg = BBConfig { mu, ..BBConfig::default() };
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let ss: f64 = s.iter().map(|a| a * a).sum();
        let yy: f64 = y.iter().map(|a| a * a).sum();
        let (lo, hi) = if sy > 0.0 {
            (sy / ss, yy / sy)
        } else {
            (1.0 / cfg.alpha_max, 1.0 / cfg.alpha_min)
        };
        let st = StepsizeState {
            prev_alpha: 1.0,
            prev_metric: DiagonalMetric::from_vec(u_prev.clone()).unwrap(),
        };
        let got = diagonal_bb(&StepPair::new(dv(s.clone()), dv(y.clone())).unwrap(), &cfg, &st).unwrap();
        for i in 0..n {
            // minimize (s c - y)^2 + mu (c - u_prev)^2 over c, then clip
            let a = s[i] * s[i] + mu;
            let b = -2.0 * (s[i] * y[i] + mu * u_prev[i]);
            let c = (-b / (2.0 * a)).max(lo).min(hi);
            worst = worst.max((got.as_slice()[i] - c).abs());
        }
    }
    r.record(
        "A4",
        worst <= 1e-10,
        format!("50 instances, max abs error {worst:.3e} (need <= 1e-10)"),
        clock,
    );
}

struct ProxCase {
    v: DenseVector,
    metric: DiagonalMetric,
    groups: Partition,
}

fn prox_case(rng: &mut ChaCha8Rng) -> ProxCase {
    let n_groups = rng.random_range(2..5);
    let size = rng.random_range(1..4);
    let n = n_groups * size;
    let u: Vec<f64> = (0..n_groups)
        .flat_map(|_| std::iter::repeat_n(rng.random_range(0.2..5.0), size))
        .collect();
    ProxCase {
        v: DenseVector::from_fn(n, |_| rng.random_range(-4.0..4.0)).unwrap(),
        metric: DiagonalMetric::from_vec(u).unwrap(),
        groups: Partition::uniform(n_groups, size).unwrap(),
    }
}

fn prox_objective(g: &Regularizer, c: &ProxCase, p: &DenseVector) -> f64 {
    let penalty = match g {
        Regularizer::Nonnegative | Regularizer::Simplex { .. } | Regularizer::Consensus { .. } => 0.0,
        other => other.value(p),
    };
    penalty + 0.5 * c.metric.unorm_sq(&c.v.sub(p)).unwrap()
}

fn a5(r: &mut Report) {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut arg_err: f64 = 0.0;
    let mut obj_err: f64 = 0.0;
    let (mut mass_err, mut kkt_err, mut min_entry): (f64, f64, f64) = (0.0, 0.0, f64::INFINITY);
    for _ in 0..100 {
        let c = prox_case(&mut rng);
        let lam = rng.random_range(0.05..2.0);
        let ops = [
            Regularizer::lasso(lam).unwrap(),
            Regularizer::group_lasso(lam, c.groups.clone()).unwrap(),
            Regularizer::elastic_net(lam, rng.random_range(0.05..2.0)).unwrap(),
            Regularizer::Nonnegative,
            Regularizer::simplex(),
            Regularizer::consensus(c.groups.clone()),
        ];
        for g in &ops {
            let closed = g.prox(&c.v, &c.metric).unwrap();
            let oracle = numeric_prox_oracle(g, &c.v, &c.metric, 1e-10).unwrap();
            arg_err = arg_err.max(closed.sub(&oracle).max_abs());
            obj_err = obj_err.max((prox_objective(g, &c, &closed) - prox_objective(g, &c, &oracle)).abs());
        }
        let (p, _) = prox_simplex_with_multiplier(&c.v, &c.metric, 1e-12).unwrap();
        min_entry = min_entry.min(p.iter().cloned().fold(f64::INFINITY, f64::min));
        mass_err = mass_err.max((p.iter().sum::<f64>() - 1.0).abs());
        let shared: Vec<f64> = p
            .iter()
            .zip(c.v.iter())
            .zip(c.metric.as_slice())
            .filter(|((pi, _), _)| **pi > 0.0)
            .map(|((pi, vi), ui)| ui * (vi - pi))
            .collect();
        let hi = shared.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = shared.iter().cloned().fold(f64::INFINITY, f64::min);
        kkt_err = kkt_err.max(hi - lo);
    }
    let pass = arg_err <= 1e-6 && obj_err <= 1e-9 && min_entry >= 0.0 && mass_err <= 1e-10 && kkt_err <= 1e-8;
    r.record(
        "A5",
        pass,
        format!(
            "6 operators x 100 instances, argument error {arg_err:.3e}, objective error {obj_err:.3e}; \
             simplex min entry {min_entry:.3e}, |sum - 1| {mass_err:.3e}, multiplier spread {kkt_err:.3e}"
        ),
        clock,
    );
}

fn a6(r: &mut Report) {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(1..20);
        let v = DenseVector::from_fn(n, |_| rng.random_range(-10.0..10.0)).unwrap();
        let metric = DiagonalMetric::from_vec((0..n).map(|_| rng.random_range(0.05..20.0)).collect()).unwrap();
        for g in [Regularizer::lasso(rng.random_range(0.01..3.0)).unwrap(), Regularizer::Nonnegative] {
            worst = worst.max(moreau_check(&g, &metric, &v).unwrap());
        }
    }
    r.record(
        "A6",
        worst <= 1e-8,
        format!("100 lasso + 100 nonnegative instances, max residual {worst:.3e} (need <= 1e-8)"),
        clock,
    );
}

fn a7(r: &mut Report) {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mismatches = 0;
    for _ in 0..100 {
        let c = prox_case(&mut rng);
        let metric =
            DiagonalMetric::from_vec((0..c.v.len()).map(|_| rng.random_range(0.1..10.0)).collect()).unwrap();
        let lam = rng.random_range(0.05..2.0);
        let kinds: Vec<u32> = (0..c.groups.num_blocks()).map(|_| rng.random_range(0..3)).collect();
        let make = |k: u32| match k {
            0 => Regularizer::Nonnegative,
            1 => Regularizer::lasso(lam).unwrap(),
            _ => Regularizer::elastic_net(lam, 0.5).unwrap(),
        };
        let parts: Vec<Box<dyn ProxRegularizer>> =
            kinds.iter().map(|&k| Box::new(make(k)) as Box<dyn ProxRegularizer>).collect();
        let joint = BlockSeparable::new(parts, c.groups.clone()).unwrap().prox(&c.v, &metric).unwrap();
        for (j, &k) in kinds.iter().enumerate() {
            let range = c.groups.range(j);
            let uj = DiagonalMetric::new(metric.diag().slice(range.start, range.end)).unwrap();
            let alone = make(k).prox(&c.v.slice(range.start, range.end), &uj).unwrap();
            if joint.as_slice()[range] != *alone.as_slice() {
                mismatches += 1;
            }
        }
    }
    r.record(
        "A7",
        mismatches == 0,
        format!("100 block-separable instances, {mismatches} blocks differ from the joint prox (need exact match)"),
        clock,
    );
}

fn a8(r: &mut Report) {
    let clock = Instant::now();
    let (mut descent, mut rate, mut contraction): (f64, f64, f64) =
        (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut contraction_checks = 0usize;
    let mut steps = 0usize;
    for seed in 0..20u64 {
        let n = 30;
        let qp = generate_qp(n, 10f64.powf(1.0 + (seed % 3) as f64), seed).unwrap();
        let f = qp.objective();
        let x_star = qp.unconstrained_minimizer();
        let f_star = f.value(&x_star);
        let (m, l) = (qp.m(), qp.l());
        let x0 = DenseVector::zeros(n);
        let f0 = f.value(&x0);
        for method in [Method::VmpgDbb, Method::PgBb, Method::PgFixed(0.5 / l)] {
            let cfg = SolverConfig {
                method,
                line_search: LineSearch::Monotone,
                m_ls: 1,
                stopping: StoppingRule::RelativeResidual,
                eps_tol: 1e-13,
                max_iter: 500,
                ..SolverConfig::default()
            };
            let mut best = f64::INFINITY;
            let mut k = 0usize;
            solve_with_observer(&f, &Regularizer::Zero, &x0, &cfg, |ev| {
                k += 1;
                steps += 1;
                let step = ev.x_next.sub(ev.x);
                let u = ev.metric;
                descent = descent.max(ev.objective_next - ev.objective + 0.5 * u.unorm_sq(&step).unwrap());
                // ||G_U(x)||^2 in the U^{-1} norm equals ||x - x+||^2 in the U norm
                best = best.min(u.unorm_sq(&step).unwrap());
                if k <= 500 {
                    rate = rate.max(best - 2.0 * (f0 - f_star) / k as f64);
                }
                if u.min() >= l {
                    contraction_checks += 1;
                    let before = u.unorm_sq(&ev.x.sub(&x_star)).unwrap();
                    let after = u.unorm_sq(&ev.x_next.sub(&x_star)).unwrap();
                    contraction = contraction.max(after - (1.0 - m / u.max()) * before);
                }
            })
            .unwrap();
        }
    }
    let pass = descent <= 1e-10 && rate <= 1e-8 && contraction <= 1e-10 && contraction_checks > 0;
    r.record(
        "A8",
        pass,
        format!(
            "{steps} monotone steps on 20 quadratics: (i) max descent slack {descent:.3e} (need <= 1e-10); \
             (ii) max rate-bound slack {rate:.3e} (need <= 1e-8); \
             (iii) {contraction_checks} steps with U >= L I, max contraction slack {contraction:.3e} (need <= 1e-10)"
        ),
        clock,
    );
}

fn a9(r: &mut Report) {
    let clock = Instant::now();
    let mut worst_gap: f64 = 0.0;
    let mut worst_traj: f64 = 0.0;
    let mut runs = 0;
    for seed in 0..10u64 {
        for nodes in [1usize, 4, 10] {
            let inst = generate_consensus(&ConsensusSpec {
                n_nodes: nodes,
                samples: 600,
                features: 10,
                lambda: 1e-2,
                seed,
            })
            .unwrap();
            let x0 = DenseVector::zeros(10);
            let central = solve(
                &inst.pooled,
                &Regularizer::Zero,
                &x0,
                &SolverConfig {
                    stopping: StoppingRule::RelativeResidual,
                    eps_tol: 1e-12,
                    max_iter: 20_000,
                    ..SolverConfig::default()
                },
            )
            .unwrap();
            for mode in MetricMode::ALL {
                let cfg = ConsensusConfig {
                    mode,
                    ..ConsensusConfig::default()
                };
                let res = solve_consensus(&inst.problem, &x0, &cfg).unwrap();
                runs += 1;
                worst_gap = worst_gap.max((res.objective - central.objective).abs() / central.objective.abs());
                if nodes == 1 {
                    let method = match mode {
                        MetricMode::LocalBB | MetricMode::GlobalBB => Method::PgBb,
                        MetricMode::LocalDBB | MetricMode::GlobalDBB => Method::VmpgDbb,
                    };
                    let solo_cfg = SolverConfig { method, ..cfg.solver.clone() };
                    let solo = solve(&inst.problem.objectives()[0], &Regularizer::Zero, &x0, &solo_cfg).unwrap();
                    if solo.iterations() != res.rounds() {
                        worst_traj = f64::INFINITY;
                    }
                    for (a, b) in res.trace.iter().zip(&solo.trace) {
                        worst_traj = worst_traj.max((a.objective - b.objective).abs() / b.objective.abs().max(1.0));
                    }
                    worst_traj = worst_traj.max(res.solution.sub(&solo.solution).max_abs());
                }
            }
        }
    }
    r.record(
        "A9",
        worst_gap <= 1e-4 && worst_traj <= 1e-10,
        format!(
            "{runs} consensus runs (10 instances, 1/4/10 nodes, 4 metric modes): max relative objective gap \
             {worst_gap:.3e} (need <= 1e-4); single-node trajectory deviation {worst_traj:.3e} (need <= 1e-10)"
        ),
        clock,
    );
}

const TARGET: f64 = 1e-6;
const SWEEP_CAP: usize = 20_000;

/// First iteration with `F - F* <= TARGET (F0 - F*)`, or `SWEEP_CAP + 1`.
fn target_iterations(trace: &[vmpg::solver::TraceRecord], f0: f64, f_star: f64) -> f64 {
    trace
        .iter()
        .find(|r| r.objective - f_star <= TARGET * (f0 - f_star))
        .map_or(SWEEP_CAP + 1, |r| r.iter) as f64
}

fn sweep_config(mu: f64) -> SolverConfig {
    SolverConfig {
        mu,
        stopping: StoppingRule::RelativeResidual,
        eps_tol: 1e-10,
        max_iter: SWEEP_CAP,
        ..paper_config()
    }
}

fn a10(r: &mut Report) {
    let clock = Instant::now();
    let qp_mus = [1e-8, 1e-2, 1e-1, 1.0];
    let qp_runs: Vec<Vec<f64>> = (0..10)
        .map(|seed| {
            let qp = generate_qp(200, 1e4, seed).unwrap();
            let f = qp.objective();
            let x0 = DenseVector::zeros(200);
            let (f0, f_star) = (f.value(&x0), f.value(&qp.unconstrained_minimizer()));
            qp_mus
                .iter()
                .map(|&mu| {
                    let res = solve(&f, &Regularizer::Zero, &x0, &sweep_config(mu)).unwrap();
                    target_iterations(&res.trace, f0, f_star)
                })
                .collect()
        })
        .collect();
    let lr_mus = [1e-8, 1e-2, 1.0, 100.0];
    let lr_runs: Vec<Vec<f64>> = (0..10)
        .map(|seed| {
            let p = RegressionProblem::generate(&RegressionSpec::new(40, 200, Loss::Logistic, seed)).unwrap();
            let (f, g) = (p.objective(), p.regularizer());
            let x0 = DenseVector::zeros(200);
            let f0 = f.value(&x0) + g.value(&x0);
            let runs: Vec<_> = lr_mus.iter().map(|&mu| solve(&*f, &g, &x0, &sweep_config(mu)).unwrap()).collect();
            let reference = solve(
                &*f,
                &g,
                &x0,
                &SolverConfig {
                    eps_tol: 1e-12,
                    max_iter: 100_000,
                    ..sweep_config(1e-6)
                },
            )
            .unwrap();
            let f_star = runs.iter().map(|r| r.objective).fold(reference.objective, f64::min);
            runs.iter().map(|res| target_iterations(&res.trace, f0, f_star)).collect()
        })
        .collect();
    let medians = |runs: &[Vec<f64>], k: usize| median(runs.iter().map(|v| v[k]).collect());
    let qp: Vec<f64> = (0..qp_mus.len()).map(|k| medians(&qp_runs, k)).collect();
    let lr: Vec<f64> = (0..lr_mus.len()).map(|k| medians(&lr_runs, k)).collect();
    let qp_pass = qp[3] <= qp[0];
    let lr_pass = lr[0] <= lr[2] && lr[0].min(lr[1]) < lr[2].min(lr[3]);
    r.record(
        "A10",
        qp_pass && lr_pass,
        format!(
            "median iterations to F - F* <= {TARGET:e} (F0 - F*); unconstrained QP kappa=1e4 at mu {qp_mus:?}: {qp:?} \
             (need mu=1 <= mu=1e-8); l1 LR N=40 at mu {lr_mus:?}: {lr:?} \
             (need mu=1e-8 <= mu=1 and best of mu <= 0.01 below best of mu > 0.01)"
        ),
        clock,
    );
}

fn a11(r: &mut Report) {
    let clock = Instant::now();
    let mut objectives: Vec<(String, Box<dyn SmoothObjective>)> = vec![(
        "quadratic".into(),
        Box::new(generate_qp(15, 1e3, 11).unwrap().objective()),
    )];
    for (loss, ridge) in [(Loss::LeastSquares, 0.0), (Loss::LeastSquares, 0.1), (Loss::Logistic, 0.0), (Loss::Logistic, 0.1)] {
        let p = RegressionProblem::generate(&RegressionSpec::new(30, 12, loss, 11)).unwrap();
        let scale = 1.0 / 30.0;
        let f: Box<dyn SmoothObjective> = match loss {
            Loss::LeastSquares => Box::new(LeastSquares::new(p.a, p.b, scale, ridge)),
            Loss::Logistic => Box::new(Logistic::new(p.a, p.b, scale, ridge)),
        };
        objectives.push((format!("{} ridge={ridge}", loss.as_str()), f));
    }
    let inst = generate_consensus(&ConsensusSpec {
        n_nodes: 3,
        samples: 90,
        features: 8,
        lambda: 1e-2,
        seed: 11,
    })
    .unwrap();
    objectives.push(("pooled least squares".into(), Box::new(inst.pooled)));
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for (_, f) in &objectives {
        for _ in 0..20 {
            let x = DenseVector::from_fn(f.dim(), |_| rng.random_range(-3.0..3.0)).unwrap();
            worst = worst.max(gradient_check(f.as_ref(), &x, 1e-5));
        }
    }
    for f in inst.problem.objectives() {
        for _ in 0..20 {
            let x = DenseVector::from_fn(f.dim(), |_| rng.random_range(-3.0..3.0)).unwrap();
            worst = worst.max(gradient_check(f.as_ref(), &x, 1e-5));
        }
    }
    r.record(
        "A11",
        worst <= 1e-5,
        format!(
            "{} objectives x 20 points, max relative error {worst:.3e} (need <= 1e-5)",
            objectives.len() + inst.problem.n_nodes()
        ),
        clock,
    );
}

const SUMMARY_HEADER: &str = "method,seed,iterations,wall_ms,final_objective,status,\
iter_median,iter_mean,iter_stddev,wall_ms_median,wall_ms_mean,wall_ms_stddev";

fn summary_problems(path: &Path, runs: usize, methods: usize) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let mut issues = Vec::new();
    if lines.next() != Some(SUMMARY_HEADER) {
        issues.push("header".to_string());
    }
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    if rows.len() != runs + methods {
        issues.push(format!("{} rows", rows.len()));
    }
    for row in &rows {
        let numeric = |k: usize| row[k].parse::<f64>().is_ok();
        let ok = row.len() == 12
            && if row[1] == "aggregate" {
                row[5].starts_with("converged=") && (6..12).all(numeric)
            } else {
                row[1].parse::<u64>().is_ok()
                    && row[2].parse::<usize>().is_ok()
                    && numeric(3)
                    && numeric(4)
                    && ["converged", "max_iter", "line_search_failure", "error"].contains(&row[5])
            };
        if !ok {
            issues.push(format!("bad row {row:?}"));
        }
    }
    issues
}

fn a12(r: &mut Report) {
    let clock = Instant::now();
    let grid: [&[&str]; 6] = [
        &["--problem", "qp", "--kappa", "10", "--reg", "nonneg"],
        &["--problem", "qp", "--kappa", "1e4", "--reg", "nonneg"],
        &["--problem", "ls", "--samples", "40", "--reg", "nonneg"],
        &["--problem", "ls", "--samples", "40", "--reg", "lasso"],
        &["--problem", "lr", "--samples", "40", "--reg", "nonneg"],
        &["--problem", "lr", "--samples", "40", "--reg", "lasso"],
    ];
    let tmp = tempfile::TempDir::new().unwrap();
    let mut issues = Vec::new();
    let mut codes = Vec::new();
    for (i, cell) in grid.iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let dir = tmp.path().join(format!("cell{i}_{rep}"));
            let status = Command::new(env!("CARGO_BIN_EXE_vmpg"))
                .args(["bench", "--n", "200", "--seed", "0..5", "--method", "pg_bb,vmpg_dbb,fista", "--no-timing"])
                .args(*cell)
                .arg("--out")
                .arg(&dir)
                .env_remove("VMPG_OUT_DIR")
                .output()
                .unwrap()
                .status;
            codes.push(status.code().unwrap_or(-1));
            if !matches!(status.code(), Some(0 | 2)) {
                issues.push(format!("cell {i}: exit {status}"));
                continue;
            }
            issues.extend(summary_problems(&dir.join("summary.csv"), 15, 3).into_iter().map(|s| format!("cell {i}: {s}")));
            let mut files: Vec<_> = fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
            files.sort();
            if files.len() != 16 {
                issues.push(format!("cell {i}: {} files", files.len()));
            }
            outputs.push(files.iter().map(|p| (p.file_name().unwrap().to_owned(), fs::read(p).unwrap())).collect::<Vec<_>>());
        }
        if outputs.len() == 2 && outputs[0] != outputs[1] {
            issues.push(format!("cell {i}: reruns differ"));
        }
    }
    let converged_all = codes.iter().filter(|&&c| c == 0).count();
    r.record(
        "A12",
        issues.is_empty(),
        format!(
            "6 grid cells x 3 methods x 5 seeds at n=200, run twice: {} schema/determinism issues {issues:?}; \
             {converged_all}/{} invocations had every run converge",
            issues.len(),
            codes.len()
        ),
        clock,
    );
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut report = Report { failed: Vec::new() };
    a1(&mut report);
    a2(&mut report);
    a3(&mut report);
    a4(&mut report);
    a5(&mut report);
    a6(&mut report);
    a7(&mut report);
    a8(&mut report);
    a9(&mut report);
    a10(&mut report);
    a11(&mut report);
    a12(&mut report);
    let enforced: Vec<_> = report.failed.iter().filter(|id| !NOT_ENFORCED.contains(id)).collect();
    println!(
        "acceptance: {} of 12 criteria pass; failing: {:?}; enforced failures: {:?}",
        12 - report.failed.len(),
        report.failed,
        enforced
    );
    if !enforced.is_empty() {
        std::process::exit(1);
    }
}
