//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero when any criterion fails.
//!
//! Criteria 8 to 11 share twelve training runs (heat and laplace2d, three
//! seeds, adaptive and fixed cutoff) that take on the order of hours on a
//! single core. `ANAGRAM_THREADS` sets how many run concurrently.

use std::f64::consts::PI;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use anagram_core::autodiff::{
    init_params, residual_bundle, residual_vector, Activation, JetModel, Mlp, MlpSpec,
    PolynomialModel,
};
use anagram_core::diagnostics::{flattening_span, reconstruction_errors};
use anagram_core::optimizer::{
    anagram_step, cutoff_policy_update, train, CutoffState, LineSearchConfig, Phase, RunResult,
    Strategy, TerminationReason, TrainConfig,
};
use anagram_core::problems::{build_problem, operators, GridSpec, PdeProblem, PROBLEM_NAMES};
use anagram_core::spectral::{apply_pseudoinverse, thin_svd, SpectralFilter};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

fn benchmark(name: &str, width: usize, seed: u64) -> (PdeProblem, Mlp, Vec<f64>) {
    let problem = build_problem(name, &GridSpec::default_for(name).unwrap()).unwrap();
    let spec = MlpSpec::new(problem.input_dim, vec![width], Activation::Tanh, seed);
    let mut params = init_params(&spec).unwrap().0;
    // move away from the initializer's structure
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for p in params.iter_mut() {
        *p += 0.1 * rng.random_range(-1.0..1.0);
    }
    (problem, Mlp::new(spec).unwrap(), params)
}

/// Per-row residuals summed block by block: `ℓ = ½(mean_D r² + mean_B r²)`.
fn loss_oracle(problem: &PdeProblem, model: &dyn JetModel, params: &[f64]) -> f64 {
    let block = |rows: &[anagram_core::problems::CollocationRow]| -> f64 {
        if rows.is_empty() {
            return 0.0;
        }
        rows.iter().map(|r| r.residual(model, params).powi(2)).sum::<f64>() / rows.len() as f64
    };
    0.5 * (block(&problem.interior) + block(&problem.boundary))
}

fn criterion_1() -> Verdict {
    let mut worst = 0.0f64;
    for (k, name) in PROBLEM_NAMES.iter().enumerate() {
        let (problem, model, params) = benchmark(name, 16, 100 + k as u64);
        let b = residual_bundle(&problem, &model, &params).unwrap();
        let s = b.sample_count() as f64;
        let g = &b.residual * s.sqrt();
        let factors = thin_svd(&(&b.feature * s.sqrt())).unwrap();
        let rce0 = reconstruction_errors(&factors, &g).unwrap().values[0];
        let grad_norm = g.norm_squared() / s;
        let loss = loss_oracle(&problem, &model, &params);
        worst = worst
            .max((rce0 * rce0 - grad_norm).abs() / grad_norm)
            .max((rce0 * rce0 - 2.0 * loss).abs() / (2.0 * loss));
    }
    verdict(worst <= 1e-12, format!("worst relative error {worst:.2e} (tol 1e-12)"))
}

/// Singular triplets from nalgebra, sorted by decreasing `σ`.
fn oracle_sample_side(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let svd = a.clone().svd(true, false);
    let u = svd.u.unwrap();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sigma = order.iter().map(|&i| svd.singular_values[i]).collect();
    let cols: Vec<_> = order.iter().map(|&i| u.column(i).into_owned()).collect();
    (sigma, DMatrix::from_columns(&cols))
}

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let s = rng.random_range(1..=12);
        let p = rng.random_range(1..=12);
        let a = random_matrix(&mut rng, s, p);
        let g = random_vector(&mut rng, s);
        let curve = reconstruction_errors(&thin_svd(&a).unwrap(), &g).unwrap();
        let (_, v) = oracle_sample_side(&a);
        let c = v.tr_mul(&g);
        for m in 0..=c.len() {
            for n in m..=c.len() {
                let proj: f64 = (m..n).map(|i| c[i] * c[i]).sum::<f64>() / s as f64;
                let lhs = curve.values[m].powi(2) - curve.values[n].powi(2);
                worst = worst.max((lhs - proj).abs());
            }
        }
    }
    verdict(worst <= 1e-10, format!("worst deviation {worst:.2e} over 50 instances (tol 1e-10)"))
}

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..40 {
        let s = rng.random_range(1..=10);
        let p = rng.random_range(1..=10);
        let phi = random_matrix(&mut rng, s, p);
        let g = random_vector(&mut rng, s);
        let factors = thin_svd(&phi).unwrap();
        for alpha in [1e-2, 1e-6] {
            let d = apply_pseudoinverse(&factors, SpectralFilter::Ridge { alpha, sample_count: s }, &g).unwrap();
            let gram = phi.tr_mul(&phi) / s as f64 + DMatrix::identity(p, p) * alpha;
            let grad = phi.tr_mul(&g) / s as f64;
            let oracle = gram.cholesky().expect("SPD").solve(&grad);
            worst = worst.max((d - &oracle).norm() / oracle.norm());
        }
    }
    verdict(worst <= 1e-8, format!("worst relative error {worst:.2e} (tol 1e-8)"))
}

fn criterion_5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..40 {
        let p = rng.random_range(1..=10);
        let s = p + rng.random_range(0..=5);
        let phi = random_matrix(&mut rng, s, p) + DMatrix::identity(s, p) * 3.0;
        let g = random_vector(&mut rng, s);
        let factors = thin_svd(&phi).unwrap();
        let d = apply_pseudoinverse(&factors, SpectralFilter::HardCutoffByRank(p), &g).unwrap();
        let gram = phi.tr_mul(&phi) / s as f64;
        let grad = phi.tr_mul(&g) / s as f64;
        let oracle = gram.pseudo_inverse(1e-13).unwrap() * grad;
        worst = worst.max((d - &oracle).norm() / oracle.norm());
    }
    verdict(worst <= 1e-7, format!("worst relative error {worst:.2e} (tol 1e-7)"))
}

fn criterion_6() -> Verdict {
    let h = 1e-6;
    let mut worst = 0.0f64;
    let mut columns = 0;
    for (k, name) in PROBLEM_NAMES.iter().enumerate() {
        let (problem, model, params) = benchmark(name, 16, 600 + k as u64);
        let b = residual_bundle(&problem, &model, &params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        for _ in 0..12 {
            let j = rng.random_range(0..params.len());
            let (mut plus, mut minus) = (params.clone(), params.clone());
            plus[j] += h;
            minus[j] -= h;
            let fd = (residual_vector(&problem, &model, &plus).unwrap()
                - residual_vector(&problem, &model, &minus).unwrap())
                / (2.0 * h);
            worst = worst.max((b.feature.column(j) - &fd).norm() / fd.norm());
            columns += 1;
        }
    }
    verdict(
        worst <= 1e-5,
        format!("worst column relative error {worst:.2e} over {columns} columns (tol 1e-5)"),
    )
}

fn linear_case(problem: &PdeProblem, model: &PolynomialModel) -> (f64, f64) {
    let params = vec![0.0; model.param_count()];
    let b = residual_bundle(problem, model, &params).unwrap();
    let factors = thin_svd(&b.feature).unwrap();
    let out = anagram_step(problem, model, &params, &b, &factors, factors.rank_dim(), &LineSearchConfig::default()).unwrap();
    let after = residual_vector(problem, model, &out.params).unwrap();
    let a = &b.feature;
    let coef = a.tr_mul(a).lu().solve(&a.tr_mul(&(-&b.residual))).unwrap();
    let oracle = &b.residual + a * coef;
    ((after - oracle).amax(), (out.eta - 1.0).abs())
}

fn criterion_7() -> Verdict {
    let op: Arc<dyn operators::PointOperator> = Arc::new(operators::Identity);
    let points = (0..21)
        .map(|i| {
            let x = -1.0 + i as f64 / 10.0;
            (vec![x], (3.0 * x).cos() + x)
        })
        .collect();
    let fit = PdeProblem::custom("fit", vec![(-1.0, 1.0)], op, points, vec![]);
    let (r1, e1) = linear_case(&fit, &PolynomialModel::new(1, 6));
    let laplace = build_problem("laplace2d", &GridSpec::uniform(2, 12, 12)).unwrap();
    let (r2, e2) = linear_case(&laplace, &PolynomialModel::new(2, 5));
    let (res, eta) = (r1.max(r2), e1.max(e2));
    verdict(
        res <= 1e-8 && eta <= 1e-4,
        format!("residual deviation {res:.2e} (tol 1e-8), |η − 1| = {eta:.2e} (tol 1e-4)"),
    )
}

/// The update rule restated from its definition.
fn policy_oracle(liftoff: bool, r_max_prev: usize, r1: usize, r2: usize, prev_min: Option<usize>) -> (usize, usize, bool) {
    let r_min = r1.min(r2);
    let mut r_max = r1.max(r_max_prev);
    let mut lifted = liftoff;
    if !liftoff {
        if r_min >= r_max {
            lifted = true;
        } else if prev_min == Some(r_min) {
            r_max += 1;
        }
    }
    (r_min, r_max, lifted)
}

fn criterion_12() -> Verdict {
    let mut cases = 0;
    let mut failures = Vec::new();
    let (mut bumps, mut latches, mut monotone) = (0, 0, 0);
    for liftoff in [false, true] {
        for r_max_prev in 0..=5 {
            for r1 in 0..=5 {
                for r2 in 0..=5 {
                    for stagnant in [false, true] {
                        let r_min_now = r1.min(r2);
                        let prev = if stagnant { Some(r_min_now) } else { Some(r_min_now + 1) };
                        for prev in [prev, None] {
                            cases += 1;
                            let mut state = CutoffState::initial(r_max_prev, 1e-10);
                            state.liftoff = liftoff;
                            let next = cutoff_policy_update(&state, r1, r2, prev);
                            let (m, x, l) = policy_oracle(liftoff, r_max_prev, r1, r2, prev);
                            if (next.r_min, next.r_max, next.liftoff) != (m, x, l) {
                                failures.push(format!("{liftoff} {r_max_prev} {r1} {r2} {prev:?}"));
                            }
                            if liftoff && !next.liftoff {
                                failures.push("liftoff reset".into());
                            }
                            if liftoff {
                                monotone += 1;
                                if next.r_max < r_max_prev {
                                    failures.push("r_max decreased after liftoff".into());
                                }
                            }
                            if !liftoff && stagnant && prev.is_some() && r_min_now < r1.max(r_max_prev) {
                                bumps += 1;
                                if next.r_max != r1.max(r_max_prev) + 1 {
                                    failures.push("missing stagnation increment".into());
                                }
                            }
                            if !liftoff && r_min_now >= r1.max(r_max_prev) {
                                latches += 1;
                                if !next.liftoff {
                                    failures.push("liftoff not triggered".into());
                                }
                            }
                            let phase_ok = match (next.liftoff, r2 <= r1) {
                                (false, _) => next.phase == Phase::Ignition,
                                (true, true) => next.phase == Phase::StageSeparation,
                                (true, false) => next.phase == Phase::Ascent,
                            };
                            if !phase_ok {
                                failures.push(format!("phase {:?}", next.phase));
                            }
                        }
                    }
                }
            }
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "{cases} cases ({bumps} stagnation increments, {latches} liftoffs, {monotone} post-liftoff), {} mismatches{}",
            failures.len(),
            failures.first().map(|f| format!(", first: {f}")).unwrap_or_default()
        ),
    )
}

// ---------------------------------------------------------------------------
// Desk-scale runs shared by criteria 3 and 8 to 11.

const SEEDS: [u64; 3] = [0, 1, 2];
const EPSILON: f64 = 1e-10;
const T_MAX: usize = 2000;

struct Job {
    problem: &'static str,
    adaptive: bool,
    seed: u64,
}

struct Outcome {
    problem: &'static str,
    adaptive: bool,
    seed: u64,
    run: RunResult,
    /// Independent final metrics.
    mse: f64,
    rel_l2: f64,
    seconds: f64,
}

fn heat_exact(x: f64, t: f64) -> f64 {
    (PI * x).sin() * (-PI * PI * t / 4.0).exp()
}

fn laplace_exact(x: f64, y: f64) -> f64 {
    (PI * x).sin() * (PI * y).sinh() / PI.sinh()
}

/// Relative L2 error on a 41×41 grid, distinct from the training grid.
fn rel_l2_oracle(problem: &str, model: &Mlp, params: &[f64]) -> f64 {
    let exact = if problem == "heat" { heat_exact } else { laplace_exact };
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..41 {
        for j in 0..41 {
            let (a, b) = (i as f64 / 40.0, j as f64 / 40.0);
            let u = exact(a, b);
            let e = model.jet(params, &[a, b]).value - u;
            num += e * e;
            den += u * u;
        }
    }
    (num / den).sqrt()
}

fn execute(job: &Job) -> Outcome {
    let problem = build_problem(job.problem, &GridSpec::uniform(2, 32, 32)).unwrap();
    let spec = MlpSpec::new(2, vec![32], Activation::Tanh, job.seed);
    let params = init_params(&spec).unwrap().0;
    let model = Mlp::new(spec).unwrap();
    let strategy = if job.adaptive {
        Strategy::Adaptive
    } else {
        Strategy::FixedCutoff { alpha: 1e-3 }
    };
    let config = TrainConfig {
        epsilon: EPSILON,
        max_iterations: T_MAX,
        strategy,
        ..TrainConfig::default()
    };
    let start = Instant::now();
    let run = train(&problem, &model, params, &config).unwrap();
    let seconds = start.elapsed().as_secs_f64();
    let mse = 2.0 * loss_oracle(&problem, &model, &run.params);
    let rel_l2 = rel_l2_oracle(job.problem, &model, &run.params);
    println!(
        "    run {:<9} {:<8} seed {}: {} after {} iterations, mse {:.3e}, rel_l2 {:.3e}, {:.0} s",
        job.problem,
        if job.adaptive { "adaptive" } else { "fixed" },
        job.seed,
        run.termination.as_str(),
        run.iterations,
        mse,
        rel_l2,
        seconds
    );
    Outcome {
        problem: job.problem,
        adaptive: job.adaptive,
        seed: job.seed,
        run,
        mse,
        rel_l2,
        seconds,
    }
}

fn desk_runs() -> Vec<Outcome> {
    let mut jobs = Vec::new();
    for problem in ["heat", "laplace2d"] {
        for adaptive in [true, false] {
            for seed in SEEDS {
                jobs.push(Job { problem, adaptive, seed });
            }
        }
    }
    let threads = std::env::var("ANAGRAM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    let queue = Mutex::new(jobs.iter());
    let results = Mutex::new(Vec::new());
    std::thread::scope(|s| {
        for _ in 0..threads.min(jobs.len()) {
            s.spawn(|| loop {
                let next = queue.lock().unwrap().next();
                let Some(job) = next else { break };
                let out = execute(job);
                results.lock().unwrap().push(out);
            });
        }
    });
    let mut out = results.into_inner().unwrap();
    out.sort_by_key(|o| (o.problem, !o.adaptive, o.seed));
    out
}

fn criterion_3(runs: &[Outcome]) -> Verdict {
    let mut worst = 0.0f64;
    let mut curves = 0;
    for o in runs {
        for r in &o.run.records {
            if let Some(c) = &r.curve {
                worst = worst.max(c.max_increase());
                curves += 1;
            }
        }
        worst = worst.max(o.run.final_curve.max_increase());
        curves += 1;
    }
    // short runs on the remaining benchmarks
    for name in ["laplace5d", "burgers1d", "nonlinear-poisson-k1", "allen-cahn"] {
        let (problem, model, params) = benchmark(name, 8, 3);
        for strategy in [Strategy::Adaptive, Strategy::FixedCutoff { alpha: 1e-3 }] {
            let config = TrainConfig {
                max_iterations: 3,
                strategy,
                ..TrainConfig::default()
            };
            let run = train(&problem, &model, params.clone(), &config).unwrap();
            for r in &run.records {
                worst = worst.max(r.curve.as_ref().unwrap().max_increase());
                curves += 1;
            }
        }
    }
    verdict(worst <= 1e-12, format!("{curves} curves, largest increase {worst:.2e} (tol 1e-12)"))
}

fn adaptive<'a>(runs: &'a [Outcome], problem: &str) -> Vec<&'a Outcome> {
    runs.iter().filter(|o| o.adaptive && o.problem == problem).collect()
}

fn criterion_8(runs: &[Outcome]) -> Verdict {
    let heat = adaptive(runs, "heat");
    let mut ok = heat.len() == SEEDS.len();
    let mut parts = Vec::new();
    for o in &heat {
        let good = o.run.termination == TerminationReason::BoosterReturn
            && o.run.iterations <= T_MAX
            && o.mse <= 1e-18
            && o.rel_l2 <= 1e-5;
        ok &= good;
        parts.push(format!(
            "seed {}: {} at {} its, mse {:.2e}, rel_l2 {:.2e}, {:.0} s",
            o.seed,
            o.run.termination.as_str(),
            o.run.iterations,
            o.mse,
            o.rel_l2,
            o.seconds
        ));
    }
    verdict(ok, format!("booster return, mse ≤ 1e-18, rel_l2 ≤ 1e-5 | {}", parts.join("; ")))
}

fn criterion_9(runs: &[Outcome]) -> Verdict {
    let lap = adaptive(runs, "laplace2d");
    let worst = lap.iter().map(|o| o.rel_l2).fold(0.0f64, f64::max);
    let parts: Vec<String> = lap
        .iter()
        .map(|o| format!("seed {}: rel_l2 {:.2e}, {:.0} s", o.seed, o.rel_l2, o.seconds))
        .collect();
    verdict(
        lap.len() == SEEDS.len() && worst <= 1e-5,
        format!("rel_l2 ≤ 1e-5 | {}", parts.join("; ")),
    )
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn criterion_10(runs: &[Outcome]) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for problem in ["heat", "laplace2d"] {
        let pick = |a: bool| median(runs.iter().filter(|o| o.problem == problem && o.adaptive == a).map(|o| o.mse).collect());
        let (ad, fx) = (pick(true), pick(false));
        ok &= ad <= fx;
        parts.push(format!("{problem}: adaptive {ad:.2e} vs fixed {fx:.2e}"));
    }
    verdict(ok, format!("median final mse | {}", parts.join("; ")))
}

fn criterion_11(runs: &[Outcome]) -> Verdict {
    let heat = adaptive(runs, "heat");
    let terminating: Vec<_> = heat
        .iter()
        .filter(|o| o.run.termination == TerminationReason::BoosterReturn)
        .collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for o in &terminating {
        let recs = &o.run.records;
        let last = recs.last().unwrap();
        let final_flat = flattening_span(last.curve.as_ref().unwrap(), last.r_min, TrainConfig::default().flatten_tol);
        let (bound, holds) = if recs.len() >= 2 {
            let pen = &recs[recs.len() - 2];
            let c = pen.curve.as_ref().unwrap();
            let b = c.values[pen.r_min.min(c.rank_dim())].powi(2) * 1.1;
            (b, o.run.final_loss <= b)
        } else {
            (f64::NAN, false)
        };
        ok &= last.n_flat == 0 && final_flat == 0 && holds;
        parts.push(format!(
            "seed {}: N_flat {} (recomputed {}), loss {:.2e} vs bound {:.2e}",
            o.seed, last.n_flat, final_flat, o.run.final_loss, bound
        ));
    }
    let detail = if terminating.is_empty() {
        format!("vacuous: 0 of {} adaptive heat runs terminated", heat.len())
    } else {
        format!("{} terminating runs | {}", terminating.len(), parts.join("; "))
    };
    verdict(ok, detail)
}

fn main() {
    // honour the standard harness flags closely enough for `cargo test -- --list`
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let filter = args.iter().skip(1).find(|a| !a.starts_with('-')).cloned();
    if let Some(f) = &filter {
        if !"acceptance".contains(f.as_str()) {
            println!("acceptance: filtered out");
            return;
        }
    }

    let mut verdicts: Vec<(usize, &str, Verdict)> = Vec::new();
    let mut report = |n: usize, name: &'static str, v: Verdict| {
        println!("{} criterion {n:>2} {name}: {}", if v.passed { "PASS" } else { "FAIL" }, v.detail);
        verdicts.push((n, name, v));
    };
    report(1, "rce-loss-identity", criterion_1());
    report(2, "rce-pairwise-identity", criterion_2());
    report(4, "ridge-equivalence", criterion_4());
    report(5, "gram-path-equivalence", criterion_5());
    report(6, "jacobian-correctness", criterion_6());
    report(7, "linear-one-step", criterion_7());
    report(12, "policy-state-machine", criterion_12());

    println!("    desk-scale runs: heat, laplace2d × adaptive, fixed-cutoff(1e-3) × seeds {SEEDS:?}, T_max {T_MAX}");
    let runs = desk_runs();
    report(3, "rce-monotonicity", criterion_3(&runs));
    report(8, "desk-heat", criterion_8(&runs));
    report(9, "desk-laplace2d", criterion_9(&runs));
    report(10, "adaptive-beats-fixed", criterion_10(&runs));
    report(11, "flattening-at-termination", criterion_11(&runs));

    verdicts.sort_by_key(|v| v.0);
    let failed: Vec<_> = verdicts.iter().filter(|v| !v.2.passed).map(|v| v.0).collect();
    println!(
        "acceptance summary: {} passed, {} failed{}",
        verdicts.len() - failed.len(),
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" (criteria {failed:?})") }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
