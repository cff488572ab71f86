//! Fast invariant checks run by the `selftest` command.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{
    empirical_loss, init_params, residual_bundle, residual_vector, Activation, JetModel, Mlp,
    MlpSpec, PolynomialModel,
};
use crate::diagnostics::reconstruction_errors;
use crate::optimizer::{anagram_step, cutoff_policy_update, CutoffState, LineSearchConfig};
use crate::problems::{build_problem, operators, GridSpec, PdeProblem, PROBLEM_NAMES};
use crate::spectral::{apply_pseudoinverse, thin_svd, SpectralFilter};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, worst: f64, tol: f64) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: worst <= tol,
        detail: format!("worst {worst:.3e} (tolerance {tol:.0e})"),
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

fn small_grid(name: &str) -> GridSpec {
    if name == "laplace5d" {
        GridSpec::uniform(5, 3, 3)
    } else {
        GridSpec::uniform(2, 6, 6)
    }
}

fn small_model(problem: &PdeProblem, seed: u64) -> (Mlp, Vec<f64>) {
    let spec = MlpSpec::new(problem.input_dim, vec![6], Activation::Tanh, seed);
    let params = init_params(&spec).expect("valid spec").0;
    (Mlp::new(spec).expect("valid spec"), params)
}

/// `RCE_0² = 2ℓ` on every benchmark problem.
pub fn loss_identity() -> CheckOutcome {
    let mut worst = 0.0f64;
    for (k, name) in PROBLEM_NAMES.iter().enumerate() {
        let problem = build_problem(name, &small_grid(name)).expect("benchmark builds");
        let (model, params) = small_model(&problem, k as u64 + 1);
        let bundle = residual_bundle(&problem, &model, &params).expect("bundle");
        let s = bundle.sample_count() as f64;
        let factors = thin_svd(&(&bundle.feature * s.sqrt())).expect("svd");
        let curve = reconstruction_errors(&factors, &(&bundle.residual * s.sqrt())).expect("curve");
        let loss = empirical_loss(&problem, &model, &params).expect("loss");
        worst = worst.max((curve.values[0].powi(2) - 2.0 * loss).abs() / (2.0 * loss));
    }
    outcome("rce-loss-identity", worst, 1e-12)
}

/// `RCE_M² − RCE_N² = (1/S) Σ_{M<p≤N} c_p²` and monotone curves.
pub fn pairwise_identity() -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let s = rng.random_range(1..=12);
        let p = rng.random_range(1..=12);
        let factors = thin_svd(&random_matrix(&mut rng, s, p)).expect("svd");
        let g = random_vector(&mut rng, s);
        let curve = reconstruction_errors(&factors, &g).expect("curve");
        worst = worst.max(curve.max_increase());
        let c = factors.sample_side.tr_mul(&g);
        for m in 0..=c.len() {
            for n in m..=c.len() {
                let block: f64 = c.rows(m, n - m).norm_squared() / s as f64;
                let lhs = curve.values[m].powi(2) - curve.values[n].powi(2);
                worst = worst.max((lhs - block).abs());
            }
        }
    }
    outcome("rce-pairwise-identity", worst, 1e-10)
}

/// Ridge-filtered direction against `(Ĝ + αI)⁻¹∇ℓ`.
pub fn ridge_equivalence() -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let s = rng.random_range(1..=10);
        let p = rng.random_range(1..=10);
        let phi = random_matrix(&mut rng, s, p);
        let g = random_vector(&mut rng, s);
        let factors = thin_svd(&phi).expect("svd");
        for alpha in [1e-2, 1e-6] {
            let d = apply_pseudoinverse(&factors, SpectralFilter::Ridge { alpha, sample_count: s }, &g)
                .expect("ridge");
            let gram = phi.tr_mul(&phi) / s as f64 + DMatrix::identity(p, p) * alpha;
            let grad = phi.tr_mul(&g) / s as f64;
            let oracle = gram.lu().solve(&grad).expect("regularized Gram is invertible");
            worst = worst.max((d - &oracle).norm() / oracle.norm().max(f64::MIN_POSITIVE));
        }
    }
    outcome("ridge-equivalence", worst, 1e-8)
}

/// Full-rank direction against `G⁺∇ℓ`.
pub fn gram_equivalence() -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let p = rng.random_range(1..=8);
        let s = p + rng.random_range(0..=4);
        let phi = random_matrix(&mut rng, s, p) + DMatrix::identity(s, p) * 2.0;
        let g = random_vector(&mut rng, s);
        let factors = thin_svd(&phi).expect("svd");
        let d = apply_pseudoinverse(&factors, SpectralFilter::HardCutoffByRank(p), &g).expect("pinv");
        let gram = phi.tr_mul(&phi) / s as f64;
        let grad = phi.tr_mul(&g) / s as f64;
        let oracle = gram.pseudo_inverse(1e-14).expect("pinv") * grad;
        worst = worst.max((d - &oracle).norm() / oracle.norm().max(f64::MIN_POSITIVE));
    }
    outcome("gram-equivalence", worst, 1e-7)
}

/// Feature columns against central differences of the residual vector.
pub fn jacobian_consistency() -> CheckOutcome {
    let mut worst = 0.0f64;
    let h = 1e-6;
    for (k, name) in PROBLEM_NAMES.iter().enumerate() {
        let problem = build_problem(name, &small_grid(name)).expect("benchmark builds");
        let (model, params) = small_model(&problem, 40 + k as u64);
        let bundle = residual_bundle(&problem, &model, &params).expect("bundle");
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        for _ in 0..10 {
            let j = rng.random_range(0..params.len());
            let mut plus = params.clone();
            plus[j] += h;
            let mut minus = params.clone();
            minus[j] -= h;
            let fd = (residual_vector(&problem, &model, &plus).expect("residual")
                - residual_vector(&problem, &model, &minus).expect("residual"))
                / (2.0 * h);
            let err = (bundle.feature.column(j) - &fd).norm() / (1.0 + fd.norm());
            worst = worst.max(err);
        }
    }
    outcome("jacobian-consistency", worst, 1e-5)
}

/// One full-rank step on a linear model reaches the least-squares optimum.
pub fn linear_one_step() -> CheckOutcome {
    let target = |x: f64| (2.0 * x).sin();
    let points: Vec<(Vec<f64>, f64)> = (0..15)
        .map(|i| {
            let x = -1.0 + 2.0 * i as f64 / 14.0;
            (vec![x], target(x))
        })
        .collect();
    let op: Arc<dyn operators::PointOperator> = Arc::new(operators::Identity);
    let problem = PdeProblem::custom("linear-fit", vec![(-1.0, 1.0)], op, points, vec![]);
    let model = PolynomialModel::new(1, 4);
    let params = vec![0.0; model.param_count()];
    let bundle = residual_bundle(&problem, &model, &params).expect("bundle");
    let factors = thin_svd(&bundle.feature).expect("svd");
    let out = anagram_step(
        &problem,
        &model,
        &params,
        &bundle,
        &factors,
        factors.rank_dim(),
        &LineSearchConfig::default(),
    )
    .expect("step");
    let after = residual_vector(&problem, &model, &out.params).expect("residual");
    let a = &bundle.feature;
    let b = -&bundle.residual;
    let coef = a.tr_mul(a).lu().solve(&a.tr_mul(&b)).expect("normal equations");
    let oracle = &bundle.residual + a * coef;
    let worst = (after - oracle).amax().max((out.eta - 1.0).abs() * 1e-4);
    outcome("linear-one-step", worst, 1e-8)
}

/// Liftoff latch and post-liftoff `r_max` monotonicity on random rank
/// sequences.
pub fn policy_invariants() -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut violations = 0;
    for _ in 0..200 {
        let mut state = CutoffState::initial(rng.random_range(0..20), 1e-10);
        let mut prev = None;
        for _ in 0..30 {
            let r1 = rng.random_range(0..25);
            let r2 = rng.random_range(0..25);
            let next = cutoff_policy_update(&state, r1, r2, prev);
            if state.liftoff && (!next.liftoff || next.r_max < state.r_max) {
                violations += 1;
            }
            prev = Some(next.r_min);
            state = next;
        }
    }
    CheckOutcome {
        name: "policy-invariants",
        passed: violations == 0,
        detail: format!("{violations} violations over 200 random sequences"),
    }
}

pub fn run_all() -> Vec<CheckOutcome> {
    vec![
        loss_identity(),
        pairwise_identity(),
        ridge_equivalence(),
        gram_equivalence(),
        jacobian_consistency(),
        linear_one_step(),
        policy_invariants(),
    ]
}
