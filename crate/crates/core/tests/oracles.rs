//! Cross-checks of the library against independent reference computations.

use coordfit::network::{init_params, loss_and_gradient, Activation, NetworkSpec, TrainingSet};
use coordfit::numerics::{matvec, symmetric_eigenvalues, RealMatrix, RngStream};
use coordfit::optimizers::testfns::{Quadratic, Rosenbrock};
use coordfit::optimizers::{
    run_optimizer, wolfe_line_search, Budget, InitialScaling, LbfgsState, NetworkObjective, Objective, OptimizerConfig,
    OptimizerKind, Termination, WolfeConfig,
};
use coordfit::curvature::full_hessian;
use proptest::prelude::*;

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(b).max(1e-300)
}

fn random_set(n: usize, outputs: usize, seed: u64) -> TrainingSet {
    let mut rng = RngStream::new(seed);
    let x = RealMatrix::from_vec(n, 2, (0..2 * n).map(|_| rng.uniform(-1.0, 1.0).unwrap()).collect()).unwrap();
    let y = RealMatrix::from_vec(n, outputs, (0..n * outputs).map(|_| rng.uniform(0.0, 1.0).unwrap()).collect()).unwrap();
    TrainingSet::new(x, y).unwrap()
}

/// Central difference with one Richardson extrapolation.
fn fd_gradient<O: Objective>(obj: &O, theta: &[f64], h: f64) -> Vec<f64> {
    let mut t = theta.to_vec();
    let mut central = |i: usize, h: f64| {
        let orig = t[i];
        t[i] = orig + h;
        let fp = obj.value(&t).unwrap();
        t[i] = orig - h;
        let fm = obj.value(&t).unwrap();
        t[i] = orig;
        (fp - fm) / (2.0 * h)
    };
    (0..theta.len())
        .map(|i| {
            let coarse = central(i, h);
            let fine = central(i, h / 2.0);
            (4.0 * fine - coarse) / 3.0
        })
        .collect()
}

/// `M ← (I − ρsyᵀ) M (I − ρysᵀ) + ρssᵀ`, by explicit matrix products.
fn dense_bfgs(m: &RealMatrix, s: &[f64], y: &[f64]) -> RealMatrix {
    let n = s.len();
    let rho = 1.0 / s.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let mut left = RealMatrix::identity(n);
    for i in 0..n {
        for j in 0..n {
            left[(i, j)] -= rho * s[i] * y[j];
        }
    }
    let mut out = RealMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = rho * s[i] * s[j];
            for k in 0..n {
                for l in 0..n {
                    acc += left[(i, k)] * m[(k, l)] * left[(j, l)];
                }
            }
            out[(i, j)] = acc;
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn network_gradient_matches_finite_differences(seed in 0u64..1000, act in 0usize..3) {
        let activation = [Activation::sine(), Activation::gaussian(), Activation::Tanh][act];
        let spec = NetworkSpec::new(2, vec![6, 5], 2, activation).with_seed(seed);
        let ts = random_set(20, 2, seed + 1);
        let params = init_params(&spec).unwrap();
        let (_, g) = loss_and_gradient(&spec, &params, &ts).unwrap();
        let obj = NetworkObjective::new(&spec, &ts).unwrap();
        let fd = fd_gradient(&obj, &params.flat, 1e-5);
        prop_assert!(rel_err(&g, &fd) < 1e-6, "relative error {:e}", rel_err(&g, &fd));
    }

    #[test]
    fn line_search_returns_strong_wolfe_points(x in -2.0f64..2.0, y in -1.0f64..3.0) {
        let theta = [x, y];
        let (f, g) = Rosenbrock.value_and_gradient(&theta).unwrap();
        prop_assume!(norm(&g) > 1e-8);
        let d: Vec<f64> = g.iter().map(|v| -v / norm(&g)).collect();
        let cfg = WolfeConfig::default();
        let r = wolfe_line_search(&Rosenbrock, &theta, f, &g, &d, 1.0, &cfg).unwrap();
        prop_assert!(!r.warning);
        prop_assert!(r.check.sufficient_decrease(cfg.c1) && r.check.curvature(cfg.c2), "{:?}", r.check);
    }
}

#[test]
fn two_loop_matches_dense_bfgs_product() {
    let n = 8;
    let q = Quadratic::random_spd(n, 11);
    let mut rng = RngStream::new(12);
    let mut state = LbfgsState::new(10).with_scaling(InitialScaling::Identity);
    let mut m = RealMatrix::identity(n);
    for _ in 0..10 {
        let s: Vec<f64> = (0..n).map(|_| rng.normal(0.0, 1.0).unwrap()).collect();
        let y = matvec(&q.a, &s).unwrap();
        assert!(state.push(s.clone(), y.clone()));
        m = dense_bfgs(&m, &s, &y);
        let v: Vec<f64> = (0..n).map(|_| rng.normal(0.0, 1.0).unwrap()).collect();
        let dense = matvec(&m, &v).unwrap();
        let two_loop = state.apply_inverse_hessian(&v);
        assert!(rel_err(&two_loop, &dense) < 1e-10, "deviation {:e}", rel_err(&two_loop, &dense));
        assert!(rel_err(&matvec(&m, &y).unwrap(), &s) < 1e-12);
    }
}

#[test]
fn quasi_newton_methods_reach_known_minimizers() {
    let lbfgs = OptimizerConfig::new(OptimizerKind::Lbfgs);
    for seed in 0..5 {
        let q = Quadratic::random_spd(10, seed);
        let out = run_optimizer(&q, vec![0.0; 10], &lbfgs, &Budget::iterations(20).with_target_grad_norm(1e-6)).unwrap();
        assert_eq!(out.termination, Termination::TargetGradNorm, "seed {seed}");
        let last = out.trace.last().unwrap();
        let x: Vec<f64> = q.minimizer().unwrap();
        let (fx, _) = q.value_and_gradient(&x).unwrap();
        assert!(last.loss - fx < 1e-10);
    }
    let rb = run_optimizer(&Rosenbrock, vec![-1.2, 1.0], &lbfgs, &Budget::iterations(100).with_target_loss(1e-8)).unwrap();
    assert!(rb.final_loss() < 1e-8);

    let newton = OptimizerConfig::new(OptimizerKind::Newton);
    let q = Quadratic::random_with_spectrum(7, 0.01, 100.0, 3);
    let out = run_optimizer(&q, vec![1.0; 7], &newton, &Budget::iterations(1)).unwrap();
    let (_, g) = q.value_and_gradient(&out.theta).unwrap();
    assert!(norm(&g) / norm(&q.b) < 1e-12);
}

#[test]
fn accepted_steps_satisfy_wolfe_even_at_the_precision_floor() {
    let bfgs = OptimizerConfig::new(OptimizerKind::Bfgs);
    let cfg = WolfeConfig::default();
    for seed in 0..10 {
        let q = Quadratic::random_spd(10, seed);
        let out = run_optimizer(&q, vec![0.0; 10], &bfgs, &Budget::iterations(60).with_target_grad_norm(1e-14)).unwrap();
        for c in &out.diagnostics.wolfe {
            assert!(c.sufficient_decrease(cfg.c1) && c.curvature(cfg.c2), "seed {seed}: {c:?}");
        }
        assert!(out.diagnostics.secant_residuals.iter().all(|r| *r <= 1e-12));
    }
}

#[test]
fn network_hessian_matches_differenced_gradients() {
    let spec = NetworkSpec::new(2, vec![4, 4], 1, Activation::Tanh).with_seed(9);
    let ts = random_set(15, 1, 10);
    let params = init_params(&spec).unwrap();
    let h = full_hessian(&spec, &params, &ts).unwrap().matrix;
    let obj = NetworkObjective::new(&spec, &ts).unwrap();
    let p = params.flat.len();
    let step = 1e-5;
    let mut worst: f64 = 0.0;
    for j in 0..p {
        let mut tp = params.flat.clone();
        tp[j] += step;
        let mut tm = params.flat.clone();
        tm[j] -= step;
        let (_, gp) = obj.value_and_gradient(&tp).unwrap();
        let (_, gm) = obj.value_and_gradient(&tm).unwrap();
        for i in 0..p {
            worst = worst.max(((gp[i] - gm[i]) / (2.0 * step) - h[(i, j)]).abs());
        }
    }
    let scale = h.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(worst / scale < 1e-6, "relative deviation {:e}", worst / scale);
}

#[test]
fn eigenvalues_of_a_rotated_diagonal() {
    let q = Quadratic::random_with_spectrum(12, -3.0, 5.0, 4);
    let mut got = symmetric_eigenvalues(&q.a, 1e-14).unwrap();
    got.sort_by(f64::total_cmp);
    let trace: f64 = (0..12).map(|i| q.a[(i, i)]).sum();
    assert!((got.iter().sum::<f64>() - trace).abs() < 1e-10);
    for lambda in &got {
        let mut shifted = q.a.clone();
        for i in 0..12 {
            shifted[(i, i)] -= lambda;
        }
        let near_zero = symmetric_eigenvalues(&shifted, 1e-14).unwrap().iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        assert!(near_zero < 1e-9);
    }
}
