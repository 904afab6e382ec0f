mod common;

use num_complex::Complex64;
use rand::Rng;
use sopflex_core::lossmodel::{eval_loss, fit_loss_model, max_relative_error, FitBox, FitMethod, QuadLossModel};
use sopflex_core::network::builtin_33bus;
use sopflex_core::powerflow::{solve_newton, InjectionSet, PowerFlowOptions};

use common::{star_network, two_bus, z_pu, STAR_KVA};

const BRANCHES: [(f64, f64); 3] = [(0.9, 0.6), (2.4, 1.1), (0.35, 0.9)];
const LOADS: [(f64, f64); 3] = [(820.0, 410.0), (300.0, 90.0), (1500.0, 0.0)];

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn factor_check(m: &QuadLossModel) {
    let norm = m.quad.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    for i in 0..3 {
        for j in 0..3 {
            let hth: f64 = (0..3).map(|k| m.factor[k][i] * m.factor[k][j]).sum();
            assert!((hth - m.quad[i][j]).abs() <= 1e-10 * norm, "HᵀH[{i}][{j}] = {hth} vs {}", m.quad[i][j]);
            assert_eq!(m.quad[i][j], m.quad[j][i]);
            if i > j {
                assert_eq!(m.factor[i][j], 0.0);
            }
        }
    }
}

/// Balanced transfers the device can actually produce: `ΣP = 0` and every
/// feeder within half the rating.
fn reachable_points(rng: &mut impl Rng, n: usize, half: f64) -> Vec<[f64; 3]> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let a = rng.gen_range(-half..half);
        let b = rng.gen_range(-half..half);
        if (a + b).abs() <= half {
            out.push([a, b, -a - b]);
        }
    }
    out
}

#[test]
fn star_feeder_coefficients_match_first_order_current_expansion() {
    // loss on each leaf is r|I|² with I expanded to first order in the draw:
    // linear term exact, quadratic term g |dV/dP|² with g = Re(1/z)
    let net = star_network(BRANCHES, LOADS);
    let model = fit_loss_model(&net, &InjectionSet::new(), &FitBox::uniform(200.0), FitMethod::Sensitivity).unwrap();
    let mut c = 0.0;
    for k in 0..3 {
        let z = z_pu(BRANCHES[k].0, BRANCHES[k].1);
        let exact = two_bus(z, Complex64::new(LOADS[k].0, LOADS[k].1) / STAR_KVA);
        c += exact.loss * STAR_KVA;
        let q = exact.dloss_dp;
        let qq = z.inv().re * exact.dv_dp.norm_sqr() / STAR_KVA;
        assert!(rel(model.linear[k], q) < 1e-6, "q[{k}] {} vs {q}", model.linear[k]);
        assert!(rel(model.quad[k][k], qq) < 1e-6, "Q[{k}][{k}] {} vs {qq}", model.quad[k][k]);
        for j in 0..3 {
            if j != k {
                assert!(model.quad[k][j].abs() < 1e-12 * qq);
            }
        }
    }
    assert!(rel(model.c, c) < 1e-9);
}

#[test]
fn star_feeder_least_squares_is_nearly_exact_for_small_boxes() {
    let net = star_network(BRANCHES, LOADS);
    let model = fit_loss_model(&net, &InjectionSet::new(), &FitBox::uniform(20.0), FitMethod::SampledLeastSquares)
        .unwrap();
    for k in 0..3 {
        let exact = two_bus(
            z_pu(BRANCHES[k].0, BRANCHES[k].1),
            Complex64::new(LOADS[k].0, LOADS[k].1) / STAR_KVA,
        );
        assert!(rel(model.linear[k], exact.dloss_dp) < 1e-4);
    }
}

#[test]
fn fitted_factors_reproduce_the_matrix() {
    let net = builtin_33bus();
    for method in [FitMethod::Sensitivity, FitMethod::SampledLeastSquares] {
        for half in [100.0, 375.0, 750.0] {
            factor_check(&fit_loss_model(&net, &InjectionSet::new(), &FitBox::uniform(half), method).unwrap());
        }
    }
    let mut rng = common::rng(5);
    for _ in 0..200 {
        factor_check(&common::random_loss_model(&mut rng));
    }
}

#[test]
fn zero_transfer_predicts_base_loss() {
    let net = builtin_33bus();
    let base = solve_newton(&net, &InjectionSet::new(), &PowerFlowOptions::NEWTON).unwrap();
    for method in [FitMethod::Sensitivity, FitMethod::SampledLeastSquares] {
        let model = fit_loss_model(&net, &InjectionSet::new(), &FitBox::uniform(750.0), method).unwrap();
        assert_eq!(eval_loss(&model, &[0.0; 3]), model.c);
        assert!(rel(model.c, base.total_loss_kw) < 0.01, "{method:?}: {} vs {}", model.c, base.total_loss_kw);
    }
}

#[test]
fn eval_is_the_quadratic_form() {
    let identity = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let model = QuadLossModel::from_coefficients(identity, [0.0; 3], 0.0).unwrap();
    assert_eq!(eval_loss(&model, &[1.0, 2.0, 3.0]), 14.0);
    let mut rng = common::rng(9);
    for _ in 0..100 {
        let m = common::random_loss_model(&mut rng);
        let p: [f64; 3] = core::array::from_fn(|_| rng.gen_range(-750.0..750.0));
        let direct: f64 = (0..3).map(|i| (0..3).map(|j| p[i] * m.quad[i][j] * p[j]).sum::<f64>()).sum::<f64>()
            + (0..3).map(|i| m.linear[i] * p[i]).sum::<f64>()
            + m.c;
        assert!((eval_loss(&m, &p) - direct).abs() <= 1e-12 * direct.abs());
        assert!((m.factored_quadratic(&p) - m.quadratic_term(&p)).abs() <= 1e-9 * m.quadratic_term(&p).max(1.0));
    }
}

#[test]
fn least_squares_fit_is_accurate_on_reachable_transfers() {
    // the harness fits over the half-rating box: the widest transfer any
    // design can produce
    let net = builtin_33bus();
    let half = 375.0;
    let model = fit_loss_model(&net, &InjectionSet::new(), &FitBox::uniform(half), FitMethod::SampledLeastSquares)
        .unwrap();
    let points = reachable_points(&mut common::rng(17), 100, half);
    let err = max_relative_error(&net, &InjectionSet::new(), &model, &points).unwrap();
    assert!(err < 0.01, "{err}");
}

#[test]
fn fit_methods_agree_for_small_transfers() {
    // the sensitivity route drops second-order voltage terms, so the two
    // methods only coincide as the box shrinks
    let net = builtin_33bus();
    let bounds = FitBox::uniform(50.0);
    let a = fit_loss_model(&net, &InjectionSet::new(), &bounds, FitMethod::Sensitivity).unwrap();
    let b = fit_loss_model(&net, &InjectionSet::new(), &bounds, FitMethod::SampledLeastSquares).unwrap();
    let mut rng = common::rng(19);
    for _ in 0..100 {
        let p: [f64; 3] = core::array::from_fn(|_| rng.gen_range(-50.0..50.0));
        assert!(rel(a.eval(&p), b.eval(&p)) < 0.005, "{p:?}");
    }
}

#[test]
fn refit_under_heavy_generation_tracks_the_new_operating_point() {
    let net = builtin_33bus();
    let mut base = InjectionSet::new();
    for g in &net.generators {
        base.add(g.bus, g.p_rated_kw, 0.0);
    }
    let model = fit_loss_model(&net, &base, &FitBox::uniform(375.0), FitMethod::SampledLeastSquares).unwrap();
    assert_eq!(model.operating_point.injections, base);
    let points = reachable_points(&mut common::rng(23), 40, 375.0);
    assert!(max_relative_error(&net, &base, &model, &points).unwrap() < 0.01);
}
