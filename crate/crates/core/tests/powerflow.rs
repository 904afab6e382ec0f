mod common;

use num_complex::Complex64;
use rand::Rng;
use sopflex_core::network::{builtin_33bus, NetworkModel};
use sopflex_core::powerflow::{
    solve_newton, solve_sweep, voltage_jacobian, InjectionSet, PowerFlowOptions, PowerFlowSolution,
};
use sopflex_core::PowerFlowError;

use common::{star_network, two_bus, z_pu, STAR_KVA};

const BRANCHES: [(f64, f64); 3] = [(0.9, 0.6), (2.4, 1.1), (0.35, 0.9)];
const LOADS: [(f64, f64); 3] = [(820.0, 410.0), (300.0, 90.0), (1500.0, 0.0)];

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn random_draws(rng: &mut impl Rng) -> [f64; 3] {
    core::array::from_fn(|_| rng.gen_range(-750.0..750.0))
}

fn energy_imbalance_kw(net: &NetworkModel, inj: &InjectionSet, sol: &PowerFlowSolution) -> f64 {
    sol.p_slack_kw + inj.total_p_kw() - net.total_load_kw() - sol.total_loss_kw
}

#[test]
fn star_feeder_matches_two_bus_closed_form() {
    let net = star_network(BRANCHES, LOADS);
    let draws = [120.0, -250.0, 0.0];
    let inj = InjectionSet::new().with_device_draw(&net, draws);
    let newton = solve_newton(&net, &inj, &PowerFlowOptions::NEWTON).unwrap();
    let tight = PowerFlowOptions { tol: 1e-13, max_iter: 500 };
    let sweep = solve_sweep(&net, &inj, &tight).unwrap();

    let mut loss_kw = 0.0;
    for k in 0..3 {
        let s = Complex64::new(LOADS[k].0 + draws[k], LOADS[k].1) / STAR_KVA;
        let exact = two_bus(z_pu(BRANCHES[k].0, BRANCHES[k].1), s);
        loss_kw += exact.loss * STAR_KVA;
        let v = sweep.voltage(k + 1);
        assert!((v - exact.v).norm() < 1e-10, "bus {}: {v} vs {}", k + 2, exact.v);
        assert!((newton.v_mag[k + 1] - exact.u.sqrt()).abs() < 1e-8);
    }
    assert!(rel(sweep.total_loss_kw, loss_kw) < 1e-10, "{} vs {loss_kw}", sweep.total_loss_kw);
    assert!(rel(newton.total_loss_kw, loss_kw) < 1e-7);
}

#[test]
fn newton_and_sweep_agree_on_random_device_injections() {
    let net = builtin_33bus();
    let mut rng = common::rng(7);
    for _ in 0..50 {
        let inj = InjectionSet::new().with_device_draw(&net, random_draws(&mut rng));
        let a = solve_newton(&net, &inj, &PowerFlowOptions::NEWTON).unwrap();
        let b = solve_sweep(&net, &inj, &PowerFlowOptions::SWEEP).unwrap();
        assert!(rel(a.total_loss_kw, b.total_loss_kw) < 1e-6, "{} vs {}", a.total_loss_kw, b.total_loss_kw);
        assert!(a.total_loss_kw >= 0.0);
    }
}

#[test]
fn base_case_loss_matches_transcribed_dataset() {
    // widely reported base loss of the 33-bus feeder
    let reference = 202.677;
    let net = builtin_33bus();
    let a = solve_newton(&net, &InjectionSet::new(), &PowerFlowOptions::NEWTON).unwrap();
    let b = solve_sweep(&net, &InjectionSet::new(), &PowerFlowOptions::SWEEP).unwrap();
    assert!(rel(a.total_loss_kw, reference) < 1e-3, "{}", a.total_loss_kw);
    assert!(rel(a.total_loss_kw, b.total_loss_kw) < 1e-6);
}

#[test]
fn converged_solutions_balance_energy() {
    let net = builtin_33bus();
    let mut rng = common::rng(11);
    for _ in 0..30 {
        let mut inj = InjectionSet::new().with_device_draw(&net, random_draws(&mut rng));
        for g in &net.generators {
            inj.add(g.bus, rng.gen_range(0.0..1.0) * g.p_rated_kw, 0.0);
        }
        for (opts, sol) in [
            (PowerFlowOptions::NEWTON, solve_newton(&net, &inj, &PowerFlowOptions::NEWTON)),
            (PowerFlowOptions::SWEEP, solve_sweep(&net, &inj, &PowerFlowOptions::SWEEP)),
        ] {
            let sol = sol.unwrap();
            assert!(sol.max_mismatch <= opts.tol);
            let limit = 10.0 * opts.tol * net.s_base_kva;
            assert!(energy_imbalance_kw(&net, &inj, &sol).abs() <= limit);
        }
    }
}

#[test]
fn newton_residual_does_not_oscillate_at_convergence() {
    let net = builtin_33bus();
    let mut rng = common::rng(13);
    for _ in 0..20 {
        let inj = InjectionSet::new().with_device_draw(&net, random_draws(&mut rng));
        let sol = solve_newton(&net, &inj, &PowerFlowOptions::NEWTON).unwrap();
        let h = &sol.mismatch_history;
        assert_eq!(h.len(), sol.iterations + 1);
        let tail = &h[h.len().saturating_sub(3)..];
        assert!(tail.windows(2).all(|w| w[1] <= w[0]), "{h:?}");
    }
}

#[test]
fn unloaded_network_carries_no_current() {
    let net = builtin_33bus().with_load_scale(0.0);
    let net = NetworkModel { generators: Vec::new(), ..net };
    for sol in [
        solve_newton(&net, &InjectionSet::new(), &PowerFlowOptions::NEWTON).unwrap(),
        solve_sweep(&net, &InjectionSet::new(), &PowerFlowOptions::SWEEP).unwrap(),
    ] {
        assert_eq!(sol.total_loss_kw, 0.0);
        assert!(sol.v_mag.iter().all(|&v| v == 1.0));
    }
}

#[test]
fn sweep_rejects_a_meshed_network() {
    let mut net = builtin_33bus();
    let mut tie = net.branches[0].clone();
    tie.from_bus = 18;
    tie.to_bus = 33;
    net.branches.push(tie);
    assert!(net.validate().is_err());
    assert!(matches!(
        solve_sweep(&net, &InjectionSet::new(), &PowerFlowOptions::SWEEP),
        Err(PowerFlowError::Network(_))
    ));
}

#[test]
fn voltage_jacobian_matches_central_differences() {
    let net = builtin_33bus();
    let sens = voltage_jacobian(&net, &InjectionSet::new()).unwrap();
    let tight = PowerFlowOptions { tol: 1e-13, max_iter: 30 };
    let h = 1.0;
    for (j, &bus) in net.sop_buses.iter().enumerate() {
        let mut up = InjectionSet::new();
        up.add(bus, h, 0.0);
        let mut down = InjectionSet::new();
        down.add(bus, -h, 0.0);
        let up = solve_newton(&net, &up, &tight).unwrap();
        let down = solve_newton(&net, &down, &tight).unwrap();
        let mut err = 0.0f64;
        let mut scale = 0.0f64;
        for k in 0..net.buses.len() {
            let fd = (up.voltage(k) - down.voltage(k)) / (2.0 * h);
            err = err.max((fd - sens.dv[k][j]).norm());
            scale = scale.max(fd.norm());
        }
        assert!(err / scale < 1e-4, "column {j}: {}", err / scale);
    }
}

#[test]
fn voltage_jacobian_matches_two_bus_derivative() {
    let net = star_network(BRANCHES, LOADS);
    let sens = voltage_jacobian(&net, &InjectionSet::new()).unwrap();
    for k in 0..3 {
        let s = Complex64::new(LOADS[k].0, LOADS[k].1) / STAR_KVA;
        let exact = two_bus(z_pu(BRANCHES[k].0, BRANCHES[k].1), s);
        // an injection is negative consumption; per kW rather than per unit
        let expected = -exact.dv_dp / STAR_KVA;
        for j in 0..3 {
            let got = sens.dv[k + 1][j];
            if j == k {
                assert!((got - expected).norm() / expected.norm() < 1e-8, "{got} vs {expected}");
            } else {
                assert!(got.norm() < 1e-15);
            }
        }
        assert_eq!(sens.dv[0][k], Complex64::new(0.0, 0.0));
    }
}

#[test]
fn stiff_source_limit_has_vanishing_sensitivity() {
    let net = builtin_33bus();
    let largest = |factor: f64| {
        let mut n = net.clone();
        for b in &mut n.branches {
            b.r_ohm *= factor;
            b.x_ohm *= factor;
        }
        let s = voltage_jacobian(&n, &InjectionSet::new()).unwrap();
        s.dv.iter().flatten().fold(0.0f64, |m, d| m.max(d.norm()))
    };
    // far below the 1e-3 scale the mismatch floor of the dense admittance
    // matrix reaches the 1e-8 pu tolerance
    let base = largest(1.0);
    assert!(base > 0.0);
    for factor in [1e-1, 1e-2, 1e-3] {
        let ratio = largest(factor) / base;
        assert!(ratio < 1.2 * factor && ratio > 0.8 * factor, "{factor}: {ratio}");
    }
}
