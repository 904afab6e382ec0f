//! Balanced AC power flow for radial feeders.
//!
//! [`solve_newton`] is the production solver (polar Newton–Raphson on a
//! dense admittance matrix). [`solve_sweep`] is an independent
//! backward/forward current-summation sweep kept for cross-validation.
//! Loads are constant power; every non-slack bus is PQ.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
// shadowed by std's inherent methods whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, Matrix};
use crate::network::{BusId, NetworkModel};
use crate::PowerFlowError;

/// Real and reactive power injected at one bus, on top of its load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Injection {
    pub bus: BusId,
    pub p_kw: f64,
    #[serde(default)]
    pub q_kvar: f64,
}

/// Signed injections overlaid on the base network (generation positive,
/// extra demand negative). Repeated buses accumulate.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InjectionSet {
    pub injections: Vec<Injection>,
}

impl InjectionSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, bus: BusId, p_kw: f64, q_kvar: f64) -> &mut Self {
        self.injections.push(Injection { bus, p_kw, q_kvar });
        self
    }

    /// Copy with the device drawing `draw_kw[j]` from feeder `j` at unity
    /// power factor (a draw is a negative injection).
    pub fn with_device_draw(&self, net: &NetworkModel, draw_kw: [f64; 3]) -> Self {
        let mut out = self.clone();
        for (bus, p) in net.sop_buses.iter().zip(draw_kw) {
            if p != 0.0 {
                out.add(*bus, -p, 0.0);
            }
        }
        out
    }

    pub fn total_p_kw(&self) -> f64 {
        self.injections.iter().map(|i| i.p_kw).sum()
    }

    /// Per-bus net specified power (pu), injections minus loads.
    fn specified_pu(&self, net: &NetworkModel) -> Result<Vec<Complex64>, PowerFlowError> {
        let sb = net.s_base_kva;
        let mut s: Vec<Complex64> = net
            .buses
            .iter()
            .map(|b| Complex64::new(-b.p_load_kw / sb, -b.q_load_kvar / sb))
            .collect();
        for inj in &self.injections {
            let k = net.bus_index(inj.bus).ok_or(PowerFlowError::UnknownBus(inj.bus))?;
            s[k] += Complex64::new(inj.p_kw / sb, inj.q_kvar / sb);
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFlowOptions {
    /// Largest acceptable bus power mismatch (pu).
    pub tol: f64,
    pub max_iter: usize,
}

impl PowerFlowOptions {
    pub const NEWTON: Self = Self {
        tol: 1e-8,
        max_iter: 30,
    };
    pub const SWEEP: Self = Self {
        tol: 1e-8,
        max_iter: 500,
    };

    fn check(&self) -> Result<(), PowerFlowError> {
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(PowerFlowError::InvalidOptions(alloc::format!(
                "tol = {}, max_iter = {}",
                self.tol,
                self.max_iter
            )));
        }
        Ok(())
    }
}

impl Default for PowerFlowOptions {
    fn default() -> Self {
        Self::NEWTON
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFlowSolution {
    /// Voltage magnitudes (pu), indexed like `NetworkModel::buses`.
    pub v_mag: Vec<f64>,
    /// Voltage angles (rad).
    pub v_ang: Vec<f64>,
    pub p_slack_kw: f64,
    pub q_slack_kvar: f64,
    /// Real power lost in closed branches.
    pub total_loss_kw: f64,
    pub iterations: usize,
    /// Final largest bus power mismatch (pu).
    pub max_mismatch: f64,
    /// Mismatch at the start of each iteration plus the final value.
    pub mismatch_history: Vec<f64>,
}

impl PowerFlowSolution {
    pub fn voltage(&self, k: usize) -> Complex64 {
        Complex64::from_polar(self.v_mag[k], self.v_ang[k])
    }
}

/// Bus admittance matrix (pu) over closed branches.
fn admittance(net: &NetworkModel) -> Vec<Vec<Complex64>> {
    let n = net.buses.len();
    let mut y = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for (_, br) in net.closed_branches() {
        let f = net.bus_index(br.from_bus).expect("validated");
        let t = net.bus_index(br.to_bus).expect("validated");
        let (r, x) = net.branch_impedance_pu(br);
        let yb = Complex64::new(r, x).inv();
        y[f][f] += yb;
        y[t][t] += yb;
        y[f][t] -= yb;
        y[t][f] -= yb;
    }
    y
}

fn calc_power(y: &[Vec<Complex64>], v: &[Complex64]) -> Vec<Complex64> {
    y.iter()
        .zip(v)
        .map(|(row, vi)| {
            let i: Complex64 = row.iter().zip(v).map(|(yik, vk)| yik * vk).sum();
            vi * i.conj()
        })
        .collect()
}

fn max_mismatch(calc: &[Complex64], spec: &[Complex64], slack: usize) -> f64 {
    calc.iter()
        .zip(spec)
        .enumerate()
        .filter(|(k, _)| *k != slack)
        .fold(0.0, |m, (_, (c, s))| m.max((c.re - s.re).abs()).max((c.im - s.im).abs()))
}

fn branch_losses_kw(net: &NetworkModel, v: &[Complex64]) -> f64 {
    net.closed_branches()
        .map(|(_, br)| {
            let f = net.bus_index(br.from_bus).expect("validated");
            let t = net.bus_index(br.to_bus).expect("validated");
            let (r, x) = net.branch_impedance_pu(br);
            let yb = Complex64::new(r, x).inv();
            let dv = v[f] - v[t];
            // g |ΔV|²
            yb.re * dv.norm_sqr()
        })
        .sum::<f64>()
        * net.s_base_kva
}

fn finish(
    net: &NetworkModel,
    y: &[Vec<Complex64>],
    v: &[Complex64],
    spec: &[Complex64],
    iterations: usize,
    mut history: Vec<f64>,
) -> PowerFlowSolution {
    let slack = net.slack_index();
    let calc = calc_power(y, v);
    let mm = max_mismatch(&calc, spec, slack);
    if history.last() != Some(&mm) {
        history.push(mm);
    }
    PowerFlowSolution {
        v_mag: v.iter().map(|c| c.norm()).collect(),
        v_ang: v.iter().map(|c| c.arg()).collect(),
        p_slack_kw: calc[slack].re * net.s_base_kva,
        q_slack_kvar: calc[slack].im * net.s_base_kva,
        total_loss_kw: branch_losses_kw(net, v),
        iterations,
        max_mismatch: mm,
        mismatch_history: history,
    }
}

/// Positions of the non-slack buses; unknown `k` maps to rows `k` (angle)
/// and `m + k` (magnitude) of the Newton system.
fn pq_positions(net: &NetworkModel) -> (Vec<usize>, Vec<Option<usize>>) {
    let slack = net.slack_index();
    let pq: Vec<usize> = (0..net.buses.len()).filter(|&k| k != slack).collect();
    let mut slot = vec![None; net.buses.len()];
    for (s, &k) in pq.iter().enumerate() {
        slot[k] = Some(s);
    }
    (pq, slot)
}

/// Polar power-flow jacobian `∂(P, Q)/∂(θ, |V|)` over the non-slack buses.
fn newton_jacobian(
    y: &[Vec<Complex64>],
    vm: &[f64],
    va: &[f64],
    calc: &[Complex64],
    pq: &[usize],
    slot: &[Option<usize>],
) -> Matrix {
    let m = pq.len();
    let mut jac = Matrix::zeros(2 * m, 2 * m);
    for (r, &i) in pq.iter().enumerate() {
        for (k, yik) in y[i].iter().enumerate() {
            if *yik == Complex64::new(0.0, 0.0) {
                continue;
            }
            let Some(c) = slot[k] else { continue };
            let (g, b) = (yik.re, yik.im);
            if k == i {
                let (p, q) = (calc[i].re, calc[i].im);
                let v2 = vm[i] * vm[i];
                jac[(r, c)] = -q - b * v2;
                jac[(r, m + c)] = p / vm[i] + g * vm[i];
                jac[(m + r, c)] = p - g * v2;
                jac[(m + r, m + c)] = q / vm[i] - b * vm[i];
            } else {
                let th = va[i] - va[k];
                let (s, co) = (th.sin(), th.cos());
                jac[(r, c)] = vm[i] * vm[k] * (g * s - b * co);
                jac[(r, m + c)] = vm[i] * (g * co + b * s);
                jac[(m + r, c)] = -vm[i] * vm[k] * (g * co + b * s);
                jac[(m + r, m + c)] = vm[i] * (g * s - b * co);
            }
        }
    }
    jac
}

/// Newton–Raphson from a flat start.
pub fn solve_newton(
    net: &NetworkModel,
    inj: &InjectionSet,
    opts: &PowerFlowOptions,
) -> Result<PowerFlowSolution, PowerFlowError> {
    opts.check()?;
    let spec = inj.specified_pu(net)?;
    let y = admittance(net);
    let slack = net.slack_index();
    let (pq, slot) = pq_positions(net);
    let m = pq.len();
    let n = net.buses.len();
    let mut vm = vec![1.0; n];
    let mut va = vec![0.0; n];
    let mut history = Vec::new();

    for iter in 0..=opts.max_iter {
        let v: Vec<Complex64> = (0..n).map(|k| Complex64::from_polar(vm[k], va[k])).collect();
        let calc = calc_power(&y, &v);
        let mm = max_mismatch(&calc, &spec, slack);
        history.push(mm);
        if !mm.is_finite() || mm > 1e6 || vm.iter().any(|&x| !(x > 1e-3)) {
            return Err(PowerFlowError::NonConvergence {
                iterations: iter,
                mismatch: mm,
            });
        }
        if mm <= opts.tol {
            return Ok(finish(net, &y, &v, &spec, iter, history));
        }
        if iter == opts.max_iter {
            return Err(PowerFlowError::NonConvergence {
                iterations: iter,
                mismatch: mm,
            });
        }
        let mut rhs = vec![0.0; 2 * m];
        for (r, &i) in pq.iter().enumerate() {
            rhs[r] = spec[i].re - calc[i].re;
            rhs[m + r] = spec[i].im - calc[i].im;
        }
        let jac = newton_jacobian(&y, &vm, &va, &calc, &pq, &slot);
        let dx = linalg::solve(jac, &rhs)
            .map_err(|_| PowerFlowError::SingularJacobian { iteration: iter })?;
        for (r, &i) in pq.iter().enumerate() {
            va[i] += dx[r];
            vm[i] += dx[m + r];
        }
    }
    unreachable!("loop returns on its last iteration")
}

/// Backward/forward current-summation sweep from a flat start.
pub fn solve_sweep(
    net: &NetworkModel,
    inj: &InjectionSet,
    opts: &PowerFlowOptions,
) -> Result<PowerFlowSolution, PowerFlowError> {
    opts.check()?;
    let topo = net.topology()?;
    let spec = inj.specified_pu(net)?;
    let y = admittance(net);
    let slack = net.slack_index();
    let n = net.buses.len();
    let z: Vec<Complex64> = net
        .branches
        .iter()
        .map(|br| {
            let (r, x) = net.branch_impedance_pu(br);
            Complex64::new(r, x)
        })
        .collect();
    let mut v = vec![Complex64::new(1.0, 0.0); n];
    let mut history = Vec::new();

    for iter in 0..=opts.max_iter {
        let mm = max_mismatch(&calc_power(&y, &v), &spec, slack);
        history.push(mm);
        if !mm.is_finite() || mm > 1e6 || v.iter().any(|c| !(c.norm() > 1e-3)) {
            return Err(PowerFlowError::NonConvergence {
                iterations: iter,
                mismatch: mm,
            });
        }
        if mm <= opts.tol {
            return Ok(finish(net, &y, &v, &spec, iter, history));
        }
        if iter == opts.max_iter {
            return Err(PowerFlowError::NonConvergence {
                iterations: iter,
                mismatch: mm,
            });
        }
        // backward: current flowing from parent into each bus
        let mut current: Vec<Complex64> = (0..n).map(|k| -(spec[k] / v[k]).conj()).collect();
        for &k in topo.order.iter().rev() {
            if let Some((p, _)) = topo.parent[k] {
                let ik = current[k];
                current[p] += ik;
            }
        }
        // forward
        for &k in topo.order.iter() {
            if let Some((p, b)) = topo.parent[k] {
                v[k] = v[p] - z[b] * current[k];
            }
        }
    }
    unreachable!("loop returns on its last iteration")
}

/// Complex bus-voltage sensitivities to real power injected at the three
/// device buses, evaluated at a converged operating point.
#[derive(Debug, Clone)]
pub struct VoltageSensitivity {
    pub base: PowerFlowSolution,
    /// `dv[k][j]` is `∂V_k/∂P_j` in pu per kW for injection at device bus `j`.
    pub dv: Vec<[Complex64; 3]>,
}

/// Differentiates the converged Newton equations once:
/// `J · [dθ; d|V|] = [e_j / S_base; 0]`, then
/// `dV = e^{jθ} (d|V| + j |V| dθ)`.
pub fn voltage_jacobian(
    net: &NetworkModel,
    base_inj: &InjectionSet,
) -> Result<VoltageSensitivity, PowerFlowError> {
    let base = solve_newton(net, base_inj, &PowerFlowOptions::NEWTON)?;
    let y = admittance(net);
    let (pq, slot) = pq_positions(net);
    let m = pq.len();
    let n = net.buses.len();
    let v: Vec<Complex64> = (0..n).map(|k| base.voltage(k)).collect();
    let calc = calc_power(&y, &v);
    let jac = newton_jacobian(&y, &base.v_mag, &base.v_ang, &calc, &pq, &slot);
    let lu = linalg::Lu::factor(jac).map_err(|_| PowerFlowError::SingularJacobian {
        iteration: base.iterations,
    })?;
    let mut dv = vec![[Complex64::new(0.0, 0.0); 3]; n];
    for (j, &bus) in net.sop_indices().iter().enumerate() {
        let mut rhs = vec![0.0; 2 * m];
        if let Some(s) = slot[bus] {
            rhs[s] = 1.0 / net.s_base_kva;
        }
        let dx = lu.solve(&rhs);
        for (r, &k) in pq.iter().enumerate() {
            let rot = Complex64::from_polar(1.0, base.v_ang[k]);
            dv[k][j] = rot * Complex64::new(dx[m + r], base.v_mag[k] * dx[r]);
        }
    }
    Ok(VoltageSensitivity { base, dv })
}
