//! Loss-minimizing dispatch of a Hybrid MT-SOP.
//!
//! Decision variables are the selector state `b`, the switch-port powers
//! `P_AC[i][j]` (converter `i`, feeder `j`), the DC-side converter powers
//! `P_DC[i]` and the loss-direction indicators `z[i]`. The objective is
//!
//! ```text
//! τ + qᵀP + c + Σ_i (P^Σ_AC[i] − P_DC[i]),    ‖H P‖² ≤ τ
//! ```
//!
//! with `P_j = Σ_i P_AC[i][j]`, `Σ_i P_DC[i] = 0` and converter losses
//! `P^Σ_AC[i] = P_DC[i] + κ|P_DC[i]|`. The indicator `z[i][0]` marks
//! rectifier operation (`P_DC[i] ≥ 0`, AC side `(1+κ)P_DC`) and `z[i][1]`
//! inverter operation (`P_DC[i] ≤ 0`, AC side `(1−κ)P_DC`). In the
//! big-M form each branch holds when its indicator is set:
//!
//! ```text
//! |P^Σ_AC[i] − (1+κ)P_DC[i]| ≤ M(1 − z[i][0]),   −P_DC[i] ≤ M(1 − z[i][0])
//! |P^Σ_AC[i] − (1−κ)P_DC[i]| ≤ M(1 − z[i][1]),    P_DC[i] ≤ M(1 − z[i][1])
//! ```
//!
//! The epigraph variable `τ` is not a separate unknown: every subproblem
//! minimizes `PᵀQP` directly, which is the cone constraint at equality,
//! and `τ` is reported as that value. `cone_residual` then compares it
//! against the factored form `‖H P‖²`.
//!
//! Branch-and-bound node relaxations use the convex hull of each
//! disjunction rather than its big-M relaxation. For the selector rows of
//! a converter the hull lets it split its rating across feeders,
//! `Σ_j |P_AC[i][j]| ≤ α_i P⁺`. For the indicators the hull is the convex
//! loss `P^Σ_AC ≥ max((1+κ)P_DC, (1−κ)P_DC)`, written with
//! `P_DC = u − v`, `u, v ≥ 0`. A node whose relaxation draws `u` and `v`
//! together (loss above the convex envelope) is branched on `z`.
//!
//! Internally every subproblem is scaled to per-unit of `P⁺`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::capability::{SelectorState, SopDesign};
use crate::linalg::Matrix;
use crate::lossmodel::QuadLossModel;
use crate::qp::{self, QuadProgram};
use crate::DispatchError;

/// Objective differences below `TIE_TOL · P⁺` (kW) count as ties.
pub const TIE_TOL: f64 = 1e-10;
/// Node limit for branch-and-bound (a full tree has 40 selector nodes).
pub const NODE_BUDGET: usize = 5000;
/// Relative gap target.
pub const GAP_REL_TARGET: f64 = 1e-4;

/// Smallest valid big-M constant, `2(1+κ)P⁺`.
pub fn default_big_m(design: &SopDesign, kappa: f64) -> f64 {
    2.0 * (1.0 + kappa) * design.p_plus_kva
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchProblem {
    pub design: SopDesign,
    pub loss_model: QuadLossModel,
    pub kappa: f64,
    pub big_m: f64,
    #[serde(default)]
    pub fixed_state: Option<SelectorState>,
}

impl DispatchProblem {
    /// Problem with the default big-M and free selector switches.
    pub fn new(design: SopDesign, loss_model: QuadLossModel, kappa: f64) -> Self {
        Self {
            big_m: default_big_m(&design, kappa),
            design,
            loss_model,
            kappa,
            fixed_state: None,
        }
    }

    pub fn with_fixed_state(mut self, state: SelectorState) -> Self {
        self.fixed_state = Some(state);
        self
    }

    pub fn validate(&self) -> Result<(), DispatchError> {
        self.design.validate()?;
        if !(self.kappa.is_finite() && (0.0..1.0).contains(&self.kappa)) {
            return Err(DispatchError::InvalidProblem(format!(
                "converter loss coefficient must lie in [0, 1), got {}",
                self.kappa
            )));
        }
        let m_min = default_big_m(&self.design, self.kappa);
        if !(self.big_m >= m_min * (1.0 - 1e-12)) {
            return Err(DispatchError::InvalidProblem(format!(
                "big-M constant {} is below 2(1+kappa)P+ = {}",
                self.big_m, m_min
            )));
        }
        let m = &self.loss_model;
        let finite = m.quad.iter().flatten().chain(&m.linear).chain(m.factor.iter().flatten()).all(|v| v.is_finite())
            && m.c.is_finite();
        if !finite {
            return Err(DispatchError::InvalidProblem(String::from("loss model has non-finite coefficients")));
        }
        Ok(())
    }

    fn tie_tol(&self) -> f64 {
        TIE_TOL * self.design.p_plus_kva
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchSolution {
    /// Feeder powers (kW), positive when drawn from the feeder.
    pub p_inj: [f64; 3],
    pub state: SelectorState,
    /// Switch-port powers, row = converter, column = feeder (kW).
    pub p_ac: [[f64; 3]; 3],
    /// AC-side power of each converter (kW).
    pub p_ac_sigma: [f64; 3],
    /// DC-side power of each converter (kW), positive into the DC bus.
    pub p_dc: [f64; 3],
    /// `[rectifier, inverter]` indicator per converter.
    pub z: [[u8; 2]; 3],
    pub tau: f64,
    pub loss_network: f64,
    /// Loss of each converter (kW).
    pub loss_converters: [f64; 3],
    pub loss_total: f64,
    pub mip_gap_abs: f64,
    pub mip_gap_rel: f64,
    /// False when the node budget ran out before the gap target was met.
    pub gap_closed: bool,
    pub cone_residual: f64,
    /// Stationarity residual of the final convex subproblem (per-unit).
    pub kkt_residual: f64,
    /// Convex subproblems solved.
    pub nodes: usize,
}

impl DispatchSolution {
    pub fn objective(&self) -> f64 {
        self.loss_total
    }

    pub fn converter_loss_total(&self) -> f64 {
        self.loss_converters.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ZMode {
    Hull,
    Rectifier,
    Inverter,
}

const U: usize = 0;
const V: usize = 3;

/// Node relaxation in per-unit. Variables are `u, v` (3 each, `P_DC = u − v`)
/// followed, for every free selector row, by the positive and negative
/// parts of its three port powers.
fn build_node(problem: &DispatchProblem, rows: &[Option<usize>; 3], z: &[ZMode; 3]) -> QuadProgram {
    let kappa = problem.kappa;
    let alpha = problem.design.alpha;
    let free_rows: Vec<usize> = (0..3).filter(|&i| rows[i].is_none()).collect();
    let n = 6 + 6 * free_rows.len();
    let split = |k: usize| 6 + 6 * k;

    let mut to_inj = Matrix::zeros(3, n);
    for i in 0..3 {
        if let Some(f) = rows[i] {
            to_inj[(f, U + i)] += 1.0 + kappa;
            to_inj[(f, V + i)] -= 1.0 - kappa;
        }
    }
    for k in 0..free_rows.len() {
        for j in 0..3 {
            to_inj[(j, split(k) + j)] += 1.0;
            to_inj[(j, split(k) + 3 + j)] -= 1.0;
        }
    }

    let mut eq_rows: Vec<Vec<f64>> = Vec::new();
    let mut dc = vec![0.0; n];
    for i in 0..3 {
        dc[U + i] = 1.0;
        dc[V + i] = -1.0;
    }
    eq_rows.push(dc);
    for (k, &i) in free_rows.iter().enumerate() {
        let mut r = vec![0.0; n];
        r[U + i] = 1.0 + kappa;
        r[V + i] = -(1.0 - kappa);
        for j in 0..3 {
            r[split(k) + j] = -1.0;
            r[split(k) + 3 + j] = 1.0;
        }
        eq_rows.push(r);
    }

    let mut ineq_rows: Vec<Vec<f64>> = Vec::new();
    let mut ineq_rhs = Vec::new();
    for k in 0..n {
        let mut r = vec![0.0; n];
        r[k] = -1.0;
        ineq_rows.push(r);
        ineq_rhs.push(0.0);
    }
    for i in 0..3 {
        if rows[i].is_some() {
            for sign in [1.0, -1.0] {
                let mut r = vec![0.0; n];
                r[U + i] = sign * (1.0 + kappa);
                r[V + i] = -sign * (1.0 - kappa);
                ineq_rows.push(r);
                ineq_rhs.push(alpha[i]);
            }
        }
    }
    for (k, &i) in free_rows.iter().enumerate() {
        let mut r = vec![0.0; n];
        for c in 0..6 {
            r[split(k) + c] = 1.0;
        }
        ineq_rows.push(r);
        ineq_rhs.push(alpha[i]);
    }
    for i in 0..3 {
        let blocked = match z[i] {
            ZMode::Hull => None,
            ZMode::Rectifier => Some(V + i),
            ZMode::Inverter => Some(U + i),
        };
        if let Some(c) = blocked {
            let mut r = vec![0.0; n];
            r[c] = 1.0;
            ineq_rows.push(r);
            ineq_rhs.push(0.0);
        }
    }

    let p_plus = problem.design.p_plus_kva;
    let mut qa = Matrix::zeros(3, n);
    for r in 0..3 {
        for c in 0..n {
            qa[(r, c)] = (0..3).map(|k| problem.loss_model.quad[r][k] * to_inj[(k, c)]).sum();
        }
    }
    let at = to_inj.transpose();
    let mut hessian = at.mul(&qa);
    for r in 0..n {
        for c in 0..n {
            hessian[(r, c)] *= 2.0 * p_plus;
        }
    }
    // exact symmetry keeps the eigen-solver honest
    for r in 0..n {
        for c in r + 1..n {
            let m = 0.5 * (hessian[(r, c)] + hessian[(c, r)]);
            hessian[(r, c)] = m;
            hessian[(c, r)] = m;
        }
    }
    let mut linear = at.mul_vec(&problem.loss_model.linear);
    for i in 0..3 {
        linear[U + i] += kappa;
        linear[V + i] += kappa;
    }

    let to_matrix = |rows: Vec<Vec<f64>>| {
        let m = rows.len();
        Matrix::from_rows(m, n, rows.into_iter().flatten().collect())
    };
    let eq_count = eq_rows.len();
    QuadProgram {
        hessian,
        linear,
        eq: to_matrix(eq_rows),
        eq_rhs: vec![0.0; eq_count],
        ineq: to_matrix(ineq_rows),
        ineq_rhs,
    }
}

struct Relaxation {
    x: Vec<f64>,
    /// Lower bound on the objective (kW).
    bound: f64,
    kkt: f64,
}

fn relax(problem: &DispatchProblem, rows: &[Option<usize>; 3], z: &[ZMode; 3]) -> Result<Relaxation, DispatchError> {
    let program = build_node(problem, rows, z);
    let start = vec![0.0; program.dim()];
    let sol = qp::solve(&program, &start).map_err(|e| match e {
        crate::QpError::InfeasibleStart { .. } => DispatchError::InfeasibleState {
            state: describe_rows(rows),
        },
        other => DispatchError::Solver(other),
    })?;
    Ok(Relaxation {
        bound: problem.design.p_plus_kva * sol.objective + problem.loss_model.c,
        x: sol.x,
        kkt: sol.kkt_residual,
    })
}

fn describe_rows(rows: &[Option<usize>; 3]) -> String {
    let part = |r: Option<usize>| r.map_or(String::from("*"), |f| format!("{}", f + 1));
    format!("{},{},{}", part(rows[0]), part(rows[1]), part(rows[2]))
}

/// Loss above the convex envelope for converter `i` (pu).
fn envelope_slack(kappa: f64, x: &[f64], i: usize) -> f64 {
    2.0 * kappa * x[U + i].min(x[V + i]).max(0.0)
}

const SLACK_TOL: f64 = 1e-9;

/// Solution with all selector rows fixed, read off a relaxation whose
/// converter losses sit on the convex envelope.
fn extract(problem: &DispatchProblem, state: SelectorState, relax: &Relaxation) -> DispatchSolution {
    let p_plus = problem.design.p_plus_kva;
    let kappa = problem.kappa;
    let feeder_of = state.feeder_of();
    let mut p_dc = [0.0; 3];
    let mut sigma = [0.0; 3];
    let mut p_ac = [[0.0; 3]; 3];
    let mut p_inj = [0.0; 3];
    let mut z = [[0u8; 2]; 3];
    let mut loss_converters = [0.0; 3];
    for i in 0..3 {
        let d = (relax.x[U + i] - relax.x[V + i]) * p_plus;
        p_dc[i] = d;
        sigma[i] = d + kappa * d.abs();
        loss_converters[i] = sigma[i] - d;
        p_ac[i][feeder_of[i]] = sigma[i];
        p_inj[feeder_of[i]] += sigma[i];
        z[i] = if d >= 0.0 { [1, 0] } else { [0, 1] };
    }
    let model = &problem.loss_model;
    let tau = model.quadratic_term(&p_inj);
    let loss_network = tau + model.linear_term(&p_inj) + model.c;
    let loss_total = loss_network + loss_converters.iter().sum::<f64>();
    DispatchSolution {
        p_inj,
        state,
        p_ac,
        p_ac_sigma: sigma,
        p_dc,
        z,
        tau,
        loss_network,
        loss_converters,
        loss_total,
        mip_gap_abs: 0.0,
        mip_gap_rel: 0.0,
        gap_closed: true,
        cone_residual: cone_residual(model, &p_inj, tau),
        kkt_residual: relax.kkt,
        nodes: 0,
    }
}

/// `|‖H p‖² − τ| / max(τ, 1)`.
pub fn cone_residual(model: &QuadLossModel, p_inj: &[f64; 3], tau: f64) -> f64 {
    (model.factored_quadratic(p_inj) - tau).abs() / tau.max(1.0)
}

/// Preference among equally good states: fewest converters away from
/// their home feeder, then the smallest assignment vector.
fn state_key(s: &SelectorState) -> (usize, [usize; 3]) {
    (s.moves_from_identity(), s.feeder_of())
}

fn better(problem: &DispatchProblem, a: &DispatchSolution, b: &DispatchSolution) -> bool {
    let tol = problem.tie_tol();
    if a.loss_total < b.loss_total - tol {
        return true;
    }
    if a.loss_total > b.loss_total + tol {
        return false;
    }
    state_key(&a.state).cmp(&state_key(&b.state)) == Ordering::Less
}

struct Search<'a> {
    problem: &'a DispatchProblem,
    best: Option<DispatchSolution>,
    /// Smallest bound among pruned or unexplored nodes.
    floor: f64,
    nodes: usize,
    exhausted: bool,
}

impl<'a> Search<'a> {
    fn new(problem: &'a DispatchProblem) -> Self {
        Self {
            problem,
            best: None,
            floor: f64::INFINITY,
            nodes: 0,
            exhausted: false,
        }
    }

    fn relax(&mut self, rows: &[Option<usize>; 3], z: &[ZMode; 3]) -> Result<Relaxation, DispatchError> {
        self.nodes += 1;
        relax(self.problem, rows, z)
    }

    fn prune(&mut self, bound: f64) -> bool {
        if self.nodes >= NODE_BUDGET {
            self.exhausted = true;
            self.floor = self.floor.min(bound);
            return true;
        }
        match &self.best {
            Some(b) if bound > b.loss_total + self.problem.tie_tol() => {
                self.floor = self.floor.min(bound);
                true
            }
            _ => false,
        }
    }

    fn explore(&mut self, rows: [Option<usize>; 3], z: [ZMode; 3], node: Relaxation) -> Result<(), DispatchError> {
        if self.prune(node.bound) {
            return Ok(());
        }
        if let Some(i) = (0..3).find(|&i| rows[i].is_none()) {
            let mut order = vec![i];
            order.extend((0..3).filter(|&f| f != i));
            let mut children = Vec::with_capacity(3);
            for f in order {
                let mut child = rows;
                child[i] = Some(f);
                let r = self.relax(&child, &z)?;
                children.push((child, r));
            }
            children.sort_by(|a, b| a.1.bound.total_cmp(&b.1.bound));
            for (child, r) in children {
                self.explore(child, z, r)?;
            }
            return Ok(());
        }
        let kappa = self.problem.kappa;
        if let Some(i) = (0..3).find(|&i| z[i] == ZMode::Hull && envelope_slack(kappa, &node.x, i) > SLACK_TOL) {
            let mut children = Vec::with_capacity(2);
            for mode in [ZMode::Rectifier, ZMode::Inverter] {
                let mut child = z;
                child[i] = mode;
                let r = self.relax(&rows, &child)?;
                children.push((child, r));
            }
            children.sort_by(|a, b| a.1.bound.total_cmp(&b.1.bound));
            for (child, r) in children {
                self.explore(rows, child, r)?;
            }
            return Ok(());
        }
        let state = SelectorState::new(rows.map(|r| r.expect("all rows fixed")))?;
        let candidate = extract(self.problem, state, &node);
        let replace = match &self.best {
            None => true,
            Some(b) => better(self.problem, &candidate, b),
        };
        if replace {
            self.best = Some(candidate);
        }
        Ok(())
    }

    fn run(mut self, rows: [Option<usize>; 3]) -> Result<DispatchSolution, DispatchError> {
        let z = [ZMode::Hull; 3];
        let root = self.relax(&rows, &z)?;
        self.explore(rows, z, root)?;
        let mut best = self
            .best
            .ok_or_else(|| DispatchError::InvalidProblem(String::from("search produced no candidate")))?;
        let gap = (best.loss_total - self.floor.min(best.loss_total)).max(0.0);
        best.mip_gap_abs = gap;
        best.mip_gap_rel = gap / best.loss_total.abs().max(1.0);
        best.gap_closed = !self.exhausted || best.mip_gap_rel <= GAP_REL_TARGET;
        best.nodes = self.nodes;
        Ok(best)
    }
}

/// Global optimum with the selector state frozen at `state`.
pub fn solve_fixed_state(problem: &DispatchProblem, state: &SelectorState) -> Result<DispatchSolution, DispatchError> {
    problem.validate()?;
    Search::new(problem).run(state.feeder_of().map(Some))
}

/// Best fixed-state solution over all 27 selector states (or the frozen
/// state when the problem has one).
pub fn solve_enumerate(problem: &DispatchProblem) -> Result<DispatchSolution, DispatchError> {
    problem.validate()?;
    let states: Vec<SelectorState> = match problem.fixed_state {
        Some(s) => vec![s],
        None => SelectorState::all().collect(),
    };
    let mut best: Option<DispatchSolution> = None;
    let mut nodes = 0;
    for s in states {
        let sol = solve_fixed_state(problem, &s)?;
        nodes += sol.nodes;
        if best.as_ref().map_or(true, |b| better(problem, &sol, b)) {
            best = Some(sol);
        }
    }
    let mut best = best.expect("at least one state");
    best.nodes = nodes;
    Ok(best)
}

/// Mixed-integer optimum by branch-and-bound over selector rows, then
/// loss-direction indicators.
pub fn solve_micp(problem: &DispatchProblem) -> Result<DispatchSolution, DispatchError> {
    problem.validate()?;
    let rows = match problem.fixed_state {
        Some(s) => s.feeder_of().map(Some),
        None => [None; 3],
    };
    Search::new(problem).run(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constraint {
    /// Feeder power equals the sum of its switch ports.
    FeederBalance,
    /// Port power within the converter rating when connected, zero otherwise.
    PortLimit,
    /// Converter AC power equals the sum of its switch ports.
    ConverterBalance,
    /// DC bus balance `Σ P_DC = 0`.
    DcBalance,
    /// Exactly one loss-direction indicator per converter, each binary.
    IndicatorChoice,
    /// Big-M converter-loss constraints for the active indicator.
    ConverterLoss,
    /// Reported converter loss matches `P^Σ_AC − P_DC`.
    ConverterLossValue,
    /// Reported network loss matches the loss model.
    NetworkLoss,
    /// Reported total loss is the sum of its parts.
    TotalLoss,
    /// `τ ≥ ‖H P‖²` within the relative cone tolerance.
    Cone,
    /// Selector state differs from the problem's frozen state.
    FixedState,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Constraint::FeederBalance => "feeder-balance",
            Constraint::PortLimit => "port-limit",
            Constraint::ConverterBalance => "converter-balance",
            Constraint::DcBalance => "dc-balance",
            Constraint::IndicatorChoice => "indicator-choice",
            Constraint::ConverterLoss => "converter-loss",
            Constraint::ConverterLossValue => "converter-loss-value",
            Constraint::NetworkLoss => "network-loss",
            Constraint::TotalLoss => "total-loss",
            Constraint::Cone => "cone",
            Constraint::FixedState => "fixed-state",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: Constraint,
    /// Converter or feeder the violation refers to, if any.
    pub index: Option<usize>,
    /// Size of the violation (kW, or relative for `Cone`).
    pub magnitude: f64,
}

/// Absolute tolerance on power constraints, as a fraction of `P⁺`.
pub const CHECK_TOL: f64 = 1e-8;
/// Relative tolerance on the cone constraint.
pub const CONE_TOL: f64 = 1e-5;

/// Re-check every model constraint on `sol`, independently of the solver.
pub fn validate_solution(problem: &DispatchProblem, sol: &DispatchSolution) -> Vec<Violation> {
    let p_plus = problem.design.p_plus_kva;
    let tol = CHECK_TOL * p_plus;
    let kappa = problem.kappa;
    let m = problem.big_m;
    let mut out = Vec::new();
    let mut check = |constraint, index, magnitude: f64, limit: f64| {
        if !(magnitude <= limit) {
            out.push(Violation {
                constraint,
                index,
                magnitude,
            });
        }
    };

    for j in 0..3 {
        let ports: f64 = (0..3).map(|i| sol.p_ac[i][j]).sum();
        check(Constraint::FeederBalance, Some(j), (sol.p_inj[j] - ports).abs(), tol);
    }
    for i in 0..3 {
        for j in 0..3 {
            let b = if sol.state.connected(i, j) { 1.0 } else { 0.0 };
            let excess = sol.p_ac[i][j].abs() - b * problem.design.alpha[i] * p_plus;
            check(Constraint::PortLimit, Some(i), excess.max(0.0), tol);
        }
        let ports: f64 = sol.p_ac[i].iter().sum();
        check(Constraint::ConverterBalance, Some(i), (sol.p_ac_sigma[i] - ports).abs(), tol);
    }
    check(Constraint::DcBalance, None, sol.p_dc.iter().sum::<f64>().abs(), tol);

    for i in 0..3 {
        let [z1, z2] = sol.z[i];
        if z1 > 1 || z2 > 1 || z1 + z2 != 1 {
            check(Constraint::IndicatorChoice, Some(i), (z1 as f64 + z2 as f64 - 1.0).abs().max(1.0), 0.0);
            continue;
        }
        let (z1, z2) = (z1 as f64, z2 as f64);
        let s = sol.p_ac_sigma[i];
        let d = sol.p_dc[i];
        let excess = [
            (s - (1.0 + kappa) * d).abs() - m * (1.0 - z1),
            -d - m * (1.0 - z1),
            (s - (1.0 - kappa) * d).abs() - m * (1.0 - z2),
            d - m * (1.0 - z2),
        ]
        .iter()
        .fold(0.0f64, |a, v| a.max(*v));
        check(Constraint::ConverterLoss, Some(i), excess, tol);
        check(
            Constraint::ConverterLossValue,
            Some(i),
            (sol.loss_converters[i] - (s - d)).abs(),
            tol,
        );
    }

    let model = &problem.loss_model;
    let network = sol.tau + model.linear_term(&sol.p_inj) + model.c;
    check(Constraint::NetworkLoss, None, (sol.loss_network - network).abs(), tol);
    let total = sol.loss_network + sol.loss_converters.iter().sum::<f64>();
    check(Constraint::TotalLoss, None, (sol.loss_total - total).abs(), tol);
    let cone = (model.factored_quadratic(&sol.p_inj) - sol.tau).max(0.0) / sol.tau.max(1.0);
    check(Constraint::Cone, None, cone, CONE_TOL);

    if let Some(s) = problem.fixed_state {
        if s != sol.state {
            check(Constraint::FixedState, None, sol.state.moves_from_identity() as f64, -1.0);
        }
    }
    out
}
