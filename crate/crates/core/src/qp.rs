//! Dense primal active-set solver for small convex quadratic programs
//!
//! ```text
//! minimize   ½ xᵀ G x + gᵀ x
//! subject to E x = e,  C x ≤ d
//! ```
//!
//! `G` must be positive semidefinite. The caller supplies a feasible
//! starting point. Each iteration minimizes over the null space of the
//! working set; directions of zero curvature are followed as rays until a
//! constraint blocks them.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{self, dot, norm_inf, Matrix};
use crate::QpError;

/// Feasibility tolerance for the starting point and final iterate.
pub const FEAS_TOL: f64 = 1e-9;
const STEP_TOL: f64 = 1e-13;
const MULT_TOL: f64 = 1e-11;
const MAX_ITER: usize = 500;

#[derive(Debug, Clone)]
pub struct QuadProgram {
    pub hessian: Matrix,
    pub linear: Vec<f64>,
    pub eq: Matrix,
    pub eq_rhs: Vec<f64>,
    pub ineq: Matrix,
    pub ineq_rhs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Indices of inequalities active at the solution.
    pub active: Vec<usize>,
    /// Infinity norm of the stationarity residual `Gx + g + Eᵀμ + C_Wᵀλ`.
    pub kkt_residual: f64,
}

impl QuadProgram {
    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        0.5 * dot(x, &self.hessian.mul_vec(x)) + dot(&self.linear, x)
    }

    fn check_dims(&self) -> Result<(), QpError> {
        let n = self.dim();
        if self.hessian.rows() != n || self.hessian.cols() != n {
            return Err(QpError::Dimension("hessian"));
        }
        if self.eq.rows() != self.eq_rhs.len() || (self.eq.rows() > 0 && self.eq.cols() != n) {
            return Err(QpError::Dimension("equality constraints"));
        }
        if self.ineq.rows() != self.ineq_rhs.len() || (self.ineq.rows() > 0 && self.ineq.cols() != n) {
            return Err(QpError::Dimension("inequality constraints"));
        }
        Ok(())
    }

    /// Largest constraint violation at `x` and the offending row
    /// (equalities first, then inequalities offset by the equality count).
    pub fn max_violation(&self, x: &[f64]) -> (usize, f64) {
        let mut worst = (0, 0.0);
        for i in 0..self.eq.rows() {
            let v = (dot(self.eq.row(i), x) - self.eq_rhs[i]).abs();
            if v > worst.1 {
                worst = (i, v);
            }
        }
        for i in 0..self.ineq.rows() {
            let v = dot(self.ineq.row(i), x) - self.ineq_rhs[i];
            if v > worst.1 {
                worst = (self.eq.rows() + i, v);
            }
        }
        worst
    }
}

/// Solve `qp` from the feasible point `x0`.
pub fn solve(qp: &QuadProgram, x0: &[f64]) -> Result<QpSolution, QpError> {
    qp.check_dims()?;
    let n = qp.dim();
    if x0.len() != n {
        return Err(QpError::Dimension("starting point"));
    }
    let (index, violation) = qp.max_violation(x0);
    if violation > FEAS_TOL {
        return Err(QpError::InfeasibleStart { index, violation });
    }
    let mut x = x0.to_vec();
    let mut working: Vec<usize> = Vec::new();
    let n_eq = qp.eq.rows();

    for iter in 0..MAX_ITER {
        let grad = gradient(qp, &x);
        let aw = working_matrix(qp, &working);
        let z = linalg::null_space(&aw, n);
        let (step, is_ray) = null_space_step(qp, &z, &grad);

        if norm_inf(&step) <= STEP_TOL {
            let mult = multipliers(&aw, &grad);
            let (drop, worst) = working
                .iter()
                .enumerate()
                .map(|(k, _)| (k, mult[n_eq + k]))
                .fold((usize::MAX, -MULT_TOL), |acc, (k, m)| if m < acc.1 { (k, m) } else { acc });
            if drop == usize::MAX || worst >= -MULT_TOL {
                let mut residual = grad.clone();
                for (r, m) in mult.iter().enumerate() {
                    for (c, v) in aw.row(r).iter().enumerate() {
                        residual[c] += m * v;
                    }
                }
                let mut active = working.clone();
                active.sort_unstable();
                return Ok(QpSolution {
                    objective: qp.objective(&x),
                    x,
                    iterations: iter + 1,
                    active,
                    kkt_residual: norm_inf(&residual),
                });
            }
            working.remove(drop);
            continue;
        }

        let mut t_max = if is_ray { f64::INFINITY } else { 1.0 };
        let mut blocking = None;
        let step_scale = norm_inf(&step);
        for i in 0..qp.ineq.rows() {
            if working.contains(&i) {
                continue;
            }
            let row = qp.ineq.row(i);
            let cs = dot(row, &step);
            // rows (numerically) in the span of the working set cannot block
            if cs <= 1e-11 * step_scale * row.iter().map(|v| v.abs()).sum::<f64>() {
                continue;
            }
            let t = ((qp.ineq_rhs[i] - dot(qp.ineq.row(i), &x)) / cs).max(0.0);
            if t < t_max {
                t_max = t;
                blocking = Some(i);
            }
        }
        if t_max.is_infinite() {
            return Err(QpError::Unbounded);
        }
        for (xi, si) in x.iter_mut().zip(&step) {
            *xi += t_max * si;
        }
        if let Some(i) = blocking {
            working.push(i);
        }
    }
    Err(QpError::IterationLimit(MAX_ITER))
}

fn gradient(qp: &QuadProgram, x: &[f64]) -> Vec<f64> {
    let mut g = qp.hessian.mul_vec(x);
    for (gi, li) in g.iter_mut().zip(&qp.linear) {
        *gi += li;
    }
    g
}

fn working_matrix(qp: &QuadProgram, working: &[usize]) -> Matrix {
    let n = qp.dim();
    let rows = qp.eq.rows() + working.len();
    let mut a = Matrix::zeros(rows, n);
    for r in 0..qp.eq.rows() {
        a.row_mut(r).copy_from_slice(qp.eq.row(r));
    }
    for (k, &i) in working.iter().enumerate() {
        a.row_mut(qp.eq.rows() + k).copy_from_slice(qp.ineq.row(i));
    }
    a
}

/// Minimizing step within the null space `z`, or a descent ray of zero
/// curvature when the reduced problem is unbounded in some direction.
fn null_space_step(qp: &QuadProgram, z: &Matrix, grad: &[f64]) -> (Vec<f64>, bool) {
    let n = qp.dim();
    let k = z.cols();
    if k == 0 {
        return (vec![0.0; n], false);
    }
    let zt = z.transpose();
    let hr = zt.mul(&qp.hessian).mul(z);
    let gr = zt.mul_vec(grad);
    let (vals, vecs) = linalg::symmetric_eigen(&hr);
    // curvature is judged against the full Hessian: a reduced Hessian made
    // only of rounding noise must still count as flat
    let flat = 1e-11 * qp.hessian.max_abs().max(1e-300);
    let y: Vec<f64> = (0..k).map(|m| (0..k).map(|r| vecs[(r, m)] * gr[r]).sum()).collect();
    let gscale = norm_inf(grad).max(1.0);

    let ray_weight = |m: usize| if vals[m] <= flat && y[m].abs() > 1e-12 * gscale { -y[m] } else { 0.0 };
    let mut w = vec![0.0; k];
    let is_ray = (0..k).any(|m| ray_weight(m) != 0.0);
    for m in 0..k {
        w[m] = if is_ray {
            ray_weight(m)
        } else if vals[m] > flat {
            -y[m] / vals[m]
        } else {
            0.0
        };
    }
    let reduced = vecs.mul_vec(&w);
    (z.mul_vec(&reduced), is_ray)
}

/// Least-squares multipliers `λ` with `aᵀλ ≈ −grad` (minimum norm when
/// the rows of `a` are dependent).
fn multipliers(a: &Matrix, grad: &[f64]) -> Vec<f64> {
    let m = a.rows();
    if m == 0 {
        return Vec::new();
    }
    let aat = a.mul(&a.transpose());
    let rhs: Vec<f64> = (0..m).map(|r| -dot(a.row(r), grad)).collect();
    let (vals, vecs) = linalg::symmetric_eigen(&aat);
    let top = vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut lambda = vec![0.0; m];
    for k in 0..m {
        if vals[k] <= 1e-12 * top {
            continue;
        }
        let coef = (0..m).map(|r| vecs[(r, k)] * rhs[r]).sum::<f64>() / vals[k];
        for (r, l) in lambda.iter_mut().enumerate() {
            *l += coef * vecs[(r, k)];
        }
    }
    lambda
}
