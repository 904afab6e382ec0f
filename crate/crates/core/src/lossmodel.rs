//! Quadratic surrogate of network losses in the three device powers:
//!
//! ```text
//! loss(p) = pᵀ Q p + qᵀ p + c        (kW, p in kW drawn from each feeder)
//! ```
//!
//! Two independent fitting routes exist. [`FitMethod::Sensitivity`]
//! linearizes the complex bus voltages around the operating point and sums
//! `g |ΔV|²` over every branch's primitive admittance, which yields `Q`,
//! `q` and `c` in closed form. [`FitMethod::SampledLeastSquares`] runs the
//! nonlinear power flow on a 5x5x5 grid and fits the ten coefficients by
//! least squares.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, Matrix};
use crate::network::NetworkModel;
use crate::powerflow::{self, InjectionSet, PowerFlowOptions};
use crate::LossModelError;

/// Relative eigenvalue threshold below which a fitted `Q` is rejected
/// rather than clamped.
pub const PSD_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    Sensitivity,
    SampledLeastSquares,
}

/// Half-widths (kW) of the device-power box a model is fitted over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitBox {
    pub half_width_kw: [f64; 3],
}

impl FitBox {
    pub fn uniform(half_width_kw: f64) -> Self {
        Self {
            half_width_kw: [half_width_kw; 3],
        }
    }
}

/// Where a model was linearized.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    #[serde(default)]
    pub hour: Option<u32>,
    pub injections: InjectionSet,
}

/// Quadratic network-loss model with its upper-triangular factor `H`
/// (`HᵀH = Q`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadLossModel {
    #[serde(rename = "Q")]
    pub quad: [[f64; 3]; 3],
    #[serde(rename = "q")]
    pub linear: [f64; 3],
    pub c: f64,
    #[serde(rename = "H")]
    pub factor: [[f64; 3]; 3],
    #[serde(default)]
    pub operating_point: OperatingPoint,
}

impl QuadLossModel {
    /// Symmetrize, repair and factor raw coefficients.
    ///
    /// Eigenvalues below `-PSD_TOLERANCE·‖Q‖` are an error; smaller
    /// negative ones are clamped to zero before factoring.
    pub fn from_coefficients(
        quad: [[f64; 3]; 3],
        linear: [f64; 3],
        c: f64,
    ) -> Result<Self, LossModelError> {
        let mut sym = Matrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                sym[(i, j)] = 0.5 * (quad[i][j] + quad[j][i]);
            }
        }
        let (vals, vecs) = linalg::symmetric_eigen(&sym);
        let norm = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if vals[0] < -PSD_TOLERANCE * norm {
            return Err(LossModelError::Indefinite {
                eigenvalue: vals[0],
                norm,
            });
        }
        let mut repaired = [[0.0; 3]; 3];
        if vals[0] < 0.0 {
            for (i, row) in repaired.iter_mut().enumerate() {
                for (j, out) in row.iter_mut().enumerate() {
                    *out = (0..3).map(|k| vecs[(i, k)] * vals[k].max(0.0) * vecs[(j, k)]).sum();
                }
            }
        } else {
            for (i, row) in repaired.iter_mut().enumerate() {
                for (j, out) in row.iter_mut().enumerate() {
                    *out = sym[(i, j)];
                }
            }
        }
        let factor = linalg::cholesky_upper_psd(&repaired);
        Ok(Self {
            quad: repaired,
            linear,
            c,
            factor,
            operating_point: OperatingPoint::default(),
        })
    }

    /// Predicted network loss (kW) at device powers `p_inj` (kW).
    pub fn eval(&self, p_inj: &[f64; 3]) -> f64 {
        self.quadratic_term(p_inj) + self.linear_term(p_inj) + self.c
    }

    /// `pᵀQp`.
    pub fn quadratic_term(&self, p: &[f64; 3]) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += p[i] * self.quad[i][j] * p[j];
            }
        }
        s
    }

    pub fn linear_term(&self, p: &[f64; 3]) -> f64 {
        linalg::dot(&self.linear, p)
    }

    /// `‖H p‖²`, the conic form of the quadratic term.
    pub fn factored_quadratic(&self, p: &[f64; 3]) -> f64 {
        self.factor
            .iter()
            .map(|row| linalg::dot(row, p))
            .map(|v| v * v)
            .sum()
    }

    /// Largest absolute eigenvalue of `Q`.
    pub fn quad_norm(&self) -> f64 {
        let m = Matrix::from_rows(3, 3, self.quad.iter().flatten().copied().collect());
        linalg::symmetric_eigen(&m)
            .0
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// `‖HᵀH − Q‖_max / ‖Q‖_max` (zero for a zero model).
    pub fn factor_error(&self) -> f64 {
        let mut err = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let hth: f64 = (0..3).map(|k| self.factor[k][i] * self.factor[k][j]).sum();
                err = err.max((hth - self.quad[i][j]).abs());
                scale = scale.max(self.quad[i][j].abs());
            }
        }
        if scale == 0.0 {
            err
        } else {
            err / scale
        }
    }
}

/// Predicted network loss of `model` at `p_inj`.
pub fn eval_loss(model: &QuadLossModel, p_inj: &[f64; 3]) -> f64 {
    model.eval(p_inj)
}

/// Fit a loss model around `base_inj` (device idle).
pub fn fit_loss_model(
    net: &NetworkModel,
    base_inj: &InjectionSet,
    bounds: &FitBox,
    method: FitMethod,
) -> Result<QuadLossModel, LossModelError> {
    if !bounds.half_width_kw.iter().all(|w| w.is_finite() && *w > 0.0) {
        return Err(LossModelError::EmptyBox);
    }
    let mut model = match method {
        FitMethod::Sensitivity => fit_sensitivity(net, base_inj)?,
        FitMethod::SampledLeastSquares => fit_least_squares(net, base_inj, bounds)?,
    };
    model.operating_point.injections = base_inj.clone();
    Ok(model)
}

fn fit_sensitivity(
    net: &NetworkModel,
    base_inj: &InjectionSet,
) -> Result<QuadLossModel, LossModelError> {
    let sens = powerflow::voltage_jacobian(net, base_inj).map_err(|source| {
        LossModelError::PowerFlow {
            injection: [0.0; 3],
            source,
        }
    })?;
    let sb = net.s_base_kva;
    let mut quad = [[0.0; 3]; 3];
    let mut linear = [0.0; 3];
    let mut c = 0.0;
    for (_, br) in net.closed_branches() {
        let f = net.bus_index(br.from_bus).expect("validated");
        let t = net.bus_index(br.to_bus).expect("validated");
        let (r, x) = net.branch_impedance_pu(br);
        let g = Complex64::new(r, x).inv().re * sb;
        let d0 = sens.base.voltage(f) - sens.base.voltage(t);
        // drawing power is a negative injection
        let m: [Complex64; 3] = core::array::from_fn(|j| -(sens.dv[f][j] - sens.dv[t][j]));
        c += g * d0.norm_sqr();
        for j in 0..3 {
            linear[j] += 2.0 * g * (d0.conj() * m[j]).re;
            for k in 0..3 {
                quad[j][k] += g * (m[j].conj() * m[k]).re;
            }
        }
    }
    QuadLossModel::from_coefficients(quad, linear, c)
}

const GRID: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

fn fit_least_squares(
    net: &NetworkModel,
    base_inj: &InjectionSet,
    bounds: &FitBox,
) -> Result<QuadLossModel, LossModelError> {
    let w = bounds.half_width_kw;
    // features in scaled coordinates u = p / w
    let features = |u: &[f64; 3]| -> [f64; 10] {
        [
            u[0] * u[0],
            u[1] * u[1],
            u[2] * u[2],
            u[0] * u[1],
            u[0] * u[2],
            u[1] * u[2],
            u[0],
            u[1],
            u[2],
            1.0,
        ]
    };
    let mut ata = Matrix::zeros(10, 10);
    let mut atb = vec![0.0; 10];
    for a in GRID {
        for b in GRID {
            for cc in GRID {
                let u = [a, b, cc];
                let p = [a * w[0], b * w[1], cc * w[2]];
                let inj = base_inj.with_device_draw(net, p);
                let sol = powerflow::solve_newton(net, &inj, &PowerFlowOptions::NEWTON)
                    .map_err(|source| LossModelError::PowerFlow { injection: p, source })?;
                let phi = features(&u);
                for i in 0..10 {
                    atb[i] += phi[i] * sol.total_loss_kw;
                    for j in 0..10 {
                        ata[(i, j)] += phi[i] * phi[j];
                    }
                }
            }
        }
    }
    let beta = linalg::solve(ata, &atb).map_err(|_| LossModelError::SingularFit)?;
    let mut quad = [[0.0; 3]; 3];
    for i in 0..3 {
        quad[i][i] = beta[i] / (w[i] * w[i]);
    }
    for (k, (i, j)) in [(0, 1), (0, 2), (1, 2)].into_iter().enumerate() {
        let v = 0.5 * beta[3 + k] / (w[i] * w[j]);
        quad[i][j] = v;
        quad[j][i] = v;
    }
    let linear = [beta[6] / w[0], beta[7] / w[1], beta[8] / w[2]];
    QuadLossModel::from_coefficients(quad, linear, beta[9])
}

/// Worst relative error of `model` against the nonlinear power flow over
/// `points` (kW device powers).
pub fn max_relative_error(
    net: &NetworkModel,
    base_inj: &InjectionSet,
    model: &QuadLossModel,
    points: &[[f64; 3]],
) -> Result<f64, LossModelError> {
    let mut worst = 0.0f64;
    for p in points {
        let inj = base_inj.with_device_draw(net, *p);
        let sol = powerflow::solve_newton(net, &inj, &PowerFlowOptions::NEWTON)
            .map_err(|source| LossModelError::PowerFlow { injection: *p, source })?;
        let rel = (model.eval(p) - sol.total_loss_kw).abs() / sol.total_loss_kw.abs().max(1e-9);
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// Deterministic sample set used by callers that need validation points
/// without a random source: the 27 vertices/edge-midpoints/centre of the box.
pub fn lattice_points(bounds: &FitBox) -> Vec<[f64; 3]> {
    let mut pts = Vec::with_capacity(27);
    for a in [-1.0, 0.0, 1.0] {
        for b in [-1.0, 0.0, 1.0] {
            for c in [-1.0, 0.0, 1.0] {
                let w = bounds.half_width_kw;
                pts.push([a * w[0], b * w[1], c * w[2]]);
            }
        }
    }
    pts
}
