#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use sopflex_core::capability::SopDesign;
use sopflex_core::lossmodel::QuadLossModel;
use sopflex_core::network::{Branch, BranchStatus, Bus, BusKind, NetworkModel};
use num_complex::Complex64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random converter fractions summing to one, occasionally with a zero entry.
pub fn random_alpha(rng: &mut impl Rng) -> [f64; 3] {
    let mut w: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
    if rng.gen_bool(0.2) {
        w[rng.gen_range(0..3)] = 0.0;
    }
    let s: f64 = w.iter().sum();
    let a = [w[0] / s, w[1] / s];
    [a[0], a[1], (1.0 - a[0] - a[1]).max(0.0)]
}

/// Loss model with a random PSD `Q` of typical feeder magnitude
/// (tens of kW at a few hundred kW of transfer) and `|q| ≤ 0.3`.
pub fn random_loss_model(rng: &mut impl Rng) -> QuadLossModel {
    let l: [[f64; 3]; 3] = core::array::from_fn(|_| core::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
    let scale = rng.gen_range(2e-5..2e-4);
    let quad: [[f64; 3]; 3] =
        core::array::from_fn(|i| core::array::from_fn(|j| scale * (0..3).map(|k| l[i][k] * l[j][k]).sum::<f64>()));
    let linear: [f64; 3] = core::array::from_fn(|_| rng.gen_range(-0.3..0.3));
    QuadLossModel::from_coefficients(quad, linear, rng.gen_range(20.0..250.0)).unwrap()
}

pub fn random_design(rng: &mut impl Rng) -> SopDesign {
    SopDesign::new(750.0, random_alpha(rng)).unwrap()
}

pub const STAR_KV: f64 = 12.66;
pub const STAR_KVA: f64 = 10_000.0;

/// Slack bus 1 feeding buses 2, 3, 4 over independent branches; the
/// device couples the three leaf buses. Each leaf is an isolated two-bus
/// system, so closed-form results apply per branch.
pub fn star_network(branches: [(f64, f64); 3], loads: [(f64, f64); 3]) -> NetworkModel {
    let mut buses = vec![Bus {
        id: 1,
        kind: BusKind::Slack,
        p_load_kw: 0.0,
        q_load_kvar: 0.0,
        v_base_kv: STAR_KV,
    }];
    let mut lines = Vec::new();
    for k in 0..3 {
        buses.push(Bus {
            id: k as u32 + 2,
            kind: BusKind::Pq,
            p_load_kw: loads[k].0,
            q_load_kvar: loads[k].1,
            v_base_kv: STAR_KV,
        });
        lines.push(Branch {
            from_bus: 1,
            to_bus: k as u32 + 2,
            r_ohm: branches[k].0,
            x_ohm: branches[k].1,
            status: BranchStatus::Closed,
        });
    }
    NetworkModel::new(buses, lines, Vec::new(), [2, 3, 4], STAR_KVA).unwrap()
}

/// Closed-form two-bus solution with a 1∠0 pu source, impedance `z` and
/// `s` consumed at the far end (all pu).
///
/// From `V₁ V₂* = |V₂|² + z S*` with `V₁ = 1`: `V₂ = u + z* S` where
/// `u = |V₂|²` is the larger root of
/// `u² + (2(rP + xQ) − 1) u + |z|²|S|² = 0`.
pub struct TwoBus {
    pub u: f64,
    pub v: Complex64,
    /// `r |S|² / u`
    pub loss: f64,
    /// `du/dP`, from implicit differentiation of the quadratic:
    /// `−(2 r u + 2 |z|² P) / (2u + 2(rP + xQ) − 1)`.
    pub du_dp: f64,
    /// `dV₂/dP = du/dP + z*`
    pub dv_dp: Complex64,
    /// `dloss/dP = r (2 P u − |S|² du/dP) / u²`
    pub dloss_dp: f64,
}

pub fn two_bus(z: Complex64, s: Complex64) -> TwoBus {
    let (r, x) = (z.re, z.im);
    let (p, q) = (s.re, s.im);
    let b = 2.0 * (r * p + x * q) - 1.0;
    let cc = z.norm_sqr() * s.norm_sqr();
    let u = (-b + (b * b - 4.0 * cc).sqrt()) / 2.0;
    let du_dp = -(2.0 * r * u + 2.0 * z.norm_sqr() * p) / (2.0 * u + b);
    TwoBus {
        u,
        v: u + z.conj() * s,
        loss: r * s.norm_sqr() / u,
        du_dp,
        dv_dp: du_dp + z.conj(),
        dloss_dp: r * (2.0 * p * u - s.norm_sqr() * du_dp) / (u * u),
    }
}

pub fn z_pu(r_ohm: f64, x_ohm: f64) -> Complex64 {
    let base = STAR_KV * STAR_KV / (STAR_KVA / 1000.0);
    Complex64::new(r_ohm / base, x_ohm / base)
}
