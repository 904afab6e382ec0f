//! Radial distribution network data model and the bundled 33-bus feeder.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::NetworkError;

pub type BusId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Slack,
    Pq,
}

/// A network bus carrying a constant-power load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: BusId,
    pub kind: BusKind,
    pub p_load_kw: f64,
    pub q_load_kvar: f64,
    /// Line-to-line voltage base.
    pub v_base_kv: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchStatus {
    Closed,
    Open,
}

/// Series impedance between two buses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from_bus: BusId,
    pub to_bus: BusId,
    pub r_ohm: f64,
    pub x_ohm: f64,
    pub status: BranchStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub bus: BusId,
    pub p_rated_kw: f64,
    /// Name of the capacity-factor series that drives this unit.
    pub profile_key: String,
}

/// A validated radial feeder with the three soft-open-point coupling buses.
///
/// Construct through [`NetworkModel::new`] or call [`NetworkModel::validate`]
/// after deserializing; the solvers assume every invariant holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
    /// Feeder coupling points of the device, in feeder order.
    pub sop_buses: [BusId; 3],
    pub s_base_kva: f64,
}

/// Closed-branch spanning tree rooted at the slack bus.
#[derive(Debug, Clone)]
pub struct RadialTopology {
    /// Bus positions in breadth-first order from the slack.
    pub order: Vec<usize>,
    /// For each bus position: parent bus position and the branch index
    /// connecting them (`None` for the slack).
    pub parent: Vec<Option<(usize, usize)>>,
}

impl NetworkModel {
    pub fn new(
        buses: Vec<Bus>,
        branches: Vec<Branch>,
        generators: Vec<Generator>,
        sop_buses: [BusId; 3],
        s_base_kva: f64,
    ) -> Result<Self, NetworkError> {
        let net = Self {
            buses,
            branches,
            generators,
            sop_buses,
            s_base_kva,
        };
        net.validate()?;
        Ok(net)
    }

    /// Check every structural invariant, including radiality.
    pub fn validate(&self) -> Result<(), NetworkError> {
        if self.buses.is_empty() {
            return Err(NetworkError::Invalid(String::from("network has no buses")));
        }
        if !(self.s_base_kva.is_finite() && self.s_base_kva > 0.0) {
            return Err(NetworkError::Invalid(String::from("s_base_kva must be positive")));
        }
        let mut seen = BTreeMap::new();
        for (pos, bus) in self.buses.iter().enumerate() {
            if seen.insert(bus.id, pos).is_some() {
                return Err(NetworkError::Invalid(alloc::format!("duplicate bus id {}", bus.id)));
            }
            if !(bus.p_load_kw.is_finite() && bus.q_load_kvar.is_finite()) {
                return Err(NetworkError::Invalid(alloc::format!("non-finite load at bus {}", bus.id)));
            }
            if !(bus.v_base_kv.is_finite() && bus.v_base_kv > 0.0) {
                return Err(NetworkError::Invalid(alloc::format!(
                    "non-positive voltage base at bus {}",
                    bus.id
                )));
            }
        }
        match self.buses.iter().filter(|b| b.kind == BusKind::Slack).count() {
            0 => return Err(NetworkError::Invalid(String::from("no slack bus"))),
            1 => {}
            _ => return Err(NetworkError::Invalid(String::from("multiple slack buses"))),
        }
        for br in &self.branches {
            for end in [br.from_bus, br.to_bus] {
                if !seen.contains_key(&end) {
                    return Err(NetworkError::Invalid(alloc::format!(
                        "branch {}-{} references unknown bus {}",
                        br.from_bus,
                        br.to_bus,
                        end
                    )));
                }
            }
            if br.from_bus == br.to_bus {
                return Err(NetworkError::Invalid(alloc::format!("self-loop at bus {}", br.from_bus)));
            }
            if !(br.r_ohm.is_finite() && br.x_ohm.is_finite() && br.r_ohm >= 0.0) {
                return Err(NetworkError::Invalid(alloc::format!(
                    "branch {}-{} has invalid impedance",
                    br.from_bus,
                    br.to_bus
                )));
            }
        }
        for g in &self.generators {
            if !seen.contains_key(&g.bus) {
                return Err(NetworkError::Invalid(alloc::format!(
                    "generator references unknown bus {}",
                    g.bus
                )));
            }
            if !(g.p_rated_kw.is_finite() && g.p_rated_kw >= 0.0) {
                return Err(NetworkError::Invalid(alloc::format!(
                    "generator at bus {} has negative rating",
                    g.bus
                )));
            }
        }
        let [a, b, c] = self.sop_buses;
        if a == b || b == c || a == c {
            return Err(NetworkError::Invalid(String::from("sop_buses must be distinct")));
        }
        for s in self.sop_buses {
            if !seen.contains_key(&s) {
                return Err(NetworkError::Invalid(alloc::format!("sop bus {} does not exist", s)));
            }
        }
        self.topology().map(|_| ())
    }

    /// Position of a bus id in `buses`.
    pub fn bus_index(&self, id: BusId) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn slack_index(&self) -> usize {
        self.buses
            .iter()
            .position(|b| b.kind == BusKind::Slack)
            .expect("validated network has a slack bus")
    }

    /// Positions of the three device buses.
    pub fn sop_indices(&self) -> [usize; 3] {
        self.sop_buses
            .map(|id| self.bus_index(id).expect("validated network has its sop buses"))
    }

    pub fn closed_branches(&self) -> impl Iterator<Item = (usize, &Branch)> {
        self.branches
            .iter()
            .enumerate()
            .filter(|(_, b)| b.status == BranchStatus::Closed)
    }

    /// Build the spanning tree of closed branches, failing if the closed
    /// graph is meshed or leaves any bus de-energized.
    pub fn topology(&self) -> Result<RadialTopology, NetworkError> {
        let n = self.buses.len();
        let index: BTreeMap<BusId, usize> =
            self.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        let mut closed = 0usize;
        for (k, br) in self.closed_branches() {
            let f = index[&br.from_bus];
            let t = index[&br.to_bus];
            adj[f].push((t, k));
            adj[t].push((f, k));
            closed += 1;
        }
        let slack = self.slack_index();
        let mut parent = vec![None; n];
        let mut visited = vec![false; n];
        let mut order = Vec::with_capacity(n);
        visited[slack] = true;
        order.push(slack);
        let mut head = 0;
        while head < order.len() {
            let u = order[head];
            head += 1;
            for &(v, k) in &adj[u] {
                if !visited[v] {
                    visited[v] = true;
                    parent[v] = Some((u, k));
                    order.push(v);
                }
            }
        }
        if order.len() != n {
            let lost = (0..n).find(|&i| !visited[i]).map(|i| self.buses[i].id).unwrap_or(0);
            return Err(NetworkError::Invalid(alloc::format!(
                "closed branches do not connect bus {} to the slack",
                lost
            )));
        }
        if closed != n - 1 {
            return Err(NetworkError::Invalid(alloc::format!(
                "network is not radial: {} closed branches for {} buses",
                closed,
                n
            )));
        }
        Ok(RadialTopology { order, parent })
    }

    /// Branch series impedance in per-unit on the system base.
    pub fn branch_impedance_pu(&self, branch: &Branch) -> (f64, f64) {
        let v = self.buses[self.bus_index(branch.from_bus).expect("valid branch")].v_base_kv;
        // kV² / MVA
        let z_base = v * v / (self.s_base_kva / 1000.0);
        (branch.r_ohm / z_base, branch.x_ohm / z_base)
    }

    /// Copy of this network with every load multiplied by `factor`.
    pub fn with_load_scale(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for b in &mut out.buses {
            b.p_load_kw *= factor;
            b.q_load_kvar *= factor;
        }
        out
    }

    pub fn total_load_kw(&self) -> f64 {
        self.buses.iter().map(|b| b.p_load_kw).sum()
    }
}

// (from, to, r Ω, x Ω, P kW at `to`, Q kVAr at `to`)
const BARAN_WU_33: [(u32, u32, f64, f64, f64, f64); 32] = [
    (1, 2, 0.0922, 0.0470, 100.0, 60.0),
    (2, 3, 0.4930, 0.2511, 90.0, 40.0),
    (3, 4, 0.3660, 0.1864, 120.0, 80.0),
    (4, 5, 0.3811, 0.1941, 60.0, 30.0),
    (5, 6, 0.8190, 0.7070, 60.0, 20.0),
    (6, 7, 0.1872, 0.6188, 200.0, 100.0),
    (7, 8, 0.7114, 0.2351, 200.0, 100.0),
    (8, 9, 1.0300, 0.7400, 60.0, 20.0),
    (9, 10, 1.0440, 0.7400, 60.0, 20.0),
    (10, 11, 0.1966, 0.0650, 45.0, 30.0),
    (11, 12, 0.3744, 0.1238, 60.0, 35.0),
    (12, 13, 1.4680, 1.1550, 60.0, 35.0),
    (13, 14, 0.5416, 0.7129, 120.0, 80.0),
    (14, 15, 0.5910, 0.5260, 60.0, 10.0),
    (15, 16, 0.7463, 0.5450, 60.0, 20.0),
    (16, 17, 1.2890, 1.7210, 60.0, 20.0),
    (17, 18, 0.7320, 0.5740, 90.0, 40.0),
    (2, 19, 0.1640, 0.1565, 90.0, 40.0),
    (19, 20, 1.5042, 1.3554, 90.0, 40.0),
    (20, 21, 0.4095, 0.4784, 90.0, 40.0),
    (21, 22, 0.7089, 0.9373, 90.0, 40.0),
    (3, 23, 0.4512, 0.3083, 90.0, 50.0),
    (23, 24, 0.8980, 0.7091, 420.0, 200.0),
    (24, 25, 0.8960, 0.7011, 420.0, 200.0),
    (6, 26, 0.2030, 0.1034, 60.0, 25.0),
    (26, 27, 0.2842, 0.1447, 60.0, 25.0),
    (27, 28, 1.0590, 0.9337, 60.0, 20.0),
    (28, 29, 0.8042, 0.7006, 120.0, 70.0),
    (29, 30, 0.5075, 0.2585, 200.0, 600.0),
    (30, 31, 0.9744, 0.9630, 150.0, 70.0),
    (31, 32, 0.3105, 0.3619, 210.0, 100.0),
    (32, 33, 0.3410, 0.5302, 60.0, 40.0),
];

/// The 12.66 kV, 33-bus radial feeder of Baran & Wu with a 1.4 MW wind
/// farm at bus 31, a 1.2 MW PV park at bus 16 and the device coupling
/// buses 33, 18 and 25. The standard 2300 kVAr reactive load is retained.
pub fn builtin_33bus() -> NetworkModel {
    const V_BASE_KV: f64 = 12.66;
    let mut buses = vec![Bus {
        id: 1,
        kind: BusKind::Slack,
        p_load_kw: 0.0,
        q_load_kvar: 0.0,
        v_base_kv: V_BASE_KV,
    }];
    let mut branches = Vec::with_capacity(BARAN_WU_33.len());
    for &(from, to, r, x, p, q) in &BARAN_WU_33 {
        buses.push(Bus {
            id: to,
            kind: BusKind::Pq,
            p_load_kw: p,
            q_load_kvar: q,
            v_base_kv: V_BASE_KV,
        });
        branches.push(Branch {
            from_bus: from,
            to_bus: to,
            r_ohm: r,
            x_ohm: x,
            status: BranchStatus::Closed,
        });
    }
    buses.sort_by_key(|b| b.id);
    let generators = vec![
        Generator {
            bus: 31,
            p_rated_kw: 1400.0,
            profile_key: String::from("wind"),
        },
        Generator {
            bus: 16,
            p_rated_kw: 1200.0,
            profile_key: String::from("pv"),
        },
    ];
    NetworkModel::new(buses, branches, generators, [33, 18, 25], 10_000.0)
        .expect("bundled 33-bus data is valid")
}
