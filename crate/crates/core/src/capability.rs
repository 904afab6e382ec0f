//! Converter sizing, feeder selector states, feeder interconnection
//! capacity (FIC) and capability charts.
//!
//! Powers here are per-unit of the total converter rating `P⁺`. A device
//! with converter fractions `α` connected through selector state `b` can
//! move `|P_j| ≤ α̂_j` on feeder `j`, where `α̂_j` sums the converters
//! attached to that feeder, and the DC bus forces `P₁ + P₂ + P₃ = 0`.
//! Projected onto `(P₁, P₂)` this is the six-halfplane polygon
//! `|P₁| ≤ α̂₁, |P₂| ≤ α̂₂, |P₁ + P₂| ≤ α̂₃`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

// shadowed by std's inherent methods whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::DesignError;

/// Tolerance on `Σα = 1`.
pub const ALPHA_SUM_TOL: f64 = 1e-12;

/// Total rating plus the fraction of it held by each converter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SopDesign {
    pub p_plus_kva: f64,
    pub alpha: [f64; 3],
}

impl SopDesign {
    pub fn new(p_plus_kva: f64, alpha: [f64; 3]) -> Result<Self, DesignError> {
        let d = Self { p_plus_kva, alpha };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), DesignError> {
        if !(self.p_plus_kva.is_finite() && self.p_plus_kva > 0.0) {
            return Err(DesignError::BadRating(self.p_plus_kva));
        }
        let sum: f64 = self.alpha.iter().sum();
        if self.alpha.iter().any(|a| !(a.is_finite() && *a >= 0.0)) || (sum - 1.0).abs() > ALPHA_SUM_TOL {
            return Err(DesignError::BadAlpha(self.alpha));
        }
        Ok(())
    }

    /// Converter ratings in kVA.
    pub fn converter_ratings(&self) -> [f64; 3] {
        self.alpha.map(|a| a * self.p_plus_kva)
    }
}

/// Feeder selector switch positions.
///
/// Each converter is wired to exactly one feeder. A converter that should
/// be idle stays connected and carries zero power, which is equivalent to
/// opening every switch in its bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SelectorState {
    feeder_of: [usize; 3],
}

impl SelectorState {
    pub const IDENTITY: Self = Self { feeder_of: [0, 1, 2] };

    /// `feeder_of[i]` is the (0-based) feeder converter `i` connects to.
    pub fn new(feeder_of: [usize; 3]) -> Result<Self, DesignError> {
        for (i, f) in feeder_of.iter().enumerate() {
            if *f > 2 {
                return Err(DesignError::BadSelector(i));
            }
        }
        Ok(Self { feeder_of })
    }

    /// From the binary matrix `b[i][j] = 1` iff converter `i` feeds feeder `j`.
    pub fn from_matrix(b: &[[u8; 3]; 3]) -> Result<Self, DesignError> {
        let mut feeder_of = [0; 3];
        for (i, row) in b.iter().enumerate() {
            if row.iter().any(|&v| v > 1) || row.iter().map(|&v| v as u32).sum::<u32>() != 1 {
                return Err(DesignError::BadSelector(i));
            }
            feeder_of[i] = row.iter().position(|&v| v == 1).expect("row sums to one");
        }
        Ok(Self { feeder_of })
    }

    pub fn matrix(&self) -> [[u8; 3]; 3] {
        let mut b = [[0; 3]; 3];
        for (i, &f) in self.feeder_of.iter().enumerate() {
            b[i][f] = 1;
        }
        b
    }

    pub fn feeder_of(&self) -> [usize; 3] {
        self.feeder_of
    }

    pub fn connected(&self, converter: usize, feeder: usize) -> bool {
        self.feeder_of[converter] == feeder
    }

    /// Number of converters not on their home feeder (converter `i` on feeder `i`).
    pub fn moves_from_identity(&self) -> usize {
        self.feeder_of.iter().enumerate().filter(|(i, f)| *i != **f).count()
    }

    /// All 27 states, ordered lexicographically by `feeder_of`.
    pub fn all() -> impl Iterator<Item = SelectorState> {
        (0..27usize).map(|k| Self {
            feeder_of: [k / 9, (k / 3) % 3, k % 3],
        })
    }
}

impl fmt::Display for SelectorState {
    /// 1-based feeder of each converter, e.g. `1,2,3` for the identity.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.feeder_of;
        write!(f, "{},{},{}", a + 1, b + 1, c + 1)
    }
}

impl Serialize for SelectorState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.matrix().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SelectorState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let b = <[[u8; 3]; 3]>::deserialize(d)?;
        Self::from_matrix(&b).map_err(serde::de::Error::custom)
    }
}

/// Converter capacity seen by each feeder under `state` (pu).
pub fn effective_alpha(design: &SopDesign, state: &SelectorState) -> [f64; 3] {
    let mut hat = [0.0; 3];
    for (i, &f) in state.feeder_of.iter().enumerate() {
        hat[f] += design.alpha[i];
    }
    hat
}

/// FIC of a fixed configuration: `min(α̂_j, Σ_{i≠j} α̂_i)`.
pub fn fic_fixed(alpha_hat: &[f64; 3]) -> [f64; 3] {
    core::array::from_fn(|j| {
        let others: f64 = (0..3).filter(|&i| i != j).map(|i| alpha_hat[i]).sum();
        alpha_hat[j].min(others)
    })
}

/// Best FIC per feeder over every selector state.
pub fn fic_hybrid(design: &SopDesign) -> [f64; 3] {
    SelectorState::all().fold([0.0; 3], |best, s| {
        let f = fic_fixed(&effective_alpha(design, &s));
        core::array::from_fn(|j| best[j].max(f[j]))
    })
}

/// A convex polygon in the `(P₁, P₂)` plane, vertices counter-clockwise.
/// Zero-area polygons (segments, a single point) are allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<[f64; 2]>,
}

/// Halfplane `n · p ≤ d`.
#[derive(Debug, Clone, Copy)]
struct Halfplane {
    n: [f64; 2],
    d: f64,
}

const ON_LINE: f64 = 1e-15;

impl Polygon {
    fn square(half: f64) -> Self {
        Self {
            vertices: vec![[-half, -half], [half, -half], [half, half], [-half, half]],
        }
    }

    fn clip(&self, h: Halfplane) -> Self {
        let vs = &self.vertices;
        let mut out = Vec::with_capacity(vs.len() + 1);
        let side = |p: &[f64; 2]| h.n[0] * p[0] + h.n[1] * p[1] - h.d;
        for k in 0..vs.len() {
            let a = vs[k];
            let b = vs[(k + 1) % vs.len()];
            let (da, db) = (side(&a), side(&b));
            if da <= ON_LINE {
                out.push(a);
            }
            if (da > ON_LINE && db < -ON_LINE) || (da < -ON_LINE && db > ON_LINE) {
                let t = da / (da - db);
                out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            }
        }
        let mut poly = Self { vertices: out };
        poly.dedup();
        poly
    }

    fn dedup(&mut self) {
        let close = |a: &[f64; 2], b: &[f64; 2]| (a[0] - b[0]).abs() <= 1e-12 && (a[1] - b[1]).abs() <= 1e-12;
        let mut out: Vec<[f64; 2]> = Vec::with_capacity(self.vertices.len());
        for v in &self.vertices {
            if out.last().map_or(true, |l| !close(l, v)) {
                out.push(*v);
            }
        }
        while out.len() > 1 && close(&out[0], out.last().unwrap()) {
            out.pop();
        }
        // collapse collinear runs so a segment is stored as two endpoints
        if out.len() > 2 && self_area(&out).abs() <= 1e-15 {
            let (mut lo, mut hi) = (out[0], out[0]);
            for v in &out {
                if (v[0], v[1]) < (lo[0], lo[1]) {
                    lo = *v;
                }
                if (v[0], v[1]) > (hi[0], hi[1]) {
                    hi = *v;
                }
            }
            out = if close(&lo, &hi) { vec![lo] } else { vec![hi, lo] };
        }
        self.vertices = out;
    }

    /// Signed area (positive for counter-clockwise order).
    pub fn area(&self) -> f64 {
        self_area(&self.vertices)
    }

    /// True if `p` is within `tol` of the polygon.
    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        let vs = &self.vertices;
        match vs.len() {
            0 => false,
            1 => dist(vs[0], p) <= tol,
            2 => segment_distance(vs[0], vs[1], p) <= tol,
            _ => {
                let inside = (0..vs.len()).all(|k| {
                    let a = vs[k];
                    let b = vs[(k + 1) % vs.len()];
                    let e = [b[0] - a[0], b[1] - a[1]];
                    let len = (e[0] * e[0] + e[1] * e[1]).sqrt();
                    (e[0] * (p[1] - a[1]) - e[1] * (p[0] - a[0])) / len >= -tol
                });
                inside
            }
        }
    }
}

fn self_area(vs: &[[f64; 2]]) -> f64 {
    let n = vs.len();
    (0..n)
        .map(|k| {
            let a = vs[k];
            let b = vs[(k + 1) % n];
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
        * 0.5
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn segment_distance(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let e = [b[0] - a[0], b[1] - a[1]];
    let l2 = e[0] * e[0] + e[1] * e[1];
    let t = if l2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * e[0] + (p[1] - a[1]) * e[1]) / l2).clamp(0.0, 1.0)
    };
    dist([a[0] + t * e[0], a[1] + t * e[1]], p)
}

/// Capability polygon of a fixed configuration with effective sizes `alpha_hat`.
pub fn chart_fixed(alpha_hat: &[f64; 3]) -> Polygon {
    let [a1, a2, a3] = *alpha_hat;
    let halfplanes = [
        Halfplane { n: [1.0, 0.0], d: a1 },
        Halfplane { n: [-1.0, 0.0], d: a1 },
        Halfplane { n: [0.0, 1.0], d: a2 },
        Halfplane { n: [0.0, -1.0], d: a2 },
        Halfplane { n: [1.0, 1.0], d: a3 },
        Halfplane { n: [-1.0, -1.0], d: a3 },
    ];
    halfplanes
        .iter()
        .fold(Polygon::square(2.0), |poly, h| poly.clip(*h))
}

/// Union of capability polygons (one per distinct selector configuration).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapabilityChart {
    pub design: SopDesign,
    pub polygons: Vec<Polygon>,
}

impl CapabilityChart {
    /// Chart of a device without selector switches (identity wiring).
    pub fn fixed(design: &SopDesign) -> Self {
        Self {
            design: *design,
            polygons: vec![chart_fixed(&design.alpha)],
        }
    }

    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        self.polygons.iter().any(|poly| poly.contains(p, tol))
    }

    /// Every vertex of every constituent polygon.
    pub fn vertices(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.polygons.iter().flat_map(|p| p.vertices.iter().copied())
    }
}

/// Union over all 27 selector states, deduplicated by effective sizes.
pub fn chart_hybrid(design: &SopDesign) -> CapabilityChart {
    let mut seen: Vec<[f64; 3]> = Vec::new();
    let mut polygons = Vec::new();
    for s in SelectorState::all() {
        let hat = effective_alpha(design, &s);
        if seen.iter().any(|h| h.iter().zip(&hat).all(|(a, b)| (a - b).abs() <= 1e-15)) {
            continue;
        }
        seen.push(hat);
        polygons.push(chart_fixed(&hat));
    }
    CapabilityChart {
        design: *design,
        polygons,
    }
}

/// Membership of `p` (pu) in a chart, within `tol`.
pub fn contains(chart: &CapabilityChart, p: [f64; 2], tol: f64) -> bool {
    chart.contains(p, tol)
}

/// Convex hull (counter-clockwise, Andrew's monotone chain).
pub fn convex_hull(points: &[[f64; 2]]) -> Polygon {
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return Polygon { vertices: pts };
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Vec<[f64; 2]> = if pass == 0 { pts.clone() } else { pts.iter().rev().copied().collect() };
        for p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 1e-15 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    let mut poly = Polygon { vertices: hull };
    poly.dedup();
    poly
}

/// Points of an `n × n` grid over `[-half, half]²`, row by row in `P₂`.
pub fn grid_points(n: usize, half: f64) -> Vec<[f64; 2]> {
    let step = if n > 1 { 2.0 * half / (n - 1) as f64 } else { 0.0 };
    let coord = |k: usize| -half + step * k as f64;
    (0..n * n).map(|k| [coord(k % n), coord(k / n)]).collect()
}

/// Grid points inside `inner` but outside `outer`.
pub fn subset_violations(inner: &CapabilityChart, outer: &CapabilityChart, grid: &[[f64; 2]], tol: f64) -> usize {
    grid.iter()
        .filter(|p| inner.contains(**p, tol) && !outer.contains(**p, tol))
        .count()
}

/// Grid points inside the convex hull of `chart` but outside the chart
/// itself (zero for a convex chart).
pub fn convexity_violations(chart: &CapabilityChart, grid: &[[f64; 2]], tol: f64) -> usize {
    let pts: Vec<[f64; 2]> = chart.vertices().collect();
    let hull = convex_hull(&pts);
    grid.iter()
        .filter(|p| hull.contains(**p, -tol) && !chart.contains(**p, tol))
        .count()
}

/// A named entry of the design catalogue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedDesign {
    pub name: String,
    #[serde(flatten)]
    pub design: SopDesign,
    /// Whether the device has feeder selector switches. Without them the
    /// converters stay on their home feeders.
    #[serde(default = "default_hybrid")]
    pub hybrid: bool,
}

fn default_hybrid() -> bool {
    true
}

impl NamedDesign {
    pub fn chart(&self) -> CapabilityChart {
        if self.hybrid {
            chart_hybrid(&self.design)
        } else {
            CapabilityChart::fixed(&self.design)
        }
    }

    pub fn max_fic(&self) -> [f64; 3] {
        if self.hybrid {
            fic_hybrid(&self.design)
        } else {
            fic_fixed(&self.design.alpha)
        }
    }
}

/// The five-design catalogue for a device rated `p_plus_kva`.
///
/// Case I is the equally sized device without selector switches and Case
/// II the two-converter device. Cases III–V are reconstructions chosen to
/// satisfy the catalogue's set relations: III = (0.4, 0.4, 0.2) has a
/// convex chart that is Case I's hexagon enlarged by 6/5; IV = (0.5,
/// 0.25, 0.25) and V = (0.5, 0.3, 0.2) both contain Case II, and V's
/// per-feeder FIC takes four distinct values across selector states.
pub fn catalogue(p_plus_kva: f64) -> Vec<NamedDesign> {
    let third = 1.0 / 3.0;
    let entries: [(&str, [f64; 3], bool); 5] = [
        ("Case I", [third, third, 1.0 - 2.0 * third], false),
        ("Case II", [0.5, 0.5, 0.0], true),
        ("Case III", [0.4, 0.4, 0.2], true),
        ("Case IV", [0.5, 0.25, 0.25], true),
        ("Case V", [0.5, 0.3, 0.2], true),
    ];
    entries
        .iter()
        .map(|(name, alpha, hybrid)| NamedDesign {
            name: String::from(*name),
            design: SopDesign::new(p_plus_kva, *alpha).expect("catalogue designs are valid"),
            hybrid: *hybrid,
        })
        .collect()
}
