mod common;

use proptest::prelude::*;
use rand::Rng;
use sopflex_core::capability::{
    catalogue, chart_fixed, chart_hybrid, convexity_violations, effective_alpha, fic_fixed, fic_hybrid, grid_points,
    subset_violations, CapabilityChart, Polygon, SelectorState, SopDesign,
};

/// Direct halfplane test `|P1| ≤ a1, |P2| ≤ a2, |P1 + P2| ≤ a3`.
fn in_halfplanes(a: &[f64; 3], p: [f64; 2], tol: f64) -> bool {
    p[0].abs() <= a[0] + tol && p[1].abs() <= a[1] + tol && (p[0] + p[1]).abs() <= a[2] + tol
}

/// Vertices by pairwise intersection of the six boundary lines.
fn oracle_vertices(a: &[f64; 3]) -> Vec<[f64; 2]> {
    // lines n·p = d
    let lines = [
        ([1.0, 0.0], a[0]),
        ([1.0, 0.0], -a[0]),
        ([0.0, 1.0], a[1]),
        ([0.0, 1.0], -a[1]),
        ([1.0, 1.0], a[2]),
        ([1.0, 1.0], -a[2]),
    ];
    let mut out: Vec<[f64; 2]> = Vec::new();
    for i in 0..6 {
        for j in i + 1..6 {
            let (n1, d1): ([f64; 2], f64) = lines[i];
            let (n2, d2): ([f64; 2], f64) = lines[j];
            let det = n1[0] * n2[1] - n1[1] * n2[0];
            if det.abs() < 1e-15 {
                continue;
            }
            let p = [(d1 * n2[1] - n1[1] * d2) / det, (n1[0] * d2 - d1 * n2[0]) / det];
            if in_halfplanes(a, p, 1e-12) && !out.iter().any(|q| (q[0] - p[0]).abs() < 1e-12 && (q[1] - p[1]).abs() < 1e-12) {
                out.push(p);
            }
        }
    }
    out
}

fn oracle_fic(a: &[f64; 3]) -> [f64; 3] {
    let vs = oracle_vertices(a);
    let max = |f: &dyn Fn(&[f64; 2]) -> f64| vs.iter().map(f).fold(0.0f64, f64::max);
    [max(&|p| p[0].abs()), max(&|p| p[1].abs()), max(&|p| (p[0] + p[1]).abs())]
}

#[test]
fn fic_closed_form_matches_vertex_search() {
    let mut rng = common::rng(1);
    for _ in 0..1000 {
        let design = SopDesign::new(1.0, common::random_alpha(&mut rng)).unwrap();
        let state = SelectorState::new([rng.gen_range(0..3), rng.gen_range(0..3), rng.gen_range(0..3)]).unwrap();
        let hat = effective_alpha(&design, &state);
        let closed = fic_fixed(&hat);
        let brute = oracle_fic(&hat);
        for j in 0..3 {
            assert!((closed[j] - brute[j]).abs() <= 1e-9, "{hat:?}: {closed:?} vs {brute:?}");
        }
        assert!(fic_hybrid(&design).iter().all(|v| *v <= 0.5 + 1e-15));
    }
}

#[test]
fn chart_vertices_match_line_intersections() {
    let mut rng = common::rng(2);
    for _ in 0..500 {
        let hat = common::random_alpha(&mut rng).map(|a| a * rng.gen_range(0.2..1.5));
        let poly = chart_fixed(&hat);
        let oracle = oracle_vertices(&hat);
        for v in &poly.vertices {
            assert!(in_halfplanes(&hat, *v, 1e-12));
        }
        // every oracle vertex lies on the polygon boundary: inside, and
        // a nudge outward along some axis leaves it
        for v in &oracle {
            assert!(poly.contains(*v, 1e-9), "{hat:?} misses {v:?}");
        }
        if poly.vertices.len() >= 3 {
            assert_eq!(poly.vertices.len(), oracle.len(), "{hat:?}");
            assert!(poly.area() > 0.0);
        }
    }
}

#[test]
fn reference_fic_values_are_exact() {
    let t = 1.0 / 3.0;
    assert_eq!(fic_fixed(&[t, t, t]), [t, t, t]);
    assert_eq!(fic_fixed(&[0.35, 0.2, 0.45]), [0.35, 0.2, 0.45]);
    let d = SopDesign::new(1.0, [0.35, 0.2, 0.45]).unwrap();
    assert_eq!(fic_hybrid(&d)[1], 0.45);
    assert_eq!(fic_hybrid(&d), [0.45, 0.45, 0.45]);
}

fn grid() -> Vec<[f64; 2]> {
    grid_points(201, 0.55)
}

const TOL: f64 = 1e-9;

#[test]
fn catalogue_set_relations_on_grid() {
    let cat = catalogue(750.0);
    let chart: Vec<CapabilityChart> = cat.iter().map(|d| d.chart()).collect();
    let g = grid();
    let t = 1.0 / 3.0;
    let equal = CapabilityChart::fixed(&SopDesign::new(1.0, [t, t, 1.0 - 2.0 * t]).unwrap());
    let asym = chart_hybrid(&SopDesign::new(1.0, [0.35, 0.2, 0.45]).unwrap());
    assert_eq!(subset_violations(&equal, &asym, &g, TOL), 0);
    assert_eq!(subset_violations(&chart[1], &chart[3], &g, TOL), 0);
    assert_eq!(subset_violations(&chart[1], &chart[4], &g, TOL), 0);
    assert_eq!(subset_violations(&chart[0], &chart[2], &g, TOL), 0);
    assert_eq!(convexity_violations(&chart[2], &g, TOL), 0);
    // Case III is not contained in IV or V; Case I is not contained in IV or V either
    assert!(chart[2].contains([0.01, -0.39], TOL));
    assert!(!chart[3].contains([0.01, -0.39], TOL) && !chart[4].contains([0.01, -0.39], TOL));
    assert!(subset_violations(&chart[0], &chart[3], &g, TOL) > 0);
    assert!(subset_violations(&chart[0], &chart[4], &g, TOL) > 0);
    // the strict inclusions are strict
    assert!(subset_violations(&chart[3], &chart[1], &g, TOL) > 0);
    assert!(subset_violations(&asym, &equal, &g, TOL) > 0);
    // Case II and Case IV/V are not convex
    assert!(convexity_violations(&chart[1], &g, TOL) > 0);
}

#[test]
fn case_three_is_enlarged_hexagon() {
    let cat = catalogue(750.0);
    let chart = cat[2].chart();
    let a = [0.4; 3];
    for p in grid() {
        // skip points within tolerance of the boundary
        let margin = (a[0] - p[0].abs()).abs().min((a[1] - p[1].abs()).abs()).min((a[2] - (p[0] + p[1]).abs()).abs());
        if margin < 1e-6 {
            continue;
        }
        assert_eq!(chart.contains(p, TOL), in_halfplanes(&a, p, 0.0), "{p:?}");
    }
    assert_eq!(cat[2].max_fic(), [0.4, 0.4, 0.4]);
}

#[test]
fn degenerate_designs_give_zero_area() {
    let poly: Polygon = chart_fixed(&[0.5, 0.5, 0.0]);
    assert!(poly.area().abs() < 1e-15);
    let point = chart_fixed(&[0.0, 0.0, 0.0]);
    assert_eq!(point.vertices, vec![[0.0, 0.0]]);
    assert_eq!(fic_fixed(&[0.0, 0.0, 0.0]), [0.0; 3]);
}

#[test]
fn hybrid_chart_has_two_symmetry_lines() {
    let chart = chart_hybrid(&SopDesign::new(1.0, [0.35, 0.2, 0.45]).unwrap());
    for p in grid() {
        let inside = chart.contains(p, TOL);
        assert_eq!(inside, chart.contains([p[1], p[0]], TOL), "{p:?}");
        assert_eq!(inside, chart.contains([-p[0], -p[1]], TOL), "{p:?}");
        assert_eq!(inside, chart.contains([-p[1], -p[0]], TOL), "{p:?}");
    }
}

#[test]
fn membership_landmarks() {
    let mut rng = common::rng(3);
    for _ in 0..200 {
        let d = SopDesign::new(1.0, common::random_alpha(&mut rng)).unwrap();
        let hybrid = chart_hybrid(&d);
        assert!(hybrid.contains([0.0, 0.0], TOL) && CapabilityChart::fixed(&d).contains([0.0, 0.0], TOL));
        for p in [[0.501, 0.0], [0.0, 0.501], [-0.501, 0.0], [0.0, -0.501]] {
            assert!(!hybrid.contains(p, TOL));
        }
    }
    // reached by putting converters 1 and 3 on feeder 1 and converter 2 on feeder 2... or any
    // state with α̂₁ ≥ 0.45 and α̂₂ ≥ 0.45; checked directly against the halfplanes
    let d = SopDesign::new(1.0, [0.35, 0.2, 0.45]).unwrap();
    let witness = SelectorState::all().any(|s| in_halfplanes(&effective_alpha(&d, &s), [0.45, -0.45], 0.0));
    assert!(witness);
    assert!(chart_hybrid(&d).contains([0.45, -0.45], TOL));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn membership_agrees_with_halfplanes(w in prop::array::uniform3(0.0f64..1.0), p in prop::array::uniform2(-0.6f64..0.6)) {
        let s: f64 = w.iter().sum::<f64>().max(1e-9);
        let a = w.map(|v| v / s);
        let poly = chart_fixed(&a);
        let margin = (a[0] - p[0].abs()).abs().min((a[1] - p[1].abs()).abs()).min((a[2] - (p[0] + p[1]).abs()).abs());
        prop_assume!(margin > 1e-7);
        let chart = CapabilityChart { design: SopDesign::new(1.0, [1.0, 0.0, 0.0]).unwrap(), polygons: vec![poly] };
        prop_assert_eq!(chart.contains(p, 1e-12), in_halfplanes(&a, p, 0.0));
    }

    #[test]
    fn hybrid_chart_is_permutation_invariant(w in prop::array::uniform3(0.01f64..1.0), perm in 0usize..6) {
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let s: f64 = w.iter().sum();
        let a = [w[0] / s, w[1] / s, 1.0 - w[0] / s - w[1] / s];
        let pa = perms[perm].map(|i| a[i]);
        let c1 = chart_hybrid(&SopDesign::new(1.0, a).unwrap());
        let c2 = chart_hybrid(&SopDesign::new(1.0, [pa[0], pa[1], 1.0 - pa[0] - pa[1]]).unwrap());
        let g = grid_points(41, 0.55);
        prop_assert_eq!(subset_violations(&c1, &c2, &g, 1e-9), 0);
        prop_assert_eq!(subset_violations(&c2, &c1, &g, 1e-9), 0);
        let (f1, f2) = (fic_hybrid(&c1.design), fic_hybrid(&c2.design));
        for j in 0..3 {
            prop_assert!((f1[j] - f2[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn hybrid_contains_fixed_and_bounds_fic(w in prop::array::uniform3(0.0f64..1.0)) {
        let s: f64 = w.iter().sum::<f64>();
        prop_assume!(s > 1e-6);
        let a = [w[0] / s, w[1] / s, (1.0 - w[0] / s - w[1] / s).max(0.0)];
        let d = SopDesign::new(1.0, a).unwrap();
        let g = grid_points(41, 0.55);
        prop_assert_eq!(subset_violations(&CapabilityChart::fixed(&d), &chart_hybrid(&d), &g, 1e-9), 0);
        let hybrid = fic_hybrid(&d);
        let fixed = fic_fixed(&a);
        for j in 0..3 {
            prop_assert!(hybrid[j] >= fixed[j] && hybrid[j] <= 0.5 + 1e-15);
        }
    }

    #[test]
    fn larger_effective_sizes_enlarge_the_chart(a in prop::array::uniform3(0.0f64..0.6), extra in prop::array::uniform3(0.0f64..0.2)) {
        let bigger = [a[0] + extra[0], a[1] + extra[1], a[2] + extra[2]];
        let fa = fic_fixed(&a);
        let fb = fic_fixed(&bigger);
        for j in 0..3 {
            prop_assert!(fb[j] >= fa[j]);
        }
        let small = chart_fixed(&a);
        let big = chart_fixed(&bigger);
        for v in &small.vertices {
            prop_assert!(in_halfplanes(&bigger, *v, 1e-12));
        }
        prop_assert!(big.area() >= small.area() - 1e-15);
    }
}
