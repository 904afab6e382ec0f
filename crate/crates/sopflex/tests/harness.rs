use std::sync::OnceLock;

use sopflex::harness::{compare_designs, run_day, Comparison};
use sopflex::profiles::bundled_profiles;
use sopflex::report;
use sopflex_core::capability::{catalogue, grid_points, subset_violations, NamedDesign};
use sopflex_core::network::builtin_33bus;
use sopflex_core::study::{HourProfile, ScenarioProfiles};

const KAPPA: f64 = 0.01;

/// Case II and Case V over the bundled day; II's chart lies inside V's.
fn pair() -> &'static Comparison {
    static CMP: OnceLock<Comparison> = OnceLock::new();
    CMP.get_or_init(|| {
        let cases = catalogue(750.0);
        let designs = vec![cases[1].clone(), cases[4].clone()];
        compare_designs(&builtin_33bus(), &designs, &bundled_profiles(), KAPPA).unwrap()
    })
}

#[test]
fn larger_chart_never_loses_an_hour() {
    let cmp = pair();
    let grid = grid_points(201, 0.55);
    assert_eq!(subset_violations(&cmp.days[0].design.chart(), &cmp.days[1].design.chart(), &grid, 1e-9), 0);
    for (small, large) in cmp.days[0].hours.iter().zip(&cmp.days[1].hours) {
        assert_eq!(small.hour, large.hour);
        assert!(
            large.solution.objective() <= small.solution.objective() + 1e-6 * 750.0,
            "hour {}: {} > {}",
            small.hour,
            large.solution.objective(),
            small.solution.objective()
        );
    }
    assert!(cmp.days[1].loss_reduction_kwh() >= cmp.days[0].loss_reduction_kwh() - 24.0 * 0.01);
}

#[test]
fn every_hour_is_verified() {
    for day in &pair().days {
        assert_eq!(day.hours.iter().map(|h| h.hour).collect::<Vec<_>>(), (1..=24).collect::<Vec<u32>>());
        for h in &day.hours {
            assert!(h.solution.objective() <= h.identity_objective + 1e-9 * 750.0);
            assert!(h.optimized_loss_kw <= h.baseline_loss_kw * 1.005, "hour {}", h.hour);
            assert!(h.surrogate_error() < 0.01, "hour {}: {}", h.hour, h.surrogate_error());
            assert!(h.solution.cone_residual <= 1e-5);
            assert!(h.solution.mip_gap_rel <= 1e-4 && h.solution.gap_closed);
        }
        let eta = day.utilization();
        assert!((0.0..=1.0).contains(&eta));
        let idle = day.hours.iter().all(|h| h.solution.p_inj == [0.0; 3]);
        assert_eq!(eta == 0.0, idle);
        let kwh: f64 = day.hours.iter().map(|h| h.baseline_loss_kw - h.optimized_loss_kw).sum();
        assert_eq!(day.loss_reduction_kwh(), kwh);
    }
}

#[test]
fn single_design_is_its_own_reference() {
    let cases = catalogue(750.0);
    let day = ScenarioProfiles::new(bundled_profiles().hours).unwrap();
    let cmp = compare_designs(&builtin_33bus(), &cases[2..3], &day, KAPPA).unwrap();
    let rows = cmp.summary();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].loss_reduction_pct, 100.0);
    assert_eq!(rows[0].utilization_pct, 100.0);
}

#[test]
fn fixed_design_keeps_one_state_all_day() {
    let cases = catalogue(750.0);
    let day = run_day(&builtin_33bus(), &cases[0], &bundled_profiles(), KAPPA).unwrap();
    let fic = day.fic_trajectory();
    assert!(fic.iter().all(|f| *f == fic[0]));
    assert!(day.hours.iter().all(|h| h.solution.objective() == h.identity_objective));
    assert!(fic[0].iter().all(|f| (f - 250.0).abs() < 1e-9));
}

#[test]
fn idle_device_matches_baseline() {
    // no generation and every transfer priced out by a huge converter loss
    let mut net = builtin_33bus();
    net.generators.clear();
    let hours: Vec<HourProfile> = (1..=24)
        .map(|hour| HourProfile {
            hour,
            demand_pu: 0.7,
            wind_cf: 0.0,
            pv_cf: 0.0,
        })
        .collect();
    let day = ScenarioProfiles::new(hours).unwrap();
    let design = NamedDesign {
        name: String::from("lossy"),
        ..catalogue(750.0)[4].clone()
    };
    let r = run_day(&net, &design, &day, 0.9).unwrap();
    for h in &r.hours {
        assert_eq!(h.solution.p_inj, [0.0; 3]);
        assert_eq!(h.verified_network_loss_kw, h.baseline_loss_kw);
        assert_eq!(h.loss_reduction_kw(), 0.0);
    }
    assert_eq!(r.utilization(), 0.0);
}

#[test]
fn report_has_every_file_and_the_footer() {
    let files = report::render(pair());
    let names: Vec<&str> = files.iter().map(|(n, _)| n.as_str()).collect();
    for expected in [
        "summary.csv",
        "hourly_losses.csv",
        "powers_case_ii.csv",
        "fic_case_v.csv",
        "charts.svg",
        "loss_ratio.svg",
    ] {
        assert!(names.contains(&expected), "{expected} missing from {names:?}");
    }
    let summary = String::from_utf8(files[0].1.clone()).unwrap();
    assert!(summary.starts_with("design,alpha_1"));
    assert!(summary.contains("157.3 to 178.2 kWh/day") && summary.contains("60.4% to 82.0%"));
    assert_eq!(summary.lines().filter(|l| l.starts_with("Case ")).count(), 2);
    let hourly = String::from_utf8(files[1].1.clone()).unwrap();
    assert_eq!(hourly.lines().count(), 25);
    for (name, bytes) in &files {
        if name.ends_with(".svg") {
            let s = std::str::from_utf8(bytes).unwrap();
            assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"), "{name}");
        }
    }
}
