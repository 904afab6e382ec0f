//! Command-line front end. Failures print one JSON line on stderr,
//! `{"error":"<kind>","message":"..."}`, and exit with 2 for usage errors
//! or 1 for computation errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sopflex_core::capability::{
    chart_hybrid, effective_alpha, fic_fixed, fic_hybrid, CapabilityChart, NamedDesign, SelectorState,
    SopDesign,
};
use sopflex_core::dispatch::{
    solve_enumerate, solve_micp, validate_solution, DispatchProblem, DispatchSolution, Violation,
};
use sopflex_core::lossmodel::{fit_loss_model, max_relative_error, FitBox, FitMethod, QuadLossModel};
use sopflex_core::network::{builtin_33bus, NetworkModel};
use sopflex_core::powerflow::{solve_newton, solve_sweep, InjectionSet, PowerFlowOptions};

use crate::error::{Error, Result};
use crate::harness::compare_designs;
use crate::io::{self, load_json, to_json, write_atomic, write_dir_atomic};
use crate::profiles::{bundled_profiles, load_profiles};
use crate::report;

/// Design catalogue shipped with the tool (Cases I to V at 750 kVA).
pub const BUNDLED_CASES: &str = include_str!("../data/cases.json");

#[derive(Debug, Parser)]
#[command(name = "sopflex", version, about = "Hybrid multi-terminal soft open point toolkit")]
struct Cli {
    /// Seed for every randomized step (validation samples).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Network files: validation and the bundled 33-bus feeder.
    Net {
        #[command(subcommand)]
        action: NetAction,
    },
    /// Solve the AC power flow and write the solution as JSON.
    Powerflow {
        net: PathBuf,
        /// Extra injections: {"injections": [{"bus", "p_kw", "q_kvar"}]}.
        #[arg(long)]
        inj: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = PfMethod::Newton)]
        method: PfMethod,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the quadratic network-loss model in the three device powers.
    FitLoss {
        net: PathBuf,
        /// Half-width of the fitting box per feeder (kW).
        #[arg(long = "box")]
        half_width: f64,
        /// Base injections to fit around (device idle).
        #[arg(long)]
        inj: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FitKind::LeastSquares)]
        method: FitKind,
        /// Random box points for the printed accuracy check (0 skips it).
        #[arg(long, default_value_t = 100)]
        validate: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the per-feeder interconnection capacity (pu of the rating).
    Fic {
        #[arg(long, value_parser = parse_triple)]
        alpha: [f64; 3],
        /// Best over all selector states.
        #[arg(long, conflicts_with = "state")]
        hybrid: bool,
        /// Selector state: index 0-26 or 1-based feeders such as 2,2,3.
        #[arg(long, value_parser = parse_state)]
        state: Option<SelectorState>,
    },
    /// Write the capability chart as CSV vertices or SVG.
    Chart {
        #[arg(long, value_parser = parse_triple)]
        alpha: [f64; 3],
        #[arg(long)]
        hybrid: bool,
        /// Output path ending in .csv or .svg.
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the loss-minimizing dispatch for one loss model.
    Dispatch {
        /// Design JSON: {"p_plus_kva", "alpha", optional "name" and "hybrid"}.
        #[arg(long)]
        design: PathBuf,
        /// Loss model JSON as written by fit-loss.
        #[arg(long)]
        loss: PathBuf,
        #[arg(long)]
        kappa: f64,
        /// Freeze the selector: index 0-26 or 1-based feeders such as 2,2,3.
        #[arg(long, value_parser = parse_state)]
        fixed_state: Option<SelectorState>,
        #[arg(long, value_enum, default_value_t = DispatchMethod::Micp)]
        method: DispatchMethod,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the daily design comparison and write a report directory.
    Simulate {
        /// `33bus` for the bundled feeder or a network file.
        #[arg(long, default_value = "33bus")]
        net: String,
        /// Design list JSON; the bundled catalogue when omitted.
        #[arg(long)]
        designs: Option<PathBuf>,
        /// Hourly profile CSV; the bundled synthetic day when omitted.
        #[arg(long)]
        profiles: Option<PathBuf>,
        #[arg(long, default_value_t = 0.01)]
        kappa: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum NetAction {
    /// Load and check a network (.json or branch-table .csv).
    Validate { file: PathBuf },
    /// Write the bundled 33-bus feeder.
    Builtin {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PfMethod {
    Newton,
    Sweep,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FitKind {
    Sensitivity,
    LeastSquares,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DispatchMethod {
    Micp,
    Enumerate,
}

fn parse_triple(s: &str) -> std::result::Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| format!("{x:?} is not a number")))
        .collect::<std::result::Result<_, _>>()?;
    v.try_into()
        .map_err(|v: Vec<f64>| format!("expected three comma-separated values, got {}", v.len()))
}

fn parse_state(s: &str) -> std::result::Result<SelectorState, String> {
    if let Ok(i) = s.trim().parse::<usize>() {
        return SelectorState::all().nth(i).ok_or_else(|| format!("state index {i} is not in 0-26"));
    }
    let parts: Vec<usize> = s
        .split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|_| format!("bad feeder {x:?}")))
        .collect::<std::result::Result<_, _>>()?;
    let [a, b, c] = parts[..] else {
        return Err(String::from("expected three 1-based feeders"));
    };
    if [a, b, c].iter().any(|f| !(1..=3).contains(f)) {
        return Err(String::from("feeders are numbered 1 to 3"));
    }
    SelectorState::new([a - 1, b - 1, c - 1]).map_err(|e| e.to_string())
}

fn design_from_flag(alpha: [f64; 3]) -> Result<SopDesign> {
    SopDesign::new(1.0, alpha).map_err(|e| Error::Usage(format!("--alpha: {e}")))
}

fn check_kappa(kappa: f64) -> Result<()> {
    if (0.0..1.0).contains(&kappa) {
        Ok(())
    } else {
        Err(Error::Usage(format!("--kappa must be in [0, 1), got {kappa}")))
    }
}

fn triple(v: [f64; 3]) -> String {
    format!("{} {} {}", v[0], v[1], v[2])
}

fn load_injections(path: Option<&Path>) -> Result<InjectionSet> {
    path.map_or_else(|| Ok(InjectionSet::new()), load_json)
}

fn builtin_cases() -> Vec<NamedDesign> {
    serde_json::from_str(BUNDLED_CASES).expect("bundled catalogue parses")
}

#[derive(Serialize)]
struct DispatchReport<'a> {
    objective: f64,
    #[serde(flatten)]
    solution: &'a DispatchSolution,
    violations: Vec<Violation>,
}

fn chart_csv(chart: &CapabilityChart) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["polygon", "vertex", "p1_pu", "p2_pu"]).expect("in-memory write");
    for (i, poly) in chart.polygons.iter().enumerate() {
        for (k, v) in poly.vertices.iter().enumerate() {
            w.write_record([i.to_string(), k.to_string(), v[0].to_string(), v[1].to_string()])
                .expect("in-memory write");
        }
    }
    w.into_inner().expect("in-memory write")
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Net { action } => match action {
            NetAction::Validate { file } => {
                let net = io::load_network(&file)?;
                let [a, b, c] = net.sop_buses;
                println!(
                    "valid buses={} branches={} generators={} load_kw={} sop_buses={a},{b},{c}",
                    net.buses.len(),
                    net.branches.len(),
                    net.generators.len(),
                    net.total_load_kw()
                );
                Ok(())
            }
            NetAction::Builtin { out } => io::save_network(&out, &builtin_33bus()),
        },
        Command::Powerflow { net, inj, method, out } => {
            let net = io::load_network(&net)?;
            let inj = load_injections(inj.as_deref())?;
            let sol = match method {
                PfMethod::Newton => solve_newton(&net, &inj, &PowerFlowOptions::NEWTON)?,
                PfMethod::Sweep => solve_sweep(&net, &inj, &PowerFlowOptions::SWEEP)?,
            };
            write_atomic(&out, to_json(&sol).as_bytes())?;
            println!("total_loss_kw={} iterations={}", sol.total_loss_kw, sol.iterations);
            Ok(())
        }
        Command::FitLoss {
            net,
            half_width,
            inj,
            method,
            validate,
            out,
        } => {
            if !(half_width.is_finite() && half_width > 0.0) {
                return Err(Error::Usage(format!("--box must be positive, got {half_width}")));
            }
            let net = io::load_network(&net)?;
            let base = load_injections(inj.as_deref())?;
            let method = match method {
                FitKind::Sensitivity => FitMethod::Sensitivity,
                FitKind::LeastSquares => FitMethod::SampledLeastSquares,
            };
            let bounds = FitBox::uniform(half_width);
            let model = fit_loss_model(&net, &base, &bounds, method)?;
            if validate > 0 {
                let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
                let points: Vec<[f64; 3]> = (0..validate)
                    .map(|_| core::array::from_fn(|_| rng.gen_range(-half_width..=half_width)))
                    .collect();
                let err = max_relative_error(&net, &base, &model, &points)?;
                println!("max_rel_error={err} points={validate} seed={}", cli.seed);
            }
            write_atomic(&out, to_json(&model).as_bytes())
        }
        Command::Fic { alpha, hybrid, state } => {
            let design = design_from_flag(alpha)?;
            let fic = if hybrid {
                fic_hybrid(&design)
            } else {
                fic_fixed(&effective_alpha(&design, &state.unwrap_or(SelectorState::IDENTITY)))
            };
            println!("{}", triple(fic));
            Ok(())
        }
        Command::Chart { alpha, hybrid, out } => {
            let design = design_from_flag(alpha)?;
            let ext = out.extension().map(|e| e.to_ascii_lowercase());
            let chart = if hybrid {
                chart_hybrid(&design)
            } else {
                CapabilityChart::fixed(&design)
            };
            let bytes = match ext.as_ref().and_then(|e| e.to_str()) {
                Some("csv") => chart_csv(&chart),
                Some("svg") => {
                    let name = format!("alpha {}", triple(alpha));
                    let polys = chart.polygons.into_iter().map(|p| p.vertices).collect();
                    crate::svg::polygon_chart("Capability chart", &[(name, polys)]).into_bytes()
                }
                _ => return Err(Error::Usage(String::from("--out must end in .csv or .svg"))),
            };
            write_atomic(&out, &bytes)
        }
        Command::Dispatch {
            design,
            loss,
            kappa,
            fixed_state,
            method,
            out,
        } => {
            check_kappa(kappa)?;
            let mut designs = io::load_designs(&design)?;
            if designs.len() != 1 {
                return Err(Error::Usage(format!("{}: expected a single design", design.display())));
            }
            let design = designs.pop().expect("one design");
            let model: QuadLossModel = load_json(&loss)?;
            let model = QuadLossModel {
                operating_point: model.operating_point.clone(),
                ..QuadLossModel::from_coefficients(model.quad, model.linear, model.c)?
            };
            let mut problem = DispatchProblem::new(design.design, model, kappa);
            match (fixed_state, design.hybrid) {
                (Some(s), _) => problem = problem.with_fixed_state(s),
                (None, false) => problem = problem.with_fixed_state(SelectorState::IDENTITY),
                (None, true) => {}
            }
            let sol = match method {
                DispatchMethod::Micp => solve_micp(&problem)?,
                DispatchMethod::Enumerate => solve_enumerate(&problem)?,
            };
            let report = DispatchReport {
                objective: sol.objective(),
                violations: validate_solution(&problem, &sol),
                solution: &sol,
            };
            write_atomic(&out, to_json(&report).as_bytes())?;
            println!("objective_kw={} state={}", sol.objective(), sol.state);
            Ok(())
        }
        Command::Simulate {
            net,
            designs,
            profiles,
            kappa,
            out,
        } => {
            check_kappa(kappa)?;
            let net: NetworkModel = if net == "33bus" {
                builtin_33bus()
            } else {
                io::load_network(Path::new(&net))?
            };
            let designs = match designs {
                Some(p) => io::load_designs(&p)?,
                None => builtin_cases(),
            };
            let mut slugs: Vec<String> = designs.iter().map(|d| io::slug(&d.name)).collect();
            slugs.sort();
            if slugs.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Usage(String::from("design names must give distinct file names")));
            }
            let profiles = match profiles {
                Some(p) => load_profiles(&p)?,
                None => bundled_profiles(),
            };
            let cmp = compare_designs(&net, &designs, &profiles, kappa)?;
            write_dir_atomic(&out, &report::render(&cmp))?;
            for row in cmp.summary() {
                println!(
                    "{}: loss_reduction_kwh={} utilization={}",
                    row.name, row.loss_reduction_kwh, row.utilization
                );
            }
            Ok(())
        }
    }
}

fn error_line(kind: &str, message: &str) -> String {
    let message = message.split_whitespace().collect::<Vec<_>>().join(" ");
    serde_json::json!({ "error": kind, "message": message }).to_string()
}

/// Parse `args` (program name first), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            if code == 0 {
                print!("{e}");
                return 0;
            }
            let first = e.to_string();
            let first = first.lines().next().unwrap_or_default();
            let first = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("{}", error_line("usage", first));
            return 2;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_line(e.kind(), &e.to_string()));
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sopflex_core::capability::catalogue;

    #[test]
    fn bundled_cases_match_catalogue() {
        assert_eq!(builtin_cases(), catalogue(750.0));
    }

    #[test]
    fn state_flags() {
        assert_eq!(parse_state("1,2,3").unwrap(), SelectorState::IDENTITY);
        assert_eq!(parse_state("0").unwrap(), SelectorState::all().next().unwrap());
        assert_eq!(parse_state("2,2,3").unwrap().feeder_of(), [1, 1, 2]);
        assert!(parse_state("27").is_err());
        assert!(parse_state("0,1,2").is_err());
        assert!(parse_state("1,2").is_err());
    }

    #[test]
    fn triples_need_three_values() {
        assert_eq!(parse_triple("0.35,0.2,0.45").unwrap(), [0.35, 0.2, 0.45]);
        assert!(parse_triple("0.4,0.4").is_err());
        assert!(parse_triple("a,b,c").is_err());
    }
}
