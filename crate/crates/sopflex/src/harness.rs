//! The daily case study: every (design, hour) pair is an independent job.
//!
//! Jobs run on a rayon pool capped by `SOPFLEX_THREADS`; results are
//! gathered back in design and hour order, so output does not depend on
//! scheduling.

use rayon::prelude::*;
use sopflex_core::capability::NamedDesign;
use sopflex_core::network::NetworkModel;
use sopflex_core::study::{run_hour, DailyResult, HourResult, ScenarioProfiles};

use crate::error::{Error, Result};

pub const THREADS_ENV: &str = "SOPFLEX_THREADS";

/// Thread cap from `SOPFLEX_THREADS`; `None` leaves rayon's default.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(Error::Usage(format!("{THREADS_ENV}: {e}"))),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

fn pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker threads: {e}")))
}

pub fn run_day(net: &NetworkModel, design: &NamedDesign, profiles: &ScenarioProfiles, kappa: f64) -> Result<DailyResult> {
    let mut days = compare_designs(net, std::slice::from_ref(design), profiles, kappa)?;
    Ok(days.days.pop().expect("one design in, one day out"))
}

/// One row of the design comparison; percentages are relative to the
/// first design.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub name: String,
    pub alpha: [f64; 3],
    pub hybrid: bool,
    pub baseline_loss_kwh: f64,
    pub optimized_loss_kwh: f64,
    pub loss_reduction_kwh: f64,
    pub loss_reduction_pct: f64,
    pub utilization: f64,
    pub utilization_pct: f64,
    /// Hours whose selector state differs from the previous hour's.
    pub reconfigurations: usize,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub days: Vec<DailyResult>,
}

impl Comparison {
    pub fn summary(&self) -> Vec<SummaryRow> {
        let first = &self.days[0];
        let ref_red = first.loss_reduction_kwh();
        let ref_eta = first.utilization();
        let pct = |v: f64, r: f64| if r == 0.0 { f64::NAN } else { 100.0 * (v / r) };
        self.days
            .iter()
            .map(|d| {
                let red = d.loss_reduction_kwh();
                let eta = d.utilization();
                SummaryRow {
                    name: d.design.name.clone(),
                    alpha: d.design.design.alpha,
                    hybrid: d.design.hybrid,
                    baseline_loss_kwh: d.hours.iter().map(|h| h.baseline_loss_kw).sum(),
                    optimized_loss_kwh: d.hours.iter().map(|h| h.optimized_loss_kw).sum(),
                    loss_reduction_kwh: red,
                    loss_reduction_pct: pct(red, ref_red),
                    utilization: eta,
                    utilization_pct: pct(eta, ref_eta),
                    reconfigurations: d.hours.windows(2).filter(|w| w[0].solution.state != w[1].solution.state).count(),
                }
            })
            .collect()
    }
}

pub fn compare_designs(
    net: &NetworkModel,
    designs: &[NamedDesign],
    profiles: &ScenarioProfiles,
    kappa: f64,
) -> Result<Comparison> {
    if designs.is_empty() {
        return Err(Error::Usage(String::from("at least one design is required")));
    }
    let jobs: Vec<(usize, usize)> = (0..designs.len())
        .flat_map(|d| (0..profiles.hours.len()).map(move |h| (d, h)))
        .collect();
    let results: Vec<std::result::Result<HourResult, Error>> = pool()?.install(|| {
        jobs.par_iter()
            .map(|&(d, h)| {
                run_hour(net, &designs[d], &profiles.hours[h], kappa).map_err(|source| Error::Study {
                    design: designs[d].name.clone(),
                    source,
                })
            })
            .collect()
    });
    let mut results = results.into_iter();
    let mut days = Vec::with_capacity(designs.len());
    for design in designs {
        let hours = results
            .by_ref()
            .take(profiles.hours.len())
            .collect::<Result<Vec<_>>>()?;
        days.push(DailyResult {
            design: design.clone(),
            hours,
        });
    }
    Ok(Comparison { days })
}
