//! One hour of the daily case study and the metrics aggregated over a day.
//!
//! Each hour is independent: loads are scaled by the hour's demand
//! multiplier, every generator injects its rating times the capacity factor
//! named by its `profile_key`, a loss model is fitted around that point with
//! the device idle, the dispatch is solved, and the chosen transfer is
//! re-checked with the nonlinear power flow. The multi-threaded driver and
//! file formats live in the `sopflex` crate.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capability::{effective_alpha, fic_fixed, NamedDesign, SelectorState};
use crate::dispatch::{solve_fixed_state, solve_micp, DispatchProblem, DispatchSolution};
use crate::lossmodel::{fit_loss_model, FitBox, FitMethod};
use crate::network::NetworkModel;
use crate::powerflow::{solve_newton, InjectionSet, PowerFlowOptions};
use crate::{DispatchError, LossModelError, PowerFlowError};

pub const HOURS: usize = 24;

/// Demand multiplier and renewable capacity factors for one hour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourProfile {
    pub hour: u32,
    pub demand_pu: f64,
    pub wind_cf: f64,
    pub pv_cf: f64,
}

impl HourProfile {
    /// Capacity factor for a generator's `profile_key`.
    pub fn capacity_factor(&self, key: &str) -> Option<f64> {
        match key {
            "wind" => Some(self.wind_cf),
            "pv" => Some(self.pv_cf),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("expected {HOURS} hourly rows, found {0}")]
    Length(usize),
    #[error("row {row}: hour must be {expected}, found {found}")]
    HourOrder { row: usize, expected: u32, found: u32 },
    #[error("row {row}: {column} = {value} is out of range")]
    Range {
        row: usize,
        column: &'static str,
        value: f64,
    },
}

/// A validated day of hourly profiles, hours numbered 1 to 24.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioProfiles {
    pub hours: Vec<HourProfile>,
}

impl ScenarioProfiles {
    /// Rows are reported 1-based in error messages.
    pub fn new(hours: Vec<HourProfile>) -> Result<Self, ProfileError> {
        if hours.len() != HOURS {
            return Err(ProfileError::Length(hours.len()));
        }
        for (i, h) in hours.iter().enumerate() {
            let row = i + 1;
            if h.hour != row as u32 {
                return Err(ProfileError::HourOrder {
                    row,
                    expected: row as u32,
                    found: h.hour,
                });
            }
            if !(h.demand_pu.is_finite() && h.demand_pu > 0.0) {
                return Err(ProfileError::Range {
                    row,
                    column: "demand_pu",
                    value: h.demand_pu,
                });
            }
            for (column, value) in [("wind_cf", h.wind_cf), ("pv_cf", h.pv_cf)] {
                if !(0.0..=1.0).contains(&value) {
                    return Err(ProfileError::Range { row, column, value });
                }
            }
        }
        Ok(Self { hours })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StudyFailure {
    #[error("generator at bus {bus} uses unknown profile {key:?}")]
    UnknownProfile { bus: u32, key: String },
    #[error("baseline power flow failed: {0}")]
    Baseline(PowerFlowError),
    #[error("loss model fit failed: {0}")]
    LossModel(LossModelError),
    #[error("dispatch failed: {0}")]
    Dispatch(DispatchError),
    #[error("verification power flow failed: {0}")]
    Verification(PowerFlowError),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("hour {hour}: {failure}")]
pub struct StudyError {
    pub hour: u32,
    pub failure: StudyFailure,
}

/// The hour's network (loads scaled) and its generator injections.
pub fn hour_operating_point(
    net: &NetworkModel,
    hour: &HourProfile,
) -> Result<(NetworkModel, InjectionSet), StudyError> {
    let scaled = net.with_load_scale(hour.demand_pu);
    let mut inj = InjectionSet::new();
    for g in &net.generators {
        let cf = hour.capacity_factor(&g.profile_key).ok_or_else(|| StudyError {
            hour: hour.hour,
            failure: StudyFailure::UnknownProfile {
                bus: g.bus,
                key: g.profile_key.clone(),
            },
        })?;
        if cf != 0.0 {
            inj.add(g.bus, g.p_rated_kw * cf, 0.0);
        }
    }
    Ok((scaled, inj))
}

/// Loss models are fitted over this per-feeder box: half the device rating
/// bounds every feeder transfer any design can produce.
pub fn fit_box(design: &NamedDesign) -> FitBox {
    FitBox::uniform(design.design.p_plus_kva / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourResult {
    pub hour: u32,
    pub solution: DispatchSolution,
    /// Optimal loss with the converters held on their home feeders.
    pub identity_objective: f64,
    /// Nonlinear network loss with the device idle (kW).
    pub baseline_loss_kw: f64,
    /// Nonlinear network loss at the chosen transfer (kW).
    pub verified_network_loss_kw: f64,
    /// Verified network loss plus converter losses (kW).
    pub optimized_loss_kw: f64,
    /// Feeder interconnection capacity of the chosen selector state (kW).
    pub fic_kw: [f64; 3],
}

impl HourResult {
    pub fn loss_reduction_kw(&self) -> f64 {
        self.baseline_loss_kw - self.optimized_loss_kw
    }

    /// Relative gap between the surrogate's network loss and the verified
    /// nonlinear loss.
    pub fn surrogate_error(&self) -> f64 {
        (self.solution.loss_network - self.verified_network_loss_kw).abs() / self.verified_network_loss_kw
    }
}

pub fn run_hour(
    net: &NetworkModel,
    design: &NamedDesign,
    hour: &HourProfile,
    kappa: f64,
) -> Result<HourResult, StudyError> {
    let fail = |failure| StudyError { hour: hour.hour, failure };
    let (net, base) = hour_operating_point(net, hour)?;
    let baseline = solve_newton(&net, &base, &PowerFlowOptions::NEWTON).map_err(|e| fail(StudyFailure::Baseline(e)))?;
    let mut model = fit_loss_model(&net, &base, &fit_box(design), FitMethod::SampledLeastSquares)
        .map_err(|e| fail(StudyFailure::LossModel(e)))?;
    model.operating_point.hour = Some(hour.hour);

    let mut problem = DispatchProblem::new(design.design, model, kappa);
    if !design.hybrid {
        problem = problem.with_fixed_state(SelectorState::IDENTITY);
    }
    let solution = solve_micp(&problem).map_err(|e| fail(StudyFailure::Dispatch(e)))?;
    let identity_objective = if design.hybrid {
        solve_fixed_state(&problem, &SelectorState::IDENTITY)
            .map_err(|e| fail(StudyFailure::Dispatch(e)))?
            .objective()
    } else {
        solution.objective()
    };

    let verified = solve_newton(&net, &base.with_device_draw(&net, solution.p_inj), &PowerFlowOptions::NEWTON)
        .map_err(|e| fail(StudyFailure::Verification(e)))?;
    let p_plus = design.design.p_plus_kva;
    let fic = fic_fixed(&effective_alpha(&design.design, &solution.state));
    Ok(HourResult {
        hour: hour.hour,
        identity_objective,
        baseline_loss_kw: baseline.total_loss_kw,
        verified_network_loss_kw: verified.total_loss_kw,
        optimized_loss_kw: verified.total_loss_kw + solution.converter_loss_total(),
        fic_kw: fic.map(|f| f * p_plus),
        solution,
    })
}

/// Time-averaged feeder-transfer 1-norm over the device rating.
pub fn utilization(powers: &[[f64; 3]], p_plus_kva: f64) -> f64 {
    if powers.is_empty() {
        return 0.0;
    }
    let total: f64 = powers.iter().map(|p| p.iter().map(|x| x.abs()).sum::<f64>() / p_plus_kva).sum();
    total / powers.len() as f64
}

/// One design's day, hours in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyResult {
    pub design: NamedDesign,
    pub hours: Vec<HourResult>,
}

impl DailyResult {
    /// Hourly steps, so kW summed over the day is kWh.
    pub fn loss_reduction_kwh(&self) -> f64 {
        self.hours.iter().map(HourResult::loss_reduction_kw).sum()
    }

    pub fn utilization(&self) -> f64 {
        let powers: Vec<[f64; 3]> = self.hours.iter().map(|h| h.solution.p_inj).collect();
        utilization(&powers, self.design.design.p_plus_kva)
    }

    pub fn fic_trajectory(&self) -> Vec<[f64; 3]> {
        self.hours.iter().map(|h| h.fic_kw).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capability::catalogue;
    use crate::network::builtin_33bus;
    use alloc::vec;

    fn flat_day() -> Vec<HourProfile> {
        (1..=24)
            .map(|hour| HourProfile {
                hour,
                demand_pu: 1.0,
                wind_cf: 0.0,
                pv_cf: 0.0,
            })
            .collect()
    }

    #[test]
    fn constant_transfer_gives_half_utilization() {
        let p = [0.25 * 750.0, -0.25 * 750.0, 0.0];
        assert_eq!(utilization(&vec![p; 24], 750.0), 0.5);
        assert_eq!(utilization(&vec![[0.0; 3]; 24], 750.0), 0.0);
    }

    #[test]
    fn profile_validation_reports_rows() {
        assert!(ScenarioProfiles::new(flat_day()).is_ok());
        let mut day = flat_day();
        day[4].wind_cf = 1.2;
        assert_eq!(
            ScenarioProfiles::new(day),
            Err(ProfileError::Range {
                row: 5,
                column: "wind_cf",
                value: 1.2
            })
        );
        let mut day = flat_day();
        day.pop();
        assert_eq!(ScenarioProfiles::new(day), Err(ProfileError::Length(23)));
        let mut day = flat_day();
        day[0].demand_pu = 0.0;
        assert!(matches!(ScenarioProfiles::new(day), Err(ProfileError::Range { row: 1, .. })));
    }

    #[test]
    fn unknown_generator_profile_is_an_error() {
        let mut net = builtin_33bus();
        net.generators[0].profile_key = String::from("tidal");
        let err = hour_operating_point(&net, &flat_day()[0]).unwrap_err();
        assert_eq!(err.hour, 1);
        assert!(matches!(err.failure, StudyFailure::UnknownProfile { .. }));
    }

    #[test]
    fn hour_without_generation_is_consistent() {
        let net = builtin_33bus();
        let cases = catalogue(750.0);
        let r = run_hour(&net, &cases[4], &flat_day()[0], 0.01).unwrap();
        assert!(r.solution.objective() <= r.identity_objective + 1e-9);
        assert!(r.surrogate_error() < 0.01);
        assert!(r.optimized_loss_kw <= r.baseline_loss_kw * 1.005);
        if r.solution.p_inj == [0.0; 3] {
            assert_eq!(r.verified_network_loss_kw, r.baseline_loss_kw);
        }
    }
}
