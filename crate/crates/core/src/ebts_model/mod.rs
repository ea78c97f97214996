//! Day-ahead operation model of an electric boiler with thermal storage that
//! heats a set of buildings and sells power-balancing reserve.
//!
//! Units are MW, MWh, °C and hours throughout; the hourly step is one hour.
//! Storage energy and building temperatures are end-of-hour state variables
//! anchored at fixed initial values, so hour `n` heats building `m` with
//! `D = mdot_c * theta * (Tin_n - Tbld_{n-1})`.

mod build;
mod schedule;

pub use build::{build_deterministic_lp, build_realized_lp, build_stochastic_lp, ModelIndex, ScenarioIndex};
pub use schedule::{
    extract_schedule, solve_schedule, write_building_csv, write_schedule_csv, BuildingTrajectory, CostBreakdown,
    ScenarioDispatch, ScheduleSolution,
};

use ebts_lp::LpError;
use serde::{Deserialize, Serialize};

use crate::weather_data::HOURS_PER_DAY;

/// Specific heat of water, J/(kg·°C).
pub const WATER_SPECIFIC_HEAT: f64 = 4186.0;
pub const DEFAULT_SLACK_PRICE: f64 = 1e4;

pub type Hourly = [f64; HOURS_PER_DAY];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("inconsistent dimensions: {0}")]
    InconsistentDimensions(String),
    #[error("mass flow heat rate must be positive, got {0}")]
    NonpositiveFlow(f64),
    #[error("model is infeasible; violated constraint groups: {}", .groups.join(", "))]
    Infeasible { groups: Vec<String> },
    #[error("model is unbounded")]
    Unbounded,
    #[error("solution is not optimal")]
    NotOptimal,
    #[error("solution check failed: {0}")]
    InvariantViolation(String),
    #[error(transparent)]
    Solver(#[from] LpError),
    #[error("CSV error: {0}")]
    Csv(String),
}

/// Heat capacity given in units of 10 GJ/°C, returned in MWh/°C.
pub fn heat_capacity_mwh_per_c(ten_gj_per_c: f64) -> f64 {
    ten_gj_per_c * 10.0 / 3.6
}

/// Conductance given in units of 10 kW/°C, returned in MW/°C.
pub fn conductance_mw_per_c(ten_kw_per_c: f64) -> f64 {
    ten_kw_per_c * 0.01
}

/// Heat-rate coefficient of a water mass flow in kg/s, returned in MW/°C.
pub fn flow_heat_rate_mw_per_c(kg_per_s: f64) -> f64 {
    kg_per_s * WATER_SPECIFIC_HEAT * 1e-6
}

/// Radiator effectiveness `1 - exp(-kf / mdot_c)`.
pub fn radiator_theta(kf: f64, mdot_c: f64) -> Result<f64, ModelError> {
    if !(mdot_c > 0.0) {
        return Err(ModelError::NonpositiveFlow(mdot_c));
    }
    if !(kf >= 0.0) {
        return Err(ModelError::InvalidParameter(format!("radiator kF = {kf} must be non-negative")));
    }
    Ok(-(-kf / mdot_c).exp_m1())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TerminalRule {
    Free,
    /// End-of-day storage at least the initial level.
    #[default]
    Cyclic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlantParams {
    pub p_min: f64,
    pub p_max: f64,
    pub eta: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub p_str_min: f64,
    pub p_str_max: f64,
    pub p_rls_min: f64,
    pub p_rls_max: f64,
    /// Fraction of stored heat retained over one hour.
    pub retention: f64,
    pub h_initial: f64,
    pub terminal_rule: TerminalRule,
    pub delta_t: f64,
}

fn check_range(name: &str, lo: f64, hi: f64) -> Result<(), ModelError> {
    if lo.is_finite() && hi.is_finite() && lo <= hi {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter(format!("{name} range [{lo}, {hi}]")))
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        check_range("boiler power", self.p_min, self.p_max)?;
        check_range("storage energy", self.h_min, self.h_max)?;
        check_range("storage charge", self.p_str_min, self.p_str_max)?;
        check_range("storage release", self.p_rls_min, self.p_rls_max)?;
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(ModelError::InvalidParameter(format!("efficiency {}", self.eta)));
        }
        if !(self.retention > 0.0 && self.retention <= 1.0) {
            return Err(ModelError::InvalidParameter(format!("retention {}", self.retention)));
        }
        if !(self.h_initial >= self.h_min && self.h_initial <= self.h_max) {
            return Err(ModelError::InvalidParameter(format!("initial storage {}", self.h_initial)));
        }
        if self.delta_t != 1.0 {
            return Err(ModelError::InvalidParameter(format!("time step {} h; only 1 h is supported", self.delta_t)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BuildingParams {
    /// Equivalent heat capacity, MWh/°C.
    pub c_bld: f64,
    /// Envelope conductance to the outdoors, MW/°C.
    pub u: f64,
    /// Radiator water mass flow times specific heat, MW/°C.
    pub mdot_c: f64,
    pub theta: f64,
    pub t_bld_initial: f64,
    pub t_bld_min: f64,
    pub t_bld_max: f64,
    pub t_in_min: f64,
    pub t_in_max: f64,
    pub t_out_min: f64,
    pub t_out_max: f64,
}

impl BuildingParams {
    /// Heat delivered per °C of inlet-minus-indoor temperature difference.
    pub fn emission_coefficient(&self) -> f64 {
        self.mdot_c * self.theta
    }

    /// Radiator outlet temperature for an inlet and an indoor temperature.
    pub fn outlet_temperature(&self, t_in: f64, t_bld: f64) -> f64 {
        (1.0 - self.theta) * t_in + self.theta * t_bld
    }

    /// One-hour update of the indoor temperature under outdoor temperature
    /// `t_env` and radiator heat `d` (MW) over `delta_t` hours.
    pub fn step(&self, t_bld: f64, t_env: f64, d: f64, delta_t: f64) -> f64 {
        t_bld + delta_t * (self.u * (t_env - t_bld) + d) / self.c_bld
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        check_range("indoor temperature", self.t_bld_min, self.t_bld_max)?;
        check_range("inlet temperature", self.t_in_min, self.t_in_max)?;
        check_range("outlet temperature", self.t_out_min, self.t_out_max)?;
        if !(self.c_bld > 0.0 && self.c_bld.is_finite()) {
            return Err(ModelError::InvalidParameter(format!("building heat capacity {}", self.c_bld)));
        }
        if !(self.u >= 0.0 && self.u.is_finite()) {
            return Err(ModelError::InvalidParameter(format!("building conductance {}", self.u)));
        }
        if !(self.mdot_c > 0.0 && self.mdot_c.is_finite()) {
            return Err(ModelError::NonpositiveFlow(self.mdot_c));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(ModelError::InvalidParameter(format!("radiator theta {}", self.theta)));
        }
        if !(self.t_bld_initial >= self.t_bld_min && self.t_bld_initial <= self.t_bld_max) {
            return Err(ModelError::InvalidParameter(format!("initial indoor temperature {}", self.t_bld_initial)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarketParams {
    /// Energy price per MWh.
    pub c_e: Hourly,
    /// Reserve compensation per MWh of bid above baseline.
    pub c_r: Hourly,
    /// Penalty per MWh of deviation beyond the deadband.
    pub c_f: Hourly,
    /// Baseline consumption, MW.
    pub baseline: Hourly,
    /// Penalty-free deviation, MW.
    pub epsilon: f64,
}

impl MarketParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let all = self.c_e.iter().chain(&self.c_r).chain(&self.c_f).chain(&self.baseline);
        if all.clone().any(|x| !x.is_finite()) {
            return Err(ModelError::InvalidParameter("non-finite market series".into()));
        }
        if self.c_f.iter().any(|&x| x < 0.0) {
            return Err(ModelError::InvalidParameter("deviation penalty prices must be non-negative".into()));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(ModelError::InvalidParameter(format!("deadband {}", self.epsilon)));
        }
        Ok(())
    }

    /// Multiplies every price series by `factor`.
    pub fn scaled(&self, factor: f64) -> MarketParams {
        let s = |a: &Hourly| a.map(|x| x * factor);
        MarketParams { c_e: s(&self.c_e), c_r: s(&self.c_r), c_f: s(&self.c_f), ..self.clone() }
    }
}

/// Everything the LP needs apart from the temperature scenarios.
#[derive(Clone, Debug, PartialEq)]
pub struct Case {
    pub plant: PlantParams,
    pub buildings: Vec<BuildingParams>,
    pub market: MarketParams,
}

impl Case {
    pub fn validate(&self) -> Result<(), ModelError> {
        self.plant.validate()?;
        if self.buildings.is_empty() {
            return Err(ModelError::InconsistentDimensions("no buildings".into()));
        }
        for (m, b) in self.buildings.iter().enumerate() {
            b.validate().map_err(|e| ModelError::InvalidParameter(format!("building {}: {e}", m + 1)))?;
        }
        self.market.validate()
    }
}
