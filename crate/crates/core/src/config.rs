//! TOML case description: plant, buildings, market terms and scenario settings.
//!
//! Building rows use tabulated units (10 GJ/°C, 10 kW/°C, kg/s) and are
//! converted to MWh/°C and MW/°C when the [`Case`] is built. Hourly series
//! may be a single number, a list of 24 values, or time-of-use bands whose
//! hours must cover the day exactly once.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ebts_model::{
    conductance_mw_per_c, flow_heat_rate_mw_per_c, heat_capacity_mwh_per_c, BuildingParams, Case, Hourly,
    MarketParams, ModelError, PlantParams, TerminalRule, DEFAULT_SLACK_PRICE,
};
use crate::scenario_gen::{Weighting, DEFAULT_AR_COEFFICIENT, DEFAULT_RESTARTS};
use crate::weather_data::HOURS_PER_DAY;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("malformed case file: {0}")]
    Toml(String),
    #[error("invalid case: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Band {
    #[serde(default)]
    pub name: Option<String>,
    pub price: f64,
    pub hours: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HourlySeries {
    Flat(f64),
    Hourly(Vec<f64>),
    Bands {
        /// Multiplier applied to every band price.
        #[serde(default = "one")]
        scale: f64,
        bands: Vec<Band>,
    },
}

fn one() -> f64 {
    1.0
}

impl HourlySeries {
    pub fn resolve(&self, what: &str) -> Result<Hourly, ConfigError> {
        let invalid = |msg: String| ConfigError::Invalid(format!("{what}: {msg}"));
        let out = match self {
            HourlySeries::Flat(x) => [*x; HOURS_PER_DAY],
            HourlySeries::Hourly(v) => {
                Hourly::try_from(v.as_slice()).map_err(|_| invalid(format!("expected 24 values, got {}", v.len())))?
            }
            HourlySeries::Bands { scale, bands } => {
                let mut out = [f64::NAN; HOURS_PER_DAY];
                for band in bands {
                    for &h in &band.hours {
                        if h >= HOURS_PER_DAY {
                            return Err(invalid(format!("hour {h} out of range")));
                        }
                        if !out[h].is_nan() {
                            return Err(invalid(format!("hour {h} appears in two bands")));
                        }
                        out[h] = band.price * scale;
                    }
                }
                if let Some(h) = out.iter().position(|x| x.is_nan()) {
                    return Err(invalid(format!("hour {h} is not covered by any band")));
                }
                out
            }
        };
        if out.iter().any(|x| !x.is_finite()) {
            return Err(invalid("non-finite value".into()));
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    pub p_min_mw: f64,
    pub p_max_mw: f64,
    pub efficiency: f64,
    pub h_min_mwh: f64,
    pub h_max_mwh: f64,
    #[serde(default)]
    pub p_str_min_mw: f64,
    pub p_str_max_mw: f64,
    #[serde(default)]
    pub p_rls_min_mw: f64,
    pub p_rls_max_mw: f64,
    pub retention: f64,
    /// Defaults to the lower storage limit.
    #[serde(default)]
    pub h_initial_mwh: Option<f64>,
    #[serde(default)]
    pub terminal_rule: TerminalRule,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildingLimits {
    pub t_in_min_c: f64,
    pub t_in_max_c: f64,
    pub t_out_min_c: f64,
    pub t_out_max_c: f64,
    pub t_bld_min_c: f64,
    pub t_bld_max_c: f64,
    pub t_bld_initial_c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildingRow {
    #[serde(default)]
    pub name: Option<String>,
    pub heat_capacity_10gj_per_c: f64,
    pub conductance_10kw_per_c: f64,
    pub mass_flow_kg_per_s: f64,
    pub theta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    /// Energy price per MWh.
    pub energy_price: HourlySeries,
    pub reserve_price: HourlySeries,
    pub deviation_price: HourlySeries,
    pub baseline_mw: HourlySeries,
    pub deadband_mw: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ClusterCount {
    /// Pick K at the elbow of the mean-distance curve.
    #[default]
    Auto,
    Fixed(usize),
}

impl FromStr for ClusterCount {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "auto" => Ok(ClusterCount::Auto),
            t => match t.parse::<usize>() {
                Ok(k) if k > 0 => Ok(ClusterCount::Fixed(k)),
                _ => Err(format!("expected `auto` or a positive integer, got `{s}`")),
            },
        }
    }
}

impl fmt::Display for ClusterCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClusterCount::Auto => f.write_str("auto"),
            ClusterCount::Fixed(k) => write!(f, "{k}"),
        }
    }
}

impl Serialize for ClusterCount {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ClusterCount::Auto => s.serialize_str("auto"),
            ClusterCount::Fixed(k) => s.serialize_u64(*k as u64),
        }
    }
}

impl<'de> Deserialize<'de> for ClusterCount {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(k) => format!("{k}").parse().map_err(serde::de::Error::custom),
            Raw::Word(w) => w.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub samples: usize,
    pub k: ClusterCount,
    pub k_min: usize,
    pub k_max: usize,
    pub ar_coefficient: f64,
    pub restarts: usize,
    pub weighting: Weighting,
    /// Price per °C·h outside the indoor band when scoring realised dispatch.
    pub comfort_slack_price: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            samples: 400,
            k: ClusterCount::Auto,
            k_min: 2,
            k_max: 30,
            ar_coefficient: DEFAULT_AR_COEFFICIENT,
            restarts: DEFAULT_RESTARTS,
            weighting: Weighting::Frequency,
            comfort_slack_price: DEFAULT_SLACK_PRICE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub plant: PlantConfig,
    pub building_limits: BuildingLimits,
    pub buildings: Vec<BuildingRow>,
    pub market: MarketConfig,
    #[serde(default)]
    pub scenarios: ScenarioConfig,
}

impl CaseConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Toml(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), reason: e.to_string() })?;
        Self::parse(&text)
    }

    pub fn to_case(&self) -> Result<Case, ConfigError> {
        let p = &self.plant;
        let plant = PlantParams {
            p_min: p.p_min_mw,
            p_max: p.p_max_mw,
            eta: p.efficiency,
            h_min: p.h_min_mwh,
            h_max: p.h_max_mwh,
            p_str_min: p.p_str_min_mw,
            p_str_max: p.p_str_max_mw,
            p_rls_min: p.p_rls_min_mw,
            p_rls_max: p.p_rls_max_mw,
            retention: p.retention,
            h_initial: p.h_initial_mwh.unwrap_or(p.h_min_mwh),
            terminal_rule: p.terminal_rule,
            delta_t: 1.0,
        };
        let lim = &self.building_limits;
        let buildings = self
            .buildings
            .iter()
            .map(|row| BuildingParams {
                c_bld: heat_capacity_mwh_per_c(row.heat_capacity_10gj_per_c),
                u: conductance_mw_per_c(row.conductance_10kw_per_c),
                mdot_c: flow_heat_rate_mw_per_c(row.mass_flow_kg_per_s),
                theta: row.theta,
                t_bld_initial: lim.t_bld_initial_c,
                t_bld_min: lim.t_bld_min_c,
                t_bld_max: lim.t_bld_max_c,
                t_in_min: lim.t_in_min_c,
                t_in_max: lim.t_in_max_c,
                t_out_min: lim.t_out_min_c,
                t_out_max: lim.t_out_max_c,
            })
            .collect();
        let m = &self.market;
        let market = MarketParams {
            c_e: m.energy_price.resolve("energy_price")?,
            c_r: m.reserve_price.resolve("reserve_price")?,
            c_f: m.deviation_price.resolve("deviation_price")?,
            baseline: m.baseline_mw.resolve("baseline_mw")?,
            epsilon: m.deadband_mw,
        };
        let case = Case { plant, buildings, market };
        case.validate()?;
        let s = &self.scenarios;
        if s.samples == 0 || s.restarts == 0 || s.k_min == 0 || s.k_min > s.k_max {
            return Err(ConfigError::Invalid("scenario settings need samples, restarts > 0 and 0 < k_min <= k_max".into()));
        }
        Ok(case)
    }
}
