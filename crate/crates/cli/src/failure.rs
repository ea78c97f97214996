use std::fmt;

use ebts_core::config::ConfigError;
use ebts_core::copula::CopulaError;
use ebts_core::ebts_model::ModelError;
use ebts_core::evaluation::EvalError;
use ebts_core::scenario_gen::ScenarioError;
use ebts_core::weather_data::WeatherError;

pub const USAGE: i32 = 1;
pub const DATA: i32 = 2;
pub const NUMERIC: i32 = 3;
pub const INFEASIBLE: i32 = 4;

/// A one-line diagnostic and the exit code it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(USAGE, message)
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self::new(DATA, message)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<WeatherError> for Failure {
    fn from(e: WeatherError) -> Self {
        Failure::data(e.to_string())
    }
}

impl From<CopulaError> for Failure {
    fn from(e: CopulaError) -> Self {
        let code = match e {
            CopulaError::NumericFailure(_) | CopulaError::NoFeasibleFamily => NUMERIC,
            _ => DATA,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Copula(c) => c.into(),
            ScenarioError::KTooLarge { .. } | ScenarioError::RangeTooNarrow(..) | ScenarioError::InvalidInput(_) => {
                Failure::usage(e.to_string())
            }
            ScenarioError::EmptyCluster(_) => Failure::new(NUMERIC, e.to_string()),
            ScenarioError::Csv(_) => Failure::data(e.to_string()),
        }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        let code = match e {
            ModelError::Infeasible { .. } => INFEASIBLE,
            ModelError::InvalidParameter(_)
            | ModelError::InconsistentDimensions(_)
            | ModelError::NonpositiveFlow(_)
            | ModelError::Csv(_) => DATA,
            ModelError::Unbounded
            | ModelError::NotOptimal
            | ModelError::InvariantViolation(_)
            | ModelError::Solver(_) => NUMERIC,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Model(m) => m.into(),
            other => Failure::data(other.to_string()),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Scenario(s) => s.into(),
            EvalError::Model(m) => m.into(),
            EvalError::NoTestDays => Failure::data("no complete test days in the input"),
            EvalError::Csv(m) => Failure::data(m),
        }
    }
}
