//! Scoring day-ahead plans against realised temperatures and comparing the
//! stochastic and deterministic methods over a set of test days.
//!
//! A plan is scored only through its bids: the realised dispatch re-optimises
//! the recourse decisions under the actual temperatures with the bids fixed,
//! and indoor band violations are priced instead of making the day infeasible.

use std::io::Write;
use std::time::Instant;

use chrono::NaiveDate;
use ebts_lp::SolveOptions;
use rayon::prelude::*;

use crate::config::{ClusterCount, ScenarioConfig};
use crate::ebts_model::{
    build_deterministic_lp, build_realized_lp, build_stochastic_lp, solve_schedule, Case, Hourly, ModelError,
    ScheduleSolution,
};
use crate::scenario_gen::{
    elbow_select, kmeans, profiles_as_points, sample_profiles, to_scenario_set, ConditionalModel, ElbowCurve,
    KMeansResult, SamplePool, ScenarioError, ScenarioSet,
};
use crate::seed::{child_seed, stage_seed};
use crate::weather_data::{DayForecast, ObservedDay};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no test days")]
    NoTestDays,
    #[error("CSV error: {0}")]
    Csv(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RealizedResult {
    /// Operating cost under the actual temperatures, excluding comfort charges.
    pub realized_cost: f64,
    pub comfort_penalty: f64,
    /// °C·h outside the indoor band.
    pub comfort_violation: f64,
    pub dispatch: ScheduleSolution,
}

/// Re-dispatches the plant under `actual` temperatures with the bids fixed.
pub fn realized_dispatch(
    case: &Case,
    bid: &Hourly,
    actual: &Hourly,
    slack_price: f64,
    opts: &SolveOptions,
) -> Result<RealizedResult, ModelError> {
    let (lp, index) = build_realized_lp(case, bid, actual, slack_price)?;
    let dispatch = solve_schedule(case, &lp, &index, opts)?;
    let d = &dispatch.scenarios[0];
    Ok(RealizedResult {
        realized_cost: d.cost.total(),
        comfort_penalty: d.cost.comfort_penalty,
        comfort_violation: d.comfort_violation,
        dispatch,
    })
}

/// Everything produced on the way from a forecast to a scenario set.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioPlan {
    pub pool: SamplePool,
    pub elbow: Option<ElbowCurve>,
    pub clustering: KMeansResult,
    pub set: ScenarioSet,
}

/// Samples conditional profiles around `forecast`, clusters them and turns
/// the clusters into a weighted scenario set. Sampling and clustering draw
/// from separate streams derived from `seed`.
pub fn generate_scenarios<M: ConditionalModel + ?Sized>(
    model: &M,
    forecast: &DayForecast,
    settings: &ScenarioConfig,
    seed: u64,
) -> Result<ScenarioPlan, ScenarioError> {
    let pool = sample_profiles(model, forecast, settings.samples, settings.ar_coefficient, stage_seed(seed, "sampling"))?;
    let points = profiles_as_points(&pool.profiles);
    let kseed = stage_seed(seed, "kmeans");
    let (k, elbow) = match settings.k {
        ClusterCount::Fixed(k) => (k, None),
        ClusterCount::Auto => {
            let elbow = elbow_select(&points, settings.k_min, settings.k_max.min(points.len()), kseed, settings.restarts)?;
            (elbow.k_star, Some(elbow))
        }
    };
    let clustering = kmeans(&points, k, child_seed(kseed, k as u64), settings.restarts)?;
    let set = to_scenario_set(&clustering.centroids, &clustering.assignment, settings.weighting)?;
    Ok(ScenarioPlan { pool, elbow, clustering, set })
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MethodOutcome {
    /// Objective of the planning program over its own scenarios.
    pub in_sample_cost: f64,
    pub realized_cost: f64,
    pub comfort_violation: f64,
    pub comfort_penalty: f64,
    /// Wall-clock time to plan (scenario generation and solve), seconds.
    pub planning_seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DayComparison {
    pub day: NaiveDate,
    pub n_scenarios: usize,
    pub stochastic: MethodOutcome,
    pub deterministic: MethodOutcome,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub days: Vec<DayComparison>,
    pub mean_stochastic_cost: f64,
    pub mean_deterministic_cost: f64,
    pub mean_stochastic_in_sample: f64,
    pub mean_deterministic_in_sample: f64,
}

impl ComparisonReport {
    pub fn from_days(days: Vec<DayComparison>) -> Self {
        let mean = |f: &dyn Fn(&DayComparison) -> f64| days.iter().map(f).sum::<f64>() / days.len() as f64;
        ComparisonReport {
            mean_stochastic_cost: mean(&|d| d.stochastic.realized_cost),
            mean_deterministic_cost: mean(&|d| d.deterministic.realized_cost),
            mean_stochastic_in_sample: mean(&|d| d.stochastic.in_sample_cost),
            mean_deterministic_in_sample: mean(&|d| d.deterministic.in_sample_cost),
            days,
        }
    }

    /// Days on which either method left the indoor band.
    pub fn comfort_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for d in &self.days {
            for (name, m) in [("stochastic", &d.stochastic), ("deterministic", &d.deterministic)] {
                if m.comfort_violation > 0.0 {
                    out.push(format!("{}: {name} plan leaves the indoor band by {:.4} °C·h", d.day, m.comfort_violation));
                }
            }
        }
        out
    }
}

/// Plans each test day with both methods and scores the plans against the
/// actual temperatures. Days run in parallel with seeds derived from the day
/// position, so results do not depend on the thread count.
pub fn compare_methods<M: ConditionalModel + ?Sized>(
    model: &M,
    case: &Case,
    days: &[ObservedDay],
    settings: &ScenarioConfig,
    seed: u64,
    opts: &SolveOptions,
) -> Result<ComparisonReport, EvalError> {
    if days.is_empty() {
        return Err(EvalError::NoTestDays);
    }
    let root = stage_seed(seed, "evaluate");
    let rows = days
        .par_iter()
        .enumerate()
        .map(|(i, day)| compare_day(model, case, day, settings, child_seed(root, i as u64), opts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ComparisonReport::from_days(rows))
}

fn compare_day<M: ConditionalModel + ?Sized>(
    model: &M,
    case: &Case,
    day: &ObservedDay,
    settings: &ScenarioConfig,
    seed: u64,
    opts: &SolveOptions,
) -> Result<DayComparison, EvalError> {
    let slack = settings.comfort_slack_price;

    let start = Instant::now();
    let plan = generate_scenarios(model, &day.forecast, settings, seed)?;
    let (lp, index) = build_stochastic_lp(case, &plan.set)?;
    let stoch = solve_schedule(case, &lp, &index, opts)?;
    let stoch_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let (lp, index) = build_deterministic_lp(case, &day.forecast.temps_c)?;
    let det = solve_schedule(case, &lp, &index, opts)?;
    let det_seconds = start.elapsed().as_secs_f64();

    let score = |plan: &ScheduleSolution, seconds: f64| -> Result<MethodOutcome, EvalError> {
        let r = realized_dispatch(case, &plan.bid, &day.actual_c, slack, opts)?;
        Ok(MethodOutcome {
            in_sample_cost: plan.expected_cost,
            realized_cost: r.realized_cost,
            comfort_violation: r.comfort_violation,
            comfort_penalty: r.comfort_penalty,
            planning_seconds: seconds,
        })
    };
    Ok(DayComparison {
        day: day.forecast.date,
        n_scenarios: plan.set.len(),
        stochastic: score(&stoch, stoch_seconds)?,
        deterministic: score(&det, det_seconds)?,
    })
}

fn csv_err(e: impl std::fmt::Display) -> EvalError {
    EvalError::Csv(e.to_string())
}

/// `day,stochastic_cost,deterministic_cost,stoch_violation,det_violation` with
/// realised costs, one row per test day.
pub fn write_comparison_csv<W: Write>(report: &ComparisonReport, out: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["day", "stochastic_cost", "deterministic_cost", "stoch_violation", "det_violation"])
        .map_err(csv_err)?;
    for d in &report.days {
        w.write_record([
            d.day.to_string(),
            d.stochastic.realized_cost.to_string(),
            d.deterministic.realized_cost.to_string(),
            d.stochastic.comfort_violation.to_string(),
            d.deterministic.comfort_violation.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

/// Long format for plotting: `day,method,measure,value`, covering realised and
/// in-sample costs.
pub fn write_comparison_long_csv<W: Write>(report: &ComparisonReport, out: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["day", "method", "measure", "value"]).map_err(csv_err)?;
    for d in &report.days {
        for (name, m) in [("stochastic", &d.stochastic), ("deterministic", &d.deterministic)] {
            for (measure, value) in [
                ("realized_cost", m.realized_cost),
                ("in_sample_cost", m.in_sample_cost),
                ("comfort_violation", m.comfort_violation),
            ] {
                w.write_record([d.day.to_string(), name.to_string(), measure.to_string(), value.to_string()])
                    .map_err(csv_err)?;
            }
        }
    }
    w.flush().map_err(csv_err)
}
