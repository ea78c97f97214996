use std::io::Write;

use ebts_lp::{solve, LinearProgram, LpSolution, SolveOptions, Status};

use super::build::row_group;
use super::{Case, Hourly, ModelError, ModelIndex};
use crate::weather_data::HOURS_PER_DAY;

const H: usize = HOURS_PER_DAY;
const CHECK_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct BuildingTrajectory {
    pub t_in: Hourly,
    pub t_out: Hourly,
    /// End-of-hour indoor temperature.
    pub t_bld: Hourly,
    /// Radiator heat, MW.
    pub heat: Hourly,
}

/// Money terms of one scenario; `total` excludes the comfort charge.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CostBreakdown {
    pub energy: f64,
    pub reserve_revenue: f64,
    pub deviation_penalty: f64,
    /// Indoor band violation priced at the slack price.
    pub comfort_penalty: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.energy - self.reserve_revenue + self.deviation_penalty
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioDispatch {
    pub probability: f64,
    pub temperatures: Hourly,
    pub p: Hourly,
    pub p_str: Hourly,
    pub p_rls: Hourly,
    pub h: Hourly,
    pub buildings: Vec<BuildingTrajectory>,
    pub cost: CostBreakdown,
    /// Sum over buildings and hours of the distance outside the indoor band, °C·h.
    pub comfort_violation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleSolution {
    pub bid: Hourly,
    pub scenarios: Vec<ScenarioDispatch>,
    /// Probability-weighted operating cost without comfort charges.
    pub expected_cost: f64,
    pub expected_comfort_penalty: f64,
    pub objective_value: f64,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

fn pick(values: &[f64], cols: &[usize; H]) -> Hourly {
    cols.map(|j| values[j])
}

fn check(ok: bool, what: impl FnOnce() -> String) -> Result<(), ModelError> {
    if ok {
        Ok(())
    } else {
        Err(ModelError::InvariantViolation(what()))
    }
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    x >= lo - CHECK_TOL && x <= hi + CHECK_TOL
}

/// Reads the schedule out of an optimal LP solution and re-checks it against
/// the physical model directly (bounds, energy balance, storage and building
/// recursions, cost accounting) rather than trusting the solver rows.
pub fn extract_schedule(case: &Case, index: &ModelIndex, solution: &LpSolution) -> Result<ScheduleSolution, ModelError> {
    if solution.status != Status::Optimal {
        return Err(ModelError::NotOptimal);
    }
    let x = &solution.values;
    let (plant, market) = (&case.plant, &case.market);
    let dt = plant.delta_t;
    let bid = pick(x, &index.bid);
    let soft = index.slack_price.is_some();
    let mut warnings = Vec::new();
    let mut scenarios = Vec::with_capacity(index.scenarios.len());

    for (s, si) in index.scenarios.iter().enumerate() {
        let temps = index.temperatures[s];
        let (p, p_str, p_rls, h) = (pick(x, &si.p), pick(x, &si.p_str), pick(x, &si.p_rls), pick(x, &si.h));
        let mut buildings = Vec::with_capacity(case.buildings.len());
        let mut total_heat = [0.0; H];
        let mut comfort_violation = 0.0;

        for (m, b) in case.buildings.iter().enumerate() {
            let t_in = pick(x, &si.t_in[m]);
            let t_bld = pick(x, &si.t_bld[m]);
            let mut t_out = [0.0; H];
            let mut heat = [0.0; H];
            for n in 0..H {
                let prev = if n == 0 { b.t_bld_initial } else { t_bld[n - 1] };
                t_out[n] = b.outlet_temperature(t_in[n], prev);
                heat[n] = b.emission_coefficient() * (t_in[n] - prev);
                total_heat[n] += heat[n];
                let here = || format!("scenario {s}, building {m}, hour {n}");
                check(within(t_in[n], b.t_in_min, b.t_in_max), || format!("inlet temperature {} at {}", t_in[n], here()))?;
                check(within(t_out[n], b.t_out_min, b.t_out_max), || format!("outlet temperature {} at {}", t_out[n], here()))?;
                if !soft {
                    check(within(t_bld[n], b.t_bld_min, b.t_bld_max), || {
                        format!("indoor temperature {} at {}", t_bld[n], here())
                    })?;
                }
                comfort_violation += (b.t_bld_min - t_bld[n]).max(0.0) + (t_bld[n] - b.t_bld_max).max(0.0);
                let next = b.step(prev, temps[n], heat[n], dt);
                check((next - t_bld[n]).abs() < CHECK_TOL, || {
                    format!("indoor temperature recursion off by {} at {}", next - t_bld[n], here())
                })?;
            }
            buildings.push(BuildingTrajectory { t_in, t_out, t_bld, heat });
        }

        let mut cost = CostBreakdown::default();
        for n in 0..H {
            let here = || format!("scenario {s}, hour {n}");
            check(within(p[n], plant.p_min, plant.p_max), || format!("boiler power {} at {}", p[n], here()))?;
            check(within(p_str[n], plant.p_str_min, plant.p_str_max), || format!("charge {} at {}", p_str[n], here()))?;
            check(within(p_rls[n], plant.p_rls_min, plant.p_rls_max), || format!("release {} at {}", p_rls[n], here()))?;
            check(within(h[n], plant.h_min, plant.h_max), || format!("stored energy {} at {}", h[n], here()))?;
            let residual = plant.eta * p[n] - p_str[n] + p_rls[n] - total_heat[n];
            check(residual.abs() < CHECK_TOL, || format!("energy balance residual {residual} at {}", here()))?;
            let h_prev = if n == 0 { plant.h_initial } else { h[n - 1] };
            let drift = plant.retention * h_prev + dt * (p_str[n] - p_rls[n]) - h[n];
            check(drift.abs() < CHECK_TOL, || format!("storage recursion off by {drift} at {}", here()))?;
            if p_str[n].min(p_rls[n]) > CHECK_TOL {
                warnings.push(format!("simultaneous charge and release at {}", here()));
            }

            let excess = (p[n] - bid[n] - market.epsilon).max(0.0) + (bid[n] - p[n] - market.epsilon).max(0.0);
            cost.energy += market.c_e[n] * p[n] * dt;
            cost.reserve_revenue += market.c_r[n] * (bid[n] - market.baseline[n]) * dt;
            cost.deviation_penalty += market.c_f[n] * excess * dt;
        }
        if plant.terminal_rule == super::TerminalRule::Cyclic {
            check(h[H - 1] >= plant.h_initial - CHECK_TOL, || format!("scenario {s} ends with storage {}", h[H - 1]))?;
        }
        cost.comfort_penalty = index.slack_price.unwrap_or(0.0) * comfort_violation * dt;

        scenarios.push(ScenarioDispatch {
            probability: index.probabilities[s],
            temperatures: temps,
            p,
            p_str,
            p_rls,
            h,
            buildings,
            cost,
            comfort_violation,
        });
    }

    let expected_cost: f64 = scenarios.iter().map(|d| d.probability * d.cost.total()).sum();
    let expected_comfort_penalty: f64 = scenarios.iter().map(|d| d.probability * d.cost.comfort_penalty).sum();
    let accounted = expected_cost + expected_comfort_penalty;
    let obj = solution.objective_value;
    check((accounted - obj).abs() <= CHECK_TOL * obj.abs().max(1.0), || {
        format!("cost breakdown {accounted} disagrees with objective {obj}")
    })?;

    Ok(ScheduleSolution {
        bid,
        scenarios,
        expected_cost,
        expected_comfort_penalty,
        objective_value: obj,
        iterations: solution.iterations,
        warnings,
    })
}

/// Solves a program built by this module and extracts the checked schedule.
/// Infeasibility is reported with the names of the violated constraint groups.
pub fn solve_schedule(
    case: &Case,
    lp: &LinearProgram,
    index: &ModelIndex,
    opts: &SolveOptions,
) -> Result<ScheduleSolution, ModelError> {
    let sol = solve(lp, opts)?;
    match sol.status {
        Status::Optimal => extract_schedule(case, index, &sol),
        Status::Unbounded => Err(ModelError::Unbounded),
        Status::Infeasible => {
            let mut groups: Vec<String> = sol
                .infeasible_rows
                .iter()
                .filter_map(|&i| lp.constraints[i].name.as_deref())
                .map(|name| row_group(name).to_string())
                .collect();
            groups.sort();
            groups.dedup();
            Err(ModelError::Infeasible { groups })
        }
    }
}

fn csv_err(e: impl std::fmt::Display) -> ModelError {
    ModelError::Csv(e.to_string())
}

/// One row per scenario and hour: `hour,bid_mw,scenario,p_mw,p_str_mw,p_rls_mw,h_mwh`.
pub fn write_schedule_csv<W: Write>(schedule: &ScheduleSolution, out: W) -> Result<(), ModelError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["hour", "bid_mw", "scenario", "p_mw", "p_str_mw", "p_rls_mw", "h_mwh"]).map_err(csv_err)?;
    for (s, d) in schedule.scenarios.iter().enumerate() {
        for n in 0..H {
            w.write_record([
                n.to_string(),
                schedule.bid[n].to_string(),
                s.to_string(),
                d.p[n].to_string(),
                d.p_str[n].to_string(),
                d.p_rls[n].to_string(),
                d.h[n].to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(csv_err)
}

/// One row per scenario, building and hour.
pub fn write_building_csv<W: Write>(schedule: &ScheduleSolution, out: W) -> Result<(), ModelError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scenario", "building", "hour", "t_in_c", "t_out_c", "t_bld_c", "heat_mw"]).map_err(csv_err)?;
    for (s, d) in schedule.scenarios.iter().enumerate() {
        for (m, b) in d.buildings.iter().enumerate() {
            for n in 0..H {
                w.write_record([
                    s.to_string(),
                    (m + 1).to_string(),
                    n.to_string(),
                    b.t_in[n].to_string(),
                    b.t_out[n].to_string(),
                    b.t_bld[n].to_string(),
                    b.heat[n].to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.flush().map_err(csv_err)
}
