use ebts_lp::{LinearProgram, Relation};

use super::{Case, Hourly, ModelError};
use crate::scenario_gen::{Profile, ScenarioSet};
use crate::weather_data::HOURS_PER_DAY;

const H: usize = HOURS_PER_DAY;

/// Column indices of one scenario's recourse variables.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioIndex {
    pub p: [usize; H],
    pub p_str: [usize; H],
    pub p_rls: [usize; H],
    pub h: [usize; H],
    pub d_up: [usize; H],
    pub d_down: [usize; H],
    /// Per building.
    pub t_in: Vec<[usize; H]>,
    pub t_bld: Vec<[usize; H]>,
    /// Below-band and above-band indoor temperature slacks, when comfort is soft.
    pub comfort: Option<(Vec<[usize; H]>, Vec<[usize; H]>)>,
}

/// Maps model quantities to LP columns and keeps the data the LP was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelIndex {
    pub bid: [usize; H],
    pub scenarios: Vec<ScenarioIndex>,
    pub probabilities: Vec<f64>,
    pub temperatures: Vec<Profile>,
    /// Price per °C·h outside the indoor band; `None` means the band is hard.
    pub slack_price: Option<f64>,
}

impl ModelIndex {
    pub fn num_vars(&self, n_buildings: usize) -> usize {
        let per = 6 + 2 * n_buildings + if self.slack_price.is_some() { 2 * n_buildings } else { 0 };
        H + self.scenarios.len() * H * per
    }
}

/// Stochastic day-ahead program: hourly bids shared by all scenarios and
/// per-scenario dispatch minimising the probability-weighted cost.
pub fn build_stochastic_lp(case: &Case, scenarios: &ScenarioSet) -> Result<(LinearProgram, ModelIndex), ModelError> {
    assemble(case, scenarios, None, None)
}

/// Single-scenario program on the point forecast.
pub fn build_deterministic_lp(case: &Case, forecast: &Hourly) -> Result<(LinearProgram, ModelIndex), ModelError> {
    assemble(case, &ScenarioSet::singleton(*forecast), None, None)
}

/// Dispatch under realised temperatures with the bids fixed. Leaving the
/// indoor band is allowed at `slack_price` per °C·h.
pub fn build_realized_lp(
    case: &Case,
    bid: &Hourly,
    actual: &Hourly,
    slack_price: f64,
) -> Result<(LinearProgram, ModelIndex), ModelError> {
    if bid.iter().any(|x| !x.is_finite()) {
        return Err(ModelError::InvalidParameter("non-finite bid".into()));
    }
    if !(slack_price >= 0.0 && slack_price.is_finite()) {
        return Err(ModelError::InvalidParameter(format!("comfort slack price {slack_price}")));
    }
    assemble(case, &ScenarioSet::singleton(*actual), Some(bid), Some(slack_price))
}

fn assemble(
    case: &Case,
    scenarios: &ScenarioSet,
    fixed_bid: Option<&Hourly>,
    slack_price: Option<f64>,
) -> Result<(LinearProgram, ModelIndex), ModelError> {
    case.validate()?;
    if scenarios.profiles.len() != scenarios.probabilities.len() {
        return Err(ModelError::InconsistentDimensions(format!(
            "{} scenario profiles but {} probabilities",
            scenarios.profiles.len(),
            scenarios.probabilities.len()
        )));
    }
    scenarios.validate().map_err(|e| ModelError::InvalidParameter(e.to_string()))?;

    let (plant, market, blds) = (&case.plant, &case.market, &case.buildings);
    let dt = plant.delta_t;
    let mut lp = LinearProgram::new();

    let bid: [usize; H] = std::array::from_fn(|n| {
        let (lo, hi) = match fixed_bid {
            Some(b) => (b[n], b[n]),
            None => (plant.p_min, plant.p_max),
        };
        lp.add_named_var(format!("O[h{n:02}]"), -market.c_r[n] * dt, lo, hi)
    });
    lp.objective_offset = (0..H).map(|n| market.c_r[n] * market.baseline[n] * dt).sum();

    let mut index = ModelIndex {
        bid,
        scenarios: Vec::with_capacity(scenarios.len()),
        probabilities: scenarios.probabilities.clone(),
        temperatures: scenarios.profiles.clone(),
        slack_price,
    };

    for (s, (temps, &prob)) in scenarios.profiles.iter().zip(&scenarios.probabilities).enumerate() {
        let var = |lp: &mut LinearProgram, name: &str, cost: &dyn Fn(usize) -> f64, lo: f64, hi: f64| -> [usize; H] {
            std::array::from_fn(|n| lp.add_named_var(format!("{name}[s{s},h{n:02}]"), cost(n), lo, hi))
        };
        let free = |_: usize| 0.0;
        let energy = |n: usize| prob * market.c_e[n] * dt;
        let penalty = |n: usize| prob * market.c_f[n] * dt;
        let p = var(&mut lp, "P", &energy, plant.p_min, plant.p_max);
        let p_str = var(&mut lp, "Pstr", &free, plant.p_str_min, plant.p_str_max);
        let p_rls = var(&mut lp, "Prls", &free, plant.p_rls_min, plant.p_rls_max);
        let h = var(&mut lp, "H", &free, plant.h_min, plant.h_max);
        let d_up = var(&mut lp, "Dup", &penalty, 0.0, f64::INFINITY);
        let d_down = var(&mut lp, "Ddown", &penalty, 0.0, f64::INFINITY);
        let mut t_in = Vec::with_capacity(blds.len());
        let mut t_bld = Vec::with_capacity(blds.len());
        for (m, b) in blds.iter().enumerate() {
            t_in.push(std::array::from_fn(|n| {
                lp.add_named_var(format!("Tin[s{s},b{m},h{n:02}]"), 0.0, b.t_in_min, b.t_in_max)
            }));
            let (lo, hi) = if slack_price.is_some() { (f64::NEG_INFINITY, f64::INFINITY) } else { (b.t_bld_min, b.t_bld_max) };
            t_bld.push(std::array::from_fn(|n| lp.add_named_var(format!("Tbld[s{s},b{m},h{n:02}]"), 0.0, lo, hi)));
        }
        let comfort = slack_price.map(|price| {
            let mut below = Vec::with_capacity(blds.len());
            let mut above = Vec::with_capacity(blds.len());
            for m in 0..blds.len() {
                below.push(std::array::from_fn(|n| {
                    lp.add_named_var(format!("Cold[s{s},b{m},h{n:02}]"), prob * price * dt, 0.0, f64::INFINITY)
                }));
                above.push(std::array::from_fn(|n| {
                    lp.add_named_var(format!("Hot[s{s},b{m},h{n:02}]"), prob * price * dt, 0.0, f64::INFINITY)
                }));
            }
            (below, above)
        });

        for n in 0..H {
            let tag = format!("s{s},h{n:02}");

            // Boiler output plus storage release covers charging and radiator heat.
            let mut row = vec![(p[n], plant.eta), (p_str[n], -1.0), (p_rls[n], 1.0)];
            let mut rhs = 0.0;
            for (m, b) in blds.iter().enumerate() {
                let k = b.emission_coefficient();
                row.push((t_in[m][n], -k));
                if n == 0 {
                    rhs -= k * b.t_bld_initial;
                } else {
                    row.push((t_bld[m][n - 1], k));
                }
            }
            lp.add_named_constraint(format!("balance[{tag}]"), row, Relation::Eq, rhs);

            let mut row = vec![(h[n], 1.0), (p_str[n], -dt), (p_rls[n], dt)];
            let rhs = if n == 0 {
                plant.retention * plant.h_initial
            } else {
                row.push((h[n - 1], -plant.retention));
                0.0
            };
            lp.add_named_constraint(format!("storage[{tag}]"), row, Relation::Eq, rhs);

            lp.add_named_constraint(
                format!("deadband_up[{tag}]"),
                vec![(p[n], 1.0), (bid[n], -1.0), (d_up[n], -1.0)],
                Relation::Le,
                market.epsilon,
            );
            lp.add_named_constraint(
                format!("deadband_down[{tag}]"),
                vec![(bid[n], 1.0), (p[n], -1.0), (d_down[n], -1.0)],
                Relation::Le,
                market.epsilon,
            );

            for (m, b) in blds.iter().enumerate() {
                let btag = format!("s{s},b{m},h{n:02}");
                let k = b.emission_coefficient();
                let carry = b.c_bld - dt * (b.u + k);

                // c T_n = c T_{n-1} + dt [u (Tenv - T_{n-1}) + k (Tin_n - T_{n-1})]
                let mut row = vec![(t_bld[m][n], b.c_bld), (t_in[m][n], -dt * k)];
                let mut rhs = dt * b.u * temps[n];
                if n == 0 {
                    rhs += carry * b.t_bld_initial;
                } else {
                    row.push((t_bld[m][n - 1], -carry));
                }
                lp.add_named_constraint(format!("building[{btag}]"), row, Relation::Eq, rhs);

                let mut row = vec![(t_in[m][n], 1.0 - b.theta)];
                let mut shift = 0.0;
                if n == 0 {
                    shift = b.theta * b.t_bld_initial;
                } else {
                    row.push((t_bld[m][n - 1], b.theta));
                }
                lp.add_named_constraint(format!("outlet_min[{btag}]"), row.clone(), Relation::Ge, b.t_out_min - shift);
                lp.add_named_constraint(format!("outlet_max[{btag}]"), row, Relation::Le, b.t_out_max - shift);

                if let Some((below, above)) = &comfort {
                    lp.add_named_constraint(
                        format!("comfort_min[{btag}]"),
                        vec![(t_bld[m][n], 1.0), (below[m][n], 1.0)],
                        Relation::Ge,
                        b.t_bld_min,
                    );
                    lp.add_named_constraint(
                        format!("comfort_max[{btag}]"),
                        vec![(t_bld[m][n], 1.0), (above[m][n], -1.0)],
                        Relation::Le,
                        b.t_bld_max,
                    );
                }
            }
        }
        if plant.terminal_rule == super::TerminalRule::Cyclic {
            lp.add_named_constraint(format!("storage_terminal[s{s}]"), vec![(h[H - 1], 1.0)], Relation::Ge, plant.h_initial);
        }

        index.scenarios.push(ScenarioIndex { p, p_str, p_rls, h, d_up, d_down, t_in, t_bld, comfort });
    }
    Ok((lp, index))
}

/// Constraint group of a row name such as `balance[s0,h03]`.
pub(super) fn row_group(name: &str) -> &str {
    name.split('[').next().unwrap_or(name)
}
