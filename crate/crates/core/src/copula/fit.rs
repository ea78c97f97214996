use std::f64::consts::PI;

use rayon::prelude::*;

use super::family::frank_theta_from_tau;
use super::{kendall_tau, pseudo_observations, Copula, CopulaError, CopulaFamily, EmpiricalMarginal, MIN_SAMPLES};

/// Degrees-of-freedom grid searched for the Student-t copula.
pub fn student_t_nu_grid() -> Vec<f64> {
    std::iter::once(2.5).chain((3..=30).map(f64::from)).collect()
}

/// One row of the per-family model-selection table.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyScore {
    pub family: CopulaFamily,
    pub outcome: FamilyOutcome,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FamilyOutcome {
    Fitted { log_likelihood: f64, bic: f64 },
    Skipped { reason: String },
}

/// A fitted copula with its goodness-of-fit statistics and, once attached,
/// the empirical marginals of the forecast and actual temperatures.
#[derive(Clone, Debug, PartialEq)]
pub struct FittedCopula {
    pub copula: Copula,
    pub tau: f64,
    pub log_likelihood: f64,
    pub bic: f64,
    pub n_samples: usize,
    pub marginal_forecast: Option<EmpiricalMarginal>,
    pub marginal_actual: Option<EmpiricalMarginal>,
    /// Filled by [`select_family`]; empty for a single-family fit.
    pub bic_table: Vec<FamilyScore>,
}

impl FittedCopula {
    /// Wraps fixed parameters without fitting; statistics are zero.
    pub fn from_copula(copula: Copula) -> Result<Self, CopulaError> {
        copula.validate()?;
        Ok(FittedCopula {
            copula,
            tau: f64::NAN,
            log_likelihood: 0.0,
            bic: 0.0,
            n_samples: 0,
            marginal_forecast: None,
            marginal_actual: None,
            bic_table: Vec::new(),
        })
    }

    pub fn family(&self) -> CopulaFamily {
        self.copula.family()
    }

    pub fn n_params(&self) -> usize {
        self.family().n_params()
    }

    pub fn rho(&self) -> Option<f64> {
        self.copula.rho()
    }

    pub fn nu(&self) -> Option<f64> {
        self.copula.nu()
    }

    pub fn theta(&self) -> Option<f64> {
        self.copula.theta()
    }

    pub fn with_marginals(mut self, forecast: EmpiricalMarginal, actual: EmpiricalMarginal) -> Self {
        self.marginal_forecast = Some(forecast);
        self.marginal_actual = Some(actual);
        self
    }

    pub fn density(&self, u: f64, v: f64) -> Result<f64, CopulaError> {
        self.copula.density(u, v)
    }

    pub fn conditional_cdf(&self, v: f64, u: f64) -> Result<f64, CopulaError> {
        self.copula.conditional_cdf(v, u)
    }

    pub fn log_likelihood_of(&self, pseudo_obs: &[(f64, f64)]) -> Result<f64, CopulaError> {
        log_likelihood(&self.copula, pseudo_obs)
    }

    /// `-2 ln(delta) + q ln(n)` from the stored log-likelihood.
    pub fn bic(&self, n_samples: usize) -> f64 {
        bic(self.log_likelihood, self.n_params(), n_samples)
    }

    /// Draws an actual temperature given a forecast and a uniform `w` in (0, 1).
    pub fn sample_conditional(&self, forecast_c: f64, w: f64) -> Result<f64, CopulaError> {
        let (Some(mf), Some(ma)) = (&self.marginal_forecast, &self.marginal_actual) else {
            return Err(CopulaError::MissingMarginals);
        };
        let u = mf.cdf(forecast_c);
        let v = self.copula.inverse_conditional(w, u)?;
        Ok(ma.inverse(v))
    }
}

pub fn log_likelihood(copula: &Copula, pseudo_obs: &[(f64, f64)]) -> Result<f64, CopulaError> {
    if pseudo_obs.is_empty() {
        return Err(CopulaError::TooFewSamples { needed: 1, got: 0 });
    }
    pseudo_obs.iter().map(|&(u, v)| copula.ln_density(u, v)).sum()
}

pub fn bic(log_likelihood: f64, n_params: usize, n_samples: usize) -> f64 {
    -2.0 * log_likelihood + n_params as f64 * (n_samples.max(1) as f64).ln()
}

fn check_pseudo_obs(pseudo_obs: &[(f64, f64)]) -> Result<(), CopulaError> {
    if pseudo_obs.len() < MIN_SAMPLES {
        return Err(CopulaError::TooFewSamples { needed: MIN_SAMPLES, got: pseudo_obs.len() });
    }
    match pseudo_obs.iter().find(|&&(u, v)| !(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0)) {
        Some(&(u, v)) => Err(CopulaError::BoundaryInput { u, v }),
        None => Ok(()),
    }
}

/// Fits one family by inversion of Kendall's tau (plus a likelihood grid
/// search over the degrees of freedom for the Student-t family).
pub fn fit_copula(family: CopulaFamily, pseudo_obs: &[(f64, f64)]) -> Result<FittedCopula, CopulaError> {
    check_pseudo_obs(pseudo_obs)?;
    let tau = kendall_tau(pseudo_obs)?;
    fit_with_tau(family, pseudo_obs, tau)
}

fn fit_with_tau(family: CopulaFamily, pseudo_obs: &[(f64, f64)], tau: f64) -> Result<FittedCopula, CopulaError> {
    let out_of_domain = || CopulaError::TauOutOfDomain { family, tau };
    let elliptical_rho = || {
        let rho = (PI * tau / 2.0).sin();
        if rho.abs() < 1.0 {
            Ok(rho)
        } else {
            Err(out_of_domain())
        }
    };
    let (copula, log_lik) = match family {
        CopulaFamily::Gaussian => {
            let c = Copula::Gaussian { rho: elliptical_rho()? };
            (c, log_likelihood(&c, pseudo_obs)?)
        }
        CopulaFamily::StudentT => {
            let rho = elliptical_rho()?;
            let scored: Vec<(Copula, f64)> = student_t_nu_grid()
                .into_par_iter()
                .map(|nu| {
                    let c = Copula::StudentT { rho, nu };
                    log_likelihood(&c, pseudo_obs).map(|ll| (c, ll))
                })
                .collect::<Result<_, _>>()?;
            // First maximum in grid order.
            scored
                .into_iter()
                .fold(None, |best: Option<(Copula, f64)>, (c, ll)| match best {
                    Some((_, b)) if b >= ll => best,
                    _ => Some((c, ll)),
                })
                .expect("non-empty grid")
        }
        CopulaFamily::Gumbel => {
            if !(tau > 0.0 && tau < 1.0) {
                return Err(out_of_domain());
            }
            let c = Copula::Gumbel { theta: 1.0 / (1.0 - tau) };
            (c, log_likelihood(&c, pseudo_obs)?)
        }
        CopulaFamily::Clayton => {
            if !(tau > 0.0 && tau < 1.0) {
                return Err(out_of_domain());
            }
            let c = Copula::Clayton { theta: 2.0 * tau / (1.0 - tau) };
            (c, log_likelihood(&c, pseudo_obs)?)
        }
        CopulaFamily::Frank => {
            let c = Copula::Frank { theta: frank_theta_from_tau(tau)? };
            (c, log_likelihood(&c, pseudo_obs)?)
        }
    };
    if !log_lik.is_finite() {
        return Err(CopulaError::NumericFailure(format!("non-finite log-likelihood for {family}")));
    }
    let n = pseudo_obs.len();
    Ok(FittedCopula {
        copula,
        tau,
        log_likelihood: log_lik,
        bic: bic(log_lik, family.n_params(), n),
        n_samples: n,
        marginal_forecast: None,
        marginal_actual: None,
        bic_table: Vec::new(),
    })
}

/// Fits every family whose domain admits the sample tau and returns the one
/// with the smallest BIC (earliest family on ties), with the full table.
pub fn select_family(pseudo_obs: &[(f64, f64)]) -> Result<FittedCopula, CopulaError> {
    check_pseudo_obs(pseudo_obs)?;
    let tau = kendall_tau(pseudo_obs)?;
    let mut table = Vec::new();
    let mut best: Option<FittedCopula> = None;
    for family in CopulaFamily::ALL {
        match fit_with_tau(family, pseudo_obs, tau) {
            Ok(fit) => {
                table.push(FamilyScore {
                    family,
                    outcome: FamilyOutcome::Fitted { log_likelihood: fit.log_likelihood, bic: fit.bic },
                });
                if best.as_ref().is_none_or(|b| fit.bic < b.bic) {
                    best = Some(fit);
                }
            }
            Err(e @ CopulaError::TauOutOfDomain { .. }) => {
                table.push(FamilyScore { family, outcome: FamilyOutcome::Skipped { reason: e.to_string() } });
            }
            Err(e) => return Err(e),
        }
    }
    let mut best = best.ok_or(CopulaError::NoFeasibleFamily)?;
    best.bic_table = table;
    Ok(best)
}

/// Fits marginals, converts to pseudo-observations and selects a family.
pub fn fit_paired(pairs: &[(f64, f64)]) -> Result<FittedCopula, CopulaError> {
    let forecast: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let actual: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mf = EmpiricalMarginal::fit(&forecast)?;
    let ma = EmpiricalMarginal::fit(&actual)?;
    Ok(select_family(&pseudo_observations(pairs))?.with_marginals(mf, ma))
}
