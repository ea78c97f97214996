//! TOML document for a fitted copula, so fitting and scheduling can run as
//! separate invocations.
//!
//! ```toml
//! family = "StudentT"
//! rho = 0.93
//! nu = 5.0
//! tau = 0.78
//! log_likelihood = 10012.5
//! bic = -20006.3
//! n_samples = 14520
//! marginal_forecast = [-24.1, ...]   # ascending
//! marginal_actual = [-25.3, ...]
//!
//! [[bic_table]]
//! family = "Gaussian"
//! log_likelihood = 10010.1
//! bic = -20010.7
//!
//! [[bic_table]]
//! family = "Gumbel"
//! skipped = "..."
//! ```

use serde::{Deserialize, Serialize};

use super::{Copula, CopulaError, CopulaFamily, EmpiricalMarginal, FamilyOutcome, FamilyScore, FittedCopula};

#[derive(Serialize, Deserialize)]
struct Document {
    family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau: Option<f64>,
    log_likelihood: f64,
    bic: f64,
    n_samples: usize,
    marginal_forecast: Vec<f64>,
    marginal_actual: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    bic_table: Vec<ScoreRow>,
}

#[derive(Serialize, Deserialize)]
struct ScoreRow {
    family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    log_likelihood: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    skipped: Option<String>,
}

impl FittedCopula {
    pub fn to_document(&self) -> Result<String, CopulaError> {
        let (Some(mf), Some(ma)) = (&self.marginal_forecast, &self.marginal_actual) else {
            return Err(CopulaError::MissingMarginals);
        };
        let doc = Document {
            family: self.family().to_string(),
            rho: self.rho(),
            nu: self.nu(),
            theta: self.theta(),
            tau: self.tau.is_finite().then_some(self.tau),
            log_likelihood: self.log_likelihood,
            bic: self.bic,
            n_samples: self.n_samples,
            marginal_forecast: mf.sorted_values().to_vec(),
            marginal_actual: ma.sorted_values().to_vec(),
            bic_table: self
                .bic_table
                .iter()
                .map(|s| match &s.outcome {
                    FamilyOutcome::Fitted { log_likelihood, bic } => ScoreRow {
                        family: s.family.to_string(),
                        log_likelihood: Some(*log_likelihood),
                        bic: Some(*bic),
                        skipped: None,
                    },
                    FamilyOutcome::Skipped { reason } => ScoreRow {
                        family: s.family.to_string(),
                        log_likelihood: None,
                        bic: None,
                        skipped: Some(reason.clone()),
                    },
                })
                .collect(),
        };
        toml::to_string(&doc).map_err(|e| CopulaError::Document(e.to_string()))
    }

    pub fn from_document(text: &str) -> Result<Self, CopulaError> {
        let doc: Document = toml::from_str(text).map_err(|e| CopulaError::Document(e.to_string()))?;
        let family: CopulaFamily = doc.family.parse()?;
        let need = |x: Option<f64>, name: &str| {
            x.ok_or_else(|| CopulaError::Document(format!("{family} copula requires '{name}'")))
        };
        let copula = match family {
            CopulaFamily::Gaussian => Copula::Gaussian { rho: need(doc.rho, "rho")? },
            CopulaFamily::StudentT => Copula::StudentT { rho: need(doc.rho, "rho")?, nu: need(doc.nu, "nu")? },
            CopulaFamily::Gumbel => Copula::Gumbel { theta: need(doc.theta, "theta")? },
            CopulaFamily::Clayton => Copula::Clayton { theta: need(doc.theta, "theta")? },
            CopulaFamily::Frank => Copula::Frank { theta: need(doc.theta, "theta")? },
        };
        copula.validate()?;
        let bic_table = doc
            .bic_table
            .into_iter()
            .map(|row| {
                let family: CopulaFamily = row.family.parse()?;
                let outcome = match (row.log_likelihood, row.bic, row.skipped) {
                    (Some(log_likelihood), Some(bic), None) => FamilyOutcome::Fitted { log_likelihood, bic },
                    (None, None, Some(reason)) => FamilyOutcome::Skipped { reason },
                    _ => return Err(CopulaError::Document(format!("malformed BIC row for {family}"))),
                };
                Ok(FamilyScore { family, outcome })
            })
            .collect::<Result<_, CopulaError>>()?;
        Ok(FittedCopula {
            copula,
            tau: doc.tau.unwrap_or(f64::NAN),
            log_likelihood: doc.log_likelihood,
            bic: doc.bic,
            n_samples: doc.n_samples,
            marginal_forecast: Some(EmpiricalMarginal::from_sorted(doc.marginal_forecast)?),
            marginal_actual: Some(EmpiricalMarginal::from_sorted(doc.marginal_actual)?),
            bic_table,
        })
    }
}
