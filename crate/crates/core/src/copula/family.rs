use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use statrs::function::gamma::ln_gamma;

use super::CopulaError;
use crate::special::{
    bivariate_normal_cdf, gauss_legendre_20, normal_cdf, normal_quantile, student_t_cdf, student_t_quantile,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CopulaFamily {
    Gaussian,
    StudentT,
    Gumbel,
    Clayton,
    Frank,
}

impl CopulaFamily {
    pub const ALL: [CopulaFamily; 5] =
        [CopulaFamily::Gaussian, CopulaFamily::StudentT, CopulaFamily::Gumbel, CopulaFamily::Clayton, CopulaFamily::Frank];

    /// Number of fitted dependence parameters.
    pub fn n_params(self) -> usize {
        match self {
            CopulaFamily::StudentT => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CopulaFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CopulaFamily::Gaussian => "Gaussian",
            CopulaFamily::StudentT => "StudentT",
            CopulaFamily::Gumbel => "Gumbel",
            CopulaFamily::Clayton => "Clayton",
            CopulaFamily::Frank => "Frank",
        })
    }
}

impl FromStr for CopulaFamily {
    type Err = CopulaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CopulaFamily::ALL
            .into_iter()
            .find(|f| f.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| CopulaError::Document(format!("unknown copula family '{s}'")))
    }
}

/// A bivariate copula with its dependence parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Copula {
    Gaussian { rho: f64 },
    StudentT { rho: f64, nu: f64 },
    Gumbel { theta: f64 },
    Clayton { theta: f64 },
    Frank { theta: f64 },
}

fn check_interior(u: f64, v: f64) -> Result<(), CopulaError> {
    if u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(CopulaError::BoundaryInput { u, v })
    }
}

impl Copula {
    pub const INDEPENDENCE: Copula = Copula::Gaussian { rho: 0.0 };

    pub fn family(&self) -> CopulaFamily {
        match self {
            Copula::Gaussian { .. } => CopulaFamily::Gaussian,
            Copula::StudentT { .. } => CopulaFamily::StudentT,
            Copula::Gumbel { .. } => CopulaFamily::Gumbel,
            Copula::Clayton { .. } => CopulaFamily::Clayton,
            Copula::Frank { .. } => CopulaFamily::Frank,
        }
    }

    pub fn rho(&self) -> Option<f64> {
        match *self {
            Copula::Gaussian { rho } | Copula::StudentT { rho, .. } => Some(rho),
            _ => None,
        }
    }

    pub fn nu(&self) -> Option<f64> {
        match *self {
            Copula::StudentT { nu, .. } => Some(nu),
            _ => None,
        }
    }

    pub fn theta(&self) -> Option<f64> {
        match *self {
            Copula::Gumbel { theta } | Copula::Clayton { theta } | Copula::Frank { theta } => Some(theta),
            _ => None,
        }
    }

    /// Checks the parameter domain of the family.
    pub fn validate(&self) -> Result<(), CopulaError> {
        let ok = match *self {
            Copula::Gaussian { rho } => rho.abs() < 1.0,
            Copula::StudentT { rho, nu } => rho.abs() < 1.0 && nu > 2.0 && nu.is_finite(),
            Copula::Gumbel { theta } => (1.0..f64::INFINITY).contains(&theta),
            Copula::Clayton { theta } => theta > 0.0 && theta.is_finite(),
            Copula::Frank { theta } => theta != 0.0 && theta.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(CopulaError::InvalidParameter(format!("{self:?}")))
        }
    }

    /// Natural log of the copula density at an interior point.
    pub fn ln_density(&self, u: f64, v: f64) -> Result<f64, CopulaError> {
        check_interior(u, v)?;
        Ok(match *self {
            Copula::Gaussian { rho } => gaussian_ln_density(rho, normal_quantile(u), normal_quantile(v)),
            Copula::StudentT { rho, nu } => {
                student_ln_density(rho, nu, student_t_quantile(u, nu), student_t_quantile(v, nu))
            }
            Copula::Gumbel { theta } => {
                let (x, y) = (-u.ln(), -v.ln());
                let s = x.powf(theta) + y.powf(theta);
                let a = s.powf(1.0 / theta);
                -a + (theta - 1.0) * (x.ln() + y.ln()) + x + y + (1.0 / theta - 2.0) * s.ln() + (a + theta - 1.0).ln()
            }
            Copula::Clayton { theta } => {
                let s = u.powf(-theta) + v.powf(-theta) - 1.0;
                (1.0 + theta).ln() - (theta + 1.0) * (u.ln() + v.ln()) - (2.0 + 1.0 / theta) * s.ln()
            }
            Copula::Frank { theta } => {
                // c = theta (1 - e^-theta) e^{-theta(u+v)} / [(1 - e^-theta) - (1 - e^{-theta u})(1 - e^{-theta v})]^2
                let g1 = -(-theta).exp_m1();
                let gu = -(-theta * u).exp_m1();
                let gv = -(-theta * v).exp_m1();
                let denom = g1 - gu * gv;
                (theta * g1).abs().ln() - theta * (u + v) - 2.0 * denom.abs().ln()
            }
        })
    }

    pub fn density(&self, u: f64, v: f64) -> Result<f64, CopulaError> {
        self.ln_density(u, v).map(f64::exp)
    }

    /// Joint CDF `C(u, v)`; values on the boundary follow the copula limits.
    pub fn cdf(&self, u: f64, v: f64) -> f64 {
        let (u, v) = (u.clamp(0.0, 1.0), v.clamp(0.0, 1.0));
        if u == 0.0 || v == 0.0 {
            return 0.0;
        }
        if u == 1.0 {
            return v;
        }
        if v == 1.0 {
            return u;
        }
        match *self {
            Copula::Gaussian { rho } => bivariate_normal_cdf(normal_quantile(u), normal_quantile(v), rho),
            Copula::StudentT { .. } => {
                // C(u, v) = integral over s in (0, u) of dC/du(s, v).
                let panels = 32;
                let h = u / panels as f64;
                (0..panels)
                    .map(|i| {
                        gauss_legendre_20(
                            |s| self.conditional_cdf(v, s).unwrap_or(0.0),
                            i as f64 * h,
                            (i + 1) as f64 * h,
                        )
                    })
                    .sum()
            }
            Copula::Gumbel { theta } => {
                let s = (-u.ln()).powf(theta) + (-v.ln()).powf(theta);
                (-s.powf(1.0 / theta)).exp()
            }
            Copula::Clayton { theta } => (u.powf(-theta) + v.powf(-theta) - 1.0).powf(-1.0 / theta),
            Copula::Frank { theta } => {
                let num = (-theta * u).exp_m1() * (-theta * v).exp_m1();
                -(num / (-theta).exp_m1()).ln_1p() / theta
            }
        }
    }

    /// `dC(u, v)/du`: the CDF of the second coordinate given the first is `u`.
    pub fn conditional_cdf(&self, v: f64, u: f64) -> Result<f64, CopulaError> {
        check_interior(u, v)?;
        let p = match *self {
            Copula::Gaussian { rho } => {
                let (x, y) = (normal_quantile(u), normal_quantile(v));
                normal_cdf((y - rho * x) / (1.0 - rho * rho).sqrt())
            }
            Copula::StudentT { rho, nu } => {
                let (x, y) = (student_t_quantile(u, nu), student_t_quantile(v, nu));
                let scale = ((nu + x * x) * (1.0 - rho * rho) / (nu + 1.0)).sqrt();
                student_t_cdf((y - rho * x) / scale, nu + 1.0)
            }
            Copula::Gumbel { theta } => {
                let (x, y) = (-u.ln(), -v.ln());
                let s = x.powf(theta) + y.powf(theta);
                let c = (-s.powf(1.0 / theta)).exp();
                c * s.powf(1.0 / theta - 1.0) * x.powf(theta - 1.0) / u
            }
            Copula::Clayton { theta } => {
                let s = u.powf(-theta) + v.powf(-theta) - 1.0;
                (-(theta + 1.0) * u.ln() - (1.0 / theta + 1.0) * s.ln()).exp()
            }
            Copula::Frank { theta } => {
                let eu = (-theta * u).exp();
                let gv = (-theta * v).exp_m1();
                eu * gv / ((-theta).exp_m1() + (-theta * u).exp_m1() * gv)
            }
        };
        if p.is_finite() {
            Ok(p.clamp(0.0, 1.0))
        } else {
            Err(CopulaError::NumericFailure(format!("conditional CDF of {self:?} at ({u}, {v})")))
        }
    }

    /// Solves `conditional_cdf(v | u) = w` for `v` by bisection to `|dv| < 1e-10`.
    pub fn inverse_conditional(&self, w: f64, u: f64) -> Result<f64, CopulaError> {
        if !(w > 0.0 && w < 1.0) {
            return Err(CopulaError::NumericFailure(format!("uniform draw {w} outside (0, 1)")));
        }
        if !(u > 0.0 && u < 1.0) {
            return Err(CopulaError::BoundaryInput { u, v: w });
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while hi - lo >= 1e-10 {
            let mid = 0.5 * (lo + hi);
            if self.conditional_cdf(mid, u)? < w {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Maps two independent uniforms to a draw `(u, v)` from the copula.
    pub fn sample(&self, w1: f64, w2: f64) -> Result<(f64, f64), CopulaError> {
        match *self {
            Copula::Gaussian { rho } => {
                let x = normal_quantile(w1);
                let y = rho * x + (1.0 - rho * rho).sqrt() * normal_quantile(w2);
                Ok((w1, normal_cdf(y)))
            }
            _ => Ok((w1, self.inverse_conditional(w2, w1)?)),
        }
    }
}

/// Gaussian copula log density in its matrix form with `Z = 2`:
/// `-1/2 ln|W| - 1/2 psi^T (W^-1 - I) psi` for correlation matrix `W`.
fn gaussian_ln_density(rho: f64, a: f64, b: f64) -> f64 {
    let corr = [[1.0, rho], [rho, 1.0]];
    let det = corr[0][0] * corr[1][1] - corr[0][1] * corr[1][0];
    let inv = [[corr[1][1] / det, -corr[0][1] / det], [-corr[1][0] / det, corr[0][0] / det]];
    let psi = [a, b];
    let mut quad = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let identity = if i == j { 1.0 } else { 0.0 };
            quad += psi[i] * (inv[i][j] - identity) * psi[j];
        }
    }
    -0.5 * det.ln() - 0.5 * quad
}

fn student_ln_density(rho: f64, nu: f64, a: f64, b: f64) -> f64 {
    let one_m = 1.0 - rho * rho;
    ln_gamma(0.5 * (nu + 2.0)) + ln_gamma(0.5 * nu) - 2.0 * ln_gamma(0.5 * (nu + 1.0)) - 0.5 * one_m.ln()
        - 0.5 * (nu + 2.0) * ((a * a - 2.0 * rho * a * b + b * b) / (nu * one_m)).ln_1p()
        + 0.5 * (nu + 1.0) * ((a * a / nu).ln_1p() + (b * b / nu).ln_1p())
}

/// Kendall's tau of a Frank copula: `1 - 4 (1 - D1(theta)) / theta`.
pub fn frank_tau(theta: f64) -> f64 {
    if theta == 0.0 {
        return 0.0;
    }
    if theta < 0.0 {
        return -frank_tau(-theta);
    }
    1.0 - 4.0 * (1.0 - debye1(theta)) / theta
}

/// First Debye function `D1(x) = (1/x) * integral_0^x t / (e^t - 1) dt`, `x > 0`.
fn debye1(x: f64) -> f64 {
    const CUTOFF: f64 = 60.0;
    let integrand = |t: f64| if t == 0.0 { 1.0 } else { t / t.exp_m1() };
    let integral = if x > CUTOFF {
        // The tail beyond 60 is below 1e-24.
        PI * PI / 6.0
    } else {
        let panels = (x / 2.0).ceil().max(1.0) as usize;
        let h = x / panels as f64;
        (0..panels).map(|i| gauss_legendre_20(integrand, i as f64 * h, (i + 1) as f64 * h)).sum()
    };
    integral / x
}

/// Inverts [`frank_tau`] by bisection to an absolute tolerance of 1e-8 in theta.
pub fn frank_theta_from_tau(tau: f64) -> Result<f64, CopulaError> {
    if tau == 0.0 || !(tau.abs() < 1.0) {
        return Err(CopulaError::TauOutOfDomain { family: CopulaFamily::Frank, tau });
    }
    let target = tau.abs();
    let mut hi = 1.0;
    while frank_tau(hi) < target {
        hi *= 2.0;
        if hi > 1e7 {
            return Err(CopulaError::NumericFailure(format!("cannot bracket Frank parameter for tau {tau}")));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-8 {
        let mid = 0.5 * (lo + hi);
        if frank_tau(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).copysign(tau))
}
