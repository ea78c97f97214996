//! Continuous linear programming.
//!
//! Problems are stated as minimisation of a linear objective over variables with
//! individual lower/upper bounds (either may be infinite) and sparse linear rows
//! with `<=`, `=` or `>=` relations. [`solve`] runs a two-phase bounded revised
//! simplex on an LU-factorised basis and returns a certified [`LpSolution`].

mod lu;
pub mod mps;
mod simplex;

use std::fmt;

pub use simplex::solve;

/// Relation between a constraint row's activity and its right-hand side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    /// Sparse coefficients `(variable index, value)`.
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
    pub name: Option<String>,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * values[j]).sum()
    }

    /// Amount by which `values` violate this row (zero when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let act = self.activity(values);
        match self.relation {
            Relation::Le => (act - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - act).max(0.0),
            Relation::Eq => (act - self.rhs).abs(),
        }
    }
}

/// A minimisation problem `min c·x + offset` subject to rows and bounds.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    /// Constant added to the objective value; it does not affect the optimiser.
    pub objective_offset: f64,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub names: Vec<Option<String>>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Adds a variable and returns its index.
    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.names.push(None);
        self.objective.len() - 1
    }

    pub fn add_named_var(&mut self, name: impl Into<String>, cost: f64, lower: f64, upper: f64) -> usize {
        let j = self.add_var(cost, lower, upper);
        self.names[j] = Some(name.into());
        j
    }

    /// Adds a row and returns its index. Duplicate variable entries are summed.
    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> usize {
        self.constraints.push(Constraint { coeffs: merge_duplicates(coeffs), relation, rhs, name: None });
        self.constraints.len() - 1
    }

    pub fn add_named_constraint(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(usize, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> usize {
        let i = self.add_constraint(coeffs, relation, rhs);
        self.constraints[i].name = Some(name.into());
        i
    }

    pub fn var_name(&self, j: usize) -> String {
        self.names.get(j).cloned().flatten().unwrap_or_else(|| format!("x{j}"))
    }

    pub fn objective_at(&self, values: &[f64]) -> f64 {
        self.objective.iter().zip(values).map(|(c, x)| c * x).sum::<f64>() + self.objective_offset
    }

    /// Largest bound or row violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let bounds = (0..self.num_vars())
            .map(|j| (self.lower[j] - values[j]).max(values[j] - self.upper[j]).max(0.0))
            .fold(0.0, f64::max);
        self.constraints.iter().map(|c| c.violation(values)).fold(bounds, f64::max)
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n || self.names.len() != n {
            return Err(LpError::DimensionMismatch);
        }
        for j in 0..n {
            if !self.objective[j].is_finite() {
                return Err(LpError::NonFinite { what: format!("objective coefficient of {}", self.var_name(j)) });
            }
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY || lo > hi {
                return Err(LpError::InvalidBounds { var: j, lower: lo, upper: hi });
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(LpError::NonFinite { what: format!("rhs of row {i}") });
            }
            for &(j, a) in &c.coeffs {
                if j >= n {
                    return Err(LpError::UnknownVariable { row: i, var: j });
                }
                if !a.is_finite() {
                    return Err(LpError::NonFinite { what: format!("coefficient ({i}, {j})") });
                }
            }
        }
        Ok(())
    }
}

fn merge_duplicates(mut coeffs: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    coeffs.sort_by_key(|&(j, _)| j);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
    for (j, a) in coeffs {
        match out.last_mut() {
            Some((k, b)) if *k == j => *b += a,
            _ => out.push((j, a)),
        }
    }
    out.retain(|&(_, a)| a != 0.0);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: Status,
    /// Primal values; meaningful only when `status` is `Optimal`.
    pub values: Vec<f64>,
    /// Objective including the constant offset; NaN unless `Optimal`.
    pub objective_value: f64,
    /// Sum of artificial values at the end of phase one.
    pub phase_one_objective: f64,
    /// Rows still violated at the end of phase one; empty unless `Infeasible`.
    pub infeasible_rows: Vec<usize>,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub feas_tol: f64,
    pub opt_tol: f64,
    /// Pivots between full basis refactorisations.
    pub refactor_interval: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
    pub max_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { feas_tol: 1e-7, opt_tol: 1e-9, refactor_interval: 100, bland_after: 1000, max_iterations: 1_000_000 }
    }
}

#[derive(Clone, Debug, thiserror::Error, PartialEq)]
pub enum LpError {
    #[error("row {row} references undeclared variable {var}")]
    UnknownVariable { row: usize, var: usize },
    #[error("variable {var} has invalid bounds [{lower}, {upper}]")]
    InvalidBounds { var: usize, lower: f64, upper: f64 },
    #[error("non-finite value in {what}")]
    NonFinite { what: String },
    #[error("objective, bound and name vectors differ in length")]
    DimensionMismatch,
    #[error("numerical instability: {0}")]
    NumericInstability(String),
    #[error("iteration limit of {0} reached")]
    IterationLimit(usize),
}
