//! Fixed-format MPS export, for cross-checking problems with external solvers.
//!
//! Names longer than eight characters do not fit fixed MPS fields, so rows are
//! written as `R0000001`... and columns as `C0000001`...; the original labels
//! are listed in leading `*` comment lines.

use std::io::{self, Write};

use crate::{LinearProgram, Relation};

fn row_name(i: usize) -> String {
    format!("R{:07}", i + 1)
}

fn col_name(j: usize) -> String {
    format!("C{:07}", j + 1)
}

fn num(v: f64) -> String {
    let s = format!("{v}");
    if s.len() <= 12 {
        return s;
    }
    let e = format!("{v:.5E}");
    if e.len() <= 12 {
        e
    } else {
        format!("{v:.3E}")
    }
}

/// Writes `lp` in fixed MPS format under the problem name `name`.
pub fn write_mps<W: Write>(lp: &LinearProgram, name: &str, mut out: W) -> io::Result<()> {
    for j in 0..lp.num_vars() {
        if let Some(label) = &lp.names[j] {
            writeln!(out, "* {} = {}", col_name(j), label)?;
        }
    }
    for (i, c) in lp.constraints.iter().enumerate() {
        if let Some(label) = &c.name {
            writeln!(out, "* {} = {}", row_name(i), label)?;
        }
    }
    writeln!(out, "NAME          {}", name.chars().take(8).collect::<String>())?;
    writeln!(out, "ROWS")?;
    writeln!(out, " N  COST")?;
    for (i, c) in lp.constraints.iter().enumerate() {
        let t = match c.relation {
            Relation::Le => 'L',
            Relation::Ge => 'G',
            Relation::Eq => 'E',
        };
        writeln!(out, " {t}  {}", row_name(i))?;
    }

    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp.num_vars()];
    for (i, c) in lp.constraints.iter().enumerate() {
        for &(j, a) in &c.coeffs {
            columns[j].push((i, a));
        }
    }
    writeln!(out, "COLUMNS")?;
    for (j, col) in columns.iter().enumerate() {
        let cj = col_name(j);
        if lp.objective[j] != 0.0 || col.is_empty() {
            writeln!(out, "    {:<8}  {:<8}  {:>12}", cj, "COST", num(lp.objective[j]))?;
        }
        for &(i, a) in col {
            writeln!(out, "    {:<8}  {:<8}  {:>12}", cj, row_name(i), num(a))?;
        }
    }

    writeln!(out, "RHS")?;
    if lp.objective_offset != 0.0 {
        writeln!(out, "    {:<8}  {:<8}  {:>12}", "RHS", "COST", num(-lp.objective_offset))?;
    }
    for (i, c) in lp.constraints.iter().enumerate() {
        if c.rhs != 0.0 {
            writeln!(out, "    {:<8}  {:<8}  {:>12}", "RHS", row_name(i), num(c.rhs))?;
        }
    }

    writeln!(out, "BOUNDS")?;
    for j in 0..lp.num_vars() {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        let cj = col_name(j);
        if lo == hi {
            writeln!(out, " FX BND       {:<8}  {:>12}", cj, num(lo))?;
            continue;
        }
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => writeln!(out, " FR BND       {cj}")?,
            (false, true) => {
                writeln!(out, " MI BND       {cj}")?;
                writeln!(out, " UP BND       {:<8}  {:>12}", cj, num(hi))?;
            }
            (true, fin_hi) => {
                if lo != 0.0 {
                    writeln!(out, " LO BND       {:<8}  {:>12}", cj, num(lo))?;
                }
                if fin_hi {
                    writeln!(out, " UP BND       {:<8}  {:>12}", cj, num(hi))?;
                }
            }
        }
    }
    writeln!(out, "ENDATA")
}
