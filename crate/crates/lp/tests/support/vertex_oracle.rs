//! Brute-force LP oracle for small problems with finite variable bounds.
//!
//! Every choice of `n` linearly independent hyperplanes among the rows and the
//! bound faces defines a candidate vertex; the optimum of a bounded feasible LP
//! is attained at one of them. Exponential, so only for a handful of variables.

#![allow(dead_code)]

use ebts_lp::{LinearProgram, Relation};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleResult {
    Infeasible,
    Optimal(f64),
}

const FEAS_TOL: f64 = 1e-9;

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k].abs() < 1e-10 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Some(x)
}

fn feasible(lp: &LinearProgram, x: &[f64]) -> bool {
    for j in 0..lp.num_vars() {
        if x[j] < lp.lower[j] - FEAS_TOL || x[j] > lp.upper[j] + FEAS_TOL {
            return false;
        }
    }
    lp.constraints.iter().all(|c| {
        let act = c.activity(x);
        let scale = 1.0 + c.rhs.abs();
        match c.relation {
            Relation::Le => act <= c.rhs + FEAS_TOL * scale,
            Relation::Ge => act >= c.rhs - FEAS_TOL * scale,
            Relation::Eq => (act - c.rhs).abs() <= FEAS_TOL * scale,
        }
    })
}

fn next_combination(idx: &mut [usize], total: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < total - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Minimum objective over all feasible vertices. Requires finite bounds.
pub fn enumerate_vertices(lp: &LinearProgram) -> OracleResult {
    let n = lp.num_vars();
    assert!(lp.lower.iter().chain(&lp.upper).all(|v| v.is_finite()), "oracle needs finite bounds");
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for c in &lp.constraints {
        let mut row = vec![0.0; n];
        for &(j, a) in &c.coeffs {
            row[j] += a;
        }
        planes.push((row, c.rhs));
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), lp.lower[j]));
        planes.push((e, lp.upper[j]));
    }

    let mut best: Option<f64> = None;
    let total = planes.len();
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let a: Vec<Vec<f64>> = idx.iter().map(|&i| planes[i].0.clone()).collect();
        let b: Vec<f64> = idx.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = solve_dense(a, b) {
            if feasible(lp, &x) {
                let obj = lp.objective_at(&x);
                best = Some(best.map_or(obj, |v: f64| v.min(obj)));
            }
        }
        if !next_combination(&mut idx, total) {
            break;
        }
    }
    best.map_or(OracleResult::Infeasible, OracleResult::Optimal)
}

/// Random small LP with integer data and finite bounds.
pub fn random_bounded_lp<R: rand::Rng>(rng: &mut R) -> LinearProgram {
    let n = rng.random_range(1..=6);
    let m = rng.random_range(0..=8);
    let mut lp = LinearProgram::new();
    for _ in 0..n {
        let lo = rng.random_range(-5..=0) as f64;
        let hi = lo + rng.random_range(0..=8) as f64;
        lp.add_var(rng.random_range(-5..=5) as f64, lo, hi);
    }
    for _ in 0..m {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if rng.random_bool(0.7) {
                coeffs.push((j, rng.random_range(-5..=5) as f64));
            }
        }
        let relation = match rng.random_range(0..10) {
            0 => Relation::Eq,
            1..=5 => Relation::Le,
            _ => Relation::Ge,
        };
        lp.add_constraint(coeffs, relation, rng.random_range(-10..=10) as f64);
    }
    lp
}
