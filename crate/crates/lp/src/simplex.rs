//! Two-phase bounded revised primal simplex.
//!
//! Every row `i` gets a logical variable `r_i` so that the rows read
//! `A x - r = 0`, with the relation and right-hand side turned into bounds on
//! `r_i`. Nonbasic variables sit at one of their bounds, or at zero when free.
//! Rows whose initial activity violates the bounds of their logical get an
//! artificial variable; phase one minimises the sum of artificials and phase
//! two fixes them at zero.

use crate::lu::{LuFactors, Repairs};
use crate::{LinearProgram, LpError, LpSolution, Relation, SolveOptions, Status};

const NONE: usize = usize::MAX;
/// Smallest acceptable magnitude of a pivot element.
const PIVOT_TOL: f64 = 1e-9;
/// Bound relaxation used by the Harris ratio test.
const HARRIS_TOL: f64 = 1e-9;
/// Step lengths below this count as degenerate.
const DEGENERATE_STEP: f64 = 1e-12;
/// Entries of eta vectors below this are dropped.
const DROP_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable held at zero.
    Free,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

struct Eta {
    pos: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

enum Step {
    /// The entering variable moves to its opposite bound.
    Flip(f64),
    /// Basic variable at the given position leaves; `at_lower` names the bound it hits.
    Pivot { t: f64, pos: usize, at_lower: bool },
    Unbounded,
    /// Only pivots below `PIVOT_TOL` would block this direction.
    Unstable,
}

struct Simplex<'a> {
    lp: &'a LinearProgram,
    opts: SolveOptions,
    m: usize,
    n: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    art_row: Vec<usize>,
    art_sign: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    cost_scale: f64,
    x: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    pos_of: Vec<usize>,
    lu: LuFactors,
    etas: Vec<Eta>,
    iterations: usize,
    degenerate_run: usize,
    bland: bool,
    y: Vec<f64>,
    w: Vec<f64>,
    tmp: Vec<f64>,
    colbuf: Vec<(usize, f64)>,
}

/// Solves `lp` to proven optimality, infeasibility or unboundedness.
pub fn solve(lp: &LinearProgram, opts: &SolveOptions) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let mut s = Simplex::new(lp, *opts);
    s.refactor()?;

    s.set_phase_costs(Phase::One);
    if !s.art_row.is_empty() {
        s.run(Phase::One)?;
    }
    let phase_one_objective = s.artificial_sum();
    if phase_one_objective > s.opts.feas_tol {
        let mut infeasible_rows: Vec<usize> = (0..s.art_row.len())
            .filter(|&a| s.x[s.n + s.m + a] > s.opts.feas_tol)
            .map(|a| s.art_row[a])
            .collect();
        infeasible_rows.sort_unstable();
        return Ok(LpSolution {
            status: Status::Infeasible,
            values: s.x[..s.n].to_vec(),
            objective_value: f64::NAN,
            phase_one_objective,
            infeasible_rows,
            iterations: s.iterations,
        });
    }

    s.fix_artificials();
    s.set_phase_costs(Phase::Two);
    let end = s.run(Phase::Two)?;
    let values = s.x[..s.n].to_vec();
    match end {
        PhaseEnd::Unbounded => Ok(LpSolution {
            status: Status::Unbounded,
            values,
            objective_value: f64::NEG_INFINITY,
            phase_one_objective,
            infeasible_rows: Vec::new(),
            iterations: s.iterations,
        }),
        PhaseEnd::Optimal => {
            let violation = lp.max_violation(&values);
            if violation > s.opts.feas_tol {
                return Err(LpError::NumericInstability(format!(
                    "final point violates feasibility by {violation:.3e}"
                )));
            }
            Ok(LpSolution {
                status: Status::Optimal,
                objective_value: lp.objective_at(&values),
                values,
                phase_one_objective,
                infeasible_rows: Vec::new(),
                iterations: s.iterations,
            })
        }
    }
}

fn row_bounds(relation: Relation, rhs: f64) -> (f64, f64) {
    match relation {
        Relation::Le => (f64::NEG_INFINITY, rhs),
        Relation::Ge => (rhs, f64::INFINITY),
        Relation::Eq => (rhs, rhs),
    }
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a LinearProgram, opts: SolveOptions) -> Self {
        let m = lp.num_constraints();
        let n = lp.num_vars();

        let mut counts = vec![0usize; n + 1];
        for c in &lp.constraints {
            for &(j, _) in &c.coeffs {
                counts[j + 1] += 1;
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_start = counts.clone();
        let nnz = col_start[n];
        let mut fill = counts;
        let mut col_row = vec![0; nnz];
        let mut col_val = vec![0.0; nnz];
        for (i, c) in lp.constraints.iter().enumerate() {
            for &(j, a) in &c.coeffs {
                col_row[fill[j]] = i;
                col_val[fill[j]] = a;
                fill[j] += 1;
            }
        }

        let mut lo = lp.lower.clone();
        let mut hi = lp.upper.clone();
        let mut x = vec![0.0; n];
        let mut state = vec![VarState::AtLower; n];
        for j in 0..n {
            if lo[j].is_finite() {
                x[j] = lo[j];
            } else if hi[j].is_finite() {
                x[j] = hi[j];
                state[j] = VarState::AtUpper;
            } else {
                state[j] = VarState::Free;
            }
        }

        let mut activity = vec![0.0; m];
        for (i, c) in lp.constraints.iter().enumerate() {
            activity[i] = c.activity(&x);
        }

        let mut basis = Vec::with_capacity(m);
        let mut art_row = Vec::new();
        let mut art_sign = Vec::new();
        let mut art_value = Vec::new();
        for (i, c) in lp.constraints.iter().enumerate() {
            let (rlo, rhi) = row_bounds(c.relation, c.rhs);
            lo.push(rlo);
            hi.push(rhi);
            let act = activity[i];
            if act >= rlo - opts.feas_tol && act <= rhi + opts.feas_tol {
                x.push(act);
                state.push(VarState::Basic);
                basis.push(n + i);
            } else {
                let (bound, st) = if act < rlo { (rlo, VarState::AtLower) } else { (rhi, VarState::AtUpper) };
                x.push(bound);
                state.push(st);
                let gap = bound - act;
                basis.push(n + m + art_row.len());
                art_row.push(i);
                art_sign.push(gap.signum());
                art_value.push(gap.abs());
            }
        }
        for v in art_value {
            lo.push(0.0);
            hi.push(f64::INFINITY);
            x.push(v);
            state.push(VarState::Basic);
        }

        let total = x.len();
        let mut pos_of = vec![NONE; total];
        for (p, &j) in basis.iter().enumerate() {
            pos_of[j] = p;
        }
        let cost_scale = lp.objective.iter().fold(1.0f64, |acc, c| acc.max(c.abs()));

        Simplex {
            lp,
            opts,
            m,
            n,
            col_start,
            col_row,
            col_val,
            art_row,
            art_sign,
            lo,
            hi,
            cost: vec![0.0; total],
            cost_scale,
            x,
            state,
            basis,
            pos_of,
            lu: LuFactors::factorize(0, |_, _| {}).0,
            etas: Vec::new(),
            iterations: 0,
            degenerate_run: 0,
            bland: false,
            y: vec![0.0; m],
            w: vec![0.0; m],
            tmp: vec![0.0; m],
            colbuf: Vec::new(),
        }
    }

    fn total(&self) -> usize {
        self.x.len()
    }

    fn column(&self, j: usize, out: &mut Vec<(usize, f64)>) {
        if j < self.n {
            for q in self.col_start[j]..self.col_start[j + 1] {
                out.push((self.col_row[q], self.col_val[q]));
            }
        } else if j < self.n + self.m {
            out.push((j - self.n, -1.0));
        } else {
            let a = j - self.n - self.m;
            out.push((self.art_row[a], self.art_sign[a]));
        }
    }

    fn col_dot(&self, j: usize, v: &[f64]) -> f64 {
        if j < self.n {
            let mut s = 0.0;
            for q in self.col_start[j]..self.col_start[j + 1] {
                s += self.col_val[q] * v[self.col_row[q]];
            }
            s
        } else if j < self.n + self.m {
            -v[j - self.n]
        } else {
            let a = j - self.n - self.m;
            self.art_sign[a] * v[self.art_row[a]]
        }
    }

    fn set_phase_costs(&mut self, phase: Phase) {
        self.cost.iter_mut().for_each(|c| *c = 0.0);
        match phase {
            Phase::One => {
                for a in 0..self.art_row.len() {
                    self.cost[self.n + self.m + a] = 1.0;
                }
            }
            Phase::Two => {
                for j in 0..self.n {
                    self.cost[j] = self.lp.objective[j] / self.cost_scale;
                }
            }
        }
    }

    fn artificial_sum(&self) -> f64 {
        (0..self.art_row.len()).map(|a| self.x[self.n + self.m + a].max(0.0)).sum()
    }

    fn fix_artificials(&mut self) {
        for a in 0..self.art_row.len() {
            let j = self.n + self.m + a;
            self.hi[j] = 0.0;
            if self.state[j] != VarState::Basic {
                self.state[j] = VarState::AtLower;
                self.x[j] = 0.0;
            }
        }
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        let (lu, repairs) = {
            let this = &*self;
            LuFactors::factorize(this.m, |p, out| this.column(this.basis[p], out))
        };
        self.lu = lu;
        self.etas.clear();
        self.apply_repairs(&repairs)?;
        self.recompute_basic_values();
        Ok(())
    }

    fn apply_repairs(&mut self, repairs: &Repairs) -> Result<(), LpError> {
        for &(pos, row) in repairs {
            let old = self.basis[pos];
            let logical = self.n + row;
            if self.state[logical] == VarState::Basic {
                return Err(LpError::NumericInstability("singular basis could not be repaired".into()));
            }
            self.make_nonbasic_nearest(old);
            self.pos_of[old] = NONE;
            self.basis[pos] = logical;
            self.pos_of[logical] = pos;
            self.state[logical] = VarState::Basic;
        }
        Ok(())
    }

    fn make_nonbasic_nearest(&mut self, j: usize) {
        let (lo, hi, v) = (self.lo[j], self.hi[j], self.x[j]);
        if lo.is_finite() && (!hi.is_finite() || (v - lo).abs() <= (hi - v).abs()) {
            self.state[j] = VarState::AtLower;
            self.x[j] = lo;
        } else if hi.is_finite() {
            self.state[j] = VarState::AtUpper;
            self.x[j] = hi;
        } else {
            self.state[j] = VarState::Free;
            self.x[j] = 0.0;
        }
    }

    /// `x_B = -B^{-1} N x_N`.
    fn recompute_basic_values(&mut self) {
        let mut rhs = vec![0.0; self.m];
        let mut buf = std::mem::take(&mut self.colbuf);
        for j in 0..self.total() {
            if self.state[j] == VarState::Basic || self.x[j] == 0.0 {
                continue;
            }
            buf.clear();
            self.column(j, &mut buf);
            for &(i, a) in &buf {
                rhs[i] -= a * self.x[j];
            }
        }
        self.colbuf = buf;
        self.ftran(&mut rhs);
        for p in 0..self.m {
            self.x[self.basis[p]] = rhs[p];
        }
    }

    fn ftran(&mut self, v: &mut [f64]) {
        self.lu.ftran(v, &mut self.tmp);
        for eta in &self.etas {
            let xr = v[eta.pos] / eta.pivot;
            v[eta.pos] = xr;
            if xr != 0.0 {
                for &(i, wi) in &eta.entries {
                    v[i] -= wi * xr;
                }
            }
        }
    }

    fn btran(&mut self, v: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut s = v[eta.pos];
            for &(i, wi) in &eta.entries {
                s -= wi * v[i];
            }
            v[eta.pos] = s / eta.pivot;
        }
        self.lu.btran(v, &mut self.tmp);
    }

    fn compute_duals(&mut self) {
        let mut y = std::mem::take(&mut self.y);
        for p in 0..self.m {
            y[p] = self.cost[self.basis[p]];
        }
        self.btran(&mut y);
        self.y = y;
    }

    /// Direction (+1 increase, -1 decrease) in which a nonbasic variable with
    /// reduced cost `d` improves the objective, if any.
    fn improving_direction(&self, j: usize, d: f64) -> Option<f64> {
        let tol = self.opts.opt_tol;
        match self.state[j] {
            VarState::Basic => None,
            _ if self.lo[j] == self.hi[j] => None,
            VarState::AtLower if d < -tol => Some(1.0),
            VarState::AtUpper if d > tol => Some(-1.0),
            VarState::Free if d.abs() > tol => Some(-d.signum()),
            _ => None,
        }
    }

    fn price(&self, rejected: &[usize]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.total() {
            if self.state[j] == VarState::Basic || rejected.contains(&j) {
                continue;
            }
            let d = self.cost[j] - self.col_dot(j, &self.y);
            if let Some(dir) = self.improving_direction(j, d) {
                if self.bland {
                    return Some((j, dir));
                }
                if best.is_none_or(|(_, _, b)| d.abs() > b) {
                    best = Some((j, dir, d.abs()));
                }
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn ratio_test(&self, q: usize, dir: f64) -> Step {
        // Pass 1: largest step keeping every basic variable within its
        // relaxed bounds.
        let mut t_relaxed = f64::INFINITY;
        let mut unstable_blocker = false;
        for p in 0..self.m {
            let wp = self.w[p];
            if wp.abs() <= DROP_TOL {
                continue;
            }
            let b = self.basis[p];
            let delta = -dir * wp;
            let limit = if delta < 0.0 {
                self.lo[b].is_finite().then(|| (self.x[b] - self.lo[b] + HARRIS_TOL) / -delta)
            } else {
                self.hi[b].is_finite().then(|| (self.hi[b] - self.x[b] + HARRIS_TOL) / delta)
            };
            if let Some(t) = limit {
                if wp.abs() < PIVOT_TOL {
                    unstable_blocker = true;
                    continue;
                }
                t_relaxed = t_relaxed.min(t.max(0.0));
            }
        }

        let flip = self.hi[q] - self.lo[q];
        if flip.is_finite() && flip <= t_relaxed {
            return Step::Flip(flip);
        }
        if t_relaxed == f64::INFINITY {
            return if unstable_blocker { Step::Unstable } else { Step::Unbounded };
        }

        // Pass 2: among positions blocking within the relaxed step, take the
        // largest pivot (or the lowest variable index under Bland's rule).
        let mut chosen: Option<(usize, f64, bool)> = None;
        let mut chosen_key = (f64::NEG_INFINITY, usize::MAX);
        for p in 0..self.m {
            let wp = self.w[p];
            if wp.abs() < PIVOT_TOL {
                continue;
            }
            let b = self.basis[p];
            let delta = -dir * wp;
            let (bound_finite, t, at_lower) = if delta < 0.0 {
                (self.lo[b].is_finite(), (self.x[b] - self.lo[b]) / -delta, true)
            } else {
                (self.hi[b].is_finite(), (self.hi[b] - self.x[b]) / delta, false)
            };
            if !bound_finite || t > t_relaxed {
                continue;
            }
            let key = if self.bland { (0.0, b) } else { (wp.abs(), 0) };
            let better = if self.bland {
                key.1 < chosen_key.1
            } else {
                key.0 > chosen_key.0
            };
            if better {
                chosen_key = key;
                chosen = Some((p, t.max(0.0), at_lower));
            }
        }
        match chosen {
            Some((pos, t, at_lower)) => Step::Pivot { t, pos, at_lower },
            None => Step::Unstable,
        }
    }

    fn run(&mut self, phase: Phase) -> Result<PhaseEnd, LpError> {
        let mut rejected: Vec<usize> = Vec::new();
        let mut verified = false;
        loop {
            if self.iterations >= self.opts.max_iterations {
                return Err(LpError::IterationLimit(self.opts.max_iterations));
            }
            if self.etas.len() >= self.opts.refactor_interval {
                self.refactor()?;
            }
            if phase == Phase::One && self.artificial_sum() <= 0.0 {
                return Ok(PhaseEnd::Optimal);
            }
            self.compute_duals();
            let Some((q, dir)) = self.price(&rejected) else {
                if !rejected.is_empty() {
                    return Err(LpError::NumericInstability(
                        "every improving column requires a pivot below tolerance".into(),
                    ));
                }
                // Confirm optimality on a fresh factorisation before returning.
                if verified {
                    return Ok(PhaseEnd::Optimal);
                }
                self.refactor()?;
                verified = true;
                continue;
            };
            verified = false;

            let mut w = std::mem::take(&mut self.w);
            w.iter_mut().for_each(|v| *v = 0.0);
            let mut buf = std::mem::take(&mut self.colbuf);
            buf.clear();
            self.column(q, &mut buf);
            for &(i, a) in &buf {
                w[i] = a;
            }
            self.colbuf = buf;
            self.ftran(&mut w);
            self.w = w;

            match self.ratio_test(q, dir) {
                Step::Unstable => {
                    if self.etas.is_empty() {
                        rejected.push(q);
                    } else {
                        self.refactor()?;
                    }
                    continue;
                }
                Step::Unbounded => {
                    if phase == Phase::One {
                        return Err(LpError::NumericInstability("phase one reported an unbounded ray".into()));
                    }
                    return Ok(PhaseEnd::Unbounded);
                }
                Step::Flip(t) => {
                    self.advance(q, dir, t);
                    self.state[q] = if dir > 0.0 { VarState::AtUpper } else { VarState::AtLower };
                    self.x[q] = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
                    self.note_step(t);
                }
                Step::Pivot { t, pos, at_lower } => {
                    self.advance(q, dir, t);
                    let leaving = self.basis[pos];
                    if at_lower {
                        self.state[leaving] = VarState::AtLower;
                        self.x[leaving] = self.lo[leaving];
                    } else {
                        self.state[leaving] = VarState::AtUpper;
                        self.x[leaving] = self.hi[leaving];
                    }
                    self.pos_of[leaving] = NONE;
                    self.basis[pos] = q;
                    self.pos_of[q] = pos;
                    self.state[q] = VarState::Basic;
                    let pivot = self.w[pos];
                    let entries = self
                        .w
                        .iter()
                        .enumerate()
                        .filter(|&(i, v)| i != pos && v.abs() > DROP_TOL)
                        .map(|(i, &v)| (i, v))
                        .collect();
                    self.etas.push(Eta { pos, pivot, entries });
                    self.note_step(t);
                }
            }
            rejected.clear();
            self.iterations += 1;
        }
    }

    fn advance(&mut self, q: usize, dir: f64, t: f64) {
        if t == 0.0 {
            return;
        }
        self.x[q] += dir * t;
        for p in 0..self.m {
            let wp = self.w[p];
            if wp != 0.0 {
                self.x[self.basis[p]] -= dir * t * wp;
            }
        }
    }

    fn note_step(&mut self, t: f64) {
        if t < DEGENERATE_STEP {
            self.degenerate_run += 1;
            if self.degenerate_run >= self.opts.bland_after {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
            self.bland = false;
        }
    }
}
