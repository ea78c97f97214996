//! Sparse LU factorisation of simplex bases.
//!
//! Left-looking elimination: each basis column is solved against the part of `L`
//! built so far (sparse triangular solve with a depth-first reach), then a pivot
//! row is chosen among the not-yet-pivoted rows by threshold partial pivoting,
//! preferring sparse rows. Columns are processed sparsest first, so the many
//! logical (unit) columns of a typical basis pivot without fill.
//!
//! The factors satisfy `P B Q = L U` where `P` maps rows to pivot steps and `Q`
//! maps pivot steps to basis positions. `L` is unit lower triangular and both
//! factors are stored column-wise in pivot-step coordinates.

const NONE: usize = usize::MAX;

/// Relative threshold for accepting a pivot against the column maximum.
const PIVOT_THRESHOLD: f64 = 0.1;
/// Absolute magnitude below which a column is treated as dependent.
const SINGULAR_TOL: f64 = 1e-11;

#[derive(Debug, Clone)]
pub(crate) struct LuFactors {
    m: usize,
    row_to_step: Vec<usize>,
    step_to_pos: Vec<usize>,
    l_start: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_start: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
    u_diag: Vec<f64>,
}

/// Basis positions whose column was numerically dependent, each paired with the
/// row whose logical (`-e_row`) column was substituted in its place.
pub(crate) type Repairs = Vec<(usize, usize)>;

struct Workspace {
    x: Vec<f64>,
    mark: Vec<u32>,
    generation: u32,
    stack: Vec<usize>,
    pstack: Vec<usize>,
    reach: Vec<usize>,
}

impl LuFactors {
    /// Factorises the `m x m` basis whose column at position `p` is produced by
    /// `column(p, out)` as `(row, value)` pairs.
    pub(crate) fn factorize<F>(m: usize, mut column: F) -> (Self, Repairs)
    where
        F: FnMut(usize, &mut Vec<(usize, f64)>),
    {
        let mut buf = Vec::new();
        let mut col_nnz = vec![0usize; m];
        let mut row_count = vec![0usize; m];
        for p in 0..m {
            buf.clear();
            column(p, &mut buf);
            col_nnz[p] = buf.len();
            for &(i, _) in &buf {
                row_count[i] += 1;
            }
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&p| (col_nnz[p], p));

        let mut lu = LuFactors {
            m,
            row_to_step: vec![NONE; m],
            step_to_pos: Vec::with_capacity(m),
            l_start: vec![0],
            l_idx: Vec::new(),
            l_val: Vec::new(),
            u_start: vec![0],
            u_idx: Vec::new(),
            u_val: Vec::new(),
            u_diag: Vec::with_capacity(m),
        };
        let mut ws = Workspace {
            x: vec![0.0; m],
            mark: vec![0; m],
            generation: 0,
            stack: vec![0; m],
            pstack: vec![0; m],
            reach: Vec::with_capacity(m),
        };

        let mut deficient = Vec::new();
        for &p in &order {
            buf.clear();
            column(p, &mut buf);
            if !lu.eliminate_column(p, &buf, &row_count, &mut ws) {
                deficient.push(p);
            }
        }

        let mut repairs = Vec::new();
        if !deficient.is_empty() {
            let free_rows: Vec<usize> = (0..m).filter(|&i| lu.row_to_step[i] == NONE).collect();
            debug_assert_eq!(free_rows.len(), deficient.len());
            for (&p, &row) in deficient.iter().zip(&free_rows) {
                let unit = [(row, -1.0)];
                let ok = lu.eliminate_column(p, &unit, &row_count, &mut ws);
                debug_assert!(ok);
                repairs.push((p, row));
            }
        }

        // Relabel L rows from original rows to pivot steps.
        for i in lu.l_idx.iter_mut() {
            *i = lu.row_to_step[*i];
        }
        (lu, repairs)
    }

    /// Returns false (leaving no trace in the factors) when the column has no
    /// acceptable pivot among unpivoted rows.
    fn eliminate_column(&mut self, pos: usize, col: &[(usize, f64)], row_count: &[usize], ws: &mut Workspace) -> bool {
        self.reach(col, ws);
        for &i in &ws.reach {
            ws.x[i] = 0.0;
        }
        for &(i, v) in col {
            ws.x[i] += v;
        }
        // Reach is in topological order.
        for &j in &ws.reach {
            let step = self.row_to_step[j];
            if step == NONE {
                continue;
            }
            let xj = ws.x[j];
            if xj == 0.0 {
                continue;
            }
            for q in self.l_start[step]..self.l_start[step + 1] {
                ws.x[self.l_idx[q]] -= self.l_val[q] * xj;
            }
        }

        let mut max_abs = 0.0f64;
        for &i in &ws.reach {
            if self.row_to_step[i] == NONE {
                max_abs = max_abs.max(ws.x[i].abs());
            }
        }
        if max_abs < SINGULAR_TOL {
            for &i in &ws.reach {
                ws.x[i] = 0.0;
            }
            return false;
        }
        let mut pivot_row = NONE;
        for &i in &ws.reach {
            if self.row_to_step[i] != NONE {
                continue;
            }
            let a = ws.x[i].abs();
            if a < PIVOT_THRESHOLD * max_abs {
                continue;
            }
            let better = pivot_row == NONE
                || row_count[i] < row_count[pivot_row]
                || (row_count[i] == row_count[pivot_row] && a > ws.x[pivot_row].abs());
            if better {
                pivot_row = i;
            }
        }

        let step = self.step_to_pos.len();
        let pivot = ws.x[pivot_row];
        for &i in &ws.reach {
            let v = ws.x[i];
            ws.x[i] = 0.0;
            if v == 0.0 || i == pivot_row {
                continue;
            }
            match self.row_to_step[i] {
                NONE => {
                    self.l_idx.push(i);
                    self.l_val.push(v / pivot);
                }
                s => {
                    self.u_idx.push(s);
                    self.u_val.push(v);
                }
            }
        }
        self.row_to_step[pivot_row] = step;
        self.step_to_pos.push(pos);
        self.u_diag.push(pivot);
        self.l_start.push(self.l_idx.len());
        self.u_start.push(self.u_idx.len());
        true
    }

    /// Rows reachable from the column pattern through the graph of `L`, in
    /// topological order, written to `ws.reach`.
    fn reach(&self, col: &[(usize, f64)], ws: &mut Workspace) {
        ws.generation = ws.generation.wrapping_add(1);
        if ws.generation == 0 {
            ws.mark.iter_mut().for_each(|g| *g = 0);
            ws.generation = 1;
        }
        let gen = ws.generation;
        ws.reach.clear();
        for &(root, _) in col {
            if ws.mark[root] == gen {
                continue;
            }
            let mut head = 0usize;
            ws.stack[0] = root;
            let mut first_visit = true;
            loop {
                let j = ws.stack[head];
                let step = self.row_to_step[j];
                if first_visit {
                    ws.mark[j] = gen;
                    ws.pstack[head] = if step == NONE { 0 } else { self.l_start[step] };
                }
                let end = if step == NONE { 0 } else { self.l_start[step + 1] };
                let mut descended = false;
                let mut q = ws.pstack[head];
                while q < end {
                    let i = self.l_idx[q];
                    q += 1;
                    if ws.mark[i] == gen {
                        continue;
                    }
                    ws.pstack[head] = q;
                    head += 1;
                    ws.stack[head] = i;
                    descended = true;
                    break;
                }
                if descended {
                    first_visit = true;
                    continue;
                }
                ws.reach.push(j);
                if head == 0 {
                    break;
                }
                head -= 1;
                first_visit = false;
            }
        }
        // Post-order gives reverse topological order.
        ws.reach.reverse();
    }

    /// Solves `B w = rhs` in place. On entry `rhs` is indexed by row; on exit by
    /// basis position. `tmp` must have length `m`.
    pub(crate) fn ftran(&self, rhs: &mut [f64], tmp: &mut [f64]) {
        for (i, &v) in rhs.iter().enumerate() {
            tmp[self.row_to_step[i]] = v;
        }
        for k in 0..self.m {
            let yk = tmp[k];
            if yk == 0.0 {
                continue;
            }
            for q in self.l_start[k]..self.l_start[k + 1] {
                tmp[self.l_idx[q]] -= self.l_val[q] * yk;
            }
        }
        for k in (0..self.m).rev() {
            let zk = tmp[k] / self.u_diag[k];
            tmp[k] = zk;
            if zk == 0.0 {
                continue;
            }
            for q in self.u_start[k]..self.u_start[k + 1] {
                tmp[self.u_idx[q]] -= self.u_val[q] * zk;
            }
        }
        for k in 0..self.m {
            rhs[self.step_to_pos[k]] = tmp[k];
        }
    }

    /// Solves `B^T y = rhs` in place. On entry `rhs` is indexed by basis
    /// position; on exit by row.
    pub(crate) fn btran(&self, rhs: &mut [f64], tmp: &mut [f64]) {
        for k in 0..self.m {
            tmp[k] = rhs[self.step_to_pos[k]];
        }
        for k in 0..self.m {
            let mut s = tmp[k];
            for q in self.u_start[k]..self.u_start[k + 1] {
                s -= self.u_val[q] * tmp[self.u_idx[q]];
            }
            tmp[k] = s / self.u_diag[k];
        }
        for k in (0..self.m).rev() {
            let mut s = tmp[k];
            for q in self.l_start[k]..self.l_start[k + 1] {
                s -= self.l_val[q] * tmp[self.l_idx[q]];
            }
            tmp[k] = s;
        }
        for (i, r) in rhs.iter_mut().enumerate() {
            *r = tmp[self.row_to_step[i]];
        }
    }
}
