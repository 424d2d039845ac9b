//! Small dense two-phase simplex method with Bland's rule.
//!
//! Solves `max cᵀx` subject to `A_eq x = b_eq`, `A_le x <= b_le`, `x >= 0`.
//! Only used for feasibility and facial reduction on desk-scale problems.

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

const PIVOT_TOL: f64 = 1e-11;

struct Tableau {
    /// `rows` constraint rows followed by one objective row, each with
    /// `cols + 1` entries (last one is the right-hand side).
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn rows(&self) -> usize {
        self.basis.len()
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (k, row) in self.t.iter_mut().enumerate() {
            if k == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, &pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes the objective row (stored as reduced costs) over columns
    /// `< allowed`. Returns `false` when unbounded.
    fn run(&mut self, allowed: usize) -> bool {
        let m = self.rows();
        let rhs = self.cols;
        loop {
            let obj = &self.t[m];
            let Some(c) = (0..allowed).find(|&j| obj[j] < -PIVOT_TOL) else {
                return true;
            };
            let mut best: Option<(usize, f64)> = None;
            for r in 0..m {
                let a = self.t[r][c];
                if a > PIVOT_TOL {
                    let ratio = self.t[r][rhs] / a;
                    let better = match best {
                        None => true,
                        Some((br, bv)) => {
                            ratio < bv - 1e-14 * bv.abs().max(1.0)
                                || (ratio <= bv + 1e-14 * bv.abs().max(1.0)
                                    && self.basis[r] < self.basis[br])
                        }
                    };
                    if better {
                        best = Some((r, ratio));
                    }
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, c),
                None => return false,
            }
        }
    }
}

pub(crate) fn maximize(
    c: &[f64],
    a_eq: &[Vec<f64>],
    b_eq: &[f64],
    a_le: &[Vec<f64>],
    b_le: &[f64],
) -> LpOutcome {
    let n = c.len();
    let n_le = a_le.len();
    let n_struct = n + n_le;
    let m = a_eq.len() + n_le;
    let scale = b_eq.iter().chain(b_le).fold(1.0f64, |s, v| s.max(v.abs()));

    // structural + slack columns, then one artificial per row, then rhs
    let cols = n_struct + m;
    let mut t = Vec::with_capacity(m + 1);
    let mut push_row = |coef: &[f64], slack: Option<usize>, b: f64, k: usize| {
        let mut row = vec![0.0; cols + 1];
        row[..n].copy_from_slice(coef);
        if let Some(s) = slack {
            row[n + s] = 1.0;
        }
        row[cols] = b;
        if b < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
        row[n_struct + k] = 1.0;
        t.push(row);
    };
    for (k, (row, &b)) in a_eq.iter().zip(b_eq).enumerate() {
        push_row(row, None, b, k);
    }
    for (s, (row, &b)) in a_le.iter().zip(b_le).enumerate() {
        push_row(row, Some(s), b, a_eq.len() + s);
    }
    // phase 1 objective: minimize Σ artificials, expressed in reduced costs
    let mut obj = vec![0.0; cols + 1];
    for row in &t {
        for j in 0..n_struct {
            obj[j] -= row[j];
        }
        obj[cols] -= row[cols];
    }
    t.push(obj);
    let mut tab = Tableau { t, basis: (n_struct..cols).collect(), cols };
    tab.run(n_struct);
    if -tab.t[m][cols] > 1e-9 * scale {
        return LpOutcome::Infeasible;
    }

    // drive zero-level artificials out of the basis, dropping redundant rows
    let mut r = 0;
    while r < tab.rows() {
        if tab.basis[r] >= n_struct {
            match (0..n_struct).find(|&j| tab.t[r][j].abs() > 1e-9) {
                Some(j) => tab.pivot(r, j),
                None => {
                    tab.t.remove(r);
                    tab.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    // phase 2: minimize -cᵀx
    let m2 = tab.rows();
    let mut obj = vec![0.0; cols + 1];
    for j in 0..n {
        obj[j] = -c[j];
    }
    for r in 0..m2 {
        let b = tab.basis[r];
        let f = obj[b];
        if f != 0.0 {
            for j in 0..=cols {
                obj[j] -= f * tab.t[r][j];
            }
        }
    }
    tab.t[m2] = obj;
    if !tab.run(n_struct) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![0.0; n];
    for r in 0..m2 {
        if tab.basis[r] < n {
            x[tab.basis[r]] = tab.t[r][cols].max(0.0);
        }
    }
    let value = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    LpOutcome::Optimal { x, value }
}
