//! Barrier model of the primal problem.
//!
//! Variables are the entries `γ_ij` that can carry mass (both marginal
//! weights positive, finite cost), plus one epigraph variable per row for
//! the absolute-value Marton cost. Smooth entropies enter the objective;
//! indicator-type entropies and martingale constraints become linear
//! constraints. Entries forced to zero by those constraints are found with
//! a sequence of small LPs before the barrier starts.

use log::debug;
use nalgebra::{DMatrix, DVector};

use super::{MassCap, ProblemSpec};
use crate::barrier::{independent_rows, project_affine, Barrier, BarrierOptions, Ineq, Objective};
use crate::cost::{CostKind, Theta};
use crate::entropy::{Entropy, EntropyFunction};
use crate::error::{Result, WoetError};
use crate::lp::{maximize, LpOutcome};
use crate::measures::Coupling;

pub(crate) struct PrimalResult {
    pub coupling: Coupling,
    pub iterations: usize,
    pub converged: bool,
    pub notes: Vec<String>,
}

/// A marginal line (one row or one column) of the coupling.
struct Line {
    cells: Vec<usize>,
    mu: f64,
    entropy: EntropyFunction,
    label: String,
}

enum Hard {
    Soft,
    Eq(f64),
    Between(f64, f64),
}

impl Line {
    fn hard(&self) -> Hard {
        match self.entropy {
            EntropyFunction::Kl | EntropyFunction::ChiSquared => Hard::Soft,
            EntropyFunction::Indicator1 => Hard::Eq(self.mu),
            EntropyFunction::Range { a, b } => {
                if a == b {
                    Hard::Eq(a * self.mu)
                } else {
                    Hard::Between(a * self.mu, b * self.mu)
                }
            }
        }
    }
}

/// `Σ_{k∈vars} coef_k γ_k (+ offset) >= 0`, tracked through facial reduction.
#[derive(Clone)]
struct Quantity {
    coef: Vec<(usize, f64)>,
    offset: f64,
}

impl Quantity {
    fn eval(&self, x: &[f64]) -> f64 {
        self.offset + self.coef.iter().map(|&(k, a)| a * x[k]).sum::<f64>()
    }
}

struct Layout {
    /// `(i, j)` for every candidate entry.
    cells: Vec<(usize, usize)>,
    lines: Vec<Line>,
    /// Martingale rows: `(row, [(cell, y_j - x_i)])`.
    martingale: Vec<Vec<(usize, f64)>>,
    /// Marton rows: `(row, [(cell, x_i - y_j)])`.
    marton: Vec<(usize, Vec<(usize, Vec<f64>)>)>,
    linear_cost: Vec<f64>,
    constant: f64,
}

fn build_layout(spec: &ProblemSpec) -> Result<Layout> {
    let (n1, n2) = (spec.mu1.len(), spec.mu2.len());
    let w1 = spec.mu1.weights();
    let w2 = spec.mu2.weights();
    let rows = spec.rows();
    let cols = spec.cols();
    let mut cells = Vec::new();
    let mut linear_cost = Vec::new();
    let mut row_cells = vec![Vec::new(); n1];
    let mut col_cells = vec![Vec::new(); n2];
    for i in 0..n1 {
        for j in 0..n2 {
            if w1[i] <= 0.0 || w2[j] <= 0.0 {
                continue;
            }
            let c = spec.cost.pair_cost(i, j).unwrap_or(0.0);
            if c == f64::INFINITY {
                continue;
            }
            row_cells[i].push(cells.len());
            col_cells[j].push(cells.len());
            cells.push((i, j));
            linear_cost.push(c);
        }
    }
    let mut lines = Vec::new();
    let mut constant = 0.0;
    for (side, weights, groups, f) in
        [(1, w1, row_cells, spec.f1), (2, w2, col_cells, spec.f2)]
    {
        for (k, (cells_k, &mu)) in groups.into_iter().zip(weights).enumerate() {
            if mu <= 0.0 {
                continue;
            }
            let label = format!("{} {k}", if side == 1 { "row" } else { "column" });
            if cells_k.is_empty() {
                let v = mu * f.at_zero();
                if !v.is_finite() {
                    return Err(WoetError::InfeasibleProblem(format!(
                        "{label} has mass but cannot be matched and F({side})(0) = +inf"
                    )));
                }
                constant += v;
                continue;
            }
            lines.push(Line { cells: cells_k, mu, entropy: f, label });
        }
    }
    let mut martingale = Vec::new();
    let mut marton = Vec::new();
    match spec.cost.kind() {
        CostKind::Martingale(_) => {
            for i in 0..n1 {
                let row: Vec<(usize, f64)> = cells
                    .iter()
                    .enumerate()
                    .filter(|(_, &(r, _))| r == i)
                    .map(|(k, &(_, j))| (k, cols.coord(j) - rows.coord(i)))
                    .collect();
                if !row.is_empty() {
                    martingale.push(row);
                }
            }
        }
        CostKind::Marton(_) => {
            for i in 0..n1 {
                let row: Vec<(usize, Vec<f64>)> = cells
                    .iter()
                    .enumerate()
                    .filter(|(_, &(r, _))| r == i)
                    .map(|(k, &(_, j))| {
                        let d = rows.point(i).iter().zip(cols.point(j)).map(|(x, y)| x - y).collect();
                        (k, d)
                    })
                    .collect();
                if !row.is_empty() {
                    marton.push((i, row));
                }
            }
        }
        CostKind::Linear(_) => {}
    }
    Ok(Layout { cells, lines, martingale, marton, linear_cost, constant })
}

/// Equality rows and `>= 0` quantities of the polytope of feasible `γ`.
struct Polytope {
    eq: Vec<(Vec<(usize, f64)>, f64)>,
    ineq: Vec<Quantity>,
}

fn polytope(layout: &Layout, cap: Option<f64>) -> Polytope {
    let mut eq = Vec::new();
    let mut ineq = Vec::new();
    for line in &layout.lines {
        let ones: Vec<(usize, f64)> = line.cells.iter().map(|&k| (k, 1.0)).collect();
        match line.hard() {
            Hard::Soft => {}
            Hard::Eq(v) => eq.push((ones, v)),
            Hard::Between(lo, hi) => {
                ineq.push(Quantity { coef: ones.clone(), offset: -lo });
                ineq.push(Quantity { coef: ones.iter().map(|&(k, a)| (k, -a)).collect(), offset: hi });
            }
        }
    }
    for row in &layout.martingale {
        eq.push((row.clone(), 0.0));
    }
    if let Some(m) = cap {
        ineq.push(Quantity { coef: (0..layout.cells.len()).map(|k| (k, -1.0)).collect(), offset: m });
    }
    Polytope { eq, ineq }
}

struct Reduction {
    zero_cells: Vec<bool>,
    /// Inequalities that hold with equality on the whole polytope.
    tight: Vec<bool>,
    start: Vec<f64>,
}

fn dense(coef: &[(usize, f64)], n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    for &(k, a) in coef {
        v[k] += a;
    }
    v
}

/// Finds entries and inequalities that vanish on the whole feasible set and
/// a relative-interior point, by maximizing each unresolved quantity.
fn facial_reduction(layout: &Layout, poly: &Polytope, scale: f64, lp_cap: f64) -> Result<Reduction> {
    let n = layout.cells.len();
    let a_eq: Vec<Vec<f64>> = poly.eq.iter().map(|(c, _)| dense(c, n)).collect();
    let b_eq: Vec<f64> = poly.eq.iter().map(|(_, b)| *b).collect();
    let mut a_le: Vec<Vec<f64>> =
        poly.ineq.iter().map(|q| dense(&q.coef, n).iter().map(|v| -v).collect()).collect();
    let mut b_le: Vec<f64> = poly.ineq.iter().map(|q| q.offset).collect();
    a_le.push(vec![1.0; n]);
    b_le.push(lp_cap);

    let mut quantities: Vec<Quantity> = (0..n).map(|k| Quantity { coef: vec![(k, 1.0)], offset: 0.0 }).collect();
    quantities.extend(poly.ineq.iter().cloned());
    let tol = 1e-10 * scale;
    let mut status: Vec<Option<bool>> = vec![None; quantities.len()];
    let mut solutions: Vec<Vec<f64>> = Vec::new();

    let mut first = true;
    loop {
        let target = status.iter().position(|s| s.is_none());
        if target.is_none() && !first {
            break;
        }
        let objective = match target {
            Some(q) => dense(&quantities[q].coef, n),
            None => vec![0.0; n],
        };
        first = false;
        match maximize(&objective, &a_eq, &b_eq, &a_le, &b_le) {
            LpOutcome::Infeasible => {
                return Err(WoetError::InfeasibleProblem(
                    "no coupling satisfies the marginal and martingale constraints".into(),
                ))
            }
            LpOutcome::Unbounded => unreachable!("the mass cap bounds every LP"),
            LpOutcome::Optimal { x, .. } => {
                let mut improved = false;
                for (q, s) in status.iter_mut().enumerate() {
                    if s.is_none() && quantities[q].eval(&x) > tol {
                        *s = Some(true);
                        improved = true;
                    }
                }
                if let Some(q) = target {
                    if status[q].is_none() {
                        status[q] = Some(false);
                    }
                }
                if improved || solutions.is_empty() {
                    solutions.push(x);
                }
            }
        }
        if target.is_none() {
            break;
        }
    }
    let count = solutions.len() as f64;
    let start: Vec<f64> = (0..n).map(|k| solutions.iter().map(|x| x[k]).sum::<f64>() / count).collect();
    let zero_cells = (0..n).map(|k| status[k] == Some(false)).collect();
    let tight = (n..quantities.len()).map(|q| status[q] == Some(false)).collect();
    Ok(Reduction { zero_cells, tight, start })
}

struct PrimalObjective {
    /// Smooth marginal terms: `(vars, μ, F)`.
    soft: Vec<(Vec<usize>, f64, EntropyFunction)>,
    linear: Vec<f64>,
    /// Quadratic Marton rows: `[(var, x_i - y_j)]`.
    quad: Vec<Vec<(usize, Vec<f64>)>>,
    constant: f64,
}

impl PrimalObjective {
    fn row_moments(row: &[(usize, Vec<f64>)], z: &DVector<f64>) -> (f64, Vec<f64>) {
        let d = row[0].1.len();
        let mut m = 0.0;
        let mut u = vec![0.0; d];
        for (k, dk) in row {
            m += z[*k];
            for (uc, v) in u.iter_mut().zip(dk) {
                *uc += z[*k] * v;
            }
        }
        (m, u)
    }
}

impl Objective for PrimalObjective {
    fn value(&self, z: &DVector<f64>) -> f64 {
        let mut v = self.constant;
        for (k, c) in self.linear.iter().enumerate() {
            v += c * z[k];
        }
        for (vars, mu, f) in &self.soft {
            let s: f64 = vars.iter().map(|&k| z[k]).sum();
            if s < 0.0 {
                return f64::INFINITY;
            }
            v += mu * f.value(s / mu);
        }
        for row in &self.quad {
            let (m, u) = Self::row_moments(row, z);
            let uu: f64 = u.iter().map(|x| x * x).sum();
            if m > 0.0 {
                v += uu / m;
            } else if uu > 0.0 {
                return f64::INFINITY;
            }
        }
        v
    }

    fn add_grad_hess(&self, z: &DVector<f64>, scale: f64, g: &mut DVector<f64>, h: &mut DMatrix<f64>) {
        for (k, c) in self.linear.iter().enumerate() {
            g[k] += scale * c;
        }
        for (vars, mu, f) in &self.soft {
            let s: f64 = vars.iter().map(|&k| z[k]).sum();
            let (_, d1, d2) = f.derivatives(s / mu);
            for &k in vars {
                g[k] += scale * d1;
                for &l in vars {
                    h[(k, l)] += scale * d2 / mu;
                }
            }
        }
        for row in &self.quad {
            let (m, u) = Self::row_moments(row, z);
            let uu: f64 = u.iter().map(|x| x * x).sum();
            let centered: Vec<Vec<f64>> =
                row.iter().map(|(_, dk)| dk.iter().zip(&u).map(|(a, b)| a - b / m).collect()).collect();
            for (a, (k, dk)) in row.iter().enumerate() {
                let ud: f64 = u.iter().zip(dk).map(|(x, y)| x * y).sum();
                g[*k] += scale * (2.0 * ud / m - uu / (m * m));
                for (b, (l, _)) in row.iter().enumerate() {
                    let dot: f64 = centered[a].iter().zip(&centered[b]).map(|(x, y)| x * y).sum();
                    h[(*k, *l)] += scale * 2.0 * dot / m;
                }
            }
        }
    }
}

pub(crate) fn solve_primal(spec: &ProblemSpec, max_iter: usize) -> Result<PrimalResult> {
    let (n1, n2) = (spec.mu1.len(), spec.mu2.len());
    let scale = spec.mu1.total_mass().max(spec.mu2.total_mass());
    let zero = Coupling::zero(spec.rows().clone(), spec.cols().clone());
    if scale == 0.0 {
        return Ok(PrimalResult { coupling: zero, iterations: 0, converged: true, notes: vec![] });
    }
    let layout = build_layout(spec)?;
    let n = layout.cells.len();
    if n == 0 {
        return Ok(PrimalResult { coupling: zero, iterations: 0, converged: true, notes: vec![] });
    }
    let user_cap = match spec.options.mass_cap {
        MassCap::Fixed(m) => Some(m),
        MassCap::Auto => None,
    };
    let poly = polytope(&layout, user_cap);
    let has_hard = !poly.eq.is_empty() || !poly.ineq.is_empty();

    let widest = |f: &EntropyFunction| match f {
        EntropyFunction::Range { b, .. } => *b,
        _ => 1.0,
    };
    let lp_cap = 2.0 * (widest(&spec.f1) * spec.mu1.total_mass() + widest(&spec.f2) * spec.mu2.total_mass())
        + user_cap.unwrap_or(0.0);
    let reduction = if has_hard {
        facial_reduction(&layout, &poly, scale, lp_cap)?
    } else {
        let w1 = spec.mu1.weights();
        let w2 = spec.mu2.weights();
        Reduction {
            zero_cells: vec![false; n],
            tight: vec![],
            start: layout.cells.iter().map(|&(i, j)| (w1[i] * w2[j]).sqrt() / n1.max(n2) as f64).collect(),
        }
    };

    // variable map: reduced γ entries, then Marton epigraph variables
    let mut var_of = vec![usize::MAX; n];
    let mut cell_of_var = Vec::new();
    for k in 0..n {
        if !reduction.zero_cells[k] {
            var_of[k] = cell_of_var.len();
            cell_of_var.push(k);
        }
    }
    let nv_gamma = cell_of_var.len();
    let remap = |coef: &[(usize, f64)]| -> Vec<(usize, f64)> {
        coef.iter().filter(|(k, _)| var_of[*k] != usize::MAX).map(|&(k, a)| (var_of[k], a)).collect()
    };
    let abs_rows: Vec<Vec<(usize, f64)>> = match spec.cost.kind() {
        CostKind::Marton(Theta::Absolute) => layout
            .marton
            .iter()
            .map(|(_, row)| remap(&row.iter().map(|(k, d)| (*k, d[0])).collect::<Vec<_>>()))
            .filter(|r| !r.is_empty())
            .collect(),
        _ => Vec::new(),
    };
    let nv = nv_gamma + abs_rows.len();

    let mut eq_rows: Vec<(Vec<(usize, f64)>, f64)> = poly.eq.iter().map(|(c, b)| (remap(c), *b)).collect();
    let mut ineqs: Vec<Ineq> = (0..nv_gamma).map(|v| Ineq::lower(v, 0.0)).collect();
    for (q, quantity) in poly.ineq.iter().enumerate() {
        let coef = remap(&quantity.coef);
        if reduction.tight.get(q).copied().unwrap_or(false) {
            eq_rows.push((coef, -quantity.offset));
        } else {
            // coef·γ + offset >= 0
            ineqs.push(Ineq::linear(coef.iter().map(|&(v, a)| (v, -a)).collect(), quantity.offset));
        }
    }
    for (r, row) in abs_rows.iter().enumerate() {
        let t = nv_gamma + r;
        let mut plus = row.clone();
        plus.push((t, -1.0));
        ineqs.push(Ineq::linear(plus, 0.0));
        let mut minus: Vec<(usize, f64)> = row.iter().map(|&(v, a)| (v, -a)).collect();
        minus.push((t, -1.0));
        ineqs.push(Ineq::linear(minus, 0.0));
    }

    let mut a_full = DMatrix::zeros(eq_rows.len(), nv);
    let mut b_full = DVector::zeros(eq_rows.len());
    for (q, (coef, b)) in eq_rows.iter().enumerate() {
        for &(v, a) in coef {
            a_full[(q, v)] += a;
        }
        b_full[q] = *b;
    }
    let keep = independent_rows(&a_full);
    let a_eq = a_full.select_rows(keep.iter());
    let b_eq = b_full.select_rows(keep.iter());

    let mut z0 = DVector::zeros(nv);
    for (v, &k) in cell_of_var.iter().enumerate() {
        z0[v] = reduction.start[k];
    }
    let projected = project_affine(&a_eq, &b_eq, &z0);
    if (0..nv_gamma).all(|v| projected[v] > 0.0) {
        z0 = projected;
    }
    for (r, row) in abs_rows.iter().enumerate() {
        let u: f64 = row.iter().map(|&(v, a)| a * z0[v]).sum();
        let m: f64 = row.iter().map(|&(v, _)| z0[v]).sum();
        z0[nv_gamma + r] = u.abs() + m * spec.cols().spread().max(1e-12) + 1e-300;
    }

    let mut linear = vec![0.0; nv];
    if matches!(spec.cost.kind(), CostKind::Linear(_) | CostKind::Martingale(_)) {
        for (v, &k) in cell_of_var.iter().enumerate() {
            linear[v] = layout.linear_cost[k];
        }
    }
    for t in nv_gamma..nv {
        linear[t] = 1.0;
    }
    let soft = layout
        .lines
        .iter()
        .filter(|l| matches!(l.hard(), Hard::Soft))
        .map(|l| {
            let vars: Vec<usize> = l.cells.iter().filter(|&&k| var_of[k] != usize::MAX).map(|&k| var_of[k]).collect();
            (vars, l.mu, l.entropy)
        })
        .collect();
    let quad = match spec.cost.kind() {
        CostKind::Marton(Theta::Quadratic) => layout
            .marton
            .iter()
            .map(|(_, row)| {
                row.iter().filter(|(k, _)| var_of[*k] != usize::MAX).map(|(k, d)| (var_of[*k], d.clone())).collect::<Vec<_>>()
            })
            .filter(|r| !r.is_empty())
            .collect(),
        _ => Vec::new(),
    };
    let objective = PrimalObjective { soft, linear, quad, constant: layout.constant };
    let mut notes = Vec::new();
    let zeros = reduction.zero_cells.iter().filter(|z| **z).count();
    if zeros > 0 {
        notes.push(format!("{zeros} entries are forced to zero by the constraints"));
    }
    for line in &layout.lines {
        if line.cells.iter().all(|&k| reduction.zero_cells[k]) && !matches!(line.hard(), Hard::Soft) {
            debug!("{} carries no admissible mass", line.label);
        }
    }

    let barrier = Barrier { objective: &objective, a_eq: a_eq.clone(), b_eq: b_eq.clone(), ineqs };
    let f0 = objective.value(&z0);
    let opts = BarrierOptions { eps: 1e-11 * scale.max(f0.abs()).max(1e-300), max_newton: max_iter, growth: 10.0 };
    let res = barrier.minimize(z0, &opts);
    let mut z = project_affine(&a_eq, &b_eq, &res.z);
    if (0..nv_gamma).any(|v| z[v] < 0.0) {
        z = res.z.clone();
    }

    let mut mass = vec![0.0; n1 * n2];
    for (v, &k) in cell_of_var.iter().enumerate() {
        let (i, j) = layout.cells[k];
        mass[i * n2 + j] = z[v].max(0.0);
    }
    let coupling = Coupling::new(spec.rows().clone(), spec.cols().clone(), mass)?;
    Ok(PrimalResult { coupling, iterations: res.iterations, converged: res.converged, notes })
}
