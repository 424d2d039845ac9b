//! Dual ascent in the `R_C` form.
//!
//! The concave program
//!
//! ```text
//! maximize  Σ μ1_i F1°(φ1_i) + Σ μ2_j F2°(φ2_j)
//! s.t.      φ1_i + φ2_j + λ_i·(y_j - x_i) + θ*(λ_i) <= c_ij
//! ```
//!
//! is solved with the barrier engine inside a generous box. `λ` is absent for
//! linear costs, the martingale multiplier `h` for martingale costs, and the
//! dual variable of `θ` for Marton costs (with `c = 0`). The certified bound
//! is then recomputed exactly from `φ = -φ2` through the `R_C` transform, so
//! the box and the solver tolerance can only weaken the bound, never make it
//! invalid.

use log::debug;
use nalgebra::{DMatrix, DVector};

use super::{dual_value_rc, DualAscent};
use crate::barrier::{Barrier, BarrierOptions, Ineq, Objective};
use crate::cost::{CostKind, Theta};
use crate::entropy::{ConjugateModel, Entropy, EntropyFunction};
use crate::error::Result;
use crate::solver::{check_feasibility, ProblemSpec, SolverOptions};

struct DualObjective {
    /// `(var, μ, F)` for smooth conjugates, contributing `-μ F°(z_var)`.
    smooth: Vec<(usize, f64, EntropyFunction)>,
    linear: Vec<f64>,
}

impl Objective for DualObjective {
    fn value(&self, z: &DVector<f64>) -> f64 {
        let mut v: f64 = self.linear.iter().zip(z.iter()).map(|(c, x)| c * x).sum();
        for (k, mu, f) in &self.smooth {
            v -= mu * f.fcirc(z[*k]);
        }
        v
    }

    fn add_grad_hess(&self, z: &DVector<f64>, scale: f64, g: &mut DVector<f64>, h: &mut DMatrix<f64>) {
        for (k, c) in self.linear.iter().enumerate() {
            g[k] += scale * c;
        }
        for (k, mu, f) in &self.smooth {
            let (_, d1, d2) = f.fcirc_derivatives(z[*k]);
            g[*k] -= scale * mu * d1;
            h[(*k, *k)] -= scale * mu * d2;
        }
    }
}

fn infeasible(reason: String, n1: usize, n2: usize) -> DualAscent {
    DualAscent {
        phi: vec![0.0; n2],
        rc: vec![f64::NAN; n1],
        bound: f64::NEG_INFINITY,
        phi2: vec![0.0; n2],
        multipliers: None,
        iterations: 0,
        converged: true,
        hypotheses_met: true,
        flag: Some(reason),
    }
}

/// Lower box bound for a potential on a side with entropy `f`.
fn lower_box(f: &EntropyFunction, total: f64, mu_min: f64, cs: f64, lin: f64) -> f64 {
    match f {
        EntropyFunction::Kl => -((1.0 + 2.0 * total / mu_min).ln() + 2.0 * cs + 10.0),
        EntropyFunction::ChiSquared => -(4.0 * (1.0 + cs) * total / mu_min + 10.0),
        EntropyFunction::Indicator1 | EntropyFunction::Range { .. } => -lin,
    }
}

pub(crate) fn ascent(spec: &ProblemSpec, options: &SolverOptions) -> Result<DualAscent> {
    let (n1, n2) = (spec.mu1.len(), spec.mu2.len());
    let w1 = spec.mu1.weights();
    let w2 = spec.mu2.weights();
    let rows = spec.rows();
    let cols = spec.cols();
    let mut flag = None;
    let hypotheses_met = spec.f1.is_superlinear() && spec.f2.is_superlinear();
    if !hypotheses_met {
        flag = Some("hypotheses not met: both entropies must be superlinear".to_string());
    }
    let feas = check_feasibility(spec);
    if !feas.k_nonempty {
        return Ok(infeasible(feas.reason.unwrap_or_default(), n1, n2));
    }

    // admissible pairs between active rows and columns
    let kind = spec.cost.kind();
    let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
    for i in (0..n1).filter(|&i| w1[i] > 0.0) {
        let mut row: Vec<(usize, usize, f64)> = (0..n2)
            .filter(|&j| w2[j] > 0.0)
            .map(|j| (i, j, spec.cost.pair_cost(i, j).unwrap_or(0.0)))
            .filter(|p| p.2 < f64::INFINITY)
            .collect();
        if let CostKind::Martingale(_) = kind {
            let lo = row.iter().map(|p| cols.coord(p.1)).fold(f64::INFINITY, f64::min);
            let hi = row.iter().map(|p| cols.coord(p.1)).fold(f64::NEG_INFINITY, f64::max);
            let x = rows.coord(i);
            if !(x >= lo && x <= hi) {
                row.clear();
            }
        }
        pairs.extend(row);
    }
    let mut row_var = vec![usize::MAX; n1];
    let mut col_var = vec![usize::MAX; n2];
    let mut nv = 0;
    for &(i, _, _) in &pairs {
        if row_var[i] == usize::MAX {
            row_var[i] = nv;
            nv += 1;
        }
    }
    for &(_, j, _) in &pairs {
        if col_var[j] == usize::MAX {
            col_var[j] = nv;
            nv += 1;
        }
    }
    for i in (0..n1).filter(|&i| w1[i] > 0.0 && row_var[i] == usize::MAX) {
        if !spec.f1.at_zero().is_finite() {
            return Ok(infeasible(format!("row {i} has mass but admits no transport"), n1, n2));
        }
    }
    for j in (0..n2).filter(|&j| w2[j] > 0.0 && col_var[j] == usize::MAX) {
        if !spec.f2.at_zero().is_finite() {
            return Ok(infeasible(format!("column {j} has mass but admits no transport"), n1, n2));
        }
    }
    let dim = rows.dim();
    let has_lambda = !matches!(kind, CostKind::Linear(_));
    let mut lambda_var = vec![usize::MAX; n1];
    if has_lambda {
        for i in 0..n1 {
            if row_var[i] != usize::MAX {
                lambda_var[i] = nv;
                nv += dim;
            }
        }
    }

    // box geometry
    let spread = rows.spread().max(cols.spread()).max(
        (0..n1)
            .flat_map(|i| (0..n2).map(move |j| (i, j)))
            .map(|(i, j)| dist(rows.point(i), cols.point(j)))
            .fold(0.0, f64::max),
    );
    let cs = 1.0
        + match kind {
            CostKind::Marton(Theta::Quadratic) => spread * spread,
            CostKind::Marton(Theta::Absolute) => spread,
            _ => pairs.iter().map(|p| p.2.abs()).fold(0.0, f64::max),
        };
    let total = spec.mu1.total_mass() + spec.mu2.total_mass();
    let min_pos = |w: &[f64]| w.iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
    let lin = 4.0 * (n1 + n2) as f64 * cs + 10.0;
    let lo1 = lower_box(&spec.f1, total, min_pos(w1), cs, lin);
    let lo2 = lower_box(&spec.f2, total, min_pos(w2), cs, lin);
    let hi = lin + 70.0 + lo1.abs().max(lo2.abs());
    let dmin = pairs
        .iter()
        .map(|&(i, j, _)| dist(rows.point(i), cols.point(j)))
        .filter(|d| *d > 0.0)
        .fold(f64::INFINITY, f64::min);
    let lam_box = if dmin.is_finite() { 2.0 * (4.0 * hi + cs) / dmin + 1.0 } else { 1.0 };

    let mut linear = vec![0.0; nv];
    let mut smooth = Vec::new();
    let mut ineqs = Vec::new();
    let mut extra: Vec<(usize, usize, f64, f64)> = Vec::new(); // (w, φ, a, b)
    let mut z0 = vec![0.0; nv];
    let mut lows = vec![0.0; nv];
    let mut highs = vec![0.0; nv];
    let mut conj_terms = |var: usize, mu: f64, f: EntropyFunction, lo: f64, linear: &mut Vec<f64>| {
        lows[var] = lo;
        highs[var] = hi;
        match f.conjugate_model() {
            ConjugateModel::Smooth => smooth.push((var, mu, f)),
            ConjugateModel::MinOfLinear(slopes) if slopes.len() == 1 => linear[var] -= mu * slopes[0],
            ConjugateModel::MinOfLinear(slopes) => {
                let (a, b) = (slopes[0], slopes[slopes.len() - 1]);
                extra.push((usize::MAX, var, a, b));
                let _ = mu;
            }
        }
    };
    for i in 0..n1 {
        if row_var[i] != usize::MAX {
            conj_terms(row_var[i], w1[i], spec.f1, lo1, &mut linear);
        }
    }
    for j in 0..n2 {
        if col_var[j] != usize::MAX {
            conj_terms(col_var[j], w2[j], spec.f2, lo2, &mut linear);
        }
    }
    // epigraph variables for piecewise-linear conjugates: w <= a φ, w <= b φ
    let mut epi = Vec::new();
    for (_, phi_var, a, b) in &extra {
        let w = nv + epi.len();
        epi.push((w, *phi_var, *a, *b));
    }
    let nv_total = nv + epi.len();
    linear.resize(nv_total, 0.0);
    z0.resize(nv_total, 0.0);
    lows.resize(nv_total, 0.0);
    highs.resize(nv_total, 0.0);
    for &(w, phi_var, a, b) in &epi {
        let mu = mass_of(phi_var, &row_var, &col_var, w1, w2);
        linear[w] -= mu;
        ineqs.push(Ineq::linear(vec![(w, 1.0), (phi_var, -a)], 0.0));
        ineqs.push(Ineq::linear(vec![(w, 1.0), (phi_var, -b)], 0.0));
        lows[w] = b * lows[phi_var].min(0.0) - 10.0;
        highs[w] = a * hi + 10.0;
    }

    // pair constraints
    for &(i, j, c) in &pairs {
        let mut lin_terms = vec![(row_var[i], 1.0), (col_var[j], 1.0)];
        let mut quad = Vec::new();
        let rhs = match kind {
            CostKind::Marton(_) => 0.0,
            _ => c,
        };
        if has_lambda {
            for (k, (y, x)) in cols.point(j).iter().zip(rows.point(i)).enumerate() {
                if y != x {
                    lin_terms.push((lambda_var[i] + k, y - x));
                }
                if let CostKind::Marton(Theta::Quadratic) = kind {
                    quad.push((lambda_var[i] + k, 0.25));
                }
            }
        }
        ineqs.push(Ineq { lin: lin_terms, quad, rhs });
    }
    for i in 0..n1 {
        if lambda_var[i] != usize::MAX {
            let bound = if let CostKind::Marton(Theta::Absolute) = kind { 1.0 } else { lam_box };
            for k in 0..dim {
                lows[lambda_var[i] + k] = -bound;
                highs[lambda_var[i] + k] = bound;
            }
        }
    }

    // strictly feasible start
    for i in 0..n1 {
        if row_var[i] != usize::MAX {
            let cmin = pairs.iter().filter(|p| p.0 == i).map(|p| if has_lambda && matches!(kind, CostKind::Marton(_)) { 0.0 } else { p.2 }).fold(f64::INFINITY, f64::min);
            z0[row_var[i]] = cmin - 1.0;
        }
    }
    for &(w, phi_var, a, b) in &epi {
        z0[w] = (a * z0[phi_var]).min(b * z0[phi_var]) - 1.0;
    }
    for v in 0..nv_total {
        ineqs.push(Ineq::lower(v, lows[v]));
        ineqs.push(Ineq::upper(v, highs[v]));
    }
    let z0 = DVector::from_vec(z0);

    let objective = DualObjective { smooth, linear };
    let barrier = Barrier {
        objective: &objective,
        a_eq: DMatrix::zeros(0, nv_total),
        b_eq: DVector::zeros(0),
        ineqs,
    };
    let (z, iterations, converged) = if nv_total == 0 {
        (z0, 0, true)
    } else if options.max_iter == 0 {
        (z0, 0, false)
    } else {
        let eps = 1e-11 * (total * cs).max(1e-300);
        let res = barrier.minimize(z0, &BarrierOptions { eps, max_newton: options.max_iter, growth: 10.0 });
        (res.z, res.iterations, res.converged)
    };
    debug!("dual ascent: {iterations} Newton steps, converged = {converged}");

    let mut phi2 = vec![f64::NEG_INFINITY; n2];
    let mut phi = vec![f64::INFINITY; n2];
    for j in 0..n2 {
        if w2[j] <= 0.0 {
            continue;
        }
        if col_var[j] == usize::MAX {
            phi2[j] = f64::INFINITY;
            phi[j] = f64::NEG_INFINITY;
        } else {
            phi2[j] = z[col_var[j]];
            phi[j] = -phi2[j];
        }
    }
    let multipliers = has_lambda.then(|| {
        (0..n1)
            .map(|i| {
                if lambda_var[i] == usize::MAX {
                    vec![0.0; dim]
                } else {
                    (0..dim).map(|k| z[lambda_var[i] + k]).collect()
                }
            })
            .collect()
    });
    let rc = spec.cost.rc_transform(&phi)?;
    let bound = dual_value_rc(spec, &phi)?;
    Ok(DualAscent { phi, rc, bound, phi2, multipliers, iterations, converged, hypotheses_met, flag })
}

fn mass_of(var: usize, row_var: &[usize], col_var: &[usize], w1: &[f64], w2: &[f64]) -> f64 {
    if let Some(i) = row_var.iter().position(|&v| v == var) {
        return w1[i];
    }
    let j = col_var.iter().position(|&v| v == var).expect("variable belongs to a row or a column");
    w2[j]
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
