//! Brute-force reference minimizer for instances with at most nine cells.
//!
//! A coarse lattice `{0, s, 2s, …} ∩ [0, mass_max]` is enumerated over the
//! cells that can carry mass, and the best point is refined by a pattern
//! search whose stencil holds every combination of `{-r, …, r}·δ` moves, so
//! that moves along the faces of equality constraints stay available.

use std::sync::Arc;

use super::{objective, ProblemSpec};
use crate::error::{Result, WoetError};
use crate::measures::Coupling;

/// Largest number of lattice points enumerated in the coarse phase.
const COARSE_POINTS: f64 = 4.0e5;

/// Returns the best objective value found and its coupling.
///
/// The coarse step is the smallest `grid_step·2^k` keeping the lattice below
/// a few hundred thousand points; refinement halves the step down to
/// `1e-6·mass_max`.
pub fn oracle_solve(spec: &ProblemSpec, grid_step: f64, mass_max: f64) -> Result<(f64, Coupling)> {
    let (n1, n2) = (spec.mu1.len(), spec.mu2.len());
    if n1 * n2 > 9 {
        return Err(WoetError::TooLarge(format!("{n1}x{n2} has more than 9 cells")));
    }
    if !(grid_step > 0.0) || !(mass_max > 0.0) || !mass_max.is_finite() {
        return Err(WoetError::Validation("grid_step and mass_max must be positive".into()));
    }
    let w1 = spec.mu1.weights();
    let w2 = spec.mu2.weights();
    let cells: Vec<usize> = (0..n1 * n2)
        .filter(|&k| {
            let (i, j) = (k / n2, k % n2);
            w1[i] > 0.0
                && w2[j] > 0.0
                && spec.cost.pair_cost(i, j).is_none_or(|c| c < f64::INFINITY)
        })
        .collect();
    let n = cells.len();
    let rows = Arc::clone(spec.rows());
    let cols = Arc::clone(spec.cols());
    let eval = |x: &[f64]| -> f64 {
        let mut mass = vec![0.0; n1 * n2];
        for (&k, &v) in cells.iter().zip(x) {
            mass[k] = v;
        }
        Coupling::new(Arc::clone(&rows), Arc::clone(&cols), mass)
            .and_then(|g| objective(spec, &g))
            .unwrap_or(f64::INFINITY)
    };

    let mut step = grid_step;
    while ((mass_max / step).floor() + 1.0).powi(n as i32) > COARSE_POINTS {
        step *= 2.0;
    }
    let levels = (mass_max / step).floor() as usize + 1;
    let mut idx = vec![0usize; n];
    let mut x = vec![0.0; n];
    let mut best = (eval(&x), x.clone());
    'outer: loop {
        let mut k = 0;
        loop {
            if k == n {
                break 'outer;
            }
            idx[k] += 1;
            if idx[k] < levels {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        for (xv, &l) in x.iter_mut().zip(&idx) {
            *xv = l as f64 * step;
        }
        let v = eval(&x);
        if v < best.0 {
            best = (v, x.clone());
        }
    }

    let (mut value, mut x) = best;
    if n > 0 && value.is_finite() {
        let radius: i64 = if n <= 6 { 2 } else { 1 };
        let width = (2 * radius + 1) as usize;
        let stencil_len = width.pow(n as u32);
        let mut delta = step;
        let floor = 1e-6 * mass_max;
        while delta >= floor {
            let mut moved = false;
            let mut trial = vec![0.0; n];
            let mut cand = (value, None);
            for code in 0..stencil_len {
                let mut c = code;
                let mut feasible = true;
                for k in 0..n {
                    let off = (c % width) as i64 - radius;
                    c /= width;
                    trial[k] = x[k] + off as f64 * delta;
                    if trial[k] < 0.0 || trial[k] > mass_max {
                        feasible = false;
                        break;
                    }
                }
                if !feasible {
                    continue;
                }
                let v = eval(&trial);
                if v < cand.0 {
                    cand = (v, Some(trial.clone()));
                }
            }
            if let (v, Some(t)) = cand {
                if v < value - 1e-15 * value.abs().max(1.0) {
                    value = v;
                    x = t;
                    moved = true;
                }
            }
            if !moved {
                delta /= 2.0;
            }
        }
    }
    let mut mass = vec![0.0; n1 * n2];
    for (&k, &v) in cells.iter().zip(&x) {
        mass[k] = v;
    }
    Ok((value, Coupling::new(rows, cols, mass)?))
}
