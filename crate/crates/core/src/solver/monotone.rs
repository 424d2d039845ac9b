//! Randomized two-row C-monotonicity test.
//!
//! For rows `a, b` of an optimal coupling and any split
//! `m_a + m_b = γ_a + γ_b` with `|m_a| = |γ_a|`, `|m_b| = |γ_b|`,
//! optimality forces `C(x_a, γ_a) + C(x_b, γ_b) <= C(x_a, m_a) + C(x_b, m_b)`
//! where each term is the row perspective.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ProblemSpec;
use crate::error::{Result, WoetError};
use crate::measures::Coupling;

/// A strict violation must exceed this.
pub const MONOTONE_TOL: f64 = 1e-7;

/// Rows lighter than this fraction of the heaviest row are skipped.
const ROW_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub trials: usize,
    pub violations: usize,
    /// Largest `lhs - rhs` seen (negative when every trial was slack).
    pub max_excess: f64,
    /// `(row a, row b, excess)` of the worst violation.
    pub worst: Option<(usize, usize, f64)>,
}

pub fn c_monotonicity_check(
    spec: &ProblemSpec,
    gamma: &Coupling,
    trials: usize,
    seed: u64,
) -> Result<MonotonicityReport> {
    if gamma.n_rows() != spec.mu1.len() || gamma.n_cols() != spec.mu2.len() {
        return Err(WoetError::ShapeMismatch("coupling does not match the problem".into()));
    }
    let masses: Vec<f64> = (0..gamma.n_rows()).map(|i| gamma.row_mass(i)).collect();
    let heaviest = masses.iter().copied().fold(0.0, f64::max);
    let active: Vec<usize> =
        (0..masses.len()).filter(|&i| heaviest > 0.0 && masses[i] >= ROW_FLOOR * heaviest).collect();
    let mut report =
        MonotonicityReport { trials: 0, violations: 0, max_excess: f64::NEG_INFINITY, worst: None };
    if active.len() < 2 {
        return Ok(report);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n2 = gamma.n_cols();
    for _ in 0..trials {
        let ka = rng.gen_range(0..active.len());
        let mut kb = rng.gen_range(0..active.len() - 1);
        if kb >= ka {
            kb += 1;
        }
        let (a, b) = (active[ka], active[kb]);
        let (ga, gb) = (gamma.row(a), gamma.row(b));
        let s: Vec<f64> = ga.iter().zip(gb).map(|(x, y)| x + y).collect();
        let total: f64 = s.iter().sum();
        let target = masses[a];
        let mut ma: Vec<f64> = s.iter().map(|v| v * rng.gen::<f64>()).collect();
        let t: f64 = ma.iter().sum();
        if t > target {
            let f = target / t;
            ma.iter_mut().for_each(|v| *v *= f);
        } else if t < target {
            let room: f64 = total - t;
            if room > 0.0 {
                let f = (target - t) / room;
                for j in 0..n2 {
                    ma[j] += f * (s[j] - ma[j]);
                }
            }
        }
        let mb: Vec<f64> = s.iter().zip(&ma).map(|(x, y)| (x - y).max(0.0)).collect();
        let lhs = spec.cost.row_perspective(a, ga)? + spec.cost.row_perspective(b, gb)?;
        let rhs = spec.cost.row_perspective(a, &ma)? + spec.cost.row_perspective(b, &mb)?;
        report.trials += 1;
        let excess = if lhs == rhs { 0.0 } else { lhs - rhs };
        if excess.is_nan() {
            continue;
        }
        if excess > report.max_excess {
            report.max_excess = excess;
        }
        if excess > MONOTONE_TOL {
            report.violations += 1;
            if report.worst.is_none_or(|w| excess > w.2) {
                report.worst = Some((a, b, excess));
            }
        }
    }
    Ok(report)
}
