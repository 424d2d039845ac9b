//! Dual objectives, dual feasibility and certified lower bounds.
//!
//! Feasibility of a pair `(φ1, φ2)` over all probability vectors `p` reduces
//! to the pointwise test `φ1 <= R_C(-φ2)`, which is exact for every catalog
//! cost.

mod ascent;

use serde::{Deserialize, Serialize};

use crate::entropy::{Entropy, EntropyFunction};
use crate::error::{Result, WoetError};
use crate::extended::{ext_add, mass_times, ExtReal};
use crate::measures::DiscreteMeasure;
use crate::solver::{ProblemSpec, SolveReport, SolverOptions};

/// Base tolerance on dual constraint violations, scaled by `1 + max|c|`.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualForm {
    /// `F°`-potentials with `φ1 + p(φ2) <= C(x, p)`.
    Lambda,
    /// `R*`-potentials with `R1*(φ1) + p(R2*(φ2)) <= C(x, p)` and
    /// `sup φ_i < F_i(0)`.
    LambdaR,
    /// Only `φ2` is used; `φ1` is implied as `R_C(-φ2)`.
    RcForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPair {
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
    pub form: DualForm,
}

impl DualPair {
    pub fn new(phi1: Vec<f64>, phi2: Vec<f64>, form: DualForm) -> Self {
        DualPair { phi1, phi2, form }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// `max_i (φ1_i - R_C(-φ2)_i)`, clipped below at zero.
    pub max_violation: f64,
}

/// Output of [`dual_ascent_rc`].
#[derive(Debug, Clone, PartialEq)]
pub struct DualAscent {
    /// Column potential `φ` of the `R_C` form. Columns without mass carry
    /// `+∞`; columns with mass that admit no transport carry `-∞`.
    pub phi: Vec<f64>,
    /// `R_C φ` on the rows.
    pub rc: Vec<f64>,
    /// `dual_value_rc(φ)`, a certified lower bound on the primal value.
    pub bound: f64,
    /// Column potentials of the pairwise form (`-φ`).
    pub phi2: Vec<f64>,
    /// Row multipliers (martingale `h` or Marton `λ`), one vector per row.
    pub multipliers: Option<Vec<Vec<f64>>>,
    pub iterations: usize,
    pub converged: bool,
    pub hypotheses_met: bool,
    pub flag: Option<String>,
}

fn cost_scale(spec: &ProblemSpec) -> f64 {
    let (n1, n2) = (spec.mu1.len(), spec.mu2.len());
    let mut m: f64 = 0.0;
    for i in 0..n1 {
        for j in 0..n2 {
            if let Some(c) = spec.cost.pair_cost(i, j).filter(|c| c.is_finite()) {
                m = m.max(c.abs());
            }
        }
    }
    m
}

fn check_lengths(spec: &ProblemSpec, phi1: Option<&[f64]>, phi2: &[f64]) -> Result<()> {
    if let Some(p) = phi1 {
        if p.len() != spec.mu1.len() {
            return Err(WoetError::ShapeMismatch(format!(
                "phi1 has length {}, expected {}",
                p.len(),
                spec.mu1.len()
            )));
        }
    }
    if phi2.len() != spec.mu2.len() {
        return Err(WoetError::ShapeMismatch(format!(
            "phi2 has length {}, expected {}",
            phi2.len(),
            spec.mu2.len()
        )));
    }
    Ok(())
}

/// Largest excess of `φ1` over `R_C(-φ2)`.
fn excess(spec: &ProblemSpec, phi1: &[f64], phi2: &[f64]) -> Result<f64> {
    let neg: Vec<f64> = phi2.iter().map(|v| -v).collect();
    let rc = spec.cost.rc_transform(&neg)?;
    let mut worst: f64 = 0.0;
    for (a, r) in phi1.iter().zip(&rc) {
        let v = if *r == f64::INFINITY { f64::NEG_INFINITY } else { a - r };
        worst = worst.max(if v.is_nan() { f64::INFINITY } else { v });
    }
    Ok(worst)
}

fn report(spec: &ProblemSpec, worst: f64) -> FeasibilityReport {
    let tol = FEASIBILITY_TOL * (1.0 + cost_scale(spec));
    FeasibilityReport { feasible: worst <= tol, max_violation: worst }
}

/// Checks `φ1(x_i) <= R_C(-φ2)(x_i)` at every row (with `R*`-transformed
/// potentials for the `LambdaR` form).
pub fn feasibility_lambda(spec: &ProblemSpec, pair: &DualPair) -> Result<FeasibilityReport> {
    check_lengths(spec, Some(&pair.phi1), &pair.phi2)?;
    let worst = match pair.form {
        DualForm::LambdaR => {
            let p1: Vec<f64> = pair.phi1.iter().map(|&v| spec.f1.reverse_conjugate(v)).collect();
            let p2: Vec<f64> = pair.phi2.iter().map(|&v| spec.f2.reverse_conjugate(v)).collect();
            excess(spec, &p1, &p2)?
        }
        _ => excess(spec, &pair.phi1, &pair.phi2)?,
    };
    Ok(report(spec, worst))
}

fn conjugate_sum(f: &EntropyFunction, mu: &DiscreteMeasure, phi: &[f64]) -> ExtReal {
    mu.weights().iter().zip(phi).fold(0.0, |acc, (&m, &p)| ext_add(acc, mass_times(m, f.fcirc(p))))
}

/// `Σ μ1 F1°(φ1) + Σ μ2 F2°(φ2)` for a feasible `Λ` pair.
pub fn dual_value_lambda(spec: &ProblemSpec, pair: &DualPair) -> Result<f64> {
    check_lengths(spec, Some(&pair.phi1), &pair.phi2)?;
    if pair.phi1.iter().chain(&pair.phi2).any(|v| !v.is_finite()) {
        return Err(WoetError::Validation("dual potentials must be finite".into()));
    }
    let pair = DualPair { form: DualForm::Lambda, ..pair.clone() };
    let feas = feasibility_lambda(spec, &pair)?;
    if !feas.feasible {
        return Err(WoetError::InfeasiblePair(feas.max_violation));
    }
    Ok(conjugate_sum(&spec.f1, &spec.mu1, &pair.phi1) + conjugate_sum(&spec.f2, &spec.mu2, &pair.phi2))
}

/// `Σ μ1 φ1 + Σ μ2 φ2` for a feasible `Λ_R` pair.
pub fn dual_value_lambda_r(spec: &ProblemSpec, pair: &DualPair) -> Result<f64> {
    check_lengths(spec, Some(&pair.phi1), &pair.phi2)?;
    if pair.phi1.iter().chain(&pair.phi2).any(|v| !v.is_finite()) {
        return Err(WoetError::Validation("dual potentials must be finite".into()));
    }
    let below = |phi: &[f64], f: &EntropyFunction| phi.iter().all(|&v| v < f.at_zero());
    if !below(&pair.phi1, &spec.f1) || !below(&pair.phi2, &spec.f2) {
        return Err(WoetError::InfeasiblePair(f64::INFINITY));
    }
    let pair = DualPair { form: DualForm::LambdaR, ..pair.clone() };
    let feas = feasibility_lambda(spec, &pair)?;
    if !feas.feasible {
        return Err(WoetError::InfeasiblePair(feas.max_violation));
    }
    let dot = |mu: &DiscreteMeasure, phi: &[f64]| -> f64 {
        mu.weights().iter().zip(phi).map(|(m, p)| m * p).sum()
    };
    Ok(dot(&spec.mu1, &pair.phi1) + dot(&spec.mu2, &pair.phi2))
}

/// `Σ μ1 F1°(R_C φ) + Σ μ2 F2°(-φ)`, a lower bound on the primal value for
/// every `φ`.
///
/// Entries of `φ` may be `+∞` (column excluded from the infimum) or `-∞`
/// (column given away for free); zero-mass terms vanish.
pub fn dual_value_rc(spec: &ProblemSpec, phi: &[f64]) -> Result<f64> {
    check_lengths(spec, None, phi)?;
    let rc = spec.cost.rc_transform(phi)?;
    let neg: Vec<f64> = phi.iter().map(|v| -v).collect();
    Ok(ext_add(conjugate_sum(&spec.f1, &spec.mu1, &rc), conjugate_sum(&spec.f2, &spec.mu2, &neg)))
}

/// Maximizes the `R_C` dual with a barrier method and returns the certified
/// bound at the final potential.
///
/// The iteration budget is `options.max_iter` Newton steps; with a zero
/// budget the bound of the starting potential is returned.
pub fn dual_ascent_rc(spec: &ProblemSpec, options: &SolverOptions) -> Result<DualAscent> {
    ascent::ascent(spec, options)
}

/// `primal - best bound`, taking the larger of the report's bound and the
/// values of any supplied feasible pairs. Infeasible pairs are ignored.
pub fn gap(spec: &ProblemSpec, report: &SolveReport, pairs: &[DualPair]) -> f64 {
    let mut best = report.dual_bound.unwrap_or(f64::NEG_INFINITY);
    for pair in pairs {
        let value = match pair.form {
            DualForm::Lambda => dual_value_lambda(spec, pair),
            DualForm::LambdaR => dual_value_lambda_r(spec, pair),
            DualForm::RcForm => {
                let phi: Vec<f64> = pair.phi2.iter().map(|v| -v).collect();
                dual_value_rc(spec, &phi)
            }
        };
        if let Ok(v) = value {
            best = best.max(v);
        }
    }
    report.primal_value - best
}
