//! Primal WOET solver, feasibility and coercivity diagnostics, a brute-force
//! oracle for tiny instances and a C-monotonicity diagnostic.

mod monotone;
mod oracle;
mod primal;

use std::sync::Arc;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::cost::{CostKind, WeakCost};
use crate::duality::{dual_ascent_rc, DualAscent};
use crate::entropy::{divergence, Entropy, EntropyFunction};
use crate::error::{Result, WoetError};
use crate::extended::{ext_add, mass_times, ExtReal};
use crate::measures::{same_ground, Coupling, DiscreteMeasure, GroundSet};

pub use monotone::{c_monotonicity_check, MonotonicityReport};
pub use oracle::oracle_solve;

/// Total-mass cap. `Auto` leaves the barrier solver uncapped and sizes the
/// oracle grid as `4·max(|μ1|, |μ2|) + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassCap {
    #[default]
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// A solve is `Optimal` when `gap <= tol_gap·(1 + |primal|)`.
    pub tol_gap: f64,
    /// Budget of Newton iterations shared by the primal and dual solves.
    pub max_iter: usize,
    pub mass_cap: MassCap,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol_gap: 1e-6, max_iter: 50_000, mass_cap: MassCap::Auto, seed: 0 }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_gap > 0.0) {
            return Err(WoetError::Validation("tol_gap must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(WoetError::Validation("max_iter must be at least 1".into()));
        }
        if let MassCap::Fixed(m) = self.mass_cap {
            if !(m > 0.0) || !m.is_finite() {
                return Err(WoetError::Validation("mass_cap must be positive and finite".into()));
            }
        }
        Ok(())
    }

    /// Resolved mass cap for measures of the given total masses.
    pub fn resolved_mass_cap(&self, m1: f64, m2: f64) -> f64 {
        match self.mass_cap {
            MassCap::Auto => 4.0 * m1.max(m2) + 1.0,
            MassCap::Fixed(m) => m,
        }
    }
}

/// A WOET instance: two measures, two entropies and a weak cost.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub mu1: DiscreteMeasure,
    pub mu2: DiscreteMeasure,
    pub f1: EntropyFunction,
    pub f2: EntropyFunction,
    pub cost: WeakCost,
    pub options: SolverOptions,
}

impl ProblemSpec {
    pub fn new(
        mu1: DiscreteMeasure,
        mu2: DiscreteMeasure,
        f1: EntropyFunction,
        f2: EntropyFunction,
        cost: WeakCost,
    ) -> Result<Self> {
        if !same_ground(mu1.ground(), cost.rows()) || !same_ground(mu2.ground(), cost.cols()) {
            return Err(WoetError::GroundMismatch);
        }
        f1.validate()?;
        f2.validate()?;
        Ok(ProblemSpec { mu1, mu2, f1, f2, cost, options: SolverOptions::default() })
    }

    pub fn with_options(mut self, options: SolverOptions) -> Result<Self> {
        options.validate()?;
        self.options = options;
        Ok(self)
    }

    pub fn rows(&self) -> &Arc<GroundSet> {
        self.mu1.ground()
    }

    pub fn cols(&self) -> &Arc<GroundSet> {
        self.mu2.ground()
    }

    /// Same problem with both measures multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Ok(ProblemSpec { mu1: self.mu1.scale(lambda)?, mu2: self.mu2.scale(lambda)?, ..self.clone() })
    }

    /// `F1(0)|μ1| + F2(0)|μ2|`, the objective of the null coupling.
    pub fn null_value(&self) -> ExtReal {
        ext_add(
            mass_times(self.mu1.total_mass(), self.f1.at_zero()),
            mass_times(self.mu2.total_mass(), self.f2.at_zero()),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    Feasible,
    Infeasible,
    IterLimit,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Feasible => "feasible",
            Status::Infeasible => "infeasible",
            Status::IterLimit => "iter_limit",
        }
    }
}

/// Outcome of the feasibility test on the masses and the cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityDiagnostics {
    /// `K = m1·D(F1) ∩ m2·D(F2)` as a closed interval, if nonempty.
    pub k_interval: Option<(f64, f64)>,
    /// Necessary condition: `K` is nonempty.
    pub k_nonempty: bool,
    /// Sufficient condition (i): `F1(0)` and `F2(0)` are finite.
    pub finite_at_zero: bool,
    /// Whether the cost admits a separable finite upper bound.
    pub separable_bound: bool,
    /// Sufficient condition (ii): `K ≠ ∅`, `m1·m2 ≠ 0` and a separable bound.
    pub separable_route: bool,
    /// A sufficient condition holds.
    pub guaranteed: bool,
    pub reason: Option<String>,
}

/// Which existence route applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoercivityReport {
    /// Both entropies are superlinear.
    pub superlinear: bool,
    /// Finite grounds and `F1'_∞ + F2'_∞ + inf C > 0`.
    pub compact: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub feasibility: FeasibilityDiagnostics,
    pub coercivity: CoercivityReport,
    pub primal_iterations: usize,
    pub dual_iterations: usize,
    /// `max_i |Σ_j γ_ij (y_j - x_i)|` for martingale costs.
    pub martingale_residual: Option<f64>,
    pub notes: Vec<String>,
}

impl Diagnostics {
    pub fn iterations(&self) -> usize {
        self.primal_iterations + self.dual_iterations
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub coupling: Coupling,
    pub primal_value: ExtReal,
    pub dual_bound: Option<f64>,
    pub gap: Option<f64>,
    pub status: Status,
    /// Potential `φ` on the columns certifying `dual_bound` (entries may be
    /// `±∞` on columns that carry no mass or admit no transport).
    pub dual_potential: Option<Vec<f64>>,
    /// `R_C φ` on the rows.
    pub dual_rc: Option<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

/// `𝓕1(γ1|μ1) + 𝓕2(γ2|μ2) + Σ_i m_i C(x_i, γ_i/m_i)`.
pub fn objective(spec: &ProblemSpec, gamma: &Coupling) -> Result<ExtReal> {
    if gamma.n_rows() != spec.mu1.len() || gamma.n_cols() != spec.mu2.len() {
        return Err(WoetError::ShapeMismatch(format!(
            "coupling is {}x{}, problem is {}x{}",
            gamma.n_rows(),
            gamma.n_cols(),
            spec.mu1.len(),
            spec.mu2.len()
        )));
    }
    let (g1, g2) = gamma.marginals();
    let g1 = DiscreteMeasure::new(Arc::clone(spec.mu1.ground()), g1.weights().to_vec())?;
    let g2 = DiscreteMeasure::new(Arc::clone(spec.mu2.ground()), g2.weights().to_vec())?;
    let mut total = ext_add(divergence(&spec.f1, &g1, &spec.mu1)?, divergence(&spec.f2, &g2, &spec.mu2)?);
    for i in 0..gamma.n_rows() {
        total = ext_add(total, spec.cost.row_perspective(i, gamma.row(i))?);
    }
    Ok(total)
}

fn scaled_domain(f: &EntropyFunction, m: f64) -> (f64, f64) {
    if m == 0.0 {
        return (0.0, 0.0);
    }
    let (lo, hi) = f.domain();
    (m * lo, m * hi)
}

pub fn check_feasibility(spec: &ProblemSpec) -> FeasibilityDiagnostics {
    let (m1, m2) = (spec.mu1.total_mass(), spec.mu2.total_mass());
    let (a1, b1) = scaled_domain(&spec.f1, m1);
    let (a2, b2) = scaled_domain(&spec.f2, m2);
    let (lo, hi) = (a1.max(a2), b1.min(b2));
    let k_nonempty = lo <= hi || crate::extended::in_interval(lo, hi, hi);
    let finite_at_zero = spec.f1.at_zero().is_finite() && spec.f2.at_zero().is_finite();
    let separable_bound = spec.cost.has_separable_bound();
    let separable_route = k_nonempty && m1 * m2 != 0.0 && separable_bound;
    let guaranteed = k_nonempty && (finite_at_zero || separable_route);
    let reason = if !k_nonempty {
        Some(format!("K empty: m1·D(F1) = [{a1}, {b1}] and m2·D(F2) = [{a2}, {b2}] do not meet"))
    } else if !guaranteed {
        Some(if matches!(spec.cost.kind(), CostKind::Martingale(_)) {
            "feasibility not guaranteed: martingale cost takes the value +inf".to_string()
        } else {
            "feasibility not guaranteed: cost has infinite entries".to_string()
        })
    } else {
        None
    };
    FeasibilityDiagnostics {
        k_interval: k_nonempty.then_some((lo, hi.max(lo))),
        k_nonempty,
        finite_at_zero,
        separable_bound,
        separable_route,
        guaranteed,
        reason,
    }
}

pub fn check_coercivity(spec: &ProblemSpec) -> CoercivityReport {
    let (r1, r2) = (spec.f1.recession(), spec.f2.recession());
    let superlinear = r1 == f64::INFINITY && r2 == f64::INFINITY;
    let compact = r1 + r2 + spec.cost.lower_bound() > 0.0;
    CoercivityReport { superlinear, compact, holds: superlinear || compact }
}

fn martingale_residual(cost: &WeakCost, gamma: &Coupling) -> Option<f64> {
    if !matches!(cost.kind(), CostKind::Martingale(_)) {
        return None;
    }
    let (rows, cols) = (cost.rows(), cost.cols());
    let mut worst: f64 = 0.0;
    for i in 0..gamma.n_rows() {
        let x = rows.coord(i);
        let drift: f64 = gamma.row(i).iter().enumerate().map(|(j, g)| g * (cols.coord(j) - x)).sum();
        worst = worst.max(drift.abs());
    }
    Some(worst)
}

/// Minimizes the WOET objective and certifies the result with a dual bound.
pub fn solve(spec: &ProblemSpec) -> Result<SolveReport> {
    spec.options.validate()?;
    let feasibility = check_feasibility(spec);
    let coercivity = check_coercivity(spec);
    if !feasibility.k_nonempty {
        return Err(WoetError::InfeasibleProblem(
            feasibility.reason.clone().unwrap_or_else(|| "K empty".into()),
        ));
    }
    let primal = primal::solve_primal(spec, spec.options.max_iter)?;
    let primal_value = objective(spec, &primal.coupling)?;
    debug!("primal: value {primal_value:e} after {} Newton steps", primal.iterations);

    let mut notes = primal.notes;
    let budget = spec.options.max_iter.saturating_sub(primal.iterations);
    let dual: Option<DualAscent> = match dual_ascent_rc(spec, &spec.options.clone_with_budget(budget)) {
        Ok(d) => Some(d),
        Err(e) => {
            notes.push(format!("dual bound unavailable: {e}"));
            None
        }
    };
    let dual_iterations = dual.as_ref().map_or(0, |d| d.iterations);
    let dual_bound = dual.as_ref().map(|d| d.bound).filter(|b| !b.is_nan());
    let gap = dual_bound.filter(|b| b.is_finite()).map(|b| primal_value - b);
    let hit_limit = !primal.converged || dual.as_ref().is_some_and(|d| !d.converged);
    let certified = gap.is_some_and(|g| g <= spec.options.tol_gap * (1.0 + primal_value.abs()));
    let status = if certified && coercivity.holds {
        Status::Optimal
    } else if hit_limit {
        Status::IterLimit
    } else {
        Status::Feasible
    };
    info!(
        "solve: primal {primal_value:e}, bound {:?}, status {}",
        dual_bound,
        status.as_str()
    );
    let martingale_residual = martingale_residual(&spec.cost, &primal.coupling);
    Ok(SolveReport {
        coupling: primal.coupling,
        primal_value,
        dual_bound,
        gap,
        status,
        dual_potential: dual.as_ref().map(|d| d.phi.clone()),
        dual_rc: dual.as_ref().map(|d| d.rc.clone()),
        diagnostics: Diagnostics {
            feasibility,
            coercivity,
            primal_iterations: primal.iterations,
            dual_iterations,
            martingale_residual,
            notes,
        },
    })
}

impl SolverOptions {
    pub(crate) fn clone_with_budget(&self, max_iter: usize) -> SolverOptions {
        SolverOptions { max_iter, ..self.clone() }
    }
}
