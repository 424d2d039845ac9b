//! Weak optimal entropy transport on finite point clouds.
//!
//! The crate solves
//!
//! ```text
//! minimize  𝓕1(γ1|μ1) + 𝓕2(γ2|μ2) + Σ_i m_i C(x_i, γ_i/m_i)
//! ```
//!
//! over nonnegative couplings `γ`, certifies the result with a dual lower
//! bound, and implements the martingale-constrained variant together with
//! its homogeneous (lifted) reformulation.
//!
//! ```
//! use std::sync::Arc;
//! use woet_core::{DiscreteMeasure, EntropyFunction, GroundSet, ProblemSpec, WeakCost, solve};
//!
//! let x = Arc::new(GroundSet::line(&[0.0]).unwrap());
//! let mu1 = DiscreteMeasure::new(x.clone(), vec![1.0]).unwrap();
//! let mu2 = DiscreteMeasure::new(x.clone(), vec![4.0]).unwrap();
//! let cost = WeakCost::linear(x.clone(), x, vec![0.0]).unwrap();
//! let spec = ProblemSpec::new(mu1, mu2, EntropyFunction::Kl, EntropyFunction::Kl, cost).unwrap();
//! let report = solve(&spec).unwrap();
//! assert!((report.primal_value - 1.0).abs() < 1e-6);
//! ```

pub mod corpus;
pub mod cost;
pub mod duality;
pub mod entropy;
pub mod error;
pub mod extended;
pub mod io;
pub mod martingale;
pub mod measures;
pub mod solver;

mod barrier;
mod lp;

pub use cost::{convex_envelope_1d, CostKind, EnvelopePiece, Theta, WeakCost};
pub use duality::{
    dual_ascent_rc, dual_value_lambda, dual_value_lambda_r, dual_value_rc, feasibility_lambda,
    gap, DualAscent, DualForm, DualPair, FeasibilityReport,
};
pub use entropy::{divergence, reverse_functional, Entropy, EntropyFunction};
pub use error::{Result, WoetError};
pub use extended::ExtReal;
pub use martingale::{
    check_homogeneous_equivalence, dual_value_lambda_m, homogeneous_marginal,
    homogeneous_objective, perspective_cost_h, solve_moet, DualTripleM, HomogeneousReport,
    LiftedAtom, LiftedPlan, MartingaleSpec,
};
pub use measures::{
    disintegrate, lebesgue_decompose, marginals, scale, Coupling, DiscreteMeasure, GroundSet,
    LebesgueDecomposition, LiftedPoint,
};
pub use solver::{
    c_monotonicity_check, check_coercivity, check_feasibility, objective, oracle_solve, solve,
    CoercivityReport, FeasibilityDiagnostics, MassCap, MonotonicityReport, ProblemSpec,
    SolveReport, SolverOptions, Status,
};
