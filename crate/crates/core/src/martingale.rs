//! Martingale-constrained transport (MOET) and its homogeneous formulation.
//!
//! The primal is solved through [`solve`] with a martingale cost. The dual
//! works with triples `(φ1, φ2, h)` subject to
//! `φ1(x_i) + φ2(x_j) + h(x_i)(x_j - x_i) <= c_ij`. The homogeneous side
//! lifts couplings to the cone `Y = X × [0, ∞)` and evaluates the marginal
//! perspective cost `H`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cost::WeakCost;
use crate::duality::{dual_ascent_rc, FEASIBILITY_TOL};
use crate::entropy::{Entropy, EntropyFunction};
use crate::error::{Result, WoetError};
use crate::extended::{ext_add, mass_times, ExtReal};
use crate::measures::{Coupling, DiscreteMeasure, GroundSet, LiftedPoint};
use crate::solver::{objective, solve, ProblemSpec, SolveReport, SolverOptions};

/// Tolerance on `h_i^p(α) <= μ_i`, relative to `max(1, μ_i)`.
pub const MARGINAL_TOL: f64 = 1e-9;

/// A MOET instance on a single 1-D ground set.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleSpec {
    pub mu1: DiscreteMeasure,
    pub mu2: DiscreteMeasure,
    pub f1: EntropyFunction,
    pub f2: EntropyFunction,
    /// Row-major `|X| × |X|` pairwise cost; entries may be `+∞`.
    pub c: Vec<f64>,
    pub options: SolverOptions,
}

impl MartingaleSpec {
    pub fn new(
        mu1: DiscreteMeasure,
        mu2: DiscreteMeasure,
        f1: EntropyFunction,
        f2: EntropyFunction,
        c: Vec<f64>,
    ) -> Result<Self> {
        mu1.check_same_ground(&mu2)?;
        if mu1.ground().dim() != 1 {
            return Err(WoetError::Validation("martingale problems need a 1-D ground set".into()));
        }
        f1.validate()?;
        f2.validate()?;
        if !(f1.recession() > 0.0) {
            return Err(WoetError::Validation("F1 must have a positive recession constant".into()));
        }
        let spec = MartingaleSpec { mu1, mu2, f1, f2, c, options: SolverOptions::default() };
        spec.problem()?;
        Ok(spec)
    }

    pub fn with_options(mut self, options: SolverOptions) -> Result<Self> {
        options.validate()?;
        self.options = options;
        Ok(self)
    }

    pub fn ground(&self) -> &Arc<GroundSet> {
        self.mu1.ground()
    }

    /// The equivalent WOET instance with a martingale cost.
    pub fn problem(&self) -> Result<ProblemSpec> {
        let x = Arc::clone(self.ground());
        let cost = WeakCost::martingale(Arc::clone(&x), x, self.c.clone())?;
        ProblemSpec::new(self.mu1.clone(), self.mu2.clone(), self.f1, self.f2, cost)?
            .with_options(self.options.clone())
    }

    fn n(&self) -> usize {
        self.mu1.len()
    }

    fn cost(&self, i: usize, j: usize) -> f64 {
        self.c[i * self.n() + j]
    }

    fn coord(&self, i: usize) -> f64 {
        self.ground().coord(i)
    }

    fn cost_scale(&self) -> f64 {
        self.c.iter().filter(|v| v.is_finite()).fold(0.0, |m: f64, v| m.max(v.abs()))
    }
}

/// Necessary condition for a martingale coupling with both marginals
/// enforced: the support of `μ1` lies within the hull of the support of
/// `μ2`. Only checked when both entropies are `Indicator1`.
fn support_precheck(spec: &MartingaleSpec) -> Result<()> {
    if spec.f1 != EntropyFunction::Indicator1 || spec.f2 != EntropyFunction::Indicator1 {
        return Ok(());
    }
    let support = |mu: &DiscreteMeasure| -> Vec<f64> {
        (0..mu.len()).filter(|&i| mu.weights()[i] > 0.0).map(|i| mu.ground().coord(i)).collect()
    };
    let (s1, s2) = (support(&spec.mu1), support(&spec.mu2));
    let lo = s2.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = s2.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if let Some(x) = s1.iter().find(|&&x| x < lo || x > hi) {
        return Err(WoetError::InfeasibleProblem(format!(
            "support point {x} of mu1 lies outside the hull [{lo}, {hi}] of supp mu2"
        )));
    }
    Ok(())
}

/// Solves the martingale-constrained problem.
pub fn solve_moet(spec: &MartingaleSpec) -> Result<SolveReport> {
    support_precheck(spec)?;
    solve(&spec.problem()?)
}

/// Dual triple `(φ1, φ2, h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualTripleM {
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
    pub h: Vec<f64>,
}

/// Largest violation of `φ1_i + φ2_j + h_i(x_j - x_i) <= c_ij`.
pub fn triple_violation(spec: &MartingaleSpec, t: &DualTripleM) -> Result<f64> {
    let n = spec.n();
    if t.phi1.len() != n || t.phi2.len() != n || t.h.len() != n {
        return Err(WoetError::ShapeMismatch(format!("dual triple must have length {n}")));
    }
    if t.phi1.iter().chain(&t.phi2).chain(&t.h).any(|v| !v.is_finite()) {
        return Err(WoetError::Validation("dual triple must be finite".into()));
    }
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let lhs = t.phi1[i] + t.phi2[j] + t.h[i] * (spec.coord(j) - spec.coord(i));
            worst = worst.max(lhs - spec.cost(i, j));
        }
    }
    Ok(worst)
}

/// `Σ μ1 F1°(φ1) + Σ μ2 F2°(φ2)` for a feasible triple.
pub fn dual_value_lambda_m(spec: &MartingaleSpec, t: &DualTripleM) -> Result<f64> {
    let worst = triple_violation(spec, t)?;
    if worst > FEASIBILITY_TOL * (1.0 + spec.cost_scale()) {
        return Err(WoetError::InfeasibleTriple(worst));
    }
    let sum = |f: &EntropyFunction, mu: &DiscreteMeasure, phi: &[f64]| -> f64 {
        mu.weights().iter().zip(phi).map(|(&m, &p)| mass_times(m, f.fcirc(p))).sum()
    };
    Ok(sum(&spec.f1, &spec.mu1, &t.phi1) + sum(&spec.f2, &spec.mu2, &t.phi2))
}

/// Value assigned to `φ1` on rows that cannot transport at all.
const FREE_ROW: f64 = 50.0;

/// Maximizes the `Λ_M` dual and returns a feasible triple with its value.
///
/// The ascent runs in the `R_C` form; `h` is read off the multipliers and
/// `φ1` is recomputed as the tightest value allowed by the constraints, so
/// the returned triple is feasible at every pair of grid points.
pub fn dual_ascent_lambda_m(spec: &MartingaleSpec) -> Result<(DualTripleM, f64)> {
    let problem = spec.problem()?;
    let ascent = dual_ascent_rc(&problem, &spec.options)?;
    if ascent.bound == f64::NEG_INFINITY {
        return Err(WoetError::InfeasibleProblem(
            ascent.flag.unwrap_or_else(|| "no finite dual bound".into()),
        ));
    }
    let n = spec.n();
    let w1 = spec.mu1.weights();
    let w2 = spec.mu2.weights();
    let x = |i: usize| spec.coord(i);
    let mults = ascent.multipliers.unwrap_or_else(|| vec![vec![0.0]; n]);
    let mut h: Vec<f64> = mults.iter().map(|m| m[0]).collect();

    // column potentials on active columns
    let mut phi2 = vec![f64::NAN; n];
    for j in (0..n).filter(|&j| w2[j] > 0.0) {
        phi2[j] = if ascent.phi2[j].is_finite() { ascent.phi2[j] } else { FREE_ROW };
    }
    let active_cols: Vec<usize> = (0..n).filter(|&j| w2[j] > 0.0).collect();

    let mut phi1 = vec![f64::NAN; n];
    for i in (0..n).filter(|&i| w1[i] > 0.0) {
        let finite: Vec<usize> =
            active_cols.iter().copied().filter(|&j| spec.cost(i, j).is_finite()).collect();
        let lo = finite.iter().map(|&j| x(j)).fold(f64::INFINITY, f64::min);
        let hi = finite.iter().map(|&j| x(j)).fold(f64::NEG_INFINITY, f64::max);
        if finite.is_empty() {
            h[i] = 0.0;
            phi1[i] = FREE_ROW;
        } else if x(i) < lo || x(i) > hi {
            // every y_j - x_i has the sign of s; a steep h frees the row
            let s = if x(i) < lo { 1.0 } else { -1.0 };
            let need = finite
                .iter()
                .map(|&j| (FREE_ROW + phi2[j] - spec.cost(i, j)) / (x(j) - x(i)).abs())
                .fold(0.0, f64::max);
            h[i] = -s * (need + 1.0);
            phi1[i] = FREE_ROW;
        } else {
            phi1[i] = finite
                .iter()
                .map(|&j| spec.cost(i, j) - phi2[j] - h[i] * (x(j) - x(i)))
                .fold(f64::INFINITY, f64::min);
        }
    }
    // inactive columns, then inactive rows
    for j in (0..n).filter(|&j| w2[j] <= 0.0) {
        let v = (0..n)
            .filter(|&i| w1[i] > 0.0)
            .map(|i| spec.cost(i, j) - phi1[i] - h[i] * (x(j) - x(i)))
            .fold(f64::INFINITY, f64::min);
        phi2[j] = if v.is_finite() { v } else { 0.0 };
    }
    for i in (0..n).filter(|&i| w1[i] <= 0.0) {
        h[i] = 0.0;
        let v = (0..n).map(|j| spec.cost(i, j) - phi2[j]).fold(f64::INFINITY, f64::min);
        phi1[i] = if v.is_finite() { v } else { 0.0 };
    }
    let triple = DualTripleM { phi1, phi2, h };
    let value = dual_value_lambda_m(spec, &triple)?;
    Ok((triple, value))
}

/// `r F(θ/r)` with the convention `θ F'_∞` at `r = 0`.
fn perspective(f: &EntropyFunction, theta: f64, r: f64) -> ExtReal {
    if r > 0.0 {
        r * f.value(theta / r)
    } else {
        mass_times(theta, f.recession())
    }
}

/// Interval of `θ >= 0` on which `r F(θ/r)` is finite.
fn theta_range(f: &EntropyFunction, r: f64) -> (f64, f64) {
    if r > 0.0 {
        let (lo, hi) = f.domain();
        (r * lo, r * hi)
    } else if f.recession().is_finite() {
        (0.0, f64::INFINITY)
    } else {
        (0.0, 0.0)
    }
}

/// Marginal perspective cost
/// `H(x1, r1; x2, r2) = inf_θ {r1 F1(θ/r1) + r2 F2(θ/r2) + θ c12}`, or
/// `F1(0) r1 + F2(0) r2` when `c12 = +∞`.
///
/// The infimum runs over `θ >= 0` with the value at `θ = 0` taken as the
/// limit from the right. With `F2 = Indicator1` the infimum is attained at
/// `θ = r2`; other pairs are minimized by golden-section search.
pub fn perspective_cost_h(
    f1: &EntropyFunction,
    f2: &EntropyFunction,
    r1: f64,
    r2: f64,
    c12: ExtReal,
) -> ExtReal {
    if c12 == f64::INFINITY {
        return ext_add(mass_times(r1, f1.at_zero()), mass_times(r2, f2.at_zero()));
    }
    let g = |t: f64| ext_add(ext_add(perspective(f1, t, r1), perspective(f2, t, r2)), mass_times(t, c12));
    if *f2 == EntropyFunction::Indicator1 {
        return g(r2);
    }
    let (a1, b1) = theta_range(f1, r1);
    let (a2, b2) = theta_range(f2, r2);
    let (lo, mut hi) = (a1.max(a2), b1.min(b2));
    if lo > hi {
        return f64::INFINITY;
    }
    if hi == lo {
        return g(lo);
    }
    if hi == f64::INFINITY {
        hi = lo.max(r1).max(r2).max(1.0);
        let mut k = 0;
        while g(2.0 * hi) <= g(hi) && k < 200 {
            hi *= 2.0;
            k += 1;
        }
        hi *= 2.0;
    }
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while (b - a) > 1e-12 * b.abs().max(1e-300) {
        if gc <= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - invphi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + invphi * (b - a);
            gd = g(d);
        }
    }
    [g(lo), g(hi), gc, gd].into_iter().fold(f64::INFINITY, f64::min)
}

/// One atom `((x1, r1), (x2, r2), w)` of a lifted plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiftedAtom {
    pub y1: LiftedPoint,
    pub y2: LiftedPoint,
    pub weight: f64,
}

/// Finite measure on `Y × Y` together with the homogeneity exponent `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedPlan {
    pub atoms: Vec<LiftedAtom>,
    pub p: f64,
}

impl LiftedPlan {
    /// The lift `(x1, ϱ1^{1/p}; x2, ϱ2^{1/p})_♯ γ`, where `ϱ_i` is the density
    /// of `μ_i` with respect to the `i`-th marginal of `γ`.
    pub fn canonical(spec: &MartingaleSpec, gamma: &Coupling, p: f64) -> Result<Self> {
        if !(p > 0.0) {
            return Err(WoetError::Validation("p must be positive".into()));
        }
        let (g1, g2) = gamma.marginals();
        let density = |mu: &DiscreteMeasure, g: &DiscreteMeasure, k: usize| {
            let gk = g.weights()[k];
            if gk > 0.0 {
                mu.weights()[k] / gk
            } else {
                0.0
            }
        };
        let mut atoms = Vec::new();
        for i in 0..gamma.n_rows() {
            for j in 0..gamma.n_cols() {
                let w = gamma.get(i, j);
                if w > 0.0 {
                    let r1 = density(&spec.mu1, &g1, i).powf(1.0 / p);
                    let r2 = density(&spec.mu2, &g2, j).powf(1.0 / p);
                    atoms.push(LiftedAtom {
                        y1: LiftedPoint { x: i, r: r1 },
                        y2: LiftedPoint { x: j, r: r2 },
                        weight: w,
                    });
                }
            }
        }
        Ok(LiftedPlan { atoms, p })
    }
}

/// `h_i^p(α)`: the pushforward of `r_i^p α` to the `x_i` coordinate.
pub fn homogeneous_marginal(plan: &LiftedPlan, side: usize, ground: &Arc<GroundSet>) -> Result<DiscreteMeasure> {
    if side != 1 && side != 2 {
        return Err(WoetError::Validation(format!("side must be 1 or 2, got {side}")));
    }
    let mut w = vec![0.0; ground.len()];
    for a in &plan.atoms {
        let y = if side == 1 { a.y1 } else { a.y2 };
        if y.x >= ground.len() {
            return Err(WoetError::ShapeMismatch(format!("atom index {} out of range", y.x)));
        }
        if !(a.weight >= 0.0) || !(y.r >= 0.0) {
            return Err(WoetError::Validation("atom weights and radii must be nonnegative".into()));
        }
        w[y.x] += a.weight * y.r.powf(plan.p);
    }
    DiscreteMeasure::new(Arc::clone(ground), w)
}

/// `Σ_atoms w H(x1, r1^p; x2, r2^p) + F1(0)(μ1 - h_1^p(α))(X)`, after
/// checking `h_i^p(α) <= μ_i` and the martingale moment condition.
pub fn homogeneous_objective(spec: &MartingaleSpec, plan: &LiftedPlan) -> Result<ExtReal> {
    let ground = spec.ground();
    let spread = ground.spread();
    for side in [1, 2] {
        let mu = if side == 1 { &spec.mu1 } else { &spec.mu2 };
        let h = homogeneous_marginal(plan, side, ground)?;
        for (k, (hv, mv)) in h.weights().iter().zip(mu.weights()).enumerate() {
            if *hv > mv + MARGINAL_TOL * mv.max(1.0) {
                return Err(WoetError::ConstraintViolated(format!(
                    "h_{side}^p exceeds mu_{side} at point {k} ({hv} > {mv})"
                )));
            }
        }
    }
    let mut moment = vec![0.0; ground.len()];
    let mut mass = vec![0.0; ground.len()];
    for a in &plan.atoms {
        moment[a.y1.x] += a.weight * (ground.coord(a.y2.x) - ground.coord(a.y1.x));
        mass[a.y1.x] += a.weight;
    }
    for (k, (m, w)) in moment.iter().zip(&mass).enumerate() {
        if m.abs() > MARGINAL_TOL * spread.max(1.0) * w.max(1.0) {
            return Err(WoetError::ConstraintViolated(format!(
                "martingale moment at point {k} is {m:e}"
            )));
        }
    }
    let mut total = 0.0;
    for a in &plan.atoms {
        let c = spec.cost(a.y1.x, a.y2.x);
        let h = perspective_cost_h(&spec.f1, &spec.f2, a.y1.r.powf(plan.p), a.y2.r.powf(plan.p), c);
        total = ext_add(total, mass_times(a.weight, h));
    }
    let h1 = homogeneous_marginal(plan, 1, ground)?;
    let deficit = (spec.mu1.total_mass() - h1.total_mass()).max(0.0);
    Ok(ext_add(total, mass_times(deficit, spec.f1.at_zero())))
}

/// `𝓗(μ1, μ2 | γ) = Σ γ_ij H(x_i, ϱ1_i; x_j, ϱ2_j) + Σ_k F_k(0) μ_k^⊥(X)`.
pub fn homogeneous_functional(spec: &MartingaleSpec, gamma: &Coupling) -> Result<ExtReal> {
    let (g1, g2) = gamma.marginals();
    let rho = |mu: &DiscreteMeasure, g: &DiscreteMeasure, k: usize| {
        let gk = g.weights()[k];
        if gk > 0.0 {
            mu.weights()[k] / gk
        } else {
            0.0
        }
    };
    let mut total = 0.0;
    for i in 0..gamma.n_rows() {
        for j in 0..gamma.n_cols() {
            let w = gamma.get(i, j);
            if w > 0.0 {
                let h = perspective_cost_h(
                    &spec.f1,
                    &spec.f2,
                    rho(&spec.mu1, &g1, i),
                    rho(&spec.mu2, &g2, j),
                    spec.cost(i, j),
                );
                total = ext_add(total, mass_times(w, h));
            }
        }
    }
    let singular = |mu: &DiscreteMeasure, g: &DiscreteMeasure| -> f64 {
        mu.weights().iter().zip(g.weights()).filter(|(_, gv)| **gv <= 0.0).map(|(m, _)| m).sum()
    };
    total = ext_add(total, mass_times(singular(&spec.mu1, &g1), spec.f1.at_zero()));
    Ok(ext_add(total, mass_times(singular(&spec.mu2, &g2), spec.f2.at_zero())))
}

/// The three values whose agreement the homogeneous reformulation predicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousReport {
    pub p: f64,
    /// `E_M` from the primal solver.
    pub moet_value: f64,
    /// `𝓗(μ1, μ2 | γ*)` at the solver's plan.
    pub functional_value: f64,
    /// Homogeneous objective of the canonical lift of `γ*`.
    pub lifted_value: f64,
    pub max_discrepancy: f64,
    pub martingale_residual: f64,
}

/// Solves the MOET problem and evaluates both homogeneous formulations at
/// the optimal plan. Needs `F2 = Indicator1` and `c >= 0`.
pub fn check_homogeneous_equivalence(spec: &MartingaleSpec, p: f64) -> Result<HomogeneousReport> {
    if spec.f2 != EntropyFunction::Indicator1 {
        return Err(WoetError::HypothesesNotMet("F2 must be Indicator1".into()));
    }
    if spec.c.iter().any(|v| *v < 0.0) {
        return Err(WoetError::HypothesesNotMet("cost must be nonnegative".into()));
    }
    let report = solve_moet(spec)?;
    let gamma = &report.coupling;
    let functional_value = homogeneous_functional(spec, gamma)?;
    let lifted_value = homogeneous_objective(spec, &LiftedPlan::canonical(spec, gamma, p)?)?;
    let moet_value = objective(&spec.problem()?, gamma)?;
    let vals = [moet_value, functional_value, lifted_value];
    let max_discrepancy = vals
        .iter()
        .flat_map(|a| vals.iter().map(move |b| if a == b { 0.0 } else { (a - b).abs() }))
        .fold(0.0, f64::max);
    Ok(HomogeneousReport {
        p,
        moet_value,
        functional_value,
        lifted_value,
        max_discrepancy,
        martingale_residual: report.diagnostics.martingale_residual.unwrap_or(0.0),
    })
}
