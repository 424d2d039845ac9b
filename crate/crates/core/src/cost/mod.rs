//! Weak transport costs `C(x, p)` on finite grounds.
//!
//! Three kinds are supported:
//!
//! * `Linear`: `C(x_i, p) = Σ_j c_ij p_j`, the classical pairwise cost;
//! * `Martingale`: the same integral, but `+∞` unless the barycenter of `p`
//!   equals `x_i` (1-D grounds only);
//! * `Marton`: `C(x_i, p) = θ(x_i - Σ_j p_j y_j)` with `θ = |·|²` or `|·|`.
//!
//! Each kind also provides the `R_C` transform
//! `R_C φ(x) = inf_p {C(x, p) + p(φ)}` in closed form.

mod envelope;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use envelope::{convex_envelope_1d, EnvelopePiece};

use crate::error::{Result, WoetError};
use crate::extended::{ext_min, mass_times, ExtReal};
use crate::measures::{GroundSet, ZERO_MASS};

/// Tolerance on `|Σ p_j - 1|` accepted by [`WeakCost::eval_c`].
pub const PROBABILITY_TOL: f64 = 1e-9;

/// Relative tolerance (times the support spread) on the martingale mean.
pub const MEAN_TOL: f64 = 1e-9;

/// Convex penalty in Marton's cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theta {
    /// `z ↦ |z|²`
    Quadratic,
    /// `z ↦ |z|` (1-D grounds only)
    Absolute,
}

impl Theta {
    pub fn eval(&self, z: &[f64]) -> f64 {
        match self {
            Theta::Quadratic => z.iter().map(|v| v * v).sum(),
            Theta::Absolute => z.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }

    /// Convex conjugate `θ*(λ)`; `+∞` outside its domain.
    pub fn conjugate(&self, lambda: &[f64]) -> ExtReal {
        let sq: f64 = lambda.iter().map(|v| v * v).sum();
        match self {
            Theta::Quadratic => sq / 4.0,
            Theta::Absolute => {
                if sq <= 1.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CostKind {
    /// Row-major `|X1| × |X2|` matrix; entries may be `+∞`.
    Linear(Vec<f64>),
    /// Pairwise cost matrix plus the barycenter constraint.
    Martingale(Vec<f64>),
    Marton(Theta),
}

/// A weak cost bound to its row and column grounds.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakCost {
    kind: CostKind,
    rows: Arc<GroundSet>,
    cols: Arc<GroundSet>,
    lower_bound: f64,
}

fn check_matrix(rows: &GroundSet, cols: &GroundSet, c: &[f64]) -> Result<f64> {
    if c.len() != rows.len() * cols.len() {
        return Err(WoetError::ShapeMismatch(format!(
            "cost matrix has {} entries, expected {}x{}",
            c.len(),
            rows.len(),
            cols.len()
        )));
    }
    if let Some(k) = c.iter().position(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
        return Err(WoetError::Validation(format!(
            "cost entry ({}, {}) must be a real number or +inf",
            k / cols.len(),
            k % cols.len()
        )));
    }
    let lb = c.iter().copied().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min);
    Ok(if lb.is_finite() { lb } else { 0.0 })
}

impl WeakCost {
    pub fn linear(rows: Arc<GroundSet>, cols: Arc<GroundSet>, c: Vec<f64>) -> Result<Self> {
        let lower_bound = check_matrix(&rows, &cols, &c)?;
        Ok(WeakCost { kind: CostKind::Linear(c), rows, cols, lower_bound })
    }

    pub fn martingale(rows: Arc<GroundSet>, cols: Arc<GroundSet>, c: Vec<f64>) -> Result<Self> {
        if rows.dim() != 1 || cols.dim() != 1 {
            return Err(WoetError::Validation("martingale costs need 1-D grounds".into()));
        }
        let lower_bound = check_matrix(&rows, &cols, &c)?;
        Ok(WeakCost { kind: CostKind::Martingale(c), rows, cols, lower_bound })
    }

    pub fn marton(rows: Arc<GroundSet>, cols: Arc<GroundSet>, theta: Theta) -> Result<Self> {
        if rows.dim() != cols.dim() {
            return Err(WoetError::Validation("Marton cost needs grounds of equal dimension".into()));
        }
        if theta == Theta::Absolute && rows.dim() != 1 {
            return Err(WoetError::Validation("absolute-value theta is limited to 1-D grounds".into()));
        }
        Ok(WeakCost { kind: CostKind::Marton(theta), rows, cols, lower_bound: 0.0 })
    }

    /// Builds the matrix `c_ij = f(x_i, y_j)` from a pairwise function.
    pub fn pairwise_matrix(
        rows: &GroundSet,
        cols: &GroundSet,
        f: impl Fn(&[f64], &[f64]) -> f64,
    ) -> Vec<f64> {
        let mut c = Vec::with_capacity(rows.len() * cols.len());
        for i in 0..rows.len() {
            for j in 0..cols.len() {
                c.push(f(rows.point(i), cols.point(j)));
            }
        }
        c
    }

    pub fn kind(&self) -> &CostKind {
        &self.kind
    }

    pub fn rows(&self) -> &Arc<GroundSet> {
        &self.rows
    }

    pub fn cols(&self) -> &Arc<GroundSet> {
        &self.cols
    }

    /// Largest known constant below `C`.
    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            CostKind::Linear(_) => "linear",
            CostKind::Martingale(_) => "martingale",
            CostKind::Marton(Theta::Quadratic) => "marton_quadratic",
            CostKind::Marton(Theta::Absolute) => "marton_absolute",
        }
    }

    /// Pairwise matrix entry for linear and martingale costs.
    pub fn pair_cost(&self, i: usize, j: usize) -> Option<f64> {
        match &self.kind {
            CostKind::Linear(c) | CostKind::Martingale(c) => Some(c[i * self.cols.len() + j]),
            CostKind::Marton(_) => None,
        }
    }

    /// `true` when every pair is admissible at finite cost (a separable upper
    /// bound `C(x, p) <= c1(x) + p(c2)` exists).
    pub fn has_separable_bound(&self) -> bool {
        match &self.kind {
            CostKind::Linear(c) => c.iter().all(|v| v.is_finite()),
            CostKind::Martingale(_) => false,
            CostKind::Marton(_) => true,
        }
    }

    fn mean_tol(&self) -> f64 {
        MEAN_TOL * self.cols.spread()
    }

    fn check_row(&self, i: usize) -> Result<()> {
        if i >= self.rows.len() {
            return Err(WoetError::ShapeMismatch(format!("row index {i} out of range")));
        }
        Ok(())
    }

    fn check_len(&self, v: &[f64], what: &str) -> Result<()> {
        if v.len() != self.cols.len() {
            return Err(WoetError::ShapeMismatch(format!(
                "{what} has length {}, expected {}",
                v.len(),
                self.cols.len()
            )));
        }
        Ok(())
    }

    /// `C(x_i, p)` for a probability vector `p` over the columns.
    pub fn eval_c(&self, i: usize, p: &[f64]) -> Result<ExtReal> {
        self.check_row(i)?;
        self.check_len(p, "probability vector")?;
        let total: f64 = p.iter().sum();
        if p.iter().any(|v| !(*v >= 0.0)) || (total - 1.0).abs() > PROBABILITY_TOL {
            return Err(WoetError::NotAProbability(total));
        }
        Ok(self.perspective_unchecked(i, p, 1.0))
    }

    /// `m · C(x_i, row/m)` with `m = Σ row`; zero for a null row.
    pub fn row_perspective(&self, i: usize, row: &[f64]) -> Result<ExtReal> {
        self.check_row(i)?;
        self.check_len(row, "row")?;
        if row.iter().any(|v| !(*v >= 0.0)) {
            return Err(WoetError::Validation("row masses must be nonnegative".into()));
        }
        let m: f64 = row.iter().sum();
        if m <= ZERO_MASS {
            return Ok(0.0);
        }
        Ok(self.perspective_unchecked(i, row, m))
    }

    /// Shared evaluation of `m · C(x_i, row/m)` where `m = Σ row > 0`.
    fn perspective_unchecked(&self, i: usize, row: &[f64], m: f64) -> ExtReal {
        let n2 = self.cols.len();
        match &self.kind {
            CostKind::Linear(c) => {
                row.iter().zip(&c[i * n2..(i + 1) * n2]).map(|(&g, &cij)| mass_times(g, cij)).sum()
            }
            CostKind::Martingale(c) => {
                let x = self.rows.coord(i);
                let drift: f64 =
                    row.iter().enumerate().map(|(j, &g)| g * (self.cols.coord(j) - x)).sum();
                if drift.abs() > self.mean_tol() * m {
                    return f64::INFINITY;
                }
                row.iter().zip(&c[i * n2..(i + 1) * n2]).map(|(&g, &cij)| mass_times(g, cij)).sum()
            }
            CostKind::Marton(theta) => {
                let x = self.rows.point(i);
                let d = x.len();
                let mut z = vec![0.0; d];
                for (k, zk) in z.iter_mut().enumerate() {
                    let mean: f64 =
                        row.iter().enumerate().map(|(j, &g)| g * self.cols.point(j)[k]).sum::<f64>()
                            / m;
                    *zk = x[k] - mean;
                }
                m * theta.eval(&z)
            }
        }
    }

    /// `R_C φ(x_i) = inf_p {C(x_i, p) + Σ_j p_j φ_j}` for every row.
    ///
    /// Entries of `φ` may be `+∞`, which removes that column from the
    /// infimum.
    pub fn rc_transform(&self, phi: &[f64]) -> Result<Vec<ExtReal>> {
        self.check_len(phi, "potential")?;
        if phi.iter().any(|v| v.is_nan()) {
            return Err(WoetError::Validation("potential contains NaN".into()));
        }
        let n1 = self.rows.len();
        let n2 = self.cols.len();
        match &self.kind {
            CostKind::Linear(c) => Ok((0..n1)
                .map(|i| ext_min((0..n2).map(|j| add_costs(c[i * n2 + j], phi[j]))))
                .collect()),
            CostKind::Martingale(c) => {
                let xs: Vec<f64> = (0..n2).map(|j| self.cols.coord(j)).collect();
                let order = sorted_order(&xs);
                let sx: Vec<f64> = order.iter().map(|&j| xs[j]).collect();
                (0..n1)
                    .map(|i| {
                        let ys: Vec<f64> =
                            order.iter().map(|&j| add_costs(c[i * n2 + j], phi[j])).collect();
                        envelope_at(&sx, &ys, self.rows.coord(i))
                    })
                    .collect()
            }
            CostKind::Marton(theta) => {
                if self.cols.dim() != 1 {
                    return Err(WoetError::Unsupported(
                        "R_C transform of Marton costs is implemented for 1-D grounds".into(),
                    ));
                }
                let xs: Vec<f64> = (0..n2).map(|j| self.cols.coord(j)).collect();
                let order = sorted_order(&xs);
                let sx: Vec<f64> = order.iter().map(|&j| xs[j]).collect();
                let ys: Vec<f64> = order.iter().map(|&j| phi[j]).collect();
                if ys.iter().any(|v| *v == f64::NEG_INFINITY) {
                    return Ok(vec![f64::NEG_INFINITY; n1]);
                }
                let env = match convex_envelope_1d(&sx, &ys) {
                    Ok(env) => env,
                    Err(WoetError::EmptyFinitePart) => return Ok(vec![f64::INFINITY; n1]),
                    Err(e) => return Err(e),
                };
                Ok((0..n1).map(|i| marton_inf(&env, *theta, self.rows.coord(i))).collect())
            }
        }
    }
}

/// `c + φ` with `+∞` absorbing.
fn add_costs(c: f64, phi: f64) -> f64 {
    if c == f64::INFINITY || phi == f64::INFINITY {
        f64::INFINITY
    } else {
        c + phi
    }
}

fn sorted_order(xs: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    order
}

/// Lower convex envelope of `(xs, ys)` evaluated at `x`, `+∞` outside the
/// hull of the finite points.
fn envelope_at(xs: &[f64], ys: &[f64], x: f64) -> Result<ExtReal> {
    if ys.iter().any(|v| *v == f64::NEG_INFINITY) {
        let (lo, hi) = finite_span(xs, ys);
        return Ok(if x >= lo && x <= hi { f64::NEG_INFINITY } else { f64::INFINITY });
    }
    match convex_envelope_1d(xs, ys) {
        Ok(env) => Ok(env.eval(x)),
        Err(WoetError::EmptyFinitePart) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

fn finite_span(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    xs.iter().zip(ys).filter(|(_, y)| **y < f64::INFINITY).fold(
        (f64::INFINITY, f64::NEG_INFINITY),
        |(lo, hi), (&x, _)| (lo.min(x), hi.max(x)),
    )
}

/// `min_{z ∈ [lo, hi]} env(z) + θ(x - z)`: the infimum is attained at a
/// vertex, at `x` itself, or (quadratic θ) at a per-segment stationary point.
fn marton_inf(env: &EnvelopePiece, theta: Theta, x: f64) -> f64 {
    let value = |z: f64| env.eval(z) + theta.eval(&[x - z]);
    let mut best = env.breakpoints().iter().map(|&z| value(z)).fold(f64::INFINITY, f64::min);
    best = best.min(value(x.clamp(env.lo(), env.hi())));
    if theta == Theta::Quadratic {
        let bx = env.breakpoints();
        for (k, s) in env.slopes().into_iter().enumerate() {
            let z = (x - s / 2.0).clamp(bx[k], bx[k + 1]);
            best = best.min(env.eval_segment(k, z) + (x - z) * (x - z));
        }
    }
    best
}
