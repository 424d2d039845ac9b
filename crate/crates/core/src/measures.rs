//! Finite nonnegative measures on point clouds and couplings between them.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WoetError};

/// Row masses at or below this value are treated as exact zeros.
pub const ZERO_MASS: f64 = 1e-15;

/// Ordered, finite set of distinct points in `ℝ^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundSet {
    dim: usize,
    coords: Vec<f64>,
}

impl GroundSet {
    /// Builds a ground set from a list of points of common dimension.
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points
            .first()
            .map(|p| p.len())
            .ok_or_else(|| WoetError::Validation("ground set is empty".into()))?;
        if dim == 0 {
            return Err(WoetError::Validation("points must have dimension >= 1".into()));
        }
        let mut coords = Vec::with_capacity(dim * points.len());
        for (k, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(WoetError::Validation(format!(
                    "points[{k}] has dimension {} (expected {dim})",
                    p.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(WoetError::Validation(format!("points[{k}] is not finite")));
            }
            coords.extend_from_slice(p);
        }
        let g = GroundSet { dim, coords };
        for a in 0..g.len() {
            for b in 0..a {
                if g.point(a) == g.point(b) {
                    return Err(WoetError::Validation(format!(
                        "points[{a}] duplicates points[{b}]"
                    )));
                }
            }
        }
        Ok(g)
    }

    /// One-dimensional ground set from scalar locations.
    pub fn line(xs: &[f64]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| vec![x]).collect())
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// First coordinate of point `i` (the location itself for 1-D sets).
    pub fn coord(&self, i: usize) -> f64 {
        self.coords[i * self.dim]
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i).to_vec()).collect()
    }

    /// `max - min` of the first coordinate; zero for singletons.
    pub fn spread(&self) -> f64 {
        let (lo, hi) = (0..self.len()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
            let x = self.coord(i);
            (lo.min(x), hi.max(x))
        });
        hi - lo
    }
}

/// Two grounds are compatible when they are the same allocation or list the
/// same points in the same order. No reindexing is ever attempted.
pub fn same_ground(a: &Arc<GroundSet>, b: &Arc<GroundSet>) -> bool {
    Arc::ptr_eq(a, b) || a.as_ref() == b.as_ref()
}

/// Nonnegative weights on the points of a ground set.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    ground: Arc<GroundSet>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(ground: Arc<GroundSet>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != ground.len() {
            return Err(WoetError::ShapeMismatch(format!(
                "{} weights for {} points",
                weights.len(),
                ground.len()
            )));
        }
        for (k, &w) in weights.iter().enumerate() {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(WoetError::Validation(format!("weights[{k}] < 0 or not finite ({w})")));
            }
        }
        Ok(DiscreteMeasure { ground, weights })
    }

    pub fn zero(ground: Arc<GroundSet>) -> Self {
        let n = ground.len();
        DiscreteMeasure { ground, weights: vec![0.0; n] }
    }

    pub fn ground(&self) -> &Arc<GroundSet> {
        &self.ground
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Total mass `|μ|`.
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Multiplies every weight by `lambda >= 0`.
    pub fn scale(&self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(WoetError::NegativeScale(lambda));
        }
        Ok(DiscreteMeasure {
            ground: Arc::clone(&self.ground),
            weights: self.weights.iter().map(|w| w * lambda).collect(),
        })
    }

    pub(crate) fn check_same_ground(&self, other: &DiscreteMeasure) -> Result<()> {
        if same_ground(&self.ground, &other.ground) {
            Ok(())
        } else {
            Err(WoetError::GroundMismatch)
        }
    }
}

/// Lebesgue decomposition `γ = σ·μ + γ^⊥` of one discrete measure relative
/// to another on the same ground.
#[derive(Debug, Clone, PartialEq)]
pub struct LebesgueDecomposition {
    /// `Some(γ_i/μ_i)` where `μ_i > 0`, `None` elsewhere.
    pub density: Vec<Option<f64>>,
    /// Per-point absolutely continuous part: `γ_i` where `μ_i > 0`, else 0.
    pub absolutely_continuous: Vec<f64>,
    /// Per-point singular part: `γ_i` where `μ_i = 0`, else 0.
    pub singular: Vec<f64>,
    /// Total singular mass `γ^⊥(X)`.
    pub singular_mass: f64,
}

impl LebesgueDecomposition {
    /// Rebuilds `γ` bit for bit.
    pub fn reconstruct(&self) -> Vec<f64> {
        self.absolutely_continuous.iter().zip(&self.singular).map(|(a, s)| a + s).collect()
    }
}

pub fn lebesgue_decompose(
    gamma: &DiscreteMeasure,
    mu: &DiscreteMeasure,
) -> Result<LebesgueDecomposition> {
    gamma.check_same_ground(mu)?;
    let mut density = Vec::with_capacity(mu.len());
    let mut absolutely_continuous = Vec::with_capacity(mu.len());
    let mut singular = Vec::with_capacity(mu.len());
    for (&g, &m) in gamma.weights().iter().zip(mu.weights()) {
        if m > 0.0 {
            density.push(Some(g / m));
            absolutely_continuous.push(g);
            singular.push(0.0);
        } else {
            density.push(None);
            absolutely_continuous.push(0.0);
            singular.push(g);
        }
    }
    let singular_mass = singular.iter().sum();
    Ok(LebesgueDecomposition { density, absolutely_continuous, singular, singular_mass })
}

/// Nonnegative mass matrix over `rows × cols`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    rows: Arc<GroundSet>,
    cols: Arc<GroundSet>,
    mass: Vec<f64>,
}

impl Coupling {
    pub fn new(rows: Arc<GroundSet>, cols: Arc<GroundSet>, mass: Vec<f64>) -> Result<Self> {
        let (n1, n2) = (rows.len(), cols.len());
        if mass.len() != n1 * n2 {
            return Err(WoetError::ShapeMismatch(format!(
                "coupling has {} entries, expected {n1}x{n2}",
                mass.len()
            )));
        }
        if let Some(k) = mass.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(WoetError::Validation(format!(
                "coupling entry ({}, {}) is negative or not finite",
                k / n2,
                k % n2
            )));
        }
        Ok(Coupling { rows, cols, mass })
    }

    pub fn from_rows(
        rows: Arc<GroundSet>,
        cols: Arc<GroundSet>,
        matrix: &[Vec<f64>],
    ) -> Result<Self> {
        if matrix.len() != rows.len() || matrix.iter().any(|r| r.len() != cols.len()) {
            return Err(WoetError::ShapeMismatch("matrix shape does not match grounds".into()));
        }
        Self::new(rows, cols, matrix.concat())
    }

    /// The null coupling.
    pub fn zero(rows: Arc<GroundSet>, cols: Arc<GroundSet>) -> Self {
        let n = rows.len() * cols.len();
        Coupling { rows, cols, mass: vec![0.0; n] }
    }

    pub fn rows(&self) -> &Arc<GroundSet> {
        &self.rows
    }

    pub fn cols(&self) -> &Arc<GroundSet> {
        &self.cols
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mass[i * self.cols.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n2 = self.cols.len();
        &self.mass[i * n2..(i + 1) * n2]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.mass
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows()).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn row_mass(&self, i: usize) -> f64 {
        self.row(i).iter().sum()
    }

    /// First marginal (row sums) and second marginal (column sums).
    pub fn marginals(&self) -> (DiscreteMeasure, DiscreteMeasure) {
        let n2 = self.n_cols();
        let first: Vec<f64> = (0..self.n_rows()).map(|i| self.row_mass(i)).collect();
        let mut second = vec![0.0; n2];
        for i in 0..self.n_rows() {
            for (s, v) in second.iter_mut().zip(self.row(i)) {
                *s += v;
            }
        }
        (
            DiscreteMeasure { ground: Arc::clone(&self.rows), weights: first },
            DiscreteMeasure { ground: Arc::clone(&self.cols), weights: second },
        )
    }

    /// Conditional distribution of row `i`: `γ_{i·} / m_i`.
    pub fn disintegrate(&self, i: usize) -> Result<Vec<f64>> {
        let m = self.row_mass(i);
        if m <= ZERO_MASS {
            return Err(WoetError::ZeroMassRow(i));
        }
        Ok(self.row(i).iter().map(|v| v / m).collect())
    }

    /// Multiplies every entry by `lambda >= 0`.
    pub fn scale(&self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(WoetError::NegativeScale(lambda));
        }
        Ok(Coupling {
            rows: Arc::clone(&self.rows),
            cols: Arc::clone(&self.cols),
            mass: self.mass.iter().map(|v| v * lambda).collect(),
        })
    }
}

/// Free-function form of [`Coupling::marginals`].
pub fn marginals(coupling: &Coupling) -> (DiscreteMeasure, DiscreteMeasure) {
    coupling.marginals()
}

/// Free-function form of [`Coupling::disintegrate`].
pub fn disintegrate(coupling: &Coupling, row: usize) -> Result<Vec<f64>> {
    coupling.disintegrate(row)
}

/// Free-function form of [`DiscreteMeasure::scale`].
pub fn scale(mu: &DiscreteMeasure, lambda: f64) -> Result<DiscreteMeasure> {
    mu.scale(lambda)
}

/// Lifted space point `y = (x, r)` with `x` an index into a ground set and
/// `r >= 0` a radial coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiftedPoint {
    pub x: usize,
    pub r: f64,
}
