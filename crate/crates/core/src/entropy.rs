//! Admissible entropy functions and their transforms.
//!
//! For an entropy `F: [0, ∞) → [0, ∞]` the toolkit needs
//!
//! * the recession constant `F'_∞ = lim F(s)/s`,
//! * the concave conjugate `F°(φ) = inf_{s≥0} (φ s + F(s))`,
//! * the convex conjugate `F*(φ) = sup_{s≥0} (s φ - F(s)) = -F°(-φ)`,
//! * the reverse entropy `R(r) = r F(1/r)` (with `R(0) = F'_∞`) and its
//!   conjugate `R*`,
//! * a witness `s` with `R(s) + R*(ψ) = s ψ` when one exists.
//!
//! Every catalog member is superlinear, so `F'_∞ = +∞` throughout and
//! `F°` is finite on all of `ℝ`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WoetError};
use crate::extended::{in_interval, mass_times, ExtReal};
use crate::measures::{lebesgue_decompose, DiscreteMeasure};

/// How `F°` is represented inside the dual solver.
#[derive(Debug, Clone, PartialEq)]
pub enum ConjugateModel {
    /// `F°` is C¹ on `ℝ`; use [`Entropy::fcirc_derivatives`].
    Smooth,
    /// `F°(φ) = min_k slope_k · φ`.
    MinOfLinear(Vec<f64>),
}

/// Interface every entropy kind implements.
pub trait Entropy {
    /// `F(s)` for `s >= 0`.
    fn value(&self, s: f64) -> ExtReal;
    fn recession(&self) -> ExtReal;
    fn fcirc(&self, phi: f64) -> ExtReal;
    fn fstar(&self, phi: f64) -> ExtReal;
    /// `R(r)` for `r >= 0`.
    fn reverse(&self, r: f64) -> ExtReal;
    fn reverse_conjugate(&self, psi: f64) -> ExtReal;
    /// Positive `s` attaining `R(s) + R*(ψ) = s ψ`, if one exists.
    fn witness(&self, psi: f64) -> Option<f64>;
    /// Closed hull `[lo, hi]` of the effective domain `D(F)`.
    fn domain(&self) -> (f64, f64);
    /// `(F, F', F'')` at an interior point of the domain.
    fn derivatives(&self, s: f64) -> (f64, f64, f64);
    fn conjugate_model(&self) -> ConjugateModel;
    /// `(F°, F°', F°'')` at `φ`; only called for [`ConjugateModel::Smooth`].
    fn fcirc_derivatives(&self, phi: f64) -> (f64, f64, f64);
}

/// The entropy catalog.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EntropyFunction {
    /// `F(s) = s log s - s + 1`.
    #[serde(alias = "KL")]
    Kl,
    /// `F = I_{1}`: zero at `s = 1`, `+∞` elsewhere.
    Indicator1,
    /// `F = I_{[a, b]}` with `0 < a <= 1 <= b < ∞`.
    Range { a: f64, b: f64 },
    /// `F(s) = (s - 1)^2`.
    ChiSquared,
}

impl EntropyFunction {
    /// Validated constructor for the interval indicator.
    pub fn range(a: f64, b: f64) -> Result<Self> {
        let e = EntropyFunction::Range { a, b };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        if let EntropyFunction::Range { a, b } = *self {
            if !(a > 0.0 && a <= 1.0 && 1.0 <= b && b.is_finite()) {
                return Err(WoetError::Validation(format!(
                    "range entropy needs 0 < a <= 1 <= b < inf (got a = {a}, b = {b})"
                )));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> String {
        match self {
            EntropyFunction::Kl => "kl".into(),
            EntropyFunction::Indicator1 => "indicator1".into(),
            EntropyFunction::Range { a, b } => format!("range[{a},{b}]"),
            EntropyFunction::ChiSquared => "chi_squared".into(),
        }
    }

    /// `true` when `F'_∞ = +∞`.
    pub fn is_superlinear(&self) -> bool {
        self.recession() == f64::INFINITY
    }

    /// `F(0)`.
    pub fn at_zero(&self) -> ExtReal {
        self.value(0.0)
    }

    pub fn eval_f(&self, s: f64) -> Result<ExtReal> {
        if !(s >= 0.0) {
            return Err(WoetError::NegativeArgument(s));
        }
        Ok(self.value(s))
    }

    pub fn eval_fcirc(&self, phi: f64) -> ExtReal {
        self.fcirc(phi)
    }

    pub fn eval_fstar(&self, phi: f64) -> ExtReal {
        self.fstar(phi)
    }

    pub fn eval_r(&self, r: f64) -> Result<ExtReal> {
        if !(r >= 0.0) {
            return Err(WoetError::NegativeArgument(r));
        }
        Ok(self.reverse(r))
    }

    pub fn eval_rstar(&self, psi: f64) -> ExtReal {
        self.reverse_conjugate(psi)
    }

    /// Witness of `R(s) + R*(ψ) = s ψ`, defined for `ψ < F(0)`.
    pub fn bm_witness(&self, psi: f64) -> Result<f64> {
        let bound = self.at_zero();
        if !(psi < bound) {
            return Err(WoetError::PsiOutOfDomain { psi, bound });
        }
        self.witness(psi).ok_or(WoetError::PsiOutOfDomain { psi, bound })
    }
}

impl Entropy for EntropyFunction {
    fn value(&self, s: f64) -> ExtReal {
        match *self {
            EntropyFunction::Kl => {
                if s == 0.0 {
                    1.0
                } else if s == f64::INFINITY {
                    f64::INFINITY
                } else {
                    s * s.ln() - s + 1.0
                }
            }
            EntropyFunction::Indicator1 => indicator(in_interval(s, 1.0, 1.0)),
            EntropyFunction::Range { a, b } => indicator(in_interval(s, a, b)),
            EntropyFunction::ChiSquared => (s - 1.0) * (s - 1.0),
        }
    }

    fn recession(&self) -> ExtReal {
        f64::INFINITY
    }

    fn fcirc(&self, phi: f64) -> ExtReal {
        match *self {
            EntropyFunction::Kl => 1.0 - (-phi).exp(),
            EntropyFunction::Indicator1 => phi,
            EntropyFunction::Range { a, b } => (a * phi).min(b * phi),
            EntropyFunction::ChiSquared => {
                if phi <= 2.0 {
                    phi - phi * phi / 4.0
                } else {
                    1.0
                }
            }
        }
    }

    fn fstar(&self, phi: f64) -> ExtReal {
        match *self {
            EntropyFunction::Kl => phi.exp() - 1.0,
            EntropyFunction::Indicator1 => phi,
            EntropyFunction::Range { a, b } => (a * phi).max(b * phi),
            EntropyFunction::ChiSquared => {
                if phi >= -2.0 {
                    phi + phi * phi / 4.0
                } else {
                    -1.0
                }
            }
        }
    }

    fn reverse(&self, r: f64) -> ExtReal {
        if r == 0.0 {
            return self.recession();
        }
        match *self {
            EntropyFunction::Kl => r - 1.0 - r.ln(),
            EntropyFunction::Indicator1 => indicator(in_interval(r, 1.0, 1.0)),
            // r F(1/r) is finite exactly on [1/b, 1/a].
            EntropyFunction::Range { a, b } => indicator(in_interval(r, 1.0 / b, 1.0 / a)),
            EntropyFunction::ChiSquared => (r - 1.0) * (r - 1.0) / r,
        }
    }

    fn reverse_conjugate(&self, psi: f64) -> ExtReal {
        match *self {
            EntropyFunction::Kl => {
                if psi < 1.0 {
                    -(-psi).ln_1p()
                } else {
                    f64::INFINITY
                }
            }
            EntropyFunction::Indicator1 => psi,
            EntropyFunction::Range { a, b } => {
                if psi >= 0.0 {
                    psi / a
                } else {
                    psi / b
                }
            }
            EntropyFunction::ChiSquared => {
                if psi <= 1.0 {
                    2.0 - 2.0 * (1.0 - psi).sqrt()
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    fn witness(&self, psi: f64) -> Option<f64> {
        match *self {
            EntropyFunction::Kl => (psi < 1.0).then(|| 1.0 / (1.0 - psi)),
            EntropyFunction::Indicator1 => psi.is_finite().then_some(1.0),
            EntropyFunction::Range { a, b } => {
                psi.is_finite().then(|| if psi >= 0.0 { 1.0 / a } else { 1.0 / b })
            }
            EntropyFunction::ChiSquared => (psi < 1.0).then(|| 1.0 / (1.0 - psi).sqrt()),
        }
    }

    fn domain(&self) -> (f64, f64) {
        match *self {
            EntropyFunction::Kl | EntropyFunction::ChiSquared => (0.0, f64::INFINITY),
            EntropyFunction::Indicator1 => (1.0, 1.0),
            EntropyFunction::Range { a, b } => (a, b),
        }
    }

    fn derivatives(&self, s: f64) -> (f64, f64, f64) {
        match *self {
            EntropyFunction::Kl => {
                let l = s.ln();
                (s * l - s + 1.0, l, 1.0 / s)
            }
            EntropyFunction::Indicator1 | EntropyFunction::Range { .. } => (0.0, 0.0, 0.0),
            EntropyFunction::ChiSquared => ((s - 1.0) * (s - 1.0), 2.0 * (s - 1.0), 2.0),
        }
    }

    fn conjugate_model(&self) -> ConjugateModel {
        match *self {
            EntropyFunction::Kl | EntropyFunction::ChiSquared => ConjugateModel::Smooth,
            EntropyFunction::Indicator1 => ConjugateModel::MinOfLinear(vec![1.0]),
            EntropyFunction::Range { a, b } => ConjugateModel::MinOfLinear(vec![a, b]),
        }
    }

    fn fcirc_derivatives(&self, phi: f64) -> (f64, f64, f64) {
        match *self {
            EntropyFunction::Kl => {
                let e = (-phi).exp();
                (1.0 - e, e, -e)
            }
            EntropyFunction::ChiSquared => {
                if phi <= 2.0 {
                    (phi - phi * phi / 4.0, 1.0 - phi / 2.0, -0.5)
                } else {
                    (1.0, 0.0, 0.0)
                }
            }
            EntropyFunction::Indicator1 => (phi, 1.0, 0.0),
            EntropyFunction::Range { a, b } => {
                if phi >= 0.0 {
                    (a * phi, a, 0.0)
                } else {
                    (b * phi, b, 0.0)
                }
            }
        }
    }
}

fn indicator(inside: bool) -> f64 {
    if inside {
        0.0
    } else {
        f64::INFINITY
    }
}

/// `𝓕(γ|μ) = Σ_{μ>0} μ F(γ/μ) + F'_∞ γ^⊥(X)`.
pub fn divergence<E: Entropy + ?Sized>(
    e: &E,
    gamma: &DiscreteMeasure,
    mu: &DiscreteMeasure,
) -> Result<ExtReal> {
    let dec = lebesgue_decompose(gamma, mu)?;
    let mut total = 0.0;
    for (d, &m) in dec.density.iter().zip(mu.weights()) {
        if let Some(sigma) = d {
            total += mass_times(m, e.value(*sigma));
        }
    }
    total += mass_times(dec.singular_mass, e.recession());
    Ok(total)
}

/// `𝓡(μ|γ) = Σ_{γ>0} γ R(μ/γ) + R'_∞ μ^⊥(X)` with `R'_∞ = F(0)`.
pub fn reverse_functional<E: Entropy + ?Sized>(
    e: &E,
    mu: &DiscreteMeasure,
    gamma: &DiscreteMeasure,
) -> Result<ExtReal> {
    let dec = lebesgue_decompose(mu, gamma)?;
    let mut total = 0.0;
    for (d, &g) in dec.density.iter().zip(gamma.weights()) {
        if let Some(rho) = d {
            total += mass_times(g, e.reverse(*rho));
        }
    }
    total += mass_times(dec.singular_mass, e.value(0.0));
    Ok(total)
}
