//! Problem files, reports and CSV export.
//!
//! Problem files are JSON documents tagged with `"schema": "woet/1"`:
//!
//! ```json
//! {
//!   "schema": "woet/1",
//!   "mode": "woet",
//!   "rows": [0, 1],
//!   "mu1": [0.5, 0.5],
//!   "mu2": [0.5, 0.5],
//!   "f1": {"kind": "indicator1"},
//!   "f2": {"kind": "indicator1"},
//!   "cost": {"kind": "linear", "matrix": [[0, 1], [1, 0]]}
//! }
//! ```
//!
//! `cols` defaults to `rows`; points may be scalars or coordinate arrays.
//! Non-finite numbers are written as the strings `"inf"`, `"-inf"` and
//! `"nan"`, both in problem files and in reports.

use std::fmt;
use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::cost::{Theta, WeakCost};
use crate::duality::{
    dual_ascent_rc, dual_value_lambda, dual_value_lambda_r, dual_value_rc, feasibility_lambda,
    DualForm, DualPair,
};
use crate::entropy::EntropyFunction;
use crate::error::{Result, WoetError};
use crate::martingale::{
    check_homogeneous_equivalence, dual_ascent_lambda_m, dual_value_lambda_m, solve_moet,
    triple_violation, DualTripleM, MartingaleSpec,
};
use crate::measures::{DiscreteMeasure, GroundSet};
use crate::solver::{
    c_monotonicity_check, check_coercivity, check_feasibility, solve, FeasibilityDiagnostics,
    ProblemSpec, SolveReport, SolverOptions, Status,
};

pub const SCHEMA: &str = "woet/1";

/// Extended real that serializes `±∞` and NaN as strings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Num, E> {
                Ok(Num(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Num, E> {
                parse_num(v).map(Num).ok_or_else(|| E::invalid_value(de::Unexpected::Str(v), &self))
            }
        }
        d.deserialize_any(V)
    }
}

fn parse_num(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "+inf" | "Infinity" => Some(f64::INFINITY),
        "-inf" | "-Infinity" => Some(f64::NEG_INFINITY),
        "nan" | "NaN" => Some(f64::NAN),
        t => t.parse().ok(),
    }
}

fn nums(v: &[f64]) -> Vec<Num> {
    v.iter().copied().map(Num).collect()
}

fn floats(v: &[Num]) -> Vec<f64> {
    v.iter().map(|n| n.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Woet,
    Moet,
    HomogeneousCheck,
    DualOnly,
    Feasibility,
    /// Solve, then run the C-monotonicity diagnostic at the optimum.
    Monotone,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Woet => "woet",
            Mode::Moet => "moet",
            Mode::HomogeneousCheck => "homogeneous-check",
            Mode::DualOnly => "dual-only",
            Mode::Feasibility => "feasibility",
            Mode::Monotone => "monotone",
        }
    }

    fn is_martingale(&self) -> bool {
        matches!(self, Mode::Moet | Mode::HomogeneousCheck)
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawPoint {
    Scalar(f64),
    Vector(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawCost {
    Linear {
        matrix: Option<Vec<Vec<Num>>>,
        pairwise: Option<Pairwise>,
    },
    Martingale {
        matrix: Option<Vec<Vec<Num>>>,
        pairwise: Option<Pairwise>,
    },
    Marton {
        theta: Theta,
    },
}

/// Generated pairwise costs.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Pairwise {
    /// `|x - y|²`
    SquaredDistance,
    /// `|x - y|`
    Distance,
    Zero,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
enum RawPotentials {
    Lambda { phi1: Vec<Num>, phi2: Vec<Num> },
    LambdaR { phi1: Vec<Num>, phi2: Vec<Num> },
    Rc { phi: Vec<Num> },
    Martingale { phi1: Vec<Num>, phi2: Vec<Num>, h: Vec<Num> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    schema: String,
    mode: Mode,
    rows: Vec<RawPoint>,
    cols: Option<Vec<RawPoint>>,
    mu1: Vec<Num>,
    mu2: Vec<Num>,
    f1: EntropyFunction,
    f2: EntropyFunction,
    cost: RawCost,
    #[serde(default)]
    options: SolverOptions,
    potentials: Option<RawPotentials>,
    exponents: Option<Vec<f64>>,
    trials: Option<usize>,
}

/// Supplied dual potentials for `dual-only` runs.
#[derive(Debug, Clone, PartialEq)]
pub enum Potentials {
    Pair(DualPair),
    Triple(DualTripleM),
}

/// A parsed and validated problem file.
#[derive(Debug, Clone)]
pub struct Problem {
    pub mode: Mode,
    pub spec: ProblemSpec,
    /// Present when the cost is a pairwise matrix on a common 1-D ground.
    pub martingale: Option<MartingaleSpec>,
    pub potentials: Option<Potentials>,
    /// Exponents `p` for `homogeneous-check`.
    pub exponents: Vec<f64>,
    /// Trials for the monotonicity diagnostic.
    pub trials: usize,
}

fn validation(msg: impl Into<String>) -> WoetError {
    WoetError::Validation(msg.into())
}

fn ground(points: Vec<RawPoint>, field: &str) -> Result<GroundSet> {
    let pts: Vec<Vec<f64>> = points
        .into_iter()
        .map(|p| match p {
            RawPoint::Scalar(x) => vec![x],
            RawPoint::Vector(v) => v,
        })
        .collect();
    GroundSet::new(pts).map_err(|e| match e {
        WoetError::Validation(m) => validation(format!("{field}: {m}")),
        other => other,
    })
}

fn measure(g: &Arc<GroundSet>, w: &[Num], field: &str) -> Result<DiscreteMeasure> {
    if w.len() != g.len() {
        return Err(validation(format!("{field} has {} weights for {} points", w.len(), g.len())));
    }
    for (k, v) in w.iter().enumerate() {
        if !(v.0 >= 0.0) || !v.0.is_finite() {
            return Err(validation(format!("{field}.weights[{k}] < 0 or not finite")));
        }
    }
    DiscreteMeasure::new(Arc::clone(g), floats(w))
}

fn matrix(
    m: Option<Vec<Vec<Num>>>,
    pairwise: Option<Pairwise>,
    rows: &GroundSet,
    cols: &GroundSet,
) -> Result<Vec<f64>> {
    match (m, pairwise) {
        (Some(m), None) => {
            if m.len() != rows.len() || m.iter().any(|r| r.len() != cols.len()) {
                return Err(validation(format!(
                    "cost.matrix must be {}x{}",
                    rows.len(),
                    cols.len()
                )));
            }
            Ok(m.iter().flat_map(|r| floats(r)).collect())
        }
        (None, Some(p)) => Ok(WeakCost::pairwise_matrix(rows, cols, |a, b| {
            let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            match p {
                Pairwise::SquaredDistance => d2,
                Pairwise::Distance => d2.sqrt(),
                Pairwise::Zero => 0.0,
            }
        })),
        _ => Err(validation("cost needs exactly one of `matrix` and `pairwise`")),
    }
}

/// Parses and validates a problem document.
pub fn parse_problem(text: &str) -> Result<Problem> {
    let raw: RawProblem = serde_json::from_str(text).map_err(|e| WoetError::Parse {
        context: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    if raw.schema != SCHEMA {
        return Err(validation(format!("schema must be \"{SCHEMA}\", got \"{}\"", raw.schema)));
    }
    raw.options.validate()?;
    let rows = Arc::new(ground(raw.rows, "rows")?);
    let cols = match raw.cols {
        Some(c) => {
            let g = ground(c, "cols")?;
            if g == *rows {
                Arc::clone(&rows)
            } else {
                Arc::new(g)
            }
        }
        None => Arc::clone(&rows),
    };
    let mu1 = measure(&rows, &raw.mu1, "mu1")?;
    let mu2 = measure(&cols, &raw.mu2, "mu2")?;
    if raw.mode.is_martingale() {
        if rows.dim() != 1 {
            return Err(validation(format!("{} mode needs 1-D points", raw.mode.as_str())));
        }
        if !Arc::ptr_eq(&rows, &cols) {
            return Err(validation(format!("{} mode needs rows = cols", raw.mode.as_str())));
        }
    }
    let (cost, pair_matrix) = match raw.cost {
        RawCost::Linear { matrix: m, pairwise } => {
            let c = matrix(m, pairwise, &rows, &cols)?;
            if raw.mode.is_martingale() {
                (WeakCost::martingale(rows.clone(), cols.clone(), c.clone())?, Some(c))
            } else {
                (WeakCost::linear(rows.clone(), cols.clone(), c.clone())?, Some(c))
            }
        }
        RawCost::Martingale { matrix: m, pairwise } => {
            let c = matrix(m, pairwise, &rows, &cols)?;
            (WeakCost::martingale(rows.clone(), cols.clone(), c.clone())?, Some(c))
        }
        RawCost::Marton { theta } => {
            if raw.mode.is_martingale() {
                return Err(validation("martingale modes need a pairwise cost matrix"));
            }
            (WeakCost::marton(rows.clone(), cols.clone(), theta)?, None)
        }
    };
    let spec = ProblemSpec::new(mu1.clone(), mu2.clone(), raw.f1, raw.f2, cost)?
        .with_options(raw.options.clone())?;
    let martingale = match pair_matrix {
        Some(c) if Arc::ptr_eq(&rows, &cols) && rows.dim() == 1 => {
            Some(MartingaleSpec::new(mu1, mu2, raw.f1, raw.f2, c)?.with_options(raw.options)?)
        }
        _ => None,
    };
    if raw.mode.is_martingale() && martingale.is_none() {
        return Err(validation("martingale modes need a pairwise cost matrix"));
    }
    let potentials = match raw.potentials {
        None => None,
        Some(RawPotentials::Lambda { phi1, phi2 }) => {
            Some(Potentials::Pair(DualPair::new(floats(&phi1), floats(&phi2), DualForm::Lambda)))
        }
        Some(RawPotentials::LambdaR { phi1, phi2 }) => {
            Some(Potentials::Pair(DualPair::new(floats(&phi1), floats(&phi2), DualForm::LambdaR)))
        }
        Some(RawPotentials::Rc { phi }) => {
            let phi2: Vec<f64> = phi.iter().map(|v| -v.0).collect();
            Some(Potentials::Pair(DualPair::new(Vec::new(), phi2, DualForm::RcForm)))
        }
        Some(RawPotentials::Martingale { phi1, phi2, h }) => {
            if martingale.is_none() {
                return Err(validation("martingale potentials need a pairwise cost on a 1-D ground"));
            }
            Some(Potentials::Triple(DualTripleM { phi1: floats(&phi1), phi2: floats(&phi2), h: floats(&h) }))
        }
    };
    let exponents = raw.exponents.unwrap_or_else(|| vec![1.0, 2.0]);
    if exponents.iter().any(|p| !(*p > 0.0)) {
        return Err(validation("exponents must be positive"));
    }
    Ok(Problem {
        mode: raw.mode,
        spec,
        martingale,
        potentials,
        exponents,
        trials: raw.trials.unwrap_or(1000),
    })
}

pub fn parse_problem_file(path: &Path) -> Result<Problem> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| WoetError::Io(format!("{}: {e}", path.display())))?;
    parse_problem(&text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilitySummary {
    pub k_interval: Option<(Num, Num)>,
    pub k_nonempty: bool,
    pub finite_at_zero: bool,
    pub separable_bound: bool,
    pub guaranteed: bool,
    pub reason: Option<String>,
}

impl From<&FeasibilityDiagnostics> for FeasibilitySummary {
    fn from(d: &FeasibilityDiagnostics) -> Self {
        FeasibilitySummary {
            k_interval: d.k_interval.map(|(a, b)| (Num(a), Num(b))),
            k_nonempty: d.k_nonempty,
            finite_at_zero: d.finite_at_zero,
            separable_bound: d.separable_bound,
            guaranteed: d.guaranteed,
            reason: d.reason.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneSummary {
    pub trials: usize,
    pub violations: usize,
    pub max_excess: Num,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousSummary {
    pub p: Num,
    pub moet_value: Num,
    pub functional_value: Num,
    pub lifted_value: Num,
    pub max_discrepancy: Num,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDiagnostics {
    pub feasibility: FeasibilitySummary,
    pub superlinear: bool,
    pub coercive: bool,
    pub primal_iterations: usize,
    pub dual_iterations: usize,
    pub martingale_residual: Option<Num>,
    pub monotonicity: Option<MonotoneSummary>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportPotentials {
    /// Row potential (`R_C φ`, or `φ1` of a supplied or recovered pair).
    pub phi1: Vec<Num>,
    /// Column potential (`φ2`; for the `R_C` form this is `-φ`).
    pub phi2: Vec<Num>,
    pub h: Option<Vec<Num>>,
}

/// Report written by every mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema: String,
    pub mode: Mode,
    pub status: Status,
    pub reason: Option<String>,
    pub primal_value: Option<Num>,
    pub dual_bound: Option<Num>,
    pub gap: Option<Num>,
    /// Value of supplied potentials (`dual-only`) or of the recovered
    /// martingale triple (`moet`).
    pub dual_value: Option<Num>,
    pub max_violation: Option<Num>,
    pub row_points: Vec<Vec<Num>>,
    pub col_points: Vec<Vec<Num>>,
    pub coupling: Option<Vec<Vec<Num>>>,
    pub potentials: Option<ReportPotentials>,
    pub homogeneous: Option<Vec<HomogeneousSummary>>,
    pub diagnostics: ReportDiagnostics,
    pub elapsed_ms: f64,
}

impl ReportFile {
    fn blank(problem: &Problem) -> Self {
        let spec = &problem.spec;
        let points = |g: &GroundSet| g.points().iter().map(|p| nums(p)).collect();
        let coercivity = check_coercivity(spec);
        ReportFile {
            schema: SCHEMA.into(),
            mode: problem.mode,
            status: Status::Feasible,
            reason: None,
            primal_value: None,
            dual_bound: None,
            gap: None,
            dual_value: None,
            max_violation: None,
            row_points: points(spec.rows()),
            col_points: points(spec.cols()),
            coupling: None,
            potentials: None,
            homogeneous: None,
            diagnostics: ReportDiagnostics {
                feasibility: (&check_feasibility(spec)).into(),
                superlinear: coercivity.superlinear,
                coercive: coercivity.holds,
                primal_iterations: 0,
                dual_iterations: 0,
                martingale_residual: None,
                monotonicity: None,
                notes: Vec::new(),
            },
            elapsed_ms: 0.0,
        }
    }

    fn infeasible(mut self, reason: String) -> Self {
        self.status = Status::Infeasible;
        self.reason = Some(reason);
        self
    }

    fn absorb(&mut self, r: &SolveReport) {
        self.status = r.status;
        self.primal_value = Some(Num(r.primal_value));
        self.dual_bound = r.dual_bound.map(Num);
        self.gap = r.gap.map(Num);
        self.coupling = Some(r.coupling.to_rows().iter().map(|row| nums(row)).collect());
        if let (Some(phi), Some(rc)) = (&r.dual_potential, &r.dual_rc) {
            let phi2: Vec<f64> = phi.iter().map(|v| -v).collect();
            self.potentials = Some(ReportPotentials { phi1: nums(rc), phi2: nums(&phi2), h: None });
        }
        let d = &r.diagnostics;
        self.diagnostics.primal_iterations = d.primal_iterations;
        self.diagnostics.dual_iterations = d.dual_iterations;
        self.diagnostics.martingale_residual = d.martingale_residual.map(Num);
        self.diagnostics.notes.extend(d.notes.iter().cloned());
    }
}

fn solved(problem: &Problem, report: &mut ReportFile, martingale: bool) -> Result<Option<SolveReport>> {
    let result = match (&problem.martingale, martingale) {
        (Some(m), true) => solve_moet(m),
        _ => solve(&problem.spec),
    };
    match result {
        Ok(r) => {
            report.absorb(&r);
            Ok(Some(r))
        }
        Err(WoetError::InfeasibleProblem(reason)) => {
            *report = report.clone().infeasible(reason);
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Runs `problem` in the given mode.
///
/// Infeasibility is reported through the status; other failures are
/// returned as errors.
pub fn run(problem: &Problem, mode: Mode) -> Result<ReportFile> {
    let start = Instant::now();
    let problem = Problem { mode, ..problem.clone() };
    let mut report = ReportFile::blank(&problem);
    let spec = &problem.spec;
    match mode {
        Mode::Woet => {
            solved(&problem, &mut report, false)?;
        }
        Mode::Monotone => {
            if let Some(r) = solved(&problem, &mut report, false)? {
                let m = c_monotonicity_check(spec, &r.coupling, problem.trials, spec.options.seed)?;
                report.diagnostics.monotonicity = Some(MonotoneSummary {
                    trials: m.trials,
                    violations: m.violations,
                    max_excess: Num(m.max_excess),
                });
            }
        }
        Mode::Moet => {
            let m = problem.martingale.as_ref().ok_or_else(|| validation("moet needs a martingale spec"))?;
            if solved(&problem, &mut report, true)?.is_some() {
                match dual_ascent_lambda_m(m) {
                    Ok((t, v)) => {
                        report.dual_value = Some(Num(v));
                        report.potentials = Some(ReportPotentials {
                            phi1: nums(&t.phi1),
                            phi2: nums(&t.phi2),
                            h: Some(nums(&t.h)),
                        });
                    }
                    Err(e) => report.diagnostics.notes.push(format!("martingale dual unavailable: {e}")),
                }
            }
        }
        Mode::HomogeneousCheck => {
            let m = problem.martingale.as_ref().ok_or_else(|| validation("needs a martingale spec"))?;
            if solved(&problem, &mut report, true)?.is_some() {
                let mut rows = Vec::new();
                for &p in &problem.exponents {
                    let h = check_homogeneous_equivalence(m, p)?;
                    rows.push(HomogeneousSummary {
                        p: Num(p),
                        moet_value: Num(h.moet_value),
                        functional_value: Num(h.functional_value),
                        lifted_value: Num(h.lifted_value),
                        max_discrepancy: Num(h.max_discrepancy),
                    });
                }
                report.homogeneous = Some(rows);
            }
        }
        Mode::DualOnly => match &problem.potentials {
            Some(Potentials::Pair(pair)) => {
                let (value, violation, phi1) = match pair.form {
                    DualForm::RcForm => {
                        let phi: Vec<f64> = pair.phi2.iter().map(|v| -v).collect();
                        let rc = spec.cost.rc_transform(&phi)?;
                        (dual_value_rc(spec, &phi), 0.0, rc)
                    }
                    DualForm::Lambda | DualForm::LambdaR => {
                        let v = if pair.form == DualForm::Lambda {
                            dual_value_lambda(spec, pair)
                        } else {
                            dual_value_lambda_r(spec, pair)
                        };
                        let viol = feasibility_lambda(spec, pair).map(|f| f.max_violation).unwrap_or(f64::NAN);
                        (v, viol, pair.phi1.clone())
                    }
                };
                report.max_violation = Some(Num(violation));
                report.potentials = Some(ReportPotentials { phi1: nums(&phi1), phi2: nums(&pair.phi2), h: None });
                match value {
                    Ok(v) => report.dual_value = Some(Num(v)),
                    Err(e @ (WoetError::InfeasiblePair(_) | WoetError::ShapeMismatch(_))) => {
                        report = report.infeasible(e.to_string());
                    }
                    Err(e) => return Err(e),
                }
            }
            Some(Potentials::Triple(t)) => {
                let m = problem.martingale.as_ref().expect("checked at parse time");
                report.max_violation = Some(Num(triple_violation(m, t)?));
                report.potentials =
                    Some(ReportPotentials { phi1: nums(&t.phi1), phi2: nums(&t.phi2), h: Some(nums(&t.h)) });
                match dual_value_lambda_m(m, t) {
                    Ok(v) => report.dual_value = Some(Num(v)),
                    Err(e @ WoetError::InfeasibleTriple(_)) => report = report.infeasible(e.to_string()),
                    Err(e) => return Err(e),
                }
            }
            None => {
                let a = dual_ascent_rc(spec, &spec.options)?;
                report.dual_bound = Some(Num(a.bound));
                report.diagnostics.dual_iterations = a.iterations;
                report.potentials = Some(ReportPotentials { phi1: nums(&a.rc), phi2: nums(&a.phi2), h: None });
                if let Some(flag) = a.flag {
                    report.diagnostics.notes.push(flag);
                }
                report.status = if a.bound == f64::NEG_INFINITY && !report.diagnostics.feasibility.k_nonempty {
                    Status::Infeasible
                } else if a.converged {
                    Status::Feasible
                } else {
                    Status::IterLimit
                };
            }
        },
        Mode::Feasibility => {
            let f = &report.diagnostics.feasibility;
            if !f.k_nonempty {
                let reason = f.reason.clone().unwrap_or_else(|| "K empty".into());
                report = report.infeasible(reason);
            } else {
                report.reason = f.reason.clone();
            }
        }
    }
    report.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

pub fn report_to_json(report: &ReportFile) -> String {
    serde_json::to_string_pretty(report).expect("reports serialize")
}

pub fn parse_report(text: &str) -> Result<ReportFile> {
    serde_json::from_str(text).map_err(|e| WoetError::Parse {
        context: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| WoetError::Io(e.to_string()))?;
    Ok(())
}

pub fn write_report(report: &ReportFile, path: &Path) -> Result<()> {
    write_atomic(path, &(report_to_json(report) + "\n"))
}

fn fmt_csv(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn label(p: &[Num]) -> String {
    p.iter().map(|v| fmt_csv(v.0)).collect::<Vec<_>>().join(";")
}

/// Coupling as CSV: a header with the column coordinates, then one line per
/// row with its coordinates, the row masses and (when present) the row
/// potential.
pub fn csv_string(report: &ReportFile) -> Result<String> {
    let phi1 = report.potentials.as_ref().map(|p| &p.phi1);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["x".to_string()];
    header.extend(report.col_points.iter().map(|p| label(p)));
    if phi1.is_some() {
        header.push("phi1".into());
    }
    w.write_record(&header).map_err(csv_error)?;
    if let Some(c) = &report.coupling {
        for (i, row) in c.iter().enumerate() {
            let mut line = vec![label(&report.row_points[i])];
            line.extend(row.iter().map(|v| fmt_csv(v.0)));
            if let Some(p) = phi1 {
                line.push(fmt_csv(p[i].0));
            }
            w.write_record(&line).map_err(csv_error)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| WoetError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

fn csv_error(e: csv::Error) -> WoetError {
    let context = e.position().map_or("csv".to_string(), |p| format!("line {}", p.line()));
    WoetError::Parse { context, message: e.to_string() }
}

pub fn emit_csv(report: &ReportFile, path: &Path) -> Result<()> {
    write_atomic(path, &csv_string(report)?)
}

/// Parsed CSV: header cells and numeric body (row labels dropped).
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn parse_csv(text: &str) -> Result<CsvTable> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        let row = rec
            .iter()
            .skip(1)
            .map(|c| {
                parse_num(c).ok_or_else(|| WoetError::Parse {
                    context: format!("line {line}"),
                    message: format!("not a number: {c}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}
