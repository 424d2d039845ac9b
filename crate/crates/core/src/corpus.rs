//! Twenty small fixed instances covering every entropy and cost kind.
//!
//! Masses on hard-constrained sides are multiples of the oracle step, so the
//! lattice searched by [`oracle_solve`](crate::oracle_solve) contains
//! feasible points.

use std::sync::Arc;

use crate::cost::{Theta, WeakCost};
use crate::entropy::EntropyFunction;
use crate::measures::{DiscreteMeasure, GroundSet};
use crate::solver::ProblemSpec;

const INF: f64 = f64::INFINITY;

#[derive(Debug, Clone)]
pub struct CorpusInstance {
    pub name: &'static str,
    pub spec: ProblemSpec,
    /// Lattice step handed to the oracle.
    pub oracle_step: f64,
    /// Upper bound on a single cell handed to the oracle.
    pub oracle_mass_max: f64,
}

impl CorpusInstance {
    /// Both entropies are `Indicator1` and the cost is linear.
    pub fn is_classical_ot(&self) -> bool {
        self.spec.f1 == EntropyFunction::Indicator1
            && self.spec.f2 == EntropyFunction::Indicator1
            && self.spec.cost.name() == "linear"
    }
}

fn line(xs: &[f64]) -> Arc<GroundSet> {
    Arc::new(GroundSet::line(xs).expect("corpus ground"))
}

fn measure(x: &Arc<GroundSet>, w: &[f64]) -> DiscreteMeasure {
    DiscreteMeasure::new(Arc::clone(x), w.to_vec()).expect("corpus measure")
}

fn range(a: f64, b: f64) -> EntropyFunction {
    EntropyFunction::range(a, b).expect("corpus range")
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    (a[0] - b[0]).powi(2)
}

fn abs(a: &[f64], b: &[f64]) -> f64 {
    (a[0] - b[0]).abs()
}

enum Kind {
    Linear(Vec<f64>),
    Martingale(Vec<f64>),
    Marton(Theta),
}

#[allow(clippy::too_many_arguments)]
fn instance(
    name: &'static str,
    rows: &[f64],
    cols: &[f64],
    w1: &[f64],
    w2: &[f64],
    f1: EntropyFunction,
    f2: EntropyFunction,
    kind: Kind,
    oracle_step: f64,
    oracle_mass_max: f64,
) -> CorpusInstance {
    let (x, y) = (line(rows), line(cols));
    let cost = match kind {
        Kind::Linear(c) => WeakCost::linear(x.clone(), y.clone(), c),
        Kind::Martingale(c) => WeakCost::martingale(x.clone(), y.clone(), c),
        Kind::Marton(t) => WeakCost::marton(x.clone(), y.clone(), t),
    }
    .expect("corpus cost");
    let spec = ProblemSpec::new(measure(&x, w1), measure(&y, w2), f1, f2, cost).expect("corpus spec");
    CorpusInstance { name, spec, oracle_step, oracle_mass_max }
}

fn pairwise(rows: &[f64], cols: &[f64], f: fn(&[f64], &[f64]) -> f64) -> Vec<f64> {
    WeakCost::pairwise_matrix(&line(rows), &line(cols), f)
}

/// The fixed corpus.
pub fn corpus() -> Vec<CorpusInstance> {
    use EntropyFunction::{ChiSquared as Chi, Indicator1 as Ind, Kl};
    let p2 = [0.0, 1.0];
    let p3 = [0.0, 1.0, 2.0];
    vec![
        instance("kl_point", &[0.0], &[0.0], &[1.0], &[4.0], Kl, Kl, Kind::Linear(vec![0.0]), 0.125, 9.0),
        instance(
            "kl_linear_2x2",
            &p2,
            &p2,
            &[1.0, 0.5],
            &[0.5, 1.5],
            Kl,
            Kl,
            Kind::Linear(pairwise(&p2, &p2, sq)),
            0.125,
            4.0,
        ),
        instance(
            "kl_linear_3x3",
            &p3,
            &p3,
            &[1.0, 0.5, 0.25],
            &[0.25, 0.75, 1.0],
            Kl,
            Kl,
            Kind::Linear(pairwise(&p3, &p3, abs)),
            0.125,
            2.0,
        ),
        instance(
            "ot_2x2",
            &p2,
            &p2,
            &[0.5, 0.5],
            &[0.5, 0.5],
            Ind,
            Ind,
            Kind::Linear(vec![0.0, 1.0, 1.0, 0.0]),
            0.25,
            1.0,
        ),
        instance(
            "ot_3x3",
            &p3,
            &p3,
            &[1.0, 0.5, 0.5],
            &[0.5, 1.0, 0.5],
            Ind,
            Ind,
            Kind::Linear(vec![0.3, 1.1, 2.0, 0.7, 0.2, 1.4, 1.9, 0.8, 0.1]),
            0.5,
            1.0,
        ),
        instance(
            "ot_3x3_forbidden",
            &p3,
            &p3,
            &[0.5, 1.0, 0.5],
            &[1.0, 0.5, 0.5],
            Ind,
            Ind,
            Kind::Linear(vec![0.0, 2.0, INF, 1.0, 0.5, 3.0, 2.0, 1.0, 0.2]),
            0.5,
            1.0,
        ),
        instance(
            "chi2_linear_2x2",
            &p2,
            &p2,
            &[1.0, 1.0],
            &[2.0, 0.5],
            Chi,
            Chi,
            Kind::Linear(pairwise(&p2, &p2, sq)),
            0.125,
            4.0,
        ),
        instance(
            "range_linear_2x2",
            &p2,
            &p2,
            &[1.0, 0.5],
            &[0.5, 1.0],
            range(0.5, 2.0),
            range(0.5, 2.0),
            Kind::Linear(vec![0.5, 0.25, 1.0, 0.75]),
            0.25,
            2.0,
        ),
        instance(
            "kl_ind_linear_2x3",
            &p2,
            &[0.0, 0.5, 1.0],
            &[1.0, 1.0],
            &[0.5, 0.5, 0.5],
            Kl,
            Ind,
            Kind::Linear(pairwise(&p2, &[0.0, 0.5, 1.0], sq)),
            0.125,
            1.0,
        ),
        instance(
            "range_kl_linear_3x2",
            &p3,
            &[0.5, 1.5],
            &[0.5, 0.5, 0.5],
            &[1.0, 1.0],
            range(0.5, 1.5),
            Kl,
            Kind::Linear(pairwise(&p3, &[0.5, 1.5], sq)),
            0.125,
            2.0,
        ),
        instance(
            "chi2_kl_linear_3x3",
            &p3,
            &p3,
            &[0.5, 1.0, 0.5],
            &[1.0, 0.5, 0.5],
            Chi,
            Kl,
            Kind::Linear(pairwise(&p3, &p3, abs)),
            0.125,
            2.0,
        ),
        instance(
            "moet_delta",
            &p3,
            &p3,
            &[0.0, 1.0, 0.0],
            &[0.5, 0.0, 0.5],
            Ind,
            Ind,
            Kind::Martingale(pairwise(&p3, &p3, sq)),
            0.5,
            1.0,
        ),
        instance(
            "moet_kl_ind",
            &p3,
            &p3,
            &[0.0, 2.0, 0.0],
            &[0.5, 0.0, 0.5],
            Kl,
            Ind,
            Kind::Martingale(vec![0.0; 9]),
            0.125,
            1.0,
        ),
        instance(
            "moet_kl_kl",
            &p3,
            &p3,
            &[0.25, 0.5, 0.25],
            &[0.5, 0.25, 0.5],
            Kl,
            Kl,
            Kind::Martingale(pairwise(&p3, &p3, abs)),
            0.125,
            2.0,
        ),
        instance(
            "moet_chi2_ind",
            &p3,
            &p3,
            &[0.5, 1.0, 0.5],
            &[1.0, 0.5, 1.0],
            Chi,
            Ind,
            Kind::Martingale(pairwise(&p3, &p3, sq)),
            0.5,
            1.0,
        ),
        instance(
            "moet_range_kl",
            &p3,
            &p3,
            &[0.5, 1.0, 0.5],
            &[0.5, 1.0, 0.5],
            range(0.5, 2.0),
            Kl,
            Kind::Martingale(pairwise(&p3, &p3, abs)),
            0.125,
            2.0,
        ),
        instance(
            "marton_kl_quad_2x2",
            &p2,
            &p2,
            &[1.0, 0.5],
            &[0.5, 1.0],
            Kl,
            Kl,
            Kind::Marton(Theta::Quadratic),
            0.125,
            4.0,
        ),
        instance(
            "marton_ot_quad_2x2",
            &p2,
            &p2,
            &[0.5, 0.5],
            &[0.5, 0.5],
            Ind,
            Ind,
            Kind::Marton(Theta::Quadratic),
            0.25,
            1.0,
        ),
        instance(
            "marton_chi2_abs_2x3",
            &p2,
            &[0.0, 0.5, 1.0],
            &[1.0, 1.0],
            &[0.5, 1.0, 0.5],
            Chi,
            Chi,
            Kind::Marton(Theta::Absolute),
            0.125,
            2.0,
        ),
        instance(
            "marton_range_ind_quad_3x2",
            &p3,
            &[0.0, 2.0],
            &[0.5, 0.5, 0.5],
            &[0.5, 1.0],
            range(0.5, 2.0),
            Ind,
            Kind::Marton(Theta::Quadratic),
            0.25,
            1.0,
        ),
    ]
}
