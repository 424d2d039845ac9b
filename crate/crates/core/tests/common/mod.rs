//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls into the solver; closed forms are written out by hand
//! and minimizations are done by brute force.

#![allow(dead_code)]

use std::sync::Arc;

use woet_core::{DiscreteMeasure, EntropyFunction, GroundSet, Theta};

pub const ENTROPIES: [EntropyFunction; 4] = [
    EntropyFunction::Kl,
    EntropyFunction::Indicator1,
    EntropyFunction::Range { a: 0.5, b: 2.0 },
    EntropyFunction::ChiSquared,
];

pub fn line(xs: &[f64]) -> Arc<GroundSet> {
    Arc::new(GroundSet::line(xs).unwrap())
}

pub fn measure(x: &Arc<GroundSet>, w: &[f64]) -> DiscreteMeasure {
    DiscreteMeasure::new(x.clone(), w.to_vec()).unwrap()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// `F(s)` written out by hand.
pub fn f_value(e: &EntropyFunction, s: f64) -> f64 {
    match *e {
        EntropyFunction::Kl => {
            if s == 0.0 {
                1.0
            } else {
                s * s.ln() - s + 1.0
            }
        }
        EntropyFunction::Indicator1 => {
            if s == 1.0 {
                0.0
            } else {
                f64::INFINITY
            }
        }
        EntropyFunction::Range { a, b } => {
            if (a..=b).contains(&s) {
                0.0
            } else {
                f64::INFINITY
            }
        }
        EntropyFunction::ChiSquared => (s - 1.0).powi(2),
    }
}

/// `inf_s φ s + F(s)`.
pub fn fcirc_closed(e: &EntropyFunction, phi: f64) -> f64 {
    match *e {
        EntropyFunction::Kl => 1.0 - (-phi).exp(),
        EntropyFunction::Indicator1 => phi,
        EntropyFunction::Range { a, b } => (a * phi).min(b * phi),
        EntropyFunction::ChiSquared => {
            if phi < 2.0 {
                phi - phi * phi / 4.0
            } else {
                1.0
            }
        }
    }
}

/// A minimizer of `φ s + F(s)`.
pub fn fcirc_argmin(e: &EntropyFunction, phi: f64) -> f64 {
    match *e {
        EntropyFunction::Kl => (-phi).exp(),
        EntropyFunction::Indicator1 => 1.0,
        EntropyFunction::Range { a, b } => {
            if phi >= 0.0 {
                a
            } else {
                b
            }
        }
        EntropyFunction::ChiSquared => (1.0 - phi / 2.0).max(0.0),
    }
}

/// Witness of `R(s) + R*(ψ) = s ψ` for `ψ < F(0)`.
pub fn bm_closed(e: &EntropyFunction, psi: f64) -> f64 {
    match *e {
        EntropyFunction::Kl => 1.0 / (1.0 - psi),
        EntropyFunction::Indicator1 => 1.0,
        EntropyFunction::Range { a, b } => {
            if psi >= 0.0 {
                1.0 / a
            } else {
                1.0 / b
            }
        }
        EntropyFunction::ChiSquared => 1.0 / (1.0 - psi).sqrt(),
    }
}

/// `R*(ψ)` written out by hand (finite branch only).
pub fn rstar_closed(e: &EntropyFunction, psi: f64) -> f64 {
    match *e {
        EntropyFunction::Kl => -(1.0 - psi).ln(),
        EntropyFunction::Indicator1 => psi,
        EntropyFunction::Range { a, b } => (psi / a).max(psi / b),
        EntropyFunction::ChiSquared => 2.0 - 2.0 * (1.0 - psi).sqrt(),
    }
}

/// Golden-section minimum of a unimodal function on `[a, b]`.
pub fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        if b - a < 1e-15 * (1.0 + a.abs()) {
            break;
        }
    }
    let x = (a + b) / 2.0;
    (x, f(x))
}

/// `inf_s φ s + F(s)` by grid search on `[0, s_max]` plus refinement.
///
/// The domain endpoints `{1, a, b}` are added to the grid so that the
/// indicator entropies, finite only there, are sampled.
pub fn fcirc_grid(e: &EntropyFunction, phi: f64, s_max: f64, points: usize) -> f64 {
    let f = |s: f64| phi * s + f_value(e, s);
    let h = s_max / points as f64;
    let mut best = (f64::INFINITY, 0.0);
    let mut grid: Vec<f64> = (0..=points).map(|k| k as f64 * h).collect();
    grid.push(1.0);
    if let EntropyFunction::Range { a, b } = *e {
        grid.extend([a, b]);
    }
    for s in grid {
        let v = f(s);
        if v < best.0 {
            best = (v, s);
        }
    }
    let (lo, hi) = ((best.1 - h).max(0.0), (best.1 + h).min(s_max));
    let (_, v) = golden(f, lo, hi);
    best.0.min(v)
}

/// Minimizes `θ(x - Σ p_j y_j) + Σ p_j φ_j` over the probability simplex by
/// enumerating a simplex grid and then re-gridding around the best point
/// with a halving step.
pub fn marton_rc_brute(ys: &[f64], x: f64, phi: &[f64], theta: Theta) -> f64 {
    let n = ys.len();
    let eval = |p: &[f64]| -> f64 {
        if p.iter().any(|&v| v < -1e-15) {
            return f64::INFINITY;
        }
        let mean: f64 = p.iter().zip(ys).map(|(a, b)| a * b).sum();
        theta.eval(&[x - mean]) + p.iter().zip(phi).map(|(a, b)| a * b).sum::<f64>()
    };
    if n == 1 {
        return eval(&[1.0]);
    }
    let free = n - 1;
    let full = |q: &[f64]| -> Vec<f64> {
        let mut p = q.to_vec();
        p.push(1.0 - q.iter().sum::<f64>());
        p
    };

    let divisions: usize = match n {
        2 => 2000,
        3 => 200,
        _ => 60,
    };
    let mut best = (f64::INFINITY, vec![0.0; free]);
    let mut idx = vec![0usize; free];
    loop {
        if idx.iter().sum::<usize>() <= divisions {
            let q: Vec<f64> = idx.iter().map(|&k| k as f64 / divisions as f64).collect();
            let v = eval(&full(&q));
            if v < best.0 {
                best = (v, q);
            }
        }
        let mut k = 0;
        while k < free {
            idx[k] += 1;
            if idx[k] <= divisions {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == free {
            break;
        }
    }

    let radius: i64 = 8;
    let width = (2 * radius + 1) as usize;
    let mut delta = 1.0 / divisions as f64;
    while delta > 1e-13 {
        let centre = best.1.clone();
        for code in 0..width.pow(free as u32) {
            let mut c = code;
            let q: Vec<f64> = centre
                .iter()
                .map(|&v| {
                    let off = (c % width) as i64 - radius;
                    c /= width;
                    v + off as f64 * delta
                })
                .collect();
            let v = eval(&full(&q));
            if v < best.0 {
                best = (v, q);
            }
        }
        delta /= 2.0;
    }
    best.0
}

/// The martingale view of a corpus instance with a martingale cost.
pub fn as_martingale(spec: &woet_core::ProblemSpec) -> Option<woet_core::MartingaleSpec> {
    match spec.cost.kind() {
        woet_core::CostKind::Martingale(c) => Some(
            woet_core::MartingaleSpec::new(spec.mu1.clone(), spec.mu2.clone(), spec.f1, spec.f2, c.clone())
                .unwrap(),
        ),
        _ => None,
    }
}

/// Every permutation of `0..n`.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..=p.len() {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}
