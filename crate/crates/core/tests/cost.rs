mod common;

use proptest::prelude::*;
use woet_core::{convex_envelope_1d, Theta, WeakCost};

use common::*;

#[derive(Debug, Clone, Copy)]
enum Kind {
    Linear,
    Martingale,
    Marton(Theta),
}

fn kind() -> impl Strategy<Value = Kind> {
    prop_oneof![
        Just(Kind::Linear),
        Just(Kind::Martingale),
        Just(Kind::Marton(Theta::Quadratic)),
        Just(Kind::Marton(Theta::Absolute)),
    ]
}

/// Distinct sorted half-integer points in `[0, 3]`.
fn points(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::sample::subsequence((0..7).collect::<Vec<i32>>(), 1..=max)
        .prop_map(|v| v.into_iter().map(|k| 0.5 * k as f64).collect())
}

fn build(kind: Kind, xs: &[f64], ys: &[f64], c: &[f64]) -> WeakCost {
    let (x, y) = (line(xs), line(ys));
    match kind {
        Kind::Linear => WeakCost::linear(x, y, c.to_vec()),
        Kind::Martingale => WeakCost::martingale(x, y, c.to_vec()),
        Kind::Marton(t) => WeakCost::marton(x, y, t),
    }
    .unwrap()
}

fn normalize(w: &[f64]) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

/// All probability vectors of length `n` on the lattice of step `1/div`.
fn simplex_grid(n: usize, div: usize) -> Vec<Vec<f64>> {
    fn compositions(n: usize, total: usize) -> Vec<Vec<usize>> {
        if n == 1 {
            return vec![vec![total]];
        }
        (0..=total)
            .flat_map(|k| {
                compositions(n - 1, total - k).into_iter().map(move |mut rest| {
                    rest.push(k);
                    rest
                })
            })
            .collect()
    }
    compositions(n, div)
        .into_iter()
        .map(|c| c.into_iter().map(|k| k as f64 / div as f64).collect())
        .collect()
}

/// Best two-point (or one-point) law with mean `x` on `ys`, by enumeration.
fn martingale_brute(ys: &[f64], x: f64, w: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for j in 0..ys.len() {
        if ys[j] == x {
            best = best.min(w[j]);
        }
        for k in 0..ys.len() {
            if ys[j] < x && x < ys[k] {
                let t = (ys[k] - x) / (ys[k] - ys[j]);
                best = best.min(t * w[j] + (1.0 - t) * w[k]);
            }
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn jensen(
        kind in kind(),
        (xs, ys) in (points(3), points(4)),
        seed in prop::collection::vec(0.0..1.0f64, 40),
        t in 0.0..1.0f64,
    ) {
        let c: Vec<f64> = (0..xs.len() * ys.len()).map(|k| seed[k % 40] * 3.0).collect();
        let cost = build(kind, &xs, &ys, &c);
        let n = ys.len();
        let p = normalize(&seed[12..12 + n].iter().map(|v| v + 0.01).collect::<Vec<_>>());
        let q = normalize(&seed[20..20 + n].iter().map(|v| v + 0.01).collect::<Vec<_>>());
        let mix: Vec<f64> = p.iter().zip(&q).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        for i in 0..xs.len() {
            let lhs = cost.eval_c(i, &mix).unwrap();
            let rhs = t * cost.eval_c(i, &p).unwrap() + (1.0 - t) * cost.eval_c(i, &q).unwrap();
            prop_assert!(lhs <= rhs + 1e-9, "{lhs} > {rhs}");
        }
    }

    #[test]
    fn perspective_scaling(
        kind in kind(),
        (xs, ys) in (points(3), points(4)),
        row in prop::collection::vec(0.0..2.0f64, 4),
        lambda in 0.01..50.0f64,
    ) {
        let c: Vec<f64> = (0..xs.len() * ys.len()).map(|k| (k % 5) as f64 * 0.7).collect();
        let cost = build(kind, &xs, &ys, &c);
        let row = &row[..ys.len()];
        let scaled: Vec<f64> = row.iter().map(|v| v * lambda).collect();
        for i in 0..xs.len() {
            let a = cost.row_perspective(i, &scaled).unwrap();
            let b = lambda * cost.row_perspective(i, row).unwrap();
            prop_assert!(close(a, b, 1e-10), "{a} vs {b}");
        }
    }

    #[test]
    fn linear_rc_matches_simplex_grid(
        (xs, ys) in (points(3), points(4)),
        c in prop::collection::vec(-2.0..2.0f64, 12),
        phi in prop::collection::vec(-2.0..2.0f64, 4),
    ) {
        let (n1, n2) = (xs.len(), ys.len());
        let cost = build(Kind::Linear, &xs, &ys, &c[..n1 * n2]);
        let phi = &phi[..n2];
        let rc = cost.rc_transform(phi).unwrap();
        let grid = simplex_grid(n2, 50);
        for i in 0..n1 {
            let brute = grid
                .iter()
                .map(|p| p.iter().enumerate().map(|(j, pj)| pj * (c[i * n2 + j] + phi[j])).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            prop_assert!((rc[i] - brute).abs() < 1e-6, "{} vs {brute}", rc[i]);
        }
    }

    #[test]
    fn marton_rc_matches_brute_force(
        (xs, ys) in (points(3), points(4)),
        phi in prop::collection::vec(-2.0..2.0f64, 4),
        quadratic in any::<bool>(),
    ) {
        let theta = if quadratic { Theta::Quadratic } else { Theta::Absolute };
        let cost = build(Kind::Marton(theta), &xs, &ys, &[]);
        let phi = &phi[..ys.len()];
        let rc = cost.rc_transform(phi).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            let brute = marton_rc_brute(&ys, x, phi, theta);
            prop_assert!((rc[i] - brute).abs() < 1e-6, "{} vs {brute}", rc[i]);
        }
    }

    #[test]
    fn martingale_rc_matches_two_point_search(
        (xs, ys) in (points(3), points(4)),
        c in prop::collection::vec(0.0..3.0f64, 12),
        phi in prop::collection::vec(-2.0..2.0f64, 4),
    ) {
        let (n1, n2) = (xs.len(), ys.len());
        let cost = build(Kind::Martingale, &xs, &ys, &c[..n1 * n2]);
        let phi = &phi[..n2];
        let rc = cost.rc_transform(phi).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            let w: Vec<f64> = (0..n2).map(|j| c[i * n2 + j] + phi[j]).collect();
            let brute = martingale_brute(&ys, x, &w);
            prop_assert!(close(rc[i], brute, 1e-9), "{} vs {brute}", rc[i]);
        }
    }

    #[test]
    fn envelope_is_convex_minorant_and_idempotent(
        ys in prop::collection::vec(-5.0..5.0f64, 1..8),
    ) {
        let xs: Vec<f64> = (0..ys.len()).map(|k| k as f64 * 0.5).collect();
        let env = convex_envelope_1d(&xs, &ys).unwrap();
        let slopes = env.slopes();
        prop_assert!(slopes.windows(2).all(|w| w[0] <= w[1] + 1e-12));
        for (x, y) in xs.iter().zip(&ys) {
            prop_assert!(env.eval(*x) <= y + 1e-12);
        }
        let again = convex_envelope_1d(env.breakpoints(), env.values()).unwrap();
        prop_assert_eq!(again, env);
    }
}

#[test]
fn marton_rc_needs_one_dimensional_grounds() {
    let x = std::sync::Arc::new(woet_core::GroundSet::new(vec![vec![0.0, 0.0]]).unwrap());
    let cost = WeakCost::marton(x.clone(), x, Theta::Quadratic).unwrap();
    assert!(cost.rc_transform(&[0.0]).is_err());
    assert_eq!(cost.row_perspective(0, &[2.0]).unwrap(), 0.0);
}
