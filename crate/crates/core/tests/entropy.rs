mod common;

use approx::assert_relative_eq;
use proptest::prelude::*;
use woet_core::{divergence, reverse_functional, Entropy, EntropyFunction};

use common::*;

fn entropy() -> impl Strategy<Value = EntropyFunction> {
    prop_oneof![
        Just(EntropyFunction::Kl),
        Just(EntropyFunction::Indicator1),
        Just(EntropyFunction::ChiSquared),
        (0.1..1.0f64, 1.0..4.0f64).prop_map(|(a, b)| EntropyFunction::Range { a, b }),
    ]
}

fn pair(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    let w = prop::collection::vec(prop_oneof![Just(0.0), 0.01..5.0f64], n);
    (w.clone(), w)
}

/// `R(r) = r F(1/r)`, with `R(0) = F'_∞ = +∞` for the catalog.
fn reverse_by_hand(e: &EntropyFunction, r: f64) -> f64 {
    if r == 0.0 {
        f64::INFINITY
    } else {
        r * f_value(e, 1.0 / r)
    }
}

#[test]
fn fenchel_young_on_grid() {
    for e in &ENTROPIES {
        for a in 0..=200 {
            let phi = -10.0 + 0.1 * a as f64;
            let fstar = e.fstar(phi);
            for b in 0..=100 {
                let s = 0.1 * b as f64;
                let lhs = e.value(s) + fstar;
                assert!(s * phi <= lhs + 1e-12 * lhs.abs().max(1.0), "{} s={s} phi={phi}", e.name());
            }
            // stationary pair: s attains the supremum in F*
            let s = fcirc_argmin(e, -phi);
            assert_relative_eq!(e.value(s) + fstar, s * phi, epsilon = 1e-12, max_relative = 1e-12);
        }
    }
}

#[test]
fn conjugates_match_grid_minimization() {
    for e in &ENTROPIES {
        for k in 0..=60 {
            let phi = -3.0 + 0.1 * k as f64;
            let oracle = fcirc_grid(e, phi, 40.0, 40_000);
            assert!((e.fcirc(phi) - oracle).abs() < 1e-9, "{} phi={phi}", e.name());
        }
    }
}

#[test]
fn reverse_conjugate_matches_grid_maximization() {
    for e in &ENTROPIES {
        for k in 0..=40 {
            let psi = -4.0 + 0.1 * k as f64;
            if e.value(0.0).is_finite() && psi >= e.value(0.0) - 0.05 {
                continue;
            }
            let f = |r: f64| -(r * psi - reverse_by_hand(e, r));
            let h = 1e-3;
            let mut grid: Vec<f64> = (1..=40_000).map(|j| j as f64 * h).collect();
            grid.push(1.0);
            if let EntropyFunction::Range { a, b } = *e {
                grid.extend([1.0 / a, 1.0 / b]);
            }
            let best = grid.iter().copied().fold((f64::INFINITY, 0.0), |acc, r| {
                let v = f(r);
                if v < acc.0 {
                    (v, r)
                } else {
                    acc
                }
            });
            let (_, refined) = golden(f, (best.1 - h).max(1e-12), best.1 + h);
            let oracle = -best.0.min(refined);
            assert!((e.reverse_conjugate(psi) - oracle).abs() < 1e-6, "{} psi={psi}", e.name());
        }
    }
}

#[test]
fn fcirc_is_non_decreasing() {
    for e in &ENTROPIES {
        let values: Vec<f64> = (0..=400).map(|k| e.fcirc(-20.0 + 0.1 * k as f64)).collect();
        assert!(values.windows(2).all(|w| w[0] <= w[1] + 1e-15), "{}", e.name());
    }
}

#[test]
fn reverse_recession_is_f_at_zero() {
    for e in &ENTROPIES {
        let big = 1e8;
        let slope = e.reverse(big) / big;
        let f0 = e.value(0.0);
        assert!(
            (f0.is_infinite() && slope.is_infinite()) || (slope - f0).abs() < 1e-6,
            "{}: {slope} vs {f0}",
            e.name()
        );
    }
}

#[test]
fn range_reverse_conjugate_follows_definition() {
    let e = EntropyFunction::Range { a: 0.5, b: 2.0 };
    // support of R is [1/b, 1/a] = [0.5, 2]
    assert_eq!(e.reverse_conjugate(1.0), 2.0);
    assert_eq!(e.reverse_conjugate(-1.0), -0.5);
    assert_eq!(e.reverse(0.25), f64::INFINITY);
    assert_eq!(e.reverse(1.5), 0.0);
}

proptest! {
    #[test]
    fn fcirc_is_minus_fstar(e in entropy(), phi in -50.0..50.0f64) {
        let a = e.fcirc(phi);
        let b = -e.fstar(-phi);
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn divergence_equals_reverse_functional(
        e in entropy(),
        (gamma, mu) in (1..=5usize).prop_flat_map(pair),
    ) {
        let x = line(&(0..gamma.len()).map(|k| k as f64).collect::<Vec<_>>());
        let (g, m) = (measure(&x, &gamma), measure(&x, &mu));
        let f = divergence(&e, &g, &m).unwrap();
        let r = reverse_functional(&e, &m, &g).unwrap();
        prop_assert!(close(f, r, 1e-10), "F = {f}, R = {r}");
    }

    #[test]
    fn divergence_of_scaled_measure_matches_hand_formula(
        e in entropy(),
        mu in prop::collection::vec(0.01..5.0f64, 1..=5),
        s in 0.0..3.0f64,
    ) {
        let x = line(&(0..mu.len()).map(|k| k as f64).collect::<Vec<_>>());
        let gamma: Vec<f64> = mu.iter().map(|m| m * s).collect();
        let f = divergence(&e, &measure(&x, &gamma), &measure(&x, &mu)).unwrap();
        let expect: f64 = mu.iter().zip(&gamma).map(|(m, g)| m * f_value(&e, g / m)).sum();
        prop_assert!(close(f, expect, 1e-10), "{f} vs {expect}");
    }

    #[test]
    fn total_mass_bound(
        e in entropy(),
        (gamma, mu) in (1..=5usize).prop_flat_map(pair),
    ) {
        let m: f64 = mu.iter().sum();
        prop_assume!(m > 0.0);
        let x = line(&(0..gamma.len()).map(|k| k as f64).collect::<Vec<_>>());
        let f = divergence(&e, &measure(&x, &gamma), &measure(&x, &mu)).unwrap();
        let g: f64 = gamma.iter().sum();
        let bound = m * e.value(g / m);
        prop_assert!(f >= bound - 1e-10 * bound.abs().max(1.0) || f.is_infinite(), "{f} < {bound}");
    }

    #[test]
    fn reverse_young_inequality(e in entropy(), s in 0.0..20.0f64, psi in -20.0..20.0f64) {
        let lhs = e.reverse(s) + e.reverse_conjugate(psi);
        prop_assert!(lhs >= s * psi - 1e-10 * (s * psi).abs().max(1.0) || lhs.is_nan());
    }

    #[test]
    fn witnesses_attain_equality(e in entropy(), psi in -20.0..0.999f64) {
        let s = e.bm_witness(psi).unwrap();
        prop_assert!(s > 0.0 && s.is_finite());
        prop_assert!(close(s, bm_closed(&e, psi), 1e-12));
        let residual = e.reverse(s) + e.reverse_conjugate(psi) - s * psi;
        prop_assert!(residual.abs() <= 1e-10 * (s * psi).abs().max(1.0), "residual {residual}");
    }
}

#[test]
fn witness_outside_domain_is_an_error() {
    assert!(EntropyFunction::Kl.bm_witness(1.0).is_err());
    assert!(EntropyFunction::ChiSquared.bm_witness(2.0).is_err());
    assert!(EntropyFunction::Indicator1.bm_witness(1e6).is_ok());
}
