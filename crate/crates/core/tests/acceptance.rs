//! End-to-end acceptance checks. Runs without the libtest harness and prints
//! one PASS/FAIL line per criterion; the process fails if any criterion does.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use woet_core::corpus::{corpus, CorpusInstance};
use woet_core::martingale::{dual_ascent_lambda_m, triple_violation};
use woet_core::{
    c_monotonicity_check, check_homogeneous_equivalence, divergence, dual_value_rc, objective,
    oracle_solve, reverse_functional, solve, solve_moet, Coupling, Entropy, EntropyFunction,
    MartingaleSpec, SolveReport, Status, Theta, WeakCost,
};

use common::*;

type Outcome = Result<String, String>;

struct Solved {
    instance: CorpusInstance,
    report: SolveReport,
}

fn solve_corpus() -> Vec<Solved> {
    corpus()
        .into_iter()
        .map(|instance| {
            let report = solve(&instance.spec).unwrap_or_else(|e| panic!("{}: {e}", instance.name));
            Solved { instance, report }
        })
        .collect()
}

fn within(elapsed: Duration, limit: Duration) -> Outcome {
    if elapsed < limit {
        Ok(String::new())
    } else {
        Err(format!("took {elapsed:?}, limit {limit:?}"))
    }
}

fn conjugate_suite() -> Outcome {
    let start = Instant::now();
    let phis: Vec<f64> = (0..101).map(|k| -5.0 + 0.1 * k as f64).collect();
    let mut worst_identity: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    for e in &ENTROPIES {
        for &phi in &phis {
            let fc = e.fcirc(phi);
            let fs = e.fstar(-phi);
            worst_identity = worst_identity.max((fc + fs).abs());
            worst_identity = worst_identity.max((fc - fcirc_closed(e, phi)).abs());
            // Fenchel-Young: F(s) + F*(t) >= s t, with equality at the minimizer
            let t = -phi;
            let s_star = fcirc_argmin(e, phi);
            worst_identity = worst_identity.max((e.value(s_star) + fs - s_star * t).abs());
            for k in 0..=200 {
                let s = 0.05 * k as f64;
                let slack = e.value(s) + fs - s * t;
                if slack < -1e-12 {
                    return Err(format!("{} Fenchel-Young fails at s = {s}, phi = {phi}", e.name()));
                }
            }
            worst_oracle = worst_oracle.max((fcirc_grid(e, phi, 400.0, 40_000) - fc).abs());
        }
    }
    if worst_identity > 1e-12 {
        return Err(format!("identity error {worst_identity:e}"));
    }
    if worst_oracle > 1e-6 {
        return Err(format!("grid oracle error {worst_oracle:e}"));
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("identity {worst_identity:.1e}, grid oracle {worst_oracle:.1e}"))
}

fn divergence_reverse() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut finite, mut infinite) = (0, 0);
    let mut worst: f64 = 0.0;
    for trial in 0..200 {
        let e = ENTROPIES[trial % 4];
        let n = rng.gen_range(1..=5);
        let x = line(&(0..n).map(|k| k as f64).collect::<Vec<_>>());
        let mu: Vec<f64> =
            (0..n).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.1..3.0) }).collect();
        let gamma: Vec<f64> = mu
            .iter()
            .map(|&m| {
                if rng.gen_bool(0.2) {
                    0.0
                } else if m > 0.0 && rng.gen_bool(0.6) {
                    let s = match e {
                        EntropyFunction::Indicator1 => 1.0,
                        EntropyFunction::Range { a, b } => rng.gen_range(a..=b),
                        _ => rng.gen_range(0.05..4.0),
                    };
                    m * s
                } else {
                    rng.gen_range(0.1..3.0)
                }
            })
            .collect();
        let (g, m) = (measure(&x, &gamma), measure(&x, &mu));
        let f = divergence(&e, &g, &m).map_err(|e| e.to_string())?;
        let r = reverse_functional(&e, &m, &g).map_err(|e| e.to_string())?;
        if f.is_infinite() || r.is_infinite() {
            if f != r {
                return Err(format!("trial {trial}: F = {f}, R = {r}"));
            }
            infinite += 1;
        } else {
            let err = (f - r).abs() / f.abs().max(1.0);
            if err > 1e-10 {
                return Err(format!("trial {trial}: F = {f}, R = {r}"));
            }
            worst = worst.max(err);
            finite += 1;
        }
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("{finite} finite (max err {worst:.1e}), {infinite} infinite"))
}

fn bm_witnesses() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for e in [EntropyFunction::Kl, EntropyFunction::Indicator1, EntropyFunction::ChiSquared] {
        let top = e.value(0.0);
        let psis: Vec<f64> = if top.is_finite() {
            (0..100).map(|k| -10.0 + (top - 1e-3 + 10.0) * k as f64 / 99.0).collect()
        } else {
            (0..100).map(|k| -10.0 + 0.5 * k as f64).collect()
        };
        for psi in psis {
            let s = e.bm_witness(psi).map_err(|err| format!("{}: {err}", e.name()))?;
            let expect = bm_closed(&e, psi);
            if !close(s, expect, 1e-12) {
                return Err(format!("{} witness {s} at psi = {psi}, expected {expect}", e.name()));
            }
            let rstar = e.reverse_conjugate(psi);
            if !close(rstar, rstar_closed(&e, psi), 1e-12) {
                return Err(format!("{} R* mismatch at psi = {psi}", e.name()));
            }
            let res = (e.reverse(s) + rstar - s * psi).abs();
            worst = worst.max(res / (s * psi).abs().max(1.0));
            count += 1;
        }
    }
    if worst > 1e-10 {
        return Err(format!("residual {worst:e}"));
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("{count} witnesses, residual {worst:.1e}"))
}

fn oracle_equivalence(solved: &[Solved]) -> Outcome {
    let start = Instant::now();
    let mut worst: (f64, &str) = (0.0, "");
    for s in solved {
        let i = &s.instance;
        let (oracle, _) =
            oracle_solve(&i.spec, i.oracle_step, i.oracle_mass_max).map_err(|e| e.to_string())?;
        let diff = (s.report.primal_value - oracle).abs();
        let tol = 1e-3f64.max(1e-2 * oracle.abs());
        if !(diff <= tol) {
            return Err(format!("{}: solve {} vs oracle {oracle}", i.name, s.report.primal_value));
        }
        if diff > worst.0 {
            worst = (diff, i.name);
        }
    }
    within(start.elapsed(), Duration::from_secs(120))?;
    Ok(format!("{} instances, max |diff| {:.1e} ({})", solved.len(), worst.0, worst.1))
}

fn strong_duality(solved: &[Solved]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_ot: f64 = 0.0;
    let mut checked = 0;
    for s in solved {
        let i = &s.instance;
        if !(i.spec.f1.is_superlinear() && i.spec.f2.is_superlinear()) {
            continue;
        }
        let phi = s.report.dual_potential.as_ref().ok_or(format!("{}: no dual potential", i.name))?;
        let bound = dual_value_rc(&i.spec, phi).map_err(|e| e.to_string())?;
        let gap = s.report.primal_value - bound;
        let limit = if i.is_classical_ot() { 1e-5 } else { 1e-4 };
        if !(gap <= limit) {
            return Err(format!("{}: gap {gap:e}", i.name));
        }
        if i.is_classical_ot() {
            worst_ot = worst_ot.max(gap);
        } else {
            worst = worst.max(gap);
        }
        checked += 1;
    }
    Ok(format!("{checked} instances, max gap {worst:.1e}, classical OT {worst_ot:.1e}"))
}

fn homogeneity(solved: &[Solved]) -> Outcome {
    let names = ["kl_linear_2x2", "chi2_kl_linear_3x3", "range_kl_linear_3x2", "moet_kl_kl", "marton_kl_quad_2x2"];
    let mut worst: f64 = 0.0;
    for name in names {
        let s = solved.iter().find(|s| s.instance.name == name).ok_or(format!("{name} missing"))?;
        let base = s.report.primal_value;
        for lambda in [0.5, 2.0, 10.0] {
            let scaled = s.instance.spec.scaled(lambda).map_err(|e| e.to_string())?;
            let v = solve(&scaled).map_err(|e| e.to_string())?.primal_value;
            let err = (v - lambda * base).abs() / (lambda * base).abs();
            if !(err <= 1e-5) {
                return Err(format!("{name}, lambda = {lambda}: {v} vs {}", lambda * base));
            }
            worst = worst.max(err);
        }
    }
    Ok(format!("5 instances x 3 scales, max rel err {worst:.1e}"))
}

fn closed_form_kl_point() -> Outcome {
    let x = line(&[0.0]);
    let (m1, m2) = (1.0, 4.0);
    let spec = woet_core::ProblemSpec::new(
        measure(&x, &[m1]),
        measure(&x, &[m2]),
        EntropyFunction::Kl,
        EntropyFunction::Kl,
        WeakCost::linear(x.clone(), x.clone(), vec![0.0]).unwrap(),
    )
    .map_err(|e| e.to_string())?;
    let kl = EntropyFunction::Kl;
    let (m_star, v_star) =
        golden(|m| m1 * f_value(&kl, m / m1) + m2 * f_value(&kl, m / m2), 1e-9, 10.0);
    let report = solve(&spec).map_err(|e| e.to_string())?;
    let mass = report.coupling.get(0, 0);
    if !((report.primal_value - 1.0).abs() <= 1e-5 && (report.primal_value - v_star).abs() <= 1e-5) {
        return Err(format!("primal {} (1-D oracle {v_star})", report.primal_value));
    }
    if !((mass - 2.0).abs() <= 1e-4 && (mass - m_star).abs() <= 1e-4) {
        return Err(format!("mass {mass} (1-D oracle {m_star})"));
    }
    let null = Coupling::zero(x.clone(), x);
    let null_value = objective(&spec, &null).map_err(|e| e.to_string())?;
    let expect = f_value(&kl, 0.0) * m1 + f_value(&kl, 0.0) * m2;
    if null_value != expect || spec.null_value() != expect {
        return Err(format!("null value {null_value}, expected {expect}"));
    }
    Ok(format!("primal {:.9}, mass {mass:.6}, null {null_value}", report.primal_value))
}

fn moet_delta() -> Outcome {
    let x = line(&[0.0, 1.0, 2.0]);
    let c = WeakCost::pairwise_matrix(&x, &x, |a, b| (b[0] - a[0]).powi(2));
    let spec = MartingaleSpec::new(
        measure(&x, &[0.0, 1.0, 0.0]),
        measure(&x, &[0.5, 0.0, 0.5]),
        EntropyFunction::Indicator1,
        EntropyFunction::Indicator1,
        c,
    )
    .map_err(|e| e.to_string())?;
    let report = solve_moet(&spec).map_err(|e| e.to_string())?;
    if !((report.primal_value - 1.0).abs() <= 1e-6) {
        return Err(format!("E_M = {}", report.primal_value));
    }
    let residual = report.diagnostics.martingale_residual.ok_or("no martingale residual")?;
    if !(residual <= 1e-12) {
        return Err(format!("martingale residual {residual:e}"));
    }
    let (triple, dual) = dual_ascent_lambda_m(&spec).map_err(|e| e.to_string())?;
    let violation = triple_violation(&spec, &triple).map_err(|e| e.to_string())?;
    if !(dual >= 1.0 - 1e-4) || violation > 1e-9 {
        return Err(format!("Lambda_M value {dual}, violation {violation:e}"));
    }
    let mut worst: f64 = 0.0;
    for p in [1.0, 2.0] {
        let h = check_homogeneous_equivalence(&spec, p).map_err(|e| e.to_string())?;
        if !(h.max_discrepancy <= 1e-4) {
            return Err(format!(
                "p = {p}: {} / {} / {}",
                h.moet_value, h.functional_value, h.lifted_value
            ));
        }
        worst = worst.max(h.max_discrepancy);
    }
    Ok(format!(
        "E_M {:.9}, residual {residual:.1e}, Lambda_M {dual:.6}, homogeneous spread {worst:.1e}",
        report.primal_value
    ))
}

fn c_monotonicity(solved: &[Solved]) -> Outcome {
    let mut worst: f64 = f64::NEG_INFINITY;
    for (k, s) in solved.iter().enumerate() {
        let r = c_monotonicity_check(&s.instance.spec, &s.report.coupling, 1000, k as u64)
            .map_err(|e| e.to_string())?;
        if r.violations > 0 {
            return Err(format!("{}: {} violations, worst {:?}", s.instance.name, r.violations, r.worst));
        }
        worst = worst.max(r.max_excess);
    }
    // planted: the anti-diagonal plan on the 2x2 assignment instance
    let ot = corpus().into_iter().find(|i| i.name == "ot_2x2").ok_or("ot_2x2 missing")?;
    let planted = Coupling::new(ot.spec.rows().clone(), ot.spec.cols().clone(), vec![0.0, 0.5, 0.5, 0.0])
        .map_err(|e| e.to_string())?;
    let r = c_monotonicity_check(&ot.spec, &planted, 1000, 99).map_err(|e| e.to_string())?;
    if r.violations == 0 {
        return Err("planted suboptimal plan passed".into());
    }
    Ok(format!(
        "{} optima clean (max excess {worst:.1e}), planted plan {} violations",
        solved.len(),
        r.violations
    ))
}

fn marton_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for trial in 0..24 {
        let theta = if trial % 2 == 0 { Theta::Quadratic } else { Theta::Absolute };
        let n = 1 + trial / 2 % 4;
        let mut ys: Vec<f64> = Vec::new();
        while ys.len() < n {
            let y = 0.5 * rng.gen_range(0..7) as f64;
            if !ys.contains(&y) {
                ys.push(y);
            }
        }
        let xs: Vec<f64> = (0..3).map(|k| -0.5 + 1.75 * k as f64 + rng.gen_range(0.0..0.25)).collect();
        let phi: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let cost = WeakCost::marton(line(&xs), line(&ys), theta).map_err(|e| e.to_string())?;
        let rc = cost.rc_transform(&phi).map_err(|e| e.to_string())?;
        for (i, &x) in xs.iter().enumerate() {
            let brute = marton_rc_brute(&ys, x, &phi, theta);
            let err = (rc[i] - brute).abs();
            if !(err <= 1e-6) {
                return Err(format!("{theta:?} ys {ys:?} x {x}: rc {} vs brute {brute}", rc[i]));
            }
            worst = worst.max(err);
            cases += 1;
        }
    }
    Ok(format!("{cases} rows, max err {worst:.1e}"))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let solved = solve_corpus();
    let corpus_time = start.elapsed();
    let gated = |limit: Duration, r: Outcome| -> Outcome {
        let msg = r?;
        within(corpus_time, limit)?;
        Ok(msg)
    };
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("conjugate identities", Box::new(conjugate_suite)),
        ("divergence equals reverse functional", Box::new(divergence_reverse)),
        ("BM witnesses", Box::new(bm_witnesses)),
        ("corpus vs brute-force oracle", Box::new(|| oracle_equivalence(&solved))),
        ("strong duality gap", Box::new(|| gated(Duration::from_secs(120), strong_duality(&solved)))),
        ("positive homogeneity", Box::new(|| homogeneity(&solved))),
        ("KL point closed form", Box::new(closed_form_kl_point)),
        ("martingale two-point split", Box::new(moet_delta)),
        ("C-monotonicity", Box::new(|| c_monotonicity(&solved))),
        ("Marton envelope reduction", Box::new(marton_reduction)),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".into()));
        let ms = t.elapsed().as_secs_f64() * 1e3;
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{ms:.0} ms]", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{ms:.0} ms]", k + 1);
            }
        }
    }
    let optimal = solved.iter().filter(|s| s.report.status == Status::Optimal).count();
    println!(
        "corpus solved in {:.0} ms ({optimal}/{} optimal); {} of {} criteria passed",
        corpus_time.as_secs_f64() * 1e3,
        solved.len(),
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
