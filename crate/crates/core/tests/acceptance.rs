//! Acceptance run. Each test checks one criterion at its fixed tolerance and
//! prints a single `PASS`/`FAIL` line, plus indented detail lines.

mod common;

use std::io::Write;
use std::time::Instant;

use common::*;
use linzf_core::oracle::{exact_expected_dof, Engine};
use linzf_core::verify::{verify_exhaustive, verify_random};
use linzf_core::{build_assignment, estimate_pudof, AssignmentSpec, Estimate, Fraction};

// Written straight to the stdout handle so the lines survive output capture.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
    let _ = out.flush();
}

fn verdict(id: u32, name: &str, pass: bool, started: Instant, details: &[String]) {
    let mut text = format!(
        "\nacceptance {id} {name}: {} ({:.1}s)\n",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    for d in details {
        text.push_str("    ");
        text.push_str(d);
        text.push('\n');
    }
    emit(&text);
    assert!(pass, "acceptance {id} {name} failed");
}

fn frac(num: u64, den: u64) -> Fraction {
    Fraction::new(num, den).unwrap()
}

#[test]
fn c1_scheduler_matches_the_zero_forcing_oracle() {
    let started = Instant::now();
    let exhaustive = verify_exhaustive(6, 20, 0x5eed).unwrap();
    let sampled = verify_random(7, 8, 10_000, 0x5eed).unwrap();
    let family_only = verify_exhaustive(6, 0, 0x5eed).unwrap();

    let mut details = vec![
        format!(
            "K=3..6, every pattern, f=0 + f=3/5 + 20 random assignments per K: {} instances, {} mismatches",
            exhaustive.checked(),
            exhaustive.mismatches.len()
        ),
        format!(
            "K=7..8 random instances: {} instances, {} mismatches",
            sampled.checked(),
            sampled.mismatches.len()
        ),
        format!(
            "f=0 and f=3/5 alone: {} instances, {} mismatches",
            family_only.checked(),
            family_only.mismatches.len()
        ),
        format!(
            "mismatches where the scheduler also trails the single-delivery optimum: {}",
            exhaustive.single_delivery_mismatches() + sampled.single_delivery_mismatches()
        ),
    ];
    if let Some(m) = exhaustive.mismatches.iter().chain(&sampled.mismatches).next() {
        details.push(format!(
            "first counterexample: {} scheduler {} oracle {} single-delivery oracle {}",
            m.realization, m.scheduler_dof, m.oracle_dof, m.single_delivery_dof
        ));
        details.push(format!(
            "  transmit sets {}",
            m.assignment.to_string().trim_end().replace('\n', "; ")
        ));
    }
    verdict(
        1,
        "oracle equivalence",
        exhaustive.passed() && sampled.passed(),
        started,
        &details,
    );
}

#[test]
fn c2_five_user_endpoint() {
    let started = Instant::now();
    let a = build_assignment(5, frac(3, 5)).unwrap();
    let est = estimate_pudof(5, 0.0, &a, 1000, 1, true).unwrap();
    let exact = exact_expected_dof(5, 0.0, &a, Engine::Scheduler, true).unwrap() / 5.0;
    verdict(
        2,
        "K=5 f=3/5 at p=0 is 4/5",
        est.mean == 0.8 && est.stderr == 0.0 && exact == 0.8,
        started,
        &[format!(
            "monte carlo {} (stderr {}), enumeration {exact}",
            est.mean, est.stderr
        )],
    );
}

#[test]
fn c3_baseline_endpoint() {
    let started = Instant::now();
    let a = build_assignment(99, Fraction::ZERO).unwrap();
    let est = estimate_pudof(99, 0.0, &a, 1000, 1, true).unwrap();
    verdict(
        3,
        "K=99 f=0 at p=0 is 2/3",
        est.mean == 66.0 / 99.0 && est.mean == 2.0 / 3.0 && est.stderr == 0.0,
        started,
        &[format!("monte carlo {} (stderr {})", est.mean, est.stderr)],
    );
}

#[test]
fn c4_estimator_matches_enumeration() {
    let started = Instant::now();
    let a = build_assignment(5, frac(3, 5)).unwrap();
    let mut pass = true;
    let mut details = Vec::new();
    for (i, p) in [0.1, 0.5, 0.9].into_iter().enumerate() {
        let exact = exact_expected_dof(5, p, &a, Engine::Scheduler, true).unwrap() / 5.0;
        let est = estimate_pudof(5, p, &a, 6000, 4000 + i as u64, true).unwrap();
        let z = (est.mean - exact).abs() / est.stderr;
        pass &= z <= 4.0;
        details.push(format!(
            "p={p}: mean {:.6} stderr {:.6} exact {:.6} |z|={z:.2}",
            est.mean, est.stderr, exact
        ));
    }
    verdict(4, "estimator within 4 standard errors", pass, started, &details);
}

const ORDERING_TRIALS: u64 = 100_000;
const ORDERING_SEED: u64 = 20_140_623;

// Every assignment at a given p sees the same realizations.
fn crn_estimate(spec: AssignmentSpec, p: f64) -> Estimate {
    let a = spec.build().unwrap();
    let seed = linzf_core::derive_seed(ORDERING_SEED, (p * 1000.0).round() as u64);
    estimate_pudof(spec.k, p, &a, ORDERING_TRIALS, seed, true).unwrap()
}

fn interval(e: &Estimate) -> (f64, f64) {
    (e.mean - 1.96 * e.stderr, e.mean + 1.96 * e.stderr)
}

#[test]
fn c5_best_assignment_orderings() {
    let started = Instant::now();
    let spec = |k: usize, num: u64, den: u64| AssignmentSpec::new(k, frac(num, den));
    // Stand-in for the unbounded f=0 network: K = 999 keeps the period-3
    // pattern whole and leaves boundary losses below 1/1000.
    let baseline = spec(999, 0, 1);
    let five = spec(5, 3, 5);
    let members = [
        five,
        spec(100, 1, 2),
        spec(100, 49, 100),
        spec(100, 12, 25),
        spec(100, 1, 50),
    ];
    let mut pass = true;
    let mut details = Vec::new();

    for p in [0.05, 0.10] {
        let (f, b) = (crn_estimate(five, p), crn_estimate(baseline, p));
        let ((_, b_hi), (f_lo, _)) = (interval(&b), interval(&f));
        let ok = f.mean > b.mean && f_lo > b_hi;
        pass &= ok;
        details.push(format!(
            "p={p}: {five} {:.5}±{:.5} vs {baseline} {:.5}±{:.5} {}",
            f.mean,
            1.96 * f.stderr,
            b.mean,
            1.96 * b.stderr,
            if ok { "ok" } else { "violated" }
        ));
    }

    for p in [0.8, 0.9] {
        let b = crn_estimate(baseline, p);
        for m in members {
            let e = crn_estimate(m, p);
            let ok = b.mean > e.mean;
            pass &= ok;
            details.push(format!(
                "p={p}: {baseline} {:.5} vs {m} {:.5} {}",
                b.mean,
                e.mean,
                if ok { "ok" } else { "violated" }
            ));
        }
    }

    let (low, half) = (
        crn_estimate(spec(100, 1, 50), 0.45),
        crn_estimate(spec(100, 1, 2), 0.45),
    );
    let ok = low.mean > half.mean;
    pass &= ok;
    details.push(format!(
        "p=0.45: K=100,f=1/50 {:.5} vs K=100,f=1/2 {:.5} {}",
        low.mean,
        half.mean,
        if ok { "ok" } else { "violated" }
    ));
    verdict(5, "best-assignment orderings", pass, started, &details);
}

#[test]
fn c6_zero_forcing_soundness() {
    let started = Instant::now();
    let mut failures = Vec::new();
    for case in 0..1000u64 {
        let (r, a) = random_case(linzf_core::derive_seed(606, case), 30, 30);
        if let Err(e) = check_zero_forcing(&r, &a, case) {
            failures.push(e);
        }
    }
    let mut details = vec![format!("1000 pairs at K=30, {} failures", failures.len())];
    details.extend(failures.into_iter().take(3));
    let pass = details.len() == 1;
    verdict(6, "zero-forcing soundness", pass, started, &details);
}

#[test]
fn c7_property_suite() {
    let started = Instant::now();
    const CASES: u64 = 10_000;
    let mut details = Vec::new();
    let mut pass = true;
    let mut tally = |name: &str, results: Vec<Check>| {
        let n = results.len();
        let failed: Vec<String> = results.into_iter().filter_map(Result::err).collect();
        pass &= failed.is_empty();
        details.push(format!("{name}: {n} cases, {} failures", failed.len()));
        details.extend(failed.into_iter().take(2));
    };

    let case = |i: u64| random_case(linzf_core::derive_seed(707, i), 3, 40);
    tally(
        "schedule invariants",
        (0..CASES)
            .map(|i| {
                let (r, a) = case(i);
                check_schedule_invariants(&r, &a)
            })
            .collect(),
    );
    tally(
        "cluster additivity",
        (0..CASES)
            .map(|i| {
                let (r, a) = case(i);
                check_cluster_additivity(&r, &a)
            })
            .collect(),
    );
    tally(
        "prefix stability",
        (0..CASES)
            .map(|i| {
                let (r, a) = case(i);
                check_prefix_stability(&r, &a)
            })
            .collect(),
    );
    tally(
        "deactivation",
        (0..CASES)
            .map(|i| {
                let (r, a) = case(i);
                let p = i as f64 / CASES as f64;
                check_deactivation(r.k(), p, &a, linzf_core::derive_seed(708, i))
            })
            .collect(),
    );
    // 100 sweeps of 5 assignments x 20 grid points: 10^4 rows per worker count.
    let reruns: Vec<Check> = (0..100u64)
        .flat_map(|i| {
            let cfg = random_sweep_config(linzf_core::derive_seed(709, i), 5, 20, 20);
            let one = sweep_bytes(&cfg, 1);
            let rows = one.iter().filter(|&&b| b == b'\n').count() - 1;
            let verdicts: Vec<Check> = [2, 4]
                .into_iter()
                .map(|threads| {
                    if sweep_bytes(&cfg, threads) == one {
                        Ok(())
                    } else {
                        Err(format!("sweep {i} differs on {threads} workers"))
                    }
                })
                .collect();
            // One verdict per row and worker count.
            verdicts.into_iter().flat_map(move |v| std::iter::repeat_n(v, rows))
        })
        .collect();
    tally("byte-identical reruns (rows x worker counts)", reruns);
    verdict(7, "property suite", pass, started, &details);
}
