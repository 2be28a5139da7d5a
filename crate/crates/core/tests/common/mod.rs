//! Randomized instances and property checks shared by the property tests and
//! the acceptance run.

#![allow(dead_code)]

use linzf_core::montecarlo::trial_instance;
use linzf_core::network::Cluster;
use linzf_core::report::write_sweep_csv;
use linzf_core::{
    build_assignment, build_transmit_signals, random_assignment, schedule_cluster, schedule_network, sweep,
    verify_zero_forcing, AssignmentSpec, Fraction, MessageAssignment, NetworkRealization, PGrid, SweepConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), String>;

/// A family member with a random helper fraction, or a random assignment.
pub fn random_assignment_for(k: usize, rng: &mut impl Rng) -> MessageAssignment {
    if rng.random_bool(0.5) {
        let den = rng.random_range(1..=k as u64);
        let num = rng.random_range(0..=den);
        build_assignment(k, Fraction::new(num, den).unwrap()).unwrap()
    } else {
        random_assignment(k, rng.random())
    }
}

/// A random `(realization, assignment)` pair with `k` in `k_min..=k_max`.
pub fn random_case(seed: u64, k_min: usize, k_max: usize) -> (NetworkRealization, MessageAssignment) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(k_min..=k_max);
    let p: f64 = rng.random();
    let r = NetworkRealization::sample(k, p, rng.random()).unwrap();
    (r, random_assignment_for(k, &mut rng))
}

fn context(r: &NetworkRealization, a: &MessageAssignment) -> String {
    format!("realization {r}\n{a}")
}

/// Structural invariants of the network schedule and of every cluster
/// schedule, plus consistency with the links that are present.
pub fn check_schedule_invariants(r: &NetworkRealization, a: &MessageAssignment) -> Check {
    let s = schedule_network(r, a).map_err(|e| e.to_string())?;
    s.check_invariants(a).map_err(|e| format!("{e}\n{}", context(r, a)))?;
    for m in s.delivered() {
        let own = s.b(m, m) && r.has_direct(m);
        let prev = m >= 1 && s.b(m, m - 1) && r.has_cross(m - 1);
        if !(own || prev) {
            return Err(format!("W_{} delivered over an absent link\n{}", m + 1, context(r, a)));
        }
    }
    if s.dof() > r.k() {
        return Err(format!("DoF {} exceeds K\n{}", s.dof(), context(r, a)));
    }
    for c in r.clusters() {
        let local = a.restrict_to(&c);
        let cs = schedule_cluster(&r.direct()[c.users()], local.sets()).map_err(|e| e.to_string())?;
        cs.check_invariants(&local)
            .map_err(|e| format!("cluster {c}: {e}\n{}", context(r, a)))?;
    }
    Ok(())
}

fn split(r: &NetworkRealization, a: &MessageAssignment, part: Cluster) -> (NetworkRealization, MessageAssignment) {
    let direct = r.direct()[part.users()].to_vec();
    let cross = r.cross()[part.start..part.end].to_vec();
    (NetworkRealization::new(direct, cross).unwrap(), a.restrict_to(&part))
}

/// Cutting the network at any absent cross link and scheduling the two
/// halves separately reproduces the schedule of the whole network.
pub fn check_cluster_additivity(r: &NetworkRealization, a: &MessageAssignment) -> Check {
    let whole = schedule_network(r, a).map_err(|e| e.to_string())?;
    let per_cluster: usize = r
        .clusters()
        .iter()
        .map(|c| {
            let local = a.restrict_to(c);
            schedule_cluster(&r.direct()[c.users()], local.sets()).unwrap().dof()
        })
        .sum();
    if per_cluster != whole.dof() {
        return Err(format!(
            "cluster sum {per_cluster} != {}\n{}",
            whole.dof(),
            context(r, a)
        ));
    }
    let k = r.k();
    for cut in (0..k - 1).filter(|&j| !r.has_cross(j)) {
        let (rl, al) = split(r, a, Cluster { start: 0, end: cut });
        let (rr, ar) = split(
            r,
            a,
            Cluster {
                start: cut + 1,
                end: k - 1,
            },
        );
        let left = schedule_network(&rl, &al).map_err(|e| e.to_string())?;
        let right = schedule_network(&rr, &ar).map_err(|e| e.to_string())?;
        let mut pairs = left.pairs();
        pairs.extend(right.pairs().into_iter().map(|(m, t)| (m + cut + 1, t + cut + 1)));
        if pairs != whole.pairs() {
            return Err(format!(
                "cut after user {} changes the schedule\n{}",
                cut + 1,
                context(r, a)
            ));
        }
    }
    Ok(())
}

/// Scheduling the first `m` users of a cluster leaves the decisions of
/// messages `1..=m-2` (1-based) unchanged.
pub fn check_prefix_stability(r: &NetworkRealization, a: &MessageAssignment) -> Check {
    for c in r.clusters() {
        let local = a.restrict_to(&c);
        let direct = &r.direct()[c.users()];
        let full = schedule_cluster(direct, local.sets()).map_err(|e| e.to_string())?;
        for m in 1..c.size() {
            let sub = local.restrict_to(&Cluster { start: 0, end: m - 1 });
            let head = schedule_cluster(&direct[..m], sub.sets()).map_err(|e| e.to_string())?;
            for i in 0..m.saturating_sub(2) {
                for t in i.saturating_sub(2)..=i + 1 {
                    if head.b(i, t) != full.b(i, t) {
                        return Err(format!(
                            "cluster {c}, prefix {m}: b[{}][{}] revised\n{}",
                            i + 1,
                            t + 1,
                            context(r, a)
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}

/// With the last transmitter switched off, it carries nothing.
pub fn check_deactivation(k: usize, p: f64, a: &MessageAssignment, trial_seed: u64) -> Check {
    let (r, a) = trial_instance(k, p, a, trial_seed, true).map_err(|e| e.to_string())?;
    if r.has_direct(k - 1) || a.sets().iter().any(|s| s.contains(k - 1)) {
        return Err(format!("transmitter {k} still present\n{}", context(&r, &a)));
    }
    let s = schedule_network(&r, &a).map_err(|e| e.to_string())?;
    if s.is_transmitter_active(k - 1) {
        return Err(format!("transmitter {k} active\n{}", context(&r, &a)));
    }
    let plan =
        build_transmit_signals(&s, &r.clone().with_generic_coefficients(trial_seed)).map_err(|e| e.to_string())?;
    if !plan.carried(k - 1).is_empty() {
        return Err(format!("transmitter {k} carries a signal\n{}", context(&r, &a)));
    }
    Ok(())
}

/// The numeric zero-forcing check on the scheduler's beamforming plan.
pub fn check_zero_forcing(r: &NetworkRealization, a: &MessageAssignment, coeff_seed: u64) -> Check {
    let r = r.clone().with_generic_coefficients(coeff_seed);
    let s = schedule_network(&r, a).map_err(|e| e.to_string())?;
    let plan = build_transmit_signals(&s, &r).map_err(|e| e.to_string())?;
    let report = verify_zero_forcing(&plan, &s, &r);
    if report.passed() && report.receivers.len() == s.dof() {
        Ok(())
    } else {
        Err(format!("{report}{}", context(&r, a)))
    }
}

/// A small random sweep configuration.
pub fn random_sweep_config(seed: u64, assignments: usize, points: usize, trials: u64) -> SweepConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs = (0..assignments)
        .map(|_| {
            let k = rng.random_range(3..=40);
            let den = rng.random_range(1..=k as u64);
            AssignmentSpec::new(k, Fraction::new(rng.random_range(0..=den), den).unwrap())
        })
        .collect();
    let mut cfg = SweepConfig::new(specs);
    let step = 1.0 / (points - 1).max(1) as f64;
    cfg.grid = PGrid {
        start: 0.0,
        end: 1.0,
        step,
    };
    cfg.trials = trials;
    cfg.master_seed = rng.random();
    cfg.deactivate_last = rng.random_bool(0.5);
    cfg.shared_realizations = rng.random_bool(0.5);
    cfg
}

/// The sweep CSV produced on a pool of `threads` workers.
pub fn sweep_bytes(cfg: &SweepConfig, threads: usize) -> Vec<u8> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let rows = pool.install(|| sweep(cfg, |_, _| {})).unwrap();
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, &rows).unwrap();
    buf
}
