//! Scheduler-versus-oracle equivalence checks.
//!
//! Every instance is compared against two exhaustive optima: the full
//! zero-forcing oracle, and the oracle restricted to schemes where each
//! transmitter delivers at most one message. The scheduler never lets a
//! transmitter deliver two messages, so only the first comparison can expose
//! schemes outside its search space.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::assignment::{build_assignment, random_assignment, Fraction, MessageAssignment};
use crate::error::{Error, Result};
use crate::network::{derive_seed, NetworkRealization};
use crate::oracle::{optimal_single_delivery_dof, optimal_zero_forcing_dof, pattern_realization, ORACLE_MAX_K};
use crate::scheduler::schedule_network;

/// A realization/assignment pair on which the scheduler and the oracle
/// disagree.
#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub realization: NetworkRealization,
    pub assignment: MessageAssignment,
    pub scheduler_dof: usize,
    pub oracle_dof: usize,
    pub single_delivery_dof: usize,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "realization {} scheduler {} oracle {} single-delivery oracle {}",
            self.realization, self.scheduler_dof, self.oracle_dof, self.single_delivery_dof
        )?;
        write!(f, "{}", self.assignment)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerificationReport {
    /// `(k, instances checked)` per network size.
    pub checked_by_k: Vec<(usize, u64)>,
    /// Instances where the scheduler falls short of the full oracle.
    pub mismatches: Vec<Mismatch>,
}

impl VerificationReport {
    pub fn checked(&self) -> u64 {
        self.checked_by_k.iter().map(|(_, n)| n).sum()
    }

    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }

    /// Instances where the scheduler also falls short of the
    /// single-delivery optimum.
    pub fn single_delivery_mismatches(&self) -> usize {
        self.mismatches
            .iter()
            .filter(|m| m.scheduler_dof != m.single_delivery_dof)
            .count()
    }

    /// Mismatches explained by a transmitter delivering two messages.
    pub fn double_delivery_gaps(&self) -> usize {
        self.mismatches.len() - self.single_delivery_mismatches()
    }

    fn add(&mut self, k: usize, n: u64) {
        match self.checked_by_k.iter_mut().find(|(x, _)| *x == k) {
            Some(e) => e.1 += n,
            None => {
                self.checked_by_k.push((k, n));
                self.checked_by_k.sort();
            }
        }
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, n) in &self.checked_by_k {
            writeln!(f, "K={k}: {n} instances")?;
        }
        writeln!(
            f,
            "checked {} instances, {} mismatches against the full oracle ({} explained by double delivery), {} against the single-delivery oracle",
            self.checked(),
            self.mismatches.len(),
            self.double_delivery_gaps(),
            self.single_delivery_mismatches()
        )?;
        for m in self.mismatches.iter().take(10) {
            writeln!(f, "---")?;
            write!(f, "{m}")?;
        }
        Ok(())
    }
}

fn check_k_max(k_max: usize) -> Result<()> {
    if k_max > ORACLE_MAX_K {
        return Err(Error::LimitExceeded {
            what: "k-max",
            requested: k_max,
            limit: ORACLE_MAX_K,
        });
    }
    if k_max < 3 {
        return Err(Error::param("k-max must be at least 3"));
    }
    Ok(())
}

fn compare(r: NetworkRealization, a: &MessageAssignment) -> Result<Option<Mismatch>> {
    let scheduler_dof = schedule_network(&r, a)?.dof();
    let oracle_dof = optimal_zero_forcing_dof(&r, a)?;
    if scheduler_dof == oracle_dof {
        return Ok(None);
    }
    let single_delivery_dof = optimal_single_delivery_dof(&r, a)?;
    Ok(Some(Mismatch {
        realization: r,
        assignment: a.clone(),
        scheduler_dof,
        oracle_dof,
        single_delivery_dof,
    }))
}

/// The assignments checked exhaustively at size `k`: the `f = 0` baseline,
/// the `f = 3/5` member, and `random` random assignments.
pub fn verification_family(k: usize, random: usize, seed: u64) -> Result<Vec<MessageAssignment>> {
    let mut family = vec![
        build_assignment(k, Fraction::ZERO)?,
        build_assignment(k, Fraction::new(3, 5)?)?,
    ];
    family.extend((0..random).map(|j| random_assignment(k, derive_seed(seed, (k * 1000 + j) as u64))));
    Ok(family)
}

/// Compares scheduler and oracle on every erasure pattern of every
/// `k in 3..=k_max`, for each assignment of [`verification_family`].
pub fn verify_exhaustive(k_max: usize, random_assignments: usize, seed: u64) -> Result<VerificationReport> {
    check_k_max(k_max)?;
    let mut report = VerificationReport::default();
    for k in 3..=k_max {
        let family = verification_family(k, random_assignments, seed)?;
        let patterns: u64 = 1 << (2 * k - 1);
        let mut found: Vec<Mismatch> = (0..patterns)
            .into_par_iter()
            .map(|bits| -> Result<Vec<Mismatch>> {
                let mut out = Vec::new();
                for a in &family {
                    if let Some(m) = compare(pattern_realization(k, bits), a)? {
                        out.push(m);
                    }
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        report.add(k, patterns * family.len() as u64);
        report.mismatches.append(&mut found);
    }
    Ok(report)
}

/// Compares scheduler and oracle on `trials` random instances with
/// `k` uniform in `k_min..=k_max`, `p` uniform in `[0, 1]` and a random or
/// family assignment.
pub fn verify_random(k_min: usize, k_max: usize, trials: u64, seed: u64) -> Result<VerificationReport> {
    check_k_max(k_max)?;
    if k_min < 3 || k_min > k_max {
        return Err(Error::param(format!("bad size range {k_min}..={k_max}")));
    }
    let results: Vec<(usize, Option<Mismatch>)> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<(usize, Option<Mismatch>)> {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t));
            let k = rng.random_range(k_min..=k_max);
            let p: f64 = rng.random();
            let r = NetworkRealization::sample(k, p, rng.random())?;
            let a = match rng.random_range(0..4) {
                0 => build_assignment(k, Fraction::ZERO)?,
                1 => {
                    let num = rng.random_range(0..=k as u64);
                    build_assignment(k, Fraction::new(num, k as u64)?)?
                }
                _ => random_assignment(k, rng.random()),
            };
            Ok((k, compare(r, &a)?))
        })
        .collect::<Result<_>>()?;
    let mut report = VerificationReport::default();
    for (k, m) in results {
        report.add(k, 1);
        report.mismatches.extend(m);
    }
    Ok(report)
}
