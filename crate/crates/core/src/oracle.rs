//! Brute-force ground truth for zero-forcing DoF.
//!
//! Feasibility is decided combinatorially under generic channel gains. A
//! message's signal reaches every receiver connected to one of its carriers.
//! With one carrier nothing can be cancelled. Two carriers give one free
//! relative weight, so they can null the message at a single receiver that
//! both of them reach. Carriers of undelivered messages only add
//! interference, so the search only assigns carriers to delivered messages.
//! For a fixed delivered set each message can then be checked on its own.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::assignment::{MessageAssignment, TransmitSet};
use crate::error::{Error, Result};
use crate::network::{check_probability, NetworkRealization};
use crate::scheduler::{schedule_network, BeamformingPlan};

/// Largest network the oracle will search.
pub const ORACLE_MAX_K: usize = 10;
/// Largest network for exact expectation with the scheduler engine.
pub const EXACT_SCHEDULER_MAX_K: usize = 12;
/// Largest network for exact expectation with the oracle engine.
pub const EXACT_ORACLE_MAX_K: usize = 7;

/// A candidate zero-forcing scheme: the delivered set and, per message, the
/// transmitters emitting a copy of it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CarrierConfig {
    pub delivered: Vec<bool>,
    pub carriers: Vec<TransmitSet>,
}

impl CarrierConfig {
    pub fn silent(k: usize) -> Self {
        Self {
            delivered: vec![false; k],
            carriers: vec![TransmitSet::EMPTY; k],
        }
    }

    pub fn dof(&self) -> usize {
        self.delivered.iter().filter(|&&d| d).count()
    }

    /// Carriers drawn from the transmit sets, and none for undelivered
    /// messages.
    pub fn respects(&self, a: &MessageAssignment) -> bool {
        self.carriers.len() == a.k()
            && self
                .carriers
                .iter()
                .enumerate()
                .all(|(m, c)| c.iter().all(|t| a.set(m).contains(t)) && (self.delivered[m] || c.is_empty()))
    }
}

/// Whether message `m` with carriers `c` is decodable at its own receiver
/// (when delivered) and harmless at every other active receiver.
fn message_ok(m: usize, c: TransmitSet, is_delivered: impl Fn(usize) -> bool, r: &NetworkRealization) -> bool {
    if is_delivered(m) {
        let reaches_own = c.iter().any(|t| (t == m || t + 1 == m) && r.has_link(m, t));
        if !reaches_own {
            return false;
        }
    }
    let mut hit: Option<usize> = None;
    for t in c.iter() {
        for rx in [t, t + 1] {
            if rx == m || rx >= r.k() || !is_delivered(rx) || !r.has_link(rx, t) {
                continue;
            }
            match hit {
                Some(prev) if prev != rx => return false,
                _ => hit = Some(rx),
            }
        }
    }
    match hit {
        None => true,
        Some(rx) => c.len() == 2 && c.iter().all(|t| r.has_link(rx, t)),
    }
}

/// Generic-gain zero-forcing feasibility of a carrier configuration.
pub fn feasible(cfg: &CarrierConfig, r: &NetworkRealization) -> bool {
    let k = r.k();
    if cfg.delivered.len() != k || cfg.carriers.len() != k {
        return false;
    }
    let is_delivered = |i: usize| cfg.delivered[i];
    (0..k).all(|m| message_ok(m, cfg.carriers[m], is_delivered, r))
}

/// Nonempty subsets of a transmit set.
fn carrier_choices(t: TransmitSet) -> impl Iterator<Item = TransmitSet> {
    let s = t.as_slice().to_vec();
    let mut out = Vec::with_capacity(3);
    for &x in &s {
        out.push(TransmitSet::new(&[x]).unwrap());
    }
    if s.len() == 2 {
        out.push(t);
    }
    out.into_iter()
}

fn check_oracle_size(k: usize) -> Result<()> {
    if k > ORACLE_MAX_K {
        return Err(Error::LimitExceeded {
            what: "oracle K",
            requested: k,
            limit: ORACLE_MAX_K,
        });
    }
    Ok(())
}

/// A maximum-DoF feasible configuration found by exhaustive search.
pub fn optimal_configuration(r: &NetworkRealization, a: &MessageAssignment) -> Result<CarrierConfig> {
    let k = r.k();
    check_oracle_size(k)?;
    if a.k() != k {
        return Err(Error::param("realization and assignment sizes differ"));
    }
    let mut best = CarrierConfig::silent(k);
    let mut best_dof = 0;
    for mask in 1u32..(1 << k) {
        let size = mask.count_ones() as usize;
        if size <= best_dof {
            continue;
        }
        let is_delivered = |i: usize| mask >> i & 1 == 1;
        let mut carriers = vec![TransmitSet::EMPTY; k];
        let ok = (0..k).filter(|&m| is_delivered(m)).all(|m| {
            match carrier_choices(a.set(m)).find(|&c| message_ok(m, c, is_delivered, r)) {
                Some(c) => {
                    carriers[m] = c;
                    true
                }
                None => false,
            }
        });
        if ok {
            best_dof = size;
            best = CarrierConfig {
                delivered: (0..k).map(is_delivered).collect(),
                carriers,
            };
        }
    }
    Ok(best)
}

/// Maximum zero-forcing DoF over all carrier configurations.
pub fn optimal_zero_forcing_dof(r: &NetworkRealization, a: &MessageAssignment) -> Result<usize> {
    Ok(optimal_configuration(r, a)?.dof())
}

/// Like [`optimal_zero_forcing_dof`], restricted to schemes in which no
/// transmitter delivers more than one message: a transmitter counts as
/// delivering `W_m` when it carries `W_m` over a present link to receiver
/// `m`. Cancellation copies are unrestricted.
pub fn optimal_single_delivery_dof(r: &NetworkRealization, a: &MessageAssignment) -> Result<usize> {
    let k = r.k();
    check_oracle_size(k)?;
    if a.k() != k {
        return Err(Error::param("realization and assignment sizes differ"));
    }

    fn assign(idx: usize, options: &[Vec<u32>], used: u32) -> bool {
        match options.get(idx) {
            None => true,
            Some(opts) => opts
                .iter()
                .any(|&d| d & used == 0 && assign(idx + 1, options, used | d)),
        }
    }

    let mut best = 0;
    for mask in 1u32..(1 << k) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let is_delivered = |i: usize| mask >> i & 1 == 1;
        // Per delivered message, the delivering-transmitter bitmask of each
        // valid carrier choice.
        let options: Vec<Vec<u32>> = (0..k)
            .filter(|&m| is_delivered(m))
            .map(|m| {
                carrier_choices(a.set(m))
                    .filter(|&c| message_ok(m, c, is_delivered, r))
                    .map(|c| c.iter().filter(|&t| r.has_link(m, t)).fold(0u32, |acc, t| acc | 1 << t))
                    .collect()
            })
            .collect();
        if options.iter().all(|o| !o.is_empty()) && assign(0, &options, 0) {
            best = size;
        }
    }
    Ok(best)
}

/// Explicit beamforming weights realizing a feasible configuration: a pair
/// of carriers that must null the message at receiver `z` gets weights
/// `(H[z][t2], -H[z][t1])`, every other carrier weight 1.
pub fn witness_plan(cfg: &CarrierConfig, r: &NetworkRealization) -> Result<BeamformingPlan> {
    if !r.has_coefficients() {
        return Err(Error::param("channel gains are required to build a witness plan"));
    }
    let k = r.k();
    let gain = |rx: usize, tx: usize| r.gain(rx, tx).unwrap_or_default();
    let mut carried = vec![Vec::new(); k];
    for (m, c) in cfg.carriers.iter().enumerate() {
        let null_at = c
            .iter()
            .flat_map(|t| [t, t + 1])
            .find(|&rx| rx != m && rx < k && cfg.delivered[rx] && c.iter().any(|t| r.has_link(rx, t)));
        match (c.as_slice(), null_at) {
            (&[t1, t2], Some(z)) => {
                carried[t1].push((m, gain(z, t2)));
                carried[t2].push((m, -gain(z, t1)));
            }
            (ts, _) => {
                for &t in ts {
                    carried[t].push((m, Complex64::new(1.0, 0.0)));
                }
            }
        }
    }
    Ok(BeamformingPlan::from_carried(carried))
}

/// Which DoF computation the exhaustive expectation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Scheduler,
    Oracle,
}

impl Engine {
    fn limit(self) -> usize {
        match self {
            Engine::Scheduler => EXACT_SCHEDULER_MAX_K,
            Engine::Oracle => EXACT_ORACLE_MAX_K,
        }
    }
}

/// Realization for erasure pattern `bits`: bit `2i` is `direct[i]`, bit
/// `2i + 1` is `cross[i]`; a set bit means the link is present.
pub fn pattern_realization(k: usize, bits: u64) -> NetworkRealization {
    let direct = (0..k).map(|i| bits >> (2 * i) & 1 == 1).collect();
    let cross = (0..k.saturating_sub(1)).map(|i| bits >> (2 * i + 1) & 1 == 1).collect();
    NetworkRealization::new(direct, cross).expect("pattern sizes are consistent")
}

/// Applies last-transmitter deactivation to a realization/assignment pair.
pub fn deactivate_last(r: &NetworkRealization, a: &MessageAssignment) -> (NetworkRealization, MessageAssignment) {
    (r.without_last_transmitter(), a.without_transmitter(a.k() - 1))
}

/// DoF summed over all erasure patterns, grouped by number of erased links:
/// entry `j` is the total DoF of the patterns with exactly `j` of the
/// `2K - 1` links erased.
pub fn dof_by_erasures(a: &MessageAssignment, engine: Engine, deactivate: bool) -> Result<Vec<u64>> {
    let k = a.k();
    if k > engine.limit() {
        return Err(Error::LimitExceeded {
            what: "exact expectation K",
            requested: k,
            limit: engine.limit(),
        });
    }
    let links = 2 * k - 1;
    let total: u64 = 1 << links;
    let a_eff = if deactivate {
        a.without_transmitter(k - 1)
    } else {
        a.clone()
    };

    let counts = (0..total)
        .into_par_iter()
        .try_fold(
            || vec![0u64; links + 1],
            |mut acc, bits| -> Result<Vec<u64>> {
                let mut r = pattern_realization(k, bits);
                let erased = r.absent_links();
                if deactivate {
                    r = r.without_last_transmitter();
                }
                let dof = match engine {
                    Engine::Scheduler => schedule_network(&r, &a_eff)?.dof(),
                    Engine::Oracle => optimal_zero_forcing_dof(&r, &a_eff)?,
                };
                acc[erased] += dof as u64;
                Ok(acc)
            },
        )
        .try_reduce(
            || vec![0u64; links + 1],
            |mut x, y| {
                x.iter_mut().zip(&y).for_each(|(a, b)| *a += b);
                Ok(x)
            },
        )?;
    Ok(counts)
}

/// Evaluates `sum_j counts[j] * p^j * (1-p)^(n-j)`.
pub fn evaluate_erasure_polynomial(counts: &[u64], p: f64) -> f64 {
    let n = counts.len() - 1;
    counts
        .iter()
        .enumerate()
        .map(|(j, &c)| c as f64 * p.powi(j as i32) * (1.0 - p).powi((n - j) as i32))
        .sum()
}

/// Expected DoF over erasures, computed exactly by enumerating all `2^(2K-1)`
/// erasure patterns.
pub fn exact_expected_dof(k: usize, p: f64, a: &MessageAssignment, engine: Engine, deactivate: bool) -> Result<f64> {
    check_probability(p)?;
    if a.k() != k {
        return Err(Error::param(format!("assignment has {} users, expected {k}", a.k())));
    }
    let counts = dof_by_erasures(a, engine, deactivate)?;
    Ok(evaluate_erasure_polynomial(&counts, p))
}
