//! Optimal zero-forcing scheduling for a given message assignment.
//!
//! Messages are visited in order inside each cluster. Message `i` is sent
//! from transmitter `i - 1` when that does not disturb an earlier active
//! receiver (possibly with a cancellation copy from transmitter `i - 2`),
//! otherwise from transmitter `i` (possibly with transmitter `i` cancelling
//! the previous message at receiver `i`). Decisions are never revisited.
//!
//! Each decision is a flag `b[i][j]` for `j` in `{i-2, i-1, i, i+1}`:
//! `i-1` and `i` are delivery paths, `i-2` and `i+1` carry cancellation
//! copies of `W_i`.

use std::fmt;

use num_complex::Complex64;

use crate::assignment::{MessageAssignment, TransmitSet};
use crate::error::{Error, Result};
use crate::network::NetworkRealization;

/// Smallest acceptable magnitude of a delivered message at its receiver.
pub const MIN_DESIRED_MAGNITUDE: f64 = 1e-6;
/// Largest acceptable interference magnitude relative to the desired one.
pub const MAX_RELATIVE_INTERFERENCE: f64 = 1e-9;

const TWO_BEFORE: u8 = 1;
const BEFORE: u8 = 2;
const OWN: u8 = 4;
const AFTER: u8 = 8;

fn offset_flag(message: usize, tx: usize) -> Option<u8> {
    match tx as isize - message as isize {
        -2 => Some(TWO_BEFORE),
        -1 => Some(BEFORE),
        0 => Some(OWN),
        1 => Some(AFTER),
        _ => None,
    }
}

/// The decision matrix of a zero-forcing scheme.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Schedule {
    flags: Vec<u8>,
}

impl Schedule {
    pub fn empty(k: usize) -> Self {
        Self { flags: vec![0; k] }
    }

    pub fn k(&self) -> usize {
        self.flags.len()
    }

    /// `b[message][tx]`; false outside the four-transmitter window or the
    /// network.
    pub fn b(&self, message: usize, tx: usize) -> bool {
        match (self.flags.get(message), offset_flag(message, tx)) {
            (Some(&f), Some(bit)) => tx < self.k() && f & bit != 0,
            _ => false,
        }
    }

    fn set(&mut self, message: usize, tx: usize) {
        let bit = offset_flag(message, tx).expect("decision outside the message window");
        self.flags[message] |= bit;
    }

    pub fn is_delivered(&self, message: usize) -> bool {
        self.flags.get(message).is_some_and(|f| f & (BEFORE | OWN) != 0)
    }

    pub fn delivered(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.k()).filter(|&i| self.is_delivered(i))
    }

    /// Number of messages delivered interference-free.
    pub fn dof(&self) -> usize {
        self.delivered().count()
    }

    /// All `(message, transmitter)` pairs with `b = 1`, 0-based.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for m in 0..self.k() {
            for tx in m.saturating_sub(2)..=(m + 1) {
                if self.b(m, tx) {
                    out.push((m, tx));
                }
            }
        }
        out
    }

    pub fn is_transmitter_active(&self, tx: usize) -> bool {
        (tx.saturating_sub(1)..=tx + 2).any(|m| self.b(m, tx))
    }

    /// Transmitters emitting any signal.
    pub fn active_transmitters(&self) -> Vec<usize> {
        let mut tx: Vec<usize> = self.pairs().into_iter().map(|(_, t)| t).collect();
        tx.sort_unstable();
        tx.dedup();
        tx
    }

    /// Checks the structural invariants of a schedule against the
    /// assignment it was built from.
    pub fn check_invariants(&self, a: &MessageAssignment) -> Result<()> {
        let fail = |msg: String| Err(Error::Invariant(msg));
        if a.k() != self.k() {
            return fail(format!("schedule has {} users, assignment {}", self.k(), a.k()));
        }
        for (m, tx) in self.pairs() {
            if !a.set(m).contains(tx) {
                return fail(format!(
                    "b[{}][{}] set but {} is not in T_{}",
                    m + 1,
                    tx + 1,
                    tx + 1,
                    m + 1
                ));
            }
        }
        for i in 0..self.k() {
            let own = self.b(i, i);
            let prev = i >= 1 && self.b(i, i - 1);
            if own && prev {
                return fail(format!("message {} has two delivery paths", i + 1));
            }
            if i >= 2 && self.b(i, i - 2) && !prev {
                return fail(format!("b[{0}][{0}-2] without delivery via {0}-1", i + 1));
            }
            if self.b(i, i + 1) && !(own && self.b(i + 1, i + 1)) {
                return fail(format!("b[{0}][{0}+1] without b[{0}][{0}] and b[{0}+1][{0}+1]", i + 1));
            }
        }
        Ok(())
    }
}

/// Runs the decision pass on one cluster.
///
/// All cross links inside the cluster are taken as present; only the direct
/// links are read from `direct`. Indices are local to the cluster.
pub fn schedule_cluster(direct: &[bool], sets: &[TransmitSet]) -> Result<Schedule> {
    let n = direct.len();
    if sets.len() != n {
        return Err(Error::param(format!(
            "cluster of {n} users given {} transmit sets",
            sets.len()
        )));
    }
    if let Some((m, t)) = sets
        .iter()
        .enumerate()
        .find_map(|(m, s)| s.iter().find(|&t| t >= n).map(|t| (m, t)))
    {
        return Err(Error::param(format!(
            "message {} references transmitter {} outside the cluster",
            m + 1,
            t + 1
        )));
    }

    let mut s = Schedule::empty(n);
    if n == 0 {
        return Ok(s);
    }
    // Reads with out-of-range indices (negative offsets) are false.
    let b = |s: &Schedule, m: isize, tx: isize| m >= 0 && tx >= 0 && s.b(m as usize, tx as usize);
    let knows = |m: usize, tx: usize| sets[m].contains(tx);

    if direct[0] && knows(0, 0) {
        s.set(0, 0);
    }

    if n >= 2 {
        if knows(1, 0) && !s.b(0, 0) {
            s.set(1, 0);
        } else if direct[1] && knows(1, 1) {
            if !s.b(0, 0) {
                s.set(1, 1);
            } else if knows(0, 1) {
                s.set(1, 1);
                s.set(0, 1);
            }
        }
    }

    for i in 2..n {
        let ii = i as isize;

        // Deliver from transmitter i-1.
        if knows(i, i - 1) && !s.b(i - 1, i - 1) {
            if !direct[i - 1] || !s.b(i - 1, i - 2) {
                s.set(i, i - 1);
            } else if knows(i, i - 2) && (!direct[i - 2] || (!s.b(i - 2, i - 2) && !b(&s, ii - 2, ii - 3))) {
                s.set(i, i - 1);
                s.set(i, i - 2);
            }
        }

        // Deliver from transmitter i.
        if direct[i] && knows(i, i) && !s.b(i, i - 1) && !s.b(i - 2, i - 1) {
            if !s.b(i - 1, i - 1) {
                s.set(i, i);
            } else if knows(i - 1, i) {
                s.set(i, i);
                s.set(i - 1, i);
            }
        }
    }
    Ok(s)
}

/// Schedules a whole network: each cluster is scheduled on its own with the
/// out-of-cluster transmitters dropped from the transmit sets, and the
/// results are merged back into global indices.
pub fn schedule_network(r: &NetworkRealization, a: &MessageAssignment) -> Result<Schedule> {
    if r.k() != a.k() {
        return Err(Error::param(format!(
            "realization has {} users, assignment {}",
            r.k(),
            a.k()
        )));
    }
    let mut global = Schedule::empty(r.k());
    for c in r.clusters() {
        let local = a.restrict_to(&c);
        let s = schedule_cluster(&r.direct()[c.users()], local.sets())?;
        global.flags[c.users()].copy_from_slice(&s.flags);
    }
    Ok(global)
}

/// Complex weight of each message carried by each transmitter.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingPlan {
    carried: Vec<Vec<(usize, Complex64)>>,
}

impl BeamformingPlan {
    /// A plan from explicit per-transmitter `(message, weight)` lists.
    pub fn from_carried(mut carried: Vec<Vec<(usize, Complex64)>>) -> Self {
        for list in &mut carried {
            list.sort_by_key(|(m, _)| *m);
        }
        Self { carried }
    }

    pub fn k(&self) -> usize {
        self.carried.len()
    }

    /// `(message, weight)` pairs carried by `tx`, sorted by message.
    pub fn carried(&self, tx: usize) -> &[(usize, Complex64)] {
        &self.carried[tx]
    }

    pub fn weight(&self, tx: usize, message: usize) -> Complex64 {
        self.carried[tx]
            .iter()
            .find(|(m, _)| *m == message)
            .map(|(_, w)| *w)
            .unwrap_or_default()
    }

    /// Overwrites (or inserts) a weight.
    pub fn set_weight(&mut self, tx: usize, message: usize, w: Complex64) {
        let list = &mut self.carried[tx];
        match list.iter_mut().find(|(m, _)| *m == message) {
            Some(entry) => entry.1 = w,
            None => {
                list.push((message, w));
                list.sort_by_key(|(m, _)| *m);
            }
        }
    }
}

/// Turns a schedule into transmit weights: delivery copies get weight 1,
/// cancellation copies get the gain ratio that zeroes the interfering
/// message at the protected receiver.
pub fn build_transmit_signals(s: &Schedule, r: &NetworkRealization) -> Result<BeamformingPlan> {
    if !r.has_coefficients() {
        return Err(Error::param("channel gains are required to build transmit signals"));
    }
    if r.k() != s.k() {
        return Err(Error::param("schedule and realization sizes differ"));
    }
    let gain = |rx: usize, tx: usize| -> Result<Complex64> {
        if !r.has_link(rx, tx) {
            return Err(Error::Invariant(format!(
                "cancellation needs link from transmitter {} to receiver {}, which is erased",
                tx + 1,
                rx + 1
            )));
        }
        Ok(r.gain(rx, tx).expect("gains are attached"))
    };

    let one = Complex64::new(1.0, 0.0);
    let mut carried = vec![Vec::new(); s.k()];
    for (t, list) in carried.iter_mut().enumerate() {
        if s.b(t, t) {
            list.push((t, one));
        }
        if s.b(t + 1, t) {
            list.push((t + 1, one));
        }
        // W_{t-1} zeroed at receiver t.
        if t >= 1 && s.b(t - 1, t) {
            list.push((t - 1, -gain(t, t - 1)? / gain(t, t)?));
        }
        // W_{t+2} zeroed at receiver t+1.
        if s.b(t + 2, t) {
            list.push((t + 2, -gain(t + 1, t + 1)? / gain(t + 1, t)?));
        }
        list.sort_by_key(|(m, _)| *m);
    }
    Ok(BeamformingPlan { carried })
}

/// Residuals observed at one active receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverCheck {
    pub receiver: usize,
    /// `|net coefficient of the desired message|`.
    pub desired: f64,
    /// Largest interfering magnitude divided by `desired`, with the message
    /// responsible.
    pub worst_interference: f64,
    pub worst_interferer: Option<usize>,
}

impl ReceiverCheck {
    pub fn passes(&self) -> bool {
        self.desired >= MIN_DESIRED_MAGNITUDE && self.worst_interference <= MAX_RELATIVE_INTERFERENCE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroForcingReport {
    pub receivers: Vec<ReceiverCheck>,
}

impl ZeroForcingReport {
    pub fn passed(&self) -> bool {
        self.receivers.iter().all(ReceiverCheck::passes)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReceiverCheck> {
        self.receivers.iter().filter(|c| !c.passes())
    }
}

impl fmt::Display for ZeroForcingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.receivers.is_empty() {
            return writeln!(f, "no active receivers");
        }
        for c in &self.receivers {
            write!(
                f,
                "rx {}: desired {:.3e}, residual {:.3e}",
                c.receiver + 1,
                c.desired,
                c.worst_interference
            )?;
            if let Some(m) = c.worst_interferer {
                write!(f, " (W_{})", m + 1)?;
            }
            writeln!(f, " {}", if c.passes() { "ok" } else { "FAIL" })?;
        }
        Ok(())
    }
}

/// Computes the net coefficient of every message at every active receiver
/// and checks that the desired message survives and everything else cancels.
pub fn verify_zero_forcing(plan: &BeamformingPlan, s: &Schedule, r: &NetworkRealization) -> ZeroForcingReport {
    verify_receivers(plan, s.delivered(), r)
}

/// [`verify_zero_forcing`] for an arbitrary set of active receivers.
pub fn verify_receivers(
    plan: &BeamformingPlan,
    active: impl IntoIterator<Item = usize>,
    r: &NetworkRealization,
) -> ZeroForcingReport {
    let mut receivers = Vec::new();
    for rx in active {
        let mut net: Vec<(usize, Complex64)> = Vec::new();
        for tx in rx.saturating_sub(1)..=rx {
            let h = r.gain(rx, tx).unwrap_or_default();
            if h.norm() == 0.0 || tx >= plan.k() {
                continue;
            }
            for &(m, w) in plan.carried(tx) {
                match net.iter_mut().find(|(x, _)| *x == m) {
                    Some(e) => e.1 += h * w,
                    None => net.push((m, h * w)),
                }
            }
        }
        let desired = net.iter().find(|(m, _)| *m == rx).map(|(_, c)| c.norm()).unwrap_or(0.0);
        let mut worst_interference = 0.0;
        let mut worst_interferer = None;
        for &(m, c) in net.iter().filter(|(m, _)| *m != rx) {
            let rel = if desired > 0.0 {
                c.norm() / desired
            } else if c.norm() > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            if rel > worst_interference || worst_interferer.is_none() {
                worst_interference = rel;
                worst_interferer = Some(m);
            }
        }
        receivers.push(ReceiverCheck {
            receiver: rx,
            desired,
            worst_interference,
            worst_interferer,
        });
    }
    ZeroForcingReport { receivers }
}
