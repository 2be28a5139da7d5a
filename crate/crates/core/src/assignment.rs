//! Message assignments: which transmitters know which message.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::network::Cluster;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// An exact fraction in `[0, 1]`, kept in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fraction {
    num: u64,
    den: u64,
}

impl Fraction {
    pub const ZERO: Fraction = Fraction { num: 0, den: 1 };

    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::param("fraction denominator must be at least 1"));
        }
        if num > den {
            return Err(Error::param(format!("fraction {num}/{den} exceeds 1")));
        }
        let g = gcd(num, den).max(1);
        Ok(Self {
            num: num / g,
            den: den / g,
        })
    }

    pub fn numerator(&self) -> u64 {
        self.num
    }

    pub fn denominator(&self) -> u64 {
        self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Accepts `num/den` or a bare integer; decimals are rejected.
impl FromStr for Fraction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let int = |t: &str, what: &str| -> Result<u64> {
            t.trim()
                .parse::<u64>()
                .map_err(|_| Error::parse("fraction", format!("{what} `{t}` is not a non-negative integer")))
        };
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (int(n, "numerator")?, int(d, "denominator")?),
            None => (int(s, "value")?, 1),
        };
        Fraction::new(num, den).map_err(|e| Error::parse("fraction", e.to_string()))
    }
}

/// Up to two distinct transmitters, stored sorted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct TransmitSet {
    members: [usize; 2],
    len: u8,
}

impl TransmitSet {
    pub const EMPTY: TransmitSet = TransmitSet {
        members: [0; 2],
        len: 0,
    };

    pub fn new(members: &[usize]) -> Result<Self> {
        let mut set = Self::EMPTY;
        for &t in members {
            set.insert(t)?;
        }
        Ok(set)
    }

    pub fn pair(a: usize, b: usize) -> Self {
        Self::new(&[a, b]).expect("two transmitters always fit")
    }

    /// Adds `t`; a no-op if already present, an error if the set is full.
    pub fn insert(&mut self, t: usize) -> Result<()> {
        if self.contains(t) {
            return Ok(());
        }
        if self.len == 2 {
            return Err(Error::param(format!(
                "a message can be known by at most two transmitters; cannot add {} to {self}",
                t + 1
            )));
        }
        self.members[self.len as usize] = t;
        self.len += 1;
        if self.len == 2 && self.members[0] > self.members[1] {
            self.members.swap(0, 1);
        }
        Ok(())
    }

    pub fn remove(&mut self, t: usize) {
        let kept: Vec<usize> = self.iter().filter(|&x| x != t).collect();
        *self = Self::new(&kept).expect("removal cannot overflow");
    }

    pub fn contains(&self, t: usize) -> bool {
        self.as_slice().contains(&t)
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.members[..self.len as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.as_slice().iter().copied()
    }
}

impl fmt::Display for TransmitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("-");
        }
        let parts: Vec<String> = self.iter().map(|t| (t + 1).to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// Per-message transmit sets for a `K`-user network.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MessageAssignment {
    sets: Vec<TransmitSet>,
}

impl MessageAssignment {
    pub fn new(sets: Vec<TransmitSet>) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::param("an assignment needs at least one message"));
        }
        let k = sets.len();
        for (i, s) in sets.iter().enumerate() {
            if let Some(t) = s.iter().find(|&t| t >= k) {
                return Err(Error::param(format!(
                    "message {} is assigned to transmitter {} outside [1, {k}]",
                    i + 1,
                    t + 1
                )));
            }
        }
        Ok(Self { sets })
    }

    /// Every message known only at its own transmitter.
    pub fn own_only(k: usize) -> Result<Self> {
        Self::new((0..k).map(|i| TransmitSet::new(&[i]).unwrap()).collect())
    }

    pub fn k(&self) -> usize {
        self.sets.len()
    }

    pub fn sets(&self) -> &[TransmitSet] {
        &self.sets
    }

    pub fn set(&self, message: usize) -> TransmitSet {
        self.sets[message]
    }

    /// Fraction of messages that know exactly one of the two transmitters
    /// connected to their receiver plus one helper that is not connected.
    pub fn helper_fraction(&self) -> Fraction {
        let count = self
            .sets
            .iter()
            .enumerate()
            .filter(|(i, s)| {
                let connected = s.iter().filter(|&t| t == *i || t + 1 == *i).count();
                connected == 1 && s.len() == 2
            })
            .count();
        Fraction::new(count as u64, self.k() as u64).expect("count never exceeds K")
    }

    /// Restricts the assignment to the messages of `cluster`, dropping
    /// transmitters outside it and re-indexing users from 0.
    pub fn restrict_to(&self, cluster: &Cluster) -> MessageAssignment {
        let sets = cluster
            .users()
            .map(|m| {
                let local: Vec<usize> = self.sets[m]
                    .iter()
                    .filter(|&t| cluster.contains(t))
                    .map(|t| t - cluster.start)
                    .collect();
                TransmitSet::new(&local).unwrap()
            })
            .collect();
        MessageAssignment { sets }
    }

    /// The assignment with transmitter `tx` removed from every transmit set.
    pub fn without_transmitter(&self, tx: usize) -> MessageAssignment {
        let mut sets = self.sets.clone();
        for s in &mut sets {
            s.remove(tx);
        }
        MessageAssignment { sets }
    }

    /// Same assignment with `tx` added to message `message`'s transmit set.
    pub fn with_added(&self, message: usize, tx: usize) -> Result<MessageAssignment> {
        let mut sets = self.sets.clone();
        sets[message].insert(tx)?;
        MessageAssignment::new(sets)
    }
}

/// One line per message, `i: t1,t2` (1-based, `-` for an empty set).
impl fmt::Display for MessageAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.sets.iter().enumerate() {
            writeln!(f, "{}: {s}", i + 1)?;
        }
        Ok(())
    }
}

impl FromStr for MessageAssignment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut sets = Vec::new();
        for (lineno, line) in s.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let field = || format!("assignment line {}", lineno + 1);
            let (idx, rest) = line
                .split_once(':')
                .ok_or_else(|| Error::parse(field(), "expected `i: t1[,t2]`"))?;
            let idx: usize = idx
                .trim()
                .parse()
                .map_err(|_| Error::parse(field(), format!("bad message index `{}`", idx.trim())))?;
            if idx != sets.len() + 1 {
                return Err(Error::parse(
                    field(),
                    format!("expected message {}, found {idx}", sets.len() + 1),
                ));
            }
            let rest = rest.trim();
            let mut members = Vec::new();
            if rest != "-" && !rest.is_empty() {
                for t in rest.split(',') {
                    let t: usize = t
                        .trim()
                        .parse()
                        .ok()
                        .filter(|&t: &usize| t >= 1)
                        .ok_or_else(|| Error::parse(field(), format!("bad transmitter `{}`", t.trim())))?;
                    members.push(t - 1);
                }
            }
            let set = TransmitSet::new(&members).map_err(|e| Error::parse(field(), e.to_string()))?;
            sets.push(set);
        }
        MessageAssignment::new(sets)
    }
}

/// Which row of the piecewise assignment rule produced a transmit set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    First,
    Last,
    /// Strided rows `1 + n * stride` that get a forward helper.
    Strided,
    /// Even rows `2n` that get a forward helper.
    Even,
    Otherwise,
}

/// The row rules matching each message, in listing order. Rows with more than
/// one entry are conflicts; the first entry wins.
pub fn assignment_rules(k: usize, f: Fraction) -> Result<Vec<Vec<Rule>>> {
    if k < 3 {
        return Err(Error::param(format!("the assignment family needs k >= 3, got {k}")));
    }
    let kk = k as i64;
    let num = f.numerator() as i64;
    let den = f.denominator() as i64;
    let mut rules = vec![Vec::new(); k];
    rules[0].push(Rule::First);
    rules[k - 1].push(Rule::Last);

    // n in {1, .., min(f*K - 2, floor(K/2 - 1))}; the stride is only
    // evaluated for a non-empty range, where f*K >= 3.
    let strided_max = ((num * kk).div_euclid(den) - 2).min(kk / 2 - 1);
    if strided_max >= 1 {
        let stride = (kk * den / (num * kk - den)).max(2);
        for n in 1..=strided_max {
            let i = 1 + n * stride;
            if i <= kk {
                rules[(i - 1) as usize].push(Rule::Strided);
            }
        }
    }

    // n in {1, .., ceil((f - 1/2) * K) - 1}
    let even_max = -(-(2 * num - den) * kk).div_euclid(2 * den) - 1;
    for n in 1..=even_max {
        let i = 2 * n;
        if i <= kk {
            rules[(i - 1) as usize].push(Rule::Even);
        }
    }

    for r in &mut rules {
        if r.is_empty() {
            r.push(Rule::Otherwise);
        }
    }
    Ok(rules)
}

/// Users (0-based) matched by more than one row of the piecewise rule.
pub fn conflicting_rows(k: usize, f: Fraction) -> Result<Vec<usize>> {
    Ok(assignment_rules(k, f)?
        .iter()
        .enumerate()
        .filter(|(_, r)| r.len() > 1)
        .map(|(i, _)| i)
        .collect())
}

/// The parameterized assignment family: a fraction `f` of the messages get
/// one connected transmitter plus a helper, the rest get both connected
/// transmitters. Evaluated with exact integer arithmetic.
pub fn build_assignment(k: usize, f: Fraction) -> Result<MessageAssignment> {
    let rules = assignment_rules(k, f)?;
    let mut sets = Vec::with_capacity(k);
    for (i, matched) in rules.iter().enumerate() {
        if matched.len() > 1 {
            log::warn!(
                "K={k},f={f}: message {} matches rules {matched:?}; using {:?}",
                i + 1,
                matched[0]
            );
        }
        let set = match matched[0] {
            Rule::First => TransmitSet::pair(0, 1),
            Rule::Last => TransmitSet::pair(k - 3, k - 2),
            Rule::Strided | Rule::Even => TransmitSet::pair(i, i + 1),
            Rule::Otherwise => TransmitSet::pair(i - 1, i),
        };
        sets.push(set);
    }
    MessageAssignment::new(sets)
}

/// A random assignment with `|T_i| <= 2`, mostly near the message's own
/// transmitters but with occasional far-away placements.
pub fn random_assignment(k: usize, seed: u64) -> MessageAssignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sets = (0..k)
        .map(|i| {
            let size = match rng.random_range(0..20) {
                0 => 0,
                1..=4 => 1,
                _ => 2,
            };
            let mut set = TransmitSet::EMPTY;
            while set.len() < size.min(k) {
                let t = if rng.random_bool(0.75) {
                    let lo = i.saturating_sub(2);
                    let hi = (i + 1).min(k - 1);
                    rng.random_range(lo..=hi)
                } else {
                    rng.random_range(0..k)
                };
                set.insert(t).unwrap();
            }
            set
        })
        .collect();
    MessageAssignment { sets }
}
