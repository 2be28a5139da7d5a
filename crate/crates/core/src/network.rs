//! Linear (Wyner) network realizations.
//!
//! A `K`-user linear network has `2K - 1` link slots: the direct link
//! `H[i][i]` for every user and the cross link `H[i+1][i]` from transmitter
//! `i` to the following receiver, for every transmitter except the last.
//! Indices are 0-based throughout the library; the text form and the
//! human-readable reports print them 1-based.
//!
//! Link presence and channel gains are kept apart. Degrees of freedom only
//! depend on which links exist, so the gains are attached on demand when a
//! beamforming plan has to be checked numerically.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Gains below this magnitude are redrawn.
pub const MIN_GAIN_MAGNITUDE: f64 = 1e-3;

const COEFF_STREAM: u64 = 0x636f_6566_6673_0001;

/// Mixes a master seed with a stream index into an independent 64-bit seed.
///
/// SplitMix64 finalizer applied to both words, so that `(s, t)` and `(t, s)`
/// land in unrelated streams and trial seeds do not depend on the order in
/// which trials are executed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(mix(master) ^ index.wrapping_mul(0xd605_bbb5_8c8a_bbd3))
}

/// Complex gains for the present links of a realization.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    direct: Vec<Complex64>,
    cross: Vec<Complex64>,
}

/// One block of a `K`-user linear network: which links survived erasure,
/// optionally with generic channel gains attached.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    direct: Vec<bool>,
    cross: Vec<bool>,
    coeffs: Option<Coefficients>,
}

impl NetworkRealization {
    /// Builds a realization from link presence flags.
    ///
    /// `cross[i]` is the link from transmitter `i` to receiver `i + 1`, so it
    /// must be one shorter than `direct`.
    pub fn new(direct: Vec<bool>, cross: Vec<bool>) -> Result<Self> {
        if direct.is_empty() {
            return Err(Error::param("a network needs at least one user"));
        }
        if cross.len() + 1 != direct.len() {
            return Err(Error::param(format!(
                "{} users need {} cross links, got {}",
                direct.len(),
                direct.len() - 1,
                cross.len()
            )));
        }
        Ok(Self {
            direct,
            cross,
            coeffs: None,
        })
    }

    /// Every link present.
    pub fn full(k: usize) -> Result<Self> {
        Self::new(vec![true; k], vec![true; k.saturating_sub(1)])
    }

    /// Every link erased.
    pub fn empty(k: usize) -> Result<Self> {
        Self::new(vec![false; k], vec![false; k.saturating_sub(1)])
    }

    /// Draws a realization where each link is erased independently with
    /// probability `p`. The result is a pure function of `(k, p, trial_seed)`.
    ///
    /// Links are drawn in the interleaved order `direct[0], cross[0],
    /// direct[1], ...`, so a smaller network drawn from the same seed is a
    /// prefix of a larger one.
    pub fn sample(k: usize, p: f64, trial_seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("k must be at least 1"));
        }
        check_probability(p)?;
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
        let mut direct = Vec::with_capacity(k);
        let mut cross = Vec::with_capacity(k - 1);
        for i in 0..k {
            direct.push(!rng.random_bool(p));
            if i + 1 < k {
                cross.push(!rng.random_bool(p));
            }
        }
        Self::new(direct, cross)
    }

    /// Number of transmitter-receiver pairs.
    pub fn k(&self) -> usize {
        self.direct.len()
    }

    pub fn direct(&self) -> &[bool] {
        &self.direct
    }

    pub fn cross(&self) -> &[bool] {
        &self.cross
    }

    pub fn has_direct(&self, user: usize) -> bool {
        self.direct.get(user).copied().unwrap_or(false)
    }

    /// Link from transmitter `tx` to receiver `tx + 1`.
    pub fn has_cross(&self, tx: usize) -> bool {
        self.cross.get(tx).copied().unwrap_or(false)
    }

    /// Whether transmitter `tx` reaches receiver `rx`.
    pub fn has_link(&self, rx: usize, tx: usize) -> bool {
        if rx == tx {
            self.has_direct(rx)
        } else if rx == tx + 1 {
            self.has_cross(tx)
        } else {
            false
        }
    }

    /// Count of erased links among the `2K - 1` slots.
    pub fn absent_links(&self) -> usize {
        self.direct.iter().chain(&self.cross).filter(|&&b| !b).count()
    }

    /// Attaches an independent complex standard normal gain to every present
    /// link, redrawing any gain with magnitude below [`MIN_GAIN_MAGNITUDE`].
    /// Absent links get gain zero. Deterministic in `trial_seed`.
    pub fn with_generic_coefficients(mut self, trial_seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(trial_seed, COEFF_STREAM));
        let mut draw = |present: bool| {
            if !present {
                return Complex64::new(0.0, 0.0);
            }
            loop {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                let h = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
                if h.norm() >= MIN_GAIN_MAGNITUDE {
                    return h;
                }
            }
        };
        let direct = self.direct.iter().map(|&b| draw(b)).collect();
        let cross = self.cross.iter().map(|&b| draw(b)).collect();
        self.coeffs = Some(Coefficients { direct, cross });
        self
    }

    pub fn has_coefficients(&self) -> bool {
        self.coeffs.is_some()
    }

    /// Channel gain from transmitter `tx` to receiver `rx`; zero for absent
    /// or non-existent links, `None` when no gains are attached.
    pub fn gain(&self, rx: usize, tx: usize) -> Option<Complex64> {
        let c = self.coeffs.as_ref()?;
        let zero = Complex64::new(0.0, 0.0);
        Some(if rx == tx {
            c.direct.get(rx).copied().unwrap_or(zero)
        } else if rx == tx + 1 {
            c.cross.get(tx).copied().unwrap_or(zero)
        } else {
            zero
        })
    }

    /// Splits the users into maximal runs joined by present cross links.
    pub fn clusters(&self) -> Vec<Cluster> {
        let mut out = Vec::new();
        let mut start = 0;
        for (tx, &present) in self.cross.iter().enumerate() {
            if !present {
                out.push(Cluster { start, end: tx });
                start = tx + 1;
            }
        }
        out.push(Cluster {
            start,
            end: self.k() - 1,
        });
        out
    }

    /// The realization with transmitter `K` switched off: its direct link is
    /// erased (and its gain zeroed, if any).
    pub fn without_last_transmitter(&self) -> Self {
        let mut r = self.clone();
        let last = r.k() - 1;
        r.direct[last] = false;
        if let Some(c) = r.coeffs.as_mut() {
            c.direct[last] = Complex64::new(0.0, 0.0);
        }
        r
    }
}

pub(crate) fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::param(format!("probability {p} is outside [0, 1]")))
    }
}

/// A run of consecutive users whose internal cross links are all present and
/// whose last transmitter does not reach the next receiver. Bounds are
/// inclusive, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cluster {
    pub start: usize,
    pub end: usize,
}

impl Cluster {
    pub fn size(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn users(&self) -> RangeInclusive<usize> {
        self.start..=self.end
    }

    pub fn contains(&self, user: usize) -> bool {
        self.users().contains(&user)
    }
}

impl fmt::Display for Cluster {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.start + 1, self.end + 1)
    }
}

fn bits(v: &[bool]) -> String {
    v.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// `K;direct-bits;cross-bits`, e.g. `5;11111;1111`.
impl fmt::Display for NetworkRealization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};{};{}", self.k(), bits(&self.direct), bits(&self.cross))
    }
}

impl FromStr for NetworkRealization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let fields: Vec<&str> = s.trim().split(';').collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                "realization",
                format!("expected `K;direct;cross`, got {} field(s)", fields.len()),
            ));
        }
        let k: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| Error::parse("K", format!("`{}` is not a positive integer", fields[0])))?;
        if k == 0 {
            return Err(Error::parse("K", "must be at least 1"));
        }
        let parse_bits = |name: &str, text: &str, want: usize| -> Result<Vec<bool>> {
            let text = text.trim();
            if text.len() != want {
                return Err(Error::parse(name, format!("expected {want} bits, got {}", text.len())));
            }
            text.chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    other => Err(Error::parse(name, format!("unexpected character `{other}`"))),
                })
                .collect()
        };
        let direct = parse_bits("direct", fields[1], k)?;
        let cross = parse_bits("cross", fields[2], k - 1)?;
        Self::new(direct, cross)
    }
}
