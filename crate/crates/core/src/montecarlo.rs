//! Monte Carlo estimation of per-user DoF over random erasures.
//!
//! Trial `t` of a run with master seed `s` draws its realization from
//! `derive_seed(s, t)`, and per-trial DoF values are accumulated as exact
//! integers, so results do not depend on the number of worker threads.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::assignment::{build_assignment, Fraction, MessageAssignment};
use crate::error::{Error, Result};
use crate::network::{check_probability, derive_seed, NetworkRealization};
use crate::scheduler::schedule_network;

pub const DEFAULT_TRIALS: u64 = 6000;

/// A member of the parameterized assignment family, identified by `(K, f)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AssignmentSpec {
    pub k: usize,
    pub f: Fraction,
}

impl AssignmentSpec {
    pub fn new(k: usize, f: Fraction) -> Self {
        Self { k, f }
    }

    pub fn build(&self) -> Result<MessageAssignment> {
        build_assignment(self.k, self.f)
    }
}

/// Canonical label `K=<k>,f=<num>/<den>`.
impl fmt::Display for AssignmentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "K={},f={}", self.k, self.f)
    }
}

/// Parses the canonical label, or the shorthand `<k>:<num>/<den>`.
impl FromStr for AssignmentSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (k, f) = if let Some(rest) = s.strip_prefix("K=") {
            rest.split_once(",f=")
                .ok_or_else(|| Error::parse("assignment", format!("expected `K=<k>,f=<num>/<den>`, got `{s}`")))?
        } else {
            s.split_once(':')
                .ok_or_else(|| Error::parse("assignment", format!("expected `<k>:<num>/<den>`, got `{s}`")))?
        };
        let k: usize = k
            .trim()
            .parse()
            .map_err(|_| Error::parse("assignment", format!("bad K `{k}`")))?;
        if k < 3 {
            return Err(Error::parse("assignment", format!("K must be at least 3, got {k}")));
        }
        Ok(Self { k, f: f.parse()? })
    }
}

/// Sample mean and standard error of per-user DoF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
}

impl Estimate {
    fn from_sums(sum: u64, sum_sq: u128, trials: u64, k: usize) -> Self {
        let n = trials as f64;
        let kk = k as f64;
        let mean_dof = sum as f64 / n;
        let var_dof = if trials > 1 {
            // Exact integer numerator n*sum_sq - sum^2 keeps the variance
            // free of cancellation error.
            let num = (trials as u128 * sum_sq).saturating_sub(sum as u128 * sum as u128);
            num as f64 / (n * (n - 1.0))
        } else {
            0.0
        };
        Self {
            mean: mean_dof / kk,
            stderr: (var_dof / n).sqrt() / kk,
            trials,
        }
    }
}

/// Draws one trial's realization and assignment, with deactivation applied.
pub fn trial_instance(
    k: usize,
    p: f64,
    a: &MessageAssignment,
    trial_seed: u64,
    deactivate_last: bool,
) -> Result<(NetworkRealization, MessageAssignment)> {
    let r = NetworkRealization::sample(k, p, trial_seed)?;
    Ok(if deactivate_last {
        (r.without_last_transmitter(), a.without_transmitter(k - 1))
    } else {
        (r, a.clone())
    })
}

/// Estimates the expected per-user DoF of assignment `a` at erasure
/// probability `p` from `trials` independent realizations.
///
/// With `deactivate_last`, transmitter `K` is removed from every transmit
/// set and its direct link erased, so that the estimate is achievable in a
/// large network built from concatenated copies.
pub fn estimate_pudof(
    k: usize,
    p: f64,
    a: &MessageAssignment,
    trials: u64,
    master_seed: u64,
    deactivate_last: bool,
) -> Result<Estimate> {
    if trials == 0 {
        return Err(Error::param("trials must be at least 1"));
    }
    if a.k() != k {
        return Err(Error::param(format!("assignment has {} users, expected {k}", a.k())));
    }
    check_probability(p)?;
    let a_eff = if deactivate_last {
        a.without_transmitter(k - 1)
    } else {
        a.clone()
    };
    let (sum, sum_sq) = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<(u64, u128)> {
            let mut r = NetworkRealization::sample(k, p, derive_seed(master_seed, t))?;
            if deactivate_last {
                r = r.without_last_transmitter();
            }
            let s = schedule_network(&r, &a_eff)?;
            if deactivate_last && s.is_transmitter_active(k - 1) {
                return Err(Error::Invariant(format!(
                    "deactivated transmitter {k} is active in trial {t}"
                )));
            }
            let d = s.dof() as u64;
            Ok((d, d as u128 * d as u128))
        })
        .try_reduce(|| (0, 0), |x, y| Ok((x.0 + y.0, x.1 + y.1)))?;
    Ok(Estimate::from_sums(sum, sum_sq, trials, k))
}

/// An evenly spaced grid of erasure probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PGrid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl Default for PGrid {
    fn default() -> Self {
        Self {
            start: 0.0,
            end: 1.0,
            step: 0.01,
        }
    }
}

impl PGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        check_probability(self.start)?;
        check_probability(self.end)?;
        if self.end < self.start {
            return Err(Error::param("p-end is below p-start"));
        }
        if self.end == self.start {
            return Ok(vec![self.start]);
        }
        if self.step.is_nan() || self.step <= 0.0 {
            return Err(Error::param("p-step must be positive"));
        }
        let n = ((self.end - self.start) / self.step + 1e-9).floor() as usize;
        // Rounded to 12 decimals so that 0.1 + 2 * 0.1 prints as 0.3.
        Ok((0..=n)
            .map(|j| {
                let p = self.start + j as f64 * self.step;
                ((p * 1e12).round() / 1e12).clamp(0.0, 1.0)
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub grid: PGrid,
    pub assignments: Vec<AssignmentSpec>,
    pub trials: u64,
    pub master_seed: u64,
    pub deactivate_last: bool,
    /// Reuse the same trial seeds for every assignment at a grid point.
    pub shared_realizations: bool,
}

impl SweepConfig {
    pub fn new(assignments: Vec<AssignmentSpec>) -> Self {
        Self {
            grid: PGrid::default(),
            assignments,
            trials: DEFAULT_TRIALS,
            master_seed: 0,
            deactivate_last: true,
            shared_realizations: false,
        }
    }

    /// Master seed of the row for grid point `p_index` and assignment
    /// `assignment_index`.
    pub fn row_seed(&self, p_index: usize, assignment_index: usize) -> u64 {
        let point = derive_seed(self.master_seed, p_index as u64);
        if self.shared_realizations {
            point
        } else {
            derive_seed(point, 1 + assignment_index as u64)
        }
    }
}

/// One `(p, assignment)` estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub p: f64,
    pub assignment: AssignmentSpec,
    pub trials: u64,
    pub seed: u64,
    pub mean: f64,
    pub stderr: f64,
}

/// Runs `estimate_pudof` at every grid point for every assignment. Calls
/// `progress(done, total)` after each row.
pub fn sweep(cfg: &SweepConfig, mut progress: impl FnMut(usize, usize)) -> Result<Vec<SweepRow>> {
    if cfg.assignments.is_empty() {
        return Err(Error::param("a sweep needs at least one assignment"));
    }
    if cfg.trials == 0 {
        return Err(Error::param("trials must be at least 1"));
    }
    let points = cfg.grid.points()?;
    let built: Vec<MessageAssignment> = cfg
        .assignments
        .iter()
        .map(AssignmentSpec::build)
        .collect::<Result<_>>()?;
    let total = points.len() * built.len();
    let mut rows = Vec::with_capacity(total);
    for (pi, &p) in points.iter().enumerate() {
        for (ai, (spec, a)) in cfg.assignments.iter().zip(&built).enumerate() {
            let seed = cfg.row_seed(pi, ai);
            let est = estimate_pudof(spec.k, p, a, cfg.trials, seed, cfg.deactivate_last)?;
            rows.push(SweepRow {
                p,
                assignment: *spec,
                trials: cfg.trials,
                seed,
                mean: est.mean,
                stderr: est.stderr,
            });
            progress(rows.len(), total);
        }
    }
    Ok(rows)
}

/// Best assignment at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub p: f64,
    pub winner: AssignmentSpec,
    pub mean: f64,
    pub stderr: f64,
    /// Assignments within two combined standard errors of the winner.
    pub ties: Vec<AssignmentSpec>,
}

/// Picks the assignment with the largest mean at each `p`, reporting
/// statistical ties.
pub fn best_assignment_table(rows: &[SweepRow]) -> Result<Vec<TableRow>> {
    if rows.is_empty() {
        return Err(Error::param("no sweep results to tabulate"));
    }
    let mut grid: Vec<f64> = Vec::new();
    for r in rows {
        if !grid.contains(&r.p) {
            grid.push(r.p);
        }
    }
    grid.sort_by(f64::total_cmp);
    let mut labels: Vec<AssignmentSpec> = Vec::new();
    for r in rows {
        if !labels.contains(&r.assignment) {
            labels.push(r.assignment);
        }
    }

    let mut table = Vec::with_capacity(grid.len());
    for &p in &grid {
        let at_p: Vec<&SweepRow> = rows.iter().filter(|r| r.p == p).collect();
        for spec in &labels {
            if !at_p.iter().any(|r| r.assignment == *spec) {
                return Err(Error::param(format!("{spec} has no result at p = {p}")));
            }
        }
        let best = at_p
            .iter()
            .copied()
            .reduce(|a, b| if b.mean > a.mean { b } else { a })
            .expect("at least one row per grid point");
        let ties = at_p
            .iter()
            .filter(|r| r.assignment != best.assignment)
            .filter(|r| best.mean - r.mean <= 2.0 * (best.stderr.powi(2) + r.stderr.powi(2)).sqrt())
            .map(|r| r.assignment)
            .collect();
        table.push(TableRow {
            p,
            winner: best.assignment,
            mean: best.mean,
            stderr: best.stderr,
            ties,
        });
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(s: &str) -> AssignmentSpec {
        s.parse().unwrap()
    }

    #[test]
    fn labels_round_trip() {
        let a = spec("5:3/5");
        assert_eq!(a.to_string(), "K=5,f=3/5");
        assert_eq!(spec("K=5,f=3/5"), a);
        assert!("K=5;f=3/5".parse::<AssignmentSpec>().is_err());
        assert!("2:0/1".parse::<AssignmentSpec>().is_err());
    }

    #[test]
    fn endpoint_estimates() {
        let a = spec("5:3/5").build().unwrap();
        let e = estimate_pudof(5, 0.0, &a, 50, 1, true).unwrap();
        assert_eq!(e.mean, 0.8);
        assert_eq!(e.stderr, 0.0);
        let e = estimate_pudof(5, 1.0, &a, 50, 1, true).unwrap();
        assert_eq!((e.mean, e.stderr), (0.0, 0.0));
    }

    #[test]
    fn zero_trials_rejected() {
        let a = spec("5:3/5").build().unwrap();
        assert!(estimate_pudof(5, 0.5, &a, 0, 1, true).is_err());
        assert!(estimate_pudof(6, 0.5, &a, 10, 1, true).is_err());
    }

    #[test]
    fn grid_points() {
        let g = PGrid::default().points().unwrap();
        assert_eq!(g.len(), 101);
        assert_eq!(g[30], 0.3);
        assert_eq!(g[100], 1.0);
        let g = PGrid {
            start: 0.0,
            end: 0.0,
            step: 0.0,
        }
        .points()
        .unwrap();
        assert_eq!(g, vec![0.0]);
        assert!(PGrid {
            start: 0.5,
            end: 0.2,
            step: 0.1
        }
        .points()
        .is_err());
        assert!(PGrid {
            start: 0.0,
            end: 1.2,
            step: 0.1
        }
        .points()
        .is_err());
    }

    #[test]
    fn endpoint_sweep() {
        let mut cfg = SweepConfig::new(vec![spec("5:3/5")]);
        cfg.grid = PGrid {
            start: 0.0,
            end: 1.0,
            step: 1.0,
        };
        cfg.trials = 20;
        let mut calls = 0;
        let rows = sweep(&cfg, |_, _| calls += 1).unwrap();
        assert_eq!(calls, 2);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].mean, 0.8);
        assert_eq!(rows[1].mean, 0.0);
        assert_eq!(rows, sweep(&cfg, |_, _| {}).unwrap());
    }

    #[test]
    fn shared_realizations_share_seeds() {
        let mut cfg = SweepConfig::new(vec![spec("5:3/5"), spec("5:0/1")]);
        cfg.shared_realizations = true;
        assert_eq!(cfg.row_seed(3, 0), cfg.row_seed(3, 1));
        cfg.shared_realizations = false;
        assert_ne!(cfg.row_seed(3, 0), cfg.row_seed(3, 1));
    }

    fn row(p: f64, a: &str, mean: f64, stderr: f64) -> SweepRow {
        SweepRow {
            p,
            assignment: spec(a),
            trials: 100,
            seed: 0,
            mean,
            stderr,
        }
    }

    #[test]
    fn table_winners_and_ties() {
        let rows = vec![
            row(0.1, "5:3/5", 0.70, 0.01),
            row(0.1, "99:0/1", 0.60, 0.01),
            row(0.1, "100:1/2", 0.69, 0.01),
            row(0.9, "5:3/5", 0.05, 0.001),
            row(0.9, "99:0/1", 0.08, 0.001),
            row(0.9, "100:1/2", 0.04, 0.001),
        ];
        let t = best_assignment_table(&rows).unwrap();
        assert_eq!(t[0].winner, spec("5:3/5"));
        assert_eq!(t[0].ties, vec![spec("100:1/2")]);
        assert_eq!(t[1].winner, spec("99:0/1"));
        assert!(t[1].ties.is_empty());
    }

    #[test]
    fn table_single_assignment_and_errors() {
        let rows = vec![row(0.0, "5:3/5", 0.8, 0.0), row(0.5, "5:3/5", 0.4, 0.01)];
        let t = best_assignment_table(&rows).unwrap();
        assert!(t.iter().all(|r| r.winner == spec("5:3/5")));
        assert!(best_assignment_table(&[]).is_err());
        let ragged = vec![row(0.0, "5:3/5", 0.8, 0.0), row(0.5, "99:0/1", 0.4, 0.01)];
        assert!(best_assignment_table(&ragged).is_err());
    }
}
