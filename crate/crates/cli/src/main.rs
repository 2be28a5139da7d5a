//! `linzf`: Monte Carlo sweeps, oracle verification, schedule traces and
//! best-assignment tables for the erasure-prone linear interference network.
//!
//! Exit codes: 0 success, 1 usage or parameter error, 2 verification
//! mismatch, 3 I/O error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use linzf_core::oracle::deactivate_last;
use linzf_core::report::{format_table_text, read_sweep_csv, write_sweep_csv, write_table_csv};
use linzf_core::verify::{verify_exhaustive, verify_random};
use linzf_core::{
    best_assignment_table, build_assignment, build_transmit_signals, schedule_network, sweep, verify_zero_forcing,
    AssignmentSpec, Fraction, NetworkRealization, PGrid, SweepConfig,
};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(
    name = "linzf",
    version,
    about = "Zero-forcing DoF experiments on erasure-prone linear networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate per-user DoF over a grid of erasure probabilities.
    Sweep(SweepArgs),
    /// Compare the scheduler against the exhaustive zero-forcing oracle.
    Verify(VerifyArgs),
    /// Show the schedule, weights and residuals for one realization.
    Trace(TraceArgs),
    /// Tabulate the best assignment per erasure probability.
    Table(TableArgs),
    /// Rerun a sweep from its manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Network size used with every `--f`.
    #[arg(long)]
    k: Option<usize>,
    /// Helper fraction `num/den`, repeatable.
    #[arg(long = "f", value_parser = parse_fraction)]
    fractions: Vec<Fraction>,
    /// Assignment `K:num/den`, repeatable.
    #[arg(long = "assignment", value_parser = parse_spec)]
    assignments: Vec<AssignmentSpec>,
    #[arg(long, default_value_t = 0.0)]
    p_start: f64,
    #[arg(long, default_value_t = 1.0)]
    p_end: f64,
    #[arg(long, default_value_t = 0.01)]
    p_step: f64,
    #[arg(long, default_value_t = linzf_core::montecarlo::DEFAULT_TRIALS)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Switch off transmitter K in every trial.
    #[arg(long, action = ArgAction::Set, num_args = 0..=1, default_value_t = true, default_missing_value = "true")]
    deactivate_last: bool,
    /// Reuse the same realizations for every assignment at a grid point.
    #[arg(long)]
    share_realizations: bool,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exhaustive,
    Random,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 6)]
    k_max: usize,
    /// Smallest size sampled in random mode.
    #[arg(long, default_value_t = 3)]
    k_min: usize,
    #[arg(long, value_enum, default_value_t = Mode::Exhaustive)]
    mode: Mode,
    /// Instances sampled in random mode.
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random assignments per size in exhaustive mode.
    #[arg(long, default_value_t = 20)]
    random_assignments: usize,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct TraceArgs {
    /// Realization `K;direct bits;cross bits`.
    #[arg(long, conflicts_with_all = ["p", "seed"])]
    realization: Option<String>,
    /// Erasure probability for a sampled realization.
    #[arg(long, requires = "seed")]
    p: Option<f64>,
    #[arg(long, requires = "p")]
    seed: Option<u64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long = "f", value_parser = parse_fraction, default_value = "0")]
    f: Fraction,
    /// Seed of the channel coefficients.
    #[arg(long, default_value_t = 0)]
    coeff_seed: u64,
    #[arg(long, action = ArgAction::Set, num_args = 0..=1, default_value_t = false, default_missing_value = "true")]
    deactivate_last: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Debug, Args)]
struct TableArgs {
    /// Sweep CSV, repeatable.
    #[arg(long = "in", required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    manifest: PathBuf,
    /// Write here instead of the recorded output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Compare against the recorded output instead of overwriting it.
    #[arg(long)]
    check: bool,
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_fraction(s: &str) -> Result<Fraction, String> {
    s.parse().map_err(|e: linzf_core::Error| e.to_string())
}

fn parse_spec(s: &str) -> Result<AssignmentSpec, String> {
    s.parse().map_err(|e: linzf_core::Error| e.to_string())
}

#[derive(Debug)]
enum Failure {
    Usage(anyhow::Error),
    Mismatch(String),
    Io(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Mismatch(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl From<linzf_core::Error> for Failure {
    fn from(e: linzf_core::Error) -> Self {
        Failure::Usage(e.into())
    }
}

type CmdResult = Result<(), Failure>;

fn io_err(e: impl Into<anyhow::Error>, what: impl std::fmt::Display) -> Failure {
    Failure::Io(e.into().context(what.to_string()))
}

fn set_threads(threads: Option<usize>) -> CmdResult {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Failure::Usage(anyhow!("--threads must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.into()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Sweep(args) => cmd_sweep(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Trace(args) => cmd_trace(args),
        Command::Table(args) => cmd_table(args),
        Command::Replay(args) => cmd_replay(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(e) | Failure::Io(e) => eprintln!("error: {e:#}"),
                Failure::Mismatch(msg) => eprintln!("{msg}"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn sweep_config(args: &SweepArgs) -> Result<SweepConfig, Failure> {
    let mut specs = Vec::new();
    if !args.fractions.is_empty() {
        let k = args.k.ok_or_else(|| Failure::Usage(anyhow!("--f needs --k")))?;
        if k < 3 {
            return Err(Failure::Usage(anyhow!("--k must be at least 3")));
        }
        specs.extend(args.fractions.iter().map(|&f| AssignmentSpec::new(k, f)));
    } else if args.k.is_some() {
        return Err(Failure::Usage(anyhow!("--k needs at least one --f")));
    }
    specs.extend(args.assignments.iter().copied());
    if specs.is_empty() {
        return Err(Failure::Usage(anyhow!("give --k with --f, or --assignment")));
    }
    let mut cfg = SweepConfig::new(specs);
    cfg.grid = PGrid {
        start: args.p_start,
        end: args.p_end,
        step: args.p_step,
    };
    cfg.trials = args.trials;
    cfg.master_seed = args.seed;
    cfg.deactivate_last = args.deactivate_last;
    cfg.shared_realizations = args.share_realizations;
    // Rejects bad parameters before any output is touched.
    if cfg.trials == 0 {
        return Err(Failure::Usage(anyhow!("--trials must be at least 1")));
    }
    cfg.grid.points()?;
    for spec in &cfg.assignments {
        spec.build()?;
    }
    Ok(cfg)
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

fn manifest_text(cfg: &SweepConfig, out: &Path) -> String {
    let labels: Vec<String> = cfg.assignments.iter().map(|a| format!("{}:{}", a.k, a.f)).collect();
    let mut s = String::new();
    let _ = writeln!(s, "subcommand=sweep");
    let _ = writeln!(s, "version={VERSION}");
    let _ = writeln!(s, "assignments={}", labels.join(" "));
    let _ = writeln!(s, "p_start={}", cfg.grid.start);
    let _ = writeln!(s, "p_end={}", cfg.grid.end);
    let _ = writeln!(s, "p_step={}", cfg.grid.step);
    let _ = writeln!(s, "trials={}", cfg.trials);
    let _ = writeln!(s, "seed={}", cfg.master_seed);
    let _ = writeln!(s, "deactivate_last={}", cfg.deactivate_last);
    let _ = writeln!(s, "share_realizations={}", cfg.shared_realizations);
    let _ = writeln!(s, "out={}", out.display());
    s
}

fn parse_manifest(text: &str) -> Result<(SweepConfig, PathBuf), Failure> {
    let mut kv = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Failure::Usage(anyhow!("manifest line {}: expected key=value", n + 1)))?;
        kv.insert(k.trim(), v.trim());
    }
    let get = |key: &str| {
        kv.get(key)
            .copied()
            .ok_or_else(|| Failure::Usage(anyhow!("manifest is missing `{key}`")))
    };
    fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, Failure> {
        v.parse()
            .map_err(|_| Failure::Usage(anyhow!("manifest `{key}`: bad value `{v}`")))
    }
    if get("subcommand")? != "sweep" {
        return Err(Failure::Usage(anyhow!("only sweep manifests can be replayed")));
    }
    let specs = get("assignments")?
        .split_whitespace()
        .map(|s| s.parse::<AssignmentSpec>())
        .collect::<Result<Vec<_>, _>>()?;
    let mut cfg = SweepConfig::new(specs);
    cfg.grid = PGrid {
        start: num("p_start", get("p_start")?)?,
        end: num("p_end", get("p_end")?)?,
        step: num("p_step", get("p_step")?)?,
    };
    cfg.trials = num("trials", get("trials")?)?;
    cfg.master_seed = num("seed", get("seed")?)?;
    cfg.deactivate_last = num("deactivate_last", get("deactivate_last")?)?;
    cfg.shared_realizations = num("share_realizations", get("share_realizations")?)?;
    Ok((cfg, PathBuf::from(get("out")?)))
}

fn run_sweep(cfg: &SweepConfig) -> Result<Vec<u8>, Failure> {
    let mut last_tenth = 0;
    let rows = sweep(cfg, |done, total| {
        let tenth = done * 10 / total;
        if tenth > last_tenth || done == total {
            last_tenth = tenth;
            eprintln!("sweep: {done}/{total} rows");
        }
    })?;
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, &rows)?;
    Ok(buf)
}

fn write_file(path: &Path, bytes: &[u8]) -> CmdResult {
    fs::write(path, bytes).map_err(|e| io_err(e, format!("cannot write {}", path.display())))
}

fn cmd_sweep(args: SweepArgs) -> CmdResult {
    set_threads(args.threads)?;
    let cfg = sweep_config(&args)?;
    // Fail on an unwritable destination before spending time on the sweep.
    File::create(&args.out).map_err(|e| io_err(e, format!("cannot write {}", args.out.display())))?;
    let csv = run_sweep(&cfg)?;
    write_file(&args.out, &csv)?;
    write_file(&manifest_path(&args.out), manifest_text(&cfg, &args.out).as_bytes())?;
    eprintln!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_replay(args: ReplayArgs) -> CmdResult {
    set_threads(args.threads)?;
    let text = fs::read_to_string(&args.manifest)
        .map_err(|e| io_err(e, format!("cannot read {}", args.manifest.display())))?;
    let (cfg, recorded) = parse_manifest(&text)?;
    let csv = run_sweep(&cfg)?;
    if args.check {
        let old = fs::read(&recorded).map_err(|e| io_err(e, format!("cannot read {}", recorded.display())))?;
        if old != csv {
            return Err(Failure::Mismatch(format!(
                "{} differs from its replay",
                recorded.display()
            )));
        }
        println!("{} reproduced byte for byte", recorded.display());
        return Ok(());
    }
    let out = args.out.unwrap_or(recorded);
    write_file(&out, &csv)?;
    write_file(&manifest_path(&out), manifest_text(&cfg, &out).as_bytes())?;
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> CmdResult {
    set_threads(args.threads)?;
    let report = match args.mode {
        Mode::Exhaustive => verify_exhaustive(args.k_max, args.random_assignments, args.seed)?,
        Mode::Random => verify_random(args.k_min, args.k_max, args.trials, args.seed)?,
    };
    print!("{report}");
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Mismatch(format!(
            "verification failed: {} mismatches",
            report.mismatches.len()
        )))
    }
}

fn cmd_trace(args: TraceArgs) -> CmdResult {
    let r = match (&args.realization, args.p, args.seed) {
        (Some(s), _, _) => {
            let r: NetworkRealization = s.parse()?;
            if let Some(k) = args.k {
                if k != r.k() {
                    return Err(Failure::Usage(anyhow!(
                        "--k {k} does not match the realization size {}",
                        r.k()
                    )));
                }
            }
            r
        }
        (None, Some(p), Some(seed)) => {
            let k = args
                .k
                .ok_or_else(|| Failure::Usage(anyhow!("a sampled realization needs --k")))?;
            NetworkRealization::sample(k, p, seed)?
        }
        _ => return Err(Failure::Usage(anyhow!("give --realization, or --p and --seed"))),
    };
    if r.k() < 3 {
        return Err(Failure::Usage(anyhow!("the assignment family needs K >= 3")));
    }
    let a = build_assignment(r.k(), args.f)?;
    let (r, a) = if args.deactivate_last {
        deactivate_last(&r, &a)
    } else {
        (r, a)
    };
    let r = r.with_generic_coefficients(args.coeff_seed);
    let s = schedule_network(&r, &a)?;
    let plan = build_transmit_signals(&s, &r)?;
    let zf = verify_zero_forcing(&plan, &s, &r);

    let mut out = String::new();
    let _ = writeln!(out, "realization {r}");
    let _ = writeln!(out, "assignment K={} f={}", r.k(), args.f);
    for (i, set) in a.sets().iter().enumerate() {
        let _ = writeln!(out, "  T_{} = {{{set}}}", i + 1);
    }
    for c in r.clusters() {
        let _ = writeln!(out, "cluster {c}");
        let pairs: Vec<String> = s
            .pairs()
            .into_iter()
            .filter(|(m, _)| c.contains(*m))
            .map(|(m, t)| format!("({},{})", m + 1, t + 1))
            .collect();
        let _ = writeln!(
            out,
            "  b = 1 at {}",
            if pairs.is_empty() { "-".into() } else { pairs.join(" ") }
        );
        let delivered: Vec<String> = s
            .delivered()
            .filter(|m| c.contains(*m))
            .map(|m| (m + 1).to_string())
            .collect();
        let _ = writeln!(out, "  delivered {{{}}}", delivered.join(","));
        for tx in c.users() {
            for &(m, w) in plan.carried(tx) {
                let _ = writeln!(
                    out,
                    "  tx {} carries W_{} with weight {:.6}{:+.6}i",
                    tx + 1,
                    m + 1,
                    w.re,
                    w.im
                );
            }
        }
        for rc in zf.receivers.iter().filter(|rc| c.contains(rc.receiver)) {
            let _ = write!(
                out,
                "  rx {}: desired {:.3e}, residual {:.3e}",
                rc.receiver + 1,
                rc.desired,
                rc.worst_interference
            );
            if let Some(m) = rc.worst_interferer {
                let _ = write!(out, " (W_{})", m + 1);
            }
            let _ = writeln!(out, " {}", if rc.passes() { "ok" } else { "FAIL" });
        }
    }
    if zf.receivers.is_empty() {
        let _ = writeln!(out, "no active receivers");
    }
    let _ = writeln!(out, "DoF {} of {}", s.dof(), r.k());
    print!("{out}");
    if zf.passed() {
        Ok(())
    } else {
        Err(Failure::Mismatch("zero-forcing check failed".into()))
    }
}

fn cmd_table(args: TableArgs) -> CmdResult {
    let mut rows = Vec::new();
    for path in &args.inputs {
        let file = File::open(path).map_err(|e| io_err(e, format!("cannot read {}", path.display())))?;
        let mut part = read_sweep_csv(io::BufReader::new(file))
            .with_context(|| path.display().to_string())
            .map_err(Failure::Usage)?;
        rows.append(&mut part);
    }
    let table = best_assignment_table(&rows)?;
    let mut buf = Vec::new();
    match args.format {
        Format::Text => buf.extend_from_slice(format_table_text(&table).as_bytes()),
        Format::Csv => write_table_csv(&mut buf, &table)?,
    }
    match &args.out {
        Some(path) => write_file(path, &buf),
        None => {
            let mut stdout = BufWriter::new(io::stdout().lock());
            stdout
                .write_all(&buf)
                .and_then(|_| stdout.flush())
                .map_err(|e| io_err(e, "cannot write to stdout"))
        }
    }
}
