//! CSV and text output for sweeps and best-assignment tables.

use std::io::{Read, Write};

use crate::assignment::Fraction;
use crate::error::{Error, Result};
use crate::montecarlo::{AssignmentSpec, SweepRow, TableRow};

pub const SWEEP_HEADER: [&str; 9] = [
    "p",
    "assignment",
    "k",
    "f_num",
    "f_den",
    "trials",
    "seed",
    "pudof_mean",
    "pudof_stderr",
];

/// Decimal with six significant digits, trailing zeros trimmed, no exponent.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() { "0".into() } else { x.to_string() };
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::parse("csv", e.to_string())
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            format_sig6(r.p),
            r.assignment.to_string(),
            r.assignment.k.to_string(),
            r.assignment.f.numerator().to_string(),
            r.assignment.f.denominator().to_string(),
            r.trials.to_string(),
            r.seed.to_string(),
            format_sig6(r.mean),
            format_sig6(r.stderr),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::parse("csv", e.to_string()))?;
    Ok(())
}

/// Parses a sweep CSV. Errors carry the 1-based data row number.
pub fn read_sweep_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(SWEEP_HEADER.iter().copied()) {
        return Err(Error::parse(
            "header",
            format!(
                "expected `{}`, got `{}`",
                SWEEP_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut rows = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let row_no = idx + 1;
        let field = |name: &str| format!("row {row_no} column {name}");
        let rec = rec.map_err(|e| Error::parse(format!("row {row_no}"), e.to_string()))?;
        let get = |i: usize| rec.get(i).unwrap_or("").trim();
        let num = |i: usize| -> Result<f64> {
            get(i)
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(field(SWEEP_HEADER[i]), format!("`{}` is not a number", get(i))))
        };
        let int = |i: usize| -> Result<u64> {
            get(i)
                .parse::<u64>()
                .map_err(|_| Error::parse(field(SWEEP_HEADER[i]), format!("`{}` is not an integer", get(i))))
        };
        let p = num(0)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::parse(field("p"), format!("{p} is outside [0, 1]")));
        }
        let k = int(2)? as usize;
        let f = Fraction::new(int(3)?, int(4)?).map_err(|e| Error::parse(field("f_den"), e.to_string()))?;
        let assignment = AssignmentSpec::new(k, f);
        let label: AssignmentSpec = get(1)
            .parse()
            .map_err(|e: Error| Error::parse(field("assignment"), e.to_string()))?;
        if label != assignment {
            return Err(Error::parse(
                field("assignment"),
                format!("label `{}` disagrees with k/f_num/f_den ({assignment})", get(1)),
            ));
        }
        let trials = int(5)?;
        if trials == 0 {
            return Err(Error::parse(field("trials"), "must be at least 1"));
        }
        let mean = num(7)?;
        let stderr = num(8)?;
        if !(0.0..=1.0).contains(&mean) || stderr < 0.0 {
            return Err(Error::parse(
                field("pudof_mean"),
                "mean must lie in [0, 1] and stderr be non-negative",
            ));
        }
        rows.push(SweepRow {
            p,
            assignment,
            trials,
            seed: int(6)?,
            mean,
            stderr,
        });
    }
    if rows.is_empty() {
        return Err(Error::parse("csv", "no data rows"));
    }
    Ok(rows)
}

pub fn write_table_csv<W: Write>(out: W, table: &[TableRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p", "best", "pudof_mean", "pudof_stderr", "ties"])
        .map_err(csv_err)?;
    for t in table {
        let ties: Vec<String> = t.ties.iter().map(|a| a.to_string()).collect();
        w.write_record([
            format_sig6(t.p),
            t.winner.to_string(),
            format_sig6(t.mean),
            format_sig6(t.stderr),
            ties.join(";"),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::parse("csv", e.to_string()))?;
    Ok(())
}

/// Fixed-width text table; consecutive grid points with the same winner and
/// no ties are merged into one range.
pub fn format_table_text(table: &[TableRow]) -> String {
    let mut out = format!(
        "{:<15} {:<18} {}\n",
        "range of p", "best assignment", "statistical ties"
    );
    let mut i = 0;
    while i < table.len() {
        let mut j = i;
        if table[i].ties.is_empty() {
            while j + 1 < table.len() && table[j + 1].winner == table[i].winner && table[j + 1].ties.is_empty() {
                j += 1;
            }
        }
        let range = if i == j {
            format_sig6(table[i].p)
        } else {
            format!("{} to {}", format_sig6(table[i].p), format_sig6(table[j].p))
        };
        let ties = if table[i].ties.is_empty() {
            "-".to_string()
        } else {
            table[i]
                .ties
                .iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        out.push_str(&format!("{range:<15} {:<18} {ties}\n", table[i].winner.to_string()));
        i = j + 1;
    }
    out
}
