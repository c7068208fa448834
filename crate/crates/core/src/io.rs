//! File formats: round logs, trajectories, reports, parameter files.
//!
//! Machine-readable floats are written with 17 significant digits so they
//! parse back to the identical `f64`. Human tables use 3 decimals.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{AnalysisReport, ComparisonReport};
use crate::error::{Error, Result};
use crate::game::{play_round, GameCondition, RoundContext, RoundRecord, Stakes};
use crate::scoring::TrajectoryRow;
use crate::trust::{Role, TrustParams};

pub const ROUND_LOG_HEADER: [&str; 7] = [
    "session_id",
    "game_condition",
    "round",
    "sender_id",
    "receiver_id",
    "amount_sent",
    "amount_returned",
];

pub const TRAJECTORY_HEADER: [&str; 13] = [
    "session_id",
    "game_condition",
    "round",
    "observer_id",
    "partner_id",
    "send_proportion",
    "current_trust",
    "aggregate_trust",
    "trend_factor",
    "atf",
    "change_rate",
    "trust_value",
    "reputation_value",
];

pub const COMPARISON_HEADER: [&str; 8] = [
    "round",
    "role",
    "df",
    "t_trust",
    "adj_r2_trust",
    "t_reputation",
    "adj_r2_reputation",
    "n",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// `%.17g`: shortest fixed or exponent form carrying 17 significant digits.
pub fn format_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let sign = if negative { "-" } else { "" };

    if !(-4..17).contains(&exp) {
        let mut m = format!("{}.{}", &digits[..1], &digits[1..]);
        trim_fraction(&mut m);
        let esign = if exp < 0 { '-' } else { '+' };
        return format!("{sign}{m}e{esign}{:02}", exp.abs());
    }
    let mut out = if exp >= 0 {
        let split = exp as usize + 1;
        format!("{}.{}", &digits[..split], &digits[split..])
    } else {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    };
    trim_fraction(&mut out);
    format!("{sign}{out}")
}

fn trim_fraction(s: &mut String) {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
}

fn opt_g17(x: Option<f64>) -> String {
    x.map(format_g17).unwrap_or_default()
}

/// A parsed round log plus non-fatal remarks.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedLog {
    pub records: Vec<RoundRecord>,
    pub warnings: Vec<String>,
}

fn field(rec: &csv::StringRecord, idx: usize, line: u64) -> Result<&str> {
    rec.get(idx).ok_or_else(|| Error::Parse {
        line,
        column: ROUND_LOG_HEADER[idx].into(),
        message: "missing field".into(),
    })
}

fn parse_int<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, line: u64) -> Result<T> {
    let raw = field(rec, idx, line)?;
    raw.trim().parse().map_err(|_| Error::Parse {
        line,
        column: ROUND_LOG_HEADER[idx].into(),
        message: format!("`{raw}` is not a non-negative integer"),
    })
}

/// Reads a round log in the canonical schema, validating every row.
pub fn read_round_log<R: Read>(reader: R, stakes: Stakes) -> Result<ParsedLog> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut rows = rdr.records();
    let header = match rows.next() {
        Some(h) => h?,
        None => {
            return Err(Error::Parse {
                line: 1,
                column: String::new(),
                message: "missing header".into(),
            })
        }
    };
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != ROUND_LOG_HEADER {
        return Err(Error::Parse {
            line: 1,
            column: String::new(),
            message: format!(
                "header must be `{}`, found `{}`",
                ROUND_LOG_HEADER.join(","),
                got.join(",")
            ),
        });
    }

    let mut records = Vec::new();
    for row in rows {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != ROUND_LOG_HEADER.len() {
            return Err(Error::Parse {
                line,
                column: String::new(),
                message: format!("expected {} fields, found {}", ROUND_LOG_HEADER.len(), row.len()),
            });
        }
        let text = |idx: usize| -> Result<String> {
            let v = field(&row, idx, line)?.trim();
            if v.is_empty() {
                Err(Error::Parse {
                    line,
                    column: ROUND_LOG_HEADER[idx].into(),
                    message: "empty value".into(),
                })
            } else {
                Ok(v.to_string())
            }
        };
        let condition: GameCondition = text(1)?.parse().map_err(|e: Error| Error::Parse {
            line,
            column: ROUND_LOG_HEADER[1].into(),
            message: e.to_string(),
        })?;
        let round: u32 = parse_int(&row, 2, line)?;
        if round == 0 {
            return Err(Error::Parse {
                line,
                column: "round".into(),
                message: "rounds are numbered from 1".into(),
            });
        }
        let ctx = RoundContext {
            session_id: text(0)?,
            game_condition: condition,
            round_index: round,
            sender_id: text(3)?,
            receiver_id: text(4)?,
        };
        if ctx.sender_id == ctx.receiver_id {
            return Err(Error::protocol(
                format!("line {line}"),
                "sender and receiver are the same participant",
            ));
        }
        let sent: u32 = parse_int(&row, 5, line)?;
        let returned: u32 = parse_int(&row, 6, line)?;
        let record = play_round(ctx, sent, returned, stakes).map_err(|e| match e {
            Error::Protocol { field, message } => Error::Protocol {
                field: format!("line {line} {field}"),
                message,
            },
            other => other,
        })?;
        records.push(record);
    }
    let mut warnings = Vec::new();
    if records.is_empty() {
        warnings.push("round log contains no rounds".to_string());
    }
    Ok(ParsedLog { records, warnings })
}

pub fn parse_round_log(path: impl AsRef<Path>, stakes: Stakes) -> Result<ParsedLog> {
    read_round_log(File::open(path)?, stakes)
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

pub fn write_round_log<W: Write>(w: W, records: &[RoundRecord]) -> Result<()> {
    let mut wtr = csv_writer(w);
    wtr.write_record(ROUND_LOG_HEADER)?;
    for r in records {
        wtr.write_record([
            r.session_id.as_str(),
            r.game_condition.as_str(),
            &r.round_index.to_string(),
            &r.sender_id,
            &r.receiver_id,
            &r.amount_sent.to_string(),
            &r.amount_returned.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_trajectories<W: Write>(w: W, rows: &[TrajectoryRow]) -> Result<()> {
    let mut wtr = csv_writer(w);
    wtr.write_record(TRAJECTORY_HEADER)?;
    for r in rows {
        wtr.write_record([
            r.session_id.clone(),
            r.game_condition.to_string(),
            r.round.to_string(),
            r.observer_id.clone(),
            r.partner_id.clone(),
            format_g17(r.send_proportion),
            format_g17(r.current_trust),
            format_g17(r.aggregate_trust),
            format_g17(r.trend_factor),
            format_g17(r.atf),
            format_g17(r.change_rate),
            format_g17(r.trust_value),
            format_g17(r.reputation_value),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// The table-level projection of a comparison row.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTableRow {
    pub round: u32,
    pub role: Role,
    pub df: usize,
    pub t_trust: f64,
    pub adj_r2_trust: f64,
    pub t_reputation: f64,
    pub adj_r2_reputation: f64,
    pub n: usize,
}

pub fn comparison_table(report: &ComparisonReport) -> Vec<ComparisonTableRow> {
    report
        .rows
        .iter()
        .map(|r| ComparisonTableRow {
            round: r.round,
            role: r.role,
            df: r.df,
            t_trust: r.t_trust,
            adj_r2_trust: r.adj_r2_trust,
            t_reputation: r.t_reputation,
            adj_r2_reputation: r.adj_r2_reputation,
            n: r.n,
        })
        .collect()
}

pub fn write_comparison_csv<W: Write>(w: W, report: &ComparisonReport) -> Result<()> {
    let mut wtr = csv_writer(w);
    wtr.write_record(COMPARISON_HEADER)?;
    for r in comparison_table(report) {
        wtr.write_record([
            r.round.to_string(),
            r.role.as_str().to_string(),
            r.df.to_string(),
            format_g17(r.t_trust),
            format_g17(r.adj_r2_trust),
            format_g17(r.t_reputation),
            format_g17(r.adj_r2_reputation),
            r.n.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_comparison_csv<R: Read>(reader: R) -> Result<Vec<ComparisonTableRow>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != COMPARISON_HEADER {
        return Err(Error::Parse {
            line: 1,
            column: String::new(),
            message: format!("header must be `{}`", COMPARISON_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let get = |i: usize| -> Result<&str> {
            row.get(i).ok_or_else(|| Error::Parse {
                line,
                column: COMPARISON_HEADER[i].into(),
                message: "missing field".into(),
            })
        };
        let bad = |i: usize| Error::Parse {
            line,
            column: COMPARISON_HEADER[i].into(),
            message: "malformed value".into(),
        };
        let num = |i: usize| -> Result<f64> { get(i)?.parse().map_err(|_| bad(i)) };
        let int = |i: usize| -> Result<usize> { get(i)?.parse().map_err(|_| bad(i)) };
        let role = match get(1)? {
            "sender" => Role::Sender,
            "receiver" => Role::Receiver,
            _ => return Err(bad(1)),
        };
        out.push(ComparisonTableRow {
            round: get(0)?.parse().map_err(|_| bad(0))?,
            role,
            df: int(2)?,
            t_trust: num(3)?,
            adj_r2_trust: num(4)?,
            t_reputation: num(5)?,
            adj_r2_reputation: num(6)?,
            n: int(7)?,
        });
    }
    Ok(out)
}

/// Fixed-width text table: 3 decimals, significance marks on t values.
pub fn comparison_text_table(report: &ComparisonReport) -> String {
    let mut s = format!(
        "{:<7} {:<9} {:>5} {:>12} {:>8} {:>12} {:>8}\n",
        "round", "role", "df", "t_trust", "adjR2", "t_rep", "adjR2"
    );
    for r in &report.rows {
        let t_trust = format!("{:.3}{}", r.t_trust, r.trust_fit.stars);
        let t_rep = format!("{:.3}{}", r.t_reputation, r.reputation_fit.stars);
        s.push_str(&format!(
            "{:<7} {:<9} {:>5} {:>12} {:>8.3} {:>12} {:>8.3}\n",
            r.round,
            r.role.as_str(),
            r.df,
            t_trust,
            r.adj_r2_trust,
            t_rep,
            r.adj_r2_reputation
        ));
    }
    s
}

pub fn write_measures_csv<W: Write>(w: W, report: &AnalysisReport) -> Result<()> {
    let mut wtr = csv_writer(w);
    wtr.write_record([
        "session_id",
        "participant_id",
        "game_condition",
        "avg_send_proportion_as_sender",
        "avg_send_proportion_as_receiver",
        "zero_send_rate_as_sender",
        "zero_return_rate_as_receiver",
        "sender_rounds",
        "receiver_rounds",
    ])?;
    for m in &report.measures {
        wtr.write_record([
            m.session_id.clone(),
            m.participant_id.clone(),
            m.game_condition.to_string(),
            opt_g17(m.avg_send_proportion_as_sender),
            opt_g17(m.avg_send_proportion_as_receiver),
            opt_g17(m.zero_send_rate_as_sender),
            opt_g17(m.zero_return_rate_as_receiver),
            m.sender_rounds.to_string(),
            m.receiver_rounds.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_tests_csv<W: Write>(w: W, report: &AnalysisReport) -> Result<()> {
    let mut wtr = csv_writer(w);
    wtr.write_record([
        "role",
        "baseline",
        "condition",
        "pairs",
        "mean_difference",
        "ci_lo",
        "ci_hi",
        "ci_df",
        "degenerate",
        "welch_t",
        "welch_df",
    ])?;
    for c in &report.comparisons {
        let p = c.paired.as_ref();
        wtr.write_record([
            c.role.as_str().to_string(),
            c.baseline.to_string(),
            c.condition.to_string(),
            c.pairs.to_string(),
            opt_g17(p.map(|p| p.mean_difference)),
            opt_g17(p.map(|p| p.lo)),
            opt_g17(p.map(|p| p.hi)),
            p.map(|p| p.df.to_string()).unwrap_or_default(),
            p.map(|p| p.degenerate.to_string()).unwrap_or_default(),
            opt_g17(c.welch.map(|w| w.t)),
            opt_g17(c.welch.map(|w| w.df)),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_zero_rates_csv<W: Write>(w: W, report: &AnalysisReport) -> Result<()> {
    let mut wtr = csv_writer(w);
    wtr.write_record(["game_condition", "role", "zero_send_rate"])?;
    for z in &report.zero_rates {
        wtr.write_record([z.game_condition.to_string(), z.role.as_str().to_string(), opt_g17(z.rate)])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Where an output came from: the run configuration and its hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
}

impl Provenance {
    pub fn new(command: &str, config: &impl Serialize, seed: Option<u64>) -> Result<Self> {
        let value = serde_json::to_value(config)?;
        // serde_json maps are key-sorted, so this encoding is canonical
        let bytes = serde_json::to_vec(&value)?;
        Ok(Self {
            tool: "trustgame".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_sha256: sha256_hex(&bytes),
            seed,
            config: value,
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    provenance: &'a Provenance,
    report: &'a T,
}

/// Writes `{ "provenance": ..., "report": ... }` as pretty JSON with a trailing newline.
pub fn write_json<W: Write, T: Serialize>(mut w: W, provenance: &Provenance, report: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, &Envelope { provenance, report })?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Writes a comparison report as CSV or JSON.
pub fn write_report(
    report: &ComparisonReport,
    provenance: &Provenance,
    format: Format,
    path: impl AsRef<Path>,
) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    match format {
        Format::Csv => write_comparison_csv(file, report),
        Format::Json => write_json(file, provenance, report),
    }
}

/// Reads a parameter file, or returns the defaults for the literal `default`.
pub fn load_params(spec: &str) -> Result<TrustParams<f64>> {
    if spec == "default" {
        return Ok(TrustParams::default());
    }
    let text = std::fs::read_to_string(spec)?;
    parse_params(&text)
}

pub fn parse_params(text: &str) -> Result<TrustParams<f64>> {
    let params: TrustParams<f64> = serde_json::from_str(text)?;
    params.validate()?;
    Ok(params)
}
