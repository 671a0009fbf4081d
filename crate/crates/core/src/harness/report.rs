//! Report serialization: JSON lines, CSV and a human-readable summary.
//!
//! Floats are rounded to 12 significant digits in every format. JSON
//! objects have their keys in lexicographic order.

use std::io::Write;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::stats::round_sig12;

use super::config::OutputFormat;
use super::replay::ReplayReport;
use super::run::{MeanStd, RunReport, TrialSummary};

/// Column order of the CSV trial table.
pub const CSV_HEADER: [&str; 22] = [
    "trial",
    "seed",
    "protocol",
    "n_slots",
    "detected",
    "sifted_len",
    "sift_fraction",
    "sifted_errors",
    "qber",
    "aggregate_error_rate",
    "chsh_s",
    "chsh_sigma",
    "bell_verdict",
    "agm06_q",
    "agm06_probability_s",
    "eve_agreement",
    "aborted",
    "abort_reason",
    "final_len",
    "leaked_bits",
    "eve_bound",
    "final_key_rate",
];

/// Column order of the CSV replay table.
pub const REPLAY_CSV_HEADER: [&str; 10] = [
    "slot",
    "alice_bit",
    "alice_basis",
    "eve_basis",
    "eve_bit",
    "forced_error",
    "bob_basis",
    "bob_outcome",
    "bases_match",
    "correct",
];

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(|x| serde_json::Number::from_f64(round_sig12(x)))
            .map_or(Value::Null, Value::Number),
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

fn tagged<T: Serialize>(kind: &str, value: &T) -> Value {
    let mut obj = match serde_json::to_value(value).expect("report values serialize") {
        Value::Object(o) => o,
        other => {
            let mut o = Map::new();
            o.insert("value".into(), other);
            o
        }
    };
    obj.insert("record".into(), Value::String(kind.into()));
    round_value(Value::Object(obj))
}

fn write_line(out: &mut dyn Write, v: &Value) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, v)?;
    out.write_all(b"\n")
}

fn fmt_f64(x: f64) -> String {
    format!("{}", round_sig12(x))
}

fn opt_f64(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_error(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

fn trial_row(t: &TrialSummary) -> Vec<String> {
    let pp = t.postprocessing.as_ref();
    vec![
        t.trial.to_string(),
        t.seed.to_string(),
        t.protocol.to_string(),
        t.n_slots.to_string(),
        t.detected.to_string(),
        t.sifted_len.to_string(),
        fmt_f64(t.sift_fraction),
        t.sifted_errors.to_string(),
        opt_f64(t.qber),
        fmt_f64(t.aggregate_error_rate),
        opt_f64(t.chsh_s),
        opt_f64(t.chsh_sigma),
        t.bell_verdict
            .map(|v| {
                serde_json::to_value(v)
                    .ok()
                    .and_then(|v| v.as_str().map(String::from))
                    .unwrap_or_default()
            })
            .unwrap_or_default(),
        opt_f64(t.agm06_q),
        opt_f64(t.agm06_probability_s),
        opt_f64(t.eve_agreement),
        t.aborted.to_string(),
        t.abort_reason.clone().unwrap_or_default(),
        t.final_len.to_string(),
        opt(pp.map(|p| p.leaked_bits)),
        opt(pp.map(|p| p.eve_bound)),
        fmt_f64(t.final_key_rate),
    ]
}

fn pct(x: f64) -> String {
    format!("{:.4} ({:.2}%)", x, 100.0 * x)
}

fn mean_std_text(m: &Option<MeanStd>) -> String {
    match m {
        Some(m) => format!("{:.6} ± {:.6} (n = {})", m.mean, m.std, m.count),
        None => "n/a".into(),
    }
}

fn human(report: &RunReport, out: &mut dyn Write) -> std::io::Result<()> {
    let c = &report.config;
    writeln!(out, "{}", report.version)?;
    writeln!(
        out,
        "protocol {}  slots {}  trials {}  seed {}  adversary {}",
        c.protocol,
        c.slots,
        c.trials,
        c.seed,
        c.adversary.name()
    )?;
    writeln!(
        out,
        "decision: abort when {} > {}",
        c.decision.metric.name(),
        c.decision.threshold
    )?;
    for t in &report.trials {
        writeln!(out)?;
        writeln!(out, "trial {} (seed {})", t.trial, t.seed)?;
        writeln!(out, "  detected        {} of {}", t.detected, t.n_slots)?;
        writeln!(
            out,
            "  sifted bits     {} (sift fraction {:.6})",
            t.sifted_len, t.sift_fraction
        )?;
        match t.qber {
            Some(q) => writeln!(out, "  sifted QBER     {}", pct(q))?,
            None => writeln!(out, "  sifted QBER     n/a")?,
        }
        writeln!(
            out,
            "  aggregate error rate (all transmitted slots)  {}",
            pct(t.aggregate_error_rate)
        )?;
        if let (Some(s), Some(sigma)) = (t.chsh_s, t.chsh_sigma) {
            writeln!(out, "  CHSH S          {s:.6} ± {sigma:.6}")?;
        }
        if let Some(q) = t.agm06_q {
            writeln!(out, "  AGM06 Q         {q:.6}")?;
        }
        if let Some(s) = t.agm06_probability_s {
            writeln!(out, "  AGM06 probability-form S  {s:.6}")?;
        }
        if let Some(a) = t.eve_agreement {
            writeln!(out, "  Eve agreement   {a:.6}")?;
        }
        match &t.abort_reason {
            Some(r) => writeln!(out, "  decision        abort: {r}")?,
            None => writeln!(out, "  decision        continue")?,
        }
        if let Some(p) = &t.postprocessing {
            writeln!(
                out,
                "  final key       {} bits (leaked {}, Eve bound {}, confirmed {})",
                p.final_len, p.leaked_bits, p.eve_bound, p.confirmed
            )?;
            if let Some(f) = &p.failure {
                writeln!(out, "  post-processing failed: {f}")?;
            }
        }
    }
    let a = &report.aggregate;
    writeln!(out)?;
    writeln!(
        out,
        "aggregate over {} trials: {} established, {} aborted",
        a.trials, a.established, a.aborted
    )?;
    writeln!(out, "  sift fraction   {}", mean_std_text(&a.sift_fraction))?;
    writeln!(out, "  sifted QBER     {}", mean_std_text(&a.qber))?;
    writeln!(
        out,
        "  aggregate error rate (all transmitted slots)  {}",
        mean_std_text(&a.aggregate_error_rate)
    )?;
    if a.chsh_s.is_some() {
        writeln!(out, "  CHSH S          {}", mean_std_text(&a.chsh_s))?;
    }
    writeln!(out, "  final key rate  {}", mean_std_text(&a.final_key_rate))
}

/// Writes a run report in the requested format.
pub fn emit_report(report: &RunReport, format: OutputFormat, out: &mut dyn Write) -> std::io::Result<()> {
    match format {
        OutputFormat::JsonLines => {
            for t in &report.trials {
                write_line(out, &tagged("trial", t))?;
            }
            let mut agg = Map::new();
            agg.insert("version".into(), Value::String(report.version.clone()));
            agg.insert(
                "config".into(),
                serde_json::to_value(&report.config).expect("config serializes"),
            );
            agg.insert(
                "aggregate".into(),
                serde_json::to_value(&report.aggregate).expect("aggregate serializes"),
            );
            write_line(out, &tagged("aggregate", &Value::Object(agg)))
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(CSV_HEADER).map_err(csv_error)?;
            for t in &report.trials {
                w.write_record(trial_row(t)).map_err(csv_error)?;
            }
            w.flush()
        }
        OutputFormat::Human => human(report, out),
    }
}

fn replay_human(report: &ReplayReport, out: &mut dyn Write) -> std::io::Result<()> {
    let sym = |c: Option<char>| c.map_or("-".to_string(), String::from);
    let bit = |b: Option<u8>| b.map_or("-".to_string(), |b| b.to_string());
    writeln!(out, "{}", report.version)?;
    writeln!(out, "slot  alice  eve    bob    match  result")?;
    for r in &report.rows {
        writeln!(
            out,
            "{:>4}  {} {}    {} {}    {} {}    {:<5}  {}{}",
            r.slot,
            r.alice_basis,
            r.alice_bit,
            sym(r.eve_basis),
            bit(r.eve_bit),
            r.bob_basis,
            bit(r.bob_outcome),
            if r.bases_match { "C" } else { "W" },
            match r.correct {
                Some(true) => "ok",
                Some(false) => "error",
                None => "discarded",
            },
            if r.forced_error { " (forced error)" } else { "" }
        )?;
    }
    let s = &report.summary;
    let correct = report.rows.iter().filter(|r| r.correct == Some(true)).count();
    writeln!(out)?;
    writeln!(out, "sifted bits     {} of {}", s.sifted_len, s.n_slots)?;
    match s.qber {
        Some(q) => writeln!(out, "sifted QBER     {}", pct(q))?,
        None => writeln!(out, "sifted QBER     n/a")?,
    }
    writeln!(
        out,
        "aggregate error rate (all transmitted slots)  {}/{} = {}",
        s.n_slots - correct,
        s.n_slots,
        pct(s.aggregate_error_rate)
    )?;
    match &s.abort_reason {
        Some(r) => writeln!(out, "decision        abort: {r}"),
        None => writeln!(out, "decision        continue"),
    }
}

/// Writes a replay report: per-slot rows followed by the summary.
pub fn emit_replay(report: &ReplayReport, format: OutputFormat, out: &mut dyn Write) -> std::io::Result<()> {
    match format {
        OutputFormat::JsonLines => {
            for r in &report.rows {
                write_line(out, &tagged("slot", r))?;
            }
            let mut summary = Map::new();
            summary.insert("version".into(), Value::String(report.version.clone()));
            summary.insert(
                "replay".into(),
                serde_json::to_value(&report.replay).expect("replay serializes"),
            );
            summary.insert(
                "summary".into(),
                serde_json::to_value(&report.summary).expect("summary serializes"),
            );
            write_line(out, &tagged("replay-summary", &Value::Object(summary)))
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(REPLAY_CSV_HEADER).map_err(csv_error)?;
            let sym = |c: Option<char>| c.map(String::from).unwrap_or_default();
            for r in &report.rows {
                w.write_record([
                    r.slot.to_string(),
                    r.alice_bit.to_string(),
                    r.alice_basis.to_string(),
                    sym(r.eve_basis),
                    opt(r.eve_bit),
                    r.forced_error.to_string(),
                    r.bob_basis.to_string(),
                    opt(r.bob_outcome),
                    r.bases_match.to_string(),
                    opt(r.correct),
                ])
                .map_err(csv_error)?;
            }
            w.flush()
        }
        OutputFormat::Human => replay_human(report, out),
    }
}

/// Serializes a report to a string.
pub fn report_string(report: &RunReport, format: OutputFormat) -> String {
    let mut buf = Vec::new();
    emit_report(report, format, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("reports are UTF-8")
}
