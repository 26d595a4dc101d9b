//! Trace records and their CSV/JSON emission.
//!
//! A trace file starts with one `#`-prefixed JSON line holding the
//! [`RunManifest`], followed by a CSV header and one row per
//! [`IterationRecord`]. Reals are written with 17 significant digits, which
//! round-trips every `f64` exactly.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bounds::RateEnvelope;
use crate::error::{Error, Result};

/// Header row of a trace CSV.
pub const TRACE_HEADER: &str =
    "k,f_value,grad_norm,lambda_f,g_norm,r_k,a_k,nu,theta,sigma,v_potential,skipped,denom_sign";

/// Sign of the curvature denominator of an applied update; `Zero` for
/// skipped updates and for the terminal record, which has no update.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DenomSign {
    Pos,
    Neg,
    Zero,
}

impl DenomSign {
    pub fn as_str(self) -> &'static str {
        match self {
            DenomSign::Pos => "pos",
            DenomSign::Neg => "neg",
            DenomSign::Zero => "zero",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "pos" => Some(DenomSign::Pos),
            "neg" => Some(DenomSign::Neg),
            "zero" => Some(DenomSign::Zero),
            _ => None,
        }
    }
}

/// Per-iteration trace entry. Record `k` describes the iterate `x_k` and the
/// step taken from it; the last record of a finished run describes the final
/// iterate, with `r_k = 0`, `a_k = 1` and no update.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub f_value: f64,
    pub grad_norm: f64,
    pub lambda_f: f64,
    pub g_norm: f64,
    pub r_k: f64,
    pub a_k: f64,
    pub nu: Option<f64>,
    pub theta: Option<f64>,
    pub sigma: Option<f64>,
    pub v_potential: Option<f64>,
    pub skipped: bool,
    pub denom_sign: DenomSign,
}

/// Problem constants echoed into a manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestConstants {
    pub n: usize,
    pub kappa: f64,
    pub mu: f64,
    pub lip: f64,
    pub m_const: f64,
    pub gamma: Option<f64>,
}

/// Wall-clock bounds of a run, in seconds since the Unix epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timestamps {
    pub started: f64,
    pub finished: f64,
}

/// Everything needed to rerun an experiment.
///
/// `timestamps` is optional because recording wall-clock time makes two
/// otherwise identical trace files differ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub method: String,
    pub config: serde_json::Value,
    pub constants: ManifestConstants,
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamps: Option<Timestamps>,
}

/// Formats a real with 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_real).unwrap_or_default()
}

fn sink_err(e: std::io::Error) -> Error {
    Error::SinkFailure(e.to_string())
}

/// Writes a manifest line, the header and one row per record.
pub fn write_trace_csv<W: Write>(records: &[IterationRecord], manifest: &RunManifest, sink: &mut W) -> Result<()> {
    let json = serde_json::to_string(manifest).map_err(|e| Error::SinkFailure(e.to_string()))?;
    writeln!(sink, "# {json}").map_err(sink_err)?;
    writeln!(sink, "{TRACE_HEADER}").map_err(sink_err)?;
    for r in records {
        writeln!(
            sink,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.k,
            fmt_real(r.f_value),
            fmt_real(r.grad_norm),
            fmt_real(r.lambda_f),
            fmt_real(r.g_norm),
            fmt_real(r.r_k),
            fmt_real(r.a_k),
            fmt_opt(r.nu),
            fmt_opt(r.theta),
            fmt_opt(r.sigma),
            fmt_opt(r.v_potential),
            r.skipped,
            r.denom_sign.as_str()
        )
        .map_err(sink_err)?;
    }
    Ok(())
}

fn parse_real(line_no: usize, s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| Error::MalformedLine { line_no, reason: format!("not a real: `{s}`") })
}

fn parse_opt(line_no: usize, s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_real(line_no, s).map(Some)
    }
}

/// Parses a file produced by [`write_trace_csv`].
pub fn read_trace_csv(text: &str) -> Result<(RunManifest, Vec<IterationRecord>)> {
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or(Error::MalformedLine { line_no: 1, reason: "empty trace".into() })?;
    let json =
        first.strip_prefix("# ").ok_or(Error::MalformedLine { line_no: 1, reason: "missing manifest line".into() })?;
    let manifest: RunManifest =
        serde_json::from_str(json).map_err(|e| Error::MalformedLine { line_no: 1, reason: e.to_string() })?;
    match lines.next() {
        Some((_, h)) if h == TRACE_HEADER => {}
        _ => return Err(Error::MalformedLine { line_no: 2, reason: "missing header".into() }),
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 13 {
            return Err(Error::MalformedLine { line_no, reason: format!("{} fields", f.len()) });
        }
        records.push(IterationRecord {
            k: f[0].parse().map_err(|_| Error::MalformedLine { line_no, reason: "bad k".into() })?,
            f_value: parse_real(line_no, f[1])?,
            grad_norm: parse_real(line_no, f[2])?,
            lambda_f: parse_real(line_no, f[3])?,
            g_norm: parse_real(line_no, f[4])?,
            r_k: parse_real(line_no, f[5])?,
            a_k: parse_real(line_no, f[6])?,
            nu: parse_opt(line_no, f[7])?,
            theta: parse_opt(line_no, f[8])?,
            sigma: parse_opt(line_no, f[9])?,
            v_potential: parse_opt(line_no, f[10])?,
            skipped: f[11].parse().map_err(|_| Error::MalformedLine { line_no, reason: "bad skipped flag".into() })?,
            denom_sign: DenomSign::parse(f[12])
                .ok_or(Error::MalformedLine { line_no, reason: "bad denom_sign".into() })?,
        });
    }
    Ok((manifest, records))
}

/// Writes envelopes side by side: `k,<kind>,...`. Undefined multipliers are
/// empty fields.
pub fn write_envelopes_csv<W: Write>(envelopes: &[RateEnvelope], sink: &mut W) -> Result<()> {
    let grid: Vec<usize> = envelopes.first().map(|e| e.ks()).unwrap_or_default();
    if envelopes.iter().any(|e| e.ks() != grid) {
        return Err(Error::GridMismatch);
    }
    let mut header = String::from("k");
    for e in envelopes {
        header.push(',');
        header.push_str(e.kind.as_str());
    }
    writeln!(sink, "{header}").map_err(sink_err)?;
    for (row, k) in grid.iter().enumerate() {
        let mut line = k.to_string();
        for e in envelopes {
            line.push(',');
            line.push_str(&fmt_opt(e.values[row].1));
        }
        writeln!(sink, "{line}").map_err(sink_err)?;
    }
    Ok(())
}

/// One failed case of a verification suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseFailure {
    pub case: String,
    pub check: String,
    pub violation: f64,
}

/// Machine-readable outcome of a verification suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub suite: String,
    pub cases: usize,
    pub passes: usize,
    pub failures: Vec<CaseFailure>,
}

impl SuiteSummary {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    /// Process exit status: nonzero iff any case failed.
    pub fn exit_code(&self) -> i32 {
        i32::from(!self.ok())
    }
}

/// Pretty-printed JSON of a suite summary.
pub fn verify_summary(summary: &SuiteSummary) -> String {
    serde_json::to_string_pretty(summary).expect("summary is always serializable")
}
