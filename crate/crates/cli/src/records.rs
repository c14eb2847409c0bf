//! Structured serialization: a documented, versioned, line-delimited record
//! format. Each line is one JSON object `{"format": "presmot", "version": 1,
//! "payload": {<kind>: <value>}}`. Deserialize ∘ serialize is the identity
//! on values; serialization is deterministic, so round-trips are byte-exact.

use num_bigint::BigInt;
use num_rational::BigRational;
use presmot_core::{CanonicalForm, ConFun, MotConst, PresSet, SpecReport, Verdict};
use serde::{Deserialize, Serialize};

use crate::syntax::SynError;

pub const FORMAT_NAME: &str = "presmot";
pub const FORMAT_VERSION: u32 = 1;

/// Rational numbers travel as exact `"num/den"` strings.
fn rat_to_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn rat_from_string(s: &str) -> Option<BigRational> {
    let (n, d) = s.split_once('/')?;
    let n: BigInt = n.parse().ok()?;
    let d: BigInt = d.parse().ok()?;
    if d == BigInt::from(0) {
        return None;
    }
    Some(BigRational::new(n, d))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct SpecReportWire {
    pub id: String,
    pub q: String,
    pub symbolic_value: Option<String>,
    pub partial_sum: Option<String>,
    pub truncation: Option<u64>,
    pub tail_bound: Option<String>,
    pub verdict: String,
}

impl SpecReportWire {
    pub fn from_report(r: &SpecReport) -> Self {
        SpecReportWire {
            id: r.id.clone(),
            q: rat_to_string(&r.q),
            symbolic_value: r.symbolic_value.as_ref().map(rat_to_string),
            partial_sum: r.partial_sum.as_ref().map(rat_to_string),
            truncation: r.truncation,
            tail_bound: r.tail_bound.as_ref().map(rat_to_string),
            verdict: match &r.verdict {
                Verdict::Agree => "agree".to_owned(),
                Verdict::Disagree => "disagree".to_owned(),
                Verdict::Error(e) => format!("error: {e}"),
            },
        }
    }

    pub fn to_report(&self) -> Option<SpecReport> {
        Some(SpecReport {
            id: self.id.clone(),
            q: rat_from_string(&self.q)?,
            symbolic_value: match &self.symbolic_value {
                Some(s) => Some(rat_from_string(s)?),
                None => None,
            },
            partial_sum: match &self.partial_sum {
                Some(s) => Some(rat_from_string(s)?),
                None => None,
            },
            truncation: self.truncation,
            tail_bound: match &self.tail_bound {
                Some(s) => Some(rat_from_string(s)?),
                None => None,
            },
            verdict: if self.verdict == "agree" {
                Verdict::Agree
            } else if self.verdict == "disagree" {
                Verdict::Disagree
            } else {
                Verdict::Error(
                    self.verdict.strip_prefix("error: ").unwrap_or(&self.verdict).to_owned(),
                )
            },
        })
    }
}

/// Payload of one record line, externally tagged by its kind.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Payload {
    #[serde(rename = "motconst")]
    MotConst(MotConst),
    #[serde(rename = "presset")]
    PresSet { vars: Vec<String>, set: PresSet },
    #[serde(rename = "confun")]
    ConFun { vars: Vec<String>, fun: ConFun },
    #[serde(rename = "canonical")]
    Canonical(CanonicalForm),
    #[serde(rename = "specreport")]
    SpecReport(SpecReportWire),
    #[serde(rename = "verdictline")]
    Text(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Record {
    pub format: String,
    pub version: u32,
    pub payload: Payload,
}

impl Record {
    pub fn new(payload: Payload) -> Self {
        Record { format: FORMAT_NAME.to_owned(), version: FORMAT_VERSION, payload }
    }
}

/// Serialize one record to its line (without the trailing newline).
pub fn to_line(payload: &Payload) -> String {
    let rec = Record::new(payload.clone());
    serde_json::to_string(&rec).expect("record serialization")
}

/// Parse one record line.
pub fn from_line(line: &str) -> Result<Payload, SynError> {
    let span = crate::syntax::Span { start: 0, end: line.len(), line: 1, col: 1 };
    let rec: Record = serde_json::from_str(line)
        .map_err(|e| SynError { span, message: format!("bad record: {e}") })?;
    if rec.format != FORMAT_NAME {
        return Err(SynError { span, message: format!("unknown record format `{}`", rec.format) });
    }
    if rec.version != FORMAT_VERSION {
        return Err(SynError {
            span,
            message: format!("unsupported record version {}", rec.version),
        });
    }
    Ok(rec.payload)
}
