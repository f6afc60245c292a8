//! Result records as CSV or JSON.
//!
//! Floating-point fields are printed with 17 significant digits so a
//! written file reads back bit-exactly. Missing cross sections are empty
//! CSV fields and JSON nulls.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use super::{from_json, read_text, write_text, FORMAT_VERSION};
use crate::error::{Error, Result};

pub const FIELDS: [&str; 13] = [
    "regime_id",
    "tau",
    "rho",
    "h",
    "k_offset",
    "f_hz",
    "re_b_phi",
    "im_b_phi",
    "re_b_theta",
    "im_b_theta",
    "power_w",
    "bcs_m2",
    "bcs_dbm2",
];

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultRecord {
    pub regime_id: String,
    pub tau: usize,
    pub rho: usize,
    pub h: usize,
    pub k_offset: i64,
    pub f_hz: f64,
    pub re_b_phi: f64,
    pub im_b_phi: f64,
    pub re_b_theta: f64,
    pub im_b_theta: f64,
    pub power_w: f64,
    pub bcs_m2: Option<f64>,
    pub bcs_dbm2: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecordFormat {
    Csv,
    Json,
}

impl RecordFormat {
    /// Picks the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => RecordFormat::Json,
            _ => RecordFormat::Csv,
        }
    }
}

impl FromStr for RecordFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(RecordFormat::Csv),
            "json" => Ok(RecordFormat::Json),
            _ => Err(Error::validation(format!("unknown record format \"{s}\" (csv or json)"))),
        }
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

impl ResultRecord {
    fn fields(&self) -> [String; 13] {
        let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
        [
            self.regime_id.clone(),
            self.tau.to_string(),
            self.rho.to_string(),
            self.h.to_string(),
            self.k_offset.to_string(),
            num(self.f_hz),
            num(self.re_b_phi),
            num(self.im_b_phi),
            num(self.re_b_theta),
            num(self.im_b_theta),
            num(self.power_w),
            opt(self.bcs_m2),
            opt(self.bcs_dbm2),
        ]
    }
}

pub fn records_to_csv(records: &[ResultRecord]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(FIELDS).expect("in-memory write");
    for r in records {
        w.write_record(r.fields()).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("fields are UTF-8")
}

pub fn records_to_json(records: &[ResultRecord]) -> String {
    let mut out = format!("{{\"format_version\":{FORMAT_VERSION},\"records\":[");
    for (i, r) in records.iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        out.push('{');
        for (j, (name, value)) in FIELDS.iter().zip(r.fields()).enumerate() {
            if j > 0 {
                out.push(',');
            }
            let value = match j {
                0 => serde_json::to_string(&value).expect("string serializes"),
                _ if value.is_empty() => "null".to_string(),
                _ => value,
            };
            let _ = write!(out, "\"{name}\":{value}");
        }
        out.push('}');
    }
    out.push_str("\n]}\n");
    out
}

/// Writes records in the given format. An empty record list is refused.
pub fn write_records(records: &[ResultRecord], path: impl AsRef<Path>, format: RecordFormat) -> Result<()> {
    if records.is_empty() {
        return Err(Error::validation("no records to write"));
    }
    let text = match format {
        RecordFormat::Csv => records_to_csv(records),
        RecordFormat::Json => records_to_json(records),
    };
    write_text(path.as_ref(), &text)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordsDoc {
    format_version: u32,
    records: Vec<ResultRecord>,
}

pub fn parse_records(text: &str, format: RecordFormat, origin: &Path) -> Result<Vec<ResultRecord>> {
    match format {
        RecordFormat::Json => {
            let doc: RecordsDoc = from_json(origin, text)?;
            super::check_version(origin, doc.format_version)?;
            Ok(doc.records)
        }
        RecordFormat::Csv => {
            let mut r = csv::Reader::from_reader(text.as_bytes());
            let header = r.headers().map_err(|e| Error::parse(origin, e.to_string()))?.clone();
            if header.iter().ne(FIELDS) {
                return Err(Error::parse(origin, format!("header must be {}", FIELDS.join(","))));
            }
            r.deserialize()
                .map(|row| row.map_err(|e| Error::parse(origin, e.to_string())))
                .collect()
        }
    }
}

pub fn read_records(path: impl AsRef<Path>, format: RecordFormat) -> Result<Vec<ResultRecord>> {
    let path = path.as_ref();
    parse_records(&read_text(path)?, format, path)
}
