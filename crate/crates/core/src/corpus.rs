//! Review datasets: parsing, validation, labeling and summary statistics.
//!
//! Input files carry seven columns, `app_name,review,rating,review_time,
//! helpful_votes,response,response_time`, either as a CSV with exactly that
//! header or as JSON lines with the same keys. Rows that break a record
//! invariant are skipped and reported with their line number; the parse
//! itself only fails when the file cannot be read or the CSV header is wrong.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, SecondsFormat, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Column names of the input schema, in header order.
pub const COLUMNS: [&str; 7] = [
    "app_name",
    "review",
    "rating",
    "review_time",
    "helpful_votes",
    "response",
    "response_time",
];

const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RecordId(pub u64);

impl fmt::Display for RecordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReviewRecord {
    pub record_id: RecordId,
    pub app_name: String,
    pub review_text: String,
    pub rating: u8,
    pub review_time: DateTime<Utc>,
    pub helpful_votes: u64,
    pub response_text: Option<String>,
    pub response_time: Option<DateTime<Utc>>,
}

impl ReviewRecord {
    /// True when the developer answered with non-blank text.
    pub fn has_response(&self) -> bool {
        self.response_text
            .as_deref()
            .is_some_and(|text| !text.trim().is_empty())
    }

    /// Response time for records that count as responded.
    pub fn responded_at(&self) -> Option<DateTime<Utc>> {
        if self.has_response() {
            self.response_time
        } else {
            None
        }
    }

    /// Days between review and response, fractional when times of day are known.
    pub fn latency_days(&self) -> Option<f64> {
        self.responded_at()
            .map(|at| (at - self.review_time).num_seconds() as f64 / SECONDS_PER_DAY)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    pub fn from_path(path: &Path) -> Option<Format> {
        match path.extension()?.to_str()? {
            "csv" => Some(Format::Csv),
            "jsonl" | "json" | "ndjson" => Some(Format::Jsonl),
            _ => None,
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(Error::Config(format!("unknown dataset format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowErrorKind {
    MissingColumn(String),
    BadRating(String),
    BadHelpfulVotes(String),
    BadTimestamp(String),
    ResponseWithoutTimestamp,
    TimestampWithoutResponse,
    Malformed(String),
}

impl fmt::Display for RowErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowErrorKind::MissingColumn(c) => write!(f, "missing column `{c}`"),
            RowErrorKind::BadRating(v) => write!(f, "rating `{v}` is not an integer in 1..=5"),
            RowErrorKind::BadHelpfulVotes(v) => {
                write!(f, "helpful_votes `{v}` is not a non-negative integer")
            }
            RowErrorKind::BadTimestamp(v) => write!(f, "timestamp `{v}` is not ISO-8601"),
            RowErrorKind::ResponseWithoutTimestamp => write!(f, "response has no response_time"),
            RowErrorKind::TimestampWithoutResponse => {
                write!(f, "response_time given without response text")
            }
            RowErrorKind::Malformed(detail) => write!(f, "malformed row: {detail}"),
        }
    }
}

/// A skipped input row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    /// 1-based line number in the input file.
    pub line: u64,
    pub kind: RowErrorKind,
}

#[derive(Debug, Clone, Default)]
pub struct ParseOutcome {
    pub records: Vec<ReviewRecord>,
    pub errors: Vec<RowError>,
}

/// Parse an ISO-8601 date or date-time. Values without an offset are UTC;
/// bare dates are midnight UTC.
pub fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    let raw = raw.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.with_timezone(&Utc));
    }
    for pattern in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(raw, pattern) {
            return Some(naive.and_utc());
        }
    }
    NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|naive| naive.and_utc())
}

pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

/// Raw string fields of one row, before validation.
struct RawRow<'a> {
    app_name: &'a str,
    review: &'a str,
    rating: &'a str,
    review_time: &'a str,
    helpful_votes: &'a str,
    response: Option<&'a str>,
    response_time: Option<&'a str>,
}

fn validate_row(id: RecordId, raw: RawRow<'_>) -> std::result::Result<ReviewRecord, RowErrorKind> {
    let rating = match raw.rating.trim().parse::<u8>() {
        Ok(r @ 1..=5) => r,
        _ => return Err(RowErrorKind::BadRating(raw.rating.to_string())),
    };
    let review_time = parse_timestamp(raw.review_time)
        .ok_or_else(|| RowErrorKind::BadTimestamp(raw.review_time.to_string()))?;
    let helpful_votes = raw
        .helpful_votes
        .trim()
        .parse::<u64>()
        .map_err(|_| RowErrorKind::BadHelpfulVotes(raw.helpful_votes.to_string()))?;

    let response_text = raw
        .response
        .filter(|text| !text.trim().is_empty())
        .map(str::to_string);
    let response_time = match raw.response_time.map(str::trim).filter(|t| !t.is_empty()) {
        Some(t) => Some(parse_timestamp(t).ok_or_else(|| RowErrorKind::BadTimestamp(t.to_string()))?),
        None => None,
    };
    match (&response_text, &response_time) {
        (Some(_), None) => return Err(RowErrorKind::ResponseWithoutTimestamp),
        (None, Some(_)) => return Err(RowErrorKind::TimestampWithoutResponse),
        _ => {}
    }

    Ok(ReviewRecord {
        record_id: id,
        app_name: raw.app_name.to_string(),
        review_text: raw.review.to_string(),
        rating,
        review_time,
        helpful_votes,
        response_text,
        response_time,
    })
}

pub fn parse_dataset(path: &Path, format: Format) -> Result<ParseOutcome> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    match format {
        Format::Csv => parse_csv(file),
        Format::Jsonl => parse_jsonl(BufReader::new(file)),
    }
}

/// Parse CSV input. Record ids are the 0-based data-row ordinals.
pub fn parse_csv<R: std::io::Read>(reader: R) -> Result<ParseOutcome> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let header: Vec<&str> = headers.iter().map(str::trim).collect();
    if let Some(missing) = COLUMNS.iter().find(|c| !header.contains(c)) {
        return Err(Error::MissingColumn(missing.to_string()));
    }
    if header[..] != COLUMNS[..] {
        return Err(Error::malformed(
            "CSV header",
            format!("expected `{}`, found `{}`", COLUMNS.join(","), header.join(",")),
        ));
    }

    let mut out = ParseOutcome::default();
    for (ordinal, row) in rdr.records().enumerate() {
        let id = RecordId(ordinal as u64);
        let row = match row {
            Ok(row) => row,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                out.errors.push(RowError {
                    line,
                    kind: RowErrorKind::Malformed(e.to_string()),
                });
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line());
        if row.len() < COLUMNS.len() {
            out.errors.push(RowError {
                line,
                kind: RowErrorKind::MissingColumn(COLUMNS[row.len()].to_string()),
            });
            continue;
        }
        let raw = RawRow {
            app_name: &row[0],
            review: &row[1],
            rating: &row[2],
            review_time: &row[3],
            helpful_votes: &row[4],
            response: Some(&row[5]),
            response_time: Some(&row[6]),
        };
        match validate_row(id, raw) {
            Ok(record) => out.records.push(record),
            Err(kind) => out.errors.push(RowError { line, kind }),
        }
    }
    Ok(out)
}

fn json_scalar(value: &Value) -> Option<String> {
    match value {
        Value::Null => None,
        Value::String(s) => Some(s.clone()),
        other => Some(other.to_string()),
    }
}

/// Parse JSON lines. An integer `record_id` key, when present, is kept;
/// otherwise ids are the 0-based non-blank line ordinals.
pub fn parse_jsonl<R: BufRead>(reader: R) -> Result<ParseOutcome> {
    let mut out = ParseOutcome::default();
    let mut ordinal = 0u64;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = line.map_err(|e| Error::io("<jsonl>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fallback_id = RecordId(ordinal);
        ordinal += 1;
        let object: Map<String, Value> = match serde_json::from_str(&line) {
            Ok(Value::Object(map)) => map,
            Ok(_) => {
                out.errors.push(RowError {
                    line: line_no,
                    kind: RowErrorKind::Malformed("expected a JSON object".into()),
                });
                continue;
            }
            Err(e) => {
                out.errors.push(RowError {
                    line: line_no,
                    kind: RowErrorKind::Malformed(e.to_string()),
                });
                continue;
            }
        };
        let fields: HashMap<&str, Option<String>> = COLUMNS
            .iter()
            .map(|&c| (c, object.get(c).and_then(json_scalar)))
            .collect();
        let required = ["app_name", "review", "rating", "review_time", "helpful_votes"];
        if let Some(missing) = required.iter().find(|c| fields[**c].is_none()) {
            out.errors.push(RowError {
                line: line_no,
                kind: RowErrorKind::MissingColumn(missing.to_string()),
            });
            continue;
        }
        let id = object
            .get("record_id")
            .and_then(Value::as_u64)
            .map_or(fallback_id, RecordId);
        let get = |c: &str| fields[c].as_deref();
        let raw = RawRow {
            app_name: get("app_name").unwrap_or_default(),
            review: get("review").unwrap_or_default(),
            rating: get("rating").unwrap_or_default(),
            review_time: get("review_time").unwrap_or_default(),
            helpful_votes: get("helpful_votes").unwrap_or_default(),
            response: get("response"),
            response_time: get("response_time"),
        };
        match validate_row(id, raw) {
            Ok(record) => out.records.push(record),
            Err(kind) => out.errors.push(RowError {
                line: line_no,
                kind,
            }),
        }
    }
    Ok(out)
}

/// Write records in the seven-column CSV layout.
pub fn write_csv<W: Write>(records: &[ReviewRecord], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(COLUMNS)?;
    for r in records {
        wtr.write_record([
            r.app_name.as_str(),
            r.review_text.as_str(),
            &r.rating.to_string(),
            &format_timestamp(&r.review_time),
            &r.helpful_votes.to_string(),
            r.response_text.as_deref().unwrap_or(""),
            &r.response_time.as_ref().map(format_timestamp).unwrap_or_default(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Write records as JSON lines, keeping their ids under `record_id`.
pub fn write_jsonl<W: Write>(records: &[ReviewRecord], mut writer: W) -> Result<()> {
    for r in records {
        let mut obj = Map::new();
        obj.insert("record_id".into(), Value::from(r.record_id.0));
        obj.insert("app_name".into(), Value::from(r.app_name.clone()));
        obj.insert("review".into(), Value::from(r.review_text.clone()));
        obj.insert("rating".into(), Value::from(r.rating));
        obj.insert("review_time".into(), Value::from(format_timestamp(&r.review_time)));
        obj.insert("helpful_votes".into(), Value::from(r.helpful_votes));
        obj.insert(
            "response".into(),
            r.response_text.clone().map_or(Value::Null, Value::from),
        );
        obj.insert(
            "response_time".into(),
            r.response_time
                .as_ref()
                .map_or(Value::Null, |t| Value::from(format_timestamp(t))),
        );
        serde_json::to_writer(&mut writer, &Value::Object(obj))?;
        writer.write_all(b"\n").map_err(|e| Error::io("<jsonl>", e))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Approach {
    /// Positive iff the developer responded at all.
    ResponsePresence,
    /// Over responded reviews only: positive iff the response came quickly.
    ResponseUrgency,
}

impl Approach {
    pub fn cli_name(self) -> &'static str {
        match self {
            Approach::ResponsePresence => "response",
            Approach::ResponseUrgency => "urgency",
        }
    }
}

impl std::str::FromStr for Approach {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "response" | "presence" | "response_presence" => Ok(Approach::ResponsePresence),
            "urgency" | "response_urgency" => Ok(Approach::ResponseUrgency),
            other => Err(Error::Config(format!("unknown approach `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub record_id: RecordId,
    pub label: u8,
    pub approach: Approach,
}

pub fn label_response_presence(records: &[ReviewRecord]) -> Vec<LabeledExample> {
    records
        .iter()
        .map(|r| LabeledExample {
            record_id: r.record_id,
            label: u8::from(r.has_response()),
            approach: Approach::ResponsePresence,
        })
        .collect()
}

/// Split off responded reviews that were edited after the response came in.
///
/// Such a review carries its edit date rather than its original post date, which
/// shows up as `review_time > response_time`.
pub fn drop_updated_reviews(records: &[ReviewRecord]) -> (Vec<ReviewRecord>, usize) {
    let (kept, dropped): (Vec<_>, Vec<_>) = records
        .iter()
        .cloned()
        .partition(|r| r.responded_at().is_none_or(|at| r.review_time <= at));
    (kept, dropped.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SkipReason {
    Unresponded,
    NegativeLatency,
}

#[derive(Debug, Clone, Default)]
pub struct UrgencyLabeling {
    pub examples: Vec<LabeledExample>,
    pub skipped: Vec<(RecordId, SkipReason)>,
}

impl UrgencyLabeling {
    pub fn negative_latency(&self) -> impl Iterator<Item = RecordId> + '_ {
        self.skipped
            .iter()
            .filter(|(_, reason)| *reason == SkipReason::NegativeLatency)
            .map(|(id, _)| *id)
    }
}

pub const DEFAULT_URGENCY_THRESHOLD_DAYS: f64 = 3.0;

/// Label responded reviews by response speed: 1 iff `floor(latency_days) <= threshold_days`.
///
/// Expects [`drop_updated_reviews`] to have run first; any review still
/// answered "before" it was written is reported as `NegativeLatency` and left out.
pub fn label_response_urgency(records: &[ReviewRecord], threshold_days: f64) -> UrgencyLabeling {
    let mut out = UrgencyLabeling::default();
    for r in records {
        let Some(latency) = r.latency_days() else {
            out.skipped.push((r.record_id, SkipReason::Unresponded));
            continue;
        };
        if latency < 0.0 {
            out.skipped.push((r.record_id, SkipReason::NegativeLatency));
            continue;
        }
        out.examples.push(LabeledExample {
            record_id: r.record_id,
            label: u8::from(latency.floor() <= threshold_days),
            approach: Approach::ResponseUrgency,
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_records: usize,
    pub n_responded: usize,
    pub mean_response_latency_days: Option<f64>,
    pub n_dropped_updated: usize,
}

pub fn corpus_stats(records: &[ReviewRecord]) -> CorpusStats {
    let n_responded = records.iter().filter(|r| r.has_response()).count();
    let (kept, n_dropped_updated) = drop_updated_reviews(records);
    let latencies: Vec<f64> = kept.iter().filter_map(ReviewRecord::latency_days).collect();
    let mean_response_latency_days = if latencies.is_empty() {
        None
    } else {
        Some(latencies.iter().sum::<f64>() / latencies.len() as f64)
    };
    CorpusStats {
        n_records: records.len(),
        n_responded,
        mean_response_latency_days,
        n_dropped_updated,
    }
}

/// Seeded sample of at most `per_app` records from every app, in input order.
pub fn sample_per_app(records: &[ReviewRecord], per_app: usize, seed: u64) -> Vec<ReviewRecord> {
    let mut by_app: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (idx, r) in records.iter().enumerate() {
        by_app.entry(r.app_name.as_str()).or_default().push(idx);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<usize> = Vec::new();
    for indices in by_app.values_mut() {
        indices.shuffle(&mut rng);
        chosen.extend(indices.iter().take(per_app));
    }
    chosen.sort_unstable();
    chosen.into_iter().map(|i| records[i].clone()).collect()
}

/// Look up records by id; ids are unique within one parsed dataset.
pub fn index_by_id(records: &[ReviewRecord]) -> HashMap<RecordId, &ReviewRecord> {
    records.iter().map(|r| (r.record_id, r)).collect()
}
