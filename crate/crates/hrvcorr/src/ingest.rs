//! Device-file ingestion: parsing, validation, and interval cleaning.
//!
//! Two fixed CSV schemas are supported, both headered, newline-separated,
//! comma-delimited, period decimal separator, no quoting:
//!
//! ```text
//! t_ms,ibi_ms                 # inter-beat interval stream
//! t_ms,ax_g,ay_g,az_g         # 3-axis accelerometer stream
//! ```
//!
//! Parsing is line-at-a-time over any [`BufRead`], so files larger than
//! memory stream through without being held whole. Line numbers in errors
//! are 1-based and count the header line.

use std::fmt;
use std::io::{self, BufRead, Write};

use thiserror::Error;

/// Lower plausibility bound for an inter-beat interval, in milliseconds.
pub const IBI_MIN_MS: f64 = 250.0;
/// Upper plausibility bound for an inter-beat interval, in milliseconds.
pub const IBI_MAX_MS: f64 = 2000.0;
/// Maximum relative jump between consecutive retained intervals.
pub const IBI_MAX_RELATIVE_JUMP: f64 = 0.30;

const IBI_HEADER: &str = "t_ms,ibi_ms";
const ACCEL_HEADER: &str = "t_ms,ax_g,ay_g,az_g";

/// One timestamped inter-beat interval from a device stream.
///
/// `t` is integer milliseconds since the Unix epoch and marks the beat that
/// closes the interval; `ibi` is the duration between that beat and the
/// previous one, in milliseconds, always positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IbiRecord {
    pub t: i64,
    pub ibi: f64,
}

/// One timestamped 3-axis accelerometer sample, axes in units of g.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelRecord {
    pub t: i64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
}

impl AccelRecord {
    /// Euclidean magnitude of the acceleration vector, in g.
    pub fn magnitude(&self) -> f64 {
        (self.ax * self.ax + self.ay * self.ay + self.az * self.az).sqrt()
    }
}

/// Which device role a stream came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceTag {
    /// Chest-strap reference recorder (ground-truth role).
    Reference,
    /// Wrist wearable under evaluation.
    Watch,
}

impl fmt::Display for SourceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceTag::Reference => write!(f, "reference"),
            SourceTag::Watch => write!(f, "watch"),
        }
    }
}

/// An inter-beat interval stream together with its device role.
#[derive(Debug, Clone, PartialEq)]
pub struct IbiStream {
    pub tag: SourceTag,
    pub records: Vec<IbiRecord>,
}

#[derive(Debug, Error)]
pub enum IngestError {
    /// A line that is not a well-formed record of the expected schema
    /// (wrong field count, non-numeric field, non-finite or non-positive
    /// value, or a bad header).
    #[error("line {line}: malformed record")]
    MalformedLine { line: usize },
    /// Timestamps must be strictly increasing within a stream.
    #[error("line {line}: timestamp not strictly increasing")]
    NonMonotonicTimestamp { line: usize },
    /// The file held a header but no data lines.
    #[error("stream contains no records")]
    EmptyStream,
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

/// Parse an inter-beat interval CSV held in memory.
///
/// Header must be exactly `t_ms,ibi_ms`. Records come back in file order;
/// timestamps are verified strictly increasing and intervals positive.
///
/// ```
/// use hrvcorr::ingest::{parse_ibi_csv, SourceTag};
///
/// let stream = parse_ibi_csv(b"t_ms,ibi_ms\n1000,812.0\n", SourceTag::Watch).unwrap();
/// assert_eq!(stream.records.len(), 1);
/// assert_eq!(stream.records[0].t, 1000);
/// assert_eq!(stream.records[0].ibi, 812.0);
/// ```
pub fn parse_ibi_csv(bytes: &[u8], tag: SourceTag) -> Result<IbiStream, IngestError> {
    read_ibi_csv(bytes, tag)
}

/// Streaming variant of [`parse_ibi_csv`] over any buffered reader.
pub fn read_ibi_csv<R: BufRead>(reader: R, tag: SourceTag) -> Result<IbiStream, IngestError> {
    let mut lines = reader.lines();
    match lines.next() {
        Some(Ok(h)) if h == IBI_HEADER => {}
        Some(Ok(_)) => return Err(IngestError::MalformedLine { line: 1 }),
        Some(Err(e)) => return Err(IngestError::Io(e)),
        None => return Err(IngestError::EmptyStream),
    }

    let mut records = Vec::new();
    let mut prev_t: Option<i64> = None;
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        let mut fields = line.split(',');
        let t = parse_timestamp(fields.next(), line_no)?;
        let ibi = parse_value(fields.next(), line_no)?;
        if fields.next().is_some() || ibi <= 0.0 {
            return Err(IngestError::MalformedLine { line: line_no });
        }
        if let Some(p) = prev_t {
            if t <= p {
                return Err(IngestError::NonMonotonicTimestamp { line: line_no });
            }
        }
        prev_t = Some(t);
        records.push(IbiRecord { t, ibi });
    }

    if records.is_empty() {
        return Err(IngestError::EmptyStream);
    }
    Ok(IbiStream { tag, records })
}

/// Parse an accelerometer CSV held in memory.
///
/// Header must be exactly `t_ms,ax_g,ay_g,az_g`; every axis value must be
/// finite and timestamps strictly increasing.
pub fn parse_accel_csv(bytes: &[u8]) -> Result<Vec<AccelRecord>, IngestError> {
    read_accel_csv(bytes)
}

/// Streaming variant of [`parse_accel_csv`] over any buffered reader.
pub fn read_accel_csv<R: BufRead>(reader: R) -> Result<Vec<AccelRecord>, IngestError> {
    let mut lines = reader.lines();
    match lines.next() {
        Some(Ok(h)) if h == ACCEL_HEADER => {}
        Some(Ok(_)) => return Err(IngestError::MalformedLine { line: 1 }),
        Some(Err(e)) => return Err(IngestError::Io(e)),
        None => return Err(IngestError::EmptyStream),
    }

    let mut records = Vec::new();
    let mut prev_t: Option<i64> = None;
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        let mut fields = line.split(',');
        let t = parse_timestamp(fields.next(), line_no)?;
        let ax = parse_value(fields.next(), line_no)?;
        let ay = parse_value(fields.next(), line_no)?;
        let az = parse_value(fields.next(), line_no)?;
        if fields.next().is_some() {
            return Err(IngestError::MalformedLine { line: line_no });
        }
        if let Some(p) = prev_t {
            if t <= p {
                return Err(IngestError::NonMonotonicTimestamp { line: line_no });
            }
        }
        prev_t = Some(t);
        records.push(AccelRecord { t, ax, ay, az });
    }

    if records.is_empty() {
        return Err(IngestError::EmptyStream);
    }
    Ok(records)
}

fn parse_timestamp(field: Option<&str>, line: usize) -> Result<i64, IngestError> {
    field
        .and_then(|s| s.parse::<i64>().ok())
        .ok_or(IngestError::MalformedLine { line })
}

fn parse_value(field: Option<&str>, line: usize) -> Result<f64, IngestError> {
    match field.and_then(|s| s.parse::<f64>().ok()) {
        Some(v) if v.is_finite() => Ok(v),
        _ => Err(IngestError::MalformedLine { line }),
    }
}

/// Serialize an IBI stream into the canonical CSV text.
///
/// Values print in shortest round-tripping form, so
/// `parse(serialize(stream)) == stream` bit-exactly.
pub fn serialize_ibi_csv(records: &[IbiRecord]) -> String {
    let mut out = String::with_capacity(records.len() * 16 + IBI_HEADER.len() + 1);
    out.push_str(IBI_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!("{},{}\n", r.t, r.ibi));
    }
    out
}

/// Serialize an accelerometer stream into the canonical CSV text.
pub fn serialize_accel_csv(records: &[AccelRecord]) -> String {
    let mut out = String::with_capacity(records.len() * 28 + ACCEL_HEADER.len() + 1);
    out.push_str(ACCEL_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!("{},{},{},{}\n", r.t, r.ax, r.ay, r.az));
    }
    out
}

/// Write an IBI stream as CSV without building the whole text in memory.
pub fn write_ibi_csv<W: Write>(mut w: W, records: &[IbiRecord]) -> io::Result<()> {
    writeln!(w, "{IBI_HEADER}")?;
    for r in records {
        writeln!(w, "{},{}", r.t, r.ibi)?;
    }
    Ok(())
}

/// Write an accelerometer stream as CSV without building the whole text in memory.
pub fn write_accel_csv<W: Write>(mut w: W, records: &[AccelRecord]) -> io::Result<()> {
    writeln!(w, "{ACCEL_HEADER}")?;
    for r in records {
        writeln!(w, "{},{},{},{}", r.t, r.ax, r.ay, r.az)?;
    }
    Ok(())
}

/// Drop implausible intervals from a beat stream.
///
/// A record is retained when its interval lies in
/// [[`IBI_MIN_MS`], [`IBI_MAX_MS`]] and differs from the previously
/// retained interval by at most [`IBI_MAX_RELATIVE_JUMP`] (the first
/// retained record is exempt from the relative rule). Returns the retained
/// subsequence, in order, and the number of rejected records. Rejected
/// records are counted, never interpolated; the resulting gaps are handled
/// by downstream window-coverage rules.
///
/// ```
/// use hrvcorr::ingest::{clean_ibi, IbiRecord};
///
/// let recs: Vec<IbiRecord> = [800.0, 3000.0, 810.0]
///     .iter()
///     .enumerate()
///     .map(|(i, &ibi)| IbiRecord { t: 1000 * (i as i64 + 1), ibi })
///     .collect();
/// let (kept, rejected) = clean_ibi(&recs);
/// assert_eq!(kept.len(), 2);
/// assert_eq!(rejected, 1);
/// ```
pub fn clean_ibi(records: &[IbiRecord]) -> (Vec<IbiRecord>, usize) {
    let mut kept: Vec<IbiRecord> = Vec::with_capacity(records.len());
    for r in records {
        if r.ibi < IBI_MIN_MS || r.ibi > IBI_MAX_MS {
            continue;
        }
        if let Some(prev) = kept.last() {
            if (r.ibi - prev.ibi).abs() / prev.ibi > IBI_MAX_RELATIVE_JUMP {
                continue;
            }
        }
        kept.push(*r);
    }
    let rejected = records.len() - kept.len();
    (kept, rejected)
}
