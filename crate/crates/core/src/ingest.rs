//! Readers for shared-patient edge lists, provider-state listings and
//! state-year attribute tables.
//!
//! Referral files are streamed: [`ReferralReader`] yields validated records one
//! at a time and keeps a running [`IngestReport`]. Rows that fail validation are
//! tallied (with a handful of samples kept for diagnostics) rather than dropped
//! silently, and [`ReferralReader::finish`] refuses the file when more than 1%
//! of rows were malformed, which almost always means the format spec is wrong.

use crate::states::StateCode;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// National Provider Identifier: exactly ten decimal digits.
///
/// Stored numerically; `Display` restores the zero-padded ten-digit form, so
/// leading zeros survive a round trip.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Npi(u64);

impl Npi {
    pub fn parse(s: &str) -> Option<Npi> {
        Self::parse_bytes(s.as_bytes())
    }

    pub fn parse_bytes(b: &[u8]) -> Option<Npi> {
        let b = trim_ascii(b);
        if b.len() != 10 {
            return None;
        }
        let mut v = 0u64;
        for &c in b {
            if !c.is_ascii_digit() {
                return None;
            }
            v = v * 10 + u64::from(c - b'0');
        }
        Some(Npi(v))
    }

    pub fn value(self) -> u64 {
        self.0
    }

    /// Builds an identifier from its numeric value; `None` above ten digits.
    pub fn from_value(v: u64) -> Option<Npi> {
        (v < 10_000_000_000).then_some(Npi(v))
    }
}

impl fmt::Display for Npi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:010}", self.0)
    }
}

impl fmt::Debug for Npi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Npi({self})")
    }
}

impl TryFrom<String> for Npi {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Npi::parse(&s).ok_or_else(|| format!("not a 10-digit NPI: {s:?}"))
    }
}

impl From<Npi> for String {
    fn from(n: Npi) -> String {
        n.to_string()
    }
}

fn trim_ascii(mut b: &[u8]) -> &[u8] {
    while let [first, rest @ ..] = b {
        if first.is_ascii_whitespace() || *first == b'"' {
            b = rest;
        } else {
            break;
        }
    }
    while let [rest @ .., last] = b {
        if last.is_ascii_whitespace() || *last == b'"' {
            b = rest;
        } else {
            break;
        }
    }
    b
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RawReferralRecord {
    pub from_npi: Npi,
    pub to_npi: Npi,
    /// Shared patients, at least 1.
    pub shared_count: u32,
    pub year: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NpiStateRecord {
    pub npi: Npi,
    pub state: StateCode,
    pub year: u16,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateHealthRecord {
    pub state: StateCode,
    pub year: u16,
    pub attribute_name: String,
    pub value: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("read failed at line {line}: {message}")]
    Read { line: u64, message: String },
    #[error("bad format spec {spec:?}: {reason}")]
    FormatSpec { spec: String, reason: String },
    #[error("{malformed} of {rows} rows malformed (>1%); check the format spec. First problem: {first}")]
    TooManyMalformed { malformed: u64, rows: u64, first: String },
    #[error("{0} contained no usable rows")]
    Empty(String),
    #[error("duplicate attribute key ({state},{year},{attribute})")]
    DuplicateKey { state: String, year: u16, attribute: String },
    #[error("line {line}: {reason}")]
    BadRow { line: u64, reason: String },
    #[error("no year available: the format has no year column and none was supplied")]
    MissingYear,
}

/// Column roles in a referral file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Column {
    From,
    To,
    Count,
    Year,
    Skip,
}

/// Delimiter, header presence and column order of a referral file.
///
/// Textual form: `<delimiter>[+header]:<col>,<col>,...` where the delimiter is
/// `comma`, `tab`, `pipe`, `semicolon` or a single character, and columns are
/// `from`, `to`, `count`, `year` or `_` (ignored). `cms` is shorthand for the
/// five-column public release layout `comma:from,to,_,count,_` (pair count
/// skipped, beneficiary count taken as the shared-patient count).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatSpec {
    pub delimiter: u8,
    pub has_header: bool,
    pub columns: Vec<Column>,
}

impl Default for FormatSpec {
    fn default() -> Self {
        FormatSpec { delimiter: b',', has_header: false, columns: vec![Column::From, Column::To, Column::Count] }
    }
}

impl FormatSpec {
    pub fn cms() -> Self {
        FormatSpec {
            delimiter: b',',
            has_header: false,
            columns: vec![Column::From, Column::To, Column::Skip, Column::Count, Column::Skip],
        }
    }

    fn position(&self, c: Column) -> Option<usize> {
        self.columns.iter().position(|&x| x == c)
    }

    fn validate(&self, spec: &str) -> Result<(), IngestError> {
        for c in [Column::From, Column::To, Column::Count] {
            let n = self.columns.iter().filter(|&&x| x == c).count();
            if n != 1 {
                return Err(IngestError::FormatSpec {
                    spec: spec.to_string(),
                    reason: format!("column {c:?} must appear exactly once"),
                });
            }
        }
        if self.columns.iter().filter(|&&x| x == Column::Year).count() > 1 {
            return Err(IngestError::FormatSpec { spec: spec.to_string(), reason: "year column repeated".into() });
        }
        Ok(())
    }
}

impl FromStr for FormatSpec {
    type Err = IngestError;

    fn from_str(spec: &str) -> Result<Self, Self::Err> {
        let bad = |reason: &str| IngestError::FormatSpec { spec: spec.to_string(), reason: reason.to_string() };
        match spec {
            "cms" => return Ok(FormatSpec::cms()),
            "default" | "" => return Ok(FormatSpec::default()),
            _ => {}
        }
        let (head, cols) = spec.split_once(':').ok_or_else(|| bad("expected <delimiter>:<columns>"))?;
        let (delim, has_header) = match head.strip_suffix("+header") {
            Some(d) => (d, true),
            None => (head, false),
        };
        let delimiter = match delim {
            "comma" => b',',
            "tab" => b'\t',
            "pipe" => b'|',
            "semicolon" => b';',
            d if d.len() == 1 && d.is_ascii() => d.as_bytes()[0],
            _ => return Err(bad("unknown delimiter")),
        };
        let columns = cols
            .split(',')
            .map(|c| match c.trim() {
                "from" => Ok(Column::From),
                "to" => Ok(Column::To),
                "count" => Ok(Column::Count),
                "year" => Ok(Column::Year),
                "_" | "skip" => Ok(Column::Skip),
                other => Err(bad(&format!("unknown column {other:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let fs = FormatSpec { delimiter, has_header, columns };
        fs.validate(spec)?;
        Ok(fs)
    }
}

impl fmt::Display for FormatSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = match self.delimiter {
            b',' => "comma".to_string(),
            b'\t' => "tab".to_string(),
            b'|' => "pipe".to_string(),
            b';' => "semicolon".to_string(),
            c => (c as char).to_string(),
        };
        let cols: Vec<&str> = self
            .columns
            .iter()
            .map(|c| match c {
                Column::From => "from",
                Column::To => "to",
                Column::Count => "count",
                Column::Year => "year",
                Column::Skip => "_",
            })
            .collect();
        write!(f, "{d}{}:{}", if self.has_header { "+header" } else { "" }, cols.join(","))
    }
}

/// A rejected input row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowProblem {
    pub line: u64,
    pub reason: String,
}

const MAX_SAMPLES: usize = 20;

/// Running tallies of a referral parse. `rows = records + malformed + self_loops`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows: u64,
    pub records: u64,
    pub malformed: u64,
    pub self_loops: u64,
    pub malformed_samples: Vec<RowProblem>,
}

impl IngestReport {
    fn note_malformed(&mut self, line: u64, reason: String) {
        self.malformed += 1;
        if self.malformed_samples.len() < MAX_SAMPLES {
            self.malformed_samples.push(RowProblem { line, reason });
        }
    }

    /// Malformed share above which a parse is refused.
    pub const MAX_MALFORMED_FRACTION: f64 = 0.01;

    fn too_many_malformed(&self) -> bool {
        self.rows > 0 && (self.malformed as f64) > Self::MAX_MALFORMED_FRACTION * self.rows as f64
    }
}

/// Streaming reader of a referral edge list.
pub struct ReferralReader<R: Read> {
    inner: csv::Reader<R>,
    record: csv::ByteRecord,
    from_col: usize,
    to_col: usize,
    count_col: usize,
    year_col: Option<usize>,
    default_year: Option<u16>,
    width: usize,
    report: IngestReport,
    fatal: Option<IngestError>,
}

/// Opens `path` for streaming with `spec`; `default_year` is used when the
/// format has no year column.
pub fn open_referrals(
    path: &Path,
    spec: &FormatSpec,
    default_year: Option<u16>,
) -> Result<ReferralReader<BufReader<File>>, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io { path: path.into(), source })?;
    ReferralReader::new(BufReader::with_capacity(1 << 20, file), spec, default_year)
}

/// Reads a whole referral file into memory.
pub fn parse_referrals(
    path: &Path,
    spec: &FormatSpec,
    default_year: Option<u16>,
) -> Result<(Vec<RawReferralRecord>, IngestReport), IngestError> {
    let mut reader = open_referrals(path, spec, default_year)?;
    let records: Vec<_> = reader.by_ref().collect();
    let report = reader.finish()?;
    Ok((records, report))
}

impl<R: Read> ReferralReader<R> {
    pub fn new(source: R, spec: &FormatSpec, default_year: Option<u16>) -> Result<Self, IngestError> {
        spec.validate(&spec.to_string())?;
        let year_col = spec.position(Column::Year);
        if year_col.is_none() && default_year.is_none() {
            return Err(IngestError::MissingYear);
        }
        let inner = csv::ReaderBuilder::new()
            .delimiter(spec.delimiter)
            .has_headers(spec.has_header)
            .flexible(true)
            .trim(csv::Trim::None)
            .from_reader(source);
        Ok(ReferralReader {
            inner,
            record: csv::ByteRecord::new(),
            from_col: spec.position(Column::From).unwrap(),
            to_col: spec.position(Column::To).unwrap(),
            count_col: spec.position(Column::Count).unwrap(),
            year_col,
            default_year,
            width: spec.columns.len(),
            report: IngestReport::default(),
            fatal: None,
        })
    }

    pub fn report(&self) -> &IngestReport {
        &self.report
    }

    /// Final tallies, or an error if the read failed or too many rows were malformed.
    pub fn finish(self) -> Result<IngestReport, IngestError> {
        if let Some(e) = self.fatal {
            return Err(e);
        }
        if self.report.too_many_malformed() {
            let first = self
                .report
                .malformed_samples
                .first()
                .map(|p| format!("line {}: {}", p.line, p.reason))
                .unwrap_or_default();
            return Err(IngestError::TooManyMalformed {
                malformed: self.report.malformed,
                rows: self.report.rows,
                first,
            });
        }
        Ok(self.report)
    }

    fn validate_row(&self) -> Result<RawReferralRecord, String> {
        let rec = &self.record;
        if rec.len() != self.width {
            return Err(format!("expected {} fields, found {}", self.width, rec.len()));
        }
        let from_npi = Npi::parse_bytes(&rec[self.from_col])
            .ok_or_else(|| format!("bad from NPI {:?}", String::from_utf8_lossy(&rec[self.from_col])))?;
        let to_npi = Npi::parse_bytes(&rec[self.to_col])
            .ok_or_else(|| format!("bad to NPI {:?}", String::from_utf8_lossy(&rec[self.to_col])))?;
        let count = parse_uint(&rec[self.count_col])
            .filter(|&c| c >= 1 && c <= u64::from(u32::MAX))
            .ok_or_else(|| format!("bad count {:?}", String::from_utf8_lossy(&rec[self.count_col])))?;
        let year = match self.year_col {
            Some(c) => parse_uint(&rec[c])
                .filter(|&y| (1900..=2200).contains(&y))
                .ok_or_else(|| format!("bad year {:?}", String::from_utf8_lossy(&rec[c])))?
                as u16,
            None => self.default_year.unwrap(),
        };
        Ok(RawReferralRecord { from_npi, to_npi, shared_count: count as u32, year })
    }
}

fn parse_uint(b: &[u8]) -> Option<u64> {
    let b = trim_ascii(b);
    if b.is_empty() || b.len() > 19 {
        return None;
    }
    let mut v = 0u64;
    for &c in b {
        if !c.is_ascii_digit() {
            return None;
        }
        v = v * 10 + u64::from(c - b'0');
    }
    Some(v)
}

impl<R: Read> Iterator for ReferralReader<R> {
    type Item = RawReferralRecord;

    fn next(&mut self) -> Option<RawReferralRecord> {
        if self.fatal.is_some() {
            return None;
        }
        loop {
            match self.inner.read_byte_record(&mut self.record) {
                Ok(false) => return None,
                Ok(true) => {}
                Err(e) => {
                    let line = e.position().map(|p| p.line()).unwrap_or(0);
                    match e.kind() {
                        csv::ErrorKind::Io(_) => {
                            self.fatal = Some(IngestError::Read { line, message: e.to_string() });
                            return None;
                        }
                        _ => {
                            self.report.rows += 1;
                            self.report.note_malformed(line, e.to_string());
                            continue;
                        }
                    }
                }
            }
            self.report.rows += 1;
            let line = self.record.position().map(|p| p.line()).unwrap_or(0);
            match self.validate_row() {
                Ok(r) if r.from_npi == r.to_npi => {
                    self.report.self_loops += 1;
                }
                Ok(r) => {
                    self.report.records += 1;
                    return Some(r);
                }
                Err(reason) => self.report.note_malformed(line, reason),
            }
        }
    }
}

/// Writes records as `from,to,count,year` rows (no header); readable with
/// `comma:from,to,count,year`.
pub fn write_referrals_csv<W: Write>(records: &[RawReferralRecord], out: W) -> io::Result<()> {
    let mut w = BufWriter::new(out);
    for r in records {
        writeln!(w, "{},{},{},{}", r.from_npi, r.to_npi, r.shared_count, r.year)?;
    }
    w.flush()
}

const RECORDS_MAGIC: &[u8; 4] = b"RFNR";
const RECORDS_VERSION: u32 = 1;

/// Compact binary intermediate of validated records: magic, version, count,
/// then `(from u64, to u64, count u32, year u16)` little-endian per record.
pub fn write_records_bin<W: Write>(records: &[RawReferralRecord], out: W) -> io::Result<()> {
    let mut w = BufWriter::new(out);
    w.write_all(RECORDS_MAGIC)?;
    w.write_all(&RECORDS_VERSION.to_le_bytes())?;
    w.write_all(&(records.len() as u64).to_le_bytes())?;
    for r in records {
        w.write_all(&r.from_npi.0.to_le_bytes())?;
        w.write_all(&r.to_npi.0.to_le_bytes())?;
        w.write_all(&r.shared_count.to_le_bytes())?;
        w.write_all(&r.year.to_le_bytes())?;
    }
    w.flush()
}

pub fn read_records_bin<R: Read>(input: R) -> io::Result<Vec<RawReferralRecord>> {
    let mut r = BufReader::new(input);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != RECORDS_MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "not a referral record file"));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    if u32::from_le_bytes(b4) != RECORDS_VERSION {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "unsupported record file version"));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    let mut out = Vec::with_capacity(n);
    let mut buf = [0u8; 22];
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    for _ in 0..n {
        r.read_exact(&mut buf)?;
        let from = Npi::from_value(u64::from_le_bytes(buf[0..8].try_into().unwrap())).ok_or_else(|| bad("npi"))?;
        let to = Npi::from_value(u64::from_le_bytes(buf[8..16].try_into().unwrap())).ok_or_else(|| bad("npi"))?;
        out.push(RawReferralRecord {
            from_npi: from,
            to_npi: to,
            shared_count: u32::from_le_bytes(buf[16..20].try_into().unwrap()),
            year: u16::from_le_bytes(buf[20..22].try_into().unwrap()),
        });
    }
    Ok(out)
}

/// Result of reading a provider-state listing.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct NpiStateParse {
    pub records: Vec<NpiStateRecord>,
    pub rejected: Vec<RowProblem>,
    pub duplicates_removed: u64,
}

/// Reads `npi,state[,year]` rows. A leading header row is recognised by its
/// first field mentioning "npi". Rows whose state is outside the whitelist are
/// reported in `rejected`; repeated `(npi, state, year)` rows collapse to one.
pub fn parse_npi_states(path: &Path, default_year: u16) -> Result<NpiStateParse, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io { path: path.into(), source })?;
    read_npi_states(BufReader::new(file), default_year, &path.display().to_string())
}

pub fn read_npi_states<R: Read>(source: R, default_year: u16, label: &str) -> Result<NpiStateParse, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(source);
    let mut out = NpiStateParse::default();
    let mut seen = HashSet::new();
    let mut rec = csv::StringRecord::new();
    let mut first = true;
    loop {
        match rdr.read_record(&mut rec) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                if let csv::ErrorKind::Io(_) = e.kind() {
                    return Err(IngestError::Read { line, message: e.to_string() });
                }
                out.rejected.push(RowProblem { line, reason: e.to_string() });
                continue;
            }
        }
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if first {
            first = false;
            if rec.get(0).is_some_and(|f| f.to_ascii_lowercase().contains("npi")) {
                continue;
            }
        }
        if rec.len() < 2 {
            out.rejected.push(RowProblem { line, reason: "expected npi,state".into() });
            continue;
        }
        let Some(npi) = Npi::parse(&rec[0]) else {
            out.rejected.push(RowProblem { line, reason: format!("bad NPI {:?}", &rec[0]) });
            continue;
        };
        let state = match StateCode::new(&rec[1]) {
            Ok(s) => s,
            Err(e) => {
                out.rejected.push(RowProblem { line, reason: e.to_string() });
                continue;
            }
        };
        let year = match rec.get(2).map(str::trim).filter(|s| !s.is_empty()) {
            Some(y) => match y.parse::<u16>() {
                Ok(y) => y,
                Err(_) => {
                    out.rejected.push(RowProblem { line, reason: format!("bad year {y:?}") });
                    continue;
                }
            },
            None => default_year,
        };
        let r = NpiStateRecord { npi, state, year };
        if seen.insert(r) {
            out.records.push(r);
        } else {
            out.duplicates_removed += 1;
        }
    }
    if out.records.is_empty() {
        return Err(IngestError::Empty(label.to_string()));
    }
    Ok(out)
}

/// Reads a long-format `state,year,attribute,value` table (header required).
pub fn parse_health_attributes(path: &Path) -> Result<Vec<StateHealthRecord>, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io { path: path.into(), source })?;
    read_health_attributes(BufReader::new(file))
}

pub fn read_health_attributes<R: Read>(source: R) -> Result<Vec<StateHealthRecord>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(source);
    let headers = rdr
        .headers()
        .map_err(|e| IngestError::Read { line: 1, message: e.to_string() })?
        .iter()
        .map(str::to_ascii_lowercase)
        .collect::<Vec<_>>();
    if headers != ["state", "year", "attribute", "value"] {
        return Err(IngestError::BadRow {
            line: 1,
            reason: format!("expected header state,year,attribute,value, found {}", headers.join(",")),
        });
    }
    let mut out = Vec::new();
    let mut keys = HashSet::new();
    for row in rdr.records() {
        let row = row.map_err(|e| IngestError::Read {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let bad = |reason: String| IngestError::BadRow { line, reason };
        if row.len() != 4 {
            return Err(bad(format!("expected 4 fields, found {}", row.len())));
        }
        let state = StateCode::new(&row[0]).map_err(|e| bad(e.to_string()))?;
        let year: u16 = row[1].parse().map_err(|_| bad(format!("bad year {:?}", &row[1])))?;
        let value: f64 = row[3].parse().map_err(|_| bad(format!("bad value {:?}", &row[3])))?;
        if !value.is_finite() {
            return Err(bad(format!("non-finite value {:?}", &row[3])));
        }
        let attribute_name = row[2].to_string();
        if !keys.insert((state, year, attribute_name.clone())) {
            return Err(IngestError::DuplicateKey { state: state.to_string(), year, attribute: attribute_name });
        }
        out.push(StateHealthRecord { state, year, attribute_name, value });
    }
    Ok(out)
}
