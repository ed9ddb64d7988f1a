//! Streaming reader for Reddit-style dump archives.
//!
//! A dump is one JSON object per line, stored plain, `.zst` or `.gz`
//! compressed. Records are parsed one line at a time into a reused buffer,
//! so memory stays bounded by the longest line regardless of file size.
//! Only the fields the corpus needs are read; everything else in a record
//! is ignored.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

const DELETION_MARKERS: [&str; 2] = ["[deleted]", "[removed]"];
const REMOVAL_FIELDS: [&str; 4] = ["removed_by_category", "removed_by", "removal_reason", "banned_by"];

pub const SKIP_MALFORMED_JSON: &str = "malformed_json";
pub const SKIP_INVALID_RECORD: &str = "invalid_record";
pub const SKIP_BLANK_LINE: &str = "blank_line";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
}

/// Which record schema a dump file holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    Submissions,
    Comments,
}

impl RecordKind {
    pub fn file_stem_suffix(self) -> &'static str {
        match self {
            RecordKind::Submissions => "submissions",
            RecordKind::Comments => "comments",
        }
    }
}

/// Locates `<Subreddit>_<kind>.ndjson`, `.ndjson.zst` or `.ndjson.gz` in a
/// dump directory. Returns the plain path when none exists so callers can
/// report it.
pub fn dump_file(dir: &Path, subreddit: &str, kind: RecordKind) -> Result<PathBuf, PathBuf> {
    let stem = format!("{subreddit}_{}.ndjson", kind.file_stem_suffix());
    for ext in ["", ".zst", ".gz"] {
        let candidate = dir.join(format!("{stem}{ext}"));
        if candidate.is_file() {
            return Ok(candidate);
        }
    }
    Err(dir.join(stem))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub id: String,
    pub subreddit: String,
    pub title: String,
    pub score: i64,
    pub created_utc: i64,
    pub deleted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    pub id: String,
    pub link_id: String,
    pub parent_id: String,
    pub body: String,
    pub score: i64,
    pub created_utc: i64,
    pub deleted: bool,
}

impl Comment {
    /// A direct reply to the submission rather than to another comment.
    pub fn is_top_level(&self) -> bool {
        self.parent_id == self.link_id
    }

    /// The submission id without its `t3_` prefix.
    pub fn submission_id(&self) -> &str {
        self.link_id.strip_prefix("t3_").unwrap_or(&self.link_id)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub lines_read: u64,
    pub records_ok: u64,
    pub records_skipped: u64,
    pub skip_reasons: BTreeMap<String, u64>,
}

impl IngestStats {
    fn skip(&mut self, reason: &str) {
        self.records_skipped += 1;
        *self.skip_reasons.entry(reason.to_string()).or_default() += 1;
    }

    pub fn merge(&mut self, other: &IngestStats) {
        self.lines_read += other.lines_read;
        self.records_ok += other.records_ok;
        self.records_skipped += other.records_skipped;
        for (reason, n) in &other.skip_reasons {
            *self.skip_reasons.entry(reason.clone()).or_default() += n;
        }
    }
}

/// Why a single line did not produce a record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LineError {
    MalformedJson(String),
    InvalidRecord(String),
}

impl LineError {
    fn reason(&self) -> &'static str {
        match self {
            LineError::MalformedJson(_) => SKIP_MALFORMED_JSON,
            LineError::InvalidRecord(_) => SKIP_INVALID_RECORD,
        }
    }

    fn message(&self) -> String {
        match self {
            LineError::MalformedJson(m) => format!("malformed JSON: {m}"),
            LineError::InvalidRecord(m) => format!("invalid record: {m}"),
        }
    }
}

/// A record type that can be read from, and written back to, a dump line.
pub trait DumpRecord: Sized {
    const KIND: RecordKind;

    fn parse_line(line: &str) -> Result<Self, LineError>;

    fn to_dump_line(&self) -> String;
}

fn parse_object(line: &str) -> Result<serde_json::Map<String, Value>, LineError> {
    match serde_json::from_str::<Value>(line) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(LineError::InvalidRecord("not a JSON object".into())),
        Err(e) => Err(LineError::MalformedJson(e.to_string())),
    }
}

fn required_str(map: &serde_json::Map<String, Value>, key: &str) -> Result<String, LineError> {
    match map.get(key) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(LineError::InvalidRecord(format!("field {key} is not a string"))),
        None => Err(LineError::InvalidRecord(format!("missing field {key}"))),
    }
}

/// Integers in dumps show up as numbers, floats, or decimal strings
/// depending on the dump year.
fn as_integer(value: &Value) -> Option<i64> {
    match value {
        Value::Number(n) => n.as_i64().or_else(|| n.as_f64().map(|f| f as i64)),
        Value::String(s) => s
            .trim()
            .parse::<i64>()
            .ok()
            .or_else(|| s.trim().parse::<f64>().ok().map(|f| f as i64)),
        _ => None,
    }
}

fn required_int(map: &serde_json::Map<String, Value>, key: &str) -> Result<i64, LineError> {
    let value = map
        .get(key)
        .ok_or_else(|| LineError::InvalidRecord(format!("missing field {key}")))?;
    as_integer(value).ok_or_else(|| LineError::InvalidRecord(format!("field {key} is not an integer")))
}

fn score(map: &serde_json::Map<String, Value>) -> Result<i64, LineError> {
    match map.get("score") {
        None | Some(Value::Null) => Ok(0),
        Some(v) => as_integer(v).ok_or_else(|| LineError::InvalidRecord("field score is not an integer".into())),
    }
}

fn is_marker(map: &serde_json::Map<String, Value>, key: &str) -> bool {
    matches!(map.get(key), Some(Value::String(s)) if DELETION_MARKERS.contains(&s.as_str()))
}

fn has_removal(map: &serde_json::Map<String, Value>) -> bool {
    let author_deleted = matches!(map.get("author"), Some(Value::String(s)) if s == "[deleted]");
    author_deleted
        || REMOVAL_FIELDS
            .iter()
            .any(|k| map.get(*k).is_some_and(|v| !v.is_null()))
}

#[derive(Serialize)]
struct SubmissionLine<'a> {
    id: &'a str,
    subreddit: &'a str,
    title: &'a str,
    score: i64,
    created_utc: i64,
    removed_by_category: Option<&'static str>,
}

#[derive(Serialize)]
struct CommentLine<'a> {
    id: &'a str,
    link_id: &'a str,
    parent_id: &'a str,
    body: &'a str,
    score: i64,
    created_utc: i64,
    removed_by_category: Option<&'static str>,
}

impl DumpRecord for Submission {
    const KIND: RecordKind = RecordKind::Submissions;

    fn parse_line(line: &str) -> Result<Self, LineError> {
        let map = parse_object(line)?;
        let id = required_str(&map, "id")?;
        if id.is_empty() {
            return Err(LineError::InvalidRecord("empty id".into()));
        }
        let subreddit = required_str(&map, "subreddit")?;
        let title = required_str(&map, "title")?;
        let deleted = is_marker(&map, "title") || is_marker(&map, "selftext") || has_removal(&map);
        if title.trim().is_empty() && !deleted {
            return Err(LineError::InvalidRecord("empty title on a live submission".into()));
        }
        Ok(Submission {
            id,
            subreddit,
            title,
            score: score(&map)?,
            created_utc: required_int(&map, "created_utc")?,
            deleted,
        })
    }

    fn to_dump_line(&self) -> String {
        serde_json::to_string(&SubmissionLine {
            id: &self.id,
            subreddit: &self.subreddit,
            title: &self.title,
            score: self.score,
            created_utc: self.created_utc,
            removed_by_category: self.deleted.then_some("deleted"),
        })
        .expect("plain struct serializes")
    }
}

impl DumpRecord for Comment {
    const KIND: RecordKind = RecordKind::Comments;

    fn parse_line(line: &str) -> Result<Self, LineError> {
        let map = parse_object(line)?;
        let id = required_str(&map, "id")?;
        if id.is_empty() {
            return Err(LineError::InvalidRecord("empty id".into()));
        }
        let link_id = required_str(&map, "link_id")?;
        if !link_id.starts_with("t3_") || link_id.len() == 3 {
            return Err(LineError::InvalidRecord(format!("link_id {link_id:?} lacks t3_ prefix")));
        }
        let parent_id = required_str(&map, "parent_id")?;
        if !(parent_id.starts_with("t1_") || parent_id.starts_with("t3_")) {
            return Err(LineError::InvalidRecord(format!("parent_id {parent_id:?} lacks t1_/t3_ prefix")));
        }
        let body = required_str(&map, "body")?;
        let deleted = is_marker(&map, "body") || has_removal(&map);
        Ok(Comment {
            id,
            link_id,
            parent_id,
            body,
            score: score(&map)?,
            created_utc: required_int(&map, "created_utc")?,
            deleted,
        })
    }

    fn to_dump_line(&self) -> String {
        serde_json::to_string(&CommentLine {
            id: &self.id,
            link_id: &self.link_id,
            parent_id: &self.parent_id,
            body: &self.body,
            score: self.score,
            created_utc: self.created_utc,
            removed_by_category: self.deleted.then_some("deleted"),
        })
        .expect("plain struct serializes")
    }
}

/// Opens a dump file, picking a decompressor from the extension.
pub fn open_dump(path: &Path) -> Result<Box<dyn BufRead + Send>, IngestError> {
    let io_err = |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let reader: Box<dyn BufRead + Send> = match path.extension().and_then(|e| e.to_str()) {
        Some("zst") => Box::new(BufReader::new(zstd::stream::read::Decoder::new(file).map_err(io_err)?)),
        Some("gz") => Box::new(BufReader::new(flate2::read::MultiGzDecoder::new(file))),
        _ => Box::new(BufReader::new(file)),
    };
    Ok(reader)
}

/// Iterator over the records of one dump file.
///
/// In lenient mode bad lines are counted in [`IngestStats`] and skipped; in
/// strict mode the first bad line ends the stream with a [`IngestError::Parse`].
pub struct DumpStream<T> {
    reader: Box<dyn BufRead + Send>,
    path: PathBuf,
    buf: String,
    strict: bool,
    finished: bool,
    stats: IngestStats,
    _record: PhantomData<fn() -> T>,
}

impl<T: DumpRecord> DumpStream<T> {
    pub fn open(path: impl AsRef<Path>, strict: bool) -> Result<Self, IngestError> {
        let path = path.as_ref();
        Ok(Self::from_reader(open_dump(path)?, path, strict))
    }

    pub fn from_reader(reader: Box<dyn BufRead + Send>, path: impl Into<PathBuf>, strict: bool) -> Self {
        DumpStream {
            reader,
            path: path.into(),
            buf: String::new(),
            strict,
            finished: false,
            stats: IngestStats::default(),
            _record: PhantomData,
        }
    }

    pub fn stats(&self) -> &IngestStats {
        &self.stats
    }

    pub fn into_stats(self) -> IngestStats {
        self.stats
    }
}

impl<T: DumpRecord> Iterator for DumpStream<T> {
    type Item = Result<T, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.finished {
            self.buf.clear();
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => self.finished = true,
                Ok(_) => {
                    self.stats.lines_read += 1;
                    let line = self.buf.trim_end_matches(['\n', '\r']);
                    if line.trim().is_empty() {
                        self.stats.skip(SKIP_BLANK_LINE);
                        continue;
                    }
                    match T::parse_line(line) {
                        Ok(record) => {
                            self.stats.records_ok += 1;
                            return Some(Ok(record));
                        }
                        Err(e) => {
                            self.stats.skip(e.reason());
                            if self.strict {
                                self.finished = true;
                                return Some(Err(IngestError::Parse {
                                    path: self.path.clone(),
                                    line: self.stats.lines_read,
                                    message: e.message(),
                                }));
                            }
                        }
                    }
                }
                Err(source) => {
                    self.finished = true;
                    return Some(Err(IngestError::Io {
                        path: self.path.clone(),
                        source,
                    }));
                }
            }
        }
        None
    }
}

pub fn stream_submissions(path: impl AsRef<Path>, strict: bool) -> Result<DumpStream<Submission>, IngestError> {
    DumpStream::open(path, strict)
}

pub fn stream_comments(path: impl AsRef<Path>, strict: bool) -> Result<DumpStream<Comment>, IngestError> {
    DumpStream::open(path, strict)
}
