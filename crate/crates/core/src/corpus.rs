//! Derivation of bias-tagged instruction/response pairs from subreddit dumps.
//!
//! For each source subreddit the builder joins submissions to their direct
//! replies and keeps the most-upvoted replies that pass the quality filters:
//!
//! 1. posts with `score < 1` or that were deleted are dropped;
//! 2. replies that quote or link other discussion are dropped;
//! 3. titles and replies longer than 80 words are dropped;
//! 4. replies with `score < 1` are dropped, and of the rest only the top
//!    `quota × scale` by `(score desc, created_utc asc, comment_id asc)` are
//!    kept.
//!
//! Every dropped reply is attributed to the first filter it fails, so a
//! [`FilterReport`] always balances against the number of comments read.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{dump_file, Comment, DumpStream, IngestError, IngestStats, RecordKind, Submission};
use crate::registry::{Bias, BiasSource};

/// Longest title or reply, in words, that survives the length filter.
pub const MAX_WORDS: usize = 80;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("missing {kind} dump for r/{subreddit}: expected {}", path.display())]
    MissingDump {
        subreddit: String,
        kind: &'static str,
        path: PathBuf,
    },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    InvalidRecord {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("invalid build options: {0}")]
    Options(String),
}

/// One supervision record: a post title answered by an upvoted direct reply.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstructionPair {
    pub bias: Bias,
    pub subreddit: String,
    pub instruction: String,
    pub response: String,
    pub score: i64,
    pub post_id: String,
    pub comment_id: String,
    pub created_utc: i64,
}

impl InstructionPair {
    pub fn validate(&self) -> Result<(), String> {
        if self.instruction.trim().is_empty() {
            return Err("instruction is empty".into());
        }
        if self.response.trim().is_empty() {
            return Err("response is empty".into());
        }
        let words = word_count(&self.instruction);
        if words > MAX_WORDS {
            return Err(format!("instruction has {words} words (max {MAX_WORDS})"));
        }
        let words = word_count(&self.response);
        if words > MAX_WORDS {
            return Err(format!("response has {words} words (max {MAX_WORDS})"));
        }
        if self.score < 1 {
            return Err(format!("score {} is below 1", self.score));
        }
        Ok(())
    }
}

/// Per-source drop counts, one per filter.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub posts_read: u64,
    pub post_duplicate: u64,
    pub post_no_upvotes: u64,
    pub post_deleted: u64,
    pub post_too_long: u64,
    pub responses_read: u64,
    pub response_duplicate: u64,
    pub response_not_toplevel: u64,
    pub response_deleted: u64,
    pub response_post_dropped: u64,
    pub response_empty: u64,
    pub response_cites: u64,
    pub response_too_long: u64,
    pub response_no_upvotes: u64,
    pub over_quota: u64,
    pub emitted: u64,
    pub quota: u64,
}

impl FilterReport {
    /// Sum of all reply-level drop counters.
    pub fn responses_dropped(&self) -> u64 {
        self.response_duplicate
            + self.response_not_toplevel
            + self.response_deleted
            + self.response_post_dropped
            + self.response_empty
            + self.response_cites
            + self.response_too_long
            + self.response_no_upvotes
            + self.over_quota
    }

    pub fn balances(&self) -> bool {
        self.responses_read == self.emitted + self.responses_dropped()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceReport {
    pub bias: Bias,
    pub subreddit: String,
    pub filters: FilterReport,
    pub submissions: IngestStats,
    pub comments: IngestStats,
}

#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    /// Multiplies every source quota; must lie in `(0, 1]`.
    pub scale: f64,
    pub strict: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            scale: 1.0,
            strict: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusBuild {
    pub pairs: Vec<InstructionPair>,
    pub reports: Vec<SourceReport>,
}

/// Number of maximal whitespace-separated tokens.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

static BLOCKQUOTE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?m)^[ \t]*(?:>|&gt;)").unwrap());
static PERMALINK: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"r/[A-Za-z0-9_]+/comments/").unwrap());
static USER_MENTION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?:^|[^A-Za-z0-9_/])/?u/[A-Za-z0-9_-]").unwrap());

/// Whether a reply quotes or points at other posts or comments: a
/// blockquote line (raw or HTML-escaped `>`), a subreddit permalink, or a
/// `u/name` mention.
pub fn cites_other_content(body: &str) -> bool {
    BLOCKQUOTE.is_match(body) || PERMALINK.is_match(body) || USER_MENTION.is_match(body)
}

struct Post {
    title: String,
}

fn rank_order(a: &Comment, b: &Comment) -> std::cmp::Ordering {
    b.score
        .cmp(&a.score)
        .then(a.created_utc.cmp(&b.created_utc))
        .then_with(|| a.id.cmp(&b.id))
}

fn locate(dir: &Path, source: &BiasSource, kind: RecordKind) -> Result<PathBuf, CorpusError> {
    dump_file(dir, source.subreddit, kind).map_err(|path| CorpusError::MissingDump {
        subreddit: source.subreddit.to_string(),
        kind: kind.file_stem_suffix(),
        path,
    })
}

/// Builds the pairs for one source.
pub fn build_source(
    source: &BiasSource,
    dump_dir: &Path,
    options: &BuildOptions,
) -> Result<(Vec<InstructionPair>, SourceReport), CorpusError> {
    let submissions_path = locate(dump_dir, source, RecordKind::Submissions)?;
    let comments_path = locate(dump_dir, source, RecordKind::Comments)?;
    let quota = source.scaled_quota(options.scale);
    let mut report = FilterReport {
        quota: quota as u64,
        ..FilterReport::default()
    };

    // Surviving posts by id; `None` marks a post seen but filtered out.
    let mut posts: HashMap<String, Option<Post>> = HashMap::new();
    let mut submissions = DumpStream::<Submission>::open(&submissions_path, options.strict)?;
    for sub in submissions.by_ref() {
        let sub = sub?;
        report.posts_read += 1;
        if posts.contains_key(&sub.id) {
            report.post_duplicate += 1;
            continue;
        }
        let verdict = if sub.score < 1 {
            report.post_no_upvotes += 1;
            None
        } else if sub.deleted {
            report.post_deleted += 1;
            None
        } else if word_count(&sub.title) > MAX_WORDS {
            report.post_too_long += 1;
            None
        } else {
            Some(Post {
                title: sub.title.trim().to_string(),
            })
        };
        posts.insert(sub.id, verdict);
    }
    let submissions_stats = submissions.into_stats();

    let mut seen_comments: HashSet<String> = HashSet::new();
    let mut candidates: Vec<Comment> = Vec::new();
    let mut comments = DumpStream::<Comment>::open(&comments_path, options.strict)?;
    for comment in comments.by_ref() {
        let comment = comment?;
        report.responses_read += 1;
        if !seen_comments.insert(comment.id.clone()) {
            report.response_duplicate += 1;
            continue;
        }
        if !comment.is_top_level() {
            report.response_not_toplevel += 1;
        } else if comment.deleted {
            report.response_deleted += 1;
        } else if !matches!(posts.get(comment.submission_id()), Some(Some(_))) {
            report.response_post_dropped += 1;
        } else if comment.body.trim().is_empty() {
            report.response_empty += 1;
        } else if cites_other_content(&comment.body) {
            report.response_cites += 1;
        } else if word_count(&comment.body) > MAX_WORDS {
            report.response_too_long += 1;
        } else if comment.score < 1 {
            report.response_no_upvotes += 1;
        } else {
            candidates.push(comment);
        }
    }
    let comments_stats = comments.into_stats();

    candidates.sort_by(rank_order);
    if candidates.len() > quota {
        report.over_quota = (candidates.len() - quota) as u64;
        candidates.truncate(quota);
    }
    report.emitted = candidates.len() as u64;

    let pairs = candidates
        .into_iter()
        .map(|comment| {
            let post_id = comment.submission_id().to_string();
            let title = posts[&post_id].as_ref().expect("candidate posts survived").title.clone();
            InstructionPair {
                bias: source.bias,
                subreddit: source.subreddit.to_string(),
                instruction: title,
                response: comment.body.trim().to_string(),
                score: comment.score,
                post_id,
                comment_id: comment.id,
                created_utc: comment.created_utc,
            }
        })
        .collect();

    Ok((
        pairs,
        SourceReport {
            bias: source.bias,
            subreddit: source.subreddit.to_string(),
            filters: report,
            submissions: submissions_stats,
            comments: comments_stats,
        },
    ))
}

/// Builds the corpus for every source, in parallel across sources.
///
/// Output is ordered by bias, then subreddit name, then rank within the
/// source; reports follow the same source order.
pub fn build_corpus(
    sources: &[BiasSource],
    dump_dir: &Path,
    options: &BuildOptions,
) -> Result<CorpusBuild, CorpusError> {
    if !(options.scale > 0.0 && options.scale <= 1.0) {
        return Err(CorpusError::Options(format!("scale {} is outside (0, 1]", options.scale)));
    }
    let mut ordered: Vec<&BiasSource> = sources.iter().collect();
    ordered.sort_by(|a, b| a.bias.cmp(&b.bias).then_with(|| a.subreddit.cmp(b.subreddit)));

    let results: Vec<_> = ordered
        .par_iter()
        .map(|source| build_source(source, dump_dir, options))
        .collect();

    let mut build = CorpusBuild {
        pairs: Vec::new(),
        reports: Vec::with_capacity(results.len()),
    };
    for result in results {
        let (pairs, report) = result?;
        build.pairs.extend(pairs);
        build.reports.push(report);
    }
    Ok(build)
}

pub fn write_corpus_to<W: Write>(pairs: &[InstructionPair], mut out: W) -> io::Result<()> {
    for pair in pairs {
        serde_json::to_writer(&mut out, pair)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Writes pairs as newline-delimited JSON.
pub fn write_corpus(pairs: &[InstructionPair], path: &Path) -> Result<(), CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_corpus_to(pairs, BufWriter::new(file)).map_err(io_err)
}

/// Reads and validates a corpus file; the first bad record aborts with its
/// line number.
pub fn read_corpus(path: &Path) -> Result<Vec<InstructionPair>, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_corpus_from(BufReader::new(file), path)
}

pub fn read_corpus_from<R: BufRead>(reader: R, path: &Path) -> Result<Vec<InstructionPair>, CorpusError> {
    let mut pairs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let invalid = |message: String| CorpusError::InvalidRecord {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let pair: InstructionPair = serde_json::from_str(&line).map_err(|e| invalid(e.to_string()))?;
        pair.validate().map_err(invalid)?;
        pairs.push(pair);
    }
    Ok(pairs)
}

/// Filter reports keyed by subreddit, as written next to a corpus file.
pub fn report_document(reports: &[SourceReport]) -> BTreeMap<String, &SourceReport> {
    reports.iter().map(|r| (r.subreddit.clone(), r)).collect()
}
