//! Naive corpus derivation: materialize every (post, reply) pair, filter,
//! sort, cut, serialize.

use std::fs;
use std::path::Path;

use serde_json::{Map, Value};

#[derive(Debug, Clone)]
pub struct OracleSource {
    pub bias_id: String,
    /// Position of the bias in canonical bias order.
    pub bias_rank: usize,
    pub subreddit: String,
    pub quota: usize,
}

struct Post {
    id: String,
    title: String,
    score: i64,
    deleted: bool,
}

struct Reply {
    id: String,
    link_id: String,
    parent_id: String,
    body: String,
    score: i64,
    created: i64,
    deleted: bool,
}

fn integer(v: &Value) -> Option<i64> {
    if let Some(i) = v.as_i64() {
        return Some(i);
    }
    if let Some(f) = v.as_f64() {
        return Some(f as i64);
    }
    if let Some(s) = v.as_str() {
        let s = s.trim();
        if let Ok(i) = s.parse::<i64>() {
            return Some(i);
        }
        if let Ok(f) = s.parse::<f64>() {
            return Some(f as i64);
        }
    }
    None
}

fn text(m: &Map<String, Value>, k: &str) -> Option<String> {
    m.get(k).and_then(|v| v.as_str()).map(|s| s.to_string())
}

fn marker(m: &Map<String, Value>, k: &str) -> bool {
    let s = text(m, k);
    s.as_deref() == Some("[deleted]") || s.as_deref() == Some("[removed]")
}

fn removed(m: &Map<String, Value>) -> bool {
    if text(m, "author").as_deref() == Some("[deleted]") {
        return true;
    }
    for k in ["removed_by_category", "removed_by", "removal_reason", "banned_by"] {
        if let Some(v) = m.get(k) {
            if !v.is_null() {
                return true;
            }
        }
    }
    false
}

fn score_of(m: &Map<String, Value>) -> Option<i64> {
    match m.get("score") {
        None => Some(0),
        Some(Value::Null) => Some(0),
        Some(v) => integer(v),
    }
}

fn objects(path: &Path) -> Vec<Map<String, Value>> {
    let raw = fs::read_to_string(path).unwrap();
    let mut out = Vec::new();
    for line in raw.split('\n') {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if let Ok(Value::Object(m)) = serde_json::from_str::<Value>(line) {
            out.push(m);
        }
    }
    out
}

fn load_posts(path: &Path) -> Vec<Post> {
    let mut posts: Vec<Post> = Vec::new();
    for m in objects(path) {
        let (Some(id), Some(_), Some(title)) = (text(&m, "id"), text(&m, "subreddit"), text(&m, "title")) else {
            continue;
        };
        if id.is_empty() {
            continue;
        }
        let deleted = marker(&m, "title") || marker(&m, "selftext") || removed(&m);
        if title.trim().is_empty() && !deleted {
            continue;
        }
        let Some(score) = score_of(&m) else { continue };
        if m.get("created_utc").and_then(integer).is_none() {
            continue;
        }
        // First occurrence of an id wins.
        if posts.iter().any(|p| p.id == id) {
            continue;
        }
        posts.push(Post {
            id,
            title,
            score,
            deleted,
        });
    }
    posts
}

fn load_replies(path: &Path) -> Vec<Reply> {
    let mut replies: Vec<Reply> = Vec::new();
    for m in objects(path) {
        let (Some(id), Some(link_id), Some(parent_id), Some(body)) =
            (text(&m, "id"), text(&m, "link_id"), text(&m, "parent_id"), text(&m, "body"))
        else {
            continue;
        };
        if id.is_empty() || !link_id.starts_with("t3_") || link_id == "t3_" {
            continue;
        }
        if !parent_id.starts_with("t1_") && !parent_id.starts_with("t3_") {
            continue;
        }
        let Some(score) = score_of(&m) else { continue };
        let Some(created) = m.get("created_utc").and_then(integer) else { continue };
        let deleted = marker(&m, "body") || removed(&m);
        if replies.iter().any(|r| r.id == id) {
            continue;
        }
        replies.push(Reply {
            id,
            link_id,
            parent_id,
            body,
            score,
            created,
            deleted,
        });
    }
    replies
}

fn count_words(s: &str) -> usize {
    let mut n = 0;
    let mut in_word = false;
    for c in s.chars() {
        if c.is_whitespace() {
            in_word = false;
        } else if !in_word {
            in_word = true;
            n += 1;
        }
    }
    n
}

fn name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

fn word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Scans for quoting devices character by character.
pub fn cites(body: &str) -> bool {
    for line in body.split('\n') {
        let rest = line.trim_start_matches([' ', '\t']);
        if rest.starts_with('>') || rest.starts_with("&gt;") {
            return true;
        }
    }
    let chars: Vec<char> = body.chars().collect();
    for i in 0..chars.len() {
        // r/<name>/comments/
        if chars[i] == 'r' && chars.get(i + 1) == Some(&'/') {
            let mut j = i + 2;
            while j < chars.len() && word_char(chars[j]) {
                j += 1;
            }
            if j > i + 2 {
                let tail: String = chars[j..chars.len().min(j + 10)].iter().collect();
                if tail == "/comments/" {
                    return true;
                }
            }
        }
        // u/<name> or /u/<name>, not glued to a word or path
        if chars[i] == 'u' && chars.get(i + 1) == Some(&'/') && chars.get(i + 2).is_some_and(|c| name_char(*c)) {
            let before = if i == 0 { None } else { Some(chars[i - 1]) };
            let ok = match before {
                None => true,
                Some('/') => {
                    let before2 = if i < 2 { None } else { Some(chars[i - 2]) };
                    match before2 {
                        None => true,
                        Some(c) => !(word_char(c) || c == '/'),
                    }
                }
                Some(c) => !(word_char(c) || c == '/'),
            };
            if ok {
                return true;
            }
        }
    }
    false
}

/// Expected corpus file contents for `sources` over the dumps in `dir`
/// (plain `.ndjson` files only).
pub fn oracle_corpus(dir: &Path, sources: &[OracleSource]) -> String {
    let mut ordered: Vec<&OracleSource> = sources.iter().collect();
    ordered.sort_by(|a, b| (a.bias_rank, &a.subreddit).cmp(&(b.bias_rank, &b.subreddit)));

    let mut out = String::new();
    for source in ordered {
        let posts = load_posts(&dir.join(format!("{}_submissions.ndjson", source.subreddit)));
        let replies = load_replies(&dir.join(format!("{}_comments.ndjson", source.subreddit)));

        // Every (post, reply) pair that passes every filter.
        let mut kept: Vec<(&Post, &Reply)> = Vec::new();
        for post in &posts {
            if post.score < 1 || post.deleted || count_words(&post.title) > 80 {
                continue;
            }
            for reply in &replies {
                let top_level = reply.parent_id == reply.link_id;
                if reply.link_id != format!("t3_{}", post.id) || !top_level || reply.deleted {
                    continue;
                }
                if reply.body.trim().is_empty() || cites(&reply.body) || count_words(&reply.body) > 80 || reply.score < 1 {
                    continue;
                }
                kept.push((post, reply));
            }
        }
        kept.sort_by(|(_, a), (_, b)| (-a.score, a.created, &a.id).cmp(&(-b.score, b.created, &b.id)));
        kept.truncate(source.quota);

        for (post, reply) in kept {
            out.push_str(&format!(
                "{{\"bias\":{},\"subreddit\":{},\"instruction\":{},\"response\":{},\"score\":{},\"post_id\":{},\"comment_id\":{},\"created_utc\":{}}}\n",
                serde_json::to_string(&source.bias_id).unwrap(),
                serde_json::to_string(&source.subreddit).unwrap(),
                serde_json::to_string(post.title.trim()).unwrap(),
                serde_json::to_string(reply.body.trim()).unwrap(),
                reply.score,
                serde_json::to_string(&post.id).unwrap(),
                serde_json::to_string(&reply.id).unwrap(),
                reply.created,
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn citation_scanner() {
        assert!(cites("> as OP said\nI agree"));
        assert!(cites("see /r/AskAGerman/comments/abc123/..."));
        assert!(cites("u/bob"));
        assert!(cites("hey /u/bob"));
        assert!(!cites("I prefer tea."));
        assert!(!cites("a/u/bob"));
        assert!(!cites("//u/bob"));
        assert!(!cites("r/AskAGerman is nice"));
    }

    #[test]
    fn word_counter() {
        assert_eq!(count_words(""), 0);
        assert_eq!(count_words(" a  b\n c "), 3);
    }
}
