//! Seeded generator of adversarial subreddit dumps.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

const WORDS: &[&str] = &[
    "what", "why", "how", "do", "you", "think", "about", "bread", "beer", "trains", "weather", "food",
    "school", "work", "family", "politics", "money", "music", "sport", "winter", "summer", "city", "village",
    "car", "bike", "coffee", "tea", "news", "tv", "channel", "best", "worst", "favorite", "really", "is",
    "the", "a", "in", "your", "country", "holiday", "language", "learn", "move", "live",
];

#[derive(Debug, Clone, Copy)]
pub struct SynthConfig {
    pub posts: usize,
    pub comments: usize,
    pub seed: u64,
    /// Write a fraction of records as garbage lines.
    pub malformed_lines: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            posts: 500,
            comments: 2_000,
            seed: 7,
            malformed_lines: true,
        }
    }
}

fn words(rng: &mut ChaCha8Rng, n: usize) -> String {
    (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

fn base36(mut n: u64) -> String {
    const DIGITS: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyz";
    if n == 0 {
        return "0".into();
    }
    let mut out = Vec::new();
    while n > 0 {
        out.push(DIGITS[(n % 36) as usize]);
        n /= 36;
    }
    out.reverse();
    String::from_utf8(out).unwrap()
}

fn title(rng: &mut ChaCha8Rng) -> String {
    match rng.random_range(0..20) {
        0 => words(rng, 80),
        1 => words(rng, 81),
        2 => words(rng, 120),
        3 => format!("  {}?  ", words(rng, 5)),
        _ => {
            let n = rng.random_range(2..14);
            format!("{}?", words(rng, n))
        }
    }
}

fn body(rng: &mut ChaCha8Rng) -> String {
    match rng.random_range(0..30) {
        0 => format!("> {}\n{}", words(rng, 4), words(rng, 6)),
        1 => format!("{}\n&gt; {}", words(rng, 3), words(rng, 3)),
        2 => format!("see /r/AskAGerman/comments/{}/x", base36(rng.random_range(1000..9999))),
        3 => format!("ask u/{} about it", words(rng, 1)),
        4 => format!("(/u/someone_{}) agreed", rng.random_range(0..99)),
        5 => format!("visit r/{} or menu/{} instead", words(rng, 1), words(rng, 1)),
        6 => words(rng, 80),
        7 => words(rng, 81),
        8 => format!("{}\n\n{}", words(rng, 40), words(rng, 40)),
        9 => format!("{}\n\n{}", words(rng, 40), words(rng, 41)),
        10 => "   ".into(),
        11 => format!("  {} a > b  ", words(rng, 3)),
        12 => format!("Ünïcödé {} — naïve", words(rng, 2)),
        _ => {
            let n = rng.random_range(1..30);
            words(rng, n)
        }
    }
}

fn created(rng: &mut ChaCha8Rng) -> i64 {
    // A narrow range produces plenty of exact ties.
    1_600_000_000 + rng.random_range(0..40)
}

fn submission(rng: &mut ChaCha8Rng, id: &str, subreddit: &str) -> Value {
    let mut v = json!({
        "id": id,
        "subreddit": subreddit,
        "title": title(rng),
        "selftext": "",
        "author": "someone",
        "score": rng.random_range(-2..6),
        "created_utc": created(rng),
        "num_comments": 3,
    });
    match rng.random_range(0..25) {
        0 => v["title"] = json!("[deleted]"),
        1 => v["selftext"] = json!("[removed]"),
        2 => v["removed_by_category"] = json!("moderator"),
        3 => v["author"] = json!("[deleted]"),
        4 => {
            v.as_object_mut().unwrap().remove("score");
        }
        5 => v["created_utc"] = json!(v["created_utc"].to_string()),
        6 => v["score"] = json!(1),
        7 => v["score"] = json!(0),
        _ => {}
    }
    v
}

fn comment(rng: &mut ChaCha8Rng, id: &str, post_ids: &[String], comment_ids: &[String]) -> Value {
    let post = if rng.random_range(0..40) == 0 {
        format!("zz{}", rng.random_range(0..999))
    } else {
        post_ids.choose(rng).unwrap().clone()
    };
    let link_id = format!("t3_{post}");
    let parent_id = if !comment_ids.is_empty() && rng.random_range(0..6) == 0 {
        format!("t1_{}", comment_ids.choose(rng).unwrap())
    } else {
        link_id.clone()
    };
    let mut v = json!({
        "id": id,
        "link_id": link_id,
        "parent_id": parent_id,
        "body": body(rng),
        "author": "someone",
        "score": rng.random_range(-3..9),
        "created_utc": created(rng),
        "subreddit": "ignored",
    });
    match rng.random_range(0..25) {
        0 => v["body"] = json!("[deleted]"),
        1 => v["body"] = json!("[removed]"),
        2 => v["author"] = json!("[deleted]"),
        3 => v["removal_reason"] = json!("legal"),
        4 => {
            v.as_object_mut().unwrap().remove("score");
        }
        5 => v["score"] = json!(1),
        6 => v["score"] = json!(0),
        7 => v["created_utc"] = json!(v["created_utc"].as_i64().unwrap() as f64),
        _ => {}
    }
    v
}

fn garbage(rng: &mut ChaCha8Rng) -> String {
    match rng.random_range(0..5) {
        0 => "{\"id\": \"broken".into(),
        1 => "not json at all".into(),
        2 => "[1, 2, 3]".into(),
        3 => "{\"id\":\"\",\"title\":\"x\"}".into(),
        _ => String::new(),
    }
}

/// Writes `<subreddit>_submissions.ndjson` and `<subreddit>_comments.ndjson`
/// for each subreddit. Includes duplicates, bad lines, deletions, nested
/// replies, citations, length and score boundaries, and timestamp ties.
pub fn write_synthetic_dump(dir: &Path, subreddits: &[&str], config: SynthConfig) {
    fs::create_dir_all(dir).unwrap();
    for (i, subreddit) in subreddits.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(i as u64 * 1_000_003));
        let mut subs = fs::File::create(dir.join(format!("{subreddit}_submissions.ndjson"))).unwrap();
        let mut post_ids = Vec::new();
        for n in 0..config.posts {
            let id = base36(10_000 + n as u64 * 7);
            let record = submission(&mut rng, &id, subreddit);
            writeln!(subs, "{record}").unwrap();
            post_ids.push(id);
            if rng.random_range(0..60) == 0 {
                // Duplicate id with different content: the first wins.
                let dup = post_ids[rng.random_range(0..post_ids.len())].clone();
                writeln!(subs, "{}", submission(&mut rng, &dup, subreddit)).unwrap();
            }
            if config.malformed_lines && rng.random_range(0..80) == 0 {
                writeln!(subs, "{}", garbage(&mut rng)).unwrap();
            }
        }

        let mut coms = fs::File::create(dir.join(format!("{subreddit}_comments.ndjson"))).unwrap();
        let mut comment_ids: Vec<String> = Vec::new();
        for n in 0..config.comments {
            let id = base36(500_000 + n as u64 * 13);
            let record = comment(&mut rng, &id, &post_ids, &comment_ids);
            writeln!(coms, "{record}").unwrap();
            comment_ids.push(id);
            if rng.random_range(0..100) == 0 {
                let dup = comment_ids[rng.random_range(0..comment_ids.len())].clone();
                writeln!(coms, "{}", comment(&mut rng, &dup, &post_ids, &comment_ids)).unwrap();
            }
            if config.malformed_lines && rng.random_range(0..150) == 0 {
                writeln!(coms, "{}", garbage(&mut rng)).unwrap();
            }
        }
    }
}
