//! Exhaustive tf·idf cosine scan.

use std::collections::HashMap;

pub struct OracleDoc<'a> {
    pub instruction: &'a str,
}

fn tokens(text: &str) -> Vec<String> {
    let lowered = text.to_lowercase();
    let mut out = Vec::new();
    let mut current = String::new();
    for c in lowered.chars() {
        if c.is_alphanumeric() {
            current.push(c);
        } else if !current.is_empty() {
            out.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

fn tf(text: &str) -> HashMap<String, f64> {
    let mut m = HashMap::new();
    for t in tokens(text) {
        *m.entry(t).or_insert(0.0) += 1.0;
    }
    m
}

/// Similarity of `query` to each document, using smoothed idf
/// `ln((1 + N) / (1 + df)) + 1` over the documents themselves.
pub fn oracle_scores(docs: &[OracleDoc<'_>], query: &str) -> Vec<f64> {
    let n = docs.len() as f64;
    let doc_tf: Vec<HashMap<String, f64>> = docs.iter().map(|d| tf(d.instruction)).collect();
    let mut df: HashMap<String, f64> = HashMap::new();
    for d in &doc_tf {
        for t in d.keys() {
            *df.entry(t.clone()).or_insert(0.0) += 1.0;
        }
    }
    let idf = |t: &str| ((1.0 + n) / (1.0 + df.get(t).copied().unwrap_or(0.0))).ln() + 1.0;

    let weigh = |m: &HashMap<String, f64>| -> HashMap<String, f64> { m.iter().map(|(t, c)| (t.clone(), c * idf(t))).collect() };
    let q = weigh(&tf(query));
    let q_norm = q.values().map(|w| w * w).sum::<f64>().sqrt();

    doc_tf
        .iter()
        .map(|d| {
            let d = weigh(d);
            let d_norm = d.values().map(|w| w * w).sum::<f64>().sqrt();
            if q_norm == 0.0 || d_norm == 0.0 {
                return 0.0;
            }
            let dot: f64 = q.iter().map(|(t, w)| w * d.get(t).copied().unwrap_or(0.0)).sum();
            dot / (q_norm * d_norm)
        })
        .collect()
}

const VOCAB: &[&str] = &[
    "what", "why", "how", "is", "the", "best", "beer", "bread", "train", "winter", "do", "you", "love", "cars", "news",
    "tv", "channel", "sport", "food", "city", "school", "work", "money", "music", "holiday", "language", "church",
    "vote", "party", "tax", "gun", "health", "care", "family", "dating", "wedding", "rent", "house", "job", "boss",
    "2nd", "amendment", "ÜBER", "café", "X", "favorite", "worst", "really", "think", "about",
];

/// `count` short questions drawn from a fixed vocabulary. Small enough that
/// many share terms and some are exact duplicates.
pub fn synthetic_instructions(count: usize, seed: u64) -> Vec<String> {
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(1..9);
            let words: Vec<&str> = (0..n).map(|_| *VOCAB.choose(&mut rng).unwrap()).collect();
            format!("{}?", words.join(" "))
        })
        .collect()
}
