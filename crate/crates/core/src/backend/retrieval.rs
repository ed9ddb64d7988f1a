//! Offline responder: answers with the stored response whose instruction is
//! most similar to the query.
//!
//! Similarity is the cosine between tf·idf vectors, with tokens taken as
//! lowercased maximal alphanumeric runs and a smoothed idf computed over the
//! instructions of one subreddit:
//!
//! ```text
//! idf(t) = ln((1 + N) / (1 + df(t))) + 1
//! ```
//!
//! Ties go to the earliest record in corpus order. Vector terms are kept
//! sorted so that equal inputs produce bit-identical scores.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use async_trait::async_trait;

use super::{BackendError, BackendKind, Completion, GenerationParams, Generator};
use crate::corpus::InstructionPair;
use crate::prompt::{truncate_at_stop, RenderedPrompt};

/// Lowercased maximal alphanumeric runs.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn term_counts(text: &str) -> BTreeMap<String, u32> {
    let mut counts = BTreeMap::new();
    for token in tokenize(text) {
        *counts.entry(token).or_insert(0) += 1;
    }
    counts
}

struct DocVector {
    /// (term id, weight), sorted by term id.
    weights: Vec<(u32, f64)>,
    norm: f64,
}

struct SubredditIndex {
    pairs: Vec<InstructionPair>,
    vocabulary: HashMap<String, u32>,
    idf: Vec<f64>,
    docs: Vec<DocVector>,
    unseen_idf: f64,
}

impl SubredditIndex {
    fn build(pairs: Vec<InstructionPair>) -> Self {
        let counts: Vec<BTreeMap<String, u32>> = pairs.iter().map(|p| term_counts(&p.instruction)).collect();
        let mut vocab_terms: Vec<&String> = counts.iter().flat_map(|c| c.keys()).collect();
        vocab_terms.sort();
        vocab_terms.dedup();
        let vocabulary: HashMap<String, u32> = vocab_terms
            .iter()
            .enumerate()
            .map(|(i, t)| ((*t).clone(), i as u32))
            .collect();

        let mut df = vec![0u32; vocabulary.len()];
        for doc in &counts {
            for term in doc.keys() {
                df[vocabulary[term] as usize] += 1;
            }
        }
        let n = pairs.len() as f64;
        let idf: Vec<f64> = df.iter().map(|&d| ((1.0 + n) / (1.0 + f64::from(d))).ln() + 1.0).collect();

        // Term ids follow sorted term order, so iterating a BTreeMap yields
        // ids in ascending order.
        let docs = counts
            .iter()
            .map(|doc| {
                let weights: Vec<(u32, f64)> = doc
                    .iter()
                    .map(|(term, &tf)| {
                        let id = vocabulary[term];
                        (id, f64::from(tf) * idf[id as usize])
                    })
                    .collect();
                let norm = weights.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
                DocVector { weights, norm }
            })
            .collect();

        SubredditIndex {
            pairs,
            vocabulary,
            idf,
            docs,
            unseen_idf: (1.0 + n).ln() + 1.0,
        }
    }

    fn query_vector(&self, query: &str) -> (Vec<(u32, f64)>, f64) {
        let mut known = Vec::new();
        let mut unseen_sq = 0.0;
        // BTreeMap order is term order, which is term-id order.
        for (term, tf) in term_counts(query) {
            match self.vocabulary.get(&term) {
                Some(&id) => known.push((id, f64::from(tf) * self.idf[id as usize])),
                None => unseen_sq += (f64::from(tf) * self.unseen_idf).powi(2),
            }
        }
        let known_sq: f64 = known.iter().map(|(_, w)| w * w).sum();
        (known, (known_sq + unseen_sq).sqrt())
    }

    fn similarity(query: &[(u32, f64)], query_norm: f64, doc: &DocVector) -> f64 {
        if query_norm == 0.0 || doc.norm == 0.0 {
            return 0.0;
        }
        let (mut i, mut j, mut dot) = (0, 0, 0.0);
        while i < query.len() && j < doc.weights.len() {
            match query[i].0.cmp(&doc.weights[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    dot += query[i].1 * doc.weights[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        dot / (query_norm * doc.norm)
    }
}

/// A retrieved record and its similarity to the query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Retrieved<'a> {
    pub pair: &'a InstructionPair,
    pub position: usize,
    pub similarity: f64,
}

/// Per-subreddit similarity indices over a corpus. Immutable once built.
pub struct CorpusIndex {
    subreddits: HashMap<String, SubredditIndex>,
}

impl CorpusIndex {
    /// Groups pairs by subreddit, preserving corpus order within each group.
    pub fn build(pairs: impl IntoIterator<Item = InstructionPair>) -> Self {
        let mut grouped: HashMap<String, Vec<InstructionPair>> = HashMap::new();
        for pair in pairs {
            grouped.entry(pair.subreddit.clone()).or_default().push(pair);
        }
        CorpusIndex {
            subreddits: grouped
                .into_iter()
                .map(|(name, pairs)| (name, SubredditIndex::build(pairs)))
                .collect(),
        }
    }

    pub fn len(&self, subreddit: &str) -> usize {
        self.subreddits.get(subreddit).map_or(0, |s| s.pairs.len())
    }

    pub fn is_empty(&self) -> bool {
        self.subreddits.values().all(|s| s.pairs.is_empty())
    }

    pub fn subreddits(&self) -> impl Iterator<Item = &str> {
        self.subreddits.keys().map(String::as_str)
    }

    /// Similarity of `query` to every stored instruction of a subreddit, in
    /// corpus order.
    pub fn scores(&self, subreddit: &str, query: &str) -> Result<Vec<f64>, BackendError> {
        let index = self.get(subreddit)?;
        let (q, norm) = index.query_vector(query);
        Ok(index
            .docs
            .iter()
            .map(|d| SubredditIndex::similarity(&q, norm, d))
            .collect())
    }

    pub fn retrieve(&self, subreddit: &str, query: &str) -> Result<Retrieved<'_>, BackendError> {
        let index = self.get(subreddit)?;
        let (q, norm) = index.query_vector(query);
        let mut best = (0usize, f64::NEG_INFINITY);
        for (pos, doc) in index.docs.iter().enumerate() {
            let sim = SubredditIndex::similarity(&q, norm, doc);
            if sim > best.1 {
                best = (pos, sim);
            }
        }
        Ok(Retrieved {
            pair: &index.pairs[best.0],
            position: best.0,
            similarity: best.1,
        })
    }

    fn get(&self, subreddit: &str) -> Result<&SubredditIndex, BackendError> {
        self.subreddits
            .get(subreddit)
            .filter(|s| !s.pairs.is_empty())
            .ok_or_else(|| BackendError::NoCorpus(subreddit.to_string()))
    }
}

pub fn retrieve<'a>(subreddit: &str, instruction: &str, index: &'a CorpusIndex) -> Result<&'a InstructionPair, BackendError> {
    index.retrieve(subreddit, instruction).map(|r| r.pair)
}

pub struct RetrievalBackend {
    index: CorpusIndex,
}

impl RetrievalBackend {
    pub fn new(index: CorpusIndex) -> Self {
        RetrievalBackend { index }
    }

    pub fn index(&self) -> &CorpusIndex {
        &self.index
    }
}

#[async_trait]
impl Generator for RetrievalBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Retrieval
    }

    async fn generate(&self, prompt: &RenderedPrompt, params: &GenerationParams) -> Result<Completion, BackendError> {
        let started = Instant::now();
        let hit = self.index.retrieve(&prompt.subreddit, prompt.instruction())?;
        Ok(Completion {
            text: truncate_at_stop(&hit.pair.response, &params.stop).to_string(),
            backend: BackendKind::Retrieval,
            latency_ms: started.elapsed().as_millis() as u64,
        })
    }
}
