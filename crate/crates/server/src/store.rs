//! Append-only conversation log.
//!
//! Each line is one event (a turn or a share). The in-memory index is
//! rebuilt by replaying the log on open. Appends are fsynced before they
//! are acknowledged, and a torn final line from a crash is cut off on the
//! next open.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use chrono::{DateTime, Utc};
use rand::rngs::OsRng;
use rand::TryRngCore;
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::model::{Conversation, ConversationSummary, Turn};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}:{line}: corrupt record: {message}", path.display())]
    Corrupt { path: PathBuf, line: usize, message: String },
    #[error("os random source failed: {0}")]
    Entropy(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum Event {
    Turn { conversation_id: Uuid, turn: Turn },
    Share { conversation_id: Uuid, token: String },
}

struct Inner {
    /// `None` for an ephemeral store.
    file: Option<File>,
    conversations: HashMap<Uuid, (u64, Conversation)>,
    tokens: HashMap<String, Uuid>,
    next_seq: u64,
}

impl Inner {
    fn apply(&mut self, event: Event) -> Result<(), String> {
        match event {
            Event::Turn { conversation_id, turn } => {
                let seq = self.next_seq;
                let (_, conv) = self.conversations.entry(conversation_id).or_insert_with(|| {
                    (
                        seq,
                        Conversation {
                            id: conversation_id,
                            created_at: turn.asked_at,
                            turns: Vec::new(),
                            share_token: None,
                        },
                    )
                });
                if conv.turns.is_empty() {
                    self.next_seq += 1;
                }
                conv.turns.push(turn);
            }
            Event::Share { conversation_id, token } => {
                let (_, conv) = self
                    .conversations
                    .get_mut(&conversation_id)
                    .ok_or_else(|| format!("share for unknown conversation {conversation_id}"))?;
                if self.tokens.contains_key(&token) {
                    return Err("duplicate share token".into());
                }
                conv.share_token = Some(token.clone());
                self.tokens.insert(token, conversation_id);
            }
        }
        Ok(())
    }
}

pub struct Store {
    path: PathBuf,
    inner: Mutex<Inner>,
}

impl Store {
    /// Opens (or creates) the log at `path` and replays it.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        let io = |source| StoreError::Io {
            path: path.clone(),
            source,
        };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(io)?;
        }
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(&path).map_err(io)?;
        let mut raw = Vec::new();
        file.read_to_end(&mut raw).map_err(io)?;

        let mut inner = Inner {
            file: Some(file),
            conversations: HashMap::new(),
            tokens: HashMap::new(),
            next_seq: 0,
        };
        let mut offset = 0;
        let mut line_no = 0;
        while offset < raw.len() {
            line_no += 1;
            let end = raw[offset..].iter().position(|b| *b == b'\n').map(|i| offset + i);
            let Some(end) = end else {
                // Unterminated tail: a write that never finished.
                tracing::warn!(path = %path.display(), line = line_no, "dropping torn final record");
                let file = inner.file.as_mut().expect("opened above");
                file.set_len(offset as u64).map_err(io)?;
                file.seek(SeekFrom::End(0)).map_err(io)?;
                break;
            };
            let line = &raw[offset..end];
            offset = end + 1;
            if line.iter().all(u8::is_ascii_whitespace) {
                continue;
            }
            let corrupt = |message: String| StoreError::Corrupt {
                path: path.clone(),
                line: line_no,
                message,
            };
            let event: Event = serde_json::from_slice(line).map_err(|e| corrupt(e.to_string()))?;
            inner.apply(event).map_err(corrupt)?;
        }
        tracing::debug!(path = %path.display(), conversations = inner.conversations.len(), "store opened");
        Ok(Store {
            path,
            inner: Mutex::new(inner),
        })
    }

    /// A store that keeps everything in memory and forgets it on drop.
    pub fn ephemeral() -> Self {
        Store {
            path: PathBuf::new(),
            inner: Mutex::new(Inner {
                file: None,
                conversations: HashMap::new(),
                tokens: HashMap::new(),
                next_seq: 0,
            }),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn write(&self, inner: &mut Inner, event: &Event) -> Result<(), StoreError> {
        let Some(file) = inner.file.as_mut() else {
            return Ok(());
        };
        let mut line = serde_json::to_vec(event).expect("events serialize");
        line.push(b'\n');
        let io = |source| StoreError::Io {
            path: self.path.clone(),
            source,
        };
        file.write_all(&line).map_err(io)?;
        file.sync_data().map_err(io)
    }

    pub fn contains(&self, id: Uuid) -> bool {
        self.inner.lock().unwrap().conversations.contains_key(&id)
    }

    /// Appends a turn, creating the conversation if `id` is new. Returns
    /// once the record is on disk.
    pub fn append_turn(&self, id: Uuid, turn: Turn) -> Result<(), StoreError> {
        let mut inner = self.inner.lock().unwrap();
        let event = Event::Turn {
            conversation_id: id,
            turn,
        };
        self.write(&mut inner, &event)?;
        inner.apply(event).expect("turn events always apply");
        Ok(())
    }

    pub fn get(&self, id: Uuid) -> Option<Conversation> {
        self.inner.lock().unwrap().conversations.get(&id).map(|(_, c)| c.clone())
    }

    /// Newest first.
    pub fn summaries(&self) -> Vec<ConversationSummary> {
        let inner = self.inner.lock().unwrap();
        let mut all: Vec<&(u64, Conversation)> = inner.conversations.values().collect();
        all.sort_by_key(|e| std::cmp::Reverse(e.0));
        all.into_iter().map(|(_, c)| ConversationSummary::of(c)).collect()
    }

    /// The conversation's share token, minted on first call. `None` if the
    /// conversation does not exist.
    pub fn share(&self, id: Uuid) -> Result<Option<String>, StoreError> {
        let mut inner = self.inner.lock().unwrap();
        let Some((_, conv)) = inner.conversations.get(&id) else {
            return Ok(None);
        };
        if let Some(token) = &conv.share_token {
            return Ok(Some(token.clone()));
        }
        let token = loop {
            let candidate = new_token()?;
            if !inner.tokens.contains_key(&candidate) {
                break candidate;
            }
        };
        let event = Event::Share {
            conversation_id: id,
            token: token.clone(),
        };
        self.write(&mut inner, &event)?;
        inner.apply(event).expect("fresh token applies");
        Ok(Some(token))
    }

    pub fn resolve_share(&self, token: &str) -> Option<Conversation> {
        let inner = self.inner.lock().unwrap();
        let id = inner.tokens.get(token)?;
        inner.conversations.get(id).map(|(_, c)| c.clone())
    }
}

/// 128 random bits from the OS, base64url without padding (22 chars).
fn new_token() -> Result<String, StoreError> {
    let mut bytes = [0u8; 16];
    OsRng.try_fill_bytes(&mut bytes).map_err(|e| StoreError::Entropy(e.to_string()))?;
    Ok(URL_SAFE_NO_PAD.encode(bytes))
}

pub fn now() -> DateTime<Utc> {
    Utc::now()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AnswerStatus, BiasAnswer};
    use opinion_core::Bias;

    fn turn(q: &str) -> Turn {
        Turn {
            question: q.into(),
            asked_at: now(),
            answers: vec![BiasAnswer {
                bias: Bias::German,
                subreddit_used: "AskAGerman".into(),
                text: "ja".into(),
                status: AnswerStatus::Ok,
                error_detail: None,
                latency_ms: 3,
            }],
        }
    }

    #[test]
    fn replay_restores_everything() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.ndjson");
        let (a, b) = (Uuid::new_v4(), Uuid::new_v4());
        let token = {
            let store = Store::open(&path).unwrap();
            store.append_turn(a, turn("one")).unwrap();
            store.append_turn(b, turn("two")).unwrap();
            store.append_turn(a, turn("three")).unwrap();
            store.share(a).unwrap().unwrap()
        };
        let store = Store::open(&path).unwrap();
        assert_eq!(store.get(a).unwrap().turns.len(), 2);
        let ids: Vec<Uuid> = store.summaries().iter().map(|s| s.id).collect();
        assert_eq!(ids, vec![b, a]);
        assert_eq!(store.share(a).unwrap().unwrap(), token);
        assert_eq!(store.resolve_share(&token).unwrap(), store.get(a).unwrap());
    }

    #[test]
    fn torn_tail_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.ndjson");
        let id = Uuid::new_v4();
        Store::open(&path).unwrap().append_turn(id, turn("kept")).unwrap();
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(br#"{"event":"turn","conversation_id":"#).unwrap();
        drop(f);

        let store = Store::open(&path).unwrap();
        assert_eq!(store.get(id).unwrap().turns.len(), 1);
        store.append_turn(id, turn("after")).unwrap();
        drop(store);
        assert_eq!(Store::open(&path).unwrap().get(id).unwrap().turns.len(), 2);
    }

    #[test]
    fn corrupt_middle_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.ndjson");
        Store::open(&path).unwrap().append_turn(Uuid::new_v4(), turn("x")).unwrap();
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"garbage\n").unwrap();
        drop(f);
        let err = Store::open(&path).err().unwrap();
        assert!(matches!(err, StoreError::Corrupt { line: 2, .. }), "{err}");
    }

    #[test]
    fn tokens_are_128_bit_urlsafe() {
        let t = new_token().unwrap();
        assert_eq!(t.len(), 22);
        assert_eq!(URL_SAFE_NO_PAD.decode(&t).unwrap().len(), 16);
        assert!(t.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_'));
        assert_ne!(t, new_token().unwrap());
    }

    #[test]
    fn unknown_conversation_cannot_be_shared() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path().join("log.ndjson")).unwrap();
        assert_eq!(store.share(Uuid::new_v4()).unwrap(), None);
        assert!(store.resolve_share("AAAAAAAAAAAAAAAAAAAAAA").is_none());
    }
}
