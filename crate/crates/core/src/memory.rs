//! Memory retention: a per-iteration short-term buffer, forgetting of the
//! lowest-scored newly distilled knowledge, and an embedding-indexed
//! long-term store with top-k cosine recall.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bench_model::InfoItem;
use crate::llm_provider::{Embedding, ProviderError};
use crate::prompt_kit::KnowledgeDraft;
use crate::scalar::Real;

/// Default number of long-term items recalled per question.
pub const DEFAULT_RECALL_K: usize = 5;

#[derive(Debug, thiserror::Error)]
pub enum MemoryError {
    #[error("short-term memory still holds {0} entries; clear it before ingesting")]
    StmNotEmpty(usize),
    #[error("embedding has dimension {got}, store expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("knowledge score {0} outside 1-5")]
    Score(u8),
    #[error(transparent)]
    Embedding(#[from] ProviderError),
    #[error("i/o error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: line {line}: {message}", .path.display())]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

pub type Result<T, E = MemoryError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StmEntry {
    pub source_id: String,
    pub text: String,
    pub iteration: usize,
}

/// Holds exactly one iteration's perceived text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ShortTermMemory {
    entries: Vec<StmEntry>,
}

impl ShortTermMemory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fills the buffer with one entry per item, in order. Items with blank
    /// text are skipped. Fails if the previous iteration was never cleared.
    pub fn ingest(&mut self, items: &[InfoItem], iteration: usize) -> Result<()> {
        if !self.entries.is_empty() {
            return Err(MemoryError::StmNotEmpty(self.entries.len()));
        }
        self.entries = items
            .iter()
            .filter(|i| !i.text.trim().is_empty())
            .map(|i| StmEntry {
                source_id: i.id.clone(),
                text: i.text.clone(),
                iteration,
            })
            .collect();
        Ok(())
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn entries(&self) -> &[StmEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn source_ids(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.source_id.clone()).collect()
    }

    /// Entry texts separated by blank lines; the `{memory}` binding for the
    /// refinement and distillation prompts.
    pub fn text(&self) -> String {
        self.entries
            .iter()
            .map(|e| e.text.trim())
            .collect::<Vec<_>>()
            .join("\n\n")
    }
}

/// Number of drafts forgotten out of `n`: 40%, rounded down.
pub fn forget_count(n: usize) -> usize {
    n * 2 / 5
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Commit {
    /// Surviving drafts in their original order.
    pub retained: Vec<KnowledgeDraft>,
    /// Forgotten drafts in their original order.
    pub dropped: Vec<KnowledgeDraft>,
}

/// Forgets the `forget_count(n)` lowest-scored drafts. Among equal scores
/// the earlier draft is forgotten first.
pub fn commit_knowledge(drafts: Vec<KnowledgeDraft>) -> Commit {
    let d = forget_count(drafts.len());
    let mut order: Vec<usize> = (0..drafts.len()).collect();
    order.sort_by_key(|&i| (drafts[i].score, i));
    let mut forget = vec![false; drafts.len()];
    for &i in &order[..d] {
        forget[i] = true;
    }
    let mut commit = Commit::default();
    for (draft, gone) in drafts.into_iter().zip(forget) {
        if gone {
            commit.dropped.push(draft);
        } else {
            commit.retained.push(draft);
        }
    }
    commit
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeItem<F> {
    pub statement: String,
    pub score: u8,
    pub iteration: usize,
    #[serde(default)]
    pub source_ids: Vec<String>,
    pub embedding: Embedding<F>,
}

/// Cosine similarity; zero when either vector has zero norm.
pub fn cosine<F: Real>(a: &[F], b: &[F]) -> F {
    let (mut dot, mut na, mut nb) = (F::zero(), F::zero(), F::zero());
    for (&x, &y) in a.iter().zip(b) {
        dot = dot + x * y;
        na = na + x * x;
        nb = nb + y * y;
    }
    if na == F::zero() || nb == F::zero() {
        return F::zero();
    }
    dot / (na.sqrt() * nb.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecallHit<F> {
    /// Position in the store's append order.
    pub index: usize,
    pub statement: String,
    pub score: u8,
    pub similarity: F,
}

/// Hits sorted by similarity, descending; equal similarities keep append order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecallResult<F> {
    pub hits: Vec<RecallHit<F>>,
}

impl<F> RecallResult<F> {
    pub fn statements(&self) -> Vec<String> {
        self.hits.iter().map(|h| h.statement.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.hits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }
}

/// Heap key: better hits compare greater.
struct Ranked<F> {
    similarity: F,
    index: usize,
}

impl<F: Real> Ranked<F> {
    fn better(&self, other: &Self) -> Ordering {
        self.similarity
            .partial_cmp(&other.similarity)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl<F: Real> PartialEq for Ranked<F> {
    fn eq(&self, other: &Self) -> bool {
        self.better(other) == Ordering::Equal
    }
}
impl<F: Real> Eq for Ranked<F> {}
impl<F: Real> PartialOrd for Ranked<F> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<F: Real> Ord for Ranked<F> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.better(other)
    }
}

/// Append-only store of scored, embedded knowledge.
#[derive(Debug, Clone, PartialEq)]
pub struct LongTermMemory<F> {
    items: Vec<KnowledgeItem<F>>,
    dim: usize,
}

impl<F: Real + Serialize + serde::de::DeserializeOwned> LongTermMemory<F> {
    pub fn new(dim: usize) -> Self {
        Self {
            items: Vec::new(),
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn items(&self) -> &[KnowledgeItem<F>] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Embeds and appends the retained drafts. Either every draft is stored
    /// or, on any embedding failure, none is.
    pub fn store<E>(
        &mut self,
        retained: &[KnowledgeDraft],
        iteration: usize,
        source_ids: &[String],
        mut embed: E,
    ) -> Result<usize>
    where
        E: FnMut(&str) -> std::result::Result<Embedding<F>, ProviderError>,
    {
        let mut staged = Vec::with_capacity(retained.len());
        for draft in retained {
            if !(1..=5).contains(&draft.score) {
                return Err(MemoryError::Score(draft.score));
            }
            let embedding = embed(&draft.knowledge)?;
            if embedding.dim() != self.dim {
                return Err(MemoryError::Dimension {
                    expected: self.dim,
                    got: embedding.dim(),
                });
            }
            staged.push(KnowledgeItem {
                statement: draft.knowledge.clone(),
                score: draft.score,
                iteration,
                source_ids: source_ids.to_vec(),
                embedding,
            });
        }
        let count = staged.len();
        self.items.extend(staged);
        Ok(count)
    }

    /// Top-`min(k, len)` items by cosine similarity to `query`.
    pub fn recall(&self, query: &Embedding<F>, k: usize) -> RecallResult<F> {
        let k = k.min(self.items.len());
        if k == 0 {
            return RecallResult { hits: Vec::new() };
        }
        // Min-heap of the k best seen so far.
        let mut heap: BinaryHeap<Reverse<Ranked<F>>> = BinaryHeap::with_capacity(k + 1);
        for (index, item) in self.items.iter().enumerate() {
            let ranked = Ranked {
                similarity: cosine(query.values(), item.embedding.values()),
                index,
            };
            if heap.len() < k {
                heap.push(Reverse(ranked));
            } else if heap.peek().is_some_and(|Reverse(worst)| ranked > *worst) {
                heap.pop();
                heap.push(Reverse(ranked));
            }
        }
        let hits = heap
            .into_sorted_vec()
            .into_iter()
            .map(|Reverse(r)| {
                let item = &self.items[r.index];
                RecallHit {
                    index: r.index,
                    statement: item.statement.clone(),
                    score: item.score,
                    similarity: r.similarity,
                }
            })
            .collect();
        RecallResult { hits }
    }

    /// Embeds `query_text`, then recalls.
    pub fn recall_text<E>(&self, query_text: &str, k: usize, mut embed: E) -> Result<RecallResult<F>>
    where
        E: FnMut(&str) -> std::result::Result<Embedding<F>, ProviderError>,
    {
        if self.items.is_empty() {
            return Ok(RecallResult { hits: Vec::new() });
        }
        let query = embed(query_text)?;
        if query.dim() != self.dim {
            return Err(MemoryError::Dimension {
                expected: self.dim,
                got: query.dim(),
            });
        }
        Ok(self.recall(&query, k))
    }

    /// One JSON object per line, in append order.
    pub fn to_jsonl(&self) -> String {
        self.items
            .iter()
            .map(|i| serde_json::to_string(i).expect("knowledge items serialize") + "\n")
            .collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |source| MemoryError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut file = fs::File::create(path).map_err(io)?;
        file.write_all(self.to_jsonl().as_bytes()).map_err(io)
    }

    pub fn load(path: impl AsRef<Path>, dim: usize) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| MemoryError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut store = Self::new(dim);
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let item: KnowledgeItem<F> = serde_json::from_str(line).map_err(|e| MemoryError::Format {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
            if item.embedding.dim() != dim {
                return Err(MemoryError::Dimension {
                    expected: dim,
                    got: item.embedding.dim(),
                });
            }
            store.items.push(item);
        }
        Ok(store)
    }
}
