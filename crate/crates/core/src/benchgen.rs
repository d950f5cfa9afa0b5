//! Benchmark construction helpers: model-generated opinion sets and
//! profiles, supporter ranking, and human review sheets.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bench_model::{ProfileDoc, Question, Questionnaire};
use crate::llm_provider::{LanguageModel, PromptRequest, ProviderError};
use crate::prompt_kit::{
    parse_opinion_set, parse_profile_lines, OpinionEntry, OpinionSet, ParseError, TemplateError, TemplateId, TemplateSet,
};

/// Opinions requested per topic.
pub const OPINIONS_PER_TOPIC: usize = 10;
/// Fewest canonical attributes a generated profile must fill.
pub const MIN_PROFILE_KEYS: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum GenError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("generated profile fills only {recovered} of 22 attributes (need {MIN_PROFILE_KEYS})")]
    SparseProfile { recovered: usize },
    #[error("i/o error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("review sheet {}: {message}", .path.display())]
    Sheet { path: PathBuf, message: String },
    #[error("review sheet {}: row {row}: {message}", .path.display())]
    Row { path: PathBuf, row: usize, message: String },
}

pub type Result<T, E = GenError> = std::result::Result<T, E>;

/// A generated artifact plus the non-fatal problems found on the way.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generated<T> {
    pub value: T,
    pub warnings: Vec<String>,
}

/// Asks the model for a topic's opinion set.
pub fn generate_opinion_set<M: LanguageModel>(
    topic: &str,
    templates: &TemplateSet,
    model: &mut M,
) -> Result<Generated<OpinionSet>> {
    let prompt = templates.render(TemplateId::QuestionnaireDesign, &[("topic", topic)])?;
    let reply = model.complete(&PromptRequest::new(TemplateId::QuestionnaireDesign.as_str(), prompt))?;
    let set = parse_opinion_set(&reply.text)?;
    let mut warnings = Vec::new();
    if set.len() != OPINIONS_PER_TOPIC {
        let w = format!("expected {OPINIONS_PER_TOPIC} opinions for {topic:?}, got {}", set.len());
        log::warn!("{w}");
        warnings.push(w);
    }
    Ok(Generated { value: set, warnings })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupporterRank {
    pub supporter: String,
    pub mentions: usize,
    pub rank: usize,
}

/// Lowercased, trimmed, internal whitespace collapsed.
pub fn normalize_supporter(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Counts supporter mentions across all entries. Ranks are dense by
/// descending count; equal counts are listed by first appearance and
/// share a rank.
pub fn rank_supporters(sets: &[OpinionSet]) -> Vec<SupporterRank> {
    let mut order: Vec<String> = Vec::new();
    let mut counts: HashMap<String, usize> = HashMap::new();
    for supporter in sets.iter().flat_map(|s| &s.entries).flat_map(|e| &e.supporters) {
        let key = normalize_supporter(supporter);
        if key.is_empty() {
            continue;
        }
        let count = counts.entry(key.clone()).or_insert(0);
        if *count == 0 {
            order.push(key);
        }
        *count += 1;
    }
    let mut ranked: Vec<(usize, String)> = order.into_iter().map(|k| (counts[&k], k)).collect();
    // Stable sort keeps first-appearance order among equal counts.
    ranked.sort_by_key(|r| std::cmp::Reverse(r.0));
    let mut out: Vec<SupporterRank> = Vec::with_capacity(ranked.len());
    for (mentions, supporter) in ranked {
        let rank = match out.last() {
            Some(prev) if prev.mentions == mentions => prev.rank,
            Some(prev) => prev.rank + 1,
            None => 1,
        };
        out.push(SupporterRank { supporter, mentions, rank });
    }
    out
}

/// Parses a profile-creation reply. Empty values count as missing; at
/// least [`MIN_PROFILE_KEYS`] canonical attributes must be filled.
pub fn parse_generated_profile(text: &str) -> Result<Generated<ProfileDoc>> {
    let pairs = parse_profile_lines(text).into_iter().filter(|(_, v)| !v.is_empty());
    let (doc, norm) = ProfileDoc::from_pairs(pairs);
    if norm.recovered() < MIN_PROFILE_KEYS {
        return Err(GenError::SparseProfile {
            recovered: norm.recovered(),
        });
    }
    let mut warnings: Vec<String> = norm
        .missing
        .iter()
        .map(|k| format!("generated profile has no value for {k:?}"))
        .collect();
    warnings.extend(norm.extras.iter().map(|k| format!("generated profile has extra key {k:?}")));
    Ok(Generated { value: doc, warnings })
}

/// Asks the model for a character profile.
pub fn generate_profile<M: LanguageModel>(
    character: &str,
    templates: &TemplateSet,
    model: &mut M,
) -> Result<Generated<ProfileDoc>> {
    let prompt = templates.render(TemplateId::ProfileCreate, &[("character", character)])?;
    let reply = model.complete(&PromptRequest::new(TemplateId::ProfileCreate.as_str(), prompt))?;
    parse_generated_profile(&reply.text)
}

/// One opinion awaiting human review. Unset flags mean "not yet judged".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReviewRow {
    pub number: u32,
    pub perspective: String,
    pub opinion: String,
    pub supporters: Vec<String>,
    pub reasons: String,
    pub relevance: Option<bool>,
    pub distinctiveness: Option<bool>,
    pub clarity: Option<bool>,
    pub contextual_truth: Option<bool>,
    /// A reviewer's rewording; replaces the opinion when non-empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revised_opinion: Option<String>,
}

impl ReviewRow {
    fn from_entry(e: &OpinionEntry) -> Self {
        Self {
            number: e.number,
            perspective: e.perspective.clone(),
            opinion: e.opinion.clone(),
            supporters: e.supporters.clone(),
            reasons: e.reasons.clone(),
            relevance: None,
            distinctiveness: None,
            clarity: None,
            contextual_truth: None,
            revised_opinion: None,
        }
    }

    /// Accepted only when every checklist flag is set to true.
    pub fn accepted(&self) -> bool {
        [self.relevance, self.distinctiveness, self.clarity, self.contextual_truth]
            .iter()
            .all(|f| *f == Some(true))
    }

    pub fn statement(&self) -> &str {
        match self.revised_opinion.as_deref().map(str::trim) {
            Some(r) if !r.is_empty() => r,
            _ => &self.opinion,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewSheet {
    pub topic_id: String,
    pub rows: Vec<ReviewRow>,
}

impl ReviewSheet {
    pub fn new(topic_id: &str, set: &OpinionSet) -> Self {
        Self {
            topic_id: topic_id.to_string(),
            rows: set.entries.iter().map(ReviewRow::from_entry).collect(),
        }
    }

    /// Accepted rows as questions `q1..` in sheet order.
    pub fn to_questionnaire(&self) -> Questionnaire {
        let questions = self
            .rows
            .iter()
            .filter(|r| r.accepted())
            .enumerate()
            .map(|(i, r)| Question {
                id: format!("q{}", i + 1),
                topic_id: self.topic_id.clone(),
                statement: r.statement().to_string(),
            })
            .collect();
        Questionnaire {
            topic_id: self.topic_id.clone(),
            questions,
        }
    }
}

pub fn export_review_sheet(topic_id: &str, set: &OpinionSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(&ReviewSheet::new(topic_id, set)).expect("sheet serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|source| GenError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a completed sheet; a malformed row is reported by its 1-based
/// position.
pub fn read_review_sheet(path: impl AsRef<Path>) -> Result<ReviewSheet> {
    #[derive(Deserialize)]
    struct Raw {
        topic_id: String,
        rows: Vec<serde_json::Value>,
    }
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| GenError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let raw: Raw = serde_json::from_str(&text).map_err(|e| GenError::Sheet {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let rows = raw
        .rows
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            serde_json::from_value(v).map_err(|e| GenError::Row {
                path: path.to_path_buf(),
                row: i + 1,
                message: e.to_string(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(ReviewSheet {
        topic_id: raw.topic_id,
        rows,
    })
}

pub fn import_review_sheet(path: impl AsRef<Path>) -> Result<Questionnaire> {
    Ok(read_review_sheet(path)?.to_questionnaire())
}
