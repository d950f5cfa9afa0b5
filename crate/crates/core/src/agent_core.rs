//! The iterative agent loop and the three baseline agents.
//!
//! A session answers the questionnaire once before any information arrives
//! (pass 0), then once per scheduled batch. The cognitive agent refines its
//! profile and distills knowledge into long-term memory before each answer
//! pass; baselines answer from the initial profile and the current batch.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bench_model::{plan_iterations, BenchError, BenchmarkSet, InfoItem, ProfileDoc, Question, Variant};
use crate::llm_provider::{LanguageModel, PromptRequest, ProviderError};
use crate::memory::{commit_knowledge, MemoryError, ShortTermMemory, DEFAULT_RECALL_K};
use crate::prompt_kit::{
    parse_interpretation, parse_knowledge_list, parse_profile_update, parse_reflection, sha256_hex, KnowledgeDraft,
    ParseError, ScorePolicy, TemplateError, TemplateId, TemplateSet,
};
use crate::LtmStore;

/// Binding used wherever a prompt section has no content yet.
pub const NONE_BLOCK: &str = "None";

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error("{template} reply for {tag} unparseable after {attempts} attempts: {error}")]
    Parse {
        template: TemplateId,
        tag: String,
        attempts: usize,
        error: ParseError,
    },
    #[error("{kind} agents cannot {action}")]
    WrongKind { kind: AgentKind, action: &'static str },
    #[error("unknown {what} {name:?}")]
    Unknown { what: &'static str, name: String },
    #[error("feedback file {}: {message}", .path.display())]
    Feedback { path: PathBuf, message: String },
}

pub type Result<T, E = AgentError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Coggpt,
    Cot,
    React,
    Reflexion,
}

impl AgentKind {
    pub const ALL: [AgentKind; 4] = [AgentKind::Coggpt, AgentKind::Cot, AgentKind::React, AgentKind::Reflexion];

    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Coggpt => "coggpt",
            AgentKind::Cot => "cot",
            AgentKind::React => "react",
            AgentKind::Reflexion => "reflexion",
        }
    }

    pub fn is_baseline(self) -> bool {
        self != AgentKind::Coggpt
    }

    fn uses_feedback(self) -> bool {
        matches!(self, AgentKind::React | AgentKind::Reflexion)
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AgentKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        AgentKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown agent kind {s:?} (expected coggpt, cot, react or reflexion)"))
    }
}

/// One free-text feedback record; without `question_id` it applies to the
/// whole iteration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackRecord {
    pub iteration: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question_id: Option<String>,
    pub text: String,
}

/// Feedback on past performance, as consumed by ReAct and Reflexion.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeedbackBook {
    records: Vec<FeedbackRecord>,
}

impl FeedbackBook {
    pub fn new(records: Vec<FeedbackRecord>) -> Self {
        Self { records }
    }

    /// Reads `feedback/<topic>.json` under the benchmark root; a missing
    /// file is an empty book.
    pub fn load(bench_root: impl AsRef<Path>, topic_id: &str) -> Result<Self> {
        let path = bench_root.as_ref().join("feedback").join(format!("{topic_id}.json"));
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Self::default()),
            Err(e) => {
                return Err(AgentError::Feedback {
                    path,
                    message: e.to_string(),
                })
            }
        };
        let records = serde_json::from_str(&text).map_err(|e| AgentError::Feedback {
            path,
            message: e.to_string(),
        })?;
        Ok(Self { records })
    }

    pub fn records(&self) -> &[FeedbackRecord] {
        &self.records
    }

    /// The question-specific entry for `iteration` if present, else the
    /// iteration-level one.
    pub fn lookup(&self, iteration: usize, question_id: &str) -> Option<&str> {
        let at = |q: Option<&str>| {
            self.records
                .iter()
                .find(|r| r.iteration == iteration && r.question_id.as_deref() == q)
                .map(|r| r.text.as_str())
        };
        at(Some(question_id)).or_else(|| at(None))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionAnswer {
    pub question_id: String,
    pub rating: u8,
    pub reasoning: String,
    /// Recalled statements in rank order; always empty for baselines.
    pub recall_trace: Vec<String>,
}

impl QuestionAnswer {
    /// The answer as a reply would phrase it; the `{previous}` binding.
    fn as_reply(&self) -> String {
        format!("Thoughts: {}\nRating: {}", self.reasoning, self.rating)
    }
}

/// Outcome of parsing one completion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "snake_case")]
pub enum ParseOutcome {
    Ok,
    Error(String),
}

/// One completion: what was sent, what came back, whether it parsed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub template: TemplateId,
    pub tag: String,
    pub attempt: usize,
    pub prompt_digest: String,
    pub prompt: String,
    pub reply: String,
    pub parse: ParseOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoredStatement {
    pub knowledge: String,
    pub score: u8,
}

impl From<&KnowledgeDraft> for ScoredStatement {
    fn from(d: &KnowledgeDraft) -> Self {
        Self {
            knowledge: d.knowledge.clone(),
            score: d.score,
        }
    }
}

/// The pre-answer half of a cognitive iteration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub assessments: String,
    pub thoughts: String,
    pub retained_count: usize,
    pub dropped_count: usize,
    pub retained: Vec<ScoredStatement>,
    pub dropped: Vec<ScoredStatement>,
    pub ltm_size: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub kind: AgentKind,
    pub profile: ProfileDoc,
    pub initial_profile: ProfileDoc,
    pub stm: ShortTermMemory,
    pub ltm: LtmStore,
    /// Number of completed iterations.
    pub iteration: usize,
    /// Latest answer per question id, for reflection.
    pub last_answers: HashMap<String, QuestionAnswer>,
}

impl AgentState {
    pub fn new(kind: AgentKind, profile: ProfileDoc, embedding_dim: usize) -> Self {
        Self {
            kind,
            initial_profile: profile.clone(),
            profile,
            stm: ShortTermMemory::new(),
            ltm: LtmStore::new(embedding_dim),
            iteration: 0,
            last_answers: HashMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgentOptions {
    pub recall_k: usize,
    pub score_policy: ScorePolicy,
}

impl Default for AgentOptions {
    fn default() -> Self {
        Self {
            recall_k: DEFAULT_RECALL_K,
            score_policy: ScorePolicy::Fail,
        }
    }
}

/// An agent bound to its templates and model. Every completion is logged.
pub struct Agent<'t, M> {
    pub state: AgentState,
    templates: &'t TemplateSet,
    model: M,
    options: AgentOptions,
    calls: Vec<CallRecord>,
}

impl<'t, M: LanguageModel> Agent<'t, M> {
    pub fn new(kind: AgentKind, profile: ProfileDoc, templates: &'t TemplateSet, model: M, options: AgentOptions) -> Self {
        let dim = model.embedding_dim();
        Self {
            state: AgentState::new(kind, profile, dim),
            templates,
            model,
            options,
            calls: Vec::new(),
        }
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn into_parts(self) -> (AgentState, M) {
        (self.state, self.model)
    }

    /// Drains the call log accumulated since the last call.
    pub fn take_calls(&mut self) -> Vec<CallRecord> {
        std::mem::take(&mut self.calls)
    }

    /// Renders, completes and parses, retrying a parse failure once with
    /// the identical prompt.
    fn complete_parsed<T>(
        &mut self,
        template: TemplateId,
        tag: &str,
        bindings: &[(&str, &str)],
        parse: impl Fn(&str) -> std::result::Result<T, ParseError>,
    ) -> Result<T> {
        const ATTEMPTS: usize = 2;
        let prompt = self.templates.render(template, bindings)?;
        let digest = sha256_hex(prompt.as_bytes());
        let request = PromptRequest::new(template.as_str(), prompt.clone()).with_tag(tag);
        let mut last = None;
        for attempt in 1..=ATTEMPTS {
            let reply = self.model.complete(&request)?.text;
            let parsed = parse(&reply);
            self.calls.push(CallRecord {
                template,
                tag: tag.to_string(),
                attempt,
                prompt_digest: digest.clone(),
                prompt: prompt.clone(),
                reply,
                parse: match &parsed {
                    Ok(_) => ParseOutcome::Ok,
                    Err(e) => ParseOutcome::Error(e.to_string()),
                },
            });
            match parsed {
                Ok(value) => return Ok(value),
                Err(e) => {
                    log::warn!("{template} reply for {tag} failed to parse (attempt {attempt}): {e}");
                    last = Some(e);
                }
            }
        }
        Err(AgentError::Parse {
            template,
            tag: tag.to_string(),
            attempts: ATTEMPTS,
            error: last.expect("at least one attempt"),
        })
    }

    /// Perceive, refine the profile, distill and forget, store, clear.
    pub fn run_iteration(&mut self, batch: &[InfoItem]) -> Result<IterationRecord> {
        if self.state.kind != AgentKind::Coggpt {
            return Err(AgentError::WrongKind {
                kind: self.state.kind,
                action: "run a cognitive iteration",
            });
        }
        let t = self.state.iteration + 1;
        self.state.stm.ingest(batch, t)?;
        let result = self.refine_and_distill(t);
        self.state.stm.clear();
        let record = result?;
        self.state.iteration = t;
        Ok(record)
    }

    fn refine_and_distill(&mut self, t: usize) -> Result<IterationRecord> {
        let memory = self.state.stm.text();
        let memory = if memory.is_empty() { NONE_BLOCK.to_string() } else { memory };

        let profile_text = self.state.profile.render();
        let update = self.complete_parsed(
            TemplateId::ProfileUpdate,
            &format!("t{t}/profile_update"),
            &[("profile", &profile_text), ("memory", &memory)],
            parse_profile_update,
        )?;
        let mut warnings = update.warnings.clone();
        let mut next = update.updated_profile;
        for key in &update.missing_keys {
            let previous = self.state.profile.get(key).unwrap_or_default();
            warnings.push(format!("profile update omitted {key:?}; previous value kept"));
            next.set(key, previous);
        }
        self.state.profile = next;

        let profile_text = self.state.profile.render();
        let policy = self.options.score_policy;
        let drafts = self.complete_parsed(
            TemplateId::KnowledgeDistill,
            &format!("t{t}/knowledge_distill"),
            &[("profile", &profile_text), ("memory", &memory)],
            |reply| parse_knowledge_list(reply, policy),
        )?;

        let commit = commit_knowledge(drafts);
        let source_ids = self.state.stm.source_ids();
        let model = &mut self.model;
        self.state
            .ltm
            .store(&commit.retained, t, &source_ids, |text| model.embed(text))?;

        Ok(IterationRecord {
            iteration: t,
            assessments: update.assessments,
            thoughts: update.thoughts,
            retained_count: commit.retained.len(),
            dropped_count: commit.dropped.len(),
            retained: commit.retained.iter().map(Into::into).collect(),
            dropped: commit.dropped.iter().map(Into::into).collect(),
            ltm_size: self.state.ltm.len(),
            warnings,
        })
    }

    /// Recall-augmented questionnaire answer from the current profile.
    pub fn answer_question(&mut self, question: &Question) -> Result<QuestionAnswer> {
        if self.state.kind != AgentKind::Coggpt {
            return Err(AgentError::WrongKind {
                kind: self.state.kind,
                action: "answer from long-term memory",
            });
        }
        let model = &mut self.model;
        let recalled = self
            .state
            .ltm
            .recall_text(&question.statement, self.options.recall_k, |text| model.embed(text))?
            .statements();
        let memory = if recalled.is_empty() {
            NONE_BLOCK.to_string()
        } else {
            recalled.iter().map(|s| format!("- {s}")).collect::<Vec<_>>().join("\n")
        };
        let profile_text = self.state.profile.render();
        let tag = format!("t{}/{}/interpret", self.state.iteration, question.id);
        let parsed = self.complete_parsed(
            TemplateId::Interpret,
            &tag,
            &[("profile", &profile_text), ("memory", &memory), ("question", &question.statement)],
            parse_interpretation,
        )?;
        Ok(self.remember(QuestionAnswer {
            question_id: question.id.clone(),
            rating: parsed.rating,
            reasoning: parsed.thoughts,
            recall_trace: recalled,
        }))
    }

    /// Baseline answer from the initial profile and the current batch.
    /// `feedback` is only rendered for ReAct and Reflexion.
    pub fn baseline_answer(
        &mut self,
        question: &Question,
        batch: &[InfoItem],
        feedback: Option<&str>,
    ) -> Result<QuestionAnswer> {
        let kind = self.state.kind;
        if !kind.is_baseline() {
            return Err(AgentError::WrongKind {
                kind,
                action: "answer as a baseline",
            });
        }
        let t = self.state.iteration;
        let profile_text = self.state.initial_profile.render();
        let information = batch
            .iter()
            .map(|i| i.text.trim())
            .filter(|s| !s.is_empty())
            .collect::<Vec<_>>()
            .join("\n\n");
        let information = if information.is_empty() { NONE_BLOCK } else { &information };
        let feedback = feedback.filter(|_| kind.uses_feedback()).unwrap_or(NONE_BLOCK);
        let question_text = question.statement.as_str();
        let base_tag = format!("t{t}/{}", question.id);

        let parsed = match kind {
            AgentKind::Cot => self.complete_parsed(
                TemplateId::CotAnswer,
                &format!("{base_tag}/cot"),
                &[("profile", &profile_text), ("information", information), ("question", question_text)],
                parse_interpretation,
            )?,
            AgentKind::React => self.complete_parsed(
                TemplateId::ReactAnswer,
                &format!("{base_tag}/react"),
                &[
                    ("profile", &profile_text),
                    ("information", information),
                    ("question", question_text),
                    ("feedback", feedback),
                ],
                parse_interpretation,
            )?,
            AgentKind::Reflexion => {
                let previous = self
                    .state
                    .last_answers
                    .get(&question.id)
                    .map(QuestionAnswer::as_reply)
                    .unwrap_or_else(|| NONE_BLOCK.to_string());
                let reflection = self.complete_parsed(
                    TemplateId::ReflexionReflect,
                    &format!("{base_tag}/reflect"),
                    &[
                        ("profile", &profile_text),
                        ("question", question_text),
                        ("previous", &previous),
                        ("feedback", feedback),
                    ],
                    |reply| Ok(parse_reflection(reply)),
                )?;
                let reflection = if reflection.is_empty() { NONE_BLOCK.to_string() } else { reflection };
                self.complete_parsed(
                    TemplateId::ReflexionAnswer,
                    &format!("{base_tag}/reflexion"),
                    &[
                        ("reflection", &reflection),
                        ("profile", &profile_text),
                        ("information", information),
                        ("question", question_text),
                    ],
                    parse_interpretation,
                )?
            }
            AgentKind::Coggpt => unreachable!("checked above"),
        };
        Ok(self.remember(QuestionAnswer {
            question_id: question.id.clone(),
            rating: parsed.rating,
            reasoning: parsed.thoughts,
            recall_trace: Vec::new(),
        }))
    }

    fn remember(&mut self, answer: QuestionAnswer) -> QuestionAnswer {
        self.state.last_answers.insert(answer.question_id.clone(), answer.clone());
        answer
    }

    /// Marks a baseline pass as done without running a cognitive iteration.
    fn advance_baseline(&mut self) {
        self.state.iteration += 1;
    }
}

/// What a session was asked to do, echoed into its log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub bench: String,
    pub variant: Variant,
    pub topic_id: String,
    pub profile_name: String,
    pub agent: AgentKind,
    pub recall_k: usize,
    pub strict: bool,
}

/// One answer pass. Pass 0 has an empty batch and no iteration record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassRecord {
    pub iteration: usize,
    pub batch: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<IterationRecord>,
    pub profile_after: ProfileDoc,
    pub answers: Vec<QuestionAnswer>,
    pub calls: Vec<CallRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionLog {
    pub config: SessionConfig,
    pub complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub passes: Vec<PassRecord>,
}

impl SessionLog {
    /// Answers of pass `t`, if it completed.
    pub fn answers_at(&self, t: usize) -> Option<&[QuestionAnswer]> {
        self.passes.iter().find(|p| p.iteration == t).map(|p| p.answers.as_slice())
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("session log serializes");
        text.push('\n');
        text
    }
}

/// Everything a session needs besides the model.
#[derive(Debug, Clone, Copy)]
pub struct SessionSpec<'a> {
    pub bench: &'a BenchmarkSet,
    pub topic_id: &'a str,
    pub profile_name: &'a str,
    pub kind: AgentKind,
    pub options: AgentOptions,
    pub strict: bool,
    pub templates: &'a TemplateSet,
    pub feedback: &'a FeedbackBook,
}

#[derive(Debug)]
pub struct SessionOutcome<M> {
    pub log: SessionLog,
    pub state: AgentState,
    pub model: M,
}

/// Runs pass 0 and every scheduled iteration. Setup problems (unknown
/// topic or profile, unschedulable flow) are errors; a failure mid-session
/// yields a log flagged incomplete that holds every finished pass.
pub fn run_session<M: LanguageModel>(spec: SessionSpec<'_>, model: M) -> Result<SessionOutcome<M>> {
    let bench = spec.bench;
    let questionnaire = bench.questionnaire(spec.topic_id).ok_or_else(|| AgentError::Unknown {
        what: "topic",
        name: spec.topic_id.to_string(),
    })?;
    let profile = bench.profile(spec.profile_name).ok_or_else(|| AgentError::Unknown {
        what: "profile",
        name: spec.profile_name.to_string(),
    })?;
    let plan = plan_iterations(bench, spec.topic_id, spec.strict)?;
    let batches: Vec<Vec<InfoItem>> = plan
        .batches
        .iter()
        .map(|ids| {
            ids.iter()
                .map(|id| bench.flow_item(spec.topic_id, id).cloned().expect("planned ids exist"))
                .collect()
        })
        .collect();

    let mut agent = Agent::new(spec.kind, profile.profile.clone(), spec.templates, model, spec.options);
    let mut log = SessionLog {
        config: SessionConfig {
            bench: bench.name.clone(),
            variant: bench.variant,
            topic_id: spec.topic_id.to_string(),
            profile_name: spec.profile_name.to_string(),
            agent: spec.kind,
            recall_k: spec.options.recall_k,
            strict: spec.strict,
        },
        complete: false,
        error: None,
        passes: Vec::with_capacity(batches.len() + 1),
    };

    let empty: Vec<InfoItem> = Vec::new();
    for t in 0..=batches.len() {
        let batch = if t == 0 { &empty } else { &batches[t - 1] };
        match run_pass(&mut agent, t, batch, &questionnaire.questions, spec.feedback) {
            Ok(pass) => log.passes.push(pass),
            Err(e) => {
                log::error!("session {}/{} ({}) aborted at pass {t}: {e}", spec.topic_id, spec.profile_name, spec.kind);
                log.error = Some(format!("pass {t}: {e}"));
                let (state, model) = agent.into_parts();
                return Ok(SessionOutcome { log, state, model });
            }
        }
    }
    log.complete = true;
    let (state, model) = agent.into_parts();
    Ok(SessionOutcome { log, state, model })
}

fn run_pass<M: LanguageModel>(
    agent: &mut Agent<'_, M>,
    t: usize,
    batch: &[InfoItem],
    questions: &[Question],
    feedback: &FeedbackBook,
) -> Result<PassRecord> {
    let kind = agent.state.kind;
    let record = if t > 0 && kind == AgentKind::Coggpt {
        Some(agent.run_iteration(batch)?)
    } else {
        if t > 0 {
            agent.advance_baseline();
        }
        None
    };
    let mut answers = Vec::with_capacity(questions.len());
    for q in questions {
        let answer = if kind == AgentKind::Coggpt {
            agent.answer_question(q)?
        } else {
            let fb = t.checked_sub(1).and_then(|prev| feedback.lookup(prev, &q.id));
            agent.baseline_answer(q, batch, fb)?
        };
        answers.push(answer);
    }
    Ok(PassRecord {
        iteration: t,
        batch: batch.iter().map(|i| i.id.clone()).collect(),
        record,
        profile_after: agent.state.profile.clone(),
        answers,
        calls: agent.take_calls(),
    })
}
