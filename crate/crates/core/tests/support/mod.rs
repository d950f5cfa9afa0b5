//! Helpers shared by the integration tests: a template-aware scripted
//! model, synthetic benchmarks and the parser-corpus checker.
#![allow(dead_code)]

pub mod props;

use std::collections::BTreeMap;
use std::path::PathBuf;

use indexmap::IndexMap;
use serde_json::Value;

use coggpt::agent_core::PassRecord;
use coggpt::bench_model::{
    BenchmarkSet, InfoItem, NamedProfile, ProfileDoc, Question, Questionnaire, Variant, CANONICAL_KEYS,
};
use coggpt::llm_provider::{pseudo_embed, CompletionResult, LanguageModel, PromptRequest, ProviderKind};
use coggpt::prompt_kit::{
    parse_interpretation, parse_knowledge_list, parse_opinion_set, parse_profile_update, ScorePolicy, TemplateId,
};
use coggpt::EmbeddingVector;

/// The core crate's fixture directory, from either crate's tests.
pub fn fixtures() -> PathBuf {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let own = manifest.join("fixtures");
    if own.is_dir() {
        own
    } else {
        manifest.join("../core/fixtures")
    }
}

/// Answers every prompt from its template id alone, so it never runs out.
pub struct ScriptedModel {
    pub dim: usize,
    pub requests: Vec<PromptRequest>,
}

impl ScriptedModel {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            requests: Vec::new(),
        }
    }
}

pub fn profile_reply(hobbies: &str) -> String {
    let lines: Vec<String> = CANONICAL_KEYS
        .iter()
        .map(|k| format!("{k}: {}", if *k == "Hobbies" { hobbies } else { "x" }))
        .collect();
    format!("Assessments: a\nThoughts: t\nUpdated Profile:\n{}", lines.join("\n"))
}

impl LanguageModel for ScriptedModel {
    fn complete(&mut self, req: &PromptRequest) -> coggpt::llm_provider::Result<CompletionResult> {
        let n = self.requests.len();
        self.requests.push(req.clone());
        let text = match req.template_id.parse::<TemplateId>() {
            Ok(TemplateId::ProfileUpdate) => profile_reply(&format!("Reading {n}")),
            Ok(TemplateId::KnowledgeDistill) => format!(
                r#"[{{"thoughts":"a","knowledge":"fact {n} a","score":5}},{{"thoughts":"b","knowledge":"fact {n} b","score":2}},{{"thoughts":"c","knowledge":"fact {n} c","score":4}}]"#
            ),
            Ok(TemplateId::ReflexionReflect) => format!("Reflection: note {n}"),
            _ => format!("Thoughts: reply {n}\nRating: {}", n % 5 + 1),
        };
        Ok(CompletionResult {
            text,
            provider: ProviderKind::Replay,
        })
    }

    fn embed(&mut self, text: &str) -> coggpt::llm_provider::Result<EmbeddingVector> {
        Ok(pseudo_embed(text, self.dim, 0))
    }

    fn embedding_dim(&self) -> usize {
        self.dim
    }
}

pub fn full_profile() -> ProfileDoc {
    ProfileDoc::from_pairs(CANONICAL_KEYS.iter().map(|k| (*k, "x"))).0
}

/// One topic with `questions` questions and `items` flow items.
pub fn synthetic_bench(variant: Variant, items: usize, questions: usize) -> BenchmarkSet {
    let topic = "s1".to_string();
    let flow = (0..items)
        .map(|i| InfoItem {
            id: format!("{:03}", i + 1),
            topic_id: topic.clone(),
            category: "Life".into(),
            modality: variant.modality(),
            text: format!("item {i} says something about the topic"),
            word_count: None,
        })
        .collect();
    let questionnaire = Questionnaire {
        topic_id: topic.clone(),
        questions: (0..questions)
            .map(|j| Question {
                id: format!("q{}", j + 1),
                topic_id: topic.clone(),
                statement: format!("Statement number {}.", j + 1),
            })
            .collect(),
    };
    let mut flows = IndexMap::new();
    flows.insert(topic, flow);
    BenchmarkSet {
        name: "synthetic".into(),
        variant,
        questionnaires: vec![questionnaire],
        profiles: vec![NamedProfile {
            name: "p".into(),
            profile: full_profile(),
            missing_keys: Vec::new(),
        }],
        flows,
    }
}

pub fn calls_by_template(pass: &PassRecord) -> BTreeMap<TemplateId, usize> {
    let mut counts = BTreeMap::new();
    for call in &pass.calls {
        *counts.entry(call.template).or_insert(0) += 1;
    }
    counts
}

pub fn load_corpus() -> Vec<Value> {
    let text = std::fs::read_to_string(fixtures().join("parser_corpus.json")).expect("corpus file");
    serde_json::from_str(&text).expect("corpus json")
}

fn variant_name(debug: &str) -> &str {
    debug.split(['(', ' ', '{']).next().unwrap_or(debug)
}

fn check_error<E: std::fmt::Debug>(err: E, expect: &Value) -> Result<(), String> {
    let debug = format!("{err:?}");
    let want = expect["error"].as_str().unwrap_or_default();
    if variant_name(&debug) != want {
        return Err(format!("expected {want}, got {debug}"));
    }
    if let Some(index) = expect.get("index").and_then(Value::as_u64) {
        if !debug.contains(&format!("index: {index}")) {
            return Err(format!("expected index {index}, got {debug}"));
        }
    }
    Ok(())
}

fn unexpected_ok(what: impl std::fmt::Debug) -> Result<(), String> {
    Err(format!("expected an error, parsed {what:?}"))
}

/// Runs one corpus case; `Err` describes the first mismatch.
pub fn check_case(case: &Value) -> Result<(), String> {
    let reply = case["reply"].as_str().ok_or("reply is not a string")?;
    let expect = &case["expect"];
    let ok = expect.get("ok");
    match case["parser"].as_str().unwrap_or_default() {
        "interpret" => match (parse_interpretation(reply), ok) {
            (Ok(p), Some(want)) => {
                if want["rating"].as_u64() != Some(u64::from(p.rating)) {
                    return Err(format!("rating {} vs {}", p.rating, want["rating"]));
                }
                match want.get("thoughts").and_then(Value::as_str) {
                    Some(t) if t != p.thoughts => Err(format!("thoughts {:?} vs {t:?}", p.thoughts)),
                    _ => Ok(()),
                }
            }
            (Ok(p), None) => unexpected_ok(p),
            (Err(e), None) => check_error(e, expect),
            (Err(e), Some(_)) => Err(format!("unexpected error {e:?}")),
        },
        parser @ ("knowledge" | "knowledge_skip") => {
            let policy = if parser == "knowledge" { ScorePolicy::Fail } else { ScorePolicy::Skip };
            match (parse_knowledge_list(reply, policy), ok) {
                (Ok(drafts), Some(want)) => {
                    let scores: Vec<u64> = drafts.iter().map(|d| u64::from(d.score)).collect();
                    let expected: Vec<u64> = want["scores"]
                        .as_array()
                        .ok_or("scores missing")?
                        .iter()
                        .filter_map(Value::as_u64)
                        .collect();
                    if scores == expected {
                        Ok(())
                    } else {
                        Err(format!("scores {scores:?} vs {expected:?}"))
                    }
                }
                (Ok(d), None) => unexpected_ok(d),
                (Err(e), None) => check_error(e, expect),
                (Err(e), Some(_)) => Err(format!("unexpected error {e:?}")),
            }
        }
        "profile" => match (parse_profile_update(reply), ok) {
            (Ok(p), Some(want)) => {
                let filled = p.updated_profile.attributes().filter(|(_, v)| !v.is_empty()).count();
                if want["keys"].as_u64() != Some(filled as u64) {
                    return Err(format!("{filled} canonical keys filled, want {}", want["keys"]));
                }
                if want["extras"].as_u64() != Some(p.updated_profile.extras().len() as u64) {
                    return Err(format!("extras {:?}", p.updated_profile.extras()));
                }
                match want.get("Hobbies").and_then(Value::as_str) {
                    Some(h) if p.updated_profile.get("Hobbies") != Some(h) => {
                        Err(format!("Hobbies {:?}", p.updated_profile.get("Hobbies")))
                    }
                    _ => Ok(()),
                }
            }
            (Ok(p), None) => unexpected_ok(p),
            (Err(e), None) => check_error(e, expect),
            (Err(e), Some(_)) => Err(format!("unexpected error {e:?}")),
        },
        "opinions" => match (parse_opinion_set(reply), ok) {
            (Ok(set), Some(want)) => match want["count"].as_u64() {
                Some(n) if n == set.len() as u64 => Ok(()),
                _ => Err(format!("{} entries", set.len())),
            },
            (Ok(set), None) => unexpected_ok(set),
            (Err(e), None) => check_error(e, expect),
            (Err(e), Some(_)) => Err(format!("unexpected error {e:?}")),
        },
        other => Err(format!("unknown parser {other:?}")),
    }
}
