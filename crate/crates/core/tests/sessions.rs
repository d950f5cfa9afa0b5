//! Whole sessions: replayed mini-benchmark runs and call accounting on
//! synthetic benchmarks of both variants.

mod support;

use coggpt::agent_core::{run_session, AgentKind, AgentOptions, FeedbackBook, SessionOutcome, SessionSpec};
use coggpt::bench_model::{load_benchmark, BenchmarkSet, Variant};
use coggpt::llm_provider::{ReplayProvider, Transcript};
use coggpt::prompt_kit::{TemplateId, TemplateSet};

use support::{calls_by_template, synthetic_bench, ScriptedModel};

fn mini() -> BenchmarkSet {
    load_benchmark(support::fixtures().join("mini_bench")).unwrap()
}

fn replayed(kind: AgentKind) -> SessionOutcome<ReplayProvider> {
    let bench = mini();
    let templates = TemplateSet::builtin().unwrap();
    let feedback = FeedbackBook::load(support::fixtures().join("mini_bench"), "t1").unwrap();
    let path = support::fixtures().join("transcripts").join(kind.as_str()).join("t1.jsonl");
    let model = ReplayProvider::new(Transcript::load(path).unwrap(), 64, 0);
    let spec = SessionSpec {
        bench: &bench,
        topic_id: "t1",
        profile_name: "retired_teacher",
        kind,
        options: AgentOptions::default(),
        strict: true,
        templates: &templates,
        feedback: &feedback,
    };
    run_session(spec, model).unwrap()
}

fn scripted(bench: &BenchmarkSet, kind: AgentKind, strict: bool) -> coggpt::agent_core::Result<SessionOutcome<ScriptedModel>> {
    let templates = TemplateSet::builtin().unwrap();
    let feedback = FeedbackBook::default();
    let spec = SessionSpec {
        bench,
        topic_id: "s1",
        profile_name: "p",
        kind,
        options: AgentOptions::default(),
        strict,
        templates: &templates,
        feedback: &feedback,
    };
    run_session(spec, ScriptedModel::new(16))
}

#[test]
fn replayed_sessions_cover_every_pass_and_consume_the_transcript() {
    for kind in AgentKind::ALL {
        let out = replayed(kind);
        assert!(out.log.complete, "{kind}: {:?}", out.log.error);
        assert_eq!(out.log.passes.len(), 11, "{kind}");
        assert!(out.log.passes.iter().all(|p| p.answers.len() == 3));
        assert_eq!(out.model.transcript().remaining(), 0, "{kind} left transcript entries unused");
        let records = out.log.passes.iter().filter(|p| p.record.is_some()).count();
        assert_eq!(records, if kind == AgentKind::Coggpt { 10 } else { 0 }, "{kind}");
    }
}

#[test]
fn replay_is_byte_identical_across_runs() {
    for kind in AgentKind::ALL {
        assert_eq!(replayed(kind).log.to_json(), replayed(kind).log.to_json(), "{kind}");
    }
}

#[test]
fn baselines_keep_their_profile_and_never_recall() {
    for kind in AgentKind::ALL.into_iter().filter(|k| k.is_baseline()) {
        let out = replayed(kind);
        let bench = mini();
        let initial = &bench.profile("retired_teacher").unwrap().profile;
        for pass in &out.log.passes {
            assert_eq!(&pass.profile_after, initial, "{kind} t{}", pass.iteration);
            assert!(pass.answers.iter().all(|a| a.recall_trace.is_empty()));
        }
        assert!(out.state.ltm.is_empty());
    }
}

#[test]
fn coggpt_memory_accounts_for_every_retained_statement() {
    let out = replayed(AgentKind::Coggpt);
    let mut stored = 0;
    for pass in out.log.passes.iter().skip(1) {
        let rec = pass.record.as_ref().unwrap();
        let n = rec.retained_count + rec.dropped_count;
        assert_eq!(rec.dropped_count, n * 2 / 5);
        stored += rec.retained_count;
        assert_eq!(rec.ltm_size, stored);
        for answer in &pass.answers {
            assert_eq!(answer.recall_trace.len(), stored.min(AgentOptions::default().recall_k));
        }
    }
    assert_eq!(out.state.ltm.len(), stored);
    assert!(out.state.stm.is_empty());
    // Pass 0 has nothing to recall.
    assert!(out.log.passes[0].calls.iter().all(|c| c.prompt.contains("None")));
}

#[test]
fn article_variant_schedules_one_item_per_iteration() {
    let bench = synthetic_bench(Variant::Articles, 10, 3);
    let out = scripted(&bench, AgentKind::Coggpt, true).unwrap();
    let sizes: Vec<usize> = out.log.passes.iter().skip(1).map(|p| p.batch.len()).collect();
    assert_eq!(sizes, vec![1; 10]);
}

#[test]
fn video_variant_schedules_ten_items_per_iteration() {
    let bench = synthetic_bench(Variant::Videos, 100, 4);
    let out = scripted(&bench, AgentKind::Coggpt, true).unwrap();
    assert!(out.log.complete);
    let sizes: Vec<usize> = out.log.passes.iter().skip(1).map(|p| p.batch.len()).collect();
    assert_eq!(sizes, vec![10; 10]);
    let flat: Vec<String> = out.log.passes.iter().flat_map(|p| p.batch.clone()).collect();
    let expected: Vec<String> = (1..=100).map(|i| format!("{i:03}")).collect();
    assert_eq!(flat, expected);
}

#[test]
fn strict_mode_rejects_a_short_video_flow() {
    let bench = synthetic_bench(Variant::Videos, 95, 2);
    assert!(scripted(&bench, AgentKind::Coggpt, true).is_err());
    let lenient = scripted(&bench, AgentKind::Coggpt, false).unwrap();
    assert_eq!(lenient.log.passes.last().unwrap().batch.len(), 5);
}

#[test]
fn calls_per_pass_follow_the_agent_design() {
    let m = 4;
    let bench = synthetic_bench(Variant::Videos, 100, m);
    for kind in AgentKind::ALL {
        let out = scripted(&bench, kind, true).unwrap();
        for pass in &out.log.passes {
            let counts = calls_by_template(pass);
            let count = |id| counts.get(&id).copied().unwrap_or(0);
            let total: usize = counts.values().sum();
            match kind {
                AgentKind::Coggpt => {
                    let refine = usize::from(pass.iteration > 0);
                    assert_eq!(count(TemplateId::ProfileUpdate), refine);
                    assert_eq!(count(TemplateId::KnowledgeDistill), refine);
                    assert_eq!(count(TemplateId::Interpret), m);
                    assert_eq!(total, m + 2 * refine);
                }
                AgentKind::Cot => assert_eq!((count(TemplateId::CotAnswer), total), (m, m)),
                AgentKind::React => assert_eq!((count(TemplateId::ReactAnswer), total), (m, m)),
                AgentKind::Reflexion => {
                    assert_eq!(count(TemplateId::ReflexionReflect), m);
                    assert_eq!(count(TemplateId::ReflexionAnswer), m);
                    assert_eq!(total, 2 * m);
                }
            }
        }
        assert_eq!(
            out.model.requests.len(),
            out.log.passes.iter().map(|p| p.calls.len()).sum::<usize>(),
            "{kind}: every completion is logged"
        );
    }
}

#[test]
fn interpret_prompts_show_recalled_memory_as_bullets() {
    let bench = synthetic_bench(Variant::Articles, 10, 1);
    let out = scripted(&bench, AgentKind::Coggpt, true).unwrap();
    let pass = &out.log.passes[2];
    let interpret = pass.calls.iter().find(|c| c.template == TemplateId::Interpret).unwrap();
    for statement in &pass.answers[0].recall_trace {
        assert!(interpret.prompt.contains(&format!("- {statement}")));
    }
    assert_eq!(pass.answers[0].recall_trace.len(), 4);
}
