//! Acceptance report: one `[PASS]` or `[FAIL]` line per criterion, with
//! timings where a criterion carries a time budget. Exits non-zero if any
//! criterion fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use coggpt::agent_core::{run_session, AgentKind, AgentOptions, FeedbackBook, SessionLog, SessionSpec};
use coggpt::bench_model::{load_benchmark, plan_iterations, Variant};
use coggpt::eval_metrics::report::{build_report, HumanRatingRecord, ReportOptions, REFERENCE_NOTE};
use coggpt::eval_metrics::{cohen_kappa, fleiss_kappa, majority_rating, polarities, spearman_rho};
use coggpt::prompt_kit::{TemplateError, TemplateId, TemplateSet};
use coggpt::ExactRatio;
use coggpt_cli::run_cli;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, budget: Duration) -> Result<(), String> {
    ensure(elapsed < budget, format!("took {elapsed:.2?}, budget {budget:?}"))
}

fn cli(args: &[&str]) -> i32 {
    run_cli(std::iter::once("coggpt").chain(args.iter().copied()))
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn run_and_eval(agents: &[&str], out: &Path) -> Result<(), String> {
    let f = support::fixtures();
    for agent in agents {
        let code = cli(&[
            "run",
            "--bench",
            s(&f.join("mini_bench")),
            "--agent",
            agent,
            "--transcript",
            s(&f.join("transcripts").join(agent)),
            "--topic",
            "t1",
            "--strict",
            "--out",
            s(out),
        ]);
        ensure(code == 0, format!("run {agent} exited {code}"))?;
    }
    let code = cli(&[
        "eval",
        "--sessions",
        s(out),
        "--humans",
        s(&f.join("panels/human_ratings.json")),
        "--rationality",
        s(&f.join("panels/rationality.json")),
        "--out",
        s(out),
    ]);
    ensure(code == 0, format!("eval exited {code}"))
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn metric_oracles() -> Check {
    let start = Instant::now();
    let k: ExactRatio = cohen_kappa(&[5u8, 5, 3, 1], &[5u8, 3, 3, 1]).map_err(|e| e.to_string())?;
    ensure(k == ExactRatio::new(7, 11), format!("kappa {k}, want 7/11"))?;
    let k: ExactRatio = cohen_kappa(&[5u8; 4], &[1u8; 4]).map_err(|e| e.to_string())?;
    ensure(k == ExactRatio::new(0, 1), format!("kappa {k}, want 0"))?;
    let f: ExactRatio = fleiss_kappa(&[vec![3, 0], vec![2, 1]]).map_err(|e| e.to_string())?;
    ensure(f == ExactRatio::new(-1, 5), format!("fleiss {f}, want -1/5"))?;
    let kf: f64 = cohen_kappa(&[5u8, 5, 3, 1], &[5u8, 3, 3, 1]).map_err(|e| e.to_string())?;
    ensure((kf - 7.0 / 11.0).abs() < 1e-9, format!("f64 kappa {kf}"))?;
    let rho = spearman_rho::<f64>(&[1.0, 2.0, 2.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).map_err(|e| e.to_string())?;
    ensure((rho - 0.948_683_298_050_513_8).abs() < 1e-9, format!("spearman {rho}"))?;
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("kappa 7/11 and 0, fleiss -1/5, rho {rho:.10} in {elapsed:.2?}"))
}

fn properties() -> Check {
    let start = Instant::now();
    let mut failed = Vec::new();
    for (name, check) in support::props::all() {
        if let Err(e) = check() {
            failed.push(format!("{name}: {e}"));
        }
    }
    let elapsed = start.elapsed();
    ensure(failed.is_empty(), failed.join("; "))?;
    within(elapsed, Duration::from_secs(30))?;
    Ok(format!(
        "{} properties x {} cases in {elapsed:.2?}",
        support::props::all().len(),
        support::props::CASES
    ))
}

fn determinism() -> Check {
    let start = Instant::now();
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_and_eval(&["coggpt"], a.path())?;
    run_and_eval(&["coggpt"], b.path())?;
    let session = "coggpt/t1__retired_teacher/session.json";
    for (file, golden_name) in [(session, "session.json"), ("report.json", "report.json")] {
        let first = read(&a.path().join(file))?;
        let second = read(&b.path().join(file))?;
        ensure(first == second, format!("{file} differs between runs"))?;
        ensure(first == read(&golden(golden_name))?, format!("{file} differs from its golden"))?;
    }
    let log: SessionLog = serde_json::from_str(&read(&a.path().join(session))?).map_err(|e| e.to_string())?;
    ensure(log.passes.len() == 11, format!("{} passes", log.passes.len()))?;
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(10))?;
    Ok(format!("11-pass session and report byte-identical twice and to goldens in {elapsed:.2?}"))
}

fn schedule_fidelity() -> Check {
    let mini = load_benchmark(support::fixtures().join("mini_bench")).map_err(|e| e.to_string())?;
    let plan = plan_iterations(&mini, "t1", true).map_err(|e| e.to_string())?;
    ensure(plan.batches.iter().map(Vec::len).eq([1; 10]), "variant a is not 10x1")?;
    let videos = support::synthetic_bench(Variant::Videos, 100, 3);
    let plan = plan_iterations(&videos, "s1", true).map_err(|e| e.to_string())?;
    ensure(plan.batches.iter().map(Vec::len).eq([10; 10]), "variant v is not 10x10")?;
    ensure(
        plan_iterations(&support::synthetic_bench(Variant::Videos, 95, 3), "s1", true).is_err(),
        "strict mode accepted 95 videos",
    )?;

    let m = 3;
    let templates = TemplateSet::builtin().map_err(|e| e.to_string())?;
    let feedback = FeedbackBook::default();
    for kind in [AgentKind::Coggpt, AgentKind::Reflexion] {
        let spec = SessionSpec {
            bench: &videos,
            topic_id: "s1",
            profile_name: "p",
            kind,
            options: AgentOptions::default(),
            strict: true,
            templates: &templates,
            feedback: &feedback,
        };
        let out = run_session(spec, support::ScriptedModel::new(16)).map_err(|e| e.to_string())?;
        ensure(out.log.complete, format!("{kind} session incomplete"))?;
        for pass in &out.log.passes {
            let counts = support::calls_by_template(pass);
            let count = |id| counts.get(&id).copied().unwrap_or(0);
            let t = pass.iteration;
            match kind {
                AgentKind::Coggpt => {
                    let refine = usize::from(t > 0);
                    ensure(count(TemplateId::ProfileUpdate) == refine, format!("t{t}: profile updates"))?;
                    ensure(count(TemplateId::KnowledgeDistill) == refine, format!("t{t}: distillations"))?;
                    ensure(count(TemplateId::Interpret) == m, format!("t{t}: interpretations"))?;
                }
                _ => {
                    let answers = count(TemplateId::ReflexionReflect) + count(TemplateId::ReflexionAnswer);
                    ensure(answers == 2 * m, format!("t{t}: reflexion made {answers} calls"))?;
                }
            }
        }
    }
    Ok(format!("a: 10x1, v: 10x10 strict; 1+1 refinement calls per iteration, m={m} and 2m per pass"))
}

fn perfect_panel() -> Check {
    let log: SessionLog = serde_json::from_str(&read(&golden("session.json"))?).map_err(|e| e.to_string())?;
    let mut human = Vec::new();
    for pass in &log.passes {
        for answer in &pass.answers {
            for a in 1..=7 {
                human.push(HumanRatingRecord {
                    annotator_id: format!("a{a}"),
                    topic_id: log.config.topic_id.clone(),
                    iteration: pass.iteration,
                    question_id: answer.question_id.clone(),
                    rating: answer.rating,
                    profile: None,
                });
            }
        }
    }
    let report =
        build_report::<f64>(std::slice::from_ref(&log), &human, &[], ReportOptions::default()).map_err(|e| e.to_string())?;
    let row = report.rows.first().ok_or("no report row")?;
    for it in &row.iterations {
        ensure(it.authenticity == Some(1.0), format!("t{} authenticity {:?}", it.iteration, it.authenticity))?;
    }
    let agreement = report.human_agreement.as_ref().ok_or("no agreement block")?;
    ensure(agreement.fleiss == Some(1.0), format!("fleiss {:?}", agreement.fleiss))?;
    ensure(
        agreement.fleiss_polarity == Some(1.0),
        format!("polarity fleiss {:?}", agreement.fleiss_polarity),
    )?;
    for pass in &log.passes {
        let agent: Vec<u8> = pass.answers.iter().map(|a| a.rating).collect();
        let panel: Vec<u8> = agent
            .iter()
            .map(|&r| majority_rating(&[r; 7]))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let pa = polarities(&agent).map_err(|e| e.to_string())?;
        let pp = polarities(&panel).map_err(|e| e.to_string())?;
        let k: f64 = cohen_kappa(&pa, &pp).map_err(|e| e.to_string())?;
        ensure(k == 1.0, format!("t{} polarity kappa {k}", pass.iteration))?;
    }
    Ok(format!("authenticity 1.0 at all {} passes, fleiss 1.0, polarity kappa 1.0", row.iterations.len()))
}

fn report_shape() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_and_eval(&["coggpt", "cot"], dir.path())?;
    let report: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("report.json"))?).map_err(|e| e.to_string())?;
    let rows = report["rows"].as_array().ok_or("rows missing")?;
    ensure(rows.len() == 2, format!("{} rows", rows.len()))?;
    for row in rows {
        for metric in ["authenticity", "rationality"] {
            for col in ["avg", "fifth", "tenth"] {
                ensure(row[metric][col].is_number(), format!("{} {metric}.{col} missing", row["agent"]))?;
            }
        }
    }
    ensure(report["reference"]["note"] == REFERENCE_NOTE, "reference note missing")?;
    let reference = report["reference"].to_string();
    for value in ["0.536", "4.118", "0.693", "0.78"] {
        ensure(reference.contains(value), format!("published {value} missing from the header"))?;
    }

    let log: SessionLog =
        serde_json::from_str(&read(&golden("session.json"))?).map_err(|e| e.to_string())?;
    let human: Vec<HumanRatingRecord> =
        serde_json::from_str(&read(&support::fixtures().join("panels/human_ratings.json"))?).map_err(|e| e.to_string())?;
    let tables = build_report::<f64>(&[log], &human, &[], ReportOptions::default())
        .map_err(|e| e.to_string())?
        .render_tables();
    let header = "a avg   a 5th  a 10th   v avg   v 5th  v 10th";
    ensure(tables.matches(header).count() == 2, "table header columns")?;
    ensure(tables.starts_with("Reference (not reproducible)"), "reference banner")?;
    for line in ["coggpt (pub.)        0.536   0.415   0.597", "coggpt (pub.)        4.118"] {
        ensure(tables.contains(line), format!("missing {line:?}"))?;
    }
    Ok("two rows with avg/5th/10th per variant; published values flagged as references".into())
}

fn parser_corpus() -> Check {
    let corpus = support::load_corpus();
    ensure(corpus.len() == 20, format!("{} cases", corpus.len()))?;
    let failures: Vec<String> = corpus
        .iter()
        .filter_map(|case| support::check_case(case).err().map(|e| format!("{}: {e}", case["name"])))
        .collect();
    ensure(failures.is_empty(), failures.join("; "))?;
    Ok("20/20 replies parse or fail as expected".into())
}

fn template_integrity() -> Check {
    let source = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/templates");
    TemplateSet::builtin().map_err(|e| e.to_string())?;
    TemplateSet::load_dir(&source).map_err(|e| e.to_string())?;
    for id in TemplateId::FIXED {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        for other in TemplateId::ALL {
            fs::copy(source.join(other.file_name()), dir.path().join(other.file_name())).map_err(|e| e.to_string())?;
        }
        let path = dir.path().join(id.file_name());
        let mut bytes = fs::read(&path).map_err(|e| e.to_string())?;
        let last = bytes.len() - 1;
        bytes[last] ^= 0x01;
        fs::write(&path, bytes).map_err(|e| e.to_string())?;
        match TemplateSet::load_dir(dir.path()) {
            Err(TemplateError::Digest { id: bad, .. }) if bad == id => {}
            other => return Err(format!("mutated {id} gave {other:?}")),
        }
    }
    Ok("5 fixed templates match digests; each single-byte mutation is refused".into())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("metric oracles", metric_oracles),
        ("property tests", properties),
        ("determinism", determinism),
        ("schedule fidelity", schedule_fidelity),
        ("perfect panel", perfect_panel),
        ("report shape", report_shape),
        ("parser corpus", parser_corpus),
        ("template integrity", template_integrity),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("[PASS] AC{} {name}: {detail}", i + 1),
            Err(why) => {
                failures += 1;
                println!("[FAIL] AC{} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
