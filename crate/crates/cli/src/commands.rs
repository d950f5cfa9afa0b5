//! Subcommand implementations.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{anyhow, Context};

use coggpt::agent_core::{run_session, AgentOptions, FeedbackBook, SessionLog, SessionSpec};
use coggpt::bench_model::{corpus_stats, load_benchmark, plan_iterations, validate_benchmark, BenchmarkSet};
use coggpt::benchgen::{
    export_review_sheet, generate_opinion_set, generate_profile, import_review_sheet, rank_supporters, GenError,
};
use coggpt::eval_metrics::report::{build_report, HumanRatingRecord, RationalityRecord, ReportError, ReportOptions};
use coggpt::eval_metrics::AuthenticityMode;
use coggpt::llm_provider::{
    LiveProvider, Provider, ProviderConfig, ProviderMode, ReplayProvider, Transcript, DEFAULT_EMBEDDING_DIM,
};
use coggpt::prompt_kit::{OpinionSet, TemplateSet};
use coggpt::MetricsReport;

use crate::config::RunConfig;
use crate::{EvalArgs, Failure, GenCommand, InspectArgs, ModelArgs, Outcome, RunArgs};

trait UsageContext<T> {
    fn usage(self) -> Result<T, Failure>;
    fn runtime(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> UsageContext<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }

    fn runtime(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

/// Writes through a sibling temp file and a rename, so readers never see
/// a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> anyhow::Result<()> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    let name = path
        .file_name()
        .ok_or_else(|| anyhow!("{} has no file name", path.display()))?
        .to_string_lossy();
    let tmp = parent.join(format!(".{name}.{}.tmp", std::process::id()));
    std::fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    text
}

fn load_templates(dir: Option<&Path>) -> anyhow::Result<TemplateSet> {
    Ok(match dir {
        Some(d) => TemplateSet::load_dir(d)?,
        None => TemplateSet::builtin()?,
    })
}

fn merge_run_config(args: RunArgs) -> anyhow::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = args.bench {
        cfg.bench_path = v;
    }
    if let Some(v) = args.agent {
        cfg.agent = v;
    }
    if let Some(v) = args.provider {
        cfg.provider.mode = v;
    }
    if let Some(v) = args.transcript {
        cfg.transcript = Some(v);
    }
    if !args.topics.is_empty() {
        cfg.topics = args.topics;
    }
    if let Some(v) = args.profile {
        cfg.profile_name = Some(v);
    }
    if let Some(v) = args.out {
        cfg.output_dir = v;
    }
    if let Some(v) = args.jobs {
        cfg.jobs = v;
    }
    if args.strict {
        cfg.strict = true;
    }
    if let Some(v) = args.recall_k {
        cfg.recall_k = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.embedding_dim {
        cfg.provider.embedding_dim = v;
    }
    if let Some(v) = args.templates {
        cfg.templates_dir = Some(v);
    }
    cfg.provider.seed = cfg.seed;
    Ok(cfg)
}

fn make_provider(config: &ProviderConfig, transcript: Option<&Path>) -> anyhow::Result<Provider> {
    match config.mode {
        ProviderMode::Replay => {
            let path = transcript.context("replay mode needs a transcript (--transcript)")?;
            let transcript = Transcript::load(path)?;
            Ok(Provider::Replay(ReplayProvider::new(transcript, config.embedding_dim, config.seed)))
        }
        ProviderMode::Live => Ok(Provider::Live(LiveProvider::from_env(config.clone())?)),
    }
}

struct PlannedSession {
    topic: String,
    profile: String,
    provider: Provider,
    feedback: FeedbackBook,
}

fn plan_sessions(cfg: &RunConfig, bench: &BenchmarkSet) -> anyhow::Result<Vec<PlannedSession>> {
    if let Some(v) = cfg.variant {
        if v != bench.variant {
            anyhow::bail!("config expects variant {v}, benchmark {} is variant {}", bench.name, bench.variant);
        }
    }
    let topics: Vec<String> = if cfg.topics.is_empty() {
        bench.topics().map(str::to_string).collect()
    } else {
        cfg.topics.clone()
    };
    let profile = match &cfg.profile_name {
        Some(p) => p.clone(),
        None => match bench.profiles.as_slice() {
            [only] => only.name.clone(),
            [] => anyhow::bail!("benchmark has no profiles"),
            _ => anyhow::bail!("benchmark has several profiles; choose one with --profile"),
        },
    };
    if bench.profile(&profile).is_none() {
        anyhow::bail!("unknown profile {profile:?}");
    }
    let mut planned = Vec::with_capacity(topics.len());
    for topic in &topics {
        plan_iterations(bench, topic, cfg.strict)?;
        if bench.questionnaire(topic).is_none() {
            anyhow::bail!("topic {topic:?} has no questionnaire");
        }
        let transcript = match cfg.provider.mode {
            ProviderMode::Replay => Some(cfg.transcript_for(topic, &profile, topics.len())?),
            ProviderMode::Live => None,
        };
        planned.push(PlannedSession {
            topic: topic.clone(),
            profile: profile.clone(),
            provider: make_provider(&cfg.provider, transcript.as_deref())?,
            feedback: FeedbackBook::load(&cfg.bench_path, topic)?,
        });
    }
    Ok(planned)
}

pub fn session_dir(out: &Path, agent: &str, topic: &str, profile: &str) -> PathBuf {
    out.join(agent).join(format!("{topic}__{profile}"))
}

pub fn run(args: RunArgs) -> Outcome {
    let cfg = merge_run_config(args).usage()?;
    cfg.check().usage()?;
    let templates = load_templates(cfg.templates_dir.as_deref()).usage()?;
    let bench = load_benchmark(&cfg.bench_path).usage()?;
    let planned = plan_sessions(&cfg, &bench).usage()?;

    let options = AgentOptions {
        recall_k: cfg.recall_k,
        ..AgentOptions::default()
    };
    let queue: Mutex<Vec<Option<PlannedSession>>> = Mutex::new(planned.into_iter().map(Some).collect());
    let total = queue.lock().expect("queue lock").len();
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<anyhow::Result<SessionLog>>>> = Mutex::new((0..total).map(|_| None).collect());

    std::thread::scope(|scope| {
        for _ in 0..cfg.jobs.min(total.max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= total {
                    break;
                }
                let job = queue.lock().expect("queue lock")[i].take().expect("each job taken once");
                let result = run_one(&cfg, &bench, &templates, options, job);
                results.lock().expect("results lock")[i] = Some(result);
            });
        }
    });

    let mut incomplete = Vec::new();
    for result in results.into_inner().expect("results lock") {
        let log = result.expect("every job ran").runtime()?;
        let cfg_echo = &log.config;
        let label = format!("{}/{}__{}", cfg_echo.agent, cfg_echo.topic_id, cfg_echo.profile_name);
        if log.complete {
            println!("{label}: {} passes complete", log.passes.len());
        } else {
            println!("{label}: INCOMPLETE ({})", log.error.as_deref().unwrap_or("unknown error"));
            incomplete.push(label);
        }
    }
    if !incomplete.is_empty() {
        return Err(Failure::Runtime(anyhow!("{} session(s) aborted: {}", incomplete.len(), incomplete.join(", "))));
    }
    Ok(())
}

fn run_one(
    cfg: &RunConfig,
    bench: &BenchmarkSet,
    templates: &TemplateSet,
    options: AgentOptions,
    job: PlannedSession,
) -> anyhow::Result<SessionLog> {
    let spec = SessionSpec {
        bench,
        topic_id: &job.topic,
        profile_name: &job.profile,
        kind: cfg.agent,
        options,
        strict: cfg.strict,
        templates,
        feedback: &job.feedback,
    };
    let outcome = run_session(spec, job.provider)?;
    if let Provider::Replay(p) = &outcome.model {
        let left = p.transcript().remaining();
        if outcome.log.complete && left > 0 {
            log::warn!("{}/{}: {left} transcript entries were not consumed", job.topic, job.profile);
        }
    }
    let dir = session_dir(&cfg.output_dir, cfg.agent.as_str(), &job.topic, &job.profile);
    write_atomic(&dir.join("session.json"), &outcome.log.to_json())?;
    if !cfg.agent.is_baseline() {
        write_atomic(&dir.join("ltm.jsonl"), &outcome.state.ltm.to_jsonl())?;
    }
    Ok(outcome.log)
}

/// Every `session.json` below `root`, in sorted path order.
pub fn find_session_logs(root: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).with_context(|| format!("listing {}", dir.display()))? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().is_some_and(|n| n == "session.json") {
                found.push(path);
            }
        }
    }
    found.sort();
    Ok(found)
}

/// Loads logs and panels and builds the report without writing anything.
pub fn evaluate(
    sessions_dir: &Path,
    humans: &Path,
    rationality: Option<&Path>,
    options: ReportOptions,
) -> Result<MetricsReport, Failure> {
    let paths = find_session_logs(sessions_dir).usage()?;
    if paths.is_empty() {
        return Err(Failure::Usage(anyhow!("no session.json under {}", sessions_dir.display())));
    }
    let logs: Vec<SessionLog> = paths.iter().map(|p| read_json(p)).collect::<anyhow::Result<_>>().usage()?;
    let human: Vec<HumanRatingRecord> = read_json(humans).usage()?;
    let rational: Vec<RationalityRecord> = match rationality {
        Some(p) => read_json(p).usage()?,
        None => Vec::new(),
    };
    build_report(&logs, &human, &rational, options).map_err(|e| match e {
        ReportError::NoCoverage => Failure::Runtime(e.into()),
        ReportError::Metric(_) => Failure::Usage(e.into()),
    })
}

pub fn eval(args: EvalArgs) -> Outcome {
    let options = ReportOptions {
        authenticity_mode: if args.per_question {
            AuthenticityMode::PerQuestion
        } else {
            AuthenticityMode::Kappa
        },
    };
    let report = evaluate(&args.sessions, &args.humans, args.rationality.as_deref(), options)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    write_atomic(&args.out.join("report.json"), &report.to_json()).runtime()?;
    write_atomic(&args.out.join("report.csv"), &report.to_csv()).runtime()?;
    print!("{}", report.render_tables());
    if !report.warnings.is_empty() {
        println!("\n{} warning(s); see report.json", report.warnings.len());
    }
    Ok(())
}

fn gen_provider(model: &ModelArgs) -> anyhow::Result<Provider> {
    let config = ProviderConfig {
        mode: model.provider,
        embedding_dim: DEFAULT_EMBEDDING_DIM,
        ..ProviderConfig::default()
    };
    make_provider(&config, model.transcript.as_deref())
}

fn gen_failure(e: GenError) -> Failure {
    match e {
        GenError::Template(_) => Failure::Usage(e.into()),
        GenError::Io { ref source, .. } if source.kind() == std::io::ErrorKind::NotFound => Failure::Usage(e.into()),
        _ => Failure::Runtime(e.into()),
    }
}

pub fn gen(cmd: GenCommand) -> Outcome {
    match cmd {
        GenCommand::Opinions { topic, out, model } => {
            let templates = load_templates(model.templates.as_deref()).usage()?;
            let mut provider = gen_provider(&model).usage()?;
            let generated = generate_opinion_set(&topic, &templates, &mut provider).map_err(gen_failure)?;
            for w in &generated.warnings {
                log::warn!("{w}");
            }
            write_atomic(&out, &to_json(&generated.value)).runtime()?;
            println!("{} opinions written to {}", generated.value.len(), out.display());
        }
        GenCommand::Profile { character, out, model } => {
            let templates = load_templates(model.templates.as_deref()).usage()?;
            let mut provider = gen_provider(&model).usage()?;
            let generated = generate_profile(&character, &templates, &mut provider).map_err(gen_failure)?;
            for w in &generated.warnings {
                log::warn!("{w}");
            }
            write_atomic(&out, &to_json(&generated.value)).runtime()?;
            println!("profile written to {}", out.display());
        }
        GenCommand::Rank { opinions, out } => {
            let sets: Vec<OpinionSet> = opinions.iter().map(|p| read_json(p)).collect::<anyhow::Result<_>>().usage()?;
            let ranks = rank_supporters(&sets);
            match out {
                Some(path) => write_atomic(&path, &to_json(&ranks)).runtime()?,
                None => {
                    for r in &ranks {
                        println!("{:>3}  {:>3}  {}", r.rank, r.mentions, r.supporter);
                    }
                }
            }
        }
        GenCommand::Sheet { opinions, topic_id, out } => {
            let set: OpinionSet = read_json(&opinions).usage()?;
            export_review_sheet(&topic_id, &set, &out).map_err(gen_failure)?;
            println!("review sheet with {} rows written to {}", set.len(), out.display());
        }
        GenCommand::Import { sheet, out } => {
            let questionnaire = import_review_sheet(&sheet).map_err(gen_failure)?;
            write_atomic(&out, &to_json(&questionnaire)).runtime()?;
            println!("{} accepted question(s) written to {}", questionnaire.len(), out.display());
        }
    }
    Ok(())
}

pub fn validate(bench: &Path) -> Outcome {
    if !bench.is_dir() {
        return Err(Failure::Usage(anyhow!("benchmark directory {} does not exist", bench.display())));
    }
    let set = match load_benchmark(bench) {
        Ok(set) => set,
        Err(e) => {
            println!("1 violation\n  {e}");
            return Err(Failure::Runtime(anyhow!("benchmark {} failed to load", bench.display())));
        }
    };
    let report = validate_benchmark(&set);
    print!("{report}");
    if report.is_clean() {
        Ok(())
    } else {
        Err(Failure::Runtime(anyhow!("{} violation(s)", report.violations.len())))
    }
}

pub fn stats(bench: &Path) -> Outcome {
    let set = load_benchmark(bench).usage()?;
    print!("{}", corpus_stats(&set));
    Ok(())
}

fn first_line(s: &str, width: usize) -> String {
    let line = s.lines().find(|l| !l.trim().is_empty()).unwrap_or("").trim();
    if line.chars().count() > width {
        format!("{}...", line.chars().take(width).collect::<String>())
    } else {
        line.to_string()
    }
}

pub fn replay_inspect(args: InspectArgs) -> Outcome {
    let transcript = Transcript::load(&args.transcript).usage()?;
    println!("{} entries in {}", transcript.len(), args.transcript.display());
    for (i, e) in transcript.entries().iter().enumerate() {
        let expect = e.expect.as_deref().map(|x| first_line(x, 30)).unwrap_or_else(|| "-".into());
        println!("{i:>4}  expect={expect:<34} {}", first_line(&e.response, 50));
    }
    let Some(session) = args.session else {
        return Ok(());
    };
    let log: SessionLog = read_json(&session).usage()?;
    let replies: Vec<&str> = log.passes.iter().flat_map(|p| &p.calls).map(|c| c.reply.as_str()).collect();
    for (i, reply) in replies.iter().enumerate() {
        match transcript.entries().get(i) {
            Some(e) if e.response == *reply => {}
            Some(_) => return Err(Failure::Runtime(anyhow!("session call {i} diverges from transcript entry {i}"))),
            None => return Err(Failure::Runtime(anyhow!("session has {} calls, transcript only {}", replies.len(), transcript.len()))),
        }
    }
    println!(
        "session {} consumed {} of {} entries; {} unconsumed",
        session.display(),
        replies.len(),
        transcript.len(),
        transcript.len() - replies.len()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_creates_parents_and_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a/b/out.json");
        write_atomic(&path, "one").unwrap();
        write_atomic(&path, "two").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
        let leftovers: Vec<_> = std::fs::read_dir(path.parent().unwrap()).unwrap().collect();
        assert_eq!(leftovers.len(), 1);
    }

    #[test]
    fn truncates_long_lines() {
        assert_eq!(first_line("\n  hello world  \nmore", 5), "hello...");
        assert_eq!(first_line("hi", 5), "hi");
    }
}
