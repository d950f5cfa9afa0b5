//! Run manifests: a flat TOML file mirroring [`RunConfig`], with command
//! line flags layered on top.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use coggpt::agent_core::AgentKind;
use coggpt::bench_model::Variant;
use coggpt::llm_provider::{ProviderConfig, ProviderMode};
use coggpt::memory::DEFAULT_RECALL_K;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub bench_path: PathBuf,
    /// Expected benchmark variant; checked against the benchmark header.
    pub variant: Option<Variant>,
    /// Topics to run; empty means every topic in the benchmark.
    pub topics: Vec<String>,
    /// Profile paired with every topic; required when the benchmark has
    /// more than one profile.
    pub profile_name: Option<String>,
    pub agent: AgentKind,
    pub provider: ProviderConfig,
    /// A `.jsonl` file, or a directory holding `<topic>__<profile>.jsonl`
    /// or `<topic>.jsonl` per session.
    pub transcript: Option<PathBuf>,
    /// Directory overriding the built-in templates; fixed templates are
    /// digest-checked.
    pub templates_dir: Option<PathBuf>,
    pub recall_k: usize,
    pub strict: bool,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            bench_path: PathBuf::from("bench"),
            variant: None,
            topics: Vec::new(),
            profile_name: None,
            agent: AgentKind::Coggpt,
            provider: ProviderConfig::default(),
            transcript: None,
            templates_dir: None,
            recall_k: DEFAULT_RECALL_K,
            strict: false,
            output_dir: PathBuf::from("runs"),
            seed: 0,
            jobs: 1,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut config: RunConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        // Relative paths in a manifest are relative to the manifest.
        if let Some(base) = path.parent() {
            let rebase = |p: &mut PathBuf| {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            };
            rebase(&mut config.bench_path);
            rebase(&mut config.output_dir);
            if let Some(t) = config.transcript.as_mut() {
                rebase(t);
            }
            if let Some(t) = config.templates_dir.as_mut() {
                rebase(t);
            }
        }
        Ok(config)
    }

    pub fn check(&self) -> anyhow::Result<()> {
        if self.jobs == 0 {
            bail!("jobs must be at least 1");
        }
        if self.recall_k == 0 {
            bail!("recall_k must be at least 1");
        }
        if !self.bench_path.is_dir() {
            bail!("benchmark directory {} does not exist", self.bench_path.display());
        }
        if self.provider.mode == ProviderMode::Replay {
            match &self.transcript {
                None => bail!("replay mode needs a transcript (--transcript)"),
                Some(t) if !t.exists() => bail!("transcript {} does not exist", t.display()),
                Some(_) => {}
            }
        }
        Ok(())
    }

    /// Transcript file for one session.
    pub fn transcript_for(&self, topic: &str, profile: &str, sessions: usize) -> anyhow::Result<PathBuf> {
        let path = self.transcript.as_ref().context("replay mode needs a transcript (--transcript)")?;
        if path.is_file() {
            if sessions > 1 {
                bail!(
                    "one transcript file cannot serve {sessions} sessions; pass a directory of <topic>.jsonl files"
                );
            }
            return Ok(path.clone());
        }
        for name in [format!("{topic}__{profile}.jsonl"), format!("{topic}.jsonl")] {
            let candidate = path.join(name);
            if candidate.is_file() {
                return Ok(candidate);
            }
        }
        bail!(
            "no transcript for {topic}/{profile} in {} (looked for {topic}__{profile}.jsonl and {topic}.jsonl)",
            path.display()
        )
    }
}
