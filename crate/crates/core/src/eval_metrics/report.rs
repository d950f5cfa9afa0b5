//! Longitudinal report: per-iteration authenticity and rationality per
//! agent, avg/5th/10th summaries, and panel agreement statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use super::{
    authenticity, fleiss_kappa, majority_rating, spearman_rho, to_polarity, AuthenticityMode, MetricError, Polarity,
};
use crate::agent_core::{AgentKind, SessionLog};
use crate::bench_model::Variant;
use crate::scalar::Real;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("no session answer is covered by the human ratings")]
    NoCoverage,
}

/// One annotator's attitude rating for one questionnaire cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HumanRatingRecord {
    pub annotator_id: String,
    pub topic_id: String,
    pub iteration: usize,
    pub question_id: String,
    pub rating: u8,
    /// Restricts the record to sessions run with this profile.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
}

/// One annotator's 1-5 score for the reasoning behind one answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RationalityRecord {
    pub annotator_id: String,
    pub topic_id: String,
    pub iteration: usize,
    pub question_id: String,
    pub score: u8,
    /// Restricts the record to sessions of this agent kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent: Option<AgentKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReportOptions {
    pub authenticity_mode: AuthenticityMode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationMetrics<T> {
    pub iteration: usize,
    pub authenticity: Option<T>,
    pub rationality: Option<T>,
    /// Sessions contributing an authenticity value at this iteration.
    pub sessions_covered: usize,
}

/// Table columns: the pre-information pass, the mean over iterations from
/// 1 on, and the 5th and 10th iterations if they ran.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary<T> {
    pub zeroth: Option<T>,
    pub avg: Option<T>,
    pub fifth: Option<T>,
    pub tenth: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentRow<T> {
    pub agent: AgentKind,
    pub variant: Variant,
    pub sessions: usize,
    pub iterations: Vec<IterationMetrics<T>>,
    pub authenticity: Summary<T>,
    pub rationality: Summary<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementStats<T> {
    pub annotators: usize,
    /// Cells rated by the full panel; only these enter the statistics.
    pub items: usize,
    pub fleiss: Option<T>,
    pub fleiss_polarity: Option<T>,
    pub spearman_avg: Option<T>,
    /// Annotator pairs with a defined rank correlation.
    pub spearman_pairs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PublishedRow {
    pub agent: AgentKind,
    pub human_feedback: bool,
    /// avg, 5th, 10th for the article variant, then the video variant.
    pub authenticity: [[f64; 3]; 2],
    pub rationality: [[f64; 3]; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PublishedAgreement {
    pub human_fleiss: f64,
    pub human_fleiss_polarity: f64,
    pub human_spearman: f64,
    pub rationality_fleiss: f64,
    pub rationality_fleiss_polarity: f64,
    pub rationality_spearman: f64,
}

pub const PUBLISHED_ROWS: [PublishedRow; 4] = [
    PublishedRow {
        agent: AgentKind::Cot,
        human_feedback: false,
        authenticity: [[0.182, 0.192, 0.091], [0.153, 0.302, 0.131]],
        rationality: [[2.925, 2.883, 3.167], [3.058, 3.767, 3.083]],
    },
    PublishedRow {
        agent: AgentKind::React,
        human_feedback: true,
        authenticity: [[0.236, 0.144, 0.270], [0.212, 0.241, 0.227]],
        rationality: [[3.415, 3.483, 3.483], [3.535, 3.800, 3.800]],
    },
    PublishedRow {
        agent: AgentKind::Reflexion,
        human_feedback: true,
        authenticity: [[0.302, 0.327, 0.244], [0.329, 0.352, 0.373]],
        rationality: [[3.658, 3.917, 3.533], [3.888, 3.967, 3.917]],
    },
    PublishedRow {
        agent: AgentKind::Coggpt,
        human_feedback: false,
        authenticity: [[0.536, 0.415, 0.597], [0.532, 0.496, 0.611]],
        rationality: [[4.118, 4.117, 4.300], [4.145, 4.183, 4.317]],
    },
];

pub const PUBLISHED_AGREEMENT: PublishedAgreement = PublishedAgreement {
    human_fleiss: 0.693,
    human_fleiss_polarity: 0.780,
    human_spearman: 0.770,
    rationality_fleiss: 0.646,
    rationality_fleiss_polarity: 0.813,
    rationality_spearman: 0.839,
};

pub const REFERENCE_NOTE: &str = "Published reference values from GPT-4 runs rated by a seven-person panel. \
They cannot be reproduced by replay runs and are listed for layout comparison only.";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceValues {
    pub note: &'static str,
    pub rows: &'static [PublishedRow],
    pub agreement: PublishedAgreement,
}

impl Default for ReferenceValues {
    fn default() -> Self {
        Self {
            note: REFERENCE_NOTE,
            rows: &PUBLISHED_ROWS,
            agreement: PUBLISHED_AGREEMENT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport<T> {
    pub reference: ReferenceValues,
    pub options: ReportOptions,
    pub rows: Vec<AgentRow<T>>,
    pub human_agreement: Option<AgreementStats<T>>,
    pub rationality_agreement: Option<AgreementStats<T>>,
    pub warnings: Vec<String>,
}

/// Ratings of one annotated cell, keyed by annotator id.
type Panel = BTreeMap<String, u8>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct CellKey {
    topic: String,
    agent: Option<AgentKind>,
    profile: Option<String>,
    iteration: usize,
    question: String,
}

struct PanelIndex {
    cells: BTreeMap<CellKey, Panel>,
    annotators: BTreeSet<String>,
}

impl PanelIndex {
    fn build<'a>(
        records: impl Iterator<Item = (CellKey, &'a str, u8)>,
        what: &str,
        warnings: &mut Vec<String>,
    ) -> Result<Self, MetricError> {
        let mut cells: BTreeMap<CellKey, Panel> = BTreeMap::new();
        let mut annotators = BTreeSet::new();
        for (key, annotator, value) in records {
            if !(1..=5).contains(&value) {
                return Err(MetricError::OutOfRange(value));
            }
            annotators.insert(annotator.to_string());
            let panel = cells.entry(key.clone()).or_default();
            if panel.contains_key(annotator) {
                warnings.push(format!(
                    "duplicate {what} from {annotator} for {}/t{}/{}; first kept",
                    key.topic, key.iteration, key.question
                ));
            } else {
                panel.insert(annotator.to_string(), value);
            }
        }
        Ok(Self { cells, annotators })
    }

    /// The most specific cell for a session: agent and profile each match
    /// or are unrestricted.
    fn lookup(&self, topic: &str, agent: AgentKind, profile: &str, iteration: usize, question: &str) -> Option<&Panel> {
        for a in [Some(agent), None] {
            for p in [Some(profile.to_string()), None] {
                let key = CellKey {
                    topic: topic.to_string(),
                    agent: a,
                    profile: p,
                    iteration,
                    question: question.to_string(),
                };
                if let Some(panel) = self.cells.get(&key) {
                    return Some(panel);
                }
            }
        }
        None
    }

    fn agreement<T: Real>(&self, what: &str, warnings: &mut Vec<String>) -> Option<AgreementStats<T>> {
        if self.cells.is_empty() {
            return None;
        }
        let n = self.annotators.len();
        let full: Vec<&Panel> = self.cells.values().filter(|p| p.len() == n).collect();
        let partial = self.cells.len() - full.len();
        if partial > 0 {
            warnings.push(format!(
                "{partial} {what} cell(s) lack ratings from some of the {n} annotators; excluded from agreement"
            ));
        }
        let counts = |map: &dyn Fn(u8) -> usize, k: usize| -> Vec<Vec<usize>> {
            full.iter()
                .map(|panel| {
                    let mut row = vec![0; k];
                    panel.values().for_each(|&r| row[map(r)] += 1);
                    row
                })
                .collect()
        };
        let mut note = |label: &str, r: Result<T, MetricError>| match r {
            Ok(v) => Some(v),
            Err(e) => {
                warnings.push(format!("{what} {label} undefined: {e}"));
                None
            }
        };
        let raw = counts(&|r| usize::from(r - 1), 5);
        let polar = counts(
            &|r| {
                let p = to_polarity(r).expect("ratings validated on ingest");
                Polarity::ALL.iter().position(|q| *q == p).expect("listed")
            },
            3,
        );
        let fleiss = note("Fleiss' kappa", fleiss_kappa(&raw));
        let fleiss_polarity = note("polarity Fleiss' kappa", fleiss_kappa(&polar));

        let vectors: Vec<Vec<T>> = self
            .annotators
            .iter()
            .map(|a| full.iter().map(|p| T::from_rating(p[a])).collect())
            .collect();
        let mut sum = T::zero();
        let mut pairs = 0usize;
        for i in 0..vectors.len() {
            for j in i + 1..vectors.len() {
                if let Ok(rho) = spearman_rho(&vectors[i], &vectors[j]) {
                    sum = sum + rho;
                    pairs += 1;
                }
            }
        }
        let total_pairs = n * n.saturating_sub(1) / 2;
        if pairs < total_pairs {
            warnings.push(format!(
                "{what}: {} of {total_pairs} annotator pair(s) have undefined rank correlation; excluded",
                total_pairs - pairs
            ));
        }
        Some(AgreementStats {
            annotators: n,
            items: full.len(),
            fleiss,
            fleiss_polarity,
            spearman_avg: (pairs > 0).then(|| sum / T::from_count(pairs)),
            spearman_pairs: pairs,
        })
    }
}

fn mean<T: Real>(values: &[T]) -> Option<T> {
    (!values.is_empty()).then(|| values.iter().fold(T::zero(), |s, &v| s + v) / T::from_count(values.len()))
}

fn summarize<T: Real>(iterations: &[IterationMetrics<T>], pick: impl Fn(&IterationMetrics<T>) -> Option<T>) -> Summary<T> {
    let at = |t: usize| iterations.iter().find(|m| m.iteration == t).and_then(&pick);
    let later: Vec<T> = iterations.iter().filter(|m| m.iteration >= 1).filter_map(&pick).collect();
    Summary {
        zeroth: at(0),
        avg: mean(&later),
        fifth: at(5),
        tenth: at(10),
    }
}

/// Scores every session against the panel majority and aggregates per
/// agent and variant. Cells without human ratings are excluded with a
/// warning; an empty intersection is an error.
pub fn build_report<T: Real>(
    sessions: &[SessionLog],
    human: &[HumanRatingRecord],
    rationality: &[RationalityRecord],
    options: ReportOptions,
) -> Result<MetricsReport<T>, ReportError> {
    let mut warnings = Vec::new();
    let humans = PanelIndex::build(
        human.iter().map(|r| {
            (
                CellKey {
                    topic: r.topic_id.clone(),
                    agent: None,
                    profile: r.profile.clone(),
                    iteration: r.iteration,
                    question: r.question_id.clone(),
                },
                r.annotator_id.as_str(),
                r.rating,
            )
        }),
        "human rating",
        &mut warnings,
    )?;
    let rational = PanelIndex::build(
        rationality.iter().map(|r| {
            (
                CellKey {
                    topic: r.topic_id.clone(),
                    agent: r.agent,
                    profile: r.profile.clone(),
                    iteration: r.iteration,
                    question: r.question_id.clone(),
                },
                r.annotator_id.as_str(),
                r.score,
            )
        }),
        "rationality score",
        &mut warnings,
    )?;
    if rationality.is_empty() {
        warnings.push("no rationality scores supplied; rationality columns are empty".into());
    }

    // (variant, agent) -> iteration -> per-session values.
    type Cells<T> = BTreeMap<usize, (Vec<T>, Vec<T>)>;
    let mut groups: BTreeMap<(&'static str, AgentKind), (Variant, usize, Cells<T>)> = BTreeMap::new();
    let mut covered_any = false;

    for log in sessions {
        let cfg = &log.config;
        if !log.complete {
            warnings.push(format!(
                "session {}/{} ({}) is incomplete; scoring its {} finished pass(es)",
                cfg.topic_id,
                cfg.profile_name,
                cfg.agent,
                log.passes.len()
            ));
        }
        let entry = groups
            .entry((cfg.variant.code(), cfg.agent))
            .or_insert_with(|| (cfg.variant, 0, BTreeMap::new()));
        entry.1 += 1;
        let mut missing_human: Vec<String> = Vec::new();
        let mut missing_rationality: Vec<String> = Vec::new();
        for pass in &log.passes {
            let t = pass.iteration;
            let mut agent_ratings = Vec::new();
            let mut human_ratings = Vec::new();
            let mut rationality_scores = Vec::new();
            for answer in &pass.answers {
                let q = &answer.question_id;
                match humans.lookup(&cfg.topic_id, cfg.agent, &cfg.profile_name, t, q) {
                    Some(panel) => {
                        let votes: Vec<u8> = panel.values().copied().collect();
                        agent_ratings.push(answer.rating);
                        human_ratings.push(majority_rating(&votes)?);
                    }
                    None => missing_human.push(format!("t{t}/{q}")),
                }
                if !rationality.is_empty() {
                    match rational.lookup(&cfg.topic_id, cfg.agent, &cfg.profile_name, t, q) {
                        Some(panel) => {
                            let votes: Vec<u8> = panel.values().copied().collect();
                            rationality_scores.push(T::from_rating(majority_rating(&votes)?));
                        }
                        None => missing_rationality.push(format!("t{t}/{q}")),
                    }
                }
            }
            let cell = entry.2.entry(t).or_default();
            if !agent_ratings.is_empty() {
                covered_any = true;
                cell.0
                    .push(authenticity(&agent_ratings, &human_ratings, options.authenticity_mode)?);
            }
            if let Some(m) = mean(&rationality_scores) {
                cell.1.push(m);
            }
        }
        for (what, cells) in [("human ratings", &missing_human), ("rationality scores", &missing_rationality)] {
            if !cells.is_empty() {
                warnings.push(format!(
                    "{} ({}, {}): no {what} for {} cell(s), excluded: {}",
                    cfg.topic_id,
                    cfg.agent,
                    cfg.profile_name,
                    cells.len(),
                    cells.join(" ")
                ));
            }
        }
    }
    if !covered_any {
        return Err(ReportError::NoCoverage);
    }

    let rows = groups
        .into_iter()
        .map(|((_, agent), (variant, sessions, cells))| {
            let iterations: Vec<IterationMetrics<T>> = cells
                .into_iter()
                .map(|(iteration, (auth, rat))| IterationMetrics {
                    iteration,
                    authenticity: mean(&auth),
                    rationality: mean(&rat),
                    sessions_covered: auth.len(),
                })
                .collect();
            AgentRow {
                agent,
                variant,
                sessions,
                authenticity: summarize(&iterations, |m| m.authenticity),
                rationality: summarize(&iterations, |m| m.rationality),
                iterations,
            }
        })
        .collect();

    let human_agreement = humans.agreement("human rating", &mut warnings);
    let rationality_agreement = rational.agreement("rationality", &mut warnings);
    Ok(MetricsReport {
        reference: ReferenceValues::default(),
        options,
        rows,
        human_agreement,
        rationality_agreement,
        warnings,
    })
}

fn cell<T: Real>(v: Option<T>, digits: usize) -> String {
    match v.and_then(|x| x.to_f64()) {
        Some(x) => format!("{x:.digits$}"),
        None => "-".into(),
    }
}

impl<T: Real + Serialize> MetricsReport<T> {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    /// Flat rows `agent,variant,iteration,authenticity,rationality`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("agent,variant,iteration,authenticity,rationality\n");
        for row in &self.rows {
            for m in &row.iterations {
                let value = |v: Option<T>| v.and_then(|x| x.to_f64()).map(|x| x.to_string()).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    row.agent,
                    row.variant.code(),
                    m.iteration,
                    value(m.authenticity),
                    value(m.rationality)
                );
            }
        }
        out
    }

    /// The two result tables with avg/5th/10th columns per variant, headed
    /// by the published reference values.
    pub fn render_tables(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Reference (not reproducible): {}", self.reference.note);
        for (title, pick) in [("Authenticity", 0usize), ("Rationality", 1)] {
            let _ = writeln!(out, "\n{title}");
            let _ = writeln!(out, "{:<18}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}", "agent", "a avg", "a 5th", "a 10th", "v avg", "v 5th", "v 10th");
            for kind in AgentKind::ALL {
                let rows: Vec<&AgentRow<T>> = self.rows.iter().filter(|r| r.agent == kind).collect();
                if rows.is_empty() {
                    continue;
                }
                let _ = write!(out, "{:<18}", kind.as_str());
                for variant in [Variant::Articles, Variant::Videos] {
                    let summary = rows.iter().find(|r| r.variant == variant).map(|r| {
                        if pick == 0 {
                            &r.authenticity
                        } else {
                            &r.rationality
                        }
                    });
                    for v in [summary.and_then(|s| s.avg), summary.and_then(|s| s.fifth), summary.and_then(|s| s.tenth)] {
                        let _ = write!(out, "{:>8}", cell(v, 3));
                    }
                }
                out.push('\n');
            }
            for published in self.reference.rows {
                let values = if pick == 0 { published.authenticity } else { published.rationality };
                let label = format!("{}{} (pub.)", published.agent, if published.human_feedback { "*" } else { "" });
                let _ = write!(out, "{label:<18}");
                for v in values.iter().flatten() {
                    let _ = write!(out, "{v:>8.3}");
                }
                out.push('\n');
            }
        }
        let _ = writeln!(out, "(* published agents given human feedback)");
        let _ = writeln!(out, "\nAgreement            fleiss  polarity  spearman  items");
        for (label, stats, pub_vals) in [
            (
                "human ratings",
                &self.human_agreement,
                [PUBLISHED_AGREEMENT.human_fleiss, PUBLISHED_AGREEMENT.human_fleiss_polarity, PUBLISHED_AGREEMENT.human_spearman],
            ),
            (
                "rationality",
                &self.rationality_agreement,
                [
                    PUBLISHED_AGREEMENT.rationality_fleiss,
                    PUBLISHED_AGREEMENT.rationality_fleiss_polarity,
                    PUBLISHED_AGREEMENT.rationality_spearman,
                ],
            ),
        ] {
            match stats {
                Some(s) => {
                    let _ = writeln!(
                        out,
                        "{label:<20}{:>7}{:>10}{:>10}{:>7}",
                        cell(s.fleiss, 3),
                        cell(s.fleiss_polarity, 3),
                        cell(s.spearman_avg, 3),
                        s.items
                    );
                }
                None => {
                    let _ = writeln!(out, "{label:<20}{:>7}{:>10}{:>10}{:>7}", "-", "-", "-", 0);
                }
            }
            let _ = writeln!(
                out,
                "{:<20}{:>7.3}{:>10.3}{:>10.3}",
                format!("{label} (pub.)"),
                pub_vals[0],
                pub_vals[1],
                pub_vals[2]
            );
        }
        out
    }
}

impl<T: Real + Serialize> fmt::Display for MetricsReport<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_tables())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent_core::{PassRecord, QuestionAnswer, SessionConfig};
    use crate::bench_model::ProfileDoc;

    fn session(agent: AgentKind, ratings: &[[u8; 3]]) -> SessionLog {
        SessionLog {
            config: SessionConfig {
                bench: "b".into(),
                variant: Variant::Articles,
                topic_id: "t1".into(),
                profile_name: "p".into(),
                agent,
                recall_k: 5,
                strict: false,
            },
            complete: true,
            error: None,
            passes: ratings
                .iter()
                .enumerate()
                .map(|(t, r)| PassRecord {
                    iteration: t,
                    batch: Vec::new(),
                    record: None,
                    profile_after: ProfileDoc::empty(),
                    answers: r
                        .iter()
                        .enumerate()
                        .map(|(q, &rating)| QuestionAnswer {
                            question_id: format!("q{}", q + 1),
                            rating,
                            reasoning: String::new(),
                            recall_trace: Vec::new(),
                        })
                        .collect(),
                    calls: Vec::new(),
                })
                .collect(),
        }
    }

    fn panel_from(ratings: &[[u8; 3]], annotators: usize) -> Vec<HumanRatingRecord> {
        let mut out = Vec::new();
        for a in 0..annotators {
            for (t, r) in ratings.iter().enumerate() {
                for (q, &rating) in r.iter().enumerate() {
                    out.push(HumanRatingRecord {
                        annotator_id: format!("a{a}"),
                        topic_id: "t1".into(),
                        iteration: t,
                        question_id: format!("q{}", q + 1),
                        rating,
                        profile: None,
                    });
                }
            }
        }
        out
    }

    #[test]
    fn perfect_panel_scores_one_everywhere() {
        let ratings: Vec<[u8; 3]> = (0..11).map(|t| [1 + (t % 5) as u8, 3, 5]).collect();
        let report: MetricsReport<f64> =
            build_report(&[session(AgentKind::Coggpt, &ratings)], &panel_from(&ratings, 7), &[], ReportOptions::default())
                .unwrap();
        let row = &report.rows[0];
        assert!(row.iterations.iter().all(|m| m.authenticity == Some(1.0)));
        assert_eq!(row.authenticity.avg, Some(1.0));
        let agree = report.human_agreement.unwrap();
        assert_eq!((agree.fleiss, agree.fleiss_polarity), (Some(1.0), Some(1.0)));
        assert_eq!(agree.items, 33);
    }

    #[test]
    fn summary_columns() {
        let ratings: Vec<[u8; 3]> = vec![[1, 2, 3]; 6];
        let mut humans = panel_from(&ratings, 3);
        // Flip pass 0 entirely so it does not match the agent.
        for r in humans.iter_mut().filter(|r| r.iteration == 0) {
            r.rating = 6 - r.rating;
        }
        let report: MetricsReport<f64> =
            build_report(&[session(AgentKind::Cot, &ratings)], &humans, &[], ReportOptions::default()).unwrap();
        let s = &report.rows[0].authenticity;
        assert!(s.zeroth.unwrap() < 1.0);
        assert_eq!((s.avg, s.fifth, s.tenth), (Some(1.0), Some(1.0), None));
    }

    #[test]
    fn missing_cells_warn_and_no_overlap_errors() {
        let ratings: Vec<[u8; 3]> = vec![[1, 2, 3]; 3];
        let humans: Vec<_> = panel_from(&ratings, 3).into_iter().filter(|r| r.iteration != 1).collect();
        let report: MetricsReport<f64> =
            build_report(&[session(AgentKind::Cot, &ratings)], &humans, &[], ReportOptions::default()).unwrap();
        assert!(report.warnings.iter().any(|w| w.contains("3 cell(s)") && w.contains("t1/q1")));
        assert_eq!(report.rows[0].iterations[1].authenticity, None);
        let none: Result<MetricsReport<f64>, _> =
            build_report(&[session(AgentKind::Cot, &ratings)], &[], &[], ReportOptions::default());
        assert!(matches!(none, Err(ReportError::NoCoverage)));
    }

    #[test]
    fn rationality_is_majority_then_mean() {
        let ratings: Vec<[u8; 3]> = vec![[1, 2, 3]; 2];
        let mut scores = Vec::new();
        for (a, s) in [(0, [5u8, 4, 3]), (1, [5, 4, 3]), (2, [1, 1, 1])] {
            for t in 0..2 {
                for (q, &score) in s.iter().enumerate() {
                    scores.push(RationalityRecord {
                        annotator_id: format!("a{a}"),
                        topic_id: "t1".into(),
                        iteration: t,
                        question_id: format!("q{}", q + 1),
                        score,
                        agent: Some(AgentKind::Cot),
                        profile: None,
                    });
                }
            }
        }
        let report: MetricsReport<f64> = build_report(
            &[session(AgentKind::Cot, &ratings)],
            &panel_from(&ratings, 3),
            &scores,
            ReportOptions::default(),
        )
        .unwrap();
        assert_eq!(report.rows[0].iterations[1].rationality, Some(4.0));
        assert_eq!(report.rows[0].rationality.avg, Some(4.0));
    }

    #[test]
    fn pairwise_spearman_matches_hand_average() {
        // Three annotators over four cells; pair correlations computed by hand:
        // (a0,a1) = 0.8, (a0,a2) = -1.0 and (a1,a2) = -0.8.
        let columns = [[1u8, 2, 3, 4], [1, 3, 2, 4], [4, 3, 2, 1]];
        let mut humans = Vec::new();
        for (a, col) in columns.iter().enumerate() {
            for (cell, &rating) in col.iter().enumerate() {
                humans.push(HumanRatingRecord {
                    annotator_id: format!("a{a}"),
                    topic_id: "t1".into(),
                    iteration: cell,
                    question_id: "q1".into(),
                    rating,
                    profile: None,
                });
            }
        }
        let mut s = session(AgentKind::Cot, &[[1, 1, 1]]);
        s.passes[0].answers.truncate(1);
        let report: MetricsReport<f64> = build_report(&[s], &humans, &[], ReportOptions::default()).unwrap();
        let agree = report.human_agreement.unwrap();
        assert_eq!(agree.spearman_pairs, 3);
        assert!((agree.spearman_avg.unwrap() - (0.8 - 1.0 - 0.8) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn csv_and_tables_have_expected_shape() {
        let ratings: Vec<[u8; 3]> = (0..11).map(|_| [1, 3, 5]).collect();
        let report: MetricsReport<f64> = build_report(
            &[session(AgentKind::Coggpt, &ratings), session(AgentKind::Cot, &ratings)],
            &panel_from(&ratings, 7),
            &[],
            ReportOptions::default(),
        )
        .unwrap();
        let csv = report.to_csv();
        assert_eq!(csv.lines().count(), 1 + 2 * 11);
        assert!(csv.starts_with("agent,variant,iteration,authenticity,rationality\ncoggpt,a,0,1,\n"));
        let tables = report.render_tables();
        assert!(tables.contains("a avg"));
        assert!(tables.contains("0.536"));
        assert!(tables.contains("4.118"));
    }
}
