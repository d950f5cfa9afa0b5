//! Benchmark data model: topics, questionnaires, profiles and information
//! flows, plus loading, validation and iteration scheduling.
//!
//! On-disk layout of a benchmark root:
//!
//! ```text
//! bench.json                      {"name": ..., "variant": "a" | "v"}
//! questionnaires/<topic>.json     {"topic_id": ..., "questions": [{"id": ..., "statement": ...}]}
//! profiles/<name>.json            ordered attribute map
//! flows/<topic>/<seq>.json        {"id", "category", "modality", "text"[, "word_count"]}
//! ```

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// The profile attributes every persona carries, in canonical order.
pub const CANONICAL_KEYS: [&str; 22] = [
    "Name",
    "Gender",
    "Age",
    "Place of Birth",
    "Occupation",
    "Height",
    "Weight",
    "Distinguishing Marks",
    "Personality",
    "Hobbies",
    "Skills",
    "Dislikes",
    "Values",
    "Religious Beliefs",
    "Interpersonal Relationships",
    "Flaws",
    "External Environment",
    "Financial Status",
    "Family Background",
    "Educational Background",
    "Significant Experiences",
    "Future Outlook",
];

/// Categories and their five topics in the canonical benchmark.
pub const CANONICAL_TOPICS: [(&str, [&str; 5]); 10] = [
    ("Entertainment", ["Gossip", "Movies & TV Shows", "Dating Sims", "Outdoor Adventures", "Horoscope & Divination"]),
    ("Culture", ["Religion", "War History", "Folktales", "Literary", "Anime & Manga"]),
    ("Education", ["Parent-child Education", "Professional Education", "School Education", "TED Talks", "Psychological Counseling"]),
    ("Economy", ["Entrepreneurship", "Financial Investment", "Loans", "Market Analysis", "Financial Figures"]),
    ("Health", ["Wellness", "Assisted Reproduction", "Fat Burning Training", "Yoga", "Oral Care"]),
    ("Technology", ["Digital Products", "Scientific Research", "Automobile News", "Virtual Reality", "Software Products"]),
    ("Society", ["Legal Events", "Unusual Events", "Acts of Kindness", "Military Conflicts", "Disasters & Accidents"]),
    ("Life", ["Pets", "Living Abroad", "Home Design & Renovation", "Rural life", "Food"]),
    ("Sports", ["Extreme Sports", "Winter Sports", "Fishing", "Ball Sports", "Combat Sports"]),
    ("Fashion", ["Beauty & Hairstyling", "Clothes", "Street Style", "Wedding", "Tattoos"]),
];

/// Published per-category mean word counts: (category, articles, short-video texts).
pub const PUBLISHED_WORD_COUNT_MEANS: [(&str, f64, f64); 10] = [
    ("Entertainment", 2261.26, 283.98),
    ("Culture", 1997.44, 323.81),
    ("Education", 2394.96, 231.62),
    ("Economy", 1842.32, 399.42),
    ("Health", 1782.74, 182.01),
    ("Technology", 2351.68, 246.40),
    ("Society", 1864.22, 315.23),
    ("Life", 2015.60, 250.70),
    ("Sports", 2135.24, 236.56),
    ("Fashion", 1799.94, 190.29),
];

/// Published overall means: (articles, short-video texts).
pub const PUBLISHED_OVERALL_MEANS: (f64, f64) = (2044.54, 289.60);

/// Number of questionnaire passes after the 0th one in the canonical layout.
pub const CANONICAL_ITERATIONS: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("missing file: {}", .0.display())]
    Missing(PathBuf),
    #[error("i/o error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema violation in {} at {pointer}: {message}", .path.display())]
    Schema {
        path: PathBuf,
        pointer: String,
        message: String,
    },
    #[error("duplicate {kind} id {id:?} in {}", .path.display())]
    Duplicate {
        kind: &'static str,
        id: String,
        path: PathBuf,
    },
    #[error("unknown topic {0:?}")]
    UnknownTopic(String),
    #[error("cannot schedule topic {topic:?}: {reason}")]
    Schedule { topic: String, reason: String },
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// One long-form article per iteration.
    #[serde(rename = "a")]
    Articles,
    /// Ten short-video transcripts per iteration.
    #[serde(rename = "v")]
    Videos,
}

impl Variant {
    pub fn batch_size(self) -> usize {
        match self {
            Variant::Articles => 1,
            Variant::Videos => 10,
        }
    }

    pub fn modality(self) -> Modality {
        match self {
            Variant::Articles => Modality::Article,
            Variant::Videos => Modality::VideoText,
        }
    }

    /// Flow items per topic in the canonical layout.
    pub fn canonical_flow_count(self) -> usize {
        self.batch_size() * CANONICAL_ITERATIONS
    }

    pub fn code(self) -> &'static str {
        match self {
            Variant::Articles => "a",
            Variant::Videos => "v",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "a" => Ok(Variant::Articles),
            "v" => Ok(Variant::Videos),
            other => Err(format!("unknown variant {other:?} (expected \"a\" or \"v\")")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Article,
    VideoText,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    #[serde(skip)]
    pub topic_id: String,
    pub statement: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Questionnaire {
    pub topic_id: String,
    pub questions: Vec<Question>,
}

impl Questionnaire {
    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }
}

/// A persona document: the 22 canonical attributes in fixed order plus any
/// extra keys a generated or refined profile picked up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileDoc {
    attributes: IndexMap<String, String>,
    extras: IndexMap<String, String>,
}

/// What happened while normalizing free-form `Key: value` pairs into a profile.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProfileNormalization {
    /// Canonical keys that had no value in the input.
    pub missing: Vec<String>,
    /// Input keys that matched no canonical attribute.
    pub extras: Vec<String>,
}

impl ProfileNormalization {
    pub fn recovered(&self) -> usize {
        CANONICAL_KEYS.len() - self.missing.len()
    }
}

impl Default for ProfileDoc {
    fn default() -> Self {
        Self::empty()
    }
}

fn normalize_key(key: &str) -> String {
    key.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Maps a free-form key onto its canonical spelling, ignoring case and
/// internal whitespace.
pub fn canonical_key(key: &str) -> Option<&'static str> {
    let norm = normalize_key(key);
    CANONICAL_KEYS.iter().copied().find(|k| k.to_lowercase() == norm)
}

impl ProfileDoc {
    /// A profile with every canonical key present and empty.
    pub fn empty() -> Self {
        Self {
            attributes: CANONICAL_KEYS
                .iter()
                .map(|k| (k.to_string(), String::new()))
                .collect(),
            extras: IndexMap::new(),
        }
    }

    /// Builds a profile from ordered pairs. Canonical keys are matched
    /// case-insensitively; the first occurrence of a key wins.
    pub fn from_pairs<I, K, V>(pairs: I) -> (Self, ProfileNormalization)
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: Into<String>,
    {
        let mut doc = Self::empty();
        let mut seen: HashSet<&'static str> = HashSet::new();
        let mut report = ProfileNormalization::default();
        for (key, value) in pairs {
            let key = key.as_ref().trim();
            let value = value.into();
            match canonical_key(key) {
                Some(canon) => {
                    if seen.insert(canon) {
                        doc.attributes.insert(canon.to_string(), value);
                    }
                }
                None => {
                    if !doc.extras.contains_key(key) {
                        report.extras.push(key.to_string());
                        doc.extras.insert(key.to_string(), value);
                    }
                }
            }
        }
        report.missing = CANONICAL_KEYS
            .iter()
            .filter(|k| !seen.contains(*k))
            .map(|k| k.to_string())
            .collect();
        (doc, report)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        match canonical_key(key) {
            Some(canon) => self.attributes.get(canon).map(String::as_str),
            None => self.extras.get(key).map(String::as_str),
        }
    }

    /// Sets a canonical attribute (case-insensitive) or an extra.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        match canonical_key(key) {
            Some(canon) => {
                self.attributes.insert(canon.to_string(), value.into());
            }
            None => {
                self.extras.insert(key.to_string(), value.into());
            }
        }
    }

    pub fn attributes(&self) -> impl Iterator<Item = (&str, &str)> {
        self.attributes.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn extras(&self) -> &IndexMap<String, String> {
        &self.extras
    }

    /// All entries, canonical first, then extras.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.attributes
            .iter()
            .chain(self.extras.iter())
            .map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// `Key: value` lines in canonical order, extras last. This is the text
    /// substituted for `{profile}` in prompts.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            out.push_str(k);
            out.push(':');
            if !v.is_empty() {
                out.push(' ');
                out.push_str(v);
            }
            out.push('\n');
        }
        if out.ends_with('\n') {
            out.pop();
        }
        out
    }
}

impl Serialize for ProfileDoc {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(self.attributes.len() + self.extras.len()))?;
        for (k, v) in self.entries() {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for ProfileDoc {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = IndexMap::<String, String>::deserialize(deserializer)?;
        Ok(ProfileDoc::from_pairs(raw).0)
    }
}

/// A profile file as loaded from `profiles/<name>.json`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedProfile {
    pub name: String,
    pub profile: ProfileDoc,
    /// Canonical keys absent from the file; they are empty in `profile`.
    pub missing_keys: Vec<String>,
}

impl NamedProfile {
    /// The attribute map as it should appear on disk: keys that were
    /// absent from the source file stay absent.
    fn to_file_map(&self) -> IndexMap<&str, &str> {
        self.profile
            .entries()
            .filter(|(k, _)| !self.missing_keys.iter().any(|m| m == k))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfoItem {
    pub id: String,
    #[serde(skip)]
    pub topic_id: String,
    pub category: String,
    pub modality: Modality,
    pub text: String,
    #[serde(default)]
    pub word_count: Option<usize>,
}

impl InfoItem {
    pub fn words(&self) -> usize {
        self.word_count.unwrap_or_else(|| word_count(&self.text))
    }
}

/// Whitespace-delimited token count.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchmarkSet {
    pub name: String,
    pub variant: Variant,
    pub questionnaires: Vec<Questionnaire>,
    pub profiles: Vec<NamedProfile>,
    pub flows: IndexMap<String, Vec<InfoItem>>,
}

impl BenchmarkSet {
    pub fn questionnaire(&self, topic_id: &str) -> Option<&Questionnaire> {
        self.questionnaires.iter().find(|q| q.topic_id == topic_id)
    }

    pub fn profile(&self, name: &str) -> Option<&NamedProfile> {
        self.profiles.iter().find(|p| p.name == name)
    }

    pub fn topics(&self) -> impl Iterator<Item = &str> {
        self.questionnaires.iter().map(|q| q.topic_id.as_str())
    }

    pub fn flow(&self, topic_id: &str) -> &[InfoItem] {
        self.flows.get(topic_id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn flow_item(&self, topic_id: &str, id: &str) -> Option<&InfoItem> {
        self.flow(topic_id).iter().find(|i| i.id == id)
    }

    pub fn flow_count(&self) -> usize {
        self.flows.values().map(Vec::len).sum()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchHeader {
    name: String,
    variant: Variant,
}

#[derive(Serialize)]
struct BenchHeaderRef<'a> {
    name: &'a str,
    variant: Variant,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(BenchError::Missing(path.to_path_buf()))
        }
        Err(source) => {
            return Err(BenchError::Io {
                path: path.to_path_buf(),
                source,
            })
        }
    };
    let de = &mut serde_json::Deserializer::from_slice(&bytes);
    serde_path_to_error::deserialize(de).map_err(|err| BenchError::Schema {
        path: path.to_path_buf(),
        pointer: json_pointer(err.path()),
        message: err.into_inner().to_string(),
    })
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

fn list_dir(dir: &Path, want_dirs: bool) -> Result<Vec<PathBuf>> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let entries = fs::read_dir(dir).map_err(|source| BenchError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| BenchError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        let keep = if want_dirs {
            path.is_dir()
        } else {
            path.is_file() && path.extension().is_some_and(|e| e == "json")
        };
        if keep {
            out.push(path);
        }
    }
    out.sort_by_key(|p| sequence_key(p));
    Ok(out)
}

/// Sort key for corpus files: numeric stems in numeric order, before any
/// non-numeric stems in lexicographic order.
fn sequence_key(path: &Path) -> (u8, u64, String) {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    match stem.parse::<u64>() {
        Ok(n) => (0, n, stem),
        Err(_) => (1, 0, stem),
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Loads a benchmark root. Word counts absent from flow files are filled by
/// whitespace tokenization.
pub fn load_benchmark(root: impl AsRef<Path>) -> Result<BenchmarkSet> {
    let root = root.as_ref();
    let header: BenchHeader = read_json(&root.join("bench.json"))?;

    let mut questionnaires = Vec::new();
    let mut topic_ids = HashSet::new();
    for path in list_dir(&root.join("questionnaires"), false)? {
        let mut q: Questionnaire = read_json(&path)?;
        if !topic_ids.insert(q.topic_id.clone()) {
            return Err(BenchError::Duplicate {
                kind: "topic",
                id: q.topic_id,
                path,
            });
        }
        let mut seen = HashSet::new();
        for question in &mut q.questions {
            if !seen.insert(question.id.clone()) {
                return Err(BenchError::Duplicate {
                    kind: "question",
                    id: question.id.clone(),
                    path,
                });
            }
            question.topic_id = q.topic_id.clone();
        }
        questionnaires.push(q);
    }

    let mut profiles = Vec::new();
    for path in list_dir(&root.join("profiles"), false)? {
        let raw: IndexMap<String, String> = read_json(&path)?;
        let (profile, norm) = ProfileDoc::from_pairs(raw);
        profiles.push(NamedProfile {
            name: stem(&path),
            profile,
            missing_keys: norm.missing,
        });
    }

    let mut flows = IndexMap::new();
    for dir in list_dir(&root.join("flows"), true)? {
        let topic = stem(&dir);
        let mut items = Vec::new();
        let mut seen = HashSet::new();
        for path in list_dir(&dir, false)? {
            let mut item: InfoItem = read_json(&path)?;
            if !seen.insert(item.id.clone()) {
                return Err(BenchError::Duplicate {
                    kind: "flow",
                    id: item.id,
                    path,
                });
            }
            item.topic_id = topic.clone();
            if item.word_count.is_none() {
                item.word_count = Some(word_count(&item.text));
            }
            items.push(item);
        }
        flows.insert(topic, items);
    }

    Ok(BenchmarkSet {
        name: header.name,
        variant: header.variant,
        questionnaires,
        profiles,
        flows,
    })
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let io = |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io)?;
    }
    let mut text = serde_json::to_string_pretty(value).expect("benchmark types serialize");
    text.push('\n');
    fs::write(path, text).map_err(io)
}

/// Writes a benchmark in the layout [`load_benchmark`] reads. Flow files are
/// named by 1-based, zero-padded sequence number.
pub fn write_benchmark(bench: &BenchmarkSet, root: impl AsRef<Path>) -> Result<()> {
    let root = root.as_ref();
    write_json(
        &root.join("bench.json"),
        &BenchHeaderRef {
            name: &bench.name,
            variant: bench.variant,
        },
    )?;
    for q in &bench.questionnaires {
        write_json(&root.join("questionnaires").join(format!("{}.json", q.topic_id)), q)?;
    }
    for p in &bench.profiles {
        write_json(&root.join("profiles").join(format!("{}.json", p.name)), &p.to_file_map())?;
    }
    for (topic, items) in &bench.flows {
        for (seq, item) in items.iter().enumerate() {
            let path = root
                .join("flows")
                .join(topic)
                .join(format!("{:03}.json", seq + 1));
            write_json(&path, item)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IterationPlan {
    pub topic_id: String,
    /// Flow-item ids, one batch per iteration, in corpus order.
    pub batches: Vec<Vec<String>>,
}

impl IterationPlan {
    pub fn iterations(&self) -> usize {
        self.batches.len()
    }
}

/// Splits a topic's flow into per-iteration batches: one article per
/// iteration for variant `a`, ten video texts for variant `v`.
///
/// In strict mode the flow must fill exactly [`CANONICAL_ITERATIONS`] full
/// batches. Otherwise a short final batch is allowed.
pub fn plan_iterations(bench: &BenchmarkSet, topic_id: &str, strict: bool) -> Result<IterationPlan> {
    let items = bench
        .flows
        .get(topic_id)
        .map(Vec::as_slice)
        .or_else(|| bench.questionnaire(topic_id).map(|_| &[][..]))
        .ok_or_else(|| BenchError::UnknownTopic(topic_id.to_string()))?;
    let size = bench.variant.batch_size();
    if strict {
        let want = bench.variant.canonical_flow_count();
        if items.len() != want {
            return Err(BenchError::Schedule {
                topic: topic_id.to_string(),
                reason: format!(
                    "strict mode needs {want} items ({CANONICAL_ITERATIONS} batches of {size}), found {}",
                    items.len()
                ),
            });
        }
    }
    let batches = items
        .chunks(size)
        .map(|chunk| chunk.iter().map(|i| i.id.clone()).collect())
        .collect();
    Ok(IterationPlan {
        topic_id: topic_id.to_string(),
        batches,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryStats {
    pub category: String,
    pub items: usize,
    pub total_words: usize,
    pub mean_words: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct StatsTable {
    /// Categories in order of first appearance.
    pub rows: Vec<CategoryStats>,
    /// Grand mean over all items; absent for an empty corpus.
    pub overall_mean: Option<f64>,
    pub total_items: usize,
}

impl StatsTable {
    pub fn row(&self, category: &str) -> Option<&CategoryStats> {
        self.rows.iter().find(|r| r.category == category)
    }
}

impl fmt::Display for StatsTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<24} {:>8} {:>14}", "category", "items", "mean words")?;
        for row in &self.rows {
            writeln!(f, "{:<24} {:>8} {:>14.2}", row.category, row.items, row.mean_words)?;
        }
        if let Some(mean) = self.overall_mean {
            writeln!(f, "{:<24} {:>8} {:>14.2}", "Avg.", self.total_items, mean)?;
        }
        Ok(())
    }
}

/// Mean word count per category plus the grand mean over all items.
pub fn corpus_stats(bench: &BenchmarkSet) -> StatsTable {
    let mut acc: IndexMap<&str, (usize, usize)> = IndexMap::new();
    for item in bench.flows.values().flatten() {
        let entry = acc.entry(item.category.as_str()).or_default();
        entry.0 += 1;
        entry.1 += item.words();
    }
    let total_items: usize = acc.values().map(|(n, _)| n).sum();
    let total_words: usize = acc.values().map(|(_, w)| w).sum();
    let rows = acc
        .into_iter()
        .map(|(category, (items, words))| CategoryStats {
            category: category.to_string(),
            items,
            total_words: words,
            mean_words: words as f64 / items as f64,
        })
        .collect();
    StatsTable {
        rows,
        overall_mean: (total_items > 0).then(|| total_words as f64 / total_items as f64),
        total_items,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            location: location.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{}: {}", v.location, v.message)?;
        }
        Ok(())
    }
}

/// Collects every invariant violation in a loaded benchmark.
pub fn validate_benchmark(bench: &BenchmarkSet) -> ValidationReport {
    let mut report = ValidationReport::default();
    let expected_flows = bench.variant.canonical_flow_count();
    let modality = bench.variant.modality();

    for q in &bench.questionnaires {
        let loc = format!("questionnaires/{}", q.topic_id);
        if q.questions.is_empty() {
            report.push(&loc, "questionnaire has no questions");
        }
        for question in &q.questions {
            if question.statement.trim().is_empty() {
                report.push(format!("{loc}/{}", question.id), "empty statement");
            }
        }
        match bench.flows.get(&q.topic_id) {
            None => report.push(&loc, "topic has no information flow"),
            Some(items) if items.len() != expected_flows => report.push(
                format!("flows/{}", q.topic_id),
                format!(
                    "variant {} expects {expected_flows} items per topic, found {}",
                    bench.variant,
                    items.len()
                ),
            ),
            Some(_) => {}
        }
    }

    for (topic, items) in &bench.flows {
        if bench.questionnaire(topic).is_none() {
            report.push(format!("flows/{topic}"), "flow has no questionnaire");
        }
        for item in items {
            let loc = format!("flows/{topic}/{}", item.id);
            if item.text.trim().is_empty() {
                report.push(&loc, "empty text");
            }
            if item.modality != modality {
                report.push(
                    &loc,
                    format!("modality {:?} does not match variant {}", item.modality, bench.variant),
                );
            }
        }
    }

    for p in &bench.profiles {
        for key in &p.missing_keys {
            report.push(format!("profiles/{}", p.name), format!("missing canonical key {key:?}"));
        }
    }
    report
}
