//! Prompt templates, placeholder rendering, and parsers for the structured
//! replies each prompt asks for.
//!
//! The five cognitive-mechanism and benchmark-construction templates are
//! fixed texts: their SHA-256 digests are compiled in and every load checks
//! them. The baseline-agent scaffolds are editable and unchecked.
//!
//! Parsers are tolerant of the usual model drift (header casing, markdown
//! emphasis, code fences, `4/5` style ratings) and return typed errors on
//! anything they cannot recover. They never panic.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::bench_model::ProfileDoc;

#[derive(Debug, thiserror::Error)]
pub enum TemplateError {
    #[error("unknown template id {0:?}")]
    UnknownTemplate(String),
    #[error("template {template} needs a binding for {{{placeholder}}}")]
    MissingBinding {
        template: String,
        placeholder: String,
    },
    #[error("template {id} digest mismatch: expected {expected}, found {actual}")]
    Digest {
        id: TemplateId,
        expected: &'static str,
        actual: String,
    },
    #[error("i/o error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("reply has no {0:?} header")]
    MissingHeader(&'static str),
    #[error("updated profile contains no canonical attribute")]
    NoCanonicalKeys,
    #[error("reply contains no JSON array")]
    NoJsonArray,
    #[error("knowledge element {index}: {message}")]
    Element { index: usize, message: String },
    #[error("knowledge element {index}: score {score} outside 1-5")]
    ScoreRange { index: usize, score: i64 },
    #[error("no rating between 1 and 5 after \"Rating:\"")]
    NoRating,
    #[error("reply contains no complete opinion block")]
    NoCompleteBlocks,
}

/// Every template the agents and generators use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    ProfileUpdate,
    KnowledgeDistill,
    Interpret,
    QuestionnaireDesign,
    ProfileCreate,
    CotAnswer,
    ReactAnswer,
    ReflexionReflect,
    ReflexionAnswer,
}

/// Placeholder names a template may contain. Any other `{word}` is literal text.
pub const PLACEHOLDERS: [&str; 9] = [
    "profile",
    "memory",
    "question",
    "topic",
    "character",
    "information",
    "feedback",
    "previous",
    "reflection",
];

impl TemplateId {
    pub const ALL: [TemplateId; 9] = [
        TemplateId::ProfileUpdate,
        TemplateId::KnowledgeDistill,
        TemplateId::Interpret,
        TemplateId::QuestionnaireDesign,
        TemplateId::ProfileCreate,
        TemplateId::CotAnswer,
        TemplateId::ReactAnswer,
        TemplateId::ReflexionReflect,
        TemplateId::ReflexionAnswer,
    ];

    /// The five digest-checked templates.
    pub const FIXED: [TemplateId; 5] = [
        TemplateId::ProfileUpdate,
        TemplateId::KnowledgeDistill,
        TemplateId::Interpret,
        TemplateId::QuestionnaireDesign,
        TemplateId::ProfileCreate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::ProfileUpdate => "profile_update",
            TemplateId::KnowledgeDistill => "knowledge_distill",
            TemplateId::Interpret => "interpret",
            TemplateId::QuestionnaireDesign => "questionnaire_design",
            TemplateId::ProfileCreate => "profile_create",
            TemplateId::CotAnswer => "cot_answer",
            TemplateId::ReactAnswer => "react_answer",
            TemplateId::ReflexionReflect => "reflexion_reflect",
            TemplateId::ReflexionAnswer => "reflexion_answer",
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.txt", self.as_str())
    }

    /// Compiled-in SHA-256 of the fixed templates; `None` for editable scaffolds.
    pub fn expected_digest(self) -> Option<&'static str> {
        match self {
            TemplateId::ProfileUpdate => {
                Some("4ab967ddfdc0dc53f57444b346850fcded63831de92cd5d4d58b792186972403")
            }
            TemplateId::KnowledgeDistill => {
                Some("c7bc71163b78d0e053de2cbc42738dcf98a0158e5a9991bbf4b0f3bf8c5178c1")
            }
            TemplateId::Interpret => {
                Some("f03265465f029cc10de6a3539a47749fd938aeadfc9c5869b8832d742105741f")
            }
            TemplateId::QuestionnaireDesign => {
                Some("f7c0d700e5aa5aa22b7322e83024b709efff665c85dd45fd506abf0d0e30127f")
            }
            TemplateId::ProfileCreate => {
                Some("0230d0cf61e8f1b407061667a8af046618abb691bfc1d48d2a2c84a0bec287df")
            }
            _ => None,
        }
    }

    fn builtin_body(self) -> &'static str {
        match self {
            TemplateId::ProfileUpdate => include_str!("../templates/profile_update.txt"),
            TemplateId::KnowledgeDistill => include_str!("../templates/knowledge_distill.txt"),
            TemplateId::Interpret => include_str!("../templates/interpret.txt"),
            TemplateId::QuestionnaireDesign => include_str!("../templates/questionnaire_design.txt"),
            TemplateId::ProfileCreate => include_str!("../templates/profile_create.txt"),
            TemplateId::CotAnswer => include_str!("../templates/cot_answer.txt"),
            TemplateId::ReactAnswer => include_str!("../templates/react_answer.txt"),
            TemplateId::ReflexionReflect => include_str!("../templates/reflexion_reflect.txt"),
            TemplateId::ReflexionAnswer => include_str!("../templates/reflexion_answer.txt"),
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TemplateId {
    type Err = TemplateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TemplateId::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| TemplateError::UnknownTemplate(s.to_string()))
    }
}

/// Lowercase hex SHA-256.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// A verified set of template bodies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    bodies: HashMap<TemplateId, String>,
}

impl TemplateSet {
    /// The compiled-in templates, digest-checked.
    pub fn builtin() -> Result<Self, TemplateError> {
        let bodies = TemplateId::ALL
            .into_iter()
            .map(|id| (id, id.builtin_body().to_string()))
            .collect();
        let set = Self { bodies };
        set.verify()?;
        Ok(set)
    }

    /// Loads `<id>.txt` files from a directory. Fixed templates must be
    /// present and match their digests; missing scaffolds fall back to the
    /// compiled-in versions.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, TemplateError> {
        let dir = dir.as_ref();
        let mut bodies = HashMap::new();
        for id in TemplateId::ALL {
            let path = dir.join(id.file_name());
            let body = match fs::read_to_string(&path) {
                Ok(body) => body,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound && id.expected_digest().is_none() => {
                    id.builtin_body().to_string()
                }
                Err(source) => return Err(TemplateError::Io { path, source }),
            };
            bodies.insert(id, body);
        }
        let set = Self { bodies };
        set.verify()?;
        Ok(set)
    }

    /// Checks every fixed template against its compiled-in digest.
    pub fn verify(&self) -> Result<(), TemplateError> {
        for id in TemplateId::FIXED {
            let expected = id.expected_digest().expect("fixed templates carry digests");
            let actual = sha256_hex(self.body(id).as_bytes());
            if actual != expected {
                return Err(TemplateError::Digest {
                    id,
                    expected,
                    actual,
                });
            }
        }
        Ok(())
    }

    pub fn body(&self, id: TemplateId) -> &str {
        self.bodies.get(&id).map(String::as_str).unwrap_or_else(|| id.builtin_body())
    }

    /// Replaces a scaffold body. Fixed templates cannot be overridden.
    pub fn set_scaffold(&mut self, id: TemplateId, body: String) -> Result<(), TemplateError> {
        if let Some(expected) = id.expected_digest() {
            return Err(TemplateError::Digest {
                id,
                expected,
                actual: sha256_hex(body.as_bytes()),
            });
        }
        self.bodies.insert(id, body);
        Ok(())
    }

    pub fn render(&self, id: TemplateId, bindings: &[(&str, &str)]) -> Result<String, TemplateError> {
        render_body(id.as_str(), self.body(id), bindings)
    }
}

fn placeholder_at(body: &str, start: usize) -> Option<&str> {
    let rest = &body[start + 1..];
    let end = rest.find('}')?;
    let name = &rest[..end];
    PLACEHOLDERS.contains(&name).then_some(name)
}

/// Names of the placeholders a body uses, in order of first appearance.
pub fn placeholders_in(body: &str) -> Vec<&str> {
    let mut out: Vec<&str> = Vec::new();
    for (i, _) in body.match_indices('{') {
        if let Some(name) = placeholder_at(body, i) {
            if !out.contains(&name) {
                out.push(name);
            }
        }
    }
    out
}

/// Substitutes every `{name}` placeholder in one left-to-right pass; bound
/// text is never rescanned. Braces that do not form a known placeholder are
/// copied through.
pub fn render_body(template: &str, body: &str, bindings: &[(&str, &str)]) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(body.len());
    let mut last = 0;
    for (i, _) in body.match_indices('{') {
        if i < last {
            continue;
        }
        let Some(name) = placeholder_at(body, i) else {
            continue;
        };
        let value = bindings
            .iter()
            .find(|(k, _)| *k == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| TemplateError::MissingBinding {
                template: template.to_string(),
                placeholder: name.to_string(),
            })?;
        out.push_str(&body[last..i]);
        out.push_str(value);
        last = i + name.len() + 2;
    }
    out.push_str(&body[last..]);
    Ok(out)
}

/// Iterates lines with their byte offsets.
fn lines_with_offsets(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut offset = 0;
    text.split_inclusive('\n').map(move |line| {
        let start = offset;
        offset += line.len();
        (start, line)
    })
}

fn decoration_len(line: &str) -> usize {
    line.len() - line.trim_start_matches(|c: char| c.is_whitespace() || c == '*' || c == '#' || c == '_').len()
}

/// Finds `header` (ASCII, ending in ':') at the start of a line at or after
/// `from`, ignoring case and leading markdown. Returns the line start and the
/// offset where the header's content begins.
fn find_header(text: &str, header: &str, from: usize) -> Option<(usize, usize)> {
    for (start, line) in lines_with_offsets(text) {
        if start < from {
            continue;
        }
        let skip = decoration_len(line);
        let rest = &line[skip..];
        if rest.len() >= header.len()
            && rest.is_char_boundary(header.len())
            && rest[..header.len()].eq_ignore_ascii_case(header)
        {
            let mut content = start + skip + header.len();
            let tail = &text[content..];
            content += tail.len() - tail.trim_start_matches(['*', '_']).len();
            return Some((start, content));
        }
    }
    None
}

/// Result of parsing a profile-update reply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedProfileUpdate {
    pub assessments: String,
    pub thoughts: String,
    pub updated_profile: ProfileDoc,
    /// Canonical keys the reply did not mention.
    pub missing_keys: Vec<String>,
    pub warnings: Vec<String>,
}

/// Longest attribute value the profile-update rules ask for.
pub const PROFILE_VALUE_LIMIT: usize = 30;

/// Parses `Key: value` lines. Lines without a colon are ignored; list
/// bullets are stripped.
pub fn parse_profile_lines(block: &str) -> Vec<(String, String)> {
    block
        .lines()
        .filter_map(|line| {
            let line = line.trim().trim_start_matches(['-', '*', '•']).trim_start();
            let (key, value) = line.split_once(':')?;
            let key = key.trim().trim_matches(['*', '_']).trim();
            if key.is_empty() {
                return None;
            }
            let value = value.trim().trim_start_matches(['*', '_']).trim();
            Some((key.to_string(), value.to_string()))
        })
        .collect()
}

pub fn parse_profile_update(text: &str) -> Result<ParsedProfileUpdate, ParseError> {
    let (_, a_content) = find_header(text, "Assessments:", 0).ok_or(ParseError::MissingHeader("Assessments:"))?;
    let (t_line, t_content) =
        find_header(text, "Thoughts:", a_content).ok_or(ParseError::MissingHeader("Thoughts:"))?;
    let (u_line, u_content) =
        find_header(text, "Updated Profile:", t_content).ok_or(ParseError::MissingHeader("Updated Profile:"))?;

    let assessments = text[a_content..t_line].trim().to_string();
    let thoughts = text[t_content..u_line].trim().to_string();
    let pairs = parse_profile_lines(&text[u_content..]);
    let (updated_profile, norm) = ProfileDoc::from_pairs(pairs);
    if norm.recovered() == 0 {
        return Err(ParseError::NoCanonicalKeys);
    }

    let mut warnings = Vec::new();
    for key in &norm.extras {
        warnings.push(format!("non-canonical profile key {key:?} kept as extra"));
    }
    for (key, value) in updated_profile.entries() {
        let chars = value.chars().count();
        if chars >= PROFILE_VALUE_LIMIT {
            warnings.push(format!("value of {key:?} is {chars} characters (limit {PROFILE_VALUE_LIMIT})"));
        }
    }
    for w in &warnings {
        log::warn!("profile update: {w}");
    }
    Ok(ParsedProfileUpdate {
        assessments,
        thoughts,
        updated_profile,
        missing_keys: norm.missing,
        warnings,
    })
}

/// One distilled statement with its 1-5 score.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeDraft {
    pub thoughts: String,
    pub knowledge: String,
    pub score: u8,
}

/// What to do with a knowledge element whose score is outside 1-5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScorePolicy {
    #[default]
    Fail,
    Skip,
}

/// The first JSON array that starts at some `[` in `text`, parsed as a
/// prefix so trailing prose and closing fences are ignored.
fn first_json_array(text: &str) -> Option<Vec<Value>> {
    text.match_indices('[').find_map(|(i, _)| {
        let mut stream = serde_json::Deserializer::from_str(&text[i..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(Value::Array(items))) => Some(items),
            _ => None,
        }
    })
}

fn element_text(obj: &serde_json::Map<String, Value>, key: &str, index: usize) -> Result<String, ParseError> {
    match obj.get(key) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(other) => Err(ParseError::Element {
            index,
            message: format!("{key:?} is not a string: {other}"),
        }),
        None => Err(ParseError::Element {
            index,
            message: format!("missing key {key:?}"),
        }),
    }
}

fn element_score(obj: &serde_json::Map<String, Value>, index: usize) -> Result<i64, ParseError> {
    let bad = |v: &Value| ParseError::Element {
        index,
        message: format!("\"score\" is not an integer: {v}"),
    };
    match obj.get("score") {
        None => Err(ParseError::Element {
            index,
            message: "missing key \"score\"".into(),
        }),
        Some(v @ Value::Number(n)) => match (n.as_i64(), n.as_f64()) {
            (Some(i), _) => Ok(i),
            (None, Some(f)) if f.fract() == 0.0 && f.abs() < 1e15 => Ok(f as i64),
            _ => Err(bad(v)),
        },
        Some(v @ Value::String(s)) => s.trim().parse().map_err(|_| bad(v)),
        Some(v) => Err(bad(v)),
    }
}

/// Extracts knowledge drafts from the first JSON array in a reply.
pub fn parse_knowledge_list(text: &str, policy: ScorePolicy) -> Result<Vec<KnowledgeDraft>, ParseError> {
    let array = first_json_array(text).ok_or(ParseError::NoJsonArray)?;

    let mut drafts = Vec::with_capacity(array.len());
    for (index, item) in array.iter().enumerate() {
        let obj = item.as_object().ok_or_else(|| ParseError::Element {
            index,
            message: "not a JSON object".into(),
        })?;
        let thoughts = element_text(obj, "thoughts", index)?;
        let knowledge = element_text(obj, "knowledge", index)?;
        if knowledge.trim().is_empty() {
            return Err(ParseError::Element {
                index,
                message: "empty knowledge statement".into(),
            });
        }
        let score = element_score(obj, index)?;
        if !(1..=5).contains(&score) {
            match policy {
                ScorePolicy::Fail => return Err(ParseError::ScoreRange { index, score }),
                ScorePolicy::Skip => {
                    log::warn!("skipping knowledge element {index}: score {score} outside 1-5");
                    continue;
                }
            }
        }
        drafts.push(KnowledgeDraft {
            thoughts,
            knowledge,
            score: score as u8,
        });
    }
    Ok(drafts)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedInterpretation {
    pub thoughts: String,
    pub rating: u8,
}

fn integers(text: &str) -> impl Iterator<Item = u64> + '_ {
    text.split(|c: char| !c.is_ascii_digit())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<u64>().unwrap_or(u64::MAX))
}

/// Parses `Thoughts: ... Rating: n`. The rating is the first integer in 1-5
/// on a `Rating:` line (or the next non-empty line when that is blank).
/// A `Rating:` line without one, as in an echoed response format, is
/// passed over in favour of a later one. Thoughts run from the last
/// `Thoughts:` header before the chosen rating line.
pub fn parse_interpretation(text: &str) -> Result<ParsedInterpretation, ParseError> {
    let mut from = 0;
    let mut seen = false;
    let (r_line, rating) = loop {
        let Some((line, content)) = find_header(text, "Rating:", from) else {
            return Err(if seen {
                ParseError::NoRating
            } else {
                ParseError::MissingHeader("Rating:")
            });
        };
        seen = true;
        let rating_line = text[content..]
            .lines()
            .map(str::trim)
            .find(|l| !l.is_empty())
            .unwrap_or("");
        if let Some(r) = integers(rating_line).find(|n| (1..=5).contains(n)) {
            break (line, r as u8);
        }
        from = content;
    };

    let before = &text[..r_line];
    let mut thoughts = before;
    let mut from = 0;
    while let Some((_, t_content)) = find_header(before, "Thoughts:", from) {
        thoughts = &before[t_content..];
        from = t_content;
    }
    Ok(ParsedInterpretation {
        thoughts: thoughts.trim().to_string(),
        rating,
    })
}

/// Parses the `Reflection:` section of a self-reflection reply, falling back
/// to the whole reply when the header is absent.
pub fn parse_reflection(text: &str) -> String {
    match find_header(text, "Reflection:", 0) {
        Some((_, content)) => text[content..].trim().to_string(),
        None => text.trim().to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpinionEntry {
    pub number: u32,
    pub perspective: String,
    pub opinion: String,
    pub supporters: Vec<String>,
    pub reasons: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OpinionSet {
    pub entries: Vec<OpinionEntry>,
}

impl OpinionSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Splits a supporters field on commas, trimming and dropping empties.
pub fn split_supporters(field: &str) -> Vec<String> {
    field
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

const OPINION_FIELDS: [&str; 5] = ["Number:", "Perspective:", "Opinion:", "Supporters:", "Reasons:"];

fn opinion_field(line: &str) -> Option<(usize, &str)> {
    let rest = &line[decoration_len(line)..];
    OPINION_FIELDS.iter().enumerate().find_map(|(i, h)| {
        (rest.len() >= h.len() && rest.is_char_boundary(h.len()) && rest[..h.len()].eq_ignore_ascii_case(h))
            .then(|| (i, rest[h.len()..].trim_start_matches(['*', '_']).trim()))
    })
}

fn finish_block(fields: &mut [Option<String>; 5], set: &mut OpinionSet) {
    let taken: Vec<Option<String>> = fields.iter_mut().map(Option::take).collect();
    let [Some(number), Some(perspective), Some(opinion), Some(supporters), Some(reasons)] =
        <[Option<String>; 5]>::try_from(taken).expect("five fields")
    else {
        return;
    };
    let Some(number) = integers(&number).next().and_then(|n| u32::try_from(n).ok()) else {
        log::warn!("opinion block with non-numeric number {number:?} skipped");
        return;
    };
    if set.entries.iter().any(|e| e.number == number) {
        log::warn!("duplicate opinion number {number} skipped");
        return;
    }
    set.entries.push(OpinionEntry {
        number,
        perspective: perspective.trim().to_string(),
        opinion: opinion.trim().to_string(),
        supporters: split_supporters(&supporters),
        reasons: reasons.trim().to_string(),
    });
}

/// Parses repeated `Number/Perspective/Opinion/Supporters/Reasons` blocks.
/// Incomplete blocks are skipped.
pub fn parse_opinion_set(text: &str) -> Result<OpinionSet, ParseError> {
    let mut set = OpinionSet::default();
    let mut fields: [Option<String>; 5] = Default::default();
    let mut current: Option<usize> = None;
    for line in text.lines() {
        match opinion_field(line) {
            Some((0, value)) => {
                finish_block(&mut fields, &mut set);
                fields[0] = Some(value.to_string());
                current = Some(0);
            }
            Some((i, value)) => {
                fields[i] = Some(value.to_string());
                current = Some(i);
            }
            None => {
                if let Some(field) = current.and_then(|i| fields[i].as_mut()) {
                    let line = line.trim();
                    if !line.is_empty() {
                        if !field.is_empty() {
                            field.push(' ');
                        }
                        field.push_str(line);
                    }
                }
            }
        }
    }
    finish_block(&mut fields, &mut set);
    if set.entries.is_empty() {
        return Err(ParseError::NoCompleteBlocks);
    }
    Ok(set)
}
