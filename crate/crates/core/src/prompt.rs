//! Prompt templates, chat-turn formats and few-shot conversation assembly.
//!
//! Templates are plain text with `{abstract}`, `{introduction}` and
//! `{article}` placeholders; `{{` and `}}` stand for literal braces. The five
//! bundled templates live in `data/templates/`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateName {
    Initial,
    ArticleLlama,
    Persona,
    Intro,
    Guide,
}

impl TemplateName {
    pub const ALL: [TemplateName; 5] = [
        TemplateName::Initial,
        TemplateName::ArticleLlama,
        TemplateName::Persona,
        TemplateName::Intro,
        TemplateName::Guide,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TemplateName::Initial => "initial",
            TemplateName::ArticleLlama => "article_llama",
            TemplateName::Persona => "persona",
            TemplateName::Intro => "intro",
            TemplateName::Guide => "guide",
        }
    }

    /// The stored template text, byte for byte.
    pub fn source(&self) -> &'static str {
        match self {
            TemplateName::Initial => include_str!("../data/templates/initial.txt"),
            TemplateName::ArticleLlama => include_str!("../data/templates/article_llama.txt"),
            TemplateName::Persona => include_str!("../data/templates/persona.txt"),
            TemplateName::Intro => include_str!("../data/templates/intro.txt"),
            TemplateName::Guide => include_str!("../data/templates/guide.txt"),
        }
    }
}

impl fmt::Display for TemplateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TemplateName::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown template {s:?} (expected one of initial, article_llama, persona, intro, guide)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Field {
    Abstract,
    Introduction,
    Article,
}

impl Field {
    pub fn as_str(&self) -> &'static str {
        match self {
            Field::Abstract => "abstract",
            Field::Introduction => "introduction",
            Field::Article => "article",
        }
    }

    fn value<'a>(&self, doc: &'a Document) -> Option<&'a str> {
        match self {
            Field::Abstract => Some(&doc.abstract_text),
            Field::Introduction => doc.introduction.as_deref(),
            Field::Article => doc.article.as_deref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Literal(String),
    Placeholder(Field),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    name: String,
    segments: Vec<Segment>,
}

impl PromptTemplate {
    pub fn parse(name: impl Into<String>, body: &str) -> Result<Self> {
        let name = name.into();
        let bad = |what: String| Error::InvalidParameter(format!("template {name:?}: {what}"));
        let mut segments = Vec::new();
        let mut literal = String::new();
        let mut rest = body;
        while let Some(i) = rest.find(['{', '}']) {
            literal.push_str(&rest[..i]);
            let tail = &rest[i..];
            if let Some(after) = tail.strip_prefix("{{") {
                literal.push('{');
                rest = after;
            } else if let Some(after) = tail.strip_prefix("}}") {
                literal.push('}');
                rest = after;
            } else if tail.starts_with('}') {
                return Err(bad(format!(
                    "unmatched '}}' at byte {}",
                    body.len() - tail.len()
                )));
            } else {
                let end = tail
                    .find('}')
                    .ok_or_else(|| bad("unterminated placeholder".into()))?;
                let field = match &tail[1..end] {
                    "abstract" => Field::Abstract,
                    "introduction" => Field::Introduction,
                    "article" => Field::Article,
                    other => return Err(bad(format!("unknown placeholder {{{other}}}"))),
                };
                if !literal.is_empty() {
                    segments.push(Segment::Literal(std::mem::take(&mut literal)));
                }
                segments.push(Segment::Placeholder(field));
                rest = &tail[end + 1..];
            }
        }
        literal.push_str(rest);
        if !literal.is_empty() {
            segments.push(Segment::Literal(literal));
        }
        Ok(PromptTemplate { name, segments })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::parse(name, &body)
    }

    pub fn builtin(name: TemplateName) -> Self {
        Self::parse(name.as_str(), name.source()).expect("bundled templates parse")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Fields referenced by the template, in order of first use.
    pub fn fields(&self) -> Vec<Field> {
        let mut out = Vec::new();
        for s in &self.segments {
            if let Segment::Placeholder(f) = s {
                if !out.contains(f) {
                    out.push(*f);
                }
            }
        }
        out
    }

    pub fn render(&self, doc: &Document) -> Result<String> {
        let mut out = String::new();
        for segment in &self.segments {
            match segment {
                Segment::Literal(text) => out.push_str(text),
                Segment::Placeholder(field) => {
                    let value = field.value(doc).ok_or_else(|| Error::MissingField {
                        field: field.as_str().to_string(),
                        document: doc.id.clone(),
                    })?;
                    out.push_str(value);
                }
            }
        }
        Ok(out)
    }
}

pub fn render(template: &PromptTemplate, doc: &Document) -> Result<String> {
    template.render(doc)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChatTurnFormat {
    pub name: String,
    pub user_open: String,
    pub user_close: String,
    pub assistant_open: String,
    pub assistant_close: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_slot: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Turn {
    pub role: Role,
    pub text: String,
    /// False only for a trailing assistant turn awaiting generation.
    pub closed: bool,
}

impl ChatTurnFormat {
    fn validate(&self) -> Result<()> {
        let bad = |what: &str| {
            Err(Error::InvalidParameter(format!(
                "chat format {:?}: {what}",
                self.name
            )))
        };
        if self.name.trim().is_empty() {
            return bad("empty name");
        }
        if self.user_open.is_empty()
            || self.user_close.is_empty()
            || self.assistant_close.is_empty()
        {
            return bad("user_open, user_close and assistant_close must be non-empty");
        }
        if let Some(slot) = &self.system_slot {
            if slot.matches("{system}").count() != 1 {
                return bad("system_slot must contain {system} exactly once");
            }
        }
        Ok(())
    }

    pub fn builtin(name: &str) -> Result<Self> {
        builtin_formats()
            .remove(name)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown chat format {name:?}")))
    }

    /// Renders turns; an unclosed final assistant turn is left open.
    pub fn render(&self, turns: &[Turn]) -> String {
        let mut out = String::new();
        for turn in turns {
            match turn.role {
                Role::System => match &self.system_slot {
                    Some(slot) => out.push_str(&slot.replace("{system}", &turn.text)),
                    None => {
                        out.push_str(&self.user_open);
                        out.push_str(&turn.text);
                        out.push_str(&self.user_close);
                    }
                },
                Role::User => {
                    out.push_str(&self.user_open);
                    out.push_str(&turn.text);
                    out.push_str(&self.user_close);
                }
                Role::Assistant => {
                    out.push_str(&self.assistant_open);
                    out.push_str(&turn.text);
                    if turn.closed {
                        out.push_str(&self.assistant_close);
                    }
                }
            }
        }
        out
    }

    /// Recovers user/assistant turns from rendered text. Turn texts must not
    /// contain the delimiters that close them.
    pub fn parse(&self, text: &str) -> Result<Vec<Turn>> {
        let bad = |at: usize, what: &str| {
            Err(Error::InvalidParameter(format!(
                "chat format {:?}: {what} at byte {at}",
                self.name
            )))
        };
        let mut turns = Vec::new();
        let mut pos = 0;
        while pos < text.len() {
            let rest = &text[pos..];
            let Some(body) = rest.strip_prefix(self.user_open.as_str()) else {
                return bad(pos, "expected user turn");
            };
            let Some(end) = body.find(self.user_close.as_str()) else {
                return bad(pos, "unterminated user turn");
            };
            turns.push(Turn {
                role: Role::User,
                text: body[..end].to_string(),
                closed: true,
            });
            pos += self.user_open.len() + end + self.user_close.len();

            let rest = &text[pos..];
            let Some(body) = rest.strip_prefix(self.assistant_open.as_str()) else {
                return bad(pos, "expected assistant turn");
            };
            pos += self.assistant_open.len();
            match body.find(self.assistant_close.as_str()) {
                Some(end) => {
                    turns.push(Turn {
                        role: Role::Assistant,
                        text: body[..end].to_string(),
                        closed: true,
                    });
                    pos += end + self.assistant_close.len();
                }
                None => {
                    turns.push(Turn {
                        role: Role::Assistant,
                        text: body.to_string(),
                        closed: false,
                    });
                    pos = text.len();
                }
            }
        }
        Ok(turns)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FormatFile {
    format: Vec<ChatTurnFormat>,
}

pub fn parse_chat_formats(text: &str) -> Result<BTreeMap<String, ChatTurnFormat>> {
    let file: FormatFile =
        toml::from_str(text).map_err(|e| Error::InvalidParameter(format!("chat formats: {e}")))?;
    let mut out = BTreeMap::new();
    for format in file.format {
        format.validate()?;
        let name = format.name.clone();
        if out.insert(name.clone(), format).is_some() {
            return Err(Error::InvalidParameter(format!(
                "duplicate chat format {name:?}"
            )));
        }
    }
    Ok(out)
}

pub fn load_chat_formats(path: impl AsRef<Path>) -> Result<BTreeMap<String, ChatTurnFormat>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_chat_formats(&text)
}

pub fn builtin_formats() -> BTreeMap<String, ChatTurnFormat> {
    parse_chat_formats(include_str!("../data/chat_formats.toml")).expect("bundled formats parse")
}

/// Rendered exemplar prompts with their targets, and the query prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FewShotBundle {
    pub exemplars: Vec<(String, String)>,
    pub query: String,
}

impl FewShotBundle {
    pub fn build(
        template: &PromptTemplate,
        exemplars: &[(&Document, &str)],
        query: &Document,
    ) -> Result<Self> {
        if exemplars.is_empty() {
            return Err(Error::InvalidParameter(
                "few-shot assembly needs at least one exemplar; use the zero-shot prompt".into(),
            ));
        }
        let exemplars = exemplars
            .iter()
            .map(|(doc, target)| {
                if target.trim().is_empty() {
                    return Err(Error::MissingField {
                        field: "lay_summary".into(),
                        document: doc.id.clone(),
                    });
                }
                Ok((template.render(doc)?, target.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FewShotBundle {
            exemplars,
            query: template.render(query)?,
        })
    }

    pub fn turns(&self) -> Vec<Turn> {
        let mut turns = Vec::with_capacity(2 * self.exemplars.len() + 2);
        for (prompt, target) in &self.exemplars {
            turns.push(Turn {
                role: Role::User,
                text: prompt.clone(),
                closed: true,
            });
            turns.push(Turn {
                role: Role::Assistant,
                text: target.clone(),
                closed: true,
            });
        }
        turns.push(Turn {
            role: Role::User,
            text: self.query.clone(),
            closed: true,
        });
        turns.push(Turn {
            role: Role::Assistant,
            text: String::new(),
            closed: false,
        });
        turns
    }

    pub fn render(&self, format: &ChatTurnFormat) -> String {
        format.render(&self.turns())
    }
}

/// Exemplars as earlier user/assistant exchanges, then the query as the last
/// user turn followed by an open assistant turn.
pub fn assemble_fewshot(
    template: &PromptTemplate,
    exemplars: &[(&Document, &str)],
    query: &Document,
    format: &ChatTurnFormat,
) -> Result<String> {
    Ok(FewShotBundle::build(template, exemplars, query)?.render(format))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecodingStrategy {
    Greedy,
}

/// Generation settings exported for whatever system runs the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferencePreset {
    pub strategy: DecodingStrategy,
    pub max_new_tokens: u32,
    pub repetition_penalty: f64,
}

pub fn inference_presets() -> BTreeMap<&'static str, InferencePreset> {
    let greedy = |repetition_penalty| InferencePreset {
        strategy: DecodingStrategy::Greedy,
        max_new_tokens: 1024,
        repetition_penalty,
    };
    BTreeMap::from([("standard", greedy(1.0)), ("des_alternate", greedy(1.1))])
}
