//! Prompt construction for LLM-based correction (two-stage chain-of-thought
//! and expert prompts), response parsing, provider access and
//! instruction-tuning records.

mod gateway;
mod instruct;
mod provider;
mod templates;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Sentence;
use crate::taxonomy::{Coarse, ErrorClass};

pub use gateway::{
    correct_cot, correct_with_provider, Clock, Gateway, GatewayError, Limiter, ManualClock, Permit,
    RetryPolicy, SystemClock, TranscriptCache,
};
pub use instruct::{
    build_instruction_records, records_to_jsonl, InstructionRecord, DEFAULT_INSTRUCTIONS,
    RECORD_PREAMBLE,
};
#[cfg(feature = "http")]
pub use provider::HttpProvider;
pub use provider::{FileProvider, Provider, ProviderConfig, ProviderError, ScriptedProvider};
pub use templates::{TemplateError, TemplateSet, TEMPLATE_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Message {
            role,
            content: content.into(),
        }
    }
}

/// Sampling settings passed to the provider. `num_beams` is provider
/// dependent and ignored by chat backends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodingParams {
    pub temperature: f64,
    pub top_p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_beams: Option<u32>,
}

impl DecodingParams {
    pub fn greedy() -> Self {
        DecodingParams {
            temperature: 0.0,
            top_p: 1.0,
            top_k: None,
            num_beams: None,
        }
    }

    pub fn beam() -> Self {
        DecodingParams {
            temperature: 1.0,
            top_p: 1.0,
            top_k: None,
            num_beams: Some(5),
        }
    }

    pub fn top_p() -> Self {
        DecodingParams {
            temperature: 0.8,
            top_p: 0.8,
            top_k: Some(75),
            num_beams: None,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "greedy" => Some(Self::greedy()),
            "beam" => Some(Self::beam()),
            "top-p" => Some(Self::top_p()),
            _ => None,
        }
    }
}

impl Default for DecodingParams {
    fn default() -> Self {
        DecodingParams::greedy()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRequest {
    pub messages: Vec<Message>,
    pub decoding: DecodingParams,
    pub template_id: String,
    pub template_version: String,
}

impl PromptRequest {
    /// Human-readable dump used for golden files.
    pub fn render(&self) -> String {
        let mut out = format!(
            "# template {} {}\n",
            self.template_id, self.template_version
        );
        for m in &self.messages {
            out.push_str(&format!("\n### {}\n{}\n", m.role, m.content));
        }
        out
    }

    pub fn final_user(&self) -> Option<&Message> {
        self.messages.iter().rev().find(|m| m.role == Role::User)
    }

    /// Text of the single `<input>` block in the final user message.
    pub fn query_input(&self) -> Option<&str> {
        let user = self.final_user()?;
        let start = user.content.find(INPUT_OPEN)? + INPUT_OPEN.len();
        let len = user.content[start..].find(INPUT_CLOSE)?;
        Some(&user.content[start..start + len])
    }

    pub fn check(&self) -> Result<(), PromptError> {
        let user = self
            .final_user()
            .ok_or(PromptError::Malformed("no user message"))?;
        if user.content.matches(INPUT_OPEN).count() != 1
            || user.content.matches(INPUT_CLOSE).count() != 1
        {
            return Err(PromptError::Malformed(
                "final user message must hold exactly one <input> block",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotExemplar {
    pub id: String,
    pub erroneous: Sentence,
    pub corrected: Sentence,
}

impl FewShotExemplar {
    pub fn new(id: impl Into<String>, erroneous: Sentence, corrected: Sentence) -> Self {
        FewShotExemplar {
            id: id.into(),
            erroneous,
            corrected,
        }
    }
}

/// Fails if any exemplar id is also an evaluation id.
pub fn check_exemplar_pool(
    exemplars: &[FewShotExemplar],
    eval_ids: &HashSet<String>,
) -> Result<(), PromptError> {
    match exemplars.iter().find(|e| eval_ids.contains(&e.id)) {
        Some(e) => Err(PromptError::ExemplarLeak(e.id.clone())),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CotStage {
    Reasoning,
    Answer,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("few-shot prompts need at least one exemplar")]
    NoExemplars,
    #[error("the answer stage needs the reasoning produced by the first stage")]
    MissingReasoning,
    #[error("the expert prompt needs a non-empty taxonomy")]
    EmptyTaxonomy,
    #[error("exemplar {0:?} is also part of the evaluation data")]
    ExemplarLeak(String),
    #[error("malformed prompt: {0}")]
    Malformed(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("response has no <output>...</output> block: {raw:?}")]
    Unparseable { raw: String },
    #[error("response has an empty <output> block: {raw:?}")]
    EmptyOutput { raw: String },
}

impl ParseError {
    pub fn raw(&self) -> &str {
        match self {
            ParseError::Unparseable { raw } | ParseError::EmptyOutput { raw } => raw,
        }
    }
}

pub const INPUT_OPEN: &str = "<input>";
pub const INPUT_CLOSE: &str = "</input>";
pub const OUTPUT_OPEN: &str = "<output>";
pub const OUTPUT_CLOSE: &str = "</output>";

pub fn wrap_input(s: &Sentence) -> String {
    format!("{INPUT_OPEN}{s}{INPUT_CLOSE}")
}

pub fn wrap_output(s: &Sentence) -> String {
    format!("{OUTPUT_OPEN}{s}{OUTPUT_CLOSE}")
}

/// Extracts the first closed `<output>` block: the earliest `</output>` and
/// the nearest `<output>` before it. Text around the block is ignored.
pub fn parse_response(text: &str) -> Result<Sentence, ParseError> {
    let unparseable = || ParseError::Unparseable {
        raw: text.to_string(),
    };
    let close = text.find(OUTPUT_CLOSE).ok_or_else(unparseable)?;
    let open = text[..close].rfind(OUTPUT_OPEN).ok_or_else(unparseable)?;
    let body = text[open + OUTPUT_OPEN.len()..close].trim();
    if body.is_empty() {
        return Err(ParseError::EmptyOutput {
            raw: text.to_string(),
        });
    }
    Ok(Sentence::from_text(body))
}

/// One line per coarse class present, listing its codes and descriptions.
pub fn render_taxonomy(classes: &[ErrorClass]) -> String {
    let mut out = String::new();
    for coarse in Coarse::ALL {
        let members: Vec<&ErrorClass> = classes.iter().filter(|c| c.coarse() == coarse).collect();
        if members.is_empty() {
            continue;
        }
        let mut codes: Vec<String> = members
            .iter()
            .filter_map(|c| c.fine())
            .map(|f| format!("{} ({})", f.as_str(), f.description()))
            .collect();
        codes.dedup();
        if codes.is_empty() {
            out.push_str(&format!("- {}\n", coarse.name()));
        } else {
            out.push_str(&format!("- {}: {}\n", coarse.name(), codes.join(", ")));
        }
    }
    out
}

fn taxonomy_block(heading: &str, classes: &[ErrorClass]) -> String {
    if classes.is_empty() {
        String::new()
    } else {
        format!("{heading}\n{}", render_taxonomy(classes))
    }
}

fn exemplar_messages(exemplars: &[FewShotExemplar]) -> Vec<Message> {
    exemplars
        .iter()
        .flat_map(|e| {
            [
                Message::new(Role::User, wrap_input(&e.erroneous)),
                Message::new(Role::Assistant, wrap_output(&e.corrected)),
            ]
        })
        .collect()
}

/// Prompt builders bound to a template set and decoding settings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Prompts {
    pub templates: TemplateSet,
    pub decoding: DecodingParams,
}

impl Prompts {
    fn request(&self, id: &str, messages: Vec<Message>) -> PromptRequest {
        PromptRequest {
            messages,
            decoding: self.decoding,
            template_id: id.to_string(),
            template_version: self.templates.version.clone(),
        }
    }

    pub fn cot(
        &self,
        source: &Sentence,
        exemplars: &[FewShotExemplar],
        stage: CotStage,
        prior_reasoning: Option<&str>,
    ) -> Result<PromptRequest, PromptError> {
        if exemplars.is_empty() {
            return Err(PromptError::NoExemplars);
        }
        let t = &self.templates;
        let src = source.to_text();
        let mut messages = vec![Message::new(Role::System, t.fill(&t.cot_system, &[]))];
        messages.extend(exemplar_messages(exemplars));
        messages.push(Message::new(
            Role::User,
            t.fill(&t.cot_reasoning, &[("source", &src)]),
        ));
        let id = match stage {
            CotStage::Reasoning => "cot-reasoning",
            CotStage::Answer => {
                let reasoning = prior_reasoning.ok_or(PromptError::MissingReasoning)?;
                messages.push(Message::new(Role::Assistant, reasoning.trim()));
                messages.push(Message::new(
                    Role::User,
                    t.fill(&t.cot_answer, &[("source", &src)]),
                ));
                "cot-answer"
            }
        };
        Ok(self.request(id, messages))
    }

    pub fn expert(
        &self,
        source: &Sentence,
        exemplars: &[FewShotExemplar],
        taxonomy: &[ErrorClass],
    ) -> Result<PromptRequest, PromptError> {
        if taxonomy.is_empty() {
            return Err(PromptError::EmptyTaxonomy);
        }
        let t = &self.templates;
        let block = taxonomy_block("Errors fall into these types:", taxonomy);
        let mut messages = vec![Message::new(
            Role::System,
            t.fill(&t.expert_system, &[("taxonomy_block", &block)]),
        )];
        messages.extend(exemplar_messages(exemplars));
        messages.push(Message::new(
            Role::User,
            t.fill(&t.expert_query, &[("source", &source.to_text())]),
        ));
        Ok(self.request("expert", messages))
    }

    /// Clean sentence in, LLM-corrupted sentence expected back.
    pub fn corruption(&self, clean: &Sentence, taxonomy_subset: &[ErrorClass]) -> PromptRequest {
        let t = &self.templates;
        let block = taxonomy_block("Introduce only errors of these types:", taxonomy_subset);
        let messages = vec![
            Message::new(
                Role::System,
                t.fill(&t.corrupt_system, &[("taxonomy_block", &block)]),
            ),
            Message::new(
                Role::User,
                t.fill(&t.corrupt_query, &[("source", &clean.to_text())]),
            ),
        ];
        self.request("corrupt", messages)
    }
}

pub fn build_cot_prompt(
    source: &Sentence,
    exemplars: &[FewShotExemplar],
    stage: CotStage,
    prior_reasoning: Option<&str>,
) -> Result<PromptRequest, PromptError> {
    Prompts::default().cot(source, exemplars, stage, prior_reasoning)
}

pub fn build_expert_prompt(
    source: &Sentence,
    exemplars: &[FewShotExemplar],
    taxonomy: &[ErrorClass],
) -> Result<PromptRequest, PromptError> {
    Prompts::default().expert(source, exemplars, taxonomy)
}
