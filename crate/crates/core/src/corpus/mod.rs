//! Tokens, sentences, edits and the two corpus formats (M² and plain parallel text).
//!
//! All text is NFC-normalized when it enters the system; every comparison
//! downstream is plain code-point equality.

mod m2;
mod parallel;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::taxonomy::ErrorClass;

pub use m2::{emit_m2, parse_m2, M2Error, M2ErrorKind};
pub use parallel::{emit_parallel, parse_parallel, ParallelError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenError {
    #[error("token is empty")]
    Empty,
    #[error("token {0:?} contains whitespace")]
    Whitespace(String),
}

/// A single whitespace-free word unit, stored in NFC.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Token(String);

impl Token {
    pub fn new(surface: &str) -> Result<Self, TokenError> {
        if surface.is_empty() {
            return Err(TokenError::Empty);
        }
        if surface.chars().any(char::is_whitespace) {
            return Err(TokenError::Whitespace(surface.to_string()));
        }
        Ok(Token(surface.nfc().collect()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn char_len(&self) -> usize {
        self.0.chars().count()
    }
}

impl TryFrom<String> for Token {
    type Error = TokenError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Token::new(&value)
    }
}

impl From<Token> for String {
    fn from(t: Token) -> String {
        t.0
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An ordered list of tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Sentence(pub Vec<Token>);

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Self {
        Sentence(tokens)
    }

    /// Splits on Unicode whitespace. Never fails: whitespace splitting
    /// cannot yield empty or whitespace-bearing pieces.
    pub fn from_text(text: &str) -> Self {
        let normalized: String = text.nfc().collect();
        Sentence(
            normalized
                .split_whitespace()
                .map(|w| Token(w.to_string()))
                .collect(),
        )
    }

    pub fn tokens(&self) -> &[Token] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_text(&self) -> String {
        join_tokens(&self.0)
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl From<Vec<Token>> for Sentence {
    fn from(tokens: Vec<Token>) -> Self {
        Sentence(tokens)
    }
}

pub(crate) fn join_tokens(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(t.as_str());
    }
    out
}

/// Builds a token list from whitespace-separated text; handy in tests and fixtures.
pub fn toks(text: &str) -> Vec<Token> {
    Sentence::from_text(text).0
}

pub const DEFAULT_REQUIRED: &str = "REQUIRED";
pub const DEFAULT_COMMENT: &str = "-NONE-";

/// A half-open token span `[start, end)` on the source, plus its replacement.
///
/// `label`, `required` and `comment` carry the raw M² fields so that files
/// survive a parse/emit cycle unchanged; `error_class` is the parsed form of
/// `label` when it is a known taxonomy code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edit {
    pub start: usize,
    pub end: usize,
    pub replacement: Vec<Token>,
    pub error_class: Option<ErrorClass>,
    pub annotator: u32,
    pub label: String,
    pub required: String,
    pub comment: String,
}

impl Edit {
    pub fn new(start: usize, end: usize, replacement: Vec<Token>) -> Self {
        Edit {
            start,
            end,
            replacement,
            error_class: None,
            annotator: 0,
            label: "UNK".to_string(),
            required: DEFAULT_REQUIRED.to_string(),
            comment: DEFAULT_COMMENT.to_string(),
        }
    }

    pub fn with_class(mut self, class: ErrorClass) -> Self {
        self.set_class(class);
        self
    }

    pub fn with_annotator(mut self, annotator: u32) -> Self {
        self.annotator = annotator;
        self
    }

    pub fn set_class(&mut self, class: ErrorClass) {
        self.label = class.label().to_string();
        self.error_class = Some(class);
    }

    pub fn is_insertion(&self) -> bool {
        self.start == self.end
    }

    pub fn is_deletion(&self) -> bool {
        self.replacement.is_empty()
    }

    /// The identity used for matching: span plus replacement, nothing else.
    pub fn key(&self) -> EditKey {
        EditKey {
            start: self.start,
            end: self.end,
            replacement: self.replacement.clone(),
        }
    }

    fn check_shape(&self, source_len: usize) -> Result<(), EditError> {
        if self.start > self.end || self.end > source_len {
            return Err(EditError::OutOfRange {
                start: self.start,
                end: self.end,
                len: source_len,
            });
        }
        if self.start == self.end && self.replacement.is_empty() {
            return Err(EditError::Empty { at: self.start });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EditKey {
    pub start: usize,
    pub end: usize,
    pub replacement: Vec<Token>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EditError {
    #[error("edit span [{start}, {end}) outside a sentence of {len} tokens")]
    OutOfRange {
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("empty edit at {at}: no span and no replacement")]
    Empty { at: usize },
    #[error("edits [{a_start}, {a_end}) and [{b_start}, {b_end}) overlap")]
    Overlap {
        a_start: usize,
        a_end: usize,
        b_start: usize,
        b_end: usize,
    },
}

/// One annotator's alternative set of gold edits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditSet {
    pub annotator: u32,
    pub edits: Vec<Edit>,
}

impl EditSet {
    pub fn new(annotator: u32, edits: Vec<Edit>) -> Self {
        let mut edits = edits;
        sort_edits(&mut edits);
        EditSet { annotator, edits }
    }

    pub fn empty(annotator: u32) -> Self {
        EditSet {
            annotator,
            edits: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedExample {
    pub source: Sentence,
    /// One entry per annotator alternative; never empty.
    pub gold: Vec<EditSet>,
}

impl AnnotatedExample {
    pub fn new(source: Sentence, gold: Vec<EditSet>) -> Self {
        let gold = if gold.is_empty() {
            vec![EditSet::empty(0)]
        } else {
            gold
        };
        AnnotatedExample { source, gold }
    }

    pub fn single(source: Sentence, edits: Vec<Edit>) -> Self {
        AnnotatedExample::new(source, vec![EditSet::new(0, edits)])
    }

    /// Checks the span and ordering invariants of every alternative.
    pub fn validate(&self) -> Result<(), EditError> {
        for set in &self.gold {
            validate_edit_set(self.source.len(), &set.edits)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelExample {
    pub source: Sentence,
    pub target: Sentence,
}

impl ParallelExample {
    pub fn new(source: Sentence, target: Sentence) -> Self {
        ParallelExample { source, target }
    }
}

/// Stable sort by `(start, end)`; insertions sharing an index keep their input order.
pub fn sort_edits(edits: &mut [Edit]) {
    edits.sort_by_key(|e| (e.start, e.end));
}

/// Checks a sorted edit-set against a source of `source_len` tokens.
pub fn validate_edit_set(source_len: usize, edits: &[Edit]) -> Result<(), EditError> {
    let mut prev: Option<&Edit> = None;
    for e in edits {
        e.check_shape(source_len)?;
        if let Some(p) = prev {
            // [p.start, p.end) must end at or before e begins; an insertion at
            // p.end is fine, an insertion strictly inside p is not.
            let overlaps = p.end > e.start || (p.start, p.end) > (e.start, e.end);
            if overlaps {
                return Err(EditError::Overlap {
                    a_start: p.start,
                    a_end: p.end,
                    b_start: e.start,
                    b_end: e.end,
                });
            }
        }
        prev = Some(e);
    }
    Ok(())
}

/// Applies an edit-set to `source` and returns the corrected sentence.
pub fn apply_edits(source: &Sentence, edits: &[Edit]) -> Result<Sentence, EditError> {
    let mut sorted: Vec<&Edit> = edits.iter().collect();
    sorted.sort_by_key(|e| (e.start, e.end));
    let owned: Vec<Edit> = sorted.iter().map(|e| (*e).clone()).collect();
    validate_edit_set(source.len(), &owned)?;

    let src = source.tokens();
    let mut out = Vec::with_capacity(src.len());
    let mut cursor = 0;
    for e in sorted {
        out.extend_from_slice(&src[cursor..e.start]);
        out.extend(e.replacement.iter().cloned());
        cursor = e.end;
    }
    out.extend_from_slice(&src[cursor..]);
    Ok(Sentence(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(text: &str) -> Sentence {
        Sentence::from_text(text)
    }

    #[test]
    fn token_rejects_empty_and_whitespace() {
        assert_eq!(Token::new(""), Err(TokenError::Empty));
        assert!(matches!(Token::new("a b"), Err(TokenError::Whitespace(_))));
    }

    #[test]
    fn token_is_nfc() {
        // alif + combining hamza above composes to U+0623
        let t = Token::new("\u{0627}\u{0654}").unwrap();
        assert_eq!(t.as_str(), "\u{0623}");
    }

    #[test]
    fn apply_replacement() {
        let src = s("الرجل يرب الفرس .");
        let out = apply_edits(&src, &[Edit::new(1, 2, toks("يركب"))]).unwrap();
        assert_eq!(out, s("الرجل يركب الفرس ."));
    }

    #[test]
    fn apply_empty_is_identity() {
        let src = s("a b c");
        assert_eq!(apply_edits(&src, &[]).unwrap(), src);
    }

    #[test]
    fn apply_insertion_at_start() {
        let out = apply_edits(&s("b"), &[Edit::new(0, 0, toks("a"))]).unwrap();
        assert_eq!(out, s("a b"));
    }

    #[test]
    fn apply_whole_deletion_gives_empty() {
        let out = apply_edits(&s("a b c"), &[Edit::new(0, 3, vec![])]).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn insertions_at_same_index_keep_order() {
        let edits = vec![Edit::new(1, 1, toks("x")), Edit::new(1, 1, toks("y"))];
        let out = apply_edits(&s("a b"), &edits).unwrap();
        assert_eq!(out, s("a x y b"));
    }

    #[test]
    fn insertion_before_replacement_at_same_start() {
        let edits = vec![Edit::new(1, 2, toks("B")), Edit::new(1, 1, toks("x"))];
        let out = apply_edits(&s("a b c"), &edits).unwrap();
        assert_eq!(out, s("a x B c"));
    }

    #[test]
    fn overlap_is_rejected() {
        let edits = vec![Edit::new(0, 2, toks("x")), Edit::new(1, 3, toks("y"))];
        assert!(matches!(
            apply_edits(&s("a b c"), &edits),
            Err(EditError::Overlap { .. })
        ));
        let inside = vec![Edit::new(0, 2, toks("x")), Edit::new(1, 1, toks("y"))];
        assert!(matches!(
            apply_edits(&s("a b c"), &inside),
            Err(EditError::Overlap { .. })
        ));
    }

    #[test]
    fn out_of_range_is_rejected() {
        assert!(matches!(
            apply_edits(&s("a"), &[Edit::new(0, 2, vec![])]),
            Err(EditError::OutOfRange { .. })
        ));
    }

    #[test]
    fn token_count_after_application() {
        let src = s("a b c d e");
        let edits = vec![
            Edit::new(0, 0, toks("x y")),
            Edit::new(1, 3, toks("z")),
            Edit::new(4, 5, vec![]),
        ];
        let out = apply_edits(&src, &edits).unwrap();
        let expected = 5 - (2 + 1) + (2 + 1);
        assert_eq!(out.len(), expected);
        assert_eq!(out, s("x y a z d"));
    }
}
