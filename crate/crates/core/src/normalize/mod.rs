//! Scoring regimes that forgive Alif/Ya spelling and/or punctuation.
//!
//! Normalization works token by token, so an edit-set can be carried over to
//! the normalized source by remapping spans (see [`project_example`]).

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_general_category::{get_general_category, GeneralCategory};

use crate::corpus::{sort_edits, AnnotatedExample, Edit, EditSet, Sentence, Token};

pub const BARE_ALIF: char = 'ا';
pub const YA: char = 'ي';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationMode {
    #[default]
    Exact,
    NoAlifYa,
    NoPunct,
    NoAlifYaNoPunct,
}

impl NormalizationMode {
    pub const ALL: [NormalizationMode; 4] = [
        NormalizationMode::Exact,
        NormalizationMode::NoAlifYa,
        NormalizationMode::NoPunct,
        NormalizationMode::NoAlifYaNoPunct,
    ];

    /// Name accepted on the command line.
    pub fn key(self) -> &'static str {
        match self {
            NormalizationMode::Exact => "exact",
            NormalizationMode::NoAlifYa => "no-alif-ya",
            NormalizationMode::NoPunct => "no-punct",
            NormalizationMode::NoAlifYaNoPunct => "none",
        }
    }

    /// Column heading in score tables.
    pub fn title(self) -> &'static str {
        match self {
            NormalizationMode::Exact => "Exact Match",
            NormalizationMode::NoAlifYa => "No Alif / Ya Errors",
            NormalizationMode::NoPunct => "No Punctuation",
            NormalizationMode::NoAlifYaNoPunct => "No Alif / Ya & Punctuation",
        }
    }

    pub fn folds_alif_ya(self) -> bool {
        matches!(
            self,
            NormalizationMode::NoAlifYa | NormalizationMode::NoAlifYaNoPunct
        )
    }

    pub fn strips_punct(self) -> bool {
        matches!(
            self,
            NormalizationMode::NoPunct | NormalizationMode::NoAlifYaNoPunct
        )
    }
}

impl fmt::Display for NormalizationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown normalization mode {0:?} (expected exact, no-alif-ya, no-punct or none)")]
pub struct UnknownMode(pub String);

impl FromStr for NormalizationMode {
    type Err = UnknownMode;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(NormalizationMode::Exact),
            "no-alif-ya" => Ok(NormalizationMode::NoAlifYa),
            "no-punct" => Ok(NormalizationMode::NoPunct),
            "none" | "no-alif-ya-no-punct" => Ok(NormalizationMode::NoAlifYaNoPunct),
            other => Err(UnknownMode(other.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum TableError {
    #[error("invalid character table JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("code point {0:#x} is not a valid character")]
    BadCodePoint(u32),
    #[error("{0:?} must be a single character")]
    NotSingleChar(String),
    #[error("character {ch:?} appears in both {a} and {b}")]
    NotDisjoint {
        ch: char,
        a: &'static str,
        b: &'static str,
    },
}

/// Character classes driving the folds. Alif variants fold to bare alif, ya
/// variants fold to ya; punctuation is the explicit set plus, when
/// `unicode_punctuation` is on, every code point of general category P*.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharClassTable {
    alif_variants: BTreeSet<char>,
    ya_variants: BTreeSet<char>,
    punctuation: BTreeSet<char>,
    unicode_punctuation: bool,
}

impl Default for CharClassTable {
    fn default() -> Self {
        CharClassTable {
            alif_variants: ['أ', 'إ', 'آ', 'ٱ'].into_iter().collect(),
            ya_variants: ['ى'].into_iter().collect(),
            punctuation: ['،', '؛', '؟'].into_iter().collect(),
            unicode_punctuation: true,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CodePoint {
    Num(u32),
    Str(String),
}

impl CodePoint {
    fn to_char(&self) -> Result<char, TableError> {
        match self {
            CodePoint::Num(n) => char::from_u32(*n).ok_or(TableError::BadCodePoint(*n)),
            CodePoint::Str(s) => {
                let mut it = s.chars();
                match (it.next(), it.next()) {
                    (Some(c), None) => Ok(c),
                    _ => Err(TableError::NotSingleChar(s.clone())),
                }
            }
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TableOverride {
    alif_variants: Option<Vec<CodePoint>>,
    ya_variants: Option<Vec<CodePoint>>,
    punctuation: Option<Vec<CodePoint>>,
    unicode_punctuation: Option<bool>,
}

fn char_set(points: &[CodePoint]) -> Result<BTreeSet<char>, TableError> {
    points.iter().map(CodePoint::to_char).collect()
}

fn is_unicode_punct(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

impl CharClassTable {
    pub fn new(
        alif_variants: BTreeSet<char>,
        ya_variants: BTreeSet<char>,
        punctuation: BTreeSet<char>,
        unicode_punctuation: bool,
    ) -> Result<Self, TableError> {
        let table = CharClassTable {
            alif_variants,
            ya_variants,
            punctuation,
            unicode_punctuation,
        };
        table.check_disjoint()?;
        Ok(table)
    }

    /// Reads a JSON override; keys left out keep their default sets. Code
    /// points may be given as integers or one-character strings.
    pub fn from_json(text: &str) -> Result<Self, TableError> {
        let o: TableOverride = serde_json::from_str(text)?;
        let d = CharClassTable::default();
        CharClassTable::new(
            o.alif_variants
                .as_deref()
                .map(char_set)
                .transpose()?
                .unwrap_or(d.alif_variants),
            o.ya_variants
                .as_deref()
                .map(char_set)
                .transpose()?
                .unwrap_or(d.ya_variants),
            o.punctuation
                .as_deref()
                .map(char_set)
                .transpose()?
                .unwrap_or(d.punctuation),
            o.unicode_punctuation.unwrap_or(d.unicode_punctuation),
        )
    }

    fn check_disjoint(&self) -> Result<(), TableError> {
        if let Some(&ch) = self.alif_variants.intersection(&self.ya_variants).next() {
            return Err(TableError::NotDisjoint {
                ch,
                a: "alif_variants",
                b: "ya_variants",
            });
        }
        for (set, name) in [
            (&self.alif_variants, "alif_variants"),
            (&self.ya_variants, "ya_variants"),
        ] {
            if let Some(&ch) = set.iter().find(|&&c| self.is_punct(c)) {
                return Err(TableError::NotDisjoint {
                    ch,
                    a: name,
                    b: "punctuation",
                });
            }
        }
        Ok(())
    }

    pub fn alif_variants(&self) -> &BTreeSet<char> {
        &self.alif_variants
    }

    pub fn ya_variants(&self) -> &BTreeSet<char> {
        &self.ya_variants
    }

    pub fn is_punct(&self, c: char) -> bool {
        self.punctuation.contains(&c) || (self.unicode_punctuation && is_unicode_punct(c))
    }

    pub fn fold_alif_ya(&self, c: char) -> char {
        if self.alif_variants.contains(&c) {
            BARE_ALIF
        } else if self.ya_variants.contains(&c) {
            YA
        } else {
            c
        }
    }

    pub fn is_punct_only(&self, s: &str) -> bool {
        !s.is_empty() && s.chars().all(|c| self.is_punct(c))
    }

    pub fn has_punct(&self, s: &str) -> bool {
        s.chars().any(|c| self.is_punct(c))
    }

    pub fn strip_punct(&self, s: &str) -> String {
        s.chars().filter(|&c| !self.is_punct(c)).collect()
    }
}

/// Normalizes one token; `None` when nothing is left of it.
pub fn normalize_token(
    token: &Token,
    mode: NormalizationMode,
    table: &CharClassTable,
) -> Option<Token> {
    if mode == NormalizationMode::Exact {
        return Some(token.clone());
    }
    let out: String = token
        .as_str()
        .chars()
        .filter(|&c| !(mode.strips_punct() && table.is_punct(c)))
        .map(|c| {
            if mode.folds_alif_ya() {
                table.fold_alif_ya(c)
            } else {
                c
            }
        })
        .collect();
    Token::new(&out).ok()
}

fn normalize_tokens(
    tokens: &[Token],
    mode: NormalizationMode,
    table: &CharClassTable,
) -> Vec<Token> {
    tokens
        .iter()
        .filter_map(|t| normalize_token(t, mode, table))
        .collect()
}

pub fn normalize_sentence(
    s: &Sentence,
    mode: NormalizationMode,
    table: &CharClassTable,
) -> Sentence {
    Sentence::new(normalize_tokens(s.tokens(), mode, table))
}

/// Normalizes the source and every gold edit, remapping spans through the
/// tokens that survive and dropping edits that no longer change anything.
pub fn project_example(
    example: &AnnotatedExample,
    mode: NormalizationMode,
    table: &CharClassTable,
) -> AnnotatedExample {
    if mode == NormalizationMode::Exact {
        return example.clone();
    }
    let src = example.source.tokens();
    let normalized: Vec<Option<Token>> = src
        .iter()
        .map(|t| normalize_token(t, mode, table))
        .collect();
    // new_index[k] = number of surviving tokens before old position k
    let mut new_index = Vec::with_capacity(src.len() + 1);
    let mut kept = 0;
    new_index.push(0);
    for n in &normalized {
        kept += usize::from(n.is_some());
        new_index.push(kept);
    }
    let source = Sentence::new(normalized.iter().flatten().cloned().collect());

    let gold = example
        .gold
        .iter()
        .map(|set| {
            let mut edits: Vec<Edit> = set
                .edits
                .iter()
                .filter_map(|e| {
                    let mut replacement = normalize_tokens(&e.replacement, mode, table);
                    let (mut start, mut end) = (new_index[e.start], new_index[e.end]);
                    let src = source.tokens();
                    if src[start..end] == replacement[..] {
                        return None;
                    }
                    // tokens that became equal at either end are no longer part of the edit
                    let lead = src[start..end]
                        .iter()
                        .zip(&replacement)
                        .take_while(|(a, b)| a == b)
                        .count();
                    start += lead;
                    replacement.drain(..lead);
                    let trail = src[start..end]
                        .iter()
                        .rev()
                        .zip(replacement.iter().rev())
                        .take_while(|(a, b)| a == b)
                        .count();
                    end -= trail;
                    replacement.truncate(replacement.len() - trail);
                    let mut out = e.clone();
                    out.start = start;
                    out.end = end;
                    out.replacement = replacement;
                    Some(out)
                })
                .collect();
            sort_edits(&mut edits);
            EditSet {
                annotator: set.annotator,
                edits,
            }
        })
        .collect();
    AnnotatedExample::new(source, gold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{apply_edits, toks};

    fn s(text: &str) -> Sentence {
        Sentence::from_text(text)
    }

    fn norm(text: &str, mode: NormalizationMode) -> String {
        normalize_sentence(&s(text), mode, &CharClassTable::default()).to_text()
    }

    #[test]
    fn alif_ya_fold() {
        assert_eq!(
            norm("نعرف إلا الشماتة ،", NormalizationMode::NoAlifYa),
            "نعرف الا الشماتة ،"
        );
        assert_eq!(
            norm("على أن آمن", NormalizationMode::NoAlifYa),
            "علي ان امن"
        );
    }

    #[test]
    fn punct_strip() {
        assert_eq!(
            norm("نعرف إلا الشماتة ،", NormalizationMode::NoPunct),
            "نعرف إلا الشماتة"
        );
        assert_eq!(
            norm("الإسلامي. (نعم)", NormalizationMode::NoPunct),
            "الإسلامي نعم"
        );
        assert_eq!(norm("a ؟! b", NormalizationMode::NoPunct), "a b");
    }

    #[test]
    fn exact_is_identity() {
        let text = "أ ، ى .";
        assert_eq!(norm(text, NormalizationMode::Exact), text);
    }

    #[test]
    fn hamza_on_ya_and_waw_untouched_by_default() {
        assert_eq!(norm("سئل مؤمن", NormalizationMode::NoAlifYa), "سئل مؤمن");
    }

    #[test]
    fn table_override() {
        let t = CharClassTable::from_json(
            r#"{"alif_variants": ["أ", 1573, "ئ"], "unicode_punctuation": false}"#,
        )
        .unwrap();
        assert_eq!(t.fold_alif_ya('ئ'), BARE_ALIF);
        assert!(t.is_punct('،'));
        assert!(!t.is_punct('.'));
        assert!(CharClassTable::from_json(r#"{"ya_variants": ["أ"]}"#).is_err());
        assert!(CharClassTable::from_json(r#"{"punctuation": ["ab"]}"#).is_err());
        assert!(CharClassTable::from_json(r#"{"colour": []}"#).is_err());
    }

    #[test]
    fn hamza_only_edit_dropped() {
        let ex = AnnotatedExample::single(s("نعرف الا"), vec![Edit::new(1, 2, toks("إلا"))]);
        let p = project_example(&ex, NormalizationMode::NoAlifYa, &CharClassTable::default());
        assert!(p.gold[0].edits.is_empty());
    }

    #[test]
    fn punct_insertion_dropped_and_spans_remapped() {
        let ex = AnnotatedExample::single(
            s("a ، b c"),
            vec![Edit::new(1, 1, toks("،")), Edit::new(3, 4, toks("d"))],
        );
        let table = CharClassTable::default();
        let p = project_example(&ex, NormalizationMode::NoPunct, &table);
        assert_eq!(p.source, s("a b c"));
        assert_eq!(p.gold[0].edits, vec![Edit::new(2, 3, toks("d"))]);
        let target = apply_edits(&ex.source, &ex.gold[0].edits).unwrap();
        assert_eq!(
            apply_edits(&p.source, &p.gold[0].edits).unwrap(),
            normalize_sentence(&target, NormalizationMode::NoPunct, &table)
        );
    }

    #[test]
    fn folded_ends_trimmed() {
        let ex = AnnotatedExample::single(
            s("ذهب الى المدرسه ،"),
            vec![Edit::new(1, 4, toks("إلى المدرسة ."))],
        );
        let table = CharClassTable::default();
        let p = project_example(&ex, NormalizationMode::NoAlifYa, &table);
        assert_eq!(p.gold[0].edits, vec![Edit::new(2, 4, toks("المدرسة ."))]);
        let target = apply_edits(&ex.source, &ex.gold[0].edits).unwrap();
        assert_eq!(
            apply_edits(&p.source, &p.gold[0].edits).unwrap(),
            normalize_sentence(&target, NormalizationMode::NoAlifYa, &table)
        );
    }

    #[test]
    fn exact_projection_unchanged() {
        let ex = AnnotatedExample::single(s("a ، b"), vec![Edit::new(1, 2, vec![])]);
        assert_eq!(
            project_example(&ex, NormalizationMode::Exact, &CharClassTable::default()),
            ex
        );
    }

    #[test]
    fn mode_names_round_trip() {
        for m in NormalizationMode::ALL {
            assert_eq!(m.key().parse::<NormalizationMode>().unwrap(), m);
        }
        assert!("loose".parse::<NormalizationMode>().is_err());
    }
}
