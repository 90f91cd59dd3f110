//! Token-level edit tags ($KEEP/$DELETE/$APPEND/$REPLACE/$MERGE): extraction
//! from parallel pairs, application, and the iterative correction loop.
//!
//! A tag sequence has one slot per source token plus a leading sentinel
//! slot that can only KEEP or APPEND, so that insertions before the first
//! token are expressible.

mod plan;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ParallelExample, Sentence, Token};
use crate::par::{self, Execution};

pub use plan::{extract_tags_for, passes_needed};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EditTag {
    Keep,
    Delete,
    Append(Token),
    Replace(Token),
    Merge,
}

impl EditTag {
    pub fn kind(&self) -> TagKind {
        match self {
            EditTag::Keep => TagKind::Keep,
            EditTag::Delete => TagKind::Delete,
            EditTag::Append(_) => TagKind::Append,
            EditTag::Replace(_) => TagKind::Replace,
            EditTag::Merge => TagKind::Merge,
        }
    }

    pub fn encode(&self) -> String {
        match self {
            EditTag::Keep => "$KEEP".to_string(),
            EditTag::Delete => "$DELETE".to_string(),
            EditTag::Append(t) => format!("$APPEND_{t}"),
            EditTag::Replace(t) => format!("$REPLACE_{t}"),
            EditTag::Merge => "$MERGE".to_string(),
        }
    }

    pub fn decode(text: &str) -> Result<Self, TagError> {
        let bad = || TagError::Decode(text.to_string());
        let payload = |rest: &str| Token::new(rest).map_err(|_| bad());
        match text {
            "$KEEP" => Ok(EditTag::Keep),
            "$DELETE" => Ok(EditTag::Delete),
            "$MERGE" => Ok(EditTag::Merge),
            _ => {
                if let Some(rest) = text.strip_prefix("$APPEND_") {
                    payload(rest).map(EditTag::Append)
                } else if let Some(rest) = text.strip_prefix("$REPLACE_") {
                    payload(rest).map(EditTag::Replace)
                } else {
                    Err(bad())
                }
            }
        }
    }
}

impl fmt::Display for EditTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TagKind {
    Keep,
    Delete,
    Append,
    Replace,
    Merge,
}

impl TagKind {
    pub const ALL: [TagKind; 5] = [
        TagKind::Keep,
        TagKind::Delete,
        TagKind::Append,
        TagKind::Replace,
        TagKind::Merge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TagKind::Keep => "KEEP",
            TagKind::Delete => "DELETE",
            TagKind::Append => "APPEND",
            TagKind::Replace => "REPLACE",
            TagKind::Merge => "MERGE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TagError {
    #[error("expected {expected} tags (source length + 1), got {got}")]
    Length { expected: usize, got: usize },
    #[error("sentinel slot only takes $KEEP or $APPEND, got {0}")]
    Sentinel(String),
    #[error("$MERGE on the last token (position {at})")]
    MergeAtEnd { at: usize },
    #[error("$MERGE at position {at} consumes a token tagged {next}, expected $KEEP")]
    MergeConsumesNonKeep { at: usize, next: String },
    #[error("cannot decode tag {0:?}")]
    Decode(String),
}

/// Tags for one sentence: `tags[0]` is the sentinel, `tags[i + 1]` belongs
/// to source token `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TagSequence {
    pub tags: Vec<EditTag>,
}

impl TagSequence {
    pub fn new(tags: Vec<EditTag>) -> Self {
        TagSequence { tags }
    }

    pub fn all_keep(source_len: usize) -> Self {
        TagSequence {
            tags: vec![EditTag::Keep; source_len + 1],
        }
    }

    pub fn sentinel(&self) -> &EditTag {
        &self.tags[0]
    }

    pub fn is_all_keep(&self) -> bool {
        self.tags.iter().all(|t| *t == EditTag::Keep)
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    /// Space-separated `$TAG` line.
    pub fn encode(&self) -> String {
        self.tags
            .iter()
            .map(EditTag::encode)
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn decode(line: &str) -> Result<Self, TagError> {
        line.split_whitespace()
            .map(EditTag::decode)
            .collect::<Result<Vec<_>, _>>()
            .map(TagSequence::new)
    }
}

pub(crate) fn concat(a: &Token, b: &Token) -> Token {
    Token::new(&format!("{a}{b}")).expect("two tokens concatenate to a token")
}

/// One left-to-right pass of the tags over `source`.
pub fn apply_tags(source: &Sentence, tags: &TagSequence) -> Result<Sentence, TagError> {
    let src = source.tokens();
    let n = src.len();
    if tags.len() != n + 1 {
        return Err(TagError::Length {
            expected: n + 1,
            got: tags.len(),
        });
    }
    let mut out = Vec::with_capacity(n + 1);
    match &tags.tags[0] {
        EditTag::Keep => {}
        EditTag::Append(t) => out.push(t.clone()),
        other => return Err(TagError::Sentinel(other.encode())),
    }
    let mut i = 0;
    while i < n {
        match &tags.tags[i + 1] {
            EditTag::Keep => out.push(src[i].clone()),
            EditTag::Delete => {}
            EditTag::Replace(t) => out.push(t.clone()),
            EditTag::Append(t) => {
                out.push(src[i].clone());
                out.push(t.clone());
            }
            EditTag::Merge => {
                if i + 1 >= n {
                    return Err(TagError::MergeAtEnd { at: i });
                }
                let next = &tags.tags[i + 2];
                if *next != EditTag::Keep {
                    return Err(TagError::MergeConsumesNonKeep {
                        at: i,
                        next: next.encode(),
                    });
                }
                out.push(concat(&src[i], &src[i + 1]));
                i += 1;
            }
        }
        i += 1;
    }
    Ok(Sentence::new(out))
}

pub fn extract_tags(pair: &ParallelExample) -> TagSequence {
    extract_tags_for(&pair.source, &pair.target)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Correction {
    pub sentence: Sentence,
    /// Passes that changed something, at least 1.
    pub iterations: usize,
}

pub const DEFAULT_MAX_ITERS: usize = 3;

/// Tags and applies until the tagger returns all-KEEP or `max_iters` tagger
/// calls have been made.
pub fn iterative_correct<F>(
    source: &Sentence,
    mut tagger: F,
    max_iters: usize,
) -> Result<Correction, TagError>
where
    F: FnMut(&Sentence) -> TagSequence,
{
    let mut current = source.clone();
    let mut applied = 0;
    for _ in 0..max_iters.max(1) {
        let tags = tagger(&current);
        if tags.is_all_keep() {
            break;
        }
        current = apply_tags(&current, &tags)?;
        applied += 1;
    }
    Ok(Correction {
        sentence: current,
        iterations: applied.max(1),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagStats {
    pub keep: usize,
    pub delete: usize,
    pub append: usize,
    pub replace: usize,
    pub merge: usize,
}

impl TagStats {
    pub fn add(&mut self, tags: &TagSequence) {
        for t in &tags.tags {
            *self.slot(t.kind()) += 1;
        }
    }

    fn slot(&mut self, kind: TagKind) -> &mut usize {
        match kind {
            TagKind::Keep => &mut self.keep,
            TagKind::Delete => &mut self.delete,
            TagKind::Append => &mut self.append,
            TagKind::Replace => &mut self.replace,
            TagKind::Merge => &mut self.merge,
        }
    }

    pub fn get(&self, kind: TagKind) -> usize {
        match kind {
            TagKind::Keep => self.keep,
            TagKind::Delete => self.delete,
            TagKind::Append => self.append,
            TagKind::Replace => self.replace,
            TagKind::Merge => self.merge,
        }
    }

    pub fn total(&self) -> usize {
        TagKind::ALL.iter().map(|&k| self.get(k)).sum()
    }

    /// `KIND<TAB>count` lines in a fixed order.
    pub fn to_lines(&self) -> String {
        TagKind::ALL
            .iter()
            .map(|&k| format!("{}\t{}\n", k.name(), self.get(k)))
            .collect()
    }
}

pub fn tag_stats(corpus: &[ParallelExample]) -> TagStats {
    tag_stats_with(corpus, Execution::default())
}

pub fn tag_stats_with(corpus: &[ParallelExample], exec: Execution) -> TagStats {
    let per = par::map(exec, corpus, |_, pair| extract_tags(pair));
    let mut stats = TagStats::default();
    for tags in &per {
        stats.add(tags);
    }
    stats
}
