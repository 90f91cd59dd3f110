use thiserror::Error;

use super::{ParallelExample, Sentence};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParallelError {
    #[error("line count mismatch: source has {source_lines} lines, target has {target_lines}")]
    LineCount {
        source_lines: usize,
        target_lines: usize,
    },
}

/// Splits on LF after dropping one trailing LF, so an empty text reads as a
/// single empty line.
fn split_lines(text: &str) -> Vec<&str> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    body.split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .collect()
}

/// Pairs two aligned one-sentence-per-line texts. Two empty inputs give no pairs.
pub fn parse_parallel(source: &str, target: &str) -> Result<Vec<ParallelExample>, ParallelError> {
    if source.is_empty() && target.is_empty() {
        return Ok(Vec::new());
    }
    let src = split_lines(source);
    let tgt = split_lines(target);
    if src.len() != tgt.len() {
        return Err(ParallelError::LineCount {
            source_lines: src.len(),
            target_lines: tgt.len(),
        });
    }
    Ok(src
        .into_iter()
        .zip(tgt)
        .map(|(s, t)| ParallelExample::new(Sentence::from_text(s), Sentence::from_text(t)))
        .collect())
}

/// One sentence per line, LF-terminated.
pub fn emit_parallel<'a>(sentences: impl IntoIterator<Item = &'a Sentence>) -> String {
    let mut out = String::new();
    for s in sentences {
        out.push_str(&s.to_text());
        out.push('\n');
    }
    out
}
