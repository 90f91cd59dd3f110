use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use super::{
    join_tokens, sort_edits, validate_edit_set, AnnotatedExample, Edit, EditError, EditSet,
    Sentence, Token,
};
use crate::taxonomy::ErrorClass;

const SEP: &str = "|||";
const NONE_CORRECTION: &str = "-NONE-";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct M2Error {
    pub line: usize,
    pub kind: M2ErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum M2ErrorKind {
    #[error("`A` line before any `S` line")]
    AnnotationBeforeSentence,
    #[error("expected 6 `|||`-separated fields, found {0}")]
    FieldCount(usize),
    #[error("malformed span {0:?}")]
    BadSpan(String),
    #[error("span [{start}, {end}) out of range for {len} source tokens")]
    SpanOutOfRange { start: i64, end: i64, len: usize },
    #[error("annotator id {0:?} is not a non-negative integer")]
    BadAnnotator(String),
    #[error("unrecognized line {0:?}")]
    UnknownLine(String),
    #[error(transparent)]
    Edit(#[from] EditError),
}

fn err(line: usize, kind: M2ErrorKind) -> M2Error {
    M2Error { line, kind }
}

struct Block {
    source: Sentence,
    start_line: usize,
    // annotator -> (edits, saw a -NONE- line)
    alternatives: BTreeMap<u32, (Vec<Edit>, bool)>,
}

impl Block {
    fn finish(self) -> Result<AnnotatedExample, M2Error> {
        let mut gold = Vec::with_capacity(self.alternatives.len().max(1));
        for (annotator, (mut edits, noop)) in self.alternatives {
            if noop {
                edits.clear();
            }
            sort_edits(&mut edits);
            validate_edit_set(self.source.len(), &edits)
                .map_err(|e| err(self.start_line, e.into()))?;
            gold.push(EditSet { annotator, edits });
        }
        Ok(AnnotatedExample::new(self.source, gold))
    }
}

/// Parses M² text: `S` lines each followed by zero or more `A` lines, blocks
/// separated by blank lines.
pub fn parse_m2(text: &str) -> Result<Vec<AnnotatedExample>, M2Error> {
    let mut out = Vec::new();
    let mut current: Option<Block> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line: String = raw.trim_end_matches('\r').nfc().collect();
        if line.trim().is_empty() {
            if let Some(block) = current.take() {
                out.push(block.finish()?);
            }
            continue;
        }
        if line == "S" || line.starts_with("S ") {
            if let Some(block) = current.take() {
                out.push(block.finish()?);
            }
            current = Some(Block {
                source: Sentence::from_text(line.get(2..).unwrap_or("")),
                start_line: line_no,
                alternatives: BTreeMap::new(),
            });
        } else if let Some(rest) = line.strip_prefix("A ") {
            let block = current
                .as_mut()
                .ok_or_else(|| err(line_no, M2ErrorKind::AnnotationBeforeSentence))?;
            parse_annotation(rest, block, line_no)?;
        } else {
            return Err(err(line_no, M2ErrorKind::UnknownLine(line)));
        }
    }
    if let Some(block) = current.take() {
        out.push(block.finish()?);
    }
    Ok(out)
}

fn parse_annotation(rest: &str, block: &mut Block, line_no: usize) -> Result<(), M2Error> {
    let fields: Vec<&str> = rest.split(SEP).collect();
    if fields.len() != 6 {
        return Err(err(line_no, M2ErrorKind::FieldCount(fields.len())));
    }
    let span = fields[0];
    let mut parts = span.split_whitespace();
    let (start, end) = match (parts.next(), parts.next(), parts.next()) {
        (Some(a), Some(b), None) => match (a.parse::<i64>(), b.parse::<i64>()) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return Err(err(line_no, M2ErrorKind::BadSpan(span.to_string()))),
        },
        _ => return Err(err(line_no, M2ErrorKind::BadSpan(span.to_string()))),
    };
    let annotator: u32 = fields[5]
        .trim()
        .parse()
        .map_err(|_| err(line_no, M2ErrorKind::BadAnnotator(fields[5].to_string())))?;
    let correction = fields[2];
    let entry = block.alternatives.entry(annotator).or_default();

    if correction.trim() == NONE_CORRECTION {
        entry.1 = true;
        return Ok(());
    }
    let len = block.source.len();
    if start < 0 || end < start || end as usize > len {
        return Err(err(
            line_no,
            M2ErrorKind::SpanOutOfRange { start, end, len },
        ));
    }
    let replacement: Vec<Token> = correction
        .split(' ')
        .filter(|piece| !piece.is_empty())
        .map(|piece| {
            Token::new(piece)
                .map_err(|_| err(line_no, M2ErrorKind::BadSpan(correction.to_string())))
        })
        .collect::<Result<_, _>>()?;
    let label = fields[1].to_string();
    let edit = Edit {
        start: start as usize,
        end: end as usize,
        replacement,
        error_class: ErrorClass::from_label(&label),
        annotator,
        label,
        required: fields[3].to_string(),
        comment: fields[4].to_string(),
    };
    if edit.start == edit.end && edit.replacement.is_empty() {
        return Err(err(line_no, EditError::Empty { at: edit.start }.into()));
    }
    entry.0.push(edit);
    Ok(())
}

/// Renders examples as M² text. Empty alternatives are written as `-NONE-`
/// lines unless the example consists of a single annotator-0 alternative.
pub fn emit_m2(examples: &[AnnotatedExample]) -> String {
    let mut out = String::new();
    for ex in examples {
        out.push('S');
        if !ex.source.is_empty() {
            out.push(' ');
            out.push_str(&ex.source.to_text());
        }
        out.push('\n');
        let implicit_empty = ex.gold.len() == 1 && ex.gold[0].annotator == 0;
        for set in &ex.gold {
            if set.edits.is_empty() {
                if !implicit_empty {
                    let _ = writeln!(
                        out,
                        "A -1 -1{SEP}noop{SEP}{NONE_CORRECTION}{SEP}REQUIRED{SEP}-NONE-{SEP}{}",
                        set.annotator
                    );
                }
                continue;
            }
            for e in &set.edits {
                let _ = writeln!(
                    out,
                    "A {} {}{SEP}{}{SEP}{}{SEP}{}{SEP}{}{SEP}{}",
                    e.start,
                    e.end,
                    e.label,
                    join_tokens(&e.replacement),
                    e.required,
                    e.comment,
                    set.annotator
                );
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::toks;

    #[test]
    fn sentence_without_annotations() {
        let ex = parse_m2("S a b\n").unwrap();
        assert_eq!(ex.len(), 1);
        assert_eq!(ex[0].source.to_text(), "a b");
        assert_eq!(ex[0].gold, vec![EditSet::empty(0)]);
    }

    #[test]
    fn merge_row_annotation() {
        let text = "S غدا غداالرجل\nA 1 2|||MG|||غدا الرجل|||REQUIRED|||-|||0\n";
        let ex = parse_m2(text).unwrap();
        let edit = &ex[0].gold[0].edits[0];
        assert_eq!((edit.start, edit.end), (1, 2));
        assert_eq!(edit.replacement, toks("غدا الرجل"));
        assert_eq!(edit.comment, "-");
        assert_eq!(edit.error_class.map(|c| c.label()), Some("MG"));
    }

    #[test]
    fn annotation_before_sentence() {
        let e = parse_m2("A 0 1|||OH|||x|||REQUIRED|||-|||0\nS a\n").unwrap_err();
        assert_eq!(e.line, 1);
        assert_eq!(e.kind, M2ErrorKind::AnnotationBeforeSentence);
    }

    #[test]
    fn malformed_lines_carry_line_numbers() {
        let e = parse_m2("S a b\nA 0 1|||OH|||x|||REQUIRED|||-\n").unwrap_err();
        assert_eq!(e, err(2, M2ErrorKind::FieldCount(5)));
        let e = parse_m2("S a b\n\nS c\nA x 1|||OH|||x|||REQUIRED|||-|||0\n").unwrap_err();
        assert_eq!(e.line, 4);
        assert!(matches!(e.kind, M2ErrorKind::BadSpan(_)));
        let e = parse_m2("S a b\nA 1 3|||OH|||x|||REQUIRED|||-|||0\n").unwrap_err();
        assert!(matches!(e.kind, M2ErrorKind::SpanOutOfRange { .. }));
        let e = parse_m2("S a b\nA 1 1|||OH|||x|||REQUIRED|||-|||zero\n").unwrap_err();
        assert!(matches!(e.kind, M2ErrorKind::BadAnnotator(_)));
    }

    #[test]
    fn empty_correction_is_deletion_and_none_is_noop() {
        let text = "S a b c\nA 1 2|||XT||||||REQUIRED|||-NONE-|||0\nA -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||1\n";
        let ex = &parse_m2(text).unwrap()[0];
        assert_eq!(ex.gold.len(), 2);
        assert!(ex.gold[0].edits[0].replacement.is_empty());
        assert_eq!(ex.gold[1], EditSet::empty(1));
    }

    #[test]
    fn annotators_grouped_and_sorted() {
        let text = "S a b c\nA 2 3|||X|||z|||REQUIRED|||-NONE-|||1\nA 0 1|||X|||y|||REQUIRED|||-NONE-|||0\nA 1 2|||X|||w|||REQUIRED|||-NONE-|||1\n";
        let ex = &parse_m2(text).unwrap()[0];
        assert_eq!(
            ex.gold.iter().map(|g| g.annotator).collect::<Vec<_>>(),
            vec![0, 1]
        );
        assert_eq!(
            ex.gold[1].edits.iter().map(|e| e.start).collect::<Vec<_>>(),
            vec![1, 2]
        );
        let emitted = emit_m2(std::slice::from_ref(ex));
        assert_eq!(
            emitted,
            "S a b c\nA 0 1|||X|||y|||REQUIRED|||-NONE-|||0\nA 1 2|||X|||w|||REQUIRED|||-NONE-|||1\nA 2 3|||X|||z|||REQUIRED|||-NONE-|||1\n\n"
        );
        assert_eq!(parse_m2(&emitted).unwrap(), vec![ex.clone()]);
    }

    #[test]
    fn empty_list_emits_nothing() {
        assert_eq!(emit_m2(&[]), "");
        assert_eq!(parse_m2("").unwrap(), vec![]);
    }

    #[test]
    fn emit_parse_emit_is_fixpoint() {
        let text = "S x  y\r\nA 0 1|||Edit|||X|||REQUIRED|||keep me|||0\nA 2 2|||Add|||z|||REQUIRED|||-NONE-|||0\n\n\nS\n";
        let once = emit_m2(&parse_m2(text).unwrap());
        let twice = emit_m2(&parse_m2(&once).unwrap());
        assert_eq!(once, twice);
        assert!(once.contains("keep me"));
    }
}
