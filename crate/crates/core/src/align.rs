//! Unit-cost Levenshtein alignment over token (or character) sequences and
//! extraction of primitive edits from an alignment path.

use serde::{Deserialize, Serialize};

use crate::corpus::{Edit, Sentence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Match,
    Substitute,
    Insert,
    Delete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AlignmentOp {
    pub kind: OpKind,
    pub src_index: Option<usize>,
    pub tgt_index: Option<usize>,
}

impl AlignmentOp {
    fn at(kind: OpKind, i: usize, j: usize) -> Self {
        let (src_index, tgt_index) = match kind {
            OpKind::Match | OpKind::Substitute => (Some(i), Some(j)),
            OpKind::Delete => (Some(i), None),
            OpKind::Insert => (None, Some(j)),
        };
        AlignmentOp {
            kind,
            src_index,
            tgt_index,
        }
    }

    pub fn is_match(&self) -> bool {
        self.kind == OpKind::Match
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentPath {
    pub ops: Vec<AlignmentOp>,
    pub cost: usize,
}

/// `d[i][j]` is the distance between `a[i..]` and `b[j..]`.
pub(crate) fn suffix_table<T: PartialEq>(a: &[T], b: &[T]) -> Vec<Vec<usize>> {
    let (n, m) = (a.len(), b.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for i in (0..=n).rev() {
        for j in (0..=m).rev() {
            d[i][j] = if i == n {
                m - j
            } else if j == m {
                n - i
            } else {
                let diag = d[i + 1][j + 1] + usize::from(a[i] != b[j]);
                diag.min(d[i + 1][j] + 1).min(d[i][j + 1] + 1)
            };
        }
    }
    d
}

/// `d[i][j]` is the distance between `a[..i]` and `b[..j]`.
pub(crate) fn prefix_table<T: PartialEq>(a: &[T], b: &[T]) -> Vec<Vec<usize>> {
    let (n, m) = (a.len(), b.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for i in 0..=n {
        for j in 0..=m {
            d[i][j] = if i == 0 {
                j
            } else if j == 0 {
                i
            } else {
                let diag = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
                diag.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1)
            };
        }
    }
    d
}

/// Minimal-cost alignment; among equal-cost continuations the walk prefers
/// match, then substitute, then delete, then insert.
pub fn align_slices<T: PartialEq>(a: &[T], b: &[T]) -> AlignmentPath {
    let d = suffix_table(a, b);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut ops = Vec::with_capacity(n.max(m));
    while i < n || j < m {
        let here = d[i][j];
        let kind = if i < n && j < m && a[i] == b[j] && d[i + 1][j + 1] == here {
            OpKind::Match
        } else if i < n && j < m && a[i] != b[j] && d[i + 1][j + 1] + 1 == here {
            OpKind::Substitute
        } else if i < n && d[i + 1][j] + 1 == here {
            OpKind::Delete
        } else {
            OpKind::Insert
        };
        ops.push(AlignmentOp::at(kind, i, j));
        match kind {
            OpKind::Match | OpKind::Substitute => {
                i += 1;
                j += 1;
            }
            OpKind::Delete => i += 1,
            OpKind::Insert => j += 1,
        }
    }
    AlignmentPath { ops, cost: d[0][0] }
}

pub fn align(source: &Sentence, target: &Sentence) -> AlignmentPath {
    align_slices(source.tokens(), target.tokens())
}

/// Edit distance with two rolling rows.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = (prev[j] + usize::from(x != y))
                .min(prev[j + 1] + 1)
                .min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Source and target cursor before each op, plus the final position.
fn positions(path: &AlignmentPath) -> Vec<(usize, usize)> {
    let mut pos = Vec::with_capacity(path.ops.len() + 1);
    let (mut i, mut j) = (0, 0);
    pos.push((i, j));
    for op in &path.ops {
        match op.kind {
            OpKind::Match | OpKind::Substitute => {
                i += 1;
                j += 1;
            }
            OpKind::Delete => i += 1,
            OpKind::Insert => j += 1,
        }
        pos.push((i, j));
    }
    pos
}

/// Turns an alignment into edits. Each maximal run of non-match ops is one
/// edit; with `max_gap > 0`, consecutive runs separated by at most `max_gap`
/// matches in total are also offered as a single phrase edit. Results are
/// sorted by span.
pub fn extract_edits(path: &AlignmentPath, target: &Sentence, max_gap: usize) -> Vec<Edit> {
    let pos = positions(path);
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut k = 0;
    while k < path.ops.len() {
        if path.ops[k].is_match() {
            k += 1;
            continue;
        }
        let first = k;
        while k < path.ops.len() && !path.ops[k].is_match() {
            k += 1;
        }
        runs.push((first, k));
    }

    let tgt = target.tokens();
    let mut edits = Vec::new();
    for a in 0..runs.len() {
        let mut gap = 0;
        for b in a..runs.len() {
            if b > a {
                gap += runs[b].0 - runs[b - 1].1;
                if gap > max_gap {
                    break;
                }
            }
            let (si, sj) = pos[runs[a].0];
            let (ei, ej) = pos[runs[b].1];
            edits.push(Edit::new(si, ei, tgt[sj..ej].to_vec()));
        }
    }
    edits.sort_by_key(|e| (e.start, e.end));
    edits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{apply_edits, toks};

    fn s(text: &str) -> Sentence {
        Sentence::from_text(text)
    }

    fn kinds(p: &AlignmentPath) -> Vec<OpKind> {
        p.ops.iter().map(|o| o.kind).collect()
    }

    #[test]
    fn identity_is_all_match() {
        let p = align(&s("a b c"), &s("a b c"));
        assert_eq!(p.cost, 0);
        assert_eq!(kinds(&p), vec![OpKind::Match; 3]);
        assert!(extract_edits(&p, &s("a b c"), 2).is_empty());
    }

    #[test]
    fn empty_source() {
        let p = align(&s(""), &s("a"));
        assert_eq!(p.cost, 1);
        assert_eq!(
            p.ops,
            vec![AlignmentOp {
                kind: OpKind::Insert,
                src_index: None,
                tgt_index: Some(0)
            }]
        );
    }

    #[test]
    fn substitution_in_the_middle() {
        let p = align(&s("الرجل يرب الفرس"), &s("الرجل يركب الفرس"));
        assert_eq!(p.cost, 1);
        assert_eq!(
            kinds(&p),
            vec![OpKind::Match, OpKind::Substitute, OpKind::Match]
        );
    }

    #[test]
    fn substitute_preferred_over_delete_insert() {
        let p = align(&s("a"), &s("b"));
        assert_eq!(kinds(&p), vec![OpKind::Substitute]);
        let p = align(&s("x a"), &s("a"));
        assert_eq!(kinds(&p), vec![OpKind::Delete, OpKind::Match]);
    }

    #[test]
    fn unit_edit_with_no_gap() {
        let p = align(&s("a b c"), &s("a x c"));
        let edits = extract_edits(&p, &s("a x c"), 0);
        assert_eq!(edits, vec![Edit::new(1, 2, toks("x"))]);
    }

    #[test]
    fn phrase_candidate_bridges_two_matches() {
        let tgt = s("x b c y");
        let p = align(&s("a b c d"), &tgt);
        let spans: Vec<(usize, usize)> = extract_edits(&p, &tgt, 2)
            .iter()
            .map(|e| (e.start, e.end))
            .collect();
        assert_eq!(spans, vec![(0, 1), (0, 4), (3, 4)]);
        let phrase = &extract_edits(&p, &tgt, 2)[1];
        assert_eq!(phrase.replacement, toks("x b c y"));
        assert_eq!(extract_edits(&p, &tgt, 1).len(), 2);
    }

    #[test]
    fn gap_zero_edits_rebuild_target() {
        let src = s("غداالرجل سيركب الفرس .");
        let tgt = s("غدا الرجل سيركب الفرس .");
        let edits = extract_edits(&align(&src, &tgt), &tgt, 0);
        assert_eq!(edits, vec![Edit::new(0, 1, toks("غدا الرجل"))]);
        assert_eq!(apply_edits(&src, &edits).unwrap(), tgt);
    }

    #[test]
    fn levenshtein_on_chars() {
        let a: Vec<char> = "kitten".chars().collect();
        let b: Vec<char> = "sitting".chars().collect();
        assert_eq!(levenshtein(&a, &b), 3);
        assert_eq!(align_slices(&a, &b).cost, 3);
    }
}
