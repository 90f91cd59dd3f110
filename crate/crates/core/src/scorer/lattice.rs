//! The hypothesis edit lattice and the maximal-match extraction over it.
//!
//! Nodes are the `(i, j)` cells lying on some minimal-cost alignment of
//! source and hypothesis. An edit is a walk along optimal edges that starts
//! and ends with a non-match step and contains at most `max_gap` matches. An
//! extraction covers the whole alignment with match steps and edits; two
//! pure insertions at the same source position may not follow each other.

use std::collections::{BTreeSet, HashSet};

use crate::align::{prefix_table, suffix_table};
use crate::corpus::{EditKey, Token};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extraction {
    pub edits: Vec<EditKey>,
    pub matched: Vec<bool>,
}

impl Extraction {
    pub fn matched_count(&self) -> usize {
        self.matched.iter().filter(|&&m| m).count()
    }
}

type Cell = Option<(Value, Choice)>;

struct Grid<'a> {
    a: &'a [Token],
    b: &'a [Token],
    pre: Vec<Vec<usize>>,
    suf: Vec<Vec<usize>>,
    total: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Step {
    Match,
    Edit,
}

impl<'a> Grid<'a> {
    fn new(a: &'a [Token], b: &'a [Token]) -> Self {
        let pre = prefix_table(a, b);
        let suf = suffix_table(a, b);
        let total = suf[0][0];
        Grid {
            a,
            b,
            pre,
            suf,
            total,
        }
    }

    /// Optimal single steps out of `(i, j)`.
    fn steps(&self, i: usize, j: usize) -> Vec<(Step, usize, usize)> {
        let base = self.pre[i][j];
        let mut out = Vec::with_capacity(3);
        let (n, m) = (self.a.len(), self.b.len());
        if i < n && j < m {
            let same = self.a[i] == self.b[j];
            let w = usize::from(!same);
            if base + w + self.suf[i + 1][j + 1] == self.total {
                out.push((if same { Step::Match } else { Step::Edit }, i + 1, j + 1));
            }
        }
        if i < n && base + 1 + self.suf[i + 1][j] == self.total {
            out.push((Step::Edit, i + 1, j));
        }
        if j < m && base + 1 + self.suf[i][j + 1] == self.total {
            out.push((Step::Edit, i, j + 1));
        }
        out
    }

    /// End cells of every edit starting at `(i, j)`.
    fn edit_ends(&self, i: usize, j: usize, max_gap: usize) -> BTreeSet<(usize, usize)> {
        let mut ends = BTreeSet::new();
        let mut seen = HashSet::new();
        let mut stack = Vec::new();
        for (step, ni, nj) in self.steps(i, j) {
            if step == Step::Edit {
                stack.push((ni, nj, 0usize, true));
            }
        }
        while let Some(state) = stack.pop() {
            if !seen.insert(state) {
                continue;
            }
            let (ci, cj, gaps, after_edit) = state;
            if after_edit {
                ends.insert((ci, cj));
            }
            for (step, ni, nj) in self.steps(ci, cj) {
                match step {
                    Step::Edit => stack.push((ni, nj, gaps, true)),
                    Step::Match if gaps < max_gap => stack.push((ni, nj, gaps + 1, false)),
                    Step::Match => {}
                }
            }
        }
        ends
    }
}

// Lexicographic objective: more matches, then fewer proposed edits.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
struct Value {
    matched: usize,
    proposed: usize,
}

impl Value {
    fn better_than(self, other: Value) -> bool {
        (self.matched, std::cmp::Reverse(self.proposed))
            > (other.matched, std::cmp::Reverse(other.proposed))
    }
}

#[derive(Clone, Copy)]
enum Choice {
    Match,
    Edit(usize, usize),
}

/// Finds the extraction maximizing matches with `gold`, then minimizing the
/// number of proposed edits.
pub fn best_extraction(
    source: &[Token],
    hypothesis: &[Token],
    gold: &HashSet<EditKey>,
    max_gap: usize,
) -> Extraction {
    let grid = Grid::new(source, hypothesis);
    let (n, m) = (source.len(), hypothesis.len());
    let on_lattice = |i: usize, j: usize| grid.pre[i][j] + grid.suf[i][j] == grid.total;

    let key = |i: usize, j: usize, ei: usize, ej: usize| EditKey {
        start: i,
        end: ei,
        replacement: hypothesis[j..ej].to_vec(),
    };

    // best[i][j][flag]: best value from (i, j) to the end; flag set when the
    // previous piece was a pure insertion.
    let mut best: Vec<Vec<[Cell; 2]>> = vec![vec![[None, None]; m + 1]; n + 1];
    best[n][m] = [
        Some((
            Value {
                matched: 0,
                proposed: 0,
            },
            Choice::Match,
        )),
        Some((
            Value {
                matched: 0,
                proposed: 0,
            },
            Choice::Match,
        )),
    ];

    // Every step increases i + j, so visiting cells by decreasing i + j is
    // a valid order.
    for diag in (0..n + m).rev() {
        for i in (0..=n).rev() {
            if i > diag || diag - i > m {
                continue;
            }
            let j = diag - i;
            if !on_lattice(i, j) {
                continue;
            }
            let match_next = grid
                .steps(i, j)
                .into_iter()
                .find(|&(s, _, _)| s == Step::Match)
                .map(|(_, ni, nj)| (ni, nj));
            let ends = grid.edit_ends(i, j, max_gap);
            for flag in 0..2 {
                let mut cur: Option<(Value, Choice)> = None;
                let offer = |v: Value, c: Choice, cur: &mut Option<(Value, Choice)>| {
                    if cur.is_none_or(|(bv, _)| v.better_than(bv)) {
                        *cur = Some((v, c));
                    }
                };
                if let Some((ni, nj)) = match_next {
                    if let Some((v, _)) = best[ni][nj][0] {
                        offer(v, Choice::Match, &mut cur);
                    }
                }
                for &(ei, ej) in &ends {
                    let insertion = ei == i;
                    if insertion && flag == 1 {
                        continue;
                    }
                    if let Some((v, _)) = best[ei][ej][usize::from(insertion)] {
                        let hit = gold.contains(&key(i, j, ei, ej));
                        let v = Value {
                            matched: v.matched + usize::from(hit),
                            proposed: v.proposed + 1,
                        };
                        offer(v, Choice::Edit(ei, ej), &mut cur);
                    }
                }
                best[i][j][flag] = cur;
            }
        }
    }

    let mut edits = Vec::new();
    let mut matched = Vec::new();
    let (mut i, mut j, mut flag) = (0, 0, 0);
    while (i, j) != (n, m) {
        let (_, choice) = best[i][j][flag].expect("the start cell always reaches the end");
        match choice {
            Choice::Match => {
                i += 1;
                j += 1;
                flag = 0;
            }
            Choice::Edit(ei, ej) => {
                let k = key(i, j, ei, ej);
                matched.push(gold.contains(&k));
                edits.push(k);
                flag = usize::from(ei == i);
                i = ei;
                j = ej;
            }
        }
    }
    Extraction { edits, matched }
}
