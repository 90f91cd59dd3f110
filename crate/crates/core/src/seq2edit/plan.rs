//! Tag extraction as a pass-minimizing plan.
//!
//! The target is cut into one segment per slot. A slot whose segment has
//! `m` tokens needs a number of passes that depends only on `m` and on
//! whether the segment already starts with the slot's own token, because a
//! single APPEND at most doubles the tokens a slot owns. The cut is chosen
//! to minimize the worst slot, then the number of slots that must change;
//! the first-pass tag of each slot splits its segment so both halves fit in
//! the remaining passes.

use crate::corpus::{Sentence, Token};

use super::{concat, EditTag, TagSequence};

fn ceil_log2(x: usize) -> usize {
    if x <= 1 {
        0
    } else {
        (usize::BITS - (x - 1).leading_zeros()) as usize
    }
}

/// Passes for a segment that starts with the slot's own token.
fn own(m: usize) -> usize {
    ceil_log2(m)
}

/// Passes for a token slot whose segment does not start with the token.
fn foreign(m: usize) -> usize {
    if m == 0 {
        1
    } else {
        ceil_log2(m + 1)
    }
}

/// Passes for the sentinel slot.
fn sentinel(m: usize) -> usize {
    ceil_log2(m + 1)
}

const INF: usize = usize::MAX / 4;

struct Planner<'a> {
    src: &'a [Token],
    tgt: &'a [Token],
}

impl Planner<'_> {
    fn slots(&self) -> usize {
        self.src.len() + 1
    }

    fn need(&self, slot: usize, a: usize, b: usize) -> usize {
        let m = b - a;
        if slot == 0 {
            return sentinel(m);
        }
        let tok = &self.src[slot - 1];
        if m > 0 && self.tgt[a] == *tok {
            own(m)
        } else {
            foreign(m)
        }
    }

    fn changes(&self, slot: usize, a: usize, b: usize) -> bool {
        if slot == 0 {
            b > a
        } else {
            !(b == a + 1 && self.tgt[a] == self.src[slot - 1])
        }
    }

    /// Smallest achievable worst-slot pass count.
    fn min_passes(&self) -> usize {
        let (s, m) = (self.slots(), self.tgt.len());
        let mut best = vec![vec![INF; m + 1]; s + 1];
        best[s][m] = 0;
        for slot in (0..s).rev() {
            for a in 0..=m {
                best[slot][a] = (a..=m)
                    .filter(|&b| best[slot + 1][b] < INF)
                    .map(|b| self.need(slot, a, b).max(best[slot + 1][b]))
                    .min()
                    .unwrap_or(INF);
            }
        }
        best[0][0]
    }

    /// Segment end per slot, minimizing changed slots under the pass budget.
    fn cut(&self, budget: usize) -> Vec<(usize, usize)> {
        let (s, m) = (self.slots(), self.tgt.len());
        let mut cost = vec![vec![INF; m + 1]; s + 1];
        cost[s][m] = 0;
        for slot in (0..s).rev() {
            for a in 0..=m {
                cost[slot][a] = (a..=m)
                    .filter(|&b| cost[slot + 1][b] < INF && self.need(slot, a, b) <= budget)
                    .map(|b| usize::from(self.changes(slot, a, b)) + cost[slot + 1][b])
                    .min()
                    .unwrap_or(INF);
            }
        }
        let mut segs = Vec::with_capacity(s);
        let mut a = 0;
        for slot in 0..s {
            // longest segment first, so material attaches to the earlier slot
            let b = (a..=m)
                .rev()
                .find(|&b| {
                    cost[slot + 1][b] < INF
                        && self.need(slot, a, b) <= budget
                        && usize::from(self.changes(slot, a, b)) + cost[slot + 1][b]
                            == cost[slot][a]
                })
                .expect("a feasible cut exists under the minimal budget");
            segs.push((a, b));
            a = b;
        }
        segs
    }

    /// First-pass tag for `slot` owning `tgt[a..b]`, with `budget` passes.
    fn first_tag(&self, slot: usize, a: usize, b: usize, budget: usize) -> EditTag {
        let seg = &self.tgt[a..b];
        let m = seg.len();
        let rest = budget.saturating_sub(1);
        if slot == 0 {
            if m == 0 {
                return EditTag::Keep;
            }
            let h = (0..m)
                .find(|&h| sentinel(h) <= rest && own(m - h) <= rest)
                .expect("budget covers the sentinel segment");
            return EditTag::Append(seg[h].clone());
        }
        let tok = &self.src[slot - 1];
        match m {
            0 => EditTag::Delete,
            1 if seg[0] == *tok => EditTag::Keep,
            1 => EditTag::Replace(seg[0].clone()),
            _ if seg[0] == *tok => {
                let h = (1..m)
                    .find(|&h| own(h) <= rest && own(m - h) <= rest)
                    .expect("budget covers the segment");
                EditTag::Append(seg[h].clone())
            }
            _ => {
                let h = (1..m)
                    .chain(std::iter::once(0))
                    .find(|&h| foreign(h) <= rest && own(m - h) <= rest)
                    .expect("budget covers the segment");
                EditTag::Append(seg[h].clone())
            }
        }
    }
}

/// Minimum number of passes needed to turn `source` into `target`.
pub fn passes_needed(source: &Sentence, target: &Sentence) -> usize {
    Planner {
        src: source.tokens(),
        tgt: target.tokens(),
    }
    .min_passes()
}

/// First-pass tags on the way from `source` to `target`. Repeating
/// extraction on each intermediate result reaches `target` in
/// [`passes_needed`] passes.
pub fn extract_tags_for(source: &Sentence, target: &Sentence) -> TagSequence {
    let planner = Planner {
        src: source.tokens(),
        tgt: target.tokens(),
    };
    let budget = planner.min_passes();
    let segs = planner.cut(budget);
    let mut tags: Vec<EditTag> = segs
        .iter()
        .enumerate()
        .map(|(slot, &(a, b))| planner.first_tag(slot, a, b, budget))
        .collect();

    // a replaced token plus a deleted neighbour that spell the replacement
    // together become MERGE + KEEP
    let src = source.tokens();
    let mut i = 0;
    while i + 1 < src.len() {
        let (x, y) = (&tags[i + 1], &tags[i + 2]);
        let joined = || concat(&src[i], &src[i + 1]);
        let merge = match (x, y) {
            (EditTag::Replace(t), EditTag::Delete) | (EditTag::Delete, EditTag::Replace(t)) => {
                *t == joined()
            }
            _ => false,
        };
        if merge {
            tags[i + 1] = EditTag::Merge;
            tags[i + 2] = EditTag::Keep;
            i += 2;
        } else {
            i += 1;
        }
    }
    TagSequence::new(tags)
}
