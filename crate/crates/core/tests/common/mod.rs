#![allow(dead_code)]

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;

use agec_core::corpus::{apply_edits, toks, Edit, EditKey, EditSet};
use agec_core::scorer::Counts;
use agec_core::seq2edit::{EditTag, TagSequence};
use agec_core::{AnnotatedExample, Sentence, Token};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const VOCAB: [&str; 5] = ["a", "b", "c", "d", "e"];

pub fn s(text: &str) -> Sentence {
    Sentence::from_text(text)
}

pub fn tok(text: &str) -> Token {
    Token::new(text).unwrap()
}

pub fn clean_fixture() -> Vec<Sentence> {
    include_str!("../data/clean200.txt")
        .lines()
        .map(Sentence::from_text)
        .collect()
}

/// Erroneous/correct pairs, one per coarse class, in logical token order.
pub const CLASS_EXAMPLES: [(&str, &str, &str); 7] = [
    ("Orthographic", "الرجل يرب الفرس .", "الرجل يركب الفرس ."),
    ("Punctuation", "الرجل ، يركب الفرس .", "الرجل يركب الفرس ."),
    ("Syntactic", "وجد رجلا يركب فرس .", "وجد رجلا يركب فرسا ."),
    ("Merge", "غداالرجل سيركب الفرس .", "غدا الرجل سيركب الفرس ."),
    ("Split", "غدا الرجل ير كب الفرس .", "غدا الرجل يركب الفرس ."),
    (
        "Semantic",
        "الرجل يجلس في ظهر الفرس .",
        "الرجل يجلس على ظهر الفرس .",
    ),
    (
        "Morphological",
        "غدا الرجل ركب الفرس .",
        "غدا الرجل سيركب الفرس .",
    ),
];

/// One sentence rendered under the four normalization regimes, keyed by mode.
pub const REGIME_ROWS: [(&str, &str); 4] = [
    (
        "exact",
        "نحن معشر العرب نعرف إلا الشماتة ، ولكن يجب أن ندرس هذه الحالة ونحن المخرج منها من الاقتصاد الإسلامي.",
    ),
    (
        "no-alif-ya",
        "نحن معشر العرب نعرف الا الشماتة ، ولكن يجب ان ندرس هذه الحالة ونحن المخرج منها من الاقتصاد الاسلامي.",
    ),
    (
        "no-punct",
        "نحن معشر العرب نعرف إلا الشماتة ولكن يجب أن ندرس هذه الحالة ونحن المخرج منها من الاقتصاد الإسلامي",
    ),
    (
        "none",
        "نحن معشر العرب نعرف الا الشماتة ولكن يجب ان ندرس هذه الحالة ونحن المخرج منها من الاقتصاد الاسلامي",
    ),
];

// ---------------------------------------------------------------------------
// Levenshtein by memoised recursion

pub fn recursive_levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    fn go<T: PartialEq>(
        a: &[T],
        b: &[T],
        i: usize,
        j: usize,
        memo: &mut HashMap<(usize, usize), usize>,
    ) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&d) = memo.get(&(i, j)) {
            return d;
        }
        let diag = go(a, b, i + 1, j + 1, memo) + usize::from(a[i] != b[j]);
        let del = go(a, b, i + 1, j, memo) + 1;
        let ins = go(a, b, i, j + 1, memo) + 1;
        let d = diag.min(del).min(ins);
        memo.insert((i, j), d);
        d
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

// ---------------------------------------------------------------------------
// Exhaustive maximal-match oracle

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Match,
    Sub,
    Del,
    Ins,
}

fn optimal_paths(a: &[Token], b: &[Token]) -> Vec<Vec<Op>> {
    let rest: Vec<Vec<usize>> = (0..=a.len())
        .map(|i| {
            (0..=b.len())
                .map(|j| recursive_levenshtein(&a[i..], &b[j..]))
                .collect()
        })
        .collect();
    let total = rest[0][0];
    let mut out = Vec::new();
    let mut stack: Vec<(usize, usize, usize, Vec<Op>)> = vec![(0, 0, 0, Vec::new())];
    while let Some((i, j, spent, ops)) = stack.pop() {
        if i == a.len() && j == b.len() {
            out.push(ops);
            continue;
        }
        let mut moves = Vec::new();
        if i < a.len() && j < b.len() {
            if a[i] == b[j] {
                moves.push((Op::Match, i + 1, j + 1, 0));
            } else {
                moves.push((Op::Sub, i + 1, j + 1, 1));
            }
        }
        if i < a.len() {
            moves.push((Op::Del, i + 1, j, 1));
        }
        if j < b.len() {
            moves.push((Op::Ins, i, j + 1, 1));
        }
        for (op, ni, nj, w) in moves {
            if spent + w + rest[ni][nj] == total {
                let mut next = ops.clone();
                next.push(op);
                stack.push((ni, nj, spent + w, next));
            }
        }
    }
    out
}

/// Every distinct edit-key list obtainable by cutting some optimal path into
/// edits.
pub fn all_extractions(a: &[Token], b: &[Token], max_gap: usize) -> HashSet<Vec<EditKey>> {
    let mut found = HashSet::new();
    for ops in optimal_paths(a, b) {
        let mut pos = vec![(0usize, 0usize)];
        for op in &ops {
            let (i, j) = *pos.last().unwrap();
            pos.push(match op {
                Op::Match | Op::Sub => (i + 1, j + 1),
                Op::Del => (i + 1, j),
                Op::Ins => (i, j + 1),
            });
        }
        let edits: Vec<usize> = (0..ops.len()).filter(|&k| ops[k] != Op::Match).collect();
        if edits.is_empty() {
            found.insert(Vec::new());
            continue;
        }
        let gaps: Vec<usize> = edits.windows(2).map(|w| w[1] - w[0] - 1).collect();
        for mask in 0u32..(1 << gaps.len()) {
            // bit k set: edit ops k and k+1 are in the same group
            let mut groups: Vec<(usize, usize, usize)> = Vec::new(); // first op, last op, interior matches
            let mut cur = (edits[0], edits[0], 0);
            for (k, &g) in gaps.iter().enumerate() {
                if mask & (1 << k) != 0 {
                    cur.1 = edits[k + 1];
                    cur.2 += g;
                } else {
                    groups.push(cur);
                    cur = (edits[k + 1], edits[k + 1], 0);
                }
            }
            groups.push(cur);
            if groups.iter().any(|g| g.2 > max_gap) {
                continue;
            }
            let pure_insert = |g: &(usize, usize, usize)| (g.0..=g.1).all(|k| ops[k] == Op::Ins);
            let adjacent_inserts = groups
                .windows(2)
                .any(|w| w[1].0 == w[0].1 + 1 && pure_insert(&w[0]) && pure_insert(&w[1]));
            if adjacent_inserts {
                continue;
            }
            let keys = groups
                .iter()
                .map(|&(first, last, _)| {
                    let (si, sj) = pos[first];
                    let (ei, ej) = pos[last + 1];
                    Edit::new(si, ei, b[sj..ej].to_vec()).key()
                })
                .collect();
            found.insert(keys);
        }
    }
    found
}

/// Per gold alternative: the extraction with the most gold matches, and among
/// those the fewest edits.
pub fn oracle_counts(example: &AnnotatedExample, hyp: &Sentence, max_gap: usize) -> Vec<Counts> {
    let extractions = all_extractions(example.source.tokens(), hyp.tokens(), max_gap);
    example
        .gold
        .iter()
        .map(|set| {
            let gold: HashSet<EditKey> = set.edits.iter().map(Edit::key).collect();
            let (matched, proposed) = extractions
                .iter()
                .map(|x| (x.iter().filter(|k| gold.contains(k)).count(), x.len()))
                .max_by_key(|&(m, p)| (m, std::cmp::Reverse(p)))
                .unwrap();
            Counts {
                matched,
                proposed,
                gold: set.edits.len(),
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Random instances

fn random_tokens(rng: &mut ChaCha8Rng, vocab: &[&str], len: usize) -> Vec<Token> {
    (0..len)
        .map(|_| tok(vocab[rng.random_range(0..vocab.len())]))
        .collect()
}

/// Up to `max_edits` valid, non-identity edits on a source of `src` tokens.
pub fn random_edit_set(
    rng: &mut ChaCha8Rng,
    src: &[Token],
    vocab: &[&str],
    max_edits: usize,
) -> Vec<Edit> {
    let want = rng.random_range(0..=max_edits);
    let mut edits: Vec<Edit> = Vec::new();
    let mut cursor = 0usize;
    for _ in 0..want {
        if cursor > src.len() {
            break;
        }
        let start = rng.random_range(cursor..=src.len());
        let span = rng.random_range(0..=2usize.min(src.len() - start));
        let end = start + span;
        let rep_len = rng.random_range(0..=2);
        let rep = random_tokens(rng, vocab, rep_len);
        if span == 0 && rep.is_empty() {
            continue;
        }
        if src[start..end] == rep[..] {
            continue;
        }
        edits.push(Edit::new(start, end, rep));
        cursor = if span == 0 { start + 1 } else { end };
    }
    edits
}

/// A source, one or two gold alternatives, and a hypothesis near the first one.
pub fn m2_instance(rng: &mut ChaCha8Rng) -> (AnnotatedExample, Sentence) {
    let len = rng.random_range(0..=8);
    let src = random_tokens(rng, &VOCAB, len);
    let alternatives = rng.random_range(1..=2);
    let gold: Vec<EditSet> = (0..alternatives)
        .map(|k| {
            let edits = random_edit_set(rng, &src, &VOCAB, 3)
                .into_iter()
                .map(|e| e.with_annotator(k))
                .collect();
            EditSet::new(k, edits)
        })
        .collect();
    let source = Sentence::new(src.clone());
    let hyp = match rng.random_range(0..4) {
        0 => {
            let n = rng.random_range(0..=5);
            Sentence::new(random_tokens(rng, &VOCAB, n))
        }
        _ => {
            let base: Vec<Edit> = gold[0]
                .edits
                .iter()
                .filter(|_| rng.random_bool(0.7))
                .cloned()
                .collect();
            let mut h = apply_edits(&source, &base).unwrap();
            if rng.random_bool(0.4) {
                let extra = random_edit_set(rng, h.tokens(), &VOCAB, 1);
                h = apply_edits(&h, &extra).unwrap();
            }
            h
        }
    };
    (AnnotatedExample::new(source, gold), hyp)
}

// ---------------------------------------------------------------------------
// Layered tag sampling

pub fn random_tags(rng: &mut ChaCha8Rng, n: usize, vocab: &[&str]) -> TagSequence {
    let pick = |rng: &mut ChaCha8Rng| tok(vocab[rng.random_range(0..vocab.len())]);
    let mut tags = Vec::with_capacity(n + 1);
    tags.push(if rng.random_bool(0.2) {
        EditTag::Append(pick(rng))
    } else {
        EditTag::Keep
    });
    let mut forced_keep = false;
    for i in 0..n {
        if forced_keep {
            tags.push(EditTag::Keep);
            forced_keep = false;
            continue;
        }
        let tag = match rng.random_range(0..10) {
            0..=4 => EditTag::Keep,
            5 => EditTag::Delete,
            6 => EditTag::Replace(pick(rng)),
            7 | 8 => EditTag::Append(pick(rng)),
            _ if i + 1 < n => {
                forced_keep = true;
                EditTag::Merge
            }
            _ => EditTag::Keep,
        };
        tags.push(tag);
    }
    TagSequence::new(tags)
}

/// A source and the result of stacking 1..=`max_layers` random tag passes on it.
pub fn layered_pair(rng: &mut ChaCha8Rng, max_layers: usize) -> (Sentence, Sentence) {
    let len = rng.random_range(0..=7);
    let source = Sentence::new(random_tokens(rng, &VOCAB, len));
    let layers = rng.random_range(1..=max_layers);
    let mut current = source.clone();
    for _ in 0..layers {
        let tags = random_tags(rng, current.len(), &VOCAB);
        current = agec_core::seq2edit::apply_tags(&current, &tags).unwrap();
    }
    (source, current)
}

// ---------------------------------------------------------------------------
// Normalization fixtures

const NORM_CHARS: [&str; 18] = [
    "ا", "أ", "إ", "آ", "ى", "ي", "ب", "ت", "ة", "ه", "ئ", "ؤ", "،", ".", "؟", "!", "م", "ل",
];

pub fn random_arabic_token(rng: &mut ChaCha8Rng) -> Token {
    let len = rng.random_range(1..=5);
    let text: String = (0..len)
        .map(|_| NORM_CHARS[rng.random_range(0..NORM_CHARS.len())])
        .collect();
    tok(&text)
}

pub fn random_arabic_sentence(rng: &mut ChaCha8Rng, max_len: usize) -> Sentence {
    let len = rng.random_range(0..=max_len);
    Sentence::new((0..len).map(|_| random_arabic_token(rng)).collect())
}

/// A random sentence with valid gold edits drawn from its own alphabet.
pub fn random_arabic_example(rng: &mut ChaCha8Rng) -> AnnotatedExample {
    let source = random_arabic_sentence(rng, 7);
    let pool: Vec<String> = (0..6)
        .map(|_| random_arabic_token(rng).as_str().to_string())
        .collect();
    let pool: Vec<&str> = pool.iter().map(String::as_str).collect();
    let edits = random_edit_set(rng, source.tokens(), &pool, 3);
    AnnotatedExample::single(source, edits)
}

// ---------------------------------------------------------------------------
// Goldens

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

/// Compares `actual` with the frozen file; `AGEC_BLESS=1` rewrites it.
pub fn golden_matches(name: &str, actual: &str) -> bool {
    let path = golden_path(name);
    if std::env::var_os("AGEC_BLESS").is_some() {
        std::fs::write(&path, actual).unwrap();
        return true;
    }
    match std::fs::read_to_string(&path) {
        Ok(frozen) => frozen == actual,
        Err(_) => false,
    }
}

pub fn exemplar_pool() -> Vec<agec_core::prompt::FewShotExemplar> {
    CLASS_EXAMPLES
        .iter()
        .enumerate()
        .map(|(i, (_, bad, good))| {
            agec_core::prompt::FewShotExemplar::new(format!("ex-{i}"), s(bad), s(good))
        })
        .collect()
}

pub fn words(text: &str) -> Vec<Token> {
    toks(text)
}
