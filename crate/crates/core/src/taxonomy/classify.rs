//! Rule cascade assigning a taxonomy code to an edit. The first rule that
//! fires wins; see the crate README for the full order.

use crate::align::{align_slices, levenshtein, OpKind};
use crate::corpus::{Edit, Sentence, Token};
use crate::normalize::CharClassTable;

use super::{ErrorClass, FineCode};

const HAMZA_ALIFS: [char; 4] = ['أ', 'إ', 'آ', 'ٱ'];
const TANWIN: [char; 3] = ['\u{064B}', '\u{064C}', '\u{064D}'];
const CASE_ENDINGS: [&str; 6] = ["ا", "اً", "ًا", "\u{064B}", "\u{064C}", "\u{064D}"];
const PREFIXES: [&str; 5] = ["س", "سي", "ست", "سن", "سأ"];
const SUFFIXES: [&str; 7] = ["ون", "ين", "ان", "ات", "تم", "نا", "ت"];

/// Character-level edit distance.
pub fn char_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein(&a, &b)
}

fn concat(tokens: &[Token]) -> String {
    tokens.iter().map(Token::as_str).collect()
}

fn punct_seq(tokens: &[Token], table: &CharClassTable) -> Vec<char> {
    tokens
        .iter()
        .flat_map(|t| t.as_str().chars())
        .filter(|&c| table.is_punct(c))
        .collect()
}

fn stripped(tokens: &[Token], table: &CharClassTable) -> Vec<String> {
    tokens
        .iter()
        .map(|t| table.strip_punct(t.as_str()))
        .filter(|s| !s.is_empty())
        .collect()
}

fn punctuation_code(src: &[Token], rep: &[Token], table: &CharClassTable) -> Option<FineCode> {
    let (sp, rp) = (punct_seq(src, table), punct_seq(rep, table));
    if (sp.is_empty() && rp.is_empty()) || stripped(src, table) != stripped(rep, table) {
        return None;
    }
    Some(if sp.is_empty() {
        FineCode::PM
    } else if rp.is_empty() {
        FineCode::PT
    } else if sp == rp {
        FineCode::PO
    } else {
        FineCode::PC
    })
}

fn fold_hamza(s: &str) -> String {
    s.chars()
        .map(|c| if HAMZA_ALIFS.contains(&c) { 'ا' } else { c })
        .collect()
}

/// Same stem, final characters forming the pair `{x, y}`.
fn final_pair(a: &[char], b: &[char], x: char, y: char) -> bool {
    match (a.split_last(), b.split_last()) {
        (Some((&ea, sa)), Some((&eb, sb))) => {
            sa == sb && ((ea == x && eb == y) || (ea == y && eb == x))
        }
        _ => false,
    }
}

/// `long` is `short` followed by one of `suffixes`.
fn has_suffix(long: &str, short: &str, suffixes: &[&str]) -> bool {
    long.strip_prefix(short)
        .is_some_and(|rest| suffixes.contains(&rest))
}

fn has_prefix(long: &str, short: &str, prefixes: &[&str]) -> bool {
    long.strip_suffix(short)
        .is_some_and(|rest| prefixes.contains(&rest))
}

fn either<F: Fn(&str, &str) -> bool>(a: &str, b: &str, f: F) -> bool {
    f(a, b) || f(b, a)
}

fn nun_tanwin(a: &str, b: &str) -> bool {
    let base = |s: &str| -> Option<String> {
        let chars: Vec<char> = s.chars().collect();
        match chars.as_slice() {
            [rest @ .., 'ا', t] | [rest @ .., t, 'ا'] if TANWIN.contains(t) => {
                Some(rest.iter().collect())
            }
            [rest @ .., t] if TANWIN.contains(t) => Some(rest.iter().collect()),
            _ => None,
        }
    };
    either(a, b, |x, y| match (base(x), y.strip_suffix('ن')) {
        (Some(bx), Some(by)) => !bx.is_empty() && bx == by,
        _ => false,
    })
}

fn adjacent_transposition(a: &[char], b: &[char]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let diff: Vec<usize> = (0..a.len()).filter(|&i| a[i] != b[i]).collect();
    matches!(diff.as_slice(), [i, j] if *j == i + 1 && a[*i] == b[*j] && a[*j] == b[*i])
}

/// Single-token replacement `erroneous -> correct`.
fn word_code(erroneous: &str, correct: &str) -> FineCode {
    let a: Vec<char> = erroneous.chars().collect();
    let b: Vec<char> = correct.chars().collect();

    if fold_hamza(erroneous) == fold_hamza(correct) {
        return FineCode::OH;
    }
    if final_pair(&a, &b, 'ة', 'ه') {
        return FineCode::OT;
    }
    if final_pair(&a, &b, 'ى', 'ي') {
        return FineCode::OA;
    }
    if either(erroneous, correct, |x, y| {
        x.ends_with("وا") && has_suffix(x, y, &["ا"])
    }) {
        return FineCode::OW;
    }
    if nun_tanwin(erroneous, correct) {
        return FineCode::ON;
    }
    if either(erroneous, correct, |x, y| has_suffix(x, y, &CASE_ENDINGS)) {
        return FineCode::XO;
    }
    if either(erroneous, correct, |x, y| {
        has_prefix(x, y, &PREFIXES) || has_suffix(x, y, &SUFFIXES)
    }) {
        return FineCode::MO;
    }

    let path = align_slices(&a, &b);
    let d = path.cost;
    let half = a.len().max(b.len()).div_ceil(2);
    let has_sub = path.ops.iter().any(|o| o.kind == OpKind::Substitute);
    if b.len() > a.len() && d == b.len() - a.len() && d <= half {
        return FineCode::OM;
    }
    if a.len() > b.len() && d == a.len() - b.len() && d <= half {
        return FineCode::OD;
    }
    if adjacent_transposition(&a, &b) {
        return FineCode::OC;
    }
    if d <= half {
        return if has_sub { FineCode::OR } else { FineCode::OO };
    }
    FineCode::SW
}

/// Classifies `edit` (on `source`) with the default character table.
pub fn classify_edit(source: &Sentence, edit: &Edit) -> ErrorClass {
    classify_edit_with(source, edit, &CharClassTable::default())
}

pub fn classify_edit_with(source: &Sentence, edit: &Edit, table: &CharClassTable) -> ErrorClass {
    let src = &source.tokens()[edit.start..edit.end];
    let rep = &edit.replacement[..];
    if let Some(code) = punctuation_code(src, rep, table) {
        return code.into();
    }
    let code = match (src, rep) {
        ([one], many) if many.len() >= 2 && concat(many) == one.as_str() => FineCode::MG,
        (many, [one]) if many.len() >= 2 && concat(many) == one.as_str() => FineCode::SP,
        ([], _) => FineCode::XM,
        (_, []) => FineCode::XT,
        ([x], [y]) => word_code(x.as_str(), y.as_str()),
        _ => FineCode::SW,
    };
    code.into()
}
