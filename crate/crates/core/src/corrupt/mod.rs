//! Seeded error injection: clean sentence in, noisy sentence plus the gold
//! repair edits out.
//!
//! Each sentence is split into units. An untouched unit is one clean token
//! copied as is; an injected unit maps a clean span to different noisy
//! tokens and yields one repair edit. An injection is kept only when the
//! repair classifies back to the injected code and the token-level distance
//! between noisy and clean equals the sum of the unit costs, so the repairs
//! lie on a minimal alignment and the scorer can recover every one of them.

use std::collections::BTreeMap;
use std::ops::Range;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_general_category::{get_general_category, GeneralCategory};

use crate::align::levenshtein;
use crate::corpus::{apply_edits, emit_m2, emit_parallel, AnnotatedExample, Edit, Sentence, Token};
use crate::par::{self, Execution};
use crate::prompt::{PromptRequest, Prompts};
use crate::taxonomy::{classify_edit, ErrorClass, FineCode};

/// Codes the injectors know how to produce.
pub const EMIT_SET: [FineCode; 15] = [
    FineCode::OH,
    FineCode::OT,
    FineCode::OA,
    FineCode::OR,
    FineCode::OD,
    FineCode::OM,
    FineCode::OC,
    FineCode::PM,
    FineCode::PT,
    FineCode::PC,
    FineCode::XM,
    FineCode::XT,
    FineCode::MG,
    FineCode::SP,
    FineCode::SW,
];

/// Function words used for word insertions and substitutions when the spec
/// brings no lexicon.
pub const DEFAULT_LEXICON: [&str; 24] = [
    "في", "من", "على", "إلى", "عن", "مع", "هذا", "هذه", "التي", "الذي", "ثم", "أو", "قد", "لقد",
    "لكن", "حتى", "كان", "كل", "بعد", "قبل", "عند", "بين", "هناك", "أيضا",
];

const PLAIN: [char; 20] = [
    'ب', 'ث', 'ج', 'ح', 'خ', 'د', 'ذ', 'ر', 'ز', 'ش', 'ص', 'ض', 'ط', 'ظ', 'ع', 'غ', 'ف', 'ق', 'ك',
    'ل',
];
const ALIF_FORMS: [char; 4] = ['ا', 'أ', 'إ', 'آ'];
const PUNCT_TOKENS: [&str; 6] = ["،", ".", "؟", "؛", "!", ":"];

fn is_plain(c: char) -> bool {
    PLAIN.contains(&c)
}

fn is_mark(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::NonspacingMark
            | GeneralCategory::SpacingMark
            | GeneralCategory::EnclosingMark
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorsPerSentence {
    /// Exactly this many injections.
    Fixed(usize),
    /// Each token independently triggers one injection with this probability.
    Rate(f64),
}

impl ErrorsPerSentence {
    fn is_zero(self) -> bool {
        match self {
            ErrorsPerSentence::Fixed(n) => n == 0,
            ErrorsPerSentence::Rate(r) => r == 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorruptionSpec {
    pub weights: BTreeMap<FineCode, f64>,
    pub errors_per_sentence: ErrorsPerSentence,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lexicon: Option<Vec<String>>,
}

impl Default for CorruptionSpec {
    /// Replace-, append-, delete- and merge-shaped repairs weighted
    /// 201 : 75 : 13 : 5.7, split evenly over the codes of each shape.
    fn default() -> Self {
        use FineCode::*;
        let mut weights = BTreeMap::new();
        let replace = [OH, OT, OA, OR, OD, OM, OC, PC, SW];
        for c in replace {
            weights.insert(c, 201.0 / replace.len() as f64);
        }
        for c in [PM, XM] {
            weights.insert(c, 75.0 / 2.0);
        }
        for c in [PT, XT] {
            weights.insert(c, 13.0 / 2.0);
        }
        for c in [MG, SP] {
            weights.insert(c, 5.7);
        }
        CorruptionSpec {
            weights,
            errors_per_sentence: ErrorsPerSentence::Fixed(1),
            seed: 0,
            lexicon: None,
        }
    }
}

impl CorruptionSpec {
    pub fn only(code: FineCode, errors: usize, seed: u64) -> Self {
        CorruptionSpec {
            weights: [(code, 1.0)].into_iter().collect(),
            errors_per_sentence: ErrorsPerSentence::Fixed(errors),
            seed,
            lexicon: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CorruptError> {
        let spec: CorruptionSpec =
            serde_json::from_str(text).map_err(|e| CorruptError::Spec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), CorruptError> {
        for (&code, &w) in &self.weights {
            if !EMIT_SET.contains(&code) {
                return Err(CorruptError::Spec(format!(
                    "code {code} cannot be injected"
                )));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(CorruptError::Spec(format!(
                    "weight of {code} must be a non-negative number"
                )));
            }
        }
        if let ErrorsPerSentence::Rate(r) = self.errors_per_sentence {
            if !(0.0..=1.0).contains(&r) {
                return Err(CorruptError::Spec("rate must lie in [0, 1]".into()));
            }
        }
        if !self.errors_per_sentence.is_zero() && !self.weights.values().any(|&w| w > 0.0) {
            return Err(CorruptError::Spec(
                "at least one weight must be positive".into(),
            ));
        }
        Ok(())
    }

    fn lexicon(&self) -> Vec<Token> {
        match &self.lexicon {
            Some(words) => words.iter().filter_map(|w| Token::new(w).ok()).collect(),
            None => DEFAULT_LEXICON
                .iter()
                .map(|w| Token::new(w).expect("lexicon words are tokens"))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorruptError {
    #[error("cannot corrupt an empty sentence (item {0})")]
    EmptySentence(usize),
    #[error("corruption spec: {0}")]
    Spec(String),
    #[error("sample of {requested} requested from a corpus of {available}")]
    SampleTooLarge { requested: usize, available: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorruptionResult {
    pub noisy: Sentence,
    pub clean: Sentence,
    /// Edits on `noisy` that rebuild `clean`, sorted by span.
    pub repair_edits: Vec<Edit>,
    pub injected_classes: Vec<ErrorClass>,
    /// Fewer injections than requested were possible.
    pub degraded: bool,
}

impl CorruptionResult {
    pub fn to_example(&self) -> AnnotatedExample {
        AnnotatedExample::single(self.noisy.clone(), self.repair_edits.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Unit {
    clean: Range<usize>,
    noisy: Vec<Token>,
    code: Option<FineCode>,
}

impl Unit {
    fn untouched(&self) -> bool {
        self.code.is_none()
    }

    fn cost(&self) -> usize {
        self.clean.len().max(self.noisy.len())
    }
}

struct Draft<'a> {
    clean: &'a [Token],
    units: Vec<Unit>,
}

impl<'a> Draft<'a> {
    fn new(clean: &'a [Token]) -> Self {
        let units = clean
            .iter()
            .enumerate()
            .map(|(i, t)| Unit {
                clean: i..i + 1,
                noisy: vec![t.clone()],
                code: None,
            })
            .collect();
        Draft { clean, units }
    }

    fn noisy(units: &[Unit]) -> Vec<Token> {
        units.iter().flat_map(|u| u.noisy.iter().cloned()).collect()
    }

    fn repairs(&self) -> Vec<Edit> {
        let mut pos = 0;
        let mut out = Vec::new();
        for u in &self.units {
            if let Some(code) = u.code {
                let e = Edit::new(
                    pos,
                    pos + u.noisy.len(),
                    self.clean[u.clean.clone()].to_vec(),
                );
                out.push(e.with_class(code.into()));
            }
            pos += u.noisy.len();
        }
        out
    }

    fn closes(&self, units: &[Unit]) -> bool {
        let noisy = Self::noisy(units);
        if noisy.is_empty() {
            return false;
        }
        let adjacent_gaps = units.windows(2).any(|w| {
            !w[0].untouched() && !w[1].untouched() && w[0].noisy.is_empty() && w[1].noisy.is_empty()
        });
        if adjacent_gaps {
            return false;
        }
        let budget: usize = units
            .iter()
            .filter(|u| !u.untouched())
            .map(Unit::cost)
            .sum();
        levenshtein(&noisy, self.clean) == budget
    }

    fn token(&self, unit: usize) -> Option<&Token> {
        let u = &self.units[unit];
        (u.untouched() && u.clean.len() == 1).then(|| &self.clean[u.clean.start])
    }

    /// Gaps where a new noisy-only unit may go: neither neighbour injected.
    fn free_gaps(&self) -> Vec<usize> {
        (0..=self.units.len())
            .filter(|&k| {
                (k == 0 || self.units[k - 1].untouched())
                    && (k == self.units.len() || self.units[k].untouched())
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
enum Change {
    Replace { unit: usize, noisy: Vec<Token> },
    Join { unit: usize },
    Insert { gap: usize, token: Token },
}

fn apply_change(d: &Draft<'_>, change: &Change, code: FineCode) -> Vec<Unit> {
    let mut units = d.units.clone();
    match change {
        Change::Replace { unit, noisy } => {
            units[*unit].noisy = noisy.clone();
            units[*unit].code = Some(code);
        }
        Change::Join { unit } => {
            let second = units.remove(unit + 1);
            let first = &mut units[*unit];
            let joined = format!("{}{}", first.noisy[0].as_str(), second.noisy[0].as_str());
            first.clean = first.clean.start..second.clean.end;
            first.noisy = vec![Token::new(&joined).expect("joined tokens are tokens")];
            first.code = Some(code);
        }
        Change::Insert { gap, token } => {
            let at = units.get(*gap).map_or(d.clean.len(), |u| u.clean.start);
            units.insert(
                *gap,
                Unit {
                    clean: at..at,
                    noisy: vec![token.clone()],
                    code: Some(code),
                },
            );
        }
    }
    units
}

fn replace_chars(chars: &[char]) -> Option<Vec<Token>> {
    let s: String = chars.iter().collect();
    Token::new(&s).ok().map(|t| vec![t])
}

fn word_candidates(chars: &[char], code: FineCode) -> Vec<Vec<Token>> {
    let n = chars.len();
    let mut out = Vec::new();
    let mut push = |v: Vec<char>| {
        if let Some(t) = replace_chars(&v) {
            out.push(t);
        }
    };
    match code {
        FineCode::OH => {
            for (i, &c) in chars.iter().enumerate() {
                if ALIF_FORMS.contains(&c) {
                    for &f in ALIF_FORMS.iter().filter(|&&f| f != c) {
                        let mut v = chars.to_vec();
                        v[i] = f;
                        push(v);
                    }
                }
            }
        }
        FineCode::OT | FineCode::OA => {
            let (x, y) = if code == FineCode::OT {
                ('ة', 'ه')
            } else {
                ('ى', 'ي')
            };
            if n >= 2 {
                let last = chars[n - 1];
                let swapped = if last == x {
                    Some(y)
                } else if last == y {
                    Some(x)
                } else {
                    None
                };
                if let Some(s) = swapped {
                    let mut v = chars.to_vec();
                    v[n - 1] = s;
                    push(v);
                }
            }
        }
        FineCode::OR => {
            for i in (0..n).filter(|&i| is_plain(chars[i])) {
                for &p in PLAIN.iter().filter(|&&p| p != chars[i]) {
                    let mut v = chars.to_vec();
                    v[i] = p;
                    push(v);
                }
            }
        }
        FineCode::OM => {
            for i in 1..n.saturating_sub(1) {
                if is_plain(chars[i]) && chars[i] != chars[i - 1] && chars[i] != chars[i + 1] {
                    let mut v = chars.to_vec();
                    v.remove(i);
                    push(v);
                }
            }
        }
        FineCode::OD => {
            for i in 1..n {
                if is_mark(chars[i]) {
                    continue;
                }
                for &p in PLAIN
                    .iter()
                    .filter(|&&p| p != chars[i - 1] && p != chars[i])
                {
                    let mut v = chars.to_vec();
                    v.insert(i, p);
                    push(v);
                }
            }
        }
        FineCode::OC => {
            for i in 0..n.saturating_sub(1) {
                if is_plain(chars[i]) && is_plain(chars[i + 1]) && chars[i] != chars[i + 1] {
                    let mut v = chars.to_vec();
                    v.swap(i, i + 1);
                    push(v);
                }
            }
        }
        FineCode::SP => {
            for i in 1..n {
                if is_mark(chars[i]) || is_mark(chars[i - 1]) {
                    continue;
                }
                let (a, b): (String, String) =
                    (chars[..i].iter().collect(), chars[i..].iter().collect());
                if let (Ok(a), Ok(b)) = (Token::new(&a), Token::new(&b)) {
                    out.push(vec![a, b]);
                }
            }
        }
        _ => {}
    }
    out
}

fn candidates(d: &Draft<'_>, code: FineCode, lexicon: &[Token]) -> Vec<Change> {
    let table = crate::normalize::CharClassTable::default();
    let mut out = Vec::new();
    let tokens: Vec<(usize, &Token)> = (0..d.units.len())
        .filter_map(|u| d.token(u).map(|t| (u, t)))
        .collect();
    match code {
        FineCode::PM => {
            for &(unit, t) in &tokens {
                if table.is_punct_only(t.as_str()) {
                    out.push(Change::Replace {
                        unit,
                        noisy: vec![],
                    });
                } else if table.has_punct(t.as_str()) {
                    if let Ok(s) = Token::new(&table.strip_punct(t.as_str())) {
                        out.push(Change::Replace {
                            unit,
                            noisy: vec![s],
                        });
                    }
                }
            }
        }
        FineCode::PC => {
            for &(unit, t) in &tokens {
                if table.is_punct_only(t.as_str()) {
                    for p in PUNCT_TOKENS.iter().filter(|&&p| p != t.as_str()) {
                        out.push(Change::Replace {
                            unit,
                            noisy: vec![Token::new(p).expect("punctuation tokens")],
                        });
                    }
                }
            }
        }
        FineCode::PT => {
            for gap in d.free_gaps() {
                for p in PUNCT_TOKENS {
                    out.push(Change::Insert {
                        gap,
                        token: Token::new(p).expect("punctuation tokens"),
                    });
                }
            }
        }
        FineCode::XM => {
            let content: Vec<&(usize, &Token)> = tokens
                .iter()
                .filter(|(_, t)| !table.has_punct(t.as_str()))
                .collect();
            let in_lexicon: Vec<&&(usize, &Token)> = content
                .iter()
                .filter(|(_, t)| lexicon.contains(t))
                .collect();
            let pool: Vec<usize> = if in_lexicon.is_empty() {
                content.iter().map(|(u, _)| *u).collect()
            } else {
                in_lexicon.iter().map(|(u, _)| *u).collect()
            };
            out.extend(pool.into_iter().map(|unit| Change::Replace {
                unit,
                noisy: vec![],
            }));
        }
        FineCode::XT => {
            for gap in d.free_gaps() {
                for w in lexicon {
                    out.push(Change::Insert {
                        gap,
                        token: w.clone(),
                    });
                }
            }
        }
        FineCode::MG => {
            for w in tokens.windows(2) {
                let ((u, a), (v, b)) = (w[0], w[1]);
                if v == u + 1 && !table.has_punct(a.as_str()) && !table.has_punct(b.as_str()) {
                    out.push(Change::Join { unit: u });
                }
            }
        }
        FineCode::SW => {
            for &(unit, t) in &tokens {
                if table.has_punct(t.as_str()) {
                    continue;
                }
                for w in lexicon.iter().filter(|w| *w != t) {
                    out.push(Change::Replace {
                        unit,
                        noisy: vec![w.clone()],
                    });
                }
            }
        }
        _ => {
            for &(unit, t) in &tokens {
                if table.has_punct(t.as_str()) {
                    continue;
                }
                let chars: Vec<char> = t.as_str().chars().collect();
                for noisy in word_candidates(&chars, code) {
                    out.push(Change::Replace { unit, noisy });
                }
            }
        }
    }
    out
}

/// Whether the repair of the unit changed by `change` classifies as `code`.
fn classifies_as(d: &Draft<'_>, units: &[Unit], change: &Change, code: FineCode) -> bool {
    let idx = match change {
        Change::Replace { unit, .. } | Change::Join { unit } => *unit,
        Change::Insert { gap, .. } => *gap,
    };
    let u = &units[idx];
    let source = Sentence::new(u.noisy.clone());
    let edit = Edit::new(0, u.noisy.len(), d.clean[u.clean.clone()].to_vec());
    classify_edit(&source, &edit).fine() == Some(code)
}

fn try_inject(d: &mut Draft<'_>, code: FineCode, lexicon: &[Token], rng: &mut ChaCha8Rng) -> bool {
    let mut cands = candidates(d, code, lexicon);
    cands.shuffle(rng);
    for change in cands {
        let units = apply_change(d, &change, code);
        if classifies_as(d, &units, &change, code) && d.closes(&units) {
            d.units = units;
            return true;
        }
    }
    false
}

fn sentence_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Corrupts `clean` with the generator stream of item 0.
pub fn corrupt(clean: &Sentence, spec: &CorruptionSpec) -> Result<CorruptionResult, CorruptError> {
    spec.validate()?;
    corrupt_item(clean, spec, &spec.lexicon(), 0)
}

/// Corrupts `clean` as item `index` of a corpus; each index has its own
/// generator stream.
pub fn corrupt_at(
    clean: &Sentence,
    spec: &CorruptionSpec,
    index: u64,
) -> Result<CorruptionResult, CorruptError> {
    spec.validate()?;
    corrupt_item(clean, spec, &spec.lexicon(), index)
}

fn corrupt_item(
    clean: &Sentence,
    spec: &CorruptionSpec,
    lexicon: &[Token],
    index: u64,
) -> Result<CorruptionResult, CorruptError> {
    if clean.is_empty() {
        return Err(CorruptError::EmptySentence(index as usize));
    }
    let mut rng = sentence_rng(spec.seed, index);
    let wanted = match spec.errors_per_sentence {
        ErrorsPerSentence::Fixed(n) => n,
        ErrorsPerSentence::Rate(r) => (0..clean.len()).filter(|_| rng.random_bool(r)).count(),
    };
    let mut d = Draft::new(clean.tokens());
    let mut open: Vec<(FineCode, f64)> = spec
        .weights
        .iter()
        .filter(|(_, &w)| w > 0.0)
        .map(|(&c, &w)| (c, w))
        .collect();
    let mut injected = 0;
    while injected < wanted && !open.is_empty() {
        let dist = WeightedIndex::new(open.iter().map(|(_, w)| *w)).expect("positive weights");
        let k = dist.sample(&mut rng);
        if try_inject(&mut d, open[k].0, lexicon, &mut rng) {
            injected += 1;
        } else {
            open.remove(k);
        }
    }
    let repair_edits = d.repairs();
    let noisy = Sentence::new(Draft::noisy(&d.units));
    debug_assert_eq!(apply_edits(&noisy, &repair_edits).as_ref(), Ok(clean));
    Ok(CorruptionResult {
        injected_classes: repair_edits.iter().filter_map(|e| e.error_class).collect(),
        noisy,
        clean: clean.clone(),
        repair_edits,
        degraded: injected < wanted,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorruptedCorpus {
    pub results: Vec<CorruptionResult>,
    /// Corpus index of each result.
    pub indices: Vec<usize>,
}

impl CorruptedCorpus {
    pub fn noisy_text(&self) -> String {
        emit_parallel(self.results.iter().map(|r| &r.noisy))
    }

    pub fn clean_text(&self) -> String {
        emit_parallel(self.results.iter().map(|r| &r.clean))
    }

    pub fn examples(&self) -> Vec<AnnotatedExample> {
        self.results
            .iter()
            .map(CorruptionResult::to_example)
            .collect()
    }

    pub fn m2_text(&self) -> String {
        emit_m2(&self.examples())
    }

    pub fn degraded(&self) -> usize {
        self.results.iter().filter(|r| r.degraded).count()
    }
}

/// Stream reserved for drawing the sample.
const SAMPLE_STREAM: u64 = u64::MAX;

pub fn corrupt_corpus(
    clean: &[Sentence],
    spec: &CorruptionSpec,
    sample_size: Option<usize>,
) -> Result<CorruptedCorpus, CorruptError> {
    corrupt_corpus_with(clean, spec, sample_size, Execution::default())
}

/// With `sample_size`, a seeded sample drawn without replacement, in drawn
/// order; otherwise the whole corpus in order.
pub fn corrupt_corpus_with(
    clean: &[Sentence],
    spec: &CorruptionSpec,
    sample_size: Option<usize>,
    exec: Execution,
) -> Result<CorruptedCorpus, CorruptError> {
    spec.validate()?;
    let mut indices: Vec<usize> = (0..clean.len()).collect();
    if let Some(k) = sample_size {
        if k > clean.len() {
            return Err(CorruptError::SampleTooLarge {
                requested: k,
                available: clean.len(),
            });
        }
        indices.shuffle(&mut sentence_rng(spec.seed, SAMPLE_STREAM));
        indices.truncate(k);
    }
    let lexicon = spec.lexicon();
    let results = par::map(exec, &indices, |_, &i| {
        corrupt_item(&clean[i], spec, &lexicon, i as u64)
    });
    Ok(CorruptedCorpus {
        results: results.into_iter().collect::<Result<_, _>>()?,
        indices,
    })
}

/// Prompt asking a provider to corrupt `clean` with errors of the given types.
pub fn build_corruption_prompt(clean: &Sentence, taxonomy_subset: &[ErrorClass]) -> PromptRequest {
    Prompts::default().corruption(clean, taxonomy_subset)
}
