//! MaxMatch (M²) scoring: per-sentence maximal-match edit extraction and
//! corpus-level precision, recall and F-measure.

mod lattice;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AnnotatedExample, EditKey, Sentence};
use crate::normalize::{normalize_sentence, project_example, CharClassTable, NormalizationMode};
use crate::par::{self, Execution};

pub use lattice::{best_extraction, Extraction};

#[derive(Debug, Clone, PartialEq)]
pub struct ScorerConfig {
    pub beta: f64,
    pub max_gap: usize,
    pub normalization: NormalizationMode,
    pub table: CharClassTable,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig {
            beta: 0.5,
            max_gap: 2,
            normalization: NormalizationMode::Exact,
            table: CharClassTable::default(),
        }
    }
}

impl ScorerConfig {
    pub fn with_mode(mut self, mode: NormalizationMode) -> Self {
        self.normalization = mode;
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub matched: usize,
    pub proposed: usize,
    pub gold: usize,
}

impl std::ops::Add for Counts {
    type Output = Counts;
    fn add(self, o: Counts) -> Counts {
        Counts {
            matched: self.matched + o.matched,
            proposed: self.proposed + o.proposed,
            gold: self.gold + o.gold,
        }
    }
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        *self = *self + o;
    }
}

impl Counts {
    pub fn precision(&self) -> f64 {
        if self.proposed == 0 {
            1.0
        } else {
            self.matched as f64 / self.proposed as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.gold == 0 {
            1.0
        } else {
            self.matched as f64 / self.gold as f64
        }
    }

    pub fn f(&self, beta: f64) -> f64 {
        f_measure(self.precision(), self.recall(), beta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub matched: usize,
    pub proposed: usize,
    pub gold_count: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub f_beta: f64,
    pub beta: f64,
}

impl ScoreReport {
    pub fn from_counts(c: Counts, beta: f64) -> Self {
        let (p, r) = (c.precision(), c.recall());
        ScoreReport {
            matched: c.matched,
            proposed: c.proposed,
            gold_count: c.gold,
            precision: p,
            recall: r,
            f1: f_measure(p, r, 1.0),
            f_beta: f_measure(p, r, beta),
            beta,
        }
    }

    pub fn counts(&self) -> Counts {
        Counts {
            matched: self.matched,
            proposed: self.proposed,
            gold: self.gold_count,
        }
    }

    /// `matched proposed gold P R F1 F<beta>` with reals at 4 decimals.
    pub fn machine_line(&self) -> String {
        format!(
            "{} {} {} {:.4} {:.4} {:.4} {:.4}",
            self.matched,
            self.proposed,
            self.gold_count,
            self.precision,
            self.recall,
            self.f1,
            self.f_beta
        )
    }
}

/// F_β = (1+β²)·P·R / (β²·P + R), and 0 when P·R is 0.
pub fn f_measure(p: f64, r: f64, beta: f64) -> f64 {
    if p * r == 0.0 {
        return 0.0;
    }
    let b2 = beta * beta;
    (1.0 + b2) * p * r / (b2 * p + r)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoreError {
    #[error("{examples} gold sentences but {hypotheses} hypothesis sentences")]
    CountMismatch { examples: usize, hypotheses: usize },
}

/// The normalized example and hypothesis under `cfg`.
pub fn prepare(
    example: &AnnotatedExample,
    hypothesis: &Sentence,
    cfg: &ScorerConfig,
) -> (AnnotatedExample, Sentence) {
    (
        project_example(example, cfg.normalization, &cfg.table),
        normalize_sentence(hypothesis, cfg.normalization, &cfg.table),
    )
}

/// Best extraction of `hypothesis` against every gold alternative of an
/// already normalized example.
pub fn extractions(
    example: &AnnotatedExample,
    hypothesis: &Sentence,
    max_gap: usize,
) -> Vec<Extraction> {
    example
        .gold
        .iter()
        .map(|set| {
            let keys: HashSet<EditKey> = set.edits.iter().map(|e| e.key()).collect();
            best_extraction(example.source.tokens(), hypothesis.tokens(), &keys, max_gap)
        })
        .collect()
}

/// Matched, proposed and gold counts for each gold alternative.
pub fn score_sentence(
    example: &AnnotatedExample,
    hypothesis: &Sentence,
    cfg: &ScorerConfig,
) -> Vec<Counts> {
    let (ex, hyp) = prepare(example, hypothesis, cfg);
    extractions(&ex, &hyp, cfg.max_gap)
        .iter()
        .zip(&ex.gold)
        .map(|(x, set)| Counts {
            matched: x.matched_count(),
            proposed: x.edits.len(),
            gold: set.edits.len(),
        })
        .collect()
}

/// Picks, sentence by sentence in corpus order, the alternative that gives the
/// highest running F_β; the first alternative wins ties.
pub fn select_alternatives(per_sentence: &[Vec<Counts>], beta: f64) -> (Counts, Vec<usize>) {
    let mut total = Counts::default();
    let mut chosen = Vec::with_capacity(per_sentence.len());
    for alts in per_sentence {
        let mut best: Option<(usize, f64)> = None;
        for (k, c) in alts.iter().enumerate() {
            let f = (total + *c).f(beta);
            if best.is_none_or(|(_, bf)| f > bf) {
                best = Some((k, f));
            }
        }
        let k = best.map_or(0, |(k, _)| k);
        if let Some(c) = alts.get(k) {
            total += *c;
        }
        chosen.push(k);
    }
    (total, chosen)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusScore {
    pub report: ScoreReport,
    pub chosen: Vec<usize>,
    pub per_sentence: Vec<Vec<Counts>>,
}

pub fn score_corpus_with(
    examples: &[AnnotatedExample],
    hypotheses: &[Sentence],
    cfg: &ScorerConfig,
    exec: Execution,
) -> Result<CorpusScore, ScoreError> {
    if examples.len() != hypotheses.len() {
        return Err(ScoreError::CountMismatch {
            examples: examples.len(),
            hypotheses: hypotheses.len(),
        });
    }
    let per_sentence = par::map(exec, examples, |i, ex| {
        score_sentence(ex, &hypotheses[i], cfg)
    });
    let (total, chosen) = select_alternatives(&per_sentence, cfg.beta);
    Ok(CorpusScore {
        report: ScoreReport::from_counts(total, cfg.beta),
        chosen,
        per_sentence,
    })
}

pub fn score_corpus(
    examples: &[AnnotatedExample],
    hypotheses: &[Sentence],
    cfg: &ScorerConfig,
) -> Result<ScoreReport, ScoreError> {
    score_corpus_with(examples, hypotheses, cfg, Execution::default()).map(|s| s.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{apply_edits, toks, Edit, EditSet};

    fn s(text: &str) -> Sentence {
        Sentence::from_text(text)
    }

    #[test]
    fn f_measure_table_row() {
        assert!((f_measure(0.6946, 0.6196, 1.0) - 0.6549).abs() < 1e-4);
        assert!((f_measure(0.6946, 0.6196, 0.5) - 0.6782).abs() < 1e-4);
        assert_eq!(f_measure(0.0, 0.7, 0.5), 0.0);
        assert!((f_measure(0.3, 0.3, 2.0) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn perfect_and_do_nothing() {
        let ex = AnnotatedExample::single(
            s("a b c"),
            vec![Edit::new(1, 2, toks("x")), Edit::new(3, 3, toks("d"))],
        );
        let target = apply_edits(&ex.source, &ex.gold[0].edits).unwrap();
        let cfg = ScorerConfig::default();
        assert_eq!(
            score_sentence(&ex, &target, &cfg),
            vec![Counts {
                matched: 2,
                proposed: 2,
                gold: 2
            }]
        );
        assert_eq!(
            score_sentence(&ex, &ex.source, &cfg),
            vec![Counts {
                matched: 0,
                proposed: 0,
                gold: 2
            }]
        );
        let r = score_corpus(
            std::slice::from_ref(&ex),
            std::slice::from_ref(&ex.source),
            &cfg,
        )
        .unwrap();
        assert_eq!((r.precision, r.recall, r.f_beta), (1.0, 0.0, 0.0));
    }

    #[test]
    fn partial_match() {
        let ex = AnnotatedExample::single(s("a b c"), vec![Edit::new(1, 2, toks("x"))]);
        let counts = score_sentence(&ex, &s("a x d"), &ScorerConfig::default());
        assert_eq!(
            counts,
            vec![Counts {
                matched: 1,
                proposed: 2,
                gold: 1
            }]
        );
    }

    #[test]
    fn second_alternative_chosen() {
        let ex = AnnotatedExample::new(
            s("a b c"),
            vec![
                EditSet::new(0, vec![Edit::new(0, 1, toks("q"))]),
                EditSet::new(
                    1,
                    vec![Edit::new(2, 3, toks("z")), Edit::new(1, 2, toks("y"))],
                ),
            ],
        );
        let cs = score_corpus_with(
            &[ex],
            &[s("a y z")],
            &ScorerConfig::default(),
            Execution::Sequential,
        )
        .unwrap();
        assert_eq!(cs.chosen, vec![1]);
        assert_eq!(cs.report.gold_count, 2);
        assert_eq!(cs.report.recall, 1.0);
    }

    #[test]
    fn empty_gold_and_empty_hypothesis_edits() {
        let ex = AnnotatedExample::single(s("a b"), vec![]);
        let r = score_corpus(&[ex], &[s("a b")], &ScorerConfig::default()).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn count_mismatch() {
        let ex = AnnotatedExample::single(s("a"), vec![]);
        assert_eq!(
            score_corpus(&[ex], &[], &ScorerConfig::default()),
            Err(ScoreError::CountMismatch {
                examples: 1,
                hypotheses: 0
            })
        );
    }

    #[test]
    fn normalization_forgives_hamza() {
        let ex = AnnotatedExample::single(s("نعرف الا"), vec![Edit::new(1, 2, toks("إلا"))]);
        let exact = score_sentence(&ex, &ex.source, &ScorerConfig::default());
        assert_eq!(exact[0].gold, 1);
        let cfg = ScorerConfig::default().with_mode(NormalizationMode::NoAlifYa);
        assert_eq!(
            score_sentence(&ex, &ex.source, &cfg),
            vec![Counts::default()]
        );
    }

    #[test]
    fn machine_line_format() {
        let r = ScoreReport::from_counts(
            Counts {
                matched: 1,
                proposed: 2,
                gold: 4,
            },
            0.5,
        );
        assert_eq!(r.machine_line(), "1 2 4 0.5000 0.2500 0.3333 0.4167");
    }
}
