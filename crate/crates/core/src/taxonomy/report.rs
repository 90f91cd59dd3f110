use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedExample, Edit, Sentence};
use crate::par::{self, Execution};
use crate::scorer::{
    extractions, prepare, select_alternatives, Counts, ScoreError, ScoreReport, ScorerConfig,
};

use super::classify::classify_edit_with;
use super::Coarse;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub class: Coarse,
    /// Gold edits of this class.
    pub support: usize,
    pub report: ScoreReport,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub rows: Vec<ClassRow>,
}

impl ClassReport {
    pub fn row(&self, class: Coarse) -> Option<&ClassRow> {
        self.rows.iter().find(|r| r.class == class)
    }

    pub fn total_support(&self) -> usize {
        self.rows.iter().map(|r| r.support).sum()
    }
}

/// Per-class scores. Gold edits keep the class written in the file when it
/// is a taxonomy code and are classified otherwise; proposed edits that match
/// a gold edit take its class, the rest are classified.
pub fn classify_corpus(
    examples: &[AnnotatedExample],
    hypotheses: &[Sentence],
    cfg: &ScorerConfig,
) -> Result<ClassReport, ScoreError> {
    classify_corpus_with(examples, hypotheses, cfg, Execution::default())
}

pub fn classify_corpus_with(
    examples: &[AnnotatedExample],
    hypotheses: &[Sentence],
    cfg: &ScorerConfig,
    exec: Execution,
) -> Result<ClassReport, ScoreError> {
    if examples.len() != hypotheses.len() {
        return Err(ScoreError::CountMismatch {
            examples: examples.len(),
            hypotheses: hypotheses.len(),
        });
    }
    let prepared = par::map(exec, examples, |i, ex| {
        let (ex, hyp) = prepare(ex, &hypotheses[i], cfg);
        let xs = extractions(&ex, &hyp, cfg.max_gap);
        (ex, xs)
    });
    let per_sentence: Vec<Vec<Counts>> = prepared
        .iter()
        .map(|(ex, xs)| {
            xs.iter()
                .zip(&ex.gold)
                .map(|(x, set)| Counts {
                    matched: x.matched_count(),
                    proposed: x.edits.len(),
                    gold: set.edits.len(),
                })
                .collect()
        })
        .collect();
    let (_, chosen) = select_alternatives(&per_sentence, cfg.beta);

    let mut by_class: BTreeMap<Coarse, Counts> = BTreeMap::new();
    for ((ex, xs), &k) in prepared.iter().zip(&chosen) {
        let (Some(set), Some(x)) = (ex.gold.get(k), xs.get(k)) else {
            continue;
        };
        let class_of = |e: &Edit| {
            e.error_class
                .unwrap_or_else(|| classify_edit_with(&ex.source, e, &cfg.table))
                .coarse()
        };
        let gold_classes: Vec<(crate::corpus::EditKey, Coarse)> =
            set.edits.iter().map(|e| (e.key(), class_of(e))).collect();
        for (_, c) in &gold_classes {
            by_class.entry(*c).or_default().gold += 1;
        }
        for (key, &hit) in x.edits.iter().zip(&x.matched) {
            let class = if hit {
                gold_classes.iter().find(|(g, _)| g == key).map(|(_, c)| *c)
            } else {
                None
            };
            let class = class.unwrap_or_else(|| {
                let e = Edit::new(key.start, key.end, key.replacement.clone());
                classify_edit_with(&ex.source, &e, &cfg.table).coarse()
            });
            let c = by_class.entry(class).or_default();
            c.proposed += 1;
            c.matched += usize::from(hit);
        }
    }

    let rows = Coarse::ALL
        .iter()
        .filter_map(|class| {
            by_class.get(class).map(|c| ClassRow {
                class: *class,
                support: c.gold,
                report: ScoreReport::from_counts(*c, cfg.beta),
            })
        })
        .collect();
    Ok(ClassReport { rows })
}
