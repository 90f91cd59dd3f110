mod common;

use std::time::{Duration, Instant};

use agec_core::align::{align, extract_edits};
use agec_core::corpus::apply_edits;
use agec_core::corrupt::{corrupt_at, corrupt_corpus, CorruptionSpec, EMIT_SET};
use agec_core::normalize::{
    normalize_sentence, project_example, CharClassTable, NormalizationMode,
};
use agec_core::prompt::{
    build_cot_prompt, build_expert_prompt, parse_response, CotStage, ParseError,
};
use agec_core::scorer::{f_measure, score_corpus, score_sentence, ScorerConfig};
use agec_core::seq2edit::{extract_tags, extract_tags_for, iterative_correct};
use agec_core::taxonomy::{classify_edit, full_taxonomy, Coarse};
use agec_core::{ParallelExample, Sentence};
use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// (P, R, F1, F0.5) rows in percent.
const SCORE_ROWS: [(f64, f64, f64, f64); 16] = [
    (58.71, 49.29, 53.59, 56.55),
    (64.60, 60.37, 62.41, 63.71),
    (64.70, 59.59, 62.04, 63.61),
    (60.49, 51.37, 55.56, 58.42),
    (65.83, 61.41, 63.54, 64.90),
    (66.53, 61.62, 63.98, 65.49),
    (69.31, 59.24, 63.88, 67.03),
    (69.46, 61.96, 65.49, 67.82),
    (73.89, 48.33, 58.43, 66.82),
    (73.10, 55.40, 63.03, 68.70),
    (74.39, 47.62, 58.07, 66.87),
    (74.20, 53.80, 62.37, 68.96),
    (73.53, 48.21, 58.24, 66.54),
    (72.90, 54.90, 62.63, 68.41),
    (74.21, 46.45, 57.14, 66.29),
    (74.00, 52.70, 61.56, 68.46),
];
const F_TOLERANCE: f64 = 0.01;

fn f_arithmetic() -> Outcome {
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    for &(p, r, f1, f05) in &SCORE_ROWS {
        let got1 = 100.0 * f_measure(p / 100.0, r / 100.0, 1.0);
        let got05 = 100.0 * f_measure(p / 100.0, r / 100.0, 0.5);
        worst = worst.max((got1 - f1).abs()).max((got05 - f05).abs());
    }
    let elapsed = started.elapsed();
    outcome(
        worst <= F_TOLERANCE && elapsed < Duration::from_secs(1),
        format!(
            "{} rows, max |dF| = {worst:.4} (tol {F_TOLERANCE}), {elapsed:.2?}",
            SCORE_ROWS.len()
        ),
    )
}

const ORACLE_CASES: usize = 1000;

fn m2_oracle() -> Outcome {
    let started = Instant::now();
    let mut agree = 0usize;
    let mut first_miss = None;
    for case in 0..ORACLE_CASES {
        let mut rng = ChaCha8Rng::seed_from_u64(case as u64);
        let (example, hyp) = m2_instance(&mut rng);
        let max_gap = case % 3;
        let cfg = ScorerConfig {
            max_gap,
            ..ScorerConfig::default()
        };
        let got = score_sentence(&example, &hyp, &cfg);
        let want = oracle_counts(&example, &hyp, max_gap);
        if got == want {
            agree += 1;
        } else if first_miss.is_none() {
            first_miss = Some(case);
        }
    }
    let elapsed = started.elapsed();
    let miss = first_miss
        .map(|c| format!(", first disagreement at case {c}"))
        .unwrap_or_default();
    outcome(
        agree == ORACLE_CASES && elapsed < Duration::from_secs(60),
        format!("{agree}/{ORACLE_CASES} agree{miss}, {elapsed:.2?}"),
    )
}

const ROUNDTRIP_CASES: usize = 1000;

fn seq2edit_roundtrip() -> Outcome {
    let mut ok = 0usize;
    for case in 0..ROUNDTRIP_CASES {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + case as u64);
        let (source, target) = layered_pair(&mut rng, 3);
        debug_assert_eq!(
            extract_tags(&ParallelExample::new(source.clone(), target.clone())),
            extract_tags_for(&source, &target)
        );
        let fixed = iterative_correct(&source, |cur| extract_tags_for(cur, &target), 3);
        if fixed.map(|c| c.sentence == target).unwrap_or(false) {
            ok += 1;
        }
    }
    let mut rows_ok = 0;
    for name in ["Merge", "Split"] {
        let (_, bad, good) = CLASS_EXAMPLES.iter().find(|r| r.0 == name).unwrap();
        let target = s(good);
        let c = iterative_correct(&s(bad), |cur| extract_tags_for(cur, &target), 3).unwrap();
        if c.sentence == target && c.iterations <= 2 {
            rows_ok += 1;
        }
    }
    outcome(
        ok == ROUNDTRIP_CASES && rows_ok == 2,
        format!(
            "{ok}/{ROUNDTRIP_CASES} layered pairs, {rows_ok}/2 merge/split rows within 2 passes"
        ),
    )
}

const CLOSURE_SEED: u64 = 7;

fn corrupt_score_closure() -> Outcome {
    let clean = clean_fixture();
    let spec = CorruptionSpec {
        seed: CLOSURE_SEED,
        ..CorruptionSpec::default()
    };
    let first = corrupt_corpus(&clean, &spec, None).unwrap();
    let second = corrupt_corpus(&clean, &spec, None).unwrap();
    let hyps: Vec<Sentence> = first.results.iter().map(|r| r.clean.clone()).collect();
    let report = score_corpus(&first.examples(), &hyps, &ScorerConfig::default()).unwrap();
    let line = format!(
        "{:.4} {:.4} {:.4} {:.4}",
        report.precision, report.recall, report.f1, report.f_beta
    );
    let identical = first.m2_text() == second.m2_text()
        && first.noisy_text() == second.noisy_text()
        && first.clean_text() == second.clean_text();
    outcome(
        line == "1.0000 1.0000 1.0000 1.0000" && identical && report.gold_count > 0,
        format!(
            "{} sentences, {} gold edits, P R F1 F0.5 = {line}, rerun identical: {identical}",
            clean.len(),
            report.gold_count
        ),
    )
}

const INVERSE_TRIALS: usize = 50;

fn inverse_consistency() -> Outcome {
    let clean = clean_fixture();
    let mut failures = Vec::new();
    for code in EMIT_SET {
        let mut ok = 0;
        for (trial, sentence) in clean.iter().enumerate().take(INVERSE_TRIALS) {
            let spec = CorruptionSpec::only(code, 1, trial as u64);
            let r = corrupt_at(sentence, &spec, trial as u64).unwrap();
            if let [edit] = r.repair_edits.as_slice() {
                if classify_edit(&r.noisy, edit).coarse() == code.coarse() {
                    ok += 1;
                }
            }
        }
        if ok < INVERSE_TRIALS {
            failures.push(format!("{code} {ok}/{INVERSE_TRIALS}"));
        }
    }
    let detail = if failures.is_empty() {
        format!("{} codes x {INVERSE_TRIALS} trials", EMIT_SET.len())
    } else {
        failures.join(", ")
    };
    outcome(failures.is_empty(), detail)
}

const NORMALIZATION_FIXTURE: usize = 1000;

fn normalization() -> Outcome {
    let table = CharClassTable::default();
    let source = s(REGIME_ROWS[0].1);
    let rows_ok = REGIME_ROWS
        .iter()
        .filter(|(key, text)| {
            let mode: NormalizationMode = key.parse().unwrap();
            normalize_sentence(&source, mode, &table) == s(text)
        })
        .count();

    let mut idempotent = 0;
    let mut square = 0;
    for case in 0..NORMALIZATION_FIXTURE {
        let mut rng = ChaCha8Rng::seed_from_u64(20_000 + case as u64);
        let example = random_arabic_example(&mut rng);
        let edits = &example.gold[0].edits;
        let target = apply_edits(&example.source, edits).unwrap();
        let mut all_modes = true;
        let mut all_square = true;
        for mode in NormalizationMode::ALL {
            let once = normalize_sentence(&example.source, mode, &table);
            all_modes &= normalize_sentence(&once, mode, &table) == once;
            let projected = project_example(&example, mode, &table);
            let rebuilt = apply_edits(&projected.source, &projected.gold[0].edits);
            all_square &= rebuilt.as_ref() == Ok(&normalize_sentence(&target, mode, &table));
        }
        idempotent += usize::from(all_modes);
        square += usize::from(all_square);
    }
    outcome(
        rows_ok == 4 && idempotent == NORMALIZATION_FIXTURE && square == NORMALIZATION_FIXTURE,
        format!(
            "regime rows {rows_ok}/4, idempotent {idempotent}/{NORMALIZATION_FIXTURE}, commuting square {square}/{NORMALIZATION_FIXTURE}"
        ),
    )
}

fn taxonomy_fixtures() -> Outcome {
    let mut ok = 0;
    let mut wrong = Vec::new();
    for (class, bad, good) in CLASS_EXAMPLES {
        let source = s(bad);
        let edits = extract_edits(&align(&source, &s(good)), &s(good), 0);
        let got = match edits.as_slice() {
            [edit] => Some(classify_edit(&source, edit).coarse()),
            _ => None,
        };
        if got.map(Coarse::name) == Some(class) {
            ok += 1;
        } else {
            wrong.push(format!("{class}->{got:?}"));
        }
    }
    outcome(ok == 7, format!("{ok}/7 {}", wrong.join(" ")))
}

fn prompt_goldens() -> Outcome {
    let pool = exemplar_pool();
    let query = s("ذهب الولد الى المدرسه .");
    let reasoning =
        "الى خطأ في الهمزة والصواب إلى ، والمدرسه خطأ في التاء المربوطة والصواب المدرسة .";
    let cot_first = build_cot_prompt(&query, &pool[..5], CotStage::Reasoning, None).unwrap();
    let cot_second =
        build_cot_prompt(&query, &pool[..5], CotStage::Answer, Some(reasoning)).unwrap();
    let expert = build_expert_prompt(&query, &pool[..3], &full_taxonomy()).unwrap();
    let goldens = [
        golden_matches("cot_reasoning_5shot.txt", &cot_first.render()),
        golden_matches("cot_answer_5shot.txt", &cot_second.render()),
        golden_matches("expert_3shot.txt", &expert.render()),
    ];
    let matched = goldens.iter().filter(|&&g| g).count();

    let tagged =
        parse_response("<output>الرجل يركب الفرس .</output>") == Ok(s("الرجل يركب الفرس ."));
    let untagged = matches!(
        parse_response("الرجل يركب الفرس ."),
        Err(ParseError::Unparseable { .. })
    );
    let multi =
        parse_response("first <output>أ ب</output> then <output>ج د</output>") == Ok(s("أ ب"));
    let parsed = [tagged, untagged, multi].iter().filter(|&&p| p).count();
    outcome(
        matched == goldens.len() && parsed == 3,
        format!(
            "goldens {matched}/{}, response fixtures {parsed}/3",
            goldens.len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("f-measure arithmetic", f_arithmetic),
        ("m2 oracle equivalence", m2_oracle),
        ("seq2edit roundtrip", seq2edit_roundtrip),
        ("corrupt-score closure", corrupt_score_closure),
        ("corruptor-classifier inverse", inverse_consistency),
        ("normalization", normalization),
        ("taxonomy fixtures", taxonomy_fixtures),
        ("prompt goldens", prompt_goldens),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let o = run();
        println!(
            "{} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
