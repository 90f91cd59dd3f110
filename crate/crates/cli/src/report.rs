//! Score tables in text, TSV and JSON.

use agec_core::normalize::NormalizationMode;
use agec_core::scorer::ScoreReport;
use agec_core::taxonomy::ClassReport;

/// Two decimals, ties away from zero.
pub fn fixed2(x: f64) -> String {
    let scaled = (x * 100.0).round() / 100.0;
    format!("{scaled:.2}")
}

pub fn score_text(r: &ScoreReport) -> String {
    format!(
        "Precision : {:.4}\nRecall    : {:.4}\nF1        : {:.4}\nF{}      : {:.4}\n{}\n",
        r.precision,
        r.recall,
        r.f1,
        r.beta,
        r.f_beta,
        r.machine_line()
    )
}

pub fn modes_text(rows: &[(NormalizationMode, ScoreReport)]) -> String {
    let width = rows
        .iter()
        .map(|(m, _)| m.title().chars().count())
        .max()
        .unwrap_or(4)
        .max(4);
    let mut out = format!(
        "{:<width$}  {:>6}  {:>6}  {:>6}  {:>6}\n",
        "Mode", "P", "R", "F1", "F0.5"
    );
    for (m, r) in rows {
        out.push_str(&format!(
            "{:<width$}  {:>6}  {:>6}  {:>6}  {:>6}\n",
            m.title(),
            fixed2(r.precision),
            fixed2(r.recall),
            fixed2(r.f1),
            fixed2(r.f_beta)
        ));
    }
    out
}

pub fn modes_tsv(rows: &[(NormalizationMode, ScoreReport)]) -> String {
    let mut out = String::from("mode\tP\tR\tF1\tF0.5\n");
    for (m, r) in rows {
        out.push_str(&format!(
            "{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\n",
            m.key(),
            r.precision,
            r.recall,
            r.f1,
            r.f_beta
        ));
    }
    out
}

pub fn modes_json(rows: &[(NormalizationMode, ScoreReport)]) -> serde_json::Value {
    serde_json::Value::Array(
        rows.iter()
            .map(|(m, r)| serde_json::json!({ "mode": m.key(), "report": r }))
            .collect(),
    )
}

pub fn classes_text(rep: &ClassReport) -> String {
    let mut out = format!(
        "{:<14}  {:>6}  {:>6}  {:>6}  {:>7}\n",
        "Class", "P", "R", "F1", "Support"
    );
    for row in &rep.rows {
        out.push_str(&format!(
            "{:<14}  {:>6}  {:>6}  {:>6}  {:>7}\n",
            row.class.name(),
            fixed2(row.report.precision),
            fixed2(row.report.recall),
            fixed2(row.report.f1),
            row.support
        ));
    }
    out
}

pub fn classes_tsv(rep: &ClassReport) -> String {
    let mut out = String::from("class\tP\tR\tF1\tsupport\n");
    for row in &rep.rows {
        out.push_str(&format!(
            "{}\t{:.4}\t{:.4}\t{:.4}\t{}\n",
            row.class.name(),
            row.report.precision,
            row.report.recall,
            row.report.f1,
            row.support
        ));
    }
    out
}
