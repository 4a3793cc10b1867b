//! Deterministic text/TSV/JSON rendering of evaluation and audit results.
//! All numbers use fixed decimal places so repeated runs with the same seed
//! produce byte-identical files.

use serde::Serialize;

use crate::error::Result;

use super::{BiasReport, EvalReport, MeanSd, RunStats};

fn fmt1(v: f64) -> String {
    format!("{v:.1}")
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

/// Left-aligned first column, right-aligned remainder, two-space gutters.
struct TextTable {
    rows: Vec<Vec<String>>,
}

impl TextTable {
    fn new() -> TextTable {
        TextTable { rows: Vec::new() }
    }

    fn row<I: IntoIterator<Item = String>>(&mut self, cells: I) {
        self.rows.push(cells.into_iter().collect());
    }

    fn render(&self, indent: &str) -> String {
        let columns = self.rows.iter().map(|r| r.len()).max().unwrap_or(0);
        let mut widths = vec![0usize; columns];
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                widths[i] = widths[i].max(cell.chars().count());
            }
        }
        let mut out = String::new();
        for row in &self.rows {
            out.push_str(indent);
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push_str("  ");
                }
                let pad = widths[i] - cell.chars().count();
                if i == 0 {
                    out.push_str(cell);
                    if i + 1 < row.len() {
                        out.push_str(&" ".repeat(pad));
                    }
                } else {
                    out.push_str(&" ".repeat(pad));
                    out.push_str(cell);
                }
            }
            while out.ends_with(' ') {
                out.pop();
            }
            out.push('\n');
        }
        out
    }
}

fn opt1(v: Option<f64>) -> String {
    match v {
        Some(v) => fmt1(v),
        None => "n/a".into(),
    }
}

fn mean_sd1(s: &MeanSd) -> String {
    format!("{} ± {}", fmt1(s.mean), fmt1(s.sd))
}

fn opt_mean_sd1(s: &Option<MeanSd>) -> String {
    match s {
        Some(s) => mean_sd1(s),
        None => "n/a".into(),
    }
}

/// Human-readable single-run evaluation report.
pub fn eval_text(report: &EvalReport) -> String {
    let mut out = format!(
        "Evaluation (mode={}, test records={})\n\n",
        report.mode, report.n_test
    );
    let mut table = TextTable::new();
    table.row(["metric".to_string(), "percent".to_string()]);
    table.row(["P@1".to_string(), fmt1(report.at_1.precision)]);
    table.row(["R@1".to_string(), fmt1(report.at_1.recall)]);
    table.row(["P@2".to_string(), fmt1(report.at_2.precision)]);
    table.row(["R@2".to_string(), fmt1(report.at_2.recall)]);
    out.push_str(&table.render("  "));
    out.push('\n');

    let mut classes = TextTable::new();
    classes.row([
        "class".to_string(),
        "precision".to_string(),
        "recall".to_string(),
        "support".to_string(),
    ]);
    for (class, pr) in &report.per_class {
        classes.row([
            class.clone(),
            opt1(pr.precision),
            opt1(pr.recall),
            pr.support.to_string(),
        ]);
    }
    out.push_str(&classes.render("  "));
    out
}

/// Machine-readable single-run evaluation report.
pub fn eval_tsv(report: &EvalReport) -> String {
    let mut out = String::from("metric\tvalue\n");
    out.push_str(&format!("mode\t{}\n", report.mode));
    out.push_str(&format!("n_test\t{}\n", report.n_test));
    out.push_str(&format!("p_at_1\t{}\n", fmt1(report.at_1.precision)));
    out.push_str(&format!("r_at_1\t{}\n", fmt1(report.at_1.recall)));
    out.push_str(&format!("p_at_2\t{}\n", fmt1(report.at_2.precision)));
    out.push_str(&format!("r_at_2\t{}\n", fmt1(report.at_2.recall)));
    for (class, pr) in &report.per_class {
        out.push_str(&format!("precision_{class}\t{}\n", opt1(pr.precision)));
        out.push_str(&format!("recall_{class}\t{}\n", opt1(pr.recall)));
        out.push_str(&format!("support_{class}\t{}\n", pr.support));
    }
    out
}

/// Multi-run, multi-mode summary table: one column per mode, mean ± sd.
pub fn runs_text(stats: &[(String, RunStats)]) -> String {
    let runs = stats.first().map(|(_, s)| s.runs).unwrap_or(0);
    let mut out = format!("Test metrics over {runs} runs (mean ± sd, percent)\n\n");
    let mut table = TextTable::new();
    let mut header = vec!["metric".to_string()];
    header.extend(stats.iter().map(|(mode, _)| mode.clone()));
    table.row(header);

    let row_for = |label: &str, pick: &dyn Fn(&RunStats) -> String| {
        let mut cells = vec![label.to_string()];
        for (_, s) in stats {
            cells.push(pick(s));
        }
        cells
    };
    table.row(row_for("R@1", &|s| mean_sd1(&s.at_1)));
    table.row(row_for("P@2", &|s| mean_sd1(&s.at_2_precision)));
    table.row(row_for("R@2", &|s| mean_sd1(&s.at_2_recall)));
    if let Some((_, first)) = stats.first() {
        for class in first.per_class_precision.keys() {
            table.row(row_for(&format!("{class} precision"), &|s| {
                opt_mean_sd1(s.per_class_precision.get(class).unwrap_or(&None))
            }));
            table.row(row_for(&format!("{class} recall"), &|s| {
                opt_mean_sd1(s.per_class_recall.get(class).unwrap_or(&None))
            }));
        }
    }
    out.push_str(&table.render("  "));
    out
}

/// Multi-run, multi-mode summary as TSV.
pub fn runs_tsv(stats: &[(String, RunStats)]) -> String {
    let mut out = String::from("metric");
    for (mode, _) in stats {
        out.push_str(&format!("\t{mode}_mean\t{mode}_sd"));
    }
    out.push('\n');
    let mut push_row = |label: &str, values: Vec<Option<MeanSd>>| {
        out.push_str(label);
        for v in values {
            match v {
                Some(s) => out.push_str(&format!("\t{}\t{}", fmt1(s.mean), fmt1(s.sd))),
                None => out.push_str("\tn/a\tn/a"),
            }
        }
        out.push('\n');
    };
    push_row("r_at_1", stats.iter().map(|(_, s)| Some(s.at_1)).collect());
    push_row(
        "p_at_2",
        stats.iter().map(|(_, s)| Some(s.at_2_precision)).collect(),
    );
    push_row(
        "r_at_2",
        stats.iter().map(|(_, s)| Some(s.at_2_recall)).collect(),
    );
    if let Some((_, first)) = stats.first() {
        for class in first.per_class_precision.keys() {
            push_row(
                &format!("precision_{class}"),
                stats
                    .iter()
                    .map(|(_, s)| s.per_class_precision.get(class).copied().flatten())
                    .collect(),
            );
            push_row(
                &format!("recall_{class}"),
                stats
                    .iter()
                    .map(|(_, s)| s.per_class_recall.get(class).copied().flatten())
                    .collect(),
            );
        }
    }
    out
}

fn fmt2(v: f64) -> String {
    format!("{v:.2}")
}

/// Imbalance table: one row per list pair plus the average row, one
/// mean/sd column pair per mode.
pub fn bias_text(reports: &[BiasReport]) -> String {
    let mut out = String::from("Name substitution imbalance (percent)\n");
    if let Some(first) = reports.first() {
        out.push_str(&format!(
            "approach {}, {} probes per side, minimum count {}\n\n",
            first.approach, first.n_per_side, first.min_count
        ));
    }
    let mut table = TextTable::new();
    let mut header = vec!["pair".to_string()];
    for report in reports {
        header.push(report.mode.clone());
        header.push("sd".to_string());
    }
    table.row(header);
    let n_rows = reports.first().map(|r| r.rows.len()).unwrap_or(0);
    for i in 0..n_rows {
        let mut cells = vec![reports[0].rows[i].pair.clone()];
        for report in reports {
            cells.push(fmt2(report.rows[i].mean));
            cells.push(fmt2(report.rows[i].sd));
        }
        table.row(cells);
    }
    let mut avg = vec!["Average".to_string()];
    for report in reports {
        avg.push(fmt2(report.average.mean));
        avg.push(fmt2(report.average.sd));
    }
    table.row(avg);
    out.push_str(&table.render("  "));
    out
}

pub fn bias_tsv(reports: &[BiasReport]) -> String {
    let mut out = String::from("pair");
    for report in reports {
        out.push_str(&format!("\t{}_mean\t{}_sd", report.mode, report.mode));
    }
    out.push('\n');
    let n_rows = reports.first().map(|r| r.rows.len()).unwrap_or(0);
    for i in 0..n_rows {
        out.push_str(&reports[0].rows[i].pair);
        for report in reports {
            out.push_str(&format!(
                "\t{}\t{}",
                fmt2(report.rows[i].mean),
                fmt2(report.rows[i].sd)
            ));
        }
        out.push('\n');
    }
    out.push_str("Average");
    for report in reports {
        out.push_str(&format!(
            "\t{}\t{}",
            fmt2(report.average.mean),
            fmt2(report.average.sd)
        ));
    }
    out.push('\n');
    out
}
