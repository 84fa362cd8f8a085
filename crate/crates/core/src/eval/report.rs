use unicode_width::UnicodeWidthStr;

use super::EvalReport;

/// Formats a percentage with at most two decimals and no trailing zeros
/// (`65%`, `67.5%`, `66.25%`).
pub(crate) fn format_pct(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    format!("{s}%")
}

/// Text table with the columns Accuracy, one prediction count per class,
/// Macro-F1 and one accuracy per class. A report with nothing scored renders
/// the header only; errors and abstentions are listed below the table.
pub fn render_report(report: &EvalReport) -> String {
    let labels = report.task.labels();
    let mut header = vec!["Accuracy".to_string()];
    header.extend(labels.iter().map(|l| format!("# {}", l.code())));
    header.push("Macro-F1".into());
    header.extend(labels.iter().map(|l| format!("Acc {}", l.code())));

    let scored: u64 = report.prediction_counts.values().sum();
    let row: Option<Vec<String>> = (scored > 0).then(|| {
        let mut row = vec![format_pct(report.accuracy)];
        row.extend(
            labels
                .iter()
                .map(|l| report.prediction_counts.get(l).copied().unwrap_or(0).to_string()),
        );
        row.push(format_pct(report.macro_f1));
        row.extend(
            labels
                .iter()
                .map(|l| format_pct(report.per_class_accuracy.get(l).copied().unwrap_or(0.0))),
        );
        row
    });

    let widths: Vec<usize> = header
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let cell = row.as_ref().map_or(0, |r| r[i].width());
            h.width().max(cell)
        })
        .collect();
    let line = |cells: &[String]| -> String {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.width())))
            .collect();
        padded.join(" | ").trim_end().to_string()
    };

    let mut out = line(&header);
    out.push('\n');
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    out.push_str(&rule.join("-+-"));
    out.push('\n');
    if let Some(row) = row {
        out.push_str(&line(&row));
        out.push('\n');
    }
    if report.errors > 0 {
        out.push_str(&format!("errors: {} of {}\n", report.errors, report.n));
    }
    if report.abstained > 0 {
        out.push_str(&format!("abstained: {} of {}\n", report.abstained, report.n));
    }
    out
}
