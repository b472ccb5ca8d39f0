//! Plain-text table rendering for the human-readable summaries.
//!
//! Machine files keep full float precision; these tables render proportions
//! as percentages with two decimals.

/// Proportion rendered as a two-decimal percentage.
pub fn pct(v: f64) -> String {
    format!("{:.2}", 100.0 * v)
}

/// `estimate ± se`, both as percentages.
pub fn pct_pm(est: f64, se: f64) -> String {
    format!("{}±{}", pct(est), pct(se))
}

/// p-value with enough digits to compare against conventional levels.
pub fn pvalue(p: f64) -> String {
    format!("{p:.4}")
}

/// Renders rows as a left-aligned fixed-width table.
pub fn render_table(header: &[String], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for row in rows {
        for (c, cell) in row.iter().enumerate().take(cols) {
            widths[c] = widths[c].max(cell.len());
        }
    }
    let line = |cells: &[String]| {
        cells
            .iter()
            .enumerate()
            .map(|(c, cell)| format!("{cell:<width$}", width = widths[c]))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = String::new();
    out.push_str(&line(header));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting() {
        assert_eq!(pct(0.4375), "43.75");
        assert_eq!(pct_pm(0.5, 0.0123), "50.00±1.23");
        assert_eq!(pvalue(0.04999), "0.0500");
    }

    #[test]
    fn table_alignment() {
        let t = render_table(
            &["a".into(), "bb".into()],
            &[vec!["wide-cell".into(), "x".into()]],
        );
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "a          bb");
        assert_eq!(lines[1], "wide-cell  x");
    }
}
