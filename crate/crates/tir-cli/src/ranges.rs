//! Parsing of target-range and horizon specifications from the command line.

use anyhow::{bail, ensure, Context, Result};
use tir_core::TargetRange;

/// Parses a range specification: the presets `standard3` (the partition
/// hypo / in-range / hyper) and `extended6` (the six reporting ranges), or an
/// explicit list of interval terms such as `[70,180],(180,inf),(-inf,70)`.
pub fn parse_ranges(spec: &str) -> Result<Vec<TargetRange>> {
    match spec.trim() {
        "standard3" => Ok(TargetRange::standard_partition().to_vec()),
        "extended6" => Ok(TargetRange::extended_ranges().to_vec()),
        other => parse_range_list(other),
    }
}

fn parse_range_list(spec: &str) -> Result<Vec<TargetRange>> {
    let mut out = Vec::new();
    let mut rest = spec.trim();
    while !rest.is_empty() {
        let open = rest.chars().next().unwrap();
        ensure!(
            open == '[' || open == '(',
            "range term must start with '[' or '(' in `{spec}`"
        );
        let close = rest
            .find([']', ')'])
            .with_context(|| format!("unterminated range term in `{spec}`"))?;
        out.push(parse_range_term(&rest[..=close])?);
        rest = rest[close + 1..]
            .trim_start()
            .trim_start_matches(',')
            .trim_start();
    }
    ensure!(!out.is_empty(), "no target ranges in `{spec}`");
    Ok(out)
}

fn parse_range_term(term: &str) -> Result<TargetRange> {
    let lower_inclusive = term.starts_with('[');
    let upper_inclusive = term.ends_with(']');
    let inner = &term[1..term.len() - 1];
    let (lo, hi) = inner
        .split_once(',')
        .with_context(|| format!("range term `{term}` needs two comma-separated bounds"))?;
    let lower = parse_bound(lo)?;
    let upper = parse_bound(hi)?;
    TargetRange::new(lower, upper, lower_inclusive, upper_inclusive)
        .with_context(|| format!("invalid range term `{term}`"))
}

fn parse_bound(text: &str) -> Result<f64> {
    match text.trim() {
        "-inf" => Ok(f64::NEG_INFINITY),
        "inf" | "+inf" => Ok(f64::INFINITY),
        x => x
            .parse::<f64>()
            .with_context(|| format!("cannot parse range bound `{x}`")),
    }
}

/// Parses the `--tau-days` list: the preset `standard5` = 1,3,5,7,9 days or
/// an explicit comma-separated list.
pub fn parse_taus(spec: &str) -> Result<Vec<f64>> {
    if spec.trim() == "standard5" {
        return Ok(vec![1.0, 3.0, 5.0, 7.0, 9.0]);
    }
    let taus = spec
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("cannot parse horizon `{t}`"))
        })
        .collect::<Result<Vec<f64>>>()?;
    for &tau in &taus {
        if !(tau > 0.0 && tau.is_finite()) {
            bail!("horizons must be positive, got {tau}");
        }
    }
    ensure!(!taus.is_empty(), "no horizons in `{spec}`");
    Ok(taus)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_and_lists() {
        assert_eq!(parse_ranges("standard3").unwrap().len(), 3);
        assert_eq!(parse_ranges("extended6").unwrap().len(), 6);
        let rs = parse_ranges("(-inf,70),[70,180],(180,inf)").unwrap();
        assert_eq!(rs.len(), 3);
        assert_eq!(rs[1].label(), "[70,180]");
        assert_eq!(rs[0].label(), "(-inf,70)");
        assert!(parse_ranges("").is_err());
        assert!(parse_ranges("[70,abc]").is_err());
        assert!(parse_ranges("[180,70]").is_err());
    }

    #[test]
    fn tau_lists() {
        assert_eq!(parse_taus("standard5").unwrap(), vec![1.0, 3.0, 5.0, 7.0, 9.0]);
        assert_eq!(parse_taus("7").unwrap(), vec![7.0]);
        assert_eq!(parse_taus("1, 3").unwrap(), vec![1.0, 3.0]);
        assert!(parse_taus("-2").is_err());
        assert!(parse_taus("x").is_err());
    }
}
