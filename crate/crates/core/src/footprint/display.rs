use std::fmt::Write;

use super::{Catalog, Comparison, FootprintReport};

/// Cost rounded to the precision it is displayed with: cents below $1k,
/// $100 below $100k, $1k below $1M, $10k above.
pub fn rounded_cost(usd: f64) -> f64 {
    let unit = if usd < 1e3 {
        0.01
    } else if usd < 1e5 {
        100.0
    } else if usd < 1e6 {
        1e3
    } else {
        1e4
    };
    (usd / unit).round() * unit
}

pub fn format_cost(usd: f64) -> String {
    let r = rounded_cost(usd);
    if usd < 1e3 {
        format!("${r:.2}")
    } else if usd < 1e5 {
        format!("${:.1} k", r / 1e3)
    } else if usd < 1e6 {
        format!("${:.3} M", r / 1e6)
    } else {
        format!("${:.2} M", r / 1e6)
    }
}

/// Fixed decimals with thin groups of three digits: `1 026.7`.
pub fn format_count(value: f64, decimals: usize) -> String {
    let text = format!("{:.*}", decimals, value.abs());
    let (int, frac) = match text.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (text.as_str(), None),
    };
    let mut grouped = String::new();
    for (i, ch) in int.chars().enumerate() {
        if i > 0 && (int.len() - i) % 3 == 0 {
            grouped.push(' ');
        }
        grouped.push(ch);
    }
    let sign = if value < 0.0 && text.chars().any(|c| c.is_ascii_digit() && c != '0') {
        "-"
    } else {
        ""
    };
    match frac {
        Some(f) => format!("{sign}{grouped}.{f}"),
        None => format!("{sign}{grouped}"),
    }
}

pub fn format_ratio(ratio: f64) -> String {
    if ratio < 100.0 {
        format!("{ratio:.1}×")
    } else {
        format!("{}×", format_count(ratio, 0))
    }
}

/// Unrounded estimates per provider, in catalog order.
pub fn report_tsv(catalog: &Catalog, reports: &std::collections::BTreeMap<String, FootprintReport>) -> String {
    let mut out = String::from("id\tprovider\tmodel\tparameters\ttps\tenergy_mwh\twater_m3\tco2_t\tcost_usd\n");
    for p in &catalog.providers {
        let Some(r) = reports.get(&p.id) else { continue };
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{}",
            p.id,
            p.provider,
            p.model,
            p.parameters.as_deref().unwrap_or(""),
            p.tps,
            r.energy_mwh,
            r.water_m3,
            r.co2_t,
            r.cost_usd.map(|c| format!("{c:.2}")).unwrap_or_default()
        )
        .unwrap();
    }
    out
}

pub fn ratios_tsv(baseline: &str, comparisons: &[Comparison]) -> String {
    let mut out = String::from("baseline\tid\tspeedup\tcost_ratio\tdisplayed_cost_ratio\tco2_delta_t\n");
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
    for c in comparisons {
        writeln!(
            out,
            "{baseline}\t{}\t{:.4}\t{}\t{}\t{:.4}",
            c.id,
            c.speedup,
            opt(c.cost_ratio),
            opt(c.displayed_cost_ratio),
            c.co2_delta_t
        )
        .unwrap();
    }
    out
}
