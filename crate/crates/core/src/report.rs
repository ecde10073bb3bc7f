//! Markdown rendering of fits, effects, footprints and consistency checks.
//!
//! Output depends only on the inputs: no timestamps, no hash-map iteration.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::consistency::ConsistencyCheck;
use crate::corpus::Language;
use crate::effects::{CurvePoint, EffectResult, HeatmapCell, PretrainAnalysis, ShareProvenance};
use crate::footprint::{format_cost, format_count, format_ratio, Catalog, Comparison, FootprintReport};
use crate::glm::CoefficientTable;
use crate::inference::Variant;

#[derive(Debug, Clone, Default)]
pub struct EffectsSection {
    pub heatmap: Vec<HeatmapCell>,
    pub share_totals: Vec<(Variant, EffectResult)>,
    pub curves: Vec<(Variant, Language, Vec<CurvePoint>)>,
    pub pretrain: Option<PretrainAnalysis>,
}

#[derive(Debug, Clone)]
pub struct FootprintSection {
    pub catalog: Catalog,
    pub reports: BTreeMap<String, FootprintReport>,
    pub baseline: Option<String>,
    pub comparisons: Vec<Comparison>,
}

#[derive(Debug, Clone, Default)]
pub struct ReportInputs {
    /// (title, coefficients) in display order.
    pub fits: Vec<(String, CoefficientTable)>,
    pub effects: Option<EffectsSection>,
    pub footprints: Option<FootprintSection>,
    pub checks: Vec<ConsistencyCheck>,
}

fn num(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e7) {
        format!("{v:.4e}")
    } else {
        format!("{v:.4}")
    }
}

fn coefficient_section(out: &mut String, title: &str, table: &CoefficientTable) {
    writeln!(out, "## {title}\n").unwrap();
    out.push_str("| Term | Estimate | Std. error | p-value | |\n|---|---:|---:|---:|:---|\n");
    for r in &table.rows {
        writeln!(
            out,
            "| {} | {:.5} | {:.5} | {} | {} |",
            r.term,
            r.estimate,
            r.std_error,
            r.p_value,
            r.significance()
        )
        .unwrap();
    }
    out.push_str("\nSignificance codes: `***` p<0.001, `**` p<0.01, `*` p<0.05, `.` p<0.1.\n\n");
}

fn heatmap_section(out: &mut String, cells: &[HeatmapCell]) {
    let mut languages: Vec<Language> = cells.iter().map(|c| c.language).collect();
    languages.sort();
    languages.dedup();
    let mut variants: Vec<Variant> = cells.iter().map(|c| c.variant).collect();
    variants.sort_by_key(|v| Variant::ALL.iter().position(|x| x == v));
    variants.dedup();
    out.push_str("## Cumulative Model × Language effects (log-odds)\n\n| Model |");
    for l in &languages {
        write!(out, " {} |", l.token()).unwrap();
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(languages.len()));
    out.push('\n');
    for v in variants {
        write!(out, "| {} |", v.level()).unwrap();
        for l in &languages {
            match cells.iter().find(|c| c.variant == v && c.language == *l) {
                Some(c) => write!(out, " {:.3} |", c.total).unwrap(),
                None => out.push_str(" — |"),
            }
        }
        out.push('\n');
    }
    out.push('\n');
}

fn share_totals_section(out: &mut String, totals: &[(Variant, EffectResult)]) {
    out.push_str("## ShareUnrelated total effects (log-odds)\n\n| Model | Components | Total |\n|---|---|---:|\n");
    for (v, e) in totals {
        let parts: Vec<String> = e
            .components
            .iter()
            .map(|c| format!("{} = {:.3}", c.term, c.value))
            .collect();
        writeln!(out, "| {} | {} | {:.3} |", v.level(), parts.join("; "), e.total).unwrap();
    }
    out.push('\n');
}

fn curves_section(out: &mut String, curves: &[(Variant, Language, Vec<CurvePoint>)]) {
    out.push_str("## Predicted accuracy by share of unrelated content\n\n");
    out.push_str("| Model | Language | Share | Total effect | Accuracy |\n|---|---|---:|---:|---:|\n");
    for (v, l, points) in curves {
        for p in points {
            writeln!(
                out,
                "| {} | {} | {:.2} | {:.3} | {:.3} |",
                v.level(),
                l.token(),
                p.share,
                p.total_effect,
                p.accuracy
            )
            .unwrap();
        }
    }
    out.push('\n');
}

fn pretrain_section(out: &mut String, a: &PretrainAnalysis) {
    out.push_str("## Accuracy by pretraining share\n\n");
    out.push_str("| Language | Model | Share (%) | n | Mean accuracy |\n|---|---|---:|---:|---:|\n");
    for g in &a.groups {
        let share = match g.provenance {
            ShareProvenance::Listed => format!("{:.2}", g.share_percent),
            ShareProvenance::BelowThreshold => "< 0.005 (0)".to_string(),
        };
        writeln!(
            out,
            "| {} | {} | {} | {} | {:.3} |",
            g.language.token(),
            g.variant.level(),
            share,
            g.n,
            g.mean_accuracy
        )
        .unwrap();
    }
    writeln!(
        out,
        "\nTrend: mean accuracy = {:.4} + {:.4} × share (%).\n",
        a.trend.intercept, a.trend.slope
    )
    .unwrap();
}

fn footprint_section(out: &mut String, f: &FootprintSection) {
    out.push_str("## Inference footprint\n\n");
    out.push_str(
        "| Provider | Model | Parameters | Speed (tok/s) | Energy (MWh) | Water (m³) | CO₂ (t) | Cost (USD) |\n",
    );
    out.push_str("|---|---|---|---:|---:|---:|---:|---:|\n");
    for p in &f.catalog.providers {
        let Some(r) = f.reports.get(&p.id) else { continue };
        writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} |",
            p.provider,
            p.model,
            p.parameters.as_deref().unwrap_or("—"),
            format_count(p.tps, 1),
            format_count(r.energy_mwh, 1),
            format_count(r.water_m3, 1),
            format_count(r.co2_t, 0),
            r.cost_usd.map(format_cost).unwrap_or_else(|| "—".to_string())
        )
        .unwrap();
    }
    out.push('\n');
    if let (Some(baseline), false) = (&f.baseline, f.comparisons.is_empty()) {
        writeln!(out, "### Ratios against `{baseline}`\n").unwrap();
        out.push_str("| Provider | Speedup | Cost ratio | Cost ratio (displayed costs) | CO₂ difference (t) |\n");
        out.push_str("|---|---:|---:|---:|---:|\n");
        for c in &f.comparisons {
            let ratio = |r: Option<f64>| r.map(format_ratio).unwrap_or_else(|| "—".to_string());
            writeln!(
                out,
                "| {} | {} | {} | {} | {} |",
                c.id,
                format_ratio(c.speedup),
                ratio(c.cost_ratio),
                ratio(c.displayed_cost_ratio),
                format_count(c.co2_delta_t, 0)
            )
            .unwrap();
        }
        out.push('\n');
    }
}

fn checks_section(out: &mut String, checks: &[ConsistencyCheck]) {
    out.push_str("## Consistency appendix\n\n");
    let unexpected = checks.iter().filter(|c| !c.as_expected()).count();
    let known = checks.iter().filter(|c| c.known_discrepancy).count();
    writeln!(
        out,
        "{} checks; {} match their published value, {} are known discrepancies, {} are unexpected.\n",
        checks.len(),
        checks.iter().filter(|c| c.consistent).count(),
        known,
        unexpected
    )
    .unwrap();
    out.push_str("| Check | Computed | Published | Tolerance | Status |\n|---|---:|---:|---:|---|\n");
    for c in checks {
        let status = match (c.consistent, c.known_discrepancy) {
            (true, false) => "ok",
            (false, true) => "known discrepancy",
            (false, false) => "MISMATCH",
            (true, true) => "matches despite known discrepancy",
        };
        writeln!(
            out,
            "| {} | {} | {} | {} | {} |",
            c.name,
            num(c.computed),
            num(c.published),
            num(c.tolerance),
            status
        )
        .unwrap();
    }
    out.push('\n');
}

/// Renders every section present in `inputs`, in a fixed order.
pub fn render_report(inputs: &ReportInputs) -> String {
    let mut out = String::from("# Evaluation report\n\n");
    for (title, table) in &inputs.fits {
        coefficient_section(&mut out, title, table);
    }
    if let Some(e) = &inputs.effects {
        if !e.heatmap.is_empty() {
            heatmap_section(&mut out, &e.heatmap);
        }
        if !e.share_totals.is_empty() {
            share_totals_section(&mut out, &e.share_totals);
        }
        if !e.curves.is_empty() {
            curves_section(&mut out, &e.curves);
        }
        if let Some(a) = &e.pretrain {
            pretrain_section(&mut out, a);
        }
    }
    if let Some(f) = &inputs.footprints {
        footprint_section(&mut out, f);
    }
    if !inputs.checks.is_empty() {
        checks_section(&mut out, &inputs.checks);
    }
    out
}
