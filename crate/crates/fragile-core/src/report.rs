//! Text report tables and static SVG plots (layer-gap curves and quadrant
//! bars). Output is deterministic: same inputs, same bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::lens::DirectionGapCurve;
use crate::metrics::{AggregateReport, CellStats, Quadrant};

fn cell(stats: &CellStats) -> String {
    format!(
        "{:5.1} ({:4.1}/{:4.1}) L1 {:5.3}",
        stats.flip_pct, stats.fh_pct, stats.fl_pct, stats.mean_l1
    )
}

/// Fixed-width sensitivity table: one row per (model, dimension, dataset)
/// with the paraphrase condition alongside when present.
pub fn render_aggregate_text(report: &AggregateReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<24} {:<12} {:<16} {:<30} {:<30}",
        "model", "framing", "dataset", "flip% (FH/FL)", "para flip% (FH/FL)"
    );
    let _ = writeln!(out, "{}", "-".repeat(114));
    for row in &report.rows {
        let para = row
            .paraphrase
            .as_ref()
            .map(cell)
            .unwrap_or_else(|| "-".to_string());
        let _ = writeln!(
            out,
            "{:<24} {:<12} {:<16} {:<30} {:<30}",
            row.model_id,
            row.dimension.to_string(),
            row.dataset,
            cell(&row.framing),
            para
        );
    }
    if !report.dimension_averages.is_empty() {
        let _ = writeln!(out, "{}", "-".repeat(114));
        for avg in &report.dimension_averages {
            let para = avg
                .paraphrase
                .as_ref()
                .map(cell)
                .unwrap_or_else(|| "-".to_string());
            let _ = writeln!(
                out,
                "{:<24} {:<12} {:<16} {:<30} {:<30}",
                avg.model_id,
                avg.dimension.to_string(),
                "avg",
                cell(&avg.framing),
                para
            );
        }
    }
    for w in &report.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

/// One mitigation-table row: a condition with quadrant percentages and
/// deltas against the base condition.
#[derive(Debug, Clone)]
pub struct ConditionRow {
    pub condition: String,
    pub stats: CellStats,
}

/// Comparison table in the mitigation layout: Flip%, FH%, NH%, NL% with
/// per-condition deltas relative to the first (base) row.
pub fn render_mitigation_text(dimension: &str, rows: &[ConditionRow]) -> Result<String> {
    let Some(base) = rows.first() else {
        return Err(Error::EmptyInput("mitigation rows".into()));
    };
    let mut out = String::new();
    let _ = writeln!(out, "framing: {dimension}");
    let _ = writeln!(
        out,
        "{:<16} {:>14} {:>14} {:>14} {:>14}",
        "condition", "Flip%", "FH%", "NH%", "NL%"
    );
    let _ = writeln!(out, "{}", "-".repeat(76));
    for (i, row) in rows.iter().enumerate() {
        let fmt = |v: f64, b: f64| -> String {
            if i == 0 {
                format!("{v:6.1}")
            } else {
                format!("{v:6.1} ({:+.1})", v - b)
            }
        };
        let _ = writeln!(
            out,
            "{:<16} {:>14} {:>14} {:>14} {:>14}",
            row.condition,
            fmt(row.stats.flip_pct, base.stats.flip_pct),
            fmt(row.stats.fh_pct, base.stats.fh_pct),
            fmt(row.stats.nh_pct, base.stats.nh_pct),
            fmt(row.stats.nl_pct, base.stats.nl_pct),
        );
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// SVG plots
// ---------------------------------------------------------------------------

const PLOT_W: f64 = 720.0;
const PLOT_H: f64 = 420.0;
const MARGIN: f64 = 56.0;

fn svg_header(title: &str) -> String {
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" ",
            "viewBox=\"0 0 {w} {h}\">\n",
            "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "<text x=\"{tx}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" ",
            "text-anchor=\"middle\">{title}</text>\n"
        ),
        w = PLOT_W,
        h = PLOT_H,
        tx = PLOT_W / 2.0,
        title = title
    )
}

const SERIES_COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#7f7f7f",
];

/// Line chart of one or more per-layer series.
pub fn line_chart(path: impl AsRef<Path>, title: &str, series: &[(String, Vec<f64>)]) -> Result<()> {
    let path = path.as_ref();
    if series.is_empty() || series.iter().all(|(_, v)| v.is_empty()) {
        return Err(Error::EmptyInput("line chart series".into()));
    }
    let n = series.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, v) in series {
        for &y in v {
            lo = lo.min(y);
            hi = hi.max(y);
        }
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::Config("line chart values must be finite".into()));
    }
    if (hi - lo).abs() < 1e-12 {
        hi = lo + 1.0;
    }
    let x_of = |i: usize| MARGIN + (PLOT_W - 2.0 * MARGIN) * i as f64 / (n.max(2) - 1) as f64;
    let y_of = |v: f64| PLOT_H - MARGIN - (PLOT_H - 2.0 * MARGIN) * (v - lo) / (hi - lo);

    let mut svg = svg_header(title);
    // Axes.
    let _ = write!(
        svg,
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = PLOT_H - MARGIN,
        r = PLOT_W - MARGIN,
        t = MARGIN
    );
    // Zero line when the range crosses zero.
    if lo < 0.0 && hi > 0.0 {
        let _ = write!(
            svg,
            "<line x1=\"{m}\" y1=\"{y}\" x2=\"{r}\" y2=\"{y}\" stroke=\"#cccccc\" stroke-dasharray=\"4 4\"/>\n",
            m = MARGIN,
            r = PLOT_W - MARGIN,
            y = y_of(0.0)
        );
    }
    let _ = write!(
        svg,
        "<text x=\"{m}\" y=\"{y}\" font-family=\"sans-serif\" font-size=\"11\">{lo:.3}</text>\n\
         <text x=\"{m}\" y=\"{t}\" font-family=\"sans-serif\" font-size=\"11\">{hi:.3}</text>\n\
         <text x=\"{cx}\" y=\"{by}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">layer</text>\n",
        m = 6.0,
        y = PLOT_H - MARGIN,
        t = MARGIN + 4.0,
        cx = PLOT_W / 2.0,
        by = PLOT_H - 16.0,
    );

    for (si, (name, values)) in series.iter().enumerate() {
        if values.is_empty() {
            continue;
        }
        let color = SERIES_COLORS[si % SERIES_COLORS.len()];
        let points: Vec<String> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| format!("{:.2},{:.2}", x_of(i), y_of(v)))
            .collect();
        let _ = write!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            points.join(" ")
        );
        let ly = MARGIN + 16.0 * si as f64;
        let _ = write!(
            svg,
            "<rect x=\"{x}\" y=\"{y}\" width=\"12\" height=\"12\" fill=\"{color}\"/>\n\
             <text x=\"{tx}\" y=\"{ty}\" font-family=\"sans-serif\" font-size=\"12\">{name}</text>\n",
            x = PLOT_W - MARGIN - 150.0,
            y = ly,
            tx = PLOT_W - MARGIN - 132.0,
            ty = ly + 10.0,
        );
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Quadrant-conditioned direction-shift curves plus the flip/noflip gap.
pub fn gap_curve_chart(path: impl AsRef<Path>, title: &str, curve: &DirectionGapCurve) -> Result<()> {
    let mut series: Vec<(String, Vec<f64>)> = Vec::new();
    for q in [Quadrant::FH, Quadrant::FL, Quadrant::NH, Quadrant::NL] {
        if let Some(v) = curve.per_quadrant.get(&q) {
            series.push((q.to_string(), v.clone()));
        }
    }
    series.push(("gap".into(), curve.flip_noflip_gap.clone()));
    line_chart(path, title, &series)
}

/// Grouped bar chart of quadrant percentages per condition.
pub fn quadrant_bar_chart(
    path: impl AsRef<Path>,
    title: &str,
    rows: &[(String, CellStats)],
) -> Result<()> {
    let path = path.as_ref();
    if rows.is_empty() {
        return Err(Error::EmptyInput("bar chart rows".into()));
    }
    let mut svg = svg_header(title);
    let plot_w = PLOT_W - 2.0 * MARGIN;
    let group_w = plot_w / rows.len() as f64;
    let bar_w = (group_w - 16.0) / 4.0;
    let y_of = |pct: f64| PLOT_H - MARGIN - (PLOT_H - 2.0 * MARGIN) * pct / 100.0;
    let _ = write!(
        svg,
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = PLOT_H - MARGIN,
        r = PLOT_W - MARGIN
    );
    for (gi, (name, stats)) in rows.iter().enumerate() {
        let x0 = MARGIN + gi as f64 * group_w + 8.0;
        let bars = [
            ("FH", stats.fh_pct),
            ("FL", stats.fl_pct),
            ("NH", stats.nh_pct),
            ("NL", stats.nl_pct),
        ];
        for (bi, (label, pct)) in bars.iter().enumerate() {
            let x = x0 + bi as f64 * bar_w;
            let y = y_of(*pct);
            let h = (PLOT_H - MARGIN) - y;
            let color = SERIES_COLORS[bi % SERIES_COLORS.len()];
            let _ = write!(
                svg,
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" fill=\"{color}\"/>\n\
                 <text x=\"{lx:.2}\" y=\"{ly:.2}\" font-family=\"sans-serif\" font-size=\"9\" text-anchor=\"middle\">{label}</text>\n",
                w = bar_w - 2.0,
                lx = x + bar_w / 2.0,
                ly = PLOT_H - MARGIN + 12.0,
            );
        }
        let _ = write!(
            svg,
            "<text x=\"{x:.2}\" y=\"{y:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{name}</text>\n",
            x = x0 + 2.0 * bar_w,
            y = PLOT_H - MARGIN + 28.0,
        );
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg).map_err(|e| Error::io(path.display().to_string(), e))
}
