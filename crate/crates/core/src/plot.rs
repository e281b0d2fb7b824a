//! Grouped bar charts with standard-error whiskers, rendered as plain SVG.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt::Write;

use thiserror::Error;

use crate::harness::mean_stderr;

#[derive(Debug, Clone, PartialEq)]
pub struct Bar {
    pub series: String,
    pub value: f64,
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarGroup {
    pub label: String,
    pub bars: Vec<Bar>,
}

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("nothing to plot")]
    Empty,
    #[error("bar `{group}/{series}` has negative or non-finite value {value}")]
    Negative {
        group: String,
        series: String,
        value: f64,
    },
    #[error("summary has no column `{0}`")]
    MissingColumn(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Bar heights are `value * (plot height / top of scale)`, so they are
/// exactly proportional to the values.
pub fn render_bar_svg(
    groups: &[BarGroup],
    title: &str,
    x_label: &str,
    y_label: &str,
) -> Result<String, PlotError> {
    if groups.iter().all(|g| g.bars.is_empty()) {
        return Err(PlotError::Empty);
    }
    for g in groups {
        for b in &g.bars {
            let bad = |v: f64| !v.is_finite() || v < 0.0;
            if bad(b.value) || b.stderr.is_some_and(bad) {
                return Err(PlotError::Negative {
                    group: g.label.clone(),
                    series: b.series.clone(),
                    value: if bad(b.value) { b.value } else { b.stderr.unwrap_or(0.0) },
                });
            }
        }
    }
    let mut series: Vec<&str> = Vec::new();
    for b in groups.iter().flat_map(|g| &g.bars) {
        if !series.contains(&b.series.as_str()) {
            series.push(&b.series);
        }
    }
    let top = groups
        .iter()
        .flat_map(|g| &g.bars)
        .map(|b| b.value + b.stderr.unwrap_or(0.0))
        .fold(0.0f64, f64::max);
    let top = if top > 0.0 { top } else { 1.0 };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let base = TOP + plot_h;
    let scale = plot_h / top;
    let slot = plot_w / groups.len() as f64;
    let bar_w = slot * 0.8 / series.len() as f64;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(s, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>",
        WIDTH / 2.0,
        esc(title)
    );
    for i in 0..=4 {
        let v = top * i as f64 / 4.0;
        let y = base - v * scale;
        let _ = writeln!(
            s,
            "<line x1=\"{LEFT}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#dddddd\"/>",
            LEFT + plot_w
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            LEFT - 6.0,
            y + 4.0,
            format_tick(v)
        );
    }
    for (gi, g) in groups.iter().enumerate() {
        let x0 = LEFT + slot * gi as f64 + slot * 0.1;
        for b in &g.bars {
            let si = series.iter().position(|&n| n == b.series).unwrap_or(0);
            let x = x0 + bar_w * si as f64;
            let h = b.value * scale;
            let _ = writeln!(
                s,
                "<rect class=\"bar\" x=\"{x}\" y=\"{}\" width=\"{bar_w}\" height=\"{h}\" fill=\"{}\"/>",
                base - h,
                PALETTE[si % PALETTE.len()]
            );
            if let Some(e) = b.stderr {
                let cx = x + bar_w / 2.0;
                let (y_lo, y_hi) = (base - (b.value - e).max(0.0) * scale, base - (b.value + e) * scale);
                let _ = writeln!(
                    s,
                    "<path class=\"whisker\" d=\"M{cx} {y_lo}V{y_hi}M{} {y_hi}H{}M{} {y_lo}H{}\" stroke=\"black\"/>",
                    cx - bar_w / 4.0,
                    cx + bar_w / 4.0,
                    cx - bar_w / 4.0,
                    cx + bar_w / 4.0
                );
            }
        }
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            LEFT + slot * (gi as f64 + 0.5),
            base + 18.0,
            esc(&g.label)
        );
    }
    let _ = writeln!(
        s,
        "<line x1=\"{LEFT}\" y1=\"{base}\" x2=\"{}\" y2=\"{base}\" stroke=\"black\"/>",
        LEFT + plot_w
    );
    let _ = writeln!(s, "<line x1=\"{LEFT}\" y1=\"{TOP}\" x2=\"{LEFT}\" y2=\"{base}\" stroke=\"black\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
        LEFT + plot_w / 2.0,
        HEIGHT - 16.0,
        esc(x_label)
    );
    let _ = writeln!(
        s,
        "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>",
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        esc(y_label)
    );
    for (si, name) in series.iter().enumerate() {
        let y = TOP + 20.0 * si as f64;
        let x = WIDTH - RIGHT + 16.0;
        let _ = writeln!(
            s,
            "<rect x=\"{x}\" y=\"{y}\" width=\"12\" height=\"12\" fill=\"{}\"/>",
            PALETTE[si % PALETTE.len()]
        );
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\">{}</text>", x + 18.0, y + 10.0, esc(name));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn format_tick(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else if v.abs() >= 10.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.3}")
    }
}

fn compare_labels(a: &str, b: &str) -> Ordering {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y),
        _ => a.cmp(b),
    }
}

/// Groups summary-CSV rows by `x`, one bar per distinct `group` value, each
/// the mean of `y` with its standard error. Empty `y` cells are skipped.
pub fn summary_bars(csv_text: &str, x: &str, group: &str, y: &str) -> Result<Vec<BarGroup>, PlotError> {
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| PlotError::MissingColumn(name.to_string()))
    };
    let (xi, gi, yi) = (col(x)?, col(group)?, col(y)?);
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        rows.push((rec[xi].to_string(), rec[gi].to_string(), rec[yi].to_string()));
    }
    let sorted = |vals: BTreeSet<&str>| {
        let mut v: Vec<String> = vals.into_iter().map(str::to_string).collect();
        v.sort_by(|a, b| compare_labels(a, b));
        v
    };
    let xs = sorted(rows.iter().map(|r| r.0.as_str()).collect());
    let gs = sorted(rows.iter().map(|r| r.1.as_str()).collect());
    let mut out = Vec::new();
    for xv in &xs {
        let mut bars = Vec::new();
        for gv in &gs {
            let sample: Vec<f64> = rows
                .iter()
                .filter(|r| &r.0 == xv && &r.1 == gv)
                .filter_map(|r| r.2.parse().ok())
                .collect();
            if let Some((mean, se)) = mean_stderr(&sample) {
                bars.push(Bar {
                    series: format!("{group}={gv}"),
                    value: mean,
                    stderr: (sample.len() > 1).then_some(se),
                });
            }
        }
        out.push(BarGroup {
            label: xv.clone(),
            bars,
        });
    }
    if out.iter().all(|g| g.bars.is_empty()) {
        return Err(PlotError::Empty);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn heights(svg: &str) -> Vec<f64> {
        svg.lines()
            .filter(|l| l.starts_with("<rect class=\"bar\""))
            .map(|l| {
                let h = l.split("height=\"").nth(1).unwrap();
                h[..h.find('"').unwrap()].parse().unwrap()
            })
            .collect()
    }

    fn group(label: &str, values: &[f64]) -> BarGroup {
        BarGroup {
            label: label.into(),
            bars: values
                .iter()
                .enumerate()
                .map(|(i, &v)| Bar {
                    series: format!("s{i}"),
                    value: v,
                    stderr: None,
                })
                .collect(),
        }
    }

    #[test]
    fn heights_are_linear() {
        let svg = render_bar_svg(&[group("a", &[1.0, 2.0])], "t", "x", "y").unwrap();
        let h = heights(&svg);
        assert_eq!(h.len(), 2);
        assert_eq!(h[1], 2.0 * h[0]);
    }

    #[test]
    fn single_bar_without_whisker() {
        let svg = render_bar_svg(&[group("a", &[3.0])], "t", "x", "y").unwrap();
        assert_eq!(heights(&svg).len(), 1);
        assert!(!svg.contains("whisker"));
        let with = BarGroup {
            label: "a".into(),
            bars: vec![Bar {
                series: "s".into(),
                value: 3.0,
                stderr: Some(0.5),
            }],
        };
        let svg2 = render_bar_svg(std::slice::from_ref(&with), "t", "x", "y").unwrap();
        assert_eq!(svg2.matches("class=\"whisker\"").count(), 1);
        assert_eq!(svg2, render_bar_svg(&[with], "t", "x", "y").unwrap());
    }

    #[test]
    fn rejects_negative_and_empty() {
        assert!(matches!(
            render_bar_svg(&[group("a", &[-1.0])], "t", "x", "y"),
            Err(PlotError::Negative { .. })
        ));
        assert!(matches!(render_bar_svg(&[], "t", "x", "y"), Err(PlotError::Empty)));
    }

    #[test]
    fn aggregates_summary_rows() {
        let csv = "team_size,comm_cost,meals_served\n4,0,10\n2,0,4\n4,0,20\n2,150,6\n10,0,\n";
        let g = summary_bars(csv, "team_size", "comm_cost", "meals_served").unwrap();
        let labels: Vec<&str> = g.iter().map(|g| g.label.as_str()).collect();
        assert_eq!(labels, ["2", "4", "10"]);
        assert_eq!(g[0].bars.len(), 2);
        assert_eq!(g[1].bars[0].value, 15.0);
        assert!(g[2].bars.is_empty());
        assert!(summary_bars(csv, "nope", "comm_cost", "meals_served").is_err());
    }
}
