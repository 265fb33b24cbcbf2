//! Standalone SVG figures rendered from result tables alone.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use xsl_core::ModelRegistry;

use crate::error::{LabError, LabResult};
use crate::table::{Record, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Curve,
    Uncertainty,
    Frequency,
    Homonym,
    Synonym,
}

impl PlotKind {
    /// Recognizes the table written by each experiment.
    pub fn infer(table: &Table) -> LabResult<Self> {
        let has = |c: &str| table.column(c).is_some();
        if has("meaning") {
            return Ok(Self::Homonym);
        }
        if has("label") && has("simulations") {
            return Ok(Self::Synonym);
        }
        if !(has("key") && has("score") && has("step")) {
            return Err(LabError::Config(
                "table layout is not one of the plottable experiments".into(),
            ));
        }
        let keys: Vec<String> = table.records().map(|r| r.text("key")).collect();
        if keys.iter().any(|k| k == "degradation") {
            Ok(Self::Uncertainty)
        } else if keys.iter().all(|k| k == "average") {
            Ok(Self::Curve)
        } else {
            Ok(Self::Frequency)
        }
    }
}

pub fn render(table: &Table) -> LabResult<String> {
    let kind = PlotKind::infer(table)?;
    let (title, panels) = match kind {
        PlotKind::Curve => ("Average comprehension over training", vec![curve(table)]),
        PlotKind::Uncertainty => ("Final comprehension by corpus", vec![uncertainty(table)]),
        PlotKind::Frequency => ("Comprehension by word frequency", frequency(table)),
        PlotKind::Homonym => ("Meaning probabilities over homonym trials", homonym(table)),
        PlotKind::Synonym => ("Label probabilities over synonym trials", synonym(table)),
    };
    Ok(svg(title, &panels))
}

fn label_of(model: &str) -> String {
    ModelRegistry::global()
        .lookup(model)
        .map(|id| id.notation().to_string())
        .unwrap_or_else(|_| model.to_string())
}

/// Means keyed by tuples, remembering first-seen order of each key part.
#[derive(Default)]
struct Means {
    sums: BTreeMap<Vec<String>, (f64, usize)>,
    order: Vec<Vec<String>>,
}

impl Means {
    fn add(&mut self, key: Vec<String>, v: f64) {
        for (i, part) in key.iter().enumerate() {
            if self.order.len() <= i {
                self.order.push(Vec::new());
            }
            if !self.order[i].contains(part) {
                self.order[i].push(part.clone());
            }
        }
        let e = self.sums.entry(key).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }

    fn get(&self, key: &[&str]) -> Option<f64> {
        let key: Vec<String> = key.iter().map(|s| s.to_string()).collect();
        self.sums.get(&key).map(|&(s, n)| s / n as f64)
    }

    fn values(&self, part: usize) -> &[String] {
        self.order.get(part).map(Vec::as_slice).unwrap_or(&[])
    }
}

struct Series {
    name: String,
    color: usize,
    dashed: bool,
    points: Vec<(f64, f64)>,
}

enum Panel {
    Lines {
        title: String,
        x_label: String,
        series: Vec<Series>,
    },
    Bars {
        title: String,
        groups: Vec<String>,
        series: Vec<String>,
        values: Vec<Vec<f64>>,
    },
}

fn line_series(means: &Means, prefix: &[&str], x_part: usize) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = means
        .values(x_part)
        .iter()
        .filter_map(|x| {
            let mut key = prefix.to_vec();
            key.push(x);
            means.get(&key).map(|y| (x.parse().unwrap_or(f64::NAN), y))
        })
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts
}

fn curve(table: &Table) -> Panel {
    let mut m = Means::default();
    for r in table.records() {
        m.add(vec![r.text("model"), r.text("step")], r.number("score"));
    }
    let series = m
        .values(0)
        .iter()
        .enumerate()
        .map(|(i, model)| Series {
            name: label_of(model),
            color: i,
            dashed: false,
            points: line_series(&m, &[model], 1),
        })
        .collect();
    Panel::Lines {
        title: "mean over seeds".into(),
        x_label: "input pairs".into(),
        series,
    }
}

fn bars_by(
    table: &Table,
    keep: impl Fn(&Record<'_>) -> bool,
    series_col: &str,
    title: String,
) -> Panel {
    let mut m = Means::default();
    for r in table.records().filter(|r| keep(r)) {
        m.add(vec![r.text("model"), r.text(series_col)], r.number("score"));
    }
    let groups = m.values(0).to_vec();
    let series = m.values(1).to_vec();
    let values = groups
        .iter()
        .map(|g| {
            series
                .iter()
                .map(|s| m.get(&[g, s]).unwrap_or(f64::NAN))
                .collect()
        })
        .collect();
    Panel::Bars {
        title,
        groups: groups.iter().map(|g| label_of(g)).collect(),
        series,
        values,
    }
}

fn uncertainty(table: &Table) -> Panel {
    bars_by(
        table,
        |r| r.text("key") == "average",
        "corpus",
        "mean over seeds".into(),
    )
}

fn frequency(table: &Table) -> Vec<Panel> {
    let mut corpora: Vec<String> = Vec::new();
    for r in table.records() {
        let c = r.text("corpus");
        if !corpora.contains(&c) {
            corpora.push(c);
        }
    }
    corpora
        .into_iter()
        .map(|c| bars_by(table, |r| r.text("corpus") == c, "key", c.clone()))
        .collect()
}

fn homonym(table: &Table) -> Vec<Panel> {
    let mut m = Means::default();
    for r in table.records() {
        m.add(
            vec![
                r.text("model"),
                r.text("meaning"),
                r.text("band"),
                r.text("trial"),
            ],
            r.number("probability"),
        );
    }
    m.values(0)
        .iter()
        .map(|model| {
            let mut series = Vec::new();
            for meaning in m.values(1) {
                for (bi, band) in m.values(2).iter().enumerate() {
                    let points = line_series(&m, &[model, meaning, band], 3);
                    if !points.is_empty() {
                        series.push(Series {
                            name: format!("{meaning} / {band}"),
                            color: bi,
                            dashed: meaning != "first",
                            points,
                        });
                    }
                }
            }
            Panel::Lines {
                title: label_of(model),
                x_label: "trial".into(),
                series,
            }
        })
        .collect()
}

fn synonym(table: &Table) -> Vec<Panel> {
    let mut m = Means::default();
    for r in table.records() {
        m.add(
            vec![r.text("model"), r.text("label"), r.text("trial")],
            r.number("probability"),
        );
    }
    m.values(0)
        .iter()
        .map(|model| Panel::Lines {
            title: label_of(model),
            x_label: "trial".into(),
            series: m
                .values(1)
                .iter()
                .enumerate()
                .map(|(i, label)| Series {
                    name: format!("{label} label"),
                    color: i,
                    dashed: i > 0,
                    points: line_series(&m, &[model, label], 2),
                })
                .collect(),
        })
        .collect()
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];
const PANEL_W: f64 = 460.0;
const PANEL_H: f64 = 300.0;
const MARGIN: (f64, f64, f64, f64) = (48.0, 150.0, 36.0, 44.0); // left, right, top, bottom

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn svg(title: &str, panels: &[Panel]) -> String {
    let cols = if panels.len() > 1 { 2 } else { 1 };
    let rows = panels.len().div_ceil(cols);
    let width = cols as f64 * PANEL_W;
    let height = 40.0 + rows as f64 * PANEL_H;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{width}" height="{height}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        width / 2.0,
        esc(title)
    );
    for (i, p) in panels.iter().enumerate() {
        let ox = (i % cols) as f64 * PANEL_W;
        let oy = 40.0 + (i / cols) as f64 * PANEL_H;
        panel(&mut s, p, ox, oy);
    }
    s.push_str("</svg>\n");
    s
}

fn panel(s: &mut String, p: &Panel, ox: f64, oy: f64) {
    let (ml, mr, mt, mb) = MARGIN;
    let (x0, y0) = (ox + ml, oy + mt);
    let (w, h) = (PANEL_W - ml - mr, PANEL_H - mt - mb);
    let sy = |v: f64| y0 + h * (1.0 - v.clamp(0.0, 1.0));
    let title = match p {
        Panel::Lines { title, .. } | Panel::Bars { title, .. } => title,
    };
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">{}</text>"#,
        x0 + w / 2.0,
        y0 - 10.0,
        esc(title)
    );
    // y axis, shared [0, 1] scale
    for k in 0..=4 {
        let v = k as f64 / 4.0;
        let y = sy(v);
        let _ = writeln!(
            s,
            r##"<line x1="{x0:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#e0e0e0"/>"##,
            x0 + w
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            x0 - 6.0,
            y + 4.0,
            tick_label(v)
        );
    }
    let _ = writeln!(
        s,
        r##"<rect x="{x0:.1}" y="{y0:.1}" width="{w:.1}" height="{h:.1}" fill="none" stroke="#444"/>"##
    );

    let legend = |s: &mut String, k: usize, name: &str, color: &str, dashed: bool| {
        let ly = y0 + 8.0 + 16.0 * k as f64;
        let lx = x0 + w + 10.0;
        let dash = if dashed {
            r#" stroke-dasharray="5 3""#
        } else {
            ""
        };
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"{dash}/>"#,
            lx + 18.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 24.0,
            ly + 4.0,
            esc(name)
        );
    };

    match p {
        Panel::Lines {
            x_label, series, ..
        } => {
            let xs = series.iter().flat_map(|se| se.points.iter().map(|p| p.0));
            let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
                (a.min(x), b.max(x))
            });
            let (lo, hi) = if lo.is_finite() && hi > lo {
                (lo, hi)
            } else {
                (0.0, 1.0)
            };
            let sx = |v: f64| x0 + w * (v - lo) / (hi - lo);
            for k in 0..=4 {
                let v = lo + (hi - lo) * k as f64 / 4.0;
                let _ = writeln!(
                    s,
                    r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                    sx(v),
                    y0 + h + 14.0,
                    tick_label(v.round())
                );
            }
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                x0 + w / 2.0,
                y0 + h + 32.0,
                esc(x_label)
            );
            for (k, se) in series.iter().enumerate() {
                let color = PALETTE[se.color % PALETTE.len()];
                let pts: Vec<String> = se
                    .points
                    .iter()
                    .filter(|p| p.1.is_finite())
                    .map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y)))
                    .collect();
                let dash = if se.dashed {
                    r#" stroke-dasharray="5 3""#
                } else {
                    ""
                };
                let _ = writeln!(
                    s,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.6"{dash}/>"#,
                    pts.join(" ")
                );
                legend(s, k, &se.name, color, se.dashed);
            }
        }
        Panel::Bars {
            groups,
            series,
            values,
            ..
        } => {
            let gw = w / groups.len().max(1) as f64;
            let bw = gw * 0.8 / series.len().max(1) as f64;
            for (g, name) in groups.iter().enumerate() {
                let gx = x0 + g as f64 * gw + gw * 0.1;
                for (k, v) in values[g].iter().enumerate() {
                    if !v.is_finite() {
                        continue;
                    }
                    let color = PALETTE[k % PALETTE.len()];
                    let _ = writeln!(
                        s,
                        r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{color}"/>"#,
                        gx + k as f64 * bw,
                        sy(*v),
                        bw * 0.9,
                        y0 + h - sy(*v)
                    );
                }
                let cx = x0 + g as f64 * gw + gw / 2.0;
                let ly = y0 + h + 12.0;
                let _ = writeln!(
                    s,
                    r#"<text x="{cx:.1}" y="{ly:.1}" text-anchor="end" transform="rotate(-25 {cx:.1} {ly:.1})" font-size="9">{}</text>"#,
                    esc(name)
                );
            }
            for (k, name) in series.iter().enumerate() {
                legend(s, k, name, PALETTE[k % PALETTE.len()], false);
            }
        }
    }
}
