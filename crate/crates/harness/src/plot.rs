//! Line plots rebuilt from a run directory's `aggregate.csv` files.
//!
//! Output is plain SVG written by hand so that the same CSVs always give the
//! same bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 50.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Figure {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Horizontal reference line, e.g. a constraint threshold.
    pub hline: Option<f64>,
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let mut r =
            csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
        let header = r.headers()?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| {
                rec?.iter()
                    .map(|s| {
                        s.parse::<f64>()
                            .with_context(|| format!("bad number `{s}`"))
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        Ok(Self { header, rows })
    }

    fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

fn series_from(table: &Table, label: &str, x_col: &str, metric: &str) -> Option<Series> {
    Some(Series {
        label: label.to_string(),
        x: table.column(x_col)?,
        y: table.column(&format!("{metric}_mean"))?,
        lo: table.column(&format!("{metric}_ci_low"))?,
        hi: table.column(&format!("{metric}_ci_high"))?,
    })
}

/// Variant subdirectories holding an `aggregate.csv`, sorted by name.
fn variant_dirs(run_dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(run_dir).with_context(|| format!("listing {}", run_dir.display()))? {
        let path = entry?.path();
        if path.join("aggregate.csv").is_file() {
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            out.push((name, path));
        }
    }
    out.sort();
    Ok(out)
}

fn thresholds(run_dir: &Path) -> Vec<f64> {
    let Ok(text) = fs::read_to_string(run_dir.join("manifest.json")) else {
        return Vec::new();
    };
    let Ok(v) = serde_json::from_str::<serde_json::Value>(&text) else {
        return Vec::new();
    };
    v["config"]["constraints"]
        .as_array()
        .map(|cs| cs.iter().filter_map(|c| c["threshold"].as_f64()).collect())
        .unwrap_or_default()
}

/// Writes `return.svg`, `cost[_i].svg` and `lambda[_i].svg` into `run_dir`.
pub fn plot_run_dir(run_dir: &Path) -> Result<Vec<PathBuf>> {
    let variants = variant_dirs(run_dir)?;
    if variants.is_empty() {
        bail!("no aggregate.csv found under {}", run_dir.display());
    }
    let tables: Vec<(String, Table)> = variants
        .iter()
        .map(|(n, p)| Ok((n.clone(), Table::read(&p.join("aggregate.csv"))?)))
        .collect::<Result<_>>()?;
    let u = tables[0]
        .1
        .header
        .iter()
        .filter(|h| h.starts_with("lambda_") && h.ends_with("_mean"))
        .count();
    let b = thresholds(run_dir);

    let collect = |x_col: &str, metric: &str| -> Vec<Series> {
        tables
            .iter()
            .filter_map(|(n, t)| series_from(t, n, x_col, metric))
            .collect()
    };
    let mut figures = vec![(
        "return.svg".to_string(),
        Figure {
            title: "Return".into(),
            x_label: "trajectories".into(),
            y_label: "mean return".into(),
            series: collect("trajectories_consumed", "mean_return"),
            hline: None,
        },
    )];
    for i in 1..=u {
        let suffix = if u == 1 {
            String::new()
        } else {
            format!("_{i}")
        };
        figures.push((
            format!("cost{suffix}.svg"),
            Figure {
                title: format!("Constraint {i}"),
                x_label: "trajectories".into(),
                y_label: "risk value".into(),
                series: collect("trajectories_consumed", &format!("risk_value_{i}")),
                hline: b.get(i - 1).copied(),
            },
        ));
        figures.push((
            format!("lambda{suffix}.svg"),
            Figure {
                title: format!("Multiplier {i}"),
                x_label: "iteration".into(),
                y_label: "lambda".into(),
                series: collect("iteration", &format!("lambda_{i}")),
                hline: None,
            },
        ));
    }
    let mut written = Vec::new();
    for (name, fig) in figures {
        let path = run_dir.join(name);
        fs::write(&path, render_svg(&fig))?;
        written.push(path);
    }
    Ok(written)
}

fn bounds(fig: &Figure) -> (f64, f64, f64, f64) {
    let xs = fig.series.iter().flat_map(|s| s.x.iter().copied());
    let ys = fig
        .series
        .iter()
        .flat_map(|s| s.lo.iter().chain(&s.hi).chain(&s.y).copied())
        .chain(fig.hline);
    let (mut x0, mut x1) = min_max(xs);
    let (mut y0, mut y1) = min_max(ys);
    if x1 <= x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 <= y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pad = 0.05 * (y1 - y0);
    (x0, x1, y0 - pad, y1 + pad)
}

fn min_max(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        })
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub fn render_svg(fig: &Figure) -> String {
    let (x0, x1, y0, y1) = if fig.series.iter().all(|s| s.x.is_empty()) {
        (0.0, 1.0, 0.0, 1.0)
    } else {
        bounds(fig)
    };
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| MARGIN_T + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        MARGIN_L + pw / 2.0,
        escape(&fig.title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(fx),
            MARGIN_T + ph + 16.0,
            fmt_tick(fx)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            MARGIN_L - 6.0,
            sy(fy) + 4.0,
            fmt_tick(fy)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        MARGIN_L + pw / 2.0,
        HEIGHT - 10.0,
        escape(&fig.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        MARGIN_T + ph / 2.0,
        MARGIN_T + ph / 2.0,
        escape(&fig.y_label)
    );
    if let Some(h) = fig.hline {
        let _ = writeln!(
            s,
            r#"<line x1="{MARGIN_L}" y1="{y:.2}" x2="{:.1}" y2="{y:.2}" stroke="black" stroke-dasharray="6 4"/>"#,
            MARGIN_L + pw,
            y = sy(h)
        );
    }
    for (k, ser) in fig.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        if ser.x.is_empty() {
            continue;
        }
        let mut band = String::new();
        for (x, y) in ser.x.iter().zip(&ser.hi) {
            let _ = write!(band, "{:.2},{:.2} ", sx(*x), sy(*y));
        }
        for (x, y) in ser.x.iter().zip(&ser.lo).rev() {
            let _ = write!(band, "{:.2},{:.2} ", sx(*x), sy(*y));
        }
        let _ = writeln!(
            s,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#,
            band.trim_end()
        );
        let line: Vec<String> = ser
            .x
            .iter()
            .zip(&ser.y)
            .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            line.join(" ")
        );
        let ly = MARGIN_T + 14.0 + 18.0 * k as f64;
        let lx = MARGIN_L + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"/>"#,
            ly - 4.0,
            lx + 18.0,
            ly - 4.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{ly:.1}">{}</text>"#,
            lx + 24.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}
