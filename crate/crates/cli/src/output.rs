//! Tables (CSV or JSON), summaries and standalone SVG line plots.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::config::{RunConfig, CONFIG_MARKER};
use crate::error::CliResult;

pub const UNITS: &str = "# units: rates, detunings and pump in gamma0; wavevectors in k0; lengths in lambda_b";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:.12e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => Value::from(*v),
            Cell::Num(v) => Value::from(v.to_string()),
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.clone()),
        }
    }
}

pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, command: &str, config: &RunConfig) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# qlm {command}");
        let _ = writeln!(out, "{UNITS}");
        let _ = writeln!(out, "{CONFIG_MARKER}{}", config.to_line());
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn to_json(&self, command: &str, config: &RunConfig) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
            .collect();
        serde_json::json!({
            "command": command,
            "config": config,
            "columns": self.columns,
            "rows": rows,
        })
    }
}

/// Writes outputs for one command into a directory.
pub struct Sink {
    pub dir: PathBuf,
    pub format: Format,
    pub command: String,
    pub config: RunConfig,
    pub written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: &Path, format: Format, command: &str, config: RunConfig) -> CliResult<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
            command: command.to_string(),
            config,
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, body: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, body)?;
        self.written.push(path);
        Ok(())
    }

    pub fn table(&mut self, stem: &str, table: &Table) -> CliResult<()> {
        match self.format {
            Format::Csv => {
                let body = table.to_csv(&self.command, &self.config);
                self.write(&format!("{stem}.csv"), &body)
            }
            Format::Json => {
                let body = serde_json::to_string_pretty(&table.to_json(&self.command, &self.config))
                    .expect("table serializes");
                self.write(&format!("{stem}.json"), &(body + "\n"))
            }
        }
    }

    pub fn svg(&mut self, stem: &str, plot: &Plot) -> CliResult<()> {
        self.write(&format!("{stem}.svg"), &plot.render())
    }

    /// Summary record with the resolved config; returned for stdout.
    pub fn summary(&mut self, mut body: Value) -> CliResult<Value> {
        if let Value::Object(map) = &mut body {
            map.insert("command".into(), Value::from(self.command.clone()));
            map.insert("config".into(), serde_json::to_value(&self.config).expect("config serializes"));
        }
        let text = serde_json::to_string_pretty(&body).expect("summary serializes");
        self.write(&format!("{}-summary.json", self.command), &(text + "\n"))?;
        Ok(body)
    }
}

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
            dashed: false,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub hlines: Vec<f64>,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.3e}")
    } else {
        format!("{v:.4}")
    }
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
            hlines: Vec::new(),
        }
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let finite = self
            .series
            .iter()
            .flat_map(|s| s.points.iter())
            .filter(|(x, y)| x.is_finite() && y.is_finite());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in finite {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        for &h in &self.hlines {
            y0 = y0.min(h);
            y1 = y1.max(h);
        }
        if !x0.is_finite() {
            return (0.0, 1.0, 0.0, 1.0);
        }
        if x1 == x0 {
            x1 = x0 + 1.0;
        }
        if y1 == y0 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let pad = 0.05 * (y1 - y0);
        (x0, x1, y0 - pad, y1 + pad)
    }

    /// Deterministic standalone SVG document.
    pub fn render(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
        );
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let xv = x0 + f * (x1 - x0);
            let yv = y0 + f * (y1 - y0);
            let (px, py) = (sx(xv), sy(yv));
            let _ = writeln!(
                out,
                r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 20.0,
                tick_label(xv)
            );
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 5.0,
                LEFT - 8.0,
                py + 4.0,
                tick_label(yv)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );
        for &h in &self.hlines {
            let py = sy(h);
            let _ = writeln!(
                out,
                r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#777777" stroke-dasharray="2,3"/>"##,
                LEFT + pw
            );
        }
        for (i, s) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let dash = if s.dashed { r#" stroke-dasharray="6,4""# } else { "" };
            // Non-finite samples split the curve into separate polylines.
            let mut segment: Vec<String> = Vec::new();
            let flush = |segment: &mut Vec<String>, out: &mut String| {
                if segment.len() > 1 {
                    let _ = writeln!(
                        out,
                        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
                        segment.join(" ")
                    );
                }
                segment.clear();
            };
            for &(x, y) in &s.points {
                if x.is_finite() && y.is_finite() {
                    segment.push(format!("{:.2},{:.2}", sx(x), sy(y)));
                } else {
                    flush(&mut segment, &mut out);
                }
            }
            flush(&mut segment, &mut out);
            let ly = TOP + 14.0 + 18.0 * i as f64;
            let lx = LEFT + pw + 12.0;
            let _ = writeln!(
                out,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.2}" y="{:.2}">{}</text>"#,
                lx + 20.0,
                lx + 26.0,
                ly + 4.0,
                escape(&s.name)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}
