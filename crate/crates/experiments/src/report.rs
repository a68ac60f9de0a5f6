use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use schrolab_core::FitReport;

use crate::config::{ExperimentConfig, Kind};
use crate::error::Result;

/// One parameter tuple of a sweep; `ratio = measured / bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub params: Vec<f64>,
    pub measured: f64,
    pub bound: f64,
    pub ratio: f64,
}

impl Row {
    pub fn new(params: Vec<f64>, measured: f64, bound: f64) -> Self {
        Self {
            params,
            measured,
            bound,
            ratio: measured / bound,
        }
    }
}

/// A named scalar compared against an optional lower and upper limit.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub strict: bool,
    pub pass: bool,
}

impl Check {
    pub fn within(name: impl Into<String>, value: f64, lo: Option<f64>, hi: Option<f64>) -> Self {
        let pass =
            value.is_finite() && lo.is_none_or(|l| value >= l) && hi.is_none_or(|h| value <= h);
        Self {
            name: name.into(),
            value,
            lo,
            hi,
            strict: false,
            pass,
        }
    }

    /// `value > 0`.
    pub fn positive(name: impl Into<String>, value: f64) -> Self {
        Self {
            strict: true,
            pass: value.is_finite() && value > 0.0,
            ..Self::at_least(name, value, 0.0)
        }
    }

    /// `value < 0`.
    pub fn negative(name: impl Into<String>, value: f64) -> Self {
        Self {
            strict: true,
            pass: value.is_finite() && value < 0.0,
            ..Self::at_most(name, value, 0.0)
        }
    }

    /// Any finite value.
    pub fn finite(name: impl Into<String>, value: f64) -> Self {
        Self::within(name, value, None, None)
    }

    pub fn at_most(name: impl Into<String>, value: f64, hi: f64) -> Self {
        Self::within(name, value, None, Some(hi))
    }

    pub fn at_least(name: impl Into<String>, value: f64, lo: f64) -> Self {
        Self::within(name, value, Some(lo), None)
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::at_least(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }

    pub fn describe(&self) -> String {
        let eq = if self.strict { "" } else { "=" };
        let bounds = match (self.lo, self.hi) {
            (Some(l), Some(h)) => format!(" in [{l}, {h}]"),
            (Some(l), None) => format!(" >{eq} {l}"),
            (None, Some(h)) => format!(" <{eq} {h}"),
            (None, None) => " finite".into(),
        };
        let verdict = if self.pass { "ok" } else { "VIOLATED" };
        format!("{} = {}{bounds} ({verdict})", self.name, self.value)
    }
}

/// What the SVG draws: points on log-log axes, the fitted line and the
/// reference slope.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Plot {
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
    pub fit: Option<FitReport>,
    pub reference_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub kind: Kind,
    pub param_names: Vec<&'static str>,
    /// Sorted by parameter tuple.
    pub rows: Vec<Row>,
    /// Every row must satisfy `ratio <= cap`.
    pub ratio_cap: Option<f64>,
    pub checks: Vec<Check>,
    pub values: Vec<(String, f64)>,
    pub plot: Plot,
    pub pass: bool,
}

fn cmp_params(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(a.len().cmp(&b.len()))
}

impl ExperimentReport {
    pub fn new(kind: Kind, param_names: Vec<&'static str>, mut rows: Vec<Row>) -> Self {
        rows.sort_by(|a, b| cmp_params(&a.params, &b.params));
        Self {
            kind,
            param_names,
            rows,
            ratio_cap: None,
            checks: Vec::new(),
            values: Vec::new(),
            plot: Plot::default(),
            pass: false,
        }
    }

    pub fn with_cap(mut self, cap: f64) -> Self {
        self.ratio_cap = Some(cap);
        self
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn value(&mut self, name: impl Into<String>, v: f64) {
        self.values.push((name.into(), v));
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }

    pub fn max_ratio(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.ratio)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn fit(&self) -> Option<&FitReport> {
        self.plot.fit.as_ref()
    }

    /// Decides `pass` from the cap and the checks.
    pub fn finish(mut self) -> Self {
        let capped = match self.ratio_cap {
            Some(cap) => self.rows.iter().all(|r| r.ratio <= cap),
            None => true,
        };
        self.pass = capped && !self.rows.is_empty() && self.checks.iter().all(|c| c.pass);
        self
    }

    /// The row to show when the report fails: the first one over the cap,
    /// otherwise the one with the largest ratio.
    pub fn failing_row(&self) -> Option<&Row> {
        if self.pass {
            return None;
        }
        if let Some(cap) = self.ratio_cap {
            if let Some(r) = self.rows.iter().find(|r| !(r.ratio <= cap)) {
                return Some(r);
            }
        }
        self.rows.iter().max_by(|a, b| a.ratio.total_cmp(&b.ratio))
    }

    pub fn format_row(&self, row: &Row) -> String {
        let mut s = String::new();
        for (name, v) in self.param_names.iter().zip(&row.params) {
            let _ = write!(s, "{name}={v} ");
        }
        let _ = write!(
            s,
            "measured={} bound={} ratio={}",
            row.measured, row.bound, row.ratio
        );
        s
    }

    /// One line per check plus the verdict.
    pub fn summary_lines(&self) -> Vec<String> {
        let mut out = vec![format!(
            "{}: {} ({} rows, max ratio {})",
            self.kind,
            if self.pass { "PASS" } else { "FAIL" },
            self.rows.len(),
            self.max_ratio()
        )];
        if let Some(cap) = self.ratio_cap {
            out.push(format!("  every ratio <= {cap}"));
        }
        out.extend(self.checks.iter().map(|c| format!("  {}", c.describe())));
        if let Some(f) = self.fit() {
            out.push(format!(
                "  fit: slope {} r2 {} over {} points",
                f.slope, f.r_squared, f.npoints
            ));
        }
        if let Some(r) = self.failing_row() {
            out.push(format!("  failing row: {}", self.format_row(r)));
        }
        out
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<&str> = self.param_names.clone();
        header.extend(["measured", "bound", "ratio"]);
        out.write_record(&header)?;
        for row in &self.rows {
            let mut rec: Vec<String> = row.params.iter().map(f64::to_string).collect();
            rec.extend(
                [row.measured, row.bound, row.ratio]
                    .iter()
                    .map(f64::to_string),
            );
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Log-log scatter of the plot points with the fitted line and the
    /// reference slope drawn through the points' centroid.
    pub fn write_svg<W: Write>(&self, mut w: W, stamp: &str) -> Result<()> {
        let svg = render_svg(&self.kind.to_string(), &self.plot, stamp);
        w.write_all(svg.as_bytes())?;
        Ok(())
    }

    /// Writes `{kind}_{n}d_N{N}_{stamp}.csv` and `.svg` into `dir`.
    pub fn save(&self, cfg: &ExperimentConfig, dir: &Path, stamp: &str) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let base = format!("{}_{}d_N{}_{stamp}", self.kind, cfg.n, cfg.points);
        let csv_path = dir.join(format!("{base}.csv"));
        let svg_path = dir.join(format!("{base}.svg"));
        self.write_csv(std::fs::File::create(&csv_path)?)?;
        self.write_svg(std::fs::File::create(&svg_path)?, stamp)?;
        Ok(vec![csv_path, svg_path])
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 64.0;

fn render_svg(title: &str, plot: &Plot, stamp: &str) -> String {
    let pts: Vec<(f64, f64)> = plot
        .points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
        .map(|&(x, y)| (x.log10(), y.log10()))
        .collect();
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, "<desc>{title} generated {stamp}</desc>");
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{title}</text>"#,
        WIDTH / 2.0
    );
    let (x0, x1, y0, y1) = bounds(&pts);
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    for d in (x0.ceil() as i32)..=(x1.floor() as i32) {
        let x = px(d as f64);
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="11">1e{d}</text>"#,
            HEIGHT - MARGIN + 16.0
        );
    }
    for d in (y0.ceil() as i32)..=(y1.floor() as i32) {
        let y = py(d as f64);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{y:.2}" text-anchor="end" font-family="sans-serif" font-size="11">1e{d}</text>"#,
            MARGIN - 6.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 20.0,
        plot.x_label
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 18 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        plot.y_label
    );
    let mut line = |slope: f64, icpt: f64, color: &str, dash: &str| {
        let (ya, yb) = (icpt + slope * x0, icpt + slope * x1);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            px(x0),
            py(ya),
            px(x1),
            py(yb)
        );
    };
    if let Some(f) = &plot.fit {
        // The fit is in natural logs; the axes are decimal.
        line(
            f.slope,
            f.intercept / std::f64::consts::LN_10,
            "steelblue",
            "",
        );
    }
    if let (Some(slope), false) = (plot.reference_slope, pts.is_empty()) {
        let n = pts.len() as f64;
        let (cx, cy) = pts
            .iter()
            .fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
        line(
            slope,
            cy - slope * cx,
            "firebrick",
            r#" stroke-dasharray="6 4""#,
        );
    }
    for &(x, y) in &pts {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="black"/>"#,
            px(x),
            py(y)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn bounds(pts: &[(f64, f64)]) -> (f64, f64, f64, f64) {
    if pts.is_empty() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    let fold = |f: fn(&(f64, f64)) -> f64| {
        pts.iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
    };
    let pad = |(lo, hi): (f64, f64)| {
        let w = (hi - lo).max(0.2);
        (lo - 0.05 * w, hi + 0.05 * w)
    };
    let (x0, x1) = pad(fold(|p| p.0));
    let (y0, y1) = pad(fold(|p| p.1));
    (x0, x1, y0, y1)
}

/// Median of the finite entries.
pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// `max / median`: how far the largest constant sits above the typical one.
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max / median(values)
}
