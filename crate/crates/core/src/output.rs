//! CSV records, static SVG line charts and the Δ-grid grammar.

use std::fmt::Write as _;
use std::path::Path;

use crate::experiments::{lin_grid, log_grid, EntropyTrace, RatioPoint, SweepRecord};
use crate::observables::Resistance;
use crate::solver::SolveStatus;
use crate::{Error, Result};

pub const CSV_HEADER: &str = "circuit,delta,direction,branches,R,G,coherence,status";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// CSV text for `records`, in the given order.
///
/// Numbers use Rust's shortest round-trip scientific form; a diverged row
/// has `R = inf`, `G = 0` and no coherence (`nan`).
pub fn records_csv(records: &[SweepRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let branches = r.branches.map(|m| m.to_string()).unwrap_or_default();
        let (res, g) = match r.resistance {
            Resistance::Finite(v) => (format!("{v:e}"), format!("{:e}", r.conductance)),
            Resistance::Infinite => ("inf".to_string(), "0".to_string()),
        };
        let coherence = r.coherence.map_or_else(|| "nan".to_string(), |s| format!("{s:e}"));
        let _ = writeln!(
            out,
            "{},{:e},{},{},{},{},{},{}",
            csv_field(&r.circuit_label),
            r.delta,
            r.direction,
            branches,
            res,
            g,
            coherence,
            r.status.as_str()
        );
    }
    out
}

pub fn write_records(records: &[SweepRecord], path: &Path) -> Result<()> {
    std::fs::write(path, records_csv(records)).map_err(Error::from)
}

/// `(t, S)` rows of coherence traces as CSV.
pub fn traces_csv(traces: &[EntropyTrace]) -> String {
    let mut out = String::from("circuit,delta,t,coherence\n");
    for tr in traces {
        for (t, s) in tr.times.iter().zip(&tr.entropy) {
            let _ = writeln!(out, "{},{:e},{t:e},{s:e}", csv_field(&tr.circuit_label), tr.delta);
        }
    }
    out
}

/// Rectification ratios as CSV.
pub fn ratios_csv(points: &[RatioPoint]) -> String {
    let mut out = String::from("delta,R_forward,R_reverse,ratio\n");
    for p in points {
        let _ = writeln!(out, "{:e},{},{},{:e}", p.delta, p.forward, p.reverse, p.ratio);
    }
    out
}

/// Parses `log:lo:hi:n`, `lin:lo:hi:n` or a comma-separated list.
pub fn parse_delta_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |msg: String| Error::InvalidArgument(format!("delta grid '{spec}': {msg}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(format!("'{s}' is not a number")));
    let spec_t = spec.trim();
    let grid = if let Some(rest) = spec_t.strip_prefix("log:").or_else(|| spec_t.strip_prefix("lin:")) {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected kind:lo:hi:count".into()));
        }
        let count: usize = parts[2].trim().parse().map_err(|_| bad(format!("'{}' is not a count", parts[2])))?;
        let (lo, hi) = (num(parts[0])?, num(parts[1])?);
        if spec_t.starts_with("log:") {
            log_grid(lo, hi, count)?
        } else {
            lin_grid(lo, hi, count)?
        }
    } else {
        spec_t.split(',').filter(|s| !s.trim().is_empty()).map(num).collect::<Result<Vec<f64>>>()?
    };
    if grid.is_empty() {
        return Err(bad("no values".into()));
    }
    if let Some(d) = grid.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
        return Err(bad(format!("Δ must be finite and non-negative, got {d}")));
    }
    Ok(grid)
}

/// One line of a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub label: String,
    pub log: bool,
}

impl Axis {
    pub fn linear(label: &str) -> Self {
        Axis { label: label.into(), log: false }
    }

    pub fn log(label: &str) -> Self {
        Axis { label: label.into(), log: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartSpec {
    pub title: String,
    pub x: Axis,
    pub y: Axis,
    /// Horizontal reference line, e.g. ratio = 1.
    pub reference_y: Option<f64>,
}

/// Result of a chart request.
#[derive(Debug, Clone, PartialEq)]
pub enum ChartOutcome {
    Written,
    /// Nothing plottable; carries the warning text.
    Omitted(String),
}

/// G vs m, one series per Δ.
pub fn branch_series(records: &[SweepRecord]) -> Vec<Series> {
    let mut deltas: Vec<f64> = records.iter().map(|r| r.delta).collect();
    deltas.sort_by(f64::total_cmp);
    deltas.dedup();
    deltas
        .into_iter()
        .map(|d| Series {
            name: format!("Δ = {d}"),
            points: records
                .iter()
                .filter(|r| r.delta == d && r.status == SolveStatus::Converged)
                .filter_map(|r| r.branches.map(|m| (m as f64, r.conductance)))
                .collect(),
        })
        .collect()
}

/// R vs Δ, one series per (circuit, direction).
pub fn dephasing_series(records: &[SweepRecord]) -> Vec<Series> {
    let mut keys: Vec<(String, String)> =
        records.iter().map(|r| (r.circuit_label.clone(), r.direction.to_string())).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(label, dir)| Series {
            name: format!("{label} ({dir})"),
            points: records
                .iter()
                .filter(|r| r.circuit_label == label && r.direction.to_string() == dir)
                .filter_map(|r| match r.resistance {
                    Resistance::Finite(v) => Some((r.delta, v)),
                    Resistance::Infinite => None,
                })
                .collect(),
        })
        .collect()
}

pub fn ratio_series(label: &str, points: &[RatioPoint]) -> Vec<Series> {
    vec![Series {
        name: label.to_string(),
        points: points.iter().map(|p| (p.delta, p.ratio)).collect(),
    }]
}

pub fn entropy_series(traces: &[EntropyTrace]) -> Vec<Series> {
    traces
        .iter()
        .map(|t| Series {
            name: format!("{} (Δ = {})", t.circuit_label, t.delta),
            points: t.times.iter().copied().zip(t.entropy.iter().copied()).collect(),
        })
        .collect()
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Scale {
    lo: f64,
    hi: f64,
    log: bool,
    px_lo: f64,
    px_hi: f64,
}

impl Scale {
    fn new(values: impl Iterator<Item = f64>, log: bool, px_lo: f64, px_hi: f64, include: Option<f64>) -> Self {
        let tf = |v: f64| if log { v.log10() } else { v };
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.chain(include) {
            lo = lo.min(tf(v));
            hi = hi.max(tf(v));
        }
        if hi - lo < 1e-12 {
            let pad = if lo.abs() > 1e-12 { 0.1 * lo.abs() } else { 1.0 };
            lo -= pad;
            hi += pad;
        } else if !log {
            let pad = 0.05 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
        Scale { lo, hi, log, px_lo, px_hi }
    }

    fn px(&self, v: f64) -> f64 {
        let t = if self.log { v.log10() } else { v };
        self.px_lo + (t - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }

    /// Tick positions in data units.
    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let (a, b) = (self.lo.ceil() as i32, self.hi.floor() as i32);
            if b >= a {
                return (a..=b).map(|e| 10f64.powi(e)).collect();
            }
            return vec![10f64.powf(self.lo), 10f64.powf(self.hi)];
        }
        let span = self.hi - self.lo;
        let raw = span / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
        let first = (self.lo / step).ceil() as i64;
        let last = (self.hi / step).floor() as i64;
        (first..=last).map(|k| k as f64 * step).collect()
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// SVG text of the chart, or `None` when no series has a finite point.
/// Non-finite points (and non-positive ones on log axes) are skipped.
pub fn chart_svg(series: &[Series], spec: &ChartSpec) -> Option<String> {
    let keep = |(x, y): (f64, f64)| {
        x.is_finite() && y.is_finite() && (!spec.x.log || x > 0.0) && (!spec.y.log || y > 0.0)
    };
    let cleaned: Vec<Series> = series
        .iter()
        .map(|s| Series { name: s.name.clone(), points: s.points.iter().copied().filter(|&p| keep(p)).collect() })
        .filter(|s| !s.points.is_empty())
        .collect();
    if cleaned.is_empty() {
        return None;
    }
    let xs = Scale::new(cleaned.iter().flat_map(|s| s.points.iter().map(|p| p.0)), spec.x.log, LEFT, WIDTH - RIGHT, None);
    let reference = spec.reference_y.filter(|&r| !spec.y.log || r > 0.0);
    let ys = Scale::new(
        cleaned.iter().flat_map(|s| s.points.iter().map(|p| p.1)),
        spec.y.log,
        HEIGHT - BOTTOM,
        TOP,
        reference,
    );

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text class="title" x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#, (LEFT + WIDTH - RIGHT) / 2.0, escape(&spec.title));
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(svg, r#"<rect class="frame" x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);

    for t in xs.ticks() {
        let px = xs.px(t);
        let _ = writeln!(svg, r##"<line class="xtick" x1="{px:.2}" y1="{y0:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"##, y0 + 5.0);
        let _ = writeln!(svg, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, y0 + 18.0, tick_label(t));
    }
    for t in ys.ticks() {
        let py = ys.px(t);
        let _ = writeln!(svg, r##"<line class="ytick" x1="{:.2}" y1="{py:.2}" x2="{x0:.2}" y2="{py:.2}" stroke="black"/>"##, x0 - 5.0);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, py + 4.0, tick_label(t));
    }
    let _ = writeln!(svg, r#"<text class="xlabel" x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, HEIGHT - 18.0, escape(&spec.x.label));
    let _ = writeln!(
        svg,
        r#"<text class="ylabel" x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(&spec.y.label)
    );
    if let Some(r) = reference {
        let py = ys.px(r);
        let _ = writeln!(svg, r##"<line class="reference" x1="{x0:.2}" y1="{py:.2}" x2="{x1:.2}" y2="{py:.2}" stroke="#888" stroke-dasharray="4 3"/>"##);
    }

    for (i, s) in cleaned.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", xs.px(x), ys.px(y))).collect();
        if pts.len() == 1 {
            let (x, y) = s.points[0];
            let _ = writeln!(svg, r#"<circle class="marker" cx="{:.2}" cy="{:.2}" r="3.5" fill="{colour}"/>"#, xs.px(x), ys.px(y));
        } else {
            let _ = writeln!(svg, r#"<polyline class="series" points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#, pts.join(" "));
        }
        let ly = TOP + 16.0 * i as f64 + 8.0;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(svg, r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{colour}" stroke-width="2"/>"#, lx + 18.0);
        let _ = writeln!(svg, r#"<text class="legend" x="{:.2}" y="{:.2}">{}</text>"#, lx + 24.0, ly + 4.0, escape(&s.name));
    }
    svg.push_str("</svg>\n");
    Some(svg)
}

/// Writes the chart to `path`, or reports why it was omitted.
pub fn render_chart(series: &[Series], spec: &ChartSpec, path: &Path) -> Result<ChartOutcome> {
    match chart_svg(series, spec) {
        Some(svg) => {
            std::fs::write(path, svg)?;
            Ok(ChartOutcome::Written)
        }
        None => Ok(ChartOutcome::Omitted(format!(
            "warning: nothing to plot for '{}' (every point diverged or is non-finite); chart omitted",
            spec.title
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Direction;

    fn record(label: &str, delta: f64, r: Resistance, status: SolveStatus) -> SweepRecord {
        SweepRecord {
            circuit_label: label.into(),
            delta,
            direction: Direction::Forward,
            branches: None,
            resistance: r,
            conductance: r.conductance(),
            coherence: r.is_finite().then_some(0.25),
            status,
        }
    }

    fn spec() -> ChartSpec {
        ChartSpec { title: "t".into(), x: Axis::linear("Δ"), y: Axis::linear("R"), reference_y: None }
    }

    #[test]
    fn empty_is_header_only() {
        assert_eq!(records_csv(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn one_row_two_lines() {
        let csv = records_csv(&[record("wire2", 0.5, Resistance::Finite(1.0), SolveStatus::Converged)]);
        assert_eq!(csv.lines().count(), 2);
        assert_eq!(csv.lines().nth(1).unwrap(), "wire2,5e-1,forward,,1e0,1e0,2.5e-1,converged");
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn diverged_row() {
        let csv = records_csv(&[record("pentagon", 0.0, Resistance::Infinite, SolveStatus::Diverged)]);
        assert_eq!(csv.lines().nth(1).unwrap(), "pentagon,0e0,forward,,inf,0,nan,diverged");
    }

    #[test]
    fn full_precision_round_trip() {
        let v = 1.0 / 3.0;
        let csv = records_csv(&[record("x", v, Resistance::Finite(v), SolveStatus::Converged)]);
        let fields: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(fields[1].parse::<f64>().unwrap(), v);
        assert_eq!(fields[4].parse::<f64>().unwrap(), v);
    }

    #[test]
    fn delta_grids() {
        let g = parse_delta_grid("log:1e-3:50:40").unwrap();
        assert_eq!(g.len(), 40);
        assert_eq!((g[0], g[39]), (1e-3, 50.0));
        assert_eq!(parse_delta_grid("lin:0:1:5").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_delta_grid("0, 0.5,1").unwrap(), vec![0.0, 0.5, 1.0]);
        for bad in ["", "log:0:1:5", "log:1:2", "lin:0:1:x", "a,b", "-1", "inf"] {
            assert!(parse_delta_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn single_point_is_a_marker() {
        let s = [Series { name: "one".into(), points: vec![(1.0, 2.0)] }];
        let svg = chart_svg(&s, &spec()).unwrap();
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(!svg.contains("<polyline"));
    }

    #[test]
    fn all_diverged_is_omitted() {
        let recs = [record("pentagon", 0.0, Resistance::Infinite, SolveStatus::Diverged)];
        let out = render_chart(&dephasing_series(&recs), &spec(), Path::new("/nonexistent/never-written.svg")).unwrap();
        assert!(matches!(out, ChartOutcome::Omitted(_)));
    }

    #[test]
    fn chart_is_deterministic_and_labelled() {
        let s = [
            Series { name: "a < b".into(), points: vec![(1e-3, 1.0), (1.0, 2.0), (50.0, 0.5)] },
            Series { name: "c".into(), points: vec![(1e-2, f64::INFINITY), (1.0, 1.5), (10.0, 1.2)] },
        ];
        let sp = ChartSpec { title: "ratio".into(), x: Axis::log("Δ"), y: Axis::linear("R / Ω"), reference_y: Some(1.0) };
        let a = chart_svg(&s, &sp).unwrap();
        assert_eq!(a, chart_svg(&s, &sp).unwrap());
        assert_eq!(a.matches("<polyline").count(), 2);
        assert!(a.contains("a &lt; b") && a.contains(r#"class="reference""#) && a.contains("R / Ω"));
    }
}
