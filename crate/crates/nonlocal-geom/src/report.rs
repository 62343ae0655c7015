//! Report emission: CSV files with reproducibility headers and small static
//! SVG plots.
//!
//! Every file starts with `#`-prefixed metadata (version, run config, seed,
//! wall time). Re-running with the same config reproduces the numeric lines
//! bit-exactly; only the wall-time comment may differ.

use std::io::Write;
use std::path::Path;
use std::time::SystemTime;

pub fn version_string() -> String {
    format!("nonlocal-geom v{}", env!("CARGO_PKG_VERSION"))
}

pub struct CsvReport {
    pub config_json: String,
    pub seed: u64,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvReport {
    pub fn render(&self) -> String {
        let wall = SystemTime::now()
            .duration_since(SystemTime::UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        let mut out = String::new();
        out.push_str(&format!("# {}\n", version_string()));
        out.push_str(&format!("# config: {}\n", self.config_json));
        out.push_str(&format!("# seed: {}\n", self.seed));
        out.push_str(&format!("# wall_time_unix: {wall}\n"));
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_to(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.render().as_bytes())
    }
}

/// Quote a CSV field that may contain commas.
pub fn quote(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "'"))
    } else {
        s.to_string()
    }
}

/// Numeric lines of a rendered report (everything that must replay
/// bit-exactly).
pub fn numeric_lines(rendered: &str) -> Vec<&str> {
    rendered.lines().filter(|l| !l.starts_with('#')).collect()
}

/// Minimal static line plot. `points` are (x, y) pairs per series.
pub fn svg_line_plot(
    title: &str,
    series: &[(&str, Vec<(f64, f64)>)],
    log_x: bool,
    log_y: bool,
) -> String {
    let (w, h, ml, mb) = (640.0, 420.0, 70.0, 50.0);
    let tx = |v: f64| if log_x { v.log10() } else { v };
    let ty = |v: f64| if log_y { v.log10() } else { v };
    let all: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|(_, pts)| pts.iter().map(|&(x, y)| (tx(x), ty(y))))
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    if all.is_empty() {
        return format!("<svg xmlns='http://www.w3.org/2000/svg'><text>{title}: no data</text></svg>");
    }
    let (x0, x1) = all
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(x, _)| {
            (a.min(x), b.max(x))
        });
    let (y0, y1) = all
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(_, y)| {
            (a.min(y), b.max(y))
        });
    let (xs, ys) = ((x1 - x0).max(1e-12), (y1 - y0).max(1e-12));
    let px = |x: f64| ml + (x - x0) / xs * (w - ml - 20.0);
    let py = |y: f64| h - mb - (y - y0) / ys * (h - mb - 40.0);
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    let mut svg = format!(
        "<svg xmlns='http://www.w3.org/2000/svg' width='{w}' height='{h}' font-family='monospace' font-size='12'>\n\
         <rect width='100%' height='100%' fill='white'/>\n\
         <text x='{}' y='20' text-anchor='middle'>{title}</text>\n",
        w / 2.0
    );
    svg.push_str(&format!(
        "<line x1='{ml}' y1='{}' x2='{}' y2='{}' stroke='black'/>\n\
         <line x1='{ml}' y1='40' x2='{ml}' y2='{}' stroke='black'/>\n",
        h - mb,
        w - 20.0,
        h - mb,
        h - mb
    ));
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = colors[i % colors.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(tx(x)), py(ty(y))))
            .collect();
        svg.push_str(&format!(
            "<polyline points='{}' fill='none' stroke='{color}' stroke-width='1.5'/>\n\
             <text x='{}' y='{}' fill='{color}'>{name}</text>\n",
            path.join(" "),
            w - 160.0,
            50.0 + 16.0 * i as f64
        ));
    }
    svg.push_str(&format!(
        "<text x='{ml}' y='{}' font-size='10'>{}{:.3} .. {:.3}</text>\n\
         <text x='10' y='38' font-size='10'>{}{:.3} .. {:.3}</text>\n</svg>\n",
        h - 10.0,
        if log_x { "log10 x: " } else { "x: " },
        x0,
        x1,
        if log_y { "log10 y: " } else { "y: " },
        y0,
        y1
    ));
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_lines_ignore_metadata() {
        let rep = CsvReport {
            config_json: "{}".into(),
            seed: 7,
            header: vec!["a".into(), "b".into()],
            rows: vec![vec!["1".into(), "2".into()]],
        };
        let r1 = rep.render();
        std::thread::sleep(std::time::Duration::from_millis(5));
        let r2 = rep.render();
        assert_eq!(numeric_lines(&r1), numeric_lines(&r2));
    }

    #[test]
    fn quoting() {
        assert_eq!(quote("plain"), "plain");
        assert_eq!(quote("a,b"), "\"a,b\"");
    }

    #[test]
    fn svg_has_polyline() {
        let svg = svg_line_plot(
            "density",
            &[("frac", vec![(0.1, 0.5), (1.0, 0.5), (10.0, 0.5)])],
            true,
            false,
        );
        assert!(svg.contains("polyline"));
        assert!(svg.contains("density"));
    }
}
