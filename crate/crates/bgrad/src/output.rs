//! CSV, JSON and SVG emission for estimates and reports.
//!
//! Every CSV carries a header row; plots are regenerable from the CSV alone
//! (oracle as a line, Monte Carlo bins as points with 2σ bars).

use crate::representation::{BinKind, FieldEstimate, OracleComparison};
use crate::Result;
use std::fmt::Write as _;
use std::path::Path;

/// Write a CSV file with a header row.
pub fn write_csv<P: AsRef<Path>>(
    path: P,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub const ESTIMATE_CSV_HEADER: [&str; 10] = [
    "bin_center_0",
    "bin_center_1",
    "estimate_0",
    "estimate_1",
    "stderr_0",
    "stderr_1",
    "count",
    "oracle_0",
    "oracle_1",
    "abs_error_max",
];

/// Rows of the documented estimate schema; `z_score` column appended when a
/// comparison is available.
pub fn estimate_rows(
    est: &FieldEstimate,
    cmp: Option<&OracleComparison>,
) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let mut header: Vec<&'static str> = ESTIMATE_CSV_HEADER.to_vec();
    header.push("z_score_max");
    let mut rows = Vec::new();
    for (b, stat) in est.bins.iter().enumerate() {
        let center = est.grid.center(b);
        let (mut oracle, mut abs_err, mut zmax) = (f64::NAN, f64::NAN, f64::NAN);
        let mut oracle1 = f64::NAN;
        if let Some(cmp) = cmp {
            for pc in cmp.per_bin.iter().filter(|pc| pc.bin == b) {
                if pc.comp == 0 {
                    oracle = pc.oracle;
                } else {
                    oracle1 = pc.oracle;
                }
                let e = (pc.estimate - pc.oracle).abs();
                if abs_err.is_nan() || e > abs_err {
                    abs_err = e;
                }
                if zmax.is_nan() || pc.z.abs() > zmax.abs() {
                    zmax = pc.z;
                }
            }
        }
        rows.push(vec![
            format!("{:.6}", center[0]),
            format!("{:.6}", center[1]),
            format!("{:.8}", stat.mean[0]),
            format!("{:.8}", stat.mean[1]),
            format!("{:.8}", stat.stderr[0]),
            format!("{:.8}", stat.stderr[1]),
            format!("{}", stat.count),
            format!("{:.8}", oracle),
            format!("{:.8}", oracle1),
            format!("{:.8}", abs_err),
            format!("{:.4}", zmax),
        ]);
    }
    (header, rows)
}

/// Minimal SVG line/point plot of a 1-d field estimate against its oracle.
/// Two-dimensional grids are flattened to bin index on the x-axis.
pub fn estimate_svg(est: &FieldEstimate, oracle: Option<&dyn Fn(&[f64; 3]) -> [f64; 2]>) -> String {
    let w = 720.0;
    let h = 420.0;
    let margin = 50.0;
    let one_dim = matches!(est.grid.kind, BinKind::Torus1 { .. } | BinKind::Line { .. });
    // gather (x, mean, se, oracle)
    let mut pts = Vec::new();
    for (b, stat) in est.bins.iter().enumerate() {
        if stat.masked() {
            continue;
        }
        let center = est.grid.center(b);
        let x = if one_dim { center[0] } else { b as f64 };
        let o = oracle.map(|f| {
            let quad = est.grid.bin_quadrature(b);
            let mut avg = 0.0;
            for (node, wq) in &quad {
                avg += wq * f(node)[0];
            }
            avg
        });
        pts.push((x, stat.mean[0], stat.stderr[0], o));
    }
    if pts.is_empty() {
        return String::from("<svg xmlns=\"http://www.w3.org/2000/svg\"/>");
    }
    let xmin = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let xmax = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for p in &pts {
        ymin = ymin.min(p.1 - 2.5 * p.2).min(p.3.unwrap_or(p.1));
        ymax = ymax.max(p.1 + 2.5 * p.2).max(p.3.unwrap_or(p.1));
    }
    if ymax <= ymin {
        ymax = ymin + 1.0;
    }
    let sx = |x: f64| margin + (x - xmin) / (xmax - xmin).max(1e-12) * (w - 2.0 * margin);
    let sy = |y: f64| h - margin - (y - ymin) / (ymax - ymin) * (h - 2.0 * margin);
    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\
         <text x=\"{}\" y=\"20\" font-family=\"monospace\" font-size=\"13\">{} ({})</text>",
        margin,
        est.meta.label,
        est.meta.space
    );
    // axes
    let _ = write!(
        svg,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\
         <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        margin,
        h - margin,
        w - margin,
        h - margin,
        margin,
        margin,
        margin,
        h - margin
    );
    // oracle polyline
    if pts.iter().any(|p| p.3.is_some()) {
        let mut path = String::from("M");
        for p in &pts {
            if let Some(o) = p.3 {
                let _ = write!(path, " {:.1},{:.1}", sx(p.0), sy(o));
            }
        }
        let _ = write!(svg, "<path d=\"{path}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>");
    }
    // MC points with 2-sigma bars
    for p in &pts {
        let (x, y0, y1) = (sx(p.0), sy(p.1 - 2.0 * p.2), sy(p.1 + 2.0 * p.2));
        let _ = write!(
            svg,
            "<line x1=\"{x:.1}\" y1=\"{y0:.1}\" x2=\"{x:.1}\" y2=\"{y1:.1}\" stroke=\"#d62728\" stroke-width=\"1\"/>\
             <circle cx=\"{x:.1}\" cy=\"{:.1}\" r=\"2.2\" fill=\"#d62728\"/>",
            sy(p.1)
        );
    }
    svg.push_str("</svg>");
    svg
}

/// Persist an estimate: CSV plus SVG next to it.
pub fn persist_estimate(
    dir: &Path,
    stem: &str,
    est: &FieldEstimate,
    cmp: Option<&OracleComparison>,
    oracle: Option<&dyn Fn(&[f64; 3]) -> [f64; 2]>,
) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let (header, rows) = estimate_rows(est, cmp);
    let csv_path = dir.join(format!("{stem}.csv"));
    write_csv(&csv_path, &header, rows)?;
    let svg_path = dir.join(format!("{stem}.svg"));
    std::fs::write(&svg_path, estimate_svg(est, oracle))?;
    Ok(vec![
        csv_path.to_string_lossy().into_owned(),
        svg_path.to_string_lossy().into_owned(),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ModelSpace;
    use crate::representation::{condition_on_exit, BinGrid, EstimateMeta};
    use std::sync::Arc;

    #[test]
    fn csv_and_svg_emission() {
        let space = ModelSpace::flat_torus(1).unwrap();
        let grid = Arc::new(BinGrid::for_space(&space, 8).unwrap());
        let payoffs: Vec<_> = (0..800)
            .map(|i| (Some(i % 8), [((i % 8) as f64).sin(), 0.0], false))
            .collect();
        let est = condition_on_exit(payoffs, grid, 1, 1.0, EstimateMeta::default());
        let dir = std::env::temp_dir().join("bgrad_output_test");
        let oracle = |p: &[f64; 3]| [p[0].sin(), 0.0];
        let cmp = crate::representation::compare_to_oracle(&est, oracle);
        let files = persist_estimate(&dir, "demo", &est, Some(&cmp), Some(&oracle)).unwrap();
        assert_eq!(files.len(), 2);
        let csv = std::fs::read_to_string(&files[0]).unwrap();
        let header = csv.lines().next().unwrap();
        assert!(header.starts_with("bin_center_0,bin_center_1,estimate_0"));
        assert_eq!(csv.lines().count(), 9, "8 bins + header");
        let svg = std::fs::read_to_string(&files[1]).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("circle"));
    }
}
