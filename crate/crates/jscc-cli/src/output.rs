//! CSV/SVG emission with atomic writes and deterministic formatting.

use std::fmt::Write as _;
use std::path::Path;

/// Format a float deterministically for CSV: fixed scientific notation with
/// 12 significant digits, so identical runs are byte-identical.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.12e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Write a file atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp",
            path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
        )),
        None => Path::new(&format!(
            ".{}.tmp",
            path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
        ))
        .to_path_buf(),
    };
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}

/// One row of a distortion-curve table. The header is part of the output
/// contract: `edsgn_over_n_db,distortion,profile_ceiling,accumulated_energy,layers_used`.
#[derive(Debug, Clone, Copy)]
pub struct CurveRow {
    pub edsgn_over_n_db: f64,
    pub distortion: f64,
    pub profile_ceiling: f64,
    pub accumulated_energy: f64,
    pub layers_used: usize,
}

pub const CURVE_HEADER: &str =
    "edsgn_over_n_db,distortion,profile_ceiling,accumulated_energy,layers_used";

pub fn curve_csv(rows: &[CurveRow]) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_num(r.edsgn_over_n_db),
            fmt_num(r.distortion),
            fmt_num(r.profile_ceiling),
            fmt_num(r.accumulated_energy),
            r.layers_used
        );
    }
    out
}

/// Minimal standalone SVG line chart: log-y distortion curves against the
/// dB grid. `series` pairs a label with per-row values aligned to `xs`.
pub fn curve_svg(xs: &[f64], series: &[(&str, Vec<f64>)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const M: f64 = 50.0;
    let (x_lo, x_hi) = bounds(xs);
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for (_, ys) in series {
        for &y in ys {
            if y > 0.0 && y.is_finite() {
                y_lo = y_lo.min(y);
                y_hi = y_hi.max(y);
            }
        }
    }
    if !y_lo.is_finite() || y_lo <= 0.0 {
        y_lo = 1e-12;
        y_hi = 1.0;
    }
    let (ly_lo, ly_hi) = (y_lo.log10(), y_hi.log10().max(y_lo.log10() + 1e-9));
    let sx = |x: f64| M + (x - x_lo) / (x_hi - x_lo).max(1e-12) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y.log10() - ly_lo) / (ly_hi - ly_lo) * (H - 2.0 * M);
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    );
    let _ = write!(
        svg,
        "<line x1=\"{M}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{M}\" y1=\"{M}\" x2=\"{M}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - M,
        W - M,
        H - M,
        H - M
    );
    let _ = write!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">e_dsgn/N [dB]</text>\n\
         <text x=\"14\" y=\"{}\" font-size=\"12\" transform=\"rotate(-90 14 {})\" \
         text-anchor=\"middle\">distortion (log)</text>\n",
        W / 2.0,
        H - 12.0,
        H / 2.0,
        H / 2.0
    );
    for (si, (label, ys)) in series.iter().enumerate() {
        let color = colors[si % colors.len()];
        let mut points = String::new();
        for (&x, &y) in xs.iter().zip(ys) {
            if y > 0.0 && y.is_finite() {
                let _ = write!(points, "{:.2},{:.2} ", sx(x), sy(y));
            }
        }
        let _ = write!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" \
             points=\"{points}\"/>\n<text x=\"{}\" y=\"{}\" font-size=\"11\" \
             fill=\"{color}\">{label}</text>\n",
            W - M - 150.0,
            M + 16.0 * si as f64
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(xs: &[f64]) -> (f64, f64) {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi.max(lo + 1e-9))
}
