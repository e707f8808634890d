use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{AnalysisError, AnalysisSeries, PcaResult, SeriesMethod};

const PANEL_W: f64 = 640.0;
const PANEL_H: f64 = 480.0;
const TITLE_H: f64 = 40.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 30.0;
const MARGIN_T: f64 = 50.0;
const MARGIN_B: f64 = 60.0;
const FONT: &str = "DejaVu Sans, Arial, sans-serif";
const INK: &str = "#222222";
const GRID: &str = "#dddddd";
const LINE: &str = "#1f77b4";
const SCREE: &str = "#ff7f0e";
const SCREE_BARS: usize = 10;

/// `x_<unit>,y_nm` followed by one row per point at full float precision.
pub fn series_csv(series: &AnalysisSeries) -> String {
    let mut out = format!("x_{},y_nm\n", series.x_unit);
    for (x, y) in &series.values {
        let _ = writeln!(out, "{x},{y}");
    }
    out
}

fn pca_csv(pca: &PcaResult) -> String {
    let mut out = String::from("time_ps,pc1_nm,pc2_nm\n");
    for (t, p) in pca.times.iter().zip(&pca.projections) {
        let _ = writeln!(out, "{t},{},{}", p.first().copied().unwrap_or(0.0), p.get(1).copied().unwrap_or(0.0));
    }
    out
}

fn file_stems(series: &[AnalysisSeries]) -> Vec<String> {
    let mut stems: Vec<String> = Vec::new();
    for s in series {
        let base = s.method.file_stem().to_string();
        let stem = if stems.contains(&base) { format!("{base}_{}", s.x_unit) } else { base };
        stems.push(stem);
    }
    stems
}

/// Writes one CSV per series (plus `pca.csv`) and a composite `plots.svg`.
/// Returns the written paths in order.
pub fn emit_plots(
    series: &[AnalysisSeries],
    pca: Option<&PcaResult>,
    title: &str,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, AnalysisError> {
    let write = |name: &str, text: &str| -> Result<PathBuf, AnalysisError> {
        let path = out_dir.join(name);
        std::fs::write(&path, text).map_err(|source| AnalysisError::OutputUnwritable { path: path.clone(), source })?;
        Ok(path)
    };
    std::fs::create_dir_all(out_dir)
        .map_err(|source| AnalysisError::OutputUnwritable { path: out_dir.to_path_buf(), source })?;
    let mut files = Vec::new();
    for (s, stem) in series.iter().zip(file_stems(series)) {
        files.push(write(&format!("{stem}.csv"), &series_csv(s))?);
    }
    if let Some(p) = pca {
        files.push(write("pca.csv", &pca_csv(p))?);
    }
    files.push(write("plots.svg", &render_svg(series, pca, title))?);
    Ok(files)
}

/// Columns and rows for `panels` plots: 1x1, 2x1, 2x2, 3x2, ...
fn grid(panels: usize) -> (usize, usize) {
    let cols = (panels as f64).sqrt().ceil().max(1.0) as usize;
    (cols, panels.div_ceil(cols).max(1))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" { "0.00".into() } else { s }
}

/// Tick positions covering [lo, hi] with a 1-2-5 step.
fn ticks(lo: f64, hi: f64) -> (f64, f64, Vec<f64>) {
    let (mut lo, mut hi) = (lo, hi);
    if !(hi - lo > 1e-12 * hi.abs().max(lo.abs())) {
        let pad = (lo.abs() * 0.1).max(1e-3);
        lo -= pad;
        hi += pad;
    }
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].into_iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let start = (lo / step).floor() * step;
    let end = (hi / step).ceil() * step;
    let count = ((end - start) / step).round() as usize;
    (start, end, (0..=count).map(|i| start + i as f64 * step).collect())
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 { 0 } else { (-step.log10().floor()) as usize };
    let s = format!("{v:.decimals$}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') { s.trim_start_matches('-').to_string() } else { s }
}

struct Area {
    x0: f64,
    y0: f64,
    xr: (f64, f64),
    yr: (f64, f64),
}

impl Area {
    fn px(&self, x: f64) -> f64 {
        self.x0 + MARGIN_L + (x - self.xr.0) / (self.xr.1 - self.xr.0) * (PANEL_W - MARGIN_L - MARGIN_R)
    }

    fn py(&self, y: f64) -> f64 {
        self.y0 + PANEL_H - MARGIN_B - (y - self.yr.0) / (self.yr.1 - self.yr.0) * (PANEL_H - MARGIN_T - MARGIN_B)
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Axes, grid, tick labels and panel captions; returns the data-to-pixel frame.
fn axes(svg: &mut String, x0: f64, y0: f64, xs: (f64, f64), ys: (f64, f64), heading: &str, xl: &str, yl: &str) -> Area {
    let (xa, xb, xt) = ticks(xs.0, xs.1);
    let (ya, yb, yt) = ticks(ys.0, ys.1);
    let f = Area { x0, y0, xr: (xa, xb), yr: (ya, yb) };
    let (left, right) = (f.px(xa), f.px(xb));
    let (top, bottom) = (f.py(yb), f.py(ya));
    let xstep = xt.get(1).map_or(1.0, |t| t - xt[0]);
    let ystep = yt.get(1).map_or(1.0, |t| t - yt[0]);
    for t in &xt {
        let x = num(f.px(*t));
        let _ = writeln!(svg, r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="{GRID}"/>"#, num(top), num(bottom));
        let _ = writeln!(svg, r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#, num(bottom + 18.0), tick_label(*t, xstep));
    }
    for t in &yt {
        let y = num(f.py(*t));
        let _ = writeln!(svg, r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="{GRID}"/>"#, num(left), num(right));
        let _ = writeln!(svg, r#"<text x="{}" y="{y}" text-anchor="end" dominant-baseline="middle">{}</text>"#, num(left - 6.0), tick_label(*t, ystep));
    }
    let _ = writeln!(
        svg,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="{INK}"/>"#,
        num(left),
        num(top),
        num(right - left),
        num(bottom - top)
    );
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle" font-size="16">{}</text>"#, num(x0 + PANEL_W / 2.0), num(y0 + 30.0), escape(heading));
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, num((left + right) / 2.0), num(bottom + 42.0), escape(xl));
    let (yx, yy) = (num(x0 + 20.0), num((top + bottom) / 2.0));
    let _ = writeln!(svg, r#"<text x="{yx}" y="{yy}" text-anchor="middle" transform="rotate(-90 {yx} {yy})">{}</text>"#, escape(yl));
    f
}

fn series_panel(svg: &mut String, x0: f64, y0: f64, s: &AnalysisSeries) {
    let xs = bounds(s.values.iter().map(|v| v.0));
    let ys = bounds(s.values.iter().map(|v| v.1).chain([0.0]));
    let xlabel = match s.x_unit.as_str() {
        "ps" => "Time (ps)".to_string(),
        "atom" => "Atom".to_string(),
        "residue" => "Residue".to_string(),
        other => other.to_string(),
    };
    let ylabel = format!("{} (nm)", s.method.label());
    let heading = match (s.method, s.x_unit.as_str()) {
        (SeriesMethod::Rmsf, "residue") => "RMSF per residue".to_string(),
        (m, _) => m.label().to_string(),
    };
    let f = axes(svg, x0, y0, xs, ys, &heading, &xlabel, &ylabel);
    let points: Vec<String> = s.values.iter().map(|(x, y)| format!("{},{}", num(f.px(*x)), num(f.py(*y)))).collect();
    let _ = writeln!(svg, r#"<polyline fill="none" stroke="{LINE}" stroke-width="1.5" points="{}"/>"#, points.join(" "));
}

fn pca_panel(svg: &mut String, x0: f64, y0: f64, pca: &PcaResult) {
    let pc = |i: usize| pca.projections.iter().map(move |p| p.get(i).copied().unwrap_or(0.0));
    let f = axes(svg, x0, y0, bounds(pc(0)), bounds(pc(1)), "PCA", "PC1 (nm)", "PC2 (nm)");
    for (a, b) in pc(0).zip(pc(1)) {
        let _ = writeln!(svg, r#"<circle cx="{}" cy="{}" r="2.5" fill="{LINE}"/>"#, num(f.px(a)), num(f.py(b)));
    }
    // Scree inset in the top-right corner of the plot area.
    let (w, h) = (150.0, 90.0);
    let (ix, iy) = (x0 + PANEL_W - MARGIN_R - w - 8.0, y0 + MARGIN_T + 8.0);
    let _ = writeln!(svg, r##"<rect x="{}" y="{}" width="{w}" height="{h}" fill="#ffffff" stroke="{INK}"/>"##, num(ix), num(iy));
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle" font-size="10">variance per PC</text>"#, num(ix + w / 2.0), num(iy + 12.0));
    let explained = pca.explained();
    let bars = explained.len().min(SCREE_BARS);
    let bw = (w - 20.0) / SCREE_BARS as f64;
    for (i, frac) in explained.iter().take(bars).enumerate() {
        let bh = frac * (h - 24.0);
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{SCREE}"/>"#,
            num(ix + 10.0 + i as f64 * bw),
            num(iy + h - 6.0 - bh),
            num(bw * 0.8),
            num(bh)
        );
    }
}

/// One SVG with a panel per series (and one for PCA) on a near-square grid.
pub fn render_svg(series: &[AnalysisSeries], pca: Option<&PcaResult>, title: &str) -> String {
    let panels = series.len() + usize::from(pca.is_some());
    let (cols, rows) = grid(panels);
    let width = cols as f64 * PANEL_W;
    let height = rows as f64 * PANEL_H + TITLE_H;
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="{FONT}" font-size="12" fill="{INK}">"#
    );
    let _ = writeln!(svg, r##"<rect width="{width}" height="{height}" fill="#ffffff"/>"##);
    let _ = writeln!(svg, r#"<text x="{}" y="28" text-anchor="middle" font-size="20">{}</text>"#, num(width / 2.0), escape(title));
    for k in 0..panels {
        let (x0, y0) = ((k % cols) as f64 * PANEL_W, (k / cols) as f64 * PANEL_H + TITLE_H);
        let _ = writeln!(svg, r#"<g class="panel" data-row="{}" data-col="{}">"#, k / cols, k % cols);
        match series.get(k) {
            Some(s) => series_panel(&mut svg, x0, y0, s),
            None => pca_panel(&mut svg, x0, y0, pca.expect("panel count includes PCA")),
        }
        svg.push_str("</g>\n");
    }
    svg.push_str("</svg>\n");
    svg
}
