//! File emission: CSV tables (the data contract), SVG heatmaps of the
//! coherence distribution, and plain-text analysis reports.
//!
//! Every float in a CSV is printed with 17 significant digits
//! (`{:.16e}`), enough to round-trip an f64 exactly, so identical runs
//! produce byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{
    equilibrium_spreads, ExperimentConfig, ExperimentResults, LocalizationAnalysis, OutputFormat,
};
use crate::cluster::ClusterTrace;
use crate::error::{Error, Result};

/// A float with 17 significant digits, the exact-round-trip format used in
/// all emitted files.
fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

/// p rendered for filenames (shortest round-trip form, e.g. "0.034").
fn fmt_p(p: f64) -> String {
    format!("{p}")
}

/// Writes all present results into the configured output directory and
/// returns the paths written, in emission order.
pub fn emit_outputs(results: &ExperimentResults, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    if results.is_empty() {
        return Err(Error::Config("no results to emit".into()));
    }
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut written = Vec::new();
    if let Some(trace) = &results.growth {
        emit_trace_family(trace, "growth", cfg, &mut written)?;
    }
    for trace in &results.localization {
        let stem = format!("localize_p{}", fmt_p(trace.p));
        emit_trace_family(trace, &stem, cfg, &mut written)?;
    }
    for trace in &results.equilibrium {
        let stem = format!("equilibrium_p{}_n0{}", fmt_p(trace.p), trace.n_prep_cycles);
        emit_trace_family(trace, &stem, cfg, &mut written)?;
    }
    if let Some(analysis) = &results.analysis {
        let path = dir.join("fit_report.txt");
        write_file(&path, &fit_report(analysis), &mut written)?;
    }
    if !results.equilibrium.is_empty() {
        let spreads = equilibrium_spreads(&results.equilibrium, &cfg.plateau_params())?;
        let path = dir.join("equilibrium_report.txt");
        write_file(&path, &equilibrium_report(&spreads), &mut written)?;
    }
    Ok(written)
}

/// Emits the per-trace files enabled by the output formats:
/// `<stem>_trace.csv`, `<stem>_spectra.csv`, and `<stem>_heatmap.svg`.
fn emit_trace_family(
    trace: &ClusterTrace,
    stem: &str,
    cfg: &ExperimentConfig,
    written: &mut Vec<PathBuf>,
) -> Result<()> {
    let dir = &cfg.output.dir;
    if cfg.emits(OutputFormat::Csv) {
        write_file(&dir.join(format!("{stem}_trace.csv")), &trace_csv(trace), written)?;
        if trace.spectra.is_some() {
            write_file(&dir.join(format!("{stem}_spectra.csv")), &spectra_csv(trace), written)?;
        }
    }
    if cfg.emits(OutputFormat::Svg) && trace.spectra.is_some() {
        write_file(&dir.join(format!("{stem}_heatmap.svg")), &heatmap_svg(trace), written)?;
    }
    Ok(())
}

fn write_file(path: &Path, content: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    std::fs::write(path, content).map_err(|e| Error::io(path, e))?;
    written.push(path.to_path_buf());
    Ok(())
}

/// Trace table: one row per sampled cycle count.
fn trace_csv(trace: &ClusterTrace) -> String {
    let mut out = String::from("n_cycles,time_s,p,K\n");
    for pt in &trace.points {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            pt.n_cycles,
            fmt_f(pt.time),
            fmt_f(trace.p),
            fmt_f(pt.k)
        );
    }
    out
}

/// Spectrum table: the full A_M distribution of every sampled point.
fn spectra_csv(trace: &ClusterTrace) -> String {
    let mut out = String::from("M,A_M,n_cycles,p,seed\n");
    if let Some(spectra) = &trace.spectra {
        for (pt, spec) in trace.points.iter().zip(spectra) {
            for (m, a) in spec.orders() {
                let _ = writeln!(
                    out,
                    "{m},{},{},{},{}",
                    fmt_f(a),
                    pt.n_cycles,
                    fmt_f(trace.p),
                    trace.seed
                );
            }
        }
    }
    out
}

/// Amplitude → fill color on a log scale clipped to [1e-6, 1]:
/// a dark-to-bright three-stop gradient.
fn heat_color(a: f64) -> String {
    let clamped = a.clamp(1e-6, 1.0);
    let t = (clamped.log10() + 6.0) / 6.0;
    const STOPS: [(f64, [f64; 3]); 3] = [
        (0.0, [13.0, 8.0, 94.0]),
        (0.5, [204.0, 71.0, 120.0]),
        (1.0, [240.0, 249.0, 33.0]),
    ];
    let (lo, hi) = if t <= 0.5 { (STOPS[0], STOPS[1]) } else { (STOPS[1], STOPS[2]) };
    let f = (t - lo.0) / (hi.0 - lo.0);
    let mut rgb = [0u8; 3];
    for (i, c) in rgb.iter_mut().enumerate() {
        *c = (lo.1[i] + f * (hi.1[i] - lo.1[i])).round() as u8;
    }
    format!("#{:02x}{:02x}{:02x}", rgb[0], rgb[1], rgb[2])
}

/// Renders the coherence distribution A_M(n) as a cell grid: coherence order
/// M on the vertical axis (+N at the top), cycle count n on the horizontal,
/// log-scaled color. A `<desc>` element records, per column, the largest |M|
/// with A_M ≥ 1e-3 — the support width used by regression checks.
fn heatmap_svg(trace: &ClusterTrace) -> String {
    let spectra = trace.spectra.as_ref().expect("caller checked spectra presence");
    let n_spins = spectra.first().map(|s| s.n_spins).unwrap_or(0) as i32;
    let (cell_w, cell_h) = (16usize, 12usize);
    let (ml, mt, mr, mb) = (46usize, 30usize, 14usize, 36usize);
    let cols = trace.points.len();
    let rows = (2 * n_spins + 1) as usize;
    let width = ml + cols * cell_w + mr;
    let height = mt + rows * cell_h + mb;

    let mut support = String::new();
    for (i, spec) in spectra.iter().enumerate() {
        let mut w = 0;
        for (m, a) in spec.orders() {
            if a >= 1e-3 && m.abs() > w {
                w = m.abs();
            }
        }
        if i > 0 {
            support.push(';');
        }
        let _ = write!(support, "{}:{}", trace.points[i].n_cycles, w);
    }

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(
        svg,
        "<desc id=\"support-widths\" data-threshold=\"1e-3\">{support}</desc>"
    );
    let _ = writeln!(svg, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="18" font-family="sans-serif" font-size="12">A_M(n): {} p={} N0={} seed={}</text>"#,
        ml,
        xml_escape(&trace.label),
        fmt_p(trace.p),
        trace.n_prep_cycles,
        trace.seed
    );

    for (col, spec) in spectra.iter().enumerate() {
        let x = ml + col * cell_w;
        for (m, a) in spec.orders() {
            let row = (n_spins - m) as usize;
            let y = mt + row * cell_h;
            let _ = writeln!(
                svg,
                r#"<rect x="{x}" y="{y}" width="{cell_w}" height="{cell_h}" fill="{}"/>"#,
                heat_color(a)
            );
        }
    }

    // y labels: a few coherence orders, always including ±N and 0
    let m_step = (n_spins / 3).max(1);
    let mut m = -n_spins;
    while m <= n_spins {
        let row = (n_spins - m) as usize;
        let y = mt + row * cell_h + cell_h / 2 + 4;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{y}" font-family="sans-serif" font-size="10" text-anchor="end">{m}</text>"#,
            ml - 6
        );
        m += m_step;
    }
    let _ = writeln!(
        svg,
        r#"<text x="12" y="{}" font-family="sans-serif" font-size="11" transform="rotate(-90 12 {})">M</text>"#,
        mt + rows * cell_h / 2,
        mt + rows * cell_h / 2
    );

    // x labels: every few cycle counts
    let n_step = (cols / 8).max(1);
    for (col, pt) in trace.points.iter().enumerate().step_by(n_step) {
        let x = ml + col * cell_w + cell_w / 2;
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{}" font-family="sans-serif" font-size="10" text-anchor="middle">{}</text>"#,
            mt + rows * cell_h + 14,
            pt.n_cycles
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">n (cycles)</text>"#,
        ml + cols * cell_w / 2,
        height - 8
    );
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Plain-text summary of the localization analysis and power-law fit.
fn fit_report(analysis: &LocalizationAnalysis) -> String {
    let mut out = String::new();
    out.push_str("localized cluster size vs perturbation strength\n");
    out.push_str("================================================\n\n");
    out.push_str("per-trace plateau analysis (trailing-window log-log slope):\n");
    for s in &analysis.summaries {
        let _ = writeln!(
            out,
            "  p = {}: localized = {}, K_loc = {}, slope = {}, window starts at index {}",
            fmt_p(s.p),
            s.plateau.localized,
            fmt_f(s.plateau.k_loc),
            fmt_f(s.plateau.slope),
            s.plateau.onset_index
        );
    }
    out.push('\n');
    match &analysis.fit {
        Some(fit) => {
            out.push_str("power-law fit K_loc = A * p^B over localized traces:\n");
            let _ = writeln!(
                out,
                "  exponent B = {} +/- {}",
                fmt_f(fit.exponent),
                fmt_f(fit.exponent_stderr)
            );
            let _ = writeln!(out, "  prefactor A = {}", fmt_f(fit.prefactor));
            let _ = writeln!(out, "  points used: {}", fit.points_used.len());
            for (p, k) in &fit.points_used {
                let _ = writeln!(out, "    p = {}, K_loc = {}", fmt_p(*p), fmt_f(*k));
            }
        }
        None => {
            out.push_str(
                "power-law fit: skipped (fewer than 3 localized traces; \
                 extend n_cycles or the p list)\n",
            );
        }
    }
    out
}

/// Plain-text summary of the equilibrium convergence across N₀.
fn equilibrium_report(spreads: &[super::EquilibriumSpread]) -> String {
    let mut out = String::new();
    out.push_str("dynamic-equilibrium convergence across preparation lengths\n");
    out.push_str("==========================================================\n\n");
    for spread in spreads {
        let _ = writeln!(out, "p = {}:", fmt_p(spread.p));
        for (n0, k_loc, localized) in &spread.outcomes {
            let _ = writeln!(
                out,
                "  N0 = {n0}: K_loc = {}, localized = {localized}",
                fmt_f(*k_loc)
            );
        }
        let _ = writeln!(
            out,
            "  relative spread (max-min)/mean = {}\n",
            fmt_f(spread.relative_spread)
        );
    }
    out
}
