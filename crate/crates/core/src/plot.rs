//! Standalone SVG rendering of a band report: spikes for the sample
//! autocorrelations and stepped lines for each band.

use crate::bands::BandKind;
use crate::report::BandReport;
use std::fmt::Write as _;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 380.0;
const LEFT: f64 = 56.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 72.0;

fn color(kind: BandKind) -> &'static str {
    match kind {
        BandKind::SigSimultaneous => "#d62728",
        BandKind::SigPointwise => "#1f77b4",
        BandKind::ConfSupt => "#2ca02c",
        BandKind::ConfBonferroni => "#9467bd",
        BandKind::ConfPointwise => "#ff7f0e",
        BandKind::SigDynamicExact => "#8c564b",
        BandKind::SigDynamicNaive => "#e377c2",
    }
}

fn dash(kind: BandKind) -> &'static str {
    if kind.is_significance() {
        "6,3"
    } else {
        "none"
    }
}

/// Half-height of the vertical axis: the largest absolute value shown,
/// rounded up to a tenth and kept within `[0.1, 1]`.
fn y_extent(report: &BandReport) -> f64 {
    let m = report
        .acf
        .rho
        .iter()
        .chain(
            report
                .bands
                .iter()
                .flat_map(|b| b.lower.iter().chain(&b.upper)),
        )
        .fold(0.0f64, |m, v| m.max(v.abs()));
    ((m.min(1.0) * 10.0 - 1e-9).ceil() / 10.0).clamp(0.1, 1.0)
}

fn tick_step(h: usize) -> usize {
    match h {
        0..=12 => 1,
        13..=30 => 5,
        31..=120 => 10,
        _ => 50,
    }
}

/// Renders `report` as SVG text. Values outside the visible range are
/// clipped to its edge. Output depends only on the report.
pub fn render_svg(report: &BandReport) -> String {
    let h = report.acf.rho.len().max(1);
    let ext = y_extent(report);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let x = |lag: f64| LEFT + (lag - 0.5) / h as f64 * pw;
    let y = |v: f64| TOP + (ext - v.clamp(-ext, ext)) / (2.0 * ext) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="#444444"/>"##
    );

    for v in [-ext, -ext / 2.0, 0.0, ext / 2.0, ext] {
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{yy:.2}" x2="{LEFT:.2}" y2="{yy:.2}" stroke="#444444"/><text x="{:.2}" y="{:.2}" text-anchor="end">{v:.2}</text>"##,
            LEFT - 4.0,
            LEFT - 6.0,
            y(v) + 4.0,
            yy = y(v)
        );
    }
    let step = tick_step(h);
    let mut ticks = vec![1];
    ticks.extend((step..=h).step_by(step).filter(|&l| l > 1));
    for lag in ticks {
        let xx = x(lag as f64);
        let yb = TOP + ph;
        let _ = writeln!(
            s,
            r##"<line x1="{xx:.2}" y1="{yb:.2}" x2="{xx:.2}" y2="{:.2}" stroke="#444444"/><text x="{xx:.2}" y="{:.2}" text-anchor="middle">{lag}</text>"##,
            yb + 4.0,
            yb + 16.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">lag</text>"#,
        LEFT + pw / 2.0,
        TOP + ph + 30.0
    );
    let _ = writeln!(
        s,
        r##"<line x1="{LEFT:.2}" y1="{y0:.2}" x2="{:.2}" y2="{y0:.2}" stroke="#888888"/>"##,
        LEFT + pw,
        y0 = y(0.0)
    );

    let _ = writeln!(s, r#"<g id="acf" stroke="black" stroke-width="2">"#);
    for (i, r) in report.acf.rho.iter().enumerate() {
        let xx = x((i + 1) as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{xx:.2}" y1="{:.2}" x2="{xx:.2}" y2="{:.2}"/>"#,
            y(0.0),
            y(*r)
        );
    }
    s.push_str("</g>\n");

    for b in &report.bands {
        let _ = writeln!(
            s,
            r#"<g id="{}" fill="none" stroke="{}" stroke-width="1.5" stroke-dasharray="{}">"#,
            b.kind,
            color(b.kind),
            dash(b.kind)
        );
        for edge in [&b.lower, &b.upper] {
            s.push_str("<polyline points=\"");
            for (i, v) in edge.iter().enumerate() {
                let lag = (i + 1) as f64;
                if i > 0 {
                    s.push(' ');
                }
                let _ = write!(
                    s,
                    "{:.2},{yy:.2} {:.2},{yy:.2}",
                    x(lag - 0.5),
                    x(lag + 0.5),
                    yy = y(*v)
                );
            }
            s.push_str("\"/>\n");
        }
        s.push_str("</g>\n");
    }

    // legend below the axis label
    let ly = HEIGHT - 16.0;
    let mut lx = LEFT;
    let _ = writeln!(
        s,
        r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="2"/><text x="{:.2}" y="{ly:.2}">sample ACF</text>"#,
        ly - 4.0,
        lx + 18.0,
        ly - 4.0,
        lx + 22.0
    );
    lx += 110.0;
    for b in &report.bands {
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="1.5" stroke-dasharray="{}"/><text x="{:.2}" y="{ly:.2}">{}</text>"#,
            ly - 4.0,
            lx + 18.0,
            ly - 4.0,
            color(b.kind),
            dash(b.kind),
            lx + 22.0,
            b.kind
        );
        lx += 140.0;
    }
    s.push_str("</svg>\n");
    s
}
