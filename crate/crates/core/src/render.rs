//! SVG output: the fiber pattern of `t_{2,r,delta}` on `I^2`, and line charts.

use std::fmt::Write as _;

use thiserror::Error;

use crate::sphere_lab::suites::Chart;
use crate::tree_map::{fiber_volume, FiberDescriptor, FiberKind, TreeMapError, TreeMapSpec};

/// Fiber-length bucket boundaries of the legend.
pub const LEGEND_THRESHOLDS: [f64; 2] = [1.0, 6.0];
const COLORS: [&str; 3] = ["#1f77b4", "#ff7f0e", "#d62728"];
const SKELETON_COLOR: &str = "#2ca02c";
const SIZE: f64 = 720.0;
const PAD: f64 = 40.0;

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("figures are drawn for n = 2 only, got n = {0}")]
    NotPlanar(u32),
    #[error("resolution must be at least 1")]
    BadResolution,
    #[error(transparent)]
    TreeMap(#[from] TreeMapError),
}

fn bucket(length: f64) -> usize {
    LEGEND_THRESHOLDS
        .iter()
        .position(|&t| length <= t)
        .unwrap_or(LEGEND_THRESHOLDS.len())
}

/// Cube-boundary fibers drawn per collar, and skeleton fibers, of every
/// frame of the map.
pub fn figure_fibers(spec: &TreeMapSpec, resolution: usize) -> Vec<FiberDescriptor> {
    let mut out = Vec::new();
    let mut paths: Vec<Vec<u32>> = vec![Vec::new()];
    let branching = 1u32 << spec.n();
    for k in 0..=spec.r() {
        let l = &spec.levels()[k as usize];
        for path in &paths {
            let frame = spec.frame_of(path);
            let leaf = k == spec.r();
            for i in 0..resolution {
                let s = i as f64 / resolution as f64;
                let side = if leaf {
                    frame.scale * (1.0 - s)
                } else {
                    frame.scale * (1.0 - 2.0 * s * l.delta1)
                };
                out.push(FiberDescriptor {
                    kind: FiberKind::CubeBoundary,
                    offset: frame.offset.clone(),
                    scale: frame.scale,
                    level: k,
                    s,
                    side,
                });
            }
            if !leaf {
                out.push(FiberDescriptor {
                    kind: FiberKind::Skeleton,
                    offset: frame.offset.clone(),
                    scale: frame.scale,
                    level: k,
                    s: 1.0,
                    side: frame.scale * l.inner_side,
                });
            }
        }
        paths = paths
            .iter()
            .flat_map(|p| {
                (0..branching).map(move |j| {
                    let mut q = p.clone();
                    q.push(j);
                    q
                })
            })
            .collect();
    }
    out
}

fn px(v: f64) -> f64 {
    PAD + v * (SIZE - 2.0 * PAD)
}

fn py(v: f64) -> f64 {
    SIZE - PAD - v * (SIZE - 2.0 * PAD)
}

fn line(svg: &mut String, a: (f64, f64), b: (f64, f64), color: &str, width: f64) {
    let _ = writeln!(
        svg,
        r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="{color}" stroke-width="{width}"/>"#,
        px(a.0),
        py(a.1),
        px(b.0),
        py(b.1)
    );
}

/// Figure of the fibers of `t_{2,r,delta}`: `resolution` concentric square
/// fibers per collar and the wall skeleton of every subdivided cube, stroked
/// by fiber length.
pub fn render_figure(n: u32, r: u32, delta: f64, resolution: usize) -> Result<String, RenderError> {
    if n != 2 {
        return Err(RenderError::NotPlanar(n));
    }
    if resolution == 0 {
        return Err(RenderError::BadResolution);
    }
    let spec = TreeMapSpec::new(n, r, delta)?;
    let mut svg = String::new();
    let h = SIZE + 90.0;
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SIZE}" height="{h}" viewBox="0 0 {SIZE} {h}">"#
    );
    let _ = writeln!(svg, "<title>fibers of t_{{2,{r},{delta}}}</title>");
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{SIZE}" height="{h}" fill="white"/>"#);
    for d in figure_fibers(&spec, resolution) {
        let len = fiber_volume(&d);
        let color = if d.kind == FiberKind::Skeleton {
            SKELETON_COLOR
        } else {
            COLORS[bucket(len)]
        };
        let c = d.corner();
        let class = match d.kind {
            FiberKind::Skeleton => "skeleton",
            _ => "square",
        };
        match d.kind {
            FiberKind::CubeBoundary => {
                let s = d.side;
                let _ = writeln!(
                    svg,
                    r#"<rect class="{class}" data-level="{}" data-length="{len:.6}" x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="none" stroke="{color}" stroke-width="0.8"/>"#,
                    d.level,
                    px(c[0]),
                    py(c[1] + s),
                    s * (SIZE - 2.0 * PAD),
                    s * (SIZE - 2.0 * PAD)
                );
            }
            FiberKind::Skeleton => {
                let s = d.side;
                let _ = writeln!(
                    svg,
                    r#"<g class="{class}" data-level="{}" data-length="{len:.6}">"#,
                    d.level
                );
                for w in 0..3 {
                    let o = w as f64 * s;
                    line(&mut svg, (c[0] + o, c[1]), (c[0] + o, c[1] + 2.0 * s), color, 1.2);
                    line(&mut svg, (c[0], c[1] + o), (c[0] + 2.0 * s, c[1] + o), color, 1.2);
                }
                let _ = writeln!(svg, "</g>");
            }
            FiberKind::SinglePoint => {}
        }
    }
    let labels = [
        format!("length ≤ {}", LEGEND_THRESHOLDS[0]),
        format!("{} < length ≤ {}", LEGEND_THRESHOLDS[0], LEGEND_THRESHOLDS[1]),
        format!("length > {}", LEGEND_THRESHOLDS[1]),
    ];
    let _ = writeln!(svg, r#"<g class="legend" font-family="sans-serif" font-size="14">"#);
    for (i, (label, color)) in labels.iter().zip(COLORS).enumerate() {
        let x = PAD + i as f64 * 190.0;
        let y = SIZE + 20.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="3"/><text x="{}" y="{}">{label}</text>"#,
            x + 24.0,
            x + 30.0,
            y + 5.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<line x1="{PAD}" y1="{y}" x2="{}" y2="{y}" stroke="{SKELETON_COLOR}" stroke-width="3"/><text x="{}" y="{}">skeleton walls</text>"#,
        PAD + 24.0,
        PAD + 30.0,
        SIZE + 55.0,
        y = SIZE + 50.0
    );
    let _ = writeln!(svg, "</g>\n</svg>");
    Ok(svg)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Line chart with one polyline per series.
pub fn render_chart(chart: &Chart) -> String {
    let (w, h) = (640.0, 420.0);
    let (l, r, t, b) = (70.0, 170.0, 40.0, 50.0);
    let pts = chart.series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y1) = (0.0, 1.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| l + (x - x0) / (x1 - x0) * (w - l - r);
    let sy = |y: f64| h - b - (y - y0) / (y1 - y0) * (h - t - b);
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{l}" y="22" font-size="14">{}</text>"#, escape(&chart.title));
    let _ = writeln!(
        svg,
        r#"<path d="M{l},{t} L{l},{} L{},{}" fill="none" stroke="black"/>"#,
        h - b,
        w - r,
        h - b
    );
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{fx:.3}</text><text x="{}" y="{:.2}" text-anchor="end">{fy:.3}</text>"#,
            sx(fx),
            h - b + 18.0,
            l - 6.0,
            sy(fy) + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
        (l + w - r) / 2.0,
        h - 12.0,
        escape(&chart.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" transform="rotate(-90 16 {:.2})" text-anchor="middle">{}</text>"#,
        (t + h - b) / 2.0,
        (t + h - b) / 2.0,
        escape(&chart.y_label)
    );
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    for (i, s) in chart.series.iter().enumerate() {
        let color = palette[i % palette.len()];
        let coords: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            coords.join(" ")
        );
        for &(x, y) in &s.points {
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, sx(x), sy(y));
        }
        let ly = t + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            w - r + 10.0,
            w - r + 30.0,
            w - r + 34.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    let _ = writeln!(svg, "</svg>");
    svg
}
