//! SVG tilings, arctic-curve overlays and PPM heatmaps.
//!
//! Tilings are drawn in the regular frame obtained from lattice coordinates
//! by the affine map
//!
//! ```text
//! [X]   [sqrt(3)/2  0] [x]
//! [Y] = [  -1/2     1] [y]
//! ```
//!
//! which sends the three lattice directions `(1,0)`, `(0,1)`, `(1,1)` to unit
//! vectors at 120 degrees, so every lozenge becomes a rhombus with side 1.
//! The screen y axis points down, so `Y` is flipped on output.

use std::fmt::Write;

use hexaperiod_core::asymptotics::{BoundaryKind, BoundaryPoint};
use hexaperiod_core::model::{classify_lozenge, height_field, hexagon_cells, lozenge_counts};
use hexaperiod_core::{LozengeType, Result, TilingState};

use crate::num::sig6;

const SQ3_2: f64 = 0.866_025_403_784_438_6;

#[derive(Debug, Clone, PartialEq)]
pub struct RenderStyle {
    /// Fill colours for R, U, D.
    pub colors: [[u8; 3]; 3],
    pub stroke: [u8; 3],
    /// Stroke width in lattice units.
    pub stroke_width: f64,
    /// Pixels per lattice unit.
    pub scale: f64,
}

impl Default for RenderStyle {
    fn default() -> Self {
        RenderStyle {
            colors: [[214, 39, 40], [44, 160, 44], [255, 215, 0]],
            stroke: [0, 0, 0],
            stroke_width: 0.04,
            scale: 20.0,
        }
    }
}

impl RenderStyle {
    pub fn validate(&self) -> std::result::Result<(), String> {
        let c = &self.colors;
        if c[0] == c[1] || c[1] == c[2] || c[0] == c[2] {
            return Err("lozenge colours must be distinct".into());
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(format!("scale must be positive, got {}", self.scale));
        }
        if !(self.stroke_width >= 0.0 && self.stroke_width.is_finite()) {
            return Err(format!("stroke width must be non-negative, got {}", self.stroke_width));
        }
        Ok(())
    }

    pub fn color(&self, t: LozengeType) -> [u8; 3] {
        self.colors[t.index()]
    }
}

pub fn hex_color(c: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Lattice corners of the lozenge at cell `(x, y)`, counter-clockwise.
/// R is crossed by an up step, U by a flat step, D by no path.
pub fn lozenge_corners(t: LozengeType, x: f64, y: f64) -> [(f64, f64); 4] {
    match t {
        LozengeType::R => [(x, y), (x + 1.0, y + 1.0), (x + 1.0, y + 2.0), (x, y + 1.0)],
        LozengeType::U => [(x, y), (x + 1.0, y), (x + 1.0, y + 1.0), (x, y + 1.0)],
        LozengeType::D => [(x - 1.0, y), (x, y), (x + 1.0, y + 1.0), (x, y + 1.0)],
    }
}

/// The regularising map, before the screen flip.
pub fn affine(x: f64, y: f64) -> (f64, f64) {
    (SQ3_2 * x, y - 0.5 * x)
}

fn points_attr(pts: &[(f64, f64)]) -> String {
    let mut s = String::new();
    for (i, (x, y)) in pts.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{},{}", sig6(*x), sig6(*y));
    }
    s
}

/// Deterministic SVG 1.1 drawing of a tiling. The lozenge counts are
/// recorded in the `metadata` element.
pub fn tiling_to_svg(t: &TilingState, style: &RenderStyle) -> Result<String> {
    t.validate()?;
    let n = t.n() as f64;
    let h = height_field(t);
    let counts = lozenge_counts(t)?;
    let sc = style.scale;
    let pad = 2.0 * style.stroke_width.max(0.05);
    // regular-frame bounds of the hexagon: X in [0, sqrt3 n], Y in [-n/2, 3n/2]
    let (w, ht) = (2.0 * SQ3_2 * n + 2.0 * pad, 2.0 * n + 2.0 * pad);
    let top = 1.5 * n + pad;
    let screen = |x: f64, y: f64| {
        let (u, v) = affine(x, y);
        ((u + pad) * sc, (top - v) * sc)
    };

    let mut groups: [Vec<String>; 3] = Default::default();
    for (x, y) in hexagon_cells(t.n()) {
        let ty = classify_lozenge(&h, x, y)?;
        let pts: Vec<(f64, f64)> = lozenge_corners(ty, x as f64, y as f64)
            .iter()
            .map(|&(a, b)| screen(a, b))
            .collect();
        groups[ty.index()].push(format!("<polygon points=\"{}\"/>", points_attr(&pts)));
    }

    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" xmlns:hp=\"urn:hexaperiod\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        sig6(w * sc),
        sig6(ht * sc),
        sig6(w * sc),
        sig6(ht * sc)
    );
    let _ = writeln!(
        s,
        "<metadata><hp:lozenges n=\"{}\" R=\"{}\" U=\"{}\" D=\"{}\"/></metadata>",
        t.n(),
        counts[0],
        counts[1],
        counts[2]
    );
    for ty in LozengeType::ALL {
        let _ = writeln!(
            s,
            "<g id=\"{:?}\" fill=\"{}\" stroke=\"{}\" stroke-width=\"{}\" stroke-linejoin=\"round\">",
            ty,
            hex_color(style.color(ty)),
            hex_color(style.stroke),
            sig6(style.stroke_width * sc)
        );
        for p in &groups[ty.index()] {
            s.push_str(p);
            s.push('\n');
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Reads back the counts written by [`tiling_to_svg`].
pub fn svg_lozenge_counts(svg: &str) -> Option<[usize; 3]> {
    let tag = &svg[svg.find("<hp:lozenges")?..];
    let tag = &tag[..tag.find("/>")?];
    let attr = |name: &str| -> Option<usize> {
        let key = format!(" {name}=\"");
        let i = tag.find(&key)? + key.len();
        tag[i..].split('"').next()?.parse().ok()
    };
    Some([attr("R")?, attr("U")?, attr("D")?])
}

/// A `g x g` scalar field over `[-1, 1]^2` in `(xi, eta)`, row-major with
/// row 0 at the top (`eta` near 1). `NaN` marks points outside the hexagon.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub g: usize,
    pub values: Vec<f64>,
}

impl Field {
    /// Centre of pixel `(row, col)`.
    pub fn point(g: usize, row: usize, col: usize) -> (f64, f64) {
        let h = 2.0 / g as f64;
        (-1.0 + (col as f64 + 0.5) * h, 1.0 - (row as f64 + 0.5) * h)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.g + col]
    }
}

/// Colour of masked pixels.
pub const MASK_COLOR: [u8; 3] = [255, 255, 255];

/// Fixed ramp: piecewise linear through five viridis samples, dark blue-violet
/// at 0 to bright yellow at 1.
const RAMP: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

/// Ramp colour of a value in `[0, 1]`; `NaN` gives [`MASK_COLOR`].
pub fn ramp(v: f64) -> [u8; 3] {
    if v.is_nan() {
        return MASK_COLOR;
    }
    let t = v.clamp(0.0, 1.0) * 4.0;
    let i = (t.floor() as usize).min(3);
    let f = t - i as f64;
    let mut c = [0u8; 3];
    for k in 0..3 {
        c[k] = (RAMP[i][k] + f * (RAMP[i + 1][k] - RAMP[i][k])).round() as u8;
    }
    c
}

/// Binary PPM (P6) of a field. Values outside `[0, 1]` are clamped; the
/// number of clamped entries is returned alongside the bytes.
pub fn heatmap_ppm(field: &Field) -> (Vec<u8>, usize) {
    let g = field.g;
    let mut out = format!("P6\n{g} {g}\n255\n").into_bytes();
    let mut clamped = 0;
    for &v in &field.values {
        if !v.is_nan() && !(0.0..=1.0).contains(&v) {
            clamped += 1;
        }
        out.extend_from_slice(&ramp(v));
    }
    (out, clamped)
}

/// CSV with header `xi,eta,value`, one row per pixel, row-major.
pub fn heatmap_csv(field: &Field) -> String {
    let mut s = String::from("xi,eta,value\n");
    for r in 0..field.g {
        for c in 0..field.g {
            let (xi, eta) = Field::point(field.g, r, c);
            let _ = writeln!(s, "{},{},{}", sig6(xi), sig6(eta), sig6(field.get(r, c)));
        }
    }
    s
}

/// CSV with header `s,branch,xi,eta`; the tangency point reached as
/// `s -> -inf` is written with `s = -inf`.
pub fn arctic_csv(points: &[BoundaryPoint]) -> String {
    let mut s = String::from("s,branch,xi,eta\n");
    for p in points {
        let _ = writeln!(s, "{},{},{},{}", sig6(p.s), p.branch, sig6(p.xi), sig6(p.eta));
    }
    s
}

/// Arctic curve over the hexagon `|xi|, |eta|, |xi - eta| <= 1`, drawn in
/// `(xi, eta)` coordinates (the frame of [`Field`]) on a `size`-pixel square.
/// Tangency points get filled markers, cusps open ones. An optional field is
/// drawn underneath, with runs of equal colour merged per row.
pub fn arctic_overlay_svg(alpha: f64, boundary: &[BoundaryPoint], size: f64, underlay: Option<&Field>) -> String {
    let to = |xi: f64, eta: f64| ((xi + 1.0) * 0.5 * size, (1.0 - eta) * 0.5 * size);
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" xmlns:hp=\"urn:hexaperiod\" version=\"1.1\" width=\"{0}\" height=\"{0}\" viewBox=\"0 0 {0} {0}\">",
        sig6(size)
    );
    let tangencies = boundary.iter().filter(|p| p.kind == BoundaryKind::Tangency).count();
    let cusps = boundary.iter().filter(|p| p.kind == BoundaryKind::Cusp).count();
    let _ = writeln!(
        s,
        "<metadata><hp:arctic alpha=\"{}\" points=\"{}\" tangencies=\"{}\" cusps=\"{}\"/></metadata>",
        sig6(alpha),
        boundary.len(),
        tangencies,
        cusps
    );
    if let Some(f) = underlay {
        let px = size / f.g as f64;
        s.push_str("<g id=\"underlay\" shape-rendering=\"crispEdges\">\n");
        for r in 0..f.g {
            let mut c0 = 0;
            while c0 < f.g {
                let col = ramp(f.get(r, c0));
                let mut c1 = c0 + 1;
                while c1 < f.g && ramp(f.get(r, c1)) == col {
                    c1 += 1;
                }
                let _ = writeln!(
                    s,
                    "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>",
                    sig6(c0 as f64 * px),
                    sig6(r as f64 * px),
                    sig6((c1 - c0) as f64 * px),
                    sig6(px),
                    hex_color(col)
                );
                c0 = c1;
            }
        }
        s.push_str("</g>\n");
    }
    let hex: Vec<(f64, f64)> = [(1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (-1.0, 0.0), (-1.0, -1.0), (0.0, -1.0)]
        .iter()
        .map(|&(a, b)| to(a, b))
        .collect();
    let lw = size / 400.0;
    let _ = writeln!(
        s,
        "<polygon id=\"hexagon\" points=\"{}\" fill=\"none\" stroke=\"#000000\" stroke-width=\"{}\"/>",
        points_attr(&hex),
        sig6(lw)
    );
    let mut d = String::new();
    for (i, p) in boundary.iter().enumerate() {
        let (x, y) = to(p.xi, p.eta);
        let _ = write!(d, "{}{},{} ", if i == 0 { "M" } else { "L" }, sig6(x), sig6(y));
    }
    d.push('Z');
    let _ = writeln!(
        s,
        "<path id=\"arctic\" d=\"{d}\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"{}\"/>",
        sig6(1.5 * lw)
    );
    s.push_str("<g id=\"tangency\" fill=\"#1f77b4\">\n");
    for p in boundary.iter().filter(|p| p.kind == BoundaryKind::Tangency) {
        let (x, y) = to(p.xi, p.eta);
        let _ = writeln!(s, "<circle cx=\"{}\" cy=\"{}\" r=\"{}\"/>", sig6(x), sig6(y), sig6(3.0 * lw));
    }
    s.push_str("</g>\n<g id=\"cusp\" fill=\"none\" stroke=\"#1f77b4\">\n");
    for p in boundary.iter().filter(|p| p.kind == BoundaryKind::Cusp) {
        let (x, y) = to(p.xi, p.eta);
        let _ = writeln!(s, "<circle cx=\"{}\" cy=\"{}\" r=\"{}\"/>", sig6(x), sig6(y), sig6(3.0 * lw));
    }
    s.push_str("</g>\n</svg>\n");
    s
}
