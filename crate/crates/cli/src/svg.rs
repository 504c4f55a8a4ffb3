//! Deterministic SVG rendering of a traced curve over its domain, with
//! optional input-point and kept-point layers.
//!
//! Coordinates are emitted with fixed precision so repeated runs produce
//! byte-identical files.

use std::fmt::Write as _;

use singdetect::{Point2, RectDomain};

const CANVAS: f64 = 640.0;
const MARGIN: f64 = 40.0;

pub struct SvgScene<'a> {
    pub domain: RectDomain,
    pub polylines: &'a [Vec<Point2>],
    pub input_points: Option<&'a [Point2]>,
    pub kept_points: Option<&'a [Point2]>,
    /// Single-line annotation embedded as an XML comment, typically the
    /// resolved configuration in JSON form.
    pub comment: Option<String>,
}

pub fn render(scene: &SvgScene) -> String {
    let map = Mapper::new(scene.domain);
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" height="{CANVAS}" viewBox="0 0 {CANVAS} {CANVAS}">"#
    );
    if let Some(comment) = &scene.comment {
        let _ = writeln!(out, "<!-- {} -->", comment.replace("--", "- -"));
    }
    let _ = writeln!(out, r#"<rect width="{CANVAS}" height="{CANVAS}" fill="white"/>"#);

    let (x0, y0) = map.to_canvas(Point2::new(scene.domain.xmin(), scene.domain.ymax()));
    let (x1, y1) = map.to_canvas(Point2::new(scene.domain.xmax(), scene.domain.ymin()));
    let _ = writeln!(
        out,
        r##"<rect x="{x0:.4}" y="{y0:.4}" width="{w:.4}" height="{h:.4}" fill="none" stroke="#444444" stroke-width="1"/>"##,
        w = x1 - x0,
        h = y1 - y0,
    );

    if let Some(points) = scene.input_points {
        let _ = writeln!(out, r##"<g fill="#9aa0a6" fill-opacity="0.7">"##);
        for &p in points {
            let (cx, cy) = map.to_canvas(p);
            let _ = writeln!(out, r#"<circle cx="{cx:.4}" cy="{cy:.4}" r="2"/>"#);
        }
        let _ = writeln!(out, "</g>");
    }

    if let Some(points) = scene.kept_points {
        let _ = writeln!(out, r##"<g fill="#1a73e8">"##);
        for &p in points {
            let (cx, cy) = map.to_canvas(p);
            let _ = writeln!(out, r#"<circle cx="{cx:.4}" cy="{cy:.4}" r="2.5"/>"#);
        }
        let _ = writeln!(out, "</g>");
    }

    let _ = writeln!(
        out,
        r##"<g fill="none" stroke="#d93025" stroke-width="2" stroke-linejoin="round">"##
    );
    for polyline in scene.polylines {
        if polyline.len() < 2 {
            continue;
        }
        let mut attr = String::new();
        for (i, &p) in polyline.iter().enumerate() {
            let (cx, cy) = map.to_canvas(p);
            if i > 0 {
                attr.push(' ');
            }
            let _ = write!(attr, "{cx:.4},{cy:.4}");
        }
        let _ = writeln!(out, r#"<polyline points="{attr}"/>"#);
    }
    let _ = writeln!(out, "</g>");

    out.push_str("</svg>\n");
    out
}

/// Affine map from domain coordinates to canvas pixels, y flipped so the
/// domain's ymax sits at the top of the image.
struct Mapper {
    domain: RectDomain,
}

impl Mapper {
    fn new(domain: RectDomain) -> Self {
        Mapper { domain }
    }

    fn to_canvas(&self, p: Point2) -> (f64, f64) {
        let span = CANVAS - 2.0 * MARGIN;
        let sx = MARGIN + (p.x - self.domain.xmin()) / self.domain.width() * span;
        let sy = CANVAS - MARGIN - (p.y - self.domain.ymin()) / self.domain.height() * span;
        (sx, sy)
    }
}
