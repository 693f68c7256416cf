//! Deterministic SVG output.
//!
//! Model millimeters map 1:1 to user units; the y axis is flipped so that
//! model "up" is screen "up". Entities are written in id order, one element
//! each, except raster references which become a placeholder rectangle plus
//! a label.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::drawing::Drawing;
use crate::entity::EntityKind;
use crate::fmt_num;
use crate::geom::Point2;
use crate::params::{ModuleParams, Violation};

/// Side of the placeholder square drawn for a raster reference at scale 1, mm.
pub const RASTER_PLACEHOLDER_SIZE: f64 = 100.0;
pub const FONT_FAMILY: &str = "GOST type A";

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOptions {
    pub stroke_width: f64,
    pub margin: f64,
    pub background: String,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            stroke_width: 1.0,
            margin: 50.0,
            background: String::from("white"),
        }
    }
}

const EMPTY_DOCUMENT: &str = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"0 0 0 0\" width=\"0mm\" height=\"0mm\"/>\n";

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

// screen coordinates: y flipped
fn sx(p: Point2) -> String {
    fmt_num(p.x)
}

fn sy(p: Point2) -> String {
    fmt_num(-p.y)
}

pub fn render_drawing(drawing: &Drawing, options: &RenderOptions) -> Vec<u8> {
    let Some(bounds) = drawing.bounds() else {
        return EMPTY_DOCUMENT.as_bytes().to_vec();
    };
    let m = options.margin;
    let width = bounds.width() + 2.0 * m;
    let height = bounds.height() + 2.0 * m;

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"{} {} {} {}\" width=\"{}mm\" height=\"{}mm\" style=\"background:{}\">",
        fmt_num(bounds.min.x - m),
        fmt_num(-bounds.max.y - m),
        fmt_num(width),
        fmt_num(height),
        fmt_num(width),
        fmt_num(height),
        escape(&options.background),
    );
    let _ = writeln!(
        out,
        "<g fill=\"none\" stroke=\"black\" stroke-width=\"{}\" font-family=\"{}\">",
        fmt_num(options.stroke_width),
        FONT_FAMILY
    );

    for e in drawing.entities() {
        let hidden = match drawing.layer(&e.layer) {
            Some(l) if !l.visible => " visibility=\"hidden\"",
            _ => "",
        };
        let id = e.id;
        match &e.kind {
            EntityKind::Line { p1, p2 } => {
                let _ = writeln!(
                    out,
                    "<line id=\"e{id}\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"{hidden}/>",
                    sx(*p1),
                    sy(*p1),
                    sx(*p2),
                    sy(*p2)
                );
            }
            EntityKind::Polyline { points } => {
                let mut pts = String::new();
                for (i, p) in points.iter().enumerate() {
                    if i > 0 {
                        pts.push(' ');
                    }
                    let _ = write!(pts, "{},{}", sx(*p), sy(*p));
                }
                let _ = writeln!(out, "<polyline id=\"e{id}\" points=\"{pts}\"{hidden}/>");
            }
            EntityKind::Circle { center, radius } => {
                let _ = writeln!(
                    out,
                    "<circle id=\"e{id}\" cx=\"{}\" cy=\"{}\" r=\"{}\"{hidden}/>",
                    sx(*center),
                    sy(*center),
                    fmt_num(*radius)
                );
            }
            EntityKind::Text { anchor, text, height } => {
                let _ = writeln!(
                    out,
                    "<text id=\"e{id}\" x=\"{}\" y=\"{}\" font-size=\"{}\" fill=\"black\" stroke=\"none\" text-anchor=\"middle\" dominant-baseline=\"central\"{hidden}>{}</text>",
                    sx(*anchor),
                    sy(*anchor),
                    fmt_num(*height),
                    escape(text)
                );
            }
            EntityKind::RasterRef { path, insert, scale } => {
                let side = RASTER_PLACEHOLDER_SIZE * scale;
                let top_left = Point2::new(insert.x, insert.y + side);
                let _ = writeln!(
                    out,
                    "<rect id=\"e{id}\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" stroke-dasharray=\"4 2\"{hidden}/>",
                    sx(top_left),
                    sy(top_left),
                    fmt_num(side),
                    fmt_num(side)
                );
                let label_at = Point2::new(insert.x + side / 2.0, insert.y + side / 2.0);
                let _ = writeln!(
                    out,
                    "<text x=\"{}\" y=\"{}\" font-size=\"{}\" fill=\"gray\" stroke=\"none\" text-anchor=\"middle\"{hidden}>{}</text>",
                    sx(label_at),
                    sy(label_at),
                    fmt_num(side / 10.0),
                    escape(path)
                );
            }
        }
    }
    out.push_str("</g>\n</svg>\n");
    out.into_bytes()
}

/// Renders a module regenerated at origin (0, 0), scale 1, on a scratch
/// drawing.
pub fn render_preview(params: &ModuleParams, options: &RenderOptions) -> Result<Vec<u8>, Vec<Violation>> {
    let mut scratch = Drawing::unchecked("-");
    scratch
        .add_module(params.clone(), Point2::ORIGIN, 1.0)
        .map_err(|e| match e {
            crate::DrawingError::InvalidParams(v) => v,
            other => alloc::vec![Violation {
                field: String::new(),
                message: alloc::format!("{other}"),
            }],
        })?;
    Ok(render_drawing(&scratch, options))
}
