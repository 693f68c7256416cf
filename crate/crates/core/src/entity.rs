use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::geom::{Bounds, Point2};

/// Identifier of an entity or a module. Both are issued from the same
/// per-drawing counter, so an id names at most one element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct ElementId(pub u64);

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case"))]
pub enum EntityKind {
    Line {
        p1: Point2,
        p2: Point2,
    },
    Polyline {
        points: Vec<Point2>,
    },
    Circle {
        center: Point2,
        radius: f64,
    },
    Text {
        anchor: Point2,
        text: String,
        height: f64,
    },
    /// Placement of a scanned sheet. Pixel data lives outside the drawing.
    RasterRef {
        path: String,
        insert: Point2,
        scale: f64,
    },
}

impl EntityKind {
    pub fn line(p1: Point2, p2: Point2) -> Self {
        EntityKind::Line { p1, p2 }
    }

    pub fn circle(center: Point2, radius: f64) -> Self {
        EntityKind::Circle { center, radius }
    }

    pub fn text(anchor: Point2, text: impl Into<String>, height: f64) -> Self {
        EntityKind::Text {
            anchor,
            text: text.into(),
            height,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EntityKind::Line { .. } => "line",
            EntityKind::Polyline { .. } => "polyline",
            EntityKind::Circle { .. } => "circle",
            EntityKind::Text { .. } => "text",
            EntityKind::RasterRef { .. } => "raster_ref",
        }
    }

    /// Checks the geometric invariants of the kind.
    pub fn validate(&self) -> Result<(), &'static str> {
        match self {
            EntityKind::Line { p1, p2 } => {
                if !(p1.is_finite() && p2.is_finite()) {
                    return Err("non-finite coordinate");
                }
            }
            EntityKind::Polyline { points } => {
                if points.len() < 2 {
                    return Err("polyline needs at least 2 points");
                }
                if !points.iter().all(|p| p.is_finite()) {
                    return Err("non-finite coordinate");
                }
            }
            EntityKind::Circle { center, radius } => {
                if !center.is_finite() || !radius.is_finite() {
                    return Err("non-finite coordinate");
                }
                if *radius <= 0.0 {
                    return Err("radius must be positive");
                }
            }
            EntityKind::Text { anchor, height, .. } => {
                if !anchor.is_finite() || !height.is_finite() {
                    return Err("non-finite coordinate");
                }
                if *height <= 0.0 {
                    return Err("text height must be positive");
                }
            }
            EntityKind::RasterRef {
                path,
                insert,
                scale,
            } => {
                if path.is_empty() {
                    return Err("raster path must not be empty");
                }
                if !insert.is_finite() || !scale.is_finite() {
                    return Err("non-finite coordinate");
                }
                if *scale <= 0.0 {
                    return Err("raster scale must be positive");
                }
            }
        }
        Ok(())
    }

    pub fn translate(&mut self, dx: f64, dy: f64) {
        match self {
            EntityKind::Line { p1, p2 } => {
                *p1 = p1.translate(dx, dy);
                *p2 = p2.translate(dx, dy);
            }
            EntityKind::Polyline { points } => {
                for p in points {
                    *p = p.translate(dx, dy);
                }
            }
            EntityKind::Circle { center, .. } => *center = center.translate(dx, dy),
            EntityKind::Text { anchor, .. } => *anchor = anchor.translate(dx, dy),
            EntityKind::RasterRef { insert, .. } => *insert = insert.translate(dx, dy),
        }
    }

    /// Vector extent. Text contributes its anchor only (no font metrics),
    /// a raster reference its insert point only.
    pub fn bounds(&self) -> Bounds {
        match self {
            EntityKind::Line { p1, p2 } => {
                let mut b = Bounds::of_point(*p1);
                b.include(*p2);
                b
            }
            EntityKind::Polyline { points } => {
                let mut b = Bounds::of_point(points[0]);
                for p in &points[1..] {
                    b.include(*p);
                }
                b
            }
            EntityKind::Circle { center, radius } => Bounds {
                min: center.translate(-radius, -radius),
                max: center.translate(*radius, *radius),
            },
            EntityKind::Text { anchor, .. } => Bounds::of_point(*anchor),
            EntityKind::RasterRef { insert, .. } => Bounds::of_point(*insert),
        }
    }

    /// Endpoints and midpoints of segments, circle centers, text anchors,
    /// raster insert points. Unsorted, may contain duplicates.
    pub fn snap_candidates(&self, out: &mut Vec<Point2>) {
        match self {
            EntityKind::Line { p1, p2 } => {
                out.extend([*p1, p1.midpoint(*p2), *p2]);
            }
            EntityKind::Polyline { points } => {
                out.extend(points.iter().copied());
                out.extend(points.windows(2).map(|w| w[0].midpoint(w[1])));
            }
            EntityKind::Circle { center, .. } => out.push(*center),
            EntityKind::Text { anchor, .. } => out.push(*anchor),
            EntityKind::RasterRef { insert, .. } => out.push(*insert),
        }
    }

    /// Every coordinate-carrying point, in a fixed order.
    pub fn vertices(&self) -> Vec<Point2> {
        match self {
            EntityKind::Line { p1, p2 } => alloc::vec![*p1, *p2],
            EntityKind::Polyline { points } => points.clone(),
            EntityKind::Circle { center, .. } => alloc::vec![*center],
            EntityKind::Text { anchor, .. } => alloc::vec![*anchor],
            EntityKind::RasterRef { insert, .. } => alloc::vec![*insert],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Entity {
    pub id: ElementId,
    pub layer: String,
    pub kind: EntityKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Layer {
    pub name: String,
    pub visible: bool,
}

/// Sorts points lexicographically by `(x, y)` and removes exact duplicates.
pub fn sort_dedup_points(points: &mut Vec<Point2>) {
    points.sort_by(Point2::total_cmp);
    points.dedup_by(|a, b| a.total_cmp(b).is_eq());
}
