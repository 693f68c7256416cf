//! Generators turning parameter blocks into entity lists.
//!
//! Output is a pure function of `(params, origin, scale)`. Entities are
//! computed in the module's local frame, scaled about the local origin and
//! then translated by `origin`. Emission order is fixed per kind because
//! canonical bytes (and therefore signatures) depend on it:
//!
//! * construction grid: axis lines, bubble circles, axis labels, spacing
//!   dimension texts; numbered axes before lettered ones in each group;
//! * pipe route: one line per segment, then a symbol polyline and a tag
//!   text per item, then a reference line and a label per inserted axis.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::entity::EntityKind;
use crate::geom::{project_iso_unchecked, Direction3, Point2, Point3, COS30, SIN30};
use crate::params::{
    validate_params_with, GeneratorConfig, GridParams, InsertedAxis, ItemKind, ModuleParams,
    PipeRouteParams, Violation,
};

/// Length of the reference line drawn for an inserted grid axis, mm.
pub const AXIS_REFERENCE_LENGTH: f64 = 1000.0;
/// Text height of an inserted grid axis label, mm.
pub const AXIS_REFERENCE_TEXT_HEIGHT: f64 = 250.0;

const RUSSIAN_UPPERCASE: &str = "АБВГДЕЁЖЗИЙКЛМНОПРСТУФХЦЧШЩЪЫЬЭЮЯ";

/// Placement of a module: local coordinates are scaled by `scale` and
/// translated by `origin`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub origin: Point2,
    pub scale: f64,
}

impl Placement {
    pub const IDENTITY: Placement = Placement {
        origin: Point2::ORIGIN,
        scale: 1.0,
    };

    pub fn new(origin: Point2, scale: f64) -> Self {
        Self { origin, scale }
    }

    #[inline]
    fn point(&self, local: Point2) -> Point2 {
        Point2::new(
            self.origin.x + local.x * self.scale,
            self.origin.y + local.y * self.scale,
        )
    }

    #[inline]
    fn length(&self, local: f64) -> f64 {
        local * self.scale
    }

    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !self.origin.is_finite() {
            out.push(Violation {
                field: "origin".into(),
                message: "origin must be finite".into(),
            });
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            out.push(Violation {
                field: "scale".into(),
                message: "scale must be positive".into(),
            });
        }
        out
    }
}

/// Regenerates module geometry with the default generator configuration.
pub fn regenerate(
    params: &ModuleParams,
    origin: Point2,
    scale: f64,
) -> Result<Vec<EntityKind>, Vec<Violation>> {
    regenerate_with(&GeneratorConfig::default(), params, origin, scale)
}

pub fn regenerate_with(
    config: &GeneratorConfig,
    params: &ModuleParams,
    origin: Point2,
    scale: f64,
) -> Result<Vec<EntityKind>, Vec<Violation>> {
    let placement = Placement::new(origin, scale);
    let mut violations = validate_params_with(config, params);
    violations.extend(placement.violations());
    if !violations.is_empty() {
        return Err(violations);
    }
    Ok(match params {
        ModuleParams::ConstructionGrid(g) => generate_grid(config, g, placement),
        ModuleParams::PipeAxonometric(r) => generate_route(r, placement),
    })
}

/// Label of the `index`-th numbered axis: "1", "2", ...
pub fn numbered_axis_label(index: usize) -> String {
    (index + 1).to_string()
}

/// Label of the `index`-th lettered axis. Runs through the alphabet minus
/// the skipped letters, then continues with two-letter labels ("АА", "АБ",
/// ...) in bijective base-N order.
pub fn lettered_axis_label(config: &GeneratorConfig, index: usize) -> String {
    let alphabet: Vec<char> = RUSSIAN_UPPERCASE
        .chars()
        .filter(|c| !config.skipped_axis_letters.contains(c))
        .collect();
    let base = alphabet.len();
    let mut n = index + 1;
    let mut rev = Vec::new();
    while n > 0 {
        n -= 1;
        rev.push(alphabet[n % base]);
        n /= base;
    }
    rev.iter().rev().collect()
}

fn format_length(v: f64) -> String {
    crate::fmt_num(v)
}

fn generate_grid(config: &GeneratorConfig, g: &GridParams, at: Placement) -> Vec<EntityKind> {
    let xs = GridParams::axis_positions(&g.x_spacings);
    let ys = GridParams::axis_positions(&g.y_spacings);
    let width = *xs.last().unwrap_or(&0.0);
    let height = *ys.last().unwrap_or(&0.0);
    let r = g.bubble_radius;
    let o = g.axis_overhang;

    let mut out = Vec::with_capacity(g.entity_count());

    for &x in &xs {
        out.push(EntityKind::line(
            at.point(Point2::new(x, -o)),
            at.point(Point2::new(x, height + o)),
        ));
    }
    for &y in &ys {
        out.push(EntityKind::line(
            at.point(Point2::new(-o, y)),
            at.point(Point2::new(width + o, y)),
        ));
    }

    let x_bubbles: Vec<Point2> = xs.iter().map(|&x| Point2::new(x, height + o + r)).collect();
    let y_bubbles: Vec<Point2> = ys.iter().map(|&y| Point2::new(-o - r, y)).collect();
    for c in x_bubbles.iter().chain(&y_bubbles) {
        out.push(EntityKind::circle(at.point(*c), at.length(r)));
    }

    for (i, c) in x_bubbles.iter().enumerate() {
        out.push(EntityKind::text(at.point(*c), numbered_axis_label(i), at.length(r)));
    }
    for (j, c) in y_bubbles.iter().enumerate() {
        out.push(EntityKind::text(at.point(*c), lettered_axis_label(config, j), at.length(r)));
    }

    let dim_height = at.length(r / 2.0);
    for (i, s) in g.x_spacings.iter().enumerate() {
        let mid = (xs[i] + xs[i + 1]) / 2.0;
        out.push(EntityKind::text(at.point(Point2::new(mid, -o)), format_length(*s), dim_height));
    }
    for (j, s) in g.y_spacings.iter().enumerate() {
        let mid = (ys[j] + ys[j + 1]) / 2.0;
        out.push(EntityKind::text(at.point(Point2::new(width + o, mid)), format_length(*s), dim_height));
    }
    out
}

/// Projected node positions of a route in its unscaled sheet frame.
pub fn projected_nodes(route: &PipeRouteParams) -> Vec<Point2> {
    route.nodes().into_iter().map(project_iso_unchecked).collect()
}

fn generate_route(route: &PipeRouteParams, at: Placement) -> Vec<EntityKind> {
    let nodes = projected_nodes(route);
    let mut out = Vec::with_capacity(route.entity_count());

    for w in nodes.windows(2) {
        out.push(EntityKind::line(at.point(w[0]), at.point(w[1])));
    }

    for item in &route.items {
        let node = nodes[item.node_index as usize];
        let along = route
            .segment_at_node(item.node_index)
            .map(|s| s.direction.projected_unit())
            .unwrap_or(Point2::new(1.0, 0.0));
        let frame = SymbolFrame::new(node, along);
        let points = symbol_outline(item.kind, item.symbol_size)
            .into_iter()
            .map(|(a, b)| at.point(frame.map(a, b)))
            .collect();
        out.push(EntityKind::Polyline { points });
        out.push(EntityKind::text(
            at.point(frame.map(0.0, item.symbol_size)),
            item.tag.clone(),
            at.length(item.symbol_size / 2.0),
        ));
    }

    for axis in &route.inserted_axes {
        let dir = axis_sheet_direction(&axis.label);
        let end = axis.anchor.add(dir.scaled(-AXIS_REFERENCE_LENGTH));
        let label_at = axis
            .anchor
            .add(dir.scaled(-(AXIS_REFERENCE_LENGTH + AXIS_REFERENCE_TEXT_HEIGHT)));
        out.push(EntityKind::line(at.point(axis.anchor), at.point(end)));
        out.push(EntityKind::text(
            at.point(label_at),
            axis.label.clone(),
            at.length(AXIS_REFERENCE_TEXT_HEIGHT),
        ));
    }
    out
}

/// Numbered axes run along plan Y, lettered axes along plan X.
fn axis_sheet_direction(label: &str) -> Point2 {
    if label.starts_with(|c: char| c.is_ascii_digit()) {
        Direction3::PosY.projected_unit()
    } else {
        Direction3::PosX.projected_unit()
    }
}

/// Local frame at a node: `a` runs along the pipe, `b` across it.
struct SymbolFrame {
    node: Point2,
    along: Point2,
    across: Point2,
}

impl SymbolFrame {
    fn new(node: Point2, along: Point2) -> Self {
        Self {
            node,
            along,
            across: Point2::new(-along.y, along.x),
        }
    }

    fn map(&self, a: f64, b: f64) -> Point2 {
        Point2::new(
            self.node.x + a * self.along.x + b * self.across.x,
            self.node.y + a * self.along.y + b * self.across.y,
        )
    }
}

/// Schematic symbol outlines in `(along, across)` coordinates.
fn symbol_outline(kind: ItemKind, size: f64) -> Vec<(f64, f64)> {
    let h = size / 2.0;
    match kind {
        // two triangles meeting at the node
        ItemKind::Valve => alloc::vec![(-h, -h / 2.0), (-h, h / 2.0), (h, -h / 2.0), (h, h / 2.0), (-h, -h / 2.0)],
        // pair of ticks across the pipe
        ItemKind::Flange => alloc::vec![(-h / 4.0, -h), (-h / 4.0, h), (h / 4.0, h), (h / 4.0, -h)],
        ItemKind::Reducer => alloc::vec![(-h, -h / 2.0), (-h, h / 2.0), (h, h / 4.0), (h, -h / 4.0), (-h, -h / 2.0)],
        // closed 12-gon
        ItemKind::Instrument => {
            const C: [(f64, f64); 12] = [
                (1.0, 0.0),
                (COS30, SIN30),
                (SIN30, COS30),
                (0.0, 1.0),
                (-SIN30, COS30),
                (-COS30, SIN30),
                (-1.0, 0.0),
                (-COS30, -SIN30),
                (-SIN30, -COS30),
                (0.0, -1.0),
                (SIN30, -COS30),
                (COS30, -SIN30),
            ];
            C.iter()
                .chain(core::iter::once(&C[0]))
                .map(|&(c, s)| (c * h, s * h))
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a grid module")]
pub struct NotAGridModule;

/// Records the axes of a placed grid in a route. Anchors come from placing
/// the grid in the z = 0 plane at the grid's origin (scaled by the grid's
/// scale) and projecting. Labels already present are skipped; returns the
/// number of axes added.
pub fn insert_grid_axes(
    route: &mut PipeRouteParams,
    grid: &ModuleParams,
    grid_origin: Point2,
    grid_scale: f64,
) -> Result<usize, NotAGridModule> {
    insert_grid_axes_with(&GeneratorConfig::default(), route, grid, grid_origin, grid_scale)
}

pub fn insert_grid_axes_with(
    config: &GeneratorConfig,
    route: &mut PipeRouteParams,
    grid: &ModuleParams,
    grid_origin: Point2,
    grid_scale: f64,
) -> Result<usize, NotAGridModule> {
    let grid = grid.as_grid().ok_or(NotAGridModule)?;
    let xs = GridParams::axis_positions(&grid.x_spacings);
    let ys = GridParams::axis_positions(&grid.y_spacings);

    let numbered = xs.iter().enumerate().map(|(i, &x)| {
        (
            numbered_axis_label(i),
            Point3::new(grid_origin.x + x * grid_scale, grid_origin.y, 0.0),
        )
    });
    let lettered = ys.iter().enumerate().map(|(j, &y)| {
        (
            lettered_axis_label(config, j),
            Point3::new(grid_origin.x, grid_origin.y + y * grid_scale, 0.0),
        )
    });

    let mut added = 0;
    for (label, world) in numbered.chain(lettered) {
        if route.inserted_axes.iter().any(|a| a.label == label) {
            continue;
        }
        route.inserted_axes.push(InsertedAxis {
            label,
            anchor: project_iso_unchecked(world),
        });
        added += 1;
    }
    Ok(added)
}
