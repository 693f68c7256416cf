//! Typed parameter blocks of the parametric module kinds and their
//! validation.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::geom::{Direction3, Point2, Point3};

/// Default bubble radius of grid axis markers, mm.
pub const DEFAULT_BUBBLE_RADIUS: f64 = 400.0;
/// Default extension of grid axis lines past the outermost axes, mm.
pub const DEFAULT_AXIS_OVERHANG: f64 = 1000.0;
/// Default size of a node item symbol, mm.
pub const DEFAULT_SYMBOL_SIZE: f64 = 300.0;

/// Nominal diameters accepted by default.
pub const DEFAULT_DN_SERIES: [u32; 14] = [15, 20, 25, 32, 40, 50, 65, 80, 100, 125, 150, 200, 250, 300];

/// Letters never used for lettered grid axes.
pub const DEFAULT_SKIPPED_AXIS_LETTERS: [char; 11] =
    ['Ё', 'З', 'Й', 'О', 'Х', 'Ц', 'Ч', 'Щ', 'Ъ', 'Ы', 'Ь'];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GeneratorKind {
    ConstructionGrid,
    PipeAxonometric,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 2] = [GeneratorKind::ConstructionGrid, GeneratorKind::PipeAxonometric];

    pub fn as_str(self) -> &'static str {
        match self {
            GeneratorKind::ConstructionGrid => "construction_grid",
            GeneratorKind::PipeAxonometric => "pipe_axonometric",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub(crate) fn tag(self) -> u8 {
        self as u8
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.get(tag as usize).copied()
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridParams {
    /// Gaps between consecutive numbered axes, mm.
    pub x_spacings: Vec<f64>,
    /// Gaps between consecutive lettered axes, mm.
    pub y_spacings: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(default = "default_bubble_radius"))]
    pub bubble_radius: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_axis_overhang"))]
    pub axis_overhang: f64,
}

#[cfg(feature = "serde")]
fn default_bubble_radius() -> f64 {
    DEFAULT_BUBBLE_RADIUS
}

#[cfg(feature = "serde")]
fn default_axis_overhang() -> f64 {
    DEFAULT_AXIS_OVERHANG
}

#[cfg(feature = "serde")]
fn default_symbol_size() -> f64 {
    DEFAULT_SYMBOL_SIZE
}

impl GridParams {
    pub fn new(x_spacings: Vec<f64>, y_spacings: Vec<f64>) -> Self {
        Self {
            x_spacings,
            y_spacings,
            bubble_radius: DEFAULT_BUBBLE_RADIUS,
            axis_overhang: DEFAULT_AXIS_OVERHANG,
        }
    }

    /// Number of numbered axes.
    pub fn n_x(&self) -> usize {
        self.x_spacings.len() + 1
    }

    /// Number of lettered axes.
    pub fn n_y(&self) -> usize {
        self.y_spacings.len() + 1
    }

    /// Axis positions along one direction: 0, s0, s0+s1, ...
    pub fn axis_positions(spacings: &[f64]) -> Vec<f64> {
        let mut positions = Vec::with_capacity(spacings.len() + 1);
        let mut acc = 0.0;
        positions.push(acc);
        for s in spacings {
            acc += s;
            positions.push(acc);
        }
        positions
    }

    /// Closed-form entity count of the generated grid.
    pub fn entity_count(&self) -> usize {
        3 * (self.n_x() + self.n_y()) + self.x_spacings.len() + self.y_spacings.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PipeSegment {
    pub direction: Direction3,
    /// mm
    pub length: f64,
    pub dn: u32,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub material: Option<String>,
}

impl PipeSegment {
    pub fn new(direction: Direction3, length: f64, dn: u32) -> Self {
        Self {
            direction,
            length,
            dn,
            material: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ItemKind {
    Valve,
    Flange,
    Reducer,
    Instrument,
}

impl ItemKind {
    pub const ALL: [ItemKind; 4] = [ItemKind::Valve, ItemKind::Flange, ItemKind::Reducer, ItemKind::Instrument];

    pub fn as_str(self) -> &'static str {
        match self {
            ItemKind::Valve => "valve",
            ItemKind::Flange => "flange",
            ItemKind::Reducer => "reducer",
            ItemKind::Instrument => "instrument",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Self::ALL.into_iter().find(|k| k.as_str() == lower)
    }

    pub(crate) fn tag(self) -> u8 {
        self as u8
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.get(tag as usize).copied()
    }
}

impl fmt::Display for ItemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A fitting or instrument placed at a route node, carrying its position
/// designation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NodeItem {
    /// Node 0 is the route start, node `k` the end of segment `k - 1`.
    pub node_index: u32,
    pub kind: ItemKind,
    pub tag: String,
    #[cfg_attr(feature = "serde", serde(default = "default_symbol_size"))]
    pub symbol_size: f64,
}

impl NodeItem {
    pub fn new(node_index: u32, kind: ItemKind, tag: impl Into<String>) -> Self {
        Self {
            node_index,
            kind,
            tag: tag.into(),
            symbol_size: DEFAULT_SYMBOL_SIZE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InsertedAxis {
    pub label: String,
    /// Projected position of the axis, in the route's unscaled sheet frame.
    pub anchor: Point2,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PipeRouteParams {
    #[cfg_attr(feature = "serde", serde(default))]
    pub start: Point3,
    pub segments: Vec<PipeSegment>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub items: Vec<NodeItem>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub inserted_axes: Vec<InsertedAxis>,
}

impl PipeRouteParams {
    pub fn new(start: Point3, segments: Vec<PipeSegment>) -> Self {
        Self {
            start,
            segments,
            items: Vec::new(),
            inserted_axes: Vec::new(),
        }
    }

    /// 3D node positions: the start followed by the end of every segment.
    pub fn nodes(&self) -> Vec<Point3> {
        let mut nodes = Vec::with_capacity(self.segments.len() + 1);
        let mut at = self.start;
        nodes.push(at);
        for seg in &self.segments {
            at = at.step(seg.direction, seg.length);
            nodes.push(at);
        }
        nodes
    }

    /// The segment an item at `node_index` attaches to: the following one,
    /// or the preceding one at the terminal node.
    pub fn segment_at_node(&self, node_index: u32) -> Option<&PipeSegment> {
        let idx = node_index as usize;
        if idx < self.segments.len() {
            self.segments.get(idx)
        } else if idx == self.segments.len() {
            self.segments.last()
        } else {
            None
        }
    }

    /// Closed-form entity count of the generated scheme.
    pub fn entity_count(&self) -> usize {
        self.segments.len() + 2 * self.items.len() + 2 * self.inserted_axes.len()
    }
}

/// A parameter block tagged with its generator kind.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", content = "params", rename_all = "snake_case"))]
pub enum ModuleParams {
    ConstructionGrid(GridParams),
    PipeAxonometric(PipeRouteParams),
}

impl ModuleParams {
    pub fn kind(&self) -> GeneratorKind {
        match self {
            ModuleParams::ConstructionGrid(_) => GeneratorKind::ConstructionGrid,
            ModuleParams::PipeAxonometric(_) => GeneratorKind::PipeAxonometric,
        }
    }

    pub fn entity_count(&self) -> usize {
        match self {
            ModuleParams::ConstructionGrid(g) => g.entity_count(),
            ModuleParams::PipeAxonometric(r) => r.entity_count(),
        }
    }

    pub fn as_grid(&self) -> Option<&GridParams> {
        match self {
            ModuleParams::ConstructionGrid(g) => Some(g),
            _ => None,
        }
    }

    pub fn as_route(&self) -> Option<&PipeRouteParams> {
        match self {
            ModuleParams::PipeAxonometric(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_route_mut(&mut self) -> Option<&mut PipeRouteParams> {
        match self {
            ModuleParams::PipeAxonometric(r) => Some(r),
            _ => None,
        }
    }
}

impl From<GridParams> for ModuleParams {
    fn from(p: GridParams) -> Self {
        ModuleParams::ConstructionGrid(p)
    }
}

impl From<PipeRouteParams> for ModuleParams {
    fn from(p: PipeRouteParams) -> Self {
        ModuleParams::PipeAxonometric(p)
    }
}

/// One violated invariant of a parameter block.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Violation {
    /// Path of the offending field, e.g. `x_spacings[1]`.
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: impl Into<String>, message: &str) -> Self {
        Self {
            field: field.into(),
            message: message.to_owned(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Catalog data the generators validate against.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub dn_series: Vec<u32>,
    pub skipped_axis_letters: Vec<char>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            dn_series: DEFAULT_DN_SERIES.to_vec(),
            skipped_axis_letters: DEFAULT_SKIPPED_AXIS_LETTERS.to_vec(),
        }
    }
}

/// Every violated invariant of `params`, empty iff valid. Uses the default
/// DN series.
pub fn validate_params(params: &ModuleParams) -> Vec<Violation> {
    validate_params_with(&GeneratorConfig::default(), params)
}

pub fn validate_params_with(config: &GeneratorConfig, params: &ModuleParams) -> Vec<Violation> {
    let mut out = Vec::new();
    match params {
        ModuleParams::ConstructionGrid(g) => validate_grid(g, &mut out),
        ModuleParams::PipeAxonometric(r) => validate_route(config, r, &mut out),
    }
    out
}

fn validate_grid(g: &GridParams, out: &mut Vec<Violation>) {
    for (name, spacings) in [("x_spacings", &g.x_spacings), ("y_spacings", &g.y_spacings)] {
        for (i, s) in spacings.iter().enumerate() {
            if !(s.is_finite() && *s > 0.0) {
                out.push(Violation::new(format!("{name}[{i}]"), "spacing must be positive"));
            }
        }
    }
    if !(g.bubble_radius.is_finite() && g.bubble_radius > 0.0) {
        out.push(Violation::new("bubble_radius", "bubble radius must be positive"));
    }
    if !(g.axis_overhang.is_finite() && g.axis_overhang >= 0.0) {
        out.push(Violation::new("axis_overhang", "axis overhang must be non-negative"));
    }
}

fn validate_route(config: &GeneratorConfig, r: &PipeRouteParams, out: &mut Vec<Violation>) {
    if !r.start.is_finite() {
        out.push(Violation::new("start", "start must be finite"));
    }
    if r.segments.is_empty() {
        out.push(Violation::new("segments", "route must have at least one segment"));
    }
    for (i, seg) in r.segments.iter().enumerate() {
        if !(seg.length.is_finite() && seg.length > 0.0) {
            out.push(Violation::new(format!("segments[{i}].length"), "segment length must be positive"));
        }
        if !config.dn_series.contains(&seg.dn) {
            out.push(Violation::new(format!("segments[{i}].dn"), "DN not in series"));
        }
        if matches!(&seg.material, Some(m) if m.trim().is_empty()) {
            out.push(Violation::new(format!("segments[{i}].material"), "material must not be blank"));
        }
    }
    for (i, item) in r.items.iter().enumerate() {
        if item.node_index as usize > r.segments.len() {
            out.push(Violation::new(format!("items[{i}].node_index"), "node index out of range"));
        }
        if item.tag.trim().is_empty() {
            out.push(Violation::new(format!("items[{i}].tag"), "tag must not be empty"));
        }
        if !(item.symbol_size.is_finite() && item.symbol_size > 0.0) {
            out.push(Violation::new(format!("items[{i}].symbol_size"), "symbol size must be positive"));
        }
    }
    let mut labels = BTreeSet::new();
    for (i, axis) in r.inserted_axes.iter().enumerate() {
        if axis.label.is_empty() {
            out.push(Violation::new(format!("inserted_axes[{i}].label"), "axis label must not be empty"));
        } else if !labels.insert(axis.label.as_str()) {
            out.push(Violation::new(format!("inserted_axes[{i}].label"), "duplicate inserted axis label"));
        }
        if !axis.anchor.is_finite() {
            out.push(Violation::new(format!("inserted_axes[{i}].anchor"), "axis anchor must be finite"));
        }
    }
}
