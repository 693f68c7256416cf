//! Parametric drawing kernel.
//!
//! A [`Drawing`] holds layers, primitive entities and parametric modules.
//! Each module stores a parameter block together with the entities
//! generated from it, and is regenerated whenever its parameters, origin
//! or scale change. On top of the model the crate provides specification
//! (bill of materials) extraction, duplicate position-tag control, the
//! canonical binary encoding with its keyed-digest signature trailer,
//! work profiles gating the command vocabulary, and SVG rendering.
//!
//! The crate is `no_std` and only needs `alloc`; file and network IO live
//! in the `tcgx` companion crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod codec;
pub mod drawing;
pub mod entity;
pub mod generate;
pub mod geom;
pub mod params;
pub mod profile;
pub mod signature;
pub mod spec;
pub mod svg;

pub use drawing::{Drawing, DrawingError, ModuleElement, DRAWING_MARKS};
pub use entity::{ElementId, Entity, EntityKind, Layer};
pub use generate::{insert_grid_axes, regenerate, Placement};
pub use geom::{project_iso, Bounds, Direction3, Point2, Point3};
pub use params::{
    validate_params, GeneratorConfig, GeneratorKind, GridParams, InsertedAxis, ItemKind, ModuleParams,
    NodeItem, PipeRouteParams, PipeSegment, Violation,
};
pub use signature::{KeyRecord, KeyRing, SignatureBlock, SignatureStatus, Timestamp};

use alloc::string::String;

/// Formats a real for display: integral values without a fractional part,
/// everything else in shortest round-trip form. `-0` prints as `0`.
pub fn fmt_num(v: f64) -> String {
    use alloc::string::ToString;
    if v == 0.0 {
        return "0".into();
    }
    if v.is_finite() && v.abs() < 1e15 && v == (v as i64) as f64 {
        return (v as i64).to_string();
    }
    v.to_string()
}
