//! Canonical binary encoding.
//!
//! All integers and reals are little-endian; reals are IEEE-754 binary64.
//! Strings are a `u32` byte length followed by UTF-8; lists are a `u32`
//! count followed by the items. Layers are written in name order, entities
//! and modules in id order, so structurally equal drawings encode to the
//! same bytes. Decoding is strict: anything that would not re-encode to
//! identical bytes is rejected.
//!
//! Drawing file:
//!
//! ```text
//! "TCGX" | version u32 | payload_len u64 | payload
//!        [ "SIG1" | key_id str | algorithm str | digest (u32 len + bytes) | signed_at i64 ]
//! ```
//!
//! Prototype file: `"TCPX" | version u32 | payload_len u64 | payload`, the
//! payload carrying one prototype record and no geometry.

use alloc::string::String;
use alloc::vec::Vec;

use crate::drawing::{Drawing, ModuleElement};
use crate::entity::{ElementId, Entity, EntityKind, Layer};
use crate::geom::{Direction3, Point2, Point3};
use crate::params::{
    GeneratorKind, GridParams, InsertedAxis, ItemKind, ModuleParams, NodeItem, PipeRouteParams, PipeSegment,
};
use crate::signature::{SignatureBlock, Timestamp};

pub const DRAWING_MAGIC: [u8; 4] = *b"TCGX";
pub const PROTOTYPE_MAGIC: [u8; 4] = *b"TCPX";
pub const SIGNATURE_TAG: [u8; 4] = *b"SIG1";
pub const CONTAINER_VERSION: u32 = 1;
/// Bytes before the payload: magic, version, payload length.
pub const HEADER_LEN: usize = 16;

const ENTITY_LINE: u8 = 0;
const ENTITY_POLYLINE: u8 = 1;
const ENTITY_CIRCLE: u8 = 2;
const ENTITY_TEXT: u8 = 3;
const ENTITY_RASTER: u8 = 4;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormatError {
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated payload")]
    Truncated,
    #[error("trailing bytes after {0}")]
    TrailingBytes(&'static str),
    #[error("invalid UTF-8 string")]
    InvalidUtf8,
    #[error("unknown {what} tag {tag}")]
    UnknownTag { what: &'static str, tag: u8 },
    #[error("non-canonical encoding: {0}")]
    NonCanonical(&'static str),
    #[error("invalid drawing: {0}")]
    Invalid(String),
}

/// Append-only little-endian writer.
#[derive(Debug, Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn i64(&mut self, v: i64) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn len_prefix(&mut self, n: usize) {
        self.u32(u32::try_from(n).expect("collection too large for the format"));
    }

    pub fn str(&mut self, s: &str) {
        self.len_prefix(s.len());
        self.bytes(s.as_bytes());
    }

    pub fn opt_str(&mut self, s: Option<&str>) {
        match s {
            None => self.u8(0),
            Some(s) => {
                self.u8(1);
                self.str(s);
            }
        }
    }

    pub fn point(&mut self, p: Point2) {
        self.f64(p.x);
        self.f64(p.y);
    }
}

/// Bounds-checked little-endian reader.
#[derive(Debug)]
pub struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    pub fn is_empty(&self) -> bool {
        self.remaining() == 0
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        if self.remaining() < n {
            return Err(FormatError::Truncated);
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], FormatError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    pub fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }

    pub fn bool(&mut self) -> Result<bool, FormatError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(FormatError::NonCanonical("boolean byte must be 0 or 1")),
        }
    }

    pub fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    pub fn i64(&mut self) -> Result<i64, FormatError> {
        Ok(i64::from_le_bytes(self.array()?))
    }

    pub fn f64(&mut self) -> Result<f64, FormatError> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    /// Reads a count and checks that at least `min_item_len` bytes per item
    /// remain, so corrupt counts cannot trigger huge allocations.
    pub fn count(&mut self, min_item_len: usize) -> Result<usize, FormatError> {
        let n = self.u32()? as usize;
        if n.saturating_mul(min_item_len) > self.remaining() {
            return Err(FormatError::Truncated);
        }
        Ok(n)
    }

    pub fn str(&mut self) -> Result<String, FormatError> {
        let n = self.u32()? as usize;
        let raw = self.take(n)?;
        core::str::from_utf8(raw)
            .map(String::from)
            .map_err(|_| FormatError::InvalidUtf8)
    }

    pub fn opt_str(&mut self) -> Result<Option<String>, FormatError> {
        Ok(if self.bool()? { Some(self.str()?) } else { None })
    }

    pub fn point(&mut self) -> Result<Point2, FormatError> {
        Ok(Point2::new(self.f64()?, self.f64()?))
    }
}

fn write_entity_kind(w: &mut Writer, kind: &EntityKind) {
    match kind {
        EntityKind::Line { p1, p2 } => {
            w.u8(ENTITY_LINE);
            w.point(*p1);
            w.point(*p2);
        }
        EntityKind::Polyline { points } => {
            w.u8(ENTITY_POLYLINE);
            w.len_prefix(points.len());
            for p in points {
                w.point(*p);
            }
        }
        EntityKind::Circle { center, radius } => {
            w.u8(ENTITY_CIRCLE);
            w.point(*center);
            w.f64(*radius);
        }
        EntityKind::Text { anchor, text, height } => {
            w.u8(ENTITY_TEXT);
            w.point(*anchor);
            w.str(text);
            w.f64(*height);
        }
        EntityKind::RasterRef { path, insert, scale } => {
            w.u8(ENTITY_RASTER);
            w.str(path);
            w.point(*insert);
            w.f64(*scale);
        }
    }
}

fn read_entity_kind(r: &mut Reader<'_>) -> Result<EntityKind, FormatError> {
    Ok(match r.u8()? {
        ENTITY_LINE => EntityKind::Line {
            p1: r.point()?,
            p2: r.point()?,
        },
        ENTITY_POLYLINE => {
            let n = r.count(16)?;
            let mut points = Vec::with_capacity(n);
            for _ in 0..n {
                points.push(r.point()?);
            }
            EntityKind::Polyline { points }
        }
        ENTITY_CIRCLE => EntityKind::Circle {
            center: r.point()?,
            radius: r.f64()?,
        },
        ENTITY_TEXT => EntityKind::Text {
            anchor: r.point()?,
            text: r.str()?,
            height: r.f64()?,
        },
        ENTITY_RASTER => EntityKind::RasterRef {
            path: r.str()?,
            insert: r.point()?,
            scale: r.f64()?,
        },
        tag => return Err(FormatError::UnknownTag { what: "entity", tag }),
    })
}

/// Writes a kind tag followed by the parameter block.
pub fn write_params(w: &mut Writer, params: &ModuleParams) {
    w.u8(params.kind().tag());
    match params {
        ModuleParams::ConstructionGrid(g) => {
            for spacings in [&g.x_spacings, &g.y_spacings] {
                w.len_prefix(spacings.len());
                for s in spacings {
                    w.f64(*s);
                }
            }
            w.f64(g.bubble_radius);
            w.f64(g.axis_overhang);
        }
        ModuleParams::PipeAxonometric(route) => {
            w.f64(route.start.x);
            w.f64(route.start.y);
            w.f64(route.start.z);
            w.len_prefix(route.segments.len());
            for seg in &route.segments {
                w.u8(seg.direction.tag());
                w.f64(seg.length);
                w.u32(seg.dn);
                w.opt_str(seg.material.as_deref());
            }
            w.len_prefix(route.items.len());
            for item in &route.items {
                w.u32(item.node_index);
                w.u8(item.kind.tag());
                w.str(&item.tag);
                w.f64(item.symbol_size);
            }
            w.len_prefix(route.inserted_axes.len());
            for axis in &route.inserted_axes {
                w.str(&axis.label);
                w.point(axis.anchor);
            }
        }
    }
}

pub fn read_params(r: &mut Reader<'_>) -> Result<ModuleParams, FormatError> {
    let tag = r.u8()?;
    let kind = GeneratorKind::from_tag(tag).ok_or(FormatError::UnknownTag { what: "module kind", tag })?;
    Ok(match kind {
        GeneratorKind::ConstructionGrid => {
            let mut lists = [Vec::new(), Vec::new()];
            for list in &mut lists {
                let n = r.count(8)?;
                for _ in 0..n {
                    list.push(r.f64()?);
                }
            }
            let [x_spacings, y_spacings] = lists;
            ModuleParams::ConstructionGrid(GridParams {
                x_spacings,
                y_spacings,
                bubble_radius: r.f64()?,
                axis_overhang: r.f64()?,
            })
        }
        GeneratorKind::PipeAxonometric => {
            let start = Point3::new(r.f64()?, r.f64()?, r.f64()?);
            let n = r.count(14)?;
            let mut segments = Vec::with_capacity(n);
            for _ in 0..n {
                let tag = r.u8()?;
                let direction =
                    Direction3::from_tag(tag).ok_or(FormatError::UnknownTag { what: "direction", tag })?;
                segments.push(PipeSegment {
                    direction,
                    length: r.f64()?,
                    dn: r.u32()?,
                    material: r.opt_str()?,
                });
            }
            let n = r.count(17)?;
            let mut items = Vec::with_capacity(n);
            for _ in 0..n {
                let node_index = r.u32()?;
                let tag = r.u8()?;
                let kind = ItemKind::from_tag(tag).ok_or(FormatError::UnknownTag { what: "item kind", tag })?;
                items.push(NodeItem {
                    node_index,
                    kind,
                    tag: r.str()?,
                    symbol_size: r.f64()?,
                });
            }
            let n = r.count(20)?;
            let mut inserted_axes = Vec::with_capacity(n);
            for _ in 0..n {
                inserted_axes.push(InsertedAxis {
                    label: r.str()?,
                    anchor: r.point()?,
                });
            }
            ModuleParams::PipeAxonometric(PipeRouteParams {
                start,
                segments,
                items,
                inserted_axes,
            })
        }
    })
}

/// Encodes a standalone parameter block.
pub fn params_bytes(params: &ModuleParams) -> Vec<u8> {
    let mut w = Writer::new();
    write_params(&mut w, params);
    w.into_bytes()
}

pub fn params_from_bytes(bytes: &[u8]) -> Result<ModuleParams, FormatError> {
    let mut r = Reader::new(bytes);
    let params = read_params(&mut r)?;
    if !r.is_empty() {
        return Err(FormatError::TrailingBytes("parameter block"));
    }
    Ok(params)
}

/// Canonical payload bytes of a drawing.
pub fn canonical_bytes(d: &Drawing) -> Vec<u8> {
    let mut w = Writer::new();
    w.u32(d.format_version());
    w.u64(d.next_id());
    w.str(d.mark());

    let layers: Vec<&Layer> = d.layers().collect();
    w.len_prefix(layers.len());
    for layer in layers {
        w.str(&layer.name);
        w.u8(layer.visible as u8);
    }

    w.len_prefix(d.entity_count());
    for e in d.entities() {
        w.u64(e.id.0);
        w.str(&e.layer);
        write_entity_kind(&mut w, &e.kind);
    }

    w.len_prefix(d.module_count());
    for m in d.modules() {
        w.u64(m.module_id.0);
        w.point(m.origin);
        w.f64(m.scale);
        write_params(&mut w, &m.params);
        w.len_prefix(m.owned_entity_ids.len());
        for id in &m.owned_entity_ids {
            w.u64(id.0);
        }
    }
    w.into_bytes()
}

/// Parses canonical payload bytes, checking canonical order and every
/// drawing invariant.
pub fn drawing_from_bytes(bytes: &[u8]) -> Result<Drawing, FormatError> {
    let mut r = Reader::new(bytes);
    let format_version = r.u32()?;
    if format_version != crate::drawing::FORMAT_VERSION {
        return Err(FormatError::UnsupportedVersion(format_version));
    }
    let next_id = r.u64()?;
    let mark = r.str()?;

    let n = r.count(5)?;
    let mut layers: Vec<Layer> = Vec::with_capacity(n);
    for _ in 0..n {
        let name = r.str()?;
        let visible = r.bool()?;
        if let Some(prev) = layers.last() {
            if prev.name >= name {
                return Err(FormatError::NonCanonical("layers must be sorted by name"));
            }
        }
        layers.push(Layer { name, visible });
    }

    let n = r.count(13)?;
    let mut entities: Vec<Entity> = Vec::with_capacity(n);
    for _ in 0..n {
        let id = ElementId(r.u64()?);
        let layer = r.str()?;
        let kind = read_entity_kind(&mut r)?;
        if let Some(prev) = entities.last() {
            if prev.id >= id {
                return Err(FormatError::NonCanonical("entities must be sorted by id"));
            }
        }
        entities.push(Entity { id, layer, kind });
    }

    let n = r.count(37)?;
    let mut modules: Vec<ModuleElement> = Vec::with_capacity(n);
    for _ in 0..n {
        let module_id = ElementId(r.u64()?);
        let origin = r.point()?;
        let scale = r.f64()?;
        let params = read_params(&mut r)?;
        let k = r.count(8)?;
        let mut owned_entity_ids = Vec::with_capacity(k);
        for _ in 0..k {
            owned_entity_ids.push(ElementId(r.u64()?));
        }
        if let Some(prev) = modules.last() {
            if prev.module_id >= module_id {
                return Err(FormatError::NonCanonical("modules must be sorted by id"));
            }
        }
        modules.push(ModuleElement {
            module_id,
            params,
            origin,
            scale,
            owned_entity_ids,
        });
    }
    if !r.is_empty() {
        return Err(FormatError::TrailingBytes("drawing payload"));
    }
    Drawing::from_parts(format_version, next_id, mark, layers, entities, modules).map_err(FormatError::Invalid)
}

fn write_header(w: &mut Writer, magic: [u8; 4], payload: &[u8]) {
    w.bytes(&magic);
    w.u32(CONTAINER_VERSION);
    w.u64(payload.len() as u64);
    w.bytes(payload);
}

fn read_header<'a>(r: &mut Reader<'a>, magic: [u8; 4]) -> Result<&'a [u8], FormatError> {
    if r.take(4).map_err(|_| FormatError::BadMagic)? != magic {
        return Err(FormatError::BadMagic);
    }
    let version = r.u32()?;
    if version != CONTAINER_VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let len = usize::try_from(r.u64()?).map_err(|_| FormatError::Truncated)?;
    r.take(len)
}

/// Frames a payload and optional signature block as a drawing file.
pub fn encode_drawing_file(payload: &[u8], signature: Option<&SignatureBlock>) -> Vec<u8> {
    let mut w = Writer::new();
    write_header(&mut w, DRAWING_MAGIC, payload);
    if let Some(sig) = signature {
        w.bytes(&SIGNATURE_TAG);
        w.str(&sig.key_id);
        w.str(&sig.algorithm);
        w.len_prefix(sig.digest.len());
        w.bytes(&sig.digest);
        w.i64(sig.signed_at.0);
    }
    w.into_bytes()
}

/// A drawing file split into payload bytes and the optional signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DrawingFile<'a> {
    pub payload: &'a [u8],
    pub signature: Option<SignatureBlock>,
}

pub fn decode_drawing_file(bytes: &[u8]) -> Result<DrawingFile<'_>, FormatError> {
    let mut r = Reader::new(bytes);
    let payload = read_header(&mut r, DRAWING_MAGIC)?;
    let signature = if r.is_empty() {
        None
    } else {
        if r.take(4)? != SIGNATURE_TAG {
            return Err(FormatError::UnknownTag {
                what: "trailer",
                tag: bytes[HEADER_LEN + payload.len()],
            });
        }
        let key_id = r.str()?;
        let algorithm = r.str()?;
        let n = r.count(1)?;
        let digest = r.take(n)?.to_vec();
        let signed_at = Timestamp(r.i64()?);
        if !r.is_empty() {
            return Err(FormatError::TrailingBytes("signature block"));
        }
        Some(SignatureBlock {
            key_id,
            algorithm,
            digest,
            signed_at,
        })
    };
    Ok(DrawingFile { payload, signature })
}

/// Parameter set saved to a prototype library, without geometry.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PrototypeRecord {
    pub id: String,
    pub name: String,
    pub params: ModuleParams,
    pub created_at: Timestamp,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub note: Option<String>,
}

impl PrototypeRecord {
    pub fn kind(&self) -> GeneratorKind {
        self.params.kind()
    }
}

pub fn encode_prototype_file(record: &PrototypeRecord) -> Vec<u8> {
    let mut body = Writer::new();
    body.str(&record.id);
    body.str(&record.name);
    write_params(&mut body, &record.params);
    body.i64(record.created_at.0);
    body.opt_str(record.note.as_deref());
    let payload = body.into_bytes();

    let mut w = Writer::new();
    write_header(&mut w, PROTOTYPE_MAGIC, &payload);
    w.into_bytes()
}

pub fn decode_prototype_file(bytes: &[u8]) -> Result<PrototypeRecord, FormatError> {
    let mut outer = Reader::new(bytes);
    let payload = read_header(&mut outer, PROTOTYPE_MAGIC)?;
    if !outer.is_empty() {
        return Err(FormatError::TrailingBytes("prototype file"));
    }
    let mut r = Reader::new(payload);
    let record = PrototypeRecord {
        id: r.str()?,
        name: r.str()?,
        params: read_params(&mut r)?,
        created_at: Timestamp(r.i64()?),
        note: r.opt_str()?,
    };
    if !r.is_empty() {
        return Err(FormatError::TrailingBytes("prototype payload"));
    }
    Ok(record)
}
