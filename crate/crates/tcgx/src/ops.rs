//! Operations and output shapes shared by the CLI and the service, so both
//! interfaces produce identical bytes and JSON for the same drawing.

use serde::Serialize;
use tcgx_core::params::{GeneratorKind, ItemKind, PipeSegment};
use tcgx_core::signature::{SignatureBlock, SignatureStatus};
use tcgx_core::spec::{check_duplicate_tags, format_spec_table, generate_spec, SpecFormat, SpecTable, TagConflict};
use tcgx_core::{Direction3, Drawing, ElementId, Layer, NodeItem, Point2, Point3, Timestamp};

use crate::error::{Error, Result};

fn usage(msg: String) -> Error {
    Error::Usage(msg)
}

fn number(s: &str, what: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| usage(format!("{what}: {s:?} is not a number")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(usage(format!("{what}: {s:?} is not finite")))
    }
}

/// `L1,L2,...`; an empty string is an empty list.
pub fn parse_lengths(s: &str) -> Result<Vec<f64>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|p| number(p, "length")).collect()
}

pub fn parse_point2(s: &str) -> Result<Point2> {
    let v = parse_lengths(s)?;
    match v[..] {
        [x, y] => Ok(Point2::new(x, y)),
        _ => Err(usage(format!("point {s:?}: expected x,y"))),
    }
}

pub fn parse_point3(s: &str) -> Result<Point3> {
    let v = parse_lengths(s)?;
    match v[..] {
        [x, y, z] => Ok(Point3::new(x, y, z)),
        _ => Err(usage(format!("point {s:?}: expected x,y,z"))),
    }
}

/// One `DIR:LEN:DN[:MATERIAL]` segment; the material is the rest of the
/// string and may itself contain `:`.
pub fn parse_segment(s: &str) -> Result<PipeSegment> {
    let mut parts = s.trim().splitn(4, ':');
    let (Some(dir), Some(len), Some(dn)) = (parts.next(), parts.next(), parts.next()) else {
        return Err(usage(format!("segment {s:?}: expected DIR:LEN:DN[:MATERIAL]")));
    };
    let direction = Direction3::parse(dir).ok_or_else(|| usage(format!("segment {s:?}: unknown direction {dir:?}")))?;
    let length = number(len, "segment length")?;
    let dn = dn
        .trim()
        .parse()
        .map_err(|_| usage(format!("segment {s:?}: DN {dn:?} is not an integer")))?;
    Ok(PipeSegment {
        direction,
        length,
        dn,
        material: parts.next().map(str::to_string),
    })
}

/// Comma-separated segment list.
pub fn parse_segments(s: &str) -> Result<Vec<PipeSegment>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(parse_segment).collect()
}

/// `NODE:KIND:TAG[:SIZE]`. A trailing `:number` is read as the symbol size.
pub fn parse_item(s: &str) -> Result<NodeItem> {
    let mut parts = s.splitn(3, ':');
    let (Some(node), Some(kind), Some(rest)) = (parts.next(), parts.next(), parts.next()) else {
        return Err(usage(format!("item {s:?}: expected NODE:KIND:TAG[:SIZE]")));
    };
    let node_index = node
        .trim()
        .parse()
        .map_err(|_| usage(format!("item {s:?}: node {node:?} is not an index")))?;
    let kind = ItemKind::parse(kind.trim()).ok_or_else(|| usage(format!("item {s:?}: unknown kind {kind:?}")))?;
    let (tag, size) = match rest.rsplit_once(':') {
        Some((tag, size)) if size.trim().parse::<f64>().is_ok() => (tag, Some(number(size, "symbol size")?)),
        _ => (rest, None),
    };
    let mut item = NodeItem::new(node_index, kind, tag);
    if let Some(size) = size {
        item.symbol_size = size;
    }
    Ok(item)
}

pub fn parse_kind(s: &str) -> Result<GeneratorKind> {
    GeneratorKind::parse(s).ok_or_else(|| usage(format!("unknown module kind {s:?}")))
}

/// CSV specification bytes; identical for the CLI and the service.
pub fn spec_csv(drawing: &Drawing) -> Vec<u8> {
    format_spec_table(&generate_spec(drawing), SpecFormat::Csv)
}

pub fn spec_text(drawing: &Drawing) -> Vec<u8> {
    format_spec_table(&generate_spec(drawing), SpecFormat::Text)
}

/// Specification with provenance, for JSON output.
pub fn spec_table(drawing: &Drawing, source: &str, at: Timestamp) -> SpecTable {
    SpecTable {
        source: Some(source.to_string()),
        generated_at: Some(at),
        ..generate_spec(drawing)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConflictReport {
    pub conflicts: Vec<ConflictEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConflictEntry {
    pub tag: String,
    pub occurrences: Vec<Occurrence>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Occurrence {
    pub module_id: ElementId,
    pub node_index: u32,
}

impl From<TagConflict> for ConflictEntry {
    fn from(c: TagConflict) -> Self {
        Self {
            tag: c.tag,
            occurrences: c
                .occurrences
                .into_iter()
                .map(|(module_id, node_index)| Occurrence { module_id, node_index })
                .collect(),
        }
    }
}

pub fn conflicts(drawing: &Drawing) -> ConflictReport {
    ConflictReport {
        conflicts: check_duplicate_tags(drawing).into_iter().map(Into::into).collect(),
    }
}

pub fn conflicts_text(report: &ConflictReport) -> String {
    if report.conflicts.is_empty() {
        return "no duplicate tags\n".into();
    }
    let mut out = String::new();
    for c in &report.conflicts {
        out.push_str(&format!("{}: {} occurrences\n", c.tag, c.occurrences.len()));
        for o in &c.occurrences {
            out.push_str(&format!("  module {} node {}\n", o.module_id, o.node_index));
        }
    }
    out
}

/// Verification result as reported by `verify` and `GET .../verify`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    #[serde(flatten)]
    pub status: SignatureStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signed_at: Option<Timestamp>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<String>,
}

impl VerifyReport {
    pub fn new(status: SignatureStatus, block: Option<&SignatureBlock>) -> Self {
        Self {
            status,
            signed_at: block.map(|b| b.signed_at),
            algorithm: block.map(|b| b.algorithm.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModuleSummary {
    pub module_id: ElementId,
    pub kind: GeneratorKind,
    pub origin: Point2,
    pub scale: f64,
    pub entity_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DrawingInfo {
    pub mark: String,
    pub format_version: u32,
    pub next_id: u64,
    pub layers: Vec<Layer>,
    pub entity_count: usize,
    pub modules: Vec<ModuleSummary>,
    pub signature: SignatureStatus,
}

pub fn drawing_info(drawing: &Drawing, status: SignatureStatus) -> DrawingInfo {
    DrawingInfo {
        mark: drawing.mark().to_string(),
        format_version: drawing.format_version(),
        next_id: drawing.next_id(),
        layers: drawing.layers().cloned().collect(),
        entity_count: drawing.entity_count(),
        modules: drawing
            .modules()
            .map(|m| ModuleSummary {
                module_id: m.module_id,
                kind: m.kind(),
                origin: m.origin,
                scale: m.scale,
                entity_count: m.owned_entity_ids.len(),
            })
            .collect(),
        signature: status,
    }
}

pub fn info_text(info: &DrawingInfo) -> String {
    use tcgx_core::fmt_num;
    let mut out = format!(
        "mark: {}\nformat version: {}\nsignature: {}\nlayers: {}\nentities: {}\nmodules: {}\n",
        info.mark,
        info.format_version,
        info.signature,
        info.layers
            .iter()
            .map(|l| if l.visible { l.name.clone() } else { format!("{} (hidden)", l.name) })
            .collect::<Vec<_>>()
            .join(", "),
        info.entity_count,
        info.modules.len(),
    );
    for m in &info.modules {
        out.push_str(&format!(
            "  {} {} origin ({}, {}) scale {} entities {}\n",
            m.module_id,
            m.kind.as_str(),
            fmt_num(m.origin.x),
            fmt_num(m.origin.y),
            fmt_num(m.scale),
            m.entity_count
        ));
    }
    out
}
