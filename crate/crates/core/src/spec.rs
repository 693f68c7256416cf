//! Specification (bill of materials) extraction and position-tag control.
//!
//! Pipe rows aggregate segment lengths per `(dn, material)` over every
//! route in the drawing and are numbered `T1, T2, ...` in descending DN
//! order. Item rows count fittings per `(kind, dn)`, where an item's DN is
//! that of the segment following its node (the preceding one at the route
//! end); the row designation lists the contributing tags.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::drawing::Drawing;
use crate::entity::ElementId;
use crate::params::ItemKind;
use crate::signature::Timestamp;

pub const UNIT_METER: &str = "м";
pub const UNIT_PIECE: &str = "шт";
pub const CSV_HEADER: &str = "pos,name,dn,qty,unit";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantity {
    /// Total pipe length, kept in millimeters so sums stay exact.
    Length { mm: f64 },
    Count(u64),
}

impl Quantity {
    /// Quantity in the row's unit: meters or pieces.
    pub fn value(&self) -> f64 {
        match self {
            Quantity::Length { mm } => mm / 1000.0,
            Quantity::Count(n) => *n as f64,
        }
    }

    pub fn unit(&self) -> &'static str {
        match self {
            Quantity::Length { .. } => UNIT_METER,
            Quantity::Count(_) => UNIT_PIECE,
        }
    }

    /// Meters with two decimals, pieces as an integer.
    pub fn formatted(&self) -> String {
        match self {
            Quantity::Length { mm } => format!("{:.2}", mm / 1000.0),
            Quantity::Count(n) => format!("{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecRow {
    pub pos: String,
    pub name: String,
    pub dn: u32,
    pub quantity: Quantity,
}

impl SpecRow {
    pub fn qty(&self) -> f64 {
        self.quantity.value()
    }

    pub fn unit(&self) -> &'static str {
        self.quantity.unit()
    }

    pub fn is_pipe(&self) -> bool {
        matches!(self.quantity, Quantity::Length { .. })
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for SpecRow {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("SpecRow", 5)?;
        st.serialize_field("pos", &self.pos)?;
        st.serialize_field("name", &self.name)?;
        st.serialize_field("dn", &self.dn)?;
        st.serialize_field("qty", &self.qty())?;
        st.serialize_field("unit", self.unit())?;
        st.end()
    }
}

/// Item rows (sorted by designation) followed by pipe rows (DN descending).
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SpecTable {
    pub source: Option<String>,
    pub generated_at: Option<Timestamp>,
    pub rows: Vec<SpecRow>,
}

impl SpecTable {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Derives the specification of every pipe route in the drawing.
pub fn generate_spec(drawing: &Drawing) -> SpecTable {
    // (dn, material) -> mm; BTreeMap keeps per-key sums in module/segment order
    let mut pipes: BTreeMap<(u32, Option<&str>), f64> = BTreeMap::new();
    let mut items: BTreeMap<(ItemKind, u32), (Vec<&str>, u64)> = BTreeMap::new();

    for m in drawing.modules() {
        let Some(route) = m.params.as_route() else { continue };
        for seg in &route.segments {
            *pipes.entry((seg.dn, seg.material.as_deref())).or_insert(0.0) += seg.length;
        }
        for item in &route.items {
            let Some(seg) = route.segment_at_node(item.node_index) else { continue };
            let entry = items.entry((item.kind, seg.dn)).or_default();
            entry.0.push(item.tag.as_str());
            entry.1 += 1;
        }
    }

    let mut item_rows: Vec<SpecRow> = items
        .into_iter()
        .map(|((kind, dn), (mut tags, count))| {
            tags.sort_unstable();
            tags.dedup();
            SpecRow {
                pos: tags.join(","),
                name: String::from(kind.as_str()),
                dn,
                quantity: Quantity::Count(count),
            }
        })
        .collect();
    item_rows.sort_by(|a, b| a.pos.cmp(&b.pos).then(a.name.cmp(&b.name)).then(a.dn.cmp(&b.dn)));

    let mut pipe_groups: Vec<((u32, Option<&str>), f64)> = pipes.into_iter().collect();
    pipe_groups.sort_by(|((dn_a, mat_a), _), ((dn_b, mat_b), _)| dn_b.cmp(dn_a).then(mat_a.cmp(mat_b)));

    let mut rows = item_rows;
    for (i, ((dn, material), mm)) in pipe_groups.into_iter().enumerate() {
        rows.push(SpecRow {
            pos: format!("T{}", i + 1),
            name: match material {
                Some(m) => format!("pipe {m}"),
                None => String::from("pipe"),
            },
            dn,
            quantity: Quantity::Length { mm },
        });
    }
    SpecTable {
        source: None,
        generated_at: None,
        rows,
    }
}

/// A position designation used at more than one route node.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TagConflict {
    pub tag: String,
    /// `(module id, node index)`, sorted.
    pub occurrences: Vec<(ElementId, u32)>,
}

/// Every tag occurring at two or more item sites, sorted by tag. Tags are
/// compared as exact strings.
pub fn check_duplicate_tags(drawing: &Drawing) -> Vec<TagConflict> {
    let mut sites: BTreeMap<&str, Vec<(ElementId, u32)>> = BTreeMap::new();
    for m in drawing.modules() {
        let Some(route) = m.params.as_route() else { continue };
        for item in &route.items {
            sites.entry(item.tag.as_str()).or_default().push((m.module_id, item.node_index));
        }
    }
    sites
        .into_iter()
        .filter(|(_, occ)| occ.len() >= 2)
        .map(|(tag, mut occurrences)| {
            occurrences.sort_unstable();
            TagConflict {
                tag: tag.into(),
                occurrences,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecFormat {
    Csv,
    Text,
}

fn csv_field(out: &mut String, field: &str) {
    if field.contains([',', '"', '\n', '\r']) {
        out.push('"');
        out.push_str(&field.replace('"', "\"\""));
        out.push('"');
    } else {
        out.push_str(field);
    }
}

/// Renders the table as UTF-8 CSV (LF line endings) or fixed-width text.
pub fn format_spec_table(table: &SpecTable, format: SpecFormat) -> Vec<u8> {
    match format {
        SpecFormat::Csv => format_csv(table),
        SpecFormat::Text => format_text(table),
    }
    .into_bytes()
}

fn format_csv(table: &SpecTable) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in &table.rows {
        csv_field(&mut out, &row.pos);
        out.push(',');
        csv_field(&mut out, &row.name);
        let _ = write!(out, ",{},{},{}\n", row.dn, row.quantity.formatted(), row.unit());
    }
    out
}

fn format_text(table: &SpecTable) -> String {
    let header = ["Pos", "Name", "DN", "Qty", "Unit"];
    let cells: Vec<[String; 5]> = table
        .rows
        .iter()
        .map(|r| {
            [
                r.pos.clone(),
                r.name.clone(),
                format!("{}", r.dn),
                r.quantity.formatted(),
                String::from(r.unit()),
            ]
        })
        .collect();
    let mut widths = header.map(|h| h.chars().count());
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let right_aligned = [false, false, true, true, false];

    let mut out = String::new();
    let mut line = |fields: [&str; 5]| {
        let mut l = String::new();
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                l.push_str("  ");
            }
            let pad = widths[i] - f.chars().count();
            if right_aligned[i] {
                l.extend(core::iter::repeat(' ').take(pad));
                l.push_str(f);
            } else {
                l.push_str(f);
                l.extend(core::iter::repeat(' ').take(pad));
            }
        }
        out.push_str(l.trim_end());
        out.push('\n');
    };
    line(header);
    for row in &cells {
        line([&row[0], &row[1], &row[2], &row[3], &row[4]]);
    }
    out
}
