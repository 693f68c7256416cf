//! Random drawing generators and brute-force oracles shared by the
//! property and acceptance suites. Nothing here calls the aggregation or
//! conflict code under test.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tcgx_core::params::DEFAULT_DN_SERIES;
use tcgx_core::{
    Direction3, Drawing, ElementId, EntityKind, GridParams, ItemKind, ModuleParams, NodeItem, PipeRouteParams,
    PipeSegment, Point2, Point3,
};

pub use rand::SeedableRng;
pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

const TAG_POOL: [&str; 10] = ["В1", "В2", "В3", "Ф1", "Ф2", "Р1", "КИП1", "КИП2", "в1", "B1"];
const MATERIALS: [&str; 3] = ["ст.20", "12Х18Н10Т", "09Г2С"];

fn real(rng: &mut Rng64, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}

/// Lengths on a 0.5 mm grid so that sums are exact in binary64.
fn half_mm(rng: &mut Rng64, lo: u32, hi: u32) -> f64 {
    f64::from(rng.gen_range(lo * 2..hi * 2)) / 2.0
}

pub fn random_grid(rng: &mut Rng64) -> GridParams {
    let nx = rng.gen_range(0..5);
    let ny = rng.gen_range(0..4);
    let mut g = GridParams::new(
        (0..nx).map(|_| half_mm(rng, 1000, 12000)).collect(),
        (0..ny).map(|_| half_mm(rng, 1000, 9000)).collect(),
    );
    if rng.gen_bool(0.3) {
        g.bubble_radius = real(rng, 100.0, 600.0);
        g.axis_overhang = real(rng, 0.0, 2000.0);
    }
    g
}

/// Random route; with `unique_tags` every item tag in the route is fresh
/// (callers keep a counter across routes through `next_tag`).
pub fn random_route(rng: &mut Rng64, unique_tags: Option<&mut u32>) -> PipeRouteParams {
    let n = rng.gen_range(1..7);
    let segments: Vec<PipeSegment> = (0..n)
        .map(|_| PipeSegment {
            direction: *Direction3::ALL.choose(rng).unwrap(),
            length: half_mm(rng, 100, 6000),
            dn: *DEFAULT_DN_SERIES.choose(rng).unwrap(),
            material: if rng.gen_bool(0.3) {
                Some((*MATERIALS.choose(rng).unwrap()).to_string())
            } else {
                None
            },
        })
        .collect();
    let mut route = PipeRouteParams::new(
        Point3::new(real(rng, -5000.0, 5000.0), real(rng, -5000.0, 5000.0), real(rng, 0.0, 3000.0)),
        segments,
    );
    let items = rng.gen_range(0..4);
    let mut counter = unique_tags;
    for _ in 0..items {
        let tag = match counter.as_deref_mut() {
            Some(c) => {
                *c += 1;
                format!("П{c}")
            }
            None => (*TAG_POOL.choose(rng).unwrap()).to_string(),
        };
        let mut item = NodeItem::new(rng.gen_range(0..=n as u32), *ItemKind::ALL.choose(rng).unwrap(), tag);
        if rng.gen_bool(0.2) {
            item.symbol_size = real(rng, 100.0, 500.0);
        }
        route.items.push(item);
    }
    route
}

pub fn random_params(rng: &mut Rng64) -> ModuleParams {
    if rng.gen_bool(0.5) {
        random_grid(rng).into()
    } else {
        random_route(rng, None).into()
    }
}

fn random_point(rng: &mut Rng64) -> Point2 {
    Point2::new(real(rng, -20000.0, 20000.0), real(rng, -20000.0, 20000.0))
}

/// Random drawing with at most `max_modules` modules and about
/// `max_entities` entities, built through the public API (plain entities,
/// layers, modules and element edits).
pub fn random_drawing(rng: &mut Rng64, max_modules: usize, max_entities: usize, unique_tags: bool) -> Drawing {
    let mark = *["ТХ", "АР", "ГП", "ОВ"].choose(rng).unwrap();
    let mut d = Drawing::new(mark).unwrap();
    for name in ["axes", "pipes", "scan"] {
        if rng.gen_bool(0.5) {
            d.add_layer(name, rng.gen_bool(0.8)).unwrap();
        }
    }
    let layers: Vec<String> = d.layers().map(|l| l.name.clone()).collect();
    let mut tag_counter = 0u32;
    let n_modules = rng.gen_range(0..=max_modules);
    let mut grids = Vec::new();
    let mut routes = Vec::new();

    for _ in 0..n_modules {
        let params: ModuleParams = if rng.gen_bool(0.4) {
            random_grid(rng).into()
        } else {
            random_route(rng, unique_tags.then_some(&mut tag_counter)).into()
        };
        if d.entity_count() + params.entity_count() > max_entities {
            break;
        }
        let origin = if rng.gen_bool(0.5) { Point2::ORIGIN } else { random_point(rng) };
        let scale = if rng.gen_bool(0.6) { 1.0 } else { real(rng, 0.1, 4.0) };
        let is_grid = params.as_grid().is_some();
        let id = d.add_module(params, origin, scale).unwrap();
        if is_grid {
            grids.push(id)
        } else {
            routes.push(id)
        }
    }

    if let (Some(&g), Some(&r)) = (grids.first(), routes.first()) {
        let extra = 2 * (d.module(g).unwrap().params.as_grid().unwrap().n_x()
            + d.module(g).unwrap().params.as_grid().unwrap().n_y());
        if rng.gen_bool(0.5) && d.entity_count() + extra <= max_entities {
            d.insert_grid_axes(r, g).unwrap();
        }
    }

    let plain = rng.gen_range(0..8);
    for _ in 0..plain {
        if d.entity_count() >= max_entities {
            break;
        }
        let layer = layers.choose(rng).unwrap().clone();
        let kind = match rng.gen_range(0..5) {
            0 => EntityKind::line(random_point(rng), random_point(rng)),
            1 => EntityKind::Polyline {
                points: (0..rng.gen_range(2..6)).map(|_| random_point(rng)).collect(),
            },
            2 => EntityKind::circle(random_point(rng), real(rng, 1.0, 500.0)),
            3 => EntityKind::text(random_point(rng), "Узел А", real(rng, 2.5, 10.0)),
            _ => EntityKind::RasterRef {
                path: "archive/sheet-07.tif".into(),
                insert: random_point(rng),
                scale: real(rng, 0.5, 5.0),
            },
        };
        d.add_entity(kind, &layer).unwrap();
    }

    // a few element edits
    let ids: Vec<ElementId> = d.modules().map(|m| m.module_id).collect();
    for id in ids {
        match rng.gen_range(0..6) {
            0 => d.move_element(id, real(rng, -1000.0, 1000.0), real(rng, -1000.0, 1000.0)).unwrap(),
            1 => d.stretch_module(id, real(rng, 0.5, 2.0)).unwrap(),
            2 if rng.gen_bool(0.3) => d.delete_element(id).unwrap(),
            _ => {}
        }
    }
    d
}

/// Brute-force specification oracle: `(pos, name, dn, quantity in row unit, unit)`.
pub fn spec_oracle(d: &Drawing) -> Vec<(String, String, u32, f64, &'static str)> {
    struct Seg {
        dn: u32,
        material: Option<String>,
        mm: f64,
    }
    struct Item {
        kind: ItemKind,
        dn: u32,
        tag: String,
    }
    let mut segs = Vec::new();
    let mut items = Vec::new();
    for m in d.modules() {
        let ModuleParams::PipeAxonometric(r) = &m.params else { continue };
        for s in &r.segments {
            segs.push(Seg {
                dn: s.dn,
                material: s.material.clone(),
                mm: s.length,
            });
        }
        for it in &r.items {
            let idx = it.node_index as usize;
            let dn = if idx < r.segments.len() {
                r.segments[idx].dn
            } else {
                r.segments[r.segments.len() - 1].dn
            };
            items.push(Item {
                kind: it.kind,
                dn,
                tag: it.tag.clone(),
            });
        }
    }

    let mut item_rows = Vec::new();
    for (i, a) in items.iter().enumerate() {
        if items[..i].iter().any(|b| b.kind == a.kind && b.dn == a.dn) {
            continue;
        }
        let group: Vec<&Item> = items.iter().filter(|b| b.kind == a.kind && b.dn == a.dn).collect();
        let mut tags: Vec<&str> = Vec::new();
        for it in &group {
            if !tags.contains(&it.tag.as_str()) {
                tags.push(&it.tag);
            }
        }
        tags.sort();
        let name = match a.kind {
            ItemKind::Valve => "valve",
            ItemKind::Flange => "flange",
            ItemKind::Reducer => "reducer",
            ItemKind::Instrument => "instrument",
        };
        item_rows.push((tags.join(","), name.to_string(), a.dn, group.len() as f64, "шт"));
    }
    item_rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut pipe_groups: Vec<(u32, Option<String>, f64)> = Vec::new();
    for (i, a) in segs.iter().enumerate() {
        if segs[..i].iter().any(|b| b.dn == a.dn && b.material == a.material) {
            continue;
        }
        let mut mm = 0.0;
        for b in &segs {
            if b.dn == a.dn && b.material == a.material {
                mm += b.mm;
            }
        }
        pipe_groups.push((a.dn, a.material.clone(), mm));
    }
    pipe_groups.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut rows = item_rows;
    for (i, (dn, material, mm)) in pipe_groups.into_iter().enumerate() {
        let name = match material {
            Some(m) => format!("pipe {m}"),
            None => "pipe".to_string(),
        };
        rows.push((format!("T{}", i + 1), name, dn, mm / 1000.0, "м"));
    }
    rows
}

/// Total route segment length in the drawing, mm.
pub fn total_segment_mm(d: &Drawing) -> f64 {
    d.modules()
        .filter_map(|m| m.params.as_route())
        .flat_map(|r| r.segments.iter().map(|s| s.length))
        .sum()
}

/// Quadratic duplicate-tag oracle: `(tag, sorted occurrences)` sorted by tag.
pub fn duplicate_oracle(d: &Drawing) -> Vec<(String, Vec<(ElementId, u32)>)> {
    let mut sites = Vec::new();
    for m in d.modules() {
        if let ModuleParams::PipeAxonometric(r) = &m.params {
            for it in &r.items {
                sites.push((it.tag.clone(), m.module_id, it.node_index));
            }
        }
    }
    let mut out: Vec<(String, Vec<(ElementId, u32)>)> = Vec::new();
    for i in 0..sites.len() {
        let seen_before = sites[..i].iter().any(|s| s.0 == sites[i].0);
        let repeated = sites.iter().enumerate().any(|(j, s)| j != i && s.0 == sites[i].0);
        if seen_before || !repeated {
            continue;
        }
        let mut occ: Vec<(ElementId, u32)> = sites.iter().filter(|s| s.0 == sites[i].0).map(|s| (s.1, s.2)).collect();
        occ.sort();
        out.push((sites[i].0.clone(), occ));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

/// Independent isometric projection with the constants derived at run time.
pub fn iso_oracle(x: f64, y: f64, z: f64) -> (f64, f64) {
    let c = (3.0f64).sqrt() / 2.0;
    let s = (std::f64::consts::PI / 6.0).sin();
    ((x - y) * c, (x + y) * s + z)
}

/// Projected route nodes by an explicit cumulative walk.
pub fn route_nodes_oracle(r: &PipeRouteParams) -> Vec<(f64, f64)> {
    let (mut x, mut y, mut z) = (r.start.x, r.start.y, r.start.z);
    let mut out = vec![iso_oracle(x, y, z)];
    for s in &r.segments {
        match s.direction {
            Direction3::PosX => x += s.length,
            Direction3::NegX => x -= s.length,
            Direction3::PosY => y += s.length,
            Direction3::NegY => y -= s.length,
            Direction3::PosZ => z += s.length,
            Direction3::NegZ => z -= s.length,
        }
        out.push(iso_oracle(x, y, z));
    }
    out
}

/// Grid entity count by enumerating what a grid sheet shows.
pub fn grid_count_oracle(g: &GridParams) -> usize {
    let numbered_axes = g.x_spacings.len() + 1;
    let lettered_axes = g.y_spacings.len() + 1;
    let mut count = 0;
    for _axis in 0..numbered_axes + lettered_axes {
        count += 1; // line
        count += 1; // bubble
        count += 1; // label
    }
    for _gap in g.x_spacings.iter().chain(&g.y_spacings) {
        count += 1; // dimension text
    }
    count
}
