//! Acceptance gate: one PASS/FAIL line per criterion; exits non-zero if any
//! criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;
mod support;

use std::panic::{catch_unwind, AssertUnwindSafe};

use common::*;
use rand::Rng;
use support::{tcgx, tree_hash, Service};
use tcgx::io::{load_drawing, save_drawing};
use tcgx::keyring::{write_key, KeyRingDir};
use tcgx::library::{list_prototypes, load_prototype, prototype_path, save_prototype};
use tcgx_core::codec::{canonical_bytes, decode_drawing_file, decode_prototype_file, encode_drawing_file,
    encode_prototype_file, HEADER_LEN};
use tcgx_core::profile::CommandId;
use tcgx_core::signature::{self, KeyRecord, SignatureStatus};
use tcgx_core::spec::{check_duplicate_tags, generate_spec, Quantity};
use tcgx_core::{
    project_iso, regenerate, insert_grid_axes, Direction3, Drawing, ElementId, GridParams, ItemKind, KeyRing, ModuleParams,
    NodeItem, PipeRouteParams, PipeSegment, Point2, Point3, Timestamp,
};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn main() {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("drawing round-trip through the file format", round_trip),
        ("module regeneration determinism and entity counts", regeneration),
        ("isometric projection", projection),
        ("specification against the oracle", specification),
        ("duplicate tag detection against the oracle", duplicates),
        ("signature integrity and key rotation", integrity),
        ("profile gating of mutating commands", profile_gating),
        ("prototype library round-trip", prototypes),
        ("CLI and service specification parity", csv_parity),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(r) => r,
            Err(p) => Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into())),
        };
        match outcome {
            Ok(detail) => println!("PASS {name} — {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name} — {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn worked_route() -> PipeRouteParams {
    let mut route = PipeRouteParams::new(
        Point3::new(0.0, 0.0, 0.0),
        vec![
            PipeSegment::new(Direction3::PosX, 2000.0, 50),
            PipeSegment::new(Direction3::PosZ, 500.0, 50),
            PipeSegment::new(Direction3::PosY, 1500.0, 40),
        ],
    );
    route.items.push(NodeItem::new(1, ItemKind::Valve, "В1"));
    route
}

fn round_trip() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let mut entities = 0;
    for seed in 0..200u64 {
        let d = random_drawing(&mut rng(seed), 20, 500, false);
        entities += d.entity_count();
        let path = dir.path().join(format!("{seed}.tcgx"));
        save_drawing(&d, &path, None).map_err(|e| e.to_string())?;
        let back = load_drawing(&path, &KeyRing::new()).map_err(|e| e.to_string())?;
        ensure!(back.status == SignatureStatus::Unsigned, "seed {seed}: status {:?}", back.status);
        ensure!(canonical_bytes(&back.drawing) == canonical_bytes(&d), "seed {seed}: canonical bytes differ");
        ensure!(back.drawing.entity_count() == d.entity_count(), "seed {seed}: entity count differs");
    }
    Ok(format!("200 drawings, {entities} entities"))
}

fn regeneration() -> Check {
    let mut with_axes = 0;
    for seed in 0..200u64 {
        let mut r = rng(seed);
        let mut params = random_params(&mut r);
        if let ModuleParams::PipeAxonometric(route) = &mut params {
            if r.gen_bool(0.5) {
                let grid: ModuleParams = random_grid(&mut r).into();
                insert_grid_axes(route, &grid, Point2::new(r.gen_range(-1e4..1e4), 0.0), 1.0).unwrap();
                with_axes += 1;
            }
        }
        let a = regenerate(&params, Point2::ORIGIN, 1.0).map_err(|v| format!("seed {seed}: {v:?}"))?;
        let b = regenerate(&params, Point2::ORIGIN, 1.0).unwrap();
        ensure!(a == b, "seed {seed}: regeneration not deterministic");
        let expected = match &params {
            ModuleParams::ConstructionGrid(g) => {
                3 * (g.n_x() + g.n_y()) + g.x_spacings.len() + g.y_spacings.len()
            }
            ModuleParams::PipeAxonometric(route) => {
                route.segments.len() + 2 * route.items.len() + 2 * route.inserted_axes.len()
            }
        };
        ensure!(a.len() == expected, "seed {seed}: {} entities, expected {expected}", a.len());
        if let ModuleParams::ConstructionGrid(g) = &params {
            ensure!(a.len() == grid_count_oracle(g), "seed {seed}: grid oracle disagrees");
        }
    }
    for seed in 0..100u64 {
        let d = random_drawing(&mut rng(seed), 20, 500, false);
        d.check_invariants().map_err(|e| format!("seed {seed}: {e:?}"))?;
        let mut again = d.clone();
        again.regen_all().unwrap();
        ensure!(again.entity_count() == d.entity_count(), "seed {seed}: regen changed entity count");
    }
    let worked = regenerate(&GridParams::new(vec![6000.0, 6000.0], vec![4000.0]).into(), Point2::ORIGIN, 1.0).unwrap();
    ensure!(worked.len() == 18, "3x2 grid gave {} entities", worked.len());
    Ok(format!("200 parameter sets ({with_axes} routes with inserted axes), 3x2 grid = 18"))
}

fn projection() -> Check {
    let mut r = rng(7);
    let len = |x: f64, y: f64, z: f64| {
        let p = project_iso(x, y, z).unwrap();
        (p.x * p.x + p.y * p.y).sqrt()
    };
    for i in 0..10_000 {
        let a: [f64; 3] = [r.gen_range(-1e4..1e4), r.gen_range(-1e4..1e4), r.gen_range(-1e4..1e4)];
        let b: [f64; 3] = [r.gen_range(-1e4..1e4), r.gen_range(-1e4..1e4), r.gen_range(-1e4..1e4)];
        let pa = project_iso(a[0], a[1], a[2]).unwrap();
        let pb = project_iso(b[0], b[1], b[2]).unwrap();
        let ps = project_iso(a[0] + b[0], a[1] + b[1], a[2] + b[2]).unwrap();
        ensure!(
            (ps.x - pa.x - pb.x).abs() <= 1e-9 && (ps.y - pa.y - pb.y).abs() <= 1e-9,
            "sample {i}: additivity off by ({}, {})",
            ps.x - pa.x - pb.x,
            ps.y - pa.y - pb.y
        );
        let (u, v) = iso_oracle(a[0], a[1], a[2]);
        ensure!((pa.x - u).abs() <= 1e-9 && (pa.y - v).abs() <= 1e-9, "sample {i}: differs from oracle");
        let l = a[0].abs();
        for (got, axis) in [(len(l, 0.0, 0.0), "x"), (len(0.0, l, 0.0), "y"), (len(0.0, 0.0, l), "z")] {
            ensure!((got - l).abs() <= 1e-9, "sample {i}: unit length along {axis} is {got}, expected {l}");
        }
    }
    let examples = [
        ((0.0, 0.0, 0.0), (0.0, 0.0)),
        ((0.0, 0.0, 500.0), (0.0, 500.0)),
        ((1000.0, 1000.0, 0.0), (0.0, 1000.0)),
        ((1000.0, 0.0, 0.0), (866.025_403_784_438_6, 500.0)),
    ];
    for ((x, y, z), (u, v)) in examples {
        let p = project_iso(x, y, z).unwrap();
        ensure!((p.x - u).abs() <= 1e-6 && (p.y - v).abs() <= 1e-6, "({x},{y},{z}) -> {p:?}, expected ({u},{v})");
    }
    Ok("10000 random points, 4 reference points".into())
}

fn specification() -> Check {
    let mut rows = 0;
    for seed in 0..100u64 {
        let d = random_drawing(&mut rng(seed), 20, 500, seed % 2 == 0);
        let table = generate_spec(&d);
        let got: Vec<_> = table.rows.iter().map(|r| (r.pos.clone(), r.name.clone(), r.dn, r.qty(), r.unit())).collect();
        ensure!(got == spec_oracle(&d), "seed {seed}: rows differ from oracle");
        let mm: f64 = table
            .rows
            .iter()
            .filter_map(|r| match r.quantity {
                Quantity::Length { mm } => Some(mm),
                _ => None,
            })
            .sum();
        ensure!(mm == total_segment_mm(&d), "seed {seed}: {mm} mm in rows vs {} mm in routes", total_segment_mm(&d));
        rows += table.rows.len();
    }
    let mut d = Drawing::new("ТХ").unwrap();
    d.add_module(worked_route().into(), Point2::ORIGIN, 1.0).unwrap();
    let got: Vec<_> = generate_spec(&d)
        .rows
        .iter()
        .map(|r| (r.pos.clone(), r.name.clone(), r.dn, r.qty(), r.unit()))
        .collect();
    let expected = vec![
        ("В1".to_string(), "valve".to_string(), 50, 1.0, "шт"),
        ("T1".to_string(), "pipe".to_string(), 50, 2.5, "м"),
        ("T2".to_string(), "pipe".to_string(), 40, 1.5, "м"),
    ];
    ensure!(got == expected, "worked example gave {got:?}");
    Ok(format!("100 drawings, {rows} rows, exact length conservation, worked example"))
}

fn duplicates() -> Check {
    let mut conflicts = 0;
    for seed in 0..100u64 {
        let unique = seed % 2 == 0;
        let d = random_drawing(&mut rng(seed), 20, 500, unique);
        let got: Vec<_> = check_duplicate_tags(&d).into_iter().map(|c| (c.tag, c.occurrences)).collect();
        if unique {
            ensure!(got.is_empty(), "seed {seed}: conflicts reported for unique tags");
        }
        ensure!(got == duplicate_oracle(&d), "seed {seed}: conflicts differ from oracle");
        conflicts += got.len();
    }
    Ok(format!("100 drawings, {conflicts} conflicting tags, none among unique-tag drawings"))
}

fn integrity() -> Check {
    let mut ring = KeyRing::new();
    ring.insert(KeyRecord::new("k1", [7; 32], Timestamp(1_700_000_000)));
    let d = random_drawing(&mut rng(11), 10, 300, false);
    let payload = canonical_bytes(&d);
    let block = signature::sign(&payload, &ring, Timestamp(1_700_000_100)).unwrap();
    let file = encode_drawing_file(&payload, Some(&block));
    let parsed = decode_drawing_file(&file).unwrap();
    ensure!(
        signature::verify(parsed.payload, parsed.signature.as_ref().unwrap(), &ring) == SignatureStatus::Valid("k1".into()),
        "pristine file does not verify"
    );
    let mut r = rng(12);
    for i in 0..1000 {
        let mut bytes = file.clone();
        let bit = r.gen_range(0..payload.len() * 8);
        bytes[HEADER_LEN + bit / 8] ^= 1 << (bit % 8);
        let parsed = decode_drawing_file(&bytes).map_err(|e| format!("flip {i}: {e}"))?;
        let status = signature::verify(parsed.payload, parsed.signature.as_ref().unwrap(), &ring);
        ensure!(status == SignatureStatus::Invalid, "flip {i} (bit {bit}): {status:?}");
    }

    let dir = tempfile::tempdir().unwrap();
    let keys = dir.path().join("keys");
    std::fs::create_dir(&keys).unwrap();
    write_key(&keys, "k1", [1; 32], Timestamp(1_700_000_000)).map_err(|e| e.to_string())?;
    let mut ring = KeyRingDir::open(&keys).map_err(|e| e.to_string())?;
    let old = dir.path().join("old.tcgx");
    let b1 = save_drawing(&d, &old, Some(&ring.ring)).map_err(|e| e.to_string())?.unwrap();
    ensure!(b1.key_id == "k1", "first signature under {}", b1.key_id);
    write_key(&keys, "k2", [2; 32], Timestamp(1_800_000_000)).map_err(|e| e.to_string())?;
    ring.refresh().map_err(|e| e.to_string())?;
    ensure!(ring.ring.current().map(|k| k.key_id.as_str()) == Some("k2"), "current key is not k2 after rotation");
    let status = load_drawing(&old, &ring.ring).map_err(|e| e.to_string())?.status;
    ensure!(status == SignatureStatus::Valid("k1".into()), "old file after rotation: {status:?}");
    let new = dir.path().join("new.tcgx");
    let b2 = save_drawing(&d, &new, Some(&ring.ring)).map_err(|e| e.to_string())?.unwrap();
    ensure!(b2.key_id == "k2", "new signature under {}", b2.key_id);
    Ok("1000 payload bit flips rejected; k1 -> k2 rotation keeps old files valid".into())
}

/// Arguments exercising each mutating command against the gating fixture.
fn mutating_args(cmd: CommandId, grid: &str, route: &str) -> Vec<String> {
    let v: &[&str] = match cmd {
        CommandId::New => &["new", "fresh.tcgx", "--mark", "ТХ"],
        CommandId::AddGrid => &["add-grid", "d.tcgx", "--x", "6000,6000", "--y", "4000"],
        CommandId::AddRoute => &["add-route", "d.tcgx", "--start", "0,0,0", "--segments", "+X:2000:50", "--item", "0:valve:В7"],
        CommandId::InsertAxes => &["insert-axes", "d.tcgx", "--route", route, "--grid", grid],
        CommandId::Regen => &["regen", "d.tcgx"],
        CommandId::Move => &["move", "d.tcgx", "--id", grid, "--dx", "100", "--dy", "-50"],
        CommandId::Stretch => &["stretch", "d.tcgx", "--id", grid, "--factor", "2"],
        CommandId::Delete => &["delete", "d.tcgx", "--id", grid],
        CommandId::ProtoSave => &["proto-save", "d.tcgx", "--module", route, "--name", "second bay"],
        CommandId::ProtoLoad => &["proto-load", "d.tcgx", "--id", "bay"],
        CommandId::Sign => &["sign", "d.tcgx"],
        CommandId::Keygen => &["keygen", "--id", "k9"],
        other => panic!("{other} is not expected to be mutating"),
    };
    v.iter().map(|s| s.to_string()).collect()
}

fn profile_gating() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    std::fs::write(
        root.join("restricted.toml"),
        "marks = [\"ТХ\", \"АР\"]\n\n[[profile]]\nname = \"просмотр\"\nmarks = [\"ТХ\"]\ncommands = [\"info\", \"spec\", \"check-dups\", \"render\", \"verify\", \"proto-list\"]\n",
    )
    .unwrap();
    let base = ["--keyring", "keys", "--library", "prototypes"];
    let run = |extra: &[&str], args: &[String]| {
        let mut all: Vec<&str> = base.to_vec();
        all.extend_from_slice(extra);
        all.extend(args.iter().map(String::as_str));
        tcgx(root, &all)
    };
    let full = |args: &[&str]| {
        let args: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        let out = run(&["--profile", "полный"], &args);
        assert_eq!(out.code, 0, "setup {args:?}: {}", out.stderr);
        out.stdout_str().trim().to_string()
    };
    std::fs::create_dir(root.join("prototypes")).unwrap();
    std::fs::create_dir(root.join("keys")).unwrap();
    full(&["keygen", "--id", "k1"]);
    full(&["new", "d.tcgx", "--mark", "ТХ"]);
    let grid = full(&["add-grid", "d.tcgx", "--x", "6000", "--y", "4000"]);
    let route = full(&["add-route", "d.tcgx", "--start", "0,0,0", "--segments", "+X:2000:50,+Z:500:50"]);
    full(&["proto-save", "d.tcgx", "--module", &route, "--name", "bay"]);

    let mutating: Vec<CommandId> = CommandId::ALL.iter().copied().filter(|c| c.is_mutating()).collect();
    let mut denied = 0;
    let mut attempt = |extra: &[&str], cmd: CommandId, args: Vec<String>| -> Result<(), String> {
        let before = tree_hash(root);
        let out = run(extra, &args);
        ensure!(out.code == 1, "{args:?} under {extra:?}: exit {} ({})", out.code, out.stderr);
        ensure!(out.stderr.contains("command not in profile"), "{args:?}: stderr {:?}", out.stderr);
        ensure!(tree_hash(root) == before, "{cmd} under {extra:?} changed files");
        denied += 1;
        Ok(())
    };
    for &cmd in &mutating {
        attempt(&["--config", "restricted.toml", "--profile", "просмотр"], cmd, mutating_args(cmd, &grid, &route))?;
    }
    attempt(&["--profile", "АР"], CommandId::AddRoute, mutating_args(CommandId::AddRoute, &grid, &route))?;
    attempt(&["--profile", "ТХ"], CommandId::AddGrid, mutating_args(CommandId::AddGrid, &grid, &route))?;

    // control: the same invocations succeed under the full profile
    let order = [
        CommandId::New,
        CommandId::AddGrid,
        CommandId::AddRoute,
        CommandId::InsertAxes,
        CommandId::Regen,
        CommandId::Move,
        CommandId::Stretch,
        CommandId::ProtoSave,
        CommandId::ProtoLoad,
        CommandId::Keygen,
        CommandId::Sign,
        CommandId::Delete,
    ];
    ensure!(order.len() == mutating.len(), "control pass does not cover every mutating command");
    for cmd in order {
        let before = tree_hash(root);
        let out = run(&["--profile", "полный"], &mutating_args(cmd, &grid, &route));
        ensure!(out.code == 0, "control {cmd}: exit {} ({})", out.code, out.stderr);
        ensure!(tree_hash(root) != before, "control {cmd} changed nothing");
    }
    Ok(format!("{denied} denied invocations left files untouched; control pass under полный succeeded"))
}

fn prototypes() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let lib = dir.path();
    let mut saved = Vec::new();
    for seed in 0..50u64 {
        let params = random_params(&mut rng(seed));
        let record = save_prototype(lib, &format!("proto {seed}"), &params, Some("typical"), Timestamp(seed as i64))
            .map_err(|e| e.to_string())?;
        saved.push((record.id.clone(), params));
    }
    let catalog = list_prototypes(lib, None).map_err(|e| e.to_string())?;
    ensure!(catalog.records.len() == 50 && catalog.skipped.is_empty(), "catalog lists {}", catalog.records.len());
    for (id, params) in &saved {
        let loaded = load_prototype(lib, id).map_err(|e| e.to_string())?;
        ensure!(&loaded.record.params == params, "{id}: parameters changed");
        ensure!(loaded.preview == regenerate(params, Point2::ORIGIN, 1.0).unwrap(), "{id}: preview differs");
        let bytes = std::fs::read(prototype_path(lib, id)).unwrap();
        let record = decode_prototype_file(&bytes).map_err(|e| e.to_string())?;
        ensure!(encode_prototype_file(&record) == bytes, "{id}: file holds more than the parameter record");
    }

    // through the command line
    let root = dir.path().join("cli");
    std::fs::create_dir_all(root.join("prototypes")).unwrap();
    let ok = |args: &[&str]| {
        let out = tcgx(&root, args);
        assert_eq!(out.code, 0, "{args:?}: {}", out.stderr);
        out.stdout_str().trim().to_string()
    };
    ok(&["new", "a.tcgx"]);
    let id = ok(&["add-route", "a.tcgx", "--start", "0,0,0", "--segments", "+X:2000:50,+Z:500:50,+Y:1500:40", "--item", "1:valve:В1"]);
    let proto = ok(&["proto-save", "a.tcgx", "--module", &id, "--name", "Typical Bay"]);
    ensure!(proto == "typical-bay", "proto-save printed {proto:?}");
    let listing = ok(&["proto-list"]);
    ensure!(listing.contains("typical-bay\tpipe_axonometric\tTypical Bay"), "proto-list printed {listing:?}");
    ok(&["new", "b.tcgx"]);
    let placed = ok(&["proto-load", "b.tcgx", "--id", "typical-bay", "--preview", "preview.svg"]);
    let a = load_drawing(&root.join("a.tcgx"), &KeyRing::new()).unwrap().drawing;
    let b = load_drawing(&root.join("b.tcgx"), &KeyRing::new()).unwrap().drawing;
    let pa = &a.module(ElementId(id.parse().unwrap())).unwrap().params;
    let pb = &b.module(ElementId(placed.parse().unwrap())).unwrap().params;
    ensure!(pa == pb, "CLI load changed parameters");
    ensure!(root.join("preview.svg").is_file(), "no preview written");
    Ok("50 prototypes plus a CLI save/list/load flow; files carry parameters only".into())
}

fn csv_parity() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let service = Service::new(dir.path(), None, false);
    let mut drawings = Vec::new();
    let mut worked = Drawing::new("ТХ").unwrap();
    worked.add_module(worked_route().into(), Point2::ORIGIN, 1.0).unwrap();
    drawings.push(("worked".to_string(), worked));
    for seed in 0..20u64 {
        drawings.push((format!("random-{seed}"), random_drawing(&mut rng(seed), 12, 300, seed % 2 == 0)));
    }
    let rt = tokio::runtime::Runtime::new().unwrap();
    for (id, d) in &drawings {
        let path = service.store.join(format!("{id}.tcgx"));
        save_drawing(d, &path, None).map_err(|e| e.to_string())?;
        let cli = tcgx(dir.path(), &["spec", "--csv", path.to_str().unwrap()]);
        ensure!(cli.code == 0, "{id}: CLI exit {} ({})", cli.code, cli.stderr);
        let (status, body, ctype) = rt.block_on(service.call("GET", &format!("/api/drawings/{id}/spec?format=csv"), None, None));
        ensure!(status == 200, "{id}: service status {status}");
        ensure!(ctype.starts_with("text/csv"), "{id}: content type {ctype}");
        ensure!(body == cli.stdout, "{id}: CLI and service CSV differ");
    }
    let worked_path = service.store.join("worked.tcgx");
    let worked_csv = tcgx(dir.path(), &["spec", "--csv", worked_path.to_str().unwrap()]).stdout_str();
    ensure!(worked_csv.lines().count() == 4, "worked CSV:\n{worked_csv}");
    Ok(format!("{} drawings byte-identical", drawings.len()))
}
