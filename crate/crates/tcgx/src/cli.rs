//! Command-line interface. Data goes to stdout, diagnostics to stderr; exit
//! code 0 on success, 1 on domain errors, 2 on usage errors. The work
//! profile is checked before any drawing, library or key file is touched.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use tcgx_core::profile::CommandId;
use tcgx_core::svg::{render_drawing, RenderOptions};
use tcgx_core::{Drawing, GridParams, KeyRing, ModuleParams, NodeItem, PipeRouteParams, Point2};

use crate::config::{load_profiles, ProfileConfig};
use crate::error::{Error, Result};
use crate::keyring::{generate_key, KeyRingDir};
use crate::{io, library, now, ops};

#[derive(Debug, Parser)]
#[command(name = "tcgx", version, about = "Parametric drawing kernel: modules, specifications, signed drawing files")]
pub struct Cli {
    /// Work profile restricting the available commands.
    #[arg(long, global = true, env = "TCGX_PROFILE")]
    pub profile: Option<String>,
    /// Profile configuration file (built-in defaults when absent).
    #[arg(long, global = true, env = "TCGX_PROFILES")]
    pub config: Option<PathBuf>,
    /// Key-ring directory with key-<id>.key files.
    #[arg(long, global = true, env = "TCGX_KEYRING")]
    pub keyring: Option<PathBuf>,
    /// Prototype library directory.
    #[arg(long, global = true, env = "TCGX_LIBRARY", default_value = "prototypes")]
    pub library: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Placement {
    /// Module origin as x,y (mm).
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    pub origin: String,
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
}

impl Placement {
    fn origin(&self) -> Result<Point2> {
        ops::parse_point2(&self.origin)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create an empty drawing.
    New {
        file: PathBuf,
        /// Drawing mark; defaults to the first mark served by the profile.
        #[arg(long)]
        mark: Option<String>,
    },
    /// Place a construction grid module.
    AddGrid {
        file: PathBuf,
        /// Spacings between numbered axes, L1,L2,... (mm).
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        /// Spacings between lettered axes, L1,L2,... (mm).
        #[arg(long, allow_hyphen_values = true)]
        y: String,
        #[arg(long)]
        bubble: Option<f64>,
        #[arg(long)]
        overhang: Option<f64>,
        #[command(flatten)]
        placement: Placement,
    },
    /// Place an axonometric pipe route module.
    AddRoute {
        file: PathBuf,
        /// Start point x,y,z (mm).
        #[arg(long, allow_hyphen_values = true)]
        start: String,
        /// Segments "DIR:LEN:DN[:MATERIAL],...", e.g. "+X:2000:50,+Z:500:50".
        #[arg(long, allow_hyphen_values = true)]
        segments: String,
        /// Node item "NODE:KIND:TAG[:SIZE]"; repeatable.
        #[arg(long = "item")]
        items: Vec<String>,
        #[command(flatten)]
        placement: Placement,
    },
    /// Copy a grid module's axes onto a pipe route.
    InsertAxes {
        file: PathBuf,
        #[arg(long)]
        route: u64,
        #[arg(long)]
        grid: u64,
    },
    /// Regenerate every module from its parameters.
    Regen { file: PathBuf },
    /// Move an element by dx, dy (modules move their origin).
    Move {
        file: PathBuf,
        #[arg(long)]
        id: u64,
        #[arg(long, allow_hyphen_values = true)]
        dx: f64,
        #[arg(long, allow_hyphen_values = true)]
        dy: f64,
    },
    /// Scale a module about its origin.
    Stretch {
        file: PathBuf,
        #[arg(long)]
        id: u64,
        #[arg(long)]
        factor: f64,
    },
    /// Delete a plain entity or a module with its geometry.
    Delete {
        file: PathBuf,
        #[arg(long)]
        id: u64,
    },
    /// Summarize a drawing.
    Info {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Print the specification (bill of materials).
    Spec {
        file: PathBuf,
        #[arg(long, conflicts_with = "json")]
        csv: bool,
        #[arg(long)]
        json: bool,
    },
    /// Report position tags used more than once; exit 1 if any.
    CheckDups {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Save a module's parameters to the prototype library.
    ProtoSave {
        file: PathBuf,
        #[arg(long)]
        module: u64,
        #[arg(long)]
        name: String,
        #[arg(long)]
        note: Option<String>,
    },
    /// List the prototype library.
    ProtoList {
        /// construction_grid or pipe_axonometric.
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Place a prototype from the library into a drawing.
    ProtoLoad {
        file: PathBuf,
        #[arg(long)]
        id: String,
        #[command(flatten)]
        placement: Placement,
        /// Also write the prototype preview SVG here.
        #[arg(long)]
        preview: Option<PathBuf>,
    },
    /// Render a drawing to SVG.
    Render {
        file: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sign a drawing with the current key of the key ring.
    Sign { file: PathBuf },
    /// Check a drawing's signature; exit 0 only when valid.
    Verify {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Create a new key in the key-ring directory.
    Keygen {
        /// Key id; a UTC timestamp when omitted.
        #[arg(long)]
        id: Option<String>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
        /// Directory holding <id>.tcgx drawings.
        #[arg(long, default_value = "drawings")]
        store: PathBuf,
    },
}

impl Command {
    pub fn id(&self) -> CommandId {
        match self {
            Command::New { .. } => CommandId::New,
            Command::AddGrid { .. } => CommandId::AddGrid,
            Command::AddRoute { .. } => CommandId::AddRoute,
            Command::InsertAxes { .. } => CommandId::InsertAxes,
            Command::Regen { .. } => CommandId::Regen,
            Command::Move { .. } => CommandId::Move,
            Command::Stretch { .. } => CommandId::Stretch,
            Command::Delete { .. } => CommandId::Delete,
            Command::Info { .. } => CommandId::Info,
            Command::Spec { .. } => CommandId::Spec,
            Command::CheckDups { .. } => CommandId::CheckDups,
            Command::ProtoSave { .. } => CommandId::ProtoSave,
            Command::ProtoList { .. } => CommandId::ProtoList,
            Command::ProtoLoad { .. } => CommandId::ProtoLoad,
            Command::Render { .. } => CommandId::Render,
            Command::Sign { .. } => CommandId::Sign,
            Command::Verify { .. } => CommandId::Verify,
            Command::Keygen { .. } => CommandId::Keygen,
            Command::Serve { .. } => CommandId::Serve,
        }
    }
}

/// Outcome of a command that succeeded but should still exit non-zero
/// (duplicate tags found, signature not valid).
struct Flagged;

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match execute(cli, &mut out) {
        Ok(None) => 0,
        Ok(Some(Flagged)) => 1,
        Err(e) => {
            eprintln!("tcgx: {e}");
            if let Some(v) = e.violations() {
                for violation in v {
                    eprintln!("  {violation}");
                }
            }
            e.exit_code()
        }
    }
}

fn gate(config: &ProfileConfig, requested: Option<&str>, command: CommandId) -> Result<()> {
    let profile = config.select(requested)?;
    if profile.allows(command) {
        Ok(())
    } else {
        Err(Error::NotInProfile {
            command,
            profile: profile.name.clone(),
        })
    }
}

fn keyring_dir(cli_keyring: &Option<PathBuf>) -> Result<&Path> {
    cli_keyring.as_deref().ok_or(Error::NoKeyRing)
}

/// Ring used for checking signatures: the configured directory or empty.
fn verification_ring(cli_keyring: &Option<PathBuf>) -> Result<KeyRing> {
    match cli_keyring {
        Some(dir) => {
            let kr = KeyRingDir::open(dir)?;
            warn_keys(&kr);
            Ok(kr.ring)
        }
        None => Ok(KeyRing::new()),
    }
}

fn warn_keys(kr: &KeyRingDir) {
    for w in &kr.warnings {
        eprintln!("tcgx: warning: skipped key file {w}");
    }
}

fn write_out(out: &mut dyn Write, bytes: &[u8]) -> Result<()> {
    out.write_all(bytes)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io("<stdout>", e))
}

fn json_line<T: serde::Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_out(out, text.as_bytes())
}

/// Loads, edits and saves a drawing. The file is rewritten unsigned.
fn mutate<T>(path: &Path, edit: impl FnOnce(&mut Drawing) -> Result<T>) -> Result<T> {
    let mut drawing = io::load_drawing(path, &KeyRing::new())?.drawing;
    let result = edit(&mut drawing)?;
    io::save_drawing(&drawing, path, None)?;
    Ok(result)
}

fn source_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<Option<Flagged>> {
    let config = load_profiles(cli.config.as_deref())?;
    let command = cli.command.id();
    gate(&config, cli.profile.as_deref(), command)?;

    match cli.command {
        Command::New { file, mark } => {
            let mark = match mark {
                Some(m) => m,
                None => {
                    let profile = config.select(cli.profile.as_deref())?;
                    config
                        .set
                        .marks
                        .iter()
                        .find(|m| profile.marks.contains(*m))
                        .or(config.set.marks.first())
                        .cloned()
                        .ok_or_else(|| Error::Usage("no drawing marks configured; pass --mark".into()))?
                }
            };
            let drawing = Drawing::with_marks(&mark, &config.set.marks)?;
            if file.exists() {
                return Err(Error::Exists {
                    what: "drawing",
                    id: file.display().to_string(),
                });
            }
            io::save_drawing(&drawing, &file, None)?;
        }
        Command::AddGrid {
            file,
            x,
            y,
            bubble,
            overhang,
            placement,
        } => {
            let mut grid = GridParams::new(ops::parse_lengths(&x)?, ops::parse_lengths(&y)?);
            if let Some(b) = bubble {
                grid.bubble_radius = b;
            }
            if let Some(o) = overhang {
                grid.axis_overhang = o;
            }
            let origin = placement.origin()?;
            let id = mutate(&file, |d| Ok(d.add_module(grid.into(), origin, placement.scale)?))?;
            write_out(out, format!("{id}\n").as_bytes())?;
        }
        Command::AddRoute {
            file,
            start,
            segments,
            items,
            placement,
        } => {
            let mut route = PipeRouteParams::new(ops::parse_point3(&start)?, ops::parse_segments(&segments)?);
            route.items = items.iter().map(|s| ops::parse_item(s)).collect::<Result<Vec<NodeItem>>>()?;
            let origin = placement.origin()?;
            let id = mutate(&file, |d| Ok(d.add_module(route.into(), origin, placement.scale)?))?;
            write_out(out, format!("{id}\n").as_bytes())?;
        }
        Command::InsertAxes { file, route, grid } => {
            let added = mutate(&file, |d| {
                Ok(d.insert_grid_axes(tcgx_core::ElementId(route), tcgx_core::ElementId(grid))?)
            })?;
            write_out(out, format!("{added}\n").as_bytes())?;
        }
        Command::Regen { file } => mutate(&file, |d| Ok(d.regen_all()?))?,
        Command::Move { file, id, dx, dy } => {
            mutate(&file, |d| Ok(d.move_element(tcgx_core::ElementId(id), dx, dy)?))?
        }
        Command::Stretch { file, id, factor } => {
            mutate(&file, |d| Ok(d.stretch_module(tcgx_core::ElementId(id), factor)?))?
        }
        Command::Delete { file, id } => mutate(&file, |d| Ok(d.delete_element(tcgx_core::ElementId(id))?))?,
        Command::Info { file, json } => {
            let ring = verification_ring(&cli.keyring)?;
            let loaded = io::load_drawing(&file, &ring)?;
            let info = ops::drawing_info(&loaded.drawing, loaded.status);
            if json {
                json_line(out, &info)?;
            } else {
                write_out(out, ops::info_text(&info).as_bytes())?;
            }
        }
        Command::Spec { file, csv, json } => {
            let drawing = io::load_drawing(&file, &KeyRing::new())?.drawing;
            if csv {
                write_out(out, &ops::spec_csv(&drawing))?;
            } else if json {
                json_line(out, &ops::spec_table(&drawing, &source_name(&file), now()))?;
            } else {
                write_out(out, &ops::spec_text(&drawing))?;
            }
        }
        Command::CheckDups { file, json } => {
            let drawing = io::load_drawing(&file, &KeyRing::new())?.drawing;
            let report = ops::conflicts(&drawing);
            if json {
                json_line(out, &report)?;
            } else {
                write_out(out, ops::conflicts_text(&report).as_bytes())?;
            }
            if !report.conflicts.is_empty() {
                return Ok(Some(Flagged));
            }
        }
        Command::ProtoSave {
            file,
            module,
            name,
            note,
        } => {
            let drawing = io::load_drawing(&file, &KeyRing::new())?.drawing;
            let m = drawing
                .module(tcgx_core::ElementId(module))
                .ok_or(Error::Drawing(tcgx_core::DrawingError::NotFound(tcgx_core::ElementId(module))))?;
            let record = library::save_prototype(&cli.library, &name, &m.params, note.as_deref(), now())?;
            write_out(out, format!("{}\n", record.id).as_bytes())?;
        }
        Command::ProtoList { kind, json } => {
            let kind = kind.as_deref().map(ops::parse_kind).transpose()?;
            let catalog = library::list_prototypes(&cli.library, kind)?;
            for (path, reason) in &catalog.skipped {
                eprintln!("tcgx: warning: skipped {}: {reason}", path.display());
            }
            if json {
                json_line(out, &serde_json::json!({ "records": catalog.records }))?;
            } else {
                let mut text = String::new();
                for r in &catalog.records {
                    text.push_str(&format!("{}\t{}\t{}\n", r.id, r.kind.as_str(), r.name));
                }
                write_out(out, text.as_bytes())?;
            }
        }
        Command::ProtoLoad {
            file,
            id,
            placement,
            preview,
        } => {
            let loaded = library::load_prototype(&cli.library, &id)?;
            if let Some(svg_path) = preview {
                let svg = tcgx_core::svg::render_preview(&loaded.record.params, &RenderOptions::default())
                    .map_err(Error::InvalidParams)?;
                io::atomic_write(&svg_path, &svg)?;
            }
            let origin = placement.origin()?;
            let params: ModuleParams = loaded.record.params;
            let module_id = mutate(&file, |d| Ok(d.add_module(params, origin, placement.scale)?))?;
            write_out(out, format!("{module_id}\n").as_bytes())?;
        }
        Command::Render { file, out: target } => {
            let drawing = io::load_drawing(&file, &KeyRing::new())?.drawing;
            let svg = render_drawing(&drawing, &RenderOptions::default());
            match target {
                Some(path) => io::atomic_write(&path, &svg)?,
                None => write_out(out, &svg)?,
            }
        }
        Command::Sign { file } => {
            let kr = KeyRingDir::open(keyring_dir(&cli.keyring)?)?;
            warn_keys(&kr);
            let block = io::sign_file(&file, &kr.ring)?;
            write_out(out, format!("{}\n", block.key_id).as_bytes())?;
        }
        Command::Verify { file, json } => {
            let ring = verification_ring(&cli.keyring)?;
            let checked = io::verify_file(&file, &ring)?;
            let report = ops::VerifyReport::new(checked.status.clone(), checked.signature.as_ref());
            if json {
                json_line(out, &report)?;
            } else {
                write_out(out, format!("{}\n", checked.status).as_bytes())?;
            }
            if !checked.status.is_valid() {
                return Ok(Some(Flagged));
            }
        }
        Command::Keygen { id } => {
            let dir = keyring_dir(&cli.keyring)?;
            let record = generate_key(dir, id.as_deref(), now())?;
            write_out(out, format!("{}\n", record.key_id).as_bytes())?;
        }
        Command::Serve { port, bind, store } => {
            let state = crate::service::AppState::new(
                store,
                cli.library,
                cli.keyring,
                config,
                cli.profile,
            )?;
            let addr = format!("{bind}:{port}");
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Error::io("<runtime>", e))?;
            runtime.block_on(crate::service::serve(state, &addr))?;
        }
    }
    Ok(None)
}
