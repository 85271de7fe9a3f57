//! Command-line front end.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numeric failure (selection ran
//! out of candidates, no robust part), 4 I/O failure.

pub mod demo;
pub mod io;
pub mod poly;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

use crate::basis_builder::{
    build_set, decompose_all, evaluate_set, select_robust, symbols_in_scope, BasisError,
    InvariantSet, Mode, SetCache,
};
use crate::independence::{IndependenceError, SelectionConfig};
use crate::moments::{
    moments_from_grid, moments_from_grid_rescaled, spherical_moments, spherical_moments_sampled,
    volumetric_moments, Flavor, MomentError, MomentSet, DEFAULT_MAX_ORDER,
};
use crate::patterns::TensorSymbol;

use self::io::InputError;
use self::poly::ParseError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Environment variable naming the basis cache directory.
pub const CACHE_ENV: &str = "MOMENTA_CACHE";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Input(#[from] InputError),
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error("{path}: {msg}")]
    Json { path: PathBuf, msg: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(InputError::Io { .. }) => EXIT_IO,
            CliError::Basis(BasisError::Io(_)) => EXIT_IO,
            CliError::Basis(BasisError::NoRobustCandidate)
            | CliError::Basis(BasisError::RobustVanishes(_))
            | CliError::Basis(BasisError::Selection(IndependenceError::TargetNotReached {
                ..
            }))
            | CliError::Basis(BasisError::Selection(IndependenceError::TooManyCandidates(_))) => {
                EXIT_NUMERIC
            }
            _ => EXIT_INVALID,
        }
    }

    fn hint(&self) -> Option<&'static str> {
        match self {
            CliError::Basis(BasisError::NoRobustCandidate)
            | CliError::Basis(BasisError::RobustVanishes(_)) => {
                Some("rerun with --mode minimal, which does not depend on a robust part")
            }
            _ => None,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "momenta",
    version,
    about = "Rotation-invariant moment descriptors of 3D fields"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute moment tensors of a field.
    Moments(MomentsArgs),
    /// Generate an invariant set.
    Basis(BasisArgs),
    /// Evaluate an invariant set on a field.
    Eval(EvalArgs),
    /// Compare two cubic fields under three invariant sets.
    Demo(DemoArgs),
    /// Write one DOT graph per member of an invariant set.
    ExportDot(ExportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FlavorArg {
    Volumetric,
    Spherical,
}

impl From<FlavorArg> for Flavor {
    fn from(f: FlavorArg) -> Self {
        match f {
            FlavorArg::Volumetric => Flavor::Volumetric,
            FlavorArg::Spherical => Flavor::Spherical,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Specific,
    Minimal,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct FieldInput {
    /// Polynomial in x, y, z, e.g. "3*x*y^2 - sqrt(2)*z^3".
    #[arg(long)]
    expr: Option<String>,
    /// Voxel file (MOMV header, f32 values).
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Sphere samples CSV (theta,phi,value,weight).
    #[arg(long)]
    samples: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MomentsArgs {
    #[command(flatten)]
    input: FieldInput,
    #[arg(long, default_value_t = 3)]
    lmax: usize,
    #[arg(long, value_enum, default_value = "volumetric")]
    flavor: FlavorArg,
    /// Scale grid coordinates so the nonzero support fits the unit ball.
    #[arg(long)]
    rescale: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BasisArgs {
    #[arg(long)]
    lmax: usize,
    #[arg(long, value_enum, default_value = "specific")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "volumetric")]
    flavor: FlavorArg,
    /// Robust part as "order,rank".
    #[arg(long)]
    robust: Option<String>,
    /// Moment set JSON used to choose the robust part from data.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Cache directory (defaults to $MOMENTA_CACHE when set).
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long)]
    no_cache: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write one DOT file per member here.
    #[arg(long)]
    dot_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Invariant set JSON.
    #[arg(long)]
    set: PathBuf,
    #[command(flatten)]
    input: EvalInput,
    #[arg(long)]
    rescale: bool,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct EvalInput {
    #[arg(long)]
    expr: Option<String>,
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Precomputed moment set JSON.
    #[arg(long)]
    moments: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DemoArgs {
    /// Also check a randomly rotated copy of the first field.
    #[arg(long)]
    rotate: bool,
    #[arg(long, value_enum, default_value = "volumetric")]
    flavor: FlavorArg,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long)]
    set: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// Validated settings of a `basis` run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub lmax: usize,
    pub flavor: Flavor,
    pub mode: Mode,
    pub robust: Option<TensorSymbol>,
    pub selection: SelectionConfig,
    pub cache_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.lmax > DEFAULT_MAX_ORDER {
            return Err(CliError::Usage(format!(
                "--lmax {} exceeds {DEFAULT_MAX_ORDER}",
                self.lmax
            )));
        }
        self.selection
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        if let Some(r) = self.robust {
            if self.mode == Mode::Minimal {
                return Err(CliError::Usage(
                    "--robust only applies to --mode specific".into(),
                ));
            }
            if r.source_order() > self.lmax {
                return Err(CliError::Usage(format!("robust part {r} is above --lmax")));
            }
            if self.flavor == Flavor::Spherical && r.rank() != r.source_order() {
                return Err(CliError::Usage(format!(
                    "robust part {r} is not used for spherical input"
                )));
            }
        }
        Ok(())
    }
}

fn parse_robust(text: &str) -> Result<TensorSymbol, CliError> {
    let bad = || CliError::Usage(format!("--robust expects \"order,rank\", got '{text}'"));
    let (l, p) = text.split_once(',').ok_or_else(bad)?;
    let l: usize = l.trim().parse().map_err(|_| bad())?;
    let p: usize = p.trim().parse().map_err(|_| bad())?;
    if p > l || (l - p) % 2 == 1 {
        return Err(CliError::Usage(format!("no part of rank {p} in order {l}")));
    }
    Ok(TensorSymbol::irreducible(l, p))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => io::write_file(path, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(())
}

fn read_json(path: &Path) -> Result<serde_json::Value, CliError> {
    let bytes = io::read_file(path)?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Json {
        path: path.into(),
        msg: e.to_string(),
    })
}

fn load_moments(path: &Path) -> Result<MomentSet, CliError> {
    MomentSet::from_json(&read_json(path)?).map_err(|e| CliError::Json {
        path: path.into(),
        msg: e.to_string(),
    })
}

fn load_set(path: &Path) -> Result<InvariantSet, CliError> {
    InvariantSet::from_json(&read_json(path)?).map_err(|e| CliError::Json {
        path: path.into(),
        msg: e.to_string(),
    })
}

fn field_moments(
    expr: Option<&str>,
    grid: Option<&Path>,
    samples: Option<&Path>,
    lmax: usize,
    flavor: Flavor,
    rescale: bool,
) -> Result<MomentSet, CliError> {
    if rescale && grid.is_none() {
        return Err(CliError::Usage(
            "--rescale applies to --grid input only".into(),
        ));
    }
    if let Some(text) = expr {
        let f = poly::parse_polynomial(text)?;
        return Ok(match flavor {
            Flavor::Volumetric => volumetric_moments(&f, lmax)?,
            Flavor::Spherical => spherical_moments(&f, lmax)?,
        });
    }
    if let Some(path) = grid {
        if flavor == Flavor::Spherical {
            return Err(MomentError::FlavorMismatch(Flavor::Volumetric, Flavor::Spherical).into());
        }
        let field = io::parse_voxels(path, &io::read_file(path)?)?;
        return Ok(if rescale {
            moments_from_grid_rescaled(&field, lmax)?
        } else {
            moments_from_grid(&field, lmax)?
        });
    }
    let path = samples.expect("clap requires one input");
    if flavor == Flavor::Volumetric {
        return Err(MomentError::FlavorMismatch(Flavor::Spherical, Flavor::Volumetric).into());
    }
    let bytes = io::read_file(path)?;
    let text = String::from_utf8_lossy(&bytes);
    Ok(spherical_moments_sampled(
        &io::parse_sphere_csv(path, &text)?,
        lmax,
    )?)
}

fn cmd_moments(a: MomentsArgs) -> Result<(), CliError> {
    let m = field_moments(
        a.input.expr.as_deref(),
        a.input.grid.as_deref(),
        a.input.samples.as_deref(),
        a.lmax,
        a.flavor.into(),
        a.rescale,
    )?;
    emit(
        a.out.as_deref(),
        &format!(
            "{}\n",
            serde_json::to_string_pretty(&m.to_json()).expect("JSON value")
        ),
    )
}

fn write_dots(set: &InvariantSet, dir: &Path) -> Result<usize, CliError> {
    std::fs::create_dir_all(dir).map_err(|source| InputError::Io {
        path: dir.into(),
        source,
    })?;
    for (i, m) in set.members.iter().enumerate() {
        io::write_file(
            &dir.join(format!("member_{:03}.dot", i + 1)),
            m.pattern.to_dot().as_bytes(),
        )?;
    }
    Ok(set.len())
}

fn cmd_basis(a: BasisArgs) -> Result<(), CliError> {
    let cfg = RunConfig {
        lmax: a.lmax,
        flavor: a.flavor.into(),
        mode: match a.mode {
            ModeArg::Specific => Mode::Specific,
            ModeArg::Minimal => Mode::Minimal,
        },
        robust: a.robust.as_deref().map(parse_robust).transpose()?,
        selection: SelectionConfig {
            seed: a.seed,
            tol: a.tol,
            ..Default::default()
        },
        cache_dir: if a.no_cache {
            None
        } else {
            a.cache_dir
                .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
        },
    };
    cfg.validate()?;
    let mut robust = cfg.robust;
    if let (Some(path), Mode::Specific, None) = (&a.reference, cfg.mode, robust) {
        let m = load_moments(path)?;
        if m.flavor() != cfg.flavor {
            return Err(MomentError::FlavorMismatch(m.flavor(), cfg.flavor).into());
        }
        if m.lmax() < cfg.lmax {
            return Err(CliError::Usage(format!(
                "reference moments stop at order {}",
                m.lmax()
            )));
        }
        let trimmed = MomentSet::new(m.flavor(), m.tensors()[..=cfg.lmax].to_vec())?;
        robust = select_robust(&decompose_all(&trimmed)?, cfg.flavor)?;
    }
    let set = match &cfg.cache_dir {
        Some(dir) => SetCache::new(dir).get_or_build(
            cfg.mode,
            cfg.flavor,
            cfg.lmax,
            robust,
            &cfg.selection,
        )?,
        None => build_set(
            &symbols_in_scope(cfg.lmax, cfg.flavor),
            cfg.mode,
            robust,
            cfg.flavor,
            cfg.lmax,
            &cfg.selection,
        )?,
    };
    if let Some(dir) = &a.dot_dir {
        write_dots(&set, dir)?;
    }
    emit(
        a.out.as_deref(),
        &format!(
            "{}\n",
            serde_json::to_string_pretty(&set.to_json()).expect("JSON value")
        ),
    )
}

fn cmd_eval(a: EvalArgs) -> Result<(), CliError> {
    let set = load_set(&a.set)?;
    let m = match &a.input.moments {
        Some(path) => {
            if a.rescale {
                return Err(CliError::Usage(
                    "--rescale applies to --grid input only".into(),
                ));
            }
            load_moments(path)?
        }
        None => field_moments(
            a.input.expr.as_deref(),
            a.input.grid.as_deref(),
            a.input.samples.as_deref(),
            set.lmax,
            set.flavor,
            a.rescale,
        )?,
    };
    let values = evaluate_set(&set, &m)?;
    let text = match a.format {
        FormatArg::Json => format!(
            "{}\n",
            serde_json::to_string_pretty(&json!({
                "schema": crate::SCHEMA,
                "mode": set.mode.to_string(),
                "flavor": set.flavor,
                "lmax": set.lmax,
                "seed": set.seed,
                "values": values,
            }))
            .expect("JSON value")
        ),
        FormatArg::Csv => {
            let cols: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
            format!("{}\n", cols.join(","))
        }
    };
    emit(a.out.as_deref(), &text)
}

fn cmd_demo(a: DemoArgs) -> Result<(), CliError> {
    let report = demo::discriminate(&demo::DemoOptions {
        flavor: a.flavor.into(),
        rotate: a.rotate,
        seed: a.seed,
    })?;
    print!("{report}");
    Ok(())
}

fn cmd_export_dot(a: ExportArgs) -> Result<(), CliError> {
    let set = load_set(&a.set)?;
    let n = write_dots(&set, &a.out)?;
    println!("wrote {n} files to {}", a.out.display());
    Ok(())
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
        }
    };
    let result = match cli.cmd {
        Command::Moments(a) => cmd_moments(a),
        Command::Basis(a) => cmd_basis(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Demo(a) => cmd_demo(a),
        Command::ExportDot(a) => cmd_export_dot(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(h) = e.hint() {
                eprintln!("hint: {h}");
            }
            e.exit_code()
        }
    }
}
