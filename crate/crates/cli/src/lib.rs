//! Front end for the `vornav` binary.
//!
//! Exit codes: 0 success, 2 input error, 3 cap exceeded, 4 internal error.

pub mod args;
mod commands;
pub mod manifest;

use std::ffi::OsString;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use clap::Parser;

use vornav::io;
use vornav::lattice::{LatticeBasis, Limits, Target};
use vornav::voronoi::{compute_relevant_vectors, VoronoiCellData};
use vornav::Error;

use crate::args::{Cli, Command, Global, LatticeArgs};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CAP: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Core(Error),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Core(e) if e.is_cap() => EXIT_CAP,
            CliError::Core(
                Error::Parse(_)
                | Error::Shape(_)
                | Error::DependentBasis
                | Error::Contract(_)
                | Error::Cache(_)
                | Error::Io(_)
                | Error::Json(_),
            ) => EXIT_INPUT,
            CliError::Core(_) | CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(Error::Json(e))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("vornav: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Gen(a) => commands::gen(g, a),
        Command::Preprocess(a) => commands::preprocess(g, a),
        Command::Solve(a) => commands::solve(g, a),
        Command::Crossings(a) => commands::crossings(g, a),
        Command::Graphdist(a) => commands::graphdist(g, a),
    }
}

pub(crate) fn limits(g: &Global) -> Limits {
    Limits {
        dim_cap: g.dim_cap,
        ..Limits::default()
    }
}

/// Writer for `--out`, or stdout.
pub(crate) fn output(g: &Global) -> CliResult<Box<dyn Write>> {
    Ok(match &g.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

pub(crate) fn load_basis(path: &Path) -> CliResult<LatticeBasis> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(io::parse_basis(&text)?)
}

/// Reads a target from a JSON file or a comma-separated list.
pub(crate) fn load_target(spec: &str, n: usize) -> CliResult<Target> {
    let path = Path::new(spec);
    let t = if path.is_file() {
        io::parse_target(&std::fs::read_to_string(path)?)?
    } else {
        let coords = spec
            .split(',')
            .map(|s| vornav::rational::parse_scalar(s.trim()))
            .collect::<vornav::Result<Vec<_>>>()?;
        Target::new(coords)
    };
    if t.dim() != n {
        return Err(CliError::Input(format!(
            "target has {} coordinates, lattice has dimension {n}",
            t.dim()
        )));
    }
    Ok(t)
}

/// Loads the relevant vectors from `--cache` if it exists, else computes
/// them and writes the cache when a path was given.
pub(crate) fn load_cell(
    g: &Global,
    lat: &LatticeArgs,
) -> CliResult<(LatticeBasis, VoronoiCellData)> {
    let basis = load_basis(&lat.basis)?;
    if let Some(cache) = &lat.cache {
        if cache.is_file() {
            let file: io::VrCacheFile = io::read_json(cache)?;
            let cell = io::cell_from_cache(&basis, &file)?;
            return Ok((basis, cell));
        }
    }
    let cell = compute_relevant_vectors(&basis, &limits(g))?;
    if let Some(cache) = &lat.cache {
        io::write_json(cache, &io::vr_cache(&cell))?;
    }
    Ok((basis, cell))
}
