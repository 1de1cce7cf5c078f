//! The `neurogeom` command line.
//!
//! Every subcommand can also be driven by a run manifest (`--config`), a flat
//! `key = value` file whose keys are the long flag names and the positional
//! argument names. Flags given on the command line win.
//!
//! Exit codes: 0 success, 1 usage, 2 parse, 3 numeric or degenerate input,
//! 4 I/O, and 5 when `check-topology` finds a valid mesh that is not a
//! topological sphere.

pub mod commands;
pub mod error;
pub mod manifest;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use error::{exit, CliError};
pub use manifest::{ManifestFile, RunManifest, DEFAULT_SEED};
pub use output::{Outputs, Summary};

#[derive(Debug, Parser)]
#[command(name = "neurogeom", version, about = "Geometry from medical image volumes")]
pub struct Cli {
    /// Run manifest of `key = value` lines; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Print the summary as one JSON object.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print header fields of an Analyze pair or NIfTI-1 file.
    Info { input: Option<PathBuf> },
    /// Count foreground voxels and their volume in mm³.
    Volume { input: Option<PathBuf> },
    /// Keep the largest component and close it morphologically.
    FixTopology {
        input: Option<PathBuf>,
        #[arg(long)]
        radius: Option<usize>,
        /// 6, 18 or 26.
        #[arg(long)]
        connectivity: Option<u32>,
        /// Output Analyze prefix (or `.nii` file).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Marching-cubes isosurface to PLY or OBJ.
    ExtractSurface {
        input: Option<PathBuf>,
        #[arg(long)]
        iso: Option<f64>,
        /// Zero-pad the volume by this many voxels first.
        #[arg(long)]
        pad: Option<usize>,
        #[arg(long)]
        swap_xy: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Euler characteristic, genus and defect report; exits 5 unless the
    /// mesh is a topological sphere.
    CheckTopology { input: Option<PathBuf> },
    /// Affine or rigid landmark registration.
    Register {
        #[arg(long)]
        moving: Option<PathBuf>,
        #[arg(long)]
        fixed: Option<PathBuf>,
        #[arg(long)]
        rigid: bool,
        /// 4×4 matrix output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Mesh to transform with the estimate.
        #[arg(long)]
        apply: Option<PathBuf>,
        #[arg(long)]
        out_mesh: Option<PathBuf>,
    },
    /// Vertex-wise average of an ensemble.
    Template {
        ensemble: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Displacement of one subject from a template, as a mesh with a
    /// per-vertex length channel.
    Displacement {
        ensemble: Option<PathBuf>,
        #[arg(long)]
        subject: Option<usize>,
        #[arg(long)]
        template: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fractional anisotropy from six tensor coefficient volumes.
    Fa {
        /// dxx dyy dzz dxy dxz dyz
        #[arg(long, num_args = 6, value_names = ["DXX", "DYY", "DZZ", "DXY", "DXZ", "DYZ"])]
        tensors: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tract file operations.
    Tracts {
        #[command(subcommand)]
        action: TractsCommand,
    },
    /// Gaussian-mixture tissue segmentation of the nonzero voxels.
    Segment {
        input: Option<PathBuf>,
        #[arg(long)]
        classes: Option<usize>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        /// Output prefix: labels as an Analyze pair, posteriors as
        /// `<prefix>_p<k>.nii`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum TractsCommand {
    /// Keep every `stride`-th tract with more than `min-points` points.
    Subsample {
        input: Option<PathBuf>,
        output: Option<PathBuf>,
        #[arg(long)]
        stride: Option<usize>,
        #[arg(long)]
        min_points: Option<usize>,
    },
    /// Head and tail of every tract as CSV.
    Endpoints {
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Info { .. } => "info",
            Command::Volume { .. } => "volume",
            Command::FixTopology { .. } => "fix-topology",
            Command::ExtractSurface { .. } => "extract-surface",
            Command::CheckTopology { .. } => "check-topology",
            Command::Register { .. } => "register",
            Command::Template { .. } => "template",
            Command::Displacement { .. } => "displacement",
            Command::Fa { .. } => "fa",
            Command::Tracts {
                action: TractsCommand::Subsample { .. },
            } => "tracts subsample",
            Command::Tracts {
                action: TractsCommand::Endpoints { .. },
            } => "tracts endpoints",
            Command::Segment { .. } => "segment",
        }
    }
}

/// What a command produced: files to commit, a summary, warnings, and the
/// exit status on success.
#[derive(Debug, Default)]
pub struct Outcome {
    pub summary: Summary,
    pub outputs: Outputs,
    pub warnings: Vec<String>,
    pub code: i32,
}

fn parse_cli(args: &[OsString]) -> Result<Cli, clap::Error> {
    let cli = Cli::try_parse_from(args)?;
    if cli.command.is_some() {
        return Ok(cli);
    }
    // No subcommand: take it from the manifest and parse again.
    let Some(config) = &cli.config else {
        return Ok(cli);
    };
    let Ok(file) = ManifestFile::read(config) else {
        return Ok(cli);
    };
    let Some(command) = file.get("command") else {
        return Ok(cli);
    };
    let mut argv = vec![args.first().cloned().unwrap_or_else(|| "neurogeom".into())];
    argv.extend(command.split_whitespace().map(OsString::from));
    argv.extend(args.iter().skip(1).cloned());
    Cli::try_parse_from(argv)
}

fn execute(cli: Cli) -> Result<Outcome, CliError> {
    let file = match &cli.config {
        Some(p) => ManifestFile::read(p)?,
        None => ManifestFile::default(),
    };
    let command = cli.command.ok_or_else(|| {
        CliError::Usage("no subcommand given (on the command line or as 'command' in the manifest)".into())
    })?;
    if let Some(declared) = file.get("command") {
        let declared = declared.split_whitespace().collect::<Vec<_>>().join(" ");
        if declared != command.name() && !command.name().starts_with(&format!("{declared} ")) {
            return Err(CliError::Usage(format!(
                "manifest is for '{declared}', not '{}'",
                command.name()
            )));
        }
    }
    let base = cli
        .config
        .as_deref()
        .and_then(Path::parent)
        .map(Path::to_path_buf)
        .unwrap_or_default();
    commands::dispatch(command, &file, base)
}

/// Runs one invocation and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match parse_cli(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{rendered}");
                    exit::OK
                }
                _ => {
                    let _ = write!(stderr, "{rendered}");
                    exit::USAGE
                }
            };
        }
    };
    let json = cli.json;
    let result = execute(cli).and_then(|outcome| {
        outcome.outputs.commit()?;
        Ok((outcome.summary, outcome.warnings, outcome.code))
    });
    match result {
        Ok((summary, warnings, code)) => {
            for w in warnings {
                let _ = writeln!(stderr, "warning: {w}");
            }
            let text = if json { summary.to_json() } else { summary.to_text() };
            let _ = stdout.write_all(text.as_bytes());
            code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
