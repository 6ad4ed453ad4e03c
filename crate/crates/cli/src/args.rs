use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Parser, Debug)]
#[command(
    name = "qc3d",
    version,
    about = "Quasiconformal representation toolkit for tetrahedral mappings"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default)]
pub struct GlobalArgs {
    /// Relative residual tolerance of the conjugate gradient solves.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Iteration cap per solve (default 10·n).
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for every random choice.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub report: Option<ReportFormat>,
    /// TOML file with defaults for any of the options; flags take
    /// precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum BoundaryKind {
    /// Sliding conditions on the six bounding-box faces.
    #[default]
    Faces,
    /// All coordinates of every surface vertex.
    Surface,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum LandmarkModeArg {
    #[default]
    Endpoints,
    EveryFrame,
}

#[derive(Args, Debug)]
pub struct MeshArgs {
    /// Source mesh: a JSON mesh document, or a tetgen `.node`/`.ele` pair
    /// given by either file or by their common stem.
    #[arg(long)]
    pub mesh: PathBuf,
    /// Vertex images as a `.node` file (overrides images in a JSON mesh).
    #[arg(long)]
    pub images: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute the representation of a mapping.
    Rep {
        #[command(flatten)]
        input: MeshArgs,
        /// Output file: `.json` for JSON, anything else for QCR3.
        #[arg(short, long)]
        output: PathBuf,
        /// Accept folded tets instead of failing.
        #[arg(long)]
        permissive: bool,
    },
    /// Rebuild a mapping from a representation and boundary conditions.
    Reconstruct {
        #[arg(long)]
        mesh: PathBuf,
        /// Representation, QCR3 or JSON.
        #[arg(long)]
        rep: PathBuf,
        /// Boundary conditions as JSON `{"u": [[i, x], ...], "v": ..., "w": ...}`.
        #[arg(long)]
        bc: Option<PathBuf>,
        /// Derive boundary values from `--truth`.
        #[arg(long, value_enum, requires = "truth")]
        boundary: Option<BoundaryKind>,
        /// Ground-truth images (`.node`) for the error report.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Output images: `.json` mesh document or `.node`.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Spectrally compress a mapping.
    Compress {
        #[command(flatten)]
        input: MeshArgs,
        /// Number of retained coefficients per component.
        #[arg(long)]
        threshold: Option<usize>,
        /// Eigenpairs to compute when no spectrum cache is given
        /// (default: the threshold).
        #[arg(long)]
        k: Option<usize>,
        /// Spectrum cache; read when present, written otherwise.
        #[arg(long)]
        spectrum: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        boundary: BoundaryKind,
        /// Write a threshold sweep (k, k/2, k/4, k/8) as CSV.
        #[arg(long)]
        sweep_csv: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Rebuild a mapping from a compressed file.
    Decompress {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Spectrum cache; computed from the mesh when absent.
        #[arg(long)]
        spectrum: Option<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Keyframe interpolation.
    #[command(subcommand)]
    Interp(InterpCommand),
    /// Smallest Laplace–Beltrami eigenpairs, with coefficient tables when
    /// images are given.
    Spectrum {
        #[command(flatten)]
        input: MeshArgs,
        #[arg(long)]
        k: Option<usize>,
        /// Write the spectrum as a QSP3 cache.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write `index,lambda,residual[,xi_*]` rows.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Check a mesh, optional mapping and optional boundary conditions.
    Validate {
        #[command(flatten)]
        input: MeshArgs,
        #[arg(long)]
        bc: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum InterpCommand {
    /// Embed a keyframe surface in the unit cube and seed interior points
    /// for tetrahedralization.
    Seed {
        /// Surface vertices as a `.node` file.
        #[arg(long)]
        surface: PathBuf,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        kappa: Option<f64>,
        /// Output `.node` with the embedded surface first, then the kept
        /// samples.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Reconstruct intermediate frames between the identity and a mapping.
    Frames {
        #[command(flatten)]
        input: MeshArgs,
        #[arg(long)]
        frames: Option<usize>,
        /// Landmark vertex index file, one index per line.
        #[arg(long)]
        landmarks: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        landmark_mode: LandmarkModeArg,
        /// Directory for `frame_NNN.node`, `mesh.ele` and `manifest.json`.
        #[arg(long)]
        out_dir: PathBuf,
    },
}
