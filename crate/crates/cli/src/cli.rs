use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qlti::linalg::{c, C64};
use qlti::{Error, FrequencyGrid, Result};

/// Quantum linear time-invariant systems: quantize, dilate, decompose, detect.
///
/// Exit status: 0 success, 2 input or schema problem, 3 numerical failure,
/// 4 pole or degeneracy guard. QLTI_THREADS caps the worker threads.
#[derive(Debug, Parser)]
#[command(name = "qlti", version, about, long_about = None)]
pub struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Spacing {
    Linear,
    Log,
}

/// Frequency grid over `ω >= 0`.
#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub start: Option<f64>,
    #[arg(long)]
    pub stop: Option<f64>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, value_enum, default_value_t = Spacing::Linear)]
    pub spacing: Spacing,
}

impl GridArgs {
    /// `None` when no grid flag was given.
    pub fn grid(&self) -> Result<Option<FrequencyGrid>> {
        match (self.start, self.stop, self.count) {
            (None, None, None) => Ok(None),
            (Some(a), Some(b), Some(n)) => Ok(Some(match self.spacing {
                Spacing::Linear => FrequencyGrid::linear(a, b, n)?,
                Spacing::Log => FrequencyGrid::logarithmic(a, b, n)?,
            })),
            _ => Err(Error::Grid("--start, --stop and --count go together".into())),
        }
    }

    pub fn require(&self) -> Result<FrequencyGrid> {
        self.grid()?.ok_or_else(|| Error::Grid("a grid is required: --start, --stop, --count".into()))
    }
}

/// `start,stop,count` over `ω >= 0`, linearly spaced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Sweep {
    pub fn grid(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::linear(self.start, self.stop, self.count)
    }
}

pub fn parse_sweep(s: &str) -> std::result::Result<Sweep, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b, n] = parts.as_slice() else {
        return Err("expected START,STOP,COUNT".into());
    };
    Ok(Sweep {
        start: a.parse().map_err(|e| format!("start: {e}"))?,
        stop: b.parse().map_err(|e| format!("stop: {e}"))?,
        count: n.parse().map_err(|e| format!("count: {e}"))?,
    })
}

/// `RE,IM` or a bare real number.
pub fn parse_complex(s: &str) -> std::result::Result<C64, String> {
    let mut it = s.split(',').map(str::trim);
    let re: f64 = it.next().unwrap_or("").parse().map_err(|e| format!("real part: {e}"))?;
    let im: f64 = match it.next() {
        Some(x) => x.parse().map_err(|e| format!("imaginary part: {e}"))?,
        None => 0.0,
    };
    if it.next().is_some() {
        return Err("expected RE,IM".into());
    }
    Ok(c(re, im))
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Group membership of a matfn, or reconstruction of a circuit.
    Check {
        /// qlti.matfn/1, qlti.circuit/1 or qlti.noise/1 document.
        input: PathBuf,
        /// Matrix the circuit should reconstruct.
        #[arg(long)]
        against: Option<PathBuf>,
        /// Relative group residual allowed, ‖MJM†-J‖ / max(1, ‖M‖²).
        #[arg(long, default_value_t = qlti::group::GROUP_TOL)]
        tol: f64,
        /// Relative reconstruction residual allowed with --against.
        #[arg(long, default_value_t = 1e-8)]
        rec_tol: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Sample a qlti.tf/1 transfer-function spec onto a grid.
    Sample {
        spec: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Minimal added-noise modes for a transfer matrix G.
    Quantize {
        input: PathBuf,
        /// Deficit eigenvalues below rank_tol * max(|λ|, 1) are dropped.
        #[arg(long, default_value_t = qlti::quantize::RANK_TOL)]
        rank_tol: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Close a noise model into one square conjugate-symplectic matrix.
    Dilate {
        /// qlti.noise/1 document from `quantize`.
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Factor a conjugate-symplectic matfn into an optical circuit.
    Decompose {
        input: PathBuf,
        /// Also lower each interferometer onto beam splitters and phases.
        #[arg(long)]
        meshes: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Invariant (σ, Δ) of an SDM at each grid frequency.
    Williamson {
        input: PathBuf,
        /// Adds epsilon * I before reducing, for boundary states.
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Open-system uncertainty bound of a noise model per output mode.
    Bound {
        /// qlti.noise/1 document.
        input: PathBuf,
        /// Input SDM; vacuum when absent.
        #[arg(long)]
        input_sdm: Option<PathBuf>,
        /// Noise SDM; vacuum when absent.
        #[arg(long)]
        noise_sdm: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Photocurrent spectra and synodyne tomography.
    Detect(DetectArgs),
    /// Worked examples emitting plot-ready tables.
    #[command(subcommand)]
    Demo(Demo),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DetectMode {
    Homodyne,
    Heterodyne,
    Synodyne,
    General,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// SDM document.
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = DetectMode::Homodyne)]
    pub mode: DetectMode,
    /// Homodyne quadrature angle.
    #[arg(long, default_value_t = 0.0)]
    pub theta: f64,
    /// Homodyne LO amplitude.
    #[arg(long, default_value_t = 1.0)]
    pub amp: f64,
    /// Carrier offset for heterodyne and synodyne.
    #[arg(long, default_value_t = 0.0)]
    pub omega0: f64,
    /// Heterodyne amplitude, RE,IM.
    #[arg(long, value_parser = parse_complex, default_value = "1,0", allow_hyphen_values = true)]
    pub alpha: C64,
    #[arg(long, value_parser = parse_complex, default_value = "1,0", allow_hyphen_values = true)]
    pub alpha_plus: C64,
    #[arg(long, value_parser = parse_complex, default_value = "0,0", allow_hyphen_values = true)]
    pub alpha_minus: C64,
    /// qlti.lo/1 document for --mode general.
    #[arg(long)]
    pub lo: Option<PathBuf>,
    /// Reconstruct the SDM from synodyne probes at every grid frequency.
    #[arg(long)]
    pub tomography: bool,
    /// Where to write the reconstructed SDM.
    #[arg(long)]
    pub sdm_out: Option<PathBuf>,
    /// Analysis frequencies; the SDM grid when absent.
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Demo {
    /// Squeezed light through a lossy detuned cavity.
    Cavity {
        /// Mirror power reflectivity.
        #[arg(long = "R", default_value_t = 0.8)]
        reflectivity: f64,
        #[arg(long, default_value_t = 0.3, allow_hyphen_values = true)]
        phi0: f64,
        /// Input squeeze factor.
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        /// Single-trip time.
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long, value_parser = parse_sweep, default_value = "0,3,61")]
        sweep: Sweep,
        #[arg(long)]
        sdm_out: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Feedback oscillator driven by vacuum.
    Oscillator {
        #[arg(long, default_value_t = 0.5)]
        eta: f64,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long, value_parser = parse_sweep, default_value = "0,3,61")]
        sweep: Sweep,
        #[arg(long)]
        sdm_out: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Two squeezers and an interferometer producing sideband asymmetry.
    TwoMode {
        #[arg(long, default_value_t = 0.3, allow_hyphen_values = true)]
        r1: f64,
        #[arg(long, default_value_t = 0.9, allow_hyphen_values = true)]
        r2: f64,
        /// Frequency the output SDM is attached to.
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        #[arg(long)]
        sdm_out: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}
