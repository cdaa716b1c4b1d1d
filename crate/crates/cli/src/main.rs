use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;
mod report;
mod sweep;

/// Exact diagonalization and recursive spectral relations for
/// particle-conserving Hamiltonians on a ring.
///
/// Every subcommand reads a TOML scenario and writes `report.json`,
/// `metadata.json` and CSV tables into the output directory.
///
/// Exit codes: 0 all checks pass, 1 some check fails, 2 usage or
/// configuration error, 3 eigensolver did not converge.
#[derive(Parser, Debug)]
#[command(name = "fockgap", version, about, long_about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ground and first excited levels of H_n for each n in the range.
    Spectrum(Common),
    /// Charge gaps Δ⁺, Δ⁻ and the neutral gap around each n0 in the range.
    Gaps(Common),
    /// Residuals of the translation, charge and dipole symmetry algebra per
    /// sector, and the kernel translate structure at maximal filling.
    VerifySymmetries(Common),
    /// Runs the configured relation checks (default: key_lemma, relation_I,
    /// relation_II, corollary_cngap and, with a filling, thm_main).
    VerifyRelations(Common),
    /// Gram matrices G^(n), the overlap norms and the block structure at
    /// maximal filling.
    Gram(Common),
    /// Repeats a scenario along one axis and tabulates energies, gaps,
    /// overlap norms and relation slacks.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Scenario file (TOML).
    #[arg(long, short)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, short, default_value = "fockgap-out")]
    pub out: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, env = "FOCKGAP_THREADS")]
    pub threads: Option<usize>,
    /// Which files to write.
    #[arg(long, value_enum, default_value_t = Format::Both)]
    pub format: Format,
    #[command(flatten)]
    pub tol: Tolerances,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Tolerances {
    /// Relation slack tolerance relative to the Hamiltonian scale [1e-8].
    #[arg(long)]
    pub tol_slack: Option<f64>,
    /// Key lemma tolerance relative to the Hamiltonian scale [1e-10].
    #[arg(long)]
    pub tol_key_lemma: Option<f64>,
    /// Eigenpair residual tolerance relative to scale [1e-10].
    #[arg(long)]
    pub tol_residual: Option<f64>,
    /// Eigenvalues with |λ| <= tol * scale count as zero [1e-9].
    #[arg(long)]
    pub tol_kernel: Option<f64>,
    /// Absolute level-grouping tolerance [1e-9].
    #[arg(long)]
    pub tol_grouping_abs: Option<f64>,
    /// Level-grouping tolerance relative to scale [1e-8].
    #[arg(long)]
    pub tol_grouping_rel: Option<f64>,
    /// Symmetry residual tolerance [1e-12].
    #[arg(long)]
    pub tol_symmetry: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// `sites=6,8,10` or `f:<2k>=v1,v2,...` for the pseudopotential
    /// coefficient keyed by 2k.
    #[arg(long)]
    pub axis: String,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    pub fn json(self) -> bool {
        self != Format::Csv
    }

    pub fn csv(self) -> bool {
        self != Format::Json
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Spectrum(c)
        | Command::Gaps(c)
        | Command::VerifySymmetries(c)
        | Command::VerifyRelations(c)
        | Command::Gram(c) => c,
        Command::Sweep(s) => &s.common,
    };
    if let Some(t) = common.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let code = match &cli.command {
        Command::Spectrum(c) => commands::run(commands::Kind::Spectrum, c),
        Command::Gaps(c) => commands::run(commands::Kind::Gaps, c),
        Command::VerifySymmetries(c) => commands::run(commands::Kind::Symmetries, c),
        Command::VerifyRelations(c) => commands::run(commands::Kind::Relations, c),
        Command::Gram(c) => commands::run(commands::Kind::Gram, c),
        Command::Sweep(s) => sweep::run(s),
    };
    ExitCode::from(code)
}
