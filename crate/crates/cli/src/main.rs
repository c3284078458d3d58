mod commands;
mod report;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "popdiff", version, about = "Popular differences for matrix patterns")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Largest enumeration any operation may attempt.
    #[arg(long, global = true, default_value_t = 100_000_000)]
    pub guard: u64,
    #[arg(long, global = true, value_enum, default_value_t = BackendArg::Exact)]
    pub backend: BackendArg,
    /// Write the report line here instead of stdout.
    #[arg(long = "json", global = true)]
    pub json: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackendArg {
    Exact,
    Float,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Admissibility and the spectral condition for a pattern.
    Check {
        #[arg(long)]
        spec: String,
    },
    /// Constraint subspaces attached to J = M2·M1⁻¹.
    Subspaces {
        #[arg(long)]
        spec: String,
    },
    /// Pattern count at one difference.
    Count {
        #[arg(long)]
        spec: String,
        #[arg(long = "fn")]
        func: PathBuf,
        /// Difference as a JSON k×n matrix.
        #[arg(long)]
        d: String,
        #[arg(long, default_value_t = 4)]
        points: usize,
    },
    /// Exhaustive popular-difference search.
    Popular {
        #[arg(long)]
        spec: String,
        #[arg(long = "fn")]
        func: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long, default_value_t = 4)]
        points: usize,
    },
    /// Gowers U^s norm.
    Gowers {
        #[arg(long = "fn")]
        func: PathBuf,
        #[arg(long, default_value_t = 2)]
        s: usize,
        #[arg(long, value_enum, default_value_t = GowersArg::Recursive)]
        mode: GowersArg,
    },
    /// Exhaustive equidistribution of a quadratic factor.
    Equidist {
        /// Factor JSON (file or inline).
        #[arg(long)]
        factor: String,
        #[arg(long, value_enum, default_value_t = EquidistKind::Tuple)]
        kind: EquidistKind,
        /// Pattern spec supplying J (tuple kind).
        #[arg(long)]
        spec: Option<String>,
        #[arg(long)]
        restrict_h: bool,
        /// k for the atom distribution.
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
    /// The F_5 counterexample.
    Cex {
        #[command(subcommand)]
        cmd: CexCmd,
    },
    /// Three-point patterns and Bohr sets.
    Threept {
        #[command(subcommand)]
        cmd: ThreeptCmd,
    },
    /// Grid-function files.
    Fnio {
        #[command(subcommand)]
        cmd: FnioCmd,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum GowersArg {
    Direct,
    Recursive,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum EquidistKind {
    LinearQuadratic,
    Tuple,
    Atoms,
}

#[derive(Subcommand, Debug)]
pub enum CexCmd {
    /// Exact expectation table of the core function.
    Core,
    /// Distribution of the 8-tuple for independent directions.
    EightTuple {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        b: Option<String>,
    },
    /// Hypergraphon expectations.
    Hypergraph {
        #[arg(long = "L", default_value_t = 7)]
        l: u32,
        #[arg(long, default_value = "exhaustive-max")]
        method: String,
    },
    /// Monte Carlo of the dressed function against product formulas.
    Dress {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long = "L", default_value_t = 5)]
        l: u32,
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        #[arg(long, default_value = "exhaustive-max")]
        method: String,
    },
    /// Random affine assembly over seeds.
    Assemble {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long = "L", default_value_t = 5)]
        l: u32,
        #[arg(long, default_value_t = 1)]
        gamma: usize,
        #[arg(long, default_value_t = 20)]
        seeds: usize,
    },
    /// End-to-end report with per-seed maximal ratios.
    Report {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long = "L", default_value_t = 7)]
        l: u32,
        #[arg(long, default_value_t = 1)]
        gamma: usize,
        #[arg(long, default_value_t = 10)]
        seeds: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum ThreeptCmd {
    /// Enumerate a Bohr set.
    Bohr {
        /// Group spec JSON (file or inline).
        #[arg(long)]
        spec: Option<String>,
        /// Cyclic modulus, when no spec is given.
        #[arg(long)]
        modulus: Option<u32>,
        /// Characters as a JSON list of vectors.
        #[arg(long, default_value = "[]")]
        chars: String,
        /// Radius, e.g. 3/10 or 0.3.
        #[arg(long)]
        delta: String,
        /// Also build the derived set B′ (needs --spec).
        #[arg(long)]
        derived: bool,
    },
    /// Smoothed three-point count.
    Count {
        #[arg(long)]
        spec: String,
        #[arg(long = "fn")]
        func: PathBuf,
        #[arg(long, default_value = "[]")]
        chars: String,
        #[arg(long)]
        delta: String,
        #[arg(long, value_enum, default_value_t = CountArg::Both)]
        method: CountArg,
    },
    /// Regularity decomposition f = f1 + f2 + f3.
    Decompose {
        #[arg(long = "fn")]
        func: PathBuf,
        #[arg(long, default_value_t = 0.2)]
        eps: f64,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[arg(long, default_value = "[]")]
        s0: String,
        #[arg(long, value_enum, default_value_t = GrowthArg::Exp2)]
        growth: GrowthArg,
    },
    /// Popular differences for x, x+M1 d, x+M2 d.
    Search {
        #[arg(long)]
        spec: String,
        #[arg(long = "fn")]
        func: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
    },
    /// Patterns in a subset of [0, N)^k through Z/pZ.
    Lift {
        #[arg(long = "N")]
        n: u64,
        #[arg(long, default_value = "[[1]]")]
        m1: String,
        #[arg(long, default_value = "[[2]]")]
        m2: String,
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = SetArg::Random)]
        set: SetArg,
        #[arg(long, default_value_t = 0.5)]
        density: f64,
        /// JSON list of points; overrides --set.
        #[arg(long)]
        set_file: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum CountArg {
    Direct,
    Fourier,
    Both,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum GrowthArg {
    Exp2,
    Linear,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum SetArg {
    All,
    Even,
    Random,
}

#[derive(Subcommand, Debug)]
pub enum FnioCmd {
    /// Write a random grid function.
    Random {
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = FnKind::Rational)]
        kind: FnKind,
        /// Density for indicators.
        #[arg(long, default_value_t = 0.5)]
        density: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Read, rewrite and compare.
    Roundtrip {
        #[arg(long = "fn")]
        func: PathBuf,
    },
    /// Header and summary of a file.
    Info {
        #[arg(long = "fn")]
        func: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum FnKind {
    Rational,
    Float,
    Complex,
    Indicator,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    ExitCode::from(report::run(&cli, &argv[1..]))
}
