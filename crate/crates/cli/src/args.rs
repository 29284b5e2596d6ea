use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cvarbound::report::LayerFidelity;
use serde::Serialize;

/// Seeded experiments on CVaR bounds for noisy quantum sampling.
#[derive(Parser, Debug)]
#[command(name = "cvarbound", version)]
pub struct Cli {
    /// Output directory. Falls back to $CVARBOUND_OUT, then ./cvarbound-out.
    #[arg(long, global = true, overrides_with = "out")]
    pub out: Option<PathBuf>,

    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true, overrides_with = "threads")]
    pub threads: Option<usize>,

    /// Re-run the command recorded in a manifest and check its outputs match.
    #[arg(long, value_name = "MANIFEST")]
    pub replay: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Generate a problem instance.
    GenProblem(GenProblem),
    /// Build a QAOA circuit and sample it under noise.
    RunQaoa(RunQaoa),
    /// CVaR estimates of sampled objective values.
    Cvar(CvarArgs),
    /// Error-cancelled expectation of the objective.
    Pec(PecArgs),
    /// Bound report with CDF export for sampled objective values.
    BoundsReport(BoundsReport),
    /// Bootstrap variance of the CVaR estimator across alpha levels.
    BootstrapVar(BootstrapVar),
    /// Sampling overheads from measured layer fidelities.
    Overhead(OverheadArgs),
    /// Layer fidelity needed for depth-p QAOA to beat random sampling.
    MinLf(MinLf),
    /// Compare objective distributions with and without Pauli twirling.
    TwirlCompare(TwirlCompare),
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    /// MAXCUT on a random 3-regular graph.
    #[value(name = "maxcut-3reg")]
    Maxcut3Reg,
    /// Random ±1 cubic spin glass on a heavy-hex lattice.
    HeavyHex,
}

#[derive(Args, Debug, Serialize)]
pub struct GenProblem {
    #[arg(long, value_enum)]
    pub kind: ProblemKind,
    /// Node count for maxcut-3reg.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Heavy-hex shape: "127" or "<rows>x<cells>".
    #[arg(long, default_value = "127")]
    pub shape: String,
    #[arg(long)]
    pub seed: u64,
}

/// Where the circuit comes from and how noise is attached.
#[derive(Args, Debug, Serialize)]
pub struct CircuitSource {
    /// Circuit JSON. With --problem, the problem only supplies the objective.
    #[arg(long, conflicts_with_all = ["instance", "gamma", "beta", "params", "grid"])]
    pub circuit: Option<PathBuf>,
    /// Problem JSON, compiled to QAOA with the generic layout.
    #[arg(long, conflicts_with = "instance")]
    pub problem: Option<PathBuf>,
    /// Heavy-hex instance JSON, compiled with the parity layout.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Phase angles, one per QAOA round.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub gamma: Vec<f64>,
    /// Mixer angles, one per QAOA round.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub beta: Vec<f64>,
    /// QAOA parameter JSON: {"gammas": [...], "betas": [...]}.
    #[arg(long, conflicts_with_all = ["gamma", "beta", "grid"])]
    pub params: Option<PathBuf>,
    /// Depth-one grid search with this many points per angle.
    #[arg(long, conflicts_with_all = ["gamma", "beta"])]
    pub grid: Option<usize>,
    /// Uniform noise: on each CNOT, all 15 non-identity two-qubit Paulis at rate λ/15.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_per_cnot: Option<f64>,
    /// Noise model JSON on the full register, attached before every CNOT layer.
    #[arg(long, conflicts_with = "lambda_per_cnot")]
    pub noise: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct RunQaoa {
    #[command(flatten)]
    pub source: CircuitSource,
    #[arg(long)]
    pub shots: u64,
    #[arg(long)]
    pub seed: u64,
    /// Sample from the exact noisy distribution rather than trajectories.
    #[arg(long)]
    pub exact: bool,
    /// Largest register for the exact density-matrix path.
    #[arg(long, default_value_t = 10)]
    pub dense_limit: usize,
    /// Spread the shots evenly over this many random Pauli twirls.
    #[arg(long, conflicts_with = "exact")]
    pub twirls: Option<u64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SideArg {
    Lower,
    Upper,
    Both,
}

#[derive(Args, Debug, Serialize)]
pub struct CvarArgs {
    /// Sample CSV (bitstring,count).
    #[arg(long)]
    pub samples: PathBuf,
    /// Problem JSON giving the objective.
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long = "alpha", required = true)]
    pub alphas: Vec<f64>,
    #[arg(long, value_enum, default_value = "both")]
    pub side: SideArg,
    /// Bootstrap resamples for a variance estimate at each level.
    #[arg(long, requires = "seed")]
    pub bootstrap: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Noise-free mean to calibrate alpha against.
    #[arg(long, allow_negative_numbers = true)]
    pub reference: Option<f64>,
    /// CNOT count, turning a calibrated alpha into a per-CNOT gamma.
    #[arg(long)]
    pub cnots: Option<u64>,
    /// Post-select bitstrings of this Hamming weight.
    #[arg(long, requires_all = ["m_lower", "m_upper"])]
    pub hamming_weight: Option<u32>,
    /// Lower bound of the objective on feasible bitstrings.
    #[arg(long, allow_negative_numbers = true)]
    pub m_lower: Option<f64>,
    /// Upper bound of the objective on feasible bitstrings.
    #[arg(long, allow_negative_numbers = true)]
    pub m_upper: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct PecArgs {
    #[command(flatten)]
    pub source: CircuitSource,
    #[arg(long)]
    pub shots: u64,
    #[arg(long)]
    pub seed: u64,
    /// Also write bitstrings drawn from the sign-stripped mixture.
    #[arg(long)]
    pub write_samples: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct BoundsReport {
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, conflicts_with_all = ["sqrt_gamma", "lf"])]
    pub alpha: Option<f64>,
    /// Noise strength; alpha is 1/sqrt(gamma).
    #[arg(long, conflicts_with = "lf")]
    pub sqrt_gamma: Option<f64>,
    /// Layer fidelity as <lf>:<cnots>; with --cnots sets alpha from the overhead chain.
    #[arg(long = "lf", requires = "cnots")]
    pub lf: Vec<LayerFidelity>,
    /// CNOTs in the sampled circuit.
    #[arg(long)]
    pub cnots: Option<u64>,
    /// Noise-free mean, checked against the bounds and used for calibration.
    #[arg(long, allow_negative_numbers = true)]
    pub reference: Option<f64>,
    #[arg(long, allow_negative_numbers = true, conflicts_with = "brute_force")]
    pub optimum: Option<f64>,
    /// Find the optimum by enumeration.
    #[arg(long)]
    pub brute_force: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct BootstrapVar {
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long = "alpha", required = true)]
    pub alphas: Vec<f64>,
    /// Tail to average; defaults to the upper tail for maximization, lower otherwise.
    #[arg(long, value_enum)]
    pub side: Option<SideArg>,
    #[arg(long, default_value_t = 1000)]
    pub resamples: usize,
    /// Resample size; defaults to the number of samples.
    #[arg(long)]
    pub size: Option<u64>,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct OverheadArgs {
    /// Layer fidelity as <lf>:<cnots>, repeatable.
    #[arg(long = "lf", required = true)]
    pub lf: Vec<LayerFidelity>,
    /// CNOT count of a circuit, repeatable; one row each.
    #[arg(long = "cnots", required = true)]
    pub cnots: Vec<u64>,
    /// Calibrated alpha for each --cnots row, in order.
    #[arg(long = "alpha-prime")]
    pub alpha_prime: Vec<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct MinLf {
    /// QAOA depth.
    #[arg(long)]
    pub p: u32,
    /// Qubit count; adds the per-CNOT threshold for dense layers.
    #[arg(long)]
    pub n: Option<u32>,
}

#[derive(Args, Debug, Serialize)]
pub struct TwirlCompare {
    #[command(flatten)]
    pub source: CircuitSource,
    #[arg(long)]
    pub twirls: u64,
    #[arg(long)]
    pub shots_per_twirl: u64,
    #[arg(long)]
    pub seed: u64,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenProblem(_) => "gen-problem",
            Command::RunQaoa(_) => "run-qaoa",
            Command::Cvar(_) => "cvar",
            Command::Pec(_) => "pec",
            Command::BoundsReport(_) => "bounds-report",
            Command::BootstrapVar(_) => "bootstrap-var",
            Command::Overhead(_) => "overhead",
            Command::MinLf(_) => "min-lf",
            Command::TwirlCompare(_) => "twirl-compare",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Command::GenProblem(a) => Some(a.seed),
            Command::RunQaoa(a) => Some(a.seed),
            Command::Cvar(a) => a.seed,
            Command::Pec(a) => Some(a.seed),
            Command::BootstrapVar(a) => Some(a.seed),
            Command::TwirlCompare(a) => Some(a.seed),
            Command::BoundsReport(_) | Command::Overhead(_) | Command::MinLf(_) => None,
        }
    }
}
