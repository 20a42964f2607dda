//! `lonestar` command-line front end.
//!
//! Every flag may also come from a `--config` file of `key = value` lines
//! whose keys are the long flag names; flags given on the command line win.
//! Exit codes: 0 success (solver warnings included), 1 runtime failure,
//! 2 configuration error, 3 I/O error.

mod config;
mod run;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "lonestar", version, about = "Full-duplex beam codebook design and evaluation")]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a conventional or Taylor-tapered codebook.
    Codebook(CodebookArgs),
    /// Design coupling-minimizing transmit and receive codebooks.
    Design(DesignArgs),
    /// Monte Carlo evaluation of one scenario.
    Eval(ScenarioArgs),
    /// Monte Carlo sweep over link-budget or design parameters.
    Sweep(ScenarioArgs),
    /// Draw from the stochastic self-interference model.
    Simodel(SimodelArgs),
    /// Beam pattern cut of one beam.
    Pattern(PatternArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Key = value file providing defaults for any flag.
    #[arg(long)]
    #[allow(dead_code)] // consumed before parsing
    config: Option<std::path::PathBuf>,
}

#[derive(Debug, Args, Clone)]
struct ArrayArgs {
    #[arg(long, default_value_t = 8)]
    rows: usize,
    #[arg(long, default_value_t = 8)]
    cols: usize,
    /// Coverage grid `az_start:az_step:az_stop,el_start:el_step:el_stop` in degrees.
    #[arg(long, default_value = "-60:15:60,-30:15:30", allow_hyphen_values = true)]
    grid: String,
    /// Phase and amplitude bits, `phase,amp`.
    #[arg(long, default_value = "8,8")]
    bits: String,
    /// Attenuator step in dB.
    #[arg(long, default_value_t = 0.5)]
    atten_step: f64,
}

#[derive(Debug, Args)]
struct CodebookArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    array: ArrayArgs,
    /// `cbf` or `taylor`.
    #[arg(long)]
    kind: String,
    /// Taylor sidelobe level in dB.
    #[arg(long, default_value_t = 25.0)]
    sll: f64,
    #[arg(long, default_value_t = 4)]
    nbar: usize,
    /// Output CSV; a `.meta` sidecar is written next to it. Stdout when absent.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Debug, Args, Clone)]
struct DesignOpts {
    /// Coverage budget for both codebooks.
    #[arg(long, default_value_t = 0.031622776601683794)]
    sigma_sq: f64,
    #[arg(long)]
    sigma_sq_tx: Option<f64>,
    #[arg(long)]
    sigma_sq_rx: Option<f64>,
    /// Channel estimation error variance.
    #[arg(long, default_value_t = 0.0)]
    eps_sq: f64,
    /// `spherical` or `mixture`.
    #[arg(long, default_value = "spherical")]
    channel: String,
    /// Scattering variance of the mixture channel.
    #[arg(long, default_value_t = 0.0)]
    zeta_sq: f64,
    /// Channel estimate CSV (`m,n,re,im`), replacing the generated channel.
    #[arg(long)]
    channel_file: Option<std::path::PathBuf>,
    #[arg(long, default_value_t = 4)]
    outer_iters: usize,
    /// `full` or `beamwise`.
    #[arg(long, default_value = "full")]
    mode: String,
    /// Solver tolerance.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct DesignArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    array: ArrayArgs,
    #[command(flatten)]
    design: DesignOpts,
    /// Directory for `f.csv`, `w.csv` and `report.csv`.
    #[arg(long, default_value = ".")]
    out_dir: std::path::PathBuf,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    array: ArrayArgs,
    #[command(flatten)]
    design: DesignOpts,
    /// `cbf`, `taylor`, `lonestar` or `file`.
    #[arg(long)]
    codebook: String,
    #[arg(long, default_value_t = 25.0)]
    sll: f64,
    #[arg(long, default_value_t = 4)]
    nbar: usize,
    /// Transmit codebook CSV for `--codebook file`.
    #[arg(long)]
    f_file: Option<std::path::PathBuf>,
    /// Receive codebook CSV for `--codebook file`.
    #[arg(long)]
    w_file: Option<std::path::PathBuf>,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    /// Maximum downlink SNR in dB (sweep: list or range).
    #[arg(long, default_value = "10", allow_hyphen_values = true)]
    snrbar_tx: String,
    /// Maximum uplink SNR in dB (sweep: list or range).
    #[arg(long, default_value = "10", allow_hyphen_values = true)]
    snrbar_rx: String,
    /// Maximum self-interference INR in dB (sweep: list or range).
    #[arg(long, default_value = "90", allow_hyphen_values = true)]
    inrbar: String,
    /// Cross-link INR at the downlink user in dB.
    #[arg(long, default_value_t = f64::NEG_INFINITY, allow_hyphen_values = true)]
    inr_tx: f64,
    /// Coverage budgets to sweep (list or range), overriding `--sigma-sq`.
    #[arg(long, allow_hyphen_values = true)]
    sigma_sq_list: Option<String>,
    #[arg(long, default_value_t = 67.5)]
    user_az: f64,
    #[arg(long, default_value_t = 37.5)]
    user_el: f64,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
struct SimodelArgs {
    #[command(flatten)]
    common: Common,
    /// `default`, `vertical` or `tapered`.
    #[arg(long)]
    preset: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of draws for the trace output.
    #[arg(long, default_value_t = 1000)]
    draws: usize,
    /// Transmit steering `az,el` in degrees.
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    tx: String,
    /// Receive steering `az,el` in degrees.
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    rx: String,
    /// Write an INR matrix over `--beams` azimuths instead of a trace.
    #[arg(long)]
    matrix: bool,
    #[arg(long, default_value_t = 40)]
    beams: usize,
    /// Print the preset parameters instead of drawing.
    #[arg(long)]
    dump: bool,
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
struct PatternArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    array: ArrayArgs,
    /// `cbf` or `taylor`; ignored with `--codebook-file`.
    #[arg(long, default_value = "cbf")]
    kind: String,
    #[arg(long, default_value_t = 25.0)]
    sll: f64,
    #[arg(long, default_value_t = 4)]
    nbar: usize,
    /// Steering `az,el` in degrees.
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    steer: String,
    /// Codebook CSV to take the beam from.
    #[arg(long)]
    codebook_file: Option<std::path::PathBuf>,
    #[arg(long, default_value_t = 0)]
    beam: usize,
    /// `az` or `el`.
    #[arg(long, default_value = "az")]
    cut: String,
    /// Angle held fixed along the cut, in degrees.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    fixed: f64,
    #[arg(long, default_value_t = 1.0)]
    step: f64,
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match config::merge_config(argv) {
        Ok(a) => a,
        Err(e) => return e.report(),
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let res = match cli.command {
        Command::Codebook(a) => run::codebook(a),
        Command::Design(a) => run::design(a),
        Command::Eval(a) => run::eval(a),
        Command::Sweep(a) => run::sweep(a),
        Command::Simodel(a) => run::simodel(a),
        Command::Pattern(a) => run::pattern(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}
