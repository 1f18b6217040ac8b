//! `weakmeter` command-line driver.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime error.
//! Data goes to `--out` (or stdout); diagnostics go to stderr.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_config, Command, RunConfig, RunManifest};
use crate::csv::{self, Table, Value, CALIBRATE_COLUMNS, EVAL_COLUMNS};
use crate::error::Error;
use crate::model::predicted_exp_value_with_eta;
use crate::polar::{input_state, stokes_pm, weak_value, Operator2};
use crate::sim::{
    calibrate_epsilon_estimate, calibrate_epsilon_exact, estimate_conditional_value,
    outcome_distribution, simulate_counts, sweep_tradeoff, sweep_weak_values, Analysis, Cell,
    CellCounts, ExpectedCounts, Mode,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "weakmeter", version, about = "Weak measurement of photon polarization by back-action induced path interference")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Post-selected conditional values over a grid of input angles.
    WeakSweep(RunArgs),
    /// Resolution and back-action over a grid of HWP angles.
    Tradeoff(RunArgs),
    /// Resolution measured with a P-polarized input.
    Calibrate(RunArgs),
    /// Single-point conditional value.
    Eval(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Use exact probabilities instead of sampled counts.
    #[arg(long)]
    exact: bool,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ParseError { .. } | Error::ValidationError { .. } => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

/// Runs the CLI against the process stdout / stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with_io(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with_io<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{rendered}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{rendered}");
                    EXIT_CONFIG
                }
            };
        }
    };
    let (command, args) = match cli.command {
        Cmd::WeakSweep(a) => (Command::WeakSweep, a),
        Cmd::Tradeoff(a) => (Command::Tradeoff, a),
        Cmd::Calibrate(a) => (Command::Calibrate, a),
        Cmd::Eval(a) => (Command::Eval, a),
    };
    match execute(command, &args, stdout, stderr) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "weakmeter: {}", f.message());
            f.code()
        }
    }
}

fn load_config(args: &RunArgs) -> Result<RunConfig, Failure> {
    let path = args.config.display();
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Failure::Config(format!("cannot read config file {path}: {e}")))?;
    let mut cfg = parse_config(&text).map_err(|e| Failure::Config(format!("{path}: {e}")))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.exact {
        cfg.exact = true;
    }
    Ok(cfg)
}

fn execute(
    command: Command,
    args: &RunArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, Failure> {
    let cfg = load_config(args)?;
    let manifest = RunManifest {
        command,
        config_path: args.config.display().to_string(),
        output_path: args.out.as_ref().map(|p| p.display().to_string()),
        config: cfg.clone(),
    };

    let mut code = EXIT_OK;
    let table = match command {
        Command::WeakSweep => {
            let spec = cfg.weak_sweep_spec()?;
            let rows = sweep_weak_values(&spec, cfg.sweep_options())?;
            let grid = cfg.phi_grid_deg();
            let mut flagged = 0;
            for (deg, row) in grid.iter().zip(&rows) {
                if let Some(e) = &row.status {
                    flagged += 1;
                    let _ = writeln!(stderr, "weakmeter: phi_deg = {deg}: {e}");
                }
            }
            if flagged == rows.len() {
                let _ = writeln!(stderr, "weakmeter: no grid point produced an estimate");
                code = EXIT_RUNTIME;
            }
            csv::weak_sweep_table(&grid, &rows)
        }
        Command::Tradeoff => {
            let spec = cfg.tradeoff_spec()?;
            let rows = sweep_tradeoff(&spec, cfg.sweep_options())?;
            csv::tradeoff_table(&cfg.theta_grid_deg(), &rows)
        }
        Command::Calibrate => calibrate_table(&cfg)?,
        Command::Eval => eval_table(&cfg)?,
    };

    write_output(args, &table, &manifest.lines(), stdout)?;
    Ok(code)
}

fn write_output(
    args: &RunArgs,
    table: &Table,
    manifest: &[String],
    stdout: &mut dyn Write,
) -> Result<(), Failure> {
    let bytes = csv::emit_csv_string(table, manifest);
    match &args.out {
        Some(path) => fs::write(path, bytes)
            .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display()))),
        None => stdout
            .write_all(bytes.as_bytes())
            .and_then(|_| stdout.flush())
            .map_err(|e| Failure::Runtime(format!("cannot write output: {e}"))),
    }
}

fn calibrate_table(cfg: &RunConfig) -> Result<Table, Failure> {
    let setting = cfg.setting()?;
    let est = match cfg.mode() {
        Mode::Exact => calibrate_epsilon_exact(cfg.n_photons, &setting, cfg.seed)?,
        Mode::Sampled => calibrate_epsilon_estimate(cfg.n_photons, &setting, cfg.seed)?,
    };
    let mut t = Table::new(&CALIBRATE_COLUMNS);
    t.push(vec![
        cfg.theta_deg.into(),
        cfg.v_hv.into(),
        est.value.into(),
        est.std_error.into(),
        setting.epsilon().into(),
    ]);
    Ok(t)
}

fn eval_table(cfg: &RunConfig) -> Result<Table, Failure> {
    let phi_deg = cfg.phi_grid_deg()[0];
    let exp = cfg.experiment_config()?;
    let exp = match exp.post_select {
        Some(_) => exp,
        None => exp.with_analysis(Analysis::PmBranch),
    };
    let epsilon = exp.setting.epsilon();
    let psi = input_state(exp.input_phi);

    let post_selected = exp.post_select.is_some();
    let (n1, n2) = match cfg.mode() {
        Mode::Exact => signal_counts(
            &outcome_distribution(&exp)?.expected_counts(exp.n_photons),
            post_selected,
        ),
        Mode::Sampled => signal_counts(&simulate_counts(&exp)?, post_selected),
    };
    let pair = ExpectedCounts {
        cells: vec![(Cell::B1Pass, n1), (Cell::B2Pass, n2)],
        n_monitor: 0.0,
    };
    let est = estimate_conditional_value(&pair, epsilon)?;

    let (model, weak) = match exp.post_select {
        Some(m_f) => {
            let eta = cfg.eta_hv.unwrap_or_else(|| exp.setting.eta());
            (
                predicted_exp_value_with_eta(&psi, &m_f, eta).ok(),
                weak_value(&psi, &m_f, &Operator2::s_pm()).ok(),
            )
        }
        // without post-selection the estimator reads out <S_PM> itself
        None => {
            let s = stokes_pm(&psi.density());
            (Some(s), Some(s))
        }
    };
    let mut t = Table::new(&EVAL_COLUMNS);
    t.push(vec![
        phi_deg.into(),
        cfg.theta_deg.into(),
        est.value.into(),
        est.std_error.into(),
        Value::from(model),
        Value::from(weak),
        ((n1 + n2) / exp.n_photons as f64).into(),
    ]);
    Ok(t)
}

/// Counts entering the conditional value: pass cells when a polarizer is
/// present, bare branch cells otherwise.
fn signal_counts(c: &impl CellCounts, post_selected: bool) -> (f64, f64) {
    if post_selected {
        (c.count(Cell::B1Pass), c.count(Cell::B2Pass))
    } else {
        (c.count(Cell::B1), c.count(Cell::B2))
    }
}
