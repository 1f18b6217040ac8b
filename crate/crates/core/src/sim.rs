//! Photon-counting simulation of the interferometer bench.
//!
//! Every configuration is reduced to an exact outcome distribution over
//! detector cells, then a fixed photon budget is drawn from it as a single
//! multinomial sample. Sweeps derive one RNG stream per grid point from
//! `(seed, point index)`, so results do not depend on scheduling.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::model::{
    branch_states, ellipse_residual, predicted_exp_value_with_eta, MeasurementSetting,
    TradeoffPoint, RESOLUTION_THRESHOLD, STOKES_THRESHOLD,
};
use crate::polar::{input_state, stokes_hv, stokes_pm, weak_value, Angle, Operator2, PureState};

pub const DEFAULT_N_PHOTONS: u64 = 1_000_000;
pub const DEFAULT_SEED: u64 = 42;

/// What the output detectors resolve when no polarizer is inserted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Analysis {
    /// Branch only (b1 / b2).
    #[default]
    PmBranch,
    /// Branch and H/V output polarization.
    HvOutput,
}

impl Analysis {
    pub fn as_str(self) -> &'static str {
        match self {
            Analysis::PmBranch => "pm_branch",
            Analysis::HvOutput => "hv_output",
        }
    }
}

/// Detector outcome label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    B1,
    B2,
    B1H,
    B1V,
    B2H,
    B2V,
    B1Pass,
    B1Block,
    B2Pass,
    B2Block,
}

impl Cell {
    pub fn label(self) -> &'static str {
        match self {
            Cell::B1 => "b1",
            Cell::B2 => "b2",
            Cell::B1H => "b1_H",
            Cell::B1V => "b1_V",
            Cell::B2H => "b2_H",
            Cell::B2V => "b2_V",
            Cell::B1Pass => "b1_pass",
            Cell::B1Block => "b1_block",
            Cell::B2Pass => "b2_pass",
            Cell::B2Block => "b2_block",
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One bench configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    pub n_photons: u64,
    pub seed: u64,
    pub setting: MeasurementSetting,
    pub input_phi: Angle,
    /// Polarizer state in front of both detectors; `None` means no polarizer.
    pub post_select: Option<PureState>,
    pub analysis: Analysis,
    /// Fraction of photons diverted to the intensity monitor.
    pub monitor_fraction: f64,
}

impl ExperimentConfig {
    pub fn new(setting: MeasurementSetting, input_phi: Angle) -> Self {
        ExperimentConfig {
            n_photons: DEFAULT_N_PHOTONS,
            seed: DEFAULT_SEED,
            setting,
            input_phi,
            post_select: None,
            analysis: Analysis::PmBranch,
            monitor_fraction: 0.0,
        }
    }

    pub fn with_post_select(mut self, m_f: PureState) -> Self {
        self.post_select = Some(m_f);
        self
    }

    pub fn with_analysis(mut self, analysis: Analysis) -> Self {
        self.analysis = analysis;
        self
    }

    pub fn with_photons(mut self, n: u64) -> Self {
        self.n_photons = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_monitor_fraction(mut self, f: f64) -> Self {
        self.monitor_fraction = f;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_photons == 0 {
            return Err(Error::validation("n_photons", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.monitor_fraction) {
            return Err(Error::validation(
                "monitor_fraction",
                format!("{} is outside [0, 1)", self.monitor_fraction),
            ));
        }
        if !self.input_phi.is_finite() {
            return Err(Error::validation("phi_deg", "must be finite"));
        }
        MeasurementSetting::new(self.setting.theta, self.setting.v_hv, self.setting.v_pm)?;
        if self.post_select.is_some() && self.analysis == Analysis::HvOutput {
            return Err(Error::validation(
                "analysis",
                "hv_output cannot be combined with post_select",
            ));
        }
        Ok(())
    }
}

/// Anything that yields a (possibly fractional) count per cell.
pub trait CellCounts {
    fn count(&self, cell: Cell) -> f64;
}

/// Exact probabilities over detector cells plus the monitor.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    pub cells: Vec<(Cell, f64)>,
    pub monitor: f64,
}

impl OutcomeDistribution {
    pub fn get(&self, cell: Cell) -> f64 {
        self.cells
            .iter()
            .find(|(c, _)| *c == cell)
            .map_or(0.0, |(_, p)| *p)
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().map(|(_, p)| p).sum::<f64>() + self.monitor
    }

    /// Expected counts for a budget of `n` photons.
    pub fn expected_counts(&self, n: u64) -> ExpectedCounts {
        let n = n as f64;
        ExpectedCounts {
            cells: self.cells.iter().map(|&(c, p)| (c, p * n)).collect(),
            n_monitor: self.monitor * n,
        }
    }
}

impl CellCounts for OutcomeDistribution {
    fn count(&self, cell: Cell) -> f64 {
        self.get(cell)
    }
}

/// Infinite-statistics stand-in for a count record.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedCounts {
    pub cells: Vec<(Cell, f64)>,
    pub n_monitor: f64,
}

impl CellCounts for ExpectedCounts {
    fn count(&self, cell: Cell) -> f64 {
        self.cells
            .iter()
            .find(|(c, _)| *c == cell)
            .map_or(0.0, |(_, n)| *n)
    }
}

/// Detector clicks for one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountRecord {
    pub cells: Vec<(Cell, u64)>,
    pub n_monitor: u64,
}

impl CountRecord {
    pub fn get(&self, cell: Cell) -> u64 {
        self.cells
            .iter()
            .find(|(c, _)| *c == cell)
            .map_or(0, |(_, n)| *n)
    }

    /// Counts on the output detectors (monitor excluded).
    pub fn detected(&self) -> u64 {
        self.cells.iter().map(|(_, n)| n).sum()
    }
}

impl CellCounts for CountRecord {
    fn count(&self, cell: Cell) -> f64 {
        self.get(cell) as f64
    }
}

fn nonneg(x: f64) -> f64 {
    x.max(0.0)
}

pub fn outcome_distribution(cfg: &ExperimentConfig) -> Result<OutcomeDistribution> {
    cfg.validate()?;
    let rho = input_state(cfg.input_phi).density();
    let br = branch_states(&rho, &cfg.setting)?;
    let keep = 1.0 - cfg.monitor_fraction;
    let cells = match (cfg.post_select, cfg.analysis) {
        (Some(m_f), _) => {
            let pass1 = nonneg(br.b1.population(&m_f));
            let pass2 = nonneg(br.b2.population(&m_f));
            vec![
                (Cell::B1Pass, pass1),
                (Cell::B1Block, nonneg(br.b1.trace() - pass1)),
                (Cell::B2Pass, pass2),
                (Cell::B2Block, nonneg(br.b2.trace() - pass2)),
            ]
        }
        (None, Analysis::PmBranch) => vec![
            (Cell::B1, nonneg(br.b1.trace())),
            (Cell::B2, nonneg(br.b2.trace())),
        ],
        (None, Analysis::HvOutput) => {
            let h = PureState::h();
            let v = PureState::v();
            vec![
                (Cell::B1H, nonneg(br.b1.population(&h))),
                (Cell::B1V, nonneg(br.b1.population(&v))),
                (Cell::B2H, nonneg(br.b2.population(&h))),
                (Cell::B2V, nonneg(br.b2.population(&v))),
            ]
        }
    };
    Ok(OutcomeDistribution {
        cells: cells.into_iter().map(|(c, p)| (c, p * keep)).collect(),
        monitor: cfg.monitor_fraction,
    })
}

/// RNG for one sweep point.
pub fn point_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Multinomial draw as a chain of conditional binomials.
pub fn sample_multinomial<R: rand::Rng + ?Sized>(n: u64, probs: &[f64], rng: &mut R) -> Vec<u64> {
    let mut out = vec![0u64; probs.len()];
    let mut remaining = n;
    let mut mass: f64 = probs.iter().sum();
    let last = probs.len().saturating_sub(1);
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i == last {
            out[i] = remaining;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = if q >= 1.0 {
            remaining
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(remaining, q)
                .expect("probability clamped to [0, 1]")
                .sample(rng)
        };
        out[i] = k;
        remaining -= k;
        mass -= p;
    }
    out
}

pub fn simulate_counts(cfg: &ExperimentConfig) -> Result<CountRecord> {
    simulate_counts_stream(cfg, 0)
}

/// One multinomial draw using stream `stream` of `cfg.seed`.
pub fn simulate_counts_stream(cfg: &ExperimentConfig, stream: u64) -> Result<CountRecord> {
    let dist = outcome_distribution(cfg)?;
    let mut probs: Vec<f64> = dist.cells.iter().map(|(_, p)| *p).collect();
    probs.push(dist.monitor);
    let mut rng = point_rng(cfg.seed, stream);
    let draws = sample_multinomial(cfg.n_photons, &probs, &mut rng);
    let n_monitor = *draws.last().expect("monitor cell present");
    Ok(CountRecord {
        cells: dist
            .cells
            .iter()
            .zip(draws.iter())
            .map(|(&(c, _), &n)| (c, n))
            .collect(),
        n_monitor,
    })
}

/// A value with its propagated one-sigma error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// Post-selected conditional value `(n1 - n2)/((n1 + n2) ε)` with binomial
/// error `(2/|ε|) √(n1 n2 / (n1 + n2)³)`.
pub fn estimate_conditional_value(counts: &impl CellCounts, epsilon: f64) -> Result<Estimate> {
    let n1 = counts.count(Cell::B1Pass);
    let n2 = counts.count(Cell::B2Pass);
    let n = n1 + n2;
    if n <= 0.0 {
        return Err(Error::NoPostSelectedCounts);
    }
    if epsilon.abs() <= RESOLUTION_THRESHOLD {
        return Err(Error::ZeroResolution(epsilon));
    }
    Ok(Estimate {
        value: (n1 - n2) / (n * epsilon),
        std_error: 2.0 / epsilon.abs() * (n1 * n2 / (n * n * n)).sqrt(),
    })
}

/// Normalized difference `(n_a - n_b)/(n_a + n_b)` and its binomial error.
fn contrast(n_a: f64, n_b: f64) -> Option<Estimate> {
    let n = n_a + n_b;
    (n > 0.0).then(|| Estimate {
        value: (n_a - n_b) / n,
        std_error: 2.0 * (n_a * n_b / (n * n * n)).sqrt(),
    })
}

fn calibration_config(n_photons: u64, setting: &MeasurementSetting, seed: u64) -> ExperimentConfig {
    ExperimentConfig::new(*setting, Angle::from_degrees(45.0))
        .with_photons(n_photons)
        .with_seed(seed)
}

/// Resolution measured with a P-polarized input, no post-selection.
pub fn calibrate_epsilon(n_photons: u64, setting: &MeasurementSetting, seed: u64) -> Result<f64> {
    Ok(calibrate_epsilon_estimate(n_photons, setting, seed)?.value)
}

pub fn calibrate_epsilon_estimate(
    n_photons: u64,
    setting: &MeasurementSetting,
    seed: u64,
) -> Result<Estimate> {
    let counts = simulate_counts(&calibration_config(n_photons, setting, seed))?;
    contrast(counts.count(Cell::B1), counts.count(Cell::B2)).ok_or(Error::NoPostSelectedCounts)
}

/// Calibration evaluated on expected counts.
pub fn calibrate_epsilon_exact(
    n_photons: u64,
    setting: &MeasurementSetting,
    seed: u64,
) -> Result<Estimate> {
    let cfg = calibration_config(n_photons, setting, seed);
    let counts = outcome_distribution(&cfg)?.expected_counts(n_photons);
    contrast(counts.count(Cell::B1), counts.count(Cell::B2)).ok_or(Error::NoPostSelectedCounts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    Phi,
    Theta,
}

/// A grid of input angles (φ) or HWP angles (θ) over a base configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub grid: Vec<Angle>,
    pub base: ExperimentConfig,
}

impl SweepSpec {
    pub fn new(variable: SweepVariable, grid: Vec<Angle>, base: ExperimentConfig) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::validation("grid", "must not be empty"));
        }
        if let Some(bad) = grid.iter().find(|a| !a.is_finite()) {
            return Err(Error::validation("grid", format!("non-finite angle {bad}")));
        }
        let increasing = grid.windows(2).all(|w| w[1].radians() > w[0].radians());
        let decreasing = grid.windows(2).all(|w| w[1].radians() < w[0].radians());
        if !(increasing || decreasing) {
            return Err(Error::validation("grid", "must be strictly monotone"));
        }
        base.validate()?;
        Ok(SweepSpec {
            variable,
            grid,
            base,
        })
    }
}

/// Sampled counts or their exact expectation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Sampled,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SweepOptions {
    pub mode: Mode,
    /// Transition probability for the model column; the setting's own
    /// `η` when `None`.
    pub eta: Option<f64>,
    pub execution: Execution,
}

impl SweepOptions {
    pub fn exact() -> Self {
        SweepOptions {
            mode: Mode::Exact,
            ..Default::default()
        }
    }

    pub fn sampled() -> Self {
        SweepOptions::default()
    }

    pub fn with_eta(mut self, eta: Option<f64>) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakSweepRow {
    pub phi: Angle,
    pub value_est: Option<f64>,
    pub std_err: Option<f64>,
    /// Finite back-action model value (η from the options or the setting).
    pub value_eq9: Option<f64>,
    /// `None` where post-selection is orthogonal to the input.
    pub weak_value: Option<f64>,
    pub n_pass: f64,
    pub n_block: f64,
    /// Error that prevented an estimate for this row, if any.
    pub status: Option<Error>,
}

enum Tally {
    Sampled(CountRecord),
    Exact(ExpectedCounts),
}

impl CellCounts for Tally {
    fn count(&self, cell: Cell) -> f64 {
        match self {
            Tally::Sampled(c) => c.count(cell),
            Tally::Exact(c) => c.count(cell),
        }
    }
}

fn tally(cfg: &ExperimentConfig, mode: Mode, stream: u64) -> Result<Tally> {
    Ok(match mode {
        Mode::Sampled => Tally::Sampled(simulate_counts_stream(cfg, stream)?),
        Mode::Exact => Tally::Exact(outcome_distribution(cfg)?.expected_counts(cfg.n_photons)),
    })
}

/// Post-selected conditional values across a φ grid.
///
/// Estimates divide by the setting's delivered resolution `v_hv sin 4θ`,
/// the value a P-input calibration returns.
pub fn sweep_weak_values(spec: &SweepSpec, opts: SweepOptions) -> Result<Vec<WeakSweepRow>> {
    if spec.variable != SweepVariable::Phi {
        return Err(Error::validation("variable", "weak-value sweep runs over phi"));
    }
    let m_f = spec
        .base
        .post_select
        .ok_or_else(|| Error::validation("post_select", "weak-value sweep needs post-selection"))?;
    spec.base.validate()?;
    let epsilon = spec.base.setting.epsilon();
    if epsilon.abs() <= RESOLUTION_THRESHOLD {
        return Err(Error::ZeroResolution(epsilon));
    }
    let eta = opts.eta.unwrap_or_else(|| spec.base.setting.eta());
    let s_pm = Operator2::s_pm();

    let rows = map_indexed(&spec.grid, opts.execution, |i, &phi| -> Result<WeakSweepRow> {
        let cfg = ExperimentConfig {
            input_phi: phi,
            ..spec.base
        };
        let counts = tally(&cfg, opts.mode, i as u64)?;
        let psi = input_state(phi);
        let n_pass = counts.count(Cell::B1Pass) + counts.count(Cell::B2Pass);
        let n_block = counts.count(Cell::B1Block) + counts.count(Cell::B2Block);
        let (value_est, std_err, status) = match estimate_conditional_value(&counts, epsilon) {
            Ok(e) => (Some(e.value), Some(e.std_error), None),
            Err(e) => (None, None, Some(e)),
        };
        Ok(WeakSweepRow {
            phi,
            value_est,
            std_err,
            value_eq9: predicted_exp_value_with_eta(&psi, &m_f, eta).ok(),
            weak_value: weak_value(&psi, &m_f, &s_pm).ok(),
            n_pass,
            n_block,
            status,
        })
    });
    rows.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffRow {
    pub theta: Angle,
    pub epsilon_est: f64,
    pub epsilon_err: f64,
    pub backaction_est: f64,
    pub backaction_err: f64,
    /// Residual of the estimated point against the setting's visibilities.
    pub ellipse_residual: f64,
}

impl TradeoffRow {
    pub fn point(&self) -> TradeoffPoint {
        TradeoffPoint {
            epsilon_pm: self.epsilon_est,
            back_action: self.backaction_est,
            theta: self.theta,
        }
    }
}

/// Resolution and back-action estimated across a θ grid.
///
/// Each point runs a bare-branch measurement (stream `2i`) and an
/// HV-analysis measurement (stream `2i + 1`) on the same input.
pub fn sweep_tradeoff(spec: &SweepSpec, opts: SweepOptions) -> Result<Vec<TradeoffRow>> {
    if spec.variable != SweepVariable::Theta {
        return Err(Error::validation("variable", "trade-off sweep runs over theta"));
    }
    spec.base.validate()?;
    let rho = input_state(spec.base.input_phi).density();
    let s_pm = stokes_pm(&rho);
    let s_hv = stokes_hv(&rho);
    if s_pm.abs() <= STOKES_THRESHOLD {
        return Err(Error::UnpolarizedInput {
            axis: "PM",
            value: s_pm,
        });
    }
    if s_hv.abs() <= STOKES_THRESHOLD {
        return Err(Error::UnpolarizedInput {
            axis: "HV",
            value: s_hv,
        });
    }
    let (v_hv, v_pm) = (spec.base.setting.v_hv, spec.base.setting.v_pm);

    let rows = map_indexed(&spec.grid, opts.execution, |i, &theta| -> Result<TradeoffRow> {
        let bare = ExperimentConfig {
            setting: MeasurementSetting {
                theta,
                ..spec.base.setting
            },
            post_select: None,
            analysis: Analysis::PmBranch,
            ..spec.base
        };
        let hv = bare.with_analysis(Analysis::HvOutput);
        let pm_counts = tally(&bare, opts.mode, 2 * i as u64)?;
        let hv_counts = tally(&hv, opts.mode, 2 * i as u64 + 1)?;

        let res = contrast(pm_counts.count(Cell::B1), pm_counts.count(Cell::B2));
        let n_h = hv_counts.count(Cell::B1H) + hv_counts.count(Cell::B2H);
        let n_v = hv_counts.count(Cell::B1V) + hv_counts.count(Cell::B2V);
        let flip = contrast(n_h, n_v);

        let (epsilon_est, epsilon_err) =
            res.map_or((f64::NAN, f64::NAN), |e| (e.value / s_pm, e.std_error / s_pm.abs()));
        let (backaction_est, backaction_err) = flip.map_or((f64::NAN, f64::NAN), |e| {
            (1.0 - e.value / s_hv, e.std_error / s_hv.abs())
        });
        let point = TradeoffPoint {
            epsilon_pm: epsilon_est,
            back_action: backaction_est,
            theta,
        };
        Ok(TradeoffRow {
            theta,
            epsilon_est,
            epsilon_err,
            backaction_est,
            backaction_err,
            ellipse_residual: ellipse_residual(&point, v_hv, v_pm),
        })
    });
    rows.into_iter().collect()
}
