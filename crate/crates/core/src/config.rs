//! `key = value` run configuration and the manifest that echoes it.
//!
//! ```text
//! # weak-value sweep
//! theta_deg = 0.5
//! phi_start_deg = -10
//! phi_stop_deg = 10
//! phi_step_deg = 1
//! post_select = H
//! n_photons = 10000000
//! ```
//!
//! Angles are in degrees. `#` starts a comment. Values may be quoted.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::MeasurementSetting;
use crate::polar::{input_state, Angle, PureState};
use crate::sim::{
    Analysis, ExperimentConfig, Mode, SweepOptions, SweepSpec, SweepVariable, DEFAULT_N_PHOTONS,
    DEFAULT_SEED,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_THETA_DEG: f64 = 0.5;
pub const DEFAULT_PHI_DEG: f64 = 25.0;
const MAX_GRID_POINTS: usize = 1_000_000;

/// Keys written by the manifest that carry no configuration.
const METADATA_KEYS: [&str; 4] = ["schema", "command", "config_path", "output_path"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    WeakSweep,
    Tradeoff,
    Calibrate,
    Eval,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::WeakSweep => "weak-sweep",
            Command::Tradeoff => "tradeoff",
            Command::Calibrate => "calibrate",
            Command::Eval => "eval",
        }
    }
}

/// Polarizer setting in front of the detectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PostSelect {
    H,
    V,
    P,
    M,
    /// Linear polarization `(sin φ, cos φ)`, same convention as the input.
    Linear(f64),
}

impl PostSelect {
    pub fn state(self) -> PureState {
        match self {
            PostSelect::H => PureState::h(),
            PostSelect::V => PureState::v(),
            PostSelect::P => PureState::p(),
            PostSelect::M => PureState::m(),
            PostSelect::Linear(deg) => input_state(Angle::from_degrees(deg)),
        }
    }
}

impl fmt::Display for PostSelect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PostSelect::H => f.write_str("H"),
            PostSelect::V => f.write_str("V"),
            PostSelect::P => f.write_str("P"),
            PostSelect::M => f.write_str("M"),
            PostSelect::Linear(deg) => write!(f, "phi:{deg}"),
        }
    }
}

/// Inclusive angle grid in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleRange {
    pub start_deg: f64,
    pub stop_deg: f64,
    pub step_deg: f64,
}

impl AngleRange {
    fn validate(&self, prefix: &str) -> Result<()> {
        let key = format!("{prefix}_step_deg");
        if self.step_deg == 0.0 {
            return Err(Error::validation(key, "must be nonzero"));
        }
        let span = self.stop_deg - self.start_deg;
        if span != 0.0 && span.signum() != self.step_deg.signum() {
            return Err(Error::validation(
                key,
                "sign does not lead from start to stop",
            ));
        }
        if span / self.step_deg >= MAX_GRID_POINTS as f64 {
            return Err(Error::validation(
                key,
                format!("grid would exceed {MAX_GRID_POINTS} points"),
            ));
        }
        Ok(())
    }

    /// Grid points `start + i·step` up to and including `stop` (with a
    /// small allowance for rounding in the step count).
    pub fn degrees(&self) -> Vec<f64> {
        let n = ((self.stop_deg - self.start_deg) / self.step_deg + 1e-9).floor() as usize + 1;
        (0..n)
            .map(|i| self.start_deg + i as f64 * self.step_deg)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhiSpec {
    Single(f64),
    Range(AngleRange),
}

impl PhiSpec {
    pub fn degrees(&self) -> Vec<f64> {
        match self {
            PhiSpec::Single(d) => vec![*d],
            PhiSpec::Range(r) => r.degrees(),
        }
    }
}

/// Fully resolved run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub theta_deg: f64,
    pub theta_range: Option<AngleRange>,
    pub v_hv: f64,
    pub v_pm: f64,
    pub phi: PhiSpec,
    pub n_photons: u64,
    pub seed: u64,
    pub post_select: Option<PostSelect>,
    pub analysis: Analysis,
    pub monitor_fraction: f64,
    pub exact: bool,
    /// Overrides the transition probability used for the model column.
    pub eta_hv: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            theta_deg: DEFAULT_THETA_DEG,
            theta_range: None,
            v_hv: 1.0,
            v_pm: 1.0,
            phi: PhiSpec::Single(DEFAULT_PHI_DEG),
            n_photons: DEFAULT_N_PHOTONS,
            seed: DEFAULT_SEED,
            post_select: None,
            analysis: Analysis::PmBranch,
            monitor_fraction: 0.0,
            exact: false,
            eta_hv: None,
        }
    }
}

struct Entry {
    line: usize,
    value: String,
}

fn parse_value<T: FromStr>(key: &str, e: &Entry) -> Result<T> {
    e.value.parse().map_err(|_| Error::ParseError {
        line: e.line,
        message: format!("`{}` is not a valid value for `{key}`", e.value),
    })
}

fn parse_finite(key: &str, e: &Entry) -> Result<f64> {
    let x: f64 = parse_value(key, e)?;
    if !x.is_finite() {
        return Err(Error::validation(key, "must be finite"));
    }
    Ok(x)
}

fn parse_bool(key: &str, e: &Entry) -> Result<bool> {
    match e.value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::ParseError {
            line: e.line,
            message: format!("`{}` is not a boolean for `{key}`", e.value),
        }),
    }
}

fn parse_post_select(e: &Entry) -> Result<Option<PostSelect>> {
    let v = e.value.as_str();
    let ps = match v {
        "H" | "h" => PostSelect::H,
        "V" | "v" => PostSelect::V,
        "P" | "p" => PostSelect::P,
        "M" | "m" => PostSelect::M,
        _ if v.eq_ignore_ascii_case("none") => return Ok(None),
        _ => {
            let deg = v
                .strip_prefix("phi:")
                .ok_or_else(|| {
                    Error::validation("post_select", format!("`{v}` is not one of H, V, P, M, phi:<deg>, none"))
                })?
                .trim();
            let deg: f64 = deg.parse().map_err(|_| Error::ParseError {
                line: e.line,
                message: format!("`{deg}` is not an angle in `post_select`"),
            })?;
            if !deg.is_finite() {
                return Err(Error::validation("post_select", "angle must be finite"));
            }
            PostSelect::Linear(deg)
        }
    };
    Ok(Some(ps))
}

fn unquote(v: &str) -> &str {
    for q in ['"', '\''] {
        if v.len() >= 2 && v.starts_with(q) && v.ends_with(q) {
            return &v[1..v.len() - 1];
        }
    }
    v
}

fn tokenize(text: &str) -> Result<HashMap<String, Entry>> {
    let mut entries = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::ParseError {
            line,
            message: format!("expected `key = value`, found `{content}`"),
        })?;
        let key = key.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(Error::ParseError {
                line,
                message: format!("invalid key `{key}`"),
            });
        }
        let value = unquote(value.trim()).to_string();
        if let Some(prev) = entries.insert(key.to_string(), Entry { line, value }) {
            return Err(Error::ParseError {
                line,
                message: format!("duplicate key `{key}` (first set on line {})", prev.line),
            });
        }
    }
    Ok(entries)
}

fn take_range(entries: &mut HashMap<String, Entry>, prefix: &str) -> Result<Option<AngleRange>> {
    let keys = ["start", "stop", "step"].map(|p| format!("{prefix}_{p}_deg"));
    let found: Vec<Option<Entry>> = keys.iter().map(|k| entries.remove(k)).collect();
    if found.iter().all(Option::is_none) {
        return Ok(None);
    }
    let mut vals = [0.0; 3];
    for ((key, entry), slot) in keys.iter().zip(&found).zip(vals.iter_mut()) {
        let entry = entry.as_ref().ok_or_else(|| {
            Error::validation(key.clone(), format!("required when any {prefix}_*_deg range key is set"))
        })?;
        *slot = parse_finite(key, entry)?;
    }
    let range = AngleRange {
        start_deg: vals[0],
        stop_deg: vals[1],
        step_deg: vals[2],
    };
    range.validate(prefix)?;
    Ok(Some(range))
}

/// Parses and validates a configuration document. Absent keys take their
/// defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut entries = tokenize(text)?;
    let mut cfg = RunConfig::default();

    if let Some(e) = entries.remove("schema") {
        let v: u32 = parse_value("schema", &e)?;
        if v != SCHEMA_VERSION {
            return Err(Error::validation("schema", format!("unsupported version {v}")));
        }
    }
    for key in METADATA_KEYS {
        entries.remove(key);
    }

    if let Some(e) = entries.remove("theta_deg") {
        cfg.theta_deg = parse_finite("theta_deg", &e)?;
    }
    cfg.theta_range = take_range(&mut entries, "theta")?;
    for (key, slot) in [("v_hv", &mut cfg.v_hv), ("v_pm", &mut cfg.v_pm)] {
        if let Some(e) = entries.remove(key) {
            let v = parse_finite(key, &e)?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::validation(key, format!("{v} is outside [0, 1]")));
            }
            *slot = v;
        }
    }

    let phi_single = entries.remove("phi_deg");
    let phi_range = take_range(&mut entries, "phi")?;
    cfg.phi = match (phi_single, phi_range) {
        (Some(_), Some(_)) => {
            return Err(Error::validation(
                "phi_deg",
                "cannot be combined with phi_start_deg/phi_stop_deg/phi_step_deg",
            ))
        }
        (Some(e), None) => PhiSpec::Single(parse_finite("phi_deg", &e)?),
        (None, Some(r)) => PhiSpec::Range(r),
        (None, None) => PhiSpec::Single(DEFAULT_PHI_DEG),
    };

    if let Some(e) = entries.remove("n_photons") {
        cfg.n_photons = parse_value("n_photons", &e)?;
        if cfg.n_photons == 0 {
            return Err(Error::validation("n_photons", "must be at least 1"));
        }
    }
    if let Some(e) = entries.remove("seed") {
        cfg.seed = parse_value("seed", &e)?;
    }
    if let Some(e) = entries.remove("post_select") {
        cfg.post_select = parse_post_select(&e)?;
    }
    if let Some(e) = entries.remove("analysis") {
        cfg.analysis = match e.value.to_ascii_lowercase().as_str() {
            "pm_branch" => Analysis::PmBranch,
            "hv_output" => Analysis::HvOutput,
            other => {
                return Err(Error::validation(
                    "analysis",
                    format!("`{other}` is not one of pm_branch, hv_output"),
                ))
            }
        };
    }
    if let Some(e) = entries.remove("monitor_fraction") {
        let v = parse_finite("monitor_fraction", &e)?;
        if !(0.0..1.0).contains(&v) {
            return Err(Error::validation("monitor_fraction", format!("{v} is outside [0, 1)")));
        }
        cfg.monitor_fraction = v;
    }
    if let Some(e) = entries.remove("exact") {
        cfg.exact = parse_bool("exact", &e)?;
    }
    if let Some(e) = entries.remove("eta_hv") {
        cfg.eta_hv = if e.value.eq_ignore_ascii_case("none") {
            None
        } else {
            let v = parse_finite("eta_hv", &e)?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::validation("eta_hv", format!("{v} is outside [0, 1]")));
            }
            Some(v)
        };
    }

    if let Some((key, e)) = entries.iter().min_by_key(|(_, e)| e.line) {
        return Err(Error::validation(key.clone(), format!("unknown key (line {})", e.line)));
    }
    if cfg.post_select.is_some() && cfg.analysis == Analysis::HvOutput {
        return Err(Error::validation(
            "analysis",
            "hv_output cannot be combined with post_select",
        ));
    }
    Ok(cfg)
}

impl RunConfig {
    /// Every parameter, defaults included, in a fixed order.
    pub fn resolved_pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = vec![("theta_deg", self.theta_deg.to_string())];
        if let Some(r) = &self.theta_range {
            out.push(("theta_start_deg", r.start_deg.to_string()));
            out.push(("theta_stop_deg", r.stop_deg.to_string()));
            out.push(("theta_step_deg", r.step_deg.to_string()));
        }
        out.push(("v_hv", self.v_hv.to_string()));
        out.push(("v_pm", self.v_pm.to_string()));
        match &self.phi {
            PhiSpec::Single(d) => out.push(("phi_deg", d.to_string())),
            PhiSpec::Range(r) => {
                out.push(("phi_start_deg", r.start_deg.to_string()));
                out.push(("phi_stop_deg", r.stop_deg.to_string()));
                out.push(("phi_step_deg", r.step_deg.to_string()));
            }
        }
        out.push(("n_photons", self.n_photons.to_string()));
        out.push(("seed", self.seed.to_string()));
        out.push((
            "post_select",
            self.post_select.map_or("none".to_string(), |p| p.to_string()),
        ));
        out.push(("analysis", self.analysis.as_str().to_string()));
        out.push(("monitor_fraction", self.monitor_fraction.to_string()));
        out.push(("exact", self.exact.to_string()));
        out.push(("eta_hv", self.eta_hv.map_or("none".to_string(), |v| v.to_string())));
        out
    }

    pub fn to_config_text(&self) -> String {
        self.resolved_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn setting(&self) -> Result<MeasurementSetting> {
        MeasurementSetting::new(Angle::from_degrees(self.theta_deg), self.v_hv, self.v_pm)
    }

    pub fn mode(&self) -> Mode {
        if self.exact {
            Mode::Exact
        } else {
            Mode::Sampled
        }
    }

    /// Single-point configuration. A φ range is rejected.
    pub fn experiment_config(&self) -> Result<ExperimentConfig> {
        let phi = match self.phi {
            PhiSpec::Single(d) => d,
            PhiSpec::Range(_) => {
                return Err(Error::validation(
                    "phi_deg",
                    "this command takes a single phi_deg, not a range",
                ))
            }
        };
        self.config_at(phi)
    }

    fn config_at(&self, phi_deg: f64) -> Result<ExperimentConfig> {
        let cfg = ExperimentConfig {
            n_photons: self.n_photons,
            seed: self.seed,
            setting: self.setting()?,
            input_phi: Angle::from_degrees(phi_deg),
            post_select: self.post_select.map(PostSelect::state),
            analysis: self.analysis,
            monitor_fraction: self.monitor_fraction,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn phi_grid_deg(&self) -> Vec<f64> {
        self.phi.degrees()
    }

    pub fn theta_grid_deg(&self) -> Vec<f64> {
        self.theta_range
            .map_or_else(|| vec![self.theta_deg], |r| r.degrees())
    }

    pub fn weak_sweep_spec(&self) -> Result<SweepSpec> {
        if self.post_select.is_none() {
            return Err(Error::validation("post_select", "weak-sweep requires a post-selection state"));
        }
        let grid = self.phi_grid_deg();
        let base = self.config_at(grid[0])?;
        SweepSpec::new(
            SweepVariable::Phi,
            grid.into_iter().map(Angle::from_degrees).collect(),
            base,
        )
    }

    pub fn tradeoff_spec(&self) -> Result<SweepSpec> {
        let PhiSpec::Single(phi) = self.phi else {
            return Err(Error::validation("phi_deg", "tradeoff takes a single phi_deg"));
        };
        let base = ExperimentConfig {
            post_select: None,
            analysis: Analysis::PmBranch,
            ..self.config_at(phi)?
        };
        SweepSpec::new(
            SweepVariable::Theta,
            self.theta_grid_deg().into_iter().map(Angle::from_degrees).collect(),
            base,
        )
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            mode: self.mode(),
            eta: self.eta_hv,
            ..Default::default()
        }
    }
}

/// Everything needed to re-run a command; written as `# key = value`
/// header lines in front of every CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: Command,
    pub config_path: String,
    pub output_path: Option<String>,
    pub config: RunConfig,
}

impl RunManifest {
    pub fn lines(&self) -> Vec<String> {
        let mut out = vec![
            format!("schema = {SCHEMA_VERSION}"),
            format!("command = {}", self.command.as_str()),
            format!("config_path = {}", self.config_path),
            format!(
                "output_path = {}",
                self.output_path.as_deref().unwrap_or("-")
            ),
        ];
        out.extend(
            self.config
                .resolved_pairs()
                .into_iter()
                .map(|(k, v)| format!("{k} = {v}")),
        );
        out
    }
}

/// Recovers the manifest text from the `# ` header lines of an emitted CSV.
pub fn manifest_text_from_csv(csv: &str) -> String {
    csv.lines()
        .map_while(|l| l.strip_prefix("# "))
        .map(|l| format!("{l}\n"))
        .collect()
}
