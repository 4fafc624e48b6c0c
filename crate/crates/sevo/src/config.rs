//! Run configuration: one JSON document describing the problem instance,
//! grid, stepper, initial data, horizon, output location, and per-suite
//! knobs. Every block a module defines elsewhere is validated by that
//! module; this file only adds the plumbing-level fields and the checks
//! that tie blocks together (grid dimension versus n, and so on).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolution_engine::{CoupledData, StepperConfig};
use crate::exponent_calculus::{ParamGrid, ProblemParams};
use crate::transforms::{GridSpec, TransformPlan};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Malformed JSON or a mistyped field; the message carries serde's
    /// line/column diagnostics verbatim.
    #[error("config parse error: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid config field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

/// Initial-data profile shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    /// exp(-r^2 / (2 width^2)).
    Gaussian,
    /// The standard mollifier bump exp(1 - 1/(1 - (r/width)^2)) inside
    /// r < width, identically zero outside; smooth and compactly
    /// supported, with value 1 at the origin.
    Bump,
}

fn default_data_kind() -> DataKind {
    DataKind::Gaussian
}
fn default_amplitude() -> f64 {
    1e-3
}
fn default_width() -> f64 {
    1.0
}
fn default_slots() -> [f64; 4] {
    [1.0; 4]
}

/// Initial data block: one profile shape scaled by `amplitude` and the
/// per-slot multipliers for (u0, u1, v0, v1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default = "default_data_kind")]
    pub kind: DataKind,
    /// The small-data parameter epsilon.
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_width")]
    pub width: f64,
    /// Multipliers for the four data slots (u0, u1, v0, v1); zero turns
    /// a slot off.
    #[serde(default = "default_slots")]
    pub slots: [f64; 4],
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            kind: default_data_kind(),
            amplitude: default_amplitude(),
            width: default_width(),
            slots: default_slots(),
        }
    }
}

impl DataConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(invalid(
                "data.amplitude",
                format!("must be finite and >= 0, got {}", self.amplitude),
            ));
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(invalid(
                "data.width",
                format!("must be positive, got {}", self.width),
            ));
        }
        if self.slots.iter().any(|s| !s.is_finite()) {
            return Err(invalid("data.slots", "multipliers must be finite"));
        }
        Ok(())
    }

    /// Unit-amplitude profile value at radius r.
    pub fn profile(&self, r: f64) -> f64 {
        match self.kind {
            DataKind::Gaussian => (-r * r / (2.0 * self.width * self.width)).exp(),
            DataKind::Bump => {
                let x = r / self.width;
                if x < 1.0 {
                    (1.0 - 1.0 / (1.0 - x * x)).exp()
                } else {
                    0.0
                }
            }
        }
    }

    /// Samples the four data slots on the plan's grid.
    pub fn build(&self, plan: &TransformPlan) -> CoupledData {
        let slot =
            |mult: f64| plan.field_from_radial_fn(|r| self.amplitude * mult * self.profile(r));
        CoupledData {
            u0: slot(self.slots[0]),
            u1: slot(self.slots[1]),
            v0: slot(self.slots[2]),
            v1: slot(self.slots[3]),
        }
    }
}

fn default_sample_t0() -> f64 {
    0.25
}
fn default_sample_ratio() -> f64 {
    1.25
}

/// Geometric output cadence: norms are recorded at t = 0 and at
/// t0 * ratio^k (snapped to the step grid).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    #[serde(default = "default_sample_t0")]
    pub t0: f64,
    #[serde(default = "default_sample_ratio")]
    pub ratio: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            t0: default_sample_t0(),
            ratio: default_sample_ratio(),
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return Err(invalid(
                "sampling.t0",
                format!("must be positive, got {}", self.t0),
            ));
        }
        if !(self.ratio > 1.0 && self.ratio.is_finite()) {
            return Err(invalid(
                "sampling.ratio",
                format!("must exceed 1, got {}", self.ratio),
            ));
        }
        Ok(())
    }
}

fn default_kernel_t0() -> f64 {
    10.0
}
fn default_kernel_t_max() -> f64 {
    1000.0
}

/// Knobs of the kernel-norm suite; `sigma` and `a_values` default to the
/// params block (sigma1 and {0, sigma, 2 sigma}).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelBlock {
    pub sigma: Option<f64>,
    pub a_values: Option<Vec<f64>>,
    pub t0: Option<f64>,
    pub t_max: Option<f64>,
}

impl KernelBlock {
    pub fn sigma_for(&self, params: &ProblemParams) -> f64 {
        self.sigma.unwrap_or(params.sigma1)
    }

    pub fn a_values_for(&self, params: &ProblemParams) -> Vec<f64> {
        let s = self.sigma_for(params);
        self.a_values
            .clone()
            .unwrap_or_else(|| vec![0.0, s, 2.0 * s])
    }

    pub fn window(&self) -> (f64, f64) {
        (
            self.t0.unwrap_or_else(default_kernel_t0),
            self.t_max.unwrap_or_else(default_kernel_t_max),
        )
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let (t0, t_max) = self.window();
        if !(t0 > 0.0 && t_max > t0 && t_max.is_finite()) {
            return Err(invalid(
                "kernel",
                format!("need 0 < t0 < t_max, got t0 = {t0}, t_max = {t_max}"),
            ));
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(invalid(
                    "kernel.sigma",
                    format!("must be positive, got {s}"),
                ));
            }
        }
        if let Some(a) = &self.a_values {
            if a.is_empty() || a.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(invalid(
                    "kernel.a_values",
                    "need a nonempty list of finite a >= 0",
                ));
            }
        }
        Ok(())
    }
}

/// Knobs of the linear-rate suite; everything defaults to the params
/// block and the suite's standard grid.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearBlock {
    pub sigma: Option<f64>,
}

impl LinearBlock {
    pub fn sigma_for(&self, params: &ProblemParams) -> f64 {
        self.sigma.unwrap_or(params.sigma1)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if let Some(s) = self.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(invalid(
                    "linear.sigma",
                    format!("must be positive, got {s}"),
                ));
            }
        }
        Ok(())
    }
}

fn flag_true() -> bool {
    true
}

/// Which analyses cmd_run performs on the recorded series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSelection {
    /// Weighted envelope checks against the predicted rate table.
    #[serde(default = "flag_true")]
    pub envelopes: bool,
    /// Gagliardo-Nirenberg envelope checks on the raised norms.
    #[serde(default = "flag_true")]
    pub gn: bool,
    /// Log-log slope fits reported alongside the envelopes.
    #[serde(default = "flag_true")]
    pub fits: bool,
}

impl Default for SuiteSelection {
    fn default() -> Self {
        SuiteSelection {
            envelopes: true,
            gn: true,
            fits: true,
        }
    }
}

fn default_horizon() -> f64 {
    100.0
}

/// The full run configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: ProblemParams,
    pub grid: GridSpec,
    #[serde(default)]
    pub stepper: StepperConfig,
    #[serde(default)]
    pub data: DataConfig,
    /// Horizon T of time-marching commands.
    #[serde(default = "default_horizon")]
    pub t_end: f64,
    #[serde(default)]
    pub sampling: SamplingConfig,
    /// Output directory; overridden by --out, defaulted from the output
    /// root when absent.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub kernel: KernelBlock,
    #[serde(default)]
    pub linear: LinearBlock,
    /// Parameter grid of cmd_scan; the documented default grid is used
    /// when absent.
    #[serde(default)]
    pub scan: Option<ParamGrid>,
    #[serde(default)]
    pub suites: SuiteSelection,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params
            .validate()
            .map_err(|e| invalid("params", e.to_string()))?;
        self.grid
            .validate()
            .map_err(|e| invalid("grid", e.to_string()))?;
        // The grid-dimension/params.n match is a time-marching
        // precondition, enforced where a plan meets the params: a
        // classification-only config may pair an unmarchable tuple (even
        // n, n > 7) with any structurally valid grid block.
        self.stepper
            .validate()
            .map_err(|e| invalid("stepper", e.to_string()))?;
        self.data.validate()?;
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(invalid(
                "t_end",
                format!("must be positive, got {}", self.t_end),
            ));
        }
        self.sampling.validate()?;
        self.kernel.validate()?;
        self.linear.validate()?;
        if let Some(scan) = &self.scan {
            if scan.cardinality() == 0 {
                return Err(invalid("scan", "every range must be nonempty"));
            }
        }
        Ok(())
    }

    /// Output times of a time-marching run: the geometric cadence up to
    /// the horizon (the horizon itself always included; the stepper adds
    /// t = 0 on its own).
    pub fn output_times(&self) -> Vec<f64> {
        crate::decay_harness::geometric_times(self.sampling.t0, self.sampling.ratio, self.t_end)
    }
}

/// The documented default scan grid: a p1 x p2 sweep around the
/// reference instance (7, 1, 1, 1, 4), 7 x 7 = 49 tuples.
pub fn default_scan_grid() -> ParamGrid {
    let powers = vec![6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0];
    ParamGrid {
        n: vec![7],
        sigma1: vec![1.0],
        sigma2: vec![1.0],
        m: vec![1.0],
        q: vec![4.0],
        p1: powers.clone(),
        p2: powers,
    }
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads, parses, and validates a config file.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_config(&text)
}

/// Environment variable naming the default output root.
pub const OUT_ROOT_ENV: &str = "SEVO_OUT_ROOT";

/// Output directory resolution: --out flag, then the config's out_dir,
/// then `<output root>/<command>` where the root comes from
/// [`OUT_ROOT_ENV`] or falls back to `runs`.
pub fn resolve_out_dir(
    flag: Option<&Path>,
    cfg: Option<&Path>,
    env_root: Option<PathBuf>,
    command: &str,
) -> PathBuf {
    if let Some(f) = flag {
        return f.to_path_buf();
    }
    if let Some(c) = cfg {
        return c.to_path_buf();
    }
    env_root
        .unwrap_or_else(|| PathBuf::from("runs"))
        .join(command)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution_engine::Scheme;

    const MINIMAL: &str = r#"{
        "params": {"n": 7, "sigma1": 1.0, "sigma2": 1.0, "m": 1.0, "q": 4.0, "p1": 9.0, "p2": 10.0},
        "grid": {"mode": "radial", "n": 7, "points": 64, "r_max": 40.0}
    }"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.t_end, 100.0);
        assert_eq!(cfg.stepper, StepperConfig::default());
        assert_eq!(cfg.data, DataConfig::default());
        assert_eq!(cfg.sampling, SamplingConfig::default());
        assert!(cfg.suites.envelopes && cfg.suites.gn && cfg.suites.fits);
        assert!(cfg.out_dir.is_none());
        assert!(cfg.scan.is_none());
    }

    #[test]
    fn config_roundtrips_through_json() {
        let cfg = parse_config(MINIMAL).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let back = parse_config(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_field_is_a_parse_error_naming_the_field() {
        let bad = MINIMAL.replace("\"grid\"", "\"grdi\"");
        match parse_config(&bad) {
            Err(ConfigError::Parse { message, .. }) => {
                assert!(
                    message.contains("grdi"),
                    "message must name the field: {message}"
                );
            }
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn syntax_error_carries_line_and_column() {
        match parse_config("{\n  \"params\": !\n}") {
            Err(ConfigError::Parse { line, column, .. }) => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn grid_dimension_mismatch_is_not_a_config_error() {
        // A classification-only config may pair an unmarchable tuple with
        // any valid grid block; the marching commands enforce the match.
        let mixed = MINIMAL.replace("\"n\": 7, \"points\"", "\"n\": 3, \"points\"");
        let cfg = parse_config(&mixed).expect("dimension mismatch parses");
        assert_ne!(u32::from(cfg.grid.dim()), cfg.params.n);
    }

    #[test]
    fn params_violations_are_named() {
        let bad = MINIMAL.replace("\"q\": 4.0", "\"q\": 0.5");
        match parse_config(&bad) {
            Err(ConfigError::Invalid { field, message }) => {
                assert_eq!(field, "params");
                assert!(message.contains("m"), "message: {message}");
            }
            other => panic!("expected an invalid-field error, got {other:?}"),
        }
    }

    #[test]
    fn stepper_block_is_parsed_and_validated() {
        let cfg = parse_config(&MINIMAL.replace(
            "\"grid\"",
            "\"stepper\": {\"h\": 0.1, \"scheme\": \"frozen\"}, \"grid\"",
        ))
        .unwrap();
        assert_eq!(cfg.stepper.h, 0.1);
        assert_eq!(cfg.stepper.scheme, Scheme::Frozen);
        let bad = MINIMAL.replace("\"grid\"", "\"stepper\": {\"h\": -1.0}, \"grid\"");
        match parse_config(&bad) {
            Err(ConfigError::Invalid { field, .. }) => assert_eq!(field, "stepper"),
            other => panic!("expected an invalid-field error, got {other:?}"),
        }
    }

    #[test]
    fn gaussian_and_bump_profiles() {
        let g = DataConfig {
            kind: DataKind::Gaussian,
            amplitude: 2.0,
            width: 3.0,
            slots: [1.0; 4],
        };
        assert!((g.profile(0.0) - 1.0).abs() < 1e-15);
        assert!((g.profile(3.0) - (-0.5f64).exp()).abs() < 1e-15);
        let b = DataConfig {
            kind: DataKind::Bump,
            ..g
        };
        assert_eq!(b.profile(0.0), 1.0);
        assert_eq!(b.profile(3.0), 0.0);
        assert_eq!(b.profile(10.0), 0.0);
        assert!(b.profile(1.5) > 0.0 && b.profile(1.5) < 1.0);
    }

    #[test]
    fn data_build_applies_amplitude_and_slots() {
        let plan = TransformPlan::new(GridSpec::Radial {
            n: 3,
            points: 32,
            r_max: 10.0,
        })
        .unwrap();
        let d = DataConfig {
            kind: DataKind::Gaussian,
            amplitude: 0.5,
            width: 1.0,
            slots: [1.0, 0.0, 2.0, 0.0],
        };
        let data = d.build(&plan);
        assert!((data.u0.values[0] - 0.5).abs() < 1e-15);
        assert!(data.u1.values.iter().all(|v| *v == 0.0));
        assert!((data.v0.values[0] - 1.0).abs() < 1e-15);
        assert!(data.v1.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn output_times_cover_zero_to_horizon() {
        let mut cfg = parse_config(MINIMAL).unwrap();
        cfg.t_end = 20.0;
        let times = cfg.output_times();
        assert!(times[0] > 0.0, "t = 0 is added by the run itself");
        assert_eq!(*times.last().unwrap(), 20.0);
        assert!(times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn default_scan_grid_cardinality() {
        let g = default_scan_grid();
        assert_eq!(g.cardinality(), 49);
        assert_eq!(g.tuples().len(), 49);
    }

    #[test]
    fn out_dir_resolution_precedence() {
        let flag = PathBuf::from("/tmp/flagged");
        let cfg = PathBuf::from("/tmp/from-config");
        assert_eq!(
            resolve_out_dir(Some(&flag), Some(&cfg), Some(PathBuf::from("/env")), "run"),
            flag
        );
        assert_eq!(
            resolve_out_dir(None, Some(&cfg), Some(PathBuf::from("/env")), "run"),
            cfg
        );
        assert_eq!(
            resolve_out_dir(None, None, Some(PathBuf::from("/env")), "run"),
            PathBuf::from("/env/run")
        );
        assert_eq!(
            resolve_out_dir(None, None, None, "kernel"),
            PathBuf::from("runs/kernel")
        );
    }

    #[test]
    fn bad_blocks_are_rejected_with_field_names() {
        for (patch, field) in [
            ("\"t_end\": -3.0, ", "t_end"),
            ("\"sampling\": {\"t0\": 0.0}, ", "sampling.t0"),
            ("\"sampling\": {\"ratio\": 1.0}, ", "sampling.ratio"),
            ("\"data\": {\"width\": 0.0}, ", "data.width"),
            ("\"data\": {\"amplitude\": -1.0}, ", "data.amplitude"),
            ("\"kernel\": {\"t0\": 50.0, \"t_max\": 20.0}, ", "kernel"),
            ("\"kernel\": {\"a_values\": []}, ", "kernel.a_values"),
            ("\"linear\": {\"sigma\": 0.0}, ", "linear.sigma"),
        ] {
            let text = MINIMAL.replace("\"params\"", &format!("{patch}\"params\""));
            match parse_config(&text) {
                Err(ConfigError::Invalid { field: f, .. }) => {
                    assert_eq!(f, field, "wrong field for patch {patch}")
                }
                other => panic!("expected invalid `{field}`, got {other:?}"),
            }
        }
    }

    #[test]
    fn scan_block_parses_and_empty_ranges_are_rejected() {
        let with_scan = MINIMAL.replace(
            "\"params\"",
            "\"scan\": {\"n\": [7], \"sigma1\": [1.0], \"sigma2\": [1.0], \"m\": [1.0], \"q\": [4.0], \"p1\": [9.0, 10.0], \"p2\": [10.0]}, \"params\"",
        );
        let cfg = parse_config(&with_scan).unwrap();
        assert_eq!(cfg.scan.as_ref().unwrap().cardinality(), 2);
        let empty = with_scan.replace("\"p1\": [9.0, 10.0]", "\"p1\": []");
        match parse_config(&empty) {
            Err(ConfigError::Invalid { field, .. }) => assert_eq!(field, "scan"),
            other => panic!("expected invalid scan, got {other:?}"),
        }
    }
}
