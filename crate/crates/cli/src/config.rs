//! Scenario files: TOML with `[scenario]`, `[run]`, `[source]` and `[check]`
//! sections, every key optional.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};
use waterwave::evolution::{BottomSource, RunConfig};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    #[default]
    FlatLinear,
    StandingWave,
    GaussianBump,
    BottomForcing,
    RadiusDecaySweep,
    PicardVsRk4,
    IdentitySuite,
}

impl ScenarioKind {
    pub fn label(self) -> &'static str {
        match self {
            ScenarioKind::FlatLinear => "flat_linear",
            ScenarioKind::StandingWave => "standing_wave",
            ScenarioKind::GaussianBump => "gaussian_bump",
            ScenarioKind::BottomForcing => "bottom_forcing",
            ScenarioKind::RadiusDecaySweep => "radius_decay_sweep",
            ScenarioKind::PicardVsRk4 => "picard_vs_rk4",
            ScenarioKind::IdentitySuite => "identity_suite",
        }
    }

    fn default_amplitude(self) -> f64 {
        match self {
            ScenarioKind::FlatLinear | ScenarioKind::PicardVsRk4 => 1e-3,
            ScenarioKind::StandingWave | ScenarioKind::IdentitySuite => 0.05,
            ScenarioKind::GaussianBump => 0.02,
            ScenarioKind::BottomForcing | ScenarioKind::RadiusDecaySweep => 0.01,
        }
    }

    fn default_mode(self) -> i64 {
        match self {
            ScenarioKind::FlatLinear => 2,
            _ => 1,
        }
    }

    /// Run settings this scenario needs unless the file sets them.
    fn run_preset(self) -> Vec<(&'static str, Value)> {
        use Value::{Float, Integer};
        match self {
            ScenarioKind::RadiusDecaySweep => vec![
                ("M", Integer(128)),
                ("Nz", Integer(24)),
                ("lambda", Float(0.4)),
                ("K", Float(1e-3)),
                ("s", Float(1.0)),
                ("cadence", Integer(20)),
            ],
            ScenarioKind::PicardVsRk4 | ScenarioKind::IdentitySuite => {
                vec![("M", Integer(32)), ("Nz", Integer(24)), ("cadence", Integer(1))]
            }
            // localized data has a large analytic norm, so the radius budget needs a slow schedule
            ScenarioKind::GaussianBump => vec![("K", Float(1e-3))],
            _ => Vec::new(),
        }
    }
}

/// Initial data and sweep parameters.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioParams {
    pub name: ScenarioKind,
    /// Elevation amplitude (forcing amplitude for `bottom_forcing`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    /// Wavenumber along x of the initial wave.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<i64>,
    /// Wavenumber along y (d = 2).
    pub mode_y: i64,
    /// Width of the Gaussian bump.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    /// When set, `t_final` becomes this many linear periods of the initial mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub periods: Option<f64>,
    /// Amplitudes of a sweep.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    /// Analyticity radius of the initial elevation in the decay sweep.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
    /// Random states drawn by the identity suite.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
}

/// Tolerances of `check`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckTolerances {
    pub gradient_identity: f64,
    pub div_v_identity: f64,
    pub evolution_identity: f64,
}

impl Default for CheckTolerances {
    fn default() -> Self {
        CheckTolerances { gradient_identity: 1e-5, div_v_identity: 1e-5, evolution_identity: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Spec {
    pub scenario: ScenarioParams,
    pub run: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<BottomSource>,
    pub check: CheckTolerances,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn parse_error(text: &str, e: &toml::de::Error) -> ConfigError {
    let line = e.span().map(|s| line_of(text, s.start)).unwrap_or(0);
    ConfigError::Parse { line, message: e.message().to_string() }
}

/// Keys whose integers may be negative.
const SIGNED_KEYS: &[&str] = &["mode", "mode_y", "k"];

fn reject_negative(table: &Table, path: &str) -> Result<(), ConfigError> {
    for (key, value) in table {
        let full = if path.is_empty() { key.clone() } else { format!("{path}.{key}") };
        match value {
            Value::Integer(i) if *i < 0 && !SIGNED_KEYS.contains(&key.as_str()) => {
                return Err(ConfigError::Invalid { key: key.clone(), reason: format!("{full} = {i} must be non-negative") });
            }
            Value::Table(t) => reject_negative(t, &full)?,
            Value::Array(items) => {
                for item in items {
                    if let Value::Table(t) = item {
                        reject_negative(t, &full)?;
                    }
                }
            }
            _ => {}
        }
    }
    Ok(())
}

/// Parses and validates a scenario file. Missing keys take their defaults,
/// which [`Spec::to_toml`] writes back out.
pub fn parse_config(text: &str) -> Result<Spec, ConfigError> {
    let mut table: Table = text.parse().map_err(|e| parse_error(text, &e))?;
    reject_negative(&table, "")?;

    // deserializing from the text keeps spans, hence line numbers
    let mut spec: Spec = toml::from_str(text).map_err(|e| parse_error(text, &e))?;
    let preset = spec.scenario.name.run_preset();
    if !preset.is_empty() {
        let run = table.entry("run").or_insert_with(|| Value::Table(Table::new()));
        if let Value::Table(run) = run {
            for (k, v) in preset {
                run.entry(k.to_string()).or_insert(v);
            }
        }
        spec = Spec::deserialize(table).map_err(|e| ConfigError::Parse { line: 0, message: e.message().to_string() })?;
    }
    spec.resolved()
}

impl Spec {
    /// Fills scenario defaults and validates everything.
    fn resolved(mut self) -> Result<Spec, ConfigError> {
        let invalid = |key: &str, reason: &str| ConfigError::Invalid { key: key.into(), reason: reason.into() };
        let kind = self.scenario.name;
        let sc = &mut self.scenario;
        sc.amplitude.get_or_insert(kind.default_amplitude());
        sc.mode.get_or_insert(kind.default_mode());
        sc.width.get_or_insert(0.5);
        sc.eps.get_or_insert_with(|| vec![0.01, 0.005]);
        sc.radius0.get_or_insert(0.5);
        sc.horizon_c.get_or_insert(1.0);
        sc.max_steps.get_or_insert(10_000);
        sc.samples.get_or_insert(3);
        if !sc.amplitude.unwrap().is_finite() {
            return Err(invalid("amplitude", "must be finite"));
        }
        if !(sc.width.unwrap() > 0.0) {
            return Err(invalid("width", "must be positive"));
        }
        if sc.periods.is_some_and(|p| !(p > 0.0)) {
            return Err(invalid("periods", "must be positive"));
        }
        let eps = sc.eps.as_ref().unwrap();
        if eps.is_empty() || eps.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(invalid("eps", "must be a non-empty list of non-negative amplitudes"));
        }
        if !(sc.radius0.unwrap() > 0.0) || !(sc.horizon_c.unwrap() > 0.0) || sc.max_steps.unwrap() == 0 {
            return Err(invalid("radius0", "radius0, horizon_c and max_steps must be positive"));
        }
        if self.run.dim == 1 && sc.mode_y != 0 {
            return Err(invalid("mode_y", "must be 0 when d = 1"));
        }
        if sc.mode.unwrap() == 0 && sc.mode_y == 0 && !matches!(kind, ScenarioKind::GaussianBump) {
            return Err(invalid("mode", "the initial wave needs a nonzero wavenumber"));
        }
        let (m, my) = (sc.mode.unwrap().unsigned_abs(), sc.mode_y.unsigned_abs());
        if m.max(my) as usize > self.run.max_mode {
            return Err(invalid("mode", "lies outside the lattice"));
        }
        let c = &self.check;
        if [c.gradient_identity, c.div_v_identity, c.evolution_identity].iter().any(|t| !(*t > 0.0)) {
            return Err(invalid("check", "tolerances must be positive"));
        }
        self.run.validate().map_err(|e| match e {
            waterwave::error::Error::InvalidParameter { key, reason } => ConfigError::Invalid { key, reason },
            other => ConfigError::Invalid { key: "run".into(), reason: other.to_string() },
        })?;
        if let Some(src) = &self.source {
            let lat = self.run.lattice().map_err(|e| invalid("run", &e.to_string()))?;
            src.check(&lat).map_err(|e| invalid("source", &e.to_string()))?;
        }
        Ok(self)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("spec serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn amplitude(&self) -> f64 {
        self.scenario.amplitude.unwrap_or(self.scenario.name.default_amplitude())
    }

    pub fn mode(&self) -> (i64, i64) {
        (self.scenario.mode.unwrap_or(self.scenario.name.default_mode()), self.scenario.mode_y)
    }
}
