//! Scenario files.
//!
//! A scenario is a TOML document (see the README for the schema). Loading
//! converts every dB quantity to linear units exactly once and checks all
//! ranges, reporting the offending field together with its file and line.
//! The resolved form ([`Scenario`]) is what gets embedded in every output;
//! it can be fed back in as a `.json` file to reproduce a run exactly.

use std::fmt;
use std::path::Path;

use aoi_mpr::opt::Axis;
use aoi_mpr::phy::{db_to_linear, LinkGeometry, MAX_SECONDARY};
use aoi_mpr::{AccessConfig, ChannelParams, GridSpec, SimConfig, TopologySpec};
use serde::{Deserialize, Serialize};

/// Name of the README section documenting the cross-link distances.
pub const DEFAULT_GEOMETRY_SECTION: &str = "Default geometry";

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{path}: cannot read scenario: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Syntax { path: String, message: String },
    #[error("{location}: `{field}` = {value} is out of range: {reason}")]
    Range {
        location: String,
        field: String,
        value: String,
        reason: String,
    },
    #[error(
        "{location}: missing required distance `{field}`; the reference values are listed in the \
         \"{DEFAULT_GEOMETRY_SECTION}\" section of README.md"
    )]
    MissingGeometry { location: String, field: String },
    #[error("{location}: {message}")]
    Invalid { location: String, message: String },
}

impl ScenarioError {
    /// Dotted name of the field the error concerns, if any.
    pub fn field(&self) -> Option<&str> {
        match self {
            ScenarioError::Range { field, .. } | ScenarioError::MissingGeometry { field, .. } => Some(field),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constraints {
    pub mu_min: Option<f64>,
    pub delta_max: Option<f64>,
}

/// Axes over which `sweep` and the `optimize-*` commands iterate. Any axis
/// left out is held at the scenario's own value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    pub lambda: Option<Axis>,
    pub q_pr: Option<Axis>,
    pub q_s: Option<Axis>,
    pub n_secondary: Option<Vec<usize>>,
    pub mu_min: Option<Vec<f64>>,
    pub delta_max: Option<Vec<f64>>,
}

impl SweepAxes {
    /// Scenario fields with a sweep axis attached.
    pub fn sweepable(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.lambda.is_some() {
            out.push("lambda");
        }
        if self.q_pr.is_some() {
            out.push("q_pr");
        }
        if self.q_s.is_some() {
            out.push("q_s");
        }
        if self.n_secondary.is_some() {
            out.push("n_secondary");
        }
        if self.mu_min.is_some() {
            out.push("mu_min");
        }
        if self.delta_max.is_some() {
            out.push("delta_max");
        }
        out
    }
}

/// A fully resolved scenario in linear units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub topology: TopologySpec,
    pub access: AccessConfig,
    pub sim: SimConfig,
    pub grid: GridSpec,
    #[serde(default)]
    pub constraints: Constraints,
    #[serde(default)]
    pub sweep: SweepAxes,
}

impl Scenario {
    pub fn sweepable(&self) -> Vec<&'static str> {
        self.sweep.sweepable()
    }

    fn validate_resolved(&self, path: &str) -> Result<(), ScenarioError> {
        let invalid = |e: aoi_mpr::Error| ScenarioError::Invalid {
            location: path.to_string(),
            message: e.to_string(),
        };
        self.topology.validate().map_err(invalid)?;
        self.access.validate().map_err(invalid)?;
        self.sim.validate().map_err(invalid)?;
        self.grid.validate().map_err(invalid)
    }
}

// ---------------------------------------------------------------------------
// On-disk TOML schema.

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[allow(dead_code)]
    description: Option<String>,
    topology: RawTopology,
    channel: RawChannel,
    access: RawAccess,
    sim: Option<RawSim>,
    grid: Option<RawGrid>,
    constraints: Option<Constraints>,
    sweep: Option<RawSweep>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTopology {
    n_secondary: usize,
    path_loss_exponent: f64,
    fading_param: Option<f64>,
    primary_tx_power_mw: f64,
    secondary_tx_power_mw: f64,
    distance_m: RawDistances,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDistances {
    primary_link: f64,
    secondary_link: f64,
    secondary_to_primary_rx: Option<f64>,
    primary_to_secondary_rx: Option<f64>,
    secondary_cross: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    sinr_threshold_db: f64,
    noise_dbm: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAccess {
    lambda: f64,
    q_pr: f64,
    q_s: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    horizon: Option<u64>,
    warmup: Option<u64>,
    replications: Option<usize>,
    seed: Option<u64>,
    record_packets: Option<bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    coarse_step: Option<f64>,
    refine_factor: Option<u32>,
    refine_rounds: Option<u32>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawAxis {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawCountAxis {
    List(Vec<usize>),
    Range { start: usize, stop: usize, step: usize },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    lambda: Option<RawAxis>,
    q_pr: Option<RawAxis>,
    q_s: Option<RawAxis>,
    n_secondary: Option<RawCountAxis>,
    mu_min: Option<Vec<f64>>,
    delta_max: Option<Vec<f64>>,
}

/// Finds the line of `key` inside `[section]`, for error messages.
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut section_line = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(header) = line.strip_prefix('[') {
            current = header.trim_end_matches(']').trim().to_string();
            if current == section {
                section_line = Some(i + 1);
            }
            continue;
        }
        if current == section {
            if let Some(rest) = line.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return Some(i + 1);
                }
            }
        }
    }
    section_line
}

struct Checker<'a> {
    path: &'a str,
    text: &'a str,
}

impl Checker<'_> {
    fn location(&self, section: &str, key: &str) -> String {
        match locate(self.text, section, key) {
            Some(line) => format!("{}:{line}", self.path),
            None => format!("{} [{section}]", self.path),
        }
    }

    fn range(&self, section: &str, key: &str, value: f64, ok: bool, reason: &str) -> Result<(), ScenarioError> {
        if ok {
            return Ok(());
        }
        Err(ScenarioError::Range {
            location: self.location(section, key),
            field: format!("{section}.{key}"),
            value: format!("{value:?}"),
            reason: reason.to_string(),
        })
    }

    fn probability(&self, section: &str, key: &str, value: f64) -> Result<(), ScenarioError> {
        self.range(section, key, value, (0.0..=1.0).contains(&value), "must lie in [0, 1]")
    }

    fn positive(&self, section: &str, key: &str, value: f64) -> Result<(), ScenarioError> {
        self.range(section, key, value, value > 0.0 && value.is_finite(), "must be positive and finite")
    }

    fn distance(&self, key: &str, value: Option<f64>) -> Result<f64, ScenarioError> {
        const SECTION: &str = "topology.distance_m";
        let value = value.ok_or_else(|| ScenarioError::MissingGeometry {
            location: self.location(SECTION, key),
            field: format!("{SECTION}.{key}"),
        })?;
        self.positive(SECTION, key, value)?;
        Ok(value)
    }

    fn axis(&self, key: &str, raw: Option<RawAxis>, unit_interval: bool) -> Result<Option<Axis>, ScenarioError> {
        let Some(raw) = raw else { return Ok(None) };
        let axis = match raw {
            RawAxis::List(values) => Axis(values),
            RawAxis::Range { start, stop, step } => {
                self.range("sweep", key, step, step > 0.0, "range step must be positive")?;
                self.range("sweep", key, stop, stop >= start, "range stop must not be below start")?;
                Axis::range(start, stop, step).map_err(|e| ScenarioError::Invalid {
                    location: self.location("sweep", key),
                    message: e.to_string(),
                })?
            }
        };
        self.range("sweep", key, axis.0.len() as f64, !axis.0.is_empty(), "axis is empty")?;
        for &v in &axis.0 {
            if unit_interval {
                self.probability("sweep", key, v)?;
            }
        }
        Ok(Some(axis))
    }
}

fn resolve(raw: RawScenario, checker: &Checker) -> Result<Scenario, ScenarioError> {
    let t = &raw.topology;
    checker.range(
        "topology",
        "n_secondary",
        t.n_secondary as f64,
        t.n_secondary <= MAX_SECONDARY,
        "at most 10000 secondaries",
    )?;
    checker.positive("topology", "path_loss_exponent", t.path_loss_exponent)?;
    checker.positive("topology", "primary_tx_power_mw", t.primary_tx_power_mw)?;
    checker.positive("topology", "secondary_tx_power_mw", t.secondary_tx_power_mw)?;
    let fading = t.fading_param.unwrap_or(1.0);
    checker.positive("topology", "fading_param", fading)?;

    let d = &t.distance_m;
    let primary_link = checker.distance("primary_link", Some(d.primary_link))?;
    let secondary_link = checker.distance("secondary_link", Some(d.secondary_link))?;
    let secondary_to_primary_rx = checker.distance("secondary_to_primary_rx", d.secondary_to_primary_rx)?;
    let primary_to_secondary_rx = checker.distance("primary_to_secondary_rx", d.primary_to_secondary_rx)?;
    let secondary_cross = checker.distance("secondary_cross", d.secondary_cross)?;

    let c = &raw.channel;
    checker.range(
        "channel",
        "sinr_threshold_db",
        c.sinr_threshold_db,
        c.sinr_threshold_db.is_finite(),
        "must be finite",
    )?;
    checker.range(
        "channel",
        "noise_dbm",
        c.noise_dbm,
        c.noise_dbm < f64::INFINITY && !c.noise_dbm.is_nan(),
        "must be finite or -inf",
    )?;
    // The single dB -> linear conversion point.
    let channel = ChannelParams {
        sinr_threshold: db_to_linear(c.sinr_threshold_db),
        noise_power: db_to_linear(c.noise_dbm),
    };

    let link = |power: f64, distance: f64| LinkGeometry {
        tx_power: power,
        distance,
        path_loss_exponent: t.path_loss_exponent,
        fading_param: fading,
    };
    let topology = TopologySpec {
        n_secondary: t.n_secondary,
        primary_link: link(t.primary_tx_power_mw, primary_link),
        secondary_link: link(t.secondary_tx_power_mw, secondary_link),
        secondary_to_primary_rx: link(t.secondary_tx_power_mw, secondary_to_primary_rx),
        primary_to_secondary_rx: link(t.primary_tx_power_mw, primary_to_secondary_rx),
        secondary_cross: link(t.secondary_tx_power_mw, secondary_cross),
        primary_channel: channel,
        secondary_channel: channel,
    };

    let a = &raw.access;
    checker.probability("access", "lambda", a.lambda)?;
    checker.probability("access", "q_pr", a.q_pr)?;
    checker.probability("access", "q_s", a.q_s)?;
    let access = AccessConfig {
        arrival_rate: a.lambda,
        primary_access_prob: a.q_pr,
        secondary_access_prob: a.q_s,
    };

    let defaults = SimConfig::default();
    let sim = match raw.sim {
        None => defaults,
        Some(s) => SimConfig {
            horizon: s.horizon.unwrap_or(defaults.horizon),
            warmup: s.warmup.unwrap_or(defaults.warmup),
            replications: s.replications.unwrap_or(defaults.replications),
            seed: s.seed.unwrap_or(defaults.seed),
            record_packets: s.record_packets.unwrap_or(defaults.record_packets),
        },
    };
    checker.range(
        "sim",
        "warmup",
        sim.warmup as f64,
        sim.warmup < sim.horizon,
        "must be below sim.horizon",
    )?;
    checker.range(
        "sim",
        "replications",
        sim.replications as f64,
        sim.replications >= 1,
        "must be at least 1",
    )?;

    let gdef = GridSpec::default();
    let grid = match raw.grid {
        None => gdef,
        Some(g) => GridSpec {
            coarse_step: g.coarse_step.unwrap_or(gdef.coarse_step),
            refine_factor: g.refine_factor.unwrap_or(gdef.refine_factor),
            refine_rounds: g.refine_rounds.unwrap_or(gdef.refine_rounds),
        },
    };
    checker.range(
        "grid",
        "coarse_step",
        grid.coarse_step,
        grid.coarse_step > 0.0 && grid.coarse_step <= 0.1,
        "must lie in (0, 0.1]",
    )?;
    checker.range(
        "grid",
        "refine_factor",
        grid.refine_factor as f64,
        grid.refine_factor >= 2,
        "must be at least 2",
    )?;

    let constraints = raw.constraints.unwrap_or_default();
    if let Some(m) = constraints.mu_min {
        checker.range("constraints", "mu_min", m, m >= 0.0, "must be >= 0")?;
    }
    if let Some(d) = constraints.delta_max {
        checker.range("constraints", "delta_max", d, d >= 1.0, "must be >= 1")?;
    }

    let sweep = match raw.sweep {
        None => SweepAxes::default(),
        Some(s) => {
            let n_secondary = match s.n_secondary {
                None => None,
                Some(RawCountAxis::List(v)) => Some(v),
                Some(RawCountAxis::Range { start, stop, step }) => {
                    checker.range("sweep", "n_secondary", step as f64, step > 0, "range step must be positive")?;
                    Some((start..=stop).step_by(step.max(1)).collect())
                }
            };
            if let Some(ns) = &n_secondary {
                for &n in ns {
                    checker.range("sweep", "n_secondary", n as f64, n <= MAX_SECONDARY, "at most 10000 secondaries")?;
                }
            }
            for &m in s.mu_min.iter().flatten() {
                checker.range("sweep", "mu_min", m, m >= 0.0, "must be >= 0")?;
            }
            for &d in s.delta_max.iter().flatten() {
                checker.range("sweep", "delta_max", d, d >= 1.0, "must be >= 1")?;
            }
            SweepAxes {
                lambda: checker.axis("lambda", s.lambda, true)?,
                q_pr: checker.axis("q_pr", s.q_pr, true)?,
                q_s: checker.axis("q_s", s.q_s, true)?,
                n_secondary,
                mu_min: s.mu_min,
                delta_max: s.delta_max,
            }
        }
    };

    Ok(Scenario {
        topology,
        access,
        sim,
        grid,
        constraints,
        sweep,
    })
}

/// Parses scenario text. `origin` is used in error messages only.
pub fn parse_scenario_str(text: &str, origin: &str) -> Result<Scenario, ScenarioError> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| ScenarioError::Syntax {
        path: origin.to_string(),
        message: e.to_string().trim_end().to_string(),
    })?;
    let checker = Checker { path: origin, text };
    let scenario = resolve(raw, &checker)?;
    scenario.validate_resolved(origin)?;
    Ok(scenario)
}

/// Parses a resolved scenario previously embedded in an output file.
pub fn parse_resolved_str(text: &str, origin: &str) -> Result<Scenario, ScenarioError> {
    let scenario: Scenario = serde_json::from_str(text).map_err(|e| ScenarioError::Syntax {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    scenario.validate_resolved(origin)?;
    Ok(scenario)
}

/// Loads a scenario: TOML by default, a resolved scenario for `.json`.
pub fn parse_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Read {
        path: display.clone(),
        source,
    })?;
    if path.extension().is_some_and(|e| e == "json") {
        parse_resolved_str(&text, &display)
    } else {
        parse_scenario_str(&text, &display)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serde_json::to_string(self).map_err(|_| fmt::Error)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const BASE: &str = r#"
[topology]
n_secondary = 2
path_loss_exponent = 4.0
primary_tx_power_mw = 10.0
secondary_tx_power_mw = 0.1

[topology.distance_m]
primary_link = 150.0
secondary_link = 40.0
secondary_to_primary_rx = 60.0
primary_to_secondary_rx = 150.0
secondary_cross = 40.0

[channel]
sinr_threshold_db = 5.0
noise_dbm = -121.0

[access]
lambda = 0.2
q_pr = 0.8
q_s = 0.3
"#;

    #[test]
    fn base_matches_reference_topology() {
        let s = parse_scenario_str(BASE, "base").unwrap();
        assert_eq!(s.topology, TopologySpec::reference(2, 5.0));
        assert_eq!(s.sim, SimConfig::default());
        assert_eq!(s.grid, GridSpec::default());
        assert!(s.sweepable().is_empty());
    }

    #[test]
    fn out_of_range_probability_names_field_and_line() {
        let text = BASE.replace("q_pr = 0.8", "q_pr = 1.5");
        let err = parse_scenario_str(&text, "bad.scenario").unwrap_err();
        assert_eq!(err.field(), Some("access.q_pr"));
        let msg = err.to_string();
        assert!(msg.contains("q_pr") && msg.contains("1.5"), "{msg}");
        let line = text.lines().position(|l| l.starts_with("q_pr")).unwrap() + 1;
        assert!(msg.starts_with(&format!("bad.scenario:{line}:")), "{msg}");
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = BASE.replace("q_s = 0.3", "q_s = 0.3\nq_ss = 0.1");
        let msg = parse_scenario_str(&text, "typo").unwrap_err().to_string();
        assert!(msg.contains("q_ss"), "{msg}");
        assert!(msg.contains("line"), "{msg}");
    }

    #[test]
    fn missing_cross_distance_points_at_readme() {
        let text = BASE.replace("secondary_to_primary_rx = 60.0\n", "");
        let err = parse_scenario_str(&text, "geo").unwrap_err();
        assert!(matches!(err, ScenarioError::MissingGeometry { .. }));
        let msg = err.to_string();
        assert!(msg.contains("secondary_to_primary_rx"));
        assert!(msg.contains(DEFAULT_GEOMETRY_SECTION) && msg.contains("README"));
    }

    #[test]
    fn missing_required_field() {
        let text = BASE.replace("lambda = 0.2\n", "");
        let msg = parse_scenario_str(&text, "m").unwrap_err().to_string();
        assert!(msg.contains("lambda"), "{msg}");
    }

    #[test]
    fn sweep_axes() {
        let text = format!(
            "{BASE}\n[sweep]\nlambda = {{ start = 0.05, stop = 0.5, step = 0.05 }}\nn_secondary = [1, 2, 3]\n\
             delta_max = [5.0, 8.0]\n"
        );
        let s = parse_scenario_str(&text, "s").unwrap();
        assert_eq!(s.sweepable(), vec!["lambda", "n_secondary", "delta_max"]);
        assert_eq!(s.sweep.lambda.as_ref().unwrap().0.len(), 10);

        let bad = format!("{BASE}\n[sweep]\nq_s = [0.1, 1.2]\n");
        let err = parse_scenario_str(&bad, "s").unwrap_err();
        assert_eq!(err.field(), Some("sweep.q_s"));
    }

    #[test]
    fn db_values_convert_once_and_round_trip() {
        let s = parse_scenario_str(BASE, "base").unwrap();
        assert_eq!(s.topology.primary_channel.sinr_threshold, db_to_linear(5.0));
        let json = serde_json::to_string(&s).unwrap();
        let back = parse_resolved_str(&json, "json").unwrap();
        assert_eq!(back, s);
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }

    #[test]
    fn noiseless_channel() {
        let text = BASE.replace("noise_dbm = -121.0", "noise_dbm = -inf");
        let s = parse_scenario_str(&text, "n").unwrap();
        assert_eq!(s.topology.primary_channel.noise_power, 0.0);
    }
}
