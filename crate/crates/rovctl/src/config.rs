//! Scenario config files: flat `key = value` lines with dotted keys, `#`
//! comments and a strict known-key schema. The resolved configuration is a
//! plain [`SimConfig`]; `dump` echoes it back in canonical key order so a
//! run's exact inputs can be archived next to its outputs.

use std::path::Path;

use rovctl_core::ann::NetworkConfig;
use rovctl_core::control::GainScaling;
use rovctl_core::dynamics::DisturbanceKind;
use rovctl_core::sim::{Scenario, SimConfig, UncertaintyMode};
use rovctl_core::trajectory::{TrajectoryKind, TrajectorySpec};

use crate::error::CliError;

/// Fully resolved invocation: the runnable config plus the compensator
/// settings kept even when disabled, so `compare` can switch it on.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: SimConfig,
    pub ann_settings: NetworkConfig,
    pub ann_enabled: bool,
}

impl Resolved {
    /// Config with the compensator forced on, for the compensated leg of a
    /// comparison.
    pub fn with_ann(&self) -> SimConfig {
        let mut cfg = self.config.clone();
        cfg.ann = Some(self.ann_settings.clone());
        cfg
    }

    /// Config with the compensator forced off.
    pub fn without_ann(&self) -> SimConfig {
        let mut cfg = self.config.clone();
        cfg.ann = None;
        cfg
    }
}

/// Reads and parses a config file into (key, value) pairs, preserving order.
pub fn parse_file(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|err| {
        CliError::Config(format!("cannot read config file {}: {err}", path.display()))
    })?;
    parse_entries(&text)
}

pub fn parse_entries(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!(
                "line {}: expected `key = value`, got `{line}`",
                lineno + 1
            )));
        };
        entries.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(entries)
}

/// Splits one `KEY=VALUE` override.
pub fn parse_override(assignment: &str) -> Result<(String, String), CliError> {
    let Some((key, value)) = assignment.split_once('=') else {
        return Err(CliError::Config(format!(
            "override `{assignment}`: expected KEY=VALUE"
        )));
    };
    Ok((key.trim().to_string(), value.trim().to_string()))
}

/// Builds the runnable configuration: scenario preset first, then file keys
/// in order, then `--set` overrides, then the `--seed` and `--no-ann` flags.
/// Component seeds not set explicitly derive from the master seed
/// (disturbance = seed, ann = seed + 1).
pub fn resolve(
    file_entries: &[(String, String)],
    overrides: &[(String, String)],
    seed_flag: Option<u64>,
    no_ann: bool,
) -> Result<Resolved, CliError> {
    let all: Vec<&(String, String)> = file_entries.iter().chain(overrides).collect();

    let mut scenario = Scenario::Custom;
    for (key, value) in &all {
        if key == "scenario" {
            scenario = parse_scenario(value)?;
        }
    }

    let mut draft = Draft::new(scenario);
    for (key, value) in &all {
        if key != "scenario" {
            draft.apply(key, value)?;
        }
    }
    if let Some(seed) = seed_flag {
        draft.config.seed = seed;
    }
    if no_ann {
        draft.ann_enabled = false;
    }
    draft.finish()
}

struct Draft {
    config: SimConfig,
    ann: NetworkConfig,
    ann_enabled: bool,
    explicit_ann_seed: bool,
    explicit_disturbance_seed: bool,
}

impl Draft {
    fn new(scenario: Scenario) -> Self {
        let mut config = SimConfig::for_scenario(scenario);
        let ann = config
            .ann
            .take()
            .expect("presets carry compensator settings");
        Self {
            config,
            ann,
            ann_enabled: true,
            explicit_ann_seed: false,
            explicit_disturbance_seed: false,
        }
    }

    fn finish(mut self) -> Result<Resolved, CliError> {
        if !self.explicit_disturbance_seed {
            self.config.disturbance.seed = self.config.seed;
        }
        if !self.explicit_ann_seed {
            self.ann.seed = self.config.seed.wrapping_add(1);
        }
        self.config.ann = self.ann_enabled.then(|| self.ann.clone());
        self.config.validate().map_err(CliError::from)?;
        Ok(Resolved {
            config: self.config,
            ann_settings: self.ann,
            ann_enabled: self.ann_enabled,
        })
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let cfg = &mut self.config;
        match key {
            "dt" => cfg.dt = parse_f64(key, value)?,
            "duration" => cfg.duration = parse_f64(key, value)?,
            "seed" => cfg.seed = parse_u64(key, value)?,
            "tail_window" => cfg.tail_window = parse_f64(key, value)?,
            "initial_error.position" => cfg.initial_error[0] = parse_f64(key, value)?,
            "initial_error.velocity" => cfg.initial_error[1] = parse_f64(key, value)?,
            "trajectory.kind" => {
                cfg.trajectory = match value {
                    "harmonic" => TrajectorySpec {
                        kind: TrajectoryKind::Harmonic,
                        ..cfg.trajectory
                    },
                    "constant" => TrajectorySpec {
                        kind: TrajectoryKind::Constant,
                        ..cfg.trajectory
                    },
                    other => {
                        return Err(CliError::Config(format!(
                            "{key}: expected harmonic|constant, got `{other}`"
                        )))
                    }
                }
            }
            "trajectory.amplitude" => cfg.trajectory.amplitude = parse_f64(key, value)?,
            "trajectory.omega" => cfg.trajectory.omega = parse_f64(key, value)?,
            "gains.lambda" | "lambda" => cfg.lambda = parse_f64(key, value)?,
            "gains.kappa" | "kappa" => cfg.kappa = parse_f64(key, value)?,
            "gains.scaling" => {
                cfg.gain_scaling = match value {
                    "as_written" => GainScaling::AsWritten,
                    "inertia_normalized" => GainScaling::InertiaNormalized,
                    other => {
                        return Err(CliError::Config(format!(
                            "{key}: expected as_written|inertia_normalized, got `{other}`"
                        )))
                    }
                }
            }
            "plant.mass_rb" => cfg.plant.mass_rb = parse_f64(key, value)?,
            "plant.inertia_z" => cfg.plant.inertia_z = parse_f64(key, value)?,
            "plant.rho" => cfg.plant.rho = parse_f64(key, value)?,
            "plant.vol" => cfg.plant.vol = parse_f64(key, value)?,
            "plant.cm.surge" => cfg.plant.cm[0] = parse_f64(key, value)?,
            "plant.cm.sway" => cfg.plant.cm[1] = parse_f64(key, value)?,
            "plant.cm.heave" => cfg.plant.cm[2] = parse_f64(key, value)?,
            "plant.cm.yaw" => cfg.plant.cm[3] = parse_f64(key, value)?,
            "plant.cd.surge" => cfg.plant.cd[0] = parse_f64(key, value)?,
            "plant.cd.sway" => cfg.plant.cd[1] = parse_f64(key, value)?,
            "plant.cd.heave" => cfg.plant.cd[2] = parse_f64(key, value)?,
            "plant.cd.yaw" => cfg.plant.cd[3] = parse_f64(key, value)?,
            "uncertainty.mode" => {
                cfg.uncertainty.mode = match value {
                    "fixed" => UncertaintyMode::Fixed,
                    "random" => UncertaintyMode::Random,
                    other => {
                        return Err(CliError::Config(format!(
                            "{key}: expected fixed|random, got `{other}`"
                        )))
                    }
                }
            }
            "uncertainty.inertia" => cfg.uncertainty.inertia = parse_f64(key, value)?,
            "uncertainty.damping" => cfg.uncertainty.damping = parse_f64(key, value)?,
            "uncertainty.bound" => cfg.uncertainty.bound = parse_f64(key, value)?,
            "ann.enabled" => self.ann_enabled = parse_bool(key, value)?,
            "ann.hidden" => self.ann.hidden_dim = parse_usize(key, value)?,
            "ann.learning_rate" => self.ann.learning_rate = parse_f64(key, value)?,
            "ann.start_time" => self.ann.start_time = parse_f64(key, value)?,
            "ann.init_scale" => self.ann.init_scale = parse_f64(key, value)?,
            "ann.bias" => self.ann.bias = parse_bool(key, value)?,
            "ann.seed" => {
                self.ann.seed = parse_u64(key, value)?;
                self.explicit_ann_seed = true;
            }
            "ann.input_scale.position" => self.ann.input_scale[0] = parse_f64(key, value)?,
            "ann.input_scale.velocity" => self.ann.input_scale[1] = parse_f64(key, value)?,
            "ann.input_scale.combined" => self.ann.input_scale[2] = parse_f64(key, value)?,
            "disturbance.kind" => {
                cfg.disturbance.kind = match value {
                    "none" => DisturbanceKind::None,
                    "constant" => DisturbanceKind::Constant,
                    "sinusoid" => DisturbanceKind::Sinusoid,
                    "filtered-noise" => DisturbanceKind::FilteredNoise,
                    other => {
                        return Err(CliError::Config(format!(
                            "{key}: expected none|constant|sinusoid|filtered-noise, got `{other}`"
                        )))
                    }
                }
            }
            "disturbance.amplitude.surge" => cfg.disturbance.amplitude[0] = parse_f64(key, value)?,
            "disturbance.amplitude.sway" => cfg.disturbance.amplitude[1] = parse_f64(key, value)?,
            "disturbance.amplitude.heave" => cfg.disturbance.amplitude[2] = parse_f64(key, value)?,
            "disturbance.amplitude.yaw" => cfg.disturbance.amplitude[3] = parse_f64(key, value)?,
            "disturbance.frequency" => cfg.disturbance.frequency = parse_f64(key, value)?,
            "disturbance.corner_freq" => cfg.disturbance.corner_freq = parse_f64(key, value)?,
            "disturbance.seed" => {
                cfg.disturbance.seed = parse_u64(key, value)?;
                self.explicit_disturbance_seed = true;
            }
            other => return Err(CliError::Config(format!("unknown key: {other}"))),
        }
        Ok(())
    }
}

fn parse_scenario(value: &str) -> Result<Scenario, CliError> {
    match value {
        "sim1" => Ok(Scenario::Sim1),
        "sim2" => Ok(Scenario::Sim2),
        "sim3" => Ok(Scenario::Sim3),
        "custom" => Ok(Scenario::Custom),
        other => Err(CliError::Config(format!(
            "scenario: expected sim1|sim2|sim3|custom, got `{other}`"
        ))),
    }
}

/// Floats accept an optional `pi*` prefix so angular frequencies can be
/// written exactly, e.g. `trajectory.omega = pi*0.1`.
fn parse_f64(key: &str, value: &str) -> Result<f64, CliError> {
    let (factor, rest) = match value.strip_prefix("pi*") {
        Some(rest) => (std::f64::consts::PI, rest),
        None => (1.0, value),
    };
    rest.trim()
        .parse::<f64>()
        .map(|v| factor * v)
        .map_err(|_| CliError::Config(format!("{key}: `{value}` is not a number")))
}

fn parse_u64(key: &str, value: &str) -> Result<u64, CliError> {
    value
        .parse::<u64>()
        .map_err(|_| CliError::Config(format!("{key}: `{value}` is not a non-negative integer")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize, CliError> {
    value
        .parse::<usize>()
        .map_err(|_| CliError::Config(format!("{key}: `{value}` is not a non-negative integer")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(CliError::Config(format!(
            "{key}: expected true|false, got `{other}`"
        ))),
    }
}

fn scenario_name(s: Scenario) -> &'static str {
    match s {
        Scenario::Sim1 => "sim1",
        Scenario::Sim2 => "sim2",
        Scenario::Sim3 => "sim3",
        Scenario::Custom => "custom",
    }
}

/// Canonical echo of the resolved configuration, one schema key per line.
pub fn dump(resolved: &Resolved) -> String {
    let cfg = &resolved.config;
    let ann = &resolved.ann_settings;
    let trajectory_kind = match cfg.trajectory.kind {
        TrajectoryKind::Harmonic => "harmonic",
        TrajectoryKind::Constant => "constant",
    };
    let scaling = match cfg.gain_scaling {
        GainScaling::AsWritten => "as_written",
        GainScaling::InertiaNormalized => "inertia_normalized",
    };
    let uncertainty_mode = match cfg.uncertainty.mode {
        UncertaintyMode::Fixed => "fixed",
        UncertaintyMode::Random => "random",
    };
    let disturbance_kind = match cfg.disturbance.kind {
        DisturbanceKind::None => "none",
        DisturbanceKind::Constant => "constant",
        DisturbanceKind::Sinusoid => "sinusoid",
        DisturbanceKind::FilteredNoise => "filtered-noise",
    };
    let mut out = String::new();
    let mut line = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    line("scenario", scenario_name(cfg.scenario).into());
    line("dt", cfg.dt.to_string());
    line("duration", cfg.duration.to_string());
    line("seed", cfg.seed.to_string());
    line("tail_window", cfg.tail_window.to_string());
    line("initial_error.position", cfg.initial_error[0].to_string());
    line("initial_error.velocity", cfg.initial_error[1].to_string());
    line("trajectory.kind", trajectory_kind.into());
    line("trajectory.amplitude", cfg.trajectory.amplitude.to_string());
    line("trajectory.omega", cfg.trajectory.omega.to_string());
    line("gains.lambda", cfg.lambda.to_string());
    line("gains.kappa", cfg.kappa.to_string());
    line("gains.scaling", scaling.into());
    line("plant.mass_rb", cfg.plant.mass_rb.to_string());
    line("plant.inertia_z", cfg.plant.inertia_z.to_string());
    line("plant.rho", cfg.plant.rho.to_string());
    line("plant.vol", cfg.plant.vol.to_string());
    for (axis, i) in [("surge", 0), ("sway", 1), ("heave", 2), ("yaw", 3)] {
        line(&format!("plant.cm.{axis}"), cfg.plant.cm[i].to_string());
    }
    for (axis, i) in [("surge", 0), ("sway", 1), ("heave", 2), ("yaw", 3)] {
        line(&format!("plant.cd.{axis}"), cfg.plant.cd[i].to_string());
    }
    line("uncertainty.mode", uncertainty_mode.into());
    line("uncertainty.inertia", cfg.uncertainty.inertia.to_string());
    line("uncertainty.damping", cfg.uncertainty.damping.to_string());
    line("uncertainty.bound", cfg.uncertainty.bound.to_string());
    line("ann.enabled", resolved.ann_enabled.to_string());
    line("ann.hidden", ann.hidden_dim.to_string());
    line("ann.learning_rate", ann.learning_rate.to_string());
    line("ann.start_time", ann.start_time.to_string());
    line("ann.init_scale", ann.init_scale.to_string());
    line("ann.bias", ann.bias.to_string());
    line("ann.seed", ann.seed.to_string());
    line("ann.input_scale.position", ann.input_scale[0].to_string());
    line("ann.input_scale.velocity", ann.input_scale[1].to_string());
    line("ann.input_scale.combined", ann.input_scale[2].to_string());
    line("disturbance.kind", disturbance_kind.into());
    for (axis, i) in [("surge", 0), ("sway", 1), ("heave", 2), ("yaw", 3)] {
        line(
            &format!("disturbance.amplitude.{axis}"),
            cfg.disturbance.amplitude[i].to_string(),
        );
    }
    line(
        "disturbance.frequency",
        cfg.disturbance.frequency.to_string(),
    );
    line(
        "disturbance.corner_freq",
        cfg.disturbance.corner_freq.to_string(),
    );
    line("disturbance.seed", cfg.disturbance.seed.to_string());
    out
}
