//! Flat `key = value` configuration files.
//!
//! ```text
//! # room and walk
//! env_id = env2
//! scenario = random
//! episodes = 5000
//! ```
//!
//! Blank lines and `#` comments are ignored. Every key is optional; absent
//! keys keep their defaults. `env_id` selects a built-in room (env1, env2,
//! env3) whose dimensions `width` / `height` may still override.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::eval::ExperimentConfig;
use crate::sim::EnvironmentSpec;

pub const KEYS: &[&str] = &[
    "env_id",
    "width",
    "height",
    "speed",
    "n_steps",
    "scenario",
    "sigma_rssi",
    "sigma_aoa",
    "aoa_jump_prob",
    "aoa_jump_scale",
    "pdr_step_noise",
    "pdr_heading_noise",
    "pdr_stride",
    "pf_particles",
    "gamma",
    "alpha",
    "epsilon_start",
    "epsilon_end",
    "epsilon_decay",
    "step_pct",
    "episodes",
    "test_episodes",
    "repetitions",
    "seed",
];

struct Entry {
    line: usize,
    value: String,
}

/// Parses configuration text; `origin` names the source in diagnostics.
pub fn parse_config(text: &str, origin: &str) -> Result<ExperimentConfig> {
    let err = |line: usize, message: String| Error::Config {
        path: origin.to_string(),
        line,
        message,
    };

    let mut entries: BTreeMap<&str, Entry> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(err(line, format!("expected 'key = value', got '{content}'")));
        };
        let key = key.trim();
        let value = value.trim();
        let Some(known) = KEYS.iter().find(|k| **k == key) else {
            return Err(err(line, format!("unknown key '{key}'")));
        };
        if value.is_empty() {
            return Err(err(line, format!("{key}: missing value")));
        }
        if let Some(prev) = entries.get(known) {
            return Err(err(line, format!("{key}: duplicate key (first set on line {})", prev.line)));
        }
        entries.insert(
            known,
            Entry {
                line,
                value: value.to_string(),
            },
        );
    }

    fn get<T: FromStr>(
        entries: &BTreeMap<&str, Entry>,
        key: &str,
        origin: &str,
    ) -> Result<Option<T>> {
        let Some(e) = entries.get(key) else {
            return Ok(None);
        };
        e.value.parse::<T>().map(Some).map_err(|_| Error::Config {
            path: origin.to_string(),
            line: e.line,
            message: format!("{key}: cannot parse '{}'", e.value),
        })
    }

    let mut cfg = ExperimentConfig::default();
    if let Some(id) = get::<String>(&entries, "env_id", origin)? {
        cfg.env = EnvironmentSpec::preset(&id).unwrap_or(EnvironmentSpec {
            env_id: id,
            ..EnvironmentSpec::default()
        });
    }
    macro_rules! set {
        ($($key:literal => $field:expr),* $(,)?) => {
            $(if let Some(v) = get(&entries, $key, origin)? { $field = v; })*
        };
    }
    set! {
        "width" => cfg.env.width,
        "height" => cfg.env.height,
        "speed" => cfg.env.speed,
        "n_steps" => cfg.env.n_steps,
        "sigma_rssi" => cfg.noise.sigma_rssi,
        "sigma_aoa" => cfg.noise.sigma_aoa,
        "aoa_jump_prob" => cfg.noise.aoa_jump_prob,
        "aoa_jump_scale" => cfg.noise.aoa_jump_scale,
        "pdr_step_noise" => cfg.noise.pdr_step_noise,
        "pdr_heading_noise" => cfg.noise.pdr_heading_noise,
        "pdr_stride" => cfg.noise.pdr_stride,
        "pf_particles" => cfg.noise.pf_particles,
        "gamma" => cfg.learning.gamma,
        "alpha" => cfg.learning.alpha,
        "epsilon_start" => cfg.learning.epsilon_start,
        "epsilon_end" => cfg.learning.epsilon_end,
        "epsilon_decay" => cfg.learning.epsilon_decay,
        "step_pct" => cfg.learning.step_pct,
        "episodes" => cfg.learning.episodes,
        "test_episodes" => cfg.test_episodes,
        "repetitions" => cfg.repetitions,
    }
    if let Some(e) = entries.get("scenario") {
        cfg.scenario = e.value.parse().map_err(|x: Error| err(e.line, format!("scenario: {x}")))?;
    }
    let seed = get::<u64>(&entries, "seed", origin)?.unwrap_or(cfg.seed);
    let cfg = cfg.with_seed(seed);

    cfg.validate().map_err(|e| {
        let line = KEYS
            .iter()
            .filter(|k| e.to_string().contains(*k))
            .filter_map(|k| entries.get(k).map(|x| x.line))
            .next()
            .unwrap_or(0);
        err(line, e.to_string())
    })?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, &path.display().to_string())
}

/// Renders a configuration in the same format `parse_config` reads.
pub fn render_config(cfg: &ExperimentConfig) -> String {
    let lines = [
        ("env_id", cfg.env.env_id.clone()),
        ("width", cfg.env.width.to_string()),
        ("height", cfg.env.height.to_string()),
        ("speed", cfg.env.speed.to_string()),
        ("n_steps", cfg.env.n_steps.to_string()),
        ("scenario", cfg.scenario.to_string()),
        ("sigma_rssi", cfg.noise.sigma_rssi.to_string()),
        ("sigma_aoa", cfg.noise.sigma_aoa.to_string()),
        ("aoa_jump_prob", cfg.noise.aoa_jump_prob.to_string()),
        ("aoa_jump_scale", cfg.noise.aoa_jump_scale.to_string()),
        ("pdr_step_noise", cfg.noise.pdr_step_noise.to_string()),
        ("pdr_heading_noise", cfg.noise.pdr_heading_noise.to_string()),
        ("pdr_stride", cfg.noise.pdr_stride.to_string()),
        ("pf_particles", cfg.noise.pf_particles.to_string()),
        ("gamma", cfg.learning.gamma.to_string()),
        ("alpha", cfg.learning.alpha.to_string()),
        ("epsilon_start", cfg.learning.epsilon_start.to_string()),
        ("epsilon_end", cfg.learning.epsilon_end.to_string()),
        ("epsilon_decay", cfg.learning.epsilon_decay.to_string()),
        ("step_pct", cfg.learning.step_pct.to_string()),
        ("episodes", cfg.learning.episodes.to_string()),
        ("test_episodes", cfg.test_episodes.to_string()),
        ("repetitions", cfg.repetitions.to_string()),
        ("seed", cfg.seed.to_string()),
    ];
    lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}
