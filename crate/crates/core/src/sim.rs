//! Ground-truth walkers for rectangular rooms.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Position2D, Scenario};
use crate::rng::{stream_rng, Stream};

/// Heading jitter of the random walker, radians per step.
const RANDOM_TURN_STD: f64 = 0.35;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSpec {
    pub env_id: String,
    /// Room extent along x, meters.
    pub width: f64,
    /// Room extent along y, meters.
    pub height: f64,
    /// Walking distance per step, meters.
    pub speed: f64,
    pub n_steps: usize,
}

impl Default for EnvironmentSpec {
    fn default() -> Self {
        Self::preset("env1").expect("env1 preset")
    }
}

impl EnvironmentSpec {
    pub const DEFAULT_SPEED: f64 = 0.2;
    pub const DEFAULT_STEPS: usize = 500;
    pub const PRESETS: [&'static str; 3] = ["env1", "env2", "env3"];

    /// The three built-in rooms: 5x5 m, 8x6 m and 10x8 m.
    pub fn preset(env_id: &str) -> Option<Self> {
        let (width, height) = match env_id {
            "env1" => (5.0, 5.0),
            "env2" => (8.0, 6.0),
            "env3" => (10.0, 8.0),
            _ => return None,
        };
        Some(Self {
            env_id: env_id.to_string(),
            width,
            height,
            speed: Self::DEFAULT_SPEED,
            n_steps: Self::DEFAULT_STEPS,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.height > 0.0) || !self.width.is_finite() || !self.height.is_finite() {
            return Err(Error::invalid(format!(
                "room dimensions must be positive, got {} x {}",
                self.width, self.height
            )));
        }
        if self.n_steps < 10 {
            return Err(Error::invalid(format!("n_steps must be at least 10, got {}", self.n_steps)));
        }
        if !(self.speed > 0.0 && self.speed < self.width.min(self.height)) {
            return Err(Error::invalid(format!(
                "speed must lie in (0, min(width, height)), got {}",
                self.speed
            )));
        }
        Ok(())
    }

    pub fn contains(&self, p: &Position2D) -> bool {
        (0.0..=self.width).contains(&p.x()) && (0.0..=self.height).contains(&p.y())
    }
}

/// Generates `env.n_steps` ground-truth points for a movement scenario.
///
/// Only the random walk consumes `seed`; the other scenarios are fixed paths.
pub fn generate_trajectory(env: &EnvironmentSpec, scenario: Scenario, seed: u64) -> Result<Vec<Position2D>> {
    env.validate()?;
    let points = match scenario {
        Scenario::Rectangular => perimeter_loop(env),
        Scenario::DiagonalA => diagonal_shuttle(env, false),
        Scenario::DiagonalB => diagonal_shuttle(env, true),
        Scenario::Random => random_walk(env, seed),
    };
    Ok(points)
}

fn clamped(env: &EnvironmentSpec, x: f64, y: f64) -> Position2D {
    Position2D::from_finite(x.clamp(0.0, env.width), y.clamp(0.0, env.height))
}

/// Counter-clockwise walk along the walls starting at the origin.
fn perimeter_loop(env: &EnvironmentSpec) -> Vec<Position2D> {
    let (w, h) = (env.width, env.height);
    let perimeter = 2.0 * (w + h);
    (0..env.n_steps)
        .map(|k| {
            let s = (k as f64 * env.speed) % perimeter;
            let (x, y) = if s < w {
                (s, 0.0)
            } else if s < w + h {
                (w, s - w)
            } else if s < 2.0 * w + h {
                (w - (s - w - h), h)
            } else {
                (0.0, h - (s - 2.0 * w - h))
            };
            clamped(env, x, y)
        })
        .collect()
}

/// Back and forth along one diagonal. A: (0,0) <-> (w,h); B: (0,h) <-> (w,0).
fn diagonal_shuttle(env: &EnvironmentSpec, other: bool) -> Vec<Position2D> {
    let (w, h) = (env.width, env.height);
    let length = w.hypot(h);
    (0..env.n_steps)
        .map(|k| {
            let u = (k as f64 * env.speed) % (2.0 * length);
            let frac = if u <= length { u } else { 2.0 * length - u } / length;
            let y = if other { h - frac * h } else { frac * h };
            clamped(env, frac * w, y)
        })
        .collect()
}

/// Fixed-stride walk with Gaussian heading jitter, reflected at the walls.
fn random_walk(env: &EnvironmentSpec, seed: u64) -> Vec<Position2D> {
    let mut rng = stream_rng(seed, Stream::Trajectory);
    let turn = Normal::new(0.0, RANDOM_TURN_STD).expect("finite std");
    let (w, h) = (env.width, env.height);
    let (mut x, mut y) = (w / 2.0, h / 2.0);
    let mut heading = rng.random_range(-PI..PI);
    let mut out = Vec::with_capacity(env.n_steps);
    out.push(clamped(env, x, y));
    for _ in 1..env.n_steps {
        heading += turn.sample(&mut rng);
        x += env.speed * heading.cos();
        y += env.speed * heading.sin();
        if x < 0.0 {
            x = -x;
            heading = PI - heading;
        } else if x > w {
            x = 2.0 * w - x;
            heading = PI - heading;
        }
        if y < 0.0 {
            y = -y;
            heading = -heading;
        } else if y > h {
            y = 2.0 * h - y;
            heading = -heading;
        }
        out.push(clamped(env, x, y));
    }
    out
}
