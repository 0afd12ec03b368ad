//! Parametric stand-ins for the three tracking paths.
//!
//! - RSSI: noisy position fixes smoothed by a Kalman filter and a particle
//!   filter, the two outputs averaged.
//! - PDR: dead reckoning from perturbed step lengths and headings, so error
//!   accumulates with distance walked.
//! - AoA: low Gaussian noise plus a piecewise-constant bias that re-draws at
//!   random steps (oscillator phase slips).

mod kalman;
mod particle;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Position2D;
use crate::rng::{stream_rng, Stream};

pub use kalman::kalman_track;
pub use particle::particle_track;

/// Acceleration noise of both RSSI filters, m/step^2.
pub const FILTER_PROCESS_NOISE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackerNoiseConfig {
    /// Std of raw RSSI position fixes, meters.
    pub sigma_rssi: f64,
    /// Std of AoA position noise, meters.
    pub sigma_aoa: f64,
    /// Per-step probability of an AoA bias re-draw.
    pub aoa_jump_prob: f64,
    /// Per-axis std of a freshly drawn AoA bias, meters.
    pub aoa_jump_scale: f64,
    /// Relative std of PDR step length.
    pub pdr_step_noise: f64,
    /// Std of PDR per-step heading error, radians.
    pub pdr_heading_noise: f64,
    /// Pedestrian stride, meters. Step-length and heading errors are drawn
    /// once per stride and hold while the walker covers it.
    pub pdr_stride: f64,
    pub pf_particles: usize,
    pub seed: u64,
}

impl Default for TrackerNoiseConfig {
    fn default() -> Self {
        Self {
            sigma_rssi: 0.4,
            sigma_aoa: 0.15,
            aoa_jump_prob: 0.02,
            aoa_jump_scale: 0.1,
            pdr_step_noise: 0.05,
            pdr_heading_noise: 2f64.to_radians(),
            pdr_stride: 0.7,
            pf_particles: 200,
            seed: 0,
        }
    }
}

impl TrackerNoiseConfig {
    /// All noise switched off.
    pub fn noiseless() -> Self {
        Self {
            sigma_rssi: 0.0,
            sigma_aoa: 0.0,
            aoa_jump_prob: 0.0,
            aoa_jump_scale: 0.0,
            pdr_step_noise: 0.0,
            pdr_heading_noise: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_rssi", self.sigma_rssi),
            ("sigma_aoa", self.sigma_aoa),
            ("aoa_jump_scale", self.aoa_jump_scale),
            ("pdr_step_noise", self.pdr_step_noise),
            ("pdr_heading_noise", self.pdr_heading_noise),
            ("pdr_stride", self.pdr_stride),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be a finite value >= 0, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.aoa_jump_prob) {
            return Err(Error::invalid(format!(
                "aoa_jump_prob must lie in [0, 1], got {}",
                self.aoa_jump_prob
            )));
        }
        if self.pf_particles < 10 {
            return Err(Error::invalid(format!(
                "pf_particles must be at least 10, got {}",
                self.pf_particles
            )));
        }
        Ok(())
    }
}

fn require_len(truth: &[Position2D], min: usize) -> Result<()> {
    if truth.len() < min {
        return Err(Error::invalid(format!(
            "need at least {min} truth points, got {}",
            truth.len()
        )));
    }
    Ok(())
}

/// The intermediate RSSI estimates, kept for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct RssiPaths {
    pub raw: Vec<Position2D>,
    pub kalman: Vec<Position2D>,
    pub particle: Vec<Position2D>,
    /// Per-timestamp average of the two filter outputs.
    pub combined: Vec<Position2D>,
}

pub fn simulate_rssi_paths(truth: &[Position2D], cfg: &TrackerNoiseConfig) -> Result<RssiPaths> {
    cfg.validate()?;
    require_len(truth, 2)?;
    let mut rng = stream_rng(cfg.seed, Stream::Rssi);
    let noise = Normal::new(0.0, cfg.sigma_rssi).expect("validated");
    let raw: Vec<Position2D> = truth
        .iter()
        .map(|p| Position2D::from_finite(p.x() + noise.sample(&mut rng), p.y() + noise.sample(&mut rng)))
        .collect();
    let kalman = kalman_track(&raw, cfg.sigma_rssi, FILTER_PROCESS_NOISE);
    let particle = particle_track(
        &raw,
        cfg.sigma_rssi,
        FILTER_PROCESS_NOISE,
        cfg.pf_particles,
        &mut rng,
    );
    let combined = kalman
        .iter()
        .zip(&particle)
        .map(|(a, b)| Position2D::from_finite(0.5 * (a.x() + b.x()), 0.5 * (a.y() + b.y())))
        .collect();
    Ok(RssiPaths {
        raw,
        kalman,
        particle,
        combined,
    })
}

pub fn simulate_rssi_path(truth: &[Position2D], cfg: &TrackerNoiseConfig) -> Result<Vec<Position2D>> {
    simulate_rssi_paths(truth, cfg).map(|p| p.combined)
}

/// Dead reckoning from the true start point.
///
/// Each stride draws a length scale `1 + N(0, pdr_step_noise)` and a heading
/// error `N(0, pdr_heading_noise)`; every true displacement inside the stride
/// is scaled and rotated by them, and the errors are summed. A stride of 0
/// redraws at every sample.
pub fn simulate_pdr_path(truth: &[Position2D], cfg: &TrackerNoiseConfig) -> Result<Vec<Position2D>> {
    cfg.validate()?;
    require_len(truth, 2)?;
    let mut rng = stream_rng(cfg.seed, Stream::Pdr);
    let step = Normal::new(0.0, cfg.pdr_step_noise).expect("validated");
    let heading = Normal::new(0.0, cfg.pdr_heading_noise).expect("validated");

    let (mut ex, mut ey) = (0.0, 0.0);
    let mut walked = f64::INFINITY;
    let (mut scale, mut sin, mut cos) = (1.0, 0.0, 1.0);
    let mut out = Vec::with_capacity(truth.len());
    out.push(truth[0]);
    for pair in truth.windows(2) {
        let (dx, dy) = (pair[1].x() - pair[0].x(), pair[1].y() - pair[0].y());
        if walked >= cfg.pdr_stride {
            scale = 1.0 + step.sample(&mut rng);
            (sin, cos) = heading.sample(&mut rng).sin_cos();
            walked = 0.0;
        }
        walked += dx.hypot(dy);
        let (mx, my) = (scale * (cos * dx - sin * dy), scale * (sin * dx + cos * dy));
        ex += mx - dx;
        ey += my - dy;
        out.push(Position2D::from_finite(pair[1].x() + ex, pair[1].y() + ey));
    }
    Ok(out)
}

pub fn simulate_aoa_path(truth: &[Position2D], cfg: &TrackerNoiseConfig) -> Result<Vec<Position2D>> {
    cfg.validate()?;
    require_len(truth, 1)?;
    let mut rng = stream_rng(cfg.seed, Stream::Aoa);
    let noise = Normal::new(0.0, cfg.sigma_aoa).expect("validated");
    let jump = Normal::new(0.0, cfg.aoa_jump_scale).expect("validated");
    let (mut bx, mut by) = (0.0, 0.0);
    Ok(truth
        .iter()
        .map(|p| {
            if rng.random::<f64>() < cfg.aoa_jump_prob {
                bx = jump.sample(&mut rng);
                by = jump.sample(&mut rng);
            }
            Position2D::from_finite(
                p.x() + noise.sample(&mut rng) + bx,
                p.y() + noise.sample(&mut rng) + by,
            )
        })
        .collect())
}
