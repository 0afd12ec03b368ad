//! Bootstrap particle filter with a constant-velocity motion model and
//! multinomial resampling at every step.

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::model::Position2D;

#[derive(Debug, Clone, Copy)]
struct Particle {
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
}

/// Initial velocity spread of the particle cloud, m/step.
const INIT_VEL_STD: f64 = 0.2;

pub fn particle_track<R: Rng + ?Sized>(
    measurements: &[Position2D],
    sigma: f64,
    accel_std: f64,
    n_particles: usize,
    rng: &mut R,
) -> Vec<Position2D> {
    let Some(first) = measurements.first() else {
        return Vec::new();
    };
    let spread = Normal::new(0.0, sigma).expect("sigma >= 0");
    let vel0 = Normal::new(0.0, INIT_VEL_STD).expect("finite");
    let accel = Normal::new(0.0, accel_std).expect("accel_std >= 0");

    let mut particles: Vec<Particle> = (0..n_particles)
        .map(|_| Particle {
            x: first.x() + spread.sample(rng),
            y: first.y() + spread.sample(rng),
            vx: vel0.sample(rng),
            vy: vel0.sample(rng),
        })
        .collect();
    let mut log_w = vec![0.0; n_particles];
    let mut weights = vec![0.0; n_particles];
    let mut out = Vec::with_capacity(measurements.len());
    out.push(*first);

    for z in &measurements[1..] {
        for p in particles.iter_mut() {
            p.vx += accel.sample(rng);
            p.vy += accel.sample(rng);
            p.x += p.vx;
            p.y += p.vy;
        }

        if sigma == 0.0 {
            // Dirac likelihood: the posterior sits on the measurement.
            for p in particles.iter_mut() {
                p.x = z.x();
                p.y = z.y();
            }
            out.push(*z);
            continue;
        }

        let inv = 1.0 / (2.0 * sigma * sigma);
        for (lw, p) in log_w.iter_mut().zip(&particles) {
            let (dx, dy) = (p.x - z.x(), p.y - z.y());
            *lw = -(dx * dx + dy * dy) * inv;
        }
        let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (w, lw) in weights.iter_mut().zip(&log_w) {
            *w = (lw - max).exp();
            total += *w;
        }
        let (mut ex, mut ey) = (0.0, 0.0);
        for (w, p) in weights.iter().zip(&particles) {
            ex += w * p.x;
            ey += w * p.y;
        }
        out.push(Position2D::from_finite(ex / total, ey / total));

        let index = WeightedIndex::new(&weights).expect("at least one positive weight");
        particles = (0..n_particles).map(|_| particles[index.sample(rng)]).collect();
    }
    out
}
