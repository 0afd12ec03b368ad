//! Constant-velocity Kalman filter over planar position fixes.
//!
//! The x and y axes are independent under a constant-velocity model with
//! diagonal noise, so the 4-state filter is run as two 2-state filters.

use crate::model::Position2D;

#[derive(Debug, Clone, Copy)]
struct Axis {
    pos: f64,
    vel: f64,
    // covariance [[p00, p01], [p01, p11]]
    p00: f64,
    p01: f64,
    p11: f64,
}

impl Axis {
    fn new(z: f64, r: f64) -> Self {
        Self {
            pos: z,
            vel: 0.0,
            p00: r,
            p01: 0.0,
            p11: 1.0,
        }
    }

    /// One-step prediction, `accel_std` in m/step^2.
    fn predict(&mut self, accel_std: f64) {
        let q = accel_std * accel_std;
        self.pos += self.vel;
        let p00 = self.p00 + 2.0 * self.p01 + self.p11 + 0.25 * q;
        let p01 = self.p01 + self.p11 + 0.5 * q;
        let p11 = self.p11 + q;
        self.p00 = p00;
        self.p01 = p01;
        self.p11 = p11;
    }

    fn update(&mut self, z: f64, r: f64) {
        let s = self.p00 + r;
        if s <= 0.0 {
            self.pos = z;
            return;
        }
        let k0 = self.p00 / s;
        let k1 = self.p01 / s;
        let innov = z - self.pos;
        self.pos += k0 * innov;
        self.vel += k1 * innov;
        let (p00, p01, p11) = (self.p00, self.p01, self.p11);
        self.p00 = (1.0 - k0) * p00;
        self.p01 = (1.0 - k0) * p01;
        self.p11 = p11 - k1 * p01;
        if k0 == 1.0 {
            // exact measurement: position is known, snap to it
            self.pos = z;
        }
    }
}

/// Filters noisy fixes with measurement std `sigma` and acceleration noise `accel_std`.
pub fn kalman_track(measurements: &[Position2D], sigma: f64, accel_std: f64) -> Vec<Position2D> {
    let Some(first) = measurements.first() else {
        return Vec::new();
    };
    let r = sigma * sigma;
    let mut ax = Axis::new(first.x(), r);
    let mut ay = Axis::new(first.y(), r);
    let mut out = Vec::with_capacity(measurements.len());
    out.push(*first);
    for z in &measurements[1..] {
        ax.predict(accel_std);
        ay.predict(accel_std);
        ax.update(z.x(), r);
        ay.update(z.y(), r);
        out.push(Position2D::from_finite(ax.pos, ay.pos));
    }
    out
}
