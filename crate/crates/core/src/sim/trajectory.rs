//! Closed-form ground truth for piecewise-constant motion.

use crate::math::{Quaternion, Vec3};

/// A constant-rate, constant-acceleration stretch of motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    /// seconds, > 0
    pub duration: f64,
    /// body frame, rad/s
    pub angular_velocity: Vec3,
    /// earth frame (NED), m/s²
    pub linear_acceleration: Vec3,
}

impl Segment {
    pub fn hold(duration: f64) -> Self {
        Self { duration, angular_velocity: Vec3::ZERO, linear_acceleration: Vec3::ZERO }
    }

    pub fn rotate(duration: f64, angular_velocity: Vec3) -> Self {
        Self { duration, angular_velocity, linear_acceleration: Vec3::ZERO }
    }

    pub fn accelerate(duration: f64, linear_acceleration: Vec3) -> Self {
        Self { duration, angular_velocity: Vec3::ZERO, linear_acceleration }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySpec {
    pub initial_attitude: Quaternion,
    /// m above the pressure reference
    pub start_altitude: f64,
    pub segments: Vec<Segment>,
}

impl TrajectorySpec {
    pub fn new(initial_attitude: Quaternion, start_altitude: f64) -> Self {
        Self { initial_attitude, start_altitude, segments: Vec::new() }
    }

    pub fn push(&mut self, segment: Segment) -> &mut Self {
        assert!(segment.duration > 0.0, "segment durations must be positive");
        self.segments.push(segment);
        self
    }

    /// Appends a constant-rate rotation of `duration` seconds that ends at
    /// attitude `target`, starting from wherever the trajectory currently is.
    pub fn rotate_to(&mut self, target: Quaternion, duration: f64) -> &mut Self {
        let from = self.end_state().q;
        let delta = from.conjugate() * target;
        let rate = delta.to_rotation_vector() / duration;
        self.push(Segment::rotate(duration, rate))
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    fn initial_state(&self) -> TruthSample {
        TruthSample {
            t: 0.0,
            q: self.initial_attitude,
            position: Vec3::new(0.0, 0.0, -self.start_altitude),
            velocity: Vec3::ZERO,
        }
    }

    /// State at the start of every segment, plus the final state.
    fn knots(&self) -> Vec<TruthSample> {
        let mut knots = Vec::with_capacity(self.segments.len() + 1);
        let mut s = self.initial_state();
        knots.push(s);
        for seg in &self.segments {
            s = advance(&s, seg, seg.duration);
            s.t = knots.last().map_or(0.0, |k| k.t) + seg.duration;
            knots.push(s);
        }
        knots
    }

    pub fn end_state(&self) -> TruthSample {
        *self.knots().last().expect("knots always holds the initial state")
    }
}

/// Ground truth at one instant. Position and velocity are NED, with the
/// position origin on the pressure reference level (altitude = −z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthSample {
    pub t: f64,
    pub q: Quaternion,
    pub position: Vec3,
    pub velocity: Vec3,
}

impl TruthSample {
    pub fn altitude(&self) -> f64 {
        -self.position.z
    }
}

fn advance(start: &TruthSample, seg: &Segment, tau: f64) -> TruthSample {
    let q = start.q * Quaternion::from_rotation_vector(seg.angular_velocity * tau);
    let a = seg.linear_acceleration;
    TruthSample {
        t: start.t + tau,
        q,
        position: start.position + start.velocity * tau + a * (0.5 * tau * tau),
        velocity: start.velocity + a * tau,
    }
}

/// Samples the trajectory at `rate` Hz from t = 0 through its end.
///
/// Each tick is evaluated in closed form from the start of its segment, so
/// the values at segment boundaries do not depend on the tick rate.
pub fn integrate_truth(spec: &TrajectorySpec, rate: f64) -> Vec<TruthSample> {
    assert!(rate > 0.0, "rate must be positive");
    let knots = spec.knots();
    let total = knots.last().map_or(0.0, |k| k.t);
    let n = (total * rate + 1e-9).floor() as usize;
    let mut out = Vec::with_capacity(n + 1);
    let mut seg_idx = 0;
    for k in 0..=n {
        let t = k as f64 / rate;
        while seg_idx < spec.segments.len() && t >= knots[seg_idx + 1].t {
            seg_idx += 1;
        }
        let mut s = match spec.segments.get(seg_idx) {
            Some(seg) => advance(&knots[seg_idx], seg, t - knots[seg_idx].t),
            None => knots[seg_idx],
        };
        s.t = t;
        out.push(s);
    }
    out
}
