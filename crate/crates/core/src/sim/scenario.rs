//! Named, pinned simulation scenarios.

use core::f64::consts::FRAC_PI_2;

use crate::ahrs::attitude_from_references;
use crate::math::{EulerAngles, Quaternion, Vec3};
use crate::sim::sensor::{BaroResolution, SensorErrorModel};
use crate::sim::trajectory::{Segment, TrajectorySpec};

/// Seconds each static-9 pose is held.
pub const STATIC9_HOLD: f64 = 10.0;
/// Seconds spent rotating between consecutive static-9 poses.
pub const STATIC9_TRANSITION: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: &'static str,
    pub description: &'static str,
    pub trajectory: TrajectorySpec,
    pub model: SensorErrorModel,
    /// Static intervals `(start, end)` in seconds worth scoring separately.
    pub windows: Vec<(f64, f64)>,
}

pub const SCENARIO_NAMES: [&str; 7] =
    ["static-9", "calib-motion", "long-static", "hover", "altitude-step", "yaw-spin", "planar"];

impl Scenario {
    pub fn names() -> &'static [&'static str] {
        &SCENARIO_NAMES
    }

    pub fn by_name(name: &str) -> Option<Scenario> {
        Some(match name {
            "static-9" => static_nine(),
            "calib-motion" => calibration_motion(),
            "long-static" => long_static(),
            "hover" => hover(),
            "altitude-step" => altitude_step(),
            "yaw-spin" => yaw_spin(),
            "planar" => planar(),
            _ => return None,
        })
    }

    pub fn rate(&self) -> f64 {
        self.model.rate_hz
    }
}

fn ypr(yaw: f64, pitch: f64, roll: f64) -> Quaternion {
    Quaternion::from_euler(EulerAngles::from_degrees(yaw, pitch, roll))
}

/// The nine static-9 attitudes: level, ±90° roll, ±90° pitch and four 45°
/// compound tilts at assorted headings.
pub fn static_nine_poses() -> [Quaternion; 9] {
    [
        Quaternion::IDENTITY,
        ypr(0.0, 0.0, 90.0),
        ypr(0.0, 0.0, -90.0),
        ypr(0.0, 90.0, 0.0),
        ypr(0.0, -90.0, 0.0),
        ypr(30.0, 45.0, 45.0),
        ypr(-60.0, 45.0, -45.0),
        ypr(120.0, -45.0, 45.0),
        ypr(-150.0, -45.0, -45.0),
    ]
}

fn static_nine() -> Scenario {
    let poses = static_nine_poses();
    let mut spec = TrajectorySpec::new(poses[0], 0.0);
    let mut windows = Vec::new();
    let mut t = 0.0;
    for (i, pose) in poses.iter().enumerate() {
        if i > 0 {
            spec.rotate_to(*pose, STATIC9_TRANSITION);
            t += STATIC9_TRANSITION;
        }
        spec.push(Segment::hold(STATIC9_HOLD));
        windows.push((t, t + STATIC9_HOLD));
        t += STATIC9_HOLD;
    }
    Scenario {
        name: "static-9",
        description: "nine 10 s static poses joined by 1 s rotations, realistic sensor errors, 100 Hz",
        trajectory: spec,
        model: SensorErrorModel::realistic(),
        windows,
    }
}

/// Held accelerometer poses: gravity along each of the six body axes and
/// the eight cube diagonals, faces and corners interleaved.
fn calibration_poses() -> Vec<Quaternion> {
    let faces = [(0.0, 0.0, 1.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, -1.0), (-1.0, 0.0, 0.0), (0.0, -1.0, 0.0)];
    let mut directions = Vec::new();
    let mut corners = Vec::new();
    for sx in [1.0, -1.0] {
        for sy in [1.0, -1.0] {
            for sz in [1.0, -1.0] {
                corners.push((sx, sy, sz));
            }
        }
    }
    for (i, face) in faces.iter().enumerate() {
        directions.push(*face);
        directions.extend(corners.iter().skip(i * 2).take(2).copied());
    }
    directions
        .into_iter()
        .map(|(x, y, z)| attitude_from_references(Vec3::new(x, y, z), None))
        .collect()
}

/// Orientations visited by the continuous magnetometer sweep.
fn sweep_attitudes() -> Vec<Quaternion> {
    let mut out = Vec::new();
    for (k, pitch) in [-60.0, -20.0, 20.0, 60.0].iter().enumerate() {
        for j in 0..6 {
            let yaw = -180.0 + 60.0 * j as f64 + 15.0 * k as f64;
            let roll = if j % 2 == 0 { 150.0 } else { -30.0 };
            out.push(ypr(yaw, *pitch, roll));
        }
    }
    out.push(ypr(0.0, 0.0, 180.0));
    out.push(Quaternion::IDENTITY);
    out
}

fn calibration_motion() -> Scenario {
    let mut spec = TrajectorySpec::new(Quaternion::IDENTITY, 0.0);
    spec.push(Segment::hold(5.0));
    let mut windows = vec![(0.0, 5.0)];
    let mut t = 5.0;
    for pose in calibration_poses() {
        spec.rotate_to(pose, 1.0);
        spec.push(Segment::hold(2.0));
        windows.push((t + 1.0, t + 3.0));
        t += 3.0;
    }
    for pose in sweep_attitudes() {
        spec.rotate_to(pose, 1.5);
    }
    Scenario {
        name: "calib-motion",
        description: "guided calibration script: 5 s still, 14 held poses, then a slow tumbling sweep",
        trajectory: spec,
        model: SensorErrorModel::realistic(),
        windows,
    }
}

fn long_static() -> Scenario {
    let mut spec = TrajectorySpec::new(Quaternion::IDENTITY, 0.0);
    spec.rotate_to(ypr(45.0, -20.0, 30.0), 1.0);
    spec.push(Segment::hold(300.0));
    Scenario {
        name: "long-static",
        description: "rotate into a compound tilt, then hold it for 300 s; realistic errors",
        trajectory: spec,
        model: SensorErrorModel::realistic(),
        windows: vec![(1.0, 301.0)],
    }
}

/// Hover model: realistic inertial errors, barometer at 0.018 mbar
/// resolution with matching noise.
pub fn hover_model() -> SensorErrorModel {
    SensorErrorModel::realistic().with_baro(BaroResolution::Mbar0_018, 0.018)
}

fn hover() -> Scenario {
    let mut spec = TrajectorySpec::new(Quaternion::IDENTITY, 250.0);
    spec.push(Segment::hold(60.0));
    Scenario {
        name: "hover",
        description: "60 s level hover at 250 m, barometer 0.018 mbar",
        trajectory: spec,
        model: hover_model(),
        windows: vec![(0.0, 60.0)],
    }
}

/// Time at which the altitude-step climb begins.
pub const STEP_START: f64 = 10.0;

fn altitude_step() -> Scenario {
    let mut spec = TrajectorySpec::new(Quaternion::IDENTITY, 250.0);
    // NED: climbing is negative z acceleration; 4 m/s² for 0.5 s then −4 for
    // 0.5 s rises exactly 1 m
    spec.push(Segment::hold(STEP_START))
        .push(Segment::accelerate(0.5, Vec3::new(0.0, 0.0, -4.0)))
        .push(Segment::accelerate(0.5, Vec3::new(0.0, 0.0, 4.0)))
        .push(Segment::hold(20.0));
    Scenario {
        name: "altitude-step",
        description: "hover at 250 m, climb 1 m in 1 s at t = 10 s, hover again; barometer 0.018 mbar",
        trajectory: spec,
        model: hover_model(),
        windows: vec![(0.0, STEP_START), (STEP_START + 1.0, STEP_START + 21.0)],
    }
}

fn yaw_spin() -> Scenario {
    let mut spec = TrajectorySpec::new(Quaternion::IDENTITY, 0.0);
    spec.push(Segment::rotate(1.0, Vec3::new(0.0, 0.0, FRAC_PI_2)));
    Scenario {
        name: "yaw-spin",
        description: "90° yaw at a constant π/2 rad/s, ideal sensors, 1 kHz",
        trajectory: spec,
        model: SensorErrorModel::ideal().with_rate(1000.0),
        windows: vec![],
    }
}

fn planar() -> Scenario {
    let mut spec = TrajectorySpec::new(Quaternion::IDENTITY, 0.0);
    spec.push(Segment::accelerate(2.0, Vec3::new(1.0, 0.0, 0.0)));
    Scenario {
        name: "planar",
        description: "1 m/s² northward for 2 s, ideal sensors, 1 kHz",
        trajectory: spec,
        model: SensorErrorModel::ideal().with_rate(1000.0),
        windows: vec![],
    }
}
