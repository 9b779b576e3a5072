//! Tilt-to-pointer mapping: roll moves the pointer sideways, pitch moves it
//! up and down, with a small deadzone around level.
//!
//! ```text
//! cargo run --example inertial_mouse
//! ```

use marg_fusion::cli::mouse_delta;
use marg_fusion::pipeline::{run_pipeline, PipelineConfig};
use marg_fusion::sim::{integrate_truth, synthesize, Segment, SensorErrorModel, TrajectorySpec};
use marg_fusion::{Quaternion, Vec3};

fn main() {
    // rock the board right, back to level, then nose up
    let mut spec = TrajectorySpec::new(Quaternion::IDENTITY, 0.0);
    spec.push(Segment::rotate(0.5, Vec3::new(0.4, 0.0, 0.0)))
        .push(Segment::hold(0.5))
        .push(Segment::rotate(0.5, Vec3::new(-0.4, 0.0, 0.0)))
        .push(Segment::rotate(0.5, Vec3::new(0.0, 0.3, 0.0)))
        .push(Segment::hold(0.5));
    let truth = integrate_truth(&spec, 100.0);
    let raw = synthesize(&truth, &SensorErrorModel::ideal(), 0);
    let est = run_pipeline(&raw, PipelineConfig::default()).unwrap();

    let (gain, deadzone) = (2.0, 1.0);
    let (mut x, mut y) = (0i64, 0i64);
    println!("   t  roll°  pitch°   dx   dy   pointer");
    for e in est.iter().step_by(10) {
        let [_, pitch, roll] = e.q.to_euler().to_degrees();
        let (dx, dy) = mouse_delta(roll, pitch, gain, deadzone);
        x += dx;
        y += dy;
        println!("{:4.1} {roll:6.1} {pitch:7.1} {dx:4} {dy:4}   ({x}, {y})", e.t);
    }
}
