//! Planar displacement by double integration, and why it only holds up
//! for a few seconds.
//!
//! ```text
//! cargo run --example displacement
//! ```

use marg_fusion::motion::PlanarIntegrator;
use marg_fusion::sim::sensor::AxisErrors;
use marg_fusion::sim::{integrate_truth, synthesize, Segment, SensorErrorModel, TrajectorySpec};
use marg_fusion::{Quaternion, Vec3};

fn main() {
    // push the board 1 m/s² north for a second, coast, then brake
    let mut spec = TrajectorySpec::new(Quaternion::IDENTITY, 0.0);
    spec.push(Segment::accelerate(1.0, Vec3::new(1.0, 0.0, 0.0)))
        .push(Segment::hold(2.0))
        .push(Segment::accelerate(1.0, Vec3::new(-1.0, 0.0, 0.0)))
        .push(Segment::hold(4.0));
    let truth = integrate_truth(&spec, 1000.0);

    for (label, sigma) in [("perfect accelerometer", 0.0), ("σ = 0.01 g noise", 0.01)] {
        let model = SensorErrorModel {
            accel: AxisErrors { noise_sigma: sigma, ..AxisErrors::NONE },
            ..SensorErrorModel::ideal().with_rate(1000.0)
        };
        let raw = synthesize(&truth, &model, 5);
        let mut integ = PlanarIntegrator::new();
        println!("{label}");
        println!("   t   north m  (truth)   east m");
        for (k, (s, t)) in raw.iter().zip(&truth).enumerate() {
            let d = integ.push(s.t, s.accel, t.q);
            if k % 1000 == 0 {
                println!("{:4.1} {:9.4} {:9.4} {:8.4}", d.t, d.position.x, t.position.x, d.position.y);
            }
            if k == raw.len() - 1 {
                println!("note: {}\n", d.caveat);
            }
        }
    }
}
