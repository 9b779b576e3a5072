//! Attitude estimation on a simulated board: both filters, with and without
//! the magnetometer, scored against ground truth.
//!
//! ```text
//! cargo run --example orientation
//! ```

use marg_fusion::ahrs::FilterConfig;
use marg_fusion::pipeline::{run_pipeline, PipelineConfig};
use marg_fusion::sim::{evaluate, integrate_truth, synthesize, Segment, SensorErrorModel, TrajectorySpec};
use marg_fusion::{EulerAngles, Quaternion, Vec3};

fn main() {
    // pick the board up, tilt it, turn it, hold it
    let mut spec = TrajectorySpec::new(Quaternion::IDENTITY, 0.0);
    spec.push(Segment::hold(2.0))
        .rotate_to(Quaternion::from_euler(EulerAngles::from_degrees(60.0, 20.0, -15.0)), 2.0)
        .push(Segment::hold(6.0))
        .push(Segment::rotate(3.0, Vec3::new(0.0, 0.0, -0.4)))
        .push(Segment::hold(7.0));
    let truth = integrate_truth(&spec, 100.0);

    // noise only: bias and scale errors are what calibration is for
    let mut model = SensorErrorModel::realistic();
    for axis in [&mut model.gyro, &mut model.accel, &mut model.mag] {
        axis.bias = Vec3::ZERO;
        axis.scale = Vec3::ZERO;
    }
    let raw = synthesize(&truth, &model, 7);

    println!("{:<22} {:>9} {:>9} {:>12}", "filter", "rms °", "max °", "converged s");
    for (name, filter, use_mag) in [
        ("mahony 9-DOF", FilterConfig::default(), true),
        ("madgwick 9-DOF", FilterConfig::madgwick(0.1), true),
        ("mahony 6-DOF", FilterConfig::default(), false),
    ] {
        let est = run_pipeline(&raw, PipelineConfig { filter, use_mag, ..Default::default() }).unwrap();
        let m = evaluate(&est, &truth).unwrap();
        let converged = m.convergence_time.map_or("never".to_string(), |t| format!("{t:.2}"));
        println!(
            "{name:<22} {:>9.3} {:>9.3} {converged:>12}",
            m.attitude_rms.to_degrees(),
            m.attitude_max.to_degrees()
        );
    }

    let est = run_pipeline(&raw, PipelineConfig::default()).unwrap();
    println!("\n   t   yaw°  pitch°  roll°   (truth)");
    for k in (0..est.len()).step_by(200) {
        let [y, p, r] = est[k].q.to_euler().to_degrees();
        let [ty, tp, tr] = truth[k].q.to_euler().to_degrees();
        println!("{:4.0} {y:6.1} {p:7.1} {r:6.1}   ({ty:6.1} {tp:6.1} {tr:6.1})", est[k].t);
    }
}
