//! Tap and double-tap detection on a synthetic accelerometer stream.
//!
//! ```text
//! cargo run --example taps
//! ```

use std::f64::consts::PI;

use marg_fusion::motion::{TapConfig, TapDetector};
use marg_fusion::{EulerAngles, Quaternion, Vec3};

fn main() {
    let attitude = Quaternion::from_euler(EulerAngles::from_degrees(0.0, 15.0, -10.0));
    let gravity = attitude.rotate_inverse(Vec3::new(0.0, 0.0, 1.0));
    // (start s, width s, peak g on body axis)
    let pulses = [
        (0.50, 0.02, Vec3::new(0.0, 0.0, 4.0)),  // single tap on top
        (1.50, 0.02, Vec3::new(3.5, 0.0, 0.0)),  // double tap on the side...
        (1.75, 0.02, Vec3::new(3.5, 0.0, 0.0)),  // ...250 ms later
        (2.80, 0.02, Vec3::new(0.0, 1.5, 0.0)),  // a nudge, below threshold
        (3.60, 0.30, Vec3::new(0.0, -3.0, 0.0)), // a shove, too long to be a tap
    ];
    let rate = 1000.0;
    let mut det = TapDetector::new(TapConfig::default()).unwrap();
    println!("t,kind,axis,sign,magnitude");
    for k in 0..(5.0 * rate) as usize {
        let t = k as f64 / rate;
        let mut accel = gravity;
        for (start, width, peak) in pulses {
            if (start..start + width).contains(&t) {
                accel += peak * (PI * (t - start) / width).sin();
            }
        }
        if let Some(event) = det.push(t, accel, attitude) {
            println!("{}", event.csv_line());
        }
    }
    if let Some(event) = det.finish() {
        println!("{}", event.csv_line());
    }
}
