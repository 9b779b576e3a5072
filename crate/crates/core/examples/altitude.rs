//! Barometric altitude with inertial smoothing: a 1 m climb seen through a
//! quantized barometer, with and without the accelerometer.
//!
//! ```text
//! cargo run --example altitude
//! ```

use marg_fusion::sim::{integrate_truth, synthesize, Scenario};
use marg_fusion::vertical::{pressure_to_altitude, AltitudeFilter};
use marg_fusion::{CalibrationParams, Vec3};

fn main() {
    let scenario = Scenario::by_name("altitude-step").unwrap();
    let truth = integrate_truth(&scenario.trajectory, scenario.rate());
    let raw = synthesize(&truth, &scenario.model, 3);
    // the simulated board has accelerometer offset and scale errors; undo them
    let accel = scenario.model.accel;
    let cal = CalibrationParams {
        accel_offset: accel.bias,
        accel_scale: (Vec3::splat(1.0) + accel.scale).map(|s| 1.0 / s),
        ..CalibrationParams::IDENTITY
    };

    let p0 = scenario.model.reference_pressure;
    let mut filter = AltitudeFilter::new(1.0, p0).unwrap();
    let dt = 1.0 / scenario.rate();
    println!("   t   truth  baro only  fused");
    let (mut baro_sq, mut fused_sq) = (0.0, 0.0);
    for (k, (r, t)) in raw.iter().zip(&truth).enumerate() {
        let s = cal.apply(r);
        filter.push_pressure(s.pressure).unwrap();
        let fused = filter.push_inertial(t.q, s.accel, dt);
        let baro = pressure_to_altitude(s.pressure, p0).unwrap();
        baro_sq += (baro - t.altitude()).powi(2);
        fused_sq += (fused - t.altitude()).powi(2);
        if k % 50 == 0 && (9.0..=14.0).contains(&t.t) {
            println!("{:5.1} {:7.3} {:9.3} {:7.3}", t.t, t.altitude(), baro, fused);
        }
    }
    let n = raw.len() as f64;
    println!("\nRMSE: barometer alone {:.3} m, fused {:.3} m", (baro_sq / n).sqrt(), (fused_sq / n).sqrt());
}
