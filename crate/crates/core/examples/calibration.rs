//! Guided calibration: feed a recording through a session, follow its
//! prompts, and compare attitude before and after applying the result.
//!
//! ```text
//! cargo run --example calibration
//! ```

use marg_fusion::calibration::{CalibrationSession, Phase};
use marg_fusion::pipeline::{run_pipeline, PipelineConfig};
use marg_fusion::sim::{evaluate_window, integrate_truth, synthesize, Scenario};

fn main() {
    let script = Scenario::by_name("calib-motion").unwrap();
    let recording = synthesize(&integrate_truth(&script.trajectory, script.rate()), &script.model, 1);

    let mut session = CalibrationSession::default();
    let mut shown = None;
    for s in &recording {
        let prompt = session.step(s).expect("fit");
        // print each instruction once, when it first appears
        let kind = std::mem::discriminant(&prompt);
        if shown != Some(kind) {
            println!("t = {:6.2} s  {prompt}", s.t);
            shown = Some(kind);
        }
        if session.phase() == Phase::Fitted {
            break;
        }
    }
    let report = session.report().unwrap();
    let params = session.params().unwrap();
    println!("\nfit residuals: accel {:.4} g, mag {:.4} gauss", report.accel.residual_rms, report.mag.residual_rms);
    println!("calibration file:\n{params}");

    let test = Scenario::by_name("static-9").unwrap();
    let truth = integrate_truth(&test.trajectory, test.rate());
    let raw = synthesize(&truth, &test.model, 2);
    for (label, calibration) in [("uncalibrated", Default::default()), ("calibrated", params)] {
        let est = run_pipeline(&raw, PipelineConfig { calibration, ..Default::default() }).unwrap();
        let worst = test
            .windows
            .iter()
            .map(|&(a, b)| evaluate_window(&est, &truth, a + 5.0, b).unwrap().attitude_max.to_degrees())
            .fold(0.0, f64::max);
        println!("{label:>12}: worst static error over nine poses {worst:.2}°");
    }
}
