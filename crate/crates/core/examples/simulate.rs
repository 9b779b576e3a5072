//! The test bench: list the built-in scenarios, synthesize one, save it as
//! CSV, fuse it and score the result.
//!
//! ```text
//! cargo run --example simulate -- hover
//! ```

use marg_fusion::io;
use marg_fusion::pipeline::{run_pipeline, PipelineConfig};
use marg_fusion::sim::{evaluate, integrate_truth, synthesize, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for name in Scenario::names() {
        let s = Scenario::by_name(name).unwrap();
        println!("{name:<14} {:>6.1} s @ {:>5} Hz  {}", s.trajectory.duration(), s.rate(), s.description);
    }

    let name = std::env::args().nth(1).unwrap_or_else(|| "hover".into());
    let scenario = Scenario::by_name(&name).ok_or(format!("no scenario called {name}"))?;
    let truth = integrate_truth(&scenario.trajectory, scenario.rate());
    let raw = synthesize(&truth, &scenario.model, 0);

    let dir = std::env::temp_dir().join("marg-fusion-example");
    std::fs::create_dir_all(&dir)?;
    let trace_path = dir.join(format!("{name}.trace.csv"));
    io::write_trace(io::create(&trace_path)?, &raw)?;
    io::write_truth(io::create(&dir.join(format!("{name}.truth.csv")))?, &truth)?;
    println!("\nwrote {} samples to {}", raw.len(), trace_path.display());

    // read it back as a consumer would
    let trace = io::read_trace(io::open(&trace_path)?)?;
    let est = run_pipeline(&trace.samples, PipelineConfig { use_mag: trace.has_mag, ..Default::default() })?;
    let m = evaluate(&est, &truth)?;
    println!("uncalibrated fusion of {name}: {}", serde_json::to_string_pretty(&m)?);
    Ok(())
}
