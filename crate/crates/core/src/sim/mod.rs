//! Hardware-free test bench: closed-form trajectories, sensor error models,
//! named scenarios and accuracy metrics.

pub mod evaluate;
pub mod scenario;
pub mod sensor;
pub mod trajectory;

pub use evaluate::{evaluate, evaluate_window, Estimate, EvaluateError, Metrics};
pub use scenario::Scenario;
pub use sensor::{synthesize, SensorErrorModel};
pub use trajectory::{integrate_truth, Segment, TrajectorySpec, TruthSample};
