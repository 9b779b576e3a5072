use serde::Serialize;
use thiserror::Error;

use crate::math::{angular_distance, Quaternion};
use crate::sim::trajectory::TruthSample;

/// Attitude error bound that defines convergence, radians (2°).
pub const CONVERGENCE_THRESHOLD: f64 = 2.0 * core::f64::consts::PI / 180.0;

const TIME_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvaluateError {
    #[error("estimate and truth streams differ in length ({estimates} vs {truth})")]
    LengthMismatch { estimates: usize, truth: usize },
    #[error("timestamp mismatch at row {index}: estimate t = {estimate}, truth t = {truth}")]
    TimestampMismatch { index: usize, estimate: f64, truth: f64 },
    #[error("empty streams")]
    Empty,
}

/// One filter output row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub t: f64,
    pub q: Quaternion,
    /// m, when the pipeline estimated altitude
    pub altitude: Option<f64>,
}

impl From<&TruthSample> for Estimate {
    fn from(s: &TruthSample) -> Self {
        Estimate { t: s.t, q: s.q, altitude: Some(s.altitude()) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    /// rad
    pub attitude_rms: f64,
    /// rad
    pub attitude_max: f64,
    /// m; absent when no estimate carried altitude
    pub altitude_rmse: Option<f64>,
    /// s; first instant after which the attitude error stays below 2°,
    /// absent if it never does
    pub convergence_time: Option<f64>,
    pub samples: usize,
}

fn check_alignment(estimates: &[Estimate], truth: &[TruthSample]) -> Result<(), EvaluateError> {
    if estimates.len() != truth.len() {
        return Err(EvaluateError::LengthMismatch { estimates: estimates.len(), truth: truth.len() });
    }
    if estimates.is_empty() {
        return Err(EvaluateError::Empty);
    }
    for (index, (e, t)) in estimates.iter().zip(truth).enumerate() {
        if (e.t - t.t).abs() > TIME_TOLERANCE {
            return Err(EvaluateError::TimestampMismatch { index, estimate: e.t, truth: t.t });
        }
    }
    Ok(())
}

/// Per-row attitude error, radians.
pub fn attitude_errors(estimates: &[Estimate], truth: &[TruthSample]) -> Result<Vec<f64>, EvaluateError> {
    check_alignment(estimates, truth)?;
    Ok(estimates.iter().zip(truth).map(|(e, t)| angular_distance(e.q, t.q)).collect())
}

pub fn evaluate(estimates: &[Estimate], truth: &[TruthSample]) -> Result<Metrics, EvaluateError> {
    let errors = attitude_errors(estimates, truth)?;
    let n = errors.len() as f64;
    let attitude_rms = (errors.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    let attitude_max = errors.iter().copied().fold(0.0, f64::max);

    let alt_pairs: Vec<(f64, f64)> = estimates
        .iter()
        .zip(truth)
        .filter_map(|(e, t)| e.altitude.map(|a| (a, t.altitude())))
        .collect();
    let altitude_rmse = (!alt_pairs.is_empty()).then(|| {
        (alt_pairs.iter().map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / alt_pairs.len() as f64).sqrt()
    });

    let convergence_time = match errors.iter().rposition(|&e| e >= CONVERGENCE_THRESHOLD) {
        None => Some(estimates[0].t),
        Some(last_bad) => estimates.get(last_bad + 1).map(|e| e.t),
    };

    Ok(Metrics { attitude_rms, attitude_max, altitude_rmse, convergence_time, samples: errors.len() })
}

/// Metrics restricted to rows with `start <= t < end`.
pub fn evaluate_window(
    estimates: &[Estimate],
    truth: &[TruthSample],
    start: f64,
    end: f64,
) -> Result<Metrics, EvaluateError> {
    check_alignment(estimates, truth)?;
    let idx: Vec<usize> = (0..truth.len()).filter(|&i| truth[i].t >= start && truth[i].t < end).collect();
    let (Some(&first), Some(&last)) = (idx.first(), idx.last()) else {
        return Err(EvaluateError::Empty);
    };
    evaluate(&estimates[first..=last], &truth[first..=last])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{EulerAngles, Vec3};

    fn truth_stream(n: usize) -> Vec<TruthSample> {
        (0..n)
            .map(|k| TruthSample {
                t: k as f64 * 0.01,
                q: Quaternion::from_euler(EulerAngles::new(0.01 * k as f64, 0.2, -0.1)),
                position: Vec3::new(0.0, 0.0, -10.0),
                velocity: Vec3::ZERO,
            })
            .collect()
    }

    #[test]
    fn truth_against_itself_is_zero() {
        let truth = truth_stream(100);
        let est: Vec<Estimate> = truth.iter().map(Estimate::from).collect();
        let m = evaluate(&est, &truth).unwrap();
        assert!(m.attitude_rms < 1e-15);
        assert!(m.attitude_max < 1e-15);
        assert_eq!(m.altitude_rmse, Some(0.0));
        assert_eq!(m.convergence_time, Some(0.0));
    }

    #[test]
    fn fixed_rotation_offset() {
        let truth = truth_stream(100);
        let offset = Quaternion::from_axis_angle(Vec3::new(1.0, 1.0, 0.0), 5f64.to_radians()).unwrap();
        let est: Vec<Estimate> =
            truth.iter().map(|s| Estimate { t: s.t, q: s.q * offset, altitude: None }).collect();
        let m = evaluate(&est, &truth).unwrap();
        assert!((m.attitude_rms.to_degrees() - 5.0).abs() < 1e-9);
        assert!((m.attitude_max.to_degrees() - 5.0).abs() < 1e-9);
        assert_eq!(m.altitude_rmse, None);
        assert_eq!(m.convergence_time, None);
    }

    #[test]
    fn convergence_time_is_last_crossing() {
        let truth = truth_stream(100);
        let est: Vec<Estimate> = truth
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let deg = if k < 30 || k == 50 { 3.0 } else { 1.0 };
                let off = Quaternion::from_axis_angle(Vec3::new(0.0, 0.0, 1.0), f64::to_radians(deg)).unwrap();
                Estimate { t: s.t, q: s.q * off, altitude: None }
            })
            .collect();
        let m = evaluate(&est, &truth).unwrap();
        assert!((m.convergence_time.unwrap() - 0.51).abs() < 1e-12);
    }

    #[test]
    fn misaligned_streams_error() {
        let truth = truth_stream(10);
        let mut est: Vec<Estimate> = truth.iter().map(Estimate::from).collect();
        assert!(matches!(evaluate(&est[..9], &truth), Err(EvaluateError::LengthMismatch { .. })));
        est[4].t += 0.001;
        assert!(matches!(evaluate(&est, &truth), Err(EvaluateError::TimestampMismatch { index: 4, .. })));
    }

    #[test]
    fn window_selects_rows() {
        let truth = truth_stream(100);
        let est: Vec<Estimate> = truth.iter().map(Estimate::from).collect();
        let m = evaluate_window(&est, &truth, 0.2, 0.5).unwrap();
        assert_eq!(m.samples, 30);
        assert!(evaluate_window(&est, &truth, 5.0, 6.0).is_err());
    }
}
