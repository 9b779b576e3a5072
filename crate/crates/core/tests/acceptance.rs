//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::collections::VecDeque;
use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::hint::black_box;
use std::io::{Read, Write};
use std::net::{Shutdown, TcpStream};
use std::process::{Command, ExitCode};
use std::sync::atomic::Ordering;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use marg_fusion::ahrs::{FilterConfig, FusionState, MargSample};
use marg_fusion::calibration::{CalibrationParams, CalibrationSession, Phase};
use marg_fusion::math::{angular_distance, EulerAngles, Quaternion, Vec3};
use marg_fusion::motion::{PlanarIntegrator, TapConfig, TapDetector, TapEvent, TapKind, DRIFT_CAVEAT};
use marg_fusion::pipeline::{run_pipeline, PipelineConfig};
use marg_fusion::protocol::{
    decode_command, decode_quaternion_frame, encode_command, encode_quaternion_frame, Command as Op, DeviceConfig,
    Server, StationarySource,
};
use marg_fusion::sim::scenario::STEP_START;
use marg_fusion::sim::sensor::{AxisErrors, DEFAULT_EARTH_FIELD};
use marg_fusion::sim::{integrate_truth, synthesize, Estimate, Scenario, Segment, SensorErrorModel, TrajectorySpec, TruthSample};
use marg_fusion::vertical::STANDARD_GRAVITY;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn scenario_data(name: &str, seed: u64) -> (Scenario, Vec<TruthSample>, Vec<marg_fusion::RawSample>) {
    let sc = Scenario::by_name(name).unwrap();
    let truth = integrate_truth(&sc.trajectory, sc.rate());
    let raw = synthesize(&truth, &sc.model, seed);
    (sc, truth, raw)
}

fn errors_deg(est: &[Estimate], truth: &[TruthSample]) -> Vec<f64> {
    est.iter().zip(truth).map(|(e, t)| angular_distance(e.q, t.q).to_degrees()).collect()
}

/// Calibration produced by the command-line tool from a simulated
/// calibration-motion recording.
fn cli_calibration() -> Result<CalibrationParams, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let trace = dir.path().join("calib.csv");
    let (_, _, raw) = scenario_data("calib-motion", 1);
    marg_fusion::io::write_trace(marg_fusion::io::create(&trace).map_err(|e| e.to_string())?, &raw)
        .map_err(|e| e.to_string())?;
    let out = dir.path().join("calibration.txt");
    let status = Command::new(env!("CARGO_BIN_EXE_marg"))
        .args(["calibrate", "--trace"])
        .arg(&trace)
        .arg("--out")
        .arg(&out)
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("marg calibrate exited with {status}"));
    }
    fs::read_to_string(&out).map_err(|e| e.to_string())?.parse().map_err(|e| format!("{e}"))
}

fn static_orientation(cal: &CalibrationParams) -> Outcome {
    let (sc, truth, raw) = scenario_data("static-9", 42);
    let run = |calibration| {
        let est = run_pipeline(&raw, PipelineConfig { calibration, ..Default::default() }).unwrap();
        errors_deg(&est, &truth)
    };
    let (cal_err, raw_err) = (run(*cal), run(CalibrationParams::IDENTITY));
    let rate = sc.rate();
    let mut worst_convergence: f64 = 0.0;
    let mut worst_settled: f64 = 0.0;
    let mut worst_uncalibrated: f64 = 0.0;
    for &(a, b) in &sc.windows {
        let (i0, i1) = ((a * rate).round() as usize, (b * rate).round() as usize);
        let window = &cal_err[i0..=i1.min(cal_err.len() - 1)];
        let settle = window.iter().rposition(|&e| e >= 2.0).map_or(0, |k| k + 1);
        worst_convergence = worst_convergence.max(settle as f64 / rate);
        let after = (i0 + (5.0 * rate) as usize)..=i1.min(cal_err.len() - 1);
        worst_settled = cal_err[after.clone()].iter().fold(worst_settled, |m, &e| m.max(e));
        worst_uncalibrated = raw_err[after].iter().fold(worst_uncalibrated, |m, &e| m.max(e));
    }
    let pass = worst_convergence <= 5.0 && worst_settled < 2.0 && worst_uncalibrated > worst_settled;
    outcome(
        pass,
        format!(
            "slowest pose converged in {worst_convergence:.2} s; max error after 5 s {worst_settled:.3}° calibrated vs {worst_uncalibrated:.3}° uncalibrated"
        ),
    )
}

fn no_drift(cal: &CalibrationParams) -> Outcome {
    let (sc, truth, raw) = scenario_data("long-static", 42);
    let est = run_pipeline(&raw, PipelineConfig { calibration: *cal, ..Default::default() }).unwrap();
    let err = errors_deg(&est, &truth);
    let at = |t: f64| err[(t * sc.rate()).round() as usize];
    let (e30, e300) = (at(30.0), at(300.0));
    outcome(e300 <= e30 + 0.5, format!("error {e30:.3}° at 30 s, {e300:.3}° at 300 s"))
}

fn altitude_rmse(cal: &CalibrationParams) -> Outcome {
    let (sc, truth, raw) = scenario_data("hover", 42);
    let est = run_pipeline(&raw, PipelineConfig { calibration: *cal, ..Default::default() }).unwrap();
    let start = (5.0 * sc.rate()) as usize;
    let sq: Vec<f64> = est[start..].iter().zip(&truth[start..]).map(|(e, t)| (e.altitude.unwrap() - t.altitude()).powi(2)).collect();
    let rmse = (sq.iter().sum::<f64>() / sq.len() as f64).sqrt();
    outcome(rmse <= 0.10, format!("steady-state RMSE {rmse:.4} m over 5-60 s"))
}

fn altitude_step(cal: &CalibrationParams) -> Outcome {
    let (sc, truth, raw) = scenario_data("altitude-step", 42);
    let est = run_pipeline(&raw, PipelineConfig { calibration: *cal, ..Default::default() }).unwrap();
    let rate = sc.rate();
    let err: Vec<f64> = est.iter().zip(&truth).map(|(e, t)| e.altitude.unwrap() - t.altitude()).collect();
    let step = (STEP_START * rate) as usize;
    let end = ((STEP_START + 10.0) * rate) as usize;
    let last_bad = err[step..=end].iter().rposition(|e| e.abs() > 0.1);
    let tracked = last_bad.map_or(0.0, |k| (k + 1) as f64 / rate);
    let worst = err[step..=end].iter().fold(0.0f64, |m, e| m.max(e.abs()));
    outcome(
        tracked <= 3.0,
        format!("within 0.1 m of truth {tracked:.2} s after the climb starts; worst error over the following 10 s {worst:.3} m"),
    )
}

fn throughput() -> Outcome {
    let cfg = FilterConfig::default();
    let mut state = FusionState::new(&cfg).unwrap();
    let samples: Vec<MargSample> = (0..1024)
        .map(|k| {
            let a = k as f64 * 0.01;
            MargSample::new(
                Vec3::new(0.01 * a.sin(), -0.02, 0.03 * a.cos()),
                Vec3::new(0.05 * a.cos(), 0.02, 0.99),
                Some(Vec3::new(0.2, 0.01 * a.sin(), 0.4)),
                0.0025,
            )
        })
        .collect();
    let n = 2_000_000;
    let start = Instant::now();
    for k in 0..n {
        state = state.update_marg(black_box(&samples[k & 1023]), &cfg).unwrap();
    }
    black_box(state);
    let rate = n as f64 / start.elapsed().as_secs_f64();
    outcome(
        rate >= 400.0,
        format!("{:.0} updates/s: {:.0}× the 400 Hz floor, {:.1}× the 40k desk target", rate, rate / 400.0, rate / 40_000.0),
    )
}

fn unit_norm() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let configs = [FilterConfig::mahony(0.5, 0.1), FilterConfig::madgwick(0.1)];
    for cfg in &configs {
        let mut s = FusionState::new(cfg).unwrap();
        for k in 0..500_000 {
            let mut v = |r: f64| Vec3::new(rng.random_range(-r..r), rng.random_range(-r..r), rng.random_range(-r..r));
            let gyro = v(35.0);
            // zero references now and then exercise the gyro-only path
            let accel = if k % 97 == 0 { Vec3::ZERO } else { v(16.0) };
            let mag = if k % 89 == 0 { Vec3::ZERO } else { v(8.0) };
            let dt = rng.random_range(1e-5..0.1);
            s = s.update_marg(&MargSample::new(gyro, accel, Some(mag), dt), cfg).unwrap();
            worst = worst.max((s.q.norm() - 1.0).abs());
        }
    }
    outcome(worst < 1e-6, format!("10^6 updates, worst |‖q‖ − 1| = {worst:.2e}"))
}

fn gyro_oracle() -> Outcome {
    let rate = Vec3::new(0.0, 0.0, FRAC_PI_2);
    let cfg = FilterConfig::default();
    let mut s = FusionState::new(&cfg).unwrap();
    for _ in 0..1000 {
        s = s.update_marg(&MargSample::new(rate, Vec3::ZERO, Some(Vec3::ZERO), 1e-3), &cfg).unwrap();
    }
    let closed = Quaternion::new((FRAC_PI_2 / 2.0).cos(), 0.0, 0.0, (FRAC_PI_2 / 2.0).sin());
    let direct = angular_distance(s.q, closed).to_degrees();
    let yaw_err = (s.q.to_euler().yaw.to_degrees() - 90.0).abs();

    // the same rotation through the simulator; its first row has no preceding interval
    let (_, truth, raw) = scenario_data("yaw-spin", 0);
    let mut s = FusionState::new(&cfg).unwrap();
    for w in raw.windows(2) {
        let (prev, cur) = (w[0], w[1]);
        s = s.update_marg(&MargSample::new(cur.gyro, cur.accel, Some(cur.mag), cur.t - prev.t), &cfg).unwrap();
    }
    let simulated = angular_distance(s.q, truth.last().unwrap().q).to_degrees();
    outcome(
        yaw_err < 0.1 && direct < 0.1 && simulated < 0.1,
        format!("yaw error {yaw_err:.2e}°, attitude error {direct:.2e}° (closed form), {simulated:.2e}° (simulated)"),
    )
}

fn calibration_recovery(cli: &CalibrationParams) -> Outcome {
    let model = SensorErrorModel::realistic();
    let field = DEFAULT_EARTH_FIELD.norm();
    let mut fits = vec![("marg calibrate".to_string(), *cli)];
    for seed in [2, 3, 4] {
        let (_, _, raw) = scenario_data("calib-motion", seed);
        let mut session = CalibrationSession::default();
        for s in &raw {
            session.step(s).unwrap();
            if session.phase() == Phase::Fitted {
                break;
            }
        }
        match session.params() {
            Ok(p) => fits.push((format!("seed {seed}"), p)),
            Err(e) => return outcome(false, format!("seed {seed}: {e}")),
        }
    }
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for (_, p) in &fits {
        worst.0 = worst.0.max((p.mag_offset - model.mag.bias).norm());
        worst.1 = worst.1.max((p.accel_offset - model.accel.bias).norm());
        worst.2 = worst.2.max((p.gyro_bias - model.gyro.bias).norm());
    }
    outcome(
        worst.0 <= 0.01 * field && worst.1 <= 0.005 && worst.2 <= 0.001,
        format!(
            "{} fits; worst errors: mag {:.5} gauss (limit {:.5}), accel {:.5} g, gyro {:.6} rad/s",
            fits.len(),
            worst.0,
            0.01 * field,
            worst.1,
            worst.2
        ),
    )
}

/// Independent model of the device's replies to a noiseless level board.
struct ReferenceDevice {
    pending: Option<u8>,
    version: Vec<u8>,
    quaternion: Vec<u8>,
    quaternion_altitude: Vec<u8>,
    raw: Vec<u8>,
    dump: Vec<u8>,
}

impl ReferenceDevice {
    fn new() -> Self {
        let f32s = |vals: &[f32]| {
            let mut v: Vec<u8> = vals.iter().flat_map(|x| x.to_le_bytes()).collect();
            v.push(b'\n');
            v
        };
        let mut dump = String::new();
        for (key, value) in [("accel_offset", "0"), ("accel_scale", "1"), ("mag_offset", "0"), ("mag_scale", "1"), ("gyro_bias", "0")] {
            for axis in ["x", "y", "z"] {
                dump += &format!("{key}_{axis} = {value}.0000000000000000e0\n");
            }
        }
        dump.push('\n');
        Self {
            pending: None,
            version: b"marg-fusion-kit 1.0\n".to_vec(),
            quaternion: f32s(&[1.0, 0.0, 0.0, 0.0]),
            quaternion_altitude: f32s(&[1.0, 0.0, 0.0, 0.0, 0.0]),
            raw: f32s(&[0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.2, 0.0, 0.4, 1013.25]),
            dump: dump.as_bytes().to_vec(),
        }
    }

    fn is_mid_command(&self) -> bool {
        self.pending.is_some()
    }

    fn push(&mut self, b: u8, out: &mut Vec<u8>) {
        if let Some(op) = self.pending.take() {
            let frame = match op {
                b'q' => &self.quaternion,
                b'z' => &self.quaternion_altitude,
                _ => &self.raw,
            };
            if b == 0 {
                out.extend(b"?\n");
            }
            for _ in 0..b {
                out.extend(frame);
            }
            return;
        }
        match b {
            b'v' => out.extend(&self.version),
            b'C' => out.extend(&self.dump),
            b'x' => {}
            b'q' | b'r' | b'z' => self.pending = Some(b),
            _ => out.extend(b"?\n"),
        }
    }
}

fn codec_exactness() -> Outcome {
    // every command, and every one- and two-byte request
    let commands: Vec<Op> = Op::all().collect();
    let mut bad = commands.iter().filter(|&&c| decode_command(&encode_command(c)) != Ok(c)).count();
    for a in 0..=255u8 {
        for input in std::iter::once(vec![a]).chain((0..=255u8).map(|b| vec![a, b])) {
            if let Ok(c) = decode_command(&input) {
                bad += usize::from(encode_command(c) != input);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut frames = 0;
    while frames < 10_000 {
        let bits: [u32; 4] = [rng.next_u32(), rng.next_u32(), rng.next_u32(), rng.next_u32()];
        let vals = bits.map(f32::from_bits);
        if vals.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let q = Quaternion::new(vals[0] as f64, vals[1] as f64, vals[2] as f64, vals[3] as f64);
        let frame = encode_quaternion_frame(q);
        let expected: Vec<u8> = bits.iter().flat_map(|b| b.to_le_bytes()).chain([b'\n']).collect();
        let back = decode_quaternion_frame(&frame).map(|d| d.to_array().map(|c| (c as f32).to_bits()));
        if frame != expected || back != Ok(bits) {
            bad += 1;
        }
        frames += 1;
    }
    if bad > 0 {
        return outcome(false, format!("{bad} codec mismatches"));
    }
    match tcp_fuzz(1_000_000) {
        Ok(detail) => outcome(true, format!("{} commands and 10^4 frames bit-identical; {detail}", commands.len())),
        Err(e) => outcome(false, e),
    }
}

fn tcp_fuzz(total: usize) -> Result<String, String> {
    let server = Server::bind("127.0.0.1:0", DeviceConfig::default(), Arc::new(Mutex::new(StationarySource::new(100.0))))
        .map_err(|e| e.to_string())?;
    let addr = server.local_addr().map_err(|e| e.to_string())?;
    let stop = server.shutdown_handle();
    let handle = thread::spawn(move || server.run());

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut reference = ReferenceDevice::new();
    let mut request = Vec::with_capacity(total + total / 50);
    let mut expected = Vec::new();
    let mut injected = 0;
    while request.len() < total {
        let b = if rng.random_bool(0.02) {
            if reference.is_mid_command() {
                let filler = rng.random_range(1..=4u8);
                reference.push(filler, &mut expected);
                request.push(filler);
            }
            injected += 1;
            b'v'
        } else {
            // keep counted requests short so replies stay a manageable size
            let b: u8 = rng.random();
            if reference.is_mid_command() { b % 8 } else { b }
        };
        reference.push(b, &mut expected);
        request.push(b);
    }
    if reference.is_mid_command() {
        reference.push(1, &mut expected);
        request.push(1);
    }

    let stream = TcpStream::connect(addr).map_err(|e| e.to_string())?;
    stream.set_read_timeout(Some(Duration::from_secs(30))).map_err(|e| e.to_string())?;
    let mut writer = stream.try_clone().map_err(|e| e.to_string())?;
    let want = expected.len();
    let reader = thread::spawn(move || {
        let mut got = Vec::with_capacity(want);
        let mut stream = stream;
        let mut buf = [0u8; 65536];
        while got.len() < want {
            match stream.read(&mut buf) {
                Ok(0) => break,
                Ok(n) => got.extend_from_slice(&buf[..n]),
                Err(_) => break,
            }
        }
        got
    });
    let mut chunks: VecDeque<&[u8]> = request.chunks(997).collect();
    while let Some(c) = chunks.pop_front() {
        writer.write_all(c).map_err(|e| e.to_string())?;
    }
    let got = reader.join().map_err(|_| "reader panicked".to_string())?;
    let _ = writer.shutdown(Shutdown::Both);
    stop.store(true, Ordering::SeqCst);
    handle.join().map_err(|_| "server panicked".to_string())?.map_err(|e| e.to_string())?;
    if got != expected {
        let first = got.iter().zip(&expected).position(|(a, b)| a != b).unwrap_or(got.len().min(expected.len()));
        let lo = first.saturating_sub(40);
        return Err(format!(
            "fuzz reply diverges at byte {first} ({} of {} bytes received)\n  got      {:?}\n  expected {:?}\n  request  {:?}",
            got.len(),
            expected.len(),
            String::from_utf8_lossy(&got[lo..(first + 40).min(got.len())]),
            String::from_utf8_lossy(&expected[lo..(first + 40).min(expected.len())]),
            &request[..60]
        ));
    }
    Ok(format!("{}-byte fuzz with {injected} injected version requests answered exactly ({} reply bytes)", request.len(), got.len()))
}

#[derive(Clone, Copy)]
struct Pulse {
    start: f64,
    width: f64,
    amplitude: f64,
    axis: usize,
    sign: f64,
}

struct ExpectedTap {
    t: f64,
    kind: TapKind,
    axis: usize,
    sign: i8,
}

fn tap_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let rate = 1000.0;
    let spacing = 1.2;
    let mut kinds: Vec<u8> = [vec![0u8; 30], vec![1u8; 20], vec![2u8; 20]].concat();
    for i in (1..kinds.len()).rev() {
        kinds.swap(i, rng.random_range(0..=i));
    }
    let mut pulses = Vec::new();
    let mut expected = Vec::new();
    for (k, kind) in kinds.iter().enumerate() {
        let start = 1.0 + spacing * k as f64;
        let tap = |rng: &mut ChaCha8Rng, start: f64, lo: f64, hi: f64| Pulse {
            start,
            width: rng.random_range(0.010..0.040),
            amplitude: rng.random_range(lo..hi),
            axis: rng.random_range(0..3),
            sign: if rng.random_bool(0.5) { 1.0 } else { -1.0 },
        };
        match kind {
            0 => {
                let p = tap(&mut rng, start, 3.0, 6.0);
                expected.push(ExpectedTap { t: p.start + p.width / 2.0, kind: TapKind::Single, axis: p.axis, sign: p.sign as i8 });
                pulses.push(p);
            }
            1 => {
                let p = tap(&mut rng, start, 3.0, 6.0);
                let gap = rng.random_range(0.150..0.350);
                let q = tap(&mut rng, start + gap, 3.0, 6.0);
                expected.push(ExpectedTap { t: p.start + p.width / 2.0, kind: TapKind::Double, axis: p.axis, sign: p.sign as i8 });
                pulses.extend([p, q]);
            }
            _ => pulses.push(tap(&mut rng, start, 0.5, 2.0)),
        }
    }
    let n = ((1.0 + spacing * kinds.len() as f64 + 1.0) * rate) as usize;

    let mut hits = 0;
    let mut detected = 0;
    let trials = 4;
    for _ in 0..trials {
        let attitude = Quaternion::from_euler(EulerAngles::new(
            rng.random_range(-3.1..3.1),
            rng.random_range(-1.4..1.4),
            rng.random_range(-3.1..3.1),
        ));
        let gravity = attitude.rotate_inverse(Vec3::new(0.0, 0.0, 1.0));
        let mut det = TapDetector::new(TapConfig::default()).unwrap();
        let mut events: Vec<TapEvent> = Vec::new();
        for i in 0..n {
            let t = i as f64 / rate;
            let mut a = gravity.to_array();
            for p in &pulses {
                if t >= p.start && t < p.start + p.width {
                    a[p.axis] += p.sign * p.amplitude * (std::f64::consts::PI * (t - p.start) / p.width).sin();
                }
            }
            let noise: [f64; 3] = std::array::from_fn(|_| { let z: f64 = StandardNormal.sample(&mut rng); 0.01 * z });
            let accel = Vec3::from_array(a) + Vec3::from_array(noise);
            events.extend(det.push(t, accel, attitude));
        }
        events.extend(det.finish());
        detected += events.len();
        for e in &expected {
            let matched = events.iter().any(|d| {
                d.kind == e.kind && (d.t - e.t).abs() < 0.03 && d.axis.index() == e.axis && d.sign == e.sign
            });
            hits += usize::from(matched);
        }
    }
    let total = expected.len() * trials;
    let precision = if detected == 0 { 0.0 } else { hits as f64 / detected as f64 };
    let recall = hits as f64 / total as f64;
    outcome(
        precision == 1.0 && recall == 1.0,
        format!("{trials} attitudes × (30 singles, 20 doubles, 20 distractors): precision {precision:.3}, recall {recall:.3}"),
    )
}

fn displacement() -> Outcome {
    let (_, truth, raw) = scenario_data("planar", 0);
    let mut integ = PlanarIntegrator::new();
    let mut last = None;
    for (s, t) in raw.iter().zip(&truth) {
        last = Some(integ.push(s.t, s.accel, t.q));
    }
    let d = last.unwrap();
    let exact = 0.5 * 1.0 * d.t * d.t;
    let rel = (d.position.x - exact).abs() / exact;

    // ensemble of noisy runs; error grows faster than linearly with time
    let mut spec = TrajectorySpec::new(Quaternion::IDENTITY, 0.0);
    spec.push(Segment::accelerate(4.0, Vec3::new(1.0, 0.0, 0.0)));
    let truth = integrate_truth(&spec, 1000.0);
    let model = SensorErrorModel {
        accel: AxisErrors { noise_sigma: 0.01, ..AxisErrors::NONE },
        ..SensorErrorModel::ideal().with_rate(1000.0)
    };
    let (i2, i4) = (2000, 4000);
    let runs = 200;
    let (mut sq2, mut sq4) = (0.0, 0.0);
    for seed in 0..runs {
        let raw = synthesize(&truth, &model, seed);
        let mut integ = PlanarIntegrator::new();
        for (i, (s, t)) in raw.iter().zip(&truth).enumerate() {
            let p = integ.push(s.t, s.accel, t.q).position;
            if i == i2 {
                sq2 += (p - t.position).norm().powi(2);
            } else if i == i4 {
                sq4 += (p - t.position).norm().powi(2);
            }
        }
    }
    let (e2, e4) = ((sq2 / runs as f64).sqrt(), (sq4 / runs as f64).sqrt());
    let caveat_ok = d.caveat == DRIFT_CAVEAT && !DRIFT_CAVEAT.is_empty();
    outcome(
        rel < 1e-6 && e4 > 2.0 * e2 && caveat_ok,
        format!(
            "noiseless x(2 s) = {:.9} m vs {exact} m (rel {rel:.1e}); σ = 0.01 g ({:.4} m/s²) RMS error {e2:.4} m at 2 s, {e4:.4} m at 4 s (×{:.2})",
            d.position.x,
            0.01 * STANDARD_GRAVITY,
            e4 / e2
        ),
    )
}

fn main() -> ExitCode {
    let started = Instant::now();
    let calibration = cli_calibration();
    let with_cal = |f: fn(&CalibrationParams) -> Outcome| -> Box<dyn FnOnce() -> Outcome> {
        let c = calibration.clone();
        Box::new(move || match c {
            Ok(p) => f(&p),
            Err(e) => outcome(false, format!("calibration unavailable: {e}")),
        })
    };
    let criteria: Vec<(&str, Box<dyn FnOnce() -> Outcome>)> = vec![
        ("static orientation < 2°", with_cal(static_orientation)),
        ("no drift over 300 s", with_cal(no_drift)),
        ("hover altitude RMSE ≤ 0.10 m", with_cal(altitude_rmse)),
        ("1 m step tracked within 0.1 m in ≤ 3 s", with_cal(altitude_step)),
        ("throughput ≥ 400 updates/s", Box::new(throughput)),
        ("unit-norm invariant", Box::new(unit_norm)),
        ("gyro integration oracle", Box::new(gyro_oracle)),
        ("calibration recovery", with_cal(calibration_recovery)),
        ("codec exactness and server fuzz", Box::new(codec_exactness)),
        ("tap suite", Box::new(tap_suite)),
        ("displacement and drift", Box::new(displacement)),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let t0 = Instant::now();
        let r = check();
        failures += usize::from(!r.pass);
        println!(
            "{} {:>2}. {name}: {} [{:.1} s]",
            if r.pass { "PASS" } else { "FAIL" },
            i + 1,
            r.detail,
            t0.elapsed().as_secs_f64()
        );
    }
    println!("{} of 11 criteria passed in {:.1} s", 11 - failures, started.elapsed().as_secs_f64());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
