use std::io::{self, ErrorKind, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use log::{debug, info, warn};

use super::{
    encode_quaternion_altitude_frame, encode_quaternion_frame, encode_raw_frame, raw_channels, Command,
    CommandDecoder, ERROR_REPLY, VERSION_REPLY,
};
use crate::math::Vec3;
use crate::pipeline::{Pipeline, PipelineConfig, PipelineError};
use crate::sample::RawSample;
use crate::sim::sensor::DEFAULT_EARTH_FIELD;
use crate::vertical::SEA_LEVEL_PRESSURE;

const POLL_INTERVAL: Duration = Duration::from_millis(50);

/// Where the simulated board gets its readings. Pulls are serialized by
/// the surrounding mutex, so every connection sees a distinct sample.
pub trait SampleSource: Send {
    fn next_sample(&mut self) -> RawSample;
}

pub type SharedSource = Arc<Mutex<dyn SampleSource>>;

/// Noise-free level board at rest at the pressure reference.
#[derive(Debug, Clone)]
pub struct StationarySource {
    rate: f64,
    index: u64,
}

impl StationarySource {
    pub fn new(rate: f64) -> Self {
        Self { rate, index: 0 }
    }
}

impl SampleSource for StationarySource {
    fn next_sample(&mut self) -> RawSample {
        let t = self.index as f64 / self.rate;
        self.index += 1;
        RawSample {
            t,
            gyro: Vec3::ZERO,
            accel: Vec3::new(0.0, 0.0, 1.0),
            mag: DEFAULT_EARTH_FIELD,
            pressure: SEA_LEVEL_PRESSURE,
        }
    }
}

/// Replays a recorded or synthesized trace, starting over at the end.
#[derive(Debug, Clone)]
pub struct LoopingSource {
    samples: Vec<RawSample>,
    index: usize,
}

impl LoopingSource {
    /// Panics on an empty trace.
    pub fn new(samples: Vec<RawSample>) -> Self {
        assert!(!samples.is_empty(), "a looping source needs at least one sample");
        Self { samples, index: 0 }
    }
}

impl SampleSource for LoopingSource {
    fn next_sample(&mut self) -> RawSample {
        let s = self.samples[self.index];
        self.index = (self.index + 1) % self.samples.len();
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceConfig {
    pub pipeline: PipelineConfig,
    /// Sample rate of the source, Hz.
    pub rate: f64,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        Self { pipeline: PipelineConfig::default(), rate: 100.0 }
    }
}

impl DeviceConfig {
    fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig { nominal_dt: 1.0 / self.rate, ..self.pipeline }
    }
}

/// Protocol state of one connection: its own fusion pipeline and request
/// parser, pulling from the shared source.
///
/// Each connection keeps its own clock at the source rate, so a pipeline's
/// time steps do not depend on what other connections consume.
pub struct Device {
    config: DeviceConfig,
    source: SharedSource,
    pipeline: Pipeline,
    decoder: CommandDecoder,
    ticks: u64,
}

impl Device {
    pub fn new(config: DeviceConfig, source: SharedSource) -> Result<Self, PipelineError> {
        let pipeline = Pipeline::new(config.pipeline_config())?;
        Ok(Self { config, source, pipeline, decoder: CommandDecoder::new(), ticks: 0 })
    }

    fn pull(&mut self) -> RawSample {
        let mut s = self.source.lock().unwrap_or_else(|e| e.into_inner()).next_sample();
        s.t = self.ticks as f64 / self.config.rate;
        self.ticks += 1;
        s
    }

    /// Appends the reply to `cmd` to `out`.
    pub fn handle(&mut self, cmd: Command, out: &mut Vec<u8>) {
        match cmd {
            Command::Version => out.extend_from_slice(VERSION_REPLY),
            Command::RawSamples(n) => {
                for _ in 0..n {
                    let s = self.pull();
                    out.extend(encode_raw_frame(&raw_channels(&s)));
                }
            }
            Command::Quaternions(n) | Command::QuaternionAltitude(n) => {
                for _ in 0..n {
                    let s = self.pull();
                    match self.pipeline.push(&s) {
                        Ok(e) if matches!(cmd, Command::Quaternions(_)) => out.extend(encode_quaternion_frame(e.q)),
                        Ok(e) => out.extend(encode_quaternion_altitude_frame(e.q, e.altitude.unwrap_or(0.0))),
                        Err(err) => {
                            warn!("fusion failed: {err}");
                            out.extend_from_slice(ERROR_REPLY);
                        }
                    }
                }
            }
            Command::CalibrationDump => {
                out.extend_from_slice(self.config.pipeline.calibration.to_string().as_bytes());
                out.push(b'\n');
            }
            Command::Reset => {
                self.pipeline.reset();
                self.ticks = 0;
            }
        }
    }

    /// Parses request bytes and appends every reply to `out`.
    pub fn feed(&mut self, bytes: &[u8], out: &mut Vec<u8>) {
        for &b in bytes {
            match self.decoder.push(b) {
                None => {}
                Some(Ok(cmd)) => self.handle(cmd, out),
                Some(Err(e)) => {
                    debug!("bad request: {e}");
                    out.extend_from_slice(ERROR_REPLY);
                }
            }
        }
    }
}

fn is_transient(e: &io::Error) -> bool {
    matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut | ErrorKind::Interrupted)
}

/// Request/response loop over any byte stream. Returns when the peer
/// closes its side or `shutdown` is raised (checked whenever a read times
/// out).
pub fn serve_connection<R: Read, W: Write>(
    mut reader: R,
    mut writer: W,
    device: &mut Device,
    shutdown: &AtomicBool,
) -> io::Result<()> {
    let mut buf = [0u8; 4096];
    let mut out = Vec::new();
    while !shutdown.load(Ordering::SeqCst) {
        match reader.read(&mut buf) {
            Ok(0) => break,
            Ok(n) => {
                out.clear();
                device.feed(&buf[..n], &mut out);
                writer.write_all(&out)?;
                writer.flush()?;
            }
            Err(e) if is_transient(&e) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

/// TCP front end: one thread per connection, all sharing one source.
pub struct Server {
    listener: TcpListener,
    config: DeviceConfig,
    source: SharedSource,
    shutdown: Arc<AtomicBool>,
}

impl Server {
    pub fn bind<A: ToSocketAddrs>(addr: A, config: DeviceConfig, source: SharedSource) -> io::Result<Self> {
        // fail here rather than on the first connection
        Pipeline::new(config.pipeline_config()).map_err(|e| io::Error::new(ErrorKind::InvalidInput, e))?;
        let listener = TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        Ok(Self { listener, config, source, shutdown: Arc::new(AtomicBool::new(false)) })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Raising this flag makes [`Server::run`] return once open
    /// connections have wound down.
    pub fn shutdown_handle(&self) -> Arc<AtomicBool> {
        Arc::clone(&self.shutdown)
    }

    pub fn run(&self) -> io::Result<()> {
        let mut workers = Vec::new();
        while !self.shutdown.load(Ordering::SeqCst) {
            match self.listener.accept() {
                Ok((stream, peer)) => {
                    info!("connection from {peer}");
                    workers.push(self.spawn(stream, peer)?);
                }
                Err(e) if is_transient(&e) => thread::sleep(POLL_INTERVAL),
                Err(e) => return Err(e),
            }
            workers.retain(|w: &thread::JoinHandle<()>| !w.is_finished());
        }
        for w in workers {
            let _ = w.join();
        }
        Ok(())
    }

    fn spawn(&self, stream: TcpStream, peer: SocketAddr) -> io::Result<thread::JoinHandle<()>> {
        stream.set_nonblocking(false)?;
        stream.set_read_timeout(Some(POLL_INTERVAL))?;
        stream.set_nodelay(true)?;
        let writer = stream.try_clone()?;
        let mut device = Device::new(self.config, Arc::clone(&self.source))
            .map_err(|e| io::Error::new(ErrorKind::InvalidInput, e))?;
        let shutdown = Arc::clone(&self.shutdown);
        Ok(thread::spawn(move || {
            match serve_connection(stream, writer, &mut device, &shutdown) {
                Ok(()) => info!("{peer} closed"),
                Err(e) => warn!("{peer}: {e}"),
            }
        }))
    }
}
