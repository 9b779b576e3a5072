//! Byte-level request/response protocol of the simulated board.
//!
//! Requests are one ASCII opcode byte, optionally followed by a count byte:
//!
//! | opcode | command                  | count |
//! |--------|--------------------------|-------|
//! | `v`    | version string           | no    |
//! | `r`    | raw sensor frames        | 1-255 |
//! | `q`    | quaternion frames        | 1-255 |
//! | `z`    | quaternion+altitude      | 1-255 |
//! | `C`    | calibration dump         | no    |
//! | `x`    | reset fusion state       | no    |
//!
//! Replies carry little-endian IEEE-754 `f32` values followed by a line feed.
//! Anything malformed is answered with `?\n` and the connection stays open.

mod server;

pub use server::{
    serve_connection, Device, DeviceConfig, LoopingSource, SampleSource, Server, SharedSource, StationarySource,
};

use thiserror::Error;

use crate::math::Quaternion;
use crate::sample::RawSample;

pub const VERSION_REPLY: &[u8] = b"marg-fusion-kit 1.0\n";
pub const ERROR_REPLY: &[u8] = b"?\n";
pub const TERMINATOR: u8 = b'\n';

pub const QUATERNION_FRAME_LEN: usize = 17;
pub const RAW_FRAME_LEN: usize = 41;
pub const QUATERNION_ALTITUDE_FRAME_LEN: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    Version,
    RawSamples(u8),
    Quaternions(u8),
    QuaternionAltitude(u8),
    CalibrationDump,
    Reset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("empty input")]
    Empty,
    #[error("unknown opcode 0x{0:02X}")]
    UnknownOpcode(u8),
    #[error("opcode 0x{0:02X} is missing its count byte")]
    TruncatedCount(u8),
    #[error("opcode 0x{0:02X} with count 0")]
    ZeroCount(u8),
    #[error("{0} unexpected trailing byte(s)")]
    TrailingBytes(usize),
    #[error("frame is {got} bytes, expected {expected}")]
    FrameLength { expected: usize, got: usize },
    #[error("frame does not end with a line feed")]
    MissingTerminator,
    #[error("frame holds a non-finite value")]
    NonFinite,
}

impl Command {
    pub fn opcode(self) -> u8 {
        match self {
            Command::Version => b'v',
            Command::RawSamples(_) => b'r',
            Command::Quaternions(_) => b'q',
            Command::QuaternionAltitude(_) => b'z',
            Command::CalibrationDump => b'C',
            Command::Reset => b'x',
        }
    }

    pub fn count(self) -> Option<u8> {
        match self {
            Command::RawSamples(n) | Command::Quaternions(n) | Command::QuaternionAltitude(n) => Some(n),
            _ => None,
        }
    }

    /// Every valid command: the three fixed ones plus each counted opcode
    /// with counts 1 through 255.
    pub fn all() -> impl Iterator<Item = Command> {
        let fixed = [Command::Version, Command::CalibrationDump, Command::Reset];
        let counted = (1..=255u8).flat_map(|n| [Command::RawSamples(n), Command::Quaternions(n), Command::QuaternionAltitude(n)]);
        fixed.into_iter().chain(counted)
    }
}

/// Whether `opcode` takes a count byte; `None` for unknown opcodes.
fn takes_count(opcode: u8) -> Option<bool> {
    match opcode {
        b'v' | b'C' | b'x' => Some(false),
        b'r' | b'q' | b'z' => Some(true),
        _ => None,
    }
}

fn build(opcode: u8, count: Option<u8>) -> Result<Command, ProtocolError> {
    Ok(match (opcode, count) {
        (b'v', None) => Command::Version,
        (b'C', None) => Command::CalibrationDump,
        (b'x', None) => Command::Reset,
        (op, Some(0)) => return Err(ProtocolError::ZeroCount(op)),
        (b'r', Some(n)) => Command::RawSamples(n),
        (b'q', Some(n)) => Command::Quaternions(n),
        (b'z', Some(n)) => Command::QuaternionAltitude(n),
        (op, _) => return Err(ProtocolError::UnknownOpcode(op)),
    })
}

pub fn encode_command(cmd: Command) -> Vec<u8> {
    let mut out = vec![cmd.opcode()];
    out.extend(cmd.count());
    out
}

/// Decodes exactly one command occupying all of `bytes`.
pub fn decode_command(bytes: &[u8]) -> Result<Command, ProtocolError> {
    let (&opcode, rest) = bytes.split_first().ok_or(ProtocolError::Empty)?;
    let needs_count = takes_count(opcode).ok_or(ProtocolError::UnknownOpcode(opcode))?;
    let (count, rest) = if needs_count {
        let (&n, rest) = rest.split_first().ok_or(ProtocolError::TruncatedCount(opcode))?;
        (Some(n), rest)
    } else {
        (None, rest)
    };
    if !rest.is_empty() {
        return Err(ProtocolError::TrailingBytes(rest.len()));
    }
    build(opcode, count)
}

/// Incremental request parser for a byte stream.
///
/// Unknown opcodes fail immediately. A counted opcode waits for its count
/// byte, which is consumed even when it is zero.
#[derive(Debug, Clone, Default)]
pub struct CommandDecoder {
    awaiting_count: Option<u8>,
}

impl CommandDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, byte: u8) -> Option<Result<Command, ProtocolError>> {
        if let Some(opcode) = self.awaiting_count.take() {
            return Some(build(opcode, Some(byte)));
        }
        match takes_count(byte) {
            None => Some(Err(ProtocolError::UnknownOpcode(byte))),
            Some(true) => {
                self.awaiting_count = Some(byte);
                None
            }
            Some(false) => Some(build(byte, None)),
        }
    }

    /// True while a counted opcode is waiting for its count byte.
    pub fn is_mid_command(&self) -> bool {
        self.awaiting_count.is_some()
    }
}

fn put_f32s(out: &mut Vec<u8>, values: &[f32]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn read_f32s<const N: usize>(bytes: &[u8], expected_len: usize) -> Result<[f32; N], ProtocolError> {
    if bytes.len() != expected_len {
        return Err(ProtocolError::FrameLength { expected: expected_len, got: bytes.len() });
    }
    if bytes[expected_len - 1] != TERMINATOR {
        return Err(ProtocolError::MissingTerminator);
    }
    let mut out = [0f32; N];
    for (i, chunk) in bytes[..4 * N].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().expect("chunks_exact yields 4 bytes"));
        if !v.is_finite() {
            return Err(ProtocolError::NonFinite);
        }
        out[i] = v;
    }
    Ok(out)
}

fn quaternion_f32(q: Quaternion) -> [f32; 4] {
    q.to_array().map(|c| c as f32)
}

/// `w x y z` as `f32` plus LF: 17 bytes.
pub fn encode_quaternion_frame(q: Quaternion) -> Vec<u8> {
    let mut out = Vec::with_capacity(QUATERNION_FRAME_LEN);
    put_f32s(&mut out, &quaternion_f32(q));
    out.push(TERMINATOR);
    out
}

pub fn decode_quaternion_frame(bytes: &[u8]) -> Result<Quaternion, ProtocolError> {
    let [w, x, y, z] = read_f32s::<4>(bytes, QUATERNION_FRAME_LEN)?;
    Ok(Quaternion::new(w as f64, x as f64, y as f64, z as f64))
}

/// Quaternion, then altitude in metres, as `f32` plus LF: 21 bytes.
pub fn encode_quaternion_altitude_frame(q: Quaternion, altitude: f64) -> Vec<u8> {
    let mut out = Vec::with_capacity(QUATERNION_ALTITUDE_FRAME_LEN);
    put_f32s(&mut out, &quaternion_f32(q));
    put_f32s(&mut out, &[altitude as f32]);
    out.push(TERMINATOR);
    out
}

pub fn decode_quaternion_altitude_frame(bytes: &[u8]) -> Result<(Quaternion, f64), ProtocolError> {
    let [w, x, y, z, h] = read_f32s::<5>(bytes, QUATERNION_ALTITUDE_FRAME_LEN)?;
    Ok((Quaternion::new(w as f64, x as f64, y as f64, z as f64), h as f64))
}

/// `gx gy gz ax ay az mx my mz p` as `f32` plus LF: 41 bytes.
pub fn encode_raw_frame(channels: &[f32; 10]) -> Vec<u8> {
    let mut out = Vec::with_capacity(RAW_FRAME_LEN);
    put_f32s(&mut out, channels);
    out.push(TERMINATOR);
    out
}

pub fn decode_raw_frame(bytes: &[u8]) -> Result<[f32; 10], ProtocolError> {
    read_f32s::<10>(bytes, RAW_FRAME_LEN)
}

/// The ten channels of a sample narrowed to `f32`.
pub fn raw_channels(sample: &RawSample) -> [f32; 10] {
    sample.channels().map(|c| c as f32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_bytes() {
        assert_eq!(encode_command(Command::Version), [0x76]);
        assert_eq!(encode_command(Command::Quaternions(3)), [0x71, 0x03]);
        assert_eq!(encode_command(Command::Reset), [0x78]);
        assert_eq!(encode_command(Command::CalibrationDump), [0x43]);
        assert_eq!(decode_command(&[0x72, 0x05]), Ok(Command::RawSamples(5)));
        assert_eq!(decode_command(&[0xFF]), Err(ProtocolError::UnknownOpcode(0xFF)));
        assert_eq!(decode_command(&[0x7A]), Err(ProtocolError::TruncatedCount(0x7A)));
        assert_eq!(decode_command(&[0x71, 0]), Err(ProtocolError::ZeroCount(0x71)));
        assert_eq!(decode_command(&[0x76, 0x76]), Err(ProtocolError::TrailingBytes(1)));
        assert_eq!(decode_command(&[]), Err(ProtocolError::Empty));
    }

    #[test]
    fn streaming_decoder_matches_one_shot() {
        let mut dec = CommandDecoder::new();
        assert_eq!(dec.push(b'q'), None);
        assert!(dec.is_mid_command());
        assert_eq!(dec.push(2), Some(Ok(Command::Quaternions(2))));
        assert_eq!(dec.push(b'v'), Some(Ok(Command::Version)));
        assert_eq!(dec.push(b'r'), None);
        assert_eq!(dec.push(0), Some(Err(ProtocolError::ZeroCount(b'r'))));
        assert_eq!(dec.push(0), Some(Err(ProtocolError::UnknownOpcode(0))));
    }

    #[test]
    fn identity_quaternion_frame() {
        let bytes = encode_quaternion_frame(Quaternion::IDENTITY);
        let mut expected = vec![0x00, 0x00, 0x80, 0x3F];
        expected.extend([0u8; 12]);
        expected.push(0x0A);
        assert_eq!(bytes, expected);
        assert_eq!(decode_quaternion_frame(&bytes), Ok(Quaternion::IDENTITY));
    }

    #[test]
    fn frame_errors() {
        let mut bytes = encode_quaternion_frame(Quaternion::IDENTITY);
        assert_eq!(decode_quaternion_frame(&bytes[..16]), Err(ProtocolError::FrameLength { expected: 17, got: 16 }));
        bytes[16] = 0;
        assert_eq!(decode_quaternion_frame(&bytes), Err(ProtocolError::MissingTerminator));
        let nan = encode_quaternion_frame(Quaternion::new(f64::NAN, 0.0, 0.0, 0.0));
        assert_eq!(decode_quaternion_frame(&nan), Err(ProtocolError::NonFinite));
    }

    #[test]
    fn altitude_and_raw_frames() {
        let q = Quaternion::new(0.5, -0.5, 0.5, -0.5);
        let bytes = encode_quaternion_altitude_frame(q, 251.25);
        assert_eq!(bytes.len(), QUATERNION_ALTITUDE_FRAME_LEN);
        assert_eq!(&bytes[16..20], &251.25f32.to_le_bytes());
        assert_eq!(decode_quaternion_altitude_frame(&bytes), Ok((q, 251.25)));

        let ch = [0.5f32, -0.25, 0.125, 0.0, 0.0, 1.0, 0.2, 0.0, 0.4, 1013.25];
        let raw = encode_raw_frame(&ch);
        assert_eq!(raw.len(), RAW_FRAME_LEN);
        assert_eq!(*raw.last().unwrap(), b'\n');
        assert_eq!(decode_raw_frame(&raw), Ok(ch));
    }

    #[test]
    fn command_enumeration_size() {
        assert_eq!(Command::all().count(), 3 + 3 * 255);
    }
}
