//! The board's serial protocol over TCP: start a device backed by a
//! simulated scenario, then talk to it as a client would.
//!
//! ```text
//! cargo run --example serve_device
//! ```

use std::io::{Read, Write};
use std::net::TcpStream;
use std::sync::{Arc, Mutex};
use std::thread;

use marg_fusion::protocol::{
    decode_quaternion_altitude_frame, decode_raw_frame, encode_command, Command, DeviceConfig, LoopingSource, Server,
    QUATERNION_ALTITUDE_FRAME_LEN, RAW_FRAME_LEN,
};
use marg_fusion::sim::{integrate_truth, synthesize, Scenario};

fn main() -> std::io::Result<()> {
    let scenario = Scenario::by_name("long-static").unwrap();
    let samples = synthesize(&integrate_truth(&scenario.trajectory, scenario.rate()), &scenario.model, 0);
    let source = Arc::new(Mutex::new(LoopingSource::new(samples)));
    let server = Server::bind("127.0.0.1:0", DeviceConfig::default(), source)?;
    let addr = server.local_addr()?;
    let stop = server.shutdown_handle();
    let device = thread::spawn(move || server.run());
    println!("device listening on {addr}");

    let mut link = TcpStream::connect(addr)?;
    let mut request = |cmd: Command, reply_len: usize| -> std::io::Result<Vec<u8>> {
        link.write_all(&encode_command(cmd))?;
        let mut reply = vec![0; reply_len];
        link.read_exact(&mut reply)?;
        Ok(reply)
    };

    let version = request(Command::Version, 20)?;
    print!("version: {}", String::from_utf8_lossy(&version));

    let raw = request(Command::RawSamples(1), RAW_FRAME_LEN)?;
    println!("one raw sample (gyro, accel, mag, pressure): {:?}", decode_raw_frame(&raw).unwrap());

    // 200 fused samples is two seconds of filter time at 100 Hz
    let frames = request(Command::QuaternionAltitude(200), 200 * QUATERNION_ALTITUDE_FRAME_LEN)?;
    for (k, frame) in frames.chunks(QUATERNION_ALTITUDE_FRAME_LEN).enumerate().step_by(40) {
        let (q, h) = decode_quaternion_altitude_frame(frame).unwrap();
        let [yaw, pitch, roll] = q.to_euler().to_degrees();
        println!("frame {k:3}: yaw {yaw:6.1}° pitch {pitch:6.1}° roll {roll:6.1}° altitude {h:6.2} m");
    }

    link.write_all(b"#")?;
    let mut err = [0u8; 2];
    link.read_exact(&mut err)?;
    println!("unknown opcode answered with {:?}", String::from_utf8_lossy(&err));

    drop(link);
    stop.store(true, std::sync::atomic::Ordering::SeqCst);
    device.join().unwrap()
}
