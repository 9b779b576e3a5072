use std::io::{Read, Write};
use std::net::TcpStream;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use marg_fusion::protocol::{DeviceConfig, Server, StationarySource};

fn start() -> (String, Arc<std::sync::atomic::AtomicBool>, thread::JoinHandle<()>) {
    let server = Server::bind("127.0.0.1:0", DeviceConfig::default(), Arc::new(Mutex::new(StationarySource::new(100.0))))
        .unwrap();
    let addr = server.local_addr().unwrap().to_string();
    let stop = server.shutdown_handle();
    let handle = thread::spawn(move || server.run().unwrap());
    (addr, stop, handle)
}

fn exchange(addr: &str, request: &[u8], reply_len: usize) -> Vec<u8> {
    let mut s = TcpStream::connect(addr).unwrap();
    s.set_read_timeout(Some(Duration::from_secs(10))).unwrap();
    s.write_all(request).unwrap();
    let mut reply = vec![0u8; reply_len];
    s.read_exact(&mut reply).unwrap();
    reply
}

/// Frame bytes written out by hand: f32 little-endian 1.0 is 00 00 80 3F.
fn identity_frame() -> Vec<u8> {
    let mut f = vec![0x00, 0x00, 0x80, 0x3F];
    f.extend([0u8; 12]);
    f.push(b'\n');
    f
}

#[test]
fn golden_version_and_quaternion_transcript() {
    let (addr, stop, handle) = start();
    let mut expected = b"marg-fusion-kit 1.0\n".to_vec();
    expected.extend(identity_frame());
    expected.extend(identity_frame());
    let mut with_altitude = identity_frame();
    with_altitude.pop();
    with_altitude.extend([0u8; 4]);
    with_altitude.push(b'\n');
    expected.extend(&with_altitude);
    expected.extend(b"?\n");

    let reply = exchange(&addr, &[b'v', b'q', 2, b'z', 1, b'Q'], expected.len());
    assert_eq!(reply, expected);
    stop.store(true, std::sync::atomic::Ordering::SeqCst);
    handle.join().unwrap();
}

#[test]
fn concurrent_connections_get_complete_streams() {
    let (addr, stop, handle) = start();
    let clients: Vec<_> = (0..8)
        .map(|_| {
            let addr = addr.clone();
            thread::spawn(move || {
                let mut reply = exchange(&addr, &[b'q', 200, b'r', 50, b'v'], 200 * 17 + 50 * 41 + 20);
                let version = reply.split_off(200 * 17 + 50 * 41);
                assert_eq!(version, b"marg-fusion-kit 1.0\n");
                for frame in reply[..200 * 17].chunks(17) {
                    assert_eq!(frame, identity_frame());
                }
                for frame in reply[200 * 17..].chunks(41) {
                    // az = 1 g at index 5 of the ten channels
                    assert_eq!(&frame[4 * 5..4 * 6], &1.0f32.to_le_bytes());
                    assert_eq!(frame[40], b'\n');
                }
            })
        })
        .collect();
    for c in clients {
        c.join().unwrap();
    }
    stop.store(true, std::sync::atomic::Ordering::SeqCst);
    handle.join().unwrap();
}
