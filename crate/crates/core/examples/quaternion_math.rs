//! Attitude math: Euler angles, quaternions and rotating vectors between
//! the body and earth (NED) frames.
//!
//! ```text
//! cargo run --example quaternion_math
//! ```

use marg_fusion::math::{angular_distance, EulerAngles, Quaternion, Vec3};

fn main() {
    let attitude = Quaternion::from_euler(EulerAngles::from_degrees(30.0, 10.0, -20.0));
    let [w, x, y, z] = attitude.to_array();
    println!("yaw 30°, pitch 10°, roll -20° → q = ({w:.6}, {x:.6}, {y:.6}, {z:.6})");

    let [yaw, pitch, roll] = attitude.to_euler().to_degrees();
    println!("and back: yaw {yaw:.6}°, pitch {pitch:.6}°, roll {roll:.6}°");

    // a level accelerometer reads +1 g on z; tilted, gravity shows up on the other axes
    let gravity_in_body = attitude.rotate_inverse(Vec3::new(0.0, 0.0, 1.0));
    println!("gravity seen by the board: {:.4?} g", gravity_in_body.to_array());

    let nose = attitude.rotate(Vec3::new(1.0, 0.0, 0.0));
    println!("the board's x axis points at {:.4?} (north, east, down)", nose.to_array());

    let a_bit_more = Quaternion::from_axis_angle(Vec3::new(0.0, 0.0, 1.0), 5f64.to_radians()).unwrap() * attitude;
    println!("turning 5° further about down: {:.3}° apart", angular_distance(attitude, a_bit_more).to_degrees());
}
