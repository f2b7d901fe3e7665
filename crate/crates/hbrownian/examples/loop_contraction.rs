// Loops carried by the solution flow under common noise.
//
// On the sphere the derivative flow is moment stable, so the expected loop
// length decays exponentially and loops eventually become short enough to
// lie in a single geodesic ball — the contractibility event. On the
// cylinder the waist loop is in a nontrivial homotopy class: the flow is a
// homeomorphism, so the length can never drop below the systole and the
// event never fires. That contrast is the topological content of moment
// stability made visible.
//
//     cargo run --release --example loop_contraction

use std::sync::Arc;

use hbrownian::geometry::{Cylinder, Sphere};
use hbrownian::loops::{circle_loop, mean_length_curve};
use hbrownian::system::SdeSystem;

pub fn main() {
    let realizations = 64;
    let dt = 5e-3;

    let sphere = SdeSystem::brownian(Arc::new(Sphere::unit(2))).unwrap();
    let equator = circle_loop(&sphere, &[0.0, 0.0, 0.0], 1.0, (0, 1), 256, None).unwrap();
    println!(
        "sphere equator: {} points, length {:.4}, contract below {:.4}",
        equator.points.len(),
        equator.length(),
        0.5 * std::f64::consts::PI
    );
    let curve = mean_length_curve(&sphere, &equator, 8.0, 17, dt, realizations, 42, None).unwrap();
    println!("{:>6} {:>14} {:>22}", "t", "E length", "contractible fraction");
    for (i, t) in curve.times.iter().enumerate().step_by(2) {
        println!(
            "{t:>6.1} {:>14.4} {:>22.3}",
            curve.mean_length[i], curve.contract_fraction[i]
        );
    }

    let cylinder = SdeSystem::brownian(Arc::new(Cylinder::new(1.0))).unwrap();
    let waist = circle_loop(&cylinder, &[0.0, 0.0, 0.0], 1.0, (0, 1), 256, None).unwrap();
    let curve = mean_length_curve(&cylinder, &waist, 3.0, 7, dt, realizations, 42, None).unwrap();
    println!(
        "\ncylinder waist: systole 2 pi = {:.4}; smallest length over {} realizations and all times: {:.4}",
        std::f64::consts::TAU,
        realizations,
        curve.min_length
    );
    println!(
        "contractible fraction at t = 3: {:.3} (stays zero: the class is nontrivial)",
        curve.contract_fraction.last().unwrap()
    );
}
