// Weighted volumes `int e^{2h} dvol` over catalog charts. A finite value
// makes the drifted Brownian motion recurrent, which is what drives the
// loop-shrinkage argument; divergence is detected by a shell ratio test
// rather than silent truncation.
//
//     cargo run --release --example weighted_volume

use hbrownian::geometry::{Cylinder, EmbeddedManifold, FlatSpace, Sphere, Torus};
use hbrownian::system::Potential;
use hbrownian::volume::{h_volume, HVolume};

fn show(m: &dyn EmbeddedManifold, h: &Potential, label: &str, reference: Option<f64>) {
    let out = match h_volume(m, h, 64) {
        Ok(HVolume::Finite { value }) => format!("{value:.8}"),
        Ok(HVolume::Diverged) => "diverged".to_string(),
        Err(e) => format!("({e})"),
    };
    match reference {
        Some(r) => println!("{label:<46} {out:>14}   (exact {r:.8})"),
        None => println!("{label:<46} {out:>14}"),
    }
}

pub fn main() {
    let pi = std::f64::consts::PI;
    show(
        &Sphere::unit(2),
        &Potential::Zero,
        "unit sphere, h = 0",
        Some(4.0 * pi),
    );
    show(
        &Sphere::unit(1),
        &Potential::Zero,
        "unit circle, h = 0",
        Some(2.0 * pi),
    );
    show(
        &Torus::new(2.0, 0.5, None),
        &Potential::Zero,
        "torus (R = 2, r = 0.5), h = 0",
        Some(4.0 * pi * pi),
    );
    show(
        &FlatSpace::new(2),
        &Potential::Zero,
        "flat plane, h = 0",
        None,
    );
    show(
        &FlatSpace::new(2),
        &Potential::RadialQuadratic { coeff: -1.0 },
        "flat plane, h = -|x|^2/2  (Gaussian weight)",
        Some(pi),
    );
    show(
        &Cylinder::new(1.0),
        &Potential::Zero,
        "cylinder, h = 0",
        None,
    );
    show(
        &Cylinder::new(1.0),
        &Potential::RadialQuadratic { coeff: -1.0 },
        "cylinder, h = -|x|^2/2",
        Some(2.0 * pi * (-1.0f64).exp() * pi.sqrt()),
    );
}
