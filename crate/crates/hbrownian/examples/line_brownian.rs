// Brownian systems on the flat line built from the sine/cosine field pair
// X^1 = sin x, X^2 = cos x. The generator is (1/2) d^2/dx^2 — plain
// Brownian motion — but the derivative flow feels the fields: its moment
// form works out to (p - 1)|v|^2, never negative at p = 1. No Brownian
// system on the line is moment stable; adding a restoring drift
// Z = -rate * x pushes the form down to (p - 1 - 2 rate)|v|^2 and buys
// stability for rate > 0.
//
//     cargo run --release --example line_brownian

use std::sync::Arc;

use hbrownian::ensemble::{estimate_moment, EnsembleOpts};
use hbrownian::functionals::moment_form;
use hbrownian::geometry::FlatSpace;
use hbrownian::system::{Diffusion, ExtraDrift, Potential, SdeSystem};

pub fn main() {
    let opts = EnsembleOpts {
        dt: 1e-3,
        horizon: 4.0,
        grid: 41,
        n_paths: 2048,
        seed: 42,
        ..EnsembleOpts::default()
    };

    let plain = SdeSystem::build(
        Arc::new(FlatSpace::new(1)),
        Potential::Zero,
        Diffusion::SinCos,
        ExtraDrift::None,
    )
    .unwrap();
    for p in [1.0, 2.0, 3.0] {
        let h = moment_form(&plain, &[0.4], &[1.0], p).unwrap();
        println!("moment form at p = {p}: {h:+.4}   (closed form: p - 1)");
    }
    let est = estimate_moment(&plain, &[0.0], 1.0, &opts).unwrap();
    println!(
        "measured exponent, no drift:      {:+.4} +/- {:.4}   (no moment-stable Brownian system on the line)",
        est.fitted.slope, est.fitted.ci_half_width
    );

    let restored = SdeSystem::build(
        Arc::new(FlatSpace::new(1)),
        Potential::Zero,
        Diffusion::SinCos,
        ExtraDrift::LinearRestoring { rate: 0.75 },
    )
    .unwrap();
    let h1 = moment_form(&restored, &[0.4], &[1.0], 1.0).unwrap();
    let est = estimate_moment(&restored, &[0.0], 1.0, &opts).unwrap();
    println!(
        "with restoring drift (rate 0.75): {:+.4} +/- {:.4}   (moment form {h1:+.2}: the drift stabilizes)",
        est.fitted.slope, est.fitted.ci_half_width
    );
}
