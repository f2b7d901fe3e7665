// The two-sided exponential sandwich around the derivative-flow moment:
//
//     E e^{(1/2) int lower_rate}  <=  E |T_x F_t|^p  <=  n E e^{(1/2) int upper_rate}
//
// with the rates the inf/sup of the moment form over unit tangents along
// the path. On the unit sphere both rates are the constant p(p-2), so at
// p = 1, t = 2 the bounds are exp(-1) and 2 exp(-1) in closed form, and
// the measured moment must land in between. On the ellipsoid the rates
// genuinely vary along paths and the inequality itself is the oracle.
//
//     cargo run --release --example sandwich_bounds

use std::sync::Arc;

use hbrownian::ensemble::{sandwich_check, EnsembleOpts};
use hbrownian::geometry::{Ellipsoid, Sphere};
use hbrownian::system::SdeSystem;

pub fn main() {
    let opts = EnsembleOpts {
        dt: 1e-3,
        n_paths: 2048,
        seed: 42,
        ..EnsembleOpts::default()
    };

    let sphere = SdeSystem::brownian(Arc::new(Sphere::unit(2))).unwrap();
    let res = sandwich_check(&sphere, &[0.0, 0.0, 1.0], 1.0, 2.0, &opts).unwrap();
    println!("unit sphere, p = 1, t = 2 (closed-form bounds 0.3679 / 0.7358):");
    println!(
        "  lower {:.4}   moment {:.4} [{:.4}, {:.4}]   upper {:.4}   -> {}",
        res.lower.mean,
        res.middle.mean,
        res.middle.ci_lo,
        res.middle.ci_hi,
        res.upper.mean,
        if res.pass { "bracketed" } else { "VIOLATED" }
    );

    let ellipsoid = SdeSystem::brownian(Arc::new(Ellipsoid::new(1.0, 1.0, 1.5))).unwrap();
    let res = sandwich_check(&ellipsoid, &[0.0, 0.0, 1.5], 2.0, 1.0, &opts).unwrap();
    println!("ellipsoid (1, 1, 1.5), p = 2, t = 1:");
    println!(
        "  lower {:.4}   moment {:.4} [{:.4}, {:.4}]   upper {:.4}   -> {} (censored {}/{})",
        res.lower.mean,
        res.middle.mean,
        res.middle.ci_lo,
        res.middle.ci_hi,
        res.upper.mean,
        if res.pass { "bracketed" } else { "VIOLATED" },
        res.n_censored,
        res.n_paths,
    );
    assert!(res.pass);
}
