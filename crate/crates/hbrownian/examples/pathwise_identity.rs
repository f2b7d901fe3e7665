// The pathwise exponential representation of the derivative-flow norm:
//
//     p log(|v_t| / |v_0|)  =  mart_t - qvar_t / 2 + drift_exp_t
//
// with the martingale, its quadratic variation, and the moment-form drift
// accumulated alongside the integration. The residual of this identity is
// the integrator's self-test. Refining dt with the SAME Brownian path
// (bridge subdivision) shrinks the residual like sqrt(dt) — the scale of
// the martingale Riemann sum's own fluctuation around the continuous
// integral.
//
//     cargo run --release --example pathwise_identity

use std::sync::Arc;

use hbrownian::ensemble::median;
use hbrownian::flow::refinement_residuals;
use hbrownian::geometry::Sphere;
use hbrownian::system::SdeSystem;

pub fn main() {
    let sys = SdeSystem::brownian(Arc::new(Sphere::unit(2))).unwrap();
    let x0 = [0.0, 0.0, 1.0];

    println!("unit sphere, p = 1, horizon 1, 64 paths under common noise:");
    println!("{:>10}  {:>16}  {:>12}", "dt", "median residual", "ratio");
    let ladders = refinement_residuals(&sys, &x0, 1.0, 1.0, 1e-2, 3, 64, 42).unwrap();
    let mut last = f64::NAN;
    for (level, mut residuals) in ladders.into_iter().enumerate() {
        let dt = 1e-2 / (1u32 << level) as f64;
        let med = median(&mut residuals);
        println!(
            "{dt:>10.2e}  {med:>16.5}  {:>12}",
            if last.is_nan() {
                "-".to_string()
            } else {
                format!("{:.3}", med / last)
            }
        );
        last = med;
    }
    println!("\nratios hover around 1/sqrt(2) = 0.707: the residual scales like sqrt(dt)");
}
