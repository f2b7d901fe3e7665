//! Implicit surfaces `{g = 0}` with geometry derived from the defining
//! function: normal from the gradient, second fundamental form from the
//! Hessian, Ricci from the Gauss equation, and a Newton retraction along
//! the gradient. The torus is the named built-in constraint.

use super::{ricci_from_alpha, AxisDomain, Chart, EmbeddedManifold};
use crate::linalg;

/// Newton iteration along `grad g` toward `{g = 0}`, capped at 20 steps.
pub fn newton_project(w: &[f64], g: impl Fn(&[f64]) -> f64, grad: impl Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
    let mut x = w.to_vec();
    for _ in 0..20 {
        let gv = g(&x);
        let gr = grad(&x);
        let gg = linalg::dot(&gr, &gr);
        if gg < 1e-300 {
            break;
        }
        if gv.abs() / gg.sqrt() < 1e-14 {
            break;
        }
        linalg::axpy(&mut x, -gv / gg, &gr);
    }
    x
}

/// Torus of revolution about the z-axis:
/// `(sqrt(x^2 + y^2) - R)^2 + z^2 = r^2`.
///
/// An injectivity-radius bound must be supplied by the caller when the loop
/// experiments are to run on it; the geometry itself does not need one.
#[derive(Debug, Clone)]
pub struct Torus {
    major: f64,
    minor: f64,
    injectivity: Option<f64>,
}

impl Torus {
    pub fn new(major: f64, minor: f64, injectivity: Option<f64>) -> Self {
        assert!(major > minor && minor > 0.0, "torus needs R > r > 0");
        Torus {
            major,
            minor,
            injectivity,
        }
    }

    fn g(&self, x: &[f64]) -> f64 {
        let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
        (rho - self.major).powi(2) + x[2] * x[2] - self.minor * self.minor
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let rho = (x[0] * x[0] + x[1] * x[1]).sqrt().max(1e-300);
        let f = 2.0 * (rho - self.major) / rho;
        vec![f * x[0], f * x[1], 2.0 * x[2]]
    }

    fn hess_quad(&self, x: &[f64], u: &[f64], v: &[f64]) -> f64 {
        let rho2 = x[0] * x[0] + x[1] * x[1];
        let rho = rho2.sqrt().max(1e-300);
        let rho3 = rho * rho2.max(1e-300);
        // Hess entries of (rho - R)^2 + z^2
        let hxx = 2.0 * (1.0 - self.major / rho) + 2.0 * self.major * x[0] * x[0] / rho3;
        let hyy = 2.0 * (1.0 - self.major / rho) + 2.0 * self.major * x[1] * x[1] / rho3;
        let hxy = 2.0 * self.major * x[0] * x[1] / rho3;
        hxx * u[0] * v[0] + hyy * u[1] * v[1] + hxy * (u[0] * v[1] + u[1] * v[0])
            + 2.0 * u[2] * v[2]
    }
}

impl EmbeddedManifold for Torus {
    fn name(&self) -> String {
        format!("torus(major={}, minor={})", self.major, self.minor)
    }

    fn intrinsic_dim(&self) -> usize {
        2
    }

    fn ambient_dim(&self) -> usize {
        3
    }

    fn constraint_distance(&self, x: &[f64]) -> f64 {
        let grad_norm = linalg::norm(&self.grad(x));
        if grad_norm < 1e-12 {
            1.0
        } else {
            self.g(x).abs() / grad_norm
        }
    }

    fn project_point(&self, w: &[f64]) -> Vec<f64> {
        newton_project(w, |x| self.g(x), |x| self.grad(x))
    }

    fn normal_frame(&self, x: &[f64]) -> Vec<Vec<f64>> {
        vec![linalg::normalize(&self.grad(x)).expect("torus gradient vanishes only on the core circle")]
    }

    fn second_fundamental(&self, x: &[f64], u: &[f64], v: &[f64]) -> Vec<f64> {
        let grad = self.grad(x);
        let grad_norm = linalg::norm(&grad);
        linalg::scale(&grad, -self.hess_quad(x, u, v) / (grad_norm * grad_norm))
    }

    fn ricci(&self, x: &[f64], u: &[f64], v: &[f64]) -> f64 {
        ricci_from_alpha(self, x, u, v)
    }

    fn injectivity_radius(&self) -> Option<f64> {
        self.injectivity
    }

    fn diameter_bound(&self) -> Option<f64> {
        Some(2.0 * (self.major + self.minor))
    }

    fn chart(&self) -> Option<Chart> {
        let (big, small) = (self.major, self.minor);
        Some(Chart {
            axes: vec![
                AxisDomain::Interval(0.0, std::f64::consts::TAU),
                AxisDomain::Interval(0.0, std::f64::consts::TAU),
            ],
            map: Box::new(move |p| {
                let (u, v) = (p[0], p[1]);
                let ring = big + small * v.cos();
                vec![ring * u.cos(), ring * u.sin(), small * v.sin()]
            }),
            volume_element: Box::new(move |p| small * (big + small * p[1].cos())),
        })
    }
}
