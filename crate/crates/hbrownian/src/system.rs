//! The SDE under study: a manifold, a drift potential, and diffusion fields.
//!
//! The default diffusion is the projection family `X^i(x) = P(x) e_i` of the
//! embedding, which drives Brownian motion on the manifold; together with a
//! gradient drift it forms a gradient h-Brownian system. A custom pair of
//! sine/cosine fields on the flat line is included as the canonical
//! non-gradient Brownian system, and a linear restoring field is available
//! as a non-gradient drift on flat space.
//!
//! [`SdeSystem::frame`] bundles everything the integrator and the curvature
//! functionals need at one point: an orthonormal tangent basis, the total
//! drift and its derivative, and one "noise channel" per independent noise
//! direction carrying the symmetric matrix that both drives the derivative
//! flow and enters the moment form.


use crate::error::{Error, Result};
use crate::geometry::ManifoldRef;
use crate::linalg;

/// Built-in drift potentials given through ambient extensions with exact
/// gradients and (constant) Hessians.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Zero,
    /// `H(x) = scale * x[axis]`
    Height { scale: f64, axis: usize },
    /// `H(x) = coeff * |x|^2 / 2`
    RadialQuadratic { coeff: f64 },
    Sum(Vec<Potential>),
}

impl Potential {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Height { scale, axis } => scale * x[*axis],
            Potential::RadialQuadratic { coeff } => 0.5 * coeff * linalg::dot(x, x),
            Potential::Sum(terms) => terms.iter().map(|t| t.value(x)).sum(),
        }
    }

    pub fn ambient_gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Potential::Zero => vec![0.0; x.len()],
            Potential::Height { scale, axis } => {
                let mut g = vec![0.0; x.len()];
                g[*axis] = *scale;
                g
            }
            Potential::RadialQuadratic { coeff } => linalg::scale(x, *coeff),
            Potential::Sum(terms) => {
                let mut g = vec![0.0; x.len()];
                for t in terms {
                    let tg = t.ambient_gradient(x);
                    linalg::axpy(&mut g, 1.0, &tg);
                }
                g
            }
        }
    }

    /// `u^T Hess(H) v`; constant in `x` for every built-in family.
    pub fn ambient_hessian_quad(&self, u: &[f64], v: &[f64]) -> f64 {
        match self {
            Potential::Zero | Potential::Height { .. } => 0.0,
            Potential::RadialQuadratic { coeff } => coeff * linalg::dot(u, v),
            Potential::Sum(terms) => terms.iter().map(|t| t.ambient_hessian_quad(u, v)).sum(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Potential::Zero => true,
            Potential::Sum(terms) => terms.iter().all(|t| t.is_zero()),
            _ => false,
        }
    }
}

/// Optional non-gradient drift; only supported on flat space, where the
/// covariant derivative is the ordinary one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtraDrift {
    None,
    /// `Z(x) = -rate * x`
    LinearRestoring { rate: f64 },
}

impl ExtraDrift {
    fn value(&self, x: &[f64]) -> Vec<f64> {
        match self {
            ExtraDrift::None => vec![0.0; x.len()],
            ExtraDrift::LinearRestoring { rate } => linalg::scale(x, -rate),
        }
    }

    fn derivative_quad(&self, u: &[f64], v: &[f64]) -> f64 {
        match self {
            ExtraDrift::None => 0.0,
            ExtraDrift::LinearRestoring { rate } => -rate * linalg::dot(u, v),
        }
    }
}

/// Diffusion fields of the system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Diffusion {
    /// `X(x) e = P(x) e`: the gradient Brownian fields of the embedding.
    Projection,
    /// `X^1 = sin x, X^2 = cos x` on the flat line; the classical
    /// non-gradient Brownian system in one dimension.
    SinCos,
}

/// One independent noise direction together with the symmetric matrix (in
/// tangent-basis coordinates) describing how the derivative flow responds
/// to it. For projection diffusion there is one channel per unit normal
/// carrying the shape operator; for the sine/cosine fields one per field.
#[derive(Debug, Clone)]
pub struct NoiseChannel {
    /// Ambient direction whose inner product with `dB` scales this channel.
    pub direction: Vec<f64>,
    /// Symmetric `n x n` matrix, row-major, in tangent-basis coordinates.
    pub shape: Vec<f64>,
}

/// Everything the integrator and the moment form need at one point.
pub struct Frame {
    pub x: Vec<f64>,
    /// Orthonormal tangent basis (ambient vectors).
    pub basis: Vec<Vec<f64>>,
    /// Orthonormal normal frame (ambient vectors).
    pub normals: Vec<Vec<f64>>,
    /// Total ambient drift `A(x) = grad h + Z`.
    pub drift: Vec<f64>,
    /// Derivative of the drift as a matrix in basis coordinates:
    /// `<nabla A (e_k), e_j>` at `[j][k]`; the covariant Hessian of `h`
    /// plus the extra-drift derivative.
    pub drift_deriv: Vec<f64>,
    pub channels: Vec<NoiseChannel>,
    /// Quadratic part of the moment form excluding its order-dependent
    /// term: `-Ric + 2 sym(nabla A) + sum_i (nabla X^i)^T (nabla X^i)`,
    /// plus the second-derivative field terms for custom diffusion.
    pub moment_quad: Vec<f64>,
    /// Number of independent Brownian components `m`.
    pub noise_dim: usize,
    diffusion: Diffusion,
}

impl Frame {
    pub fn n(&self) -> usize {
        self.basis.len()
    }

    pub fn to_coords(&self, ambient: &[f64]) -> Vec<f64> {
        self.basis.iter().map(|e| linalg::dot(e, ambient)).collect()
    }

    pub fn from_coords(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.x.len()];
        for (c, e) in coords.iter().zip(&self.basis) {
            linalg::axpy(&mut out, *c, e);
        }
        out
    }

    /// `X(x) dB` in ambient coordinates.
    pub fn x_diffusion(&self, db: &[f64]) -> Vec<f64> {
        match self.diffusion {
            Diffusion::Projection => {
                let mut out = db.to_vec();
                for nu in &self.normals {
                    let c = linalg::dot(db, nu);
                    linalg::axpy(&mut out, -c, nu);
                }
                out
            }
            Diffusion::SinCos => {
                let x = self.x[0];
                vec![x.sin() * db[0] + x.cos() * db[1]]
            }
        }
    }

    /// Quadratic form of each channel at `coords`: `v^T S_f v`.
    pub fn channel_quads(&self, coords: &[f64]) -> Vec<f64> {
        self.channels
            .iter()
            .map(|ch| quad_flat(&ch.shape, coords))
            .collect()
    }

    /// Noise coefficient of each channel: `<direction_f, dB>`.
    pub fn channel_noise(&self, db: &[f64]) -> Vec<f64> {
        self.channels
            .iter()
            .map(|ch| linalg::dot(&ch.direction, db))
            .collect()
    }

    /// Full ambient increment of the derivative vector over one step:
    /// the covariant channel response `sum_i nabla X^i(v) dB^i + nabla A(v) dt`
    /// plus, for projection diffusion, the normal production terms
    /// `sum_f <S_f v, dB> nu_f` and `sum_f <S_f v, A> nu_f dt` coming from
    /// the derivative of the projector. The production keeps the vector
    /// aligned with the moving tangent space, so the subsequent projection
    /// is cleanup rather than dynamics; dropping it would bleed norm at a
    /// rate of order one.
    pub fn v_increment(&self, coords: &[f64], db: &[f64], dt: f64) -> Vec<f64> {
        let n = self.n();
        let m = self.x.len();
        let produce_normal = self.diffusion == Diffusion::Projection;
        let mut out = vec![0.0; m];
        let mut shaped = vec![0.0; n];
        for ch in &self.channels {
            shaped.fill(0.0);
            matvec_flat_acc(&ch.shape, coords, 1.0, &mut shaped);
            let w = linalg::dot(&ch.direction, db);
            // tangential response w_f * (S_f v)
            let mut u = vec![0.0; m];
            for (s, e) in shaped.iter().zip(&self.basis) {
                linalg::axpy(&mut u, *s, e);
            }
            linalg::axpy(&mut out, w, &u);
            if produce_normal {
                let normal_rate = linalg::dot(&u, db) + dt * linalg::dot(&u, &self.drift);
                linalg::axpy(&mut out, normal_rate, &ch.direction);
            }
        }
        // covariant drift nabla A(v) dt
        let mut dd = vec![0.0; n];
        matvec_flat_acc(&self.drift_deriv, coords, dt, &mut dd);
        for (s, e) in dd.iter().zip(&self.basis) {
            linalg::axpy(&mut out, *s, e);
        }
        out
    }

    /// The moment form `H_p(x)(v, v)` for `v` given in basis coordinates.
    ///
    /// 2-homogeneous in `v`; the order enters only through the
    /// `(p - 2) |alpha(v, v)|^2 / |v|^2` style term.
    pub fn moment_form_coords(&self, coords: &[f64], p: f64) -> f64 {
        let v2 = linalg::dot(coords, coords);
        let quad = quad_flat(&self.moment_quad, coords);
        let diag: f64 = self
            .channels
            .iter()
            .map(|ch| {
                let q = quad_flat(&ch.shape, coords);
                q * q
            })
            .sum();
        quad + (p - 2.0) * diag / v2
    }
}

fn quad_flat(m: &[f64], v: &[f64]) -> f64 {
    let n = v.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += m[i * n + j] * v[j];
        }
        acc += v[i] * row;
    }
    acc
}

fn matvec_flat_acc(m: &[f64], v: &[f64], scale: f64, out: &mut [f64]) {
    let n = v.len();
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += m[i * n + j] * v[j];
        }
        out[i] += scale * row;
    }
}

/// A manifold paired with drift and diffusion: the equation being simulated.
#[derive(Clone)]
pub struct SdeSystem {
    pub manifold: ManifoldRef,
    pub potential: Potential,
    pub diffusion: Diffusion,
    pub extra_drift: ExtraDrift,
}

impl SdeSystem {
    pub fn new(manifold: ManifoldRef, potential: Potential) -> Result<Self> {
        SdeSystem::build(manifold, potential, Diffusion::Projection, ExtraDrift::None)
    }

    pub fn brownian(manifold: ManifoldRef) -> Result<Self> {
        SdeSystem::new(manifold, Potential::Zero)
    }

    pub fn build(
        manifold: ManifoldRef,
        potential: Potential,
        diffusion: Diffusion,
        extra_drift: ExtraDrift,
    ) -> Result<Self> {
        let flat = manifold.ambient_dim() == manifold.intrinsic_dim();
        if diffusion == Diffusion::SinCos && (!flat || manifold.intrinsic_dim() != 1) {
            return Err(Error::Config(
                "sine/cosine diffusion is defined on the flat line only".into(),
            ));
        }
        if extra_drift != ExtraDrift::None && !flat {
            return Err(Error::Config(
                "non-gradient drift is supported on flat space only".into(),
            ));
        }
        if let Potential::Height { axis, .. } = potential {
            if axis >= manifold.ambient_dim() {
                return Err(Error::Config(format!(
                    "height axis {axis} out of range for ambient dimension {}",
                    manifold.ambient_dim()
                )));
            }
        }
        Ok(SdeSystem {
            manifold,
            potential,
            diffusion,
            extra_drift,
        })
    }

    pub fn noise_dim(&self) -> usize {
        match self.diffusion {
            Diffusion::Projection => self.manifold.ambient_dim(),
            Diffusion::SinCos => 2,
        }
    }

    /// True for gradient h-Brownian systems (projection diffusion, gradient
    /// drift), where the closed-form moment form applies.
    pub fn is_gradient(&self) -> bool {
        self.diffusion == Diffusion::Projection && self.extra_drift == ExtraDrift::None
    }

    /// Intrinsic gradient and covariant Hessian of the drift potential at
    /// `x`: the gradient as an ambient tangent vector, the Hessian as a
    /// symmetric matrix over the returned orthonormal tangent basis. The
    /// Hessian corrects the ambient one by the second fundamental form.
    pub fn gradient_and_hessian(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let x = self.manifold.admit_point(x)?;
        let basis = self.manifold.tangent_basis(&x);
        let n = basis.len();
        let ambient_grad = self.potential.ambient_gradient(&x);
        let grad = self.manifold.project_tangent(&x, &ambient_grad);
        let mut hess = linalg::zeros_mat(n);
        for j in 0..n {
            for k in j..n {
                let alpha = self.manifold.second_fundamental(&x, &basis[j], &basis[k]);
                let val = self.potential.ambient_hessian_quad(&basis[j], &basis[k])
                    + linalg::dot(&ambient_grad, &alpha);
                hess[j][k] = val;
                hess[k][j] = val;
            }
        }
        Ok((grad, hess, basis))
    }

    /// Total ambient drift at `x`, without assembling a full frame. Used by
    /// the loop experiments, which advance positions only.
    pub fn position_drift(&self, x: &[f64]) -> Vec<f64> {
        let ambient_grad = self.potential.ambient_gradient(x);
        let mut drift = match self.diffusion {
            Diffusion::Projection => self.manifold.project_tangent(x, &ambient_grad),
            Diffusion::SinCos => ambient_grad,
        };
        let extra = self.extra_drift.value(x);
        linalg::axpy(&mut drift, 1.0, &extra);
        drift
    }

    /// Diffusion increment `X(x) dB` at `x`, without a full frame.
    pub fn position_diffusion(&self, x: &[f64], db: &[f64]) -> Vec<f64> {
        match self.diffusion {
            Diffusion::Projection => {
                let mut out = db.to_vec();
                for nu in self.manifold.normal_frame(x) {
                    let c = linalg::dot(db, &nu);
                    linalg::axpy(&mut out, -c, &nu);
                }
                out
            }
            Diffusion::SinCos => {
                let pos = x[0];
                vec![pos.sin() * db[0] + pos.cos() * db[1]]
            }
        }
    }

    /// Assembles the per-point bundle. The caller guarantees `x` lies on the
    /// manifold; the integrator retracts every step, so no gate is applied
    /// here.
    pub fn frame(&self, x: &[f64]) -> Frame {
        match self.diffusion {
            Diffusion::Projection => self.projection_frame(x),
            Diffusion::SinCos => self.sincos_frame(x),
        }
    }

    fn projection_frame(&self, x: &[f64]) -> Frame {
        let manifold = self.manifold.as_ref();
        let m = manifold.ambient_dim();
        let normals = manifold.normal_frame(x);
        let basis = manifold.tangent_basis(x);
        let n = basis.len();

        // alpha over the basis, shared by the shape matrices and the
        // Hessian correction.
        let mut alphas: Vec<Vec<f64>> = Vec::with_capacity(n * (n + 1) / 2);
        for j in 0..n {
            for k in j..n {
                alphas.push(manifold.second_fundamental(x, &basis[j], &basis[k]));
            }
        }
        let pair_index = |j: usize, k: usize| -> usize {
            let (a, b) = if j <= k { (j, k) } else { (k, j) };
            a * n - a * (a + 1) / 2 + b
        };

        let ambient_grad = self.potential.ambient_gradient(x);
        let mut drift = manifold.project_tangent(x, &ambient_grad);
        let extra = self.extra_drift.value(x);
        linalg::axpy(&mut drift, 1.0, &extra);

        let mut drift_deriv = vec![0.0; n * n];
        for j in 0..n {
            for k in 0..n {
                let alpha = &alphas[pair_index(j, k)];
                drift_deriv[j * n + k] = self.potential.ambient_hessian_quad(&basis[j], &basis[k])
                    + linalg::dot(&ambient_grad, alpha)
                    + self.extra_drift.derivative_quad(&basis[j], &basis[k]);
            }
        }

        let channels: Vec<NoiseChannel> = normals
            .iter()
            .map(|nu| {
                let mut shape = vec![0.0; n * n];
                for j in 0..n {
                    for k in 0..n {
                        shape[j * n + k] = linalg::dot(&alphas[pair_index(j, k)], nu);
                    }
                }
                NoiseChannel {
                    direction: nu.clone(),
                    shape,
                }
            })
            .collect();

        // -Ric + 2 sym(drift_deriv) + sum_f S_f^2
        let mut moment_quad = vec![0.0; n * n];
        for j in 0..n {
            for k in 0..n {
                let ric = manifold.ricci(x, &basis[j], &basis[k]);
                let sym_dd = drift_deriv[j * n + k] + drift_deriv[k * n + j];
                let mut s2 = 0.0;
                for ch in &channels {
                    for l in 0..n {
                        s2 += ch.shape[j * n + l] * ch.shape[l * n + k];
                    }
                }
                moment_quad[j * n + k] = -ric + sym_dd + s2;
            }
        }

        Frame {
            x: x.to_vec(),
            basis,
            normals,
            drift,
            drift_deriv,
            channels,
            moment_quad,
            noise_dim: m,
            diffusion: Diffusion::Projection,
        }
    }

    fn sincos_frame(&self, x: &[f64]) -> Frame {
        let pos = x[0];
        let (s, c) = pos.sin_cos();
        let ambient_grad = self.potential.ambient_gradient(x);
        let mut drift = ambient_grad.clone();
        let extra = self.extra_drift.value(x);
        linalg::axpy(&mut drift, 1.0, &extra);
        let e = vec![1.0];
        let dd = self.potential.ambient_hessian_quad(&e, &e)
            + self.extra_drift.derivative_quad(&e, &e);
        // Fields X^1 = sin, X^2 = cos with derivatives cos, -sin and second
        // derivatives -sin, -cos. The general moment form collects
        //   2 <nabla A v, v> + sum_i <DD X^i (X^i, v), v>
        //   + sum_i <D X^i (D X^i v), v> + sum_i |D X^i v|^2,
        // which here is 2 dd + (-s^2 - c^2) + (c^2 + s^2) + (c^2 + s^2).
        let moment_quad = vec![2.0 * dd - (s * s + c * c) + 2.0 * (c * c + s * s)];
        Frame {
            x: x.to_vec(),
            basis: vec![vec![1.0]],
            normals: Vec::new(),
            drift,
            drift_deriv: vec![dd],
            channels: vec![
                NoiseChannel {
                    direction: vec![1.0, 0.0],
                    shape: vec![c],
                },
                NoiseChannel {
                    direction: vec![0.0, 1.0],
                    shape: vec![-s],
                },
            ],
            moment_quad,
            noise_dim: 2,
            diffusion: Diffusion::SinCos,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{FlatSpace, Sphere};
    use std::sync::Arc;

    fn unit_sphere_system() -> SdeSystem {
        SdeSystem::brownian(Arc::new(Sphere::unit(2))).unwrap()
    }

    #[test]
    fn zero_potential_has_zero_gradient_and_hessian() {
        let sys = unit_sphere_system();
        let (grad, hess, _) = sys.gradient_and_hessian(&[0.0, 0.0, 1.0]).unwrap();
        assert!(linalg::norm(&grad) < 1e-15);
        assert!(hess.iter().flatten().all(|h| h.abs() < 1e-15));
    }

    #[test]
    fn flat_quadratic_hessian_is_the_ambient_one() {
        let sys = SdeSystem::new(
            Arc::new(FlatSpace::new(2)),
            Potential::RadialQuadratic { coeff: -1.0 },
        )
        .unwrap();
        let (_, hess, _) = sys.gradient_and_hessian(&[0.4, -0.3]).unwrap();
        assert!((hess[0][0] + 1.0).abs() < 1e-15);
        assert!((hess[1][1] + 1.0).abs() < 1e-15);
        assert!(hess[0][1].abs() < 1e-15);
    }

    #[test]
    fn height_hessian_on_sphere_is_minus_metric_at_pole() {
        // At the north pole the gradient of the height potential vanishes
        // and the curvature correction contributes -<u, v>.
        let sys = SdeSystem::new(
            Arc::new(Sphere::unit(2)),
            Potential::Height {
                scale: 1.0,
                axis: 2,
            },
        )
        .unwrap();
        let (grad, hess, _) = sys.gradient_and_hessian(&[0.0, 0.0, 1.0]).unwrap();
        assert!(linalg::norm(&grad) < 1e-15);
        assert!((hess[0][0] + 1.0).abs() < 1e-12);
        assert!((hess[1][1] + 1.0).abs() < 1e-12);
        assert!(hess[0][1].abs() < 1e-12);
    }

    #[test]
    fn sphere_moment_form_is_order_minus_dimension() {
        let sys = unit_sphere_system();
        let frame = sys.frame(&[0.0, 0.0, 1.0]);
        for p in [1.0, 2.0, 3.5] {
            let h = frame.moment_form_coords(&[1.0, 0.0], p);
            assert!((h - (p - 2.0)).abs() < 1e-12, "p = {p}: {h}");
        }
    }

    #[test]
    fn circle_moment_form_is_order_minus_one() {
        let sys = SdeSystem::brownian(Arc::new(Sphere::unit(1))).unwrap();
        let frame = sys.frame(&[1.0, 0.0]);
        for p in [1.0, 2.0, 4.0] {
            let h = frame.moment_form_coords(&[1.0], p);
            assert!((h - (p - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn sincos_fields_match_circle_immersion_form() {
        // The sine/cosine fields on the line are the circle immersion in
        // disguise, so the moment form must agree with the circle's.
        let sys = SdeSystem::build(
            Arc::new(FlatSpace::new(1)),
            Potential::Zero,
            Diffusion::SinCos,
            ExtraDrift::None,
        )
        .unwrap();
        for x in [0.0, 0.7, -2.3] {
            let frame = sys.frame(&[x]);
            for p in [1.0, 2.0, 3.0] {
                let h = frame.moment_form_coords(&[1.0], p);
                assert!((h - (p - 1.0)).abs() < 1e-12, "x = {x}, p = {p}");
            }
        }
    }

    #[test]
    fn restoring_drift_shifts_the_form_down() {
        let sys = SdeSystem::build(
            Arc::new(FlatSpace::new(1)),
            Potential::Zero,
            Diffusion::SinCos,
            ExtraDrift::LinearRestoring { rate: 0.75 },
        )
        .unwrap();
        let frame = sys.frame(&[0.3]);
        let h1 = frame.moment_form_coords(&[1.0], 1.0);
        assert!((h1 - (-2.0 * 0.75)).abs() < 1e-12);
    }

    #[test]
    fn sincos_rejects_higher_dimensions() {
        let err = SdeSystem::build(
            Arc::new(FlatSpace::new(2)),
            Potential::Zero,
            Diffusion::SinCos,
            ExtraDrift::None,
        );
        assert!(err.is_err());
    }

    #[test]
    fn frame_coordinates_round_trip() {
        let sys = unit_sphere_system();
        let x = [0.6, 0.0, 0.8];
        let frame = sys.frame(&x);
        let v = sys.manifold.project_tangent(&x, &[0.1, -0.7, 0.4]);
        let coords = frame.to_coords(&v);
        let back = frame.from_coords(&coords);
        assert!(linalg::dist(&v, &back) < 1e-14);
    }
}
