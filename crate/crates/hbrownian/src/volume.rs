//! Weighted-volume quadrature over catalog charts: `int_M e^{2h} dvol`.
//!
//! Compact chart axes are integrated by Gauss-Legendre with node doubling
//! until the value settles; unbounded axes are handled by nested dyadic
//! truncations with a ratio test on successive shells, so divergence is
//! detected rather than silently truncated.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{AxisDomain, Chart, EmbeddedManifold};
use crate::system::Potential;

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub enum HVolume {
    Finite { value: f64 },
    Diverged,
}

const REL_TOL: f64 = 1e-9;
const MAX_SHELLS: u32 = 12;

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on the
/// Legendre recurrence.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-based initial guess for the i-th root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..64 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Tensor Gauss-Legendre integral of `f` over the product of intervals.
fn tensor_integral(
    chart: &Chart,
    f: &dyn Fn(&[f64]) -> f64,
    bounds: &[(f64, f64)],
    nodes_per_axis: usize,
) -> f64 {
    let (nodes, weights) = gauss_legendre(nodes_per_axis);
    let dim = bounds.len();
    let mut total = 0.0;
    let mut idx = vec![0usize; dim];
    let mut point = vec![0.0; dim];
    'outer: loop {
        let mut w = 1.0;
        for d in 0..dim {
            let (lo, hi) = bounds[d];
            let half = 0.5 * (hi - lo);
            point[d] = lo + half * (nodes[idx[d]] + 1.0);
            w *= half * weights[idx[d]];
        }
        total += w * f(&point) * (chart.volume_element)(&point);
        // odometer increment
        for d in 0..dim {
            idx[d] += 1;
            if idx[d] < nodes_per_axis {
                continue 'outer;
            }
            idx[d] = 0;
        }
        break;
    }
    total
}

/// Integral over the given truncation of the chart domain, with node
/// doubling until two successive refinements agree.
fn converged_integral(
    chart: &Chart,
    f: &dyn Fn(&[f64]) -> f64,
    bounds: &[(f64, f64)],
    base_nodes: usize,
) -> f64 {
    let mut nodes = base_nodes.max(16);
    let mut last = tensor_integral(chart, f, bounds, nodes);
    for _ in 0..4 {
        nodes *= 2;
        let next = tensor_integral(chart, f, bounds, nodes);
        if (next - last).abs() <= REL_TOL * (1.0 + next.abs()) {
            return next;
        }
        last = next;
    }
    last
}

/// The weighted volume `int e^{2 h} dvol` over the manifold's chart.
///
/// `resolution` is the base Gauss-Legendre node count per axis. Entries
/// without a chart are reported as not applicable.
pub fn h_volume(
    manifold: &dyn EmbeddedManifold,
    potential: &Potential,
    resolution: usize,
) -> Result<HVolume> {
    let chart = manifold.chart().ok_or_else(|| {
        Error::NotApplicable(format!("{} carries no quadrature chart", manifold.name()))
    })?;
    let weight = |params: &[f64]| -> f64 {
        let x = (chart.map)(params);
        (2.0 * potential.value(&x)).exp()
    };

    let unbounded: Vec<usize> = chart
        .axes
        .iter()
        .enumerate()
        .filter_map(|(i, a)| matches!(a, AxisDomain::Line).then_some(i))
        .collect();

    let fixed_bounds = |truncation: f64| -> Vec<(f64, f64)> {
        chart
            .axes
            .iter()
            .map(|a| match a {
                AxisDomain::Interval(lo, hi) => (*lo, *hi),
                AxisDomain::Line => (-truncation, truncation),
            })
            .collect()
    };

    if unbounded.is_empty() {
        let bounds = fixed_bounds(0.0);
        let value = converged_integral(&chart, &weight, &bounds, resolution);
        return Ok(HVolume::Finite { value });
    }

    // Nested dyadic truncations with a shell ratio test.
    let mut prev_total = converged_integral(&chart, &weight, &fixed_bounds(1.0), resolution);
    let mut prev_shell: Option<f64> = None;
    for k in 1..=MAX_SHELLS {
        let radius = (1u64 << k) as f64;
        let total = converged_integral(&chart, &weight, &fixed_bounds(radius), resolution);
        let shell = total - prev_total;
        if shell.abs() <= REL_TOL * (1.0 + total.abs()) {
            return Ok(HVolume::Finite { value: total });
        }
        if let Some(last_shell) = prev_shell {
            if shell >= last_shell {
                return Ok(HVolume::Diverged);
            }
        }
        prev_shell = Some(shell);
        prev_total = total;
    }
    // Shells still shrinking but not settled at the largest truncation:
    // report divergence rather than an unconverged number.
    Ok(HVolume::Diverged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Cylinder, Ellipsoid, FlatSpace, Sphere, Torus};

    fn finite(m: &dyn EmbeddedManifold, h: &Potential) -> f64 {
        match h_volume(m, h, 32).unwrap() {
            HVolume::Finite { value } => value,
            HVolume::Diverged => panic!("unexpected divergence"),
        }
    }

    #[test]
    fn sphere_area_is_four_pi() {
        let s = Sphere::unit(2);
        let v = finite(&s, &Potential::Zero);
        assert!((v - 4.0 * std::f64::consts::PI).abs() < 1e-6, "{v}");
    }

    #[test]
    fn circle_length_is_two_pi() {
        let s = Sphere::unit(1);
        let v = finite(&s, &Potential::Zero);
        assert!((v - std::f64::consts::TAU).abs() < 1e-9);
    }

    #[test]
    fn flat_plane_diverges_without_weight() {
        let f = FlatSpace::new(2);
        assert_eq!(h_volume(&f, &Potential::Zero, 32).unwrap(), HVolume::Diverged);
    }

    #[test]
    fn gaussian_weight_integrates_to_pi() {
        // h = -|x|^2 / 2 so e^{2h} = e^{-|x|^2}.
        let f = FlatSpace::new(2);
        let v = finite(&f, &Potential::RadialQuadratic { coeff: -1.0 });
        assert!((v - std::f64::consts::PI).abs() < 1e-6, "{v}");
    }

    #[test]
    fn cylinder_needs_a_confining_weight() {
        let c = Cylinder::new(1.0);
        assert_eq!(h_volume(&c, &Potential::Zero, 32).unwrap(), HVolume::Diverged);
        let v = finite(&c, &Potential::RadialQuadratic { coeff: -1.0 });
        // int e^{-(1 + z^2)} over theta in [0, 2pi), z in R, area element 1:
        // 2 pi e^{-1} sqrt(pi).
        let exact = std::f64::consts::TAU * (-1.0_f64).exp() * std::f64::consts::PI.sqrt();
        assert!((v - exact).abs() < 1e-6 * exact, "{v} vs {exact}");
    }

    #[test]
    fn torus_area_closed_form() {
        let t = Torus::new(2.0, 0.5, None);
        let v = finite(&t, &Potential::Zero);
        let exact = 4.0 * std::f64::consts::PI * std::f64::consts::PI * 2.0 * 0.5;
        assert!((v - exact).abs() < 1e-6 * exact, "{v}");
    }

    #[test]
    fn ellipsoid_sphere_limit() {
        let e = Ellipsoid::new(1.0, 1.0, 1.0);
        let v = finite(&e, &Potential::Zero);
        assert!((v - 4.0 * std::f64::consts::PI).abs() < 1e-6);
    }

    #[test]
    fn three_sphere_has_no_chart() {
        let s = Sphere::unit(3);
        assert!(matches!(
            h_volume(&s, &Potential::Zero, 32),
            Err(Error::NotApplicable(_))
        ));
    }
}
