//! Closed loops evolved by the solution flow under common noise.
//!
//! Every vertex of a discretized loop is advanced by the same Brownian
//! increments — this is a discretization of the flow acting on the loop,
//! not a cloud of independent particles. Chordal polyline length is the
//! running observable: it underestimates geodesic length, and the
//! refinement threshold bounds the gap, so the contractibility test
//! (length below half the injectivity-radius bound) errs on the safe side.
//! On manifolds with a noncontractible class the systole bounds the length
//! from below at all times, which the cylinder experiment makes visible.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{grid_steps, position_step};
use crate::linalg;
use crate::rng::{CounterNoise, NoiseSource};
use crate::system::SdeSystem;

/// Hard cap on vertices inserted by refinement.
const MAX_POINTS: usize = 1 << 20;

/// An ordered closed polyline of on-manifold points. The segment from the
/// last point back to the first is implied.
#[derive(Debug, Clone)]
pub struct LoopState {
    pub points: Vec<Vec<f64>>,
    pub t: f64,
    /// No segment exceeds this after refinement.
    pub refinement_threshold: f64,
}

impl LoopState {
    /// Chordal length including the closing segment.
    pub fn length(&self) -> f64 {
        let n = self.points.len();
        (0..n)
            .map(|i| linalg::dist(&self.points[i], &self.points[(i + 1) % n]))
            .sum()
    }

    pub fn max_segment(&self) -> f64 {
        let n = self.points.len();
        (0..n)
            .map(|i| linalg::dist(&self.points[i], &self.points[(i + 1) % n]))
            .fold(0.0, f64::max)
    }

    /// Inserts projected chord midpoints until no segment exceeds the
    /// threshold. Midpoint projection must move the point by less than half
    /// the threshold, otherwise the refinement could change the homotopy
    /// class and the run is aborted.
    pub fn refine(&mut self, system: &SdeSystem) -> Result<()> {
        for _pass in 0..32 {
            if self.max_segment() <= self.refinement_threshold {
                return Ok(());
            }
            let n = self.points.len();
            let mut refined: Vec<Vec<f64>> = Vec::with_capacity(2 * n);
            for i in 0..n {
                let a = &self.points[i];
                let b = &self.points[(i + 1) % n];
                refined.push(a.clone());
                if linalg::dist(a, b) > self.refinement_threshold {
                    let mid: Vec<f64> =
                        a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
                    let projected = system.manifold.project_point(&mid);
                    let moved = linalg::dist(&projected, &mid);
                    if moved >= 0.5 * self.refinement_threshold {
                        return Err(Error::Integration {
                            t: self.t,
                            reason: format!(
                                "refinement midpoint moved {moved:.3e}, half threshold {:.3e}",
                                0.5 * self.refinement_threshold
                            ),
                        });
                    }
                    refined.push(projected);
                }
            }
            if refined.len() > MAX_POINTS {
                return Err(Error::Integration {
                    t: self.t,
                    reason: format!("loop refinement exceeded {MAX_POINTS} points"),
                });
            }
            self.points = refined;
        }
        Err(Error::Integration {
            t: self.t,
            reason: "loop refinement did not settle".into(),
        })
    }
}

/// Builds a loop from a round circle template (center, radius, coordinate
/// plane), projecting every vertex onto the manifold.
pub fn circle_loop(
    system: &SdeSystem,
    center: &[f64],
    radius: f64,
    axes: (usize, usize),
    n_points: usize,
    threshold: Option<f64>,
) -> Result<LoopState> {
    if n_points < 16 {
        return Err(Error::Config("loops need at least 16 points".into()));
    }
    let manifold = system.manifold.as_ref();
    let m = manifold.ambient_dim();
    if axes.0 >= m || axes.1 >= m || axes.0 == axes.1 {
        return Err(Error::Config("invalid circle plane axes".into()));
    }
    let points: Vec<Vec<f64>> = (0..n_points)
        .map(|k| {
            let angle = std::f64::consts::TAU * k as f64 / n_points as f64;
            let mut p = center.to_vec();
            p[axes.0] += radius * angle.cos();
            p[axes.1] += radius * angle.sin();
            manifold.project_point(&p)
        })
        .collect();
    for p in &points {
        let scale = 1.0 + linalg::norm(p);
        if manifold.constraint_distance(p) > manifold.membership_tolerance() * scale {
            return Err(Error::Config(
                "circle template projects off the manifold".into(),
            ));
        }
    }
    let threshold = match threshold {
        Some(t) => t,
        None => default_threshold(system, &points),
    };
    let mut state = LoopState {
        points,
        t: 0.0,
        refinement_threshold: threshold,
    };
    state.refine(system)?;
    Ok(state)
}

/// Default refinement threshold: a 32nd of the injectivity-radius bound
/// when one exists, otherwise four times the initial mesh.
fn default_threshold(system: &SdeSystem, points: &[Vec<f64>]) -> f64 {
    let inj = system.manifold.injectivity_radius();
    match inj {
        Some(a) if a.is_finite() => a / 32.0,
        _ => {
            let n = points.len();
            let max_seg = (0..n)
                .map(|i| linalg::dist(&points[i], &points[(i + 1) % n]))
                .fold(0.0, f64::max);
            4.0 * max_seg
        }
    }
}

/// True when the loop is short enough that it must be contractible: its
/// length is below half the injectivity-radius bound, so it lies inside a
/// geodesic ball that is a topological chart.
pub fn contractibility_event(loop_state: &LoopState, system: &SdeSystem) -> Result<bool> {
    let a = system
        .manifold
        .injectivity_radius()
        .ok_or_else(|| Error::NotApplicable("no injectivity-radius bound".into()))?;
    Ok(loop_state.length() < 0.5 * a)
}

/// Length and contractibility history of one loop realization.
#[derive(Debug, Clone, Serialize)]
pub struct LoopEvolution {
    pub times: Vec<f64>,
    pub lengths: Vec<f64>,
    pub point_counts: Vec<usize>,
    /// First grid time at which the contractibility event held, if any;
    /// the event is latched.
    pub contractible_at: Option<f64>,
}

/// Evolves every loop vertex under the same noise source, refining after
/// each step and recording on a uniform grid.
pub fn evolve_loop(
    system: &SdeSystem,
    loop0: &LoopState,
    horizon: f64,
    grid: usize,
    noise: &dyn NoiseSource,
) -> Result<(LoopEvolution, LoopState)> {
    let dt = noise.dt();
    let record_steps = grid_steps(horizon, grid, dt);
    let total_steps = *record_steps.last().unwrap();
    let has_inj = system
        .manifold
        .injectivity_radius()
        .map(|a| a.is_finite())
        .unwrap_or(false);

    let mut state = loop0.clone();
    let mut evo = LoopEvolution {
        times: Vec::with_capacity(grid),
        lengths: Vec::with_capacity(grid),
        point_counts: Vec::with_capacity(grid),
        contractible_at: None,
    };
    let mut db = vec![0.0; system.noise_dim()];
    let mut next_record = 0;
    for step_idx in 0..=total_steps {
        if next_record < record_steps.len() && step_idx == record_steps[next_record] {
            evo.times.push(state.t);
            evo.lengths.push(state.length());
            evo.point_counts.push(state.points.len());
            if has_inj
                && evo.contractible_at.is_none()
                && contractibility_event(&state, system)?
            {
                evo.contractible_at = Some(state.t);
            }
            next_record += 1;
        }
        if step_idx == total_steps {
            break;
        }
        noise.fill_increments(step_idx, &mut db);
        for p in state.points.iter_mut() {
            let moved = position_step(system, p, &db, dt);
            if !moved.iter().all(|c| c.is_finite()) {
                return Err(Error::Integration {
                    t: state.t,
                    reason: "loop vertex became non-finite".into(),
                });
            }
            *p = moved;
        }
        state.t += dt;
        state.refine(system)?;
        // Latch the event between grid points too.
        if has_inj && evo.contractible_at.is_none() && contractibility_event(&state, system)? {
            evo.contractible_at = Some(state.t);
        }
    }
    Ok((evo, state))
}

/// Mean length curve with confidence bands and the latched contractibility
/// fraction per time, over independent realizations of the loop flow.
#[derive(Debug, Clone, Serialize)]
pub struct LoopCurve {
    pub times: Vec<f64>,
    pub mean_length: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    /// Fraction of realizations whose loop has triggered the
    /// contractibility event by each time; nondecreasing.
    pub contract_fraction: Vec<f64>,
    /// Smallest length seen over all realizations and grid times.
    pub min_length: f64,
    pub initial_length: f64,
    pub realizations: usize,
}

#[allow(clippy::too_many_arguments)]
pub fn mean_length_curve(
    system: &SdeSystem,
    loop0: &LoopState,
    horizon: f64,
    grid: usize,
    dt: f64,
    n_realizations: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<LoopCurve> {
    let runs = crate::ensemble::run_indexed(n_realizations, workers, |path| {
        let noise = CounterNoise { seed, path, dt };
        evolve_loop(system, loop0, horizon, grid, &noise).map(|(evo, _)| evo)
    })?;
    let times = runs[0].times.clone();
    let mut mean_length = Vec::with_capacity(times.len());
    let mut ci_lo = Vec::with_capacity(times.len());
    let mut ci_hi = Vec::with_capacity(times.len());
    let mut contract_fraction = Vec::with_capacity(times.len());
    let mut min_length = f64::INFINITY;
    for (g, t) in times.iter().enumerate() {
        let lengths: Vec<f64> = runs.iter().map(|r| r.lengths[g]).collect();
        let est = crate::ensemble::mean_ci(&lengths);
        mean_length.push(est.mean);
        ci_lo.push(est.ci_lo);
        ci_hi.push(est.ci_hi);
        min_length = min_length.min(lengths.iter().copied().fold(f64::INFINITY, f64::min));
        let frac = runs
            .iter()
            .filter(|r| r.contractible_at.map(|tc| tc <= *t + 1e-12).unwrap_or(false))
            .count() as f64
            / n_realizations as f64;
        contract_fraction.push(frac);
    }
    Ok(LoopCurve {
        times,
        mean_length,
        ci_lo,
        ci_hi,
        contract_fraction,
        min_length,
        initial_length: loop0.length(),
        realizations: n_realizations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Cylinder, Sphere};
    use crate::rng::NoiseSource;
    use std::sync::Arc;

    struct ZeroNoise {
        dt: f64,
    }

    impl NoiseSource for ZeroNoise {
        fn dt(&self) -> f64 {
            self.dt
        }
        fn fill_increments(&self, _step: usize, out: &mut [f64]) {
            out.fill(0.0);
        }
    }

    fn sphere_system() -> SdeSystem {
        SdeSystem::brownian(Arc::new(Sphere::unit(2))).unwrap()
    }

    #[test]
    fn equator_length_is_two_pi_up_to_discretization() {
        let sys = sphere_system();
        let equator = circle_loop(&sys, &[0.0, 0.0, 0.0], 1.0, (0, 1), 256, None).unwrap();
        let len = equator.length();
        assert!((len - std::f64::consts::TAU).abs() < 1e-3, "{len}");
        assert!(len < std::f64::consts::TAU);
    }

    #[test]
    fn zero_noise_keeps_the_loop_still() {
        let sys = sphere_system();
        let equator = circle_loop(&sys, &[0.0, 0.0, 0.0], 1.0, (0, 1), 64, None).unwrap();
        let noise = ZeroNoise { dt: 1e-2 };
        let (evo, _) = evolve_loop(&sys, &equator, 1.0, 11, &noise).unwrap();
        let l0 = evo.lengths[0];
        for l in &evo.lengths {
            assert!((l - l0).abs() < 1e-9);
        }
        assert!(evo.contractible_at.is_none());
    }

    #[test]
    fn contractibility_thresholds() {
        let sys = sphere_system();
        // A small circle at height z has length ~ 2 pi sqrt(1 - z^2);
        // z = 0.99 gives ~0.886 < pi / 2.
        let small = circle_loop(&sys, &[0.0, 0.0, 0.99], 0.14, (0, 1), 64, None).unwrap();
        assert!(contractibility_event(&small, &sys).unwrap());
        let equator = circle_loop(&sys, &[0.0, 0.0, 0.0], 1.0, (0, 1), 64, None).unwrap();
        assert!(!contractibility_event(&equator, &sys).unwrap());
    }

    #[test]
    fn refinement_keeps_segments_under_threshold() {
        let sys = sphere_system();
        // Deliberately coarse: 16 points on the equator, threshold pi/32.
        let coarse = circle_loop(&sys, &[0.0, 0.0, 0.0], 1.0, (0, 1), 16, None).unwrap();
        assert!(coarse.max_segment() <= coarse.refinement_threshold);
        assert!(coarse.points.len() > 16);
    }

    #[test]
    fn shared_vertices_evolve_identically_under_common_noise() {
        let sys = sphere_system();
        let fine = circle_loop(&sys, &[0.0, 0.0, 0.0], 1.0, (0, 1), 128, None).unwrap();
        let coarse = circle_loop(&sys, &[0.0, 0.0, 0.0], 1.0, (0, 1), 64, None).unwrap();
        let noise = CounterNoise {
            seed: 31,
            path: 0,
            dt: 1e-3,
        };
        let (_, fine_end) = evolve_loop(&sys, &fine, 1.0, 2, &noise).unwrap();
        let (_, coarse_end) = evolve_loop(&sys, &coarse, 1.0, 2, &noise).unwrap();
        // Every second vertex of the fine loop started at a coarse vertex.
        // Refinement may have inserted points; compare by nearest distance.
        let mut worst: f64 = 0.0;
        for p in &coarse_end.points {
            let nearest = fine_end
                .points
                .iter()
                .map(|q| linalg::dist(p, q))
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(nearest);
        }
        assert!(worst < 1e-2, "{worst}");
    }

    #[test]
    fn cylinder_waist_cannot_contract() {
        let sys = SdeSystem::brownian(Arc::new(Cylinder::new(1.0))).unwrap();
        let waist = circle_loop(&sys, &[0.0, 0.0, 0.0], 1.0, (0, 1), 64, None).unwrap();
        let noise = CounterNoise {
            seed: 5,
            path: 2,
            dt: 5e-3,
        };
        let (evo, _) = evolve_loop(&sys, &waist, 1.0, 11, &noise).unwrap();
        for l in &evo.lengths {
            assert!(*l >= std::f64::consts::TAU - 0.05, "{l}");
        }
        assert!(evo.contractible_at.is_none());
    }
}
