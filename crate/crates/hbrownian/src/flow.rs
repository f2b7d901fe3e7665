//! Stratonovich integration of the position/derivative pair along one noise
//! realization, with the pathwise log-moment accumulators.
//!
//! One step advances the position by a Heun predictor-corrector for
//! `dx = X(x) o dB + A(x) dt`, retracts it onto the manifold, advances each
//! tracked derivative vector by the matching covariant increments
//! `nabla X^i(v) dB^i + nabla A(v) dt`, and re-projects it onto the new
//! tangent space (projection stands in for parallel transport at the
//! scheme's order).
//!
//! Along the way the state accumulates the three pieces of the pathwise
//! identity `p log(|v_t| / |v_0|) = mart - qvar / 2 + drift_exp`:
//!
//! * `mart`, the stochastic integral `p sum_i <nabla X^i(v), v>/|v|^2 dB^i`,
//!   and `qvar`, its quadratic variation. Both are advanced with left-point
//!   evaluation: the identity's integral is the Ito one, and a midpoint
//!   evaluation would add a bracket term that does not vanish with the step
//!   size.
//! * `drift_exp`, the absolutely continuous part
//!   `(p/2) int H_p(x)(v, v)/|v|^2 ds`, advanced by the trapezoid rule.
//!
//! The residual of that identity over a trajectory is the integrator's
//! self-test: it must shrink as `dt` does.

use crate::error::{Error, Result};
use crate::functionals::{DirectionalForm, ExtremumMethod};
use crate::linalg;
use crate::rng::NoiseSource;
use crate::system::{Frame, SdeSystem};

/// Step size, cutoff, and which optional integrals to accumulate.
#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    pub dt: f64,
    /// Ambient-norm cutoff standing in for the explosion time. Runs that
    /// trip it are frozen and reported, never dropped.
    pub explosion_radius: f64,
    /// Moment order `p` entering the accumulators.
    pub order: f64,
    /// Accumulate the pointwise growth-rate integrals `int sup_rate` and
    /// `int inf_rate` (needed by the sandwich and positivity estimators;
    /// costs one directional optimization per step).
    pub track_rate_integrals: bool,
    pub extremum_method: ExtremumMethod,
}

impl IntegratorConfig {
    pub fn new(dt: f64, order: f64) -> Self {
        assert!(dt > 0.0, "step size must be positive");
        assert!(order >= 1.0, "moment order must be at least one");
        IntegratorConfig {
            dt,
            explosion_radius: 1e6,
            order,
            track_rate_integrals: false,
            extremum_method: ExtremumMethod::Auto,
        }
    }

    pub fn with_rate_integrals(mut self) -> Self {
        self.track_rate_integrals = true;
        self
    }
}

/// One derivative vector carried along the path with its accumulators.
#[derive(Debug, Clone)]
struct VTrack {
    v: Vec<f64>,
    mart: f64,
    qvar: f64,
    drift_exp: f64,
}

/// Position, derivative vector, and pathwise accumulators at one time.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
    /// Accumulated stochastic part of `d log |v|^p`.
    pub mart: f64,
    /// Quadratic variation of `mart`; nondecreasing.
    pub qvar: f64,
    /// Accumulated `(p/2) H_p(x)(v,v)/|v|^2 ds`.
    pub drift_exp: f64,
    /// Accumulated pointwise upper growth rate `int sup_rate ds`.
    pub sup_rate_int: f64,
    /// Accumulated pointwise lower growth rate `int inf_rate ds`.
    pub inf_rate_int: f64,
    /// False once the explosion cutoff has tripped; the state then freezes.
    pub alive: bool,
}

/// A recorded trajectory on a uniform time grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<FlowState>,
    pub v0_norm: f64,
    /// True if the path tripped the explosion cutoff before the horizon.
    pub censored: bool,
}

/// Internal integration state for one path carrying `k` derivative vectors
/// over common noise.
struct PathCore<'a> {
    system: &'a SdeSystem,
    cfg: &'a IntegratorConfig,
    x: Vec<f64>,
    vs: Vec<VTrack>,
    t: f64,
    sup_rate_int: f64,
    inf_rate_int: f64,
    alive: bool,
    frame: Frame,
    rates: (f64, f64),
}

impl<'a> PathCore<'a> {
    fn new(
        system: &'a SdeSystem,
        cfg: &'a IntegratorConfig,
        x0: Vec<f64>,
        v0s: &[Vec<f64>],
    ) -> Self {
        let frame = system.frame(&x0);
        let rates = point_rates(&frame, cfg);
        PathCore {
            system,
            cfg,
            x: x0,
            vs: v0s
                .iter()
                .map(|v| VTrack {
                    v: v.clone(),
                    mart: 0.0,
                    qvar: 0.0,
                    drift_exp: 0.0,
                })
                .collect(),
            t: 0.0,
            sup_rate_int: 0.0,
            inf_rate_int: 0.0,
            alive: true,
            frame,
            rates,
        }
    }

    /// One Heun step with the given Brownian increments.
    fn step(&mut self, db: &[f64]) -> Result<()> {
        if !self.alive {
            self.t += self.cfg.dt;
            return Ok(());
        }
        let dt = self.cfg.dt;
        let p = self.cfg.order;
        let manifold = self.system.manifold.as_ref();

        // Predictor for the position.
        let diff0 = self.frame.x_diffusion(db);
        let mut x_pred = self.x.clone();
        linalg::axpy(&mut x_pred, 1.0, &diff0);
        linalg::axpy(&mut x_pred, dt, &self.frame.drift);
        let x_pred = manifold.project_point(&x_pred);
        let frame_pred = self.system.frame(&x_pred);

        // Predictor for each derivative vector, and both increment
        // evaluations. Left-point channel data also feeds the accumulators.
        let noise0 = self.frame.channel_noise(db);
        let mut v_news: Vec<Vec<f64>> = Vec::with_capacity(self.vs.len());
        let mut mart_incs: Vec<(f64, f64, f64)> = Vec::with_capacity(self.vs.len());
        for track in &self.vs {
            let c0 = self.frame.to_coords(&track.v);
            let v2 = linalg::dot(&c0, &c0);
            if v2 < 1e-300 {
                return Err(Error::Integration {
                    t: self.t,
                    reason: "derivative vector collapsed to zero".into(),
                });
            }
            let quads0 = self.frame.channel_quads(&c0);
            let mart_inc: f64 = quads0
                .iter()
                .zip(&noise0)
                .map(|(q, w)| p * q * w / v2)
                .sum();
            let qvar_inc: f64 = quads0.iter().map(|q| (p * q / v2) * (p * q / v2) * dt).sum();
            let form0 = self.frame.moment_form_coords(&c0, p) / v2;

            let inc0 = self.frame.v_increment(&c0, db, dt);
            let mut v_pred = track.v.clone();
            linalg::axpy(&mut v_pred, 1.0, &inc0);
            let v_pred = manifold.project_tangent(&x_pred, &v_pred);
            let c_pred = frame_pred.to_coords(&v_pred);
            let inc1 = frame_pred.v_increment(&c_pred, db, dt);

            let mut v_new = track.v.clone();
            linalg::axpy(&mut v_new, 0.5, &inc0);
            linalg::axpy(&mut v_new, 0.5, &inc1);
            v_news.push(v_new);
            mart_incs.push((mart_inc, qvar_inc, form0));
        }

        // Corrector for the position.
        let diff1 = frame_pred.x_diffusion(db);
        let mut x_new = self.x.clone();
        linalg::axpy(&mut x_new, 0.5, &diff0);
        linalg::axpy(&mut x_new, 0.5, &diff1);
        linalg::axpy(&mut x_new, 0.5 * dt, &self.frame.drift);
        linalg::axpy(&mut x_new, 0.5 * dt, &frame_pred.drift);
        let x_new = manifold.project_point(&x_new);
        if !x_new.iter().all(|c| c.is_finite()) {
            return Err(Error::Integration {
                t: self.t,
                reason: "position became non-finite".into(),
            });
        }
        let frame_new = self.system.frame(&x_new);
        let rates_new = point_rates(&frame_new, self.cfg);

        // Commit: project derivative vectors onto the new tangent space and
        // advance the accumulators (trapezoid for the time integrals).
        for (track, (v_new, (mart_inc, qvar_inc, form0))) in self
            .vs
            .iter_mut()
            .zip(v_news.into_iter().zip(mart_incs.into_iter()))
        {
            let v_proj = manifold.project_tangent(&x_new, &v_new);
            if !v_proj.iter().all(|c| c.is_finite()) {
                return Err(Error::Integration {
                    t: self.t,
                    reason: "derivative vector became non-finite".into(),
                });
            }
            let c_new = frame_new.to_coords(&v_proj);
            let v2_new = linalg::dot(&c_new, &c_new);
            if v2_new < 1e-300 {
                return Err(Error::Integration {
                    t: self.t,
                    reason: "derivative vector collapsed to zero".into(),
                });
            }
            let form1 = frame_new.moment_form_coords(&c_new, p) / v2_new;
            track.v = v_proj;
            track.mart += mart_inc;
            track.qvar += qvar_inc;
            track.drift_exp += 0.25 * p * (form0 + form1) * dt;
        }
        self.sup_rate_int += 0.5 * (self.rates.0 + rates_new.0) * dt;
        self.inf_rate_int += 0.5 * (self.rates.1 + rates_new.1) * dt;

        self.t += dt;
        if linalg::norm(&x_new) > self.cfg.explosion_radius {
            self.alive = false;
        }
        self.x = x_new;
        self.frame = frame_new;
        self.rates = rates_new;
        Ok(())
    }

    fn snapshot(&self, which: usize) -> FlowState {
        let track = &self.vs[which];
        FlowState {
            x: self.x.clone(),
            v: track.v.clone(),
            t: self.t,
            mart: track.mart,
            qvar: track.qvar,
            drift_exp: track.drift_exp,
            sup_rate_int: self.sup_rate_int,
            inf_rate_int: self.inf_rate_int,
            alive: self.alive,
        }
    }
}

fn point_rates(frame: &Frame, cfg: &IntegratorConfig) -> (f64, f64) {
    if !cfg.track_rate_integrals {
        return (0.0, 0.0);
    }
    let form = DirectionalForm::from_frame(frame, cfg.order);
    (
        cfg.order * form.sup(cfg.extremum_method),
        cfg.order * form.inf(cfg.extremum_method),
    )
}

/// One Stratonovich step of the full state; the public single-vector entry.
pub fn step(
    system: &SdeSystem,
    state: &FlowState,
    db: &[f64],
    cfg: &IntegratorConfig,
) -> Result<FlowState> {
    let mut core = PathCore::new(system, cfg, state.x.clone(), std::slice::from_ref(&state.v));
    core.t = state.t;
    core.alive = state.alive;
    core.vs[0].mart = state.mart;
    core.vs[0].qvar = state.qvar;
    core.vs[0].drift_exp = state.drift_exp;
    core.sup_rate_int = state.sup_rate_int;
    core.inf_rate_int = state.inf_rate_int;
    core.step(db)?;
    Ok(core.snapshot(0))
}

/// Integrates one path over `ceil(T / dt)` steps, recording on a uniform
/// grid of `n_samples` times (the first is 0, the last is the horizon).
/// Identical `(seed, path)` keys give bit-identical output.
pub fn simulate_path(
    system: &SdeSystem,
    x0: &[f64],
    v0: &[f64],
    horizon: f64,
    n_samples: usize,
    cfg: &IntegratorConfig,
    noise: &dyn NoiseSource,
) -> Result<Trajectory> {
    let x0 = system.manifold.admit_point(x0)?;
    let v0 = system.manifold.admit_tangent(&x0, v0)?;
    let v0_norm = linalg::norm(&v0);
    let record_steps = grid_steps(horizon, n_samples, cfg.dt);
    let total_steps = *record_steps.last().unwrap();

    let mut core = PathCore::new(system, cfg, x0, &[v0]);
    let mut samples = Vec::with_capacity(n_samples);
    let mut db = vec![0.0; system.noise_dim()];
    let mut next_record = 0;
    for step_idx in 0..=total_steps {
        if next_record < record_steps.len() && step_idx == record_steps[next_record] {
            samples.push(core.snapshot(0));
            next_record += 1;
        }
        if step_idx == total_steps {
            break;
        }
        noise.fill_increments(step_idx, &mut db);
        core.step(&db)?;
    }
    Ok(Trajectory {
        censored: !core.alive,
        samples,
        v0_norm,
    })
}

/// Step indices at which the uniform grid times fall.
pub fn grid_steps(horizon: f64, n_samples: usize, dt: f64) -> Vec<usize> {
    assert!(n_samples >= 2, "need at least the endpoints");
    assert!(horizon > 0.0);
    (0..n_samples)
        .map(|i| {
            let t = horizon * i as f64 / (n_samples - 1) as f64;
            (t / dt).round() as usize
        })
        .collect()
}

/// Curves recorded for ensemble estimation: one path, `k` derivative
/// vectors under common noise.
#[derive(Debug, Clone)]
pub struct EnsemblePath {
    /// `[grid][vector]` norms of the derivative vectors.
    pub v_norms: Vec<Vec<f64>>,
    /// `[grid]` accumulated upper growth rate integral.
    pub sup_rate_int: Vec<f64>,
    /// `[grid]` accumulated lower growth rate integral.
    pub inf_rate_int: Vec<f64>,
    pub censored: bool,
}

/// Integrates one path carrying several derivative vectors and records only
/// the ensemble curves.
pub fn simulate_for_ensemble(
    system: &SdeSystem,
    x0: &[f64],
    v0s: &[Vec<f64>],
    horizon: f64,
    n_samples: usize,
    cfg: &IntegratorConfig,
    noise: &dyn NoiseSource,
) -> Result<EnsemblePath> {
    let x0 = system.manifold.admit_point(x0)?;
    let record_steps = grid_steps(horizon, n_samples, cfg.dt);
    let total_steps = *record_steps.last().unwrap();
    let mut core = PathCore::new(system, cfg, x0, v0s);
    let mut out = EnsemblePath {
        v_norms: Vec::with_capacity(n_samples),
        sup_rate_int: Vec::with_capacity(n_samples),
        inf_rate_int: Vec::with_capacity(n_samples),
        censored: false,
    };
    let mut db = vec![0.0; system.noise_dim()];
    let mut next_record = 0;
    for step_idx in 0..=total_steps {
        if next_record < record_steps.len() && step_idx == record_steps[next_record] {
            out.v_norms
                .push(core.vs.iter().map(|tr| linalg::norm(&tr.v)).collect());
            out.sup_rate_int.push(core.sup_rate_int);
            out.inf_rate_int.push(core.inf_rate_int);
            next_record += 1;
        }
        if step_idx == total_steps {
            break;
        }
        noise.fill_increments(step_idx, &mut db);
        core.step(&db)?;
    }
    out.censored = !core.alive;
    Ok(out)
}

/// One Heun step of the position alone, without the derivative flow or any
/// accumulators. The loop experiments and the exponential-functional
/// estimator advance points with this.
pub fn position_step(system: &SdeSystem, x: &[f64], db: &[f64], dt: f64) -> Vec<f64> {
    let manifold = system.manifold.as_ref();
    let drift0 = system.position_drift(x);
    let diff0 = system.position_diffusion(x, db);
    let mut x_pred = x.to_vec();
    linalg::axpy(&mut x_pred, 1.0, &diff0);
    linalg::axpy(&mut x_pred, dt, &drift0);
    let x_pred = manifold.project_point(&x_pred);
    let drift1 = system.position_drift(&x_pred);
    let diff1 = system.position_diffusion(&x_pred, db);
    let mut x_new = x.to_vec();
    linalg::axpy(&mut x_new, 0.5, &diff0);
    linalg::axpy(&mut x_new, 0.5, &diff1);
    linalg::axpy(&mut x_new, 0.5 * dt, &drift0);
    linalg::axpy(&mut x_new, 0.5 * dt, &drift1);
    manifold.project_point(&x_new)
}

/// Pathwise-identity residuals for one ensemble at a ladder of step sizes
/// resolving the same Brownian paths by bridge subdivision.
///
/// Returns one vector of per-path residuals per level; level 0 is `base_dt`
/// and each further level halves it. Initial directions are keyed by path
/// index only, so every level sees identical initial data and noise.
pub fn refinement_residuals(
    system: &SdeSystem,
    x0: &[f64],
    p: f64,
    horizon: f64,
    base_dt: f64,
    levels: u32,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let x0 = system.manifold.admit_point(x0)?;
    let base_steps = (horizon / base_dt).round() as usize;
    let grid = (base_steps + 1).min(65);
    let mut out = vec![Vec::with_capacity(n_paths); levels as usize + 1];
    for path in 0..n_paths as u64 {
        let v0 = crate::geometry::random_unit_tangent(system.manifold.as_ref(), &x0, seed, path);
        let ladder = crate::rng::bridged_noise_levels(
            seed,
            path,
            system.noise_dim(),
            base_dt,
            base_steps,
            levels,
        );
        for (level, noise) in ladder.iter().enumerate() {
            let cfg = IntegratorConfig::new(noise.dt(), p);
            let traj = simulate_path(system, &x0, &v0, horizon, grid, &cfg, noise)?;
            out[level].push(representation_residual(&traj, p));
        }
    }
    Ok(out)
}

/// Largest violation of the pathwise identity
/// `p log(|v_t|/|v_0|) = mart - qvar/2 + drift_exp` over the grid.
///
/// Shrinks as the step size does; the refinement study in the test suite
/// holds the Brownian path fixed while halving `dt`.
pub fn representation_residual(trajectory: &Trajectory, p: f64) -> f64 {
    let v0 = trajectory.v0_norm;
    trajectory
        .samples
        .iter()
        .map(|s| {
            let lhs = p * (linalg::norm(&s.v) / v0).ln();
            let rhs = s.mart - 0.5 * s.qvar + s.drift_exp;
            (lhs - rhs).abs()
        })
        .fold(0.0, f64::max)
}
