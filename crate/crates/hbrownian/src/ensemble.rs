//! Path ensembles: moment estimates, exponential functionals, the two-sided
//! sandwich check, decay-rate fits, and the merge machinery that keeps all
//! of it schedule-independent.
//!
//! Per-path results are computed in parallel, keyed by path index, and
//! collected into a [`PathBatch`] — an ordered map whose merge is disjoint
//! union. All statistics are folded out of the batch in ascending path
//! order, so merging partial batches in any grouping reproduces the
//! single-worker numbers bit for bit.
//!
//! Censored paths (explosion cutoff) contribute their frozen values and are
//! counted; estimates with more than 1% censoring are flagged unreliable
//! rather than silently cleaned up.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{self, EnsemblePath, IntegratorConfig};
use crate::functionals::{self, ExtremumMethod};
use crate::linalg;
use crate::rng::{self, CounterNoise, NoiseSource, Stream};
use crate::system::SdeSystem;

/// Confidence level used everywhere: 95% normal approximation.
const CI_Z: f64 = 1.959_963_984_540_054;

/// Censoring fraction above which a result is flagged unreliable.
const CENSOR_FLAG_FRACTION: f64 = 0.01;

/// Sample kurtosis above which confidence intervals are flagged dubious.
const HEAVY_TAIL_KURTOSIS: f64 = 100.0;

// ---------------------------------------------------------------------------
// Ensemble options and parallel driver
// ---------------------------------------------------------------------------

/// Knobs shared by all ensemble estimators.
#[derive(Debug, Clone)]
pub struct EnsembleOpts {
    pub dt: f64,
    pub horizon: f64,
    /// Number of grid times including both endpoints.
    pub grid: usize,
    pub n_paths: usize,
    pub seed: u64,
    /// Worker threads; `None` uses the process default pool.
    pub workers: Option<usize>,
    /// Also evolve a fixed orthonormal frame and report the frame maximum
    /// (an operator-norm surrogate, within `sqrt(n)` of it).
    pub frame_sup: bool,
    /// Scale applied to the initial unit direction; moments scale by its
    /// p-th power exactly.
    pub v0_scale: f64,
    /// Trailing fraction of the grid used for the exponent fit.
    pub fit_window: f64,
    pub explosion_radius: f64,
    pub extremum_method: ExtremumMethod,
}

impl Default for EnsembleOpts {
    fn default() -> Self {
        EnsembleOpts {
            dt: 1e-3,
            horizon: 4.0,
            grid: 81,
            n_paths: 4096,
            seed: 42,
            workers: None,
            frame_sup: false,
            v0_scale: 1.0,
            fit_window: 0.5,
            explosion_radius: 1e6,
            extremum_method: ExtremumMethod::Auto,
        }
    }
}

impl EnsembleOpts {
    pub fn grid_times(&self) -> Vec<f64> {
        (0..self.grid)
            .map(|i| self.horizon * i as f64 / (self.grid - 1) as f64)
            .collect()
    }

    fn integrator(&self, order: f64, track_rates: bool) -> IntegratorConfig {
        let mut cfg = IntegratorConfig::new(self.dt, order);
        cfg.explosion_radius = self.explosion_radius;
        cfg.track_rate_integrals = track_rates;
        cfg.extremum_method = self.extremum_method;
        cfg
    }
}

/// Runs `f` over path indices in parallel, preserving index order in the
/// output regardless of scheduling.
pub fn run_indexed<T, F>(n: usize, workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let collect = |f: &F| -> Result<Vec<T>> {
        let results: Vec<Result<T>> = (0..n as u64).into_par_iter().map(f).collect();
        results.into_iter().collect()
    };
    match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
            pool.install(|| collect(&f))
        }
        None => collect(&f),
    }
}

// ---------------------------------------------------------------------------
// Mergeable batches
// ---------------------------------------------------------------------------

/// Per-path results keyed by global path index. Merging is disjoint union,
/// hence associative and commutative with bit-identical finalization.
#[derive(Debug, Clone, Default)]
pub struct PathBatch<T> {
    entries: BTreeMap<u64, T>,
}

impl<T> PathBatch<T> {
    pub fn new() -> Self {
        PathBatch {
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, path: u64, value: T) -> Result<()> {
        if self.entries.insert(path, value).is_some() {
            return Err(Error::Estimation(format!(
                "duplicate path index {path} in batch merge"
            )));
        }
        Ok(())
    }

    pub fn merge(mut self, other: Self) -> Result<Self> {
        for (k, v) in other.entries {
            self.insert(k, v)?;
        }
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Values in ascending path order.
    pub fn ordered(&self) -> impl Iterator<Item = &T> {
        self.entries.values()
    }

    pub fn from_results(results: Vec<T>) -> Self {
        PathBatch {
            entries: results
                .into_iter()
                .enumerate()
                .map(|(i, r)| (i as u64, r))
                .collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Statistics helpers
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EstimateCi {
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

pub fn mean_ci(values: &[f64]) -> EstimateCi {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let half = CI_Z * (var / n).sqrt();
    EstimateCi {
        mean,
        ci_lo: mean - half,
        ci_hi: mean + half,
    }
}

fn kurtosis(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    if m2 <= 0.0 {
        0.0
    } else {
        m4 / (m2 * m2)
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Least-squares exponent fit on the trailing window of a positive curve.
#[derive(Debug, Clone, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    /// 95% half-width of the slope from the regression.
    pub ci_half_width: f64,
    pub intercept: f64,
    /// First time included in the fit window.
    pub window_start: f64,
    pub points: usize,
}

/// Fits `log y = intercept + slope t` over the trailing `window_fraction`
/// of the grid. The infinite-time growth rate is not computable; this
/// windowed regression with its confidence interval is the estimator used
/// throughout.
pub fn fit_exponent(times: &[f64], values: &[f64], window_fraction: f64) -> Result<ExponentFit> {
    if times.len() != values.len() || times.is_empty() {
        return Err(Error::Estimation("mismatched or empty fit input".into()));
    }
    if !values.iter().all(|v| *v > 0.0) {
        return Err(Error::Estimation(
            "exponent fit requires strictly positive values".into(),
        ));
    }
    let t_end = *times.last().unwrap();
    let t_cut = t_end * (1.0 - window_fraction.clamp(0.0, 1.0)) - 1e-12;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (t, v) in times.iter().zip(values) {
        if *t >= t_cut {
            xs.push(*t);
            ys.push(v.ln());
        }
    }
    if xs.len() < 4 {
        return Err(Error::Estimation(format!(
            "fit window holds {} points; need at least 4",
            xs.len()
        )));
    }
    let (slope, intercept, stderr) = linalg::ols_line(&xs, &ys);
    Ok(ExponentFit {
        slope,
        ci_half_width: CI_Z * stderr,
        intercept,
        window_start: xs[0],
        points: xs.len(),
    })
}

// ---------------------------------------------------------------------------
// Moment estimation
// ---------------------------------------------------------------------------

/// Ensemble estimate of `E |v_t|^p` over a time grid, with the fitted
/// exponent of its trailing decay or growth.
#[derive(Debug, Clone, Serialize)]
pub struct MomentEstimate {
    pub order: f64,
    pub times: Vec<f64>,
    pub mean_vp: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    /// Frame-maximum curve when requested: `E max_j |v_t(e_j)|^p` over a
    /// fixed orthonormal frame under common noise. Bounds the operator norm
    /// within a factor `sqrt(n)^p`.
    pub frame_sup: Option<FrameSupCurve>,
    pub n_paths: usize,
    pub n_censored: usize,
    pub fitted: ExponentFit,
    pub heavy_tail_warning: bool,
    pub unreliable_censoring: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameSupCurve {
    pub mean: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    pub fitted: ExponentFit,
}

fn unit_tangent_for_path(system: &SdeSystem, x0: &[f64], seed: u64, path: u64) -> Vec<f64> {
    let m = system.manifold.ambient_dim();
    for attempt in 0..16u64 {
        let w: Vec<f64> = (0..m)
            .map(|c| rng::normal(seed, Stream::InitialDirection, path, attempt, c as u64))
            .collect();
        let t = system.manifold.project_tangent(x0, &w);
        if let Some(u) = linalg::normalize(&t) {
            if linalg::norm(&t) > 1e-8 {
                return u;
            }
        }
    }
    panic!("failed to draw an initial direction at {x0:?}");
}

/// Runs the ensemble and stores per-path curves in a mergeable batch.
pub fn moment_batch(
    system: &SdeSystem,
    x0: &[f64],
    p: f64,
    opts: &EnsembleOpts,
) -> Result<PathBatch<EnsemblePath>> {
    moment_batch_range(system, x0, p, opts, 0, opts.n_paths as u64)
}

/// Same as [`moment_batch`] but for a half-open range of global path
/// indices; used to exercise merge associativity.
pub fn moment_batch_range(
    system: &SdeSystem,
    x0: &[f64],
    p: f64,
    opts: &EnsembleOpts,
    start: u64,
    end: u64,
) -> Result<PathBatch<EnsemblePath>> {
    let x0 = system.manifold.admit_point(x0)?;
    let cfg = opts.integrator(p, false);
    let frame_basis = if opts.frame_sup {
        system.manifold.tangent_basis(&x0)
    } else {
        Vec::new()
    };
    let results = run_indexed((end - start) as usize, opts.workers, |offset| {
        let path = start + offset;
        let mut v0s = vec![linalg::scale(
            &unit_tangent_for_path(system, &x0, opts.seed, path),
            opts.v0_scale,
        )];
        v0s.extend(frame_basis.iter().cloned());
        let noise = CounterNoise {
            seed: opts.seed,
            path,
            dt: opts.dt,
        };
        flow::simulate_for_ensemble(system, &x0, &v0s, opts.horizon, opts.grid, &cfg, &noise)
    })?;
    let mut batch = PathBatch::new();
    for (offset, r) in results.into_iter().enumerate() {
        batch.insert(start + offset as u64, r)?;
    }
    Ok(batch)
}

/// Folds a batch into the moment estimate. Deterministic: paths are
/// consumed in ascending index order.
pub fn finalize_moment(
    batch: &PathBatch<EnsemblePath>,
    p: f64,
    opts: &EnsembleOpts,
) -> Result<MomentEstimate> {
    if batch.is_empty() {
        return Err(Error::EmptySample);
    }
    let times = opts.grid_times();
    let n_grid = times.len();
    let n_paths = batch.len();
    let n_censored = batch.ordered().filter(|r| r.censored).count();
    if n_censored == n_paths {
        return Err(Error::Estimation("every path tripped the cutoff".into()));
    }

    let mut mean_vp = Vec::with_capacity(n_grid);
    let mut ci_lo = Vec::with_capacity(n_grid);
    let mut ci_hi = Vec::with_capacity(n_grid);
    let mut frame_mean = Vec::with_capacity(n_grid);
    let mut frame_lo = Vec::with_capacity(n_grid);
    let mut frame_hi = Vec::with_capacity(n_grid);
    let has_frame = batch.ordered().next().map(|r| r.v_norms[0].len() > 1) == Some(true);
    let mut terminal: Vec<f64> = Vec::with_capacity(n_paths);
    for g in 0..n_grid {
        let values: Vec<f64> = batch.ordered().map(|r| r.v_norms[g][0].powf(p)).collect();
        let est = mean_ci(&values);
        mean_vp.push(est.mean);
        ci_lo.push(est.ci_lo);
        ci_hi.push(est.ci_hi);
        if g == n_grid - 1 {
            terminal = values;
        }
        if has_frame {
            let fvalues: Vec<f64> = batch
                .ordered()
                .map(|r| {
                    r.v_norms[g][1..]
                        .iter()
                        .map(|v| v.powf(p))
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            let est = mean_ci(&fvalues);
            frame_mean.push(est.mean);
            frame_lo.push(est.ci_lo);
            frame_hi.push(est.ci_hi);
        }
    }

    let fitted = fit_exponent(&times, &mean_vp, opts.fit_window)?;
    let frame_sup = if has_frame {
        Some(FrameSupCurve {
            fitted: fit_exponent(&times, &frame_mean, opts.fit_window)?,
            mean: frame_mean,
            ci_lo: frame_lo,
            ci_hi: frame_hi,
        })
    } else {
        None
    };
    Ok(MomentEstimate {
        order: p,
        times,
        mean_vp,
        ci_lo,
        ci_hi,
        frame_sup,
        n_paths,
        n_censored,
        fitted,
        heavy_tail_warning: kurtosis(&terminal) > HEAVY_TAIL_KURTOSIS,
        unreliable_censoring: n_censored as f64 > CENSOR_FLAG_FRACTION * n_paths as f64,
    })
}

/// Ensemble mean of `|v_t|^p` with initial directions drawn uniformly on
/// the unit tangent sphere at `x0`, plus the fitted moment exponent.
pub fn estimate_moment(
    system: &SdeSystem,
    x0: &[f64],
    p: f64,
    opts: &EnsembleOpts,
) -> Result<MomentEstimate> {
    if opts.n_paths < 2 {
        return Err(Error::Estimation("need at least two paths".into()));
    }
    let batch = moment_batch(system, x0, p, opts)?;
    finalize_moment(&batch, p, opts)
}

// ---------------------------------------------------------------------------
// Exponential functionals of the position marginal
// ---------------------------------------------------------------------------

/// Pointwise functional whose path integral enters an exponential moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointFunctional {
    /// `sup_{|v|=1} p H_p(x)(v,v)` — the upper growth rate.
    UpperRate { p: f64 },
    /// `inf_{|v|=1} p H_p(x)(v,v)` — the lower growth rate.
    LowerRate { p: f64 },
    /// Negated upper rate; its stochastic positivity is the stability
    /// criterion.
    NegUpperRate { p: f64 },
    /// The Ricci-drift gap entering the non-explosion criterion.
    RicciDriftGap,
    /// A constant, for calibration.
    Const(f64),
}

impl PointFunctional {
    pub fn eval(&self, system: &SdeSystem, x: &[f64], method: ExtremumMethod) -> Result<f64> {
        match self {
            PointFunctional::UpperRate { p } => functionals::moment_form_sup(system, x, *p, method),
            PointFunctional::LowerRate { p } => functionals::moment_form_inf(system, x, *p, method),
            PointFunctional::NegUpperRate { p } => {
                Ok(-functionals::moment_form_sup(system, x, *p, method)?)
            }
            PointFunctional::RicciDriftGap => functionals::ricci_drift_gap(system, x),
            PointFunctional::Const(c) => Ok(*c),
        }
    }

    pub fn label(&self) -> String {
        match self {
            PointFunctional::UpperRate { p } => format!("upper_rate(p={p})"),
            PointFunctional::LowerRate { p } => format!("lower_rate(p={p})"),
            PointFunctional::NegUpperRate { p } => format!("neg_upper_rate(p={p})"),
            PointFunctional::RicciDriftGap => "ricci_drift_gap".into(),
            PointFunctional::Const(c) => format!("const({c})"),
        }
    }
}

/// Per-time estimates of `E exp(sign * int_0^t f(x_s) ds)` along the
/// position marginal (no derivative flow involved).
#[derive(Debug, Clone, Serialize)]
pub struct ExpFunctionalEstimate {
    pub functional: String,
    pub sign: f64,
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    pub fitted: ExponentFit,
    pub n_paths: usize,
    pub n_censored: usize,
    /// Paths whose exponent overflowed, reported with the first offending
    /// time.
    pub overflow_times: Vec<f64>,
}

/// Integrates `f` along position paths by the trapezoid rule and returns
/// the per-grid integral curve.
fn functional_integral_path(
    system: &SdeSystem,
    x0: &[f64],
    f: &PointFunctional,
    opts: &EnsembleOpts,
    path: u64,
) -> Result<(Vec<f64>, bool)> {
    let record_steps = flow::grid_steps(opts.horizon, opts.grid, opts.dt);
    let total_steps = *record_steps.last().unwrap();
    let noise = CounterNoise {
        seed: opts.seed,
        path,
        dt: opts.dt,
    };
    let mut db = vec![0.0; system.noise_dim()];
    let mut x = x0.to_vec();
    let mut f_cur = f.eval(system, &x, opts.extremum_method)?;
    let mut integral = 0.0;
    let mut curve = Vec::with_capacity(opts.grid);
    let mut censored = false;
    let mut next_record = 0;
    for step_idx in 0..=total_steps {
        if next_record < record_steps.len() && step_idx == record_steps[next_record] {
            curve.push(integral);
            next_record += 1;
        }
        if step_idx == total_steps {
            break;
        }
        if censored {
            continue;
        }
        noise.fill_increments(step_idx, &mut db);
        let x_new = flow::position_step(system, &x, &db, opts.dt);
        if !x_new.iter().all(|c| c.is_finite()) {
            return Err(Error::Integration {
                t: step_idx as f64 * opts.dt,
                reason: "position became non-finite".into(),
            });
        }
        let f_new = f.eval(system, &x_new, opts.extremum_method)?;
        integral += 0.5 * (f_cur + f_new) * opts.dt;
        if linalg::norm(&x_new) > opts.explosion_radius {
            censored = true;
        }
        x = x_new;
        f_cur = f_new;
    }
    Ok((curve, censored))
}

/// Monte Carlo estimate of the exponential functional
/// `E exp(sign * int_0^t f(x_s) ds)` with `sign` either `+1/2` or `-1/2`.
pub fn exponential_functional(
    system: &SdeSystem,
    x0: &[f64],
    f: PointFunctional,
    sign: f64,
    opts: &EnsembleOpts,
) -> Result<ExpFunctionalEstimate> {
    assert!(
        (sign.abs() - 0.5).abs() < 1e-12,
        "the exponent sign is +1/2 or -1/2"
    );
    let x0 = system.manifold.admit_point(x0)?;
    let results = run_indexed(opts.n_paths, opts.workers, |path| {
        functional_integral_path(system, &x0, &f, opts, path)
    })?;
    let batch = PathBatch::from_results(results);
    finalize_exponential(&batch, &f, sign, opts)
}

fn finalize_exponential(
    batch: &PathBatch<(Vec<f64>, bool)>,
    f: &PointFunctional,
    sign: f64,
    opts: &EnsembleOpts,
) -> Result<ExpFunctionalEstimate> {
    let times = opts.grid_times();
    let n_censored = batch.ordered().filter(|(_, c)| *c).count();
    let mut mean = Vec::with_capacity(times.len());
    let mut ci_lo = Vec::with_capacity(times.len());
    let mut ci_hi = Vec::with_capacity(times.len());
    let mut overflow_times = Vec::new();
    for (g, t) in times.iter().enumerate() {
        let values: Vec<f64> = batch
            .ordered()
            .map(|(curve, _)| (sign * curve[g]).exp())
            .collect();
        if values.iter().any(|v| !v.is_finite()) && overflow_times.is_empty() {
            overflow_times.push(*t);
        }
        let est = mean_ci(&values);
        mean.push(est.mean);
        ci_lo.push(est.ci_lo);
        ci_hi.push(est.ci_hi);
    }
    let fitted = fit_exponent(&times, &mean, opts.fit_window)?;
    Ok(ExpFunctionalEstimate {
        functional: f.label(),
        sign,
        times,
        mean,
        ci_lo,
        ci_hi,
        fitted,
        n_paths: batch.len(),
        n_censored,
        overflow_times,
    })
}

// ---------------------------------------------------------------------------
// Sandwich check
// ---------------------------------------------------------------------------

/// The two-sided exponential bound around `E |T_x F_t|^p` at one time:
/// lower `E exp((1/2) int lower_rate)`, upper
/// `n E exp((1/2) int upper_rate)`, middle the frame-maximum estimate of
/// the operator norm's p-th moment. All three ride the same paths.
#[derive(Debug, Clone, Serialize)]
pub struct SandwichResult {
    pub order: f64,
    pub t: f64,
    pub lower: EstimateCi,
    pub middle: EstimateCi,
    pub upper: EstimateCi,
    /// The dimension constant multiplying the upper bound.
    pub dim_constant: usize,
    pub n_paths: usize,
    pub n_censored: usize,
    pub unreliable: bool,
    pub pass: bool,
}

pub fn sandwich_check(
    system: &SdeSystem,
    x0: &[f64],
    p: f64,
    t: f64,
    opts: &EnsembleOpts,
) -> Result<SandwichResult> {
    let x0 = system.manifold.admit_point(x0)?;
    let n = system.manifold.intrinsic_dim();
    let basis = system.manifold.tangent_basis(&x0);
    let mut local = opts.clone();
    local.horizon = t;
    local.grid = local.grid.clamp(2, 9);
    let cfg = local.integrator(p, true);
    let results = run_indexed(local.n_paths, local.workers, |path| {
        let noise = CounterNoise {
            seed: local.seed,
            path,
            dt: local.dt,
        };
        flow::simulate_for_ensemble(system, &x0, &basis, t, local.grid, &cfg, &noise)
    })?;
    let batch = PathBatch::from_results(results);
    let n_censored = batch.ordered().filter(|r| r.censored).count();

    let last = local.grid - 1;
    let lower_vals: Vec<f64> = batch
        .ordered()
        .map(|r| (0.5 * r.inf_rate_int[last]).exp())
        .collect();
    let upper_vals: Vec<f64> = batch
        .ordered()
        .map(|r| (0.5 * r.sup_rate_int[last]).exp())
        .collect();
    let middle_vals: Vec<f64> = batch
        .ordered()
        .map(|r| {
            r.v_norms[last]
                .iter()
                .map(|v| v.powf(p))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();

    let lower = mean_ci(&lower_vals);
    let middle = mean_ci(&middle_vals);
    let upper_raw = mean_ci(&upper_vals);
    let upper = EstimateCi {
        mean: n as f64 * upper_raw.mean,
        ci_lo: n as f64 * upper_raw.ci_lo,
        ci_hi: n as f64 * upper_raw.ci_hi,
    };
    let pass = middle.ci_hi >= lower.ci_lo && middle.ci_lo <= upper.ci_hi;
    Ok(SandwichResult {
        order: p,
        t,
        lower,
        middle,
        upper,
        dim_constant: n,
        n_paths: local.n_paths,
        n_censored,
        unreliable: n_censored as f64 > CENSOR_FLAG_FRACTION * local.n_paths as f64,
        pass,
    })
}

// ---------------------------------------------------------------------------
// Stochastic positivity
// ---------------------------------------------------------------------------

/// Decay-rate fit of `E exp(-(1/2) int f)` at one base point.
#[derive(Debug, Clone, Serialize)]
pub struct PointRate {
    pub x: Vec<f64>,
    pub rate: f64,
    pub ci_half_width: f64,
}

/// Stochastic-positivity verdict over a region sample: `f` qualifies when
/// every fitted rate is negative with its confidence interval clear of
/// zero.
#[derive(Debug, Clone, Serialize)]
pub struct PositivityReport {
    pub functional: String,
    pub rates: Vec<PointRate>,
    pub sup_rate: f64,
    pub sup_rate_ci_hi: f64,
    pub strongly_positive_on_sample: bool,
}

pub fn stochastic_positivity_rate(
    system: &SdeSystem,
    region_sample: &[Vec<f64>],
    f: PointFunctional,
    opts: &EnsembleOpts,
) -> Result<PositivityReport> {
    if region_sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut rates = Vec::with_capacity(region_sample.len());
    for (i, x) in region_sample.iter().enumerate() {
        let mut local = opts.clone();
        // Independent noise per base point via the path-index offset.
        local.seed = opts.seed.wrapping_add((i as u64) << 32);
        let est = exponential_functional(system, x, f, -0.5, &local)?;
        rates.push(PointRate {
            x: x.clone(),
            rate: est.fitted.slope,
            ci_half_width: est.fitted.ci_half_width,
        });
    }
    let sup_rate = rates.iter().map(|r| r.rate).fold(f64::NEG_INFINITY, f64::max);
    let sup_rate_ci_hi = rates
        .iter()
        .map(|r| r.rate + r.ci_half_width)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(PositivityReport {
        functional: f.label(),
        rates,
        sup_rate,
        sup_rate_ci_hi,
        strongly_positive_on_sample: sup_rate_ci_hi < 0.0,
    })
}

// ---------------------------------------------------------------------------
// Integrability diagnostic
// ---------------------------------------------------------------------------

/// Trapezoid integral of an observed mean curve plus an exponential tail,
/// or a divergence verdict when the fitted exponent cannot certify decay.
#[derive(Debug, Clone, Serialize)]
pub struct Integrability {
    pub finite: bool,
    /// The integral estimate when finite.
    pub value: Option<f64>,
    pub grid_part: f64,
    pub tail_part: Option<f64>,
}

pub fn integrability_from_curve(
    times: &[f64],
    values: &[f64],
    fitted: &ExponentFit,
) -> Integrability {
    let mut grid_part = 0.0;
    for i in 1..times.len() {
        grid_part += 0.5 * (values[i] + values[i - 1]) * (times[i] - times[i - 1]);
    }
    let slope_hi = fitted.slope + fitted.ci_half_width;
    if fitted.slope < 0.0 && slope_hi < 0.0 {
        let t_end = *times.last().unwrap();
        let tail = (fitted.intercept + fitted.slope * t_end).exp() / (-fitted.slope);
        Integrability {
            finite: true,
            value: Some(grid_part + tail),
            grid_part,
            tail_part: Some(tail),
        }
    } else {
        Integrability {
            finite: false,
            value: None,
            grid_part,
            tail_part: None,
        }
    }
}

/// Applies the diagnostic to a moment estimate's mean curve.
pub fn integrability_diagnostic(estimate: &MomentEstimate) -> Integrability {
    integrability_from_curve(&estimate.times, &estimate.mean_vp, &estimate.fitted)
}
