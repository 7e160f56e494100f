//! Sample-path generators for every price process studied here, plus the
//! realized quadratic variation estimator and the windowed growth check on it.
//!
//! All stochastic integrals are discretized as left-point Euler sums, which
//! keeps integrands predictable. Every generator is a pure function of
//! `(spec, grid, seed)`.

pub mod fbm;
pub mod kernels;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Path, QvPath, TimeGrid};
use crate::rng::stream_rng;

pub use fbm::{fbm_covariance, sample_fbm, sample_fbm_batch, FbmDraw, FbmMethod, FbmSampler};
pub use kernels::{
    moving_average_normalization, sample_moving_average, KernelShape, KernelSpec,
    MovingAverageSampler, PsiKind, SemimartingaleForm,
};

/// Bounded adapted perturbation `V`. Every variant carries an explicit finite
/// bound and generated values are clipped to it, so boundedness holds by
/// construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PerturbationSpec {
    Zero,
    Constant { value: f64 },
    /// `amplitude * sin(2π frequency t)`, a deterministic bounded function.
    Sine { amplitude: f64, frequency: f64 },
    /// `clip(scale * max_{s<=t} B_s, ±bound)`: an adapted functional of the
    /// driver history, clipped to its declared bound.
    ClippedRunningMax { scale: f64, bound: f64 },
}

impl PerturbationSpec {
    /// The declared bound `B_V` with `|V_t| <= B_V` on every path.
    pub fn bound(&self) -> f64 {
        match self {
            PerturbationSpec::Zero => 0.0,
            PerturbationSpec::Constant { value } => value.abs(),
            PerturbationSpec::Sine { amplitude, .. } => amplitude.abs(),
            PerturbationSpec::ClippedRunningMax { bound, .. } => *bound,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            PerturbationSpec::Zero => true,
            PerturbationSpec::Constant { value } => value.is_finite(),
            PerturbationSpec::Sine { amplitude, frequency } => {
                amplitude.is_finite() && frequency.is_finite()
            }
            PerturbationSpec::ClippedRunningMax { scale, bound } => {
                scale.is_finite() && bound.is_finite() && *bound >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name: "perturbation",
                value: f64::NAN,
                constraint: "all perturbation parameters must be finite",
            })
        }
    }

    /// Value at grid index `i` given the driver prefix `driver[..=i]`.
    fn value_at(&self, grid: TimeGrid, i: usize, driver_running_max: f64) -> f64 {
        match self {
            PerturbationSpec::Zero => 0.0,
            PerturbationSpec::Constant { value } => *value,
            PerturbationSpec::Sine { amplitude, frequency } => {
                amplitude * (2.0 * std::f64::consts::PI * frequency * grid.time(i)).sin()
            }
            PerturbationSpec::ClippedRunningMax { scale, bound } => {
                (scale * driver_running_max).clamp(-bound, *bound)
            }
        }
    }
}

/// Bounded Itô integrand with `inf |μ| >= δ_μ > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MuSpec {
    Constant { value: f64 },
    /// `offset + amplitude * sin(2π t)`; requires `offset - |amplitude| > 0`.
    OffsetSine { offset: f64, amplitude: f64 },
}

impl MuSpec {
    pub fn lower_bound(&self) -> f64 {
        match self {
            MuSpec::Constant { value } => value.abs(),
            MuSpec::OffsetSine { offset, amplitude } => offset - amplitude.abs(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower_bound() > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name: "mu",
                value: self.lower_bound(),
                constraint: "integrand must be bounded away from zero",
            })
        }
    }

    fn value_at(&self, t: f64) -> f64 {
        match self {
            MuSpec::Constant { value } => *value,
            MuSpec::OffsetSine { offset, amplitude } => {
                offset + amplitude * (2.0 * std::f64::consts::PI * t).sin()
            }
        }
    }
}

/// Which process to simulate, with validated parameter domains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProcessSpec {
    Brownian,
    Fbm { hurst: f64 },
    GeometricFbm { hurst: f64 },
    MovingAverage { kernel: KernelSpec, truncation: f64 },
    /// `X_t = Σ B_{t_i} ΔB_i + t`, the running integral `∫ B dB` plus `t`.
    ItoQuadratic,
    /// `|B_t|` through its Tanaka decomposition.
    TanakaAbs,
    /// Tanaka decomposition with the local time stopped at its first crossing
    /// of `cap`.
    TanakaCapped { cap: f64 },
    /// `X_t = ∫_0^t s^α dB_s + V_t` with `α > -1/2`.
    PowerIntegrand { alpha: f64, perturbation: PerturbationSpec },
    /// `X_t = ∫_0^t μ_s dB_s + V_t` with `inf |μ| > 0`.
    BoundedIntegrand { mu: MuSpec, perturbation: PerturbationSpec },
    /// `Y_t = B_t + t^α`.
    DriftPower { alpha: f64 },
    /// `Z_t = S_t + ([S,S]_t)^α` on top of a base process.
    QvDrift { alpha: f64, base: Box<ProcessSpec> },
}

impl ProcessSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ProcessSpec::Brownian | ProcessSpec::ItoQuadratic | ProcessSpec::TanakaAbs => Ok(()),
            ProcessSpec::Fbm { hurst } | ProcessSpec::GeometricFbm { hurst } => {
                fbm::validate_hurst(*hurst)
            }
            ProcessSpec::MovingAverage { kernel, truncation } => {
                KernelSpec::new(kernel.shape.clone())?;
                if !(*truncation > 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "truncation",
                        value: *truncation,
                        constraint: "must be positive",
                    });
                }
                Ok(())
            }
            ProcessSpec::TanakaCapped { cap } => {
                if *cap > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter {
                        name: "cap",
                        value: *cap,
                        constraint: "must be positive",
                    })
                }
            }
            ProcessSpec::PowerIntegrand { alpha, perturbation } => {
                if !(*alpha > -0.5) {
                    return Err(Error::InvalidParameter {
                        name: "alpha",
                        value: *alpha,
                        constraint: "must exceed -1/2 for a square-integrable integrand",
                    });
                }
                perturbation.validate()
            }
            ProcessSpec::BoundedIntegrand { mu, perturbation } => {
                mu.validate()?;
                perturbation.validate()
            }
            ProcessSpec::DriftPower { alpha } => {
                if *alpha > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter {
                        name: "alpha",
                        value: *alpha,
                        constraint: "must be positive",
                    })
                }
            }
            ProcessSpec::QvDrift { alpha, base } => {
                if !(*alpha > 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "alpha",
                        value: *alpha,
                        constraint: "must be positive",
                    });
                }
                base.validate()
            }
        }
    }
}

/// Standard Brownian motion on the grid: independent `N(0, dt)` increments.
pub fn sample_brownian(grid: TimeGrid, seed: u64) -> Path {
    brownian_from_rng(grid, &mut stream_rng(seed, 0))
}

pub(crate) fn brownian_from_rng(grid: TimeGrid, rng: &mut impl Rng) -> Path {
    let sqrt_dt = grid.dt().sqrt();
    let mut values = Vec::with_capacity(grid.len());
    values.push(0.0);
    let mut acc = 0.0;
    for _ in 0..grid.steps() {
        acc += sqrt_dt * rng.sample::<f64, _>(StandardNormal);
        values.push(acc);
    }
    Path::new(grid, values).expect("grid-length values")
}

/// The forward Euler discretization of `∫ B dB + t` together with its driver.
#[derive(Debug, Clone)]
pub struct ItoQuadraticPaths {
    pub x: Path,
    pub driver: Path,
}

pub fn sample_ito_quadratic(grid: TimeGrid, seed: u64) -> ItoQuadraticPaths {
    ito_quadratic_from_rng(grid, &mut stream_rng(seed, 0))
}

pub(crate) fn ito_quadratic_from_rng(grid: TimeGrid, rng: &mut impl Rng) -> ItoQuadraticPaths {
    let b = brownian_from_rng(grid, rng);
    let dt = grid.dt();
    let mut values = Vec::with_capacity(grid.len());
    values.push(0.0);
    let mut acc = 0.0;
    for i in 0..grid.steps() {
        acc += b.value(i) * (b.value(i + 1) - b.value(i)) + dt;
        values.push(acc);
    }
    ItoQuadraticPaths {
        x: Path::new(grid, values).expect("grid-length values"),
        driver: b,
    }
}

/// Tanaka decomposition sample: `abs` is `|B|` (or the capped process `D`),
/// `martingale` is the sign integral and `local_time` the residual.
#[derive(Debug, Clone)]
pub struct TanakaPaths {
    pub abs: Path,
    pub local_time: Path,
    pub martingale: Path,
    /// First grid index where the local time exceeded the cap, if capped.
    pub cap_hit: Option<usize>,
}

/// sign with the fixed convention `sign(0) = -1`; the time spent exactly at
/// zero on the grid has probability zero anyway.
fn sign_conv(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        -1.0
    }
}

pub fn sample_tanaka(grid: TimeGrid, seed: u64, cap: Option<f64>) -> Result<TanakaPaths> {
    if let Some(c) = cap {
        if !(c > 0.0) {
            return Err(Error::InvalidParameter {
                name: "cap",
                value: c,
                constraint: "must be positive",
            });
        }
    }
    Ok(tanaka_from_rng(grid, &mut stream_rng(seed, 0), cap))
}

pub(crate) fn tanaka_from_rng(grid: TimeGrid, rng: &mut impl Rng, cap: Option<f64>) -> TanakaPaths {
    let b = brownian_from_rng(grid, rng);
    let n = grid.steps();
    let mut m = Vec::with_capacity(n + 1);
    let mut l = Vec::with_capacity(n + 1);
    m.push(0.0);
    l.push(0.0);
    let mut macc = 0.0;
    for i in 0..n {
        macc += sign_conv(b.value(i)) * (b.value(i + 1) - b.value(i));
        m.push(macc);
        l.push(b.value(i + 1).abs() - macc);
    }
    let cap_hit = cap.and_then(|c| l.iter().position(|&x| x > c));
    let abs_values: Vec<f64> = match (cap, cap_hit) {
        (Some(_), Some(tau)) => (0..=n).map(|i| m[i] + l[i.min(tau)]).collect(),
        // cap never reached: D coincides with |B|
        _ => (0..=n).map(|i| b.value(i).abs()).collect(),
    };
    let local_values: Vec<f64> = match (cap, cap_hit) {
        (Some(_), Some(tau)) => (0..=n).map(|i| l[i.min(tau)]).collect(),
        _ => l,
    };
    TanakaPaths {
        abs: Path::new(grid, abs_values).expect("grid-length values"),
        local_time: Path::new(grid, local_values).expect("grid-length values"),
        martingale: Path::new(grid, m).expect("grid-length values"),
        cap_hit,
    }
}

/// `∫_0^t s^α dB_s + V_t` as a left-point Euler sum. The integrand at `t = 0`
/// is taken as 0 for `α < 0` (the first cell's contribution vanishes in L²).
pub fn sample_power_integrand(
    alpha: f64,
    perturbation: &PerturbationSpec,
    grid: TimeGrid,
    seed: u64,
) -> Result<Path> {
    let spec = ProcessSpec::PowerIntegrand {
        alpha,
        perturbation: perturbation.clone(),
    };
    spec.validate()?;
    Ok(integrand_from_rng(
        grid,
        &mut stream_rng(seed, 0),
        &|t| power_integrand(alpha, t),
        perturbation,
    ))
}

/// `∫_0^t μ_s dB_s + V_t` for a bounded-below integrand.
pub fn sample_bounded_integrand(
    mu: &MuSpec,
    perturbation: &PerturbationSpec,
    grid: TimeGrid,
    seed: u64,
) -> Result<Path> {
    mu.validate()?;
    perturbation.validate()?;
    Ok(integrand_from_rng(
        grid,
        &mut stream_rng(seed, 0),
        &|t| mu.value_at(t),
        perturbation,
    ))
}

fn power_integrand(alpha: f64, t: f64) -> f64 {
    if t == 0.0 {
        if alpha == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        t.powf(alpha)
    }
}

fn integrand_from_rng(
    grid: TimeGrid,
    rng: &mut impl Rng,
    integrand: &dyn Fn(f64) -> f64,
    perturbation: &PerturbationSpec,
) -> Path {
    let b = brownian_from_rng(grid, rng);
    let mut values = Vec::with_capacity(grid.len());
    let mut running_max = b.value(0);
    values.push(perturbation.value_at(grid, 0, running_max));
    let mut acc = 0.0;
    for i in 0..grid.steps() {
        acc += integrand(grid.time(i)) * (b.value(i + 1) - b.value(i));
        running_max = running_max.max(b.value(i + 1));
        values.push(acc + perturbation.value_at(grid, i + 1, running_max));
    }
    Path::new(grid, values).expect("grid-length values")
}

/// Draw one path of any process.
pub fn sample(spec: &ProcessSpec, grid: TimeGrid, seed: u64) -> Result<Path> {
    spec.validate()?;
    sample_prepared(&Prepared::new(spec, grid)?, grid, &mut stream_rng(seed, 0))
}

/// Draw a batch with per-path RNG streams; paths are independent and the
/// result does not depend on scheduling.
pub fn sample_batch(spec: &ProcessSpec, grid: TimeGrid, seed: u64, n_paths: usize) -> Result<Vec<Path>> {
    spec.validate()?;
    let prepared = Prepared::new(spec, grid)?;
    (0..n_paths)
        .into_par_iter()
        .map(|k| sample_prepared(&prepared, grid, &mut stream_rng(seed, k as u64)))
        .collect()
}

/// Per-spec precomputation shared across a batch (fBm factorizations,
/// moving-average weight tables).
enum Prepared {
    Plain(ProcessSpec),
    Fbm { sampler: FbmSampler, geometric: bool },
    MovingAverage(MovingAverageSampler),
    QvDrift { alpha: f64, base: Box<Prepared> },
}

impl Prepared {
    fn new(spec: &ProcessSpec, grid: TimeGrid) -> Result<Self> {
        Ok(match spec {
            ProcessSpec::Fbm { hurst } => Prepared::Fbm {
                sampler: FbmSampler::new(*hurst, grid, default_fbm_method(grid))?,
                geometric: false,
            },
            ProcessSpec::GeometricFbm { hurst } => Prepared::Fbm {
                sampler: FbmSampler::new(*hurst, grid, default_fbm_method(grid))?,
                geometric: true,
            },
            ProcessSpec::MovingAverage { kernel, truncation } => {
                Prepared::MovingAverage(MovingAverageSampler::new(kernel, grid, *truncation)?)
            }
            ProcessSpec::QvDrift { alpha, base } => Prepared::QvDrift {
                alpha: *alpha,
                base: Box::new(Prepared::new(base, grid)?),
            },
            other => Prepared::Plain(other.clone()),
        })
    }
}

fn default_fbm_method(grid: TimeGrid) -> FbmMethod {
    if grid.steps() <= 1024 {
        FbmMethod::ExactCholesky
    } else {
        FbmMethod::DaviesHarte
    }
}

fn sample_prepared(prepared: &Prepared, grid: TimeGrid, rng: &mut impl Rng) -> Result<Path> {
    match prepared {
        Prepared::Fbm { sampler, geometric } => {
            let mut path = sampler.sample(rng);
            if *geometric {
                for v in path.values_mut() {
                    *v = v.exp();
                }
            }
            Ok(path)
        }
        Prepared::MovingAverage(sampler) => Ok(sampler.sample(rng)),
        Prepared::QvDrift { alpha, base } => {
            let s = sample_prepared(base, grid, rng)?;
            let qv = realized_quadratic_variation(&s);
            Ok(crate::xform::qv_drift_from(&s, &qv, *alpha))
        }
        Prepared::Plain(spec) => match spec {
            ProcessSpec::Brownian => Ok(brownian_from_rng(grid, rng)),
            ProcessSpec::ItoQuadratic => Ok(ito_quadratic_from_rng(grid, rng).x),
            ProcessSpec::TanakaAbs => Ok(tanaka_from_rng(grid, rng, None).abs),
            ProcessSpec::TanakaCapped { cap } => Ok(tanaka_from_rng(grid, rng, Some(*cap)).abs),
            ProcessSpec::PowerIntegrand { alpha, perturbation } => Ok(integrand_from_rng(
                grid,
                rng,
                &|t| power_integrand(*alpha, t),
                perturbation,
            )),
            ProcessSpec::BoundedIntegrand { mu, perturbation } => Ok(integrand_from_rng(
                grid,
                rng,
                &|t| mu.value_at(t),
                perturbation,
            )),
            ProcessSpec::DriftPower { alpha } => {
                let b = brownian_from_rng(grid, rng);
                let values = (0..grid.len())
                    .map(|i| b.value(i) + grid.time(i).powf(*alpha))
                    .collect();
                Ok(Path::new(grid, values).expect("grid-length values"))
            }
            _ => unreachable!("handled by Prepared::new"),
        },
    }
}

/// Cumulative sum of squared increments.
pub fn realized_quadratic_variation(path: &Path) -> QvPath {
    let mut values = Vec::with_capacity(path.len());
    values.push(0.0);
    let mut acc = 0.0;
    for d in path.increments() {
        acc += d * d;
        values.push(acc);
    }
    QvPath::new(path.grid(), values).expect("cumulative squares are nondecreasing")
}

/// Outcome of the windowed quadratic-variation growth check: does every
/// window of length `h` gain at least `δ(h)` (minus the estimation slack)?
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionStarReport {
    pub satisfied: bool,
    /// Smallest observed window increment.
    pub min_increment: f64,
    /// The required growth `δ(h)`.
    pub required: f64,
    pub slack: f64,
    pub windows: usize,
}

pub fn check_condition_star(
    qv: &QvPath,
    delta: impl Fn(f64) -> f64,
    h: f64,
    slack: f64,
) -> Result<ConditionStarReport> {
    let dt = qv.grid().dt();
    if h < dt * (1.0 - 1e-9) {
        return Err(Error::InvalidParameter {
            name: "h",
            value: h,
            constraint: "window must be at least one grid step",
        });
    }
    let m = ((h / dt) + 1e-9).floor() as usize;
    let m = m.max(1).min(qv.grid().steps());
    let values = qv.values();
    let mut min_inc = f64::INFINITY;
    let mut windows = 0;
    for i in 0..=(values.len() - 1 - m) {
        min_inc = min_inc.min(values[i + m] - values[i]);
        windows += 1;
    }
    let required = delta(h);
    Ok(ConditionStarReport {
        satisfied: min_inc >= required - slack,
        min_increment: min_inc,
        required,
        slack,
        windows,
    })
}
