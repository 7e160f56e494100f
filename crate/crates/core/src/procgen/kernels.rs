//! Gaussian moving-average processes driven by a two-sided Brownian motion:
//! `Y_t = ∫_{-∞}^t [φ(t-u) - φ(-u)] dW_u`, truncated to `[-L, t]` and
//! discretized against independent Gaussian cell increments.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Path, TimeGrid};
use crate::quad::midpoint_refine;
use crate::rng::stream_rng;

/// Moving-average kernel `φ`, zero on the negative axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KernelShape {
    /// `φ ≡ 0`
    Zero,
    /// `φ(t) = level` for `t > 0`
    Constant { level: f64 },
    /// `φ(t) = t^{H-1/2}` for `t > 0`: the fractional Brownian motion kernel
    PowerLaw { hurst: f64 },
    /// `φ(t) = t^e` for `t > 0`; `e <= -1/2` fails the square-integrability check
    Power { exponent: f64 },
    /// `φ(t) = 1 - e^{-rate t}` for `t > 0`: absolutely continuous with `v = 0`
    SmoothExp { rate: f64 },
}

/// Description of `ψ` when `φ(t) = v + ∫_0^t ψ(s) ds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PsiKind {
    Zero,
    Exponential { rate: f64 },
}

/// The decomposition `(v, ψ)` that characterizes semimartingale moving
/// averages; `None` marks kernels outside that class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemimartingaleForm {
    pub v: f64,
    pub psi: PsiKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub shape: KernelShape,
}

impl KernelSpec {
    pub fn new(shape: KernelShape) -> Result<Self> {
        match shape {
            KernelShape::PowerLaw { hurst } => {
                super::fbm::validate_hurst(hurst)?;
            }
            KernelShape::Constant { level } if !level.is_finite() => {
                return Err(Error::InvalidParameter {
                    name: "level",
                    value: level,
                    constraint: "must be finite",
                });
            }
            KernelShape::Power { exponent } if !exponent.is_finite() => {
                return Err(Error::InvalidParameter {
                    name: "exponent",
                    value: exponent,
                    constraint: "must be finite",
                });
            }
            KernelShape::SmoothExp { rate } if !(rate > 0.0) => {
                return Err(Error::InvalidParameter {
                    name: "rate",
                    value: rate,
                    constraint: "must be positive",
                });
            }
            _ => {}
        }
        Ok(Self { shape })
    }

    /// Kernel value; zero on the closed negative axis.
    pub fn phi(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self.shape {
            KernelShape::Zero => 0.0,
            KernelShape::Constant { level } => level,
            KernelShape::PowerLaw { hurst } => t.powf(hurst - 0.5),
            KernelShape::Power { exponent } => t.powf(exponent),
            KernelShape::SmoothExp { rate } => 1.0 - (-rate * t).exp(),
        }
    }

    /// The `(v, ψ)` pair when the kernel is of absolutely continuous form,
    /// which classifies the moving average as a semimartingale.
    pub fn semimartingale_form(&self) -> Option<SemimartingaleForm> {
        match self.shape {
            KernelShape::Zero => Some(SemimartingaleForm {
                v: 0.0,
                psi: PsiKind::Zero,
            }),
            KernelShape::Constant { level } => Some(SemimartingaleForm {
                v: level,
                psi: PsiKind::Zero,
            }),
            KernelShape::PowerLaw { hurst } if hurst == 0.5 => Some(SemimartingaleForm {
                v: 1.0,
                psi: PsiKind::Zero,
            }),
            KernelShape::PowerLaw { .. } => None,
            KernelShape::Power { exponent } if exponent == 0.0 => Some(SemimartingaleForm {
                v: 1.0,
                psi: PsiKind::Zero,
            }),
            KernelShape::Power { .. } => None,
            KernelShape::SmoothExp { rate } => Some(SemimartingaleForm {
                v: 0.0,
                psi: PsiKind::Exponential { rate },
            }),
        }
    }
}

/// Default truncation of the two-sided integral, as a multiple of the
/// horizon.
pub const DEFAULT_TRUNCATION_FACTOR: f64 = 10.0;

/// Discretized moving-average generator on a fixed grid and truncation.
///
/// The weight `w[i][j] = φ(t_i - u_j) - φ(-u_j)` is evaluated at driver-cell
/// midpoints `u_j` spanning `[-L, T]`, so kernel singularities at `0+` are
/// never evaluated directly.
#[derive(Debug)]
pub struct MovingAverageSampler {
    grid: TimeGrid,
    weights: Vec<Vec<f64>>,
    cells: usize,
    sqrt_dt: f64,
    variances: Vec<f64>,
    truncation_gap: f64,
}

impl MovingAverageSampler {
    pub fn new(kernel: &KernelSpec, grid: TimeGrid, truncation: f64) -> Result<Self> {
        if !(truncation > 0.0) || !truncation.is_finite() {
            return Err(Error::InvalidParameter {
                name: "truncation",
                value: truncation,
                constraint: "must be positive and finite",
            });
        }
        let dt = grid.dt();
        let neg_cells = (truncation / dt).ceil() as usize;
        let cells = neg_cells + grid.steps();
        let left = -(neg_cells as f64) * dt;

        let sum_sq = |split: usize| -> f64 {
            // squared-weight sum for the horizon row at refinement `split`
            let sub = dt / split as f64;
            let total = cells * split;
            let t = grid.horizon();
            let mut s = 0.0;
            for j in 0..total {
                let u = left + (j as f64 + 0.5) * sub;
                let w = kernel.phi(t - u) - kernel.phi(-u);
                s += w * w * sub;
            }
            s
        };
        let coarse = sum_sq(1);
        let fine = sum_sq(2);
        if coarse > 0.0 {
            let ratio = fine / coarse;
            if ratio > 1.10 {
                return Err(Error::KernelNotSquareIntegrable { ratio });
            }
        }

        let mut weights = Vec::with_capacity(grid.len());
        let mut variances = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let t = grid.time(i);
            let mut row = Vec::with_capacity(cells);
            let mut var = 0.0;
            for j in 0..cells {
                let u = left + (j as f64 + 0.5) * dt;
                let w = kernel.phi(t - u) - kernel.phi(-u);
                row.push(w);
                var += w * w * dt;
            }
            weights.push(row);
            variances.push(var);
        }

        // L-doubling self-check: how much horizon variance the tail beyond
        // the truncation still carries
        let t = grid.horizon();
        let doubled_tail: f64 = (0..neg_cells)
            .map(|j| {
                let u = left - (j as f64 + 0.5) * dt;
                let w = kernel.phi(t - u) - kernel.phi(-u);
                w * w * dt
            })
            .sum();

        Ok(Self {
            grid,
            weights,
            cells,
            sqrt_dt: dt.sqrt(),
            variances,
            truncation_gap: doubled_tail,
        })
    }

    /// Variance the horizon value would gain if the truncation were doubled:
    /// an upper-bound style estimate of the truncation error.
    pub fn truncation_error_estimate(&self) -> f64 {
        self.truncation_gap
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    /// Exact variance of the discretized value at grid index `i`.
    pub fn discrete_variance(&self, i: usize) -> f64 {
        self.variances[i]
    }

    /// Exact covariance of the discretized values at grid indices `i, k`.
    pub fn discrete_covariance(&self, i: usize, k: usize) -> f64 {
        let dt = self.grid.dt();
        self.weights[i]
            .iter()
            .zip(&self.weights[k])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * dt
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Path {
        let dw: Vec<f64> = (0..self.cells)
            .map(|_| self.sqrt_dt * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let values = self
            .weights
            .iter()
            .map(|row| row.iter().zip(&dw).map(|(w, d)| w * d).sum())
            .collect();
        Path::new(self.grid, values).expect("weight rows cover the grid")
    }
}

/// Draw one moving-average path; the two-sided integral is truncated at `-L`.
pub fn sample_moving_average(
    kernel: &KernelSpec,
    grid: TimeGrid,
    seed: u64,
    truncation: f64,
) -> Result<Path> {
    let sampler = MovingAverageSampler::new(kernel, grid, truncation)?;
    let mut rng = stream_rng(seed, 0);
    Ok(sampler.sample(&mut rng))
}

/// Moving-average normalization constant for the power-law kernel:
/// `c_H = (1/(2H) + ∫_0^∞ [(1+u)^{H-1/2} - u^{H-1/2}]^2 du)^{1/2}`.
///
/// The bracket must be squared for the integral to converge when H > 1/2;
/// the unsquared variant diverges and is not offered.
pub fn moving_average_normalization(hurst: f64) -> Result<f64> {
    super::fbm::validate_hurst(hurst)?;
    let e = hurst - 0.5;
    let bracket_sq = move |u: f64| {
        let b = (1.0 + u).powf(e) - u.powf(e);
        b * b
    };
    let near = midpoint_refine(&bracket_sq, 0.0, 1.0, 1e-9);
    // u = 1/w on [1, inf)
    let far = midpoint_refine(&|w: f64| bracket_sq(1.0 / w) / (w * w), 0.0, 1.0, 1e-9);
    Ok((0.5 / hurst + near + far).sqrt())
}
