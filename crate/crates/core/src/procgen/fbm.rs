//! Fractional Brownian motion sampling.
//!
//! Two exact-in-law generators: Cholesky factorization of the value
//! covariance (any grid size, O(N^3) setup) and Davies-Harte circulant
//! embedding of the increment covariance (O(N log N), may fail for extreme
//! parameter combinations, in which case the caller falls back to Cholesky).
//!
//! Normalization: `Var(B^H_t) = t^{2H}`, i.e. covariance
//! `½ (t^{2H} + s^{2H} - |t-s|^{2H})`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Path, TimeGrid};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FbmMethod {
    ExactCholesky,
    DaviesHarte,
}

/// A sampled fBm path together with the generator that actually produced it
/// (Davies-Harte requests may fall back to Cholesky).
#[derive(Debug, Clone)]
pub struct FbmDraw {
    pub path: Path,
    pub method_used: FbmMethod,
    pub fell_back: bool,
}

/// fBm covariance `½(t^{2H} + s^{2H} - |t-s|^{2H})`.
pub fn fbm_covariance(hurst: f64, s: f64, t: f64) -> f64 {
    let h2 = 2.0 * hurst;
    0.5 * (t.abs().powf(h2) + s.abs().powf(h2) - (t - s).abs().powf(h2))
}

/// Autocovariance of unit-spacing fractional Gaussian noise at lag `k`.
fn fgn_autocov(hurst: f64, k: usize) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

pub(crate) fn validate_hurst(hurst: f64) -> Result<()> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::InvalidParameter {
            name: "hurst",
            value: hurst,
            constraint: "must lie strictly in (0, 1)",
        });
    }
    Ok(())
}

enum Backend {
    Cholesky { factor: DMatrix<f64> },
    DaviesHarte(DhPlan),
}

struct DhPlan {
    embedding: usize,
    sqrt_eig: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    increment_scale: f64,
}

/// Reusable sampler: the expensive setup (factorization or eigenvalues) is
/// done once, after which paths are drawn independently per RNG stream.
pub struct FbmSampler {
    grid: TimeGrid,
    backend: Backend,
    fell_back: bool,
}

impl FbmSampler {
    pub fn new(hurst: f64, grid: TimeGrid, method: FbmMethod) -> Result<Self> {
        validate_hurst(hurst)?;
        match method {
            FbmMethod::ExactCholesky => Ok(Self {
                grid,
                backend: Backend::Cholesky {
                    factor: cholesky_factor(hurst, grid)?,
                },
                fell_back: false,
            }),
            FbmMethod::DaviesHarte => match davies_harte_plan(hurst, grid) {
                Ok(plan) => Ok(Self {
                    grid,
                    backend: Backend::DaviesHarte(plan),
                    fell_back: false,
                }),
                Err(Error::EmbeddingFailure(_)) => Ok(Self {
                    grid,
                    backend: Backend::Cholesky {
                        factor: cholesky_factor(hurst, grid)?,
                    },
                    fell_back: true,
                }),
                Err(e) => Err(e),
            },
        }
    }

    pub fn fell_back(&self) -> bool {
        self.fell_back
    }

    pub fn method_used(&self) -> FbmMethod {
        match self.backend {
            Backend::Cholesky { .. } => FbmMethod::ExactCholesky,
            Backend::DaviesHarte(_) => FbmMethod::DaviesHarte,
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Path {
        let n = self.grid.steps();
        let mut values = Vec::with_capacity(n + 1);
        values.push(0.0);
        match &self.backend {
            Backend::Cholesky { factor } => {
                let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
                let v = factor * z;
                values.extend(v.iter().copied());
            }
            Backend::DaviesHarte(plan) => {
                let incs = plan.sample_increments(rng);
                let mut acc = 0.0;
                for inc in incs {
                    acc += inc;
                    values.push(acc);
                }
            }
        }
        Path::new(self.grid, values).expect("sampler emits grid-length values")
    }
}

fn cholesky_factor(hurst: f64, grid: TimeGrid) -> Result<DMatrix<f64>> {
    let n = grid.steps();
    let cov = DMatrix::from_fn(n, n, |i, j| {
        fbm_covariance(hurst, grid.time(i + 1), grid.time(j + 1))
    });
    if let Some(chol) = cov.clone().cholesky() {
        return Ok(chol.l());
    }
    // tiny diagonal jitter rescues marginal numerical indefiniteness
    let jitter = 1e-12 * cov.diagonal().max();
    let bumped = cov + DMatrix::identity(n, n) * jitter;
    bumped.cholesky().map(|c| c.l()).ok_or(Error::CholeskyFailure)
}

fn davies_harte_plan(hurst: f64, grid: TimeGrid) -> Result<DhPlan> {
    let n = grid.steps();
    let m = 2 * n;
    let mut row = vec![0.0f64; m];
    for k in 0..=n {
        row[k] = fgn_autocov(hurst, k);
    }
    for k in 1..n {
        row[m - k] = row[k];
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    let mut buf: Vec<Complex<f64>> = row.iter().map(|&r| Complex::new(r, 0.0)).collect();
    fft.process(&mut buf);

    let max_eig = buf.iter().map(|c| c.re).fold(0.0f64, f64::max);
    let tol = 1e-8 * max_eig.max(1.0);
    let mut sqrt_eig = Vec::with_capacity(m);
    for c in &buf {
        if c.re < -tol {
            return Err(Error::EmbeddingFailure(c.re));
        }
        sqrt_eig.push(c.re.max(0.0).sqrt());
    }
    Ok(DhPlan {
        embedding: m,
        sqrt_eig,
        fft,
        increment_scale: grid.dt().powf(hurst),
    })
}

impl DhPlan {
    /// One vector of `n` fBm increments on the grid spacing.
    fn sample_increments(&self, rng: &mut impl Rng) -> Vec<f64> {
        let m = self.embedding;
        let n = m / 2;
        let inv_sqrt_m = 1.0 / (m as f64).sqrt();
        let inv_sqrt_2m = 1.0 / (2.0 * m as f64).sqrt();
        let mut w = vec![Complex::new(0.0, 0.0); m];
        let g0: f64 = rng.sample(StandardNormal);
        w[0] = Complex::new(self.sqrt_eig[0] * inv_sqrt_m * g0, 0.0);
        for k in 1..n {
            let u: f64 = rng.sample(StandardNormal);
            let v: f64 = rng.sample(StandardNormal);
            let s = self.sqrt_eig[k] * inv_sqrt_2m;
            w[k] = Complex::new(s * u, s * v);
            w[m - k] = w[k].conj();
        }
        let gn: f64 = rng.sample(StandardNormal);
        w[n] = Complex::new(self.sqrt_eig[n] * inv_sqrt_m * gn, 0.0);
        self.fft.process(&mut w);
        (0..n).map(|i| w[i].re * self.increment_scale).collect()
    }
}

/// Draw one fBm path; Davies-Harte failures fall back to Cholesky and are
/// reported through `FbmDraw::fell_back`.
pub fn sample_fbm(hurst: f64, grid: TimeGrid, seed: u64, method: FbmMethod) -> Result<FbmDraw> {
    let sampler = FbmSampler::new(hurst, grid, method)?;
    let mut rng = stream_rng(seed, 0);
    Ok(FbmDraw {
        path: sampler.sample(&mut rng),
        method_used: sampler.method_used(),
        fell_back: sampler.fell_back(),
    })
}

/// Draw a batch of fBm paths with per-path RNG streams.
pub fn sample_fbm_batch(
    hurst: f64,
    grid: TimeGrid,
    seed: u64,
    n_paths: usize,
    method: FbmMethod,
) -> Result<Vec<Path>> {
    use rayon::prelude::*;
    let sampler = FbmSampler::new(hurst, grid, method)?;
    Ok((0..n_paths)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            sampler.sample(&mut rng)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use crate::stats;

    fn cov_check(hurst: f64, method: FbmMethod, s: f64, t: f64, seed: u64) {
        let grid = TimeGrid::new(2.0, 128).unwrap();
        let n = 20_000;
        let paths = sample_fbm_batch(hurst, grid, seed, n, method).unwrap();
        let i = grid.index_at_or_after(s);
        let j = grid.index_at_or_after(t);
        let xs: Vec<f64> = paths.iter().map(|p| p.value(i)).collect();
        let ys: Vec<f64> = paths.iter().map(|p| p.value(j)).collect();
        let emp: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum::<f64>() / n as f64;
        let truth = fbm_covariance(hurst, s, t);
        let vs = fbm_covariance(hurst, s, s);
        let vt = fbm_covariance(hurst, t, t);
        let se = ((vs * vt + truth * truth) / n as f64).sqrt();
        assert!(
            (emp - truth).abs() < 4.0 * se,
            "H={hurst} {method:?} cov({s},{t}): emp {emp}, truth {truth}, se {se}"
        );
    }

    #[test]
    fn brownian_limit_covariance_is_min() {
        // H = 1/2 reduces to Brownian motion: Cov(B_1, B_2) = min(1, 2) = 1
        assert_relative_eq!(fbm_covariance(0.5, 1.0, 2.0), 1.0, epsilon = 1e-12);
        cov_check(0.5, FbmMethod::ExactCholesky, 1.0, 2.0, 11);
    }

    #[test]
    fn unit_time_variance_is_one() {
        assert_relative_eq!(fbm_covariance(0.7, 1.0, 1.0), 1.0, epsilon = 1e-12);
        cov_check(0.7, FbmMethod::ExactCholesky, 1.0, 1.0, 12);
    }

    #[test]
    fn persistent_covariance_formula_value() {
        // ½(1 + 2^{1.4} - 1) = 2^{0.4}
        let truth = fbm_covariance(0.7, 1.0, 2.0);
        assert_relative_eq!(truth, 2f64.powf(0.4), epsilon = 1e-12);
        assert_relative_eq!(truth, 1.3195079107728942, epsilon = 1e-12);
        cov_check(0.7, FbmMethod::ExactCholesky, 1.0, 2.0, 13);
    }

    #[test]
    fn davies_harte_matches_law() {
        cov_check(0.7, FbmMethod::DaviesHarte, 1.0, 2.0, 14);
        cov_check(0.3, FbmMethod::DaviesHarte, 0.5, 1.5, 15);
    }

    #[test]
    fn marginal_at_horizon_is_gaussian() {
        let grid = TimeGrid::new(1.0, 64).unwrap();
        for (method, seed) in [(FbmMethod::ExactCholesky, 21u64), (FbmMethod::DaviesHarte, 22)] {
            let paths = sample_fbm_batch(0.7, grid, seed, 20_000, method).unwrap();
            let mut std: Vec<f64> = paths.iter().map(|p| p.terminal()).collect();
            let d = stats::ks_statistic(&mut std, stats::normal_cdf);
            let p = stats::ks_pvalue(d, std.len());
            assert!(p > 1e-3, "{method:?}: KS p-value {p}");
        }
    }

    #[test]
    fn paths_start_at_zero_and_are_deterministic() {
        let grid = TimeGrid::new(1.0, 32).unwrap();
        let a = sample_fbm(0.3, grid, 99, FbmMethod::DaviesHarte).unwrap();
        let b = sample_fbm(0.3, grid, 99, FbmMethod::DaviesHarte).unwrap();
        assert_eq!(a.path, b.path);
        assert_eq!(a.path.start(), 0.0);
        assert!(!a.fell_back);
    }

    #[test]
    fn hurst_domain_is_enforced() {
        let grid = TimeGrid::new(1.0, 8).unwrap();
        assert!(sample_fbm(0.0, grid, 1, FbmMethod::ExactCholesky).is_err());
        assert!(sample_fbm(1.0, grid, 1, FbmMethod::ExactCholesky).is_err());
        assert!(sample_fbm(-0.2, grid, 1, FbmMethod::ExactCholesky).is_err());
    }
}
