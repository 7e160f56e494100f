//! Hedging in the minimum-holding-period class: projection of simple
//! strategies onto an `h`-spaced class by freezing positions at the first
//! spacing violation, discrete delta-hedging experiments with closed-form
//! model deltas, and a grid-level semimartingale-style distance combining
//! realized quadratic variation with the total variation of the mean drift.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Path, TimeGrid};
use crate::procgen::brownian_from_rng;
use crate::rng::stream_rng;
use crate::stats::{normal_cdf, normal_pdf};
use crate::strategy::{gains_from_evaluation, spacing_steps, GainsResult, SimpleStrategy, StrategyEvaluation};

/// Terminal payoff `g(S_T)`. All offered payoffs except `Square` are
/// Lipschitz; `Square` exists to exercise the rejection path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PayoffSpec {
    Linear { slope: f64, intercept: f64 },
    Call { strike: f64 },
    Put { strike: f64 },
    /// `min(x², cap)`: a clipped quadratic with bounded slope `2√cap`.
    ClippedSquare { cap: f64 },
    /// unclipped `x²`: unbounded slope, rejected by the hedger
    Square,
}

impl PayoffSpec {
    pub fn is_lipschitz(&self) -> bool {
        !matches!(self, PayoffSpec::Square)
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        match self {
            PayoffSpec::Linear { slope, intercept } => slope * x + intercept,
            PayoffSpec::Call { strike } => (x - strike).max(0.0),
            PayoffSpec::Put { strike } => (strike - x).max(0.0),
            PayoffSpec::ClippedSquare { cap } => (x * x).min(*cap),
            PayoffSpec::Square => x * x,
        }
    }

    pub fn label(&self) -> String {
        match self {
            PayoffSpec::Linear { slope, intercept } => format!("linear({slope},{intercept})"),
            PayoffSpec::Call { strike } => format!("call(K={strike})"),
            PayoffSpec::Put { strike } => format!("put(K={strike})"),
            PayoffSpec::ClippedSquare { cap } => format!("clipped-square(cap={cap})"),
            PayoffSpec::Square => "square".to_string(),
        }
    }
}

/// Price dynamics the hedger assumes: arithmetic Brownian (`S = B`) with
/// Gaussian closed forms, or exponential Brownian (`S = e^B`) with
/// lognormal closed forms (unit volatility, zero rate).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HedgeModel {
    Brownian,
    GeometricBrownian,
}

/// Closed-form claim value at `(t, x)` with remaining time `rem`.
pub fn model_price(payoff: &PayoffSpec, model: HedgeModel, x: f64, rem: f64) -> Result<f64> {
    if rem <= 0.0 {
        return Ok(payoff.evaluate(x));
    }
    let s = rem.sqrt();
    match (model, payoff) {
        (_, PayoffSpec::Linear { slope, intercept }) => Ok(slope * x + intercept),
        (HedgeModel::Brownian, PayoffSpec::Call { strike }) => {
            let d = (x - strike) / s;
            Ok((x - strike) * normal_cdf(d) + s * normal_pdf(d))
        }
        (HedgeModel::Brownian, PayoffSpec::Put { strike }) => {
            let d = (x - strike) / s;
            Ok((strike - x) * normal_cdf(-d) + s * normal_pdf(d))
        }
        (HedgeModel::Brownian, PayoffSpec::ClippedSquare { cap }) => {
            let r = cap.sqrt();
            let a = (-r - x) / s;
            let b = (r - x) / s;
            let mass = normal_cdf(b) - normal_cdf(a);
            let ez = normal_pdf(a) - normal_pdf(b);
            let ez2 = mass + a * normal_pdf(a) - b * normal_pdf(b);
            Ok(x * x * mass + 2.0 * x * s * ez + s * s * ez2 + cap * (1.0 - mass))
        }
        (HedgeModel::GeometricBrownian, PayoffSpec::Call { strike }) => {
            let d1 = (x / strike).ln() / s + 0.5 * s;
            let d2 = d1 - s;
            Ok(x * normal_cdf(d1) - strike * normal_cdf(d2))
        }
        (HedgeModel::GeometricBrownian, PayoffSpec::Put { strike }) => {
            let d1 = (x / strike).ln() / s + 0.5 * s;
            let d2 = d1 - s;
            Ok(strike * normal_cdf(-d2) - x * normal_cdf(-d1))
        }
        (HedgeModel::GeometricBrownian, PayoffSpec::ClippedSquare { .. }) => {
            Err(Error::InvalidParameter {
                name: "payoff",
                value: f64::NAN,
                constraint: "clipped-square pricing is offered for the Brownian model only",
            })
        }
        (_, PayoffSpec::Square) => Err(Error::NonLipschitzPayoff),
    }
}

/// Closed-form hedge ratio at `(t, x)` with remaining time `rem`.
pub fn model_delta(payoff: &PayoffSpec, model: HedgeModel, x: f64, rem: f64) -> Result<f64> {
    if rem <= 0.0 {
        return Ok(0.0);
    }
    let s = rem.sqrt();
    match (model, payoff) {
        (_, PayoffSpec::Linear { slope, .. }) => Ok(*slope),
        (HedgeModel::Brownian, PayoffSpec::Call { strike }) => Ok(normal_cdf((x - strike) / s)),
        (HedgeModel::Brownian, PayoffSpec::Put { strike }) => {
            Ok(normal_cdf((x - strike) / s) - 1.0)
        }
        (HedgeModel::Brownian, PayoffSpec::ClippedSquare { cap }) => {
            let r = cap.sqrt();
            let a = (-r - x) / s;
            let b = (r - x) / s;
            Ok(2.0 * (x * (normal_cdf(b) - normal_cdf(a)) + s * (normal_pdf(a) - normal_pdf(b))))
        }
        (HedgeModel::GeometricBrownian, PayoffSpec::Call { strike }) => {
            Ok(normal_cdf((x / strike).ln() / s + 0.5 * s))
        }
        (HedgeModel::GeometricBrownian, PayoffSpec::Put { strike }) => {
            Ok(normal_cdf((x / strike).ln() / s + 0.5 * s) - 1.0)
        }
        (HedgeModel::GeometricBrownian, PayoffSpec::ClippedSquare { .. }) => {
            Err(Error::InvalidParameter {
                name: "payoff",
                value: f64::NAN,
                constraint: "clipped-square hedging is offered for the Brownian model only",
            })
        }
        (_, PayoffSpec::Square) => Err(Error::NonLipschitzPayoff),
    }
}

/// Self-financing hedge report for one spacing value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HedgeReport {
    pub payoff: String,
    pub model: HedgeModel,
    pub spacing: f64,
    pub n_paths: usize,
    pub rms_error: f64,
    pub mean_error: f64,
    pub max_abs_error: f64,
    /// 5%, 50% and 95% quantiles of the terminal error.
    pub error_quantiles: [f64; 3],
    /// Grid-level semimartingale-style distance between the hedge portfolio
    /// value and the model claim value, over the batch.
    pub h2_gap: f64,
    /// Per-path terminal replication errors (not serialized).
    #[serde(skip)]
    pub errors: Vec<f64>,
}

/// Terminal replication error of the `h`-spaced delta hedge driven by one
/// Brownian path, together with the portfolio and claim value paths.
pub fn hedge_on_driver(
    payoff: &PayoffSpec,
    model: HedgeModel,
    h: f64,
    driver: &Path,
) -> Result<(f64, Path, Path)> {
    if !payoff.is_lipschitz() {
        return Err(Error::NonLipschitzPayoff);
    }
    let grid = driver.grid();
    let dt = grid.dt();
    if h < dt * (1.0 - 1e-9) {
        return Err(Error::InvalidParameter {
            name: "h",
            value: h,
            constraint: "rebalancing interval must be at least one grid step",
        });
    }
    let m = spacing_steps(h, dt);
    let horizon = grid.horizon();
    let price_at = |i: usize| -> f64 {
        match model {
            HedgeModel::Brownian => driver.value(i),
            HedgeModel::GeometricBrownian => driver.value(i).exp(),
        }
    };
    let mut portfolio = Vec::with_capacity(grid.len());
    let mut claim = Vec::with_capacity(grid.len());
    let mut value = model_price(payoff, model, price_at(0), horizon)?;
    let mut position = model_delta(payoff, model, price_at(0), horizon)?;
    portfolio.push(value);
    claim.push(value);
    let mut last_rebalance = 0usize;
    for i in 1..grid.len() {
        value += position * (price_at(i) - price_at(i - 1));
        portfolio.push(value);
        claim.push(model_price(payoff, model, price_at(i), horizon - grid.time(i))?);
        if i < grid.steps() && i - last_rebalance >= m {
            position = model_delta(payoff, model, price_at(i), horizon - grid.time(i))?;
            last_rebalance = i;
        }
    }
    let error = payoff.evaluate(price_at(grid.steps())) - value;
    Ok((
        error,
        Path::new(grid, portfolio)?,
        Path::new(grid, claim)?,
    ))
}

/// Monte-Carlo hedging experiment: rebalance at `h`-spaced grid times using
/// the model's exact delta and report the terminal replication error.
pub fn cc_rebalance_hedge(
    payoff: &PayoffSpec,
    model: HedgeModel,
    h: f64,
    grid: TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<HedgeReport> {
    if !payoff.is_lipschitz() {
        return Err(Error::NonLipschitzPayoff);
    }
    struct Acc {
        errors: Vec<(usize, f64)>,
        qv_sum: f64,
        diff_sum: Vec<f64>,
    }
    let len = grid.len();
    let acc: Result<Acc> = (0..n_paths)
        .into_par_iter()
        .map(|k| {
            let driver = brownian_from_rng(grid, &mut stream_rng(seed, k as u64));
            let (err, portfolio, claim) = hedge_on_driver(payoff, model, h, &driver)?;
            let mut qv = 0.0;
            let mut diff = Vec::with_capacity(len);
            let mut prev = portfolio.value(0) - claim.value(0);
            diff.push(prev);
            for i in 1..len {
                let d = portfolio.value(i) - claim.value(i);
                qv += (d - prev) * (d - prev);
                diff.push(d);
                prev = d;
            }
            Ok((k, err, qv, diff))
        })
        .try_fold(
            || Acc { errors: Vec::new(), qv_sum: 0.0, diff_sum: vec![0.0; len] },
            |mut acc, item: Result<(usize, f64, f64, Vec<f64>)>| {
                let (k, err, qv, diff) = item?;
                acc.errors.push((k, err));
                acc.qv_sum += qv;
                for (s, d) in acc.diff_sum.iter_mut().zip(&diff) {
                    *s += d;
                }
                Ok(acc)
            },
        )
        .try_reduce(
            || Acc { errors: Vec::new(), qv_sum: 0.0, diff_sum: vec![0.0; len] },
            |mut a, b| {
                a.errors.extend(b.errors);
                a.qv_sum += b.qv_sum;
                for (s, d) in a.diff_sum.iter_mut().zip(&b.diff_sum) {
                    *s += d;
                }
                Ok(a)
            },
        );
    let mut acc = acc?;
    acc.errors.sort_by_key(|&(k, _)| k);
    let errors: Vec<f64> = acc.errors.into_iter().map(|(_, e)| e).collect();
    let n = n_paths as f64;
    let tv: f64 = acc
        .diff_sum
        .windows(2)
        .map(|w| ((w[1] - w[0]) / n).abs())
        .sum();
    let h2_gap = (acc.qv_sum / n + tv * tv).sqrt();
    let rms = (errors.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    let mean = crate::stats::mean(&errors);
    let max_abs = errors.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let mut sorted = errors.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |p: f64| sorted[((sorted.len() - 1) as f64 * p).round() as usize];
    Ok(HedgeReport {
        payoff: payoff.label(),
        model,
        spacing: h,
        n_paths,
        rms_error: rms,
        mean_error: mean,
        max_abs_error: max_abs,
        error_quantiles: [q(0.05), q(0.5), q(0.95)],
        h2_gap,
        errors,
    })
}

/// Grid-level semimartingale-style distance between two path batches:
/// `sqrt( mean_paths[ QV_T(X-Y) ] + TV(mean path of X-Y)^2 )`.
/// Zero exactly when the batches coincide.
pub fn h2_distance(xs: &[Path], ys: &[Path]) -> Result<f64> {
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(Error::BatchMismatch(format!(
            "{} vs {} paths",
            xs.len(),
            ys.len()
        )));
    }
    let grid = xs[0].grid();
    let len = grid.len();
    let mut qv_sum = 0.0;
    let mut mean_diff = vec![0.0; len];
    for (x, y) in xs.iter().zip(ys) {
        if x.grid() != grid || y.grid() != grid {
            return Err(Error::BatchMismatch("paths on mixed grids".into()));
        }
        let mut prev = x.value(0) - y.value(0);
        mean_diff[0] += prev;
        let mut qv = 0.0;
        for i in 1..len {
            let d = x.value(i) - y.value(i);
            qv += (d - prev) * (d - prev);
            mean_diff[i] += d;
            prev = d;
        }
        qv_sum += qv;
    }
    let n = xs.len() as f64;
    let tv: f64 = mean_diff
        .windows(2)
        .map(|w| ((w[1] - w[0]) / n).abs())
        .sum();
    Ok((qv_sum / n + tv * tv).sqrt())
}

/// Projection of a simple strategy onto the `δ0`-spaced class, applied per
/// path: positions are frozen from the first spacing violation onward (the
/// frozen leg rides to the strategy's final stop, extended to the horizon or
/// unwound when even that cannot respect the spacing). Paths without a
/// violation are untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedStrategy {
    pub base: SimpleStrategy,
    pub delta0: f64,
}

/// Batch statistics of a projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionStats {
    /// Fraction of paths with at least one spacing violation.
    pub violation_fraction: f64,
    pub violating_paths: usize,
    pub n_paths: usize,
}

impl ProjectedStrategy {
    /// Per-path projected evaluation plus whether a violation occurred.
    pub fn evaluate(&self, path: &Path) -> Result<(StrategyEvaluation, bool)> {
        let eval = self.base.evaluate(&[path])?;
        let m = spacing_steps(self.delta0, path.grid().dt());
        let n_grid = path.grid().steps();
        let stops = &eval.stop_indices;
        let violation = stops.windows(2).position(|w| w[1] - w[0] < m);
        let Some(j) = violation else {
            return Ok((eval, false));
        };
        // keep stops up to and including s_j; freeze position j from there
        let mut kept_stops: Vec<usize> = stops[..=j].to_vec();
        let mut kept_positions: Vec<f64> = eval.positions[..=j.min(eval.positions.len() - 1)].to_vec();
        let last_kept = kept_stops[j];
        let final_stop = *stops.last().unwrap();
        if final_stop - last_kept >= m {
            kept_stops.push(final_stop);
        } else if n_grid - last_kept >= m {
            kept_stops.push(n_grid);
        } else {
            // no room to hold the frozen leg: close it at its entry
            kept_positions.pop();
        }
        while kept_stops.len() > 1 {
            let k = kept_stops.len();
            if kept_stops[k - 1] - kept_stops[k - 2] >= m {
                break;
            }
            kept_stops.pop();
            kept_positions.pop();
        }
        if kept_positions.is_empty() {
            kept_stops.truncate(1);
        }
        Ok((
            StrategyEvaluation { stop_indices: kept_stops, positions: kept_positions },
            true,
        ))
    }

    pub fn gains(&self, path: &Path) -> Result<GainsResult> {
        let (eval, _) = self.evaluate(path)?;
        if eval.positions.is_empty() {
            return Ok(GainsResult { terminal: 0.0, legs: Vec::new() });
        }
        Ok(gains_from_evaluation(&eval, path))
    }

    /// The projected stops must satisfy the spacing on every path.
    pub fn spacing_holds(&self, path: &Path) -> Result<bool> {
        let (eval, _) = self.evaluate(path)?;
        let m = spacing_steps(self.delta0, path.grid().dt());
        Ok(eval.stop_indices.windows(2).all(|w| w[1] - w[0] >= m))
    }
}

/// Project a strategy onto the `δ0`-spaced class and report the fraction of
/// paths on which the projection had to intervene.
pub fn project_to_cc(
    strategy: &SimpleStrategy,
    delta0: f64,
    paths: &[Path],
) -> Result<(ProjectedStrategy, ProjectionStats)> {
    if paths.is_empty() {
        return Err(Error::BatchMismatch("empty path batch".into()));
    }
    if delta0 < paths[0].grid().dt() * (1.0 - 1e-9) {
        return Err(Error::InvalidParameter {
            name: "delta0",
            value: delta0,
            constraint: "spacing must be at least one grid step",
        });
    }
    let projected = ProjectedStrategy { base: strategy.clone(), delta0 };
    let mut violating = 0usize;
    for p in paths {
        let (_, violated) = projected.evaluate(p)?;
        if violated {
            violating += 1;
        }
    }
    Ok((
        projected.clone(),
        ProjectionStats {
            violation_fraction: violating as f64 / paths.len() as f64,
            violating_paths: violating,
            n_paths: paths.len(),
        },
    ))
}
