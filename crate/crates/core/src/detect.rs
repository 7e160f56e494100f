//! Statistical no-arbitrage criteria: classification of conditioned
//! increment signs with exact binomial lower confidence bounds, two-sided
//! reachability estimates after a stopping time, and an empirical
//! falsification search over small interval-strategy families.
//!
//! "Positive probability" is operationalized as a strictly positive
//! Clopper-Pearson lower bound at a configurable confidence (default 0.999).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::procgen::{sample_batch, ProcessSpec};
use crate::stats::{clopper_pearson_lower, normal_quantile};
use crate::strategy::{
    evaluate_stop_single, gains, EventSpec, SimpleStrategy, StoppingRule,
};

/// Sign-pattern classification of a conditioned increment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignClass {
    /// both signs occur with certified positive probability
    BothSigns,
    /// no negative values observed, positives certified
    NonnegNontrivial,
    /// no positive values observed, negatives certified
    NonposNontrivial,
    /// all increments within the zero tolerance
    Null,
    /// neither sign separates from zero at the requested confidence
    Inconclusive,
}

/// Result of an increment sign test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub class: SignClass,
    pub n_pos: u64,
    pub n_neg: u64,
    pub n_zero: u64,
    pub confidence: f64,
    /// Clopper-Pearson lower bounds for each sign probability.
    pub lb_pos: f64,
    pub lb_neg: f64,
    /// Fraction of sampled paths on which the conditioning event held.
    pub conditioning_frequency: f64,
}

impl Verdict {
    pub fn sample_size(&self) -> u64 {
        self.n_pos + self.n_neg + self.n_zero
    }

    fn classify(n_pos: u64, n_neg: u64, n_zero: u64, lb_pos: f64, lb_neg: f64) -> SignClass {
        if n_pos == 0 && n_neg == 0 {
            SignClass::Null
        } else if n_pos > 0 && n_neg > 0 && lb_pos > 0.0 && lb_neg > 0.0 {
            SignClass::BothSigns
        } else if n_neg == 0 && lb_pos > 0.0 {
            SignClass::NonnegNontrivial
        } else if n_pos == 0 && lb_neg > 0.0 {
            SignClass::NonposNontrivial
        } else {
            let _ = n_zero;
            SignClass::Inconclusive
        }
    }
}

fn build_verdict(
    increments: &[f64],
    scale: f64,
    confidence: f64,
    zero_tol: f64,
    conditioning_frequency: f64,
) -> Verdict {
    let tol = zero_tol * scale.max(f64::MIN_POSITIVE);
    let mut n_pos = 0u64;
    let mut n_neg = 0u64;
    let mut n_zero = 0u64;
    for &d in increments {
        if d > tol {
            n_pos += 1;
        } else if d < -tol {
            n_neg += 1;
        } else {
            n_zero += 1;
        }
    }
    let n = n_pos + n_neg + n_zero;
    let lb_pos = clopper_pearson_lower(n_pos, n, confidence);
    let lb_neg = clopper_pearson_lower(n_neg, n, confidence);
    Verdict {
        class: Verdict::classify(n_pos, n_neg, n_zero, lb_pos, lb_neg),
        n_pos,
        n_neg,
        n_zero,
        confidence,
        lb_pos,
        lb_neg,
        conditioning_frequency,
    }
}

/// Default zero tolerance relative to the path scale.
pub const DEFAULT_ZERO_TOL: f64 = 1e-12;

/// Classify the sign pattern of `1_A (X_{τ1} - X_{τ0})` over an explicit
/// path batch. `τ1` must dominate `τ0` pathwise; the event is read at `τ0`.
pub fn sign_test_on_paths(
    paths: &[crate::grid::Path],
    tau0: &StoppingRule,
    tau1: &StoppingRule,
    event: &EventSpec,
    confidence: f64,
    zero_tol: f64,
) -> Result<Verdict> {
    if paths.len() < 100 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: paths.len() as f64,
            constraint: "at least 100 samples",
        });
    }
    let mut increments = Vec::with_capacity(paths.len());
    let mut scale = 0.0f64;
    for p in paths {
        let i0 = evaluate_stop_single(tau0, p)?;
        let i1 = evaluate_stop_single(tau1, p)?;
        if i1 < i0 {
            return Err(Error::InvalidParameter {
                name: "tau1",
                value: i1 as f64,
                constraint: "must dominate tau0 pathwise",
            });
        }
        scale = scale.max(p.scale());
        if event.holds(p, i0) {
            increments.push(p.value(i1) - p.value(i0));
        }
    }
    if increments.is_empty() {
        return Err(Error::EmptyConditioningEvent);
    }
    let freq = increments.len() as f64 / paths.len() as f64;
    Ok(build_verdict(&increments, scale, confidence, zero_tol, freq))
}

/// Classify the sign pattern of `1_A (X_{τ1} - X_{τ0})` over a Monte-Carlo
/// sample of the given process.
#[allow(clippy::too_many_arguments)]
pub fn increment_sign_test(
    spec: &ProcessSpec,
    grid: TimeGrid,
    tau0: &StoppingRule,
    tau1: &StoppingRule,
    event: &EventSpec,
    n: usize,
    confidence: f64,
    zero_tol: f64,
    seed: u64,
) -> Result<Verdict> {
    let paths = sample_batch(spec, grid, seed, n)?;
    sign_test_on_paths(&paths, tau0, tau1, event, confidence, zero_tol)
}

/// Two-sided reachability after a stopping time: tail probabilities of the
/// conditioned increment at `τ + ν` plus the windowed sup/inf excursion
/// events over `[h, T]` after `τ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachabilityReport {
    pub threshold: f64,
    /// `P_A(X_{τ+ν} - X_τ > C)` with its lower confidence bound.
    pub p_up: f64,
    pub lb_up: f64,
    /// `P_A(X_{τ+ν} - X_τ < -C)` with its lower confidence bound.
    pub p_down: f64,
    pub lb_down: f64,
    /// `P_A(sup_{s in [h, T]} (X_{τ+s} - X_τ) < -C)`
    pub p_sup_below: f64,
    pub lb_sup_below: f64,
    /// `P_A(inf_{s in [h, T]} (X_{τ+s} - X_τ) > C)`
    pub p_inf_above: f64,
    pub lb_inf_above: f64,
    pub conditioning_frequency: f64,
    pub n_conditioned: u64,
    pub confidence: f64,
}

/// Estimate the reachability probabilities for the increment after `τ`.
///
/// `offset` is the elapsed time `ν in [h, window]` at which the increment is
/// read; the sup/inf events scan the whole window `[h, window]` after `τ`.
#[allow(clippy::too_many_arguments)]
pub fn reachability_test(
    spec: &ProcessSpec,
    grid: TimeGrid,
    tau: &StoppingRule,
    offset: f64,
    h: f64,
    window: f64,
    threshold: f64,
    event: &EventSpec,
    n: usize,
    confidence: f64,
    seed: u64,
) -> Result<ReachabilityReport> {
    if !(h > 0.0 && h < window) {
        return Err(Error::InvalidParameter {
            name: "h",
            value: h,
            constraint: "must satisfy 0 < h < window",
        });
    }
    if !(threshold > 0.0) {
        return Err(Error::InvalidParameter {
            name: "threshold",
            value: threshold,
            constraint: "must be positive",
        });
    }
    if !(offset >= h && offset <= window) {
        return Err(Error::InvalidParameter {
            name: "offset",
            value: offset,
            constraint: "must lie in [h, window]",
        });
    }
    let paths = sample_batch(spec, grid, seed, n)?;
    let dt = grid.dt();
    let off_steps = (offset / dt - 1e-9).ceil() as usize;
    let h_steps = (h / dt - 1e-9).ceil().max(1.0) as usize;
    let win_steps = (window / dt + 1e-9).floor() as usize;

    let mut n_cond = 0u64;
    let mut up = 0u64;
    let mut down = 0u64;
    let mut sup_below = 0u64;
    let mut inf_above = 0u64;
    for p in &paths {
        let i0 = evaluate_stop_single(tau, p)?;
        if !event.holds(p, i0) {
            continue;
        }
        n_cond += 1;
        let base = p.value(i0);
        let i1 = (i0 + off_steps).min(grid.steps());
        let d = p.value(i1) - base;
        if d > threshold {
            up += 1;
        }
        if d < -threshold {
            down += 1;
        }
        let lo = (i0 + h_steps).min(grid.steps());
        let hi = (i0 + win_steps).min(grid.steps());
        let mut wmax = f64::NEG_INFINITY;
        let mut wmin = f64::INFINITY;
        for i in lo..=hi {
            let v = p.value(i) - base;
            wmax = wmax.max(v);
            wmin = wmin.min(v);
        }
        if wmax < -threshold {
            sup_below += 1;
        }
        if wmin > threshold {
            inf_above += 1;
        }
    }
    if n_cond == 0 {
        return Err(Error::EmptyConditioningEvent);
    }
    let m = n_cond as f64;
    Ok(ReachabilityReport {
        threshold,
        p_up: up as f64 / m,
        lb_up: clopper_pearson_lower(up, n_cond, confidence),
        p_down: down as f64 / m,
        lb_down: clopper_pearson_lower(down, n_cond, confidence),
        p_sup_below: sup_below as f64 / m,
        lb_sup_below: clopper_pearson_lower(sup_below, n_cond, confidence),
        p_inf_above: inf_above as f64 / m,
        lb_inf_above: clopper_pearson_lower(inf_above, n_cond, confidence),
        conditioning_frequency: m / n as f64,
        n_conditioned: n_cond,
        confidence,
    })
}

/// One candidate of an arbitrage search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub label: String,
    /// fraction of paths with gain >= -ε
    pub nonneg_fraction: f64,
    pub mean_gain: f64,
    /// lower confidence bound for the mean gain
    pub mean_lower_bound: f64,
    pub min_gain: f64,
    pub flagged: bool,
}

/// Search outcome: every candidate's report plus the best one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub candidates: Vec<CandidateReport>,
    pub best_index: usize,
    /// Set when some candidate was flagged as an empirical arbitrage.
    pub arbitrage_found: Option<usize>,
    pub n_paths: usize,
    pub tolerance: f64,
    pub confidence: f64,
}

/// Empirical falsifier over an enumerable strategy family: a candidate is
/// flagged only when every sampled gain is `>= -ε` *and* the mean gain's
/// lower confidence bound is positive. Candidates are ranked by
/// (nonnegative fraction, mean gain).
pub fn arbitrage_search(
    spec: &ProcessSpec,
    grid: TimeGrid,
    family: &[(String, SimpleStrategy)],
    n: usize,
    tolerance: f64,
    confidence: f64,
    seed: u64,
) -> Result<SearchReport> {
    let paths = sample_batch(spec, grid, seed, n)?;
    arbitrage_search_on_paths(&paths, family, tolerance, confidence)
}

/// [`arbitrage_search`] over an explicit path batch.
pub fn arbitrage_search_on_paths(
    paths: &[crate::grid::Path],
    family: &[(String, SimpleStrategy)],
    tolerance: f64,
    confidence: f64,
) -> Result<SearchReport> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let n = paths.len();
    let z = normal_quantile(confidence);
    let candidates: Result<Vec<CandidateReport>> = family
        .par_iter()
        .map(|(label, strategy)| {
            let mut gains_vec = Vec::with_capacity(n);
            for p in paths {
                gains_vec.push(gains(strategy, p)?.terminal);
            }
            let nonneg = gains_vec.iter().filter(|&&g| g >= -tolerance).count();
            let mean = crate::stats::mean(&gains_vec);
            let se = crate::stats::standard_error(&gains_vec);
            let lb = mean - z * se;
            let min = gains_vec.iter().cloned().fold(f64::INFINITY, f64::min);
            let nonneg_fraction = nonneg as f64 / n as f64;
            Ok(CandidateReport {
                label: label.clone(),
                nonneg_fraction,
                mean_gain: mean,
                mean_lower_bound: lb,
                min_gain: min,
                flagged: nonneg == n && lb > 0.0,
            })
        })
        .collect();
    let candidates = candidates?;
    let best_index = (0..candidates.len())
        .max_by(|&a, &b| {
            let ca = &candidates[a];
            let cb = &candidates[b];
            (ca.nonneg_fraction, ca.mean_gain)
                .partial_cmp(&(cb.nonneg_fraction, cb.mean_gain))
                .unwrap()
        })
        .unwrap();
    let arbitrage_found = candidates.iter().position(|c| c.flagged);
    Ok(SearchReport {
        candidates,
        best_index,
        arbitrage_found,
        n_paths: n,
        tolerance,
        confidence,
    })
}

/// The interval-strategy family `{±1_{(a, a+hold]}}` over deterministic
/// entry times. Exits are offsets from the entries, so the holding-period
/// constraint holds by construction; entries with `a + hold > horizon` are
/// skipped (offsets would be clipped by the grid there).
pub fn deterministic_interval_family(
    entries: &[f64],
    hold: f64,
    horizon: f64,
) -> Vec<(String, SimpleStrategy)> {
    let mut family = Vec::new();
    for &a in entries {
        if a + hold > horizon * (1.0 + 1e-12) {
            continue;
        }
        let entry = StoppingRule::deterministic(a);
        let exit = entry.clone().offset_by(hold);
        for sign in [1.0, -1.0] {
            let s = SimpleStrategy::interval(
                entry.clone(),
                exit.clone(),
                crate::strategy::PositionExpr::constant(sign),
                hold,
            )
            .expect("two deterministic stops are valid");
            family.push((format!("{sign:+.0}*({a:.4},{a:.4}+{hold:.4}]"), s));
        }
    }
    family
}

/// The interval-strategy family `{±1_{(τ_level, τ_level + hold]}}` over
/// hitting levels truncated at `trunc`; requires `trunc + hold <= horizon`
/// so that offset exits are never clipped by the grid.
pub fn hitting_interval_family(
    levels: &[f64],
    hold: f64,
    trunc: f64,
    horizon: f64,
) -> Vec<(String, SimpleStrategy)> {
    assert!(
        trunc + hold <= horizon * (1.0 + 1e-12),
        "hitting family needs trunc + hold <= horizon"
    );
    let mut family = Vec::new();
    for &level in levels {
        let dir = if level >= 0.0 {
            crate::strategy::Direction::Up
        } else {
            crate::strategy::Direction::Down
        };
        let entry = StoppingRule::hitting(level, dir).truncated(trunc);
        let exit = entry.clone().offset_by(hold);
        for sign in [1.0, -1.0] {
            let s = SimpleStrategy::interval(
                entry.clone(),
                exit.clone(),
                crate::strategy::PositionExpr::constant(sign),
                hold,
            )
            .expect("offset interval is valid");
            family.push((format!("{sign:+.0}*hit({level:.3})+{hold:.3}"), s));
        }
    }
    family
}
