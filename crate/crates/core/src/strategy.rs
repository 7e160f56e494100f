//! Grid-adapted stopping rules, prefix-measurable events and position
//! functionals, and simple trading strategies with a minimum holding period.
//!
//! Adaptedness is structural: stopping rules, events and positions are built
//! from a small expression language that can only read the path prefix up to
//! the evaluated stop, and the prefix-perturbation check below verifies that
//! property mechanically on any rule.
//!
//! A spacing `h > 0` marks a minimum-holding-period strategy; the constraint
//! `τ_{j+1} >= τ_j + h` is enforced on the grid as an index difference of at
//! least `ceil(h/dt)` (conservative rounding).

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Path;

/// Hitting direction for level rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Up,
    Down,
}

/// Grid-adapted stopping rule. Evaluation yields the smallest grid index
/// satisfying the rule; rules must be bounded (hitting rules wrapped in a
/// truncation) to be evaluable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node")]
pub enum StoppingRule {
    /// Stop at a fixed time.
    Deterministic { time: f64 },
    /// First index at which `source` reaches or crosses `level`.
    HittingLevel {
        level: f64,
        direction: Direction,
        /// Index into the path set the rule is evaluated against.
        source: usize,
    },
    /// Stop `offset` time units (rounded up to whole grid steps) after `base`.
    OffsetAfter { base: Box<StoppingRule>, offset: f64 },
    /// Cap `base` at a fixed bound; makes any rule bounded.
    Truncate { base: Box<StoppingRule>, bound: f64 },
    /// `base` on the event (evaluated at `event_stop`), a fixed fallback time
    /// otherwise.
    EventGated {
        base: Box<StoppingRule>,
        event: EventSpec,
        event_stop: Box<StoppingRule>,
        off_time: f64,
    },
}

impl StoppingRule {
    pub fn deterministic(time: f64) -> Self {
        StoppingRule::Deterministic { time }
    }

    pub fn hitting(level: f64, direction: Direction) -> Self {
        StoppingRule::HittingLevel { level, direction, source: 0 }
    }

    pub fn truncated(self, bound: f64) -> Self {
        StoppingRule::Truncate { base: Box::new(self), bound }
    }

    pub fn offset_by(self, offset: f64) -> Self {
        StoppingRule::OffsetAfter { base: Box::new(self), offset }
    }

    /// Whether every evaluation is capped by construction.
    pub fn is_bounded(&self) -> bool {
        match self {
            StoppingRule::Deterministic { .. } => true,
            StoppingRule::HittingLevel { .. } => false,
            StoppingRule::OffsetAfter { base, .. } => base.is_bounded(),
            StoppingRule::Truncate { .. } => true,
            StoppingRule::EventGated { base, event_stop, .. } => {
                base.is_bounded() && event_stop.is_bounded()
            }
        }
    }

    /// An upper bound for the evaluated stopping time, when one exists.
    pub fn time_bound(&self) -> Option<f64> {
        match self {
            StoppingRule::Deterministic { time } => Some(*time),
            StoppingRule::HittingLevel { .. } => None,
            StoppingRule::OffsetAfter { base, offset } => base.time_bound().map(|b| b + offset),
            StoppingRule::Truncate { base, bound } => {
                Some(base.time_bound().map_or(*bound, |b| b.min(*bound)))
            }
            StoppingRule::EventGated { base, off_time, .. } => {
                base.time_bound().map(|b| b.max(*off_time))
            }
        }
    }

    fn max_source(&self) -> usize {
        match self {
            StoppingRule::Deterministic { .. } => 0,
            StoppingRule::HittingLevel { source, .. } => *source,
            StoppingRule::OffsetAfter { base, .. } | StoppingRule::Truncate { base, .. } => {
                base.max_source()
            }
            StoppingRule::EventGated { base, event_stop, .. } => {
                base.max_source().max(event_stop.max_source())
            }
        }
    }
}

/// Evaluate a stopping rule against a set of source paths (all on one grid).
/// Returns the stop as a grid index.
pub fn evaluate_stop(rule: &StoppingRule, paths: &[&Path]) -> Result<usize> {
    if !rule.is_bounded() {
        return Err(Error::UnboundedRule);
    }
    let needed = rule.max_source();
    if needed >= paths.len() {
        return Err(Error::DanglingSource(needed));
    }
    Ok(eval_rule(rule, paths))
}

/// Convenience wrapper for single-path rules.
pub fn evaluate_stop_single(rule: &StoppingRule, path: &Path) -> Result<usize> {
    evaluate_stop(rule, &[path])
}

fn eval_rule(rule: &StoppingRule, paths: &[&Path]) -> usize {
    let grid = paths[0].grid();
    match rule {
        StoppingRule::Deterministic { time } => grid.index_at_or_after(*time),
        StoppingRule::HittingLevel { level, direction, source } => {
            let values = paths[*source].values();
            let hit = values.iter().position(|&v| match direction {
                Direction::Up => v >= *level,
                Direction::Down => v <= *level,
            });
            hit.unwrap_or(grid.steps())
        }
        StoppingRule::OffsetAfter { base, offset } => {
            let b = eval_rule(base, paths);
            let steps = (offset / grid.dt() - 1e-9).ceil().max(0.0) as usize;
            (b + steps).min(grid.steps())
        }
        StoppingRule::Truncate { base, bound } => {
            eval_rule(base, paths).min(grid.index_at_or_before(*bound))
        }
        StoppingRule::EventGated { base, event, event_stop, off_time } => {
            let at = eval_rule(event_stop, paths);
            if event.holds(paths[0], at) {
                eval_rule(base, paths)
            } else {
                grid.index_at_or_after(*off_time)
            }
        }
    }
}

/// Quantity read from a path prefix `values[0..=stop]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node")]
pub enum PrefixExpr {
    ValueAtStop,
    RunningMax,
    RunningMin,
    /// `values[stop] - values[0]`
    NetChange,
}

impl PrefixExpr {
    fn eval(&self, path: &Path, stop: usize) -> f64 {
        let prefix = &path.values()[..=stop];
        match self {
            PrefixExpr::ValueAtStop => prefix[stop],
            PrefixExpr::RunningMax => prefix.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            PrefixExpr::RunningMin => prefix.iter().cloned().fold(f64::INFINITY, f64::min),
            PrefixExpr::NetChange => prefix[stop] - prefix[0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
}

/// Prefix-measurable event: its value at a stop depends only on path values
/// up to that stop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node")]
pub enum EventSpec {
    Always,
    Never,
    Compare { lhs: PrefixExpr, op: CmpOp, rhs: f64 },
    And { a: Box<EventSpec>, b: Box<EventSpec> },
    Or { a: Box<EventSpec>, b: Box<EventSpec> },
    Not { a: Box<EventSpec> },
}

impl EventSpec {
    pub fn holds(&self, path: &Path, stop: usize) -> bool {
        match self {
            EventSpec::Always => true,
            EventSpec::Never => false,
            EventSpec::Compare { lhs, op, rhs } => {
                let v = lhs.eval(path, stop);
                match op {
                    CmpOp::Lt => v < *rhs,
                    CmpOp::Le => v <= *rhs,
                    CmpOp::Gt => v > *rhs,
                    CmpOp::Ge => v >= *rhs,
                }
            }
            EventSpec::And { a, b } => a.holds(path, stop) && b.holds(path, stop),
            EventSpec::Or { a, b } => a.holds(path, stop) || b.holds(path, stop),
            EventSpec::Not { a } => !a.holds(path, stop),
        }
    }
}

/// Position functional: a safe expression over the path prefix at the leg's
/// entry stop, so measurability is checkable instead of assumed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node")]
pub enum PositionExpr {
    Const { value: f64 },
    Prefix { expr: PrefixExpr },
    Scale { factor: f64, inner: Box<PositionExpr> },
    Add { a: Box<PositionExpr>, b: Box<PositionExpr> },
    IfEvent {
        event: EventSpec,
        then: Box<PositionExpr>,
        otherwise: Box<PositionExpr>,
    },
}

impl PositionExpr {
    pub fn constant(value: f64) -> Self {
        PositionExpr::Const { value }
    }

    pub fn gated(event: EventSpec, value: f64) -> Self {
        PositionExpr::IfEvent {
            event,
            then: Box::new(PositionExpr::constant(value)),
            otherwise: Box::new(PositionExpr::constant(0.0)),
        }
    }

    pub fn eval(&self, path: &Path, stop: usize) -> f64 {
        match self {
            PositionExpr::Const { value } => *value,
            PositionExpr::Prefix { expr } => expr.eval(path, stop),
            PositionExpr::Scale { factor, inner } => factor * inner.eval(path, stop),
            PositionExpr::Add { a, b } => a.eval(path, stop) + b.eval(path, stop),
            PositionExpr::IfEvent { event, then, otherwise } => {
                if event.holds(path, stop) {
                    then.eval(path, stop)
                } else {
                    otherwise.eval(path, stop)
                }
            }
        }
    }
}

/// A simple strategy: `n` stops and `n-1` positions, position `j` held on
/// `(τ_j, τ_{j+1}]`. The initial position `g0` charged at the single time
/// point `{0}` is carried for completeness but a point mass in time has zero
/// increment, so it never contributes to gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimpleStrategy {
    pub stops: Vec<StoppingRule>,
    pub positions: Vec<PositionExpr>,
    /// Minimum holding period; `h > 0` marks the minimum-spacing class.
    pub spacing: f64,
    /// Position at the time point `{0}`; zero-impact by construction.
    pub initial_position: f64,
}

impl SimpleStrategy {
    pub fn new(stops: Vec<StoppingRule>, positions: Vec<PositionExpr>, spacing: f64) -> Result<Self> {
        let s = Self { stops, positions, spacing, initial_position: 0.0 };
        s.validate()?;
        Ok(s)
    }

    /// Single interval strategy `position · 1_{(entry, exit]}`.
    pub fn interval(entry: StoppingRule, exit: StoppingRule, position: PositionExpr, spacing: f64) -> Result<Self> {
        Self::new(vec![entry, exit], vec![position], spacing)
    }

    pub fn validate(&self) -> Result<()> {
        if self.stops.len() < 2 || self.positions.len() + 1 != self.stops.len() {
            return Err(Error::InvalidGrid(format!(
                "{} stops require {} positions",
                self.stops.len(),
                self.stops.len().saturating_sub(1)
            )));
        }
        if !(self.spacing >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "spacing",
                value: self.spacing,
                constraint: "must be nonnegative",
            });
        }
        if self.stops.iter().any(|s| !s.is_bounded()) {
            return Err(Error::UnboundedRule);
        }
        Ok(())
    }

    pub fn is_minimum_spacing(&self) -> bool {
        self.spacing > 0.0
    }

    /// Evaluated stop indices, clamped to be nondecreasing, and the realized
    /// positions read from the prefix at each entry stop.
    pub fn evaluate(&self, paths: &[&Path]) -> Result<StrategyEvaluation> {
        let mut idx = Vec::with_capacity(self.stops.len());
        let mut last = 0usize;
        for (k, rule) in self.stops.iter().enumerate() {
            let mut i = evaluate_stop(rule, paths)?;
            if k > 0 {
                i = i.max(last);
            }
            idx.push(i);
            last = i;
        }
        let path = paths[0];
        let positions = self
            .positions
            .iter()
            .zip(&idx)
            .map(|(p, &i)| p.eval(path, i))
            .collect();
        Ok(StrategyEvaluation { stop_indices: idx, positions })
    }
}

/// Per-path realization of a strategy: stop indices and positions.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyEvaluation {
    pub stop_indices: Vec<usize>,
    pub positions: Vec<f64>,
}

/// Gains of one leg.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegGain {
    pub entry_index: usize,
    pub exit_index: usize,
    pub position: f64,
    pub increment: f64,
    pub contribution: f64,
}

/// Pathwise gains: the terminal gain is exactly the sum of leg contributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainsResult {
    pub terminal: f64,
    pub legs: Vec<LegGain>,
}

/// Spacing in grid steps implied by a holding period `h`.
pub fn spacing_steps(h: f64, dt: f64) -> usize {
    if h <= 0.0 {
        0
    } else {
        (h / dt - 1e-9).ceil().max(1.0) as usize
    }
}

/// Telescoping gains `Σ g_j (X_{τ_{j+1}} - X_{τ_j})` along one path.
/// Minimum-spacing strategies are rejected with the violating leg when the
/// evaluated stops are closer than the declared holding period.
pub fn gains(strategy: &SimpleStrategy, path: &Path) -> Result<GainsResult> {
    gains_multi(strategy, &[path])
}

/// Like [`gains`] but with auxiliary source paths for rules that reference them.
pub fn gains_multi(strategy: &SimpleStrategy, paths: &[&Path]) -> Result<GainsResult> {
    strategy.validate()?;
    let eval = strategy.evaluate(paths)?;
    let path = paths[0];
    if strategy.is_minimum_spacing() {
        let m = spacing_steps(strategy.spacing, path.grid().dt());
        for (j, w) in eval.stop_indices.windows(2).enumerate() {
            if w[1] - w[0] < m {
                return Err(Error::SpacingViolation { leg: j });
            }
        }
    }
    Ok(gains_from_evaluation(&eval, path))
}

pub(crate) fn gains_from_evaluation(eval: &StrategyEvaluation, path: &Path) -> GainsResult {
    let mut legs = Vec::with_capacity(eval.positions.len());
    let mut terminal = 0.0;
    for (j, &g) in eval.positions.iter().enumerate() {
        let entry = eval.stop_indices[j];
        let exit = eval.stop_indices[j + 1];
        let increment = path.value(exit) - path.value(entry);
        let contribution = g * increment;
        terminal += contribution;
        legs.push(LegGain {
            entry_index: entry,
            exit_index: exit,
            position: g,
            increment,
            contribution,
        });
    }
    GainsResult { terminal, legs }
}

/// First spacing violation over a batch, if any: `(path_index, leg)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacingReport {
    pub ok: bool,
    pub first_violation: Option<(usize, usize)>,
}

/// Check the minimum-spacing constraint on every supplied path.
pub fn validate_cc_spacing(strategy: &SimpleStrategy, paths: &[Path]) -> Result<SpacingReport> {
    if !strategy.is_minimum_spacing() {
        return Err(Error::InvalidParameter {
            name: "spacing",
            value: strategy.spacing,
            constraint: "spacing validation needs h > 0",
        });
    }
    for (k, path) in paths.iter().enumerate() {
        let eval = strategy.evaluate(&[path])?;
        let m = spacing_steps(strategy.spacing, path.grid().dt());
        for (j, w) in eval.stop_indices.windows(2).enumerate() {
            if w[1] - w[0] < m {
                return Ok(SpacingReport { ok: false, first_violation: Some((k, j)) });
            }
        }
    }
    Ok(SpacingReport { ok: true, first_violation: None })
}

/// Rewrite a single-leg strategy whose `±1` position is gated by an event `A`
/// into an ungated interval strategy with event-modified stops: both stops
/// move to the fallback time `m` off `A`, so the increment (and hence the
/// gain) is unchanged on `A` and zero off `A`, pathwise and exactly.
///
/// `m` must be at least the exit rule's bound and lie on the grid horizon.
pub fn normalize_to_interval(
    entry: StoppingRule,
    exit: StoppingRule,
    event: EventSpec,
    signed_position: f64,
    m: f64,
) -> Result<SimpleStrategy> {
    let exit_bound = exit.time_bound().ok_or(Error::UnboundedRule)?;
    if m < exit_bound {
        return Err(Error::InvalidParameter {
            name: "m",
            value: m,
            constraint: "fallback time must reach the exit rule's bound",
        });
    }
    let gated_entry = StoppingRule::EventGated {
        base: Box::new(entry.clone()),
        event: event.clone(),
        event_stop: Box::new(entry.clone()),
        off_time: m,
    };
    let gated_exit = StoppingRule::EventGated {
        base: Box::new(exit),
        event,
        event_stop: Box::new(entry),
        off_time: m,
    };
    SimpleStrategy::new(
        vec![gated_entry, gated_exit],
        vec![PositionExpr::constant(signed_position)],
        0.0,
    )
}

/// Prefix-perturbation check of adaptedness: resample the path strictly
/// after the evaluated stop `trials` times; the stop must never move.
pub fn prefix_perturbation_check(
    rule: &StoppingRule,
    path: &Path,
    rng: &mut impl Rng,
    trials: usize,
) -> Result<bool> {
    let stop = evaluate_stop_single(rule, path)?;
    let scale = path.scale();
    for _ in 0..trials {
        let mut perturbed = path.clone();
        for v in perturbed.values_mut().iter_mut().skip(stop + 1) {
            *v += scale * rng.sample::<f64, _>(StandardNormal);
        }
        if evaluate_stop_single(rule, &perturbed)? != stop {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Prefix-perturbation check for position functionals at a given stop.
pub fn position_perturbation_check(
    position: &PositionExpr,
    path: &Path,
    stop: usize,
    rng: &mut impl Rng,
    trials: usize,
) -> bool {
    let value = position.eval(path, stop);
    let scale = path.scale();
    for _ in 0..trials {
        let mut perturbed = path.clone();
        for v in perturbed.values_mut().iter_mut().skip(stop + 1) {
            *v += scale * rng.sample::<f64, _>(StandardNormal);
        }
        if position.eval(&perturbed, stop) != value {
            return false;
        }
    }
    true
}
