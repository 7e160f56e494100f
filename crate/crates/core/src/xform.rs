//! Closure operations on paths: strictly monotone value maps, continuous
//! time changes with their right-continuous inverses, and
//! quadratic-variation drift processes `Z = S + [S,S]^α`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Path, QvPath, TimeGrid};
use crate::procgen::{realized_quadratic_variation, ProcessSpec};

/// A strictly monotone real map applied pointwise to path values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MonotoneMap {
    Exp,
    /// natural log; rejects nonpositive inputs
    Log,
    Arctan,
    CubeRoot,
    /// `x^p` for odd positive `p` (total on the real line)
    OddPower { exponent: u32 },
    /// `x³ + x`, strictly increasing with unbounded slope
    CubicPlusLinear,
    /// `a x + b`, `a != 0`; decreasing when `a < 0`
    Affine { scale: f64, shift: f64 },
    /// strictly monotone interpolation table; values outside the abscissa
    /// range are a domain violation
    Table { points: Vec<(f64, f64)> },
}

impl MonotoneMap {
    pub fn validate(&self) -> Result<()> {
        match self {
            MonotoneMap::OddPower { exponent } => {
                if exponent % 2 == 1 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter {
                        name: "exponent",
                        value: *exponent as f64,
                        constraint: "must be odd",
                    })
                }
            }
            MonotoneMap::Affine { scale, .. } => {
                if *scale != 0.0 && scale.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter {
                        name: "scale",
                        value: *scale,
                        constraint: "must be nonzero and finite",
                    })
                }
            }
            MonotoneMap::Table { points } => {
                if points.len() < 2 {
                    return Err(Error::NotMonotone);
                }
                let incr = points.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 > w[0].1);
                let decr = points.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 < w[0].1);
                if incr || decr {
                    Ok(())
                } else {
                    Err(Error::NotMonotone)
                }
            }
            _ => Ok(()),
        }
    }

    /// True if the map is increasing (after validation).
    pub fn is_increasing(&self) -> bool {
        match self {
            MonotoneMap::Affine { scale, .. } => *scale > 0.0,
            MonotoneMap::Table { points } => points[1].1 > points[0].1,
            _ => true,
        }
    }

    pub fn apply(&self, x: f64) -> Result<f64> {
        Ok(match self {
            MonotoneMap::Exp => x.exp(),
            MonotoneMap::Log => {
                if x <= 0.0 {
                    return Err(Error::DomainViolation(format!("log of {x}")));
                }
                x.ln()
            }
            MonotoneMap::Arctan => x.atan(),
            MonotoneMap::CubeRoot => x.cbrt(),
            MonotoneMap::OddPower { exponent } => x.powi(*exponent as i32),
            MonotoneMap::CubicPlusLinear => x * x * x + x,
            MonotoneMap::Affine { scale, shift } => scale * x + shift,
            MonotoneMap::Table { points } => {
                let lo = points.first().unwrap().0;
                let hi = points.last().unwrap().0;
                if x < lo || x > hi {
                    return Err(Error::DomainViolation(format!(
                        "{x} outside table range [{lo}, {hi}]"
                    )));
                }
                let k = points.partition_point(|p| p.0 <= x).min(points.len() - 1);
                let (x0, y0) = points[k - 1];
                let (x1, y1) = points[k];
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        })
    }
}

/// Pointwise image of a path under a strictly monotone map. Strict
/// monotonicity is re-verified on a dense probe grid spanning the path's
/// value range before any value is transformed.
pub fn apply_monotone(map: &MonotoneMap, path: &Path) -> Result<Path> {
    map.validate()?;
    let lo = path.values().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = path.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        let probes = 1024;
        let mut prev = map.apply(lo)?;
        for k in 1..=probes {
            let x = lo + (hi - lo) * k as f64 / probes as f64;
            let y = map.apply(x)?;
            let ordered = if map.is_increasing() { y > prev } else { y < prev };
            if !ordered {
                return Err(Error::NotMonotone);
            }
            prev = y;
        }
    }
    let values: Result<Vec<f64>> = path.values().iter().map(|&v| map.apply(v)).collect();
    Path::new(path.grid(), values?)
}

/// A per-path continuous change of time: the nondecreasing `ν` sampled on a
/// grid, with its right-continuous inverse `C_s = inf{t : ν_t > s}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeChange {
    grid: TimeGrid,
    nu: Vec<f64>,
}

impl TimeChange {
    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn nu(&self, i: usize) -> f64 {
        self.nu[i]
    }

    pub fn nu_values(&self) -> &[f64] {
        &self.nu
    }

    /// Right-continuous inverse on the grid: the first grid time whose `ν`
    /// value strictly exceeds `s`; the horizon when `s` is never exceeded.
    pub fn inverse_at(&self, s: f64) -> f64 {
        match self.nu.iter().position(|&v| v > s) {
            Some(i) => self.grid.time(i),
            None => self.grid.horizon(),
        }
    }

    /// Left inverse index: the first grid index whose `ν` value reaches `s`.
    pub fn first_index_reaching(&self, s: f64) -> Option<usize> {
        self.nu.iter().position(|&v| v >= s)
    }
}

/// Build a time change from a nondecreasing base (a deterministic
/// nondecreasing path or a realized quadratic variation).
pub fn build_time_change(base: &Path) -> Result<TimeChange> {
    if base.values().windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::DecreasingTimeChange);
    }
    if base.value(0) != 0.0 {
        return Err(Error::InvalidGrid("a time change must start at 0".into()));
    }
    Ok(TimeChange {
        grid: base.grid(),
        nu: base.values().to_vec(),
    })
}

pub fn build_time_change_from_qv(qv: &QvPath) -> TimeChange {
    TimeChange {
        grid: qv.grid(),
        nu: qv.values().to_vec(),
    }
}

/// Identity time change `ν_t = t` on a grid.
pub fn identity_time_change(grid: TimeGrid) -> TimeChange {
    TimeChange {
        grid,
        nu: grid.times().collect(),
    }
}

/// Resample `X̃_t = X_{ν_t}` with the nearest-left grid lookup, which keeps
/// the resampled path adapted to the time-changed filtration.
pub fn time_change_path(path: &Path, tc: &TimeChange) -> Result<Path> {
    let horizon = path.grid().horizon();
    let mut values = Vec::with_capacity(tc.grid.len());
    for &s in &tc.nu {
        if s > horizon * (1.0 + 1e-12) {
            return Err(Error::RangeOverflow { value: s, horizon });
        }
        values.push(path.value(path.grid().index_at_or_before(s)));
    }
    Path::new(tc.grid, values)
}

/// `Z = S + QV^α` computed pathwise; `0^α := 0` for `α > 0`.
pub fn qv_drift_from(path: &Path, qv: &QvPath, alpha: f64) -> Path {
    let values = path
        .values()
        .iter()
        .zip(qv.values())
        .map(|(s, q)| s + if *q == 0.0 { 0.0 } else { q.powf(alpha) })
        .collect();
    Path::new(path.grid(), values).expect("grid-length values")
}

/// Sample the base process and superimpose the powered realized quadratic
/// variation. `α >= 1/2` is the regime in which the construction is known to
/// exclude arbitrage; other exponents are allowed for exploration.
pub fn qv_drift_process(spec: &ProcessSpec, alpha: f64, grid: TimeGrid, seed: u64) -> Result<Path> {
    let s = crate::procgen::sample(spec, grid, seed)?;
    let qv = realized_quadratic_variation(&s);
    Ok(qv_drift_from(&s, &qv, alpha))
}

/// True when the drift exponent is inside the no-arbitrage regime.
pub fn alpha_in_no_arbitrage_regime(alpha: f64) -> bool {
    alpha >= 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::procgen::{sample_batch, sample_brownian};
    use crate::stats;
    use approx::assert_relative_eq;

    #[test]
    fn identity_and_exp_maps() {
        let grid = TimeGrid::new(1.0, 64).unwrap();
        let p = sample_brownian(grid, 4);
        let id = apply_monotone(&MonotoneMap::Affine { scale: 1.0, shift: 0.0 }, &p).unwrap();
        assert_eq!(id, p);
        let g = apply_monotone(&MonotoneMap::Exp, &p).unwrap();
        for (a, b) in g.values().iter().zip(p.values()) {
            assert_relative_eq!(*a, b.exp(), epsilon = 1e-15);
        }
    }

    #[test]
    fn cube_root_preserves_increment_signs() {
        let grid = TimeGrid::new(1.0, 256).unwrap();
        let p = sample_brownian(grid, 5);
        let y = apply_monotone(&MonotoneMap::CubeRoot, &p).unwrap();
        for (dy, dp) in y.increments().zip(p.increments()) {
            assert_eq!(dy.signum(), dp.signum());
        }
    }

    #[test]
    fn increment_sign_preservation_over_all_pairs() {
        let grid = TimeGrid::new(1.0, 32).unwrap();
        let p = sample_brownian(grid, 6);
        for map in [
            MonotoneMap::Exp,
            MonotoneMap::Arctan,
            MonotoneMap::CubicPlusLinear,
            MonotoneMap::OddPower { exponent: 3 },
        ] {
            let y = apply_monotone(&map, &p).unwrap();
            for i in 0..p.len() {
                for j in (i + 1)..p.len() {
                    let s0 = (p.value(j) - p.value(i)).signum();
                    let s1 = (y.value(j) - y.value(i)).signum();
                    assert_eq!(s0, s1, "{map:?} at ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn decreasing_affine_reverses_signs() {
        let grid = TimeGrid::new(1.0, 64).unwrap();
        let p = sample_brownian(grid, 7);
        let map = MonotoneMap::Affine { scale: -2.0, shift: 1.0 };
        assert!(!map.is_increasing());
        let y = apply_monotone(&map, &p).unwrap();
        for (dy, dp) in y.increments().zip(p.increments()) {
            assert_eq!(dy.signum(), -dp.signum());
        }
    }

    #[test]
    fn domain_violations_are_rejected() {
        let grid = TimeGrid::new(1.0, 16).unwrap();
        let p = sample_brownian(grid, 8); // takes negative values a.s.
        assert!(matches!(
            apply_monotone(&MonotoneMap::Log, &p),
            Err(Error::DomainViolation(_))
        ));
        let table = MonotoneMap::Table { points: vec![(0.0, 0.0), (1.0, 0.5)] };
        assert!(apply_monotone(&table, &p).is_err());
    }

    #[test]
    fn non_monotone_tables_are_rejected() {
        let bad = MonotoneMap::Table { points: vec![(0.0, 0.0), (1.0, 2.0), (2.0, 1.0)] };
        assert!(bad.validate().is_err());
        let good = MonotoneMap::Table { points: vec![(0.0, 3.0), (1.0, 2.0), (2.0, 1.0)] };
        assert!(good.validate().is_ok());
        assert!(!good.is_increasing());
    }

    #[test]
    fn time_change_identity_and_linear() {
        let grid = TimeGrid::new(1.0, 100).unwrap();
        let tc = identity_time_change(grid);
        assert_relative_eq!(tc.inverse_at(0.5), 0.5 + grid.dt(), epsilon = 1e-12);
        let p = sample_brownian(grid, 9);
        let same = time_change_path(&p, &tc).unwrap();
        assert_eq!(same, p);

        // ν_t = 2t on [0, 1] maps into a path on [0, 2]
        let big = TimeGrid::new(2.0, 200).unwrap();
        let x = sample_brownian(big, 10);
        let nu = Path::new(grid, grid.times().map(|t| 2.0 * t).collect()).unwrap();
        let tc2 = build_time_change(&nu).unwrap();
        // C_s = s/2 up to one grid step
        assert!((tc2.inverse_at(1.0) - 0.5).abs() <= grid.dt() + 1e-12);
        let xt = time_change_path(&x, &tc2).unwrap();
        for i in 0..=grid.steps() {
            assert_eq!(xt.value(i), x.value(big.index_at_or_before(2.0 * grid.time(i))));
        }
    }

    #[test]
    fn time_change_variance_doubles() {
        let grid = TimeGrid::new(0.5, 64).unwrap();
        let big = TimeGrid::new(1.0, 128).unwrap();
        let n = 20_000;
        let paths = sample_batch(&ProcessSpec::Brownian, big, 11, n).unwrap();
        let nu = Path::new(grid, grid.times().map(|t| 2.0 * t).collect()).unwrap();
        let tc = build_time_change(&nu).unwrap();
        let idx = grid.index_at_or_after(0.5);
        let vals: Vec<f64> = paths
            .iter()
            .map(|p| time_change_path(p, &tc).unwrap().value(idx))
            .collect();
        let var = stats::variance(&vals);
        assert!((var - 1.0).abs() < 4.0 * (2.0f64 / n as f64).sqrt(), "var = {var}");
    }

    #[test]
    fn inverse_composition_within_one_grid_step_for_qv() {
        let grid = TimeGrid::new(1.0, 4096).unwrap();
        let p = sample_brownian(grid, 12);
        let qv = realized_quadratic_variation(&p);
        let tc = build_time_change_from_qv(&qv);
        // C(ν_t) >= t with equality up to one grid step when ν is strictly
        // increasing (true a.s. for Brownian realized QV)
        for i in (0..=grid.steps()).step_by(97) {
            let t = grid.time(i);
            let c = tc.inverse_at(tc.nu(i));
            assert!(c >= t - 1e-12);
            assert!(c - t <= grid.dt() + 1e-12, "gap {} at {t}", c - t);
        }
    }

    #[test]
    fn decreasing_base_is_rejected() {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let bad = Path::new(grid, vec![0.0, 0.5, 0.25, 1.0, 1.5]).unwrap();
        assert!(matches!(build_time_change(&bad), Err(Error::DecreasingTimeChange)));
    }

    #[test]
    fn range_overflow_is_detected() {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let p = sample_brownian(grid, 13);
        let nu = Path::new(grid, grid.times().map(|t| 3.0 * t).collect()).unwrap();
        let tc = build_time_change(&nu).unwrap();
        assert!(matches!(
            time_change_path(&p, &tc),
            Err(Error::RangeOverflow { .. })
        ));
    }

    #[test]
    fn qv_drift_means_match_oracle() {
        // For Brownian S, QV_1 ~ 1, so E[Z_1] ~ 1 for α = 1 and α = 1/2.
        let grid = TimeGrid::new(1.0, 1024).unwrap();
        let n = 5000;
        for alpha in [1.0, 0.5] {
            let zs: Vec<f64> = (0..n)
                .map(|k| {
                    qv_drift_process(&ProcessSpec::Brownian, alpha, grid, 1000 + k)
                        .unwrap()
                        .terminal()
                })
                .collect();
            let m = stats::mean(&zs);
            let se = stats::standard_error(&zs);
            assert!((m - 1.0).abs() < 4.0 * se, "alpha {alpha}: mean {m}, se {se}");
        }
    }

    #[test]
    fn qv_drift_of_constant_path_is_identity() {
        let grid = TimeGrid::new(1.0, 32).unwrap();
        let flat = Path::new(grid, vec![3.0; grid.len()]).unwrap();
        let qv = realized_quadratic_variation(&flat);
        let z = qv_drift_from(&flat, &qv, 0.5);
        assert_eq!(z, flat);
    }
}
