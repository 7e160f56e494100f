//! Statistical helpers shared by the detection and acceptance machinery:
//! Gaussian CDF oracles, exact binomial (Clopper-Pearson) lower bounds,
//! Kolmogorov-Smirnov tests and weighted-mean standard errors.

use statrs::distribution::{Beta, ContinuousCDF, Normal};

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(x)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(p)
}

/// One-sided Clopper-Pearson lower confidence bound for a binomial
/// proportion: the interval `[lb, 1]` covers the true `p` with probability at
/// least `confidence`. Zero successes give a bound of exactly 0.
pub fn clopper_pearson_lower(successes: u64, trials: u64, confidence: f64) -> f64 {
    assert!(trials > 0, "clopper_pearson_lower needs at least one trial");
    assert!((0.5..1.0).contains(&confidence), "confidence must be in [0.5, 1)");
    if successes == 0 {
        return 0.0;
    }
    if successes >= trials {
        // lower endpoint of the one-sided interval for k = n
        return (1.0 - confidence).powf(1.0 / trials as f64);
    }
    let a = successes as f64;
    let b = (trials - successes + 1) as f64;
    Beta::new(a, b).unwrap().inverse_cdf(1.0 - confidence)
}

/// Kolmogorov-Smirnov statistic of a sample against a continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &mut [f64], cdf: F) -> f64 {
    assert!(!sample.is_empty());
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sample.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sample.iter().enumerate() {
        let f = cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    d
}

/// Asymptotic KS p-value `P(D_n > d)` via the Kolmogorov series.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let lambda = d * (n as f64).sqrt();
    if lambda < 1e-8 {
        return 1.0;
    }
    let mut p = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64).powi(2) * lambda * lambda).exp();
        p += if k % 2 == 1 { 2.0 * term } else { -2.0 * term };
    }
    p.clamp(0.0, 1.0)
}

/// Sample mean.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of the sample mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Sample correlation coefficient.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Weighted mean and its standard error under normalized importance weights.
///
/// Returns `(mean, se)` with `mean = sum(w x) / sum(w)` and the linearized
/// variance estimate for the ratio estimator.
pub fn weighted_mean_se(xs: &[f64], ws: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ws.len());
    let wsum: f64 = ws.iter().sum();
    let m = xs.iter().zip(ws).map(|(x, w)| x * w).sum::<f64>() / wsum;
    let var_num: f64 = xs
        .iter()
        .zip(ws)
        .map(|(x, w)| (w * (x - m)).powi(2))
        .sum();
    (m, var_num.sqrt() / wsum)
}
