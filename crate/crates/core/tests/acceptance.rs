//! Acceptance suite: one test per criterion, each printing a single
//! `PASS`/`FAIL` line. Run with `cargo test --test acceptance -- --nocapture`
//! to see the lines; every tolerance is pinned in code.

use noarb_core::detect::{
    arbitrage_search_on_paths, deterministic_interval_family, hitting_interval_family,
    increment_sign_test, reachability_test, sign_test_on_paths, DEFAULT_ZERO_TOL,
};
use noarb_core::dmw::{random_tree, solve_tree, verify_certificate, Certificate, ScenarioTree};
use noarb_core::frackernel::{
    fractional_derivative, girsanov_density, InverseExponent, KernelGrid,
};
use noarb_core::hedge::{cc_rebalance_hedge, project_to_cc, HedgeModel, PayoffSpec};
use noarb_core::procgen::{
    fbm_covariance, realized_quadratic_variation, sample_batch, sample_fbm_batch,
    sample_ito_quadratic, sample_tanaka, FbmMethod, ProcessSpec,
};
use noarb_core::rng::{single_rng, stream_rng};
use noarb_core::stats;
use noarb_core::strategy::{
    evaluate_stop_single, gains, CmpOp, Direction, EventSpec, PositionExpr, PrefixExpr,
    SimpleStrategy, StoppingRule,
};
use noarb_core::xform::{apply_monotone, build_time_change_from_qv, time_change_path, MonotoneMap, TimeChange};
use noarb_core::{Path, TimeGrid};

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {id:>2} [{}] {name}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

/// 1. fBm covariance law at three Hurst exponents, ten time pairs, 4 SE.
#[test]
fn criterion_01_fbm_covariance_law() {
    let start = std::time::Instant::now();
    let grid = TimeGrid::new(1.0, 256).unwrap();
    let n = 20_000;
    let pairs = [
        (0.125, 0.875),
        (0.25, 0.25),
        (0.25, 0.5),
        (0.25, 1.0),
        (0.5, 0.5),
        (0.5, 0.75),
        (0.5, 1.0),
        (0.75, 0.75),
        (0.75, 1.0),
        (1.0, 1.0),
    ];
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for (hi, hurst) in [0.3, 0.5, 0.7].into_iter().enumerate() {
        let paths =
            sample_fbm_batch(hurst, grid, 100 + hi as u64, n, FbmMethod::ExactCholesky).unwrap();
        for &(s, t) in &pairs {
            let i = grid.index_at_or_after(s);
            let j = grid.index_at_or_after(t);
            let emp: f64 =
                paths.iter().map(|p| p.value(i) * p.value(j)).sum::<f64>() / n as f64;
            let truth = fbm_covariance(hurst, s, t);
            if hurst == 0.5 {
                assert!(
                    (truth - s.min(t)).abs() < 1e-14,
                    "H=1/2 law must reduce to min(s,t)"
                );
            }
            let vs = fbm_covariance(hurst, s, s);
            let vt = fbm_covariance(hurst, t, t);
            let se = ((vs * vt + truth * truth) / n as f64).sqrt();
            let z = (emp - truth).abs() / se;
            worst = worst.max(z);
            if z >= 4.0 {
                pass = false;
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = pass && elapsed < 120.0;
    report(
        1,
        "fBm covariance law",
        pass,
        &format!("worst |z| = {worst:.2} over 30 pair tests, {elapsed:.1}s"),
    );
}

/// 2. Deterministic arbitrage certificate on the quadratic process: holding
/// one unit over (0, 0.25] gains at least 0.125 minus the measured
/// discrete-sum correction on every path.
#[test]
fn criterion_02_quadratic_process_certificate() {
    let grid = TimeGrid::new(1.0, 1024).unwrap();
    let h = 0.25;
    let k = grid.index_at_or_after(h);
    let n = 10_000;
    let strategy = SimpleStrategy::interval(
        StoppingRule::deterministic(0.0),
        StoppingRule::deterministic(h),
        PositionExpr::constant(1.0),
        h,
    )
    .unwrap();
    let mut ok = 0usize;
    let mut min_margin = f64::INFINITY;
    for seed in 0..n {
        let iq = sample_ito_quadratic(grid, seed as u64);
        let gain = gains(&strategy, &iq.x).unwrap().terminal;
        let qv_h = realized_quadratic_variation(&iq.driver).value(k);
        let slack = 0.5 * (qv_h - h).max(0.0);
        let margin = gain - (h / 2.0 - slack);
        min_margin = min_margin.min(margin);
        if margin >= -1e-12 {
            ok += 1;
        }
    }
    report(
        2,
        "early-interval certificate on the quadratic process",
        ok == n,
        &format!("{ok}/{n} paths, min margin {min_margin:.3e}"),
    );
}

/// 3. Buy-and-hold on |B|: gains nonnegative on all paths, positive on 99%.
#[test]
fn criterion_03_reflected_path_certificate() {
    let grid = TimeGrid::new(1.0, 256).unwrap();
    let n = 10_000;
    let mut nonneg = 0usize;
    let mut positive = 0usize;
    for seed in 0..n {
        let t = sample_tanaka(grid, seed as u64, None).unwrap();
        let gain = t.abs.terminal() - t.abs.value(0);
        if gain >= 0.0 {
            nonneg += 1;
        }
        if gain > 0.0 {
            positive += 1;
        }
    }
    let pass = nonneg == n && positive * 100 >= n * 99;
    report(
        3,
        "buy-and-hold certificate on |B|",
        pass,
        &format!("nonneg {nonneg}/{n}, positive {positive}/{n}"),
    );
}

/// 4. The windowed excursion estimate dominates the independence chaining
/// bound computed from the Gaussian CDF.
#[test]
fn criterion_04_chaining_lower_bound() {
    let grid = TimeGrid::new(1.0, 512).unwrap();
    let n = 100_000;
    let c = 0.5;
    let h = 0.1;
    let r = reachability_test(
        &ProcessSpec::Brownian,
        grid,
        &StoppingRule::deterministic(0.0),
        0.5,
        h,
        1.0,
        c,
        &EventSpec::Always,
        n,
        0.999,
        104,
    )
    .unwrap();
    let bound = stats::normal_cdf(-2.0 * c / h.sqrt())
        * (2.0 * stats::normal_cdf(c / (1.0f64 - h).sqrt()) - 1.0);
    let se = (r.p_sup_below * (1.0 - r.p_sup_below) / n as f64).sqrt();
    let pass = r.p_sup_below - 3.0 * se > bound;
    report(
        4,
        "chaining lower bound for the window event",
        pass,
        &format!(
            "estimate {:.5} - 3se {:.5} vs bound {bound:.6}",
            r.p_sup_below,
            3.0 * se
        ),
    );
}

/// 5. Conditioned two-sided reachability for persistent fBm after a hitting
/// time: both tails certified positive at confidence 0.999.
#[test]
fn criterion_05_fbm_reachability() {
    let grid = TimeGrid::new(1.0, 256).unwrap();
    let tau = StoppingRule::hitting(0.3, Direction::Up).truncated(0.5);
    let event = EventSpec::Compare {
        lhs: PrefixExpr::RunningMin,
        op: CmpOp::Gt,
        rhs: -0.4,
    };
    let r = reachability_test(
        &ProcessSpec::Fbm { hurst: 0.7 },
        grid,
        &tau,
        0.5,
        0.1,
        0.5,
        0.2,
        &event,
        50_000,
        0.999,
        105,
    )
    .unwrap();
    let nontrivial = r.conditioning_frequency > 0.0 && r.conditioning_frequency < 1.0;
    let pass = r.lb_up > 0.0 && r.lb_down > 0.0 && nontrivial;
    report(
        5,
        "fBm reachability after a hitting time",
        pass,
        &format!(
            "lb_up {:.4}, lb_down {:.4}, conditioning frequency {:.3}",
            r.lb_up, r.lb_down, r.conditioning_frequency
        ),
    );
}

/// Independent one-step dominance oracle used by criteria 6 and 7.
fn oracle_has_arbitrage(tree: &ScenarioTree) -> bool {
    tree.inner_nodes().any(|i| {
        let p = tree.node(i).price;
        let signs: Vec<i8> = tree
            .node(i)
            .children
            .iter()
            .map(|&c| {
                let d = tree.node(c).price - p;
                let tol = 1e-9 * p.abs().max(tree.node(c).price.abs()).max(1.0);
                if d > tol {
                    1
                } else if d < -tol {
                    -1
                } else {
                    0
                }
            })
            .collect();
        let has_up = signs.iter().any(|&s| s > 0);
        let has_down = signs.iter().any(|&s| s < 0);
        (has_up && !has_down) || (has_down && !has_up)
    })
}

fn seeded_trees(count: usize) -> Vec<ScenarioTree> {
    use rand::Rng;
    let mut rng = single_rng(106);
    (0..count)
        .map(|_| {
            let levels = rng.gen_range(1..=3);
            random_tree(&mut rng, levels, 3)
        })
        .collect()
}

/// 6. Solver verdicts match the brute-force oracle on 200 seeded trees;
/// certificates verify; adversarial perturbations fail verification.
#[test]
fn criterion_06_tree_solver_soundness() {
    let trees = seeded_trees(200);
    let mut matched = 0usize;
    let mut verified = 0usize;
    let mut rejected = 0usize;
    for tree in &trees {
        let cert = solve_tree(tree).unwrap();
        if !cert.is_martingale() == oracle_has_arbitrage(tree) {
            matched += 1;
        }
        if verify_certificate(tree, &cert).unwrap() {
            verified += 1;
        }
        let perturbed_fails = match &cert {
            Certificate::Martingale(m) => {
                let mut bad = m.clone();
                let victim = tree.node(tree.root()).children[0];
                bad.weights[victim] += 1e-3;
                !verify_certificate(tree, &Certificate::Martingale(bad)).unwrap()
            }
            Certificate::Arbitrage(a) => {
                let mut bad = a.clone();
                bad.positions[a.witness_node] = -bad.positions[a.witness_node];
                let flipped = !verify_certificate(tree, &Certificate::Arbitrage(bad)).unwrap();
                let mut zeroed = a.clone();
                zeroed.positions[a.witness_node] = 0.0;
                let nulled = !verify_certificate(tree, &Certificate::Arbitrage(zeroed)).unwrap();
                flipped && nulled
            }
        };
        if perturbed_fails {
            rejected += 1;
        }
    }
    let n = trees.len();
    let pass = matched == n && verified == n && rejected == n;
    report(
        6,
        "tree solver soundness against the brute-force oracle",
        pass,
        &format!("matched {matched}/{n}, verified {verified}/{n}, perturbations rejected {rejected}/{n}"),
    );
}

/// 7. Strictly increasing price maps never change the certificate type, and
/// sign-test classifications are unchanged under identical seeds.
#[test]
fn criterion_07_monotone_invariance() {
    let maps = [
        MonotoneMap::Exp,
        MonotoneMap::CubicPlusLinear,
        MonotoneMap::Arctan,
    ];
    let trees = seeded_trees(200);
    let mut tree_ok = 0usize;
    for tree in &trees {
        let base = solve_tree(tree).unwrap().is_martingale();
        let invariant = maps.iter().all(|map| {
            let mut mapped = ScenarioTree::new(map.apply(tree.node(0).price).unwrap());
            for i in 1..tree.len() {
                let node = tree.node(i);
                mapped.add_child(
                    node.parent.unwrap(),
                    node.prob,
                    map.apply(node.price).unwrap(),
                );
            }
            solve_tree(&mapped).unwrap().is_martingale() == base
        });
        if invariant {
            tree_ok += 1;
        }
    }

    let grid = TimeGrid::new(1.0, 256).unwrap();
    let tau0 = StoppingRule::deterministic(0.25);
    let tau1 = StoppingRule::deterministic(0.75);
    let mut sign_ok = true;
    for (spec, seed) in [
        (ProcessSpec::Brownian, 107u64),
        (ProcessSpec::ItoQuadratic, 108),
        (ProcessSpec::Fbm { hurst: 0.7 }, 109),
    ] {
        let paths = sample_batch(&spec, grid, seed, 2000).unwrap();
        let base =
            sign_test_on_paths(&paths, &tau0, &tau1, &EventSpec::Always, 0.999, DEFAULT_ZERO_TOL)
                .unwrap();
        for map in &maps {
            let mapped: Vec<Path> =
                paths.iter().map(|p| apply_monotone(map, p).unwrap()).collect();
            let v = sign_test_on_paths(
                &mapped,
                &tau0,
                &tau1,
                &EventSpec::Always,
                0.999,
                DEFAULT_ZERO_TOL,
            )
            .unwrap();
            if v.class != base.class || v.n_pos != base.n_pos || v.n_neg != base.n_neg {
                sign_ok = false;
            }
        }
    }
    let pass = tree_ok == trees.len() && sign_ok;
    report(
        7,
        "exact invariance under strictly increasing maps",
        pass,
        &format!("trees invariant {tree_ok}/{}, sign tests invariant: {sign_ok}", trees.len()),
    );
}

/// 8. Time-change correspondence: interval-strategy gains transfer between
/// the base path and the resampled path exactly (tolerance 1e-12), for the
/// identity, a linear change, and the realized quadratic variation.
#[test]
fn criterion_08_time_change_gains_correspondence() {
    let n = 2000;
    let mut worst: f64 = 0.0;

    // stops on the resampled clock at fixed times 0.25 and 0.75
    let check_nu_direction = |x: &Path, tc: &TimeChange, worst: &mut f64| {
        let tgrid = tc.grid();
        let i0 = tgrid.index_at_or_after(0.25);
        let i1 = tgrid.index_at_or_after(0.75);
        let xt = time_change_path(x, tc).unwrap();
        let gain_changed = xt.value(i1) - xt.value(i0);
        let xg = x.grid();
        let j0 = xg.index_at_or_before(tc.nu(i0));
        let j1 = xg.index_at_or_before(tc.nu(i1));
        let gain_base = x.value(j1) - x.value(j0);
        *worst = (*worst).max((gain_changed - gain_base).abs());
    };

    // identity
    let grid1 = TimeGrid::new(1.0, 1024).unwrap();
    for k in 0..n {
        let x = noarb_core::procgen::sample_brownian(grid1, 200_000 + k);
        let nu = Path::new(grid1, grid1.times().collect()).unwrap();
        let tc = noarb_core::xform::build_time_change(&nu).unwrap();
        check_nu_direction(&x, &tc, &mut worst);
        // inverse direction: base-clock stops mapped through the inverse
        let xt = time_change_path(&x, &tc).unwrap();
        for sigma in [0.25, 0.75] {
            let ci = tc.first_index_reaching(sigma).unwrap();
            let xi = grid1.index_at_or_before(sigma);
            let d = (xt.value(ci) - x.value(xi)).abs();
            worst = worst.max(d);
        }
    }

    // linear speed-up: the base path lives on [0, 2]
    let grid_x = TimeGrid::new(2.0, 2048).unwrap();
    let grid_t = TimeGrid::new(1.0, 1024).unwrap();
    for k in 0..n {
        let x = noarb_core::procgen::sample_brownian(grid_x, 300_000 + k);
        let nu = Path::new(grid_t, grid_t.times().map(|t| 2.0 * t).collect()).unwrap();
        let tc = noarb_core::xform::build_time_change(&nu).unwrap();
        check_nu_direction(&x, &tc, &mut worst);
        let xt = time_change_path(&x, &tc).unwrap();
        for sigma in [0.5, 1.5] {
            let ci = tc.first_index_reaching(sigma).unwrap();
            let xi = grid_x.index_at_or_before(sigma);
            let d = (xt.value(ci) - x.value(xi)).abs();
            worst = worst.max(d);
        }
    }

    // realized quadratic variation of the path's own first unit of time
    let grid_x = TimeGrid::new(3.0, 3072).unwrap();
    for k in 0..n {
        let x = noarb_core::procgen::sample_brownian(grid_x, 400_000 + k);
        let head = x.prefix(1024).unwrap();
        let qv = realized_quadratic_variation(&head);
        let tc = build_time_change_from_qv(&qv);
        check_nu_direction(&x, &tc, &mut worst);
    }

    let pass = worst <= 1e-12;
    report(
        8,
        "time-change gains correspondence",
        pass,
        &format!("worst pathwise gap {worst:.3e} over {} comparisons", 3 * n),
    );
}

/// 9. Kernel-built process matches the direct fBm law within 5% relative at
/// the pinned time pairs, and the fractional derivative reproduces the
/// power-function closed form to three digits.
#[test]
fn criterion_09_kernel_representation() {
    let hurst = 0.7;
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let kg = KernelGrid::new(hurst, grid).unwrap();
    let n = 20_000;
    use rayon::prelude::*;
    let samples: Vec<Path> = (0..n)
        .into_par_iter()
        .map(|k| kg.sample(&mut stream_rng(110, k as u64)).0)
        .collect();
    let mut cov_ok = true;
    let mut worst_rel: f64 = 0.0;
    for (s, t) in [(0.5, 0.5), (0.5, 1.0), (1.0, 1.0)] {
        let i = grid.index_at_or_after(s);
        let j = grid.index_at_or_after(t);
        let emp: f64 = samples.iter().map(|p| p.value(i) * p.value(j)).sum::<f64>() / n as f64;
        let law = fbm_covariance(hurst, s, t);
        let rel = (emp - law).abs() / law;
        worst_rel = worst_rel.max(rel);
        if rel >= 0.05 {
            cov_ok = false;
        }
    }

    let dgrid = TimeGrid::new(1.0, 512).unwrap();
    let f: Vec<f64> = dgrid.times().collect();
    let d = fractional_derivative(&f, dgrid, hurst).unwrap();
    let mut deriv_ok = true;
    for t in [0.5, 1.0] {
        let i = dgrid.index_at_or_after(t);
        let oracle = t.powf(0.8) / statrs::function::gamma::gamma(1.8);
        if (d.values[i] - oracle).abs() / oracle >= 1e-3 {
            deriv_ok = false;
        }
    }
    let pass = cov_ok && deriv_ok;
    report(
        9,
        "kernel representation and fractional derivative",
        pass,
        &format!("worst covariance rel err {worst_rel:.4}, derivative 3-digit match: {deriv_ok}"),
    );
}

/// 10. Density process: exactly one for zero drift; unit mean and full drift
/// removal for a constant drift under the persistent kernel.
#[test]
fn criterion_10_density_process() {
    let hurst = 0.7;
    let grid = TimeGrid::new(1.0, 128).unwrap();
    let b = noarb_core::procgen::sample_brownian(grid, 111);
    let flat = girsanov_density(&vec![0.0; grid.len()], &b, hurst, InverseExponent::Standard).unwrap();
    let exact_one = flat.lambda.iter().all(|&l| l == 1.0);

    let kg = KernelGrid::new(hurst, grid).unwrap();
    let m = 0.5;
    let mu = vec![m; grid.len()];
    let n = 10_000;
    use rayon::prelude::*;
    let rows: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|k| {
            let (fbm, driver) = kg.sample(&mut stream_rng(112, k as u64));
            let d = girsanov_density(&mu, &driver, hurst, InverseExponent::Standard).unwrap();
            (fbm.terminal() + m * grid.horizon(), d.terminal())
        })
        .collect();
    let lambdas: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let mean_lambda = stats::mean(&lambdas);
    let xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let (wm, wse) = stats::weighted_mean_se(&xs, &lambdas);
    let pass = exact_one && (0.95..=1.05).contains(&mean_lambda) && wm.abs() < 4.0 * wse;
    report(
        10,
        "drift-removal density",
        pass,
        &format!(
            "zero drift exact: {exact_one}, E[Λ_1] = {mean_lambda:.4}, reweighted drift {wm:.4} (4se = {:.4})",
            4.0 * wse
        ),
    );
}

/// 11. Spacing projection: the projected strategy satisfies the holding
/// period on every path, agrees exactly on paths without a violation, and
/// modifies exactly the violating evaluations.
#[test]
fn criterion_11_projection() {
    let grid = TimeGrid::new(1.0, 200).unwrap();
    let paths = sample_batch(&ProcessSpec::Brownian, grid, 113, 5000).unwrap();
    let stops: Vec<StoppingRule> = (1..=4)
        .map(|k| StoppingRule::hitting(0.1 * k as f64, Direction::Up).truncated(1.0))
        .collect();
    let base = SimpleStrategy::new(
        stops,
        vec![
            PositionExpr::constant(1.0),
            PositionExpr::constant(2.0),
            PositionExpr::constant(-1.0),
        ],
        0.0,
    )
    .unwrap();
    let delta0 = 0.05;
    let (projected, stats_out) = project_to_cc(&base, delta0, &paths).unwrap();
    let m = noarb_core::strategy::spacing_steps(delta0, grid.dt());
    let mut spaced = 0usize;
    let mut faithful = true;
    let mut touched_matches_violations = true;
    for p in &paths {
        let (eval, violated) = projected.evaluate(p).unwrap();
        if eval.stop_indices.windows(2).all(|w| w[1] - w[0] >= m) {
            spaced += 1;
        }
        let base_eval = base.evaluate(&[p]).unwrap();
        let changed = eval != base_eval;
        if changed != violated {
            touched_matches_violations = false;
        }
        if !violated {
            let a = noarb_core::strategy::gains(&base, p).unwrap().terminal;
            let b = projected.gains(p).unwrap().terminal;
            if a != b {
                faithful = false;
            }
        }
    }
    let pass = spaced == paths.len()
        && faithful
        && touched_matches_violations
        && stats_out.violation_fraction > 0.0;
    report(
        11,
        "projection onto the spaced class",
        pass,
        &format!(
            "spaced {spaced}/{}, untouched gains exact: {faithful}, modified set == violating set: {touched_matches_violations}, violation fraction {:.3}",
            paths.len(),
            stats_out.violation_fraction
        ),
    );
}

/// 12. Call-hedging error decreases with the rebalancing interval: at most
/// one inversion across {1/16, 1/64, 1/256} and strictly smaller at 1/256.
#[test]
fn criterion_12_hedging_error_trend() {
    let grid = TimeGrid::new(1.0, 1024).unwrap();
    let payoff = PayoffSpec::Call { strike: 0.2 };
    let n = 20_000;
    let spacings = [1.0 / 16.0, 1.0 / 64.0, 1.0 / 256.0];
    let rms: Vec<f64> = spacings
        .iter()
        .map(|&h| {
            cc_rebalance_hedge(&payoff, HedgeModel::Brownian, h, grid, n, 114)
                .unwrap()
                .rms_error
        })
        .collect();
    let inversions = rms.windows(2).filter(|w| w[1] > w[0]).count();
    let pass = inversions <= 1 && rms[2] < rms[0];
    report(
        12,
        "hedging error trend",
        pass,
        &format!(
            "rms = [{:.4}, {:.4}, {:.4}], inversions {inversions}",
            rms[0], rms[1], rms[2]
        ),
    );
}

/// 13. Negative control: persistent fBm plus a bounded deterministic
/// perturbation is not flagged by the interval-strategy search.
#[test]
fn criterion_13_search_negative_control() {
    let grid = TimeGrid::new(1.0, 256).unwrap();
    let n = 20_000;
    let hold = 0.1;
    let base = sample_fbm_batch(0.7, grid, 115, n, FbmMethod::ExactCholesky).unwrap();
    // bounded perturbation: a clipped sine of amplitude 0.05
    let paths: Vec<Path> = base
        .into_iter()
        .map(|p| {
            let values = p
                .values()
                .iter()
                .zip(p.grid().times())
                .map(|(v, t)| {
                    let wave = 0.05 * (2.0 * std::f64::consts::PI * 2.0 * t).sin();
                    v + wave.clamp(-0.05, 0.05)
                })
                .collect();
            Path::new(p.grid(), values).unwrap()
        })
        .collect();
    let mut family = deterministic_interval_family(&[0.0, 0.15, 0.3, 0.45, 0.6, 0.75], hold, 1.0);
    family.extend(hitting_interval_family(&[0.2, -0.2, 0.4], hold, 0.85, 1.0));
    let reportx = arbitrage_search_on_paths(&paths, &family, 1e-9, 0.999).unwrap();
    let pass = reportx.arbitrage_found.is_none();
    let best = &reportx.candidates[reportx.best_index];
    report(
        13,
        "search negative control on perturbed fBm",
        pass,
        &format!(
            "no candidate flagged over {} candidates; best nonneg fraction {:.3}",
            reportx.candidates.len(),
            best.nonneg_fraction
        ),
    );
}

/// Sanity check used by the suite itself: the two detect entry points agree.
#[test]
fn sign_test_entry_points_agree() {
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let spec = ProcessSpec::Brownian;
    let tau0 = StoppingRule::deterministic(0.2);
    let tau1 = StoppingRule::deterministic(0.8);
    let a = increment_sign_test(
        &spec,
        grid,
        &tau0,
        &tau1,
        &EventSpec::Always,
        500,
        0.999,
        DEFAULT_ZERO_TOL,
        9,
    )
    .unwrap();
    let paths = sample_batch(&spec, grid, 9, 500).unwrap();
    let b = sign_test_on_paths(&paths, &tau0, &tau1, &EventSpec::Always, 0.999, DEFAULT_ZERO_TOL)
        .unwrap();
    assert_eq!(a, b);
    // and stop evaluation is consistent with direct indexing
    let i = evaluate_stop_single(&tau0, &paths[0]).unwrap();
    assert_eq!(i, 13); // ceil(0.2 * 64)
}
