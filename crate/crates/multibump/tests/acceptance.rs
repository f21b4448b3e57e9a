//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! The expensive configurations (the two production weights at N = 2049) are
//! computed once and shared across criteria.

use multibump::classify::{self, ClassifierConfig, VerifyStatus};
use multibump::continuation::{self, ContinuationConfig};
use multibump::greens;
use multibump::index_set::IndexSet;
use multibump::io;
use multibump::newton::{self, NewtonConfig};
use multibump::shooting::{self, LiouvilleProblem, ScanConfig, SolutionSet};
use multibump::weight::{Weight, WeightSpec};
use multibump::{Grid64, Weight64};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

const P: f64 = 3.0;

fn sin_weight(m: u32) -> Weight64 {
    Weight::build(&WeightSpec::SinMultibump { m, length: 1.0 }).unwrap()
}

struct N2Context {
    weight: Weight64,
    grid: Grid64,
    newton_set: SolutionSet<f64>,
    shooting_set: SolutionSet<f64>,
    elapsed: Duration,
}

fn n2() -> &'static N2Context {
    static CTX: OnceLock<N2Context> = OnceLock::new();
    CTX.get_or_init(|| {
        let weight = sin_weight(3);
        let grid = Grid64::new(2049, 1.0).unwrap();
        let start = Instant::now();
        let newton_set = newton::solve_all(
            -80.0,
            &weight,
            P,
            &grid,
            &NewtonConfig::default(),
            &ClassifierConfig::default(),
        )
        .unwrap()
        .set;
        let shooting_set =
            shooting::enumerate_solutions(-80.0, &weight, P, &grid, &ScanConfig::default())
                .unwrap();
        let elapsed = start.elapsed();
        N2Context { weight, grid, newton_set, shooting_set, elapsed }
    })
}

struct SweepRow {
    lambda: f64,
    set: SolutionSet<f64>,
    occupied: usize,
}

struct N3Context {
    rows: Vec<SweepRow>,
    lambda_c: Option<f64>,
    elapsed: Duration,
}

fn n3() -> &'static N3Context {
    static CTX: OnceLock<N3Context> = OnceLock::new();
    CTX.get_or_init(|| {
        let weight = sin_weight(5);
        let grid = Grid64::new(2049, 1.0).unwrap();
        let lambdas = [-40.0, -80.0, -160.0, -320.0];
        let start = Instant::now();
        let mut rows = Vec::new();
        for &lambda in &lambdas {
            let set = newton::solve_all(
                lambda,
                &weight,
                P,
                &grid,
                &NewtonConfig::default(),
                &ClassifierConfig::default(),
            )
            .unwrap()
            .set;
            let mut boxes: Vec<IndexSet> = set
                .entries
                .iter()
                .filter_map(|e| e.index_set.clone())
                .filter(|s| !s.is_empty())
                .collect();
            boxes.sort();
            boxes.dedup();
            rows.push(SweepRow { lambda, occupied: boxes.len(), set });
        }
        let elapsed = start.elapsed();
        let mut lambda_c = None;
        for start_idx in 0..rows.len() {
            if rows[start_idx..].iter().all(|r| r.occupied == 7) {
                lambda_c = Some(rows[start_idx].lambda);
                break;
            }
        }
        N3Context { rows, lambda_c, elapsed }
    })
}

fn boxes_of(set: &SolutionSet<f64>) -> Vec<String> {
    let mut v: Vec<String> = set
        .entries
        .iter()
        .filter_map(|e| e.index_set.as_ref())
        .map(|s| s.to_string())
        .collect();
    v.sort();
    v.dedup();
    v
}

#[test]
fn criterion_01_multiplicity_n2() {
    let ctx = n2();
    let classifier = ClassifierConfig::default().with_r_cap_from(&ctx.shooting_set);

    let mut shooting = ctx.shooting_set.clone();
    for e in &mut shooting.entries {
        e.index_set =
            Some(classify::classify(&e.profile, ctx.weight.pattern(), &classifier).unwrap());
    }

    let nb = boxes_of(&ctx.newton_set);
    let sb = boxes_of(&shooting);
    let want = ["{1}".to_string(), "{1,2}".to_string(), "{2}".to_string()];

    let count_ok = ctx.newton_set.len() >= 3 && shooting.len() >= 3;
    let boxes_ok = want.iter().all(|b| nb.contains(b)) && want.iter().all(|b| sb.contains(b));

    // cross-solver agreement: every shooting profile matches a Newton profile
    let mut worst_match = 0f64;
    for e in &shooting.entries {
        let best = ctx
            .newton_set
            .entries
            .iter()
            .map(|q| e.profile.sup_distance(&q.profile))
            .fold(f64::INFINITY, f64::min);
        worst_match = worst_match.max(best);
    }
    let agree_ok = worst_match <= 1e-5;
    let time_ok = ctx.elapsed <= Duration::from_secs(60);

    let pass = count_ok && boxes_ok && agree_ok && time_ok;
    println!(
        "criterion 1 (multiplicity n=2): {} — newton {} solutions {:?}, shooting {} solutions {:?}, \
         worst cross-solver distance {:.2e}, runtime {:.2?}",
        if pass { "PASS" } else { "FAIL" },
        ctx.newton_set.len(),
        nb,
        shooting.len(),
        sb,
        worst_match,
        ctx.elapsed
    );
    assert!(pass);
}

#[test]
fn criterion_02_multiplicity_n3_sweep() {
    let ctx = n3();
    let time_ok = ctx.elapsed <= Duration::from_secs(600);
    let pass = ctx.lambda_c.is_some() && time_ok;
    let occ: Vec<(f64, usize)> = ctx.rows.iter().map(|r| (r.lambda, r.occupied)).collect();
    println!(
        "criterion 2 (multiplicity n=3 sweep): {} — occupancy {:?}, empirical lambda_c = {:?}, runtime {:.2?}",
        if pass { "PASS" } else { "FAIL" },
        occ,
        ctx.lambda_c,
        ctx.elapsed
    );
    assert!(pass);
}

#[test]
fn criterion_03_norm_lower_bound_everywhere() {
    let n2ctx = n2();
    let n3ctx = n3();
    let mut violations = 0usize;
    let mut checked = 0usize;
    let r80 = classify::r_lambda(-80.0, 1.0, P).unwrap();
    for set in [&n2ctx.newton_set, &n2ctx.shooting_set] {
        for e in &set.entries {
            checked += 1;
            if e.profile.sup_norm() <= r80 {
                violations += 1;
            }
        }
    }
    for row in &n3ctx.rows {
        let r = classify::r_lambda(row.lambda, 1.0, P).unwrap();
        for e in &row.set.entries {
            checked += 1;
            if e.profile.sup_norm() <= r {
                violations += 1;
            }
        }
    }
    // homotopy scans at the n=2 configuration
    let report = classify::verify_norm_lower_bound(
        -80.0,
        &[0.25, 0.5, 0.75, 1.0],
        &n2ctx.weight,
        P,
        &n2ctx.grid,
        &ScanConfig::default(),
    )
    .unwrap();
    let pass = violations == 0 && report.passed();
    println!(
        "criterion 3 (norm lower bound): {} — {checked} solutions checked, {violations} violations, \
         homotopy sweep min margin {:?}",
        if pass { "PASS" } else { "FAIL" },
        report.min_margin
    );
    assert!(pass);
}

#[test]
fn criterion_04_degree_table_n2() {
    let ctx = n2();
    let cfg = ClassifierConfig::default().with_r_cap_from(&ctx.shooting_set);
    let table =
        classify::degree_table(-80.0, &ctx.weight, P, &cfg, &ctx.grid, &ScanConfig::default())
            .unwrap();
    let fmt_tab = |v: &Vec<(IndexSet, i64)>| {
        v.iter().map(|(s, d)| format!("{s}:{d}")).collect::<Vec<_>>().join(" ")
    };
    let pass = table.matches_theory;
    println!(
        "criterion 4 (degree table): {} — boxes [{}], unions [{}]",
        if pass { "PASS" } else { "FAIL" },
        fmt_tab(&table.boxes),
        fmt_tab(&table.unions)
    );
    // exact values
    for (set, deg) in &table.boxes {
        let expect = if set.cardinality() % 2 == 0 { 1 } else { -1 };
        assert_eq!(*deg, expect, "box {set}");
    }
    for (set, deg) in &table.unions {
        assert_eq!(*deg, i64::from(set.is_empty()), "union over subsets of {set}");
    }
    assert!(pass);
}

#[test]
fn criterion_05_dichotomy() {
    let weight = sin_weight(3);
    let grid = Grid64::new(2049, 1.0).unwrap();
    let lambdas = [-10.0, -20.0, -40.0, -80.0, -160.0, -320.0, -400.0];
    let report = classify::verify_small_large_dichotomy(
        1.0,
        &lambdas,
        &weight,
        P,
        &grid,
        &ScanConfig::default(),
        1e-3,
    )
    .unwrap();
    let hat = report.thresholds.get("lambda_hat").copied();
    let pass = report.passed() && hat.map(|h| (-400.0..=-10.0).contains(&h)).unwrap_or(false);
    println!(
        "criterion 5 (small/large dichotomy): {} — empirical lambda_hat(1) = {:?}",
        if pass { "PASS" } else { "FAIL" },
        hat
    );
    assert!(pass);
}

#[test]
fn criterion_06_negativity_decay() {
    let weight = sin_weight(3);
    let grid = Grid64::new(2049, 1.0).unwrap();
    let lambdas = [-20.0, -40.0, -80.0, -160.0, -320.0];
    let report = classify::verify_negativity_decay(
        &lambdas,
        &[(0.4, 0.6)],
        0.1,
        &weight,
        P,
        &grid,
        &ScanConfig::default(),
    )
    .unwrap();
    let ratio = report.thresholds.get("decay_ratio_first_to_last").copied().unwrap_or(0.0);
    let pass = ratio >= 10.0;
    println!(
        "criterion 6 (negativity decay): {} — max over K = [0.4, 0.6] shrank {ratio:.3}x from \
         lambda = -20 to lambda = -320 (criterion demands >= 10x); details: {:?}",
        if pass { "PASS" } else { "FAIL" },
        report.details
    );
    assert!(
        pass,
        "measured decay ratio {ratio:.3} falls short of the stated 10x; the decay on a compact \
         at distance 0.067 from the humps is limited by the exp(-sqrt(-lambda) d) factor against \
         the slowly varying hump-edge values, and two independent solvers agree on the maxima"
    );
}

#[test]
fn criterion_07_forced_nonexistence() {
    let weight = sin_weight(3);
    let grid = Grid64::new(2049, 1.0).unwrap();
    let report = classify::verify_forced_nonexistence(
        -80.0,
        &IndexSet::new([1], 2).unwrap(),
        1.05,
        &weight,
        P,
        &grid,
        &ScanConfig::default(),
    )
    .unwrap();
    let pass = report.passed();
    println!(
        "criterion 7 (forced nonexistence): {} — mu_star = {:?}, details {:?}",
        if pass { "PASS" } else { "FAIL" },
        report.thresholds.get("mu_star"),
        report.details
    );
    assert!(pass);
}

#[test]
fn criterion_08_escape_battery() {
    let mut all_exit = true;
    let mut bound_ok = true;
    let mut count = 0usize;
    for alpha in [0.5, 1.0, 2.0] {
        for gamma in [0.0, 1.0, 2.0] {
            for kappa in [0.0, 1.0] {
                for beta in [0.0, 0.5] {
                    let prob =
                        LiouvilleProblem::with_constant_beta(alpha, gamma, kappa, beta).unwrap();
                    let x_max = 10.0 * (1.0 + kappa);
                    let verdicts =
                        shooting::liouville_check(&prob, P, &[0.0, -0.1, -1.0], x_max).unwrap();
                    for v in verdicts {
                        count += 1;
                        all_exit &= v.exits;
                        if let Some(ok) = v.bound_satisfied {
                            bound_ok &= ok;
                        }
                    }
                }
            }
        }
    }
    let pass = all_exit && bound_ok && count >= 50;
    println!(
        "criterion 8 (escape battery): {} — {count} runs, all exits: {all_exit}, \
         tangent bound respected: {bound_ok}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass);
}

#[test]
fn criterion_09_continuation_seed_and_fold() {
    let weight = sin_weight(3);
    let grid = Grid64::new(257, 1.0).unwrap();
    let cfg = ContinuationConfig {
        lambda_floor: Some(-80.0),
        max_points: 6000,
        ..ContinuationConfig::default()
    };
    let pi2 = std::f64::consts::PI.powi(2);
    let seed = continuation::init_branch(&weight, P, &grid, 1e-4, &cfg).unwrap();
    let seed_ok = (seed.lambda - pi2).abs() <= 1e-2;
    let branch = continuation::continue_branch(seed, &weight, P, &grid, &cfg).unwrap();
    let fold_ok = match branch.fold {
        None => true,
        Some(f) => f.lambda_t > pi2,
    };
    let pass = seed_ok && fold_ok;
    println!(
        "criterion 9 (continuation): {} — seed lambda = {:.6} (pi^2 = {pi2:.6}), fold: {:?}, \
         branch reached lambda range {:?}",
        if pass { "PASS" } else { "FAIL" },
        branch.points[0].lambda,
        branch.fold.map(|f| f.lambda_t),
        branch.lambda_range()
    );
    assert!(seed_ok, "seed lambda {} vs pi^2 {}", branch.points[0].lambda, pi2);
    assert!(fold_ok);
}

#[test]
fn criterion_10_numerical_hygiene() {
    // Jacobian directional-derivative test over 100 random cases
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    let weight = sin_weight(3);
    let grid = Grid64::new(257, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let nn = grid.n_nodes();
    let mut worst_rel = 0f64;
    for _ in 0..100 {
        let mut u: Vec<f64> = (0..nn).map(|_| 0.1 + rng.gen::<f64>() * 4.0).collect();
        u[0] = 0.0;
        u[nn - 1] = 0.0;
        let mut dir: Vec<f64> = (0..nn).map(|_| rng.gen::<f64>() - 0.5).collect();
        dir[0] = 0.0;
        dir[nn - 1] = 0.0;
        let eps = 1e-6;
        let up: Vec<f64> = u.iter().zip(&dir).map(|(a, d)| a + eps * d).collect();
        let um: Vec<f64> = u.iter().zip(&dir).map(|(a, d)| a - eps * d).collect();
        let rp = newton::fd_residual(&grid, -40.0, &up, &weight, P);
        let rm = newton::fd_residual(&grid, -40.0, &um, &weight, P);
        let jd = newton::fd_jacobian(&grid, -40.0, &u, &weight, P).matvec(&dir[1..nn - 1]);
        let scale = jd.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let worst = rp
            .iter()
            .zip(&rm)
            .zip(&jd)
            .map(|((a, b), j)| ((a - b) / (2.0 * eps) - j).abs())
            .fold(0.0f64, f64::max);
        worst_rel = worst_rel.max(worst / scale);
    }
    let jac_ok = worst_rel <= 1e-6;

    // apply_k convergence order against the continuum eigenrelation
    let mut errs = Vec::new();
    let mut hs = Vec::new();
    for n in [129usize, 257, 513] {
        let g = Grid64::new(n, 1.0).unwrap();
        let ep = greens::eigenpair(&g);
        let u = greens::apply_k(&g, &ep.phi);
        let err = u
            .iter()
            .zip(&ep.phi)
            .map(|(a, b)| (a - b / ep.sigma1).abs())
            .fold(0.0f64, f64::max);
        errs.push(err);
        hs.push(g.spacing());
    }
    let mut orders = Vec::new();
    for k in 0..2 {
        orders.push((errs[k] / errs[k + 1]).ln() / (hs[k] / hs[k + 1]).ln());
    }
    let order_ok = orders.iter().all(|o| (1.9..=2.1).contains(o));

    // determinism: repeated enumeration serializes identically
    let scan = ScanConfig::default();
    let s1 = shooting::enumerate_solutions(-80.0, &weight, P, &grid, &scan).unwrap();
    let s2 = shooting::enumerate_solutions(-80.0, &weight, P, &grid, &scan).unwrap();
    let m1 = serde_json::to_string(&io::solution_manifest(&s1)).unwrap();
    let m2 = serde_json::to_string(&io::solution_manifest(&s2)).unwrap();
    let c1 = io::scan_to_csv(&s1.scan, 2);
    let c2 = io::scan_to_csv(&s2.scan, 2);
    let det_ok = m1 == m2 && c1 == c2;

    let pass = jac_ok && order_ok && det_ok;
    println!(
        "criterion 10 (hygiene): {} — jacobian worst rel err {worst_rel:.2e}, \
         apply_k orders {orders:?}, determinism {det_ok}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass);
}

#[test]
fn criterion_05_band_specifics() {
    // the stated band [0.999, 1.001] must be empty for all grid lambdas at
    // and below the discovered threshold; checked directly on the sups
    let ctx = n2();
    for e in &ctx.shooting_set.entries {
        for &sup in &e.per_interval_sup {
            assert!(
                !(0.999..=1.001).contains(&sup),
                "per-interval sup {sup} inside the forbidden band at lambda = -80"
            );
        }
    }
    println!("criterion 5 addendum (band at lambda = -80): PASS");
}
