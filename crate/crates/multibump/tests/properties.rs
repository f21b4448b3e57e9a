//! Cross-module properties: scan completeness under refinement, box
//! partition and parity, classification stability under grid refinement,
//! seed-to-box coverage, and the generic-scalar surface.

use multibump::classify::{self, ClassifierConfig};
use multibump::greens;
use multibump::grid::{Grid, GridProfile, ProfileSource};
use multibump::index_set::IndexSet;
use multibump::newton::{self, NewtonConfig};
use multibump::shooting::{self, ScanConfig};
use multibump::weight::{Weight, WeightSpec};
use multibump::Grid64;
use proptest::prelude::*;
use rand::{Rng as _, SeedableRng as _};
use rand_chacha::ChaCha8Rng;

const P: f64 = 3.0;

fn sin3() -> Weight<f64> {
    Weight::build(&WeightSpec::SinMultibump { m: 3, length: 1.0 }).unwrap()
}

#[test]
fn scan_refinement_never_increases_the_zero_count() {
    let w = sin3();
    let grid = Grid64::new(257, 1.0).unwrap();
    let base = ScanConfig::default();
    let fine = ScanConfig {
        points_per_decade: base.points_per_decade * 4,
        uniform_points: base.uniform_points * 4,
        ..base.clone()
    };
    let s1 = shooting::enumerate_solutions(-80.0, &w, P, &grid, &base).unwrap();
    let s2 = shooting::enumerate_solutions(-80.0, &w, P, &grid, &fine).unwrap();
    assert_eq!(s1.len(), s2.len(), "zero count changed under 4x scan refinement");
    // matched zeros agree in slope
    for (a, b) in s1.entries.iter().zip(&s2.entries) {
        let (sa, sb) = (a.shooting_slope.unwrap(), b.shooting_slope.unwrap());
        assert!(
            ((sa - sb) / sa).abs() < 1e-6,
            "slopes moved under refinement: {sa} vs {sb}"
        );
    }
}

#[test]
fn residual_norms_are_recomputable() {
    let w = sin3();
    let grid = Grid64::new(257, 1.0).unwrap();
    let set = shooting::enumerate_solutions(-80.0, &w, P, &grid, &ScanConfig::default()).unwrap();
    for e in &set.entries {
        let rn = newton::fd_residual(&grid, e.profile.lambda(), e.profile.values(), &w, P)
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(
            (rn - e.profile.residual_norm()).abs() <= 1e-12,
            "stored {} vs recomputed {}",
            e.profile.residual_norm(),
            rn
        );
    }
}

#[test]
fn box_partition_counts_solutions_once() {
    let w = sin3();
    let grid = Grid64::new(257, 1.0).unwrap();
    let set = shooting::enumerate_solutions(-80.0, &w, P, &grid, &ScanConfig::default()).unwrap();
    let cfg = ClassifierConfig::default().with_r_cap_from(&set);
    let mut per_box: std::collections::BTreeMap<IndexSet, usize> = std::collections::BTreeMap::new();
    for e in &set.entries {
        let b = classify::classify(&e.profile, w.pattern(), &cfg).unwrap();
        *per_box.entry(b).or_default() += 1;
    }
    // the trivial solution occupies the empty box
    let zero = GridProfile::new(
        grid.clone(),
        vec![0.0; grid.n_nodes()],
        -80.0,
        0.0,
        ProfileSource::Newton,
    )
    .unwrap();
    let b0 = classify::classify(&zero, w.pattern(), &cfg).unwrap();
    assert!(b0.is_empty());
    *per_box.entry(b0).or_default() += 1;
    let total: usize = per_box.values().sum();
    assert_eq!(total, set.len() + 1);
    // boxes are disjoint: each solution counted exactly once by construction,
    // and all 2^n boxes are available
    assert!(per_box.keys().all(|s| s.cardinality() <= 2));
}

#[test]
fn subset_parity_cancellation() {
    for n in 1..=5usize {
        for set in IndexSet::nonempty_subsets(n) {
            let sum: i64 = set
                .subsets()
                .iter()
                .map(|s| if s.cardinality() % 2 == 0 { 1i64 } else { -1 })
                .sum();
            assert_eq!(sum, 0, "parity cancellation failed for {set}");
        }
    }
}

#[test]
fn classification_is_stable_under_grid_refinement() {
    let w = sin3();
    let coarse = Grid64::new(257, 1.0).unwrap();
    let fine = coarse.refine();
    let mut boxes_coarse = Vec::new();
    let mut boxes_fine = Vec::new();
    for (grid, out) in [(&coarse, &mut boxes_coarse), (&fine, &mut boxes_fine)] {
        let set = newton::solve_all(
            -80.0,
            &w,
            P,
            grid,
            &NewtonConfig::default(),
            &ClassifierConfig::default(),
        )
        .unwrap()
        .set;
        let mut v: Vec<String> = set
            .entries
            .iter()
            .filter_map(|e| e.index_set.as_ref())
            .map(|s| s.to_string())
            .collect();
        v.sort();
        *out = v;
    }
    assert_eq!(boxes_coarse, boxes_fine);
}

#[test]
fn each_seed_reaches_its_own_box() {
    let w = sin3();
    let grid = Grid64::new(257, 1.0).unwrap();
    let lambda = -80.0;
    let amp = newton::default_amplitude(lambda, &w, P).unwrap();
    let cfg = NewtonConfig::default();
    let ccfg = ClassifierConfig { r_cap: 1e6, ..ClassifierConfig::default() };
    for iset in IndexSet::nonempty_subsets(2) {
        let mut reached = false;
        for factor in [1.0, 0.5, 0.25] {
            let seed = newton::seed_profile(&iset, w.pattern(), amp * factor, &grid);
            let Ok((values, rn)) = newton::polish(&grid, lambda, &w, P, seed, &cfg) else {
                continue;
            };
            let profile =
                GridProfile::new(grid.clone(), values, lambda, rn, ProfileSource::Newton).unwrap();
            if profile.sup_norm() < 1e-3 {
                continue;
            }
            if let Ok(b) = classify::classify(&profile, w.pattern(), &ccfg) {
                if b == iset {
                    reached = true;
                    break;
                }
            }
        }
        assert!(reached, "no seed amplitude reached box {iset}");
    }
}

#[test]
fn weight_signs_hold_at_random_points() {
    let w = sin3();
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let pattern = w.pattern();
    for i in 0..pattern.n() {
        let (lo, hi) = pattern.positivity_interval(i);
        for _ in 0..1000 {
            let x = lo + (hi - lo) * rng.gen::<f64>();
            if x > lo && x < hi {
                assert!(w.eval(x) > 0.0, "not positive at {x}");
            }
        }
    }
    for (lo, hi) in pattern.negativity_intervals() {
        for _ in 0..1000 {
            let x = lo + (hi - lo) * rng.gen::<f64>();
            if x > lo && x < hi {
                assert!(w.eval(x) < 0.0, "not negative at {x}");
            }
        }
    }
}

#[test]
fn generic_scalar_surface_compiles_at_f32() {
    // the core operators work at reduced precision too
    let w: Weight<f32> = Weight::build(&WeightSpec::SinMultibump { m: 3, length: 1.0 }).unwrap();
    assert_eq!(w.n_humps(), 2);
    assert!((w.eval(1.0f32 / 6.0) - 1.0).abs() < 1e-5);
    let grid: Grid<f32> = Grid::new(65, 1.0).unwrap();
    let f = vec![1.0f32; grid.n_nodes()];
    let u = greens::apply_k(&grid, &f);
    let mid = u[33];
    assert!((mid - 0.125).abs() < 1e-3, "mid value {mid}");
    let r = classify::r_lambda(-4.0f32, 1.0, 3.0).unwrap();
    assert!((r - 2.0).abs() < 1e-5);
}

proptest! {
    #[test]
    fn kernel_is_symmetric_and_nonnegative(
        x in 0.0f64..1.0,
        y in 0.0f64..1.0,
        length in 0.5f64..4.0,
    ) {
        let (xs, ys) = (x * length, y * length);
        let a = greens::kernel(xs, ys, length);
        let b = greens::kernel(ys, xs, length);
        prop_assert_eq!(a, b);
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn apply_k_preserves_positivity(
        vals in proptest::collection::vec(0.0f64..5.0, 16..64),
    ) {
        let n = vals.len();
        let grid = Grid64::new(n, 1.0).unwrap();
        let mut f = vec![0.0];
        f.extend(vals);
        f.push(0.0);
        let u = greens::apply_k(&grid, &f);
        prop_assert!(u.iter().all(|&v| v >= 0.0));
    }
}
