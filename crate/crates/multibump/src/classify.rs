//! Explicit constants, box classification, and the verification sweeps.
//!
//! The box threshold `rho` splits each solution's per-interval sups into
//! "small" and "large"; a solution belongs to the box labeled by the set of
//! intervals where it is large. Classification refuses profiles whose sups
//! fall inside a relative dead band around `rho`, since the box degrees are
//! only meaningful with a margin there.

use crate::error::{Error, Result};
use crate::greens::BumpWeight;
use crate::grid::{Grid, GridProfile};
use crate::index_set::IndexSet;
use crate::shooting::{self, ScanConfig, ShootField, SolutionSet};
use crate::weight::{SignPattern, Weight};
use crate::Real;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug)]
pub struct ClassifierConfig<T> {
    /// Box threshold.
    pub rho: T,
    /// A priori cap on classified solution norms; set from a slope-scan
    /// sweep (1.5 x the largest observed norm) by the drivers.
    pub r_cap: T,
    /// Relative dead band around `rho`.
    pub margin: T,
}

impl<T: Real> Default for ClassifierConfig<T> {
    fn default() -> Self {
        Self { rho: T::one(), r_cap: T::infinity(), margin: T::of(1e-3) }
    }
}

impl<T: Real> ClassifierConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > T::zero()) || !(self.rho < self.r_cap) {
            return Err(Error::InvalidInput("classifier needs 0 < rho < R_cap".into()));
        }
        if !(self.margin > T::zero()) {
            return Err(Error::InvalidInput("classifier dead band must be positive".into()));
        }
        Ok(())
    }

    /// `r_cap` from an enumerated sweep: 1.5 x the largest observed norm.
    pub fn with_r_cap_from(mut self, set: &SolutionSet<T>) -> Self {
        let max = set
            .entries
            .iter()
            .map(|e| e.profile.sup_norm())
            .fold(T::zero(), T::max);
        if max > T::zero() {
            self.r_cap = max * T::of(1.5);
        }
        self
    }
}

/// The lower bound `(-lambda / ||a||)^(1/(p-1))` on nontrivial solution
/// norms at `lambda < 0`.
pub fn r_lambda<T: Real>(lambda: T, sup_norm_a: T, p: T) -> Result<T> {
    if lambda >= T::zero() {
        return Err(Error::InvalidInput("r_lambda needs lambda < 0".into()));
    }
    if !(sup_norm_a > T::zero()) || !(p > T::one()) {
        return Err(Error::InvalidInput("r_lambda needs ||a|| > 0 and p > 1".into()));
    }
    Ok((-lambda / sup_norm_a).powf(T::one() / (p - T::one())))
}

/// Forcing threshold `[(Sigma_1 - lambda) + ||a|| R^(p-1)] L R / int(w phi)`:
/// above it the bump-forced problem admits no nontrivial solution.
pub fn mu_star_from<T: Real>(
    lambda: T,
    r_cap: T,
    sup_norm_a: T,
    p: T,
    length: T,
    int_w_phi: T,
) -> Result<T> {
    if lambda >= T::zero() {
        return Err(Error::InvalidInput("mu_star needs lambda < 0".into()));
    }
    if int_w_phi < T::of(1e-14) {
        return Err(Error::InvalidInput(
            "degenerate bump weight: int(w phi) below 1e-14".into(),
        ));
    }
    let sigma1 = (T::PI() / length) * (T::PI() / length);
    Ok(((sigma1 - lambda) + sup_norm_a * r_cap.powf(p - T::one())) * length * r_cap / int_w_phi)
}

/// [`mu_star_from`] with the integral taken by the trapezoid rule on `grid`.
pub fn mu_star<T: Real>(
    lambda: T,
    r_cap: T,
    weight: &Weight<T>,
    w: &BumpWeight<T>,
    p: T,
    grid: &Grid<T>,
) -> Result<T> {
    mu_star_from(lambda, r_cap, weight.sup_norm(), p, weight.length(), w.int_w_phi(grid))
}

/// Box assignment: `{ i : sup over hump i > rho }`. Refuses sups inside the
/// dead band and norms at or above `r_cap`.
pub fn classify<T: Real>(
    profile: &GridProfile<T>,
    pattern: &SignPattern<T>,
    cfg: &ClassifierConfig<T>,
) -> Result<IndexSet> {
    cfg.validate()?;
    if profile.sup_norm() >= cfg.r_cap {
        return Err(Error::InvalidInput(format!(
            "profile norm {:e} at or above the classification cap {:e}",
            profile.sup_norm().as_f64(),
            cfg.r_cap.as_f64()
        )));
    }
    let sups = profile.per_interval_sups(pattern);
    let band = cfg.rho * cfg.margin;
    for (i, &sup) in sups.iter().enumerate() {
        if (sup - cfg.rho).abs() <= band {
            return Err(Error::BandHit {
                interval: i + 1,
                sup: sup.as_f64(),
                rho: cfg.rho.as_f64(),
            });
        }
    }
    let members = sups
        .iter()
        .enumerate()
        .filter(|(_, &sup)| sup > cfg.rho)
        .map(|(i, _)| i + 1);
    IndexSet::new(members, pattern.n())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyStatus {
    Pass,
    Fail,
    Inconclusive,
}

/// One verification sweep: what was checked, over which configuration, and
/// the measured margins and thresholds.
#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub check: String,
    pub weight_id: String,
    pub p: f64,
    pub rho: Option<f64>,
    pub lambda_grid: Vec<f64>,
    pub status: VerifyStatus,
    pub min_margin: Option<f64>,
    pub thresholds: BTreeMap<String, f64>,
    pub details: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.status == VerifyStatus::Pass
    }
}

/// Norm lower bound under forcing scaled by `theta in (0, 1]`: every
/// nontrivial solution of the scaled problem has norm above `r_lambda`,
/// and at `theta = 0` only the trivial solution remains.
pub fn verify_norm_lower_bound<T: Real>(
    lambda: T,
    theta_grid: &[T],
    weight: &Weight<T>,
    p: T,
    grid: &Grid<T>,
    scan: &ScanConfig<T>,
) -> Result<VerificationReport> {
    let r = r_lambda(lambda, weight.sup_norm(), p)?;
    let mut min_margin = f64::INFINITY;
    let mut details = Vec::new();
    let mut status = VerifyStatus::Pass;
    for &theta in theta_grid {
        if theta < T::zero() || theta > T::one() {
            return Err(Error::InvalidInput("theta grid must lie in [0, 1]".into()));
        }
        let set =
            shooting::enumerate_with_field(lambda, weight, p, grid, ShootField::Theta(theta), scan)?;
        if theta == T::zero() {
            if !set.is_empty() {
                status = VerifyStatus::Fail;
                details.push(format!(
                    "theta = 0 admitted {} nontrivial solutions; expected none",
                    set.len()
                ));
            } else {
                details.push("theta = 0: only the trivial solution".into());
            }
            continue;
        }
        for e in &set.entries {
            let margin = (e.profile.sup_norm() - r).as_f64();
            min_margin = min_margin.min(margin);
            if margin <= 0.0 {
                status = VerifyStatus::Fail;
                details.push(format!(
                    "violation at theta = {}: ||u|| = {} <= r_lambda = {}",
                    theta.as_f64(),
                    e.profile.sup_norm().as_f64(),
                    r.as_f64()
                ));
            }
        }
        details.push(format!(
            "theta = {}: {} solutions, min margin so far {:.6e}",
            theta.as_f64(),
            set.len(),
            min_margin
        ));
    }
    Ok(VerificationReport {
        check: "norm_lower_bound".into(),
        weight_id: weight.spec().id(),
        p: p.as_f64(),
        rho: None,
        lambda_grid: vec![lambda.as_f64()],
        status,
        min_margin: (min_margin.is_finite()).then_some(min_margin),
        thresholds: BTreeMap::from([("r_lambda".into(), r.as_f64())]),
        details,
    })
}

/// Decay of solutions on compacts inside the negativity intervals as
/// `lambda` decreases: finds the grid threshold below which `max_K u < delta`
/// for every enumerated solution.
pub fn verify_negativity_decay<T: Real>(
    lambda_grid: &[T],
    k_intervals: &[(T, T)],
    delta: T,
    weight: &Weight<T>,
    p: T,
    grid: &Grid<T>,
    scan: &ScanConfig<T>,
) -> Result<VerificationReport> {
    if lambda_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("lambda grid must be strictly decreasing".into()));
    }
    let eta = T::of(0.05);
    for &(lo, hi) in k_intervals {
        let inside = weight.pattern().negativity_intervals().into_iter().any(|(a, b)| {
            let m = eta * (b - a);
            lo >= a + m && hi <= b - m
        });
        if !inside {
            return Err(Error::InvalidInput(format!(
                "compact [{}, {}] is not strictly inside a negativity interval",
                lo.as_f64(),
                hi.as_f64()
            )));
        }
    }

    let mut maxima = Vec::with_capacity(lambda_grid.len());
    let mut details = Vec::new();
    for &lambda in lambda_grid {
        let set = shooting::enumerate_solutions(lambda, weight, p, grid, scan)?;
        let mut max_k = T::zero();
        for e in &set.entries {
            for &(lo, hi) in k_intervals {
                max_k = max_k.max(e.profile.interval_sup(lo, hi));
            }
        }
        details.push(format!(
            "lambda = {}: {} solutions, max over compacts = {:.6e}",
            lambda.as_f64(),
            set.len(),
            max_k.as_f64()
        ));
        maxima.push(max_k.as_f64());
    }

    // largest grid lambda whose whole tail stays below delta
    let d = delta.as_f64();
    let mut threshold = None;
    for start in 0..maxima.len() {
        if maxima[start..].iter().all(|&m| m < d) {
            threshold = Some(lambda_grid[start].as_f64());
            break;
        }
    }
    let mut thresholds = BTreeMap::new();
    if let Some(t) = threshold {
        thresholds.insert("lambda_tilde".into(), t);
    }
    if maxima.len() >= 2 {
        let first = maxima[0];
        let last = *maxima.last().unwrap();
        if last > 0.0 {
            thresholds.insert("decay_ratio_first_to_last".into(), first / last);
        }
        // trend of ln(max) against lambda
        let ts: Vec<f64> = lambda_grid.iter().map(|l| l.as_f64()).collect();
        let ys: Vec<f64> = maxima.iter().map(|&m| m.max(1e-300).ln()).collect();
        let n = ts.len() as f64;
        let tm = ts.iter().sum::<f64>() / n;
        let ym = ys.iter().sum::<f64>() / n;
        let num: f64 = ts.iter().zip(&ys).map(|(t, y)| (t - tm) * (y - ym)).sum();
        let den: f64 = ts.iter().map(|t| (t - tm) * (t - tm)).sum();
        thresholds.insert("trend_slope".into(), num / den);
    }

    Ok(VerificationReport {
        check: "negativity_decay".into(),
        weight_id: weight.spec().id(),
        p: p.as_f64(),
        rho: None,
        lambda_grid: lambda_grid.iter().map(|l| l.as_f64()).collect(),
        status: if threshold.is_some() { VerifyStatus::Pass } else { VerifyStatus::Inconclusive },
        min_margin: maxima.last().map(|&m| d - m),
        thresholds,
        details,
    })
}

/// Small/large dichotomy at level `rho`: finds the grid threshold below
/// which no per-interval sup falls inside the dead band around `rho`.
pub fn verify_small_large_dichotomy<T: Real>(
    rho: T,
    lambda_grid: &[T],
    weight: &Weight<T>,
    p: T,
    grid: &Grid<T>,
    scan: &ScanConfig<T>,
    margin: T,
) -> Result<VerificationReport> {
    if !(rho > T::zero()) {
        return Err(Error::InvalidInput("dichotomy level rho must be positive".into()));
    }
    if lambda_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("lambda grid must be strictly decreasing".into()));
    }
    let band_lo = rho * (T::one() - margin);
    let band_hi = rho * (T::one() + margin);
    let mut band_free = Vec::with_capacity(lambda_grid.len());
    let mut details = Vec::new();
    for &lambda in lambda_grid {
        let set = shooting::enumerate_solutions(lambda, weight, p, grid, scan)?;
        let r = r_lambda(lambda, weight.sup_norm(), p)?;
        let mut hit = false;
        let (mut small, mut large, mut mid) = (0usize, 0usize, 0usize);
        for e in &set.entries {
            for &sup in &e.per_interval_sup {
                if sup >= band_lo && sup <= band_hi {
                    hit = true;
                }
                if sup < rho / T::of(2.0) {
                    small += 1;
                } else if sup > r {
                    large += 1;
                } else {
                    mid += 1;
                }
            }
        }
        details.push(format!(
            "lambda = {}: band hit = {hit}; sup clusters: {small} below rho/2, {large} above r_lambda, {mid} between",
            lambda.as_f64()
        ));
        band_free.push(!hit);
    }

    let mut lambda_hat = None;
    for start in 0..band_free.len() {
        if band_free[start..].iter().all(|&f| f) {
            lambda_hat = Some(lambda_grid[start]);
            break;
        }
    }
    let mut thresholds = BTreeMap::new();
    if let Some(lh) = lambda_hat {
        thresholds.insert("lambda_hat".into(), lh.as_f64());
        // discovered box-splitting onset: also require rho < r_lambda
        if let Some(ls) = lambda_grid
            .iter()
            .skip_while(|&&l| l > lh)
            .find(|&&l| r_lambda(l, weight.sup_norm(), p).map(|r| rho < r).unwrap_or(false))
        {
            thresholds.insert("lambda_star".into(), ls.as_f64());
        }
    }

    Ok(VerificationReport {
        check: "small_large_dichotomy".into(),
        weight_id: weight.spec().id(),
        p: p.as_f64(),
        rho: Some(rho.as_f64()),
        lambda_grid: lambda_grid.iter().map(|l| l.as_f64()).collect(),
        status: if lambda_hat.is_some() { VerifyStatus::Pass } else { VerifyStatus::Inconclusive },
        min_margin: None,
        thresholds,
        details,
    })
}

/// Forced nonexistence: with the bump forcing at `mu = mu_factor * mu_star`,
/// the slope scan must find no nontrivial nonnegative solution.
pub fn verify_forced_nonexistence<T: Real>(
    lambda: T,
    index_set: &IndexSet,
    mu_factor: T,
    weight: &Weight<T>,
    p: T,
    grid: &Grid<T>,
    scan: &ScanConfig<T>,
) -> Result<VerificationReport> {
    let base = shooting::enumerate_solutions(lambda, weight, p, grid, scan)?;
    let cfg = ClassifierConfig::default().with_r_cap_from(&base);
    let bump = BumpWeight::new(index_set.clone(), weight.pattern(), grid)?;
    let mu = mu_factor * mu_star(lambda, cfg.r_cap, weight, &bump, p, grid)?;
    let forced =
        shooting::enumerate_with_field(lambda, weight, p, grid, ShootField::Mu(mu, &bump), scan)?;
    let status = if forced.is_empty() { VerifyStatus::Pass } else { VerifyStatus::Fail };
    let details = vec![
        format!("R_cap from sweep: {:.6e}", cfg.r_cap.as_f64()),
        format!("mu = {:.6e}", mu.as_f64()),
        format!("forced scan found {} solutions", forced.len()),
    ];
    Ok(VerificationReport {
        check: "forced_nonexistence".into(),
        weight_id: weight.spec().id(),
        p: p.as_f64(),
        rho: None,
        lambda_grid: vec![lambda.as_f64()],
        status,
        min_margin: None,
        thresholds: BTreeMap::from([
            ("mu_star".into(), (mu / mu_factor).as_f64()),
            ("r_cap".into(), cfg.r_cap.as_f64()),
        ]),
        details,
    })
}

/// Calibrated degrees of all `2^n` boxes, plus the union sets over each
/// subset family. The theory predicts `(-1)^|I|` per box, `1` for the empty
/// union, and `0` for every other union.
#[derive(Clone, Debug)]
pub struct DegreeTable<T> {
    pub lambda: T,
    pub orientation: i8,
    pub boxes: Vec<(IndexSet, i64)>,
    pub unions: Vec<(IndexSet, i64)>,
    pub matches_theory: bool,
}

pub fn degree_table<T: Real>(
    lambda: T,
    weight: &Weight<T>,
    p: T,
    cfg: &ClassifierConfig<T>,
    grid: &Grid<T>,
    scan: &ScanConfig<T>,
) -> Result<DegreeTable<T>> {
    cfg.validate()?;
    let r = r_lambda(lambda, weight.sup_norm(), p)?;
    if cfg.rho >= r {
        return Err(Error::InvalidInput(format!(
            "degree table needs rho < r_lambda (rho = {}, r_lambda = {})",
            cfg.rho.as_f64(),
            r.as_f64()
        )));
    }
    let set = shooting::enumerate_solutions(lambda, weight, p, grid, scan)?;
    let orientation = shooting::calibrate_orientation(lambda, weight, p, scan)?;
    let n = weight.n_humps();
    let band = T::of(1e-6);
    let mut boxes = Vec::new();
    let mut by_set: BTreeMap<IndexSet, i64> = BTreeMap::new();
    for iset in IndexSet::all_subsets(n) {
        let deg = shooting::box_degree(&set, &iset, cfg.rho, orientation, band)?;
        by_set.insert(iset.clone(), deg);
        boxes.push((iset, deg));
    }
    let mut unions = Vec::new();
    for iset in IndexSet::all_subsets(n) {
        let deg: i64 = iset.subsets().iter().map(|s| by_set[s]).sum();
        unions.push((iset, deg));
    }
    let matches_theory = boxes.iter().all(|(s, d)| {
        let expect = if s.cardinality() % 2 == 0 { 1 } else { -1 };
        *d == expect
    }) && unions
        .iter()
        .all(|(s, d)| *d == i64::from(s.is_empty()));
    Ok(DegreeTable { lambda, orientation, boxes, unions, matches_theory })
}
