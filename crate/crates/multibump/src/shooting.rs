//! Shooting engine: exhaustive enumeration of nonnegative solutions at fixed
//! `lambda` by a slope scan, signed shooting indices and box degrees, and the
//! finite-interval escape check behind the a priori bounds.
//!
//! The scan integrates the positive-part field `u'' = -(lambda u+ + a (u+)^p)`
//! from `(u, u')(0) = (0, s)` and brackets sign changes of the terminal value
//! `S(s) = u(L; s)`. Trajectories are capped at `|u| = U_cap`; a capped
//! trajectory keeps the sign of the cap it hit, which preserves bracketing
//! across blow-up regions. Brackets pinched to machine width with two finite
//! endpoints of opposite sign are genuine zeros (the terminal map is
//! continuous there); brackets that pinch onto a cap sentinel are jump
//! discontinuities at a blow-up basin boundary and carry no solution.

use crate::error::{Error, Result};
use crate::greens::BumpWeight;
use crate::grid::{Grid, GridProfile, ProfileSource};
use crate::index_set::IndexSet;
use crate::ivp::{self, IvpEnd, IvpOptions, IvpResult};
use crate::newton::{self, NewtonConfig};
use crate::weight::Weight;
use crate::Real;
use rayon::prelude::*;
use std::sync::Arc;

/// Which right-hand side the scan integrates.
#[derive(Clone, Copy)]
pub enum ShootField<'a, T> {
    /// `lambda u+ + a (u+)^p`
    Plain,
    /// `theta (lambda u+ + a (u+)^p)`, `theta` in `[0, 1]`
    Theta(T),
    /// `lambda u+ + a (u+)^p + mu w`, `mu >= 0`
    Mu(T, &'a BumpWeight<T>),
}

impl<T: Real> ShootField<'_, T> {
    #[inline]
    fn forcing(&self, lambda: T, p: T, weight: &Weight<T>, x: T, u: T) -> T {
        let up = u.max(T::zero());
        let cube = p == T::of(3.0);
        let pow = if cube { up * up * up } else { up.powf(p) };
        let base = lambda * up + weight.eval(x) * pow;
        match self {
            ShootField::Plain => base,
            ShootField::Theta(t) => *t * base,
            ShootField::Mu(mu, w) => base + *mu * w.eval(x),
        }
    }
}

/// Caps for one shot: trajectory magnitude bound and terminal abscissa.
#[derive(Clone, Copy, Debug)]
pub struct Caps<T> {
    pub u_cap: T,
    pub x_end: T,
}

/// Result of one IVP integration.
#[derive(Clone, Debug)]
pub struct ShootingOutcome<T> {
    pub slope: T,
    /// `u(L; s)`, or the signed infinity sentinel after a cap hit.
    pub terminal: T,
    pub blew_up: bool,
    /// Sup of `u` over each positivity interval (up to the stopping point).
    pub per_interval_sup: Vec<T>,
    pub x_stop: T,
    /// Dense `(x, u, u')` samples at accepted steps, when requested.
    pub trajectory: Option<Vec<[T; 3]>>,
}

#[derive(Clone, Copy, Debug)]
pub struct ShotOptions<T> {
    pub rtol: T,
    pub atol: T,
    pub record_trajectory: bool,
}

impl<T: Real> Default for ShotOptions<T> {
    fn default() -> Self {
        Self { rtol: T::of(1e-10), atol: T::of(1e-12), record_trajectory: false }
    }
}

pub(crate) struct Shot<T> {
    pub outcome: ShootingOutcome<T>,
    pub ivp: IvpResult<T>,
}

pub(crate) fn shoot<T: Real>(
    lambda: T,
    slope: T,
    weight: &Weight<T>,
    p: T,
    field: ShootField<'_, T>,
    caps: &Caps<T>,
    opts: &ShotOptions<T>,
) -> Result<Shot<T>> {
    let rhs = move |x: T, y: [T; 2]| [y[1], -field.forcing(lambda, p, weight, x, y[0])];
    let ivp_opts = IvpOptions {
        rtol: opts.rtol,
        atol: opts.atol,
        max_step: Some(caps.x_end * T::of(0.02)),
        cap_high: Some(caps.u_cap),
        cap_low: Some(-caps.u_cap),
    };
    let res = ivp::integrate(rhs, T::zero(), caps.x_end, [T::zero(), slope], &ivp_opts)?;
    let (terminal, blew_up) = match res.end {
        IvpEnd::Reached => (res.y_final[0], false),
        IvpEnd::CapHigh => (T::infinity(), true),
        IvpEnd::CapLow => (T::neg_infinity(), true),
    };
    let per_interval_sup = (0..weight.n_humps())
        .map(|i| {
            let (lo, hi) = weight.pattern().positivity_interval(i);
            res.max_on(lo, hi)
        })
        .collect();
    let trajectory = opts.record_trajectory.then(|| {
        let mut tr: Vec<[T; 3]> =
            res.steps.iter().map(|s| [s.x0, s.y0[0], s.y0[1]]).collect();
        tr.push([res.x_final, res.y_final[0], res.y_final[1]]);
        tr
    });
    Ok(Shot {
        outcome: ShootingOutcome {
            slope,
            terminal,
            blew_up,
            per_interval_sup,
            x_stop: res.x_final,
            trajectory,
        },
        ivp: res,
    })
}

/// One IVP integration of the shooting field; `blew_up` means the trajectory
/// hit `|u| = U_cap` before `x_end` and `terminal` carries the signed
/// sentinel. A step-size underflow reports an integration fault instead.
pub fn integrate_ivp<T: Real>(
    lambda: T,
    slope: T,
    weight: &Weight<T>,
    p: T,
    caps: &Caps<T>,
    opts: &ShotOptions<T>,
) -> Result<ShootingOutcome<T>> {
    if caps.u_cap < T::of(1e3) {
        return Err(Error::InvalidInput("U_cap must be at least 1e3".into()));
    }
    Ok(shoot(lambda, slope, weight, p, ShootField::Plain, caps, opts)?.outcome)
}

/// One enumerated solution with its discovery metadata.
#[derive(Clone, Debug)]
pub struct SolutionEntry<T> {
    pub profile: GridProfile<T>,
    pub per_interval_sup: Vec<T>,
    pub index_set: Option<IndexSet>,
    pub slope_left: T,
    pub slope_right: T,
    /// Initial slope `s*` when the solution came from the shooting scan.
    pub shooting_slope: Option<T>,
    /// `sign S'(s*)`, the shooting index.
    pub shooting_index: Option<i8>,
    /// `|S'(s*)|` fell under the degeneracy tolerance; excluded from degree
    /// sums.
    pub degenerate: bool,
}

/// Solutions found at one `lambda`, with scan provenance when applicable.
#[derive(Clone, Debug)]
pub struct SolutionSet<T> {
    pub lambda: T,
    pub entries: Vec<SolutionEntry<T>>,
    pub warnings: Vec<String>,
    /// Slope cap actually used by the scan.
    pub s_max: Option<T>,
    /// The raw scan, ordered by `s`.
    pub scan: Vec<ScanPoint<T>>,
}

impl<T: Real> SolutionSet<T> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Profiles pairwise distinct in sup norm by at least `tol`.
    pub fn pairwise_distinct(&self, tol: T) -> bool {
        for (i, a) in self.entries.iter().enumerate() {
            for b in &self.entries[i + 1..] {
                if a.profile.sup_distance(&b.profile) < tol {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Clone, Debug)]
pub struct ScanPoint<T> {
    pub s: T,
    pub terminal: T,
    pub blew_up: bool,
    pub per_interval_sup: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct ScanConfig<T> {
    /// Geometric scan density.
    pub points_per_decade: usize,
    /// Uniform overlay points on `(0, s_max]`.
    pub uniform_points: usize,
    /// Override for the smallest scanned slope.
    pub s_min: Option<T>,
    pub u_cap: T,
    pub rtol: T,
    pub atol: T,
    /// Accept a refined zero once `|S| <= bisect_tol`.
    pub bisect_tol: T,
    pub max_bisect: usize,
    /// Jump-bracket subdivision rounds.
    pub refine_rounds: usize,
    /// Points per subdivision of an ambiguous bracket.
    pub subdivide: usize,
    /// Sup-norm dedup distance between profiles.
    pub dedup_tol: T,
    /// Relative step for the central difference `S'(s*)`.
    pub deriv_step_rel: T,
    /// `|S'|` below this flags the zero degenerate.
    pub degenerate_tol: T,
    /// Newton-polish sampled trajectories into roots of the discrete system.
    pub polish: bool,
    /// Rounds of `s_max` doubling that must add no new zero.
    pub max_doublings: usize,
    /// Keep the raw scan in the result.
    pub keep_scan: bool,
}

impl<T: Real> Default for ScanConfig<T> {
    fn default() -> Self {
        Self {
            points_per_decade: 240,
            uniform_points: 400,
            s_min: None,
            u_cap: T::of(1e3),
            rtol: T::of(1e-10),
            atol: T::of(1e-12),
            bisect_tol: T::of(1e-10),
            max_bisect: 220,
            refine_rounds: 2,
            subdivide: 32,
            dedup_tol: T::of(1e-3),
            deriv_step_rel: T::of(1e-6),
            degenerate_tol: T::of(1e-8),
            polish: true,
            max_doublings: 2,
            keep_scan: true,
        }
    }
}

fn sign_of<T: Real>(v: T) -> i8 {
    if v > T::zero() {
        1
    } else if v < T::zero() {
        -1
    } else {
        0
    }
}

struct ZeroHit<T> {
    s: T,
    terminal_abs: T,
}

enum Resolved<T> {
    Zero(ZeroHit<T>),
    Jump,
}

/// Scans the slope axis and enumerates the zeros of the terminal map.
pub fn enumerate_solutions<T: Real>(
    lambda: T,
    weight: &Weight<T>,
    p: T,
    grid: &Grid<T>,
    cfg: &ScanConfig<T>,
) -> Result<SolutionSet<T>> {
    enumerate_with_field(lambda, weight, p, grid, ShootField::Plain, cfg)
}

/// Enumeration on a homotopy field; used by the verification sweeps.
pub fn enumerate_with_field<T: Real>(
    lambda: T,
    weight: &Weight<T>,
    p: T,
    grid: &Grid<T>,
    field: ShootField<'_, T>,
    cfg: &ScanConfig<T>,
) -> Result<SolutionSet<T>> {
    if lambda >= T::zero() {
        return Err(Error::InvalidInput("enumeration needs lambda < 0".into()));
    }
    let length = weight.length();
    let sqrt_neg = (-lambda).sqrt();
    let r = (-lambda / weight.sup_norm()).powf(T::one() / (p - T::one()));
    let caps = Caps { u_cap: cfg.u_cap, x_end: length };
    let opts = ShotOptions { rtol: cfg.rtol, atol: cfg.atol, record_trajectory: false };
    let eval = |s: T| -> Result<ScanPoint<T>> {
        let shot = shoot(lambda, s, weight, p, field, &caps, &opts)?;
        Ok(ScanPoint {
            s,
            terminal: shot.outcome.terminal,
            blew_up: shot.outcome.blew_up,
            per_interval_sup: shot.outcome.per_interval_sup,
        })
    };

    let mut s_max = T::of(10.0) * r * (sqrt_neg * length).cosh();
    if !s_max.is_finite() {
        s_max = T::of(1e30);
    }
    let s_min = cfg
        .s_min
        .unwrap_or_else(|| (r * (-sqrt_neg * length).exp() / T::of(10.0)).max(T::of(1e-14)));

    let mut scan: Vec<ScanPoint<T>> = scan_range(s_min, s_max, true, cfg, &eval)?;
    let mut zeros = collect_zeros(&scan, lambda, weight, p, field, &caps, &opts, cfg)?;

    // doubling rule: extend the cap until one full doubling adds nothing
    for _ in 0..cfg.max_doublings {
        let next = s_max * T::of(2.0);
        let ext = scan_range(s_max, next, false, cfg, &eval)?;
        let mut seam = vec![scan.last().unwrap().clone()];
        seam.extend(ext.iter().cloned());
        let new_zeros =
            collect_zeros(&seam, lambda, weight, p, field, &caps, &opts, cfg)?;
        scan.extend(ext);
        s_max = next;
        if new_zeros.is_empty() {
            break;
        }
        zeros.extend(new_zeros);
    }

    zeros.sort_by(|a, b| a.s.partial_cmp(&b.s).unwrap());
    zeros.dedup_by(|a, b| (a.s - b.s).abs() <= T::of(1e-9) * a.s.abs().max(b.s.abs()));

    // convert zeros to profiles
    let mut entries: Vec<SolutionEntry<T>> = Vec::new();
    let mut warnings = Vec::new();
    for z in &zeros {
        let shot = shoot(lambda, z.s, weight, p, field, &caps, &opts)?;
        let mut values: Vec<T> = (0..grid.n_nodes())
            .map(|j| shot.ivp.sample(grid.node(j), 0).unwrap_or(T::zero()))
            .collect();
        values[0] = T::zero();
        let last = values.len() - 1;
        values[last] = T::zero();
        let (values, residual) = if cfg.polish && matches!(field, ShootField::Plain) {
            match newton::polish(grid, lambda, weight, p, values.clone(), &NewtonConfig::default())
            {
                Ok(v) => v,
                Err(e) => {
                    warnings.push(format!("polish failed at s = {}: {e}", z.s.as_f64()));
                    let sys = newton::fd_residual(grid, lambda, &values, weight, p);
                    let rn = sys.iter().fold(T::zero(), |m, v| m.max(v.abs()));
                    (values, rn)
                }
            }
        } else {
            let rn = newton::fd_residual(grid, lambda, &values, weight, p)
                .iter()
                .fold(T::zero(), |m, v| m.max(v.abs()));
            (values, rn)
        };
        let profile =
            GridProfile::new(grid.clone(), values, lambda, residual, ProfileSource::Shooting)?;

        // shooting index by central difference
        let d = cfg.deriv_step_rel * z.s;
        let sp = shoot(lambda, z.s + d, weight, p, field, &caps, &opts)?.outcome.terminal;
        let sm = shoot(lambda, z.s - d, weight, p, field, &caps, &opts)?.outcome.terminal;
        let deriv = (sp - sm) / (d + d);
        let degenerate = deriv.abs() < cfg.degenerate_tol;
        if degenerate {
            warnings.push(format!(
                "zero at s = {} has |S'| = {:e}: flagged degenerate, excluded from degree sums",
                z.s.as_f64(),
                deriv.abs().as_f64()
            ));
        }
        if z.terminal_abs > cfg.bisect_tol {
            warnings.push(format!(
                "zero at s = {} accepted at machine bracket width with |S| = {:e}",
                z.s.as_f64(),
                z.terminal_abs.as_f64()
            ));
        }
        let (s0, s1) = profile.boundary_slopes();
        entries.push(SolutionEntry {
            per_interval_sup: profile.per_interval_sups(weight.pattern()),
            index_set: None,
            slope_left: s0,
            slope_right: s1,
            shooting_slope: Some(z.s),
            shooting_index: Some(sign_of(deriv)),
            degenerate,
            profile,
        });
    }

    // dedup in profile space
    let mut kept: Vec<SolutionEntry<T>> = Vec::new();
    for e in entries {
        if kept.iter().all(|q| q.profile.sup_distance(&e.profile) >= cfg.dedup_tol) {
            kept.push(e);
        }
    }

    Ok(SolutionSet {
        lambda,
        entries: kept,
        warnings,
        s_max: Some(s_max),
        scan: if cfg.keep_scan { scan } else { Vec::new() },
    })
}

/// Geometric points over `(lo, hi]` plus, for the base range, the uniform
/// overlay; evaluated in parallel, returned ordered by `s`.
fn scan_range<T: Real>(
    lo: T,
    hi: T,
    base: bool,
    cfg: &ScanConfig<T>,
    eval: &(dyn Fn(T) -> Result<ScanPoint<T>> + Sync),
) -> Result<Vec<ScanPoint<T>>> {
    let decades = (hi / lo).log10().max(T::of(0.25));
    let n_geo = (decades.as_f64() * cfg.points_per_decade as f64).ceil() as usize;
    let mut ss: Vec<T> = (0..=n_geo)
        .map(|k| lo * (hi / lo).powf(T::from_usize(k).unwrap() / T::from_usize(n_geo).unwrap()))
        .collect();
    if base {
        let n_uni = cfg.uniform_points;
        ss.extend((1..=n_uni).map(|k| hi * T::from_usize(k).unwrap() / T::from_usize(n_uni).unwrap()));
    }
    ss.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ss.dedup_by(|a, b| *a == *b);
    ss.into_par_iter().map(|s| eval(s)).collect()
}

/// Brackets sign changes in an ordered scan and resolves each to zeros.
#[allow(clippy::too_many_arguments)]
fn collect_zeros<T: Real>(
    scan: &[ScanPoint<T>],
    lambda: T,
    weight: &Weight<T>,
    p: T,
    field: ShootField<'_, T>,
    caps: &Caps<T>,
    opts: &ShotOptions<T>,
    cfg: &ScanConfig<T>,
) -> Result<Vec<ZeroHit<T>>> {
    let terminal = move |s: T| -> Result<T> {
        Ok(shoot(lambda, s, weight, p, field, caps, opts)?.outcome.terminal)
    };
    let mut brackets = Vec::new();
    for w in scan.windows(2) {
        let (sa, sb) = (sign_of(w[0].terminal), sign_of(w[1].terminal));
        if sa != 0 && sb != 0 && sa != sb {
            brackets.push((w[0].s, w[0].terminal, w[1].s, w[1].terminal));
        }
    }
    let results: Vec<Result<Vec<ZeroHit<T>>>> = brackets
        .into_par_iter()
        .map(|(a, fa, b, fb)| resolve_bracket(a, fa, b, fb, &terminal, cfg, 0))
        .collect();
    let mut zeros = Vec::new();
    for r in results {
        zeros.extend(r?);
    }
    Ok(zeros)
}

/// Bisects one sign-change bracket. Pinched brackets with finite endpoints
/// are zeros; pinched brackets against a cap sentinel are jumps, re-examined
/// by subdivision up to `refine_rounds` deep in case a zero hides next to
/// the jump.
fn resolve_bracket<T: Real>(
    mut a: T,
    mut fa: T,
    mut b: T,
    mut fb: T,
    terminal: &(dyn Fn(T) -> Result<T> + Sync),
    cfg: &ScanConfig<T>,
    depth: usize,
) -> Result<Vec<ZeroHit<T>>> {
    let mut outcome = None;
    for _ in 0..cfg.max_bisect {
        let mid = (a + b) / T::of(2.0);
        if mid <= a || mid >= b {
            // machine-width bracket
            let (fin_a, fin_b) = (fa.is_finite(), fb.is_finite());
            outcome = Some(if fin_a && fin_b {
                Resolved::Zero(ZeroHit { s: mid, terminal_abs: fa.abs().min(fb.abs()) })
            } else {
                Resolved::Jump
            });
            break;
        }
        let fm = terminal(mid)?;
        if fm.abs() <= cfg.bisect_tol {
            outcome = Some(Resolved::Zero(ZeroHit { s: mid, terminal_abs: fm.abs() }));
            break;
        }
        if sign_of(fm) == sign_of(fa) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
            fb = fm;
        }
    }
    let outcome = outcome.ok_or(Error::Unresolved {
        lo: a.as_f64(),
        hi: b.as_f64(),
        rounds: depth,
    })?;

    match outcome {
        Resolved::Zero(z) => Ok(vec![z]),
        Resolved::Jump => {
            if depth >= cfg.refine_rounds {
                return Ok(Vec::new());
            }
            // subdivide the original bracket and look for sub-brackets with
            // at least one new sign pattern
            let m = cfg.subdivide;
            let mut pts = Vec::with_capacity(m + 1);
            pts.push((a, fa));
            for k in 1..m {
                let s = a + (b - a) * T::from_usize(k).unwrap() / T::from_usize(m).unwrap();
                pts.push((s, terminal(s)?));
            }
            pts.push((b, fb));
            let mut zeros = Vec::new();
            for w in pts.windows(2) {
                let (sa, sb) = (sign_of(w[0].1), sign_of(w[1].1));
                if sa != 0 && sb != 0 && sa != sb {
                    zeros.extend(resolve_bracket(
                        w[0].0,
                        w[0].1,
                        w[1].0,
                        w[1].1,
                        terminal,
                        cfg,
                        depth + 1,
                    )?);
                }
            }
            Ok(zeros)
        }
    }
}

/// Sign of `S` near `s = 0+`, fixing the global orientation so that the
/// empty box carries degree `+1`.
pub fn calibrate_orientation<T: Real>(
    lambda: T,
    weight: &Weight<T>,
    p: T,
    cfg: &ScanConfig<T>,
) -> Result<i8> {
    let r = (-lambda / weight.sup_norm()).powf(T::one() / (p - T::one()));
    let caps = Caps { u_cap: cfg.u_cap, x_end: weight.length() };
    let opts = ShotOptions { rtol: cfg.rtol, atol: cfg.atol, record_trajectory: false };
    let s = (r * T::of(1e-9)).max(T::of(1e-12));
    let t = shoot(lambda, s, weight, p, ShootField::Plain, &caps, &opts)?.outcome.terminal;
    Ok(sign_of(t))
}

/// Calibrated signed count of shooting zeros classified into the box of
/// `index_set`: `orientation * sum sign S'(s*)`, with the trivial solution
/// contributing `+1` to the empty box. Degenerate zeros are excluded (they
/// carry a warning on the set). Errors when any per-interval sup sits within
/// `band` of `rho`.
pub fn box_degree<T: Real>(
    set: &SolutionSet<T>,
    index_set: &IndexSet,
    rho: T,
    orientation: i8,
    band: T,
) -> Result<i64> {
    for e in &set.entries {
        for (i, &sup) in e.per_interval_sup.iter().enumerate() {
            if (sup - rho).abs() <= band {
                return Err(Error::MarginViolation {
                    interval: i + 1,
                    sup: sup.as_f64(),
                    rho: rho.as_f64(),
                    band: band.as_f64(),
                });
            }
        }
    }
    let mut total: i64 = 0;
    if index_set.is_empty() {
        total += 1; // the trivial solution sits in the empty box
    }
    for e in &set.entries {
        if e.degenerate {
            continue;
        }
        let Some(idx) = e.shooting_index else {
            return Err(Error::InvalidInput(
                "box_degree needs shooting-sourced entries with indices".into(),
            ));
        };
        let box_of_e: Vec<usize> = e
            .per_interval_sup
            .iter()
            .enumerate()
            .filter(|(_, &sup)| sup > rho)
            .map(|(i, _)| i + 1)
            .collect();
        if box_of_e.as_slice() == index_set.members() {
            total += idx as i64;
        }
    }
    Ok(orientation as i64 * total)
}

/// Escape-check problem: `-v'' = alpha (x + kappa)^gamma v^p + beta(x)` from
/// `v(0) = 1`, `v'(0) = s <= 0`.
#[derive(Clone)]
pub struct LiouvilleProblem<T> {
    pub alpha: T,
    pub gamma: T,
    pub kappa: T,
    pub beta: Arc<dyn Fn(T) -> T + Send + Sync>,
}

impl<T: Real> LiouvilleProblem<T> {
    pub fn new(alpha: T, gamma: T, kappa: T, beta: Arc<dyn Fn(T) -> T + Send + Sync>) -> Result<Self> {
        if !(alpha > T::zero()) || gamma < T::zero() || kappa < T::zero() {
            return Err(Error::InvalidInput(
                "escape check needs alpha > 0, gamma >= 0, kappa >= 0".into(),
            ));
        }
        Ok(Self { alpha, gamma, kappa, beta })
    }

    pub fn with_constant_beta(alpha: T, gamma: T, kappa: T, beta: T) -> Result<Self> {
        if beta < T::zero() {
            return Err(Error::InvalidInput("beta must be nonnegative".into()));
        }
        Self::new(alpha, gamma, kappa, Arc::new(move |_| beta))
    }
}

impl<T: Real> std::fmt::Debug for LiouvilleProblem<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LiouvilleProblem")
            .field("alpha", &self.alpha)
            .field("gamma", &self.gamma)
            .field("kappa", &self.kappa)
            .finish()
    }
}

/// Verdict for one initial slope.
#[derive(Clone, Debug)]
pub struct LiouvilleVerdict<T> {
    pub slope: T,
    /// The trajectory left `[0, 1]` before `x_max`.
    pub exits: bool,
    pub exit_x: Option<T>,
    /// `v(1)` and `v'(1)` when the trajectory reaches `x = 1`.
    pub v_at_one: Option<T>,
    pub dv_at_one: Option<T>,
    /// Tangent-line bound `1 + v(1)/(-v'(1))` when `v'(1) < 0`.
    pub bound: Option<T>,
    pub bound_satisfied: Option<bool>,
}

/// Integrates the escape problem for each slope; the expected verdict is
/// always an exit (`v` crossing zero) before `x_max`, and when `v'(1) < 0`
/// the exit location must respect the tangent-line bound.
pub fn liouville_check<T: Real>(
    prob: &LiouvilleProblem<T>,
    p: T,
    slopes: &[T],
    x_max: T,
) -> Result<Vec<LiouvilleVerdict<T>>> {
    if x_max < T::of(10.0) * (T::one() + prob.kappa) {
        return Err(Error::InvalidInput("x_max must be at least 10 (1 + kappa)".into()));
    }
    if slopes.iter().any(|&s| s > T::zero()) {
        return Err(Error::InvalidInput("escape check slopes must be <= 0".into()));
    }
    let alpha = prob.alpha;
    let gamma = prob.gamma;
    let kappa = prob.kappa;
    let beta = prob.beta.clone();
    slopes
        .iter()
        .map(|&s| {
            let beta = beta.clone();
            let rhs = move |x: T, y: [T; 2]| {
                let vp = y[0].max(T::zero()).powf(p);
                [y[1], -(alpha * (x + kappa).powf(gamma) * vp + beta(x))]
            };
            let opts = IvpOptions {
                rtol: T::of(1e-10),
                atol: T::of(1e-12),
                max_step: Some(x_max * T::of(0.01)),
                cap_high: Some(T::of(2.0)),
                cap_low: Some(T::zero()),
            };
            let res = ivp::integrate(rhs, T::zero(), x_max, [T::one(), s], &opts)?;
            let exits = res.end == IvpEnd::CapLow;
            let exit_x = exits.then_some(res.x_final);
            let (mut v1, mut dv1, mut bound, mut ok) = (None, None, None, None);
            if res.x_final > T::one() {
                v1 = res.sample(T::one(), 0);
                dv1 = res.sample(T::one(), 1);
                if let (Some(v), Some(dv)) = (v1, dv1) {
                    if dv < T::zero() {
                        let bd = T::one() + v / (-dv);
                        bound = Some(bd);
                        ok = exit_x.map(|x| x <= bd + T::of(1e-6));
                    }
                }
            }
            Ok(LiouvilleVerdict {
                slope: s,
                exits,
                exit_x,
                v_at_one: v1,
                dv_at_one: dv1,
                bound,
                bound_satisfied: ok,
            })
        })
        .collect()
}
