//! Pseudo-arclength continuation of the positive solution branch from its
//! bifurcation point at `lambda = (pi/L)^2`, with fold detection.
//!
//! The branch is parametrized by arclength in the product norm
//! `ds^2 = mean(du^2) + dlambda^2`. Prediction is by the secant through the
//! previous two points; correction solves the bordered system (discrete
//! residual plus the hyperplane constraint) with two tridiagonal solves per
//! Newton step.

use crate::error::{Error, Result};
use crate::greens::eigenpair;
use crate::grid::{Grid, GridProfile, ProfileSource};
use crate::newton::FdSystem;
use crate::weight::Weight;
use crate::Real;

#[derive(Clone, Copy, Debug)]
pub struct ContinuationConfig<T> {
    /// Initial arclength step.
    pub step: T,
    pub step_min: T,
    pub step_max: T,
    pub max_points: usize,
    /// Halt once the amplitude exceeds this cap.
    pub amp_cap: T,
    /// Optional halt once `lambda` drops to this value.
    pub lambda_floor: Option<T>,
    /// Corrector residual target (max norm); the stencil rounding floor
    /// applies on top of it.
    pub corrector_tol: T,
    pub max_corrector_iters: usize,
}

impl<T: Real> Default for ContinuationConfig<T> {
    fn default() -> Self {
        Self {
            step: T::of(1e-2),
            step_min: T::of(1e-4),
            step_max: T::of(1e-1),
            max_points: 4000,
            amp_cap: T::of(50.0),
            lambda_floor: None,
            corrector_tol: T::of(1e-10),
            max_corrector_iters: 16,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BranchPoint<T> {
    pub lambda: T,
    pub profile: GridProfile<T>,
    pub amplitude: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fold<T> {
    pub lambda_t: T,
    pub index: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchEnd {
    MaxPoints,
    AmplitudeCap,
    LambdaFloor,
    /// Corrector failed below the minimum step.
    Terminated,
}

/// An ordered branch trace with the arclength steps actually taken.
#[derive(Clone, Debug)]
pub struct Branch<T> {
    pub points: Vec<BranchPoint<T>>,
    pub steps: Vec<T>,
    pub fold: Option<Fold<T>>,
    pub end: BranchEnd,
}

impl<T: Real> Branch<T> {
    /// Builds a branch from points with externally supplied arclength steps;
    /// used by tests and by restarts from other solvers.
    pub fn from_points_with_steps(points: Vec<BranchPoint<T>>, steps: Vec<T>) -> Self {
        assert_eq!(steps.len() + 1, points.len().max(1));
        Self { points, steps, fold: None, end: BranchEnd::MaxPoints }
    }

    /// Largest discrete residual over all stored points (post-hoc audit).
    pub fn audit_max_residual(&self, weight: &Weight<T>, p: T) -> T {
        self.points
            .iter()
            .map(|pt| {
                crate::newton::fd_residual(
                    pt.profile.grid(),
                    pt.lambda,
                    pt.profile.values(),
                    weight,
                    p,
                )
                .iter()
                .fold(T::zero(), |m, v| m.max(v.abs()))
            })
            .fold(T::zero(), T::max)
    }

    /// The visited `lambda` range `(min, max)`.
    pub fn lambda_range(&self) -> Option<(T, T)> {
        if self.points.is_empty() {
            return None;
        }
        let mut lo = self.points[0].lambda;
        let mut hi = lo;
        for p in &self.points {
            lo = lo.min(p.lambda);
            hi = hi.max(p.lambda);
        }
        Some((lo, hi))
    }
}

/// Mean-square inner product on the interior-node part.
fn inner<T: Real>(a: &[T], b: &[T]) -> T {
    let n = T::from_usize(a.len()).unwrap();
    a.iter().zip(b).map(|(x, y)| *x * *y).sum::<T>() / n
}

/// Solves the bordered system
/// `[J, col; row^T, corner] [du; dl] = -[r; g]`
/// with two tridiagonal solves. `row` is weighted with the mean-square
/// inner product used for arclength.
#[allow(clippy::too_many_arguments)]
fn bordered_step<T: Real>(
    sys: &FdSystem<'_, T>,
    u: &[T],
    r: &[T],
    g: T,
    row_u: &[T],
    row_l: T,
) -> Result<(Vec<T>, T)> {
    let jac = sys.jacobian(u);
    // column: dF/dlambda = -u+ on interior nodes
    let n = sys.grid.n_interior();
    let col: Vec<T> = (1..=n).map(|j| -(u[j].max(T::zero()))).collect();
    let neg_r: Vec<T> = r.iter().map(|v| -*v).collect();
    let y1 = jac.solve(&neg_r)?; // J y1 = -r
    let y2 = jac.solve(&col)?; // J y2 = col
    // du = y1 - dl * y2; row: inner(row_u, du) + row_l * dl = -g
    let a1 = inner(row_u, &y1);
    let a2 = inner(row_u, &y2);
    let denom = row_l - a2;
    if denom == T::zero() {
        return Err(Error::NonConvergence("singular bordered system".into()));
    }
    let dl = (-g - a1) / denom;
    let du: Vec<T> = y1.iter().zip(&y2).map(|(a, b)| *a - dl * *b).collect();
    Ok((du, dl))
}

fn residual_norm<T: Real>(r: &[T]) -> T {
    r.iter().fold(T::zero(), |m, v| m.max(v.abs()))
}

/// Corrects `(u, lambda)` onto the solution manifold subject to the pinned
/// value `u[pin] = target` (amplitude parametrization).
fn correct_pinned<T: Real>(
    weight: &Weight<T>,
    p: T,
    grid: &Grid<T>,
    mut u: Vec<T>,
    mut lambda: T,
    pin: usize,
    target: T,
    cfg: &ContinuationConfig<T>,
) -> Result<(Vec<T>, T, T)> {
    let n = grid.n_interior();
    let mut row_u = vec![T::zero(); n];
    // the pin row acts on a single interior node; undo the mean-square
    // weighting so the constraint reads u[pin] - target = 0
    row_u[pin - 1] = T::from_usize(n).unwrap();
    for _ in 0..cfg.max_corrector_iters {
        let sys = FdSystem::new(grid, lambda, p, weight);
        let r = sys.residual(&u);
        let rn = residual_norm(&r);
        let g = u[pin] - target;
        if rn <= cfg.corrector_tol.max(sys.residual_floor(&u)) && g.abs() <= T::epsilon() * target.abs().max(T::one()) * T::of(64.0)
        {
            return Ok((u, lambda, rn));
        }
        let (du, dl) = bordered_step(&sys, &u, &r, g, &row_u, T::zero())?;
        for j in 1..=n {
            u[j] = u[j] + du[j - 1];
        }
        lambda = lambda + dl;
    }
    let sys = FdSystem::new(grid, lambda, p, weight);
    let rn = sys.residual_norm(&u);
    if rn <= cfg.corrector_tol.max(sys.residual_floor(&u)) {
        return Ok((u, lambda, rn));
    }
    Err(Error::NonConvergence(format!(
        "pinned corrector stalled at residual {:e}",
        rn.as_f64()
    )))
}

/// Newton-corrects the predictor `(Sigma_1, eps phi)` under the fixed
/// amplitude `||u||_inf = eps` (with `lambda` freed), returning the corrected
/// branch seed.
pub fn init_branch<T: Real>(
    weight: &Weight<T>,
    p: T,
    grid: &Grid<T>,
    epsilon: T,
    cfg: &ContinuationConfig<T>,
) -> Result<BranchPoint<T>> {
    if epsilon < T::of(1e-6) || epsilon > T::of(1e-2) {
        return Err(Error::InvalidInput("seed amplitude must lie in [1e-6, 1e-2]".into()));
    }
    let ep = eigenpair(grid);
    let u0: Vec<T> = ep.phi.iter().map(|v| epsilon * *v).collect();
    // pin the max node of phi (interior midpoint)
    let pin = (1..=grid.n_interior())
        .max_by(|&a, &b| ep.phi[a].partial_cmp(&ep.phi[b]).unwrap())
        .unwrap();
    let (u, lambda, rn) = correct_pinned(weight, p, grid, u0, ep.sigma1, pin, epsilon, cfg)
        .map_err(|e| {
            Error::NonConvergence(format!("branch seed did not converge at eps = {epsilon}: {e}"))
        })?;
    let profile = GridProfile::new(grid.clone(), u, lambda, rn, ProfileSource::Continuation)?;
    let amplitude = profile.sup_norm();
    Ok(BranchPoint { lambda, profile, amplitude })
}

/// Traces the branch by secant prediction and bordered correction. Halts at
/// `max_points`, at the amplitude cap, at the optional lambda floor, or when
/// the corrector fails below the minimum step.
pub fn continue_branch<T: Real>(
    seed: BranchPoint<T>,
    weight: &Weight<T>,
    p: T,
    grid: &Grid<T>,
    cfg: &ContinuationConfig<T>,
) -> Result<Branch<T>> {
    let n = grid.n_interior();
    // second point: re-pin at a slightly larger amplitude
    let ep = eigenpair(grid);
    let pin = (1..=n)
        .max_by(|&a, &b| ep.phi[a].partial_cmp(&ep.phi[b]).unwrap())
        .unwrap();
    let target2 = seed.amplitude * T::of(1.25);
    let u_guess: Vec<T> =
        seed.profile.values().iter().map(|v| *v * T::of(1.25)).collect();
    let (u2, l2, rn2) =
        correct_pinned(weight, p, grid, u_guess, seed.lambda, pin, target2, cfg)?;
    let second = BranchPoint {
        lambda: l2,
        profile: GridProfile::new(grid.clone(), u2, l2, rn2, ProfileSource::Continuation)?,
        amplitude: target2,
    };

    let mut points = vec![seed, second];
    let mut steps = vec![dist(&points[0], &points[1])];
    let mut h = cfg.step;
    let mut end = BranchEnd::MaxPoints;

    while points.len() < cfg.max_points {
        let (prev, last) = (&points[points.len() - 2], &points[points.len() - 1]);
        if last.amplitude > cfg.amp_cap {
            end = BranchEnd::AmplitudeCap;
            break;
        }
        if let Some(floor) = cfg.lambda_floor {
            if last.lambda <= floor {
                end = BranchEnd::LambdaFloor;
                break;
            }
        }
        // secant tangent in the product norm
        let du: Vec<T> = last
            .profile
            .values()
            .iter()
            .zip(prev.profile.values())
            .map(|(a, b)| *a - *b)
            .collect();
        let dl = last.lambda - prev.lambda;
        let norm = (inner(&du[1..=n], &du[1..=n]) + dl * dl).sqrt();
        if norm == T::zero() {
            end = BranchEnd::Terminated;
            break;
        }
        let tu: Vec<T> = du.iter().map(|v| *v / norm).collect();
        let tl = dl / norm;

        // predict and correct; halve the step on failure
        let mut accepted = None;
        while h >= cfg.step_min {
            let pred_u: Vec<T> = last
                .profile
                .values()
                .iter()
                .zip(&tu)
                .map(|(a, t)| *a + h * *t)
                .collect();
            let pred_l = last.lambda + h * tl;
            match correct_arclength(weight, p, grid, pred_u, pred_l, &tu[1..=n], tl, cfg) {
                Ok((u, l, rn, iters)) => {
                    accepted = Some((u, l, rn, iters));
                    break;
                }
                Err(_) => {
                    h = h / T::of(2.0);
                }
            }
        }
        let Some((u, l, rn, iters)) = accepted else {
            end = BranchEnd::Terminated;
            break;
        };
        let profile = GridProfile::new(grid.clone(), u, l, rn, ProfileSource::Continuation)?;
        let amplitude = profile.sup_norm();
        let pt = BranchPoint { lambda: l, profile, amplitude };
        steps.push(dist(points.last().unwrap(), &pt));
        points.push(pt);
        if iters <= 4 {
            h = (h * T::of(1.4)).min(cfg.step_max);
        }
    }

    let mut branch = Branch { points, steps, fold: None, end };
    branch.fold = detect_turning_point(&branch);
    Ok(branch)
}

fn dist<T: Real>(a: &BranchPoint<T>, b: &BranchPoint<T>) -> T {
    let n = a.profile.grid().n_interior();
    let du: Vec<T> = a
        .profile
        .values()
        .iter()
        .zip(b.profile.values())
        .map(|(x, y)| *x - *y)
        .collect();
    let dl = a.lambda - b.lambda;
    (inner(&du[1..=n], &du[1..=n]) + dl * dl).sqrt()
}

#[allow(clippy::too_many_arguments)]
fn correct_arclength<T: Real>(
    weight: &Weight<T>,
    p: T,
    grid: &Grid<T>,
    mut u: Vec<T>,
    mut lambda: T,
    tu_interior: &[T],
    tl: T,
    cfg: &ContinuationConfig<T>,
) -> Result<(Vec<T>, T, T, usize)> {
    let n = grid.n_interior();
    let pred_u = u.clone();
    let pred_l = lambda;
    for it in 0..cfg.max_corrector_iters {
        let sys = FdSystem::new(grid, lambda, p, weight);
        let r = sys.residual(&u);
        let rn = residual_norm(&r);
        // hyperplane constraint through the predictor, orthogonal to the
        // secant tangent
        let du: Vec<T> = (1..=n).map(|j| u[j] - pred_u[j]).collect();
        let g = inner(tu_interior, &du) + tl * (lambda - pred_l);
        if rn <= cfg.corrector_tol.max(sys.residual_floor(&u)) {
            return Ok((u, lambda, rn, it));
        }
        let (duv, dl) = bordered_step(&sys, &u, &r, g, tu_interior, tl)?;
        if !dl.is_finite() || duv.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonConvergence("corrector produced nonfinite step".into()));
        }
        for j in 1..=n {
            u[j] = u[j] + duv[j - 1];
        }
        lambda = lambda + dl;
    }
    Err(Error::NonConvergence("arclength corrector exhausted its iterations".into()))
}

/// Locates sign changes of the finite-difference `dlambda/ds` along the
/// branch and refines the rightmost fold by a local quadratic fit. `None`
/// when the slope never changes sign.
pub fn detect_turning_point<T: Real>(branch: &Branch<T>) -> Option<Fold<T>> {
    let pts = &branch.points;
    if pts.len() < 3 {
        return None;
    }
    // cumulative arclength
    let mut s = vec![T::zero()];
    for step in &branch.steps {
        let last = *s.last().unwrap();
        s.push(last + *step);
    }
    let slope = |k: usize| (pts[k + 1].lambda - pts[k].lambda) / (s[k + 1] - s[k]);
    let mut best: Option<Fold<T>> = None;
    for k in 1..pts.len() - 1 {
        let (d0, d1) = (slope(k - 1), slope(k));
        if d0 == T::zero() || d1 == T::zero() || (d0 > T::zero()) == (d1 > T::zero()) {
            continue;
        }
        // quadratic through (s, lambda) at k-1, k, k+1
        let (s0, s1, s2) = (s[k - 1], s[k], s[k + 1]);
        let (l0, l1, l2) = (pts[k - 1].lambda, pts[k].lambda, pts[k + 1].lambda);
        let d01 = (l1 - l0) / (s1 - s0);
        let d12 = (l2 - l1) / (s2 - s1);
        let a = (d12 - d01) / (s2 - s0);
        if a == T::zero() {
            continue;
        }
        let sv = (s0 + s1) / T::of(2.0) - d01 / (T::of(2.0) * a);
        let lambda_t = l0 + d01 * (sv - s0) + a * (sv - s0) * (sv - s1);
        let better = match &best {
            None => true,
            Some(f) => lambda_t > f.lambda_t,
        };
        if better {
            best = Some(Fold { lambda_t, index: k });
        }
    }
    best
}
