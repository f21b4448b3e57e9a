//! Damped Newton iteration on the finite-difference discretization of the
//! positive-part form
//!
//! ```text
//!     -u'' = lambda u+ + a(x) (u+)^p,    u(0) = u(L) = 0,
//! ```
//!
//! seeded once per nonempty index set with bump-shaped initial guesses. The
//! positive-part form makes every converged iterate a nonnegative solution:
//! the discrete maximum principle transfers verbatim to the three-point
//! stencil.

use crate::classify::{self, ClassifierConfig};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridProfile, ProfileSource};
use crate::index_set::IndexSet;
use crate::linalg::Tridiagonal;
use crate::shooting::{SolutionEntry, SolutionSet};
use crate::weight::{SignPattern, Weight};
use crate::Real;

#[derive(Clone, Copy, Debug)]
pub struct NewtonConfig<T> {
    pub max_iters: usize,
    /// Target residual in max norm. Near machine precision the iteration is
    /// also accepted once backtracking stalls below the rounding floor of
    /// the stencil, `16 eps max(1, ||u||) * 2 / h^2`.
    pub residual_tol: T,
    /// Smallest backtracking step.
    pub damping_min: T,
    /// Sup-norm distance under which two profiles count as the same solution.
    pub dedup_tol: T,
}

impl<T: Real> Default for NewtonConfig<T> {
    fn default() -> Self {
        Self {
            max_iters: 100,
            residual_tol: T::of(1e-10),
            damping_min: T::of(2.0f64.powi(-20)),
            dedup_tol: T::of(1e-3),
        }
    }
}

/// The discretized system at fixed `lambda`, with the weight pre-sampled.
pub(crate) struct FdSystem<'a, T> {
    pub grid: &'a Grid<T>,
    pub lambda: T,
    pub p: T,
    pub a_nodes: Vec<T>,
}

#[inline]
fn upow<T: Real>(u: T, p: T) -> T {
    if p == T::of(3.0) {
        u * u * u
    } else if p == T::of(2.0) {
        u * u
    } else {
        u.powf(p)
    }
}

impl<'a, T: Real> FdSystem<'a, T> {
    pub fn new(grid: &'a Grid<T>, lambda: T, p: T, weight: &Weight<T>) -> Self {
        let a_nodes = (0..grid.n_nodes()).map(|j| weight.eval(grid.node(j))).collect();
        Self { grid, lambda, p, a_nodes }
    }

    /// Residual on interior nodes: `(-u_{j-1} + 2u_j - u_{j+1})/h^2
    /// - lambda u_j+ - a_j (u_j+)^p`.
    pub fn residual(&self, u: &[T]) -> Vec<T> {
        let n = self.grid.n_interior();
        let h2 = self.grid.spacing() * self.grid.spacing();
        let two = T::of(2.0);
        (1..=n)
            .map(|j| {
                let lap = (-u[j - 1] + two * u[j] - u[j + 1]) / h2;
                let up = u[j].max(T::zero());
                lap - self.lambda * up - self.a_nodes[j] * upow(up, self.p)
            })
            .collect()
    }

    /// Tridiagonal linearization; the positive-part kink takes the
    /// subgradient 0 at `u_j <= 0`, so the trivial state linearizes to the
    /// plain discrete Laplacian.
    pub fn jacobian(&self, u: &[T]) -> Tridiagonal<T> {
        let n = self.grid.n_interior();
        let h2 = self.grid.spacing() * self.grid.spacing();
        let two = T::of(2.0);
        let off = -T::one() / h2;
        let diag = (1..=n)
            .map(|j| {
                let mut d = two / h2;
                if u[j] > T::zero() {
                    d = d - (self.lambda + self.p * self.a_nodes[j] * upow(u[j], self.p - T::one()));
                }
                d
            })
            .collect();
        Tridiagonal::new(vec![off; n], diag, vec![off; n])
    }

    pub fn residual_norm(&self, u: &[T]) -> T {
        self.residual(u).iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Rounding floor of the residual evaluation for iterates of size `u`:
    /// the stencil cancels terms of magnitude `2 ||u|| / h^2`.
    pub fn residual_floor(&self, u: &[T]) -> T {
        let h2 = self.grid.spacing() * self.grid.spacing();
        let sup = u.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        T::of(4.0) * T::epsilon() * sup * T::of(2.0) / h2
    }
}

#[derive(Clone, Debug)]
pub struct NewtonRun<T> {
    pub values: Vec<T>,
    pub residual_norm: T,
    pub iters: usize,
    pub converged: bool,
}

/// Damped Newton with strict-decrease backtracking (factor 1/2). Accepted
/// steps never increase the max-norm residual.
pub(crate) fn newton_iterate<T: Real>(
    sys: &FdSystem<'_, T>,
    start: Vec<T>,
    cfg: &NewtonConfig<T>,
) -> NewtonRun<T> {
    let n = sys.grid.n_interior();
    let mut u = start;
    u[0] = T::zero();
    u[n + 1] = T::zero();
    let mut r = sys.residual(&u);
    let mut rn = r.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    for it in 0..cfg.max_iters {
        if rn <= cfg.residual_tol {
            return NewtonRun { values: u, residual_norm: rn, iters: it, converged: true };
        }
        let jac = sys.jacobian(&u);
        let neg_r: Vec<T> = r.iter().map(|v| -*v).collect();
        let delta = match jac.solve(&neg_r) {
            Ok(d) => d,
            Err(_) => {
                return NewtonRun { values: u, residual_norm: rn, iters: it, converged: false }
            }
        };
        let mut t = T::one();
        let mut moved = false;
        while t >= cfg.damping_min {
            let mut trial = u.clone();
            for j in 1..=n {
                trial[j] = trial[j] + t * delta[j - 1];
            }
            let tr = sys.residual(&trial);
            let trn = tr.iter().fold(T::zero(), |m, v| m.max(v.abs()));
            if trn < rn {
                u = trial;
                r = tr;
                rn = trn;
                moved = true;
                break;
            }
            t = t / T::of(2.0);
        }
        if !moved {
            // backtracking stalled: accept only at the rounding floor
            let ok = rn <= sys.residual_floor(&u).max(cfg.residual_tol);
            return NewtonRun { values: u, residual_norm: rn, iters: it, converged: ok };
        }
    }
    let ok = rn <= sys.residual_floor(&u).max(cfg.residual_tol);
    NewtonRun { values: u, residual_norm: rn, iters: cfg.max_iters, converged: ok }
}

/// Finite-difference residual of the positive-part system on interior nodes.
pub fn fd_residual<T: Real>(
    grid: &Grid<T>,
    lambda: T,
    u: &[T],
    weight: &Weight<T>,
    p: T,
) -> Vec<T> {
    FdSystem::new(grid, lambda, p, weight).residual(u)
}

/// Tridiagonal Jacobian of [`fd_residual`].
pub fn fd_jacobian<T: Real>(
    grid: &Grid<T>,
    lambda: T,
    u: &[T],
    weight: &Weight<T>,
    p: T,
) -> Tridiagonal<T> {
    FdSystem::new(grid, lambda, p, weight).jacobian(u)
}

/// Bump-shaped seed: `amplitude * sin(pi (x - sigma_i)/(tau_i - sigma_i))`
/// on each selected hump, zero elsewhere.
pub fn seed_profile<T: Real>(
    index_set: &IndexSet,
    pattern: &SignPattern<T>,
    amplitude: T,
    grid: &Grid<T>,
) -> Vec<T> {
    let mut u = vec![T::zero(); grid.n_nodes()];
    for &i in index_set.members() {
        let (lo, hi) = pattern.positivity_interval(i - 1);
        for (j, v) in u.iter_mut().enumerate() {
            let x = grid.node(j);
            if x > lo && x < hi {
                *v = *v + amplitude * (T::PI() * (x - lo) / (hi - lo)).sin();
            }
        }
    }
    u
}

/// Default seed amplitude: twice the lower bound `r_lambda` on nontrivial
/// solution norms.
pub fn default_amplitude<T: Real>(lambda: T, weight: &Weight<T>, p: T) -> Result<T> {
    Ok(T::of(2.0) * classify::r_lambda(lambda, weight.sup_norm(), p)?)
}

/// Newton-polishes candidate values (for instance sampled from a shooting
/// trajectory) into a root of the discrete system; returns the polished
/// values and their residual norm.
pub fn polish<T: Real>(
    grid: &Grid<T>,
    lambda: T,
    weight: &Weight<T>,
    p: T,
    values: Vec<T>,
    cfg: &NewtonConfig<T>,
) -> Result<(Vec<T>, T)> {
    let sys = FdSystem::new(grid, lambda, p, weight);
    let run = newton_iterate(&sys, values, cfg);
    if !run.converged {
        return Err(Error::NonConvergence(format!(
            "polish stalled at residual {:e}",
            run.residual_norm.as_f64()
        )));
    }
    Ok((run.values, run.residual_norm))
}

/// What happened to one seed.
#[derive(Clone, Debug)]
pub struct SeedReport<T> {
    pub index_set: IndexSet,
    pub amplitude: T,
    pub converged: bool,
    pub iters: usize,
    pub residual_norm: T,
    pub kept: bool,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome<T> {
    pub set: SolutionSet<T>,
    pub seeds: Vec<SeedReport<T>>,
}

/// Runs damped Newton from bump seeds over every nonempty index set, with
/// amplitudes `A`, `A/2`, `A/4` (`A = 2 r_lambda`); keeps converged,
/// nonnegative, nontrivial profiles; dedups them in sup norm; classifies
/// each into its box.
pub fn solve_all<T: Real>(
    lambda: T,
    weight: &Weight<T>,
    p: T,
    grid: &Grid<T>,
    cfg: &NewtonConfig<T>,
    classifier: &ClassifierConfig<T>,
) -> Result<SolveOutcome<T>> {
    if lambda >= T::zero() {
        return Err(Error::InvalidInput("solve_all needs lambda < 0".into()));
    }
    let n = weight.n_humps();
    let amp = default_amplitude(lambda, weight, p)?;
    let sys = FdSystem::new(grid, lambda, p, weight);
    let mut kept: Vec<GridProfile<T>> = Vec::new();
    let mut seeds = Vec::new();
    let mut warnings = Vec::new();

    for index_set in IndexSet::nonempty_subsets(n) {
        for factor in [1.0, 0.5, 0.25] {
            let amplitude = amp * T::of(factor);
            let start = seed_profile(&index_set, weight.pattern(), amplitude, grid);
            let run = newton_iterate(&sys, start, cfg);
            let mut report = SeedReport {
                index_set: index_set.clone(),
                amplitude,
                converged: run.converged,
                iters: run.iters,
                residual_norm: run.residual_norm,
                kept: false,
            };
            if run.converged {
                let profile = GridProfile::new(
                    grid.clone(),
                    run.values,
                    lambda,
                    run.residual_norm,
                    ProfileSource::Newton,
                )?;
                let nontrivial = profile.sup_norm() > cfg.dedup_tol;
                let nonneg = profile.min_value() >= -T::of(1e-8);
                let fresh =
                    kept.iter().all(|q| profile.sup_distance(q) >= cfg.dedup_tol);
                if nontrivial && nonneg && fresh {
                    kept.push(profile);
                    report.kept = true;
                }
            }
            seeds.push(report);
        }
    }

    if kept.is_empty() {
        return Err(Error::SuiteFailure(format!(
            "no nontrivial solution converged at lambda = {}",
            lambda.as_f64()
        )));
    }

    let mut entries: Vec<SolutionEntry<T>> = kept
        .into_iter()
        .map(|profile| {
            let sups = profile.per_interval_sups(weight.pattern());
            let index_set = match classify::classify(&profile, weight.pattern(), classifier) {
                Ok(set) => Some(set),
                Err(e) => {
                    warnings.push(format!(
                        "classification refused for a solution with ||u|| = {}: {e}",
                        profile.sup_norm().as_f64()
                    ));
                    None
                }
            };
            let (s0, s1) = profile.boundary_slopes();
            SolutionEntry {
                profile,
                per_interval_sup: sups,
                index_set,
                slope_left: s0,
                slope_right: s1,
                shooting_slope: None,
                shooting_index: None,
                degenerate: false,
            }
        })
        .collect();
    entries.sort_by(|a, b| {
        a.index_set
            .cmp(&b.index_set)
            .then_with(|| a.profile.sup_norm().partial_cmp(&b.profile.sup_norm()).unwrap())
    });

    Ok(SolveOutcome {
        set: SolutionSet {
            lambda,
            entries,
            warnings,
            s_max: None,
            scan: Vec::new(),
        },
        seeds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::WeightSpec;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn sin3() -> Weight<f64> {
        Weight::build(&WeightSpec::SinMultibump { m: 3, length: 1.0 }).unwrap()
    }

    #[test]
    fn residual_vanishes_on_trivial_state() {
        let grid = Grid::new(65, 1.0).unwrap();
        let w = sin3();
        let u = vec![0.0; grid.n_nodes()];
        assert!(fd_residual(&grid, -80.0, &u, &w, 3.0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn residual_on_scaled_eigenfunction_is_second_order_small()
    {
        let grid = Grid::new(257, 1.0).unwrap();
        let w = sin3();
        let ep = crate::greens::eigenpair(&grid);
        let eps = 1e-4;
        let u: Vec<f64> = ep.phi.iter().map(|v| eps * v).collect();
        let rn = fd_residual(&grid, ep.sigma1, &u, &w, 3.0)
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let h = grid.spacing();
        // O(h^2 eps) discretization term plus O(eps^p) nonlinearity
        let bound = 10.0 * h * h * eps + 2.0 * eps.powi(3);
        assert!(rn < bound, "residual {rn} vs bound {bound}");
    }

    #[test]
    fn jacobian_is_laplacian_for_negative_states() {
        let grid = Grid::new(33, 1.0).unwrap();
        let w = sin3();
        let u = vec![-1.0; grid.n_nodes()];
        let jac = fd_jacobian(&grid, -40.0, &u, &w, 3.0);
        let h2 = grid.spacing() * grid.spacing();
        assert!(jac.diag.iter().all(|&d| d == 2.0 / h2));
        // at the kink the subgradient keeps the same diagonal
        let zero = vec![0.0; grid.n_nodes()];
        let jz = fd_jacobian(&grid, -40.0, &zero, &w, 3.0);
        assert!(jz.diag.iter().all(|&d| d == 2.0 / h2));
    }

    #[test]
    fn jacobian_matches_directional_derivative() {
        let grid = Grid::new(129, 1.0).unwrap();
        let w = sin3();
        let lambda = -40.0;
        let p = 3.0;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let nn = grid.n_nodes();
        for _ in 0..100 {
            // random state bounded away from the kink; directions keep the
            // boundary pinned
            let mut u: Vec<f64> = (0..nn).map(|_| 0.1 + rng.gen::<f64>() * 4.0).collect();
            u[0] = 0.0;
            u[nn - 1] = 0.0;
            let mut dir: Vec<f64> = (0..nn).map(|_| rng.gen::<f64>() - 0.5).collect();
            dir[0] = 0.0;
            dir[nn - 1] = 0.0;
            let eps = 1e-6;
            let up: Vec<f64> = u.iter().zip(&dir).map(|(a, d)| a + eps * d).collect();
            let um: Vec<f64> = u.iter().zip(&dir).map(|(a, d)| a - eps * d).collect();
            let rp = fd_residual(&grid, lambda, &up, &w, p);
            let rm = fd_residual(&grid, lambda, &um, &w, p);
            let jd = fd_jacobian(&grid, lambda, &u, &w, p).matvec(&dir[1..nn - 1]);
            let fd: Vec<f64> =
                rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
            let scale = jd.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let worst = jd
                .iter()
                .zip(&fd)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            assert!(worst / scale < 1e-6, "direction check failed: {}", worst / scale);
        }
    }

    #[test]
    fn seed_profile_covers_selected_humps_only() {
        let grid = Grid::new(257, 1.0).unwrap();
        let w = sin3();
        let amp = 5.0;
        let set1 = IndexSet::new([1], 2).unwrap();
        let u = seed_profile(&set1, w.pattern(), amp, &grid);
        let p = GridProfile::new(grid.clone(), u, -80.0, 0.0, ProfileSource::Newton).unwrap();
        let sups = p.per_interval_sups(w.pattern());
        assert!((sups[0] - amp).abs() < 1e-3);
        assert_eq!(sups[1], 0.0);
        let set12 = IndexSet::new([1, 2], 2).unwrap();
        let u = seed_profile(&set12, w.pattern(), amp, &grid);
        let p = GridProfile::new(grid.clone(), u, -80.0, 0.0, ProfileSource::Newton).unwrap();
        let sups = p.per_interval_sups(w.pattern());
        assert!((sups[0] - amp).abs() < 1e-3 && (sups[1] - amp).abs() < 1e-3);
    }

    #[test]
    fn default_amplitude_doubles_r_lambda() {
        let w = sin3();
        let a = default_amplitude(-80.0, &w, 3.0).unwrap();
        assert!((a - 2.0 * 80.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn solve_all_occupies_all_three_boxes() {
        let grid = Grid::new(257, 1.0).unwrap();
        let w = sin3();
        let out = solve_all(
            -80.0,
            &w,
            3.0,
            &grid,
            &NewtonConfig::default(),
            &ClassifierConfig::default(),
        )
        .unwrap();
        let boxes: Vec<String> = out
            .set
            .entries
            .iter()
            .filter_map(|e| e.index_set.as_ref().map(|s| s.to_string()))
            .collect();
        assert!(boxes.contains(&"{1}".to_string()), "boxes {boxes:?}");
        assert!(boxes.contains(&"{2}".to_string()), "boxes {boxes:?}");
        assert!(boxes.contains(&"{1,2}".to_string()), "boxes {boxes:?}");
        // nonnegative and above the norm lower bound
        let r = 80.0f64.sqrt();
        for e in &out.set.entries {
            assert!(e.profile.min_value() >= -1e-8);
            assert!(e.profile.sup_norm() > r);
        }
    }
}
