//! Green's kernel, solution operator `K`, fixed-point operator `Phi_lambda`,
//! and the two homotopy right-hand sides, all on a uniform grid.
//!
//! `apply_k` discretizes the integral operator by the composite trapezoid
//! rule with the kernel scaled by `1/L`, so that its output solves
//! `-u'' = f`, `u(0) = u(L) = 0` for every domain length. On the uniform
//! grid this quadrature is, entry for entry, the exact inverse of the
//! three-point Laplacian, which makes the finite-difference and integral
//! formulations agree to rounding on converged solutions.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::index_set::IndexSet;
use crate::weight::{SignPattern, Weight};
use crate::Real;

/// Magnitude guard for the integral operators.
pub const MAGNITUDE_CAP: f64 = 1e12;

/// The kernel: `y (L - x)` for `y <= x`, `x (L - y)` for `y > x`.
/// Symmetric and nonnegative on `[0, L]^2`.
pub fn kernel<T: Real>(x: T, y: T, length: T) -> T {
    debug_assert!(x >= T::zero() && x <= length);
    debug_assert!(y >= T::zero() && y <= length);
    if y <= x {
        y * (length - x)
    } else {
        x * (length - y)
    }
}

/// Applies the solution operator: `u_j = (1/L) * trapezoid(kernel(x_j, .) f)`.
/// `f` holds one value per grid node; the result vanishes at both ends.
pub fn apply_k<T: Real>(grid: &Grid<T>, f: &[T]) -> Vec<T> {
    let nn = grid.n_nodes();
    assert_eq!(f.len(), nn, "f must be sampled on every grid node");
    let length = grid.length();
    let h = grid.spacing();
    let half = T::of(0.5);
    let mut u = vec![T::zero(); nn];
    for j in 1..nn - 1 {
        let xj = grid.node(j);
        let mut acc = T::zero();
        for (k, &fk) in f.iter().enumerate() {
            let w = if k == 0 || k == nn - 1 { half } else { T::one() };
            acc = acc + w * kernel(xj, grid.node(k), length) * fk;
        }
        u[j] = acc * h / length;
    }
    u
}

/// Eigenpair of the operator on the interval: `phi = sin(pi x / L)` with
/// `K phi ~ phi / Sigma_1`, `Sigma_1 = (pi / L)^2`.
#[derive(Clone, Debug)]
pub struct Eigenpair<T> {
    pub sigma1: T,
    pub phi: Vec<T>,
}

pub fn eigenpair<T: Real>(grid: &Grid<T>) -> Eigenpair<T> {
    let length = grid.length();
    let sigma1 = (T::PI() / length) * (T::PI() / length);
    let phi = (0..grid.n_nodes())
        .map(|j| (T::PI() * grid.node(j) / length).sin())
        .collect();
    Eigenpair { sigma1, phi }
}

fn check_magnitude<T: Real>(u: &[T]) -> Result<()> {
    let cap = T::of(MAGNITUDE_CAP);
    if u.iter().any(|v| v.abs() > cap || !v.is_finite()) {
        return Err(Error::MagnitudeFault { cap: MAGNITUDE_CAP });
    }
    Ok(())
}

/// The fixed-point operator: `Phi_lambda(u) = K(lambda u+ + a (u+)^p)` with
/// `u+ = max(u, 0)` nodewise. Its fixed points are the nonnegative solutions.
pub fn apply_phi<T: Real>(
    grid: &Grid<T>,
    lambda: T,
    p: T,
    u: &[T],
    weight: &Weight<T>,
) -> Result<Vec<T>> {
    apply_homotopy(grid, Homotopy::Theta(T::one()), lambda, p, u, weight)
}

/// Homotopy right-hand sides: `Theta(t)` scales the whole forcing by
/// `t in [0, 1]`; `Mu(mu, w)` adds `mu * w` with `mu >= 0`. `Theta(1)` and
/// `Mu(0, _)` both reduce exactly to [`apply_phi`].
pub enum Homotopy<'a, T> {
    Theta(T),
    Mu(T, &'a BumpWeight<T>),
}

pub fn apply_homotopy<T: Real>(
    grid: &Grid<T>,
    kind: Homotopy<'_, T>,
    lambda: T,
    p: T,
    u: &[T],
    weight: &Weight<T>,
) -> Result<Vec<T>> {
    assert_eq!(u.len(), grid.n_nodes());
    check_magnitude(u)?;
    match &kind {
        Homotopy::Theta(t) => {
            if *t < T::zero() || *t > T::one() {
                return Err(Error::InvalidInput(format!(
                    "theta = {} outside [0, 1]",
                    t.as_f64()
                )));
            }
        }
        Homotopy::Mu(mu, _) => {
            if *mu < T::zero() {
                return Err(Error::InvalidInput(format!("mu = {} negative", mu.as_f64())));
            }
        }
    }
    let rhs: Vec<T> = (0..grid.n_nodes())
        .map(|j| {
            let up = u[j].max(T::zero());
            let base = lambda * up + weight.eval(grid.node(j)) * up.powf(p);
            match &kind {
                Homotopy::Theta(t) => *t * base,
                Homotopy::Mu(mu, w) => base + *mu * w.samples()[j],
            }
        })
        .collect();
    Ok(apply_k(grid, &rhs))
}

/// Bump forcing supported on a chosen set of humps: on each selected hump
/// `w(x) = dist(x, hump edge)^{gamma_i}`, and `w = 0` elsewhere.
#[derive(Clone, Debug)]
pub struct BumpWeight<T> {
    index_set: IndexSet,
    humps: Vec<(T, T, T)>, // (lo, hi, gamma) of the selected humps
    samples: Vec<T>,
}

impl<T: Real> BumpWeight<T> {
    pub fn new(index_set: IndexSet, pattern: &SignPattern<T>, grid: &Grid<T>) -> Result<Self> {
        if index_set.is_empty() {
            return Err(Error::InvalidInput("bump weight needs a nonempty index set".into()));
        }
        if index_set.members().iter().any(|&i| i > pattern.n()) {
            return Err(Error::InvalidInput(format!(
                "index set {index_set} exceeds the {} detected humps",
                pattern.n()
            )));
        }
        let humps: Vec<(T, T, T)> = index_set
            .members()
            .iter()
            .map(|&i| {
                let (lo, hi) = pattern.positivity_interval(i - 1);
                (lo, hi, pattern.gamma()[i - 1])
            })
            .collect();
        let mut w = Self { index_set, humps, samples: Vec::new() };
        w.samples = (0..grid.n_nodes()).map(|j| w.eval(grid.node(j))).collect();
        Ok(w)
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.index_set
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn eval(&self, x: T) -> T {
        for &(lo, hi, gamma) in &self.humps {
            if x >= lo && x <= hi {
                let dist = (x - lo).min(hi - x);
                return dist.powf(gamma);
            }
        }
        T::zero()
    }

    /// Trapezoid integral of `w * phi` over the grid.
    pub fn int_w_phi(&self, grid: &Grid<T>) -> T {
        let ep = eigenpair(grid);
        let h = grid.spacing();
        let half = T::of(0.5);
        let nn = grid.n_nodes();
        let mut acc = T::zero();
        for j in 0..nn {
            let w = if j == 0 || j == nn - 1 { half } else { T::one() };
            acc = acc + w * self.samples[j] * ep.phi[j];
        }
        acc * h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::WeightSpec;

    fn sin3() -> Weight<f64> {
        Weight::build(&WeightSpec::SinMultibump { m: 3, length: 1.0 }).unwrap()
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn kernel_values_and_symmetry() {
        assert_eq!(kernel(0.0f64, 0.3, 1.0), 0.0);
        assert_eq!(kernel(0.4f64, 0.4, 1.0), 0.4 * 0.6);
        assert!((kernel(0.25f64, 0.75, 1.0) - 0.0625).abs() < 1e-15);
        for (x, y) in [(0.1, 0.9), (0.5, 0.2), (0.77, 0.13)] {
            assert_eq!(kernel(x, y, 1.0f64), kernel(y, x, 1.0));
            assert!(kernel(x, y, 1.0f64) >= 0.0);
        }
    }

    #[test]
    fn apply_k_solves_constant_forcing() {
        let grid = Grid::new(257, 1.0).unwrap();
        let f = vec![1.0; grid.n_nodes()];
        let u = apply_k(&grid, &f);
        let exact: Vec<f64> =
            (0..grid.n_nodes()).map(|j| grid.node(j) * (1.0 - grid.node(j)) / 2.0).collect();
        assert!(max_abs_diff(&u, &exact) < 1e-12);
    }

    #[test]
    fn apply_k_solves_constant_forcing_for_other_lengths() {
        let length = 2.5;
        let grid = Grid::new(129, length).unwrap();
        let f = vec![1.0; grid.n_nodes()];
        let u = apply_k(&grid, &f);
        let exact: Vec<f64> =
            (0..grid.n_nodes()).map(|j| grid.node(j) * (length - grid.node(j)) / 2.0).collect();
        assert!(max_abs_diff(&u, &exact) < 1e-11);
    }

    #[test]
    fn apply_k_eigenrelation_converges_at_second_order() {
        // || K phi - phi / Sigma_1 ||_inf against the continuum eigenvalue
        let mut errs = Vec::new();
        let mut hs = Vec::new();
        for n in [129usize, 257, 513] {
            let grid = Grid::new(n, 1.0).unwrap();
            let ep = eigenpair(&grid);
            let u = apply_k(&grid, &ep.phi);
            let exact: Vec<f64> = ep.phi.iter().map(|v| v / ep.sigma1).collect();
            errs.push(max_abs_diff(&u, &exact));
            hs.push(grid.spacing());
        }
        for w in errs.windows(2).zip(hs.windows(2)) {
            let (e, h) = w;
            let order = (e[0] / e[1]).ln() / (h[0] / h[1]).ln();
            assert!((1.9..=2.1).contains(&order), "measured order {order}");
        }
    }

    #[test]
    fn apply_k_is_the_discrete_inverse_of_the_laplacian() {
        let grid = Grid::<f64>::new(129, 1.0).unwrap();
        let f: Vec<f64> =
            (0..grid.n_nodes()).map(|j| (2.7 * grid.node(j)).sin() + 0.3).collect();
        let u = apply_k(&grid, &f);
        let h2 = grid.spacing() * grid.spacing();
        let mut worst: f64 = 0.0;
        for j in 1..grid.n_nodes() - 1 {
            let lap = (-u[j - 1] + 2.0 * u[j] - u[j + 1]) / h2;
            worst = worst.max((lap - f[j]).abs());
        }
        assert!(worst < 1e-9, "second difference mismatch {worst}");
    }

    #[test]
    fn apply_k_zero_and_monotone() {
        let grid = Grid::new(65, 1.0).unwrap();
        let zero = vec![0.0; grid.n_nodes()];
        assert!(apply_k(&grid, &zero).iter().all(|&v| v == 0.0));
        let f: Vec<f64> = (0..grid.n_nodes()).map(|j| (j % 5) as f64).collect();
        assert!(apply_k(&grid, &f).iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn phi_fixed_point_residual_scales_with_epsilon_cubed() {
        let grid = Grid::new(257, 1.0).unwrap();
        let w = sin3();
        let ep = eigenpair(&grid);
        // discrete eigenvalue of the trapezoid-Green operator
        let h = grid.spacing();
        let sigma1_h = 2.0 * (1.0 - (std::f64::consts::PI * h).cos()) / (h * h);
        let mut resids = Vec::new();
        for eps in [1e-2, 1e-3] {
            let u: Vec<f64> = ep.phi.iter().map(|v| eps * v).collect();
            let pu = apply_phi(&grid, sigma1_h, 3.0, &u, &w).unwrap();
            resids.push(max_abs_diff(&u, &pu));
        }
        let ratio = resids[0] / resids[1];
        assert!(
            (300.0..3000.0).contains(&ratio),
            "cubic scaling expected, got ratio {ratio} from {resids:?}"
        );
        // and with the continuum eigenvalue the residual is still tiny
        let eps = 1e-4;
        let u: Vec<f64> = ep.phi.iter().map(|v| eps * v).collect();
        let pu = apply_phi(&grid, ep.sigma1, 3.0, &u, &w).unwrap();
        assert!(max_abs_diff(&u, &pu) < 1e-7);
    }

    #[test]
    fn phi_of_zero_is_zero_and_magnitude_guard_trips() {
        let grid = Grid::new(65, 1.0).unwrap();
        let w = sin3();
        let zero = vec![0.0; grid.n_nodes()];
        assert!(apply_phi(&grid, -80.0, 3.0, &zero, &w).unwrap().iter().all(|&v| v == 0.0));
        let mut huge = zero.clone();
        huge[10] = 2e12;
        assert!(matches!(
            apply_phi(&grid, -80.0, 3.0, &huge, &w),
            Err(Error::MagnitudeFault { .. })
        ));
    }

    #[test]
    fn homotopy_endpoints_reduce_to_phi() {
        let grid = Grid::new(65, 1.0).unwrap();
        let w = sin3();
        let u: Vec<f64> = (0..grid.n_nodes())
            .map(|j| (std::f64::consts::PI * grid.node(j)).sin() * 3.0 - 0.5)
            .collect();
        let phi_u = apply_phi(&grid, -40.0, 3.0, &u, &w).unwrap();
        let theta1 = apply_homotopy(&grid, Homotopy::Theta(1.0), -40.0, 3.0, &u, &w).unwrap();
        assert_eq!(phi_u, theta1);
        let bw = BumpWeight::new(
            IndexSet::new([1], 2).unwrap(),
            w.pattern(),
            &grid,
        )
        .unwrap();
        let mu0 = apply_homotopy(&grid, Homotopy::Mu(0.0, &bw), -40.0, 3.0, &u, &w).unwrap();
        assert_eq!(phi_u, mu0);
        let theta0 = apply_homotopy(&grid, Homotopy::Theta(0.0), -40.0, 3.0, &u, &w).unwrap();
        assert!(theta0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bump_weight_vanishes_off_selected_humps() {
        let grid = Grid::new(129, 1.0).unwrap();
        let w = sin3();
        let bw = BumpWeight::new(IndexSet::new([2], 2).unwrap(), w.pattern(), &grid).unwrap();
        // first hump is (0, 1/3): w must vanish there
        assert_eq!(bw.eval(0.2), 0.0);
        assert!(bw.eval(0.8) > 0.0);
        assert!(bw.int_w_phi(&grid) > 0.0);
        assert!(BumpWeight::new(IndexSet::empty(), w.pattern(), &grid).is_err());
    }
}
