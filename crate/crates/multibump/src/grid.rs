//! Uniform grid on `[0, L]` and solution profiles living on it.

use crate::error::{Error, Result};
use crate::weight::SignPattern;
use crate::Real;

/// Uniform grid with `N` interior points: `x_j = j * h`, `j = 0..N+1`,
/// `h = L / (N + 1)`. A power of two plus one is the recommended `N`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    n_interior: usize,
    length: T,
    spacing: T,
}

impl<T: Real> Grid<T> {
    pub fn new(n_interior: usize, length: T) -> Result<Self> {
        if n_interior == 0 {
            return Err(Error::InvalidInput("grid needs at least one interior point".into()));
        }
        if !(length > T::zero()) {
            return Err(Error::InvalidInput("grid length must be positive".into()));
        }
        let spacing = length / T::from_usize(n_interior + 1).unwrap();
        Ok(Self { n_interior, length, spacing })
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    /// Total node count including both boundary nodes.
    pub fn n_nodes(&self) -> usize {
        self.n_interior + 2
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn length(&self) -> T {
        self.length
    }

    /// Node `x_j`; the last node is exactly `L`.
    pub fn node(&self, j: usize) -> T {
        debug_assert!(j < self.n_nodes());
        if j == self.n_interior + 1 {
            self.length
        } else {
            T::from_usize(j).unwrap() * self.spacing
        }
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.n_nodes()).map(|j| self.node(j)).collect()
    }

    /// The refined grid with `2N + 1` interior points (same length).
    pub fn refine(&self) -> Grid<T> {
        Grid::new(2 * self.n_interior + 1, self.length).expect("refined grid")
    }
}

/// How a profile was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileSource {
    Newton,
    Shooting,
    Continuation,
}

/// A candidate or converged solution sampled on a [`Grid`]. Boundary values
/// are exactly zero.
#[derive(Clone, Debug)]
pub struct GridProfile<T> {
    grid: Grid<T>,
    values: Vec<T>,
    lambda: T,
    residual_norm: T,
    source: ProfileSource,
}

impl<T: Real> GridProfile<T> {
    pub fn new(
        grid: Grid<T>,
        mut values: Vec<T>,
        lambda: T,
        residual_norm: T,
        source: ProfileSource,
    ) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::InvalidInput(format!(
                "profile has {} values, grid has {} nodes",
                values.len(),
                grid.n_nodes()
            )));
        }
        // boundary nodes are pinned, not approximated
        values[0] = T::zero();
        let last = values.len() - 1;
        values[last] = T::zero();
        Ok(Self { grid, values, lambda, residual_norm, source })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn residual_norm(&self) -> T {
        self.residual_norm
    }

    pub fn source(&self) -> ProfileSource {
        self.source
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> T {
        self.values.iter().fold(T::infinity(), |m, v| m.min(*v))
    }

    /// Max of the profile over grid nodes inside `[lo, hi]`; zero when no
    /// node falls in the window.
    pub fn interval_sup(&self, lo: T, hi: T) -> T {
        let mut sup = T::zero();
        let mut seen = false;
        for (j, &v) in self.values.iter().enumerate() {
            let x = self.grid.node(j);
            if x >= lo && x <= hi {
                sup = if seen { sup.max(v) } else { v };
                seen = true;
            }
        }
        if seen {
            sup
        } else {
            T::zero()
        }
    }

    /// Sups over each positivity interval of `pattern`, in order.
    pub fn per_interval_sups(&self, pattern: &SignPattern<T>) -> Vec<T> {
        (0..pattern.n())
            .map(|i| {
                let (lo, hi) = pattern.positivity_interval(i);
                self.interval_sup(lo, hi)
            })
            .collect()
    }

    /// One-sided boundary slopes `(u'(0), u'(L))` by first differences.
    pub fn boundary_slopes(&self) -> (T, T) {
        let h = self.grid.spacing();
        let n = self.values.len();
        ((self.values[1] - self.values[0]) / h, (self.values[n - 1] - self.values[n - 2]) / h)
    }

    /// Sup-norm distance to another profile on the same grid.
    pub fn sup_distance(&self, other: &GridProfile<T>) -> T {
        assert_eq!(self.values.len(), other.values.len(), "profiles on different grids");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), T::max)
    }
}
