//! Tridiagonal systems with partial pivoting.

use crate::error::{Error, Result};
use crate::Real;

/// Tridiagonal matrix stored by bands. `sub[0]` and `sup[n-1]` are unused.
#[derive(Clone, Debug)]
pub struct Tridiagonal<T> {
    pub sub: Vec<T>,
    pub diag: Vec<T>,
    pub sup: Vec<T>,
}

impl<T: Real> Tridiagonal<T> {
    pub fn new(sub: Vec<T>, diag: Vec<T>, sup: Vec<T>) -> Self {
        assert_eq!(sub.len(), diag.len());
        assert_eq!(sup.len(), diag.len());
        Self { sub, diag, sup }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let n = self.n();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v = v + self.sub[i] * x[i - 1];
                }
                if i + 1 < n {
                    v = v + self.sup[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    /// Solves `A x = rhs` by banded LU with partial pivoting. Row swaps fill
    /// a second superdiagonal, which is carried explicitly.
    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        let n = self.n();
        assert_eq!(rhs.len(), n);
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut b = self.diag.clone();
        let mut c = self.sup.clone();
        let mut d = vec![T::zero(); n];
        let mut x = rhs.to_vec();
        c[n - 1] = T::zero();

        for i in 0..n - 1 {
            let a_next = self.sub[i + 1];
            if a_next.abs() > b[i].abs() {
                // swap rows i and i+1, then eliminate the old row i
                let (bi, ci, di) = (b[i], c[i], d[i]);
                b[i] = a_next;
                c[i] = b[i + 1];
                d[i] = c[i + 1];
                let m = bi / b[i];
                b[i + 1] = ci - m * c[i];
                c[i + 1] = di - m * d[i];
                x.swap(i, i + 1);
                x[i + 1] = x[i + 1] - m * x[i];
            } else {
                if b[i] == T::zero() {
                    return Err(Error::NonConvergence(format!(
                        "singular tridiagonal system at row {i}"
                    )));
                }
                let m = a_next / b[i];
                b[i + 1] = b[i + 1] - m * c[i];
                c[i + 1] = c[i + 1] - m * d[i];
                x[i + 1] = x[i + 1] - m * x[i];
            }
        }

        if b[n - 1] == T::zero() {
            return Err(Error::NonConvergence("singular tridiagonal system".into()));
        }
        x[n - 1] = x[n - 1] / b[n - 1];
        if n >= 2 {
            x[n - 2] = (x[n - 2] - c[n - 2] * x[n - 1]) / b[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - c[i] * x[i + 1] - d[i] * x[i + 2]) / b[i];
        }
        Ok(x)
    }
}
