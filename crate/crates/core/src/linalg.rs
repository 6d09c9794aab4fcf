//! Dense linear algebra, sized for desk-scale grids.
//!
//! Every linear solve in this crate (augmented HJB Newton systems, upwind
//! Fokker-Planck kernel extraction) goes through one LU factorization with
//! partial pivoting. Systems top out at a few thousand unknowns, where dense
//! LU is simple, predictable, and fast enough.

use crate::{Error, Real, Result};

/// Row-major square matrix.
#[derive(Debug, Clone)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    #[must_use]
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    #[inline]
    #[must_use]
    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    #[must_use]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] += v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// `self * x`.
    #[must_use]
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n, "dimension mismatch in matvec");
        (0..self.n)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// Solves `self * x = rhs` in place by LU with partial pivoting,
    /// destroying the matrix. `rhs` is overwritten with the solution.
    ///
    /// A pivot below `eps * max|entry| * n` is treated as singular.
    pub fn solve_in_place(mut self, rhs: &mut [T], context: &'static str) -> Result<()> {
        let n = self.n;
        assert_eq!(rhs.len(), n, "dimension mismatch in solve");
        if n == 0 {
            return Ok(());
        }
        let scale = self
            .data
            .iter()
            .fold(T::zero(), |acc, v| acc.max(v.abs()));
        if scale == T::zero() {
            return Err(Error::SingularSystem { context });
        }
        let tiny = T::epsilon() * scale * T::from_usize(n).unwrap();

        for k in 0..n {
            // Partial pivot: largest magnitude in column k at or below row k.
            let mut pivot_row = k;
            let mut pivot_mag = self.at(k, k).abs();
            for i in (k + 1)..n {
                let mag = self.at(i, k).abs();
                if mag > pivot_mag {
                    pivot_mag = mag;
                    pivot_row = i;
                }
            }
            if pivot_mag <= tiny {
                return Err(Error::SingularSystem { context });
            }
            if pivot_row != k {
                for j in 0..n {
                    let a = self.at(k, j);
                    let b = self.at(pivot_row, j);
                    self.set(k, j, b);
                    self.set(pivot_row, j, a);
                }
                rhs.swap(k, pivot_row);
            }
            let pivot = self.at(k, k);
            let (upper, lower) = self.data.split_at_mut((k + 1) * n);
            let pivot_row_slice = &upper[k * n..(k + 1) * n];
            for i in (k + 1)..n {
                let row = &mut lower[(i - k - 1) * n..(i - k) * n];
                let factor = row[k] / pivot;
                if factor != T::zero() {
                    row[k] = T::zero();
                    for j in (k + 1)..n {
                        row[j] = row[j] - factor * pivot_row_slice[j];
                    }
                    rhs[i] = rhs[i] - factor * rhs[k];
                }
            }
        }

        // Back substitution.
        for k in (0..n).rev() {
            let mut acc = rhs[k];
            let row = self.row(k);
            for j in (k + 1)..n {
                acc -= row[j] * rhs[j];
            }
            rhs[k] = acc / row[k];
        }
        Ok(())
    }
}
