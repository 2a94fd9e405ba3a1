//! Symmetric banded matrices with a direct Cholesky factorization.
//!
//! The finite-element operators on a structured grid couple each node only to
//! its eight neighbors, so the stiffness matrix lives inside a band of
//! half-width `nx + 2`. Storing the lower band by diagonal keeps assembly,
//! matrix-vector products, and the factorization cache-friendly and fully
//! deterministic (fixed accumulation order, no pivoting).

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Symmetric matrix stored as its lower band.
///
/// Entry `(i, j)` with `i >= j` and `i - j <= half_bandwidth` lives at
/// `data[(i - j) * n + j]`; everything outside the band is structurally zero.
#[derive(Debug, Clone)]
pub struct SymBanded<T> {
    n: usize,
    half_bandwidth: usize,
    data: Vec<T>,
}

impl<T: Scalar> SymBanded<T> {
    /// Zero matrix of size `n` with the given half bandwidth.
    pub fn zeros(n: usize, half_bandwidth: usize) -> Self {
        assert!(n > 0, "matrix dimension must be positive");
        let half_bandwidth = half_bandwidth.min(n - 1);
        SymBanded {
            n,
            half_bandwidth,
            data: vec![T::zero(); (half_bandwidth + 1) * n],
        }
    }

    /// Matrix dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of sub-diagonals stored.
    pub fn half_bandwidth(&self) -> usize {
        self.half_bandwidth
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(i >= j);
        (i - j) * self.n + j
    }

    /// Adds `value` to entry `(i, j)`; the pair must lie inside the band.
    pub fn add(&mut self, i: usize, j: usize, value: T) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        assert!(
            r - c <= self.half_bandwidth && r < self.n,
            "entry ({i}, {j}) outside the stored band"
        );
        let s = self.slot(r, c);
        self.data[s] += value;
    }

    /// Entry `(i, j)`, zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> T {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r >= self.n || r - c > self.half_bandwidth {
            return T::zero();
        }
        self.data[self.slot(r, c)]
    }

    /// Adds `coeff * diag(weights)` in place.
    pub fn add_scaled_diagonal(&mut self, weights: &[T], coeff: T) {
        assert_eq!(weights.len(), self.n, "diagonal length mismatch");
        for (i, w) in weights.iter().enumerate() {
            self.data[i] += coeff * *w;
        }
    }

    /// Dense matrix-vector product `y = A x` exploiting symmetry.
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n, "vector length mismatch");
        let n = self.n;
        let mut y = vec![T::zero(); n];
        for i in 0..n {
            y[i] += self.data[i] * x[i];
        }
        for d in 1..=self.half_bandwidth {
            let band = &self.data[d * n..d * n + (n - d)];
            for (j, a) in band.iter().enumerate() {
                y[j + d] += *a * x[j];
                y[j] += *a * x[j + d];
            }
        }
        y
    }

    /// Row sums, used to verify the discrete no-flux structure.
    pub fn row_sums(&self) -> Vec<T> {
        self.matvec(&vec![T::one(); self.n])
    }

    /// Cholesky factorization `A = L L^T`.
    ///
    /// Fails on a non-positive pivot, which for the shifted operators built in
    /// this crate signals an invalid (non-SPD) assembly rather than roundoff.
    pub fn cholesky(&self) -> Result<BandedCholesky<T>> {
        let n = self.n;
        let bw = self.half_bandwidth;
        let mut f = self.data.clone();
        for j in 0..n {
            let start = j.saturating_sub(bw);
            // Off-diagonal entries of column j: L[j,k] for k in start..j.
            for k in start..j {
                let mut s = f[(j - k) * n + k];
                for m in start..k {
                    s -= f[(j - m) * n + m] * f[(k - m) * n + m];
                }
                f[(j - k) * n + k] = s / f[k];
            }
            let mut s = f[j];
            for m in start..j {
                let l = f[(j - m) * n + m];
                s -= l * l;
            }
            if s <= T::zero() || !s.is_finite() {
                return Err(Error::SingularSystem(format!(
                    "non-positive pivot {s} at column {j}"
                )));
            }
            f[j] = s.sqrt();
        }
        Ok(BandedCholesky {
            n,
            half_bandwidth: bw,
            data: f,
        })
    }
}

/// Lower Cholesky factor in the same banded layout as [`SymBanded`].
#[derive(Debug, Clone)]
pub struct BandedCholesky<T> {
    n: usize,
    half_bandwidth: usize,
    data: Vec<T>,
}

impl<T: Scalar> BandedCholesky<T> {
    /// Matrix dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` by forward and back substitution.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        assert_eq!(b.len(), self.n, "right-hand side length mismatch");
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// In-place variant of [`Self::solve`].
    pub fn solve_in_place(&self, b: &mut [T]) {
        assert_eq!(b.len(), self.n, "right-hand side length mismatch");
        let n = self.n;
        let bw = self.half_bandwidth;
        // L y = b
        for j in 0..n {
            let start = j.saturating_sub(bw);
            let mut s = b[j];
            for m in start..j {
                s -= self.data[(j - m) * n + m] * b[m];
            }
            b[j] = s / self.data[j];
        }
        // L^T x = y
        for j in (0..n).rev() {
            let stop = (j + bw).min(n - 1);
            let mut s = b[j];
            for i in (j + 1)..=stop {
                s -= self.data[(i - j) * n + j] * b[i];
            }
            b[j] = s / self.data[j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Dense reference product for validating the banded storage.
    fn dense_matvec(a: &SymBanded<f64>, x: &[f64]) -> Vec<f64> {
        let n = a.n();
        (0..n)
            .map(|i| (0..n).map(|j| a.get(i, j) * x[j]).sum())
            .collect()
    }

    fn laplacian_1d(n: usize) -> SymBanded<f64> {
        // Shifted second-difference matrix: SPD, condition number moderate.
        let mut a = SymBanded::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 2.5);
            if i + 1 < n {
                a.add(i, i + 1, -1.0);
            }
        }
        a
    }

    #[test]
    fn storage_is_symmetric_by_construction() {
        let mut a = SymBanded::zeros(4, 2);
        a.add(2, 0, 3.5);
        a.add(1, 2, -1.25);
        assert_eq!(a.get(0, 2), 3.5);
        assert_eq!(a.get(2, 0), 3.5);
        assert_eq!(a.get(2, 1), -1.25);
        assert_eq!(a.get(0, 3), 0.0);
    }

    #[test]
    fn matvec_matches_dense_reference() {
        let mut a = SymBanded::zeros(6, 2);
        for i in 0..6 {
            a.add(i, i, 4.0 + i as f64);
            if i + 1 < 6 {
                a.add(i, i + 1, -1.0);
            }
            if i + 2 < 6 {
                a.add(i, i + 2, 0.5);
            }
        }
        let x: Vec<f64> = (0..6).map(|i| (i as f64) * 0.3 - 1.0).collect();
        let y = a.matvec(&x);
        let y_ref = dense_matvec(&a, &x);
        for (yi, ri) in y.iter().zip(&y_ref) {
            assert_relative_eq!(yi, ri, max_relative = 1e-14);
        }
    }

    #[test]
    fn cholesky_solves_spd_system() {
        let n = 40;
        let a = laplacian_1d(n);
        let chol = a.cholesky().unwrap();
        let b: Vec<f64> = (0..n).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let x = chol.solve(&b);
        let r = a.matvec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert_relative_eq!(ri, bi, epsilon = 1e-10, max_relative = 1e-10);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite_matrix() {
        let mut a = SymBanded::zeros(3, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, -1.0);
        a.add(2, 2, 1.0);
        assert!(matches!(a.cholesky(), Err(Error::SingularSystem(_))));
    }

    #[test]
    fn diagonal_shift_updates_entries() {
        let mut a = laplacian_1d(3);
        a.add_scaled_diagonal(&[1.0, 2.0, 3.0], 0.5);
        assert_relative_eq!(a.get(0, 0), 3.0);
        assert_relative_eq!(a.get(1, 1), 3.5);
        assert_relative_eq!(a.get(2, 2), 4.0);
    }
}
