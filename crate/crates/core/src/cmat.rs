//! Dense complex vectors and matrices sized for small Hermitian systems.
//!
//! Everything here is `O(n^3)` dense arithmetic over `Complex64`, written
//! for the reflection-unit counts this library targets (tens of units, not
//! thousands). Matrices are row-major.

use num_complex::Complex64;

pub type C64 = Complex64;

/// Conjugated inner product `sum conj(a_i) * b_i`.
pub fn cdot(a: &[C64], b: &[C64]) -> C64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Plain bilinear product `sum a_i * b_i` with no conjugation.
pub fn bilinear(a: &[C64], b: &[C64]) -> C64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm of a complex vector.
pub fn vnorm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    n_rows: usize,
    n_cols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(n_rows: usize, n_cols: usize) -> CMat {
        CMat {
            n_rows,
            n_cols,
            data: vec![C64::new(0.0, 0.0); n_rows * n_cols],
        }
    }

    pub fn identity(n: usize) -> CMat {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(n_rows: usize, n_cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> CMat {
        let mut m = CMat::zeros(n_rows, n_cols);
        for i in 0..n_rows {
            for j in 0..n_cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Rank-one matrix `u v^H`.
    pub fn outer(u: &[C64], v: &[C64]) -> CMat {
        CMat::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.n_cols, self.n_rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: f64) -> CMat {
        let mut out = self.clone();
        for x in &mut out.data {
            *x *= s;
        }
        out
    }

    /// `self + other * s`.
    pub fn add_scaled(&self, other: &CMat, s: f64) -> CMat {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        let mut out = self.clone();
        for (x, y) in out.data.iter_mut().zip(&other.data) {
            *x += y * s;
        }
        out
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.n_cols, other.n_rows);
        let mut out = CMat::zeros(self.n_rows, other.n_cols);
        for i in 0..self.n_rows {
            for k in 0..self.n_cols {
                let aik = self[(i, k)];
                if aik == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.n_cols {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.n_cols, v.len());
        (0..self.n_rows).map(|i| bilinearish(self.row(i), v)).collect()
    }

    pub fn trace(&self) -> C64 {
        assert_eq!(self.n_rows, self.n_cols);
        (0..self.n_rows).map(|i| self[(i, i)]).sum()
    }

    /// Real part of the trace; the imaginary part of a Hermitian-product
    /// trace is numerical noise.
    pub fn trace_re(&self) -> f64 {
        self.trace().re
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest absolute deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        assert_eq!(self.n_rows, self.n_cols);
        let mut worst: f64 = 0.0;
        for i in 0..self.n_rows {
            for j in i..self.n_cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Forces exact Hermitian symmetry by averaging with the adjoint.
    pub fn hermitianize(&self) -> CMat {
        CMat::from_fn(self.n_rows, self.n_cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        })
    }

    /// Cholesky factorization `self = L L^H` for Hermitian positive-definite
    /// input. Returns `None` when a pivot is not strictly positive, which
    /// doubles as the positive-definiteness test in the barrier solver.
    pub fn cholesky(&self) -> Option<CMat> {
        assert_eq!(self.n_rows, self.n_cols);
        let n = self.n_rows;
        let mut l = CMat::zeros(n, n);
        for j in 0..n {
            let mut diag = self[(j, j)].re;
            for k in 0..j {
                diag -= l[(j, k)].norm_sqr();
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return None;
            }
            let dj = diag.sqrt();
            l[(j, j)] = C64::new(dj, 0.0);
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / dj;
            }
        }
        Some(l)
    }

    /// Solves `L x = b` for lower-triangular `L` (this matrix), column by
    /// column over the columns of `b`.
    pub fn solve_lower(&self, b: &CMat) -> CMat {
        assert_eq!(self.n_rows, self.n_cols);
        assert_eq!(self.n_rows, b.n_rows);
        let n = self.n_rows;
        let mut x = b.clone();
        for c in 0..b.n_cols {
            for i in 0..n {
                let mut s = x[(i, c)];
                for k in 0..i {
                    s -= self[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s / self[(i, i)];
            }
        }
        x
    }

    /// Solves `L^H x = b` where `L` is this lower-triangular matrix.
    pub fn solve_lower_adjoint(&self, b: &CMat) -> CMat {
        assert_eq!(self.n_rows, self.n_cols);
        assert_eq!(self.n_rows, b.n_rows);
        let n = self.n_rows;
        let mut x = b.clone();
        for c in 0..b.n_cols {
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for k in i + 1..n {
                    s -= self[(k, i)].conj() * x[(k, c)];
                }
                x[(i, c)] = s / self[(i, i)].conj();
            }
        }
        x
    }

    /// Inverse of a Hermitian positive-definite matrix via Cholesky.
    pub fn inv_hermitian_pd(&self) -> Option<CMat> {
        let l = self.cholesky()?;
        let eye = CMat::identity(self.n_rows);
        let y = l.solve_lower(&eye);
        Some(l.solve_lower_adjoint(&y).hermitianize())
    }

    /// Hilbert-Schmidt inner product `tr(self^H other)`, real part. For two
    /// Hermitian operands the imaginary part vanishes.
    pub fn hs_inner_re(&self, other: &CMat) -> f64 {
        assert_eq!(self.n_rows, other.n_rows);
        assert_eq!(self.n_cols, other.n_cols);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }
}

fn bilinearish(row: &[C64], v: &[C64]) -> C64 {
    row.iter().zip(v).map(|(a, b)| a * b).sum()
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n_cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n_cols + j]
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    pub(crate) fn random_cvec(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
        (0..n)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    /// A random Hermitian positive-definite matrix: G G^H + ridge.
    pub(crate) fn random_hpd(n: usize, rng: &mut ChaCha8Rng) -> CMat {
        let g = CMat::from_fn(n, n, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let mut a = g.matmul(&g.adjoint()).hermitianize();
        for i in 0..n {
            a[(i, i)] += c(0.1, 0.0);
        }
        a
    }

    #[test]
    fn matmul_hand_example() {
        // [[1+i, 2], [0, i]] * [[1, 0], [i, 1]] = [[1+3i, 2], [-1, i]]
        let a = CMat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => c(1.0, 1.0),
            (0, 1) => c(2.0, 0.0),
            (1, 0) => c(0.0, 0.0),
            _ => c(0.0, 1.0),
        });
        let b = CMat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => c(1.0, 0.0),
            (0, 1) => c(0.0, 0.0),
            (1, 0) => c(0.0, 1.0),
            _ => c(1.0, 0.0),
        });
        let p = a.matmul(&b);
        assert_eq!(p[(0, 0)], c(1.0, 3.0));
        assert_eq!(p[(0, 1)], c(2.0, 0.0));
        assert_eq!(p[(1, 0)], c(-1.0, 0.0));
        assert_eq!(p[(1, 1)], c(0.0, 1.0));
    }

    #[test]
    fn dot_products_distinguish_conjugation() {
        let a = vec![c(0.0, 1.0)];
        let b = vec![c(0.0, 1.0)];
        assert_eq!(cdot(&a, &b), c(1.0, 0.0));
        assert_eq!(bilinear(&a, &b), c(-1.0, 0.0));
    }

    #[test]
    fn outer_product_is_rank_one_hermitian_on_diagonal() {
        let u = vec![c(1.0, 2.0), c(-0.5, 0.25)];
        let m = CMat::outer(&u, &u);
        assert!(m.hermitian_defect() <= 1e-15);
        assert!((m.trace_re() - (u[0].norm_sqr() + u[1].norm_sqr())).abs() <= 1e-15);
    }

    #[test]
    fn cholesky_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1usize, 2, 3, 5, 8, 16] {
            let a = random_hpd(n, &mut rng);
            let l = a.cholesky().expect("positive definite by construction");
            let diff = l.matmul(&l.adjoint()).add_scaled(&a, -1.0);
            assert!(
                diff.frob_norm() <= 1e-12 * a.frob_norm(),
                "n={n} residual {}",
                diff.frob_norm()
            );
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = CMat::identity(3);
        a[(2, 2)] = c(-1.0, 0.0);
        assert!(a.cholesky().is_none());
    }

    #[test]
    fn inverse_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1usize, 2, 4, 9] {
            let a = random_hpd(n, &mut rng);
            let inv = a.inv_hermitian_pd().unwrap();
            let diff = a.matmul(&inv).add_scaled(&CMat::identity(n), -1.0);
            assert!(diff.frob_norm() <= 1e-10, "n={n} residual {}", diff.frob_norm());
        }
    }

    #[test]
    fn triangular_solves_invert_cholesky_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = random_hpd(6, &mut rng);
        let l = a.cholesky().unwrap();
        let b = CMat::from_fn(6, 2, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let y = l.solve_lower(&b);
        assert!(l.matmul(&y).add_scaled(&b, -1.0).frob_norm() <= 1e-12);
        let x = l.solve_lower_adjoint(&b);
        assert!(l.adjoint().matmul(&x).add_scaled(&b, -1.0).frob_norm() <= 1e-12);
    }

    #[test]
    fn matvec_matches_matmul() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a = random_hpd(5, &mut rng);
        let v = random_cvec(5, &mut rng);
        let as_col = CMat::from_fn(5, 1, |i, _| v[i]);
        let prod = a.matmul(&as_col);
        let mv = a.matvec(&v);
        for i in 0..5 {
            assert!((prod[(i, 0)] - mv[i]).norm() <= 1e-13);
        }
    }
}
