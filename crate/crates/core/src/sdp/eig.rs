//! Cyclic Jacobi eigensolver for Hermitian matrices.
//!
//! Each 2x2 pivot block `[[a, h], [conj(h), b]]` is first rotated by
//! `diag(1, e^{-i arg h})` to make the off-diagonal entry real, then
//! annihilated by the classical symmetric Jacobi rotation. Off-diagonal
//! mass falls quadratically with sweeps, so a handful of sweeps suffices
//! at the dimensions this library supports (`<= 64` plus their real
//! embeddings at twice that).

use super::HermitianMatrix;
use crate::cmat::{CMat, C64};

const MAX_SWEEPS: usize = 60;

/// All eigenvalues in ascending order with matching unit eigenvector
/// columns: `H * V[:, k] = eigs[k] * V[:, k]`.
pub fn full_spectrum(h: &HermitianMatrix) -> (Vec<f64>, CMat) {
    let n = h.dim();
    let mut a = h.mat().clone();
    let mut v = CMat::identity(n);
    let scale = a.frob_norm();
    if n > 1 && scale > 0.0 {
        let stop = 1e-15 * scale;
        for _sweep in 0..MAX_SWEEPS {
            let mut off = 0.0f64;
            for i in 0..n {
                for j in i + 1..n {
                    off += a[(i, j)].norm_sqr();
                }
            }
            if off.sqrt() <= stop {
                break;
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigs: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMat::from_fn(n, n, |i, k| v[(i, order[k])]);
    (eigs, vectors)
}

/// The algebraically largest eigenvalue and a unit eigenvector for it.
pub fn max_eigpair(h: &HermitianMatrix) -> (f64, Vec<C64>) {
    let (eigs, v) = full_spectrum(h);
    let n = h.dim();
    let top = n - 1;
    (eigs[top], (0..n).map(|i| v[(i, top)]).collect())
}

/// Annihilates the (p, q) entry of `a` by a unitary plane rotation,
/// accumulating the rotation into the columns of `v`.
fn rotate(a: &mut CMat, v: &mut CMat, p: usize, q: usize) {
    let h = a[(p, q)];
    let r = h.norm();
    if r == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // Skip rotations that cannot move the diagonal at working precision.
    if r <= 1e-18 * (app.abs() + aqq.abs()) {
        a[(p, q)] = C64::new(0.0, 0.0);
        a[(q, p)] = C64::new(0.0, 0.0);
        return;
    }
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    // Phase that makes the pivot entry real: w = e^{-i arg h}.
    let w = h.conj() / r;
    let ws = w * s;
    let wc = w * c;
    let n = a.n_rows();
    // Columns: A <- A * G with G = [[c, s], [-w s, w c]] on (p, q).
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c - akq * ws;
        a[(k, q)] = akp * s + akq * wc;
    }
    // Rows: A <- G^H * A.
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c - aqk * ws.conj();
        a[(q, k)] = apk * s + aqk * wc.conj();
    }
    // The transformed 2x2 block is known in closed form; writing it
    // directly removes the rounding the two sweeps above accumulate.
    a[(p, p)] = C64::new(app - t * r, 0.0);
    a[(q, q)] = C64::new(aqq + t * r, 0.0);
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * ws;
        v[(k, q)] = vkp * s + vkq * wc;
    }
}

/// The real representation of a complex Hermitian matrix:
/// `[[Re H, -Im H], [Im H, Re H]]`, a real symmetric matrix of twice the
/// dimension whose spectrum is that of `H` with every multiplicity
/// doubled. Useful both for property checks and for handing complex
/// problems to real-only linear algebra.
pub fn complex_embedding(h: &HermitianMatrix) -> HermitianMatrix {
    let n = h.dim();
    let m = CMat::from_fn(2 * n, 2 * n, |i, j| {
        let block = (i >= n, j >= n);
        let e = h.mat()[(i % n, j % n)];
        let val = match block {
            (false, false) | (true, true) => e.re,
            (false, true) => -e.im,
            (true, false) => e.im,
        };
        C64::new(val, 0.0)
    });
    HermitianMatrix::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmat::{cdot, vnorm};
    use nalgebra::{DMatrix, SymmetricEigen};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
        use rand::Rng;
        HermitianMatrix::new(CMat::from_fn(n, n, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        }))
    }

    fn reconstruction_error(h: &HermitianMatrix, eigs: &[f64], v: &CMat) -> f64 {
        let n = h.dim();
        let lam = CMat::from_fn(n, n, |i, j| {
            if i == j {
                c(eigs[i], 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let rebuilt = v.matmul(&lam).matmul(&v.adjoint());
        rebuilt.add_scaled(h.mat(), -1.0).frob_norm()
    }

    #[test]
    fn diagonal_and_scalar_cases() {
        let h = HermitianMatrix::new(CMat::from_fn(2, 2, |i, j| {
            if i == j {
                c([3.0, -1.0][i], 0.0)
            } else {
                c(0.0, 0.0)
            }
        }));
        let (eigs, v) = full_spectrum(&h);
        assert_eq!(eigs, vec![-1.0, 3.0]);
        // Columns follow the sort: first column picks the -1 slot.
        assert_eq!(v[(1, 0)].norm(), 1.0);
        let scalar = HermitianMatrix::new(CMat::from_fn(1, 1, |_, _| c(2.0, 0.0)));
        assert_eq!(full_spectrum(&scalar).0, vec![2.0]);
        let (top, u) = max_eigpair(&scalar);
        assert_eq!(top, 2.0);
        assert_eq!(u.len(), 1);
    }

    #[test]
    fn pauli_y_eigensystem() {
        // [[0, -i], [i, 0]] has eigenvalues -1 and 1.
        let h = HermitianMatrix::new(CMat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => c(0.0, -1.0),
            (1, 0) => c(0.0, 1.0),
            _ => c(0.0, 0.0),
        }));
        let (eigs, v) = full_spectrum(&h);
        assert!((eigs[0] + 1.0).abs() <= 1e-14);
        assert!((eigs[1] - 1.0).abs() <= 1e-14);
        for k in 0..2 {
            let col: Vec<C64> = (0..2).map(|i| v[(i, k)]).collect();
            let hv = h.mat().matvec(&col);
            let res: f64 = hv
                .iter()
                .zip(&col)
                .map(|(a, b)| (a - b * eigs[k]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(res <= 1e-14, "residual {res} for column {k}");
        }
        // Its real embedding doubles both multiplicities.
        let emb = complex_embedding(&h);
        let (eigs4, _) = full_spectrum(&emb);
        let expect = [-1.0, -1.0, 1.0, 1.0];
        for (got, want) in eigs4.iter().zip(expect) {
            assert!((got - want).abs() <= 1e-14);
        }
    }

    #[test]
    fn scalar_embedding() {
        let h = HermitianMatrix::new(CMat::from_fn(1, 1, |_, _| c(2.0, 0.0)));
        let emb = complex_embedding(&h);
        assert_eq!(emb.dim(), 2);
        assert_eq!(emb[(0, 0)], c(2.0, 0.0));
        assert_eq!(emb[(1, 1)], c(2.0, 0.0));
        assert_eq!(emb[(0, 1)], c(0.0, 0.0));
    }

    #[test]
    fn random_spectra_reconstruct_and_match_real_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4807);
        for &n in &[1usize, 2, 3, 5, 8, 13, 16, 32] {
            let h = random_hermitian(n, &mut rng);
            let scale = h.frob_norm().max(1e-300);
            let (eigs, v) = full_spectrum(&h);
            assert!(eigs.windows(2).all(|w| w[0] <= w[1]), "sorted ascending");
            assert!(
                reconstruction_error(&h, &eigs, &v) <= 1e-12 * scale,
                "reconstruction at n = {n}"
            );
            // Orthonormal eigenvector columns.
            for i in 0..n {
                let ci: Vec<C64> = (0..n).map(|r| v[(r, i)]).collect();
                assert!((vnorm(&ci) - 1.0).abs() <= 1e-12);
                for j in i + 1..n {
                    let cj: Vec<C64> = (0..n).map(|r| v[(r, j)]).collect();
                    assert!(cdot(&ci, &cj).norm() <= 1e-12);
                }
            }
            // Against nalgebra's symmetric eigensolver on the real
            // embedding: the embedded spectrum is ours, doubled.
            let emb = complex_embedding(&h);
            let real = DMatrix::from_fn(2 * n, 2 * n, |i, j| emb[(i, j)].re);
            let mut oracle = SymmetricEigen::new(real).eigenvalues.as_slice().to_vec();
            oracle.sort_by(f64::total_cmp);
            for (k, lam) in eigs.iter().enumerate() {
                for dup in [2 * k, 2 * k + 1] {
                    assert!(
                        (oracle[dup] - lam).abs() <= 1e-10 * scale.max(1.0),
                        "n = {n}: eig {lam} vs oracle {}",
                        oracle[dup]
                    );
                }
            }
        }
    }

    #[test]
    fn max_eigpair_residual_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for &n in &[2usize, 4, 16, 64] {
            let h = random_hermitian(n, &mut rng);
            let (lam, u) = max_eigpair(&h);
            let hu = h.mat().matvec(&u);
            let res: f64 = hu
                .iter()
                .zip(&u)
                .map(|(a, b)| (a - b * lam).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(res <= 1e-9 * h.frob_norm(), "residual {res} at n = {n}");
            assert!((vnorm(&u) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn psd_matrices_have_nonnegative_spectra() {
        let mut rng = ChaCha8Rng::seed_from_u64(321);
        for &n in &[2usize, 6, 12] {
            let g = crate::cmat::tests::random_hpd(n, &mut rng);
            let h = HermitianMatrix::new(g);
            let (eigs, _) = full_spectrum(&h);
            assert!(eigs[0] > 0.0);
            let emb = complex_embedding(&h);
            let (eigs2, _) = full_spectrum(&emb);
            assert!(eigs2[0] > 0.0, "embedding preserves definiteness");
        }
    }

    #[test]
    fn repeated_eigenvalues() {
        let h = HermitianMatrix::identity(6);
        let (eigs, v) = full_spectrum(&h);
        assert!(eigs.iter().all(|&e| (e - 1.0).abs() <= 1e-15));
        assert!(reconstruction_error(&h, &eigs, &v) <= 1e-14);
        // Rank-one: one eigenvalue at |h|^2, the rest at zero.
        let u = vec![c(1.0, 2.0), c(-2.0, 0.5), c(0.0, 1.0)];
        let hh = HermitianMatrix::from_outer(&u);
        let (eigs, _) = full_spectrum(&hh);
        let p: f64 = u.iter().map(|x| x.norm_sqr()).sum();
        assert!(eigs[0].abs() <= 1e-12 * p);
        assert!(eigs[1].abs() <= 1e-12 * p);
        assert!((eigs[2] - p).abs() <= 1e-12 * p);
        let (lam, umax) = max_eigpair(&hh);
        assert!((lam - p).abs() <= 1e-12 * p);
        // The top eigenvector is u up to phase and scale.
        let overlap = cdot(&umax, &u).norm();
        assert!((overlap - p.sqrt()).abs() <= 1e-10);
    }
}
