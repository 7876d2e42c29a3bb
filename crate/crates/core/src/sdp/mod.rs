//! Complex semidefinite programming: problem types, a Hermitian
//! eigensolver, and an interior-point solver for the linear-fractional
//! beamforming relaxation in its linearized (epigraph-normalized) form:
//!
//! ```text
//! minimize    c0 * t + <C, Phi>
//! subject to  a0 * t + <A, Phi> = 1
//!             0 <= Phi_nn <= t        for every n
//!             u^H Phi u >= omega * tr(Phi)     (optional rank cut)
//!             Phi >= 0,  t >= 0
//! ```
//!
//! `<X, Y>` is the real Hilbert-Schmidt inner product. The data matrices
//! are Hermitian; `A` must be positive semidefinite and `a0` strictly
//! positive, which both hold by construction for the problems generated by
//! the beamforming stage and also guarantee primal feasibility
//! (`Phi = 0, t = 1/a0`).

mod eig;
mod solver;

pub use eig::{complex_embedding, full_spectrum, max_eigpair};
pub use solver::{solve_sdp, SolverOptions};

use crate::cmat::{CMat, C64};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("matrix dimensions disagree: {0}")]
    DimensionMismatch(String),
    #[error("equality coefficient on t must be strictly positive, got {0}")]
    EqualityCoefficient(f64),
    #[error("equality matrix must be positive semidefinite (min eigenvalue {0:.3e})")]
    EqualityMatrixIndefinite(f64),
    #[error("rank-cut vector must be nonzero")]
    CutVectorZero,
    #[error("rank-cut threshold must lie in [0, 1], got {0}")]
    CutThreshold(f64),
    #[error("problem size {0} exceeds the supported maximum {1}")]
    TooLarge(usize, usize),
}

/// Largest supported matrix-variable dimension.
pub const MAX_DIM: usize = 64;

/// A square complex matrix kept exactly conjugate-symmetric: construction
/// averages the input with its adjoint, so every later consumer may rely on
/// `m[(i,j)] == conj(m[(j,i)])`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    m: CMat,
}

impl HermitianMatrix {
    pub fn new(m: CMat) -> HermitianMatrix {
        assert_eq!(m.n_rows(), m.n_cols(), "Hermitian matrix must be square");
        HermitianMatrix {
            m: m.hermitianize(),
        }
    }

    pub fn zeros(n: usize) -> HermitianMatrix {
        HermitianMatrix { m: CMat::zeros(n, n) }
    }

    pub fn identity(n: usize) -> HermitianMatrix {
        HermitianMatrix {
            m: CMat::identity(n),
        }
    }

    /// The rank-one outer product `h h^H`.
    pub fn from_outer(h: &[C64]) -> HermitianMatrix {
        HermitianMatrix {
            m: CMat::outer(h, h),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.n_rows()
    }

    pub fn mat(&self) -> &CMat {
        &self.m
    }

    /// `self + coeff * other`, staying Hermitian for real `coeff`.
    pub fn add_scaled(&self, other: &HermitianMatrix, coeff: f64) -> HermitianMatrix {
        HermitianMatrix {
            m: self.m.add_scaled(&other.m, coeff),
        }
    }

    pub fn scale(&self, coeff: f64) -> HermitianMatrix {
        HermitianMatrix {
            m: self.m.scale(coeff),
        }
    }

    /// The real quadratic form `v^H M v`.
    pub fn quad_form(&self, v: &[C64]) -> f64 {
        crate::cmat::cdot(v, &self.m.matvec(v)).re
    }
}

impl std::ops::Deref for HermitianMatrix {
    type Target = CMat;
    fn deref(&self) -> &CMat {
        &self.m
    }
}

/// The optional rank-promoting linear cut `u^H Phi u >= omega * tr(Phi)`.
/// `u` is stored normalized to unit Euclidean length.
#[derive(Clone, Debug)]
pub struct RankCut {
    pub u: Vec<C64>,
    pub omega: f64,
}

impl RankCut {
    pub fn new(u: Vec<C64>, omega: f64) -> Result<RankCut, SdpError> {
        let norm = crate::cmat::vnorm(&u);
        if norm == 0.0 || !norm.is_finite() {
            return Err(SdpError::CutVectorZero);
        }
        if !(0.0..=1.0).contains(&omega) {
            return Err(SdpError::CutThreshold(omega));
        }
        let u = u.into_iter().map(|x| x / norm).collect();
        Ok(RankCut { u, omega })
    }
}

/// Problem data for the normalized linear SDP above.
#[derive(Clone, Debug)]
pub struct SdpProblem {
    pub c0: f64,
    pub c_mat: HermitianMatrix,
    pub a0: f64,
    pub a_mat: HermitianMatrix,
    pub cut: Option<RankCut>,
}

impl SdpProblem {
    pub fn new(
        c0: f64,
        c_mat: HermitianMatrix,
        a0: f64,
        a_mat: HermitianMatrix,
        cut: Option<RankCut>,
    ) -> Result<SdpProblem, SdpError> {
        let n = c_mat.dim();
        if a_mat.dim() != n {
            return Err(SdpError::DimensionMismatch(format!(
                "objective is {n}x{n} but equality matrix is {0}x{0}",
                a_mat.dim()
            )));
        }
        if n == 0 || n > MAX_DIM {
            return Err(SdpError::TooLarge(n, MAX_DIM));
        }
        if !(a0 > 0.0) || !a0.is_finite() {
            return Err(SdpError::EqualityCoefficient(a0));
        }
        if let Some(cut) = &cut {
            if cut.u.len() != n {
                return Err(SdpError::DimensionMismatch(format!(
                    "cut vector has length {} for a {n}x{n} problem",
                    cut.u.len()
                )));
            }
        }
        let scale = a_mat.frob_norm();
        if scale > 0.0 {
            let (eigs, _) = full_spectrum(&a_mat);
            if eigs[0] < -1e-8 * scale {
                return Err(SdpError::EqualityMatrixIndefinite(eigs[0]));
            }
        }
        Ok(SdpProblem {
            c0,
            c_mat,
            a0,
            a_mat,
            cut,
        })
    }

    pub fn dim(&self) -> usize {
        self.c_mat.dim()
    }

    /// Objective value of a candidate `(Phi, t)`.
    pub fn objective(&self, phi: &HermitianMatrix, t: f64) -> f64 {
        self.c0 * t + self.c_mat.mat().hs_inner_re(phi.mat())
    }
}

/// Terminal state of a solve.
#[derive(Clone, Debug, PartialEq)]
pub enum SdpStatus {
    /// Certificate thresholds met.
    Optimal,
    /// The dual objective diverged; the named constraint cannot be met.
    Infeasible { constraint: String },
    /// Iteration cap reached before the certificate thresholds.
    MaxIterations,
    /// A linear-algebra step failed beyond recovery; best iterate returned.
    NumericalError,
}

/// Certificate residuals of the returned iterate. `primal` is the largest
/// violation among the equality, box, and cut constraints; `dual` the
/// largest dual-cone violation; `gap` the primal-dual objective difference.
#[derive(Clone, Copy, Debug)]
pub struct KktResiduals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

/// Per-barrier-stage telemetry, mainly for the weak-duality property test
/// and debug logging.
#[derive(Clone, Copy, Debug)]
pub struct StageRecord {
    pub mu: f64,
    pub newton_steps: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub phi: HermitianMatrix,
    pub t: f64,
    pub objective_value: f64,
    pub status: SdpStatus,
    pub kkt: KktResiduals,
    pub newton_steps: usize,
    pub stages: Vec<StageRecord>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn construction_symmetrizes() {
        let mut m = CMat::zeros(2, 2);
        m[(0, 1)] = c(1.0, 1.0);
        // Leave m[(1,0)] = 0: the average must land halfway.
        let h = HermitianMatrix::new(m);
        assert_eq!(h[(0, 1)], c(0.5, 0.5));
        assert_eq!(h[(1, 0)], c(0.5, -0.5));
        assert_eq!(h.hermitian_defect(), 0.0);
    }

    #[test]
    fn outer_product_and_quad_form() {
        let h = vec![c(1.0, 1.0), c(0.0, -2.0)];
        let hh = HermitianMatrix::from_outer(&h);
        assert_eq!(hh.dim(), 2);
        assert!((hh.trace_re() - 6.0).abs() <= 1e-14);
        // v^H (h h^H) v = |<h, v>|^2 with the conjugate-linear first slot.
        let v = vec![c(0.5, 0.0), c(0.0, 1.0)];
        let inner: C64 = h.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
        assert!((hh.quad_form(&v) - inner.norm_sqr()).abs() <= 1e-14);
    }

    #[test]
    fn problem_validation() {
        let eye = HermitianMatrix::identity(2);
        assert!(SdpProblem::new(1.0, eye.clone(), 1.0, eye.clone(), None).is_ok());
        assert!(matches!(
            SdpProblem::new(1.0, eye.clone(), 0.0, eye.clone(), None),
            Err(SdpError::EqualityCoefficient(_))
        ));
        let neg = HermitianMatrix::new(CMat::identity(2).scale(-1.0));
        assert!(matches!(
            SdpProblem::new(1.0, eye.clone(), 1.0, neg, None),
            Err(SdpError::EqualityMatrixIndefinite(_))
        ));
        let wrong = HermitianMatrix::identity(3);
        assert!(matches!(
            SdpProblem::new(1.0, eye.clone(), 1.0, wrong, None),
            Err(SdpError::DimensionMismatch(_))
        ));
        let cut = RankCut::new(vec![c(3.0, 0.0)], 0.5).unwrap();
        assert!((crate::cmat::vnorm(&cut.u) - 1.0).abs() <= 1e-15);
        assert!(matches!(
            SdpProblem::new(1.0, eye.clone(), 1.0, eye.clone(), Some(cut)),
            Err(SdpError::DimensionMismatch(_))
        ));
        assert!(matches!(
            RankCut::new(vec![c(0.0, 0.0)], 0.5),
            Err(SdpError::CutVectorZero)
        ));
        assert!(matches!(
            RankCut::new(vec![c(1.0, 0.0)], 1.5),
            Err(SdpError::CutThreshold(_))
        ));
    }

    #[test]
    fn hermitian_defect_stays_zero_under_arithmetic() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = HermitianMatrix::new(crate::cmat::tests::random_hpd(5, &mut rng));
        let b = HermitianMatrix::new(crate::cmat::tests::random_hpd(5, &mut rng));
        let s = a.add_scaled(&b, -2.5).scale(0.3);
        assert!(s.hermitian_defect() <= 1e-15);
    }
}
