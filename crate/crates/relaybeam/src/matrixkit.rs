//! Dense complex-matrix toolkit: Kronecker products, column-major
//! vectorization, and the Hermitian eigen/SVD factorizations the rest of the
//! crate is built on.
//!
//! Conventions used throughout the crate:
//!
//! * `vec` stacks **columns** (column-major), matching nalgebra's storage
//!   order, so `vec(A1 * A2 * A3) = kron(A3.transpose(), A1) * vec(A2)`.
//! * Eigenvalues and singular values are returned in **descending** order.
//!
//! Heavy factorizations (SVD, Hermitian eigendecomposition, Cholesky) are
//! delegated to nalgebra; this module owns the conventions and the
//! derived operations (generalized eigenpair, PSD square root, null-space
//! basis) plus the checks that keep bad inputs from propagating silently.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Dense complex matrix, column-major storage.
pub type CMat = DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVec = DVector<Complex64>;

/// Relative tolerance for the Hermitian-symmetry check: inputs with
/// `max |M - M^H|` above this times `max |M|` are rejected.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Relative floor under which an eigenvalue of a nominally PSD matrix is
/// treated as numerical noise and clamped to zero.
pub const PSD_CLAMP_TOL: f64 = 1e-10;

/// Errors raised by the matrix toolkit.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MatrixError {
    #[error("expected a Hermitian matrix in {op}: max |M - M^H| = {deviation:.3e} exceeds tolerance")]
    NotHermitian { op: &'static str, deviation: f64 },
    #[error("matrix in {op} is not positive definite: min eigenvalue {min_eig:.3e}")]
    NotPositiveDefinite { op: &'static str, min_eig: f64 },
    #[error("matrix in {op} has eigenvalue {min_eig:.3e} below the PSD tolerance")]
    NotPositiveSemidefinite { op: &'static str, min_eig: f64 },
    #[error("cannot reshape a length-{len} vector into a {rows}x{cols} matrix")]
    ShapeMismatch { len: usize, rows: usize, cols: usize },
    #[error("dimension mismatch in {op}: {lhs}x{lhs_cols} vs {rhs}x{rhs_cols}")]
    DimensionMismatch {
        op: &'static str,
        lhs: usize,
        lhs_cols: usize,
        rhs: usize,
        rhs_cols: usize,
    },
}

/// Kronecker product `A (x) B`.
///
/// For `A` of size `m x n` and `B` of size `p x q`, the result `C` has size
/// `mp x nq` with `C[i*p + k, j*q + l] = A[i, j] * B[k, l]`, the ordering
/// under which `vec(A1 * A2 * A3) = kron(A3.transpose(), A1) * vec(A2)`
/// holds for column-stacked `vec`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (m, n) = a.shape();
    let (p, q) = b.shape();
    let mut out = CMat::zeros(m * p, n * q);
    for j in 0..n {
        for i in 0..m {
            let aij = a[(i, j)];
            for l in 0..q {
                for k in 0..p {
                    out[(i * p + k, j * q + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Column-stacking vectorization: columns of `m` concatenated top to bottom.
pub fn vec(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

/// Inverse of [`vec`]: reshape a length `rows*cols` vector into a matrix,
/// filling column by column.
pub fn unvec(v: &CVec, rows: usize, cols: usize) -> Result<CMat, MatrixError> {
    if v.len() != rows * cols {
        return Err(MatrixError::ShapeMismatch { len: v.len(), rows, cols });
    }
    Ok(CMat::from_column_slice(rows, cols, v.as_slice()))
}

/// Full SVD `M = U * diag(S) * Vh` with singular values sorted descending.
///
/// `U` is `m x min(m,n)`, `Vh` is `min(m,n) x n` (thin factors).
pub fn svd_full(m: &CMat) -> (CMat, Vec<f64>, CMat) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd requested with u");
    let v_t = svd.v_t.expect("svd requested with v_t");
    (u, svd.singular_values.iter().copied().collect(), v_t)
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns `(eigenvalues, V)` with real eigenvalues sorted descending and
/// the matching orthonormal eigenvectors as the columns of `V`, so that
/// `M = V * diag(eigenvalues) * V^H`.
pub fn hermitian_eig(m: &CMat) -> Result<(Vec<f64>, CMat), MatrixError> {
    check_hermitian(m, "hermitian_eig")?;
    // Work on the exactly-Hermitian average so roundoff in the input cannot
    // leak imaginary parts into the eigenvalues.
    let h = hermitian_part(m);
    let eig = nalgebra::SymmetricEigen::new(h);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

/// Largest generalized eigenpair of the Hermitian pencil `(S, T)`:
/// the maximal `lambda` with `T psi = lambda S psi`, for `S` positive
/// definite and `T` Hermitian.
///
/// Computed via the congruence `S^{-1/2} T S^{-1/2}`, which keeps the
/// problem Hermitian; `psi` is returned with unit Euclidean norm.
pub fn generalized_eig_max(s: &CMat, t: &CMat) -> Result<(f64, CVec), MatrixError> {
    if s.shape() != t.shape() {
        return Err(MatrixError::DimensionMismatch {
            op: "generalized_eig_max",
            lhs: s.nrows(),
            lhs_cols: s.ncols(),
            rhs: t.nrows(),
            rhs_cols: t.ncols(),
        });
    }
    check_hermitian(t, "generalized_eig_max")?;
    let (s_vals, s_vecs) = hermitian_eig(s)?;
    let n = s.nrows();
    let max_val = s_vals.first().copied().unwrap_or(0.0);
    let min_val = s_vals.last().copied().unwrap_or(0.0);
    if min_val <= max_val * PSD_CLAMP_TOL || min_val <= 0.0 {
        return Err(MatrixError::NotPositiveDefinite {
            op: "generalized_eig_max",
            min_eig: min_val,
        });
    }
    // S^{-1/2} = V * diag(1/sqrt(lambda)) * V^H.
    let mut inv_sqrt = CMat::zeros(n, n);
    for (i, &val) in s_vals.iter().enumerate() {
        let col = s_vecs.column(i).into_owned();
        inv_sqrt += &col * col.adjoint() * Complex64::new(1.0 / val.sqrt(), 0.0);
    }
    let reduced = hermitian_part(&(&inv_sqrt * t * &inv_sqrt));
    let (vals, vecs) = hermitian_eig(&reduced)?;
    let psi_raw = &inv_sqrt * vecs.column(0);
    let psi = &psi_raw / Complex64::new(psi_raw.norm(), 0.0);
    Ok((vals[0], psi))
}

/// Orthonormal basis of the (numerical) null space of a Hermitian PSD
/// matrix: eigenvectors whose eigenvalue is at most `tol` times the largest.
///
/// Returns an `n x d` matrix with orthonormal columns (`d` may be `0`). A
/// zero matrix yields the full identity basis.
pub fn null_space_basis(m: &CMat, tol: f64) -> Result<CMat, MatrixError> {
    let (vals, vecs) = hermitian_eig(m)?;
    let n = m.nrows();
    let max_val = vals.first().copied().unwrap_or(0.0);
    if max_val <= 0.0 {
        return Ok(CMat::identity(n, n));
    }
    let cols: Vec<usize> = (0..n).filter(|&i| vals[i] <= tol * max_val).collect();
    let mut basis = CMat::zeros(n, cols.len());
    for (dst, &src) in cols.iter().enumerate() {
        basis.set_column(dst, &vecs.column(src));
    }
    Ok(basis)
}

/// Hermitian square root of a PSD matrix: the unique PSD `R` with `R * R = M`.
///
/// Eigenvalues in `[-PSD_CLAMP_TOL * lambda_max, 0)` are clamped to zero;
/// anything more negative is an error.
pub fn psd_sqrt(m: &CMat) -> Result<CMat, MatrixError> {
    let (vals, vecs) = hermitian_eig(m)?;
    let n = m.nrows();
    let max_val = vals.first().copied().unwrap_or(0.0).max(0.0);
    let floor = -PSD_CLAMP_TOL * max_val.max(1.0);
    let mut root = CMat::zeros(n, n);
    for (i, &val) in vals.iter().enumerate() {
        if val < floor {
            return Err(MatrixError::NotPositiveSemidefinite { op: "psd_sqrt", min_eig: val });
        }
        let clamped = val.max(0.0);
        if clamped > 0.0 {
            let col = vecs.column(i).into_owned();
            root += &col * col.adjoint() * Complex64::new(clamped.sqrt(), 0.0);
        }
    }
    Ok(root)
}

/// `(M + M^H) / 2` — the exactly-Hermitian part of `m`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Frobenius inner product `Re tr(A^H B)`; real for Hermitian arguments.
pub fn frob_inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Largest absolute entry of `m` (`0` for an empty matrix).
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn check_hermitian(m: &CMat, op: &'static str) -> Result<(), MatrixError> {
    let scale = max_abs(m).max(1.0);
    let deviation = max_abs(&(m - m.adjoint()));
    if deviation > HERMITIAN_TOL * scale {
        return Err(MatrixError::NotHermitian { op, deviation });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mat(rows: usize, cols: usize, entries: &[Complex64]) -> CMat {
        CMat::from_row_slice(rows, cols, entries)
    }

    /// Deterministic pseudo-random complex matrix for property loops.
    fn seeded_mat(rows: usize, cols: usize, seed: u64) -> CMat {
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        CMat::from_fn(rows, cols, |_, _| Complex64::new(next(), next()))
    }

    #[test]
    fn kron_matches_hand_expansion() {
        let a = mat(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let b = mat(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]);
        #[rustfmt::skip]
        let expected = mat(4, 4, &[
            c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0),
            c(0.0, 0.0), c(0.0, 0.0), c(3.0, 0.0), c(4.0, 0.0),
            c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
            c(3.0, 0.0), c(4.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
        ]);
        assert_eq!(kron(&a, &b), expected);
    }

    #[test]
    fn kron_of_vectors_interleaves_in_column_major_order() {
        let a = CMat::from_column_slice(2, 1, &[c(1.0, 0.0), c(2.0, 0.0)]);
        let b = CMat::from_column_slice(2, 1, &[c(0.0, 1.0), c(5.0, 0.0)]);
        let k = kron(&a, &b);
        let expected = [c(0.0, 1.0), c(5.0, 0.0), c(0.0, 2.0), c(10.0, 0.0)];
        for (i, e) in expected.iter().enumerate() {
            assert_eq!(k[(i, 0)], *e);
        }
    }

    #[test]
    fn unvec_rejects_wrong_length() {
        let v = CVec::from_element(5, c(1.0, 0.0));
        assert!(matches!(
            unvec(&v, 2, 3),
            Err(MatrixError::ShapeMismatch { len: 5, rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn vec_unvec_round_trip() {
        for seed in 0..10u64 {
            let m = seeded_mat(3, 4, seed);
            let back = unvec(&vec(&m), 3, 4).unwrap();
            assert_eq!(m, back);
        }
    }

    proptest! {
        /// vec(A1*A2*A3) = kron(A3^T, A1) * vec(A2), the identity every
        /// lifting in this crate depends on, to 1e-12.
        #[test]
        fn vec_kron_identity(seed in 0u64..500, m in 1usize..4, n in 1usize..4, p in 1usize..4, q in 1usize..4) {
            let a1 = seeded_mat(m, n, seed);
            let a2 = seeded_mat(n, p, seed.wrapping_add(1000));
            let a3 = seeded_mat(p, q, seed.wrapping_add(2000));
            let lhs = vec(&(&a1 * &a2 * &a3));
            let rhs = kron(&a3.transpose(), &a1) * vec(&a2);
            let err = (&lhs - &rhs).norm();
            prop_assert!(err <= 1e-12 * (1.0 + lhs.norm()), "identity off by {err}");
        }

        /// kron is bilinear in each argument.
        #[test]
        fn kron_bilinear(seed in 0u64..200) {
            let a = seeded_mat(2, 3, seed);
            let b = seeded_mat(2, 3, seed.wrapping_add(7));
            let x = seeded_mat(3, 2, seed.wrapping_add(14));
            let lhs = kron(&(&a + &b), &x);
            let rhs = kron(&a, &x) + kron(&b, &x);
            prop_assert!((&lhs - &rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
        }
    }

    #[test]
    fn hermitian_eig_reconstructs_and_sorts() {
        for seed in 0..8u64 {
            let g = seeded_mat(5, 5, seed);
            let h = hermitian_part(&(&g * g.adjoint()));
            let (vals, vecs) = hermitian_eig(&h).unwrap();
            for w in vals.windows(2) {
                assert!(w[0] >= w[1], "eigenvalues not descending: {vals:?}");
            }
            let mut rebuilt = CMat::zeros(5, 5);
            for (i, &val) in vals.iter().enumerate() {
                let col = vecs.column(i).into_owned();
                rebuilt += &col * col.adjoint() * c(val, 0.0);
            }
            assert!((&rebuilt - &h).norm() <= 1e-9 * (1.0 + h.norm()));
            let gram = vecs.adjoint() * &vecs;
            assert!((&gram - CMat::identity(5, 5)).norm() <= 1e-9);
        }
    }

    #[test]
    fn hermitian_eig_rejects_non_hermitian() {
        let m = mat(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(hermitian_eig(&m), Err(MatrixError::NotHermitian { .. })));
    }

    #[test]
    fn generalized_eig_max_solves_the_pencil() {
        for seed in 0..8u64 {
            let gs = seeded_mat(4, 4, seed);
            let s = hermitian_part(&(&gs * gs.adjoint())) + CMat::identity(4, 4).scale(0.5);
            let gt = seeded_mat(4, 4, seed.wrapping_add(31));
            let t = hermitian_part(&(&gt * gt.adjoint()));
            let (lambda, psi) = generalized_eig_max(&s, &t).unwrap();
            let residual = (&t * &psi - (&s * &psi).scale(lambda)).norm();
            assert!(residual <= 1e-8 * (1.0 + lambda.abs()), "residual {residual}");
            // lambda is the max of the generalized Rayleigh quotient: sampled
            // quotients never exceed it.
            for probe in 0..50u64 {
                let z = seeded_mat(4, 1, seed * 100 + probe);
                let zv = z.column(0).into_owned();
                let quotient = (zv.adjoint() * &t * &zv)[(0, 0)].re
                    / (zv.adjoint() * &s * &zv)[(0, 0)].re;
                assert!(quotient <= lambda + 1e-8 * (1.0 + lambda.abs()));
            }
        }
    }

    #[test]
    fn generalized_eig_max_rejects_indefinite_s() {
        let s = mat(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        let t = CMat::identity(2, 2);
        assert!(matches!(
            generalized_eig_max(&s, &t),
            Err(MatrixError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn null_space_basis_spans_the_kernel() {
        // Rank-1 projector on C^3: null space has dimension 2.
        let v = CMat::from_column_slice(3, 1, &[c(1.0, 0.0), c(0.0, 1.0), c(1.0, -1.0)]);
        let m = &v * v.adjoint();
        let basis = null_space_basis(&m, 1e-10).unwrap();
        assert_eq!(basis.ncols(), 2);
        assert!((&m * &basis).norm() <= 1e-9 * (1.0 + m.norm()));
        let gram = basis.adjoint() * &basis;
        assert!((&gram - CMat::identity(2, 2)).norm() <= 1e-10);
    }

    #[test]
    fn null_space_basis_of_zero_matrix_is_identity() {
        let m = CMat::zeros(3, 3);
        let basis = null_space_basis(&m, 1e-10).unwrap();
        assert_eq!(basis, CMat::identity(3, 3));
    }

    #[test]
    fn psd_sqrt_squares_back() {
        for seed in 0..8u64 {
            let g = seeded_mat(4, 4, seed);
            let m = hermitian_part(&(&g * g.adjoint()));
            let root = psd_sqrt(&m).unwrap();
            assert!((&root - root.adjoint()).norm() <= 1e-9);
            assert!(((&root * &root) - &m).norm() <= 1e-8 * (1.0 + m.norm()));
        }
    }

    #[test]
    fn psd_sqrt_rejects_truly_negative_eigenvalues() {
        let m = mat(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
        assert!(matches!(psd_sqrt(&m), Err(MatrixError::NotPositiveSemidefinite { .. })));
    }

    #[test]
    fn svd_descending_and_reconstructs() {
        for seed in 0..6u64 {
            let m = seeded_mat(5, 3, seed);
            let (u, s, v_t) = svd_full(&m);
            for w in s.windows(2) {
                assert!(w[0] >= w[1]);
            }
            let mut sigma = CMat::zeros(u.ncols(), v_t.nrows());
            for (i, &sv) in s.iter().enumerate() {
                sigma[(i, i)] = c(sv, 0.0);
            }
            let rebuilt = &u * sigma * &v_t;
            assert!((&rebuilt - &m).norm() <= 1e-9 * (1.0 + m.norm()));
        }
    }
}
