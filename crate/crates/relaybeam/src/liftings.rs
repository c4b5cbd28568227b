//! The three equivalent semidefinite formulations of the rate-maximization
//! problem, and recovery of a K x K beamformer from any of their solutions.
//!
//! All three share one change of variables: with `alpha = vec(A)`, auxiliary
//! scalars bound the SINR denominator (`c^2` the relayed jammer power over
//! P_S, `b^2` the inverse of the whole denominator), `beta = alpha * b`, and
//! the rank-constrained lifting `X = beta beta^H` is relaxed to `X >= 0`.
//! The optimal objective `tr(C0 X)` is then exactly the optimal SINR.
//!
//! * **direct** — lifts the full K^2-dimensional `vec(A)`.
//! * **reduced** — first projects onto the effective channel subspace
//!   (rank r <= 4 basis from [`reduced_basis`]), writing the optimal
//!   `A = conj(U1) B U1^H + conj(U1) C U2^H`, then lifts the stacked
//!   `(vec(B), vec(C))`, a PSD block of size r^2 + r(K-r).
//! * **combined** — the same reduced variable, with every operator
//!   assembled directly as a Kronecker product instead of from stacked
//!   outer-product blocks; algebraically identical, structurally a
//!   cross-check on the reduced assembly.
//!
//! Conjugation convention (fixed once, enforced by the fidelity tests): with
//! column-major `vec`, `h_D^T A h_S = h1^H vec(A)` requires
//! `h1 = conj(h_S (x) h_D)`, and the row-norm operators conjugate their
//! channel too: `||h_D^T A||^2 = ||H1^H vec(A)||^2` with `H1 = I (x) conj(h_D)`.

use crate::matrixkit::{self, kron, CMat, CVec};
use crate::model::{Beamformer, ChannelSet, ModelError, SystemParams};
use crate::sdp::{SdpConstraint, SdpProblem, Sense};
use num_complex::Complex64;

/// Relative singular-value cutoff deciding the effective channel rank r.
pub const RANK_TOL: f64 = 1e-10;

/// Below this, `b^2` is considered degenerate and recovery refuses to divide.
pub const B2_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LiftingError {
    #[error("epsilon = 0 with a nonzero jammer leaves the margin constraint undefined")]
    EpsilonZeroWithJammer,
    #[error("b^2 = {0:.3e} is too small to recover a beamformer")]
    DegenerateScaling(f64),
    #[error("beta has length {got}, formulation expects {expected}")]
    BetaLength { got: usize, expected: usize },
    #[error(transparent)]
    Matrix(#[from] matrixkit::MatrixError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

// ── Direct lifting ───────────────────────────────────────────────────────

/// Vectorized operators of the full K^2-dimensional lifting.
#[derive(Debug, Clone)]
pub struct LiftedData {
    /// Signal path: `h1^H vec(A) = h_D^T A h_S`.
    pub h1: CVec,
    /// Jammer path: `h2^H vec(A) = h_D^T A h_J`.
    pub h2: CVec,
    /// EH signal path: `h3^H vec(A) = h_E^T A h_S`.
    pub h3: CVec,
    /// EH jammer path: `h4^H vec(A) = h_E^T A h_J`.
    pub h4: CVec,
    /// `||H1^H vec(A)|| = ||h_D^T A||` (destination-noise row norm).
    pub big_h1: CMat,
    /// `||H2^H vec(A)|| = ||A h_S||` (relayed source power).
    pub big_h2: CMat,
    /// `||H3^H vec(A)|| = ||A h_J||` (relayed jammer power).
    pub big_h3: CMat,
    /// `||H4^H vec(A)|| = ||h_E^T A||` (EH-noise row norm).
    pub big_h4: CMat,
    /// Relay-power Gram matrix: `vec(A)^H Sigma vec(A) = relay_power(A)`.
    pub sigma: CMat,
    /// P_J / P_S.
    pub rho0: f64,
    /// sigma_r2 / P_S.
    pub rho1: f64,
    /// sigma_d2 / P_S.
    pub rho2: f64,
}

/// Build every lifted operator for the given channels and powers.
pub fn lift(ch: &ChannelSet, p: &SystemParams) -> LiftedData {
    let k = ch.k();
    let id = CMat::identity(k, k);
    let col = |v: &CVec| -> CMat { CMat::from_column_slice(k, 1, v.as_slice()) };
    let h_s = col(&ch.h_s);
    let h_j = col(&ch.h_j);
    let h_d = col(&ch.h_d);
    let h_e = col(&ch.h_e);

    let pair = |a: &CMat, b: &CMat| -> CVec {
        let m = kron(a, b).conjugate();
        CVec::from_column_slice(m.as_slice())
    };
    let h1 = pair(&h_s, &h_d);
    let h2 = pair(&h_j, &h_d);
    let h3 = pair(&h_s, &h_e);
    let h4 = pair(&h_j, &h_e);

    let big_h1 = kron(&id, &h_d.conjugate());
    let big_h2 = kron(&h_s.conjugate(), &id);
    let big_h3 = kron(&h_j.conjugate(), &id);
    let big_h4 = kron(&id, &h_e.conjugate());

    let n = k * k;
    let sigma = matrixkit::hermitian_part(
        &(&big_h2 * big_h2.adjoint() * Complex64::new(p.p_s, 0.0)
            + &big_h3 * big_h3.adjoint() * Complex64::new(p.p_j, 0.0)
            + CMat::identity(n, n).scale(p.sigma_r2)),
    );

    LiftedData {
        h1,
        h2,
        h3,
        h4,
        big_h1,
        big_h2,
        big_h3,
        big_h4,
        sigma,
        rho0: p.p_j / p.p_s,
        rho1: p.sigma_r2 / p.p_s,
        rho2: p.sigma_d2 / p.p_s,
    }
}

impl LiftedData {
    /// Harvested-energy Gram matrix `T`: `vec(A)^H T vec(A) = harvested_energy(A)`.
    pub fn eh_matrix(&self, p: &SystemParams) -> CMat {
        matrixkit::hermitian_part(
            &(outer(&self.h3).scale(p.p_s)
                + outer(&self.h4).scale(p.p_j)
                + (&self.big_h4 * self.big_h4.adjoint()).scale(p.sigma_r2)),
        )
    }

    /// SINR of a lifted vector `alpha = vec(A)`, via the lifted operators only.
    pub fn sinr_of(&self, alpha: &CVec, p: &SystemParams) -> f64 {
        let signal = self.h1.dotc(alpha).norm_sqr() * p.p_s;
        let jammer = self.h2.dotc(alpha).norm_sqr() * p.p_j;
        let noise = (self.big_h1.adjoint() * alpha).norm_squared() * p.sigma_r2;
        signal / (jammer + noise + p.sigma_d2)
    }

    /// Relay power of a lifted vector: `alpha^H Sigma alpha`.
    pub fn power_of(&self, alpha: &CVec) -> f64 {
        quad(&self.sigma, alpha)
    }

    /// Harvested energy of a lifted vector.
    pub fn harvested_of(&self, alpha: &CVec, p: &SystemParams) -> f64 {
        self.h3.dotc(alpha).norm_sqr() * p.p_s
            + self.h4.dotc(alpha).norm_sqr() * p.p_j
            + (self.big_h4.adjoint() * alpha).norm_squared() * p.sigma_r2
    }
}

/// `v v^H` as a dense matrix.
fn outer(v: &CVec) -> CMat {
    v * v.adjoint()
}

/// Real quadratic form `v^H M v` for Hermitian `M`.
fn quad(m: &CMat, v: &CVec) -> f64 {
    (v.adjoint() * m * v)[(0, 0)].re
}

// ── Reduced basis (optimal beamformer structure) ─────────────────────────

/// Effective-subspace data: the optimal beamformer lives in the span of the
/// four channel vectors, `A = conj(U1) B U1^H + conj(U1) C U2^H` with
/// `U1` an orthonormal basis of that span (rank r <= 4).
#[derive(Debug, Clone)]
pub struct ReducedData {
    /// K x r orthonormal basis of span{h_S, h_J, h_D, h_E}.
    pub u1: CMat,
    /// K x (K-r) orthonormal complement.
    pub u2: CMat,
    /// Channels expressed in the reduced basis: `g_i = U1^H h_x`.
    pub g1: CVec,
    pub g2: CVec,
    pub g3: CVec,
    pub g4: CVec,
    /// Effective rank r = rank [h_S, h_J, h_D, h_E] <= min(K, 4).
    pub r: usize,
}

impl ReducedData {
    /// Complement dimension K - r (the C block is r x s).
    pub fn s(&self) -> usize {
        self.u2.ncols()
    }

    /// Stacked-variable dimension r^2 + r s.
    pub fn dim(&self) -> usize {
        self.r * self.r + self.r * self.s()
    }

    /// `Theta = g1 g1^H P_S + g2 g2^H P_J + sigma_r2 I_r`, the reduced-space
    /// relay-power kernel.
    pub fn theta(&self, p: &SystemParams) -> CMat {
        matrixkit::hermitian_part(
            &(outer(&self.g1).scale(p.p_s)
                + outer(&self.g2).scale(p.p_j)
                + CMat::identity(self.r, self.r).scale(p.sigma_r2)),
        )
    }
}

/// SVD-based construction of the reduced basis.
pub fn reduced_basis(ch: &ChannelSet) -> Result<ReducedData, LiftingError> {
    let k = ch.k();
    let mut stacked = CMat::zeros(k, 4);
    for (j, h) in [&ch.h_s, &ch.h_j, &ch.h_d, &ch.h_e].into_iter().enumerate() {
        stacked.set_column(j, h);
    }
    let (u, svals, _) = matrixkit::svd_full(&stacked);
    let smax = svals.first().copied().unwrap_or(0.0);
    let r = svals.iter().filter(|&&s| s > RANK_TOL * smax && s > 0.0).count().max(1);

    let u1 = u.columns(0, r).into_owned();
    // The thin SVD only returns min(K,4) left vectors; complete the basis by
    // projecting out span(U1) from the identity and re-orthonormalizing.
    let mut u2 = CMat::zeros(k, k - r);
    if k > r {
        let proj = CMat::identity(k, k) - &u1 * u1.adjoint();
        let (pu, pvals, _) = matrixkit::svd_full(&proj);
        let mut col = 0;
        for (i, &val) in pvals.iter().enumerate() {
            if val > 0.5 && col < k - r {
                u2.set_column(col, &pu.column(i));
                col += 1;
            }
        }
        debug_assert_eq!(col, k - r, "complement basis incomplete");
    }

    let g = |h: &CVec| u1.adjoint() * h;
    Ok(ReducedData {
        g1: g(&ch.h_s),
        g2: g(&ch.h_j),
        g3: g(&ch.h_d),
        g4: g(&ch.h_e),
        u1,
        u2,
        r,
    })
}

// ── Formulations ─────────────────────────────────────────────────────────

/// Which lifting produced a problem; determines the recovery path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormulationKind {
    Direct,
    Reduced,
    Combined,
}

impl FormulationKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FormulationKind::Direct => "direct",
            FormulationKind::Reduced => "reduced",
            FormulationKind::Combined => "combined",
        }
    }
}

/// How to map the lifted solution vector back to a K x K beamformer.
#[derive(Debug, Clone)]
pub enum Recovery {
    /// `A = unvec(beta / sqrt(b2))`.
    Direct { k: usize },
    /// Split into B (r x r) and C (r x s) blocks, then assemble
    /// `A = conj(U1) (B U1^H + C U2^H)`, the form every optimum can
    /// be brought to without loss.
    Reduced { u1: CMat, u2: CMat, r: usize, s: usize },
}

/// A built SDP plus everything needed to interpret its solution.
#[derive(Debug, Clone)]
pub struct Formulation {
    pub kind: FormulationKind,
    pub problem: SdpProblem,
    pub recovery: Recovery,
}

/// Shared constraint assembly: given the problem-space operators, emit the
/// five-constraint family. `n` is the PSD dimension.
#[allow(clippy::too_many_arguments)]
fn assemble_problem(
    n: usize,
    c0: CMat,
    noise_gram: CMat,
    jam_outer: CMat,
    eh_mat: CMat,
    power_mat: CMat,
    p: &SystemParams,
    rho: (f64, f64, f64),
) -> Result<SdpProblem, LiftingError> {
    let (rho0, rho1, rho2) = rho;
    if p.epsilon == 0.0 && rho0 > 0.0 {
        return Err(LiftingError::EpsilonZeroWithJammer);
    }
    let mut constraints = vec![
        // Denominator normalization: rho0 c^2 + rho1 ||noise||^2 + rho2 b^2 = 1.
        // An equality, not <=: it pins the scale of the homogenized variable,
        // and keeps the all-zero point infeasible so that an unreachable EH
        // target is reported as infeasibility rather than a zero optimum.
        SdpConstraint {
            matrix: noise_gram.scale(rho1),
            coef_b2: rho2,
            coef_c2: rho0,
            sense: Sense::Eq,
            rhs: 1.0,
        },
        // Relayed jammer power bound: tr(h2 h2^H X) <= c^2.
        SdpConstraint {
            matrix: jam_outer,
            coef_b2: 0.0,
            coef_c2: -1.0,
            sense: Sense::Le,
            rhs: 0.0,
        },
    ];
    if rho0 > 0.0 {
        // Symmetrizability margin: tr(h1 h1^H X) >= rho0 c^2 / epsilon.
        constraints.push(SdpConstraint {
            matrix: c0.clone(),
            coef_b2: 0.0,
            coef_c2: -rho0 / p.epsilon,
            sense: Sense::Ge,
            rhs: 0.0,
        });
    }
    if p.q_target > 0.0 {
        // Harvested energy: tr(T X) >= Q b^2.
        constraints.push(SdpConstraint {
            matrix: eh_mat,
            coef_b2: -p.q_target,
            coef_c2: 0.0,
            sense: Sense::Ge,
            rhs: 0.0,
        });
    }
    // Relay power budget: tr(Sigma X) <= P_R,max b^2.
    constraints.push(SdpConstraint {
        matrix: power_mat,
        coef_b2: -p.p_r_max,
        coef_c2: 0.0,
        sense: Sense::Le,
        rhs: 0.0,
    });
    Ok(SdpProblem { dim: n, objective: c0, constraints })
}

/// Direct formulation over `X = beta beta^H`, `beta in C^{K^2}`.
pub fn build_direct(ld: &LiftedData, p: &SystemParams) -> Result<Formulation, LiftingError> {
    let n = ld.h1.len();
    let problem = assemble_problem(
        n,
        outer(&ld.h1),
        &ld.big_h1 * ld.big_h1.adjoint(),
        outer(&ld.h2),
        ld.eh_matrix(p),
        ld.sigma.clone(),
        p,
        (ld.rho0, ld.rho1, ld.rho2),
    )?;
    Ok(Formulation { kind: FormulationKind::Direct, problem, recovery: Recovery::Direct { k: p.k } })
}

/// Zero-padded block-diagonal of two square matrices (either may be 0 x 0).
fn block_diag(a: &CMat, b: &CMat) -> CMat {
    let n = a.nrows() + b.nrows();
    let mut out = CMat::zeros(n, n);
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.nrows()), b.shape()).copy_from(b);
    out
}

/// Pad a length-`nb` vector with zeros up to `n`.
fn pad(v: &CVec, n: usize) -> CVec {
    let mut out = CVec::zeros(n);
    out.rows_mut(0, v.len()).copy_from(v);
    out
}

/// Reduced formulation: stacked `(vec(B), vec(C))` variable, operators
/// assembled from outer products of the reduced channels (the "vec of
/// products" route).
pub fn build_reduced(rd: &ReducedData, p: &SystemParams) -> Result<Formulation, LiftingError> {
    let (r, s) = (rd.r, rd.s());
    let n = rd.dim();
    let id_r = CMat::identity(r, r);
    let id_s = CMat::identity(s, s);

    // hat-vectors: conj(vec(g_row g_col^T)) so that e.g.
    // hat_h1^H vec(B) = g3^T B g1 = h_D^T A h_S.
    let outer_vec = |row: &CVec, colv: &CVec| -> CVec {
        let m = (row * colv.transpose()).conjugate();
        CVec::from_column_slice(m.as_slice())
    };
    let hat = |row: &CVec, colv: &CVec| pad(&outer_vec(row, colv), n);
    let h1 = hat(&rd.g3, &rd.g1);
    let h2 = hat(&rd.g3, &rd.g2);
    let h3 = hat(&rd.g4, &rd.g1);
    let h4 = hat(&rd.g4, &rd.g2);

    // Row-norm Gram blocks: ||B^T g||^2 = vec(B)^H (I_r (x) conj(g) g^T) vec(B),
    // repeated for the C block with I_s.
    let row_gram = |g: &CVec| -> CMat {
        let core = (g.conjugate()) * g.transpose();
        block_diag(&kron(&id_r, &core), &kron(&id_s, &core))
    };
    let noise_gram = row_gram(&rd.g3);
    let eh_noise = row_gram(&rd.g4);
    let eh_mat = matrixkit::hermitian_part(
        &(outer(&h3).scale(p.p_s) + outer(&h4).scale(p.p_j) + eh_noise.scale(p.sigma_r2)),
    );

    // Power: Phi = "r copies of Theta" along the B block — under column-major
    // vec this is conj(Theta) (x) I_r — plus sigma_r2 I on the C block.
    let theta = rd.theta(p);
    let power_mat = block_diag(&kron(&theta.conjugate(), &id_r), &id_rs(r, s, p.sigma_r2));

    let problem = assemble_problem(
        n,
        outer(&h1),
        noise_gram,
        outer(&h2),
        eh_mat,
        power_mat,
        p,
        rho_of(p),
    )?;
    Ok(Formulation {
        kind: FormulationKind::Reduced,
        problem,
        recovery: Recovery::Reduced { u1: rd.u1.clone(), u2: rd.u2.clone(), r, s },
    })
}

/// Combined formulation: same stacked variable, every operator assembled as
/// a Kronecker product of reduced channels (the "lifting in the reduced
/// space" route).
pub fn build_combined(rd: &ReducedData, p: &SystemParams) -> Result<Formulation, LiftingError> {
    let (r, s) = (rd.r, rd.s());
    let n = rd.dim();
    let id_r = CMat::identity(r, r);
    let id_s = CMat::identity(s, s);
    let col = |v: &CVec| -> CMat { CMat::from_column_slice(v.len(), 1, v.as_slice()) };

    // tilde-vectors: conj(g_col (x) g_row), the direct-lifting convention
    // applied to the reduced channels.
    let tilde = |colv: &CVec, row: &CVec| -> CVec {
        let m = kron(&col(colv), &col(row)).conjugate();
        pad(&CVec::from_column_slice(m.as_slice()), n)
    };
    let h1 = tilde(&rd.g1, &rd.g3);
    let h2 = tilde(&rd.g2, &rd.g3);
    let h3 = tilde(&rd.g1, &rd.g4);
    let h4 = tilde(&rd.g2, &rd.g4);

    // tilde operators on the B block, mirrored on the C block.
    let tall = |g: &CVec, id: &CMat| -> CMat { kron(id, &col(g).conjugate()) };
    let noise_b = tall(&rd.g3, &id_r);
    let noise_c = tall(&rd.g3, &id_s);
    let noise_gram = block_diag(&(&noise_b * noise_b.adjoint()), &(&noise_c * noise_c.adjoint()));
    let eh_b = tall(&rd.g4, &id_r);
    let eh_c = tall(&rd.g4, &id_s);
    let eh_noise = block_diag(&(&eh_b * eh_b.adjoint()), &(&eh_c * eh_c.adjoint()));
    let eh_mat = matrixkit::hermitian_part(
        &(outer(&h3).scale(p.p_s) + outer(&h4).scale(p.p_j) + eh_noise.scale(p.sigma_r2)),
    );

    // Power assembled from the wide operators H2~ = conj(g1) (x) I_r etc.
    let wide = |g: &CVec| -> CMat { kron(&col(g).conjugate(), &id_r) };
    let h2w = wide(&rd.g1);
    let h3w = wide(&rd.g2);
    let power_b = matrixkit::hermitian_part(
        &(&h2w * h2w.adjoint() * Complex64::new(p.p_s, 0.0)
            + &h3w * h3w.adjoint() * Complex64::new(p.p_j, 0.0)
            + CMat::identity(r * r, r * r).scale(p.sigma_r2)),
    );
    let power_mat = block_diag(&power_b, &id_rs(r, s, p.sigma_r2));

    let problem = assemble_problem(
        n,
        outer(&h1),
        noise_gram,
        outer(&h2),
        eh_mat,
        power_mat,
        p,
        rho_of(p),
    )?;
    Ok(Formulation {
        kind: FormulationKind::Combined,
        problem,
        recovery: Recovery::Reduced { u1: rd.u1.clone(), u2: rd.u2.clone(), r, s },
    })
}

fn rho_of(p: &SystemParams) -> (f64, f64, f64) {
    (p.p_j / p.p_s, p.sigma_r2 / p.p_s, p.sigma_d2 / p.p_s)
}

fn id_rs(r: usize, s: usize, scale: f64) -> CMat {
    CMat::identity(r * s, r * s).scale(scale)
}

// ── Recovery ─────────────────────────────────────────────────────────────

/// Map a solution vector `beta` (with its scaling `b2`) back to the K x K
/// beamformer `A = unvec(beta / sqrt(b2))`, assembled through the reduced
/// basis when the formulation used one.
pub fn recover_beamformer(
    f: &Formulation,
    beta: &CVec,
    b2: f64,
) -> Result<Beamformer, LiftingError> {
    if !(b2 > B2_FLOOR) {
        return Err(LiftingError::DegenerateScaling(b2));
    }
    let alpha = beta / Complex64::new(b2.sqrt(), 0.0);
    match &f.recovery {
        Recovery::Direct { k } => {
            if alpha.len() != k * k {
                return Err(LiftingError::BetaLength { got: alpha.len(), expected: k * k });
            }
            Ok(Beamformer::new(matrixkit::unvec(&alpha, *k, *k)?)?)
        }
        Recovery::Reduced { u1, u2, r, s } => {
            let expected = r * r + r * s;
            if alpha.len() != expected {
                return Err(LiftingError::BetaLength { got: alpha.len(), expected });
            }
            let b_block = alpha.rows(0, r * r).into_owned();
            let b_mat = matrixkit::unvec(&b_block, *r, *r)?;
            let mut a = u1.conjugate() * &b_mat * u1.adjoint();
            if *s > 0 {
                let c_block = alpha.rows(r * r, r * s).into_owned();
                let c_mat = matrixkit::unvec(&c_block, *r, *s)?;
                a += u1.conjugate() * &c_mat * u2.adjoint();
            }
            Ok(Beamformer::new(a)?)
        }
    }
}
