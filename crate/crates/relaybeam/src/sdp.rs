//! Standard-form semidefinite programs over one Hermitian PSD block plus the
//! two nonnegative scalars `b^2`, `c^2`, and a purpose-built interior-point
//! solver for them.
//!
//! The solver implements the homogeneous self-dual embedding with the HKM
//! search direction and a Mehrotra predictor-corrector, working on complex
//! Hermitian matrices natively (no real embedding needed). Problems here are
//! tiny in the constraint dimension (m <= 6) while the PSD block runs up to
//! 36 x 36, so each iteration reduces to a handful of dense n^3 products and
//! an m x m Schur solve — microseconds to milliseconds per instance, fully
//! deterministic.
//!
//! Infeasibility and unboundedness are certified through the embedding
//! (tau -> 0 with a Farkas witness) and reported via [`SolveStatus`], never
//! by panicking.

use crate::matrixkit::{self, CMat, CVec};
use nalgebra::DVector;
use std::io::Write as IoWrite;

// ── Problem & solution types ─────────────────────────────────────────────

/// Direction of a scalar (in)equality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// One affine constraint `tr(M X) + coef_b2*b2 + coef_c2*c2 {<=,>=,=} rhs`.
#[derive(Debug, Clone)]
pub struct SdpConstraint {
    pub matrix: CMat,
    pub coef_b2: f64,
    pub coef_c2: f64,
    pub sense: Sense,
    pub rhs: f64,
}

/// Maximize `tr(C0 X)` over `X >= 0` (Hermitian, `dim x dim`) and scalars
/// `b2, c2 >= 0`, subject to [`SdpConstraint`]s.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub dim: usize,
    pub objective: CMat,
    pub constraints: Vec<SdpConstraint>,
}

/// Solver verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::NumericalFailure => "numerical_failure",
        }
    }
}

/// Solver output. `x`, `b2`, `c2` are meaningful only when
/// `status == Optimal`; `gap` is the achieved relative duality gap.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: CMat,
    pub b2: f64,
    pub c2: f64,
    pub objective: f64,
    pub status: SolveStatus,
    pub gap: f64,
    pub iterations: u32,
}

/// Rank-1 candidate pulled out of an optimal `X`, with its (possibly
/// rescaled) scalars and the objective it actually achieves.
#[derive(Debug, Clone)]
pub struct Rank1Extraction {
    /// `sqrt(lambda_1) * v_1`, the dominant eigenpair direction.
    pub beta: CVec,
    pub b2: f64,
    pub c2: f64,
    /// `tr(C0 beta beta^H)`.
    pub achieved: f64,
    /// `1 - achieved/bound`, clamped at 0.
    pub rank1_gap: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SdpError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("tolerance {0:.3e} outside (0, 1e-2]")]
    InvalidTolerance(f64),
    #[error("extraction requires an optimal solution, status was {0:?}")]
    NotOptimal(SolveStatus),
    #[error(
        "rank-1 extraction gap too large: achieved {achieved:.6e} of bound {bound:.6e} \
         (feasible scaling {feasible})"
    )]
    Rank1Gap { achieved: f64, bound: f64, feasible: bool },
    #[error(transparent)]
    Matrix(#[from] matrixkit::MatrixError),
}

/// Default relative duality-gap tolerance.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Relative feasibility tolerance required of candidate solutions.
pub const FEAS_TOL: f64 = 1e-6;
/// Fraction of the step to the cone boundary actually taken.
const STEP_FRACTION: f64 = 0.99;
const MAX_ITER: u32 = 200;

// ── Public operations ────────────────────────────────────────────────────

/// Solve the SDP to relative duality gap `tol`.
pub fn solve(prob: &SdpProblem, tol: f64) -> Result<SdpSolution, SdpError> {
    if !(tol > 0.0 && tol <= 1e-2) {
        return Err(SdpError::InvalidTolerance(tol));
    }
    validate(prob)?;
    let conic = Conic::build(prob);
    Ok(conic.run(tol))
}

/// Number of eigenvalues exceeding `rel_tol` times the largest one
/// (0 for a numerically zero or negative-semidefinite matrix).
pub fn numerical_rank(x: &CMat, rel_tol: f64) -> Result<usize, SdpError> {
    let (vals, _) = matrixkit::hermitian_eig(x)?;
    let top = vals.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return Ok(0);
    }
    Ok(vals.iter().filter(|&&v| v > rel_tol * top).count())
}

/// Extract the dominant rank-1 candidate `beta = sqrt(lambda_1) v_1` from an
/// optimal solution.
///
/// Replacing `X` by `beta beta^H` can only lose mass on `>=` constraints, so
/// a single positive rescaling of `(b2, c2)` — found by intersecting the
/// per-constraint feasible intervals — restores feasibility whenever that is
/// possible at all. If no scaling works, or the candidate achieves less than
/// 99% of the SDP bound, the gap is flagged as an error carrying the data.
pub fn extract_rank1(sol: &SdpSolution, prob: &SdpProblem) -> Result<Rank1Extraction, SdpError> {
    if sol.status != SolveStatus::Optimal {
        return Err(SdpError::NotOptimal(sol.status));
    }
    let (vals, vecs) = matrixkit::hermitian_eig(&sol.x)?;
    let lambda1 = vals.first().copied().unwrap_or(0.0).max(0.0);
    let v1 = vecs.column(0).into_owned();
    let beta = v1.scale(lambda1.sqrt());

    let achieved = quad_form(&prob.objective, &beta);
    let bound = sol.objective;

    // Feasibility of (beta beta^H, t*b2, t*c2): each constraint is affine in
    // t, giving an interval; intersect them all.
    let interval = scalar_rescale_interval(prob, &beta, sol.b2, sol.c2);
    let feasible = interval.is_some();
    let t = interval.map(|(lo, hi)| 1.0f64.clamp(lo, hi)).unwrap_or(1.0);

    let rank1_gap = if bound > 0.0 { (1.0 - achieved / bound).max(0.0) } else { 0.0 };
    if !feasible || achieved < 0.99 * bound {
        return Err(SdpError::Rank1Gap { achieved, bound, feasible });
    }
    Ok(Rank1Extraction { beta, b2: t * sol.b2, c2: t * sol.c2, achieved, rank1_gap })
}

/// The interval of scalings `t >= 0` for which `(beta beta^H, t b2, t c2)`
/// satisfies all constraints within the relative feasibility tolerance, or
/// `None` when empty.
fn scalar_rescale_interval(
    prob: &SdpProblem,
    beta: &CVec,
    b2: f64,
    c2: f64,
) -> Option<(f64, f64)> {
    let mut t_lo = 0.0f64;
    let mut t_hi = f64::INFINITY;
    for con in &prob.constraints {
        let fixed = quad_form(&con.matrix, beta);
        let slope = con.coef_b2 * b2 + con.coef_c2 * c2;
        let scale = 1.0 + fixed.abs() + slope.abs() + con.rhs.abs();
        // Half the feasibility tolerance, on the rhs scale only: candidates
        // then pass `max_violation` (denominator `1 + |lhs| + |rhs|`) with a
        // 2x margin, and the objective cannot ride the slack past the bound
        // by more than O(FEAS_TOL).
        let slack = 0.5 * FEAS_TOL * (1.0 + con.rhs.abs());
        // Required band on t*slope: [lo_rhs, hi_rhs] as dictated by sense.
        let lo_rhs = con.rhs - slack - fixed;
        let hi_rhs = con.rhs + slack - fixed;
        let (need_lo, need_hi) = match con.sense {
            Sense::Le => (false, true),
            Sense::Ge => (true, false),
            Sense::Eq => (true, true),
        };
        if slope.abs() <= f64::EPSILON * scale {
            let ok = (!need_hi || 0.0 <= hi_rhs) && (!need_lo || 0.0 >= lo_rhs);
            if !ok {
                return None;
            }
            continue;
        }
        if need_hi {
            if slope > 0.0 {
                t_hi = t_hi.min(hi_rhs / slope);
            } else {
                t_lo = t_lo.max(hi_rhs / slope);
            }
        }
        if need_lo {
            if slope > 0.0 {
                t_lo = t_lo.max(lo_rhs / slope);
            } else {
                t_hi = t_hi.min(lo_rhs / slope);
            }
        }
    }
    (t_lo <= t_hi).then_some((t_lo, t_hi))
}

/// Best feasible rank-1 candidate from deterministic Gaussian rounding.
///
/// Draws `beta = X^{1/2} g` with `g` standard complex Gaussian (plus the
/// dominant eigenpair as draw zero), and for each direction solves the exact
/// two-variable LP over a candidate scaling `s` of `beta beta^H` and a joint
/// scaling `t` of `(b2, c2)`, maximizing the achieved objective. Unlike
/// [`extract_rank1`] no 99% gate applies: the best feasible candidate is
/// returned with its `rank1_gap` recording the loss, and only the absence of
/// any feasible candidate is an error. Intended for instances where the
/// relaxation is genuinely not rank-1 tight.
pub fn randomized_rank1(
    sol: &SdpSolution,
    prob: &SdpProblem,
    draws: usize,
    seed: u64,
) -> Result<Rank1Extraction, SdpError> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    if sol.status != SolveStatus::Optimal {
        return Err(SdpError::NotOptimal(sol.status));
    }
    let n = prob.dim;
    let bound = sol.objective;
    let root = matrixkit::psd_sqrt(&sol.x)?;
    let (vals, vecs) = matrixkit::hermitian_eig(&sol.x)?;
    let lambda1 = vals.first().copied().unwrap_or(0.0).max(0.0);

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Rank1Extraction)> = None;
    for draw in 0..=draws {
        let beta = if draw == 0 {
            vecs.column(0).into_owned().scale(lambda1.sqrt())
        } else {
            let g = CVec::from_fn(n, |_, _| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                num_complex::Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            });
            &root * g
        };
        let c = quad_form(&prob.objective, &beta);
        if !(c > 0.0) && bound > 0.0 {
            continue;
        }
        let rows: Vec<BiscaleRow> = prob
            .constraints
            .iter()
            .map(|con| {
                let a = quad_form(&con.matrix, &beta);
                let g = con.coef_b2 * sol.b2 + con.coef_c2 * sol.c2;
                // Same band slack as `scalar_rescale_interval`, for the same
                // reason: stay safely inside `max_violation`'s tolerance.
                let slack = 0.5 * FEAS_TOL * (1.0 + con.rhs.abs());
                let (lo, hi) = match con.sense {
                    Sense::Le => (f64::NEG_INFINITY, con.rhs + slack),
                    Sense::Ge => (con.rhs - slack, f64::INFINITY),
                    Sense::Eq => (con.rhs - slack, con.rhs + slack),
                };
                BiscaleRow { a, g, lo, hi }
            })
            .collect();
        if let Some((s, t)) = best_biscale(&rows) {
            let achieved = s * c;
            if best.as_ref().is_none_or(|(b, _)| achieved > *b) {
                let rank1_gap =
                    if bound > 0.0 { (1.0 - achieved / bound).max(0.0) } else { 0.0 };
                let ext = Rank1Extraction {
                    beta: beta.scale(s.sqrt()),
                    b2: t * sol.b2,
                    c2: t * sol.c2,
                    achieved,
                    rank1_gap,
                };
                best = Some((achieved, ext));
            }
        }
    }
    best.map(|(_, ext)| ext).ok_or(SdpError::Rank1Gap {
        achieved: 0.0,
        bound,
        feasible: false,
    })
}

/// One banded row `lo <= s*a + t*g <= hi` of the two-variable scaling LP.
struct BiscaleRow {
    a: f64,
    g: f64,
    lo: f64,
    hi: f64,
}

/// Maximize `s` over `s, t >= 0` subject to the banded rows. The optimum of
/// this two-variable LP sits at a vertex, so candidate `t` values are the
/// pairwise boundary-line intersections plus the axis crossings; each is
/// checked exactly.
fn best_biscale(rows: &[BiscaleRow]) -> Option<(f64, f64)> {
    // Boundary lines s*a + t*g = r.
    let mut lines: Vec<(f64, f64, f64)> = Vec::new();
    for row in rows {
        if row.lo.is_finite() {
            lines.push((row.a, row.g, row.lo));
        }
        if row.hi.is_finite() {
            lines.push((row.a, row.g, row.hi));
        }
    }
    let mut t_candidates = vec![0.0f64, 1.0];
    for (i, &(a1, g1, r1)) in lines.iter().enumerate() {
        // Crossing with the s = 0 axis.
        if g1.abs() > 1e-300 {
            t_candidates.push(r1 / g1);
        }
        for &(a2, g2, r2) in lines.iter().skip(i + 1) {
            let det = a1 * g2 - a2 * g1;
            if det.abs() > 1e-300 {
                t_candidates.push((a1 * r2 - a2 * r1) / det);
            }
        }
    }
    let mut best: Option<(f64, f64)> = None;
    for &t in &t_candidates {
        if !t.is_finite() || t < 0.0 {
            continue;
        }
        let mut s_lo = 0.0f64;
        let mut s_hi = f64::INFINITY;
        let mut ok = true;
        for row in rows {
            let base = t * row.g;
            if row.a.abs() <= 1e-300 {
                if base < row.lo || base > row.hi {
                    ok = false;
                    break;
                }
                continue;
            }
            let (lo_s, hi_s) = if row.a > 0.0 {
                ((row.lo - base) / row.a, (row.hi - base) / row.a)
            } else {
                ((row.hi - base) / row.a, (row.lo - base) / row.a)
            };
            if lo_s.is_finite() {
                s_lo = s_lo.max(lo_s);
            }
            if hi_s.is_finite() {
                s_hi = s_hi.min(hi_s);
            }
        }
        if !ok || s_lo > s_hi || !s_hi.is_finite() {
            continue;
        }
        if best.as_ref().is_none_or(|&(s, _)| s_hi > s) {
            best = Some((s_hi, t));
        }
    }
    best
}

/// Largest relative violation of the problem constraints by a candidate
/// `(X, b2, c2)` (0 means feasible; cone membership is not checked here).
pub fn max_violation(prob: &SdpProblem, x: &CMat, b2: f64, c2: f64) -> f64 {
    let mut worst = 0.0f64;
    for con in &prob.constraints {
        let lhs = matrixkit::frob_inner(&con.matrix, x) + con.coef_b2 * b2 + con.coef_c2 * c2;
        let scale = 1.0 + lhs.abs() + con.rhs.abs();
        let violation = match con.sense {
            Sense::Le => (lhs - con.rhs) / scale,
            Sense::Ge => (con.rhs - lhs) / scale,
            Sense::Eq => (lhs - con.rhs).abs() / scale,
        };
        worst = worst.max(violation);
    }
    worst
}

/// Write a self-describing textual dump of the problem for offline
/// inspection. Layout (stable): a header line `sdp-problem v1`, then
/// `dim`, `constraints` counts; the objective and each constraint matrix as
/// `dim` lines of row-major `re im` pairs; each constraint preceded by
/// `constraint <idx> <le|ge> rhs <r> coef_b2 <p> coef_c2 <q>`.
pub fn dump_problem<W: IoWrite>(prob: &SdpProblem, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "sdp-problem v1")?;
    writeln!(out, "dim {}", prob.dim)?;
    writeln!(out, "constraints {}", prob.constraints.len())?;
    writeln!(out, "objective")?;
    write_matrix(&prob.objective, out)?;
    for (idx, con) in prob.constraints.iter().enumerate() {
        let sense = match con.sense {
            Sense::Le => "le",
            Sense::Ge => "ge",
            Sense::Eq => "eq",
        };
        writeln!(
            out,
            "constraint {idx} {sense} rhs {:.17e} coef_b2 {:.17e} coef_c2 {:.17e}",
            con.rhs, con.coef_b2, con.coef_c2
        )?;
        write_matrix(&con.matrix, out)?;
    }
    Ok(())
}

fn write_matrix<W: IoWrite>(m: &CMat, out: &mut W) -> std::io::Result<()> {
    for i in 0..m.nrows() {
        let mut line = String::new();
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            if j > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{:.17e} {:.17e}", z.re, z.im));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn validate(prob: &SdpProblem) -> Result<(), SdpError> {
    if prob.dim < 1 {
        return Err(SdpError::InvalidProblem("PSD dimension must be >= 1".into()));
    }
    if prob.constraints.is_empty() {
        return Err(SdpError::InvalidProblem("at least one constraint required".into()));
    }
    let check = |m: &CMat, what: &str| -> Result<(), SdpError> {
        if m.nrows() != prob.dim || m.ncols() != prob.dim {
            return Err(SdpError::InvalidProblem(format!(
                "{what} is {}x{}, expected {0}x{0}",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = matrixkit::max_abs(m).max(1.0);
        let dev = matrixkit::max_abs(&(m - m.adjoint()));
        if dev > matrixkit::HERMITIAN_TOL * scale {
            return Err(SdpError::InvalidProblem(format!("{what} is not Hermitian ({dev:.3e})")));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(SdpError::InvalidProblem(format!("{what} has non-finite entries")));
        }
        Ok(())
    };
    check(&prob.objective, "objective")?;
    for (i, con) in prob.constraints.iter().enumerate() {
        check(&con.matrix, &format!("constraint {i}"))?;
        if matrixkit::max_abs(&con.matrix) == 0.0 && con.coef_b2 == 0.0 && con.coef_c2 == 0.0 {
            return Err(SdpError::InvalidProblem(format!("constraint {i} is identically zero")));
        }
    }
    Ok(())
}

fn quad_form(m: &CMat, v: &CVec) -> f64 {
    (v.adjoint() * m * v)[(0, 0)].re
}

// ── Interior-point engine ────────────────────────────────────────────────

/// Scaled standard-form data: minimize `<c_x, X>` over `X >= 0` and an
/// orthant block `u >= 0` (used scalars + one slack per constraint), subject
/// to `<M_i, X> + a_i^T u = b_i`.
struct Conic {
    n: usize,
    d: usize,
    m: usize,
    mats: Vec<CMat>,
    au: Vec<Vec<f64>>,
    b: DVector<f64>,
    c_x: CMat,
    /// Index of b2 / c2 inside the orthant block, if the problem uses them.
    b2_idx: Option<usize>,
    c2_idx: Option<usize>,
    objective_raw: CMat,
}

/// One HSD iterate.
struct Point {
    x: CMat,
    s: CMat,
    u: DVector<f64>,
    w: DVector<f64>,
    y: DVector<f64>,
    tau: f64,
    kappa: f64,
}

struct Direction {
    dx: CMat,
    ds: CMat,
    du: DVector<f64>,
    dw: DVector<f64>,
    dy: DVector<f64>,
    dtau: f64,
    dkappa: f64,
}

impl Conic {
    fn build(prob: &SdpProblem) -> Self {
        let n = prob.dim;
        let m = prob.constraints.len();
        let uses_b2 = prob.constraints.iter().any(|c| c.coef_b2 != 0.0);
        let uses_c2 = prob.constraints.iter().any(|c| c.coef_c2 != 0.0);
        let mut next = 0usize;
        let b2_idx = uses_b2.then(|| post_inc(&mut next));
        let c2_idx = uses_c2.then(|| post_inc(&mut next));
        // Scalars first, then one slack per inequality row; equality rows
        // get none (their multipliers are already free).
        let slack_idx: Vec<Option<usize>> = prob
            .constraints
            .iter()
            .map(|c| (c.sense != Sense::Eq).then(|| post_inc(&mut next)))
            .collect();
        let d = next;

        let mut mats = Vec::with_capacity(m);
        let mut au = vec![vec![0.0; d]; m];
        let mut b = DVector::zeros(m);
        for (i, con) in prob.constraints.iter().enumerate() {
            let row_scale = matrixkit::max_abs(&con.matrix)
                .max(con.coef_b2.abs())
                .max(con.coef_c2.abs())
                .max(con.rhs.abs())
                .max(1e-30);
            mats.push(matrixkit::hermitian_part(&con.matrix).unscale(row_scale));
            if let Some(bi) = b2_idx {
                au[i][bi] = con.coef_b2 / row_scale;
            }
            if let Some(ci) = c2_idx {
                au[i][ci] = con.coef_c2 / row_scale;
            }
            if let Some(si) = slack_idx[i] {
                au[i][si] = match con.sense {
                    Sense::Le => 1.0,
                    Sense::Ge => -1.0,
                    Sense::Eq => unreachable!("equality rows carry no slack"),
                };
            }
            b[i] = con.rhs / row_scale;
        }

        let obj_scale = matrixkit::max_abs(&prob.objective).max(1e-30);
        // Minimization form: c_x = -C0 / scale.
        let c_x = matrixkit::hermitian_part(&prob.objective).unscale(-obj_scale);

        Conic { n, d, m, mats, au, b, c_x, b2_idx, c2_idx, objective_raw: prob.objective.clone() }
    }

    /// `A x` for the current point: `<M_i, X> + a_i . u`.
    fn apply_a(&self, x: &CMat, u: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.m, |i, _| {
            matrixkit::frob_inner(&self.mats[i], x)
                + self.au[i].iter().zip(u.iter()).map(|(a, v)| a * v).sum::<f64>()
        })
    }

    /// PSD part of the adjoint `A^* y`.
    fn adjoint_x(&self, y: &DVector<f64>) -> CMat {
        let mut out = CMat::zeros(self.n, self.n);
        for (i, mat) in self.mats.iter().enumerate() {
            out += mat.scale(y[i]);
        }
        out
    }

    /// Orthant part of the adjoint `A^* y`.
    fn adjoint_u(&self, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.d, |j, _| (0..self.m).map(|i| self.au[i][j] * y[i]).sum())
    }

    fn run(&self, tol: f64) -> SdpSolution {
        let n = self.n;
        let nu = (n + self.d + 1) as f64;
        let mut pt = Point {
            x: CMat::identity(n, n),
            s: CMat::identity(n, n),
            u: DVector::from_element(self.d, 1.0),
            w: DVector::from_element(self.d, 1.0),
            y: DVector::zeros(self.m),
            tau: 1.0,
            kappa: 1.0,
        };
        let feas_tol = tol.max(1e-10);
        let b_norm = 1.0 + self.b.norm();
        let c_norm = 1.0 + self.c_x.norm();
        let mut iterations = 0u32;
        let mut stall = 0u32;
        let mut prev_mu = f64::INFINITY;
        let mut last_relgap = f64::INFINITY;

        for iter in 0..MAX_ITER {
            iterations = iter + 1;

            // Residuals of the self-dual system.
            let r_p = self.apply_a(&pt.x, &pt.u) - &self.b * pt.tau;
            let r_d_x =
                self.adjoint_x(&pt.y) + &pt.s - self.c_x.scale(pt.tau);
            let r_d_u = self.adjoint_u(&pt.y) + &pt.w;
            let pcost = matrixkit::frob_inner(&self.c_x, &pt.x);
            let dcost = self.b.dot(&pt.y);
            let r_g = dcost - pcost - pt.kappa;

            let gap = matrixkit::frob_inner(&pt.x, &pt.s) + pt.u.dot(&pt.w) + pt.tau * pt.kappa;
            let mu = gap / nu;

            // Optimality: scaled residuals and relative gap small.
            let pres = r_p.norm() / (pt.tau * b_norm);
            let dres = (r_d_x.norm() + r_d_u.norm()) / (pt.tau * c_norm);
            let cx_gap = (matrixkit::frob_inner(&pt.x, &pt.s) + pt.u.dot(&pt.w))
                / (pt.tau * pt.tau);
            let pobj = pcost / pt.tau;
            let relgap = cx_gap / pobj.abs().max(1.0);
            last_relgap = relgap;
            if pres <= feas_tol && dres <= feas_tol && relgap <= tol {
                return self.finish(&pt, SolveStatus::Optimal, relgap, iterations);
            }

            // Infeasibility / unboundedness certificates, built from the
            // homogeneous images (no tau terms): a Farkas witness with
            // relative residual 1e-7 cannot exist for a problem whose
            // feasible set (or dual) contains a point of norm below 1e7, so
            // checking every iteration is safe.
            if dcost > 0.0 {
                // Primal infeasible iff A* y + s = 0 with b'y > 0.
                let hom_d = (&r_d_x + self.c_x.scale(pt.tau)).norm() + r_d_u.norm();
                if hom_d / dcost <= 1e-7 {
                    return self.finish(&pt, SolveStatus::Infeasible, relgap, iterations);
                }
            }
            if pcost < 0.0 {
                // Dual infeasible (primal unbounded) iff A x = 0, x in cone,
                // <c, x> < 0.
                let hom_p = (&r_p + &self.b * pt.tau).norm();
                if hom_p / (-pcost) <= 1e-7 {
                    return self.finish(&pt, SolveStatus::Unbounded, relgap, iterations);
                }
            }
            // tau collapse without a clean witness: give up.
            if pt.tau <= 1e-12 * pt.kappa.max(1.0) {
                return self.finish(&pt, SolveStatus::NumericalFailure, relgap, iterations);
            }

            // Stall guard.
            if mu > 0.95 * prev_mu {
                stall += 1;
                if stall >= 15 {
                    // Interpret a stalled solve near feasibility as good
                    // enough only if it already meets a loose gap.
                    let status = if pres <= 1e-6 && dres <= 1e-6 && relgap <= 1e-5 {
                        SolveStatus::Optimal
                    } else {
                        SolveStatus::NumericalFailure
                    };
                    return self.finish(&pt, status, relgap, iterations);
                }
            } else {
                stall = 0;
            }
            prev_mu = mu;

            // Factor the current point.
            let Some(factors) = Factors::compute(self, &pt) else {
                return self.finish(&pt, SolveStatus::NumericalFailure, relgap, iterations);
            };

            // Predictor (affine) direction: drive residuals and
            // complementarity to zero.
            let rc_aff = -(&pt.x * &pt.s);
            let rcu_aff = DVector::from_fn(self.d, |k, _| -pt.u[k] * pt.w[k]);
            let rct_aff = -pt.tau * pt.kappa;
            let Some(aff) =
                factors.direction(self, &pt, &r_p, &r_d_x, &r_d_u, r_g, &rc_aff, &rcu_aff, rct_aff)
            else {
                return self.finish(&pt, SolveStatus::NumericalFailure, relgap, iterations);
            };
            let alpha_aff = self.max_step(&pt, &aff);

            // Mehrotra centering weight from the affine trial point.
            let mu_aff = {
                let xs = matrixkit::frob_inner(
                    &(&pt.x + aff.dx.scale(alpha_aff)),
                    &(&pt.s + aff.ds.scale(alpha_aff)),
                );
                let uw = (0..self.d)
                    .map(|k| (pt.u[k] + alpha_aff * aff.du[k]) * (pt.w[k] + alpha_aff * aff.dw[k]))
                    .sum::<f64>();
                let tk = (pt.tau + alpha_aff * aff.dtau) * (pt.kappa + alpha_aff * aff.dkappa);
                (xs + uw + tk).max(0.0) / nu
            };
            let sigma = (mu_aff / mu).powi(3).clamp(1e-10, 0.999);

            // Corrector direction.
            let sig_mu = sigma * mu;
            let rc = CMat::identity(n, n).scale(sig_mu) - &pt.x * &pt.s - &aff.dx * &aff.ds;
            let rcu =
                DVector::from_fn(self.d, |k, _| sig_mu - pt.u[k] * pt.w[k] - aff.du[k] * aff.dw[k]);
            let rct = sig_mu - pt.tau * pt.kappa - aff.dtau * aff.dkappa;
            let Some(dir) =
                factors.direction(self, &pt, &r_p, &r_d_x, &r_d_u, r_g, &rc, &rcu, rct)
            else {
                return self.finish(&pt, SolveStatus::NumericalFailure, relgap, iterations);
            };

            let alpha = (STEP_FRACTION * self.max_step(&pt, &dir)).min(1.0);
            pt.x = matrixkit::hermitian_part(&(&pt.x + dir.dx.scale(alpha)));
            pt.s = matrixkit::hermitian_part(&(&pt.s + dir.ds.scale(alpha)));
            pt.u += dir.du.scale(alpha);
            pt.w += dir.dw.scale(alpha);
            pt.y += dir.dy.scale(alpha);
            pt.tau += alpha * dir.dtau;
            pt.kappa += alpha * dir.dkappa;
        }

        self.finish(&pt, SolveStatus::NumericalFailure, last_relgap, iterations)
    }

    /// Longest step in `(0, 1]` keeping every cone variable strictly inside.
    fn max_step(&self, pt: &Point, dir: &Direction) -> f64 {
        let mut alpha = 1.0f64;
        alpha = alpha.min(psd_max_step(&pt.x, &dir.dx));
        alpha = alpha.min(psd_max_step(&pt.s, &dir.ds));
        for k in 0..self.d {
            if dir.du[k] < 0.0 {
                alpha = alpha.min(-pt.u[k] / dir.du[k]);
            }
            if dir.dw[k] < 0.0 {
                alpha = alpha.min(-pt.w[k] / dir.dw[k]);
            }
        }
        if dir.dtau < 0.0 {
            alpha = alpha.min(-pt.tau / dir.dtau);
        }
        if dir.dkappa < 0.0 {
            alpha = alpha.min(-pt.kappa / dir.dkappa);
        }
        alpha
    }

    fn finish(&self, pt: &Point, status: SolveStatus, relgap: f64, iterations: u32) -> SdpSolution {
        let tau = pt.tau.max(1e-300);
        let x = pt.x.unscale(tau);
        let b2 = self.b2_idx.map(|i| pt.u[i] / tau).unwrap_or(0.0);
        let c2 = self.c2_idx.map(|i| pt.u[i] / tau).unwrap_or(0.0);
        let objective = matrixkit::frob_inner(&self.objective_raw, &x);
        SdpSolution { x, b2, c2, objective, status, gap: relgap, iterations }
    }
}

fn post_inc(v: &mut usize) -> usize {
    let out = *v;
    *v += 1;
    out
}

/// Largest `alpha` with `X + alpha dX >= 0`, via the Cholesky congruence
/// `lambda_min(L^{-1} dX L^{-H})`.
fn psd_max_step(x: &CMat, dx: &CMat) -> f64 {
    let Some(chol) = nalgebra::Cholesky::new(matrixkit::hermitian_part(x)) else {
        return 0.0;
    };
    let l = chol.l();
    let Some(y1) = l.solve_lower_triangular(dx) else {
        return 0.0;
    };
    // y2 = y1 * L^{-H} = (L^{-1} y1^H)^H
    let Some(tmp) = l.solve_lower_triangular(&y1.adjoint()) else {
        return 0.0;
    };
    let y2 = matrixkit::hermitian_part(&tmp.adjoint());
    match matrixkit::hermitian_eig(&y2) {
        Ok((vals, _)) => {
            let min = vals.last().copied().unwrap_or(0.0);
            if min >= 0.0 {
                1.0
            } else {
                (-1.0 / min).min(1.0)
            }
        }
        Err(_) => 0.0,
    }
}

/// Per-iteration factorization: `S^{-1}`, the HKM operator images of the
/// constraint matrices and objective, and the dense m x m Schur complement.
struct Factors {
    s_inv: CMat,
    h_c: CMat,
    schur: nalgebra::DMatrix<f64>,
    v: DVector<f64>,
    y1: DVector<f64>,
}

impl Factors {
    fn compute(conic: &Conic, pt: &Point) -> Option<Factors> {
        let chol = nalgebra::Cholesky::new(matrixkit::hermitian_part(&pt.s))?;
        let s_inv = chol.inverse();
        let h = |mat: &CMat| -> CMat {
            let a = &pt.x * mat * &s_inv;
            matrixkit::hermitian_part(&a)
        };
        let h_mats: Vec<CMat> = conic.mats.iter().map(|m| h(m)).collect();
        let h_c = h(&conic.c_x);

        let m = conic.m;
        let mut schur = nalgebra::DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let mut entry = matrixkit::frob_inner(&conic.mats[i], &h_mats[j]);
                for k in 0..conic.d {
                    entry += conic.au[i][k] * conic.au[j][k] * pt.u[k] / pt.w[k];
                }
                schur[(i, j)] = entry;
                schur[(j, i)] = entry;
            }
        }
        let v = DVector::from_fn(m, |i, _| matrixkit::frob_inner(&conic.mats[i], &h_c));
        let q1 = &conic.b + &v;
        let y1 = solve_dense(&schur, &q1)?;
        Some(Factors { s_inv, h_c, schur, v, y1 })
    }

    /// Solve one Newton system of the self-dual embedding for the given
    /// complementarity targets `(rc, rcu, rct)` and full residual RHS.
    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        conic: &Conic,
        pt: &Point,
        r_p: &DVector<f64>,
        r_d_x: &CMat,
        r_d_u: &DVector<f64>,
        r_g: f64,
        rc: &CMat,
        rcu: &DVector<f64>,
        rct: f64,
    ) -> Option<Direction> {
        let h = |mat: &CMat| -> CMat { matrixkit::hermitian_part(&(&pt.x * mat * &self.s_inv)) };
        let sym_rc_sinv = matrixkit::hermitian_part(&(rc * &self.s_inv));

        // Psi collects the complementarity and dual-residual terms.
        let psi_x = &sym_rc_sinv + h(r_d_x);
        let psi_u = DVector::from_fn(conic.d, |k, _| {
            rcu[k] / pt.w[k] + pt.u[k] / pt.w[k] * r_d_u[k]
        });

        let q0 = DVector::from_fn(conic.m, |i, _| {
            -r_p[i]
                - matrixkit::frob_inner(&conic.mats[i], &psi_x)
                - conic.au[i].iter().zip(psi_u.iter()).map(|(a, p)| a * p).sum::<f64>()
        });
        let y0 = solve_dense(&self.schur, &q0)?;

        let c_psi = matrixkit::frob_inner(&conic.c_x, &psi_x);
        let c_hc = matrixkit::frob_inner(&conic.c_x, &self.h_c);
        let bv = &conic.b - &self.v;
        let denom = bv.dot(&self.y1) + c_hc + pt.kappa / pt.tau;
        if denom.abs() <= 1e-300 {
            return None;
        }
        let dtau = (-r_g - bv.dot(&y0) + c_psi + rct / pt.tau) / denom;
        let dy = &y0 + self.y1.scale(dtau);

        let ds = -r_d_x - conic.adjoint_x(&dy) + conic.c_x.scale(dtau);
        let dw = -r_d_u - conic.adjoint_u(&dy);
        let dx = &sym_rc_sinv - h(&ds);
        let du = DVector::from_fn(conic.d, |k, _| rcu[k] / pt.w[k] - pt.u[k] / pt.w[k] * dw[k]);
        let dkappa = (rct - pt.kappa * dtau) / pt.tau;

        Some(Direction {
            dx: matrixkit::hermitian_part(&dx),
            ds: matrixkit::hermitian_part(&ds),
            du,
            dw,
            dy,
            dtau,
            dkappa,
        })
    }
}

/// Solve the little dense symmetric system, Cholesky first, LU fallback.
fn solve_dense(m: &nalgebra::DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(chol) = nalgebra::Cholesky::new(m.clone()) {
        return Some(chol.solve(rhs));
    }
    if let Some(sol) = m.clone().lu().solve(rhs) {
        return Some(sol);
    }
    // Exactly singular (e.g. duplicated constraint rows): retry with a tiny
    // Tikhonov shift. The interior-point loop recomputes true residuals every
    // iteration, so the perturbation only bends one search direction.
    let shift = 1e-12 * (1.0 + m.diagonal().amax());
    let mut reg = m.clone();
    for i in 0..reg.nrows() {
        reg[(i, i)] += shift;
    }
    nalgebra::Cholesky::new(reg.clone())
        .map(|chol| chol.solve(rhs))
        .or_else(|| reg.lu().solve(rhs))
}

// ── Tests ────────────────────────────────────────────────────────────────
