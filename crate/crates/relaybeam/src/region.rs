//! Rate-energy region computation.
//!
//! Ties the lifted formulations, the interior-point solver, and the rank-1
//! recovery together into the three named boundary quantities — the
//! unconstrained best rate `R_max`, the largest harvestable energy `Q_max`,
//! and the rate under the binding energy constraint `R_EH` — plus a uniform
//! sweep of the boundary between them.

use crate::liftings::{self, Formulation, FormulationKind, LiftingError};
use crate::matrixkit::{self, CMat, CVec};
use crate::model::{self, Beamformer, ChannelSet, ModelError, SystemParams};
use crate::sdp::{self, SdpConstraint, SdpError, SdpProblem, Sense, SolveStatus};

/// Relative duality gap requested from the interior-point solver.
pub const SOLVE_TOL: f64 = 1e-8;

/// Fallback gap accepted when the full-precision solve stalls. Problems with
/// a hairline feasible interior (energy targets within a whisker of the
/// maximum) are solvable, just not to eight digits; recovered points still
/// pass the 1e-6 feasibility audit.
pub const RELAXED_TOL: f64 = 1e-6;

/// Gaussian draws for the randomized fallback when the dominant eigenpair
/// alone is not a faithful rank-1 candidate.
pub const RANK1_FALLBACK_DRAWS: usize = 200;

/// Fixed seed of the randomized fallback; a constant keeps every solve of the
/// same problem bit-identical.
pub const RANK1_FALLBACK_SEED: u64 = 0x5245_4749_4f4e_3031;

/// Relative shave applied to `Q_max` when asking for the rate at the energy
/// corner: the supremum itself sits on the boundary of feasibility.
pub const EH_TARGET_SHAVE: f64 = 1e-9;

/// Larger relative back-off retried when the shaved corner target still
/// reports infeasible.
pub const EH_BACKOFF: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RegionError {
    #[error("solver finished with status {}", .0.as_str())]
    NotOptimal(SolveStatus),
    #[error("grid needs at least two points, got {0}")]
    InvalidGrid(usize),
    #[error("degenerate solution: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error(transparent)]
    Lifting(#[from] LiftingError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Matrix(#[from] matrixkit::MatrixError),
}

// ── Result types ─────────────────────────────────────────────────────────

/// Which pipeline produced a boundary point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PointSource {
    /// The optimization pipeline, tagged with the lifting it used.
    Sdp(FormulationKind),
    /// A closed-form construction.
    ClosedForm,
    /// A fixed heuristic design, by name.
    Baseline(String),
}

impl PointSource {
    pub fn label(&self) -> &str {
        match self {
            PointSource::Sdp(FormulationKind::Direct) => "sdp_direct",
            PointSource::Sdp(FormulationKind::Reduced) => "sdp_reduced",
            PointSource::Sdp(FormulationKind::Combined) => "sdp_combined",
            PointSource::ClosedForm => "closed_form",
            PointSource::Baseline(name) => name,
        }
    }
}

/// One point of the rate-energy boundary.
#[derive(Debug, Clone)]
pub struct RatePoint {
    /// Energy target the point was solved for (watts).
    pub q_watts: f64,
    /// Achieved rate of the recovered beamformer (bits per channel use).
    pub rate_bits: f64,
    pub beamformer: Beamformer,
    pub source: PointSource,
    /// Relative objective loss of the rank-1 candidate against the bound.
    pub rank1_gap: f64,
    /// Interior-point iterations spent on this point.
    pub iterations: u32,
}

/// A grid point the solver could not certify; the sweep records it and moves
/// on.
#[derive(Debug, Clone)]
pub struct PointFailure {
    pub q_watts: f64,
    pub error: RegionError,
}

impl PointFailure {
    /// Terse status label for tabular output: the solver status when there
    /// is one, a generic marker otherwise.
    pub fn status_label(&self) -> &'static str {
        match &self.error {
            RegionError::NotOptimal(st) => st.as_str(),
            _ => "error",
        }
    }
}

/// Output of one constrained-rate solve.
#[derive(Debug, Clone)]
pub struct MasterSolve {
    pub kind: FormulationKind,
    /// Relaxation optimum of the equivalent-SINR objective.
    pub sinr_bound: f64,
    /// Rate implied by the relaxation bound (not necessarily attained).
    pub rate_bound: f64,
    pub beamformer: Beamformer,
    /// Rate actually achieved by the recovered beamformer.
    pub rate_bits: f64,
    pub rank1_gap: f64,
    pub iterations: u32,
}

/// Output of the energy-maximization solve.
#[derive(Debug, Clone)]
pub struct QmaxSolve {
    pub q_max_watts: f64,
    pub beamformer: Beamformer,
    /// Rate delivered by the energy-optimal beamformer.
    pub rate_bits: f64,
    pub rank1_gap: f64,
    pub iterations: u32,
}

/// The swept boundary with its three corner values.
#[derive(Debug, Clone)]
pub struct RegionResult {
    pub points: Vec<RatePoint>,
    pub failures: Vec<PointFailure>,
    pub r_max: f64,
    pub q_max: f64,
    pub r_eh: f64,
    /// Relative back-off from `Q_max` that the corner point needed.
    pub eh_backoff: f64,
}

// ── Master solve ─────────────────────────────────────────────────────────

/// Formulation used when the caller does not pin one: the reduced lifting
/// once its variable count undercuts the full `K^2`.
pub fn default_formulation(k: usize) -> FormulationKind {
    if k > 4 {
        FormulationKind::Reduced
    } else {
        FormulationKind::Direct
    }
}

fn build_formulation(
    ch: &ChannelSet,
    p: &SystemParams,
    kind: FormulationKind,
) -> Result<Formulation, LiftingError> {
    match kind {
        FormulationKind::Direct => liftings::build_direct(&liftings::lift(ch, p), p),
        FormulationKind::Reduced => liftings::build_reduced(&liftings::reduced_basis(ch)?, p),
        FormulationKind::Combined => liftings::build_combined(&liftings::reduced_basis(ch)?, p),
    }
}

/// Solve the constrained-rate problem for the given parameters (the energy
/// target being part of `p`) and recover a feasible beamformer.
///
/// The dominant-eigenpair extraction is tried first; when it cannot certify a
/// faithful rank-1 candidate the randomized rounding takes over with a fixed
/// seed, so the whole pipeline stays deterministic. An unreachable energy
/// target surfaces as `NotOptimal(Infeasible)`.
pub fn solve_master(
    ch: &ChannelSet,
    p: &SystemParams,
    form: Option<FormulationKind>,
) -> Result<MasterSolve, RegionError> {
    let kind = form.unwrap_or_else(|| default_formulation(ch.k()));
    let f = build_formulation(ch, p, kind)?;
    let mut sol = sdp::solve(&f.problem, SOLVE_TOL)?;
    if sol.status == SolveStatus::NumericalFailure {
        sol = sdp::solve(&f.problem, RELAXED_TOL)?;
    }
    if sol.status != SolveStatus::Optimal {
        return Err(RegionError::NotOptimal(sol.status));
    }
    let ext = match sdp::extract_rank1(&sol, &f.problem) {
        Ok(ext) => ext,
        Err(SdpError::Rank1Gap { .. }) => {
            sdp::randomized_rank1(&sol, &f.problem, RANK1_FALLBACK_DRAWS, RANK1_FALLBACK_SEED)?
        }
        Err(e) => return Err(e.into()),
    };
    let beamformer = liftings::recover_beamformer(&f, &ext.beta, ext.b2)?;
    let rate_bits = model::capacity(&beamformer, ch, p)?;
    Ok(MasterSolve {
        kind,
        sinr_bound: sol.objective,
        rate_bound: 0.5 * (1.0 + sol.objective.max(0.0)).log2(),
        beamformer,
        rate_bits,
        rank1_gap: ext.rank1_gap,
        iterations: sol.iterations,
    })
}

// ── Corner points ────────────────────────────────────────────────────────

/// Best unconstrained rate: the master problem with the energy row dropped.
pub fn compute_rmax(
    ch: &ChannelSet,
    p: &SystemParams,
    form: Option<FormulationKind>,
) -> Result<MasterSolve, RegionError> {
    solve_master(ch, &p.with_q_target(0.0), form)
}

/// Largest harvestable energy: maximize the harvest under the power budget
/// alone. This is a single-constraint problem in the unscaled lifting, so
/// the optimizer returns (numerically) a rank-1 extreme point; the dominant
/// eigenpair rescaled onto the power boundary is the energy-optimal design.
pub fn compute_qmax(ch: &ChannelSet, p: &SystemParams) -> Result<QmaxSolve, RegionError> {
    let ld = liftings::lift(ch, p);
    let t = ld.eh_matrix(p);
    let prob = SdpProblem {
        dim: t.nrows(),
        objective: t.clone(),
        constraints: vec![SdpConstraint {
            matrix: ld.sigma.clone(),
            coef_b2: 0.0,
            coef_c2: 0.0,
            sense: Sense::Le,
            rhs: p.p_r_max,
        }],
    };
    let sol = sdp::solve(&prob, SOLVE_TOL)?;
    if sol.status != SolveStatus::Optimal {
        return Err(RegionError::NotOptimal(sol.status));
    }
    let (vals, vecs) = matrixkit::hermitian_eig(&sol.x)?;
    let lambda1 = vals.first().copied().unwrap_or(0.0).max(0.0);
    let mut beta: CVec = vecs.column(0).into_owned().scale(lambda1.sqrt());
    let pow = quad(&ld.sigma, &beta);
    if !(pow > 0.0) {
        return Err(RegionError::Degenerate(format!(
            "energy-optimal direction carries no relay power (got {pow:.3e})"
        )));
    }
    beta = beta.scale((p.p_r_max / pow).sqrt());
    let q_achieved = quad(&t, &beta);
    let k = ch.k();
    let beamformer = Beamformer::new(matrixkit::unvec(&beta, k, k)?)?;
    let rate_bits = model::capacity(&beamformer, ch, p)?;
    let rank1_gap = if sol.objective > 0.0 {
        (1.0 - q_achieved / sol.objective).max(0.0)
    } else {
        0.0
    };
    Ok(QmaxSolve {
        q_max_watts: q_achieved,
        beamformer,
        rate_bits,
        rank1_gap,
        iterations: sol.iterations,
    })
}

/// Rate at the energy corner: the master problem with the target shaved just
/// inside `Q_max`, retried once with the larger back-off if the solver still
/// reports the corner infeasible. Returns the point and the back-off used.
pub fn compute_r_eh(
    ch: &ChannelSet,
    p: &SystemParams,
    q_max: f64,
    form: Option<FormulationKind>,
) -> Result<(RatePoint, f64), RegionError> {
    let mut last = RegionError::NotOptimal(SolveStatus::Infeasible);
    for &backoff in &[EH_TARGET_SHAVE, EH_BACKOFF] {
        let q = q_max * (1.0 - backoff);
        match solve_master(ch, &p.with_q_target(q), form) {
            Ok(ms) => return Ok((rate_point(q, &ms), backoff)),
            Err(RegionError::NotOptimal(st)) => last = RegionError::NotOptimal(st),
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

// ── Sweep ────────────────────────────────────────────────────────────────

/// Sweep the boundary on a uniform energy grid from 0 to `Q_max`.
///
/// The first grid point is the unconstrained `R_max` solve and the last is
/// the backed-off energy corner; both must succeed, while interior failures
/// are recorded and skipped.
pub fn region_sweep(
    ch: &ChannelSet,
    p: &SystemParams,
    n_grid: usize,
    form: Option<FormulationKind>,
) -> Result<RegionResult, RegionError> {
    if n_grid < 2 {
        return Err(RegionError::InvalidGrid(n_grid));
    }
    let qm = compute_qmax(ch, p)?;
    let q_max = qm.q_max_watts;

    let mut points = Vec::with_capacity(n_grid);
    let mut failures = Vec::new();

    let r0 = solve_master(ch, &p.with_q_target(0.0), form)?;
    let r_max = r0.rate_bits;
    points.push(rate_point(0.0, &r0));

    for i in 1..n_grid - 1 {
        let q = q_max * i as f64 / (n_grid - 1) as f64;
        match solve_master(ch, &p.with_q_target(q), form) {
            Ok(ms) => points.push(rate_point(q, &ms)),
            Err(e) => failures.push(PointFailure { q_watts: q, error: e }),
        }
    }

    let (corner, eh_backoff) = compute_r_eh(ch, p, q_max, form)?;
    let r_eh = corner.rate_bits;
    points.push(corner);

    Ok(RegionResult { points, failures, r_max, q_max, r_eh, eh_backoff })
}

// ── Helpers ──────────────────────────────────────────────────────────────

fn rate_point(q: f64, ms: &MasterSolve) -> RatePoint {
    RatePoint {
        q_watts: q,
        rate_bits: ms.rate_bits,
        beamformer: ms.beamformer.clone(),
        source: PointSource::Sdp(ms.kind),
        rank1_gap: ms.rank1_gap,
        iterations: ms.iterations,
    }
}

fn quad(m: &CMat, v: &CVec) -> f64 {
    (v.adjoint() * m * v)[(0, 0)].re
}

// ── Tests ────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closedform;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(k: usize) -> SystemParams {
        SystemParams::new(k, 3.98, 1.5, 10.0, 1.0, 1.0, 0.0, 0.99).unwrap()
    }

    fn channels(k: usize, seed: u64) -> ChannelSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        model::sample_channels(&mut rng, k).unwrap()
    }

    #[test]
    fn master_recovers_tight_feasible_beamformer() {
        let p = params(3);
        let ch = channels(3, 11);
        let ms = solve_master(&ch, &p, None).unwrap();
        assert_eq!(ms.kind, FormulationKind::Direct);
        assert!(ms.rank1_gap <= 1e-6, "gap {}", ms.rank1_gap);
        assert!(
            (ms.rate_bits - ms.rate_bound).abs() <= 1e-4 * ms.rate_bound.max(1.0),
            "rate {} vs bound {}",
            ms.rate_bits,
            ms.rate_bound,
        );
        let pow = model::relay_power(&ms.beamformer, &ch, &p).unwrap();
        assert!(pow <= p.p_r_max * (1.0 + 1e-6), "power {pow}");
    }

    #[test]
    fn formulation_rule_switches_at_large_k() {
        assert_eq!(default_formulation(2), FormulationKind::Direct);
        assert_eq!(default_formulation(4), FormulationKind::Direct);
        assert_eq!(default_formulation(5), FormulationKind::Reduced);
        let p = params(5);
        let ch = channels(5, 3);
        let ms = solve_master(&ch, &p, None).unwrap();
        assert_eq!(ms.kind, FormulationKind::Reduced);
    }

    #[test]
    fn formulations_agree_on_the_bound() {
        let p = params(3);
        let ch = channels(3, 21);
        let direct = solve_master(&ch, &p, Some(FormulationKind::Direct)).unwrap();
        let reduced = solve_master(&ch, &p, Some(FormulationKind::Reduced)).unwrap();
        let combined = solve_master(&ch, &p, Some(FormulationKind::Combined)).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(1e-12);
        assert!(rel(direct.sinr_bound, reduced.sinr_bound) <= 1e-5);
        assert!(rel(direct.sinr_bound, combined.sinr_bound) <= 1e-5);
    }

    #[test]
    fn qmax_agrees_with_closed_form_and_sits_on_power_boundary() {
        let p = params(3);
        let ch = channels(3, 7);
        let qm = compute_qmax(&ch, &p).unwrap();
        let cf = closedform::qmax_closed(&ch, &p).unwrap();
        let rel = (qm.q_max_watts - cf.q_max_watts).abs() / cf.q_max_watts;
        assert!(rel <= 1e-6, "sdp {} vs closed {}", qm.q_max_watts, cf.q_max_watts);
        let pow = model::relay_power(&qm.beamformer, &ch, &p).unwrap();
        assert!((pow - p.p_r_max).abs() <= 1e-8 * p.p_r_max, "power {pow}");
        assert!(qm.rank1_gap <= 1e-6, "gap {}", qm.rank1_gap);
        let harvested = model::harvested_energy(&qm.beamformer, &ch, &p).unwrap();
        assert!((harvested - qm.q_max_watts).abs() <= 1e-8 * qm.q_max_watts);
    }

    #[test]
    fn unreachable_energy_target_reports_infeasible() {
        let p = params(3);
        let ch = channels(3, 5);
        let q_max = compute_qmax(&ch, &p).unwrap().q_max_watts;
        let err = solve_master(&ch, &p.with_q_target(2.0 * q_max), None).unwrap_err();
        match err {
            RegionError::NotOptimal(st) => assert_eq!(st, SolveStatus::Infeasible),
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn binding_energy_target_is_met() {
        let p = params(3);
        let ch = channels(3, 13);
        let q_max = compute_qmax(&ch, &p).unwrap().q_max_watts;
        let rmax = compute_rmax(&ch, &p, None).unwrap().rate_bits;
        let q = 0.9 * q_max;
        let ms = solve_master(&ch, &p.with_q_target(q), None).unwrap();
        let harvested = model::harvested_energy(&ms.beamformer, &ch, &p).unwrap();
        assert!(harvested >= q * (1.0 - 1e-5), "harvested {harvested} target {q}");
        assert!(ms.rate_bits <= rmax * (1.0 + 1e-6));
    }

    #[test]
    fn sweep_is_monotone_with_matching_corners() {
        let p = params(2);
        let ch = channels(2, 17);
        let region = region_sweep(&ch, &p, 6, None).unwrap();
        assert_eq!(region.points.len(), 6);
        assert!(region.failures.is_empty(), "failures: {:?}", region.failures);
        assert_eq!(region.points[0].rate_bits, region.r_max);
        assert_eq!(region.points.last().unwrap().rate_bits, region.r_eh);
        assert!(region.eh_backoff <= EH_BACKOFF);
        for pair in region.points.windows(2) {
            assert!(pair[0].q_watts < pair[1].q_watts);
            assert!(
                pair[1].rate_bits <= pair[0].rate_bits * (1.0 + 1e-5) + 1e-9,
                "rate rose from {} to {}",
                pair[0].rate_bits,
                pair[1].rate_bits,
            );
        }
        assert!(region.r_eh <= region.r_max * (1.0 + 1e-9));
        for pt in &region.points {
            let pow = model::relay_power(&pt.beamformer, &ch, &p).unwrap();
            assert!(pow <= p.p_r_max * (1.0 + 1e-5));
            let harvested = model::harvested_energy(&pt.beamformer, &ch, &p).unwrap();
            assert!(harvested >= pt.q_watts * (1.0 - 1e-5) - 1e-9);
        }
    }

    #[test]
    fn grid_must_have_two_points() {
        let p = params(2);
        let ch = channels(2, 1);
        assert!(matches!(
            region_sweep(&ch, &p, 1, None),
            Err(RegionError::InvalidGrid(1))
        ));
    }
}
