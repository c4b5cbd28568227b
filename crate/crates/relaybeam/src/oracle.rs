//! Brute-force reference search and feasibility auditing.
//!
//! The searcher knows nothing about liftings or convexity: it throws random
//! beamformers at the power sphere, keeps the best feasible one, and polishes
//! it with a shrinking random walk. Its value is exactly that ignorance — any
//! disagreement with the optimization pipeline (a sample beating the bound,
//! or the pipeline missing rates the search finds) indicts the pipeline, not
//! the search.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::matrixkit::CMat;
use crate::model::{self, Beamformer, ChannelSet, ModelError, SymmetrizabilityRatio, SystemParams};

/// Random-walk steps spent polishing the best raw sample.
pub const POLISH_STEPS: usize = 400;

/// Initial relative step size of the polish walk.
pub const POLISH_STEP0: f64 = 0.5;

/// Step growth on an accepted polish move.
pub const POLISH_GROW: f64 = 1.6;

/// Step shrink on a rejected polish move. Paired with [`POLISH_GROW`], the
/// step is stationary at a success rate of about one in five.
pub const POLISH_SHRINK: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("no feasible beamformer among {tried} random samples")]
    NoFeasibleSample { tried: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Outcome of a random feasible search.
#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Best rate after polishing.
    pub rate_bits: f64,
    pub beamformer: Beamformer,
    /// Best rate among the raw samples, before polishing.
    pub raw_rate_bits: f64,
    /// How many raw samples were feasible.
    pub n_feasible: usize,
}

/// Feasibility audit of one beamformer. Slacks are relative to each
/// constraint's own scale and negative exactly when the constraint is
/// violated; a constraint that does not apply reports `+inf`.
#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub power_watts: f64,
    /// `(P_Rmax - power) / P_Rmax`.
    pub power_slack: f64,
    pub harvested_watts: f64,
    /// `(harvested - Q) / Q`, or `+inf` when no energy target is set.
    pub eh_slack: f64,
    pub ratio: SymmetrizabilityRatio,
    /// `epsilon - ratio`, or `+inf` when no jammer constrains the design.
    pub ratio_slack: f64,
    pub rate_bits: f64,
    /// True when every slack is at least `-tol`.
    pub pass: bool,
}

/// Sample random beamformers on the relay power sphere, keep the best one
/// satisfying the energy target and the jamming margin, then polish it with
/// a multiplicative random walk whose step grows on success and shrinks on
/// failure (a 1/5-success-style rule, so the step tracks the distance to
/// the optimum instead of collapsing after a run of bad draws).
pub fn random_feasible_search<R: Rng + ?Sized>(
    ch: &ChannelSet,
    p: &SystemParams,
    n_samples: usize,
    rng: &mut R,
) -> Result<OracleResult, OracleError> {
    let k = ch.k();
    let mut best: Option<(f64, Beamformer)> = None;
    let mut n_feasible = 0usize;
    for _ in 0..n_samples {
        let a = random_on_power_sphere(ch, p, k, rng)?;
        if !is_feasible(&a, ch, p)? {
            continue;
        }
        n_feasible += 1;
        let rate = model::capacity(&a, ch, p)?;
        if best.as_ref().is_none_or(|(b, _)| rate > *b) {
            best = Some((rate, a));
        }
    }
    let Some((raw_rate, mut a)) = best else {
        return Err(OracleError::NoFeasibleSample { tried: n_samples });
    };

    let mut rate = raw_rate;
    let mut step = POLISH_STEP0;
    for _ in 0..POLISH_STEPS {
        let scale = step * a.a.norm();
        let noise = gaussian_matrix(k, rng).scale(scale);
        let candidate = match rescale_to_budget(&(&a.a + noise), ch, p) {
            Ok(c) => c,
            Err(_) => {
                step *= POLISH_SHRINK;
                continue;
            }
        };
        let better = is_feasible(&candidate, ch, p)?
            && model::capacity(&candidate, ch, p)? > rate;
        if better {
            rate = model::capacity(&candidate, ch, p)?;
            a = candidate;
            step *= POLISH_GROW;
        } else {
            step *= POLISH_SHRINK;
        }
    }
    Ok(OracleResult { rate_bits: rate, beamformer: a, raw_rate_bits: raw_rate, n_feasible })
}

/// Audit a beamformer against all three constraints at tolerance `tol`.
pub fn check_feasibility(
    a: &Beamformer,
    ch: &ChannelSet,
    p: &SystemParams,
    tol: f64,
) -> Result<FeasibilityReport, ModelError> {
    let power_watts = model::relay_power(a, ch, p)?;
    let power_slack = (p.p_r_max - power_watts) / p.p_r_max;
    let harvested_watts = model::harvested_energy(a, ch, p)?;
    let eh_slack = if p.q_target > 0.0 {
        (harvested_watts - p.q_target) / p.q_target
    } else {
        f64::INFINITY
    };
    let ratio = model::symmetrizability_ratio(a, ch, p)?;
    let ratio_slack = if p.p_j > 0.0 {
        match ratio {
            SymmetrizabilityRatio::Finite(r) => p.epsilon - r,
            SymmetrizabilityRatio::Infinite => f64::NEG_INFINITY,
            // Both paths dead: zero jam power trivially sits inside any
            // margin.
            SymmetrizabilityRatio::Undefined => f64::INFINITY,
        }
    } else {
        f64::INFINITY
    };
    let rate_bits = model::capacity(a, ch, p)?;
    let pass = power_slack >= -tol && eh_slack >= -tol && ratio_slack >= -tol;
    Ok(FeasibilityReport {
        power_watts,
        power_slack,
        harvested_watts,
        eh_slack,
        ratio,
        ratio_slack,
        rate_bits,
        pass,
    })
}

// ── Helpers ──────────────────────────────────────────────────────────────

fn gaussian_matrix<R: Rng + ?Sized>(k: usize, rng: &mut R) -> CMat {
    CMat::from_fn(k, k, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

fn random_on_power_sphere<R: Rng + ?Sized>(
    ch: &ChannelSet,
    p: &SystemParams,
    k: usize,
    rng: &mut R,
) -> Result<Beamformer, ModelError> {
    rescale_to_budget(&gaussian_matrix(k, rng), ch, p)
}

/// Scale a raw matrix so the relay spends exactly `P_Rmax`.
fn rescale_to_budget(
    raw: &CMat,
    ch: &ChannelSet,
    p: &SystemParams,
) -> Result<Beamformer, ModelError> {
    let a = Beamformer::new(raw.clone())?;
    let pow = model::relay_power(&a, ch, p)?;
    // The noise term makes the power positive for any nonzero matrix.
    Beamformer::new(raw.scale((p.p_r_max / pow).sqrt()))
}

/// The constraint set of the search: energy target met and jamming margin
/// held (power always holds by construction).
fn is_feasible(a: &Beamformer, ch: &ChannelSet, p: &SystemParams) -> Result<bool, ModelError> {
    if p.q_target > 0.0 && model::harvested_energy(a, ch, p)? < p.q_target {
        return Ok(false);
    }
    if p.p_j > 0.0 {
        match model::symmetrizability_ratio(a, ch, p)? {
            SymmetrizabilityRatio::Finite(r) if r <= p.epsilon => {}
            SymmetrizabilityRatio::Undefined => {}
            _ => return Ok(false),
        }
    }
    Ok(true)
}

// ── Tests ────────────────────────────────────────────────────────────────
