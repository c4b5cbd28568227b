//! Fixed relay designs used as comparison references.
//!
//! Three closed-form heuristics — match-and-forward, jammer zero-forcing,
//! and direct relaying — plus the jammer-oblivious optimal design. Each
//! returns a beamformer scaled to spend the full relay power budget; rates
//! are always evaluated afterwards under the true system parameters, so a
//! design built while ignoring the jammer still pays for that choice.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::liftings::FormulationKind;
use crate::matrixkit::{self, CMat, CVec};
use crate::model::{Beamformer, ChannelSet, ModelError, SystemParams};
use crate::region::{self, RegionError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BaselineError {
    #[error("channel {0} is numerically zero, the design is undefined")]
    DegenerateChannel(&'static str),
    #[error("zero-forcing needs a direction ignored by the jammer; none exists for K = {0}")]
    NoNullDirection(usize),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Matrix(#[from] matrixkit::MatrixError),
}

/// Match-and-forward: beamform the relay array onto the source channel and
/// retransmit towards the destination, `A = mu * conj(h_D) h_S^H`.
///
/// `mu` is chosen so the relay spends exactly `P_Rmax` against the full
/// input covariance (source, jammer leakage through `h_S^H h_J`, noise).
pub fn pmf(ch: &ChannelSet, p: &SystemParams) -> Result<Beamformer, BaselineError> {
    let hs2 = ch.h_s.norm_squared();
    let hd2 = ch.h_d.norm_squared();
    if hs2 <= 0.0 {
        return Err(BaselineError::DegenerateChannel("h_s"));
    }
    if hd2 <= 0.0 {
        return Err(BaselineError::DegenerateChannel("h_d"));
    }
    let leak = ch.h_s.dotc(&ch.h_j).norm_sqr();
    let denom = hd2 * (hs2 * hs2 * p.p_s + leak * p.p_j + hs2 * p.sigma_r2);
    let mu = (p.p_r_max / denom).sqrt();
    let a = (ch.h_d.conjugate() * ch.h_s.adjoint()).scale(mu);
    Ok(Beamformer::new(a)?)
}

/// Jammer zero-forcing: every relay antenna retransmits the same projection
/// `h_perp^T r` of the received vector, with `h_perp` a unit direction the
/// jammer cannot excite (`h_perp^T h_J = 0`) drawn uniformly at random from
/// that subspace.
///
/// `tau` spends exactly `P_Rmax`; the relayed jammer power is exactly zero,
/// so the design trades beamforming gain for unconditional immunity.
pub fn zf<R: Rng + ?Sized>(
    ch: &ChannelSet,
    p: &SystemParams,
    rng: &mut R,
) -> Result<Beamformer, BaselineError> {
    let k = ch.k();
    // Directions w with h_J^T w = 0 are the null space of the rank-1 Gram
    // matrix of conj(h_J).
    let hj_conj = ch.h_j.conjugate();
    let gram = &hj_conj * hj_conj.adjoint();
    let basis = matrixkit::null_space_basis(&gram, 1e-12)?;
    if basis.ncols() == 0 {
        return Err(BaselineError::NoNullDirection(k));
    }
    let coeffs = CVec::from_fn(basis.ncols(), |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    });
    let dir = &basis * coeffs;
    let norm = dir.norm();
    if norm <= 0.0 {
        return Err(BaselineError::NoNullDirection(k));
    }
    let h_perp = dir.unscale(norm);
    let gain = ch.h_s.transpose() * &h_perp;
    let gain2 = gain[(0, 0)].norm_sqr();
    let tau = (p.p_r_max / (k as f64 * (gain2 * p.p_s + p.sigma_r2))).sqrt();
    let ones = CVec::from_element(k, Complex64::new(1.0, 0.0));
    let a = (ones * h_perp.transpose()).scale(tau);
    Ok(Beamformer::new(a)?)
}

/// Direct relaying: forward the received vector unshaped, `A = xi * I`, with
/// `xi` spending exactly `P_Rmax`.
pub fn dr(ch: &ChannelSet, p: &SystemParams) -> Result<Beamformer, BaselineError> {
    let k = ch.k();
    let denom = ch.h_s.norm_squared() * p.p_s + ch.h_j.norm_squared() * p.p_j
        + p.sigma_r2 * k as f64;
    let xi = (p.p_r_max / denom).sqrt();
    let a = CMat::identity(k, k).scale(xi);
    Ok(Beamformer::new(a)?)
}

/// The optimal design of a network that pretends the jammer is absent:
/// the full optimization pipeline run at `P_J = 0` (energy target dropped
/// too — the jammer-oblivious designer also ignores harvesting demands on
/// this reference). Evaluate the result under the true parameters to see
/// what the pretence costs.
pub fn no_jammer_optimal(
    ch: &ChannelSet,
    p: &SystemParams,
    form: Option<FormulationKind>,
) -> Result<Beamformer, BaselineError> {
    let oblivious = p.with_p_j(0.0).with_q_target(0.0);
    let ms = region::solve_master(ch, &oblivious, form)?;
    Ok(ms.beamformer)
}

// ── Tests ────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{self, SymmetrizabilityRatio};
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
    fn every_heuristic_spends_the_full_budget() {
        let p = params(3);
        let ch = channels(3, 42);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for a in [
            pmf(&ch, &p).unwrap(),
            zf(&ch, &p, &mut rng).unwrap(),
            dr(&ch, &p).unwrap(),
        ] {
            let pow = model::relay_power(&a, &ch, &p).unwrap();
            assert!(
                (pow - p.p_r_max).abs() <= 1e-8 * p.p_r_max,
                "power {pow} vs budget {}",
                p.p_r_max,
            );
        }
    }

    #[test]
    fn zero_forcing_erases_the_jammer() {
        let p = params(4);
        let ch = channels(4, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = zf(&ch, &p, &mut rng).unwrap();
        let leak = (&a.a * &ch.h_j).norm_squared();
        assert!(leak <= 1e-20, "leak {leak}");
        match model::symmetrizability_ratio(&a, &ch, &p).unwrap() {
            SymmetrizabilityRatio::Finite(r) => assert!(r <= 1e-18),
            other => panic!("unexpected ratio {other:?}"),
        }
    }

    #[test]
    fn zero_forcing_needs_at_least_two_antennas() {
        let p = params(1);
        let ch = channels(1, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            zf(&ch, &p, &mut rng),
            Err(BaselineError::NoNullDirection(1))
        ));
    }

    #[test]
    fn optimized_design_dominates_the_heuristics() {
        let p = params(3);
        let ch = channels(3, 27);
        let best = region::solve_master(&ch, &p, None).unwrap().rate_bits;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (name, a) in [
            ("pmf", pmf(&ch, &p).unwrap()),
            ("zf", zf(&ch, &p, &mut rng).unwrap()),
            ("dr", dr(&ch, &p).unwrap()),
            ("no_jammer", no_jammer_optimal(&ch, &p, None).unwrap()),
        ] {
            let rate = model::capacity(&a, &ch, &p).unwrap();
            assert!(
                rate <= best * (1.0 + 1e-6),
                "{name} rate {rate} beats optimized {best}",
            );
        }
    }

    #[test]
    fn direct_relaying_collapses_under_a_strong_jammer() {
        let ch = channels(3, 8);
        let quiet = params(3).with_p_j(0.0);
        let loud = quiet.with_p_j(1e6);
        let rate_quiet = model::capacity(&dr(&ch, &quiet).unwrap(), &ch, &quiet).unwrap();
        let rate_loud = model::capacity(&dr(&ch, &loud).unwrap(), &ch, &loud).unwrap();
        assert!(rate_quiet > 0.01, "quiet rate {rate_quiet}");
        assert!(rate_loud <= 0.05 * rate_quiet, "loud rate {rate_loud}");
    }

    #[test]
    fn single_antenna_direct_relaying_has_the_hand_value() {
        // K = 1, unit channels: xi^2 = P_Rmax / (P_S + P_J + sigma_r^2).
        let p = SystemParams::new(1, 2.0, 1.0, 6.0, 1.0, 1.0, 0.0, 0.99).unwrap();
        let one = CVec::from_element(1, Complex64::new(1.0, 0.0));
        let ch = ChannelSet::new(one.clone(), one.clone(), one.clone(), one).unwrap();
        let a = dr(&ch, &p).unwrap();
        let xi = a.a[(0, 0)].re;
        assert!((xi - (6.0f64 / 4.0).sqrt()).abs() <= 1e-12, "xi {xi}");
    }

    #[test]
    fn matched_forwarding_ignores_an_orthogonal_jammer() {
        // h_S and h_J orthogonal: the jammer leaks nothing into the matched
        // projection, so the relayed jam power is exactly zero.
        let p = params(2);
        let e1 = CVec::from_column_slice(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let e2 = CVec::from_column_slice(&[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        let ch = ChannelSet::new(e1.clone(), e2, e1.clone(), e1).unwrap();
        let a = pmf(&ch, &p).unwrap();
        let leak = (&a.a * &ch.h_j).norm_squared();
        assert!(leak <= 1e-24, "leak {leak}");
        let pow = model::relay_power(&a, &ch, &p).unwrap();
        assert!((pow - p.p_r_max).abs() <= 1e-10 * p.p_r_max);
    }
}
