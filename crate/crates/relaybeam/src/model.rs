//! Physical system model: parameters, random channel realizations, and
//! direct evaluation of every quantity that defines the two-hop relay link —
//! transmit power, SINR, harvested energy, the jammer-to-signal
//! symmetrizability ratio, and the resulting capacity.
//!
//! Everything here is written against the raw beamforming matrix `A`; the
//! lifted/vectorized reformulations in [`crate::liftings`] are checked
//! against these evaluations, never the other way around.

use crate::matrixkit::{CMat, CVec};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Scalar system parameters, all in linear units (watts, not dB).
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Antenna count K at the relay (channels all have length K).
    pub k: usize,
    /// Source transmit power P_S in watts.
    pub p_s: f64,
    /// Jammer transmit power P_J in watts (0 disables the jammer).
    pub p_j: f64,
    /// Relay transmit power budget P_R,max in watts.
    pub p_r_max: f64,
    /// Relay-side noise variance.
    pub sigma_r2: f64,
    /// Destination-side noise variance.
    pub sigma_d2: f64,
    /// Energy-harvesting threshold Q in watts (0 disables the constraint).
    pub q_target: f64,
    /// Symmetrizability margin: the jammer-to-signal power ratio after
    /// relaying is constrained to at most `epsilon`, which must lie in [0,1).
    pub epsilon: f64,
}

/// Errors raised when constructing or evaluating model quantities.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid parameter {name}: {value} ({reason})")]
    InvalidParam { name: &'static str, value: f64, reason: &'static str },
    #[error("antenna count must be at least 1, got {0}")]
    InvalidAntennaCount(usize),
    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    DimensionMismatch { what: &'static str, got: usize, expected: usize },
}

impl SystemParams {
    /// Validate all field constraints and return the parameter set.
    pub fn new(
        k: usize,
        p_s: f64,
        p_j: f64,
        p_r_max: f64,
        sigma_r2: f64,
        sigma_d2: f64,
        q_target: f64,
        epsilon: f64,
    ) -> Result<Self, ModelError> {
        if k < 1 {
            return Err(ModelError::InvalidAntennaCount(k));
        }
        let positive = [
            ("p_s", p_s),
            ("p_r_max", p_r_max),
            ("sigma_r2", sigma_r2),
            ("sigma_d2", sigma_d2),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ModelError::InvalidParam { name, value, reason: "must be > 0" });
            }
        }
        if !(p_j >= 0.0) || !p_j.is_finite() {
            return Err(ModelError::InvalidParam { name: "p_j", value: p_j, reason: "must be >= 0" });
        }
        if !(q_target >= 0.0) || !q_target.is_finite() {
            return Err(ModelError::InvalidParam {
                name: "q_target",
                value: q_target,
                reason: "must be >= 0",
            });
        }
        if !(0.0..1.0).contains(&epsilon) {
            return Err(ModelError::InvalidParam {
                name: "epsilon",
                value: epsilon,
                reason: "must lie in [0, 1)",
            });
        }
        Ok(Self { k, p_s, p_j, p_r_max, sigma_r2, sigma_d2, q_target, epsilon })
    }

    /// Copy with a different EH threshold (used by region sweeps).
    pub fn with_q_target(&self, q_target: f64) -> Self {
        Self { q_target, ..self.clone() }
    }

    /// Copy with a different jammer power (used by the no-jammer baseline).
    pub fn with_p_j(&self, p_j: f64) -> Self {
        Self { p_j, ..self.clone() }
    }
}

/// Convert decibel-watts to watts.
pub fn dbw_to_watts(dbw: f64) -> f64 {
    10f64.powf(dbw / 10.0)
}

/// One static realization of the four channels seen by the relay (source,
/// jammer, destination, energy harvester), each of length K.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub h_s: CVec,
    pub h_j: CVec,
    pub h_d: CVec,
    pub h_e: CVec,
}

impl ChannelSet {
    /// Build from explicit vectors, checking that all lengths agree.
    pub fn new(h_s: CVec, h_j: CVec, h_d: CVec, h_e: CVec) -> Result<Self, ModelError> {
        let k = h_s.len();
        for (what, v) in [("h_j", &h_j), ("h_d", &h_d), ("h_e", &h_e)] {
            if v.len() != k {
                return Err(ModelError::DimensionMismatch { what, got: v.len(), expected: k });
            }
        }
        Ok(Self { h_s, h_j, h_d, h_e })
    }

    /// Antenna count K.
    pub fn k(&self) -> usize {
        self.h_s.len()
    }
}

/// Relay weighting matrix `A` (K x K): the relay retransmits `A y_R`.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    pub a: CMat,
}

impl Beamformer {
    /// Build from a square matrix.
    pub fn new(a: CMat) -> Result<Self, ModelError> {
        if a.nrows() != a.ncols() {
            return Err(ModelError::DimensionMismatch {
                what: "beamformer",
                got: a.ncols(),
                expected: a.nrows(),
            });
        }
        Ok(Self { a })
    }

    pub fn k(&self) -> usize {
        self.a.nrows()
    }
}

/// Draw one circularly-symmetric complex Gaussian vector of length `k`,
/// each entry CN(0,1): real and imaginary parts independent N(0, 1/2).
fn sample_cn_vector<R: Rng>(rng: &mut R, k: usize) -> CVec {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CVec::from_fn(k, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    })
}

/// Sample all four channels i.i.d. CN(0,1); deterministic for a given
/// generator state.
pub fn sample_channels<R: Rng>(rng: &mut R, k: usize) -> Result<ChannelSet, ModelError> {
    if k < 1 {
        return Err(ModelError::InvalidAntennaCount(k));
    }
    let h_s = sample_cn_vector(rng, k);
    let h_j = sample_cn_vector(rng, k);
    let h_d = sample_cn_vector(rng, k);
    let h_e = sample_cn_vector(rng, k);
    Ok(ChannelSet { h_s, h_j, h_d, h_e })
}

fn check_dims(a: &Beamformer, ch: &ChannelSet, p: &SystemParams) -> Result<(), ModelError> {
    if ch.k() != p.k {
        return Err(ModelError::DimensionMismatch { what: "channels", got: ch.k(), expected: p.k });
    }
    if a.k() != p.k {
        return Err(ModelError::DimensionMismatch { what: "beamformer", got: a.k(), expected: p.k });
    }
    Ok(())
}

/// Average power transmitted by the relay:
/// `||A h_S||^2 P_S + ||A h_J||^2 P_J + sigma_r2 * tr(A A^H)`.
pub fn relay_power(a: &Beamformer, ch: &ChannelSet, p: &SystemParams) -> Result<f64, ModelError> {
    check_dims(a, ch, p)?;
    let signal = (&a.a * &ch.h_s).norm_squared();
    let jammer = (&a.a * &ch.h_j).norm_squared();
    let noise = a.a.norm_squared();
    Ok(signal * p.p_s + jammer * p.p_j + p.sigma_r2 * noise)
}

/// Received signal-to-interference-plus-noise ratio at the destination:
/// `|h_D^T A h_S|^2 P_S / (|h_D^T A h_J|^2 P_J + ||h_D^T A||^2 sigma_r2 + sigma_d2)`.
///
/// The transpose form `h_D^T` (not conjugated) is used consistently for the
/// second-hop combining.
pub fn sinr(a: &Beamformer, ch: &ChannelSet, p: &SystemParams) -> Result<f64, ModelError> {
    check_dims(a, ch, p)?;
    let row = ch.h_d.transpose() * &a.a; // h_D^T A, a 1 x K row
    let signal = (&row * &ch.h_s)[(0, 0)].norm_sqr();
    let jammer = (&row * &ch.h_j)[(0, 0)].norm_sqr();
    let noise = row.norm_squared();
    Ok(signal * p.p_s / (jammer * p.p_j + noise * p.sigma_r2 + p.sigma_d2))
}

/// Energy harvested per channel use at the EH node:
/// `|h_E^T A h_S|^2 P_S + |h_E^T A h_J|^2 P_J + ||h_E^T A||^2 sigma_r2`.
pub fn harvested_energy(
    a: &Beamformer,
    ch: &ChannelSet,
    p: &SystemParams,
) -> Result<f64, ModelError> {
    check_dims(a, ch, p)?;
    let row = ch.h_e.transpose() * &a.a;
    let signal = (&row * &ch.h_s)[(0, 0)].norm_sqr();
    let jammer = (&row * &ch.h_j)[(0, 0)].norm_sqr();
    let noise = row.norm_squared();
    Ok(signal * p.p_s + jammer * p.p_j + noise * p.sigma_r2)
}

/// Ratio of equivalent jammer power to equivalent signal power at the
/// destination. The channel behaves like an arbitrarily-varying channel
/// whose deterministic-coding capacity is zero when this reaches 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SymmetrizabilityRatio {
    /// Both powers positive (or jammer zero): the plain ratio.
    Finite(f64),
    /// Jammer path alive but signal path dead: capacity is zero.
    Infinite,
    /// Both paths dead (0/0): capacity is zero by convention.
    Undefined,
}

impl SymmetrizabilityRatio {
    /// True when the ratio forces capacity to zero (>= 1, infinite, or 0/0).
    pub fn kills_capacity(&self) -> bool {
        match *self {
            SymmetrizabilityRatio::Finite(r) => r >= 1.0,
            SymmetrizabilityRatio::Infinite | SymmetrizabilityRatio::Undefined => true,
        }
    }

    /// The finite value, if there is one.
    pub fn value(&self) -> Option<f64> {
        match *self {
            SymmetrizabilityRatio::Finite(r) => Some(r),
            _ => None,
        }
    }
}

/// `|h_D^T A h_J|^2 P_J / (|h_D^T A h_S|^2 P_S)`, with the 0-denominator
/// cases distinguished explicitly.
pub fn symmetrizability_ratio(
    a: &Beamformer,
    ch: &ChannelSet,
    p: &SystemParams,
) -> Result<SymmetrizabilityRatio, ModelError> {
    check_dims(a, ch, p)?;
    let row = ch.h_d.transpose() * &a.a;
    let signal = (&row * &ch.h_s)[(0, 0)].norm_sqr() * p.p_s;
    let jammer = (&row * &ch.h_j)[(0, 0)].norm_sqr() * p.p_j;
    Ok(if signal > 0.0 {
        SymmetrizabilityRatio::Finite(jammer / signal)
    } else if jammer > 0.0 {
        SymmetrizabilityRatio::Infinite
    } else {
        SymmetrizabilityRatio::Undefined
    })
}

/// Achievable rate in bits per channel use: `0.5 * log2(1 + SINR)` while the
/// equivalent signal power strictly dominates the equivalent jammer power,
/// and exactly 0 otherwise. The 1/2 reflects the two-slot relaying protocol.
pub fn capacity(a: &Beamformer, ch: &ChannelSet, p: &SystemParams) -> Result<f64, ModelError> {
    let ratio = symmetrizability_ratio(a, ch, p)?;
    if ratio.kills_capacity() {
        return Ok(0.0);
    }
    Ok(0.5 * (1.0 + sinr(a, ch, p)?).log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixkit;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_params(p_s: f64, p_j: f64) -> SystemParams {
        SystemParams::new(1, p_s, p_j, 1.0, 1.0, 1.0, 0.0, 0.99).unwrap()
    }

    fn scalar_setup() -> (Beamformer, ChannelSet, SystemParams) {
        let one = CVec::from_element(1, Complex64::new(1.0, 0.0));
        let ch = ChannelSet::new(one.clone(), one.clone(), one.clone(), one).unwrap();
        let a = Beamformer::new(CMat::from_element(1, 1, Complex64::new(1.0, 0.0))).unwrap();
        (a, ch, unit_params(2.0, 1.0))
    }

    #[test]
    fn scalar_link_hand_values() {
        let (a, ch, p) = scalar_setup();
        // Three-term sums with every factor equal to 1 except the powers.
        assert!((relay_power(&a, &ch, &p).unwrap() - 4.0).abs() < 1e-15);
        assert!((sinr(&a, &ch, &p).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((harvested_energy(&a, &ch, &p).unwrap() - 4.0).abs() < 1e-15);
        let rate = capacity(&a, &ch, &p).unwrap();
        assert!((rate - 0.5 * (5.0f64 / 3.0).log2()).abs() < 1e-15);
    }

    #[test]
    fn zero_beamformer_zeroes_everything() {
        let (_, ch, p) = scalar_setup();
        let a = Beamformer::new(CMat::zeros(1, 1)).unwrap();
        assert_eq!(relay_power(&a, &ch, &p).unwrap(), 0.0);
        assert_eq!(sinr(&a, &ch, &p).unwrap(), 0.0);
        assert_eq!(harvested_energy(&a, &ch, &p).unwrap(), 0.0);
        assert_eq!(capacity(&a, &ch, &p).unwrap(), 0.0);
        assert_eq!(
            symmetrizability_ratio(&a, &ch, &p).unwrap(),
            SymmetrizabilityRatio::Undefined
        );
    }

    #[test]
    fn scaling_the_beamformer_scales_power_quadratically() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ch = sample_channels(&mut rng, 3).unwrap();
        let p = SystemParams::new(3, 2.0, 1.5, 5.0, 1.0, 1.0, 0.0, 0.99).unwrap();
        let raw = CMat::from_fn(3, 3, |i, j| Complex64::new((i + 1) as f64, j as f64 * 0.5));
        let a = Beamformer::new(raw.clone()).unwrap();
        let a3 = Beamformer::new(raw.scale(3.0)).unwrap();
        let base = relay_power(&a, &ch, &p).unwrap();
        let scaled = relay_power(&a3, &ch, &p).unwrap();
        assert!((scaled - 9.0 * base).abs() < 1e-10 * scaled.max(1.0));
    }

    #[test]
    fn capacity_invariant_under_global_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ch = sample_channels(&mut rng, 4).unwrap();
        let p = SystemParams::new(4, 4.0, 2.0, 10.0, 1.0, 1.0, 0.0, 0.99).unwrap();
        let raw = CMat::from_fn(4, 4, |i, j| {
            Complex64::new(((i * 4 + j) as f64).sin(), ((i + 2 * j) as f64).cos())
        });
        let a = Beamformer::new(raw.clone()).unwrap();
        let theta = 1.234f64;
        let rotated = Beamformer::new(raw.scale(1.0) * Complex64::from_polar(1.0, theta)).unwrap();
        let c0 = capacity(&a, &ch, &p).unwrap();
        let c1 = capacity(&rotated, &ch, &p).unwrap();
        assert!((c0 - c1).abs() < 1e-12 * (1.0 + c0));
    }

    #[test]
    fn proportional_jammer_channel_gives_beamformer_independent_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut ch = sample_channels(&mut rng, 3).unwrap();
        let rho = Complex64::new(0.6, -0.3);
        ch.h_j = ch.h_s.map(|z| z * rho);
        let p = SystemParams::new(3, 2.0, 3.0, 5.0, 1.0, 1.0, 0.0, 0.99).unwrap();
        let expected = rho.norm_sqr() * p.p_j / p.p_s;
        for seed in 0..5u64 {
            let mut argn = ChaCha8Rng::seed_from_u64(100 + seed);
            let raw = CMat::from_fn(3, 3, |_, _| {
                Complex64::new(argn.sample(StandardNormal), argn.sample(StandardNormal))
            });
            let a = Beamformer::new(raw).unwrap();
            match symmetrizability_ratio(&a, &ch, &p).unwrap() {
                SymmetrizabilityRatio::Finite(r) => {
                    assert!((r - expected).abs() < 1e-10 * (1.0 + expected))
                }
                other => panic!("expected finite ratio, got {other:?}"),
            }
        }
    }

    #[test]
    fn identical_channels_equal_powers_ratio_one_kills_capacity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut ch = sample_channels(&mut rng, 2).unwrap();
        ch.h_j = ch.h_s.clone();
        let p = SystemParams::new(2, 2.0, 2.0, 5.0, 1.0, 1.0, 0.0, 0.99).unwrap();
        let a = Beamformer::new(CMat::identity(2, 2)).unwrap();
        let ratio = symmetrizability_ratio(&a, &ch, &p).unwrap();
        assert!(matches!(ratio, SymmetrizabilityRatio::Finite(r) if (r - 1.0).abs() < 1e-12));
        assert_eq!(capacity(&a, &ch, &p).unwrap(), 0.0);
    }

    #[test]
    fn nulling_direction_zeroes_the_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let ch = sample_channels(&mut rng, 3).unwrap();
        let p = SystemParams::new(3, 2.0, 1.0, 5.0, 1.0, 1.0, 0.0, 0.99).unwrap();
        // Rows proportional to w^T with w^T h_J = 0, built from the null
        // space of conj(h_J) conj(h_J)^H.
        let hj_conj = ch.h_j.map(|z| z.conj());
        let outer = &hj_conj * hj_conj.adjoint();
        let basis = matrixkit::null_space_basis(&outer, 1e-12).unwrap();
        let w = basis.column(0).into_owned();
        let ones = CMat::from_element(3, 1, Complex64::new(1.0, 0.0));
        let a = Beamformer::new(&ones * w.transpose()).unwrap();
        match symmetrizability_ratio(&a, &ch, &p).unwrap() {
            SymmetrizabilityRatio::Finite(r) => assert!(r < 1e-20),
            other => panic!("expected finite zero ratio, got {other:?}"),
        }
    }

    #[test]
    fn sampling_is_deterministic_and_has_unit_variance() {
        let mut a = ChaCha8Rng::seed_from_u64(42);
        let mut b = ChaCha8Rng::seed_from_u64(42);
        assert_eq!(sample_channels(&mut a, 4).unwrap(), sample_channels(&mut b, 4).unwrap());

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000usize;
        let mut sum_mod2 = 0.0;
        let mut sum_re2 = 0.0;
        let mut sum_im2 = 0.0;
        for _ in 0..n {
            let ch = sample_channels(&mut rng, 1).unwrap();
            let z = ch.h_s[0];
            sum_mod2 += z.norm_sqr();
            sum_re2 += z.re * z.re;
            sum_im2 += z.im * z.im;
        }
        let mean_mod2 = sum_mod2 / n as f64;
        assert!((0.98..=1.02).contains(&mean_mod2), "mean |z|^2 = {mean_mod2}");
        let var_re = sum_re2 / n as f64;
        let var_im = sum_im2 / n as f64;
        assert!((0.49..=0.51).contains(&var_re), "re variance {var_re}");
        assert!((0.49..=0.51).contains(&var_im), "im variance {var_im}");
    }

    #[test]
    fn unitary_rotation_preserves_power_and_rate() {
        // Rotating A -> conj(U) A U^H with channels h -> U h leaves every
        // model quantity unchanged: each term contracts h through A the same
        // way after the change of basis.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ch = sample_channels(&mut rng, 3).unwrap();
        let p = SystemParams::new(3, 2.0, 1.0, 6.0, 1.0, 1.0, 0.0, 0.99).unwrap();
        let raw = CMat::from_fn(3, 3, |i, j| {
            Complex64::new(0.3 * (i as f64 + 1.0), 0.2 * (j as f64 - 1.0))
        });
        let a = Beamformer::new(raw.clone()).unwrap();

        // Unitary from the eigenvectors of a random Hermitian matrix.
        let g = CMat::from_fn(3, 3, |i, j| {
            Complex64::new(((i + 2 * j) as f64).sin(), ((3 * i + j) as f64).cos())
        });
        let h = matrixkit::hermitian_part(&(&g * g.adjoint()));
        let (_, u) = matrixkit::hermitian_eig(&h).unwrap();

        let rot = |v: &CVec| -> CVec { &u * v };
        let ch_rot = ChannelSet::new(rot(&ch.h_s), rot(&ch.h_j), rot(&ch.h_d), rot(&ch.h_e))
            .unwrap();
        let a_rot = Beamformer::new(u.conjugate() * &raw * u.adjoint()).unwrap();

        let pairs = [
            (relay_power(&a, &ch, &p).unwrap(), relay_power(&a_rot, &ch_rot, &p).unwrap()),
            (sinr(&a, &ch, &p).unwrap(), sinr(&a_rot, &ch_rot, &p).unwrap()),
            (
                harvested_energy(&a, &ch, &p).unwrap(),
                harvested_energy(&a_rot, &ch_rot, &p).unwrap(),
            ),
        ];
        for (lhs, rhs) in pairs {
            assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn dbw_conversion() {
        assert!((dbw_to_watts(0.0) - 1.0).abs() < 1e-15);
        assert!((dbw_to_watts(10.0) - 10.0).abs() < 1e-12);
        assert!((dbw_to_watts(15.0) - 31.6227766017).abs() < 1e-9);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(SystemParams::new(2, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0).is_err());
        assert!(SystemParams::new(2, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.5).is_err());
        assert!(SystemParams::new(2, 1.0, 1.0, 1.0, 1.0, 1.0, -0.1, 0.5).is_err());
        assert!(SystemParams::new(0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.5).is_err());
        assert!(SystemParams::new(2, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.5).is_ok());
    }
}
