//! Asymptotic Coulomb-plus-dipole coupling and generalized partial waves.
//!
//! A permanent dipole on the ion couples the s-sigma and p-sigma escape
//! channels through a 1/r^2 matrix element. Diagonalizing that 2x2 block
//! gives two effective channels whose centrifugal coefficients are
//! 1 +/- sqrt(1 + 4 Dt^2) (Dt = D/sqrt(3)); solving lambda(lambda+1) for
//! those coefficients yields the generalized partial-wave quantum
//! numbers. Above the critical reduced dipole Dt = 3/8 the s-like root
//! turns complex, lambda = -1/2 + i alpha. The sign convention here is
//! alpha > 0.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Electronic channel labels, in the fixed basis order used everywhere
/// in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelLabel {
    /// s-like sigma channel (complex lambda above the critical dipole).
    #[serde(rename = "stilde")]
    Stilde,
    /// p pi, minus projection.
    #[serde(rename = "ppi-")]
    PpiMinus,
    /// p-like sigma channel (real lambda > 1).
    #[serde(rename = "ptilde")]
    Ptilde,
    /// p pi, plus projection.
    #[serde(rename = "ppi+")]
    PpiPlus,
    /// d sigma, carried uncoupled with lambda = 2.
    #[serde(rename = "dsigma")]
    Dsigma,
}

impl ChannelLabel {
    /// Basis order (stilde, ppi-, ptilde, ppi+, dsigma).
    pub const ALL: [ChannelLabel; 5] = [
        ChannelLabel::Stilde,
        ChannelLabel::PpiMinus,
        ChannelLabel::Ptilde,
        ChannelLabel::PpiPlus,
        ChannelLabel::Dsigma,
    ];

    /// Projection of the electronic angular momentum on the molecular
    /// axis in the complex pi basis.
    pub fn m_elec(self) -> i32 {
        match self {
            ChannelLabel::PpiMinus => -1,
            ChannelLabel::PpiPlus => 1,
            _ => 0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ChannelLabel::Stilde => "stilde",
            ChannelLabel::PpiMinus => "ppi-",
            ChannelLabel::Ptilde => "ptilde",
            ChannelLabel::PpiPlus => "ppi+",
            ChannelLabel::Dsigma => "dsigma",
        }
    }
}

impl std::fmt::Display for ChannelLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Permanent dipole moment in the three unit systems used by the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipoleStrength {
    /// Dipole moment in debye.
    pub d_debye: f64,
    /// Same in atomic units (0.393430 au per debye).
    pub d_au: f64,
    /// Reduced coupling D/sqrt(3) in atomic units; the off-diagonal of
    /// the sigma block.
    pub d_tilde: f64,
}

impl DipoleStrength {
    pub fn from_debye(d_debye: f64) -> Result<Self> {
        if !(d_debye >= 0.0) || !d_debye.is_finite() {
            return Err(Error::Config(format!(
                "dipole must be finite and >= 0, got {d_debye}"
            )));
        }
        let d_au = d_debye * crate::constants::DEBYE_TO_AU;
        Ok(Self {
            d_debye,
            d_au,
            d_tilde: d_au / 3.0_f64.sqrt(),
        })
    }

    pub fn from_au(d_au: f64) -> Result<Self> {
        Self::from_debye(d_au / crate::constants::DEBYE_TO_AU)
    }

    /// Zero dipole (pure Coulomb tail).
    pub fn zero() -> Self {
        Self {
            d_debye: 0.0,
            d_au: 0.0,
            d_tilde: 0.0,
        }
    }
}

/// 2x2 symmetric matrix of 1/r^2 coefficients over (s sigma, p sigma),
/// with the attractive Coulomb -1/r common to both channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaBlock {
    /// Diagonal coefficients, (0, 1) by construction (l(l+1)/2 for l = 0, 1).
    pub diag: [f64; 2],
    /// Off-diagonal coupling D/sqrt(3).
    pub offdiag: f64,
    /// Coulomb charge (coefficient of -1/r), fixed at 1.
    pub charge: f64,
}

/// One long-range escape channel after diagonalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveChannel {
    pub label: ChannelLabel,
    /// Generalized partial-wave quantum number, lambda_R + i alpha.
    pub lambda: Complex64,
    /// lambda (lambda + 1); real even when lambda is complex.
    pub centrifugal_coefficient: f64,
    /// Weight of the dominant parent state in the eigenvector, in [0.5, 1].
    pub mixing_fraction: f64,
    /// Channel threshold energy (hartree); zero until attached to a
    /// vibronic threshold.
    pub threshold: f64,
}

/// Coefficient matrix of the 1/r^2 terms of the sigma block.
pub fn build_sigma_block(d: &DipoleStrength) -> SigmaBlock {
    SigmaBlock {
        diag: [0.0, 1.0],
        offdiag: d.d_tilde,
        charge: 1.0,
    }
}

/// Solve lambda (lambda + 1) = c on the branch continuous with the
/// dipole-free limit (lambda = 0 for the s-like root, lambda = l for
/// integer coefficients). Real root for c >= -1/4, else
/// -1/2 + i sqrt(-c - 1/4) with the alpha > 0 convention.
pub fn lambda_from_centrifugal(c: f64) -> Complex64 {
    let disc = 1.0 + 4.0 * c;
    if disc >= 0.0 {
        Complex64::new(0.5 * (-1.0 + disc.sqrt()), 0.0)
    } else {
        Complex64::new(-0.5, 0.5 * (-disc).sqrt())
    }
}

/// Diagonalize the sigma block: returns the (stilde, ptilde) effective
/// channels with their generalized lambda and mixing fractions.
pub fn diagonalize_block(block: &SigmaBlock) -> (EffectiveChannel, EffectiveChannel) {
    let dt = block.offdiag;
    let s = (1.0 + 4.0 * dt * dt).sqrt();
    // Eigenvalues of [[0, dt], [dt, 1]] are (1 -/+ s)/2; the centrifugal
    // coefficient lambda(lambda+1) is twice that.
    let c_plus = 1.0 + s; // ptilde (more repulsive than p sigma)
    let c_minus = 1.0 - s; // stilde (more attractive than s sigma)

    // Eigenvector for eigenvalue a of [[0, dt], [dt, 1]] is (dt, a); the
    // dominant-parent weight follows from normalizing.
    let a_plus = 0.5 * c_plus;
    let mixing = if dt == 0.0 {
        1.0
    } else {
        a_plus * a_plus / (dt * dt + a_plus * a_plus)
    };

    let stilde = EffectiveChannel {
        label: ChannelLabel::Stilde,
        lambda: lambda_from_centrifugal(c_minus),
        centrifugal_coefficient: c_minus,
        mixing_fraction: mixing,
        threshold: 0.0,
    };
    let ptilde = EffectiveChannel {
        label: ChannelLabel::Ptilde,
        lambda: lambda_from_centrifugal(c_plus),
        centrifugal_coefficient: c_plus,
        mixing_fraction: mixing,
        threshold: 0.0,
    };
    (stilde, ptilde)
}

/// Reduced dipole at which the s-like lambda turns complex: the real
/// pair merges at lambda = -1/2 when 5 = 4 sqrt(1 + 4 Dt^2), i.e.
/// Dt = 3/8 exactly.
pub fn critical_dipole() -> DipoleStrength {
    let d_tilde = 0.375;
    let d_au = d_tilde * 3.0_f64.sqrt();
    DipoleStrength {
        d_debye: d_au / crate::constants::DEBYE_TO_AU,
        d_au,
        d_tilde,
    }
}

/// The five-channel lambda set (stilde, ppi-, ptilde, ppi+, dsigma).
///
/// With the dipole off, the sigma channels revert to plain l = 0 and
/// l = 1. The pi channels are untouched by the sigma-block dipole
/// coupling and dsigma is carried uncoupled at lambda = 2.
pub fn channel_lambdas(d: &DipoleStrength, dipole_on: bool) -> [Complex64; 5] {
    let (stilde, ptilde) = if dipole_on {
        let (s, p) = diagonalize_block(&build_sigma_block(d));
        (s.lambda, p.lambda)
    } else {
        (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0))
    };
    [
        stilde,
        Complex64::new(1.0, 0.0),
        ptilde,
        Complex64::new(1.0, 0.0),
        Complex64::new(2.0, 0.0),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sigma_block_examples() {
        let b0 = build_sigma_block(&DipoleStrength::zero());
        assert_eq!(b0.diag, [0.0, 1.0]);
        assert_eq!(b0.offdiag, 0.0);
        assert_eq!(b0.diag[0] + b0.diag[1], 1.0);

        // 3.9 debye: off-diagonal 3.9 x 0.393430 / sqrt(3)
        let b = build_sigma_block(&DipoleStrength::from_debye(3.9).unwrap());
        assert_relative_eq!(b.offdiag, 0.885872973988, max_relative = 1e-10);

        // D = sqrt(3) au gives Dt exactly 1
        let b1 = build_sigma_block(&DipoleStrength::from_au(3.0_f64.sqrt()).unwrap());
        assert_relative_eq!(b1.offdiag, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn decoupled_limit() {
        let (s, p) = diagonalize_block(&build_sigma_block(&DipoleStrength::zero()));
        assert_eq!(s.lambda, Complex64::new(0.0, 0.0));
        assert_eq!(p.lambda, Complex64::new(1.0, 0.0));
        assert_eq!(s.mixing_fraction, 1.0);
        assert_eq!(p.mixing_fraction, 1.0);
    }

    #[test]
    fn generalized_lambdas_at_3_9_debye() {
        // Frozen 50-digit oracle values for D = 3.9 debye.
        let d = DipoleStrength::from_debye(3.9).unwrap();
        let (s, p) = diagonalize_block(&build_sigma_block(&d));
        assert_relative_eq!(p.lambda.re, 1.31231173231, max_relative = 1e-10);
        assert_eq!(p.lambda.im, 0.0);
        assert_relative_eq!(s.lambda.re, -0.5, max_relative = 1e-14);
        assert_relative_eq!(s.lambda.im, 0.885705264217, max_relative = 1e-10);
        assert_relative_eq!(p.mixing_fraction, 0.745763792239, max_relative = 1e-9);
        assert_relative_eq!(p.centrifugal_coefficient, 3.03447381506, max_relative = 1e-10);
        assert_relative_eq!(s.centrifugal_coefficient, -1.03447381506, max_relative = 1e-10);
    }

    #[test]
    fn critical_dipole_values() {
        let c = critical_dipole();
        assert_eq!(c.d_tilde, 0.375);
        assert_relative_eq!(c.d_au, 0.649519052838, max_relative = 1e-11);
        assert_relative_eq!(c.d_debye, 1.650913892781, max_relative = 1e-11);

        // just below: real pair; just above: complex with small alpha
        let below = lambda_from_centrifugal(1.0 - (1.0 + 4.0 * (0.375f64 - 1e-9).powi(2)).sqrt());
        let above = lambda_from_centrifugal(1.0 - (1.0 + 4.0 * (0.375f64 + 1e-9).powi(2)).sqrt());
        assert_eq!(below.im, 0.0);
        assert!(above.im > 0.0);
        assert!((below.re + 0.5).abs() < 1e-3 && (above.re + 0.5).abs() < 1e-12);
    }

    #[test]
    fn trace_preserved_and_monotone() {
        let mut prev_p = 1.0;
        for i in 0..200 {
            let dt = i as f64 * 0.02;
            let d = DipoleStrength {
                d_debye: 0.0,
                d_au: dt * 3.0_f64.sqrt(),
                d_tilde: dt,
            };
            let (s, p) = diagonalize_block(&build_sigma_block(&d));
            // both centrifugal coefficients are real, summing to 2
            let sum = s.centrifugal_coefficient + p.centrifugal_coefficient;
            assert_relative_eq!(sum, 2.0, max_relative = 1e-12);
            // lambda(lambda+1) recovers the coefficient even when complex
            let lam = s.lambda;
            let c = lam * (lam + 1.0);
            assert_relative_eq!(c.re, s.centrifugal_coefficient, epsilon = 1e-12);
            assert!(c.im.abs() < 1e-12);
            // ptilde lambda increases monotonically from 1
            if i > 0 {
                assert!(p.lambda.re > prev_p);
            } else {
                assert_eq!(p.lambda.re, 1.0);
            }
            prev_p = p.lambda.re;
            assert!(s.mixing_fraction >= 0.5 && s.mixing_fraction <= 1.0);
        }
    }

    #[test]
    fn continuity_across_critical() {
        // the real pair merges at lambda = -1/2 and alpha grows from 0
        for eps in [1e-4, 1e-6, 1e-8] {
            let cm = |dt: f64| 1.0 - (1.0 + 4.0 * dt * dt).sqrt();
            let lo = lambda_from_centrifugal(cm(0.375 - eps));
            let hi = lambda_from_centrifugal(cm(0.375 + eps));
            assert!((lo - hi).norm() < 40.0 * eps.sqrt());
        }
    }

    #[test]
    fn dipole_off_channel_set() {
        let d = DipoleStrength::from_debye(3.9).unwrap();
        let on = channel_lambdas(&d, true);
        let off = channel_lambdas(&d, false);
        assert_eq!(off[0], Complex64::new(0.0, 0.0));
        assert_eq!(off[2], Complex64::new(1.0, 0.0));
        assert_eq!(on[1], off[1]);
        assert_eq!(on[4], Complex64::new(2.0, 0.0));
        assert!(on[0].im > 0.0);
    }

    #[test]
    fn negative_dipole_rejected() {
        assert!(DipoleStrength::from_debye(-0.1).is_err());
        assert!(DipoleStrength::from_debye(f64::NAN).is_err());
    }
}
