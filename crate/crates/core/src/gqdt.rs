//! Generalized quantum-defect phase parameter beta(kappa, lambda).
//!
//! For a closed channel (epsilon < 0) with effective quantum number
//! nu = (-2 epsilon)^(-1/2), the long-range field accumulates a phase
//! beta. Real lambda gives the Coulomb result beta = pi (nu - lambda).
//! Complex lambda = lambda_R + i alpha gives
//!
//!   beta = pi (nu - lambda_R)
//!        + atan[ tanh(pi alpha) tan(y - alpha ln(2 kappa)) ],
//!   y = arg( Gamma(2 lambda + 2) [Gamma(nu - lambda) / Gamma(lambda + 1 + nu)]^(1/2) )
//!
//! with the arctangent branch chosen so beta is continuous in epsilon.
//! The branch is fixed in closed form: with t = tanh(pi alpha) in (0, 1)
//! and x the tangent argument, the continuous unwrapping of
//! atan(t tan x) anchored at zero for x = 0 is
//!
//!   psi(x) = x + atan( (t - 1) sin x cos x / (cos^2 x + t sin^2 x) ),
//!
//! whose denominator never vanishes, so no pole repair is needed.
//!
//! sin(beta) = 0 is the bound-state condition; K = -tan(beta) is the
//! single-channel reaction matrix; (1/pi) d beta / dE is the density of
//! resonances a closed channel contributes.

use crate::error::{Error, Result};
use crate::special::log_gamma_complex;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::ops::RangeInclusive;

/// A closed-channel energy epsilon < 0 with its derived quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedChannelEnergy {
    /// Channel energy (hartree), strictly negative.
    pub epsilon: f64,
    /// Effective quantum number nu = (-2 epsilon)^(-1/2).
    pub nu: f64,
    /// kappa = 1/nu.
    pub kappa: f64,
}

impl ClosedChannelEnergy {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon < 0.0) {
            return Err(Error::NonNegativeEnergy(epsilon));
        }
        let nu = (-2.0 * epsilon).powf(-0.5);
        Ok(Self {
            epsilon,
            nu,
            kappa: 1.0 / nu,
        })
    }
}

/// The phase parameter at one energy, with the lambda it was built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseParam {
    /// Accumulated long-range phase (radians), real and continuous in
    /// epsilon.
    pub beta: f64,
    pub lambda: Complex64,
    epsilon: f64,
}

impl PhaseParam {
    /// d beta / dE at the energy this parameter was evaluated at.
    pub fn derivative(&self) -> f64 {
        beta_derivative(self.epsilon, self.lambda)
    }
}

/// Continuous unwrapping of atan(t tan x), anchored at psi(0) = 0.
/// Requires 0 < t <= 1.
fn atan_t_tan(t: f64, x: f64) -> f64 {
    let (sx, cx) = x.sin_cos();
    x + (((t - 1.0) * sx * cx) / (cx * cx + t * sx * sx)).atan()
}

fn beta_value(eps: ClosedChannelEnergy, lambda: Complex64) -> f64 {
    let lam_r = lambda.re;
    // alpha > 0 sign convention; beta is even in the sign of Im lambda.
    let alpha = lambda.im.abs();
    let coulomb = PI * (eps.nu - lam_r);
    if alpha == 0.0 {
        return coulomb;
    }
    let lam = Complex64::new(lam_r, alpha);
    let nu = Complex64::new(eps.nu, 0.0);
    // All three gamma arguments stay in the right half plane for nu > 0,
    // so the principal log-gamma is smooth along the energy axis.
    let lg = |z| log_gamma_complex(z).expect("gamma argument in right half plane");
    let y = (lg(2.0 * lam + 2.0) + 0.5 * (lg(nu - lam) - lg(lam + 1.0 + nu))).im;
    let x = y - alpha * (2.0 * eps.kappa).ln();
    let t = (PI * alpha).tanh();
    coulomb + atan_t_tan(t, x)
}

/// The generalized phase parameter beta(kappa, lambda) for epsilon < 0.
pub fn beta(eps: ClosedChannelEnergy, lambda: Complex64) -> PhaseParam {
    PhaseParam {
        beta: beta_value(eps, lambda),
        lambda,
        epsilon: eps.epsilon,
    }
}

/// Convenience wrapper validating the energy.
pub fn beta_at(energy: f64, lambda: Complex64) -> Result<PhaseParam> {
    Ok(beta(ClosedChannelEnergy::new(energy)?, lambda))
}

/// d beta / dE. Analytic pi nu^3 for real lambda; central difference
/// with step h = max(1e-8, 1e-6 |E|) for complex lambda.
///
/// The analytic real-lambda path means channels that share a real
/// lambda derivative (for instance ptilde vs a plain p wave) give
/// bitwise identical densities, as they must: the two betas differ by
/// an energy-independent term only.
pub fn beta_derivative(energy: f64, lambda: Complex64) -> f64 {
    let nu = (-2.0 * energy).powf(-0.5);
    if lambda.im == 0.0 {
        return PI * nu * nu * nu;
    }
    let h = f64::max(1e-8, 1e-6 * energy.abs()).min(0.5 * energy.abs());
    let hi = ClosedChannelEnergy::new(energy + h).expect("E + h < 0");
    let lo = ClosedChannelEnergy::new(energy - h).expect("E - h < 0");
    (beta_value(hi, lambda) - beta_value(lo, lambda)) / (2.0 * h)
}

/// Single-channel reaction matrix K = -tan(beta).
///
/// Signals a pole when |cos beta| < 1e-12.
pub fn single_channel_k(phase: &PhaseParam) -> Result<f64> {
    if phase.beta.cos().abs() < 1e-12 {
        return Err(Error::TanPole(phase.beta));
    }
    Ok(-phase.beta.tan())
}

/// Bound-state energies from beta(E) + pi mu = (n + 1) pi.
///
/// The root of each n is bracketed in nu and polished by bisection to
/// machine precision (well below 1e-10 hartree in E). Real lambda
/// recovers the Rydberg spectrum nu = n + 1 + lambda - mu.
pub fn bound_energies(
    lambda: Complex64,
    mu: f64,
    n_range: RangeInclusive<i32>,
) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for n in n_range {
        let target = PI * ((n + 1) as f64 - mu);
        let guess = (n + 1) as f64 - mu + lambda.re;
        out.push(solve_beta_equals(lambda, target, guess)?);
    }
    Ok(out)
}

/// Solve beta(E(nu)) = target for E, bracketing around nu_guess.
fn solve_beta_equals(lambda: Complex64, target: f64, nu_guess: f64) -> Result<f64> {
    let energy_of = |nu: f64| -0.5 / (nu * nu);
    let g = |nu: f64| {
        let eps = ClosedChannelEnergy::new(energy_of(nu)).expect("nu > 0 gives E < 0");
        beta_value(eps, lambda) - target
    };
    // beta grows by ~pi per unit nu; +/- 0.6 around the guess brackets
    // a single root, widening once if the guess is off.
    let mut lo = (nu_guess - 0.6).max(0.05);
    let mut hi = nu_guess + 0.6;
    let mut glo = g(lo);
    let mut ghi = g(hi);
    if glo * ghi > 0.0 {
        lo = (nu_guess - 1.1).max(0.02);
        hi = nu_guess + 1.1;
        glo = g(lo);
        ghi = g(hi);
        if glo * ghi > 0.0 {
            return Err(Error::BracketFailed(format!(
                "no sign change for target {target:.6} near nu = {nu_guess:.4}"
            )));
        }
    }
    // bisection in nu; beta is monotone in nu on the bracket
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return Ok(energy_of(mid));
        }
        if glo * gm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            glo = gm;
        }
    }
    Ok(energy_of(0.5 * (lo + hi)))
}

/// Quantum defect extracted from a bound energy:
/// mu = (n + 1) - beta(E, lambda)/pi, reduced to [0, 1).
pub fn quantum_defect_from_energy(energy: f64, n: i32, lambda: Complex64) -> Result<f64> {
    let eps = ClosedChannelEnergy::new(energy)?;
    let mu = (n + 1) as f64 - beta_value(eps, lambda) / PI;
    Ok(mu.rem_euclid(1.0))
}

/// Density of resonances (1/pi) d beta / dE contributed by a closed
/// channel; equals nu^3 exactly for real lambda.
pub fn resonance_density(lambda: Complex64, energy: f64) -> Result<f64> {
    if !(energy < 0.0) {
        return Err(Error::NonNegativeEnergy(energy));
    }
    Ok(beta_derivative(energy, lambda) / PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::longrange::{diagonalize_block, build_sigma_block, lambda_from_centrifugal, DipoleStrength};
    use approx::assert_relative_eq;

    fn lam_s39() -> Complex64 {
        let (s, _) = diagonalize_block(&build_sigma_block(&DipoleStrength::from_debye(3.9).unwrap()));
        s.lambda
    }

    fn lam_p39() -> Complex64 {
        let (_, p) = diagonalize_block(&build_sigma_block(&DipoleStrength::from_debye(3.9).unwrap()));
        p.lambda
    }

    #[test]
    fn closed_channel_energy_fields() {
        let e = ClosedChannelEnergy::new(-0.02).unwrap();
        assert_relative_eq!(e.nu, 5.0, max_relative = 1e-14);
        assert_relative_eq!(e.kappa * e.nu, 1.0, max_relative = 1e-15);
        assert!(ClosedChannelEnergy::new(0.0).is_err());
        assert!(ClosedChannelEnergy::new(0.3).is_err());
    }

    #[test]
    fn real_lambda_is_coulomb_phase() {
        let b = beta_at(-0.5, Complex64::new(0.0, 0.0)).unwrap();
        assert_relative_eq!(b.beta, PI, max_relative = 1e-14);
        let b = beta_at(-0.125, Complex64::new(1.0, 0.0)).unwrap();
        assert_relative_eq!(b.beta, PI, max_relative = 1e-14);
    }

    #[test]
    fn complex_lambda_golden_value() {
        // Frozen from the 50-digit oracle at the exact 7-digit lambda
        // used in the two published generalized channel constants.
        let lam = Complex64::new(-0.5, 0.8857056);
        let b = beta_at(-0.02, lam).unwrap();
        assert_relative_eq!(b.beta, 16.641721611758796, max_relative = 1e-12);
        let k = single_channel_k(&b).unwrap();
        assert_relative_eq!(k, -1.3514427708320228, max_relative = 1e-11);
    }

    #[test]
    fn full_precision_complex_beta_grid() {
        // Same oracle, full-precision lambda_stilde of D = 3.9 debye.
        let lam = lam_s39();
        let table = [
            (-0.5, 3.9660777904691335),
            (-0.125, 7.1881167639711955),
            (-0.05, 10.859685204491607),
            (-0.02, 16.641721455766112),
            (-0.008, 25.773804594543948),
            (-0.002, 50.61208877161238),
        ];
        for (e, want) in table {
            let b = beta_at(e, lam).unwrap().beta;
            assert_relative_eq!(b, want, max_relative = 1e-12);
        }
    }

    #[test]
    fn k_pole_rejected_and_trivial_values() {
        let half_pi = PhaseParam {
            beta: PI / 2.0,
            lambda: Complex64::new(0.0, 0.0),
            epsilon: -0.5,
        };
        assert!(matches!(single_channel_k(&half_pi), Err(Error::TanPole(_))));

        let b_pi = PhaseParam {
            beta: PI,
            lambda: Complex64::new(0.0, 0.0),
            epsilon: -0.5,
        };
        assert!(single_channel_k(&b_pi).unwrap().abs() < 1e-12);

        let b34 = PhaseParam {
            beta: 3.0 * PI / 4.0,
            lambda: Complex64::new(0.0, 0.0),
            epsilon: -0.5,
        };
        assert_relative_eq!(single_channel_k(&b34).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn hydrogenic_bound_energies() {
        let e = bound_energies(Complex64::new(0.0, 0.0), 0.0, 0..=1).unwrap();
        assert_relative_eq!(e[0], -0.5, max_relative = 1e-12);
        assert_relative_eq!(e[1], -0.125, max_relative = 1e-12);
    }

    #[test]
    fn ptilde_lowest_bound_state() {
        // -1/(2 (1 + lambda)^2) at the full-precision lambda_ptilde.
        let e = bound_energies(lam_p39(), 0.0, 0..=0).unwrap();
        assert_relative_eq!(e[0], -0.0935141302321, max_relative = 1e-10);
    }

    #[test]
    fn rydberg_with_defect() {
        let e = bound_energies(Complex64::new(1.0, 0.0), 0.3, 1..=1).unwrap();
        assert_relative_eq!(e[0], -0.0685871056241, max_relative = 1e-11);
    }

    #[test]
    fn defect_extraction_examples() {
        let mu = quantum_defect_from_energy(-0.125, 1, Complex64::new(1.0, 0.0)).unwrap();
        assert!(mu.abs() < 1e-12 || (1.0 - mu) < 1e-12);
        let mu = quantum_defect_from_energy(-0.0685871056241, 2, Complex64::new(1.0, 0.0)).unwrap();
        assert_relative_eq!(mu, 0.3, max_relative = 1e-9);
        assert!(quantum_defect_from_energy(0.1, 1, Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn defect_roundtrip_matrix() {
        // mu -> bound energy -> mu again, to 1e-9, across the four
        // lambda flavors of the channel set.
        let lams = [
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            lam_p39(),
            lam_s39(),
        ];
        for lam in lams {
            for i in 0..10 {
                let mu = 0.1 * i as f64;
                let n = 3;
                let e = bound_energies(lam, mu, n..=n).unwrap()[0];
                let back = quantum_defect_from_energy(e, n, lam).unwrap();
                let diff = (back - mu).abs().min((back - mu + 1.0).abs()).min((back - mu - 1.0).abs());
                assert!(diff < 1e-9, "lambda {lam}, mu {mu}: got {back}");
            }
        }
    }

    #[test]
    fn density_trivial_and_complex() {
        assert_relative_eq!(
            resonance_density(Complex64::new(0.0, 0.0), -0.02).unwrap(),
            125.0,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            resonance_density(Complex64::new(1.0, 0.0), -0.005).unwrap(),
            1000.0,
            max_relative = 1e-13
        );
        // complex channel: frozen oracle 125.093968230851; within 1% of
        // the pure-Coulomb 125 ("only negligible differences")
        let rho = resonance_density(lam_s39(), -0.02).unwrap();
        assert_relative_eq!(rho, 125.093968230851, max_relative = 5e-9);
        assert!((rho / 125.0 - 1.0).abs() < 0.01);
        assert!(resonance_density(lam_s39(), 0.0).is_err());
    }

    #[test]
    fn beta_monotone_and_continuous_in_energy() {
        // scan uniformly in nu so increments stay ~ pi d(nu); a branch
        // jump would show up as a step of order pi
        let lam = lam_s39();
        let n = 8000;
        let nu_of = |i: usize| 1.0 + 21.0 * i as f64 / n as f64;
        let mut prev = beta_at(-0.5 / (nu_of(0) * nu_of(0)), lam).unwrap().beta;
        for i in 1..=n {
            let nu = nu_of(i);
            let e = -0.5 / (nu * nu);
            let b = beta_at(e, lam).unwrap().beta;
            assert!(b > prev, "beta not increasing at E = {e}");
            assert!(b - prev < 0.1, "jump at E = {e}: {}", b - prev);
            prev = b;
        }
    }

    #[test]
    fn dipole_off_limit_reduces_to_coulomb() {
        // at Dt = 1e-8 the s-like root is real and tiny; beta must equal
        // pi (nu - lambda_R) exactly and pi nu to well under 1e-10
        let dt = 1e-8_f64;
        let lam = lambda_from_centrifugal(1.0 - (1.0 + 4.0 * dt * dt).sqrt());
        assert_eq!(lam.im, 0.0);
        for i in 1..50 {
            let e = -0.5 + 0.499 * i as f64 / 50.0;
            let nu = (-2.0 * e).powf(-0.5);
            let b = beta_at(e, lam).unwrap().beta;
            assert_relative_eq!(b, PI * (nu - lam.re), max_relative = 1e-15);
            assert!((b - PI * nu).abs() <= 1e-10);
        }
    }

    #[test]
    fn continuity_across_critical_dipole() {
        // The s-like branch has a one-sided square-root cusp in Dt at
        // the critical coupling: lambda_R(c - h) = -1/2 + sqrt(1.2 h),
        // so |beta(c-h) - beta(c+h)| ~ pi sqrt(1.2 h). Both one-sided
        // limits agree (continuity); the jump at h = 1e-6 is ~3.4e-3
        // and shrinks like sqrt(h).
        let dtc = 0.375_f64;
        let lam_at = |dt: f64| lambda_from_centrifugal(1.0 - (1.0 + 4.0 * dt * dt).sqrt());
        let mut last = f64::INFINITY;
        for h in [1e-6, 1e-8, 1e-10] {
            let mut worst: f64 = 0.0;
            for i in 0..=20 {
                let e = -0.1 + 0.09 * i as f64 / 20.0;
                let lo = beta_at(e, lam_at(dtc - h)).unwrap().beta;
                let hi = beta_at(e, lam_at(dtc + h)).unwrap().beta;
                worst = worst.max((lo - hi).abs());
            }
            let bound = 1.2 * PI * (1.2 * h).sqrt() + 1e-9;
            assert!(worst < bound, "jump {worst:.3e} at h = {h:.1e}");
            assert!(worst < last);
            last = worst;
        }
    }

    #[test]
    fn resonance_count_matches_density_integral() {
        // number of sin(beta + pi mu) = 0 roots in a window vs the
        // integrated density, within 1
        let lam = lam_s39();
        let mu = 0.3;
        let (e1, e2) = (-0.02, -0.005);
        let roots = {
            let mut count = 0;
            let lo = beta_at(e1, lam).unwrap().beta + PI * mu;
            let hi = beta_at(e2, lam).unwrap().beta + PI * mu;
            let mut k = (lo / PI).ceil() as i64;
            while (k as f64) * PI <= hi {
                count += 1;
                k += 1;
            }
            count
        };
        // trapezoid over the density
        let n = 2000;
        let mut integral = 0.0;
        for i in 0..n {
            let a = e1 + (e2 - e1) * i as f64 / n as f64;
            let b = e1 + (e2 - e1) * (i + 1) as f64 / n as f64;
            let fa = resonance_density(lam, a).unwrap();
            let fb = resonance_density(lam, b).unwrap();
            integral += 0.5 * (fa + fb) * (b - a);
        }
        assert!(
            (roots as f64 - integral).abs() <= 1.0,
            "roots {roots} vs integral {integral:.3}"
        );
    }

    #[test]
    fn bracket_failure_reported() {
        // nu guess forced tiny: no root reachable
        let r = solve_beta_equals(Complex64::new(0.0, 0.0), -40.0, 0.05);
        assert!(matches!(r, Err(Error::BracketFailed(_))));
    }
}
