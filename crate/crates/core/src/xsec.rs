//! Recombination cross sections from resonance tables.
//!
//! Capture model: every autoionizing resonance captures with unit
//! dissociation probability, so a resonance of width Gamma at electron
//! energy E_a contributes its Lorentzian area (pi Gamma / 2) times the
//! geometric pi/k^2 to the energy bin that contains it:
//!
//!   sigma_bar(bin) = (pi / k_a^2) (pi Gamma_a / 2) / Delta E,
//!   k_a^2 = 2 E_a   (atomic units).
//!
//! The binned curve is then convolved with the experimental electron
//! energy distribution, either a Gaussian or an anisotropic Maxwell
//! beam kernel. Row kernels are renormalized to unit mass on the
//! grid (truncated-kernel convention at the edges); rows whose
//! support lies fully inside the grid must carry their full mass
//! beforehand, anything less signals an under-resolved grid.

use crate::constants::{BOHR2_TO_CM2, HARTREE_TO_EV};
use crate::error::{Error, Result};
use crate::framexform::gauss_legendre;

/// Provenance carried by every curve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XsecMetadata {
    pub dipole_on: bool,
    pub config_hash: String,
}

/// Binned cross-section curve; energies in eV, cross sections in cm^2.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSectionCurve {
    /// Bin centers, strictly increasing.
    pub energy_ev: Vec<f64>,
    pub sigma_raw_cm2: Vec<f64>,
    /// Empty until [`convolve`] fills it.
    pub sigma_conv_cm2: Vec<f64>,
    /// Bin width (eV).
    pub bin_ev: f64,
    pub metadata: XsecMetadata,
}

/// Bin-averaged capture cross section from (electron energy, width)
/// pairs in hartree. Resonances outside the window are dropped.
pub fn capture_xsec(
    resonances: &[(f64, f64)],
    e_min_ev: f64,
    e_max_ev: f64,
    bin_mev: f64,
    metadata: XsecMetadata,
) -> Result<CrossSectionCurve> {
    if !(e_min_ev >= 0.0 && e_max_ev > e_min_ev && bin_mev > 0.0) {
        return Err(Error::Config(format!(
            "bad capture window ({e_min_ev}, {e_max_ev}) or bin {bin_mev}"
        )));
    }
    let bin_ev = bin_mev * 1e-3;
    let bin_h = bin_ev / HARTREE_TO_EV;
    let n_bins = ((e_max_ev - e_min_ev) / bin_ev).ceil() as usize;
    let mut sigma = vec![0.0_f64; n_bins];
    let mut max_gamma = vec![0.0_f64; n_bins];
    for &(e_a, gamma) in resonances {
        if !(gamma > 0.0) {
            return Err(Error::Config(format!("nonpositive width {gamma}")));
        }
        let e_ev = e_a * HARTREE_TO_EV;
        if e_ev < e_min_ev || e_ev >= e_max_ev || e_a <= 0.0 {
            continue;
        }
        let b = ((e_ev - e_min_ev) / bin_ev) as usize;
        let k2 = 2.0 * e_a;
        sigma[b] += (std::f64::consts::PI / k2) * (std::f64::consts::PI * gamma / 2.0) / bin_h;
        max_gamma[b] = max_gamma[b].max(gamma);
    }
    for (b, &g) in max_gamma.iter().enumerate() {
        if g > 0.0 && bin_h <= 3.0 * g {
            let _ = b;
            return Err(Error::BinTooNarrow {
                bin: bin_h,
                max_gamma: g,
            });
        }
    }
    let energy_ev: Vec<f64> = (0..n_bins)
        .map(|b| e_min_ev + (b as f64 + 0.5) * bin_ev)
        .collect();
    let sigma_raw_cm2: Vec<f64> = sigma.iter().map(|s| s * BOHR2_TO_CM2).collect();
    Ok(CrossSectionCurve {
        energy_ev,
        sigma_raw_cm2,
        sigma_conv_cm2: Vec::new(),
        bin_ev,
        metadata,
    })
}

/// Electron energy distribution kernels; parameters in eV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Gaussian { sigma_ev: f64 },
    /// Anisotropic Maxwell beam distribution: parallel/perpendicular
    /// temperatures (energy units) around the detuning energy.
    Maxwell { t_par_ev: f64, t_perp_ev: f64 },
}

impl Kernel {
    pub fn from_config(k: &crate::config::KernelConfig) -> Self {
        match *k {
            crate::config::KernelConfig::Gaussian { sigma_e_mev } => Kernel::Gaussian {
                sigma_ev: sigma_e_mev * 1e-3,
            },
            crate::config::KernelConfig::Maxwell {
                t_par_mev,
                t_perp_mev,
            } => Kernel::Maxwell {
                t_par_ev: t_par_mev * 1e-3,
                t_perp_ev: t_perp_mev * 1e-3,
            },
        }
    }

    /// Characteristic energy spread at detuning energy e (eV), used to
    /// classify rows as interior or edge-truncated.
    pub fn spread_ev(&self, e: f64) -> f64 {
        match *self {
            Kernel::Gaussian { sigma_ev } => sigma_ev,
            Kernel::Maxwell { t_par_ev, t_perp_ev } => {
                (2.0 * e.max(0.0) * t_par_ev + 4.0 * t_perp_ev * t_perp_ev).sqrt() + t_perp_ev
            }
        }
    }

    /// Probability density (per eV) of true energy e_prime at nominal
    /// energy e.
    pub fn density(&self, e: f64, e_prime: f64) -> f64 {
        match *self {
            Kernel::Gaussian { sigma_ev } => {
                let x = (e_prime - e) / sigma_ev;
                (-0.5 * x * x).exp() / ((2.0 * std::f64::consts::PI).sqrt() * sigma_ev)
            }
            Kernel::Maxwell { t_par_ev, t_perp_ev } => {
                if e_prime <= 0.0 {
                    return 0.0;
                }
                // atomic units throughout the velocity integral
                let tp = t_par_ev / HARTREE_TO_EV;
                let tq = t_perp_ev / HARTREE_TO_EV;
                let ec = e.max(0.0) / HARTREE_TO_EV;
                let ep = e_prime / HARTREE_TO_EV;
                let vd = (2.0 * ec).sqrt();
                let vm = (2.0 * ep).sqrt();
                let sig_par = tp.sqrt();
                let lo = (-vm).max(vd - 8.0 * sig_par);
                let hi = vm.min(vd + 8.0 * sig_par);
                if hi <= lo {
                    return 0.0;
                }
                let (nodes, weights) = gauss_legendre(64, lo, hi);
                let mut sum = 0.0;
                for (&v, &w) in nodes.iter().zip(&weights) {
                    let par = (-(v - vd) * (v - vd) / (2.0 * tp)).exp();
                    let perp = (-(2.0 * ep - v * v) / (2.0 * tq)).exp();
                    sum += w * par * perp;
                }
                let norm = 1.0 / (tq * (2.0 * std::f64::consts::PI * tp).sqrt());
                // density per hartree, converted to per eV
                norm * sum / HARTREE_TO_EV
            }
        }
    }
}

/// Convolve the raw curve with the kernel on its own grid
/// (trapezoidal quadrature). Every row kernel is renormalized to unit
/// mass on the grid; a row whose support lies entirely inside the
/// grid must already carry mass within 1e-3 of one, otherwise the grid
/// cannot represent the kernel.
pub fn convolve(curve: &CrossSectionCurve, kernel: &Kernel) -> Result<CrossSectionCurve> {
    let n = curve.energy_ev.len();
    if n < 3 {
        return Err(Error::Config("curve too short to convolve".into()));
    }
    let h = curve.bin_ev;
    let mut weights = vec![h; n];
    weights[0] = 0.5 * h;
    weights[n - 1] = 0.5 * h;
    let (grid_lo, grid_hi) = (curve.energy_ev[0], curve.energy_ev[n - 1]);
    let mut conv = vec![0.0_f64; n];
    for i in 0..n {
        let e = curve.energy_ev[i];
        let spread = kernel.spread_ev(e);
        let interior = e - 6.0 * spread >= grid_lo && e + 6.0 * spread <= grid_hi;
        let mut mass = 0.0;
        let mut acc = 0.0;
        for j in 0..n {
            let rho = kernel.density(e, curve.energy_ev[j]);
            mass += weights[j] * rho;
            acc += weights[j] * rho * curve.sigma_raw_cm2[j];
        }
        if interior && (mass - 1.0).abs() > 1e-3 {
            return Err(Error::KernelMass(mass));
        }
        if mass <= 0.0 {
            return Err(Error::KernelMass(mass));
        }
        // renormalized to exactly unit mass on the grid
        conv[i] = acc / mass;
    }
    Ok(CrossSectionCurve {
        energy_ev: curve.energy_ev.clone(),
        sigma_raw_cm2: curve.sigma_raw_cm2.clone(),
        sigma_conv_cm2: conv,
        bin_ev: curve.bin_ev,
        metadata: curve.metadata.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn meta() -> XsecMetadata {
        XsecMetadata {
            dipole_on: true,
            config_hash: "test".into(),
        }
    }

    #[test]
    fn empty_resonance_list_gives_zero_curve() {
        let c = capture_xsec(&[], 0.001, 0.1, 1.0, meta()).unwrap();
        assert!(c.sigma_raw_cm2.iter().all(|&s| s == 0.0));
        assert!(c.energy_ev.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn single_resonance_bin_area_identity() {
        // integral of sigma over its bin equals (pi/k^2)(pi Gamma/2)
        let e_a = 0.01; // hartree
        let gamma = 1e-6;
        let c = capture_xsec(&[(e_a, gamma)], 0.001, 1.0, 1.0, meta()).unwrap();
        let bin_h = c.bin_ev / HARTREE_TO_EV;
        let total_au: f64 =
            c.sigma_raw_cm2.iter().sum::<f64>() / BOHR2_TO_CM2 * bin_h;
        let want = (std::f64::consts::PI / (2.0 * e_a)) * (std::f64::consts::PI * gamma / 2.0);
        assert_relative_eq!(total_au, want, max_relative = 1e-12);
    }

    #[test]
    fn doubling_widths_doubles_sigma() {
        let rs: Vec<(f64, f64)> = (1..20)
            .map(|i| (0.002 * i as f64, 4e-7 * (1.0 + 0.3 * i as f64)))
            .collect();
        let r2: Vec<(f64, f64)> = rs.iter().map(|&(e, g)| (e, 2.0 * g)).collect();
        let c1 = capture_xsec(&rs, 0.001, 1.05, 1.0, meta()).unwrap();
        let c2 = capture_xsec(&r2, 0.001, 1.05, 1.0, meta()).unwrap();
        for (a, b) in c1.sigma_raw_cm2.iter().zip(&c2.sigma_raw_cm2) {
            if *a > 0.0 {
                assert_relative_eq!(2.0 * a, b, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn bin_narrower_than_widths_rejected() {
        // 1 meV bin = 3.675e-5 hartree; a 2e-5 width violates 3x
        let r = capture_xsec(&[(0.01, 2e-5)], 0.001, 1.0, 1.0, meta());
        assert!(matches!(r, Err(Error::BinTooNarrow { .. })));
    }

    #[test]
    fn gaussian_kernel_mass_and_constant_curve() {
        let mut c = capture_xsec(&[], 0.001, 0.5, 1.0, meta()).unwrap();
        for s in c.sigma_raw_cm2.iter_mut() {
            *s = 3.3e-15;
        }
        let out = convolve(&c, &Kernel::Gaussian { sigma_ev: 0.003 }).unwrap();
        for (i, s) in out.sigma_conv_cm2.iter().enumerate() {
            assert_relative_eq!(*s, 3.3e-15, max_relative = 1e-10);
            let _ = i;
        }
    }

    #[test]
    fn delta_kernel_limit_reproduces_input() {
        let mut c = capture_xsec(&[], 0.001, 0.25, 1.0, meta()).unwrap();
        for (i, s) in c.sigma_raw_cm2.iter_mut().enumerate() {
            let e = 0.0015 + i as f64 * 0.001;
            *s = 1e-15 * (1.0 + (8.0 * e).sin().powi(2)) / e;
        }
        // kernel two bins wide: output tracks input to grid accuracy
        let out = convolve(&c, &Kernel::Gaussian { sigma_ev: 0.002 }).unwrap();
        for i in 40..c.energy_ev.len() - 40 {
            let rel = (out.sigma_conv_cm2[i] - c.sigma_raw_cm2[i]).abs() / c.sigma_raw_cm2[i];
            assert!(rel < 0.03, "bin {i}: rel {rel}");
        }
    }

    #[test]
    fn narrow_resonance_smeared_to_gaussian_peak() {
        // one occupied bin of area A becomes a Gaussian of height
        // A / (sqrt(2 pi) sigma)
        let e_a = 0.3 / HARTREE_TO_EV; // 0.3 eV in hartree
        let gamma = 5e-7;
        let c = capture_xsec(&[(e_a, gamma)], 0.001, 0.6, 0.2, meta()).unwrap();
        let sigma_e = 0.001;
        let out = convolve(&c, &Kernel::Gaussian { sigma_ev: sigma_e }).unwrap();
        let area: f64 = c.sigma_raw_cm2.iter().sum::<f64>() * c.bin_ev;
        let peak = out
            .sigma_conv_cm2
            .iter()
            .cloned()
            .fold(0.0_f64, f64::max);
        let want = area / ((2.0 * std::f64::consts::PI).sqrt() * sigma_e);
        assert_relative_eq!(peak, want, max_relative = 0.02);
    }

    #[test]
    fn convolution_conserves_area_for_interior_kernels() {
        let mut c = capture_xsec(&[], 0.05, 0.45, 2.0, meta()).unwrap();
        let n = c.energy_ev.len();
        // localized bump well away from both edges
        for i in 0..n {
            let x: f64 = (c.energy_ev[i] - 0.25) / 0.02;
            c.sigma_raw_cm2[i] = 2e-15 * (-x * x).exp();
        }
        for kernel in [
            Kernel::Gaussian { sigma_ev: 0.003 },
            Kernel::Maxwell {
                t_par_ev: 0.0005,
                t_perp_ev: 0.003,
            },
        ] {
            let out = convolve(&c, &kernel).unwrap();
            let a_raw: f64 = c.sigma_raw_cm2.iter().sum::<f64>() * c.bin_ev;
            let a_conv: f64 = out.sigma_conv_cm2.iter().sum::<f64>() * c.bin_ev;
            assert!(
                ((a_conv - a_raw) / a_raw).abs() < 1e-3,
                "{kernel:?}: area {a_conv:.6e} vs {a_raw:.6e}"
            );
        }
    }

    #[test]
    fn maxwell_kernel_is_normalized_where_interior() {
        let kernel = Kernel::Maxwell {
            t_par_ev: 0.0005,
            t_perp_ev: 0.003,
        };
        // mass over a wide fine grid at an interior detuning energy
        let e = 0.3;
        let n = 4000;
        let (lo, hi) = (0.2, 0.4);
        let h = (hi - lo) / n as f64;
        let mut mass = 0.0;
        for i in 0..=n {
            let ep = lo + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 * h } else { h };
            mass += w * kernel.density(e, ep);
        }
        assert_relative_eq!(mass, 1.0, max_relative = 1e-6);
    }

    #[test]
    fn undersampled_kernel_rejected() {
        let mut c = capture_xsec(&[], 0.001, 0.5, 5.0, meta()).unwrap();
        for s in c.sigma_raw_cm2.iter_mut() {
            *s = 1e-15;
        }
        // kernel much narrower than the 5 meV bins: on-grid mass is
        // wrong for interior rows
        let r = convolve(&c, &Kernel::Gaussian { sigma_ev: 0.0002 });
        assert!(matches!(r, Err(Error::KernelMass(_))));
    }
}
