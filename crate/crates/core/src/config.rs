//! Run configuration: every knob of the pipeline in one validated,
//! schema-checked structure. Unknown keys are rejected on parse.
//!
//! The bundled defaults describe the model system the crate ships
//! with: a 3.9 debye dipole, defect surfaces around the linear
//! reference geometry (R_CO = 2.00, R_GH = 3.27 bohr), Renner-Teller
//! strengths, and a bend/stretch vibrational model. All model values
//! live here, not in code paths.

use crate::bodyframe::{DefectSurfaceSet, RennerTellerParams, SurfacePoly};
use crate::error::{Error, Result};
use crate::longrange::ChannelLabel;
use serde::{Deserialize, Serialize};

/// Model vibrational Hamiltonian parameters: a two-dimensional bend
/// oscillator (theta, phi) with an m_phi centrifugal term and a
/// quartic correction, times a harmonic R_CO stretch, all at fixed
/// R_GH (adiabatic dissociation coordinate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VibrationConfig {
    /// Harmonic bend frequency (hartree).
    pub omega_bend: f64,
    /// Effective bend inertia (a.u.).
    pub bend_inertia: f64,
    /// Quartic bend potential coefficient (hartree / rad^4).
    pub quartic_bend: f64,
    /// Harmonic stretch frequency (hartree).
    pub omega_stretch: f64,
    /// Reduced stretch mass (a.u.).
    pub stretch_mass: f64,
    /// Curvature of the adiabatic baseline along R_GH (hartree/bohr^2).
    pub r_gh_curvature: f64,
    /// Bend basis size per m_phi block.
    pub bend_basis: usize,
    /// Stretch basis size.
    pub stretch_basis: usize,
}

/// Channel retention for the frame transformation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    /// Vibrational states kept per electronic channel.
    pub vib_per_channel: usize,
    /// Total projection block (m_phi + m_elec) the pipeline works in.
    pub total_projection: i32,
}

/// Grids and quadrature orders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Adiabatic dissociation coordinate the pipeline runs at (bohr).
    pub r_gh: f64,
    /// Collision-energy window (eV above the lowest ionic state).
    pub energy_min_ev: f64,
    pub energy_max_ev: f64,
    /// Base eigenphase scan points over the window.
    pub scan_points: usize,
    /// Gauss-Legendre nodes in theta for the frame transform.
    pub theta_nodes: usize,
    /// Gauss-Legendre nodes in R_CO.
    pub rco_nodes: usize,
    /// Uniform azimuthal nodes.
    pub phi_nodes: usize,
    /// Effective-quantum-number ceiling per closed channel in the
    /// resonance search; the Rydberg pileup above it is unresolved.
    pub nu_max: f64,
}

/// Energy grid for the `beta` command (hartree).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaScanConfig {
    pub eps_min: f64,
    pub eps_max: f64,
    pub points: usize,
}

/// Bound-state request for the `bound` command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundScanConfig {
    pub channel: ChannelLabel,
    pub mu: f64,
    pub n_min: i32,
    pub n_max: i32,
}

/// Bend-angle grid for the `defects` and `kmatrix` commands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefectScanConfig {
    pub theta_min: f64,
    pub theta_max: f64,
    pub points: usize,
}

/// Convolution kernel for the cross-section command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum KernelConfig {
    /// Gaussian of width sigma_e (meV).
    Gaussian { sigma_e_mev: f64 },
    /// Anisotropic Maxwell beam distribution (meV temperatures).
    Maxwell { t_par_mev: f64, t_perp_mev: f64 },
}

/// Cross-section assembly parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XsecConfig {
    /// Capture-model bin width (meV).
    pub bin_mev: f64,
    pub kernel: KernelConfig,
}

/// Radial-oracle grids for the `bound --oracle` comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    /// Inner boundary for regular (c >= -1/4) problems (bohr).
    pub r_min: f64,
    /// Hard-wall radius for the attractive complex-lambda branch.
    pub wall_r_min: f64,
    /// Starting grid size; the solver refines until converged.
    pub n_points: usize,
}

/// The complete run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Permanent dipole moment (debye).
    pub dipole_debye: f64,
    pub surfaces: DefectSurfaceSet,
    pub renner_teller: RennerTellerParams,
    pub vibration: VibrationConfig,
    pub channels: ChannelConfig,
    pub grids: GridConfig,
    pub beta_scan: BetaScanConfig,
    pub bound_scan: BoundScanConfig,
    pub defect_scan: DefectScanConfig,
    pub xsec: XsecConfig,
    pub oracle: OracleConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dipole_debye: 3.9,
            surfaces: DefectSurfaceSet {
                r_co_ref: 2.00,
                r_gh_ref: 3.27,
                stilde: SurfacePoly {
                    mu0: 0.84073,
                    shift_off: 0.29854,
                    c_rco: -0.06,
                    c_rco2: 0.0,
                    c_rgh: 0.03,
                    c_theta2: -0.03,
                    c_theta4: 0.0,
                },
                ppi_minus: SurfacePoly {
                    mu0: 0.65,
                    shift_off: 0.0,
                    c_rco: -0.04,
                    c_rco2: 0.0,
                    c_rgh: 0.02,
                    c_theta2: 0.110,
                    c_theta4: -0.020,
                },
                ptilde: SurfacePoly {
                    mu0: 0.15615586615,
                    shift_off: -0.3123117323,
                    c_rco: -0.08,
                    c_rco2: 0.0,
                    c_rgh: 0.025,
                    c_theta2: 0.060,
                    c_theta4: 0.0,
                },
                ppi_plus: SurfacePoly {
                    mu0: 0.65,
                    shift_off: 0.0,
                    c_rco: -0.04,
                    c_rco2: 0.0,
                    c_rgh: 0.02,
                    c_theta2: 0.040,
                    c_theta4: 0.0,
                },
                dsigma: SurfacePoly {
                    mu0: 0.052,
                    shift_off: 0.0,
                    c_rco: -0.02,
                    c_rco2: 0.0,
                    c_rgh: 0.01,
                    c_theta2: 0.020,
                    c_theta4: 0.0,
                },
            },
            renner_teller: RennerTellerParams {
                gamma0: 0.24,
                delta0: 0.10,
            },
            vibration: VibrationConfig {
                omega_bend: 0.004,
                bend_inertia: 15_000.0,
                quartic_bend: 0.002,
                omega_stretch: 0.010,
                stretch_mass: 12_590.0,
                r_gh_curvature: 0.05,
                bend_basis: 16,
                stretch_basis: 8,
            },
            channels: ChannelConfig {
                vib_per_channel: 6,
                total_projection: 0,
            },
            grids: GridConfig {
                r_gh: 3.27,
                energy_min_ev: 0.001,
                energy_max_ev: 0.6,
                scan_points: 6000,
                theta_nodes: 32,
                rco_nodes: 40,
                phi_nodes: 8,
                nu_max: 11.0,
            },
            beta_scan: BetaScanConfig {
                eps_min: -0.5,
                eps_max: -0.001,
                points: 200,
            },
            bound_scan: BoundScanConfig {
                channel: ChannelLabel::Ptilde,
                mu: 0.0,
                n_min: 0,
                n_max: 5,
            },
            defect_scan: DefectScanConfig {
                theta_min: 0.0,
                theta_max: 0.6,
                points: 61,
            },
            xsec: XsecConfig {
                bin_mev: 1.0,
                kernel: KernelConfig::Gaussian { sigma_e_mev: 3.0 },
            },
            oracle: OracleConfig {
                r_min: 0.01,
                wall_r_min: 0.1,
                n_points: 4001,
            },
        }
    }
}

impl RunConfig {
    /// Full validation; every command runs this before computing.
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be finite, got {v}")))
            }
        };
        finite("dipole_debye", self.dipole_debye)?;
        if self.dipole_debye < 0.0 {
            return Err(Error::Config("dipole_debye must be >= 0".into()));
        }
        self.surfaces.validate()?;
        for (name, v) in [
            ("vibration.omega_bend", self.vibration.omega_bend),
            ("vibration.bend_inertia", self.vibration.bend_inertia),
            ("vibration.omega_stretch", self.vibration.omega_stretch),
            ("vibration.stretch_mass", self.vibration.stretch_mass),
        ] {
            finite(name, v)?;
            if v <= 0.0 {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        finite("vibration.quartic_bend", self.vibration.quartic_bend)?;
        finite("vibration.r_gh_curvature", self.vibration.r_gh_curvature)?;
        if self.vibration.bend_basis < 4 || self.vibration.stretch_basis < 2 {
            return Err(Error::Config("vibrational basis too small".into()));
        }
        if self.channels.vib_per_channel == 0 {
            return Err(Error::Config("vib_per_channel must be >= 1".into()));
        }
        if !(self.grids.energy_min_ev > 0.0 && self.grids.energy_max_ev > self.grids.energy_min_ev)
        {
            return Err(Error::Config(
                "energy window must satisfy 0 < min < max".into(),
            ));
        }
        if self.grids.scan_points < 100 {
            return Err(Error::Config("scan_points must be >= 100".into()));
        }
        if self.grids.theta_nodes < 4 || self.grids.rco_nodes < 2 || self.grids.phi_nodes < 4 {
            return Err(Error::Config("quadrature orders too small".into()));
        }
        if self.grids.nu_max < 3.0 {
            return Err(Error::Config("nu_max must be >= 3".into()));
        }
        if !(self.beta_scan.eps_min < self.beta_scan.eps_max && self.beta_scan.eps_max < 0.0) {
            return Err(Error::Config(
                "beta scan window must satisfy eps_min < eps_max < 0".into(),
            ));
        }
        if self.beta_scan.points < 2 || self.defect_scan.points < 2 {
            return Err(Error::Config("scan grids need at least 2 points".into()));
        }
        if self.bound_scan.n_min > self.bound_scan.n_max {
            return Err(Error::Config("bound scan needs n_min <= n_max".into()));
        }
        if !(0.0..1.0).contains(&self.bound_scan.mu) {
            return Err(Error::Config("bound scan mu must be in [0, 1)".into()));
        }
        if self.defect_scan.theta_min < 0.0 || self.defect_scan.theta_max <= self.defect_scan.theta_min {
            return Err(Error::Config("defect scan needs 0 <= theta_min < theta_max".into()));
        }
        if self.xsec.bin_mev <= 0.0 {
            return Err(Error::Config("xsec bin width must be positive".into()));
        }
        match self.xsec.kernel {
            KernelConfig::Gaussian { sigma_e_mev } => {
                if sigma_e_mev <= 0.0 {
                    return Err(Error::Config("gaussian kernel width must be positive".into()));
                }
            }
            KernelConfig::Maxwell {
                t_par_mev,
                t_perp_mev,
            } => {
                if t_par_mev <= 0.0 || t_perp_mev <= 0.0 {
                    return Err(Error::Config("maxwell temperatures must be positive".into()));
                }
            }
        }
        if !(self.oracle.r_min > 0.0 && self.oracle.wall_r_min > 0.0) {
            return Err(Error::Config("oracle radii must be positive".into()));
        }
        if self.oracle.n_points < 1000 {
            return Err(Error::Config("oracle n_points must be >= 1000".into()));
        }
        Ok(())
    }
}
