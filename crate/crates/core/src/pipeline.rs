//! End-to-end orchestration: one validated configuration drives
//! channels -> defects -> K(Q) -> frame transformation -> resonances
//! -> cross section, with no hidden state.
//!
//! Energy bookkeeping: the ionic ground vibrational state at the
//! configured R_GH is the energy zero, so resonance positions and
//! cross-section grids are electron collision energies.
//!
//! In the M = 0 block the two pi channel stacks (ppi-, m_phi = +1)
//! and (ppi+, m_phi = -1) are exactly degenerate and the vibronic K
//! commutes with their swap; the pipeline rotates them into symmetric
//! and antisymmetric combinations and searches each block separately.
//! Antisymmetric pi Rydberg states below the lowest pi threshold
//! decouple exactly in this model (zero width) and do not enter the
//! capture model.

use crate::bodyframe::{eval_defects, kmatrix_bodyframe, GeometryQ};
use crate::config::RunConfig;
use crate::constants::HARTREE_TO_EV;
use crate::dynamics::{find_resonances, EliminationProblem, ScatteringChannel, SearchSpec};
use crate::error::{Error, Result};
use crate::framexform::{solve_vibrational, vibronic_k, AdiabaticSpectrum, QuadratureSpec, VibronicK};
use crate::gqdt;
use crate::longrange::{
    build_sigma_block, channel_lambdas, diagonalize_block, ChannelLabel, DipoleStrength,
};
use crate::radialoracle::{shoot_bound_states, RadialProblem};
use crate::xsec::{capture_xsec, convolve, CrossSectionCurve, Kernel, XsecMetadata};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// One row of the `channels` table.
#[derive(Debug, Clone)]
pub struct ChannelRow {
    pub label: ChannelLabel,
    pub lambda: Complex64,
    pub centrifugal_coefficient: f64,
    pub mixing_fraction: f64,
}

/// One row of the `beta` scan.
#[derive(Debug, Clone, Copy)]
pub struct BetaRow {
    pub eps: f64,
    pub beta_stilde: f64,
    pub beta_ppi: f64,
    pub beta_ptilde: f64,
    pub beta_dsigma: f64,
}

/// One row of the `bound` table.
#[derive(Debug, Clone, Copy)]
pub struct BoundRow {
    pub n: i32,
    pub energy: f64,
    pub oracle_energy: Option<f64>,
}

/// One row of the `defects` scan.
#[derive(Debug, Clone, Copy)]
pub struct DefectRow {
    pub theta: f64,
    pub mu: [f64; 5],
}

/// One row of the `kmatrix` scan: the 15 upper-triangle elements in
/// row-major order.
#[derive(Debug, Clone, Copy)]
pub struct KmatrixRow {
    pub theta: f64,
    pub upper: [f64; 15],
}

/// One fitted resonance in the collision frame.
#[derive(Debug, Clone)]
pub struct ResonanceRow {
    /// Position above the ionic ground state (hartree).
    pub energy: f64,
    pub gamma: f64,
    pub channel: String,
    pub fit_residual: f64,
    pub overlapping: bool,
}

/// A ready-to-run pipeline: validated config, dipole toggle, config
/// hash carried into every output.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: RunConfig,
    pub dipole_on: bool,
    pub config_hash: String,
    dipole: DipoleStrength,
}

impl Pipeline {
    pub fn new(config: RunConfig, dipole_on: bool, config_hash: impl Into<String>) -> Result<Self> {
        config.validate()?;
        let dipole = DipoleStrength::from_debye(config.dipole_debye)?;
        Ok(Self {
            config,
            dipole_on,
            config_hash: config_hash.into(),
            dipole,
        })
    }

    /// Effective lambda of each of the five channels.
    pub fn lambdas(&self) -> [Complex64; 5] {
        channel_lambdas(&self.dipole, self.dipole_on)
    }

    /// The `channels` table.
    pub fn channel_table(&self) -> Vec<ChannelRow> {
        let lams = self.lambdas();
        let mixing = if self.dipole_on {
            diagonalize_block(&build_sigma_block(&self.dipole)).0.mixing_fraction
        } else {
            1.0
        };
        ChannelLabel::ALL
            .iter()
            .zip(lams.iter())
            .map(|(label, lam)| ChannelRow {
                label: *label,
                lambda: *lam,
                centrifugal_coefficient: (lam * (lam + 1.0)).re,
                mixing_fraction: match label {
                    ChannelLabel::Stilde | ChannelLabel::Ptilde => mixing,
                    _ => 1.0,
                },
            })
            .collect()
    }

    /// Generalized beta over the configured closed-channel energy grid.
    pub fn beta_grid(&self) -> Result<Vec<BetaRow>> {
        let scan = self.config.beta_scan;
        let lams = self.lambdas();
        let mut rows = Vec::with_capacity(scan.points);
        for i in 0..scan.points {
            let eps = scan.eps_min
                + (scan.eps_max - scan.eps_min) * i as f64 / (scan.points - 1) as f64;
            rows.push(BetaRow {
                eps,
                beta_stilde: gqdt::beta_at(eps, lams[0])?.beta,
                beta_ppi: gqdt::beta_at(eps, lams[1])?.beta,
                beta_ptilde: gqdt::beta_at(eps, lams[2])?.beta,
                beta_dsigma: gqdt::beta_at(eps, lams[4])?.beta,
            });
        }
        Ok(rows)
    }

    /// Bound states of the configured channel; with `oracle` the same
    /// spectrum is recomputed by direct radial integration.
    ///
    /// For real-lambda channels the comparison runs at mu = 0 (the
    /// pure long-range spectrum the oracle produces with its regular
    /// inner boundary). For the complex-lambda channel the oracle uses
    /// the hard wall; the wall-induced defect is read off the deepest
    /// state found and the phase condition predicts the rest.
    pub fn bound_table(&self, oracle: bool) -> Result<Vec<BoundRow>> {
        let scan = self.config.bound_scan;
        let lams = self.lambdas();
        let idx = ChannelLabel::ALL
            .iter()
            .position(|c| *c == scan.channel)
            .expect("all labels mapped");
        let lam = lams[idx];
        let energies = gqdt::bound_energies(lam, scan.mu, scan.n_min..=scan.n_max)?;
        if !oracle {
            return Ok(energies
                .iter()
                .zip(scan.n_min..=scan.n_max)
                .map(|(e, n)| BoundRow {
                    n,
                    energy: *e,
                    oracle_energy: None,
                })
                .collect());
        }

        let c = (lam * (lam + 1.0)).re;
        if lam.im == 0.0 {
            if scan.mu != 0.0 {
                return Err(Error::Config(
                    "oracle comparison is defined for mu = 0".into(),
                ));
            }
            let window = (energies[0] * 1.2, energies[energies.len() - 1] * 0.8);
            let nu_hi = (-2.0 * window.1).powf(-0.5);
            let p = RadialProblem::new(
                c,
                self.config.oracle.r_min,
                20.0 * nu_hi,
                self.config.oracle.n_points,
                window.0,
            )?;
            let found = shoot_bound_states(&p, window)?;
            return Ok(energies
                .iter()
                .zip(scan.n_min..=scan.n_max)
                .map(|(e, n)| {
                    let oracle_energy = found
                        .iter()
                        .min_by(|a, b| {
                            (*a - e).abs().partial_cmp(&(*b - e).abs()).unwrap()
                        })
                        .copied();
                    BoundRow {
                        n,
                        energy: *e,
                        oracle_energy,
                    }
                })
                .collect());
        }

        // complex lambda: hard-wall oracle; the wall fixes the defect
        let window = (energies[0] * 1.4, energies[energies.len() - 1] * 0.7);
        let nu_hi = (-2.0 * window.1).powf(-0.5);
        let p = RadialProblem::new(
            c,
            self.config.oracle.wall_r_min,
            20.0 * nu_hi,
            self.config.oracle.n_points,
            window.0,
        )?;
        let found = shoot_bound_states(&p, window)?;
        let mu_wall = gqdt::quantum_defect_from_energy(found[0], 0, lam)?;
        let predicted = gqdt::bound_energies(lam, mu_wall, 0..=(found.len() as i32 - 1))?;
        Ok(predicted
            .iter()
            .zip(found.iter())
            .enumerate()
            .map(|(n, (e, f))| BoundRow {
                n: n as i32,
                energy: *e,
                oracle_energy: Some(*f),
            })
            .collect())
    }

    /// Defect surfaces along the configured bend scan at the reference
    /// stretch geometry.
    pub fn defect_grid(&self) -> Result<Vec<DefectRow>> {
        let scan = self.config.defect_scan;
        let s = &self.config.surfaces;
        let mut rows = Vec::with_capacity(scan.points);
        for i in 0..scan.points {
            let theta = scan.theta_min
                + (scan.theta_max - scan.theta_min) * i as f64 / (scan.points - 1) as f64;
            let q = GeometryQ::new(s.r_co_ref, s.r_gh_ref, theta, 0.0)?;
            rows.push(DefectRow {
                theta,
                mu: eval_defects(s, &q, self.dipole_on),
            });
        }
        Ok(rows)
    }

    /// Body-frame K along the bend scan; upper triangle per row.
    pub fn kmatrix_grid(&self) -> Result<Vec<KmatrixRow>> {
        let scan = self.config.defect_scan;
        let s = &self.config.surfaces;
        let mut rows = Vec::with_capacity(scan.points);
        for i in 0..scan.points {
            let theta = scan.theta_min
                + (scan.theta_max - scan.theta_min) * i as f64 / (scan.points - 1) as f64;
            let q = GeometryQ::new(s.r_co_ref, s.r_gh_ref, theta, 0.0)?;
            let k = kmatrix_bodyframe(s, &self.config.renner_teller, &q, &self.dipole, self.dipole_on)?;
            let mut upper = [0.0; 15];
            let mut w = 0;
            for a in 0..5 {
                for b in a..5 {
                    upper[w] = k.matrix[(a, b)];
                    w += 1;
                }
            }
            rows.push(KmatrixRow { theta, upper });
        }
        Ok(rows)
    }

    /// Vibrational spectra for every m_phi block the total projection
    /// needs.
    pub fn spectrum(&self) -> Result<AdiabaticSpectrum> {
        let cfg = &self.config;
        let m0 = cfg.channels.total_projection;
        let mut needed: Vec<i32> = ChannelLabel::ALL
            .iter()
            .map(|ch| m0 - ch.m_elec())
            .collect();
        needed.sort_unstable();
        needed.dedup();
        let mut merged: Option<AdiabaticSpectrum> = None;
        for m in needed {
            let one = solve_vibrational(
                &cfg.vibration,
                cfg.grids.r_gh,
                cfg.surfaces.r_gh_ref,
                cfg.surfaces.r_co_ref,
                cfg.vibration.bend_basis,
                m,
            )?;
            match merged.as_mut() {
                None => merged = Some(one),
                Some(s) => s.merge(one),
            }
        }
        Ok(merged.expect("at least one block"))
    }

    /// The vibronic reaction matrix of the configured block.
    pub fn vibronic(&self) -> Result<VibronicK> {
        let spectrum = self.spectrum()?;
        let cfg = &self.config;
        let surfaces = cfg.surfaces;
        let rt = cfg.renner_teller;
        let dipole = self.dipole;
        let on = self.dipole_on;
        let kernel = move |q: &GeometryQ| Ok(kmatrix_bodyframe(&surfaces, &rt, q, &dipole, on)?.matrix);
        vibronic_k(
            kernel,
            &spectrum,
            &self.lambdas(),
            cfg.channels.total_projection,
            cfg.channels.vib_per_channel,
            QuadratureSpec {
                theta_nodes: cfg.grids.theta_nodes,
                rco_nodes: cfg.grids.rco_nodes,
                phi_nodes: cfg.grids.phi_nodes,
            },
        )
    }

    /// Resonances in the configured collision-energy window.
    pub fn resonances(&self) -> Result<Vec<ResonanceRow>> {
        let g = self.config.grids;
        self.resonances_in_window(g.energy_min_ev, g.energy_max_ev)
    }

    fn resonances_in_window(&self, e_min_ev: f64, e_max_ev: f64) -> Result<Vec<ResonanceRow>> {
        let vk = self.vibronic()?;
        let ground = vk
            .channels
            .iter()
            .map(|c| c.threshold)
            .fold(f64::INFINITY, f64::min);
        let blocks = parity_blocks(&vk)?;
        let spec = SearchSpec {
            scan_points: self.config.grids.scan_points,
            nu_max: self.config.grids.nu_max,
        };
        let mut rows = Vec::new();
        for block in &blocks {
            let channels: Vec<ScatteringChannel> = block
                .thresholds
                .iter()
                .zip(&block.lambdas)
                .map(|(t, l)| ScatteringChannel {
                    threshold: t - ground,
                    lambda: *l,
                })
                .collect();
            let lowest = channels
                .iter()
                .map(|c| c.threshold)
                .fold(f64::INFINITY, f64::min);
            let lo = (e_min_ev / HARTREE_TO_EV).max(lowest + 1e-9);
            let hi = e_max_ev / HARTREE_TO_EV;
            if lo >= hi {
                continue;
            }
            let problem = EliminationProblem::new(block.k.clone(), channels)?;
            for r in find_resonances(&problem, (lo, hi), spec)? {
                rows.push(ResonanceRow {
                    energy: r.position,
                    gamma: r.width,
                    channel: block.names[r.parent_channel].clone(),
                    fit_residual: r.fit_quality,
                    overlapping: r.overlapping,
                });
            }
        }
        rows.sort_by(|a, b| a.energy.partial_cmp(&b.energy).unwrap());
        Ok(rows)
    }

    /// Raw and convolved DR cross section over the configured window.
    pub fn cross_section(&self) -> Result<CrossSectionCurve> {
        let g = self.config.grids;
        let kernel = Kernel::from_config(&self.config.xsec.kernel);
        let margin = 8.0 * kernel.spread_ev(g.energy_max_ev);
        let lo_ext = (g.energy_min_ev - 8.0 * kernel.spread_ev(g.energy_min_ev)).max(1e-5);
        let hi_ext = g.energy_max_ev + margin;
        let resonances = self.resonances_in_window(lo_ext, hi_ext)?;
        let pairs: Vec<(f64, f64)> = resonances.iter().map(|r| (r.energy, r.gamma)).collect();
        let meta = XsecMetadata {
            dipole_on: self.dipole_on,
            config_hash: self.config_hash.clone(),
        };
        let raw = capture_xsec(&pairs, lo_ext, hi_ext, self.config.xsec.bin_mev, meta)?;
        let conv = convolve(&raw, &kernel)?;
        // crop back to the requested window
        let keep: Vec<usize> = conv
            .energy_ev
            .iter()
            .enumerate()
            .filter(|(_, e)| **e >= g.energy_min_ev && **e <= g.energy_max_ev)
            .map(|(i, _)| i)
            .collect();
        Ok(CrossSectionCurve {
            energy_ev: keep.iter().map(|&i| conv.energy_ev[i]).collect(),
            sigma_raw_cm2: keep.iter().map(|&i| conv.sigma_raw_cm2[i]).collect(),
            sigma_conv_cm2: keep.iter().map(|&i| conv.sigma_conv_cm2[i]).collect(),
            bin_ev: conv.bin_ev,
            metadata: conv.metadata,
        })
    }
}

/// One decoupled block of the vibronic K after the parity reduction.
struct ParityBlock {
    k: DMatrix<f64>,
    thresholds: Vec<f64>,
    lambdas: Vec<Complex64>,
    names: Vec<String>,
}

/// Rotate exactly degenerate (ppi-, m) / (ppi+, -m) pairs into
/// symmetric/antisymmetric combinations and split the matrix into the
/// decoupled blocks. Returns a single block when no pairs exist.
fn parity_blocks(vk: &VibronicK) -> Result<Vec<ParityBlock>> {
    let n = vk.channels.len();
    let mut pair_of: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let ci = vk.channels[i].index;
        if ci.channel == ChannelLabel::PpiMinus {
            for j in 0..n {
                let cj = vk.channels[j].index;
                if cj.channel == ChannelLabel::PpiPlus && cj.m_phi == -ci.m_phi && cj.l == ci.l {
                    pair_of[i] = Some(j);
                    pair_of[j] = Some(i);
                }
            }
        }
    }
    let paired = pair_of.iter().filter(|p| p.is_some()).count();
    if paired == 0 {
        let names = vk
            .channels
            .iter()
            .map(|c| format!("{}[m={},l={}]", c.index.channel, c.index.m_phi, c.index.l))
            .collect();
        return Ok(vec![ParityBlock {
            k: vk.matrix.clone(),
            thresholds: vk.channels.iter().map(|c| c.threshold).collect(),
            lambdas: vk.channels.iter().map(|c| c.lambda).collect(),
            names,
        }]);
    }

    // orthogonal rotation into sym/antisym combinations
    let mut p = DMatrix::<f64>::zeros(n, n);
    let s = 1.0 / 2.0_f64.sqrt();
    let mut sym_idx = Vec::new();
    let mut asym_idx = Vec::new();
    let mut names = vec![String::new(); n];
    for i in 0..n {
        match pair_of[i] {
            None => {
                p[(i, i)] = 1.0;
                sym_idx.push(i);
                let c = vk.channels[i].index;
                names[i] = format!("{}[m={},l={}]", c.channel, c.m_phi, c.l);
            }
            Some(j) if vk.channels[i].index.channel == ChannelLabel::PpiMinus => {
                // row i becomes the symmetric, row j the antisymmetric
                p[(i, i)] = s;
                p[(i, j)] = s;
                p[(j, i)] = s;
                p[(j, j)] = -s;
                sym_idx.push(i);
                asym_idx.push(j);
                let c = vk.channels[i].index;
                names[i] = format!("ppi_s[l={}]", c.l);
                names[j] = format!("ppi_a[l={}]", c.l);
                // degeneracy sanity
                if (vk.channels[i].threshold - vk.channels[j].threshold).abs() > 1e-10 {
                    return Err(Error::Config(
                        "pi pair thresholds not degenerate; parity reduction invalid".into(),
                    ));
                }
            }
            Some(_) => {}
        }
    }
    let rotated = &p * &vk.matrix * p.transpose();
    // the blocks must decouple exactly (swap symmetry of the model)
    for &i in &sym_idx {
        for &j in &asym_idx {
            if rotated[(i, j)].abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "parity blocks coupled at ({i},{j}): {:.3e}",
                    rotated[(i, j)]
                )));
            }
        }
    }
    let extract = |idxs: &[usize]| ParityBlock {
        k: DMatrix::from_fn(idxs.len(), idxs.len(), |a, b| rotated[(idxs[a], idxs[b])]),
        thresholds: idxs.iter().map(|&i| vk.channels[i].threshold).collect(),
        lambdas: idxs.iter().map(|&i| vk.channels[i].lambda).collect(),
        names: idxs.iter().map(|&i| names[i].clone()).collect(),
    };
    Ok(vec![extract(&sym_idx), extract(&asym_idx)])
}
