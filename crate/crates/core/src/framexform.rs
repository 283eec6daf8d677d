//! Model ionic vibrational states at fixed R_GH and the vibrational
//! frame transformation of the body-frame reaction matrix.
//!
//! The vibrational model is a two-dimensional bend oscillator in
//! (theta, phi) with conserved projection m_phi, a quartic bend
//! correction, and a harmonic R_CO stretch, all riding on an
//! adiabatic baseline in R_GH. Bend blocks are diagonalized in the
//! isotropic-oscillator radial basis (associated Laguerre), where the
//! multiplication operator x = theta^2/b^2 is tridiagonal, so the
//! quartic term enters as b^4 x^2 without any quadrature.
//!
//! The frame transformation projects the geometry-dependent K onto
//! vibrational channel pairs,
//!
//!   K_{(m,l,i),(m',l',i')} = < Phi_{m,l} | K_{i,i'}(Q) | Phi_{m',l'} >,
//!
//! integrating over (R_CO, theta, phi). The phi integral enforces
//! conservation of the total projection M = m_phi + m_elec; theta and
//! R_CO use Gauss-Legendre nodes, doubled once to certify convergence.

use crate::bodyframe::{to_complex_pi_basis, GeometryQ};
use crate::config::VibrationConfig;
use crate::error::{Error, Result};
use crate::longrange::ChannelLabel;
use nalgebra::{Complex, DMatrix, Matrix5};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// One vibronic channel label: conserved projection, vibrational state
/// index within that projection, electronic channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VibChannelIndex {
    pub m_phi: i32,
    pub l: usize,
    pub channel: ChannelLabel,
}

/// Radial basis of the 2D bend oscillator for fixed |m|.
#[derive(Debug, Clone)]
struct BendBasis {
    m_abs: u32,
    /// Oscillator length in theta, b = (I omega)^{-1/2}.
    b: f64,
    size: usize,
}

impl BendBasis {
    /// Normalized basis value R_{k,m}(theta), measure theta d theta.
    fn value(&self, k: usize, theta: f64) -> f64 {
        let m = self.m_abs as f64;
        let x = theta * theta / (self.b * self.b);
        // log-normalization: N^2 = 2 k! / (b^2 Gamma(k + m + 1))
        let mut log_n2 = (2.0 / (self.b * self.b)).ln();
        for j in 1..=k {
            log_n2 += (j as f64).ln();
        }
        // minus log Gamma(k + m + 1) via the product over integer steps
        let mut log_gamma = 0.0;
        for j in 1..=(k + self.m_abs as usize) {
            log_gamma += (j as f64).ln();
        }
        log_n2 -= log_gamma;
        let lag = laguerre(k, m, x);
        (0.5 * log_n2).exp() * (theta / self.b).powi(self.m_abs as i32) * lag
            * (-0.5 * x).exp()
    }

    /// Tridiagonal matrix of x = theta^2 / b^2 in the normalized basis.
    fn x_matrix(&self) -> DMatrix<f64> {
        let n = self.size;
        let m = self.m_abs as f64;
        let mut x = DMatrix::zeros(n, n);
        for k in 0..n {
            let kf = k as f64;
            x[(k, k)] = 2.0 * kf + m + 1.0;
            if k + 1 < n {
                let off = -((kf + 1.0) * (kf + m + 1.0)).sqrt();
                x[(k, k + 1)] = off;
                x[(k + 1, k)] = off;
            }
        }
        x
    }
}

fn laguerre(k: usize, m: f64, x: f64) -> f64 {
    let mut l0 = 1.0;
    if k == 0 {
        return l0;
    }
    let mut l1 = 1.0 + m - x;
    for j in 1..k {
        let jf = j as f64;
        let l2 = ((2.0 * jf + 1.0 + m - x) * l1 - (jf + m) * l0) / (jf + 1.0);
        l0 = l1;
        l1 = l2;
    }
    l1
}

/// Bend eigenstates for one |m| block.
#[derive(Debug, Clone)]
struct BendBlock {
    energies: Vec<f64>,
    /// Column j = coefficients of eigenstate j over the Laguerre basis.
    coefs: DMatrix<f64>,
    basis: BendBasis,
}

fn solve_bend(vib: &VibrationConfig, m_abs: u32, basis_size: usize) -> BendBlock {
    let b = 1.0 / (vib.bend_inertia * vib.omega_bend).sqrt();
    let basis = BendBasis {
        m_abs,
        b,
        size: basis_size,
    };
    let x = basis.x_matrix();
    let mut h = &x * &x * (vib.quartic_bend * b.powi(4));
    for k in 0..basis_size {
        h[(k, k)] += vib.omega_bend * (2.0 * k as f64 + m_abs as f64 + 1.0);
    }
    let eig = h.symmetric_eigen();
    // sort ascending
    let mut idx: Vec<usize> = (0..basis_size).collect();
    idx.sort_by(|&a, &bb| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[bb]).unwrap());
    let mut energies = Vec::with_capacity(basis_size);
    let mut coefs = DMatrix::zeros(basis_size, basis_size);
    for (j, &src) in idx.iter().enumerate() {
        energies.push(eig.eigenvalues[src]);
        // sign convention: largest-magnitude coefficient positive
        let col = eig.eigenvectors.column(src);
        let lead = col.iter().cloned().fold(0.0_f64, |a, c| if c.abs() > a.abs() { c } else { a });
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        for r in 0..basis_size {
            coefs[(r, j)] = sign * col[r];
        }
    }
    BendBlock {
        energies,
        coefs,
        basis,
    }
}

/// One vibrational product state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VibState {
    /// Adiabatic energy U_{m_phi, l}(R_GH), hartree.
    pub energy: f64,
    /// Bend eigenstate index within the m block.
    pub bend_index: usize,
    /// Stretch quantum number.
    pub stretch_v: usize,
}

/// All vibrational states of one m_phi block, energy-ordered.
#[derive(Debug, Clone)]
pub struct VibBlock {
    pub m_phi: i32,
    pub states: Vec<VibState>,
    bend: BendBlock,
    /// Stretch oscillator length and center.
    stretch_a: f64,
    r_co_center: f64,
}

impl VibBlock {
    /// Value of the (theta, R_CO) part of product state l at a point;
    /// the e^{i m phi}/sqrt(2 pi) azimuthal factor is handled
    /// analytically by the frame transform.
    fn value(&self, l: usize, theta: f64, r_co: f64) -> f64 {
        let st = &self.states[l];
        let mut bend = 0.0;
        for k in 0..self.bend.basis.size {
            bend += self.bend.coefs[(k, st.bend_index)] * self.bend.basis.value(k, theta);
        }
        bend * hermite_ho(st.stretch_v, (r_co - self.r_co_center) / self.stretch_a)
            / self.stretch_a.sqrt()
    }
}

/// Normalized 1D harmonic-oscillator function in the scaled coordinate
/// xi (unit measure d xi).
fn hermite_ho(v: usize, xi: f64) -> f64 {
    let mut h0 = PI.powf(-0.25) * (-0.5 * xi * xi).exp();
    if v == 0 {
        return h0;
    }
    let mut h1 = 2.0_f64.sqrt() * xi * h0;
    for j in 1..v {
        let jf = j as f64;
        let h2 = ((2.0 / (jf + 1.0)).sqrt() * xi * h1) - ((jf / (jf + 1.0)).sqrt() * h0);
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// Adiabatic vibrational spectrum at fixed R_GH: energies and states
/// per m_phi block.
#[derive(Debug, Clone)]
pub struct AdiabaticSpectrum {
    pub r_gh: f64,
    pub blocks: BTreeMap<i32, VibBlock>,
}

impl AdiabaticSpectrum {
    pub fn energies(&self, m_phi: i32) -> Option<Vec<f64>> {
        self.blocks
            .get(&m_phi)
            .map(|b| b.states.iter().map(|s| s.energy).collect())
    }

    /// Merge blocks from another solve (same R_GH).
    pub fn merge(&mut self, other: AdiabaticSpectrum) {
        self.blocks.extend(other.blocks);
    }
}

/// Solve the model vibrational eigenproblem at fixed R_GH for one
/// m_phi block. Internally doubles the bend basis until the lowest
/// retained energies settle below 1e-8 hartree.
pub fn solve_vibrational(
    vib: &VibrationConfig,
    r_gh: f64,
    r_gh_ref: f64,
    r_co_center: f64,
    basis_size: usize,
    m_phi: i32,
) -> Result<AdiabaticSpectrum> {
    if basis_size < 4 {
        return Err(Error::Config(format!(
            "bend basis_size must be >= 4, got {basis_size}"
        )));
    }
    let n_check = 8;
    let mut prev: Option<Vec<f64>> = None;
    let mut size = basis_size;
    for _ in 0..4 {
        let block = assemble_block(vib, r_gh, r_gh_ref, r_co_center, size, m_phi);
        let probe: Vec<f64> = block
            .states
            .iter()
            .take(n_check)
            .map(|s| s.energy)
            .collect();
        if let Some(last) = prev {
            if last
                .iter()
                .zip(&probe)
                .all(|(a, b)| (a - b).abs() < 1e-8)
            {
                let mut blocks = BTreeMap::new();
                blocks.insert(m_phi, block);
                return Ok(AdiabaticSpectrum { r_gh, blocks });
            }
        }
        prev = Some(probe);
        size *= 2;
    }
    Err(Error::NoConvergence(
        "bend energies did not settle under basis doubling".into(),
    ))
}

fn assemble_block(
    vib: &VibrationConfig,
    r_gh: f64,
    r_gh_ref: f64,
    r_co_center: f64,
    bend_size: usize,
    m_phi: i32,
) -> VibBlock {
    let bend = solve_bend(vib, m_phi.unsigned_abs(), bend_size);
    let baseline = 0.5 * vib.r_gh_curvature * (r_gh - r_gh_ref).powi(2);
    let stretch_a = 1.0 / (vib.stretch_mass * vib.omega_stretch).sqrt();
    let mut states = Vec::new();
    for (kb, eb) in bend.energies.iter().enumerate() {
        for v in 0..vib.stretch_basis {
            states.push(VibState {
                energy: baseline + eb + vib.omega_stretch * (v as f64 + 0.5),
                bend_index: kb,
                stretch_v: v,
            });
        }
    }
    states.sort_by(|a, b| a.energy.partial_cmp(&b.energy).unwrap());
    VibBlock {
        m_phi,
        states,
        bend,
        stretch_a,
        r_co_center,
    }
}

/// One vibronic channel: label, threshold, and the lambda of its
/// electronic parent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VibronicChannel {
    pub index: VibChannelIndex,
    /// Threshold energy U_{m_phi, l}(R_GH), hartree.
    pub threshold: f64,
    pub lambda: Complex64,
}

/// The multichannel reaction matrix over vibronic channels at fixed
/// R_GH, block-diagonal in the total projection M.
#[derive(Debug, Clone)]
pub struct VibronicK {
    pub r_gh: f64,
    pub total_projection: i32,
    pub channels: Vec<VibronicChannel>,
    pub matrix: DMatrix<f64>,
}

/// Quadrature orders for the frame transformation.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    pub theta_nodes: usize,
    pub rco_nodes: usize,
    pub phi_nodes: usize,
}

/// Vibronic K over the M-block channel list:
/// channels (i, l) with m_phi = M - m_elec(i), l < vib_per_channel.
///
/// `kernel` maps geometry to the real body-frame K (its circular-basis
/// elements must carry the e^{i (m'-m) phi} azimuthal structure, as
/// [`crate::bodyframe::kmatrix_bodyframe`] does). Elements are
/// computed at the given quadrature order and once more at doubled
/// order; disagreement beyond 1e-8 is a convergence error.
pub fn vibronic_k<F>(
    kernel: F,
    spectrum: &AdiabaticSpectrum,
    lambdas: &[Complex64; 5],
    total_projection: i32,
    vib_per_channel: usize,
    quad: QuadratureSpec,
) -> Result<VibronicK>
where
    F: Fn(&GeometryQ) -> Result<Matrix5<f64>>,
{
    let coarse = vibronic_k_at_order(&kernel, spectrum, lambdas, total_projection, vib_per_channel, quad)?;
    let fine = vibronic_k_at_order(
        &kernel,
        spectrum,
        lambdas,
        total_projection,
        vib_per_channel,
        QuadratureSpec {
            theta_nodes: 2 * quad.theta_nodes,
            rco_nodes: 2 * quad.rco_nodes,
            phi_nodes: 2 * quad.phi_nodes,
        },
    )?;
    let mut worst = 0.0_f64;
    for i in 0..coarse.matrix.nrows() {
        for j in 0..coarse.matrix.ncols() {
            worst = worst.max((coarse.matrix[(i, j)] - fine.matrix[(i, j)]).abs());
        }
    }
    if worst > 1e-8 {
        return Err(Error::QuadratureNotConverged(worst));
    }
    Ok(fine)
}

fn vibronic_k_at_order<F>(
    kernel: &F,
    spectrum: &AdiabaticSpectrum,
    lambdas: &[Complex64; 5],
    total_projection: i32,
    vib_per_channel: usize,
    quad: QuadratureSpec,
) -> Result<VibronicK>
where
    F: Fn(&GeometryQ) -> Result<Matrix5<f64>>,
{
    // assemble the channel list
    let mut channels = Vec::new();
    for (ie, ch) in ChannelLabel::ALL.iter().enumerate() {
        let m_phi = total_projection - ch.m_elec();
        let block = spectrum.blocks.get(&m_phi).ok_or_else(|| {
            Error::Config(format!(
                "spectrum missing m_phi = {m_phi} block needed by channel {ch}"
            ))
        })?;
        for l in 0..vib_per_channel {
            if l >= block.states.len() {
                return Err(Error::Config(format!(
                    "vib_per_channel = {vib_per_channel} exceeds solved states"
                )));
            }
            channels.push(VibronicChannel {
                index: VibChannelIndex {
                    m_phi,
                    l,
                    channel: *ch,
                },
                threshold: block.states[l].energy,
                lambda: lambdas[ie],
            });
        }
    }

    // quadrature nodes, sized to the retained states: the product of
    // two bend states with peak x_t = 4k + 2|m| + 2 decays past
    // x_t + 8 sqrt(x_t) + 20 to below 1e-13
    let b = spectrum
        .blocks
        .values()
        .next()
        .expect("spectrum has at least one block")
        .bend
        .basis
        .b;
    let k_ret = channels
        .iter()
        .map(|c| spectrum.blocks[&c.index.m_phi].states[c.index.l].bend_index)
        .max()
        .unwrap_or(0);
    let x_t = 4.0 * (k_ret as f64 + 1.0) + 4.0;
    let x_max = x_t + 8.0 * x_t.sqrt() + 20.0;
    let theta_max = (b * x_max.sqrt()).min(PI);
    let (t_nodes, t_weights) = gauss_legendre(quad.theta_nodes, 0.0, theta_max);
    let some_block = spectrum.blocks.values().next().unwrap();
    let a = some_block.stretch_a;
    let r0 = some_block.r_co_center;
    let v_ret = channels
        .iter()
        .map(|c| spectrum.blocks[&c.index.m_phi].states[c.index.l].stretch_v)
        .max()
        .unwrap_or(0);
    let half_width = a * (2.0 * v_ret as f64 + 1.0 + 28.0).sqrt();
    let (r_nodes, r_weights) = gauss_legendre(quad.rco_nodes, r0 - half_width, r0 + half_width);

    // reduced electronic elements on the (theta, rco) nodes, with the
    // azimuthal phases stripped by the uniform phi sum
    let m_elec = [0i32, -1, 0, 1, 0];
    let n_phi = quad.phi_nodes;
    let mut reduced = vec![[[0.0_f64; 5]; 5]; t_nodes.len() * r_nodes.len()];
    for (a_i, &theta) in t_nodes.iter().enumerate() {
        for (b_i, &r_co) in r_nodes.iter().enumerate() {
            let mut acc = [[Complex::new(0.0, 0.0); 5]; 5];
            for p in 0..n_phi {
                let phi = 2.0 * PI * p as f64 / n_phi as f64;
                let q = GeometryQ {
                    r_co,
                    r_gh: spectrum.r_gh,
                    theta,
                    phi,
                };
                let kc = to_complex_pi_basis(&kernel(&q)?);
                for i in 0..5 {
                    for j in 0..5 {
                        let dm = (m_elec[j] - m_elec[i]) as f64;
                        let phase = Complex::new(0.0, -dm * phi).exp();
                        acc[i][j] += phase * kc[(i, j)];
                    }
                }
            }
            let cell = &mut reduced[a_i * r_nodes.len() + b_i];
            for i in 0..5 {
                for j in 0..5 {
                    let v = acc[i][j] / n_phi as f64;
                    if v.im.abs() > 1e-10 {
                        return Err(Error::NoConvergence(format!(
                            "reduced element ({i},{j}) has imaginary residue {:.3e}",
                            v.im
                        )));
                    }
                    cell[i][j] = v.re;
                }
            }
        }
    }

    // vibrational overlaps: precompute channel wavefunction values
    let n = channels.len();
    let mut values = vec![vec![0.0_f64; t_nodes.len() * r_nodes.len()]; n];
    for (c_i, ch) in channels.iter().enumerate() {
        let block = &spectrum.blocks[&ch.index.m_phi];
        for (a_i, &theta) in t_nodes.iter().enumerate() {
            for (b_i, &r_co) in r_nodes.iter().enumerate() {
                values[c_i][a_i * r_nodes.len() + b_i] = block.value(ch.index.l, theta, r_co);
            }
        }
    }

    let chan_pos = |label: ChannelLabel| ChannelLabel::ALL.iter().position(|c| *c == label).unwrap();
    let mut k = DMatrix::zeros(n, n);
    for ci in 0..n {
        for cj in ci..n {
            let (ii, jj) = (
                chan_pos(channels[ci].index.channel),
                chan_pos(channels[cj].index.channel),
            );
            // the azimuthal integral enforces M conservation; within a
            // fixed-M block it is identically satisfied
            let mut sum = 0.0;
            for (a_i, (&theta, &wt)) in t_nodes.iter().zip(&t_weights).enumerate() {
                for (b_i, &wr) in r_weights.iter().enumerate() {
                    let idx = a_i * r_nodes.len() + b_i;
                    sum += wt * wr * theta * values[ci][idx] * values[cj][idx] * reduced[idx][ii][jj];
                }
            }
            k[(ci, cj)] = sum;
            k[(cj, ci)] = sum;
        }
    }
    Ok(VibronicK {
        r_gh: spectrum.r_gh,
        total_projection,
        channels,
        matrix: k,
    })
}

/// Raw vibronic element between arbitrary (m, l, i) labels, with the
/// azimuthal integral done explicitly; off-block elements (different
/// total projection) vanish by the phi sum. Test and diagnostic hook.
pub fn vibronic_element<F>(
    kernel: &F,
    spectrum: &AdiabaticSpectrum,
    bra: VibChannelIndex,
    ket: VibChannelIndex,
    quad: QuadratureSpec,
) -> Result<f64>
where
    F: Fn(&GeometryQ) -> Result<Matrix5<f64>>,
{
    let chan_pos = |label: ChannelLabel| ChannelLabel::ALL.iter().position(|c| *c == label).unwrap();
    let (ii, jj) = (chan_pos(bra.channel), chan_pos(ket.channel));
    let bra_block = spectrum
        .blocks
        .get(&bra.m_phi)
        .ok_or_else(|| Error::Config(format!("missing m_phi = {}", bra.m_phi)))?;
    let ket_block = spectrum
        .blocks
        .get(&ket.m_phi)
        .ok_or_else(|| Error::Config(format!("missing m_phi = {}", ket.m_phi)))?;

    let b = bra_block.bend.basis.b;
    let k_ret = bra_block.states[bra.l]
        .bend_index
        .max(ket_block.states[ket.l].bend_index);
    let x_t = 4.0 * (k_ret as f64 + 1.0) + 4.0;
    let theta_max = (b * (x_t + 8.0 * x_t.sqrt() + 20.0).sqrt()).min(PI);
    let (t_nodes, t_weights) = gauss_legendre(quad.theta_nodes, 0.0, theta_max);
    let a = bra_block.stretch_a;
    let r0 = bra_block.r_co_center;
    let v_ret = bra_block.states[bra.l]
        .stretch_v
        .max(ket_block.states[ket.l].stretch_v);
    let half_width = a * (2.0 * v_ret as f64 + 1.0 + 28.0).sqrt();
    let (r_nodes, r_weights) = gauss_legendre(quad.rco_nodes, r0 - half_width, r0 + half_width);

    let mut total = Complex::new(0.0, 0.0);
    let n_phi = quad.phi_nodes;
    for (&theta, &wt) in t_nodes.iter().zip(&t_weights) {
        for (&r_co, &wr) in r_nodes.iter().zip(&r_weights) {
            let bra_v = bra_block.value(bra.l, theta, r_co);
            let ket_v = ket_block.value(ket.l, theta, r_co);
            let mut phi_sum = Complex::new(0.0, 0.0);
            for p in 0..n_phi {
                let phi = 2.0 * PI * p as f64 / n_phi as f64;
                let q = GeometryQ {
                    r_co,
                    r_gh: spectrum.r_gh,
                    theta,
                    phi,
                };
                let kc = to_complex_pi_basis(&kernel(&q)?);
                // e^{-i m phi} from the bra, e^{+i m' phi} from the ket
                let vib_phase = Complex::new(0.0, (ket.m_phi - bra.m_phi) as f64 * phi).exp();
                phi_sum += vib_phase * kc[(ii, jj)];
            }
            total += Complex::new(wt * wr * theta * bra_v * ket_v, 0.0) * phi_sum / n_phi as f64;
        }
    }
    Ok(total.re)
}

/// Gauss-Legendre nodes and weights on [a, b] by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-like initial guess
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_deriv(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    for i in 0..n {
        nodes[i] = mid + half * nodes[i];
        weights[i] *= half;
    }
    (nodes, weights)
}

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 1..n {
        let jf = j as f64;
        let p2 = ((2.0 * jf + 1.0) * x * p1 - jf * p0) / (jf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;
    use approx::assert_relative_eq;

    fn vib_harmonic() -> VibrationConfig {
        let mut v = RunConfig::default().vibration;
        v.quartic_bend = 0.0;
        v
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8, -1.0, 3.0);
        // exact for degree <= 15: check x^7 and x^12
        let int7: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(7)).sum();
        let exact7 = (3.0_f64.powi(8) - (-1.0_f64).powi(8)) / 8.0;
        assert_relative_eq!(int7, exact7, max_relative = 1e-13);
        let int12: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(12)).sum();
        let exact12 = (3.0_f64.powi(13) - (-1.0_f64).powi(13)) / 13.0;
        assert_relative_eq!(int12, exact12, max_relative = 1e-13);
    }

    #[test]
    fn harmonic_bend_ladder() {
        let vib = vib_harmonic();
        // m = 0: E = omega (2k + 1) -> omega (v2 + 1) for v2 = 0, 2, 4
        let spec = solve_vibrational(&vib, 3.27, 3.27, 2.0, 8, 0).unwrap();
        let block = &spec.blocks[&0];
        let bend0: Vec<f64> = block.bend.energies.iter().take(3).copied().collect();
        for (k, e) in bend0.iter().enumerate() {
            assert_relative_eq!(
                *e,
                vib.omega_bend * (2.0 * k as f64 + 1.0),
                max_relative = 1e-12
            );
        }
        // m = 1 lowest: omega * 2
        let spec1 = solve_vibrational(&vib, 3.27, 3.27, 2.0, 8, 1).unwrap();
        assert_relative_eq!(
            spec1.blocks[&1].bend.energies[0],
            2.0 * vib.omega_bend,
            max_relative = 1e-12
        );
        // product energies include the stretch zero point
        let e00 = spec.blocks[&0].states[0].energy;
        assert_relative_eq!(
            e00,
            vib.omega_bend + 0.5 * vib.omega_stretch,
            max_relative = 1e-12
        );
    }

    #[test]
    fn anharmonic_bend_matches_grid_oracle() {
        let vib = RunConfig::default().vibration;
        for m_abs in [0u32, 1] {
            let block = solve_bend(&vib, m_abs, 24);
            let oracle = bend_grid_oracle(&vib, m_abs, 4);
            for (got, want) in block.energies.iter().zip(&oracle) {
                assert_relative_eq!(got, want, max_relative = 1e-6);
            }
        }
    }

    /// Shooting oracle for the radial bend equation, independent of
    /// the Laguerre route: u = chi sqrt(theta) obeys u'' = W u with
    /// W = (m^2 - 1/4)/theta^2 + 2 I (V - E) and u ~ theta^{m + 1/2}
    /// at the origin. A hard wall deep in the forbidden region shifts
    /// eigenvalues only exponentially; bisection on the node count and
    /// endpoint sign pins each one.
    fn bend_grid_oracle(vib: &VibrationConfig, m_abs: u32, count: usize) -> Vec<f64> {
        let inertia = vib.bend_inertia;
        // Numerov loses accuracy stepping through the theta^{m+1/2}
        // boundary behavior, so the exact even-power Frobenius series
        // carries the solution to theta_0 and seeds the grid there.
        let theta_0 = 0.02;
        let theta_max = 1.4;
        let n = 28_000usize;
        let h = (theta_max - theta_0) / n as f64;
        let s = m_abs as f64 + 0.5;
        let a_quad = 0.5 * inertia * vib.omega_bend.powi(2);
        let b_quart = vib.quartic_bend;
        let potential = |t: f64| a_quad * t * t + b_quart * t.powi(4);
        // signed endpoint value and node count of the outward solution
        let shoot = |energy: f64| -> (usize, f64) {
            let w = |t: f64| (s * (s - 1.0)) / (t * t) + 2.0 * inertia * (potential(t) - energy);
            let seed = |t: f64| {
                let mut a = [0.0_f64; 14];
                a[0] = 1.0;
                let mut sum = 1.0;
                for k in 1..14 {
                    let kf = k as f64;
                    let denom = (s + 2.0 * kf) * (s + 2.0 * kf - 1.0) - s * (s - 1.0);
                    let mut rhs = -2.0 * inertia * energy * a[k - 1];
                    if k >= 2 {
                        rhs += 2.0 * inertia * a_quad * a[k - 2];
                    }
                    if k >= 3 {
                        rhs += 2.0 * inertia * b_quart * a[k - 3];
                    }
                    a[k] = rhs / denom;
                    sum += a[k] * t.powi(2 * k as i32);
                }
                t.powf(s) * sum
            };
            let mut um1 = seed(theta_0);
            let mut ui = seed(theta_0 + h);
            let mut nodes = 0usize;
            let h2 = h * h;
            for i in 1..n {
                let t = theta_0 + i as f64 * h;
                let a = 1.0 - h2 * w(t + h) / 12.0;
                let bmid = 2.0 * (1.0 + 5.0 * h2 * w(t) / 12.0) * ui;
                let c = (1.0 - h2 * w(t - h) / 12.0) * um1;
                let up1 = (bmid - c) / a;
                if up1 * ui < 0.0 {
                    nodes += 1;
                }
                um1 = ui;
                ui = up1;
                if ui.abs() > 1e250 {
                    um1 /= 1e250;
                    ui /= 1e250;
                }
            }
            (nodes, ui)
        };
        let mut out = Vec::new();
        for k in 0..count {
            // bracket by node count, then bisect the endpoint sign
            let mut lo = 0.0;
            let mut hi = vib.omega_bend;
            while shoot(hi).0 <= k {
                hi += vib.omega_bend;
            }
            while shoot(lo).0 > k {
                lo -= vib.omega_bend; // defensive; never triggers for V >= 0
            }
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                if shoot(mid).0 <= k {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        out
    }

    #[test]
    fn convergence_error_when_quartic_is_absurd() {
        let mut vib = RunConfig::default().vibration;
        vib.quartic_bend = 50.0;
        let r = solve_vibrational(&vib, 3.27, 3.27, 2.0, 4, 0);
        assert!(matches!(r, Err(Error::NoConvergence(_))));
    }

    #[test]
    fn constant_kernel_gives_orthonormality_deltas() {
        let cfg = RunConfig::default();
        let mut spec = solve_vibrational(&cfg.vibration, 3.27, 3.27, 2.0, 12, 0).unwrap();
        for m in [-1i32, 1] {
            spec.merge(solve_vibrational(&cfg.vibration, 3.27, 3.27, 2.0, 12, m).unwrap());
        }
        let c = 0.37;
        let kernel = |_q: &GeometryQ| {
            let mut k = Matrix5::zeros();
            for i in 0..5 {
                for j in 0..5 {
                    k[(i, j)] = c;
                }
            }
            Ok(k)
        };
        let lams = [num_complex::Complex64::new(0.0, 0.0); 5];
        let quad = QuadratureSpec {
            theta_nodes: 32,
            rco_nodes: 40,
            phi_nodes: 8,
        };
        let vk = vibronic_k(kernel, &spec, &lams, 0, 3, quad).unwrap();
        // constant K couples only identical vibrational states of
        // matching azimuthal quantum numbers
        for (ci, chi) in vk.channels.iter().enumerate() {
            for (cj, chj) in vk.channels.iter().enumerate() {
                let want = if chi.index.m_phi == chj.index.m_phi && chi.index.l == chj.index.l {
                    c
                } else {
                    0.0
                };
                assert!(
                    (vk.matrix[(ci, cj)] - want).abs() < 1e-9,
                    "({ci},{cj}): got {}, want {want}",
                    vk.matrix[(ci, cj)]
                );
            }
        }
    }

    #[test]
    fn diagonal_constant_defect_kernel_stays_diagonal() {
        let cfg = RunConfig::default();
        let mut spec = solve_vibrational(&cfg.vibration, 3.27, 3.27, 2.0, 12, 0).unwrap();
        for m in [-1i32, 1] {
            spec.merge(solve_vibrational(&cfg.vibration, 3.27, 3.27, 2.0, 12, m).unwrap());
        }
        let kernel = |_q: &GeometryQ| {
            let mut k = Matrix5::zeros();
            for (i, mu) in [0.1, 0.2, 0.3, 0.2, 0.05].iter().enumerate() {
                k[(i, i)] = (PI * mu).tan();
            }
            Ok(k)
        };
        let lams = [num_complex::Complex64::new(0.0, 0.0); 5];
        let quad = QuadratureSpec {
            theta_nodes: 32,
            rco_nodes: 40,
            phi_nodes: 8,
        };
        let vk = vibronic_k(kernel, &spec, &lams, 0, 3, quad).unwrap();
        for i in 0..vk.matrix.nrows() {
            for j in 0..vk.matrix.ncols() {
                if i != j {
                    assert!(vk.matrix[(i, j)].abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn bundled_kernel_vibronic_matrix_is_symmetric_and_converged() {
        let cfg = RunConfig::default();
        let d = crate::longrange::DipoleStrength::from_debye(cfg.dipole_debye).unwrap();
        let mut spec = solve_vibrational(&cfg.vibration, 3.27, cfg.surfaces.r_gh_ref, cfg.surfaces.r_co_ref, 12, 0).unwrap();
        for m in [-1i32, 1] {
            spec.merge(
                solve_vibrational(&cfg.vibration, 3.27, cfg.surfaces.r_gh_ref, cfg.surfaces.r_co_ref, 12, m).unwrap(),
            );
        }
        let kernel = |q: &GeometryQ| {
            Ok(crate::bodyframe::kmatrix_bodyframe(&cfg.surfaces, &cfg.renner_teller, q, &d, true)?.matrix)
        };
        let lams = crate::longrange::channel_lambdas(&d, true);
        let quad = QuadratureSpec {
            theta_nodes: 32,
            rco_nodes: 40,
            phi_nodes: 8,
        };
        let vk = vibronic_k(kernel, &spec, &lams, 0, 4, quad).unwrap();
        let n = vk.matrix.nrows();
        assert_eq!(n, 20);
        for i in 0..n {
            for j in 0..n {
                assert!((vk.matrix[(i, j)] - vk.matrix[(j, i)]).abs() < 1e-10);
            }
        }
        // sigma-pi vibronic couplings are present
        let pos = |ch: ChannelLabel, l: usize| {
            vk.channels
                .iter()
                .position(|c| c.index.channel == ch && c.index.l == l)
                .unwrap()
        };
        let c = vk.matrix[(pos(ChannelLabel::Ptilde, 0), pos(ChannelLabel::PpiMinus, 0))];
        assert!(c.abs() > 1e-4, "expected nonzero RT vibronic coupling, got {c:.3e}");
    }

    #[test]
    fn selection_rule_blocks_cross_projection_elements() {
        let cfg = RunConfig::default();
        let d = crate::longrange::DipoleStrength::from_debye(cfg.dipole_debye).unwrap();
        let mut spec = solve_vibrational(&cfg.vibration, 3.27, 3.27, 2.0, 8, 0).unwrap();
        for m in [-1i32, 1, 2] {
            spec.merge(solve_vibrational(&cfg.vibration, 3.27, 3.27, 2.0, 8, m).unwrap());
        }
        let kernel = |q: &GeometryQ| {
            Ok(crate::bodyframe::kmatrix_bodyframe(&cfg.surfaces, &cfg.renner_teller, q, &d, true)?.matrix)
        };
        let quad = QuadratureSpec {
            theta_nodes: 32,
            rco_nodes: 40,
            phi_nodes: 12,
        };
        // bra total projection 0, ket total projection 1: must vanish
        let bra = VibChannelIndex {
            m_phi: 0,
            l: 0,
            channel: ChannelLabel::Ptilde,
        };
        let ket = VibChannelIndex {
            m_phi: 2,
            l: 0,
            channel: ChannelLabel::PpiMinus,
        };
        let v = vibronic_element(&kernel, &spec, bra, ket, quad).unwrap();
        assert!(v.abs() < 1e-12, "cross-projection element {v:.3e}");
        // while the same electronic pair within one block is finite
        let ket_ok = VibChannelIndex {
            m_phi: 1,
            l: 0,
            channel: ChannelLabel::PpiMinus,
        };
        let v_ok = vibronic_element(&kernel, &spec, bra, ket_ok, quad).unwrap();
        assert!(v_ok.abs() > 1e-4);
    }
}
