//! Model quantum-defect surfaces, Renner-Teller couplings, and the
//! five-channel body-frame reaction matrix K(Q) = U^T tan(pi mu-hat) U.
//!
//! The defect surfaces are the adiabatic (eigenchannel) defects as
//! polynomials around the reference linear geometry; the rotation U
//! comes from diagonalizing a model electronic coupling matrix whose
//! off-diagonal structure is the Renner-Teller one: a sigma-pi
//! coupling gamma(Q) = gamma0 theta, first order in the bend, and a
//! pi-pi coupling delta(Q) = delta0 theta^2. Both vanish at linearity,
//! where U is the identity and K is diagonal.
//!
//! Basis order is (stilde, ppi-, ptilde, ppi+, dsigma). The two pi
//! rows of the real matrix hold the in-plane/out-of-plane pair at
//! bend azimuth phi = 0; their +/- circular combinations carry the
//! electronic projections m = +/-1 used by the frame transformation
//! (see [`to_complex_pi_basis`]). The bend azimuth enters K(Q) by
//! rotating the coupling structure in the pi plane, which is exactly
//! the e^{i (m' - m) phi} phase law in the circular basis.

use crate::error::{Error, Result};
use crate::longrange::ChannelLabel;
use nalgebra::{Complex, Matrix5, SMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Internal nuclear geometry in Jacobi coordinates (atomic units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryQ {
    /// C-O bond length (bohr).
    pub r_co: f64,
    /// Distance from the CO center of mass to H (bohr).
    pub r_gh: f64,
    /// Bend angle (radians), in [0, pi].
    pub theta: f64,
    /// Azimuthal bend orientation (radians), in [0, 2 pi).
    pub phi: f64,
}

impl GeometryQ {
    pub fn new(r_co: f64, r_gh: f64, theta: f64, phi: f64) -> Result<Self> {
        if !(r_co > 0.0 && r_gh > 0.0) {
            return Err(Error::Config(format!(
                "bond lengths must be positive, got r_co = {r_co}, r_gh = {r_gh}"
            )));
        }
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(Error::Config(format!("theta must be in [0, pi], got {theta}")));
        }
        if !(0.0..2.0 * std::f64::consts::PI).contains(&phi) && phi != 0.0 {
            return Err(Error::Config(format!("phi must be in [0, 2 pi), got {phi}")));
        }
        Ok(Self { r_co, r_gh, theta, phi })
    }

    /// Reference linear geometry with the bend opened to `theta`.
    pub fn bent(theta: f64) -> Self {
        Self {
            r_co: 2.00,
            r_gh: 3.27,
            theta,
            phi: 0.0,
        }
    }
}

/// One defect surface: polynomial in (R_CO - ref), (R_GH - ref),
/// theta^2, with an extraction-convention shift for the dipole-off
/// variant. The dipole-on and dipole-off surfaces of a channel share
/// every shape coefficient and differ by the constant `shift_off`
/// (the sigma-tilde defects extracted with the generalized phase sit
/// a translation away from the pure-Coulomb ones).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfacePoly {
    pub mu0: f64,
    #[serde(default)]
    pub shift_off: f64,
    #[serde(default)]
    pub c_rco: f64,
    #[serde(default)]
    pub c_rco2: f64,
    #[serde(default)]
    pub c_rgh: f64,
    #[serde(default)]
    pub c_theta2: f64,
    #[serde(default)]
    pub c_theta4: f64,
}

impl SurfacePoly {
    pub fn eval(&self, q: &GeometryQ, dipole_on: bool, r_co_ref: f64, r_gh_ref: f64) -> f64 {
        let dr = q.r_co - r_co_ref;
        let dg = q.r_gh - r_gh_ref;
        let t2 = q.theta * q.theta;
        let base = if dipole_on { self.mu0 } else { self.mu0 + self.shift_off };
        base + self.c_rco * dr + self.c_rco2 * dr * dr + self.c_rgh * dg
            + self.c_theta2 * t2
            + self.c_theta4 * t2 * t2
    }
}

/// The five bundled defect surfaces with their reference geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefectSurfaceSet {
    pub r_co_ref: f64,
    pub r_gh_ref: f64,
    pub stilde: SurfacePoly,
    pub ppi_minus: SurfacePoly,
    pub ptilde: SurfacePoly,
    pub ppi_plus: SurfacePoly,
    pub dsigma: SurfacePoly,
}

impl DefectSurfaceSet {
    pub fn validate(&self) -> Result<()> {
        let pm = &self.ppi_minus;
        let pp = &self.ppi_plus;
        // the pi pair must stay degenerate along the linear geometry
        if pm.mu0 != pp.mu0 || pm.c_rco != pp.c_rco || pm.c_rco2 != pp.c_rco2
            || pm.c_rgh != pp.c_rgh || pm.shift_off != pp.shift_off
        {
            return Err(Error::Config(
                "pi surfaces must be degenerate at theta = 0 (same mu0 and R-coefficients)".into(),
            ));
        }
        Ok(())
    }

    fn poly(&self, ch: ChannelLabel) -> &SurfacePoly {
        match ch {
            ChannelLabel::Stilde => &self.stilde,
            ChannelLabel::PpiMinus => &self.ppi_minus,
            ChannelLabel::Ptilde => &self.ptilde,
            ChannelLabel::PpiPlus => &self.ppi_plus,
            ChannelLabel::Dsigma => &self.dsigma,
        }
    }
}

/// Renner-Teller coupling strengths of the model coupling matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RennerTellerParams {
    /// sigma-pi strength: gamma(Q) = gamma0 theta.
    pub gamma0: f64,
    /// pi-pi strength: delta(Q) = delta0 theta^2.
    pub delta0: f64,
}

impl RennerTellerParams {
    pub fn gamma(&self, q: &GeometryQ) -> f64 {
        self.gamma0 * q.theta
    }

    pub fn delta(&self, q: &GeometryQ) -> f64 {
        self.delta0 * q.theta * q.theta
    }
}

/// Body-frame reaction matrix over (stilde, ppi-, ptilde, ppi+, dsigma)
/// at fixed geometry, with the lambda of each channel.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyFrameK {
    pub matrix: Matrix5<f64>,
    pub lambdas: [Complex64; 5],
}

/// Evaluate the five eigenchannel defect surfaces at Q.
pub fn eval_defects(
    surfaces: &DefectSurfaceSet,
    q: &GeometryQ,
    dipole_on: bool,
) -> [f64; 5] {
    let mut mu = [0.0; 5];
    for (i, ch) in ChannelLabel::ALL.iter().enumerate() {
        mu[i] = surfaces
            .poly(*ch)
            .eval(q, dipole_on, surfaces.r_co_ref, surfaces.r_gh_ref);
    }
    mu
}

/// Model electronic coupling matrix in the bend frame (phi = 0):
/// defect terms on the diagonal, gamma coupling ptilde <-> in-plane
/// pi, and the +/- delta split of the pi pair (which is, in the
/// circular basis, the pi+ <-> pi- coupling).
fn coupling_matrix(mu: &[f64; 5], q: &GeometryQ, rt: &RennerTellerParams) -> Matrix5<f64> {
    let mut m = Matrix5::zeros();
    for i in 0..5 {
        m[(i, i)] = mu[i];
    }
    let g = rt.gamma(q);
    let d = rt.delta(q);
    m[(2, 1)] += g;
    m[(1, 2)] += g;
    m[(1, 1)] += d;
    m[(3, 3)] -= d;
    m
}

/// Azimuthal rotation of the pi plane embedded in the 5-channel basis.
fn pi_plane_rotation(phi: f64) -> Matrix5<f64> {
    let mut r = Matrix5::identity();
    let (s, c) = phi.sin_cos();
    r[(1, 1)] = c;
    r[(1, 3)] = -s;
    r[(3, 1)] = s;
    r[(3, 3)] = c;
    r
}

/// Orthogonal rotation whose columns are the adiabatic eigenchannels
/// of the model coupling matrix, ordered and sign-fixed so that
/// U is the identity at the linear reference (theta = 0, phi = 0) and
/// depends continuously on Q. The bend azimuth enters as a rigid
/// rotation of the pi plane: the in-plane/out-of-plane adiabatic pair
/// follows the bend direction.
pub fn build_u(
    mu: &[f64; 5],
    q: &GeometryQ,
    rt: &RennerTellerParams,
) -> Matrix5<f64> {
    let m = coupling_matrix(mu, q, rt);
    let eig = m.symmetric_eigen();
    // assign each eigenvector to the channel where it is largest,
    // greedily by descending overlap; ties inherit the prior ordering
    let v = eig.eigenvectors;
    let mut assigned_col = [usize::MAX; 5]; // channel -> column
    let mut col_taken = [false; 5];
    let mut order: Vec<(f64, usize, usize)> = Vec::with_capacity(25);
    for col in 0..5 {
        for ch in 0..5 {
            order.push((v[(ch, col)].abs(), ch, col));
        }
    }
    order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    for (_, ch, col) in order {
        if assigned_col[ch] == usize::MAX && !col_taken[col] {
            assigned_col[ch] = col;
            col_taken[col] = true;
        }
    }
    for i in 1..5 {
        for j in 0..i {
            if (eig.eigenvalues[i] - eig.eigenvalues[j]).abs() < 1e-12 {
                log::warn!(
                    "degenerate coupling-matrix eigenvalues at theta = {}, tie broken by prior ordering",
                    q.theta
                );
            }
        }
    }
    let mut u = Matrix5::zeros();
    for ch in 0..5 {
        let col = assigned_col[ch];
        let sign = if v[(ch, col)] < 0.0 { -1.0 } else { 1.0 };
        for row in 0..5 {
            u[(row, ch)] = sign * v[(row, col)];
        }
    }
    pi_plane_rotation(q.phi) * u
}

/// K(Q) = U tan(pi mu-hat) U^T over the five channels: the diagonal
/// eigenchannel reaction matrix tan(-beta-hat) = tan(pi mu-hat)
/// rotated into the asymptotic channel basis.
pub fn kmatrix_bodyframe(
    surfaces: &DefectSurfaceSet,
    rt: &RennerTellerParams,
    q: &GeometryQ,
    dipole: &crate::longrange::DipoleStrength,
    dipole_on: bool,
) -> Result<BodyFrameK> {
    let mu = eval_defects(surfaces, q, dipole_on);
    let mut d = Matrix5::zeros();
    for (i, &m) in mu.iter().enumerate() {
        let frac = m.rem_euclid(1.0);
        if (frac - 0.5).abs() < 1e-10 {
            return Err(Error::DefectPole(m));
        }
        d[(i, i)] = (std::f64::consts::PI * m).tan();
    }
    let u = build_u(&mu, q, rt);
    let k = u * d * u.transpose();
    Ok(BodyFrameK {
        matrix: 0.5 * (k + k.transpose()),
        lambdas: crate::longrange::channel_lambdas(dipole, dipole_on),
    })
}

/// Transform a real body-frame K into the circular pi basis
/// (stilde, pi_{-1}, ptilde, pi_{+1}, dsigma), where the bend azimuth
/// appears only as the phase e^{i (m' - m) phi} on each element.
pub fn to_complex_pi_basis(k: &Matrix5<f64>) -> SMatrix<Complex<f64>, 5, 5> {
    let s = 1.0 / 2.0_f64.sqrt();
    let mut t = SMatrix::<Complex<f64>, 5, 5>::zeros();
    t[(0, 0)] = Complex::new(1.0, 0.0);
    t[(2, 2)] = Complex::new(1.0, 0.0);
    t[(4, 4)] = Complex::new(1.0, 0.0);
    // |pi_-1> = (|a> - i |b>)/sqrt(2), |pi_+1> = (|a> + i |b>)/sqrt(2)
    t[(1, 1)] = Complex::new(s, 0.0);
    t[(3, 1)] = Complex::new(0.0, -s);
    t[(1, 3)] = Complex::new(s, 0.0);
    t[(3, 3)] = Complex::new(0.0, s);
    let kc = k.map(|x| Complex::new(x, 0.0));
    t.adjoint() * kc * t
}
