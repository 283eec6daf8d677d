//! Generalized multichannel quantum defect theory (GMQDT) for electron
//! collisions with a linear molecular ion carrying a permanent electric
//! dipole moment.
//!
//! The long-range electron-ion interaction is Coulomb plus dipole. The
//! dipole couples partial waves of the same angular-momentum projection;
//! diagonalizing the asymptotic coupling block yields effective channels
//! with non-integer, possibly complex, partial-wave quantum numbers
//! lambda. The closed-channel phase parameter beta(kappa, lambda)
//! generalizes the Coulomb phase pi(nu - l) and drives everything
//! downstream: bound states, single-channel reaction matrices,
//! closed-channel elimination, autoionizing resonances, and
//! recombination cross sections.
//!
//! Pipeline, bottom to top:
//!
//! 1. [`longrange`] - sigma-block diagonalization, effective channels.
//! 2. [`gqdt`] - beta(kappa, lambda), bound states, quantum defects,
//!    resonance density.
//! 3. [`radialoracle`] - brute-force radial integration used to verify
//!    the analytic phase machinery.
//! 4. [`bodyframe`] - model quantum-defect surfaces, Renner-Teller
//!    couplings, 5-channel body-frame reaction matrix.
//! 5. [`framexform`] - model ionic vibrational states and the
//!    vibrational frame transformation.
//! 6. [`dynamics`] - closed-channel elimination, eigenphase sums,
//!    resonance search, analytic width estimate.
//! 7. [`xsec`] - capture cross sections and beam-distribution
//!    convolution.
//!
//! All internal computation is in hartree atomic units; conversions to
//! eV, cm^2 and debye happen only at I/O boundaries.

pub mod bodyframe;
pub mod config;
pub mod constants;
pub mod dynamics;
pub mod error;
pub mod framexform;
pub mod gqdt;
pub mod longrange;
pub mod pipeline;
pub mod radialoracle;
pub mod special;
pub mod xsec;

pub use error::{Error, Result};
