//! Unit conversions. Internal computations are in hartree atomic units.

/// 1 debye in atomic units of electric dipole moment.
pub const DEBYE_TO_AU: f64 = 0.393430;

/// 1 hartree in electron volts.
pub const HARTREE_TO_EV: f64 = 27.211386245988;

/// 1 bohr^2 in cm^2.
pub const BOHR2_TO_CM2: f64 = 2.8002852e-17;
