use num_complex::Complex64;
use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Gamma function evaluated at a non-positive integer.
    #[error("log-gamma pole at z = {0}")]
    GammaPole(Complex64),

    /// A closed-channel quantity was requested at epsilon >= 0.
    #[error("channel energy must be negative, got {0}")]
    NonNegativeEnergy(f64),

    /// K = -tan(beta) requested too close to a pole of tan.
    #[error("tan pole: |cos beta| < 1e-12 at beta = {0}")]
    TanPole(f64),

    /// A bracketed root solve could not isolate the requested root.
    #[error("root bracketing failed: {0}")]
    BracketFailed(String),

    /// Numerov local truncation estimate exceeded its budget.
    #[error("radial step size too coarse: truncation estimate {estimate:.3e} > {budget:.3e}")]
    StepSize { estimate: f64, budget: f64 },

    /// Radial solution not sampled far enough into the asymptotic zone.
    #[error("asymptotic zone not reached: {0}")]
    AsymptoticZone(String),

    /// Iterative refinement failed to converge.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// Quadrature did not settle under node doubling.
    #[error("quadrature not converged: max element change {0:.3e} after doubling nodes")]
    QuadratureNotConverged(f64),

    /// tan(pi mu) pole in the body-frame reaction matrix.
    #[error("defect {0} within 1e-10 of 1/2 (tan pole)")]
    DefectPole(f64),

    /// Closed-channel elimination hit a singular matrix.
    #[error("singular closed-channel block at E = {0}")]
    SingularElimination(f64),

    /// Eigenphase grid too coarse to unwrap continuously.
    #[error("eigenphase grid undersampled: {0}")]
    Undersampled(String),

    /// Cross-section binning violates the width separation requirement.
    #[error("bin width {bin:.3e} <= 3 x max width {max_gamma:.3e} in bin")]
    BinTooNarrow { bin: f64, max_gamma: f64 },

    /// Convolution kernel leaks off the energy grid.
    #[error("kernel mass on grid is {0:.6}, below 0.999")]
    KernelMass(f64),

    /// Invalid run configuration.
    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
