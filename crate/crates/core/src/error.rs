use num_complex::Complex64;
use thiserror::Error;

use crate::specfun::SeriesDiagnostics;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error(
        "wavelength {wavelength_um} um is outside the valid range [{min_um}, {max_um}] um of Sellmeier model '{model}'"
    )]
    WavelengthOutOfRange {
        model: String,
        wavelength_um: f64,
        min_um: f64,
        max_um: f64,
    },

    #[error("invalid Sellmeier model '{model}': {reason}")]
    InvalidModel { model: String, reason: String },

    #[error("unknown dispersion model '{0}'")]
    UnknownModel(String),

    #[error(
        "central wavelengths violate energy conservation: 1/lambda_p - 1/lambda_s - 1/lambda_i = {residual:e} /m (relative {relative:e})"
    )]
    EnergyConservation { residual: f64, relative: f64 },

    #[error(
        "quasi-phase matching has no solution with positive poling period: k_p - k_s - k_i = {mismatch:e} rad/m is not positive"
    )]
    QpmNoSolution { mismatch: f64 },

    #[error("log-gamma pole at non-positive integer {0}")]
    GammaPole(f64),

    #[error("hypergeometric parameters outside the supported regime: {0}")]
    HypUnsupported(String),

    #[error(
        "hypergeometric series did not converge within {max_terms} terms at z = {z} (transformation {transformation:?})"
    )]
    HypNonConvergence {
        z: Complex64,
        max_terms: u32,
        transformation: crate::specfun::Transformation,
        diagnostics: SeriesDiagnostics,
    },

    #[error(
        "hypergeometric argument z = {z} maps to |z/(z-1)| = {transformed_abs} >= 1 under the Pfaff transformation and the series does not terminate"
    )]
    HypDomain { z: Complex64, transformed_abs: f64 },

    #[error(
        "quadrature did not converge by {max_nodes} nodes: last two estimates {previous} and {last}"
    )]
    QuadratureNonConvergence {
        previous: Complex64,
        last: Complex64,
        max_nodes: u32,
    },

    #[error("amplitude term (j_s = {j_s}, j_i = {j_i}) failed at z = {z_node:e} m: {source}")]
    AmplitudeTerm {
        j_s: u32,
        j_i: u32,
        z_node: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("amplitude evaluated to a non-finite value ({value})")]
    NonFiniteAmplitude { value: Complex64 },

    #[error(
        "continuous-wave pump requires idler detuning = -signal detuning, got signal {signal:e}, idler {idler:e} rad/s"
    )]
    CwDetuningMismatch { signal: f64, idler: f64 },

    #[error("transverse momentum |q| = {q_abs:e} rad/m violates the paraxial bound {limit:e} rad/m")]
    ParaxialBound { q_abs: f64, limit: f64 },

    #[error(
        "oracle quadrature not converged after two grid doublings: last relative change {last_rel_change:e}"
    )]
    OracleNonConvergence { last_rel_change: f64 },

    #[error("spectral purity undefined: {0}")]
    UndefinedPurity(String),

    #[error("optimization bracketing failed: {0}")]
    BracketingFailure(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
