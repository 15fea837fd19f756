//! Independent brute-force evaluation of the overlap amplitude by direct
//! quadrature of the pair mode function over both transverse momentum
//! planes. This is the ground-truth cross-check for the closed form: it
//! never touches the hypergeometric machinery or the polynomial expansion
//! coefficients.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::amplitude::{DetuningPair, SpdcSetup};
use crate::error::{Error, Result};
use crate::modes::{lg_momentum_amplitude, LGIndex};
use crate::quad::{adaptive_complex, gauss_legendre};

const QUAD_REL_TOL: f64 = 1e-9;
const QUAD_MAX_NODES: u32 = 4096;
const PARAXIAL_FRACTION: f64 = 0.2;
const CERTIFY_REL: f64 = 5e-3;

/// Quadrature layout for the four-dimensional transverse integral.
#[derive(Debug, Clone, Copy)]
pub struct OracleGrid {
    pub radial_nodes: u32,
    pub azimuthal_nodes: u32,
    /// Starting node count for the adaptive longitudinal integrals.
    pub z_start_nodes: u32,
    /// Upper limit of each |q| integration, rad/m.
    pub radial_cutoff: f64,
}

impl OracleGrid {
    pub fn new(
        radial_nodes: u32,
        azimuthal_nodes: u32,
        z_start_nodes: u32,
        radial_cutoff: f64,
        min_waist: f64,
    ) -> Result<Self> {
        if radial_nodes < 8 || azimuthal_nodes < 8 || z_start_nodes < 8 {
            return Err(Error::InvalidInput(
                "oracle grid needs at least 8 nodes per axis".to_string(),
            ));
        }
        if radial_cutoff < 6.0 / min_waist {
            return Err(Error::InvalidInput(format!(
                "radial cutoff {radial_cutoff:e} rad/m does not cover the widest mode; need >= {:e}",
                6.0 / min_waist
            )));
        }
        Ok(Self {
            radial_nodes,
            azimuthal_nodes,
            z_start_nodes,
            radial_cutoff,
        })
    }

    /// Modest default: converges at the percent level for thin crystals and
    /// low mode orders, which is all the oracle is for.
    pub fn default_for(setup: &SpdcSetup) -> Self {
        let min_waist = setup
            .pump_beam
            .waist
            .min(setup.signal_beam.waist)
            .min(setup.idler_beam.waist);
        Self {
            radial_nodes: 28,
            azimuthal_nodes: 20,
            z_start_nodes: 32,
            radial_cutoff: 6.0 / min_waist,
        }
    }

    pub fn doubled(&self) -> Self {
        Self {
            radial_nodes: self.radial_nodes * 2,
            azimuthal_nodes: self.azimuthal_nodes * 2,
            z_start_nodes: self.z_start_nodes * 2,
            radial_cutoff: self.radial_cutoff,
        }
    }
}

pub(crate) fn pump_spatial_amplitude(pump_waist: f64, qp_squared: f64) -> f64 {
    pump_waist / (2.0 * PI).sqrt() * (-pump_waist * pump_waist * qp_squared / 4.0).exp()
}

/// Longitudinal integral of the full propagation phase at fixed transverse
/// momenta. The central-wavenumber part cancels against the poling by the
/// quasi-phase-matching condition (any residual is carried by
/// `SpdcSetup::phase_rate`); the frequency-dependent focal phases are applied
/// by the callers as a common factor.
fn longitudinal_integral(
    setup: &SpdcSetup,
    det: DetuningPair,
    qs_squared: f64,
    qi_squared: f64,
    qp_squared: f64,
    z_start_nodes: u32,
) -> Result<Complex64> {
    let base_rate = setup.phase_rate(det);
    let kp = setup.pump_constants().k;
    let ks = setup.signal_constants().k;
    let ki = setup.idler_constants().k;
    let zp = setup.pump_beam.focal_shift;
    let zs = setup.signal_beam.focal_shift;
    let zi = setup.idler_beam.focal_shift;
    let half = setup.crystal().length / 2.0;
    let rate =
        base_rate - qp_squared / (2.0 * kp) + qs_squared / (2.0 * ks) + qi_squared / (2.0 * ki);
    let constant = -zp * qp_squared / (2.0 * kp)
        + zs * qs_squared / (2.0 * ks)
        + zi * qi_squared / (2.0 * ki);
    let outcome = adaptive_complex(
        |z| Ok(Complex64::new(0.0, rate * z + constant).exp()),
        -half,
        half,
        QUAD_REL_TOL,
        z_start_nodes,
        QUAD_MAX_NODES,
    )?;
    Ok(outcome.value)
}

fn paraxial_check(q: [f64; 2], k: f64) -> Result<()> {
    let q_abs = q[0].hypot(q[1]);
    let limit = PARAXIAL_FRACTION * k;
    if q_abs >= limit {
        return Err(Error::ParaxialBound { q_abs, limit });
    }
    Ok(())
}

/// Pair mode function at explicit transverse momenta and detunings.
pub fn mode_function(
    setup: &SpdcSetup,
    q_signal: [f64; 2],
    q_idler: [f64; 2],
    det: DetuningPair,
) -> Result<Complex64> {
    paraxial_check(q_signal, setup.signal_constants().k)?;
    paraxial_check(q_idler, setup.idler_constants().k)?;
    let envelope = setup.envelope(det)?;
    let qp = [q_signal[0] + q_idler[0], q_signal[1] + q_idler[1]];
    let qp_squared = qp[0] * qp[0] + qp[1] * qp[1];
    let qs_squared = q_signal[0] * q_signal[0] + q_signal[1] * q_signal[1];
    let qi_squared = q_idler[0] * q_idler[0] + q_idler[1] * q_idler[1];
    let z_part = longitudinal_integral(setup, det, qs_squared, qi_squared, qp_squared, 32)?;
    Ok(pump_spatial_amplitude(setup.pump_beam.waist, qp_squared)
        * envelope
        * Complex64::new(0.0, setup.focal_reference_phase(det)).exp()
        * z_part)
}

/// Single-grid projection of the mode function onto the two collection
/// modes, without convergence certification.
///
/// Polar momentum coordinates: Gauss-Legendre radially, uniform trapezoid
/// azimuthally. The integrand depends on the azimuths only through their
/// difference, so the double angular sum factorizes exactly on the periodic
/// grid; both factors are literal complex sums, so the OAM selection rule
/// emerges from cancellation rather than from a branch.
pub fn brute_force_on_grid(
    setup: &SpdcSetup,
    signal_mode: LGIndex,
    idler_mode: LGIndex,
    det: DetuningPair,
    grid: &OracleGrid,
) -> Result<Complex64> {
    let envelope = setup.envelope(det)?;
    let ks = setup.signal_constants().k;
    let ki = setup.idler_constants().k;
    if grid.radial_cutoff >= PARAXIAL_FRACTION * ks.min(ki) {
        return Err(Error::ParaxialBound {
            q_abs: grid.radial_cutoff,
            limit: PARAXIAL_FRACTION * ks.min(ki),
        });
    }

    let rule = gauss_legendre(grid.radial_nodes as usize);
    let n_phi = grid.azimuthal_nodes as usize;
    let d_phi = 2.0 * PI / n_phi as f64;
    let cutoff = grid.radial_cutoff;

    let radial = |mode: LGIndex, waist: f64, rho: f64| -> Complex64 {
        lg_momentum_amplitude(mode, waist, [rho, 0.0]).conj()
    };

    // angular sums
    let mut delta_weights = Vec::with_capacity(n_phi);
    let mut pair_sum = Complex64::new(0.0, 0.0);
    let order = -(signal_mode.l + idler_mode.l) as f64;
    for m in 0..n_phi {
        let phi = d_phi * m as f64;
        delta_weights.push(Complex64::new(0.0, -(signal_mode.l as f64) * phi).exp() * d_phi);
        pair_sum += Complex64::new(0.0, order * phi).exp() * d_phi;
    }

    let mut acc = Complex64::new(0.0, 0.0);
    for (&xs, &ws) in rule.0.iter().zip(rule.1.iter()) {
        let rho_s = 0.5 * cutoff * (xs + 1.0);
        let weight_s = 0.5 * cutoff * ws * rho_s;
        let lg_s = radial(signal_mode, setup.signal_beam.waist, rho_s);
        for (&xi, &wi) in rule.0.iter().zip(rule.1.iter()) {
            let rho_i = 0.5 * cutoff * (xi + 1.0);
            let weight_i = 0.5 * cutoff * wi * rho_i;
            let lg_i = radial(idler_mode, setup.idler_beam.waist, rho_i);
            let mut angular = Complex64::new(0.0, 0.0);
            for (m, w_delta) in delta_weights.iter().enumerate() {
                let cos_d = (d_phi * m as f64).cos();
                let qp_squared = rho_s * rho_s + rho_i * rho_i + 2.0 * rho_s * rho_i * cos_d;
                let z_part = longitudinal_integral(
                    setup,
                    det,
                    rho_s * rho_s,
                    rho_i * rho_i,
                    qp_squared,
                    grid.z_start_nodes,
                )?;
                angular +=
                    w_delta * pump_spatial_amplitude(setup.pump_beam.waist, qp_squared) * z_part;
            }
            acc += weight_s * weight_i * lg_s * lg_i * angular;
        }
    }
    Ok(acc
        * pair_sum
        * envelope
        * Complex64::new(0.0, setup.focal_reference_phase(det)).exp())
}

/// Certified brute-force amplitude: all node counts are doubled and the
/// result accepted once successive grids agree to 0.5% relative; a second
/// doubling is attempted before giving up.
pub fn brute_force_amplitude(
    setup: &SpdcSetup,
    signal_mode: LGIndex,
    idler_mode: LGIndex,
    det: DetuningPair,
    grid: &OracleGrid,
) -> Result<Complex64> {
    let coarse = brute_force_on_grid(setup, signal_mode, idler_mode, det, grid)?;
    let mid_grid = grid.doubled();
    let mid = brute_force_on_grid(setup, signal_mode, idler_mode, det, &mid_grid)?;
    let rel = (mid - coarse).norm() / mid.norm().max(f64::MIN_POSITIVE);
    if rel < CERTIFY_REL {
        return Ok(mid);
    }
    let fine = brute_force_on_grid(setup, signal_mode, idler_mode, det, &mid_grid.doubled())?;
    let rel = (fine - mid).norm() / fine.norm().max(f64::MIN_POSITIVE);
    if rel < CERTIFY_REL {
        return Ok(fine);
    }
    Err(Error::OracleNonConvergence {
        last_rel_change: rel,
    })
}
