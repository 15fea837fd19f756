//! Crystal dispersion: Sellmeier refractive-index models, wave constants
//! (wavenumber, inverse group velocity, group-velocity dispersion), and the
//! quasi-phase-matching poling period.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// A Sellmeier refractive-index model
/// `n^2 = a + sum_j b_j lambda^2 / (lambda^2 - c_j) - d lambda^2`
/// with `lambda` in micrometers.
///
/// `coefficients` is the flat list `[a, b_1, c_1, ..., b_m, c_m, d]`
/// (even length, at least 4 entries). Evaluation outside `valid_range_um`
/// is an error, never an extrapolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SellmeierModel {
    pub name: String,
    pub coefficients: Vec<f64>,
    pub valid_range_um: (f64, f64),
}

impl SellmeierModel {
    pub fn new(name: &str, coefficients: Vec<f64>, valid_range_um: (f64, f64)) -> Result<Self> {
        let model = Self {
            name: name.to_string(),
            coefficients,
            valid_range_um,
        };
        model.validate()?;
        Ok(model)
    }

    /// Flux-grown KTP, z-polarized (type-0 quasi-phase matching), after
    /// Fan et al., Appl. Opt. 26, 2390 (1987).
    pub fn ktp_z_default() -> Self {
        Self {
            name: "ktp-z-default".to_string(),
            coefficients: vec![2.25411, 1.06543, 0.05486, 0.02140],
            valid_range_um: (0.404, 1.065),
        }
    }

    /// Look up a built-in model by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "ktp-z-default" => Some(Self::ktp_z_default()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Error::InvalidModel {
            model: self.name.clone(),
            reason,
        };
        if self.coefficients.len() < 4 || self.coefficients.len() % 2 != 0 {
            return Err(fail(format!(
                "coefficient list must have even length >= 4, got {}",
                self.coefficients.len()
            )));
        }
        if !self.coefficients.iter().all(|c| c.is_finite()) {
            return Err(fail("coefficients must be finite".to_string()));
        }
        let (lo, hi) = self.valid_range_um;
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
            return Err(fail(format!("invalid wavelength range [{lo}, {hi}] um")));
        }
        // n must stay real and > 1 across the stated validity interval
        for i in 0..=64 {
            let lam = lo + (hi - lo) * i as f64 / 64.0;
            let n2 = self.n_squared(lam);
            if !(n2.is_finite() && n2 > 1.0) {
                return Err(fail(format!("n^2 = {n2} at {lam} um is not > 1")));
            }
        }
        Ok(())
    }

    fn check_range(&self, wavelength_um: f64) -> Result<()> {
        let (lo, hi) = self.valid_range_um;
        if wavelength_um < lo || wavelength_um > hi || !wavelength_um.is_finite() {
            return Err(Error::WavelengthOutOfRange {
                model: self.name.clone(),
                wavelength_um,
                min_um: lo,
                max_um: hi,
            });
        }
        Ok(())
    }

    fn n_squared(&self, lam_um: f64) -> f64 {
        let l2 = lam_um * lam_um;
        let a = self.coefficients[0];
        let d = *self.coefficients.last().unwrap();
        let mut n2 = a - d * l2;
        for pair in self.coefficients[1..self.coefficients.len() - 1].chunks_exact(2) {
            n2 += pair[0] * l2 / (l2 - pair[1]);
        }
        n2
    }

    /// First and second derivatives of n^2 with respect to lambda (um).
    fn n_squared_derivatives(&self, lam_um: f64) -> (f64, f64) {
        let l2 = lam_um * lam_um;
        let d = *self.coefficients.last().unwrap();
        let mut d1 = -2.0 * d * lam_um;
        let mut d2 = -2.0 * d;
        for pair in self.coefficients[1..self.coefficients.len() - 1].chunks_exact(2) {
            let (b, c) = (pair[0], pair[1]);
            let den = l2 - c;
            d1 += -2.0 * b * c * lam_um / (den * den);
            d2 += 2.0 * b * c * (3.0 * l2 + c) / (den * den * den);
        }
        (d1, d2)
    }
}

/// Per-wave constants at a central frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalConstants {
    /// Wavenumber k = 2 pi n / lambda, rad/m.
    pub k: f64,
    /// Inverse group velocity dk/dOmega, s/m.
    pub inv_u: f64,
    /// Group-velocity dispersion d^2 k/dOmega^2, s^2/m.
    pub gvd: f64,
}

/// Refractive index at a vacuum wavelength in meters.
pub fn refractive_index(model: &SellmeierModel, wavelength: f64) -> Result<f64> {
    let lam_um = wavelength * 1e6;
    model.check_range(lam_um)?;
    Ok(model.n_squared(lam_um).sqrt())
}

/// Wavenumber, inverse group velocity, and GVD at a vacuum wavelength in
/// meters, from analytic derivatives of the Sellmeier form.
pub fn optical_constants(model: &SellmeierModel, wavelength: f64) -> Result<OpticalConstants> {
    let lam_um = wavelength * 1e6;
    model.check_range(lam_um)?;
    let n2 = model.n_squared(lam_um);
    let (d1, d2) = model.n_squared_derivatives(lam_um);
    let n = n2.sqrt();
    let np = d1 / (2.0 * n); // dn/dlambda, per um
    let npp = (d2 - 2.0 * np * np) / (2.0 * n); // d2n/dlambda2, per um^2
    let k = 2.0 * PI * n / wavelength;
    let inv_u = (n - lam_um * np) / SPEED_OF_LIGHT;
    let gvd = lam_um.powi(3) * npp * 1e-6 / (2.0 * PI * SPEED_OF_LIGHT * SPEED_OF_LIGHT);
    Ok(OpticalConstants { k, inv_u, gvd })
}

/// Full crystal description. The poling period may be left open and solved
/// from the quasi-phase-matching condition; `f64::INFINITY` represents an
/// unpoled crystal.
#[derive(Debug, Clone, PartialEq)]
pub struct CrystalConfig {
    /// Crystal length, m.
    pub length: f64,
    /// Poling period in m if fixed by the user; `None` asks for a solve.
    pub poling_period: Option<f64>,
    pub pump_wavelength: f64,
    pub signal_wavelength: f64,
    pub idler_wavelength: f64,
}

impl CrystalConfig {
    /// Build a config; the idler wavelength is derived from energy
    /// conservation when not given, and validated to 1e-12 relative when it
    /// is.
    pub fn new(
        length: f64,
        pump_wavelength: f64,
        signal_wavelength: f64,
        idler_wavelength: Option<f64>,
        poling_period: Option<f64>,
    ) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "crystal length must be positive, got {length} m"
            )));
        }
        if !(pump_wavelength > 0.0 && signal_wavelength > pump_wavelength) {
            return Err(Error::InvalidInput(format!(
                "need 0 < pump wavelength < signal wavelength, got {pump_wavelength}, {signal_wavelength}"
            )));
        }
        let derived = 1.0 / (1.0 / pump_wavelength - 1.0 / signal_wavelength);
        let idler = match idler_wavelength {
            None => derived,
            Some(given) => {
                let residual = 1.0 / pump_wavelength - 1.0 / signal_wavelength - 1.0 / given;
                let relative = residual * pump_wavelength;
                if relative.abs() > 1e-12 {
                    return Err(Error::EnergyConservation { residual, relative });
                }
                given
            }
        };
        Ok(Self {
            length,
            poling_period,
            pump_wavelength,
            signal_wavelength,
            idler_wavelength: idler,
        })
    }
}

/// Residual longitudinal mismatch `k_p - k_s - k_i - 2 pi / period` at the
/// central frequencies. `period = INFINITY` describes an unpoled crystal.
pub fn phase_mismatch(
    pump: &OpticalConstants,
    signal: &OpticalConstants,
    idler: &OpticalConstants,
    poling_period: f64,
) -> f64 {
    pump.k - signal.k - idler.k - 2.0 * PI / poling_period
}

/// Poling period that zeroes `phase_mismatch` at the central frequencies.
pub fn solve_poling_period(
    crystal: &CrystalConfig,
    pump_model: &SellmeierModel,
    signal_model: &SellmeierModel,
    idler_model: &SellmeierModel,
) -> Result<f64> {
    let kp = optical_constants(pump_model, crystal.pump_wavelength)?.k;
    let ks = optical_constants(signal_model, crystal.signal_wavelength)?.k;
    let ki = optical_constants(idler_model, crystal.idler_wavelength)?.k;
    let mismatch = kp - ks - ki;
    if mismatch <= 0.0 {
        return Err(Error::QpmNoSolution { mismatch });
    }
    Ok(2.0 * PI / mismatch)
}
