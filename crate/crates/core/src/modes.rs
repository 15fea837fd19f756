//! Laguerre-Gaussian collection modes: indexing, beam geometry, the
//! polynomial expansion coefficients of the momentum-space profile, and the
//! momentum-space amplitude itself.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::specfun::ln_factorial;

/// Radial and orbital-angular-momentum indices of a Laguerre-Gaussian mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LGIndex {
    pub p: u32,
    pub l: i32,
}

impl LGIndex {
    pub fn new(p: u32, l: i32) -> Self {
        Self { p, l }
    }
}

/// Gaussian beam geometry: waist and displacement of the focal plane from
/// the crystal center along the propagation axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamGeometry {
    /// 1/e^2 intensity waist radius, m.
    pub waist: f64,
    /// Focal-plane displacement, m (any sign).
    pub focal_shift: f64,
}

impl BeamGeometry {
    pub fn new(waist: f64, focal_shift: f64) -> Result<Self> {
        if !(waist > 0.0 && waist.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "beam waist must be positive and finite, got {waist} m"
            )));
        }
        if !focal_shift.is_finite() {
            return Err(Error::InvalidInput(
                "focal shift must be finite".to_string(),
            ));
        }
        Ok(Self { waist, focal_shift })
    }
}

/// Exact `i^l` for any integer `l`.
pub(crate) fn unit_imag_power(l: i32) -> Complex64 {
    match l.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Coefficient of `q^(2k+|l|)` in the momentum-space LG profile of radial
/// order `p` and OAM `l` at waist `w`:
///
/// `(-1)^(p+k) i^l / ((p-k)! (|l|+k)! k!) sqrt(p! (p+|l|)! / pi) (w/sqrt 2)^(2k+|l|+1)`
///
/// Factorials are accumulated in log space so large indices neither overflow
/// nor lose the leading digits.
pub fn expansion_coefficient(p: u32, l: i32, k: u32, waist: f64) -> Result<Complex64> {
    if k > p {
        return Err(Error::InvalidInput(format!(
            "expansion index k = {k} exceeds radial order p = {p}"
        )));
    }
    if !(waist > 0.0) {
        return Err(Error::InvalidInput("waist must be positive".to_string()));
    }
    let la = l.unsigned_abs() as u64;
    let (p, k) = (p as u64, k as u64);
    let ln_mag = 0.5 * (ln_factorial(p) + ln_factorial(p + la) - PI.ln())
        - (ln_factorial(p - k) + ln_factorial(la + k) + ln_factorial(k))
        + (2 * k + la + 1) as f64 * (waist / 2.0_f64.sqrt()).ln();
    let sign = if (p + k) % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * ln_mag.exp() * unit_imag_power(l))
}

/// Associated Laguerre polynomial `L_p^alpha(x)` by upward recurrence.
pub(crate) fn laguerre(p: u32, alpha: u32, x: f64) -> f64 {
    let a = alpha as f64;
    let mut l0 = 1.0;
    if p == 0 {
        return l0;
    }
    let mut l1 = 1.0 + a - x;
    for n in 1..p {
        let nf = n as f64;
        let l2 = ((2.0 * nf + 1.0 + a - x) * l1 - (nf + a) * l0) / (nf + 1.0);
        l0 = l1;
        l1 = l2;
    }
    l1
}

/// Momentum-space Laguerre-Gaussian amplitude at the mode's own focal plane.
///
/// Normalized so that the squared modulus integrates to one over the
/// transverse momentum plane. The phase convention carries `(-1)^p i^l` and
/// `e^{+i l phi}`, matching the Fourier transform of the real-space mode and
/// the sign structure of [`expansion_coefficient`]; propagation to other
/// planes is applied by the amplitude and oracle modules, never here.
pub fn lg_momentum_amplitude(mode: LGIndex, waist: f64, q: [f64; 2]) -> Complex64 {
    let rho = q[0].hypot(q[1]);
    let phi = q[1].atan2(q[0]);
    let la = mode.l.unsigned_abs();
    let x = rho * rho * waist * waist / 2.0;
    let ln_norm = 0.5 * (ln_factorial(mode.p as u64) - ln_factorial(mode.p as u64 + la as u64));
    let radial = ln_norm.exp()
        * (waist / (2.0 * PI).sqrt())
        * (rho * waist / 2.0_f64.sqrt()).powi(la as i32)
        * laguerre(mode.p, la, x)
        * (-x / 2.0).exp();
    let parity = if mode.p % 2 == 0 { 1.0 } else { -1.0 };
    parity
        * radial
        * unit_imag_power(mode.l)
        * Complex64::new(0.0, mode.l as f64 * phi).exp()
}
