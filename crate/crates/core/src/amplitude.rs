//! Closed-form overlap amplitude of a down-converted pair onto a pair of
//! Laguerre-Gaussian collection modes, for arbitrary pump/signal/idler
//! focal-plane displacements and detunings.
//!
//! The amplitude is a double sum over the radial expansion coefficients of
//! both collection modes; each term carries a longitudinal integral over the
//! crystal of an oscillatory detuning phase times a closed-form transverse
//! overlap built from three complex quadratic coefficients and a regularized
//! Gauss hypergeometric function.

use num_complex::Complex64;
use std::cell::Cell;

use crate::dispersion::{
    optical_constants, phase_mismatch, CrystalConfig, OpticalConstants, SellmeierModel,
};
use crate::error::{Error, Result};
use crate::modes::{expansion_coefficient, BeamGeometry, LGIndex};
use crate::quad::{adaptive_complex, gauss_legendre, QuadratureOutcome};
use crate::specfun::{hyp2f1_regularized, ln_factorial, SeriesDiagnostics};

const QUAD_REL_TOL: f64 = 1e-9;
const QUAD_START_NODES: u32 = 32;
const QUAD_MAX_NODES: u32 = 4096;

/// Spectral envelope of the pump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PumpSpectrum {
    /// Monochromatic pump; consumers must supply idler detuning equal to
    /// minus the signal detuning.
    ContinuousWave,
    /// Transform-limited Gaussian pulse of the given duration in seconds.
    PulsedGaussian { pulse_duration: f64 },
}

/// Signal and idler angular-frequency offsets from their central
/// frequencies, rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetuningPair {
    pub signal: f64,
    pub idler: f64,
}

impl DetuningPair {
    pub fn new(signal: f64, idler: f64) -> Self {
        Self { signal, idler }
    }

    /// Energy-conserving pair for a continuous-wave pump.
    pub fn cw(signal: f64) -> Self {
        Self {
            signal,
            idler: -signal,
        }
    }

    pub fn zero() -> Self {
        Self {
            signal: 0.0,
            idler: 0.0,
        }
    }
}

/// Full physical scenario: crystal, dispersion model per wave, beam
/// geometries, and pump spectrum. Wave constants are derived once at
/// construction and cached; they are pure functions of the models and
/// wavelengths, so rebuilding the setup reproduces them bit-identically.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdcSetup {
    crystal: CrystalConfig,
    pump_model: SellmeierModel,
    signal_model: SellmeierModel,
    idler_model: SellmeierModel,
    pub pump_beam: BeamGeometry,
    pub signal_beam: BeamGeometry,
    pub idler_beam: BeamGeometry,
    pub pump_spectrum: PumpSpectrum,
    pump_constants: OpticalConstants,
    signal_constants: OpticalConstants,
    idler_constants: OpticalConstants,
    poling_period: f64,
}

impl SpdcSetup {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        crystal: CrystalConfig,
        pump_model: SellmeierModel,
        signal_model: SellmeierModel,
        idler_model: SellmeierModel,
        pump_beam: BeamGeometry,
        signal_beam: BeamGeometry,
        idler_beam: BeamGeometry,
        pump_spectrum: PumpSpectrum,
    ) -> Result<Self> {
        if let PumpSpectrum::PulsedGaussian { pulse_duration } = pump_spectrum {
            if !(pulse_duration > 0.0 && pulse_duration.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "pulsed pump requires a positive pulse duration, got {pulse_duration} s"
                )));
            }
        }
        let pump_constants = optical_constants(&pump_model, crystal.pump_wavelength)?;
        let signal_constants = optical_constants(&signal_model, crystal.signal_wavelength)?;
        let idler_constants = optical_constants(&idler_model, crystal.idler_wavelength)?;
        let poling_period = match crystal.poling_period {
            Some(period) => {
                if period <= 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "poling period must be positive (or infinite for an unpoled crystal), got {period}"
                    )));
                }
                period
            }
            None => crate::dispersion::solve_poling_period(
                &crystal,
                &pump_model,
                &signal_model,
                &idler_model,
            )?,
        };
        Ok(Self {
            crystal,
            pump_model,
            signal_model,
            idler_model,
            pump_beam,
            signal_beam,
            idler_beam,
            pump_spectrum,
            pump_constants,
            signal_constants,
            idler_constants,
            poling_period,
        })
    }

    pub fn crystal(&self) -> &CrystalConfig {
        &self.crystal
    }

    pub fn pump_constants(&self) -> &OpticalConstants {
        &self.pump_constants
    }

    pub fn signal_constants(&self) -> &OpticalConstants {
        &self.signal_constants
    }

    pub fn idler_constants(&self) -> &OpticalConstants {
        &self.idler_constants
    }

    pub fn poling_period(&self) -> f64 {
        self.poling_period
    }

    pub fn models(&self) -> (&SellmeierModel, &SellmeierModel, &SellmeierModel) {
        (&self.pump_model, &self.signal_model, &self.idler_model)
    }

    /// Same setup with the three focal shifts replaced (waists untouched).
    pub fn with_focal_shifts(&self, pump: f64, signal: f64, idler: f64) -> Self {
        let mut out = self.clone();
        out.pump_beam.focal_shift = pump;
        out.signal_beam.focal_shift = signal;
        out.idler_beam.focal_shift = idler;
        out
    }

    /// Residual central-frequency mismatch including the poling contribution.
    pub fn residual_mismatch(&self) -> f64 {
        phase_mismatch(
            &self.pump_constants,
            &self.signal_constants,
            &self.idler_constants,
            self.poling_period,
        )
    }

    /// Detuning-dependent rate of the longitudinal phase, rad/m.
    pub fn phase_rate(&self, det: DetuningPair) -> f64 {
        let sum = det.signal + det.idler;
        self.residual_mismatch()
            + sum * self.pump_constants.inv_u
            - det.signal * self.signal_constants.inv_u
            - det.idler * self.idler_constants.inv_u
            + 0.5
                * (self.pump_constants.gvd * sum * sum
                    - self.signal_constants.gvd * det.signal * det.signal
                    - self.idler_constants.gvd * det.idler * det.idler)
    }

    /// Frequency-dependent phase from referencing each angular spectrum to
    /// its own focal plane rather than the crystal center. A pure phase at
    /// fixed detunings; kept so the closed form agrees with the mode
    /// function pointwise, not only in modulus.
    pub fn focal_reference_phase(&self, det: DetuningPair) -> f64 {
        let sum = det.signal + det.idler;
        let pump = sum * self.pump_constants.inv_u + 0.5 * self.pump_constants.gvd * sum * sum;
        let signal = det.signal * self.signal_constants.inv_u
            + 0.5 * self.signal_constants.gvd * det.signal * det.signal;
        let idler = det.idler * self.idler_constants.inv_u
            + 0.5 * self.idler_constants.gvd * det.idler * det.idler;
        self.pump_beam.focal_shift * pump - self.signal_beam.focal_shift * signal
            - self.idler_beam.focal_shift * idler
    }

    /// Spectral envelope factor; errors when a continuous-wave pump is asked
    /// for a non-energy-conserving detuning pair.
    pub fn envelope(&self, det: DetuningPair) -> Result<f64> {
        let sum = det.signal + det.idler;
        match self.pump_spectrum {
            PumpSpectrum::ContinuousWave => {
                if sum.abs() > 1e-9 * (1.0 + det.signal.abs()) {
                    Err(Error::CwDetuningMismatch {
                        signal: det.signal,
                        idler: det.idler,
                    })
                } else {
                    Ok(1.0)
                }
            }
            PumpSpectrum::PulsedGaussian { pulse_duration } => {
                Ok((-pulse_duration * pulse_duration * sum * sum / 4.0).exp())
            }
        }
    }
}

/// The per-term transverse factors of the overlap integrand at one
/// longitudinal position: the integer powers of the two collection
/// coefficients and the three complex quadratic coefficients
/// (pump / signal / idler).
#[derive(Debug, Clone, Copy)]
pub struct OverlapKernel {
    /// Power of the signal coefficient (`1 + j_s + l`).
    pub signal_power: u32,
    /// Power of the idler coefficient (`1 + j_i + l`).
    pub idler_power: u32,
    /// OAM order `l = l_i >= 0`.
    pub oam: u32,
    /// Pump quadratic coefficient, m^2.
    pub pump_quad: Complex64,
    /// Signal quadratic coefficient, m^2; its real part is exactly
    /// `(w_p^2 + w_s^2)/4` independent of z and all focal shifts.
    pub signal_quad: Complex64,
    /// Idler quadratic coefficient, m^2; real part `(w_p^2 + w_i^2)/4`.
    pub idler_quad: Complex64,
}

impl OverlapKernel {
    pub fn at(setup: &SpdcSetup, oam: u32, j_s: u32, j_i: u32, z: f64) -> Self {
        let wp = setup.pump_beam.waist;
        let ws = setup.signal_beam.waist;
        let wi = setup.idler_beam.waist;
        let kp = setup.pump_constants.k;
        let ks = setup.signal_constants.k;
        let ki = setup.idler_constants.k;
        let zp = z + setup.pump_beam.focal_shift;
        let zs = z + setup.signal_beam.focal_shift;
        let zi = z + setup.idler_beam.focal_shift;
        OverlapKernel {
            signal_power: 1 + j_s + oam,
            idler_power: 1 + j_i + oam,
            oam,
            pump_quad: Complex64::new(-wp * wp / 4.0, -zp / (2.0 * kp)),
            signal_quad: Complex64::new(
                (wp * wp + ws * ws) / 4.0,
                0.5 * (zp / kp - zs / ks),
            ),
            idler_quad: Complex64::new((wp * wp + wi * wi) / 4.0, 0.5 * (zp / kp - zi / ki)),
        }
    }

    /// Transverse factor `D^l F~(h, b; 1+l; D^2/(H B)) / (H^h B^b)`.
    pub fn evaluate(&self) -> Result<(Complex64, SeriesDiagnostics)> {
        let d = self.pump_quad;
        let h = self.signal_quad;
        let b = self.idler_quad;
        let argument = d * d / (h * b);
        let (hyp, diag) = hyp2f1_regularized(
            self.signal_power as f64,
            self.idler_power as f64,
            (1 + self.oam) as f64,
            argument,
        )?;
        let value = d.powi(self.oam as i32) * hyp
            / (h.powi(self.signal_power as i32) * b.powi(self.idler_power as i32));
        Ok((value, diag))
    }
}

/// Complex overlap amplitude with evaluation diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct AmplitudeResult {
    pub value: Complex64,
    /// Largest number of longitudinal quadrature nodes used by any term.
    pub quadrature_nodes: u32,
    /// Largest hypergeometric series length used by any kernel evaluation.
    pub max_series_terms: u32,
}

impl AmplitudeResult {
    fn zero() -> Self {
        Self {
            value: Complex64::new(0.0, 0.0),
            quadrature_nodes: 0,
            max_series_terms: 0,
        }
    }
}

/// Map `(l_s, l_i)` onto the evaluation convention `l_i >= 0`; amplitudes
/// depend on the OAM pair only through `|l|`.
fn map_oam(signal_mode: LGIndex, idler_mode: LGIndex) -> (i32, i32) {
    if idler_mode.l < 0 {
        (-signal_mode.l, -idler_mode.l)
    } else {
        (signal_mode.l, idler_mode.l)
    }
}

/// Longitudinal integral of one `(j_s, j_i)` term of the double sum, with
/// the detuning phase factor included.
pub fn z_integral(
    setup: &SpdcSetup,
    oam: u32,
    j_s: u32,
    j_i: u32,
    det: DetuningPair,
) -> Result<(QuadratureOutcome, u32)> {
    let phase_rate = setup.phase_rate(det);
    let half = setup.crystal().length / 2.0;
    let max_terms = Cell::new(0u32);
    let outcome = adaptive_complex(
        |z| {
            let kernel = OverlapKernel::at(setup, oam, j_s, j_i, z);
            let (value, diag) = kernel.evaluate().map_err(|e| Error::AmplitudeTerm {
                j_s,
                j_i,
                z_node: z,
                source: Box::new(e),
            })?;
            max_terms.set(max_terms.get().max(diag.terms_used));
            Ok(Complex64::new(0.0, z * phase_rate).exp() * value)
        },
        -half,
        half,
        QUAD_REL_TOL,
        QUAD_START_NODES,
        QUAD_MAX_NODES,
    )?;
    Ok((outcome, max_terms.get()))
}

/// Overlap amplitude `C` of the pair onto `(signal_mode, idler_mode)` at the
/// given detunings. Exactly zero (no integral evaluated) unless
/// `l_s + l_i = 0`.
pub fn overlap_amplitude(
    setup: &SpdcSetup,
    signal_mode: LGIndex,
    idler_mode: LGIndex,
    det: DetuningPair,
) -> Result<AmplitudeResult> {
    let envelope = setup.envelope(det)?;
    if signal_mode.l + idler_mode.l != 0 {
        return Ok(AmplitudeResult::zero());
    }
    let (ls, li) = map_oam(signal_mode, idler_mode);
    let oam = li as u32;
    let ws = setup.signal_beam.waist;
    let wi = setup.idler_beam.waist;

    let mut sum = Complex64::new(0.0, 0.0);
    let mut worst_nodes = 0u32;
    let mut worst_terms = 0u32;
    for j_s in 0..=signal_mode.p {
        let t_s = expansion_coefficient(signal_mode.p, ls, j_s, ws)?.conj();
        let gamma_h = ln_factorial((j_s + oam) as u64).exp();
        for j_i in 0..=idler_mode.p {
            let t_i = expansion_coefficient(idler_mode.p, li, j_i, wi)?.conj();
            let gamma_b = ln_factorial((j_i + oam) as u64).exp();
            let (outcome, terms) = z_integral(setup, oam, j_s, j_i, det)?;
            worst_nodes = worst_nodes.max(outcome.nodes);
            worst_terms = worst_terms.max(terms);
            sum += t_s * t_i * gamma_h * gamma_b * outcome.value;
        }
    }
    let value =
        envelope * Complex64::new(0.0, setup.focal_reference_phase(det)).exp() * sum;
    if !value.is_finite() {
        return Err(Error::NonFiniteAmplitude { value });
    }
    Ok(AmplitudeResult {
        value,
        quadrature_nodes: worst_nodes,
        max_series_terms: worst_terms,
    })
}

/// Single-mode coupling efficiency `|C|^2`.
pub fn coupling_probability(
    setup: &SpdcSetup,
    signal_mode: LGIndex,
    idler_mode: LGIndex,
    det: DetuningPair,
) -> Result<f64> {
    Ok(overlap_amplitude(setup, signal_mode, idler_mode, det)?
        .value
        .norm_sqr())
}

/// Detuning-sweep evaluator for a fixed geometry and mode pair.
///
/// The transverse kernel of every term is detuning-independent, so it is
/// sampled once on a node set certified against the most oscillatory
/// detuning the caller intends to use; each subsequent detuning costs one
/// weighted phase sum. Agrees with [`overlap_amplitude`] to the quadrature
/// tolerance.
pub struct SpectrumKernel {
    selection_zero: bool,
    nodes_z: Vec<f64>,
    weighted_kernel: Vec<Complex64>,
    nodes_used: u32,
    setup: SpdcSetup,
}

impl SpectrumKernel {
    /// `max_abs_phase_rate` is the largest |phase rate| (rad/m) among the
    /// detunings that will be swept; pass the band edges.
    pub fn build(
        setup: &SpdcSetup,
        signal_mode: LGIndex,
        idler_mode: LGIndex,
        max_abs_phase_rate: f64,
    ) -> Result<Self> {
        if signal_mode.l + idler_mode.l != 0 {
            return Ok(Self {
                selection_zero: true,
                nodes_z: Vec::new(),
                weighted_kernel: Vec::new(),
                nodes_used: 0,
                setup: setup.clone(),
            });
        }
        let (ls, li) = map_oam(signal_mode, idler_mode);
        let oam = li as u32;
        let ws = setup.signal_beam.waist;
        let wi = setup.idler_beam.waist;

        let mut coefficients = Vec::new();
        for j_s in 0..=signal_mode.p {
            let t_s = expansion_coefficient(signal_mode.p, ls, j_s, ws)?.conj();
            let gamma_h = ln_factorial((j_s + oam) as u64).exp();
            for j_i in 0..=idler_mode.p {
                let t_i = expansion_coefficient(idler_mode.p, li, j_i, wi)?.conj();
                let gamma_b = ln_factorial((j_i + oam) as u64).exp();
                coefficients.push((j_s, j_i, t_s * t_i * gamma_h * gamma_b));
            }
        }
        let combined = |z: f64| -> Result<Complex64> {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(j_s, j_i, coef) in &coefficients {
                let kernel = OverlapKernel::at(setup, oam, j_s, j_i, z);
                let (value, _) = kernel.evaluate().map_err(|e| Error::AmplitudeTerm {
                    j_s,
                    j_i,
                    z_node: z,
                    source: Box::new(e),
                })?;
                acc += coef * value;
            }
            Ok(acc)
        };
        let half = setup.crystal().length / 2.0;
        // Certify the node count on the most oscillatory sweep point (and on
        // the unmodulated integral, whichever demands more).
        let rate = max_abs_phase_rate.abs();
        let mut nodes = 0u32;
        for probe in [0.0, rate, -rate] {
            let outcome = adaptive_complex(
                |z| Ok(Complex64::new(0.0, z * probe).exp() * combined(z)?),
                -half,
                half,
                QUAD_REL_TOL,
                QUAD_START_NODES,
                QUAD_MAX_NODES,
            )?;
            nodes = nodes.max(outcome.nodes);
        }
        let rule = gauss_legendre(nodes as usize);
        let mut nodes_z = Vec::with_capacity(nodes as usize);
        let mut weighted_kernel = Vec::with_capacity(nodes as usize);
        for (&x, &w) in rule.0.iter().zip(rule.1.iter()) {
            let z = half * x;
            nodes_z.push(z);
            weighted_kernel.push(half * w * combined(z)?);
        }
        Ok(Self {
            selection_zero: false,
            nodes_z,
            weighted_kernel,
            nodes_used: nodes,
            setup: setup.clone(),
        })
    }

    pub fn nodes_used(&self) -> u32 {
        self.nodes_used
    }

    pub fn amplitude(&self, det: DetuningPair) -> Result<Complex64> {
        let envelope = self.setup.envelope(det)?;
        if self.selection_zero {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let rate = self.setup.phase_rate(det);
        let mut acc = Complex64::new(0.0, 0.0);
        for (&z, &g) in self.nodes_z.iter().zip(self.weighted_kernel.iter()) {
            acc += g * Complex64::new(0.0, z * rate).exp();
        }
        let value =
            envelope * Complex64::new(0.0, self.setup.focal_reference_phase(det)).exp() * acc;
        if !value.is_finite() {
            return Err(Error::NonFiniteAmplitude { value });
        }
        Ok(value)
    }

    pub fn probability(&self, det: DetuningPair) -> Result<f64> {
        Ok(self.amplitude(det)?.norm_sqr())
    }
}
