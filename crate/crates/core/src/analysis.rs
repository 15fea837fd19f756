//! Derived quantities: coupling-efficiency maps over focal shifts,
//! pump-focus scans, spectral responses and brightness, optimal
//! collection-focus curves, LG mode distributions, joint spectral
//! amplitudes, and fiber-coupled spectral purity.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::amplitude::{
    coupling_probability, overlap_amplitude, DetuningPair, PumpSpectrum, SpdcSetup,
    SpectrumKernel,
};
use crate::dispersion::SPEED_OF_LIGHT;
use crate::error::{Error, Result};
use crate::modes::LGIndex;

/// Scan variables a one- or two-axis grid may range over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanVariable {
    PumpShift,
    SignalShift,
    IdlerShift,
    /// Signal and idler focal shifts locked together.
    LockedCollectionShift,
    SignalWavelength,
}

/// One uniformly sampled scan axis.
#[derive(Debug, Clone)]
pub struct ScanAxis {
    pub variable: ScanVariable,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl ScanAxis {
    pub fn new(variable: ScanVariable, start: f64, stop: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidInput("scan axis with zero points".to_string()));
        }
        if count >= 2 && !(start < stop) {
            return Err(Error::InvalidInput(format!(
                "scan axis needs start < stop, got [{start}, {stop}]"
            )));
        }
        Ok(Self {
            variable,
            start,
            stop,
            count,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| self.start + step * i as f64)
            .collect()
    }

    pub fn step(&self) -> f64 {
        if self.count <= 1 {
            0.0
        } else {
            (self.stop - self.start) / (self.count - 1) as f64
        }
    }
}

/// Location and value of a grid maximum, optionally refined off-grid by a
/// parabolic fit. The value never falls below any sampled grid value.
#[derive(Debug, Clone)]
pub struct OptimumPoint {
    pub location: Vec<f64>,
    pub value: f64,
    pub refined: bool,
}

/// Signal detuning corresponding to a signal wavelength, rad/s.
pub fn detuning_from_wavelength(setup: &SpdcSetup, wavelength: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT * (1.0 / wavelength - 1.0 / setup.crystal().signal_wavelength)
}

/// Signal wavelength corresponding to a signal detuning, m.
pub fn wavelength_from_detuning(setup: &SpdcSetup, detuning: f64) -> f64 {
    let omega0 = 2.0 * PI * SPEED_OF_LIGHT / setup.crystal().signal_wavelength;
    2.0 * PI * SPEED_OF_LIGHT / (omega0 + detuning)
}

fn parabolic_refine(x: &[f64], v: &[f64], i: usize) -> Option<f64> {
    if i == 0 || i + 1 >= x.len() {
        return None;
    }
    let denom = v[i - 1] - 2.0 * v[i] + v[i + 1];
    if denom >= 0.0 {
        return None;
    }
    let offset = 0.5 * (v[i - 1] - v[i + 1]) / denom;
    Some(x[i] + offset * (x[i + 1] - x[i]))
}

/// Normalized coupling-efficiency map over signal and idler focal shifts.
#[derive(Debug, Clone)]
pub struct EfficiencyMap {
    pub signal_shifts: Vec<f64>,
    pub idler_shifts: Vec<f64>,
    /// Row-major, signal index outer; normalized to unit maximum.
    pub values: Vec<f64>,
    pub raw_max: f64,
    pub optimum: OptimumPoint,
}

impl EfficiencyMap {
    pub fn value(&self, i_signal: usize, i_idler: usize) -> f64 {
        self.values[i_signal * self.idler_shifts.len() + i_idler]
    }
}

pub fn efficiency_map(
    setup: &SpdcSetup,
    signal_axis: &ScanAxis,
    idler_axis: &ScanAxis,
    signal_mode: LGIndex,
    idler_mode: LGIndex,
    det: DetuningPair,
) -> Result<EfficiencyMap> {
    if signal_axis.variable != ScanVariable::SignalShift
        || idler_axis.variable != ScanVariable::IdlerShift
    {
        return Err(Error::InvalidInput(
            "efficiency map scans the signal and idler focal shifts".to_string(),
        ));
    }
    let zs = signal_axis.values();
    let zi = idler_axis.values();
    let zp = setup.pump_beam.focal_shift;
    let rows: Vec<Vec<f64>> = zs
        .par_iter()
        .map(|&s| {
            zi.iter()
                .map(|&i| {
                    coupling_probability(
                        &setup.with_focal_shifts(zp, s, i),
                        signal_mode,
                        idler_mode,
                        det,
                    )
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = rows.into_iter().flatten().collect();
    let (argmax, &raw_max) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("map has at least one cell");
    if raw_max <= 0.0 {
        return Err(Error::UndefinedPurity(
            "efficiency map is identically zero; nothing to normalize".to_string(),
        ));
    }
    let (i_s, i_i) = (argmax / zi.len(), argmax % zi.len());
    // separable parabolic refinement around the grid maximum
    let row: Vec<f64> = zi
        .iter()
        .enumerate()
        .map(|(j, _)| values[i_s * zi.len() + j])
        .collect();
    let column: Vec<f64> = zs
        .iter()
        .enumerate()
        .map(|(i, _)| values[i * zi.len() + i_i])
        .collect();
    let refined_s = parabolic_refine(&zs, &column, i_s);
    let refined_i = parabolic_refine(&zi, &row, i_i);
    let optimum = OptimumPoint {
        location: vec![
            refined_s.unwrap_or(zs[i_s]),
            refined_i.unwrap_or(zi[i_i]),
        ],
        value: 1.0,
        refined: refined_s.is_some() || refined_i.is_some(),
    };
    Ok(EfficiencyMap {
        signal_shifts: zs,
        idler_shifts: zi,
        values: values.into_iter().map(|v| v / raw_max).collect(),
        raw_max,
        optimum,
    })
}

/// Linear interpolation of the half-maximum crossings of a sampled curve.
pub fn fwhm_linear_interp(x: &[f64], y: &[f64]) -> Option<f64> {
    let max = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let half = max / 2.0;
    let first_above = y.iter().position(|&v| v >= half)?;
    let last_above = y.iter().rposition(|&v| v >= half)?;
    if first_above == 0 || last_above + 1 >= y.len() {
        return None; // no crossing inside the scan range
    }
    let cross = |i0: usize, i1: usize| {
        x[i0] + (half - y[i0]) * (x[i1] - x[i0]) / (y[i1] - y[i0])
    };
    Some(cross(last_above, last_above + 1) - cross(first_above - 1, first_above))
}

/// Pump-focus scan of a single mode pair at fixed collection foci.
#[derive(Debug, Clone)]
pub struct FocusScan {
    pub pump_shifts: Vec<f64>,
    /// |C| normalized to unit maximum (the quantity plotted in focus scans).
    pub amplitude: Vec<f64>,
    /// |C|^2 normalized to unit maximum.
    pub probability: Vec<f64>,
    /// Half-maximum width of the normalized amplitude curve; `None` when a
    /// crossing falls outside the scan range.
    pub fwhm: Option<f64>,
}

pub fn pump_focus_scan(
    setup: &SpdcSetup,
    pump_axis: &ScanAxis,
    signal_mode: LGIndex,
    idler_mode: LGIndex,
    det: DetuningPair,
) -> Result<FocusScan> {
    if pump_axis.variable != ScanVariable::PumpShift {
        return Err(Error::InvalidInput(
            "pump focus scan expects a pump-shift axis".to_string(),
        ));
    }
    let zp = pump_axis.values();
    let zs = setup.signal_beam.focal_shift;
    let zi = setup.idler_beam.focal_shift;
    let amps: Vec<f64> = zp
        .par_iter()
        .map(|&p| {
            overlap_amplitude(
                &setup.with_focal_shifts(p, zs, zi),
                signal_mode,
                idler_mode,
                det,
            )
            .map(|r| r.value.norm())
        })
        .collect::<Result<Vec<_>>>()?;
    let max = amps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max <= 0.0 {
        return Err(Error::UndefinedPurity(
            "pump-focus scan is identically zero".to_string(),
        ));
    }
    let amplitude: Vec<f64> = amps.iter().map(|a| a / max).collect();
    let probability: Vec<f64> = amplitude.iter().map(|a| a * a).collect();
    let fwhm = fwhm_linear_interp(&zp, &amplitude);
    Ok(FocusScan {
        pump_shifts: zp,
        amplitude,
        probability,
        fwhm,
    })
}

/// Frequency-resolved coupling efficiency of one mode pair under a
/// continuous-wave pump.
#[derive(Debug, Clone)]
pub struct SpectralResponse {
    pub wavelengths: Vec<f64>,
    /// Raw |C|^2 per wavelength (engine units).
    pub probability: Vec<f64>,
    /// Same curve normalized to unit maximum.
    pub normalized: Vec<f64>,
    pub peak_wavelength: f64,
    pub peak_value: f64,
}

fn require_cw(setup: &SpdcSetup) -> Result<()> {
    match setup.pump_spectrum {
        PumpSpectrum::ContinuousWave => Ok(()),
        PumpSpectrum::PulsedGaussian { .. } => Err(Error::InvalidInput(
            "spectral scans are defined for a continuous-wave pump".to_string(),
        )),
    }
}

fn worst_phase_rate(setup: &SpdcSetup, detunings: &[f64]) -> f64 {
    detunings
        .iter()
        .map(|&om| setup.phase_rate(DetuningPair::cw(om)).abs())
        .fold(0.0, f64::max)
}

pub fn spectral_response(
    setup: &SpdcSetup,
    signal_mode: LGIndex,
    idler_mode: LGIndex,
    wavelength_axis: &ScanAxis,
) -> Result<SpectralResponse> {
    if wavelength_axis.variable != ScanVariable::SignalWavelength {
        return Err(Error::InvalidInput(
            "spectral response expects a signal-wavelength axis".to_string(),
        ));
    }
    require_cw(setup)?;
    let wavelengths = wavelength_axis.values();
    let detunings: Vec<f64> = wavelengths
        .iter()
        .map(|&l| detuning_from_wavelength(setup, l))
        .collect();
    let kernel = SpectrumKernel::build(
        setup,
        signal_mode,
        idler_mode,
        worst_phase_rate(setup, &detunings),
    )?;
    let probability: Vec<f64> = detunings
        .iter()
        .map(|&om| kernel.probability(DetuningPair::cw(om)))
        .collect::<Result<Vec<_>>>()?;
    let (peak_idx, &peak_value) = probability
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("axis has at least one point");
    if peak_value <= 0.0 {
        return Err(Error::UndefinedPurity(
            "spectral response is identically zero".to_string(),
        ));
    }
    Ok(SpectralResponse {
        peak_wavelength: wavelengths[peak_idx],
        peak_value,
        normalized: probability.iter().map(|p| p / peak_value).collect(),
        wavelengths,
        probability,
    })
}

/// Golden-section maximization on a bracket, tracking the best point ever
/// evaluated so refinement can only improve on the coarse scan.
pub fn golden_section_max<F>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut best = (a, f(a)?);
    let fb_end = f(b)?;
    if fb_end > best.1 {
        best = (b, fb_end);
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > xtol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        let (x, v) = if fc > fd { (c, fc) } else { (d, fd) };
        if v > best.1 {
            best = (x, v);
        }
    }
    let mid = 0.5 * (a + b);
    let fm = f(mid)?;
    if fm > best.1 {
        best = (mid, fm);
    }
    Ok(best)
}

/// Peak coupling efficiency over a wavelength band let loose on a
/// continuous-wave setup.
#[derive(Debug, Clone, Copy)]
pub struct BrightnessResult {
    pub peak_value: f64,
    pub peak_wavelength: f64,
    /// Set when the coarse maximum sits on a band edge (band too narrow).
    pub at_band_edge: bool,
}

pub const DEFAULT_BRIGHTNESS_BAND: (f64, f64) = (800.0e-9, 820.0e-9);
pub const DEFAULT_BRIGHTNESS_POINTS: usize = 201;
/// Wavelength refinement tolerance: 1e-4 nm.
pub const BRIGHTNESS_WAVELENGTH_TOL: f64 = 1.0e-13;

/// Maximal |C|^2 over a wavelength band: a coarse grid scan followed by
/// golden-section refinement.
///
/// Exactly frequency-degenerate setups have responses even in the detuning,
/// so maxima come in mirrored pairs; when the refined maximum has a mirror
/// partner of equal height inside the band, the blue (shorter-wavelength)
/// member is reported.
pub fn spectral_brightness(
    setup: &SpdcSetup,
    signal_mode: LGIndex,
    idler_mode: LGIndex,
    band: (f64, f64),
    coarse_points: usize,
) -> Result<BrightnessResult> {
    require_cw(setup)?;
    if !(band.0 < band.1) || coarse_points < 3 {
        return Err(Error::InvalidInput(
            "brightness band must be ordered and sampled by at least 3 points".to_string(),
        ));
    }
    let axis = ScanAxis::new(ScanVariable::SignalWavelength, band.0, band.1, coarse_points)?;
    let wavelengths = axis.values();
    let detunings: Vec<f64> = wavelengths
        .iter()
        .map(|&l| detuning_from_wavelength(setup, l))
        .collect();
    let kernel = SpectrumKernel::build(
        setup,
        signal_mode,
        idler_mode,
        worst_phase_rate(setup, &detunings),
    )?;
    let values: Vec<f64> = detunings
        .iter()
        .map(|&om| kernel.probability(DetuningPair::cw(om)))
        .collect::<Result<Vec<_>>>()?;
    let (i_max, &coarse_best) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("band has points");
    if i_max == 0 || i_max + 1 == wavelengths.len() {
        return Ok(BrightnessResult {
            peak_value: coarse_best,
            peak_wavelength: wavelengths[i_max],
            at_band_edge: true,
        });
    }
    let objective = |lambda: f64| -> Result<f64> {
        kernel.probability(DetuningPair::cw(detuning_from_wavelength(setup, lambda)))
    };
    let (mut peak_lambda, mut peak_value) = golden_section_max(
        objective,
        wavelengths[i_max - 1],
        wavelengths[i_max + 1],
        BRIGHTNESS_WAVELENGTH_TOL,
    )?;
    // mirrored-detuning twin
    let mirror_lambda = wavelength_from_detuning(setup, -detuning_from_wavelength(setup, peak_lambda));
    if mirror_lambda > band.0 && mirror_lambda < band.1 {
        let step = axis.step();
        let twin_value = objective(mirror_lambda)?;
        if (twin_value - peak_value).abs() <= 1e-6 * peak_value {
            let (twin_lambda, twin_refined) = golden_section_max(
                objective,
                (mirror_lambda - step).max(band.0),
                (mirror_lambda + step).min(band.1),
                BRIGHTNESS_WAVELENGTH_TOL,
            )?;
            if (twin_refined - peak_value).abs() <= 1e-9 * peak_value.max(twin_refined) {
                if twin_lambda < peak_lambda {
                    peak_lambda = twin_lambda;
                    peak_value = twin_refined.max(peak_value);
                }
            } else if twin_refined > peak_value {
                peak_lambda = twin_lambda;
                peak_value = twin_refined;
            }
        }
    }
    Ok(BrightnessResult {
        peak_value: peak_value.max(coarse_best),
        peak_wavelength: peak_lambda,
        at_band_edge: false,
    })
}

/// Objective for the collection-focus optimization.
#[derive(Debug, Clone, Copy)]
pub enum FocusObjective {
    /// Maximize the band-wide spectral brightness.
    SpectralBrightness { band: (f64, f64), coarse_points: usize },
    /// Maximize |C|^2 at a fixed signal wavelength.
    FixedWavelength(f64),
}

/// One point of the optimal-collection-focus curve.
#[derive(Debug, Clone)]
pub struct FocusOptimum {
    pub pump_shift: f64,
    /// Maximizing locked signal/idler shift; `None` when bracketing failed.
    pub collection_shift: Option<f64>,
    /// Objective value at the optimum, normalized to the curve maximum.
    pub value: f64,
    pub note: Option<String>,
}

/// Collection-focus tolerance: 0.01 mm.
pub const FOCUS_SHIFT_TOL: f64 = 1.0e-5;

/// For each pump shift on the axis, maximize the objective over the locked
/// signal/idler shift by a coarse bracket plus golden-section refinement.
/// Bracketing failures are reported per point and the curve continues.
pub fn optimal_signal_focus(
    setup: &SpdcSetup,
    pump_axis: &ScanAxis,
    objective: FocusObjective,
    search: (f64, f64),
) -> Result<Vec<FocusOptimum>> {
    if pump_axis.variable != ScanVariable::PumpShift {
        return Err(Error::InvalidInput(
            "focus optimization expects a pump-shift axis".to_string(),
        ));
    }
    if !(search.0 < search.1) {
        return Err(Error::InvalidInput("empty search interval".to_string()));
    }
    let evaluate = |zp: f64, zsi: f64| -> Result<f64> {
        let shifted = setup.with_focal_shifts(zp, zsi, zsi);
        match objective {
            FocusObjective::SpectralBrightness { band, coarse_points } => Ok(spectral_brightness(
                &shifted,
                LGIndex::new(0, 0),
                LGIndex::new(0, 0),
                band,
                coarse_points,
            )?
            .peak_value),
            FocusObjective::FixedWavelength(lambda) => {
                let om = detuning_from_wavelength(&shifted, lambda);
                coupling_probability(
                    &shifted,
                    LGIndex::new(0, 0),
                    LGIndex::new(0, 0),
                    DetuningPair::cw(om),
                )
            }
        }
    };
    let pump_shifts = pump_axis.values();
    let mut curve: Vec<FocusOptimum> = pump_shifts
        .par_iter()
        .map(|&zp| -> Result<FocusOptimum> {
            const COARSE: usize = 25;
            let step = (search.1 - search.0) / (COARSE - 1) as f64;
            let mut best = (0usize, f64::NEG_INFINITY);
            let mut coarse_values = [0.0; COARSE];
            for (i, value) in coarse_values.iter_mut().enumerate() {
                let zsi = search.0 + step * i as f64;
                *value = evaluate(zp, zsi)?;
                if *value > best.1 {
                    best = (i, *value);
                }
            }
            if best.0 == 0 || best.0 + 1 == COARSE {
                return Ok(FocusOptimum {
                    pump_shift: zp,
                    collection_shift: None,
                    value: best.1,
                    note: Some(format!(
                        "coarse maximum at the search boundary {:.3e} m; widen the search interval",
                        search.0 + step * best.0 as f64
                    )),
                });
            }
            let lo = search.0 + step * (best.0 - 1) as f64;
            let hi = search.0 + step * (best.0 + 1) as f64;
            let (zsi, value) = golden_section_max(|z| evaluate(zp, z), lo, hi, FOCUS_SHIFT_TOL)?;
            Ok(FocusOptimum {
                pump_shift: zp,
                collection_shift: Some(zsi),
                value,
                note: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max = curve
        .iter()
        .map(|p| p.value)
        .fold(f64::NEG_INFINITY, f64::max);
    if max > 0.0 {
        for point in &mut curve {
            point.value /= max;
        }
    }
    Ok(curve)
}

/// One table entry of an LG mode distribution.
#[derive(Debug, Clone, Copy)]
pub struct ModeEntry {
    pub signal: LGIndex,
    pub idler: LGIndex,
    /// Raw |C|^2 in engine units.
    pub probability: f64,
}

/// Coupling probabilities over a truncated LG block.
#[derive(Debug, Clone)]
pub struct ModeDistribution {
    pub max_p: u32,
    pub max_abs_l: i32,
    pub entries: Vec<ModeEntry>,
    pub raw_max: f64,
}

impl ModeDistribution {
    /// Entries normalized to this table's maximum.
    pub fn normalized(&self) -> impl Iterator<Item = (LGIndex, LGIndex, f64)> + '_ {
        self.entries
            .iter()
            .map(|e| (e.signal, e.idler, e.probability / self.raw_max))
    }
}

pub fn mode_distribution(
    setup: &SpdcSetup,
    max_p: u32,
    max_abs_l: i32,
    det: DetuningPair,
) -> Result<ModeDistribution> {
    require_cw(setup)?;
    let mut pairs = Vec::new();
    for p_s in 0..=max_p {
        for l_s in -max_abs_l..=max_abs_l {
            for p_i in 0..=max_p {
                for l_i in -max_abs_l..=max_abs_l {
                    pairs.push((LGIndex::new(p_s, l_s), LGIndex::new(p_i, l_i)));
                }
            }
        }
    }
    let entries: Vec<ModeEntry> = pairs
        .par_iter()
        .map(|&(s, i)| -> Result<ModeEntry> {
            Ok(ModeEntry {
                signal: s,
                idler: i,
                probability: coupling_probability(setup, s, i, det)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let raw_max = entries
        .iter()
        .map(|e| e.probability)
        .fold(f64::NEG_INFINITY, f64::max);
    if raw_max <= 0.0 {
        return Err(Error::UndefinedPurity(
            "mode distribution is identically zero".to_string(),
        ));
    }
    Ok(ModeDistribution {
        max_p,
        max_abs_l,
        entries,
        raw_max,
    })
}

/// Fundamental-mode joint spectral amplitude on a rectangular detuning grid,
/// pump envelope included.
#[derive(Debug, Clone)]
pub struct JsaGrid {
    pub signal_detunings: Vec<f64>,
    pub idler_detunings: Vec<f64>,
    /// Row-major, signal index outer.
    pub values: Vec<Complex64>,
    pub pulse_duration: f64,
}

impl JsaGrid {
    pub fn value(&self, i_signal: usize, i_idler: usize) -> Complex64 {
        self.values[i_signal * self.idler_detunings.len() + i_idler]
    }
}

/// Build the FGM joint spectral amplitude on symmetric uniform axes
/// `[-half_span, half_span]` with `points` samples each. Requires a pulsed
/// pump whose envelope the span covers (at least 4/T0 on each side).
pub fn jsa_grid(setup: &SpdcSetup, half_span: f64, points: usize) -> Result<JsaGrid> {
    let pulse_duration = match setup.pump_spectrum {
        PumpSpectrum::PulsedGaussian { pulse_duration } => pulse_duration,
        PumpSpectrum::ContinuousWave => {
            return Err(Error::InvalidInput(
                "the joint spectral amplitude needs a pulsed pump".to_string(),
            ))
        }
    };
    if half_span < 4.0 / pulse_duration {
        return Err(Error::InvalidInput(format!(
            "detuning grid must span at least +-4/T0 = {:e} rad/s, got {:e}",
            4.0 / pulse_duration,
            half_span
        )));
    }
    if points < 2 {
        return Err(Error::InvalidInput("grid needs at least 2 points".to_string()));
    }
    let axis: Vec<f64> = (0..points)
        .map(|i| -half_span + 2.0 * half_span * i as f64 / (points - 1) as f64)
        .collect();
    let fgm = LGIndex::new(0, 0);
    let corner = [
        DetuningPair::new(half_span, half_span),
        DetuningPair::new(half_span, -half_span),
    ]
    .iter()
    .map(|&d| setup.phase_rate(d).abs())
    .fold(0.0, f64::max);
    let kernel = SpectrumKernel::build(setup, fgm, fgm, corner)?;
    let values: Vec<Complex64> = axis
        .par_iter()
        .map(|&om_s| -> Result<Vec<Complex64>> {
            axis.iter()
                .map(|&om_i| kernel.amplitude(DetuningPair::new(om_s, om_i)))
                .collect()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(JsaGrid {
        signal_detunings: axis.clone(),
        idler_detunings: axis,
        values,
        pulse_duration,
    })
}

/// Spectral purity of the fiber-coupled pair from the discretized joint
/// spectral amplitude.
///
/// Equal to `sum sigma_k^4 / (sum sigma_k^2)^2` over the singular values of
/// the JSA matrix, computed through the Gram matrix `G = C^dagger C`:
/// `sum sigma^4 = ||G||_F^2` and `sum sigma^2 = tr G`, so no factorization
/// is needed and uniform grid weights cancel in the ratio. Exactly invariant
/// under global rescaling and global phase.
pub fn smf_spectral_purity(jsa: &JsaGrid) -> Result<f64> {
    let envelope_half_width = 2.0 / jsa.pulse_duration;
    let step = if jsa.signal_detunings.len() >= 2 {
        jsa.signal_detunings[1] - jsa.signal_detunings[0]
    } else {
        f64::INFINITY
    };
    if step > envelope_half_width / 8.0 {
        return Err(Error::InvalidInput(format!(
            "grid step {step:e} rad/s under-resolves the pump envelope; need <= {:e}",
            envelope_half_width / 8.0
        )));
    }
    purity_of_matrix(
        &jsa.values,
        jsa.signal_detunings.len(),
        jsa.idler_detunings.len(),
    )
}

/// `sum sigma^4 / (sum sigma^2)^2` for a row-major complex matrix.
fn purity_of_matrix(values: &[Complex64], rows: usize, cols: usize) -> Result<f64> {
    let trace: f64 = values.iter().map(|v| v.norm_sqr()).sum();
    if trace <= 0.0 || !trace.is_finite() {
        return Err(Error::UndefinedPurity(
            "joint amplitude grid is identically zero".to_string(),
        ));
    }
    // G = C^dagger C, column x column
    let mut frobenius_sq = 0.0;
    for a in 0..cols {
        // diagonal term done inside the loop over b with b >= a; use symmetry
        for b in a..cols {
            let mut g = Complex64::new(0.0, 0.0);
            for r in 0..rows {
                g += values[r * cols + a].conj() * values[r * cols + b];
            }
            let contribution = g.norm_sqr();
            frobenius_sq += if a == b {
                contribution
            } else {
                2.0 * contribution
            };
        }
    }
    Ok(frobenius_sq / (trace * trace))
}

/// Purity of the signal photon over a truncated LG block times a frequency
/// grid: the joint amplitude tensor indexed by (signal mode, signal
/// detuning) x (idler mode, idler detuning) is flattened to a matrix and fed
/// through the same singular-value ratio.
pub fn truncated_signal_purity(
    setup: &SpdcSetup,
    block: &[LGIndex],
    half_span: f64,
    points: usize,
) -> Result<f64> {
    let pulse_duration = match setup.pump_spectrum {
        PumpSpectrum::PulsedGaussian { pulse_duration } => pulse_duration,
        PumpSpectrum::ContinuousWave => {
            return Err(Error::InvalidInput(
                "signal purity needs a pulsed pump".to_string(),
            ))
        }
    };
    if block.is_empty() || points < 2 {
        return Err(Error::InvalidInput(
            "need a non-empty mode block and at least 2 frequency points".to_string(),
        ));
    }
    let _ = pulse_duration;
    let axis: Vec<f64> = (0..points)
        .map(|i| -half_span + 2.0 * half_span * i as f64 / (points - 1) as f64)
        .collect();
    let corner = [
        DetuningPair::new(half_span, half_span),
        DetuningPair::new(half_span, -half_span),
    ]
    .iter()
    .map(|&d| setup.phase_rate(d).abs())
    .fold(0.0, f64::max);
    let n = points;
    let m = block.len();
    let kernels: Vec<Vec<SpectrumKernel>> = block
        .par_iter()
        .map(|&s_mode| {
            block
                .iter()
                .map(|&i_mode| SpectrumKernel::build(setup, s_mode, i_mode, corner))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = m * n;
    let cols = m * n;
    let mut matrix = vec![Complex64::new(0.0, 0.0); rows * cols];
    let chunks: Vec<Vec<Complex64>> = (0..m)
        .into_par_iter()
        .map(|a| -> Result<Vec<Complex64>> {
            let mut out = vec![Complex64::new(0.0, 0.0); n * cols];
            for (b, kernel) in kernels[a].iter().enumerate() {
                for (i, &om_s) in axis.iter().enumerate() {
                    for (j, &om_i) in axis.iter().enumerate() {
                        out[i * cols + b * n + j] =
                            kernel.amplitude(DetuningPair::new(om_s, om_i))?;
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    for (a, chunk) in chunks.into_iter().enumerate() {
        matrix[a * n * cols..(a + 1) * n * cols].copy_from_slice(&chunk);
    }
    purity_of_matrix(&matrix, rows, cols)
}

/// Spectral purity over a (pump shift, locked collection shift) grid.
#[derive(Debug, Clone)]
pub struct PurityMap {
    pub pump_shifts: Vec<f64>,
    pub collection_shifts: Vec<f64>,
    /// Row-major, pump index outer.
    pub values: Vec<f64>,
}

impl PurityMap {
    pub fn value(&self, i_pump: usize, i_collection: usize) -> f64 {
        self.values[i_pump * self.collection_shifts.len() + i_collection]
    }
}

pub fn purity_map(
    setup: &SpdcSetup,
    pump_axis: &ScanAxis,
    collection_axis: &ScanAxis,
    half_span: f64,
    points: usize,
) -> Result<PurityMap> {
    if pump_axis.variable != ScanVariable::PumpShift
        || collection_axis.variable != ScanVariable::LockedCollectionShift
    {
        return Err(Error::InvalidInput(
            "purity map scans the pump shift against the locked collection shift".to_string(),
        ));
    }
    let zp = pump_axis.values();
    let zc = collection_axis.values();
    let mut cells = Vec::with_capacity(zp.len() * zc.len());
    for &p in &zp {
        for &c in &zc {
            cells.push((p, c));
        }
    }
    let values: Vec<f64> = cells
        .par_iter()
        .map(|&(p, c)| smf_spectral_purity(&jsa_grid(&setup.with_focal_shifts(p, c, c), half_span, points)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(PurityMap {
        pump_shifts: zp,
        collection_shifts: zc,
        values,
    })
}

/// Ordinary least squares line fit returning (slope, intercept, R^2).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            let r = b - (slope * a + intercept);
            r * r
        })
        .sum();
    let ss_tot: f64 = y.iter().map(|&b| (b - my) * (b - my)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (slope, intercept, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::{CrystalConfig, SellmeierModel};
    use crate::modes::BeamGeometry;
    use approx::assert_relative_eq;

    const NM: f64 = 1e-9;
    const UM: f64 = 1e-6;
    const MM: f64 = 1e-3;

    fn setup(length: f64, wp: f64, ws: f64, wi: f64, spectrum: PumpSpectrum) -> SpdcSetup {
        let model = SellmeierModel::ktp_z_default();
        let crystal = CrystalConfig::new(length, 405.0 * NM, 810.0 * NM, None, None).unwrap();
        SpdcSetup::new(
            crystal,
            model.clone(),
            model.clone(),
            model,
            BeamGeometry::new(wp, 0.0).unwrap(),
            BeamGeometry::new(ws, 0.0).unwrap(),
            BeamGeometry::new(wi, 0.0).unwrap(),
            spectrum,
        )
        .unwrap()
    }

    #[test]
    fn single_point_map_is_trivially_normalized() {
        let s = setup(1.0 * MM, 10.0 * UM, 20.0 * UM, 20.0 * UM, PumpSpectrum::ContinuousWave);
        let axis = |v, x| ScanAxis::new(v, x, x, 1).unwrap();
        let map = efficiency_map(
            &s,
            &axis(ScanVariable::SignalShift, 0.0),
            &axis(ScanVariable::IdlerShift, 0.0),
            LGIndex::new(0, 0),
            LGIndex::new(0, 0),
            DetuningPair::zero(),
        )
        .unwrap();
        assert_eq!(map.values, vec![1.0]);
    }

    #[test]
    fn normalized_maps_peak_at_exactly_one() {
        let s = setup(1.0 * MM, 10.0 * UM, 20.0 * UM, 20.0 * UM, PumpSpectrum::ContinuousWave);
        let zs = ScanAxis::new(ScanVariable::SignalShift, -1.0 * MM, 1.0 * MM, 7).unwrap();
        let zi = ScanAxis::new(ScanVariable::IdlerShift, -1.0 * MM, 1.0 * MM, 7).unwrap();
        let map = efficiency_map(
            &s,
            &zs,
            &zi,
            LGIndex::new(0, 0),
            LGIndex::new(0, 0),
            DetuningPair::zero(),
        )
        .unwrap();
        let max = map.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = map.values.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(max, 1.0);
        assert!(min >= 0.0);
        assert!(map.optimum.value >= 1.0);
    }

    #[test]
    fn symmetric_map_is_invariant_under_collection_exchange() {
        // w_s = w_i and z_p = 0: the map is symmetric under
        // (z_s, z_i) -> (-z_i, -z_s)
        let s = setup(1.0 * MM, 14.0 * UM, 20.0 * UM, 20.0 * UM, PumpSpectrum::ContinuousWave);
        let zs = ScanAxis::new(ScanVariable::SignalShift, -1.5 * MM, 1.5 * MM, 7).unwrap();
        let zi = ScanAxis::new(ScanVariable::IdlerShift, -1.5 * MM, 1.5 * MM, 7).unwrap();
        let map = efficiency_map(
            &s,
            &zs,
            &zi,
            LGIndex::new(0, 0),
            LGIndex::new(0, 0),
            DetuningPair::zero(),
        )
        .unwrap();
        let n = 7;
        for i in 0..n {
            for j in 0..n {
                let direct = map.value(i, j);
                let swapped = map.value(n - 1 - j, n - 1 - i);
                assert_relative_eq!(direct, swapped, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn pump_scan_is_even_for_centered_symmetric_collection() {
        let s = setup(10.0 * MM, 10.0 * UM, 20.0 * UM, 20.0 * UM, PumpSpectrum::ContinuousWave);
        let axis = ScanAxis::new(ScanVariable::PumpShift, -6.0 * MM, 6.0 * MM, 13).unwrap();
        let scan = pump_focus_scan(
            &s,
            &axis,
            LGIndex::new(0, 0),
            LGIndex::new(0, 0),
            DetuningPair::zero(),
        )
        .unwrap();
        let n = scan.amplitude.len();
        for i in 0..n {
            assert_relative_eq!(
                scan.amplitude[i],
                scan.amplitude[n - 1 - i],
                max_relative = 1e-6
            );
        }
    }

    #[test]
    fn fwhm_flag_when_no_crossing_in_range() {
        let s = setup(10.0 * MM, 40.0 * UM, 20.0 * UM, 20.0 * UM, PumpSpectrum::ContinuousWave);
        let axis = ScanAxis::new(ScanVariable::PumpShift, -2.0 * MM, 2.0 * MM, 9).unwrap();
        let scan = pump_focus_scan(
            &s,
            &axis,
            LGIndex::new(0, 0),
            LGIndex::new(0, 0),
            DetuningPair::zero(),
        )
        .unwrap();
        assert!(scan.fwhm.is_none());
    }

    #[test]
    fn golden_section_result_dominates_coarse_samples() {
        let f = |x: f64| Ok(-(x - 0.3172).powi(2));
        let coarse_best = (0..21)
            .map(|i| -1.0 + 0.1 * i as f64)
            .map(|x| f(x).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        let (x, v) = golden_section_max(f, -1.0, 1.0, 1e-9).unwrap();
        assert!(v >= coarse_best);
        assert_relative_eq!(x, 0.3172, epsilon = 1e-7);
    }

    #[test]
    fn purity_of_rank_one_matrix_is_one() {
        let n = 16;
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let f = Complex64::new(0.3 + i as f64, 0.1 * i as f64);
                let g = Complex64::new(1.0 / (1.0 + j as f64), -(0.2 * j as f64));
                values.push(f * g);
            }
        }
        let p = purity_of_matrix(&values, n, n).unwrap();
        assert_relative_eq!(p, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn purity_of_identity_matrix_is_one_over_n() {
        for n in [2usize, 5, 17] {
            let mut values = vec![Complex64::new(0.0, 0.0); n * n];
            for i in 0..n {
                values[i * n + i] = Complex64::new(1.0, 0.0);
            }
            let p = purity_of_matrix(&values, n, n).unwrap();
            assert_relative_eq!(p, 1.0 / n as f64, max_relative = 1e-12);
        }
    }

    #[test]
    fn purity_is_invariant_under_scale_and_phase() {
        let n = 12;
        let values: Vec<Complex64> = (0..n * n)
            .map(|k| {
                Complex64::new(
                    ((k * 37 % 11) as f64 - 5.0) / 7.0,
                    ((k * 17 % 13) as f64 - 6.0) / 9.0,
                )
            })
            .collect();
        let base = purity_of_matrix(&values, n, n).unwrap();
        let scaled: Vec<Complex64> = values
            .iter()
            .map(|&v| v * Complex64::from_polar(3.7e-5, 1.234))
            .collect();
        let p = purity_of_matrix(&scaled, n, n).unwrap();
        assert_relative_eq!(p, base, max_relative = 1e-12);
    }

    #[test]
    fn zero_grid_purity_is_an_error() {
        let values = vec![Complex64::new(0.0, 0.0); 9];
        assert!(matches!(
            purity_of_matrix(&values, 3, 3),
            Err(Error::UndefinedPurity(_))
        ));
    }

    #[test]
    fn linear_fit_recovers_exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&v| 2.5 * v - 1.0).collect();
        let (slope, intercept, r2) = linear_fit(&x, &y);
        assert_relative_eq!(slope, 2.5, max_relative = 1e-12);
        assert_relative_eq!(intercept, -1.0, max_relative = 1e-12);
        assert_relative_eq!(r2, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn jsa_requires_pulsed_pump_and_adequate_span() {
        let cw = setup(1.0 * MM, 14.0 * UM, 20.0 * UM, 20.0 * UM, PumpSpectrum::ContinuousWave);
        assert!(jsa_grid(&cw, 1.0e13, 16).is_err());
        let pulsed = setup(
            1.0 * MM,
            14.0 * UM,
            20.0 * UM,
            20.0 * UM,
            PumpSpectrum::PulsedGaussian {
                pulse_duration: 0.5e-12,
            },
        );
        // +-4/T0 = 8e12 rad/s
        assert!(jsa_grid(&pulsed, 5.0e12, 16).is_err());
        assert!(jsa_grid(&pulsed, 8.5e12, 24).is_ok());
    }
}
