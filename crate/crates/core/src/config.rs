//! Run configuration: a strict TOML tree with mandatory units on every
//! dimensioned scalar. Unknown keys are rejected, unit-less lengths are
//! rejected, and the resolved configuration serializes back to TOML so CSV
//! outputs can embed a reproducible provenance header.

use serde::de::Error as SerdeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;
use std::fmt;

use crate::amplitude::{DetuningPair, PumpSpectrum, SpdcSetup};
use crate::analysis::{ScanAxis, ScanVariable};
use crate::dispersion::{CrystalConfig, SellmeierModel};
use crate::modes::{BeamGeometry, LGIndex};
use crate::oracle::OracleGrid;

/// Configuration-level failure with a human-readable message; parse errors
/// carry the line/column reported by the TOML deserializer.
#[derive(Debug, Clone)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

type CfgResult<T> = std::result::Result<T, ConfigError>;

/// Split a quantity string into its numeric part and trailing unit token.
fn split_quantity(text: &str) -> std::result::Result<(f64, &str), String> {
    let text = text.trim();
    let unit_start = text
        .rfind(|c: char| c.is_ascii_digit() || c == '.')
        .map(|i| i + c_len(text, i))
        .ok_or_else(|| format!("no numeric part in quantity '{text}'"))?;
    let (number_part, unit_part) = text.split_at(unit_start);
    let unit = unit_part.trim();
    if unit.is_empty() {
        return Err(format!("quantity '{text}' is missing its unit"));
    }
    let value: f64 = number_part
        .trim()
        .parse()
        .map_err(|_| format!("cannot parse the numeric part of '{text}'"))?;
    Ok((value, unit))
}

fn c_len(s: &str, byte_idx: usize) -> usize {
    s[byte_idx..].chars().next().map_or(1, |c| c.len_utf8())
}

fn parse_length_str(text: &str) -> std::result::Result<f64, String> {
    let (value, unit) = split_quantity(text)?;
    let scale = match unit {
        "m" => 1.0,
        "cm" => 1e-2,
        "mm" => 1e-3,
        "um" | "\u{b5}m" => 1e-6,
        "nm" => 1e-9,
        "pm" => 1e-12,
        other => return Err(format!("unknown length unit '{other}' in '{text}'")),
    };
    Ok(value * scale)
}

fn parse_time_str(text: &str) -> std::result::Result<f64, String> {
    let (value, unit) = split_quantity(text)?;
    let scale = match unit {
        "s" => 1.0,
        "ms" => 1e-3,
        "us" | "\u{b5}s" => 1e-6,
        "ns" => 1e-9,
        "ps" => 1e-12,
        "fs" => 1e-15,
        other => return Err(format!("unknown time unit '{other}' in '{text}'")),
    };
    Ok(value * scale)
}

fn parse_angular_frequency_str(text: &str) -> std::result::Result<f64, String> {
    let (value, unit) = split_quantity(text)?;
    match unit {
        "rad/s" => Ok(value),
        other => Err(format!(
            "unknown angular-frequency unit '{other}' in '{text}' (use rad/s)"
        )),
    }
}

macro_rules! quantity_newtype {
    ($name:ident, $parse:ident, $canonical:expr) => {
        /// Unit-bearing scalar stored in SI.
        #[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
        pub struct $name(pub f64);

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.serialize_str(&format!(concat!("{} ", $canonical), self.0))
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let text = String::deserialize(d)?;
                $parse(&text).map($name).map_err(D::Error::custom)
            }
        }
    };
}

quantity_newtype!(Length, parse_length_str, "m");
quantity_newtype!(TimeSpan, parse_time_str, "s");
quantity_newtype!(AngularFrequency, parse_angular_frequency_str, "rad/s");

/// Poling specification: solve at the central frequencies, explicitly
/// unpoled, or a fixed period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolingSpec {
    Auto,
    Unpoled,
    Fixed(f64),
}

impl Default for PolingSpec {
    fn default() -> Self {
        Self::Auto
    }
}

impl Serialize for PolingSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PolingSpec::Auto => s.serialize_str("auto"),
            PolingSpec::Unpoled => s.serialize_str("unpoled"),
            PolingSpec::Fixed(v) => s.serialize_str(&format!("{v} m")),
        }
    }
}

impl<'de> Deserialize<'de> for PolingSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        match text.trim() {
            "auto" => Ok(PolingSpec::Auto),
            "unpoled" => Ok(PolingSpec::Unpoled),
            other => parse_length_str(other)
                .map(PolingSpec::Fixed)
                .map_err(D::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalSection {
    pub length: Length,
    pub pump_wavelength: Length,
    pub signal_wavelength: Length,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub idler_wavelength: Option<Length>,
    #[serde(default)]
    pub poling_period: PolingSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub coefficients: Vec<f64>,
    pub valid_range_um: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionSection {
    pub pump: String,
    pub signal: String,
    pub idler: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub models: BTreeMap<String, ModelSpec>,
}

impl Default for DispersionSection {
    fn default() -> Self {
        Self {
            pump: "ktp-z-default".to_string(),
            signal: "ktp-z-default".to_string(),
            idler: "ktp-z-default".to_string(),
            models: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSpec {
    pub waist: Length,
    #[serde(default = "zero_length")]
    pub focal_shift: Length,
}

fn zero_length() -> Length {
    Length(0.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamsSection {
    pub pump: BeamSpec,
    pub signal: BeamSpec,
    pub idler: BeamSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    pub kind: SpectrumKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pulse_duration: Option<TimeSpan>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumKind {
    Cw,
    Pulsed,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            kind: SpectrumKind::Cw,
            pulse_duration: None,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetuningSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signal_wavelength: Option<Length>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signal_offset: Option<AngularFrequency>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub variable: String,
    pub start: Length,
    pub stop: Length,
    pub count: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    #[serde(default, rename = "axis", skip_serializing_if = "Vec::is_empty")]
    pub axes: Vec<AxisSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesSection {
    #[serde(default = "fgm_string")]
    pub signal: String,
    #[serde(default = "fgm_string")]
    pub idler: String,
    #[serde(default = "default_block_p")]
    pub max_p: u32,
    #[serde(default = "default_block_l")]
    pub max_abs_l: i32,
}

fn fgm_string() -> String {
    "0,0".to_string()
}
fn default_block_p() -> u32 {
    2
}
fn default_block_l() -> i32 {
    2
}

impl Default for ModesSection {
    fn default() -> Self {
        Self {
            signal: fgm_string(),
            idler: fgm_string(),
            max_p: default_block_p(),
            max_abs_l: default_block_l(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrightnessSection {
    #[serde(default = "default_band")]
    pub band: [Length; 2],
    #[serde(default = "default_coarse_points")]
    pub coarse_points: usize,
}

fn default_band() -> [Length; 2] {
    [Length(800.0e-9), Length(820.0e-9)]
}
fn default_coarse_points() -> usize {
    201
}

impl Default for BrightnessSection {
    fn default() -> Self {
        Self {
            band: default_band(),
            coarse_points: default_coarse_points(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    #[serde(default = "default_objective")]
    pub objective: String,
    #[serde(default = "default_search_min")]
    pub search_min: Length,
    #[serde(default = "default_search_max")]
    pub search_max: Length,
}

fn default_objective() -> String {
    "brightness".to_string()
}
fn default_search_min() -> Length {
    Length(-10.0e-3)
}
fn default_search_max() -> Length {
    Length(10.0e-3)
}

impl Default for OptimizeSection {
    fn default() -> Self {
        Self {
            objective: default_objective(),
            search_min: default_search_min(),
            search_max: default_search_max(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsaSection {
    /// Half-span of the symmetric detuning grid; `None` resolves to 4/T0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_span: Option<AngularFrequency>,
    #[serde(default = "default_jsa_points")]
    pub points: usize,
}

fn default_jsa_points() -> usize {
    64
}

impl Default for JsaSection {
    fn default() -> Self {
        Self {
            half_span: None,
            points: default_jsa_points(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    #[serde(default = "default_radial_nodes")]
    pub radial_nodes: u32,
    #[serde(default = "default_azimuthal_nodes")]
    pub azimuthal_nodes: u32,
    #[serde(default = "default_z_nodes")]
    pub z_nodes: u32,
    /// Radial cutoff as a multiple of 1/min(waist).
    #[serde(default = "default_cutoff_factor")]
    pub cutoff_factor: f64,
    #[serde(default = "default_oracle_p")]
    pub max_p: u32,
    #[serde(default = "default_oracle_l")]
    pub max_abs_l: i32,
}

fn default_radial_nodes() -> u32 {
    28
}
fn default_azimuthal_nodes() -> u32 {
    20
}
fn default_z_nodes() -> u32 {
    32
}
fn default_cutoff_factor() -> f64 {
    6.0
}
fn default_oracle_p() -> u32 {
    1
}
fn default_oracle_l() -> i32 {
    1
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            radial_nodes: default_radial_nodes(),
            azimuthal_nodes: default_azimuthal_nodes(),
            z_nodes: default_z_nodes(),
            cutoff_factor: default_cutoff_factor(),
            max_p: default_oracle_p(),
            max_abs_l: default_oracle_l(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    Max,
    None,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_normalize")]
    pub normalize: Normalization,
}

fn default_normalize() -> Normalization {
    Normalization::Max
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            normalize: default_normalize(),
        }
    }
}

/// Whole run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub crystal: CrystalSection,
    #[serde(default)]
    pub dispersion: DispersionSection,
    pub beams: BeamsSection,
    #[serde(default)]
    pub pump_spectrum: SpectrumSection,
    #[serde(default)]
    pub detuning: DetuningSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub modes: ModesSection,
    #[serde(default)]
    pub brightness: BrightnessSection,
    #[serde(default)]
    pub optimize: OptimizeSection,
    #[serde(default)]
    pub jsa: JsaSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    pub fn parse(text: &str) -> CfgResult<Self> {
        toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    /// Canonical TOML rendering used for provenance headers; reparsing it
    /// reproduces this configuration exactly.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    fn model_by_name(&self, name: &str) -> CfgResult<SellmeierModel> {
        if let Some(spec) = self.dispersion.models.get(name) {
            return SellmeierModel::new(
                name,
                spec.coefficients.clone(),
                (spec.valid_range_um[0], spec.valid_range_um[1]),
            )
            .map_err(|e| ConfigError(e.to_string()));
        }
        SellmeierModel::builtin(name)
            .ok_or_else(|| ConfigError(format!("unknown dispersion model '{name}'")))
    }

    pub fn build_setup(&self) -> CfgResult<SpdcSetup> {
        let poling = match self.crystal.poling_period {
            PolingSpec::Auto => None,
            PolingSpec::Unpoled => Some(f64::INFINITY),
            PolingSpec::Fixed(v) => Some(v),
        };
        let crystal = CrystalConfig::new(
            self.crystal.length.0,
            self.crystal.pump_wavelength.0,
            self.crystal.signal_wavelength.0,
            self.crystal.idler_wavelength.map(|l| l.0),
            poling,
        )
        .map_err(|e| ConfigError(e.to_string()))?;
        let spectrum = match self.pump_spectrum.kind {
            SpectrumKind::Cw => {
                if self.pump_spectrum.pulse_duration.is_some() {
                    return Err(ConfigError(
                        "pulse_duration is only meaningful for kind = \"pulsed\"".to_string(),
                    ));
                }
                PumpSpectrum::ContinuousWave
            }
            SpectrumKind::Pulsed => {
                let duration = self.pump_spectrum.pulse_duration.ok_or_else(|| {
                    ConfigError("kind = \"pulsed\" requires pulse_duration".to_string())
                })?;
                PumpSpectrum::PulsedGaussian {
                    pulse_duration: duration.0,
                }
            }
        };
        let beam = |spec: &BeamSpec| {
            BeamGeometry::new(spec.waist.0, spec.focal_shift.0)
                .map_err(|e| ConfigError(e.to_string()))
        };
        SpdcSetup::new(
            crystal,
            self.model_by_name(&self.dispersion.pump)?,
            self.model_by_name(&self.dispersion.signal)?,
            self.model_by_name(&self.dispersion.idler)?,
            beam(&self.beams.pump)?,
            beam(&self.beams.signal)?,
            beam(&self.beams.idler)?,
            spectrum,
        )
        .map_err(|e| ConfigError(e.to_string()))
    }

    /// Continuous-wave detuning pair requested by the [detuning] section.
    pub fn detuning(&self, setup: &SpdcSetup) -> CfgResult<DetuningPair> {
        match (
            self.detuning.signal_wavelength,
            self.detuning.signal_offset,
        ) {
            (Some(_), Some(_)) => Err(ConfigError(
                "give either detuning.signal_wavelength or detuning.signal_offset, not both"
                    .to_string(),
            )),
            (Some(lambda), None) => Ok(DetuningPair::cw(
                crate::analysis::detuning_from_wavelength(setup, lambda.0),
            )),
            (None, Some(offset)) => Ok(DetuningPair::cw(offset.0)),
            (None, None) => Ok(DetuningPair::zero()),
        }
    }

    fn parse_mode(text: &str) -> CfgResult<LGIndex> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(ConfigError(format!(
                "mode '{text}' must be given as \"p,l\""
            )));
        }
        let p: u32 = parts[0]
            .parse()
            .map_err(|_| ConfigError(format!("bad radial number in mode '{text}'")))?;
        let l: i32 = parts[1]
            .parse()
            .map_err(|_| ConfigError(format!("bad OAM number in mode '{text}'")))?;
        Ok(LGIndex::new(p, l))
    }

    pub fn mode_pair(&self) -> CfgResult<(LGIndex, LGIndex)> {
        Ok((
            Self::parse_mode(&self.modes.signal)?,
            Self::parse_mode(&self.modes.idler)?,
        ))
    }

    fn axis_from_spec(spec: &AxisSpec) -> CfgResult<ScanAxis> {
        let variable = match spec.variable.as_str() {
            "z_p" => ScanVariable::PumpShift,
            "z_s" => ScanVariable::SignalShift,
            "z_i" => ScanVariable::IdlerShift,
            "z_si" => ScanVariable::LockedCollectionShift,
            "lambda_s" => ScanVariable::SignalWavelength,
            other => {
                return Err(ConfigError(format!(
                    "unknown scan variable '{other}' (use z_p, z_s, z_i, z_si, lambda_s)"
                )))
            }
        };
        ScanAxis::new(variable, spec.start.0, spec.stop.0, spec.count)
            .map_err(|e| ConfigError(e.to_string()))
    }

    /// The scan axes, validated against the variables a subcommand expects.
    pub fn scan_axes(&self, expected: &[ScanVariable]) -> CfgResult<Vec<ScanAxis>> {
        if self.scan.axes.len() != expected.len() {
            return Err(ConfigError(format!(
                "this command needs {} scan axis(es), configuration has {}",
                expected.len(),
                self.scan.axes.len()
            )));
        }
        let axes: Vec<ScanAxis> = self
            .scan
            .axes
            .iter()
            .map(Self::axis_from_spec)
            .collect::<CfgResult<_>>()?;
        for (axis, &want) in axes.iter().zip(expected) {
            if axis.variable != want {
                return Err(ConfigError(format!(
                    "scan axis over {:?} found where {want:?} was expected",
                    axis.variable
                )));
            }
        }
        Ok(axes)
    }

    pub fn oracle_grid(&self, setup: &SpdcSetup) -> CfgResult<OracleGrid> {
        let min_waist = setup
            .pump_beam
            .waist
            .min(setup.signal_beam.waist)
            .min(setup.idler_beam.waist);
        OracleGrid::new(
            self.oracle.radial_nodes,
            self.oracle.azimuthal_nodes,
            self.oracle.z_nodes,
            self.oracle.cutoff_factor / min_waist,
            min_waist,
        )
        .map_err(|e| ConfigError(e.to_string()))
    }

    /// JSA half-span: explicit value or 4/T0.
    pub fn jsa_half_span(&self) -> CfgResult<Option<f64>> {
        match (self.jsa.half_span, self.pump_spectrum.pulse_duration) {
            (Some(span), _) => Ok(Some(span.0)),
            (None, Some(duration)) => Ok(Some(4.0 / duration.0)),
            (None, None) => Ok(None),
        }
    }
}

/// Build a [`SpdcSetup`] directly from library types; convenience for tests.
pub fn parse_and_build(text: &str) -> CfgResult<(RunConfig, SpdcSetup)> {
    let config = RunConfig::parse(text)?;
    let setup = config.build_setup()?;
    Ok((config, setup))
}

impl From<ConfigError> for crate::error::Error {
    fn from(e: ConfigError) -> Self {
        crate::error::Error::InvalidInput(e.0)
    }
}
