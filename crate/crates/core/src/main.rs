//! Command-line front end: turns a TOML run configuration into CSV
//! artifacts (efficiency maps, focus scans, spectra, brightness, optimal
//! focus curves, mode tables, purity maps, oracle cross-checks).

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

use spdc_focus::analysis::{
    self, FocusObjective, ScanVariable,
};
use spdc_focus::config::{Normalization, RunConfig};
use spdc_focus::csvout::{format_sig12, write_atomic, CsvDocument};
use spdc_focus::oracle;
use spdc_focus::{overlap_amplitude, LGIndex, VERSION};

#[derive(Parser)]
#[command(
    name = "spdc-focus",
    version,
    about = "Laguerre-Gaussian coupling of photon pairs with displaced focal planes"
)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output CSV path (written atomically).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cap the worker-thread count; results are identical for any value.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override the configuration's normalization mode.
    #[arg(long, global = true, value_enum)]
    normalize: Option<NormalizeArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormalizeArg {
    Max,
    None,
}

#[derive(Subcommand)]
enum Command {
    /// Coupling-efficiency map over signal and idler focal shifts.
    Map,
    /// Normalized coupling versus the pump focal position.
    FocusScan,
    /// Frequency-resolved coupling of one mode pair (CW pump).
    Spectrum,
    /// Peak coupling over a wavelength band.
    Brightness,
    /// Maximizing locked signal/idler shift for each pump shift.
    Optimize,
    /// Coupling table over a truncated LG block.
    Modes,
    /// Spectral purity over a (pump shift, locked collection shift) grid.
    Purity,
    /// Closed form versus brute-force quadrature on a mode block.
    OracleCheck,
}

enum RunError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl From<spdc_focus::config::ConfigError> for RunError {
    fn from(e: spdc_focus::config::ConfigError) -> Self {
        RunError::Config(e.to_string())
    }
}

impl From<spdc_focus::Error> for RunError {
    fn from(e: spdc_focus::Error) -> Self {
        RunError::Numerical(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Config(message)) => {
            eprintln!("configuration error: {message}");
            ExitCode::from(2)
        }
        Err(RunError::Numerical(message)) => {
            eprintln!("numerical error: {message}");
            ExitCode::from(3)
        }
        Err(RunError::Io(message)) => {
            eprintln!("i/o error: {message}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), RunError> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(RunError::Config("--threads must be at least 1".to_string()));
        }
        // ignore the error if a pool already exists (e.g. repeated calls in tests)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let config_path = cli
        .config
        .ok_or_else(|| RunError::Config("--config is required".to_string()))?;
    let out_path = cli
        .out
        .ok_or_else(|| RunError::Config("--out is required".to_string()))?;
    let text = std::fs::read_to_string(&config_path)
        .map_err(|e| RunError::Config(format!("cannot read {}: {e}", config_path.display())))?;
    let mut config = RunConfig::parse(&text)?;
    if let Some(mode) = cli.normalize {
        config.output.normalize = match mode {
            NormalizeArg::Max => Normalization::Max,
            NormalizeArg::None => Normalization::None,
        };
    }
    let document = match cli.command {
        Command::Map => run_map(&config)?,
        Command::FocusScan => run_focus_scan(&config)?,
        Command::Spectrum => run_spectrum(&config)?,
        Command::Brightness => run_brightness(&config)?,
        Command::Optimize => run_optimize(&config)?,
        Command::Modes => run_modes(&config)?,
        Command::Purity => run_purity(&config)?,
        Command::OracleCheck => run_oracle_check(&config)?,
    };
    let document = document.with_provenance(VERSION, &config.to_toml());
    write_atomic(&out_path, &document.render())
        .map_err(|e| RunError::Io(format!("cannot write {}: {e}", out_path.display())))?;
    Ok(())
}

fn normalization_factor(config: &RunConfig, raw_max: f64) -> f64 {
    match config.output.normalize {
        Normalization::Max => raw_max,
        Normalization::None => 1.0,
    }
}

fn run_map(config: &RunConfig) -> Result<CsvDocument, RunError> {
    let setup = config.build_setup()?;
    let axes = config.scan_axes(&[ScanVariable::SignalShift, ScanVariable::IdlerShift])?;
    let (signal_mode, idler_mode) = config.mode_pair()?;
    let det = config.detuning(&setup)?;
    let map = analysis::efficiency_map(&setup, &axes[0], &axes[1], signal_mode, idler_mode, det)?;
    let scale = match config.output.normalize {
        Normalization::Max => 1.0,
        Normalization::None => map.raw_max,
    };
    let mut doc = CsvDocument::new(&["z_s_m", "z_i_m", "coupling"]);
    doc.comment(format!(
        "argmax: z_s = {} m, z_i = {} m (refined = {})",
        format_sig12(map.optimum.location[0]),
        format_sig12(map.optimum.location[1]),
        map.optimum.refined
    ));
    doc.comment(format!("raw maximum = {}", format_sig12(map.raw_max)));
    for (i, &zs) in map.signal_shifts.iter().enumerate() {
        for (j, &zi) in map.idler_shifts.iter().enumerate() {
            doc.row(vec![
                format_sig12(zs),
                format_sig12(zi),
                format_sig12(map.value(i, j) * scale),
            ]);
        }
    }
    Ok(doc)
}

fn run_focus_scan(config: &RunConfig) -> Result<CsvDocument, RunError> {
    let setup = config.build_setup()?;
    let axes = config.scan_axes(&[ScanVariable::PumpShift])?;
    let (signal_mode, idler_mode) = config.mode_pair()?;
    let det = config.detuning(&setup)?;
    let scan = analysis::pump_focus_scan(&setup, &axes[0], signal_mode, idler_mode, det)?;
    let mut doc = CsvDocument::new(&["z_p_m", "amplitude", "probability"]);
    match scan.fwhm {
        Some(w) => doc.comment(format!("fwhm_m = {}", format_sig12(w))),
        None => doc.comment("fwhm_m = undefined (no half-maximum crossing inside the scan)"),
    }
    for i in 0..scan.pump_shifts.len() {
        doc.row(vec![
            format_sig12(scan.pump_shifts[i]),
            format_sig12(scan.amplitude[i]),
            format_sig12(scan.probability[i]),
        ]);
    }
    Ok(doc)
}

fn run_spectrum(config: &RunConfig) -> Result<CsvDocument, RunError> {
    let setup = config.build_setup()?;
    let axes = config.scan_axes(&[ScanVariable::SignalWavelength])?;
    let (signal_mode, idler_mode) = config.mode_pair()?;
    let response = analysis::spectral_response(&setup, signal_mode, idler_mode, &axes[0])?;
    let mut doc = CsvDocument::new(&["lambda_s_m", "coupling"]);
    doc.comment(format!(
        "peak: lambda_s = {} m, value = {}",
        format_sig12(response.peak_wavelength),
        format_sig12(response.peak_value)
    ));
    let values = match config.output.normalize {
        Normalization::Max => &response.normalized,
        Normalization::None => &response.probability,
    };
    for (lambda, value) in response.wavelengths.iter().zip(values) {
        doc.row(vec![format_sig12(*lambda), format_sig12(*value)]);
    }
    Ok(doc)
}

fn run_brightness(config: &RunConfig) -> Result<CsvDocument, RunError> {
    let setup = config.build_setup()?;
    let (signal_mode, idler_mode) = config.mode_pair()?;
    let band = (config.brightness.band[0].0, config.brightness.band[1].0);
    let result = analysis::spectral_brightness(
        &setup,
        signal_mode,
        idler_mode,
        band,
        config.brightness.coarse_points,
    )?;
    let mut doc = CsvDocument::new(&["peak_lambda_m", "peak_value", "at_band_edge"]);
    doc.row(vec![
        format_sig12(result.peak_wavelength),
        format_sig12(result.peak_value),
        result.at_band_edge.to_string(),
    ]);
    Ok(doc)
}

fn run_optimize(config: &RunConfig) -> Result<CsvDocument, RunError> {
    let setup = config.build_setup()?;
    let axes = config.scan_axes(&[ScanVariable::PumpShift])?;
    let objective = match config.optimize.objective.as_str() {
        "brightness" => FocusObjective::SpectralBrightness {
            band: (config.brightness.band[0].0, config.brightness.band[1].0),
            coarse_points: config.brightness.coarse_points,
        },
        "fixed-wavelength" => {
            let lambda = config
                .detuning
                .signal_wavelength
                .map(|l| l.0)
                .unwrap_or(setup.crystal().signal_wavelength);
            FocusObjective::FixedWavelength(lambda)
        }
        other => {
            return Err(RunError::Config(format!(
                "unknown objective '{other}' (use brightness or fixed-wavelength)"
            )))
        }
    };
    let search = (config.optimize.search_min.0, config.optimize.search_max.0);
    let curve = analysis::optimal_signal_focus(&setup, &axes[0], objective, search)?;
    let mut doc = CsvDocument::new(&["z_p_m", "z_s_max_m", "value", "status"]);
    for point in curve {
        doc.row(vec![
            format_sig12(point.pump_shift),
            point
                .collection_shift
                .map(format_sig12)
                .unwrap_or_default(),
            format_sig12(point.value),
            point.note.unwrap_or_else(|| "ok".to_string()),
        ]);
    }
    Ok(doc)
}

fn run_modes(config: &RunConfig) -> Result<CsvDocument, RunError> {
    let setup = config.build_setup()?;
    let det = config.detuning(&setup)?;
    let table =
        analysis::mode_distribution(&setup, config.modes.max_p, config.modes.max_abs_l, det)?;
    let scale = normalization_factor(config, table.raw_max);
    let mut doc = CsvDocument::new(&["p_s", "l_s", "p_i", "l_i", "coupling"]);
    doc.comment(format!("raw maximum = {}", format_sig12(table.raw_max)));
    for entry in &table.entries {
        doc.row(vec![
            entry.signal.p.to_string(),
            entry.signal.l.to_string(),
            entry.idler.p.to_string(),
            entry.idler.l.to_string(),
            format_sig12(entry.probability / scale),
        ]);
    }
    Ok(doc)
}

fn run_purity(config: &RunConfig) -> Result<CsvDocument, RunError> {
    let setup = config.build_setup()?;
    let axes = config.scan_axes(&[
        ScanVariable::PumpShift,
        ScanVariable::LockedCollectionShift,
    ])?;
    let half_span = config
        .jsa_half_span()?
        .ok_or_else(|| RunError::Config("purity needs a pulsed pump".to_string()))?;
    let map = analysis::purity_map(&setup, &axes[0], &axes[1], half_span, config.jsa.points)?;
    let mut doc = CsvDocument::new(&["z_p_m", "z_si_m", "purity"]);
    for (i, &zp) in map.pump_shifts.iter().enumerate() {
        for (j, &zc) in map.collection_shifts.iter().enumerate() {
            doc.row(vec![
                format_sig12(zp),
                format_sig12(zc),
                format_sig12(map.value(i, j)),
            ]);
        }
    }
    Ok(doc)
}

fn run_oracle_check(config: &RunConfig) -> Result<CsvDocument, RunError> {
    let setup = config.build_setup()?;
    let det = config.detuning(&setup)?;
    let grid = config.oracle_grid(&setup)?;
    let fgm = LGIndex::new(0, 0);
    let reference_closed = overlap_amplitude(&setup, fgm, fgm, det)?.value;
    let reference_oracle = oracle::brute_force_amplitude(&setup, fgm, fgm, det, &grid)?;
    let mut doc = CsvDocument::new(&[
        "p_s",
        "l_s",
        "p_i",
        "l_i",
        "closed_norm",
        "oracle_norm",
        "rel_deviation",
    ]);
    let max_p = config.oracle.max_p;
    let max_l = config.oracle.max_abs_l;
    for p_s in 0..=max_p {
        for l_s in -max_l..=max_l {
            for p_i in 0..=max_p {
                let l_i = -l_s;
                let s_mode = LGIndex::new(p_s, l_s);
                let i_mode = LGIndex::new(p_i, l_i);
                let closed = overlap_amplitude(&setup, s_mode, i_mode, det)?.value;
                let brute = oracle::brute_force_amplitude(&setup, s_mode, i_mode, det, &grid)?;
                let closed_norm = (closed / reference_closed).norm_sqr();
                let oracle_norm = (brute / reference_oracle).norm_sqr();
                let rel = (closed_norm - oracle_norm).abs() / oracle_norm.max(f64::MIN_POSITIVE);
                doc.row(vec![
                    p_s.to_string(),
                    l_s.to_string(),
                    p_i.to_string(),
                    l_i.to_string(),
                    format_sig12(closed_norm),
                    format_sig12(oracle_norm),
                    format_sig12(rel),
                ]);
            }
        }
    }
    Ok(doc)
}
