//! End-to-end tests of the command-line interface: exit codes, strict
//! config parsing, provenance round-trips, atomicity, and thread-count
//! independence.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_spdc-focus")
}

fn work_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("spdc-focus-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(binary())
        .args(args)
        .output()
        .expect("binary runs")
}

const BASE: &str = r#"
[crystal]
length = "0.5 mm"
pump_wavelength = "405 nm"
signal_wavelength = "810 nm"

[beams.pump]
waist = "12 um"
[beams.signal]
waist = "20 um"
[beams.idler]
waist = "20 um"
"#;

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn map_subcommand_writes_csv_with_provenance() {
    let dir = work_dir("map");
    let config = write_config(
        &dir,
        "map.toml",
        &format!(
            "{BASE}\n[[scan.axis]]\nvariable = \"z_s\"\nstart = \"-1 mm\"\nstop = \"1 mm\"\ncount = 5\n\n\
             [[scan.axis]]\nvariable = \"z_i\"\nstart = \"-1 mm\"\nstop = \"1 mm\"\ncount = 5\n"
        ),
    );
    let out = dir.join("map.csv");
    let result = run(&[
        "map",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        result.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# spdc-focus "));
    assert!(text.contains("z_s_m,z_i_m,coupling"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 26); // header + 25 cells
    assert!(!text.contains('\r'));

    // normalized map contains an exact 1
    assert!(text.lines().any(|l| l.ends_with(",1.00000000000e0")));
}

#[test]
fn embedded_config_reproduces_identical_output() {
    let dir = work_dir("roundtrip");
    let config = write_config(
        &dir,
        "scan.toml",
        &format!(
            "{BASE}\n[[scan.axis]]\nvariable = \"z_p\"\nstart = \"-1 mm\"\nstop = \"1 mm\"\ncount = 7\n"
        ),
    );
    let first = dir.join("first.csv");
    let status = run(&[
        "focus-scan",
        "--config",
        config.to_str().unwrap(),
        "--out",
        first.to_str().unwrap(),
    ]);
    assert!(status.status.success());
    let text = fs::read_to_string(&first).unwrap();
    let embedded = spdc_focus::csvout::extract_embedded_config(&text).unwrap();
    let config2 = write_config(&dir, "echoed.toml", &embedded);
    let second = dir.join("second.csv");
    let status = run(&[
        "focus-scan",
        "--config",
        config2.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert!(status.status.success());
    assert_eq!(
        fs::read(&first).unwrap(),
        fs::read(&second).unwrap(),
        "echoed configuration must reproduce bit-identical output"
    );
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = work_dir("threads");
    let config = write_config(
        &dir,
        "spectrum.toml",
        &format!(
            "{BASE}\n[[scan.axis]]\nvariable = \"lambda_s\"\nstart = \"805 nm\"\nstop = \"815 nm\"\ncount = 21\n"
        ),
    );
    let one = dir.join("one.csv");
    let four = dir.join("four.csv");
    assert!(run(&[
        "spectrum",
        "--config",
        config.to_str().unwrap(),
        "--out",
        one.to_str().unwrap(),
        "--threads",
        "1",
    ])
    .status
    .success());
    assert!(run(&[
        "spectrum",
        "--config",
        config.to_str().unwrap(),
        "--out",
        four.to_str().unwrap(),
        "--threads",
        "4",
    ])
    .status
    .success());
    assert_eq!(fs::read(&one).unwrap(), fs::read(&four).unwrap());
}

#[test]
fn malformed_unit_exits_2_with_position() {
    let dir = work_dir("badunit");
    let config = write_config(&dir, "bad.toml", &BASE.replace("\"0.5 mm\"", "\"10mmm\""));
    let out = dir.join("never.csv");
    let result = run(&[
        "map",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("line"), "stderr lacks position: {stderr}");
    assert!(stderr.contains("column"), "stderr lacks position: {stderr}");
    assert!(!out.exists(), "failed runs must not leave output files");
}

#[test]
fn unknown_key_exits_2() {
    let dir = work_dir("unknownkey");
    let config = write_config(&dir, "bad.toml", &format!("{BASE}\nunknown_key = 1\n"));
    let result = run(&[
        "map",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.join("x.csv").to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn empty_scan_axis_exits_2() {
    let dir = work_dir("emptyaxis");
    let config = write_config(
        &dir,
        "empty.toml",
        &format!(
            "{BASE}\n[[scan.axis]]\nvariable = \"z_s\"\nstart = \"-1 mm\"\nstop = \"1 mm\"\ncount = 0\n\n\
             [[scan.axis]]\nvariable = \"z_i\"\nstart = \"-1 mm\"\nstop = \"1 mm\"\ncount = 3\n"
        ),
    );
    let result = run(&[
        "map",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.join("x.csv").to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn missing_scan_section_exits_2() {
    let dir = work_dir("noscan");
    let config = write_config(&dir, "noscan.toml", BASE);
    let result = run(&[
        "map",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.join("x.csv").to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn normalize_flag_overrides_config_and_is_echoed() {
    let dir = work_dir("normflag");
    let config = write_config(
        &dir,
        "modes.toml",
        &format!("{BASE}\n[modes]\nmax_p = 1\nmax_abs_l = 1\n"),
    );
    let normalized = dir.join("norm.csv");
    let raw = dir.join("raw.csv");
    assert!(run(&[
        "modes",
        "--config",
        config.to_str().unwrap(),
        "--out",
        normalized.to_str().unwrap(),
    ])
    .status
    .success());
    assert!(run(&[
        "modes",
        "--config",
        config.to_str().unwrap(),
        "--out",
        raw.to_str().unwrap(),
        "--normalize",
        "none",
    ])
    .status
    .success());
    let text_norm = fs::read_to_string(&normalized).unwrap();
    let text_raw = fs::read_to_string(&raw).unwrap();
    assert_ne!(text_norm, text_raw);
    assert!(text_norm.contains("normalize = \"max\""));
    assert!(text_raw.contains("normalize = \"none\""));
    // normalized table tops out at exactly 1
    assert!(text_norm.lines().any(|l| l.ends_with(",1.00000000000e0")));
}

#[test]
fn brightness_and_optimize_smoke() {
    let dir = work_dir("bright");
    let config = write_config(
        &dir,
        "bright.toml",
        &format!(
            "{BASE}\n[brightness]\nband = [\"790 nm\", \"830 nm\"]\ncoarse_points = 81\n\n\
             [[scan.axis]]\nvariable = \"z_p\"\nstart = \"0 mm\"\nstop = \"1 mm\"\ncount = 2\n\n\
             [optimize]\nobjective = \"fixed-wavelength\"\nsearch_min = \"-1 mm\"\nsearch_max = \"1 mm\"\n"
        ),
    );
    let bright_out = dir.join("bright.csv");
    assert!(run(&[
        "brightness",
        "--config",
        config.to_str().unwrap(),
        "--out",
        bright_out.to_str().unwrap(),
    ])
    .status
    .success());
    let text = fs::read_to_string(&bright_out).unwrap();
    assert!(text.contains("peak_lambda_m,peak_value,at_band_edge"));

    let opt_out = dir.join("optimize.csv");
    assert!(run(&[
        "optimize",
        "--config",
        config.to_str().unwrap(),
        "--out",
        opt_out.to_str().unwrap(),
    ])
    .status
    .success());
    let text = fs::read_to_string(&opt_out).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 3);
}

#[test]
fn purity_subcommand_smoke() {
    let dir = work_dir("purity");
    let config = write_config(
        &dir,
        "purity.toml",
        &format!(
            "{BASE}\n[pump_spectrum]\nkind = \"pulsed\"\npulse_duration = \"0.5 ps\"\n\n\
             [[scan.axis]]\nvariable = \"z_p\"\nstart = \"-1 mm\"\nstop = \"1 mm\"\ncount = 2\n\n\
             [[scan.axis]]\nvariable = \"z_si\"\nstart = \"-1 mm\"\nstop = \"1 mm\"\ncount = 2\n\n\
             [jsa]\npoints = 33\n"
        ),
    );
    let out = dir.join("purity.csv");
    let result = run(&[
        "purity",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        result.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 5);
    for row in &rows[1..] {
        let purity: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        assert!(purity > 0.0 && purity <= 1.0);
    }
}

#[test]
fn oracle_check_deviations_stay_below_a_percent() {
    let dir = work_dir("oracle");
    let config = write_config(
        &dir,
        "oracle.toml",
        &format!("{BASE}\n[oracle]\nmax_p = 1\nmax_abs_l = 1\n"),
    );
    let out = dir.join("oracle.csv");
    let result = run(&[
        "oracle-check",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        result.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );
    let text = fs::read_to_string(&out).unwrap();
    for row in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let deviation: f64 = row.split(',').last().unwrap().parse().unwrap();
        assert!(deviation < 0.01, "row '{row}' deviates by {deviation}");
    }
}

#[test]
fn numerical_failure_exits_3() {
    // a long unpoled crystal leaves a residual mismatch of ~2e6 rad/m whose
    // oscillation exhausts the longitudinal node budget
    let dir = work_dir("numfail");
    let config = write_config(
        &dir,
        "unpoled.toml",
        &format!(
            "{}\n[[scan.axis]]\nvariable = \"z_s\"\nstart = \"-1 mm\"\nstop = \"1 mm\"\ncount = 3\n\n\
             [[scan.axis]]\nvariable = \"z_i\"\nstart = \"-1 mm\"\nstop = \"1 mm\"\ncount = 3\n",
            BASE.replace("length = \"0.5 mm\"", "length = \"40 mm\"").replace(
                "signal_wavelength = \"810 nm\"",
                "signal_wavelength = \"810 nm\"\npoling_period = \"unpoled\""
            )
        ),
    );
    let out = dir.join("x.csv");
    let result = run(&[
        "map",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(3));
    assert!(!out.exists());
}
