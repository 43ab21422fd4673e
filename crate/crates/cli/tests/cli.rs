use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cascade"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Value of `key = value` in a report.
fn field(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in:\n{report}"))
        .trim()
        .parse()
        .unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn index_prints_bbo_ordinary_index() {
    let o = run(&["index", "--material", "bbo", "--ray", "o", "--wavelength-nm", "626.342"]);
    assert!(o.status.success());
    let n = field(&stdout(&o), "n");
    assert!((n.atan().to_degrees() - 59.1).abs() < 0.1);
}

#[test]
fn index_out_of_band_is_usage_error() {
    let o = run(&["index", "--material", "linbo3", "--ray", "e", "--wavelength-nm", "400", "--temperature-c", "100"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn phasematch_bbo_and_ppln() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "pm.toml",
        "[bbo_shg]\nfundamental_nm = 626.342\ncrystal_length_mm = 10\n\n[ppln_sfg]\npump_nm = 1051.140\nsignal_nm = 1549.850\nlength_mm = 40\nperiod_um = 10.90\n",
    );
    let o = run(&["--config", cfg.to_str().unwrap(), "phasematch"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = stdout(&o);
    assert!((field(&r, "brewster_deg") - 59.1).abs() <= 0.1);
    assert!((field(&r, "theta_pm_deg") - 38.4).abs() <= 0.5);
    assert!((field(&r, "walkoff_mrad") - 80.0).abs() <= 4.0);
    assert!((field(&r, "walkoff_b") - 16.4).abs() <= 0.5);
    assert!((field(&r, "temperature_c") - 196.5).abs() <= 15.0);
    let fwhm = field(&r, "fwhm_c");
    assert!((0.25..=1.0).contains(&fwhm));
}

#[test]
fn missing_key_is_usage_error_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "pm.toml", "[bbo_shg]\nfundamental_nm = 626.342\n");
    let o = run(&["--config", cfg.to_str().unwrap(), "phasematch"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("crystal_length_mm"));
}

#[test]
fn unknown_command_is_usage_error() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

fn sfg_slope(dir: &Path, body: &str) -> (f64, Vec<Vec<String>>) {
    let cfg = write_config(dir, "sfg.toml", body);
    let o = run(&["--config", cfg.to_str().unwrap(), "sfg-curve"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&stdout(&o));
    let last = rows.last().unwrap();
    let (x, y): (f64, f64) = (last[0].parse().unwrap(), last[1].parse().unwrap());
    (y / x, rows)
}

#[test]
fn sfg_curve_measured_and_predicted() {
    let dir = tempfile::tempdir().unwrap();
    let common = "pump_nm = 1051.140\nsignal_nm = 1549.850\nlength_mm = 40\nproduct_max_w2 = 20\npoints = 11\n";
    let (measured, rows) =
        sfg_slope(dir.path(), &format!("[sfg]\nmode = \"measured\"\neta_pct_per_w_cm = 2.7\n{common}"));
    assert!((measured - 0.027 * 4.0).abs() < 1e-9);
    assert_eq!(rows[0], vec!["0", "0"]);
    let (predicted, _) = sfg_slope(
        dir.path(),
        &format!("[sfg]\nmode = \"predicted\"\nperiod_um = 10.90\npump_waist_um = 58\nsignal_waist_um = 66\n{common}"),
    );
    let ratio = predicted / measured;
    assert!((1.1..=1.5).contains(&ratio), "{ratio}");
}

const LAYOUT_A: &str =
    "[layout]\nd_mc_mm = 24.2\nl_long_mm = 527.6\nalpha_full_deg = 30.0\nr_mirror_mm = 50\ncrystal_length_mm = 10\n";

#[test]
fn cavity_solve_layout_a() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.toml", LAYOUT_A);
    let o = run(&["--config", cfg.to_str().unwrap(), "cavity", "solve"]);
    assert!(o.status.success());
    let r = stdout(&o);
    for (k, v) in [
        ("crystal_waist_t_um", 26.0),
        ("crystal_waist_s_um", 16.8),
        ("secondary_waist_t_um", 218.6),
        ("secondary_waist_s_um", 217.8),
    ] {
        assert!(((field(&r, k) - v) / v).abs() <= 0.05, "{k}");
    }
}

#[test]
fn cavity_unstable_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "u.toml", &LAYOUT_A.replace("d_mc_mm = 24.2", "d_mc_mm = 100"));
    let o = run(&["--config", cfg.to_str().unwrap(), "cavity", "solve"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn cavity_sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.toml",
        &format!("{LAYOUT_A}\n[sweep]\nparameter = \"d_mc\"\nfrom_mm = 20\nto_mm = 30\npoints = 101\n"),
    );
    let out = dir.path().join("out");
    let o = run(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "cavity", "sweep"]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(out.join("cavity_sweep.csv")).unwrap();
    assert!(csv.lines().next().unwrap().starts_with("# cascade"));
    assert_eq!(csv_rows(&csv).len(), 101);
    assert!(stdout(&o).contains("stable_window"));
}

#[test]
fn shg_curve_slopes_and_conversion() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "shg.toml",
        "[shg]\nt1_pct = 1.6\nconversion_main_pct = 42\np_design_w = 1.0\nlinear_lo_w = 1.0\nlinear_hi_w = 1.81\npoints = 11\n",
    );
    let o = run(&["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "shg-curve"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = stdout(&o);
    assert!((field(&r, "low_power_slope") - 2.0).abs() <= 0.01);
    assert!((field(&r, "t1_impedance_match") - 0.016).abs() < 1e-9);
    let rows = csv_rows(&std::fs::read_to_string(dir.path().join("shg_curve.csv")).unwrap());
    assert_eq!(rows[0][2], "0");
}

#[test]
fn tune_examples() {
    let o = run(&["tune", "--pump-nm", "1051.140", "--signal-nm", "1549.850"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    let sfg: f64 = rows[0][0].parse().unwrap();
    assert!((sfg - 626.342).abs() <= 0.001);
    let o = run(&["tune", "--sfg-nm", "626.342", "626.119", "626.445"]);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0][2].parse::<f64>().unwrap(), 80.0);
    let o = run(&[
        "--out",
        tempfile::tempdir().unwrap().path().to_str().unwrap(),
        "tune",
        "--sfg-nm",
        "626.119",
        "626.445",
    ]);
    let span = field(&stdout(&o), "uv_span_ghz");
    assert!((span - 495.0).abs() <= 5.0, "{span}");
}

#[test]
fn tune_needs_input() {
    assert_eq!(run(&["tune"]).status.code(), Some(2));
}

const LOCK: &str = "[locksim]\nt1_pct = 1.6\nl_passive_pct = 0.88\nround_trip_mm = 580\nduration_ms = 3\nwalk_rms_rad_per_sqrt_s = 30\nstep_time_ms = 0.1\nstep_rad = 2.0\ndecimate = 7\n";

fn body(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

#[test]
fn locksim_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "lock.toml", LOCK);
    let go = |sub: &str, seed: &str, stamp: bool| {
        let out = dir.path().join(sub);
        let mut args = vec!["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", seed];
        if stamp {
            args.push("--timestamp");
        }
        args.push("locksim");
        let o = run(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (
            std::fs::read_to_string(out.join("locksim.csv")).unwrap(),
            std::fs::read_to_string(out.join("locksim_events.txt")).unwrap(),
        )
    };
    let a = go("a", "7", false);
    let b = go("b", "7", true);
    let c = go("c", "8", false);
    assert_eq!(body(&a.0), body(&b.0));
    assert_eq!(body(&a.1), body(&b.1));
    assert!(b.0.contains("# generated-unix"));
    assert!(!a.0.contains("# generated-unix"));
    assert_ne!(body(&a.0), body(&c.0));
    assert!(a.1.contains("unlocked -> scanning integrator=0.000000000e0"));
}

#[test]
fn locksim_rejects_slow_sampling() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "lock.toml", &format!("{LOCK}sample_rate_mhz = 0.5\n"));
    let o = run(&["--config", cfg.to_str().unwrap(), "locksim"]);
    assert_eq!(o.status.code(), Some(4));
}
