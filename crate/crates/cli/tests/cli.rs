//! End-to-end tests that drive the compiled binary through its public
//! surface: argument parsing, scenario files, CSV/JSON output, exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn pacot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pacot"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout should be UTF-8")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr should be UTF-8")
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "expected exit {code}, got {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        stdout_of(out),
        stderr_of(out)
    );
}

fn write_scenario(dir: &Path, body: &str) -> String {
    let path = dir.join("scenario.conf");
    fs::write(&path, body).expect("scenario file should write");
    path.to_str().expect("path should be UTF-8").to_owned()
}

#[test]
fn help_and_version_exit_zero() {
    let help = pacot(&["--help"]);
    assert_exit(&help, 0);
    assert!(stdout_of(&help).contains("capacity"));

    let version = pacot(&["--version"]);
    assert_exit(&version, 0);
}

#[test]
fn unknown_flag_exits_one() {
    let out = pacot(&["capacity", "--no-such-flag"]);
    assert_exit(&out, 1);
}

#[test]
fn capacity_row_matches_the_library() {
    let out = pacot(&[
        "capacity",
        "--mix",
        "zn=0.4,cd=0.3,hg=0.3",
        "--radius-mm",
        "3",
        "--length-mm",
        "12",
    ]);
    assert_exit(&out, 0);

    let text = stdout_of(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("mix,r_m,m,c_tm"));

    let mix: Vec<(f64, f64)> = [("zn", 0.4), ("cd", 0.3), ("hg", 0.3)]
        .iter()
        .map(|&(symbol, fraction)| {
            let entry = pacot_core::params::element(symbol).expect("known symbol");
            (fraction, entry.radius_pm * 1e-12)
        })
        .collect();
    let report = pacot_core::capacity::capacity_for_mix(3e-3, 12e-3, &mix)
        .expect("reference capacity should evaluate");
    let expected = format!(
        "\"zn=0.4,cd=0.3,hg=0.3\",{},{},{}",
        report.mean_radius_m, report.rings_per_layer, report.capacity
    );
    assert_eq!(lines.next(), Some(expected.as_str()));
    assert_eq!(lines.next(), None);
}

#[test]
fn capacity_rejects_bad_mixes() {
    let unknown = pacot(&["capacity", "--mix", "zn=0.5,xx=0.5"]);
    assert_exit(&unknown, 1);
    assert!(stderr_of(&unknown).contains("xx"));

    let repeated = pacot(&["capacity", "--mix", "zn=0.5,zn=0.5"]);
    assert_exit(&repeated, 1);

    let short = pacot(&["capacity", "--mix", "zn=0.5,cd=0.3"]);
    assert_exit(&short, 1);
    assert!(stderr_of(&short).contains("sum"));
}

#[test]
fn kinetics_steady_reports_a_distribution() {
    let out = pacot(&["kinetics", "steady", "--bit", "0"]);
    assert_exit(&out, 0);

    let doc: serde_json::Value =
        serde_json::from_str(&stdout_of(&out)).expect("steady output should be JSON");
    let p_u = doc["p_u"].as_f64().expect("p_u");
    let p_b = doc["p_b"].as_f64().expect("p_b");
    assert!((p_u + p_b - 1.0).abs() < 1e-12);

    let theta = doc["theta"].as_array().expect("theta");
    assert_eq!(theta.len(), 4);
    assert_eq!(theta[0]["state"], "U");
    let total: f64 = theta
        .iter()
        .map(|entry| entry["probability"].as_f64().expect("probability"))
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn trace_then_estimate_round_trip() {
    let dir = tempfile::tempdir().expect("tempdir");
    let trace_path = dir.path().join("trace.csv");
    let trace_arg = trace_path.to_str().expect("path");

    let trace = pacot(&[
        "kinetics",
        "trace",
        "--cycles",
        "3000",
        "--seed",
        "5",
        "--out",
        trace_arg,
    ]);
    assert_exit(&trace, 0);
    assert!(stdout_of(&trace).is_empty());

    let body = fs::read_to_string(&trace_path).expect("trace should exist");
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("state,dwell_s"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6000);
    for row in &rows {
        let state = row.split(',').next().expect("state column");
        assert!(
            matches!(state, "U" | "zn" | "cd" | "in"),
            "unexpected state {state}"
        );
    }

    let estimate = pacot(&["estimate", "--trace", trace_arg]);
    assert_exit(&estimate, 0);
    let doc: serde_json::Value =
        serde_json::from_str(&stdout_of(&estimate)).expect("estimate output should be JSON");
    assert_eq!(doc["events"].as_u64(), Some(3000));
    assert_eq!(doc["species"][0], "in");
    assert_eq!(doc["species"][1], "zn");
    assert_eq!(doc["species"][2], "cd");

    let ratios = doc["alpha_clipped"].as_array().expect("alpha_clipped");
    let total: f64 = ratios
        .iter()
        .map(|entry| entry.as_f64().expect("ratio"))
        .sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn estimate_rejects_a_malformed_trace() {
    let dir = tempfile::tempdir().expect("tempdir");
    let trace_path = dir.path().join("trace.csv");
    fs::write(&trace_path, "wrong,header\nU,1.0\n").expect("write");

    let out = pacot(&["estimate", "--trace", trace_path.to_str().expect("path")]);
    assert_exit(&out, 1);
    assert!(stderr_of(&out).contains("header"));
}

#[test]
fn scenario_file_overrides_defaults_and_reports_sources() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = write_scenario(
        dir.path(),
        "# trial configuration\n\npump_rpm = 700\nnum_events = 500\n",
    );

    let out = pacot(&["validate", "--print-params", "--scenario", &path]);
    assert_exit(&out, 0);
    let text = stdout_of(&out);
    assert!(text.contains("checks passed"));
    assert!(text.contains(&format!("{path}:3")), "missing source line:\n{text}");
    assert!(text.contains(&format!("{path}:4")));
}

#[test]
fn scenario_file_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().expect("tempdir");

    let unknown = write_scenario(dir.path(), "pump_rpm = 700\nno_such_key = 1\n");
    let out = pacot(&["validate", "--scenario", &unknown]);
    assert_exit(&out, 1);
    assert!(stderr_of(&out).contains(&format!("{unknown}:2")));

    let duplicate = write_scenario(dir.path(), "pump_rpm = 700\npump_rpm = 800\n");
    let out = pacot(&["validate", "--scenario", &duplicate]);
    assert_exit(&out, 1);
    let err = stderr_of(&out);
    assert!(err.contains(&format!("{duplicate}:2")));
    assert!(err.contains("line 1"));

    let malformed = write_scenario(dir.path(), "pump_rpm = fast\n");
    let out = pacot(&["validate", "--scenario", &malformed]);
    assert_exit(&out, 1);
    assert!(stderr_of(&out).contains(&format!("{malformed}:1")));
}

#[test]
fn validate_flags_parameter_faults() {
    let dir = tempfile::tempdir().expect("tempdir");

    let correlation = write_scenario(dir.path(), "rho_zn_cd = 1.5\n");
    let out = pacot(&["validate", "--scenario", &correlation]);
    assert_exit(&out, 1);
    assert!(stdout_of(&out).contains("FAIL correlation_psd"));

    let ordering = write_scenario(dir.path(), "bit0_kd = 6\n");
    let out = pacot(&["validate", "--scenario", &ordering]);
    assert_exit(&out, 1);
    assert!(stdout_of(&out).contains("FAIL bit_level_ordering"));
}

#[test]
fn detect_sweep_is_deterministic_for_a_fixed_seed() {
    let args = [
        "detect",
        "sweep",
        "--experiment",
        "affinity_ratio",
        "--grid",
        "0.3:0.7:3",
        "--seed",
        "7",
    ];
    let first = pacot(&args);
    assert_exit(&first, 0);
    let second = pacot(&args);
    assert_exit(&second, 0);
    assert_eq!(first.stdout, second.stdout);

    let text = stdout_of(&first);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("x,bep,pb_bit0,pb_bit1,lambda,mean0,var0,mean1,var1")
    );
    assert_eq!(lines.count(), 3);
}

#[test]
fn detect_sweep_exits_two_when_the_scheme_is_ill_conditioned() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = write_scenario(dir.path(), "kd_cd = 5.368421054e-6\n");

    let out = pacot(&[
        "detect",
        "sweep",
        "--experiment",
        "bit_ratio",
        "--grid",
        "0.3:0.7:3",
        "--scenario",
        &path,
    ]);
    assert_exit(&out, 2);
    assert!(stderr_of(&out).contains("condition"));
}

#[test]
fn release_sweep_reports_flow_velocity_and_times() {
    let out = pacot(&[
        "release",
        "sweep",
        "--variable",
        "rpm",
        "--grid",
        "500:1000:500",
        "--particles",
        "200",
    ]);
    assert_exit(&out, 0);

    let text = stdout_of(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("x,Q_m3s,u_ms,t_analytic_s,t_sim_mean_s,t_sim_std_s")
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|line| {
            line.split(',')
                .map(|field| field.parse().expect("numeric field"))
                .collect()
        })
        .collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0][3] > rows[1][3], "release time should fall with rpm");
    for row in &rows {
        assert!(row[1] > 0.0 && row[2] > 0.0 && row[4] > 0.0);
    }
}

#[test]
fn energy_sweep_is_linear_in_time() {
    let out = pacot(&[
        "energy",
        "sweep",
        "--variable",
        "rpm",
        "--grid",
        "500:1000:500",
        "--t-max",
        "10",
        "--t-steps",
        "3",
    ]);
    assert_exit(&out, 0);

    let text = stdout_of(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("variable,t_s,deltaP_Pa,Q_m3s,E_J"));
    let rows: Vec<Vec<f64>> = lines
        .map(|line| {
            line.split(',')
                .map(|field| field.parse().expect("numeric field"))
                .collect()
        })
        .collect();
    assert_eq!(rows.len(), 6);

    for chunk in rows.chunks(3) {
        assert_eq!(chunk[0][1], 0.0);
        assert_eq!(chunk[0][4], 0.0);
        let half = chunk[1][4];
        let full = chunk[2][4];
        assert!((full - 2.0 * half).abs() <= 1e-12 * full.abs());
    }
}

#[test]
fn grid_errors_exit_one() {
    let reversed = pacot(&[
        "energy", "sweep", "--variable", "rpm", "--grid", "1000:500:100",
    ]);
    assert_exit(&reversed, 1);

    let one_point = pacot(&[
        "energy", "sweep", "--variable", "rpm", "--grid", "0.5:1:1",
    ]);
    assert_exit(&one_point, 1);

    let out_of_range = pacot(&[
        "release", "sweep", "--variable", "rpm", "--grid", "10:100:10",
    ]);
    assert_exit(&out_of_range, 1);
}

#[test]
fn out_flag_writes_the_file_and_keeps_stdout_empty() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("capacity.csv");

    let out = pacot(&[
        "capacity",
        "--mix",
        "zn=0.2,cd=0.2,hg=0.2,pb=0.2,cu=0.2",
        "--out",
        path.to_str().expect("path"),
    ]);
    assert_exit(&out, 0);
    assert!(stdout_of(&out).is_empty());

    let body = fs::read_to_string(&path).expect("output file should exist");
    assert!(body.starts_with("mix,r_m,m,c_tm\n"));
    assert!(body.ends_with('\n'));
}

#[test]
fn reproduce_writes_verifiable_artifacts() {
    let dir = tempfile::tempdir().expect("tempdir");
    let first = dir.path().join("first");
    let second = dir.path().join("second");

    for outdir in [&first, &second] {
        let out = pacot(&[
            "reproduce",
            "fig6",
            "--seed",
            "42",
            "--outdir",
            outdir.to_str().expect("path"),
        ]);
        assert_exit(&out, 0);
    }

    let manifest: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(first.join("manifest.json")).expect("manifest should exist"),
    )
    .expect("manifest should be JSON");
    assert_eq!(manifest["master_seed"].as_u64(), Some(42));

    let artifacts = manifest["artifacts"].as_array().expect("artifacts");
    assert_eq!(artifacts.len(), 3);
    for artifact in artifacts {
        let name = artifact["path"].as_str().expect("path");
        let bytes = fs::read(first.join(name)).expect("artifact should exist");
        assert_eq!(bytes.len() as u64, artifact["bytes"].as_u64().expect("bytes"));

        let digest = hex::encode(Sha256::digest(&bytes));
        assert_eq!(artifact["sha256"].as_str(), Some(digest.as_str()));

        let rerun = fs::read(second.join(name)).expect("second run artifact");
        assert_eq!(bytes, rerun, "{name} should be byte-identical across runs");
    }
}

#[test]
fn thread_count_does_not_change_sweep_bytes() {
    let base = [
        "detect",
        "sweep",
        "--experiment",
        "bit_ratio",
        "--grid",
        "0.2:0.8:4",
    ];
    let single: Vec<&str> = base.iter().copied().chain(["--threads", "1"]).collect();
    let quad: Vec<&str> = base.iter().copied().chain(["--threads", "4"]).collect();

    let first = pacot(&single);
    assert_exit(&first, 0);
    let second = pacot(&quad);
    assert_exit(&second, 0);
    assert_eq!(first.stdout, second.stdout);
}
