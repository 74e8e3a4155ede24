use std::process::Command;

use teleport_cli::format::sig9;
use teleport_cli::reference::{markdown, Report, ReportRow};
use teleport_cli::{run, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, EXIT_VERIFY};

fn teleport(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("teleport").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn ok(args: &[&str]) -> String {
    let (code, out, err) = teleport(args);
    assert_eq!(code, EXIT_OK, "{args:?}: {err}");
    out
}

fn value_after(out: &str, label: &str) -> f64 {
    let line = out.lines().find(|l| l.starts_with(label)).unwrap_or_else(|| panic!("no {label} in {out}"));
    line.rsplit(' ').next().unwrap().parse().unwrap()
}

#[test]
fn ideal_recovery_gives_unit_fidelity_on_both_paths() {
    let out = ok(&[
        "fidelity",
        "--channel",
        "perfect",
        "--recovery",
        "di",
        "--gamma",
        "0",
        "--omega",
        "1",
        "--t",
        "3.14159265358979",
        "--method",
        "both",
    ]);
    assert!((value_after(&out, "F closed") - 1.0).abs() < 1e-6, "{out}");
    assert!((value_after(&out, "F numeric") - 1.0).abs() < 1e-6, "{out}");
}

#[test]
fn zero_duration_gives_one_half() {
    let out =
        ok(&["fidelity", "--channel", "perfect", "--recovery", "no", "--gamma", "0.1", "--omega", "1", "--t", "0"]);
    assert_eq!(value_after(&out, "F closed"), 0.5);
}

#[test]
fn both_methods_agree_for_a_decohered_channel() {
    let out = ok(&[
        "fidelity",
        "--channel",
        "di",
        "--t0",
        "2",
        "--recovery",
        "de",
        "--gamma",
        "0.1",
        "--omega",
        "5",
        "--t",
        "0.6283",
        "--method",
        "both",
    ]);
    assert!(value_after(&out, "|difference|") <= 1e-6);
}

#[test]
fn fidelity_json_has_both_values() {
    let out = ok(&[
        "fidelity",
        "--channel",
        "no",
        "--t0",
        "1",
        "--recovery",
        "di",
        "--omega",
        "2",
        "--t",
        "1",
        "--method",
        "both",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["channel"], "no");
    assert_eq!(v["recovery"], "di");
    let closed = v["closed"].as_f64().unwrap();
    let numeric = v["numeric"]["fidelity"].as_f64().unwrap();
    assert!((closed - numeric).abs() <= 1e-6);
    assert_eq!(v["numeric"]["points"].as_array().unwrap().len(), 6);
}

#[test]
fn verbose_lists_six_quadrature_points() {
    let out = ok(&[
        "fidelity",
        "--channel",
        "de",
        "--t0",
        "1",
        "--omega",
        "2",
        "--t",
        "1",
        "--method",
        "numeric",
        "--verbose",
    ]);
    let after = out.split("theta  phi").nth(1).unwrap();
    assert_eq!(after.lines().skip(1).filter(|l| l.split("  ").count() == 11).count(), 6, "{out}");
}

#[test]
fn loose_disagreement_check_fails_with_a_tight_tolerance() {
    let args =
        ["fidelity", "--channel", "di", "--t0", "2", "--omega", "5", "--t", "3", "--method", "both", "--step", "0.05"];
    let (code, _, _) = teleport(&args);
    assert_eq!(code, EXIT_OK);
    let mut tight = args.to_vec();
    tight.extend(["--tol", "two_path=0"]);
    let (code, out, err) = teleport(&tight);
    assert_eq!(code, EXIT_NUMERICAL, "{out}{err}");
    assert!(out.contains("F numeric"), "values are still printed");
}

#[test]
fn critical_time_reproduces_the_figure_grid() {
    let out = ok(&[
        "critical-time",
        "--channel",
        "perfect",
        "--recovery",
        "di,no,de",
        "--gamma",
        "0.1",
        "--omega-grid",
        "0.2:6:60",
    ]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "alpha,beta,gamma,t0,omega,t_c,f_max,boundary");
    assert_eq!(lines.len(), 181);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 8));
    assert_eq!(lines[1].split(',').take(2).collect::<Vec<_>>(), ["p", "di"]);
    assert!(lines[180].starts_with("p,de,"));
    assert!(!out.contains('\r'));
}

#[test]
fn critical_omega_feeds_fit() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("omega_c.csv");
    let csv = csv.to_str().unwrap();
    ok(&[
        "critical-omega",
        "--channel",
        "di",
        "--recovery",
        "di,de",
        "--gamma",
        "0.1",
        "--t0-grid",
        "0.15:7.85:20",
        "--output",
        csv,
    ]);
    let data = std::fs::read_to_string(csv).unwrap();
    assert!(data.starts_with("alpha,beta,gamma,t0,omega_c,f_max_at_omega_c\n"));
    assert_eq!(data.lines().count(), 41);

    let out = ok(&["fit", "--input", csv]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "alpha,beta,a,b,c,d,rms,window_lo,window_hi");
    assert_eq!(lines.len(), 3);
    for line in &lines[1..] {
        let cells: Vec<&str> = line.split(',').collect();
        let rms: f64 = cells[6].parse().unwrap();
        assert!(rms <= 1e-3, "{line}");
        assert_eq!(&cells[7..], ["0.150000000", "7.85000000"]);
    }

    let narrowed = ok(&["fit", "--input", csv, "--window", "1:5"]);
    let lo: f64 = narrowed.lines().nth(1).unwrap().split(',').nth(7).unwrap().parse().unwrap();
    assert!(lo >= 1.0);
}

#[test]
fn critical_omega_reports_missing_roots_as_empty_cells() {
    let out = ok(&["critical-omega", "--channel", "no", "--recovery", "no", "--t0", "30"]);
    assert_eq!(out.lines().nth(1).unwrap(), "no,no,0.100000000,30.0000000,,");
}

#[test]
fn critical_t0_scales_with_gamma() {
    let row = |gamma: &str| {
        let out = ok(&["critical-t0", "--channel", "no", "--recovery", "de", "--gamma", gamma]);
        let cells: Vec<f64> = out.lines().nth(1).unwrap().split(',').skip(2).map(|c| c.parse().unwrap()).collect();
        cells
    };
    let (a, b) = (row("0.1"), row("0.2"));
    assert_eq!(a[1], 1000.0);
    assert!((0.1 * a[2] - 0.2 * b[2]).abs() <= 1e-3 * 0.1 * a[2]);
}

#[test]
fn sweeps_write_the_documented_columns() {
    let out = ok(&["sweep", "--axis", "t", "--grid", "0:10:11", "--quantity", "fidelity", "--omega", "1"]);
    assert_eq!(out.lines().next().unwrap(), "axis,value,F");
    assert_eq!(out.lines().nth(1).unwrap(), "t,0.00000000,0.500000000");
    assert_eq!(out.lines().count(), 12);

    let out = ok(&["sweep", "--axis", "gamma", "--grid", "0.05:0.2:4", "--omega", "2"]);
    assert_eq!(out.lines().next().unwrap(), "axis,value,t_c,f_max");
    let f: Vec<f64> = out.lines().skip(1).map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    assert!(f.windows(2).all(|w| w[0] >= w[1]), "{out}");
}

#[test]
fn empty_grid_gives_header_only() {
    assert_eq!(ok(&["sweep", "--axis", "omega", "--grid", "0.1:1:0"]), "axis,value,t_c,f_max\n");
    assert_eq!(ok(&["critical-omega", "--t0-grid", "0:1:0"]), "alpha,beta,gamma,t0,omega_c,f_max_at_omega_c\n");
    assert_eq!(ok(&["critical-time", "--omega-grid", "0.1:1:0"]), "alpha,beta,gamma,t0,omega,t_c,f_max,boundary\n");
}

#[test]
fn outputs_are_identical_across_runs_and_thread_counts() {
    let args = ["critical-time", "--channel", "de", "--t0", "1", "--recovery", "di,no", "--omega-grid", "0.3:4:15"];
    let first = ok(&args);
    assert_eq!(first, ok(&args));
    for threads in ["1", "3"] {
        let mut with = vec!["--threads", threads];
        with.extend(args);
        assert_eq!(first, ok(&with));
    }
    let json = ["sweep", "--axis", "t0", "--grid", "0:4:9", "--omega", "3", "--format", "json"];
    assert_eq!(ok(&json), ok(&json));
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &["fidelity", "--omega", "1", "--t", "1", "--bogus"][..],
        &["fidelity", "--omega", "1"],
        &["fidelity", "--omega", "1", "--t", "1", "--channel", "xx"],
        &["fidelity", "--omega", "-1", "--t", "1"],
        &["fidelity", "--omega", "1", "--t", "1", "--tol", "nonsense=1"],
        &["sweep", "--axis", "t", "--grid", "0:1:3"],
        &["sweep", "--axis", "omega", "--grid", "1:0:3"],
        &["critical-time", "--omega", "1", "--omega-grid", "0:1:2"],
        &["critical-time"],
        &["--threads", "0", "critical-time", "--omega", "1"],
        &["fit", "--window", "5"],
        &["launch"],
    ] {
        let (code, out, err) = teleport(args);
        assert_eq!(code, EXIT_USAGE, "{args:?}: {out}{err}");
        assert!(!err.is_empty());
    }
}

#[test]
fn help_and_version_exit_zero() {
    let (code, out, _) = teleport(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("critical-omega"));
    assert_eq!(teleport(&["--version"]).0, EXIT_OK);
}

#[test]
fn missing_input_file_is_an_io_error() {
    let (code, _, err) = teleport(&["fit", "--input", "/nonexistent/omega_c.csv"]);
    assert_eq!(code, EXIT_NUMERICAL);
    assert!(err.contains("/nonexistent/omega_c.csv"));
}

#[test]
fn environment_variables_fill_defaults_and_flags_win() {
    let bin = env!("CARGO_BIN_EXE_teleport");
    let run = |extra: &[&str]| {
        let out = Command::new(bin)
            .args(["fidelity", "--omega", "2", "--t", "1"])
            .args(extra)
            .env("TELEPORT_GAMMA", "0")
            .env("TELEPORT_CHANNEL", "de")
            .output()
            .unwrap();
        assert!(out.status.success());
        String::from_utf8(out.stdout).unwrap()
    };
    let from_env = run(&[]);
    assert!(from_env.starts_with("channel de recovery di gamma 0 "), "{from_env}");
    let overridden = run(&["--gamma", "0.3"]);
    assert!(overridden.contains("gamma 0.3 "), "{overridden}");

    let out = Command::new(bin).args(["fidelity", "--nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--nope"));
}

#[test]
fn quick_verify_passes_and_fault_injection_fails() {
    let (code, out, _) = teleport(&["verify", "--quick"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["mode"], "quick");
    let modules: Vec<&str> =
        v["traceability"].as_array().unwrap().iter().map(|m| m["module"].as_str().unwrap()).collect();
    assert_eq!(modules, ["qmat", "lindblad", "environment", "teleport", "closedform", "analysis"]);

    let (code, out, _) = teleport(&["verify", "--quick", "--inject-fault"]);
    assert_eq!(code, EXIT_VERIFY);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let failed: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["id"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["two_path"]);
    assert_eq!(v["fault_injected"], true);
}

#[test]
fn report_markdown_lists_every_row() {
    let report = Report {
        rows: vec![ReportRow {
            id: "esd.no".into(),
            quantity: "sudden-death point".into(),
            citation: "published".into(),
            parameters: "gamma=1".into(),
            reference: 0.440687,
            computed: 0.4406867935,
            abs_deviation: 2.065e-7,
            rel_deviation: 4.69e-7,
        }],
        notes: vec!["informational".into()],
    };
    let md = markdown(&report);
    assert!(md.contains(&format!("| esd.no | sudden-death point | gamma=1 | {} |", sig9(0.440687))));
    assert!(md.ends_with("- informational\n"));
}
