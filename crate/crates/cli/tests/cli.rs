use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qratchet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qratchet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn without_timing(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("wall_time_s="))
        .map(|l| {
            if l.contains("\tok") || l.contains("\tfailed:") {
                l.rsplit_once('\t').map_or(l, |(rest, _)| rest)
            } else {
                l
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

const SMALL_CLASSICAL: &[&str] = &["--ensemble", "400", "--steps", "200"];
const SMALL_QUANTUM: &[&str] = &[
    "--engine",
    "quantum",
    "--dim",
    "61",
    "--trajectories",
    "24",
    "--periods",
    "5",
];

fn with(base: &[&str], extra: &[&str]) -> Vec<String> {
    base.iter().chain(extra).map(|s| s.to_string()).collect()
}

fn run(args: &[String]) -> Output {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    qratchet(&refs)
}

#[test]
fn point_writes_summary_and_distribution() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = with(
        &["point", "--k", "7.5", "--gamma", "0.3", "--out", out, "--emit-plots"],
        SMALL_CLASSICAL,
    );
    let first = run(&args);
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    let summary = read(&dir.path().join("point-classical-summary.txt"));
    assert!(summary.starts_with("# qratchet single-point run\n"));
    assert!(summary.contains("\nkick=7.5\n"));
    assert!(summary.contains("\nsteps=200\n"));
    assert!(summary.contains("\nstatus=ok\n"));
    let dist = read(&dir.path().join("point-classical-distribution.tsv"));
    assert!(dist.contains("end_header\nbin\tp\tP\n"));
    assert!(dir.path().join("point-classical-cloud.tsv").exists());
    assert!(dir.path().join("point-classical-distribution.gp").exists());

    // Same configuration, same files apart from timing.
    let again = run(&args);
    assert_eq!(code(&again), 0);
    assert_eq!(
        without_timing(&summary),
        without_timing(&read(&dir.path().join("point-classical-summary.txt")))
    );
    assert_eq!(dist, read(&dir.path().join("point-classical-distribution.tsv")));
}

#[test]
fn output_header_alone_reproduces_a_point_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    let args = with(
        &["point", "--k", "3", "--gamma", "0.6", "--seed", "17", "--out", first.to_str().unwrap()],
        SMALL_QUANTUM,
    );
    assert_eq!(code(&run(&args)), 0);
    let summary = first.join("point-quantum-tau0.411-summary.txt");
    let replay = qratchet(&[
        "point",
        "--config",
        summary.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert_eq!(code(&replay), 0, "{}", stderr(&replay));
    let name = "point-quantum-tau0.411-distribution.tsv";
    assert_eq!(read(&first.join(name)), read(&second.join(name)));
}

#[test]
fn quantum_point_without_kick_has_no_current() {
    let dir = tempfile::tempdir().unwrap();
    let args = with(
        &["point", "--k", "0", "--gamma", "0.5", "--out", dir.path().to_str().unwrap()],
        SMALL_QUANTUM,
    );
    assert_eq!(code(&run(&args)), 0);
    let summary = read(&dir.path().join("point-quantum-tau0.411-summary.txt"));
    let value = |key: &str| -> f64 {
        summary
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{key}=")))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!(value("J").abs() <= 3.0 * value("stderr_J") + 1e-12);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    fs::write(&config, "# test\nkick=2\ngamma=0.4\nensemble=100\nsteps=50\n").unwrap();
    let out = qratchet(&[
        "point",
        "--config",
        config.to_str().unwrap(),
        "--steps",
        "60",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary = read(&dir.path().join("point-classical-summary.txt"));
    assert!(summary.contains("\nkick=2\n") && summary.contains("\nsteps=60\n"));
}

#[test]
fn invalid_parameters_exit_with_config_error() {
    let out = qratchet(&["point", "--k", "1", "--gamma", "1.5", "--out", "/nonexistent-unused"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("gamma"), "{}", stderr(&out));

    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.conf");
    fs::write(&config, "kick=1\ngamma=0.5\nwarp=9\n").unwrap();
    let out = qratchet(&["point", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("warp"));
}

#[test]
fn sweep_interrupt_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let clean = dir.path().join("clean");
    let split = dir.path().join("split");
    let grid = ["--k-range", "2:10:2", "--gamma-range", "0.3:0.7:2", "--jobs", "2"];
    let sweep = |out: &Path, extra: &[&str]| {
        let mut args = vec!["sweep", "--out", out.to_str().unwrap()];
        args.extend(grid);
        args.extend(SMALL_QUANTUM);
        args.extend(extra);
        qratchet(&args)
    };
    let done = sweep(&clean, &[]);
    assert_eq!(code(&done), 0, "{}", stderr(&done));
    assert!(stderr(&done).contains("cells 4/4"));
    let artifact = clean.join("sweep-quantum-tau0.411.tsv");
    let text = read(&artifact);
    assert_eq!(text.lines().filter(|l| l.contains("\tok\t")).count(), 4);

    let stopped = sweep(&split, &["--stop-after", "1"]);
    assert_eq!(code(&stopped), 3);
    assert!(stderr(&stopped).contains("resume"));
    let partial = split.join("sweep-quantum-tau0.411.tsv");
    let resumed = qratchet(&["resume", partial.to_str().unwrap()]);
    assert_eq!(code(&resumed), 0, "{}", stderr(&resumed));
    assert_eq!(without_timing(&text), without_timing(&read(&partial)));

    // Nothing left to do.
    let again = qratchet(&["resume", partial.to_str().unwrap()]);
    assert_eq!(code(&again), 0);
    assert!(!stderr(&again).contains("cells"));

    // Same output path, different settings.
    let clash = sweep(&clean, &["--seed", "5"]);
    assert_eq!(code(&clash), 2);
    assert!(stderr(&clash).contains("different configuration"));
}

#[test]
fn strict_truncation_failures_exit_with_partial_status() {
    let dir = tempfile::tempdir().unwrap();
    let out = qratchet(&[
        "sweep",
        "--engine",
        "quantum",
        "--tau",
        "1.0",
        "--dim",
        "7",
        "--trajectories",
        "4",
        "--periods",
        "3",
        "--k-range",
        "9:9:1",
        "--gamma-range",
        "0.9:0.9:1",
        "--strict-truncation",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    let text = read(&dir.path().join("sweep-quantum-tau1.tsv"));
    assert!(text.contains("\tfailed:truncation-suspect"));
}

#[test]
fn analyze_modes() {
    let dir = tempfile::tempdir().unwrap();
    let runs = dir.path().join("runs");
    let runs_s = runs.to_str().unwrap();
    let grid = ["--k-range", "2:10:3", "--gamma-range", "0.45:0.55:3"];
    for engine in [SMALL_CLASSICAL, SMALL_QUANTUM] {
        let mut args = vec!["sweep", "--out", runs_s];
        args.extend(grid);
        args.extend(engine);
        assert_eq!(code(&qratchet(&args)), 0);
    }
    let c = runs.join("sweep-classical.tsv");
    let q = runs.join("sweep-quantum-tau0.411.tsv");
    let (c, q) = (c.to_str().unwrap(), q.to_str().unwrap());
    let out = dir.path().join("tables");
    let out_s = out.to_str().unwrap();

    let hist = qratchet(&["analyze", "hist", c, q, "--out", out_s, "--emit-plots"]);
    assert_eq!(code(&hist), 0, "{}", stderr(&hist));
    let table = read(&out.join("eta-histogram.tsv"));
    assert!(table.contains("eta_lo\teta_hi\tP_classical\tP_quantum@0.411\n"));
    assert_eq!(table.lines().filter(|l| !l.starts_with('#') && !l.starts_with("eta")).count(), 51);
    assert!(out.join("eta-histogram.gp").exists());

    let cut = qratchet(&["analyze", "cut", c, q, "--gamma", "0.45", "--out", out_s]);
    assert_eq!(code(&cut), 0, "{}", stderr(&cut));
    let table = read(&out.join("cut-gamma0.45.tsv"));
    assert!(table.contains("k\tJ_classical\tJ_quantum@0.411\n"));

    let missing = qratchet(&["analyze", "cut", c, "--gamma", "0.3", "--out", out_s]);
    assert_eq!(code(&missing), 4);
    let msg = stderr(&missing);
    assert!(msg.contains("available") && msg.contains("0.45") && msg.contains("0.55"), "{msg}");

    let heat = qratchet(&["analyze", "heatmap", q, "--out", out_s, "--emit-plots"]);
    assert_eq!(code(&heat), 0);
    let grid_file = read(&out.join("heatmap-quantum-tau0.411.tsv"));
    assert!(grid_file.contains("k_axis=2,6,10\n"));
    assert!(grid_file.contains("missing=NA\n"));
    let script = read(&out.join("heatmap-quantum-tau0.411.gp"));
    assert!(script.contains("\"heatmap-quantum-tau0.411.tsv\""));

    let scatter = qratchet(&["analyze", "eta-vs-j", c, "--out", out_s]);
    assert_eq!(code(&scatter), 0);
    let table = read(&out.join("eta-vs-j-classical.tsv"));
    assert_eq!(table.lines().filter(|l| !l.starts_with('#')).count(), 10);

    let absent = qratchet(&["analyze", "hist", "/nonexistent/sweep.tsv", "--out", out_s]);
    assert_eq!(code(&absent), 4);
}
