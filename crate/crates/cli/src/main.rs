use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qratchet::analysis;
use qratchet::classical::point_cloud_table;
use qratchet::config::{KeyValues, RunConfig, END_HEADER};
use qratchet::distribution::format_float;
use qratchet::error::Error;
use qratchet::sweep::{
    self, plan_grid, run_cell_detailed, EngineConfig, Progress, SweepArtifact, SweepConfig,
    SweepOptions,
};

/// Dissipative ratchet simulations: classical and quantum currents and
/// participation ratios over the (K, gamma) plane.
#[derive(Parser)]
#[command(name = "qratchet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single (K, gamma) point and dump its momentum distribution.
    Point {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run a checkpointed parameter-space sweep.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        output: OutputArgs,
        #[command(flatten)]
        exec: ExecArgs,
    },
    /// Complete an interrupted sweep artifact using the configuration in its header.
    Resume {
        artifact: PathBuf,
        #[command(flatten)]
        exec: ExecArgs,
    },
    /// Derive tables (and optional plot scripts) from sweep artifacts.
    Analyze {
        mode: Mode,
        #[arg(required = true)]
        artifacts: Vec<PathBuf>,
        /// Grid row for `cut`.
        #[arg(long, required_if_eq("mode", "cut"))]
        gamma: Option<f64>,
        /// Uniform histogram bins on [0, 0.5]; an overflow bin is always added.
        #[arg(long, default_value_t = analysis::DEFAULT_ETA_BINS)]
        bins: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Heatmap,
    Hist,
    Cut,
    EtaVsJ,
}

#[derive(Args)]
struct RunArgs {
    /// key=value configuration file; flags override its entries. Any output
    /// header of this tool is a valid configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Dynamics [default: classical]
    #[arg(long, value_parser = ["classical", "quantum"])]
    engine: Option<String>,
    /// Kick strength K of a point run
    #[arg(long)]
    k: Option<f64>,
    /// Dissipation gamma of a point run, in [0, 1]
    #[arg(long)]
    gamma: Option<f64>,
    /// Sweep K axis [default: 1.5:10:34]
    #[arg(long, value_name = "MIN:MAX:COUNT")]
    k_range: Option<String>,
    /// Sweep gamma axis [default: 0.2:0.8:20]
    #[arg(long, value_name = "MIN:MAX:COUNT")]
    gamma_range: Option<String>,
    /// Effective Planck constant [default: 0.411]
    #[arg(long)]
    tau: Option<f64>,
    /// Asymmetry of the second harmonic [default: 0.5]
    #[arg(long)]
    a: Option<f64>,
    /// Phase of the second harmonic [default: pi/2]
    #[arg(long)]
    phi: Option<f64>,
    /// Odd momentum basis size [default: 243, 729 or 1459 for tau 0.411,
    /// 0.137, 0.068; otherwise the odd number nearest 100/tau]
    #[arg(long, value_name = "N")]
    dim: Option<usize>,
    /// Quantum trajectories per cell [default: 200]
    #[arg(long)]
    trajectories: Option<usize>,
    /// Classical initial conditions per cell [default: 10000]
    #[arg(long)]
    ensemble: Option<usize>,
    /// Classical map iterations [default: 10000]
    #[arg(long)]
    steps: Option<u64>,
    /// Quantum kick periods [default: 50]
    #[arg(long)]
    periods: Option<u32>,
    /// Master seed [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    /// Mark truncation-suspect quantum cells as failed
    #[arg(long)]
    strict_truncation: bool,
}

#[derive(Args)]
struct OutputArgs {
    /// Output directory
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Also write gnuplot scripts next to the data files
    #[arg(long)]
    emit_plots: bool,
}

#[derive(Args)]
struct ExecArgs {
    /// Worker threads [default: available parallelism]
    #[arg(long)]
    jobs: Option<usize>,
    /// Stop after this many cells, leaving the artifact resumable
    #[arg(long, hide = true)]
    stop_after: Option<usize>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL: u8 = 3;
const EXIT_MISSING: u8 = 4;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Point { run, output } => cmd_point(&run, &output),
        Command::Sweep { run, output, exec } => cmd_sweep(&run, &output, &exec),
        Command::Resume { artifact, exec } => cmd_resume(&artifact, &exec),
        Command::Analyze {
            mode,
            artifacts,
            gamma,
            bins,
            output,
        } => cmd_analyze(mode, &artifacts, gamma, bins, &output),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParam { .. } | Error::InvalidInput(_) | Error::Mismatch(_) => EXIT_CONFIG,
        Error::MissingRow { .. } | Error::Format { .. } => EXIT_MISSING,
        Error::Io { source, .. } if source.kind() == ErrorKind::NotFound => EXIT_MISSING,
        _ => 1,
    }
}

fn run_config(args: &RunArgs) -> Result<RunConfig, Error> {
    let mut kv = match &args.config {
        Some(path) => KeyValues::parse(
            &fs::read_to_string(path)
                .map_err(|e| Error::io(format!("reading {}", path.display()), e))?,
        )?,
        None => KeyValues::default(),
    };
    let mut set = |key: &str, value: Option<String>| {
        if let Some(v) = value {
            kv.set(key, v);
        }
    };
    set("engine", args.engine.clone());
    set("kick", args.k.map(|v| v.to_string()));
    set("gamma", args.gamma.map(|v| v.to_string()));
    set("k_range", args.k_range.clone());
    set("gamma_range", args.gamma_range.clone());
    set("tau", args.tau.map(|v| v.to_string()));
    set("a", args.a.map(|v| v.to_string()));
    set("phi", args.phi.map(|v| v.to_string()));
    set("dim", args.dim.map(|v| v.to_string()));
    set("trajectories", args.trajectories.map(|v| v.to_string()));
    set("ensemble", args.ensemble.map(|v| v.to_string()));
    set("steps", args.steps.map(|v| v.to_string()));
    set("periods", args.periods.map(|v| v.to_string()));
    set("seed", args.seed.map(|v| v.to_string()));
    if args.strict_truncation {
        set("strict_truncation", Some("true".into()));
    }
    RunConfig::from_key_values(&kv)
}

fn file_tag(config: &SweepConfig) -> String {
    config.source_tag().replace('@', "-tau")
}

fn create_dir(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))
}

fn write(path: &Path, contents: &str) -> Result<(), Error> {
    fs::write(path, contents).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    println!("{}", path.display());
    Ok(())
}

fn header(title: &str, format: &str, command: &str, body: &KeyValues) -> String {
    let mut kv = KeyValues::default();
    kv.set("format", format);
    kv.set("code_version", env!("CARGO_PKG_VERSION"));
    kv.set("command", command);
    for (k, v) in body.iter() {
        kv.set(k, v);
    }
    format!("# {title}\n{}{END_HEADER}\n", kv.render())
}

fn cmd_point(args: &RunArgs, output: &OutputArgs) -> Result<u8, Error> {
    let config = run_config(args)?;
    let sweep_config = config.point_sweep_config()?;
    let task = plan_grid(&sweep_config)?.remove(0);
    let out = run_cell_detailed(&task)?;
    let r = &out.result;

    create_dir(&output.out)?;
    let tag = format!("point-{}", file_tag(&sweep_config));
    let head = header("qratchet single-point run", "qratchet-point/1", "point", &config.key_values());

    let mut summary = KeyValues::default();
    summary.set("J", format_float(r.current));
    summary.set("eta", format_float(r.eta));
    summary.set("stderr_J", format_float(r.stderr));
    summary.set("edge_mass", format_float(out.edge_mass));
    summary.set("truncation_suspect", u8::from(r.truncation_suspect).to_string());
    summary.set("status", r.status.to_string());
    summary.set("wall_time_s", r.wall_time_s.to_string());
    write(
        &output.out.join(format!("{tag}-summary.txt")),
        &format!("{head}{}", summary.render()),
    )?;

    let (label, offset) = match task.run {
        EngineConfig::Quantum(run) => ("n", -((run.dim as i64 - 1) / 2)),
        EngineConfig::Classical(_) => ("bin", 0),
    };
    let dist_path = output.out.join(format!("{tag}-distribution.tsv"));
    write(&dist_path, &format!("{head}{}", out.distribution.to_table(label, offset)))?;
    if let Some(ensemble) = &out.ensemble {
        write(
            &output.out.join(format!("{tag}-cloud.tsv")),
            &format!("{head}{}", point_cloud_table(ensemble)),
        )?;
    }
    if output.emit_plots {
        let data = file_name(&dist_path);
        write(
            &output.out.join(format!("{tag}-distribution.gp")),
            &format!(
                "# gnuplot script; run with `gnuplot -p <this file>`\nset datafile separator \"\\t\"\nset key autotitle columnhead\nset xlabel \"p\"\nset ylabel \"P(p)\"\nset logscale y\nplot \"{data}\" using 2:3 with steps notitle\n"
            ),
        )?;
    }
    eprintln!(
        "J = {}  eta = {}  stderr = {}  edge_mass = {:.3e}  [{}]",
        r.current, r.eta, r.stderr, out.edge_mass, r.status
    );
    Ok(if r.status.is_ok() { 0 } else { EXIT_PARTIAL })
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn report(p: Progress) {
    let eta = p
        .eta()
        .map_or_else(|| "?".to_string(), |d| format!("{:.0}s", d.as_secs_f64()));
    eprintln!(
        "cells {}/{}  elapsed {:.0}s  eta {eta}",
        p.done,
        p.total,
        p.elapsed.as_secs_f64()
    );
}

fn sweep_options(exec: &ExecArgs) -> SweepOptions<'static> {
    let jobs = exec.jobs.unwrap_or_else(|| {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    });
    SweepOptions {
        jobs,
        stop_after: exec.stop_after,
        progress: Some(&report),
    }
}

fn finish_sweep(artifact: &SweepArtifact, path: &Path) -> Result<u8, Error> {
    println!("{}", path.display());
    let total = artifact.cells.len();
    if !artifact.is_complete() {
        eprintln!(
            "stopped with {}/{total} cells done; run `qratchet resume {}` to continue",
            artifact.completed(),
            path.display()
        );
        return Ok(EXIT_PARTIAL);
    }
    let failed = artifact.failed();
    if failed > 0 {
        eprintln!("{failed}/{total} cells failed; see the status column of {}", path.display());
        return Ok(EXIT_PARTIAL);
    }
    Ok(0)
}

fn cmd_sweep(args: &RunArgs, output: &OutputArgs, exec: &ExecArgs) -> Result<u8, Error> {
    let config = run_config(args)?.sweep_config()?;
    create_dir(&output.out)?;
    let path = output.out.join(format!("sweep-{}.tsv", file_tag(&config)));
    let artifact = sweep::run_sweep(&config, &path, &sweep_options(exec))?;
    finish_sweep(&artifact, &path)
}

fn cmd_resume(path: &Path, exec: &ExecArgs) -> Result<u8, Error> {
    let artifact = sweep::resume(path, &sweep_options(exec))?;
    finish_sweep(&artifact, path)
}

fn load_all(paths: &[PathBuf]) -> Result<Vec<SweepArtifact>, Error> {
    let artifacts = paths
        .iter()
        .map(|p| SweepArtifact::load(p))
        .collect::<Result<Vec<_>, _>>()?;
    for (a, p) in artifacts.iter().zip(paths) {
        if a.ok_cells().next().is_none() {
            return Err(Error::Io {
                context: format!("{} has no completed cells", p.display()),
                source: std::io::Error::from(ErrorKind::NotFound),
            });
        }
    }
    Ok(artifacts)
}

/// Comment block naming each input artifact and its configuration.
fn provenance(title: &str, args: &KeyValues, paths: &[PathBuf], artifacts: &[SweepArtifact]) -> String {
    let mut out = format!("# {title}\n");
    for (k, v) in args.iter() {
        out.push_str(&format!("# {k}={v}\n"));
    }
    for (path, a) in paths.iter().zip(artifacts) {
        out.push_str(&format!("# input {} ({})\n", path.display(), a.config.source_tag()));
        for (k, v) in sweep::header_key_values(&a.config).iter() {
            out.push_str(&format!("#   {k}={v}\n"));
        }
    }
    out
}

fn cmd_analyze(
    mode: Mode,
    paths: &[PathBuf],
    gamma: Option<f64>,
    bins: usize,
    output: &OutputArgs,
) -> Result<u8, Error> {
    let artifacts = load_all(paths)?;
    create_dir(&output.out)?;
    let dir = &output.out;
    let mut args = KeyValues::default();
    args.set("command", "analyze");
    let sources: Vec<String> = artifacts.iter().map(|a| a.config.source_tag()).collect();

    match mode {
        Mode::Heatmap => {
            for a in &artifacts {
                let tag = file_tag(&a.config);
                let text = analysis::heatmap_export(a);
                let data = dir.join(format!("heatmap-{tag}.tsv"));
                write(&data, &text)?;
                if output.emit_plots {
                    let script = analysis::heatmap_plot_script(&file_name(&data), &text, &a.config.source_tag());
                    write(&dir.join(format!("heatmap-{tag}.gp")), &script)?;
                }
            }
        }
        Mode::Hist => {
            args.set("mode", "hist");
            args.set("bins", bins.to_string());
            let hists = artifacts
                .iter()
                .map(|a| analysis::eta_histogram(a.ok_cells(), bins, a.config.source_tag()))
                .collect::<Result<Vec<_>, _>>()?;
            let data = dir.join("eta-histogram.tsv");
            let text = provenance("qratchet eta histogram", &args, paths, &artifacts)
                + &analysis::histogram_table(&hists)?;
            write(&data, &text)?;
            if output.emit_plots {
                write(
                    &dir.join("eta-histogram.gp"),
                    &analysis::histogram_plot_script(&file_name(&data), &sources),
                )?;
            }
        }
        Mode::Cut => {
            let gamma = gamma.expect("clap requires --gamma for cut");
            args.set("mode", "cut");
            args.set("gamma", gamma.to_string());
            let refs: Vec<&SweepArtifact> = artifacts.iter().collect();
            let data = dir.join(format!("cut-gamma{gamma}.tsv"));
            let text = provenance("qratchet transversal cut", &args, paths, &artifacts)
                + &analysis::merged_cut_table(&refs, gamma)?;
            write(&data, &text)?;
            if output.emit_plots {
                write(
                    &dir.join(format!("cut-gamma{gamma}.gp")),
                    &analysis::cut_plot_script(&file_name(&data), &sources, gamma),
                )?;
            }
        }
        Mode::EtaVsJ => {
            args.set("mode", "eta-vs-j");
            for (i, a) in artifacts.iter().enumerate() {
                let tag = file_tag(&a.config);
                let rows = analysis::eta_vs_current(a.ok_cells());
                let data = dir.join(format!("eta-vs-j-{tag}.tsv"));
                let text = provenance("qratchet eta versus current", &args, &paths[i..=i], &artifacts[i..=i])
                    + &analysis::eta_vs_current_table(&rows);
                write(&data, &text)?;
                if output.emit_plots {
                    write(
                        &dir.join(format!("eta-vs-j-{tag}.gp")),
                        &analysis::eta_vs_current_plot_script(&file_name(&data), &a.config.source_tag()),
                    )?;
                }
            }
        }
    }
    Ok(0)
}
