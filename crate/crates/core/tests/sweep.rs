use std::f64::consts::FRAC_PI_2;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;

use qratchet::analysis::{heatmap_export, heatmap_import, merged_cut_table, transversal_cut};
use qratchet::config::{DEFAULT_ETA_BINS, DEFAULT_ETA_SPAN};
use qratchet::error::Error;
use qratchet::model::GridSpec;
use qratchet::sweep::{
    resume, resume_checked, run_sweep, ClassicalRun, EngineConfig, QuantumRun, SweepArtifact,
    SweepConfig, SweepOptions,
};

fn classical(n_k: usize, n_gamma: usize) -> SweepConfig {
    SweepConfig {
        grid: GridSpec {
            k_min: 2.0,
            k_max: 10.0,
            n_k,
            gamma_min: 0.2,
            gamma_max: 0.8,
            n_gamma,
            master_seed: 9,
        },
        a: 0.5,
        phi: FRAC_PI_2,
        tau: 0.411,
        engine: EngineConfig::Classical(ClassicalRun {
            ensemble: 300,
            steps: 100,
            eta_bins: DEFAULT_ETA_BINS,
            eta_span: DEFAULT_ETA_SPAN,
        }),
    }
}

fn quantum(n_k: usize, n_gamma: usize) -> SweepConfig {
    SweepConfig {
        engine: EngineConfig::Quantum(QuantumRun {
            dim: 41,
            trajectories: 12,
            periods: 4,
            strict_truncation: false,
        }),
        ..classical(n_k, n_gamma)
    }
}

fn strip_timing(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.rsplit_once('\t').map_or(l, |(rest, _)| rest).to_string())
        .collect()
}

#[test]
fn two_by_two_sweep_completes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.tsv");
    let a = run_sweep(&classical(2, 2), &path, &SweepOptions::default()).unwrap();
    assert!(a.is_complete());
    assert_eq!(a.completed(), 4);
    assert_eq!(SweepArtifact::load(&path).unwrap(), a);
}

#[test]
fn worker_count_does_not_change_the_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let config = quantum(3, 2);
    let one = dir.path().join("one.tsv");
    let four = dir.path().join("four.tsv");
    run_sweep(&config, &one, &SweepOptions::with_jobs(1)).unwrap();
    run_sweep(&config, &four, &SweepOptions::with_jobs(4)).unwrap();
    assert_eq!(strip_timing(&one), strip_timing(&four));
}

#[test]
fn interrupted_sweep_resumes_to_the_same_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let config = quantum(3, 3);
    let clean = dir.path().join("clean.tsv");
    let split = dir.path().join("split.tsv");
    run_sweep(&config, &clean, &SweepOptions::default()).unwrap();

    let stop = SweepOptions {
        stop_after: Some(2),
        ..Default::default()
    };
    let partial = run_sweep(&config, &split, &stop).unwrap();
    assert_eq!(partial.completed(), 2);
    assert_eq!(SweepArtifact::load(&split).unwrap().completion().iter().filter(|b| **b).count(), 2);
    let partial = resume(&split, &stop).unwrap();
    assert_eq!(partial.completed(), 4);
    resume(&split, &SweepOptions::with_jobs(2)).unwrap();
    assert_eq!(strip_timing(&clean), strip_timing(&split));
}

#[test]
fn torn_record_is_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let config = classical(3, 1);
    let clean = dir.path().join("clean.tsv");
    let torn = dir.path().join("torn.tsv");
    run_sweep(&config, &clean, &SweepOptions::default()).unwrap();
    run_sweep(
        &config,
        &torn,
        &SweepOptions {
            stop_after: Some(1),
            ..Default::default()
        },
    )
    .unwrap();
    let mut f = OpenOptions::new().append(true).open(&torn).unwrap();
    write!(f, "1\t0\t6\t0.2\t0.12").unwrap();
    drop(f);
    assert_eq!(SweepArtifact::load(&torn).unwrap().completed(), 1);
    resume(&torn, &SweepOptions::default()).unwrap();
    assert_eq!(strip_timing(&clean), strip_timing(&torn));
}

#[test]
fn complete_artifact_resumes_without_work() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.tsv");
    run_sweep(&classical(2, 1), &path, &SweepOptions::default()).unwrap();
    let before = fs::read(&path).unwrap();
    let a = resume(&path, &SweepOptions::default()).unwrap();
    assert!(a.is_complete());
    assert_eq!(fs::read(&path).unwrap(), before);
}

#[test]
fn resume_rejects_a_different_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.tsv");
    run_sweep(&classical(2, 1), &path, &SweepOptions::default()).unwrap();
    let mut other = classical(2, 1);
    other.grid.master_seed = 10;
    let err = resume_checked(&path, &other, &SweepOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Mismatch(_)), "{err}");
    assert!(matches!(
        run_sweep(&other, &path, &SweepOptions::default()),
        Err(Error::Mismatch(_))
    ));
}

#[test]
fn edited_grid_is_detected_on_resume() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.tsv");
    run_sweep(
        &classical(3, 2),
        &path,
        &SweepOptions {
            stop_after: Some(3),
            ..Default::default()
        },
    )
    .unwrap();
    let text = fs::read_to_string(&path).unwrap().replace("k_range=2:10:3", "k_range=2:11:3");
    fs::write(&path, text).unwrap();
    assert!(matches!(
        resume(&path, &SweepOptions::default()),
        Err(Error::Mismatch(_))
    ));
}

#[test]
fn analysis_of_a_real_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let c = run_sweep(&classical(3, 2), &dir.path().join("c.tsv"), &SweepOptions::default()).unwrap();
    let q = run_sweep(&quantum(3, 2), &dir.path().join("q.tsv"), &SweepOptions::default()).unwrap();

    let heat = heatmap_import(&heatmap_export(&q)).unwrap();
    assert_eq!(heat.cells.len(), 6);
    for cell in &heat.cells {
        let i_k = heat.k_axis.iter().position(|k| *k == cell.k).unwrap();
        let i_g = heat.gamma_axis.iter().position(|g| *g == cell.gamma).unwrap();
        let original = q.cell(i_k, i_g).unwrap();
        assert_eq!(cell.current.unwrap().to_bits(), original.current.to_bits());
        assert_eq!(cell.eta.unwrap().to_bits(), original.eta.to_bits());
    }

    let cut = transversal_cut(&c, 0.8).unwrap();
    assert_eq!(cut.iter().map(|p| p.k).collect::<Vec<_>>(), vec![2.0, 6.0, 10.0]);
    assert!(matches!(transversal_cut(&c, 0.5), Err(Error::MissingRow { .. })));

    let table = merged_cut_table(&[&c, &q], 0.2).unwrap();
    let rows: Vec<&str> = table.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "k\tJ_classical\tJ_quantum@0.411");
    assert_eq!(rows.len(), 4);
}

#[test]
fn incomplete_cells_export_as_missing() {
    let dir = tempfile::tempdir().unwrap();
    let partial = run_sweep(
        &classical(2, 2),
        &dir.path().join("p.tsv"),
        &SweepOptions {
            stop_after: Some(3),
            ..Default::default()
        },
    )
    .unwrap();
    let heat = heatmap_import(&heatmap_export(&partial)).unwrap();
    assert_eq!(heat.cells.iter().filter(|c| c.current.is_none()).count(), 1);
    assert_eq!(heat.cells.iter().filter(|c| c.eta.is_none()).count(), 1);
}
