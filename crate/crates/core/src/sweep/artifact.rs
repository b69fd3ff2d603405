//! On-disk sweep artifact: a `key=value` header closed by `end_header`, a
//! column line, then one tab-separated record per finished cell. Records are
//! appended as cells finish; the completion bitmap is rebuilt by scanning them.

use std::fs;
use std::path::Path;

use super::{CellResult, CellStatus, EngineConfig, SweepConfig};
use crate::config::{KeyValues, RunConfig, END_HEADER};
use crate::distribution::format_float;
use crate::error::{Error, Result};

pub const ARTIFACT_FORMAT: &str = "qratchet-sweep/1";

pub const COLUMNS: [&str; 10] = [
    "i_k",
    "i_gamma",
    "k",
    "gamma",
    "J",
    "eta",
    "stderr_J",
    "edge_mass_flag",
    "status",
    "wall_time_s",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepArtifact {
    pub config: SweepConfig,
    /// Row-major over `(i_gamma, i_k)`; `None` for cells not yet run.
    pub cells: Vec<Option<CellResult>>,
}

impl SweepArtifact {
    pub fn new(config: SweepConfig) -> Self {
        SweepArtifact {
            config,
            cells: vec![None; config.grid.cell_count()],
        }
    }

    pub fn completion(&self) -> Vec<bool> {
        self.cells.iter().map(Option::is_some).collect()
    }

    pub fn completed(&self) -> usize {
        self.cells.iter().flatten().count()
    }

    pub fn is_complete(&self) -> bool {
        self.cells.iter().all(Option::is_some)
    }

    pub fn failed(&self) -> usize {
        self.cells
            .iter()
            .flatten()
            .filter(|c| !c.status.is_ok())
            .count()
    }

    /// Finished cells whose status is ok.
    pub fn ok_cells(&self) -> impl Iterator<Item = &CellResult> {
        self.cells.iter().flatten().filter(|c| c.status.is_ok())
    }

    pub fn cell(&self, i_k: usize, i_gamma: usize) -> Option<&CellResult> {
        self.cells[self.config.cell_index(i_k, i_gamma)].as_ref()
    }

    pub fn header(&self) -> String {
        let mut out = String::from("# qratchet parameter-space sweep\n");
        out.push_str(&header_key_values(&self.config).render());
        out.push_str(END_HEADER);
        out.push('\n');
        out.push_str(&COLUMNS.join("\t"));
        out.push('\n');
        out
    }

    /// Header followed by every finished record in row-major order.
    pub fn render(&self) -> String {
        let mut out = self.header();
        for cell in self.cells.iter().flatten() {
            out.push_str(&format_record(cell));
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::load_with_length(path)?.0)
    }

    /// Loads an artifact and returns the byte length of its intact prefix. A
    /// final line without a newline is an interrupted write and is dropped.
    pub(crate) fn load_with_length(path: &Path) -> Result<(Self, u64)> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::parse(&text, path)
    }

    fn parse(text: &str, path: &Path) -> Result<(Self, u64)> {
        let format_err = |line: usize, message: String| Error::Format {
            path: path.to_path_buf(),
            line,
            message,
        };
        let intact = match text.rfind('\n') {
            Some(i) => i + 1,
            None => 0,
        };
        let body = &text[..intact];
        let mut lines = body.lines().enumerate();

        let mut header = String::new();
        let mut closed = false;
        for (_, line) in lines.by_ref() {
            header.push_str(line);
            header.push('\n');
            if line.trim() == END_HEADER {
                closed = true;
                break;
            }
        }
        if !closed {
            return Err(format_err(1, "missing end_header line".into()));
        }
        let kv = KeyValues::parse(&header)?;
        match kv.get("format") {
            Some(ARTIFACT_FORMAT) => {}
            other => {
                return Err(format_err(
                    1,
                    format!("unsupported artifact format {other:?}, expected {ARTIFACT_FORMAT}"),
                ))
            }
        }
        let config = RunConfig::from_key_values(&kv)?.sweep_config()?;
        match lines.next() {
            Some((_, cols)) if cols.split('\t').eq(COLUMNS) => {}
            Some((i, _)) => return Err(format_err(i + 1, "unexpected column header".into())),
            None => return Err(format_err(0, "missing column header".into())),
        }

        let mut artifact = SweepArtifact::new(config);
        let ks = config.grid.k_values();
        let gammas = config.grid.gamma_values();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let cell = parse_record(line).map_err(|m| format_err(i + 1, m))?;
            if cell.i_k >= ks.len() || cell.i_gamma >= gammas.len() {
                return Err(Error::Mismatch(format!(
                    "line {}: cell ({}, {}) lies outside the {}x{} grid",
                    i + 1,
                    cell.i_k,
                    cell.i_gamma,
                    ks.len(),
                    gammas.len()
                )));
            }
            if cell.k != ks[cell.i_k] || cell.gamma != gammas[cell.i_gamma] {
                return Err(Error::Mismatch(format!(
                    "line {}: cell ({}, {}) has k={}, gamma={} but the header grid places it at k={}, gamma={}",
                    i + 1,
                    cell.i_k,
                    cell.i_gamma,
                    cell.k,
                    cell.gamma,
                    ks[cell.i_k],
                    gammas[cell.i_gamma]
                )));
            }
            let idx = config.cell_index(cell.i_k, cell.i_gamma);
            if artifact.cells[idx].is_some() {
                log::warn!("line {}: duplicate record for cell ({}, {}) ignored", i + 1, cell.i_k, cell.i_gamma);
                continue;
            }
            artifact.cells[idx] = Some(cell);
        }
        Ok((artifact, intact as u64))
    }
}

/// Header pairs describing `config`.
pub fn header_key_values(config: &SweepConfig) -> KeyValues {
    let g = &config.grid;
    let mut kv = KeyValues::default();
    kv.set("format", ARTIFACT_FORMAT);
    kv.set("code_version", env!("CARGO_PKG_VERSION"));
    kv.set("engine", config.engine.engine().to_string());
    kv.set("k_range", format!("{}:{}:{}", g.k_min, g.k_max, g.n_k));
    kv.set("gamma_range", format!("{}:{}:{}", g.gamma_min, g.gamma_max, g.n_gamma));
    kv.set("seed", g.master_seed.to_string());
    kv.set("a", config.a.to_string());
    kv.set("phi", config.phi.to_string());
    kv.set("tau", config.tau.to_string());
    match config.engine {
        EngineConfig::Classical(run) => {
            kv.set("ensemble", run.ensemble.to_string());
            kv.set("steps", run.steps.to_string());
            kv.set("eta_bins", run.eta_bins.to_string());
            kv.set("eta_span", run.eta_span.to_string());
        }
        EngineConfig::Quantum(run) => {
            kv.set("dim", run.dim.to_string());
            kv.set("trajectories", run.trajectories.to_string());
            kv.set("periods", run.periods.to_string());
            kv.set("strict_truncation", run.strict_truncation.to_string());
        }
    }
    kv
}

pub(crate) fn format_record(c: &CellResult) -> String {
    format!(
        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
        c.i_k,
        c.i_gamma,
        c.k,
        c.gamma,
        format_float(c.current),
        format_float(c.eta),
        format_float(c.stderr),
        u8::from(c.truncation_suspect),
        c.status,
        c.wall_time_s
    )
}

fn parse_record(line: &str) -> std::result::Result<CellResult, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != COLUMNS.len() {
        return Err(format!("expected {} fields, found {}", COLUMNS.len(), fields.len()));
    }
    fn num<T: std::str::FromStr>(name: &str, s: &str) -> std::result::Result<T, String> {
        s.parse().map_err(|_| format!("bad {name} value `{s}`"))
    }
    let status = match fields[8] {
        "ok" => CellStatus::Ok,
        s => match s.strip_prefix("failed:") {
            Some(msg) => CellStatus::Failed(msg.to_string()),
            None => return Err(format!("bad status `{s}`")),
        },
    };
    Ok(CellResult {
        i_k: num("i_k", fields[0])?,
        i_gamma: num("i_gamma", fields[1])?,
        k: num("k", fields[2])?,
        gamma: num("gamma", fields[3])?,
        current: num("J", fields[4])?,
        eta: num("eta", fields[5])?,
        stderr: num("stderr_J", fields[6])?,
        truncation_suspect: match fields[7] {
            "0" => false,
            "1" => true,
            s => return Err(format!("bad edge_mass_flag `{s}`")),
        },
        status,
        wall_time_s: num("wall_time_s", fields[9])?,
    })
}
