//! Participation ratios and the tables derived from sweep artifacts:
//! η histograms, η-versus-current scatter tables, fixed-γ cuts and heatmaps.
//!
//! Everything here is a pure function of its inputs.

use std::collections::BTreeMap;

use crate::config::{KeyValues, END_HEADER};
use crate::distribution::{format_float, MomentumDistribution};
use crate::error::{Error, Result};
use crate::sweep::{CellResult, SweepArtifact};

/// Marker written for cells that have no result.
pub const MISSING: &str = "NA";

/// Default η histogram: 50 uniform bins on `[0, 0.5]`, plus one overflow bin.
pub const DEFAULT_ETA_BINS: usize = 50;
const ETA_HIST_MAX: f64 = 0.5;

/// Tolerance when matching a requested γ to a grid row.
pub const ROW_TOLERANCE: f64 = 1e-9;

/// `(sum_i P_i^2)^-1 / N`, the fraction of cells that effectively carry the
/// distribution. Lies in `[1/N, 1]`.
pub fn participation_ratio(dist: &MomentumDistribution) -> Result<f64> {
    let sum_sq: f64 = dist.probabilities().iter().map(|p| p * p).sum();
    if !(sum_sq > 0.0) {
        return Err(Error::InvalidInput("participation ratio of an all-zero distribution".into()));
    }
    Ok(1.0 / sum_sq / dist.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EtaHistogram {
    /// `mass.len() + 1` increasing edges from 0 to 1.
    pub edges: Vec<f64>,
    /// Fraction of cells per bin; sums to 1.
    pub mass: Vec<f64>,
    pub source: String,
}

impl EtaHistogram {
    /// Mass in bins lying entirely below `threshold`.
    pub fn mass_below(&self, threshold: f64) -> f64 {
        self.mass
            .iter()
            .zip(&self.edges[1..])
            .filter(|(_, hi)| **hi <= threshold + 1e-12)
            .map(|(m, _)| m)
            .sum()
    }

    /// Mass in bins lying entirely above `threshold`.
    pub fn mass_above(&self, threshold: f64) -> f64 {
        self.mass
            .iter()
            .zip(&self.edges[..self.edges.len() - 1])
            .filter(|(_, lo)| **lo >= threshold - 1e-12)
            .map(|(m, _)| m)
            .sum()
    }
}

/// Unit-normalized histogram of per-cell η over `n_bins` uniform bins on
/// `[0, 0.5)` and one overflow bin `[0.5, 1]`. Failed cells are skipped.
pub fn eta_histogram<'a>(
    cells: impl IntoIterator<Item = &'a CellResult>,
    n_bins: usize,
    source: impl Into<String>,
) -> Result<EtaHistogram> {
    if n_bins == 0 {
        return Err(Error::param("bins", "need at least one bin"));
    }
    let mut edges: Vec<f64> = (0..=n_bins)
        .map(|i| i as f64 * ETA_HIST_MAX / n_bins as f64)
        .collect();
    edges.push(1.0);
    let mut counts = vec![0usize; n_bins + 1];
    let mut total = 0usize;
    for cell in cells {
        if !cell.status.is_ok() || !cell.eta.is_finite() {
            continue;
        }
        let bin = if cell.eta >= ETA_HIST_MAX {
            n_bins
        } else {
            ((cell.eta / ETA_HIST_MAX * n_bins as f64).floor() as usize).min(n_bins - 1)
        };
        counts[bin] += 1;
        total += 1;
    }
    if total == 0 {
        return Err(Error::InvalidInput("no completed cells to histogram".into()));
    }
    Ok(EtaHistogram {
        edges,
        mass: counts.iter().map(|c| *c as f64 / total as f64).collect(),
        source: source.into(),
    })
}

/// Side-by-side table of histograms sharing the same bins.
pub fn histogram_table(hists: &[EtaHistogram]) -> Result<String> {
    let first = hists
        .first()
        .ok_or_else(|| Error::InvalidInput("no histograms".into()))?;
    if hists.iter().any(|h| h.edges != first.edges) {
        return Err(Error::InvalidInput("histograms use different bins".into()));
    }
    let mut out = String::from("eta_lo\teta_hi");
    for h in hists {
        out.push_str(&format!("\tP_{}", h.source));
    }
    out.push('\n');
    for i in 0..first.mass.len() {
        out.push_str(&format!("{}\t{}", first.edges[i], first.edges[i + 1]));
        for h in hists {
            out.push_str(&format!("\t{}", format_float(h.mass[i])));
        }
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaCurrentRow {
    pub current: f64,
    pub eta: f64,
    pub k: f64,
    pub gamma: f64,
    pub i_k: usize,
    pub i_gamma: usize,
}

/// `(J, η)` pairs sorted by current, ties broken by `(i_k, i_gamma)`.
pub fn eta_vs_current<'a>(cells: impl IntoIterator<Item = &'a CellResult>) -> Vec<EtaCurrentRow> {
    let mut rows: Vec<EtaCurrentRow> = cells
        .into_iter()
        .filter(|c| c.status.is_ok())
        .map(|c| EtaCurrentRow {
            current: c.current,
            eta: c.eta,
            k: c.k,
            gamma: c.gamma,
            i_k: c.i_k,
            i_gamma: c.i_gamma,
        })
        .collect();
    rows.sort_by(|a, b| {
        a.current
            .total_cmp(&b.current)
            .then(a.i_k.cmp(&b.i_k))
            .then(a.i_gamma.cmp(&b.i_gamma))
    });
    rows
}

pub fn eta_vs_current_table(rows: &[EtaCurrentRow]) -> String {
    let mut out = String::from("J\teta\tk\tgamma\ti_k\ti_gamma\n");
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            format_float(r.current),
            format_float(r.eta),
            r.k,
            r.gamma,
            r.i_k,
            r.i_gamma
        ));
    }
    out
}

/// Index of the grid row at `gamma`.
pub fn find_row(artifact: &SweepArtifact, gamma: f64) -> Result<usize> {
    let rows = artifact.config.grid.gamma_values();
    rows.iter()
        .position(|g| (g - gamma).abs() <= ROW_TOLERANCE)
        .ok_or_else(|| Error::MissingRow {
            requested: gamma,
            available: rows
                .iter()
                .map(|g| g.to_string())
                .collect::<Vec<_>>()
                .join(", "),
        })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutPoint {
    pub k: f64,
    /// `None` for cells that are missing or failed.
    pub current: Option<f64>,
    pub eta: Option<f64>,
}

/// The fixed-γ row of a sweep as a series ordered by `k`.
pub fn transversal_cut(artifact: &SweepArtifact, gamma: f64) -> Result<Vec<CutPoint>> {
    let i_gamma = find_row(artifact, gamma)?;
    Ok(artifact
        .config
        .grid
        .k_values()
        .into_iter()
        .enumerate()
        .map(|(i_k, k)| {
            let cell = artifact.cell(i_k, i_gamma).filter(|c| c.status.is_ok());
            CutPoint {
                k,
                current: cell.map(|c| c.current),
                eta: cell.map(|c| c.eta),
            }
        })
        .collect())
}

/// Cuts at `gamma` through several artifacts merged into one table with a
/// `k` column and one current column per artifact. Artifacts on different
/// `k` grids are merged on the union of their `k` values.
pub fn merged_cut_table(artifacts: &[&SweepArtifact], gamma: f64) -> Result<String> {
    let mut table: BTreeMap<u64, Vec<Option<f64>>> = BTreeMap::new();
    let mut keys = Vec::new();
    for (col, artifact) in artifacts.iter().enumerate() {
        for point in transversal_cut(artifact, gamma)? {
            // k >= 0, so the bit pattern orders like the value
            let key = point.k.to_bits();
            let row = table
                .entry(key)
                .or_insert_with(|| vec![None; artifacts.len()]);
            row[col] = point.current;
        }
        keys.push(artifact.config.source_tag());
    }
    let mut out = format!("# transversal cut at gamma={gamma}\n# missing={MISSING}\nk");
    for key in &keys {
        out.push_str(&format!("\tJ_{key}"));
    }
    out.push('\n');
    for (bits, row) in table {
        out.push_str(&f64::from_bits(bits).to_string());
        for v in row {
            match v {
                Some(j) => out.push_str(&format!("\t{}", format_float(j))),
                None => out.push_str(&format!("\t{MISSING}")),
            }
        }
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatmapCell {
    pub k: f64,
    pub gamma: f64,
    pub current: Option<f64>,
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub k_axis: Vec<f64>,
    pub gamma_axis: Vec<f64>,
    /// Row-major: `gamma` outer, `k` inner.
    pub cells: Vec<HeatmapCell>,
}

/// Row-major `(k, gamma, J, eta)` grid with the axis vectors in the header.
/// Missing or failed cells are written as [`MISSING`], never as zero.
pub fn heatmap_export(artifact: &SweepArtifact) -> String {
    let ks = artifact.config.grid.k_values();
    let gammas = artifact.config.grid.gamma_values();
    let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");

    let mut kv = crate::sweep::header_key_values(&artifact.config);
    kv.set("source", artifact.config.source_tag());
    kv.set("missing", MISSING);
    kv.set("k_axis", join(&ks));
    kv.set("gamma_axis", join(&gammas));

    let mut out = String::from("# qratchet heatmap: current J and participation ratio eta\n");
    out.push_str(&kv.render());
    out.push_str(END_HEADER);
    out.push_str("\nk\tgamma\tJ\teta\n");
    for (i_gamma, gamma) in gammas.iter().enumerate() {
        for (i_k, k) in ks.iter().enumerate() {
            let cell = artifact.cell(i_k, i_gamma).filter(|c| c.status.is_ok());
            let fmt = |v: Option<f64>| v.map_or_else(|| MISSING.to_string(), format_float);
            out.push_str(&format!(
                "{k}\t{gamma}\t{}\t{}\n",
                fmt(cell.map(|c| c.current)),
                fmt(cell.map(|c| c.eta))
            ));
        }
    }
    out
}

pub fn heatmap_import(text: &str) -> Result<Heatmap> {
    let kv = KeyValues::parse(text)?;
    let axis = |key: &'static str| -> Result<Vec<f64>> {
        kv.get(key)
            .ok_or_else(|| Error::InvalidInput(format!("heatmap header lacks `{key}`")))?
            .split(',')
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("bad `{key}` entry `{s}`")))
            })
            .collect()
    };
    let k_axis = axis("k_axis")?;
    let gamma_axis = axis("gamma_axis")?;
    let body = text
        .split_once(&format!("{END_HEADER}\n"))
        .map(|(_, b)| b)
        .ok_or_else(|| Error::InvalidInput("heatmap lacks end_header".into()))?;
    let value = |s: &str| -> Result<Option<f64>> {
        if s == MISSING {
            Ok(None)
        } else {
            s.parse()
                .map(Some)
                .map_err(|_| Error::InvalidInput(format!("bad heatmap value `{s}`")))
        }
    };
    let mut cells = Vec::new();
    for line in body.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(Error::InvalidInput(format!("bad heatmap row `{line}`")));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("bad heatmap coordinate `{s}`")))
        };
        cells.push(HeatmapCell {
            k: num(f[0])?,
            gamma: num(f[1])?,
            current: value(f[2])?,
            eta: value(f[3])?,
        });
    }
    if cells.len() != k_axis.len() * gamma_axis.len() {
        return Err(Error::InvalidInput(format!(
            "heatmap has {} rows for a {}x{} grid",
            cells.len(),
            k_axis.len(),
            gamma_axis.len()
        )));
    }
    Ok(Heatmap {
        k_axis,
        gamma_axis,
        cells,
    })
}

/// Largest `|eta_{i+1} - eta_i|` along a series, skipping gaps.
pub fn max_adjacent_jump(series: &[Option<f64>]) -> Option<f64> {
    adjacent_jumps(series).into_iter().reduce(f64::max)
}

/// Median `|eta_{i+1} - eta_i|` along a series, skipping gaps.
pub fn median_adjacent_jump(series: &[Option<f64>]) -> Option<f64> {
    let mut jumps = adjacent_jumps(series);
    if jumps.is_empty() {
        return None;
    }
    jumps.sort_by(f64::total_cmp);
    let n = jumps.len();
    Some(if n % 2 == 1 {
        jumps[n / 2]
    } else {
        0.5 * (jumps[n / 2 - 1] + jumps[n / 2])
    })
}

fn adjacent_jumps(series: &[Option<f64>]) -> Vec<f64> {
    series
        .windows(2)
        .filter_map(|w| Some((w[1]? - w[0]?).abs()))
        .collect()
}

/// gnuplot script drawing `J` and `eta` heatmaps from the [`heatmap_export`]
/// output `heatmap_text`, stored at `data_file`.
pub fn heatmap_plot_script(data_file: &str, heatmap_text: &str, title: &str) -> String {
    // gnuplot's `skip` counts raw lines: everything up to the column line.
    let skip = heatmap_text
        .lines()
        .position(|l| l.trim() == END_HEADER)
        .map_or(0, |i| i + 2);
    format!(
        r#"# gnuplot script; run with `gnuplot -p <this file>`
set datafile separator "\t"
set datafile missing "{MISSING}"
set xlabel "K"
set ylabel "gamma"
set view map
set multiplot layout 1,2 title "{title}"
set title "J"
set palette defined (-1 "blue", 0 "white", 1 "red")
plot "{data_file}" skip {skip} using 1:2:3 with image notitle
set title "eta"
set palette defined (0 "white", 1 "black")
plot "{data_file}" skip {skip} using 1:2:4 with image notitle
unset multiplot
"#
    )
}

/// gnuplot script comparing η histograms from a [`histogram_table`] file.
pub fn histogram_plot_script(data_file: &str, sources: &[String]) -> String {
    let mut plots = Vec::new();
    for (i, s) in sources.iter().enumerate() {
        plots.push(format!(
            "\"{data_file}\" using (($1+$2)/2):{} with linespoints title \"{s}\"",
            i + 3
        ));
    }
    format!(
        "# gnuplot script; run with `gnuplot -p <this file>`\nset datafile separator \"\\t\"\nset key autotitle columnhead\nset xlabel \"eta\"\nset ylabel \"P_eta\"\nplot {}\n",
        plots.join(", \\\n     ")
    )
}

/// gnuplot script for a [`merged_cut_table`] file.
pub fn cut_plot_script(data_file: &str, sources: &[String], gamma: f64) -> String {
    let mut plots = Vec::new();
    for (i, s) in sources.iter().enumerate() {
        let axis = if s == "classical" { " axes x1y2 dt 2" } else { "" };
        plots.push(format!(
            "\"{data_file}\" using 1:{} with lines{axis} title \"{s}\"",
            i + 2
        ));
    }
    format!(
        "# gnuplot script; run with `gnuplot -p <this file>`\nset datafile separator \"\\t\"\nset datafile missing \"{MISSING}\"\nset key autotitle columnhead\nset title \"gamma = {gamma}\"\nset xlabel \"K\"\nset ylabel \"J_q\"\nset y2label \"J_c\"\nset y2tics\nplot {}\n",
        plots.join(", \\\n     ")
    )
}

/// gnuplot scatter script for an [`eta_vs_current_table`] file.
pub fn eta_vs_current_plot_script(data_file: &str, title: &str) -> String {
    format!(
        "# gnuplot script; run with `gnuplot -p <this file>`\nset datafile separator \"\\t\"\nset key autotitle columnhead\nset title \"{title}\"\nset xlabel \"J\"\nset ylabel \"eta\"\nplot \"{data_file}\" using 1:2 with points pt 7 ps 0.5 notitle\n"
    )
}
