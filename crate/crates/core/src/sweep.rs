//! Full parameter sweep over the weight grid and stimulus widths, and the
//! summary tables built from it.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{
    classify_pattern, divergent_dominant, ignition_threshold, split_threshold, ClassifierParams,
    PatternClass, Threshold,
};
use crate::engine::{run_simulation, RunConfig, SimulationRecord};
use crate::error::{Error, Result};

pub const REPORT_FORMAT: &str = "bumpnet-sweep";
pub const REPORT_VERSION: u32 = 1;

/// 0.05, 0.06, ..., 0.10.
pub fn default_weight_grid() -> Vec<f64> {
    (5..=10).map(|k| k as f64 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub w_excit: Vec<f64>,
    pub w_inhib: Vec<f64>,
    pub widths: Vec<usize>,
    /// Base run; weights and stimulus width are overwritten per cell.
    pub template: RunConfig,
    pub classifier: ClassifierParams,
    /// Worker threads; `None` uses every available core. Not part of the
    /// report, since it cannot change the result.
    #[serde(skip_serializing)]
    pub jobs: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            w_excit: default_weight_grid(),
            w_inhib: default_weight_grid(),
            widths: (1..=40).collect(),
            template: RunConfig {
                record_voltage: false,
                ..Default::default()
            },
            classifier: ClassifierParams::default(),
            jobs: None,
        }
    }
}

/// One point of the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub w_excit: f64,
    pub w_inhib: f64,
    pub width: usize,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.w_excit.is_empty() || self.w_inhib.is_empty() || self.widths.is_empty() {
            return Err(Error::parameter(
                "weight grids and width set must be nonempty",
            ));
        }
        for w in self.w_excit.iter().chain(&self.w_inhib) {
            if !(*w >= 0.0) || !w.is_finite() {
                return Err(Error::parameter(format!("invalid grid weight {w}")));
            }
        }
        let mut widths = self.widths.clone();
        widths.sort_unstable();
        widths.dedup();
        if widths.len() != self.widths.len() {
            return Err(Error::parameter("widths must be distinct"));
        }
        if self.jobs == Some(0) {
            return Err(Error::parameter("jobs must be at least 1"));
        }
        self.classifier.validate()?;
        for cell in self.cells() {
            self.config_for(&cell).validate()?;
        }
        Ok(())
    }

    /// Planned cells: excitatory weight, then inhibitory weight, then width.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out =
            Vec::with_capacity(self.w_excit.len() * self.w_inhib.len() * self.widths.len());
        for &w_excit in &self.w_excit {
            for &w_inhib in &self.w_inhib {
                for &width in &self.widths {
                    out.push(Cell {
                        w_excit,
                        w_inhib,
                        width,
                    });
                }
            }
        }
        out
    }

    pub fn config_for(&self, cell: &Cell) -> RunConfig {
        let mut cfg = self.template.clone();
        cfg.topology.w_excit = cell.w_excit;
        cfg.topology.w_inhib = cell.w_inhib;
        cfg.stimulus.window_width = cell.width;
        cfg
    }

    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellOutcome {
    Classified {
        class: PatternClass,
        streams: usize,
        divergent: bool,
        spike_count: usize,
        config_digest: String,
    },
    Failed {
        error: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    #[serde(flatten)]
    pub cell: Cell,
    pub outcome: CellOutcome,
}

impl CellResult {
    pub fn class(&self) -> Option<PatternClass> {
        match &self.outcome {
            CellOutcome::Classified { class, .. } => Some(*class),
            CellOutcome::Failed { .. } => None,
        }
    }
}

/// Thresholds of one weight pair across all widths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub w_excit: f64,
    pub w_inhib: f64,
    /// False when some width failed; the thresholds are then unset.
    pub complete: bool,
    pub ignition: Threshold,
    pub split2: Threshold,
    pub split3: Threshold,
    pub split4: Threshold,
    pub divergent_dominant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub crate_version: String,
    pub sweep_digest: String,
    pub classifier: ClassifierParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub format: String,
    pub version: u32,
    pub provenance: Provenance,
    pub config: SweepConfig,
    pub cells: Vec<CellResult>,
    pub summaries: Vec<PairSummary>,
}

impl SweepReport {
    pub fn failed_count(&self) -> usize {
        self.cells.iter().filter(|c| c.class().is_none()).count()
    }

    pub fn summary(&self, w_excit: f64, w_inhib: f64) -> Option<&PairSummary> {
        self.summaries
            .iter()
            .find(|s| s.w_excit == w_excit && s.w_inhib == w_inhib)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepReport> {
    run_sweep_with(config, |_, _| {})
}

/// Run the sweep, handing every successful record to `sink` (e.g. to
/// archive rasters). `sink` may be called from several threads at once.
pub fn run_sweep_with<F>(config: &SweepConfig, sink: F) -> Result<SweepReport>
where
    F: Fn(&Cell, &SimulationRecord) + Sync,
{
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = config.jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::parameter(format!("thread pool: {e}")))?;

    let cells = config.cells();
    let results: Vec<CellResult> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| CellResult {
                cell: *cell,
                outcome: run_cell(config, cell, &sink),
            })
            .collect()
    });

    let summaries = summarize(config, &results);
    Ok(SweepReport {
        format: REPORT_FORMAT.to_string(),
        version: REPORT_VERSION,
        provenance: Provenance {
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            sweep_digest: config.digest(),
            classifier: config.classifier,
        },
        config: config.clone(),
        cells: results,
        summaries,
    })
}

fn run_cell<F>(config: &SweepConfig, cell: &Cell, sink: &F) -> CellOutcome
where
    F: Fn(&Cell, &SimulationRecord) + Sync,
{
    let run = config.config_for(cell);
    let attempt = || -> Result<CellOutcome> {
        let record = run_simulation(&run)?;
        let stim = run.stimulus_program()?;
        let c = classify_pattern(&record, &stim, &config.classifier)?;
        sink(cell, &record);
        Ok(CellOutcome::Classified {
            class: c.label,
            streams: c.streams,
            divergent: c.divergent,
            spike_count: record.raster.len(),
            config_digest: record.config_digest,
        })
    };
    attempt().unwrap_or_else(|e| CellOutcome::Failed {
        error: e.to_string(),
    })
}

fn summarize(config: &SweepConfig, results: &[CellResult]) -> Vec<PairSummary> {
    let mut out = Vec::new();
    for &w_excit in &config.w_excit {
        for &w_inhib in &config.w_inhib {
            let series: BTreeMap<usize, PatternClass> = results
                .iter()
                .filter(|r| r.cell.w_excit == w_excit && r.cell.w_inhib == w_inhib)
                .filter_map(|r| r.class().map(|c| (r.cell.width, c)))
                .collect();
            let thresholds = (|| -> Result<_> {
                Ok((
                    ignition_threshold(&series, &config.widths)?,
                    split_threshold(&series, &config.widths, 2)?,
                    split_threshold(&series, &config.widths, 3)?,
                    split_threshold(&series, &config.widths, 4)?,
                ))
            })();
            let summary = match thresholds {
                Ok((ignition, split2, split3, split4)) => PairSummary {
                    w_excit,
                    w_inhib,
                    complete: true,
                    ignition,
                    split2,
                    split3,
                    split4,
                    divergent_dominant: divergent_dominant(&series),
                },
                Err(_) => PairSummary {
                    w_excit,
                    w_inhib,
                    complete: false,
                    ignition: Threshold::default(),
                    split2: Threshold::default(),
                    split3: Threshold::default(),
                    split4: Threshold::default(),
                    divergent_dominant: false,
                },
            };
            out.push(summary);
        }
    }
    out
}

/// A rendered summary table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub name: &'static str,
    pub caption: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_markdown(&self) -> String {
        let mut s = format!("{}\n\n", self.caption);
        s.push_str(&format!("| {} |\n", self.header.join(" | ")));
        s.push_str(&format!("|{}\n", "---|".repeat(self.header.len())));
        for row in &self.rows {
            s.push_str(&format!("| {} |\n", row.join(" | ")));
        }
        s
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(&self.header)?;
        for row in &self.rows {
            wtr.write_record(row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn weight(w: f64) -> String {
    format!("{w:.2}")
}

fn threshold_cell(t: &Threshold) -> String {
    match t.width {
        Some(w) if t.with_divergence => format!("{w}(+D)"),
        Some(w) => w.to_string(),
        None => "na".to_string(),
    }
}

fn grid_table(
    report: &SweepReport,
    name: &'static str,
    caption: &str,
    cell: impl Fn(&PairSummary) -> String,
) -> Table {
    let cfg = &report.config;
    let mut header = vec!["E \\ I".to_string()];
    header.extend(cfg.w_inhib.iter().map(|w| weight(*w)));
    let rows = cfg
        .w_excit
        .iter()
        .map(|&we| {
            let mut row = vec![weight(we)];
            row.extend(cfg.w_inhib.iter().map(|&wi| match report.summary(we, wi) {
                Some(s) if s.complete => cell(s),
                _ => "err".to_string(),
            }));
            row
        })
        .collect();
    Table {
        name,
        caption: caption.to_string(),
        header,
        rows,
    }
}

/// Ignition, two-stream and three/four-stream tables, in that order.
pub fn render_tables(report: &SweepReport) -> [Table; 3] {
    let ignition = grid_table(
        report,
        "ignition",
        "Minimal number of stimulus sources that ignites the network (rows: excitatory weight, columns: inhibitory weight; \"/\" = never ignites).",
        |s| match s.ignition.width {
            Some(w) => w.to_string(),
            None => "/".to_string(),
        },
    );
    let split2 = grid_table(
        report,
        "split2",
        "Number of stimulus sources giving a two-stream split (\"D\" = divergence first, \"(+D)\" = split with divergence, \"/\" = never ignites, \"na\" = not present).",
        |s| {
            if s.ignition.width.is_none() {
                "/".to_string()
            } else if s.divergent_dominant {
                "D".to_string()
            } else {
                threshold_cell(&s.split2)
            }
        },
    );
    let rows = report
        .summaries
        .iter()
        .filter(|s| s.complete && (s.split3.width.is_some() || s.split4.width.is_some()))
        .map(|s| {
            vec![
                format!("{}-{}", weight(s.w_excit), weight(s.w_inhib)),
                threshold_cell(&s.split3),
                threshold_cell(&s.split4),
            ]
        })
        .collect();
    let multi = Table {
        name: "split34",
        caption: "Number of stimulus sources giving three (3S) or four (4S) streams (\"(+D)\" = split with divergence, \"na\" = not present).".to_string(),
        header: ["E-I Weights", "3S", "4S"].map(String::from).to_vec(),
        rows,
    };
    [ignition, split2, multi]
}
