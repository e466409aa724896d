//! `bumpnet`: simulate, sweep, classify and render bump-network runs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};

use bumpnet::io::{read_raster_csv, read_voltage_csv, write_raster_csv, write_voltage_csv};
use bumpnet::plot::{raster_svg, voltage_svg};
use bumpnet::{
    classify_pattern, render_tables, run_simulation, run_sweep_with, Boundary,
    ClassificationReport, CliConfigFile, Error, RasterMeta, RunConfig, RunManifest,
    SimulationRecord,
};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const EXIT_PARTIAL: u8 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "bumpnet",
    version,
    about = "Bump-attractor network simulator and pattern sweep"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON configuration file; omitted keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Network boundary condition.
    #[arg(long, global = true)]
    boundary: Option<Boundary>,
    /// Classifier time bin (ms).
    #[arg(long, global = true)]
    bin_width: Option<f64>,
    /// Accepted for scripts; every run is deterministic and uses no seed.
    #[arg(long, global = true)]
    seedless: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one simulation and write raster, voltage, classification and manifest.
    Simulate {
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Stimulus window width (number of sources).
        #[arg(long)]
        width: Option<usize>,
        /// Excitatory weight (µS).
        #[arg(long)]
        weight_ex: Option<f64>,
        /// Inhibitory weight (µS).
        #[arg(long)]
        weight_in: Option<f64>,
    },
    /// Run the weight × width sweep and write the summary tables.
    Sweep {
        #[arg(long, default_value = "sweep-out")]
        out: PathBuf,
        /// Width range `a..b` (inclusive) or a single width.
        #[arg(long, value_parser = parse_widths)]
        widths: Option<Widths>,
        /// Comma-separated excitatory weights.
        #[arg(long, value_delimiter = ',')]
        weights_ex: Option<Vec<f64>>,
        /// Comma-separated inhibitory weights.
        #[arg(long, value_delimiter = ',')]
        weights_in: Option<Vec<f64>>,
        /// Also write every cell's raster and manifest under `rasters/`.
        #[arg(long)]
        archive_rasters: bool,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Classify an existing raster CSV.
    Classify {
        raster: PathBuf,
        /// Run manifest giving the stimulus window and the stored label.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Write the classification JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a raster (and optionally a voltage CSV) as SVG.
    Render {
        raster: PathBuf,
        #[arg(long)]
        voltage: Option<PathBuf>,
        #[arg(long, default_value = "plots")]
        out: PathBuf,
        /// Heat-map colour range `lo,hi` in mV.
        #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [-80.0, -45.0])]
        v_range: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
struct Widths(Vec<usize>);

fn parse_widths(s: &str) -> Result<Widths, String> {
    let bad = || format!("expected 'a..b' or a single width, got '{s}'");
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a, b.strip_prefix('=').unwrap_or(b)),
        None => (s, s),
    };
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || b < a {
        return Err(bad());
    }
    Ok(Widths((a..=b).collect()))
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Runtime(String),
    Partial(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Runtime(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    fs::write(path, contents).map_err(io_err(path))
}

fn create_dir(path: &Path) -> Result<(), Failure> {
    fs::create_dir_all(path).map_err(io_err(path))
}

fn open(path: &Path) -> Result<fs::File, Failure> {
    fs::File::open(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn load_config(common: &Common) -> Result<CliConfigFile, Failure> {
    let mut cfg = match &common.config {
        Some(p) => CliConfigFile::load(p).map_err(|e| match e {
            Error::Io(io) => Failure::Config(format!("{}: {io}", p.display())),
            other => Failure::from(other),
        })?,
        None => CliConfigFile::default(),
    };
    if let Some(b) = common.boundary {
        cfg.run.topology.boundary = b;
        if let Some(t) = cfg.sweep.template.as_mut() {
            t.topology.boundary = b;
        }
    }
    if let Some(w) = common.bin_width {
        cfg.classifier.bin_width_ms = w;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn simulate(
    cfg: &CliConfigFile,
    out: &Path,
    width: Option<usize>,
    weight_ex: Option<f64>,
    weight_in: Option<f64>,
) -> Result<(), Failure> {
    let mut run = cfg.run.clone();
    if let Some(w) = width {
        run.stimulus.window_width = w;
    }
    if let Some(w) = weight_ex {
        run.topology.w_excit = w;
    }
    if let Some(w) = weight_in {
        run.topology.w_inhib = w;
    }
    run.validate()?;

    let record = run_simulation(&run)?;
    let stim = run.stimulus_program()?;
    let class = classify_pattern(&record, &stim, &cfg.classifier)?;
    create_dir(out)?;

    let mut manifest = RunManifest::new(&run, &record);
    let mut raster = Vec::new();
    write_raster_csv(&record, &mut raster)?;
    write_file(&out.join("raster.csv"), raster)?;
    manifest.files.insert("raster".into(), "raster.csv".into());
    if let Some(trace) = &record.voltages {
        let mut buf = Vec::new();
        write_voltage_csv(trace, &record.config_digest, &mut buf)?;
        write_file(&out.join("voltage.csv"), buf)?;
        manifest
            .files
            .insert("voltage".into(), "voltage.csv".into());
    }
    let report = ClassificationReport::new(&record.config_digest, class.clone());
    write_file(&out.join("classification.json"), report.to_json()?)?;
    manifest
        .files
        .insert("classification".into(), "classification.json".into());
    manifest.classification = Some(class.clone());
    write_file(&out.join("manifest.json"), manifest.to_json()?)?;

    println!(
        "{} spikes={} config_digest={}",
        class.label,
        record.raster.len(),
        record.config_digest
    );
    Ok(())
}

fn cell_stem(w_excit: f64, w_inhib: f64, width: usize) -> String {
    format!("we{w_excit:.2}_wi{w_inhib:.2}_w{width:02}")
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    cfg: &CliConfigFile,
    out: &Path,
    widths: Option<Widths>,
    weights_ex: Option<Vec<f64>>,
    weights_in: Option<Vec<f64>>,
    archive: bool,
    jobs: Option<usize>,
) -> Result<(), Failure> {
    let mut sc = cfg.sweep_config();
    if let Some(Widths(w)) = widths {
        sc.widths = w;
    }
    if let Some(w) = weights_ex {
        sc.w_excit = w;
    }
    if let Some(w) = weights_in {
        sc.w_inhib = w;
    }
    if jobs.is_some() {
        sc.jobs = jobs;
    }
    sc.validate()?;
    create_dir(out)?;

    let archive_dir = out.join("rasters");
    if archive {
        create_dir(&archive_dir)?;
    }
    let archive_errors = Mutex::new(Vec::new());
    let report = run_sweep_with(&sc, |cell, record| {
        if !archive {
            return;
        }
        let stem = cell_stem(cell.w_excit, cell.w_inhib, cell.width);
        let result = (|| -> Result<(), Failure> {
            let run = sc.config_for(cell);
            let mut buf = Vec::new();
            write_raster_csv(record, &mut buf)?;
            write_file(&archive_dir.join(format!("{stem}.csv")), buf)?;
            let mut m = RunManifest::new(&run, record);
            m.classification = Some(classify_pattern(
                record,
                &run.stimulus_program()?,
                &sc.classifier,
            )?);
            m.files.insert("raster".into(), format!("{stem}.csv"));
            write_file(&archive_dir.join(format!("{stem}.json")), m.to_json()?)
        })();
        if let Err(e) = result {
            archive_errors
                .lock()
                .unwrap()
                .push(format!("{stem}: {e:?}"));
        }
    })?;

    let digest = &report.provenance.sweep_digest;
    write_file(&out.join("report.json"), report.to_json()?)?;
    for (i, table) in render_tables(&report).iter().enumerate() {
        let stem = format!("table{}_{}", i + 1, table.name);
        let md = format!("{}\nsweep_digest: {digest}\n", table.to_markdown());
        write_file(&out.join(format!("{stem}.md")), md)?;
        let mut buf = format!("# bumpnet-table v1 sweep_digest={digest}\n").into_bytes();
        table.write_csv(&mut buf)?;
        write_file(&out.join(format!("{stem}.csv")), buf)?;
        println!("{}", table.to_markdown());
    }

    for s in &report.summaries {
        for (name, t) in [
            ("ignition", &s.ignition),
            ("2-stream", &s.split2),
            ("3-stream", &s.split3),
            ("4-stream", &s.split4),
        ] {
            if t.non_monotone {
                eprintln!(
                    "warning: {name} threshold not monotone in width for {:.2}-{:.2}",
                    s.w_excit, s.w_inhib
                );
            }
        }
    }

    let failed = report.failed_count();
    println!(
        "{} cells, {failed} failed, sweep_digest={digest}",
        report.cells.len()
    );
    let archive_errors = archive_errors.into_inner().unwrap();
    if let Some(first) = archive_errors.first() {
        return Err(Failure::Runtime(format!(
            "{} raster archive writes failed, first: {first}",
            archive_errors.len()
        )));
    }
    if failed > 0 {
        for c in &report.cells {
            if let bumpnet::CellOutcome::Failed { error } = &c.outcome {
                eprintln!(
                    "failed: {}: {error}",
                    cell_stem(c.cell.w_excit, c.cell.w_inhib, c.cell.width)
                );
            }
        }
        return Err(Failure::Partial(failed));
    }
    Ok(())
}

fn classify(
    cfg: &CliConfigFile,
    raster: &Path,
    manifest: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let manifest = manifest
        .map(|p| RunManifest::from_json(open(p)?).map_err(Failure::from))
        .transpose()?;
    let run: RunConfig = manifest
        .as_ref()
        .map_or_else(|| cfg.run.clone(), |m| m.config.clone());
    let fallback = RasterMeta {
        n: run.topology.n,
        duration_ms: run.duration_ms,
        dt_ms: run.dt_ms,
        config_digest: run.digest(),
    };
    let record: SimulationRecord = read_raster_csv(open(raster)?, &fallback)?;
    let stim = run.stimulus_program()?;
    let class = classify_pattern(&record, &stim, &cfg.classifier)?;
    let json = ClassificationReport::new(&record.config_digest, class.clone()).to_json()?;
    match out {
        Some(p) => write_file(p, json)?,
        None => println!("{json}"),
    }
    if let Some(stored) = manifest.and_then(|m| m.classification) {
        if stored.label != class.label {
            eprintln!(
                "warning: label {} differs from manifest label {}",
                class.label, stored.label
            );
        }
    }
    Ok(())
}

fn render(
    cfg: &CliConfigFile,
    raster: &Path,
    voltage: Option<&Path>,
    out: &Path,
    v_range: &[f64],
) -> Result<(), Failure> {
    let fallback = RasterMeta {
        n: cfg.run.topology.n,
        duration_ms: cfg.run.duration_ms,
        dt_ms: cfg.run.dt_ms,
        config_digest: String::new(),
    };
    let record = read_raster_csv(open(raster)?, &fallback)?;
    let voltage = voltage
        .map(|p| read_voltage_csv(open(p)?).map_err(Failure::from))
        .transpose()?;
    create_dir(out)?;
    write_file(&out.join("raster.svg"), raster_svg(&record))?;
    if let Some((trace, digest)) = voltage {
        write_file(
            &out.join("voltage.svg"),
            voltage_svg(&trace, &digest, v_range[0], v_range[1]),
        )?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = load_config(&cli.common)?;
    match cli.command {
        Command::Simulate {
            out,
            width,
            weight_ex,
            weight_in,
        } => simulate(&cfg, &out, width, weight_ex, weight_in),
        Command::Sweep {
            out,
            widths,
            weights_ex,
            weights_in,
            archive_rasters,
            jobs,
        } => sweep(
            &cfg,
            &out,
            widths,
            weights_ex,
            weights_in,
            archive_rasters,
            jobs,
        ),
        Command::Classify {
            raster,
            manifest,
            out,
        } => classify(&cfg, &raster, manifest.as_deref(), out.as_deref()),
        Command::Render {
            raster,
            voltage,
            out,
            v_range,
        } => render(&cfg, &raster, voltage.as_deref(), &out, &v_range),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
        Err(Failure::Partial(n)) => {
            eprintln!("{n} sweep cells failed");
            ExitCode::from(EXIT_PARTIAL)
        }
    }
}
