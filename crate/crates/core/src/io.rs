//! On-disk formats: raster and voltage CSV, run manifest JSON.
//!
//! Both CSV files start with one `#` metadata line of `key=value` pairs
//! carrying the format version and config digest; readers skip any other
//! `#` line.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::analysis::Classification;
use crate::engine::{RunConfig, SimulationRecord, Spike, VoltageTrace};
use crate::error::{Error, Result};

pub const RASTER_FORMAT: &str = "bumpnet-raster";
pub const VOLTAGE_FORMAT: &str = "bumpnet-voltage";
pub const MANIFEST_FORMAT: &str = "bumpnet-run";
pub const CLASSIFICATION_FORMAT: &str = "bumpnet-classification";
pub const FORMAT_VERSION: u32 = 1;

/// Run shape needed to interpret a raster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterMeta {
    pub n: usize,
    pub duration_ms: f64,
    pub dt_ms: f64,
    pub config_digest: String,
}

impl Default for RasterMeta {
    fn default() -> Self {
        Self {
            n: 100,
            duration_ms: 300.0,
            dt_ms: 1.0,
            config_digest: String::new(),
        }
    }
}

impl RasterMeta {
    pub fn of(record: &SimulationRecord) -> Self {
        Self {
            n: record.n,
            duration_ms: record.duration_ms,
            dt_ms: record.dt_ms,
            config_digest: record.config_digest.clone(),
        }
    }
}

fn split_header(text: &str) -> (Option<&str>, &str) {
    match text.strip_prefix('#') {
        Some(rest) => match rest.split_once('\n') {
            Some((first, body)) => (Some(first.trim()), body),
            None => (Some(rest.trim()), ""),
        },
        None => (None, text),
    }
}

fn parse_meta_line(line: &str, format: &str, fallback: &RasterMeta) -> Result<RasterMeta> {
    let mut words = line.split_whitespace();
    if words.next() != Some(format) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected '# {format} v{FORMAT_VERSION} ...' metadata line"),
        });
    }
    if words.next() != Some(&format!("v{FORMAT_VERSION}")) {
        return Err(Error::Parse {
            line: 1,
            message: format!("unsupported {format} version"),
        });
    }
    let mut meta = fallback.clone();
    for word in words {
        let bad = || Error::Parse {
            line: 1,
            message: format!("bad metadata field '{word}'"),
        };
        let (k, v) = word.split_once('=').ok_or_else(bad)?;
        match k {
            "n" => meta.n = v.parse().map_err(|_| bad())?,
            "duration_ms" => meta.duration_ms = v.parse().map_err(|_| bad())?,
            "dt_ms" => meta.dt_ms = v.parse().map_err(|_| bad())?,
            "config_digest" => meta.config_digest = v.to_string(),
            _ => {}
        }
    }
    Ok(meta)
}

fn body_reader(body: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes())
}

/// Lines of the original file before the CSV body.
fn offset(has_meta: bool) -> u64 {
    u64::from(has_meta)
}

fn parse_field<T: std::str::FromStr>(field: &str, line: u64, what: &str) -> Result<T> {
    field.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid {what} '{field}'"),
    })
}

pub fn write_raster_csv<W: Write>(record: &SimulationRecord, mut out: W) -> Result<()> {
    writeln!(
        out,
        "# {RASTER_FORMAT} v{FORMAT_VERSION} n={} duration_ms={} dt_ms={} config_digest={}",
        record.n, record.duration_ms, record.dt_ms, record.config_digest
    )?;
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["neuron_id", "time_ms"])?;
    for s in &record.raster {
        wtr.write_record([s.neuron.to_string(), s.time_ms.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Read a raster CSV. Files without a metadata line take their run shape
/// from `fallback`.
pub fn read_raster_csv<R: Read>(mut input: R, fallback: &RasterMeta) -> Result<SimulationRecord> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let (meta_line, body) = split_header(&text);
    let meta = match meta_line {
        Some(l) => parse_meta_line(l, RASTER_FORMAT, fallback)?,
        None => fallback.clone(),
    };
    let skip = offset(meta_line.is_some());

    let mut rdr = body_reader(body);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["neuron_id", "time_ms"] {
        return Err(Error::Parse {
            line: skip + 1,
            message: "expected header 'neuron_id,time_ms'".into(),
        });
    }
    let mut raster = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| shift(e.into(), skip))?;
        let line = rec.position().map_or(0, |p| p.line()) + skip;
        let neuron: usize = parse_field(&rec[0], line, "neuron_id")?;
        let time_ms: f64 = parse_field(&rec[1], line, "time_ms")?;
        if neuron >= meta.n {
            return Err(Error::Parse {
                line,
                message: format!("neuron_id {neuron} outside network of {}", meta.n),
            });
        }
        if !(time_ms >= 0.0 && time_ms < meta.duration_ms) {
            return Err(Error::Parse {
                line,
                message: format!("time_ms {time_ms} outside [0, {})", meta.duration_ms),
            });
        }
        raster.push(Spike { neuron, time_ms });
    }
    raster.sort_by(|a, b| {
        a.time_ms
            .total_cmp(&b.time_ms)
            .then(a.neuron.cmp(&b.neuron))
    });

    let mut record = SimulationRecord::from_raster(meta.n, meta.duration_ms, meta.dt_ms, raster);
    record.config_digest = meta.config_digest;
    Ok(record)
}

fn shift(e: Error, by: u64) -> Error {
    match e {
        Error::Parse { line, message } => Error::Parse {
            line: line + by,
            message,
        },
        other => other,
    }
}

pub fn write_voltage_csv<W: Write>(
    trace: &VoltageTrace,
    config_digest: &str,
    mut out: W,
) -> Result<()> {
    writeln!(
        out,
        "# {VOLTAGE_FORMAT} v{FORMAT_VERSION} config_digest={config_digest}"
    )?;
    let mut wtr = csv::Writer::from_writer(out);
    let mut header = vec!["time_ms".to_string()];
    header.extend(trace.probes.iter().map(|p| format!("v_{p}")));
    wtr.write_record(&header)?;
    for (t, row) in trace.times_ms.iter().zip(&trace.samples) {
        let mut fields = vec![t.to_string()];
        fields.extend(row.iter().map(f64::to_string));
        wtr.write_record(&fields)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Read a voltage CSV, returning the trace and its config digest (empty
/// when the file carries none).
pub fn read_voltage_csv<R: Read>(mut input: R) -> Result<(VoltageTrace, String)> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let (meta_line, body) = split_header(&text);
    let digest = match meta_line {
        Some(l) => parse_meta_line(l, VOLTAGE_FORMAT, &RasterMeta::default())?.config_digest,
        None => String::new(),
    };
    let skip = offset(meta_line.is_some());

    let mut rdr = body_reader(body);
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some("time_ms") {
        return Err(Error::Parse {
            line: skip + 1,
            message: "expected header 'time_ms,v_<id>,...'".into(),
        });
    }
    let probes = headers
        .iter()
        .skip(1)
        .map(|h| {
            h.strip_prefix("v_")
                .and_then(|id| id.parse().ok())
                .ok_or_else(|| Error::Parse {
                    line: skip + 1,
                    message: format!("bad voltage column '{h}'"),
                })
        })
        .collect::<Result<Vec<usize>>>()?;

    let mut trace = VoltageTrace {
        probes,
        times_ms: Vec::new(),
        samples: Vec::new(),
    };
    for rec in rdr.records() {
        let rec = rec.map_err(|e| shift(e.into(), skip))?;
        let line = rec.position().map_or(0, |p| p.line()) + skip;
        trace.times_ms.push(parse_field(&rec[0], line, "time_ms")?);
        trace.samples.push(
            rec.iter()
                .skip(1)
                .map(|f| parse_field(f, line, "voltage"))
                .collect::<Result<_>>()?,
        );
    }
    Ok((trace, digest))
}

/// JSON envelope describing one simulation and the files it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub version: u32,
    pub config_digest: String,
    pub crate_version: String,
    pub config: RunConfig,
    pub spike_count: usize,
    pub classification: Option<Classification>,
    /// Role (e.g. `raster`) to file name, relative to the manifest.
    pub files: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(config: &RunConfig, record: &SimulationRecord) -> Self {
        Self {
            format: MANIFEST_FORMAT.to_string(),
            version: FORMAT_VERSION,
            config_digest: record.config_digest.clone(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            spike_count: record.raster.len(),
            classification: None,
            files: BTreeMap::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json<R: Read>(input: R) -> Result<Self> {
        let m: Self = serde_json::from_reader(input)?;
        if m.format != MANIFEST_FORMAT || m.version != FORMAT_VERSION {
            return Err(Error::parameter(format!(
                "not a {MANIFEST_FORMAT} v{FORMAT_VERSION} manifest"
            )));
        }
        Ok(m)
    }
}

/// Per-run classification file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub format: String,
    pub version: u32,
    pub config_digest: String,
    #[serde(flatten)]
    pub classification: Classification,
}

impl ClassificationReport {
    pub fn new(config_digest: &str, classification: Classification) -> Self {
        Self {
            format: CLASSIFICATION_FORMAT.to_string(),
            version: FORMAT_VERSION,
            config_digest: config_digest.to_string(),
            classification,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Read a JSON document from a reader, reporting the failing line.
pub fn read_json<T: serde::de::DeserializeOwned, R: Read>(mut input: R) -> Result<T> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line() as u64,
        message: e.to_string(),
    })
}
