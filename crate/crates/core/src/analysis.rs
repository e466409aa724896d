//! Raster classification into the bump-network pattern taxonomy.
//!
//! The raster is binned in time, each bin's active neurons are grouped into
//! spatial clusters ("streams"), and the final portion of the run decides the
//! label:
//!
//! 1. no spike outside the stimulated window after the settling margin:
//!    [`PatternClass::NoIgnition`];
//! 2. divergence flag: least-squares slope of per-bin active count over the
//!    evaluation window exceeds `divergence_slope_min`, or the last bin has
//!    more than `divergence_fraction·n` active neurons;
//! 3. stream count: modal cluster count over the evaluation window, ties
//!    going to the larger count;
//! 4. one stream, no divergence and centroid drift within `drift_max`:
//!    [`PatternClass::Stationary`];
//! 5. split / split-with-divergence / divergent by stream count and flag;
//! 6. anything else is [`PatternClass::Unclassified`].

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::engine::SimulationRecord;
use crate::error::{Error, Result};
use crate::stimulus::StimulusProgram;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierParams {
    pub bin_width_ms: f64,
    /// Largest run of silent indices bridged inside one cluster.
    pub gap_tolerance: usize,
    /// Allowed centroid excursion from its median for a stationary bump.
    pub drift_max: f64,
    /// Active-neuron growth (neurons per bin) that flags divergence.
    pub divergence_slope_min: f64,
    /// Fraction of the network active in the last bin that flags divergence.
    pub divergence_fraction: f64,
    pub settling_ms: f64,
    /// Trailing fraction of the bins used for the decision.
    pub evaluation_fraction: f64,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        Self {
            bin_width_ms: 10.0,
            gap_tolerance: 2,
            drift_max: 3.0,
            divergence_slope_min: 0.5,
            divergence_fraction: 0.8,
            settling_ms: 50.0,
            evaluation_fraction: 1.0 / 3.0,
        }
    }
}

impl ClassifierParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.bin_width_ms > 0.0) || !self.bin_width_ms.is_finite() {
            return Err(Error::parameter("bin_width_ms must be positive"));
        }
        if !(self.evaluation_fraction > 0.0 && self.evaluation_fraction <= 1.0) {
            return Err(Error::parameter("evaluation_fraction must lie in (0, 1]"));
        }
        if !(self.drift_max >= 0.0) || !(self.settling_ms >= 0.0) {
            return Err(Error::parameter(
                "drift_max and settling_ms must be non-negative",
            ));
        }
        if !self.divergence_slope_min.is_finite() || !self.divergence_fraction.is_finite() {
            return Err(Error::parameter("divergence thresholds must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedRaster {
    pub bin_width_ms: f64,
    pub n: usize,
    /// Active neurons per bin, ascending.
    pub bins: Vec<Vec<usize>>,
}

impl BinnedRaster {
    pub fn active_counts(&self) -> Vec<usize> {
        self.bins.iter().map(Vec::len).collect()
    }
}

/// Neuron `i` is active in bin `b` iff it spiked in `[b·w, (b+1)·w)`.
pub fn bin_raster(record: &SimulationRecord, bin_width_ms: f64) -> Result<BinnedRaster> {
    if !(bin_width_ms > 0.0) || !bin_width_ms.is_finite() {
        return Err(Error::parameter("bin width must be positive"));
    }
    let nbins = (record.duration_ms / bin_width_ms - 1e-9).ceil().max(0.0) as usize;
    let mut bins = vec![Vec::new(); nbins];
    for s in &record.raster {
        if s.neuron >= record.n {
            return Err(Error::IndexOutOfRange {
                index: s.neuron,
                n: record.n,
            });
        }
        if !(s.time_ms >= 0.0 && s.time_ms < record.duration_ms) {
            return Err(Error::parameter(format!(
                "spike time {} outside [0, {})",
                s.time_ms, record.duration_ms
            )));
        }
        let b = ((s.time_ms / bin_width_ms).floor() as usize).min(nbins - 1);
        bins[b].push(s.neuron);
    }
    for b in &mut bins {
        b.sort_unstable();
        b.dedup();
    }
    Ok(BinnedRaster {
        bin_width_ms,
        n: record.n,
        bins,
    })
}

/// A maximal run of active neurons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub start: usize,
    pub end: usize,
    /// Mean index of the active members.
    pub centroid: f64,
    /// Number of active members.
    pub width: usize,
}

/// Split active indices into clusters whose consecutive members differ by at
/// most `gap_tolerance + 1`, ascending by index.
pub fn cluster_bin(active: &[usize], gap_tolerance: usize) -> Vec<Cluster> {
    let mut sorted = active.to_vec();
    sorted.sort_unstable();
    sorted.dedup();

    let mut out = Vec::new();
    let mut iter = sorted.into_iter();
    let Some(first) = iter.next() else {
        return out;
    };
    let (mut start, mut end, mut sum, mut count) = (first, first, first, 1usize);
    for i in iter {
        if i - end <= gap_tolerance + 1 {
            end = i;
            sum += i;
            count += 1;
        } else {
            out.push(Cluster {
                start,
                end,
                centroid: sum as f64 / count as f64,
                width: count,
            });
            (start, end, sum, count) = (i, i, i, 1);
        }
    }
    out.push(Cluster {
        start,
        end,
        centroid: sum as f64 / count as f64,
        width: count,
    });
    out
}

/// Clusters of every bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamTrack {
    pub bins: Vec<Vec<Cluster>>,
}

impl StreamTrack {
    pub fn from_binned(binned: &BinnedRaster, gap_tolerance: usize) -> Self {
        Self {
            bins: binned
                .bins
                .iter()
                .map(|b| cluster_bin(b, gap_tolerance))
                .collect(),
        }
    }

    pub fn counts(&self) -> Vec<usize> {
        self.bins.iter().map(Vec::len).collect()
    }

    pub fn centroids(&self) -> Vec<Vec<f64>> {
        self.bins
            .iter()
            .map(|b| b.iter().map(|c| c.centroid).collect())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum PatternClass {
    NoIgnition,
    Stationary,
    Split { streams: usize },
    Divergent,
    SplitWithDivergence { streams: usize },
    Unclassified,
}

impl PatternClass {
    /// Stream count for split classes.
    pub fn streams(&self) -> Option<usize> {
        match self {
            PatternClass::Split { streams } | PatternClass::SplitWithDivergence { streams } => {
                Some(*streams)
            }
            _ => None,
        }
    }

    pub fn ignited(&self) -> bool {
        *self != PatternClass::NoIgnition
    }

    pub fn has_divergence(&self) -> bool {
        matches!(
            self,
            PatternClass::Divergent | PatternClass::SplitWithDivergence { .. }
        )
    }
}

impl fmt::Display for PatternClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternClass::NoIgnition => f.write_str("NoIgnition"),
            PatternClass::Stationary => f.write_str("Stationary"),
            PatternClass::Split { streams } => write!(f, "Split({streams})"),
            PatternClass::Divergent => f.write_str("Divergent"),
            PatternClass::SplitWithDivergence { streams } => {
                write!(f, "SplitWithDivergence({streams})")
            }
            PatternClass::Unclassified => f.write_str("Unclassified"),
        }
    }
}

/// Label plus the diagnostics it was derived from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub label: PatternClass,
    /// Modal cluster count over the evaluation window.
    pub streams: usize,
    pub divergent: bool,
    pub divergence_slope: f64,
    pub final_active: usize,
    /// First bin of the evaluation window.
    pub evaluation_start_bin: usize,
    pub cluster_counts: Vec<usize>,
    pub centroid_tracks: Vec<Vec<f64>>,
    pub params: ClassifierParams,
}

fn least_squares_slope(ys: &[usize]) -> f64 {
    let m = ys.len();
    if m < 2 {
        return 0.0;
    }
    let mean_x = (m - 1) as f64 / 2.0;
    let mean_y = ys.iter().sum::<usize>() as f64 / m as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in ys.iter().enumerate() {
        let dx = x as f64 - mean_x;
        sxy += dx * (*y as f64 - mean_y);
        sxx += dx * dx;
    }
    sxy / sxx
}

fn modal_count(counts: &[usize]) -> usize {
    let mut freq: BTreeMap<usize, usize> = BTreeMap::new();
    for c in counts {
        *freq.entry(*c).or_default() += 1;
    }
    freq.iter()
        .max_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(b.0)))
        .map(|(k, _)| *k)
        .unwrap_or(0)
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len();
    if m % 2 == 1 {
        xs[m / 2]
    } else {
        (xs[m / 2 - 1] + xs[m / 2]) / 2.0
    }
}

pub fn classify_pattern(
    record: &SimulationRecord,
    stim: &StimulusProgram,
    params: &ClassifierParams,
) -> Result<Classification> {
    params.validate()?;
    let binned = bin_raster(record, params.bin_width_ms)?;
    let track = StreamTrack::from_binned(&binned, params.gap_tolerance);
    let counts = track.counts();
    let nbins = binned.bins.len();
    let eval_len =
        ((nbins as f64 * params.evaluation_fraction).round() as usize).clamp(1, nbins.max(1));
    let eval_start = nbins.saturating_sub(eval_len);

    let mut out = Classification {
        label: PatternClass::NoIgnition,
        streams: 0,
        divergent: false,
        divergence_slope: 0.0,
        final_active: 0,
        evaluation_start_bin: eval_start,
        cluster_counts: counts.clone(),
        centroid_tracks: track.centroids(),
        params: *params,
    };

    let ignited = record
        .raster
        .iter()
        .any(|s| s.time_ms >= params.settling_ms && !stim.is_target(s.neuron));
    if !ignited || nbins == 0 {
        return Ok(out);
    }

    let active = binned.active_counts();
    let eval_active = &active[eval_start..];
    out.divergence_slope = least_squares_slope(eval_active);
    out.final_active = *active.last().unwrap_or(&0);
    out.divergent = out.divergence_slope > params.divergence_slope_min
        || out.final_active as f64 > params.divergence_fraction * record.n as f64;

    let k = modal_count(&counts[eval_start..]);
    out.streams = k;

    out.label = match (k, out.divergent) {
        (1, false) => {
            let mut centroids: Vec<f64> = track.bins[eval_start..]
                .iter()
                .filter(|b| b.len() == 1)
                .map(|b| b[0].centroid)
                .collect();
            let med = median(&mut centroids);
            let drift = centroids
                .iter()
                .map(|c| (c - med).abs())
                .fold(0.0, f64::max);
            if drift <= params.drift_max {
                PatternClass::Stationary
            } else {
                PatternClass::Unclassified
            }
        }
        (2..=4, false) => PatternClass::Split { streams: k },
        (k, true) if k >= 2 => PatternClass::SplitWithDivergence { streams: k },
        (_, true) => PatternClass::Divergent,
        _ => PatternClass::Unclassified,
    };
    Ok(out)
}

/// First width at which a pattern appears.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Threshold {
    pub width: Option<usize>,
    /// The class at `width` also carries divergence.
    pub with_divergence: bool,
    /// Some wider window failed to ignite again.
    pub non_monotone: bool,
}

fn check_complete(results: &BTreeMap<usize, PatternClass>, widths: &[usize]) -> Result<()> {
    match widths.iter().find(|w| !results.contains_key(w)) {
        Some(&width) => Err(Error::IncompleteSweep { width }),
        None => Ok(()),
    }
}

/// Least width whose class is not [`PatternClass::NoIgnition`].
pub fn ignition_threshold(
    results: &BTreeMap<usize, PatternClass>,
    widths: &[usize],
) -> Result<Threshold> {
    check_complete(results, widths)?;
    let first = results.iter().find(|(_, c)| c.ignited()).map(|(w, _)| *w);
    let non_monotone = first.is_some_and(|w0| {
        results
            .range(w0 + 1..)
            .any(|(_, c)| *c == PatternClass::NoIgnition)
    });
    Ok(Threshold {
        width: first,
        with_divergence: false,
        non_monotone,
    })
}

/// Least width split into exactly `streams` streams, with or without
/// divergence.
pub fn split_threshold(
    results: &BTreeMap<usize, PatternClass>,
    widths: &[usize],
    streams: usize,
) -> Result<Threshold> {
    check_complete(results, widths)?;
    Ok(results
        .iter()
        .find(|(_, c)| c.streams() == Some(streams))
        .map(|(w, c)| Threshold {
            width: Some(*w),
            with_divergence: c.has_divergence(),
            non_monotone: false,
        })
        .unwrap_or_default())
}

/// Whether the first non-stationary pattern met while widening the window
/// is plain divergence rather than a split.
pub fn divergent_dominant(results: &BTreeMap<usize, PatternClass>) -> bool {
    results
        .values()
        .find(|c| {
            matches!(
                c,
                PatternClass::Divergent
                    | PatternClass::Split { .. }
                    | PatternClass::SplitWithDivergence { .. }
            )
        })
        .is_some_and(|c| *c == PatternClass::Divergent)
}
