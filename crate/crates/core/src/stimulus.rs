//! Deterministic spike sources driving a contiguous window of neurons.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spike times for every source in the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, try_from = "RawSchedule")]
pub enum ScheduleSpec {
    /// `start_ms, start_ms + period_ms, ...` strictly before `stop_ms`
    /// (or the end of the run when `stop_ms` is absent).
    Periodic {
        period_ms: f64,
        start_ms: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stop_ms: Option<f64>,
    },
    Times {
        times_ms: Vec<f64>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    period_ms: Option<f64>,
    start_ms: Option<f64>,
    stop_ms: Option<f64>,
    times_ms: Option<Vec<f64>>,
}

impl TryFrom<RawSchedule> for ScheduleSpec {
    type Error = String;

    fn try_from(r: RawSchedule) -> std::result::Result<Self, String> {
        match (r.period_ms, r.start_ms, r.times_ms) {
            (Some(period_ms), Some(start_ms), None) => Ok(ScheduleSpec::Periodic {
                period_ms,
                start_ms,
                stop_ms: r.stop_ms,
            }),
            (None, None, Some(times_ms)) if r.stop_ms.is_none() => {
                Ok(ScheduleSpec::Times { times_ms })
            }
            _ => Err(
                "schedule needs either period_ms and start_ms (optional stop_ms) or times_ms"
                    .into(),
            ),
        }
    }
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec::Periodic {
            period_ms: 10.0,
            start_ms: 1.0,
            stop_ms: None,
        }
    }
}

impl ScheduleSpec {
    /// Single volley at `t_ms`.
    pub fn single(t_ms: f64) -> Self {
        ScheduleSpec::Times {
            times_ms: vec![t_ms],
        }
    }

    /// Expand to an explicit, strictly increasing list of times in
    /// `[0, duration_ms)`.
    pub fn spike_times(&self, duration_ms: f64) -> Result<Vec<f64>> {
        match self {
            ScheduleSpec::Periodic {
                period_ms,
                start_ms,
                stop_ms,
            } => {
                let (period, start) = (*period_ms, *start_ms);
                if !(period > 0.0) || !period.is_finite() {
                    return Err(Error::parameter("period_ms must be positive"));
                }
                if !(start >= 0.0) || !start.is_finite() {
                    return Err(Error::parameter("start_ms must be non-negative"));
                }
                let stop = stop_ms.unwrap_or(duration_ms).min(duration_ms);
                let mut times = Vec::new();
                let mut k = 0u32;
                loop {
                    // multiply rather than accumulate so long trains stay exact
                    let t = start + f64::from(k) * period;
                    if t >= stop {
                        break;
                    }
                    times.push(t);
                    k += 1;
                }
                Ok(times)
            }
            ScheduleSpec::Times { times_ms } => {
                for w in times_ms.windows(2) {
                    if !(w[1] > w[0]) {
                        return Err(Error::parameter("times_ms must be strictly increasing"));
                    }
                }
                if let Some(bad) = times_ms
                    .iter()
                    .find(|t| !(**t >= 0.0) || **t >= duration_ms)
                {
                    return Err(Error::parameter(format!(
                        "spike time {bad} outside [0, {duration_ms})"
                    )));
                }
                Ok(times_ms.clone())
            }
        }
    }
}

/// Stimulus section of a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StimulusConfig {
    pub window_start: usize,
    pub window_width: usize,
    pub schedule: ScheduleSpec,
    /// Peak conductance of each input spike (µS); `None` uses the run's
    /// excitatory recurrent weight.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_weight: Option<f64>,
}

impl Default for StimulusConfig {
    fn default() -> Self {
        Self {
            window_start: 30,
            window_width: 25,
            schedule: ScheduleSpec::default(),
            input_weight: None,
        }
    }
}

/// A resolved stimulus: which neurons are driven, when, and how hard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusProgram {
    pub window_start: usize,
    pub window_width: usize,
    pub spike_times: Vec<f64>,
    pub input_weight: f64,
}

// Two times closer than this are the same event.
const TIME_EPS: f64 = 1e-9;

impl StimulusProgram {
    /// One source per neuron in `[window_start, window_start + width)`, each
    /// firing the schedule's spike times.
    pub fn build(
        cfg: &StimulusConfig,
        n: usize,
        duration_ms: f64,
        default_weight: f64,
    ) -> Result<Self> {
        if cfg.window_width == 0 {
            return Err(Error::parameter(
                "stimulus window must contain at least one source",
            ));
        }
        if cfg.window_start + cfg.window_width > n {
            return Err(Error::parameter(format!(
                "stimulus window [{}, {}) escapes network of {n} neurons",
                cfg.window_start,
                cfg.window_start + cfg.window_width
            )));
        }
        let input_weight = cfg.input_weight.unwrap_or(default_weight);
        if !(input_weight >= 0.0) || !input_weight.is_finite() {
            return Err(Error::parameter(
                "input_weight must be a non-negative conductance",
            ));
        }
        Ok(Self {
            window_start: cfg.window_start,
            window_width: cfg.window_width,
            spike_times: cfg.schedule.spike_times(duration_ms)?,
            input_weight,
        })
    }

    pub fn targets(&self) -> std::ops::Range<usize> {
        self.window_start..self.window_start + self.window_width
    }

    pub fn is_target(&self, neuron: usize) -> bool {
        self.targets().contains(&neuron)
    }

    pub fn fires_at(&self, t: f64) -> bool {
        let i = self.spike_times.partition_point(|s| *s < t - TIME_EPS);
        self.spike_times
            .get(i)
            .is_some_and(|s| (s - t).abs() <= TIME_EPS)
    }

    /// External events `(neuron, weight)` due at time `t`.
    pub fn events_at(&self, t: f64) -> Vec<(usize, f64)> {
        if self.fires_at(t) {
            self.targets().map(|i| (i, self.input_weight)).collect()
        } else {
            Vec::new()
        }
    }

    /// Sum of all delivered input weight (µS·spikes).
    pub fn total_drive(&self) -> f64 {
        self.window_width as f64 * self.spike_times.len() as f64 * self.input_weight
    }
}
