//! Clock-driven simulation loop.
//!
//! One tick at step `s` (time `s·dt`):
//!
//! 1. spikes emitted at step `s-1` are routed through the connectivity
//!    matrix (positive weights to the excitatory channel, magnitudes of
//!    negative weights to the inhibitory channel), then external stimulus
//!    events due at `s·dt` are delivered to the excitatory channel;
//! 2. every channel is advanced by `dt`;
//! 3. every membrane is advanced by `dt` in ascending neuron order.
//!
//! Recurrent spikes therefore take effect one step after they are emitted.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{membrane_step, ChannelPropagator, NeuronParameters, NeuronState};
use crate::stimulus::{StimulusConfig, StimulusProgram};
use crate::topology::{build_bump_matrix, TopologySpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub topology: TopologySpec,
    pub neuron: NeuronParameters,
    pub stimulus: StimulusConfig,
    pub duration_ms: f64,
    pub dt_ms: f64,
    pub record_voltage: bool,
    /// Neurons whose voltage is recorded; `None` records all of them.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub voltage_probes: Option<Vec<usize>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            topology: TopologySpec::default(),
            neuron: NeuronParameters::default(),
            stimulus: StimulusConfig::default(),
            duration_ms: 300.0,
            dt_ms: 1.0,
            record_voltage: true,
            voltage_probes: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.topology.validate()?;
        self.neuron.validate()?;
        if !(self.duration_ms > 0.0) || !self.duration_ms.is_finite() {
            return Err(Error::parameter("duration_ms must be positive"));
        }
        if !(self.dt_ms > 0.0) || !self.dt_ms.is_finite() {
            return Err(Error::parameter("dt_ms must be positive"));
        }
        let steps = (self.duration_ms / self.dt_ms).round();
        if steps < 1.0 || (steps * self.dt_ms - self.duration_ms).abs() > 1e-9 * self.duration_ms {
            return Err(Error::parameter("duration_ms must be a multiple of dt_ms"));
        }
        let program = self.stimulus_program()?;
        for t in &program.spike_times {
            let k = (t / self.dt_ms).round();
            if (k * self.dt_ms - t).abs() > 1e-9 {
                return Err(Error::parameter(format!(
                    "stimulus time {t} ms is not on the {} ms step grid",
                    self.dt_ms
                )));
            }
        }
        if let Some(probes) = &self.voltage_probes {
            if let Some(&bad) = probes.iter().find(|p| **p >= self.topology.n) {
                return Err(Error::IndexOutOfRange {
                    index: bad,
                    n: self.topology.n,
                });
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.duration_ms / self.dt_ms).round() as usize
    }

    pub fn stimulus_program(&self) -> Result<StimulusProgram> {
        StimulusProgram::build(
            &self.stimulus,
            self.topology.n,
            self.duration_ms,
            self.topology.w_excit,
        )
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spike {
    pub neuron: usize,
    pub time_ms: f64,
}

/// Membrane potential samples, one row per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoltageTrace {
    pub probes: Vec<usize>,
    pub times_ms: Vec<f64>,
    /// `samples[step][k]` is the potential of `probes[k]` after `step`.
    pub samples: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub n: usize,
    pub duration_ms: f64,
    pub dt_ms: f64,
    /// Spikes ordered by time, then neuron.
    pub raster: Vec<Spike>,
    pub voltages: Option<VoltageTrace>,
    pub config_digest: String,
}

impl SimulationRecord {
    /// A record holding only a raster, e.g. one read back from CSV.
    pub fn from_raster(n: usize, duration_ms: f64, dt_ms: f64, raster: Vec<Spike>) -> Self {
        Self {
            n,
            duration_ms,
            dt_ms,
            raster,
            voltages: None,
            config_digest: String::new(),
        }
    }

    pub fn spike_times_of(&self, neuron: usize) -> impl Iterator<Item = f64> + '_ {
        self.raster
            .iter()
            .filter(move |s| s.neuron == neuron)
            .map(|s| s.time_ms)
    }

    /// Smallest inter-spike interval of any neuron, if any neuron spiked twice.
    pub fn min_isi(&self) -> Option<f64> {
        let mut last = vec![None::<f64>; self.n];
        let mut best: Option<f64> = None;
        for s in &self.raster {
            if let Some(prev) = last[s.neuron] {
                let isi = s.time_ms - prev;
                best = Some(best.map_or(isi, |b| b.min(isi)));
            }
            last[s.neuron] = Some(s.time_ms);
        }
        best
    }
}

/// Complete mutable state of one simulation.
#[derive(Debug, Clone)]
pub struct Network {
    params: NeuronParameters,
    neurons: Vec<NeuronState>,
    fanout: Vec<Vec<(usize, f64)>>,
    program: StimulusProgram,
    ex_prop: ChannelPropagator,
    in_prop: ChannelPropagator,
    dt: f64,
    step: usize,
    pending: Vec<usize>,
    emitted: Vec<usize>,
}

impl Network {
    pub fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let matrix = build_bump_matrix(&config.topology)?;
        let params = config.neuron;
        let neurons = vec![NeuronState::at_rest(&params)?; config.topology.n];
        Ok(Self {
            params,
            neurons,
            fanout: matrix.fanout(),
            program: config.stimulus_program()?,
            ex_prop: ChannelPropagator::new(params.tau_syn_ex, config.dt_ms)?,
            in_prop: ChannelPropagator::new(params.tau_syn_in, config.dt_ms)?,
            dt: config.dt_ms,
            step: 0,
            pending: Vec::new(),
            emitted: Vec::new(),
        })
    }

    pub fn neurons(&self) -> &[NeuronState] {
        &self.neurons
    }

    /// Index of the next step to execute.
    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn time_ms(&self) -> f64 {
        self.step as f64 * self.dt
    }

    /// Spikes awaiting delivery at the next step.
    pub fn pending(&self) -> &[usize] {
        &self.pending
    }

    /// Queue a recurrent spike from `neuron` for delivery at the next step,
    /// as if it had fired on the previous one.
    pub fn emit(&mut self, neuron: usize) -> Result<()> {
        if neuron >= self.neurons.len() {
            return Err(Error::IndexOutOfRange {
                index: neuron,
                n: self.neurons.len(),
            });
        }
        if let Err(pos) = self.pending.binary_search(&neuron) {
            self.pending.insert(pos, neuron);
        }
        Ok(())
    }

    /// Execute one tick, returning the neurons that fired, ascending.
    pub fn step(&mut self) -> Result<&[usize]> {
        let now = self.time_ms();

        for &pre in &self.pending {
            for &(post, w) in &self.fanout[pre] {
                let target = &mut self.neurons[post];
                if w > 0.0 {
                    target.ex.inject(w)?;
                } else {
                    target.inh.inject(-w)?;
                }
            }
        }
        if self.program.fires_at(now) {
            let w = self.program.input_weight;
            for i in self.program.targets() {
                self.neurons[i].ex.inject(w)?;
            }
        }

        for n in &mut self.neurons {
            self.ex_prop.apply(&mut n.ex);
            self.in_prop.apply(&mut n.inh);
        }

        self.emitted.clear();
        for (i, n) in self.neurons.iter_mut().enumerate() {
            let spiked = membrane_step(n, &self.params, 0.0, now, self.dt).map_err(|_| {
                Error::NumericOverflow {
                    neuron: i,
                    step: self.step,
                }
            })?;
            if spiked {
                self.emitted.push(i);
            }
        }

        std::mem::swap(&mut self.pending, &mut self.emitted);
        self.step += 1;
        Ok(&self.pending)
    }
}

/// Run one complete simulation.
pub fn run_simulation(config: &RunConfig) -> Result<SimulationRecord> {
    let mut net = Network::new(config)?;
    let steps = config.steps();
    let probes: Vec<usize> = match &config.voltage_probes {
        Some(p) => p.clone(),
        None => (0..config.topology.n).collect(),
    };
    let mut trace = config.record_voltage.then(|| VoltageTrace {
        probes: probes.clone(),
        times_ms: Vec::with_capacity(steps),
        samples: Vec::with_capacity(steps),
    });

    let mut raster = Vec::new();
    for _ in 0..steps {
        let t = net.time_ms();
        let fired = net.step()?;
        raster.extend(fired.iter().map(|&neuron| Spike { neuron, time_ms: t }));
        if let Some(tr) = trace.as_mut() {
            tr.times_ms.push(t);
            tr.samples
                .push(probes.iter().map(|&p| net.neurons[p].v_m).collect());
        }
    }

    Ok(SimulationRecord {
        n: config.topology.n,
        duration_ms: config.duration_ms,
        dt_ms: config.dt_ms,
        raster,
        voltages: trace,
        config_digest: config.digest(),
    })
}
