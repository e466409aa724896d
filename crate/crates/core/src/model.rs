//! Single-neuron dynamics: a conductance-based leaky integrate-and-fire
//! membrane driven by alpha-shaped excitatory and inhibitory conductances.
//!
//! Units throughout: mV, ms, nF, µS and nA (µS·mV = nA, nA/nF = mV/ms).
//!
//! Each synaptic channel is the linear cascade
//!
//! ```text
//! da/dt = -a / tau
//! dg/dt =  a - g / tau
//! ```
//!
//! whose impulse response to `a += w·e/tau` is `w·(e/tau)·t·exp(-t/tau)`,
//! the alpha function scaled to peak value `w` at `t = tau`. The cascade is
//! advanced with its exact propagator, so conductances carry no integration
//! error at step boundaries.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants of one neuron.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeuronParameters {
    /// Membrane capacitance (nF).
    pub c_m: f64,
    pub v_rest: f64,
    pub v_reset: f64,
    pub v_thresh: f64,
    /// Excitatory reversal potential (mV).
    pub e_rev_ex: f64,
    /// Inhibitory reversal potential (mV).
    pub e_rev_in: f64,
    /// Membrane time constant (ms).
    pub tau_m: f64,
    pub tau_syn_ex: f64,
    pub tau_syn_in: f64,
    pub tau_refract: f64,
}

impl Default for NeuronParameters {
    fn default() -> Self {
        Self {
            c_m: 1.0,
            v_rest: -65.0,
            v_reset: -70.0,
            v_thresh: -48.0,
            e_rev_ex: 0.0,
            e_rev_in: -70.0,
            tau_m: 20.0,
            tau_syn_ex: 5.0,
            tau_syn_in: 5.0,
            tau_refract: 2.0,
        }
    }
}

impl NeuronParameters {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.c_m,
            self.v_rest,
            self.v_reset,
            self.v_thresh,
            self.e_rev_ex,
            self.e_rev_in,
            self.tau_m,
            self.tau_syn_ex,
            self.tau_syn_in,
            self.tau_refract,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::parameter("neuron parameters must be finite"));
        }
        if self.c_m <= 0.0 {
            return Err(Error::parameter("c_m must be positive"));
        }
        if self.tau_m <= 0.0 || self.tau_syn_ex <= 0.0 || self.tau_syn_in <= 0.0 {
            return Err(Error::parameter("time constants must be positive"));
        }
        if self.tau_refract < 0.0 {
            return Err(Error::parameter("tau_refract must be non-negative"));
        }
        if !(self.v_reset <= self.v_rest
            && self.v_rest < self.v_thresh
            && self.v_thresh < self.e_rev_ex)
        {
            return Err(Error::parameter(
                "require v_reset <= v_rest < v_thresh < e_rev_ex",
            ));
        }
        if self.e_rev_in > self.v_rest {
            return Err(Error::parameter("require e_rev_in <= v_rest"));
        }
        Ok(())
    }

    /// Leak conductance `c_m / tau_m` (µS).
    pub fn leak_conductance(&self) -> f64 {
        self.c_m / self.tau_m
    }
}

/// Alpha function normalized to a peak of 1 at `t = tau`:
/// `(e/tau)·t·exp(-t/tau)`.
pub fn alpha_kernel(t: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::parameter(format!(
            "kernel tau must be positive, got {tau}"
        )));
    }
    if !(t >= 0.0) {
        return Err(Error::parameter(format!(
            "kernel time must be non-negative, got {t}"
        )));
    }
    Ok(E / tau * t * (-t / tau).exp())
}

/// State of one alpha-conductance channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynapseChannel {
    pub tau: f64,
    /// Rate variable (µS/ms).
    pub a: f64,
    /// Instantaneous conductance (µS).
    pub g: f64,
    /// Mean conductance over the most recent decay interval (µS). This is
    /// what the membrane integrator sees for that interval.
    pub g_mean: f64,
}

impl SynapseChannel {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::parameter(format!(
                "channel tau must be positive, got {tau}"
            )));
        }
        Ok(Self {
            tau,
            a: 0.0,
            g: 0.0,
            g_mean: 0.0,
        })
    }

    /// Deliver a spike of peak conductance `weight` (µS).
    pub fn inject(&mut self, weight: f64) -> Result<()> {
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::parameter(format!(
                "spike weight must be a non-negative conductance, got {weight}"
            )));
        }
        self.a += weight * E / self.tau;
        Ok(())
    }

    /// Advance the channel by `dt` ms with the exact propagator.
    pub fn decay(&mut self, dt: f64) -> Result<()> {
        ChannelPropagator::new(self.tau, dt)?.apply(self);
        Ok(())
    }

    pub fn is_quiescent(&self) -> bool {
        self.a == 0.0 && self.g == 0.0
    }
}

/// Precomputed exact update of a [`SynapseChannel`] over a fixed step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPropagator {
    dt: f64,
    decay: f64,
    // ∫₀^dt e^{-s/tau} ds / dt and ∫₀^dt s·e^{-s/tau} ds / dt
    mean_g: f64,
    mean_a: f64,
}

impl ChannelPropagator {
    pub fn new(tau: f64, dt: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::parameter(format!(
                "channel tau must be positive, got {tau}"
            )));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::parameter(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let x = dt / tau;
        let decay = (-x).exp();
        let one_minus = -(-x).exp_m1();
        Ok(Self {
            dt,
            decay,
            mean_g: tau * one_minus / dt,
            mean_a: tau * tau * (one_minus - x * decay) / dt,
        })
    }

    #[inline]
    pub fn apply(&self, ch: &mut SynapseChannel) {
        let (a, g) = (ch.a, ch.g);
        ch.g_mean = g * self.mean_g + a * self.mean_a;
        ch.g = (g + a * self.dt) * self.decay;
        ch.a = a * self.decay;
    }
}

/// Time-evolving state of one neuron.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeuronState {
    pub v_m: f64,
    pub ex: SynapseChannel,
    pub inh: SynapseChannel,
    /// Remaining refractory time (ms), 0 when not refractory.
    pub refract_remaining: f64,
    pub last_spike_time: Option<f64>,
}

impl NeuronState {
    pub fn at_rest(params: &NeuronParameters) -> Result<Self> {
        Ok(Self {
            v_m: params.v_rest,
            ex: SynapseChannel::new(params.tau_syn_ex)?,
            inh: SynapseChannel::new(params.tau_syn_in)?,
            refract_remaining: 0.0,
            last_spike_time: None,
        })
    }

    /// Excitatory synaptic current `G_ex·(V - E_ex)` (nA) at the present
    /// conductance.
    pub fn i_syn_ex(&self, params: &NeuronParameters) -> f64 {
        self.ex.g * (self.v_m - params.e_rev_ex)
    }

    pub fn i_syn_in(&self, params: &NeuronParameters) -> f64 {
        self.inh.g * (self.v_m - params.e_rev_in)
    }

    pub fn i_leak(&self, params: &NeuronParameters) -> f64 {
        params.c_m * (self.v_m - params.v_rest) / params.tau_m
    }
}

/// The membrane produced a NaN or infinite potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NonFiniteVoltage;

// Refractory counters below this are treated as expired; absorbs rounding
// left over from repeated subtraction of non-dyadic step sizes.
const REFRACT_EPS: f64 = 1e-9;

/// Advance the membrane of one neuron by `dt`, returning whether it spiked.
///
/// Channels must already have been advanced over this step; their
/// `g_mean` values are held fixed over the step and the resulting linear
/// membrane equation is solved exactly. `i_ext` is an injected current (nA).
///
/// A refractory neuron is clamped to `v_reset` and integrates nothing.
pub fn membrane_step(
    state: &mut NeuronState,
    params: &NeuronParameters,
    i_ext: f64,
    now: f64,
    dt: f64,
) -> Result<bool, NonFiniteVoltage> {
    if state.refract_remaining > 0.0 {
        state.v_m = params.v_reset;
        state.refract_remaining -= dt;
        if state.refract_remaining < REFRACT_EPS {
            state.refract_remaining = 0.0;
        }
        return Ok(false);
    }

    let g_leak = params.leak_conductance();
    let g_ex = state.ex.g_mean;
    let g_in = state.inh.g_mean;
    let g_total = g_leak + g_ex + g_in;
    let v_inf = (g_leak * params.v_rest + g_ex * params.e_rev_ex + g_in * params.e_rev_in + i_ext)
        / g_total;
    let v = v_inf + (state.v_m - v_inf) * (-dt * g_total / params.c_m).exp();
    if !v.is_finite() {
        return Err(NonFiniteVoltage);
    }

    if v >= params.v_thresh {
        state.v_m = params.v_reset;
        state.refract_remaining = params.tau_refract;
        state.last_spike_time = Some(now);
        Ok(true)
    } else {
        state.v_m = v;
        Ok(false)
    }
}
