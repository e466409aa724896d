//! Independent references shared by the integration and acceptance tests.
#![allow(dead_code)]

use bumpnet::{
    NeuronParameters, PatternClass, ScheduleSpec, SimulationRecord, Spike, StimulusConfig,
    StimulusProgram,
};

/// Weight grid used by the sweep, 0.05..=0.10.
pub fn grid() -> Vec<f64> {
    vec![0.05, 0.06, 0.07, 0.08, 0.09, 0.10]
}

/// Alpha conductance of a train of `(onset, weight)` pairs at time `t`:
/// `Σ w·(t−s)/τ·exp(1−(t−s)/τ)`.
pub fn alpha_sum(train: &[(f64, f64)], tau: f64, t: f64) -> f64 {
    train
        .iter()
        .filter(|(s, _)| t > *s)
        .map(|(s, w)| {
            let u = (t - s) / tau;
            w * u * (1.0 - u).exp()
        })
        .sum()
}

/// Classical RK4 on the subthreshold membrane equation with continuous
/// alpha conductances. Returns `V` at every whole millisecond `1..=t_end`.
pub fn rk4_membrane(
    p: &NeuronParameters,
    v0: f64,
    ex: &[(f64, f64)],
    inh: &[(f64, f64)],
    t_end: usize,
    h: f64,
) -> Vec<f64> {
    let g_l = p.c_m / p.tau_m;
    let f = |t: f64, v: f64| {
        let ge = alpha_sum(ex, p.tau_syn_ex, t);
        let gi = alpha_sum(inh, p.tau_syn_in, t);
        (g_l * (p.v_rest - v) + ge * (p.e_rev_ex - v) + gi * (p.e_rev_in - v)) / p.c_m
    };
    let per_ms = (1.0 / h).round() as usize;
    let mut v = v0;
    let mut out = Vec::with_capacity(t_end);
    for ms in 0..t_end {
        for k in 0..per_ms {
            let t = ms as f64 + k as f64 * h;
            let k1 = f(t, v);
            let k2 = f(t + h / 2.0, v + h / 2.0 * k1);
            let k3 = f(t + h / 2.0, v + h / 2.0 * k2);
            let k4 = f(t + h, v + h * k3);
            v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        out.push(v);
    }
    out
}

/// Ordered (pre, post) pairs of a line of `n` cells whose distance lies in
/// `lo..=hi`, by enumeration.
pub fn band_pairs(n: usize, lo: usize, hi: usize) -> usize {
    let mut count = 0;
    for i in 0..n {
        for j in 0..n {
            let d = i.abs_diff(j);
            if d >= lo && d <= hi {
                count += 1;
            }
        }
    }
    count
}

/// Closed-form count of the same pairs: `2·Σ_{d=lo..=hi} (n − d)`.
pub fn band_pairs_formula(n: usize, lo: usize, hi: usize) -> usize {
    (lo..=hi).map(|d| 2 * (n - d)).sum()
}

pub const N: usize = 100;
pub const BINS: usize = 30;

/// Stimulus window 30..35 used by every corpus raster.
pub fn corpus_stimulus() -> StimulusProgram {
    let cfg = StimulusConfig {
        window_start: 30,
        window_width: 5,
        schedule: ScheduleSpec::single(1.0),
        input_weight: None,
    };
    StimulusProgram::build(&cfg, N, 300.0, 0.05).unwrap()
}

/// Every neuron returned by `active(bin)` fires once, 3 ms into the bin.
pub fn raster_by_bin(active: impl Fn(usize) -> Vec<usize>) -> SimulationRecord {
    let mut raster = Vec::new();
    for b in 0..BINS {
        let mut ids = active(b);
        ids.retain(|i| *i < N);
        ids.sort_unstable();
        ids.dedup();
        raster.extend(ids.into_iter().map(|neuron| Spike {
            neuron,
            time_ms: b as f64 * 10.0 + 3.0,
        }));
    }
    SimulationRecord::from_raster(N, 300.0, 1.0, raster)
}

fn span(lo: usize, hi: usize) -> Vec<usize> {
    (lo..hi.min(N)).collect()
}

fn blocks(starts: &[usize], width: usize) -> Vec<usize> {
    starts.iter().flat_map(|s| span(*s, s + width)).collect()
}

pub struct Labelled {
    pub name: &'static str,
    pub record: SimulationRecord,
    pub expected: PatternClass,
}

/// Hand-built rasters with known labels, each well inside its class.
pub fn corpus() -> Vec<Labelled> {
    use PatternClass::*;
    let mut out = Vec::new();
    let mut add = |name, expected, record| {
        out.push(Labelled {
            name,
            record,
            expected,
        })
    };

    // no ignition
    add("silent", NoIgnition, raster_by_bin(|_| vec![]));
    add("window only", NoIgnition, raster_by_bin(|_| span(30, 35)));
    add(
        "transient before settling",
        NoIgnition,
        raster_by_bin(|b| if b < 5 { span(28, 40) } else { span(30, 35) }),
    );
    add(
        "one stray spike at 49 ms",
        NoIgnition,
        SimulationRecord::from_raster(
            N,
            300.0,
            1.0,
            vec![Spike {
                neuron: 70,
                time_ms: 49.0,
            }],
        ),
    );

    // stationary bump
    add("fixed block", Stationary, raster_by_bin(|_| span(60, 70)));
    add(
        "late fixed block",
        Stationary,
        raster_by_bin(|b| if b >= 5 { span(60, 70) } else { vec![] }),
    );
    add(
        "block over window",
        Stationary,
        raster_by_bin(|_| span(30, 42)),
    );
    add(
        "jittering block",
        Stationary,
        raster_by_bin(|b| span(60 + b % 2, 70 + b % 2)),
    );
    add(
        "sparse block",
        Stationary,
        raster_by_bin(|_| (60..72).step_by(2).collect()),
    );

    // splits
    add(
        "two fixed streams",
        Split { streams: 2 },
        raster_by_bin(|_| blocks(&[20, 70], 5)),
    );
    add(
        "two separating streams",
        Split { streams: 2 },
        raster_by_bin(|b| blocks(&[45 - b, 51 + b], 4)),
    );
    add(
        "two streams with a dropout",
        Split { streams: 2 },
        raster_by_bin(|b| {
            if b == 25 {
                span(20, 25)
            } else {
                blocks(&[20, 70], 5)
            }
        }),
    );
    add(
        "three fixed streams",
        Split { streams: 3 },
        raster_by_bin(|_| blocks(&[15, 45, 80], 5)),
    );
    add(
        "three separating streams",
        Split { streams: 3 },
        raster_by_bin(|b| blocks(&[38 - b, 48, 58 + b], 4)),
    );
    add(
        "four fixed streams",
        Split { streams: 4 },
        raster_by_bin(|_| blocks(&[10, 35, 60, 85], 4)),
    );
    add(
        "four jittering streams",
        Split { streams: 4 },
        raster_by_bin(|b| blocks(&[12 + b % 2, 37, 62 - b % 2, 87], 3)),
    );

    // divergence
    add(
        "spreading bump",
        Divergent,
        raster_by_bin(|b| span(45usize.saturating_sub(b), 55 + b)),
    );
    add(
        "saturated network",
        Divergent,
        raster_by_bin(|b| span(45usize.saturating_sub(2 * b), 55 + 2 * b)),
    );
    add(
        "late spreading bump",
        Divergent,
        raster_by_bin(|b| {
            let g = b.saturating_sub(15);
            span(45usize.saturating_sub(g), 55 + 2 * g)
        }),
    );
    add(
        "two streams spreading outward",
        SplitWithDivergence { streams: 2 },
        raster_by_bin(|b| {
            let mut v = span(36usize.saturating_sub(b), 40);
            v.extend(span(60, 64 + b));
            v
        }),
    );
    add(
        "three streams, outer two spreading",
        SplitWithDivergence { streams: 3 },
        raster_by_bin(|b| {
            let mut v = span(28usize.saturating_sub(b), 30);
            v.extend(span(48, 52));
            v.extend(span(70, 72 + b));
            v
        }),
    );

    // a single bump that keeps travelling
    add(
        "drifting bump",
        Unclassified,
        raster_by_bin(|b| span(20 + b, 26 + b)),
    );
    out
}
