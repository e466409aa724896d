//! Deterministic simulation and classification of a 1D bump-attractor
//! network of conductance-based leaky integrate-and-fire neurons.

// `!(x > 0.0)` is used deliberately so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod engine;
pub mod error;
pub mod io;
pub mod model;
pub mod plot;
pub mod stimulus;
pub mod sweep;
pub mod topology;

pub use analysis::{
    bin_raster, classify_pattern, cluster_bin, divergent_dominant, ignition_threshold,
    split_threshold, BinnedRaster, Classification, ClassifierParams, Cluster, PatternClass,
    StreamTrack, Threshold,
};
pub use config::CliConfigFile;
pub use engine::{run_simulation, Network, RunConfig, SimulationRecord, Spike, VoltageTrace};
pub use error::{Error, Result};
pub use io::{ClassificationReport, RasterMeta, RunManifest};
pub use model::{alpha_kernel, membrane_step, NeuronParameters, NeuronState, SynapseChannel};
pub use stimulus::{ScheduleSpec, StimulusConfig, StimulusProgram};
pub use sweep::{
    render_tables, run_sweep, run_sweep_with, Cell, CellOutcome, CellResult, PairSummary,
    SweepConfig, SweepReport, Table,
};
pub use topology::{build_bump_matrix, Boundary, ConnectivityMatrix, TopologySpec};
