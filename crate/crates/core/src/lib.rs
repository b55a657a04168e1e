//! Read-disturb drift modeling for OxRRAM crossbars running spiking neural
//! networks, and drift-aware placement of synapses onto crossbar cells.
//!
//! The pipeline:
//!
//! 1. [`profile`]: per-synapse spike counts and criticality of an
//!    [`SnnModel`] on a [`Dataset`].
//! 2. [`circuit`]: stress voltage of every crossbar cell (series-path or
//!    full nodal analysis).
//! 3. [`disturb`]: transition time of a cell under that voltage, and
//!    inference lifetime given its spike rate.
//! 4. [`partition`]: crossbar-sized clusters of the network.
//! 5. [`mapper`]: placement of each cluster maximizing the minimum
//!    lifetime, which sets the reprogramming interval (tRPI).
//! 6. [`simulate`]: inference streams with drift, reprogramming and
//!    overhead accounting.

pub mod circuit;
pub mod config;
pub mod disturb;
pub mod error;
pub mod io;
pub mod mapper;
pub mod model;
pub mod partition;
pub mod profile;
pub mod simulate;

pub use circuit::{CircuitMode, CrossbarConfig, StressField, TechNodeParams};
pub use config::{Environment, RunConfig};
pub use disturb::DisturbParams;
pub use error::{Error, ErrorClass, Result};
pub use mapper::{Mapping, MappingSolution, MapMode, TransitionTable};
pub use model::{Dataset, SnnModel};
pub use partition::Clustering;
pub use profile::{CriticalityReport, SpikeProfile};
pub use simulate::{ReprogramPolicy, SimulationReport};
