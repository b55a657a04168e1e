use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Infeasible,
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {what}: {source}")]
    Parse {
        what: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("invalid {field}: {message}")]
    Invalid { field: String, message: String },

    #[error("dangling reference: synapse {synapse} references neuron {neuron}, model has {num_neurons} neurons")]
    DanglingReference {
        synapse: u32,
        neuron: u32,
        num_neurons: usize,
    },

    #[error("cycle detected through neuron {neuron}")]
    Cycle { neuron: u32 },

    #[error("weight level {level} of synapse {synapse} out of range [0, {max}]")]
    LevelOutOfRange { synapse: u32, level: i64, max: u8 },

    #[error("unknown synapse id {0}")]
    UnknownSynapse(u32),

    #[error("sample has {got} input counts, model has {expected} input neurons")]
    InputLengthMismatch { expected: usize, got: usize },

    #[error("coordinate ({i}, {j}) outside {n}x{n} crossbar")]
    OutOfRange { i: usize, j: usize, n: usize },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("fan-in overflow: neuron {neuron} has fan-in {fan_in}, crossbar accepts {limit}")]
    FanInOverflow {
        neuron: u32,
        fan_in: usize,
        limit: usize,
    },

    #[error("cluster {rows}x{cols} on {ports} ports exceeds exact-solver cap ({cap})")]
    ExactCapExceeded {
        rows: usize,
        cols: usize,
        ports: usize,
        cap: usize,
    },

    #[error("singular nodal system: {0}")]
    Singular(String),

    #[error("gap integration failed: {message} (v = {voltage} V, gamma0 = {gamma0}, beta = {beta}, g0 = {g0} nm, g_close = {g_close} nm)")]
    Integration {
        message: String,
        voltage: f64,
        gamma0: f64,
        beta: f64,
        g0: f64,
        g_close: f64,
    },
}

impl Error {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Infeasible(_) | Error::FanInOverflow { .. } => ErrorClass::Infeasible,
            Error::Singular(_) | Error::Integration { .. } => ErrorClass::Internal,
            _ => ErrorClass::Validation,
        }
    }

    /// Short machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Invalid { .. } => "invalid",
            Error::DanglingReference { .. } => "dangling_reference",
            Error::Cycle { .. } => "cycle",
            Error::LevelOutOfRange { .. } => "level_out_of_range",
            Error::UnknownSynapse(_) => "unknown_synapse",
            Error::InputLengthMismatch { .. } => "input_length_mismatch",
            Error::OutOfRange { .. } => "out_of_range",
            Error::Infeasible(_) => "infeasible",
            Error::FanInOverflow { .. } => "fan_in_overflow",
            Error::ExactCapExceeded { .. } => "exact_cap_exceeded",
            Error::Singular(_) => "singular",
            Error::Integration { .. } => "integration",
        }
    }

    /// Name of the offending field or entity, when there is one.
    pub fn field(&self) -> Option<String> {
        match self {
            Error::Invalid { field, .. } => Some(field.clone()),
            Error::DanglingReference { synapse, .. } | Error::LevelOutOfRange { synapse, .. } => {
                Some(format!("synapses[{synapse}]"))
            }
            Error::UnknownSynapse(id) => Some(format!("synapse {id}")),
            Error::Cycle { neuron } | Error::FanInOverflow { neuron, .. } => {
                Some(format!("neurons[{neuron}]"))
            }
            _ => None,
        }
    }
}
