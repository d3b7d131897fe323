use thiserror::Error;

/// Errors for state construction, channel application, sampling, and fitting.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {0} entries")]
    NotSquare(usize),

    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("state vector norm deviates from 1 by {0:.3e} (tolerance {1:.1e})")]
    NotNormalized(f64, f64),

    #[error("matrix is not Hermitian (max asymmetry {0:.3e}, tolerance {1:.1e})")]
    NotHermitian(f64, f64),

    #[error("trace is {0:.12}, expected 1 (tolerance {1:.1e})")]
    InvalidTrace(f64, f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("operator is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    QubitIndexOutOfRange { index: usize, num_qubits: usize },

    #[error("the set of kept qubits is empty")]
    EmptyKeepSet,

    #[error("qubit count {0} outside supported range 1..={1}")]
    QubitCountOutOfRange(usize, usize),

    #[error("probabilities invalid: {0}")]
    InvalidProbabilities(String),

    #[error("permutation {0:?} is not a bijection on 0..{1}")]
    InvalidPermutation(Vec<usize>, usize),

    #[error("parameter {name} = {value} violates {constraint}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("degenerate probabilities: {0}")]
    DegenerateProbabilities(String),

    #[error("preimage is empty: target radius {r_ts} < asymmetry {h}")]
    EmptyPreimage { r_ts: f64, h: f64 },

    #[error("target Bloch vector has norm {0:.12} > 1")]
    TargetOutsideBall(f64),

    #[error("Schmidt coefficients are degenerate (reduced states maximally mixed)")]
    DegenerateSchmidt,

    #[error("empty sample set")]
    EmptySamples,
}

pub type Result<T> = std::result::Result<T, Error>;
