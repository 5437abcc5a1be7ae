//! End-to-end orchestration: synthetic networks, training-set
//! pre-solving, the brute-force grid oracle, the cold/warm benchmark
//! harness, and model-artifact persistence.

pub mod artifact;
pub mod bench;
pub mod netgen;
pub mod oracle;
pub mod training;

pub use artifact::ModelArtifact;
pub use bench::{run_benchmark, BenchConfig, BenchmarkReport, Method};
pub use oracle::{brute_force_oracle, OracleResult};
pub use training::{build_training_set, default_initial_linepack, train_artifact, PresolveConfig};
