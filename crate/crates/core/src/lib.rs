//! Vertex p-center instances, an exact solver for ground-truth labels, a
//! residual gated graph convolutional network that predicts which vertices
//! open a facility, and decoders that turn its output into solutions.

pub mod adam;
pub mod bitset;
pub mod dataset;
pub mod decoder;
pub mod error;
pub mod exact_solver;
pub mod gcn;
pub mod instance;
mod linalg;
pub mod loss;
pub mod model;
pub mod report;
pub mod training;

pub use adam::{adam_step, AdamState};
pub use dataset::{build_dataset, read_instances, read_jsonl, write_jsonl, LabeledSample};
pub use decoder::{
    baseline_decode, greedy_decode, naive_decode, optimality_gap, DecodeResult, Gap, Strategy,
};
pub use error::{Error, Result};
pub use exact_solver::{
    candidate_radii, feasible_at, solve_exact, CoverageSystem, OptimumCertificate,
};
pub use gcn::{backward, forward, predict, ForwardTrace};
pub use instance::{build_knn, generate_instance, Instance, KnnGraph, Solution};
pub use loss::{constant_half_loss, loss, BatchLoss};
pub use model::{
    init_params, read_checkpoint, write_checkpoint, Gradients, ModelConfig, ModelParams, Setting,
};
pub use report::{evaluate, evaluate_with, GapReport, GapRow, GapSummary};
pub use training::{train, LossHistory, LossRecord, TrainConfig};
