//! Streaming speaker diarization back-end.
//!
//! Consumes a time-ordered stream of speaker-embedding vectors and emits one
//! never-retracted speaker label per segment, online. The moving parts:
//!
//! ```text
//! embeddings ──> clustering (AHC / checkpointed AHC)
//!                   │
//!                   ├──> speaker selection + re-clustering (naive / graph)
//!                   │
//!                   └──> label matching (co-occurrence + assignment)
//!                            │
//!                            └──> frozen output labels ──> RTTM turns
//! ```
//!
//! Hidden labels produced by clustering may change whenever a new segment
//! arrives; the matching stage aligns them with the already-emitted labels by
//! maximum-weight bipartite matching so the output stream stays consistent.
//! Checkpointed clustering bounds the number of atoms any step has to
//! consider, which keeps per-step cost independent of stream length.
//!
//! See the `examples/` directory for runnable walkthroughs of each part, and
//! the `diarstream` binary for the `run` / `score` / `synth` / `bench`
//! command-line surface.

pub mod clustering;
pub mod commands;
pub mod core;
mod error;
pub mod formats;
pub mod graph;
pub mod matching;
pub mod pipeline;
pub mod scoring;
pub mod synth;

pub use crate::core::{
    cosine_similarity, merge_clusters, Cluster, ClusterState, ClusteringMode, Config, Embedding,
    ReclusterMode,
};
pub use clustering::{ahc, chkpt_step, ChkptStep, MergeEvent, MergeTrace};
pub use error::{Error, Result};
pub use graph::{
    assign_nonspeakers_graph, assign_nonspeakers_naive, select_speakers, SpeakerGraph,
    SpeakerPartition,
};
pub use matching::{build_cooccurrence, hungarian, infer_label, CooccurrenceMatrix, Matching};
pub use pipeline::{
    run_baseline3, run_stream, turns_from_labels, Baseline3State, PipelineState, StepStats,
    StreamOutput, Turn,
};
pub use scoring::{score_der, Annotation, DerReport, SpeakerTurn};
