//! Online orchestration: one never-retracted output label per incoming
//! segment.
//!
//! Each step clusters everything seen so far (full AHC or resumed from the
//! checkpoint), optionally refines the result by re-clustering, rebuilds the
//! co-occurrence between frozen output labels and the fresh hidden labels,
//! and lets the matching stage decide the new segment's label. The emitted
//! ledger is append-only by construction; re-clustering runs on a working
//! copy and never feeds back into the checkpoint.

use std::time::Instant;

use crate::clustering::{chkpt_step, MergeEngine, SegmentGram};
use crate::core::{
    cosine_similarity, ClusterState, ClusteringMode, Config, Embedding, ReclusterMode,
};
use crate::error::{Error, Result};
use crate::graph::{assign_nonspeakers_graph, assign_nonspeakers_naive, select_speakers, SpeakerGraph};
use crate::matching::{build_cooccurrence, hungarian, infer_label};

/// Per-step instrumentation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    /// Wall-clock duration of the step in seconds.
    pub elapsed: f64,
    /// Candidate-pair similarity evaluations inside the clustering stage.
    pub pair_evaluations: u64,
    /// Merges performed by the clustering stage.
    pub merges: usize,
}

/// Streaming diarization state for one input stream.
pub struct PipelineState {
    config: Config,
    checkpoint: ClusterState,
    graph: SpeakerGraph,
    embeddings: Vec<Embedding>,
    gram: SegmentGram,
    engine: MergeEngine,
    ledger: Vec<u32>,
    next_output_label: u32,
    stats: Vec<StepStats>,
    dim: Option<usize>,
}

impl PipelineState {
    pub fn new(config: Config) -> Result<Self> {
        config.validate()?;
        let graph = SpeakerGraph::new(config.graph_threshold);
        Ok(PipelineState {
            config,
            checkpoint: ClusterState::default(),
            graph,
            embeddings: Vec::new(),
            gram: SegmentGram::new(),
            engine: MergeEngine::new(),
            ledger: Vec::new(),
            next_output_label: 1,
            stats: Vec::new(),
            dim: None,
        })
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn step_count(&self) -> usize {
        self.ledger.len()
    }

    /// Frozen output labels, one per processed segment.
    pub fn labels(&self) -> &[u32] {
        &self.ledger
    }

    pub fn stats(&self) -> &[StepStats] {
        &self.stats
    }

    /// The clustering state the next step resumes from (pre-re-clustering).
    pub fn checkpoint(&self) -> &ClusterState {
        &self.checkpoint
    }

    /// The speaker embedding graph; populated only under graph re-clustering.
    pub fn graph(&self) -> &SpeakerGraph {
        &self.graph
    }

    /// Process one segment and emit its output label.
    pub fn step(&mut self, e: Embedding) -> Result<u32> {
        let n = self.ledger.len();
        if e.segment_id != n {
            return Err(Error::invalid(format!(
                "out-of-order segment: expected id {n}, got {}",
                e.segment_id
            )));
        }
        match self.dim {
            None => self.dim = Some(e.dim()),
            Some(d) if d != e.dim() => {
                return Err(Error::invalid(format!(
                    "dimension drift at segment {}: stream is {d}-dimensional, got {}",
                    e.segment_id,
                    e.dim()
                )))
            }
            _ => {}
        }

        let t0 = Instant::now();
        // the graph costs time to maintain, so it only exists when the
        // re-clustering stage actually consumes it
        if self.config.recluster_mode == ReclusterMode::Graph {
            self.graph.add_node(e.clone())?;
        }
        self.embeddings.push(e);

        let (result, pair_evaluations, merges) = match self.config.clustering_mode {
            ClusteringMode::Chkpt => {
                let new = self.embeddings.last().expect("just pushed");
                let out = chkpt_step(
                    &self.checkpoint,
                    new,
                    self.config.ahc_stop_threshold,
                    self.config.checkpoint_k,
                )?;
                self.checkpoint = out.next_checkpoint;
                (out.result, out.trace.pair_evaluations, out.trace.merges.len())
            }
            ClusteringMode::Ahc => {
                self.gram.push(&self.embeddings);
                self.engine
                    .seed_singletons_from_gram(&self.embeddings, &self.gram);
                let run = self.engine.execute(self.config.ahc_stop_threshold, None);
                self.checkpoint = run.result.clone();
                (run.result, run.trace.pair_evaluations, run.trace.merges.len())
            }
        };

        let working = match self.config.recluster_mode {
            ReclusterMode::None => result,
            ReclusterMode::Naive => {
                let part = select_speakers(&result, self.config.speaker_duration_threshold)?;
                assign_nonspeakers_naive(&part, self.config.naive_recluster_threshold)?
            }
            ReclusterMode::Graph => {
                let part = select_speakers(&result, self.config.speaker_duration_threshold)?;
                assign_nonspeakers_graph(&self.graph, &part)?
            }
        };

        // partition safety is checked here on every step
        let hidden = working.hidden_labels_by_segment(n + 1)?;
        let cooc = build_cooccurrence(&self.ledger, &hidden)?;
        let matching = hungarian(&cooc);
        let label = infer_label(&matching, hidden[n], self.next_output_label);
        if label == self.next_output_label {
            self.next_output_label += 1;
        }
        self.ledger.push(label);
        self.stats.push(StepStats {
            elapsed: t0.elapsed().as_secs_f64(),
            pair_evaluations,
            merges,
        });
        Ok(label)
    }
}

/// The greedy online baseline: assign each segment to the most similar
/// running centroid, or start a new cluster below the threshold. Labels are
/// cluster indices, so they are frozen by construction.
pub struct Baseline3State {
    threshold: f64,
    centroids: Vec<Vec<f64>>,
    counts: Vec<usize>,
    durations: Vec<f64>,
    ledger: Vec<u32>,
    stats: Vec<StepStats>,
    dim: Option<usize>,
}

impl Baseline3State {
    pub fn new(threshold: f64) -> Self {
        Baseline3State {
            threshold,
            centroids: Vec::new(),
            counts: Vec::new(),
            durations: Vec::new(),
            ledger: Vec::new(),
            stats: Vec::new(),
            dim: None,
        }
    }

    pub fn labels(&self) -> &[u32] {
        &self.ledger
    }

    pub fn stats(&self) -> &[StepStats] {
        &self.stats
    }

    pub fn cluster_count(&self) -> usize {
        self.centroids.len()
    }

    pub fn centroid(&self, idx: usize) -> &[f64] {
        &self.centroids[idx]
    }

    pub fn step(&mut self, e: &Embedding) -> Result<u32> {
        match self.dim {
            None => self.dim = Some(e.dim()),
            Some(d) if d != e.dim() => {
                return Err(Error::invalid(format!(
                    "dimension drift at segment {}: stream is {d}-dimensional, got {}",
                    e.segment_id,
                    e.dim()
                )))
            }
            _ => {}
        }
        let t0 = Instant::now();
        let mut best: Option<(f64, usize)> = None;
        for (i, c) in self.centroids.iter().enumerate() {
            let sim = cosine_similarity(&e.vector, c)?;
            if best.map_or(true, |(bs, _)| sim > bs) {
                best = Some((sim, i));
            }
        }
        let evals = self.centroids.len() as u64;
        let label = match best {
            Some((sim, i)) if sim >= self.threshold => {
                let n = self.counts[i] as f64;
                for (c, x) in self.centroids[i].iter_mut().zip(&e.vector) {
                    *c = (*c * n + x) / (n + 1.0);
                }
                self.counts[i] += 1;
                self.durations[i] += e.duration();
                (i + 1) as u32
            }
            _ => {
                self.centroids.push(e.vector.clone());
                self.counts.push(1);
                self.durations.push(e.duration());
                self.centroids.len() as u32
            }
        };
        self.ledger.push(label);
        self.stats.push(StepStats {
            elapsed: t0.elapsed().as_secs_f64(),
            pair_evaluations: evals,
            merges: 0,
        });
        Ok(label)
    }
}

/// Labels and timing from a whole-stream run.
#[derive(Debug, Clone)]
pub struct StreamOutput {
    pub labels: Vec<u32>,
    pub steps: Vec<StepStats>,
}

impl StreamOutput {
    pub fn total_secs(&self) -> f64 {
        self.steps.iter().map(|s| s.elapsed).sum()
    }

    pub fn mean_step_secs(&self) -> f64 {
        if self.steps.is_empty() {
            0.0
        } else {
            self.total_secs() / self.steps.len() as f64
        }
    }

    fn decile(&self) -> usize {
        (self.steps.len() / 10).max(1).min(self.steps.len())
    }

    /// Mean step time over the first tenth of the stream.
    pub fn first_decile_mean_secs(&self) -> f64 {
        if self.steps.is_empty() {
            return 0.0;
        }
        let d = self.decile();
        self.steps[..d].iter().map(|s| s.elapsed).sum::<f64>() / d as f64
    }

    /// Mean step time over the last tenth of the stream.
    pub fn last_decile_mean_secs(&self) -> f64 {
        if self.steps.is_empty() {
            return 0.0;
        }
        let d = self.decile();
        self.steps[self.steps.len() - d..]
            .iter()
            .map(|s| s.elapsed)
            .sum::<f64>()
            / d as f64
    }
}

fn check_order(segments: &[Embedding]) -> Result<()> {
    for (i, e) in segments.iter().enumerate() {
        if e.segment_id != i {
            return Err(Error::invalid(format!(
                "segments must be ordered by id starting at 0: position {i} has id {}",
                e.segment_id
            )));
        }
    }
    Ok(())
}

/// Fold the full pipeline over a time-ordered stream.
pub fn run_stream(segments: &[Embedding], config: &Config) -> Result<StreamOutput> {
    check_order(segments)?;
    let mut state = PipelineState::new(config.clone())?;
    for e in segments {
        state.step(e.clone())?;
    }
    Ok(StreamOutput { labels: state.ledger, steps: state.stats })
}

/// Fold the greedy online baseline over a stream.
pub fn run_baseline3(segments: &[Embedding], config: &Config) -> Result<StreamOutput> {
    check_order(segments)?;
    let mut state = Baseline3State::new(config.baseline3_threshold);
    for e in segments {
        state.step(e)?;
    }
    Ok(StreamOutput { labels: state.ledger, steps: state.stats })
}

/// A labeled output turn.
#[derive(Debug, Clone, PartialEq)]
pub struct Turn {
    pub label: u32,
    pub start: f64,
    pub end: f64,
}

/// Merge adjacent same-label segments into turns. Segments whose spans touch
/// or overlap fuse when they carry the same label; a label change always
/// starts a new turn, so turns of different labels may overlap.
pub fn turns_from_labels(segments: &[Embedding], labels: &[u32]) -> Vec<Turn> {
    let mut turns: Vec<Turn> = Vec::new();
    for (e, &label) in segments.iter().zip(labels) {
        match turns.last_mut() {
            Some(t) if t.label == label && e.start <= t.end => t.end = t.end.max(e.end),
            _ => turns.push(Turn { label, start: e.start, end: e.end }),
        }
    }
    turns
}
