//! Shared domain types: segment embeddings, clusters, resumable cluster
//! states, and the similarity / centroid arithmetic everything else builds on.
//!
//! All types here are plain values; operations are pure functions. Nothing in
//! this module owns shared mutable state, so values can be moved freely
//! between threads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A speaker embedding for one speech segment.
///
/// `segment_id` is assigned at ingestion and is strictly increasing in
/// arrival order. All embeddings of one stream share the same dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub segment_id: usize,
    pub vector: Vec<f64>,
    /// Segment onset in seconds.
    pub start: f64,
    /// Segment offset in seconds; always greater than `start`.
    pub end: f64,
}

impl Embedding {
    pub fn new(segment_id: usize, vector: Vec<f64>, start: f64, end: f64) -> Result<Self> {
        if !(end > start) {
            return Err(Error::invalid(format!(
                "segment {segment_id}: end ({end}) must be greater than start ({start})"
            )));
        }
        if vector.is_empty() {
            return Err(Error::invalid(format!("segment {segment_id}: empty embedding vector")));
        }
        if vector.iter().all(|x| *x == 0.0) {
            return Err(Error::invalid(format!("segment {segment_id}: zero-norm embedding vector")));
        }
        Ok(Embedding { segment_id, vector, start, end })
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity between two vectors, in `[-1, 1]`.
///
/// Symmetric and scale-invariant in either argument. Fails on zero-norm
/// vectors or mismatched dimensions.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::invalid("cosine similarity of zero-norm vector"));
    }
    Ok(dot(a, b) / (na * nb))
}

/// A cluster of segments: member ids, the exact mean of member embedding
/// vectors, and the accumulated speech duration.
///
/// `hidden_label` identifies the cluster within one clustering pass only;
/// it carries no meaning across passes (that is the whole label-matching
/// problem). The centroid is kept as the member-count-weighted mean, so it
/// equals the arithmetic mean of the raw member vectors regardless of the
/// merge order that produced the cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Sorted segment ids; never empty.
    pub members: Vec<usize>,
    pub centroid: Vec<f64>,
    /// Sum of member segment durations in seconds.
    pub duration: f64,
    pub hidden_label: usize,
}

impl Cluster {
    /// A single-segment cluster. Its hidden label is the segment id, which
    /// keeps labels unique within any pass that starts from singletons.
    pub fn singleton(e: &Embedding) -> Self {
        Cluster {
            members: vec![e.segment_id],
            centroid: e.vector.clone(),
            duration: e.duration(),
            hidden_label: e.segment_id,
        }
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn min_segment_id(&self) -> usize {
        // members are sorted
        self.members[0]
    }
}

/// Merge two clusters with disjoint member sets.
///
/// The merged centroid is the member-count-weighted mean, the duration is
/// additive, and the hidden label is inherited from the larger cluster
/// (tie: the cluster containing the smaller minimum segment id).
pub fn merge_clusters(c1: &Cluster, c2: &Cluster) -> Result<Cluster> {
    if c1.centroid.len() != c2.centroid.len() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            c1.centroid.len(),
            c2.centroid.len()
        )));
    }
    if c1.members.iter().any(|m| c2.members.binary_search(m).is_ok()) {
        return Err(Error::InvariantViolation(
            "merge_clusters: overlapping member sets".into(),
        ));
    }
    let (n1, n2) = (c1.size() as f64, c2.size() as f64);
    let centroid: Vec<f64> = c1
        .centroid
        .iter()
        .zip(&c2.centroid)
        .map(|(a, b)| (n1 * a + n2 * b) / (n1 + n2))
        .collect();
    let mut members = Vec::with_capacity(c1.members.len() + c2.members.len());
    members.extend_from_slice(&c1.members);
    members.extend_from_slice(&c2.members);
    members.sort_unstable();
    let hidden_label = if c1.size() != c2.size() {
        if c1.size() > c2.size() { c1.hidden_label } else { c2.hidden_label }
    } else if c1.min_segment_id() < c2.min_segment_id() {
        c1.hidden_label
    } else {
        c2.hidden_label
    };
    Ok(Cluster {
        members,
        centroid,
        duration: c1.duration + c2.duration,
        hidden_label,
    })
}

/// A complete partition of all seen segments into clusters. This is the
/// resumable state of checkpointed clustering.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClusterState {
    pub clusters: Vec<Cluster>,
}

impl ClusterState {
    pub fn from_singletons(embeddings: &[Embedding]) -> Self {
        ClusterState {
            clusters: embeddings.iter().map(Cluster::singleton).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Number of segment ids partitioned by this state.
    pub fn covered_segments(&self) -> usize {
        self.clusters.iter().map(Cluster::size).sum()
    }

    /// Hidden label per segment id, for segments `0..n`. Fails if the state
    /// is not a partition of exactly `0..n`.
    pub fn hidden_labels_by_segment(&self, n: usize) -> Result<Vec<usize>> {
        let mut labels = vec![None; n];
        for c in &self.clusters {
            for &m in &c.members {
                if m >= n {
                    return Err(Error::InvariantViolation(format!(
                        "segment {m} out of range (expected < {n})"
                    )));
                }
                if labels[m].replace(c.hidden_label).is_some() {
                    return Err(Error::InvariantViolation(format!(
                        "segment {m} appears in more than one cluster"
                    )));
                }
            }
        }
        labels
            .into_iter()
            .enumerate()
            .map(|(m, l)| {
                l.ok_or_else(|| {
                    Error::InvariantViolation(format!("segment {m} missing from partition"))
                })
            })
            .collect()
    }
}

/// Which clustering runs inside each pipeline step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ClusteringMode {
    /// Full agglomerative clustering over all segments, every step.
    Ahc,
    /// Checkpointed clustering: resume from a bounded checkpoint state.
    Chkpt,
}

/// Which re-clustering refines the clustering output before label matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReclusterMode {
    None,
    /// Whole non-speaker clusters merge into the nearest speaker centroid.
    Naive,
    /// Per-node reassignment by cluster likelihood on the embedding graph.
    Graph,
}

/// Tunable parameters for the whole pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    /// Stopping threshold for (chkpt-)AHC: merging stops once the best
    /// centroid cosine similarity falls below this.
    pub ahc_stop_threshold: f64,
    /// Edge threshold for the speaker embedding graph. Must be lower than
    /// `ahc_stop_threshold`.
    pub graph_threshold: f64,
    /// Maximum number of clusters persisted in a checkpoint.
    pub checkpoint_k: usize,
    /// Minimum accumulated duration (seconds) for a cluster to count as a
    /// speaker cluster.
    pub speaker_duration_threshold: f64,
    /// Centroid-similarity threshold for naive re-clustering.
    pub naive_recluster_threshold: f64,
    /// Forgiveness collar (seconds) for DER scoring.
    pub collar: f64,
    pub recluster_mode: ReclusterMode,
    pub clustering_mode: ClusteringMode,
    /// Assignment threshold for the greedy online baseline.
    pub baseline3_threshold: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            ahc_stop_threshold: 0.6,
            graph_threshold: 0.4,
            checkpoint_k: 50,
            speaker_duration_threshold: 6.0,
            naive_recluster_threshold: 0.45,
            collar: 0.25,
            recluster_mode: ReclusterMode::Graph,
            clustering_mode: ClusteringMode::Chkpt,
            baseline3_threshold: 0.6,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        if !(self.ahc_stop_threshold > -1.0 && self.ahc_stop_threshold < 1.0) {
            return Err(Error::invalid(format!(
                "ahc_stop_threshold must lie in (-1, 1), got {}",
                self.ahc_stop_threshold
            )));
        }
        if !(self.graph_threshold > -1.0 && self.graph_threshold < 1.0) {
            return Err(Error::invalid(format!(
                "graph_threshold must lie in (-1, 1), got {}",
                self.graph_threshold
            )));
        }
        if self.graph_threshold >= self.ahc_stop_threshold {
            return Err(Error::invalid(format!(
                "graph_threshold ({}) must be lower than ahc_stop_threshold ({})",
                self.graph_threshold, self.ahc_stop_threshold
            )));
        }
        if self.checkpoint_k < 2 {
            return Err(Error::invalid(format!(
                "checkpoint_k must be at least 2, got {}",
                self.checkpoint_k
            )));
        }
        if self.collar < 0.0 {
            return Err(Error::invalid(format!("collar must be non-negative, got {}", self.collar)));
        }
        Ok(())
    }

    /// Apply one `key=value` override, as read from a config file.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::invalid(format!("config key {key}: invalid {what} '{value}'"));
        match key {
            "ahc_stop_threshold" => self.ahc_stop_threshold = value.parse().map_err(|_| bad("number"))?,
            "graph_threshold" => self.graph_threshold = value.parse().map_err(|_| bad("number"))?,
            "checkpoint_k" => self.checkpoint_k = value.parse().map_err(|_| bad("integer"))?,
            "speaker_duration_threshold" => {
                self.speaker_duration_threshold = value.parse().map_err(|_| bad("number"))?
            }
            "naive_recluster_threshold" => {
                self.naive_recluster_threshold = value.parse().map_err(|_| bad("number"))?
            }
            "collar" => self.collar = value.parse().map_err(|_| bad("number"))?,
            "baseline3_threshold" => self.baseline3_threshold = value.parse().map_err(|_| bad("number"))?,
            "recluster_mode" => {
                self.recluster_mode = match value {
                    "none" => ReclusterMode::None,
                    "naive" => ReclusterMode::Naive,
                    "graph" => ReclusterMode::Graph,
                    _ => return Err(bad("mode")),
                }
            }
            "clustering_mode" => {
                self.clustering_mode = match value {
                    "ahc" => ClusteringMode::Ahc,
                    "chkpt" => ClusteringMode::Chkpt,
                    _ => return Err(bad("mode")),
                }
            }
            _ => return Err(Error::invalid(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn vec_strategy(d: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-100.0f64..100.0, d..=d)
            .prop_filter("non-zero", |v| v.iter().any(|x| x.abs() > 1e-6))
    }

    proptest! {
        #[test]
        fn cosine_symmetric(a in vec_strategy(5), b in vec_strategy(5)) {
            let ab = cosine_similarity(&a, &b).unwrap();
            let ba = cosine_similarity(&b, &a).unwrap();
            prop_assert_eq!(ab, ba);
        }

        #[test]
        fn cosine_scale_invariant(a in vec_strategy(5), b in vec_strategy(5), lambda in 0.001f64..1000.0) {
            let s1 = cosine_similarity(&a, &b).unwrap();
            let scaled: Vec<f64> = a.iter().map(|x| x * lambda).collect();
            let s2 = cosine_similarity(&scaled, &b).unwrap();
            prop_assert!((s1 - s2).abs() < 1e-9, "{} vs {}", s1, s2);
        }

        #[test]
        fn merge_commutes(a in vec_strategy(4), b in vec_strategy(4)) {
            let e1 = Embedding::new(0, a, 0.0, 1.0).unwrap();
            let e2 = Embedding::new(1, b, 1.0, 2.5).unwrap();
            let c1 = Cluster::singleton(&e1);
            let c2 = Cluster::singleton(&e2);
            let m12 = merge_clusters(&c1, &c2).unwrap();
            let m21 = merge_clusters(&c2, &c1).unwrap();
            prop_assert_eq!(m12.members, m21.members);
            prop_assert_eq!(m12.duration, m21.duration);
            for (x, y) in m12.centroid.iter().zip(&m21.centroid) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn merged_centroid_is_mean_of_raws(
            vecs in proptest::collection::vec(vec_strategy(3), 2..8),
            split in 1usize..7,
        ) {
            let split = split.min(vecs.len() - 1);
            let embs: Vec<Embedding> = vecs.iter().enumerate()
                .map(|(i, v)| Embedding::new(i, v.clone(), i as f64, i as f64 + 1.0).unwrap())
                .collect();
            let fold = |es: &[Embedding]| -> Cluster {
                let mut c = Cluster::singleton(&es[0]);
                for e in &es[1..] {
                    c = merge_clusters(&c, &Cluster::singleton(e)).unwrap();
                }
                c
            };
            let merged = merge_clusters(&fold(&embs[..split]), &fold(&embs[split..])).unwrap();
            for d in 0..3 {
                let mean = vecs.iter().map(|v| v[d]).sum::<f64>() / vecs.len() as f64;
                prop_assert!((merged.centroid[d] - mean).abs() < 1e-6);
            }
        }
    }
}
