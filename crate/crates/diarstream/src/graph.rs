//! Speaker-embedding graph and re-clustering.
//!
//! Every segment becomes a node; an edge carries the cosine similarity of
//! the two embeddings whenever it exceeds the graph threshold, which is set
//! below the clustering stop threshold so that related-but-unmerged nodes
//! stay connected. Non-speaker clusters (too short to pass the duration
//! criterion) are then re-assigned, either per node by cluster likelihood
//! over the graph, or per cluster by nearest speaker centroid.

use std::collections::BTreeMap;
use std::io::{self, Write};

use crate::core::{cosine_similarity, Cluster, ClusterState, Embedding};
use crate::error::{Error, Result};

/// Weighted undirected graph over segment embeddings with thresholded
/// cosine edges.
#[derive(Debug, Clone)]
pub struct SpeakerGraph {
    threshold: f64,
    pruning: bool,
    nodes: Vec<Embedding>,
    index_of: BTreeMap<usize, usize>,
    /// Per node: neighbor segment id -> edge weight.
    adjacency: Vec<BTreeMap<usize, f64>>,
}

impl SpeakerGraph {
    /// Graph with edge threshold `s` and neighbor pruning enabled.
    pub fn new(threshold: f64) -> Self {
        Self::with_pruning(threshold, true)
    }

    /// `pruning: false` gives the plain thresholded graph; useful for
    /// oracle comparisons against a dense similarity matrix.
    pub fn with_pruning(threshold: f64, pruning: bool) -> Self {
        SpeakerGraph {
            threshold,
            pruning,
            nodes: Vec::new(),
            index_of: BTreeMap::new(),
            adjacency: Vec::new(),
        }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(BTreeMap::len).sum::<usize>() / 2
    }

    pub fn contains(&self, segment_id: usize) -> bool {
        self.index_of.contains_key(&segment_id)
    }

    pub fn embedding(&self, segment_id: usize) -> Option<&Embedding> {
        self.index_of.get(&segment_id).map(|&i| &self.nodes[i])
    }

    pub fn edge_weight(&self, a: usize, b: usize) -> Option<f64> {
        let &i = self.index_of.get(&a)?;
        self.adjacency[i].get(&b).copied()
    }

    /// Number of graph neighbors of `segment_id`.
    pub fn degree(&self, segment_id: usize) -> usize {
        self.index_of
            .get(&segment_id)
            .map_or(0, |&i| self.adjacency[i].len())
    }

    /// Add one segment node, connecting it to the existing nodes.
    ///
    /// Candidates are visited in descending similarity to the new embedding;
    /// a candidate above the threshold gains an edge, while a candidate at
    /// or below it is dropped together with its current graph neighbors
    /// (when pruning is on). Since every above-threshold node is visited
    /// before the first below-threshold one, pruning never changes the edge
    /// set under this visit order; it exists to keep the candidate
    /// bookkeeping faithful to the maintenance rule.
    pub fn add_node(&mut self, e: Embedding) -> Result<()> {
        if self.contains(e.segment_id) {
            return Err(Error::invalid(format!(
                "segment {} is already a graph node",
                e.segment_id
            )));
        }
        let mut order: Vec<(f64, usize)> = Vec::with_capacity(self.nodes.len());
        for (idx, node) in self.nodes.iter().enumerate() {
            order.push((cosine_similarity(&e.vector, &node.vector)?, idx));
        }
        // descending similarity, ties by insertion order
        order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));

        let mut candidate = vec![true; self.nodes.len()];
        let mut new_edges: Vec<(usize, f64)> = Vec::new();
        for &(sim, idx) in &order {
            if !candidate[idx] {
                continue;
            }
            candidate[idx] = false;
            if sim > self.threshold {
                new_edges.push((idx, sim));
            } else if self.pruning {
                let neighbor_ids: Vec<usize> = self.adjacency[idx].keys().copied().collect();
                for nid in neighbor_ids {
                    candidate[self.index_of[&nid]] = false;
                }
            }
        }

        let new_idx = self.nodes.len();
        let new_id = e.segment_id;
        self.index_of.insert(new_id, new_idx);
        self.nodes.push(e);
        self.adjacency.push(BTreeMap::new());
        for (idx, w) in new_edges {
            let other_id = self.nodes[idx].segment_id;
            self.adjacency[new_idx].insert(other_id, w);
            self.adjacency[idx].insert(new_id, w);
        }
        Ok(())
    }

    /// Mean edge weight from node `segment_id` into the members of `cluster`;
    /// absent edges contribute zero.
    pub fn cluster_likelihood(&self, segment_id: usize, cluster: &Cluster) -> Result<f64> {
        let &idx = self.index_of.get(&segment_id).ok_or_else(|| {
            Error::invalid(format!("segment {segment_id} is not a graph node"))
        })?;
        if cluster.members.is_empty() {
            return Err(Error::invalid("cluster likelihood of empty cluster"));
        }
        let adj = &self.adjacency[idx];
        let sum: f64 = cluster
            .members
            .iter()
            .map(|m| adj.get(m).copied().unwrap_or(0.0))
            .sum();
        Ok(sum / cluster.members.len() as f64)
    }

    /// Debug dump, one `i j weight` line per edge with `i < j`.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut edges: Vec<(usize, usize, f64)> = Vec::with_capacity(self.edge_count());
        for (idx, adj) in self.adjacency.iter().enumerate() {
            let id = self.nodes[idx].segment_id;
            for (&other, &weight) in adj {
                if id < other {
                    edges.push((id, other, weight));
                }
            }
        }
        edges.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for (i, j, weight) in edges {
            writeln!(w, "{i} {j} {weight}")?;
        }
        Ok(())
    }

    fn rebuild_cluster(&self, members: Vec<usize>, hidden_label: usize) -> Result<Cluster> {
        let mut members = members;
        members.sort_unstable();
        let dim = self
            .embedding(members[0])
            .ok_or_else(|| Error::invalid(format!("segment {} is not a graph node", members[0])))?
            .dim();
        let mut centroid = vec![0.0; dim];
        let mut duration = 0.0;
        for &m in &members {
            let e = self
                .embedding(m)
                .ok_or_else(|| Error::invalid(format!("segment {m} is not a graph node")))?;
            for (c, x) in centroid.iter_mut().zip(&e.vector) {
                *c += x;
            }
            duration += e.duration();
        }
        let n = members.len() as f64;
        centroid.iter_mut().for_each(|c| *c /= n);
        Ok(Cluster { members, centroid, duration, hidden_label })
    }
}

/// Clusters split by the duration criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerPartition {
    pub speaker_clusters: Vec<Cluster>,
    pub nonspeaker_clusters: Vec<Cluster>,
}

impl SpeakerPartition {
    pub fn into_state(self) -> ClusterState {
        let mut clusters = self.speaker_clusters;
        clusters.extend(self.nonspeaker_clusters);
        ClusterState { clusters }
    }
}

/// Split clusters into speaker and non-speaker clusters by accumulated
/// duration. When nothing reaches `dmin` yet (the early-stream case), the
/// single longest-duration cluster is promoted (ties: smaller minimum
/// segment id), so there is always at least one speaker cluster.
pub fn select_speakers(state: &ClusterState, dmin: f64) -> Result<SpeakerPartition> {
    if state.is_empty() {
        return Err(Error::invalid("select_speakers on empty state"));
    }
    let qualifies: Vec<bool> = state.clusters.iter().map(|c| c.duration >= dmin).collect();
    let chosen: Vec<bool> = if qualifies.iter().any(|&q| q) {
        qualifies
    } else {
        let mut best = 0;
        for (i, c) in state.clusters.iter().enumerate().skip(1) {
            let b = &state.clusters[best];
            if c.duration > b.duration
                || (c.duration == b.duration && c.min_segment_id() < b.min_segment_id())
            {
                best = i;
            }
        }
        (0..state.clusters.len()).map(|i| i == best).collect()
    };
    let mut part = SpeakerPartition {
        speaker_clusters: Vec::new(),
        nonspeaker_clusters: Vec::new(),
    };
    for (c, is_speaker) in state.clusters.iter().zip(chosen) {
        if is_speaker {
            part.speaker_clusters.push(c.clone());
        } else {
            part.nonspeaker_clusters.push(c.clone());
        }
    }
    Ok(part)
}

/// Graph-based re-clustering: each node of each non-speaker cluster moves to
/// the speaker cluster with the highest cluster likelihood. Nodes with no
/// graph support toward any speaker cluster stay put, and their (reduced)
/// non-speaker cluster is promoted to a new speaker cluster. Speaker-cluster
/// centroids and durations are recomputed from raw embeddings afterwards.
pub fn assign_nonspeakers_graph(
    graph: &SpeakerGraph,
    part: &SpeakerPartition,
) -> Result<ClusterState> {
    if part.speaker_clusters.is_empty() {
        return Err(Error::invalid("graph re-clustering requires a speaker cluster"));
    }
    let mut additions: Vec<Vec<usize>> = vec![Vec::new(); part.speaker_clusters.len()];
    let mut promoted: Vec<(Vec<usize>, usize)> = Vec::new();
    for ns in &part.nonspeaker_clusters {
        let mut stay = Vec::new();
        for &node in &ns.members {
            let mut best: Option<(f64, usize)> = None;
            for (j, sp) in part.speaker_clusters.iter().enumerate() {
                let l = graph.cluster_likelihood(node, sp)?;
                let replace = match best {
                    None => true,
                    Some((bl, bj)) => {
                        l > bl
                            || (l == bl
                                && sp.min_segment_id()
                                    < part.speaker_clusters[bj].min_segment_id())
                    }
                };
                if replace {
                    best = Some((l, j));
                }
            }
            match best {
                Some((l, j)) if l > 0.0 => additions[j].push(node),
                _ => stay.push(node),
            }
        }
        if !stay.is_empty() {
            promoted.push((stay, ns.hidden_label));
        }
    }
    let mut clusters = Vec::with_capacity(part.speaker_clusters.len() + promoted.len());
    for (sp, extra) in part.speaker_clusters.iter().zip(additions) {
        let mut members = sp.members.clone();
        members.extend(extra);
        clusters.push(graph.rebuild_cluster(members, sp.hidden_label)?);
    }
    for (members, label) in promoted {
        clusters.push(graph.rebuild_cluster(members, label)?);
    }
    Ok(ClusterState { clusters })
}

/// Naive re-clustering: each non-speaker cluster merges wholesale into the
/// speaker cluster whose centroid it is most similar to, provided that
/// similarity clears `t`; otherwise it is promoted unchanged.
pub fn assign_nonspeakers_naive(part: &SpeakerPartition, t: f64) -> Result<ClusterState> {
    if part.speaker_clusters.is_empty() {
        return Err(Error::invalid("naive re-clustering requires a speaker cluster"));
    }
    // accumulate (sum vector, size, duration, members) per speaker cluster
    struct Acc {
        sum: Vec<f64>,
        size: usize,
        duration: f64,
        members: Vec<usize>,
        label: usize,
    }
    let mut accs: Vec<Acc> = part
        .speaker_clusters
        .iter()
        .map(|c| Acc {
            sum: c.centroid.iter().map(|x| x * c.size() as f64).collect(),
            size: c.size(),
            duration: c.duration,
            members: c.members.clone(),
            label: c.hidden_label,
        })
        .collect();
    let mut promoted = Vec::new();
    for ns in &part.nonspeaker_clusters {
        let mut best: Option<(f64, usize)> = None;
        for (j, sp) in part.speaker_clusters.iter().enumerate() {
            let sim = cosine_similarity(&ns.centroid, &sp.centroid)?;
            let replace = match best {
                None => true,
                Some((bs, bj)) => {
                    sim > bs
                        || (sim == bs
                            && sp.min_segment_id() < part.speaker_clusters[bj].min_segment_id())
                }
            };
            if replace {
                best = Some((sim, j));
            }
        }
        match best {
            Some((sim, j)) if sim > t => {
                let acc = &mut accs[j];
                for (s, x) in acc.sum.iter_mut().zip(&ns.centroid) {
                    *s += x * ns.size() as f64;
                }
                acc.size += ns.size();
                acc.duration += ns.duration;
                acc.members.extend_from_slice(&ns.members);
            }
            _ => promoted.push(ns.clone()),
        }
    }
    let mut clusters: Vec<Cluster> = accs
        .into_iter()
        .map(|mut acc| {
            acc.members.sort_unstable();
            let n = acc.size as f64;
            Cluster {
                members: acc.members,
                centroid: acc.sum.into_iter().map(|x| x / n).collect(),
                duration: acc.duration,
                hidden_label: acc.label,
            }
        })
        .collect();
    clusters.extend(promoted);
    Ok(ClusterState { clusters })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn emb(id: usize, v: &[f64]) -> Embedding {
        Embedding::new(id, v.to_vec(), 0.5 * id as f64, 0.5 * id as f64 + 1.0).unwrap()
    }

    fn emb_at_angle(id: usize, deg: f64) -> Embedding {
        let r = deg.to_radians();
        emb(id, &[r.cos(), r.sin()])
    }

    fn cluster(members: &[usize], centroid: &[f64], duration: f64, label: usize) -> Cluster {
        let mut members = members.to_vec();
        members.sort_unstable();
        Cluster { members, centroid: centroid.to_vec(), duration, hidden_label: label }
    }

    #[test]
    fn first_node_has_no_edges() {
        let mut g = SpeakerGraph::new(0.4);
        g.add_node(emb(0, &[1.0, 0.0])).unwrap();
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.edge_count(), 0);
        assert!(g.add_node(emb(0, &[1.0, 0.0])).is_err());
    }

    #[test]
    fn descending_visit_connects_above_threshold_despite_pruning() {
        // nodes 0 and 1 share an edge; the new node is at 0.2 to node 0 and
        // 0.9 to node 1. Node 1 is visited first (higher similarity) and
        // gains an edge before node 0 triggers pruning.
        let a0 = 0.2f64.acos().to_degrees();
        let a1 = 0.9f64.acos().to_degrees();
        let mut g = SpeakerGraph::new(0.4);
        g.add_node(emb_at_angle(0, a0)).unwrap();
        g.add_node(emb_at_angle(1, a1)).unwrap();
        assert_eq!(g.edge_count(), 1, "setup: nodes 0 and 1 connected");
        g.add_node(emb_at_angle(2, 0.0)).unwrap();
        assert!(g.edge_weight(2, 0).is_none());
        let w = g.edge_weight(2, 1).unwrap();
        assert!((w - 0.9).abs() < 1e-12);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn disconnected_candidates_both_gain_edges() {
        // two mutually disconnected nodes at 0.5 and 0.45 to the new one
        let mut g = SpeakerGraph::new(0.4);
        g.add_node(emb_at_angle(0, 0.5f64.acos().to_degrees())).unwrap();
        g.add_node(emb_at_angle(1, -(0.45f64.acos().to_degrees()))).unwrap();
        assert_eq!(g.edge_count(), 0);
        g.add_node(emb_at_angle(2, 0.0)).unwrap();
        assert!((g.edge_weight(2, 0).unwrap() - 0.5).abs() < 1e-12);
        assert!((g.edge_weight(2, 1).unwrap() - 0.45).abs() < 1e-12);
    }

    #[test]
    fn pruned_graph_equals_thresholded_graph() {
        // with descending visit order, pruning must not change the edge set
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &s in &[0.3, 0.6] {
            let embs: Vec<Embedding> = (0..60)
                .map(|i| {
                    let v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0) + 0.01).collect();
                    emb(i, &v)
                })
                .collect();
            let mut pruned = SpeakerGraph::new(s);
            let mut plain = SpeakerGraph::with_pruning(s, false);
            for e in &embs {
                pruned.add_node(e.clone()).unwrap();
                plain.add_node(e.clone()).unwrap();
            }
            assert_eq!(pruned.edge_count(), plain.edge_count());
            for i in 0..embs.len() {
                for j in 0..i {
                    assert_eq!(pruned.edge_weight(i, j), plain.edge_weight(i, j));
                }
            }
        }
    }

    #[test]
    fn unpruned_edges_match_dense_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = 0.3;
        let embs: Vec<Embedding> = (0..80)
            .map(|i| {
                let v: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0) + 0.01).collect();
                emb(i, &v)
            })
            .collect();
        let mut g = SpeakerGraph::with_pruning(s, false);
        for e in &embs {
            g.add_node(e.clone()).unwrap();
        }
        for i in 0..embs.len() {
            for j in 0..i {
                let sim = cosine_similarity(&embs[i].vector, &embs[j].vector).unwrap();
                match g.edge_weight(i, j) {
                    Some(w) => {
                        assert!(sim > s);
                        assert_eq!(w, sim);
                    }
                    None => assert!(sim <= s),
                }
            }
        }
    }

    #[test]
    fn likelihood_is_mean_edge_weight() {
        // node 3 connects to members 0 (0.5) and 1 (0.7); member 2 is
        // unreachable, contributing zero: (0.5 + 0.7 + 0) / 3 = 0.4
        let mut g = SpeakerGraph::with_pruning(0.1, false);
        g.add_node(emb_at_angle(0, 0.5f64.acos().to_degrees())).unwrap();
        g.add_node(emb_at_angle(1, -(0.7f64.acos().to_degrees()))).unwrap();
        g.add_node(emb_at_angle(2, 175.0)).unwrap();
        g.add_node(emb_at_angle(3, 0.0)).unwrap();
        let c = cluster(&[0, 1, 2], &[1.0, 0.0], 3.0, 9);
        let l = g.cluster_likelihood(3, &c).unwrap();
        assert!((l - 0.4).abs() < 1e-9, "got {l}");
        // no edges into the cluster at all
        let lonely = cluster(&[2], &[1.0, 0.0], 1.0, 8);
        assert_eq!(g.cluster_likelihood(3, &lonely).unwrap(), 0.0);
        // singleton cluster with a 0.9 edge
        let mut g2 = SpeakerGraph::with_pruning(0.1, false);
        g2.add_node(emb_at_angle(0, 0.9f64.acos().to_degrees())).unwrap();
        g2.add_node(emb_at_angle(1, 0.0)).unwrap();
        let single = cluster(&[0], &[1.0, 0.0], 1.0, 7);
        let l = g2.cluster_likelihood(1, &single).unwrap();
        assert!((l - 0.9).abs() < 1e-12);
        assert!(g2.cluster_likelihood(5, &single).is_err());
    }

    #[test]
    fn likelihood_matches_dense_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = 0.35;
        let n = 40;
        let embs: Vec<Embedding> = (0..n)
            .map(|i| {
                let v: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0) + 0.01).collect();
                emb(i, &v)
            })
            .collect();
        let mut g = SpeakerGraph::with_pruning(s, false);
        for e in &embs {
            g.add_node(e.clone()).unwrap();
        }
        for _ in 0..30 {
            let node = rng.random_range(0..n);
            let size = rng.random_range(1..=6);
            let members: Vec<usize> = (0..size).map(|_| rng.random_range(0..n)).collect();
            let mut members: Vec<usize> = members.into_iter().collect();
            members.sort_unstable();
            members.dedup();
            let c = cluster(&members, &[1.0; 5], 1.0, 0);
            let got = g.cluster_likelihood(node, &c).unwrap();
            let want: f64 = members
                .iter()
                .map(|&m| {
                    if m == node {
                        return 0.0;
                    }
                    let sim = cosine_similarity(&embs[node].vector, &embs[m].vector).unwrap();
                    if sim > s { sim } else { 0.0 }
                })
                .sum::<f64>()
                / members.len() as f64;
            assert!((got - want).abs() < 1e-9);
        }
    }

    #[test]
    fn select_speakers_by_duration() {
        let st = ClusterState {
            clusters: vec![
                cluster(&[0], &[1.0, 0.0], 8.0, 0),
                cluster(&[1], &[0.0, 1.0], 2.0, 1),
            ],
        };
        let p = select_speakers(&st, 6.0).unwrap();
        assert_eq!(p.speaker_clusters.len(), 1);
        assert_eq!(p.speaker_clusters[0].duration, 8.0);
        assert_eq!(p.nonspeaker_clusters.len(), 1);
    }

    #[test]
    fn select_speakers_fallback_picks_longest() {
        let st = ClusterState {
            clusters: vec![
                cluster(&[0], &[1.0, 0.0], 3.0, 0),
                cluster(&[1], &[0.0, 1.0], 2.0, 1),
            ],
        };
        let p = select_speakers(&st, 6.0).unwrap();
        assert_eq!(p.speaker_clusters.len(), 1);
        assert_eq!(p.speaker_clusters[0].duration, 3.0);
        assert!(select_speakers(&ClusterState::default(), 6.0).is_err());
    }

    #[test]
    fn select_speakers_multiple_qualify() {
        let st = ClusterState {
            clusters: vec![
                cluster(&[0], &[1.0, 0.0], 8.0, 0),
                cluster(&[1], &[0.0, 1.0], 7.0, 1),
                cluster(&[2], &[1.0, 1.0], 1.0, 2),
            ],
        };
        let p = select_speakers(&st, 6.0).unwrap();
        assert_eq!(p.speaker_clusters.len(), 2);
        assert_eq!(p.nonspeaker_clusters.len(), 1);
    }

    fn two_speaker_graph() -> (SpeakerGraph, SpeakerPartition) {
        // speakers around 0 deg (nodes 0-2) and 90 deg (nodes 3-5);
        // node 6 is near speaker A, node 7 points away from everything
        let mut g = SpeakerGraph::with_pruning(0.4, false);
        let angles = [0.0, 4.0, -4.0, 90.0, 86.0, 94.0, 10.0, 225.0];
        for (i, a) in angles.iter().enumerate() {
            g.add_node(emb_at_angle(i, *a)).unwrap();
        }
        let mk = |ids: &[usize]| -> Cluster {
            let mean: Vec<f64> = (0..2)
                .map(|d| {
                    ids.iter()
                        .map(|&i| g.embedding(i).unwrap().vector[d])
                        .sum::<f64>()
                        / ids.len() as f64
                })
                .collect();
            cluster(ids, &mean, ids.len() as f64, ids[0])
        };
        let part = SpeakerPartition {
            speaker_clusters: vec![mk(&[0, 1, 2]), mk(&[3, 4, 5])],
            nonspeaker_clusters: vec![mk(&[6]), mk(&[7])],
        };
        (g, part)
    }

    #[test]
    fn graph_assignment_moves_supported_nodes_and_promotes_the_rest() {
        let (g, part) = two_speaker_graph();
        let out = assign_nonspeakers_graph(&g, &part).unwrap();
        assert_eq!(out.clusters.len(), 3);
        // node 6 joined speaker A (members 0,1,2), node 7 got promoted
        assert_eq!(out.clusters[0].members, vec![0, 1, 2, 6]);
        assert_eq!(out.clusters[1].members, vec![3, 4, 5]);
        assert_eq!(out.clusters[2].members, vec![7]);
        // input speaker members were only ever added to
        for (sp, got) in part.speaker_clusters.iter().zip(&out.clusters) {
            for m in &sp.members {
                assert!(got.members.contains(m));
            }
        }
        // output is still a partition of all eight segments
        out.hidden_labels_by_segment(8).unwrap();
    }

    #[test]
    fn graph_assignment_without_nonspeakers_is_identity() {
        let (g, part) = two_speaker_graph();
        let only_speakers = SpeakerPartition {
            speaker_clusters: part.speaker_clusters.clone(),
            nonspeaker_clusters: Vec::new(),
        };
        let out = assign_nonspeakers_graph(&g, &only_speakers).unwrap();
        assert_eq!(out.clusters.len(), 2);
        assert_eq!(out.clusters[0].members, part.speaker_clusters[0].members);
        assert_eq!(out.clusters[1].members, part.speaker_clusters[1].members);
    }

    #[test]
    fn naive_assignment_merges_by_centroid_similarity() {
        let a = cluster(&[0], &[1.0, 0.0], 8.0, 0);
        let b = cluster(&[1], &[0.0, 1.0], 8.0, 1);
        // similarity 0.5 to A, negative to B
        let ns = cluster(&[2], &[0.5f64.acos().cos(), -(0.5f64.acos().sin())], 1.0, 2);
        let part = SpeakerPartition {
            speaker_clusters: vec![a.clone(), b.clone()],
            nonspeaker_clusters: vec![ns.clone()],
        };
        let out = assign_nonspeakers_naive(&part, 0.45).unwrap();
        assert_eq!(out.clusters.len(), 2);
        assert_eq!(out.clusters[0].members, vec![0, 2]);

        // below the threshold: promoted instead
        let out = assign_nonspeakers_naive(&part, 0.6).unwrap();
        assert_eq!(out.clusters.len(), 3);
        assert_eq!(out.clusters[2].members, vec![2]);

        // threshold that never binds
        let far = cluster(&[2], &[-1.0, -0.2], 1.0, 2);
        let part = SpeakerPartition {
            speaker_clusters: vec![a, b],
            nonspeaker_clusters: vec![far],
        };
        let out = assign_nonspeakers_naive(&part, -1.0).unwrap();
        assert_eq!(out.clusters.len(), 2);
        out.hidden_labels_by_segment(3).unwrap();
    }
}
