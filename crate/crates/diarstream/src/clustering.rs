//! Centroid-linkage agglomerative clustering with a similarity stopping
//! threshold, and the checkpointed online variant that resumes from a
//! bounded intermediate state.
//!
//! Both entry points run the same greedy engine: repeatedly merge the pair
//! of clusters with the highest centroid cosine similarity while that
//! maximum stays at or above the threshold. Ties are broken by the
//! lexicographically smallest pair of minimum member segment ids, which
//! makes every run deterministic.
//!
//! The engine keeps a dot-product matrix over cluster sum vectors. Dots are
//! additive under merging (`dot(a+b, c) = dot(a, c) + dot(b, c)`), so a
//! merge updates one row instead of recomputing similarities from vectors.
//! Rows of clusters not involved in a merge are patched lazily from a merge
//! log the next time they are read; together with the best-partner upper
//! bounds this keeps a full pass over t singletons at O(t^2) with a small
//! constant, which is what makes the full-AHC baseline lane tolerable on
//! long streams.

use crate::core::{dot, Cluster, ClusterState, Embedding};
use crate::error::{Error, Result};

/// One greedy merge: the hidden labels of the two clusters (smaller minimum
/// segment id first) and the centroid cosine similarity that triggered it.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeEvent {
    pub label_a: usize,
    pub label_b: usize,
    pub similarity: f64,
}

/// The ordered merge history of one clustering pass.
#[derive(Debug, Clone, Default)]
pub struct MergeTrace {
    pub merges: Vec<MergeEvent>,
    /// Number of candidate-pair similarity evaluations performed. For a pass
    /// over `m` atoms this is `m(m-1)/2` for the initial matrix plus at most
    /// `m-2` per merge; re-reads of cached values are not counted.
    pub pair_evaluations: u64,
}

/// Output of [`chkpt_step`].
#[derive(Debug, Clone)]
pub struct ChkptStep {
    /// The fully merged state, used for label emission downstream.
    pub result: ClusterState,
    /// The bounded state the next step resumes from: the first state of the
    /// merge loop (counting the unmerged starting state) with at most `k`
    /// clusters, or the final state if the loop stopped above `k`.
    pub next_checkpoint: ClusterState,
    pub trace: MergeTrace,
}

fn validate_theta(theta: f64) -> Result<()> {
    if !(theta > -1.0 && theta < 1.0) {
        return Err(Error::invalid(format!(
            "stopping threshold must lie in (-1, 1), got {theta}"
        )));
    }
    Ok(())
}

fn validate_dims(clusters: &[Cluster], extra: Option<&Embedding>) -> Result<()> {
    let mut dim = None;
    for c in clusters {
        let d = c.centroid.len();
        match dim {
            None => dim = Some(d),
            Some(expect) if expect != d => {
                return Err(Error::invalid(format!(
                    "dimension mismatch across clusters: {expect} vs {d}"
                )))
            }
            _ => {}
        }
    }
    if let (Some(expect), Some(e)) = (dim, extra) {
        if e.dim() != expect {
            return Err(Error::invalid(format!(
                "dimension mismatch: checkpoint has {expect}, new embedding has {}",
                e.dim()
            )));
        }
    }
    Ok(())
}

/// Offline agglomerative clustering over the clusters of `initial`.
///
/// Merges the most similar pair while the best centroid cosine similarity is
/// at least `theta`; returns the final state and the merge trace.
pub fn ahc(initial: &ClusterState, theta: f64) -> Result<(ClusterState, MergeTrace)> {
    if initial.is_empty() {
        return Err(Error::invalid("ahc requires at least one cluster"));
    }
    validate_theta(theta)?;
    validate_dims(&initial.clusters, None)?;
    let mut engine = MergeEngine::new();
    engine.seed_clusters(&initial.clusters, None);
    let run = engine.execute(theta, None);
    Ok((run.result, run.trace))
}

/// One online clustering step: append `new` to the checkpoint state as a
/// singleton and continue the greedy merge loop of [`ahc`].
///
/// While fewer than `k` clusters are in play the unmerged atoms carry
/// forward, so a stream of up to `k` segments behaves exactly like offline
/// clustering of the whole prefix. Once the count exceeds `k`, the first
/// intermediate state with `k` clusters becomes the next checkpoint, which
/// bounds the number of atoms any later step has to consider.
pub fn chkpt_step(
    checkpoint: &ClusterState,
    new: &Embedding,
    theta: f64,
    k: usize,
) -> Result<ChkptStep> {
    validate_theta(theta)?;
    if k < 2 {
        return Err(Error::invalid(format!("checkpoint size k must be at least 2, got {k}")));
    }
    validate_dims(&checkpoint.clusters, Some(new))?;
    let mut engine = MergeEngine::new();
    engine.seed_clusters(&checkpoint.clusters, Some(new));
    let run = engine.execute(theta, Some(k));
    let next_checkpoint = run.checkpoint.unwrap_or_else(|| run.result.clone());
    Ok(ChkptStep {
        result: run.result,
        next_checkpoint,
        trace: run.trace,
    })
}

#[inline]
fn pair_key(min_a: usize, min_b: usize) -> (usize, usize) {
    if min_a < min_b { (min_a, min_b) } else { (min_b, min_a) }
}

/// Total order on merge candidates: higher similarity first, then the
/// lexicographically smaller pair of minimum segment ids. The hot paths
/// inline this comparison; the test oracle spells it out.
#[cfg(test)]
fn better(sim_a: f64, key_a: (usize, usize), sim_b: f64, key_b: (usize, usize)) -> bool {
    sim_a > sim_b || (sim_a == sim_b && key_a < key_b)
}

const NO_TARGET: usize = usize::MAX;

/// Max-heap key; total order over finite similarities.
#[derive(PartialEq)]
struct SimKey(f64);

impl Eq for SimKey {}

impl PartialOrd for SimKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SimKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

pub(crate) struct EngineRun {
    pub result: ClusterState,
    pub checkpoint: Option<ClusterState>,
    pub trace: MergeTrace,
}

/// Reusable greedy-merge workspace.
///
/// Best-partner entries are kept per slot; an entry is either exact or a
/// stale upper bound (its recorded partner merged away and the recorded
/// similarity can only have been the maximum at the time). Stale entries are
/// refreshed from the dot matrix only when they reach the top of the
/// selection scan, which keeps hub-heavy streams from rescanning rows on
/// every merge.
pub(crate) struct MergeEngine {
    stride: usize,
    dots: Vec<f64>,
    sums: Vec<Vec<f64>>,
    inv_norm: Vec<f64>,
    size: Vec<usize>,
    duration: Vec<f64>,
    min_id: Vec<usize>,
    label: Vec<usize>,
    members: Vec<Vec<usize>>,
    alive: Vec<bool>,
    active: Vec<usize>,
    pos_in_active: Vec<usize>,
    best_sim: Vec<f64>,
    best_target: Vec<usize>,
    best_stale: Vec<bool>,
    /// Lazy max-heap over row-best values; entries are validated against
    /// the current best value of their slot when popped.
    heap: std::collections::BinaryHeap<(SimKey, usize)>,
    tie_stash: Vec<usize>,
    /// Merge log for lazy row patching: after merge (a, b), a row r not
    /// touched by the merge satisfies dot(r, merged) = r[a] + r[b].
    log: Vec<(usize, usize)>,
    row_ver: Vec<usize>,
    trace_events: Vec<MergeEvent>,
    evals: u64,
    bests_seeded: bool,
}

impl MergeEngine {
    pub(crate) fn new() -> Self {
        MergeEngine {
            stride: 0,
            dots: Vec::new(),
            sums: Vec::new(),
            inv_norm: Vec::new(),
            size: Vec::new(),
            duration: Vec::new(),
            min_id: Vec::new(),
            label: Vec::new(),
            members: Vec::new(),
            alive: Vec::new(),
            active: Vec::new(),
            pos_in_active: Vec::new(),
            best_sim: Vec::new(),
            best_target: Vec::new(),
            best_stale: Vec::new(),
            heap: std::collections::BinaryHeap::new(),
            tie_stash: Vec::new(),
            log: Vec::new(),
            row_ver: Vec::new(),
            trace_events: Vec::new(),
            evals: 0,
            bests_seeded: false,
        }
    }

    fn reset(&mut self, m: usize) {
        self.stride = m;
        // grow-only matrix; every cell that will be read is overwritten by
        // the seeding path, so no zeroing pass is needed
        if self.dots.len() < m * m {
            self.dots.resize(m * m, 0.0);
        }
        if self.sums.len() < m {
            self.sums.resize_with(m, Vec::new);
        }
        if self.members.len() < m {
            self.members.resize_with(m, Vec::new);
        }
        self.inv_norm.clear();
        self.inv_norm.resize(m, 0.0);
        self.size.clear();
        self.size.resize(m, 0);
        self.duration.clear();
        self.duration.resize(m, 0.0);
        self.min_id.clear();
        self.min_id.resize(m, 0);
        self.label.clear();
        self.label.resize(m, 0);
        self.alive.clear();
        self.alive.resize(m, true);
        self.active.clear();
        self.active.extend(0..m);
        self.pos_in_active.clear();
        self.pos_in_active.extend(0..m);
        self.best_sim.clear();
        self.best_sim.resize(m, f64::NEG_INFINITY);
        self.best_target.clear();
        self.best_target.resize(m, NO_TARGET);
        self.best_stale.clear();
        self.best_stale.resize(m, false);
        self.heap.clear();
        self.tie_stash.clear();
        self.log.clear();
        self.row_ver.clear();
        self.row_ver.resize(m, 0);
        self.trace_events.clear();
        self.evals = 0;
        self.bests_seeded = false;
    }

    fn set_inv_norm(&mut self, slot: usize) {
        let n2 = dot(&self.sums[slot], &self.sums[slot]);
        // A sum vector can cancel to zero when near-opposite clusters merge
        // under a negative threshold; similarities involving it become 0.
        self.inv_norm[slot] = if n2 > 0.0 { 1.0 / n2.sqrt() } else { 0.0 };
    }

    /// Seed the workspace from existing clusters plus an optional new
    /// singleton, computing the dot matrix directly from sum vectors.
    pub(crate) fn seed_clusters(&mut self, clusters: &[Cluster], extra: Option<&Embedding>) {
        let m = clusters.len() + usize::from(extra.is_some());
        self.reset(m);
        for (slot, c) in clusters.iter().enumerate() {
            let sz = c.size() as f64;
            let sum = &mut self.sums[slot];
            sum.clear();
            sum.extend(c.centroid.iter().map(|x| x * sz));
            self.size[slot] = c.size();
            self.duration[slot] = c.duration;
            self.min_id[slot] = c.min_segment_id();
            self.label[slot] = c.hidden_label;
            self.members[slot].clear();
            self.members[slot].extend_from_slice(&c.members);
            self.set_inv_norm(slot);
        }
        if let Some(e) = extra {
            let slot = m - 1;
            let sum = &mut self.sums[slot];
            sum.clear();
            sum.extend_from_slice(&e.vector);
            self.size[slot] = 1;
            self.duration[slot] = e.duration();
            self.min_id[slot] = e.segment_id;
            self.label[slot] = e.segment_id;
            self.members[slot].clear();
            self.members[slot].push(e.segment_id);
            self.set_inv_norm(slot);
        }
        for i in 0..m {
            for j in 0..i {
                let d = dot(&self.sums[i], &self.sums[j]);
                self.dots[i * m + j] = d;
                self.dots[j * m + i] = d;
            }
        }
        self.evals += (m * (m.saturating_sub(1)) / 2) as u64;
    }

    /// Seed singleton atoms with a precomputed segment dot matrix.
    pub(crate) fn seed_singletons_from_gram(&mut self, embeddings: &[Embedding], gram: &SegmentGram) {
        let m = embeddings.len();
        self.reset(m);
        for (slot, e) in embeddings.iter().enumerate() {
            let sum = &mut self.sums[slot];
            sum.clear();
            sum.extend_from_slice(&e.vector);
            self.size[slot] = 1;
            self.duration[slot] = e.duration();
            self.min_id[slot] = e.segment_id;
            self.label[slot] = e.segment_id;
            self.members[slot].clear();
            self.members[slot].push(e.segment_id);
            self.inv_norm[slot] = gram.inv_norm(slot);
            let (sim, target) = gram.nearest(slot);
            self.best_sim[slot] = sim;
            self.best_target[slot] = target;
            if target != NO_TARGET {
                self.heap.push((SimKey(sim), slot));
            }
        }
        for i in 0..m {
            self.dots[i * m..i * m + m].copy_from_slice(gram.row(i, m));
        }
        self.evals += (m * (m.saturating_sub(1)) / 2) as u64;
        self.bests_seeded = m > 0;
    }

    /// Best-partner scan of `slot` against everything alive.
    fn scan_row(&self, slot: usize) -> (f64, usize) {
        let m = self.stride;
        let row = &self.dots[slot * m..(slot + 1) * m];
        let inv_s = self.inv_norm[slot];
        let mut best_sim = f64::NEG_INFINITY;
        let mut best_t = NO_TARGET;
        for &c in &self.active {
            if c == slot {
                continue;
            }
            let sim = row[c] * inv_s * self.inv_norm[c];
            if sim > best_sim {
                best_sim = sim;
                best_t = c;
            } else if sim == best_sim
                && best_t != NO_TARGET
                && pair_key(self.min_id[slot], self.min_id[c])
                    < pair_key(self.min_id[slot], self.min_id[best_t])
            {
                best_t = c;
            }
        }
        (best_sim, best_t)
    }

    fn init_bests(&mut self) {
        for slot in 0..self.stride {
            let (sim, target) = self.scan_row(slot);
            self.best_sim[slot] = sim;
            self.best_target[slot] = target;
            if target != NO_TARGET {
                self.heap.push((SimKey(sim), slot));
            }
        }
    }

    /// Bring `slot`'s dot row up to date by replaying merges it missed.
    fn patch_row(&mut self, slot: usize) {
        let base = slot * self.stride;
        for idx in self.row_ver[slot]..self.log.len() {
            let (a, b) = self.log[idx];
            self.dots[base + a] += self.dots[base + b];
        }
        self.row_ver[slot] = self.log.len();
    }

    /// Recompute the true best partner of `slot` from its (patched) row.
    fn rescan(&mut self, slot: usize) {
        self.patch_row(slot);
        let (sim, target) = self.scan_row(slot);
        self.best_sim[slot] = sim;
        self.best_target[slot] = target;
        self.best_stale[slot] = false;
        if target != NO_TARGET {
            self.heap.push((SimKey(sim), slot));
        }
    }

    fn deactivate(&mut self, slot: usize) {
        self.alive[slot] = false;
        let pos = self.pos_in_active[slot];
        self.active.swap_remove(pos);
        if pos < self.active.len() {
            self.pos_in_active[self.active[pos]] = pos;
        }
    }

    fn merge(&mut self, a: usize, b: usize, sim: f64) {
        let (first, second) = if self.min_id[a] < self.min_id[b] { (a, b) } else { (b, a) };
        let event = MergeEvent {
            label_a: self.label[first],
            label_b: self.label[second],
            similarity: sim,
        };
        let new_label = if self.size[a] != self.size[b] {
            if self.size[a] > self.size[b] { self.label[a] } else { self.label[b] }
        } else {
            self.label[first]
        };

        self.patch_row(a);
        self.patch_row(b);

        // merged sums and bookkeeping live in slot a
        let (head, tail) = self.sums.split_at_mut(a.max(b));
        let (sa, sb) = if a < b { (&mut head[a], &tail[0]) } else { (&mut tail[0], &head[b]) };
        for (x, y) in sa.iter_mut().zip(sb.iter()) {
            *x += *y;
        }
        self.set_inv_norm(a);
        self.size[a] += self.size[b];
        self.duration[a] += self.duration[b];
        self.min_id[a] = self.min_id[a].min(self.min_id[b]);
        self.label[a] = new_label;
        if self.members[a].len() < self.members[b].len() {
            self.members.swap(a, b);
        }
        let mut moved = std::mem::take(&mut self.members[b]);
        self.members[a].append(&mut moved);
        self.members[b] = moved; // empty, keeps its allocation for reuse

        self.deactivate(b);

        // row a gains row b; everyone else patches lazily via the log
        let m = self.stride;
        let (ra, rb) = {
            let (lo, hi) = self.dots.split_at_mut(a.max(b) * m);
            if a < b {
                (&mut lo[a * m..(a + 1) * m], &hi[..m])
            } else {
                (&mut hi[..m], &lo[b * m..(b + 1) * m])
            }
        };
        for (x, y) in ra.iter_mut().zip(rb.iter()) {
            *x += *y;
        }
        self.log.push((a, b));
        self.row_ver[a] = self.log.len();

        // fused pass over the merged row: refresh everyone's best entry
        // against the merged cluster and find the merged cluster's own best.
        // Increases caused by the merged cluster are not re-advertised on
        // the heap: the pair that caused them is already covered by the
        // merged cluster's own fresh entry, and a pair is selectable through
        // either endpoint. An entry whose partner died keeps its value as a
        // stale upper bound, so its existing heap entry stays usable.
        let row = &self.dots[a * m..(a + 1) * m];
        let inv_a = self.inv_norm[a];
        let min_a = self.min_id[a];
        let mut best_a_sim = f64::NEG_INFINITY;
        let mut best_a_t = NO_TARGET;
        for idx in 0..self.active.len() {
            let c = self.active[idx];
            if c == a {
                continue;
            }
            let sim_ac = row[c] * inv_a * self.inv_norm[c];
            if sim_ac > best_a_sim {
                best_a_sim = sim_ac;
                best_a_t = c;
            } else if sim_ac == best_a_sim
                && best_a_t != NO_TARGET
                && pair_key(min_a, self.min_id[c]) < pair_key(min_a, self.min_id[best_a_t])
            {
                best_a_t = c;
            }
            let bt = self.best_target[c];
            if bt == a || bt == b {
                // its recorded partner just changed shape or died
                if sim_ac > self.best_sim[c] {
                    self.best_sim[c] = sim_ac;
                    self.best_target[c] = a;
                    self.best_stale[c] = false;
                } else {
                    self.best_target[c] = a;
                    self.best_stale[c] = true;
                }
            } else if self.best_stale[c] {
                if sim_ac > self.best_sim[c] {
                    self.best_sim[c] = sim_ac;
                    self.best_target[c] = a;
                    self.best_stale[c] = false;
                }
                // otherwise the old upper bound still dominates
            } else if sim_ac > self.best_sim[c]
                || (sim_ac == self.best_sim[c]
                    && pair_key(self.min_id[c], min_a)
                        < pair_key(self.min_id[c], self.min_id[bt]))
            {
                self.best_sim[c] = sim_ac;
                self.best_target[c] = a;
                self.best_stale[c] = false;
            }
        }
        self.best_sim[a] = best_a_sim;
        self.best_target[a] = best_a_t;
        self.best_stale[a] = false;
        if best_a_t != NO_TARGET {
            self.heap.push((SimKey(best_a_sim), a));
        }
        self.evals += (self.active.len() - 1) as u64;
        self.trace_events.push(event);
    }

    fn snapshot(&self) -> ClusterState {
        let mut order: Vec<usize> = self.active.clone();
        order.sort_unstable_by_key(|&s| self.min_id[s]);
        let clusters = order
            .into_iter()
            .map(|s| {
                let mut members = self.members[s].clone();
                members.sort_unstable();
                let sz = self.size[s] as f64;
                Cluster {
                    members,
                    centroid: self.sums[s].iter().map(|x| x / sz).collect(),
                    duration: self.duration[s],
                    hidden_label: self.label[s],
                }
            })
            .collect();
        ClusterState { clusters }
    }

    /// Slot holding the current global-maximum candidate, by the
    /// (similarity, min-id pair) order. Pops lazily from the heap: an entry
    /// is trustworthy only if it still matches its slot's current value.
    /// Stale upper bounds surface here and get refreshed before anything
    /// else is considered; exact value ties are resolved by re-deriving the
    /// pair keys of every tied live entry.
    fn select(&mut self) -> Option<usize> {
        loop {
            let (SimKey(sim), slot) = match self.heap.pop() {
                Some(e) => e,
                None => return None,
            };
            if !self.alive[slot] || self.best_sim[slot] != sim {
                continue; // superseded entry
            }
            if self.best_stale[slot] {
                self.rescan(slot);
                continue;
            }
            // gather live entries tying the maximum value
            self.tie_stash.clear();
            let mut winner = slot;
            while let Some(&(SimKey(top), peer)) = self.heap.peek() {
                if top != sim {
                    break;
                }
                self.heap.pop();
                if !self.alive[peer] || self.best_sim[peer] != sim || peer == winner {
                    continue;
                }
                if self.best_stale[peer] {
                    // put the current candidates back and resolve the
                    // stale bound first
                    self.heap.push((SimKey(sim), winner));
                    for &t in &self.tie_stash {
                        self.heap.push((SimKey(sim), t));
                    }
                    let peer_copy = peer;
                    self.tie_stash.clear();
                    self.rescan(peer_copy);
                    return self.select_retry();
                }
                let key_p = pair_key(self.min_id[peer], self.min_id[self.best_target[peer]]);
                let key_w = pair_key(self.min_id[winner], self.min_id[self.best_target[winner]]);
                if key_p < key_w {
                    self.tie_stash.push(winner);
                    winner = peer;
                } else {
                    self.tie_stash.push(peer);
                }
            }
            for i in 0..self.tie_stash.len() {
                let t = self.tie_stash[i];
                self.heap.push((SimKey(sim), t));
            }
            self.tie_stash.clear();
            return Some(winner);
        }
    }

    fn select_retry(&mut self) -> Option<usize> {
        self.select()
    }

    pub(crate) fn execute(&mut self, theta: f64, checkpoint_at: Option<usize>) -> EngineRun {
        if !self.bests_seeded {
            self.init_bests();
        }
        let mut checkpoint = None;
        if let Some(k) = checkpoint_at {
            if self.active.len() <= k {
                checkpoint = Some(self.snapshot());
            }
        }
        while self.active.len() > 1 {
            let Some(row) = self.select() else { break };
            let sim = self.best_sim[row];
            if sim < theta {
                // not consumed: the merge loop is done, but the entry must
                // survive for deterministic re-execution semantics
                self.heap.push((SimKey(sim), row));
                break;
            }
            self.merge(row, self.best_target[row], sim);
            if let Some(k) = checkpoint_at {
                if checkpoint.is_none() && self.active.len() == k {
                    checkpoint = Some(self.snapshot());
                }
            }
        }
        let result = self.snapshot();
        let trace = MergeTrace {
            merges: std::mem::take(&mut self.trace_events),
            pair_evaluations: self.evals,
        };
        EngineRun { result, checkpoint, trace }
    }
}

/// Append-only dot matrix over segment embeddings, shared by the full-AHC
/// lane of the pipeline so each step adds one row instead of recomputing
/// every pairwise similarity from vectors. Also maintains each segment's
/// best singleton partner, which seeds the engine's selection state.
pub(crate) struct SegmentGram {
    stride: usize,
    n: usize,
    dots: Vec<f64>,
    inv_norms: Vec<f64>,
    nn_sim: Vec<f64>,
    nn_target: Vec<usize>,
}

impl SegmentGram {
    pub(crate) fn new() -> Self {
        SegmentGram {
            stride: 0,
            n: 0,
            dots: Vec::new(),
            inv_norms: Vec::new(),
            nn_sim: Vec::new(),
            nn_target: Vec::new(),
        }
    }

    fn grow(&mut self, want: usize) {
        if want <= self.stride {
            return;
        }
        let new_stride = (self.stride * 2).max(want).max(64);
        let mut dots = vec![0.0; new_stride * new_stride];
        for i in 0..self.n {
            dots[i * new_stride..i * new_stride + self.n]
                .copy_from_slice(&self.dots[i * self.stride..i * self.stride + self.n]);
        }
        self.dots = dots;
        self.stride = new_stride;
    }

    /// Append the dot row for the last of `embeddings` and update the
    /// persistent nearest-partner table.
    pub(crate) fn push(&mut self, embeddings: &[Embedding]) {
        let t = self.n;
        debug_assert_eq!(t + 1, embeddings.len());
        self.grow(t + 1);
        let e = &embeddings[t];
        let n2 = dot(&e.vector, &e.vector);
        self.inv_norms.push(if n2 > 0.0 { 1.0 / n2.sqrt() } else { 0.0 });
        self.nn_sim.push(f64::NEG_INFINITY);
        self.nn_target.push(NO_TARGET);
        let base = t * self.stride;
        self.dots[base + t] = n2;
        let mut best_sim = f64::NEG_INFINITY;
        let mut best_t = NO_TARGET;
        for i in 0..t {
            let d = dot(&e.vector, &embeddings[i].vector);
            self.dots[base + i] = d;
            self.dots[i * self.stride + t] = d;
            let sim = d * self.inv_norms[t] * self.inv_norms[i];
            // ties prefer the earlier partner, matching the engine's order
            if sim > self.nn_sim[i] {
                self.nn_sim[i] = sim;
                self.nn_target[i] = t;
            }
            if sim > best_sim {
                best_sim = sim;
                best_t = i;
            }
        }
        self.nn_sim[t] = best_sim;
        self.nn_target[t] = best_t;
        self.n = t + 1;
    }

    fn row(&self, i: usize, m: usize) -> &[f64] {
        &self.dots[i * self.stride..i * self.stride + m]
    }

    fn inv_norm(&self, i: usize) -> f64 {
        self.inv_norms[i]
    }

    fn nearest(&self, i: usize) -> (f64, usize) {
        (self.nn_sim[i], self.nn_target[i])
    }
}

/// Six 2-d embeddings that reproduce the checkpointed relabeling flip with
/// `theta = 0.6`, `k = 4`: after five segments the hidden labels follow the
/// AAAAB pattern, and resuming from the four-cluster checkpoint with a sixth
/// embedding regroups the same five segments as ABBBB.
#[cfg(test)]
pub(crate) fn relabel_flip_stream() -> Vec<Embedding> {
    let angles: [f64; 6] = [60.0, 30.0, 0.0, 2.0, -50.0, -25.0];
    angles
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let r = a.to_radians();
            Embedding::new(i, vec![r.cos(), r.sin()], 0.5 * i as f64, 0.5 * i as f64 + 1.0)
                .unwrap()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::cosine_similarity;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn emb(id: usize, v: &[f64]) -> Embedding {
        Embedding::new(id, v.to_vec(), 0.5 * id as f64, 0.5 * id as f64 + 1.0).unwrap()
    }

    fn singletons(vecs: &[Vec<f64>]) -> ClusterState {
        let embs: Vec<Embedding> =
            vecs.iter().enumerate().map(|(i, v)| emb(i, v)).collect();
        ClusterState::from_singletons(&embs)
    }

    /// Reference implementation: O(m^3) greedy merging straight from the
    /// definition, used as the oracle for the engine.
    fn ahc_reference(initial: &ClusterState, theta: f64) -> ClusterState {
        let mut clusters = initial.clusters.clone();
        loop {
            if clusters.len() <= 1 {
                break;
            }
            let mut best: Option<(f64, (usize, usize), usize, usize)> = None;
            for i in 0..clusters.len() {
                for j in (i + 1)..clusters.len() {
                    let sim =
                        cosine_similarity(&clusters[i].centroid, &clusters[j].centroid).unwrap();
                    let key = pair_key(
                        clusters[i].min_segment_id(),
                        clusters[j].min_segment_id(),
                    );
                    if best.is_none()
                        || better(sim, key, best.unwrap().0, best.unwrap().1)
                    {
                        best = Some((sim, key, i, j));
                    }
                }
            }
            let (sim, _, i, j) = best.unwrap();
            if sim < theta {
                break;
            }
            let merged = crate::core::merge_clusters(&clusters[i], &clusters[j]).unwrap();
            clusters.remove(j);
            clusters.remove(i);
            clusters.push(merged);
        }
        clusters.sort_by_key(Cluster::min_segment_id);
        ClusterState { clusters }
    }

    fn partitions(state: &ClusterState) -> Vec<Vec<usize>> {
        let mut p: Vec<Vec<usize>> = state.clusters.iter().map(|c| c.members.clone()).collect();
        p.sort();
        p
    }

    #[test]
    fn ahc_merges_parallel_pair_keeps_orthogonal() {
        let st = singletons(&[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]);
        let (out, trace) = ahc(&st, 0.6).unwrap();
        assert_eq!(partitions(&out), vec![vec![0, 1], vec![2]]);
        assert_eq!(trace.merges.len(), 1);
        assert_eq!(trace.merges[0].similarity, 1.0);
    }

    #[test]
    fn ahc_single_cluster_is_identity() {
        let st = singletons(&[vec![1.0, 0.0]]);
        let (out, trace) = ahc(&st, -0.9).unwrap();
        assert_eq!(out, st);
        assert!(trace.merges.is_empty());
    }

    #[test]
    fn ahc_all_below_threshold_is_identity() {
        let st = singletons(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.1]]);
        let (out, trace) = ahc(&st, 0.6).unwrap();
        assert_eq!(out, st);
        assert!(trace.merges.is_empty());
    }

    #[test]
    fn ahc_rejects_empty_and_bad_theta() {
        assert!(ahc(&ClusterState::default(), 0.5).is_err());
        let st = singletons(&[vec![1.0, 0.0]]);
        assert!(ahc(&st, 1.0).is_err());
        assert!(ahc(&st, -1.0).is_err());
    }

    #[test]
    fn identical_vectors_merge_in_id_order() {
        let st = singletons(&[vec![2.0, 0.0], vec![2.0, 0.0], vec![2.0, 0.0]]);
        let (out, trace) = ahc(&st, 0.5).unwrap();
        assert_eq!(partitions(&out), vec![vec![0, 1, 2]]);
        // tie-break picks (0,1) before anything involving 2
        assert_eq!(trace.merges[0].label_a, 0);
        assert_eq!(trace.merges[0].label_b, 1);
    }

    #[test]
    fn engine_matches_reference_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for case in 0..120 {
            let d = if case % 2 == 0 { 2 } else { 5 };
            let n = rng.random_range(1..=18);
            let theta = rng.random_range(-0.5..0.95);
            let vecs: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let vecs: Vec<Vec<f64>> = vecs
                .into_iter()
                .map(|v| if v.iter().all(|x: &f64| x.abs() < 1e-9) { vec![1.0; d] } else { v })
                .collect();
            let st = singletons(&vecs);
            let (got, _) = ahc(&st, theta).unwrap();
            let want = ahc_reference(&st, theta);
            assert_eq!(partitions(&got), partitions(&want), "case {case}");
        }
    }

    #[test]
    fn chkpt_below_k_behaves_like_ahc() {
        // 3-cluster checkpoint plus one new embedding, k well above the count
        let base = singletons(&[vec![1.0, 0.0], vec![0.9, 0.1], vec![0.0, 1.0]]);
        let (merged, _) = ahc(&base, 0.8).unwrap();
        let new = emb(3, &[0.05, 1.0]);
        let step = chkpt_step(&merged, &new, 0.8, 50).unwrap();
        let mut all = merged.clusters.clone();
        all.push(Cluster::singleton(&new));
        let (want, _) = ahc(&ClusterState { clusters: all }, 0.8).unwrap();
        assert_eq!(step.result, want);
        // below k the resumable state keeps the unmerged atoms
        assert_eq!(step.next_checkpoint.clusters.len(), merged.clusters.len() + 1);
        assert_eq!(step.next_checkpoint.covered_segments(), 4);
    }

    #[test]
    fn chkpt_stream_below_k_equals_offline_per_prefix() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for case in 0..40 {
            let d = if case % 2 == 0 { 2 } else { 8 };
            let n = rng.random_range(2..=20);
            let k = rng.random_range(n.max(2)..=20);
            let theta = rng.random_range(0.3..0.9);
            let embs: Vec<Embedding> = (0..n)
                .map(|i| {
                    let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0) + 0.01).collect();
                    emb(i, &v)
                })
                .collect();
            let mut ckpt = ClusterState::default();
            for t in 0..n {
                let step = chkpt_step(&ckpt, &embs[t], theta, k).unwrap();
                let (want, _) = ahc(&ClusterState::from_singletons(&embs[..=t]), theta).unwrap();
                assert_eq!(step.result, want, "case {case} prefix {t}");
                ckpt = step.next_checkpoint;
            }
        }
    }

    #[test]
    fn chkpt_checkpoint_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let k = 5;
        let mut ckpt = ClusterState::default();
        for t in 0..60 {
            let v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0) + 0.01).collect();
            let step = chkpt_step(&ckpt, &emb(t, &v), 0.2, k).unwrap();
            assert!(
                step.next_checkpoint.clusters.len() <= k,
                "step {t}: {} clusters",
                step.next_checkpoint.clusters.len()
            );
            assert_eq!(step.result.covered_segments(), t + 1);
            assert_eq!(step.next_checkpoint.covered_segments(), t + 1);
            // every partition must cover segments 0..=t exactly
            step.result.hidden_labels_by_segment(t + 1).unwrap();
            step.next_checkpoint.hidden_labels_by_segment(t + 1).unwrap();
            ckpt = step.next_checkpoint;
        }
    }

    #[test]
    fn chkpt_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let embs: Vec<Embedding> = (0..30)
            .map(|i| {
                let v: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0) + 0.01).collect();
                emb(i, &v)
            })
            .collect();
        let run = |embs: &[Embedding]| {
            let mut ckpt = ClusterState::default();
            let mut states = Vec::new();
            for e in embs {
                let step = chkpt_step(&ckpt, e, 0.5, 6).unwrap();
                ckpt = step.next_checkpoint;
                states.push(step.result);
            }
            states
        };
        assert_eq!(run(&embs), run(&embs));
    }

    #[test]
    fn every_merge_meets_the_stopping_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..40 {
            let n = rng.random_range(2..=15);
            let theta = rng.random_range(-0.3..0.9);
            let vecs: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..3).map(|_| rng.random_range(0.1..1.0)).collect())
                .collect();
            let (_, trace) = ahc(&singletons(&vecs), theta).unwrap();
            for m in &trace.merges {
                assert!(m.similarity >= theta);
            }
        }
    }

    #[test]
    fn merge_similarities_nonincreasing_on_separated_speakers() {
        // The mean of merged embeddings has norm below 1, which inflates
        // later cosines; deep merges of dissimilar clusters can therefore
        // invert the trace. With well-separated unit-vector speakers and a
        // high threshold the greedy trace does come out monotone, which is
        // the regime the threshold defaults target.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let n = rng.random_range(4..=16);
            let vecs: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    let base: f64 = if i % 2 == 0 { 0.0 } else { std::f64::consts::FRAC_PI_2 };
                    let jitter: f64 = rng.random_range(-0.15..0.15);
                    vec![(base + jitter).cos(), (base + jitter).sin()]
                })
                .collect();
            let (_, trace) = ahc(&singletons(&vecs), 0.6).unwrap();
            for w in trace.merges.windows(2) {
                assert!(
                    w[1].similarity <= w[0].similarity + 1e-12,
                    "inversion: {} then {}",
                    w[0].similarity,
                    w[1].similarity
                );
            }
        }
    }

    #[test]
    fn gram_backed_run_matches_direct_seeding() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let embs: Vec<Embedding> = (0..25)
            .map(|i| {
                let v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0) + 0.01).collect();
                emb(i, &v)
            })
            .collect();
        let mut gram = SegmentGram::new();
        let mut engine = MergeEngine::new();
        for t in 0..embs.len() {
            gram.push(&embs[..=t]);
            engine.seed_singletons_from_gram(&embs[..=t], &gram);
            let run = engine.execute(0.55, None);
            let (want, _) = ahc(&ClusterState::from_singletons(&embs[..=t]), 0.55).unwrap();
            assert_eq!(run.result, want, "prefix {t}");
        }
    }

    #[test]
    fn hidden_labels_can_flip_across_checkpointed_steps() {
        let embs = relabel_flip_stream();
        let (theta, k) = (0.6, 4);
        let mut ckpt = ClusterState::default();
        let mut hidden_at: Vec<Vec<usize>> = Vec::new();
        for t in 0..embs.len() {
            let step = chkpt_step(&ckpt, &embs[t], theta, k).unwrap();
            hidden_at.push(step.result.hidden_labels_by_segment(t + 1).unwrap());
            ckpt = step.next_checkpoint;
        }
        let h5 = &hidden_at[4];
        assert_eq!(h5[0], h5[1]);
        assert_eq!(h5[1], h5[2]);
        assert_eq!(h5[2], h5[3]);
        assert_ne!(h5[3], h5[4], "segment 4 must sit alone after step 5");
        let h6 = &hidden_at[5];
        assert_ne!(h6[0], h6[1], "segment 0 must split off after step 6");
        assert_eq!(h6[1], h6[2]);
        assert_eq!(h6[2], h6[3]);
        assert_eq!(h6[3], h6[4]);
        assert_eq!(h6[4], h6[5]);
    }
}
