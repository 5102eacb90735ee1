//! Label matching between frozen output labels and the current hidden
//! labels.
//!
//! Hidden labels can be rearranged arbitrarily by every clustering step, so
//! the matrix counting how often each (output label, hidden label) pair
//! shares a segment is rebuilt from scratch each step and resolved as a
//! maximum-weight bipartite matching. The new segment then inherits the
//! output label its hidden cluster was matched to, or a fresh label when its
//! cluster is unmatched.

use crate::error::{Error, Result};

/// Counts of segments carrying each (output label, hidden label) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceMatrix {
    pub output_labels: Vec<u32>,
    pub hidden_labels: Vec<usize>,
    /// Row-major counts, `output_labels.len() x hidden_labels.len()`.
    counts: Vec<u64>,
}

impl CooccurrenceMatrix {
    pub fn count(&self, row: usize, col: usize) -> u64 {
        self.counts[row * self.hidden_labels.len() + col]
    }

    pub fn count_of(&self, output: u32, hidden: usize) -> u64 {
        match (
            self.output_labels.binary_search(&output),
            self.hidden_labels.binary_search(&hidden),
        ) {
            (Ok(r), Ok(c)) => self.count(r, c),
            _ => 0,
        }
    }

    /// Total count; equals the number of frozen segments it was built from.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.output_labels.is_empty() || self.hidden_labels.is_empty()
    }
}

/// Count co-occurrences between per-segment output labels and per-segment
/// hidden labels. The hidden list may carry one extra trailing segment (the
/// segment currently being labeled), which is excluded from the counts.
pub fn build_cooccurrence(
    output_labels: &[u32],
    hidden_labels: &[usize],
) -> Result<CooccurrenceMatrix> {
    let n = output_labels.len();
    if hidden_labels.len() != n && hidden_labels.len() != n + 1 {
        return Err(Error::invalid(format!(
            "label lists disagree: {} output labels vs {} hidden labels",
            n,
            hidden_labels.len()
        )));
    }
    let mut outs: Vec<u32> = output_labels.to_vec();
    outs.sort_unstable();
    outs.dedup();
    let mut hids: Vec<usize> = hidden_labels[..n].to_vec();
    hids.sort_unstable();
    hids.dedup();
    let mut counts = vec![0u64; outs.len() * hids.len()];
    for (o, h) in output_labels.iter().zip(&hidden_labels[..n]) {
        let r = outs.binary_search(o).unwrap();
        let c = hids.binary_search(h).unwrap();
        counts[r * hids.len() + c] += 1;
    }
    Ok(CooccurrenceMatrix { output_labels: outs, hidden_labels: hids, counts })
}

/// A bipartite matching between output labels and hidden labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// Matched pairs, sorted by output label. Dummy pads from rectangular
    /// inputs are dropped; real pairs are kept even at weight zero.
    pub pairs: Vec<(u32, usize)>,
    pub total_weight: u64,
}

impl Matching {
    pub fn output_for_hidden(&self, hidden: usize) -> Option<u32> {
        self.pairs.iter().find(|(_, h)| *h == hidden).map(|(o, _)| *o)
    }
}

/// Maximum-weight matching over the co-occurrence counts.
///
/// Rectangular matrices are padded with zero-weight dummy labels; dummy
/// pairs are dropped from the result. Among equal-weight optima the solver
/// deterministically prefers assignments whose pairs come earlier in
/// (output label, hidden label) order.
pub fn hungarian(matrix: &CooccurrenceMatrix) -> Matching {
    let rows = matrix.output_labels.len();
    let cols = matrix.hidden_labels.len();
    if rows == 0 || cols == 0 {
        return Matching { pairs: Vec::new(), total_weight: 0 };
    }
    // Weights get a small rank bias so earlier (row, col) pairs win ties.
    // With integer counts any true weight difference dominates the bias.
    let rank_count = (rows * cols) as f64;
    let denom = rank_count * rows.min(cols) as f64 + 1.0;
    let weights: Vec<f64> = (0..rows * cols)
        .map(|idx| matrix.counts[idx] as f64 + (rank_count - idx as f64) / denom)
        .collect();
    let assignment = max_weight_assignment(&weights, rows, cols);
    let mut pairs: Vec<(u32, usize)> = assignment
        .into_iter()
        .map(|(r, c)| (matrix.output_labels[r], matrix.hidden_labels[c]))
        .collect();
    pairs.sort_unstable();
    let total_weight = pairs
        .iter()
        .map(|&(o, h)| matrix.count_of(o, h))
        .sum();
    Matching { pairs, total_weight }
}

/// Output label for the newest segment: the match of its hidden label, or a
/// freshly allocated label when the hidden cluster is unmatched.
pub fn infer_label(matching: &Matching, hidden_of_new: usize, next_fresh: u32) -> u32 {
    matching.output_for_hidden(hidden_of_new).unwrap_or(next_fresh)
}

/// Maximum-weight assignment on a dense `rows x cols` weight matrix
/// (row-major). Returns one (row, col) pair for every index of the smaller
/// side. Weights must be finite.
///
/// This is the standard O(n^3) shortest-augmenting-path scheme with dual
/// potentials, run on negated weights; it also serves the DER scorer's
/// speaker mapping, where weights are overlap durations.
pub(crate) fn max_weight_assignment(
    weights: &[f64],
    rows: usize,
    cols: usize,
) -> Vec<(usize, usize)> {
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    if rows > cols {
        // transpose so the row side is the smaller one
        let mut t = vec![0.0; rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                t[c * rows + r] = weights[r * cols + c];
            }
        }
        return max_weight_assignment(&t, cols, rows)
            .into_iter()
            .map(|(c, r)| (r, c))
            .collect();
    }

    let cost = |r: usize, c: usize| -> f64 { -weights[r * cols + c] };

    // job[c] = row assigned to column c; column `cols` is a virtual slot
    let mut job: Vec<Option<usize>> = vec![None; cols + 1];
    let mut potential_row = vec![0.0; rows];
    let mut potential_col = vec![0.0; cols + 1];

    for new_row in 0..rows {
        let mut cur_col = cols;
        job[cur_col] = Some(new_row);
        let mut min_to = vec![f64::INFINITY; cols + 1];
        let mut prev = vec![usize::MAX; cols + 1];
        let mut in_tree = vec![false; cols + 1];

        while let Some(row) = job[cur_col] {
            in_tree[cur_col] = true;
            let mut delta = f64::INFINITY;
            let mut next_col = cols;
            for c in 0..cols {
                if in_tree[c] {
                    continue;
                }
                let reduced = cost(row, c) - potential_row[row] - potential_col[c];
                if reduced < min_to[c] {
                    min_to[c] = reduced;
                    prev[c] = cur_col;
                }
                if min_to[c] < delta {
                    delta = min_to[c];
                    next_col = c;
                }
            }
            for c in 0..=cols {
                if in_tree[c] {
                    if let Some(r) = job[c] {
                        potential_row[r] += delta;
                    }
                    potential_col[c] -= delta;
                } else {
                    min_to[c] -= delta;
                }
            }
            cur_col = next_col;
        }
        while cur_col != cols {
            let p = prev[cur_col];
            job[cur_col] = job[p];
            cur_col = p;
        }
    }

    let mut out: Vec<(usize, usize)> = job[..cols]
        .iter()
        .enumerate()
        .filter_map(|(c, r)| r.map(|r| (r, c)))
        .collect();
    out.sort_unstable();
    out
}
