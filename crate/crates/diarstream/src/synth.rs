//! Synthetic embedding streams with known ground truth.
//!
//! Speaker centroids are unit vectors with exact pairwise cosine
//! `inter_cos`. Each segment embedding lies at a cosine drawn uniformly from
//! `intra_cos ± (1 - intra_cos)` to its speaker centroid (so the expected
//! cosine is `intra_cos`), with the residual direction random. Segment
//! geometry defaults to one-second frames with a half-second shift, and the
//! speaker sequence is a random walk over turns of a few segments each.
//! Everything is deterministic under the seed.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::core::Embedding;
use crate::error::{Error, Result};
use crate::scoring::Annotation;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub speakers: usize,
    pub segments: usize,
    pub dim: usize,
    /// Cosine of every embedding to its speaker centroid.
    pub intra_cos: f64,
    /// Pairwise cosine between speaker centroids.
    pub inter_cos: f64,
    pub seed: u64,
    pub segment_len: f64,
    pub segment_shift: f64,
    /// Bounds on speaker-turn length, in segments.
    pub min_turn: usize,
    pub max_turn: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            speakers: 4,
            segments: 400,
            dim: 128,
            intra_cos: 0.95,
            inter_cos: 0.0,
            seed: 0,
            segment_len: 1.0,
            segment_shift: 0.5,
            min_turn: 3,
            max_turn: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthStream {
    pub embeddings: Vec<Embedding>,
    /// Ground-truth speaker index per segment.
    pub speaker_of: Vec<usize>,
    /// Ground-truth turns with speakers named `spk1..spkS`.
    pub reference: Annotation,
}

fn sample_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Gram-Schmidt: a fresh unit vector orthogonal to everything in `basis`.
fn sample_orthonormal(rng: &mut ChaCha8Rng, dim: usize, basis: &[Vec<f64>]) -> Vec<f64> {
    loop {
        let mut v = sample_unit(rng, dim);
        for b in basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= d * y;
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthStream> {
    if cfg.speakers < 1 || cfg.segments < 1 {
        return Err(Error::invalid("need at least one speaker and one segment"));
    }
    if !(0.0..1.0).contains(&cfg.inter_cos) || cfg.intra_cos <= cfg.inter_cos || cfg.intra_cos > 1.0
    {
        return Err(Error::invalid(format!(
            "cosine constraints must satisfy 0 <= inter ({}) < intra ({}) <= 1",
            cfg.inter_cos, cfg.intra_cos
        )));
    }
    let needed = cfg.speakers + usize::from(cfg.inter_cos > 0.0);
    if cfg.dim < needed.max(2) {
        return Err(Error::invalid(format!(
            "dimension {} cannot host {} speaker directions at pairwise cosine {} \
             (need at least {})",
            cfg.dim,
            cfg.speakers,
            cfg.inter_cos,
            needed.max(2)
        )));
    }
    if cfg.min_turn < 1 || cfg.max_turn < cfg.min_turn {
        return Err(Error::invalid("turn-length bounds must satisfy 1 <= min <= max"));
    }
    if !(cfg.segment_len > 0.0) || !(cfg.segment_shift > 0.0) {
        return Err(Error::invalid("segment length and shift must be positive"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // orthonormal frame, one column per speaker plus a shared tilt axis
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(needed);
    for _ in 0..needed {
        let u = sample_orthonormal(&mut rng, cfg.dim, &basis);
        basis.push(u);
    }
    let centroids: Vec<Vec<f64>> = if cfg.inter_cos > 0.0 {
        let shared = &basis[cfg.speakers];
        let a = (1.0 - cfg.inter_cos).sqrt();
        let b = cfg.inter_cos.sqrt();
        (0..cfg.speakers)
            .map(|s| {
                basis[s]
                    .iter()
                    .zip(shared)
                    .map(|(u, w)| a * u + b * w)
                    .collect()
            })
            .collect()
    } else {
        basis[..cfg.speakers].to_vec()
    };

    // speaker turn sequence
    let mut speaker_of = Vec::with_capacity(cfg.segments);
    let mut current = rng.random_range(0..cfg.speakers);
    while speaker_of.len() < cfg.segments {
        let turn = rng.random_range(cfg.min_turn..=cfg.max_turn);
        for _ in 0..turn {
            if speaker_of.len() == cfg.segments {
                break;
            }
            speaker_of.push(current);
        }
        if cfg.speakers > 1 {
            let step = rng.random_range(1..cfg.speakers);
            current = (current + step) % cfg.speakers;
        }
    }

    // per-segment cosine to the centroid drawn around intra_cos
    let spread = 1.0 - cfg.intra_cos;
    let mut embeddings = Vec::with_capacity(cfg.segments);
    for (i, &spk) in speaker_of.iter().enumerate() {
        let v = &centroids[spk];
        let cos = cfg.intra_cos + spread * (rng.random::<f64>() * 2.0 - 1.0);
        let noise_scale = (1.0 - cos * cos).max(0.0).sqrt();
        let noise = sample_orthonormal(&mut rng, cfg.dim, std::slice::from_ref(v));
        let vector: Vec<f64> = v
            .iter()
            .zip(&noise)
            .map(|(c, n)| cos * c + noise_scale * n)
            .collect();
        let start = i as f64 * cfg.segment_shift;
        embeddings.push(Embedding::new(i, vector, start, start + cfg.segment_len)?);
    }

    // ground truth: consecutive same-speaker segments merge into one turn
    let mut reference = Annotation::default();
    let mut turn_start = 0usize;
    for i in 1..=cfg.segments {
        if i == cfg.segments || speaker_of[i] != speaker_of[turn_start] {
            reference.push(
                format!("spk{}", speaker_of[turn_start] + 1),
                embeddings[turn_start].start,
                embeddings[i - 1].end,
            )?;
            turn_start = i;
        }
    }

    Ok(SynthStream { embeddings, speaker_of, reference })
}
