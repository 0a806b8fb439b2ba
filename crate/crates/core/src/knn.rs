//! Frame-level kNN voice conversion: exact nearest-neighbor regression of
//! source frames onto target-speaker frame pools, weighted pooling across
//! several pools, and the two anonymization perturbations (additive
//! bounded noise, tempo variation).

use rand::Rng;

use crate::error::{Error, Result};
use crate::io::FeatureSequence;
use crate::matrix::{dot_f64, norm_f64, Matrix};
use crate::rng;

/// Neighbor scoring metric. Scores are "higher is closer" in both cases;
/// Euclidean uses the negated distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    Cosine,
    Euclidean,
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Metric::Cosine),
            "euclidean" => Ok(Metric::Euclidean),
            other => Err(Error::Domain(format!(
                "unknown metric '{other}', expected 'cosine' or 'euclidean'"
            ))),
        }
    }
}

/// An indexed pool of target frames with precomputed row norms.
/// Immutable after construction; shared reads are safe.
#[derive(Debug, Clone)]
pub struct MatchingSet {
    source_id: String,
    frames: Matrix<f32>,
    frame_norms: Vec<f64>,
}

impl MatchingSet {
    /// Concatenates the given sequences' frames in order and precomputes
    /// per-row Euclidean norms. All sequences must share one feature
    /// dimension and no frame may have zero norm.
    pub fn build(sequences: &[FeatureSequence], source_id: impl Into<String>) -> Result<Self> {
        let first = sequences
            .first()
            .ok_or_else(|| Error::Schema("matching set needs at least one sequence".into()))?;
        let dim = first.dim();
        for seq in sequences {
            if seq.dim() != dim {
                return Err(Error::Schema(format!(
                    "sequence '{}' has dimension {}, expected {dim}",
                    seq.utterance_id,
                    seq.dim()
                )));
            }
        }
        let parts: Vec<&Matrix<f32>> = sequences.iter().map(|s| &s.frames).collect();
        let frames = Matrix::vstack(&parts)?;
        let frame_norms: Vec<f64> = frames.iter_rows().map(norm_f64).collect();
        if let Some(i) = frame_norms.iter().position(|&n| n == 0.0) {
            return Err(Error::Data(format!("frame {i} of the pool has zero norm")));
        }
        Ok(MatchingSet {
            source_id: source_id.into(),
            frames,
            frame_norms,
        })
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn len(&self) -> usize {
        self.frames.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.frames.cols()
    }

    pub fn frames(&self) -> &Matrix<f32> {
        &self.frames
    }

    pub fn frame_norms(&self) -> &[f64] {
        &self.frame_norms
    }
}

/// Several matching sets plus pooling weights, normalized to sum to 1 at
/// construction.
#[derive(Debug, Clone)]
pub struct PooledTarget {
    sets: Vec<MatchingSet>,
    weights: Vec<f64>,
}

impl PooledTarget {
    pub fn new(sets: Vec<MatchingSet>, weights: Vec<f64>) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::Schema("pooled target needs at least one set".into()));
        }
        if sets.len() != weights.len() {
            return Err(Error::Schema(format!(
                "{} sets but {} weights",
                sets.len(),
                weights.len()
            )));
        }
        let dim = sets[0].dim();
        for s in &sets {
            if s.dim() != dim {
                return Err(Error::Schema(format!(
                    "set '{}' has dimension {}, expected {dim}",
                    s.source_id(),
                    s.dim()
                )));
            }
        }
        if weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
            return Err(Error::Domain("pool weights must be non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::Domain("pool weights sum to zero".into()));
        }
        let weights = weights.iter().map(|w| w / total).collect();
        Ok(PooledTarget { sets, weights })
    }

    /// Equal weight for every set.
    pub fn uniform(sets: Vec<MatchingSet>) -> Result<Self> {
        let n = sets.len();
        PooledTarget::new(sets, vec![1.0; n.max(1)])
    }

    pub fn sets(&self) -> &[MatchingSet] {
        &self.sets
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn min_pool_size(&self) -> usize {
        self.sets.iter().map(MatchingSet::len).min().unwrap_or(0)
    }
}

/// Noise bound, tempo-factor range and seed for the anonymization
/// perturbations. `noise_bound = 0` and `[1, 1]` disable them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbConfig {
    pub noise_bound: f64,
    pub length_factor_range: (f64, f64),
    pub seed: u64,
}

impl PerturbConfig {
    pub fn new(noise_bound: f64, length_factor_range: (f64, f64), seed: u64) -> Result<Self> {
        let (lo, hi) = length_factor_range;
        if !(noise_bound >= 0.0 && noise_bound.is_finite()) {
            return Err(Error::Domain(format!(
                "noise bound must be a finite non-negative real, got {noise_bound}"
            )));
        }
        if !(lo > 0.0 && lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Domain(format!(
                "length factor range must satisfy 0 < lo <= hi, got [{lo}, {hi}]"
            )));
        }
        Ok(PerturbConfig {
            noise_bound,
            length_factor_range,
            seed,
        })
    }

    /// The do-nothing configuration.
    pub fn disabled(seed: u64) -> Self {
        PerturbConfig {
            noise_bound: 0.0,
            length_factor_range: (1.0, 1.0),
            seed,
        }
    }
}

fn score(metric: Metric, query: &[f32], query_norm: f64, row: &[f32], row_norm: f64) -> f64 {
    match metric {
        Metric::Cosine => dot_f64(query, row) / (query_norm * row_norm),
        Metric::Euclidean => {
            let mut acc = 0.0f64;
            for (&a, &b) in query.iter().zip(row) {
                let d = a as f64 - b as f64;
                acc += d * d;
            }
            -acc.sqrt()
        }
    }
}

/// The k rows of `set` scoring highest against `query`, sorted by
/// descending score with ties broken toward the lower row index.
pub fn knn_query(
    set: &MatchingSet,
    query: &[f32],
    k: usize,
    metric: Metric,
) -> Result<Vec<(usize, f64)>> {
    if k == 0 {
        return Err(Error::Domain("k must be positive".into()));
    }
    if k > set.len() {
        return Err(Error::Capacity(format!(
            "k = {k} exceeds pool size M = {}",
            set.len()
        )));
    }
    if query.len() != set.dim() {
        return Err(Error::Schema(format!(
            "query has dimension {}, pool expects {}",
            query.len(),
            set.dim()
        )));
    }
    let query_norm = norm_f64(query);
    if query_norm == 0.0 {
        return Err(Error::Data("query frame has zero norm".into()));
    }

    // Rows are visited in index order, so on equal scores the earlier row
    // is already placed and later ones never displace it.
    let mut top: Vec<(usize, f64)> = Vec::with_capacity(k + 1);
    for i in 0..set.len() {
        let s = score(metric, query, query_norm, set.frames.row(i), set.frame_norms[i]);
        if top.len() == k && s <= top[k - 1].1 {
            continue;
        }
        let pos = top.partition_point(|&(_, t)| t >= s);
        top.insert(pos, (i, s));
        top.truncate(k);
    }
    Ok(top)
}

fn regress_frame(
    out: &mut [f64],
    set: &MatchingSet,
    query: &[f32],
    k: usize,
    metric: Metric,
    weight: f64,
) -> Result<()> {
    let neighbors = knn_query(set, query, k, metric)?;
    let scale = weight / k as f64;
    for (idx, _) in neighbors {
        let row = set.frames.row(idx);
        for (o, &v) in out.iter_mut().zip(row) {
            *o += scale * v as f64;
        }
    }
    Ok(())
}

/// Replaces every frame with the unweighted mean of its k nearest pool
/// frames. Output length equals input length.
pub fn knn_regress(
    seq: &FeatureSequence,
    set: &MatchingSet,
    k: usize,
    metric: Metric,
) -> Result<FeatureSequence> {
    if seq.dim() != set.dim() {
        return Err(Error::Schema(format!(
            "sequence dimension {} does not match pool dimension {}",
            seq.dim(),
            set.dim()
        )));
    }
    let mut rows = Vec::with_capacity(seq.len());
    let mut acc = vec![0.0f64; seq.dim()];
    for t in 0..seq.len() {
        acc.iter_mut().for_each(|v| *v = 0.0);
        regress_frame(&mut acc, set, seq.frames.row(t), k, metric, 1.0)?;
        rows.push(acc.iter().map(|&v| v as f32).collect::<Vec<f32>>());
    }
    FeatureSequence::new(seq.utterance_id.clone(), Matrix::from_rows(&rows)?)
}

/// kNN regression against several matching sets, combined per frame by
/// the target's normalized weights. With a single set this reduces to
/// `knn_regress` exactly.
pub fn pooled_regress(
    seq: &FeatureSequence,
    target: &PooledTarget,
    k: usize,
    metric: Metric,
) -> Result<FeatureSequence> {
    let mut rows = Vec::with_capacity(seq.len());
    let mut acc = vec![0.0f64; seq.dim()];
    for t in 0..seq.len() {
        acc.iter_mut().for_each(|v| *v = 0.0);
        for (set, &w) in target.sets().iter().zip(target.weights()) {
            regress_frame(&mut acc, set, seq.frames.row(t), k, metric, w)?;
        }
        rows.push(acc.iter().map(|&v| v as f32).collect::<Vec<f32>>());
    }
    FeatureSequence::new(seq.utterance_id.clone(), Matrix::from_rows(&rows)?)
}

/// Adds per-component noise drawn uniformly from (−bound, bound) to every
/// entry, from a stream keyed by (seed, utterance id). The infinity norm
/// of the perturbation stays strictly below `bound` after f32 rounding;
/// `bound = 0` returns the input unchanged.
pub fn perturb_noise(seq: &FeatureSequence, bound: f64, seed: u64) -> Result<FeatureSequence> {
    if !(bound >= 0.0 && bound.is_finite()) {
        return Err(Error::Domain(format!(
            "noise bound must be a finite non-negative real, got {bound}"
        )));
    }
    if bound == 0.0 {
        return Ok(seq.clone());
    }
    let mut rng = rng::stream(seed, "perturb_noise", &seq.utterance_id);
    let mut out = seq.frames.clone();
    for t in 0..out.rows() {
        for v in out.row_mut(t) {
            let x = *v as f64;
            // redraw until the f32-rounded displacement is strictly inside
            // the bound
            *v = loop {
                let u: f64 = rng.gen_range(-bound..bound);
                let candidate = (x + u) as f32;
                if (candidate as f64 - x).abs() < bound {
                    break candidate;
                }
            };
        }
    }
    FeatureSequence::new(seq.utterance_id.clone(), out)
}

/// Tempo resampling: a factor f maps T frames to max(1, round(T / f))
/// frames, filling each output frame by linear interpolation between its
/// two bracketing input frames. Factor 1 returns the input unchanged.
pub fn length_variation(seq: &FeatureSequence, factor: f64) -> Result<FeatureSequence> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::Domain(format!(
            "length factor must be a positive real, got {factor}"
        )));
    }
    if factor == 1.0 {
        return Ok(seq.clone());
    }
    let t_in = seq.len();
    let d = seq.dim();
    let t_out = ((t_in as f64 / factor).round() as usize).max(1);

    let mut rows = Vec::with_capacity(t_out);
    for t in 0..t_out {
        let pos = if t_out == 1 {
            (t_in as f64 - 1.0) / 2.0
        } else {
            t as f64 * (t_in as f64 - 1.0) / (t_out as f64 - 1.0)
        };
        let (lo, hi, frac) = if t_in == 1 {
            (0, 0, 0.0)
        } else {
            let lo = (pos.floor() as usize).min(t_in - 2);
            (lo, lo + 1, pos - lo as f64)
        };
        let a = seq.frames.row(lo);
        let b = seq.frames.row(hi);
        let row: Vec<f32> = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| ((1.0 - frac) * x as f64 + frac * y as f64) as f32)
            .collect();
        rows.push(row);
    }
    debug_assert_eq!(rows.len(), t_out);
    debug_assert!(rows.iter().all(|r| r.len() == d));
    FeatureSequence::new(seq.utterance_id.clone(), Matrix::from_rows(&rows)?)
}

/// The full per-utterance anonymization pipeline: tempo variation with a
/// factor drawn from the configured range, additive noise, then pooled
/// kNN regression. Deterministic given (seed, utterance id).
pub fn anonymize_utterance(
    seq: &FeatureSequence,
    target: &PooledTarget,
    k: usize,
    perturb: &PerturbConfig,
    metric: Metric,
) -> Result<FeatureSequence> {
    let (lo, hi) = perturb.length_factor_range;
    let factor = if lo == hi {
        lo
    } else {
        let mut rng = rng::stream(perturb.seed, "length_factor", &seq.utterance_id);
        rng.gen_range(lo..hi)
    };
    let stretched = length_variation(seq, factor)?;
    let noisy = perturb_noise(&stretched, perturb.noise_bound, perturb.seed)?;
    pooled_regress(&noisy, target, k, metric)
}
