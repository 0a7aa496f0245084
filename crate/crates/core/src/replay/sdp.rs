//! Sampled-data prioritization and on/off-policy batch mixing.
//!
//! Two uniformly drawn mini-batches are compared through the cosine
//! similarity of their episode-return score vectors. When they are
//! dissimilar enough (`ζ ≤ ζ_th`) the `k` highest-scoring transitions of
//! their concatenation are kept; otherwise one of the two batches is used
//! as is. The latest on-policy transition then replaces one random entry.

use rand::seq::SliceRandom;
use rand::Rng;

use super::transition::{AugTransition, MiniBatch};
use crate::error::{Error, Result};

/// Default similarity threshold.
pub const DEFAULT_ZETA_TH: f64 = 0.5;

/// `v1·v2 / (‖v1‖‖v2‖)`, or 1 when either vector has zero norm.
pub fn cosine_similarity(v1: &[f64], v2: &[f64]) -> Result<f64> {
    if v1.len() != v2.len() {
        return Err(Error::Dimension {
            context: "cosine similarity",
            expected: v1.len(),
            actual: v2.len(),
        });
    }
    let dot: f64 = v1.iter().zip(v2).map(|(a, b)| a * b).sum();
    let n1 = v1.iter().map(|a| a * a).sum::<f64>().sqrt();
    let n2 = v2.iter().map(|a| a * a).sum::<f64>().sqrt();
    if n1 == 0.0 || n2 == 0.0 {
        return Ok(1.0);
    }
    Ok((dot / (n1 * n2)).clamp(-1.0, 1.0))
}

/// Indices of the `k` largest scores; equal scores are ordered uniformly at
/// random.
pub fn top_k_indices<R: Rng + ?Sized>(scores: &[f64], k: usize, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.shuffle(rng);
    // Stable sort keeps the shuffled order among ties.
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order.truncate(k);
    order
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpOutcome {
    pub batch: MiniBatch<AugTransition>,
    pub prioritized: bool,
    pub zeta: f64,
}

fn scores(batch: &[AugTransition]) -> Result<Vec<f64>> {
    batch
        .iter()
        .map(|t| match t.rho {
            Some(r) if r.is_finite() => Ok(r),
            _ => Err(Error::Config(
                "sampled transition has no finite episode score".into(),
            )),
        })
        .collect()
}

/// Chooses the training batch from two equally sized uniform batches.
pub fn sdp_select<R: Rng + ?Sized>(
    b1: MiniBatch<AugTransition>,
    b2: MiniBatch<AugTransition>,
    zeta_th: f64,
    rng: &mut R,
) -> Result<SdpOutcome> {
    if b1.len() != b2.len() || b1.is_empty() {
        return Err(Error::Config(format!(
            "sdp needs two non-empty batches of equal size, got {} and {}",
            b1.len(),
            b2.len()
        )));
    }
    let k = b1.len();
    let s1 = scores(&b1)?;
    let s2 = scores(&b2)?;
    let zeta = cosine_similarity(&s1, &s2)?;
    if zeta <= zeta_th {
        let mut joined = b1;
        joined.extend(b2);
        let all: Vec<f64> = s1.into_iter().chain(s2).collect();
        let keep = top_k_indices(&all, k, rng);
        let mut slots: Vec<Option<AugTransition>> = joined.into_iter().map(Some).collect();
        let batch = keep
            .into_iter()
            .map(|i| slots[i].take().expect("top-k indices are distinct"))
            .collect();
        Ok(SdpOutcome {
            batch,
            prioritized: true,
            zeta,
        })
    } else {
        let batch = if rng.random_bool(0.5) { b1 } else { b2 };
        Ok(SdpOutcome {
            batch,
            prioritized: false,
            zeta,
        })
    }
}

/// Overwrites one uniformly chosen entry of `batch` with `latest`; returns
/// the mixed batch and the replaced index.
pub fn moo_mix<T, R: Rng + ?Sized>(
    mut batch: MiniBatch<T>,
    latest: T,
    rng: &mut R,
) -> Result<(MiniBatch<T>, usize)> {
    if batch.is_empty() {
        return Err(Error::Config("cannot mix into an empty batch".into()));
    }
    let idx = rng.random_range(0..batch.len());
    batch[idx] = latest;
    Ok((batch, idx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::replay::Transition;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scored(rho: f64, id: u64) -> AugTransition {
        AugTransition::with_rho(
            Transition {
                state: vec![id as f64],
                action: vec![0.0],
                reward: 0.0,
                next_state: vec![0.0],
                done: false,
            },
            rho,
            id,
        )
    }

    fn batch(rhos: &[f64], first_id: u64) -> Vec<AugTransition> {
        rhos.iter()
            .enumerate()
            .map(|(i, &r)| scored(r, first_id + i as u64))
            .collect()
    }

    #[test]
    fn cosine_examples() {
        assert!(
            (cosine_similarity(&[3.0, 3.0, 3.0], &[3.0, 3.0, 3.0]).unwrap() - 1.0).abs() < 1e-15
        );
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let z = cosine_similarity(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap();
        assert!((z - 10.0 / 14.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[0.0, 0.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert!(cosine_similarity(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn parallel_scores_skip_prioritization() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let b1 = batch(&[1.0, 1.0], 0);
        let b2 = batch(&[9.0, 9.0], 10);
        let out = sdp_select(b1.clone(), b2.clone(), 0.5, &mut rng).unwrap();
        assert!(!out.prioritized);
        assert!(out.batch == b1 || out.batch == b2);
    }

    #[test]
    fn orthogonal_scores_keep_the_best() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = sdp_select(
            batch(&[10.0, 0.0], 0),
            batch(&[0.0, 10.0], 10),
            0.5,
            &mut rng,
        )
        .unwrap();
        assert!(out.prioritized);
        assert_eq!(out.zeta, 0.0);
        assert!(out.batch.iter().all(|t| t.rho == Some(10.0)));
        let mut ids: Vec<u64> = out.batch.iter().map(|t| t.episode_id).collect();
        ids.sort();
        assert_eq!(ids, vec![0, 11]);
    }

    #[test]
    fn mismatched_sizes_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sdp_select(batch(&[1.0], 0), batch(&[1.0, 2.0], 0), 0.5, &mut rng).is_err());
    }

    #[test]
    fn pending_scores_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut b1 = batch(&[1.0], 0);
        b1[0].rho = None;
        assert!(sdp_select(b1, batch(&[1.0], 0), 0.5, &mut rng).is_err());
    }

    #[test]
    fn ties_are_broken_at_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let scores = [1.0, 5.0, 5.0, 5.0];
        let mut hits = [0usize; 4];
        for _ in 0..30_000 {
            for i in top_k_indices(&scores, 2, &mut rng) {
                hits[i] += 1;
            }
        }
        assert_eq!(hits[0], 0);
        for h in &hits[1..] {
            assert!((*h as f64 / 20_000.0 - 1.0).abs() < 0.05, "{hits:?}");
        }
    }

    #[test]
    fn mixing_a_single_entry_batch_yields_latest() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (m, idx) = moo_mix(vec![1u8], 9, &mut rng).unwrap();
        assert_eq!((m, idx), (vec![9], 0));
    }

    #[test]
    fn mixing_replaces_by_index_not_by_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (m, _) = moo_mix(vec![4u8, 4, 4], 4, &mut rng).unwrap();
        assert_eq!(m.len(), 3);
        assert!(moo_mix(Vec::<u8>::new(), 1, &mut rng).is_err());
    }
}
