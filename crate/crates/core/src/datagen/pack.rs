use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::bins::EvidenceBins;
use super::CorruptionOutput;
use crate::error::{Error, Result};
use crate::types::{Query, TokenUsage, TrainingInstance, PACKED_EVIDENCE};

/// Per-item seed derived from the run seed and a stable key, so results do not
/// depend on processing order.
pub fn derive_seed(global_seed: u64, key: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(global_seed.to_le_bytes());
    h.update(key.as_bytes());
    let digest = h.finalize();
    let mut word = [0u8; 8];
    word.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(word)
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform over {1, 2, 3}.
pub fn sample_num_corruptions<R: Rng + ?Sized>(rng: &mut R) -> u32 {
    rng.random_range(1..=3)
}

/// Packs gold evidence plus randomly sampled negatives into exactly
/// [`PACKED_EVIDENCE`] snippets.
///
/// When gold and negatives together are too few, the lowest-scoring negative
/// (or, with no negatives, the lowest-scoring gold) is repeated and the
/// instance is flagged as padded.
pub fn pack_instance(
    seed_query: &Query,
    bins: &EvidenceBins,
    clean: &str,
    corruption: &CorruptionOutput,
    seed: u64,
) -> Result<TrainingInstance> {
    if bins.gold.is_empty() {
        return Err(Error::NoGold {
            threshold: bins.threshold,
        });
    }
    let gold: Vec<_> = bins
        .gold
        .iter()
        .take(PACKED_EVIDENCE)
        .map(|s| s.snippet.clone())
        .collect();
    let negatives: Vec<_> = bins.negatives.iter().map(|s| s.snippet.clone()).collect();

    let mut packed = gold.clone();
    let need = PACKED_EVIDENCE - packed.len();
    let mut padded = false;
    if need > 0 {
        if negatives.len() >= need {
            let mut rng = seeded_rng(seed);
            for i in index::sample(&mut rng, negatives.len(), need) {
                packed.push(negatives[i].clone());
            }
        } else {
            packed.extend(negatives.iter().cloned());
            let filler = negatives.last().or(gold.last()).cloned().expect("gold is non-empty");
            while packed.len() < PACKED_EVIDENCE {
                packed.push(filler.clone());
            }
            padded = true;
        }
    }

    Ok(TrainingInstance {
        id: seed_query.id.clone(),
        seed_query: seed_query.clone(),
        clean: clean.to_string(),
        corrupted: corruption.corrupted.clone(),
        gold,
        negatives,
        packed,
        corruption_reasoning: corruption.reasoning.clone(),
        num_corruptions: corruption.num_corruptions,
        padded,
        token_usage: TokenUsage::default(),
    })
}
