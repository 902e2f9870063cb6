//! A lookup-table predictor over the same neighborhood features as the
//! network: for every observed binary context it counts, per child slot, how
//! often the slot was occupied versus empty. It serves as a capacity
//! reference — the table memorizes exact contexts, so comparing the network
//! against it shows how much the compact parameter set gives up.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::patterns::InterpolationPatterns;
use crate::srnet::OUT_DIM;

/// Per-context occupancy counts: `counts[key][k] = (occupied, empty)` over
/// all training rows whose packed feature vector equals `key`.
#[derive(Debug, Clone)]
pub struct LutTable {
    counts: HashMap<u128, [(u32, u32); OUT_DIM]>,
    width: usize,
}

impl LutTable {
    pub fn contexts(&self) -> usize {
        self.counts.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn counts_for(&self, key: u128) -> Option<&[(u32, u32); OUT_DIM]> {
        self.counts.get(&key)
    }
}

/// Tallies child occupancy per distinct feature vector.
pub fn build_lut(features: &FeatureMatrix, patterns: &InterpolationPatterns) -> Result<LutTable> {
    if features.rows() != patterns.len() {
        return Err(Error::LengthMismatch {
            expected: features.rows(),
            got: patterns.len(),
        });
    }
    let mut counts: HashMap<u128, [(u32, u32); OUT_DIM]> = HashMap::new();
    for (j, mask) in patterns.masks().iter().enumerate() {
        let entry = counts
            .entry(features.packed_key(j))
            .or_insert([(0, 0); OUT_DIM]);
        for (k, slot) in entry.iter_mut().enumerate() {
            if (mask >> k) & 1 == 1 {
                slot.0 += 1;
            } else {
                slot.1 += 1;
            }
        }
    }
    Ok(LutTable {
        counts,
        width: features.width(),
    })
}

/// Majority-vote prediction for one packed feature vector.
///
/// A child bit is set when its occupied count is at least its empty count
/// (ties go to occupied). Unseen contexts fall back to the first child; a
/// zero mask falls back to the child with the highest occupancy ratio
/// (lowest index on ties), mirroring the network's non-empty guarantee.
pub fn lut_predict(table: &LutTable, key: u128) -> u8 {
    let Some(counts) = table.counts_for(key) else {
        return 0b0000_0001;
    };
    let mut mask = 0u8;
    for (k, &(occ, emp)) in counts.iter().enumerate() {
        if occ >= emp {
            mask |= 1 << k;
        }
    }
    if mask == 0 {
        let mut best = 0usize;
        let ratio = |(occ, emp): (u32, u32)| occ as f64 / (occ + emp).max(1) as f64;
        for k in 1..OUT_DIM {
            if ratio(counts[k]) > ratio(counts[best]) {
                best = k;
            }
        }
        mask = 1 << best;
    }
    mask
}

/// Applies [`lut_predict`] to every row of a feature matrix.
pub fn lut_predict_all(table: &LutTable, features: &FeatureMatrix) -> InterpolationPatterns {
    let masks = (0..features.rows())
        .map(|j| lut_predict(table, features.packed_key(j)))
        .collect();
    InterpolationPatterns::new(masks)
}

/// Fraction of child bits predicted correctly, averaged over all rows and
/// all 8 slots.
pub fn per_bit_accuracy(predicted: &InterpolationPatterns, truth: &InterpolationPatterns) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            got: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let mut correct = 0u64;
    for (p, t) in predicted.masks().iter().zip(truth.masks()) {
        correct += (!(p ^ t)).count_ones() as u64;
    }
    Ok(correct as f64 / (OUT_DIM * truth.len()) as f64)
}
