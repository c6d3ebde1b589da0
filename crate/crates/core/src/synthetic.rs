//! Seeded synthetic embedding sets for tests, examples and desk-scale experiments.

use crate::data::EmbeddingDataset;
use crate::numerics::{Matrix, RngStream};

/// Two isotropic unit-variance Gaussians whose means sit at `±separation/2` along the
/// all-ones direction. Labels are fair coin flips; class 1 is the positive side.
///
/// The Bayes error is `Φ(−separation/2)`.
pub fn two_gaussians(dim: usize, n: usize, separation: f64, seed: u64) -> EmbeddingDataset {
    let mut rng = RngStream::new(seed);
    let axis = 1.0 / (dim as f64).sqrt();
    let mut x = Matrix::zeros(n, dim);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = (rng.next_u64() >> 63) as u8;
        let shift = if y == 1 { separation / 2.0 } else { -separation / 2.0 };
        let row = x.row_mut(i);
        rng.fill_normal(row);
        row.iter_mut().for_each(|v| *v += shift * axis);
        labels.push(y);
    }
    EmbeddingDataset::new(x, Some(labels), format!("two_gaussians(d={dim}, sep={separation}, seed={seed})"))
        .expect("labels match rows")
}

/// A labeled set with label noise confined to one region, plus the region mask.
#[derive(Debug, Clone)]
pub struct NoisyRegionSet {
    pub dataset: EmbeddingDataset,
    /// `true` for rows drawn in the noisy region.
    pub noisy: Vec<bool>,
}

/// Two tight clean clusters at `±2` along the first axis (std 0.5), plus a dispersed region
/// holding `region_fraction` of the rows, centred 3 units away on the second axis with
/// std 1.5. Every label is the sign of the first coordinate, then exactly
/// `round(flip_fraction · region rows)` region labels are flipped.
pub fn noisy_region(dim: usize, n: usize, region_fraction: f64, flip_fraction: f64, seed: u64) -> NoisyRegionSet {
    assert!(dim >= 2, "noisy_region needs at least two dimensions");
    let mut rng = RngStream::new(seed);
    let n_region = ((n as f64) * region_fraction).round() as usize;
    let mut x = Matrix::zeros(n, dim);
    let mut labels = Vec::with_capacity(n);
    let mut noisy = Vec::with_capacity(n);
    for i in 0..n {
        let in_region = i < n_region;
        let row = x.row_mut(i);
        rng.fill_normal(row);
        if in_region {
            row.iter_mut().for_each(|v| *v *= 1.5);
            row[1] += 3.0;
        } else {
            row.iter_mut().for_each(|v| *v *= 0.5);
            row[0] += if rng.next_u64() >> 63 == 1 { 2.0 } else { -2.0 };
        }
        labels.push(u8::from(row[0] > 0.0));
        noisy.push(in_region);
    }
    let mut region: Vec<usize> = (0..n_region).collect();
    rng.shuffle(&mut region);
    let flips = ((n_region as f64) * flip_fraction).round() as usize;
    for &i in &region[..flips] {
        labels[i] ^= 1;
    }
    // interleave the region with the clean rows so splits see both
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let x = x.select_rows(&order);
    let labels = order.iter().map(|&i| labels[i]).collect();
    let noisy = order.iter().map(|&i| noisy[i]).collect();
    NoisyRegionSet {
        dataset: EmbeddingDataset::new(x, Some(labels), format!("noisy_region(d={dim}, seed={seed})"))
            .expect("labels match rows"),
        noisy,
    }
}
