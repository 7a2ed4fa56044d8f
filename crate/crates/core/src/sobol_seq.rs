//! Sobol low-discrepancy points on the open unit cube.
//!
//! Direction numbers are the Joe-Kuo D(6) set (up to 1000 dimensions),
//! loaded once from the `sobol` crate's embedded table. Points are computed
//! by direct indexing — the value at index k is the XOR of the direction
//! numbers selected by the bits of the Gray code of k — so chunks of the
//! sequence can be generated independently and in parallel without a shared
//! cursor. The all-zeros point at index 0 is dropped; a nonzero seed applies
//! a per-dimension digital XOR scramble.

use nalgebra::DMatrix;
use once_cell::sync::Lazy;
use rand_core::RngCore;
use sobol::params::JoeKuoD6;
use sobol::Sobol;

use crate::error::{Error, Result};
use crate::stats::derive_seed;

static JOE_KUO: Lazy<JoeKuoD6> = Lazy::new(JoeKuoD6::standard);

const RESOLUTION: usize = 64;
const SCALE: f64 = 1.0 / 9_007_199_254_740_992.0; // 2^-53
const MIN_UNIT: f64 = SCALE; // smallest representable point coordinate

/// Maximum supported dimension of the direction-number table.
pub fn max_dimension() -> usize {
    JOE_KUO.max_dims
}

/// A seekable Sobol sequence over (0,1)^N with the origin dropped.
#[derive(Debug, Clone)]
pub struct SobolSequence {
    directions: Vec<Vec<u64>>,
    masks: Vec<u64>,
    dimension: usize,
}

impl SobolSequence {
    /// `seed = 0` gives the plain (unscrambled) sequence.
    pub fn new(dimension: usize, seed: u64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        if dimension > max_dimension() {
            return Err(Error::SobolDimension {
                requested: dimension,
                supported: max_dimension(),
            });
        }
        let directions =
            Sobol::<u64>::init_direction_vals::<u32>(dimension, RESOLUTION, &*JOE_KUO);
        let masks = if seed == 0 {
            vec![0u64; dimension]
        } else {
            let mut rng = crate::distributions::chacha(derive_seed(seed, "sobol-scramble"), 0);
            (0..dimension).map(|_| rng.next_u64()).collect()
        };
        Ok(SobolSequence {
            directions,
            masks,
            dimension,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Raw integer word of coordinate `dim` at sequence position `index`
    /// (position 0 is the first point after the dropped origin).
    fn word(&self, index: u64, dim: usize) -> u64 {
        let mut gray = (index + 1) ^ ((index + 1) >> 1);
        let mut x = self.masks[dim];
        let dirs = &self.directions[dim];
        let mut bit = 0usize;
        while gray != 0 {
            if gray & 1 == 1 {
                x ^= dirs[bit];
            }
            gray >>= 1;
            bit += 1;
        }
        x
    }

    /// Write point `index` into `out`; coordinates lie strictly inside (0,1).
    pub fn point_into(&self, index: u64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dimension);
        for (dim, slot) in out.iter_mut().enumerate() {
            let v = self.word(index, dim) >> 11;
            *slot = if v == 0 { MIN_UNIT } else { v as f64 * SCALE };
        }
    }
}

/// First `count` points of the sequence as a count x dimension matrix.
pub fn sobol_unit(count: usize, dimension: usize, seed: u64) -> Result<DMatrix<f64>> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be >= 1".into()));
    }
    let seq = SobolSequence::new(dimension, seed)?;
    let mut points = DMatrix::zeros(count, dimension);
    let mut row = vec![0.0; dimension];
    for l in 0..count {
        seq.point_into(l as u64, &mut row);
        for d in 0..dimension {
            points[(l, d)] = row[d];
        }
    }
    Ok(points)
}
