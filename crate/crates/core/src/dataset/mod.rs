//! Training corpora: generation, text persistence, normalization, splits.

mod calib;
mod normalize;
mod param;
mod table;

pub use calib::{gen_calib_dataset, CalibDataset, CalibLink, CalibRow, CALIB_HEADER, DEFAULT_ED_RANGE, DEFAULT_PHI_RANGE};
pub use normalize::Normalizer;
pub use param::{gen_param_dataset, ConditionGrid, Node, ParamDataset, ParamGenConfig, ParamRow, Provenance, PARAM_HEADER};
pub use table::{fmt_f64, meta_comment, Record, Table};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded shuffle of `0..n` split into `(train, test)` index sets; the test
/// set holds `round(n * test_fraction)` indices.
pub fn split_indices(n: usize, test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = ((n as f64) * test_fraction.clamp(0.0, 1.0)).round() as usize;
    let train = idx.split_off(n_test);
    (train, idx)
}
