pub mod bench;
pub mod calibrate;
pub mod gen_dataset;
pub mod netsim;
pub mod predict;
pub mod simulate;
pub mod train;

use mdinet::{Error, Result};

/// Broadcasts single values so that every list has length `n`.
pub(crate) fn broadcast(name: &str, v: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; n]),
        k if k == n => Ok(v),
        k => Err(Error::Config(format!("`{name}` has {k} values, expected 1 or {n}"))),
    }
}
