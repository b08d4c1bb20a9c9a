use crate::{Error, Result};

/// Per-column affine map onto `[0, 1]`, optionally after a base-10 log.
///
/// A column without spread maps to zero: its shift is the mean and its scale 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
    /// Columns that are log10-transformed before the affine step.
    pub log10: Vec<bool>,
}

impl Normalizer {
    /// Identity transform over `dim` columns.
    pub fn identity(dim: usize) -> Self {
        Normalizer {
            shift: vec![0.0; dim],
            scale: vec![1.0; dim],
            log10: vec![false; dim],
        }
    }

    /// Fits min-max scaling to the rows. `log10` marks columns transformed by
    /// log10 first; those must be strictly positive.
    pub fn fit(rows: &[Vec<f64>], log10: &[bool]) -> Result<Self> {
        let dim = log10.len();
        if rows.is_empty() {
            return Err(Error::domain("cannot fit a normalizer to no rows"));
        }
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        let mut sum = vec![0.0; dim];
        for row in rows {
            if row.len() != dim {
                return Err(Error::domain(format!("row has {} columns, expected {dim}", row.len())));
            }
            for j in 0..dim {
                let v = pre(row[j], log10[j])?;
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
                sum[j] += v;
            }
        }
        let n = rows.len() as f64;
        let (shift, scale) = (0..dim)
            .map(|j| if hi[j] > lo[j] { (lo[j], hi[j] - lo[j]) } else { (sum[j] / n, 1.0) })
            .unzip();
        Ok(Normalizer {
            shift,
            scale,
            log10: log10.to_vec(),
        })
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if self.scale.len() != dim || self.log10.len() != dim {
            return Err(Error::domain("normalizer columns disagree in length"));
        }
        if self.scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) || self.shift.iter().any(|s| !s.is_finite()) {
            return Err(Error::domain("normalizer needs finite shifts and positive scales"));
        }
        Ok(())
    }

    pub fn normalize(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        (0..x.len())
            .map(|j| Ok((pre(x[j], self.log10[j])? - self.shift[j]) / self.scale[j]))
            .collect()
    }

    pub fn denormalize(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_len(y)?;
        Ok((0..y.len())
            .map(|j| {
                let v = y[j] * self.scale[j] + self.shift[j];
                if self.log10[j] {
                    10f64.powf(v)
                } else {
                    v
                }
            })
            .collect())
    }

    /// Whether `x` lies inside the box the normalizer was fitted on.
    pub fn covers(&self, x: &[f64]) -> bool {
        self.normalize(x)
            .map(|u| u.iter().zip(&self.scale).all(|(v, s)| (*s == 1.0 && *v == 0.0) || (-1e-9..=1.0 + 1e-9).contains(v)))
            .unwrap_or(false)
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::domain(format!("expected {} columns, got {}", self.dim(), x.len())));
        }
        Ok(())
    }
}

fn pre(v: f64, log: bool) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::domain("non-finite value"));
    }
    if log {
        if v <= 0.0 {
            return Err(Error::domain(format!("log-scaled column needs positive values, got {v}")));
        }
        Ok(v.log10())
    } else {
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn spans_unit_interval() {
        let rows = vec![vec![0.0], vec![10.0], vec![5.0]];
        let n = Normalizer::fit(&rows, &[false]).unwrap();
        assert_eq!(n.normalize(&[0.0]).unwrap(), vec![0.0]);
        assert_eq!(n.normalize(&[10.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let rows = vec![vec![3.5]; 4];
        let n = Normalizer::fit(&rows, &[false]).unwrap();
        assert_eq!(n.scale, vec![1.0]);
        assert_eq!(n.normalize(&[3.5]).unwrap(), vec![0.0]);
        assert_eq!(n.denormalize(&[0.0]).unwrap(), vec![3.5]);
    }

    #[test]
    fn round_trip_is_tight() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|_| vec![rng.gen_range(-50.0..50.0), rng.gen_range(1e-9..1e-2)])
            .collect();
        let n = Normalizer::fit(&rows, &[false, true]).unwrap();
        for r in &rows {
            let u = n.normalize(r).unwrap();
            assert!(u.iter().all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
            let back = n.denormalize(&u).unwrap();
            assert!((back[0] - r[0]).abs() < 1e-12);
            assert!((back[1] - r[1]).abs() < 1e-12 * r[1].max(1.0));
        }
    }

    #[test]
    fn log_column_rejects_nonpositive() {
        assert!(Normalizer::fit(&[vec![0.0]], &[true]).is_err());
    }
}
