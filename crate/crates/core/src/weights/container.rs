//! Grid-sampled weights and their JSON container.
//!
//! Layout:
//!
//! ```json
//! { "n": 1, "m": 2, "shape": [4], "lower": [-0.5], "upper": [0.5],
//!   "entries": [[re, im], ...] }
//! ```
//!
//! `entries` holds, for every node in row-major order (last axis fastest),
//! the `m x m` matrix in row-major order. Node `i` represents the cell
//! `lower + h [i, i + 1)`; evaluation is piecewise constant.

use crate::error::{Error, Result};
use crate::linalg::{HermitianMatrix, Matrix, PositiveMatrix, C64};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampledRecord {
    n: usize,
    m: usize,
    shape: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    entries: Vec<[f64; 2]>,
}

/// Positive matrices on a uniform cell grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SampledRecord", into = "SampledRecord")]
pub struct SampledWeight {
    m: usize,
    shape: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    nodes: Vec<PositiveMatrix>,
}

impl TryFrom<SampledRecord> for SampledWeight {
    type Error = Error;
    fn try_from(r: SampledRecord) -> Result<Self> {
        if r.shape.len() != r.n || r.lower.len() != r.n || r.upper.len() != r.n {
            return Err(Error::Format("shape/lower/upper must have n entries".into()));
        }
        if r.lower.iter().zip(&r.upper).any(|(a, b)| a >= b) || r.shape.iter().any(|&s| s == 0) {
            return Err(Error::Format("empty sampling box".into()));
        }
        let count: usize = r.shape.iter().product();
        if r.m == 0 || r.m > crate::linalg::MAX_DIM || r.entries.len() != count * r.m * r.m {
            return Err(Error::Format(format!("expected {} entries, found {}", count * r.m * r.m, r.entries.len())));
        }
        let nodes = r
            .entries
            .chunks(r.m * r.m)
            .map(|c| {
                let mut a = Matrix::zeros(r.m);
                for (k, e) in c.iter().enumerate() {
                    a.set(k / r.m, k % r.m, C64::new(e[0], e[1]));
                }
                PositiveMatrix::new(HermitianMatrix::new(a)?)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SampledWeight { m: r.m, shape: r.shape, lower: r.lower, upper: r.upper, nodes })
    }
}

impl From<SampledWeight> for SampledRecord {
    fn from(s: SampledWeight) -> Self {
        let mut entries = Vec::with_capacity(s.nodes.len() * s.m * s.m);
        for p in &s.nodes {
            for i in 0..s.m {
                for j in 0..s.m {
                    let z = p.matrix().get(i, j);
                    entries.push([z.re, z.im]);
                }
            }
        }
        SampledRecord { n: s.shape.len(), m: s.m, shape: s.shape, lower: s.lower, upper: s.upper, entries }
    }
}

impl SampledWeight {
    /// Samples `f` at cell midpoints.
    pub fn from_fn(
        m: usize,
        shape: Vec<usize>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        f: impl Fn(&[f64]) -> Result<PositiveMatrix>,
    ) -> Result<Self> {
        let n = shape.len();
        let count: usize = shape.iter().product();
        let mut nodes = Vec::with_capacity(count);
        for flat in 0..count {
            let mut rem = flat;
            let mut x = vec![0.0; n];
            for d in (0..n).rev() {
                let i = rem % shape[d];
                rem /= shape[d];
                let h = (upper[d] - lower[d]) / shape[d] as f64;
                x[d] = lower[d] + (i as f64 + 0.5) * h;
            }
            let p = f(&x)?;
            if p.dim() != m {
                return Err(Error::Dimension(p.dim()));
            }
            nodes.push(p);
        }
        Ok(SampledWeight { m, shape, lower, upper, nodes })
    }

    pub fn n(&self) -> usize {
        self.shape.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Matrix of the cell containing `x` (clamped at the box edges).
    pub fn at(&self, x: &[f64]) -> &PositiveMatrix {
        let mut flat = 0usize;
        for d in 0..self.n() {
            let h = (self.upper[d] - self.lower[d]) / self.shape[d] as f64;
            let i = ((x[d] - self.lower[d]) / h).floor();
            let i = (i.max(0.0) as usize).min(self.shape[d] - 1);
            flat = flat * self.shape[d] + i;
        }
        &self.nodes[flat]
    }

    pub fn map(&self, f: impl Fn(&PositiveMatrix) -> Result<PositiveMatrix>) -> Result<Self> {
        Ok(SampledWeight {
            m: self.m,
            shape: self.shape.clone(),
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            nodes: self.nodes.iter().map(f).collect::<Result<Vec<_>>>()?,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{MatrixWeight, WeightKind};

    fn sample() -> SampledWeight {
        SampledWeight::from_fn(2, vec![8], vec![-0.5], vec![0.5], |x| {
            Ok(PositiveMatrix::from_spectrum(Matrix::identity(2), &[1.0 + x[0] * x[0], 2.0])?)
        })
        .unwrap()
    }

    #[test]
    fn round_trip() {
        let s = sample();
        let back = SampledWeight::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back.shape(), s.shape());
        for x in [-0.49, -0.1, 0.0, 0.33] {
            assert!((*back.at(&[x]).matrix() - *s.at(&[x]).matrix()).frobenius() < 1e-15);
        }
    }

    #[test]
    fn piecewise_constant_lookup() {
        let s = sample();
        let a = s.at(&[0.01]).matrix().get(0, 0).re;
        assert!((a - (1.0 + 0.0625f64.powi(2))).abs() < 1e-15);
        // Clamped outside.
        assert_eq!(s.at(&[9.0]).matrix(), s.at(&[0.49]).matrix());
    }

    #[test]
    fn rejects_bad_containers() {
        assert!(SampledWeight::from_json(r#"{"n":1,"m":1,"shape":[2],"lower":[0],"upper":[1],"entries":[[1,0]]}"#).is_err());
        assert!(SampledWeight::from_json(r#"{"n":1,"m":1,"shape":[1],"lower":[0],"upper":[1],"entries":[[-1,0]]}"#).is_err());
        assert!(SampledWeight::from_json(r#"{"n":1,"m":1,"shape":[1],"lower":[0],"upper":[1],"entries":[[1,0]],"x":1}"#).is_err());
    }

    #[test]
    fn usable_as_weight() {
        let w = MatrixWeight::new(1, 2, WeightKind::GridSampled { samples: sample() }).unwrap();
        let v = w.evaluate(&[0.3]).unwrap();
        assert!((v.matrix().get(1, 1).re - 2.0).abs() < 1e-15);
        let json = serde_json::to_string(&w).unwrap();
        let back: MatrixWeight = serde_json::from_str(&json).unwrap();
        assert_eq!(back.n, 1);
    }
}
