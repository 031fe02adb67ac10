//! Principal component analysis for plotting embeddings in two dimensions.
//!
//! Components are the leading eigenvectors of the sample covariance
//! (denominator `n - 1`). When there are fewer points than dimensions the
//! eigenproblem is solved on the `n x n` Gram matrix instead and mapped back,
//! which gives the same components at a fraction of the cost. Each component
//! is signed so that its largest-magnitude entry is positive.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Orthonormal rows, ordered by decreasing explained variance.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    /// Set when every input point was identical; components are then the
    /// leading standard basis vectors.
    pub degenerate: bool,
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Coordinates of `point` along every component.
    pub fn project(&self, point: &[f64]) -> Result<Vec<f64>> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: point.len(),
            });
        }
        Ok(self
            .components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(point.iter().zip(&self.mean))
                    .map(|(w, (x, m))| w * (x - m))
                    .sum()
            })
            .collect())
    }

    /// Maps component coordinates back to the input space.
    pub fn reconstruct(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, &a) in self.components.iter().zip(coords) {
            for (o, w) in out.iter_mut().zip(c) {
                *o += a * w;
            }
        }
        out
    }
}

/// First two principal coordinates of `point`.
pub fn project_2d(model: &PcaModel, point: &[f64]) -> Result<[f64; 2]> {
    if model.components.len() < 2 {
        return Err(Error::InvalidHyperparameter(
            "model has fewer than two components".into(),
        ));
    }
    let p = model.project(point)?;
    Ok([p[0], p[1]])
}

pub fn fit_pca<P: AsRef<[f64]>>(points: &[P], m: usize) -> Result<PcaModel> {
    let n = points.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let d = points[0].as_ref().len();
    if let Some(bad) = points.iter().find(|p| p.as_ref().len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: bad.as_ref().len(),
        });
    }
    if m == 0 || m > d {
        return Err(Error::InvalidHyperparameter(format!(
            "component count {m} must be in 1..={d}"
        )));
    }

    let mut mean = vec![0.0; d];
    for p in points {
        for (s, v) in mean.iter_mut().zip(p.as_ref()) {
            *s += v;
        }
    }
    mean.iter_mut().for_each(|s| *s /= n as f64);

    let first = points[0].as_ref();
    if points.iter().all(|p| p.as_ref() == first) {
        let components = (0..m)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        return Ok(PcaModel {
            mean,
            components,
            explained_variance: vec![0.0; m],
            degenerate: true,
        });
    }

    let centered = DMatrix::from_fn(n, d, |i, j| points[i].as_ref()[j] - mean[j]);
    let (mut components, explained_variance) = if n <= d {
        match gram_route(&centered, m) {
            Some(r) => r,
            None => covariance_route(&centered, m),
        }
    } else {
        covariance_route(&centered, m)
    };
    components.iter_mut().for_each(|c| orient(c));
    Ok(PcaModel {
        mean,
        components,
        explained_variance,
        degenerate: false,
    })
}

/// Eigenpairs sorted by decreasing eigenvalue (stable on ties).
fn sorted_eigen(sym: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

fn covariance_route(x: &DMatrix<f64>, m: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = x.nrows();
    let cov = (x.transpose() * x) / (n as f64 - 1.0);
    let (values, vectors) = sorted_eigen(cov);
    let components = (0..m).map(|c| vectors.column(c).iter().copied().collect()).collect();
    let variance = values[..m].iter().map(|v| v.max(0.0)).collect();
    (components, variance)
}

/// Components as `X^T u / sqrt((n-1) λ)` from the Gram matrix `X X^T`.
/// Declines (returns `None`) when a requested eigenvalue is too small for
/// the mapping to stay orthonormal.
fn gram_route(x: &DMatrix<f64>, m: usize) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
    let n = x.nrows();
    if m > n - 1 {
        return None;
    }
    let gram = (x * x.transpose()) / (n as f64 - 1.0);
    let (values, vectors) = sorted_eigen(gram);
    if values[m - 1] <= 1e-10 * values[0].max(f64::MIN_POSITIVE) {
        return None;
    }
    let mut components = Vec::with_capacity(m);
    for c in 0..m {
        let u = vectors.column(c);
        let scale = ((n as f64 - 1.0) * values[c]).sqrt();
        let v = x.transpose() * u / scale;
        components.push(v.iter().copied().collect());
    }
    Some((components, values[..m].to_vec()))
}

/// Flips `v` so its largest-magnitude entry (first on ties) is positive.
fn orient(v: &mut [f64]) {
    let mut idx = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[idx].abs() {
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}
