//! Lloyd's k-means with k-means++ seeding and seeded restarts.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub k: usize,
    pub restarts: usize,
    pub max_iter: usize,
    /// Converged once no centroid moves farther than this.
    pub tol: f64,
}

impl KMeansParams {
    pub fn new(k: usize) -> Self {
        KMeansParams {
            k,
            restarts: 10,
            max_iter: 300,
            tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances from each point to its nearest centroid.
    pub inertia: f64,
    pub seed: u64,
    pub iterations_run: usize,
    /// Inertia after each assignment step of the winning restart.
    pub inertia_history: Vec<f64>,
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid and its squared distance; ties go to the
/// lowest index.
fn nearest(centroids: &[Vec<f64>], p: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(c, p);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

impl KMeansModel {
    pub fn dim(&self) -> usize {
        self.centroids.first().map_or(0, Vec::len)
    }

    pub fn assign(&self, point: &[f64]) -> Result<usize> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: point.len(),
            });
        }
        Ok(nearest(&self.centroids, point).0)
    }

    pub fn labels<P: AsRef<[f64]>>(&self, points: &[P]) -> Result<Vec<usize>> {
        points.iter().map(|p| self.assign(p.as_ref())).collect()
    }

    /// Reorders clusters so that new cluster `i` is old cluster `order[i]`.
    pub fn permute(&mut self, order: &[usize]) {
        self.centroids = order.iter().map(|&i| self.centroids[i].clone()).collect();
    }
}

/// Argmin squared distance over the model's centroids, lowest index on ties.
pub fn assign_cluster(model: &KMeansModel, point: &[f64]) -> Result<usize> {
    model.assign(point)
}

pub fn fit_kmeans<P: AsRef<[f64]> + Sync>(points: &[P], k: usize, seed: u64) -> Result<KMeansModel> {
    fit_kmeans_with(points, &KMeansParams::new(k), seed)
}

pub fn fit_kmeans_with<P: AsRef<[f64]> + Sync>(
    points: &[P],
    params: &KMeansParams,
    seed: u64,
) -> Result<KMeansModel> {
    if params.k == 0 || params.restarts == 0 || params.max_iter == 0 {
        return Err(Error::InvalidHyperparameter(
            "k, restarts and max_iter must be at least 1".into(),
        ));
    }
    let pts: Vec<&[f64]> = points.iter().map(AsRef::as_ref).collect();
    let dim = pts.first().map_or(0, |p| p.len());
    if let Some(bad) = pts.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: bad.len(),
        });
    }
    let distinct = count_distinct(&pts);
    if distinct < params.k {
        return Err(Error::TooFewPoints {
            needed: params.k,
            got: distinct,
        });
    }

    let runs: Vec<Run> = (0..params.restarts)
        .into_par_iter()
        .map(|r| lloyd(&pts, params, &mut rng::stream(seed, r as u64)))
        .collect();
    let best = runs
        .into_iter()
        .reduce(|best, run| if run.inertia < best.inertia { run } else { best })
        .expect("at least one restart");
    Ok(KMeansModel {
        k: params.k,
        centroids: best.centroids,
        inertia: best.inertia,
        seed,
        iterations_run: best.iterations,
        inertia_history: best.history,
    })
}

fn count_distinct(pts: &[&[f64]]) -> usize {
    let mut keys: Vec<Vec<u64>> = pts
        .iter()
        .map(|p| p.iter().map(|v| (v + 0.0).to_bits()).collect())
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

struct Run {
    centroids: Vec<Vec<f64>>,
    inertia: f64,
    iterations: usize,
    history: Vec<f64>,
}

fn kmeans_plus_plus(pts: &[&[f64]], k: usize, rng: &mut rng::Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![pts[rng.random_range(0..pts.len())].to_vec()];
    let mut d2: Vec<f64> = pts.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let next = WeightedIndex::new(&d2)
            .expect("distinct points leave positive weight")
            .sample(rng);
        let c = pts[next].to_vec();
        for (d, p) in d2.iter_mut().zip(pts) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn lloyd(pts: &[&[f64]], params: &KMeansParams, rng: &mut rng::Rng) -> Run {
    let dim = pts[0].len();
    let mut centroids = kmeans_plus_plus(pts, params.k, rng);
    let mut history = Vec::new();
    let mut iterations = 0;
    for _ in 0..params.max_iter {
        iterations += 1;
        let assigned: Vec<(usize, f64)> = pts.iter().map(|p| nearest(&centroids, p)).collect();
        history.push(assigned.iter().map(|a| a.1).sum());

        let mut sums = vec![vec![0.0; dim]; params.k];
        let mut counts = vec![0usize; params.k];
        for (p, &(c, _)) in pts.iter().zip(&assigned) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p.iter()) {
                *s += v;
            }
        }
        let mut next = centroids.clone();
        for c in 0..params.k {
            if counts[c] > 0 {
                next[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        // An empty cluster takes over the point farthest from its centroid.
        for c in (0..params.k).filter(|&c| counts[c] == 0) {
            let far = assigned
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &(_, d))| if d > best.1 { (i, d) } else { best })
                .0;
            next[c] = pts[far].to_vec();
        }
        let shift = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        if shift < params.tol {
            break;
        }
    }
    let inertia = pts.iter().map(|p| nearest(&centroids, p).1).sum();
    history.push(inertia);
    Run {
        centroids,
        inertia,
        iterations,
        history,
    }
}
