//! Clustering of "not yes" option phrases.
//!
//! Each phrase is reduced to its sorted stemmed tokens before embedding, so
//! phrases that differ only in word order, case, punctuation or inflection
//! ("Read more", "more reading") land on the same vector and therefore in the
//! same cluster. K-means runs in the full embedding space; PCA is fitted on
//! the same vectors only to produce plot coordinates. Clusters are numbered
//! by ascending first principal coordinate of their centroid.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::embed::{Embedder, EmbeddingVector, HashingEmbedder};
use crate::error::{Error, Result};
use crate::kmeans::{fit_kmeans_with, KMeansModel, KMeansParams};
use crate::pca::{fit_pca, project_2d, PcaModel};
use crate::text::stemmed_multiset;

pub const DEFAULT_CLUSTERS: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub phrase: String,
    pub cluster_id: usize,
    pub projected_xy: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhraseClustering {
    /// One entry per input phrase, in input order.
    pub assignments: Vec<ClusterAssignment>,
    pub kmeans: KMeansModel,
    pub pca: PcaModel,
}

impl PhraseClustering {
    /// Plot coordinates of every centroid.
    pub fn centroid_xy(&self) -> Vec<[f64; 2]> {
        self.kmeans
            .centroids
            .iter()
            .map(|c| project_2d(&self.pca, c).expect("centroid dimension"))
            .collect()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.kmeans.k];
        for a in &self.assignments {
            sizes[a.cluster_id] += 1;
        }
        sizes
    }
}

/// Order-insensitive canonical form: sorted Porter stems joined by spaces.
pub fn canonical_phrase(phrase: &str) -> String {
    stemmed_multiset(phrase).join(" ")
}

pub fn cluster_phrases(phrases: &[String], k: usize, seed: u64) -> Result<PhraseClustering> {
    cluster_phrases_with(&HashingEmbedder, phrases, &KMeansParams::new(k), seed)
}

pub fn cluster_phrases_with(
    embedder: &dyn Embedder,
    phrases: &[String],
    params: &KMeansParams,
    seed: u64,
) -> Result<PhraseClustering> {
    let canonical: Vec<String> = phrases.iter().map(|p| canonical_phrase(p)).collect();
    let unique: BTreeSet<&str> = canonical.iter().map(String::as_str).collect();
    if unique.len() < params.k {
        return Err(Error::TooFewPoints {
            needed: params.k,
            got: unique.len(),
        });
    }
    let vectors: Vec<EmbeddingVector> = canonical.iter().map(|c| embedder.embed(c)).collect();
    let mut kmeans = fit_kmeans_with(&vectors, params, seed)?;
    let pca = fit_pca(&vectors, 2)?;

    let xs: Vec<f64> = kmeans
        .centroids
        .iter()
        .map(|c| pca.project(c).map(|p| p[0]))
        .collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..kmeans.k).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]).then(a.cmp(&b)));
    kmeans.permute(&order);

    let assignments = phrases
        .iter()
        .zip(&vectors)
        .map(|(phrase, v)| {
            Ok(ClusterAssignment {
                phrase: phrase.clone(),
                cluster_id: kmeans.assign(v.values())?,
                projected_xy: project_2d(&pca, v.values())?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(PhraseClustering {
        assignments,
        kmeans,
        pca,
    })
}
