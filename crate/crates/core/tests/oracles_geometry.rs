//! Independent oracles for k-means, PCA and the hashing embedder.

use darkbanner::embed::{embed_text, EMBEDDING_DIM};
use darkbanner::kmeans::fit_kmeans;
use darkbanner::pca::{fit_pca, project_2d};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Minimum k = 2 inertia by enumerating every 2-partition.
pub fn brute_force_two_means(points: &[Vec<f64>]) -> f64 {
    let n = points.len();
    let d = points[0].len();
    let cost = |members: &[&Vec<f64>]| -> f64 {
        let mut mean = vec![0.0; d];
        for p in members {
            for j in 0..d {
                mean[j] += p[j] / members.len() as f64;
            }
        }
        members
            .iter()
            .map(|p| (0..d).map(|j| (p[j] - mean[j]).powi(2)).sum::<f64>())
            .sum()
    };
    let mut best = f64::INFINITY;
    // Fix point 0 in group A; every mask over the rest with B non-empty.
    for mask in 0u32..(1 << (n - 1)) {
        let (mut a, mut b) = (vec![&points[0]], vec![]);
        for i in 1..n {
            if mask >> (i - 1) & 1 == 1 {
                b.push(&points[i]);
            } else {
                a.push(&points[i]);
            }
        }
        if b.is_empty() {
            continue;
        }
        best = best.min(cost(&a) + cost(&b));
    }
    best
}

fn random_points(rng: &mut ChaCha20Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-10.0..10.0)).collect())
        .collect()
}

pub fn kmeans_matches_brute_force_partitions() {
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    for case in 0..100 {
        let n = rng.random_range(3..=8);
        let d = rng.random_range(1..=3);
        let pts = random_points(&mut rng, n, d);
        let model = fit_kmeans(&pts, 2, case).unwrap();
        let optimum = brute_force_two_means(&pts);
        assert!(
            (model.inertia - optimum).abs() <= 1e-9 * optimum.max(1.0),
            "case {case}: kmeans {} vs optimum {optimum}",
            model.inertia
        );
    }
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Returns
/// eigenvalues and eigenvectors (as columns of `v`).
pub fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

fn covariance(points: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = points.len() as f64;
    let d = points[0].len();
    let mean: Vec<f64> = (0..d).map(|j| points.iter().map(|p| p[j]).sum::<f64>() / n).collect();
    let mut cov = vec![vec![0.0; d]; d];
    for p in points {
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += (p[i] - mean[i]) * (p[j] - mean[j]) / (n - 1.0);
            }
        }
    }
    (mean, cov)
}

pub fn pca_matches_jacobi_oracle() {
    let mut rng = ChaCha20Rng::seed_from_u64(77);
    for case in 0..100 {
        let d = rng.random_range(3..=6);
        let n = rng.random_range(d + 1..=d + 8);
        let pts = random_points(&mut rng, n, d);
        let (_, cov) = covariance(&pts);
        let (vals, vecs) = jacobi_eigen(cov);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));

        let model = fit_pca(&pts, d).unwrap();
        for (rank, &col) in order.iter().enumerate() {
            let oracle: Vec<f64> = (0..d).map(|r| vecs[r][col]).collect();
            let got = &model.components[rank];
            let dot: f64 = oracle.iter().zip(got).map(|(a, b)| a * b).sum();
            let sign = dot.signum();
            for j in 0..d {
                assert!(
                    (got[j] - sign * oracle[j]).abs() < 1e-8,
                    "case {case} component {rank}: {got:?} vs {oracle:?}"
                );
            }
            assert!((model.explained_variance[rank] - vals[col]).abs() < 1e-8);
        }
    }
}

pub fn pca_small_random_set_against_oracle() {
    // The 5-point 3-D example, two components.
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let pts = random_points(&mut rng, 5, 3);
    let (_, cov) = covariance(&pts);
    let (vals, vecs) = jacobi_eigen(cov);
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let model = fit_pca(&pts, 2).unwrap();
    for rank in 0..2 {
        let col = order[rank];
        let dot: f64 = (0..3).map(|r| vecs[r][col] * model.components[rank][r]).sum();
        assert!((dot.abs() - 1.0).abs() < 1e-8);
    }
}

pub fn pca_invariants_and_reconstruction() {
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    for _ in 0..50 {
        let d = rng.random_range(2..=6);
        let n = rng.random_range(2..=12);
        let pts = random_points(&mut rng, n, d);
        let m = fit_pca(&pts, d).unwrap();
        for a in 0..d {
            for b in 0..d {
                let dot: f64 = m.components[a].iter().zip(&m.components[b]).map(|(x, y)| x * y).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() <= 1e-8, "dot({a},{b}) = {dot}");
            }
        }
        assert!(m.explained_variance.windows(2).all(|w| w[0] >= w[1]));
        for p in &pts {
            let back = m.reconstruct(&m.project(p).unwrap());
            for j in 0..d {
                assert!((back[j] - p[j]).abs() < 1e-8);
            }
        }
    }
}

pub fn projection_equals_dense_product() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let pts = random_points(&mut rng, 9, 4);
    let m = fit_pca(&pts, 2).unwrap();
    let q: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
    let xy = project_2d(&m, &q).unwrap();
    for c in 0..2 {
        let mut acc = 0.0;
        for j in 0..4 {
            acc += (q[j] - m.mean[j]) * m.components[c][j];
        }
        assert!((xy[c] - acc).abs() < 1e-10);
    }
}

/// Straight re-execution of the hashing rule: FNV-1a 64, bucket h % 512,
/// sign from bit 32, unigrams `w:` and space-joined char 3-grams `c:`.
fn hand_hashed(tokens: &[&str]) -> Vec<f64> {
    let fnv = |s: &str| {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in s.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    };
    let mut v = vec![0.0; EMBEDDING_DIM];
    let mut add = |key: String| {
        let h = fnv(&key);
        v[(h % 512) as usize] += if (h >> 32) & 1 == 0 { 1.0 } else { -1.0 };
    };
    for t in tokens {
        add(format!("w:{t}"));
    }
    let joined: Vec<char> = tokens.join(" ").chars().collect();
    for i in 0..joined.len().saturating_sub(2) {
        add(format!("c:{}", joined[i..i + 3].iter().collect::<String>()));
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / norm).collect()
}

pub fn embedding_matches_hand_hashing_and_word_order_matters() {
    let a = hand_hashed(&["read", "more"]);
    let b = hand_hashed(&["more", "read"]);
    assert_eq!(embed_text("read more").values(), a.as_slice());
    assert_eq!(embed_text("more read").values(), b.as_slice());
    let cos: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    assert!(cos < 1.0 - 1e-6, "cosine {cos}");
    assert!(cos > 0.0);
}

mod tests {
    #[test]
    fn kmeans_matches_brute_force_partitions() {
        super::kmeans_matches_brute_force_partitions();
    }

    #[test]
    fn pca_matches_jacobi_oracle() {
        super::pca_matches_jacobi_oracle();
    }

    #[test]
    fn pca_small_random_set_against_oracle() {
        super::pca_small_random_set_against_oracle();
    }

    #[test]
    fn pca_invariants_and_reconstruction() {
        super::pca_invariants_and_reconstruction();
    }

    #[test]
    fn projection_equals_dense_product() {
        super::projection_equals_dense_product();
    }

    #[test]
    fn embedding_matches_hand_hashing_and_word_order_matters() {
        super::embedding_matches_hand_hashing_and_word_order_matters();
    }
}
