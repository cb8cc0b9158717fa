//! K-medoids clustering, silhouette model selection and matching matrices.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::AnalysisError;

pub type Point = [f64; 2];

pub fn distance(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub k: usize,
    /// Indices of the medoid points, ascending; cluster `c` has medoid `medoids[c]`.
    pub medoids: Vec<usize>,
    pub assignment: Vec<usize>,
    pub silhouette: f64,
    /// Sum of distances from every point to its medoid.
    pub objective: f64,
    /// Objective after BUILD and after each accepted SWAP.
    pub objective_trace: Vec<f64>,
}

fn nearest(d: &[Vec<f64>], medoids: &[usize], j: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, &m) in medoids.iter().enumerate() {
        if d[j][m] < best.1 {
            best = (c, d[j][m]);
        }
    }
    best
}

fn total_cost(d: &[Vec<f64>], medoids: &[usize]) -> f64 {
    (0..d.len()).map(|j| nearest(d, medoids, j).1).sum()
}

/// PAM: greedy BUILD followed by best-improvement SWAP until no exchange of
/// a medoid with a non-medoid lowers the total distance. The seed orders
/// candidates, so it only matters for ties.
pub fn k_medoids(points: &[Point], k: usize, seed: u64) -> Result<ClusteringResult, AnalysisError> {
    let n = points.len();
    let mut distinct: Vec<Point> = points.to_vec();
    distinct.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    distinct.dedup();
    if k == 0 || k > distinct.len() {
        return Err(AnalysisError::InvalidK { k, n });
    }
    let d: Vec<Vec<f64>> = points.iter().map(|a| points.iter().map(|b| distance(a, b)).collect()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let first = *order
        .iter()
        .min_by(|a, b| d[**a].iter().sum::<f64>().total_cmp(&d[**b].iter().sum::<f64>()))
        .unwrap();
    let mut medoids = vec![first];
    let mut dnear: Vec<f64> = (0..n).map(|j| d[j][first]).collect();
    while medoids.len() < k {
        let mut best: Option<(usize, f64)> = None;
        for &i in &order {
            if medoids.contains(&i) {
                continue;
            }
            let gain: f64 = (0..n).map(|j| (dnear[j] - d[j][i]).max(0.0)).sum();
            if best.map_or(true, |(_, g)| gain > g) {
                best = Some((i, gain));
            }
        }
        let (i, _) = best.expect("k does not exceed the number of distinct points");
        medoids.push(i);
        for j in 0..n {
            dnear[j] = dnear[j].min(d[j][i]);
        }
    }

    let mut cost = total_cost(&d, &medoids);
    let mut trace = vec![cost];
    let eps = 1e-12 * cost.max(1.0);
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for slot in 0..k {
            for &h in &order {
                if medoids.contains(&h) {
                    continue;
                }
                let mut trial = medoids.clone();
                trial[slot] = h;
                let c = total_cost(&d, &trial);
                if c < cost - eps && best.map_or(true, |(_, _, b)| c < b) {
                    best = Some((slot, h, c));
                }
            }
        }
        let Some((slot, h, c)) = best else { break };
        medoids[slot] = h;
        assert!(c <= cost, "SWAP raised the objective from {cost} to {c}");
        cost = c;
        trace.push(cost);
    }

    medoids.sort_unstable();
    let assignment: Vec<usize> = (0..n).map(|j| nearest(&d, &medoids, j).0).collect();
    let silhouette = if k >= 2 { silhouette(points, &assignment)? } else { 0.0 };
    Ok(ClusteringResult { k, medoids, assignment, silhouette, objective: cost, objective_trace: trace })
}

/// Mean silhouette width. Points alone in their cluster contribute 0.
pub fn silhouette(points: &[Point], assignment: &[usize]) -> Result<f64, AnalysisError> {
    if points.len() != assignment.len() {
        return Err(AnalysisError::InvalidAssignment("assignment length differs from point count".into()));
    }
    let clusters = assignment.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; clusters];
    for &c in assignment {
        sizes[c] += 1;
    }
    if clusters < 2 || sizes.contains(&0) {
        return Err(AnalysisError::InvalidAssignment("need at least two non-empty clusters".into()));
    }
    let mut total = 0.0;
    for (i, p) in points.iter().enumerate() {
        let own = assignment[i];
        if sizes[own] == 1 {
            continue;
        }
        let mut sums = vec![0.0; clusters];
        for (j, q) in points.iter().enumerate() {
            if i != j {
                sums[assignment[j]] += distance(p, q);
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..clusters)
            .filter(|c| *c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(total / points.len() as f64)
}

/// Cluster once per `k` and keep the best silhouette, preferring smaller `k`
/// on ties.
pub fn select_clustering(points: &[Point], ks: &[usize], seed: u64) -> Result<ClusteringResult, AnalysisError> {
    let n = points.len();
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    match ks.last() {
        None => return Err(AnalysisError::InvalidK { k: 0, n }),
        Some(&max) if max >= n => return Err(AnalysisError::InvalidK { k: max, n }),
        _ => {}
    }
    let mut best: Option<ClusteringResult> = None;
    for k in ks {
        let r = k_medoids(points, k, seed)?;
        if best.as_ref().map_or(true, |b| r.silhouette > b.silhouette) {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one k"))
}

/// Games per (cluster, user).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchingMatrix {
    pub users: Vec<String>,
    /// `counts[cluster][user]`, users in the order of `users`.
    pub counts: Vec<Vec<usize>>,
    /// Share of each user's games that fall in that user's largest cluster.
    pub majority_fraction: BTreeMap<String, f64>,
}

impl MatchingMatrix {
    pub fn row_sums(&self) -> Vec<usize> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<usize> {
        (0..self.users.len()).map(|u| self.counts.iter().map(|r| r[u]).sum()).collect()
    }
}

pub fn matching_matrix(result: &ClusteringResult, user_ids: &[String]) -> Result<MatchingMatrix, AnalysisError> {
    if user_ids.len() != result.assignment.len() {
        return Err(AnalysisError::InvalidAssignment("one user id per game is required".into()));
    }
    let mut users: Vec<String> = user_ids.to_vec();
    users.sort();
    users.dedup();
    let mut counts = vec![vec![0usize; users.len()]; result.k];
    for (c, u) in result.assignment.iter().zip(user_ids) {
        let col = users.binary_search(u).expect("user collected above");
        counts[*c][col] += 1;
    }
    let majority_fraction = users
        .iter()
        .enumerate()
        .map(|(col, u)| {
            let games: usize = counts.iter().map(|r| r[col]).sum();
            let top = counts.iter().map(|r| r[col]).max().unwrap_or(0);
            (u.clone(), top as f64 / games as f64)
        })
        .collect();
    Ok(MatchingMatrix { users, counts, majority_fraction })
}
