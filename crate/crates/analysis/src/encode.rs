//! Fixed-length game summaries and their projection onto a plane.

use std::cmp::Ordering;

use hybs_core::{DishType, Ingredient};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::records::{ActionKind, HeldKind, StateActionRecord};
use crate::AnalysisError;

/// Length of [`summary_features`].
pub const SUMMARY_LEN: usize = 4 + 4 + 4 + 3 + 1;

/// One game placed in the two-dimensional behaviour space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEmbedding {
    pub point: [f64; 2],
    pub game_id: String,
    pub user_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameTrajectory {
    pub game_id: String,
    pub user_id: String,
    pub records: Vec<StateActionRecord>,
}

/// Maps every game of a dataset to a point. Encoders may look at the whole
/// dataset, so points are only comparable within one call.
pub trait TrajectoryEncoder {
    fn encode(&self, games: &[&[StateActionRecord]]) -> Result<Vec<[f64; 2]>, AnalysisError>;
}

/// Action-kind and held-item frequencies, serves per dish, ingredients put
/// down per kind, and the mean number of actions used at serve time.
pub fn summary_features(records: &[StateActionRecord]) -> [f64; SUMMARY_LEN] {
    let mut f = [0.0; SUMMARY_LEN];
    let n = records.len().max(1) as f64;
    let (mut serve_time, mut serves) = (0.0, 0usize);
    for r in records {
        f[ActionKind::ALL.iter().position(|a| *a == r.action).unwrap()] += 1.0 / n;
        f[4 + HeldKind::ALL.iter().position(|h| *h == r.held).unwrap()] += 1.0 / n;
        if let Some(d) = r.served_dish {
            f[8 + d.index()] += 1.0;
            serve_time += (r.step + 1) as f64;
            serves += 1;
        }
        if let Some(k) = r.staged {
            f[12 + k.index()] += 1.0;
        }
    }
    if serves > 0 {
        f[15] = serve_time / serves as f64;
    }
    f
}

/// Names of the [`summary_features`] dimensions.
pub fn summary_feature_names() -> Vec<String> {
    let mut names: Vec<String> = ActionKind::ALL.iter().map(|a| format!("action_{a:?}")).collect();
    names.extend(HeldKind::ALL.iter().map(|h| format!("held_{h:?}")));
    names.extend(DishType::ALL.iter().map(|d| format!("served_{}", d.name())));
    names.extend(Ingredient::ALL.iter().map(|k| format!("staged_{k:?}")));
    names.push("mean_serve_time".into());
    names.iter().map(|s| s.to_lowercase()).collect()
}

/// Standardized summaries projected on their two leading principal axes,
/// found by power iteration with deflation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrincipalEncoder {
    pub seed: u64,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for PrincipalEncoder {
    fn default() -> Self {
        PrincipalEncoder { seed: 0, max_iterations: 10_000, tolerance: 1e-13 }
    }
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl PrincipalEncoder {
    /// Leading unit eigenvector of a symmetric positive semidefinite matrix,
    /// or `None` when the matrix is numerically zero.
    fn leading_axis(&self, cov: &[Vec<f64>], rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
        let d = cov.len();
        let mut v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n0 = norm(&v);
        v.iter_mut().for_each(|x| *x /= n0);
        let scale = cov.iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
        if scale < 1e-12 {
            return None;
        }
        for _ in 0..self.max_iterations {
            let mut w = mat_vec(cov, &v);
            let n = norm(&w);
            if n < 1e-12 * scale {
                return None;
            }
            w.iter_mut().for_each(|x| *x /= n);
            let delta = norm(&w.iter().zip(&v).map(|(a, b)| a - b).collect::<Vec<_>>());
            v = w;
            if delta < self.tolerance {
                break;
            }
        }
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-9) {
            if *first < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        Some(v)
    }

    /// Project raw feature vectors. Sums run over the rows in sorted order,
    /// so the result does not depend on the order of `rows`.
    pub fn project(&self, rows: &[Vec<f64>]) -> Result<Vec<[f64; 2]>, AnalysisError> {
        let n = rows.len();
        if n == 0 {
            return Err(AnalysisError::DegenerateDataset);
        }
        let d = rows[0].len();
        let mut order: Vec<&Vec<f64>> = rows.iter().collect();
        order.sort_by(|a, b| lex(a, b));

        let mut mean = vec![0.0; d];
        for r in &order {
            for j in 0..d {
                mean[j] += r[j];
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut sd = vec![0.0; d];
        for r in &order {
            for j in 0..d {
                sd[j] += (r[j] - mean[j]).powi(2);
            }
        }
        sd.iter_mut().for_each(|s| *s = (*s / n as f64).sqrt());
        if sd.iter().all(|s| *s <= 1e-12) {
            return Err(AnalysisError::DegenerateDataset);
        }
        let standardize = |r: &[f64]| -> Vec<f64> {
            (0..d).map(|j| if sd[j] > 1e-12 { (r[j] - mean[j]) / sd[j] } else { 0.0 }).collect()
        };

        let mut cov = vec![vec![0.0; d]; d];
        for r in &order {
            let z = standardize(r);
            for i in 0..d {
                for j in 0..d {
                    cov[i][j] += z[i] * z[j];
                }
            }
        }
        cov.iter_mut().flatten().for_each(|c| *c /= n as f64);

        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut axes = Vec::new();
        for _ in 0..2 {
            match self.leading_axis(&cov, &mut rng) {
                Some(v) => {
                    let lambda: f64 = mat_vec(&cov, &v).iter().zip(&v).map(|(a, b)| a * b).sum();
                    for i in 0..d {
                        for j in 0..d {
                            cov[i][j] -= lambda * v[i] * v[j];
                        }
                    }
                    axes.push(v);
                }
                None => axes.push(vec![0.0; d]),
            }
        }
        Ok(rows
            .iter()
            .map(|r| {
                let z = standardize(r);
                let dot = |v: &[f64]| z.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
                [dot(&axes[0]), dot(&axes[1])]
            })
            .collect())
    }
}

impl TrajectoryEncoder for PrincipalEncoder {
    fn encode(&self, games: &[&[StateActionRecord]]) -> Result<Vec<[f64; 2]>, AnalysisError> {
        if games.iter().any(|g| g.is_empty()) {
            return Err(AnalysisError::EmptyTrajectory);
        }
        let rows: Vec<Vec<f64>> = games.iter().map(|g| summary_features(g).to_vec()).collect();
        self.project(&rows)
    }
}

pub fn encode_trajectories(
    games: &[GameTrajectory],
    encoder: &dyn TrajectoryEncoder,
) -> Result<Vec<TrajectoryEmbedding>, AnalysisError> {
    let slices: Vec<&[StateActionRecord]> = games.iter().map(|g| g.records.as_slice()).collect();
    let points = encoder.encode(&slices)?;
    Ok(games
        .iter()
        .zip(points)
        .map(|(g, point)| TrajectoryEmbedding { point, game_id: g.game_id.clone(), user_id: g.user_id.clone() })
        .collect())
}
