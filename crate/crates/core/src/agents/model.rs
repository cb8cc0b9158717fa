//! The apprentice's goal predictor and embedding decoder, their joint
//! training loop, and the model artifact.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{GoalLabel, GOAL_COUNT};
use super::labels::{LabeledDataset, Sample};
use super::AgentError;

/// Per-user (or per-cluster) conditioning vector.
pub type PersonalizedEmbedding = [f64; EMBEDDING_DIM];

pub const EMBEDDING_DIM: usize = 3;

pub const ARTIFACT_VERSION: u32 = 1;

/// One hidden tanh layer followed by a linear output layer. Weights are
/// stored row-major, one row per output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Mlp {
    /// Glorot-uniform weights and zero biases.
    pub fn new(inputs: usize, hidden: usize, outputs: usize, rng: &mut impl Rng) -> Mlp {
        let mut layer = |fan_in: usize, fan_out: usize| -> Vec<f64> {
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            (0..fan_in * fan_out).map(|_| rng.gen_range(-a..a)).collect()
        };
        let w1 = layer(inputs, hidden);
        let w2 = layer(hidden, outputs);
        Mlp { inputs, hidden, outputs, w1, b1: vec![0.0; hidden], w2, b2: vec![0.0; outputs] }
    }

    pub fn zeros_like(&self) -> Mlp {
        Mlp {
            w1: vec![0.0; self.w1.len()],
            b1: vec![0.0; self.b1.len()],
            w2: vec![0.0; self.w2.len()],
            b2: vec![0.0; self.b2.len()],
            ..*self
        }
    }

    fn shapes_ok(&self) -> bool {
        self.w1.len() == self.inputs * self.hidden
            && self.b1.len() == self.hidden
            && self.w2.len() == self.hidden * self.outputs
            && self.b2.len() == self.outputs
    }

    /// Hidden activations and outputs.
    pub fn forward(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        debug_assert_eq!(x.len(), self.inputs);
        let h: Vec<f64> = (0..self.hidden)
            .map(|j| {
                let row = &self.w1[j * self.inputs..(j + 1) * self.inputs];
                (self.b1[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()).tanh()
            })
            .collect();
        let z = (0..self.outputs)
            .map(|k| {
                let row = &self.w2[k * self.hidden..(k + 1) * self.hidden];
                self.b2[k] + row.iter().zip(&h).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect();
        (h, z)
    }

    /// Add the parameter gradient for output gradient `dz` into `grad` and
    /// return the gradient with respect to the last `tail` inputs.
    fn backward(&self, x: &[f64], h: &[f64], dz: &[f64], grad: &mut Mlp, tail: usize) -> Vec<f64> {
        let mut dh = vec![0.0; self.hidden];
        for k in 0..self.outputs {
            grad.b2[k] += dz[k];
            let row = k * self.hidden;
            for j in 0..self.hidden {
                grad.w2[row + j] += dz[k] * h[j];
                dh[j] += dz[k] * self.w2[row + j];
            }
        }
        let mut dx = vec![0.0; tail];
        let first = self.inputs - tail;
        for j in 0..self.hidden {
            let da = dh[j] * (1.0 - h[j] * h[j]);
            if da == 0.0 {
                continue;
            }
            grad.b1[j] += da;
            let row = j * self.inputs;
            for (i, v) in x.iter().enumerate() {
                grad.w1[row + i] += da * v;
            }
            for (t, d) in dx.iter_mut().enumerate() {
                *d += da * self.w1[row + first + t];
            }
        }
        dx
    }

    /// Parameters in a fixed order: w1, b1, w2, b2.
    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.w1.iter().chain(&self.b1).chain(&self.w2).chain(&self.b2)
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.b2.iter_mut())
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    fn descend(&mut self, grad: &Mlp, step: f64) {
        for (p, g) in self.params_mut().zip(grad.params()) {
            *p -= step * g;
        }
    }
}

/// Maps features and an embedding to a distribution over goals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalPredictor {
    pub net: Mlp,
}

fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

impl GoalPredictor {
    pub fn new(feature_len: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        GoalPredictor { net: Mlp::new(feature_len + EMBEDDING_DIM, hidden, GOAL_COUNT, rng) }
    }

    pub fn logits(&self, features: &[f64], e: &PersonalizedEmbedding) -> Vec<f64> {
        self.net.forward(&concat(features, e)).1
    }

    pub fn probabilities(&self, features: &[f64], e: &PersonalizedEmbedding) -> Vec<f64> {
        softmax(&self.logits(features, e))
    }
}

/// Recovers the embedding from features and the goal pursued.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingDecoder {
    pub net: Mlp,
}

fn one_hot(goal: GoalLabel) -> [f64; GOAL_COUNT] {
    let mut v = [0.0; GOAL_COUNT];
    v[goal.index()] = 1.0;
    v
}

impl EmbeddingDecoder {
    pub fn new(feature_len: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        EmbeddingDecoder { net: Mlp::new(feature_len + GOAL_COUNT, hidden, EMBEDDING_DIM, rng) }
    }

    pub fn decode(&self, features: &[f64], goal: GoalLabel) -> PersonalizedEmbedding {
        let z = self.net.forward(&concat(features, &one_hot(goal))).1;
        [z[0], z[1], z[2]]
    }
}

/// Gradients of the training loss, shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub predictor: Mlp,
    pub decoder: Mlp,
    pub embedding: PersonalizedEmbedding,
}

/// Mean over the batch of cross-entropy plus `mi_weight` times the squared
/// error between the decoded and the actual embedding. Returns the total
/// and the cross-entropy part.
pub fn batch_loss(
    predictor: &GoalPredictor,
    decoder: &EmbeddingDecoder,
    e: &PersonalizedEmbedding,
    batch: &[&Sample],
    mi_weight: f64,
) -> (f64, f64) {
    let mut ce = 0.0;
    let mut mi = 0.0;
    for s in batch {
        let p = predictor.probabilities(&s.features, e);
        ce -= p[s.goal.index()].ln();
        let d = decoder.decode(&s.features, s.goal);
        mi += d.iter().zip(e).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    let n = batch.len().max(1) as f64;
    ((ce + mi_weight * mi) / n, ce / n)
}

/// `batch_loss` together with its gradient.
pub fn batch_loss_and_grad(
    predictor: &GoalPredictor,
    decoder: &EmbeddingDecoder,
    e: &PersonalizedEmbedding,
    batch: &[&Sample],
    mi_weight: f64,
) -> (f64, Gradients) {
    let n = batch.len().max(1) as f64;
    let mut g = Gradients { predictor: predictor.net.zeros_like(), decoder: decoder.net.zeros_like(), embedding: [0.0; 3] };
    let mut total = 0.0;
    for s in batch {
        let x = concat(&s.features, e);
        let (h, z) = predictor.net.forward(&x);
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        let y = s.goal.index();
        total += lse - z[y];
        let dz: Vec<f64> = z
            .iter()
            .enumerate()
            .map(|(k, v)| ((v - lse).exp() - f64::from(u8::from(k == y))) / n)
            .collect();
        let de = predictor.net.backward(&x, &h, &dz, &mut g.predictor, EMBEDDING_DIM);

        let xd = concat(&s.features, &one_hot(s.goal));
        let (hd, out) = decoder.net.forward(&xd);
        let diff: Vec<f64> = out.iter().zip(e).map(|(a, b)| a - b).collect();
        total += mi_weight * diff.iter().map(|d| d * d).sum::<f64>();
        let dout: Vec<f64> = diff.iter().map(|d| 2.0 * mi_weight * d / n).collect();
        decoder.net.backward(&xd, &hd, &dout, &mut g.decoder, 0);

        for k in 0..EMBEDDING_DIM {
            g.embedding[k] += de[k] - dout[k];
        }
    }
    (total / n, g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub step_size: f64,
    pub mi_weight: f64,
    pub hidden: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 30, step_size: 0.05, mi_weight: 0.1, hidden: 32, batch_size: 32, seed: 0 }
    }
}

/// A trained apprentice, as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApprenticeModel {
    pub format_version: u32,
    pub feature_len: usize,
    pub vocabulary: Vec<String>,
    pub predictor: GoalPredictor,
    pub decoder: EmbeddingDecoder,
    pub user_embeddings: BTreeMap<String, PersonalizedEmbedding>,
    pub user_clusters: BTreeMap<String, usize>,
    pub cluster_embeddings: BTreeMap<usize, PersonalizedEmbedding>,
    pub config: TrainConfig,
    /// Mean cross-entropy over the training set after the last step.
    pub final_cross_entropy: f64,
}

/// Which embedding conditions the apprentice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingSelector {
    User(String),
    Cluster(usize),
    Explicit(PersonalizedEmbedding),
}

fn vocabulary_names() -> Vec<String> {
    GoalLabel::vocabulary().iter().map(ToString::to_string).collect()
}

impl ApprenticeModel {
    pub fn embedding(&self, selector: &EmbeddingSelector) -> Result<PersonalizedEmbedding, AgentError> {
        match selector {
            EmbeddingSelector::User(u) => self
                .user_embeddings
                .get(u)
                .copied()
                .ok_or_else(|| AgentError::UnmappedUser(u.clone())),
            EmbeddingSelector::Cluster(c) => self
                .cluster_embeddings
                .get(c)
                .copied()
                .ok_or(AgentError::EmptyCluster(*c)),
            EmbeddingSelector::Explicit(e) => Ok(*e),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<ApprenticeModel, AgentError> {
        let m: ApprenticeModel = serde_json::from_str(text).map_err(|e| AgentError::Artifact(e.to_string()))?;
        if m.format_version != ARTIFACT_VERSION {
            return Err(AgentError::Artifact(format!("unsupported format version {}", m.format_version)));
        }
        if m.vocabulary != vocabulary_names() {
            return Err(AgentError::Artifact("goal vocabulary does not match".into()));
        }
        let p = &m.predictor.net;
        let d = &m.decoder.net;
        let shapes = p.shapes_ok()
            && d.shapes_ok()
            && p.inputs == m.feature_len + EMBEDDING_DIM
            && p.outputs == GOAL_COUNT
            && d.inputs == m.feature_len + GOAL_COUNT
            && d.outputs == EMBEDDING_DIM;
        if !shapes {
            return Err(AgentError::Artifact("layer shapes are inconsistent".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<(), AgentError> {
        std::fs::write(path, self.to_json()).map_err(|e| AgentError::Artifact(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<ApprenticeModel, AgentError> {
        let text = std::fs::read_to_string(path).map_err(|e| AgentError::Artifact(format!("{}: {e}", path.display())))?;
        ApprenticeModel::from_json(&text)
    }
}

/// Mean of the embeddings of the users assigned to `cluster`.
pub fn cluster_embedding(
    embeddings: &BTreeMap<String, PersonalizedEmbedding>,
    assignment: &BTreeMap<String, usize>,
    cluster: usize,
) -> Result<PersonalizedEmbedding, AgentError> {
    let members: Vec<&PersonalizedEmbedding> = assignment
        .iter()
        .filter(|(_, c)| **c == cluster)
        .filter_map(|(u, _)| embeddings.get(u))
        .collect();
    if members.is_empty() {
        return Err(AgentError::EmptyCluster(cluster));
    }
    let mut mean = [0.0; EMBEDDING_DIM];
    for e in &members {
        for k in 0..EMBEDDING_DIM {
            mean[k] += e[k];
        }
    }
    Ok(mean.map(|v| v / members.len() as f64))
}

/// Mean cross-entropy of the model over a dataset, each user's samples
/// conditioned on that user's embedding.
pub fn dataset_cross_entropy(model: &ApprenticeModel, data: &LabeledDataset) -> f64 {
    let mut total = 0.0;
    let mut n = 0usize;
    for (user, samples) in &data.users {
        let Some(e) = model.user_embeddings.get(user) else { continue };
        for s in samples {
            total -= model.predictor.probabilities(&s.features, e)[s.goal.index()].ln();
            n += 1;
        }
    }
    total / n.max(1) as f64
}

/// Jointly fit the predictor, the decoder and one embedding per user by
/// minibatch gradient descent. Each step draws one user and a batch of
/// their samples.
pub fn train_apprentice(data: &LabeledDataset, cfg: &TrainConfig) -> Result<ApprenticeModel, AgentError> {
    let users: Vec<(&String, &Vec<Sample>)> = data.users.iter().filter(|(_, s)| !s.is_empty()).collect();
    let feature_len = users
        .first()
        .map(|(_, s)| s[0].features.len())
        .ok_or(AgentError::EmptyDataset)?;
    if let Some(bad) = users.iter().flat_map(|(_, s)| s.iter()).find(|s| s.features.len() != feature_len) {
        return Err(AgentError::Artifact(format!(
            "feature length {} differs from {feature_len}",
            bad.features.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut predictor = GoalPredictor::new(feature_len, cfg.hidden, &mut rng);
    let mut decoder = EmbeddingDecoder::new(feature_len, cfg.hidden, &mut rng);
    let mut embeddings: BTreeMap<String, PersonalizedEmbedding> = data
        .users
        .keys()
        .map(|u| (u.clone(), [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()]))
        .collect();

    let total: usize = users.iter().map(|(_, s)| s.len()).sum();
    let batch_size = cfg.batch_size.max(1);
    let steps = cfg.epochs * total.div_ceil(batch_size);
    for step in 0..steps {
        let (user, samples) = users[rng.gen_range(0..users.len())];
        let batch: Vec<&Sample> = (0..batch_size).map(|_| &samples[rng.gen_range(0..samples.len())]).collect();
        let e = embeddings[user.as_str()];
        let (loss, g) = batch_loss_and_grad(&predictor, &decoder, &e, &batch, cfg.mi_weight);
        let finite = loss.is_finite()
            && g.predictor.params().chain(g.decoder.params()).chain(&g.embedding).all(|v| v.is_finite());
        if !finite {
            return Err(AgentError::NonFiniteLoss { step });
        }
        predictor.net.descend(&g.predictor, cfg.step_size);
        decoder.net.descend(&g.decoder, cfg.step_size);
        let slot = embeddings.get_mut(user.as_str()).expect("user has an embedding");
        for k in 0..EMBEDDING_DIM {
            slot[k] -= cfg.step_size * g.embedding[k];
        }
    }

    let cluster_embeddings = data
        .clusters
        .values()
        .copied()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .filter_map(|c| cluster_embedding(&embeddings, &data.clusters, c).ok().map(|e| (c, e)))
        .collect();
    let mut model = ApprenticeModel {
        format_version: ARTIFACT_VERSION,
        feature_len,
        vocabulary: vocabulary_names(),
        predictor,
        decoder,
        user_embeddings: embeddings,
        user_clusters: data.clusters.clone(),
        cluster_embeddings,
        config: *cfg,
        final_cross_entropy: 0.0,
    };
    model.final_cross_entropy = dataset_cross_entropy(&model, data);
    if !model.final_cross_entropy.is_finite() {
        return Err(AgentError::NonFiniteLoss { step: steps });
    }
    Ok(model)
}
