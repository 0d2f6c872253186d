//! Decision functions and the built-in classifiers that provide them.

use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Split};
use crate::error::{Error, Result};
use crate::rng::{substream, Stream};

/// Probability at or above which a row is assigned class 1.
pub const THRESHOLD: f64 = 0.5;

/// A binary classifier seen as a black box.
///
/// Implementations must be pure: prediction takes `&self` and may be called
/// from many threads at once.
pub trait DecisionFunction: Send + Sync {
    /// Probability of class 1, in `[0, 1]`.
    fn predict_proba(&self, x: &[f64]) -> f64;

    fn predict(&self, x: &[f64]) -> u8 {
        class_of(self.predict_proba(x))
    }
}

pub fn class_of(p: f64) -> u8 {
    u8::from(p >= THRESHOLD)
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> DecisionFunction for F {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl DecisionFunction for LogisticModel {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(dot(&self.weights, x) + self.bias)
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            epochs: 500,
        }
    }
}

fn check_classes(data: &Dataset) -> Result<()> {
    let pos = data.train.iter().filter(|&&i| data.labels[i] == 1).count();
    let neg = data.train.len() - pos;
    if pos < 2 || neg < 2 {
        return Err(Error::Training(format!(
            "need at least two training rows per class, found {neg} negative and {pos} positive"
        )));
    }
    Ok(())
}

/// Full-batch gradient descent on mean log loss from zero weights.
pub fn train_logistic(data: &Dataset, params: &LogisticParams) -> Result<LogisticModel> {
    check_classes(data)?;
    let d = data.schema.encoded_width();
    let mut weights = vec![0.0; d];
    let mut bias = 0.0;
    let n = data.train.len() as f64;
    for _ in 0..params.epochs {
        let mut grad = vec![0.0; d];
        let mut grad_b = 0.0;
        for &i in &data.train {
            let x = &data.rows[i];
            let err = sigmoid(dot(&weights, x) + bias) - f64::from(data.labels[i]);
            for (g, xi) in grad.iter_mut().zip(x) {
                *g += err * xi;
            }
            grad_b += err;
        }
        for (w, g) in weights.iter_mut().zip(&grad) {
            *w -= params.learning_rate * g / n;
        }
        bias -= params.learning_rate * grad_b / n;
    }
    Ok(LogisticModel { weights, bias })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        /// Fraction of class-1 samples that reached this leaf.
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Axis-aligned binary tree; rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn leaf_value(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 8,
            min_samples_split: 2,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub max_depth: usize,
    pub seed: u64,
}

impl DecisionFunction for ForestModel {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.leaf_value(x)).sum();
        sum / self.trees.len() as f64
    }
}

/// Bootstrap-aggregated CART trees grown greedily on Gini impurity, with
/// `round(sqrt(d))` candidate columns drawn per split.
pub fn train_forest(data: &Dataset, params: &ForestParams) -> Result<ForestModel> {
    check_classes(data)?;
    if params.n_trees == 0 {
        return Err(Error::Usage("a forest needs at least one tree".into()));
    }
    let d = data.schema.encoded_width();
    let mtry = ((d as f64).sqrt().round() as usize).clamp(1, d.max(1));
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(params.seed, Stream::Tree, &[t as u64]);
            let n = data.train.len();
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| data.train[rng.random_range(0..n)]).collect()
            } else {
                data.train.clone()
            };
            let mut builder = TreeBuilder {
                data,
                params,
                mtry,
                rng,
                nodes: Vec::new(),
            };
            builder.grow(rows, 0);
            DecisionTree {
                nodes: builder.nodes,
            }
        })
        .collect();
    Ok(ForestModel {
        trees,
        max_depth: params.max_depth,
        seed: params.seed,
    })
}

struct TreeBuilder<'a, R> {
    data: &'a Dataset,
    params: &'a ForestParams,
    mtry: usize,
    rng: R,
    nodes: Vec<Node>,
}

fn gini(pos: f64, n: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    let q = pos / n;
    2.0 * q * (1.0 - q)
}

impl<R: Rng> TreeBuilder<'_, R> {
    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let pos = rows.iter().filter(|&&i| self.data.labels[i] == 1).count();
        let value = pos as f64 / rows.len() as f64;
        self.nodes.push(Node::Leaf { value });
        if depth >= self.params.max_depth
            || rows.len() < self.params.min_samples_split
            || pos == 0
            || pos == rows.len()
        {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(&rows, pos) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&i| self.data.rows[i][feature] <= threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    fn best_split(&mut self, rows: &[usize], pos: usize) -> Option<(usize, f64)> {
        let d = self.data.schema.encoded_width();
        let n = rows.len() as f64;
        let parent = gini(pos as f64, n);
        let mut candidates = sample(&mut self.rng, d, self.mtry).into_vec();
        candidates.sort_unstable();
        let mut best: Option<(f64, usize, f64)> = None;
        let mut pairs: Vec<(f64, u8)> = Vec::with_capacity(rows.len());
        for f in candidates {
            pairs.clear();
            pairs.extend(
                rows.iter()
                    .map(|&i| (self.data.rows[i][f], self.data.labels[i])),
            );
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_n = 0.0;
            let mut left_pos = 0.0;
            for w in 0..pairs.len() - 1 {
                left_n += 1.0;
                left_pos += f64::from(pairs[w].1);
                if pairs[w].0 == pairs[w + 1].0 {
                    continue;
                }
                let right_n = n - left_n;
                let right_pos = pos as f64 - left_pos;
                let impurity =
                    (left_n * gini(left_pos, left_n) + right_n * gini(right_pos, right_n)) / n;
                let gain = parent - impurity;
                if gain > 1e-12 && best.is_none_or(|(g, _, _)| gain > g) {
                    let threshold = 0.5 * (pairs[w].0 + pairs[w + 1].0);
                    best = Some((gain, f, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

/// A trained classifier of either built-in kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Logistic(LogisticModel),
    Forest(ForestModel),
}

impl DecisionFunction for Model {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        match self {
            Model::Logistic(m) => m.predict_proba(x),
            Model::Forest(m) => m.predict_proba(x),
        }
    }
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelArtifact {
    format_version: u32,
    model: Model,
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Logistic(_) => "logistic",
            Model::Forest(_) => "forest",
        }
    }

    pub fn to_json_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(
            file,
            &ModelArtifact {
                format_version: MODEL_FORMAT_VERSION,
                model: self.clone(),
            },
        )?;
        Ok(())
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let artifact: ModelArtifact = serde_json::from_str(&text)?;
        if artifact.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Usage(format!(
                "model file version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                artifact.format_version
            )));
        }
        Ok(artifact.model)
    }
}

/// Fraction of rows in `split` whose predicted class matches the label.
pub fn accuracy(f: &dyn DecisionFunction, data: &Dataset, split: Split) -> Result<f64> {
    let idx = data.split(split);
    if idx.is_empty() {
        return Err(Error::Usage(format!("the {split:?} split is empty")));
    }
    let hits = idx
        .iter()
        .filter(|&&i| f.predict(&data.rows[i]) == data.labels[i])
        .count();
    Ok(hits as f64 / idx.len() as f64)
}
