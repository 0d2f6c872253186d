//! Turning a converged swarm into a set of counterfactuals.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{FeatureSchema, QueryPoint};
use crate::error::{Error, Result};
use crate::mdpso::SwarmOutcome;
use crate::model::DecisionFunction;
use crate::objective::{l3_sparsity, ObjectiveBreakdown, SPARSITY_TOL};
use crate::rng::{substream, Stream};

pub const KMEANS_MAX_ITER: usize = 100;
pub const KMEANS_TOL: f64 = 1e-8;

/// Points closer than this in every coordinate are merged before clustering.
const DEDUP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    /// k-means over the valid final positions, one random pick per cluster.
    #[default]
    Cluster,
    /// The k best final positions.
    TopK,
    /// The k best personal-best positions.
    PBest,
}

impl std::str::FromStr for SelectionMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "cluster" => Ok(Self::Cluster),
            "topk" => Ok(Self::TopK),
            "pbest" => Ok(Self::PBest),
            _ => Err(format!(
                "unknown selection `{s}` (expected cluster, topk or pbest)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Fewer distinct points than requested clusters.
    pub collapsed: bool,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(p, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn same_point(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= DEDUP_TOL)
}

/// Lloyd's algorithm with greedy farthest-point seeding. The first seed is a
/// random distinct point; each further seed is the point farthest from the
/// seeds chosen so far.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeans> {
    if k == 0 {
        return Err(Error::Usage("k must be at least 1".into()));
    }
    if points.is_empty() {
        return Err(Error::Usage("cannot cluster an empty point set".into()));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Invariant("points of unequal dimension".into()));
    }

    let mut distinct: Vec<usize> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if !distinct.iter().any(|&d| same_point(&points[d], p)) {
            distinct.push(i);
        }
    }
    if distinct.len() <= k {
        let centroids: Vec<Vec<f64>> = distinct.iter().map(|&i| points[i].clone()).collect();
        let assignments = points.iter().map(|p| nearest(p, &centroids).0).collect();
        return Ok(KMeans {
            assignments,
            centroids,
            collapsed: distinct.len() < k,
            iterations: 0,
        });
    }

    let mut rng = substream(seed, Stream::KMeans, &[]);
    let first = distinct[rng.random_range(0..distinct.len())];
    let mut centroids = vec![points[first].clone()];
    let mut gap: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[first])).collect();
    while centroids.len() < k {
        let far = argmax_first(&gap);
        centroids.push(points[far].clone());
        for (g, p) in gap.iter_mut().zip(points) {
            *g = g.min(sq_dist(p, &points[far]));
        }
    }

    let mut assignments = vec![0; points.len()];
    let mut iterations = 0;
    while iterations < KMEANS_MAX_ITER {
        iterations += 1;
        let mut dists = vec![0.0; points.len()];
        for (i, p) in points.iter().enumerate() {
            (assignments[i], dists[i]) = nearest(p, &centroids);
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut movement: f64 = 0.0;
        for c in 0..k {
            let next = if counts[c] == 0 {
                let far = argmax_first(&dists);
                dists[far] = 0.0;
                points[far].clone()
            } else {
                sums[c].iter().map(|s| s / counts[c] as f64).collect()
            };
            movement = movement.max(sq_dist(&next, &centroids[c]).sqrt());
            centroids[c] = next;
        }
        if movement < KMEANS_TOL {
            break;
        }
    }
    for (i, p) in points.iter().enumerate() {
        assignments[i] = nearest(p, &centroids).0;
    }
    Ok(KMeans {
        assignments,
        centroids,
        collapsed: false,
        iterations,
    })
}

fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterfactual {
    pub position: Vec<f64>,
    pub valid: bool,
    pub breakdown: ObjectiveBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualSet {
    pub query: QueryPoint,
    pub requested_k: usize,
    pub method: String,
    pub cfs: Vec<Counterfactual>,
    /// Clustering found fewer distinct positions than requested.
    pub collapsed: bool,
}

impl CounterfactualSet {
    pub fn empty(query: QueryPoint, requested_k: usize, method: impl Into<String>) -> Self {
        Self {
            query,
            requested_k,
            method: method.into(),
            cfs: Vec::new(),
            collapsed: false,
        }
    }

    pub fn n_valid(&self) -> usize {
        self.cfs.iter().filter(|c| c.valid).count()
    }

    pub fn positions(&self) -> Vec<&[f64]> {
        self.cfs.iter().map(|c| c.position.as_slice()).collect()
    }

    /// Adds `cf` unless it duplicates an emitted one under the sparsity
    /// tolerance.
    pub fn push_distinct(&mut self, cf: Counterfactual, schema: &FeatureSchema) -> bool {
        if self.is_duplicate(&cf.position, schema) {
            return false;
        }
        self.cfs.push(cf);
        true
    }

    fn is_duplicate(&self, x: &[f64], schema: &FeatureSchema) -> bool {
        self.cfs
            .iter()
            .any(|c| l3_sparsity(&c.position, x, schema, SPARSITY_TOL) == 0)
    }
}

pub struct SelectionInput<'a> {
    pub outcome: &'a SwarmOutcome,
    pub model: &'a dyn DecisionFunction,
    pub query: &'a QueryPoint,
    pub schema: &'a FeatureSchema,
    pub k: usize,
    pub mode: SelectionMode,
    pub seed: u64,
}

/// Picks up to `k` valid, pairwise distinct counterfactuals from the swarm.
pub fn select_cfs(input: &SelectionInput<'_>) -> Result<CounterfactualSet> {
    let SelectionInput {
        outcome,
        model,
        query,
        schema,
        k,
        mode,
        seed,
    } = *input;
    let mut set = CounterfactualSet::empty(query.clone(), k, "mdpso");
    if k == 0 || outcome.particles.is_empty() {
        return Ok(set);
    }
    let is_valid = |x: &[f64]| model.predict(x) == query.desired;

    match mode {
        SelectionMode::Cluster => {
            let valid: Vec<usize> = (0..outcome.particles.len())
                .filter(|&i| is_valid(&outcome.particles[i].position))
                .collect();
            if valid.is_empty() {
                return Ok(set);
            }
            let points: Vec<Vec<f64>> = valid
                .iter()
                .map(|&i| outcome.particles[i].position.clone())
                .collect();
            let km = kmeans(&points, k, seed)?;
            set.collapsed = km.collapsed;
            let mut rng = substream(seed, Stream::Select, &[]);
            for c in 0..km.centroids.len() {
                let mut members: Vec<usize> = (0..points.len())
                    .filter(|&i| km.assignments[i] == c)
                    .collect();
                while !members.is_empty() {
                    let &pick = members.choose(&mut rng).expect("non-empty");
                    let cf = Counterfactual {
                        position: points[pick].clone(),
                        valid: true,
                        breakdown: outcome.particles[valid[pick]].value,
                    };
                    if set.push_distinct(cf, schema) {
                        break;
                    }
                    members.retain(|&i| i != pick);
                }
            }
        }
        SelectionMode::TopK | SelectionMode::PBest => {
            let mut ranked: Vec<(&[f64], ObjectiveBreakdown)> = outcome
                .particles
                .iter()
                .map(|p| match mode {
                    SelectionMode::TopK => (p.position.as_slice(), p.value),
                    _ => (p.best_position.as_slice(), p.best_value),
                })
                .collect();
            ranked.sort_by(|a, b| a.1.total.total_cmp(&b.1.total));
            for (x, breakdown) in ranked {
                if set.cfs.len() == k {
                    break;
                }
                if is_valid(x) {
                    set.push_distinct(
                        Counterfactual {
                            position: x.to_vec(),
                            valid: true,
                            breakdown,
                        },
                        schema,
                    );
                }
            }
        }
    }
    Ok(set)
}
