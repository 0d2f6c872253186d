//! Growing Spheres: sample expanding shells around the query until a
//! candidate changes class.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{FeatureKind, FeatureScales, FeatureSchema, QueryPoint};
use crate::error::{Error, Result};
use crate::mdpso::SearchSpace;
use crate::model::DecisionFunction;
use crate::objective::{CounterfactualObjective, Objective, SPARSITY_TOL};
use crate::rng::{substream, Stream};
use crate::select::{Counterfactual, CounterfactualSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GsMode {
    /// Every mutable feature, bounded only by `[0, 1]`.
    #[default]
    Paper,
    /// The swarm's active set and boxes.
    Constrained,
}

impl std::str::FromStr for GsMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "paper" => Ok(Self::Paper),
            "constrained" => Ok(Self::Constrained),
            _ => Err(format!(
                "unknown gs mode `{s}` (expected paper or constrained)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GsConfig {
    pub step: f64,
    pub samples_per_shell: usize,
    /// Defaults to `max(1, sqrt(d))` for `d` searched continuous columns.
    pub max_radius: Option<f64>,
    pub mode: GsMode,
}

impl Default for GsConfig {
    fn default() -> Self {
        Self {
            step: 0.02,
            samples_per_shell: 100,
            max_radius: None,
            mode: GsMode::Paper,
        }
    }
}

/// Columns the search may move and the bounds it clamps to.
#[derive(Debug, Clone, PartialEq)]
pub struct GsSpace {
    pub cont_cols: Vec<usize>,
    pub cat_features: Vec<usize>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl GsSpace {
    /// All mutable features, unit bounds.
    pub fn unconstrained(schema: &FeatureSchema) -> Self {
        let w = schema.encoded_width();
        let mut space = Self {
            cont_cols: Vec::new(),
            cat_features: Vec::new(),
            lo: vec![0.0; w],
            hi: vec![1.0; w],
        };
        for (j, f) in schema.features().iter().enumerate() {
            if !f.mutable {
                continue;
            }
            match f.kind {
                FeatureKind::Continuous => space.cont_cols.push(schema.block(j).start),
                FeatureKind::Categorical => space.cat_features.push(j),
            }
        }
        space
    }

    /// Same columns and boxes as the swarm.
    pub fn constrained(schema: &FeatureSchema, search: &SearchSpace) -> Self {
        let mut cont_cols = Vec::new();
        let mut cat_features = Vec::new();
        for &c in &search.active_cols {
            let j = schema.feature_of_column(c);
            match schema.feature(j).kind {
                FeatureKind::Continuous => cont_cols.push(c),
                FeatureKind::Categorical => {
                    if cat_features.last() != Some(&j) {
                        cat_features.push(j);
                    }
                }
            }
        }
        Self {
            cont_cols,
            cat_features,
            lo: search.lo.clone(),
            hi: search.hi.clone(),
        }
    }
}

/// Radius with density proportional to `r^(d-1)` on `[r_in, r_out]`.
pub fn shell_radius(r_in: f64, r_out: f64, d: usize, u: f64) -> f64 {
    if r_out <= 0.0 {
        return 0.0;
    }
    let d = d as f64;
    let ratio = (r_in / r_out).powf(d);
    r_out * (ratio + u * (1.0 - ratio)).powf(1.0 / d)
}

/// One candidate drawn from the shell `[r_in, r_out]` around `x0`.
pub fn sample_in_shell<R: Rng>(
    x0: &[f64],
    schema: &FeatureSchema,
    space: &GsSpace,
    r_in: f64,
    r_out: f64,
    rng: &mut R,
) -> Vec<f64> {
    let mut x = x0.to_vec();
    let d = space.cont_cols.len();
    if d > 0 {
        let dir: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let r = shell_radius(r_in, r_out, d, rng.random());
        if norm > 0.0 {
            for (&c, v) in space.cont_cols.iter().zip(&dir) {
                x[c] = x0[c] + r * v / norm;
            }
        }
    }
    let flip = r_out.min(1.0);
    for &j in &space.cat_features {
        if rng.random::<f64>() < flip {
            let block = schema.block(j);
            let level = rng.random_range(0..block.len());
            for (k, v) in x[block].iter_mut().enumerate() {
                *v = if k == level { 1.0 } else { 0.0 };
            }
        }
    }
    for &c in &space.cont_cols {
        x[c] = x[c].clamp(space.lo[c], space.hi[c]);
    }
    x
}

/// First valid candidate of one seeded search, scanning shells outward and
/// samples in draw order.
pub fn search_once(
    model: &dyn DecisionFunction,
    query: &QueryPoint,
    schema: &FeatureSchema,
    space: &GsSpace,
    cfg: &GsConfig,
    seed: u64,
    restart: u64,
) -> Option<(Vec<f64>, f64)> {
    let max_radius = effective_max_radius(cfg, space);
    let mut rng = substream(seed, Stream::Spheres, &[restart]);
    let mut shell = 0u64;
    loop {
        let r_in = shell as f64 * cfg.step;
        if r_in >= max_radius {
            return None;
        }
        let r_out = (r_in + cfg.step).min(max_radius);
        for _ in 0..cfg.samples_per_shell {
            let x = sample_in_shell(&query.x, schema, space, r_in, r_out, &mut rng);
            if model.predict(&x) == query.desired {
                return Some((x, r_out));
            }
        }
        shell += 1;
    }
}

pub fn effective_max_radius(cfg: &GsConfig, space: &GsSpace) -> f64 {
    cfg.max_radius
        .unwrap_or_else(|| (space.cont_cols.len() as f64).sqrt().max(1.0))
}

/// `k` counterfactuals from `k` independently seeded searches.
#[allow(clippy::too_many_arguments)]
pub fn growing_spheres(
    model: &dyn DecisionFunction,
    query: &QueryPoint,
    schema: &FeatureSchema,
    scales: &FeatureScales,
    space: &GsSpace,
    k: usize,
    cfg: &GsConfig,
    seed: u64,
) -> Result<CounterfactualSet> {
    if !(cfg.step.is_finite() && cfg.step > 0.0) {
        return Err(Error::Config("gs step must be positive".into()));
    }
    if cfg.max_radius.is_some_and(|r| !(r.is_finite() && r >= 0.0)) {
        return Err(Error::Config(
            "gs max_radius must be finite and >= 0".into(),
        ));
    }
    let objective = CounterfactualObjective {
        model,
        query,
        schema,
        scales,
        tol: SPARSITY_TOL,
    };
    let mut set = CounterfactualSet::empty(query.clone(), k, "gs");
    for restart in 0..k as u64 {
        if let Some((x, _)) = search_once(model, query, schema, space, cfg, seed, restart) {
            let breakdown = objective.evaluate(&x);
            set.push_distinct(
                Counterfactual {
                    position: x,
                    valid: true,
                    breakdown,
                },
                schema,
            );
        }
    }
    Ok(set)
}
