//! Mixed-discrete particle swarm optimization.
//!
//! Continuous coordinates move freely inside their box. Each categorical block
//! lives in the unit hypercube as real values and is snapped to the nearest
//! one-hot corner (its argmax) whenever the position is evaluated or emitted.
//! The velocity carries an extra divergence term that pushes each particle
//! away from the swarm mean.

use std::collections::BTreeMap;
use std::ops::Range;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::active_set::ActiveSet;
use crate::data::{argmax, FeatureKind, FeatureSchema};
use crate::error::{Error, Result};
use crate::objective::{Objective, ObjectiveBreakdown};
use crate::rng::{substream, Stream};

/// How the random multipliers `r1, r2, r3` are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RMode {
    /// `r1 ~ U[0, c1]`, `r2 ~ U[0, c2]`, `r3 ~ U[c1, c2]`.
    #[default]
    Paper,
    /// Every `r ~ U[0, 1]`.
    Standard,
}

impl std::str::FromStr for RMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "paper" => Ok(Self::Paper),
            "standard" => Ok(Self::Standard),
            _ => Err(format!("unknown r-mode `{s}` (expected paper or standard)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwarmConfig {
    pub n_particles: usize,
    pub n_iterations: usize,
    /// Inertia.
    pub c0: f64,
    /// Attraction to the personal best.
    pub c1: f64,
    /// Attraction to the global best.
    pub c2: f64,
    /// Repulsion from the swarm mean.
    pub c3: f64,
    pub r_mode: RMode,
    /// Relative half-width of the box around each active continuous value.
    pub epsilon: f64,
    /// Per-feature overrides of `epsilon`, keyed by feature name.
    pub epsilon_overrides: BTreeMap<String, f64>,
    /// Values below this get the box `[0, max(z(1+eps), zero_band)]`.
    pub zero_band: f64,
    /// Limit each velocity component to the width of its box.
    pub velocity_clamp: bool,
    /// Set per query by the driver.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        Self {
            n_particles: 50,
            n_iterations: 100,
            c0: 0.7,
            c1: 1.5,
            c2: 1.5,
            c3: 0.5,
            r_mode: RMode::Paper,
            epsilon: 0.5,
            epsilon_overrides: BTreeMap::new(),
            zero_band: 0.05,
            velocity_clamp: true,
            seed: 0,
        }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 2 {
            return Err(Error::Config(
                "the swarm needs at least two particles".into(),
            ));
        }
        let coeffs = [self.c0, self.c1, self.c2, self.c3];
        if coeffs.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::Config(
                "coefficients must be finite and non-negative".into(),
            ));
        }
        let eps = std::iter::once(&self.epsilon).chain(self.epsilon_overrides.values());
        for e in eps {
            if !(e.is_finite() && *e >= 0.0) {
                return Err(Error::Config(format!(
                    "epsilon {e} must be finite and >= 0"
                )));
            }
        }
        if !(self.zero_band.is_finite() && self.zero_band >= 0.0) {
            return Err(Error::Config("zero_band must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn epsilon_for(&self, name: &str) -> f64 {
        self.epsilon_overrides
            .get(name)
            .copied()
            .unwrap_or(self.epsilon)
    }
}

/// Box around a single scaled value `z`: `[z(1-eps), z(1+eps)]` capped to
/// `[0, 1]`, widened to `[0, max(z(1+eps), zero_band)]` when `z < zero_band`.
pub fn interval(z: f64, epsilon: f64, zero_band: f64) -> (f64, f64) {
    let up = z * (1.0 + epsilon);
    if z < zero_band {
        return (0.0, up.max(zero_band).min(1.0));
    }
    ((z * (1.0 - epsilon)).max(0.0), up.min(1.0))
}

/// Where the swarm may move for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub x0: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Encoded columns the optimizer may move, ascending.
    pub active_cols: Vec<usize>,
    /// Column ranges of active categorical blocks.
    pub categorical_blocks: Vec<Range<usize>>,
}

impl SearchSpace {
    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    /// Snaps every active categorical block to its one-hot corner.
    pub fn snap(&self, raw: &[f64]) -> Vec<f64> {
        let mut x = raw.to_vec();
        for block in &self.categorical_blocks {
            let hot = argmax(&raw[block.clone()]);
            for (k, v) in x[block.clone()].iter_mut().enumerate() {
                *v = if k == hot { 1.0 } else { 0.0 };
            }
        }
        x
    }

    /// Inactive columns equal `x0`, the rest lie inside their bounds.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && (0..self.dim()).all(|c| {
                if self.active_cols.binary_search(&c).is_ok() {
                    self.lo[c] <= x[c] && x[c] <= self.hi[c]
                } else {
                    x[c] == self.x0[c]
                }
            })
    }
}

/// Per-column bounds for a query. Active continuous columns get the epsilon
/// box, active categorical columns the unit interval, inactive columns the
/// degenerate bound `[z, z]`.
pub fn box_bounds(
    x0: &[f64],
    schema: &FeatureSchema,
    active: &ActiveSet,
    cfg: &SwarmConfig,
) -> SearchSpace {
    let mut lo = x0.to_vec();
    let mut hi = x0.to_vec();
    let mut active_cols = Vec::new();
    let mut categorical_blocks = Vec::new();
    let mut features = active.features.clone();
    features.sort_unstable();
    for j in features {
        let spec = schema.feature(j);
        let block = schema.block(j);
        match spec.kind {
            FeatureKind::Continuous => {
                let c = block.start;
                let (l, h) = interval(x0[c], cfg.epsilon_for(&spec.name), cfg.zero_band);
                lo[c] = l;
                hi[c] = h;
            }
            FeatureKind::Categorical => {
                for c in block.clone() {
                    lo[c] = 0.0;
                    hi[c] = 1.0;
                }
                categorical_blocks.push(block.clone());
            }
        }
        active_cols.extend(block);
    }
    SearchSpace {
        x0: x0.to_vec(),
        lo,
        hi,
        active_cols,
        categorical_blocks,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draws {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
}

impl Draws {
    /// Draws `r1`, `r2`, `r3` in that order.
    pub fn sample<R: Rng>(cfg: &SwarmConfig, rng: &mut R) -> Self {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let u3: f64 = rng.random();
        match cfg.r_mode {
            RMode::Standard => Self {
                r1: u1,
                r2: u2,
                r3: u3,
            },
            RMode::Paper => {
                let (a, b) = if cfg.c1 <= cfg.c2 {
                    (cfg.c1, cfg.c2)
                } else {
                    (cfg.c2, cfg.c1)
                };
                Self {
                    r1: u1 * cfg.c1,
                    r2: u2 * cfg.c2,
                    r3: a + u3 * (b - a),
                }
            }
        }
    }
}

/// `c0 V + c1 r1 (P_i - X) + c2 r2 (P_g - X) + c3 r3 (X - mean)` on the
/// active columns; other columns keep their velocity.
#[allow(clippy::too_many_arguments)]
pub fn velocity_update(
    x: &[f64],
    v: &[f64],
    personal_best: &[f64],
    global_best: &[f64],
    swarm_mean: &[f64],
    cfg: &SwarmConfig,
    draws: Draws,
    active_cols: &[usize],
) -> Result<Vec<f64>> {
    let d = x.len();
    if [
        v.len(),
        personal_best.len(),
        global_best.len(),
        swarm_mean.len(),
    ]
    .iter()
    .any(|&l| l != d)
    {
        return Err(Error::Invariant(
            "velocity update dimension mismatch".into(),
        ));
    }
    let mut out = v.to_vec();
    for &c in active_cols {
        out[c] = cfg.c0 * v[c]
            + cfg.c1 * draws.r1 * (personal_best[c] - x[c])
            + cfg.c2 * draws.r2 * (global_best[c] - x[c])
            + cfg.c3 * draws.r3 * (x[c] - swarm_mean[c]);
    }
    Ok(out)
}

/// Limits each active velocity component to the width of its box.
pub fn clamp_velocity(v: &mut [f64], space: &SearchSpace) {
    for &c in &space.active_cols {
        let w = space.hi[c] - space.lo[c];
        v[c] = v[c].clamp(-w, w);
    }
}

/// `X + V` on active columns, clamped to the box; inactive columns stay at
/// `x0`. The result keeps raw categorical values, see [`SearchSpace::snap`].
pub fn position_update(x: &[f64], v: &[f64], space: &SearchSpace) -> Vec<f64> {
    let mut out = space.x0.clone();
    for &c in &space.active_cols {
        out[c] = (x[c] + v[c]).clamp(space.lo[c], space.hi[c]);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    /// Internal position; categorical blocks hold real values.
    pub raw: Vec<f64>,
    pub velocity: Vec<f64>,
    /// Snapped position that was last evaluated.
    pub position: Vec<f64>,
    pub value: ObjectiveBreakdown,
    pub best_position: Vec<f64>,
    pub best_value: ObjectiveBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmOutcome {
    pub particles: Vec<Particle>,
    pub global_best: Vec<f64>,
    pub global_best_value: ObjectiveBreakdown,
    /// Global best after initialization (entry 0) and after every iteration.
    pub trace: Vec<ObjectiveBreakdown>,
}

fn evaluate_at<O: Objective>(
    objective: &O,
    space: &SearchSpace,
    raw: Vec<f64>,
    velocity: Vec<f64>,
) -> Particle {
    let position = space.snap(&raw);
    let value = objective.evaluate(&position);
    Particle {
        raw,
        velocity,
        best_position: position.clone(),
        best_value: value,
        position,
        value,
    }
}

fn best_index(particles: &[Particle]) -> usize {
    let mut best = 0;
    for (i, p) in particles.iter().enumerate().skip(1) {
        if p.best_value.total < particles[best].best_value.total {
            best = i;
        }
    }
    best
}

/// Runs the swarm. Each particle draws from its own stream per iteration, so
/// the outcome does not depend on the number of worker threads.
pub fn optimize<O: Objective>(
    objective: &O,
    space: &SearchSpace,
    cfg: &SwarmConfig,
) -> Result<SwarmOutcome> {
    cfg.validate()?;
    let d = space.dim();
    let mut particles: Vec<Particle> = (0..cfg.n_particles)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(cfg.seed, Stream::SwarmInit, &[i as u64]);
            let mut raw = space.x0.clone();
            for &c in &space.active_cols {
                let u: f64 = rng.random();
                raw[c] = space.lo[c] + (space.hi[c] - space.lo[c]) * u;
            }
            evaluate_at(objective, space, raw, vec![0.0; d])
        })
        .collect();

    let g = best_index(&particles);
    let mut global_best = particles[g].best_position.clone();
    let mut global_best_value = particles[g].best_value;
    let mut trace = Vec::with_capacity(cfg.n_iterations + 1);
    trace.push(global_best_value);

    for t in 0..cfg.n_iterations {
        let mut mean = vec![0.0; d];
        for p in &particles {
            for (m, x) in mean.iter_mut().zip(&p.raw) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= particles.len() as f64;
        }

        let gb = &global_best;
        let mean = &mean;
        particles
            .par_iter_mut()
            .enumerate()
            .try_for_each(|(i, p)| -> Result<()> {
                let mut rng = substream(cfg.seed, Stream::SwarmStep, &[t as u64, i as u64]);
                let draws = Draws::sample(cfg, &mut rng);
                let mut v = velocity_update(
                    &p.raw,
                    &p.velocity,
                    &p.best_position,
                    gb,
                    mean,
                    cfg,
                    draws,
                    &space.active_cols,
                )?;
                if cfg.velocity_clamp {
                    clamp_velocity(&mut v, space);
                }
                p.raw = position_update(&p.raw, &v, space);
                p.velocity = v;
                p.position = space.snap(&p.raw);
                p.value = objective.evaluate(&p.position);
                if p.value.total < p.best_value.total {
                    p.best_value = p.value;
                    p.best_position = p.position.clone();
                }
                Ok(())
            })?;

        for p in &particles {
            if p.best_value.total < global_best_value.total {
                global_best_value = p.best_value;
                global_best = p.best_position.clone();
            }
        }
        trace.push(global_best_value);
    }

    Ok(SwarmOutcome {
        particles,
        global_best,
        global_best_value,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FeatureScales, FeatureSpec, QueryPoint};
    use crate::objective::{l2_gower, CounterfactualObjective, SPARSITY_TOL};
    use approx::assert_abs_diff_eq;

    fn pinned(r1: f64, r2: f64, r3: f64) -> Draws {
        Draws { r1, r2, r3 }
    }

    fn coeffs(c0: f64, c1: f64, c2: f64, c3: f64) -> SwarmConfig {
        SwarmConfig {
            c0,
            c1,
            c2,
            c3,
            ..SwarmConfig::default()
        }
    }

    #[test]
    fn velocity_pure_inertia() {
        let cfg = coeffs(1.0, 0.0, 0.0, 0.0);
        let z = [0.0, 0.0];
        let v = velocity_update(
            &z,
            &[0.1, -0.2],
            &z,
            &z,
            &z,
            &cfg,
            pinned(1.0, 1.0, 1.0),
            &[0, 1],
        )
        .unwrap();
        assert_eq!(v, vec![0.1, -0.2]);
    }

    #[test]
    fn velocity_pure_exploitation() {
        let cfg = coeffs(0.0, 1.0, 0.0, 0.0);
        let v = velocity_update(
            &[0.2],
            &[0.5],
            &[0.5],
            &[0.0],
            &[0.0],
            &cfg,
            pinned(1.0, 0.0, 0.0),
            &[0],
        )
        .unwrap();
        assert_abs_diff_eq!(v[0], 0.3, epsilon = 1e-15);
    }

    #[test]
    fn divergence_term_points_away_from_mean() {
        let cfg = coeffs(0.0, 0.0, 0.0, 1.0);
        let v = velocity_update(
            &[0.5],
            &[0.0],
            &[0.5],
            &[0.5],
            &[0.3],
            &cfg,
            pinned(0.0, 0.0, 1.0),
            &[0],
        )
        .unwrap();
        assert_abs_diff_eq!(v[0], 0.2, epsilon = 1e-15);
        assert!(v[0] > 0.0);
    }

    #[test]
    fn inactive_columns_and_mismatch() {
        let cfg = coeffs(1.0, 1.0, 1.0, 1.0);
        let v = velocity_update(
            &[0.1, 0.2],
            &[0.0, 0.0],
            &[0.9, 0.9],
            &[0.9, 0.9],
            &[0.0, 0.0],
            &cfg,
            pinned(1.0, 1.0, 1.0),
            &[1],
        )
        .unwrap();
        assert_eq!(v[0], 0.0);
        assert!(velocity_update(
            &[0.1],
            &[0.0, 0.0],
            &[0.1],
            &[0.1],
            &[0.1],
            &cfg,
            pinned(1.0, 1.0, 1.0),
            &[0]
        )
        .is_err());
    }

    #[test]
    fn scaled_draw_ranges() {
        let cfg = SwarmConfig {
            c1: 1.0,
            c2: 2.0,
            ..SwarmConfig::default()
        };
        let mut rng = substream(1, Stream::SwarmStep, &[]);
        for _ in 0..1000 {
            let d = Draws::sample(&cfg, &mut rng);
            assert!((0.0..=1.0).contains(&d.r1));
            assert!((0.0..=2.0).contains(&d.r2));
            assert!((1.0..=2.0).contains(&d.r3));
        }
        let std = SwarmConfig {
            r_mode: RMode::Standard,
            ..cfg
        };
        for _ in 0..1000 {
            let d = Draws::sample(&std, &mut rng);
            assert!([d.r1, d.r2, d.r3].iter().all(|r| (0.0..1.0).contains(r)));
        }
    }

    fn space_1d(z: f64, lo: f64, hi: f64) -> SearchSpace {
        SearchSpace {
            x0: vec![z],
            lo: vec![lo],
            hi: vec![hi],
            active_cols: vec![0],
            categorical_blocks: vec![],
        }
    }

    #[test]
    fn position_clamps_at_upper_bound() {
        let s = space_1d(0.5, 0.4, 0.6);
        assert_eq!(position_update(&[0.5], &[0.3], &s), vec![0.6]);
    }

    #[test]
    fn snapping_takes_argmax_with_lowest_index_on_ties() {
        let s = SearchSpace {
            x0: vec![1.0, 0.0, 0.0, 1.0, 0.0],
            lo: vec![0.0; 5],
            hi: vec![1.0; 5],
            active_cols: vec![0, 1, 2, 3, 4],
            categorical_blocks: vec![0..3, 3..5],
        };
        assert_eq!(
            s.snap(&[0.3, 0.8, 0.1, 0.5, 0.5]),
            vec![0.0, 1.0, 0.0, 1.0, 0.0]
        );
    }

    #[test]
    fn interval_examples() {
        let (l, h) = interval(0.9, 0.2, 0.05);
        assert_abs_diff_eq!(l, 0.72, epsilon = 1e-15);
        assert_eq!(h, 1.0);
        let (l, h) = interval(0.5, 0.1, 0.05);
        assert_abs_diff_eq!(l, 0.45, epsilon = 1e-15);
        assert_abs_diff_eq!(h, 0.55, epsilon = 1e-15);
        assert_eq!(interval(0.0, 0.5, 0.05), (0.0, 0.05));
        assert_eq!(interval(0.0, 0.5, 0.0), (0.0, 0.0));
    }

    #[test]
    fn box_bounds_freeze_inactive_columns() {
        let schema = FeatureSchema::new(vec![
            FeatureSpec::continuous("a"),
            FeatureSpec::continuous("b"),
            FeatureSpec::categorical("c", ["x", "y"]),
        ])
        .unwrap();
        let active = ActiveSet {
            features: vec![2, 0],
            names: vec!["c".into(), "a".into()],
        };
        let cfg = SwarmConfig {
            epsilon: 0.1,
            ..SwarmConfig::default()
        };
        let s = box_bounds(&[0.5, 0.3, 0.0, 1.0], &schema, &active, &cfg);
        assert_eq!(s.active_cols, vec![0, 2, 3]);
        assert_eq!((s.lo[1], s.hi[1]), (0.3, 0.3));
        assert_eq!((s.lo[2], s.hi[2]), (0.0, 1.0));
        assert_eq!(s.categorical_blocks, vec![2..4]);
    }

    struct Distance<'a>(&'a [f64], &'a FeatureSchema);

    impl Objective for Distance<'_> {
        fn evaluate(&self, x: &[f64]) -> ObjectiveBreakdown {
            ObjectiveBreakdown::new(
                0.0,
                l2_gower(self.0, x, self.1, &FeatureScales::unit(self.1.len())),
                0,
            )
        }
    }

    #[test]
    fn converges_to_query_under_distance_only() {
        let schema = FeatureSchema::new(vec![
            FeatureSpec::continuous("a"),
            FeatureSpec::continuous("b"),
        ])
        .unwrap();
        let x0 = [0.5, 0.4];
        let active = ActiveSet {
            features: vec![0, 1],
            names: vec!["a".into(), "b".into()],
        };
        let cfg = SwarmConfig {
            c3: 0.0,
            r_mode: RMode::Standard,
            seed: 3,
            ..SwarmConfig::default()
        };
        let space = box_bounds(&x0, &schema, &active, &cfg);
        let out = optimize(&Distance(&x0, &schema), &space, &cfg).unwrap();
        assert!(
            out.global_best_value.total < 1e-3,
            "{:?}",
            out.global_best_value
        );
        assert!(out.trace.windows(2).all(|w| w[1].total <= w[0].total));
    }

    #[test]
    fn crosses_a_step_boundary() {
        let schema = FeatureSchema::new(vec![FeatureSpec::continuous("a")]).unwrap();
        let query = QueryPoint::new(vec![0.4], 0, 1, &schema).unwrap();
        let step = |x: &[f64]| if x[0] >= 0.5 { 1.0 } else { 0.0 };
        let scales = FeatureScales::unit(1);
        let obj = CounterfactualObjective {
            model: &step,
            query: &query,
            schema: &schema,
            scales: &scales,
            tol: SPARSITY_TOL,
        };
        let active = ActiveSet {
            features: vec![0],
            names: vec!["a".into()],
        };
        let cfg = SwarmConfig {
            seed: 11,
            ..SwarmConfig::default()
        };
        let space = box_bounds(&query.x, &schema, &active, &cfg);
        let out = optimize(&obj, &space, &cfg).unwrap();
        assert!(out.global_best[0] >= 0.5);
        assert_eq!(out.global_best_value.l1, 0.0);
        // Line scan: the best valid point is the boundary itself.
        assert!(out.global_best[0] - 0.5 < 0.01);
        assert!(out.trace.windows(2).all(|w| w[1].total <= w[0].total));
    }

    #[test]
    fn positions_respect_space_and_one_hot() {
        let schema = FeatureSchema::new(vec![
            FeatureSpec::continuous("a"),
            FeatureSpec::continuous("b"),
            FeatureSpec::categorical("c", ["x", "y", "z"]),
        ])
        .unwrap();
        let query = QueryPoint::new(vec![0.6, 0.3, 0.0, 0.0, 1.0], 1, 0, &schema).unwrap();
        let model = |x: &[f64]| (x[0] + x[2] * 0.5).min(1.0);
        let scales = FeatureScales::unit(3);
        let obj = CounterfactualObjective {
            model: &model,
            query: &query,
            schema: &schema,
            scales: &scales,
            tol: SPARSITY_TOL,
        };
        let active = ActiveSet {
            features: vec![0, 2],
            names: vec!["a".into(), "c".into()],
        };
        let cfg = SwarmConfig {
            n_iterations: 30,
            seed: 5,
            ..SwarmConfig::default()
        };
        let space = box_bounds(&query.x, &schema, &active, &cfg);
        let out = optimize(&obj, &space, &cfg).unwrap();
        for p in &out.particles {
            assert!(space.contains(&p.position));
            assert!(space.contains(&p.raw));
            schema.check_one_hot(&p.position).unwrap();
            assert_eq!(p.position[1], 0.3);
            let b = p.value;
            assert_eq!(b.total, b.l1 + b.l2 + b.l3 as f64);
        }
    }

    #[test]
    fn identical_across_thread_counts() {
        let schema = FeatureSchema::new(vec![
            FeatureSpec::continuous("a"),
            FeatureSpec::continuous("b"),
        ])
        .unwrap();
        let query = QueryPoint::new(vec![0.7, 0.8], 1, 0, &schema).unwrap();
        let model = |x: &[f64]| 0.5 * (x[0] + x[1]) + 0.2;
        let scales = FeatureScales::unit(2);
        let obj = CounterfactualObjective {
            model: &model,
            query: &query,
            schema: &schema,
            scales: &scales,
            tol: SPARSITY_TOL,
        };
        let active = ActiveSet {
            features: vec![0, 1],
            names: vec!["a".into(), "b".into()],
        };
        let cfg = SwarmConfig {
            seed: 42,
            ..SwarmConfig::default()
        };
        let space = box_bounds(&query.x, &schema, &active, &cfg);
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let a = one.install(|| optimize(&obj, &space, &cfg).unwrap());
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let b = many.install(|| optimize(&obj, &space, &cfg).unwrap());
        assert_eq!(a, b);
    }
}
