//! End-to-end generation: rank features, pick queries, run a method per
//! query and score the results.

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::active_set::{iv_table, select_active, ActiveSet, IvTable, IvVariant, DEFAULT_BINS};
use crate::baseline_gs::{growing_spheres, GsConfig, GsMode, GsSpace};
use crate::data::{Dataset, QueryPoint, Split};
use crate::error::{Error, Result};
use crate::mdpso::{box_bounds, optimize, SearchSpace, SwarmConfig};
use crate::metrics::{evaluate_set, summarize, MetricsReport};
use crate::model::{
    train_forest, train_logistic, DecisionFunction, ForestParams, LogisticParams, Model,
};
use crate::objective::{CounterfactualObjective, ObjectiveBreakdown, SPARSITY_TOL};
use crate::rng::{derive_seed, substream, Stream};
use crate::select::{select_cfs, CounterfactualSet, SelectionInput, SelectionMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Mdpso,
    Gs,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mdpso => "mdpso",
            Method::Gs => "gs",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "mdpso" => Ok(Self::Mdpso),
            "gs" => Ok(Self::Gs),
            _ => Err(format!("unknown method `{s}` (expected mdpso or gs)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Class the counterfactuals should receive. When unset, each query
    /// targets the complement of its predicted class and sampling draws rows
    /// predicted as class 1.
    pub desired_class: Option<u8>,
    /// Number of test rows sampled as queries.
    pub queries: usize,
    /// Explicit query rows; overrides sampling.
    pub rows: Option<Vec<usize>>,
    /// Sample only rows whose label agrees with the prediction.
    pub only_correct: bool,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            desired_class: None,
            queries: 5,
            rows: None,
            only_correct: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Logistic,
    #[default]
    Forest,
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "logistic" => Ok(Self::Logistic),
            "forest" => Ok(Self::Forest),
            _ => Err(format!(
                "unknown model kind `{s}` (expected logistic or forest)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub bootstrap: bool,
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let f = ForestParams::default();
        let l = LogisticParams::default();
        Self {
            kind: ModelKind::Forest,
            n_trees: f.n_trees,
            max_depth: f.max_depth,
            min_samples_split: f.min_samples_split,
            bootstrap: f.bootstrap,
            learning_rate: l.learning_rate,
            epochs: l.epochs,
        }
    }
}

pub fn train_model(data: &Dataset, cfg: &ModelConfig, seed: u64) -> Result<Model> {
    Ok(match cfg.kind {
        ModelKind::Logistic => Model::Logistic(train_logistic(
            data,
            &LogisticParams {
                learning_rate: cfg.learning_rate,
                epochs: cfg.epochs,
            },
        )?),
        ModelKind::Forest => Model::Forest(train_forest(
            data,
            &ForestParams {
                n_trees: cfg.n_trees,
                max_depth: cfg.max_depth,
                min_samples_split: cfg.min_samples_split,
                bootstrap: cfg.bootstrap,
                seed,
            },
        )?),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    /// Counterfactuals per query.
    pub k: usize,
    pub mode: SelectionMode,
    /// Active-set size; defaults to half the mutable features, rounded up.
    pub h: Option<usize>,
    pub iv_bins: usize,
    pub iv_variant: IvVariant,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            k: 5,
            mode: SelectionMode::Cluster,
            h: None,
            iv_bins: DEFAULT_BINS,
            iv_variant: IvVariant::Paper,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Label for the `dataset` column of comparison tables.
    pub dataset: String,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            dataset: "synthetic".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub method: Method,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub swarm: SwarmConfig,
    pub selection: SelectionConfig,
    pub baseline: GsConfig,
    pub metrics: MetricsConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.swarm.validate()?;
        if self.data.desired_class.is_some_and(|c| c > 1) {
            return Err(Error::Config("desired_class must be 0 or 1".into()));
        }
        if self.selection.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.selection.h == Some(0) {
            return Err(Error::Config("h must be at least 1".into()));
        }
        if self.selection.iv_bins == 0 {
            return Err(Error::Config("iv_bins must be at least 1".into()));
        }
        Ok(())
    }

    pub fn effective_h(&self, data: &Dataset) -> usize {
        let mutable = data.schema.features().iter().filter(|f| f.mutable).count();
        self.selection.h.unwrap_or(mutable.div_ceil(2)).max(1)
    }
}

/// IV table and active set for a dataset under `cfg`.
pub fn rank_features(data: &Dataset, cfg: &RunConfig) -> Result<(IvTable, ActiveSet)> {
    let table = iv_table(data, cfg.selection.iv_bins, cfg.selection.iv_variant)?;
    let active = select_active(&table, cfg.effective_h(data))?;
    Ok((table, active))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedQuery {
    pub row: usize,
    pub query: QueryPoint,
}

/// Explicit rows from the config, or a seeded sample of test rows predicted
/// as the undesired class. Returns warnings for rows that were skipped.
pub fn choose_queries(
    data: &Dataset,
    model: &dyn DecisionFunction,
    cfg: &RunConfig,
) -> Result<(Vec<SelectedQuery>, Vec<String>)> {
    let sampled_class = cfg.data.desired_class.map_or(1, |d| 1 - d);
    let mut warnings = Vec::new();
    let rows: Vec<usize> = match &cfg.data.rows {
        Some(rows) => {
            let mut keep = Vec::new();
            for &r in rows {
                if r >= data.n_rows() {
                    return Err(Error::Usage(format!(
                        "query row {r} is out of range ({} rows)",
                        data.n_rows()
                    )));
                }
                match cfg.data.desired_class {
                    Some(d) if model.predict(&data.rows[r]) == d => warnings.push(format!(
                        "row {r} is already predicted as class {d}; skipped"
                    )),
                    _ => keep.push(r),
                }
            }
            keep
        }
        None => {
            let candidates: Vec<usize> = data
                .split(Split::Test)
                .iter()
                .copied()
                .filter(|&i| model.predict(&data.rows[i]) == sampled_class)
                .filter(|&i| !cfg.data.only_correct || data.labels[i] == sampled_class)
                .collect();
            let n = cfg.data.queries.min(candidates.len());
            if n < cfg.data.queries {
                warnings.push(format!(
                    "only {} eligible test rows are predicted as class {sampled_class}; using all of them",
                    candidates.len()
                ));
            }
            let mut rng = substream(cfg.seed, Stream::Queries, &[]);
            let mut picked: Vec<usize> = sample(&mut rng, candidates.len(), n)
                .into_iter()
                .map(|i| candidates[i])
                .collect();
            picked.sort_unstable();
            picked
        }
    };
    let queries = rows
        .into_iter()
        .map(|row| {
            let original = model.predict(&data.rows[row]);
            Ok(SelectedQuery {
                row,
                query: QueryPoint::new(
                    data.rows[row].clone(),
                    original,
                    1 - original,
                    &data.schema,
                )?,
            })
        })
        .collect::<Result<_>>()?;
    Ok((queries, warnings))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRun {
    /// Position in the query list.
    pub index: usize,
    pub row: usize,
    pub set: CounterfactualSet,
    /// Global best per iteration; empty for methods without one.
    pub trace: Vec<ObjectiveBreakdown>,
    /// Bounds the swarm searched, when the method used them.
    pub space: Option<SearchSpace>,
    pub metrics: MetricsReport,
}

/// Seed used for the query at position `index`.
pub fn query_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, Stream::Run, &[index as u64])
}

/// Runs `method` on every query in parallel.
pub fn run_method(
    data: &Dataset,
    model: &dyn DecisionFunction,
    cfg: &RunConfig,
    method: Method,
    active: &ActiveSet,
    queries: &[SelectedQuery],
) -> Result<Vec<QueryRun>> {
    cfg.validate()?;
    let scales = data.scales();
    let schema = &data.schema;
    queries
        .par_iter()
        .enumerate()
        .map(|(index, sq)| {
            let seed = query_seed(cfg.seed, index);
            let swarm = SwarmConfig {
                seed,
                ..cfg.swarm.clone()
            };
            let space = box_bounds(&sq.query.x, schema, active, &swarm);
            let (set, trace, space) = match method {
                Method::Mdpso => {
                    let objective = CounterfactualObjective {
                        model,
                        query: &sq.query,
                        schema,
                        scales: &scales,
                        tol: SPARSITY_TOL,
                    };
                    let outcome = optimize(&objective, &space, &swarm)?;
                    let set = select_cfs(&SelectionInput {
                        outcome: &outcome,
                        model,
                        query: &sq.query,
                        schema,
                        k: cfg.selection.k,
                        mode: cfg.selection.mode,
                        seed,
                    })?;
                    (set, outcome.trace, Some(space))
                }
                Method::Gs => {
                    let (gs_space, used) = match cfg.baseline.mode {
                        GsMode::Paper => (GsSpace::unconstrained(schema), None),
                        GsMode::Constrained => (GsSpace::constrained(schema, &space), Some(space)),
                    };
                    let set = growing_spheres(
                        model,
                        &sq.query,
                        schema,
                        &scales,
                        &gs_space,
                        cfg.selection.k,
                        &cfg.baseline,
                        seed,
                    )?;
                    (set, Vec::new(), used)
                }
            };
            let metrics = evaluate_set(&set, schema, &scales);
            Ok(QueryRun {
                index,
                row: sq.row,
                set,
                trace,
                space,
                metrics,
            })
        })
        .collect()
}

/// Everything one `generate` call produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    pub method: Method,
    pub dataset: String,
    pub active: ActiveSet,
    pub runs: Vec<QueryRun>,
    pub summary: MetricsReport,
    pub warnings: Vec<String>,
}

pub fn generate(
    data: &Dataset,
    model: &dyn DecisionFunction,
    cfg: &RunConfig,
    method: Method,
) -> Result<Generation> {
    cfg.validate()?;
    let (_, active) = rank_features(data, cfg)?;
    let (queries, warnings) = choose_queries(data, model, cfg)?;
    let runs = run_method(data, model, cfg, method, &active, &queries)?;
    let sets: Vec<CounterfactualSet> = runs.iter().map(|r| r.set.clone()).collect();
    Ok(Generation {
        method,
        dataset: cfg.metrics.dataset.clone(),
        active,
        summary: summarize(&sets, &data.schema, &data.scales()),
        runs,
        warnings,
    })
}

/// One row of the method comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub dataset: String,
    pub method: Method,
    pub metrics: MetricsReport,
}

impl Generation {
    pub fn table_row(&self) -> TableRow {
        TableRow {
            dataset: self.dataset.clone(),
            method: self.method,
            metrics: self.summary,
        }
    }

    /// Recomputes the per-run and summary metrics from the stored sets.
    pub fn rescore(&mut self, data: &Dataset) {
        let scales = data.scales();
        for run in &mut self.runs {
            run.metrics = evaluate_set(&run.set, &data.schema, &scales);
        }
        let sets: Vec<CounterfactualSet> = self.runs.iter().map(|r| r.set.clone()).collect();
        self.summary = summarize(&sets, &data.schema, &scales);
    }
}

/// Both methods over the same queries and seeds.
pub fn benchmark(
    data: &Dataset,
    model: &dyn DecisionFunction,
    cfg: &RunConfig,
) -> Result<Vec<Generation>> {
    cfg.validate()?;
    let (_, active) = rank_features(data, cfg)?;
    let (queries, warnings) = choose_queries(data, model, cfg)?;
    let scales = data.scales();
    [Method::Mdpso, Method::Gs]
        .into_iter()
        .map(|method| {
            let runs = run_method(data, model, cfg, method, &active, &queries)?;
            let sets: Vec<CounterfactualSet> = runs.iter().map(|r| r.set.clone()).collect();
            Ok(Generation {
                method,
                dataset: cfg.metrics.dataset.clone(),
                active: active.clone(),
                summary: summarize(&sets, &data.schema, &scales),
                runs,
                warnings: warnings.clone(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_dataset, SynthSpec};

    fn small() -> (Dataset, Model, RunConfig) {
        let data = synth_dataset(
            3,
            &SynthSpec {
                n: 200,
                ..SynthSpec::default()
            },
        )
        .unwrap();
        let cfg = RunConfig {
            model: ModelConfig {
                n_trees: 20,
                ..ModelConfig::default()
            },
            swarm: SwarmConfig {
                n_particles: 20,
                n_iterations: 20,
                ..SwarmConfig::default()
            },
            data: DataConfig {
                queries: 2,
                ..DataConfig::default()
            },
            ..RunConfig::default()
        };
        let model = train_model(&data, &cfg.model, cfg.seed).unwrap();
        (data, model, cfg)
    }

    #[test]
    fn queries_are_undesired_test_rows() {
        let (data, model, cfg) = small();
        let (qs, warnings) = choose_queries(&data, &model, &cfg).unwrap();
        assert_eq!(qs.len(), 2);
        assert!(warnings.is_empty());
        for q in &qs {
            assert!(data.test.contains(&q.row));
            assert_eq!(model.predict(&q.query.x), 1);
            assert_eq!(q.query.desired, 0);
        }
    }

    #[test]
    fn explicit_rows_target_the_other_class() {
        let (data, model, mut cfg) = small();
        let neg = (0..data.n_rows())
            .find(|&i| model.predict(&data.rows[i]) == 0)
            .unwrap();
        let pos = (0..data.n_rows())
            .find(|&i| model.predict(&data.rows[i]) == 1)
            .unwrap();
        cfg.data.rows = Some(vec![neg, pos]);
        let (qs, warnings) = choose_queries(&data, &model, &cfg).unwrap();
        assert_eq!(qs.len(), 2);
        assert!(warnings.is_empty());
        assert_eq!((qs[0].query.desired, qs[1].query.desired), (1, 0));
        cfg.data.desired_class = Some(0);
        let (qs, warnings) = choose_queries(&data, &model, &cfg).unwrap();
        assert_eq!(qs.iter().map(|q| q.row).collect::<Vec<_>>(), vec![pos]);
        assert_eq!(warnings.len(), 1);
        cfg.data.rows = Some(vec![data.n_rows()]);
        assert!(choose_queries(&data, &model, &cfg).is_err());
    }

    #[test]
    fn h_one_changes_at_most_one_feature() {
        let (data, model, mut cfg) = small();
        cfg.selection.h = Some(1);
        let g = generate(&data, &model, &cfg, Method::Mdpso).unwrap();
        for run in &g.runs {
            for cf in &run.set.cfs {
                assert!(cf.breakdown.l3 <= 1);
            }
        }
    }

    #[test]
    fn default_h_is_half_the_mutable_features() {
        let (data, _, cfg) = small();
        assert_eq!(cfg.effective_h(&data), 7);
    }

    #[test]
    fn benchmark_runs_both_methods_on_same_queries() {
        let (data, model, cfg) = small();
        let b = benchmark(&data, &model, &cfg).unwrap();
        assert_eq!(b.len(), 2);
        let rows = |g: &Generation| g.runs.iter().map(|r| r.row).collect::<Vec<_>>();
        assert_eq!(rows(&b[0]), rows(&b[1]));
        assert_eq!(b[0].method, Method::Mdpso);
        assert_eq!(b[1].method, Method::Gs);
    }

    #[test]
    fn invalid_config_rejected() {
        let (data, model, mut cfg) = small();
        cfg.selection.k = 0;
        assert!(generate(&data, &model, &cfg, Method::Mdpso).is_err());
    }
}
