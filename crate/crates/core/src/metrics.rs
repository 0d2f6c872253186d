//! Actionability metrics over a set of counterfactuals.
//!
//! Metrics that are undefined for the input (no continuous features, fewer
//! than two counterfactuals, ...) come back as `None`.

use serde::{Deserialize, Serialize};

use crate::data::{FeatureKind, FeatureScales, FeatureSchema};
use crate::objective::{feature_changed, SPARSITY_TOL};
use crate::select::CounterfactualSet;

/// MAD-scaled mean absolute difference over continuous features.
pub fn d_cont(a: &[f64], b: &[f64], schema: &FeatureSchema, scales: &FeatureScales) -> Option<f64> {
    let n = schema.n_continuous();
    if n == 0 {
        return None;
    }
    let sum: f64 = (0..schema.len())
        .filter(|&j| schema.feature(j).kind == FeatureKind::Continuous)
        .map(|j| {
            let c = schema.block(j).start;
            (a[c] - b[c]).abs() / scales.mad[j]
        })
        .sum();
    Some(sum / n as f64)
}

/// Fraction of categorical features whose level differs.
pub fn d_cat(a: &[f64], b: &[f64], schema: &FeatureSchema) -> Option<f64> {
    let n = schema.n_categorical();
    if n == 0 {
        return None;
    }
    let changed = (0..schema.len())
        .filter(|&j| schema.feature(j).kind == FeatureKind::Categorical)
        .filter(|&j| schema.level_of(a, j) != schema.level_of(b, j))
        .count();
    Some(changed as f64 / n as f64)
}

/// `d_cont + d_cat`, each present only if that feature kind exists.
pub fn distance(a: &[f64], b: &[f64], schema: &FeatureSchema, scales: &FeatureScales) -> f64 {
    d_cont(a, b, schema, scales).unwrap_or(0.0) + d_cat(a, b, schema).unwrap_or(0.0)
}

fn mean_over<F: Fn(&[f64]) -> Option<f64>>(cfs: &[&[f64]], f: F) -> Option<f64> {
    if cfs.is_empty() {
        return None;
    }
    let mut sum = 0.0;
    for x in cfs {
        sum += f(x)?;
    }
    Some(sum / cfs.len() as f64)
}

pub fn proximity_cont(
    cfs: &[&[f64]],
    x0: &[f64],
    schema: &FeatureSchema,
    scales: &FeatureScales,
) -> Option<f64> {
    mean_over(cfs, |x| d_cont(x, x0, schema, scales))
}

pub fn proximity_cat(cfs: &[&[f64]], x0: &[f64], schema: &FeatureSchema) -> Option<f64> {
    mean_over(cfs, |x| d_cat(x, x0, schema))
}

/// Mean fraction of changed features per counterfactual.
pub fn sparsity(cfs: &[&[f64]], x0: &[f64], schema: &FeatureSchema) -> Option<f64> {
    let p = schema.len() as f64;
    mean_over(cfs, |x| {
        let changed = (0..schema.len())
            .filter(|&j| feature_changed(x0, x, schema, j, SPARSITY_TOL))
            .count();
        Some(changed as f64 / p)
    })
}

/// Mean pairwise distance.
pub fn diversity(cfs: &[&[f64]], schema: &FeatureSchema, scales: &FeatureScales) -> Option<f64> {
    let k = cfs.len();
    if k < 2 {
        return None;
    }
    let mut sum = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            sum += distance(cfs[i], cfs[j], schema, scales);
        }
    }
    Some(sum / (k * (k - 1) / 2) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedDiversity {
    pub value: Option<f64>,
    /// Pairs left out because both members coincide with the query.
    pub skipped_pairs: usize,
}

/// Mean over pairs of `d(a, b) / (prox(a) + prox(b))`.
pub fn diversity_norm(
    cfs: &[&[f64]],
    x0: &[f64],
    schema: &FeatureSchema,
    scales: &FeatureScales,
) -> NormalizedDiversity {
    let k = cfs.len();
    let prox: Vec<f64> = cfs
        .iter()
        .map(|x| distance(x, x0, schema, scales))
        .collect();
    let mut sum = 0.0;
    let mut used = 0usize;
    let mut skipped = 0usize;
    for i in 0..k {
        for j in i + 1..k {
            let denom = prox[i] + prox[j];
            if denom == 0.0 {
                skipped += 1;
                continue;
            }
            sum += distance(cfs[i], cfs[j], schema, scales) / denom;
            used += 1;
        }
    }
    NormalizedDiversity {
        value: (used > 0).then(|| sum / used as f64),
        skipped_pairs: skipped,
    }
}

/// Valid counterfactuals emitted over all runs divided by the number requested.
pub fn coverage(runs: &[CounterfactualSet]) -> Option<f64> {
    let requested: usize = runs.iter().map(|r| r.requested_k).sum();
    if requested == 0 {
        return None;
    }
    let valid: usize = runs.iter().map(CounterfactualSet::n_valid).sum();
    Some(valid as f64 / requested as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub proximity_cont: Option<f64>,
    pub proximity_cat: Option<f64>,
    pub sparsity: Option<f64>,
    pub diversity: Option<f64>,
    pub diversity_norm: Option<f64>,
    pub coverage: Option<f64>,
    /// Counterfactuals the metrics were computed over.
    pub k_effective: usize,
    pub skipped_pairs: usize,
}

/// Metrics of a single generation run.
pub fn evaluate_set(
    set: &CounterfactualSet,
    schema: &FeatureSchema,
    scales: &FeatureScales,
) -> MetricsReport {
    let cfs = set.positions();
    let x0 = &set.query.x;
    let nd = diversity_norm(&cfs, x0, schema, scales);
    MetricsReport {
        proximity_cont: proximity_cont(&cfs, x0, schema, scales),
        proximity_cat: proximity_cat(&cfs, x0, schema),
        sparsity: sparsity(&cfs, x0, schema),
        diversity: diversity(&cfs, schema, scales),
        diversity_norm: nd.value,
        coverage: coverage(std::slice::from_ref(set)),
        k_effective: cfs.len(),
        skipped_pairs: nd.skipped_pairs,
    }
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = values.flatten().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

/// Per-run metrics averaged over the runs where they are defined; coverage
/// pooled over all runs.
pub fn summarize(
    runs: &[CounterfactualSet],
    schema: &FeatureSchema,
    scales: &FeatureScales,
) -> MetricsReport {
    let reports: Vec<MetricsReport> = runs
        .iter()
        .map(|r| evaluate_set(r, schema, scales))
        .collect();
    MetricsReport {
        proximity_cont: mean_defined(reports.iter().map(|r| r.proximity_cont)),
        proximity_cat: mean_defined(reports.iter().map(|r| r.proximity_cat)),
        sparsity: mean_defined(reports.iter().map(|r| r.sparsity)),
        diversity: mean_defined(reports.iter().map(|r| r.diversity)),
        diversity_norm: mean_defined(reports.iter().map(|r| r.diversity_norm)),
        coverage: coverage(runs),
        k_effective: reports.iter().map(|r| r.k_effective).sum(),
        skipped_pairs: reports.iter().map(|r| r.skipped_pairs).sum(),
    }
}

/// Formats a metric for tables, `NA` when undefined.
pub fn fmt_metric(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FeatureSpec, QueryPoint};
    use crate::objective::ObjectiveBreakdown;
    use crate::select::Counterfactual;

    fn cont2() -> FeatureSchema {
        FeatureSchema::new(vec![
            FeatureSpec::continuous("a"),
            FeatureSpec::continuous("b"),
        ])
        .unwrap()
    }

    fn scales(mad: Vec<f64>) -> FeatureScales {
        FeatureScales {
            range: vec![1.0; mad.len()],
            mad,
        }
    }

    #[test]
    fn proximity_cont_examples() {
        let s = cont2();
        let sc = scales(vec![0.1, 0.2]);
        let x0 = [0.2, 0.5];
        assert_eq!(proximity_cont(&[&x0[..]], &x0, &s, &sc), Some(0.0));
        let cf = [0.5, 0.5];
        assert!((proximity_cont(&[&cf[..]], &x0, &s, &sc).unwrap() - 1.5).abs() < 1e-12);
        let unit = scales(vec![1.0, 1.0]);
        let a = [0.0, 1.0];
        let b = [1.0, 1.0];
        let x = [0.0, 0.0];
        // distances 0.5 and 1.0
        assert!((proximity_cont(&[&a[..], &b[..]], &x, &s, &unit).unwrap() - 0.75).abs() < 1e-12);
    }

    fn mixed() -> FeatureSchema {
        FeatureSchema::new(vec![
            FeatureSpec::categorical("c", ["x", "y"]),
            FeatureSpec::categorical("d", ["x", "y"]),
        ])
        .unwrap()
    }

    #[test]
    fn categorical_examples() {
        let s = mixed();
        let x0 = [1.0, 0.0, 1.0, 0.0];
        let one = [0.0, 1.0, 1.0, 0.0];
        let all = [0.0, 1.0, 0.0, 1.0];
        assert_eq!(proximity_cat(&[&x0[..]], &x0, &s), Some(0.0));
        assert_eq!(proximity_cat(&[&one[..]], &x0, &s), Some(0.5));
        assert_eq!(proximity_cat(&[&all[..], &all[..]], &x0, &s), Some(1.0));
        assert_eq!(
            proximity_cont(&[&one[..]], &x0, &s, &FeatureScales::unit(2)),
            None
        );
    }

    #[test]
    fn sparsity_examples() {
        let s = FeatureSchema::new(
            (0..10)
                .map(|i| FeatureSpec::continuous(format!("f{i}")))
                .collect(),
        )
        .unwrap();
        let x0 = vec![0.5; 10];
        assert_eq!(sparsity(&[&x0[..]], &x0, &s), Some(0.0));
        let mut cf = x0.clone();
        cf[3] = 0.9;
        cf[7] = 0.1;
        assert_eq!(sparsity(&[&cf[..]], &x0, &s), Some(0.2));
        let all = [0.0; 10];
        assert_eq!(sparsity(&[&all[..]], &x0, &s), Some(1.0));
    }

    #[test]
    fn diversity_examples() {
        let s = cont2();
        let sc = FeatureScales::unit(2);
        let a = [0.2, 0.2];
        assert_eq!(diversity(&[&a[..], &a[..]], &s, &sc), Some(0.0));
        assert_eq!(diversity(&[&a[..]], &s, &sc), None);
        // Equilateral triangle in (d_cont) with pairwise distance 0.4.
        let one = FeatureSchema::new(vec![FeatureSpec::continuous("a")]).unwrap();
        let mad = FeatureScales {
            range: vec![1.0],
            mad: vec![1.0],
        };
        let p = [0.0];
        let q = [0.4];
        assert!((diversity(&[&p[..], &q[..]], &one, &mad).unwrap() - 0.4).abs() < 1e-12);
        let cat = FeatureSchema::new(vec![FeatureSpec::categorical("c", ["x", "y", "z"])]).unwrap();
        let u = [1.0, 0.0, 0.0];
        let v = [0.0, 1.0, 0.0];
        let w = [0.0, 0.0, 1.0];
        let catsc = FeatureScales::unit(1);
        assert_eq!(
            diversity(&[&u[..], &v[..], &w[..]], &cat, &catsc),
            Some(1.0)
        );
    }

    #[test]
    fn diversity_norm_examples() {
        let s = FeatureSchema::new(vec![FeatureSpec::continuous("a")]).unwrap();
        let sc = FeatureScales::unit(1);
        let x0 = [0.5];
        let a = [0.0];
        let b = [1.0];
        let nd = diversity_norm(&[&a[..], &b[..]], &x0, &s, &sc);
        assert!((nd.value.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(
            diversity_norm(&[&a[..], &a[..]], &x0, &s, &sc).value,
            Some(0.0)
        );
        assert_eq!(diversity_norm(&[&a[..]], &x0, &s, &sc).value, None);
        let nd = diversity_norm(&[&x0[..], &x0[..]], &x0, &s, &sc);
        assert_eq!((nd.value, nd.skipped_pairs), (None, 1));
    }

    fn set_with(valid: usize, k: usize) -> CounterfactualSet {
        let s = FeatureSchema::new(vec![FeatureSpec::continuous("a")]).unwrap();
        let q = QueryPoint::new(vec![0.0], 0, 1, &s).unwrap();
        let mut set = CounterfactualSet::empty(q, k, "t");
        for i in 0..valid {
            set.cfs.push(Counterfactual {
                position: vec![i as f64],
                valid: true,
                breakdown: ObjectiveBreakdown::new(0.0, 0.0, 0),
            });
        }
        set
    }

    #[test]
    fn coverage_examples() {
        let full: Vec<_> = (0..5).map(|_| set_with(5, 5)).collect();
        assert_eq!(coverage(&full), Some(1.0));
        let mut one_empty = full.clone();
        one_empty[2] = set_with(0, 5);
        assert_eq!(coverage(&one_empty), Some(0.8));
        let none: Vec<_> = (0..5).map(|_| set_with(0, 5)).collect();
        assert_eq!(coverage(&none), Some(0.0));
    }

    #[test]
    fn fmt_metric_marks_undefined() {
        assert_eq!(fmt_metric(None), "NA");
        assert_eq!(fmt_metric(Some(0.25)), "0.25");
    }
}
