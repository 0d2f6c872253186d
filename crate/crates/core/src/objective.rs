//! The counterfactual loss: validity gap + mean Gower distance + number of
//! changed features.

use serde::{Deserialize, Serialize};

use crate::data::{FeatureKind, FeatureScales, FeatureSchema, QueryPoint};
use crate::model::{class_of, DecisionFunction, THRESHOLD};

/// Continuous changes at or below this magnitude (scaled units) do not count.
pub const SPARSITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    /// Validity gap.
    pub l1: f64,
    /// Mean Gower distance to the query.
    pub l2: f64,
    /// Number of changed features.
    pub l3: usize,
    pub total: f64,
}

impl ObjectiveBreakdown {
    pub fn new(l1: f64, l2: f64, l3: usize) -> Self {
        Self {
            l1,
            l2,
            l3,
            total: l1 + l2 + l3 as f64,
        }
    }
}

/// Zero when `p` already yields the desired class, otherwise the distance
/// from `p` to the decision threshold. A probability of exactly 0.5 is class 1.
pub fn l1_validity(p: f64, desired: u8) -> f64 {
    if class_of(p) == desired {
        0.0
    } else {
        (p - THRESHOLD).abs()
    }
}

/// Whether feature `j` differs between two encoded rows.
pub fn feature_changed(x0: &[f64], x: &[f64], schema: &FeatureSchema, j: usize, tol: f64) -> bool {
    match schema.feature(j).kind {
        FeatureKind::Continuous => {
            let c = schema.block(j).start;
            (x[c] - x0[c]).abs() > tol
        }
        FeatureKind::Categorical => schema.level_of(x, j) != schema.level_of(x0, j),
    }
}

/// Mean per-feature Gower distance over the original features.
pub fn l2_gower(x0: &[f64], x: &[f64], schema: &FeatureSchema, scales: &FeatureScales) -> f64 {
    let p = schema.len();
    let mut sum = 0.0;
    for j in 0..p {
        sum += match schema.feature(j).kind {
            FeatureKind::Continuous => {
                let c = schema.block(j).start;
                (x[c] - x0[c]).abs() / scales.range[j]
            }
            FeatureKind::Categorical => {
                f64::from(u8::from(schema.level_of(x, j) != schema.level_of(x0, j)))
            }
        };
    }
    sum / p as f64
}

/// Count of changed original features.
pub fn l3_sparsity(x0: &[f64], x: &[f64], schema: &FeatureSchema, tol: f64) -> usize {
    (0..schema.len())
        .filter(|&j| feature_changed(x0, x, schema, j, tol))
        .count()
}

/// Anything the swarm can minimize.
pub trait Objective: Sync {
    fn evaluate(&self, x: &[f64]) -> ObjectiveBreakdown;
}

/// Loss of a candidate counterfactual for one query.
pub struct CounterfactualObjective<'a> {
    pub model: &'a dyn DecisionFunction,
    pub query: &'a QueryPoint,
    pub schema: &'a FeatureSchema,
    pub scales: &'a FeatureScales,
    pub tol: f64,
}

impl Objective for CounterfactualObjective<'_> {
    fn evaluate(&self, x: &[f64]) -> ObjectiveBreakdown {
        let p = self.model.predict_proba(x);
        ObjectiveBreakdown::new(
            l1_validity(p, self.query.desired),
            l2_gower(&self.query.x, x, self.schema, self.scales),
            l3_sparsity(&self.query.x, x, self.schema, self.tol),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureSpec;

    fn mixed() -> FeatureSchema {
        FeatureSchema::new(vec![
            FeatureSpec::continuous("a"),
            FeatureSpec::categorical("b", ["u", "v"]),
        ])
        .unwrap()
    }

    #[test]
    fn l1_examples() {
        assert_eq!(l1_validity(0.8, 1), 0.0);
        assert!((l1_validity(0.3, 1) - 0.2).abs() < 1e-15);
        // Boundary: p = 0.5 is class 1, so desired 0 is not met but the gap is 0.
        assert_eq!(l1_validity(0.5, 0), 0.0);
        assert_eq!(class_of(0.5), 1);
        assert!((l1_validity(0.7, 0) - 0.2).abs() < 1e-15);
        assert_eq!(l1_validity(0.49, 0), 0.0);
    }

    #[test]
    fn l2_examples() {
        let s = mixed();
        let scales = FeatureScales::unit(2);
        let x0 = [0.2, 1.0, 0.0];
        assert_eq!(l2_gower(&x0, &x0, &s, &scales), 0.0);
        let x = [0.6, 0.0, 1.0];
        assert!((l2_gower(&x0, &x, &s, &scales) - 0.7).abs() < 1e-15);
        let far = [1.0, 0.0, 1.0];
        assert_eq!(l2_gower(&[0.0, 1.0, 0.0], &far, &s, &scales), 1.0);
    }

    #[test]
    fn l3_examples() {
        let s = FeatureSchema::new(vec![
            FeatureSpec::continuous("a"),
            FeatureSpec::continuous("b"),
            FeatureSpec::categorical("c", ["u", "v"]),
        ])
        .unwrap();
        let x0 = [0.1, 0.2, 1.0, 0.0];
        assert_eq!(l3_sparsity(&x0, &x0, &s, SPARSITY_TOL), 0);
        assert_eq!(l3_sparsity(&x0, &[0.1, 0.9, 1.0, 0.0], &s, SPARSITY_TOL), 1);
        assert_eq!(
            l3_sparsity(&x0, &[0.1 + 1e-9, 0.2, 1.0, 0.0], &s, SPARSITY_TOL),
            0
        );
        assert_eq!(l3_sparsity(&x0, &[0.5, 0.9, 0.0, 1.0], &s, SPARSITY_TOL), 3);
    }

    #[test]
    fn breakdown_total_is_sum() {
        let b = ObjectiveBreakdown::new(0.25, 0.5, 2);
        assert_eq!(b.total, 2.75);
    }
}
