//! Information-Value feature ranking and the active set of mutable features.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureKind};
use crate::error::{Error, Result};

/// Bins used for continuous features.
pub const DEFAULT_BINS: usize = 10;

/// Added to every class count of every bin when any bin is empty in a class.
pub const ZERO_COUNT_SMOOTHING: f64 = 0.5;

/// Which form of the IV statistic to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IvVariant {
    /// `sum_i (p_i - n_i) * (p_i / n_i)`, no logarithm.
    #[default]
    Paper,
    /// Classical `sum_i (p_i - n_i) * ln(p_i / n_i)`.
    Log,
}

impl std::str::FromStr for IvVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "paper" => Ok(Self::Paper),
            "log" => Ok(Self::Log),
            _ => Err(format!("unknown IV variant `{s}` (expected paper or log)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureIv {
    pub feature: usize,
    pub name: String,
    pub iv: f64,
    pub mutable: bool,
    pub bins: Vec<Bin>,
}

/// IV of every feature, in schema order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvTable {
    pub features: Vec<FeatureIv>,
}

impl IvTable {
    /// Feature indices sorted by descending IV; ties keep schema order.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.features.len()).collect();
        order.sort_by(|&a, &b| self.features[b].iv.total_cmp(&self.features[a].iv));
        order
    }

    /// `feature,iv,rank` CSV with rank 1 the strongest.
    pub fn to_csv(&self) -> String {
        let mut rank = vec![0; self.features.len()];
        for (r, &j) in self.ranking().iter().enumerate() {
            rank[j] = r + 1;
        }
        let mut out = String::from("feature,iv,rank\n");
        for (f, r) in self.features.iter().zip(rank) {
            out.push_str(&format!("{},{},{}\n", f.name, f.iv, r));
        }
        out
    }
}

/// Features the optimizer may change, strongest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveSet {
    pub features: Vec<usize>,
    pub names: Vec<String>,
}

impl ActiveSet {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn contains(&self, feature: usize) -> bool {
        self.features.contains(&feature)
    }
}

/// Rank-based equal-frequency bins: lower edges are the order statistics at
/// positions `floor(i * n / n_bins)`, deduplicated. Membership depends only
/// on ranks, so any strictly increasing transform leaves it unchanged.
pub fn quantile_bins(values: &[f64], labels: &[u8], n_bins: usize) -> Vec<Bin> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let mut edges: Vec<f64> = Vec::with_capacity(n_bins);
    for i in 0..n_bins.max(1) {
        let e = sorted[i * n / n_bins.max(1)];
        if edges.last().is_none_or(|&last| e > last) {
            edges.push(e);
        }
    }
    let mut bins: Vec<Bin> = edges
        .iter()
        .enumerate()
        .map(|(b, &lo)| Bin {
            lo,
            hi: edges.get(b + 1).copied().unwrap_or(sorted[n - 1]),
            n_pos: 0,
            n_neg: 0,
        })
        .collect();
    for &i in &order {
        let b = edges.partition_point(|&e| e <= values[i]) - 1;
        if labels[i] == 1 {
            bins[b].n_pos += 1;
        } else {
            bins[b].n_neg += 1;
        }
    }
    bins
}

/// IV from per-bin class counts.
pub fn iv_from_counts(pos: &[f64], neg: &[f64], variant: IvVariant) -> Result<f64> {
    let n_p: f64 = pos.iter().sum();
    let n_n: f64 = neg.iter().sum();
    if n_p == 0.0 || n_n == 0.0 {
        return Err(Error::Usage(
            "information value needs both classes present".into(),
        ));
    }
    let needs_smoothing = pos.iter().chain(neg).any(|&c| c == 0.0);
    let s = if needs_smoothing {
        ZERO_COUNT_SMOOTHING
    } else {
        0.0
    };
    let n_p = n_p + s * pos.len() as f64;
    let n_n = n_n + s * neg.len() as f64;
    let mut iv = 0.0;
    for (&p, &q) in pos.iter().zip(neg) {
        let dp = (p + s) / n_p;
        let dn = (q + s) / n_n;
        let ratio = dp / dn;
        iv += (dp - dn)
            * match variant {
                IvVariant::Paper => ratio,
                IvVariant::Log => ratio.ln(),
            };
    }
    Ok(iv)
}

/// IV of a continuous feature with equal-frequency bins.
pub fn information_value(
    values: &[f64],
    labels: &[u8],
    n_bins: usize,
    variant: IvVariant,
) -> Result<f64> {
    if values.len() != labels.len() || values.is_empty() {
        return Err(Error::Usage(
            "values and labels must be non-empty and aligned".into(),
        ));
    }
    let bins = quantile_bins(values, labels, n_bins);
    bins_iv(&bins, variant)
}

fn bins_iv(bins: &[Bin], variant: IvVariant) -> Result<f64> {
    let pos: Vec<f64> = bins.iter().map(|b| b.n_pos as f64).collect();
    let neg: Vec<f64> = bins.iter().map(|b| b.n_neg as f64).collect();
    iv_from_counts(&pos, &neg, variant)
}

/// Quantile by linear interpolation between order statistics.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Tukey fences `[Q1 - 1.5 IQR, Q3 + 1.5 IQR]`.
pub fn tukey_fences(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&v, 0.25);
    let q3 = quantile_sorted(&v, 0.75);
    let iqr = q3 - q1;
    (q1 - 1.5 * iqr, q3 + 1.5 * iqr)
}

/// Drops values outside the Tukey fences.
pub fn remove_outliers(values: &[f64]) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let (lo, hi) = tukey_fences(values);
    values
        .iter()
        .copied()
        .filter(|v| (lo..=hi).contains(v))
        .collect()
}

/// IV of every feature over the train split. Continuous features are
/// outlier-filtered and binned into `n_bins`; categoricals get one bin per
/// level.
pub fn iv_table(data: &Dataset, n_bins: usize, variant: IvVariant) -> Result<IvTable> {
    if n_bins == 0 {
        return Err(Error::Usage("IV needs at least one bin".into()));
    }
    let schema = &data.schema;
    let labels: Vec<u8> = data.train.iter().map(|&i| data.labels[i]).collect();
    let mut features = Vec::with_capacity(schema.len());
    for (j, spec) in schema.features().iter().enumerate() {
        let bins = match spec.kind {
            FeatureKind::Continuous => {
                let col = schema.block(j).start;
                let values: Vec<f64> = data.train.iter().map(|&i| data.rows[i][col]).collect();
                let (lo, hi) = tukey_fences(&values);
                let (kept, kept_labels): (Vec<f64>, Vec<u8>) = values
                    .iter()
                    .zip(&labels)
                    .filter(|(v, _)| (lo..=hi).contains(*v))
                    .map(|(&v, &y)| (v, y))
                    .unzip();
                quantile_bins(&kept, &kept_labels, n_bins)
            }
            FeatureKind::Categorical => {
                let mut bins: Vec<Bin> = (0..spec.levels.len())
                    .map(|l| Bin {
                        lo: l as f64,
                        hi: l as f64,
                        n_pos: 0,
                        n_neg: 0,
                    })
                    .collect();
                for (&i, &y) in data.train.iter().zip(&labels) {
                    let b = &mut bins[schema.level_of(&data.rows[i], j)];
                    if y == 1 {
                        b.n_pos += 1;
                    } else {
                        b.n_neg += 1;
                    }
                }
                bins
            }
        };
        // A class can vanish after outlier filtering; such a feature carries
        // no measurable signal.
        let iv = match bins_iv(&bins, variant) {
            Ok(v) => v,
            Err(Error::Usage(_)) => 0.0,
            Err(e) => return Err(e),
        };
        features.push(FeatureIv {
            feature: j,
            name: spec.name.clone(),
            iv,
            mutable: spec.mutable,
            bins,
        });
    }
    Ok(IvTable { features })
}

/// The `h` mutable features with the highest IV.
pub fn select_active(table: &IvTable, h: usize) -> Result<ActiveSet> {
    if h == 0 {
        return Err(Error::Config("active set size h must be at least 1".into()));
    }
    let ranked: Vec<usize> = table
        .ranking()
        .into_iter()
        .filter(|&j| table.features[j].mutable)
        .collect();
    if ranked.is_empty() {
        return Err(Error::Config("the schema has no mutable features".into()));
    }
    let features: Vec<usize> = ranked.into_iter().take(h).collect();
    let names = features
        .iter()
        .map(|&j| table.features[j].name.clone())
        .collect();
    Ok(ActiveSet { features, names })
}

pub fn build_active_set(data: &Dataset, h: usize, variant: IvVariant) -> Result<ActiveSet> {
    select_active(&iv_table(data, DEFAULT_BINS, variant)?, h)
}
