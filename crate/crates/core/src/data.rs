//! Tabular data ingestion, scaling and encoding.
//!
//! Rows are stored in an encoded layout: continuous features occupy a single
//! column min-max scaled to `[0, 1]`, categorical features occupy one column
//! per level holding a one-hot block. Scaling is fitted on the train split.

use std::collections::HashSet;
use std::ops::Range;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, SchemaError};
use crate::rng::{substream, Stream};

/// Name of the label column in CSV input.
pub const LABEL_COLUMN: &str = "label";

/// Fraction of rows held out for testing (one in five).
const TEST_DENOMINATOR: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Continuous,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<String>,
    #[serde(default = "default_mutable")]
    pub mutable: bool,
}

fn default_mutable() -> bool {
    true
}

impl FeatureSpec {
    pub fn continuous(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Continuous,
            levels: Vec::new(),
            mutable: true,
        }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        levels: impl IntoIterator<Item = S>,
    ) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Categorical,
            levels: levels.into_iter().map(Into::into).collect(),
            mutable: true,
        }
    }

    pub fn immutable(mut self) -> Self {
        self.mutable = false;
        self
    }

    /// Number of encoded columns this feature occupies.
    pub fn width(&self) -> usize {
        match self.kind {
            FeatureKind::Continuous => 1,
            FeatureKind::Categorical => self.levels.len(),
        }
    }

    pub fn is_continuous(&self) -> bool {
        self.kind == FeatureKind::Continuous
    }
}

#[derive(Serialize, Deserialize)]
struct SchemaFile {
    features: Vec<FeatureSpec>,
}

/// Ordered feature list with a precomputed encoded layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SchemaFile", into = "SchemaFile")]
pub struct FeatureSchema {
    features: Vec<FeatureSpec>,
    offsets: Vec<usize>,
    width: usize,
}

impl TryFrom<SchemaFile> for FeatureSchema {
    type Error = SchemaError;

    fn try_from(file: SchemaFile) -> Result<Self, SchemaError> {
        FeatureSchema::new(file.features)
    }
}

impl From<FeatureSchema> for SchemaFile {
    fn from(schema: FeatureSchema) -> Self {
        SchemaFile {
            features: schema.features,
        }
    }
}

impl FeatureSchema {
    pub fn new(features: Vec<FeatureSpec>) -> Result<Self, SchemaError> {
        let mut seen = HashSet::new();
        for spec in &features {
            if !seen.insert(spec.name.as_str()) {
                return Err(SchemaError::DuplicateFeature(spec.name.clone()));
            }
            match spec.kind {
                FeatureKind::Categorical if spec.levels.len() < 2 => {
                    return Err(SchemaError::TooFewLevels(spec.name.clone()))
                }
                FeatureKind::Continuous if !spec.levels.is_empty() => {
                    return Err(SchemaError::UnexpectedLevels(spec.name.clone()))
                }
                _ => {}
            }
        }
        let mut offsets = Vec::with_capacity(features.len());
        let mut width = 0;
        for spec in &features {
            offsets.push(width);
            width += spec.width();
        }
        Ok(Self {
            features,
            offsets,
            width,
        })
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: SchemaFile = serde_json::from_str(&text)?;
        Ok(Self::new(file.features)?)
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn feature(&self, j: usize) -> &FeatureSpec {
        &self.features[j]
    }

    /// Number of original features (`p`).
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn encoded_width(&self) -> usize {
        self.width
    }

    /// Encoded columns belonging to feature `j`.
    pub fn block(&self, j: usize) -> Range<usize> {
        self.offsets[j]..self.offsets[j] + self.features[j].width()
    }

    pub fn n_continuous(&self) -> usize {
        self.features.iter().filter(|f| f.is_continuous()).count()
    }

    pub fn n_categorical(&self) -> usize {
        self.len() - self.n_continuous()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    /// Original feature owning encoded column `col`.
    pub fn feature_of_column(&self, col: usize) -> usize {
        debug_assert!(col < self.width);
        self.offsets.partition_point(|&o| o <= col) - 1
    }

    /// Index of the hot level in the categorical block of feature `j`;
    /// ties resolve to the lowest index.
    pub fn level_of(&self, x: &[f64], j: usize) -> usize {
        argmax(&x[self.block(j)])
    }

    /// Fails unless every categorical block of `x` is exactly one-hot.
    pub fn check_one_hot(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.width {
            return Err(Error::Invariant(format!(
                "row width {} does not match encoded width {}",
                x.len(),
                self.width
            )));
        }
        for (j, spec) in self.features.iter().enumerate() {
            if spec.is_continuous() {
                continue;
            }
            let block = &x[self.block(j)];
            let ones = block.iter().filter(|&&v| v == 1.0).count();
            let zeros = block.iter().filter(|&&v| v == 0.0).count();
            if ones != 1 || zeros != block.len() - 1 {
                return Err(Error::Invariant(format!(
                    "categorical block of `{}` is not one-hot: {block:?}",
                    spec.name
                )));
            }
        }
        Ok(())
    }
}

/// Position of the largest value; the first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Train-split statistics of a continuous feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuousStats {
    /// Minimum in original units.
    pub min: f64,
    /// Maximum in original units.
    pub max: f64,
    /// Median absolute deviation in scaled units.
    pub mad: f64,
    /// Range in scaled units; 1 by construction, 1 as fallback for constants.
    pub range: f64,
}

/// Per-feature normalizers used by distances and metrics. Entries for
/// categorical features are 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScales {
    /// Gower normalizer `R_j`.
    pub range: Vec<f64>,
    /// MAD denominator, with 1.0 substituted when the MAD is zero.
    pub mad: Vec<f64>,
}

impl FeatureScales {
    pub fn unit(p: usize) -> Self {
        Self {
            range: vec![1.0; p],
            mad: vec![1.0; p],
        }
    }
}

/// A raw (unencoded) feature value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Number(f64),
    Level(String),
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Number(v) => write!(f, "{v}"),
            Value::Level(s) => f.write_str(s),
        }
    }
}

/// Which split of a dataset to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Encoded, scaled dataset with binary labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema: FeatureSchema,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Indexed by feature; `None` for categorical features.
    pub stats: Vec<Option<ContinuousStats>>,
    /// Rows that had at least one value clamped into `[0, 1]`.
    pub clamped: Vec<usize>,
}

impl Dataset {
    /// Splits `raw` 80/20 with a seeded shuffle, fits scaling on the train
    /// split and encodes every row.
    pub fn from_raw(
        schema: FeatureSchema,
        raw: &[Vec<Value>],
        labels: Vec<u8>,
        split_seed: u64,
    ) -> Result<Self> {
        if raw.len() != labels.len() {
            return Err(Error::Usage(format!(
                "{} rows but {} labels",
                raw.len(),
                labels.len()
            )));
        }
        for (i, row) in raw.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(SchemaError::Width {
                    expected: schema.len(),
                    found: row.len(),
                }
                .into());
            }
            for (spec, v) in schema.features().iter().zip(row) {
                match (spec.kind, v) {
                    (FeatureKind::Continuous, Value::Number(_)) => {}
                    (FeatureKind::Continuous, Value::Level(s)) => {
                        return Err(SchemaError::NonNumeric {
                            feature: spec.name.clone(),
                            row: i + 1,
                            value: s.clone(),
                        }
                        .into())
                    }
                    (FeatureKind::Categorical, v) => {
                        let s = v.to_string();
                        if !spec.levels.contains(&s) {
                            return Err(SchemaError::UnseenLevel {
                                feature: spec.name.clone(),
                                row: i + 1,
                                value: s,
                            }
                            .into());
                        }
                    }
                }
            }
        }
        let (train, test) = split_indices(raw.len(), split_seed);

        let mut stats = Vec::with_capacity(schema.len());
        for (j, spec) in schema.features().iter().enumerate() {
            if !spec.is_continuous() || train.is_empty() {
                stats.push(None);
                continue;
            }
            let values: Vec<f64> = train.iter().map(|&i| number(&raw[i][j])).collect();
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let scaled: Vec<f64> = values.iter().map(|&v| scale(v, min, max)).collect();
            let lo = scaled.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let range = if hi > lo { hi - lo } else { 1.0 };
            stats.push(Some(ContinuousStats {
                min,
                max,
                mad: mad(&scaled)?,
                range,
            }));
        }

        let mut ds = Self {
            schema,
            rows: Vec::with_capacity(raw.len()),
            labels,
            train,
            test,
            stats,
            clamped: Vec::new(),
        };
        for (i, row) in raw.iter().enumerate() {
            let (x, clamped) = ds.encode(row)?;
            if clamped {
                ds.clamped.push(i);
            }
            ds.rows.push(x);
        }
        Ok(ds)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn split(&self, split: Split) -> &[usize] {
        match split {
            Split::Train => &self.train,
            Split::Test => &self.test,
        }
    }

    pub fn scales(&self) -> FeatureScales {
        let range = self
            .stats
            .iter()
            .map(|s| s.map_or(1.0, |s| s.range))
            .collect();
        let mad = self
            .stats
            .iter()
            .map(|s| s.map_or(1.0, |s| if s.mad > 0.0 { s.mad } else { 1.0 }))
            .collect();
        FeatureScales { range, mad }
    }

    /// Encodes one raw row; the flag reports whether any continuous value
    /// fell outside the fitted range and was clamped.
    pub fn encode(&self, row: &[Value]) -> Result<(Vec<f64>, bool)> {
        let schema = &self.schema;
        if row.len() != schema.len() {
            return Err(SchemaError::Width {
                expected: schema.len(),
                found: row.len(),
            }
            .into());
        }
        let mut x = vec![0.0; schema.encoded_width()];
        let mut clamped = false;
        for (j, (spec, v)) in schema.features().iter().zip(row).enumerate() {
            let block = schema.block(j);
            match (spec.kind, v) {
                (FeatureKind::Continuous, Value::Number(v)) => {
                    let st = self.stats[j].ok_or_else(|| {
                        Error::Invariant(format!("no statistics for `{}`", spec.name))
                    })?;
                    let s = scale(*v, st.min, st.max);
                    if !(0.0..=1.0).contains(&s) {
                        clamped = true;
                    }
                    x[block.start] = s.clamp(0.0, 1.0);
                }
                (FeatureKind::Categorical, v) => {
                    let s = v.to_string();
                    let level = spec.levels.iter().position(|l| *l == s).ok_or_else(|| {
                        SchemaError::UnseenLevel {
                            feature: spec.name.clone(),
                            row: 0,
                            value: s.clone(),
                        }
                    })?;
                    x[block.start + level] = 1.0;
                }
                (FeatureKind::Continuous, Value::Level(s)) => {
                    return Err(SchemaError::NonNumeric {
                        feature: spec.name.clone(),
                        row: 0,
                        value: s.clone(),
                    }
                    .into())
                }
            }
        }
        Ok((x, clamped))
    }

    /// Maps an encoded row back to original units and level names.
    pub fn decode(&self, x: &[f64]) -> Result<Vec<(String, Value)>> {
        self.schema.check_one_hot(x)?;
        let mut out = Vec::with_capacity(self.schema.len());
        for (j, spec) in self.schema.features().iter().enumerate() {
            let block = self.schema.block(j);
            let value = match spec.kind {
                FeatureKind::Continuous => {
                    let st = self.stats[j].ok_or_else(|| {
                        Error::Invariant(format!("no statistics for `{}`", spec.name))
                    })?;
                    Value::Number(st.min + x[block.start] * (st.max - st.min))
                }
                FeatureKind::Categorical => Value::Level(spec.levels[argmax(&x[block])].clone()),
            };
            out.push((spec.name.clone(), value));
        }
        Ok(out)
    }

    pub fn to_json_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(file, &DatasetArtifact::wrap(self))?;
        Ok(())
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let artifact: DatasetArtifact = serde_json::from_str(&text)?;
        artifact.unwrap()
    }
}

pub const DATASET_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct DatasetArtifact {
    format_version: u32,
    dataset: Dataset,
}

impl DatasetArtifact {
    fn wrap(ds: &Dataset) -> Self {
        Self {
            format_version: DATASET_FORMAT_VERSION,
            dataset: ds.clone(),
        }
    }

    fn unwrap(self) -> Result<Dataset> {
        if self.format_version != DATASET_FORMAT_VERSION {
            return Err(Error::Usage(format!(
                "dataset artifact version {} is not supported (expected {DATASET_FORMAT_VERSION})",
                self.format_version
            )));
        }
        Ok(self.dataset)
    }
}

fn number(v: &Value) -> f64 {
    match v {
        Value::Number(x) => *x,
        Value::Level(_) => f64::NAN,
    }
}

fn scale(v: f64, min: f64, max: f64) -> f64 {
    if max > min {
        (v - min) / (max - min)
    } else {
        0.0
    }
}

/// Seeded shuffle into sorted (train, test) index sets, one row in five held out.
pub fn split_indices(n: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut substream(seed, Stream::Split, &[]));
    let n_test = n / TEST_DENOMINATOR;
    let mut test = idx[..n_test].to_vec();
    let mut train = idx[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    (train, test)
}

pub(crate) fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Usage("median of an empty list".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(median_sorted(&v))
}

/// Median absolute deviation from the median.
pub fn mad(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Usage("MAD of an empty list".into()));
    }
    let m = median(values)?;
    let dev: Vec<f64> = values.iter().map(|v| (v - m).abs()).collect();
    median(&dev)
}

/// Reads a CSV with a header row plus a JSON schema sidecar.
pub fn load_csv(
    path: impl AsRef<Path>,
    schema_path: impl AsRef<Path>,
    split_seed: u64,
) -> Result<Dataset> {
    let schema = FeatureSchema::from_json_file(schema_path)?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let (raw, labels) = read_records(&schema, &mut reader)?;
    Dataset::from_raw(schema, &raw, labels, split_seed)
}

fn read_records<R: std::io::Read>(
    schema: &FeatureSchema,
    reader: &mut csv::Reader<R>,
) -> Result<(Vec<Vec<Value>>, Vec<u8>)> {
    let headers = reader.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let mut cols = Vec::with_capacity(schema.len());
    for spec in schema.features() {
        cols.push(
            column(&spec.name).ok_or_else(|| SchemaError::MissingColumn {
                feature: spec.name.clone(),
            })?,
        );
    }
    let label_col = column(LABEL_COLUMN).ok_or_else(|| SchemaError::MissingColumn {
        feature: LABEL_COLUMN.into(),
    })?;

    let mut raw = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row_no = i + 1;
        let mut row = Vec::with_capacity(schema.len());
        for (spec, &c) in schema.features().iter().zip(&cols) {
            let cell = record.get(c).unwrap_or("");
            let v = match spec.kind {
                FeatureKind::Continuous => {
                    let x: f64 = cell.parse().map_err(|_| SchemaError::NonNumeric {
                        feature: spec.name.clone(),
                        row: row_no,
                        value: cell.to_string(),
                    })?;
                    if !x.is_finite() {
                        return Err(SchemaError::NonNumeric {
                            feature: spec.name.clone(),
                            row: row_no,
                            value: cell.to_string(),
                        }
                        .into());
                    }
                    Value::Number(x)
                }
                FeatureKind::Categorical => {
                    if !spec.levels.iter().any(|l| l == cell) {
                        return Err(SchemaError::UnseenLevel {
                            feature: spec.name.clone(),
                            row: row_no,
                            value: cell.to_string(),
                        }
                        .into());
                    }
                    Value::Level(cell.to_string())
                }
            };
            row.push(v);
        }
        let label = record.get(label_col).unwrap_or("");
        let y = match label {
            "0" | "0.0" => 0,
            "1" | "1.0" => 1,
            _ => {
                return Err(SchemaError::NonBinaryLabel {
                    row: row_no,
                    value: label.to_string(),
                }
                .into())
            }
        };
        raw.push(row);
        labels.push(y);
    }
    Ok((raw, labels))
}

/// Writes raw rows plus labels as CSV with a header.
pub fn write_csv(
    path: impl AsRef<Path>,
    schema: &FeatureSchema,
    raw: &[Vec<Value>],
    labels: &[u8],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = schema.features().iter().map(|f| f.name.as_str()).collect();
    header.push(LABEL_COLUMN);
    w.write_record(&header)?;
    for (row, y) in raw.iter().zip(labels) {
        let mut rec: Vec<String> = row.iter().map(Value::to_string).collect();
        rec.push(y.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Shape of a synthetic two-blob dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub n: usize,
    pub n_cont: usize,
    pub n_cat: usize,
    pub levels: usize,
    /// Distance between the class means along each continuous axis, in
    /// units of the within-class standard deviation.
    pub separation: f64,
    /// Leading continuous features whose mean depends on the class; `None`
    /// shifts all of them.
    pub n_informative: Option<usize>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n: 500,
            n_cont: 12,
            n_cat: 2,
            levels: 3,
            separation: 3.0,
            n_informative: Some(4),
        }
    }
}

/// Raw synthetic rows before encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub schema: FeatureSchema,
    pub raw: Vec<Vec<Value>>,
    pub labels: Vec<u8>,
}

/// Two Gaussian blobs in continuous space with categorical features whose
/// level preference follows the class. Labels alternate, so both classes
/// are equally represented.
pub fn synth_raw(seed: u64, spec: &SynthSpec) -> Result<SynthData> {
    if spec.n < 20 {
        return Err(Error::Usage(format!(
            "synthetic datasets need at least 20 rows, got {}",
            spec.n
        )));
    }
    if spec.n_cont + spec.n_cat == 0 || (spec.n_cat > 0 && spec.levels < 2) {
        return Err(Error::Usage(
            "synthetic schema is empty or degenerate".into(),
        ));
    }
    let levels: Vec<String> = (0..spec.levels).map(|l| format!("L{l}")).collect();
    let mut features = Vec::new();
    for j in 0..spec.n_cont {
        features.push(FeatureSpec::continuous(format!("x{j}")));
    }
    for j in 0..spec.n_cat {
        features.push(FeatureSpec::categorical(format!("c{j}"), levels.clone()));
    }
    let schema = FeatureSchema::new(features)?;

    // Categorical class affinity grows with separation and saturates at 0.8.
    let affinity = (spec.separation / 4.0).clamp(0.0, 0.8);
    let informative = spec.n_informative.unwrap_or(spec.n_cont).min(spec.n_cont);
    let mut rng = substream(seed, Stream::Synth, &[]);
    let mut raw = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let y = (i % 2) as u8;
        let shift = if y == 1 { 0.5 } else { -0.5 } * spec.separation;
        let mut row = Vec::with_capacity(schema.len());
        for j in 0..spec.n_cont {
            let z: f64 = StandardNormal.sample(&mut rng);
            let s = if j < informative { shift } else { 0.0 };
            row.push(Value::Number(z + s));
        }
        for _ in 0..spec.n_cat {
            let preferred = if y == 1 { spec.levels - 1 } else { 0 };
            let level = if rng.random::<f64>() < affinity {
                preferred
            } else {
                rng.random_range(0..spec.levels)
            };
            row.push(Value::Level(levels[level].clone()));
        }
        raw.push(row);
        labels.push(y);
    }
    Ok(SynthData {
        schema,
        raw,
        labels,
    })
}

/// Synthetic dataset, split and scaled with the same seed.
pub fn synth_dataset(seed: u64, spec: &SynthSpec) -> Result<Dataset> {
    let data = synth_raw(seed, spec)?;
    Dataset::from_raw(data.schema, &data.raw, data.labels, seed)
}

/// A point to explain: its encoding, the class it currently receives, and
/// the class it should receive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryPoint {
    pub x: Vec<f64>,
    pub original: u8,
    pub desired: u8,
}

impl QueryPoint {
    pub fn new(x: Vec<f64>, original: u8, desired: u8, schema: &FeatureSchema) -> Result<Self> {
        if original > 1 || desired > 1 {
            return Err(Error::Usage("classes must be 0 or 1".into()));
        }
        if original == desired {
            return Err(Error::Usage(format!(
                "query is already in the desired class {desired}"
            )));
        }
        schema.check_one_hot(&x)?;
        Ok(Self {
            x,
            original,
            desired,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::File::create(&p)
            .unwrap()
            .write_all(body.as_bytes())
            .unwrap();
        p
    }

    const SCHEMA: &str = r#"{"features":[
        {"name":"age","kind":"continuous"},
        {"name":"grade","kind":"categorical","levels":["A","B"],"mutable":false}
    ]}"#;

    #[test]
    fn min_max_endpoints_on_four_rows() {
        let dir = tempfile::tempdir().unwrap();
        let csv = write(
            dir.path(),
            "d.csv",
            "age,grade,label\n10,A,0\n20,B,1\n30,A,1\n15,B,0\n",
        );
        let schema = write(dir.path(), "s.json", SCHEMA);
        let ds = load_csv(&csv, &schema, 3).unwrap();
        assert_eq!(ds.train.len(), 4);
        let st = ds.stats[0].unwrap();
        assert_eq!((st.min, st.max), (10.0, 30.0));
        let col: Vec<f64> = ds.rows.iter().map(|r| r[0]).collect();
        assert_eq!(col, vec![0.0, 0.5, 1.0, 0.25]);
        assert_eq!(&ds.rows[1][1..], &[0.0, 1.0]);
        assert!(!ds.schema.feature(1).mutable);
    }

    #[test]
    fn constant_column_scales_to_zero_with_unit_range() {
        let raw: Vec<Vec<Value>> = (0..10).map(|_| vec![Value::Number(5.0)]).collect();
        let schema = FeatureSchema::new(vec![FeatureSpec::continuous("c")]).unwrap();
        let labels = (0..10).map(|i| (i % 2) as u8).collect();
        let ds = Dataset::from_raw(schema, &raw, labels, 1).unwrap();
        assert!(ds.rows.iter().all(|r| r[0] == 0.0));
        assert_eq!(ds.stats[0].unwrap().range, 1.0);
        assert_eq!(ds.scales().mad, vec![1.0]);
    }

    #[test]
    fn schema_violations_are_distinct() {
        let dir = tempfile::tempdir().unwrap();
        let schema = write(dir.path(), "s.json", SCHEMA);
        let cases = [
            (
                "grade,label\nA,0\n",
                SchemaError::MissingColumn {
                    feature: "age".into(),
                },
            ),
            (
                "age,grade,label\n1,A,0\nx,B,1\n",
                SchemaError::NonNumeric {
                    feature: "age".into(),
                    row: 2,
                    value: "x".into(),
                },
            ),
            (
                "age,grade,label\n1,C,0\n",
                SchemaError::UnseenLevel {
                    feature: "grade".into(),
                    row: 1,
                    value: "C".into(),
                },
            ),
            (
                "age,grade,label\n1,A,2\n",
                SchemaError::NonBinaryLabel {
                    row: 1,
                    value: "2".into(),
                },
            ),
            (
                "age,grade\n1,A\n",
                SchemaError::MissingColumn {
                    feature: "label".into(),
                },
            ),
        ];
        for (i, (body, expected)) in cases.into_iter().enumerate() {
            let csv = write(dir.path(), &format!("{i}.csv"), body);
            match load_csv(&csv, &schema, 0) {
                Err(Error::Schema(e)) => assert_eq!(e, expected),
                other => panic!("case {i}: unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn schema_rejects_bad_definitions() {
        let dup = FeatureSchema::new(vec![
            FeatureSpec::continuous("a"),
            FeatureSpec::continuous("a"),
        ]);
        assert_eq!(dup.unwrap_err(), SchemaError::DuplicateFeature("a".into()));
        let one_level = FeatureSchema::new(vec![FeatureSpec::categorical("c", ["x"])]);
        assert_eq!(
            one_level.unwrap_err(),
            SchemaError::TooFewLevels("c".into())
        );
        let bad: std::result::Result<FeatureSchema, _> = serde_json::from_str(
            r#"{"features":[{"name":"c","kind":"categorical","levels":["x"]}]}"#,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn mad_examples() {
        assert_eq!(mad(&[1.0, 1.0, 2.0, 2.0, 4.0, 6.0, 9.0]).unwrap(), 1.0);
        assert_eq!(mad(&[5.0, 5.0, 5.0]).unwrap(), 0.0);
        assert_eq!(mad(&[0.0, 1.0]).unwrap(), 0.5);
        assert!(matches!(mad(&[]), Err(Error::Usage(_))));
    }

    #[test]
    fn decode_examples() {
        let schema = FeatureSchema::new(vec![
            FeatureSpec::continuous("v"),
            FeatureSpec::categorical("g", ["A", "B"]),
        ])
        .unwrap();
        let ds = Dataset {
            schema,
            rows: vec![],
            labels: vec![],
            train: vec![],
            test: vec![],
            stats: vec![
                Some(ContinuousStats {
                    min: 10.0,
                    max: 30.0,
                    mad: 0.1,
                    range: 1.0,
                }),
                None,
            ],
            clamped: vec![],
        };
        let out = ds.decode(&[0.5, 1.0, 0.0]).unwrap();
        assert_eq!(out[0], ("v".to_string(), Value::Number(20.0)));
        assert_eq!(out[1], ("g".to_string(), Value::Level("A".into())));
        assert!(matches!(
            ds.decode(&[0.5, 0.0, 0.0]),
            Err(Error::Invariant(_))
        ));
        assert!(matches!(
            ds.decode(&[0.5, 1.0, 1.0]),
            Err(Error::Invariant(_))
        ));
    }

    #[test]
    fn synth_is_deterministic_and_split_80_20() {
        let spec = SynthSpec {
            n: 200,
            n_cont: 4,
            n_cat: 2,
            ..SynthSpec::default()
        };
        let a = serde_json::to_string(&synth_dataset(7, &spec).unwrap()).unwrap();
        let b = serde_json::to_string(&synth_dataset(7, &spec).unwrap()).unwrap();
        assert_eq!(a, b);
        let small = synth_dataset(1, &SynthSpec { n: 20, ..spec }).unwrap();
        assert_eq!((small.train.len(), small.test.len()), (16, 4));
        assert!(matches!(
            synth_dataset(1, &SynthSpec { n: 19, ..spec }),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn test_rows_outside_train_range_are_clamped_and_flagged() {
        let spec = SynthSpec {
            n: 300,
            n_cont: 3,
            n_cat: 1,
            ..SynthSpec::default()
        };
        let ds = synth_dataset(11, &spec).unwrap();
        assert!(ds.rows.iter().flatten().all(|v| (0.0..=1.0).contains(v)));
        for &i in &ds.clamped {
            assert!(ds.test.contains(&i), "train row {i} cannot need clamping");
        }
    }

    #[test]
    fn query_point_requires_class_flip() {
        let schema = FeatureSchema::new(vec![FeatureSpec::continuous("v")]).unwrap();
        assert!(QueryPoint::new(vec![0.2], 1, 1, &schema).is_err());
        assert!(QueryPoint::new(vec![0.2], 1, 0, &schema).is_ok());
    }
}
