//! CSV and text renderings of generation results.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{fmt_metric, MetricsReport};
use crate::pipeline::{Generation, TableRow};

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Invariant(format!("csv buffer: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Invariant(e.to_string()))
}

fn feature_names(data: &Dataset) -> Vec<String> {
    data.schema
        .features()
        .iter()
        .map(|f| f.name.clone())
        .collect()
}

/// One row per query, decoded to original units.
pub fn queries_csv(g: &Generation, data: &Dataset) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "query".to_string(),
        "row".into(),
        "original".into(),
        "desired".into(),
    ];
    header.extend(feature_names(data));
    w.write_record(&header)?;
    for run in &g.runs {
        let q = &run.set.query;
        let mut rec = vec![
            run.index.to_string(),
            run.row.to_string(),
            q.original.to_string(),
            q.desired.to_string(),
        ];
        rec.extend(data.decode(&q.x)?.into_iter().map(|(_, v)| v.to_string()));
        w.write_record(&rec)?;
    }
    finish(w)
}

/// One row per counterfactual, decoded to original units.
pub fn counterfactuals_csv(g: &Generation, data: &Dataset) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = [
        "query", "row", "method", "cf", "valid", "l1", "l2", "l3", "total",
    ]
    .map(String::from)
    .to_vec();
    header.extend(feature_names(data));
    w.write_record(&header)?;
    for run in &g.runs {
        for (i, cf) in run.set.cfs.iter().enumerate() {
            let b = cf.breakdown;
            let mut rec = vec![
                run.index.to_string(),
                run.row.to_string(),
                g.method.to_string(),
                i.to_string(),
                cf.valid.to_string(),
                b.l1.to_string(),
                b.l2.to_string(),
                b.l3.to_string(),
                b.total.to_string(),
            ];
            rec.extend(
                data.decode(&cf.position)?
                    .into_iter()
                    .map(|(_, v)| v.to_string()),
            );
            w.write_record(&rec)?;
        }
    }
    finish(w)
}

fn metric_fields(m: &MetricsReport) -> Vec<String> {
    vec![
        fmt_metric(m.proximity_cont),
        fmt_metric(m.proximity_cat),
        fmt_metric(m.sparsity),
        fmt_metric(m.diversity),
        fmt_metric(m.diversity_norm),
        fmt_metric(m.coverage),
        m.k_effective.to_string(),
    ]
}

/// Per-query metrics.
pub fn run_metrics_csv(g: &Generation) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "query",
        "row",
        "method",
        "proximity_cont",
        "proximity_cat",
        "sparsity",
        "diversity",
        "diversity_norm",
        "coverage",
        "k_effective",
    ])?;
    for run in &g.runs {
        let mut rec = vec![
            run.index.to_string(),
            run.row.to_string(),
            g.method.to_string(),
        ];
        rec.extend(metric_fields(&run.metrics));
        w.write_record(&rec)?;
    }
    finish(w)
}

/// Global-best objective per iteration for every query.
pub fn trace_csv(g: &Generation) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["query", "iteration", "l1", "l2", "l3", "total"])?;
    for run in &g.runs {
        for (t, b) in run.trace.iter().enumerate() {
            w.write_record([
                run.index.to_string(),
                t.to_string(),
                b.l1.to_string(),
                b.l2.to_string(),
                b.l3.to_string(),
                b.total.to_string(),
            ])?;
        }
    }
    finish(w)
}

/// The method comparison table.
pub fn table_csv(rows: &[TableRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "dataset",
        "method",
        "proximity",
        "sparsity",
        "diversity",
        "norm_div",
        "coverage",
    ])?;
    for r in rows {
        let m = &r.metrics;
        w.write_record([
            r.dataset.clone(),
            r.method.to_string(),
            fmt_metric(m.proximity_cont),
            fmt_metric(m.sparsity),
            fmt_metric(m.diversity),
            fmt_metric(m.diversity_norm),
            fmt_metric(m.coverage),
        ])?;
    }
    finish(w)
}

/// Fixed-width text version of the comparison table.
pub fn table_text(rows: &[TableRow]) -> String {
    let cell = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |v| format!("{v:.4}"));
    let mut out = format!(
        "{:<12} {:<7} {:>10} {:>10} {:>10} {:>10} {:>10}\n",
        "dataset", "method", "proximity", "sparsity", "diversity", "norm_div", "coverage"
    );
    for r in rows {
        let m = &r.metrics;
        out.push_str(&format!(
            "{:<12} {:<7} {:>10} {:>10} {:>10} {:>10} {:>10}\n",
            r.dataset,
            r.method.as_str(),
            cell(m.proximity_cont),
            cell(m.sparsity),
            cell(m.diversity),
            cell(m.diversity_norm),
            cell(m.coverage),
        ));
    }
    out
}
