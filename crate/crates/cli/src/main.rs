//! `cfswarm`: prepare data, train a classifier, rank features, generate and
//! score counterfactuals, and compare against Growing Spheres.

mod args;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use cfswarm::active_set::{iv_table, IvVariant, DEFAULT_BINS};
use cfswarm::data::{load_csv, synth_dataset, Dataset, Split};
use cfswarm::model::{accuracy, Model};
use cfswarm::pipeline::{self, Generation, Method, ModelKind};
use cfswarm::report;

use args::{dump_config, load_config, parse_synth, RunArgs};
use output::OutputDir;

#[derive(Debug, Parser)]
#[command(
    name = "cfswarm",
    version,
    about = "Counterfactual explanations via mixed-discrete particle swarms"
)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a dataset artifact from a CSV plus schema, or synthesize one.
    Prepare {
        #[arg(long, requires = "schema", conflicts_with = "synth")]
        csv: Option<PathBuf>,
        /// JSON schema describing the CSV columns.
        #[arg(long)]
        schema: Option<PathBuf>,
        /// Synthetic data, e.g. `n=500,cont=12,cat=2,levels=3,separation=3,informative=4`.
        #[arg(long)]
        synth: Option<String>,
        /// Seed for the train/test split (and the synthetic draw).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a classifier on the train split and save it.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// logistic or forest.
        #[arg(long)]
        kind: Option<ModelKind>,
        #[arg(long)]
        trees: Option<usize>,
        #[arg(long)]
        max_depth: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        /// Reads the `[model]` section and the seed.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Information value of every feature, as CSV.
    Iv {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        /// paper or log.
        #[arg(long, default_value = "paper")]
        variant: IvVariant,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate counterfactuals for sampled or explicit queries.
    Generate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// mdpso or gs.
        #[arg(long)]
        method: Option<Method>,
        #[command(flatten)]
        run: RunArgs,
        /// Also write the per-iteration global-best trace.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute metrics for a saved generation report.
    Evaluate {
        #[arg(long)]
        data: PathBuf,
        /// `report.json` written by generate or benchmark.
        #[arg(long, required = true, num_args = 1..)]
        report: Vec<PathBuf>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run MD-PSO and Growing Spheres on the same queries and compare.
    Benchmark {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("building the worker pool")
            .and_then(|pool| pool.install(|| run(cli.command))),
        None => run(cli.command),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<cfswarm::Error>() {
                Some(
                    cfswarm::Error::Usage(_)
                    | cfswarm::Error::Config(_)
                    | cfswarm::Error::Schema(_),
                ) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Prepare {
            csv,
            schema,
            synth,
            seed,
            out,
        } => prepare(csv, schema, synth, seed, out),
        Command::Train {
            data,
            kind,
            trees,
            max_depth,
            epochs,
            learning_rate,
            config,
            seed,
            out,
        } => {
            let mut cfg = match config {
                Some(p) => load_config(&p)?,
                None => pipeline::RunConfig::default(),
            };
            if let Some(v) = kind {
                cfg.model.kind = v;
            }
            if let Some(v) = trees {
                cfg.model.n_trees = v;
            }
            if let Some(v) = max_depth {
                cfg.model.max_depth = v;
            }
            if let Some(v) = epochs {
                cfg.model.epochs = v;
            }
            if let Some(v) = learning_rate {
                cfg.model.learning_rate = v;
            }
            if let Some(v) = seed {
                cfg.seed = v;
            }
            let data = load_dataset(&data)?;
            let model = pipeline::train_model(&data, &cfg.model, cfg.seed)?;
            model.to_json_file(&out)?;
            println!(
                "{} model: train accuracy {:.4}, test accuracy {:.4}",
                model.kind(),
                accuracy(&model, &data, Split::Train)?,
                accuracy(&model, &data, Split::Test)?
            );
            Ok(())
        }
        Command::Iv {
            data,
            bins,
            variant,
            out,
        } => {
            let data = load_dataset(&data)?;
            let csv = iv_table(&data, bins, variant)?.to_csv();
            match out {
                Some(p) => {
                    std::fs::write(&p, csv).with_context(|| format!("writing {}", p.display()))?
                }
                None => print!("{csv}"),
            }
            Ok(())
        }
        Command::Generate {
            data,
            model,
            method,
            run,
            trace,
            out,
        } => {
            let mut cfg = run.resolve()?;
            if let Some(m) = method {
                cfg.method = m;
            }
            let data = load_dataset(&data)?;
            let model = Model::from_json_file(&model)?;
            let g = pipeline::generate(&data, &model, &cfg, cfg.method)?;
            let mut dir = OutputDir::create(&out)?;
            dir.write("config.toml", &dump_config(&cfg)?)?;
            dir.write("queries.csv", &report::queries_csv(&g, &data)?)?;
            write_generation(&mut dir, "", &g, &data, trace)?;
            let table = [g.table_row()];
            dir.write("table.csv", &report::table_csv(&table)?)?;
            print_warnings(&g.warnings);
            print!("{}", report::table_text(&table));
            dir.finish("generate", details(&g))
        }
        Command::Evaluate {
            data,
            report: paths,
            out,
        } => {
            let data = load_dataset(&data)?;
            let mut rows = Vec::new();
            for p in paths {
                let text = std::fs::read_to_string(&p)
                    .with_context(|| format!("reading {}", p.display()))?;
                let mut g: Generation = serde_json::from_str(&text)
                    .with_context(|| format!("parsing {}", p.display()))?;
                g.rescore(&data);
                rows.push(g.table_row());
            }
            let csv = report::table_csv(&rows)?;
            match out {
                Some(p) => {
                    std::fs::write(&p, csv).with_context(|| format!("writing {}", p.display()))?
                }
                None => print!("{csv}"),
            }
            Ok(())
        }
        Command::Benchmark {
            data,
            model,
            run,
            trace,
            out,
        } => {
            let cfg = run.resolve()?;
            let data = load_dataset(&data)?;
            let model = Model::from_json_file(&model)?;
            let results = pipeline::benchmark(&data, &model, &cfg)?;
            let mut dir = OutputDir::create(&out)?;
            dir.write("config.toml", &dump_config(&cfg)?)?;
            dir.write("queries.csv", &report::queries_csv(&results[0], &data)?)?;
            for g in &results {
                write_generation(&mut dir, &format!("{}/", g.method), g, &data, trace)?;
            }
            let table: Vec<_> = results.iter().map(Generation::table_row).collect();
            dir.write("table.csv", &report::table_csv(&table)?)?;
            let text = report::table_text(&table);
            dir.write("summary.txt", &text)?;
            print_warnings(&results[0].warnings);
            print!("{text}");
            dir.finish("benchmark", details(&results[0]))
        }
    }
}

fn prepare(
    csv: Option<PathBuf>,
    schema: Option<PathBuf>,
    synth: Option<String>,
    seed: u64,
    out: PathBuf,
) -> Result<()> {
    let data = match (csv, schema, synth) {
        (Some(csv), Some(schema), None) => load_csv(&csv, &schema, seed)?,
        (None, _, Some(spec)) => synth_dataset(seed, &parse_synth(&spec)?)?,
        _ => {
            return Err(
                cfswarm::Error::Usage("pass either --csv with --schema, or --synth".into()).into(),
            )
        }
    };
    data.to_json_file(&out)?;
    if !data.clamped.is_empty() {
        eprintln!(
            "warning: {} test rows had values outside the train range and were clamped",
            data.clamped.len()
        );
    }
    println!(
        "{} rows ({} train, {} test), {} features, {} encoded columns",
        data.n_rows(),
        data.train.len(),
        data.test.len(),
        data.schema.len(),
        data.schema.encoded_width()
    );
    Ok(())
}

fn load_dataset(path: &PathBuf) -> Result<Dataset> {
    Dataset::from_json_file(path).with_context(|| format!("loading dataset {}", path.display()))
}

fn write_generation(
    dir: &mut OutputDir,
    prefix: &str,
    g: &Generation,
    data: &Dataset,
    trace: bool,
) -> Result<()> {
    dir.write(
        &format!("{prefix}counterfactuals.csv"),
        &report::counterfactuals_csv(g, data)?,
    )?;
    dir.write(
        &format!("{prefix}run_metrics.csv"),
        &report::run_metrics_csv(g)?,
    )?;
    dir.write_json(&format!("{prefix}report.json"), g)?;
    if trace && g.method == Method::Mdpso {
        dir.write(&format!("{prefix}trace.csv"), &report::trace_csv(g)?)?;
    }
    Ok(())
}

fn details(g: &Generation) -> serde_json::Value {
    json!({
        "active_set": g.active.names,
        "query_rows": g.runs.iter().map(|r| r.row).collect::<Vec<_>>(),
        "warnings": g.warnings,
    })
}

fn print_warnings(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}
