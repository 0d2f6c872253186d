use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;

use cfswarm::baseline_gs::GsMode;
use cfswarm::data::SynthSpec;
use cfswarm::mdpso::RMode;
use cfswarm::pipeline::RunConfig;
use cfswarm::select::SelectionMode;

/// Flags shared by every command that runs the generator.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML config file; flags below override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Relative half-width of the box around each query value.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Active-set size.
    #[arg(long)]
    pub h: Option<usize>,
    /// Counterfactuals per query.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub particles: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// cluster, topk or pbest.
    #[arg(long)]
    pub selection: Option<SelectionMode>,
    /// paper or standard.
    #[arg(long = "r-mode")]
    pub r_mode: Option<RMode>,
    /// Growing Spheres search space: paper or constrained.
    #[arg(long = "gs-mode")]
    pub gs_mode: Option<GsMode>,
    /// Class the counterfactuals should receive.
    #[arg(long)]
    pub desired: Option<u8>,
    /// Explicit query rows, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "sample")]
    pub rows: Option<Vec<usize>>,
    /// Number of test rows to sample as queries.
    #[arg(long)]
    pub sample: Option<usize>,
    /// Also sample rows the model misclassifies.
    #[arg(long)]
    pub include_misclassified: bool,
    /// Label for the dataset column of the comparison table.
    #[arg(long)]
    pub dataset_name: Option<String>,
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.epsilon {
            cfg.swarm.epsilon = v;
        }
        if let Some(v) = self.h {
            cfg.selection.h = Some(v);
        }
        if let Some(v) = self.k {
            cfg.selection.k = v;
        }
        if let Some(v) = self.particles {
            cfg.swarm.n_particles = v;
        }
        if let Some(v) = self.iterations {
            cfg.swarm.n_iterations = v;
        }
        if let Some(v) = self.selection {
            cfg.selection.mode = v;
        }
        if let Some(v) = self.r_mode {
            cfg.swarm.r_mode = v;
        }
        if let Some(v) = self.gs_mode {
            cfg.baseline.mode = v;
        }
        if let Some(v) = self.desired {
            cfg.data.desired_class = Some(v);
        }
        if let Some(v) = &self.rows {
            cfg.data.rows = Some(v.clone());
        }
        if let Some(v) = self.sample {
            cfg.data.queries = v;
            cfg.data.rows = None;
        }
        if self.include_misclassified {
            cfg.data.only_correct = false;
        }
        if let Some(v) = &self.dataset_name {
            cfg.metrics.dataset = v.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

pub fn dump_config(cfg: &RunConfig) -> Result<String> {
    toml::to_string(cfg).context("serializing the effective config")
}

/// Parses `n=200,cont=4,cat=2,levels=3,separation=3,informative=all` into a
/// synthetic spec.
pub fn parse_synth(s: &str) -> Result<SynthSpec> {
    let mut spec = SynthSpec::default();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let Some((key, value)) = part.split_once('=') else {
            bail!("expected key=value in synthetic spec, got `{part}`");
        };
        let bad = || format!("invalid value `{value}` for `{key}`");
        match key.trim() {
            "n" => spec.n = value.parse().with_context(bad)?,
            "cont" => spec.n_cont = value.parse().with_context(bad)?,
            "cat" => spec.n_cat = value.parse().with_context(bad)?,
            "levels" => spec.levels = value.parse().with_context(bad)?,
            "separation" => spec.separation = value.parse().with_context(bad)?,
            "informative" => {
                spec.n_informative = match value.trim() {
                    "all" => None,
                    v => Some(v.parse().with_context(bad)?),
                }
            }
            other => bail!(
                "unknown synthetic spec key `{other}` (expected n, cont, cat, levels, separation, informative)"
            ),
        }
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synth_spec_parsing() {
        let s = parse_synth("n=200").unwrap();
        assert_eq!(s.n, 200);
        assert_eq!(s.n_cont, SynthSpec::default().n_cont);
        let s = parse_synth("n=300, cont=2,cat=0,separation=1.5").unwrap();
        assert_eq!((s.n, s.n_cont, s.n_cat, s.separation), (300, 2, 0, 1.5));
        assert_eq!(parse_synth("informative=all").unwrap().n_informative, None);
        assert_eq!(parse_synth("informative=2").unwrap().n_informative, Some(2));
        assert!(parse_synth("n").is_err());
        assert!(parse_synth("q=1").is_err());
        assert!(parse_synth("n=x").is_err());
    }

    #[test]
    fn flags_override_defaults() {
        let args = RunArgs {
            seed: Some(9),
            epsilon: Some(0.25),
            h: Some(2),
            rows: Some(vec![1, 2]),
            ..RunArgs::default()
        };
        let cfg = args.resolve().unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.swarm.epsilon, 0.25);
        assert_eq!(cfg.selection.h, Some(2));
        assert_eq!(cfg.data.rows, Some(vec![1, 2]));
    }

    #[test]
    fn config_round_trips_through_toml() {
        let mut cfg = RunConfig {
            seed: 17,
            ..RunConfig::default()
        };
        cfg.selection.h = Some(3);
        cfg.swarm.epsilon_overrides.insert("x0".into(), 0.1);
        let text = dump_config(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }
}
