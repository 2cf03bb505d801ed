use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use lattice_consensus::pipeline::RunConfig;
use lattice_consensus::synth::SyntheticSpec;
use lattice_consensus::MetricVariant;
use serde::Deserialize;

/// Flags accepted by every subcommand.
#[derive(Args, Clone, Debug, Default)]
pub struct Common {
    /// Language model weight dividing acoustic log scores [default: lattice header, else 12]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Drop lattice links with posterior below this before alignment [default: 0.001]
    #[arg(long)]
    pub prune_threshold: Option<f64>,
    /// Clustering metric
    #[arg(long, value_parser = clap::value_parser!(MetricVariant))]
    pub metric: Option<MetricVariant>,
    /// Candidates kept per confusion slot
    #[arg(long)]
    pub max_candidates: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// TOML file with defaults for the flags above
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Give words missing from the lexicon letter pronunciations instead of failing
    #[arg(long)]
    pub fallback_pron: bool,
    /// Verify class order invariants after every merge (slow)
    #[arg(long)]
    pub check_invariants: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    lambda: Option<f64>,
    prune_threshold: Option<f64>,
    metric: Option<MetricVariant>,
    max_candidates: Option<usize>,
    seed: Option<u64>,
    jobs: Option<usize>,
    fallback_pronunciations: Option<bool>,
    check_invariants: Option<bool>,
    generate: Option<SyntheticSpec>,
}

/// Settings after merging flags, config file and defaults.
pub struct Resolved {
    pub run: RunConfig,
    pub spec: SyntheticSpec,
    pub out_dir: Option<PathBuf>,
}

impl Common {
    pub fn resolve(&self) -> Result<Resolved> {
        let file = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str::<FileConfig>(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => FileConfig::default(),
        };
        let d = RunConfig::default();
        let run = RunConfig {
            lambda: self.lambda.or(file.lambda),
            prune_threshold: self.prune_threshold.or(file.prune_threshold).unwrap_or(d.prune_threshold),
            metric: self.metric.or(file.metric).unwrap_or(d.metric),
            max_candidates: self.max_candidates.or(file.max_candidates),
            seed: self.seed.or(file.seed).unwrap_or(d.seed),
            jobs: self.jobs.or(file.jobs).unwrap_or(d.jobs),
            fallback_pronunciations: self.fallback_pron || file.fallback_pronunciations.unwrap_or(false),
            check_invariants: self.check_invariants || file.check_invariants.unwrap_or(false),
        };
        run.validate()?;
        Ok(Resolved {
            run,
            spec: file.generate.unwrap_or_default(),
            out_dir: self.out_dir.clone(),
        })
    }
}

impl Resolved {
    pub fn require_out_dir(&self) -> Result<&Path> {
        match &self.out_dir {
            Some(d) => Ok(d),
            None => bail!("this command needs --out-dir"),
        }
    }

    pub fn pool(&self) -> Result<rayon::ThreadPool> {
        Ok(rayon::ThreadPoolBuilder::new().num_threads(self.run.jobs).build()?)
    }

    /// Writes the effective settings next to the outputs.
    pub fn write_sidecar(&self, command: &str, extra: serde_json::Value) -> Result<()> {
        let Some(dir) = &self.out_dir else {
            return Ok(());
        };
        let mut doc = serde_json::json!({
            "command": command,
            "run": self.run,
            "lambda_fallback": lattice_consensus::pipeline::DEFAULT_LAMBDA,
        });
        if let (Some(obj), serde_json::Value::Object(more)) = (doc.as_object_mut(), extra) {
            obj.extend(more);
        }
        fs::create_dir_all(dir)?;
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        fs::write(dir.join("effective_config.json"), text)?;
        Ok(())
    }
}
