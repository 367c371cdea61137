//! Effective run settings: command-line flags over a TOML config file over
//! built-in defaults.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use kbwsd::pipeline::ResourcePaths;
use kbwsd::{Algorithm, WsdConfig};
use serde::Deserialize;

pub const DEFAULT_GRAPH: &str = "data/kb.txt";
pub const DEFAULT_DICT: &str = "data/dict.txt";
pub const DEFAULT_CORPUS: &str = "data/corpus.txt";

#[derive(Debug, Clone, Default, Args)]
pub struct RunFlags {
    /// TOML file with any of the options below; flags take precedence
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// ppr, ppr_w2w or dfs [default: ppr_w2w]
    #[arg(long)]
    pub algorithm: Option<Algorithm>,
    /// Use sense frequencies [default]
    #[arg(long, overrides_with = "no_freq")]
    pub freq: bool,
    /// Ignore sense frequencies
    #[arg(long, overrides_with = "freq")]
    pub no_freq: bool,
    /// Weight of the frequency term in the final scores [default: 0.5]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Minimum context size in content words; 0 keeps one sentence [default: 20]
    #[arg(long, value_name = "WORDS")]
    pub min_context: Option<usize>,
    /// PageRank damping factor [default: 0.85]
    #[arg(long)]
    pub damping: Option<f64>,
    /// Power-method iterations [default: 30]
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Longest path kept by dfs subgraph extraction, in edges [default: 6]
    #[arg(long, value_name = "EDGES")]
    pub max_path_length: Option<usize>,
    /// Worker threads; 0 uses every core [default: 0]
    #[arg(long)]
    pub workers: Option<usize>,
    /// Relation file [default: data/kb.txt]
    #[arg(long, value_name = "PATH")]
    pub graph: Option<PathBuf>,
    /// Dictionary file [default: data/dict.txt]
    #[arg(long, value_name = "PATH")]
    pub dict: Option<PathBuf>,
    /// Corpus file [default: data/corpus.txt]
    #[arg(long, value_name = "PATH")]
    pub corpus: Option<PathBuf>,
    /// Prediction output file [default: stdout]
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

impl RunFlags {
    fn freq_flag(&self) -> Option<bool> {
        match (self.freq, self.no_freq) {
            (true, _) => Some(true),
            (_, true) => Some(false),
            _ => None,
        }
    }
}

/// Config file keys mirror the long flag names.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub algorithm: Option<Algorithm>,
    pub freq: Option<bool>,
    pub lambda: Option<f64>,
    pub min_context: Option<usize>,
    pub damping: Option<f64>,
    pub iterations: Option<usize>,
    pub max_path_length: Option<usize>,
    pub workers: Option<usize>,
    pub graph: Option<PathBuf>,
    pub dict: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    /// Reads a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config `{}`", path.display()))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).with_context(|| format!("parsing config `{}`", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.graph, &mut cfg.dict, &mut cfg.corpus, &mut cfg.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub wsd: WsdConfig,
    pub workers: usize,
    pub paths: ResourcePaths,
    pub out: Option<PathBuf>,
}

impl Settings {
    pub fn resolve(flags: &RunFlags) -> Result<Self> {
        let file = match &flags.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let mut wsd = WsdConfig::default();
        if let Some(a) = flags.algorithm.or(file.algorithm) {
            wsd.algorithm = a;
        }
        if let Some(f) = flags.freq_flag().or(file.freq) {
            wsd.use_frequencies = f;
        }
        if let Some(l) = flags.lambda.or(file.lambda) {
            wsd.lambda = l;
        }
        if let Some(m) = flags.min_context.or(file.min_context) {
            wsd.min_context_words = m;
        }
        if let Some(d) = flags.damping.or(file.damping) {
            wsd.power.damping = d;
        }
        if let Some(i) = flags.iterations.or(file.iterations) {
            wsd.power.max_iterations = i;
        }
        if let Some(m) = flags.max_path_length.or(file.max_path_length) {
            wsd.max_path_length = m;
        }
        wsd.validate().context("invalid settings")?;
        let pick = |flag: &Option<PathBuf>, file: Option<PathBuf>, default: &str| {
            flag.clone().or(file).unwrap_or_else(|| PathBuf::from(default))
        };
        Ok(Self {
            wsd,
            workers: flags.workers.or(file.workers).unwrap_or(0),
            paths: ResourcePaths {
                graph: pick(&flags.graph, file.graph, DEFAULT_GRAPH),
                dict: pick(&flags.dict, file.dict, DEFAULT_DICT),
                corpus: pick(&flags.corpus, file.corpus, DEFAULT_CORPUS),
            },
            out: flags.out.clone().or(file.out),
        })
    }
}
