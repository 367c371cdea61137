//! End-to-end batch runs: resource loading with checksums, disambiguation
//! over a worker pool, run manifests, and the ablation matrix.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{parse_corpus, CorpusError, Document};
use crate::ingest::{load_sense_index, map_predictions, Direction, IngestError, SenseIndex};
use crate::kbgraph::{load_relations, Graph, GraphError, GraphStats};
use crate::lexicon::{load_dictionary, smoothed, Dictionary, LexiconError, SenseEntry};
use crate::scorer::{parse_keys, score, GoldKey, KeyLine, ScoreError, ScoreReport};
use crate::wsd::{
    combine_scores, disambiguate_corpus, mfs_corpus, write_predictions, Algorithm, Prediction, WsdConfig, WsdError,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{role} file `{path}` not found; {hint}")]
    MissingResource { role: &'static str, path: PathBuf, hint: &'static str },
    #[error("{role} `{path}`: {source}")]
    Graph { role: &'static str, path: PathBuf, source: GraphError },
    #[error("{role} `{path}`: {source}")]
    Lexicon { role: &'static str, path: PathBuf, source: LexiconError },
    #[error("{role} `{path}`: {source}")]
    Corpus { role: &'static str, path: PathBuf, source: CorpusError },
    #[error("{role} `{path}`: {source}")]
    Score { role: &'static str, path: PathBuf, source: ScoreError },
    #[error("{role} `{path}`: {source}")]
    Ingest { role: &'static str, path: PathBuf, source: IngestError },
    #[error("gold keys look like sense keys; pass a sense index to map them to concepts")]
    NeedSenseIndex,
    #[error("checksum of `{0}` differs from the manifest")]
    ChecksumMismatch(PathBuf),
    #[error(transparent)]
    Wsd(#[from] WsdError),
    #[error(transparent)]
    Scoring(#[from] ScoreError),
    #[error("worker pool: {0}")]
    Pool(String),
    #[error("io error on `{path}`: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;

const GRAPH_HINT: &str = "fetch the knowledge base and build the relation file with `./reproduce.sh prepare`";
const DICT_HINT: &str = "build it from WordNet's index.sense with `kbwsd build-dict` (see `./reproduce.sh prepare`)";
const CORPUS_HINT: &str = "convert the evaluation XML with `kbwsd convert-xml` (see `./reproduce.sh prepare`)";
const GOLD_HINT: &str = "fetch the evaluation data with `./reproduce.sh fetch`";
const INDEX_HINT: &str = "fetch WordNet 3.0 with `./reproduce.sh fetch`";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read_resource(role: &'static str, path: &Path, hint: &'static str) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => PipelineError::MissingResource { role, path: path.to_path_buf(), hint },
        _ => PipelineError::Io { path: path.to_path_buf(), source: e },
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourcePaths {
    pub graph: PathBuf,
    pub dict: PathBuf,
    pub corpus: PathBuf,
}

/// Loaded graph, dictionary and corpus.
#[derive(Debug, Clone)]
pub struct Resources {
    pub graph: Graph,
    pub graph_stats: GraphStats,
    pub dict: Dictionary,
    pub docs: Vec<Document>,
    pub inputs: Vec<InputDigest>,
}

impl Resources {
    pub fn load(paths: &ResourcePaths) -> Result<Self> {
        let graph_bytes = read_resource("graph", &paths.graph, GRAPH_HINT)?;
        let (graph, graph_stats) = load_relations(&graph_bytes[..], false).map_err(|source| PipelineError::Graph {
            role: "graph",
            path: paths.graph.clone(),
            source,
        })?;
        let (dict, dict_bytes) = read_dictionary(&paths.dict)?;
        let (docs, corpus_bytes) = read_corpus(&paths.corpus)?;
        let digest = |role: &str, path: &Path, bytes: &[u8]| InputDigest {
            role: role.to_string(),
            path: path.to_path_buf(),
            sha256: sha256_hex(bytes),
        };
        let inputs = vec![
            digest("graph", &paths.graph, &graph_bytes),
            digest("dictionary", &paths.dict, &dict_bytes),
            digest("corpus", &paths.corpus, &corpus_bytes),
        ];
        Ok(Self { graph, graph_stats, dict, docs, inputs })
    }

    pub fn instance_count(&self) -> usize {
        self.docs.iter().map(Document::instance_count).sum()
    }
}

fn read_dictionary(path: &Path) -> Result<(Dictionary, Vec<u8>)> {
    let bytes = read_resource("dictionary", path, DICT_HINT)?;
    let dict = load_dictionary(&bytes[..]).map_err(|source| PipelineError::Lexicon {
        role: "dictionary",
        path: path.to_path_buf(),
        source,
    })?;
    Ok((dict, bytes))
}

fn read_corpus(path: &Path) -> Result<(Vec<Document>, Vec<u8>)> {
    let bytes = read_resource("corpus", path, CORPUS_HINT)?;
    let docs = parse_corpus(&bytes[..]).map_err(|source| PipelineError::Corpus {
        role: "corpus",
        path: path.to_path_buf(),
        source,
    })?;
    Ok((docs, bytes))
}

pub fn load_dictionary_file(path: &Path) -> Result<Dictionary> {
    Ok(read_dictionary(path)?.0)
}

pub fn load_corpus_file(path: &Path) -> Result<Vec<Document>> {
    Ok(read_corpus(path)?.0)
}

pub fn load_sense_index_file(path: &Path) -> Result<SenseIndex> {
    let bytes = read_resource("sense index", path, INDEX_HINT)?;
    load_sense_index(&bytes[..]).map_err(|source| PipelineError::Ingest {
        role: "sense index",
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_key_file(role: &'static str, path: &Path) -> Result<Vec<KeyLine>> {
    let bytes = read_resource(role, path, GOLD_HINT)?;
    parse_keys(&bytes[..]).map_err(|source| PipelineError::Score { role, path: path.to_path_buf(), source })
}

/// Gold keys in concept space. Sense-key gold files are mapped through
/// `index`; a concept matching any gold sense key counts as correct.
pub fn load_gold(path: &Path, index: Option<&SenseIndex>) -> Result<GoldKey> {
    let lines = load_key_file("gold", path)?;
    let lines = if lines.iter().any(|l| l.keys.iter().any(|k| k.contains('%'))) {
        let index = index.ok_or(PipelineError::NeedSenseIndex)?;
        // unmappable gold entries stay in the total with their raw keys
        lines
            .iter()
            .map(|l| {
                let (mut mapped, _) =
                    map_predictions(std::slice::from_ref(l), index, Direction::ToConcepts, &Default::default());
                mapped.pop().unwrap_or_else(|| l.clone())
            })
            .collect()
    } else {
        lines
    };
    GoldKey::from_lines(&lines).map_err(|source| PipelineError::Score {
        role: "gold",
        path: path.to_path_buf(),
        source,
    })
}

pub fn prediction_lines(preds: &[Prediction]) -> Vec<KeyLine> {
    preds.iter().map(|p| KeyLine { instance_id: p.instance_id.clone(), keys: vec![p.concept.clone()] }).collect()
}

/// Runs `f` on a dedicated pool of `workers` threads (0 = rayon default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| PipelineError::Pool(e.to_string()))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: WsdConfig,
    pub workers: usize,
    pub inputs: Vec<InputDigest>,
    pub graph_stats: GraphStats,
    pub instances: usize,
    pub predicted: usize,
    pub predictions_sha256: String,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn resource_paths(&self) -> Option<ResourcePaths> {
        let find = |role: &str| self.inputs.iter().find(|i| i.role == role).map(|i| i.path.clone());
        Some(ResourcePaths { graph: find("graph")?, dict: find("dictionary")?, corpus: find("corpus")? })
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub predictions: Vec<Prediction>,
    /// Prediction file contents.
    pub text: String,
    pub manifest: RunManifest,
}

pub fn run(res: &Resources, cfg: &WsdConfig, workers: usize) -> Result<RunOutput> {
    let predictions = with_workers(workers, || disambiguate_corpus(&res.docs, &res.graph, &res.dict, cfg))??;
    let text = write_predictions(&predictions);
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        workers,
        inputs: res.inputs.clone(),
        graph_stats: res.graph_stats.clone(),
        instances: res.instance_count(),
        predicted: predictions.len(),
        predictions_sha256: sha256_hex(text.as_bytes()),
    };
    Ok(RunOutput { predictions, text, manifest })
}

/// Re-runs a manifest after checking that its inputs are unchanged.
pub fn replay(manifest: &RunManifest) -> Result<RunOutput> {
    let paths = manifest.resource_paths().ok_or_else(|| PipelineError::MissingResource {
        role: "manifest input",
        path: PathBuf::new(),
        hint: "the manifest does not list graph, dictionary and corpus inputs",
    })?;
    let res = Resources::load(&paths)?;
    for (now, then) in res.inputs.iter().zip(&manifest.inputs) {
        if now.sha256 != then.sha256 {
            return Err(PipelineError::ChecksumMismatch(now.path.clone()));
        }
    }
    run(&res, &manifest.config, manifest.workers)
}

pub fn run_mfs(dict: &Dictionary, docs: &[Document]) -> (Vec<Prediction>, String) {
    let preds = mfs_corpus(docs, dict);
    let text = write_predictions(&preds);
    (preds, text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextMode {
    Single,
    Extended,
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationCell {
    pub algorithm: Algorithm,
    pub use_frequencies: bool,
    pub context: ContextMode,
    pub predictions_sha256: String,
    #[serde(skip)]
    pub predictions: String,
    pub report: Option<ScoreReport>,
}

impl AblationCell {
    pub fn label(&self) -> String {
        let suffix = if self.use_frequencies { "" } else { "_nf" };
        format!("{}{}", self.algorithm, suffix)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationReport {
    pub min_context_words: usize,
    pub cells: Vec<AblationCell>,
}

/// The 12 settings: {single, extended} × {freq, nf} × {ppr_w2w, ppr, dfs}.
pub fn ablation_configs(base: &WsdConfig) -> Vec<(ContextMode, WsdConfig)> {
    let mut out = Vec::new();
    for context in [ContextMode::Single, ContextMode::Extended] {
        for use_frequencies in [true, false] {
            for algorithm in Algorithm::ALL {
                let min_context_words = match context {
                    ContextMode::Single => 0,
                    ContextMode::Extended => base.min_context_words,
                };
                out.push((context, WsdConfig { algorithm, use_frequencies, min_context_words, ..base.clone() }));
            }
        }
    }
    out
}

pub fn ablate(res: &Resources, base: &WsdConfig, workers: usize, gold: Option<&GoldKey>) -> Result<AblationReport> {
    let mut cells = Vec::new();
    for (context, cfg) in ablation_configs(base) {
        let out = run(res, &cfg, workers)?;
        let report = gold.map(|g| score(&prediction_lines(&out.predictions), g)).transpose()?;
        cells.push(AblationCell {
            algorithm: cfg.algorithm,
            use_frequencies: cfg.use_frequencies,
            context,
            predictions_sha256: out.manifest.predictions_sha256,
            predictions: out.text,
            report,
        });
    }
    Ok(AblationReport { min_context_words: base.min_context_words, cells })
}

impl AblationReport {
    pub fn cell(&self, algorithm: Algorithm, use_frequencies: bool, context: ContextMode) -> Option<&AblationCell> {
        self.cells
            .iter()
            .find(|c| c.algorithm == algorithm && c.use_frequencies == use_frequencies && c.context == context)
    }

    /// F1 table with one block per context mode and columns All + subsets.
    pub fn render_table(&self) -> String {
        let mut columns: Vec<String> = vec!["All".to_string()];
        for c in &self.cells {
            for s in c.report.iter().flat_map(|r| &r.subsets) {
                if !columns.contains(&s.name) {
                    columns.push(s.name.clone());
                }
            }
        }
        let mut out = String::new();
        write!(out, "{:<12}", "").unwrap();
        for col in &columns {
            write!(out, " {col:>6}").unwrap();
        }
        out.push('\n');
        for (context, title) in [
            (ContextMode::Single, "Single context sentence".to_string()),
            (ContextMode::Extended, format!("One or more context sentences (# words >= {})", self.min_context_words)),
        ] {
            writeln!(out, "-- {title}").unwrap();
            for c in self.cells.iter().filter(|c| c.context == context) {
                write!(out, "{:<12}", c.label()).unwrap();
                for col in &columns {
                    let f1 =
                        c.report.as_ref().and_then(|r| if col == "All" { Some(&r.overall) } else { r.subset(col) });
                    match f1 {
                        Some(s) => write!(out, " {:>6.1}", 100.0 * s.f1).unwrap(),
                        None => write!(out, " {:>6}", "-").unwrap(),
                    }
                }
                out.push('\n');
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub lambda: f64,
    pub predictions_sha256: String,
    #[serde(skip)]
    pub predictions: Vec<Prediction>,
    pub report: Option<ScoreReport>,
}

/// Final predictions of `base` for each lambda. The walk runs once with
/// the frequency term switched off; each lambda then re-mixes the stored
/// walk scores with the smoothed frequencies, which gives the same result
/// as a full run per lambda. Fallback rankings are frequencies already and
/// come out unchanged.
pub fn lambda_sweep(
    res: &Resources,
    base: &WsdConfig,
    lambdas: &[f64],
    workers: usize,
    gold: Option<&GoldKey>,
) -> Result<Vec<SweepPoint>> {
    for &lambda in lambdas {
        WsdConfig { lambda, ..base.clone() }.validate()?;
    }
    let walk_cfg = WsdConfig { freq_in_combination: false, ..base.clone() };
    let walks = run(res, &walk_cfg, workers)?.predictions;
    let mix = base.use_frequencies && base.freq_in_combination;
    let headwords: HashMap<&str, String> = res
        .docs
        .iter()
        .flat_map(|d| &d.sentences)
        .flat_map(|s| &s.tokens)
        .filter_map(|t| Some((t.instance_id.as_deref()?, t.headword()?)))
        .collect();
    let mut points = Vec::new();
    for &lambda in lambdas {
        let predictions: Vec<Prediction> = walks
            .iter()
            .map(|p| {
                let senses = dict_senses(&res.dict, &headwords, &p.instance_id);
                let walk: Vec<f64> = senses
                    .iter()
                    .map(|s| p.alternatives.iter().find(|a| a.0 == s.concept).map_or(0.0, |a| a.1))
                    .collect();
                let ranking = combine_scores(senses, &walk, &smoothed(senses), mix, lambda);
                Prediction {
                    instance_id: p.instance_id.clone(),
                    concept: ranking[0].0.clone(),
                    score: ranking[0].1,
                    alternatives: ranking,
                }
            })
            .collect();
        let report = gold.map(|g| score(&prediction_lines(&predictions), g)).transpose()?;
        points.push(SweepPoint {
            lambda,
            predictions_sha256: sha256_hex(write_predictions(&predictions).as_bytes()),
            predictions,
            report,
        });
    }
    Ok(points)
}

fn dict_senses<'d>(dict: &'d Dictionary, headwords: &HashMap<&str, String>, instance_id: &str) -> &'d [SenseEntry] {
    // Every prediction came from an in-vocabulary target.
    dict.senses(&headwords[instance_id]).expect("predicted target is in the dictionary")
}
