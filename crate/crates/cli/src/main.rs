mod settings;

use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use kbwsd::corpus::write_corpus;
use kbwsd::ingest::{check_gold_coverage, instance_lemmas, map_predictions, parse_unified_xml, Direction, SenseIndex};
use kbwsd::pipeline::{
    ablate, lambda_sweep, load_corpus_file, load_dictionary_file, load_gold, load_key_file, load_sense_index_file,
    prediction_lines, replay, run, run_mfs, sha256_hex, ContextMode, Resources, RunManifest,
};
use kbwsd::scorer::{parse_keys, score, write_keys, GoldKey, KeyLine, ScoreReport};
use kbwsd::wsd::count_oov;

use settings::{RunFlags, Settings};

#[derive(Parser)]
#[command(name = "kbwsd", version, about = "Knowledge-based word sense disambiguation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct GoldArgs {
    /// Gold key file; enables scoring
    #[arg(long, value_name = "PATH")]
    gold: Option<PathBuf>,
    /// WordNet index.sense, needed when keys are sense keys
    #[arg(long, value_name = "PATH")]
    sense_index: Option<PathBuf>,
}

impl GoldArgs {
    fn index(&self) -> Result<Option<SenseIndex>> {
        Ok(self.sense_index.as_deref().map(load_sense_index_file).transpose()?)
    }

    fn load(&self) -> Result<Option<GoldKey>> {
        let Some(gold) = &self.gold else { return Ok(None) };
        Ok(Some(load_gold(gold, self.index()?.as_ref())?))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Disambiguate a corpus and write predictions plus a run manifest
    Run {
        #[command(flatten)]
        flags: RunFlags,
        #[command(flatten)]
        gold: GoldArgs,
        /// Manifest path [default: <out>.manifest.json when --out is set]
        #[arg(long, value_name = "PATH")]
        manifest: Option<PathBuf>,
        /// Write WordNet sense keys instead of concept ids (needs --sense-index)
        #[arg(long)]
        sense_keys: bool,
    },
    /// Re-run a manifest after checking its input checksums
    Replay {
        manifest: PathBuf,
        /// Prediction output file [default: stdout]
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Run the 12-cell matrix {ppr_w2w, ppr, dfs} x {freq, nf} x {single, extended}
    Ablate {
        #[command(flatten)]
        flags: RunFlags,
        #[command(flatten)]
        gold: GoldArgs,
        /// Write every cell's predictions into this directory
        #[arg(long, value_name = "DIR")]
        pred_dir: Option<PathBuf>,
        /// Write the full-precision report as JSON
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
    },
    /// Score one configuration over several lambda values
    Sweep {
        #[command(flatten)]
        flags: RunFlags,
        #[command(flatten)]
        gold: GoldArgs,
        /// Comma-separated lambda values
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
        lambdas: Vec<f64>,
    },
    /// Most-frequent-sense baseline
    Mfs {
        #[command(flatten)]
        flags: RunFlags,
        #[command(flatten)]
        gold: GoldArgs,
    },
    /// Score a prediction file against gold keys
    Score {
        #[arg(long, value_name = "PATH")]
        pred: PathBuf,
        #[arg(long, value_name = "PATH")]
        gold: PathBuf,
        #[arg(long, value_name = "PATH")]
        sense_index: Option<PathBuf>,
        /// Print the full-precision report as JSON
        #[arg(long)]
        json: bool,
    },
    /// Convert an evaluation-framework XML file into the corpus format
    ConvertXml {
        xml: PathBuf,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        /// Check that every gold instance occurs in the XML
        #[arg(long, value_name = "PATH")]
        gold: Option<PathBuf>,
    },
    /// Build the sense dictionary from WordNet's index.sense
    BuildDict {
        sense_index: PathBuf,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Translate a key file between concept ids and sense keys
    MapKeys {
        input: PathBuf,
        #[arg(long, value_name = "PATH")]
        sense_index: PathBuf,
        #[arg(long, value_enum)]
        to: Namespace,
        /// Corpus used to restrict sense keys to each instance's lemma
        #[arg(long, value_name = "PATH")]
        corpus: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Namespace {
    SenseKeys,
    Concepts,
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing `{}`", p.display())),
        None => io::stdout().write_all(text.as_bytes()).context("writing stdout"),
    }
}

fn load_resources(s: &Settings) -> Result<Resources> {
    let res = Resources::load(&s.paths)?;
    let oov = count_oov(&res.docs, &res.dict);
    log::info!(
        "graph: {} vertices, {} edges; dictionary: {} headwords; corpus: {} instances ({} out of vocabulary)",
        res.graph_stats.vertex_count,
        res.graph_stats.edge_count,
        res.dict.len(),
        res.instance_count(),
        oov
    );
    Ok(res)
}

fn report(r: &ScoreReport) {
    eprint!("{}", r.summary());
}

fn to_sense_keys(lines: &[KeyLine], index: &SenseIndex, res: &Resources) -> String {
    let (mapped, _) = map_predictions(lines, index, Direction::ToSenseKeys, &instance_lemmas(&res.docs));
    write_keys(&mapped)
}

fn cmd_run(flags: &RunFlags, gold: &GoldArgs, manifest: Option<&Path>, sense_keys: bool) -> Result<()> {
    let s = Settings::resolve(flags)?;
    let res = load_resources(&s)?;
    let index = gold.index()?;
    if sense_keys && index.is_none() {
        bail!("--sense-keys needs --sense-index");
    }
    let out = run(&res, &s.wsd, s.workers)?;
    log::info!("{} of {} instances predicted", out.manifest.predicted, out.manifest.instances);
    let text = match (&index, sense_keys) {
        (Some(idx), true) => to_sense_keys(&prediction_lines(&out.predictions), idx, &res),
        _ => out.text.clone(),
    };
    write_output(s.out.as_deref(), &text)?;
    let manifest_path = manifest
        .map(Path::to_path_buf)
        .or_else(|| s.out.as_ref().map(|o| PathBuf::from(format!("{}.manifest.json", o.display()))));
    if let Some(p) = manifest_path {
        fs::write(&p, out.manifest.to_json()).with_context(|| format!("writing `{}`", p.display()))?;
        log::info!("manifest written to {}", p.display());
    }
    if let Some(g) = &gold.gold {
        let g = load_gold(g, index.as_ref())?;
        report(&score(&prediction_lines(&out.predictions), &g)?);
    }
    Ok(())
}

fn cmd_replay(manifest: &Path, out: Option<&Path>) -> Result<()> {
    let text = fs::read_to_string(manifest).with_context(|| format!("reading `{}`", manifest.display()))?;
    let m = RunManifest::from_json(&text).with_context(|| format!("parsing `{}`", manifest.display()))?;
    let result = replay(&m)?;
    if result.manifest.predictions_sha256 != m.predictions_sha256 {
        bail!("replayed predictions differ from the manifest checksum");
    }
    write_output(out, &result.text)
}

fn cmd_ablate(flags: &RunFlags, gold: &GoldArgs, pred_dir: Option<&Path>, json: Option<&Path>) -> Result<()> {
    let s = Settings::resolve(flags)?;
    let res = load_resources(&s)?;
    let g = gold.load()?;
    let rep = ablate(&res, &s.wsd, s.workers, g.as_ref())?;
    if let Some(dir) = pred_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating `{}`", dir.display()))?;
        for cell in &rep.cells {
            let context = match cell.context {
                ContextMode::Single => "single",
                ContextMode::Extended => "extended",
            };
            let path = dir.join(format!("{context}_{}.txt", cell.label()));
            fs::write(&path, &cell.predictions).with_context(|| format!("writing `{}`", path.display()))?;
        }
    }
    if let Some(p) = json {
        let text = serde_json::to_string_pretty(&rep).expect("report serializes");
        fs::write(p, text).with_context(|| format!("writing `{}`", p.display()))?;
    }
    if g.is_some() {
        print!("{}", rep.render_table());
    } else {
        for cell in &rep.cells {
            println!(
                "{:<8} {:<12} {}",
                format!("{:?}", cell.context).to_lowercase(),
                cell.label(),
                cell.predictions_sha256
            );
        }
    }
    Ok(())
}

fn cmd_sweep(flags: &RunFlags, gold: &GoldArgs, lambdas: &[f64]) -> Result<()> {
    let s = Settings::resolve(flags)?;
    let res = load_resources(&s)?;
    let g = gold.load()?;
    let points = lambda_sweep(&res, &s.wsd, lambdas, s.workers, g.as_ref())?;
    for p in points {
        match &p.report {
            Some(r) => {
                let mut line = format!("lambda {:.2}  All {:>5.1}", p.lambda, 100.0 * r.overall.f1);
                for sub in &r.subsets {
                    line.push_str(&format!("  {} {:>5.1}", sub.name, 100.0 * sub.f1));
                }
                println!("{line}");
            }
            None => println!("lambda {:.2}  {}", p.lambda, p.predictions_sha256),
        }
    }
    Ok(())
}

fn cmd_mfs(flags: &RunFlags, gold: &GoldArgs) -> Result<()> {
    let s = Settings::resolve(flags)?;
    let dict = load_dictionary_file(&s.paths.dict)?;
    let docs = load_corpus_file(&s.paths.corpus)?;
    log::info!("{} out-of-vocabulary instances", count_oov(&docs, &dict));
    let (preds, text) = run_mfs(&dict, &docs);
    write_output(s.out.as_deref(), &text)?;
    if let Some(g) = gold.load()? {
        report(&score(&prediction_lines(&preds), &g)?);
    }
    Ok(())
}

fn cmd_score(pred: &Path, gold: &Path, sense_index: Option<&Path>, json: bool) -> Result<()> {
    let index = sense_index.map(load_sense_index_file).transpose()?;
    let g = load_gold(gold, index.as_ref())?;
    let mut preds = load_key_file("predictions", pred)?;
    if preds.iter().any(|l| l.keys.iter().any(|k| k.contains('%'))) {
        let Some(idx) = &index else { bail!("predictions use sense keys; pass --sense-index") };
        let (mapped, _) = map_predictions(&preds, idx, Direction::ToConcepts, &Default::default());
        preds = mapped;
    }
    let r = score(&preds, &g)?;
    if json {
        println!("{}", r.to_json());
    } else {
        print!("{}", r.summary());
    }
    Ok(())
}

fn cmd_convert_xml(xml: &Path, out: &Path, gold: Option<&Path>) -> Result<()> {
    let file = fs::File::open(xml).with_context(|| format!("opening `{}`", xml.display()))?;
    let docs = parse_unified_xml(BufReader::new(file)).with_context(|| format!("parsing `{}`", xml.display()))?;
    if let Some(g) = gold {
        check_gold_coverage(&docs, &load_key_file("gold", g)?)?;
    }
    let text = write_corpus(&docs);
    fs::write(out, &text).with_context(|| format!("writing `{}`", out.display()))?;
    let instances: usize = docs.iter().map(|d| d.instance_count()).sum();
    log::info!("{} documents, {} instances, sha256 {}", docs.len(), instances, sha256_hex(text.as_bytes()));
    Ok(())
}

fn cmd_build_dict(sense_index: &Path, out: &Path) -> Result<()> {
    let idx = load_sense_index_file(sense_index)?;
    let dict = idx.to_dictionary();
    fs::write(out, dict.to_lines()).with_context(|| format!("writing `{}`", out.display()))?;
    log::info!("{} sense keys, {} headwords", idx.len(), dict.len());
    Ok(())
}

fn cmd_map_keys(
    input: &Path,
    sense_index: &Path,
    to: Namespace,
    corpus: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let idx = load_sense_index_file(sense_index)?;
    let text = fs::read(input).with_context(|| format!("reading `{}`", input.display()))?;
    let lines = parse_keys(&text[..]).with_context(|| format!("parsing `{}`", input.display()))?;
    let lemmas = match corpus {
        Some(c) => instance_lemmas(&load_corpus_file(c)?),
        None => Default::default(),
    };
    let direction = match to {
        Namespace::SenseKeys => Direction::ToSenseKeys,
        Namespace::Concepts => Direction::ToConcepts,
    };
    let (mapped, dropped) = map_predictions(&lines, &idx, direction, &lemmas);
    if dropped > 0 {
        log::warn!("{dropped} keys had no mapping");
    }
    write_output(out, &write_keys(&mapped))
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { flags, gold, manifest, sense_keys } => cmd_run(&flags, &gold, manifest.as_deref(), sense_keys),
        Command::Replay { manifest, out } => cmd_replay(&manifest, out.as_deref()),
        Command::Ablate { flags, gold, pred_dir, json } => {
            cmd_ablate(&flags, &gold, pred_dir.as_deref(), json.as_deref())
        }
        Command::Sweep { flags, gold, lambdas } => cmd_sweep(&flags, &gold, &lambdas),
        Command::Mfs { flags, gold } => cmd_mfs(&flags, &gold),
        Command::Score { pred, gold, sense_index, json } => cmd_score(&pred, &gold, sense_index.as_deref(), json),
        Command::ConvertXml { xml, out, gold } => cmd_convert_xml(&xml, &out, gold.as_deref()),
        Command::BuildDict { sense_index, out } => cmd_build_dict(&sense_index, &out),
        Command::MapKeys { input, sense_index, to, corpus, out } => {
            cmd_map_keys(&input, &sense_index, to, corpus.as_deref(), out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
