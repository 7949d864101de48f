//! The subcommands as library functions.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use oie_core::augment::{
    filter_seeds, match_sentences, to_binary_triples, CorpusIndex, EntityLinker, GazetteerLinker, RemoteLinker,
    SeedMatch, SeedTriple,
};
use oie_core::bootstrap::{
    default_patterns, match_noun_patterns, parse_patterns, select_confident, verb_tuples, ConfidenceKey,
    ExtractionTuple,
};
use oie_core::corpus::{build_tree, read_corpus, AnnotatedSentence};
use oie_core::extractor::{extract_corpus, filter_by_score, write_triples_jsonl, write_triples_text, Triple};
use oie_core::neural::{
    build_vocabularies, load_checkpoint, read_word2vec_text, save_checkpoint, train, Example, NetworkParams, Task,
    TrainConfig, TrainLog,
};
use oie_core::sampler::{
    build_pool, cap_negatives, feedback_negative_sampling, label_positives, preposition_classes, read_samples,
    write_samples, TrainingSample, ARGUMENT_CLASSES, POSITIVE_CLASSES,
};
use oie_core::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{require_file, PipelineConfig};

pub const TUPLES_FILE: &str = "tuples.jsonl";
pub const SEEDS_FILE: &str = "seeds.jsonl";
pub const PAIRS_FILE: &str = "pairs.jsonl";
pub const POSITIVES_FILE: &str = "positives.jsonl";
pub const NEGATIVES_FILE: &str = "negatives.jsonl";
pub const PREPOSITIONS_FILE: &str = "prepositions.jsonl";
pub const REPORT_FILE: &str = "report.json";

fn stage(name: &str, count: usize, start: Instant) {
    info!("stage={} count={} elapsed_ms={}", name, count, start.elapsed().as_millis());
}

/// Reads a corpus, skipping (and logging) malformed sentences.
pub fn load_corpus(path: &Path) -> Result<(Vec<AnnotatedSentence>, usize)> {
    require_file(path, "corpus")?;
    let reader = BufReader::new(File::open(path)?);
    let mut sentences = Vec::new();
    let mut invalid = 0;
    for item in read_corpus(reader) {
        match item.and_then(|s| build_tree(&s).map(|_| ()).map(|_| s)) {
            Ok(s) => sentences.push(s),
            Err(e) => {
                invalid += 1;
                warn!("{}: {}", path.display(), e);
            }
        }
    }
    Ok((sentences, invalid))
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn write_sample_file(path: &Path, samples: &[TrainingSample]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_samples(&mut w, samples)?;
    w.flush()?;
    Ok(())
}

fn make_linker(config: &PipelineConfig) -> Result<Box<dyn EntityLinker>> {
    let data = &config.data;
    match (&data.gazetteer, &data.linker_endpoint) {
        (Some(path), _) => {
            require_file(path, "gazetteer")?;
            Ok(Box::new(GazetteerLinker::from_tsv(BufReader::new(File::open(path)?))?))
        }
        (None, Some(endpoint)) => Ok(Box::new(RemoteLinker::new(endpoint.clone(), data.linker_confidence)?)),
        (None, None) => Err(Error::Config(
            "augmentation needs data.gazetteer or data.linker_endpoint".into(),
        )),
    }
}

fn label_counts<'a>(samples: impl Iterator<Item = &'a TrainingSample>) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for s in samples {
        *counts.entry(s.label.clone()).or_insert(0) += 1;
    }
    counts
}

/// Counts written to `report.json`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub sentences: usize,
    pub invalid_sentences: usize,
    pub verb_tuples: usize,
    pub noun_tuples: usize,
    pub augmentation: bool,
    pub seeds: usize,
    pub pairs: usize,
    pub positive_samples: BTreeMap<String, usize>,
    pub pool: usize,
    pub negatives_selected: usize,
    pub negatives_kept: usize,
    pub preposition_samples: BTreeMap<String, usize>,
}

/// Builds tuples, seeds, seed matches and labelled samples into `out_dir`.
pub fn build_trainset(config: &PipelineConfig, out_dir: &Path) -> Result<BuildReport> {
    let corpus_path = config
        .data
        .corpus
        .as_ref()
        .ok_or_else(|| Error::Config("data.corpus is not set".into()))?;
    fs::create_dir_all(out_dir)?;
    let mut report = BuildReport::default();

    let start = Instant::now();
    let (sentences, invalid) = load_corpus(corpus_path)?;
    report.sentences = sentences.len();
    report.invalid_sentences = invalid;
    stage("read_corpus", sentences.len(), start);

    let start = Instant::now();
    let mut tuples: Vec<ExtractionTuple> = Vec::new();
    if config.bootstrap.verb {
        let chosen = match config.bootstrap.top_k {
            Some(k) => select_confident(sentences.iter().cloned(), ConfidenceKey::Srl, k),
            None => sentences.clone(),
        };
        for s in &chosen {
            if !s.has_srl {
                return Err(Error::Config(format!(
                    "sentence {} has no SRL columns; disable bootstrap.verb or annotate the corpus",
                    s.id
                )));
            }
            let found = verb_tuples(s)?;
            report.verb_tuples += found.len();
            tuples.extend(found);
        }
    }
    if config.bootstrap.noun {
        let patterns = match &config.data.patterns {
            Some(path) => {
                require_file(path, "pattern file")?;
                parse_patterns(&fs::read_to_string(path)?)?
            }
            None => default_patterns(),
        };
        let chosen = match config.bootstrap.top_k {
            Some(k) => select_confident(sentences.iter().cloned(), ConfidenceKey::Dep, k),
            None => sentences.clone(),
        };
        for s in &chosen {
            let found = match_noun_patterns(&build_tree(s)?, &patterns);
            report.noun_tuples += found.len();
            tuples.extend(found);
        }
    }
    write_jsonl(&out_dir.join(TUPLES_FILE), &tuples)?;
    stage("bootstrap", tuples.len(), start);

    let mut by_id: BTreeMap<String, AnnotatedSentence> = BTreeMap::new();
    for s in &sentences {
        by_id.entry(s.id.clone()).or_insert_with(|| s.clone());
    }
    let mut pool_sentences = sentences.clone();

    let mut matches: Vec<SeedMatch> = Vec::new();
    report.augmentation = config.augment.enabled;
    let pairs_path = out_dir.join(PAIRS_FILE);
    let seeds_path = out_dir.join(SEEDS_FILE);
    if config.augment.enabled {
        let start = Instant::now();
        let linker = make_linker(config)?;
        let mut tuples_by_sentence: BTreeMap<&str, Vec<&ExtractionTuple>> = BTreeMap::new();
        for t in &tuples {
            tuples_by_sentence.entry(t.sentence_id.as_str()).or_default().push(t);
        }
        let mut seeds: Vec<SeedTriple> = Vec::new();
        for s in &sentences {
            if let Some(ts) = tuples_by_sentence.get(s.id.as_str()) {
                let candidates: Vec<_> = ts.iter().flat_map(|t| to_binary_triples(t)).collect();
                seeds.extend(filter_seeds(&candidates, s, linker.as_ref()));
            }
        }
        report.seeds = seeds.len();
        write_jsonl(&seeds_path, &seeds)?;
        stage("seeds", seeds.len(), start);

        let start = Instant::now();
        let augment_sentences = match &config.data.augment_corpus {
            Some(path) => {
                let (extra, bad) = load_corpus(path)?;
                report.invalid_sentences += bad;
                extra
            }
            None => sentences.clone(),
        };
        for s in &augment_sentences {
            if !by_id.contains_key(&s.id) {
                by_id.insert(s.id.clone(), s.clone());
                pool_sentences.push(s.clone());
            }
        }
        let index = CorpusIndex::build(augment_sentences, linker.as_ref())?;
        let mut seen = BTreeSet::new();
        for seed in &seeds {
            for m in match_sentences(seed, &index, config.augment.linearity) {
                if seen.insert((m.sentence_id.clone(), m.rel, m.arg1, m.arg2)) {
                    matches.push(m);
                }
            }
        }
        report.pairs = matches.len();
        write_jsonl(&pairs_path, &matches)?;
        stage("augment", matches.len(), start);
    } else {
        for stale in [&pairs_path, &seeds_path] {
            if stale.exists() {
                fs::remove_file(stale)?;
            }
        }
        info!("stage=augment skipped=true");
    }

    let start = Instant::now();
    let positives = label_positives(&by_id, &tuples, &matches);
    let (argument, preposition): (Vec<TrainingSample>, Vec<TrainingSample>) =
        positives.into_iter().partition(|s| s.task == Task::Argument);
    report.positive_samples = label_counts(argument.iter());
    report.preposition_samples = label_counts(preposition.iter());
    write_sample_file(&out_dir.join(POSITIVES_FILE), &argument)?;
    write_sample_file(&out_dir.join(PREPOSITIONS_FILE), &preposition)?;
    stage("label_positives", argument.len() + preposition.len(), start);

    let start = Instant::now();
    let negatives = if argument.is_empty() {
        Vec::new()
    } else {
        let examples: Vec<Example> = argument.iter().map(TrainingSample::to_example).collect();
        let model_config = config.model.model_config(Task::Argument)?;
        let train_config = TrainConfig {
            seed: config.sampler.seed,
            ..config.train.argument.clone()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(train_config.seed);
        let mut positives_only = NetworkParams::random(
            model_config,
            POSITIVE_CLASSES.iter().map(|c| c.to_string()).collect(),
            build_vocabularies(&examples),
            &mut rng,
        )?;
        load_word_vectors(config, &mut positives_only)?;
        train(&mut positives_only, &examples, &train_config)?;
        stage("train_positive_model", examples.len(), start);

        let start = Instant::now();
        let pool = build_pool(&pool_sentences, &argument, config.sampler.max_verb_path_nodes)?;
        report.pool = pool.len();
        let selected = feedback_negative_sampling(&positives_only, &pool, config.sampler.p)?;
        report.negatives_selected = selected.len();
        let kept = match config.sampler.negative_ratio {
            Some(ratio) => cap_negatives(selected, argument.len(), ratio),
            None => selected,
        };
        stage("negative_sampling", kept.len(), start);
        kept
    };
    report.negatives_kept = negatives.len();
    write_sample_file(&out_dir.join(NEGATIVES_FILE), &negatives)?;

    let mut w = BufWriter::new(File::create(out_dir.join(REPORT_FILE))?);
    serde_json::to_writer_pretty(&mut w, &report)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(report)
}

fn load_word_vectors(config: &PipelineConfig, params: &mut NetworkParams) -> Result<()> {
    if let Some(path) = &config.data.word_vectors {
        require_file(path, "word vector file")?;
        let vectors = read_word2vec_text(BufReader::new(File::open(path)?))?;
        params.embeddings.load_word_vectors(&vectors)?;
    }
    Ok(())
}

fn read_sample_file(path: &Path) -> Result<Vec<TrainingSample>> {
    require_file(path, "sample file")?;
    read_samples(BufReader::new(File::open(path)?))
}

/// Training examples and output classes for a task, from a build directory.
pub fn task_examples(samples_dir: &Path, task: Task) -> Result<(Vec<Example>, Vec<String>)> {
    let (samples, classes) = match task {
        Task::Argument => {
            let mut s = read_sample_file(&samples_dir.join(POSITIVES_FILE))?;
            s.extend(read_sample_file(&samples_dir.join(NEGATIVES_FILE))?);
            (s, ARGUMENT_CLASSES.iter().map(|c| c.to_string()).collect())
        }
        Task::Preposition => {
            let s = read_sample_file(&samples_dir.join(PREPOSITIONS_FILE))?;
            let classes = preposition_classes(&s);
            (s, classes)
        }
    };
    let examples = samples
        .iter()
        .filter(|s| s.task == task)
        .map(TrainingSample::to_example)
        .collect();
    Ok((examples, classes))
}

/// Trains one classifier and writes its checkpoint and epoch log.
pub fn train_model(
    config: &PipelineConfig,
    task: Task,
    samples_dir: &Path,
    out: &Path,
) -> Result<(NetworkParams, TrainLog)> {
    let (examples, classes) = task_examples(samples_dir, task)?;
    if examples.is_empty() {
        return Err(Error::Argument(format!("no {} samples in {}", task, samples_dir.display())));
    }
    let train_config = config.train.for_task(task);
    let mut rng = ChaCha8Rng::seed_from_u64(train_config.seed);
    let mut params = NetworkParams::random(
        config.model.model_config(task)?,
        classes,
        build_vocabularies(&examples),
        &mut rng,
    )?;
    load_word_vectors(config, &mut params)?;
    let start = Instant::now();
    let log = train(&mut params, &examples, train_config)?;
    stage("train", examples.len(), start);
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    save_checkpoint(&params, out)?;
    let mut w = BufWriter::new(File::create(log_path(out))?);
    serde_json::to_writer_pretty(&mut w, &log)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok((params, log))
}

/// Where the epoch log of a checkpoint goes.
pub fn log_path(checkpoint: &Path) -> PathBuf {
    let mut name = checkpoint.file_name().unwrap_or_default().to_os_string();
    name.push(".log.json");
    checkpoint.with_file_name(name)
}

fn load_model(path: &Path, task: Task, config: &PipelineConfig) -> Result<NetworkParams> {
    require_file(path, "checkpoint")?;
    let params = load_checkpoint(path)?;
    if params.config.task != task {
        return Err(Error::Config(format!(
            "{} holds a {} model, expected {}",
            path.display(),
            params.config.task,
            task
        )));
    }
    let expected = config.model.feature_set()?;
    if params.config.features != expected {
        return Err(Error::Config(format!(
            "{} was trained with features {}, configuration says {}",
            path.display(),
            params.config.features,
            expected
        )));
    }
    Ok(params)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Jsonl,
    Text,
}

/// Extracts, filters and writes triples sorted by score.
pub fn extract(
    config: &PipelineConfig,
    corpus: &Path,
    argument_model: &Path,
    preposition_model: &Path,
    out: &Path,
    format: OutputFormat,
) -> Result<Vec<Triple>> {
    let argument = load_model(argument_model, Task::Argument, config)?;
    let preposition = load_model(preposition_model, Task::Preposition, config)?;
    let start = Instant::now();
    let (sentences, _) = load_corpus(corpus)?;
    let triples = extract_corpus(&sentences, &argument, Some(&preposition))?;
    let extracted = triples.len();
    let kept = filter_by_score(triples, config.extract.threshold);
    info!(
        "stage=extract sentences={} count={} kept={} elapsed_ms={}",
        sentences.len(),
        extracted,
        kept.len(),
        start.elapsed().as_millis()
    );
    let mut w = BufWriter::new(File::create(out)?);
    match format {
        OutputFormat::Jsonl => write_triples_jsonl(&mut w, &kept)?,
        OutputFormat::Text => write_triples_text(&mut w, &kept)?,
    }
    w.flush()?;
    Ok(kept)
}
