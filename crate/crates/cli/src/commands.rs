use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use kgcl_core::data::{
    load_embeddings, load_interactions, load_kg, split_dataset, write_kg, write_split_file, IdMap, Interaction,
};
use kgcl_core::eval::{auc, ctr_examples, evaluate_model, f1, rank_users, score_examples};
use kgcl_core::model::{load_checkpoint, save_checkpoint, Kgcn, ParameterSet};
use kgcl_core::pairs::{
    build_pair_sets, load_scores, render_template, write_pairs, ContentMetadata, EmbeddingDotProvider, PairMode,
    PairSets,
};
use kgcl_core::synthetic::PlantedSpec;
use kgcl_core::train::{fit, EpochLog, LossBreakdown, NoObserver, TrainObserver};
use kgcl_core::{Error, Result};
use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::report;
use crate::workspace::{self, Prepared};

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

pub fn write_file(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).map_err(io_err(path))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

pub fn prepare(cfg: &RunConfig) -> Result<()> {
    let need =
        |p: &Option<PathBuf>, key: &str| p.clone().ok_or_else(|| Error::Config(format!("prepare needs `{key}`")));
    let interactions = need(&cfg.interactions, "interactions")?;
    let kg = need(&cfg.kg, "kg")?;

    let loaded = load_interactions(&interactions, cfg.rating_threshold)?;
    let graph = load_kg(&kg, Some(&loaded.contents))?;
    let (train, eval, test) = split_dataset(&loaded.set, &cfg.split_spec())?;

    let dir = cfg.data_dir();
    create_dir(dir)?;
    write_split_file(&dir.join(workspace::TRAIN), &train)?;
    write_split_file(&dir.join(workspace::EVAL), &eval)?;
    write_split_file(&dir.join(workspace::TEST), &test)?;
    loaded.users.write(&dir.join(workspace::USERS))?;
    loaded.contents.write(&dir.join(workspace::CONTENTS))?;
    graph.entities.write(&dir.join(workspace::ENTITIES))?;
    graph.relations.write(&dir.join(workspace::RELATIONS))?;
    write_kg(&dir.join(workspace::KG), &graph.graph)?;
    info!(
        "{} users, {} contents, {} entities, {} relations, {} triples",
        loaded.users.len(),
        loaded.contents.len(),
        graph.entities.len(),
        graph.relations.len(),
        graph.graph.num_triples()
    );
    info!(
        "split {} / {} / {} records into {}",
        train.len(),
        eval.len(),
        test.len(),
        dir.display()
    );
    Ok(())
}

/// Mines pairs in raw content ids. The universe is the metadata's contents
/// (restricted to `known` when given) or, without metadata, `known` itself.
fn mine_pairs(
    cfg: &RunConfig,
    mode: PairMode,
    metadata: Option<&[ContentMetadata]>,
    known: Option<&IdMap>,
) -> Result<PairSets> {
    let mut universe: Vec<usize> = match (metadata, known) {
        (Some(rows), _) => rows.iter().map(|r| r.content_id).collect(),
        (None, Some(map)) => map.iter().map(|(ext, _)| ext).collect(),
        (None, None) => {
            return Err(Error::Config(
                "pair mining needs `metadata` or a prepared data directory".into(),
            ))
        }
    };
    if let (Some(_), Some(map)) = (metadata, known) {
        let before = universe.len();
        universe.retain(|&c| map.dense(c).is_some());
        if universe.len() < before {
            warn!(
                "{} metadata rows name contents without interactions and were left out",
                before - universe.len()
            );
        }
    }
    universe.sort_unstable();

    if let Some(path) = &cfg.scores {
        info!("ranking candidates by the scores in {}", path.display());
        return build_pair_sets(&universe, &load_scores(path)?, cfg.pair_n, mode);
    }
    if let Some(path) = &cfg.sentence_embeddings {
        info!("ranking candidates by sentence embeddings in {}", path.display());
        let table = load_embeddings(path)?;
        let vectors: HashMap<usize, Vec<f64>> = table.iter().map(|(c, v)| (c, v.to_vec())).collect();
        return build_pair_sets(&universe, &EmbeddingDotProvider::new(vectors), cfg.pair_n, mode);
    }
    let rows = metadata.ok_or_else(|| {
        Error::Config("without `scores` or `sentence_embeddings`, pair mining needs `metadata`".into())
    })?;
    let wanted: HashSet<usize> = universe.iter().copied().collect();
    let sentences = rows
        .iter()
        .filter(|m| wanted.contains(&m.content_id))
        .map(|m| render_template(m, mode, cfg.domain).map(|s| (m.content_id, s)))
        .collect::<Result<Vec<_>>>()?;
    build_pair_sets(
        &universe,
        &EmbeddingDotProvider::from_sentences(&sentences),
        cfg.pair_n,
        mode,
    )
}

fn known_contents(cfg: &RunConfig) -> Result<Option<IdMap>> {
    let path = cfg.data_dir().join(workspace::CONTENTS);
    if path.exists() {
        IdMap::read(&path).map(Some)
    } else {
        Ok(None)
    }
}

pub fn sample_pairs(cfg: &RunConfig, output: Option<&Path>) -> Result<PathBuf> {
    let mode = cfg
        .contrastive
        .ok_or_else(|| Error::Config("contrastive = none; set it to genre or title+genre".into()))?;
    let metadata = cfg.metadata.as_deref().map(workspace::read_metadata).transpose()?;
    let known = known_contents(cfg)?;
    let pairs = mine_pairs(cfg, mode, metadata.as_deref(), known.as_ref())?;

    let path = output
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.out_dir.join(workspace::PAIRS));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_pairs(&path, &pairs)?;
    info!(
        "{} anchors, {} positive and {} negative content-content links ({} mode, n = {}) -> {}",
        pairs.num_anchors(),
        pairs.num_positive_links(),
        pairs.num_negative_links(),
        mode.as_str(),
        pairs.n,
        path.display()
    );
    Ok(path)
}

/// Dense-id pairs for training or geometry: the configured or sampled pair
/// file, else mined on the fly from whatever source the config names.
fn dense_pairs(cfg: &RunConfig, prepared: &Prepared) -> Result<Option<PairSets>> {
    if let Some(path) = workspace::pair_file(cfg) {
        info!("contrastive pairs from {}", path.display());
        return workspace::load_dense_pairs(&path, cfg, &prepared.contents).map(Some);
    }
    let Some(mode) = cfg.contrastive else {
        return Ok(None);
    };
    if cfg.metadata.is_none() && cfg.scores.is_none() && cfg.sentence_embeddings.is_none() {
        return Ok(None);
    }
    let metadata = cfg.metadata.as_deref().map(workspace::read_metadata).transpose()?;
    let raw = mine_pairs(cfg, mode, metadata.as_deref(), Some(&prepared.contents))?;
    raw.map_ids(|c| prepared.contents.dense(c)).map(Some)
}

/// Scores a fixed sample of the eval split after every epoch.
struct HeldOut<'a> {
    model: Kgcn<'a>,
    examples: Vec<Interaction>,
    threshold: f64,
    seed: u64,
}

impl TrainObserver for HeldOut<'_> {
    fn on_epoch(&mut self, epoch: usize, params: &ParameterSet, _: &LossBreakdown) -> Result<Option<(f64, f64)>> {
        let scored = score_examples(&self.model, params, &self.examples, self.seed)?;
        match (auc(&scored), f1(&scored, self.threshold)) {
            (Ok(a), Ok(f)) => Ok(Some((a, f))),
            (Err(e), _) | (_, Err(e)) => {
                warn!("epoch {epoch}: held-out metrics unavailable: {e}");
                Ok(None)
            }
        }
    }
}

fn render_log(log: &[EpochLog]) -> String {
    let na = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_else(|| "NA".into());
    let mut out = String::from("epoch\tbase\tcontrastive\tl2\ttotal\tauc\tf1\n");
    for e in log {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            e.epoch,
            e.loss.base,
            e.loss.contrastive,
            e.loss.l2,
            e.loss.total,
            na(e.auc),
            na(e.f1)
        )
        .unwrap();
    }
    out
}

pub fn train(cfg: &RunConfig) -> Result<()> {
    let prepared = Prepared::load(cfg.data_dir())?;
    let external = workspace::external_table(cfg, &prepared.contents)?;
    let pairs = if cfg.contrastive.is_some() {
        dense_pairs(cfg, &prepared)?
    } else {
        None
    };
    if cfg.contrastive_active() && pairs.is_none() {
        return Err(Error::Config(
            "gamma < 1 but no pair file was found; run `kgcl sample-pairs` or set `pairs`".into(),
        ));
    }
    let model = Kgcn::new(&prepared.graph, external.as_ref(), &cfg.hp);
    info!(
        "training `{}` for {} epochs on {} records",
        cfg.arm(),
        cfg.hp.epochs,
        prepared.train.len()
    );

    let result = if cfg.epoch_eval && !prepared.eval.is_empty() {
        let contents = prepared.graph.contents();
        let known = workspace::positive_sets(&[&prepared.train, &prepared.test]);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
        rng.set_stream(2);
        let mut observer = HeldOut {
            model: Kgcn::new(&prepared.graph, external.as_ref(), &cfg.hp),
            examples: ctr_examples(&prepared.eval, &known, &contents, &mut rng),
            threshold: cfg.eval.f1_threshold,
            seed: cfg.seed(),
        };
        fit(
            &model,
            &prepared.train,
            pairs.as_ref(),
            prepared.users.len(),
            &mut observer,
        )?
    } else {
        fit(
            &model,
            &prepared.train,
            pairs.as_ref(),
            prepared.users.len(),
            &mut NoObserver,
        )?
    };

    create_dir(&cfg.out_dir)?;
    let ckpt = cfg.out_dir.join(workspace::CHECKPOINT);
    save_checkpoint(&ckpt, &cfg.hp, &result.params)?;
    write_file(&cfg.out_dir.join(workspace::TRAIN_LOG), &render_log(&result.log))?;
    match result.log.last() {
        Some(last) => info!("final loss {:.6}; checkpoint {}", last.loss.total, ckpt.display()),
        None => info!("no epoch run; checkpoint holds the initialization"),
    }
    Ok(())
}

fn checkpoint_path(cfg: &RunConfig, given: Option<&Path>) -> PathBuf {
    given
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.out_dir.join(workspace::CHECKPOINT))
}

/// Loads a checkpoint and refuses one whose width differs from the config.
fn load_model_params(cfg: &RunConfig, path: &Path) -> Result<kgcl_core::model::Checkpoint> {
    let ckpt = load_checkpoint(path)?;
    if ckpt.hp.dim != cfg.hp.dim {
        return Err(Error::Dimension {
            expected: cfg.hp.dim,
            found: ckpt.hp.dim,
        });
    }
    if (ckpt.hp.layers, ckpt.hp.aggregator, ckpt.hp.neighbor_samples)
        != (cfg.hp.layers, cfg.hp.aggregator, cfg.hp.neighbor_samples)
    {
        warn!("checkpoint architecture differs from the config; using the checkpoint's");
    }
    Ok(ckpt)
}

pub fn evaluate(cfg: &RunConfig, split: &str, checkpoint: Option<&Path>) -> Result<()> {
    let prepared = Prepared::load(cfg.data_dir())?;
    let target = prepared.split(split)?;
    let ckpt = load_model_params(cfg, &checkpoint_path(cfg, checkpoint))?;
    let external = workspace::external_table(cfg, &prepared.contents)?;
    let model = Kgcn::new(&prepared.graph, external.as_ref(), &ckpt.hp);
    model.check_compatible(&ckpt.params)?;

    // rank against everything the model could have seen before `split`
    let exclude = match split {
        "test" => workspace::union(&[&prepared.train, &prepared.eval])?,
        _ => prepared.train.clone(),
    };
    let others: Vec<&_> = ["train", "eval", "test"]
        .iter()
        .filter(|&&s| s != split)
        .map(|s| prepared.split(s))
        .collect::<Result<_>>()?;
    let known = workspace::positive_sets(&others);
    let pairs = dense_pairs(cfg, &prepared)?;
    let eval_cfg = cfg.eval_config();
    let metrics = evaluate_model(
        &model,
        &ckpt.params,
        &exclude,
        target,
        &known,
        pairs.as_ref(),
        &eval_cfg,
    )?;

    create_dir(&cfg.out_dir)?;
    report::write_metrics(&cfg.out_dir, cfg, split, &metrics)?;
    print!("{}", report::render_single(cfg, split, &metrics));
    Ok(())
}

pub fn recommend(
    cfg: &RunConfig,
    users: Option<&[usize]>,
    k: usize,
    checkpoint: Option<&Path>,
    output: Option<&Path>,
) -> Result<PathBuf> {
    if k == 0 {
        return Err(Error::Config("K must be at least 1".into()));
    }
    let prepared = Prepared::load(cfg.data_dir())?;
    let dense_users: Vec<usize> = match users {
        Some(ext) => {
            let unknown: Vec<String> = ext
                .iter()
                .filter(|&&u| prepared.users.dense(u).is_none())
                .map(ToString::to_string)
                .collect();
            if !unknown.is_empty() {
                return Err(Error::Data(format!("unknown users: {}", unknown.join(", "))));
            }
            ext.iter().filter_map(|&u| prepared.users.dense(u)).collect()
        }
        None => (0..prepared.users.len()).collect(),
    };
    let ckpt = load_model_params(cfg, &checkpoint_path(cfg, checkpoint))?;
    let external = workspace::external_table(cfg, &prepared.contents)?;
    let model = Kgcn::new(&prepared.graph, external.as_ref(), &ckpt.hp);
    model.check_compatible(&ckpt.params)?;

    let seen = workspace::union(&[&prepared.train, &prepared.eval, &prepared.test])?;
    let recs = rank_users(
        &model,
        &ckpt.params,
        &dense_users,
        &seen,
        &prepared.graph.contents(),
        cfg.seed(),
    )?;
    let mut out = String::from("user\trank\tcontent\tscore\n");
    for r in &recs {
        let user = prepared.users.external(r.user).expect("dense user");
        if r.len() < k {
            warn!("user {user} has only {} unseen contents, fewer than K = {k}", r.len());
        }
        for (rank, (&c, &s)) in r.items.iter().zip(&r.scores).take(k).enumerate() {
            let content = prepared.contents.external(c).expect("dense content");
            writeln!(out, "{user}\t{}\t{content}\t{s}", rank + 1).unwrap();
        }
    }
    let path = output
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.out_dir.join(workspace::RECOMMENDATIONS));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_file(&path, &out)?;
    info!("top-{k} lists for {} users -> {}", recs.len(), path.display());
    Ok(path)
}

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

/// One config file per experimental arm: the baseline, the genre and
/// title+genre contrastive arms, and each again with text embeddings.
pub fn matrix(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let has_source =
        cfg.pairs.is_some() || cfg.metadata.is_some() || cfg.scores.is_some() || cfg.sentence_embeddings.is_some();
    if !has_source {
        return Err(Error::Config("the contrastive arms need a pair source".into()));
    }
    let gamma = if cfg.hp.gamma < 1.0 { cfg.hp.gamma } else { 0.8 };
    let mut texts = vec![false];
    if cfg.embeddings.is_some() {
        texts.push(true);
    } else {
        warn!("no `embeddings` file; writing the arms without semantic text only");
    }
    if cfg.pairs.is_some() {
        warn!("the pair file is shared by the genre and title+genre arms");
    }

    let mut base = cfg.clone();
    for p in [
        &mut base.interactions,
        &mut base.kg,
        &mut base.embeddings,
        &mut base.pairs,
        &mut base.metadata,
        &mut base.sentence_embeddings,
        &mut base.scores,
    ] {
        *p = p.as_deref().map(absolute);
    }
    base.data_dir = Some(absolute(cfg.data_dir()));
    let root = absolute(&cfg.out_dir);

    create_dir(dir)?;
    let mut written = Vec::new();
    for text in texts {
        for (g, mode) in [
            (1.0, PairMode::Genre),
            (gamma, PairMode::Genre),
            (gamma, PairMode::TitleGenre),
        ] {
            let mut arm = base.clone();
            arm.hp.gamma = g;
            arm.contrastive = Some(mode);
            arm.semantic_text = Some(text);
            if !text {
                arm.embeddings = None;
            }
            let name = arm.arm();
            arm.out_dir = root.join(&name);
            arm.validate()?;
            let path = dir.join(format!("{name}.conf"));
            write_file(&path, &format!("# arm {name}\n{}", arm.render()))?;
            written.push(path);
        }
    }
    info!("{} arm configs in {}", written.len(), dir.display());
    Ok(written)
}

/// Writes a planted dataset as raw input files plus a config that runs it.
pub fn synth(spec: &PlantedSpec, dir: &Path) -> Result<PathBuf> {
    let data = spec.generate()?;
    create_dir(dir)?;

    let mut ratings = String::new();
    for set in [&data.train, &data.test] {
        for r in set.records() {
            writeln!(ratings, "{}\t{}\t5", r.user, r.content).unwrap();
        }
    }
    write_file(&dir.join("ratings.tsv"), &ratings)?;
    write_kg(&dir.join("kg.tsv"), &data.graph)?;
    workspace::write_metadata(&dir.join("metadata.csv"), &data.metadata)?;

    let conf = format!(
        "# planted dataset: {} users, {} contents\n\
         interactions = ratings.tsv\n\
         kg = kg.tsv\n\
         metadata = metadata.csv\n\
         out_dir = out\n\
         dim = 16\n\
         neighbor_samples = 4\n\
         layers = 1\n\
         epochs = 30\n\
         pair_n = 5\n\
         seed = {}\n",
        data.num_users,
        spec.num_contents(),
        spec.seed
    );
    let path = dir.join("synth.conf");
    write_file(&path, &conf)?;
    info!(
        "{} users ({} cold), {} contents -> {}",
        data.num_users,
        data.cold_users.len(),
        spec.num_contents(),
        dir.display()
    );
    Ok(path)
}
