//! Run configuration: a flat `key = value` file, `KGCL_OUT_DIR`, and
//! `--set` / `--out-dir` flags, applied in that order over the defaults.

use std::fs;
use std::path::{Path, PathBuf};

use kgcl_core::data::SplitSpec;
use kgcl_core::eval::{EvalConfig, StrataSpec};
use kgcl_core::model::HyperParams;
use kgcl_core::pairs::{DomainKind, PairMode};
use kgcl_core::{Error, Result};

pub const OUT_DIR_ENV: &str = "KGCL_OUT_DIR";

const PATH_KEYS: [&str; 7] = [
    "interactions",
    "kg",
    "embeddings",
    "pairs",
    "metadata",
    "sentence_embeddings",
    "scores",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// `user \t content \t rating`, raw ids.
    pub interactions: Option<PathBuf>,
    /// `head \t relation \t tail`, raw ids.
    pub kg: Option<PathBuf>,
    /// Synopsis embeddings fed through the projection layer.
    pub embeddings: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
    /// CSV with `content_id,title,year,genres,synopsis`.
    pub metadata: Option<PathBuf>,
    /// Metadata-sentence embeddings used to mine pairs.
    pub sentence_embeddings: Option<PathBuf>,
    /// Pairwise `anchor \t candidate \t score` file used to mine pairs.
    pub scores: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Where `prepare` writes and later commands read the dataset; defaults
    /// to `out_dir`.
    pub data_dir: Option<PathBuf>,
    pub rating_threshold: Option<f64>,
    pub split: SplitSpec,
    pub hp: HyperParams,
    pub eval: EvalConfig,
    /// `None` trains the collaborative loss alone.
    pub contrastive: Option<PairMode>,
    /// Unset means "use embeddings when a file is given".
    pub semantic_text: Option<bool>,
    pub pair_n: usize,
    pub domain: DomainKind,
    /// Score the eval split after every epoch.
    pub epoch_eval: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            interactions: None,
            kg: None,
            embeddings: None,
            pairs: None,
            metadata: None,
            sentence_embeddings: None,
            scores: None,
            out_dir: PathBuf::from("kgcl-out"),
            data_dir: None,
            rating_threshold: None,
            split: SplitSpec::default(),
            hp: HyperParams::default(),
            eval: EvalConfig::default(),
            contrastive: Some(PairMode::Genre),
            semantic_text: None,
            pair_n: 10,
            domain: DomainKind::Movie,
            epoch_eval: true,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "invalid value `{value}` for `{key}` (expected true/false)"
        ))),
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Resolves the layered configuration and validates it.
    pub fn load(file: Option<&Path>, overrides: &[(String, String)], out_dir: Option<&Path>) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(path) = file {
            cfg.apply_file(path)?;
        }
        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            if !dir.is_empty() {
                cfg.out_dir = PathBuf::from(dir);
            }
        }
        for (k, v) in overrides {
            cfg.set(k, v, None)?;
        }
        if let Some(dir) = out_dir {
            cfg.out_dir = dir.to_path_buf();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty());
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.display().to_string(),
                line: i + 1,
                msg: "expected `key = value`".into(),
            })?;
            self.set(k.trim(), v.trim(), base).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("{}:{}: {msg}", path.display(), i + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    /// Sets one key. Relative paths are taken relative to `base` when given.
    pub fn set(&mut self, key: &str, value: &str, base: Option<&Path>) -> Result<()> {
        let value = value.trim();
        let path = || {
            let p = PathBuf::from(value);
            match base {
                Some(b) if p.is_relative() => b.join(p),
                _ => p,
            }
        };
        let optional_path = || if value.is_empty() { None } else { Some(path()) };
        match key {
            "interactions" => self.interactions = optional_path(),
            "kg" => self.kg = optional_path(),
            "embeddings" => self.embeddings = optional_path(),
            "pairs" => self.pairs = optional_path(),
            "metadata" => self.metadata = optional_path(),
            "sentence_embeddings" => self.sentence_embeddings = optional_path(),
            "scores" => self.scores = optional_path(),
            "out_dir" => self.out_dir = path(),
            "data_dir" => self.data_dir = optional_path(),
            "rating_threshold" => {
                self.rating_threshold = match value {
                    "" | "none" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "train_frac" => self.split.train_frac = parse(key, value)?,
            "eval_frac" => self.split.eval_frac = parse(key, value)?,
            "test_frac" => self.split.test_frac = parse(key, value)?,
            "ks" => self.eval.ks = parse_list(key, value)?,
            "diversity_k" => self.eval.diversity_k = parse(key, value)?,
            "cold_start_k" => self.eval.cold_start_k = parse(key, value)?,
            "strata" => self.eval.strata = StrataSpec::new(parse_list(key, value)?)?,
            "ctr" => self.eval.ctr = parse_bool(key, value)?,
            "f1_threshold" => self.eval.f1_threshold = parse(key, value)?,
            "contrastive" => {
                self.contrastive = match value {
                    "none" | "off" => None,
                    v => Some(v.parse()?),
                }
            }
            "semantic_text" => {
                self.semantic_text = match value {
                    "auto" => None,
                    v => Some(parse_bool(key, v)?),
                }
            }
            "pair_n" => self.pair_n = parse(key, value)?,
            "domain" => self.domain = value.parse()?,
            "epoch_eval" => self.epoch_eval = parse_bool(key, value)?,
            k if HyperParams::KEYS.contains(&k) => self.hp.set(k, value)?,
            other => return Err(Error::Config(format!("unknown configuration key `{other}`"))),
        }
        Ok(())
    }

    /// Checks every invariant that does not need the data itself.
    pub fn validate(&self) -> Result<()> {
        self.hp.validate()?;
        self.split.validate()?;
        let ks = &self.eval.ks;
        if ks.is_empty() || ks.contains(&0) {
            return Err(Error::Config("ks must be a non-empty list of positive cut-offs".into()));
        }
        if ks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "ks must be strictly ascending, got {}",
                join(ks)
            )));
        }
        if self.eval.diversity_k == 0 || self.eval.cold_start_k == 0 {
            return Err(Error::Config("diversity_k and cold_start_k must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.eval.f1_threshold) {
            return Err(Error::Config(format!(
                "f1_threshold {} must lie in [0, 1]",
                self.eval.f1_threshold
            )));
        }
        if self.pair_n == 0 {
            return Err(Error::Config("pair_n must be at least 1".into()));
        }
        if let Some(t) = self.rating_threshold {
            if !t.is_finite() {
                return Err(Error::Config("rating_threshold must be finite".into()));
            }
        }
        match self.contrastive {
            None if self.hp.gamma < 1.0 => {
                return Err(Error::Config(format!(
                    "gamma = {} weights a contrastive loss but contrastive = none",
                    self.hp.gamma
                )))
            }
            Some(_) if self.hp.gamma < 1.0 && !self.has_pair_source() => {
                return Err(Error::Config(
                    "contrastive training needs `pairs`, `metadata`, `sentence_embeddings` or `scores`".into(),
                ))
            }
            _ => {}
        }
        if self.semantic_text == Some(true) && self.embeddings.is_none() {
            return Err(Error::Config("semantic_text = true needs an `embeddings` file".into()));
        }
        for (key, p) in self.paths() {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(Error::Config(format!("`{key}` file {} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }

    fn paths(&self) -> [(&'static str, &Option<PathBuf>); 7] {
        [
            (PATH_KEYS[0], &self.interactions),
            (PATH_KEYS[1], &self.kg),
            (PATH_KEYS[2], &self.embeddings),
            (PATH_KEYS[3], &self.pairs),
            (PATH_KEYS[4], &self.metadata),
            (PATH_KEYS[5], &self.sentence_embeddings),
            (PATH_KEYS[6], &self.scores),
        ]
    }

    fn has_pair_source(&self) -> bool {
        self.pairs.is_some() || self.metadata.is_some() || self.sentence_embeddings.is_some() || self.scores.is_some()
    }

    /// Whether the contrastive loss takes part in training.
    pub fn contrastive_active(&self) -> bool {
        self.contrastive.is_some() && self.hp.gamma < 1.0
    }

    pub fn use_embeddings(&self) -> bool {
        self.semantic_text.unwrap_or(self.embeddings.is_some())
    }

    /// Short name of the experimental arm, e.g. `cl_genre+text`.
    pub fn arm(&self) -> String {
        let base = match self.contrastive {
            Some(mode) if self.hp.gamma < 1.0 => format!("cl_{}", mode.as_str()),
            _ => "baseline".to_string(),
        };
        if self.use_embeddings() {
            format!("{base}+text")
        } else {
            base
        }
    }

    pub fn data_dir(&self) -> &Path {
        self.data_dir.as_deref().unwrap_or(&self.out_dir)
    }

    /// Seed shared by the split, training and evaluation.
    pub fn seed(&self) -> u64 {
        self.hp.seed
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            seed: self.seed(),
            ..self.eval.clone()
        }
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            seed: self.seed(),
            ..self.split
        }
    }

    /// Every key in a form [`RunConfig::set`] reads back.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let show = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let mut out: Vec<(String, String)> = self.paths().iter().map(|(k, p)| (k.to_string(), show(p))).collect();
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        push("out_dir", self.out_dir.display().to_string());
        push("data_dir", show(&self.data_dir));
        push(
            "rating_threshold",
            self.rating_threshold
                .map(|t| t.to_string())
                .unwrap_or_else(|| "none".into()),
        );
        push("train_frac", self.split.train_frac.to_string());
        push("eval_frac", self.split.eval_frac.to_string());
        push("test_frac", self.split.test_frac.to_string());
        push("ks", join(&self.eval.ks));
        push("diversity_k", self.eval.diversity_k.to_string());
        push("cold_start_k", self.eval.cold_start_k.to_string());
        push("strata", join(self.eval.strata.cuts()));
        push("ctr", self.eval.ctr.to_string());
        push("f1_threshold", self.eval.f1_threshold.to_string());
        push(
            "contrastive",
            self.contrastive
                .map(|m| m.as_str().to_string())
                .unwrap_or_else(|| "none".into()),
        );
        push(
            "semantic_text",
            self.semantic_text
                .map(|b| b.to_string())
                .unwrap_or_else(|| "auto".into()),
        );
        push("pair_n", self.pair_n.to_string());
        push(
            "domain",
            match self.domain {
                DomainKind::Movie => "movie",
                DomainKind::Book => "book",
            }
            .to_string(),
        );
        push("epoch_eval", self.epoch_eval.to_string());
        for (k, v) in self.hp.to_pairs() {
            push(k, v);
        }
        out
    }

    pub fn render(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

/// Splits a `key=value` flag.
pub fn parse_override(s: &str) -> std::result::Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| format!("expected key=value, got `{s}`"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with(pairs: &[(&str, &str)]) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        for (k, v) in pairs {
            cfg.set(k, v, None)?;
        }
        cfg.validate().map(|_| cfg)
    }

    #[test]
    fn gamma_out_of_range_is_rejected() {
        let err = with(&[("gamma", "1.5")]).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn contrastive_gamma_needs_a_pair_source() {
        assert!(with(&[("gamma", "0.8")]).is_err());
        assert!(with(&[("gamma", "0.8"), ("contrastive", "none")]).is_err());
        assert!(with(&[("gamma", "1"), ("contrastive", "none")]).is_ok());
    }

    #[test]
    fn descending_ks_are_rejected() {
        assert!(with(&[("gamma", "1"), ("ks", "10,5")]).is_err());
        assert!(with(&[("gamma", "1"), ("ks", "")]).is_err());
    }

    #[test]
    fn missing_path_is_rejected() {
        let err = with(&[("gamma", "1"), ("kg", "/definitely/not/here.tsv")]).unwrap_err();
        assert!(err.to_string().contains("/definitely/not/here.tsv"));
    }

    #[test]
    fn unknown_key_is_rejected() {
        assert!(RunConfig::default().set("gamam", "1", None).is_err());
    }

    #[test]
    fn render_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let meta = dir.path().join("meta.csv");
        fs::write(&meta, "content_id,title,year,genres,synopsis\n").unwrap();
        let mut cfg = RunConfig::default();
        cfg.set("metadata", meta.to_str().unwrap(), None).unwrap();
        // relative paths would be re-anchored at the file's directory
        cfg.out_dir = dir.path().join("o");
        for (k, v) in [
            ("gamma", "0.7"),
            ("ks", "1,3"),
            ("strata", "10,100"),
            ("semantic_text", "false"),
        ] {
            cfg.set(k, v, None).unwrap();
        }
        let file = dir.path().join("run.conf");
        fs::write(&file, cfg.render()).unwrap();
        let back = RunConfig::load(Some(&file), &[], None).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn file_paths_are_relative_to_the_file() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("kg.tsv"), "1\t0\t2\n").unwrap();
        let file = dir.path().join("run.conf");
        fs::write(&file, "# comment\nkg = kg.tsv\ngamma = 1\ncontrastive = none\n").unwrap();
        let cfg = RunConfig::load(Some(&file), &[], None).unwrap();
        assert_eq!(cfg.kg.unwrap(), dir.path().join("kg.tsv"));
    }

    #[test]
    fn flags_beat_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("run.conf");
        fs::write(&file, "gamma = 1\ncontrastive = none\ndim = 8\n").unwrap();
        let cfg = RunConfig::load(
            Some(&file),
            &[("dim".into(), "12".into())],
            Some(Path::new("elsewhere")),
        )
        .unwrap();
        assert_eq!(cfg.hp.dim, 12);
        assert_eq!(cfg.out_dir, PathBuf::from("elsewhere"));
    }

    #[test]
    fn malformed_line_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("run.conf");
        fs::write(&file, "gamma = 1\nnonsense\n").unwrap();
        let err = RunConfig::load(Some(&file), &[], None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn arm_names() {
        let mut cfg = RunConfig::default();
        assert_eq!(cfg.arm(), "cl_genre");
        cfg.set("gamma", "1", None).unwrap();
        assert_eq!(cfg.arm(), "baseline");
        cfg.set("gamma", "0.8", None).unwrap();
        cfg.set("contrastive", "title+genre", None).unwrap();
        cfg.embeddings = Some(PathBuf::from("x"));
        assert_eq!(cfg.arm(), "cl_title+genre+text");
    }
}
