//! Flat `key = value` project configuration. Every key mirrors a command-line
//! flag; flags given on the command line win over file values.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::corpus::{Approach, Format, DEFAULT_URGENCY_THRESHOLD_DAYS};
use crate::error::{Error, Result};
use crate::models::{ModelKind, TrainConfig};
use crate::pipeline::{CvConfig, FeaturizeConfig};
use crate::select::SelectionConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectConfig {
    pub input: Option<PathBuf>,
    pub format: Option<Format>,
    pub out: PathBuf,
    pub lexicon_dir: Option<PathBuf>,
    pub approach: Approach,
    pub threshold_days: f64,
    pub featurize: FeaturizeConfig,
    pub selection: SelectionConfig,
    pub train: TrainConfig,
    pub cv: CvConfig,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        ProjectConfig {
            input: None,
            format: None,
            out: PathBuf::from("rp-out"),
            lexicon_dir: None,
            approach: Approach::ResponsePresence,
            threshold_days: DEFAULT_URGENCY_THRESHOLD_DAYS,
            featurize: FeaturizeConfig::default(),
            selection: SelectionConfig::default(),
            train: TrainConfig::new(ModelKind::Xgb, 0),
            cv: CvConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("`{key}` expects true or false, got `{value}`"))),
    }
}

fn optional<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value.is_empty() || value.eq_ignore_ascii_case("auto") || value.eq_ignore_ascii_case("none") {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

impl ProjectConfig {
    pub const KEYS: &'static [&'static str] = &[
        "input",
        "format",
        "out",
        "lexicon_dir",
        "approach",
        "threshold_days",
        "spell_check",
        "english_threshold",
        "topics_k",
        "topics_alpha",
        "topics_beta",
        "topics_iters",
        "topics_seed",
        "topics_min_df",
        "inference_sweeps",
        "min_abs_r",
        "redundancy_r",
        "model",
        "seed",
        "balance_classes",
        "dt_max_depth",
        "dt_min_samples_leaf",
        "rf_n_trees",
        "rf_max_depth",
        "rf_min_samples_leaf",
        "rf_max_features",
        "rf_bootstrap",
        "svm_lambda",
        "svm_epochs",
        "svm_standardize",
        "xgb_rounds",
        "xgb_learning_rate",
        "xgb_max_depth",
        "xgb_lambda",
        "xgb_gamma",
        "xgb_min_child_weight",
        "xgb_base_score",
        "cv",
        "cv_seed",
        "paper_mode",
    ];

    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let t = &mut self.train;
        let f = &mut self.featurize;
        match key {
            "input" => self.input = Some(PathBuf::from(v)),
            "format" => self.format = optional(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "lexicon_dir" => self.lexicon_dir = Some(PathBuf::from(v)),
            "approach" => self.approach = parse(key, v)?,
            "threshold_days" => self.threshold_days = parse(key, v)?,
            "spell_check" => f.preprocess.spell_check = parse_bool(key, v)?,
            "english_threshold" => f.preprocess.english_threshold = parse(key, v)?,
            "topics_k" => f.lda.k = parse(key, v)?,
            "topics_alpha" => f.lda.alpha = optional(key, v)?,
            "topics_beta" => f.lda.beta = parse(key, v)?,
            "topics_iters" => f.lda.iterations = parse(key, v)?,
            "topics_seed" => f.lda.seed = parse(key, v)?,
            "topics_min_df" => f.lda.min_df = parse(key, v)?,
            "inference_sweeps" => f.inference_sweeps = parse(key, v)?,
            "min_abs_r" => self.selection.min_abs_r = parse(key, v)?,
            "redundancy_r" => self.selection.redundancy_r = parse(key, v)?,
            "model" => t.kind = parse(key, v)?,
            "seed" => t.seed = parse(key, v)?,
            "balance_classes" => t.balance_classes = parse_bool(key, v)?,
            "dt_max_depth" => t.dt.max_depth = parse(key, v)?,
            "dt_min_samples_leaf" => t.dt.min_samples_leaf = parse(key, v)?,
            "rf_n_trees" => t.rf.n_trees = parse(key, v)?,
            "rf_max_depth" => t.rf.max_depth = parse(key, v)?,
            "rf_min_samples_leaf" => t.rf.min_samples_leaf = parse(key, v)?,
            "rf_max_features" => t.rf.max_features = optional(key, v)?,
            "rf_bootstrap" => t.rf.bootstrap = parse_bool(key, v)?,
            "svm_lambda" => t.svm.l2_lambda = parse(key, v)?,
            "svm_epochs" => t.svm.epochs = parse(key, v)?,
            "svm_standardize" => t.svm.standardize = parse_bool(key, v)?,
            "xgb_rounds" => t.xgb.n_rounds = parse(key, v)?,
            "xgb_learning_rate" => t.xgb.learning_rate = parse(key, v)?,
            "xgb_max_depth" => t.xgb.max_depth = parse(key, v)?,
            "xgb_lambda" => t.xgb.reg_lambda = parse(key, v)?,
            "xgb_gamma" => t.xgb.gamma = parse(key, v)?,
            "xgb_min_child_weight" => t.xgb.min_child_weight = parse(key, v)?,
            "xgb_base_score" => t.xgb.base_score = parse(key, v)?,
            "cv" => self.cv.k = parse(key, v)?,
            "cv_seed" => self.cv.seed = parse(key, v)?,
            "paper_mode" => self.cv.paper_mode = parse_bool(key, v)?,
            _ => return Err(Error::Config(format!("unknown configuration key `{key}`"))),
        }
        Ok(())
    }

    /// Parse a config document on top of the defaults. `#` starts a comment.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut config = ProjectConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            config
                .apply(key.trim(), value)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text)
    }

    /// The effective configuration as a config document.
    pub fn render(&self) -> String {
        let f = &self.featurize;
        let t = &self.train;
        let opt = |v: Option<String>| v.unwrap_or_else(|| "auto".into());
        let lines = [
            ("input", self.input.as_ref().map(|p| p.display().to_string()).unwrap_or_default()),
            (
                "format",
                self.format
                    .map(|f| match f {
                        Format::Csv => "csv".to_string(),
                        Format::Jsonl => "jsonl".to_string(),
                    })
                    .unwrap_or_else(|| "auto".into()),
            ),
            ("out", self.out.display().to_string()),
            ("lexicon_dir", self.lexicon_dir.as_ref().map(|p| p.display().to_string()).unwrap_or_default()),
            ("approach", self.approach.cli_name().to_string()),
            ("threshold_days", self.threshold_days.to_string()),
            ("spell_check", f.preprocess.spell_check.to_string()),
            ("english_threshold", f.preprocess.english_threshold.to_string()),
            ("topics_k", f.lda.k.to_string()),
            ("topics_alpha", opt(f.lda.alpha.map(|a| a.to_string()))),
            ("topics_beta", f.lda.beta.to_string()),
            ("topics_iters", f.lda.iterations.to_string()),
            ("topics_seed", f.lda.seed.to_string()),
            ("topics_min_df", f.lda.min_df.to_string()),
            ("inference_sweeps", f.inference_sweeps.to_string()),
            ("min_abs_r", self.selection.min_abs_r.to_string()),
            ("redundancy_r", self.selection.redundancy_r.to_string()),
            ("model", t.kind.name().to_string()),
            ("seed", t.seed.to_string()),
            ("balance_classes", t.balance_classes.to_string()),
            ("dt_max_depth", t.dt.max_depth.to_string()),
            ("dt_min_samples_leaf", t.dt.min_samples_leaf.to_string()),
            ("rf_n_trees", t.rf.n_trees.to_string()),
            ("rf_max_depth", t.rf.max_depth.to_string()),
            ("rf_min_samples_leaf", t.rf.min_samples_leaf.to_string()),
            ("rf_max_features", opt(t.rf.max_features.map(|v| v.to_string()))),
            ("rf_bootstrap", t.rf.bootstrap.to_string()),
            ("svm_lambda", t.svm.l2_lambda.to_string()),
            ("svm_epochs", t.svm.epochs.to_string()),
            ("svm_standardize", t.svm.standardize.to_string()),
            ("xgb_rounds", t.xgb.n_rounds.to_string()),
            ("xgb_learning_rate", t.xgb.learning_rate.to_string()),
            ("xgb_max_depth", t.xgb.max_depth.to_string()),
            ("xgb_lambda", t.xgb.reg_lambda.to_string()),
            ("xgb_gamma", t.xgb.gamma.to_string()),
            ("xgb_min_child_weight", t.xgb.min_child_weight.to_string()),
            ("xgb_base_score", t.xgb.base_score.to_string()),
            ("cv", self.cv.k.to_string()),
            ("cv_seed", self.cv.seed.to_string()),
            ("paper_mode", self.cv.paper_mode.to_string()),
        ];
        let mut out = String::new();
        for (k, v) in lines {
            if v.is_empty() {
                out.push_str(&format!("# {k} =\n"));
            } else {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_blank_lines_and_overrides() {
        let cfg = ProjectConfig::parse_str(
            "# project\n\napproach = urgency   # second approach\nxgb_rounds=20\nrf_max_features = auto\n",
        )
        .unwrap();
        assert_eq!(cfg.approach, Approach::ResponseUrgency);
        assert_eq!(cfg.train.xgb.n_rounds, 20);
        assert_eq!(cfg.train.rf.max_features, None);
        assert_eq!(cfg.featurize.lda.k, 10);
    }

    #[test]
    fn errors_name_the_line() {
        let err = ProjectConfig::parse_str("seed = 1\nbogus = 2\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(ProjectConfig::parse_str("seed\n").is_err());
        assert!(ProjectConfig::parse_str("seed = x\n").is_err());
    }

    #[test]
    fn render_round_trips() {
        let mut cfg = ProjectConfig::default();
        cfg.apply("topics_alpha", "0.5").unwrap();
        cfg.apply("input", "data/reviews.csv").unwrap();
        cfg.apply("paper_mode", "yes").unwrap();
        assert_eq!(ProjectConfig::parse_str(&cfg.render()).unwrap(), cfg);
        let keys: Vec<String> = cfg
            .render()
            .lines()
            .map(|l| l.trim_start_matches("# ").split(" =").next().unwrap().to_string())
            .collect();
        assert_eq!(keys, ProjectConfig::KEYS);
    }
}
