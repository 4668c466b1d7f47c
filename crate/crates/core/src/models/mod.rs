//! Binary classifiers sharing one train/predict contract: a CART decision
//! tree, a random forest, a linear SVM and gradient-boosted trees.
//!
//! Training rows are put into a canonical order (lexicographic on the
//! feature values, then label) before anything else happens, so a model
//! depends on the multiset of rows and not on their order. The forest's
//! bootstraps and the SVM's shuffles are drawn over that canonical order.

mod forest;
mod gbt;
mod svm;
pub mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureId, FeatureTable, FeatureVector};

pub use forest::train_random_forest;
pub use gbt::{sigmoid, train_gbt, train_gbt_traced};
pub use svm::{train_svm, train_svm_traced, SvmModel};
pub use tree::{gini, gini_gain, leaf_weight, split_gain, Node, Tree};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Dt,
    Rf,
    Svm,
    Xgb,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Dt, ModelKind::Rf, ModelKind::Svm, ModelKind::Xgb];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Dt => "dt",
            ModelKind::Rf => "rf",
            ModelKind::Svm => "svm",
            ModelKind::Xgb => "xgb",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::Dt => "Decision Tree",
            ModelKind::Rf => "Random Forest",
            ModelKind::Svm => "SVM",
            ModelKind::Xgb => "XGBoost",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dt" => Ok(ModelKind::Dt),
            "rf" => Ok(ModelKind::Rf),
            "svm" => Ok(ModelKind::Svm),
            "xgb" | "gbt" => Ok(ModelKind::Xgb),
            _ => Err(Error::Config(format!("unknown model kind {s:?} (expected dt, rf, svm or xgb)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Features drawn per split; `None` means floor(sqrt(d)).
    pub max_features: Option<usize>,
    pub bootstrap: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub l2_lambda: f64,
    pub epochs: usize,
    pub standardize: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtConfig {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub reg_lambda: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
    pub base_score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub kind: ModelKind,
    pub seed: u64,
    /// Weight each class by n / (2 * n_class).
    pub balance_classes: bool,
    pub dt: TreeConfig,
    pub rf: ForestConfig,
    pub svm: SvmConfig,
    pub xgb: GbtConfig,
}

impl TrainConfig {
    pub fn new(kind: ModelKind, seed: u64) -> Self {
        TrainConfig {
            kind,
            seed,
            balance_classes: false,
            dt: TreeConfig {
                max_depth: 12,
                min_samples_leaf: 5,
            },
            rf: ForestConfig {
                n_trees: 100,
                max_depth: 12,
                min_samples_leaf: 1,
                max_features: None,
                bootstrap: true,
            },
            svm: SvmConfig {
                l2_lambda: 1e-4,
                epochs: 10,
                standardize: true,
            },
            xgb: GbtConfig {
                n_rounds: 100,
                learning_rate: 0.1,
                max_depth: 6,
                reg_lambda: 1.0,
                gamma: 0.0,
                min_child_weight: 1.0,
                base_score: 0.5,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.dt.max_depth < 1 || self.dt.min_samples_leaf < 1 {
            return bad("dt max_depth and min_samples_leaf must be >= 1");
        }
        if self.rf.n_trees < 1 || self.rf.max_depth < 1 || self.rf.min_samples_leaf < 1 {
            return bad("rf n_trees, max_depth and min_samples_leaf must be >= 1");
        }
        if self.rf.max_features == Some(0) {
            return bad("rf max_features must be >= 1");
        }
        if !(self.svm.l2_lambda > 0.0 && self.svm.l2_lambda.is_finite()) || self.svm.epochs < 1 {
            return bad("svm l2_lambda must be > 0 and epochs >= 1");
        }
        let x = &self.xgb;
        if x.max_depth < 1 {
            return bad("xgb max_depth must be >= 1");
        }
        if !(x.learning_rate > 0.0 && x.learning_rate <= 1.0) {
            return bad("xgb learning_rate must be in (0, 1]");
        }
        if !(x.reg_lambda >= 0.0) || !(x.gamma >= 0.0) || !(x.min_child_weight >= 0.0) {
            return bad("xgb reg_lambda, gamma and min_child_weight must be >= 0");
        }
        if !(x.base_score > 0.0 && x.base_score < 1.0) {
            return bad("xgb base_score must be in (0, 1)");
        }
        Ok(())
    }
}

/// Training matrix restricted to an ordered feature list.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<FeatureId>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<u8>,
}

impl Dataset {
    pub fn new(features: Vec<FeatureId>, x: Vec<Vec<f64>>, y: Vec<u8>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        for row in &x {
            if row.len() != features.len() {
                return Err(Error::LengthMismatch {
                    left: row.len(),
                    right: features.len(),
                });
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(features[j]));
            }
        }
        if let Some(bad) = y.iter().find(|&&l| l > 1) {
            return Err(Error::malformed("label", format!("{bad} is not 0 or 1")));
        }
        Ok(Dataset { features, x, y })
    }

    pub fn from_table(table: &FeatureTable, features: &[FeatureId]) -> Result<Self> {
        let x = table.rows.iter().map(|r| r.select(features)).collect();
        Dataset::new(features.to_vec(), x, table.labels.clone())
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Rows sorted lexicographically by value then label.
    pub(crate) fn canonical(&self) -> Dataset {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.x[a]
                .iter()
                .zip(&self.x[b])
                .map(|(u, v)| u.total_cmp(v))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(self.y[a].cmp(&self.y[b]))
        });
        Dataset {
            features: self.features.clone(),
            x: order.iter().map(|&i| self.x[i].clone()).collect(),
            y: order.iter().map(|&i| self.y[i]).collect(),
        }
    }

    pub(crate) fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.features.len())
            .map(|j| self.x.iter().map(|row| row[j]).collect())
            .collect()
    }

    pub(crate) fn weights(&self, balance: bool) -> Vec<f64> {
        let n = self.len() as f64;
        let n1 = self.y.iter().filter(|&&l| l == 1).count() as f64;
        let n0 = n - n1;
        self.y
            .iter()
            .map(|&l| {
                let nc = if l == 1 { n1 } else { n0 };
                if balance && nc > 0.0 {
                    n / (2.0 * nc)
                } else {
                    1.0
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelParams {
    /// Leaf values are the fraction of class 1.
    Tree { tree: Tree },
    Forest { trees: Vec<Tree> },
    Svm(SvmModel),
    /// Leaf values are margin contributions, already scaled by the learning rate.
    Boosted { base_score: f64, trees: Vec<Tree> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub kind: ModelKind,
    pub config: TrainConfig,
    /// Features the model was trained on, in column order.
    pub features: Vec<FeatureId>,
    pub seed: u64,
    pub params: ModelParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: u8,
    pub score: f64,
}

fn tree_label(leaf_fraction: f64) -> u8 {
    // an evenly split leaf or vote goes to class 0
    u8::from(leaf_fraction > 0.5)
}

pub fn train(data: &Dataset, config: &TrainConfig) -> Result<TrainedModel> {
    match config.kind {
        ModelKind::Dt => train_decision_tree(data, config),
        ModelKind::Rf => train_random_forest(data, config),
        ModelKind::Svm => train_svm(data, config),
        ModelKind::Xgb => train_gbt(data, config),
    }
}

pub(crate) fn check_trainable(data: &Dataset, config: &TrainConfig) -> Result<()> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    Ok(())
}

pub fn train_decision_tree(data: &Dataset, config: &TrainConfig) -> Result<TrainedModel> {
    check_trainable(data, config)?;
    let data = data.canonical();
    let w = data.weights(config.balance_classes);
    let params = tree::GrowParams {
        max_depth: config.dt.max_depth,
        min_samples_leaf: config.dt.min_samples_leaf,
        max_features: None,
    };
    let tree = tree::grow(
        &data.columns(),
        &data.features,
        &tree::Gini { y: &data.y, w: &w },
        &params,
        None,
    );
    Ok(TrainedModel::assemble(config, &data.features, ModelParams::Tree { tree }))
}

impl TrainedModel {
    pub(crate) fn assemble(config: &TrainConfig, features: &[FeatureId], params: ModelParams) -> Self {
        TrainedModel {
            format_version: MODEL_FORMAT_VERSION,
            kind: config.kind,
            config: *config,
            features: features.to_vec(),
            seed: config.seed,
            params,
        }
    }

    fn score_with(&self, get: &dyn Fn(FeatureId) -> f64) -> Prediction {
        match &self.params {
            ModelParams::Tree { tree } => {
                let score = tree.eval(get);
                Prediction {
                    label: tree_label(score),
                    score,
                }
            }
            ModelParams::Forest { trees } => {
                let votes = trees.iter().filter(|t| tree_label(t.eval(get)) == 1).count();
                let score = votes as f64 / trees.len().max(1) as f64;
                Prediction {
                    label: tree_label(score),
                    score,
                }
            }
            ModelParams::Svm(svm) => {
                let score = svm.margin(&self.features, get);
                Prediction {
                    label: u8::from(score >= 0.0),
                    score,
                }
            }
            ModelParams::Boosted { base_score, trees } => {
                let margin = gbt::logit(*base_score) + trees.iter().map(|t| t.eval(get)).sum::<f64>();
                let score = sigmoid(margin);
                Prediction {
                    label: u8::from(score >= 0.5),
                    score,
                }
            }
        }
    }

    /// Predict from a full catalog vector.
    pub fn predict(&self, x: &FeatureVector) -> Result<Prediction> {
        for &f in &self.features {
            if !x.get(f).is_finite() {
                return Err(Error::NonFinite(f));
            }
        }
        Ok(self.score_with(&|f| x.get(f)))
    }

    /// Predict from a row aligned with [`TrainedModel::features`].
    pub fn predict_row(&self, row: &[f64]) -> Result<Prediction> {
        if row.len() != self.features.len() {
            return Err(Error::LengthMismatch {
                left: row.len(),
                right: self.features.len(),
            });
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(self.features[j]));
        }
        let index: BTreeMap<FeatureId, usize> = self.features.iter().enumerate().map(|(i, f)| (*f, i)).collect();
        Ok(self.score_with(&|f| row[index[&f]]))
    }

    /// Predict from named values; every trained feature must be present.
    pub fn predict_named(&self, values: &BTreeMap<FeatureId, f64>) -> Result<Prediction> {
        let row = self
            .features
            .iter()
            .map(|f| values.get(f).copied().ok_or(Error::MissingFeature(*f)))
            .collect::<Result<Vec<f64>>>()?;
        self.predict_row(&row)
    }

    fn trees(&self) -> Vec<&Tree> {
        match &self.params {
            ModelParams::Tree { tree } => vec![tree],
            ModelParams::Forest { trees } | ModelParams::Boosted { trees, .. } => trees.iter().collect(),
            ModelParams::Svm(_) => Vec::new(),
        }
    }

    /// Structural checks run after loading.
    pub fn validate(&self) -> Result<()> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                what: "model",
                found: self.format_version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        for tree in self.trees() {
            if !tree.is_well_formed() {
                return Err(Error::malformed("model", "tree node list is inconsistent"));
            }
            if let Some(f) = tree.split_features().find(|f| !self.features.contains(f)) {
                return Err(Error::MissingFeature(f));
            }
        }
        if let ModelParams::Svm(svm) = &self.params {
            if svm.weights.len() != self.features.len()
                || svm.mean.len() != self.features.len()
                || svm.scale.len() != self.features.len()
            {
                return Err(Error::malformed("model", "svm parameter lengths differ from feature list"));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = value.get("format_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if found != MODEL_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                what: "model",
                found,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        let model: TrainedModel = serde_json::from_value(value)?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
