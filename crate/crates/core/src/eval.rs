//! Fold splitting, confusion-matrix metrics and evaluation reports.
//!
//! Headline precision, recall and F1 are support-weighted averages over the
//! two classes; per-class values are kept alongside. With that convention
//! accuracy always equals weighted recall.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Approach, RecordId};
use crate::error::{Error, Result};
use crate::features::{FeatureId, FeatureTable};
use crate::models::{train, Dataset, ModelKind, TrainConfig};
use crate::select::{select_features, SelectionConfig};

/// Per-app reports below this many evaluated records are flagged.
pub const LOW_SUPPORT: usize = 10;

/// Shuffle `0..n` with `seed`, then cut it into `k` contiguous folds. The
/// first `n % k` folds hold one extra index.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Config(format!("cross-validation needs k >= 2, got {k}")));
    }
    if n < k {
        return Err(Error::TooFewExamples { n, k });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let size = base + usize::from(i < extra);
        folds.push(order[start..start + size].to_vec());
        start += size;
    }
    Ok(folds)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn from_predictions(predicted: &[u8], actual: &[u8]) -> Result<Self> {
        if predicted.len() != actual.len() {
            return Err(Error::LengthMismatch {
                left: predicted.len(),
                right: actual.len(),
            });
        }
        let mut cm = ConfusionMatrix::default();
        for (&p, &a) in predicted.iter().zip(actual) {
            match (p == 1, a == 1) {
                (true, true) => cm.tp += 1,
                (true, false) => cm.fp += 1,
                (false, true) => cm.fn_ += 1,
                (false, false) => cm.tn += 1,
            }
        }
        Ok(cm)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// The same matrix with the class roles exchanged.
    pub fn swapped(&self) -> Self {
        ConfusionMatrix {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
        }
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub class0: ClassMetrics,
    pub class1: ClassMetrics,
    /// Some ratio had a zero denominator and was reported as 0.
    pub zero_division: bool,
}

fn ratio(num: u64, den: u64, flag: &mut bool) -> f64 {
    if den == 0 {
        *flag = true;
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn class_metrics(tp: u64, fp: u64, fn_: u64, flag: &mut bool) -> ClassMetrics {
    let precision = ratio(tp, tp + fp, flag);
    let recall = ratio(tp, tp + fn_, flag);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        *flag = true;
        0.0
    };
    ClassMetrics {
        precision,
        recall,
        f1,
        support: tp + fn_,
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    let n = cm.total();
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let mut flag = false;
    let class1 = class_metrics(cm.tp, cm.fp, cm.fn_, &mut flag);
    let class0 = class_metrics(cm.tn, cm.fn_, cm.fp, &mut flag);
    let (w0, w1) = (class0.support as f64 / n as f64, class1.support as f64 / n as f64);
    Ok(Metrics {
        accuracy: (cm.tp + cm.tn) as f64 / n as f64,
        precision: w0 * class0.precision + w1 * class1.precision,
        recall: w0 * class0.recall + w1 * class1.recall,
        f1: w0 * class0.f1 + w1 * class1.f1,
        class0,
        class1,
        zero_division: flag,
    })
}

fn mean_class(items: &[ClassMetrics]) -> ClassMetrics {
    let n = items.len() as f64;
    ClassMetrics {
        precision: items.iter().map(|c| c.precision).sum::<f64>() / n,
        recall: items.iter().map(|c| c.recall).sum::<f64>() / n,
        f1: items.iter().map(|c| c.f1).sum::<f64>() / n,
        support: items.iter().map(|c| c.support).sum(),
    }
}

/// Arithmetic mean of per-fold metrics (supports are summed).
pub fn mean_metrics(folds: &[Metrics]) -> Metrics {
    if folds.is_empty() {
        return Metrics::default();
    }
    let n = folds.len() as f64;
    let avg = |f: fn(&Metrics) -> f64| folds.iter().map(f).sum::<f64>() / n;
    Metrics {
        accuracy: avg(|m| m.accuracy),
        precision: avg(|m| m.precision),
        recall: avg(|m| m.recall),
        f1: avg(|m| m.f1),
        class0: mean_class(&folds.iter().map(|m| m.class0).collect::<Vec<_>>()),
        class1: mean_class(&folds.iter().map(|m| m.class1).collect::<Vec<_>>()),
        zero_division: folds.iter().any(|m| m.zero_division),
    }
}

/// One held-out prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeldOut {
    pub record_id: RecordId,
    pub fold: usize,
    pub label: u8,
    pub predicted: u8,
    pub score: f64,
}

/// Train and test tables for one fold, already featurized.
#[derive(Debug, Clone)]
pub struct FoldTables {
    pub train: FeatureTable,
    pub test: FeatureTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: ModelKind,
    pub approach: Approach,
    pub seed: u64,
    pub folds: Vec<ConfusionMatrix>,
    pub fold_metrics: Vec<Metrics>,
    pub mean: Metrics,
    /// Features kept by selection in each fold.
    pub fold_kept: Vec<Vec<FeatureId>>,
    /// Features kept in every fold.
    pub kept: Vec<FeatureId>,
    /// Leakage warnings raised by selection, deduplicated.
    pub leakage: Vec<FeatureId>,
    pub held_out: Vec<HeldOut>,
}

struct FoldOutcome {
    cm: ConfusionMatrix,
    kept: Vec<FeatureId>,
    leakage: Vec<FeatureId>,
    held_out: Vec<HeldOut>,
}

fn run_fold(
    index: usize,
    fold: &FoldTables,
    mask: &[FeatureId],
    selection: &SelectionConfig,
    fixed: Option<&[FeatureId]>,
    config: &TrainConfig,
) -> Result<FoldOutcome> {
    let (kept, leakage) = match fixed {
        Some(kept) => (kept.to_vec(), Vec::new()),
        None => {
            let report = select_features(&fold.train, mask, selection)?;
            (report.kept, report.leakage)
        }
    };
    let data = Dataset::from_table(&fold.train, &kept)?;
    let model = train(&data, config)?;
    let mut predicted = Vec::with_capacity(fold.test.len());
    let mut held_out = Vec::with_capacity(fold.test.len());
    for (row, &label) in fold.test.rows.iter().zip(&fold.test.labels) {
        let p = model.predict(row)?;
        predicted.push(p.label);
        held_out.push(HeldOut {
            record_id: row.record_id,
            fold: index,
            label,
            predicted: p.label,
            score: p.score,
        });
    }
    Ok(FoldOutcome {
        cm: ConfusionMatrix::from_predictions(&predicted, &fold.test.labels)?,
        kept,
        leakage,
        held_out,
    })
}

/// Cross-validate one model over prepared folds. Selection runs on each
/// training split over `mask`, unless `fixed_selection` supplies the kept set.
pub fn cross_validate(
    folds: &[FoldTables],
    approach: Approach,
    mask: &[FeatureId],
    selection: &SelectionConfig,
    fixed_selection: Option<&[FeatureId]>,
    config: &TrainConfig,
) -> Result<EvalReport> {
    let outcomes: Vec<FoldOutcome> = folds
        .par_iter()
        .enumerate()
        .map(|(i, fold)| run_fold(i, fold, mask, selection, fixed_selection, config))
        .collect::<Result<_>>()?;
    let fold_metrics = outcomes.iter().map(|o| metrics(&o.cm)).collect::<Result<Vec<_>>>()?;
    let fold_kept: Vec<Vec<FeatureId>> = outcomes.iter().map(|o| o.kept.clone()).collect();
    let kept = fold_kept
        .first()
        .map(|first| {
            first
                .iter()
                .copied()
                .filter(|f| fold_kept.iter().all(|k| k.contains(f)))
                .collect()
        })
        .unwrap_or_default();
    let mut leakage: Vec<FeatureId> = outcomes.iter().flat_map(|o| o.leakage.iter().copied()).collect();
    leakage.sort();
    leakage.dedup();
    let mut held_out: Vec<HeldOut> = outcomes.iter().flat_map(|o| o.held_out.iter().copied()).collect();
    held_out.sort_by_key(|h| h.record_id);
    Ok(EvalReport {
        model: config.kind,
        approach,
        seed: config.seed,
        folds: outcomes.iter().map(|o| o.cm).collect(),
        mean: mean_metrics(&fold_metrics),
        fold_metrics,
        fold_kept,
        kept,
        leakage,
        held_out,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppReport {
    pub app_name: String,
    pub n: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
    pub low_support: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ByAppReport {
    pub apps: Vec<AppReport>,
    /// Unweighted mean of the per-app weighted F1.
    pub mean_f1: f64,
}

/// Group `(app, label, predicted)` triples by app and score each group.
pub fn evaluate_by_app<'a>(items: impl IntoIterator<Item = (&'a str, u8, u8)>) -> Result<ByAppReport> {
    let mut groups: BTreeMap<&str, (Vec<u8>, Vec<u8>)> = BTreeMap::new();
    for (app, label, predicted) in items {
        let g = groups.entry(app).or_default();
        g.0.push(label);
        g.1.push(predicted);
    }
    let apps = groups
        .into_iter()
        .map(|(app, (labels, predicted))| {
            let confusion = ConfusionMatrix::from_predictions(&predicted, &labels)?;
            Ok(AppReport {
                app_name: app.to_string(),
                n: labels.len(),
                confusion,
                metrics: metrics(&confusion)?,
                low_support: labels.len() < LOW_SUPPORT,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mean_f1 = if apps.is_empty() {
        0.0
    } else {
        apps.iter().map(|a| a.metrics.f1).sum::<f64>() / apps.len() as f64
    };
    Ok(ByAppReport { apps, mean_f1 })
}

fn f4(v: f64) -> String {
    format!("{v:.4}")
}

impl EvalReport {
    /// One row per fold followed by a `mean` row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record([
            "model", "approach", "fold", "tp", "fp", "fn", "tn", "accuracy", "precision", "recall", "f1",
            "precision_1", "recall_1", "f1_1", "precision_0", "recall_0", "f1_0",
        ])?;
        let row = |fold: String, cm: Option<&ConfusionMatrix>, m: &Metrics| {
            let counts = cm.map_or([String::new(), String::new(), String::new(), String::new()], |c| {
                [c.tp.to_string(), c.fp.to_string(), c.fn_.to_string(), c.tn.to_string()]
            });
            let mut r = vec![self.model.name().to_string(), self.approach.cli_name().to_string(), fold];
            r.extend(counts);
            r.extend(
                [
                    m.accuracy,
                    m.precision,
                    m.recall,
                    m.f1,
                    m.class1.precision,
                    m.class1.recall,
                    m.class1.f1,
                    m.class0.precision,
                    m.class0.recall,
                    m.class0.f1,
                ]
                .map(f4),
            );
            r
        };
        for (i, (cm, m)) in self.folds.iter().zip(&self.fold_metrics).enumerate() {
            wtr.write_record(row((i + 1).to_string(), Some(cm), m))?;
        }
        wtr.write_record(row("mean".into(), None, &self.mean))?;
        wtr.flush().map_err(|e| Error::io("<evaluation.csv>", e))?;
        Ok(())
    }
}

/// Summary CSV, one row per model: `model,accuracy,f1,recall,precision`.
pub fn summary_csv<W: Write>(reports: &[EvalReport], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["model", "approach", "accuracy", "f1", "recall", "precision"])?;
    for r in reports {
        wtr.write_record([
            r.model.name().to_string(),
            r.approach.cli_name().to_string(),
            f4(r.mean.accuracy),
            f4(r.mean.f1),
            f4(r.mean.recall),
            f4(r.mean.precision),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<summary.csv>", e))?;
    Ok(())
}

/// Markdown table with models as rows and Accuracy, F1, Recall, Precision as columns.
pub fn markdown_table(reports: &[EvalReport]) -> String {
    let mut out = String::from("| Model | Accuracy | F1-Score | Recall | Precision |\n|---|---|---|---|---|\n");
    for r in reports {
        let _ = writeln!(
            out,
            "| {} | {:.2} | {:.2} | {:.2} | {:.2} |",
            r.model.display_name(),
            r.mean.accuracy,
            r.mean.f1,
            r.mean.recall,
            r.mean.precision
        );
    }
    out
}

impl ByAppReport {
    pub fn markdown(&self) -> String {
        let mut out = String::from("| App | n | Accuracy | F1-Score | Recall | Precision | Note |\n|---|---|---|---|---|---|---|\n");
        for a in &self.apps {
            let _ = writeln!(
                out,
                "| {} | {} | {:.2} | {:.2} | {:.2} | {:.2} | {} |",
                a.app_name,
                a.n,
                a.metrics.accuracy,
                a.metrics.f1,
                a.metrics.recall,
                a.metrics.precision,
                if a.low_support { "low support" } else { "" }
            );
        }
        let _ = writeln!(out, "\nMean F1 over {} apps: {:.2}", self.apps.len(), self.mean_f1);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cm(tp: u64, fp: u64, fn_: u64, tn: u64) -> ConfusionMatrix {
        ConfusionMatrix { tp, fp, fn_, tn }
    }

    #[test]
    fn fold_sizes() {
        let folds = kfold_split(10, 5, 1).unwrap();
        assert!(folds.iter().all(|f| f.len() == 2));
        let sizes: Vec<usize> = kfold_split(11, 5, 1).unwrap().iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![3, 2, 2, 2, 2]);
        assert!(matches!(kfold_split(3, 5, 0), Err(Error::TooFewExamples { n: 3, k: 5 })));
        assert!(kfold_split(10, 1, 0).is_err());
    }

    #[test]
    fn hand_metrics() {
        let m = metrics(&cm(2, 1, 1, 6)).unwrap();
        assert!((m.class1.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.class1.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.class1.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.accuracy - 0.8).abs() < 1e-12);
        assert!(!m.zero_division);
    }

    #[test]
    fn perfect_and_degenerate_predictors() {
        let m = metrics(&cm(3, 0, 0, 97)).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (1.0, 1.0, 1.0, 1.0));
        let m = metrics(&cm(0, 0, 4, 6)).unwrap();
        assert_eq!(m.class1.precision, 0.0);
        assert!(m.zero_division);
        assert!(matches!(metrics(&cm(0, 0, 0, 0)), Err(Error::EmptyMatrix)));
    }

    #[test]
    fn per_app_grouping() {
        let items = vec![("a", 1, 1), ("a", 0, 0), ("b", 1, 1), ("b", 0, 0), ("c", 1, 0)];
        let report = evaluate_by_app(items).unwrap();
        assert_eq!(report.apps.len(), 3);
        assert_eq!(report.apps[0].metrics, report.apps[1].metrics);
        assert!(report.apps.iter().all(|a| a.low_support));
        assert!((report.mean_f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn mean_of_folds_is_arithmetic() {
        let a = metrics(&cm(4, 0, 1, 5)).unwrap();
        let b = metrics(&cm(2, 2, 2, 4)).unwrap();
        let m = mean_metrics(&[a, b]);
        assert!((m.f1 - (a.f1 + b.f1) / 2.0).abs() < 1e-15);
        assert_eq!(m.class1.support, 5 + 4);
    }

    fn matrices() -> impl Strategy<Value = ConfusionMatrix> {
        (0u64..50, 0u64..50, 0u64..50, 0u64..50)
            .prop_filter("non-empty", |(a, b, c, d)| a + b + c + d > 0)
            .prop_map(|(tp, fp, fn_, tn)| cm(tp, fp, fn_, tn))
    }

    proptest! {
        #[test]
        fn accuracy_is_weighted_recall(c in matrices()) {
            let m = metrics(&c).unwrap();
            prop_assert!((m.accuracy - m.recall).abs() < 1e-12);
            for v in [m.accuracy, m.precision, m.recall, m.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }

        #[test]
        fn swapping_classes_swaps_roles(c in matrices()) {
            let m = metrics(&c).unwrap();
            let s = metrics(&c.swapped()).unwrap();
            prop_assert_eq!(m.class1, s.class0);
            prop_assert_eq!(m.class0, s.class1);
            prop_assert!((m.f1 - s.f1).abs() < 1e-12);
            if c.tn + c.fn_ > 0 {
                prop_assert!((s.class1.precision - c.tn as f64 / (c.tn + c.fn_) as f64).abs() < 1e-12);
            }
        }

        #[test]
        fn folds_partition(n in 5usize..200, k in 2usize..6, seed in 0u64..100) {
            let folds = kfold_split(n, k, seed).unwrap();
            let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            let max = folds.iter().map(Vec::len).max().unwrap();
            let min = folds.iter().map(Vec::len).min().unwrap();
            prop_assert!(max - min <= 1);
        }
    }
}
