//! Pearson-correlation feature selection.
//!
//! Features whose |r| with the label falls below `min_abs_r` are dropped. The
//! survivors are linked whenever their pairwise |r| exceeds `redundancy_r`;
//! each connected component of two or more features keeps only its member
//! with the largest |r| against the label (ties go to the lower F-number).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureId, FeatureTable};

pub const DEFAULT_MIN_ABS_R: f64 = 0.1;
pub const DEFAULT_REDUNDANCY_R: f64 = 0.9;
/// |r| with the label above which a feature is reported as likely leakage.
pub const LEAKAGE_R: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub r: f64,
    /// One of the series had zero variance; `r` is reported as 0.
    pub constant_series: bool,
}

/// Product-moment correlation computed with a single-pass (Welford) update.
pub fn pearson_checked(x: &[f64], y: &[f64]) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::TooShort(x.len()));
    }
    let (mut mean_x, mut mean_y) = (0.0, 0.0);
    let (mut m2x, mut m2y, mut cxy) = (0.0, 0.0, 0.0);
    for (i, (&a, &b)) in x.iter().zip(y).enumerate() {
        let n = (i + 1) as f64;
        let dx = a - mean_x;
        mean_x += dx / n;
        let dy = b - mean_y;
        mean_y += dy / n;
        m2x += dx * (a - mean_x);
        m2y += dy * (b - mean_y);
        cxy += dx * (b - mean_y);
    }
    if m2x <= 0.0 || m2y <= 0.0 {
        return Ok(Correlation {
            r: 0.0,
            constant_series: true,
        });
    }
    Ok(Correlation {
        r: (cxy / (m2x.sqrt() * m2y.sqrt())).clamp(-1.0, 1.0),
        constant_series: false,
    })
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    pearson_checked(x, y).map(|c| c.r)
}

fn label_series(labels: &[u8]) -> Vec<f64> {
    labels.iter().map(|&l| f64::from(l)).collect()
}

/// Correlation of every masked feature with the 0/1 label.
pub fn correlate_with_output(table: &FeatureTable, mask: &[FeatureId]) -> Result<BTreeMap<FeatureId, f64>> {
    let y = label_series(&table.labels);
    mask.iter()
        .map(|&f| pearson(&table.column(f), &y).map(|r| (f, r)))
        .collect()
}

/// Connected components (size >= 2) of the graph linking features with |r| > `redundancy_r`.
pub fn redundancy_groups(table: &FeatureTable, features: &[FeatureId], redundancy_r: f64) -> Result<Vec<Vec<FeatureId>>> {
    let columns: Vec<Vec<f64>> = features.iter().map(|&f| table.column(f)).collect();
    let pairs: Vec<(usize, usize)> = (0..features.len())
        .flat_map(|i| (i + 1..features.len()).map(move |j| (i, j)))
        .collect();
    let linked: Vec<bool> = pairs
        .par_iter()
        .map(|&(i, j)| pearson(&columns[i], &columns[j]).map(|r| r.abs() > redundancy_r))
        .collect::<Result<_>>()?;

    let mut parent: Vec<usize> = (0..features.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for (&(i, j), _) in pairs.iter().zip(&linked).filter(|(_, l)| **l) {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut components: BTreeMap<usize, Vec<FeatureId>> = BTreeMap::new();
    for i in 0..features.len() {
        let root = find(&mut parent, i);
        components.entry(root).or_default().push(features[i]);
    }
    let mut groups: Vec<Vec<FeatureId>> = components
        .into_values()
        .filter(|g| g.len() >= 2)
        .map(|mut g| {
            g.sort();
            g
        })
        .collect();
    groups.sort();
    Ok(groups)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub min_abs_r: f64,
    pub redundancy_r: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            min_abs_r: DEFAULT_MIN_ABS_R,
            redundancy_r: DEFAULT_REDUNDANCY_R,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub correlations: BTreeMap<FeatureId, f64>,
    /// Features with zero variance on this data.
    pub constant: Vec<FeatureId>,
    pub groups: Vec<Vec<FeatureId>>,
    pub kept: Vec<FeatureId>,
    pub min_abs_r: f64,
    pub redundancy_r: f64,
    /// Features whose |r| with the label exceeds [`LEAKAGE_R`].
    pub leakage: Vec<FeatureId>,
}

fn better(a: (FeatureId, f64), b: (FeatureId, f64)) -> bool {
    a.1.abs() > b.1.abs() || (a.1.abs() == b.1.abs() && a.0 < b.0)
}

pub fn select_features(table: &FeatureTable, mask: &[FeatureId], config: &SelectionConfig) -> Result<SelectionReport> {
    let y = label_series(&table.labels);
    let mut correlations = BTreeMap::new();
    let mut constant = Vec::new();
    for &f in mask {
        let c = pearson_checked(&table.column(f), &y)?;
        if c.constant_series {
            constant.push(f);
        }
        correlations.insert(f, c.r);
    }
    let relevant: Vec<FeatureId> = correlations
        .iter()
        .filter(|(_, r)| r.abs() >= config.min_abs_r)
        .map(|(f, _)| *f)
        .collect();
    let groups = redundancy_groups(table, &relevant, config.redundancy_r)?;

    let mut kept: Vec<FeatureId> = relevant
        .iter()
        .copied()
        .filter(|f| !groups.iter().any(|g| g.contains(f)))
        .collect();
    for group in &groups {
        let best = group
            .iter()
            .map(|f| (*f, correlations[f]))
            .reduce(|acc, cand| if better(cand, acc) { cand } else { acc })
            .expect("groups are non-empty");
        kept.push(best.0);
    }
    kept.sort();
    if kept.is_empty() {
        return Err(Error::EmptySelection {
            min_abs_r: config.min_abs_r,
            redundancy_r: config.redundancy_r,
        });
    }
    let leakage = correlations
        .iter()
        .filter(|(_, r)| r.abs() > LEAKAGE_R)
        .map(|(f, _)| *f)
        .collect();
    Ok(SelectionReport {
        correlations,
        constant,
        groups,
        kept,
        min_abs_r: config.min_abs_r,
        redundancy_r: config.redundancy_r,
        leakage,
    })
}

impl SelectionReport {
    fn group_of(&self, f: FeatureId) -> Option<usize> {
        self.groups.iter().position(|g| g.contains(&f)).map(|i| i + 1)
    }

    /// CSV table `feature,name,r_output,group,kept`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["feature", "name", "r_output", "group", "kept"])?;
        for (f, r) in &self.correlations {
            wtr.write_record([
                f.to_string(),
                f.descriptor().name.to_string(),
                format!("{r:.6}"),
                self.group_of(*f).map(|g| g.to_string()).unwrap_or_default(),
                self.kept.contains(f).to_string(),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io("<selection.csv>", e))?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "min |r| = {}, redundancy |r| > {}",
            self.min_abs_r, self.redundancy_r
        );
        let _ = writeln!(out, "{:<5} {:<30} {:>9}  {:<5} kept", "id", "feature", "r_output", "group");
        for (f, r) in &self.correlations {
            let group = self.group_of(*f).map(|g| g.to_string()).unwrap_or_else(|| "-".into());
            let kept = if self.kept.contains(f) { "yes" } else { "" };
            let _ = writeln!(out, "{:<5} {:<30} {:>9.4}  {:<5} {}", f.to_string(), f.descriptor().name, r, group, kept);
        }
        for f in &self.leakage {
            let _ = writeln!(
                out,
                "warning: {f} ({}) has |r| = {:.3} with the label, possible leakage",
                f.descriptor().name,
                self.correlations[f].abs()
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::RecordId;
    use crate::features::FeatureVector;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f(n: u8) -> FeatureId {
        FeatureId::new(n).unwrap()
    }

    fn table(columns: &[(u8, Vec<f64>)], labels: Vec<u8>) -> FeatureTable {
        let rows = (0..labels.len())
            .map(|i| {
                let mut v = FeatureVector::zeros(RecordId(i as u64));
                for (n, col) in columns {
                    v.set(f(*n), col[i]);
                }
                v
            })
            .collect();
        FeatureTable { rows, labels }
    }

    #[test]
    fn pearson_hand_cases() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0], &[6.0, 4.0, 2.0]).unwrap() + 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn pearson_errors_and_constant_flag() {
        assert!(matches!(pearson(&[1.0], &[1.0]), Err(Error::TooShort(1))));
        assert!(matches!(
            pearson(&[1.0, 2.0], &[1.0]),
            Err(Error::LengthMismatch { left: 2, right: 1 })
        ));
        let c = pearson_checked(&[3.0, 3.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(
            c,
            Correlation {
                r: 0.0,
                constant_series: true
            }
        );
    }

    #[test]
    fn output_correlation_of_label_copies() {
        let labels = vec![0, 1, 1, 0, 1, 0];
        let same: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
        let flipped: Vec<f64> = same.iter().map(|v| 1.0 - v).collect();
        let t = table(&[(3, same), (4, flipped)], labels);
        let r = correlate_with_output(&t, &[f(3), f(4)]).unwrap();
        assert!((r[&f(3)] - 1.0).abs() < 1e-12);
        assert!((r[&f(4)] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_feature_is_uncorrelated() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 10_000;
        let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let noise: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let t = table(&[(9, noise)], labels);
        let r = correlate_with_output(&t, &[f(9)]).unwrap();
        assert!(r[&f(9)].abs() < 0.05);
    }

    #[test]
    fn collinear_triple_forms_one_group() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let base: Vec<f64> = (0..200).map(|_| rng.gen::<f64>() * 10.0).collect();
        let f5: Vec<f64> = base.iter().map(|v| v + rng.gen::<f64>() * 1e-3).collect();
        let f8: Vec<f64> = base.iter().map(|v| 0.99 * v).collect();
        let other: Vec<f64> = (0..200).map(|_| rng.gen::<f64>()).collect();
        let t = table(&[(3, base), (5, f5), (8, f8), (9, other)], vec![0; 200]);
        let groups = redundancy_groups(&t, &[f(3), f(5), f(8), f(9)], 0.9).unwrap();
        assert_eq!(groups, vec![vec![f(3), f(5), f(8)]]);
    }

    #[test]
    fn chains_are_single_components() {
        // a~b and b~c linked, a~c not
        let a: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let c: Vec<f64> = (0..100).map(|i| (i as f64 * 0.91).cos()).collect();
        let b: Vec<f64> = a.iter().zip(&c).map(|(x, y)| x + y).collect();
        let t = table(&[(10, a.clone()), (11, b.clone()), (12, c.clone())], vec![0; 100]);
        let ab = pearson(&a, &b).unwrap();
        let bc = pearson(&b, &c).unwrap();
        let ac = pearson(&a, &c).unwrap();
        if ab.abs() > 0.6 && bc.abs() > 0.6 && ac.abs() < 0.6 {
            let groups = redundancy_groups(&t, &[f(10), f(11), f(12)], 0.6).unwrap();
            assert_eq!(groups, vec![vec![f(10), f(11), f(12)]]);
        } else {
            panic!("fixture does not chain: ab={ab} bc={bc} ac={ac}");
        }
    }

    #[test]
    fn independent_features_have_no_groups() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cols: Vec<(u8, Vec<f64>)> = (1..=4).map(|n| (n, (0..300).map(|_| rng.gen::<f64>()).collect())).collect();
        let t = table(&cols, vec![0; 300]);
        let ids: Vec<_> = (1..=4).map(f).collect();
        assert!(redundancy_groups(&t, &ids, 0.9).unwrap().is_empty());
    }

    /// Build columns whose correlations with a 0/1 label are (approximately) the
    /// requested values: feature = label + noise with a chosen noise scale.
    fn group_keeps_strongest_member() -> (FeatureTable, Vec<FeatureId>) {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 2000;
        let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let latent: Vec<f64> = labels.iter().map(|&l| f64::from(l) * 0.45 + rng.gen::<f64>() * 2.0).collect();
        let f3 = latent.clone();
        let f5: Vec<f64> = latent.iter().map(|v| v + (rng.gen::<f64>() - 0.5) * 0.3).collect();
        let f8: Vec<f64> = latent.iter().map(|v| v * 0.9 + (rng.gen::<f64>() - 0.5) * 0.45).collect();
        let weak: Vec<f64> = labels.iter().map(|&l| f64::from(l) * 0.02 + rng.gen::<f64>()).collect();
        (table(&[(3, f3), (5, f5), (8, f8), (9, weak)], labels), vec![f(3), f(5), f(8), f(9)])
    }

    #[test]
    fn collinear_group_keeps_highest_output_correlation() {
        let (t, mask) = group_keeps_strongest_member();
        let report = select_features(&t, &mask, &SelectionConfig::default()).unwrap();
        let r = &report.correlations;
        assert!(r[&f(3)].abs() > r[&f(5)].abs() && r[&f(3)].abs() > r[&f(8)].abs());
        assert_eq!(report.groups, vec![vec![f(3), f(5), f(8)]]);
        assert!(r[&f(9)].abs() < 0.1);
        assert_eq!(report.kept, vec![f(3)]);
    }

    #[test]
    fn empty_selection_and_leakage() {
        let labels = vec![0, 1, 0, 1, 0, 1];
        let noise = vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let t = table(&[(4, noise)], labels.clone());
        assert!(matches!(
            select_features(&t, &[f(4)], &SelectionConfig::default()),
            Err(Error::EmptySelection { .. })
        ));
        let copy: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
        let t = table(&[(34, copy)], labels);
        let report = select_features(&t, &[f(34)], &SelectionConfig::default()).unwrap();
        assert_eq!(report.leakage, vec![f(34)]);
        assert!(report.to_text().contains("possible leakage"));
    }

    #[test]
    fn report_table() {
        let (t, mask) = group_keeps_strongest_member();
        let report = select_features(&t, &mask, &SelectionConfig::default()).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "feature,name,r_output,group,kept");
        assert!(lines[1].starts_with("F3,Review Length,"));
        assert!(lines[1].ends_with(",1,true"));
        assert!(lines[4].ends_with(",,false"));
    }

    fn random_table(seed: u64, n: usize) -> (FeatureTable, Vec<FeatureId>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let base: Vec<f64> = labels.iter().map(|&l| f64::from(l) + rng.gen::<f64>()).collect();
        let cols: Vec<(u8, Vec<f64>)> = (1..=6u8)
            .map(|k| {
                let mix = rng.gen::<f64>();
                let col = base
                    .iter()
                    .map(|b| mix * b + (1.0 - mix) * rng.gen::<f64>() * 3.0)
                    .collect();
                (k, col)
            })
            .collect();
        (table(&cols, labels), (1..=6).map(f).collect())
    }

    proptest! {
        #[test]
        fn pearson_is_symmetric_and_affine_exact(
            xs in proptest::collection::vec(-100.0f64..100.0, 3..40),
            ys_seed in 0u64..1000,
            a in prop_oneof![0.01f64..50.0, -50.0f64..-0.01],
            b in -100.0f64..100.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(ys_seed);
            let ys: Vec<f64> = xs.iter().map(|_| rng.gen::<f64>()).collect();
            let c1 = pearson_checked(&xs, &ys).unwrap();
            let c2 = pearson_checked(&ys, &xs).unwrap();
            prop_assert!((c1.r - c2.r).abs() <= 1e-12);
            let spread = xs.iter().cloned().fold(f64::MIN, f64::max) - xs.iter().cloned().fold(f64::MAX, f64::min);
            prop_assume!(spread > 1e-3);
            let line: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            let r = pearson(&xs, &line).unwrap();
            prop_assert!((r - a.signum()).abs() <= 1e-12, "r = {}", r);
        }

        #[test]
        fn selection_is_idempotent_and_scale_free(seed in 0u64..500, scale in 0.001f64..1000.0) {
            let (t, mask) = random_table(seed, 300);
            let Ok(report) = select_features(&t, &mask, &SelectionConfig::default()) else {
                return Ok(());
            };
            let again = select_features(&t, &report.kept, &SelectionConfig::default()).unwrap();
            prop_assert_eq!(&again.kept, &report.kept);

            let mut scaled = t.clone();
            for row in &mut scaled.rows {
                let v = row.get(FeatureId::new(2).unwrap());
                row.set(FeatureId::new(2).unwrap(), v * scale);
            }
            let scaled_report = select_features(&scaled, &mask, &SelectionConfig::default()).unwrap();
            prop_assert_eq!(&scaled_report.kept, &report.kept);
            for (f, r) in &report.correlations {
                prop_assert!((scaled_report.correlations[f] - r).abs() < 1e-12);
            }
        }
    }
}
