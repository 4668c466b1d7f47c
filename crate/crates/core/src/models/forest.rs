use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::tree::{grow, Gini, GrowParams, Tree};
use super::{check_trainable, Dataset, ModelParams, TrainConfig, TrainedModel};
use crate::error::Result;

/// Tree `t` draws from stream `t` of the master seed.
fn tree_rng(seed: u64, t: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t as u64);
    rng
}

pub fn train_random_forest(data: &Dataset, config: &TrainConfig) -> Result<TrainedModel> {
    check_trainable(data, config)?;
    let data = data.canonical();
    let rf = &config.rf;
    let n = data.len();
    let d = data.features.len();
    let max_features = rf.max_features.unwrap_or_else(|| ((d as f64).sqrt().floor() as usize).max(1));
    let params = GrowParams {
        max_depth: rf.max_depth,
        min_samples_leaf: rf.min_samples_leaf,
        max_features: Some(max_features.min(d.max(1))),
    };
    let weights = data.weights(config.balance_classes);
    let columns = data.columns();

    let trees: Vec<Tree> = (0..rf.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_rng(config.seed, t);
            if !rf.bootstrap {
                let crit = Gini {
                    y: &data.y,
                    w: &weights,
                };
                return grow(&columns, &data.features, &crit, &params, Some(&mut rng));
            }
            let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let cols: Vec<Vec<f64>> = columns.iter().map(|c| sample.iter().map(|&i| c[i]).collect()).collect();
            let y: Vec<u8> = sample.iter().map(|&i| data.y[i]).collect();
            let w: Vec<f64> = sample.iter().map(|&i| weights[i]).collect();
            grow(&cols, &data.features, &Gini { y: &y, w: &w }, &params, Some(&mut rng))
        })
        .collect();
    Ok(TrainedModel::assemble(config, &data.features, ModelParams::Forest { trees }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureId;
    use crate::models::{train_decision_tree, ModelKind};

    fn noisy(seed: u64, n: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ids: Vec<FeatureId> = (1..=4).map(|k| FeatureId::new(k).unwrap()).collect();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let row: Vec<f64> = (0..4).map(|_| rng.gen::<f64>()).collect();
            let label = u8::from(row[0] + 0.5 * row[1] + rng.gen::<f64>() * 0.3 > 0.9);
            x.push(row);
            y.push(label);
        }
        Dataset::new(ids, x, y).unwrap()
    }

    #[test]
    fn single_full_tree_matches_decision_tree() {
        let data = noisy(3, 200);
        let mut config = TrainConfig::new(ModelKind::Rf, 9);
        config.rf.n_trees = 1;
        config.rf.bootstrap = false;
        config.rf.max_features = Some(4);
        config.rf.min_samples_leaf = 3;
        config.rf.max_depth = 7;
        let forest = train_random_forest(&data, &config).unwrap();
        config.kind = ModelKind::Dt;
        config.dt.min_samples_leaf = 3;
        config.dt.max_depth = 7;
        let tree = train_decision_tree(&data, &config).unwrap();
        let ModelParams::Forest { trees } = &forest.params else { panic!() };
        let ModelParams::Tree { tree: single } = &tree.params else { panic!() };
        assert_eq!(&trees[0], single);
        for row in &data.x {
            assert_eq!(forest.predict_row(row).unwrap().label, tree.predict_row(row).unwrap().label);
        }
    }

    #[test]
    fn seeded_forests_repeat() {
        let data = noisy(4, 150);
        let mut config = TrainConfig::new(ModelKind::Rf, 11);
        config.rf.n_trees = 15;
        let a = train_random_forest(&data, &config).unwrap();
        let b = train_random_forest(&data, &config).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        config.seed = 12;
        let c = train_random_forest(&data, &config).unwrap();
        assert_ne!(a.params, c.params);
    }

    #[test]
    fn row_order_does_not_matter() {
        let data = noisy(5, 120);
        let mut shuffled = data.clone();
        shuffled.x.reverse();
        shuffled.y.reverse();
        let mut config = TrainConfig::new(ModelKind::Rf, 2);
        config.rf.n_trees = 10;
        assert_eq!(
            train_random_forest(&data, &config).unwrap(),
            train_random_forest(&shuffled, &config).unwrap()
        );
    }
}
