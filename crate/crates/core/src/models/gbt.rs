//! Gradient-boosted trees on the logistic loss with second-order leaf weights.

use super::tree::{grow, GrowParams, Newton, Tree};
use super::{check_trainable, Dataset, ModelParams, TrainConfig, TrainedModel};
use crate::error::Result;

pub fn sigmoid(m: f64) -> f64 {
    if m >= 0.0 {
        1.0 / (1.0 + (-m).exp())
    } else {
        let e = m.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Weighted mean logistic loss of margins against 0/1 labels.
pub(crate) fn log_loss(margins: &[f64], y: &[u8], w: &[f64]) -> f64 {
    let total: f64 = margins
        .iter()
        .zip(y)
        .zip(w)
        .map(|((&m, &l), &wi)| {
            // log(1 + e^m) - l*m, computed stably
            let softplus = if m > 0.0 { m + (-m).exp().ln_1p() } else { m.exp().ln_1p() };
            wi * (softplus - f64::from(l) * m)
        })
        .sum();
    total / w.iter().sum::<f64>()
}

/// Train and also return the training log-loss before the first round and after each round.
pub fn train_gbt_traced(data: &Dataset, config: &TrainConfig) -> Result<(TrainedModel, Vec<f64>)> {
    check_trainable(data, config)?;
    let data = data.canonical();
    let x = &config.xgb;
    let columns = data.columns();
    let sw = data.weights(config.balance_classes);
    let params = GrowParams {
        max_depth: x.max_depth,
        min_samples_leaf: 1,
        max_features: None,
    };

    let mut margins = vec![logit(x.base_score); data.len()];
    let mut trace = vec![log_loss(&margins, &data.y, &sw)];
    let mut trees = Vec::with_capacity(x.n_rounds);
    let mut g = vec![0.0; data.len()];
    let mut h = vec![0.0; data.len()];
    for _ in 0..x.n_rounds {
        for i in 0..data.len() {
            let p = sigmoid(margins[i]);
            g[i] = sw[i] * (p - f64::from(data.y[i]));
            h[i] = sw[i] * p * (1.0 - p);
        }
        let crit = Newton {
            g: &g,
            h: &h,
            reg_lambda: x.reg_lambda,
            gamma: x.gamma,
            min_child_weight: x.min_child_weight,
            learning_rate: x.learning_rate,
        };
        let tree: Tree = grow(&columns, &data.features, &crit, &params, None);
        for (i, m) in margins.iter_mut().enumerate() {
            *m += tree.eval(&|f| columns[data.features.iter().position(|c| *c == f).unwrap()][i]);
        }
        trace.push(log_loss(&margins, &data.y, &sw));
        trees.push(tree);
    }
    let params = ModelParams::Boosted {
        base_score: x.base_score,
        trees,
    };
    Ok((TrainedModel::assemble(config, &data.features, params), trace))
}

pub fn train_gbt(data: &Dataset, config: &TrainConfig) -> Result<TrainedModel> {
    train_gbt_traced(data, config).map(|(m, _)| m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureId;
    use crate::models::ModelKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fixture(seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ids: Vec<FeatureId> = (1..=3).map(|k| FeatureId::new(k).unwrap()).collect();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..300 {
            let row: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let noisy = row[0] * row[1] + rng.gen_range(-0.2..0.2);
            y.push(u8::from(noisy > 0.0));
            x.push(row);
        }
        Dataset::new(ids, x, y).unwrap()
    }

    #[test]
    fn base_margin_and_zero_rounds() {
        assert_eq!(logit(0.5), 0.0);
        assert_eq!(sigmoid(0.0), 0.5);
        let mut config = TrainConfig::new(ModelKind::Xgb, 0);
        config.xgb.n_rounds = 0;
        let model = train_gbt(&fixture(1), &config).unwrap();
        for row in [[0.3, -0.2, 0.9], [5.0, 5.0, 5.0]] {
            let p = model.predict_row(&row).unwrap();
            assert_eq!(p.score, 0.5);
        }
    }

    #[test]
    fn loss_never_increases() {
        for seed in 0..3 {
            for depth in [1, 6] {
                let mut config = TrainConfig::new(ModelKind::Xgb, seed);
                config.xgb.max_depth = depth;
                let (_, trace) = train_gbt_traced(&fixture(seed), &config).unwrap();
                assert_eq!(trace.len(), 101);
                for w in trace.windows(2) {
                    assert!(w[1] <= w[0] + 1e-12, "seed {seed} depth {depth}: {} -> {}", w[0], w[1]);
                }
                assert!(trace[100] < trace[0]);
            }
        }
    }

    #[test]
    fn learns_an_interaction() {
        let data = fixture(7);
        let model = train_gbt(&data, &TrainConfig::new(ModelKind::Xgb, 7)).unwrap();
        let correct = data
            .x
            .iter()
            .zip(&data.y)
            .filter(|(row, y)| model.predict_row(row).unwrap().label == **y)
            .count();
        assert!(correct as f64 / data.len() as f64 > 0.9);
    }

    #[test]
    fn stable_sigmoid_and_loss() {
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        let loss = log_loss(&[0.0, 0.0], &[0, 1], &[1.0, 1.0]);
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(log_loss(&[1000.0], &[1], &[1.0]).is_finite());
    }
}
