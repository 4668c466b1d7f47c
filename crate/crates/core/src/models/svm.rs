//! Linear SVM trained with Pegasos-style stochastic subgradient steps.
//!
//! The bias is learned as the weight of a constant 1 input, so it is
//! regularized together with the other weights.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_trainable, Dataset, ModelParams, TrainConfig, TrainedModel};
use crate::error::Result;
use crate::features::FeatureId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub mean: Vec<f64>,
    /// Multiplier applied after centering; 0 for a constant training column.
    pub scale: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl SvmModel {
    pub fn margin(&self, features: &[FeatureId], get: &dyn Fn(FeatureId) -> f64) -> f64 {
        let mut m = self.bias;
        for (j, f) in features.iter().enumerate() {
            m += self.weights[j] * (get(*f) - self.mean[j]) * self.scale[j];
        }
        m
    }
}

fn standardization(data: &Dataset, standardize: bool) -> (Vec<f64>, Vec<f64>) {
    let d = data.features.len();
    if !standardize {
        return (vec![0.0; d], vec![1.0; d]);
    }
    let n = data.len() as f64;
    let mut mean = vec![0.0; d];
    let mut scale = vec![0.0; d];
    for j in 0..d {
        let mu = data.x.iter().map(|r| r[j]).sum::<f64>() / n;
        let var = data.x.iter().map(|r| (r[j] - mu).powi(2)).sum::<f64>() / n;
        mean[j] = mu;
        scale[j] = if var > 0.0 { 1.0 / var.sqrt() } else { 0.0 };
    }
    (mean, scale)
}

fn objective(z: &[Vec<f64>], y: &[f64], sw: &[f64], w: &[f64], lambda: f64) -> f64 {
    let reg = 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>();
    let hinge: f64 = z
        .iter()
        .zip(y)
        .zip(sw)
        .map(|((row, &yi), &s)| s * (1.0 - yi * dot(w, row)).max(0.0))
        .sum();
    reg + hinge / z.len() as f64
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// Train and also return the objective value after each epoch.
pub fn train_svm_traced(data: &Dataset, config: &TrainConfig) -> Result<(TrainedModel, Vec<f64>)> {
    check_trainable(data, config)?;
    let data = data.canonical();
    let lambda = config.svm.l2_lambda;
    let (mean, scale) = standardization(&data, config.svm.standardize);
    let z: Vec<Vec<f64>> = data
        .x
        .iter()
        .map(|row| {
            let mut v: Vec<f64> = row
                .iter()
                .enumerate()
                .map(|(j, x)| (x - mean[j]) * scale[j])
                .collect();
            v.push(1.0);
            v
        })
        .collect();
    let y: Vec<f64> = data.y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let sw = data.weights(config.balance_classes);

    let dim = data.features.len() + 1;
    let radius = 1.0 / lambda.sqrt();
    let mut w = vec![0.0; dim];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut trace = Vec::with_capacity(config.svm.epochs);
    let mut t = 0u64;
    for _ in 0..config.svm.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let violated = y[i] * dot(&w, &z[i]) < 1.0;
            let shrink = 1.0 - eta * lambda;
            for wj in w.iter_mut() {
                *wj *= shrink;
            }
            if violated {
                let step = eta * y[i] * sw[i];
                for (wj, zj) in w.iter_mut().zip(&z[i]) {
                    *wj += step * zj;
                }
            }
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > radius {
                let k = radius / norm;
                for wj in w.iter_mut() {
                    *wj *= k;
                }
            }
        }
        trace.push(objective(&z, &y, &sw, &w, lambda));
    }
    let bias = w.pop().unwrap_or(0.0);
    let params = ModelParams::Svm(SvmModel {
        mean,
        scale,
        weights: w,
        bias,
    });
    Ok((TrainedModel::assemble(config, &data.features, params), trace))
}

pub fn train_svm(data: &Dataset, config: &TrainConfig) -> Result<TrainedModel> {
    train_svm_traced(data, config).map(|(m, _)| m)
}
