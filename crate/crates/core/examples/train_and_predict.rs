//! Train every model on a 2-D toy problem, round-trip one through JSON and
//! score a few points.
//!
//! cargo run --release --example train_and_predict

use std::collections::BTreeMap;

use review_priority::eval::{metrics, ConfusionMatrix};
use review_priority::features::FeatureId;
use review_priority::models::{train, Dataset, ModelKind, TrainConfig, TrainedModel};
use review_priority::synth::noisy_xor;

fn main() -> review_priority::Result<()> {
    let data = noisy_xor(1000, 0.05, 0.05, 3);
    let cut = 800;
    let train_set = Dataset::new(data.features.clone(), data.x[..cut].to_vec(), data.y[..cut].to_vec())?;

    let mut models = Vec::new();
    for kind in ModelKind::ALL {
        let model = train(&train_set, &TrainConfig::new(kind, 42))?;
        let pred = data.x[cut..]
            .iter()
            .map(|row| model.predict_row(row).map(|p| p.label))
            .collect::<review_priority::Result<Vec<u8>>>()?;
        let m = metrics(&ConfusionMatrix::from_predictions(&pred, &data.y[cut..])?)?;
        println!("{:<14} held-out accuracy {:.3}  F1 {:.3}", kind.display_name(), m.accuracy, m.f1);
        models.push(model);
    }

    // The linear SVM cannot separate XOR; the tree models can.
    let json = models[3].to_json()?;
    let restored = TrainedModel::from_json(&json)?;
    println!("\nserialized XGBoost model: {} bytes", json.len());
    for (a, b) in [(0.5, 0.5), (-0.5, 0.5), (0.5, -0.5), (-0.5, -0.5)] {
        let point = BTreeMap::from([(FeatureId::new(1).unwrap(), a), (FeatureId::new(2).unwrap(), b)]);
        let p = restored.predict_named(&point)?;
        println!("({a:>4}, {b:>4}) -> label {} score {:.3}", p.label, p.score);
    }
    Ok(())
}
