//! Backtest the local baselines and the feed-forward network on the control
//! units of a synthetic panel.
//!
//! `cargo run --release --example baselines_backtest`

use counterfact::causal::{backtest_controls, train_model, EffectConfig, ModelKind, ModelSpec};
use counterfact::metrics::MetricConfig;
use counterfact::probnet::TrainConfig;
use counterfact::synth::{generate_panel, SynthConfig};

fn main() -> counterfact::Result<()> {
    let (panel, _) = generate_panel(&SynthConfig::default())?;
    let train = TrainConfig {
        epochs: 5,
        ..Default::default()
    };
    let metrics = MetricConfig::default();
    let effect = EffectConfig {
        n_samples: 200,
        ..Default::default()
    };

    println!("{:<10} {:<15} {:>8} {:>8} {:>8} {:>9}", "unit", "method", "wape", "wrmspe", "msis", "crps");
    for kind in [ModelKind::SeasonalNaive, ModelKind::Ets, ModelKind::Ffnn] {
        let model = train_model(&panel, &ModelSpec::new(kind, train.clone()))?;
        for row in backtest_controls(&model, &panel, &metrics, &effect)? {
            println!(
                "{:<10} {:<15} {:>8.4} {:>8.4} {:>8.3} {:>9.3}",
                row.unit_id, row.method, row.wape, row.wrmspe, row.msis, row.crps
            );
        }
    }
    Ok(())
}
