//! Full distributional effect analysis on a synthetic panel with a uniform 10%
//! reduction: train, forecast counterfactuals, report per-quantile effects.
//!
//! `cargo run --release --example effect_analysis [epochs]`
//!
//! The library default is 50 epochs; the example uses fewer so it finishes quickly.

use counterfact::causal::{effect_reports, train_model, EffectConfig, ModelKind, ModelSpec};
use counterfact::probnet::TrainConfig;
use counterfact::synth::{generate_panel, SynthConfig};

fn main() -> counterfact::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let (panel, _) = generate_panel(&SynthConfig::default())?;
    let spec = ModelSpec::new(
        ModelKind::Probnet,
        TrainConfig {
            epochs,
            ..Default::default()
        },
    );
    let model = train_model(&panel, &spec)?;
    let reports = effect_reports(&model, &panel, &EffectConfig::default())?;

    for r in &reports {
        println!(
            "\n{} ({:?})  overall ATE {:.2}  signed-rank p {:.2e}  rank-sum p {}",
            r.unit_id,
            r.role,
            r.overall_ate,
            r.p_signed_rank,
            r.p_rank_sum.map(|p| format!("{p:.2e}")).unwrap_or_else(|| "-".into())
        );
        println!("{:>6} {:>10} {:>10} {:>10} {:>8}", "tau", "observed", "counterf.", "effect", "pct");
        for i in 0..r.tau_grid.len() {
            println!(
                "{:>6.2} {:>10.1} {:>10.1} {:>10.2} {:>8.2}",
                r.tau_grid[i], r.observed_quantile[i], r.counterfactual_quantile[i], r.avg_causal_effect[i], r.pct_change[i]
            );
        }
    }
    Ok(())
}
