//! Placebo test: run the effect estimator on the control units, which received
//! no intervention, and check that they come out null.
//!
//! `cargo run --release --example placebo_check [epochs]`

use counterfact::causal::{placebo_run, train_model, EffectConfig, ModelKind, ModelSpec};
use counterfact::probnet::TrainConfig;
use counterfact::synth::{generate_panel, SynthConfig};

fn main() -> counterfact::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let (panel, _) = generate_panel(&SynthConfig::default())?;
    let train = TrainConfig {
        epochs,
        ..Default::default()
    };
    let model = train_model(&panel, &ModelSpec::new(ModelKind::Probnet, train))?;
    let summary = placebo_run(&model, &panel, &EffectConfig::default())?;

    for (id, r) in &summary.reports {
        let median = r.tau_grid.iter().position(|&t| t == 0.5).expect("grid has the median");
        println!(
            "{id:<10} pct@0.5 {:+6.2}  signed-rank p {:.3}  {}",
            r.pct_change[median],
            r.p_signed_rank,
            if summary.null_controls.contains(id) { "null" } else { "NOT null" }
        );
    }
    println!(
        "\n{}/{} treated units separated from the controls; placebo {}",
        summary.separated_treated.len(),
        summary.n_treated,
        if summary.passed { "passed" } else { "failed" }
    );
    Ok(())
}
