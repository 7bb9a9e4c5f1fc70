//! Train the global LSTM forecaster on the pre-period of a synthetic panel and
//! draw a probabilistic counterfactual for one unit.
//!
//! `cargo run --release --example train_and_forecast [epochs]`

use counterfact::causal::pre_history;
use counterfact::panel::make_training_windows;
use counterfact::probnet::{forecast_samples, train_network, TrainConfig, DEFAULT_TAU_GRID};
use counterfact::synth::{generate_panel, SynthConfig};

fn main() -> counterfact::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let synth = SynthConfig {
        length: 720,
        t0: 600,
        ..Default::default()
    };
    let (panel, _) = generate_panel(&synth)?;

    let cfg = TrainConfig {
        epochs,
        ..Default::default()
    };
    let windows = make_training_windows(&panel.pre(), cfg.horizon, cfg.context_len, cfg.stride)?;
    println!("{} training windows", windows.len());
    let (params, curve) = train_network(&windows, &cfg)?;
    for (i, l) in curve.iter().enumerate() {
        println!("epoch {:>3}  mean nll {l:.4}", i + 1);
    }

    let unit = panel.controls().next().expect("synthetic panel has controls");
    let history = pre_history(&panel, unit);
    let fd = forecast_samples(&params, &unit.unit_id, &history, cfg.context_len, 24, 200, 1, &DEFAULT_TAU_GRID)?;

    let row = |tau| fd.fan_row(tau).expect("level is on the default grid");
    let (lo, mid, hi) = (row(0.05), row(0.5), row(0.95));
    println!("\n{} next 24 steps: observed vs median [5%, 95%]", unit.unit_id);
    for t in 0..fd.horizon {
        println!(
            "{}  {:>8.1}  {:>8.1} [{:>8.1}, {:>8.1}]",
            panel.format_timestamp(panel.t0() + t),
            unit.values[panel.t0() + t],
            mid[t],
            lo[t],
            hi[t]
        );
    }
    Ok(())
}
