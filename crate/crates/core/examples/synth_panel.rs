//! Generate a synthetic treated/control panel and print its true quantile effects.
//!
//! `cargo run --example synth_panel [out.csv]`

use counterfact::panel::save_panel;
use counterfact::probnet::DEFAULT_TAU_GRID;
use counterfact::synth::{generate_panel, oracle_quantile_effect, EffectSpec, SynthConfig};

fn main() -> counterfact::Result<()> {
    let cfg = SynthConfig {
        effect: EffectSpec::Trough {
            delta: -150.0,
            tau_star: 0.25,
        },
        ..Default::default()
    };
    let (panel, truth) = generate_panel(&cfg)?;
    println!(
        "{} units, {} steps, t0 = {} ({})",
        panel.units().len(),
        panel.timestamps().len(),
        panel.t0(),
        panel.format_timestamp(panel.t0())
    );
    for u in &truth.units {
        println!("  {:<10} {:?} offset {:+.1}", u.unit_id, u.role, u.offset);
    }

    let effects = oracle_quantile_effect(&cfg, &truth, &DEFAULT_TAU_GRID)?;
    let e = &effects[0];
    println!("\ntrue effect on {}", e.unit_id);
    println!("{:>6} {:>10} {:>8}", "tau", "delta", "pct");
    for ((tau, d), p) in e.tau_grid.iter().zip(&e.effect).zip(e.pct_change()) {
        println!("{tau:>6.2} {d:>10.2} {p:>8.2}");
    }

    if let Some(path) = std::env::args().nth(1) {
        save_panel(&panel, &path)?;
        println!("\nwrote {path}");
    }
    Ok(())
}
