//! The command-line workflow driven from code: synth, train, effect, placebo,
//! backtest and plot data, all written into a scratch directory.
//!
//! `cargo run --release --example end_to_end_cli [out_dir]`

use std::path::PathBuf;

use counterfact::causal::ModelKind;
use counterfact::cli;
use counterfact::config::RunConfig;

fn main() -> counterfact::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "counterfact-demo".into()));
    let quick = ["train.epochs=5".to_string(), "forecast.n_samples=200".to_string()];

    cli::cmd_synth(&RunConfig::from_toml("", &quick)?, &out.join("data"))?;
    let cfg = RunConfig::load(out.join("data/config.toml"), &quick)?;
    let panel = cfg.load_panel(None)?;
    println!("config hash {}", cfg.hash()?);

    let model = cli::cmd_train(&cfg, &panel, &out.join("model.txt"))?;
    println!("trained {} ({} epochs)", model.model.kind(), model.loss_curve.len());

    for r in cli::cmd_effect(&cfg, &panel, &model, &out.join("report"))? {
        println!("{}: ATE {:.2}, p {:.2e}", r.unit_id, r.overall_ate, r.p_signed_rank);
    }
    let (summary, table) = cli::cmd_placebo(&cfg, &panel, &model)?;
    table.save(&out.join("report/placebo_summary.csv"))?;
    println!("placebo passed: {}", summary.passed);

    let rows = cli::cmd_backtest(&cfg, &panel, &[ModelKind::SeasonalNaive, ModelKind::Ets], Some(&model))?;
    cli::metric_table(&cfg, &rows)?.save(&out.join("backtest.csv"))?;
    cli::cmd_plotdata(&cfg, &out.join("report"), &out.join("plots"))?;
    println!("outputs in {}", out.display());
    Ok(())
}
