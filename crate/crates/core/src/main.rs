use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use counterfact::causal::ModelKind;
use counterfact::cli;
use counterfact::config::RunConfig;
use counterfact::probnet::load_model;
use counterfact::{Error, Result};

#[derive(Parser)]
#[command(name = "counterfact", version, about = "Distributional counterfactual effect estimation")]
struct Args {
    /// Run configuration (TOML). Optional for `synth` and `plotdata`.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set train.epochs=10`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker thread cap (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic panel, its config and the true effects.
    Synth {
        #[arg(long)]
        out: PathBuf,
    },
    /// Train `model.kind` on pre-intervention data.
    Train {
        #[arg(long)]
        panel: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Control-unit accuracy table for every baseline.
    Backtest {
        #[arg(long)]
        panel: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Comma-separated subset of seasonal_naive,ets,ffnn,probnet.
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Treated-unit effect reports and plot inputs.
    Effect {
        #[arg(long)]
        panel: Option<PathBuf>,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Placebo reports for the control units.
    Placebo {
        #[arg(long)]
        panel: Option<PathBuf>,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Figure-ready CSVs from an `effect` output directory.
    Plotdata {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn config(args: &Args, required: bool) -> Result<RunConfig> {
    match &args.config {
        Some(p) => RunConfig::load(p, &args.overrides),
        None if required => Err(Error::Config("--config is required for this command".into())),
        None => RunConfig::from_toml("", &args.overrides),
    }
}

fn run(args: Args) -> Result<()> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    match &args.cmd {
        Cmd::Synth { out } => cli::cmd_synth(&config(&args, false)?, out),
        Cmd::Train { panel, out } => {
            let cfg = config(&args, true)?;
            let p = cfg.load_panel(panel.as_deref())?;
            let m = cli::cmd_train(&cfg, &p, out)?;
            if let Some(last) = m.loss_curve.last() {
                eprintln!("trained {} for {} epochs, final mean NLL {last}", m.model.kind(), m.loss_curve.len());
            }
            Ok(())
        }
        Cmd::Backtest {
            panel,
            model,
            methods,
            out,
        } => {
            let cfg = config(&args, true)?;
            let p = cfg.load_panel(panel.as_deref())?;
            let kinds = if methods.is_empty() {
                ModelKind::ALL.to_vec()
            } else {
                methods.iter().map(|m| ModelKind::parse(m)).collect::<Result<_>>()?
            };
            let m = model.as_deref().map(load_model).transpose()?;
            let rows = cli::cmd_backtest(&cfg, &p, &kinds, m.as_ref())?;
            cli::write_or_print(&cli::metric_table(&cfg, &rows)?, out.as_deref())
        }
        Cmd::Effect { panel, model, out } => {
            let cfg = config(&args, true)?;
            let p = cfg.load_panel(panel.as_deref())?;
            let reports = cli::cmd_effect(&cfg, &p, &load_model(model)?, out)?;
            for r in &reports {
                eprintln!(
                    "{}: overall ATE {:.3}, signed-rank p {:.3e}, rank-sum p {}",
                    r.unit_id,
                    r.overall_ate,
                    r.p_signed_rank,
                    r.p_rank_sum.map(|p| format!("{p:.3e}")).unwrap_or_default()
                );
            }
            Ok(())
        }
        Cmd::Placebo { panel, model, out } => {
            let cfg = config(&args, true)?;
            let p = cfg.load_panel(panel.as_deref())?;
            let (summary, table) = cli::cmd_placebo(&cfg, &p, &load_model(model)?)?;
            cli::write_or_print(&table, out.as_deref())?;
            eprintln!(
                "placebo {}: {}/{} controls null, {}/{} treated units separated from controls",
                if summary.passed { "PASS" } else { "FAIL" },
                summary.null_controls.len(),
                summary.reports.len(),
                summary.separated_treated.len(),
                summary.n_treated
            );
            Ok(())
        }
        Cmd::Plotdata { report, out } => cli::cmd_plotdata(&config(&args, false)?, report, out),
    }
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
