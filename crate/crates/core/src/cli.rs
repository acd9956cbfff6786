//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ris_handover::ris_assign::{evaluate_agreement, generate_dataset, AnnModel, TrainingSet};
use ris_handover::simkit::config::CONFIG_DIR_ENV;
use ris_handover::simkit::{
    latency_figure_csv, rate_figure_csv, run_sweep_with, run_trial, Format, ScenarioConfig,
    SweepAxis, SweepPlan,
};
use ris_handover::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "ris-handover",
    version,
    about = "Indoor VLC simulator with RIS-assisted proactive handover",
    after_help = "Relative --config paths that do not exist are looked up in \
                  $RIS_HANDOVER_CONFIG_DIR. Every config key has a default; an \
                  empty file is the reference scenario."
)]
pub struct Cli {
    /// Suppress progress and summary messages on stderr.
    #[arg(long, short, global = true)]
    pub quiet: bool,

    /// Directory searched for relative config paths.
    #[arg(long, global = true, env = CONFIG_DIR_ENV, value_name = "DIR")]
    pub config_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one trial and write its metrics as JSON.
    Run(RunArgs),
    /// Sweep one parameter and write the metrics table (CSV, or JSON for a .json path).
    Sweep(SweepArgs),
    /// Generate an oracle-labelled dataset CSV.
    GenDataset(GenArgs),
    /// Train the assignment network on a dataset; writes the model and a loss-history CSV.
    TrainAnn(TrainArgs),
    /// Measure a model's agreement with the oracle labels of a dataset; writes a JSON report.
    EvalAnn(EvalArgs),
    /// Sweep N and write the rate (fig2.csv) and latency (fig3.csv) series.
    PlotData(PlotArgs),
}

#[derive(Debug, Args)]
pub struct RisToggle {
    /// Only simulate with the RIS enabled.
    #[arg(long, conflicts_with = "no_ris")]
    pub ris: bool,
    /// Only simulate without the RIS.
    #[arg(long)]
    pub no_ris: bool,
}

impl RisToggle {
    fn modes(&self) -> Option<Vec<bool>> {
        match (self.ris, self.no_ris) {
            (true, _) => Some(vec![true]),
            (_, true) => Some(vec![false]),
            _ => None,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario config (TOML).
    #[arg(long, short)]
    pub config: PathBuf,
    /// Output JSON path; stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trial index.
    #[arg(long, default_value_t = 0)]
    pub trial: u64,
    #[command(flatten)]
    pub toggle: RisToggle,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Scenario config (TOML).
    #[arg(long, short)]
    pub config: PathBuf,
    /// Metrics table path; `.json` selects JSON, anything else CSV.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Swept parameter: N, speed, N_B or ris.
    #[arg(long, default_value = "N")]
    pub axis: String,
    /// Comma-separated axis values, e.g. 2,4,6,8.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    /// Override the trial count.
    #[arg(long)]
    pub trials: Option<usize>,
    #[command(flatten)]
    pub toggle: RisToggle,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Scenario config (TOML).
    #[arg(long, short)]
    pub config: PathBuf,
    /// Dataset CSV path.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Dataset seed; defaults to the config's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of labelled instances.
    #[arg(long, default_value_t = 10_000)]
    pub count: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Scenario config (TOML).
    #[arg(long, short)]
    pub config: PathBuf,
    /// Training dataset CSV.
    #[arg(long, short)]
    pub dataset: PathBuf,
    /// Model output path.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Loss history CSV; defaults to `<out>.loss.csv`.
    #[arg(long)]
    pub loss_out: Option<PathBuf>,
    /// Override the training seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the epoch count.
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Scenario config (TOML).
    #[arg(long, short)]
    pub config: PathBuf,
    /// Model written by train-ann.
    #[arg(long, short)]
    pub model: PathBuf,
    /// Held-out dataset CSV.
    #[arg(long, short)]
    pub dataset: PathBuf,
    /// Report JSON path; stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Scenario config; the reference scenario when omitted.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// AP counts on the x axis.
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6,7,8,9,10")]
    pub values: Vec<f64>,
    /// Override the trial count.
    #[arg(long)]
    pub trials: Option<usize>,
}

struct Ctx {
    quiet: bool,
    config_dir: Option<PathBuf>,
}

impl Ctx {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn config(&self, path: &Path) -> Result<ScenarioConfig> {
        let resolved = match &self.config_dir {
            Some(dir) if path.is_relative() && !path.exists() => dir.join(path),
            _ => path.to_path_buf(),
        };
        ScenarioConfig::load(&resolved)
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    let text = format!("{}\n", text.trim_end_matches('\n'));
    match out {
        Some(p) => write(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Refuses outputs that would overwrite one of the inputs.
fn distinct(out: &Path, inputs: &[&Path]) -> Result<()> {
    let canon = |p: &Path| std::fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf());
    if inputs.iter().any(|i| canon(i) == canon(out)) {
        return Err(Error::Config(format!(
            "output {} would overwrite an input file",
            out.display()
        )));
    }
    Ok(())
}

pub fn dispatch(cli: Cli) -> Result<()> {
    let ctx = Ctx {
        quiet: cli.quiet,
        config_dir: cli.config_dir,
    };
    match cli.command {
        Command::Run(a) => run(&ctx, a),
        Command::Sweep(a) => sweep(&ctx, a),
        Command::GenDataset(a) => gen_dataset(&ctx, a),
        Command::TrainAnn(a) => train_ann(&ctx, a),
        Command::EvalAnn(a) => eval_ann(&ctx, a),
        Command::PlotData(a) => plot_data(&ctx, a),
    }
}

fn run(ctx: &Ctx, a: RunArgs) -> Result<()> {
    if let Some(out) = &a.out {
        distinct(out, &[&a.config])?;
    }
    let mut cfg = ctx.config(&a.config)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(modes) = a.toggle.modes() {
        cfg.ris.enabled = modes[0];
    }
    let m = run_trial(&cfg, a.trial)?;
    ctx.note(format!(
        "trial {}: {} steps, N_h={}, N_s={}, hole_frac={:.4}",
        a.trial, m.steps, m.n_h, m.n_s, m.hole_frac
    ));
    emit(a.out.as_deref(), &m.to_json())
}

fn sweep(ctx: &Ctx, a: SweepArgs) -> Result<()> {
    distinct(&a.out, &[&a.config])?;
    let mut cfg = ctx.config(&a.config)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(t) = a.trials {
        cfg.sim.trials = t;
    }
    cfg.validate()?;
    let axis: SweepAxis = a.axis.parse()?;
    let mut plan = SweepPlan::standard(&cfg);
    if let Some(modes) = a.toggle.modes() {
        plan.ris_modes = modes;
    }
    ctx.note(format!(
        "sweeping {axis} over {} values, {} trials per cell",
        a.values.len(),
        cfg.sim.trials
    ));
    let out = run_sweep_with(&cfg, axis, &a.values, &plan)?;
    out.table.export(Format::from_path(&a.out), &a.out)?;
    ctx.note(format!("wrote {} rows to {}", out.table.rows.len(), a.out.display()));
    Ok(())
}

fn gen_dataset(ctx: &Ctx, a: GenArgs) -> Result<()> {
    distinct(&a.out, &[&a.config])?;
    let cfg = ctx.config(&a.config)?;
    let seed = a.seed.unwrap_or(cfg.seed);
    let set = generate_dataset(&cfg, a.count, seed)?;
    set.save(&a.out)?;
    ctx.note(format!(
        "wrote {} instances (N={}, M={}) to {}",
        set.rows.len(),
        set.n_aps,
        set.n_elements,
        a.out.display()
    ));
    Ok(())
}

fn train_ann(ctx: &Ctx, a: TrainArgs) -> Result<()> {
    let cfg = ctx.config(&a.config)?;
    let loss_out = a.loss_out.clone().unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".loss.csv");
        PathBuf::from(p)
    });
    distinct(&a.out, &[&a.dataset, &a.config])?;
    distinct(&loss_out, &[&a.dataset, &a.config, &a.out])?;
    let set = TrainingSet::load(&a.dataset)?;
    let mut hyper = cfg.ann.hyperparams();
    if let Some(s) = a.seed {
        hyper.seed = s;
    }
    if let Some(e) = a.epochs {
        hyper.epochs = e;
    }
    let scale = (cfg.room.width, cfg.room.depth);
    let mut model = AnnModel::new(set.n_aps, set.n_elements, &cfg.ann.hidden, scale, hyper.seed)?;
    let report = model.train(&set, &hyper)?;
    model.save(&a.out)?;
    let mut csv = String::from("epoch,loss\n");
    csv.push_str(&format!("0,{}\n", report.initial_loss));
    for (e, l) in report.loss_history.iter().enumerate() {
        csv.push_str(&format!("{},{}\n", e + 1, l));
    }
    write(&loss_out, &csv)?;
    ctx.note(format!(
        "trained on {} rows: loss {:.4} -> {:.4}",
        set.rows.len(),
        report.initial_loss,
        report.final_loss()
    ));
    Ok(())
}

fn eval_ann(ctx: &Ctx, a: EvalArgs) -> Result<()> {
    let cfg = ctx.config(&a.config)?;
    if let Some(out) = &a.out {
        distinct(out, &[&a.dataset, &a.model, &a.config])?;
    }
    let model = AnnModel::load(&a.model)?;
    let (n, m) = (cfg.aps.count, cfg.ris.element_count());
    if model.n_aps() != n || model.n_elements() != m {
        return Err(Error::Config(format!(
            "model is for N={}, M={} but the config has N={n}, M={m}",
            model.n_aps(),
            model.n_elements()
        )));
    }
    let set = TrainingSet::load(&a.dataset)?;
    let report = evaluate_agreement(&model, &set)?;
    ctx.note(format!(
        "agreement {:.4} vs bound {:.4} ({})",
        report.agreement,
        report.bound,
        if report.exceeds_bound { "above" } else { "NOT above" }
    ));
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    emit(a.out.as_deref(), &json)
}

fn plot_data(ctx: &Ctx, a: PlotArgs) -> Result<()> {
    let names = ["sweep.csv", "fig2.csv", "fig3.csv"].map(|n| a.out.join(n));
    if let Some(c) = &a.config {
        for n in &names {
            distinct(n, &[c])?;
        }
    }
    let mut cfg = match &a.config {
        Some(p) => ctx.config(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(t) = a.trials {
        cfg.sim.trials = t;
    }
    cfg.validate()?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let plan = SweepPlan::standard(&cfg);
    let out = run_sweep_with(&cfg, SweepAxis::ApCount, &a.values, &plan)?;
    out.table.export(Format::Csv, &names[0])?;
    write(&names[1], &rate_figure_csv(&out.table))?;
    write(&names[2], &latency_figure_csv(&out.table))?;
    ctx.note(format!("wrote fig2.csv, fig3.csv and sweep.csv to {}", a.out.display()));
    Ok(())
}
