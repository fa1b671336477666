use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "lifelong", version, about = "Continual embedding training: plans, runs, evaluation and ablations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split the training identities into a base set and incremental steps.
    Plan(PlanArgs),
    /// Train the base model and every incremental step of a plan.
    Train(TrainArgs),
    /// Evaluate every checkpoint of a run on the configured suites.
    Eval(EvalArgs),
    /// Run a grid of loss masks, base fractions and identity-loss toggles.
    Ablate(AblateArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// TOML config file.
    #[arg(long)]
    pub config: PathBuf,
    /// Number of incremental steps (plan.steps).
    #[arg(long)]
    pub steps: Option<usize>,
    /// Fraction of identities in the base step (plan.base_fraction).
    #[arg(long = "base-fraction")]
    pub base_fraction: Option<f64>,
    /// Seed for the plan and the training run.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dotted overrides such as `loss.lambda2=0`.
    #[arg(value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl ConfigArgs {
    /// Overrides with the shorthand flags appended, so they win.
    pub fn all_overrides(&self, mode: Option<&str>) -> Vec<String> {
        let mut out = self.overrides.clone();
        if let Some(s) = self.steps {
            out.push(format!("plan.steps={s}"));
        }
        if let Some(f) = self.base_fraction {
            out.push(format!("plan.base_fraction={f:?}"));
        }
        if let Some(s) = self.seed {
            out.push(format!("plan.seed={s}"));
            out.push(format!("train.seed={s}"));
        }
        if let Some(m) = mode {
            out.push(format!("train.mode=\"{m}\""));
        }
        out
    }
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Output path; defaults to `<run root>/plan.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, value_parser = ["clface", "finetune", "joint", "feature_extract"])]
    pub mode: Option<String>,
    /// Plan manifest written by `lifelong plan`; built from the config otherwise.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Run directory name under the run root; defaults to `<mode>_seed<seed>`.
    #[arg(long)]
    pub name: Option<String>,
    /// Continue an interrupted run from its last complete checkpoint.
    #[arg(long)]
    pub resume: bool,
    /// Do not print per-epoch loss lines.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Run directory (a path, or a name under the run root).
    pub run: PathBuf,
    /// Config whose `suites` replace the ones the run was trained with.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write one accuracy-vs-step SVG per suite.
    #[arg(long)]
    pub plot: bool,
    /// Further runs to evaluate and draw on the same charts.
    #[arg(long, num_args = 1..)]
    pub compare: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Grid directory name under the run root; defaults to `ablation.name` or `ablation`.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub quiet: bool,
}
