use std::path::{Path, PathBuf};

use lifelong_core::data::{make_step_plan, synth_identities, IdentityDataset, Split, StepPlan};
use lifelong_core::eval::{evaluate_step, reports_to_csv, EvalReport, EvalSuite, SuiteSpec};
use lifelong_core::trainer::{EpochRecord, RunDir, RunDirObserver, RunLedger, RunObserver, Trainer};
use lifelong_core::Result as CoreResult;

use crate::args::{EvalArgs, PlanArgs, TrainArgs};
use crate::config::CliConfig;
use crate::error::{CliError, CliResult, EXIT_EVALUATION};
use crate::manifest::{now, write_resolved_config, RunManifest, RESOLVED_CONFIG_FILE};
use crate::plot::{accuracy_chart, Series};
use crate::run_root;

pub fn train_dataset(config: &CliConfig) -> CliResult<IdentityDataset> {
    synth_identities(&config.data, Split::Train).map_err(CliError::config_from)
}

pub fn plan_from_config(config: &CliConfig, dataset: &IdentityDataset, base_fraction: f64) -> CliResult<StepPlan> {
    let p = &config.plan;
    make_step_plan(dataset, base_fraction, p.steps, p.seed, p.allow_overlap).map_err(CliError::config_from)
}

fn write_file(path: &Path, body: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::config(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, body).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

pub fn print_plan(plan: &StepPlan) {
    println!("{:<6} {:>10}", "step", "identities");
    for (t, n) in plan.summary_rows() {
        let label = if t == 0 { "base".to_string() } else { t.to_string() };
        println!("{label:<6} {n:>10}");
    }
    println!("{:<6} {:>10}", "total", plan.union().len());
}

pub fn plan(args: PlanArgs) -> CliResult<()> {
    let config = CliConfig::load(&args.config.config, &args.config.all_overrides(None))?;
    let dataset = train_dataset(&config)?;
    let plan = plan_from_config(&config, &dataset, config.plan.base_fraction)?;
    let out = args.out.unwrap_or_else(|| run_root().join("plan.json"));
    write_file(&out, &plan.to_json().map_err(CliError::config_from)?)?;
    print_plan(&plan);
    println!("plan written to {}", out.display());
    Ok(())
}

/// Prints one line per finished epoch.
pub struct EpochPrinter {
    pub quiet: bool,
    pub prefix: String,
}

impl RunObserver for EpochPrinter {
    fn on_epoch(&mut self, r: &EpochRecord) -> CoreResult<()> {
        if !self.quiet {
            let id = r.loss.id.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into());
            println!(
                "{}step {} epoch {:>3} lr {:.3e} total {:.6} msfd {:.6} gpkd {:.6} ckd {:.6} id {id}",
                self.prefix, r.step, r.epoch, r.lr, r.loss.total, r.loss.msfd, r.loss.gpkd, r.loss.ckd
            );
        }
        Ok(())
    }
}

fn load_plan(path: &Path, config: &CliConfig, dataset: &IdentityDataset) -> CliResult<StepPlan> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let plan = StepPlan::from_json(&text).map_err(CliError::config_from)?;
    if plan.dataset.as_ref().is_some_and(|d| *d != config.data) {
        return Err(CliError::config(format!(
            "{} was made for a different [data] section",
            path.display()
        )));
    }
    plan.check_against(dataset).map_err(CliError::config_from)?;
    Ok(plan)
}

/// Trains (or resumes) one run directory. Returns the final ledger, or
/// `None` when the run was already complete.
pub fn train_run(
    root: &Path,
    config: &CliConfig,
    dataset: &IdentityDataset,
    plan: &StepPlan,
    resume: bool,
    printer: &mut EpochPrinter,
    seed_with: Option<(&lifelong_core::model::ModelSnapshot, &RunLedger)>,
) -> CliResult<Option<RunLedger>> {
    let run_cfg = config.run_config();
    let expected = run_cfg.train.mode.checkpoint_count(plan.step_count);
    let exists = root.join("config.json").is_file();
    if exists && !resume {
        return Err(CliError::config(format!(
            "{} already holds a run; pass --resume to continue it",
            root.display()
        )));
    }
    if resume && !exists {
        return Err(CliError::config(format!("{} holds no run to resume", root.display())));
    }
    let trainer = Trainer::new(dataset, run_cfg.clone()).map_err(CliError::config_from)?;
    let dir = RunDir::create(root, &run_cfg, plan).map_err(CliError::config_from)?;
    write_resolved_config(root, config)?;
    if dir.completed_steps() >= expected {
        println!("{}: all {expected} checkpoints present, nothing to do", root.display());
        return Ok(None);
    }
    let mut manifest = if exists {
        let mut m = RunManifest::read(root)?;
        m.resumed_at.push(now());
        m
    } else {
        RunManifest::new(config)
    };
    manifest.write(root)?;

    let (done, ledger) = if exists {
        dir.resume_state().map_err(CliError::training)?
    } else if let Some((base, base_ledger)) = seed_with {
        // Shared base checkpoint: the run starts with step 0 already done.
        let mut ledger = base_ledger.clone();
        ledger.config_hash = run_cfg.hash();
        ledger.mode = Some(run_cfg.train.mode.as_str().into());
        lifelong_core::model::save_checkpoint(base, &dir.checkpoint_path(0)).map_err(CliError::training)?;
        write_file(&dir.ledger_csv_path(), &ledger.to_csv())?;
        dir.write_ledger(&ledger).map_err(CliError::training)?;
        (vec![base.clone()], ledger)
    } else {
        (Vec::new(), trainer.empty_ledger())
    };
    if exists {
        println!("{}: resuming after {} complete checkpoints", root.display(), done.len());
    }
    let mut observer = RunDirObserver::new(dir.clone(), ledger.clone(), Some(printer));
    let (ledger, _) = trainer
        .resume_lifelong(plan, done, ledger, &mut observer)
        .map_err(CliError::training)?;
    dir.write_ledger(&ledger).map_err(CliError::training)?;
    manifest.finished_at = Some(now());
    manifest.write(root)?;
    Ok(Some(ledger))
}

pub fn train(args: TrainArgs) -> CliResult<()> {
    let overrides = args.config.all_overrides(args.mode.as_deref());
    let config = CliConfig::load(&args.config.config, &overrides)?;
    let dataset = train_dataset(&config)?;
    let plan = match &args.plan {
        Some(p) => {
            if args.config.steps.is_some() || args.config.base_fraction.is_some() {
                return Err(CliError::config("--steps and --base-fraction cannot be combined with --plan"));
            }
            load_plan(p, &config, &dataset)?
        }
        None => plan_from_config(&config, &dataset, config.plan.base_fraction)?,
    };
    let name = args
        .name
        .clone()
        .unwrap_or_else(|| format!("{}_seed{}", config.train.mode.as_str(), config.train.seed));
    let root = run_root().join(name);
    let mut printer = EpochPrinter {
        quiet: args.quiet,
        prefix: String::new(),
    };
    if let Some(ledger) = train_run(&root, &config, &dataset, &plan, args.resume, &mut printer, None)? {
        println!(
            "run complete: {} checkpoints, {} epoch rows in {}",
            ledger.steps.len(),
            ledger.epochs.len(),
            root.display()
        );
    }
    Ok(())
}

/// A path as given, or a name under the run root.
pub fn resolve_run(path: &Path) -> PathBuf {
    if path.exists() {
        path.to_path_buf()
    } else {
        run_root().join(path)
    }
}

pub fn build_suites(specs: &[SuiteSpec]) -> CliResult<Vec<EvalSuite>> {
    if specs.is_empty() {
        return Err(CliError::config("no evaluation suites configured ([[suites]] is empty)"));
    }
    specs.iter().map(|s| s.build().map_err(CliError::config_from)).collect()
}

/// Reports for every checkpoint of the run, step-major.
pub fn evaluate_run(root: &Path, suites: &[EvalSuite]) -> CliResult<Vec<EvalReport>> {
    let dir = RunDir::open(root).map_err(CliError::config_from)?;
    let config = dir.config().map_err(CliError::config_from)?;
    let plan = dir.plan().map_err(CliError::config_from)?;
    let expected = config.train.mode.checkpoint_count(plan.step_count);
    let missing = dir.missing_steps(expected);
    if !missing.is_empty() {
        return Err(CliError::new(
            EXIT_EVALUATION,
            format!(
                "{}: checkpoints missing for steps {} (expected {expected})",
                root.display(),
                missing.iter().map(usize::to_string).collect::<Vec<_>>().join(", ")
            ),
        ));
    }
    let snapshots = dir.load_checkpoints(expected).map_err(CliError::evaluation)?;
    let mut reports = Vec::new();
    for (t, snap) in snapshots.iter().enumerate() {
        reports.extend(evaluate_step(snap, t, suites).map_err(CliError::evaluation)?);
    }
    Ok(reports)
}

/// Appends `reports/report_k.{csv,json}`; returns the stem used.
pub fn write_reports(root: &Path, reports: &[EvalReport]) -> CliResult<PathBuf> {
    let dir = RunDir::open(root).map_err(CliError::config_from)?;
    let stem = dir.next_report_stem();
    let json = serde_json::to_string_pretty(reports).expect("reports serialize");
    write_file(&stem.with_extension("csv"), &reports_to_csv(reports))?;
    write_file(&stem.with_extension("json"), &(json + "\n"))?;
    Ok(stem)
}

pub fn print_reports(label: &str, reports: &[EvalReport]) {
    println!("{label}");
    println!("{:<5} {:<16} {:>8} {:>8}  tar@far", "step", "suite", "va", "std");
    for r in reports {
        let tars: Vec<String> = r.tar_at_far.iter().map(|t| format!("{}:{:.3}", t.far, t.tar)).collect();
        println!(
            "{:<5} {:<16} {:>8.4} {:>8.4}  {}",
            r.step_index,
            r.suite,
            r.va_mean,
            r.va_std,
            tars.join(" ")
        );
    }
}

fn run_label(root: &Path) -> String {
    root.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| root.display().to_string())
}

pub fn eval(args: EvalArgs) -> CliResult<()> {
    let primary = resolve_run(&args.run);
    let specs = match &args.config {
        Some(path) => CliConfig::load(path, &[])?.suites,
        None => CliConfig::load(&primary.join(RESOLVED_CONFIG_FILE), &[])?.suites,
    };
    let suites = build_suites(&specs)?;
    let mut runs = vec![primary.clone()];
    runs.extend(args.compare.iter().map(|p| resolve_run(p)));

    let mut all = Vec::new();
    let mut primary_stem = None;
    for root in &runs {
        let reports = evaluate_run(root, &suites)?;
        let stem = write_reports(root, &reports)?;
        print_reports(&format!("{} -> {}", run_label(root), stem.display()), &reports);
        primary_stem.get_or_insert(stem);
        all.push((run_label(root), reports));
    }
    if args.plot || !args.compare.is_empty() {
        let stem = primary_stem.expect("at least one run");
        for suite in &suites {
            let series: Vec<Series> = all
                .iter()
                .map(|(label, reports)| Series {
                    label: label.clone(),
                    points: reports
                        .iter()
                        .filter(|r| r.suite == suite.name)
                        .map(|r| (r.step_index, r.va_mean))
                        .collect(),
                })
                .collect();
            let name = stem.file_name().expect("stem has a name").to_string_lossy();
            let path = stem.with_file_name(format!("{name}_{}.svg", suite.name));
            accuracy_chart(&path, &suite.name, &series)?;
            println!("chart written to {}", path.display());
        }
    }
    Ok(())
}
