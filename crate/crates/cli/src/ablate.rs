use std::collections::BTreeSet;
use std::path::Path;

use lifelong_core::data::{IdentityDataset, StepPlan};
use lifelong_core::eval::EvalReport;
use lifelong_core::losses::LossMask;
use lifelong_core::model::{load_checkpoint, save_checkpoint, ModelSnapshot};
use lifelong_core::trainer::{Mode, ModelConfig, RunLedger, TrainConfig, Trainer};
use lifelong_core::data::SynthParams;
use serde::{Deserialize, Serialize};

use crate::args::AblateArgs;
use crate::commands::{build_suites, evaluate_run, plan_from_config, train_dataset, train_run, write_reports, EpochPrinter};
use crate::config::{AblationSection, CliConfig};
use crate::error::{CliError, CliResult};
use crate::run_root;

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub base_fraction: f64,
    pub mask: LossMask,
    pub id_loss: bool,
}

impl Cell {
    pub fn dir_name(&self) -> String {
        let id = if self.id_loss { "_id" } else { "" };
        format!("bf{:.2}_{}{id}", self.base_fraction, self.mask.label())
    }

    fn config(&self, base: &CliConfig) -> CliConfig {
        let mut c = base.clone();
        c.plan.base_fraction = self.base_fraction;
        c.loss = c.loss.masked(self.mask);
        c.loss.include_id_loss = self.id_loss;
        c.train.mode = Mode::Clface;
        c.ablation = AblationSection::default();
        c
    }
}

/// Cartesian product of the grid axes in base-fraction-major order. Empty
/// axes fall back to the config's own value.
pub fn grid_cells(config: &CliConfig) -> CliResult<Vec<Cell>> {
    let g = &config.ablation;
    let masks = if g.masks.is_empty() {
        vec![LossMask::ALL]
    } else {
        g.masks
            .iter()
            .map(|m| LossMask::parse(m).map_err(CliError::config_from))
            .collect::<CliResult<Vec<_>>>()?
    };
    let fractions = if g.base_fractions.is_empty() {
        vec![config.plan.base_fraction]
    } else {
        g.base_fractions.clone()
    };
    let id_loss = if g.id_loss.is_empty() {
        vec![config.loss.include_id_loss]
    } else {
        g.id_loss.clone()
    };
    let mut cells = Vec::new();
    let mut names = BTreeSet::new();
    for &base_fraction in &fractions {
        if !(base_fraction > 0.0 && base_fraction <= 1.0) {
            return Err(CliError::config(format!("base fraction {base_fraction} is outside (0, 1]")));
        }
        for &mask in &masks {
            for &id in &id_loss {
                let cell = Cell {
                    base_fraction,
                    mask,
                    id_loss: id,
                };
                if mask.label() == "none" && !id {
                    return Err(CliError::config(format!(
                        "grid cell {} trains nothing: no loss term and no identity loss",
                        cell.dir_name()
                    )));
                }
                if !names.insert(cell.dir_name()) {
                    return Err(CliError::config(format!("grid cell {} appears twice", cell.dir_name())));
                }
                cells.push(cell);
            }
        }
    }
    Ok(cells)
}

/// Everything the base checkpoint depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BaseKey {
    data: SynthParams,
    model: ModelConfig,
    train: TrainConfig,
    base_identities: BTreeSet<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BaseRecord {
    key: BaseKey,
    ledger: RunLedger,
}

/// Trains the base step for one base fraction once, or reloads it.
fn shared_base(
    dir: &Path,
    config: &CliConfig,
    dataset: &IdentityDataset,
    plan: &StepPlan,
    printer: &mut EpochPrinter,
) -> CliResult<(ModelSnapshot, RunLedger)> {
    let mut train = config.train.clone();
    train.mode = Mode::Clface;
    let key = BaseKey {
        data: config.data.clone(),
        model: config.model.clone(),
        train,
        base_identities: plan.base_identities.clone(),
    };
    let stem = format!("bf{:.2}", plan.base_fraction);
    let ckpt = dir.join(format!("{stem}.ckpt"));
    let record_path = dir.join(format!("{stem}.json"));
    if ckpt.is_file() && record_path.is_file() {
        let text = std::fs::read_to_string(&record_path).map_err(|e| CliError::config(e.to_string()))?;
        let record: BaseRecord = serde_json::from_str(&text).map_err(|e| CliError::config(e.to_string()))?;
        if record.key != key {
            return Err(CliError::config(format!(
                "{} was trained with different settings; use another --name",
                ckpt.display()
            )));
        }
        let snap = load_checkpoint(&ckpt).map_err(CliError::training)?;
        if record.ledger.steps.first().map(|s| s.checkpoint_hash.as_str()) != Some(snap.checksum().as_str()) {
            return Err(CliError::training(lifelong_core::Error::Checkpoint {
                path: ckpt,
                reason: "hash differs from the recorded base ledger".into(),
            }));
        }
        println!("reusing base checkpoint {}", ckpt.display());
        return Ok((snap, record.ledger));
    }
    std::fs::create_dir_all(dir).map_err(|e| CliError::config(e.to_string()))?;
    let trainer = Trainer::new(dataset, config.run_config()).map_err(CliError::config_from)?;
    let mut ledger = trainer.empty_ledger();
    let snap = trainer.train_base(&plan.base_identities, &mut ledger, printer).map_err(CliError::training)?;
    save_checkpoint(&snap, &ckpt).map_err(CliError::training)?;
    let body = serde_json::to_string_pretty(&BaseRecord { key, ledger: ledger.clone() }).expect("serializes");
    std::fs::write(&record_path, body).map_err(|e| CliError::config(e.to_string()))?;
    Ok((snap, ledger))
}

fn mark(on: bool) -> &'static str {
    if on {
        "x"
    } else {
        "-"
    }
}

fn va(reports: &[EvalReport], suite: &str, step: usize) -> Option<f64> {
    reports.iter().find(|r| r.suite == suite && r.step_index == step).map(|r| r.va_mean)
}

pub fn ablate(args: AblateArgs) -> CliResult<()> {
    let config = CliConfig::load(&args.config.config, &args.config.all_overrides(None))?;
    if config.ablation.is_empty() {
        eprintln!("warning: the ablation grid is empty ([ablation] lists no masks, base_fractions or id_loss); nothing to run");
        return Ok(());
    }
    let cells = grid_cells(&config)?;
    let suites = if config.suites.is_empty() {
        None
    } else {
        Some(build_suites(&config.suites)?)
    };
    let dataset = train_dataset(&config)?;
    let name = args
        .name
        .clone()
        .or_else(|| config.ablation.name.clone())
        .unwrap_or_else(|| "ablation".into());
    let grid_root = run_root().join(name);
    println!("{} grid cells under {}", cells.len(), grid_root.display());

    let mut summary = Vec::new();
    let mut base: Option<(f64, StepPlan, ModelSnapshot, RunLedger)> = None;
    for cell in &cells {
        let cell_cfg = cell.config(&config);
        if base.as_ref().is_none_or(|b| b.0 != cell.base_fraction) {
            let plan = plan_from_config(&config, &dataset, cell.base_fraction)?;
            let mut printer = EpochPrinter {
                quiet: args.quiet,
                prefix: format!("[base bf{:.2}] ", cell.base_fraction),
            };
            let (snap, ledger) = shared_base(&grid_root.join("bases"), &cell_cfg, &dataset, &plan, &mut printer)?;
            base = Some((cell.base_fraction, plan, snap, ledger));
        }
        let (_, plan, snap, ledger) = base.as_ref().expect("base set above");
        let root = grid_root.join(cell.dir_name());
        let mut printer = EpochPrinter {
            quiet: args.quiet,
            prefix: format!("[{}] ", cell.dir_name()),
        };
        let resume = root.join("config.json").is_file();
        train_run(&root, &cell_cfg, &dataset, plan, resume, &mut printer, Some((snap, ledger)))?;
        let reports = match &suites {
            Some(s) => {
                let r = evaluate_run(&root, s)?;
                write_reports(&root, &r)?;
                r
            }
            None => Vec::new(),
        };
        summary.push((cell.clone(), plan.step_count, reports));
    }

    let suite_names: Vec<String> = config.suites.iter().map(|s| s.name.clone()).collect();
    let mut header = format!("{:<6} {:<5} {:<5} {:<5} {:<5}", "base", "msfd", "gpkd", "ckd", "id");
    let mut csv = String::from("base_fraction,msfd,gpkd,ckd,id_loss,suite,va_base,va_final\n");
    for s in &suite_names {
        header.push_str(&format!(" {:>12} {:>12}", format!("{s}@0"), format!("{s}@T")));
    }
    println!("{header}");
    for (cell, steps, reports) in &summary {
        let m = cell.mask;
        let mut line = format!(
            "{:<6.2} {:<5} {:<5} {:<5} {:<5}",
            cell.base_fraction,
            mark(m.msfd),
            mark(m.gpkd),
            mark(m.ckd),
            mark(cell.id_loss)
        );
        for s in &suite_names {
            let (b, f) = (va(reports, s, 0), va(reports, s, *steps));
            let fmt = |v: Option<f64>| v.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
            line.push_str(&format!(" {:>12} {:>12}", fmt(b), fmt(f)));
            csv.push_str(&format!(
                "{},{},{},{},{},{s},{},{}\n",
                cell.base_fraction,
                m.msfd,
                m.gpkd,
                m.ckd,
                cell.id_loss,
                b.unwrap_or(f64::NAN),
                f.unwrap_or(f64::NAN)
            ));
        }
        println!("{line}");
    }
    std::fs::create_dir_all(&grid_root).map_err(|e| CliError::config(e.to_string()))?;
    let path = grid_root.join("summary.csv");
    std::fs::write(&path, csv).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    println!("summary written to {}", path.display());
    Ok(())
}
