use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{EpochRecord, RunConfig, RunLedger, RunObserver, StepRecord, LEDGER_CSV_HEADER};
use crate::data::StepPlan;
use crate::eval::EvalReport;
use crate::model::{load_checkpoint, save_checkpoint, ModelSnapshot};
use crate::{Error, Result};

/// On-disk layout of one run:
///
/// ```text
/// config.json  plan.json  ledger.csv  ledger.json
/// checkpoints/step_000.ckpt ...
/// reports/
/// ```
#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

impl RunDir {
    /// Create a new run directory, or reopen one written with the same
    /// config and plan.
    pub fn create(root: impl Into<PathBuf>, config: &RunConfig, plan: &StepPlan) -> Result<Self> {
        let dir = Self { root: root.into() };
        fs::create_dir_all(dir.root.join("checkpoints"))?;
        fs::create_dir_all(dir.reports_dir())?;
        let config_json = serde_json::to_string_pretty(config)?;
        let plan_json = plan.to_json()?;
        for (path, body) in [(dir.config_path(), &config_json), (dir.plan_path(), &plan_json)] {
            match fs::read_to_string(&path) {
                Ok(existing) if existing == *body => {}
                Ok(_) => {
                    return Err(Error::config(format!(
                        "{} already exists with different contents",
                        path.display()
                    )))
                }
                Err(_) => write_atomic(&path, body.as_bytes())?,
            }
        }
        Ok(dir)
    }

    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let dir = Self { root: root.into() };
        if !dir.config_path().is_file() || !dir.plan_path().is_file() {
            return Err(Error::config(format!(
                "{} is not a run directory (config.json or plan.json missing)",
                dir.root.display()
            )));
        }
        Ok(dir)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config_path(&self) -> PathBuf {
        self.root.join("config.json")
    }

    pub fn plan_path(&self) -> PathBuf {
        self.root.join("plan.json")
    }

    pub fn ledger_csv_path(&self) -> PathBuf {
        self.root.join("ledger.csv")
    }

    pub fn ledger_json_path(&self) -> PathBuf {
        self.root.join("ledger.json")
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.root.join("reports")
    }

    pub fn checkpoint_path(&self, step: usize) -> PathBuf {
        self.root.join("checkpoints").join(format!("step_{step:03}.ckpt"))
    }

    pub fn config(&self) -> Result<RunConfig> {
        let text = fs::read_to_string(self.config_path())?;
        serde_json::from_str(&text).map_err(|e| Error::config(format!("config.json: {e}")))
    }

    pub fn plan(&self) -> Result<StepPlan> {
        StepPlan::from_json(&fs::read_to_string(self.plan_path())?)
    }

    pub fn ledger(&self) -> Result<RunLedger> {
        let text = fs::read_to_string(self.ledger_json_path())?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Number of leading steps whose checkpoints exist.
    pub fn completed_steps(&self) -> usize {
        (0..).take_while(|&t| self.checkpoint_path(t).is_file()).count()
    }

    /// Steps in `0..expected` with no checkpoint file.
    pub fn missing_steps(&self, expected: usize) -> Vec<usize> {
        (0..expected).filter(|&t| !self.checkpoint_path(t).is_file()).collect()
    }

    pub fn load_checkpoints(&self, count: usize) -> Result<Vec<ModelSnapshot>> {
        (0..count).map(|t| load_checkpoint(&self.checkpoint_path(t))).collect()
    }

    /// Checkpoints and ledger of the completed prefix of the run. Records of
    /// a step that was interrupted are dropped from the ledger files.
    pub fn resume_state(&self) -> Result<(Vec<ModelSnapshot>, RunLedger)> {
        let done = self.completed_steps();
        let snapshots = self.load_checkpoints(done)?;
        let mut ledger = if self.ledger_json_path().is_file() {
            self.ledger()?
        } else {
            RunLedger::default()
        };
        ledger.epochs.retain(|e| e.step < done);
        ledger.steps.retain(|s| s.step < done);
        ledger.reports.retain(|r| r.step_index < done);
        if ledger.steps.len() != done {
            return Err(Error::Checkpoint {
                path: self.root.clone(),
                reason: format!(
                    "{done} checkpoints on disk but the ledger records {} steps",
                    ledger.steps.len()
                ),
            });
        }
        for (snap, rec) in snapshots.iter().zip(&ledger.steps) {
            if snap.checksum() != rec.checkpoint_hash {
                return Err(Error::Checkpoint {
                    path: self.checkpoint_path(rec.step),
                    reason: "checkpoint hash differs from the ledger".into(),
                });
            }
        }
        write_atomic(&self.ledger_csv_path(), ledger.to_csv().as_bytes())?;
        self.write_ledger(&ledger)?;
        Ok((snapshots, ledger))
    }

    pub fn write_ledger(&self, ledger: &RunLedger) -> Result<()> {
        write_atomic(&self.ledger_json_path(), serde_json::to_string_pretty(ledger)?.as_bytes())
    }

    fn append_csv_row(&self, record: &EpochRecord) -> Result<()> {
        let path = self.ledger_csv_path();
        let fresh = !path.is_file();
        let mut file = OpenOptions::new().create(true).append(true).open(&path)?;
        if fresh {
            writeln!(file, "{LEDGER_CSV_HEADER}")?;
        }
        writeln!(file, "{}", record.to_csv_row())?;
        Ok(())
    }

    /// First unused `reports/report_{k}` stem; existing reports are never
    /// overwritten.
    pub fn next_report_stem(&self) -> PathBuf {
        let dir = self.reports_dir();
        let k = (0..)
            .find(|k| {
                !dir.join(format!("report_{k}.csv")).exists() && !dir.join(format!("report_{k}.json")).exists()
            })
            .expect("unbounded search");
        dir.join(format!("report_{k}"))
    }
}

/// Persists every epoch row, checkpoint and ledger update of a run, then
/// forwards to an inner observer.
pub struct RunDirObserver<'o> {
    dir: RunDir,
    ledger: RunLedger,
    inner: Option<&'o mut dyn RunObserver>,
}

impl<'o> RunDirObserver<'o> {
    /// `ledger` is the state already on disk (empty for a new run).
    pub fn new(dir: RunDir, ledger: RunLedger, inner: Option<&'o mut dyn RunObserver>) -> Self {
        Self { dir, ledger, inner }
    }
}

impl RunObserver for RunDirObserver<'_> {
    fn on_epoch(&mut self, record: &EpochRecord) -> Result<()> {
        self.dir.append_csv_row(record)?;
        self.ledger.epochs.push(record.clone());
        if let Some(inner) = self.inner.as_deref_mut() {
            inner.on_epoch(record)?;
        }
        Ok(())
    }

    fn on_step(&mut self, snapshot: &ModelSnapshot, record: &StepRecord) -> Result<Vec<EvalReport>> {
        let reports = match self.inner.as_deref_mut() {
            Some(inner) => inner.on_step(snapshot, record)?,
            None => Vec::new(),
        };
        // Ledger first: a checkpoint on disk always has a ledger entry.
        self.ledger.steps.push(record.clone());
        self.ledger.reports.extend(reports.iter().cloned());
        self.dir.write_ledger(&self.ledger)?;
        save_checkpoint(snapshot, &self.dir.checkpoint_path(record.step))?;
        Ok(reports)
    }
}
