use serde::{Deserialize, Serialize};

use crate::eval::EvalReport;
use crate::losses::LossBreakdown;
use crate::{Error, Result};

pub const LEDGER_CSV_HEADER: &str = "step,epoch,msfd,gpkd,ckd,id,total,lr,wall_clock";

/// Mean loss components of one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub step: usize,
    /// 1-based.
    pub epoch: usize,
    pub loss: LossBreakdown,
    pub lr: f64,
    /// Seconds spent in this epoch.
    pub wall_clock: f64,
}

impl EpochRecord {
    pub fn to_csv_row(&self) -> String {
        let id = self.loss.id.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.step,
            self.epoch,
            self.loss.msfd,
            self.loss.gpkd,
            self.loss.ckd,
            id,
            self.loss.total,
            self.lr,
            self.wall_clock
        )
    }

    pub fn from_csv_row(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != 9 {
            return Err(Error::validation(format!("ledger row has {} fields: {line:?}", f.len())));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::validation(format!("bad number {s:?} in ledger row")))
        };
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::validation(format!("bad integer {s:?} in ledger row")))
        };
        Ok(EpochRecord {
            step: int(f[0])?,
            epoch: int(f[1])?,
            loss: LossBreakdown {
                msfd: num(f[2])?,
                gpkd: num(f[3])?,
                ckd: num(f[4])?,
                id: if f[5].is_empty() { None } else { Some(num(f[5])?) },
                total: num(f[6])?,
            },
            lr: num(f[7])?,
            wall_clock: num(f[8])?,
        })
    }
}

/// Outcome of one completed step of the lifelong chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub checkpoint_hash: String,
    /// Hash of the teacher the step started from (`None` for base/joint).
    pub parent_hash: Option<String>,
    pub teacher_hash_before: Option<String>,
    pub teacher_hash_after: Option<String>,
    /// Objective at the very first batch, before any update.
    pub first_batch: Option<LossBreakdown>,
    pub identities: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunLedger {
    pub seed: u64,
    pub config_hash: String,
    pub mode: Option<String>,
    pub epochs: Vec<EpochRecord>,
    pub steps: Vec<StepRecord>,
    pub reports: Vec<EvalReport>,
    pub wall_clock: f64,
}

impl RunLedger {
    pub fn epochs_of(&self, step: usize) -> impl Iterator<Item = &EpochRecord> {
        self.epochs.iter().filter(move |e| e.step == step)
    }

    pub fn step(&self, step: usize) -> Option<&StepRecord> {
        self.steps.iter().find(|s| s.step == step)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(LEDGER_CSV_HEADER);
        out.push('\n');
        for e in &self.epochs {
            out.push_str(&e.to_csv_row());
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Vec<EpochRecord>> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == LEDGER_CSV_HEADER => {}
            _ => return Err(Error::validation("ledger CSV header is missing")),
        }
        lines
            .filter(|l| !l.trim().is_empty())
            .map(EpochRecord::from_csv_row)
            .collect()
    }

    /// Largest difference between two ledgers' loss traces, ignoring timing.
    /// `None` when the traces differ in structure.
    pub fn max_loss_difference(&self, other: &RunLedger) -> Option<f64> {
        if self.epochs.len() != other.epochs.len() {
            return None;
        }
        let mut worst: f64 = 0.0;
        for (a, b) in self.epochs.iter().zip(&other.epochs) {
            if (a.step, a.epoch) != (b.step, b.epoch) || a.loss.id.is_some() != b.loss.id.is_some() {
                return None;
            }
            let pairs = [
                (a.loss.msfd, b.loss.msfd),
                (a.loss.gpkd, b.loss.gpkd),
                (a.loss.ckd, b.loss.ckd),
                (a.loss.id.unwrap_or(0.0), b.loss.id.unwrap_or(0.0)),
                (a.loss.total, b.loss.total),
                (a.lr, b.lr),
            ];
            for (x, y) in pairs {
                worst = worst.max((x - y).abs());
            }
        }
        Some(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_row_roundtrip() {
        let rec = EpochRecord {
            step: 2,
            epoch: 3,
            loss: LossBreakdown {
                msfd: 0.1,
                gpkd: 1e-17,
                ckd: 2.5,
                id: None,
                total: 2.8,
            },
            lr: 0.0081,
            wall_clock: 0.25,
        };
        let row = rec.to_csv_row();
        assert_eq!(row.split(',').nth(5), Some(""));
        assert_eq!(EpochRecord::from_csv_row(&row).unwrap(), rec);
        let with_id = EpochRecord {
            loss: LossBreakdown { id: Some(4.0), ..rec.loss },
            ..rec
        };
        assert_eq!(EpochRecord::from_csv_row(&with_id.to_csv_row()).unwrap(), with_id);
    }

    #[test]
    fn parse_rejects_missing_header() {
        assert!(RunLedger::parse_csv("0,1,0,0,0,,0,0.1,0\n").is_err());
    }
}
