use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use ndarray::Array2;

use super::{EpochRecord, Mode, RunConfig, RunLedger, StepRecord};
use crate::data::{shuffled_batches, unique_identity_batches, IdentityDataset, StepPlan};
use crate::eval::{evaluate_step, EvalReport, EvalSuite};
use crate::losses::{distillation_objective, id_margin_loss_grad, total_loss, LossBreakdown};
use crate::model::{Backbone, BackboneSpec, BatchFeatures, MarginHead, MarginHeadConfig, ModelSnapshot};
use crate::nn::Sgd;
use crate::rng::derive_seed;
use crate::{Error, Result};

/// Callbacks fired while a run progresses.
pub trait RunObserver {
    fn on_epoch(&mut self, _record: &EpochRecord) -> Result<()> {
        Ok(())
    }

    /// Called once per completed step with the frozen snapshot; returned
    /// reports are appended to the ledger.
    fn on_step(&mut self, _snapshot: &ModelSnapshot, _record: &StepRecord) -> Result<Vec<EvalReport>> {
        Ok(Vec::new())
    }
}

pub struct NoopObserver;

impl RunObserver for NoopObserver {}

/// Evaluates every completed step on a fixed set of suites.
pub struct EvalObserver<'s> {
    pub suites: &'s [EvalSuite],
}

impl RunObserver for EvalObserver<'_> {
    fn on_step(&mut self, snapshot: &ModelSnapshot, record: &StepRecord) -> Result<Vec<EvalReport>> {
        evaluate_step(snapshot, record.step, self.suites)
    }
}

/// Drives base training, incremental steps and the reference baselines over
/// one dataset.
pub struct Trainer<'a> {
    dataset: &'a IdentityDataset,
    spec: BackboneSpec,
    config: RunConfig,
}

// Seed paths under the run seed.
const SEED_BACKBONE: u64 = 0;
const SEED_HEAD: u64 = 1;
const SEED_BATCHES: u64 = 2;

struct StepData {
    indices: Vec<usize>,
    identities: Vec<u32>,
    /// Dense label per position of `indices`, ordered by identity.
    labels: Vec<usize>,
    num_classes: usize,
}

impl<'a> Trainer<'a> {
    pub fn new(dataset: &'a IdentityDataset, config: RunConfig) -> Result<Self> {
        config.validate()?;
        let shape = dataset
            .image_shape()
            .ok_or_else(|| Error::validation("training dataset is empty"))?;
        let spec = config.model.backbone_spec(shape)?;
        Ok(Self { dataset, spec, config })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn spec(&self) -> &BackboneSpec {
        &self.spec
    }

    fn seed(&self, path: &[u64]) -> u64 {
        derive_seed(self.config.train.seed, path)
    }

    fn step_data(&self, identities: &BTreeSet<u32>) -> Result<StepData> {
        let indices = self.dataset.indices_of(identities);
        if indices.is_empty() {
            return Err(Error::validation("step has no training samples"));
        }
        let ids = self.dataset.identities_at(&indices);
        let present: BTreeSet<u32> = ids.iter().copied().collect();
        let dense: BTreeMap<u32, usize> = present.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let labels = ids.iter().map(|id| dense[id]).collect();
        Ok(StepData {
            indices,
            identities: ids,
            labels,
            num_classes: present.len(),
        })
    }

    fn head(&self, num_classes: usize, seed: u64) -> Result<MarginHead> {
        let config = MarginHeadConfig {
            num_classes,
            scale: self.config.train.margin_scale,
            margin: self.config.train.margin,
        };
        MarginHead::new(config, self.spec.embedding_dim, seed)
    }

    fn sgd_step(opt: &mut Sgd, lr: f64, model: &mut Backbone, grads: &Backbone, head: Option<(&mut MarginHead, &Array2<f64>)>) {
        let grad_tensors = grads.named_tensors();
        let mut grad_slices: Vec<&[f64]> = grad_tensors.iter().map(|(_, _, v)| *v).collect();
        let mut params = model.tensors_mut();
        if let Some((head, grad_w)) = head {
            params.push(head.weight.as_slice_mut().expect("standard layout"));
            grad_slices.push(grad_w.as_slice().expect("standard layout"));
        }
        opt.step(lr, &mut params, &grad_slices);
    }

    fn check_finite(loss: &LossBreakdown, step: usize, epoch: usize) -> Result<()> {
        if loss.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite {
                step,
                epoch,
                detail: format!("loss {loss:?}; the learning rate is probably too high"),
            })
        }
    }

    fn check_embeddings(features: &BatchFeatures, step: usize, epoch: usize) -> Result<()> {
        if features.embeddings.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite {
                step,
                epoch,
                detail: "embeddings diverged; the learning rate is probably too high".into(),
            })
        }
    }

    /// Margin-loss training of `model` on `data`; the head is dropped at the
    /// end. Used for base, joint and fine-tuning steps.
    #[allow(clippy::too_many_arguments)]
    fn margin_training(
        &self,
        model: &mut Backbone,
        data: &StepData,
        step: usize,
        epochs: usize,
        lr_of: &dyn Fn(usize) -> f64,
        ledger: &mut RunLedger,
        observer: &mut dyn RunObserver,
    ) -> Result<()> {
        if data.num_classes < 2 {
            return Err(Error::validation(format!(
                "margin training needs at least 2 identities, step {step} has {}",
                data.num_classes
            )));
        }
        let mut head = self.head(data.num_classes, self.seed(&[SEED_HEAD, step as u64]))?;
        let mut opt = Sgd::new(self.config.train.sgd());
        let no_maps = vec![None; self.spec.stage_count];
        for epoch in 1..=epochs {
            let started = Instant::now();
            let lr = lr_of(epoch);
            let batches = shuffled_batches(
                data.indices.len(),
                self.config.train.batch_size,
                self.seed(&[SEED_BATCHES, step as u64, epoch as u64]),
            );
            let mut losses = Vec::with_capacity(batches.len());
            for batch in batches {
                let global: Vec<usize> = batch.iter().map(|&p| data.indices[p]).collect();
                let labels: Vec<usize> = batch.iter().map(|&p| data.labels[p]).collect();
                let x = self.dataset.batch(&global);
                let (features, cache) = model.forward_train(x.view())?;
                Self::check_embeddings(&features, step, epoch)?;
                let fwd = head.logits(features.embeddings.view(), &labels)?;
                let (ce, grad_logits) = id_margin_loss_grad(fwd.logits.view(), &labels)?;
                let loss = LossBreakdown {
                    msfd: 0.0,
                    gpkd: 0.0,
                    ckd: 0.0,
                    id: Some(ce),
                    total: ce,
                };
                Self::check_finite(&loss, step, epoch)?;
                let (grad_emb, grad_w) = head.backward(features.embeddings.view(), &fwd, &labels, &grad_logits);
                let grads = model.backward(&cache, &no_maps, Some(&grad_emb));
                Self::sgd_step(&mut opt, lr, model, &grads, Some((&mut head, &grad_w)));
                losses.push(loss);
            }
            self.finish_epoch(step, epoch, lr, &losses, started, ledger, observer)?;
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn finish_epoch(
        &self,
        step: usize,
        epoch: usize,
        lr: f64,
        losses: &[LossBreakdown],
        started: Instant,
        ledger: &mut RunLedger,
        observer: &mut dyn RunObserver,
    ) -> Result<()> {
        let loss = LossBreakdown::mean(losses)
            .ok_or_else(|| Error::validation(format!("step {step} epoch {epoch} produced no batches")))?;
        let record = EpochRecord {
            step,
            epoch,
            loss,
            lr,
            wall_clock: started.elapsed().as_secs_f64(),
        };
        observer.on_epoch(&record)?;
        ledger.epochs.push(record);
        Ok(())
    }

    fn complete_step(
        &self,
        snapshot: &ModelSnapshot,
        mut record: StepRecord,
        ledger: &mut RunLedger,
        observer: &mut dyn RunObserver,
    ) -> Result<()> {
        record.checkpoint_hash = snapshot.checksum();
        let reports = observer.on_step(snapshot, &record)?;
        ledger.steps.push(record);
        ledger.reports.extend(reports);
        Ok(())
    }

    fn step_record(step: usize, data: &StepData, parent: Option<&ModelSnapshot>) -> StepRecord {
        let hash = parent.map(ModelSnapshot::checksum);
        StepRecord {
            step,
            checkpoint_hash: String::new(),
            parent_hash: hash.clone(),
            teacher_hash_before: hash,
            teacher_hash_after: None,
            first_batch: None,
            identities: data.num_classes,
            samples: data.indices.len(),
        }
    }

    /// Margin-loss training of a fresh backbone; returns the frozen `M_0`.
    pub fn train_base(
        &self,
        identities: &BTreeSet<u32>,
        ledger: &mut RunLedger,
        observer: &mut dyn RunObserver,
    ) -> Result<ModelSnapshot> {
        let data = self.step_data(identities)?;
        let mut model = Backbone::init(&self.spec, self.seed(&[SEED_BACKBONE]));
        let train = &self.config.train;
        let lr_of = |e: usize| train.base_schedule.lr(train.lr_base, e);
        self.margin_training(&mut model, &data, 0, train.base_epochs, &lr_of, ledger, observer)?;
        let snapshot = ModelSnapshot::new(model, 0).freeze();
        self.complete_step(&snapshot, Self::step_record(0, &data, None), ledger, observer)?;
        Ok(snapshot)
    }

    /// One distillation step from a frozen teacher.
    pub fn train_incremental_step(
        &self,
        teacher: &ModelSnapshot,
        identities: &BTreeSet<u32>,
        ledger: &mut RunLedger,
        observer: &mut dyn RunObserver,
    ) -> Result<ModelSnapshot> {
        if !teacher.is_frozen() {
            return Err(Error::Contract(format!(
                "teacher for step {} must be frozen",
                teacher.step_index() + 1
            )));
        }
        let step = teacher.step_index() + 1;
        let data = self.step_data(identities)?;
        let mut record = Self::step_record(step, &data, Some(teacher));
        let mut student = teacher.clone_as_student();
        let loss_cfg = self.config.loss;
        let train = &self.config.train;
        let mut head = if loss_cfg.include_id_loss {
            Some(self.head(data.num_classes, self.seed(&[SEED_HEAD, step as u64]))?)
        } else {
            None
        };
        // Every batch must hold distinct identities; small steps get smaller batches.
        let batch_size = train.batch_size.min(data.num_classes);
        let mut opt = Sgd::new(train.sgd());
        for epoch in 1..=train.incr_epochs {
            let started = Instant::now();
            let lr = train.incr_schedule.lr(train.lr_incr, epoch);
            let batches = unique_identity_batches(
                &data.identities,
                batch_size,
                self.seed(&[SEED_BATCHES, step as u64, epoch as u64]),
            )?;
            let mut losses = Vec::with_capacity(batches.len());
            for batch in batches {
                let global: Vec<usize> = batch.iter().map(|&p| data.indices[p]).collect();
                let x = self.dataset.batch(&global);
                let target = teacher.forward(x.view())?;
                let model = student.parameters_mut()?;
                let (features, cache) = model.forward_train(x.view())?;
                Self::check_embeddings(&features, step, epoch)?;
                let ((msfd, gpkd, ckd), mut grads) = distillation_objective(&features, &target, &loss_cfg)?;
                let mut id_grad = None;
                let mut id = None;
                if let Some(head) = &head {
                    let labels: Vec<usize> = batch.iter().map(|&p| data.labels[p]).collect();
                    let fwd = head.logits(features.embeddings.view(), &labels)?;
                    let (ce, grad_logits) = id_margin_loss_grad(fwd.logits.view(), &labels)?;
                    let (grad_emb, grad_w) = head.backward(features.embeddings.view(), &fwd, &labels, &grad_logits);
                    grads.embeddings += &grad_emb;
                    id = Some(ce);
                    id_grad = Some(grad_w);
                }
                let loss = total_loss(msfd, gpkd, ckd, id, &loss_cfg);
                Self::check_finite(&loss, step, epoch)?;
                if record.first_batch.is_none() {
                    record.first_batch = Some(loss);
                }
                losses.push(loss);
                if loss_cfg.is_null() {
                    continue;
                }
                let param_grads = model.backward(&cache, &grads.stage_maps, Some(&grads.embeddings));
                let head_update = head.as_mut().zip(id_grad.as_ref());
                Self::sgd_step(&mut opt, lr, model, &param_grads, head_update);
            }
            self.finish_epoch(step, epoch, lr, &losses, started, ledger, observer)?;
        }
        record.teacher_hash_after = Some(teacher.checksum());
        let snapshot = student.freeze();
        self.complete_step(&snapshot, record, ledger, observer)?;
        Ok(snapshot)
    }

    /// Margin-loss update of the previous model on the new identities only.
    pub fn train_finetune_step(
        &self,
        previous: &ModelSnapshot,
        identities: &BTreeSet<u32>,
        ledger: &mut RunLedger,
        observer: &mut dyn RunObserver,
    ) -> Result<ModelSnapshot> {
        let step = previous.step_index() + 1;
        let data = self.step_data(identities)?;
        let mut record = Self::step_record(step, &data, Some(previous));
        let mut student = previous.clone_as_student();
        let train = &self.config.train;
        let lr_of = |e: usize| train.incr_schedule.lr(train.lr_incr, e);
        self.margin_training(student.parameters_mut()?, &data, step, train.incr_epochs, &lr_of, ledger, observer)?;
        record.teacher_hash_after = Some(previous.checksum());
        let snapshot = student.freeze();
        self.complete_step(&snapshot, record, ledger, observer)?;
        Ok(snapshot)
    }

    /// The base model is carried forward unchanged.
    fn feature_extract_step(
        &self,
        base: &ModelSnapshot,
        step: usize,
        identities: &BTreeSet<u32>,
        ledger: &mut RunLedger,
        observer: &mut dyn RunObserver,
    ) -> Result<ModelSnapshot> {
        let data = self.step_data(identities)?;
        let mut record = Self::step_record(step, &data, Some(base));
        record.teacher_hash_after = Some(base.checksum());
        self.complete_step(base, record, ledger, observer)?;
        Ok(base.clone())
    }

    /// Single margin-loss run on the union of every step's identities.
    pub fn run_baseline_joint(
        &self,
        plan: &StepPlan,
        ledger: &mut RunLedger,
        observer: &mut dyn RunObserver,
    ) -> Result<ModelSnapshot> {
        self.train_base(&plan.union(), ledger, observer)
    }

    /// Ledger header for a fresh run of this configuration.
    pub fn empty_ledger(&self) -> RunLedger {
        RunLedger {
            seed: self.config.train.seed,
            config_hash: self.config.hash(),
            mode: Some(self.config.train.mode.as_str().to_string()),
            ..RunLedger::default()
        }
    }

    /// Runs the configured mode over the whole plan. Returns the ledger and
    /// one snapshot per completed step (a single one for joint training).
    pub fn run_lifelong(&self, plan: &StepPlan, observer: &mut dyn RunObserver) -> Result<(RunLedger, Vec<ModelSnapshot>)> {
        self.resume_lifelong(plan, Vec::new(), self.empty_ledger(), observer)
    }

    /// Continue a run whose first `done.len()` steps are already complete.
    /// `ledger` must hold exactly the records of those steps.
    pub fn resume_lifelong(
        &self,
        plan: &StepPlan,
        mut done: Vec<ModelSnapshot>,
        mut ledger: RunLedger,
        observer: &mut dyn RunObserver,
    ) -> Result<(RunLedger, Vec<ModelSnapshot>)> {
        plan.check_against(self.dataset)?;
        let header = self.empty_ledger();
        ledger.seed = header.seed;
        ledger.config_hash = header.config_hash;
        ledger.mode = header.mode;
        let started = Instant::now();
        let mode = self.config.train.mode;
        let total_steps = mode.checkpoint_count(plan.step_count);
        if done.len() > total_steps {
            return Err(Error::validation(format!(
                "{} checkpoints exist but the plan has only {total_steps} steps",
                done.len()
            )));
        }
        for (t, snap) in done.iter().enumerate() {
            if !snap.is_frozen() {
                return Err(Error::Contract(format!("checkpoint {t} is not frozen")));
            }
        }
        for t in done.len()..total_steps {
            let snapshot = match (mode, t) {
                (Mode::Joint, _) => self.run_baseline_joint(plan, &mut ledger, observer)?,
                (_, 0) => self.train_base(plan.identities(0), &mut ledger, observer)?,
                (Mode::Clface, _) => self.train_incremental_step(&done[t - 1], plan.identities(t), &mut ledger, observer)?,
                (Mode::Finetune, _) => self.train_finetune_step(&done[t - 1], plan.identities(t), &mut ledger, observer)?,
                (Mode::FeatureExtract, _) => {
                    self.feature_extract_step(&done[0], t, plan.identities(t), &mut ledger, observer)?
                }
            };
            done.push(snapshot);
        }
        ledger.wall_clock += started.elapsed().as_secs_f64();
        Ok((ledger, done))
    }
}
