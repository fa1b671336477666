//! Checks behind the numbered acceptance criteria. Each returns a one-line
//! summary on success and a description of the first violation otherwise.

use std::time::Instant;

use lifelong_core::gradcheck::{central_difference, max_relative_error};
use lifelong_core::losses::{
    ckd_loss, ckd_loss_grad, gpkd_loss, gpkd_loss_grad, id_margin_loss, id_margin_loss_grad, msfd_loss,
    msfd_loss_grad, pool_normalize, total_loss, LossConfig,
};
use lifelong_core::model::{BatchFeatures, MarginHead, MarginHeadConfig};
use lifelong_core::nn::NORM_EPSILON;
use ndarray::{array, Array2, Array4, Axis};
use rand::Rng;

use super::*;

pub type Outcome = Result<String, String>;

fn close(name: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{name}: got {got}, expected {want} (tol {tol})"))
    }
}

fn stack(maps: Vec<Array4<f64>>, d: usize) -> BatchFeatures {
    let n = maps[0].dim().0;
    BatchFeatures {
        stage_maps: maps,
        embeddings: Array2::zeros((n, d)),
    }
}

pub const ORACLE_INSTANCES: usize = 60;
pub const GRADIENT_INSTANCES: usize = 25;

fn closed_form_cases() -> Result<usize, String> {
    let tol = 1e-6;
    let mut n = 0;
    let mut check = |name: &str, got: f64, want: f64| {
        n += 1;
        close(name, got, want, tol)
    };
    let p = pool_normalize(array![[[1.0, 3.0]], [[3.0, 1.0]]].view());
    check("pool_normalize [[1,3],[3,1]] x", p[0], 0.5f64.sqrt())?;
    check("pool_normalize [[1,3],[3,1]] y", p[1], 0.5f64.sqrt())?;
    let zero = pool_normalize(Array4::<f64>::zeros((1, 3, 2, 2)).index_axis(Axis(0), 0));
    check("pool_normalize zero map", zero.iter().map(|v| v.abs()).sum(), 0.0)?;

    let first = Array4::zeros((1, 1, 1, 2));
    let s = stack(vec![first.clone(), array![[[[1.0, 0.0]]]]], 1);
    let t = stack(vec![first, array![[[[0.0, 1.0]]]]], 1);
    check("msfd orthogonal", msfd_loss(&s, &t).map_err(|e| e.to_string())?, 2.0)?;
    check("msfd identical", msfd_loss(&s, &s).map_err(|e| e.to_string())?, 0.0)?;

    let e = array![[1.0, 2.0, -0.5], [0.3, -1.0, 2.0]];
    check("gpkd equal", gpkd_loss(e.view(), e.view()).unwrap(), 0.0)?;
    check("gpkd opposite", gpkd_loss((-&e).view(), e.view()).unwrap(), 2.0)?;
    let a = array![[1.0, 0.0], [0.0, 1.0]];
    let b = array![[0.0, 1.0], [1.0, 0.0]];
    check("gpkd orthogonal", gpkd_loss(a.view(), b.view()).unwrap(), 1.0)?;

    check("ckd single row", ckd_loss(array![[0.2, 0.4]].view(), array![[-1.0, 0.1]].view(), 2.0).unwrap(), 0.0)?;
    check("ckd orthogonal tau 2", ckd_loss(a.view(), a.view(), 2.0).unwrap(), 0.474077)?;

    let uniform = Array2::from_elem((2, 5), 0.7);
    check("ce uniform", id_margin_loss(uniform.view(), &[0, 4]).unwrap(), 5f64.ln())?;
    let peaked = array![[200.0, 0.0, 0.0]];
    check("ce saturated", id_margin_loss(peaked.view(), &[0]).unwrap(), 0.0)?;

    let cfg = LossConfig::default();
    check("total 3*0.1+12*0.05+1*0.2", total_loss(0.1, 0.05, 0.2, None, &cfg).total, 1.1)?;
    check("total zeros", total_loss(0.0, 0.0, 0.0, None, &cfg).total, 0.0)?;
    let no_gpkd = LossConfig { lambda2: 0.0, ..cfg };
    check(
        "total ignores gpkd at lambda2=0",
        total_loss(0.1, 1.7, 0.2, None, &no_gpkd).total,
        total_loss(0.1, 0.0, 0.2, None, &no_gpkd).total,
    )?;

    let head = |m: f64, s: f64| {
        let mut h = MarginHead::new(MarginHeadConfig { num_classes: 2, scale: s, margin: m }, 2, 0).unwrap();
        h.weight = array![[2.0, 0.0], [0.0, 1.0]];
        h
    };
    let emb = array![[3.0, 0.0]];
    let l = head(0.0, 1.0).logits(emb.view(), &[0]).unwrap().logits;
    check("margin logit m=0 s=1", l[[0, 0]], 1.0)?;
    let l = head(0.5, 64.0).logits(emb.view(), &[0]).unwrap().logits;
    check("margin logit m=0.5 s=64", l[[0, 0]], 64.0 * 0.5f64.cos())?;
    check("orthogonal non-target logit", l[[0, 1]], 0.0)?;
    Ok(n)
}

fn random_stages(rng: &mut ChaCha8Rng) -> Vec<(usize, usize, usize)> {
    let l = rng.random_range(2..=4);
    let mut h = 8;
    (0..l)
        .map(|_| {
            let dims = (rng.random_range(1..=4), h, h);
            h = (h / 2).max(1);
            dims
        })
        .collect()
}

/// Criterion 1.
pub fn loss_values() -> Outcome {
    let started = Instant::now();
    let closed = closed_form_cases()?;
    let mut rng = rng(101);
    let mut worst: f64 = 0.0;
    let mut check = |name: &str, got: f64, want: f64| -> Result<(), String> {
        worst = worst.max((got - want).abs());
        close(name, got, want, 1e-9)
    };
    for i in 0..ORACLE_INSTANCES {
        let stages = random_stages(&mut rng);
        let n = rng.random_range(1..=4);
        let d = rng.random_range(2..=6);
        let s = features(&mut rng, n, &stages, d);
        let t = features(&mut rng, n, &stages, d);
        check(&format!("msfd #{i}"), msfd_loss(&s, &t).unwrap(), msfd_oracle(&s, &t))?;
        let (se, te) = (&s.embeddings, &t.embeddings);
        check(&format!("gpkd #{i}"), gpkd_loss(se.view(), te.view()).unwrap(), gpkd_oracle(se, te))?;
        let tau = rng.random_range(0.1..4.0);
        check(&format!("ckd #{i}"), ckd_loss(se.view(), te.view(), tau).unwrap(), ckd_oracle(se, te, tau))?;

        let k = rng.random_range(2..=6);
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let logits = matrix(&mut rng, n, k) * 5.0;
        check(&format!("ce #{i}"), id_margin_loss(logits.view(), &labels).unwrap(), cross_entropy_oracle(&logits, &labels))?;

        let (scale, margin) = (rng.random_range(1.0..64.0), rng.random_range(0.0..1.2));
        let mut head = MarginHead::new(MarginHeadConfig { num_classes: k, scale, margin }, d, i as u64).unwrap();
        head.weight = matrix(&mut rng, k, d);
        let got = head.logits(se.view(), &labels).unwrap().logits;
        let want = margin_logits_oracle(se, &head.weight, &labels, scale, margin);
        for (g, w) in got.iter().zip(&want) {
            check(&format!("margin logits #{i}"), *g, *w)?;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    if secs >= 10.0 {
        return Err(format!("suite took {secs:.1}s (limit 10s)"));
    }
    Ok(format!(
        "{closed} closed-form cases within 1e-6; 5 losses x {ORACLE_INSTANCES} random instances, max |diff| {worst:.1e}; {secs:.2}s"
    ))
}

fn flat4(maps: &[Array4<f64>]) -> Vec<f64> {
    maps.iter().flat_map(|m| m.iter().copied()).collect()
}

fn unflat4(template: &[Array4<f64>], values: &[f64]) -> Vec<Array4<f64>> {
    let mut offset = 0;
    template
        .iter()
        .map(|m| {
            let n = m.len();
            let out = Array4::from_shape_vec(m.dim(), values[offset..offset + n].to_vec()).unwrap();
            offset += n;
            out
        })
        .collect()
}

const H: f64 = 1e-5;
const GRAD_TOL: f64 = 1e-4;

/// Worst relative error per loss over random instances.
pub fn gradient_errors(instances: usize, seed: u64) -> [(&'static str, f64); 4] {
    let mut rng = rng(seed);
    let mut worst = [("msfd", 0.0f64), ("gpkd", 0.0), ("ckd", 0.0), ("margin_ce", 0.0)];
    for _ in 0..instances {
        let stages = random_stages(&mut rng);
        let n = rng.random_range(1..=3);
        let d = rng.random_range(2..=6);
        let s = features(&mut rng, n, &stages, d);
        let t = features(&mut rng, n, &stages, d);

        let (_, grads) = msfd_loss_grad(&s, &t, NORM_EPSILON).unwrap();
        let analytic: Vec<f64> = grads
            .iter()
            .zip(&s.stage_maps)
            .flat_map(|(g, m)| match g {
                Some(g) => g.iter().copied().collect::<Vec<_>>(),
                None => vec![0.0; m.len()],
            })
            .collect();
        let numeric = central_difference(
            |v| {
                let probe = BatchFeatures {
                    stage_maps: unflat4(&s.stage_maps, v),
                    embeddings: s.embeddings.clone(),
                };
                msfd_loss(&probe, &t).unwrap()
            },
            &flat4(&s.stage_maps),
            H,
        );
        worst[0].1 = worst[0].1.max(max_relative_error(&analytic, &numeric));

        let point: Vec<f64> = s.embeddings.iter().copied().collect();
        let as_matrix = |v: &[f64]| Array2::from_shape_vec((n, d), v.to_vec()).unwrap();
        let te = t.embeddings.view();

        let (_, g) = gpkd_loss_grad(s.embeddings.view(), te, NORM_EPSILON).unwrap();
        let numeric = central_difference(|v| gpkd_loss(as_matrix(v).view(), te).unwrap(), &point, H);
        worst[1].1 = worst[1].1.max(max_relative_error(g.as_slice().unwrap(), &numeric));

        let tau = rng.random_range(0.2..4.0);
        let (_, g) = ckd_loss_grad(s.embeddings.view(), te, tau, NORM_EPSILON).unwrap();
        let numeric = central_difference(|v| ckd_loss(as_matrix(v).view(), te, tau).unwrap(), &point, H);
        worst[2].1 = worst[2].1.max(max_relative_error(g.as_slice().unwrap(), &numeric));

        // Margin CE through the head, w.r.t. embeddings and class weights.
        let k = rng.random_range(2..=5);
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let config = MarginHeadConfig {
            num_classes: k,
            scale: rng.random_range(1.0..4.0),
            margin: rng.random_range(0.1..0.6),
        };
        let mut head = MarginHead::new(config, d, 0).unwrap();
        head.weight = matrix(&mut rng, k, d);
        let fwd = head.logits(s.embeddings.view(), &labels).unwrap();
        let (_, grad_logits) = id_margin_loss_grad(fwd.logits.view(), &labels).unwrap();
        let (g_emb, g_w) = head.backward(s.embeddings.view(), &fwd, &labels, &grad_logits);
        let ce_of = |h: &MarginHead, emb: &Array2<f64>| {
            id_margin_loss(h.logits(emb.view(), &labels).unwrap().logits.view(), &labels).unwrap()
        };
        let numeric = central_difference(|v| ce_of(&head, &as_matrix(v)), &point, H);
        let mut err = max_relative_error(g_emb.as_slice().unwrap(), &numeric);
        let w_point: Vec<f64> = head.weight.iter().copied().collect();
        let numeric_w = central_difference(
            |v| {
                let mut h = head.clone();
                h.weight = Array2::from_shape_vec((k, d), v.to_vec()).unwrap();
                ce_of(&h, &s.embeddings)
            },
            &w_point,
            H,
        );
        err = err.max(max_relative_error(g_w.as_slice().unwrap(), &numeric_w));
        worst[3].1 = worst[3].1.max(err);
    }
    worst
}

/// Criterion 2.
pub fn gradients() -> Outcome {
    let started = Instant::now();
    let worst = gradient_errors(GRADIENT_INSTANCES, 202);
    let summary: Vec<String> = worst.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect();
    if let Some((name, e)) = worst.iter().find(|(_, e)| *e >= GRAD_TOL) {
        return Err(format!("{name} max relative error {e:.2e} >= {GRAD_TOL:e}"));
    }
    let secs = started.elapsed().as_secs_f64();
    if secs >= 60.0 {
        return Err(format!("gradient suite took {secs:.1}s (limit 60s)"));
    }
    Ok(format!(
        "{GRADIENT_INSTANCES} instances per loss, h={H:e}, max relative error: {}; {secs:.2}s",
        summary.join(", ")
    ))
}

/// Criterion 6.
pub fn eval_oracles() -> Outcome {
    use lifelong_core::eval::{rank_k_identification, tar_at_far, verification_accuracy_kfold};
    let started = Instant::now();
    let mut rng = rng(606);
    for trial in 0..100 {
        let n = rng.random_range(20..240);
        let k = if trial % 4 == 0 { rng.random_range(2..10) } else { 10 };
        let records = random_records(&mut rng, n);
        let got = verification_accuracy_kfold(&records, k).map_err(|e| e.to_string())?;
        let (accs, thresholds) = kfold_oracle(&records, k);
        if got.fold_accuracies != accs || got.thresholds != thresholds {
            return Err(format!("k-fold trial {trial} (n={n}, k={k}) differs from the exhaustive oracle"));
        }
        let mean = accs.iter().sum::<f64>() / k as f64;
        if got.va_mean != mean {
            return Err(format!("k-fold trial {trial}: va_mean {} vs {mean}", got.va_mean));
        }
    }

    let rec = |score: f64, is_genuine: bool| SimilarityRecord { score, is_genuine };
    let fixture = [rec(0.9, true), rec(0.8, true), rec(0.3, false), rec(0.1, false)];
    let out = tar_at_far(&fixture, &[0.0, 1.0]).map_err(|e| e.to_string())?;
    if out[0].threshold != 0.3 || out[0].tar != 1.0 || out[1].tar != 1.0 {
        return Err(format!("TAR fixture 1: {out:?}"));
    }
    // Ten impostors 0.05, 0.15, ..., 0.95 and genuine scores between them.
    let mut fixture: Vec<SimilarityRecord> = (0..10).map(|i| rec(0.05 + 0.1 * i as f64, false)).collect();
    fixture.extend([0.99, 0.9, 0.7, 0.5, 0.2].map(|s| rec(s, true)));
    let out = tar_at_far(&fixture, &[0.0, 0.1, 0.25, 0.5]).map_err(|e| e.to_string())?;
    // FAR 0: threshold 0.95 -> {0.99}; 0.1: one impostor allowed, threshold 0.85 ->
    // {0.99, 0.9}; 0.25: two allowed, threshold 0.75 -> same; 0.5: threshold 0.45 -> four.
    let expected = [(0.95, 0.2), (0.85, 0.4), (0.75, 0.4), (0.45, 0.8)];
    for (o, (thr, tar)) in out.iter().zip(expected) {
        if (o.threshold - thr).abs() > 1e-12 || (o.tar - tar).abs() > 1e-12 {
            return Err(format!("TAR fixture 2 at FAR {}: {o:?}, expected threshold {thr}, TAR {tar}", o.far));
        }
    }

    // Probe 0 matches gallery entry 2 (label 7), which ranks third of five.
    let probe = array![[1.0, 0.0]];
    let gallery = array![[1.0, 0.05], [0.99, 0.2], [0.9, 0.5], [0.2, 1.0], [-1.0, 0.0]];
    let cmc = rank_k_identification(probe.view(), &[7], gallery.view(), &[1, 2, 7, 3, 4], &[1, 2, 3, 5])
        .map_err(|e| e.to_string())?;
    if cmc != vec![(1, 0.0), (2, 0.0), (3, 1.0), (5, 1.0)] {
        return Err(format!("rank fixture: {cmc:?}"));
    }
    let cmc = rank_k_identification(gallery.view(), &[1, 2, 7, 3, 4], gallery.view(), &[1, 2, 7, 3, 4], &[1])
        .map_err(|e| e.to_string())?;
    if cmc != vec![(1, 1.0)] {
        return Err(format!("self-match CMC(1) = {cmc:?}"));
    }

    for trial in 0..100 {
        let n = rng.random_range(10..200);
        let mut records = random_records(&mut rng, n);
        records.push(rec(0.0, true));
        records.push(rec(0.0, false));
        let mut fars: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..1.0)).collect();
        fars.extend([0.0, 1.0]);
        fars.sort_by(f64::total_cmp);
        let tars: Vec<f64> = tar_at_far(&records, &fars).map_err(|e| e.to_string())?.iter().map(|t| t.tar).collect();
        if tars.windows(2).any(|w| w[1] < w[0]) {
            return Err(format!("TAR not monotone in FAR on trial {trial}: {tars:?}"));
        }

        let ids = rng.random_range(2..12);
        let d = rng.random_range(2..6);
        let gallery = matrix(&mut rng, ids, d);
        let labels: Vec<u32> = (0..ids as u32).collect();
        let probes_n = rng.random_range(1..20);
        let probes = matrix(&mut rng, probes_n, d);
        let probe_labels: Vec<u32> = (0..probes_n).map(|_| rng.random_range(0..ids as u32)).collect();
        let ks: Vec<usize> = (1..=ids).collect();
        let cmc = rank_k_identification(probes.view(), &probe_labels, gallery.view(), &labels, &ks)
            .map_err(|e| e.to_string())?;
        if cmc.windows(2).any(|w| w[1].1 < w[0].1) || cmc.last().map(|r| r.1) != Some(1.0) {
            return Err(format!("CMC not monotone on trial {trial}: {cmc:?}"));
        }
    }
    let secs = started.elapsed().as_secs_f64();
    if secs >= 30.0 {
        return Err(format!("evaluation oracle suite took {secs:.1}s (limit 30s)"));
    }
    Ok(format!(
        "k-fold equals the exhaustive oracle on 100 sets; TAR and rank fixtures exact; monotone on 100 trials each; {secs:.2}s"
    ))
}

use lifelong_core::data::{make_step_plan, synth_identities, Split};
use lifelong_core::eval::EvalReport;
use lifelong_core::trainer::{
    EvalObserver, LrSchedule, Mode, NoopObserver, RunConfig, RunDir, RunDirObserver, RunLedger, TrainConfig, Trainer,
};

/// Criteria 3 and 4 share one T=3 run.
pub fn three_step_run() -> (RunLedger, Vec<lifelong_core::model::ModelSnapshot>) {
    let data = toy::tiny_dataset();
    let plan = toy::tiny_plan(&data, 3);
    let trainer = Trainer::new(&data, toy::tiny_config(Mode::Clface)).unwrap();
    trainer.run_lifelong(&plan, &mut NoopObserver).unwrap()
}

/// Criterion 3.
pub fn warm_start(ledger: &RunLedger) -> Outcome {
    let mut worst: f64 = 0.0;
    let steps: Vec<_> = ledger.steps.iter().filter(|s| s.step > 0).collect();
    if steps.len() != 3 {
        return Err(format!("expected 3 incremental steps, ledger has {}", steps.len()));
    }
    for s in steps {
        let fb = s.first_batch.ok_or(format!("step {} logged no first batch", s.step))?;
        if !(fb.msfd < 1e-6 && fb.gpkd < 1e-6) {
            return Err(format!("step {}: first batch msfd {} gpkd {}", s.step, fb.msfd, fb.gpkd));
        }
        worst = worst.max(fb.msfd).max(fb.gpkd);
    }
    Ok(format!("first batch of steps 1-3: max(msfd, gpkd) = {worst:.1e}"))
}

/// Criterion 4.
pub fn teacher_freeze(ledger: &RunLedger, snapshots: &[lifelong_core::model::ModelSnapshot]) -> Outcome {
    for s in ledger.steps.iter().filter(|s| s.step > 0) {
        let teacher = &snapshots[s.step - 1];
        let now = teacher.checksum();
        if s.teacher_hash_before.as_deref() != Some(now.as_str()) || s.teacher_hash_after.as_deref() != Some(now.as_str()) {
            return Err(format!("teacher of step {} changed during the step", s.step));
        }
        if s.parent_hash.as_deref() != Some(ledger.steps[s.step - 1].checkpoint_hash.as_str()) {
            return Err(format!("step {} is not chained to checkpoint {}", s.step, s.step - 1));
        }
        if snapshots[s.step].checksum() == now {
            return Err(format!("student of step {} never moved away from its teacher", s.step));
        }
    }
    Ok("teacher checksum identical before and after steps 1-3; chain hashes link".into())
}

pub struct ForgettingRow {
    pub seed: u64,
    pub base: f64,
    pub joint: f64,
    pub clface: f64,
    pub finetune: f64,
}

pub const FORGETTING_SEEDS: [u64; 3] = [0, 1, 2];

fn final_va(reports: &[EvalReport]) -> f64 {
    reports.iter().max_by_key(|r| r.step_index).expect("at least one report").va_mean
}

pub fn forgetting_row(seed: u64) -> ForgettingRow {
    let data = synth_identities(&toy::forgetting_data(), Split::Train).unwrap();
    let plan = make_step_plan(&data, 0.5, 2, seed, false).unwrap();
    let suites = [toy::forgetting_suite()];
    let run = |mode| {
        let trainer = Trainer::new(&data, toy::forgetting_config(mode, seed)).unwrap();
        trainer.run_lifelong(&plan, &mut EvalObserver { suites: &suites }).unwrap().0
    };
    let clface = run(Mode::Clface);
    let finetune = run(Mode::Finetune);
    let joint = run(Mode::Joint);
    let base = clface.reports.iter().find(|r| r.step_index == 0).unwrap().va_mean;
    let finetune_base = finetune.reports.iter().find(|r| r.step_index == 0).unwrap().va_mean;
    assert_eq!(base, finetune_base, "both methods start from the same base model");
    ForgettingRow {
        seed,
        base,
        joint: final_va(&joint.reports),
        clface: final_va(&clface.reports),
        finetune: final_va(&finetune.reports),
    }
}

impl ForgettingRow {
    pub fn ordered(&self) -> bool {
        let drop_clface = self.base - self.clface;
        let drop_finetune = self.base - self.finetune;
        self.joint >= self.clface && self.clface >= self.finetune && drop_clface <= drop_finetune
    }
}

/// Criterion 5.
pub fn forgetting() -> Outcome {
    let started = Instant::now();
    let rows: Vec<ForgettingRow> = FORGETTING_SEEDS.iter().map(|&s| forgetting_row(s)).collect();
    let secs = started.elapsed().as_secs_f64();
    let table: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "seed {}: base {:.4} joint {:.4} clface {:.4} finetune {:.4}{}",
                r.seed,
                r.base,
                r.joint,
                r.clface,
                r.finetune,
                if r.ordered() { "" } else { " (order violated)" }
            )
        })
        .collect();
    let held = rows.iter().filter(|r| r.ordered()).count();
    let detail = format!("{}; {held}/{} seeds ordered; {secs:.0}s", table.join("; "), rows.len());
    if held * 2 > rows.len() && secs < 1800.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Criterion 7.
pub fn golden_config() -> Outcome {
    let want = serde_json::json!({
        "lambda1": 3.0, "lambda2": 12.0, "lambda3": 1.0, "tau": 2.0,
        "include_id_loss": false, "epsilon": 1e-12
    });
    let got = serde_json::to_value(LossConfig::default()).unwrap();
    if got != want {
        return Err(format!("LossConfig default {got} != {want}"));
    }
    let want = serde_json::json!({
        "base_epochs": 20, "incr_epochs": 10, "batch_size": 32,
        "lr_base": 0.1, "lr_incr": 0.01, "momentum": 0.9, "weight_decay": 0.0005,
        "base_schedule": {"kind": "step", "milestones": [6, 12], "factor": 0.1},
        "incr_schedule": {"kind": "exponential", "gamma": 0.9},
        "grad_clip": null, "margin_scale": 64.0, "margin": 0.5, "seed": 0, "mode": "clface"
    });
    let cfg = TrainConfig::default();
    let got = serde_json::to_value(&cfg).unwrap();
    if got != want {
        return Err(format!("TrainConfig default {got} != {want}"));
    }
    if TrainConfig::large_scale().batch_size != 256 {
        return Err("large-scale batch size is not 256".into());
    }
    let trace: Vec<f64> = (1..=cfg.base_epochs).map(|e| cfg.base_schedule.lr(cfg.lr_base, e)).collect();
    for (i, lr) in trace.iter().enumerate() {
        let want = match i + 1 {
            1..=6 => 0.1,
            7..=12 => 0.01,
            _ => 0.001,
        };
        if (lr - want).abs() > 1e-15 {
            return Err(format!("epoch {} lr {lr}, expected {want}", i + 1));
        }
    }
    if !matches!(cfg.incr_schedule, LrSchedule::Exponential { .. }) || cfg.incr_schedule.lr(cfg.lr_incr, 1) != 0.01 {
        return Err("incremental schedule does not start at 0.01 with exponential decay".into());
    }
    Ok("lambda 3/12/1, tau 2; momentum 0.9, wd 5e-4, lr 0.1 -> 0.01 -> 0.001 after epochs 6 and 12, lr_incr 0.01, 10 incremental epochs".into())
}

fn replay_once(root: &std::path::Path, config: &RunConfig) -> (RunLedger, Vec<u8>) {
    let data = toy::tiny_dataset();
    let plan = toy::tiny_plan(&data, 2);
    let suites = [toy::tiny_suite()];
    let dir = RunDir::create(root, config, &plan).unwrap();
    let trainer = Trainer::new(&data, config.clone()).unwrap();
    let mut eval = EvalObserver { suites: &suites };
    let mut observer = RunDirObserver::new(dir.clone(), trainer.empty_ledger(), Some(&mut eval));
    let (ledger, _) = trainer.run_lifelong(&plan, &mut observer).unwrap();
    dir.write_ledger(&ledger).unwrap();
    (dir.ledger().unwrap(), std::fs::read(dir.checkpoint_path(2)).unwrap())
}

/// Criterion 8.
pub fn determinism() -> Outcome {
    let config = toy::tiny_config(Mode::Clface);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (la, ca) = replay_once(a.path(), &config);
    let (lb, cb) = replay_once(b.path(), &config);
    let diff = la
        .max_loss_difference(&lb)
        .ok_or("ledgers differ in structure")?;
    if diff > 1e-9 {
        return Err(format!("loss ledgers differ by {diff:e}"));
    }
    if la.reports != lb.reports || la.reports.is_empty() {
        return Err("evaluation reports differ between replays".into());
    }
    if ca != cb {
        return Err("final checkpoints differ between replays".into());
    }
    Ok(format!(
        "two replays: {} epoch rows, max loss difference {diff:e}, {} identical reports, identical checkpoints",
        la.epochs.len(),
        la.reports.len()
    ))
}
