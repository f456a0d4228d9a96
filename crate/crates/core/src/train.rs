//! Parameter initialization, optimization and evaluation.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{forward, loss, loss_and_gradient, predict, GradientStore, LossKind, ParameterStore};
use crate::error::{Error, Result};
use crate::functions::Activation;
use crate::graph::{build_graph, prune_with, ComputationGraph, PruneMode};
use crate::ground::{ground_for_query, GroundConfig, QueryGrounding};
use crate::logic::{Example, SlotId, Symbol, Template};
use crate::tensor::{Shape, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Optimizer {
    Sgd,
    #[default]
    Adam,
}

impl FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(Optimizer::Sgd),
            "adam" => Ok(Optimizer::Adam),
            _ => Err(Error::Config(format!("unknown optimizer `{s}`"))),
        }
    }
}

impl fmt::Display for Optimizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Optimizer::Sgd => "sgd",
            Optimizer::Adam => "adam",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum InitScheme {
    /// Glorot uniform for matrices, U(-1, 1) for scalars and vectors.
    #[default]
    Glorot,
    Uniform(f64, f64),
    Constant(f64),
}

impl FromStr for InitScheme {
    type Err = Error;

    /// `glorot`, `uniform(a,b)` or `constant(c)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("unknown init scheme `{s}`"));
        if s == "glorot" {
            return Ok(InitScheme::Glorot);
        }
        let (name, rest) = s.split_once('(').ok_or_else(bad)?;
        let args: Vec<f64> = rest
            .strip_suffix(')')
            .ok_or_else(bad)?
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        match (name.trim(), args.as_slice()) {
            ("uniform", [a, b]) if a < b => Ok(InitScheme::Uniform(*a, *b)),
            ("constant", [c]) => Ok(InitScheme::Constant(*c)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for InitScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitScheme::Glorot => f.write_str("glorot"),
            InitScheme::Uniform(a, b) => write!(f, "uniform({a},{b})"),
            InitScheme::Constant(c) => write!(f, "constant({c})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub betas: (f64, f64),
    pub eps: f64,
    pub epochs: usize,
    pub seed: u64,
    pub loss: LossKind,
    pub init: InitScheme,
    /// Apply a sigmoid to identity-activated outputs under bce.
    pub auto_sigmoid: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            optimizer: Optimizer::Adam,
            learning_rate: 1e-3,
            betas: (0.9, 0.999),
            eps: 1e-8,
            epochs: 200,
            seed: 0,
            loss: LossKind::Bce,
            init: InitScheme::Glorot,
            auto_sigmoid: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        let (b1, b2) = self.betas;
        if !(0.0..1.0).contains(&b1) || !(0.0..1.0).contains(&b2) {
            return Err(Error::Config("adam betas must lie in [0, 1)".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::Config("adam epsilon must be positive".into()));
        }
        Ok(())
    }
}

/// Initial value of one slot.
fn init_tensor(shape: Shape, scheme: InitScheme, rng: &mut ChaCha8Rng) -> Tensor {
    let (lo, hi) = match scheme {
        InitScheme::Constant(c) => return Tensor::filled(shape, c),
        InitScheme::Uniform(a, b) => (a, b),
        InitScheme::Glorot if shape.is_column() => (-1.0, 1.0),
        InitScheme::Glorot => {
            let bound = (6.0 / (shape.rows + shape.cols) as f64).sqrt();
            (-bound, bound)
        }
    };
    let data = (0..shape.len()).map(|_| rng.gen_range(lo..hi)).collect();
    Tensor::new(shape, data)
}

/// Draws every slot in order from one seeded stream.
pub fn init_slots(slots: &IndexMap<SlotId, Shape>, scheme: InitScheme, seed: u64) -> ParameterStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParameterStore::new();
    for (slot, &shape) in slots {
        store.insert(slot.clone(), init_tensor(shape, scheme, &mut rng));
    }
    store
}

pub fn init_params(template: &Template, cfg: &TrainConfig) -> ParameterStore {
    init_slots(&template.parameter_slots(), cfg.init, cfg.seed)
}

/// How queries are compiled into graphs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CompileConfig {
    pub ground: GroundConfig,
    /// `None` keeps the unpruned graph.
    pub prune: Option<PruneMode>,
}

impl CompileConfig {
    pub fn pruned() -> Self {
        CompileConfig { ground: GroundConfig::default(), prune: Some(PruneMode::Strict) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub example: usize,
    pub query: usize,
    pub target: Tensor,
    /// `None` when the query is not entailed and takes the default value.
    pub graph: Option<ComputationGraph>,
    pub default_value: f64,
}

impl Item {
    fn squash(&self, cfg: &TrainConfig) -> bool {
        match &self.graph {
            Some(g) => cfg.auto_sigmoid && cfg.loss == LossKind::Bce && g.nodes[g.output].activation == Activation::Identity,
            None => false,
        }
    }

    /// Prediction under `params`, after any output sigmoid.
    pub fn predict(&self, params: &ParameterStore, cfg: &TrainConfig) -> Result<Tensor> {
        match &self.graph {
            Some(g) => Ok(predict(&forward(g, params)?.0, self.squash(cfg))),
            None => Ok(Tensor::filled(self.target.shape(), self.default_value)),
        }
    }
}

/// Examples compiled against one template, one item per query.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub items: Vec<Item>,
    /// Trainable fact values and their initial tensors.
    pub fact_slots: IndexMap<SlotId, Tensor>,
}

fn compile_example(template: &Template, ex_index: usize, example: &Example, cfg: &CompileConfig) -> Result<Vec<Item>> {
    let mut items = Vec::with_capacity(example.queries.len());
    for (qi, q) in example.queries.iter().enumerate() {
        let (graph, default_value) = match ground_for_query(template, example, &q.atom, &cfg.ground)? {
            QueryGrounding::NotEntailed { default_value } => (None, default_value),
            QueryGrounding::Entailed(program) => {
                let g = build_graph(template, example, &program, &q.atom)?;
                let g = match cfg.prune {
                    Some(mode) => prune_with(&g, mode),
                    None => g,
                };
                (Some(g), cfg.ground.default_value)
            }
        };
        items.push(Item { example: ex_index, query: qi, target: q.target.clone(), graph, default_value });
    }
    Ok(items)
}

impl Dataset {
    /// Grounds and builds every query, in parallel when enabled.
    pub fn compile(template: &Template, examples: &[Example], cfg: &CompileConfig) -> Result<Dataset> {
        #[cfg(feature = "parallel")]
        let per_example: Vec<Result<Vec<Item>>> = {
            use rayon::prelude::*;
            examples.par_iter().enumerate().map(|(i, e)| compile_example(template, i, e, cfg)).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let per_example: Vec<Result<Vec<Item>>> =
            examples.iter().enumerate().map(|(i, e)| compile_example(template, i, e, cfg)).collect();
        let mut items = Vec::new();
        for r in per_example {
            items.extend(r?);
        }
        let mut fact_slots = IndexMap::new();
        if !template.functions.learnable_facts.is_empty() {
            for ex in examples {
                for f in &ex.facts {
                    if template.functions.learnable_facts.contains(&f.atom.predicate) {
                        fact_slots.entry(Symbol::new(&f.atom.to_string())).or_insert_with(|| f.value.clone());
                    }
                }
            }
        }
        log::info!("compiled {} queries from {} examples", items.len(), examples.len());
        Ok(Dataset { items, fact_slots })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn all(&self) -> Vec<usize> {
        (0..self.items.len()).collect()
    }

    /// Template slots drawn from the scheme plus fact slots at their values.
    pub fn init_params(&self, template: &Template, cfg: &TrainConfig) -> ParameterStore {
        let mut store = init_params(template, cfg);
        for (slot, value) in &self.fact_slots {
            store.insert(slot.clone(), value.clone());
        }
        store
    }

    /// Distinct trainable tensors referenced by any item.
    pub fn referenced_slots(&self) -> Vec<SlotId> {
        let mut seen: IndexMap<SlotId, ()> = IndexMap::new();
        for item in &self.items {
            if let Some(g) = &item.graph {
                for s in &g.slots {
                    seen.insert(s.clone(), ());
                }
            }
        }
        seen.into_keys().collect()
    }
}

/// Adam moments and per-slot step counts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OptState {
    steps: HashMap<SlotId, i32>,
    m: HashMap<SlotId, Tensor>,
    v: HashMap<SlotId, Tensor>,
}

impl OptState {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Applies one optimizer step for every slot present in `grads`.
pub fn apply_gradients(params: &mut ParameterStore, grads: &GradientStore, cfg: &TrainConfig, state: &mut OptState) {
    for (slot, g) in grads.iter() {
        let Some(p) = params.get_mut(slot) else { continue };
        match cfg.optimizer {
            Optimizer::Sgd => p.axpy(-cfg.learning_rate, g),
            Optimizer::Adam => {
                let (b1, b2) = cfg.betas;
                let t = state.steps.entry(slot.clone()).or_insert(0);
                *t += 1;
                let m = state.m.entry(slot.clone()).or_insert_with(|| Tensor::zeros(g.shape()));
                let v = state.v.entry(slot.clone()).or_insert_with(|| Tensor::zeros(g.shape()));
                let c1 = 1.0 - b1.powi(*t);
                let c2 = 1.0 - b2.powi(*t);
                for (k, &gk) in g.data().iter().enumerate() {
                    let mk = b1 * m.data()[k] + (1.0 - b1) * gk;
                    let vk = b2 * v.data()[k] + (1.0 - b2) * gk * gk;
                    m.data_mut()[k] = mk;
                    v.data_mut()[k] = vk;
                    let step = cfg.learning_rate * (mk / c1) / ((vk / c2).sqrt() + cfg.eps);
                    p.data_mut()[k] -= step;
                }
            }
        }
    }
}

/// Item visiting order for one epoch.
pub fn epoch_order(indices: &[usize], seed: u64, epoch: usize) -> Vec<usize> {
    let mut order = indices.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (epoch as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    order.shuffle(&mut rng);
    order
}

/// One pass with batch size 1. Returns the mean of the per-item losses seen
/// before each update.
pub fn train_epoch(
    dataset: &Dataset,
    indices: &[usize],
    params: &mut ParameterStore,
    cfg: &TrainConfig,
    state: &mut OptState,
    epoch: usize,
) -> Result<f64> {
    if indices.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for i in epoch_order(indices, cfg.seed, epoch) {
        let item = &dataset.items[i];
        let wrap = |e: Error| Error::NonFiniteExample { example: item.example, source: Box::new(e) };
        let value = match &item.graph {
            Some(g) => {
                let (value, grads) =
                    loss_and_gradient(g, params, &item.target, cfg.loss, item.squash(cfg)).map_err(|e| match e {
                        Error::NonFinite { .. } => wrap(e),
                        other => other,
                    })?;
                apply_gradients(params, &grads, cfg, state);
                value
            }
            None => loss(&item.predict(params, cfg)?, &item.target, cfg.loss)?.0,
        };
        total += value;
    }
    Ok(total / indices.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub loss: f64,
    pub accuracy: f64,
    pub count: usize,
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "loss = {}", self.loss)?;
        writeln!(f, "accuracy = {}", self.accuracy)?;
        write!(f, "items = {}", self.count)
    }
}

/// True when every entry falls on the same side of 0.5 as the target.
fn correct(prediction: &Tensor, target: &Tensor) -> bool {
    prediction.data().iter().zip(target.data()).all(|(p, t)| (*p >= 0.5) == (*t >= 0.5))
}

/// Mean loss and thresholded accuracy; never touches the parameters.
pub fn evaluate(dataset: &Dataset, indices: &[usize], params: &ParameterStore, cfg: &TrainConfig) -> Result<Metrics> {
    if indices.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let one = |&i: &usize| -> Result<(f64, bool)> {
        let item = &dataset.items[i];
        let p = item.predict(params, cfg)?;
        let (l, _) = loss(&p, &item.target, cfg.loss)?;
        Ok((l, correct(&p, &item.target)))
    };
    #[cfg(feature = "parallel")]
    let results: Vec<Result<(f64, bool)>> = {
        use rayon::prelude::*;
        indices.par_iter().map(one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<(f64, bool)>> = indices.iter().map(one).collect();
    let mut total = 0.0;
    let mut hits = 0usize;
    for r in results {
        let (l, ok) = r?;
        total += l;
        hits += ok as usize;
    }
    let n = indices.len();
    Ok(Metrics { loss: total / n as f64, accuracy: hits as f64 / n as f64, count: n })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

impl fmt::Display for EpochLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "epoch={} trainLoss={} valLoss={}", self.epoch, self.train_loss, self.val_loss)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ParameterStore,
    pub log: Vec<EpochLog>,
    /// Parameters at the lowest validation loss, when a validation split is given.
    pub best: Option<(usize, ParameterStore)>,
}

/// Trains from `params` for `cfg.epochs` epochs. After each epoch the
/// training loss is recomputed with [`evaluate`] on the updated parameters.
pub fn train_from(
    dataset: &Dataset,
    train_idx: &[usize],
    val_idx: &[usize],
    mut params: ParameterStore,
    cfg: &TrainConfig,
    on_epoch: &mut dyn FnMut(&EpochLog),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut state = OptState::new();
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, ParameterStore)> = None;
    for epoch in 1..=cfg.epochs {
        train_epoch(dataset, train_idx, &mut params, cfg, &mut state, epoch)?;
        let train_loss = evaluate(dataset, train_idx, &params, cfg)?.loss;
        let val_loss = if val_idx.is_empty() { f64::NAN } else { evaluate(dataset, val_idx, &params, cfg)?.loss };
        if !val_idx.is_empty() && best.as_ref().map_or(true, |(_, b, _)| val_loss < *b) {
            best = Some((epoch, val_loss, params.clone()));
        }
        let entry = EpochLog { epoch, train_loss, val_loss };
        log::debug!("{entry}");
        on_epoch(&entry);
        log.push(entry);
    }
    Ok(TrainOutcome { params, log, best: best.map(|(e, _, p)| (e, p)) })
}

pub fn train(
    dataset: &Dataset,
    template: &Template,
    cfg: &TrainConfig,
    on_epoch: &mut dyn FnMut(&EpochLog),
) -> Result<TrainOutcome> {
    let params = dataset.init_params(template, cfg);
    train_from(dataset, &dataset.all(), &[], params, cfg, on_epoch)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldResult {
    pub train_loss: f64,
    pub val_loss: f64,
    pub test_loss: f64,
    pub test_accuracy: f64,
    pub best_epoch: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvMetrics {
    pub per_fold: Vec<FoldResult>,
    pub mean_test_accuracy: f64,
    pub mean_test_loss: f64,
}

impl fmt::Display for CvMetrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.per_fold.iter().enumerate() {
            writeln!(
                f,
                "fold{i} = trainLoss={} valLoss={} testLoss={} testAcc={} bestEpoch={}",
                r.train_loss, r.val_loss, r.test_loss, r.test_accuracy, r.best_epoch
            )?;
        }
        writeln!(f, "testLoss = {}", self.mean_test_loss)?;
        write!(f, "testAccuracy = {}", self.mean_test_accuracy)
    }
}

/// Fold of every item: shuffled position modulo `k`.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![0; n];
    for (pos, &item) in order.iter().enumerate() {
        folds[item] = pos % k;
    }
    folds
}

/// k-fold cross-validation: split `s` tests on fold `s`, validates on fold
/// `s + 1` and trains on the rest. Test metrics use the parameters from the
/// epoch with the lowest validation loss.
pub fn cross_validate(dataset: &Dataset, template: &Template, cfg: &TrainConfig, k: usize) -> Result<CvMetrics> {
    if k < 3 {
        return Err(Error::Config(format!("cross-validation needs at least 3 folds, got {k}")));
    }
    if dataset.len() < k {
        return Err(Error::Config(format!("{k} folds need at least {k} items, got {}", dataset.len())));
    }
    let folds = fold_assignment(dataset.len(), k, cfg.seed);
    let mut per_fold = Vec::with_capacity(k);
    for s in 0..k {
        let part = |f: usize| -> Vec<usize> { (0..dataset.len()).filter(|&i| folds[i] == f).collect() };
        let test = part(s);
        let val = part((s + 1) % k);
        let train_idx: Vec<usize> =
            (0..dataset.len()).filter(|&i| folds[i] != s && folds[i] != (s + 1) % k).collect();
        let params = dataset.init_params(template, cfg);
        let outcome = train_from(dataset, &train_idx, &val, params, cfg, &mut |_| {})?;
        let (best_epoch, chosen) = match outcome.best {
            Some((e, p)) => (e, p),
            None => (0, outcome.params),
        };
        let train_m = evaluate(dataset, &train_idx, &chosen, cfg)?;
        let val_m = evaluate(dataset, &val, &chosen, cfg)?;
        let test_m = evaluate(dataset, &test, &chosen, cfg)?;
        per_fold.push(FoldResult {
            train_loss: train_m.loss,
            val_loss: val_m.loss,
            test_loss: test_m.loss,
            test_accuracy: test_m.accuracy,
            best_epoch,
        });
    }
    let mean = |f: fn(&FoldResult) -> f64| per_fold.iter().map(f).sum::<f64>() / k as f64;
    Ok(CvMetrics { mean_test_accuracy: mean(|r| r.test_accuracy), mean_test_loss: mean(|r| r.test_loss), per_fold })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_examples, parse_template};

    fn dataset(tpl: &str, exs: &str) -> (Template, Dataset) {
        let t = parse_template(tpl).unwrap();
        let e = parse_examples(exs).unwrap();
        let d = Dataset::compile(&t, &e, &CompileConfig::pruned()).unwrap();
        (t, d)
    }

    #[test]
    fn glorot_bounds_and_determinism() {
        let t = parse_template("W {10,4} :: q :- V {4,1} : f.\nq :- S : f.").unwrap();
        let cfg = TrainConfig { seed: 11, ..Default::default() };
        let p = init_params(&t, &cfg);
        let bound = (6.0f64 / 14.0).sqrt();
        assert!(p.get(&Symbol::new("W")).unwrap().data().iter().all(|v| v.abs() <= bound));
        assert!(p.get(&Symbol::new("S")).unwrap().data().iter().all(|v| v.abs() <= 1.0));
        assert!(p.same_values(&init_params(&t, &cfg)));
        let c = init_params(&t, &TrainConfig { init: InitScheme::Constant(0.5), ..cfg });
        assert!(c.iter().all(|(_, t)| t.data().iter().all(|&v| v == 0.5)));
    }

    #[test]
    fn init_scheme_parsing() {
        assert_eq!("glorot".parse::<InitScheme>().unwrap(), InitScheme::Glorot);
        assert_eq!("uniform(-0.5, 0.5)".parse::<InitScheme>().unwrap(), InitScheme::Uniform(-0.5, 0.5));
        assert_eq!("constant(2)".parse::<InitScheme>().unwrap(), InitScheme::Constant(2.0));
        assert!("uniform(1,0)".parse::<InitScheme>().is_err());
    }

    #[test]
    fn quadratic_toy_converges() {
        let (t, d) = dataset("W :: q :- f.", "f.\n4 :: q?");
        let cfg = TrainConfig {
            optimizer: Optimizer::Sgd,
            learning_rate: 0.1,
            epochs: 100,
            loss: LossKind::Mse,
            init: InitScheme::Constant(0.0),
            ..Default::default()
        };
        let out = train(&d, &t, &cfg, &mut |_| {}).unwrap();
        let w = out.params.get(&Symbol::new("W")).unwrap().item();
        let mut oracle = 0.0;
        for _ in 0..100 {
            oracle -= 0.1 * 2.0 * (oracle - 4.0);
        }
        assert!((w - oracle).abs() < 1e-12);
        assert!((w - 4.0).abs() < 1e-3);
    }

    #[test]
    fn zero_epochs_leave_params() {
        let (t, d) = dataset("W :: q :- f.", "f.\n1 :: q?");
        let cfg = TrainConfig { epochs: 0, ..Default::default() };
        let out = train(&d, &t, &cfg, &mut |_| {}).unwrap();
        assert!(out.params.same_values(&d.init_params(&t, &cfg)));
        assert!(out.log.is_empty());
    }

    #[test]
    fn identical_examples_same_loss() {
        let (t, d) = dataset("W :: q :- f.", "f.\n1 :: q?\n\nf.\n1 :: q?");
        let cfg = TrainConfig::default();
        let p = d.init_params(&t, &cfg);
        let m = evaluate(&d, &d.all(), &p, &cfg).unwrap();
        let single = evaluate(&d, &[0], &p, &cfg).unwrap();
        assert_eq!(m.loss, single.loss);
    }

    #[test]
    fn adam_zero_gradient_is_noop() {
        let (_, d) = dataset("W :: q :- f.", "0 :: f.\n1 :: q?");
        let mut p = ParameterStore::new();
        p.insert(Symbol::new("W"), Tensor::scalar(0.3));
        let before = p.clone();
        let g = d.items[0].graph.as_ref().unwrap();
        let (_, grads) = loss_and_gradient(g, &p, &Tensor::scalar(1.0), LossKind::Mse, false).unwrap();
        assert_eq!(grads.get(&Symbol::new("W")).unwrap().item(), 0.0);
        apply_gradients(&mut p, &grads, &TrainConfig::default(), &mut OptState::new());
        assert!(p.same_values(&before));
    }

    #[test]
    fn evaluation_metrics() {
        let (t, d) = dataset("q :- f.", "0.5 :: f.\n1 :: q?\n\n0.5 :: f.\n0 :: q?");
        let cfg = TrainConfig { auto_sigmoid: false, ..Default::default() };
        let p = d.init_params(&t, &cfg);
        let version = p.version();
        let m = evaluate(&d, &d.all(), &p, &cfg).unwrap();
        assert!((m.loss - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(p.version(), version);
        assert!(matches!(evaluate(&d, &[], &p, &cfg), Err(Error::EmptyDataset)));

        let (t, d) = dataset("q :- f.", "0.9 :: f.\n1 :: q?\n\n0.1 :: f.\n0 :: q?");
        let p = d.init_params(&t, &cfg);
        assert_eq!(evaluate(&d, &d.all(), &p, &cfg).unwrap().accuracy, 1.0);
    }

    #[test]
    fn folds_are_balanced_and_seeded() {
        let f = fold_assignment(100, 10, 3);
        for k in 0..10 {
            assert_eq!(f.iter().filter(|&&x| x == k).count(), 10);
        }
        assert_eq!(f, fold_assignment(100, 10, 3));
    }

    #[test]
    fn cross_validation_on_constant_labels() {
        let exs: String = (0..12).map(|_| "f.\n1 :: q?\n\n").collect();
        let (t, d) = dataset("W :: q :- f.", &exs);
        let cfg = TrainConfig { epochs: 5, learning_rate: 0.1, ..Default::default() };
        let cv = cross_validate(&d, &t, &cfg, 4).unwrap();
        assert_eq!(cv.per_fold.len(), 4);
        assert!(matches!(cross_validate(&d, &t, &cfg, 2), Err(Error::Config(_))));
        let _ = cv.mean_test_accuracy;
    }

    #[test]
    fn not_entailed_uses_default() {
        let (t, d) = dataset("q :- f.", "g.\n0 :: q?");
        assert!(d.items[0].graph.is_none());
        let cfg = TrainConfig::default();
        let m = evaluate(&d, &d.all(), &d.init_params(&t, &cfg), &cfg).unwrap();
        assert_eq!(m.accuracy, 1.0);
    }
}
