//! Forward evaluation and reverse-mode gradients over computation graphs.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::functions::{sigmoid, Activation, Aggregation};
use crate::graph::{ComputationGraph, EdgeWeight, FactValue, NodeId, NodeKind};
use crate::logic::{SlotId, Symbol};
use crate::tensor::{Shape, Tensor};

/// Trainable tensors keyed by slot id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParameterStore {
    values: IndexMap<SlotId, Tensor>,
    version: u64,
}

impl ParameterStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Incremented on every mutation.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn insert(&mut self, slot: SlotId, value: Tensor) {
        self.values.insert(slot, value);
        self.version += 1;
    }

    pub fn get(&self, slot: &SlotId) -> Option<&Tensor> {
        self.values.get(slot)
    }

    /// Mutable access; counts as an update.
    pub fn get_mut(&mut self, slot: &SlotId) -> Option<&mut Tensor> {
        self.version += 1;
        self.values.get_mut(slot)
    }

    pub fn contains(&self, slot: &SlotId) -> bool {
        self.values.contains_key(slot)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SlotId, &Tensor)> {
        self.values.iter()
    }

    /// Values are equal slot by slot, ignoring the version.
    pub fn same_values(&self, other: &ParameterStore) -> bool {
        self.values == other.values
    }

    /// One line per slot: `slotId rows cols v11 v12 ...`.
    pub fn to_text(&self) -> String {
        let mut out = String::from("% slot rows cols values (row-major)\n");
        for (slot, t) in &self.values {
            let s = t.shape();
            let _ = write!(out, "{slot} {} {}", s.rows, s.cols);
            for v in t.data() {
                let _ = write!(out, " {v:?}");
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        text.parse()
    }
}

impl FromStr for ParameterStore {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut store = ParameterStore::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('%').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Config(format!("parameter line {}: {what}", i + 1));
            let mut parts = line.split_whitespace();
            let slot = parts.next().ok_or_else(|| bad("missing slot id"))?;
            let rows: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad row count"))?;
            let cols: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad column count"))?;
            let values = parts
                .map(|s| s.parse::<f64>().map_err(|_| bad(&format!("bad value `{s}`"))))
                .collect::<Result<Vec<f64>>>()?;
            if values.len() != rows * cols {
                return Err(bad(&format!("expected {} values, found {}", rows * cols, values.len())));
            }
            store.insert(Symbol::new(slot), Tensor::new(Shape::new(rows, cols), values));
        }
        Ok(store)
    }
}

/// Gradients for the slots referenced by one evaluated graph.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GradientStore {
    grads: IndexMap<SlotId, Tensor>,
}

impl GradientStore {
    pub fn get(&self, slot: &SlotId) -> Option<&Tensor> {
        self.grads.get(slot)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SlotId, &Tensor)> {
        self.grads.iter()
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    /// Adds `other` entry by entry.
    pub fn accumulate(&mut self, other: &GradientStore) {
        for (slot, g) in &other.grads {
            match self.grads.get_mut(slot) {
                Some(t) => t.axpy(1.0, g),
                None => {
                    self.grads.insert(slot.clone(), g.clone());
                }
            }
        }
    }
}

/// Cached per-node values of one forward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    pub pre: Vec<Tensor>,
    pub out: Vec<Tensor>,
    /// For max aggregation nodes: the winning input index per entry.
    winners: Vec<Option<Vec<usize>>>,
    /// Smallest gap between the best and second-best max-aggregation input.
    max_margin: f64,
}

impl Tape {
    pub fn output(&self, node: NodeId) -> &Tensor {
        &self.out[node]
    }

    /// Distance to the nearest max-aggregation tie; infinite without any.
    pub fn max_margin(&self) -> f64 {
        self.max_margin
    }
}

/// Parameter values for each graph slot, checked against declared shapes.
pub fn resolve<'a>(graph: &ComputationGraph, params: &'a ParameterStore) -> Result<Vec<&'a Tensor>> {
    graph
        .slots
        .iter()
        .zip(&graph.slot_shapes)
        .map(|(slot, &shape)| {
            let t = params.get(slot).ok_or_else(|| Error::MissingSlot(slot.to_string()))?;
            if t.shape() != shape {
                return Err(Error::ShapeMismatch { slot: slot.to_string(), expected: shape, found: t.shape() });
            }
            Ok(t)
        })
        .collect()
}

pub fn weight_tensor<'a>(w: &'a EdgeWeight, slots: &[&'a Tensor]) -> Option<&'a Tensor> {
    match w {
        EdgeWeight::Identity => None,
        EdgeWeight::Fixed(t) => Some(t),
        EdgeWeight::Slot(s) => Some(slots[*s]),
    }
}

/// `w · x` with scalar weights scaling and matrices multiplying.
pub fn apply_weight(w: Option<&Tensor>, x: &Tensor) -> Tensor {
    match w {
        None => x.clone(),
        Some(w) if w.is_scalar() => x.scale(w.item()),
        Some(w) => w.matmul(x),
    }
}

/// Element-wise aggregation of equally shaped values. Ties in max go to the
/// input with the lowest node id. Returns the winners for max.
pub fn aggregate(
    agg: Aggregation,
    values: &[Tensor],
    ids: &[NodeId],
    shape: Shape,
) -> (Tensor, Option<Vec<usize>>, f64) {
    let mut out = Tensor::zeros(shape);
    let mut margin = f64::INFINITY;
    match agg {
        Aggregation::Sum | Aggregation::Avg => {
            for v in values {
                out.add_assign_broadcast(v);
            }
            if agg == Aggregation::Avg && !values.is_empty() {
                let k = values.len() as f64;
                for x in out.data_mut() {
                    *x /= k;
                }
            }
            (out, None, margin)
        }
        Aggregation::Max => {
            let mut winners = vec![0usize; shape.len()];
            for (d, (o, w)) in out.data_mut().iter_mut().zip(&mut winners).enumerate() {
                let mut best = 0usize;
                for j in 1..values.len() {
                    let (a, b) = (values[j].data()[d], values[best].data()[d]);
                    if a > b || (a == b && ids[j] < ids[best]) {
                        best = j;
                    }
                }
                let top = values[best].data()[d];
                for (j, v) in values.iter().enumerate() {
                    if j != best {
                        margin = margin.min(top - v.data()[d]);
                    }
                }
                *o = top;
                *w = best;
            }
            (out, Some(winners), margin)
        }
    }
}

/// Evaluates every node in order and returns the output value and tape.
pub fn forward(graph: &ComputationGraph, params: &ParameterStore) -> Result<(Tensor, Tape)> {
    let slots = resolve(graph, params)?;
    let n = graph.nodes.len();
    let mut pre: Vec<Tensor> = Vec::with_capacity(n);
    let mut out: Vec<Tensor> = Vec::with_capacity(n);
    let mut winners = vec![None; n];
    let mut max_margin = f64::INFINITY;
    for (i, node) in graph.nodes.iter().enumerate() {
        let p = match node.kind {
            NodeKind::Fact => match node.value.as_ref().expect("fact value") {
                FactValue::Fixed(t) => t.clone(),
                FactValue::Slot(s) => slots[*s].clone(),
            },
            _ => {
                let contributions: Vec<Tensor> = node
                    .inputs
                    .iter()
                    .map(|e| apply_weight(weight_tensor(&e.weight, &slots), &out[e.from]))
                    .collect();
                match node.aggregation {
                    Some(agg) => {
                        let ids: Vec<NodeId> = node.inputs.iter().map(|e| e.from).collect();
                        let (v, w, m) = aggregate(agg, &contributions, &ids, node.shape);
                        winners[i] = w;
                        max_margin = max_margin.min(m);
                        v
                    }
                    None => {
                        let mut acc = Tensor::zeros(node.shape);
                        for c in &contributions {
                            acc.add_assign_broadcast(c);
                        }
                        acc
                    }
                }
            }
        };
        let o = match node.activation {
            Activation::Identity => p.clone(),
            act => p.map(|x| act.apply(x)),
        };
        if !o.is_finite() {
            return Err(Error::NonFinite { node: i });
        }
        pre.push(p);
        out.push(o);
    }
    let y = out[graph.output].clone();
    Ok((y, Tape { pre, out, winners, max_margin }))
}

/// Gradient of `seedᵀ · output` for every slot the graph references.
pub fn backward(graph: &ComputationGraph, params: &ParameterStore, tape: &Tape, seed: &Tensor) -> Result<GradientStore> {
    let slots = resolve(graph, params)?;
    let out_shape = graph.nodes[graph.output].shape;
    if seed.shape() != out_shape {
        return Err(Error::ShapeMismatch { slot: "seed".into(), expected: out_shape, found: seed.shape() });
    }
    let mut slot_grads: Vec<Tensor> = graph.slot_shapes.iter().map(|&s| Tensor::zeros(s)).collect();
    let mut adj: Vec<Option<Tensor>> = vec![None; graph.nodes.len()];
    adj[graph.output] = Some(seed.clone());
    for i in (0..graph.nodes.len()).rev() {
        let Some(dout) = adj[i].take() else { continue };
        let node = &graph.nodes[i];
        let mut dpre = dout;
        if node.activation != Activation::Identity {
            let (p, o) = (tape.pre[i].data(), tape.out[i].data());
            for (k, g) in dpre.data_mut().iter_mut().enumerate() {
                *g *= node.activation.derivative(p[k], o[k]);
            }
        }
        if let Some(FactValue::Slot(s)) = &node.value {
            slot_grads[*s].axpy(1.0, &dpre);
            continue;
        }
        let k = node.inputs.len();
        for (j, e) in node.inputs.iter().enumerate() {
            let x = &tape.out[e.from];
            let w = weight_tensor(&e.weight, &slots);
            let c_shape = match w {
                Some(w) if !w.is_scalar() => Shape::vector(w.shape().rows),
                _ => x.shape(),
            };
            let dc = match node.aggregation {
                None if c_shape == dpre.shape() => dpre.clone(),
                None => Tensor::scalar(dpre.sum()),
                Some(Aggregation::Sum) => dpre.clone(),
                Some(Aggregation::Avg) => dpre.scale(1.0 / k as f64),
                Some(Aggregation::Max) => {
                    let winners = tape.winners[i].as_ref().expect("max winners");
                    let mut d = Tensor::zeros(dpre.shape());
                    for (idx, (&win, g)) in winners.iter().zip(dpre.data()).enumerate() {
                        if win == j {
                            d.data_mut()[idx] = *g;
                        }
                    }
                    d
                }
            };
            let dx = match w {
                None => dc,
                Some(wt) if wt.is_scalar() => {
                    if let EdgeWeight::Slot(s) = e.weight {
                        slot_grads[s].data_mut()[0] += dc.dot(x);
                    }
                    dc.scale(wt.item())
                }
                Some(wt) => {
                    if let EdgeWeight::Slot(s) = e.weight {
                        slot_grads[s].add_outer(&dc, x);
                    }
                    wt.transpose_matmul(&dc)
                }
            };
            match &mut adj[e.from] {
                Some(a) => a.axpy(1.0, &dx),
                slot @ None => *slot = Some(dx),
            }
        }
    }
    let mut grads = GradientStore::default();
    for (slot, g) in graph.slots.iter().zip(slot_grads) {
        if !g.is_finite() {
            return Err(Error::NonFinite { node: graph.output });
        }
        grads.grads.insert(slot.clone(), g);
    }
    Ok(grads)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossKind {
    #[default]
    Bce,
    Mse,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Bce => "bce",
            LossKind::Mse => "mse",
        }
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bce" => Ok(LossKind::Bce),
            "mse" => Ok(LossKind::Mse),
            _ => Err(Error::Config(format!("unknown loss `{s}`"))),
        }
    }
}

pub const BCE_CLAMP: f64 = 1e-12;

/// Loss value and its gradient with respect to the prediction.
pub fn loss(prediction: &Tensor, target: &Tensor, kind: LossKind) -> Result<(f64, Tensor)> {
    if prediction.shape() != target.shape() {
        return Err(Error::ShapeMismatch {
            slot: "target".into(),
            expected: prediction.shape(),
            found: target.shape(),
        });
    }
    let p = prediction.data();
    let t = target.data();
    match kind {
        LossKind::Bce => {
            let mut total = 0.0;
            let mut grad = Vec::with_capacity(p.len());
            for (&p, &t) in p.iter().zip(t) {
                if p.is_nan() || p < -BCE_CLAMP || p > 1.0 + BCE_CLAMP {
                    return Err(Error::Domain(format!("binary cross-entropy needs a probability, got {p}")));
                }
                let pc = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
                total -= t * pc.ln() + (1.0 - t) * (1.0 - pc).ln();
                grad.push(-t / pc + (1.0 - t) / (1.0 - pc));
            }
            Ok((total, Tensor::new(prediction.shape(), grad)))
        }
        LossKind::Mse => {
            let n = p.len() as f64;
            let total = p.iter().zip(t).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / n;
            let grad = p.iter().zip(t).map(|(p, t)| 2.0 * (p - t) / n).collect();
            Ok((total, Tensor::new(prediction.shape(), grad)))
        }
    }
}

/// Maps a raw graph output to a prediction, optionally through a sigmoid.
pub fn predict(raw: &Tensor, squash: bool) -> Tensor {
    if squash {
        raw.map(sigmoid)
    } else {
        raw.clone()
    }
}

/// Forward, loss and backward for one graph and target.
pub fn loss_and_gradient(
    graph: &ComputationGraph,
    params: &ParameterStore,
    target: &Tensor,
    kind: LossKind,
    squash: bool,
) -> Result<(f64, GradientStore)> {
    let (raw, tape) = forward(graph, params)?;
    let p = predict(&raw, squash);
    let (value, mut seed) = loss(&p, target, kind)?;
    if squash {
        for (g, y) in seed.data_mut().iter_mut().zip(p.data()) {
            *g *= y * (1.0 - y);
        }
    }
    let grads = backward(graph, params, &tape, &seed)?;
    Ok((value, grads))
}
