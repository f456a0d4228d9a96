//! Computation graphs built from ground programs.
//!
//! Every fact becomes a Fact node, every ground rule instance a Rule node,
//! every (rule, ground head) pair an Aggregation node and every derived atom
//! an Atom node. Node values:
//!
//! ```text
//! Rule:        g∧(Σ W_i · in_i)
//! Aggregation: g*(in_1, .., in_k)
//! Atom:        g∨(Σ W_j · in_j)
//! ```
//!
//! A `1 x 1` contribution to a sum is broadcast over the other contributions.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt::Write as _;

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::functions::{Activation, Aggregation, Order};
use crate::ground::{FactSource, GroundProgram};
use crate::logic::{bias_slot, Atom, Example, SlotId, Symbol, Template, WeightSpec};
use crate::parser::format_number;
use crate::tensor::{Shape, Tensor};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Fact,
    Rule,
    Aggregation,
    Atom,
}

impl NodeKind {
    pub fn prefix(self) -> &'static str {
        match self {
            NodeKind::Fact => "F",
            NodeKind::Rule => "R",
            NodeKind::Aggregation => "G",
            NodeKind::Atom => "A",
        }
    }
}

/// Weight on an edge. Slots index into [`ComputationGraph::slots`].
#[derive(Debug, Clone, PartialEq)]
pub enum EdgeWeight {
    Identity,
    Fixed(Tensor),
    Slot(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: NodeId,
    pub weight: EdgeWeight,
}

/// Output of a Fact node.
#[derive(Debug, Clone, PartialEq)]
pub enum FactValue {
    Fixed(Tensor),
    Slot(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    pub inputs: Vec<Edge>,
    pub activation: Activation,
    /// Set for Aggregation nodes.
    pub aggregation: Option<Aggregation>,
    /// Set for Fact nodes.
    pub value: Option<FactValue>,
    pub label: String,
    pub shape: Shape,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComputationGraph {
    /// Topologically sorted: inputs precede their consumers.
    pub nodes: Vec<Node>,
    pub output: NodeId,
    pub slots: Vec<SlotId>,
    pub slot_shapes: Vec<Shape>,
}

/// How aggressively [`prune`] splices single-input nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PruneMode {
    /// Only nodes that compute the identity on their single input.
    #[default]
    Strict,
    /// Every node with one unweighted input, whatever its activation.
    Aggressive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub params: usize,
    pub depth: usize,
}

impl std::fmt::Display for GraphStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "nodes={} edges={} params={} depth={}", self.nodes, self.edges, self.params, self.depth)
    }
}

impl ComputationGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn count(&self, kind: NodeKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.inputs.len()).sum()
    }

    /// Longest path, in edges, from any leaf to each node.
    pub fn levels(&self) -> Vec<usize> {
        let mut level = vec![0usize; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            level[i] = n.inputs.iter().map(|e| level[e.from] + 1).max().unwrap_or(0);
        }
        level
    }

    pub fn stats(&self) -> GraphStats {
        GraphStats {
            nodes: self.nodes.len(),
            edges: self.edge_count(),
            params: self.slots.len(),
            depth: self.levels().get(self.output).copied().unwrap_or(0),
        }
    }

    pub fn slot_index(&self, slot: &SlotId) -> Option<usize> {
        self.slots.iter().position(|s| s == slot)
    }
}

struct Builder<'a> {
    template: &'a Template,
    slot_shapes: IndexMap<SlotId, Shape>,
    used_slots: IndexMap<SlotId, Shape>,
    nodes: Vec<Node>,
    bias_nodes: HashMap<usize, NodeId>,
}

impl Builder<'_> {
    fn slot(&mut self, slot: &SlotId, shape: Shape) -> usize {
        let entry = self.used_slots.entry(slot.clone());
        let idx = entry.index();
        entry.or_insert(shape);
        idx
    }

    fn template_slot(&mut self, slot: &SlotId) -> Result<usize> {
        let shape = self
            .slot_shapes
            .get(slot)
            .copied()
            .ok_or_else(|| Error::MissingSlot(slot.to_string()))?;
        Ok(self.slot(slot, shape))
    }

    fn push(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    fn edge_weight(&mut self, w: &WeightSpec) -> Result<EdgeWeight> {
        Ok(match w {
            WeightSpec::Absent => EdgeWeight::Identity,
            WeightSpec::Fixed(t) => EdgeWeight::Fixed(t.clone()),
            WeightSpec::Learnable(s) => EdgeWeight::Slot(self.template_slot(s)?),
        })
    }

    /// Edges for one weighted input, plus a bias input when enabled.
    fn weighted_inputs(&mut self, from: NodeId, w: &WeightSpec, out: &mut Vec<Edge>) -> Result<()> {
        let weight = self.edge_weight(w)?;
        if let (true, WeightSpec::Learnable(s)) = (self.template.functions.bias, w) {
            let b = self.template_slot(&bias_slot(s))?;
            let node = match self.bias_nodes.get(&b) {
                Some(&n) => n,
                None => {
                    let shape = self.used_slots[b];
                    let n = self.push(Node {
                        kind: NodeKind::Fact,
                        inputs: Vec::new(),
                        activation: Activation::Identity,
                        aggregation: None,
                        value: Some(FactValue::Slot(b)),
                        label: format!("F_{}", bias_slot(s)),
                        shape,
                    });
                    self.bias_nodes.insert(b, n);
                    n
                }
            };
            out.push(Edge { from: node, weight: EdgeWeight::Identity });
        }
        out.push(Edge { from, weight });
        Ok(())
    }
}

fn fact_value(template: &Template, example: &Example, source: FactSource) -> WeightSpec {
    match source {
        FactSource::Example(i) => WeightSpec::Fixed(example.facts[i].value.clone()),
        FactSource::Template(r) => match &template.rules[r].head_weight {
            WeightSpec::Absent => WeightSpec::Fixed(Tensor::scalar(1.0)),
            w => w.clone(),
        },
    }
}

/// Builds the computation graph of `query` over a relevant ground program.
pub fn build_graph(
    template: &Template,
    example: &Example,
    program: &GroundProgram,
    query: &Atom,
) -> Result<ComputationGraph> {
    let funcs = &template.functions;
    let mut b = Builder {
        template,
        slot_shapes: template.parameter_slots(),
        used_slots: IndexMap::new(),
        nodes: Vec::new(),
        bias_nodes: HashMap::new(),
    };
    let mut fact_nodes: HashMap<&Atom, NodeId> = HashMap::new();
    for (atom, &source) in &program.facts {
        let value = match (source, fact_value(template, example, source)) {
            (FactSource::Example(_), WeightSpec::Fixed(t)) if funcs.learnable_facts.contains(&atom.predicate) => {
                let slot = Symbol::new(&atom.to_string());
                FactValue::Slot(b.slot(&slot, t.shape()))
            }
            (_, WeightSpec::Fixed(t)) => FactValue::Fixed(t),
            (_, WeightSpec::Learnable(s)) => FactValue::Slot(b.template_slot(&s)?),
            (_, WeightSpec::Absent) => unreachable!("fact values are never absent"),
        };
        let id = b.push(Node {
            kind: NodeKind::Fact,
            inputs: Vec::new(),
            activation: Activation::Identity,
            aggregation: None,
            value: Some(value),
            label: format!("F_{atom}"),
            shape: Shape::SCALAR,
        });
        fact_nodes.insert(atom, id);
    }

    // Derived atoms and their (rule, head) aggregation nodes, in first-use order.
    let mut atom_nodes: IndexMap<&Atom, NodeId> = IndexMap::new();
    let mut agg_nodes: IndexMap<(usize, &Atom), NodeId> = IndexMap::new();
    for inst in &program.instances {
        if !atom_nodes.contains_key(&inst.head) {
            let act = funcs.atom_activation_for(&inst.head.predicate);
            let id = b.push(Node {
                kind: NodeKind::Atom,
                inputs: Vec::new(),
                activation: act,
                aggregation: None,
                value: None,
                label: format!("A_{}", inst.head),
                shape: Shape::SCALAR,
            });
            atom_nodes.insert(&inst.head, id);
        }
        if !agg_nodes.contains_key(&(inst.rule, &inst.head)) {
            let rule = &template.rules[inst.rule];
            let activation = match funcs.order_for(rule) {
                Order::WeightFirst => Activation::Identity,
                Order::AggregateFirst => funcs.rule_activation_for(rule),
            };
            let id = b.push(Node {
                kind: NodeKind::Aggregation,
                inputs: Vec::new(),
                activation,
                aggregation: Some(funcs.aggregation_for(rule)),
                value: None,
                label: format!("G{}_{}", inst.rule, inst.head),
                shape: Shape::SCALAR,
            });
            agg_nodes.insert((inst.rule, &inst.head), id);
            let atom_id = atom_nodes[&inst.head];
            let mut edges = Vec::new();
            b.weighted_inputs(id, &rule.head_weight, &mut edges)?;
            b.nodes[atom_id].inputs.extend(edges);
        }
    }
    let represent = |atom: &Atom| -> Option<NodeId> {
        atom_nodes.get(atom).or_else(|| fact_nodes.get(atom)).copied()
    };
    for (atom, &a) in &atom_nodes {
        if let Some(&f) = fact_nodes.get(atom) {
            b.nodes[a].inputs.push(Edge { from: f, weight: EdgeWeight::Identity });
        }
    }
    for (k, inst) in program.instances.iter().enumerate() {
        let rule = &template.rules[inst.rule];
        let activation = match funcs.order_for(rule) {
            Order::WeightFirst => funcs.rule_activation_for(rule),
            Order::AggregateFirst => Activation::Identity,
        };
        let mut edges = Vec::new();
        for (lit, atom) in rule.body.iter().zip(&inst.body) {
            let from = represent(atom)
                .ok_or_else(|| Error::InvalidTemplate(format!("body atom {atom} has no node")))?;
            b.weighted_inputs(from, &lit.weight, &mut edges)?;
        }
        let body: Vec<String> = inst.body.iter().map(|a| a.to_string()).collect();
        let id = b.push(Node {
            kind: NodeKind::Rule,
            inputs: edges,
            activation,
            aggregation: None,
            value: None,
            label: format!("R{}#{k}_{} <- {}", inst.rule, inst.head, body.join(", ")),
            shape: Shape::SCALAR,
        });
        let g = agg_nodes[&(inst.rule, &inst.head)];
        b.nodes[g].inputs.push(Edge { from: id, weight: EdgeWeight::Identity });
    }
    let output = represent(query).ok_or_else(|| Error::InvalidTemplate(format!("query {query} has no node")))?;
    let (slots, slot_shapes): (Vec<SlotId>, Vec<Shape>) = b.used_slots.into_iter().unzip();
    let graph = topological(b.nodes, output, slots, slot_shapes);
    infer_shapes(graph)
}

/// Reorders nodes so inputs come first, preferring lower provisional ids.
fn topological(nodes: Vec<Node>, output: NodeId, slots: Vec<SlotId>, slot_shapes: Vec<Shape>) -> ComputationGraph {
    let n = nodes.len();
    let mut consumers = vec![Vec::new(); n];
    let mut pending = vec![0usize; n];
    for (i, node) in nodes.iter().enumerate() {
        for e in &node.inputs {
            consumers[e.from].push(i);
            pending[i] += 1;
        }
    }
    let mut heap: BinaryHeap<Reverse<usize>> = (0..n).filter(|&i| pending[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(i)) = heap.pop() {
        order.push(i);
        for &c in &consumers[i] {
            pending[c] -= 1;
            if pending[c] == 0 {
                heap.push(Reverse(c));
            }
        }
    }
    debug_assert_eq!(order.len(), n, "ground graph is acyclic");
    renumber(nodes, &order, output, slots, slot_shapes)
}

/// Keeps the nodes listed in `order`, in that order, remapping edges.
fn renumber(
    nodes: Vec<Node>,
    order: &[NodeId],
    output: NodeId,
    slots: Vec<SlotId>,
    slot_shapes: Vec<Shape>,
) -> ComputationGraph {
    let mut new_id = vec![usize::MAX; nodes.len()];
    for (new, &old) in order.iter().enumerate() {
        new_id[old] = new;
    }
    let mut slots_of: Vec<Option<Node>> = nodes.into_iter().map(Some).collect();
    let mut out = Vec::with_capacity(order.len());
    for &old in order {
        let mut node = slots_of[old].take().expect("node listed once");
        for e in &mut node.inputs {
            e.from = new_id[e.from];
        }
        out.push(node);
    }
    ComputationGraph { nodes: out, output: new_id[output], slots, slot_shapes }
}

fn weight_name(graph: &ComputationGraph, w: &EdgeWeight) -> String {
    match w {
        EdgeWeight::Identity => String::new(),
        EdgeWeight::Fixed(_) => "fixed weight".into(),
        EdgeWeight::Slot(s) => graph.slots[*s].to_string(),
    }
}

/// Shape of `w · x`.
pub fn contribution_shape(weight: Option<Shape>, x: Shape) -> Option<Shape> {
    match weight {
        None => Some(x),
        Some(w) if w.is_scalar() => Some(x),
        Some(w) if x.cols == 1 && w.cols == x.rows => Some(Shape::vector(w.rows)),
        Some(_) => None,
    }
}

fn edge_shape(graph: &ComputationGraph, w: &EdgeWeight) -> Option<Shape> {
    match w {
        EdgeWeight::Identity => None,
        EdgeWeight::Fixed(t) => Some(t.shape()),
        EdgeWeight::Slot(s) => Some(graph.slot_shapes[*s]),
    }
}

fn infer_shapes(mut graph: ComputationGraph) -> Result<ComputationGraph> {
    for i in 0..graph.nodes.len() {
        let node = &graph.nodes[i];
        let shape = match node.kind {
            NodeKind::Fact => match node.value.as_ref().expect("fact value") {
                FactValue::Fixed(t) => t.shape(),
                FactValue::Slot(s) => graph.slot_shapes[*s],
            },
            _ => {
                let mut acc: Option<Shape> = None;
                for e in &node.inputs {
                    let x = graph.nodes[e.from].shape;
                    let ws = edge_shape(&graph, &e.weight);
                    let c = contribution_shape(ws, x).ok_or_else(|| Error::ShapeMismatch {
                        slot: weight_name(&graph, &e.weight),
                        expected: Shape::vector(ws.map_or(x.rows, |w| w.cols)),
                        found: x,
                    })?;
                    acc = Some(match acc {
                        None => c,
                        Some(a) if a == c => a,
                        Some(a) if node.aggregation.is_none() && a.is_scalar() => c,
                        Some(a) if node.aggregation.is_none() && c.is_scalar() => a,
                        Some(a) => {
                            return Err(Error::ShapeMismatch { slot: node.label.clone(), expected: a, found: c })
                        }
                    });
                }
                acc.unwrap_or(Shape::SCALAR)
            }
        };
        graph.nodes[i].shape = shape;
    }
    Ok(graph)
}

fn spliceable(node: &Node, mode: PruneMode) -> bool {
    if node.kind == NodeKind::Fact || node.inputs.len() != 1 || node.inputs[0].weight != EdgeWeight::Identity {
        return false;
    }
    match mode {
        PruneMode::Aggressive => true,
        PruneMode::Strict => node.activation == Activation::Identity,
    }
}

/// Splices out single-input unweighted nodes and drops everything that does
/// not feed the output.
pub fn prune(graph: &ComputationGraph) -> ComputationGraph {
    prune_with(graph, PruneMode::Strict)
}

pub fn prune_with(graph: &ComputationGraph, mode: PruneMode) -> ComputationGraph {
    let n = graph.nodes.len();
    let mut rep: Vec<NodeId> = (0..n).collect();
    for (i, node) in graph.nodes.iter().enumerate() {
        if spliceable(node, mode) {
            rep[i] = rep[node.inputs[0].from];
        }
    }
    let mut nodes = graph.nodes.clone();
    for node in &mut nodes {
        for e in &mut node.inputs {
            e.from = rep[e.from];
        }
    }
    let output = rep[graph.output];
    let mut alive = vec![false; n];
    alive[output] = true;
    for i in (0..n).rev() {
        if alive[i] {
            for e in &nodes[i].inputs {
                alive[e.from] = true;
            }
        }
    }
    let order: Vec<NodeId> = (0..n).filter(|&i| alive[i]).collect();
    let mut pruned = renumber(nodes, &order, output, graph.slots.clone(), graph.slot_shapes.clone());
    compact_slots(&mut pruned);
    pruned
}

/// Drops slots no longer referenced, keeping first-use order.
fn compact_slots(graph: &mut ComputationGraph) {
    let mut used = vec![false; graph.slots.len()];
    for node in &graph.nodes {
        if let Some(FactValue::Slot(s)) = &node.value {
            used[*s] = true;
        }
        for e in &node.inputs {
            if let EdgeWeight::Slot(s) = e.weight {
                used[s] = true;
            }
        }
    }
    if used.iter().all(|&u| u) {
        return;
    }
    let mut map = vec![usize::MAX; used.len()];
    let mut k = 0;
    for (i, &u) in used.iter().enumerate() {
        if u {
            map[i] = k;
            k += 1;
        }
    }
    for node in &mut graph.nodes {
        if let Some(FactValue::Slot(s)) = &mut node.value {
            *s = map[*s];
        }
        for e in &mut node.inputs {
            if let EdgeWeight::Slot(s) = &mut e.weight {
                *s = map[*s];
            }
        }
    }
    let keep = |v: &mut Vec<_>| {
        let mut i = 0;
        v.retain(|_| {
            i += 1;
            used[i - 1]
        });
    };
    keep(&mut graph.slots);
    let mut i = 0;
    graph.slot_shapes.retain(|_| {
        i += 1;
        used[i - 1]
    });
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn fixed_label(t: &Tensor) -> String {
    if t.is_scalar() {
        format_number(t.item())
    } else {
        format!("fixed {}", t.shape())
    }
}

/// Graphviz description of the graph, edges pointing from input to consumer.
pub fn export_dot(graph: &ComputationGraph) -> String {
    let mut out = String::from("digraph computation {\n  rankdir=BT;\n  node [fontname=\"monospace\"];\n");
    for (i, node) in graph.nodes.iter().enumerate() {
        let func = match (node.kind, node.aggregation) {
            (NodeKind::Aggregation, Some(a)) if node.activation == Activation::Identity => a.to_string(),
            (NodeKind::Aggregation, Some(a)) => format!("{a} {}", node.activation),
            (NodeKind::Fact, _) => match node.value.as_ref() {
                Some(FactValue::Fixed(t)) if t.is_scalar() => format_number(t.item()),
                Some(FactValue::Fixed(t)) => t.shape().to_string(),
                Some(FactValue::Slot(s)) => format!("learnable {}", graph.slots[*s]),
                None => String::new(),
            },
            _ => node.activation.to_string(),
        };
        let shape = match node.kind {
            NodeKind::Fact => "box",
            NodeKind::Rule => "ellipse",
            NodeKind::Aggregation => "diamond",
            NodeKind::Atom => "doublecircle",
        };
        let periphery = if i == graph.output { " penwidth=2" } else { "" };
        let _ = writeln!(
            out,
            "  n{i} [label=\"{}\\n{func}\" shape={shape}{periphery}];",
            escape(&node.label)
        );
    }
    for (i, node) in graph.nodes.iter().enumerate() {
        for e in &node.inputs {
            let label = match &e.weight {
                EdgeWeight::Identity => String::new(),
                EdgeWeight::Fixed(t) => format!(" [label=\"{}\"]", escape(&fixed_label(t))),
                EdgeWeight::Slot(s) => format!(" [label=\"{}\"]", escape(graph.slots[*s].as_str())),
            };
            let _ = writeln!(out, "  n{} -> n{i}{label};", e.from);
        }
    }
    out.push_str("}\n");
    out
}
