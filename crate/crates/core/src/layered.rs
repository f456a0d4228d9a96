//! Layered form of a computation graph.
//!
//! Nodes are grouped by level (leaves are level 0, every other node sits one
//! above its deepest input). An edge that spans more than one level is routed
//! through identity skip units, one per intermediate level, shared by all
//! consumers of the same source. Each layer then only reads the layer below
//! through a sparse weight matrix whose entries reference graph weights.

use crate::autodiff::{aggregate, apply_weight, resolve, weight_tensor, ParameterStore};
use crate::error::{Error, Result};
use crate::functions::{Activation, Aggregation};
use crate::graph::{ComputationGraph, EdgeWeight, FactValue, NodeId};
use crate::logic::SlotId;
use crate::tensor::{Shape, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub enum Unit {
    /// A graph node computed at this level.
    Neuron(NodeId),
    /// Identity carrier of a lower node's value.
    Skip(NodeId),
}

/// One nonzero of a layer's weight matrix: `row` reads unit `col` of the
/// layer below.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub row: usize,
    pub col: usize,
    pub weight: EdgeWeight,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub units: Vec<Unit>,
    /// Grouped by row, in the row's input order.
    pub entries: Vec<Entry>,
    pub functions: Vec<UnitFunction>,
}

impl Layer {
    pub fn skip_count(&self) -> usize {
        self.units.iter().filter(|u| matches!(u, Unit::Skip(_))).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitFunction {
    pub activation: Activation,
    pub aggregation: Option<Aggregation>,
    pub fact: Option<FactValue>,
    pub shape: Shape,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayeredGraph {
    pub layers: Vec<Layer>,
    /// (layer, unit) of the output.
    pub output: (usize, usize),
    pub slots: Vec<SlotId>,
    pub slot_shapes: Vec<Shape>,
}

impl LayeredGraph {
    pub fn skip_count(&self) -> usize {
        self.layers.iter().map(Layer::skip_count).sum()
    }
}

pub fn vectorize(graph: &ComputationGraph) -> LayeredGraph {
    let levels = graph.levels();
    let depth = levels.iter().copied().max().unwrap_or(0);
    let mut layers: Vec<Layer> = (0..=depth)
        .map(|_| Layer { units: Vec::new(), entries: Vec::new(), functions: Vec::new() })
        .collect();
    // position[level] maps a source node to its unit index at that level.
    let mut position: Vec<std::collections::HashMap<NodeId, usize>> = vec![Default::default(); depth + 1];
    for (i, node) in graph.nodes.iter().enumerate() {
        let lv = levels[i];
        let row = layers[lv].units.len();
        layers[lv].units.push(Unit::Neuron(i));
        layers[lv].functions.push(UnitFunction {
            activation: node.activation,
            aggregation: node.aggregation,
            fact: node.value.clone(),
            shape: node.shape,
        });
        position[lv].insert(i, row);
        let mut entries = Vec::with_capacity(node.inputs.len());
        for e in &node.inputs {
            let col = carrier(graph, &levels, &mut layers, &mut position, e.from, lv - 1);
            entries.push(Entry { row, col, weight: e.weight.clone() });
        }
        layers[lv].entries.extend(entries);
    }
    let out_level = levels.get(graph.output).copied().unwrap_or(0);
    let output = (out_level, position[out_level][&graph.output]);
    for layer in &mut layers {
        layer.entries.sort_by_key(|e| e.row);
    }
    LayeredGraph { layers, output, slots: graph.slots.clone(), slot_shapes: graph.slot_shapes.clone() }
}

/// Unit index carrying `source` at `level`, creating skip units as needed.
fn carrier(
    graph: &ComputationGraph,
    levels: &[usize],
    layers: &mut [Layer],
    position: &mut [std::collections::HashMap<NodeId, usize>],
    source: NodeId,
    level: usize,
) -> usize {
    if let Some(&p) = position[level].get(&source) {
        return p;
    }
    debug_assert!(level > levels[source]);
    let below = carrier(graph, levels, layers, position, source, level - 1);
    let row = layers[level].units.len();
    layers[level].units.push(Unit::Skip(source));
    layers[level].functions.push(UnitFunction {
        activation: Activation::Identity,
        aggregation: None,
        fact: None,
        shape: graph.nodes[source].shape,
    });
    layers[level].entries.push(Entry { row, col: below, weight: EdgeWeight::Identity });
    position[level].insert(source, row);
    row
}

/// Evaluates layer by layer; equals node-wise evaluation.
pub fn forward_layered(lg: &LayeredGraph, params: &ParameterStore) -> Result<Tensor> {
    let view = ComputationGraph { nodes: Vec::new(), output: 0, slots: lg.slots.clone(), slot_shapes: lg.slot_shapes.clone() };
    let slots = resolve(&view, params)?;
    let mut below: Vec<Tensor> = Vec::new();
    for (li, layer) in lg.layers.iter().enumerate() {
        let prev_units: &[Unit] = if li == 0 { &[] } else { &lg.layers[li - 1].units };
        let mut current: Vec<Tensor> = Vec::with_capacity(layer.units.len());
        let mut e = 0;
        for (row, (unit, f)) in layer.units.iter().zip(&layer.functions).enumerate() {
            let start = e;
            while e < layer.entries.len() && layer.entries[e].row == row {
                e += 1;
            }
            let entries = &layer.entries[start..e];
            let value = match unit {
                Unit::Skip(_) => below[entries[0].col].clone(),
                Unit::Neuron(id) => {
                    let pre = match &f.fact {
                        Some(FactValue::Fixed(t)) => t.clone(),
                        Some(FactValue::Slot(s)) => slots[*s].clone(),
                        None => {
                            let contributions: Vec<Tensor> = entries
                                .iter()
                                .map(|en| apply_weight(weight_tensor(&en.weight, &slots), &below[en.col]))
                                .collect();
                            match f.aggregation {
                                Some(agg) => {
                                    let ids: Vec<NodeId> = entries
                                        .iter()
                                        .map(|en| match prev_units[en.col] {
                                            Unit::Neuron(n) | Unit::Skip(n) => n,
                                        })
                                        .collect();
                                    aggregate(agg, &contributions, &ids, f.shape).0
                                }
                                None => {
                                    let mut acc = Tensor::zeros(f.shape);
                                    for c in &contributions {
                                        acc.add_assign_broadcast(c);
                                    }
                                    acc
                                }
                            }
                        }
                    };
                    let out = match f.activation {
                        Activation::Identity => pre,
                        act => pre.map(|x| act.apply(x)),
                    };
                    if !out.is_finite() {
                        return Err(Error::NonFinite { node: *id });
                    }
                    out
                }
            };
            current.push(value);
        }
        below = current;
    }
    let (l, u) = lg.output;
    if l + 1 != lg.layers.len() {
        return Err(Error::InvalidTemplate("output is not in the last layer".into()));
    }
    Ok(below[u].clone())
}
