//! Browser bindings for the liftc demo page.

use liftc::graph::{build_graph, export_dot, prune};
use liftc::ground::{ground_for_query, GroundConfig, QueryGrounding};
use liftc::logic::{Example, Template};
use liftc::parser::{parse_examples, parse_template};
use liftc::train::{train, CompileConfig, Dataset, TrainConfig};
use wasm_bindgen::prelude::*;

fn load(template: &str, examples: &str) -> Result<(Template, Vec<Example>), String> {
    let t = parse_template(template).map_err(|e| format!("template: {e}"))?;
    let exs = parse_examples(examples).map_err(|e| format!("examples: {e}"))?;
    if exs.is_empty() {
        return Err("examples: no examples given".into());
    }
    Ok((t, exs))
}

/// Ground instances for every query, in the same layout as `liftc ground`.
pub fn ground_listing(template: &str, examples: &str) -> Result<String, String> {
    let (t, exs) = load(template, examples)?;
    let mut out = String::new();
    for (i, ex) in exs.iter().enumerate() {
        for q in &ex.queries {
            out += &format!("% example {i} query {}\n", q.atom);
            match ground_for_query(&t, ex, &q.atom, &GroundConfig::default()).map_err(|e| e.to_string())? {
                QueryGrounding::Entailed(p) => out += &p.dump(),
                QueryGrounding::NotEntailed { .. } => out += "NOT ENTAILED\n",
            }
        }
    }
    Ok(out)
}

/// DOT source and size of the pruned graph for the first query of `example`.
pub fn graph_json(template: &str, examples: &str, example: usize) -> Result<String, String> {
    let (t, exs) = load(template, examples)?;
    let ex = exs.get(example).ok_or_else(|| format!("no example {example}"))?;
    let q = &ex.queries.first().ok_or("example has no query")?.atom;
    let program = match ground_for_query(&t, ex, q, &GroundConfig::default()).map_err(|e| e.to_string())? {
        QueryGrounding::Entailed(p) => p,
        QueryGrounding::NotEntailed { .. } => return Err(format!("{q} is not entailed")),
    };
    let full = build_graph(&t, ex, &program, q).map_err(|e| e.to_string())?;
    let pruned = prune(&full);
    let stats = pruned.stats();
    Ok(serde_json::json!({
        "dot": export_dot(&pruned),
        "nodes": stats.nodes,
        "edges": stats.edges,
        "params": stats.params,
        "depth": stats.depth,
        "unprunedNodes": full.len(),
    })
    .to_string())
}

/// Per-epoch training loss and final accuracy as JSON.
pub fn loss_curve(template: &str, examples: &str, epochs: usize, learning_rate: f64, seed: u64) -> Result<String, String> {
    let (t, exs) = load(template, examples)?;
    let cfg = TrainConfig { epochs, learning_rate, seed, ..Default::default() };
    cfg.validate().map_err(|e| e.to_string())?;
    let data = Dataset::compile(&t, &exs, &CompileConfig::pruned()).map_err(|e| e.to_string())?;
    let out = train(&data, &t, &cfg, &mut |_| {}).map_err(|e| e.to_string())?;
    let metrics = liftc::train::evaluate(&data, &data.all(), &out.params, &cfg).map_err(|e| e.to_string())?;
    let losses: Vec<f64> = out.log.iter().map(|l| l.train_loss).collect();
    Ok(serde_json::json!({
        "loss": losses,
        "accuracy": metrics.accuracy,
        "params": out.params.to_text(),
    })
    .to_string())
}

#[wasm_bindgen]
pub fn ground(template: &str, examples: &str) -> Result<String, JsValue> {
    ground_listing(template, examples).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn graph(template: &str, examples: &str, example: usize) -> Result<String, JsValue> {
    graph_json(template, examples, example).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn fit(template: &str, examples: &str, epochs: usize, learning_rate: f64, seed: u64) -> Result<String, JsValue> {
    loss_curve(template, examples, epochs, learning_rate, seed).map_err(|e| JsValue::from_str(&e))
}
