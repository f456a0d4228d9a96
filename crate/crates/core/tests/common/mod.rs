#![allow(dead_code)]

//! Independent reference implementations shared by the integration tests.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use liftc::autodiff::ParameterStore;
use liftc::logic::{Example, Symbol};
use rand::Rng;

// ---------------------------------------------------------------------------
// Datalog

#[derive(Clone, Debug)]
pub struct RawAtom {
    pub pred: String,
    pub args: Vec<String>,
}

impl RawAtom {
    pub fn text(&self) -> String {
        if self.args.is_empty() {
            self.pred.clone()
        } else {
            format!("{}({})", self.pred, self.args.join(","))
        }
    }

    fn ground(&self, theta: &BTreeMap<String, String>) -> String {
        let args: Vec<String> = self
            .args
            .iter()
            .map(|a| if is_var(a) { theta[a].clone() } else { a.clone() })
            .collect();
        RawAtom { pred: self.pred.clone(), args }.text()
    }
}

#[derive(Clone, Debug)]
pub struct RawRule {
    pub head: RawAtom,
    pub body: Vec<RawAtom>,
}

impl RawRule {
    pub fn text(&self) -> String {
        let body: Vec<String> = self.body.iter().map(RawAtom::text).collect();
        format!("{} :- {}.", self.head.text(), body.join(", "))
    }

    fn variables(&self) -> Vec<String> {
        let mut vars = BTreeSet::new();
        for a in self.body.iter().chain(std::iter::once(&self.head)) {
            for t in &a.args {
                if is_var(t) {
                    vars.insert(t.clone());
                }
            }
        }
        vars.into_iter().collect()
    }
}

fn is_var(t: &str) -> bool {
    t.starts_with(|c: char| c.is_ascii_uppercase())
}

/// Every substitution of the rule's variables over `constants`.
fn assignments(vars: &[String], constants: &[String]) -> Vec<BTreeMap<String, String>> {
    let mut out = vec![BTreeMap::new()];
    for v in vars {
        let mut next = Vec::with_capacity(out.len() * constants.len());
        for theta in &out {
            for c in constants {
                let mut t = theta.clone();
                t.insert(v.clone(), c.clone());
                next.push(t);
            }
        }
        out = next;
    }
    out
}

/// Least model by exhaustive instantiation over the Herbrand universe.
pub fn brute_force_model(rules: &[RawRule], facts: &[RawAtom], constants: &[String]) -> HashSet<String> {
    let mut model: HashSet<String> = facts.iter().map(RawAtom::text).collect();
    let grounded: Vec<Vec<BTreeMap<String, String>>> =
        rules.iter().map(|r| assignments(&r.variables(), constants)).collect();
    loop {
        let mut added = false;
        for (rule, thetas) in rules.iter().zip(&grounded) {
            for theta in thetas {
                if rule.body.iter().all(|b| model.contains(&b.ground(theta))) && model.insert(rule.head.ground(theta)) {
                    added = true;
                }
            }
        }
        if !added {
            return model;
        }
    }
}

/// Ground instances whose body holds in `model`, as (rule, head, body).
pub fn brute_force_instances(
    rules: &[RawRule],
    model: &HashSet<String>,
    constants: &[String],
) -> BTreeSet<(usize, String, Vec<String>)> {
    let mut out = BTreeSet::new();
    for (i, rule) in rules.iter().enumerate() {
        for theta in assignments(&rule.variables(), constants) {
            let body: Vec<String> = rule.body.iter().map(|b| b.ground(&theta)).collect();
            if body.iter().all(|b| model.contains(b)) {
                out.insert((i, rule.head.ground(&theta), body));
            }
        }
    }
    out
}

pub struct RandomProgram {
    pub rules: Vec<RawRule>,
    pub facts: Vec<RawAtom>,
    pub constants: Vec<String>,
}

impl RandomProgram {
    pub fn template_text(&self) -> String {
        self.rules.iter().map(|r| r.text() + "\n").collect()
    }

    pub fn example_text(&self) -> String {
        self.facts.iter().map(|f| f.text() + ".\n").collect()
    }
}

/// At most 6 constants, 4 predicates of arity at most 2 and 8 safe rules.
pub fn random_program(rng: &mut impl Rng) -> RandomProgram {
    let constants: Vec<String> = (0..rng.gen_range(1..=6)).map(|i| format!("c{i}")).collect();
    let arities: Vec<usize> = (0..rng.gen_range(1..=4)).map(|_| rng.gen_range(0..=2)).collect();
    let pick_const = |rng: &mut dyn rand::RngCore| constants[rng.gen_range(0..constants.len())].clone();
    let mut facts = Vec::new();
    for _ in 0..rng.gen_range(1..=10) {
        let p = rng.gen_range(0..arities.len());
        let args = (0..arities[p]).map(|_| pick_const(rng)).collect();
        facts.push(RawAtom { pred: format!("p{p}"), args });
    }
    let vars = ["X", "Y", "Z"];
    let mut rules = Vec::new();
    for _ in 0..rng.gen_range(0..=8) {
        let mut body = Vec::new();
        let mut used: Vec<String> = Vec::new();
        for _ in 0..rng.gen_range(1..=3) {
            let p = rng.gen_range(0..arities.len());
            let args: Vec<String> = (0..arities[p])
                .map(|_| {
                    if rng.gen_bool(0.2) {
                        pick_const(rng)
                    } else {
                        let v = vars[rng.gen_range(0..vars.len())].to_string();
                        if !used.contains(&v) {
                            used.push(v.clone());
                        }
                        v
                    }
                })
                .collect();
            body.push(RawAtom { pred: format!("p{p}"), args });
        }
        let h = rng.gen_range(0..arities.len());
        let args = (0..arities[h])
            .map(|_| {
                if used.is_empty() || rng.gen_bool(0.1) {
                    pick_const(rng)
                } else {
                    used[rng.gen_range(0..used.len())].clone()
                }
            })
            .collect();
        rules.push(RawRule { head: RawAtom { pred: format!("p{h}"), args }, body });
    }
    RandomProgram { rules, facts, constants }
}

// ---------------------------------------------------------------------------
// Dense algebra and graph layer formulas

#[derive(Clone, Debug)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn from_params(params: &ParameterStore, name: &str) -> Mat {
        let t = params.get(&Symbol::new(name)).unwrap_or_else(|| panic!("missing {name}"));
        Mat { rows: t.shape().rows, cols: t.shape().cols, data: t.data().to_vec() }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows).map(|r| (0..self.cols).map(|c| self.data[r * self.cols + c] * x[c]).sum()).collect()
    }
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn relu(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.max(0.0)).collect()
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn mean(vs: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; vs[0].len()];
    for v in vs {
        for (o, x) in out.iter_mut().zip(v) {
            *o += x;
        }
    }
    out.iter().map(|x| x / vs.len() as f64).collect()
}

pub fn sum(vs: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; vs[0].len()];
    for v in vs {
        for (o, x) in out.iter_mut().zip(v) {
            *o += x;
        }
    }
    out
}

pub fn elementwise_max(vs: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vs[0].clone();
    for v in &vs[1..] {
        for (o, x) in out.iter_mut().zip(v) {
            *o = o.max(*x);
        }
    }
    out
}

/// Node features and out-neighbour lists read off `feat/1` and `edge/2` facts.
pub struct GraphInput {
    pub features: Vec<Vec<f64>>,
    pub neighbours: Vec<Vec<usize>>,
}

impl GraphInput {
    pub fn from_example(ex: &Example) -> GraphInput {
        let mut index = BTreeMap::new();
        let mut features = Vec::new();
        for f in &ex.facts {
            if f.atom.predicate.name.as_str() == "feat" {
                index.insert(f.atom.terms[0].to_string(), features.len());
                features.push(f.value.data().to_vec());
            }
        }
        let mut neighbours = vec![Vec::new(); features.len()];
        for f in &ex.facts {
            if f.atom.predicate.name.as_str() == "edge" {
                let v = index[&f.atom.terms[0].to_string()];
                let u = index[&f.atom.terms[1].to_string()];
                neighbours[v].push(u);
            }
        }
        GraphInput { features, neighbours }
    }
}

/// h(v) = relu(W · avg{h(u) | edge(v, u)}), then sigmoid(Wq · avg_v h(v)).
pub fn gcn_oracle(g: &GraphInput, params: &ParameterStore, layers: usize) -> f64 {
    let mut h = g.features.clone();
    for i in 1..=layers {
        let w = Mat::from_params(params, &format!("W{i}"));
        h = (0..h.len())
            .map(|v| {
                let msgs: Vec<Vec<f64>> = g.neighbours[v].iter().map(|&u| h[u].clone()).collect();
                relu(&w.mul(&mean(&msgs)))
            })
            .collect();
    }
    let wq = Mat::from_params(params, "Wq");
    sigmoid(wq.mul(&mean(&h))[0])
}

/// h(v) = max{relu(S · h(u)) | edge(v, u)} + relu(T · h(v)).
pub fn gsage_oracle(g: &GraphInput, params: &ParameterStore, layers: usize) -> f64 {
    let mut h = g.features.clone();
    for i in 1..=layers {
        let s = Mat::from_params(params, &format!("S{i}"));
        let t = Mat::from_params(params, &format!("T{i}"));
        h = (0..h.len())
            .map(|v| {
                let msgs: Vec<Vec<f64>> = g.neighbours[v].iter().map(|&u| relu(&s.mul(&h[u]))).collect();
                add(&elementwise_max(&msgs), &relu(&t.mul(&h[v])))
            })
            .collect();
    }
    let wq = Mat::from_params(params, "Wq");
    sigmoid(wq.mul(&mean(&h))[0])
}

/// h(v) = relu(sum{Ba · relu(Aa · h(u)) | edge(v, u)} + Bb · relu(Ab · h(v))),
/// read out as sigmoid(sum_i Qi · avg_v h_i(v)).
pub fn gin0_oracle(g: &GraphInput, params: &ParameterStore, layers: usize) -> f64 {
    let mut h = g.features.clone();
    let mut readout = 0.0;
    for i in 1..=layers {
        let m = |n: &str| Mat::from_params(params, &format!("{n}{i}"));
        let (aa, ba, ab, bb) = (m("Aa"), m("Ba"), m("Ab"), m("Bb"));
        h = (0..h.len())
            .map(|v| {
                let msgs: Vec<Vec<f64>> = g.neighbours[v].iter().map(|&u| ba.mul(&relu(&aa.mul(&h[u])))).collect();
                relu(&add(&sum(&msgs), &bb.mul(&relu(&ab.mul(&h[v])))))
            })
            .collect();
        readout += m("Q").mul(&mean(&h))[0];
    }
    sigmoid(readout)
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
