//! Named template generators for common architectures.
//!
//! Graph models read node features from `feat/1` (column vectors) and
//! structure from `edge/2`. Sequence models use `feat/1` and `next/2`; the
//! recursive model uses `feat/1` on leaves, `parent/k+1` and `root/1`. Every
//! model ends in an average-pooled linear readout into the proposition `q`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::functions::Activation;
use crate::logic::{Atom, Example, Query, Template, Term, WeightedFact};
use crate::parser::{parse_template, serialize_template};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ZooName {
    Mlp,
    Cnn1d,
    Recurrent,
    Recursive,
    Gcn,
    Gsage,
    Gin0,
    GinStar,
    Graphlets,
    LatentBonds,
}

impl ZooName {
    pub const ALL: [ZooName; 10] = [
        ZooName::Mlp,
        ZooName::Cnn1d,
        ZooName::Recurrent,
        ZooName::Recursive,
        ZooName::Gcn,
        ZooName::Gsage,
        ZooName::Gin0,
        ZooName::GinStar,
        ZooName::Graphlets,
        ZooName::LatentBonds,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ZooName::Mlp => "mlp",
            ZooName::Cnn1d => "cnn1d",
            ZooName::Recurrent => "recurrent",
            ZooName::Recursive => "recursive",
            ZooName::Gcn => "gcn",
            ZooName::Gsage => "gsage",
            ZooName::Gin0 => "gin0",
            ZooName::GinStar => "ginStar",
            ZooName::Graphlets => "graphlets",
            ZooName::LatentBonds => "latentBonds",
        }
    }

    /// Models over `feat/1` and `edge/2`.
    pub fn is_graph_model(self) -> bool {
        matches!(
            self,
            ZooName::Gcn | ZooName::Gsage | ZooName::Gin0 | ZooName::GinStar | ZooName::Graphlets | ZooName::LatentBonds
        )
    }

    fn default_layers(self) -> usize {
        match self {
            ZooName::Gin0 | ZooName::GinStar | ZooName::Graphlets => 5,
            _ => 2,
        }
    }
}

impl FromStr for ZooName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ZooName::ALL
            .into_iter()
            .find(|z| z.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown zoo model `{s}`")))
    }
}

impl fmt::Display for ZooName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where node features and edges come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputEncoding {
    /// `feat/1` vectors and `edge/2` facts supplied by the examples.
    #[default]
    Features,
    /// Atom types `a_c`, `a_o`, `a_h` and bonds `b/2`, mapped onto one-hot
    /// `feat/1` and self-looped `edge/2` by fixed rules.
    Molecule,
}

pub const MOLECULE_TYPES: [&str; 3] = ["a_c", "a_o", "a_h"];

impl FromStr for InputEncoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "features" => Ok(InputEncoding::Features),
            "molecule" => Ok(InputEncoding::Molecule),
            _ => Err(Error::Config(format!("unknown input encoding `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZooSpec {
    pub name: ZooName,
    pub layers: usize,
    pub dim: usize,
    pub input_dim: usize,
    /// Kernel width of cnn1d.
    pub kernel: usize,
    /// Children per node of recursive.
    pub arity: usize,
    /// GIN self coefficient; only 0 is supported.
    pub epsilon: f64,
    /// Hidden nonlinearity.
    pub activation: Activation,
    pub input: InputEncoding,
}

impl ZooSpec {
    pub fn new(name: ZooName) -> Self {
        ZooSpec {
            name,
            layers: name.default_layers(),
            dim: 10,
            input_dim: 10,
            kernel: 3,
            arity: 3,
            epsilon: 0.0,
            activation: Activation::Relu,
            input: InputEncoding::Features,
        }
    }

    pub fn with_layers(mut self, layers: usize) -> Self {
        self.layers = layers;
        self
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }

    pub fn with_input_dim(mut self, input_dim: usize) -> Self {
        self.input_dim = input_dim;
        self
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn with_input(mut self, input: InputEncoding) -> Self {
        self.input = input;
        if input == InputEncoding::Molecule {
            self.input_dim = MOLECULE_TYPES.len();
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("{}: {m}", self.name)));
        if self.layers == 0 || self.dim == 0 || self.input_dim == 0 {
            return bad("layers, dim and input dim must be at least 1");
        }
        if self.kernel == 0 || self.arity == 0 {
            return bad("kernel width and arity must be at least 1");
        }
        if self.epsilon != 0.0 {
            return bad("only epsilon = 0 is supported");
        }
        if self.input == InputEncoding::Molecule {
            if !self.name.is_graph_model() {
                return bad("molecule input needs a graph model");
            }
            if self.input_dim != MOLECULE_TYPES.len() {
                return bad("molecule input has 3 feature dimensions");
            }
        }
        Ok(())
    }
}

/// Builds the template text for `spec`.
pub fn template_text(spec: &ZooSpec) -> Result<String> {
    spec.validate()?;
    let mut g = Gen { out: String::new(), spec };
    g.header();
    match spec.name {
        ZooName::Mlp => g.mlp(),
        ZooName::Cnn1d => g.cnn1d(),
        ZooName::Recurrent => g.recurrent(),
        ZooName::Recursive => g.recursive(),
        ZooName::Gcn => g.gcn(),
        ZooName::Gsage => g.gsage(),
        ZooName::Gin0 => g.gin(false),
        ZooName::GinStar => g.gin(true),
        ZooName::Graphlets => {
            g.gin(false);
            g.graphlet();
        }
        ZooName::LatentBonds => g.latent_bonds(),
    }
    Ok(g.out)
}

pub fn instantiate(spec: &ZooSpec) -> Result<Template> {
    let text = template_text(spec)?;
    parse_template(&text).map_err(Error::from)
}

/// Writes every model at its default spec as `<name>.tpl`.
pub fn export_zoo(dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::with_capacity(ZooName::ALL.len());
    for name in ZooName::ALL {
        let template = instantiate(&ZooSpec::new(name))?;
        let path = dir.join(format!("{name}.tpl"));
        std::fs::write(&path, serialize_template(&template)).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

struct Gen<'a> {
    out: String,
    spec: &'a ZooSpec,
}

impl Gen<'_> {
    fn line(&mut self, s: &str) {
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn act(&self) -> Activation {
        self.spec.activation
    }

    /// Input width of layer `i` (1-based).
    fn width(&self, i: usize) -> usize {
        if i == 1 {
            self.spec.input_dim
        } else {
            self.spec.dim
        }
    }

    /// Node representation atom name at layer `i`.
    fn h(i: usize) -> String {
        if i == 0 {
            "feat".into()
        } else {
            format!("h{i}")
        }
    }

    fn header(&mut self) {
        self.line("@atom q/0 sigmoid.");
        if self.spec.input == InputEncoding::Molecule {
            let n = MOLECULE_TYPES.len();
            for (k, ty) in MOLECULE_TYPES.iter().enumerate() {
                let one_hot: Vec<&str> = (0..n).map(|j| if j == k { "1" } else { "0" }).collect();
                self.line(&format!("[{}] :: feat(X) :- {ty}(X).", one_hot.join(", ")));
                self.line(&format!("edge(X, X) :- {ty}(X)."));
            }
            self.line("edge(X, Y) :- b(X, Y).");
        }
    }

    fn readout(&mut self, atom: &str) {
        let d = self.spec.dim;
        self.line(&format!("Wq {{1,{d}}} :: q :- {atom}(X)."));
    }

    fn atom_act(&mut self, pred: &str, arity: usize) {
        let a = self.act();
        if a != Activation::Identity {
            self.line(&format!("@atom {pred}/{arity} {a}."));
        }
    }

    fn mlp(&mut self) {
        let (l, d) = (self.spec.layers, self.spec.dim);
        let a = self.act();
        for i in 1..=l {
            let head = if i == l { "q".to_string() } else { format!("h{i}") };
            let body = if i == 1 { "features".to_string() } else { format!("h{}", i - 1) };
            let rows = if i == l { 1 } else { d };
            let w = self.width(i);
            self.line(&format!("A{i} {{{rows},{d}}} :: {head} :- B{i} {{{d},{w}}} : {body} | activation={a}."));
        }
    }

    fn cnn1d(&mut self) {
        let (l, d, k) = (self.spec.layers, self.spec.dim, self.spec.kernel);
        for i in 1..=l {
            let (h, prev) = (Self::h(i), Self::h(i - 1));
            self.atom_act(&h, 1);
            let w = self.width(i);
            let mut body: Vec<String> = (1..=k).map(|j| format!("K{i}_{j} {{{d},{w}}} : {prev}(X{j})")).collect();
            body.extend((1..k).map(|j| format!("0 : next(X{j}, X{})", j + 1)));
            self.line(&format!("{h}(X1) :- {}.", body.join(", ")));
        }
        self.readout(&Self::h(l));
    }

    fn recurrent(&mut self) {
        let (l, d) = (self.spec.layers, self.spec.dim);
        for i in 1..=l {
            let (h, prev) = (Self::h(i), Self::h(i - 1));
            self.atom_act(&h, 1);
            let w = self.width(i);
            self.line(&format!("{h}(Y) :- F{i} {{{d},{w}}} : {prev}(Y)."));
            self.line(&format!("{h}(Y) :- R{i} {{{d},{d}}} : {h}(X), 0 : next(X, Y)."));
        }
        self.readout(&Self::h(l));
    }

    fn recursive(&mut self) {
        let (d, k, w) = (self.spec.dim, self.spec.arity, self.spec.input_dim);
        self.atom_act("n", 1);
        self.line(&format!("n(X) :- L {{{d},{w}}} : feat(X)."));
        let children: Vec<String> = (1..=k).map(|j| format!("C{j}")).collect();
        let mut body: Vec<String> = (1..=k).map(|j| format!("W{j} {{{d},{d}}} : n(C{j})")).collect();
        body.push(format!("0 : parent(P, {})", children.join(", ")));
        self.line(&format!("n(P) :- {}.", body.join(", ")));
        self.line(&format!("Wq {{1,{d}}} :: q :- n(R), 0 : root(R)."));
    }

    fn gcn(&mut self) {
        let (l, d) = (self.spec.layers, self.spec.dim);
        for i in 1..=l {
            let (h, prev) = (Self::h(i), Self::h(i - 1));
            self.atom_act(&h, 1);
            let w = self.width(i);
            self.line(&format!("W{i} {{{d},{w}}} :: {h}(V) :- {prev}(U), 0 : edge(V, U)."));
        }
        self.readout(&Self::h(l));
    }

    fn gsage(&mut self) {
        let (l, d) = (self.spec.layers, self.spec.dim);
        let a = self.act();
        for i in 1..=l {
            let (h, prev) = (Self::h(i), Self::h(i - 1));
            let w = self.width(i);
            self.line(&format!(
                "{h}(V) :- S{i} {{{d},{w}}} : {prev}(U), 0 : edge(V, U) | activation={a}, aggregation=max."
            ));
            self.line(&format!("{h}(V) :- T{i} {{{d},{w}}} : {prev}(V) | activation={a}."));
        }
        self.readout(&Self::h(l));
    }

    /// GIN-0 layers with jumping-knowledge readout. The starred variant
    /// weights the edge literal and adds a matrix to each readout link.
    fn gin(&mut self, star: bool) {
        let (l, d) = (self.spec.layers, self.spec.dim);
        let a = self.act();
        for i in 1..=l {
            let (h, prev) = (Self::h(i), Self::h(i - 1));
            self.atom_act(&h, 1);
            let w = self.width(i);
            let edge = if star { format!("E{i} {{{d},1}}") } else { "0".into() };
            self.line(&format!(
                "Ba{i} {{{d},{d}}} :: {h}(V) :- Aa{i} {{{d},{w}}} : {prev}(U), {edge} : edge(V, U) | activation={a}, aggregation=sum."
            ));
            self.line(&format!(
                "Bb{i} {{{d},{d}}} :: {h}(V) :- Ab{i} {{{d},{w}}} : {prev}(V) | activation={a}, aggregation=sum."
            ));
        }
        for i in 1..=l {
            let h = Self::h(i);
            if star {
                self.line(&format!("Q{i} {{1,{d}}} :: q :- R{i} {{{d},{d}}} : {h}(X)."));
            } else {
                self.line(&format!("Q{i} {{1,{d}}} :: q :- {h}(X)."));
            }
        }
    }

    fn graphlet(&mut self) {
        let d = self.spec.dim;
        let a = self.act();
        let h = Self::h(self.spec.layers);
        self.line(&format!(
            "Tw {{{d},{d}}} :: tri(X) :- T1 {{{d},{d}}} : {h}(X), T2 {{{d},{d}}} : {h}(Y), T3 {{{d},{d}}} : {h}(Z), \
             0 : edge(X, Y), 0 : edge(Y, Z), 0 : edge(Z, X) | activation={a}."
        ));
        self.line(&format!("Qt {{1,{d}}} :: q :- tri(X)."));
    }

    fn latent_bonds(&mut self) {
        let (l, d) = (self.spec.layers, self.spec.dim);
        let a = self.act();
        for i in 1..=l {
            let (h, prev) = (Self::h(i), Self::h(i - 1));
            let w = self.width(i);
            let e = format!("e{i}");
            let (prev_e, ew) = if i == 1 { ("edge".to_string(), 1) } else { (format!("e{}", i - 1), d) };
            self.line(&format!(
                "Ea{i} {{{d},{d}}} :: {e}(U, V) :- Pa{i} {{{d},{w}}} : {prev}(U), Pb{i} {{{d},{w}}} : {prev}(V), 0 : edge(U, V) | activation={a}."
            ));
            self.line(&format!(
                "Ec{i} {{{d},{d}}} :: {e}(U, V) :- Pc{i} {{{d},{ew}}} : {prev_e}(T, U), 0 : edge(U, V) | activation={a}."
            ));
            self.line(&format!("Nn{i} {{{d},{d}}} :: {h}(V) :- Nm{i} {{{d},{d}}} : {e}(U, V) | activation={a}."));
            self.line(&format!("Ns{i} {{{d},{w}}} :: {h}(V) :- {prev}(V)."));
        }
        self.readout(&Self::h(l));
    }
}

fn constant(name: &str) -> Term {
    Term::constant(name)
}

fn fact(pred: &str, args: &[String], value: Tensor) -> WeightedFact {
    WeightedFact::new(value, Atom::new(pred, args.iter().map(|a| constant(a)).collect()))
}

fn unit(pred: &str, args: &[String]) -> WeightedFact {
    fact(pred, args, Tensor::scalar(1.0))
}

fn random_vector(rng: &mut impl Rng, n: usize) -> Tensor {
    Tensor::vector((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

/// Random undirected graph on `n` nodes as symmetric edge facts with a
/// self-loop on every node.
pub fn random_graph_edges(rng: &mut impl Rng, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = (0..n).map(|v| (v, v)).collect();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
                edges.push((v, u));
            }
        }
    }
    edges
}

fn node(i: usize) -> String {
    format!("n{i}")
}

/// A random input example for `spec` with about `n` nodes and query `q`
/// labelled with a random 0/1 target.
pub fn sample_example(spec: &ZooSpec, n: usize, rng: &mut impl Rng) -> Example {
    let n = n.max(1);
    let mut facts = Vec::new();
    let w = spec.input_dim;
    match spec.name {
        ZooName::Mlp => facts.push(WeightedFact::new(random_vector(rng, w), Atom::new("features", vec![]))),
        ZooName::Cnn1d | ZooName::Recurrent => {
            let len = n.max((spec.kernel - 1) * spec.layers + 1);
            for i in 0..len {
                facts.push(fact("feat", &[node(i)], random_vector(rng, w)));
            }
            for i in 1..len {
                facts.push(unit("next", &[node(i - 1), node(i)]));
            }
        }
        ZooName::Recursive => {
            let mut leaves = vec![0usize];
            let mut count = 1;
            while count < n {
                let at = rng.gen_range(0..leaves.len());
                let p = leaves.swap_remove(at);
                let mut args = vec![node(p)];
                for _ in 0..spec.arity {
                    leaves.push(count);
                    args.push(node(count));
                    count += 1;
                }
                facts.push(unit("parent", &args));
            }
            leaves.sort_unstable();
            for l in leaves {
                facts.push(fact("feat", &[node(l)], random_vector(rng, w)));
            }
            facts.push(unit("root", &[node(0)]));
        }
        _ => {
            let edges = random_graph_edges(rng, n, 0.5);
            match spec.input {
                InputEncoding::Features => {
                    for v in 0..n {
                        facts.push(fact("feat", &[node(v)], random_vector(rng, w)));
                    }
                    for (u, v) in edges {
                        facts.push(unit("edge", &[node(u), node(v)]));
                    }
                }
                InputEncoding::Molecule => {
                    for v in 0..n {
                        let ty = MOLECULE_TYPES.choose(rng).expect("types");
                        facts.push(unit(ty, &[node(v)]));
                    }
                    for (u, v) in edges.into_iter().filter(|(u, v)| u != v) {
                        facts.push(unit("b", &[node(u), node(v)]));
                    }
                }
            }
        }
    }
    let target = if rng.gen_bool(0.5) { 1.0 } else { 0.0 };
    let query = Query { target: Tensor::scalar(target), atom: Atom::new("q", vec![]) };
    Example { facts, queries: vec![query] }
}
