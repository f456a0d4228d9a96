//! Small synthetic datasets encoded as example facts.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::logic::{Atom, Example, Query, Term, WeightedFact};
use crate::tensor::Tensor;
use crate::zoo::MOLECULE_TYPES;

/// Length of the one-hot degree features of graph tasks.
pub const DEGREE_FEATURES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    /// Random graphs of 5 to 9 nodes labelled by whether they contain a
    /// triangle. Nodes carry one-hot degree features in `feat/1`; edges are
    /// symmetric `edge/2` facts with a self-loop on every node.
    TriangleTask,
    /// Chains of 2 to 10 elements over `next/2` with unit `feat/1`,
    /// labelled 1 when the length is even.
    ChainLengthTask,
    /// Molecule-like graphs with atom types `a_c`, `a_o`, `a_h` and
    /// symmetric bonds `b/2`, labelled 1 when an oxygen bonds to a hydrogen.
    MolToy,
}

impl SynthKind {
    pub fn name(self) -> &'static str {
        match self {
            SynthKind::TriangleTask => "triangleTask",
            SynthKind::ChainLengthTask => "chainLengthTask",
            SynthKind::MolToy => "molToy",
        }
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "triangleTask" => Ok(SynthKind::TriangleTask),
            "chainLengthTask" => Ok(SynthKind::ChainLengthTask),
            "molToy" => Ok(SynthKind::MolToy),
            _ => Err(Error::Config(format!("unknown dataset kind `{s}`"))),
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `n` examples, half of them positive (the extra one negative when `n` is odd).
pub fn generate(kind: SynthKind, n: usize, seed: u64) -> Result<Vec<Example>> {
    if n < 2 {
        return Err(Error::Config(format!("need at least 2 examples, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut want = [n - n / 2, n / 2];
    let mut out = Vec::with_capacity(n);
    while want[0] + want[1] > 0 {
        let (label, example) = match kind {
            SynthKind::TriangleTask => triangle_graph(&mut rng),
            SynthKind::ChainLengthTask => chain(&mut rng),
            SynthKind::MolToy => molecule(&mut rng),
        };
        let slot = &mut want[label as usize];
        if *slot > 0 {
            *slot -= 1;
            out.push(example);
        }
    }
    out.shuffle(&mut rng);
    Ok(out)
}

fn node(i: usize) -> String {
    format!("v{i}")
}

fn atom(pred: &str, args: &[usize]) -> Atom {
    Atom::new(pred, args.iter().map(|&a| Term::constant(&node(a))).collect())
}

fn labelled(facts: Vec<WeightedFact>, label: bool) -> (bool, Example) {
    let target = Tensor::scalar(if label { 1.0 } else { 0.0 });
    (label, Example::new(facts, vec![Query { target, atom: Atom::new("q", vec![]) }]))
}

fn random_adjacency(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Vec<Vec<bool>> {
    let mut adj = vec![vec![false; n]; n];
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                adj[u][v] = true;
                adj[v][u] = true;
            }
        }
    }
    adj
}

pub fn has_triangle(adj: &[Vec<bool>]) -> bool {
    let n = adj.len();
    (0..n).any(|a| (a + 1..n).any(|b| adj[a][b] && (b + 1..n).any(|c| adj[a][c] && adj[b][c])))
}

fn triangle_graph(rng: &mut ChaCha8Rng) -> (bool, Example) {
    let n = rng.gen_range(5..=9);
    let p = rng.gen_range(0.15..0.6);
    let adj = random_adjacency(rng, n, p);
    let mut facts = Vec::new();
    for (v, row) in adj.iter().enumerate() {
        let degree = row.iter().filter(|&&e| e).count().min(DEGREE_FEATURES - 1);
        let mut one_hot = vec![0.0; DEGREE_FEATURES];
        one_hot[degree] = 1.0;
        facts.push(WeightedFact::new(Tensor::vector(one_hot), atom("feat", &[v])));
    }
    for u in 0..n {
        for v in 0..n {
            if u == v || adj[u][v] {
                facts.push(WeightedFact::unit(atom("edge", &[u, v])));
            }
        }
    }
    labelled(facts, has_triangle(&adj))
}

fn chain(rng: &mut ChaCha8Rng) -> (bool, Example) {
    let len = rng.gen_range(2..=10);
    let mut facts: Vec<WeightedFact> =
        (0..len).map(|i| WeightedFact::new(Tensor::vector(vec![1.0]), atom("feat", &[i]))).collect();
    facts.extend((1..len).map(|i| WeightedFact::unit(atom("next", &[i - 1, i]))));
    labelled(facts, len % 2 == 0)
}

fn molecule(rng: &mut ChaCha8Rng) -> (bool, Example) {
    let n = rng.gen_range(4..=10);
    let types: Vec<usize> = (0..n)
        .map(|_| match rng.gen_range(0..10) {
            0..=4 => 0,
            5..=6 => 1,
            _ => 2,
        })
        .collect();
    let mut adj = vec![vec![false; n]; n];
    for v in 1..n {
        let u = rng.gen_range(0..v);
        adj[u][v] = true;
        adj[v][u] = true;
    }
    for _ in 0..rng.gen_range(0..=2) {
        let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if u != v {
            adj[u][v] = true;
            adj[v][u] = true;
        }
    }
    let mut facts: Vec<WeightedFact> =
        types.iter().enumerate().map(|(v, &t)| WeightedFact::unit(atom(MOLECULE_TYPES[t], &[v]))).collect();
    let mut label = false;
    for u in 0..n {
        for v in 0..n {
            if adj[u][v] {
                facts.push(WeightedFact::unit(atom("b", &[u, v])));
                label |= types[u] == 1 && types[v] == 2;
            }
        }
    }
    labelled(facts, label)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label(e: &Example) -> f64 {
        e.queries[0].target.item()
    }

    #[test]
    fn triangle_task_is_balanced() {
        let exs = generate(SynthKind::TriangleTask, 200, 1).unwrap();
        assert_eq!(exs.len(), 200);
        assert_eq!(exs.iter().filter(|e| label(e) == 1.0).count(), 100);
    }

    #[test]
    fn same_seed_same_data() {
        for kind in [SynthKind::TriangleTask, SynthKind::ChainLengthTask, SynthKind::MolToy] {
            assert_eq!(generate(kind, 20, 9).unwrap(), generate(kind, 20, 9).unwrap());
        }
    }

    #[test]
    fn molecule_bonds_are_symmetric() {
        for e in generate(SynthKind::MolToy, 50, 2).unwrap() {
            for f in e.facts.iter().filter(|f| f.atom.predicate.name.as_str() == "b") {
                let rev = Atom::new("b", vec![f.atom.terms[1].clone(), f.atom.terms[0].clone()]);
                assert!(e.facts.iter().any(|g| g.atom == rev));
            }
        }
    }

    #[test]
    fn triangle_labels_match_facts() {
        for e in generate(SynthKind::TriangleTask, 30, 4).unwrap() {
            let edges: Vec<(String, String)> = e
                .facts
                .iter()
                .filter(|f| f.atom.predicate.name.as_str() == "edge")
                .map(|f| (f.atom.terms[0].to_string(), f.atom.terms[1].to_string()))
                .filter(|(a, b)| a != b)
                .collect();
            let has = |a: &str, b: &str| edges.iter().any(|(x, y)| x == a && y == b);
            let nodes: Vec<String> =
                e.facts.iter().filter(|f| f.atom.predicate.name.as_str() == "feat").map(|f| f.atom.terms[0].to_string()).collect();
            let mut tri = false;
            for a in &nodes {
                for b in &nodes {
                    for c in &nodes {
                        tri |= has(a, b) && has(b, c) && has(c, a);
                    }
                }
            }
            assert_eq!(tri, label(&e) == 1.0);
        }
    }

    #[test]
    fn too_few_examples() {
        assert!(matches!(generate(SynthKind::MolToy, 1, 0), Err(Error::Config(_))));
    }
}
