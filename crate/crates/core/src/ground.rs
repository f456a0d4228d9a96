//! Least Herbrand models and restricted groundings.
//!
//! Bottom-up semi-naive evaluation assigns every atom a stage: example and
//! template facts are stage 0 and an atom first derived in round `s` has
//! stage `s`. Query groundings are obtained by filtering the full restricted
//! grounding backwards from the query atom.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use indexmap::{IndexMap, IndexSet};

use crate::error::{Error, Result};
use crate::logic::{Atom, Example, Predicate, Substitution, Symbol, Template, Term, WeightedRule};

pub const DEFAULT_ATOM_CAP: usize = 10_000_000;

/// What to do when the ground program relevant to a query is cyclic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CyclePolicy {
    /// Report [`Error::Cyclic`].
    #[default]
    Reject,
    /// Inside each strongly connected part of the dependency graph, keep
    /// only instances whose body atoms were derived strictly earlier than
    /// their head. The result is always acyclic.
    Stratify,
}

/// How an atom that is both an example fact and derivable is wired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FactOverlap {
    /// The derived atom node gets the fact node as an extra unweighted input.
    #[default]
    DerivedWithFactInput,
    /// The fact node stands alone and derivations of the atom are ignored.
    FactOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundConfig {
    pub atom_cap: usize,
    pub cycles: CyclePolicy,
    pub fact_overlap: FactOverlap,
    /// Value assumed for queries that are not entailed.
    pub default_value: f64,
}

impl Default for GroundConfig {
    fn default() -> Self {
        GroundConfig {
            atom_cap: DEFAULT_ATOM_CAP,
            cycles: CyclePolicy::default(),
            fact_overlap: FactOverlap::default(),
            default_value: 0.0,
        }
    }
}

/// Where a fact atom came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactSource {
    /// Index into [`Example::facts`].
    Example(usize),
    /// Index of a body-less rule in the template.
    Template(usize),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HerbrandModel {
    /// Atoms in derivation order, with their stage.
    atoms: IndexMap<Atom, usize>,
}

impl HerbrandModel {
    pub fn contains(&self, atom: &Atom) -> bool {
        self.atoms.contains_key(atom)
    }

    pub fn stage(&self, atom: &Atom) -> Option<usize> {
        self.atoms.get(atom).copied()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.atoms.keys()
    }

    pub fn to_set(&self) -> HashSet<Atom> {
        self.atoms.keys().cloned().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundRuleInstance {
    pub rule: usize,
    pub theta: Substitution,
    pub head: Atom,
    pub body: Vec<Atom>,
}

impl std::fmt::Display for GroundRuleInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {} <-", self.rule, self.head)?;
        for (i, b) in self.body.iter().enumerate() {
            f.write_str(if i == 0 { " " } else { ", " })?;
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundProgram {
    pub model: HerbrandModel,
    pub instances: Vec<GroundRuleInstance>,
    /// Fact atoms of the program, first source wins on duplicates.
    pub facts: IndexMap<Atom, FactSource>,
}

impl GroundProgram {
    /// One line per instance: `rule: head <- b1, b2`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for inst in &self.instances {
            let _ = writeln!(out, "{inst}");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QueryGrounding {
    Entailed(GroundProgram),
    NotEntailed { default_value: f64 },
}

impl QueryGrounding {
    pub fn program(&self) -> Option<&GroundProgram> {
        match self {
            QueryGrounding::Entailed(p) => Some(p),
            QueryGrounding::NotEntailed { .. } => None,
        }
    }
}

/// One application of every rule to `interpretation`, by direct matching.
pub fn immediate_consequence(rules: &[WeightedRule], interpretation: &IndexSet<Atom>) -> IndexSet<Atom> {
    fn extend(body: &[&Atom], theta: &Substitution, interp: &IndexSet<Atom>, out: &mut Vec<Substitution>) {
        let Some((first, rest)) = body.split_first() else {
            out.push(theta.clone());
            return;
        };
        for g in interp {
            if let Some(t) = first.match_ground(g, theta) {
                extend(rest, &t, interp, out);
            }
        }
    }
    let mut out = interpretation.clone();
    for rule in rules {
        let body: Vec<&Atom> = rule.body.iter().map(|l| &l.atom).collect();
        let mut thetas = Vec::new();
        extend(&body, &Substitution::new(), interpretation, &mut thetas);
        for theta in thetas {
            let head = rule.head.apply(&theta);
            if head.is_ground() {
                out.insert(head);
            }
        }
    }
    out
}

/// Naive fixpoint iteration of [`immediate_consequence`].
pub fn naive_least_model(rules: &[WeightedRule], facts: impl IntoIterator<Item = Atom>) -> IndexSet<Atom> {
    let mut interp: IndexSet<Atom> = facts.into_iter().collect();
    loop {
        let next = immediate_consequence(rules, &interp);
        if next.len() == interp.len() {
            return interp;
        }
        interp = next;
    }
}

#[derive(Debug, Clone)]
enum CTerm {
    Var(usize),
    Const(Symbol),
}

#[derive(Debug, Clone)]
struct CAtom {
    predicate: Predicate,
    terms: Vec<CTerm>,
}

#[derive(Debug, Clone)]
struct CRule {
    index: usize,
    head: CAtom,
    body: Vec<CAtom>,
    vars: Vec<Symbol>,
}

fn compile_rule(index: usize, rule: &WeightedRule) -> Result<CRule> {
    let unsafe_vars = rule.unsafe_variables();
    if let Some(v) = unsafe_vars.first() {
        return Err(Error::InvalidTemplate(format!(
            "rule {index}: head variable {v} does not occur in the body"
        )));
    }
    let mut vars: Vec<Symbol> = Vec::new();
    let mut compile = |atom: &Atom| CAtom {
        predicate: atom.predicate.clone(),
        terms: atom
            .terms
            .iter()
            .map(|t| match t {
                Term::Constant(c) => CTerm::Const(c.clone()),
                Term::Variable(v) => {
                    let i = vars.iter().position(|x| x == v).unwrap_or_else(|| {
                        vars.push(v.clone());
                        vars.len() - 1
                    });
                    CTerm::Var(i)
                }
            })
            .collect(),
    };
    let body: Vec<CAtom> = rule.body.iter().map(|l| compile(&l.atom)).collect();
    let head = compile(&rule.head);
    Ok(CRule { index, head, body, vars })
}

/// Atom storage indexed by predicate and by (predicate, position, constant).
/// Ids are assigned in insertion order and stages never decrease, so every
/// stage occupies a contiguous id range.
#[derive(Default)]
struct Store {
    atoms: IndexMap<Atom, usize>,
    by_pred: HashMap<Predicate, Vec<u32>>,
    by_arg: HashMap<(Predicate, usize, Symbol), Vec<u32>>,
    stage_start: Vec<usize>,
}

impl Store {
    fn insert(&mut self, atom: Atom, stage: usize) -> bool {
        if self.atoms.contains_key(&atom) {
            return false;
        }
        while self.stage_start.len() <= stage {
            self.stage_start.push(self.atoms.len());
        }
        let id = self.atoms.len() as u32;
        self.by_pred.entry(atom.predicate.clone()).or_default().push(id);
        for (pos, t) in atom.terms.iter().enumerate() {
            self.by_arg.entry((atom.predicate.clone(), pos, t.name().clone())).or_default().push(id);
        }
        self.atoms.insert(atom, stage);
        true
    }

    /// Id interval of atoms with stage in `[lo, hi]`.
    fn ids(&self, lo: usize, hi: usize) -> (u32, u32) {
        let start = self.stage_start.get(lo).copied().unwrap_or(self.atoms.len());
        let end = self.stage_start.get(hi + 1).copied().unwrap_or(self.atoms.len());
        (start as u32, end.max(start) as u32)
    }

    fn atom(&self, id: u32) -> &Atom {
        self.atoms.get_index(id as usize).expect("atom id").0
    }

    fn join(
        &self,
        body: &[CAtom],
        order: &[usize],
        ranges: &[(u32, u32)],
        bindings: &mut Vec<Option<Symbol>>,
        chosen: &mut Vec<u32>,
        emit: &mut dyn FnMut(&[Option<Symbol>], &[u32]),
    ) {
        let Some((&li, rest)) = order.split_first() else {
            emit(bindings, chosen);
            return;
        };
        let lit = &body[li];
        let (lo, hi) = ranges[li];
        if lo >= hi {
            return;
        }
        let mut list: Option<&Vec<u32>> = self.by_pred.get(&lit.predicate);
        if list.is_none() {
            return;
        }
        for (pos, t) in lit.terms.iter().enumerate() {
            let key = match t {
                CTerm::Const(c) => Some(c),
                CTerm::Var(v) => bindings[*v].as_ref(),
            };
            if let Some(c) = key {
                match self.by_arg.get(&(lit.predicate.clone(), pos, c.clone())) {
                    Some(l) => {
                        if l.len() < list.map_or(usize::MAX, Vec::len) {
                            list = Some(l);
                        }
                    }
                    None => return,
                }
            }
        }
        let list = list.expect("candidate list");
        let a = list.partition_point(|&id| id < lo);
        let b = list.partition_point(|&id| id < hi);
        let mut newly: Vec<usize> = Vec::new();
        for &id in &list[a..b] {
            let atom = self.atom(id);
            let mut ok = true;
            for (t, g) in lit.terms.iter().zip(&atom.terms) {
                let g = g.name();
                match t {
                    CTerm::Const(c) => ok = c == g,
                    CTerm::Var(v) => match &bindings[*v] {
                        Some(b) => ok = b == g,
                        None => {
                            bindings[*v] = Some(g.clone());
                            newly.push(*v);
                        }
                    },
                }
                if !ok {
                    break;
                }
            }
            if ok {
                chosen[li] = id;
                self.join(body, rest, ranges, bindings, chosen, emit);
            }
            for v in newly.drain(..) {
                bindings[v] = None;
            }
        }
    }
}

fn instantiate(atom: &CAtom, bindings: &[Option<Symbol>]) -> Atom {
    Atom {
        predicate: atom.predicate.clone(),
        terms: atom
            .terms
            .iter()
            .map(|t| match t {
                CTerm::Const(c) => Term::Constant(c.clone()),
                CTerm::Var(v) => Term::Constant(bindings[*v].clone().expect("bound variable")),
            })
            .collect(),
    }
}

fn collect_facts(template: &Template, example: &Example) -> Result<IndexMap<Atom, FactSource>> {
    let mut facts = IndexMap::new();
    for (i, f) in example.facts.iter().enumerate() {
        facts.entry(f.atom.clone()).or_insert(FactSource::Example(i));
    }
    for (i, rule) in template.facts() {
        if !rule.head.is_ground() {
            return Err(Error::InvalidTemplate(format!("rule {i}: fact `{}` is not ground", rule.head)));
        }
        facts.entry(rule.head.clone()).or_insert(FactSource::Template(i));
    }
    Ok(facts)
}

fn compiled_rules(template: &Template) -> Result<Vec<CRule>> {
    template
        .rules
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.is_fact())
        .map(|(i, r)| compile_rule(i, r))
        .collect()
}

fn semi_naive(rules: &[CRule], facts: impl IntoIterator<Item = Atom>, cap: usize) -> Result<Store> {
    let mut store = Store::default();
    for a in facts {
        store.insert(a, 0);
        if store.atoms.len() > cap {
            return Err(Error::ResourceLimit { cap });
        }
    }
    let mut stage = 0usize;
    loop {
        let mut fresh: IndexSet<Atom> = IndexSet::new();
        for rule in rules {
            let n = rule.body.len();
            for delta in 0..n {
                let ranges: Vec<(u32, u32)> = (0..n)
                    .map(|j| {
                        if j < delta {
                            if stage == 0 {
                                (0, 0)
                            } else {
                                store.ids(0, stage - 1)
                            }
                        } else if j == delta {
                            store.ids(stage, stage)
                        } else {
                            store.ids(0, stage)
                        }
                    })
                    .collect();
                let mut order = vec![delta];
                order.extend((0..n).filter(|&j| j != delta));
                let mut bindings = vec![None; rule.vars.len()];
                let mut chosen = vec![0u32; n];
                let mut overflow = false;
                store.join(&rule.body, &order, &ranges, &mut bindings, &mut chosen, &mut |b, _| {
                    let head = instantiate(&rule.head, b);
                    if !store.atoms.contains_key(&head) {
                        fresh.insert(head);
                        if store.atoms.len() + fresh.len() > cap {
                            overflow = true;
                        }
                    }
                });
                if overflow {
                    return Err(Error::ResourceLimit { cap });
                }
            }
        }
        if fresh.is_empty() {
            return Ok(store);
        }
        stage += 1;
        for a in fresh {
            store.insert(a, stage);
        }
    }
}

/// Least Herbrand model of the template together with the example facts.
pub fn least_model(template: &Template, example: &Example) -> Result<HerbrandModel> {
    least_model_with(template, example, &GroundConfig::default())
}

pub fn least_model_with(template: &Template, example: &Example, cfg: &GroundConfig) -> Result<HerbrandModel> {
    let facts = collect_facts(template, example)?;
    let rules = compiled_rules(template)?;
    let store = semi_naive(&rules, facts.into_keys(), cfg.atom_cap)?;
    Ok(HerbrandModel { atoms: store.atoms })
}

fn ground_all(template: &Template, model: &HerbrandModel) -> Result<Vec<GroundRuleInstance>> {
    let rules = compiled_rules(template)?;
    let mut store = Store::default();
    for (atom, &stage) in &model.atoms {
        store.insert(atom.clone(), stage);
    }
    let all = (0u32, store.atoms.len() as u32);
    let mut instances = Vec::new();
    for rule in &rules {
        let n = rule.body.len();
        let order: Vec<usize> = (0..n).collect();
        let mut bindings = vec![None; rule.vars.len()];
        let mut chosen = vec![0u32; n];
        let mut seen: HashSet<(Atom, Vec<u32>)> = HashSet::new();
        store.join(&rule.body, &order, &vec![all; n], &mut bindings, &mut chosen, &mut |b, ids| {
            let head = instantiate(&rule.head, b);
            if seen.insert((head.clone(), ids.to_vec())) {
                let mut theta = Substitution::new();
                for (name, value) in rule.vars.iter().zip(b) {
                    theta.bind(name.clone(), value.clone().expect("bound variable"));
                }
                instances.push(GroundRuleInstance {
                    rule: rule.index,
                    theta,
                    head,
                    body: ids.iter().map(|&id| store.atom(id).clone()).collect(),
                });
            }
        });
    }
    Ok(instances)
}

/// Every active ground rule instance, one per substitution, in rule order.
pub fn restricted_grounding(template: &Template, example: &Example, model: &HerbrandModel) -> Result<GroundProgram> {
    let facts = collect_facts(template, example)?;
    let instances = ground_all(template, model)?;
    Ok(GroundProgram { model: model.clone(), instances, facts })
}

/// The part of the restricted grounding on derivation paths to `query`.
pub fn ground_for_query(
    template: &Template,
    example: &Example,
    query: &Atom,
    cfg: &GroundConfig,
) -> Result<QueryGrounding> {
    let model = least_model_with(template, example, cfg)?;
    if !model.contains(query) {
        return Ok(QueryGrounding::NotEntailed { default_value: cfg.default_value });
    }
    let full = restricted_grounding(template, example, &model)?;
    Ok(QueryGrounding::Entailed(relevant_part(full, query, cfg)?))
}

/// Filters a full grounding down to the instances reachable backwards from
/// `query`, applying the fact-overlap and cycle policies.
pub fn relevant_part(full: GroundProgram, query: &Atom, cfg: &GroundConfig) -> Result<GroundProgram> {
    let GroundProgram { model, instances, facts } = full;
    let components = match cfg.cycles {
        CyclePolicy::Stratify => components(&instances),
        CyclePolicy::Reject => HashMap::new(),
    };
    let keep_instance = |inst: &GroundRuleInstance| {
        if cfg.fact_overlap == FactOverlap::FactOnly && facts.contains_key(&inst.head) {
            return false;
        }
        if cfg.cycles == CyclePolicy::Stratify {
            let head_stage = model.stage(&inst.head).unwrap_or(0);
            let head_comp = components.get(&inst.head);
            return inst
                .body
                .iter()
                .all(|b| components.get(b) != head_comp || model.stage(b).unwrap_or(0) < head_stage);
        }
        true
    };
    let mut by_head: HashMap<&Atom, Vec<usize>> = HashMap::new();
    for (i, inst) in instances.iter().enumerate() {
        if keep_instance(inst) {
            by_head.entry(&inst.head).or_default().push(i);
        }
    }
    let mut reached: HashSet<&Atom> = HashSet::new();
    let mut kept = vec![false; instances.len()];
    let mut queue = VecDeque::from([query]);
    reached.insert(query);
    while let Some(atom) = queue.pop_front() {
        for &i in by_head.get(atom).map(Vec::as_slice).unwrap_or(&[]) {
            kept[i] = true;
            for b in &instances[i].body {
                if reached.insert(b) {
                    queue.push_back(b);
                }
            }
        }
    }
    let facts: IndexMap<Atom, FactSource> =
        facts.into_iter().filter(|(a, _)| reached.contains(a)).collect();
    let instances: Vec<GroundRuleInstance> =
        instances.into_iter().zip(kept).filter(|(_, k)| *k).map(|(i, _)| i).collect();
    if cfg.cycles == CyclePolicy::Reject {
        if let Some(atom) = find_cycle(&instances) {
            return Err(Error::Cyclic { atom: atom.to_string() });
        }
    }
    Ok(GroundProgram { model, instances, facts })
}

/// Head-to-body dependency graph over the atoms of `instances`.
fn dependency_graph(instances: &[GroundRuleInstance]) -> IndexMap<&Atom, Vec<usize>> {
    let mut ids: IndexMap<&Atom, Vec<usize>> = IndexMap::new();
    for inst in instances {
        ids.entry(&inst.head).or_default();
        for b in &inst.body {
            ids.entry(b).or_default();
        }
    }
    for inst in instances {
        let deps: Vec<usize> = inst.body.iter().map(|b| ids.get_index_of(b).expect("indexed")).collect();
        ids.get_mut(&inst.head).expect("indexed").extend(deps);
    }
    ids
}

/// Strongly connected component index of every atom (Kosaraju).
fn components(instances: &[GroundRuleInstance]) -> HashMap<Atom, usize> {
    let graph = dependency_graph(instances);
    let n = graph.len();
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut stack = vec![(root, 0usize)];
        while let Some((node, next)) = stack.last_mut() {
            let deps = &graph[*node];
            if *next < deps.len() {
                let d = deps[*next];
                *next += 1;
                if !seen[d] {
                    seen[d] = true;
                    stack.push((d, 0));
                }
            } else {
                order.push(*node);
                stack.pop();
            }
        }
    }
    let mut reverse = vec![Vec::new(); n];
    for (from, deps) in graph.values().enumerate() {
        for &d in deps {
            reverse[d].push(from);
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut count = 0;
    for &root in order.iter().rev() {
        if comp[root] != usize::MAX {
            continue;
        }
        comp[root] = count;
        let mut stack = vec![root];
        while let Some(node) = stack.pop() {
            for &p in &reverse[node] {
                if comp[p] == usize::MAX {
                    comp[p] = count;
                    stack.push(p);
                }
            }
        }
        count += 1;
    }
    graph.keys().enumerate().map(|(i, a)| ((*a).clone(), comp[i])).collect()
}

/// An atom on a cycle of the head-to-body dependency graph, if any.
fn find_cycle(instances: &[GroundRuleInstance]) -> Option<Atom> {
    let ids = dependency_graph(instances);
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; ids.len()];
    for root in 0..ids.len() {
        if state[root] != 0 {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        state[root] = 1;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            let deps = &ids[node];
            if *next < deps.len() {
                let d = deps[*next];
                *next += 1;
                match state[d] {
                    0 => {
                        state[d] = 1;
                        stack.push((d, 0));
                    }
                    1 => return Some((*ids.get_index(d).expect("indexed").0).clone()),
                    _ => {}
                }
            } else {
                state[node] = 2;
                stack.pop();
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_examples, parse_template};

    const EXAMPLE_1: &str = "Wh {1,3} :: h(X) :- Wa {3,3} : a(Y), Wb {3,3} : b(X,Y).\nWq :: q :- h(X).\n";
    const H2O: &str = "a(h1). a(h2). a(o1). b(h1,o1). b(o1,h1). b(h2,o1). b(o1,h2).";

    fn setup(tpl: &str, exs: &str) -> (Template, Example) {
        (parse_template(tpl).unwrap(), parse_examples(exs).unwrap().remove(0))
    }

    fn atom(s: &str) -> Atom {
        let ex = parse_examples(&format!("{s}.")).unwrap();
        ex[0].facts[0].atom.clone()
    }

    #[test]
    fn immediate_consequence_examples() {
        let t = parse_template("h(X) :- a(Y), b(X,Y).").unwrap();
        let i: IndexSet<Atom> = [atom("a(o1)"), atom("b(h1,o1)")].into_iter().collect();
        let out = immediate_consequence(&t.rules, &i);
        assert_eq!(out.len(), 3);
        assert!(out.contains(&atom("h(h1)")));

        let i: IndexSet<Atom> = [atom("a(c)")].into_iter().collect();
        assert_eq!(immediate_consequence(&[], &i), i);

        let t = parse_template("q :- h(X).").unwrap();
        let i: IndexSet<Atom> = [atom("h(h1)"), atom("h(o1)")].into_iter().collect();
        assert!(immediate_consequence(&t.rules, &i).contains(&atom("q")));
    }

    #[test]
    fn water_model() {
        let (t, e) = setup(EXAMPLE_1, H2O);
        let m = least_model(&t, &e).unwrap();
        assert_eq!(m.len(), 11);
        for a in ["h(h1)", "h(h2)", "h(o1)", "q"] {
            assert!(m.contains(&atom(a)), "{a}");
        }
        let naive = naive_least_model(&t.rules, e.facts.iter().map(|f| f.atom.clone()));
        assert_eq!(m.to_set(), naive.into_iter().collect());
    }

    #[test]
    fn empty_example_gives_template_facts() {
        let (t, _) = setup("edge(a,b).\np(X) :- edge(X,Y).", "x.");
        let m = least_model(&t, &Example::default()).unwrap();
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn transitive_closure_of_chain() {
        let (t, e) = setup("isa(A,C) :- isa(A,B), isa(B,C).", "isa(a,b). isa(b,c). isa(c,d).");
        let m = least_model(&t, &e).unwrap();
        assert_eq!(m.len(), 6);
    }

    #[test]
    fn water_instances() {
        let (t, e) = setup(EXAMPLE_1, H2O);
        let m = least_model(&t, &e).unwrap();
        let g = restricted_grounding(&t, &e, &m).unwrap();
        let count = |h: &str| g.instances.iter().filter(|i| i.head == atom(h)).count();
        assert_eq!(count("h(o1)"), 2);
        assert_eq!(count("h(h1)"), 1);
        assert_eq!(count("h(h2)"), 1);
        assert_eq!(count("q"), 3);
    }

    #[test]
    fn hyperedge_binds_three_variables() {
        let (t, e) = setup("h(X) :- edge(X,Y,Z), n(X), n(Y), n(Z).", "edge(u1,u2,u3). n(u1). n(u2). n(u3).");
        let m = least_model(&t, &e).unwrap();
        let g = restricted_grounding(&t, &e, &m).unwrap();
        assert_eq!(g.instances.len(), 1);
        assert_eq!(g.instances[0].theta.len(), 3);
    }

    #[test]
    fn no_b_atoms_no_instances() {
        let (t, e) = setup(EXAMPLE_1, "a(h1).");
        let m = least_model(&t, &e).unwrap();
        let g = restricted_grounding(&t, &e, &m).unwrap();
        assert!(g.instances.is_empty());
    }

    #[test]
    fn unknown_query_not_entailed() {
        let (t, e) = setup(EXAMPLE_1, H2O);
        let r = ground_for_query(&t, &e, &atom("h(h9)"), &GroundConfig::default()).unwrap();
        assert_eq!(r, QueryGrounding::NotEntailed { default_value: 0.0 });
    }

    #[test]
    fn disconnected_instances_dropped() {
        let (t, e) = setup("q :- a(X).\nr(X) :- c(X).", "a(x). c(y).");
        let r = ground_for_query(&t, &e, &atom("q"), &GroundConfig::default()).unwrap();
        let p = r.program().unwrap();
        assert_eq!(p.instances.len(), 1);
        assert_eq!(p.facts.len(), 1);
    }

    #[test]
    fn cycles_rejected_or_stratified() {
        let (t, e) = setup("p(X) :- s(X).\np(X) :- p(Y), e(X,Y).\nq :- p(X).", "s(a). e(a,b). e(b,a).");
        let r = ground_for_query(&t, &e, &atom("q"), &GroundConfig::default());
        assert!(matches!(r, Err(Error::Cyclic { .. })));
        let cfg = GroundConfig { cycles: CyclePolicy::Stratify, ..Default::default() };
        let p = ground_for_query(&t, &e, &atom("q"), &cfg).unwrap();
        let p = p.program().unwrap();
        assert!(find_cycle(&p.instances).is_none());
        assert!(p.instances.iter().any(|i| i.head == atom("p(b)")));
    }

    #[test]
    fn fact_only_overlap_skips_derivations() {
        let (t, e) = setup("h(X) :- a(X).\nq :- h(X).", "a(x). h(x).");
        let cfg = GroundConfig { fact_overlap: FactOverlap::FactOnly, ..Default::default() };
        let p = ground_for_query(&t, &e, &atom("q"), &cfg).unwrap();
        assert_eq!(p.program().unwrap().instances.len(), 1);
        let p = ground_for_query(&t, &e, &atom("q"), &GroundConfig::default()).unwrap();
        assert_eq!(p.program().unwrap().instances.len(), 2);
    }

    #[test]
    fn atom_cap_enforced() {
        let (t, e) = setup("isa(A,C) :- isa(A,B), isa(B,C).", "isa(a,b). isa(b,c). isa(c,d). isa(d,e).");
        let cfg = GroundConfig { atom_cap: 6, ..Default::default() };
        assert!(matches!(least_model_with(&t, &e, &cfg), Err(Error::ResourceLimit { cap: 6 })));
    }

    #[test]
    fn dump_format() {
        let (t, e) = setup(EXAMPLE_1, H2O);
        let p = ground_for_query(&t, &e, &atom("q"), &GroundConfig::default()).unwrap();
        let dump = p.program().unwrap().dump();
        assert!(dump.contains("0: h(o1) <- a(h1), b(o1,h1)"), "{dump}");
        assert_eq!(dump.lines().filter(|l| l.starts_with("0: h(o1)")).count(), 2);
    }
}
