//! Relational vocabulary: symbols, terms, atoms, substitutions, weighted
//! facts and rules, and the template/example containers built from them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;

use crate::functions::{Activation, Aggregation, Order};
use crate::parser::SourceSpan;
use crate::tensor::{Shape, Tensor};

/// An interned name. Equality, ordering and hashing go by the text.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Self {
        Symbol(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Constant(Symbol),
    Variable(Symbol),
}

impl Term {
    /// Classifies by the first character: uppercase means variable.
    pub fn parse(name: &str) -> Term {
        if name.starts_with(|c: char| c.is_ascii_uppercase()) {
            Term::Variable(Symbol::new(name))
        } else {
            Term::Constant(Symbol::new(name))
        }
    }

    pub fn constant(name: &str) -> Term {
        Term::Constant(Symbol::new(name))
    }

    pub fn variable(name: &str) -> Term {
        Term::Variable(Symbol::new(name))
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Term::Constant(_))
    }

    pub fn name(&self) -> &Symbol {
        match self {
            Term::Constant(s) | Term::Variable(s) => s,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name().as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Predicate {
    pub name: Symbol,
    pub arity: usize,
}

impl Predicate {
    pub fn new(name: &str, arity: usize) -> Self {
        Predicate { name: Symbol::new(name), arity }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: Predicate,
    pub terms: Vec<Term>,
}

impl Atom {
    pub fn new(name: &str, terms: Vec<Term>) -> Self {
        Atom { predicate: Predicate::new(name, terms.len()), terms }
    }

    /// Builds an atom from term names, classifying each by its first character.
    pub fn parse_terms(name: &str, terms: &[&str]) -> Self {
        Atom::new(name, terms.iter().map(|t| Term::parse(t)).collect())
    }

    pub fn is_ground(&self) -> bool {
        self.terms.iter().all(Term::is_constant)
    }

    pub fn variables(&self) -> impl Iterator<Item = &Symbol> {
        self.terms.iter().filter_map(|t| match t {
            Term::Variable(v) => Some(v),
            Term::Constant(_) => None,
        })
    }

    /// Replaces every variable bound in `theta`; unbound variables stay.
    pub fn apply(&self, theta: &Substitution) -> Atom {
        let terms = self
            .terms
            .iter()
            .map(|t| match t {
                Term::Variable(v) => match theta.get(v) {
                    Some(c) => Term::Constant(c.clone()),
                    None => t.clone(),
                },
                Term::Constant(_) => t.clone(),
            })
            .collect();
        Atom { predicate: self.predicate.clone(), terms }
    }

    /// One-sided matching of this pattern against a ground atom, extending
    /// `partial`. Returns `None` on a predicate clash or inconsistent binding.
    pub fn match_ground(&self, ground: &Atom, partial: &Substitution) -> Option<Substitution> {
        if self.predicate != ground.predicate {
            return None;
        }
        let mut theta = partial.clone();
        for (p, g) in self.terms.iter().zip(&ground.terms) {
            let Term::Constant(gc) = g else {
                return None;
            };
            match p {
                Term::Constant(c) => {
                    if c != gc {
                        return None;
                    }
                }
                Term::Variable(v) => match theta.get(v) {
                    Some(bound) if bound != gc => return None,
                    Some(_) => {}
                    None => {
                        theta.bind(v.clone(), gc.clone());
                    }
                },
            }
        }
        Some(theta)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.predicate.name.as_str())?;
        if self.terms.is_empty() {
            return Ok(());
        }
        f.write_str("(")?;
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

/// Mapping from variable names to constants.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Substitution(BTreeMap<Symbol, Symbol>);

impl Substitution {
    pub fn new() -> Self {
        Substitution::default()
    }

    pub fn get(&self, var: &Symbol) -> Option<&Symbol> {
        self.0.get(var)
    }

    pub fn bind(&mut self, var: Symbol, value: Symbol) {
        self.0.insert(var, value);
    }

    pub fn with(mut self, var: &str, value: &str) -> Self {
        self.bind(Symbol::new(var), Symbol::new(value));
        self
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, &Symbol)> {
        self.0.iter()
    }

    /// Keeps only the bindings of the given variables.
    pub fn restrict<'a>(&self, vars: impl IntoIterator<Item = &'a Symbol>) -> Substitution {
        let keep: BTreeSet<&Symbol> = vars.into_iter().collect();
        Substitution(self.0.iter().filter(|(k, _)| keep.contains(k)).map(|(k, v)| (k.clone(), v.clone())).collect())
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}->{v}")?;
        }
        f.write_str("}")
    }
}

/// Identifier of a learnable parameter tensor.
pub type SlotId = Symbol;

#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    /// Shared learnable tensor; its shape lives in [`Template::slots`].
    Learnable(SlotId),
    Fixed(Tensor),
    Absent,
}

impl WeightSpec {
    pub fn is_absent(&self) -> bool {
        matches!(self, WeightSpec::Absent)
    }

    pub fn slot(&self) -> Option<&SlotId> {
        match self {
            WeightSpec::Learnable(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedFact {
    pub value: Tensor,
    pub atom: Atom,
}

impl WeightedFact {
    pub fn new(value: Tensor, atom: Atom) -> Self {
        WeightedFact { value, atom }
    }

    pub fn unit(atom: Atom) -> Self {
        WeightedFact { value: Tensor::scalar(1.0), atom }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BodyLiteral {
    pub weight: WeightSpec,
    pub atom: Atom,
}

/// Per-rule overrides of the template's function defaults.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleOptions {
    pub activation: Option<Activation>,
    pub aggregation: Option<Aggregation>,
    pub order: Option<Order>,
}

impl RuleOptions {
    pub fn is_empty(&self) -> bool {
        self.activation.is_none() && self.aggregation.is_none() && self.order.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedRule {
    pub head_weight: WeightSpec,
    pub head: Atom,
    pub body: Vec<BodyLiteral>,
    pub options: RuleOptions,
}

impl WeightedRule {
    pub fn new(head_weight: WeightSpec, head: Atom, body: Vec<(WeightSpec, Atom)>) -> Self {
        WeightedRule {
            head_weight,
            head,
            body: body.into_iter().map(|(weight, atom)| BodyLiteral { weight, atom }).collect(),
            options: RuleOptions::default(),
        }
    }

    pub fn with_options(mut self, options: RuleOptions) -> Self {
        self.options = options;
        self
    }

    /// A ground clause with an empty body.
    pub fn is_fact(&self) -> bool {
        self.body.is_empty()
    }

    /// Head variables that never occur in the body.
    pub fn unsafe_variables(&self) -> Vec<Symbol> {
        let body_vars: BTreeSet<&Symbol> = self.body.iter().flat_map(|l| l.atom.variables()).collect();
        let mut out: Vec<Symbol> = Vec::new();
        for v in self.head.variables() {
            if !body_vars.contains(v) && !out.contains(v) {
                out.push(v.clone());
            }
        }
        out
    }

    pub fn weights(&self) -> impl Iterator<Item = &WeightSpec> {
        std::iter::once(&self.head_weight).chain(self.body.iter().map(|l| &l.weight))
    }
}

/// Function defaults and per-predicate settings of a template.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FunctionConfig {
    /// Rule-node activation (g∧).
    pub rule_activation: Activation,
    /// Aggregation-node function (g*).
    pub aggregation: Aggregation,
    /// Atom-node activation (g∨).
    pub atom_activation: Activation,
    pub atom_overrides: BTreeMap<Predicate, Activation>,
    /// Adds a learnable bias per application of a learnable weight.
    pub bias: bool,
    /// Predicates whose example fact values are trained.
    pub learnable_facts: BTreeSet<Predicate>,
}

impl FunctionConfig {
    pub fn atom_activation_for(&self, predicate: &Predicate) -> Activation {
        self.atom_overrides.get(predicate).copied().unwrap_or(self.atom_activation)
    }

    pub fn rule_activation_for(&self, rule: &WeightedRule) -> Activation {
        rule.options.activation.unwrap_or(self.rule_activation)
    }

    pub fn aggregation_for(&self, rule: &WeightedRule) -> Aggregation {
        rule.options.aggregation.unwrap_or(self.aggregation)
    }

    pub fn order_for(&self, rule: &WeightedRule) -> Order {
        rule.options.order.unwrap_or_default()
    }
}

/// Name of the bias slot attached to a learnable weight slot.
pub fn bias_slot(slot: &SlotId) -> SlotId {
    Symbol::new(&format!("{slot}#b"))
}

/// Two incompatible shape declarations for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeConflict {
    pub rule: usize,
    pub slot: SlotId,
    pub first: Shape,
    pub second: Shape,
}

/// A set of weighted rules plus function configuration.
#[derive(Debug, Clone, Default)]
pub struct Template {
    pub rules: Vec<WeightedRule>,
    /// Every learnable slot in first-occurrence order with its shape.
    pub slots: IndexMap<SlotId, Shape>,
    pub functions: FunctionConfig,
    pub conflicts: Vec<ShapeConflict>,
    /// Source position of each rule when parsed from text.
    pub spans: Vec<Option<SourceSpan>>,
}

impl PartialEq for Template {
    fn eq(&self, other: &Self) -> bool {
        self.rules == other.rules
            && self.slots.len() == other.slots.len()
            && self.slots.iter().zip(other.slots.iter()).all(|(a, b)| a == b)
            && self.functions == other.functions
            && self.conflicts == other.conflicts
    }
}

impl Template {
    /// Resolves slot shapes from explicit declarations. A slot's shape is
    /// its first declaration, or scalar when never declared; differing
    /// redeclarations are kept as conflicts for validation.
    pub fn new(rules: Vec<WeightedRule>, declarations: &[(usize, SlotId, Shape)], functions: FunctionConfig) -> Self {
        let mut declared: IndexMap<SlotId, Shape> = IndexMap::new();
        let mut conflicts = Vec::new();
        for (rule, slot, shape) in declarations {
            match declared.get(slot) {
                Some(first) if first != shape => conflicts.push(ShapeConflict {
                    rule: *rule,
                    slot: slot.clone(),
                    first: *first,
                    second: *shape,
                }),
                Some(_) => {}
                None => {
                    declared.insert(slot.clone(), *shape);
                }
            }
        }
        let mut slots = IndexMap::new();
        for rule in &rules {
            for w in rule.weights() {
                if let WeightSpec::Learnable(s) = w {
                    if !slots.contains_key(s) {
                        let shape = declared.get(s).copied().unwrap_or(Shape::SCALAR);
                        slots.insert(s.clone(), shape);
                    }
                }
            }
        }
        let spans = vec![None; rules.len()];
        Template { rules, slots, functions, conflicts, spans }
    }

    pub fn slot_shape(&self, slot: &SlotId) -> Option<Shape> {
        self.slots.get(slot).copied()
    }

    /// All trainable tensors this template can reference, including bias
    /// slots when biases are enabled.
    pub fn parameter_slots(&self) -> IndexMap<SlotId, Shape> {
        let mut out = self.slots.clone();
        if self.functions.bias {
            for (slot, shape) in &self.slots {
                out.insert(bias_slot(slot), Shape::vector(shape.rows));
            }
        }
        out
    }

    pub fn facts(&self) -> impl Iterator<Item = (usize, &WeightedRule)> {
        self.rules.iter().enumerate().filter(|(_, r)| r.is_fact())
    }

    pub fn span(&self, rule: usize) -> Option<&SourceSpan> {
        self.spans.get(rule).and_then(Option::as_ref)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub target: Tensor,
    pub atom: Atom,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Example {
    pub facts: Vec<WeightedFact>,
    pub queries: Vec<Query>,
}

impl Example {
    pub fn new(facts: Vec<WeightedFact>, queries: Vec<Query>) -> Self {
        Example { facts, queries }
    }
}

/// A validation finding anchored at a rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub rule: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.rule {
            Some(r) => write!(f, "rule {r}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Checks rule safety, slot shape consistency and dimension composition.
/// Never fails; returns every finding.
pub fn validate_template(template: &Template) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for (i, rule) in template.rules.iter().enumerate() {
        for v in rule.unsafe_variables() {
            diags.push(Diagnostic {
                rule: Some(i),
                message: format!("head variable {v} does not occur in the body of `{}`", rule.head),
            });
        }
    }
    for c in &template.conflicts {
        diags.push(Diagnostic {
            rule: Some(c.rule),
            message: format!("shape conflict for slot {}: declared {} and {}", c.slot, c.first, c.second),
        });
    }
    diags.extend(check_dimensions(template));
    diags
}

/// Output length of a weight applied to an input of length `input`, or a
/// message when they cannot compose.
fn weighted_dim(template: &Template, w: &WeightSpec, input: Option<usize>) -> Result<Option<usize>, String> {
    let shape = match w {
        WeightSpec::Absent => return Ok(input),
        WeightSpec::Fixed(t) => t.shape(),
        WeightSpec::Learnable(s) => template.slot_shape(s).unwrap_or(Shape::SCALAR),
    };
    if shape.is_scalar() {
        return Ok(input);
    }
    match input {
        Some(n) if n != shape.cols => {
            let name = w.slot().map(|s| s.to_string()).unwrap_or_else(|| "fixed weight".into());
            Err(format!("{name} of shape {shape} cannot be applied to a value of length {n}"))
        }
        _ => Ok(Some(shape.rows)),
    }
}

/// Merges contribution lengths where length 1 broadcasts.
fn merge_dims(a: Option<usize>, b: Option<usize>) -> Result<Option<usize>, (usize, usize)> {
    match (a, b) {
        (Some(x), Some(y)) if x == y => Ok(Some(x)),
        (Some(1), Some(y)) => Ok(Some(y)),
        (Some(x), Some(1)) => Ok(Some(x)),
        (Some(x), Some(y)) => Err((x, y)),
        (Some(x), None) | (None, Some(x)) if x != 1 => Ok(Some(x)),
        _ => Ok(None),
    }
}

fn check_dimensions(template: &Template) -> Vec<Diagnostic> {
    let mut dims: BTreeMap<Predicate, usize> = BTreeMap::new();
    let mut diags: Vec<Diagnostic> = Vec::new();
    let push = |diags: &mut Vec<Diagnostic>, rule: usize, message: String| {
        let d = Diagnostic { rule: Some(rule), message };
        if !diags.contains(&d) {
            diags.push(d);
        }
    };
    for (i, rule) in template.facts() {
        let d = match &rule.head_weight {
            WeightSpec::Absent => 1,
            WeightSpec::Fixed(t) => t.shape().rows,
            WeightSpec::Learnable(s) => template.slot_shape(s).map_or(1, |s| s.rows),
        };
        if let Some(prev) = dims.insert(rule.head.predicate.clone(), d) {
            if prev != d && prev != 1 && d != 1 {
                push(&mut diags, i, format!("{} has values of length {prev} and {d}", rule.head.predicate));
            }
        }
    }
    // Propagate lengths until nothing changes; every pass only adds knowledge.
    for _ in 0..=template.rules.len() {
        let mut changed = false;
        for (i, rule) in template.rules.iter().enumerate().filter(|(_, r)| !r.is_fact()) {
            let mut rule_dim: Option<usize> = None;
            let mut all_known = true;
            for lit in &rule.body {
                let input = dims.get(&lit.atom.predicate).copied();
                match weighted_dim(template, &lit.weight, input) {
                    Ok(d) => {
                        all_known &= d.is_some();
                        match merge_dims(rule_dim, d) {
                            Ok(m) => rule_dim = m,
                            Err((a, b)) => push(
                                &mut diags,
                                i,
                                format!("body contributions have incompatible lengths {a} and {b}"),
                            ),
                        }
                    }
                    Err(msg) => push(&mut diags, i, msg),
                }
            }
            if !all_known && rule_dim == Some(1) {
                rule_dim = None;
            }
            let head_dim = match weighted_dim(template, &rule.head_weight, rule_dim) {
                Ok(d) => d,
                Err(msg) => {
                    push(&mut diags, i, msg);
                    None
                }
            };
            if let Some(d) = head_dim {
                let p = rule.head.predicate.clone();
                match dims.get(&p).copied() {
                    None => {
                        dims.insert(p, d);
                        changed = true;
                    }
                    Some(prev) => match merge_dims(Some(prev), Some(d)) {
                        Ok(Some(m)) if m != prev => {
                            dims.insert(p, m);
                            changed = true;
                        }
                        Ok(_) => {}
                        Err((a, b)) => push(&mut diags, i, format!("{p} is derived with lengths {a} and {b}")),
                    },
                }
            }
        }
        if !changed {
            break;
        }
    }
    diags
}
