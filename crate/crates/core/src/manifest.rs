//! Line-oriented `key = value` run manifests.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::functions::Activation;
use crate::ground::{CyclePolicy, FactOverlap};
use crate::graph::PruneMode;
use crate::logic::{Example, Template};
use crate::parser::{parse_examples_in, parse_template_in};
use crate::train::{CompileConfig, TrainConfig};
use crate::zoo::{instantiate, InputEncoding, ZooName, ZooSpec};

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub template: Option<PathBuf>,
    pub zoo: Option<ZooSpec>,
    pub examples: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Parameter file read by evaluation.
    pub params: Option<PathBuf>,
    pub train: TrainConfig,
    pub compile: CompileConfig,
    pub folds: Option<usize>,
    pub jobs: Option<usize>,
    /// Zoo input width is read from the examples unless given.
    input_dim_given: bool,
}

pub const KEYS: &[&str] = &[
    "template",
    "zoo",
    "layers",
    "dim",
    "input_dim",
    "input",
    "activation",
    "examples",
    "out",
    "params",
    "optimizer",
    "lr",
    "beta1",
    "beta2",
    "eps",
    "epochs",
    "seed",
    "loss",
    "init",
    "auto_sigmoid",
    "folds",
    "jobs",
    "prune",
    "atom_cap",
    "cycles",
    "fact_overlap",
    "default_value",
];

/// Splits manifest text into ordered pairs. `#` and `%` start comments.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split(['#', '%']).next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
        let key = k.trim();
        if !KEYS.contains(&key) {
            return Err(Error::Config(format!("line {}: unknown key `{key}`", i + 1)));
        }
        pairs.push((key.to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("{key}: cannot parse `{value}`")))
}

fn flag(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "on" | "yes" => Ok(true),
        "false" | "off" | "no" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got `{value}`"))),
    }
}

impl RunManifest {
    /// Applies pairs in order, later keys overriding earlier ones. Relative
    /// paths resolve against `base`.
    pub fn from_pairs(pairs: &[(String, String)], base: &Path) -> Result<Self> {
        let mut m = RunManifest {
            template: None,
            zoo: None,
            examples: None,
            out_dir: base.join("out"),
            params: None,
            train: TrainConfig::default(),
            compile: CompileConfig::pruned(),
            folds: None,
            jobs: None,
            input_dim_given: false,
        };
        let mut zoo: Option<ZooName> = None;
        let (mut layers, mut dim, mut input_dim) = (None, None, None);
        let mut input = InputEncoding::Features;
        let mut activation = None;
        let (mut beta1, mut beta2) = m.train.betas;
        let path = |v: &str| base.join(v);
        for (key, value) in pairs {
            let v = value.as_str();
            match key.as_str() {
                "template" => m.template = Some(path(v)),
                "zoo" => zoo = Some(v.parse()?),
                "layers" => layers = Some(number(key, v)?),
                "dim" => dim = Some(number(key, v)?),
                "input_dim" => input_dim = Some(number(key, v)?),
                "input" => input = v.parse()?,
                "activation" => {
                    activation = Some(v.parse::<Activation>().map_err(|e| Error::Config(format!("{key}: {e}")))?)
                }
                "examples" => m.examples = Some(path(v)),
                "out" => m.out_dir = path(v),
                "params" => m.params = Some(path(v)),
                "optimizer" => m.train.optimizer = v.parse()?,
                "lr" => m.train.learning_rate = number(key, v)?,
                "beta1" => beta1 = number(key, v)?,
                "beta2" => beta2 = number(key, v)?,
                "eps" => m.train.eps = number(key, v)?,
                "epochs" => m.train.epochs = number(key, v)?,
                "seed" => m.train.seed = number(key, v)?,
                "loss" => m.train.loss = v.parse()?,
                "init" => m.train.init = v.parse()?,
                "auto_sigmoid" => m.train.auto_sigmoid = flag(key, v)?,
                "folds" => m.folds = Some(number(key, v)?),
                "jobs" => m.jobs = Some(number(key, v)?),
                "prune" => {
                    m.compile.prune = match v {
                        "none" => None,
                        "strict" => Some(PruneMode::Strict),
                        "aggressive" => Some(PruneMode::Aggressive),
                        _ => return Err(Error::Config(format!("prune: unknown mode `{v}`"))),
                    }
                }
                "atom_cap" => m.compile.ground.atom_cap = number(key, v)?,
                "cycles" => {
                    m.compile.ground.cycles = match v {
                        "reject" => CyclePolicy::Reject,
                        "stratify" => CyclePolicy::Stratify,
                        _ => return Err(Error::Config(format!("cycles: unknown policy `{v}`"))),
                    }
                }
                "fact_overlap" => {
                    m.compile.ground.fact_overlap = match v {
                        "derived" => FactOverlap::DerivedWithFactInput,
                        "fact_only" => FactOverlap::FactOnly,
                        _ => return Err(Error::Config(format!("fact_overlap: unknown mode `{v}`"))),
                    }
                }
                "default_value" => m.compile.ground.default_value = number(key, v)?,
                other => return Err(Error::Config(format!("unknown key `{other}`"))),
            }
        }
        m.train.betas = (beta1, beta2);
        m.train.validate()?;
        if let Some(name) = zoo {
            let mut spec = ZooSpec::new(name).with_input(input);
            if let Some(l) = layers {
                spec = spec.with_layers(l);
            }
            if let Some(d) = dim {
                spec = spec.with_dim(d);
            }
            if let Some(w) = input_dim {
                spec = spec.with_input_dim(w);
                m.input_dim_given = true;
            }
            if let Some(a) = activation {
                spec = spec.with_activation(a);
            }
            spec.validate()?;
            m.zoo = Some(spec);
        }
        match (&m.template, &m.zoo) {
            (Some(_), Some(_)) => Err(Error::Config("give either a template or a zoo model, not both".into())),
            (None, None) => Err(Error::Config("no template or zoo model given".into())),
            _ => Ok(m),
        }
    }

    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut pairs = parse_pairs(&text)?;
        pairs.extend(overrides.iter().cloned());
        let base = path.parent().unwrap_or(Path::new(""));
        Self::from_pairs(&pairs, base)
    }

    pub fn load_examples(&self) -> Result<Vec<Example>> {
        let path = self.examples.as_ref().ok_or_else(|| Error::Config("no examples file given".into()))?;
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(parse_examples_in(&text, Some(path))?)
    }

    /// The template file, or the zoo model sized to the examples' features.
    pub fn load_template(&self, examples: &[Example]) -> Result<Template> {
        if let Some(path) = &self.template {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            return Ok(parse_template_in(&text, Some(path))?);
        }
        let mut spec = self.zoo.clone().ok_or_else(|| Error::Config("no template or zoo model given".into()))?;
        if !self.input_dim_given && spec.input == InputEncoding::Features {
            let feature = examples
                .iter()
                .flat_map(|e| &e.facts)
                .find(|f| matches!(f.atom.predicate.name.as_str(), "feat" | "features"));
            if let Some(f) = feature {
                spec = spec.with_input_dim(f.value.shape().rows);
            }
        }
        instantiate(&spec)
    }

    pub fn params_path(&self) -> PathBuf {
        self.params.clone().unwrap_or_else(|| self.out_dir.join("params.txt"))
    }
}
