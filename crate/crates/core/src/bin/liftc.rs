use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use liftc::autodiff::ParameterStore;
use liftc::graph::{build_graph, export_dot, prune_with};
use liftc::ground::{ground_for_query, QueryGrounding};
use liftc::logic::{validate_template, Example, Template};
use liftc::manifest::RunManifest;
use liftc::parser::serialize_examples;
use liftc::synth::{generate, SynthKind};
use liftc::train::{cross_validate, evaluate, train, Dataset};
use liftc::zoo::export_zoo;
use liftc::Error;

#[derive(Parser)]
#[command(name = "liftc", version, about = "Compile and train weighted Datalog templates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a template and its examples.
    Validate(RunArgs),
    /// Print the ground rule instances behind every query.
    Ground(RunArgs),
    /// Build computation graphs and print their sizes.
    Build(RunArgs),
    /// Train, or cross-validate when folds are set.
    Train(RunArgs),
    /// Score saved parameters on the examples.
    Evaluate(RunArgs),
    /// Write a graph, initial parameters or the model zoo.
    Export {
        what: ExportKind,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Generate a synthetic dataset.
    Gen {
        /// triangleTask, chainLengthTask or molToy.
        kind: String,
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportKind {
    Dot,
    Params,
    Zoo,
}

#[derive(Args, Default)]
struct RunArgs {
    /// `key = value` manifest file.
    manifest: Option<PathBuf>,
    #[arg(long)]
    template: Option<String>,
    #[arg(long)]
    zoo: Option<String>,
    #[arg(long)]
    examples: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    params: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    dim: Option<String>,
    #[arg(long)]
    layers: Option<String>,
    #[arg(long)]
    folds: Option<String>,
    /// Worker threads for grounding and graph compilation.
    #[arg(long)]
    jobs: Option<String>,
    /// Any other manifest key, as `key=value`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RunArgs {
    fn overrides(&self) -> Result<Vec<(String, String)>, Error> {
        let named = [
            ("template", &self.template),
            ("zoo", &self.zoo),
            ("examples", &self.examples),
            ("out", &self.out),
            ("params", &self.params),
            ("lr", &self.lr),
            ("epochs", &self.epochs),
            ("seed", &self.seed),
            ("dim", &self.dim),
            ("layers", &self.layers),
            ("folds", &self.folds),
            ("jobs", &self.jobs),
        ];
        let mut pairs: Vec<(String, String)> =
            named.iter().filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone()))).collect();
        for s in &self.set {
            let (k, v) = s.split_once('=').ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{s}`")))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(pairs)
    }

    fn manifest(&self) -> Result<RunManifest, Error> {
        let overrides = self.overrides()?;
        let m = match &self.manifest {
            Some(path) => RunManifest::load(path, &overrides)?,
            None => {
                for (k, _) in &overrides {
                    if !liftc::manifest::KEYS.contains(&k.as_str()) {
                        return Err(Error::Config(format!("unknown key `{k}`")));
                    }
                }
                RunManifest::from_pairs(&overrides, Path::new(""))?
            }
        };
        #[cfg(feature = "parallel")]
        if let Some(jobs) = m.jobs {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global();
        }
        Ok(m)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => 2,
        Error::NonFinite { .. } | Error::NonFiniteExample { .. } | Error::Domain(_) => 3,
        _ => 1,
    }
}

fn write_file(path: &Path, content: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, content).map_err(|e| Error::io(path, e))
}

fn load(m: &RunManifest) -> Result<(Template, Vec<Example>), Error> {
    let examples = m.load_examples()?;
    let template = m.load_template(&examples)?;
    Ok((template, examples))
}

fn validate(m: &RunManifest) -> Result<ExitCode, Error> {
    let examples = match &m.examples {
        Some(_) => m.load_examples()?,
        None => Vec::new(),
    };
    let template = m.load_template(&examples)?;
    let diags = validate_template(&template);
    for d in &diags {
        match d.rule.and_then(|r| template.span(r)) {
            Some(span) => eprintln!("{span}: {}", d.message),
            None => eprintln!("{d}"),
        }
    }
    if diags.is_empty() {
        println!("ok: {} rules, {} examples", template.rules.len(), examples.len());
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn ground(m: &RunManifest) -> Result<ExitCode, Error> {
    let (template, examples) = load(m)?;
    let mut out = String::new();
    for (i, ex) in examples.iter().enumerate() {
        for q in &ex.queries {
            let _ = writeln!(out, "% example {i} query {}", q.atom);
            match ground_for_query(&template, ex, &q.atom, &m.compile.ground)? {
                QueryGrounding::NotEntailed { .. } => out.push_str("NOT ENTAILED\n"),
                QueryGrounding::Entailed(p) => out.push_str(&p.dump()),
            }
        }
    }
    print!("{out}");
    Ok(ExitCode::SUCCESS)
}

fn build(m: &RunManifest) -> Result<ExitCode, Error> {
    let (template, examples) = load(m)?;
    let dataset = Dataset::compile(&template, &examples, &m.compile)?;
    for item in &dataset.items {
        let q = &examples[item.example].queries[item.query].atom;
        match &item.graph {
            Some(g) => println!("example={} query={q} {}", item.example, g.stats()),
            None => println!("example={} query={q} NOT ENTAILED", item.example),
        }
    }
    println!("distinct_params={}", dataset.referenced_slots().len());
    Ok(ExitCode::SUCCESS)
}

fn train_cmd(m: &RunManifest) -> Result<ExitCode, Error> {
    let (template, examples) = load(m)?;
    let dataset = Dataset::compile(&template, &examples, &m.compile)?;
    if let Some(k) = m.folds {
        let cv = cross_validate(&dataset, &template, &m.train, k)?;
        let report = format!("{cv}\n");
        print!("{report}");
        write_file(&m.out_dir.join("metrics.txt"), &report)?;
        return Ok(ExitCode::SUCCESS);
    }
    let mut log_text = String::new();
    let outcome = train(&dataset, &template, &m.train, &mut |entry| {
        println!("{entry}");
        let _ = writeln!(log_text, "{entry}");
    })?;
    let metrics = evaluate(&dataset, &dataset.all(), &outcome.params, &m.train)?;
    let report = format!("{metrics}\n");
    print!("{report}");
    write_file(&m.out_dir.join("train.log"), &log_text)?;
    write_file(&m.params_path(), &outcome.params.to_text())?;
    write_file(&m.out_dir.join("metrics.txt"), &report)?;
    Ok(ExitCode::SUCCESS)
}

fn evaluate_cmd(m: &RunManifest) -> Result<ExitCode, Error> {
    let (template, examples) = load(m)?;
    let dataset = Dataset::compile(&template, &examples, &m.compile)?;
    let params = ParameterStore::load(&m.params_path())?;
    let metrics = evaluate(&dataset, &dataset.all(), &params, &m.train)?;
    println!("{metrics}");
    Ok(ExitCode::SUCCESS)
}

fn export(m: &RunManifest, what: ExportKind) -> Result<ExitCode, Error> {
    match what {
        ExportKind::Zoo => {
            for path in export_zoo(&m.out_dir.join("zoo"))? {
                println!("{}", path.display());
            }
        }
        ExportKind::Params => {
            let (template, examples) = load(m)?;
            let dataset = Dataset::compile(&template, &examples, &m.compile)?;
            let path = m.out_dir.join("init_params.txt");
            write_file(&path, &dataset.init_params(&template, &m.train).to_text())?;
            println!("{}", path.display());
        }
        ExportKind::Dot => {
            let (template, examples) = load(m)?;
            let (ex, q) = examples
                .iter()
                .find_map(|e| e.queries.first().map(|q| (e, q)))
                .ok_or_else(|| Error::Config("no example has a query".into()))?;
            let QueryGrounding::Entailed(program) = ground_for_query(&template, ex, &q.atom, &m.compile.ground)? else {
                return Err(Error::Config(format!("query {} is not entailed", q.atom)));
            };
            let mut graph = build_graph(&template, ex, &program, &q.atom)?;
            if let Some(mode) = m.compile.prune {
                graph = prune_with(&graph, mode);
            }
            let path = m.out_dir.join("graph.dot");
            write_file(&path, &export_dot(&graph))?;
            println!("{}", path.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn gen(kind: &str, n: usize, seed: u64, output: Option<&Path>) -> Result<ExitCode, Error> {
    let kind: SynthKind = kind.parse()?;
    let text = serialize_examples(&generate(kind, n, seed)?);
    match output {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Validate(a) => validate(&a.manifest()?),
        Command::Ground(a) => ground(&a.manifest()?),
        Command::Build(a) => build(&a.manifest()?),
        Command::Train(a) => train_cmd(&a.manifest()?),
        Command::Evaluate(a) => evaluate_cmd(&a.manifest()?),
        Command::Export { what: ExportKind::Zoo, run } if run.manifest.is_none() && run.template.is_none() && run.zoo.is_none() => {
            let dir = PathBuf::from(run.out.as_deref().unwrap_or("out")).join("zoo");
            for path in export_zoo(&dir)? {
                println!("{}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Export { what, run } => export(&run.manifest()?, what),
        Command::Gen { kind, n, seed, output } => gen(&kind, n, seed, output.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LIFTC_LOG", "error")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
