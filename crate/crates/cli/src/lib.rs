//! Command-line driver: extract, apply, classify, train, run, qtable-show.
//!
//! All subcommands are reproducible: every source of randomness flows
//! from an explicit `--seed`, and `--json` output contains no timestamps,
//! so identical inputs give byte-identical output. Exit codes: 0 success,
//! 1 domain error (message on stderr), 2 usage error.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rewrite_rl_core::abstraction::{extract, state_key, FeatureVector, FEATURE_COUNT, FEATURE_NAMES};
use rewrite_rl_core::classify::{
    fit, parse_corpus, training_accuracy, DecisionTree, FitParams, Platform,
};
use rewrite_rl_core::model::{parse, print};
use rewrite_rl_core::rl::{
    seeded_rng, train, LearnConfig, QTable, TerminalStatus, TrainingGraph, TransformOutcome,
};
use rewrite_rl_core::rules::{Registry, RuleId, Site};

#[derive(Parser)]
#[command(
    name = "rewrite-rl",
    version,
    about = "Learned rule-selection heuristics for source-to-source rewriting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the fifteen-component feature vector of a source file.
    Extract {
        file: PathBuf,
        /// Emit the vector as a JSON array in index order.
        #[arg(long)]
        json: bool,
    },
    /// Apply one rewrite rule and emit the transformed source.
    Apply {
        file: PathBuf,
        /// Rule id (0 = flatten_array, 1 = collapse_loops).
        #[arg(long)]
        rule: u32,
        /// Index into the rule's match sites, leftmost-outermost first.
        #[arg(long, default_value_t = 0)]
        site: usize,
        /// Write the result here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Fit or query the platform-readiness classifier.
    Classify {
        #[command(subcommand)]
        command: ClassifyCommand,
    },
    /// Learn a state-action table from a training graph.
    Train(TrainArgs),
    /// Rewrite a source file step by step using a learned table.
    Run(RunArgs),
    /// Display a stored state-action table.
    QtableShow {
        #[arg(long)]
        qtable: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand)]
enum ClassifyCommand {
    /// Fit a decision tree on a labeled corpus file.
    Fit {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1)]
        min_samples: usize,
        #[arg(long)]
        max_depth: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Classify a feature vector with a fitted tree.
    Predict {
        #[arg(long)]
        tree: PathBuf,
        /// Fifteen comma-separated component values.
        #[arg(long)]
        features: String,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.6)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    q_init: f64,
    #[arg(long, default_value_t = 500)]
    episodes: u64,
    #[arg(long, default_value_t = 50)]
    max_steps: u64,
    /// Probability of exploring a random action per step.
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct RunArgs {
    file: PathBuf,
    #[arg(long)]
    qtable: PathBuf,
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    target: TargetPlatform,
    #[arg(long, default_value_t = 50)]
    max_steps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetPlatform {
    Fpga,
    Gpu,
    SmCpu,
    DmCpu,
}

impl From<TargetPlatform> for Platform {
    fn from(value: TargetPlatform) -> Platform {
        match value {
            TargetPlatform::Fpga => Platform::Fpga,
            TargetPlatform::Gpu => Platform::Gpu,
            TargetPlatform::SmCpu => Platform::SmCpu,
            TargetPlatform::DmCpu => Platform::DmCpu,
        }
    }
}

/// Diagnostics level from `REWRITE_RL_LOG` (off, info, debug).
#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum LogLevel {
    Off,
    Info,
    Debug,
}

fn log_level() -> LogLevel {
    match std::env::var("REWRITE_RL_LOG").as_deref() {
        Ok("debug") => LogLevel::Debug,
        Ok("info") => LogLevel::Info,
        _ => LogLevel::Off,
    }
}

struct Ctx<'io> {
    out: &'io mut dyn Write,
    err: &'io mut dyn Write,
    level: LogLevel,
}

impl Ctx<'_> {
    fn info(&mut self, message: impl AsRef<str>) {
        if self.level >= LogLevel::Info {
            let _ = writeln!(self.err, "info: {}", message.as_ref());
        }
    }

    fn debug(&mut self, message: impl AsRef<str>) {
        if self.level >= LogLevel::Debug {
            let _ = writeln!(self.err, "debug: {}", message.as_ref());
        }
    }

    fn warn(&mut self, message: impl AsRef<str>) {
        let _ = writeln!(self.err, "warning: {}", message.as_ref());
    }
}

/// Entry point shared by `main` and the test harness.
pub fn run_cli(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    2
                }
            };
        }
    };
    let mut ctx = Ctx { out, err, level: log_level() };
    match dispatch(cli.command, &mut ctx) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(ctx.err, "error: {e:#}");
            1
        }
    }
}

fn dispatch(command: Command, ctx: &mut Ctx) -> Result<()> {
    match command {
        Command::Extract { file, json } => cmd_extract(&file, json, ctx),
        Command::Apply { file, rule, site, output, json } => {
            cmd_apply(&file, rule, site, output.as_deref(), json, ctx)
        }
        Command::Classify { command } => match command {
            ClassifyCommand::Fit { corpus, output, min_samples, max_depth, json } => {
                cmd_classify_fit(&corpus, &output, min_samples, max_depth, json, ctx)
            }
            ClassifyCommand::Predict { tree, features, json } => {
                cmd_classify_predict(&tree, &features, json, ctx)
            }
        },
        Command::Train(args) => cmd_train(&args, ctx),
        Command::Run(args) => cmd_run(&args, ctx),
        Command::QtableShow { qtable, json } => cmd_qtable_show(&qtable, json, ctx),
    }
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).with_context(|| format!("cannot write {}", path.display()))
}

fn parse_source(path: &Path) -> Result<rewrite_rl_core::model::TranslationUnit> {
    let source = read_file(path)?;
    parse(&source).map_err(|e| anyhow!("{}: {e}", path.display()))
}

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

fn cmd_extract(file: &Path, json: bool, ctx: &mut Ctx) -> Result<()> {
    let unit = parse_source(file)?;
    let fv = extract(&unit);
    ctx.debug(format!("state key {}", state_key(&fv)));
    if json {
        let values: Vec<u32> = fv.components().to_vec();
        writeln!(ctx.out, "{}", serde_json::to_string(&values)?)?;
    } else {
        for (name, value) in FEATURE_NAMES.iter().zip(fv.components()) {
            writeln!(ctx.out, "{name:032} {value}")?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// apply
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ApplyReport {
    schema: u32,
    rule: u32,
    rule_name: String,
    site: Site,
    source: String,
}

fn cmd_apply(
    file: &Path,
    rule: u32,
    site_index: usize,
    output: Option<&Path>,
    json: bool,
    ctx: &mut Ctx,
) -> Result<()> {
    let unit = parse_source(file)?;
    let registry = Registry::with_defaults();
    let id = RuleId(rule);
    let sites = registry.find_sites(&unit, id)?;
    if sites.is_empty() {
        return Err(anyhow!("rule {id} does not match anywhere in {}", file.display()));
    }
    let site = sites.get(site_index).ok_or_else(|| {
        anyhow!("site index {site_index} out of range: rule {id} has {} site(s)", sites.len())
    })?;
    ctx.info(format!("applying {id} at site {site}"));
    let result = registry.apply(&unit, id, site)?;
    let source = print(&result.unit);

    let rendered = if json {
        let report = ApplyReport {
            schema: 1,
            rule,
            rule_name: registry.get(id)?.name().to_string(),
            site: site.clone(),
            source,
        };
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        text
    } else {
        source
    };
    match output {
        Some(path) => write_file(path, &rendered)?,
        None => write!(ctx.out, "{rendered}")?,
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct FitReport {
    schema: u32,
    output: String,
    nodes: usize,
    samples: usize,
    training_accuracy: f64,
}

fn cmd_classify_fit(
    corpus_path: &Path,
    output: &Path,
    min_samples: usize,
    max_depth: Option<usize>,
    json: bool,
    ctx: &mut Ctx,
) -> Result<()> {
    let samples = parse_corpus(&read_file(corpus_path)?)
        .map_err(|e| anyhow!("{}: {e}", corpus_path.display()))?;
    let tree = fit(&samples, FitParams { min_samples, max_depth })?;
    write_file(output, &tree.to_json_string())?;
    let accuracy = training_accuracy(&tree, &samples);
    ctx.info(format!("fitted tree on {} samples", samples.len()));
    if json {
        let report = FitReport {
            schema: 1,
            output: output.display().to_string(),
            nodes: tree.node_count(),
            samples: samples.len(),
            training_accuracy: accuracy,
        };
        writeln!(ctx.out, "{}", serde_json::to_string(&report)?)?;
    } else {
        writeln!(
            ctx.out,
            "fitted tree with {} node(s) on {} sample(s), training accuracy {:.3}; wrote {}",
            tree.node_count(),
            samples.len(),
            accuracy,
            output.display()
        )?;
    }
    Ok(())
}

fn parse_features(text: &str) -> Result<FeatureVector> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != FEATURE_COUNT {
        return Err(anyhow!("expected {FEATURE_COUNT} comma-separated values, got {}", parts.len()));
    }
    let mut components = [0u32; FEATURE_COUNT];
    for (slot, part) in components.iter_mut().zip(&parts) {
        *slot = part.parse().with_context(|| format!("bad component `{part}`"))?;
    }
    Ok(FeatureVector::new(components)?)
}

#[derive(Serialize)]
struct PredictReport {
    schema: u32,
    classes: Vec<String>,
}

fn cmd_classify_predict(tree_path: &Path, features: &str, json: bool, ctx: &mut Ctx) -> Result<()> {
    let tree = DecisionTree::from_json_str(&read_file(tree_path)?)?;
    let fv = parse_features(features)?;
    let class = tree.predict(&fv);
    if json {
        let report = PredictReport {
            schema: 1,
            classes: class.iter().map(|p| p.name().to_string()).collect(),
        };
        writeln!(ctx.out, "{}", serde_json::to_string(&report)?)?;
    } else {
        writeln!(ctx.out, "{class}")?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct TrainReport {
    schema: u32,
    output: String,
    states: usize,
    actions: usize,
    episodes: u64,
    seed: u64,
}

fn cmd_train(args: &TrainArgs, ctx: &mut Ctx) -> Result<()> {
    let graph = TrainingGraph::from_json_str(&read_file(&args.graph)?)
        .map_err(|e| anyhow!("{}: {e}", args.graph.display()))?;
    let cfg = LearnConfig {
        alpha: args.alpha,
        gamma: args.gamma,
        q_init: args.q_init,
        episodes: args.episodes,
        max_steps: args.max_steps,
        seed: args.seed,
        epsilon: args.epsilon,
    };
    for warning in cfg.warnings() {
        ctx.warn(warning);
    }
    let table = train(&graph, &cfg)?;
    write_file(&args.output, &table.to_json_string())?;
    ctx.info(format!(
        "trained {} episode(s) over {} state(s)",
        args.episodes,
        table.known_states().len()
    ));
    if args.json {
        let report = TrainReport {
            schema: 1,
            output: args.output.display().to_string(),
            states: table.known_states().len(),
            actions: table.known_actions().len(),
            episodes: args.episodes,
            seed: args.seed,
        };
        writeln!(ctx.out, "{}", serde_json::to_string(&report)?)?;
    } else {
        writeln!(
            ctx.out,
            "trained table over {} state(s) x {} action(s); wrote {}",
            table.known_states().len(),
            table.known_actions().len(),
            args.output.display()
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct RunReport {
    schema: u32,
    target: String,
    max_steps: u64,
    seed: u64,
    initial_vector: Vec<u32>,
    steps: Vec<RunStep>,
    terminal: TerminalStatus,
    source: String,
}

#[derive(Serialize)]
struct RunStep {
    rule: u32,
    rule_name: String,
    site: Site,
    feature_vector_after: Vec<u32>,
}

fn cmd_run(args: &RunArgs, ctx: &mut Ctx) -> Result<()> {
    let unit = parse_source(&args.file)?;
    let table = QTable::from_json_str(&read_file(&args.qtable)?)
        .map_err(|e| anyhow!("{}: {e}", args.qtable.display()))?;
    let tree = DecisionTree::from_json_str(&read_file(&args.tree)?)
        .map_err(|e| anyhow!("{}: {e}", args.tree.display()))?;
    let registry = Registry::with_defaults();
    let target: Platform = args.target.into();

    let started = Instant::now();
    let mut rng = seeded_rng(args.seed);
    let outcome: TransformOutcome =
        rewrite_rl_core::rl::transform_greedy(&unit, &table, &registry, &tree, target, args.max_steps, &mut rng)?;
    let elapsed = started.elapsed();
    ctx.info(format!("{} step(s), terminal {:?}", outcome.steps.len(), outcome.status));

    let steps: Vec<RunStep> = outcome
        .steps
        .iter()
        .map(|s| RunStep {
            rule: s.rule.0,
            rule_name: registry.get(s.rule).map(|r| r.name().to_string()).unwrap_or_default(),
            site: s.site.clone(),
            feature_vector_after: s.vector_after.components().to_vec(),
        })
        .collect();

    if args.json {
        // No timings in machine output: identical inputs and seed must
        // give byte-identical reports.
        let report = RunReport {
            schema: 1,
            target: target.name().to_string(),
            max_steps: args.max_steps,
            seed: args.seed,
            initial_vector: outcome.initial_vector.components().to_vec(),
            steps,
            terminal: outcome.status,
            source: print(&outcome.unit),
        };
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        write!(ctx.out, "{text}")?;
    } else {
        let mut text = String::new();
        let _ = writeln!(text, "target: {}", target.name());
        let _ = writeln!(text, "initial: {}", state_key(&outcome.initial_vector));
        for (i, step) in steps.iter().enumerate() {
            let _ = writeln!(
                text,
                "step {}: {} ({}) at {} -> {}",
                i + 1,
                step.rule_name,
                RuleId(step.rule),
                step.site,
                step.feature_vector_after.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
            );
        }
        let terminal = match outcome.status {
            TerminalStatus::Final => "final",
            TerminalStatus::BudgetExhausted => "budget_exhausted",
            TerminalStatus::NoApplicableRule => "no_applicable_rule",
        };
        let _ = writeln!(text, "terminal: {terminal} after {} step(s)", steps.len());
        let _ = writeln!(text, "elapsed: {:.3} ms", elapsed.as_secs_f64() * 1e3);
        write!(ctx.out, "{text}")?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// qtable-show
// ---------------------------------------------------------------------------

fn cmd_qtable_show(path: &Path, json: bool, ctx: &mut Ctx) -> Result<()> {
    let table = QTable::from_json_str(&read_file(path)?)
        .map_err(|e| anyhow!("{}: {e}", path.display()))?;
    if json {
        write!(ctx.out, "{}", table.to_json_string())?;
        return Ok(());
    }
    let actions: Vec<RuleId> = table.known_actions().iter().copied().collect();
    let header: Vec<String> = actions.iter().map(|a| format!("{a:>14}")).collect();
    writeln!(ctx.out, "{:40} {} {:>6}", "state", header.join(" "), "RS")?;
    for state in table.known_states() {
        let cells: Vec<String> =
            actions.iter().map(|a| format!("{:14.6}", table.value(state, *a))).collect();
        let selection = if table.is_final(state) {
            "-".to_string()
        } else {
            let best = actions
                .iter()
                .copied()
                .max_by(|a, b| {
                    table.value(state, *a).partial_cmp(&table.value(state, *b)).unwrap()
                })
                .map(|a| a.to_string())
                .unwrap_or_else(|| "-".to_string());
            best
        };
        writeln!(ctx.out, "{:40} {} {:>6}", state.to_string(), cells.join(" "), selection)?;
    }
    Ok(())
}
