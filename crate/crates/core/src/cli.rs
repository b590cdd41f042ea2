//! Command-line front end. Exit codes: 0 success, 2 input or validation
//! error, 3 I/O error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::context::{build_graph, ContextIndex};
use crate::metrics::check;
use crate::ocel::{parse_log, serialize_log, EventLog};
use crate::ocpn::{flower_model, parse_model, serialize_model, AcceptingOcpn};
use crate::replay::{binding_sequence_of_preset, replay_group, ReplayConfig, SilentVariableMode};
use crate::simulate::{simulate, SimulationConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// States printed by `explain` before the listing is cut off.
const STATE_LISTING_CAP: usize = 20;

#[derive(Debug, Parser)]
#[command(name = "ocpm", version, about = "Fitness and precision of object-centric Petri nets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute fitness, precision and skipped events of a model against a log
    Check(CheckArgs),
    /// Show preset, context, reached states and enabled activities of one event
    Explain(ExplainArgs),
    /// Write the object-centric flower model of a log
    Flower(FlowerArgs),
    /// Generate a log by random walks over a model
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct ReplayFlags {
    #[arg(long, default_value_t = 100_000)]
    pub max_states: usize,
    #[arg(long, default_value_t = SilentVariableMode::Singleton)]
    pub silent_variable_mode: SilentVariableMode,
    #[arg(long, default_value_t = 8)]
    pub subset_cap: usize,
    /// Explore silent moves even when the next recorded binding is enabled
    #[arg(long)]
    pub strict_silent: bool,
}

impl ReplayFlags {
    fn config(&self) -> ReplayConfig {
        ReplayConfig {
            max_states: self.max_states,
            silent_variable_mode: self.silent_variable_mode,
            subset_cap: self.subset_cap,
            strict_silent: self.strict_silent,
            reverse_successors: false,
        }
    }
}

#[derive(Debug, Args)]
pub struct Inputs {
    /// Log JSON (also accepted as the first positional argument)
    #[arg(long = "log", value_name = "PATH")]
    pub log_flag: Option<PathBuf>,
    /// Model JSON (also accepted as the second positional argument)
    #[arg(long = "model", value_name = "PATH")]
    pub model_flag: Option<PathBuf>,
    #[arg(value_name = "FILES", num_args = 0..=2)]
    pub positional: Vec<PathBuf>,
}

impl Inputs {
    fn paths(&self) -> Result<(PathBuf, PathBuf), CliError> {
        let mut rest = self.positional.iter().cloned();
        let log = self.log_flag.clone().or_else(|| rest.next());
        let model = self.model_flag.clone().or_else(|| rest.next());
        match (log, model) {
            (Some(l), Some(m)) => Ok((l, m)),
            (None, _) => Err(CliError::Input("missing --log".into())),
            (_, None) => Err(CliError::Input("missing --model".into())),
        }
    }
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    /// Report JSON destination; printed after the summary when omitted
    #[arg(short, long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub decimals: u32,
    #[command(flatten)]
    pub replay: ReplayFlags,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    #[arg(long)]
    pub event: String,
    #[command(flatten)]
    pub replay: ReplayFlags,
}

#[derive(Debug, Args)]
pub struct FlowerArgs {
    #[arg(long = "log", value_name = "PATH")]
    pub log_flag: Option<PathBuf>,
    #[arg(value_name = "LOG")]
    pub log_pos: Option<PathBuf>,
    #[arg(short, long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long = "model", value_name = "PATH")]
    pub model_flag: Option<PathBuf>,
    #[arg(value_name = "MODEL")]
    pub model_pos: Option<PathBuf>,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    pub instances: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub seed: u64,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_objects: u64,
    /// Bindings per instance (default: ten times the number of transitions)
    #[arg(long)]
    pub step_cap: Option<usize>,
    #[arg(short, long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Io(m) => m,
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| io_err(path, e))
}

fn load_log(path: &Path) -> Result<EventLog, CliError> {
    parse_log(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<AcceptingOcpn, CliError> {
    parse_model(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn emit(output: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<(), CliError> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match output {
        Some(path) => fs::write(path, text).map_err(|e| io_err(path, e)),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Check(a) => cmd_check(a, out, err),
        Command::Explain(a) => cmd_explain(a, out),
        Command::Flower(a) => cmd_flower(a, out),
        Command::Simulate(a) => cmd_simulate(a, out, err),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.code()
        }
    }
}

pub fn cmd_check(args: &CheckArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let (log_path, model_path) = args.inputs.paths()?;
    let log = load_log(&log_path)?;
    let net = load_model(&model_path)?;
    let report = check(&log, &net, &args.replay.config()).map_err(|e| CliError::Input(e.to_string()))?;
    if report.truncated {
        let _ = writeln!(err, "warning: replay hit --max-states for some contexts; enabled sets may be partial");
    }
    writeln!(out, "{}", report.summary(args.decimals)).map_err(|e| CliError::Io(format!("stdout: {e}")))?;
    emit(args.output.as_deref(), &report.to_json(), out)
}

pub fn cmd_explain(args: &ExplainArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (log_path, model_path) = args.inputs.paths()?;
    let log = load_log(&log_path)?;
    let net = load_model(&model_path)?;
    let cfg = args.replay.config();
    cfg.validate().map_err(|e| CliError::Input(e.to_string()))?;
    let e = log
        .event_position(&args.event)
        .ok_or_else(|| CliError::Input(format!("unknown event {}", args.event)))?;

    let graph = build_graph(&log);
    let index = ContextIndex::new(&log, &graph);
    let members = index.group_members(e);
    let replay = replay_group(&net, &log, &graph, members, &cfg);
    let ids = |positions: &mut dyn Iterator<Item = usize>| -> String {
        positions.map(|i| log.event(i).id.clone()).collect::<Vec<_>>().join(", ")
    };
    let join = |set: &std::collections::BTreeSet<crate::ocel::Activity>| -> String {
        set.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(", ")
    };

    let mut text = String::new();
    let event = log.event(e);
    text.push_str(&format!("event: {} ({})\n", event.id, event.activity));
    text.push_str(&format!("preset: {{{}}}\n", ids(&mut graph.preset(e).ones())));
    let steps: Vec<String> = binding_sequence_of_preset(&log, &graph, e)
        .iter()
        .map(|s| {
            let objs: Vec<String> = s.objects.values().flatten().map(|o| o.id().to_string()).collect();
            format!("({}: {})", s.activity, objs.join(","))
        })
        .collect();
    text.push_str(&format!("binding sequence: <{}>\n", steps.join(", ")));
    text.push_str(&format!("context: {}\n", index.context(e)));
    text.push_str(&format!("canonical context: {}\n", index.context(e).canonical()));
    text.push_str(&format!("context group: {{{}}}\n", ids(&mut members.iter().copied())));
    let states = &replay.outcome.states;
    text.push_str(&format!("states: {}\n", states.len()));
    for m in states.iter().take(STATE_LISTING_CAP) {
        text.push_str(&format!("  {}\n", m.display(&net)));
    }
    if states.len() > STATE_LISTING_CAP {
        text.push_str(&format!("  ... {} more\n", states.len() - STATE_LISTING_CAP));
    }
    text.push_str(&format!("en_log: {{{}}}\n", join(&index.enabled_log_activities(&log, e))));
    text.push_str(&format!("en_model: {{{}}}\n", join(&replay.outcome.enabled)));
    text.push_str(&format!("replayable: {}\n", !replay.outcome.enabled.is_empty()));
    if replay.outcome.truncated {
        text.push_str("truncated: true\n");
    }
    emit(None, &text, out)
}

pub fn cmd_flower(args: &FlowerArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let path = args
        .log_flag
        .clone()
        .or_else(|| args.log_pos.clone())
        .ok_or_else(|| CliError::Input("missing --log".into()))?;
    let log = load_log(&path)?;
    let net = flower_model(&log).map_err(|e| CliError::Input(e.to_string()))?;
    emit(args.output.as_deref(), &serialize_model(&net), out)
}

pub fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let path = args
        .model_flag
        .clone()
        .or_else(|| args.model_pos.clone())
        .ok_or_else(|| CliError::Input("missing --model".into()))?;
    let net = load_model(&path)?;
    let cfg = SimulationConfig {
        instances: args.instances as usize,
        seed: args.seed,
        max_objects: args.max_objects as usize,
        step_cap: args.step_cap,
        ..SimulationConfig::default()
    };
    let sim = simulate(&net, &cfg).map_err(|e| CliError::Input(e.to_string()))?;
    if sim.discarded > 0 {
        let _ = writeln!(
            err,
            "warning: discarded {} walks that deadlocked or exceeded the step cap",
            sim.discarded
        );
    }
    emit(args.output.as_deref(), &serialize_log(&sim.log), out)
}
