//! Batch command-line frontend: check models, simulate them against TDF
//! stimuli, generate test sequences, measure coverage, emit code and test
//! benches, and run the coverage-guided roundtrip loop.
//!
//! Exit codes: 0 on success or PASS, 1 when diagnostics or a FAIL verdict
//! were produced, 2 on usage or I/O errors. Stdout carries one-line
//! machine-parseable summaries; diagnostics go to stderr.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use takt_core::codegen::{emit_ada, emit_tdf_harness, emit_testbench, lower, EmitterConfig};
use takt_core::dtd::parser::parse_literal_list;
use takt_core::dtd::Value;
use takt_core::model::{check_consistency, flatten, parse_model, FlatModel, FsLoader, Model};
use takt_core::sim::{run, StepInput};
use takt_core::testgen::{
    generate_reach, measure_model_coverage, render_coverage_report, roundtrip, ReachSpec,
    SearchConfig, SearchResult, Strategy,
};
use takt_core::trace::{parse_eet, parse_tdf, write_eet, PortSig};

#[derive(Parser)]
#[command(name = "takt", version, about = "Clocked component model toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Bfs,
    Iddfs,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Strategy {
        match s {
            StrategyArg::Bfs => Strategy::Bfs,
            StrategyArg::Iddfs => Strategy::Iddfs,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run consistency and completeness checks on a model.
    Check { model: PathBuf },
    /// Simulate a model against TDF stimuli and record the trace.
    Sim {
        model: PathBuf,
        /// TDF file mapped onto the open input ports.
        #[arg(long)]
        inputs: PathBuf,
        /// Trace archive to write.
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Search for an input sequence reaching a component state.
    Gentest {
        model: PathBuf,
        /// Reach target as `component.state`.
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 10)]
        max_depth: usize,
        /// Input domain per open port, `port=v1,v2,...` (`_` = absent).
        #[arg(long = "domain")]
        domains: Vec<String>,
        #[arg(long, value_enum, default_value_t = StrategyArg::Bfs)]
        strategy: StrategyArg,
        /// Disable visited-state pruning.
        #[arg(long)]
        no_prune: bool,
        /// Where to write the witness trace.
        #[arg(long, default_value = "witness.eet")]
        out: PathBuf,
    },
    /// Measure model-level coverage of a trace suite.
    Coverage {
        model: PathBuf,
        /// Trace archives to replay.
        #[arg(long, num_args = 1.., required = true)]
        suite: Vec<PathBuf>,
        /// Write the per-transition report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Emit Ada-subset packages for a model.
    Gencode {
        model: PathBuf,
        /// Split every state and transition into its own subprogram.
        #[arg(long)]
        helper_split: bool,
        /// Package name prefix.
        #[arg(long, default_value = "")]
        prefix: String,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Also emit the TDF parser harness for this component instance.
        #[arg(long)]
        tdf_harness: Option<String>,
    },
    /// Convert a component TDF file into a standalone test bench program.
    Gentb {
        model: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        /// Component instance path the trace belongs to.
        #[arg(long)]
        component: String,
        /// Output file; defaults next to the working directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Coverage-guided loop: generate traces until the target is met.
    Roundtrip {
        model: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        target_coverage: f64,
        #[arg(long, default_value_t = 10)]
        max_depth: usize,
        #[arg(long = "domain")]
        domains: Vec<String>,
        #[arg(long, value_enum, default_value_t = StrategyArg::Bfs)]
        strategy: StrategyArg,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

enum CliError {
    /// Model or data problems: diagnostics already printed, exit 1.
    Diagnostics,
    /// Usage, I/O, or internal problems: message printed, exit 2.
    Usage(String),
}

type CliResult<T> = Result<T, CliError>;

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn load_model(path: &Path) -> CliResult<Model> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let name = path.display().to_string();
    match parse_model(&src, &name, &mut FsLoader { base }) {
        Ok(m) => Ok(m),
        Err(d) => {
            eprint!("{}", d.render(&name));
            Err(CliError::Diagnostics)
        }
    }
}

fn load_flat(path: &Path) -> CliResult<FlatModel> {
    let m = load_model(path)?;
    match flatten(&m) {
        Ok(fm) => Ok(fm),
        Err(d) => {
            eprint!("{}", d.render(&m.source_name));
            Err(CliError::Diagnostics)
        }
    }
}

fn parse_domains(args: &[String]) -> CliResult<BTreeMap<String, Vec<Option<Value>>>> {
    let mut out = BTreeMap::new();
    for arg in args {
        let (port, list) = arg
            .split_once('=')
            .ok_or_else(|| usage(format!("--domain expects `port=v1,v2,...`, got `{arg}`")))?;
        let values = parse_literal_list(list)
            .map_err(|d| usage(format!("domain for `{port}`: {}", d.message)))?;
        out.insert(port.to_string(), values);
    }
    Ok(out)
}

fn read_tdf_inputs(path: &Path, fm: &FlatModel) -> CliResult<Vec<StepInput>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let sig = PortSig::of_system(fm);
    match parse_tdf(&text, &sig, &fm.defs) {
        Ok(trace) => Ok(trace.cycles.into_iter().map(|c| c.inputs).collect()),
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            Err(CliError::Diagnostics)
        }
    }
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| usage(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    std::fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn cmd_check(model: &Path) -> CliResult<()> {
    let m = load_model(model)?;
    let d = check_consistency(&m);
    if d.is_empty() {
        Ok(())
    } else {
        eprint!("{}", d.render(&m.source_name));
        Err(CliError::Diagnostics)
    }
}

fn cmd_sim(model: &Path, inputs: &Path, record: Option<&Path>) -> CliResult<()> {
    let fm = load_flat(model)?;
    let stimuli = read_tdf_inputs(inputs, &fm)?;
    let eet = match run(&fm, &stimuli) {
        Ok(eet) => eet,
        Err(e) => {
            eprintln!("{e}");
            return Err(CliError::Diagnostics);
        }
    };
    if let Some(path) = record {
        write_file(path, &write_eet(&eet, &fm))?;
    }
    println!("cycles {}", eet.len());
    Ok(())
}

fn search_config(
    domains: &[String],
    max_depth: usize,
    strategy: StrategyArg,
    prune: bool,
) -> CliResult<SearchConfig> {
    Ok(SearchConfig {
        max_depth,
        input_domains: parse_domains(domains)?,
        strategy: strategy.into(),
        prune_visited: prune,
    })
}

fn cmd_gentest(
    model: &Path,
    target: &str,
    max_depth: usize,
    domains: &[String],
    strategy: StrategyArg,
    no_prune: bool,
    out: &Path,
) -> CliResult<()> {
    let fm = load_flat(model)?;
    let (component, state) = target.rsplit_once('.').ok_or_else(|| {
        usage(format!(
            "--target expects `component.state`, got `{target}`"
        ))
    })?;
    let cfg = search_config(domains, max_depth, strategy, !no_prune)?;
    let spec = ReachSpec::state(component, state);
    match generate_reach(&fm, &spec, &cfg) {
        Ok(SearchResult::Found { eet, depth }) => {
            write_file(out, &write_eet(&eet, &fm))?;
            println!("found depth {depth} cycles {}", eet.len());
            Ok(())
        }
        Ok(SearchResult::NotFound {
            explored_states,
            depth_reached,
        }) => {
            println!("notfound explored {explored_states} depth-reached {depth_reached}");
            Err(CliError::Diagnostics)
        }
        Err(e) => {
            eprintln!("{e}");
            Err(CliError::Diagnostics)
        }
    }
}

fn cmd_coverage(model: &Path, suite: &[PathBuf], report: Option<&Path>) -> CliResult<()> {
    let fm = load_flat(model)?;
    let mut eets = Vec::new();
    for path in suite {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
        match parse_eet(&text, &fm) {
            Ok(eet) => eets.push(eet),
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                return Err(CliError::Diagnostics);
            }
        }
    }
    let rep = match measure_model_coverage(&fm, &eets) {
        Ok(rep) => rep,
        Err(e) => {
            eprintln!("{e}");
            return Err(CliError::Diagnostics);
        }
    };
    if let Some(path) = report {
        write_file(path, &render_coverage_report(&rep))?;
    }
    println!(
        "state-coverage {:.2} transition-coverage {:.2}",
        rep.state_coverage, rep.transition_coverage
    );
    Ok(())
}

fn cmd_gencode(
    model: &Path,
    helper_split: bool,
    prefix: &str,
    out_dir: &Path,
    tdf_harness: Option<&str>,
) -> CliResult<()> {
    let fm = load_flat(model)?;
    let p = lower(&fm);
    let cfg = EmitterConfig {
        helper_split,
        package_prefix: prefix.to_string(),
    };
    let mut files = match emit_ada(&p, &cfg) {
        Ok(files) => files,
        Err(e) => {
            eprintln!("{e}");
            return Err(CliError::Diagnostics);
        }
    };
    if let Some(instance) = tdf_harness {
        match emit_tdf_harness(&p, instance) {
            Ok(f) => files.push(f),
            Err(e) => {
                eprintln!("{e}");
                return Err(CliError::Diagnostics);
            }
        }
    }
    for (name, text) in &files {
        write_file(&out_dir.join(name), text)?;
    }
    println!("files {}", files.len());
    Ok(())
}

fn cmd_gentb(model: &Path, trace: &Path, component: &str, out: Option<&Path>) -> CliResult<()> {
    let fm = load_flat(model)?;
    let text = std::fs::read_to_string(trace)
        .map_err(|e| usage(format!("cannot read {}: {e}", trace.display())))?;
    let sig = match PortSig::of_component(&fm, component) {
        Ok(sig) => sig,
        Err(e) => {
            eprintln!("{e}");
            return Err(CliError::Diagnostics);
        }
    };
    let mut tr = match parse_tdf(&text, &sig, &fm.defs) {
        Ok(tr) => tr,
        Err(e) => {
            eprintln!("{}: {e}", trace.display());
            return Err(CliError::Diagnostics);
        }
    };
    tr.component = component.to_string();
    let p = lower(&fm);
    let (default_name, text) = match emit_testbench(&tr, &p) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("{e}");
            return Err(CliError::Diagnostics);
        }
    };
    let path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&default_name));
    write_file(&path, &text)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_roundtrip(
    model: &Path,
    target_coverage: f64,
    max_depth: usize,
    domains: &[String],
    strategy: StrategyArg,
    out_dir: &Path,
) -> CliResult<()> {
    if !(target_coverage > 0.0 && target_coverage <= 1.0) {
        return Err(usage("--target-coverage must be in (0, 1]"));
    }
    let fm = load_flat(model)?;
    let cfg = search_config(domains, max_depth, strategy, true)?;
    let (suite, report) = match roundtrip(&fm, &cfg, target_coverage) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return Err(CliError::Diagnostics);
        }
    };
    for (i, eet) in suite.iter().enumerate() {
        write_file(
            &out_dir.join(format!("suite_{i:03}.eet")),
            &write_eet(eet, &fm),
        )?;
    }
    write_file(
        &out_dir.join("coverage.txt"),
        &render_coverage_report(&report),
    )?;
    println!(
        "transition-coverage {:.2} suite {}",
        report.transition_coverage,
        suite.len()
    );
    if report.transition_coverage >= target_coverage {
        Ok(())
    } else {
        Err(CliError::Diagnostics)
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::Check { model } => cmd_check(model),
        Command::Sim {
            model,
            inputs,
            record,
        } => cmd_sim(model, inputs, record.as_deref()),
        Command::Gentest {
            model,
            target,
            max_depth,
            domains,
            strategy,
            no_prune,
            out,
        } => cmd_gentest(
            model, target, *max_depth, domains, *strategy, *no_prune, out,
        ),
        Command::Coverage {
            model,
            suite,
            report,
        } => cmd_coverage(model, suite, report.as_deref()),
        Command::Gencode {
            model,
            helper_split,
            prefix,
            out_dir,
            tdf_harness,
        } => cmd_gencode(
            model,
            *helper_split,
            prefix,
            out_dir,
            tdf_harness.as_deref(),
        ),
        Command::Gentb {
            model,
            trace,
            component,
            out,
        } => cmd_gentb(model, trace, component, out.as_deref()),
        Command::Roundtrip {
            model,
            target_coverage,
            max_depth,
            domains,
            strategy,
            out_dir,
        } => cmd_roundtrip(
            model,
            *target_coverage,
            *max_depth,
            domains,
            *strategy,
            out_dir,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Diagnostics) => ExitCode::from(1),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
