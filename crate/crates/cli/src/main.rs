use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use orchestrator_core::scenario::{run_all, RunOptions, Scenario};
use orchestrator_core::trace::FormatterRegistry;
use orchestrator_core::{Config, MultilayerTopology};

/// Boots the simulated testbed and the orchestrator in-process, submits
/// scenarios through the NBI and reports choice, timing and trace.
#[derive(Debug, Parser)]
#[command(name = "orchestrator", version)]
struct Args {
    /// Topology file (TOML). Defaults to the built-in three-ROADM testbed.
    #[arg(long)]
    topology: Option<PathBuf>,

    /// Configuration file (TOML). ORCH_* environment variables override it.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Scenario file, or builtin:optical, builtin:ip, builtin:all.
    #[arg(long, default_value = "builtin:all")]
    scenario: String,

    /// Trace export format: table or structured.
    #[arg(long, default_value = "table")]
    trace_format: String,

    /// Simulated lightpath setup delay per fiber hop.
    #[arg(long)]
    per_hop_delay_ms: Option<u64>,

    /// Return as soon as intents are installed, without waiting for lightpaths.
    #[arg(long)]
    no_wait: bool,

    /// Log verbosity: -v for info, -vv for debug.
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

fn load_inputs(args: &Args) -> Result<(MultilayerTopology, Config, Vec<Scenario>)> {
    let topology = match &args.topology {
        Some(path) => {
            let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
            MultilayerTopology::load(&bytes).with_context(|| format!("loading {}", path.display()))?
        }
        None => MultilayerTopology::default_testbed(),
    };

    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            Config::from_toml(&text).with_context(|| format!("loading {}", path.display()))?
        }
        None => Config::default(),
    };
    config.apply_env().context("applying environment overrides")?;
    if let Some(ms) = args.per_hop_delay_ms {
        config.sim.per_hop_delay_ms = ms;
    }
    config.validate()?;

    let scenarios = match args.scenario.strip_prefix("builtin:") {
        Some(name) => Scenario::builtin(name)?,
        None => {
            let text = std::fs::read_to_string(&args.scenario)
                .with_context(|| format!("reading {}", args.scenario))?;
            Scenario::load_file(&text)?
        }
    };
    if scenarios.is_empty() {
        bail!("no scenarios to run");
    }
    Ok((topology, config, scenarios))
}

#[tokio::main]
async fn main() -> ExitCode {
    let args = Args::parse();
    let level = match args.verbose {
        0 => tracing_subscriber::filter::LevelFilter::WARN,
        1 => tracing_subscriber::filter::LevelFilter::INFO,
        _ => tracing_subscriber::filter::LevelFilter::DEBUG,
    };
    tracing_subscriber::fmt()
        .with_max_level(level)
        .with_writer(std::io::stderr)
        .init();

    match run(args).await {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

async fn run(args: Args) -> Result<bool> {
    let (topology, config, scenarios) = load_inputs(&args)?;
    let options = RunOptions {
        trace_format: args.trace_format.clone(),
        await_connectivity: !args.no_wait,
    };
    let formatters = FormatterRegistry::default();
    if formatters.get(&options.trace_format).is_none() {
        bail!(
            "unknown trace format {:?} (expected one of {})",
            options.trace_format,
            formatters.names().join(", ")
        );
    }
    let reports = run_all(topology, config, &scenarios, &options).await?;
    let mut all_passed = true;
    for r in &reports {
        print!("{}", r.render());
        all_passed &= r.passed();
    }
    let passed = reports.iter().filter(|r| r.passed()).count();
    println!("{passed}/{} scenarios passed", reports.len());
    Ok(all_passed)
}
