//! `scenetg`: explore app models, export and inspect scene graphs, diff
//! versions.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use scenetg_core::diff::{diff_graphs, summary_text, Version};
use scenetg_core::explore::{explore, trace, ExplorationConfig, StopReason};
use scenetg_core::graph::{self, ExportFormat};
use scenetg_core::sim::{load_app_model, simulate, AppModel};

#[derive(Parser)]
#[command(name = "scenetg", version, about = "Scene transition graph explorer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Explore an app model and write the graphs, report and trace.
    Explore(ExploreArgs),
    /// Compare the outputs of two explorations.
    Diff {
        #[arg(long)]
        old: PathBuf,
        #[arg(long)]
        new: PathBuf,
        /// Where to write the JSON report.
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-render an exploration's scene graph.
    Export {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_parser = parse_format)]
        format: ExportFormat,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print activity, scene and transition-pair counts.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Check an app model file.
    ValidateModel {
        #[arg(long)]
        app: PathBuf,
    },
}

#[derive(Args)]
struct ExploreArgs {
    #[arg(long)]
    app: PathBuf,
    #[arg(long, env = "SCENETG_SEED", default_value_t = 0)]
    seed: u64,
    /// Seconds allowed for the dynamic phase.
    #[arg(long, default_value_t = 1800.0)]
    dynamic_timeout: f64,
    /// Seconds allowed for building launch messages.
    #[arg(long, default_value_t = 900.0)]
    analysis_timeout: f64,
    /// Stop after this many driver actions.
    #[arg(long)]
    max_steps: Option<u64>,
    #[arg(long, default_value_t = 20)]
    max_depth: usize,
    #[arg(long, default_value_t = 6)]
    fuzz_cap: usize,
    #[arg(long)]
    no_fuzzing: bool,
    #[arg(long)]
    no_indirect: bool,
    #[arg(long)]
    no_scene_id: bool,
    #[arg(long)]
    out: PathBuf,
}

fn parse_format(s: &str) -> Result<ExportFormat, String> {
    s.parse()
}

/// Error paired with the exit code it maps to.
struct Failure(u8, anyhow::Error);

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure(1, e.into())
}

fn runtime(e: impl Into<anyhow::Error>) -> Failure {
    Failure(2, e.into())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Explore(args) => cmd_explore(&args),
        Command::Diff { old, new, out } => cmd_diff(&old, &new, &out),
        Command::Export { input, format, out } => cmd_export(&input, format, out.as_deref()),
        Command::Stats { input } => cmd_stats(&input),
        Command::ValidateModel { app } => cmd_validate(&app),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}

fn load_model(path: &Path) -> Result<AppModel, Failure> {
    load_app_model(path).map_err(usage)
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(runtime)
}

fn cmd_explore(args: &ExploreArgs) -> Result<u8, Failure> {
    let model = load_model(&args.app)?;
    let config = ExplorationConfig {
        analysis_timeout: args.analysis_timeout,
        dynamic_timeout: args.dynamic_timeout,
        rng_seed: args.seed,
        fuzz_component_cap: args.fuzz_cap,
        enable_fuzzing: !args.no_fuzzing,
        enable_indirect: !args.no_indirect,
        enable_scene_id: !args.no_scene_id,
        max_depth_per_activity: args.max_depth,
        step_budget: args.max_steps,
    };
    config.validate().map_err(|e| usage(anyhow!(e)))?;
    let mut session = simulate(&model, args.seed);
    let run = explore(&model.app_input(), &mut session, &config).map_err(usage)?;

    let out = &args.out;
    fs::create_dir_all(out.join("layouts"))
        .with_context(|| format!("creating {}", out.display()))
        .map_err(runtime)?;
    for (id, xml) in &run.layouts {
        write(&out.join("layouts").join(format!("{id}.xml")), xml)?;
    }
    write(&out.join("scenetg.json"), &graph::to_json(&run.scenetg, &run.atg))?;
    write(&out.join("scenetg.dot"), &graph::to_dot(&run.scenetg))?;
    let atg = json!({"package": model.package, "atg_edges": run.atg.edges()});
    write(&out.join("atg.json"), &format!("{}\n", serde_json::to_string_pretty(&atg).expect("json")))?;
    let report = serde_json::to_string_pretty(&run.report).expect("report serializes");
    write(&out.join("report.json"), &format!("{report}\n"))?;
    write(&out.join("trace.log"), &trace::to_jsonl(&run.trace))?;

    let s = run.report.stats;
    println!(
        "activities={} scenes={} pairs={} rounds={} stop={}",
        s.explored_activities,
        s.scenes,
        s.transition_pairs,
        run.report.rounds,
        serde_json::to_value(run.report.stop_reason).expect("json").as_str().unwrap_or_default()
    );
    Ok(match run.report.stop_reason {
        StopReason::Timeout | StopReason::Budget => {
            eprintln!("warning: exploration stopped early; outputs are partial");
            3
        }
        _ => 0,
    })
}

fn require_dir(dir: &Path) -> Result<(), Failure> {
    if dir.join("scenetg.json").is_file() {
        Ok(())
    } else {
        Err(usage(anyhow!("{} does not hold an exploration output (no scenetg.json)", dir.display())))
    }
}

fn cmd_diff(old: &Path, new: &Path, out: &Path) -> Result<u8, Failure> {
    require_dir(old)?;
    require_dir(new)?;
    let old = Version::load(old).map_err(usage)?;
    let new = Version::load(new).map_err(usage)?;
    let report = diff_graphs(&old, &new);
    let text = serde_json::to_string_pretty(&report).expect("diff serializes");
    write(out, &format!("{text}\n"))?;
    print!("{}", summary_text(&report));
    Ok(0)
}

fn read_graphs(dir: &Path) -> Result<(graph::SceneTg, graph::Atg), Failure> {
    require_dir(dir)?;
    let path = dir.join("scenetg.json");
    let text = fs::read_to_string(&path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(usage)?;
    graph::from_json(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(usage)
}

fn cmd_export(input: &Path, format: ExportFormat, out: Option<&Path>) -> Result<u8, Failure> {
    let (tg, atg) = read_graphs(input)?;
    let text = graph::render(&tg, &atg, format);
    match out {
        Some(path) => write(path, &text)?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn cmd_stats(input: &Path) -> Result<u8, Failure> {
    let (tg, atg) = read_graphs(input)?;
    let s = graph::stats(&tg, &atg);
    println!("{}", serde_json::to_string(&s).expect("stats serialize"));
    Ok(0)
}

fn cmd_validate(app: &Path) -> Result<u8, Failure> {
    let model = load_model(app)?;
    let scenes: usize = model.activities.iter().map(|a| a.scenes.len()).sum();
    println!("ok: {} activities, {} scene models", model.activities.len(), scenes);
    Ok(0)
}
