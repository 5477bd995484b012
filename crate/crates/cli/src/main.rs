use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use overwatch_cli::pipeline::{self, write_outputs};
use overwatch_cli::{effective_seed, run_pipeline, CliError, Scenario};
use overwatch_core::automata::Dfa;
use overwatch_core::decomp::{certify, decompose};
use overwatch_core::spec_lang::{compile_own, parse_ltl, parse_re};
use overwatch_core::terrain::{discretize, load_heightmap, DiscretizeParams};

#[derive(Parser)]
#[command(name = "overwatch", version, about = "Trust-based bounding overwatch planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Specification tools.
    #[command(subcommand)]
    Spec(SpecCommand),
    /// Terrain tools.
    #[command(subcommand)]
    Terrain(TerrainCommand),
    /// Run the full pipeline and write all artifacts.
    Plan {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Re-run the simulation from stored plans.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        plans: PathBuf,
    },
    /// Overlay all stored plan sets on the terrain.
    Render {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        plans: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum SpecCommand {
    /// Compile a specification to a minimal DFA over its own atoms.
    Compile(CompileArgs),
    /// Split an automaton into parallel subtasks.
    Decompose {
        automaton: PathBuf,
        /// Write each part as JSON and DOT here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CompileArgs {
    #[arg(long, conflicts_with = "ltl", required_unless_present = "ltl")]
    re: Option<String>,
    #[arg(long)]
    ltl: Option<String>,
    #[arg(long, conflicts_with = "json")]
    dot: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum TerrainCommand {
    /// Per-cell statistics as CSV.
    Stats {
        map: PathBuf,
        #[arg(long)]
        cell_size: usize,
        #[arg(long)]
        sensing_radius: usize,
        #[arg(long, default_value_t = 1.0)]
        resolution: f64,
        #[arg(long, default_value_t = 0.0)]
        g_min: f64,
    },
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Spec(SpecCommand::Compile(a)) => {
            let ast = match (&a.re, &a.ltl) {
                (Some(re), _) => parse_re(re),
                (None, Some(ltl)) => parse_ltl(ltl),
                (None, None) => unreachable!("clap requires one of --re/--ltl"),
            }
            .map_err(|e| CliError::validation("spec", e))?;
            let dfa = compile_own(&ast).map_err(|e| CliError::validation("spec", e))?;
            if a.dot {
                print!("{}", dfa.to_dot("spec"));
            } else {
                println!("{}", dfa.to_json());
            }
        }
        Command::Spec(SpecCommand::Decompose { automaton, out_dir }) => {
            let text = String::from_utf8_lossy(&read(&automaton)?).into_owned();
            let g = Dfa::from_json(&text).map_err(|e| CliError::validation("decompose", e))?;
            let d = decompose(&g);
            let ok = certify(&g, &d).map_err(|e| CliError::validation("decompose", e))?;
            let report = d.report(&g);
            print!("{report}");
            if let Some(dir) = out_dir {
                for (k, part) in d.parts.iter().enumerate() {
                    let name = format!("part_{}", k + 1);
                    write(&dir.join(format!("{name}.json")), part.to_json())?;
                    write(&dir.join(format!("{name}.dot")), part.to_dot(&name))?;
                }
                write(&dir.join("certificate.txt"), &report)?;
            }
            if !ok {
                return Err(CliError::validation("decompose", "certificate check failed"));
            }
        }
        Command::Terrain(TerrainCommand::Stats {
            map,
            cell_size,
            sensing_radius,
            resolution,
            g_min,
        }) => {
            let h = load_heightmap(&read(&map)?, resolution)
                .map_err(|e| CliError::validation("terrain", e))?;
            let grid = discretize(
                &h,
                &DiscretizeParams {
                    cell_size,
                    sensing_radius,
                    g_min,
                },
            )
            .map_err(|e| CliError::validation("terrain", e))?;
            print!("{}", grid.to_csv());
        }
        Command::Plan { scenario, out_dir } => {
            let s = Scenario::load(&scenario)?;
            let out = run_pipeline(&s, effective_seed(&s)?)?;
            write_outputs(&out, &out_dir)?;
            for t in &out.teams {
                for (set, plan) in &t.plans {
                    match plan {
                        Ok(p) => println!(
                            "{} {set}: {} steps, terminal trust {:.6} (var {:.6})",
                            t.id,
                            p.path.len(),
                            p.terminal_trust.mean,
                            p.terminal_trust.var
                        ),
                        Err(e) => println!("{} {set}: {e}", t.id),
                    }
                }
            }
            let failed = out.unsatisfiable();
            if !failed.is_empty() {
                return Err(CliError::Unsatisfiable { teams: failed });
            }
        }
        Command::Simulate { scenario, plans } => {
            let s = Scenario::load(&scenario)?;
            let log = pipeline::simulate(&s, &plans)?;
            for (team, done) in &log.status {
                println!("{team}: {}", if *done { "done" } else { "incomplete" });
            }
        }
        Command::Render { scenario, plans, out } => {
            let s = Scenario::load(&scenario)?;
            write(&out, pipeline::render(&s, &plans)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
