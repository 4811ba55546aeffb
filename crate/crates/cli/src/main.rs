//! `operadix`: build, compose, check and simulate operads from the shell.
//!
//! Exit status is 0 on success, 1 when an input is refused (parse error,
//! guard failure, bad configuration) and 2 when a check finds a violation
//! or an axiom counterexample.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use operadix::decoration::{default_alphabet, DecoratedState};
use operadix::endomorphism::{interpret, sweep_identity, sweep_parallel, sweep_sequential, sweep_sizes, SweepReport};
use operadix::expr_parser::{elaborate, parse};
use operadix::simulator::{format_trace, parse_trace, replay, run, EventWeights, SimConfig};
use operadix::{Carrier, Config, ConfigValues, FiniteFn, FlatState, OperadId};

/// Sweeps larger than this many cases are refused.
const MAX_SWEEP_CASES: u64 = 200_000_000;

#[derive(Parser)]
#[command(name = "operadix", version, about = "Operads as a guarded relational machine")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// `key=value` configuration file
    #[arg(long, global = true, env = "OPERADIX_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    max_args: Option<usize>,
    #[arg(long, global = true)]
    max_oprd: Option<usize>,
    #[arg(long, global = true)]
    max_fol: Option<usize>,
    /// Emit JSON instead of text
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and elaborate an expression file, print the final state
    Parse {
        file: PathBuf,
        /// Also print the elaborated events and the tree
        #[arg(long)]
        verbose: bool,
    },
    /// Replay a trace file (`-` for stdin), print the final state
    Compose { trace: PathBuf },
    /// Run the invariant checker on a state dump
    Check { state: PathBuf },
    /// Randomized animation with invariant checks after every event
    Simulate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        steps: u64,
        /// Tree-oracle comparison every k-th event, 0 to disable
        #[arg(long, default_value_t = 0)]
        oracle_every: u64,
        #[arg(long, default_value_t = 1)]
        new_weight: u32,
        #[arg(long, default_value_t = 1)]
        compose_weight: u32,
        /// Write the fired events to this file
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Exhaustive operad axiom sweep in the endomorphism operad
    Axioms {
        #[arg(long, default_value_t = 2)]
        carrier: usize,
        #[arg(long, default_value_t = 2)]
        max_arity: usize,
        /// Arity bound for the identity laws (default: max-arity + 1)
        #[arg(long)]
        identity_arity: Option<usize>,
    },
    /// Interpret an expression over finite functions and print its table
    Eval {
        file: PathBuf,
        /// Binding `name=arity:table`, e.g. `f=2:0110`
        #[arg(long = "fn", value_name = "NAME=TABLE")]
        fns: Vec<String>,
        #[arg(long, default_value_t = 2)]
        carrier: usize,
    },
    /// Convert a state between the dump and JSON forms
    Export { state: PathBuf },
}

fn read_input(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

impl Global {
    fn values(&self) -> Result<ConfigValues> {
        let file = match &self.config {
            Some(p) => ConfigValues::parse(&read_input(p)?).with_context(|| format!("in {}", p.display()))?,
            None => ConfigValues::default(),
        };
        Ok(file.overlay(ConfigValues {
            max_args: self.max_args,
            max_oprd: self.max_oprd,
            max_fol: self.max_fol,
            ..ConfigValues::default()
        }))
    }

    fn machine(&self) -> Result<(Config, Vec<String>)> {
        let v = self.values()?;
        let config = v.build().context("invalid configuration")?;
        Ok((config, v.alphabet.clone().unwrap_or_else(default_alphabet)))
    }
}

fn print_state(state: &FlatState, json: bool) {
    if json {
        println!("{}", serde_json::to_string_pretty(&state.to_json()).expect("json"));
    } else {
        print!("{}", state.dump());
    }
}

fn print_sweep(name: &str, r: &SweepReport) -> bool {
    if r.ok() {
        print!("{name}: OK ({} cases)", r.cases);
    } else {
        print!("{name}: FAILED ({} cases, {} counterexamples)", r.cases, r.counterexamples.len());
    }
    r.ok()
}

fn execute(cli: Cli) -> Result<ExitCode> {
    let g = &cli.global;
    match &cli.command {
        Command::Parse { file, verbose } => {
            let (config, _) = g.machine()?;
            let program = parse(&read_input(file)?).map_err(|e| anyhow!("{}:{e}", file.display()))?;
            let events = elaborate(&program, &config).map_err(|e| anyhow!("[{}] {e}", e.kind.label()))?;
            let state = events
                .iter()
                .try_fold(FlatState::new(config), |s, e| s.apply(e))
                .expect("elaboration replays its events");
            if *verbose && !g.json {
                println!("# {}", program.expr);
                for e in &events {
                    println!("# {e}");
                }
                let tree = program.expr.to_tree(&program.arities()).expect("elaborated");
                println!("# {tree}");
            }
            print_state(&state, g.json);
        }
        Command::Compose { trace } => {
            let (config, _) = g.machine()?;
            let lines = parse_trace(&read_input(trace)?)?;
            let state = replay(&lines, config).map_err(|e| match &e {
                operadix::simulator::TraceError::Refused { error, .. } => anyhow!("[{}] {e}", error.label()),
                _ => anyhow!(e),
            })?;
            print_state(&state, g.json);
        }
        Command::Check { state } => {
            let (config, alphabet) = g.machine()?;
            let text = read_input(state)?;
            let (base, gluing, injective) = if text.contains("[inx]") || text.contains("[outx]") {
                let d = DecoratedState::parse_dump(&text, config, alphabet)?;
                (d.erase(), d.check_gluing(), d.check_injective())
            } else if text.trim_start().starts_with('{') {
                (FlatState::from_json(&text, config)?, Vec::new(), Vec::new())
            } else {
                (FlatState::parse_dump(&text, config)?, Vec::new(), Vec::new())
            };
            let labels = base.check_invariants();
            let structure = base.check_structure();
            let mut problems: Vec<String> = labels.iter().map(|l| l.label().to_string()).collect();
            problems.extend(structure.iter().map(|v| v.to_string()));
            problems.extend(gluing.iter().map(|op: &OperadId| format!("gluing at `{op}`")));
            problems.extend(injective.iter().map(|op: &OperadId| format!("injective at `{op}`")));
            if g.json {
                let js = serde_json::json!({
                    "ok": problems.is_empty(),
                    "invariants": labels.iter().map(|l| l.label()).collect::<Vec<_>>(),
                    "structure": structure,
                    "gluing": gluing,
                    "injective": injective,
                });
                println!("{}", serde_json::to_string_pretty(&js)?);
            } else if problems.is_empty() {
                println!("ok");
            } else {
                for p in &problems {
                    println!("{p}");
                }
            }
            if !problems.is_empty() {
                eprintln!("violated: {}", problems.join(", "));
                return Ok(ExitCode::from(2));
            }
        }
        Command::Simulate {
            seed,
            steps,
            oracle_every,
            new_weight,
            compose_weight,
            trace,
        } => {
            let (config, _) = g.machine()?;
            let sim = SimConfig {
                weights: EventWeights {
                    new_operad: *new_weight,
                    compose_seq: *compose_weight,
                },
                oracle_check_every: *oracle_every,
                record_trace: trace.is_some(),
                ..SimConfig::new(*seed, *steps, config)
            };
            let (report, lines) = run(&sim)?;
            if let Some(path) = trace {
                fs::write(path, format_trace(&lines)).with_context(|| format!("writing {}", path.display()))?;
            }
            if g.json {
                println!("{}", serde_json::to_string_pretty(&report.to_json())?);
            } else {
                print!("{}", report.to_text());
            }
            eprintln!("elapsed: {:.3}s", report.elapsed.as_secs_f64());
            if report.violation_count > 0 {
                for v in &report.violations {
                    eprintln!("reproducer: seed {} step {} `{}`\n{}", v.seed, v.step, v.event, v.dump);
                }
                return Ok(ExitCode::from(2));
            }
        }
        Command::Axioms {
            carrier,
            max_arity,
            identity_arity,
        } => {
            let x = Carrier::new(*carrier)?;
            let id_arity = identity_arity.unwrap_or(max_arity + 1);
            let (seq, par, _) = sweep_sizes(x, *max_arity).unwrap_or((u64::MAX, u64::MAX, 0));
            let ids = sweep_sizes(x, id_arity).map_or(u64::MAX, |s| s.2);
            if seq > MAX_SWEEP_CASES || par > MAX_SWEEP_CASES || ids > MAX_SWEEP_CASES {
                bail!("sweep over carrier {carrier} with arity {max_arity} is too large (limit {MAX_SWEEP_CASES} cases per law)");
            }
            let s = sweep_sequential(x, *max_arity);
            let p = sweep_parallel(x, *max_arity);
            let i = sweep_identity(x, id_arity);
            let ok = if g.json {
                let js = |r: &SweepReport| {
                    serde_json::json!({
                        "cases": r.cases,
                        "counterexamples": r.counterexamples.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                    })
                };
                println!(
                    "{}",
                    serde_json::to_string_pretty(&serde_json::json!({
                        "carrier": carrier,
                        "max_arity": max_arity,
                        "sequential": js(&s),
                        "parallel": js(&p),
                        "identity": js(&i),
                    }))?
                );
                s.ok() && p.ok() && i.ok()
            } else {
                let a = print_sweep("sequential", &s);
                print!(", ");
                let b = print_sweep("parallel", &p);
                println!();
                let c = print_sweep("identity", &i);
                println!();
                a && b && c
            };
            if !ok {
                for c in s.counterexamples.iter().chain(&p.counterexamples).chain(&i.counterexamples) {
                    eprintln!("counterexample: {c}");
                }
                return Ok(ExitCode::from(2));
            }
        }
        Command::Eval { file, fns, carrier } => {
            let x = Carrier::new(*carrier)?;
            let program = parse(&read_input(file)?).map_err(|e| anyhow!("{}:{e}", file.display()))?;
            let mut binding = BTreeMap::new();
            for b in fns {
                let (name, table) = b
                    .split_once('=')
                    .ok_or_else(|| anyhow!("--fn expects NAME=ARITY:TABLE, got `{b}`"))?;
                binding.insert(OperadId::new(name.trim())?, FiniteFn::parse(table, x)?);
            }
            let f = interpret(&program, &binding)?;
            if g.json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&serde_json::json!({
                        "arity": f.arity(),
                        "carrier": carrier,
                        "table": f.to_string(),
                    }))?
                );
            } else {
                println!("{f}");
                print_rows(&f);
            }
        }
        Command::Export { state } => {
            let (config, _) = g.machine()?;
            let text = read_input(state)?;
            let s = if text.trim_start().starts_with('{') {
                FlatState::from_json(&text, config)?
            } else {
                FlatState::parse_dump(&text, config)?
            };
            print_state(&s, g.json);
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// `x1 x2 … -> value`, one row per argument tuple.
fn print_rows(f: &FiniteFn) {
    let n = f.carrier().size();
    let mut args = vec![0u8; f.arity()];
    for row in 0..f.table().len() {
        let mut r = row;
        for a in args.iter_mut().rev() {
            *a = (r % n) as u8;
            r /= n;
        }
        let xs: Vec<String> = args.iter().map(u8::to_string).collect();
        println!("{}-> {}", xs.iter().map(|x| format!("{x} ")).collect::<String>(), f.table()[row]);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
