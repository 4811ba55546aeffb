//! Byte-exact golden files.

use operadix::expr_parser::{elaborate, parse};
use operadix::simulator::{format_trace, parse_trace, replay, run, SimConfig};
use operadix::{default_config, FlatState};

fn golden(name: &str) -> String {
    let path = format!("{}/tests/golden/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn run_program(src: &str) -> FlatState {
    let config = default_config();
    let program = parse(src).unwrap();
    elaborate(&program, &config)
        .unwrap()
        .iter()
        .fold(FlatState::new(config), |s, e| s.apply(e).unwrap())
}

#[test]
fn single_graft_dump() {
    assert_eq!(run_program(&golden("single_graft.op")).dump(), golden("single_graft.dump"));
}

#[test]
fn nested_graft_dump() {
    assert_eq!(run_program(&golden("nested_graft.op")).dump(), golden("nested_graft.dump"));
}

#[test]
fn nested_graft_dump_parses_back() {
    let s = FlatState::parse_dump(&golden("nested_graft.dump"), default_config()).unwrap();
    assert_eq!(s, run_program(&golden("nested_graft.op")));
    assert!(s.check_invariants().is_empty());
}

#[test]
fn nested_graft_trace_replays_to_the_same_state() {
    let trace = parse_trace("new f 4 1\nnew g 3 1\nnew h 3 1\ncompose f 2 g\ncompose f 4 h\n").unwrap();
    let s = replay(&trace, default_config()).unwrap();
    assert_eq!(s.dump(), golden("nested_graft.dump"));
}

#[test]
fn simulator_seed1_steps10() {
    let sim = SimConfig {
        record_trace: true,
        ..SimConfig::new(1, 10, default_config())
    };
    let (report, trace) = run(&sim).unwrap();
    assert_eq!(report.to_text(), golden("sim_seed1_steps10.report"));
    assert_eq!(format_trace(&trace), golden("sim_seed1_steps10.trace"));
    assert_eq!(report.total_fired(), 10);
    assert_eq!(report.violation_count, 0);
}
