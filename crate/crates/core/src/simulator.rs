//! Randomized animation of the machine.
//!
//! Each step samples an event kind by weight, then parameters: a name from
//! a small pool, `rr` and `vv` in `1..=max_args`, an ordered pair of
//! distinct roots and a position of the first root's foliage. After a few
//! refused samples the whole parameter grid is enumerated; if nothing is
//! enabled there the machine is deadlocked and is reset to the empty state.
//! Every fired event is followed by the invariant and structure checks and,
//! for compositions, the foliage size laws.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::config::Config;
use crate::flat_machine::{ComposeWitness, Event, FlatState, MachineError};
use crate::ids::{OperadId, Position};
use crate::tree_oracle::{compare, Forest};

/// Name of the generator, reported alongside the seed.
pub const RNG_NAME: &str = "ChaCha8";

/// Refused samples before falling back to grid enumeration.
const SAMPLE_TRIES: usize = 8;
/// Reset states kept in a report.
const MAX_RESET_WITNESSES: usize = 16;
/// Violations kept in a report (the count keeps going).
const MAX_VIOLATIONS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EventWeights {
    pub new_operad: u32,
    pub compose_seq: u32,
}

impl Default for EventWeights {
    fn default() -> Self {
        EventWeights {
            new_operad: 1,
            compose_seq: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub seed: u64,
    /// Number of events to fire.
    pub max_steps: u64,
    pub config: Config,
    pub weights: EventWeights,
    /// Compare against the tree oracle every k-th fired event; 0 disables.
    pub oracle_check_every: u64,
    pub record_trace: bool,
}

impl SimConfig {
    pub fn new(seed: u64, max_steps: u64, config: Config) -> Self {
        SimConfig {
            seed,
            max_steps,
            config,
            weights: EventWeights::default(),
            oracle_check_every: 0,
            record_trace: false,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.max_steps == 0 {
            return Err(SimError::NoSteps);
        }
        if self.weights.new_operad == 0 && self.weights.compose_seq == 0 {
            return Err(SimError::NoWeight);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("max_steps must be at least 1")]
    NoSteps,
    #[error("at least one event weight must be positive")]
    NoWeight,
}

/// A failed check after a fired event, with what is needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub seed: u64,
    /// 1-based index of the fired event
    pub step: u64,
    pub event: String,
    pub check: String,
    pub detail: String,
    pub dump: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} after step {} (`{}`, seed {}): {}",
            self.check, self.step, self.event, self.seed, self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimReport {
    pub seed: u64,
    pub rng: &'static str,
    pub fired: BTreeMap<&'static str, u64>,
    pub guard_failures: BTreeMap<&'static str, u64>,
    pub attempts: u64,
    pub resets: u64,
    /// Dumps of deadlocked states, oldest first.
    pub reset_witnesses: Vec<String>,
    /// The run stopped early because even the empty state was deadlocked.
    pub stalled: bool,
    pub oracle_checks: u64,
    pub law_checks: u64,
    pub violation_count: u64,
    pub violations: Vec<Violation>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl SimReport {
    fn new(seed: u64) -> Self {
        SimReport {
            seed,
            rng: RNG_NAME,
            fired: [("newOperad", 0), ("composeSeq", 0)].into(),
            guard_failures: BTreeMap::new(),
            attempts: 0,
            resets: 0,
            reset_witnesses: Vec::new(),
            stalled: false,
            oracle_checks: 0,
            law_checks: 0,
            violation_count: 0,
            violations: Vec::new(),
            elapsed: Duration::ZERO,
        }
    }

    pub fn total_fired(&self) -> u64 {
        self.fired.values().sum()
    }

    pub fn total_failures(&self) -> u64 {
        self.guard_failures.values().sum()
    }

    /// Stable text form; elapsed time is left out.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "seed: {} ({})", self.seed, self.rng);
        let _ = writeln!(s, "fired: {}", kv(&self.fired));
        let _ = writeln!(s, "attempts: {}", self.attempts);
        let _ = writeln!(s, "guard failures: {}", kv(&self.guard_failures));
        let _ = writeln!(s, "resets: {}", self.resets);
        if self.stalled {
            let _ = writeln!(s, "stalled: no event enabled on the empty state");
        }
        let _ = writeln!(s, "oracle checks: {}", self.oracle_checks);
        let _ = writeln!(s, "law checks: {}", self.law_checks);
        let _ = writeln!(s, "violations: {}", self.violation_count);
        for v in &self.violations {
            let _ = writeln!(s, "  {v}");
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report is plain data")
    }
}

fn kv(m: &BTreeMap<&'static str, u64>) -> String {
    if m.is_empty() {
        return "none".into();
    }
    m.iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// One line of a trace file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceLine {
    Event(Event),
    /// back to the empty state after a deadlock
    Reset,
}

impl fmt::Display for TraceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceLine::Event(e) => write!(f, "{e}"),
            TraceLine::Reset => f.write_str("reset"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("step {step} (`{line}`): {error}")]
    Refused {
        step: usize,
        line: String,
        error: MachineError,
    },
}

impl TraceError {
    pub fn step(&self) -> usize {
        match self {
            TraceError::Syntax { line, .. } => *line,
            TraceError::Refused { step, .. } => *step,
        }
    }
}

/// Parse `new f 4 1`, `compose f 2 g` and `reset` lines. Blank lines and
/// `#` comments are skipped.
pub fn parse_trace(text: &str) -> Result<Vec<TraceLine>, TraceError> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let err = |msg: String| TraceError::Syntax { line, msg };
        let words: Vec<&str> = body.split_whitespace().collect();
        let id = |s: &str| OperadId::new(s).map_err(|e| err(e.to_string()));
        let num = |s: &str| s.parse::<usize>().map_err(|_| err(format!("`{s}` is not a number")));
        let entry = match words.as_slice() {
            ["new", name, rr, vv] => TraceLine::Event(Event::New {
                id: id(name)?,
                inputs: num(rr)?,
                outputs: num(vv)?,
            }),
            ["compose", op1, ii, op2] => TraceLine::Event(Event::Compose {
                op1: id(op1)?,
                position: Position::new(num(ii)?).map_err(|e| err(e.to_string()))?,
                op2: id(op2)?,
            }),
            ["reset"] => TraceLine::Reset,
            _ => return Err(err(format!("cannot read `{body}`"))),
        };
        out.push(entry);
    }
    Ok(out)
}

pub fn format_trace(trace: &[TraceLine]) -> String {
    trace.iter().map(|l| format!("{l}\n")).collect()
}

/// Apply a trace to the empty state. Fails at the first refused event with
/// its 1-based step index.
pub fn replay(trace: &[TraceLine], config: Config) -> Result<FlatState, TraceError> {
    let mut state = FlatState::new(config);
    for (k, line) in trace.iter().enumerate() {
        match line {
            TraceLine::Reset => state = FlatState::new(config),
            TraceLine::Event(e) => {
                state = state.apply(e).map_err(|error| TraceError::Refused {
                    step: k + 1,
                    line: line.to_string(),
                    error,
                })?;
            }
        }
    }
    Ok(state)
}

/// The bounded parameter grid the sampler draws from.
#[derive(Debug, Clone)]
pub struct Grid {
    pub names: Vec<OperadId>,
    pub max_args: usize,
}

impl Grid {
    /// `max_oprd + 2` names, so a free one exists whenever g1 allows a new
    /// operad and g3 still gets exercised.
    pub fn for_config(config: &Config) -> Self {
        Grid {
            names: (1..=config.max_oprd() + 2)
                .map(|k| OperadId::new(format!("op{k}")).expect("valid name"))
                .collect(),
            max_args: config.max_args(),
        }
    }

    /// Every `newOperad` candidate.
    pub fn new_candidates(&self) -> impl Iterator<Item = Event> + '_ {
        self.names.iter().flat_map(move |id| {
            (1..=self.max_args).flat_map(move |rr| {
                (1..=self.max_args).map(move |vv| Event::New {
                    id: id.clone(),
                    inputs: rr,
                    outputs: vv,
                })
            })
        })
    }

    /// Every `composeSeq` candidate over the current roots.
    pub fn compose_candidates(&self, state: &FlatState) -> Vec<Event> {
        let roots: Vec<&OperadId> = state.roots().collect();
        let mut out = Vec::new();
        for op1 in &roots {
            let foliage = state.foliage_of(op1).expect("roots are unhooked");
            for op2 in roots.iter().filter(|o| *o != op1) {
                for ii in &foliage {
                    out.push(Event::Compose {
                        op1: (*op1).clone(),
                        position: *ii,
                        op2: (*op2).clone(),
                    });
                }
            }
        }
        out
    }
}

/// Enabled events over the grid, restricted to the kinds with positive
/// weight.
pub fn enabled_events(state: &FlatState, grid: &Grid, weights: EventWeights) -> Vec<Event> {
    let mut out: Vec<Event> = Vec::new();
    if weights.new_operad > 0 {
        out.extend(grid.new_candidates().filter(|e| state.apply(e).is_ok()));
    }
    if weights.compose_seq > 0 {
        out.extend(
            grid.compose_candidates(state)
                .into_iter()
                .filter(|e| state.apply(e).is_ok()),
        );
    }
    out
}

struct Sampler<'a> {
    rng: ChaCha8Rng,
    grid: Grid,
    weights: EventWeights,
    config: &'a Config,
}

impl Sampler<'_> {
    /// `None` when the drawn kind has no candidate at all.
    fn sample(&mut self, state: &FlatState) -> Option<Event> {
        let total = self.weights.new_operad + self.weights.compose_seq;
        let roots: Vec<&OperadId> = state.roots().collect();
        let mut want_new = self.rng.gen_range(0..total) < self.weights.new_operad;
        if roots.len() < 2 {
            if self.weights.new_operad == 0 {
                return None;
            }
            want_new = true;
        }
        if want_new {
            return Some(Event::New {
                id: self.grid.names.choose(&mut self.rng).expect("non-empty pool").clone(),
                inputs: self.rng.gen_range(1..=self.config.max_args()),
                outputs: self.rng.gen_range(1..=self.config.max_args()),
            });
        }
        let a = self.rng.gen_range(0..roots.len());
        let mut b = self.rng.gen_range(0..roots.len() - 1);
        if b >= a {
            b += 1;
        }
        let foliage: Vec<Position> = state
            .foliage_of(roots[a])
            .expect("roots are unhooked")
            .into_iter()
            .collect();
        Some(Event::Compose {
            op1: roots[a].clone(),
            position: *foliage.choose(&mut self.rng).expect("roots have foliage"),
            op2: roots[b].clone(),
        })
    }
}

/// Fire `event`, running the per-event checks. Returns the new state and
/// the failed checks as `(check, detail)`.
pub fn fire_checked(state: &FlatState, event: &Event) -> Result<(FlatState, Vec<(String, String)>), MachineError> {
    let (next, witness) = match event {
        Event::Compose { op1, position, op2 } => {
            let (s, w) = state.compose_seq_witnessed(op1, *position, op2)?;
            (s, Some(w))
        }
        Event::New { .. } => (state.apply(event)?, None),
    };
    let mut failed = Vec::new();
    let labels = next.check_invariants();
    if !labels.is_empty() {
        let l: Vec<&str> = labels.iter().map(|i| i.label()).collect();
        failed.push(("invariants".to_string(), l.join(",")));
    }
    for v in next.check_structure() {
        failed.push((v.check.to_string(), format!("at `{}`: {}", v.operad, v.detail)));
    }
    if let Some(w) = witness {
        failed.extend(composition_laws(&next, &w));
    }
    Ok((next, failed))
}

/// Foliage size of the result is `cardfol1 + cardfol2 - 1`, and equals the
/// elementary arities of the component minus the consumed slots.
pub fn composition_laws(next: &FlatState, w: &ComposeWitness) -> Vec<(String, String)> {
    let mut failed = Vec::new();
    let size = next.foliage_of(&w.op1).map(|f| f.len()).unwrap_or(0);
    if size != w.cardfol1 + w.cardfol2 - 1 {
        failed.push((
            "foliage-size".into(),
            format!("{size} != {} + {} - 1", w.cardfol1, w.cardfol2),
        ));
    }
    let members = next.component(&w.op1);
    let arity_sum: usize = members.iter().filter_map(|m| next.arity(m)).sum();
    if arity_sum + 1 != size + members.len() {
        failed.push((
            "arity-sum".into(),
            format!(
                "arities {arity_sum} over {} operads, foliage {size}",
                members.len()
            ),
        ));
    }
    failed
}

/// The animation loop. Deterministic in `sim`.
pub fn run(sim: &SimConfig) -> Result<(SimReport, Vec<TraceLine>), SimError> {
    sim.validate()?;
    let start = Instant::now();
    let mut report = SimReport::new(sim.seed);
    let mut trace = Vec::new();
    let mut sampler = Sampler {
        rng: ChaCha8Rng::seed_from_u64(sim.seed),
        grid: Grid::for_config(&sim.config),
        weights: sim.weights,
        config: &sim.config,
    };
    let oracle = sim.oracle_check_every > 0;
    let mut state = FlatState::new(sim.config);
    let mut forest = Forest::new();
    let mut step = 0u64;

    while step < sim.max_steps {
        let mut chosen = None;
        for _ in 0..SAMPLE_TRIES {
            let Some(e) = sampler.sample(&state) else { break };
            report.attempts += 1;
            match fire_checked(&state, &e) {
                Ok(ok) => {
                    chosen = Some((e, ok));
                    break;
                }
                Err(err) => *report.guard_failures.entry(err.label()).or_default() += 1,
            }
        }
        if chosen.is_none() {
            let enabled = enabled_events(&state, &sampler.grid, sim.weights);
            if let Some(e) = enabled.choose(&mut sampler.rng) {
                report.attempts += 1;
                let ok = fire_checked(&state, e).expect("enumerated as enabled");
                chosen = Some((e.clone(), ok));
            }
        }
        let Some((event, (next, failed))) = chosen else {
            if state.is_empty() {
                report.stalled = true;
                break;
            }
            report.resets += 1;
            if report.reset_witnesses.len() < MAX_RESET_WITNESSES {
                report.reset_witnesses.push(state.dump());
            }
            state = FlatState::new(sim.config);
            forest = Forest::new();
            if sim.record_trace {
                trace.push(TraceLine::Reset);
            }
            continue;
        };

        step += 1;
        *report.fired.entry(event.name()).or_default() += 1;
        if matches!(event, Event::Compose { .. }) {
            report.law_checks += 1;
        }
        let mut failed = failed;
        if oracle {
            if let Err(e) = forest.apply(&event) {
                failed.push(("oracle".into(), format!("tree model refused: {e}")));
            }
            if step.is_multiple_of(sim.oracle_check_every) {
                report.oracle_checks += 1;
                let diff = compare(&next, &forest);
                if !diff.is_empty() {
                    failed.push(("oracle".into(), diff.join(",")));
                }
            }
        }
        for (check, detail) in failed {
            report.violation_count += 1;
            if report.violations.len() < MAX_VIOLATIONS {
                report.violations.push(Violation {
                    seed: sim.seed,
                    step,
                    event: event.to_string(),
                    check,
                    detail,
                    dump: next.dump(),
                });
            }
        }
        if sim.record_trace {
            trace.push(TraceLine::Event(event));
        }
        state = next;
    }
    report.elapsed = start.elapsed();
    Ok((report, trace))
}

/// A random accepted event sequence from the empty state with at most
/// `max_compositions` compositions, drawn with fresh names.
pub fn random_sequence(seed: u64, config: &Config, max_compositions: usize) -> Vec<Event> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = rng.gen_range(0..=max_compositions);
    let mut state = FlatState::new(*config);
    let mut events = Vec::new();
    let mut composed = 0;
    let mut fresh = 0;
    // Bounded so a refused tail cannot loop forever.
    for _ in 0..64 * (max_compositions + 1) {
        if composed == target {
            break;
        }
        let roots: Vec<&OperadId> = state.roots().collect();
        let room = state.relations().my_operads.len() < config.max_oprd();
        let e = if roots.len() < 2 || (room && rng.gen_bool(0.3)) {
            if !room {
                break;
            }
            fresh += 1;
            Event::New {
                id: OperadId::new(format!("t{fresh}")).expect("valid name"),
                inputs: rng.gen_range(1..=config.max_args()),
                outputs: 1,
            }
        } else {
            let a = rng.gen_range(0..roots.len());
            let mut b = rng.gen_range(0..roots.len() - 1);
            if b >= a {
                b += 1;
            }
            let n = state.foliage_of(roots[a]).expect("root").len();
            Event::Compose {
                op1: roots[a].clone(),
                position: Position::new(rng.gen_range(1..=n)).expect("n >= 1"),
                op2: roots[b].clone(),
            }
        };
        if let Ok(next) = state.apply(&e) {
            if matches!(e, Event::Compose { .. }) {
                composed += 1;
            }
            state = next;
            events.push(e);
        } else if matches!(e, Event::New { .. }) {
            fresh -= 1;
        }
    }
    events
}
