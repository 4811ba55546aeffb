//! Decorated inputs: each input position of each operad carries a symbol of
//! a finite alphabet, injectively per operad, and the decorated positions of
//! an operad are exactly its inputs.
//!
//! Decorations travel with their positions through composition. The symbol
//! on the consumed position is dropped, and so is the output symbol of the
//! grafted operad, whose output disappears.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::Config;
use crate::flat_machine::dump::{apply_entry, parse_arrow, parse_id, parse_pos, parse_sections, SECTIONS};
use crate::flat_machine::{ComposeWitness, DumpError, Event, FlatState, MachineError, Relations};
use crate::ids::{OperadId, Position};
use crate::simulator::{self, SimConfig, TraceLine};

pub type Symbol = String;

/// Position ↦ symbol for one operad.
pub type Decor = BTreeMap<Position, Symbol>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecorError {
    #[error(transparent)]
    Base(#[from] MachineError),
    #[error("alphabet has {size} symbols, fewer than max_args = {max_args}")]
    AlphabetTooSmall { size: usize, max_args: usize },
    #[error("symbol `{0}` listed twice in the alphabet")]
    DuplicateSymbol(Symbol),
    #[error("`{0}` is not a valid symbol")]
    BadSymbol(Symbol),
    #[error("symbol `{0}` is not in the alphabet")]
    UnknownSymbol(Symbol),
    #[error("symbol `{symbol}` decorates more than one input of `{op}`")]
    NotInjective { op: OperadId, symbol: Symbol },
    #[error("decorated positions of `{op}` are {got:?}, inputs are 1..={arity}")]
    Gluing {
        op: OperadId,
        arity: usize,
        got: Vec<usize>,
    },
    #[error("decorated arity {arity} of `{op}` exceeds max_args = {max_args}")]
    ArityAboveMaxArgs {
        op: OperadId,
        arity: usize,
        max_args: usize,
    },
}

impl DecorError {
    pub fn label(&self) -> &'static str {
        match self {
            DecorError::Base(e) => e.label(),
            DecorError::AlphabetTooSmall { .. } | DecorError::DuplicateSymbol(_) | DecorError::BadSymbol(_) => {
                "alphabet"
            }
            DecorError::UnknownSymbol(_) => "symbol",
            DecorError::NotInjective { .. } => "injective",
            DecorError::Gluing { .. } => "gluing",
            DecorError::ArityAboveMaxArgs { .. } => "max_args",
        }
    }
}

fn valid_symbol(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// `a` … `z`
pub fn default_alphabet() -> Vec<Symbol> {
    ('a'..='z').map(String::from).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecoratedState {
    base: FlatState,
    alphabet: Vec<Symbol>,
    in_op_x: BTreeMap<OperadId, Decor>,
    out_op_x: BTreeMap<OperadId, Symbol>,
}

impl DecoratedState {
    pub fn new(config: Config, alphabet: Vec<Symbol>) -> Result<Self, DecorError> {
        let mut seen = BTreeSet::new();
        for s in &alphabet {
            if !valid_symbol(s) {
                return Err(DecorError::BadSymbol(s.clone()));
            }
            if !seen.insert(s) {
                return Err(DecorError::DuplicateSymbol(s.clone()));
            }
        }
        if alphabet.len() < config.max_args() {
            return Err(DecorError::AlphabetTooSmall {
                size: alphabet.len(),
                max_args: config.max_args(),
            });
        }
        Ok(DecoratedState {
            base: FlatState::new(config),
            alphabet,
            in_op_x: BTreeMap::new(),
            out_op_x: BTreeMap::new(),
        })
    }

    pub fn base(&self) -> &FlatState {
        &self.base
    }

    pub fn alphabet(&self) -> &[Symbol] {
        &self.alphabet
    }

    pub fn in_op_x(&self, op: &OperadId) -> Option<&Decor> {
        self.in_op_x.get(op)
    }

    pub fn out_op_x(&self, op: &OperadId) -> Option<&Symbol> {
        self.out_op_x.get(op)
    }

    /// Forget the decorations.
    pub fn erase(&self) -> FlatState {
        self.base.clone()
    }

    /// The output symbol given to new operads.
    pub fn default_symbol(&self) -> &Symbol {
        &self.alphabet[0]
    }

    pub fn new_operad_x(&self, id: &OperadId, rr: usize, vv: usize, decor: Decor) -> Result<Self, DecorError> {
        let base = self.base.new_operad(id, rr, vv)?;
        let max_args = self.base.config().max_args();
        if rr > max_args {
            return Err(DecorError::ArityAboveMaxArgs {
                op: id.clone(),
                arity: rr,
                max_args,
            });
        }
        let keys: Vec<usize> = decor.keys().map(|p| p.get()).collect();
        if keys != (1..=rr).collect::<Vec<_>>() {
            return Err(DecorError::Gluing {
                op: id.clone(),
                arity: rr,
                got: keys,
            });
        }
        let mut seen = BTreeSet::new();
        for s in decor.values() {
            if !self.alphabet.contains(s) {
                return Err(DecorError::UnknownSymbol(s.clone()));
            }
            if !seen.insert(s) {
                return Err(DecorError::NotInjective {
                    op: id.clone(),
                    symbol: s.clone(),
                });
            }
        }
        let mut next = self.clone();
        next.base = base;
        next.out_op_x.insert(id.clone(), self.default_symbol().clone());
        next.in_op_x.insert(id.clone(), decor);
        Ok(next)
    }

    pub fn compose_seq_x(&self, op1: &OperadId, ii: Position, op2: &OperadId) -> Result<Self, DecorError> {
        let (base, w) = self.base.compose_seq_witnessed(op1, ii, op2)?;
        let mut next = self.clone();
        next.base = base;
        next.transport(&w);
        Ok(next)
    }

    fn transport(&mut self, w: &ComposeWitness) {
        let high = w.cardfol2 - 1;
        let low = w.ii.get() - 1;
        for op in &w.hooked_in_op1 {
            if let Some(d) = self.in_op_x.get_mut(op) {
                *d = std::mem::take(d)
                    .into_iter()
                    .filter(|(p, _)| *p != w.ii)
                    .map(|(p, s)| (if p > w.ii { p.shifted(high) } else { p }, s))
                    .collect();
            }
        }
        for op in &w.hooked_in_op2 {
            if let Some(d) = self.in_op_x.get_mut(op) {
                *d = std::mem::take(d)
                    .into_iter()
                    .map(|(p, s)| (p.shifted(low), s))
                    .collect();
            }
        }
        self.out_op_x.remove(&w.op2);
    }

    pub fn apply(&self, event: &Event, decor: Decor) -> Result<Self, DecorError> {
        match event {
            Event::New { id, inputs, outputs } => self.new_operad_x(id, *inputs, *outputs, decor),
            Event::Compose { op1, position, op2 } => self.compose_seq_x(op1, *position, op2),
        }
    }

    /// Operads where the inputs differ from the decorated positions.
    pub fn check_gluing(&self) -> Vec<OperadId> {
        let empty = BTreeSet::new();
        let ops: BTreeSet<&OperadId> = self
            .base
            .relations()
            .in_op
            .keys()
            .chain(self.in_op_x.keys())
            .collect();
        ops.into_iter()
            .filter(|op| {
                let inputs = self.base.in_op(op).unwrap_or(&empty);
                let decorated: BTreeSet<Position> = self
                    .in_op_x
                    .get(*op)
                    .map(|d| d.keys().copied().collect())
                    .unwrap_or_default();
                *inputs != decorated
            })
            .cloned()
            .collect()
    }

    /// Operads with a symbol repeated among their inputs.
    pub fn check_injective(&self) -> Vec<OperadId> {
        self.in_op_x
            .iter()
            .filter(|(_, d)| d.values().collect::<BTreeSet<_>>().len() != d.len())
            .map(|(op, _)| op.clone())
            .collect()
    }

    /// Base dump followed by `[inx]` and `[outx]`.
    pub fn dump(&self) -> String {
        let mut s = self.base.dump();
        s.push_str("[inx]\n");
        for (op, d) in &self.in_op_x {
            let items: Vec<String> = d.iter().map(|(p, x)| format!("{p}:{x}")).collect();
            let _ = writeln!(s, "inx: {op}->{{{}}}", items.join(","));
        }
        s.push_str("[outx]\n");
        for (op, x) in &self.out_op_x {
            let _ = writeln!(s, "outx: {op}->{x}");
        }
        s
    }

    pub fn parse_dump(text: &str, config: Config, alphabet: Vec<Symbol>) -> Result<Self, DumpError> {
        let mut known: Vec<(&str, &str)> = SECTIONS.to_vec();
        known.extend([("inx", "inx"), ("outx", "outx")]);
        let mut state = DecoratedState::new(config, alphabet).map_err(|e| DumpError::Syntax {
            line: 0,
            msg: e.to_string(),
        })?;
        let mut rel = Relations::default();
        let bad = |line: usize, msg: String| DumpError::Syntax { line, msg };
        parse_sections(text, &known, |section, body, line| {
            match section {
                "inx" => {
                    let (op, set) = parse_arrow(body, line)?;
                    let inner = set
                        .strip_prefix('{')
                        .and_then(|t| t.strip_suffix('}'))
                        .ok_or_else(|| bad(line, format!("expected `{{p:x,...}}`, got `{set}`")))?;
                    let mut d = Decor::new();
                    for item in inner.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                        let (p, x) = item
                            .split_once(':')
                            .ok_or_else(|| bad(line, format!("expected `p:x`, got `{item}`")))?;
                        d.insert(parse_pos(p, line)?, x.trim().to_string());
                    }
                    state.in_op_x.insert(parse_id(op, line)?, d);
                }
                "outx" => {
                    let (op, x) = parse_arrow(body, line)?;
                    state.out_op_x.insert(parse_id(op, line)?, x.to_string());
                }
                base => apply_entry(&mut rel, base, body, line)?,
            }
            Ok(None::<()>)
        })?;
        state.base = FlatState::from_relations(config, rel);
        Ok(state)
    }
}

/// Outcome of one decorated run checked against its base run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RefinementReport {
    pub events: u64,
    /// `(step, operads)` where gluing failed
    pub gluing_failures: Vec<(u64, Vec<OperadId>)>,
    pub injectivity_failures: Vec<(u64, Vec<OperadId>)>,
    /// steps where erasure differed from the base state
    pub erasure_mismatches: Vec<u64>,
    /// steps where the decorated machine refused an event the base accepted
    pub refusals: Vec<(u64, String)>,
}

impl RefinementReport {
    pub fn ok(&self) -> bool {
        self.gluing_failures.is_empty()
            && self.injectivity_failures.is_empty()
            && self.erasure_mismatches.is_empty()
            && self.refusals.is_empty()
    }
}

/// Random injective decoration of `1..=rr`.
pub fn random_decor(rng: &mut ChaCha8Rng, alphabet: &[Symbol], rr: usize) -> Decor {
    let picked: Vec<&Symbol> = alphabet.choose_multiple(rng, rr).collect();
    picked
        .into_iter()
        .enumerate()
        .map(|(k, s)| (Position::new(k + 1).expect("k + 1 >= 1"), s.clone()))
        .collect()
}

/// Drive the base machine with the simulator for `steps` events, replay the
/// trace on the decorated machine with random decorations, and compare after
/// every event.
pub fn refinement_run(seed: u64, config: Config, alphabet: &[Symbol], steps: u64) -> RefinementReport {
    let sim = SimConfig {
        record_trace: true,
        ..SimConfig::new(seed, steps, config)
    };
    let (_, trace) = simulator::run(&sim).expect("valid simulation config");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_dec0);
    let fresh = || DecoratedState::new(config, alphabet.to_vec()).expect("alphabet covers max_args");
    let mut base = FlatState::new(config);
    let mut deco = fresh();
    let mut report = RefinementReport::default();
    for line in &trace {
        let event = match line {
            TraceLine::Reset => {
                base = FlatState::new(config);
                deco = fresh();
                continue;
            }
            TraceLine::Event(e) => e,
        };
        report.events += 1;
        let step = report.events;
        base = base.apply(event).expect("trace was accepted by the base machine");
        let decor = match event {
            Event::New { inputs, .. } => random_decor(&mut rng, alphabet, *inputs),
            Event::Compose { .. } => Decor::new(),
        };
        match deco.apply(event, decor) {
            Ok(next) => deco = next,
            Err(e) => {
                report.refusals.push((step, e.to_string()));
                break;
            }
        }
        let glue = deco.check_gluing();
        if !glue.is_empty() {
            report.gluing_failures.push((step, glue));
        }
        let inj = deco.check_injective();
        if !inj.is_empty() {
            report.injectivity_failures.push((step, inj));
        }
        if deco.erase() != base {
            report.erasure_mismatches.push(step);
        }
    }
    report
}
