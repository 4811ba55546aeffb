//! The relational operad machine.
//!
//! All operads live in one [`FlatState`]: a set of names plus the relations
//! describing arities, foliage, inputs, outputs, the hat of each position and
//! the hook structure left behind by compositions. The two events,
//! [`FlatState::new_operad`] and [`FlatState::compose_seq`], are guarded pure
//! functions from one state to the next. A failed guard returns an error and
//! leaves the input untouched.
//!
//! Orientation of the hat map: an entry `(p, hat) -> root` records that
//! position `p` of the composite rooted at `root` sits directly under the
//! elementary operad `hat`.

mod compose;
pub(crate) mod dump;
mod invariants;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Config;
use crate::ids::{OperadId, Position};

pub use compose::ComposeWitness;
pub use dump::DumpError;
pub use invariants::{Invariant, StructureViolation};

/// Guard labels of the two events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Guard {
    /// `card(myOperads) < maxOprd`
    G1,
    /// `newOp ∉ myOperads`
    G3,
    /// `rr ∈ 1..maxFol`
    G4,
    /// `vv ∈ 1..maxArgs`
    G6,
    /// `card(foliage) + rr ≤ maxFol`
    G28,
    /// `op1 ≠ op2`
    Distinct,
    /// `op1 ∈ dom(inOp)`
    Rg20,
    /// `op2 ∈ dom(inOp)`
    Rg22,
    /// `op2 ∉ dom(gHookOp)`
    Rg24,
    /// `op1 ∉ dom(gHookOp)`
    Rg26,
    /// `hatopii ∈ opHookinOp1`
    Rg62,
    /// `hatopii ∈ dom(inOp)`
    Rg64,
    /// `inOp(hatopii) ≠ ∅`
    Rg70,
    /// `(ii ↦ hatopii) ∈ hatop1`
    Rg72,
}

impl Guard {
    pub fn label(self) -> &'static str {
        match self {
            Guard::G1 => "g1",
            Guard::G3 => "g3",
            Guard::G4 => "g4",
            Guard::G6 => "g6",
            Guard::G28 => "g28",
            Guard::Distinct => "distinct",
            Guard::Rg20 => "rg20",
            Guard::Rg22 => "rg22",
            Guard::Rg24 => "rg24",
            Guard::Rg26 => "rg26",
            Guard::Rg62 => "rg62",
            Guard::Rg64 => "rg64",
            Guard::Rg70 => "rg70",
            Guard::Rg72 => "rg72",
        }
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MachineError {
    #[error("guard {guard} failed: {detail}")]
    GuardFailed { guard: Guard, detail: String },
    #[error("relabelled position {position} exceeds max_fol {max_fol}")]
    OverflowFoliage { position: usize, max_fol: usize },
    #[error("unknown operad `{0}`")]
    UnknownOperad(OperadId),
    #[error("operad `{op}` is hooked in `{into}`; address its root instead")]
    HookedRoot { op: OperadId, into: OperadId },
}

impl MachineError {
    pub fn guard(&self) -> Option<Guard> {
        match self {
            MachineError::GuardFailed { guard, .. } => Some(*guard),
            _ => None,
        }
    }

    /// Short label for reports: the guard label, or the error kind.
    pub fn label(&self) -> &'static str {
        match self {
            MachineError::GuardFailed { guard, .. } => guard.label(),
            MachineError::OverflowFoliage { .. } => "overflow",
            MachineError::UnknownOperad(_) => "unknown",
            MachineError::HookedRoot { .. } => "hooked",
        }
    }
}

fn guard(guard: Guard, detail: impl Into<String>) -> MachineError {
    MachineError::GuardFailed {
        guard,
        detail: detail.into(),
    }
}

/// The raw relations of a state. Public so tests, dump parsing and tools
/// can build arbitrary (possibly inconsistent) states for the checker.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Relations {
    pub my_operads: BTreeSet<OperadId>,
    pub arity_op: BTreeMap<OperadId, usize>,
    pub foliage: BTreeSet<(Position, OperadId)>,
    pub out_op: BTreeMap<OperadId, BTreeSet<Position>>,
    pub in_op: BTreeMap<OperadId, BTreeSet<Position>>,
    /// `(position, hat operad) -> root`
    pub g_hat_op: BTreeMap<(Position, OperadId), OperadId>,
    /// direct parent
    pub hook_op: BTreeMap<OperadId, OperadId>,
    /// root of the composite a hooked operad belongs to
    pub g_hook_op: BTreeMap<OperadId, OperadId>,
}

/// One machine event; also the unit of trace files.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    New {
        id: OperadId,
        inputs: usize,
        outputs: usize,
    },
    Compose {
        op1: OperadId,
        position: Position,
        op2: OperadId,
    },
}

impl Event {
    pub fn name(&self) -> &'static str {
        match self {
            Event::New { .. } => "newOperad",
            Event::Compose { .. } => "composeSeq",
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::New {
                id,
                inputs,
                outputs,
            } => write!(f, "new {id} {inputs} {outputs}"),
            Event::Compose { op1, position, op2 } => write!(f, "compose {op1} {position} {op2}"),
        }
    }
}

/// Machine state: immutable value, events return a fresh state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FlatState {
    config: Config,
    rel: Relations,
}

impl FlatState {
    pub fn new(config: Config) -> Self {
        FlatState {
            config,
            rel: Relations::default(),
        }
    }

    /// Wrap raw relations without any checking.
    pub fn from_relations(config: Config, rel: Relations) -> Self {
        FlatState { config, rel }
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn relations(&self) -> &Relations {
        &self.rel
    }

    pub fn into_relations(self) -> Relations {
        self.rel
    }

    pub fn is_empty(&self) -> bool {
        self.rel.my_operads.is_empty()
    }

    pub fn contains(&self, op: &OperadId) -> bool {
        self.rel.my_operads.contains(op)
    }

    pub fn in_op(&self, op: &OperadId) -> Option<&BTreeSet<Position>> {
        self.rel.in_op.get(op)
    }

    pub fn arity(&self, op: &OperadId) -> Option<usize> {
        self.rel.arity_op.get(op).copied()
    }

    pub fn hook(&self, op: &OperadId) -> Option<&OperadId> {
        self.rel.hook_op.get(op)
    }

    pub fn global_hook(&self, op: &OperadId) -> Option<&OperadId> {
        self.rel.g_hook_op.get(op)
    }

    /// Operads not hooked anywhere, in name order.
    pub fn roots(&self) -> impl Iterator<Item = &OperadId> + '_ {
        self.rel
            .my_operads
            .iter()
            .filter(|op| !self.rel.g_hook_op.contains_key(*op))
    }

    /// `{root} ∪ dom(gHookOp ▷ {root})`
    pub fn component(&self, root: &OperadId) -> BTreeSet<OperadId> {
        let mut members: BTreeSet<OperadId> = self
            .rel
            .g_hook_op
            .iter()
            .filter(|(_, r)| *r == root)
            .map(|(op, _)| op.clone())
            .collect();
        members.insert(root.clone());
        members
    }

    /// `dom(foliage ▷ {op})`, with no check that `op` is a root.
    pub(crate) fn foliage_positions(&self, op: &OperadId) -> BTreeSet<Position> {
        self.rel
            .foliage
            .iter()
            .filter(|(_, o)| o == op)
            .map(|(p, _)| *p)
            .collect()
    }

    /// Foliage of an unhooked operad.
    pub fn foliage_of(&self, root: &OperadId) -> Result<BTreeSet<Position>, MachineError> {
        if !self.contains(root) {
            return Err(MachineError::UnknownOperad(root.clone()));
        }
        if let Some(into) = self.rel.g_hook_op.get(root) {
            return Err(MachineError::HookedRoot {
                op: root.clone(),
                into: into.clone(),
            });
        }
        Ok(self.foliage_positions(root))
    }

    /// The elementary operad directly holding position `p` of `root`'s
    /// foliage.
    pub fn hat_of(&self, root: &OperadId, p: Position) -> Option<&OperadId> {
        self.rel
            .g_hat_op
            .range((p, OperadId::min_value())..)
            .take_while(|((q, _), _)| *q == p)
            .find(|(_, r)| *r == root)
            .map(|((_, hat), _)| hat)
    }

    /// Build an elementary operad `id` with `rr` inputs. `vv` is accepted
    /// and bounded but the stored output is always `{1}`.
    pub fn new_operad(&self, id: &OperadId, rr: usize, vv: usize) -> Result<FlatState, MachineError> {
        let c = &self.config;
        if self.rel.my_operads.len() >= c.max_oprd() {
            return Err(guard(
                Guard::G1,
                format!("already {} operads (max_oprd = {})", self.rel.my_operads.len(), c.max_oprd()),
            ));
        }
        if self.contains(id) {
            return Err(guard(Guard::G3, format!("`{id}` already exists")));
        }
        if rr == 0 || rr > c.max_fol() {
            return Err(guard(Guard::G4, format!("rr = {rr} outside 1..={}", c.max_fol())));
        }
        if vv == 0 || vv > c.max_args() {
            return Err(guard(Guard::G6, format!("vv = {vv} outside 1..={}", c.max_args())));
        }
        if self.rel.foliage.len() + rr > c.max_fol() {
            return Err(guard(
                Guard::G28,
                format!(
                    "foliage {} + {rr} exceeds max_fol = {}",
                    self.rel.foliage.len(),
                    c.max_fol()
                ),
            ));
        }

        let seq: BTreeSet<Position> = c.seq_n(rr).expect("rr checked by g4");
        let mut rel = self.rel.clone();
        rel.my_operads.insert(id.clone());
        rel.out_op.insert(id.clone(), [Position::ONE].into());
        rel.arity_op.insert(id.clone(), rr);
        rel.foliage.extend(seq.iter().map(|p| (*p, id.clone())));
        rel.in_op.insert(id.clone(), seq.clone());
        rel.g_hat_op
            .extend(seq.iter().map(|p| ((*p, id.clone()), id.clone())));
        Ok(FlatState {
            config: self.config,
            rel,
        })
    }

    /// Graft `op2` at position `ii` of `op1`'s foliage.
    pub fn compose_seq(&self, op1: &OperadId, ii: Position, op2: &OperadId) -> Result<FlatState, MachineError> {
        self.compose_seq_witnessed(op1, ii, op2).map(|(s, _)| s)
    }

    /// As [`compose_seq`](Self::compose_seq), also returning the evaluated
    /// guard variables.
    pub fn compose_seq_witnessed(
        &self,
        op1: &OperadId,
        ii: Position,
        op2: &OperadId,
    ) -> Result<(FlatState, ComposeWitness), MachineError> {
        let witness = self.compose_witness(op1, ii, op2)?;
        let next = self.apply_compose(&witness);
        Ok((next, witness))
    }

    pub fn apply(&self, event: &Event) -> Result<FlatState, MachineError> {
        match event {
            Event::New {
                id,
                inputs,
                outputs,
            } => self.new_operad(id, *inputs, *outputs),
            Event::Compose { op1, position, op2 } => self.compose_seq(op1, *position, op2),
        }
    }
}

/// Arity of `f ∘_i g` for `f` of arity `n ≥ 1` and `g` of arity `m`.
pub fn result_arity(n: usize, m: usize) -> usize {
    assert!(n >= 1, "the outer operad must have an input to graft into");
    n + m - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_config;
    use crate::ids::{id, pos};

    fn set(ps: &[usize]) -> BTreeSet<Position> {
        ps.iter().map(|&p| pos(p)).collect()
    }

    fn fresh() -> FlatState {
        FlatState::new(default_config())
    }

    fn nested_graft() -> FlatState {
        fresh()
            .new_operad(&id("f"), 4, 1)
            .and_then(|s| s.new_operad(&id("g"), 3, 1))
            .and_then(|s| s.new_operad(&id("h"), 3, 1))
            .and_then(|s| s.compose_seq(&id("f"), pos(2), &id("g")))
            .and_then(|s| s.compose_seq(&id("f"), pos(4), &id("h")))
            .unwrap()
    }

    #[test]
    fn new_operad_builds_elementary() {
        let s = fresh().new_operad(&id("f"), 4, 1).unwrap();
        let f = id("f");
        assert_eq!(s.in_op(&f), Some(&set(&[1, 2, 3, 4])));
        assert_eq!(s.arity(&f), Some(4));
        assert_eq!(s.relations().out_op[&f], set(&[1]));
        let fol: BTreeSet<_> = (1..=4).map(|k| (pos(k), f.clone())).collect();
        assert_eq!(s.relations().foliage, fol);
        for k in 1..=4 {
            assert_eq!(s.hat_of(&f, pos(k)), Some(&f));
        }
        assert!(s.check_invariants().is_empty());
    }

    #[test]
    fn new_operad_minimal_arity() {
        let s = fresh().new_operad(&id("g"), 1, 1).unwrap();
        assert_eq!(s.in_op(&id("g")), Some(&set(&[1])));
    }

    #[test]
    fn output_is_always_one() {
        let s = fresh().new_operad(&id("f"), 2, 5).unwrap();
        assert_eq!(s.relations().out_op[&id("f")], set(&[1]));
    }

    #[test]
    fn new_operad_guards() {
        let c = Config::new(2, 1, 2, 4).unwrap();
        let s = FlatState::new(c)
            .new_operad(&id("a"), 1, 1)
            .and_then(|s| s.new_operad(&id("b"), 1, 1))
            .unwrap();
        let full = s.new_operad(&id("c"), 1, 1).unwrap_err();
        assert_eq!(full.guard(), Some(Guard::G1));

        let one = FlatState::new(c).new_operad(&id("a"), 3, 1).unwrap();
        let g = |r: Result<FlatState, MachineError>| r.unwrap_err().guard();
        assert_eq!(g(one.new_operad(&id("a"), 1, 1)), Some(Guard::G3));
        assert_eq!(g(one.new_operad(&id("b"), 0, 1)), Some(Guard::G4));
        assert_eq!(g(one.new_operad(&id("b"), 5, 1)), Some(Guard::G4));
        assert_eq!(g(one.new_operad(&id("b"), 1, 0)), Some(Guard::G6));
        assert_eq!(g(one.new_operad(&id("b"), 1, 3)), Some(Guard::G6));
        assert_eq!(g(one.new_operad(&id("b"), 2, 1)), Some(Guard::G28));
    }

    #[test]
    fn single_graft_composition() {
        let (f, g) = (id("f"), id("g"));
        let s = fresh()
            .new_operad(&f, 4, 1)
            .and_then(|s| s.new_operad(&g, 2, 1))
            .and_then(|s| s.compose_seq(&f, pos(2), &g))
            .unwrap();
        assert_eq!(s.foliage_of(&f).unwrap(), set(&[1, 2, 3, 4, 5]));
        assert_eq!(s.in_op(&f), Some(&set(&[1, 4, 5])));
        assert_eq!(s.in_op(&g), Some(&set(&[2, 3])));
        assert_eq!(s.hook(&g), Some(&f));
        assert_eq!(s.global_hook(&g), Some(&f));
        assert!(!s.relations().out_op.contains_key(&g));
        assert!(s.check_invariants().is_empty());
    }

    #[test]
    fn parallel_graft_composition() {
        let (f, g) = (id("f"), id("g"));
        let s = fresh()
            .new_operad(&f, 4, 1)
            .and_then(|s| s.new_operad(&g, 3, 1))
            .and_then(|s| s.compose_seq(&f, pos(2), &g))
            .unwrap();
        assert_eq!(s.foliage_of(&f).unwrap(), set(&[1, 2, 3, 4, 5, 6]));
        assert_eq!(s.in_op(&f), Some(&set(&[1, 5, 6])));
        assert_eq!(s.in_op(&g), Some(&set(&[2, 3, 4])));
    }

    #[test]
    fn nested_graft_composition() {
        let s = nested_graft();
        let (f, g, h) = (id("f"), id("g"), id("h"));
        assert_eq!(s.foliage_of(&f).unwrap(), (1..=8).map(pos).collect());
        assert_eq!(s.in_op(&f), Some(&set(&[1, 7, 8])));
        assert_eq!(s.in_op(&g), Some(&set(&[2, 3])));
        assert_eq!(s.in_op(&h), Some(&set(&[4, 5, 6])));
        assert_eq!(s.hook(&h), Some(&g));
        assert_eq!(s.hook(&g), Some(&f));
        assert_eq!(s.global_hook(&h), Some(&f));
        assert_eq!(s.hat_of(&f, pos(3)), Some(&g));
        assert_eq!(s.hat_of(&f, pos(5)), Some(&h));
        assert_eq!(s.arity(&f), Some(4));
        assert_eq!(s.arity(&g), Some(3));
        assert!(s.check_invariants().is_empty());
        assert!(s.check_structure().is_empty());
    }

    #[test]
    fn composing_at_five_lands_in_f() {
        // ((f o_2 g) o_5 h): position 5 belongs to f, not g.
        let (f, g, h) = (id("f"), id("g"), id("h"));
        let s = fresh()
            .new_operad(&f, 4, 1)
            .and_then(|s| s.new_operad(&g, 3, 1))
            .and_then(|s| s.new_operad(&h, 3, 1))
            .and_then(|s| s.compose_seq(&f, pos(2), &g))
            .unwrap();
        let (s, w) = s.compose_seq_witnessed(&f, pos(5), &h).unwrap();
        assert_eq!(w.hat_op_ii, f);
        assert_eq!(s.hook(&h), Some(&f));
        assert_eq!(s.in_op(&f), Some(&set(&[1, 8])));
        assert_eq!(s.in_op(&g), Some(&set(&[2, 3, 4])));
        assert_eq!(s.in_op(&h), Some(&set(&[5, 6, 7])));
        assert!(s.check_invariants().is_empty());
    }

    #[test]
    fn compose_guards() {
        let (f, g, h) = (id("f"), id("g"), id("h"));
        let base = fresh()
            .new_operad(&f, 4, 1)
            .and_then(|s| s.new_operad(&g, 2, 1))
            .and_then(|s| s.new_operad(&h, 2, 1))
            .unwrap();
        let composed = base.compose_seq(&f, pos(2), &g).unwrap();
        let g_of = |r: Result<FlatState, MachineError>| r.unwrap_err().guard();

        assert_eq!(g_of(composed.compose_seq(&h, pos(1), &g)), Some(Guard::Rg24));
        assert_eq!(g_of(composed.compose_seq(&g, pos(1), &h)), Some(Guard::Rg26));
        assert_eq!(g_of(base.compose_seq(&f, pos(1), &f)), Some(Guard::Distinct));
        assert_eq!(g_of(base.compose_seq(&id("zz"), pos(1), &f)), Some(Guard::Rg20));
        assert_eq!(g_of(base.compose_seq(&f, pos(1), &id("zz"))), Some(Guard::Rg22));
        assert_eq!(g_of(base.compose_seq(&f, pos(5), &g)), Some(Guard::Rg72));
        assert_eq!(g_of(composed.compose_seq(&f, pos(6), &h)), Some(Guard::Rg72));
    }

    #[test]
    fn failed_event_leaves_state_untouched() {
        let s = nested_graft();
        let before = s.clone();
        assert!(s.compose_seq(&id("f"), pos(9), &id("g")).is_err());
        assert!(s.new_operad(&id("f"), 1, 1).is_err());
        assert_eq!(s, before);
    }

    #[test]
    fn result_arity_examples() {
        assert_eq!(result_arity(4, 2), 5);
        assert_eq!(result_arity(7, 1), 7);
        assert_eq!(result_arity(6, 3), 8);
        assert_eq!(result_arity(3, 0), 2);
    }

    #[test]
    fn foliage_of_errors() {
        let s = nested_graft();
        assert!(matches!(s.foliage_of(&id("q")), Err(MachineError::UnknownOperad(_))));
        assert!(matches!(s.foliage_of(&id("g")), Err(MachineError::HookedRoot { .. })));
        let fresh_f = fresh().new_operad(&id("f"), 4, 1).unwrap();
        assert_eq!(fresh_f.foliage_of(&id("f")).unwrap(), set(&[1, 2, 3, 4]));
    }

    #[test]
    fn arity_one_chain() {
        let (f, g) = (id("f"), id("g"));
        let s = fresh()
            .new_operad(&f, 1, 1)
            .and_then(|s| s.new_operad(&g, 1, 1))
            .and_then(|s| s.compose_seq(&f, pos(1), &g))
            .unwrap();
        assert_eq!(s.in_op(&f), Some(&BTreeSet::new()));
        assert_eq!(s.in_op(&g), Some(&set(&[1])));
        assert_eq!(s.foliage_of(&f).unwrap(), set(&[1]));
        assert!(s.check_invariants().is_empty());
    }

    #[test]
    fn grafting_into_inner_after_outer_exhausted() {
        // f(1) <- g(2): f has no inputs left, g holds both positions.
        let (f, g, h) = (id("f"), id("g"), id("h"));
        let s = fresh()
            .new_operad(&f, 1, 1)
            .and_then(|s| s.new_operad(&g, 2, 1))
            .and_then(|s| s.new_operad(&h, 2, 1))
            .and_then(|s| s.compose_seq(&f, pos(1), &g))
            .and_then(|s| s.compose_seq(&f, pos(2), &h))
            .unwrap();
        assert_eq!(s.in_op(&g), Some(&set(&[1])));
        assert_eq!(s.in_op(&h), Some(&set(&[2, 3])));
        assert_eq!(s.hook(&h), Some(&g));
        assert!(s.check_invariants().is_empty());
        assert!(s.check_structure().is_empty());
    }

    #[test]
    fn composing_two_composites() {
        let names = ["a", "b", "c", "d"].map(id);
        let mut s = fresh();
        for n in &names {
            s = s.new_operad(n, 2, 1).unwrap();
        }
        let s = s
            .compose_seq(&names[0], pos(1), &names[1])
            .and_then(|s| s.compose_seq(&names[2], pos(2), &names[3]))
            .and_then(|s| s.compose_seq(&names[0], pos(2), &names[2]))
            .unwrap();
        // a(b(1, c(2, d(3, 4))), 5)
        assert_eq!(s.foliage_of(&names[0]).unwrap().len(), 5);
        assert_eq!(s.global_hook(&names[3]), Some(&names[0]));
        assert_eq!(s.hook(&names[3]), Some(&names[2]));
        assert_eq!(s.hook(&names[2]), Some(&names[1]));
        assert_eq!(s.in_op(&names[1]), Some(&set(&[1])));
        assert_eq!(s.in_op(&names[2]), Some(&set(&[2])));
        assert_eq!(s.in_op(&names[3]), Some(&set(&[3, 4])));
        assert_eq!(s.in_op(&names[0]), Some(&set(&[5])));
        assert!(s.check_invariants().is_empty());
        assert!(s.check_structure().is_empty());
    }
}
