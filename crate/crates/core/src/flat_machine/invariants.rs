//! Machine invariants.
//!
//! [`FlatState::check_invariants`] evaluates the typing invariants and the
//! three consistency properties literally, antecedents included.
//! [`FlatState::check_structure`] checks the constructive restatements
//! (contiguity, disjoint union, hat totality, hook roots) that the literal
//! forms only imply on reachable states.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::FlatState;
use crate::ids::{OperadId, Position};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Invariant {
    Inv10,
    Inv30,
    Inv40,
    Inv60,
    Invr10,
    Invr20,
    Invr30,
    Invr34,
    Invr40,
    Invr50,
    Sp1,
    Sp2,
    Sp3,
}

impl Invariant {
    pub const ALL: [Invariant; 13] = [
        Invariant::Inv10,
        Invariant::Inv30,
        Invariant::Inv40,
        Invariant::Inv60,
        Invariant::Invr10,
        Invariant::Invr20,
        Invariant::Invr30,
        Invariant::Invr34,
        Invariant::Invr40,
        Invariant::Invr50,
        Invariant::Sp1,
        Invariant::Sp2,
        Invariant::Sp3,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Invariant::Inv10 => "inv10",
            Invariant::Inv30 => "inv30",
            Invariant::Inv40 => "inv40",
            Invariant::Inv60 => "inv60",
            Invariant::Invr10 => "invr10",
            Invariant::Invr20 => "invr20",
            Invariant::Invr30 => "invr30",
            Invariant::Invr34 => "invr34",
            Invariant::Invr40 => "invr40",
            Invariant::Invr50 => "invr50",
            Invariant::Sp1 => "SP1",
            Invariant::Sp2 => "SP2",
            Invariant::Sp3 => "SP3",
        }
    }
}

impl fmt::Display for Invariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A failed constructive check, with the root or operad it concerns.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StructureViolation {
    pub check: &'static str,
    pub operad: OperadId,
    pub detail: String,
}

impl fmt::Display for StructureViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at `{}`: {}", self.check, self.operad, self.detail)
    }
}

impl FlatState {
    /// Every violated invariant label, in declaration order. Empty on a
    /// consistent state.
    pub fn check_invariants(&self) -> Vec<Invariant> {
        Invariant::ALL
            .into_iter()
            .filter(|inv| !self.holds(*inv))
            .collect()
    }

    fn holds(&self, inv: Invariant) -> bool {
        let r = &self.rel;
        let c = &self.config;
        let known = |op: &OperadId| r.my_operads.contains(op);
        let in_fol = |p: &Position| p.get() >= 1 && p.get() <= c.max_fol();
        match inv {
            Invariant::Inv10 => r.my_operads.len() <= c.max_oprd(),
            Invariant::Inv30 => r
                .arity_op
                .iter()
                .all(|(op, a)| known(op) && *a >= 1 && *a <= c.max_fol()),
            Invariant::Inv40 => r.foliage.iter().all(|(p, op)| in_fol(p) && known(op)),
            Invariant::Inv60 => r
                .out_op
                .iter()
                .all(|(op, outs)| known(op) && outs.iter().all(|p| p.get() <= c.max_args())),
            Invariant::Invr10 => r
                .in_op
                .iter()
                .all(|(op, ins)| known(op) && ins.iter().all(in_fol)),
            Invariant::Invr20 => r
                .g_hat_op
                .iter()
                .all(|((p, hat), root)| in_fol(p) && known(hat) && known(root)),
            Invariant::Invr30 => r.hook_op.iter().all(|(a, b)| known(a) && known(b)),
            Invariant::Invr34 => r.hook_op.keys().all(|op| !r.out_op.contains_key(op)),
            Invariant::Invr40 => r.g_hook_op.iter().all(|(a, b)| known(a) && known(b)),
            Invariant::Invr50 => {
                r.my_operads.is_empty()
                    || r.my_operads.iter().all(|op| {
                        match (r.arity_op.get(op), r.in_op.get(op)) {
                            (Some(a), Some(ins)) => ins.len() <= *a,
                            _ => true,
                        }
                    })
            }
            Invariant::Sp1 => self.sp1(),
            Invariant::Sp2 => self.sp2(),
            Invariant::Sp3 => self.sp3(),
        }
    }

    fn ran_foliage(&self) -> BTreeSet<&OperadId> {
        self.rel.foliage.iter().map(|(_, op)| op).collect()
    }

    fn sp1(&self) -> bool {
        let r = &self.rel;
        if r.my_operads.is_empty() || r.g_hook_op.is_empty() || r.g_hat_op.is_empty() {
            return true;
        }
        let ran_hat: BTreeSet<&OperadId> = r.g_hat_op.values().collect();
        let ran_hook: BTreeSet<&OperadId> = r.g_hook_op.values().collect();
        let ran_fol = self.ran_foliage();
        r.my_operads
            .iter()
            .filter(|op| {
                ran_hat.contains(op)
                    && r.in_op.contains_key(*op)
                    && !r.g_hook_op.contains_key(*op)
                    && ran_hook.contains(op)
                    && ran_fol.contains(op)
            })
            .all(|op| {
                let mut hatted: BTreeSet<Position> = r
                    .g_hat_op
                    .iter()
                    .filter(|(_, root)| *root == op)
                    .map(|((p, _), _)| *p)
                    .collect();
                hatted.extend(r.in_op[op].iter().copied());
                hatted == self.foliage_positions(op)
            })
    }

    fn sp2(&self) -> bool {
        let r = &self.rel;
        if r.my_operads.is_empty() || r.foliage.is_empty() || r.g_hook_op.is_empty() {
            return true;
        }
        let ran_hook: BTreeSet<&OperadId> = r.g_hook_op.values().collect();
        let ran_fol = self.ran_foliage();
        let max_fol = self.config.max_fol();
        r.my_operads
            .iter()
            .filter(|op| ran_fol.contains(op) && ran_hook.contains(op) && r.in_op.contains_key(*op))
            .all(|op| {
                let mut union: BTreeSet<Position> = r.in_op[op].clone();
                for (oo, _) in r.g_hook_op.iter().filter(|(_, root)| *root == op) {
                    if !r.my_operads.contains(oo) {
                        continue;
                    }
                    if let Some(ins) = r.in_op.get(oo) {
                        if ins.iter().all(|p| p.get() <= max_fol) {
                            union.extend(ins.iter().copied());
                        }
                    }
                }
                union == self.foliage_positions(op)
            })
    }

    fn sp3(&self) -> bool {
        let r = &self.rel;
        if r.my_operads.is_empty() || r.in_op.is_empty() || r.arity_op.is_empty() || r.hook_op.is_empty() {
            return true;
        }
        let mut hooked_into: BTreeMap<&OperadId, i64> = BTreeMap::new();
        for parent in r.hook_op.values() {
            *hooked_into.entry(parent).or_default() += 1;
        }
        r.my_operads
            .iter()
            .filter(|op| r.in_op.contains_key(*op) && r.arity_op.contains_key(*op))
            .filter_map(|op| hooked_into.get(op).map(|n| (op, *n)))
            .all(|(op, n)| r.in_op[op].len() as i64 == r.arity_op[op] as i64 - n)
    }

    /// Constructive consistency checks on every root and its component.
    pub fn check_structure(&self) -> Vec<StructureViolation> {
        let r = &self.rel;
        let mut out = Vec::new();
        let mut push = |check: &'static str, op: &OperadId, detail: String| {
            out.push(StructureViolation {
                check,
                operad: op.clone(),
                detail,
            })
        };

        // Following direct hooks upward must end at the recorded root.
        for op in r.hook_op.keys() {
            let mut cur = op;
            let mut steps = 0;
            while let Some(parent) = r.hook_op.get(cur) {
                cur = parent;
                steps += 1;
                if steps > r.my_operads.len() {
                    push("hook-acyclic", op, "hook chain loops".into());
                    break;
                }
            }
            if r.g_hook_op.get(op) != Some(cur) {
                push(
                    "hook-root",
                    op,
                    format!("global hook {:?}, hook chain ends at `{cur}`", r.g_hook_op.get(op)),
                );
            }
        }
        if r.hook_op.len() != r.g_hook_op.len() {
            let some = r.my_operads.iter().next().cloned().unwrap_or_else(OperadId::min_value);
            push("hook-root", &some, "hook and global hook domains differ".into());
        }

        for root in self.roots() {
            let members = self.component(root);
            let foliage = self.foliage_positions(root);
            let n = foliage.len();

            let arities: usize = members.iter().filter_map(|m| r.arity_op.get(m)).sum();
            let hooks = members.iter().filter(|m| r.hook_op.contains_key(*m)).count();
            let contiguous: BTreeSet<Position> =
                (1..=n).map(|k| Position::new(k).expect("k >= 1")).collect();
            if foliage != contiguous || n + hooks != arities {
                push(
                    "contiguity",
                    root,
                    format!("foliage of size {n}, arity sum {arities}, {hooks} hooks"),
                );
            }

            let mut union = BTreeSet::new();
            let mut total = 0;
            for m in &members {
                let ins = r.in_op.get(m).cloned().unwrap_or_default();
                total += ins.len();
                union.extend(ins);
            }
            if union != foliage || total != union.len() {
                push(
                    "disjoint-union",
                    root,
                    format!("inputs cover {} positions ({} with repeats) of {n}", union.len(), total),
                );
            }

            for p in &foliage {
                let hats: Vec<&OperadId> = r
                    .g_hat_op
                    .iter()
                    .filter(|((q, _), rt)| q == p && *rt == root)
                    .map(|((_, hat), _)| hat)
                    .collect();
                let ok = hats.len() == 1
                    && r.in_op.get(hats[0]).is_some_and(|ins| ins.contains(p))
                    && members.contains(hats[0]);
                if !ok {
                    push("hat-totality", root, format!("position {p} has hats {hats:?}"));
                }
            }
            let stray = r
                .g_hat_op
                .iter()
                .any(|((q, _), rt)| rt == root && !foliage.contains(q));
            if stray {
                push("hat-totality", root, "hat entry outside the foliage".into());
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_config;
    use crate::ids::{id, pos};

    fn nested_graft() -> FlatState {
        FlatState::new(default_config())
            .new_operad(&id("f"), 4, 1)
            .and_then(|s| s.new_operad(&id("g"), 3, 1))
            .and_then(|s| s.new_operad(&id("h"), 3, 1))
            .and_then(|s| s.compose_seq(&id("f"), pos(2), &id("g")))
            .and_then(|s| s.compose_seq(&id("f"), pos(4), &id("h")))
            .unwrap()
    }

    #[test]
    fn empty_state_is_consistent() {
        let s = FlatState::new(default_config());
        assert!(s.check_invariants().is_empty());
        assert!(s.check_structure().is_empty());
    }

    #[test]
    fn nested_graft_is_consistent() {
        assert!(nested_graft().check_invariants().is_empty());
    }

    #[test]
    fn widened_inputs_break_sp3_only() {
        // arity 3 minus one hooked operad is 2, but g now claims 3 inputs.
        let mut rel = nested_graft().into_relations();
        rel.in_op.insert(id("g"), [pos(2), pos(3), pos(4)].into());
        let s = FlatState::from_relations(default_config(), rel);
        assert_eq!(s.check_invariants(), vec![Invariant::Sp3]);
        assert!(s
            .check_structure()
            .iter()
            .any(|v| v.check == "disjoint-union"));
    }

    #[test]
    fn dropped_input_breaks_sp1_sp2_sp3() {
        let mut rel = nested_graft().into_relations();
        rel.in_op.insert(id("f"), [pos(1), pos(7)].into());
        rel.g_hat_op.remove(&(pos(8), id("f")));
        let s = FlatState::from_relations(default_config(), rel);
        assert_eq!(
            s.check_invariants(),
            vec![Invariant::Sp1, Invariant::Sp2, Invariant::Sp3]
        );
    }

    #[test]
    fn typing_invariants() {
        let mut rel = nested_graft().into_relations();
        rel.out_op.insert(id("g"), [pos(1)].into());
        rel.arity_op.insert(id("zz"), 2);
        rel.foliage.insert((pos(49), id("f")));
        let s = FlatState::from_relations(default_config(), rel);
        let v = s.check_invariants();
        assert!(v.contains(&Invariant::Invr34));
        assert!(v.contains(&Invariant::Inv30));
        assert!(v.contains(&Invariant::Inv40));
    }

    #[test]
    fn invr50_bounds_inputs_by_arity() {
        let mut rel = FlatState::new(default_config())
            .new_operad(&id("f"), 2, 1)
            .unwrap()
            .into_relations();
        rel.in_op.insert(id("f"), [pos(1), pos(2), pos(3)].into());
        let s = FlatState::from_relations(default_config(), rel);
        assert_eq!(s.check_invariants(), vec![Invariant::Invr50]);
    }

    #[test]
    fn structure_flags_wrong_root() {
        let mut rel = nested_graft().into_relations();
        rel.g_hook_op.insert(id("h"), id("g"));
        let s = FlatState::from_relations(default_config(), rel);
        assert!(s.check_structure().iter().any(|v| v.check == "hook-root"));
    }
}
