//! Guard evaluation and actions of `composeSeq`.
//!
//! The intermediate guard variables have a unique valuation once `op1`,
//! `ii` and `op2` are fixed, so they are computed eagerly and kept in a
//! [`ComposeWitness`]. Applying the actions only reads the witness.

use std::collections::{BTreeMap, BTreeSet};

use super::{guard, FlatState, Guard, MachineError};
use crate::ids::{OperadId, Position};

/// Evaluated guard variables of one `composeSeq` firing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComposeWitness {
    pub op1: OperadId,
    pub op2: OperadId,
    pub ii: Position,
    /// The elementary operad holding `ii` before the event.
    pub hat_op_ii: OperadId,
    pub foliage1: BTreeSet<Position>,
    pub foliage2: BTreeSet<Position>,
    pub cardfol1: usize,
    pub cardfol2: usize,
    /// `{op1} ∪ dom(gHookOp ▷ {op1})`
    pub hooked_in_op1: BTreeSet<OperadId>,
    /// `{op2} ∪ dom(gHookOp ▷ {op2})`
    pub hooked_in_op2: BTreeSet<OperadId>,
    /// position ↦ hat over op1's component
    pub hat_op1: BTreeSet<(Position, OperadId)>,
    pub hat_op2: BTreeSet<(Position, OperadId)>,
    /// hats of positions below `ii`, unchanged
    pub hat_low: BTreeSet<(Position, OperadId)>,
    /// hats of op2's component under labels `p + ii - 1`
    pub upd_hat2: BTreeSet<(Position, OperadId)>,
    /// hats of positions above `ii`, shifted by `cardfol2 - 1`
    pub upd_gii_hat: BTreeSet<(Position, OperadId)>,
    /// the whole new hat table of the root, all rooted at op1
    pub upd_ghat_op12: BTreeSet<(Position, OperadId)>,
    pub lii_upd_in_op1: BTreeMap<OperadId, BTreeSet<Position>>,
    pub gii_upd_in_op1: BTreeMap<OperadId, BTreeSet<Position>>,
    pub lii_gii_upd_in_op1: BTreeMap<OperadId, BTreeSet<Position>>,
    pub upd_in_op2: BTreeMap<OperadId, BTreeSet<Position>>,
    pub new_foliage1: BTreeSet<Position>,
}

impl FlatState {
    fn shift(&self, p: Position, by: usize) -> Result<Position, MachineError> {
        let q = p.shifted(by);
        if q.get() > self.config.max_fol() {
            return Err(MachineError::OverflowFoliage {
                position: q.get(),
                max_fol: self.config.max_fol(),
            });
        }
        Ok(q)
    }

    /// `foliage ◁ dom(GHatOp ▷ members)` as a position ↦ hat relation.
    fn hats_over(
        &self,
        foliage: &BTreeSet<Position>,
        members: &BTreeSet<OperadId>,
    ) -> BTreeSet<(Position, OperadId)> {
        self.rel
            .g_hat_op
            .iter()
            .filter(|((p, _), root)| members.contains(*root) && foliage.contains(p))
            .map(|((p, hat), _)| (*p, hat.clone()))
            .collect()
    }

    /// Evaluate every guard of `composeSeq` and the intermediate variables.
    pub fn compose_witness(
        &self,
        op1: &OperadId,
        ii: Position,
        op2: &OperadId,
    ) -> Result<ComposeWitness, MachineError> {
        let rel = &self.rel;
        if op1 == op2 {
            return Err(guard(Guard::Distinct, format!("cannot compose `{op1}` with itself")));
        }
        if !self.contains(op1) || !rel.in_op.contains_key(op1) {
            return Err(guard(Guard::Rg20, format!("`{op1}` has no inputs relation")));
        }
        if !self.contains(op2) || !rel.in_op.contains_key(op2) {
            return Err(guard(Guard::Rg22, format!("`{op2}` has no inputs relation")));
        }
        if let Some(r) = rel.g_hook_op.get(op1) {
            return Err(guard(Guard::Rg26, format!("`{op1}` is already hooked in `{r}`")));
        }
        if let Some(r) = rel.g_hook_op.get(op2) {
            return Err(guard(Guard::Rg24, format!("`{op2}` is already hooked in `{r}`")));
        }

        let hooked_in_op1 = self.component(op1);
        let hooked_in_op2 = self.component(op2);
        let foliage1 = self.foliage_positions(op1);
        let foliage2 = self.foliage_positions(op2);
        let (cardfol1, cardfol2) = (foliage1.len(), foliage2.len());

        let hat_op1 = self.hats_over(&foliage1, &hooked_in_op1);
        let candidates: Vec<&OperadId> = hat_op1
            .iter()
            .filter(|(p, _)| *p == ii)
            .map(|(_, hat)| hat)
            .collect();
        if candidates.is_empty() {
            return Err(guard(
                Guard::Rg72,
                format!("position {ii} has no hat in the foliage of `{op1}`"),
            ));
        }
        // Any hat satisfying rg62..rg70 may be chosen; on a consistent state
        // there is exactly one candidate.
        let check = |hat: &OperadId| -> Result<(), MachineError> {
            if !hooked_in_op1.contains(hat) {
                return Err(guard(Guard::Rg62, format!("hat `{hat}` is outside `{op1}`")));
            }
            match rel.in_op.get(hat) {
                None => Err(guard(Guard::Rg64, format!("hat `{hat}` has no inputs relation"))),
                Some(ins) if ins.is_empty() => {
                    Err(guard(Guard::Rg70, format!("hat `{hat}` has no inputs left")))
                }
                Some(_) => Ok(()),
            }
        };
        let hat_op_ii = match candidates.iter().find(|h| check(h).is_ok()) {
            Some(h) => (*h).clone(),
            None => return Err(check(candidates[0]).unwrap_err()),
        };

        let up = cardfol2 - 1;
        let down = ii.get() - 1;

        let hat_low: BTreeSet<_> = hat_op1
            .iter()
            .filter(|(p, o)| *p < ii && hooked_in_op1.contains(o))
            .cloned()
            .collect();
        let mut upd_gii_hat = BTreeSet::new();
        for (p, o) in hat_op1.iter().filter(|(p, _)| *p > ii) {
            upd_gii_hat.insert((self.shift(*p, up)?, o.clone()));
        }
        let hat_op2 = self.hats_over(&foliage2, &hooked_in_op2);
        let mut upd_hat2 = BTreeSet::new();
        for (p, o) in hat_op2.iter().filter(|(_, o)| hooked_in_op2.contains(o)) {
            upd_hat2.insert((self.shift(*p, down)?, o.clone()));
        }
        let upd_ghat_op12: BTreeSet<_> = hat_low
            .iter()
            .chain(&upd_gii_hat)
            .chain(&upd_hat2)
            .cloned()
            .collect();

        let mut lii_upd_in_op1 = BTreeMap::new();
        let mut gii_upd_in_op1 = BTreeMap::new();
        for oo in &hooked_in_op1 {
            let Some(ins) = rel.in_op.get(oo) else { continue };
            let low: BTreeSet<_> = ins.iter().copied().filter(|k| *k < ii).collect();
            let mut high = BTreeSet::new();
            for k in ins.iter().filter(|k| **k > ii) {
                high.insert(self.shift(*k, up)?);
            }
            lii_upd_in_op1.insert(oo.clone(), low);
            gii_upd_in_op1.insert(oo.clone(), high);
        }
        let lii_gii_upd_in_op1: BTreeMap<_, _> = lii_upd_in_op1
            .iter()
            .map(|(oo, low)| {
                let mut all = low.clone();
                all.extend(gii_upd_in_op1[oo].iter().copied());
                (oo.clone(), all)
            })
            .collect();
        let mut upd_in_op2 = BTreeMap::new();
        for oo in &hooked_in_op2 {
            let Some(ins) = rel.in_op.get(oo) else { continue };
            let mut moved = BTreeSet::new();
            for k in ins {
                moved.insert(self.shift(*k, down)?);
            }
            upd_in_op2.insert(oo.clone(), moved);
        }

        let mut new_foliage1: BTreeSet<Position> =
            foliage1.iter().copied().filter(|p| *p < ii).collect();
        for p in foliage1.iter().filter(|p| **p > ii) {
            new_foliage1.insert(self.shift(*p, up)?);
        }
        for p in &foliage2 {
            new_foliage1.insert(self.shift(*p, down)?);
        }

        Ok(ComposeWitness {
            op1: op1.clone(),
            op2: op2.clone(),
            ii,
            hat_op_ii,
            foliage1,
            foliage2,
            cardfol1,
            cardfol2,
            hooked_in_op1,
            hooked_in_op2,
            hat_op1,
            hat_op2,
            hat_low,
            upd_hat2,
            upd_gii_hat,
            upd_ghat_op12,
            lii_upd_in_op1,
            gii_upd_in_op1,
            lii_gii_upd_in_op1,
            upd_in_op2,
            new_foliage1,
        })
    }

    /// The simultaneous actions a1, a2, ra1–ra4.
    pub(super) fn apply_compose(&self, w: &ComposeWitness) -> FlatState {
        let mut rel = self.rel.clone();
        let (op1, op2) = (&w.op1, &w.op2);

        // a1
        rel.out_op.remove(op2);
        // a2
        rel.foliage.retain(|(_, o)| o != op1 && o != op2);
        rel.foliage
            .extend(w.new_foliage1.iter().map(|p| (*p, op1.clone())));
        // ra1
        rel.hook_op.insert(op2.clone(), w.hat_op_ii.clone());
        // ra2: every operad of op2's component now belongs to root op1.
        rel.g_hook_op.insert(op2.clone(), w.hat_op_ii.clone());
        for oo in &w.hooked_in_op2 {
            rel.g_hook_op.insert(oo.clone(), op1.clone());
        }
        // ra3
        rel.g_hat_op.retain(|_, root| root != op1 && root != op2);
        rel.g_hat_op.extend(
            w.upd_ghat_op12
                .iter()
                .map(|(p, hat)| ((*p, hat.clone()), op1.clone())),
        );
        // ra4
        rel.in_op.remove(op1);
        for (oo, ins) in w.lii_gii_upd_in_op1.iter().chain(&w.upd_in_op2) {
            rel.in_op.insert(oo.clone(), ins.clone());
        }

        FlatState {
            config: self.config,
            rel,
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::config::{default_config, Config};
    use crate::flat_machine::{FlatState, MachineError};
    use crate::ids::{id, pos, Position};
    use std::collections::BTreeSet;

    fn set(ps: &[usize]) -> BTreeSet<Position> {
        ps.iter().map(|&p| pos(p)).collect()
    }

    #[test]
    fn witness_for_nested_graft_second_step() {
        let (f, g, h) = (id("f"), id("g"), id("h"));
        let s = FlatState::new(default_config())
            .new_operad(&f, 4, 1)
            .and_then(|s| s.new_operad(&g, 3, 1))
            .and_then(|s| s.new_operad(&h, 3, 1))
            .and_then(|s| s.compose_seq(&f, pos(2), &g))
            .unwrap();
        let w = s.compose_witness(&f, pos(4), &h).unwrap();
        assert_eq!(w.hat_op_ii, g);
        assert_eq!(w.cardfol1, 6);
        assert_eq!(w.cardfol2, 3);
        assert_eq!(w.foliage1, set(&[1, 2, 3, 4, 5, 6]));
        assert_eq!(w.hooked_in_op1, [f.clone(), g.clone()].into());
        assert_eq!(w.hooked_in_op2, [h.clone()].into());
        assert_eq!(
            w.hat_low,
            [(pos(1), f.clone()), (pos(2), g.clone()), (pos(3), g.clone())].into()
        );
        assert_eq!(
            w.upd_gii_hat,
            [(pos(7), f.clone()), (pos(8), f.clone())].into()
        );
        assert_eq!(
            w.upd_hat2,
            [(pos(4), h.clone()), (pos(5), h.clone()), (pos(6), h.clone())].into()
        );
        assert_eq!(w.upd_ghat_op12.len(), 8);
        assert_eq!(w.lii_gii_upd_in_op1[&f], set(&[1, 7, 8]));
        assert_eq!(w.lii_gii_upd_in_op1[&g], set(&[2, 3]));
        assert_eq!(w.upd_in_op2[&h], set(&[4, 5, 6]));
        assert_eq!(w.new_foliage1, (1..=8).map(pos).collect());
        // The hat of ii is the operad whose inputs contained ii.
        assert!(s.in_op(&w.hat_op_ii).unwrap().contains(&w.ii));
    }

    #[test]
    fn overflow_is_reported_not_truncated() {
        // A hand-built state whose root claims a position near the bound.
        let c = Config::new(2, 1, 2, 4).unwrap();
        let (f, g) = (id("f"), id("g"));
        let s = FlatState::new(c)
            .new_operad(&f, 2, 1)
            .and_then(|s| s.new_operad(&g, 2, 1))
            .unwrap();
        let mut rel = s.clone().into_relations();
        rel.foliage.insert((pos(4), f.clone()));
        rel.in_op.get_mut(&f).unwrap().insert(pos(4));
        rel.g_hat_op.insert((pos(4), f.clone()), f.clone());
        let bad = FlatState::from_relations(c, rel);
        let err = bad.compose_seq(&f, pos(1), &g).unwrap_err();
        assert_eq!(
            err,
            MachineError::OverflowFoliage {
                position: 5,
                max_fol: 4
            }
        );
    }
}
