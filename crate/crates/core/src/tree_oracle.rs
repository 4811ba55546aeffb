//! Rooted ordered trees as an independent model of grafting.
//!
//! Leaves carry no numbers. Their labels are recomputed by a left-to-right
//! traversal every time they are needed, so there is no relabelling step
//! that could go wrong. This is the ground truth the flat machine is
//! compared against.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::flat_machine::{Event, FlatState};
use crate::ids::{OperadId, Position};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("position {position} outside 1..={leaves}")]
    PositionOutOfRange { position: usize, leaves: usize },
    #[error("operad `{0}` occurs in both trees")]
    DuplicateLabel(OperadId),
    #[error("no tree rooted at `{0}`")]
    UnknownRoot(OperadId),
    #[error("a tree rooted at `{0}` already exists")]
    RootExists(OperadId),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    Leaf,
    Op(TreeOperad),
}

/// An operad label with one child per input slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TreeOperad {
    label: OperadId,
    children: Vec<Node>,
}

impl TreeOperad {
    /// `label(•, …, •)` with `arity` leaves.
    pub fn elementary(label: OperadId, arity: usize) -> Self {
        TreeOperad {
            label,
            children: vec![Node::Leaf; arity],
        }
    }

    pub fn new(label: OperadId, children: Vec<Node>) -> Self {
        TreeOperad { label, children }
    }

    pub fn label(&self) -> &OperadId {
        &self.label
    }

    pub fn children(&self) -> &[Node] {
        &self.children
    }

    pub fn leaf_count(&self) -> usize {
        self.children
            .iter()
            .map(|c| match c {
                Node::Leaf => 1,
                Node::Op(t) => t.leaf_count(),
            })
            .sum()
    }

    /// Labels in pre-order.
    pub fn labels(&self) -> Vec<&OperadId> {
        let mut out = vec![&self.label];
        for c in &self.children {
            if let Node::Op(t) = c {
                out.extend(t.labels());
            }
        }
        out
    }

    /// Replace the `i`-th leaf (global left-to-right order) by `other`.
    pub fn graft(&self, i: Position, other: &TreeOperad) -> Result<TreeOperad, TreeError> {
        let leaves = self.leaf_count();
        if i.get() > leaves {
            return Err(TreeError::PositionOutOfRange {
                position: i.get(),
                leaves,
            });
        }
        let mine: BTreeSet<&OperadId> = self.labels().into_iter().collect();
        if let Some(dup) = other.labels().into_iter().find(|l| mine.contains(l)) {
            return Err(TreeError::DuplicateLabel(dup.clone()));
        }
        let mut out = self.clone();
        let mut skip = i.get() - 1;
        let replaced = out.replace_leaf(&mut skip, other);
        debug_assert!(replaced);
        Ok(out)
    }

    fn replace_leaf(&mut self, skip: &mut usize, other: &TreeOperad) -> bool {
        for child in &mut self.children {
            match child {
                Node::Leaf if *skip == 0 => {
                    *child = Node::Op(other.clone());
                    return true;
                }
                Node::Leaf => *skip -= 1,
                Node::Op(t) => {
                    if t.replace_leaf(skip, other) {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Relational view of this tree, numbering leaves by traversal.
    pub fn flat_view(&self) -> TreeView {
        let mut view = TreeView {
            root: self.label.clone(),
            foliage: BTreeSet::new(),
            in_map: BTreeMap::new(),
            hat_map: BTreeMap::new(),
            hook_map: BTreeMap::new(),
            root_map: BTreeMap::new(),
            ancestors: BTreeSet::new(),
        };
        let mut next = 1;
        let mut path = Vec::new();
        self.walk(&mut next, &mut path, &mut view);
        view.foliage = (1..next).map(|k| Position::new(k).expect("k >= 1")).collect();
        view
    }

    fn walk<'a>(&'a self, next: &mut usize, path: &mut Vec<&'a OperadId>, view: &mut TreeView) {
        let me = &self.label;
        view.in_map.entry(me.clone()).or_default();
        if let Some(parent) = path.last() {
            view.hook_map.insert(me.clone(), (*parent).clone());
            view.root_map.insert(me.clone(), path[0].clone());
            for anc in path.iter() {
                view.ancestors.insert((me.clone(), (*anc).clone()));
            }
        }
        path.push(me);
        for child in &self.children {
            match child {
                Node::Leaf => {
                    let p = Position::new(*next).expect("next >= 1");
                    *next += 1;
                    view.in_map.get_mut(me).expect("inserted above").insert(p);
                    view.hat_map.insert(p, me.clone());
                }
                Node::Op(t) => t.walk(next, path, view),
            }
        }
        path.pop();
    }
}

/// `graft(t1, i, t2)`
pub fn graft(t1: &TreeOperad, i: Position, t2: &TreeOperad) -> Result<TreeOperad, TreeError> {
    t1.graft(i, t2)
}

/// `f(1, g(2, 3), 4, 5)`, leaf numbers from the traversal.
impl fmt::Display for TreeOperad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(t: &TreeOperad, next: &mut usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            write!(f, "{}(", t.label)?;
            for (k, c) in t.children.iter().enumerate() {
                if k > 0 {
                    f.write_str(", ")?;
                }
                match c {
                    Node::Leaf => {
                        write!(f, "{next}")?;
                        *next += 1;
                    }
                    Node::Op(sub) => go(sub, next, f)?,
                }
            }
            f.write_str(")")
        }
        go(self, &mut 1, f)
    }
}

/// Relations derived from one tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeView {
    pub root: OperadId,
    pub foliage: BTreeSet<Position>,
    /// internal label ↦ numbers of its leaf children
    pub in_map: BTreeMap<OperadId, BTreeSet<Position>>,
    /// leaf number ↦ label of its parent node
    pub hat_map: BTreeMap<Position, OperadId>,
    /// non-root label ↦ parent label
    pub hook_map: BTreeMap<OperadId, OperadId>,
    /// non-root label ↦ root label
    pub root_map: BTreeMap<OperadId, OperadId>,
    /// (label, strict ancestor) pairs
    pub ancestors: BTreeSet<(OperadId, OperadId)>,
}

pub fn derive_flat_view(t: &TreeOperad) -> TreeView {
    t.flat_view()
}

/// The views that both representations can produce, for a whole set of
/// roots at once.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ForestView {
    pub foliage: BTreeMap<OperadId, BTreeSet<Position>>,
    pub in_map: BTreeMap<OperadId, BTreeSet<Position>>,
    /// (position, hat, root)
    pub hats: BTreeSet<(Position, OperadId, OperadId)>,
    pub hook_map: BTreeMap<OperadId, OperadId>,
    pub root_map: BTreeMap<OperadId, OperadId>,
}

impl ForestView {
    /// The same views read off the flat machine's relations.
    pub fn of_flat(state: &FlatState) -> ForestView {
        let r = state.relations();
        ForestView {
            foliage: state
                .roots()
                .map(|root| {
                    let fol = state.foliage_of(root).expect("roots are unhooked members");
                    (root.clone(), fol)
                })
                .collect(),
            in_map: r.in_op.clone(),
            hats: r
                .g_hat_op
                .iter()
                .map(|((p, hat), root)| (*p, hat.clone(), root.clone()))
                .collect(),
            hook_map: r.hook_op.clone(),
            root_map: r.g_hook_op.clone(),
        }
    }

    /// Names of the views that differ, empty when equal.
    pub fn mismatches(&self, other: &ForestView) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.foliage != other.foliage {
            out.push("foliage");
        }
        if self.in_map != other.in_map {
            out.push("in");
        }
        if self.hats != other.hats {
            out.push("hat");
        }
        if self.hook_map != other.hook_map {
            out.push("hook");
        }
        if self.root_map != other.root_map {
            out.push("ghook");
        }
        out
    }
}

/// A set of trees keyed by root label, driven by the same events as the flat
/// machine (without its bounds).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Forest {
    trees: BTreeMap<OperadId, TreeOperad>,
}

impl Forest {
    pub fn new() -> Self {
        Forest::default()
    }

    pub fn trees(&self) -> &BTreeMap<OperadId, TreeOperad> {
        &self.trees
    }

    pub fn tree(&self, root: &OperadId) -> Option<&TreeOperad> {
        self.trees.get(root)
    }

    pub fn apply(&mut self, event: &Event) -> Result<(), TreeError> {
        match event {
            Event::New { id, inputs, .. } => {
                if self.trees.values().any(|t| t.labels().contains(&id)) {
                    return Err(TreeError::RootExists(id.clone()));
                }
                self.trees
                    .insert(id.clone(), TreeOperad::elementary(id.clone(), *inputs));
            }
            Event::Compose { op1, position, op2 } => {
                let t1 = self
                    .trees
                    .get(op1)
                    .ok_or_else(|| TreeError::UnknownRoot(op1.clone()))?;
                let t2 = self
                    .trees
                    .get(op2)
                    .ok_or_else(|| TreeError::UnknownRoot(op2.clone()))?;
                let grafted = t1.graft(*position, t2)?;
                self.trees.remove(op2);
                self.trees.insert(op1.clone(), grafted);
            }
        }
        Ok(())
    }

    pub fn view(&self) -> ForestView {
        let mut out = ForestView::default();
        for (root, t) in &self.trees {
            let v = t.flat_view();
            for p in &v.foliage {
                out.hats.insert((*p, v.hat_map[p].clone(), root.clone()));
            }
            out.foliage.insert(root.clone(), v.foliage);
            out.in_map.extend(v.in_map);
            out.hook_map.extend(v.hook_map);
            out.root_map.extend(v.root_map);
        }
        out
    }

    /// All (label, strict ancestor) pairs over every tree.
    pub fn ancestors(&self) -> BTreeSet<(OperadId, OperadId)> {
        self.trees
            .values()
            .flat_map(|t| t.flat_view().ancestors)
            .collect()
    }
}

/// Compare a flat state against a forest built from the same events.
/// Returns the differing view names; also fails `ghook-closure` when the
/// flat global hook is not contained in the tree ancestor relation.
pub fn compare(state: &FlatState, forest: &Forest) -> Vec<&'static str> {
    let mut out = ForestView::of_flat(state).mismatches(&forest.view());
    let anc = forest.ancestors();
    let contained = state
        .relations()
        .g_hook_op
        .iter()
        .all(|(a, b)| anc.contains(&(a.clone(), b.clone())));
    if !contained {
        out.push("ghook-closure");
    }
    out
}
