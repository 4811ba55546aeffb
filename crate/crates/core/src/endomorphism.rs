//! The endomorphism operad over a small finite set.
//!
//! A k-ary element is a total function `X^k -> X` stored as a dense table.
//! Argument tuples are encoded mixed-radix with `x1` most significant, so
//! the table of a binary function over `{0,1}` reads `f(0,0) f(0,1) f(1,0)
//! f(1,1)`, which is also the order of the textual form `2:0110`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::expr_parser::{ComposeExpr, Program};
use crate::ids::{OperadId, Position};
use crate::tree_oracle::{Node, TreeOperad};

/// Digits used for table entries in the textual form.
const DIGITS: &[u8; 36] = b"0123456789abcdefghijklmnopqrstuvwxyz";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EndoError {
    #[error("carrier size must be in 1..=36, got {0}")]
    CarrierSize(usize),
    #[error("carrier mismatch: {0} vs {1}")]
    CarrierMismatch(usize, usize),
    #[error("position {position} outside 1..={arity}")]
    PositionOutOfRange { position: usize, arity: usize },
    #[error("positions must satisfy i < k, got i = {i}, k = {k}")]
    PositionOrder { i: usize, k: usize },
    #[error("expected a constant, got arity {0}")]
    NotConstant(usize),
    #[error("value {value} outside the carrier 0..{size}")]
    ValueOutOfRange { value: usize, size: usize },
    #[error("bad table `{text}`: {msg}")]
    BadTable { text: String, msg: String },
    #[error("atom `{0}` is not bound")]
    Unbound(OperadId),
    #[error("`{id}` is declared with arity {declared} but bound to arity {bound}")]
    ArityMismatch {
        id: OperadId,
        declared: usize,
        bound: usize,
    },
}

/// The set `X = {0, …, size-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Carrier(usize);

impl Carrier {
    pub fn new(size: usize) -> Result<Self, EndoError> {
        if (1..=DIGITS.len()).contains(&size) {
            Ok(Carrier(size))
        } else {
            Err(EndoError::CarrierSize(size))
        }
    }

    pub fn size(self) -> usize {
        self.0
    }

    /// Number of argument tuples of length `arity`.
    pub fn rows(self, arity: usize) -> usize {
        self.0.pow(arity as u32)
    }

    /// All functions of the given arity, in table order.
    pub fn functions(self, arity: usize) -> impl Iterator<Item = FiniteFn> {
        let rows = self.rows(arity);
        let count = self.0.pow(rows as u32);
        (0..count).map(move |mut code| {
            let mut table = vec![0u8; rows];
            for slot in table.iter_mut().rev() {
                *slot = (code % self.0) as u8;
                code /= self.0;
            }
            FiniteFn {
                carrier: self,
                arity,
                table,
            }
        })
    }

    /// Decode row `index` into an argument tuple.
    fn decode(self, mut index: usize, out: &mut [u8]) {
        for x in out.iter_mut().rev() {
            *x = (index % self.0) as u8;
            index /= self.0;
        }
    }

    fn encode(self, args: &[u8]) -> usize {
        args.iter().fold(0, |acc, &x| acc * self.0 + x as usize)
    }
}

/// An element of `End_X(arity)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FiniteFn {
    carrier: Carrier,
    arity: usize,
    table: Vec<u8>,
}

impl FiniteFn {
    /// Tabulate `f` on every argument tuple.
    pub fn from_fn(carrier: Carrier, arity: usize, f: impl Fn(&[u8]) -> u8) -> Result<Self, EndoError> {
        let mut args = vec![0u8; arity];
        let mut table = Vec::with_capacity(carrier.rows(arity));
        for row in 0..carrier.rows(arity) {
            carrier.decode(row, &mut args);
            let v = f(&args);
            if v as usize >= carrier.size() {
                return Err(EndoError::ValueOutOfRange {
                    value: v as usize,
                    size: carrier.size(),
                });
            }
            table.push(v);
        }
        Ok(FiniteFn {
            carrier,
            arity,
            table,
        })
    }

    pub fn from_table(carrier: Carrier, arity: usize, table: Vec<u8>) -> Result<Self, EndoError> {
        if table.len() != carrier.rows(arity) {
            return Err(EndoError::BadTable {
                text: format!("{table:?}"),
                msg: format!("expected {} entries", carrier.rows(arity)),
            });
        }
        if let Some(&v) = table.iter().find(|&&v| v as usize >= carrier.size()) {
            return Err(EndoError::ValueOutOfRange {
                value: v as usize,
                size: carrier.size(),
            });
        }
        Ok(FiniteFn {
            carrier,
            arity,
            table,
        })
    }

    /// `id_X`
    pub fn identity(carrier: Carrier) -> Self {
        FiniteFn {
            carrier,
            arity: 1,
            table: (0..carrier.size() as u8).collect(),
        }
    }

    /// An arity-0 element.
    pub fn constant(carrier: Carrier, value: u8) -> Result<Self, EndoError> {
        FiniteFn::from_table(carrier, 0, vec![value])
    }

    /// `(x1, …, xn) -> xk`
    pub fn projection(carrier: Carrier, arity: usize, k: Position) -> Result<Self, EndoError> {
        if k.get() > arity {
            return Err(EndoError::PositionOutOfRange {
                position: k.get(),
                arity,
            });
        }
        FiniteFn::from_fn(carrier, arity, |xs| xs[k.get() - 1])
    }

    /// Parse `arity:table`, e.g. `2:0110`.
    pub fn parse(text: &str, carrier: Carrier) -> Result<Self, EndoError> {
        let bad = |msg: &str| EndoError::BadTable {
            text: text.to_string(),
            msg: msg.to_string(),
        };
        let (a, t) = text.split_once(':').ok_or_else(|| bad("missing `:`"))?;
        let arity: usize = a.trim().parse().map_err(|_| bad("arity is not a number"))?;
        if carrier.size().checked_pow(arity as u32).is_none() {
            return Err(bad("arity too large"));
        }
        let table = t
            .trim()
            .bytes()
            .map(|b| {
                DIGITS
                    .iter()
                    .position(|&d| d == b.to_ascii_lowercase())
                    .map(|v| v as u8)
                    .ok_or_else(|| bad("entries must be digits 0-9 or letters a-z"))
            })
            .collect::<Result<Vec<u8>, _>>()?;
        FiniteFn::from_table(carrier, arity, table).map_err(|e| match e {
            EndoError::BadTable { msg, .. } => bad(&msg),
            other => other,
        })
    }

    pub fn carrier(&self) -> Carrier {
        self.carrier
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn table(&self) -> &[u8] {
        &self.table
    }

    pub fn eval(&self, args: &[u8]) -> u8 {
        assert_eq!(args.len(), self.arity, "argument count");
        self.table[self.carrier.encode(args)]
    }
}

/// `arity:table`
impl fmt::Display for FiniteFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.arity)?;
        for &v in &self.table {
            write!(f, "{}", DIGITS[v as usize] as char)?;
        }
        Ok(())
    }
}

impl FromStr for FiniteFn {
    type Err = EndoError;

    /// Infers the carrier as the smallest one holding every entry; prefer
    /// [`FiniteFn::parse`] when the carrier is known.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (_, t) = s.split_once(':').unwrap_or(("", s));
        let max = t
            .trim()
            .bytes()
            .filter_map(|b| DIGITS.iter().position(|&d| d == b.to_ascii_lowercase()))
            .max()
            .unwrap_or(0);
        FiniteFn::parse(s, Carrier::new(max + 1)?)
    }
}

fn check_position(i: Position, arity: usize) -> Result<(), EndoError> {
    if i.get() > arity {
        Err(EndoError::PositionOutOfRange {
            position: i.get(),
            arity,
        })
    } else {
        Ok(())
    }
}

/// `f ∘_i g`, pointwise. Works for constants `g` (arity 0) too.
pub fn circ(f: &FiniteFn, i: Position, g: &FiniteFn) -> Result<FiniteFn, EndoError> {
    if f.carrier != g.carrier {
        return Err(EndoError::CarrierMismatch(f.carrier.size(), g.carrier.size()));
    }
    check_position(i, f.arity)?;
    let (n, m) = (f.arity, g.arity);
    let k = i.get() - 1;
    let arity = n + m - 1;
    let x = f.carrier;
    let mut args = vec![0u8; arity];
    let mut inner = vec![0u8; n];
    let mut table = Vec::with_capacity(x.rows(arity));
    for row in 0..x.rows(arity) {
        x.decode(row, &mut args);
        inner[..k].copy_from_slice(&args[..k]);
        inner[k] = g.eval(&args[k..k + m]);
        inner[k + 1..].copy_from_slice(&args[k + m..]);
        table.push(f.eval(&inner));
    }
    Ok(FiniteFn {
        carrier: x,
        arity,
        table,
    })
}

/// `f ∘_i c` for a constant `c`: slot `i` of `f` fixed to `c`'s value.
pub fn circ_const(f: &FiniteFn, i: Position, c: &FiniteFn) -> Result<FiniteFn, EndoError> {
    if c.arity != 0 {
        return Err(EndoError::NotConstant(c.arity));
    }
    circ(f, i, c)
}

/// `(f ∘_i g) ∘_{i-1+j} h == f ∘_i (g ∘_j h)`
pub fn check_sequential_axiom(
    f: &FiniteFn,
    g: &FiniteFn,
    h: &FiniteFn,
    i: Position,
    j: Position,
) -> Result<bool, EndoError> {
    check_position(i, f.arity)?;
    check_position(j, g.arity)?;
    let left = circ(&circ(f, i, g)?, Position::new(i.get() - 1 + j.get()).expect("i, j >= 1"), h)?;
    let right = circ(f, i, &circ(g, j, h)?)?;
    Ok(left == right)
}

/// `(f ∘_i g) ∘_{k-1+m} h == (f ∘_k h) ∘_i g` for `i < k`, `m = arity(g)`.
pub fn check_parallel_axiom(
    f: &FiniteFn,
    g: &FiniteFn,
    h: &FiniteFn,
    i: Position,
    k: Position,
) -> Result<bool, EndoError> {
    check_position(k, f.arity)?;
    if i >= k {
        return Err(EndoError::PositionOrder { i: i.get(), k: k.get() });
    }
    let shifted = k.get() - 1 + g.arity;
    let left = circ(&circ(f, i, g)?, Position::new(shifted).expect("k > i >= 1"), h)?;
    let right = circ(&circ(f, k, h)?, i, g)?;
    Ok(left == right)
}

/// One failing instance of an axiom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub law: &'static str,
    pub fns: Vec<FiniteFn>,
    pub positions: Vec<Position>,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.law)?;
        for (name, g) in ["f", "g", "h"].iter().zip(&self.fns) {
            write!(f, " {name}={g}")?;
        }
        for p in &self.positions {
            write!(f, " {p}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SweepReport {
    pub cases: u64,
    pub counterexamples: Vec<Counterexample>,
}

impl SweepReport {
    pub fn ok(&self) -> bool {
        self.counterexamples.is_empty()
    }

    fn record(&mut self, holds: bool, c: impl FnOnce() -> Counterexample) {
        self.cases += 1;
        if !holds && self.counterexamples.len() < MAX_COUNTEREXAMPLES {
            self.counterexamples.push(c());
        }
    }
}

const MAX_COUNTEREXAMPLES: usize = 16;

fn all_functions(x: Carrier, arities: std::ops::RangeInclusive<usize>) -> Vec<FiniteFn> {
    arities.flat_map(|a| x.functions(a)).collect()
}

fn positions(n: usize) -> impl Iterator<Item = Position> {
    (1..=n).map(|p| Position::new(p).expect("p >= 1"))
}

/// Number of functions of arity `0..=max_arity`, or `None` on overflow.
pub fn function_count(x: Carrier, max_arity: usize) -> Option<u64> {
    (0..=max_arity).try_fold(0u64, |acc, a| {
        let rows = (x.size() as u64).checked_pow(a as u32)?;
        acc.checked_add((x.size() as u64).checked_pow(u32::try_from(rows).ok()?)?)
    })
}

/// Sequential axiom over every triple with arities `<= max_arity` and every
/// valid `(i, j)`. Constants are allowed for `h`, which has no slot to fill.
pub fn sweep_sequential(x: Carrier, max_arity: usize) -> SweepReport {
    let with_slots = all_functions(x, 1..=max_arity);
    let any = all_functions(x, 0..=max_arity);
    let mut report = SweepReport::default();
    for f in &with_slots {
        for g in &with_slots {
            for h in &any {
                for i in positions(f.arity) {
                    for j in positions(g.arity) {
                        let ok = check_sequential_axiom(f, g, h, i, j).expect("valid positions");
                        report.record(ok, || Counterexample {
                            law: "sequential",
                            fns: vec![f.clone(), g.clone(), h.clone()],
                            positions: vec![i, j],
                        });
                    }
                }
            }
        }
    }
    report
}

/// Parallel axiom over every triple with arities `<= max_arity` and every
/// `i < k <= arity(f)`. `g` and `h` may be constants.
pub fn sweep_parallel(x: Carrier, max_arity: usize) -> SweepReport {
    let outer = all_functions(x, 2..=max_arity.max(1));
    let any = all_functions(x, 0..=max_arity);
    let mut report = SweepReport::default();
    for f in outer.iter().filter(|f| f.arity >= 2) {
        for g in &any {
            for h in &any {
                for k in positions(f.arity) {
                    for i in positions(k.get() - 1) {
                        let ok = check_parallel_axiom(f, g, h, i, k).expect("valid positions");
                        report.record(ok, || Counterexample {
                            law: "parallel",
                            fns: vec![f.clone(), g.clone(), h.clone()],
                            positions: vec![i, k],
                        });
                    }
                }
            }
        }
    }
    report
}

/// `f ∘_i id = f` for every slot and `id ∘_1 f = f`, for every `f` of arity
/// `<= max_arity`.
pub fn sweep_identity(x: Carrier, max_arity: usize) -> SweepReport {
    let id = FiniteFn::identity(x);
    let mut report = SweepReport::default();
    for f in all_functions(x, 0..=max_arity) {
        for i in positions(f.arity) {
            let ok = circ(&f, i, &id).expect("valid slot") == f;
            report.record(ok, || Counterexample {
                law: "right identity",
                fns: vec![f.clone()],
                positions: vec![i],
            });
        }
        let ok = circ(&id, Position::ONE, &f).expect("identity has one slot") == f;
        report.record(ok, || Counterexample {
            law: "left identity",
            fns: vec![f.clone()],
            positions: vec![Position::ONE],
        });
    }
    report
}

/// Total case counts of the three sweeps, without running them. `None` when
/// a count overflows.
pub fn sweep_sizes(x: Carrier, max_arity: usize) -> Option<(u64, u64, u64)> {
    let count = |a: usize| -> Option<u64> {
        let rows = (x.size() as u64).checked_pow(a as u32)?;
        (x.size() as u64).checked_pow(u32::try_from(rows).ok()?)
    };
    let mut slotted = 0u64; // sum over f of arity(f)
    let mut pairs = 0u64; // sum over f of C(arity(f), 2)
    for a in 1..=max_arity as u64 {
        let c = count(a as usize)?;
        slotted = slotted.checked_add(c.checked_mul(a)?)?;
        pairs = pairs.checked_add(c.checked_mul(a * (a - 1) / 2)?)?;
    }
    let all = function_count(x, max_arity)?;
    let seq = slotted.checked_mul(slotted)?.checked_mul(all)?;
    let par = pairs.checked_mul(all)?.checked_mul(all)?;
    let id = slotted.checked_add(all)?;
    Some((seq, par, id))
}

/// Interpret a composite as a concrete function by folding `circ` over the
/// expression.
pub fn interpret(program: &Program, binding: &BTreeMap<OperadId, FiniteFn>) -> Result<FiniteFn, EndoError> {
    let arities = program.arities();
    fn go(
        e: &ComposeExpr,
        arities: &BTreeMap<OperadId, usize>,
        binding: &BTreeMap<OperadId, FiniteFn>,
    ) -> Result<FiniteFn, EndoError> {
        match e {
            ComposeExpr::Atom(id) => {
                let f = binding.get(id).ok_or_else(|| EndoError::Unbound(id.clone()))?;
                if let Some(&declared) = arities.get(id) {
                    if declared != f.arity {
                        return Err(EndoError::ArityMismatch {
                            id: id.clone(),
                            declared,
                            bound: f.arity,
                        });
                    }
                }
                Ok(f.clone())
            }
            ComposeExpr::Compose(l, i, r) => circ(&go(l, arities, binding)?, *i, &go(r, arities, binding)?),
        }
    }
    go(&program.expr, &arities, binding)
}

/// Evaluate a tree directly, reading leaves left to right. This does not go
/// through `circ`, so it serves as an independent check of [`interpret`].
pub fn eval_tree(tree: &TreeOperad, binding: &BTreeMap<OperadId, FiniteFn>) -> Result<FiniteFn, EndoError> {
    fn check(t: &TreeOperad, binding: &BTreeMap<OperadId, FiniteFn>, x: &mut Option<Carrier>) -> Result<(), EndoError> {
        let f = binding.get(t.label()).ok_or_else(|| EndoError::Unbound(t.label().clone()))?;
        if f.arity != t.children().len() {
            return Err(EndoError::ArityMismatch {
                id: t.label().clone(),
                declared: t.children().len(),
                bound: f.arity,
            });
        }
        match x {
            Some(c) if *c != f.carrier => return Err(EndoError::CarrierMismatch(c.size(), f.carrier.size())),
            _ => *x = Some(f.carrier),
        }
        for c in t.children() {
            if let Node::Op(sub) = c {
                check(sub, binding, x)?;
            }
        }
        Ok(())
    }
    fn value(t: &TreeOperad, binding: &BTreeMap<OperadId, FiniteFn>, leaves: &mut std::slice::Iter<u8>) -> u8 {
        let args: Vec<u8> = t
            .children()
            .iter()
            .map(|c| match c {
                Node::Leaf => *leaves.next().expect("one value per leaf"),
                Node::Op(sub) => value(sub, binding, leaves),
            })
            .collect();
        binding[t.label()].eval(&args)
    }

    let mut x = None;
    check(tree, binding, &mut x)?;
    let x = x.expect("a tree has a root");
    let n = tree.leaf_count();
    FiniteFn::from_fn(x, n, |args| value(tree, binding, &mut args.iter()))
}
